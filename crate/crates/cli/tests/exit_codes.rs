use std::path::PathBuf;
use std::process::Command;

fn acs(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_acs")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn e2e(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests/fixtures/e2e", name].iter().collect();
    p.to_str().unwrap().to_string()
}

#[test]
fn help_is_success() {
    assert_eq!(acs(&["--help"]).0, 0);
    assert_eq!(acs(&["judge", "serve", "--help"]).0, 0);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(acs(&["bogus"]).0, 1);
    assert_eq!(acs(&["--config", "/nonexistent/acs.toml", "run"]).0, 1);
    assert_eq!(acs(&["stats", "perm-paired", "--a", "x"]).0, 1);
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"schema\n").unwrap();
    let out = dir.path().join("pairs.jsonl");
    let (code, err) = acs(&["genpairs", "--bundles", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("bad.jsonl:1"), "{err}");
}

#[test]
fn unreachable_backend_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.jsonl");
    let (code, err) = acs(&[
        "ingest",
        "--in",
        &e2e("documents.jsonl"),
        "--obscene-list",
        &e2e("obscene.txt"),
        "--segmenter",
        "http://127.0.0.1:1/segment",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("stage ingest"), "{err}");
}

#[test]
fn artifact_from_another_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let sentences = dir.path().join("s.jsonl");
    let cs = dir.path().join("cs.jsonl");
    let docs = e2e("documents.jsonl");
    let obscene = e2e("obscene.txt");
    let manifest = e2e("lexicons/manifest.toml");
    let ingest = ["--seed", "1", "ingest", "--in", &docs, "--obscene-list", &obscene, "--out", sentences.to_str().unwrap()];
    assert_eq!(acs(&ingest).0, 0);
    let lid = |seed: &str| {
        acs(&["--seed", seed, "lid", "--in", sentences.to_str().unwrap(), "--manifest", &manifest, "--out", cs.to_str().unwrap()])
    };
    assert_eq!(lid("1").0, 0);
    let (code, err) = lid("2");
    assert_eq!(code, 2);
    assert!(err.contains("config"), "{err}");
}
