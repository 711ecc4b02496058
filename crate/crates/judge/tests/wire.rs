//! Drives the service through its HTTP API only.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use acs_core::judgment::{JudgmentRecord, Resolved};
use acs_core::stats::{fleiss_kappa, JudgmentMatrix};
use acs_judge::server::spawn;
use acs_judge::{JudgeService, PairTexts};
use serde_json::{json, Value};
use ureq::Agent;

fn pairs(n: usize) -> Vec<PairTexts> {
    (0..n)
        .map(|i| PairTexts {
            pair_id: format!("de-en:doc{i:04}#0"),
            observed: format!("ich sag maybe {i}"),
            manipulated: format!("ich sag vielleicht {i}"),
            observed_span: (8, 13),
            manipulated_span: (8, 18),
        })
        .collect()
}

struct Server {
    _rt: tokio::runtime::Runtime,
    base: String,
    agent: Agent,
}

impl Server {
    fn start(n: usize, dir: &Path) -> Server {
        let service = JudgeService::new(pairs(n), Some(&dir.join("plan.json")), &dir.join("log.jsonl")).unwrap();
        let rt = tokio::runtime::Runtime::new().unwrap();
        let addr: SocketAddr = rt
            .block_on(spawn(Arc::new(service), "127.0.0.1:0".parse().unwrap()))
            .unwrap();
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        Server {
            _rt: rt,
            base: format!("http://{addr}"),
            agent,
        }
    }

    fn post(&self, path: &str, token: Option<&str>, body: Value) -> (u16, Value) {
        let mut req = self.agent.post(format!("{}{path}", self.base));
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let mut resp = req.send_json(body).unwrap();
        (resp.status().as_u16(), resp.body_mut().read_json().unwrap())
    }

    fn get(&self, path: &str, token: &str) -> (u16, Value) {
        let mut resp = self
            .agent
            .get(format!("{}{path}", self.base))
            .header("Authorization", format!("Bearer {token}"))
            .call()
            .unwrap();
        (resp.status().as_u16(), resp.body_mut().read_json().unwrap())
    }

    fn export(&self, query: &str) -> Vec<JudgmentRecord> {
        let text = self
            .agent
            .get(format!("{}/api/export{query}", self.base))
            .call()
            .unwrap()
            .body_mut()
            .read_to_string()
            .unwrap();
        text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
    }
}

fn plan(s: &Server, pool: usize, k: usize) -> HashMap<String, String> {
    let pool: Vec<String> = (1..=pool).map(|i| format!("ann{i}")).collect();
    let (status, plan) = s.post("/api/plan", None, json!({ "pool": pool, "k": k, "seed": 11 }));
    assert_eq!(status, 200, "{plan}");
    serde_json::from_value(plan["tokens"].clone()).unwrap()
}

#[test]
fn full_study_through_the_wire() {
    let dir = tempfile::tempdir().unwrap();
    let s = Server::start(335, dir.path());
    let tokens = plan(&s, 5, 3);
    assert_eq!(tokens.len(), 5);

    for (annotator, token) in &tokens {
        let (status, session) = s.post("/api/session", None, json!({ "token": token }));
        assert_eq!(status, 200);
        assert_eq!(session["annotator"], annotator.as_str());
        assert_eq!(session["progress"]["total"], 201);
        assert_eq!(session["progress"]["batches"].as_array().unwrap().len(), 3);

        let mut count = 0;
        loop {
            let (_, item) = s.get("/api/next", token);
            if item["status"] == "complete" {
                assert_eq!(item["judged"], 201);
                break;
            }
            assert!(item.get("observed").is_none() && item.get("observed_side").is_none());
            // always pick the observed sentence
            let choice = if item["a"].as_str().unwrap().contains("maybe") { "A" } else { "B" };
            let (status, ack) = s.post(
                "/api/submit",
                Some(token),
                json!({ "pair_id": item["pair_id"], "choice": choice }),
            );
            assert_eq!(status, 200, "{ack}");
            count += 1;
            assert_eq!(ack["judged"], count);
        }
        assert_eq!(count, 201);
    }

    let records = s.export("");
    assert_eq!(records.len(), 1005);
    assert!(records.iter().all(|r| r.resolved_choice == Resolved::Observed));
    assert!(records.iter().all(JudgmentRecord::is_consistent));
    let mut sorted = records.clone();
    sorted.sort_by(|a, b| (&a.pair_id, &a.annotator).cmp(&(&b.pair_id, &b.annotator)));
    assert_eq!(sorted, records);
    let m = JudgmentMatrix::from_records(&records).unwrap();
    assert_eq!((m.items(), m.raters()), (335, 3));
    assert_eq!(fleiss_kappa(&m), 1.0);
    assert_eq!(s.export("?annotator=ann2").len(), 201);
}

#[test]
fn rejections() {
    let dir = tempfile::tempdir().unwrap();
    let s = Server::start(10, dir.path());
    let (status, _) = s.post("/api/plan", None, json!({ "pool": ["x", "y"], "k": 3 }));
    assert_eq!(status, 422);
    let tokens = plan(&s, 2, 1);

    let (status, _) = s.get("/api/next", "not-a-token");
    assert_eq!(status, 401);

    let x = &tokens["ann1"];
    let (_, item) = s.get("/api/next", x);
    let pair = item["pair_id"].clone();
    let (status, first) = s.post("/api/submit", Some(x), json!({ "pair_id": pair, "choice": "B" }));
    assert_eq!(status, 200);
    assert_eq!(first["judged"], 1);
    let (status, dup) = s.post("/api/submit", Some(x), json!({ "pair_id": pair, "choice": "A" }));
    assert_eq!(status, 409);
    assert_eq!(dup["error"], "already judged");
    assert_eq!(dup["original"]["choice"], "B");
    assert_eq!(s.export("").len(), 1);

    let (status, _) = s.post("/api/submit", Some(x), json!({ "pair_id": "nope", "choice": "A" }));
    assert_eq!(status, 404);
    let y = &tokens["ann2"];
    let (status, _) = s.post("/api/submit", Some(y), json!({ "pair_id": pair, "choice": "A" }));
    assert_eq!(status, 403);

    // same request is idempotent, a different one conflicts
    let again = plan(&s, 2, 1);
    assert_eq!(again, tokens);
    let (status, _) = s.post("/api/plan", None, json!({ "pool": ["ann1"], "k": 1, "seed": 11 }));
    assert_eq!(status, 409);
}

#[test]
fn export_of_an_empty_log_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let s = Server::start(3, dir.path());
    plan(&s, 1, 1);
    assert!(s.export("").is_empty());
}

#[test]
fn presentation_is_stable_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let seen: Vec<(String, String)> = {
        let s = Server::start(20, dir.path());
        let tokens = plan(&s, 2, 2);
        let t = &tokens["ann1"];
        let mut seen = Vec::new();
        for _ in 0..5 {
            let (_, item) = s.get("/api/next", t);
            seen.push((item["pair_id"].as_str().unwrap().to_string(), item["a"].as_str().unwrap().to_string()));
            s.post("/api/submit", Some(t), json!({ "pair_id": item["pair_id"], "choice": "A" }));
        }
        let (_, item) = s.get("/api/next", t);
        seen.push((item["pair_id"].as_str().unwrap().to_string(), item["a"].as_str().unwrap().to_string()));
        seen
    };
    let s = Server::start(20, dir.path());
    let tokens = plan(&s, 2, 2);
    let (_, item) = s.get("/api/next", &tokens["ann1"]);
    assert_eq!(
        (item["pair_id"].as_str().unwrap(), item["a"].as_str().unwrap()),
        (seen[5].0.as_str(), seen[5].1.as_str())
    );
    let records = s.export("");
    assert_eq!(records.len(), 5);
    for r in records {
        let (_, a) = seen.iter().find(|(p, _)| *p == r.pair_id).unwrap();
        assert_eq!(a.contains("maybe"), r.observed_side == acs_core::judgment::Choice::A);
    }
}
