//! Wordlists used for lookup-based language identification.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::jsonl::read_lines;
use crate::{Error, Result};

/// Case-folded wordlists for one language pair.
#[derive(Debug, Clone, Default)]
pub struct LexiconSet {
    pub lang1_words: HashSet<String>,
    pub english_words: HashSet<String>,
    pub borrowings_to_english: HashSet<String>,
    pub borrowings_from_english: HashSet<String>,
    /// Forms present in both wordlists.
    pub homographs: HashSet<String>,
    /// Characters that only occur in genuine Lang1 words (German umlauts,
    /// for instance). A word containing one but missing from the Lang1
    /// list disqualifies its sentence.
    pub diacritic_guard: Vec<char>,
}

fn fold<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> HashSet<String> {
    words
        .into_iter()
        .map(|w| w.as_ref().trim().to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

impl LexiconSet {
    pub fn new<S: AsRef<str>>(
        lang1: impl IntoIterator<Item = S>,
        english: impl IntoIterator<Item = S>,
        borrowings_to_english: impl IntoIterator<Item = S>,
        borrowings_from_english: impl IntoIterator<Item = S>,
    ) -> Self {
        let mut set = Self {
            lang1_words: fold(lang1),
            english_words: fold(english),
            borrowings_to_english: fold(borrowings_to_english),
            borrowings_from_english: fold(borrowings_from_english),
            homographs: HashSet::new(),
            diacritic_guard: Vec::new(),
        };
        set.refresh_homographs();
        set
    }

    pub fn with_diacritic_guard(mut self, chars: &str) -> Self {
        self.diacritic_guard = chars.chars().collect();
        self
    }

    fn refresh_homographs(&mut self) {
        self.homographs = self
            .lang1_words
            .intersection(&self.english_words)
            .cloned()
            .collect();
    }

    /// Removes words whose bilingual-dictionary translation is the identical
    /// form from both wordlists. Entries are `(lang1, english)` pairs.
    pub fn remove_dictionary_identicals<S: AsRef<str>>(&mut self, entries: &[(S, S)]) {
        for (l1, en) in entries {
            let l1 = l1.as_ref().trim().to_lowercase();
            let en = en.as_ref().trim().to_lowercase();
            if l1 == en {
                self.lang1_words.remove(&l1);
                self.english_words.remove(&en);
            }
        }
        self.refresh_homographs();
    }

    pub fn in_lang1(&self, folded: &str) -> bool {
        self.lang1_words.contains(folded)
    }

    pub fn in_english(&self, folded: &str) -> bool {
        self.english_words.contains(folded)
    }
}

/// Role → file paths for one language pair, as listed in a manifest.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PairManifest {
    #[serde(default)]
    pub lang1: Vec<PathBuf>,
    #[serde(default)]
    pub english: Vec<PathBuf>,
    #[serde(default)]
    pub borrowings_to_english: Vec<PathBuf>,
    #[serde(default)]
    pub borrowings_from_english: Vec<PathBuf>,
    /// Tab-separated `lang1<TAB>english` dictionary entries.
    #[serde(default)]
    pub dictionary: Vec<PathBuf>,
    /// Regional Lang1 wordlists, loaded only when named in
    /// `include_variants`.
    #[serde(default)]
    pub variants: BTreeMap<String, Vec<PathBuf>>,
    #[serde(default)]
    pub include_variants: Vec<String>,
    #[serde(default)]
    pub diacritic_guard: Option<String>,
}

/// A manifest file:
///
/// ```toml
/// [pairs.de-en]
/// lang1 = ["de.txt"]
/// english = ["en.txt"]
/// borrowings_to_english = ["de_to_en.txt"]
/// borrowings_from_english = ["de_from_en.txt"]
/// dictionary = ["dict.tsv"]
/// diacritic_guard = "äöüÄÖÜ"
/// ```
///
/// Paths are relative to the manifest's directory.
#[derive(Debug, Clone, Deserialize)]
pub struct Manifest {
    pub pairs: BTreeMap<String, PairManifest>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }
}

fn read_all(base: &Path, files: &[PathBuf]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for f in files {
        out.extend(read_lines(&base.join(f))?);
    }
    Ok(out)
}

/// Loads the lexicons for `lang_pair` from a manifest file.
pub fn load_lexicons(manifest_path: &Path, lang_pair: &str) -> Result<LexiconSet> {
    let manifest = Manifest::load(manifest_path)?;
    let pair = manifest.pairs.get(lang_pair).ok_or_else(|| {
        Error::validation(format!(
            "{}: no entry for language pair {lang_pair}",
            manifest_path.display()
        ))
    })?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let mut lang1 = read_all(base, &pair.lang1)?;
    for variant in &pair.include_variants {
        let files = pair.variants.get(variant).ok_or_else(|| {
            Error::validation(format!("manifest {lang_pair}: unknown variant {variant}"))
        })?;
        lang1.extend(read_all(base, files)?);
    }
    let english = read_all(base, &pair.english)?;
    let to_en = read_all(base, &pair.borrowings_to_english)?;
    let from_en = read_all(base, &pair.borrowings_from_english)?;

    let mut set = LexiconSet::new(lang1, english, to_en, from_en);
    if !pair.dictionary.is_empty() {
        let mut entries = Vec::new();
        for line in read_all(base, &pair.dictionary)? {
            if let Some((l1, en)) = line.split_once('\t') {
                entries.push((l1.to_string(), en.to_string()));
            }
        }
        set.remove_dictionary_identicals(&entries);
    }
    if let Some(guard) = &pair.diacritic_guard {
        set = set.with_diacritic_guard(guard);
    }
    Ok(set)
}
