//! Whole-sentence exclusion of negated, speculative and hedged statements.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Sentence;
use crate::pattern::PatternSet;

/// Shipped default filter lists.
pub const DEFAULT_FILTERS: &str = include_str!("../data/filters.toml");

#[derive(Debug, Error)]
pub enum FilterConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid filter config: {0}")]
    Schema(#[from] toml::de::Error),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilterConfig {
    #[serde(default)]
    keyword_lemmas: Vec<String>,
    #[serde(default)]
    root_pair_blocklist: Vec<(String, String)>,
    #[serde(default)]
    path_root_pair_blocklist: Vec<(String, String)>,
    #[serde(default)]
    path_between_roots_blocklist: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub keyword_lemmas: BTreeSet<String>,
    pub root_pair_blocklist: BTreeSet<(String, String)>,
    pub path_root_pair_blocklist: BTreeSet<(String, String)>,
    pub path_between_roots_blocklist: BTreeSet<String>,
}

fn norm(s: &str) -> String {
    s.trim().to_lowercase()
}

impl FilterConfig {
    /// Keeps everything.
    pub fn permissive() -> Self {
        Self::default()
    }

    pub fn from_toml(text: &str) -> Result<Self, FilterConfigError> {
        let raw: RawFilterConfig = toml::from_str(text)?;
        let pairs = |v: Vec<(String, String)>| v.into_iter().map(|(a, b)| (norm(&a), norm(&b))).collect();
        Ok(FilterConfig {
            keyword_lemmas: raw.keyword_lemmas.iter().map(|s| norm(s)).collect(),
            root_pair_blocklist: pairs(raw.root_pair_blocklist),
            path_root_pair_blocklist: pairs(raw.path_root_pair_blocklist),
            path_between_roots_blocklist: raw
                .path_between_roots_blocklist
                .iter()
                .map(|s| s.split_whitespace().map(norm).collect::<Vec<_>>().join(" "))
                .collect(),
        })
    }

    pub fn shipped_default() -> Self {
        Self::from_toml(DEFAULT_FILTERS).expect("shipped filter config is valid")
    }
}

pub fn load_filter_config(path: &Path) -> Result<FilterConfig, FilterConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| FilterConfigError::Io { path: path.display().to_string(), source })?;
    FilterConfig::from_toml(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    Keyword,
    SentenceRootCombo,
    PathRootCombo,
    PathBetweenRoots,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub keep: bool,
    pub reason: FilterReason,
}

impl FilterVerdict {
    const KEEP: FilterVerdict = FilterVerdict { keep: true, reason: FilterReason::None };

    fn drop(reason: FilterReason) -> Self {
        FilterVerdict { keep: false, reason }
    }
}

fn has_combo(sentence: &Sentence, root: usize, descendants: &[usize], blocklist: &BTreeSet<(String, String)>) -> bool {
    if blocklist.is_empty() {
        return false;
    }
    let root_lemma = sentence.tokens[root].lemma.to_lowercase();
    descendants.iter().any(|&d| {
        let pair = (root_lemma.clone(), sentence.tokens[d].lemma.to_lowercase());
        blocklist.contains(&pair)
    })
}

/// First matching reason wins, in the order keyword, sentence-root combo,
/// path-root combo, path between roots.
pub fn apply_filter(sentence: &Sentence, set: &PatternSet, config: &FilterConfig) -> FilterVerdict {
    let keyword_hit = sentence.tokens.iter().any(|t| {
        config.keyword_lemmas.contains(&t.lemma.to_lowercase()) || config.keyword_lemmas.contains(&t.form.to_lowercase())
    });
    if keyword_hit {
        return FilterVerdict::drop(FilterReason::Keyword);
    }
    if has_combo(sentence, set.sentence_root, &set.sentence_root_descendants, &config.root_pair_blocklist) {
        return FilterVerdict::drop(FilterReason::SentenceRootCombo);
    }
    if has_combo(sentence, set.path_root, &set.path_root_descendants, &config.path_root_pair_blocklist) {
        return FilterVerdict::drop(FilterReason::PathRootCombo);
    }
    if !set.path_between_roots.is_empty()
        && config.path_between_roots_blocklist.contains(&set.path_between_roots_lemmas(sentence))
    {
        return FilterVerdict::drop(FilterReason::PathBetweenRoots);
    }
    FilterVerdict::KEEP
}
