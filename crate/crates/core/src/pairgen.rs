//! Batch generation of new entity pairs from accepted simplifications.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::clustering::{expand_selection, ClusterError, Clustering};
use crate::corpus::EntityPair;
use crate::index::PairIndex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedPair {
    pub pair: EntityPair,
    pub supporting_keys: BTreeSet<String>,
    /// (doc_id, sent_id), sorted.
    pub supporting_sentences: Vec<(String, String)>,
    /// Not among the seed positives given at generation time.
    pub novel: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub accepted_keys: usize,
    /// Keys after cluster expansion (equal to `accepted_keys` without it).
    pub used_keys: usize,
    pub pairs: usize,
    pub novel_pairs: usize,
}

/// All pairs found in a sentence expressing any accepted key (cluster-
/// expanded first when `expansion` is given), ordered by pair. Accepted keys
/// missing from the index contribute nothing.
pub fn generate_pairs(
    index: &PairIndex,
    accepted: &BTreeSet<String>,
    seed_positives: &BTreeSet<EntityPair>,
    expansion: Option<&Clustering>,
) -> Result<Vec<GeneratedPair>, ClusterError> {
    let keys = match expansion {
        Some(c) => expand_selection(accepted, c)?,
        None => accepted.clone(),
    };
    type Support = (BTreeSet<String>, BTreeSet<(String, String)>);
    let mut by_pair: BTreeMap<EntityPair, Support> = BTreeMap::new();
    for key in &keys {
        for record in index.records_for_simplification(key) {
            let entry = by_pair.entry(record.pair.clone()).or_default();
            entry.0.insert(key.clone());
            entry.1.insert((record.doc_id.clone(), record.sent_id.clone()));
        }
    }
    Ok(by_pair
        .into_iter()
        .map(|(pair, (supporting_keys, sentences))| GeneratedPair {
            novel: !seed_positives.contains(&pair),
            pair,
            supporting_keys,
            supporting_sentences: sentences.into_iter().collect(),
        })
        .collect())
}

pub fn summarize(accepted: &BTreeSet<String>, used_keys: usize, pairs: &[GeneratedPair]) -> GenerationSummary {
    GenerationSummary {
        accepted_keys: accepted.len(),
        used_keys,
        pairs: pairs.len(),
        novel_pairs: pairs.iter().filter(|p| p.novel).count(),
    }
}

pub fn write_ndjson<W: Write>(pairs: &[GeneratedPair], mut out: W) -> std::io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_ndjson(text: &str) -> serde_json::Result<Vec<GeneratedPair>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::cluster_simplifications;
    use crate::index::IndexRecord;
    use crate::ranking::pair_counts;

    fn p(i: usize) -> EntityPair {
        EntityPair::new(format!("g{i}"), "d", "GENE", "DISEASE")
    }

    fn idx(rows: &[(&str, usize)]) -> PairIndex {
        PairIndex::from_records(rows.iter().enumerate().map(|(n, (k, i))| IndexRecord {
            doc_id: format!("doc{n:03}"),
            sent_id: "1".into(),
            pair: p(*i),
            simplification_key: k.to_string(),
            display: k.to_string(),
            sentence_text: String::new(),
        }))
        .unwrap()
    }

    #[test]
    fn novelty_flags() {
        let index = idx(&[("GENE drives DISEASE", 1), ("GENE drives DISEASE", 2), ("other GENE DISEASE", 3)]);
        let accepted: BTreeSet<String> = ["GENE drives DISEASE".to_string()].into();
        let out = generate_pairs(&index, &accepted, &[p(1)].into(), None).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!((out[0].pair.clone(), out[0].novel), (p(1), false));
        assert_eq!((out[1].pair.clone(), out[1].novel), (p(2), true));
        assert_eq!(summarize(&accepted, 1, &out).novel_pairs, 1);
    }

    #[test]
    fn empty_selection() {
        let index = idx(&[("GENE drives DISEASE", 1)]);
        assert!(generate_pairs(&index, &BTreeSet::new(), &BTreeSet::new(), None).unwrap().is_empty());
    }

    #[test]
    fn expansion_is_a_superset() {
        let index = idx(&[("GENE effect on DISEASE", 1), ("GENE effects on DISEASE", 2), ("GENE x DISEASE", 3)]);
        let clustering = cluster_simplifications(&pair_counts(&index), 2);
        let accepted: BTreeSet<String> = ["GENE effect on DISEASE".to_string()].into();
        let plain = generate_pairs(&index, &accepted, &BTreeSet::new(), None).unwrap();
        let expanded = generate_pairs(&index, &accepted, &BTreeSet::new(), Some(&clustering)).unwrap();
        assert_eq!(plain.len(), 1);
        assert_eq!(expanded.len(), 2);
        let mut buf = Vec::new();
        write_ndjson(&expanded, &mut buf).unwrap();
        assert_eq!(read_ndjson(std::str::from_utf8(&buf).unwrap()).unwrap(), expanded);
    }
}
