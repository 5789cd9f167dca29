//! Ranking and selection of simplifications: frequency baseline, metric-based
//! automatic selection, and annotation-queue construction for an expert.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::Clustering;
use crate::corpus::EntityPair;
use crate::index::PairIndex;

#[derive(Debug, Error, PartialEq)]
pub enum RankingError {
    #[error("positive and negative pair sets overlap ({0} shared pairs)")]
    Overlap(usize),
    #[error("metric ordering requires labelled pairs")]
    MissingLabels,
    #[error("{0} must be at least 1")]
    NonPositive(&'static str),
    #[error("threshold {name} = {value} is outside [0, 1]")]
    Threshold { name: &'static str, value: f64 },
}

/// Gold positives and closed-world negatives.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelledPairs {
    pub positives: BTreeSet<EntityPair>,
    pub negatives: BTreeSet<EntityPair>,
}

impl LabelledPairs {
    pub fn new(positives: BTreeSet<EntityPair>, negatives: BTreeSet<EntityPair>) -> Result<Self, RankingError> {
        let shared = positives.intersection(&negatives).count();
        if shared > 0 {
            return Err(RankingError::Overlap(shared));
        }
        Ok(LabelledPairs { positives, negatives })
    }

    pub fn n_pos(&self) -> usize {
        self.positives.len()
    }

    pub fn n_neg(&self) -> usize {
        self.negatives.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VerdictValue {
    Yes,
    No,
    Maybe,
}

impl std::str::FromStr for VerdictValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "yes" | "y" => Ok(VerdictValue::Yes),
            "no" | "n" => Ok(VerdictValue::No),
            "maybe" | "m" => Ok(VerdictValue::Maybe),
            _ => Err(format!("invalid verdict {s:?}, expected Yes, No or Maybe")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub value: VerdictValue,
    pub annotator: String,
    pub timestamp: chrono::DateTime<chrono::Utc>,
}

/// Every corpus pair that is not a gold positive.
pub fn closed_world_negatives(corpus_pairs: &BTreeSet<EntityPair>, gold: &BTreeSet<EntityPair>) -> BTreeSet<EntityPair> {
    corpus_pairs.difference(gold).cloned().collect()
}

/// Precision with true and false positives normalized by their class sizes:
/// `(tp/n_pos) / (tp/n_pos + fp/n_neg)`. Returns `None` when undefined
/// (no matches, or an empty class).
pub fn normalized_precision(tp: usize, n_pos: usize, fp: usize, n_neg: usize) -> Option<f64> {
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let tp_rate = tp as f64 / n_pos as f64;
    let fp_rate = fp as f64 / n_neg as f64;
    let denom = tp_rate + fp_rate;
    (denom > 0.0).then(|| tp_rate / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplificationMetrics {
    pub key: String,
    pub pair_count: usize,
    pub n_words: usize,
    pub tp: usize,
    pub fp: usize,
    pub precision_s: f64,
    pub recall_s: f64,
}

/// Metrics of one simplification treated as a pair classifier. Unknown keys
/// and keys matching no labelled pair get all-zero metrics.
pub fn simplification_metrics(index: &PairIndex, key: &str, labels: &LabelledPairs) -> SimplificationMetrics {
    let mut tp = 0;
    let mut fp = 0;
    let mut pair_count = 0;
    for pair in index.pairs_for_simplification_iter(key) {
        pair_count += 1;
        if labels.positives.contains(pair) {
            tp += 1;
        } else if labels.negatives.contains(pair) {
            fp += 1;
        }
    }
    SimplificationMetrics {
        key: key.to_string(),
        pair_count,
        n_words: key.split_whitespace().count(),
        tp,
        fp,
        precision_s: normalized_precision(tp, labels.n_pos(), fp, labels.n_neg()).unwrap_or(0.0),
        recall_s: if labels.n_pos() == 0 { 0.0 } else { tp as f64 / labels.n_pos() as f64 },
    }
}

/// Metrics for every key, ordered by pair count descending then key.
pub fn all_metrics(index: &PairIndex, labels: &LabelledPairs) -> Vec<SimplificationMetrics> {
    let keys: Vec<&str> = index.keys().collect();
    let mut out: Vec<SimplificationMetrics> = keys.par_iter().map(|k| simplification_metrics(index, k, labels)).collect();
    sort_by_count(&mut out);
    out
}

fn sort_by_count(items: &mut [SimplificationMetrics]) {
    items.sort_by(|a, b| b.pair_count.cmp(&a.pair_count).then_with(|| a.key.cmp(&b.key)));
}

/// Keys ordered by pair count descending, ties by key.
pub fn keys_by_count(index: &PairIndex) -> Vec<(String, usize)> {
    let mut keys: Vec<(String, usize)> = index.keys().map(|k| (k.to_string(), index.pair_count(k))).collect();
    keys.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    keys
}

/// Keys with at least `min_pair_count` distinct pairs.
pub fn select_baseline(index: &PairIndex, min_pair_count: usize) -> BTreeSet<String> {
    index.keys().filter(|k| index.pair_count(k) >= min_pair_count).map(str::to_string).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub precision: f64,
    #[serde(default)]
    pub recall: f64,
    #[serde(default)]
    pub min_words: usize,
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), RankingError> {
        for (name, value) in [("precision", self.precision), ("recall", self.recall)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(RankingError::Threshold { name, value });
            }
        }
        Ok(())
    }

    pub fn admits(&self, m: &SimplificationMetrics) -> bool {
        m.precision_s >= self.precision && m.recall_s >= self.recall && m.n_words >= self.min_words
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { precision: 0.6, recall: 0.0, min_words: 0 }
    }
}

/// Keys passing every threshold, ordered by pair count descending then key.
pub fn select_automatic(index: &PairIndex, labels: &LabelledPairs, thresholds: &Thresholds) -> Vec<SimplificationMetrics> {
    all_metrics(index, labels).into_iter().filter(|m| thresholds.admits(m)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueOrdering {
    ByCount,
    ByMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    pub ordering: QueueOrdering,
    pub thresholds: Option<Thresholds>,
    pub session_size: usize,
    pub examples_per_item: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleSentence {
    pub text: String,
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueItem {
    pub key: String,
    pub pair_count: usize,
    pub cluster_id: Option<usize>,
    pub metrics: Option<SimplificationMetrics>,
    pub examples: Vec<ExampleSentence>,
}

/// Builds the ordered list an expert annotates: candidates ranked by pair
/// count (after metric thresholds when ordering by metrics), at most one
/// per cluster, skipping keys already annotated.
pub fn build_annotation_queue(
    index: &PairIndex,
    params: &QueueParams,
    labels: Option<&LabelledPairs>,
    clustering: Option<&Clustering>,
    already_annotated: &BTreeSet<String>,
) -> Result<Vec<QueueItem>, RankingError> {
    if params.session_size == 0 {
        return Err(RankingError::NonPositive("session_size"));
    }
    if params.examples_per_item == 0 {
        return Err(RankingError::NonPositive("examples_per_item"));
    }
    let candidates: Vec<(String, usize, Option<SimplificationMetrics>)> = match params.ordering {
        QueueOrdering::ByCount => keys_by_count(index).into_iter().map(|(k, c)| (k, c, None)).collect(),
        QueueOrdering::ByMetrics => {
            let labels = labels.ok_or(RankingError::MissingLabels)?;
            let thresholds = params.thresholds.unwrap_or_default();
            thresholds.validate()?;
            select_automatic(index, labels, &thresholds).into_iter().map(|m| (m.key.clone(), m.pair_count, Some(m))).collect()
        }
    };

    let mut seen_clusters = BTreeSet::new();
    let mut queue = Vec::new();
    for (key, pair_count, metrics) in candidates {
        if queue.len() == params.session_size {
            break;
        }
        if already_annotated.contains(&key) {
            continue;
        }
        let cluster_id = clustering.and_then(|c| c.cluster_id(&key));
        if let Some(id) = cluster_id {
            if !seen_clusters.insert(id) {
                continue;
            }
        }
        let examples = index
            .sample_sentences(&key, params.examples_per_item, params.seed)
            .into_iter()
            .map(|(text, display)| ExampleSentence { text, display })
            .collect();
        queue.push(QueueItem { key, pair_count, cluster_id, metrics, examples });
    }
    Ok(queue)
}

/// Tab-separated ranked list: key, pair_count, tp, fp, precision_s,
/// recall_s, cluster_id.
pub fn write_ranked_tsv<W: Write>(metrics: &[SimplificationMetrics], clustering: Option<&Clustering>, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    w.write_record(["key", "pair_count", "tp", "fp", "precision_s", "recall_s", "cluster_id"])?;
    for m in metrics {
        let cluster = clustering.and_then(|c| c.cluster_id(&m.key)).map(|id| id.to_string()).unwrap_or_default();
        w.write_record([
            m.key.clone(),
            m.pair_count.to_string(),
            m.tp.to_string(),
            m.fp.to_string(),
            m.precision_s.to_string(),
            m.recall_s.to_string(),
            cluster,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Counts of each distinct key, the input `cluster_simplifications` expects.
pub fn pair_counts(index: &PairIndex) -> BTreeMap<String, usize> {
    index.keys().map(|k| (k.to_string(), index.pair_count(k))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::cluster_simplifications;
    use crate::index::IndexRecord;

    fn pair(i: usize) -> EntityPair {
        EntityPair::new(format!("g{i}"), "d", "GENE", "DISEASE")
    }

    fn index_with(keys: &[(&str, std::ops::Range<usize>)]) -> PairIndex {
        let mut idx = PairIndex::new();
        let mut n = 0;
        for (key, pairs) in keys {
            for p in pairs.clone() {
                n += 1;
                idx.insert(IndexRecord {
                    doc_id: format!("doc{n}"),
                    sent_id: "1".into(),
                    pair: pair(p),
                    simplification_key: key.to_string(),
                    display: key.to_string(),
                    sentence_text: format!("s{n}"),
                })
                .unwrap();
            }
        }
        idx
    }

    #[test]
    fn closed_world() {
        let corpus: BTreeSet<_> = (1..=3).map(pair).collect();
        let gold: BTreeSet<_> = [pair(2)].into();
        assert_eq!(closed_world_negatives(&corpus, &gold), [pair(1), pair(3)].into());
        assert!(closed_world_negatives(&gold, &corpus).is_empty());
    }

    #[test]
    fn normalized_precision_cases() {
        assert_eq!(normalized_precision(10, 100, 100, 1000), Some(0.5));
        assert_eq!(normalized_precision(3, 10, 0, 10), Some(1.0));
        assert_eq!(normalized_precision(0, 10, 0, 10), None);
        let p = normalized_precision(5, 10, 5, 1000).unwrap();
        assert!((p - 0.5 / 0.505).abs() < 1e-15);
    }

    #[test]
    fn labelled_pairs_must_be_disjoint() {
        let p: BTreeSet<_> = [pair(1)].into();
        assert_eq!(LabelledPairs::new(p.clone(), p), Err(RankingError::Overlap(1)));
    }

    #[test]
    fn unknown_key_has_zero_metrics() {
        let idx = index_with(&[("a GENE DISEASE", 0..3)]);
        let labels = LabelledPairs::new([pair(0)].into(), [pair(1)].into()).unwrap();
        let m = simplification_metrics(&idx, "missing", &labels);
        assert_eq!((m.pair_count, m.tp, m.fp), (0, 0, 0));
        assert_eq!(m.precision_s, 0.0);
    }

    #[test]
    fn baseline_threshold_is_inclusive() {
        let idx = index_with(&[("k7", 0..7), ("k5", 0..5), ("k4", 0..4)]);
        assert_eq!(select_baseline(&idx, 5), ["k5".to_string(), "k7".to_string()].into());
        assert_eq!(select_baseline(&idx, 1).len(), 3);
    }

    #[test]
    fn automatic_selection_orders_by_count() {
        let idx = index_with(&[("x GENE DISEASE", 0..2), ("GENE y DISEASE", 0..4), ("GENE DISEASE", 0..4)]);
        let labels = LabelledPairs::new((0..2).map(pair).collect(), (2..10).map(pair).collect()).unwrap();
        let all = select_automatic(&idx, &labels, &Thresholds { precision: 0.0, recall: 0.0, min_words: 0 });
        let keys: Vec<_> = all.iter().map(|m| m.key.as_str()).collect();
        assert_eq!(keys, ["GENE DISEASE", "GENE y DISEASE", "x GENE DISEASE"]);
        let long = select_automatic(&idx, &labels, &Thresholds { precision: 0.0, recall: 0.0, min_words: 3 });
        assert_eq!(long.len(), 2);
    }

    #[test]
    fn queue_dedups_clusters_and_skips_annotated() {
        let idx = index_with(&[
            ("GENE effects on DISEASE", 0..6),
            ("GENE effect on DISEASE", 0..9),
            ("role of GENE in DISEASE", 0..3),
            ("GENE DISEASE", 0..1),
        ]);
        let clustering = cluster_simplifications(&pair_counts(&idx), 2);
        let params =
            QueueParams { ordering: QueueOrdering::ByCount, thresholds: None, session_size: 200, examples_per_item: 2, seed: 3 };
        let q = build_annotation_queue(&idx, &params, None, Some(&clustering), &BTreeSet::new()).unwrap();
        let keys: Vec<_> = q.iter().map(|i| i.key.as_str()).collect();
        assert_eq!(keys, ["GENE effect on DISEASE", "role of GENE in DISEASE", "GENE DISEASE"]);
        assert!(q.iter().all(|i| i.examples.len() <= 2));
        assert_eq!(q[0].examples.len(), 2);

        let done: BTreeSet<String> = ["role of GENE in DISEASE".to_string()].into();
        let q = build_annotation_queue(&idx, &params, None, Some(&clustering), &done).unwrap();
        assert_eq!(q.len(), 2);

        let by_metrics = QueueParams { ordering: QueueOrdering::ByMetrics, ..params };
        assert_eq!(build_annotation_queue(&idx, &by_metrics, None, None, &BTreeSet::new()), Err(RankingError::MissingLabels));
    }
}
