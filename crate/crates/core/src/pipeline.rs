//! Glue between stages: sentence → pattern → filter → index record, gold
//! loading, and KBC triple conversion.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{EntityPair, Sentence, TypeRoles};
use crate::eval::{split_gold, EvalError, GoldSplit, SplitSpec};
use crate::filters::{apply_filter, FilterConfig, FilterReason};
use crate::index::{IndexRecord, PairIndex};
use crate::kbc::{evaluate, EvalOptions, KbcConfig, KbcError, KbcModel, RankingMetrics, Triple};
use crate::pairgen::GeneratedPair;
use crate::pattern::{extract_pattern_set, lexicalize_display, DisplayParts, KeyConfig, Markers};
use crate::ranking::closed_world_negatives;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractOptions {
    #[serde(default)]
    pub key: KeyConfig,
    #[serde(default)]
    pub display: DisplayParts,
    #[serde(default)]
    pub markers: Markers,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractReport {
    pub eligible: usize,
    pub kept: usize,
    pub filtered: BTreeMap<FilterReason, usize>,
    /// Sentences whose two mentions share a head token.
    pub degenerate: usize,
    pub indexed: usize,
}

enum Outcome {
    Record(Box<IndexRecord>),
    Filtered(FilterReason),
    Degenerate,
}

fn process(sentence: &Sentence, pair: &EntityPair, filters: &FilterConfig, opts: &ExtractOptions) -> Outcome {
    let Ok(set) = extract_pattern_set(sentence, pair) else {
        return Outcome::Degenerate;
    };
    let verdict = apply_filter(sentence, &set, filters);
    if !verdict.keep {
        return Outcome::Filtered(verdict.reason);
    }
    let simplification = set.simplification(sentence, &opts.key);
    Outcome::Record(Box::new(IndexRecord {
        doc_id: sentence.doc_id.clone(),
        sent_id: sentence.sent_id.clone(),
        pair: pair.clone(),
        simplification_key: simplification.key,
        display: lexicalize_display(sentence, &set, &opts.display, &opts.markers),
        sentence_text: if sentence.text.is_empty() {
            sentence.tokens.iter().map(|t| t.form.as_str()).collect::<Vec<_>>().join(" ")
        } else {
            sentence.text.clone()
        },
    }))
}

/// Extracts, filters and indexes eligible sentences. Records are inserted in
/// input order regardless of how extraction is scheduled.
pub fn build_index(
    eligible: &[(Sentence, EntityPair)],
    filters: &FilterConfig,
    opts: &ExtractOptions,
) -> (PairIndex, ExtractReport) {
    let outcomes: Vec<Outcome> = eligible.par_iter().map(|(s, p)| process(s, p, filters, opts)).collect();
    let mut index = PairIndex::new();
    let mut report = ExtractReport { eligible: eligible.len(), ..ExtractReport::default() };
    for o in outcomes {
        match o {
            Outcome::Record(r) => {
                report.kept += 1;
                if index.insert(*r).expect("lexicalized keys are never empty") {
                    report.indexed += 1;
                }
            }
            Outcome::Filtered(reason) => *report.filtered.entry(reason).or_default() += 1,
            Outcome::Degenerate => report.degenerate += 1,
        }
    }
    (index, report)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Gold pairs: one `a_id<TAB>b_id` per line; `#` comments and blank lines
/// are ignored.
pub fn parse_gold(text: &str, roles: &TypeRoles) -> Result<BTreeSet<EntityPair>, String> {
    let mut out = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                out.insert(EntityPair::new(a, b, roles.type_a.clone(), roles.type_b.clone()));
            }
            _ => return Err(format!("gold line {}: expected `a_id<TAB>b_id`", i + 1)),
        }
    }
    Ok(out)
}

pub fn format_gold(pairs: &BTreeSet<EntityPair>) -> String {
    pairs.iter().map(|p| format!("{}\t{}\n", p.a_id, p.b_id)).collect()
}

/// Restricts gold to pairs seen in the index, derives closed-world negatives
/// from the remaining index pairs, and splits both.
pub fn prepare_split(index: &PairIndex, gold: &BTreeSet<EntityPair>, spec: &SplitSpec) -> Result<GoldSplit, EvalError> {
    let corpus_pairs = index.pairs();
    let positives: BTreeSet<EntityPair> = gold.intersection(&corpus_pairs).cloned().collect();
    let negatives = closed_world_negatives(&corpus_pairs, &positives);
    split_gold(&positives, &negatives, spec)
}

pub fn entity_name(entity_type: &str, id: &str) -> String {
    format!("{entity_type}:{id}")
}

pub fn pair_triple(pair: &EntityPair, relation: &str) -> Triple {
    Triple::new(entity_name(&pair.a_type, &pair.a_id), relation, entity_name(&pair.b_type, &pair.b_id))
}

pub fn pair_key(pair: &EntityPair) -> (String, String) {
    (entity_name(&pair.a_type, &pair.a_id), entity_name(&pair.b_type, &pair.b_id))
}

/// One KBC training run of the extrinsic comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrinsicRun {
    pub training: String,
    pub training_pairs: usize,
    pub new_pairs: usize,
    pub final_loss: Option<f64>,
    pub metrics: RankingMetrics,
    #[serde(skip)]
    pub model: Option<KbcModel>,
}

/// Trains on the seed pairs alone and on seed plus generated pairs, then
/// ranks type-a entities for every type-b entity with test pairs. Both runs
/// share the vocabulary of `universe` and exclude only seed pairs from the
/// candidate lists.
pub fn extrinsic_runs(
    universe: &BTreeSet<EntityPair>,
    seed_train: &BTreeSet<EntityPair>,
    generated: &[GeneratedPair],
    test: &BTreeSet<EntityPair>,
    relation: &str,
    config: &KbcConfig,
    options: &EvalOptions,
) -> Result<Vec<ExtrinsicRun>, KbcError> {
    let mut entities = BTreeSet::new();
    let mut candidates = BTreeSet::new();
    for p in universe.iter().chain(seed_train).chain(test).chain(generated.iter().map(|g| &g.pair)) {
        let (a, b) = pair_key(p);
        candidates.insert(a.clone());
        entities.insert(a);
        entities.insert(b);
    }
    let train_keys: BTreeSet<(String, String)> = seed_train.iter().map(pair_key).collect();
    let test_keys: BTreeSet<(String, String)> = test.iter().map(pair_key).collect();

    let augmented: BTreeSet<&EntityPair> = seed_train.iter().chain(generated.iter().map(|g| &g.pair)).collect();
    let variants: [(&str, Vec<&EntityPair>); 2] =
        [("seed", seed_train.iter().collect()), ("seed+generated", augmented.into_iter().collect())];
    let mut runs = Vec::with_capacity(2);
    for (label, pairs) in variants {
        let triples: Vec<Triple> = pairs.iter().map(|p| pair_triple(p, relation)).collect();
        let model = KbcModel::train(&triples, entities.iter().cloned(), [relation.to_string()], config)?;
        let metrics = evaluate(&model, relation, &candidates, &train_keys, &test_keys, options)?;
        runs.push(ExtrinsicRun {
            training: label.to_string(),
            training_pairs: triples.len(),
            new_pairs: triples.len() - seed_train.len(),
            final_loss: model.loss_trace.last().copied(),
            metrics,
            model: Some(model),
        });
    }
    Ok(runs)
}
