//! Intrinsic evaluation: gold splits, pair-level metrics against held-out
//! pairs, and manual simplification precision.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EntityPair;
use crate::index::PairIndex;
use crate::pairgen::generate_pairs;
use crate::ranking::{normalized_precision, select_automatic, LabelledPairs, Thresholds, VerdictValue};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("split fractions must be non-negative and sum to 1, got {0:?}")]
    Fractions((f64, f64, f64)),
    #[error("cannot split an empty positive set")]
    EmptyPositives,
    #[error("test {0} set is empty")]
    EmptyTest(&'static str),
    #[error("test positive and negative sets overlap")]
    Overlap,
    #[error("no verdicts")]
    NoVerdicts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, valid: f64, test: f64, seed: u64) -> Result<Self, EvalError> {
        let spec = SplitSpec { train, valid, test, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let f = [self.train, self.valid, self.test];
        let ok = f.iter().all(|x| x.is_finite() && *x >= 0.0) && (f.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(EvalError::Fractions((self.train, self.valid, self.test)))
        }
    }

    /// Sizes of the three parts of a set of `n` items. Train and valid are
    /// rounded, test takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let train = ((self.train * n as f64).round() as usize).min(n);
        let valid = ((self.valid * n as f64).round() as usize).min(n - train);
        (train, valid, n - train - valid)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSplit {
    pub train: LabelledPairs,
    pub valid: LabelledPairs,
    pub test: LabelledPairs,
}

fn cut(set: &BTreeSet<EntityPair>, spec: &SplitSpec, rng: &mut ChaCha8Rng) -> [BTreeSet<EntityPair>; 3] {
    let mut items: Vec<&EntityPair> = set.iter().collect();
    items.shuffle(rng);
    let (a, b, _) = spec.sizes(items.len());
    [
        items[..a].iter().map(|p| (*p).clone()).collect(),
        items[a..a + b].iter().map(|p| (*p).clone()).collect(),
        items[a + b..].iter().map(|p| (*p).clone()).collect(),
    ]
}

/// Seeded shuffle-and-cut of positives and negatives into disjoint
/// train/valid/test parts.
pub fn split_gold(
    positives: &BTreeSet<EntityPair>,
    negatives: &BTreeSet<EntityPair>,
    spec: &SplitSpec,
) -> Result<GoldSplit, EvalError> {
    spec.validate()?;
    if positives.is_empty() {
        return Err(EvalError::EmptyPositives);
    }
    if positives.intersection(negatives).next().is_some() {
        return Err(EvalError::Overlap);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let [ptr, pva, pte] = cut(positives, spec, &mut rng);
    let [ntr, nva, nte] = cut(negatives, spec, &mut rng);
    Ok(GoldSplit {
        train: LabelledPairs { positives: ptr, negatives: ntr },
        valid: LabelledPairs { positives: pva, negatives: nva },
        test: LabelledPairs { positives: pte, negatives: nte },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub recall: f64,
    pub specificity: f64,
    /// Class-size normalized precision.
    pub precision: f64,
    pub f_score: f64,
    /// Set when precision was 0/0 and is reported as 0.
    pub precision_undefined: bool,
}

/// Scores predicted pairs against held-out positives and negatives.
/// Predictions outside both test sets are ignored.
pub fn pair_level_metrics(
    predicted: &BTreeSet<EntityPair>,
    test_pos: &BTreeSet<EntityPair>,
    test_neg: &BTreeSet<EntityPair>,
) -> Result<PairMetrics, EvalError> {
    if test_pos.is_empty() {
        return Err(EvalError::EmptyTest("positive"));
    }
    if test_neg.is_empty() {
        return Err(EvalError::EmptyTest("negative"));
    }
    if test_pos.intersection(test_neg).next().is_some() {
        return Err(EvalError::Overlap);
    }
    let tp = predicted.intersection(test_pos).count();
    let fp = predicted.intersection(test_neg).count();
    let fn_ = test_pos.len() - tp;
    let tn = test_neg.len() - fp;
    let recall = tp as f64 / test_pos.len() as f64;
    let specificity = tn as f64 / test_neg.len() as f64;
    let precision = normalized_precision(tp, test_pos.len(), fp, test_neg.len());
    let p = precision.unwrap_or(0.0);
    let f_score = if p + recall > 0.0 { 2.0 * p * recall / (p + recall) } else { 0.0 };
    Ok(PairMetrics { tp, fp, fn_, tn, recall, specificity, precision: p, f_score, precision_undefined: precision.is_none() })
}

/// Manual simplification precision: the fraction of Yes verdicts.
pub fn msp(verdicts: &[VerdictValue]) -> Result<f64, EvalError> {
    if verdicts.is_empty() {
        return Err(EvalError::NoVerdicts);
    }
    let yes = verdicts.iter().filter(|v| **v == VerdictValue::Yes).count();
    Ok(yes as f64 / verdicts.len() as f64)
}

/// Grid point chosen on the validation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedThreshold {
    pub precision_threshold: f64,
    pub valid_metrics: PairMetrics,
}

/// Picks the precision threshold from `grid` whose automatic selection (ranked
/// on `train`) maximizes F-score on `valid`. Ties go to the higher threshold.
pub fn tune_precision_threshold(
    index: &PairIndex,
    train: &LabelledPairs,
    valid: &LabelledPairs,
    base: &Thresholds,
    grid: &[f64],
) -> Result<TunedThreshold, EvalError> {
    let mut best: Option<TunedThreshold> = None;
    for &thr in grid {
        let th = Thresholds { precision: thr, ..*base };
        let keys: BTreeSet<String> = select_automatic(index, train, &th).into_iter().map(|m| m.key).collect();
        let predicted: BTreeSet<EntityPair> =
            generate_pairs(index, &keys, &train.positives, None).expect("no expansion").into_iter().map(|g| g.pair).collect();
        let m = pair_level_metrics(&predicted, &valid.positives, &valid.negatives)?;
        let better = match &best {
            None => true,
            Some(b) => {
                m.f_score > b.valid_metrics.f_score || (m.f_score == b.valid_metrics.f_score && thr > b.precision_threshold)
            }
        };
        if better {
            best = Some(TunedThreshold { precision_threshold: thr, valid_metrics: m });
        }
    }
    best.ok_or(EvalError::EmptyTest("grid"))
}

/// One row of the intrinsic report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicRow {
    pub selection_method: String,
    pub msp: Option<f64>,
    pub new_pairs: usize,
    pub recall: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f_score: f64,
}

impl IntrinsicRow {
    pub fn new(method: impl Into<String>, msp: Option<f64>, new_pairs: usize, m: &PairMetrics) -> Self {
        IntrinsicRow {
            selection_method: method.into(),
            msp,
            new_pairs,
            recall: m.recall,
            specificity: m.specificity,
            precision: m.precision,
            f_score: m.f_score,
        }
    }
}
