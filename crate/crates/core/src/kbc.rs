//! ComplEx knowledge-base completion at desk scale.
//!
//! A triple (s, r, o) scores `Re(Σ_d w_r[d] · e_s[d] · conj(e_o[d]))`.
//! Training minimizes the logistic loss `softplus(-y · score)` over each
//! positive and its corrupted negatives, plus an L2 penalty on the embeddings
//! touched by every sample, with AdaGrad step sizes.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum KbcError {
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("no training triples")]
    NoTriples,
    #[error("invalid config: {0}")]
    Config(&'static str),
    #[error("non-finite loss {loss} at epoch {epoch}, triple {triple}")]
    NonFinite { epoch: usize, triple: usize, loss: f64 },
    #[error("no test pairs to evaluate")]
    NoTestPairs,
    #[error("checkpoint version {0} is not supported")]
    Version(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbcConfig {
    pub embedding_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub negatives_per_positive: usize,
    pub l2_weight: f64,
    pub seed: u64,
}

impl Default for KbcConfig {
    fn default() -> Self {
        KbcConfig { embedding_dim: 32, epochs: 200, learning_rate: 0.05, negatives_per_positive: 5, l2_weight: 1e-4, seed: 0 }
    }
}

impl KbcConfig {
    pub fn validate(&self) -> Result<(), KbcError> {
        if self.embedding_dim == 0 {
            return Err(KbcError::Config("embedding_dim must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(KbcError::Config("learning_rate must be positive"));
        }
        if self.negatives_per_positive == 0 {
            return Err(KbcError::Config("negatives_per_positive must be positive"));
        }
        if !(self.l2_weight >= 0.0 && self.l2_weight.is_finite()) {
            return Err(KbcError::Config("l2_weight must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl Triple {
    pub fn new(subject: impl Into<String>, relation: impl Into<String>, object: impl Into<String>) -> Self {
        Triple { subject: subject.into(), relation: relation.into(), object: object.into() }
    }
}

/// An indexed training example with label +1 or -1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub subject: usize,
    pub relation: usize,
    pub object: usize,
    pub label: f64,
}

/// Sparse loss gradient; each complex entry holds (∂L/∂re, ∂L/∂im).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    pub entities: BTreeMap<usize, Vec<Complex64>>,
    pub relations: BTreeMap<usize, Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KbcModel {
    entities: Vec<String>,
    entity_ix: HashMap<String, usize>,
    relations: Vec<String>,
    relation_ix: HashMap<String, usize>,
    entity_emb: Vec<Vec<Complex64>>,
    relation_emb: Vec<Vec<Complex64>>,
    /// Mean loss per positive, one entry per epoch.
    pub loss_trace: Vec<f64>,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sq_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

impl KbcModel {
    /// Seeded random initialization over a fixed vocabulary.
    pub fn init<E, R>(entities: E, relations: R, config: &KbcConfig) -> Result<Self, KbcError>
    where
        E: IntoIterator<Item = String>,
        R: IntoIterator<Item = String>,
    {
        config.validate()?;
        let entities: Vec<String> = entities.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let relations: Vec<String> = relations.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let normal = Normal::new(0.0, 1.0 / (config.embedding_dim as f64).sqrt()).expect("valid std");
        let mut draw = |n: usize| -> Vec<Vec<Complex64>> {
            (0..n)
                .map(|_| {
                    (0..config.embedding_dim).map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))).collect()
                })
                .collect()
        };
        let entity_emb = draw(entities.len());
        let relation_emb = draw(relations.len());
        Ok(KbcModel {
            entity_ix: entities.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect(),
            relation_ix: relations.iter().cloned().enumerate().map(|(i, r)| (r, i)).collect(),
            entities,
            relations,
            entity_emb,
            relation_emb,
            loss_trace: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.entity_emb.first().or(self.relation_emb.first()).map_or(0, Vec::len)
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn entity_index(&self, name: &str) -> Result<usize, KbcError> {
        self.entity_ix.get(name).copied().ok_or_else(|| KbcError::UnknownEntity(name.to_string()))
    }

    pub fn relation_index(&self, name: &str) -> Result<usize, KbcError> {
        self.relation_ix.get(name).copied().ok_or_else(|| KbcError::UnknownRelation(name.to_string()))
    }

    pub fn entity_embedding(&self, i: usize) -> &[Complex64] {
        &self.entity_emb[i]
    }

    pub fn relation_embedding(&self, i: usize) -> &[Complex64] {
        &self.relation_emb[i]
    }

    pub fn entity_embedding_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.entity_emb[i]
    }

    pub fn relation_embedding_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.relation_emb[i]
    }

    pub fn score(&self, subject: &str, relation: &str, object: &str) -> Result<f64, KbcError> {
        Ok(self.score_ix(self.entity_index(subject)?, self.relation_index(relation)?, self.entity_index(object)?))
    }

    pub fn score_ix(&self, s: usize, r: usize, o: usize) -> f64 {
        let (es, wr, eo) = (&self.entity_emb[s], &self.relation_emb[r], &self.entity_emb[o]);
        es.iter()
            .zip(wr)
            .zip(eo)
            .map(|((s, r), o)| {
                // Re(r · s · conj(o)) expanded in real arithmetic
                let rs_re = r.re * s.re - r.im * s.im;
                let rs_im = r.re * s.im + r.im * s.re;
                rs_re * o.re + rs_im * o.im
            })
            .sum()
    }

    /// Loss of a batch: logistic terms plus the per-sample L2 penalty.
    pub fn batch_loss(&self, batch: &[Sample], l2_weight: f64) -> f64 {
        batch
            .iter()
            .map(|x| {
                let score = self.score_ix(x.subject, x.relation, x.object);
                let reg = sq_norm(&self.entity_emb[x.subject])
                    + sq_norm(&self.relation_emb[x.relation])
                    + sq_norm(&self.entity_emb[x.object]);
                softplus(-x.label * score) + l2_weight * reg
            })
            .sum()
    }

    /// Analytic gradient of [`Self::batch_loss`].
    pub fn batch_gradients(&self, batch: &[Sample], l2_weight: f64) -> Gradients {
        let dim = self.dim();
        let mut g = Gradients::default();
        for x in batch {
            let score = self.score_ix(x.subject, x.relation, x.object);
            let dscore = -x.label * sigmoid(-x.label * score);
            let (es, wr, eo) = (&self.entity_emb[x.subject], &self.relation_emb[x.relation], &self.entity_emb[x.object]);
            let mut gs = vec![Complex64::default(); dim];
            let mut gr = vec![Complex64::default(); dim];
            let mut go = vec![Complex64::default(); dim];
            for d in 0..dim {
                let (s, r, o) = (es[d], wr[d], eo[d]);
                gs[d] = Complex64::new(r.re * o.re + r.im * o.im, r.re * o.im - r.im * o.re) * dscore + s * (2.0 * l2_weight);
                go[d] = Complex64::new(r.re * s.re - r.im * s.im, r.re * s.im + r.im * s.re) * dscore + o * (2.0 * l2_weight);
                gr[d] = Complex64::new(s.re * o.re + s.im * o.im, s.re * o.im - s.im * o.re) * dscore + r * (2.0 * l2_weight);
            }
            accumulate(&mut g.entities, x.subject, &gs);
            accumulate(&mut g.entities, x.object, &go);
            accumulate(&mut g.relations, x.relation, &gr);
        }
        g
    }

    /// Trains over `triples` from a seeded initialization of the given
    /// vocabulary. Every triple's entities and relation must be in it.
    pub fn train<E, R>(triples: &[Triple], entities: E, relations: R, config: &KbcConfig) -> Result<Self, KbcError>
    where
        E: IntoIterator<Item = String>,
        R: IntoIterator<Item = String>,
    {
        if triples.is_empty() {
            return Err(KbcError::NoTriples);
        }
        let mut model = Self::init(entities, relations, config)?;
        let positives: Vec<Sample> = triples
            .iter()
            .map(|t| {
                Ok(Sample {
                    subject: model.entity_index(&t.subject)?,
                    relation: model.relation_index(&t.relation)?,
                    object: model.entity_index(&t.object)?,
                    label: 1.0,
                })
            })
            .collect::<Result<_, KbcError>>()?;

        // Separate stream from the initialization draws.
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
        let dim = config.embedding_dim;
        let mut ent_acc = vec![vec![(0.0f64, 0.0f64); dim]; model.entities.len()];
        let mut rel_acc = vec![vec![(0.0f64, 0.0f64); dim]; model.relations.len()];
        let n_entities = model.entities.len();
        let mut order: Vec<usize> = (0..positives.len()).collect();
        let mut batch = Vec::with_capacity(config.negatives_per_positive + 1);

        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for &ti in &order {
                let pos = positives[ti];
                batch.clear();
                batch.push(pos);
                for _ in 0..config.negatives_per_positive {
                    let replacement = rng.random_range(0..n_entities);
                    let mut neg = pos;
                    neg.label = -1.0;
                    if rng.random_bool(0.5) {
                        neg.subject = replacement;
                    } else {
                        neg.object = replacement;
                    }
                    batch.push(neg);
                }
                let loss = model.batch_loss(&batch, config.l2_weight);
                if !loss.is_finite() {
                    return Err(KbcError::NonFinite { epoch, triple: ti, loss });
                }
                total += loss;
                let grads = model.batch_gradients(&batch, config.l2_weight);
                for (i, g) in &grads.entities {
                    adagrad_step(&mut model.entity_emb[*i], &mut ent_acc[*i], g, config.learning_rate);
                }
                for (i, g) in &grads.relations {
                    adagrad_step(&mut model.relation_emb[*i], &mut rel_acc[*i], g, config.learning_rate);
                }
            }
            model.loss_trace.push(total / positives.len() as f64);
        }
        Ok(model)
    }

    pub fn to_checkpoint(&self) -> KbcCheckpoint {
        let encode = |names: &[String], emb: &[Vec<Complex64>]| -> BTreeMap<String, Vec<[f64; 2]>> {
            names.iter().zip(emb).map(|(n, v)| (n.clone(), v.iter().map(|c| [c.re, c.im]).collect())).collect()
        };
        KbcCheckpoint {
            version: CHECKPOINT_VERSION,
            embedding_dim: self.dim(),
            entities: encode(&self.entities, &self.entity_emb),
            relations: encode(&self.relations, &self.relation_emb),
            loss_trace: self.loss_trace.clone(),
        }
    }

    pub fn from_checkpoint(ck: &KbcCheckpoint) -> Result<Self, KbcError> {
        if ck.version != CHECKPOINT_VERSION {
            return Err(KbcError::Version(ck.version));
        }
        let decode = |m: &BTreeMap<String, Vec<[f64; 2]>>| -> (Vec<String>, Vec<Vec<Complex64>>) {
            m.iter().map(|(n, v)| (n.clone(), v.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())).unzip()
        };
        let (entities, entity_emb) = decode(&ck.entities);
        let (relations, relation_emb) = decode(&ck.relations);
        Ok(KbcModel {
            entity_ix: entities.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect(),
            relation_ix: relations.iter().cloned().enumerate().map(|(i, r)| (r, i)).collect(),
            entities,
            relations,
            entity_emb,
            relation_emb,
            loss_trace: ck.loss_trace.clone(),
        })
    }
}

fn accumulate(map: &mut BTreeMap<usize, Vec<Complex64>>, i: usize, g: &[Complex64]) {
    let slot = map.entry(i).or_insert_with(|| vec![Complex64::default(); g.len()]);
    for (a, b) in slot.iter_mut().zip(g) {
        *a += b;
    }
}

fn adagrad_step(params: &mut [Complex64], acc: &mut [(f64, f64)], grad: &[Complex64], lr: f64) {
    const EPS: f64 = 1e-8;
    for ((p, a), g) in params.iter_mut().zip(acc.iter_mut()).zip(grad) {
        a.0 += g.re * g.re;
        a.1 += g.im * g.im;
        p.re -= lr * g.re / (a.0.sqrt() + EPS);
        p.im -= lr * g.im / (a.1.sqrt() + EPS);
    }
}

/// Structured-text model checkpoint: embeddings as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbcCheckpoint {
    pub version: u32,
    pub embedding_dim: usize,
    pub entities: BTreeMap<String, Vec<[f64; 2]>>,
    pub relations: BTreeMap<String, Vec<[f64; 2]>>,
    pub loss_trace: Vec<f64>,
}

/// `Σ_k P(k) · (R(k) − R(k−1))` over a ranked relevance list.
pub fn average_precision(relevant: &[bool], n_relevant: usize) -> f64 {
    if n_relevant == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut ap = 0.0;
    for (k, &rel) in relevant.iter().enumerate() {
        if rel {
            hits += 1;
            ap += (hits as f64 / (k + 1) as f64) / n_relevant as f64;
        }
    }
    ap
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    /// Pooled over every (candidate, query) prediction.
    pub p_at_k: BTreeMap<usize, f64>,
    pub r_at_k: BTreeMap<usize, f64>,
    /// Mean of per-query average precision over queries with test pairs.
    pub map: f64,
    pub average_precision: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub k_values: Vec<usize>,
    /// Drop training positives from each candidate list.
    pub filtered: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { k_values: vec![100, 1000], filtered: true }
    }
}

/// Ranks `candidates` as subjects for every object (query) that has test
/// pairs. Pairs are (subject, object) under one relation.
pub fn evaluate(
    model: &KbcModel,
    relation: &str,
    candidates: &BTreeSet<String>,
    train_pos: &BTreeSet<(String, String)>,
    test_pos: &BTreeSet<(String, String)>,
    options: &EvalOptions,
) -> Result<RankingMetrics, KbcError> {
    if test_pos.is_empty() {
        return Err(KbcError::NoTestPairs);
    }
    let r = model.relation_index(relation)?;
    let cand: Vec<(&String, usize)> =
        candidates.iter().map(|c| Ok((c, model.entity_index(c)?))).collect::<Result<_, KbcError>>()?;

    let mut relevant_by_query: BTreeMap<&String, BTreeSet<&String>> = BTreeMap::new();
    for (s, o) in test_pos {
        relevant_by_query.entry(o).or_default().insert(s);
    }
    let mut train_by_query: BTreeMap<&String, BTreeSet<&String>> = BTreeMap::new();
    for (s, o) in train_pos {
        train_by_query.entry(o).or_default().insert(s);
    }

    let mut pooled: Vec<(f64, &String, &String, bool)> = Vec::new();
    let mut aps = BTreeMap::new();
    for (query, relevant) in &relevant_by_query {
        let o = model.entity_index(query)?;
        let excluded = train_by_query.get(query);
        let mut ranked: Vec<(f64, &String)> = cand
            .iter()
            .filter(|(c, _)| !(options.filtered && excluded.is_some_and(|e| e.contains(c))))
            .map(|(c, s)| (model.score_ix(*s, r, o), *c))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        let rel: Vec<bool> = ranked.iter().map(|(_, c)| relevant.contains(c)).collect();
        aps.insert((*query).clone(), average_precision(&rel, relevant.len()));
        pooled.extend(ranked.iter().zip(&rel).map(|((score, c), hit)| (*score, *query, *c, *hit)));
    }
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| (a.1, a.2).cmp(&(b.1, b.2))));

    let total_relevant = test_pos.len() as f64;
    let mut p_at_k = BTreeMap::new();
    let mut r_at_k = BTreeMap::new();
    for &k in &options.k_values {
        if k == 0 {
            continue;
        }
        let hits = pooled.iter().take(k).filter(|x| x.3).count() as f64;
        p_at_k.insert(k, hits / k as f64);
        r_at_k.insert(k, hits / total_relevant);
    }
    let map = aps.values().sum::<f64>() / aps.len() as f64;
    Ok(RankingMetrics { p_at_k, r_at_k, map, average_precision: aps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(dim: usize) -> KbcModel {
        let cfg = KbcConfig { embedding_dim: dim, ..KbcConfig::default() };
        KbcModel::init(["a".to_string(), "b".to_string()], ["r".to_string()], &cfg).unwrap()
    }

    #[test]
    fn zero_embeddings_score_zero() {
        let mut m = tiny(3);
        for i in 0..2 {
            m.entity_embedding_mut(i).fill(Complex64::default());
        }
        assert_eq!(m.score("a", "r", "b").unwrap(), 0.0);
    }

    #[test]
    fn unit_score() {
        let mut m = tiny(1);
        m.entity_embedding_mut(0)[0] = Complex64::new(1.0, 0.0);
        m.entity_embedding_mut(1)[0] = Complex64::new(1.0, 0.0);
        m.relation_embedding_mut(0)[0] = Complex64::new(1.0, 0.0);
        assert_eq!(m.score("a", "r", "b").unwrap(), 1.0);
        assert_eq!(m.score("a", "q", "b"), Err(KbcError::UnknownRelation("q".into())));
        assert_eq!(m.score("z", "r", "b"), Err(KbcError::UnknownEntity("z".into())));
    }

    #[test]
    fn zero_epochs_is_initialization() {
        let cfg = KbcConfig { embedding_dim: 4, epochs: 0, seed: 9, ..KbcConfig::default() };
        let ents = || ["a".to_string(), "b".to_string()];
        let trained = KbcModel::train(&[Triple::new("a", "r", "b")], ents(), ["r".to_string()], &cfg).unwrap();
        let init = KbcModel::init(ents(), ["r".to_string()], &cfg).unwrap();
        assert_eq!(trained, init);
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let cfg = KbcConfig { embedding_dim: 8, epochs: 30, seed: 3, ..KbcConfig::default() };
        let ents: Vec<String> = (0..6).map(|i| format!("e{i}")).collect();
        let triples = vec![Triple::new("e0", "r", "e1"), Triple::new("e2", "r", "e3")];
        let a = KbcModel::train(&triples, ents.clone(), ["r".to_string()], &cfg).unwrap();
        let b = KbcModel::train(&triples, ents.clone(), ["r".to_string()], &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.loss_trace.last().unwrap() < a.loss_trace.first().unwrap());
        assert_eq!(KbcModel::train(&[], ents, ["r".to_string()], &cfg), Err(KbcError::NoTriples));
    }

    #[test]
    fn checkpoint_roundtrip() {
        let m = tiny(2);
        let back = KbcModel::from_checkpoint(&m.to_checkpoint()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn average_precision_cases() {
        assert_eq!(average_precision(&[true, false], 1), 1.0);
        assert_eq!(average_precision(&[false, true], 1), 0.5);
        assert!((average_precision(&[true, false, true], 2) - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn evaluate_single_query() {
        let mut m = tiny(1);
        m.relation_embedding_mut(0)[0] = Complex64::new(1.0, 0.0);
        let cfg = KbcConfig { embedding_dim: 1, ..KbcConfig::default() };
        let mut m3 = KbcModel::init(["g1", "g2", "d"].map(String::from), ["r".to_string()], &cfg).unwrap();
        m3.relation_embedding_mut(0)[0] = Complex64::new(1.0, 0.0);
        m3.entity_embedding_mut(2)[0] = Complex64::new(1.0, 0.0);
        m3.entity_embedding_mut(0)[0] = Complex64::new(2.0, 0.0); // g1 ranked first
        m3.entity_embedding_mut(1)[0] = Complex64::new(1.0, 0.0);
        let cands: BTreeSet<String> = ["g1", "g2"].map(String::from).into();
        let test_first: BTreeSet<_> = [("g1".to_string(), "d".to_string())].into();
        let test_second: BTreeSet<_> = [("g2".to_string(), "d".to_string())].into();
        let opts = EvalOptions { k_values: vec![1, 2], filtered: true };
        let r = evaluate(&m3, "r", &cands, &BTreeSet::new(), &test_first, &opts).unwrap();
        assert_eq!(r.map, 1.0);
        let r = evaluate(&m3, "r", &cands, &BTreeSet::new(), &test_second, &opts).unwrap();
        assert_eq!(r.map, 0.5);
        assert_eq!(r.p_at_k[&1], 0.0);
        assert_eq!(r.r_at_k[&2], 1.0);
        // filtering out g1 as a training pair puts g2 first
        let r = evaluate(&m3, "r", &cands, &test_first, &test_second, &opts).unwrap();
        assert_eq!(r.map, 1.0);
        assert_eq!(evaluate(&m3, "r", &cands, &BTreeSet::new(), &BTreeSet::new(), &opts), Err(KbcError::NoTestPairs));
    }
}
