//! Seeded synthetic corpus with planted structure.
//!
//! Genes and diseases are split into blocks; gold pairs are a random subset
//! of within-block pairs, negatives a random subset of cross-block pairs.
//! "Good" templates express gold pairs (except for an `noise` fraction drawn
//! from negatives), "bad" templates express pairs drawn uniformly from both,
//! and a hedged template ("may contribute to") is emitted for the filter to
//! remove.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{EntityPair, Mention, Sentence, Token, TypeRoles};

/// One template word: form, lemma, head position, dependency label. The
/// forms `<A>` and `<B>` are the entity slots.
type Word = (&'static str, &'static str, Option<usize>, &'static str);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    Good,
    Bad,
    Hedged,
}

pub struct Template {
    pub kind: TemplateKind,
    words: &'static [Word],
}

const GOOD: &[&[Word]] = &[
    &[
        ("<A>", "<A>", Some(1), "nsubj"),
        ("is", "be", None, "ROOT"),
        ("a", "a", Some(4), "det"),
        ("therapeutic", "therapeutic", Some(4), "amod"),
        ("target", "target", Some(1), "attr"),
        ("for", "for", Some(4), "prep"),
        ("<B>", "<B>", Some(5), "pobj"),
        (".", ".", Some(1), "punct"),
    ],
    &[
        ("Inhibition", "inhibition", Some(3), "nsubj"),
        ("of", "of", Some(0), "prep"),
        ("<A>", "<A>", Some(1), "pobj"),
        ("reduces", "reduce", None, "ROOT"),
        ("<B>", "<B>", Some(5), "compound"),
        ("progression", "progression", Some(3), "dobj"),
        ("in", "in", Some(3), "prep"),
        ("mice", "mouse", Some(6), "pobj"),
        (".", ".", Some(3), "punct"),
    ],
    &[
        ("Knockout", "knockout", Some(3), "nsubj"),
        ("of", "of", Some(0), "prep"),
        ("<A>", "<A>", Some(1), "pobj"),
        ("protects", "protect", None, "ROOT"),
        ("against", "against", Some(3), "prep"),
        ("<B>", "<B>", Some(4), "pobj"),
        (".", ".", Some(3), "punct"),
    ],
    &[
        ("Targeting", "target", Some(2), "csubj"),
        ("<A>", "<A>", Some(0), "dobj"),
        ("improves", "improve", None, "ROOT"),
        ("outcomes", "outcome", Some(2), "dobj"),
        ("in", "in", Some(3), "prep"),
        ("<B>", "<B>", Some(6), "compound"),
        ("patients", "patient", Some(4), "pobj"),
        (".", ".", Some(2), "punct"),
    ],
    &[
        ("<A>", "<A>", Some(1), "compound"),
        ("antagonists", "antagonist", Some(2), "nsubj"),
        ("treat", "treat", None, "ROOT"),
        ("<B>", "<B>", Some(2), "dobj"),
        ("effectively", "effectively", Some(2), "advmod"),
        (".", ".", Some(2), "punct"),
    ],
];

const BAD: &[&[Word]] = &[
    &[
        ("<A>", "<A>", Some(1), "compound"),
        ("expression", "expression", Some(6), "nsubjpass"),
        ("in", "in", Some(1), "prep"),
        ("<B>", "<B>", Some(4), "compound"),
        ("tissue", "tissue", Some(2), "pobj"),
        ("was", "be", Some(6), "auxpass"),
        ("reported", "report", None, "ROOT"),
        (".", ".", Some(6), "punct"),
    ],
    &[
        ("<A>", "<A>", Some(1), "compound"),
        ("levels", "level", Some(3), "nsubjpass"),
        ("were", "be", Some(3), "auxpass"),
        ("elevated", "elevate", None, "ROOT"),
        ("in", "in", Some(3), "prep"),
        ("<B>", "<B>", Some(6), "compound"),
        ("samples", "sample", Some(4), "pobj"),
        (".", ".", Some(3), "punct"),
    ],
    &[
        ("Patients", "patient", Some(3), "nsubj"),
        ("with", "with", Some(0), "prep"),
        ("<B>", "<B>", Some(1), "pobj"),
        ("carried", "carry", None, "ROOT"),
        ("<A>", "<A>", Some(5), "compound"),
        ("variants", "variant", Some(3), "dobj"),
        (".", ".", Some(3), "punct"),
    ],
    &[
        ("<A>", "<A>", Some(2), "compound"),
        ("<B>", "<B>", Some(2), "compound"),
        ("cohort", "cohort", None, "ROOT"),
        (".", ".", Some(2), "punct"),
    ],
    &[
        ("<B>", "<B>", Some(4), "nsubjpass"),
        ("and", "and", Some(0), "cc"),
        ("<A>", "<A>", Some(0), "conj"),
        ("were", "be", Some(4), "auxpass"),
        ("studied", "study", None, "ROOT"),
        (".", ".", Some(4), "punct"),
    ],
];

const HEDGED: &[Word] = &[
    ("<A>", "<A>", Some(2), "nsubj"),
    ("may", "may", Some(2), "aux"),
    ("contribute", "contribute", None, "ROOT"),
    ("to", "to", Some(2), "prep"),
    ("<B>", "<B>", Some(3), "pobj"),
    (".", ".", Some(2), "punct"),
];

impl Template {
    pub fn all(n_good: usize, n_bad: usize) -> Vec<Template> {
        let mut out: Vec<Template> = GOOD.iter().take(n_good).map(|w| Template { kind: TemplateKind::Good, words: w }).collect();
        out.extend(BAD.iter().take(n_bad).map(|w| Template { kind: TemplateKind::Bad, words: w }));
        out.push(Template { kind: TemplateKind::Hedged, words: HEDGED });
        out
    }

    /// Fills the slots and builds a validated sentence.
    pub fn instantiate(&self, doc_id: String, pair: &EntityPair, a_form: &str, b_form: &str) -> Sentence {
        let mut mentions = Vec::with_capacity(2);
        let tokens: Vec<Token> = self
            .words
            .iter()
            .enumerate()
            .map(|(i, (form, lemma, head, dep))| {
                let (form, lemma) = match *form {
                    "<A>" => {
                        mentions.push(Mention {
                            start_tok: i,
                            end_tok: i + 1,
                            entity_type: pair.a_type.clone(),
                            entity_id: pair.a_id.clone(),
                        });
                        (a_form.to_string(), a_form.to_string())
                    }
                    "<B>" => {
                        mentions.push(Mention {
                            start_tok: i,
                            end_tok: i + 1,
                            entity_type: pair.b_type.clone(),
                            entity_id: pair.b_id.clone(),
                        });
                        (b_form.to_string(), b_form.to_string())
                    }
                    _ => (form.to_string(), lemma.to_string()),
                };
                Token { idx: i, form, lemma, head: *head, deprel: dep.to_string() }
            })
            .collect();
        let text = tokens.iter().map(|t| t.form.as_str()).collect::<Vec<_>>().join(" ");
        let sentence = Sentence { doc_id, sent_id: "1".into(), text, tokens, mentions };
        debug_assert!(sentence.validate().is_ok());
        sentence
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedConfig {
    pub n_genes: usize,
    pub n_diseases: usize,
    pub n_blocks: usize,
    /// Probability that a within-block pair is gold.
    pub gold_rate: f64,
    /// Probability that a cross-block pair appears in the corpus.
    pub negative_rate: f64,
    pub n_sentences: usize,
    /// Fraction of good-template sentences drawn from negatives.
    pub noise: f64,
    /// Fraction of sentences using the hedged template.
    pub hedged_rate: f64,
    pub n_good: usize,
    pub n_bad: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n_genes: 60,
            n_diseases: 40,
            n_blocks: 4,
            gold_rate: 0.5,
            negative_rate: 0.5,
            n_sentences: 10_000,
            noise: 0.05,
            hedged_rate: 0.05,
            n_good: GOOD.len(),
            n_bad: BAD.len(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedCorpus {
    pub roles: TypeRoles,
    pub sentences: Vec<Sentence>,
    /// Which template produced each sentence.
    pub template_of: Vec<usize>,
    pub template_kinds: Vec<TemplateKind>,
    pub gold: BTreeSet<EntityPair>,
    pub negatives: BTreeSet<EntityPair>,
}

impl PlantedCorpus {
    pub fn gene(i: usize) -> String {
        format!("GeneID:{i}")
    }

    pub fn disease(j: usize) -> String {
        format!("MESH:D{j:04}")
    }

    pub fn generate(cfg: &PlantedConfig) -> Self {
        assert!(cfg.n_good <= GOOD.len() && cfg.n_bad <= BAD.len(), "not enough templates");
        assert!(cfg.n_blocks >= 2, "need at least two blocks");
        let roles = TypeRoles::new("GENE", "DISEASE");
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let pair = |i: usize, j: usize| EntityPair::new(Self::gene(i), Self::disease(j), "GENE", "DISEASE");

        let mut gold = BTreeSet::new();
        let mut negatives = BTreeSet::new();
        for i in 0..cfg.n_genes {
            for j in 0..cfg.n_diseases {
                if i % cfg.n_blocks == j % cfg.n_blocks {
                    if rng.random_bool(cfg.gold_rate) {
                        gold.insert(pair(i, j));
                    }
                } else if rng.random_bool(cfg.negative_rate) {
                    negatives.insert(pair(i, j));
                }
            }
        }
        let gold_v: Vec<&EntityPair> = gold.iter().collect();
        let neg_v: Vec<&EntityPair> = negatives.iter().collect();
        let all_v: Vec<&EntityPair> = gold.iter().chain(negatives.iter()).collect();

        let templates = Template::all(cfg.n_good, cfg.n_bad);
        let n_regular = templates.len() - 1;
        let mut sentences = Vec::with_capacity(cfg.n_sentences);
        let mut template_of = Vec::with_capacity(cfg.n_sentences);
        for s in 0..cfg.n_sentences {
            let t = if rng.random_bool(cfg.hedged_rate) { n_regular } else { rng.random_range(0..n_regular) };
            let p = match templates[t].kind {
                TemplateKind::Good if !rng.random_bool(cfg.noise) => *gold_v.choose(&mut rng).expect("gold non-empty"),
                TemplateKind::Good => *neg_v.choose(&mut rng).expect("negatives non-empty"),
                _ => *all_v.choose(&mut rng).expect("pairs non-empty"),
            };
            let a_form = p.a_id.replace("GeneID:", "GENE");
            let b_form = p.b_id.replace("MESH:", "");
            sentences.push(templates[t].instantiate(format!("doc{s:06}"), p, &a_form, &b_form));
            template_of.push(t);
        }
        PlantedCorpus {
            roles,
            sentences,
            template_of,
            template_kinds: templates.iter().map(|t| t.kind).collect(),
            gold,
            negatives,
        }
    }

    /// Indices of templates of the given kind.
    pub fn templates_of_kind(&self, kind: TemplateKind) -> Vec<usize> {
        self.template_kinds.iter().enumerate().filter(|(_, k)| **k == kind).map(|(i, _)| i).collect()
    }

    pub fn to_ndjson(&self) -> String {
        self.sentences.iter().map(|s| s.to_record() + "\n").collect()
    }
}
