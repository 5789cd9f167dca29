//! Dependency-path patterns between the two mentions of a pair and their
//! lexicalisations.
//!
//! The canonical index key of a (sentence, pair) is the PATH lexicalisation:
//! the words on the shortest dependency path between the two mention heads,
//! in sentence order, with the mention heads replaced by their entity-type
//! placeholders (`knockdown of GENE affect DISEASE progression`).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{find_mention, mention_head, EntityPair, Sentence};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PatternError {
    #[error("degenerate path: both mentions share head token {0}")]
    DegeneratePath(usize),
    #[error("token index {0} out of range")]
    OutOfRange(usize),
    #[error("head chain from token {0} is not a tree path")]
    Malformed(usize),
    #[error("sentence {doc_id}/{sent_id} has no {entity_type} mention {entity_id}")]
    MissingMention { doc_id: String, sent_id: String, entity_type: String, entity_id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Traversal goes from a child to its head.
    Up,
    /// Traversal goes from a head to its child.
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathEdge {
    pub parent: usize,
    pub child: usize,
    pub deprel: String,
    pub direction: Direction,
}

/// A tree path, ordered from the first endpoint to the second.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepPath {
    pub nodes: Vec<usize>,
    pub edges: Vec<PathEdge>,
}

impl DepPath {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The node that is not the child of any edge on the path.
    pub fn root(&self) -> Option<usize> {
        self.nodes.iter().copied().find(|n| !self.edges.iter().any(|e| e.child == *n))
    }

    /// Arrow notation: `BRAF <-pobj- of <-prep- knockdown`, `affect -dobj-> progression`.
    pub fn render(&self, sentence: &Sentence) -> String {
        self.render_with(sentence, ("<-", "-"), ("-", "->"))
    }

    /// Same as [`DepPath::render`] with typographic arrows: `NF-kb ←compound– activity`.
    pub fn render_unicode(&self, sentence: &Sentence) -> String {
        self.render_with(sentence, ("←", "–"), ("–", "→"))
    }

    fn render_with(&self, sentence: &Sentence, up: (&str, &str), down: (&str, &str)) -> String {
        let Some(&first) = self.nodes.first() else {
            return String::new();
        };
        let mut out = sentence.tokens[first].form.clone();
        for (edge, &next) in self.edges.iter().zip(self.nodes.iter().skip(1)) {
            let (l, r) = match edge.direction {
                Direction::Up => up,
                Direction::Down => down,
            };
            out.push_str(&format!(" {l}{}{r} ", edge.deprel));
            out.push_str(&sentence.tokens[next].form);
        }
        out
    }
}

fn ancestors(sentence: &Sentence, tok: usize) -> Result<Vec<usize>, PatternError> {
    let n = sentence.tokens.len();
    let mut chain = vec![tok];
    let mut cur = tok;
    while let Some(h) = sentence.tokens[cur].head {
        if h >= n || chain.len() > n {
            return Err(PatternError::Malformed(tok));
        }
        chain.push(h);
        cur = h;
    }
    Ok(chain)
}

/// The unique tree path between two tokens, found through their lowest
/// common ancestor.
pub fn shortest_dep_path(sentence: &Sentence, from: usize, to: usize) -> Result<DepPath, PatternError> {
    let n = sentence.tokens.len();
    for t in [from, to] {
        if t >= n {
            return Err(PatternError::OutOfRange(t));
        }
    }
    if from == to {
        return Err(PatternError::DegeneratePath(from));
    }
    let up_from = ancestors(sentence, from)?;
    let up_to = ancestors(sentence, to)?;
    let on_to: BTreeMap<usize, usize> = up_to.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let (lca_pos_from, lca_pos_to) =
        up_from.iter().enumerate().find_map(|(i, t)| on_to.get(t).map(|&j| (i, j))).ok_or(PatternError::Malformed(from))?;

    let mut nodes: Vec<usize> = up_from[..=lca_pos_from].to_vec();
    let mut edges = Vec::with_capacity(lca_pos_from + lca_pos_to);
    for w in up_from[..=lca_pos_from].windows(2) {
        edges.push(PathEdge {
            parent: w[1],
            child: w[0],
            deprel: sentence.tokens[w[0]].deprel.clone(),
            direction: Direction::Up,
        });
    }
    let descent: Vec<usize> = up_to[..lca_pos_to].iter().rev().copied().collect();
    let mut parent = up_from[lca_pos_from];
    for child in descent {
        edges.push(PathEdge { parent, child, deprel: sentence.tokens[child].deprel.clone(), direction: Direction::Down });
        nodes.push(child);
        parent = child;
    }
    Ok(DepPath { nodes, edges })
}

/// One side of the pair, as placed in the sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoint {
    pub head: usize,
    pub start: usize,
    pub end: usize,
    pub entity_type: String,
}

impl Endpoint {
    fn placeholder(&self) -> String {
        self.entity_type.to_uppercase()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSet {
    pub endpoints: [Endpoint; 2],
    pub path: DepPath,
    pub path_root: usize,
    pub sentence_root: usize,
    /// From the sentence root down to the path root; empty when they coincide.
    pub path_between_roots: DepPath,
    pub sentence_root_descendants: Vec<usize>,
    pub path_root_descendants: Vec<usize>,
    /// Lowercased lemmas of the whole sentence.
    pub sentence_keywords: BTreeSet<String>,
    /// Lowercased lemmas strictly between the two mention spans.
    pub between_keywords: BTreeSet<String>,
}

pub fn extract_pattern_set(sentence: &Sentence, pair: &EntityPair) -> Result<PatternSet, PatternError> {
    let endpoint = |ty: &str, id: &str| -> Result<Endpoint, PatternError> {
        let m = find_mention(sentence, ty, id).ok_or_else(|| PatternError::MissingMention {
            doc_id: sentence.doc_id.clone(),
            sent_id: sentence.sent_id.clone(),
            entity_type: ty.to_string(),
            entity_id: id.to_string(),
        })?;
        Ok(Endpoint { head: mention_head(sentence, m), start: m.start_tok, end: m.end_tok, entity_type: ty.to_string() })
    };
    let a = endpoint(&pair.a_type, &pair.a_id)?;
    let b = endpoint(&pair.b_type, &pair.b_id)?;

    let path = shortest_dep_path(sentence, a.head, b.head)?;
    let path_root = path.root().expect("non-empty tree path has a root");
    let sentence_root = sentence.root();
    let path_between_roots =
        if path_root == sentence_root { DepPath::default() } else { shortest_dep_path(sentence, sentence_root, path_root)? };

    let lemma = |i: usize| sentence.tokens[i].lemma.to_lowercase();
    let sentence_keywords = (0..sentence.tokens.len()).map(lemma).collect();
    let (lo, hi) = if a.end <= b.start { (a.end, b.start) } else { (b.end, a.start) };
    let between_keywords = (lo..hi.max(lo)).map(lemma).collect();

    Ok(PatternSet {
        sentence_root_descendants: sentence.children(sentence_root),
        path_root_descendants: sentence.children(path_root),
        endpoints: [a, b],
        path,
        path_root,
        sentence_root,
        path_between_roots,
        sentence_keywords,
        between_keywords,
    })
}

/// Options for the canonical index key.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyConfig {
    /// Use lemmas instead of surface forms.
    #[serde(default)]
    pub use_lemma: bool,
    /// Add the sentence root word to the PATH words.
    #[serde(default)]
    pub include_sentence_root: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Simplification {
    pub key: String,
    pub n_words: usize,
}

impl Simplification {
    fn from_words(words: Vec<String>) -> Self {
        let key = words.join(" ");
        let n_words = key.split_whitespace().count();
        Simplification { key, n_words }
    }
}

enum Rendered {
    Placeholder(String),
    Word(String),
    Hidden,
}

fn render_token(sentence: &Sentence, endpoints: &[Endpoint; 2], tok: usize, use_lemma: bool) -> Rendered {
    for e in endpoints {
        if tok == e.head {
            return Rendered::Placeholder(e.placeholder());
        }
        if e.start <= tok && tok < e.end {
            return Rendered::Hidden;
        }
    }
    let t = &sentence.tokens[tok];
    Rendered::Word(if use_lemma { t.lemma.clone() } else { t.form.clone() })
}

/// Words of `nodes`, sorted by sentence position, mention heads replaced by
/// placeholders. Whitespace inside a token collapses so keys stay
/// single-spaced.
fn lexicalize_nodes(sentence: &Sentence, nodes: &BTreeSet<usize>, endpoints: &[Endpoint; 2], use_lemma: bool) -> Vec<String> {
    nodes
        .iter()
        .filter_map(|&i| match render_token(sentence, endpoints, i, use_lemma) {
            Rendered::Placeholder(p) => Some(p),
            Rendered::Word(w) => {
                let w = w.split_whitespace().collect::<Vec<_>>().join("_");
                (!w.is_empty()).then_some(w)
            }
            Rendered::Hidden => None,
        })
        .collect()
}

/// PATH lexicalisation of an arbitrary path between the pair's endpoints.
pub fn lexicalize_path(sentence: &Sentence, path: &DepPath, endpoints: &[Endpoint; 2], use_lemma: bool) -> Simplification {
    let nodes: BTreeSet<usize> = path.nodes.iter().copied().collect();
    Simplification::from_words(lexicalize_nodes(sentence, &nodes, endpoints, use_lemma))
}

impl PatternSet {
    /// The canonical index key under `config`.
    pub fn simplification(&self, sentence: &Sentence, config: &KeyConfig) -> Simplification {
        let mut nodes: BTreeSet<usize> = self.path.nodes.iter().copied().collect();
        if config.include_sentence_root {
            nodes.insert(self.sentence_root);
        }
        Simplification::from_words(lexicalize_nodes(sentence, &nodes, &self.endpoints, config.use_lemma))
    }

    /// Lowercased lemma rendering of PATH_BETWEEN_ROOTS, e.g. `investigate hypothesis affect`.
    pub fn path_between_roots_lemmas(&self, sentence: &Sentence) -> String {
        let nodes: BTreeSet<usize> = self.path_between_roots.nodes.iter().copied().collect();
        nodes.iter().map(|&i| sentence.tokens[i].lemma.to_lowercase()).collect::<Vec<_>>().join(" ")
    }

    fn annotated_children(&self, sentence: &Sentence, pred: impl Fn(&crate::corpus::Token) -> bool) -> Vec<String> {
        let mut toks: BTreeSet<usize> = BTreeSet::new();
        toks.extend(self.sentence_root_descendants.iter().copied());
        toks.extend(self.path_root_descendants.iter().copied());
        toks.into_iter().filter(|&i| pred(&sentence.tokens[i])).map(|i| sentence.tokens[i].form.clone()).collect()
    }
}

/// Which pattern parts to merge into a display string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayParts {
    pub path_between_roots: bool,
    pub sentence_root: bool,
    pub highlight_path_root: bool,
    pub hedging: bool,
    pub negation: bool,
}

impl DisplayParts {
    pub fn path_only() -> Self {
        DisplayParts {
            path_between_roots: false,
            sentence_root: false,
            highlight_path_root: false,
            hedging: false,
            negation: false,
        }
    }
}

impl Default for DisplayParts {
    fn default() -> Self {
        DisplayParts { path_between_roots: true, sentence_root: false, highlight_path_root: false, hedging: true, negation: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Markers {
    /// Around words contributed only by non-PATH parts.
    pub extra_prefix: String,
    pub extra_suffix: String,
    /// Around the path root when highlighted.
    pub root_prefix: String,
    pub root_suffix: String,
}

impl Default for Markers {
    fn default() -> Self {
        Markers { extra_prefix: "~".into(), extra_suffix: "~".into(), root_prefix: "*".into(), root_suffix: "*".into() }
    }
}

fn is_hedge(t: &crate::corpus::Token) -> bool {
    t.deprel == "aux"
}

fn is_negation(t: &crate::corpus::Token) -> bool {
    t.deprel == "neg"
}

/// Merges the selected parts into one human-readable string, ordered by
/// sentence position, with aux/neg descendants of both roots appended as
/// `+ hedging:[...]` / `+ negation:[...]`.
pub fn lexicalize_display(sentence: &Sentence, set: &PatternSet, parts: &DisplayParts, markers: &Markers) -> String {
    let path_nodes: BTreeSet<usize> = set.path.nodes.iter().copied().collect();
    let mut nodes = path_nodes.clone();
    if parts.path_between_roots {
        nodes.extend(set.path_between_roots.nodes.iter().copied());
    }
    if parts.sentence_root {
        nodes.insert(set.sentence_root);
    }
    let mut words = Vec::with_capacity(nodes.len());
    for &i in &nodes {
        match render_token(sentence, &set.endpoints, i, false) {
            Rendered::Placeholder(p) => words.push(p),
            Rendered::Hidden => {}
            Rendered::Word(w) => {
                if !path_nodes.contains(&i) {
                    words.push(format!("{}{}{}", markers.extra_prefix, w, markers.extra_suffix));
                } else if parts.highlight_path_root && i == set.path_root {
                    words.push(format!("{}{}{}", markers.root_prefix, w, markers.root_suffix));
                } else {
                    words.push(w);
                }
            }
        }
    }
    let mut out = words.join(" ");
    if parts.hedging {
        let hedges = set.annotated_children(sentence, is_hedge);
        if !hedges.is_empty() {
            out.push_str(&format!(" + hedging:[{}]", hedges.join(", ")));
        }
    }
    if parts.negation {
        let negs = set.annotated_children(sentence, is_negation);
        if !negs.is_empty() {
            out.push_str(&format!(" + negation:[{}]", negs.join(", ")));
        }
    }
    out
}
