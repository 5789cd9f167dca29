//! Corpus data model and ingestion of pre-parsed, entity-annotated sentences.
//!
//! Each corpus line is one JSON object:
//!
//! ```text
//! {"doc_id": "d1", "sent_id": "s1", "text": "...",
//!  "tokens": [{"i": 0, "form": "BRAF", "lemma": "BRAF", "head": 1, "dep": "nsubj"}, ...],
//!  "mentions": [{"start": 0, "end": 1, "type": "GENE", "id": "GeneID:673"}, ...]}
//! ```
//!
//! `head` is `null` for the sentence root. Dependency edges must form a single
//! tree over the tokens; non-tree inputs are rejected, never repaired.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    #[serde(rename = "i")]
    pub idx: usize,
    pub form: String,
    pub lemma: String,
    /// Parent token index, `None` for the root.
    pub head: Option<usize>,
    #[serde(rename = "dep")]
    pub deprel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    #[serde(rename = "start")]
    pub start_tok: usize,
    /// Exclusive.
    #[serde(rename = "end")]
    pub end_tok: usize,
    #[serde(rename = "type")]
    pub entity_type: String,
    #[serde(rename = "id")]
    pub entity_id: String,
}

impl Mention {
    pub fn contains(&self, tok: usize) -> bool {
        self.start_tok <= tok && tok < self.end_tok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub sent_id: String,
    #[serde(default)]
    pub text: String,
    pub tokens: Vec<Token>,
    #[serde(default)]
    pub mentions: Vec<Mention>,
}

/// Which tree invariant a record violated.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeViolation {
    #[error("empty sentence")]
    Empty,
    #[error("token index {found} at position {position}")]
    TokenIndex { position: usize, found: usize },
    #[error("head out of range: token {token} has head {head}")]
    HeadOutOfRange { token: usize, head: usize },
    #[error("self-loop on token {0}")]
    SelfLoop(usize),
    #[error("no root")]
    NoRoot,
    #[error("multiple roots: {0:?}")]
    MultipleRoots(Vec<usize>),
    #[error("cycle through token {0}")]
    Cycle(usize),
    #[error("mention span {start}..{end} out of range")]
    MentionSpan { start: usize, end: usize },
    #[error("mention with empty entity type")]
    EmptyEntityType,
    #[error("overlapping mentions {0}..{1} and {2}..{3}")]
    OverlappingMentions(usize, usize, usize, usize),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: invalid sentence {doc_id}/{sent_id}: {violation}")]
    Validation { line: usize, doc_id: String, sent_id: String, violation: TreeViolation },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("conllu line {line}: {message}")]
    Conllu { line: usize, message: String },
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Checks every token, tree and mention invariant.
    pub fn validate(&self) -> Result<(), TreeViolation> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(TreeViolation::Empty);
        }
        let mut roots = Vec::new();
        for (position, tok) in self.tokens.iter().enumerate() {
            if tok.idx != position {
                return Err(TreeViolation::TokenIndex { position, found: tok.idx });
            }
            match tok.head {
                None => roots.push(position),
                Some(h) if h >= n => return Err(TreeViolation::HeadOutOfRange { token: position, head: h }),
                Some(h) if h == position => return Err(TreeViolation::SelfLoop(position)),
                Some(_) => {}
            }
        }
        match roots.len() {
            0 => return Err(TreeViolation::NoRoot),
            1 => {}
            _ => return Err(TreeViolation::MultipleRoots(roots)),
        }
        // With exactly one root and n-1 in-range heads, the graph is a tree
        // iff every token reaches the root.
        let mut state = vec![0u8; n]; // 0 unvisited, 1 on stack, 2 reaches root
        for start in 0..n {
            let mut chain = Vec::new();
            let mut cur = start;
            loop {
                match state[cur] {
                    2 => break,
                    1 => return Err(TreeViolation::Cycle(cur)),
                    _ => {}
                }
                state[cur] = 1;
                chain.push(cur);
                match self.tokens[cur].head {
                    None => break,
                    Some(h) => cur = h,
                }
            }
            for c in chain {
                state[c] = 2;
            }
        }

        let mut spans: Vec<(usize, usize)> = Vec::with_capacity(self.mentions.len());
        for m in &self.mentions {
            if m.start_tok >= m.end_tok || m.end_tok > n {
                return Err(TreeViolation::MentionSpan { start: m.start_tok, end: m.end_tok });
            }
            if m.entity_type.is_empty() {
                return Err(TreeViolation::EmptyEntityType);
            }
            spans.push((m.start_tok, m.end_tok));
        }
        spans.sort_unstable();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(TreeViolation::OverlappingMentions(w[0].0, w[0].1, w[1].0, w[1].1));
            }
        }
        Ok(())
    }

    pub fn root(&self) -> usize {
        self.tokens.iter().position(|t| t.head.is_none()).expect("validated sentence has a root")
    }

    /// Direct children of `tok`, in token order.
    pub fn children(&self, tok: usize) -> Vec<usize> {
        self.tokens.iter().filter(|t| t.head == Some(tok)).map(|t| t.idx).collect()
    }

    /// Serializes back to a single corpus line.
    pub fn to_record(&self) -> String {
        serde_json::to_string(self).expect("sentence serializes")
    }
}

/// Parses and validates one corpus line. `line_no` is 1-based and only used
/// for error reporting.
pub fn parse_corpus_record(line: &str, line_no: usize) -> Result<Sentence, CorpusError> {
    let sentence: Sentence = serde_json::from_str(line).map_err(|source| CorpusError::Parse { line: line_no, source })?;
    sentence.validate().map_err(|violation| CorpusError::Validation {
        line: line_no,
        doc_id: sentence.doc_id.clone(),
        sent_id: sentence.sent_id.clone(),
        violation,
    })?;
    Ok(sentence)
}

/// Reads a newline-delimited corpus. Blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Sentence>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io { path: "<corpus>".into(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_corpus_record(&line, i + 1)?);
    }
    Ok(out)
}

pub fn read_corpus_file(path: &Path) -> Result<Vec<Sentence>, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    read_corpus(std::io::BufReader::new(file))
}

/// The two entity-type roles of a run, e.g. (GENE, DISEASE).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeRoles {
    pub type_a: String,
    pub type_b: String,
}

impl TypeRoles {
    pub fn new(type_a: impl Into<String>, type_b: impl Into<String>) -> Self {
        TypeRoles { type_a: type_a.into(), type_b: type_b.into() }
    }
}

/// A direction-normalized entity pair: `a` always plays the `type_a` role.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityPair {
    pub a_id: String,
    pub b_id: String,
    pub a_type: String,
    pub b_type: String,
}

impl EntityPair {
    pub fn new(a_id: impl Into<String>, b_id: impl Into<String>, a_type: impl Into<String>, b_type: impl Into<String>) -> Self {
        EntityPair { a_id: a_id.into(), b_id: b_id.into(), a_type: a_type.into(), b_type: b_type.into() }
    }
}

impl fmt::Display for EntityPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.a_id, self.b_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    MissingTypeA,
    MissingTypeB,
    MultipleTypeA,
    MultipleTypeB,
}

impl SkipReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            SkipReason::MissingTypeA => "missing_type_a",
            SkipReason::MissingTypeB => "missing_type_b",
            SkipReason::MultipleTypeA => "multiple_type_a",
            SkipReason::MultipleTypeB => "multiple_type_b",
        }
    }
}

/// Returns the normalized pair of a sentence that mentions exactly one
/// entity of each role, or why it does not qualify.
pub fn eligible_pair(sentence: &Sentence, roles: &TypeRoles) -> Result<EntityPair, SkipReason> {
    let of_type = |t: &str| -> Vec<&Mention> { sentence.mentions.iter().filter(|m| m.entity_type == t).collect() };
    let a = of_type(&roles.type_a);
    let b = of_type(&roles.type_b);
    match (a.len(), b.len()) {
        (0, _) => Err(SkipReason::MissingTypeA),
        (n, _) if n > 1 => Err(SkipReason::MultipleTypeA),
        (_, 0) => Err(SkipReason::MissingTypeB),
        (_, n) if n > 1 => Err(SkipReason::MultipleTypeB),
        _ => Ok(EntityPair::new(a[0].entity_id.clone(), b[0].entity_id.clone(), roles.type_a.clone(), roles.type_b.clone())),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub seen: usize,
    pub eligible: usize,
    pub skipped: BTreeMap<SkipReason, usize>,
}

/// Keeps sentences with exactly one `type_a` and one `type_b` mention,
/// ordered by `(doc_id, sent_id)`.
pub fn eligible_sentences<I>(corpus: I, roles: &TypeRoles) -> (Vec<(Sentence, EntityPair)>, SkipReport)
where
    I: IntoIterator<Item = Sentence>,
{
    assert_ne!(roles.type_a, roles.type_b, "type roles must differ");
    let mut report = SkipReport::default();
    let mut out = Vec::new();
    for sentence in corpus {
        report.seen += 1;
        match eligible_pair(&sentence, roles) {
            Ok(pair) => out.push((sentence, pair)),
            Err(reason) => *report.skipped.entry(reason).or_default() += 1,
        }
    }
    report.eligible = out.len();
    out.sort_by(|(x, _), (y, _)| (&x.doc_id, &x.sent_id).cmp(&(&y.doc_id, &y.sent_id)));
    (out, report)
}

/// The syntactic head of a mention: the token inside the span whose head
/// lies outside it. Leftmost wins if several qualify.
pub fn mention_head(sentence: &Sentence, mention: &Mention) -> usize {
    (mention.start_tok..mention.end_tok)
        .find(|&i| match sentence.tokens[i].head {
            None => true,
            Some(h) => !mention.contains(h),
        })
        // A span without an outward edge would contain the root, which the
        // first branch above already catches.
        .unwrap_or(mention.start_tok)
}

/// Finds the single mention of the given entity type and id.
pub fn find_mention<'a>(sentence: &'a Sentence, entity_type: &str, entity_id: &str) -> Option<&'a Mention> {
    sentence.mentions.iter().find(|m| m.entity_type == entity_type && m.entity_id == entity_id)
}
