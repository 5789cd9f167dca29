//! Conversion from CoNLL-U plus a mention side-file to the corpus format.
//!
//! Sentence identity comes from the `# sent_id = ...` comment; the document
//! id from the most recent `# newdoc id = ...` (or `# doc_id = ...`), falling
//! back to `"doc"`. Multiword-token ranges and empty nodes are dropped.
//!
//! The mention side-file is tab-separated, one mention per line:
//! `doc_id  sent_id  start  end  type  id` with 0-based token offsets and an
//! exclusive end. Lines starting with `#` are ignored.

use std::collections::HashMap;

use crate::corpus::{CorpusError, Mention, Sentence, Token};

type SentenceKey = (String, String);

fn conllu_err(line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Conllu { line, message: message.into() }
}

pub fn parse_mentions(side_file: &str) -> Result<HashMap<SentenceKey, Vec<Mention>>, CorpusError> {
    let mut out: HashMap<SentenceKey, Vec<Mention>> = HashMap::new();
    for (i, line) in side_file.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(conllu_err(line_no, format!("mention line has {} columns, expected 6", cols.len())));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| conllu_err(line_no, format!("bad token offset {s:?}")));
        out.entry((cols[0].to_string(), cols[1].to_string())).or_default().push(Mention {
            start_tok: num(cols[2])?,
            end_tok: num(cols[3])?,
            entity_type: cols[4].to_string(),
            entity_id: cols[5].to_string(),
        });
    }
    Ok(out)
}

/// Converts CoNLL-U text into validated corpus sentences, attaching mentions
/// by `(doc_id, sent_id)`.
pub fn convert(conllu: &str, side_file: &str) -> Result<Vec<Sentence>, CorpusError> {
    let mut mentions = parse_mentions(side_file)?;
    let mut out = Vec::new();
    let mut doc_id = "doc".to_string();
    let mut sent_id: Option<String> = None;
    let mut text = String::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut start_line = 1;
    let mut n_anon = 0usize;

    let mut flush = |doc_id: &str,
                     sent_id: &mut Option<String>,
                     text: &mut String,
                     tokens: &mut Vec<Token>,
                     start_line: usize|
     -> Result<(), CorpusError> {
        if tokens.is_empty() {
            *sent_id = None;
            text.clear();
            return Ok(());
        }
        let sid = sent_id.take().unwrap_or_else(|| {
            n_anon += 1;
            n_anon.to_string()
        });
        let key = (doc_id.to_string(), sid.clone());
        let sentence = Sentence {
            doc_id: doc_id.to_string(),
            sent_id: sid,
            text: std::mem::take(text),
            tokens: std::mem::take(tokens),
            mentions: mentions.remove(&key).unwrap_or_default(),
        };
        sentence.validate().map_err(|violation| CorpusError::Validation {
            line: start_line,
            doc_id: sentence.doc_id.clone(),
            sent_id: sentence.sent_id.clone(),
            violation,
        })?;
        out.push(sentence);
        Ok(())
    };

    for (i, raw) in conllu.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&doc_id, &mut sent_id, &mut text, &mut tokens, start_line)?;
            continue;
        }
        if tokens.is_empty() && sent_id.is_none() && text.is_empty() {
            start_line = line_no;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some((k, v)) = comment.split_once('=') {
                let (k, v) = (k.trim(), v.trim());
                match k {
                    "newdoc id" | "doc_id" => doc_id = v.to_string(),
                    "sent_id" => sent_id = Some(v.to_string()),
                    "text" => text = v.to_string(),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(conllu_err(line_no, format!("{} columns, expected 10", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| conllu_err(line_no, format!("bad ID {:?}", cols[0])))?;
        let head: usize = cols[6].parse().map_err(|_| conllu_err(line_no, format!("bad HEAD {:?}", cols[6])))?;
        if id == 0 {
            return Err(conllu_err(line_no, "token ID 0"));
        }
        tokens.push(Token {
            idx: id - 1,
            form: cols[1].to_string(),
            lemma: if cols[2] == "_" { cols[1].to_string() } else { cols[2].to_string() },
            head: if head == 0 { None } else { Some(head - 1) },
            deprel: cols[7].to_string(),
        });
    }
    flush(&doc_id, &mut sent_id, &mut text, &mut tokens, start_line)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# newdoc id = pmid1
# sent_id = 1
# text = BRAF drives melanoma.
1\tBRAF\tBRAF\tPROPN\t_\t_\t2\tnsubj\t_\t_
2\tdrives\tdrive\tVERB\t_\t_\t0\troot\t_\t_
3\tmelanoma\tmelanoma\tNOUN\t_\t_\t2\tobj\t_\tSpaceAfter=No
4\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_

# sent_id = 2
1-2\tcan't\t_\t_\t_\t_\t_\t_\t_\t_
1\tca\tcan\tAUX\t_\t_\t2\taux\t_\t_
2\tn't\tnot\tPART\t_\t_\t0\troot\t_\t_
";

    #[test]
    fn converts_sentences_and_mentions() {
        let side = "pmid1\t1\t0\t1\tGENE\tG:673\npmid1\t1\t2\t3\tDISEASE\tD:1\n";
        let out = convert(SAMPLE, side).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].doc_id, "pmid1");
        assert_eq!(out[0].text, "BRAF drives melanoma.");
        assert_eq!(out[0].tokens[1].head, None);
        assert_eq!(out[0].tokens[0].head, Some(1));
        assert_eq!(out[0].mentions.len(), 2);
        assert_eq!(out[1].tokens.len(), 2);
        assert!(out[1].mentions.is_empty());
    }

    #[test]
    fn rejects_short_rows() {
        let err = convert("1\tx\tx\n", "").unwrap_err();
        assert!(matches!(err, CorpusError::Conllu { line: 1, .. }));
    }
}
