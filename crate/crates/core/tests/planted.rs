use std::collections::{BTreeMap, BTreeSet};

use relsimp_core::corpus::eligible_sentences;
use relsimp_core::eval::SplitSpec;
use relsimp_core::filters::{FilterConfig, FilterReason};
use relsimp_core::pipeline::{build_index, prepare_split, ExtractOptions};
use relsimp_core::ranking::{select_automatic, Thresholds};
use relsimp_core::synthetic::{PlantedConfig, PlantedCorpus, TemplateKind};

fn small() -> PlantedCorpus {
    PlantedCorpus::generate(&PlantedConfig { n_sentences: 3000, ..PlantedConfig::default() })
}

fn keys_by_kind(corpus: &PlantedCorpus, index: &relsimp_core::PairIndex) -> BTreeMap<String, TemplateKind> {
    let doc_template: BTreeMap<&str, usize> =
        corpus.sentences.iter().zip(&corpus.template_of).map(|(s, t)| (s.doc_id.as_str(), *t)).collect();
    index
        .records()
        .iter()
        .map(|r| (r.simplification_key.clone(), corpus.template_kinds[doc_template[r.doc_id.as_str()]]))
        .collect()
}

#[test]
fn every_template_maps_to_one_key_and_hedged_sentences_are_dropped() {
    let corpus = small();
    let (eligible, report) = eligible_sentences(corpus.sentences.iter().cloned(), &corpus.roles);
    assert_eq!(report.eligible, corpus.sentences.len());
    let (index, extract) = build_index(&eligible, &FilterConfig::shipped_default(), &ExtractOptions::default());
    let hedged = corpus.template_of.iter().filter(|t| corpus.template_kinds[**t] == TemplateKind::Hedged).count();
    assert_eq!(extract.filtered.get(&FilterReason::Keyword).copied().unwrap_or(0), hedged);
    let kinds = keys_by_kind(&corpus, &index);
    assert_eq!(kinds.len(), corpus.template_kinds.len() - 1);
    assert!(kinds.values().all(|k| *k != TemplateKind::Hedged));
}

#[test]
fn high_threshold_recovers_good_templates() {
    let corpus = small();
    let (eligible, _) = eligible_sentences(corpus.sentences.iter().cloned(), &corpus.roles);
    let (index, _) = build_index(&eligible, &FilterConfig::shipped_default(), &ExtractOptions::default());
    let split = prepare_split(&index, &corpus.gold, &SplitSpec::new(0.4, 0.1, 0.5, 7).unwrap()).unwrap();
    let selected: BTreeSet<String> =
        select_automatic(&index, &split.train, &Thresholds { precision: 0.8, recall: 0.0, min_words: 0 })
            .into_iter()
            .map(|m| m.key)
            .collect();
    let good: BTreeSet<String> =
        keys_by_kind(&corpus, &index).into_iter().filter(|(_, k)| *k == TemplateKind::Good).map(|(key, _)| key).collect();
    assert_eq!(selected, good);
}
