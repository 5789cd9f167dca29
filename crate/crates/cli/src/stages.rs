use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use relsimp_core::clustering::{cluster_simplifications, Clustering};
use relsimp_core::conllu;
use relsimp_core::corpus::{eligible_sentences, read_corpus_file};
use relsimp_core::eval::{msp, pair_level_metrics, tune_precision_threshold, GoldSplit, IntrinsicRow};
use relsimp_core::filters::{load_filter_config, FilterConfig};
use relsimp_core::index::IndexMeta;
use relsimp_core::pairgen::{generate_pairs, read_ndjson, summarize, write_ndjson, GeneratedPair};
use relsimp_core::pipeline::{build_index, extrinsic_runs, format_gold, parse_gold, prepare_split, sha256_hex, ExtractOptions};
use relsimp_core::ranking::{
    all_metrics, build_annotation_queue, keys_by_count, pair_counts, select_automatic, select_baseline, write_ranked_tsv,
    QueueOrdering, QueueParams, SimplificationMetrics,
};
use relsimp_core::session::{Session, SessionStore};
use relsimp_core::synthetic::PlantedCorpus;
use relsimp_core::{EntityPair, PairIndex, VerdictValue};
use relsimp_service::{system_clock, AppState, ServiceConfig, Workspace};

use crate::config::{RunConfig, WorkflowKind};
use crate::{CliError, Stage, StageSummary};

pub const ELIGIBLE: &str = "eligible.ndjson";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const EXTRACT_REPORT: &str = "extract_report.json";
pub const SPLIT: &str = "split.json";
pub const METRICS: &str = "metrics.tsv";
pub const RANKED: &str = "ranked.tsv";
pub const SELECTED: &str = "selected.txt";
pub const RANK_REPORT: &str = "rank_report.json";
pub const CLUSTERS: &str = "clusters.tsv";
pub const CLUSTER_REPORT: &str = "cluster_report.json";
pub const QUEUE: &str = "queue.json";
pub const PAIRS: &str = "pairs.ndjson";
pub const PAIRS_SUMMARY: &str = "pairs_summary.json";
pub const INTRINSIC: &str = "intrinsic.json";
pub const INTRINSIC_TSV: &str = "intrinsic.tsv";
pub const EXTRINSIC: &str = "extrinsic.json";
pub const EXTRINSIC_TSV: &str = "extrinsic.tsv";

struct Run<'a> {
    cfg: &'a RunConfig,
    artifacts: Vec<String>,
}

fn runtime(e: impl ToString) -> CliError {
    CliError::Runtime(e.to_string())
}

fn require<'p>(path: Option<&'p PathBuf>, what: &str) -> Result<&'p Path, CliError> {
    let p = path.ok_or_else(|| CliError::Config(format!("{what} path is not set")))?;
    if !p.exists() {
        return Err(CliError::Config(format!("{what} {} does not exist", p.display())));
    }
    Ok(p)
}

impl<'a> Run<'a> {
    fn path(&self, name: &str) -> PathBuf {
        self.cfg.run_dir.join(name)
    }

    fn prior(&self, name: &str, stage: &str) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        if !p.exists() {
            return Err(CliError::Config(format!("{} is missing; run the {stage} stage first", p.display())));
        }
        Ok(p)
    }

    fn note(&mut self, path: &Path) {
        let shown = path.strip_prefix(&self.cfg.run_dir).unwrap_or(path);
        self.artifacts.push(shown.display().to_string());
    }

    fn write_bytes(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| runtime(format!("{}: {e}", parent.display())))?;
        }
        fs::write(path, bytes).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        self.note(path);
        Ok(())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.write_bytes(&self.path(name), bytes)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn seed(&self) -> u64 {
        self.cfg.seed.expect("checked by run_stage")
    }

    fn index(&self) -> Result<(PairIndex, IndexMeta), CliError> {
        let dir = self.cfg.index_dir();
        if !dir.join(relsimp_core::index::META_FILE).exists() {
            return Err(CliError::Config(format!("no index in {}; run the extract stage first", dir.display())));
        }
        PairIndex::load(&dir).map_err(|e| CliError::Input(e.to_string()))
    }

    fn split(&self) -> Result<Option<GoldSplit>, CliError> {
        let p = self.path(SPLIT);
        if !p.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&p).map_err(runtime)?;
        serde_json::from_str(&text).map(Some).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
    }

    fn required_split(&self) -> Result<GoldSplit, CliError> {
        self.split()?.ok_or_else(|| {
            CliError::Config(format!("{} is missing; run the rank stage with a gold file first", self.path(SPLIT).display()))
        })
    }

    fn clustering(&self, index: &PairIndex) -> Clustering {
        cluster_simplifications(&pair_counts(index), self.cfg.cluster.radius)
    }

    fn sessions(&self) -> Result<Vec<Session>, CliError> {
        let dir = self.cfg.session_dir();
        if !dir.exists() {
            return Ok(Vec::new());
        }
        SessionStore::open(&dir).and_then(|s| s.load_all()).map_err(|e| CliError::Input(e.to_string()))
    }

    fn pairs(&self) -> Result<Vec<GeneratedPair>, CliError> {
        let p = self.prior(PAIRS, "generate")?;
        let text = fs::read_to_string(&p).map_err(runtime)?;
        read_ndjson(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
    }

    fn finish(self, stage: Stage, details: serde_json::Value) -> StageSummary {
        StageSummary { stage: stage.name().to_string(), status: "ok", artifacts: self.artifacts, details }
    }
}

pub fn run(stage: Stage, cfg: &RunConfig) -> Result<StageSummary, CliError> {
    let mut run = Run { cfg, artifacts: Vec::new() };
    let details = match stage {
        Stage::Ingest => ingest(&mut run)?,
        Stage::Extract => extract(&mut run)?,
        Stage::Rank => rank(&mut run)?,
        Stage::Cluster => cluster(&mut run)?,
        Stage::Queue => queue(&mut run)?,
        Stage::Generate => generate(&mut run)?,
        Stage::EvalIntrinsic => eval_intrinsic(&mut run)?,
        Stage::EvalExtrinsic => eval_extrinsic(&mut run)?,
        Stage::Serve => serve(&mut run)?,
        Stage::ConvertConllu => convert_conllu(&mut run)?,
        Stage::Synth => synth(&mut run)?,
    };
    Ok(run.finish(stage, details))
}

fn ingest(run: &mut Run) -> Result<serde_json::Value, CliError> {
    let path = require(run.cfg.corpus.as_ref(), "corpus")?;
    let bytes = fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let corpus = read_corpus_file(path).map_err(|e| CliError::Input(e.to_string()))?;
    let n = corpus.len();
    let (eligible, report) = eligible_sentences(corpus, &run.cfg.roles);
    let mut out = Vec::new();
    for (s, _) in &eligible {
        out.extend(s.to_record().as_bytes());
        out.push(b'\n');
    }
    run.write(ELIGIBLE, &out)?;
    let details = json!({
        "sentences": n,
        "eligible": report.eligible,
        "skipped": report.skipped,
        "roles": run.cfg.roles,
        "corpus_sha256": sha256_hex(&bytes),
    });
    run.write_json(INGEST_REPORT, &details)?;
    Ok(details)
}

fn filters(cfg: &RunConfig) -> Result<FilterConfig, CliError> {
    match &cfg.filters {
        None => Ok(FilterConfig::shipped_default()),
        Some(p) => {
            require(Some(p), "filter config")?;
            load_filter_config(p).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

fn extract(run: &mut Run) -> Result<serde_json::Value, CliError> {
    let eligible_path = run.prior(ELIGIBLE, "ingest")?;
    let report_path = run.prior(INGEST_REPORT, "ingest")?;
    let ingest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).map_err(runtime)?).map_err(|e| CliError::Input(e.to_string()))?;
    let corpus = read_corpus_file(&eligible_path).map_err(|e| CliError::Input(e.to_string()))?;
    let (eligible, _) = eligible_sentences(corpus, &run.cfg.roles);
    let opts = ExtractOptions { key: run.cfg.key_config(), ..ExtractOptions::default() };
    let (index, report) = build_index(&eligible, &filters(run.cfg)?, &opts);
    let meta = IndexMeta::new(run.cfg.roles.clone(), ingest["corpus_sha256"].as_str().unwrap_or_default().to_string());
    let dir = run.cfg.index_dir();
    index.save(&dir, &meta).map_err(runtime)?;
    run.note(&dir.join(relsimp_core::index::RECORDS_FILE));
    run.note(&dir.join(relsimp_core::index::META_FILE));
    let details = json!({
        "report": report,
        "keys": index.keys().count(),
        "pairs": index.pairs().len(),
    });
    run.write_json(EXTRACT_REPORT, &details)?;
    Ok(details)
}

fn count_only_tsv(rows: &[(String, usize)], clustering: &Clustering) -> Vec<u8> {
    let mut out = b"key\tpair_count\ttp\tfp\tprecision_s\trecall_s\tcluster_id\n".to_vec();
    for (key, count) in rows {
        let cluster = clustering.cluster_id(key).map(|c| c.to_string()).unwrap_or_default();
        writeln!(out, "{key}\t{count}\t\t\t\t\t{cluster}").expect("write to vec");
    }
    out
}

fn metrics_tsv(metrics: &[SimplificationMetrics], clustering: &Clustering) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    write_ranked_tsv(metrics, Some(clustering), &mut out).map_err(runtime)?;
    Ok(out)
}

fn rank(run: &mut Run) -> Result<serde_json::Value, CliError> {
    let (index, meta) = run.index()?;
    let cfg = run.cfg;
    let clustering = run.clustering(&index);
    let split = match &cfg.gold {
        Some(_) => {
            let path = require(cfg.gold.as_ref(), "gold")?;
            let text = fs::read_to_string(path).map_err(runtime)?;
            let gold = parse_gold(&text, &meta.roles).map_err(CliError::Input)?;
            let split = prepare_split(&index, &gold, &cfg.split_spec(run.seed())?).map_err(|e| CliError::Input(e.to_string()))?;
            run.write_json(SPLIT, &split)?;
            Some(split)
        }
        None if cfg.workflow.needs_labels() => {
            return Err(CliError::Config(format!("workflow {} needs a gold file", cfg.workflow.name())));
        }
        None => None,
    };

    let mut details = json!({"workflow": cfg.workflow.name(), "keys": index.keys().count()});
    if let Some(split) = &split {
        let all = all_metrics(&index, &split.train);
        run.write(METRICS, &metrics_tsv(&all, &clustering)?)?;
        details["labels"] = json!({
            "train": [split.train.n_pos(), split.train.n_neg()],
            "valid": [split.valid.n_pos(), split.valid.n_neg()],
            "test": [split.test.n_pos(), split.test.n_neg()],
        });
    }

    let mut thresholds = cfg.thresholds.metric_thresholds();
    if let (true, Some(split)) = (cfg.thresholds.tune, &split) {
        let tuned = tune_precision_threshold(&index, &split.train, &split.valid, &thresholds, &cfg.thresholds.tune_grid)
            .map_err(|e| CliError::Input(e.to_string()))?;
        thresholds.precision = tuned.precision_threshold;
        details["tuned"] = serde_json::to_value(&tuned).map_err(runtime)?;
    }

    let selected: Option<Vec<String>> = match cfg.workflow {
        WorkflowKind::Baseline => {
            let keep = select_baseline(&index, cfg.thresholds.min_pair_count);
            let rows: Vec<(String, usize)> = keys_by_count(&index).into_iter().filter(|(k, _)| keep.contains(k)).collect();
            match &split {
                Some(split) => {
                    let metrics: Vec<SimplificationMetrics> =
                        all_metrics(&index, &split.train).into_iter().filter(|m| keep.contains(&m.key)).collect();
                    run.write(RANKED, &metrics_tsv(&metrics, &clustering)?)?;
                }
                None => run.write(RANKED, &count_only_tsv(&rows, &clustering))?,
            }
            Some(rows.into_iter().map(|(k, _)| k).collect())
        }
        WorkflowKind::NoExpertWithLabels | WorkflowKind::ExpertWithLabels => {
            let split = split.as_ref().expect("labels checked above");
            let metrics = select_automatic(&index, &split.train, &thresholds);
            run.write(RANKED, &metrics_tsv(&metrics, &clustering)?)?;
            (cfg.workflow == WorkflowKind::NoExpertWithLabels).then(|| metrics.into_iter().map(|m| m.key).collect())
        }
        WorkflowKind::ExpertNoLabels => {
            match &split {
                Some(split) => run.write(RANKED, &metrics_tsv(&all_metrics(&index, &split.train), &clustering)?)?,
                None => run.write(RANKED, &count_only_tsv(&keys_by_count(&index), &clustering))?,
            }
            None
        }
    };
    if let Some(keys) = &selected {
        let text: String = keys.iter().map(|k| format!("{k}\n")).collect();
        run.write(SELECTED, text.as_bytes())?;
        details["selected"] = json!(keys.len());
    }
    details["thresholds"] = serde_json::to_value(thresholds).map_err(runtime)?;
    run.write_json(RANK_REPORT, &details)?;
    Ok(details)
}

fn cluster(run: &mut Run) -> Result<serde_json::Value, CliError> {
    let (index, _) = run.index()?;
    let clustering = run.clustering(&index);
    let mut out = Vec::new();
    clustering.write_tsv(&mut out).map_err(runtime)?;
    run.write(CLUSTERS, &out)?;
    let details = json!({
        "radius": run.cfg.cluster.radius,
        "keys": index.keys().count(),
        "clusters": clustering.len(),
        "multi_member": clustering.clusters.iter().filter(|c| c.members.len() > 1).count(),
        "largest": clustering.clusters.iter().map(|c| c.members.len()).max().unwrap_or(0),
    });
    run.write_json(CLUSTER_REPORT, &details)?;
    Ok(details)
}

fn queue(run: &mut Run) -> Result<serde_json::Value, CliError> {
    let cfg = run.cfg;
    if !cfg.workflow.is_expert() {
        return Err(CliError::Config(format!("workflow {} has no expert queue", cfg.workflow.name())));
    }
    let (index, _) = run.index()?;
    let split = if cfg.workflow.needs_labels() { Some(run.required_split()?) } else { None };
    let clustering = run.clustering(&index);
    let annotated: BTreeSet<String> =
        run.sessions()?.iter().flat_map(|s| s.annotated_keys().cloned().collect::<Vec<_>>()).collect();
    let params = QueueParams {
        ordering: if cfg.workflow.needs_labels() { QueueOrdering::ByMetrics } else { QueueOrdering::ByCount },
        thresholds: Some(cfg.thresholds.metric_thresholds()),
        session_size: cfg.queue.session_size,
        examples_per_item: cfg.queue.examples_per_item,
        seed: run.seed(),
    };
    let queue = build_annotation_queue(&index, &params, split.as_ref().map(|s| &s.train), Some(&clustering), &annotated)
        .map_err(|e| CliError::Config(e.to_string()))?;
    run.write_json(QUEUE, &queue)?;
    Ok(json!({"items": queue.len(), "previously_annotated": annotated.len()}))
}

fn read_key_file(path: &Path) -> Result<BTreeSet<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(text.lines().map(str::trim_end).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

fn accepted_keys(run: &Run) -> Result<(BTreeSet<String>, &'static str), CliError> {
    if let Some(p) = &run.cfg.generate.accepted {
        require(Some(p), "accepted key file")?;
        return Ok((read_key_file(p)?, "key_file"));
    }
    if run.cfg.workflow.is_expert() {
        let sessions = run.sessions()?;
        if sessions.is_empty() {
            return Err(CliError::Config(format!("no sessions in {}", run.cfg.session_dir().display())));
        }
        let keys = sessions.iter().flat_map(|s| s.accepted_keys()).collect();
        return Ok((keys, "sessions"));
    }
    Ok((read_key_file(&run.prior(SELECTED, "rank")?)?, "selection"))
}

fn generate(run: &mut Run) -> Result<serde_json::Value, CliError> {
    let (index, _) = run.index()?;
    let (accepted, source) = accepted_keys(run)?;
    let seed_positives = run.split()?.map(|s| s.train.positives).unwrap_or_default();
    let clustering = run.clustering(&index);
    let expansion = run.cfg.cluster.expand.then_some(&clustering);
    let pairs = generate_pairs(&index, &accepted, &seed_positives, expansion).map_err(runtime)?;
    let used: BTreeSet<&String> = pairs.iter().flat_map(|g| &g.supporting_keys).collect();
    let mut out = Vec::new();
    write_ndjson(&pairs, &mut out).map_err(runtime)?;
    run.write(PAIRS, &out)?;
    let summary = summarize(&accepted, used.len(), &pairs);
    let details = json!({"source": source, "expanded": run.cfg.cluster.expand, "summary": summary});
    run.write_json(PAIRS_SUMMARY, &details)?;
    Ok(details)
}

fn method_name(cfg: &RunConfig) -> String {
    match cfg.workflow {
        WorkflowKind::Baseline => format!("baseline (pair count >= {})", cfg.thresholds.min_pair_count),
        WorkflowKind::NoExpertWithLabels => format!("no expert, labels (precision >= {})", cfg.thresholds.precision),
        WorkflowKind::ExpertNoLabels => "expert, no labels".to_string(),
        WorkflowKind::ExpertWithLabels => format!("expert, labels (precision >= {})", cfg.thresholds.precision),
    }
}

fn eval_intrinsic(run: &mut Run) -> Result<serde_json::Value, CliError> {
    let split = run.required_split()?;
    let generated = run.pairs()?;
    let predicted: BTreeSet<EntityPair> = generated.iter().map(|g| g.pair.clone()).collect();
    let metrics = pair_level_metrics(&predicted, &split.test.positives, &split.test.negatives)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let session_msp = if run.cfg.workflow.is_expert() {
        let values: Vec<VerdictValue> = run.sessions()?.iter().flat_map(|s| s.current_values()).collect();
        msp(&values).ok()
    } else {
        None
    };
    let novel = generated.iter().filter(|g| g.novel).count();
    let row = IntrinsicRow::new(method_name(run.cfg), session_msp, novel, &metrics);
    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let tsv = format!(
        "selection_method\tmsp\tnew_pairs\trecall\tspecificity\tprecision\tf_score\n{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
        row.selection_method,
        fmt_opt(row.msp),
        row.new_pairs,
        row.recall,
        row.specificity,
        row.precision,
        row.f_score
    );
    run.write(INTRINSIC_TSV, tsv.as_bytes())?;
    let details = json!({
        "rows": [row],
        "metrics": metrics,
        "test": {"positives": split.test.n_pos(), "negatives": split.test.n_neg()},
        "generated_pairs": generated.len(),
    });
    run.write_json(INTRINSIC, &details)?;
    Ok(details)
}

fn eval_extrinsic(run: &mut Run) -> Result<serde_json::Value, CliError> {
    let (index, _) = run.index()?;
    let split = run.required_split()?;
    let generated = run.pairs()?;
    let cfg = run.cfg;
    let runs = extrinsic_runs(
        &index.pairs(),
        &split.train.positives,
        &generated,
        &split.test.positives,
        &cfg.kbc.relation,
        &cfg.kbc.model_config(run.seed()),
        &cfg.kbc.eval_options(),
    )
    .map_err(runtime)?;

    let mut tsv = String::from("training\tnew_pairs\tmap");
    for k in &cfg.kbc.k_values {
        tsv.push_str(&format!("\tp@{k}"));
    }
    for k in &cfg.kbc.k_values {
        tsv.push_str(&format!("\tr@{k}"));
    }
    tsv.push('\n');
    let mut rows = Vec::new();
    for r in &runs {
        tsv.push_str(&format!("{}\t{}\t{}", r.training, r.new_pairs, r.metrics.map));
        for k in &cfg.kbc.k_values {
            tsv.push_str(&format!("\t{}", r.metrics.p_at_k.get(k).map(|v| v.to_string()).unwrap_or_default()));
        }
        for k in &cfg.kbc.k_values {
            tsv.push_str(&format!("\t{}", r.metrics.r_at_k.get(k).map(|v| v.to_string()).unwrap_or_default()));
        }
        tsv.push('\n');
        let name = format!("kbc_{}.json", r.training.replace('+', "_"));
        let checkpoint = r.model.as_ref().expect("trained").to_checkpoint();
        run.write_json(&name, &checkpoint)?;
        rows.push(json!({
            "training": r.training,
            "training_pairs": r.training_pairs,
            "new_pairs": r.new_pairs,
            "final_loss": r.final_loss,
            "map": r.metrics.map,
            "p_at_k": r.metrics.p_at_k,
            "r_at_k": r.metrics.r_at_k,
            "checkpoint": name,
        }));
    }
    run.write(EXTRINSIC_TSV, tsv.as_bytes())?;
    let details = json!({
        "relation": cfg.kbc.relation,
        "queries": runs.first().map_or(0, |r| r.metrics.average_precision.len()),
        "filtered": cfg.kbc.filtered,
        "p_r_scope": "pooled over all (candidate, query) predictions; map averages per-query AveP",
        "runs": rows,
    });
    run.write_json(EXTRINSIC, &details)?;
    Ok(details)
}

fn serve(run: &mut Run) -> Result<serde_json::Value, CliError> {
    let (index, _) = run.index()?;
    let split = run.split()?;
    let cfg = run.cfg;
    let workspace = Workspace {
        clustering: Some(run.clustering(&index)),
        labels: split.as_ref().map(|s| s.train.clone()),
        seed_positives: split.map(|s| s.train.positives).unwrap_or_default(),
        expand_clusters: cfg.cluster.expand,
        index,
    };
    let mut service = ServiceConfig::new(cfg.session_dir(), cfg.run_dir.join("exports"));
    service.token = cfg.serve.token.clone();
    let state = AppState::open(workspace, service, system_clock()).map_err(|e| CliError::Input(e.to_string()))?;
    let rt = tokio::runtime::Runtime::new().map_err(runtime)?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&cfg.serve.addr)
            .await
            .map_err(|e| CliError::Config(format!("bind {}: {e}", cfg.serve.addr)))?;
        eprintln!("listening on {}", listener.local_addr().map_err(runtime)?);
        relsimp_service::serve(listener, Arc::new(state)).await.map_err(runtime)
    })?;
    Ok(json!({"addr": cfg.serve.addr}))
}

fn convert_conllu(run: &mut Run) -> Result<serde_json::Value, CliError> {
    let c = &run.cfg.conllu;
    let input = require(c.input.as_ref(), "conllu.input")?;
    let mentions = require(c.mentions.as_ref(), "conllu.mentions")?;
    let output = c.output.clone().ok_or_else(|| CliError::Config("conllu.output path is not set".into()))?;
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())));
    let sentences = conllu::convert(&read(input)?, &read(mentions)?).map_err(|e| CliError::Input(e.to_string()))?;
    let mut out = Vec::new();
    for s in &sentences {
        out.extend(s.to_record().as_bytes());
        out.push(b'\n');
    }
    run.write_bytes(&output, &out)?;
    Ok(json!({"sentences": sentences.len()}))
}

fn synth(run: &mut Run) -> Result<serde_json::Value, CliError> {
    let cfg = run.cfg;
    let corpus_path = cfg.corpus.clone().ok_or_else(|| CliError::Config("corpus path is not set".into()))?;
    let gold_path = cfg.gold.clone().ok_or_else(|| CliError::Config("gold path is not set".into()))?;
    let planted = PlantedCorpus::generate(&cfg.synth);
    run.write_bytes(&corpus_path, planted.to_ndjson().as_bytes())?;
    run.write_bytes(&gold_path, format_gold(&planted.gold).as_bytes())?;
    let mut kinds: BTreeMap<String, usize> = BTreeMap::new();
    for t in &planted.template_of {
        *kinds.entry(format!("{:?}", planted.template_kinds[*t]).to_lowercase()).or_default() += 1;
    }
    Ok(json!({
        "sentences": planted.sentences.len(),
        "gold": planted.gold.len(),
        "negatives": planted.negatives.len(),
        "sentences_by_template_kind": kinds,
    }))
}
