//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion;
//! run with `cargo test -p relsimp-cli --test acceptance -- --nocapture`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tower::ServiceExt;

use relsimp_core::clustering::cluster_simplifications;
use relsimp_core::corpus::{eligible_sentences, read_corpus_file};
use relsimp_core::eval::{msp, pair_level_metrics, GoldSplit, SplitSpec};
use relsimp_core::filters::FilterConfig;
use relsimp_core::index::IndexRecord;
use relsimp_core::kbc::{evaluate, EvalOptions, KbcConfig, KbcModel, Sample};
use relsimp_core::pairgen::generate_pairs;
use relsimp_core::pattern::{extract_pattern_set, KeyConfig};
use relsimp_core::pipeline::{build_index, extrinsic_runs, prepare_split, ExtractOptions};
use relsimp_core::ranking::{select_automatic, simplification_metrics, Thresholds};
use relsimp_core::synthetic::{PlantedConfig, PlantedCorpus, TemplateKind};
use relsimp_core::{EntityPair, LabelledPairs, PairIndex, TypeRoles, VerdictValue};
use relsimp_service::{router, AppState, ServiceConfig, Workspace};

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Check {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn planted(n_sentences: usize, seed: u64) -> (PlantedCorpus, PairIndex) {
    let corpus = PlantedCorpus::generate(&PlantedConfig { n_sentences, seed, ..PlantedConfig::default() });
    let pairs: Vec<_> = corpus
        .sentences
        .iter()
        .cloned()
        .map(|s| {
            let p = relsimp_core::corpus::eligible_pair(&s, &corpus.roles).expect("planted sentences are eligible");
            (s, p)
        })
        .collect();
    let (index, _) = build_index(&pairs, &FilterConfig::shipped_default(), &ExtractOptions::default());
    (corpus, index)
}

fn good_keys(corpus: &PlantedCorpus, index: &PairIndex) -> BTreeSet<String> {
    let good: BTreeSet<usize> = corpus.templates_of_kind(TemplateKind::Good).into_iter().collect();
    let mut keys = BTreeSet::new();
    for r in index.records() {
        let doc: usize = r.doc_id.trim_start_matches(|c: char| !c.is_ascii_digit()).parse().expect("numbered doc id");
        if good.contains(&corpus.template_of[doc]) {
            keys.insert(r.simplification_key.clone());
        }
    }
    keys
}

fn worked_formulas() -> Check {
    let start = Instant::now();
    let pos: BTreeSet<EntityPair> =
        (0..100).map(|i| EntityPair::new(format!("g{i}"), format!("d{i}"), "GENE", "DISEASE")).collect();
    let neg: BTreeSet<EntityPair> =
        (100..1100).map(|i| EntityPair::new(format!("g{i}"), format!("d{i}"), "GENE", "DISEASE")).collect();
    // The key co-occurs with 10% of the positives and 10% of the negatives.
    let records: Vec<IndexRecord> = pos
        .iter()
        .take(10)
        .chain(neg.iter().take(100))
        .enumerate()
        .map(|(i, p)| IndexRecord {
            doc_id: format!("d{i}"),
            sent_id: "1".into(),
            pair: p.clone(),
            simplification_key: "GENE k DISEASE".into(),
            display: "GENE k DISEASE".into(),
            sentence_text: String::new(),
        })
        .collect();
    let index = PairIndex::from_records(records).map_err(|e| e.to_string())?;
    let labels = LabelledPairs::new(pos, neg).map_err(|e| e.to_string())?;
    let m = simplification_metrics(&index, "GENE k DISEASE", &labels);
    ensure(m.precision_s == 0.5, || format!("precision_s = {}", m.precision_s))?;

    let mut verdicts = vec![VerdictValue::Yes; 63];
    verdicts.extend(std::iter::repeat_n(VerdictValue::No, 120));
    verdicts.extend(std::iter::repeat_n(VerdictValue::Maybe, 17));
    let v = msp(&verdicts).map_err(|e| e.to_string())?;
    ensure(v == 0.315, || format!("msp = {v}"))?;
    within(start.elapsed(), Duration::from_secs(1))
}

fn lexicalisation_goldens() -> Check {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/worked_sentences.ndjson");
    let corpus = read_corpus_file(&path).map_err(|e| e.to_string())?;
    let (eligible, _) = eligible_sentences(corpus, &TypeRoles::new("GENE", "DISEASE"));
    ensure(eligible.len() == 2, || format!("{} eligible sentences", eligible.len()))?;
    let (s1, p1) = &eligible[0];
    let key = extract_pattern_set(s1, p1).map_err(|e| e.to_string())?.simplification(s1, &KeyConfig::default()).key;
    ensure(key == "knockdown of GENE affect DISEASE progression", || format!("key {key:?}"))?;
    let (s2, p2) = &eligible[1];
    let set = extract_pattern_set(s2, p2).map_err(|e| e.to_string())?;
    let unicode = set.path.render_unicode(s2);
    ensure(unicode == "NF-kb ←compound– activity –prep→ in –pobj→ patients –compound→ cancer", || {
        format!("path {unicode:?}")
    })?;
    let ascii = set.path.render(s2);
    ensure(ascii == "NF-kb <-compound- activity -prep-> in -pobj-> patients -compound-> cancer", || format!("path {ascii:?}"))
}

fn lev(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// All-pairs union-find partition as sorted member lists.
fn brute_partition(keys: &[String], radius: usize) -> BTreeSet<Vec<String>> {
    let mut parent: Vec<usize> = (0..keys.len()).collect();
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            if lev(&keys[i], &keys[j]) <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(k.clone());
    }
    groups
        .into_values()
        .map(|mut v| {
            v.sort();
            v
        })
        .collect()
}

fn clustering() -> Check {
    let start = Instant::now();
    let example = ["GENE effects on DISEASE", "GENE effect on DISEASE", "GENE effects in DISEASE"];
    let mut keys: BTreeMap<String, usize> = example.iter().map(|k| (k.to_string(), 3)).collect();
    keys.insert("GENE binds DISEASE".into(), 2);
    keys.insert("DISEASE caused by GENE".into(), 1);
    let c = cluster_simplifications(&keys, 2);
    let ids: BTreeSet<_> = example.iter().map(|k| c.cluster_id(k)).collect();
    ensure(ids.len() == 1 && !ids.contains(&None), || format!("example spread over {ids:?}"))?;
    let members = c.cluster_of(example[0]).map_or(0, |cl| cl.members.len());
    ensure(members == 3, || format!("example cluster has {members} members"))?;

    let alphabet: Vec<char> = "abcde ".chars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [10usize, 50, 200, 500] {
        let mut keys: BTreeMap<String, usize> = BTreeMap::new();
        while keys.len() < n {
            let len = rng.random_range(3..9);
            let k: String = (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
            keys.insert(k, rng.random_range(1..10));
        }
        let list: Vec<String> = keys.keys().cloned().collect();
        for radius in [1, 2] {
            let got: BTreeSet<Vec<String>> =
                cluster_simplifications(&keys, radius).clusters.iter().map(|cl| cl.members.iter().cloned().collect()).collect();
            ensure(got == brute_partition(&list, radius), || format!("partition differs at n={n} radius={radius}"))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(10))
}

/// Confusion counts and metrics from a direct scan of the index records.
fn brute_intrinsic(index: &PairIndex, accepted: &BTreeSet<String>, test: &LabelledPairs) -> [f64; 4] {
    let mut predicted = BTreeSet::new();
    for r in index.records() {
        if accepted.contains(&r.simplification_key) {
            predicted.insert(&r.pair);
        }
    }
    let tp = test.positives.iter().filter(|p| predicted.contains(p)).count() as f64;
    let fp = test.negatives.iter().filter(|p| predicted.contains(p)).count() as f64;
    let (np, nn) = (test.n_pos() as f64, test.n_neg() as f64);
    let recall = tp / np;
    let specificity = (nn - fp) / nn;
    let precision = if tp + fp == 0.0 { 0.0 } else { (tp / np) / (tp / np + fp / nn) };
    let f = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    [recall, specificity, precision, f]
}

fn split_of(index: &PairIndex, corpus: &PlantedCorpus, seed: u64) -> Result<GoldSplit, String> {
    let spec = SplitSpec::new(0.4, 0.1, 0.5, seed).map_err(|e| e.to_string())?;
    prepare_split(index, &corpus.gold, &spec).map_err(|e| e.to_string())
}

fn threshold(precision: f64) -> Thresholds {
    Thresholds { precision, recall: 0.0, min_words: 0 }
}

fn planted_pipeline() -> Check {
    let start = Instant::now();
    let (corpus, index) = planted(10_000, 42);
    let split = split_of(&index, &corpus, 1)?;
    let selected: BTreeSet<String> = select_automatic(&index, &split.train, &threshold(0.8)).into_iter().map(|m| m.key).collect();
    let good = good_keys(&corpus, &index);
    ensure(good.len() == 5, || format!("{} good keys", good.len()))?;
    ensure(selected == good, || format!("selected {selected:?}, good {good:?}"))?;

    let generated = generate_pairs(&index, &selected, &split.train.positives, None).map_err(|e| e.to_string())?;
    let predicted: BTreeSet<EntityPair> = generated.into_iter().map(|g| g.pair).collect();
    let m = pair_level_metrics(&predicted, &split.test.positives, &split.test.negatives).map_err(|e| e.to_string())?;
    let got = [m.recall, m.specificity, m.precision, m.f_score];
    let want = brute_intrinsic(&index, &selected, &split.test);
    for (g, w) in got.iter().zip(&want) {
        ensure((g - w).abs() <= 1e-12, || format!("metrics {got:?} vs oracle {want:?}"))?;
    }
    within(start.elapsed(), Duration::from_secs(30))
}

fn threshold_monotonicity() -> Check {
    let (corpus, index) = planted(10_000, 42);
    let split = split_of(&index, &corpus, 1)?;
    let mut prev: Option<(f64, f64, f64)> = None;
    for step in 0..=8 {
        let thr = 0.4 + 0.05 * step as f64;
        let keys: BTreeSet<String> = select_automatic(&index, &split.train, &threshold(thr)).into_iter().map(|m| m.key).collect();
        let predicted: BTreeSet<EntityPair> = generate_pairs(&index, &keys, &BTreeSet::new(), None)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|g| g.pair)
            .collect();
        let m = pair_level_metrics(&predicted, &split.test.positives, &split.test.negatives).map_err(|e| e.to_string())?;
        if let Some((pt, pp, pr)) = prev {
            ensure(m.precision >= pp, || format!("precision fell from {pp} at {pt} to {} at {thr}", m.precision))?;
            ensure(m.recall <= pr, || format!("recall rose from {pr} at {pt} to {} at {thr}", m.recall))?;
        }
        prev = Some((thr, m.precision, m.recall));
    }
    Ok(())
}

fn random_model(dim: usize, seed: u64) -> Result<KbcModel, String> {
    let config = KbcConfig { embedding_dim: dim, seed, ..KbcConfig::default() };
    KbcModel::init((0..6).map(|i| format!("e{i}")), ["r0".to_string(), "r1".to_string()], &config).map_err(|e| e.to_string())
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize) -> Vec<Sample> {
    (0..n)
        .map(|_| Sample {
            subject: rng.random_range(0..6),
            relation: rng.random_range(0..2),
            object: rng.random_range(0..6),
            label: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
        })
        .collect()
}

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-4 * analytic.abs().max(numeric.abs()) + 1e-8
}

fn oracle_score(model: &KbcModel, s: usize, r: usize, o: usize) -> f64 {
    let (es, wr, eo) = (model.entity_embedding(s), model.relation_embedding(r), model.entity_embedding(o));
    let mut total = Complex64::new(0.0, 0.0);
    for d in 0..model.dim() {
        total += wr[d] * es[d] * eo[d].conj();
    }
    total.re
}

fn oracle_average_precision(ranked: &[&String], relevant: &BTreeSet<&String>) -> f64 {
    let mut precisions = Vec::new();
    for (i, c) in ranked.iter().enumerate() {
        if relevant.contains(c) {
            precisions.push((precisions.len() + 1) as f64 / (i + 1) as f64);
        }
    }
    precisions.iter().sum::<f64>() / relevant.len() as f64
}

fn complex_numerics() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-6;
    for trial in 0..20u64 {
        let dim = 1 + (trial as usize % 8);
        let mut model = random_model(dim, trial)?;
        let batch = random_batch(&mut rng, 8);
        let l2 = 0.01;
        let grads = model.batch_gradients(&batch, l2);
        for (is_entity, table) in [(true, &grads.entities), (false, &grads.relations)] {
            for (&i, g) in table {
                for d in 0..dim {
                    for part in 0..2 {
                        let nudge = |m: &mut KbcModel, delta: f64| {
                            let v = if is_entity { m.entity_embedding_mut(i) } else { m.relation_embedding_mut(i) };
                            if part == 0 {
                                v[d].re += delta;
                            } else {
                                v[d].im += delta;
                            }
                        };
                        nudge(&mut model, h);
                        let up = model.batch_loss(&batch, l2);
                        nudge(&mut model, -2.0 * h);
                        let down = model.batch_loss(&batch, l2);
                        nudge(&mut model, h);
                        let numeric = (up - down) / (2.0 * h);
                        let analytic = if part == 0 { g[d].re } else { g[d].im };
                        ensure(close(analytic, numeric), || {
                            format!("trial {trial}: gradient {analytic} vs finite difference {numeric}")
                        })?;
                    }
                }
            }
        }
        for s in 0..6 {
            for o in 0..6 {
                for r in 0..2 {
                    let (got, want) = (model.score_ix(s, r, o), oracle_score(&model, s, r, o));
                    ensure((got - want).abs() <= 1e-12, || format!("score {got} vs oracle {want}"))?;
                }
            }
        }
    }

    let model = random_model(8, 99)?;
    let names: Vec<String> = (0..6).map(|i| format!("e{i}")).collect();
    let candidates: BTreeSet<String> = names[..4].iter().cloned().collect();
    let train: BTreeSet<(String, String)> = [(names[0].clone(), names[4].clone())].into();
    let test: BTreeSet<(String, String)> =
        [(names[1].clone(), names[4].clone()), (names[2].clone(), names[4].clone()), (names[3].clone(), names[5].clone())].into();
    let metrics = evaluate(&model, "r0", &candidates, &train, &test, &EvalOptions::default()).map_err(|e| e.to_string())?;
    let mut aps = Vec::new();
    for query in [&names[4], &names[5]] {
        let mut ranked: Vec<&String> = candidates.iter().filter(|c| !train.contains(&((*c).clone(), query.clone()))).collect();
        ranked.sort_by(|a, b| {
            let sa = model.score(a, "r0", query).unwrap();
            let sb = model.score(b, "r0", query).unwrap();
            sb.total_cmp(&sa).then_with(|| a.cmp(b))
        });
        let relevant: BTreeSet<&String> = test.iter().filter(|(_, o)| o == query).map(|(s, _)| s).collect();
        let ap = oracle_average_precision(&ranked, &relevant);
        let got = metrics.average_precision[query];
        ensure((got - ap).abs() <= 1e-10, || format!("AveP {got} vs oracle {ap} for {query}"))?;
        aps.push(ap);
    }
    let map = aps.iter().sum::<f64>() / aps.len() as f64;
    ensure((metrics.map - map).abs() <= 1e-10, || format!("mAP {} vs oracle {map}", metrics.map))?;
    within(start.elapsed(), Duration::from_secs(60))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn augmentation_direction() -> Check {
    let (corpus, index) = planted(4_000, 42);
    let (mut seed_only, mut augmented) = (Vec::new(), Vec::new());
    for seed in 0..5u64 {
        let split = split_of(&index, &corpus, seed)?;
        let accepted: BTreeSet<String> =
            select_automatic(&index, &split.train, &threshold(0.8)).into_iter().map(|m| m.key).collect();
        let generated = generate_pairs(&index, &accepted, &split.train.positives, None).map_err(|e| e.to_string())?;
        let config = KbcConfig { epochs: 100, seed, ..KbcConfig::default() };
        let runs = extrinsic_runs(
            &index.pairs(),
            &split.train.positives,
            &generated,
            &split.test.positives,
            "assoc",
            &config,
            &EvalOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        seed_only.push(runs[0].metrics.map);
        augmented.push(runs[1].metrics.map);
    }
    let (a, b) = (median(seed_only.clone()), median(augmented.clone()));
    println!("    median mAP seed-only {a:.4} {seed_only:?}; seed+generated {b:.4} {augmented:?}");
    ensure(b >= a, || format!("median mAP seed+generated {b} < seed-only {a}"))
}

fn relsimp(dir: &Path, args: &[&str]) -> Check {
    let out = Command::new(env!("CARGO_BIN_EXE_relsimp")).current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("relsimp {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
}

fn pipeline(dir: &Path) -> Check {
    let common = ["--corpus", "corpus.ndjson", "--gold", "gold.tsv", "--set", "synth.n_sentences=3000", "--set", "kbc.epochs=20"];
    let seeded = |stage: &'static str| -> Vec<&str> {
        let mut v = vec![stage];
        v.extend(common);
        v.extend(["--seed", "7"]);
        v
    };
    for stage in ["synth", "ingest", "extract", "cluster"] {
        let mut v = vec![stage];
        v.extend(common);
        relsimp(dir, &v)?;
    }
    relsimp(dir, &seeded("rank"))?;
    let mut gen = vec!["generate"];
    gen.extend(common);
    relsimp(dir, &gen)?;
    relsimp(dir, &seeded("eval-intrinsic"))?;
    relsimp(dir, &seeded("eval-extrinsic"))
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = std::fs::read(&path).expect("readable file");
                out.insert(path.strip_prefix(root).expect("under root").to_path_buf(), bytes);
            }
        }
    }
    out
}

fn determinism() -> Check {
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    pipeline(a.path())?;
    pipeline(b.path())?;
    let (fa, fb) = (files(a.path()), files(b.path()));
    ensure(fa.len() > 15, || format!("only {} artifacts", fa.len()))?;
    ensure(fa.keys().eq(fb.keys()), || "artifact lists differ".into())?;
    for (path, bytes) in &fa {
        ensure(fb[path] == *bytes, || format!("{} differs between runs", path.display()))?;
    }
    Ok(())
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<serde_json::Value>) -> (StatusCode, serde_json::Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .expect("request");
    let resp = app.clone().oneshot(req).await.expect("infallible");
    let status = resp.status();
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null))
}

fn service_headless() -> Check {
    let (corpus, index) = planted(2_000, 3);
    let split = split_of(&index, &corpus, 3)?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let workspace = Workspace {
        labels: Some(split.train.clone()),
        seed_positives: split.train.positives.clone(),
        index,
        ..Workspace::default()
    };
    let state = AppState::open(
        workspace,
        ServiceConfig::new(dir.path().join("sessions"), dir.path().join("exports")),
        relsimp_service::system_clock(),
    )
    .map_err(|e| e.to_string())?;
    let app = router(Arc::new(state));
    let rt = tokio::runtime::Builder::new_current_thread().build().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let create = serde_json::json!({
            "workflow": "expert_with_labels", "session_size": 20, "examples_per_item": 3,
            "thresholds": {"precision": 0.6, "recall": 0.0, "min_words": 0}, "seed": 1
        });
        let (status, session) = call(&app, "POST", "/sessions", Some(create)).await;
        ensure(status == StatusCode::CREATED, || format!("create returned {status}: {session}"))?;
        let id = session["id"].as_str().unwrap_or_default().to_string();
        let (_, items) = call(&app, "GET", &format!("/sessions/{id}/items?n=50"), None).await;
        let items = items["items"].as_array().cloned().unwrap_or_default();
        ensure(!items.is_empty(), || "no queued items".into())?;
        for item in &items {
            let body = serde_json::json!({"key": item["key"], "value": "Yes"});
            let (status, ack) = call(&app, "POST", &format!("/sessions/{id}/verdicts"), Some(body)).await;
            ensure(status == StatusCode::OK, || format!("verdict returned {status}: {ack}"))?;
        }
        let (status, export) = call(&app, "GET", &format!("/sessions/{id}/export"), None).await;
        ensure(status == StatusCode::OK, || format!("export returned {status}"))?;
        let pairs = export["summary"]["pairs"].as_u64().unwrap_or(0);
        ensure(pairs > 0, || format!("export produced no pairs: {export}"))
    })
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("worked formulas: precision_s 0.5, MSP 0.315", worked_formulas),
        ("lexicalisation goldens", lexicalisation_goldens),
        ("clustering: example cluster and brute-force partition", clustering),
        ("planted pipeline: exact selection and intrinsic oracle", planted_pipeline),
        ("threshold sweep monotonicity", threshold_monotonicity),
        ("ComplEx gradients, scores and AveP/mAP", complex_numerics),
        ("augmentation does not lower median mAP", augmentation_direction),
        ("determinism of full pipeline artifacts", determinism),
        ("headless service over HTTP", service_headless),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        match check() {
            Ok(()) => println!("PASS  {name} ({:.2}s)", start.elapsed().as_secs_f64()),
            Err(why) => {
                println!("FAIL  {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
