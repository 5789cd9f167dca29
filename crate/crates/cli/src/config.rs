//! Run configuration: one TOML file plus `key=value` overrides.
//!
//! Relative paths are resolved against the working directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use relsimp_core::eval::SplitSpec;
use relsimp_core::kbc::{EvalOptions, KbcConfig};
use relsimp_core::pattern::KeyConfig;
use relsimp_core::ranking::Thresholds;
use relsimp_core::synthetic::PlantedConfig;
use relsimp_core::TypeRoles;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkflowKind {
    /// Keys with enough distinct pairs, no labels and no expert.
    Baseline,
    /// Metric thresholds on labelled pairs, no expert.
    NoExpertWithLabels,
    /// Expert reviews keys ranked by pair count.
    ExpertNoLabels,
    /// Expert reviews keys passing metric thresholds.
    ExpertWithLabels,
}

impl WorkflowKind {
    pub fn needs_labels(self) -> bool {
        matches!(self, WorkflowKind::NoExpertWithLabels | WorkflowKind::ExpertWithLabels)
    }

    pub fn is_expert(self) -> bool {
        matches!(self, WorkflowKind::ExpertNoLabels | WorkflowKind::ExpertWithLabels)
    }

    pub fn name(self) -> &'static str {
        match self {
            WorkflowKind::Baseline => "baseline",
            WorkflowKind::NoExpertWithLabels => "no_expert_with_labels",
            WorkflowKind::ExpertNoLabels => "expert_no_labels",
            WorkflowKind::ExpertWithLabels => "expert_with_labels",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub precision: f64,
    pub recall: f64,
    pub min_pair_count: usize,
    pub min_words: usize,
    /// Add the sentence root to every key at extraction time.
    pub include_sentence_root: bool,
    /// Replace `precision` by the grid value maximizing F on the validation split.
    pub tune: bool,
    pub tune_grid: Vec<f64>,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            precision: 0.6,
            recall: 0.0,
            min_pair_count: 5,
            min_words: 0,
            include_sentence_root: false,
            tune: false,
            tune_grid: vec![0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
        }
    }
}

impl ThresholdConfig {
    pub fn metric_thresholds(&self) -> Thresholds {
        Thresholds { precision: self.precision, recall: self.recall, min_words: self.min_words }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train: 0.4, valid: 0.1, test: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub radius: usize,
    /// Expand accepted keys to their whole cluster before generating pairs.
    pub expand: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig { radius: 2, expand: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueueConfig {
    pub session_size: usize,
    pub examples_per_item: usize,
}

impl Default for QueueConfig {
    fn default() -> Self {
        QueueConfig { session_size: 200, examples_per_item: 20 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    /// File with one accepted key per line; overrides the workflow's own selection.
    pub accepted: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KbcSection {
    pub embedding_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub negatives_per_positive: usize,
    pub l2_weight: f64,
    pub relation: String,
    pub k_values: Vec<usize>,
    pub filtered: bool,
}

impl Default for KbcSection {
    fn default() -> Self {
        let k = KbcConfig::default();
        let e = EvalOptions::default();
        KbcSection {
            embedding_dim: k.embedding_dim,
            epochs: k.epochs,
            learning_rate: k.learning_rate,
            negatives_per_positive: k.negatives_per_positive,
            l2_weight: k.l2_weight,
            relation: "assoc".into(),
            k_values: e.k_values,
            filtered: e.filtered,
        }
    }
}

impl KbcSection {
    pub fn model_config(&self, seed: u64) -> KbcConfig {
        KbcConfig {
            embedding_dim: self.embedding_dim,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            negatives_per_positive: self.negatives_per_positive,
            l2_weight: self.l2_weight,
            seed,
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions { k_values: self.k_values.clone(), filtered: self.filtered }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub addr: String,
    pub token: Option<String>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig { addr: "127.0.0.1:8080".into(), token: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConlluConfig {
    pub input: Option<PathBuf>,
    /// Tab-separated mentions: doc_id, sent_id, start, end, type, id.
    pub mentions: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run_dir: PathBuf,
    pub corpus: Option<PathBuf>,
    /// Gold positive pairs, `a_id<TAB>b_id` per line.
    pub gold: Option<PathBuf>,
    /// Filter lists; the shipped defaults when absent.
    pub filters: Option<PathBuf>,
    /// Defaults to `<run_dir>/index`.
    pub index_dir: Option<PathBuf>,
    /// Defaults to `<run_dir>/sessions`.
    pub session_dir: Option<PathBuf>,
    pub workflow: WorkflowKind,
    pub roles: TypeRoles,
    pub use_lemma: bool,
    pub thresholds: ThresholdConfig,
    pub split: SplitConfig,
    pub cluster: ClusterConfig,
    pub queue: QueueConfig,
    pub generate: GenerateConfig,
    pub kbc: KbcSection,
    pub serve: ServeConfig,
    pub conllu: ConlluConfig,
    pub synth: PlantedConfig,
    /// Only settable with `--seed`.
    #[serde(skip)]
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run_dir: PathBuf::from("run"),
            corpus: None,
            gold: None,
            filters: None,
            index_dir: None,
            session_dir: None,
            workflow: WorkflowKind::NoExpertWithLabels,
            roles: TypeRoles::new("GENE", "DISEASE"),
            use_lemma: false,
            thresholds: ThresholdConfig::default(),
            split: SplitConfig::default(),
            cluster: ClusterConfig::default(),
            queue: QueueConfig::default(),
            generate: GenerateConfig::default(),
            kbc: KbcSection::default(),
            serve: ServeConfig::default(),
            conllu: ConlluConfig::default(),
            synth: PlantedConfig::default(),
            seed: None,
        }
    }
}

impl RunConfig {
    /// Parses `text` (possibly empty) and applies dotted `key=value`
    /// overrides. Override values are read as TOML and fall back to strings.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut root: toml::Table = text.parse().map_err(|e| CliError::Config(format!("config: {e}")))?;
        for o in overrides {
            let (key, raw) = o.split_once('=').ok_or_else(|| CliError::Config(format!("override {o:?} is not key=value")))?;
            let value = parse_value(raw.trim());
            set_path(&mut root, key.trim(), value)?;
        }
        let cfg: RunConfig = toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.split_spec(0)?;
        self.metric_thresholds_valid()?;
        if self.roles.type_a == self.roles.type_b {
            return Err(CliError::Config("roles.type_a and roles.type_b must differ".into()));
        }
        if self.queue.session_size == 0 || self.queue.examples_per_item == 0 {
            return Err(CliError::Config("queue sizes must be at least 1".into()));
        }
        self.kbc.model_config(0).validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    fn metric_thresholds_valid(&self) -> Result<(), CliError> {
        self.thresholds.metric_thresholds().validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.thresholds.min_pair_count == 0 {
            return Err(CliError::Config("thresholds.min_pair_count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn split_spec(&self, seed: u64) -> Result<SplitSpec, CliError> {
        SplitSpec::new(self.split.train, self.split.valid, self.split.test, seed).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn key_config(&self) -> KeyConfig {
        KeyConfig { use_lemma: self.use_lemma, include_sentence_root: self.thresholds.include_sentence_root }
    }

    pub fn index_dir(&self) -> PathBuf {
        self.index_dir.clone().unwrap_or_else(|| self.run_dir.join("index"))
    }

    pub fn session_dir(&self) -> PathBuf {
        self.session_dir.clone().unwrap_or_else(|| self.run_dir.join("sessions"))
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| CliError::Config(format!("empty override key {key:?}")))?;
    let mut table = root;
    for p in parts {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| CliError::Config(format!("override {key:?}: {p} is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply_dotted_paths() {
        let cfg = RunConfig::from_toml_with_overrides(
            "workflow = \"baseline\"\n[thresholds]\nprecision = 0.4\n",
            &["thresholds.precision=0.8".into(), "corpus=data/c.ndjson".into(), "kbc.k_values=[10, 20]".into()],
        )
        .unwrap();
        assert_eq!(cfg.workflow, WorkflowKind::Baseline);
        assert_eq!(cfg.thresholds.precision, 0.8);
        assert_eq!(cfg.corpus, Some(PathBuf::from("data/c.ndjson")));
        assert_eq!(cfg.kbc.k_values, vec![10, 20]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for bad in [
            "[split]\ntrain = 0.5\nvalid = 0.5\ntest = 0.5\n",
            "unknown = 1\n",
            "[thresholds]\nprecision = 1.5\n",
            "[roles]\ntype_a = \"GENE\"\ntype_b = \"GENE\"\n",
        ] {
            assert!(matches!(RunConfig::from_toml_with_overrides(bad, &[]), Err(CliError::Config(_))), "{bad}");
        }
        assert!(RunConfig::from_toml_with_overrides("", &["nokeyvalue".into()]).is_err());
    }
}
