//! Run configuration: JSON config files, dataset presets, and `key=value`
//! overrides, with strict key validation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::corpus::{AliasMap, LoadOptions, SplitPart};
use crate::error::{Error, Result};
use crate::num::Dtype;
use crate::training::TrainConfig;

/// Every documented configuration key, in the order they appear in `Config`.
pub const VALID_KEYS: &[&str] = &[
    "preset",
    "precision",
    "corpus_path",
    "alias_map_path",
    "pretrained_vectors_path",
    "checkpoint_path",
    "descriptors_path",
    "text_fields",
    "label_field",
    "id_field",
    "min_count",
    "max_len",
    "split_ratios",
    "heads",
    "embed_dim",
    "head_hidden_dim",
    "pool_hidden_dim",
    "batch_size",
    "epochs",
    "base_lr",
    "lambda",
    "seed",
    "trainable_embeddings",
    "eval_split",
    "topics_corpus",
    "top_t",
    "export_matrices",
    "window_size",
    "coherence_eps",
    "lambda_sweep",
    "gradcheck_cases",
    "gradcheck_step",
    "gradcheck_lambdas",
    "gradcheck_tolerance",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn dtype(self) -> Dtype {
        match self {
            Precision::F32 => Dtype::F32,
            Precision::F64 => Dtype::F64,
        }
    }
}

/// Which encoded documents feed topic/entropy analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicsCorpus {
    All,
    Train,
    Validation,
    Test,
}

/// The full effective configuration; serializing it back out produces a file
/// that reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub preset: Option<String>,
    pub precision: Precision,
    pub corpus_path: Option<String>,
    pub alias_map_path: Option<String>,
    pub pretrained_vectors_path: Option<String>,
    pub checkpoint_path: Option<String>,
    pub descriptors_path: Option<String>,
    pub text_fields: Vec<String>,
    pub label_field: String,
    pub id_field: Option<String>,
    pub min_count: u64,
    pub max_len: usize,
    pub split_ratios: [f64; 3],
    pub heads: usize,
    pub embed_dim: usize,
    pub head_hidden_dim: usize,
    pub pool_hidden_dim: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub base_lr: f64,
    pub lambda: f64,
    pub seed: u64,
    pub trainable_embeddings: bool,
    pub eval_split: SplitPart,
    pub topics_corpus: TopicsCorpus,
    pub top_t: usize,
    pub export_matrices: bool,
    pub window_size: usize,
    pub coherence_eps: f64,
    pub lambda_sweep: Vec<f64>,
    pub gradcheck_cases: usize,
    pub gradcheck_step: f64,
    pub gradcheck_lambdas: Vec<f64>,
    pub gradcheck_tolerance: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            preset: None,
            precision: Precision::F32,
            corpus_path: None,
            alias_map_path: None,
            pretrained_vectors_path: None,
            checkpoint_path: None,
            descriptors_path: None,
            text_fields: vec!["headline".into(), "short_description".into()],
            label_field: "category".into(),
            id_field: None,
            min_count: 1,
            max_len: 100,
            split_ratios: [0.8, 0.1, 0.1],
            heads: 30,
            embed_dim: 300,
            head_hidden_dim: 64,
            pool_hidden_dim: 64,
            batch_size: 32,
            epochs: 5,
            base_lr: 1e-3,
            lambda: 0.0,
            seed: 1,
            trainable_embeddings: true,
            eval_split: SplitPart::Test,
            topics_corpus: TopicsCorpus::All,
            top_t: 25,
            export_matrices: false,
            window_size: 110,
            coherence_eps: 1e-12,
            lambda_sweep: vec![0.0, 1e-4, 1e-3, 1e-2],
            gradcheck_cases: 20,
            // balances difference-quotient rounding noise against truncation
            // for the |a-b| / max(1e-8, |a|+|b|) relative error
            gradcheck_step: 3e-4,
            gradcheck_lambdas: vec![0.0, 1e-3],
            gradcheck_tolerance: 1e-4,
        }
    }
}

/// Dataset presets keyed by name.
fn preset_patch(name: &str) -> Result<Vec<(&'static str, Value)>> {
    match name {
        "news-26" => Ok(vec![
            ("heads", Value::from(30)),
            ("max_len", Value::from(100)),
            ("embed_dim", Value::from(300)),
        ]),
        "mind-15" => Ok(vec![
            ("heads", Value::from(180)),
            ("max_len", Value::from(512)),
            ("embed_dim", Value::from(300)),
        ]),
        other => Err(Error::Config(format!(
            "unknown preset {other:?}; valid presets: news-26, mind-15"
        ))),
    }
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut current = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            current.push((prev[j] + cost).min(prev[j + 1] + 1).min(current[j] + 1));
        }
        prev = current;
    }
    prev[b.len()]
}

fn check_key(key: &str) -> Result<()> {
    if VALID_KEYS.contains(&key) {
        return Ok(());
    }
    let suggestion = VALID_KEYS
        .iter()
        .map(|k| (levenshtein(key, k), *k))
        .min()
        .filter(|&(d, _)| d <= 3)
        .map(|(_, k)| format!(" (did you mean {k:?}?)"));
    Err(Error::Config(format!(
        "unknown config key {key:?}{}; valid keys: {}",
        suggestion.unwrap_or_default(),
        VALID_KEYS.join(", ")
    )))
}

fn parse_override_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Merge order: defaults, then the preset patch, then file keys, then
/// `key=value` overrides. Unknown keys are fatal with a suggestion; type
/// mismatches are fatal via deserialization.
pub fn parse_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Config> {
    let mut merged = match serde_json::to_value(Config::default())? {
        Value::Object(map) => map,
        _ => unreachable!("config serializes to an object"),
    };

    let file_map: Option<Map<String, Value>> = match path {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: not valid JSON: {e}", path.display())))?;
            match value {
                Value::Object(map) => Some(map),
                _ => {
                    return Err(Error::Config(format!(
                        "{}: config must be a JSON object",
                        path.display()
                    )))
                }
            }
        }
        None => None,
    };

    if let Some(map) = &file_map {
        for key in map.keys() {
            check_key(key)?;
        }
    }
    for (key, _) in overrides {
        check_key(key)?;
    }

    // The preset is resolved first so that explicit file keys and overrides
    // win over its patch.
    let preset = overrides
        .iter()
        .rev()
        .find(|(k, _)| k == "preset")
        .map(|(_, v)| parse_override_value(v))
        .or_else(|| file_map.as_ref().and_then(|m| m.get("preset").cloned()));
    if let Some(preset_value) = &preset {
        if let Value::String(name) = preset_value {
            for (key, value) in preset_patch(name)? {
                merged.insert(key.to_string(), value);
            }
            merged.insert("preset".into(), preset_value.clone());
        } else if !preset_value.is_null() {
            return Err(Error::Config("preset must be a string".into()));
        }
    }

    if let Some(map) = file_map {
        for (key, value) in map {
            merged.insert(key, value);
        }
    }
    for (key, raw) in overrides {
        merged.insert(key.clone(), parse_override_value(raw));
    }

    let config: Config = serde_json::from_value(Value::Object(merged))
        .map_err(|e| Error::Config(format!("invalid config value: {e}")))?;
    Ok(config)
}

impl Config {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            heads: self.heads,
            embed_dim: self.embed_dim,
            head_hidden_dim: self.head_hidden_dim,
            pool_hidden_dim: self.pool_hidden_dim,
            max_len: self.max_len,
            batch_size: self.batch_size,
            epochs: self.epochs,
            base_lr: self.base_lr,
            lambda: self.lambda,
            seed: self.seed,
            trainable_embeddings: self.trainable_embeddings,
        }
    }

    pub fn load_options(&self) -> Result<LoadOptions> {
        let aliases = match &self.alias_map_path {
            Some(path) => AliasMap::load(Path::new(path))?,
            None => AliasMap::default(),
        };
        Ok(LoadOptions {
            text_fields: self.text_fields.clone(),
            label_field: self.label_field.clone(),
            id_field: self.id_field.clone(),
            aliases,
        })
    }

    pub fn require_corpus_path(&self) -> Result<PathBuf> {
        self.corpus_path
            .as_ref()
            .map(PathBuf::from)
            .ok_or_else(|| Error::Config("corpus_path is required for this command".into()))
    }

    /// Write the effective configuration; feeding the written file back as
    /// `--config` reproduces the run.
    pub fn write_echo(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join("effective_config.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn default_config_round_trips() {
        let config = Config::default();
        let value = serde_json::to_value(&config).unwrap();
        let back: Config = serde_json::from_value(value).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn valid_keys_match_struct_fields() {
        let value = serde_json::to_value(Config::default()).unwrap();
        let mut keys: Vec<&str> = value
            .as_object()
            .unwrap()
            .keys()
            .map(String::as_str)
            .collect();
        keys.sort_unstable();
        let mut expected = VALID_KEYS.to_vec();
        expected.sort_unstable();
        assert_eq!(keys, expected);
    }

    #[test]
    fn news_26_preset_sets_heads_and_max_len() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, r#"{{"preset": "news-26"}}"#).unwrap();
        let config = parse_config(Some(file.path()), &[]).unwrap();
        assert_eq!(config.heads, 30);
        assert_eq!(config.max_len, 100);
        assert_eq!(config.embed_dim, 300);
        assert_eq!(config.batch_size, 32);
        assert_eq!(config.base_lr, 1e-3);
    }

    #[test]
    fn mind_15_preset() {
        let config = parse_config(None, &[("preset".into(), "mind-15".into())]).unwrap();
        assert_eq!(config.heads, 180);
        assert_eq!(config.max_len, 512);
    }

    #[test]
    fn file_keys_win_over_preset() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, r#"{{"preset": "news-26", "heads": 12}}"#).unwrap();
        let config = parse_config(Some(file.path()), &[]).unwrap();
        assert_eq!(config.heads, 12);
        assert_eq!(config.max_len, 100);
    }

    #[test]
    fn overrides_win_over_file() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, r#"{{"lambda": 0.5}}"#).unwrap();
        let config = parse_config(Some(file.path()), &[("lambda".into(), "1e-4".into())]).unwrap();
        assert_eq!(config.lambda, 1e-4);
    }

    #[test]
    fn unknown_key_is_fatal_with_suggestion() {
        let err = parse_config(None, &[("lamda".into(), "0.1".into())]).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("lamda"), "{message}");
        assert!(message.contains("did you mean \"lambda\"?"), "{message}");
        assert!(message.contains("valid keys"), "{message}");
    }

    #[test]
    fn type_mismatch_is_fatal() {
        let err = parse_config(None, &[("heads".into(), "\"many\"".into())]).unwrap_err();
        assert!(err.to_string().contains("invalid config value"), "{err}");
    }

    #[test]
    fn string_overrides_parse_without_quotes() {
        let config = parse_config(None, &[("label_field".into(), "topic".into())]).unwrap();
        assert_eq!(config.label_field, "topic");
    }

    #[test]
    fn echo_reproduces_config() {
        let dir = tempfile::tempdir().unwrap();
        let config = parse_config(None, &[("seed".into(), "9".into())]).unwrap();
        let path = config.write_echo(dir.path()).unwrap();
        let again = parse_config(Some(&path), &[]).unwrap();
        assert_eq!(config, again);
    }
}
