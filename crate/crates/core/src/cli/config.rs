use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::CliError;

pub const RUN_FILE: &str = "run.json";
/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "NORMALFORGE_SEED";

fn default_seed() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthRun {
    pub objects: usize,
    pub size: usize,
    pub lights: usize,
    pub elevation: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for SynthRun {
    fn default() -> Self {
        Self {
            objects: 2,
            size: 64,
            lights: 8,
            elevation: 45.0,
            seed: default_seed(),
            out: PathBuf::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructRun {
    pub manifest: PathBuf,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRun {
    pub manifest: PathBuf,
    pub out: PathBuf,
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub batch_size: usize,
    pub lambda_cos: f64,
    pub image_size: usize,
    pub base_channels: usize,
    pub depth: usize,
    pub dropout: f64,
    pub seed: u64,
    pub split_folds: usize,
}

impl Default for TrainRun {
    fn default() -> Self {
        let c = crate::neural::TrainConfig::default();
        Self {
            manifest: PathBuf::new(),
            out: PathBuf::new(),
            epochs: c.epochs,
            lr: c.lr,
            beta1: c.beta1,
            beta2: c.beta2,
            batch_size: c.batch_size,
            lambda_cos: c.lambda_cos,
            image_size: c.image_size,
            base_channels: c.base_channels,
            depth: c.depth,
            dropout: c.dropout,
            seed: default_seed(),
            split_folds: 1,
        }
    }
}

impl TrainRun {
    pub fn train_config(&self) -> crate::neural::TrainConfig {
        crate::neural::TrainConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            batch_size: self.batch_size,
            epochs: self.epochs,
            lambda_cos: self.lambda_cos,
            image_size: self.image_size,
            base_channels: self.base_channels,
            depth: self.depth,
            seed: self.seed,
            dropout: self.dropout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictRun {
    pub checkpoint: PathBuf,
    pub image: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for PredictRun {
    fn default() -> Self {
        Self {
            checkpoint: PathBuf::new(),
            image: PathBuf::new(),
            out: PathBuf::new(),
            seed: default_seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmbiguityRun {
    pub manifest: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub folds: Option<PathBuf>,
    pub identity: bool,
    pub out: PathBuf,
    pub seed: u64,
    pub svg: bool,
}

impl Default for AmbiguityRun {
    fn default() -> Self {
        Self {
            manifest: PathBuf::new(),
            checkpoint: None,
            folds: None,
            identity: false,
            out: PathBuf::new(),
            seed: default_seed(),
            svg: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecognitionRun {
    pub manifest: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub folds: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub kinds: Vec<String>,
    pub amounts: Vec<f64>,
    pub extractor: String,
    pub c: f64,
    pub svg: bool,
    /// Recorded for readers of the report; only macro averaging is offered.
    pub f_score_average: String,
}

impl Default for RecognitionRun {
    fn default() -> Self {
        Self {
            manifest: PathBuf::new(),
            checkpoint: None,
            folds: None,
            out: PathBuf::new(),
            seed: default_seed(),
            kinds: crate::evaluation::DegradeKind::ALL
                .iter()
                .map(|k| k.name().to_string())
                .collect(),
            amounts: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            extractor: "encoder".into(),
            c: 1.0,
            svg: false,
            f_score_average: "macro".into(),
        }
    }
}

/// Defaults, overridden by the config file, overridden by explicit flags.
pub(crate) fn resolve<F: Serialize, R: Serialize + DeserializeOwned + Default>(
    flags: &F,
    config: Option<&Path>,
) -> Result<R, CliError> {
    let mut merged = as_object(serde_json::to_value(R::default()))?;
    if let Some(path) = config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let Value::Object(map) = value else {
            return Err(CliError::Usage(format!(
                "config {} must hold a JSON object",
                path.display()
            )));
        };
        merged.extend(map);
    }
    let flags = as_object(serde_json::to_value(flags))?;
    merged.extend(flags.into_iter().filter(|(_, v)| !v.is_null()));
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(e.to_string()))
}

fn as_object(v: Result<Value, serde_json::Error>) -> Result<Map<String, Value>, CliError> {
    match v {
        Ok(Value::Object(m)) => Ok(m),
        _ => Err(CliError::Runtime("options do not serialize to an object".into())),
    }
}

#[derive(Serialize)]
struct RunRecord<'a, R> {
    command: &'a str,
    version: &'a str,
    threads: u32,
    options: &'a R,
}

/// Writes the resolved options of a command as `run.json` in `dir`.
pub(crate) fn write_run_record<R: Serialize>(
    dir: &Path,
    command: &str,
    threads: u32,
    options: &R,
) -> Result<(), CliError> {
    let record = RunRecord {
        command,
        version: env!("CARGO_PKG_VERSION"),
        threads,
        options,
    };
    let mut text = serde_json::to_string_pretty(&record).expect("run record serializes");
    text.push('\n');
    let path = dir.join(RUN_FILE);
    std::fs::write(&path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Flags {
        objects: Option<usize>,
        size: Option<usize>,
    }

    #[test]
    fn flags_override_config_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"objects": 5, "size": 32, "lights": 4}"#).unwrap();
        let flags = Flags {
            objects: Some(7),
            size: None,
        };
        let r: SynthRun = resolve(&flags, Some(&cfg)).unwrap();
        assert_eq!((r.objects, r.size, r.lights, r.elevation), (7, 32, 4, 45.0));
        std::fs::write(&cfg, r#"{"objcts": 5}"#).unwrap();
        assert!(matches!(resolve::<_, SynthRun>(&flags, Some(&cfg)), Err(CliError::Usage(_))));
    }
}
