//! Stage orchestration with content-hash caching.
//!
//! Each stage reads named artifacts from the output directory (or external
//! inputs for `ingest` and `train-roles`), writes its own artifacts and
//! records a manifest line. A stage whose config subset, input hashes and
//! output hashes all match its manifest line is skipped.
//!
//! | stage | reads | writes |
//! |---|---|---|
//! | `ingest` | corpus | `corpus.jsonl`, `bilateral.tsv`, `ingest_stats.tsv` |
//! | `train-roles` | contributions | `roles.tsv`, `labels.tsv` |
//! | `build-profiles` | `corpus.jsonl` | `features.tsv` |
//! | `fit-model` | `labels.tsv`, `features.tsv` | `model.txt`, `eval.tsv` |
//! | `score` | `model.txt`, `corpus.jsonl`, `bilateral.tsv`, `features.tsv` | `scored.tsv` |
//! | `aggregate` | `scored.tsv` | `counts.tsv` |
//! | `forecast` | `counts.tsv` | `series.tsv`, `forecast.tsv` |
//! | `export` | `series.tsv`, `scored.tsv` | `fig1c.csv` ... `fig4b.csv` |
//!
//! Exit codes: 2 for configuration errors, 3 for data errors (missing or
//! stale artifacts, unreadable inputs), 4 for numeric failures.

pub mod config;
mod export;
pub mod manifest;
mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use config::{base_plan, plan_filters, series_plan, PipelineConfig, SeriesSpec};
pub use export::{forecast_one, sweep_rows, SweepAxis, SweepRow, FIGURES, FIGURE_HEADER, SWEEP_HEADER};
pub use manifest::{Manifest, ManifestEntry, MANIFEST_FILE};

use crate::digest::sha256_hex;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{stage}: upstream artifact {artifact} is missing; run the producing stage first")]
    MissingUpstream { stage: String, artifact: String },
    #[error("{artifact} changed since {producer} wrote it (expected {expected}, found {found})")]
    HashMismatch { artifact: String, producer: String, expected: String, found: String },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("data: {0}")]
    Data(String),
    #[error("numeric: {0}")]
    Numeric(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::MissingUpstream { .. }
            | PipelineError::HashMismatch { .. }
            | PipelineError::Io { .. }
            | PipelineError::Data(_) => 3,
            PipelineError::Numeric(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        PipelineError::Io { path: path.to_path_buf(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    TrainRoles,
    BuildProfiles,
    FitModel,
    Score,
    Aggregate,
    Forecast,
    Export,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::TrainRoles,
        Stage::BuildProfiles,
        Stage::FitModel,
        Stage::Score,
        Stage::Aggregate,
        Stage::Forecast,
        Stage::Export,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::TrainRoles => "train-roles",
            Stage::BuildProfiles => "build-profiles",
            Stage::FitModel => "fit-model",
            Stage::Score => "score",
            Stage::Aggregate => "aggregate",
            Stage::Forecast => "forecast",
            Stage::Export => "export",
        }
    }

    /// Artifacts this stage reads from the output directory.
    pub fn upstream(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest | Stage::TrainRoles => &[],
            Stage::BuildProfiles => &["corpus.jsonl"],
            Stage::FitModel => &["labels.tsv", "features.tsv"],
            Stage::Score => &["model.txt", "corpus.jsonl", "bilateral.tsv", "features.tsv"],
            Stage::Aggregate => &["scored.tsv"],
            Stage::Forecast => &["counts.tsv"],
            Stage::Export => &["series.tsv", "scored.tsv"],
        }
    }

    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &["corpus.jsonl", "bilateral.tsv", "ingest_stats.tsv"],
            Stage::TrainRoles => &["roles.tsv", "labels.tsv"],
            Stage::BuildProfiles => &["features.tsv"],
            Stage::FitModel => &["model.txt", "eval.tsv"],
            Stage::Score => &["scored.tsv"],
            Stage::Aggregate => &["counts.tsv"],
            Stage::Forecast => &["series.tsv", "forecast.tsv"],
            Stage::Export => &FIGURES,
        }
    }

    /// Config keys whose values change this stage's outputs.
    pub fn config_keys(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &["regions_table", "aliases_table", "verify_tables", "strict"],
            Stage::TrainRoles => &["seed", "label_mode", "strict"],
            Stage::BuildProfiles => &["affiliation_score"],
            Stage::FitModel => &["seed", "split_ratio", "model_family"],
            Stage::Score => &[
                "threshold",
                "if_bin_edges",
                "regions_table",
                "aliases_table",
                "bri_table",
                "topics_table",
                "verify_tables",
            ],
            Stage::Aggregate => &["counting", "focal", "partners", "filters", "if_bin_edges"],
            Stage::Forecast => &["focal", "partners", "filters", "if_bin_edges", "window", "confidence", "horizon"],
            Stage::Export => {
                &["focal", "partners", "counting", "window", "confidence", "horizon", "sweep_thresholds", "export_end"]
            }
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Ran,
    Cached,
}

/// Everything a step body may read: named input bytes and the config.
pub(crate) struct StepInputs<'a> {
    pub cfg: &'a PipelineConfig,
    pub files: BTreeMap<String, Vec<u8>>,
}

impl StepInputs<'_> {
    pub fn bytes(&self, name: &str) -> &[u8] {
        self.files.get(name).map(Vec::as_slice).expect("declared input")
    }

    pub fn text(&self, name: &str) -> Result<&str, PipelineError> {
        std::str::from_utf8(self.bytes(name)).map_err(|_| PipelineError::Data(format!("{name} is not UTF-8")))
    }
}

pub(crate) type StepOutputs = Vec<(String, Vec<u8>)>;

struct StepSpec {
    name: String,
    config: String,
    external: Vec<(String, PathBuf)>,
    upstream: Vec<String>,
    outputs: Vec<String>,
}

pub struct Pipeline {
    cfg: PipelineConfig,
    pool: rayon::ThreadPool,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let name = path.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| PipelineError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
}

fn read_file(path: &Path) -> Result<Option<Vec<u8>>, PipelineError> {
    match std::fs::read(path) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(PipelineError::io(path, e)),
    }
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| PipelineError::Config(format!("worker pool: {e}")))?;
        Ok(Self { cfg, pool })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn output_dir(&self) -> &Path {
        &self.cfg.output_dir
    }

    pub fn manifest(&self) -> Result<Manifest, PipelineError> {
        Manifest::load(&self.cfg.output_dir)
    }

    fn external_inputs(&self, stage: Stage) -> Result<Vec<(String, PathBuf)>, PipelineError> {
        let cfg = &self.cfg;
        let mut out = Vec::new();
        let mut tables = |names: &[(&str, &crate::corpus::TableSource)]| {
            for (label, src) in names {
                if let crate::corpus::TableSource::Path(p) = src {
                    out.push((label.to_string(), p.clone()));
                }
            }
        };
        match stage {
            Stage::Ingest => tables(&[("regions_table", &cfg.regions_table), ("aliases_table", &cfg.aliases_table)]),
            Stage::Score => tables(&[
                ("regions_table", &cfg.regions_table),
                ("aliases_table", &cfg.aliases_table),
                ("bri_table", &cfg.bri_table),
                ("topics_table", &cfg.topics_table),
            ]),
            _ => {}
        }
        let required = |key: &str, p: &Option<PathBuf>| {
            p.clone().ok_or_else(|| PipelineError::Config(format!("{} needs `{key}` in the config", stage)))
        };
        match stage {
            Stage::Ingest => out.push(("corpus".into(), required("corpus", &cfg.corpus)?)),
            Stage::TrainRoles => out.push(("contributions".into(), required("contributions", &cfg.contributions)?)),
            _ => {}
        }
        Ok(out)
    }

    pub fn run_stage(&self, stage: Stage) -> Result<StageOutcome, PipelineError> {
        let spec = StepSpec {
            name: stage.as_str().to_string(),
            config: self.cfg.canonical(stage.config_keys()),
            external: self.external_inputs(stage)?,
            upstream: stage.upstream().iter().map(|s| s.to_string()).collect(),
            outputs: stage.outputs().iter().map(|s| s.to_string()).collect(),
        };
        self.run_step(spec, |inputs| stages::run(stage, inputs))
    }

    /// Runs every stage in order.
    pub fn run_all(&self) -> Result<Vec<(Stage, StageOutcome)>, PipelineError> {
        Stage::ALL.iter().map(|&s| self.run_stage(s).map(|o| (s, o))).collect()
    }

    /// Re-forecasts the scored corpus at each value of `axis`; writes `sweep_<axis>.tsv`.
    pub fn sweep(&self, axis: SweepAxis, values: &[f64]) -> Result<(PathBuf, StageOutcome), PipelineError> {
        let file = format!("sweep_{}.tsv", axis.as_str());
        let values_key = values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",");
        let spec = StepSpec {
            name: format!("sweep-{}", axis.as_str()),
            config: format!(
                "{}axis={}\nvalues={values_key}\n",
                self.cfg.canonical(&[
                    "focal",
                    "partners",
                    "filters",
                    "counting",
                    "if_bin_edges",
                    "window",
                    "confidence",
                    "horizon"
                ]),
                axis.as_str()
            ),
            external: Vec::new(),
            upstream: vec!["scored.tsv".into()],
            outputs: vec![file.clone()],
        };
        let values = values.to_vec();
        let outcome = self.run_step(spec, move |inputs| export::sweep_stage(inputs, axis, &values, &file))?;
        Ok((self.cfg.output_dir.join(format!("sweep_{}.tsv", axis.as_str())), outcome))
    }

    fn run_step<F>(&self, spec: StepSpec, body: F) -> Result<StageOutcome, PipelineError>
    where
        F: FnOnce(&StepInputs<'_>) -> Result<StepOutputs, PipelineError> + Send,
    {
        let dir = &self.cfg.output_dir;
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        let mut manifest = Manifest::load(dir)?;

        let mut files = BTreeMap::new();
        let mut input_hashes = BTreeMap::new();
        for name in &spec.upstream {
            let path = dir.join(name);
            let missing = || PipelineError::MissingUpstream { stage: spec.name.clone(), artifact: name.clone() };
            let bytes = read_file(&path)?.ok_or_else(missing)?;
            let (producer, expected) = manifest.producer(name).ok_or_else(missing)?;
            let found = sha256_hex(&bytes);
            if found != expected {
                return Err(PipelineError::HashMismatch {
                    artifact: name.clone(),
                    producer: producer.to_string(),
                    expected: expected.to_string(),
                    found,
                });
            }
            input_hashes.insert(name.clone(), found);
            files.insert(name.clone(), bytes);
        }
        for (label, path) in &spec.external {
            let bytes = read_file(path)?
                .ok_or_else(|| PipelineError::Io { path: path.clone(), message: format!("{label} input not found") })?;
            input_hashes.insert(label.clone(), sha256_hex(&bytes));
            files.insert(label.clone(), bytes);
        }
        let config_hash = sha256_hex(spec.config.as_bytes());

        if let Some(prev) = manifest.get(&spec.name) {
            let outputs_intact = spec.outputs.iter().all(|o| {
                prev.outputs
                    .get(o)
                    .is_some_and(|h| read_file(&dir.join(o)).ok().flatten().is_some_and(|b| &sha256_hex(&b) == h))
            });
            if prev.config_hash == config_hash && prev.inputs == input_hashes && outputs_intact {
                log::info!("{}: up to date", spec.name);
                return Ok(StageOutcome::Cached);
            }
        }

        log::info!("{}: running", spec.name);
        let inputs = StepInputs { cfg: &self.cfg, files };
        let outputs = self.pool.install(|| body(&inputs))?;
        let mut output_hashes = BTreeMap::new();
        for (name, bytes) in &outputs {
            debug_assert!(spec.outputs.contains(name), "undeclared output {name}");
            write_atomic(&dir.join(name), bytes)?;
            output_hashes.insert(name.clone(), sha256_hex(bytes));
        }
        manifest.insert(&spec.name, ManifestEntry { config_hash, inputs: input_hashes, outputs: output_hashes });
        write_atomic(&dir.join(MANIFEST_FILE), manifest.to_text().as_bytes())?;
        Ok(StageOutcome::Ran)
    }
}
