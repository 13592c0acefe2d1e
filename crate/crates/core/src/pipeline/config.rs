//! Flat `key = value` pipeline configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. Relative paths resolve against the directory holding the
//! config file.
//!
//! | key | default |
//! |---|---|
//! | `corpus` | required for `ingest` |
//! | `contributions` | required for `train-roles` |
//! | `output_dir` | `out` |
//! | `regions_table`, `aliases_table`, `bri_table`, `topics_table` | built-in |
//! | `verify_tables` | `true` |
//! | `threshold` | `0.65` |
//! | `if_bin_edges` | `1, 2, 4, 8, 16` |
//! | `window` | `2010, 2021` |
//! | `confidence` | `0.95` |
//! | `horizon` | `2200` |
//! | `seed` | `0` |
//! | `split_ratio` | `0.9` |
//! | `workers` | `0` (all cores) |
//! | `strict` | `false` |
//! | `focal` | `China` |
//! | `partners` | `U.S., EU+, U.K.` |
//! | `filters` | `all` |
//! | `counting` | `author_paper` |
//! | `model_family` | `ols` |
//! | `label_mode` | `fractional` |
//! | `affiliation_score` | `percentile` |
//! | `sweep_thresholds` | `0.5, 0.6, 0.65, 0.7, 0.8, 0.9` |
//! | `export_end` | `2060` |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::PipelineError;
use crate::corpus::{GlobalRegion, IfBinEdges, TableSource};
use crate::features::AffiliationScore;
use crate::forecast::{DEFAULT_CONFIDENCE, DEFAULT_HORIZON, DEFAULT_WINDOW};
use crate::leadmodel::{ModelFamily, DEFAULT_SPLIT_RATIO, DEFAULT_THRESHOLD};
use crate::metrics::{CountingMode, FilterAtom, FilterSpec, Partner};
use crate::roles::LabelMode;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub contributions: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub regions_table: TableSource,
    pub aliases_table: TableSource,
    pub bri_table: TableSource,
    pub topics_table: TableSource,
    pub verify_tables: bool,
    pub threshold: f64,
    pub if_bin_edges: IfBinEdges,
    pub window: (i32, i32),
    pub confidence: f64,
    pub horizon: f64,
    pub seed: u64,
    pub split_ratio: f64,
    pub workers: usize,
    pub strict: bool,
    pub focal: GlobalRegion,
    pub partners: Vec<Partner>,
    pub filters: Vec<FilterSpec>,
    pub counting: CountingMode,
    pub model_family: ModelFamily,
    pub label_mode: LabelMode,
    pub affiliation_score: AffiliationScore,
    pub sweep_thresholds: Vec<f64>,
    pub export_end: i32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            contributions: None,
            output_dir: PathBuf::from("out"),
            regions_table: TableSource::Builtin,
            aliases_table: TableSource::Builtin,
            bri_table: TableSource::Builtin,
            topics_table: TableSource::Builtin,
            verify_tables: true,
            threshold: DEFAULT_THRESHOLD,
            if_bin_edges: IfBinEdges::default(),
            window: DEFAULT_WINDOW,
            confidence: DEFAULT_CONFIDENCE,
            horizon: DEFAULT_HORIZON,
            seed: 0,
            split_ratio: DEFAULT_SPLIT_RATIO,
            workers: 0,
            strict: false,
            focal: GlobalRegion::China,
            partners: vec![
                Partner::Region(GlobalRegion::UnitedStates),
                Partner::Region(GlobalRegion::EuPlus),
                Partner::Region(GlobalRegion::UnitedKingdom),
            ],
            filters: vec![FilterSpec::all()],
            counting: CountingMode::AuthorPaper,
            model_family: ModelFamily::Ols,
            label_mode: LabelMode::Fractional,
            affiliation_score: AffiliationScore::Percentile,
            sweep_thresholds: vec![0.5, 0.6, 0.65, 0.7, 0.8, 0.9],
            export_end: 2060,
        }
    }
}

fn list<T: FromStr>(v: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e: T::Err| format!("{s:?}: {e}")))
        .collect()
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected true or false, got {other:?}")),
    }
}

fn scalar<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?}"))
}

fn label_mode(v: &str) -> Result<LabelMode, String> {
    match v {
        "fractional" => Ok(LabelMode::Fractional),
        "strict_binary" => Ok(LabelMode::StrictBinary),
        other => Err(format!("unknown label mode {other:?}")),
    }
}

fn label_mode_str(m: LabelMode) -> &'static str {
    match m {
        LabelMode::Fractional => "fractional",
        LabelMode::StrictBinary => "strict_binary",
    }
}

fn affiliation(v: &str) -> Result<AffiliationScore, String> {
    match v {
        "percentile" => Ok(AffiliationScore::Percentile),
        "disabled" => Ok(AffiliationScore::Disabled),
        other => Err(format!("unknown affiliation score {other:?}")),
    }
}

fn affiliation_str(a: AffiliationScore) -> &'static str {
    match a {
        AffiliationScore::Percentile => "percentile",
        AffiliationScore::Disabled => "disabled",
    }
}

fn table_str(t: &TableSource) -> String {
    match t {
        TableSource::Builtin => "builtin".into(),
        TableSource::Path(p) => p.display().to_string(),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn partner_str(p: &Partner) -> String {
    match p {
        Partner::Region(r) => r.name().to_string(),
        Partner::Any => "*".into(),
    }
}

impl PipelineConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut cfg = Self::default();
        let resolve = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        let table = |v: &str| {
            if v == "builtin" {
                TableSource::Builtin
            } else {
                TableSource::Path(resolve(v))
            }
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| PipelineError::Config(format!("config line {}: {m}", i + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let (key, v) = (key.trim(), value.trim());
            let r: Result<(), String> = (|| {
                match key {
                    "corpus" => cfg.corpus = Some(resolve(v)),
                    "contributions" => cfg.contributions = Some(resolve(v)),
                    "output_dir" => cfg.output_dir = resolve(v),
                    "regions_table" => cfg.regions_table = table(v),
                    "aliases_table" => cfg.aliases_table = table(v),
                    "bri_table" => cfg.bri_table = table(v),
                    "topics_table" => cfg.topics_table = table(v),
                    "verify_tables" => cfg.verify_tables = parse_bool(v)?,
                    "threshold" => cfg.threshold = scalar(v)?,
                    "if_bin_edges" => cfg.if_bin_edges = IfBinEdges::new(list(v)?).map_err(|e| e.to_string())?,
                    "window" => {
                        let w: Vec<i32> = list(v)?;
                        let [a, b] = w[..] else {
                            return Err("window needs two years".into());
                        };
                        cfg.window = (a, b);
                    }
                    "confidence" => cfg.confidence = scalar(v)?,
                    "horizon" => cfg.horizon = scalar(v)?,
                    "seed" => cfg.seed = scalar(v)?,
                    "split_ratio" => cfg.split_ratio = scalar(v)?,
                    "workers" => cfg.workers = scalar(v)?,
                    "strict" => cfg.strict = parse_bool(v)?,
                    "focal" => {
                        cfg.focal = v.parse().map_err(|e: crate::corpus::region::UnknownRegion| e.to_string())?
                    }
                    "partners" => cfg.partners = list(v)?,
                    "filters" => cfg.filters = list(v)?,
                    "counting" => cfg.counting = v.parse()?,
                    "model_family" => cfg.model_family = v.parse()?,
                    "label_mode" => cfg.label_mode = label_mode(v)?,
                    "affiliation_score" => cfg.affiliation_score = affiliation(v)?,
                    "sweep_thresholds" => cfg.sweep_thresholds = list(v)?,
                    "export_end" => cfg.export_end = scalar(v)?,
                    other => return Err(format!("unknown key {other:?}")),
                }
                Ok(())
            })();
            r.map_err(|m| err(format!("{key}: {m}")))?;
        }
        if cfg.output_dir.is_relative() && !cfg.output_dir.starts_with(base_dir) {
            cfg.output_dir = base_dir.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        let unit = |t: f64| t > 0.0 && t < 1.0;
        if !unit(self.threshold) {
            return bad("threshold must lie strictly between 0 and 1");
        }
        if self.sweep_thresholds.iter().any(|t| !unit(*t)) {
            return bad("sweep thresholds must lie strictly between 0 and 1");
        }
        if self.window.0 >= self.window.1 {
            return bad("window start must precede window end");
        }
        if !unit(self.confidence) {
            return bad("confidence must lie strictly between 0 and 1");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio <= 1.0) {
            return bad("split_ratio must lie in (0, 1]");
        }
        if !self.horizon.is_finite() || self.horizon < f64::from(self.window.1) {
            return bad("horizon must be a finite year after the window end");
        }
        if self.partners.is_empty() || self.filters.is_empty() {
            return bad("partners and filters need at least one entry");
        }
        if self.partners.contains(&Partner::Region(self.focal)) {
            return bad("the focal region cannot be its own partner");
        }
        Ok(())
    }

    /// Region paired with the focal one in the per-bin and per-area figures.
    pub fn primary_partner(&self) -> Partner {
        self.partners[0]
    }

    /// Canonical `key=value` lines for the named keys, in the order given.
    pub fn canonical(&self, keys: &[&str]) -> String {
        let mut out = String::new();
        for key in keys {
            let v = match *key {
                "regions_table" => table_str(&self.regions_table),
                "aliases_table" => table_str(&self.aliases_table),
                "bri_table" => table_str(&self.bri_table),
                "topics_table" => table_str(&self.topics_table),
                "verify_tables" => self.verify_tables.to_string(),
                "threshold" => format!("{:?}", self.threshold),
                "if_bin_edges" => {
                    self.if_bin_edges.edges().iter().map(|e| format!("{e:?}")).collect::<Vec<_>>().join(",")
                }
                "window" => format!("{},{}", self.window.0, self.window.1),
                "confidence" => format!("{:?}", self.confidence),
                "horizon" => format!("{:?}", self.horizon),
                "seed" => self.seed.to_string(),
                "split_ratio" => format!("{:?}", self.split_ratio),
                "strict" => self.strict.to_string(),
                "focal" => self.focal.to_string(),
                "partners" => self.partners.iter().map(partner_str).collect::<Vec<_>>().join(","),
                "filters" => join(&self.filters),
                "counting" => self.counting.as_str().to_string(),
                "model_family" => self.model_family.as_str().to_string(),
                "label_mode" => label_mode_str(self.label_mode).to_string(),
                "affiliation_score" => affiliation_str(self.affiliation_score).to_string(),
                "sweep_thresholds" => {
                    self.sweep_thresholds.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>().join(",")
                }
                "export_end" => self.export_end.to_string(),
                other => panic!("no canonical form for config key {other}"),
            };
            let _ = writeln!(out, "{key}={v}");
        }
        out
    }
}

/// One series the forecast stage fits: focal region against a partner under a filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesSpec {
    pub partner: Partner,
    pub filter: FilterSpec,
}

/// Configured partners x filters, every partner unfiltered, then the per-bin,
/// per-area and Belt and Road breakdowns.
pub fn series_plan(cfg: &PipelineConfig) -> Vec<SeriesSpec> {
    let mut plan = base_plan(cfg);
    let primary = cfg.primary_partner();
    let mut push = |partner: Partner, filter: FilterSpec| {
        let s = SeriesSpec { partner, filter };
        if !plan.contains(&s) {
            plan.push(s);
        }
    };
    for p in &cfg.partners {
        push(*p, FilterSpec::all());
    }
    for b in 0..cfg.if_bin_edges.n_bins() {
        push(primary, FilterSpec::new([FilterAtom::IfBin(b)]));
    }
    push(primary, FilterSpec::new([FilterAtom::AnyArea]));
    for a in crate::corpus::AREA_TAGS {
        push(primary, FilterSpec::new([FilterAtom::Area(a)]));
    }
    if cfg.focal == GlobalRegion::China {
        for c in [crate::corpus::BriClass::HighIncome, crate::corpus::BriClass::LowIncome] {
            push(Partner::Any, FilterSpec::new([FilterAtom::Bri(c)]));
        }
    }
    plan
}

/// Configured partners x filters only.
pub fn base_plan(cfg: &PipelineConfig) -> Vec<SeriesSpec> {
    let mut plan = Vec::new();
    for f in &cfg.filters {
        for p in &cfg.partners {
            let s = SeriesSpec { partner: *p, filter: f.clone() };
            if !plan.contains(&s) {
                plan.push(s);
            }
        }
    }
    plan
}

/// Distinct filters used by a plan, in first-use order.
pub fn plan_filters(plan: &[SeriesSpec]) -> Vec<FilterSpec> {
    let mut out: Vec<FilterSpec> = Vec::new();
    for s in plan {
        if !out.contains(&s.filter) {
            out.push(s.filter.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = PipelineConfig::parse(
            "# demo\ncorpus = data/c.jsonl\nthreshold = 0.7\nwindow = 2011, 2020\npartners = U.S., *\nfilters = all, area=biotech+if_bin=2\n",
            Path::new("/base"),
        )
        .unwrap();
        assert_eq!(cfg.corpus.as_deref(), Some(Path::new("/base/data/c.jsonl")));
        assert_eq!(cfg.threshold, 0.7);
        assert_eq!(cfg.window, (2011, 2020));
        assert_eq!(cfg.partners, vec![Partner::Region(GlobalRegion::UnitedStates), Partner::Any]);
        assert_eq!(cfg.filters.len(), 2);
        assert_eq!(cfg.output_dir, Path::new("/base/out"));
        assert!(cfg
            .canonical(&["threshold", "filters"])
            .contains("threshold=0.7\nfilters=all,area=biotech+if_bin=2\n"));
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "threshold = 1.0",
            "threshold = 0",
            "window = 2021, 2010",
            "window = 2010",
            "confidence = 1.5",
            "nonsense = 1",
            "seed = -3",
            "partners = China",
            "just words",
        ] {
            assert!(matches!(PipelineConfig::parse(text, Path::new(".")), Err(PipelineError::Config(_))), "{text}");
        }
    }

    #[test]
    fn plan_covers_figures() {
        let cfg = PipelineConfig::default();
        let plan = series_plan(&cfg);
        // 3 partners, 5 bins, composite + 11 areas, 2 income classes
        assert_eq!(plan.len(), 3 + 5 + 12 + 2);
        assert_eq!(plan_filters(&plan).len(), 1 + 5 + 12 + 2);
    }
}
