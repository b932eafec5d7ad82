//! Experiment configuration files (TOML, `schema = 1`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use raplab::recurrence::{TauCandidates, Thresholds};
use raplab::SampledSignal;
use serde::Deserialize;

pub const SCHEMA: u32 = 1;

/// Configuration problem, located by its dotted key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn missing(key: &str) -> Self {
        Self::new(key, "required key is missing")
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Classify,
    Omega,
    Ode,
    Dde,
    Map,
    Roots,
    Zhikov,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Classify => "classify",
            Kind::Omega => "omega",
            Kind::Ode => "ode",
            Kind::Dde => "dde",
            Kind::Map => "map",
            Kind::Roots => "roots",
            Kind::Zhikov => "zhikov",
        }
    }
}

/// A catalog id or explicit component expressions.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SpecRef {
    Id(String),
    Exprs(Vec<String>),
}

/// A scalar signal: a catalog forcing, an expression in `t`, or a CSV file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSource {
    pub catalog: Option<String>,
    pub expr: Option<String>,
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub dt: Option<f64>,
    /// Keep only `[a, b]` of the loaded or sampled signal.
    pub restrict: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdOverrides {
    pub epsilon_grid: Option<Vec<f64>>,
    pub tau: Option<TauCandidates>,
    pub cluster_tol: Option<f64>,
    pub tail_fraction: Option<f64>,
    pub gap_bound_factor: Option<f64>,
    pub growth_bound: Option<f64>,
    pub lipschitz_bound: Option<f64>,
}

impl ThresholdOverrides {
    /// Defaults scaled to `s`, with every given key replacing its default.
    pub fn resolve(&self, s: &SampledSignal) -> Thresholds {
        let mut th = Thresholds::for_signal(s);
        if let Some(v) = &self.epsilon_grid {
            th.epsilon_grid = v.clone();
        }
        if let Some(v) = &self.tau {
            th.tau_candidates = v.clone();
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut th.cluster_tol, self.cluster_tol);
        set(&mut th.tail_fraction, self.tail_fraction);
        set(&mut th.gap_bound_factor, self.gap_bound_factor);
        set(&mut th.growth_bound, self.growth_bound);
        set(&mut th.lipschitz_bound, self.lipschitz_bound);
        th
    }
}

/// Shifts given as a list or as `start + k * spacing`, `k < count`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ShiftSpec {
    List(Vec<f64>),
    Range { start: f64, count: usize, spacing: f64 },
}

impl ShiftSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            ShiftSpec::List(v) => v.clone(),
            ShiftSpec::Range {
                start,
                count,
                spacing,
            } => (0..*count).map(|k| start + spacing * k as f64).collect(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_step: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub rhs: Option<SpecRef>,
    pub delay: Option<SpecRef>,
    pub map: Option<SpecRef>,
    /// Lags of an expression-defined delay equation.
    pub lags: Option<Vec<f64>>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub forcing: Option<SignalSource>,
    pub x0: Option<Vec<f64>>,
    pub t_span: Option<[f64; 2]>,
    pub solver: Option<SolverConfig>,
    /// Constant history of a delay equation.
    pub history: Option<Vec<f64>>,
    /// Length of the history segment; the longest lag (or 1 without lags) by default.
    pub history_span: Option<f64>,
    pub horizon: Option<f64>,
    pub steps_per_delay: Option<usize>,
    pub n_steps: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Classify the computed trajectory (first component).
    #[serde(default)]
    pub classify: bool,
    pub restrict: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationConfig {
    /// `remote` or `global`.
    #[serde(default = "remote")]
    pub test: String,
    pub epsilon: f64,
    pub tau: TauCandidates,
}

fn remote() -> String {
    "remote".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaConfig {
    pub shifts: ShiftSpec,
    pub window_len: f64,
    #[serde(default)]
    pub extension: f64,
    pub cluster_tol: f64,
    pub epsilon: f64,
    /// Candidates of the equi-AP test; a quarter of the member length by default.
    pub tau: Option<TauCandidates>,
    #[serde(default = "three")]
    pub gap_bound_factor: f64,
    /// Member CSVs written at most.
    #[serde(default = "ten")]
    pub max_member_files: usize,
}

fn three() -> f64 {
    3.0
}

fn ten() -> usize {
    10
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionHConfig {
    pub kappa: f64,
    pub alpha: f64,
    /// Per-component `[lo, hi]`.
    #[serde(rename = "box")]
    pub sample_box: Vec<[f64; 2]>,
    pub n_pairs: usize,
    #[serde(default = "zero_times")]
    pub t_samples: Vec<f64>,
}

fn zero_times() -> Vec<f64> {
    vec![0.0]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionConfig {
    /// Second initial state, compared against `system.x0`.
    pub x0: Vec<f64>,
    pub kappa: f64,
    pub alpha: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FibersConfig {
    pub shifts: ShiftSpec,
    pub x0s: Vec<Vec<f64>>,
    pub burn_in: f64,
    /// Comparison window (flows).
    pub window: Option<f64>,
    /// Iterates per run (maps).
    pub n_steps: Option<usize>,
    pub cluster_tol: f64,
    pub forcing_period: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub restart_times: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub horizon: f64,
    pub delta0: f64,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
}

/// `|x(t) - target| ≤ tol` for all `t ≥ from`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub target: Vec<f64>,
    pub tol: f64,
    pub from: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleConfig {
    pub tau: f64,
    pub t: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyConfig {
    pub id: Option<String>,
    pub exprs: Option<Vec<String>>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub t_span: [f64; 2],
    pub dt: f64,
    /// Continue through collisions instead of stopping with an error.
    #[serde(default)]
    pub lenient: bool,
    /// Separation certificate claim `min |λ_i - λ_j| ≥ alpha`.
    pub separation_alpha: Option<f64>,
    #[serde(default)]
    pub classify_branches: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZhikovConfig {
    #[serde(default)]
    pub with_decay: bool,
    #[serde(default = "tenth")]
    pub floor_fraction: f64,
}

fn tenth() -> f64 {
    0.1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    pub kind: Kind,
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Write sampled signals as CSV artifacts.
    #[serde(default = "yes")]
    pub write_signals: bool,
    pub signal: Option<SignalSource>,
    #[serde(default)]
    pub thresholds: ThresholdOverrides,
    pub translation: Option<TranslationConfig>,
    pub omega: Option<OmegaConfig>,
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    pub condition_h: Option<ConditionHConfig>,
    pub contraction: Option<ContractionConfig>,
    pub fibers: Option<FibersConfig>,
    pub stability: Option<StabilityConfig>,
    pub band: Option<BandConfig>,
    pub cocycle: Option<CocycleConfig>,
    pub poly: Option<PolyConfig>,
    pub zhikov: Option<ZhikovConfig>,
    #[serde(default)]
    pub expect: toml::Table,
    /// Directory of the config file; relative input paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
    #[serde(skip)]
    pub stem: String,
}

fn yes() -> bool {
    true
}

impl Config {
    pub fn load(path: &Path) -> Result<(Config, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path)
            .map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| ConfigError::new("<file>", e.to_string()))?;
        let mut cfg = Self::parse(text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        Ok((cfg, bytes))
    }

    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::new("<document>", e.message()))?;
        for key in ["schema", "kind"] {
            if !table.contains_key(key) {
                return Err(ConfigError::missing(key));
            }
        }
        let cfg: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::new("<document>", e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.stem)
    }

    /// Kind-specific required keys.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA {
            return Err(ConfigError::new("schema", format!("unsupported schema {} (expected {SCHEMA})", self.schema)));
        }
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains(['/', '\\']) || name == ".." {
                return Err(ConfigError::new("name", "must be a plain directory name"));
            }
        }
        match self.kind {
            Kind::Classify | Kind::Omega | Kind::Zhikov => {
                validate_source(self.signal.as_ref().ok_or_else(|| ConfigError::missing("signal"))?, "signal")?;
                if self.kind == Kind::Omega && self.omega.is_none() {
                    return Err(ConfigError::missing("omega"));
                }
            }
            Kind::Ode => {
                let sys = self.system("system.rhs")?;
                if sys.rhs.is_none() {
                    return Err(ConfigError::missing("system.rhs"));
                }
                require(&sys.x0, "system.x0")?;
                require(&sys.t_span, "system.t_span")?;
            }
            Kind::Dde => {
                let sys = self.system("system.delay")?;
                match &sys.delay {
                    None => return Err(ConfigError::missing("system.delay")),
                    Some(SpecRef::Exprs(_)) => require(&sys.lags, "system.lags")?,
                    Some(SpecRef::Id(_)) => {}
                }
                require(&sys.history, "system.history")?;
                require(&sys.horizon, "system.horizon")?;
            }
            Kind::Map => {
                let sys = self.system("system.map")?;
                if sys.map.is_none() {
                    return Err(ConfigError::missing("system.map"));
                }
                require(&sys.x0, "system.x0")?;
                require(&sys.n_steps, "system.n_steps")?;
                if let Some(f) = &self.fibers {
                    require(&f.n_steps, "fibers.n_steps")?;
                }
            }
            Kind::Roots => {
                let p = self.poly.as_ref().ok_or_else(|| ConfigError::missing("poly"))?;
                match (&p.id, &p.exprs) {
                    (None, None) => return Err(ConfigError::missing("poly.id")),
                    (Some(_), Some(_)) => return Err(ConfigError::new("poly.exprs", "give either `id` or `exprs`")),
                    _ => {}
                }
            }
        }
        if let Some(sys) = &self.system {
            if let Some(f) = &sys.forcing {
                validate_source(f, "system.forcing")?;
            }
        }
        if let (Kind::Ode, Some(f)) = (self.kind, &self.fibers) {
            require(&f.window, "fibers.window")?;
        }
        Ok(())
    }

    fn system(&self, first_key: &str) -> Result<&SystemConfig, ConfigError> {
        self.system.as_ref().ok_or_else(|| ConfigError::missing(first_key))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

fn require<T>(v: &Option<T>, key: &str) -> Result<(), ConfigError> {
    v.as_ref().map(|_| ()).ok_or_else(|| ConfigError::missing(key))
}

fn validate_source(s: &SignalSource, key: &str) -> Result<(), ConfigError> {
    let given = [s.catalog.is_some(), s.expr.is_some(), s.file.is_some()]
        .iter()
        .filter(|b| **b)
        .count();
    if given != 1 {
        return Err(ConfigError::new(
            format!("{key}.catalog"),
            "exactly one of `catalog`, `expr` and `file` is required",
        ));
    }
    if s.file.is_none() {
        require(&s.t1, &format!("{key}.t1"))?;
        require(&s.dt, &format!("{key}.dt"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_rhs_names_the_key() {
        let e = Config::parse("schema = 1\nkind = \"ode\"\n[system]\nx0 = [0.0]\nt_span = [0.0, 1.0]\n").unwrap_err();
        assert_eq!(e.key, "system.rhs");
        let e = Config::parse("schema = 1\nkind = \"ode\"\n").unwrap_err();
        assert_eq!(e.key, "system.rhs");
    }

    #[test]
    fn schema_and_kind_are_required() {
        assert_eq!(Config::parse("kind = \"ode\"").unwrap_err().key, "schema");
        assert_eq!(Config::parse("schema = 1").unwrap_err().key, "kind");
        assert_eq!(Config::parse("schema = 2\nkind = \"map\"").unwrap_err().key, "schema");
    }

    #[test]
    fn signal_source_needs_exactly_one_origin() {
        let e = Config::parse("schema = 1\nkind = \"classify\"\n[signal]\nt1 = 1.0\ndt = 0.1\n").unwrap_err();
        assert_eq!(e.key, "signal.catalog");
        let e = Config::parse("schema = 1\nkind = \"classify\"\n[signal]\ncatalog = \"sin\"\ndt = 0.1\n").unwrap_err();
        assert_eq!(e.key, "signal.t1");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = Config::parse("schema = 1\nkind = \"classify\"\nbogus = 3\n").unwrap_err();
        assert!(e.message.contains("bogus"), "{e}");
    }

    #[test]
    fn thresholds_override_defaults() {
        let cfg = Config::parse(
            "schema = 1\nkind = \"classify\"\n[signal]\nexpr = \"sin(t)\"\nt1 = 100.0\ndt = 0.1\n\
             [thresholds]\nepsilon_grid = [0.1]\ntau = { kind = \"grid\", start = 1.0, end = 10.0, step = 0.5 }\n",
        )
        .unwrap();
        let s = SampledSignal::from_fn(0.0, 0.1, 1001, f64::sin).unwrap();
        let th = cfg.thresholds.resolve(&s);
        assert_eq!(th.epsilon_grid, vec![0.1]);
        assert_eq!(th.tau_candidates, TauCandidates::grid(1.0, 10.0, 0.5));
        assert_eq!(th.tail_fraction, Thresholds::for_signal(&s).tail_fraction);
    }
}
