//! Experiment configuration, stored as TOML.
//!
//! Every section is optional. Without a `[memories]` section the built-in
//! 16-spin reference instance is used, and without a probe pattern its
//! reference probe.

use std::fmt;
use std::path::{Path, PathBuf};

use qamem::capacity::McEngine;
use qamem::chimera::ChimeraGraph;
use qamem::quantum::{AnnealSchedule, ControlTable};
use qamem::sa::{Cooling, SASchedule};
use qamem::{instance, MemorySet, ProbeSpec, SpinVector};
use serde::{Deserialize, Serialize};

/// A configuration problem, with the line it was found on when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.path, self.line) {
            (Some(p), Some(l)) => write!(f, "{}:{l}: {}", p.display(), self.message),
            (Some(p), None) => write!(f, "{}: {}", p.display(), self.message),
            (None, Some(l)) => write!(f, "line {l}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    #[default]
    Oracle,
    Qa,
    Sa,
}

impl EngineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Oracle => "oracle",
            Self::Qa => "qa",
            Self::Sa => "sa",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    /// 8 x 8 cells with 36 dead qubits at fixed positions.
    #[default]
    Dw2,
    Perfect,
    File,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemoriesConfig {
    /// Memory file, one pattern per line, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Inline patterns, used when no path is given.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub patterns: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    /// Build the probe by flipping `distance` random sites of this memory
    /// (0-based), seeded by `run.seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_memory: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<usize>,
    /// Probed sites; all sites when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<usize>>,
    pub h: f64,
    /// Memory counted as success; the nearest one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { pattern: None, from_memory: None, distance: None, mask: None, h: 0.5, target: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub kind: EngineKind,
    pub tie_tol: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { kind: EngineKind::Oracle, tie_tol: qamem::oracle::DEFAULT_TIE_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Report 1 when more than half the shots hit the target, else 0.
    pub majority_vote: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { start: 0.03125, stop: 1.2, step: 0.03125, majority_vote: false }
    }
}

impl SweepConfig {
    /// Grid points `start + k * step` up to `stop`, with a small allowance
    /// so a stop that lands on the grid is included.
    pub fn grid(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QaConfig {
    pub t_anneal: f64,
    pub steps: usize,
    /// Optional `s, A(s)` and `s, B(s)` tables; linear ramps otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_table: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_table: Option<PathBuf>,
    /// Points on the `s` grid used for gap scans.
    pub gap_grid: usize,
}

impl Default for QaConfig {
    fn default() -> Self {
        Self { t_anneal: 100.0, steps: 4000, a_table: None, b_table: None, gap_grid: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaConfig {
    pub t_initial: f64,
    pub t_final: f64,
    pub sweeps: usize,
    pub cooling: Cooling,
}

impl Default for SaConfig {
    fn default() -> Self {
        let d = SASchedule::default();
        Self { t_initial: d.t_initial(), t_final: d.t_final(), sweeps: d.sweeps(), cooling: d.cooling() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Samples per point for the sampling engines; one SA restart per shot.
    pub shots: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { seed: 1, shots: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityConfig {
    /// Largest even `N` in the tail grid.
    pub n_max: usize,
    pub gamma: f64,
    pub t_frac: f64,
    /// `C2` values for the exponential-capacity table.
    pub c2: Vec<f64>,
    pub tradeoff_points: usize,
    /// Also run the `[montecarlo]` block and write `montecarlo.csv`.
    pub montecarlo: bool,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self { n_max: 64, gamma: 0.9, t_frac: 0.25, c2: vec![0.0, 0.02, 0.04], tradeoff_points: 50, montecarlo: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub n: usize,
    pub p: Vec<usize>,
    pub t_frac: f64,
    pub trials: usize,
    pub engine: EngineKind,
    /// SA restarts per trial.
    pub restarts: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { n: 12, p: vec![2, 3, 4], t_frac: 0.25, trials: 2000, engine: EngineKind::Oracle, restarts: 8 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasinConfig {
    /// Probe radius around each memory; the radius bound when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_d: Option<usize>,
    /// Fixed field; half the per-probe bound when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Also test probes that violate the distance condition.
    pub include_violations: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub graph: GraphKind,
    /// Grid size for `graph = "perfect"`.
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_file: Option<PathBuf>,
    /// Extra dead qubits on top of the chosen graph.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dead: Vec<usize>,
    /// Logical problem file; built from memories and probe when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_file: Option<PathBuf>,
    /// Chain strength; twice the largest coefficient times the longest
    /// chain when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_strength: Option<f64>,
    /// Sample the physical problem with SA and decode the shots.
    pub solve: bool,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            graph: GraphKind::Dw2,
            m: 8,
            graph_file: None,
            dead: Vec::new(),
            problem_file: None,
            chain_strength: None,
            solve: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub memories: MemoriesConfig,
    pub probe: ProbeConfig,
    pub engine: EngineConfig,
    pub sweep: SweepConfig,
    pub qa: QaConfig,
    pub sa: SaConfig,
    pub run: RunConfig,
    pub capacity: CapacityConfig,
    pub montecarlo: MonteCarloConfig,
    pub basin: BasinConfig,
    pub embed: EmbedConfig,
    pub output: OutputConfig,
}

/// A parsed configuration plus where it came from, so that relative paths
/// and error lines can be resolved.
#[derive(Clone, Debug, Default)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub path: Option<PathBuf>,
    source: String,
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }
}

impl Loaded {
    pub fn defaults() -> Self {
        Self::default()
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: Some(path.to_path_buf()),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        Self::from_str(&text, Some(path.to_path_buf()))
    }

    pub fn from_str(text: &str, path: Option<PathBuf>) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError {
            path: path.clone(),
            line: e.span().map(|s| line_of_offset(text, s.start)),
            message: e.message().to_string(),
        })?;
        let loaded = Self { config, path, source: text.to_string() };
        loaded.validate()?;
        Ok(loaded)
    }

    fn base_dir(&self) -> PathBuf {
        self.path.as_ref().and_then(|p| p.parent()).map(Path::to_path_buf).unwrap_or_default()
    }

    /// Resolves a path from the config relative to the config's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir().join(p)
        }
    }

    /// Error pointing at `section.key` in the source text.
    pub fn error_at(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError { path: self.path.clone(), line: locate(&self.source, section, key), message: message.into() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.config;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(c.probe.h.is_finite() && c.probe.h >= 0.0) {
            return Err(self.error_at("probe", "h", "probe.h must be a finite non-negative number"));
        }
        if c.probe.pattern.is_some() && c.probe.from_memory.is_some() {
            return Err(self.error_at("probe", "from_memory", "give either probe.pattern or probe.from_memory"));
        }
        if c.probe.from_memory.is_some() != c.probe.distance.is_some() {
            return Err(self.error_at("probe", "distance", "probe.from_memory and probe.distance go together"));
        }
        if !positive(c.sweep.step) {
            return Err(self.error_at("sweep", "step", "sweep.step must be positive"));
        }
        if !(c.sweep.start.is_finite() && c.sweep.start >= 0.0 && c.sweep.stop >= c.sweep.start) {
            return Err(self.error_at("sweep", "stop", "need 0 <= sweep.start <= sweep.stop"));
        }
        if !positive(c.qa.t_anneal) {
            return Err(self.error_at("qa", "t_anneal", "qa.t_anneal must be positive"));
        }
        if c.qa.steps == 0 {
            return Err(self.error_at("qa", "steps", "qa.steps must be at least 1"));
        }
        if c.qa.gap_grid < 2 {
            return Err(self.error_at("qa", "gap_grid", "qa.gap_grid must be at least 2"));
        }
        if let Err(e) = self.sa_schedule() {
            return Err(self.error_at("sa", "t_initial", e.to_string()));
        }
        if c.run.shots == 0 {
            return Err(self.error_at("run", "shots", "run.shots must be at least 1"));
        }
        if !(c.engine.tie_tol.is_finite() && c.engine.tie_tol >= 0.0) {
            return Err(self.error_at("engine", "tie_tol", "engine.tie_tol must be non-negative"));
        }
        if c.montecarlo.engine == EngineKind::Qa {
            return Err(self.error_at("montecarlo", "engine", "montecarlo.engine must be oracle or sa"));
        }
        if c.montecarlo.trials == 0 || c.montecarlo.p.is_empty() || c.montecarlo.p.contains(&0) {
            return Err(self.error_at("montecarlo", "p", "montecarlo needs trials >= 1 and every p >= 1"));
        }
        if c.montecarlo.restarts == 0 {
            return Err(self.error_at("montecarlo", "restarts", "montecarlo.restarts must be at least 1"));
        }
        if !(c.capacity.gamma > 0.0 && c.capacity.gamma < 1.0) {
            return Err(self.error_at("capacity", "gamma", "capacity.gamma must lie in (0, 1)"));
        }
        if !(0.0..0.5).contains(&c.capacity.t_frac) {
            return Err(self.error_at("capacity", "t_frac", "capacity.t_frac must lie in [0, 0.5)"));
        }
        if c.capacity.n_max < 2 || c.capacity.tradeoff_points < 2 {
            return Err(self.error_at("capacity", "n_max", "capacity.n_max and tradeoff_points must be at least 2"));
        }
        if c.embed.m == 0 {
            return Err(self.error_at("embed", "m", "embed.m must be at least 1"));
        }
        if c.embed.graph == GraphKind::File && c.embed.graph_file.is_none() {
            return Err(self.error_at("embed", "graph", "embed.graph = \"file\" needs embed.graph_file"));
        }
        if let Some(s) = c.embed.chain_strength {
            if !positive(s) {
                return Err(self.error_at("embed", "chain_strength", "embed.chain_strength must be positive"));
            }
        }
        Ok(())
    }

    pub fn memories(&self) -> anyhow::Result<MemorySet> {
        let m = &self.config.memories;
        let set = if let Some(p) = &m.path {
            let path = self.resolve(p);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| self.error_at("memories", "path", format!("cannot read {}: {e}", path.display())))?;
            MemorySet::parse(&text).map_err(|e| ConfigError {
                path: Some(path.clone()),
                line: match e {
                    qamem::Error::Parse { line, .. } => Some(line),
                    _ => None,
                },
                message: e.to_string(),
            })?
        } else if !m.patterns.is_empty() {
            MemorySet::parse(&m.patterns.join("\n"))
                .map_err(|e| self.error_at("memories", "patterns", e.to_string()))?
        } else {
            instance::memories()
        };
        Ok(set)
    }

    /// The probe at the configured field strength.
    pub fn probe(&self, memories: &MemorySet) -> anyhow::Result<ProbeSpec> {
        let p = &self.config.probe;
        let pattern: SpinVector = match (&p.pattern, p.from_memory, p.distance) {
            (Some(s), _, _) => s.parse().map_err(|e: qamem::Error| self.error_at("probe", "pattern", e.to_string()))?,
            (None, Some(mu), Some(d)) => {
                if mu >= memories.len() {
                    return Err(self
                        .error_at("probe", "from_memory", format!("memory {mu} does not exist ({} stored)", memories.len()))
                        .into());
                }
                memories
                    .get(mu)
                    .with_random_flips(d, self.config.run.seed)
                    .map_err(|e| self.error_at("probe", "distance", e.to_string()))?
            }
            _ if self.config.memories == MemoriesConfig::default() => instance::probe(),
            _ => return Err(self.error_at("probe", "pattern", "no probe given").into()),
        };
        if pattern.len() != memories.n() {
            return Err(self
                .error_at(
                    "probe",
                    "pattern",
                    format!("probe has {} spins but memories have {}", pattern.len(), memories.n()),
                )
                .into());
        }
        let probe = match &p.mask {
            Some(mask) => ProbeSpec::masked(pattern, mask.clone(), p.h),
            None => ProbeSpec::full(pattern, p.h),
        }
        .map_err(|e| self.error_at("probe", "mask", e.to_string()))?;
        Ok(probe)
    }

    pub fn sa_schedule(&self) -> qamem::Result<SASchedule> {
        let s = &self.config.sa;
        SASchedule::new(s.t_initial, s.t_final, s.sweeps, s.cooling)
    }

    pub fn anneal_schedule(&self) -> anyhow::Result<AnnealSchedule> {
        let q = &self.config.qa;
        match (&q.a_table, &q.b_table) {
            (None, None) => Ok(AnnealSchedule::linear(q.t_anneal)?),
            (Some(a), Some(b)) => {
                let table = |p: &Path, key: &str| -> anyhow::Result<ControlTable> {
                    let path = self.resolve(p);
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| self.error_at("qa", key, format!("cannot read {}: {e}", path.display())))?;
                    Ok(ControlTable::parse(&text).map_err(|e| self.error_at("qa", key, e.to_string()))?)
                };
                let s = AnnealSchedule::from_tables(table(a, "a_table")?, table(b, "b_table")?, q.t_anneal)
                    .map_err(|e| self.error_at("qa", "a_table", e.to_string()))?;
                Ok(s)
            }
            _ => Err(self.error_at("qa", "a_table", "qa.a_table and qa.b_table go together").into()),
        }
    }

    pub fn mc_engine(&self) -> anyhow::Result<McEngine> {
        let mc = &self.config.montecarlo;
        Ok(match mc.engine {
            EngineKind::Sa => McEngine::Sa { schedule: self.sa_schedule()?, restarts: mc.restarts },
            _ => McEngine::Oracle,
        })
    }

    pub fn graph(&self) -> anyhow::Result<ChimeraGraph> {
        let e = &self.config.embed;
        let base = match e.graph {
            GraphKind::Dw2 => ChimeraGraph::dw2_like(),
            GraphKind::Perfect => ChimeraGraph::perfect(e.m)?,
            GraphKind::File => {
                let path = self.resolve(e.graph_file.as_deref().expect("validated"));
                let text = std::fs::read_to_string(&path)
                    .map_err(|err| self.error_at("embed", "graph_file", format!("cannot read {}: {err}", path.display())))?;
                ChimeraGraph::parse(&text).map_err(|err| self.error_at("embed", "graph_file", err.to_string()))?
            }
        };
        if e.dead.is_empty() {
            return Ok(base);
        }
        let mut missing = base.missing().clone();
        missing.extend(e.dead.iter().copied());
        ChimeraGraph::new(base.m(), &missing).map_err(|err| self.error_at("embed", "dead", err.to_string()).into())
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]`, if present.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut in_section = false;
    let mut header_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            in_section = line.trim_matches(|c| c == '[' || c == ']').trim() == section;
            if in_section {
                header_line = Some(i + 1);
            }
            continue;
        }
        if in_section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header_line
}
