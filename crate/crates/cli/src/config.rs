//! TOML run configuration. Every section is optional; unknown keys are errors.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use worldsheet::dynamics::SourceMutation;
use worldsheet::initial_data::{EpsilonFamily, FamilyProfile, InitialData};
use worldsheet::solver::characteristic::{CharacteristicConfig, Interpolation};
use worldsheet::solver::upwind::UpwindConfig;
use worldsheet::verify::SuiteConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub metric: MetricSection,
    pub data: DataSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub output: OutputSection,
    pub suites: SuitesSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricChoice {
    Schwarzschild,
    Minkowski,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricSection {
    pub kind: MetricChoice,
    pub mass: f64,
    /// Data must keep `r > 2m + horizon_margin`; runs stop at half of it.
    pub horizon_margin: f64,
}

impl Default for MetricSection {
    fn default() -> Self {
        MetricSection { kind: MetricChoice::Schwarzschild, mass: 1.0, horizon_margin: 0.1 }
    }
}

impl MetricSection {
    pub fn mass(&self) -> f64 {
        match self.kind {
            MetricChoice::Schwarzschild => self.mass,
            MetricChoice::Minkowski => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileChoice {
    Pulse,
    ClosedLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Data file; when set the family parameters are ignored.
    pub file: Option<PathBuf>,
    pub profile: ProfileChoice,
    pub p_bar: [f64; 3],
    pub epsilon: f64,
    /// Number of data samples.
    pub samples: usize,
    pub width: f64,
    pub direction: [f64; 3],
    pub velocity_direction: [f64; 3],
    pub beta: f64,
    /// Half-length `L` of the pulse window `[-L, L]`.
    pub window: f64,
    pub swirl: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            file: None,
            profile: ProfileChoice::Pulse,
            p_bar: [10.0, 0.0, 0.0],
            epsilon: 1e-3,
            samples: 4097,
            width: 1.0,
            direction: [0.0, 1.0, 0.0],
            velocity_direction: [1.0, 0.0, 0.0],
            beta: 0.5,
            window: 200.0,
            swirl: 0.0,
        }
    }
}

impl DataSection {
    pub fn family(&self) -> EpsilonFamily {
        let profile = match self.profile {
            ProfileChoice::Pulse => FamilyProfile::Pulse {
                width: self.width,
                direction: self.direction,
                velocity_direction: self.velocity_direction,
                beta: self.beta,
                window: self.window,
            },
            ProfileChoice::ClosedLoop => FamilyProfile::ClosedLoop { swirl: self.swirl },
        };
        EpsilonFamily { p_bar: self.p_bar, epsilon: self.epsilon, profile }
    }

    /// The data and, for generated families, the `epsilon` that labels the monitors.
    pub fn load(&self, base: &Path) -> Result<(InitialData, Option<f64>)> {
        match &self.file {
            Some(f) => {
                let path = if f.is_absolute() { f.clone() } else { base.join(f) };
                let d = InitialData::read_from(&path).with_context(|| format!("reading data file {}", path.display()))?;
                Ok((d, None))
            }
            None => Ok((self.family().sample(self.samples)?, Some(self.epsilon))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub nodes: usize,
    pub cfl: f64,
    pub interpolation: Interpolation,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { nodes: 4096, cfl: 1.0, interpolation: Interpolation::Linear }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    Characteristic,
    Upwind,
    Spherical,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub kind: SolverChoice,
    /// Negative values integrate backwards in time.
    pub t_final: f64,
    /// Fraction of the smallest initial speed gap below which runs stop.
    pub gap_floor: f64,
    pub c1_bound: f64,
    pub enforce_assumptions: bool,
    pub upwind_order: u8,
    pub upwind_cfl: f64,
    pub upwind_nodes: Option<usize>,
    pub polar_margin: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            kind: SolverChoice::Characteristic,
            t_final: 100.0,
            gap_floor: 1e-3,
            c1_bound: 1e8,
            enforce_assumptions: true,
            upwind_order: 2,
            upwind_cfl: 0.5,
            upwind_nodes: None,
            polar_margin: worldsheet::spherical::DEFAULT_POLAR_MARGIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub prefix: String,
    /// Store a snapshot every this many steps (0: first and last only).
    pub snapshot_every: usize,
    pub write_snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: None, prefix: "run".into(), snapshot_every: 0, write_snapshots: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuitesSection {
    /// Empty runs every suite.
    pub names: Vec<String>,
    pub samples: usize,
    pub seed: u64,
    pub mutation: Option<SourceMutation>,
}

impl Default for SuitesSection {
    fn default() -> Self {
        let d = SuiteConfig::default();
        SuitesSection { names: vec![], samples: d.samples, seed: d.seed, mutation: None }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.metric.mass >= 0.0) {
            bail!("metric.mass must be nonnegative, got {}", self.metric.mass);
        }
        if !(self.metric.horizon_margin > 0.0) && self.metric.mass() > 0.0 {
            bail!("metric.horizon_margin must be positive, got {}", self.metric.horizon_margin);
        }
        if self.data.file.is_none() && !(self.data.epsilon > 0.0) {
            bail!("data.epsilon must be positive, got {}", self.data.epsilon);
        }
        if self.data.samples < 5 {
            bail!("data.samples must be at least 5");
        }
        if self.grid.nodes < 8 {
            bail!("grid.nodes must be at least 8");
        }
        if !(self.grid.cfl > 0.0) {
            bail!("grid.cfl must be positive");
        }
        if !self.solver.t_final.is_finite() {
            bail!("solver.t_final must be finite");
        }
        if self.solver.t_final < 0.0 && self.solver.kind != SolverChoice::Characteristic {
            bail!("negative solver.t_final needs solver.kind = \"characteristic\"");
        }
        for n in &self.suites.names {
            if !worldsheet::verify::SUITES.contains(&n.as_str()) {
                bail!("suites.names: unknown suite '{n}'");
            }
        }
        Ok(())
    }

    pub fn characteristic(&self) -> CharacteristicConfig {
        CharacteristicConfig {
            nodes: self.grid.nodes,
            cfl: self.grid.cfl,
            interpolation: self.grid.interpolation,
            t_final: self.solver.t_final,
            horizon_margin: self.metric.horizon_margin,
            gap_floor: self.solver.gap_floor,
            snapshot_every: self.output.snapshot_every,
            enforce_assumptions: self.solver.enforce_assumptions,
            c1_bound: self.solver.c1_bound,
        }
    }

    pub fn upwind(&self) -> UpwindConfig {
        UpwindConfig {
            order: self.solver.upwind_order,
            cfl: self.solver.upwind_cfl,
            t_final: self.solver.t_final,
            nodes: self.solver.upwind_nodes,
            snapshot_every: self.output.snapshot_every,
            horizon_margin: self.metric.horizon_margin,
            ..UpwindConfig::default()
        }
    }

    pub fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            seed: self.suites.seed,
            samples: self.suites.samples,
            mass: if self.metric.mass() > 0.0 { self.metric.mass() } else { 1.0 },
            mutation: self.suites.mutation,
        }
    }
}
