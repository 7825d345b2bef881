//! Time integration of the string equations.
//!
//! * [`characteristic`] integrates `(S, P, Q)` in the straightened
//!   coordinates `(tau, vartheta)`, where both families move one grid cell
//!   per cell of time.
//! * [`upwind`] integrates the raw first-order system in `(t, theta)` with a
//!   characteristic-wise upwind scheme; it shares no code with the first path
//!   beyond the metric.
//! * [`dalembert`] is the closed-form flat-space solution in orthonormal gauge.

pub mod characteristic;
pub mod dalembert;
pub mod monitors;
pub mod upwind;

use serde::Serialize;

use crate::dynamics::{
    ambient_dot, induced_metric_cartesian, radius, spq_rhs_with, CharacteristicState, SourceMutation, Speeds, Vec4,
    WorldSheetJet,
};
use crate::error::Result;
use crate::initial_data::AssumptionReport;
pub use monitors::{DiagnosticsReport, MonitorAccumulator, Verdict};

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    ReachedT,
    HorizonViolation { t: f64, theta: f64, horizon_gap: f64 },
    GapCollapse { t: f64, theta: f64, gap: f64 },
    TimelikeLost { t: f64, theta: f64, delta: f64 },
    NumericalFailure { t: f64, detail: String },
}

impl Termination {
    pub fn reached(&self) -> bool {
        matches!(self, Termination::ReachedT)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Termination::ReachedT => "reached-t",
            Termination::HorizonViolation { .. } => "horizon-violation",
            Termination::GapCollapse { .. } => "gap-collapse",
            Termination::TimelikeLost { .. } => "timelike-lost",
            Termination::NumericalFailure { .. } => "numerical-failure",
        }
    }
}

/// Chart-specific parts of the characteristic solver.
pub trait Chart: Sync {
    fn name(&self) -> &'static str;
    fn mass(&self) -> f64;
    /// Common source `F` of the `P` and `Q` equations.
    fn source(&self, st: &CharacteristicState) -> Result<Vec4>;
    /// Areal radius minus `2m`.
    fn horizon_gap(&self, pos: &Vec4) -> f64;
    /// Ambient inner product of chart-native vectors based at `pos`.
    fn dot(&self, pos: &Vec4, a: &Vec4, b: &Vec4) -> Result<f64>;
    /// Determinant of the induced metric of a chart-native jet.
    fn delta(&self, jet: &WorldSheetJet) -> Result<f64> {
        let g00 = self.dot(&jet.u, &jet.v, &jet.v)?;
        let g01 = self.dot(&jet.u, &jet.v, &jet.w)?;
        let g11 = self.dot(&jet.u, &jet.w, &jet.w)?;
        Ok(g00 * g11 - g01 * g01)
    }
    /// The jet expressed in the Cartesian chart.
    fn to_cartesian(&self, jet: &WorldSheetJet) -> WorldSheetJet;
}

/// Cartesian Schwarzschild chart (Minkowski when `mass = 0`).
#[derive(Debug, Clone, Copy)]
pub struct CartesianChart {
    pub mass: f64,
    pub mutation: Option<SourceMutation>,
}

impl CartesianChart {
    pub fn new(mass: f64) -> Self {
        CartesianChart { mass, mutation: None }
    }
}

impl Chart for CartesianChart {
    fn name(&self) -> &'static str {
        "cartesian"
    }

    fn mass(&self) -> f64 {
        self.mass
    }

    fn source(&self, st: &CharacteristicState) -> Result<Vec4> {
        spq_rhs_with(st, self.mass, self.mutation)
    }

    fn horizon_gap(&self, pos: &Vec4) -> f64 {
        radius(pos) - 2.0 * self.mass
    }

    fn dot(&self, pos: &Vec4, a: &Vec4, b: &Vec4) -> Result<f64> {
        ambient_dot(pos, a, b, self.mass)
    }

    fn delta(&self, jet: &WorldSheetJet) -> Result<f64> {
        Ok(induced_metric_cartesian(jet, self.mass)?.delta())
    }

    fn to_cartesian(&self, jet: &WorldSheetJet) -> WorldSheetJet {
        *jet
    }
}

/// Solution on one time level, restricted to the nodes whose values are
/// determined by the data.
#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub theta: Vec<f64>,
    /// Chart-native jets.
    pub jets: Vec<WorldSheetJet>,
    pub speeds: Vec<Speeds>,
    pub delta: Vec<f64>,
    pub horizon_gap: Vec<f64>,
}

impl Snapshot {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Four-point Lagrange interpolation of the jet at `theta`; `None` when
    /// `theta` lies outside the stored nodes.
    pub fn sample(&self, theta: f64) -> Option<WorldSheetJet> {
        let n = self.theta.len();
        if n < 4 || theta < self.theta[0] || theta > self.theta[n - 1] {
            return None;
        }
        let i = self.theta.partition_point(|&x| x <= theta).clamp(2, n - 2) - 2;
        let i = i.min(n - 4);
        let xs = &self.theta[i..i + 4];
        let mut w = [0.0; 4];
        for a in 0..4 {
            let mut l = 1.0;
            for b in 0..4 {
                if a != b {
                    l *= (theta - xs[b]) / (xs[a] - xs[b]);
                }
            }
            w[a] = l;
        }
        let mut out = [0.0; 12];
        for a in 0..4 {
            let arr = self.jets[i + a].to_array();
            for k in 0..12 {
                out[k] += w[a] * arr[k];
            }
        }
        Some(WorldSheetJet::from_array(&out))
    }
}

/// Grid parameters actually used by a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridInfo {
    pub nodes: usize,
    pub h: f64,
    pub dt: f64,
    pub cfl: f64,
}

/// Extremes of the pointwise constraints over every computed level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremes {
    /// `min (areal radius - 2m)`.
    pub min_horizon_gap: f64,
    /// `max Delta`; negative while the sheet stays timelike.
    pub max_delta: f64,
    pub min_gap: f64,
}

impl Default for Extremes {
    fn default() -> Self {
        Extremes { min_horizon_gap: f64::INFINITY, max_delta: f64::NEG_INFINITY, min_gap: f64::INFINITY }
    }
}

impl Extremes {
    pub fn record(&mut self, horizon_gap: f64, delta: f64, gap: f64) {
        self.min_horizon_gap = self.min_horizon_gap.min(horizon_gap);
        self.max_delta = self.max_delta.max(delta);
        self.min_gap = self.min_gap.min(gap);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub chart: &'static str,
    pub termination: Termination,
    pub final_time: f64,
    pub steps: usize,
    pub grid: GridInfo,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: DiagnosticsReport,
    pub assumptions: Option<AssumptionReport>,
    pub extremes: Extremes,
    /// Largest `|Delta|`-relative departure of `P` and `Q` from being null,
    /// `max |g(P,P)|, |g(Q,Q)|` divided by `|g(P,Q)|`.
    pub null_defect: f64,
}

impl SolveResult {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a solve always stores the initial level")
    }
}
