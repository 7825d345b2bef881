//! Cauchy data `(p, q) = (X, X_t)` at `t = 0`, the initial speeds derived
//! from it, the admissibility checks on those speeds and the small-data
//! families used by the long-time runs.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{eigenvalues, induced_metric_cartesian, to_characteristic, Vec4, WorldSheetJet};
use crate::error::{Assumption, Error, Result};
use crate::numerics::{SplineEnds, UniformSpline};
use crate::transform::LambdaInitial;

/// Position and velocity samples on a uniform `theta` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub theta0: f64,
    pub h: f64,
    pub periodic: bool,
    pub p: Vec<Vec4>,
    pub q: Vec<Vec4>,
    /// Exact `p_theta` when the generator knows it; otherwise it is taken
    /// from a spline through `p`.
    pub dp: Option<Vec<Vec4>>,
}

/// Splines through each component of `p`, `p_theta` and `q`.
#[derive(Debug, Clone)]
pub struct DataSplines {
    pub p: Vec<UniformSpline>,
    pub dp: Option<Vec<UniformSpline>>,
    pub q: Vec<UniformSpline>,
}

impl DataSplines {
    pub fn jet(&self, theta: f64) -> WorldSheetJet {
        let p0 = &self.p[0];
        // root finders can land a rounding error outside the window
        let theta = if p0.period().is_none() { theta.clamp(p0.x0(), p0.x_end()) } else { theta };
        let mut j = WorldSheetJet { u: [0.0; 4], v: [0.0; 4], w: [0.0; 4] };
        for c in 0..4 {
            j.u[c] = self.p[c].eval(theta);
            j.v[c] = self.q[c].eval(theta);
            j.w[c] = match &self.dp {
                Some(d) => d[c].eval(theta),
                None => self.p[c].deriv(theta),
            };
        }
        j
    }
}

impl InitialData {
    pub fn new(theta0: f64, h: f64, periodic: bool, p: Vec<Vec4>, q: Vec<Vec4>, dp: Option<Vec<Vec4>>) -> Result<Self> {
        if p.len() != q.len() || dp.as_ref().is_some_and(|d| d.len() != p.len()) {
            return Err(Error::InvalidInput("p, q and p_theta must have the same length".into()));
        }
        if p.len() < 5 {
            return Err(Error::InvalidInput("initial data needs at least 5 samples".into()));
        }
        if !(h > 0.0) || !h.is_finite() || !theta0.is_finite() {
            return Err(Error::InvalidInput(format!("bad grid: theta0 = {theta0}, h = {h}")));
        }
        let finite = |v: &Vec<Vec4>| v.iter().flatten().all(|x| x.is_finite());
        if !finite(&p) || !finite(&q) || dp.as_ref().is_some_and(|d| !finite(d)) {
            return Err(Error::InvalidInput("initial data contains non-finite values".into()));
        }
        Ok(InitialData { theta0, h, periodic, p, q, dp })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.theta0 + i as f64 * self.h
    }

    pub fn splines(&self) -> Result<DataSplines> {
        let ends = if self.periodic { SplineEnds::Periodic } else { SplineEnds::Clamped };
        let comp = |v: &Vec<Vec4>, c: usize| UniformSpline::new(self.theta0, self.h, v.iter().map(|x| x[c]).collect(), ends);
        let mut p = Vec::with_capacity(4);
        let mut q = Vec::with_capacity(4);
        for c in 0..4 {
            p.push(comp(&self.p, c)?);
            q.push(comp(&self.q, c)?);
        }
        let dp = match &self.dp {
            Some(d) => Some((0..4).map(|c| comp(d, c)).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        Ok(DataSplines { p, dp, q })
    }

    /// `p_theta` at node `i`.
    pub fn tangent(&self, i: usize, splines: &DataSplines) -> Vec4 {
        match &self.dp {
            Some(d) => d[i],
            None => {
                let th = self.theta(i);
                [0, 1, 2, 3].map(|c| splines.p[c].deriv(th))
            }
        }
    }

    pub fn node_jet(&self, i: usize, splines: &DataSplines) -> WorldSheetJet {
        WorldSheetJet { u: self.p[i], v: self.q[i], w: self.tangent(i, splines) }
    }

    /// Plain-text table: `#` comment lines (with optional `key = value`
    /// metadata), a header line, then one whitespace-separated row per node.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# worldsheet initial data\n");
        let _ = writeln!(s, "# periodic = {}", self.periodic);
        let with_dp = self.dp.is_some();
        s.push_str("theta p0 p1 p2 p3 q0 q1 q2 q3");
        if with_dp {
            s.push_str(" dp0 dp1 dp2 dp3");
        }
        s.push('\n');
        for i in 0..self.len() {
            let _ = write!(s, "{:.17e}", self.theta(i));
            for x in self.p[i].iter().chain(self.q[i].iter()) {
                let _ = write!(s, " {x:.17e}");
            }
            if let Some(d) = &self.dp {
                for x in d[i].iter() {
                    let _ = write!(s, " {x:.17e}");
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut periodic = false;
        let mut header: Option<Vec<String>> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.split_once('=') {
                    if k.trim() == "periodic" {
                        periodic = v.trim().parse().map_err(|_| Error::Parse {
                            line: ln + 1,
                            detail: format!("periodic must be true or false, got {:?}", v.trim()),
                        })?;
                    }
                }
                continue;
            }
            if header.is_none() {
                let cols: Vec<String> = line.split_whitespace().map(str::to_string).collect();
                let expect = ["theta", "p0", "p1", "p2", "p3", "q0", "q1", "q2", "q3"];
                if cols.len() < 9 || cols[..9] != expect {
                    return Err(Error::Parse { line: ln + 1, detail: format!("expected header {expect:?}") });
                }
                if cols.len() != 9 && cols[9..] != ["dp0", "dp1", "dp2", "dp3"] {
                    return Err(Error::Parse { line: ln + 1, detail: "unknown extra columns".into() });
                }
                header = Some(cols);
                continue;
            }
            let ncols = header.as_ref().map_or(0, Vec::len);
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: ln + 1, detail: e.to_string() })?;
            if row.len() != ncols {
                return Err(Error::Parse { line: ln + 1, detail: format!("expected {ncols} columns, got {}", row.len()) });
            }
            rows.push(row);
        }
        if rows.len() < 5 {
            return Err(Error::Parse { line: 0, detail: "need at least 5 data rows".into() });
        }
        let theta0 = rows[0][0];
        let h = rows[1][0] - rows[0][0];
        for (i, r) in rows.iter().enumerate() {
            let expect = theta0 + i as f64 * h;
            if (r[0] - expect).abs() > 1e-9 * (1.0 + expect.abs()) {
                return Err(Error::Parse { line: 0, detail: format!("theta grid is not uniform at row {}", i + 1) });
            }
        }
        let take = |r: &Vec<f64>, o: usize| [r[o], r[o + 1], r[o + 2], r[o + 3]];
        let p = rows.iter().map(|r| take(r, 1)).collect();
        let q = rows.iter().map(|r| take(r, 5)).collect();
        let dp = if rows[0].len() == 13 { Some(rows.iter().map(|r| take(r, 9)).collect()) } else { None };
        InitialData::new(theta0, h, periodic, p, q, dp)
    }
}

/// Initial speeds at the data nodes.
pub fn lambda0_from_data(data: &InitialData, m: f64) -> Result<LambdaInitial> {
    let sp = data.splines()?;
    let mut lm = Vec::with_capacity(data.len());
    let mut lp = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let s = eigenvalues(&induced_metric_cartesian(&data.node_jet(i, &sp), m)?)?;
        lm.push(s.minus);
        lp.push(s.plus);
    }
    LambdaInitial::from_samples(data.theta0, data.h, lm, lp, data.periodic)
}

/// Outcome of one admissibility check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub passed: bool,
    /// The measured quantity the verdict is based on.
    pub measured: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub regularity: CheckOutcome,
    pub separation: CheckOutcome,
    pub ordering: CheckOutcome,
    /// `inf over theta1 <= theta2 of l+(theta2) - l-(theta1)`: a lower bound
    /// for the speed gap at all later times.
    pub ordering_margin: f64,
    /// A pair `theta1 < theta2` with `l-(theta1) >= l+(theta2)` when ordering fails.
    pub witness: Option<(f64, f64)>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.regularity.passed && self.separation.passed && self.ordering.passed
    }

    /// First failing check as an error.
    pub fn into_result(self) -> Result<Self> {
        for (which, c) in [
            (Assumption::Regularity, &self.regularity),
            (Assumption::Separation, &self.separation),
            (Assumption::Ordering, &self.ordering),
        ] {
            if !c.passed {
                return Err(Error::AssumptionViolated { which, detail: c.detail.clone() });
            }
        }
        Ok(self)
    }
}

/// Checks regularity (bounded speeds and slopes, up to `c1_bound`),
/// pointwise separation and the ordering condition on the whole line.
/// For periodic data the ordering condition reduces to `max l- < min l+`.
pub fn check_assumptions(lam: &LambdaInitial, c1_bound: f64) -> AssumptionReport {
    let nodes: Vec<(f64, f64, f64)> = lam.nodes().collect();
    let h = lam.spacing();
    let mut c1: f64 = 0.0;
    let mut finite = true;
    for &(x, m, p) in &nodes {
        for y in [x, x + 0.5 * h] {
            let vals = [m, p, lam.minus.deriv(y), lam.plus.deriv(y)];
            finite &= vals.iter().all(|v| v.is_finite());
            c1 = vals.iter().fold(c1, |a, v| a.max(v.abs()));
        }
    }
    let regularity = CheckOutcome {
        passed: finite && c1 <= c1_bound,
        measured: c1,
        detail: format!("C1 norm of the initial speeds {c1:.6e} (bound {c1_bound:.3e})"),
    };

    let (mut kappa, mut at) = (f64::INFINITY, 0.0);
    for &(x, m, p) in &nodes {
        if p - m < kappa {
            kappa = p - m;
            at = x;
        }
    }
    let separation = CheckOutcome {
        passed: kappa > 0.0,
        measured: kappa,
        detail: format!("minimum gap {kappa:.6e} at theta = {at:.6}"),
    };

    let (margin, witness_pair) = if let Some(period) = lam.period() {
        let (imax, lmax) = argmax(nodes.iter().map(|n| n.1));
        let (imin, pmin) = argmin(nodes.iter().map(|n| n.2));
        let t1 = nodes[imax].0;
        let mut t2 = nodes[imin].0;
        if t2 <= t1 {
            t2 += period;
        }
        (pmin - lmax, (t1, t2))
    } else {
        // sweep left to right keeping the running maximum of l-
        let mut best = f64::INFINITY;
        let mut pair = (nodes[0].0, nodes[0].0);
        let (mut run_max, mut run_at) = (f64::NEG_INFINITY, nodes[0].0);
        for &(x, m, p) in &nodes {
            if m > run_max {
                run_max = m;
                run_at = x;
            }
            if p - run_max < best {
                best = p - run_max;
                pair = (run_at, x);
            }
        }
        (best, pair)
    };
    let witness = if margin <= 0.0 { Some(witness_pair) } else { None };
    let ordering = CheckOutcome {
        passed: margin > 0.0,
        measured: margin,
        detail: match witness {
            Some((a, b)) => format!(
                "l-({a:.6}) >= l+({b:.6}): characteristics from these points cross (margin {margin:.6e})"
            ),
            None => format!("ordering margin {margin:.6e}"),
        },
    };
    AssumptionReport { regularity, separation, ordering, ordering_margin: margin, witness }
}

fn argmax(it: impl Iterator<Item = f64>) -> (usize, f64) {
    it.enumerate().fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a })
}

fn argmin(it: impl Iterator<Item = f64>) -> (usize, f64) {
    it.enumerate().fold((0, f64::INFINITY), |a, (i, v)| if v < a.1 { (i, v) } else { a })
}

/// Requires `|p(theta)| >= 2m + delta_hat` at every node.
pub fn check_exterior_data(data: &InitialData, m: f64, delta_hat: f64) -> Result<()> {
    if m == 0.0 {
        return Ok(());
    }
    for (i, p) in data.p.iter().enumerate() {
        let r = (p[1] * p[1] + p[2] * p[2] + p[3] * p[3]).sqrt();
        if r < 2.0 * m + delta_hat {
            return Err(Error::AssumptionViolated {
                which: Assumption::Exterior,
                detail: format!("|p| = {r:.6} < 2m + delta = {:.6} at theta = {:.6}", 2.0 * m + delta_hat, data.theta(i)),
            });
        }
    }
    Ok(())
}

/// L1-type size of the data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallnessNorms {
    /// `max_c int |dp^c/dtheta|`.
    pub arc_bv: f64,
    /// `max_c int |q^c|`.
    pub vel_l1: f64,
    /// `max_c int |q^c - background^c|`.
    pub vel_l1_relative: f64,
    pub background: Vec4,
}

/// The background velocity is the left-end value for data on a window and
/// the period mean for periodic data, unless one is supplied.
pub fn smallness_norms(data: &InitialData, background: Option<Vec4>) -> Result<SmallnessNorms> {
    let sp = data.splines()?;
    let n = data.len();
    let weights: Vec<f64> = (0..n)
        .map(|i| if !data.periodic && (i == 0 || i == n - 1) { 0.5 * data.h } else { data.h })
        .collect();
    let bg = background.unwrap_or_else(|| {
        if data.periodic {
            let mut m = [0.0; 4];
            for q in &data.q {
                for c in 0..4 {
                    m[c] += q[c] / n as f64;
                }
            }
            m
        } else {
            data.q[0]
        }
    });
    let (mut arc, mut vel, mut rel) = ([0.0f64; 4], [0.0f64; 4], [0.0f64; 4]);
    for i in 0..n {
        let t = data.tangent(i, &sp);
        for c in 0..4 {
            arc[c] += weights[i] * t[c].abs();
            vel[c] += weights[i] * data.q[i][c].abs();
            rel[c] += weights[i] * (data.q[i][c] - bg[c]).abs();
        }
    }
    let mx = |a: [f64; 4]| a.iter().copied().fold(0.0, f64::max);
    Ok(SmallnessNorms { arc_bv: mx(arc), vel_l1: mx(vel), vel_l1_relative: mx(rel), background: bg })
}

/// Initial Riemann variables at the data nodes and their L1 sizes
/// (`max_c int |P^c| dtheta`).
#[derive(Debug, Clone)]
pub struct InitialRiemann {
    pub p: Vec<Vec4>,
    pub q: Vec<Vec4>,
    pub l1_p: f64,
    pub l1_q: f64,
}

pub fn pq0_from_data(data: &InitialData, m: f64) -> Result<InitialRiemann> {
    let sp = data.splines()?;
    let n = data.len();
    let mut p = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for i in 0..n {
        let jet = data.node_jet(i, &sp);
        let s = eigenvalues(&induced_metric_cartesian(&jet, m)?)?;
        let st = to_characteristic(&jet, &s);
        p.push(st.p);
        q.push(st.q);
    }
    let l1 = |v: &Vec<Vec4>| {
        (0..4)
            .map(|c| {
                v.iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let w = if !data.periodic && (i == 0 || i == n - 1) { 0.5 } else { 1.0 };
                        w * data.h * x[c].abs()
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    };
    let (l1_p, l1_q) = (l1(&p), l1(&q));
    Ok(InitialRiemann { p, q, l1_p, l1_q })
}

type CurveFn = Arc<dyn Fn(f64) -> Vec4 + Send + Sync>;

/// Data given by closed-form functions of `theta`.
#[derive(Clone)]
pub struct AnalyticData {
    pub p: CurveFn,
    pub dp: CurveFn,
    pub q: CurveFn,
}

impl std::fmt::Debug for AnalyticData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("AnalyticData")
    }
}

impl AnalyticData {
    /// Samples at `n` nodes on `[a, b]` (or `[a, b)` when periodic).
    pub fn sample(&self, a: f64, b: f64, n: usize, periodic: bool) -> Result<InitialData> {
        let h = if periodic { (b - a) / n as f64 } else { (b - a) / (n - 1) as f64 };
        let th: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
        InitialData::new(
            a,
            h,
            periodic,
            th.iter().map(|&x| (self.p)(x)).collect(),
            th.iter().map(|&x| (self.q)(x)).collect(),
            Some(th.iter().map(|&x| (self.dp)(x)).collect()),
        )
    }

    pub fn jet(&self, theta: f64) -> WorldSheetJet {
        WorldSheetJet { u: (self.p)(theta), v: (self.q)(theta), w: (self.dp)(theta) }
    }
}

/// Shape of an `epsilon`-scaled perturbation of a static point `p_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyProfile {
    /// Closed loop of radius `epsilon` in the `x1 x2` plane, unit time
    /// velocity and an in-plane velocity wiggle of size `epsilon * swirl`.
    /// Periodic on `[0, 2 pi)`.
    ClosedLoop {
        #[serde(default)]
        swirl: f64,
    },
    /// Open string of total coordinate length `epsilon * pi * width`
    /// along `direction`, with velocity `epsilon * env(theta) * (1, beta sin(theta/width) velocity_direction)`
    /// where `env = 1 / (1 + (theta/width)^2)`. Sampled on `[-window, window]`.
    Pulse {
        width: f64,
        direction: [f64; 3],
        velocity_direction: [f64; 3],
        beta: f64,
        window: f64,
    },
}

/// `epsilon`-scaled data around a point `p_bar` (spatial coordinates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonFamily {
    pub p_bar: [f64; 3],
    pub epsilon: f64,
    #[serde(flatten)]
    pub profile: FamilyProfile,
}

fn unit(v: [f64; 3]) -> Result<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidInput(format!("direction {v:?} has no length")));
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

impl EpsilonFamily {
    pub fn pulse(p_bar: [f64; 3], epsilon: f64, window: f64) -> Self {
        EpsilonFamily {
            p_bar,
            epsilon,
            profile: FamilyProfile::Pulse {
                width: 1.0,
                direction: [0.0, 1.0, 0.0],
                velocity_direction: [1.0, 0.0, 0.0],
                beta: 0.5,
                window,
            },
        }
    }

    pub fn closed_loop(p_bar: [f64; 3], epsilon: f64) -> Self {
        EpsilonFamily { p_bar, epsilon, profile: FamilyProfile::ClosedLoop { swirl: 0.0 } }
    }

    pub fn analytic(&self) -> Result<AnalyticData> {
        let pb = self.p_bar;
        let eps = self.epsilon;
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {eps}")));
        }
        Ok(match self.profile {
            FamilyProfile::ClosedLoop { swirl } => AnalyticData {
                p: Arc::new(move |x: f64| [0.0, pb[0] + eps * x.sin(), pb[1] + eps * x.cos(), pb[2]]),
                dp: Arc::new(move |x: f64| [0.0, eps * x.cos(), -eps * x.sin(), 0.0]),
                q: Arc::new(move |x: f64| [1.0, eps * swirl * x.cos(), -eps * swirl * x.sin(), 0.0]),
            },
            FamilyProfile::Pulse { width, direction, velocity_direction, beta, .. } => {
                if !(width > 0.0) {
                    return Err(Error::InvalidInput("pulse width must be positive".into()));
                }
                let e = unit(direction)?;
                let ev = unit(velocity_direction)?;
                let env = move |x: f64| 1.0 / (1.0 + (x / width).powi(2));
                AnalyticData {
                    p: Arc::new(move |x: f64| {
                        let a = eps * width * (x / width).atan();
                        [0.0, pb[0] + a * e[0], pb[1] + a * e[1], pb[2] + a * e[2]]
                    }),
                    dp: Arc::new(move |x: f64| {
                        let a = eps * env(x);
                        [0.0, a * e[0], a * e[1], a * e[2]]
                    }),
                    q: Arc::new(move |x: f64| {
                        let a = eps * env(x);
                        let b = a * beta * (x / width).sin();
                        [a, b * ev[0], b * ev[1], b * ev[2]]
                    }),
                }
            }
        })
    }

    /// Sample window of the profile.
    pub fn window(&self) -> (f64, f64, bool) {
        match self.profile {
            FamilyProfile::ClosedLoop { .. } => (0.0, std::f64::consts::TAU, true),
            FamilyProfile::Pulse { window, .. } => (-window, window, false),
        }
    }

    pub fn sample(&self, n: usize) -> Result<InitialData> {
        let (a, b, periodic) = self.window();
        self.analytic()?.sample(a, b, n, periodic)
    }

    /// Velocity the smallness norms are measured against.
    pub fn background(&self) -> Vec4 {
        match self.profile {
            FamilyProfile::ClosedLoop { .. } => [1.0, 0.0, 0.0, 0.0],
            FamilyProfile::Pulse { .. } => [0.0; 4],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_speeds_match_the_small_loop_approximation() {
        let fam = EpsilonFamily::closed_loop([10.0, 0.0, 0.0], 1e-2);
        let data = fam.sample(64).unwrap();
        let lam = lambda0_from_data(&data, 1.0).unwrap();
        for (x, m, p) in lam.nodes() {
            let g11 = 1e-4 * (1.0 + 0.25 * x.cos().powi(2));
            let approx = (0.8 / g11).sqrt();
            assert!((p / approx - 1.0).abs() < 1e-2, "{x}: {p} vs {approx}");
            assert!((m / approx + 1.0).abs() < 1e-2);
        }
        let norms = smallness_norms(&data, Some(fam.background())).unwrap();
        assert!((norms.arc_bv - 4.0 * 1e-2).abs() < 1e-3);
        assert!(norms.vel_l1 > 6.0);
        assert!(norms.vel_l1_relative < 1e-12);
    }

    #[test]
    fn ordering_violation_reports_a_witness() {
        let bump = |x: f64| (-x * x).exp();
        let lam = LambdaInitial::from_fn(-6.0, 6.0, 241, false, |x| {
            (-1.0 + 1.5 * bump(x + 2.0), 1.0 - 1.5 * bump(x - 2.0))
        })
        .unwrap();
        let rep = check_assumptions(&lam, 1e6);
        assert!(rep.separation.passed);
        assert!(!rep.ordering.passed);
        let (a, b) = rep.witness.unwrap();
        assert!(a < b);
        assert!(lam.minus.eval(a) >= lam.plus.eval(b));
        assert!(matches!(
            rep.into_result(),
            Err(Error::AssumptionViolated { which: Assumption::Ordering, .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let data = EpsilonFamily::pulse([10.0, 0.0, 0.0], 1e-3, 5.0).sample(21).unwrap();
        let back = InitialData::parse(&data.to_text()).unwrap();
        assert_eq!(back.len(), 21);
        assert!(!back.periodic);
        for i in 0..21 {
            assert_eq!(back.p[i], data.p[i]);
            assert_eq!(back.q[i], data.q[i]);
        }
        assert!(InitialData::parse("theta p0\n1 2\n").is_err());
    }

    #[test]
    fn exterior_check_rejects_points_near_the_horizon() {
        let data = EpsilonFamily::pulse([2.05, 0.0, 0.0], 1e-3, 5.0).sample(21).unwrap();
        assert!(matches!(
            check_exterior_data(&data, 1.0, 0.1),
            Err(Error::AssumptionViolated { which: Assumption::Exterior, .. })
        ));
        let data = EpsilonFamily::pulse([2.2, 0.0, 0.0], 1e-3, 5.0).sample(21).unwrap();
        assert!(check_exterior_data(&data, 1.0, 0.1).is_ok());
    }
}
