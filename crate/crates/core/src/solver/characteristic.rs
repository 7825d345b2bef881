//! Integration of `(S, P, Q)` along straightened characteristics.
//!
//! In `(tau, vartheta)` the system reads
//!
//! ```text
//! (d_tau + d_vartheta) P = F(S, P, Q)
//! (d_tau - d_vartheta) Q = F(S, P, Q)
//!  d_tau S              = (P + Q) / 2
//! ```
//!
//! so with `dtau = k h` for integer `k` the feet of both characteristics sit
//! on grid nodes and the only error is the Heun quadrature of the sources.
//! Fractional steps interpolate the feet (linear or cubic).

use serde::{Deserialize, Serialize};

use super::monitors::MonitorAccumulator;
use super::{CartesianChart, Chart, Extremes, GridInfo, Snapshot, SolveResult, Termination};
use crate::dynamics::{
    eigenvalues, from_characteristic, induced_metric_cartesian, to_characteristic, CharacteristicState,
    SourceMutation, Speeds, Vec4,
};
use crate::error::{Error, Result};
use crate::initial_data::{check_assumptions, check_exterior_data, lambda0_from_data, InitialData};
use crate::transform::{build_map, CoordinateMap, LambdaInitial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    Linear,
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacteristicConfig {
    /// Nodes of the `vartheta` grid.
    pub nodes: usize,
    /// `dtau / h`; whole numbers give exact shifts.
    pub cfl: f64,
    pub interpolation: Interpolation,
    pub t_final: f64,
    /// Runs stop when the areal radius falls below `2m + horizon_margin / 2`.
    pub horizon_margin: f64,
    /// Runs stop when the speed gap falls below this fraction of its initial minimum.
    pub gap_floor: f64,
    /// Store a snapshot every this many steps (0: first and last only).
    pub snapshot_every: usize,
    /// Refuse to start when the initial speeds fail the admissibility checks.
    pub enforce_assumptions: bool,
    pub c1_bound: f64,
}

impl Default for CharacteristicConfig {
    fn default() -> Self {
        CharacteristicConfig {
            nodes: 1024,
            cfl: 1.0,
            interpolation: Interpolation::Linear,
            t_final: 1.0,
            horizon_margin: 0.1,
            gap_floor: 1e-3,
            snapshot_every: 0,
            enforce_assumptions: true,
            c1_bound: 1e8,
        }
    }
}

/// Integrates Cartesian data. `epsilon` only labels the monitor constants.
pub fn solve_characteristic(
    data: &InitialData,
    mass: f64,
    cfg: &CharacteristicConfig,
    epsilon: Option<f64>,
    mutation: Option<SourceMutation>,
) -> Result<SolveResult> {
    solve_forward(data, mass, cfg, epsilon, mutation)
}

/// Integrates towards negative `t` by reversing time: `q -> -q` is solved
/// forward to `|t_final|` and the result mapped back through `t -> -t`.
pub fn solve_characteristic_backward(
    data: &InitialData,
    mass: f64,
    cfg: &CharacteristicConfig,
    epsilon: Option<f64>,
    mutation: Option<SourceMutation>,
) -> Result<SolveResult> {
    let mut flipped = data.clone();
    for q in &mut flipped.q {
        *q = q.map(|c| -c);
    }
    let cfg = CharacteristicConfig { t_final: cfg.t_final.abs(), ..*cfg };
    let mut res = solve_forward(&flipped, mass, &cfg, epsilon, mutation)?;
    res.final_time = -res.final_time;
    for snap in &mut res.snapshots {
        snap.t = -snap.t;
        for jet in &mut snap.jets {
            jet.v = jet.v.map(|c| -c);
        }
        for s in &mut snap.speeds {
            *s = Speeds { minus: -s.plus, plus: -s.minus };
        }
    }
    match &mut res.termination {
        Termination::ReachedT => {}
        Termination::HorizonViolation { t, .. }
        | Termination::GapCollapse { t, .. }
        | Termination::TimelikeLost { t, .. }
        | Termination::NumericalFailure { t, .. } => *t = -*t,
    }
    Ok(res)
}

fn solve_forward(
    data: &InitialData,
    mass: f64,
    cfg: &CharacteristicConfig,
    epsilon: Option<f64>,
    mutation: Option<SourceMutation>,
) -> Result<SolveResult> {
    check_exterior_data(data, mass, cfg.horizon_margin)?;
    let lambda0 = lambda0_from_data(data, mass)?;
    let splines = data.splines()?;
    let init = |theta: f64| -> Result<CharacteristicState> {
        let jet = splines.jet(theta);
        let s = eigenvalues(&induced_metric_cartesian(&jet, mass)?)?;
        Ok(to_characteristic(&jet, &s))
    };
    let chart = CartesianChart { mass, mutation };
    solve_in_chart(&chart, &lambda0, &init, cfg, epsilon)
}

fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

struct Fields {
    s: Vec<Vec4>,
    p: Vec<Vec4>,
    q: Vec<Vec4>,
}

impl Fields {
    fn state(&self, j: usize) -> CharacteristicState {
        CharacteristicState { s: self.s[j], p: self.p[j], q: self.q[j] }
    }
}

/// Fractional-index sampling with periodic wrap or clamping.
fn sample(arr: &[Vec4], x: f64, periodic: bool, cubic: bool) -> Vec4 {
    let n = arr.len();
    let i0 = x.floor();
    let t = x - i0;
    let i0 = i0 as isize;
    let at = |i: isize| -> &Vec4 {
        if periodic {
            &arr[wrap(i, n)]
        } else {
            &arr[i.clamp(0, n as isize - 1) as usize]
        }
    };
    let mut out = [0.0; 4];
    if cubic {
        let w = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        for (k, wk) in w.iter().enumerate() {
            let v = at(i0 - 1 + k as isize);
            for c in 0..4 {
                out[c] += wk * v[c];
            }
        }
    } else {
        let (a, b) = (at(i0), at(i0 + 1));
        for c in 0..4 {
            out[c] = (1.0 - t) * a[c] + t * b[c];
        }
    }
    out
}

fn add(a: &Vec4, b: &Vec4, s: f64) -> Vec4 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]]
}

/// Generic driver: `lambda0` are the initial speeds on the `theta` grid and
/// `init` returns the initial `(S, P, Q)` at any `theta` in the data window.
pub fn solve_in_chart<C: Chart>(
    chart: &C,
    lambda0: &LambdaInitial,
    init: &dyn Fn(f64) -> Result<CharacteristicState>,
    cfg: &CharacteristicConfig,
    epsilon: Option<f64>,
) -> Result<SolveResult> {
    if !(cfg.t_final >= 0.0) || !(cfg.cfl > 0.0) {
        return Err(Error::InvalidInput(format!("need t_final >= 0 and cfl > 0 (got {}, {})", cfg.t_final, cfg.cfl)));
    }
    let report = check_assumptions(lambda0, cfg.c1_bound);
    let report = if cfg.enforce_assumptions { report.into_result()? } else { report };
    let map = build_map(lambda0, cfg.nodes)?;
    let (start, h, n) = map.grid();
    let periodic = map.vartheta_period().is_some();
    let vartheta: Vec<f64> = (0..n).map(|j| start + j as f64 * h).collect();

    let mut f = Fields { s: Vec::with_capacity(n), p: Vec::with_capacity(n), q: Vec::with_capacity(n) };
    for &v in &vartheta {
        let st = init(map.phi0(v)?)?;
        f.s.push(st.s);
        f.p.push(st.p);
        f.q.push(st.q);
    }
    let mut src = vec![[0.0; 4]; n];
    for j in 0..n {
        src[j] = chart.source(&f.state(j))?;
    }
    let kappa = lambda0.kappa();
    let gap_floor = cfg.gap_floor * kappa;

    let dtau = cfg.cfl * h;
    let shift = if (cfg.cfl - cfg.cfl.round()).abs() < 1e-12 { Some(cfg.cfl.round() as usize) } else { None };
    let full_steps = if dtau > 0.0 { ((cfg.t_final / dtau) * (1.0 + 1e-12)).floor() as usize } else { 0 };
    let remainder = cfg.t_final - full_steps as f64 * dtau;
    let partial = remainder > 1e-12 * cfg.t_final.max(1.0);

    let s00 = init(map.anchor())?.s;
    let mut monitors = MonitorAccumulator::new(n, h, shift, periodic, s00);
    let (mut lo, mut hi) = (0usize, n - 1);
    monitors.record(0.0, Some(0), lo, hi, &build_states(&f, n), &src);

    let mut snapshots = Vec::new();
    let mut null_defect: f64 = 0.0;
    let mut extremes = Extremes::default();
    let snap0 = snapshot(chart, &map, &f, 0.0, &vartheta, lo, hi, &mut null_defect)?;
    for j in 0..snap0.len() {
        extremes.record(snap0.horizon_gap[j], snap0.delta[j], snap0.speeds[j].gap());
    }
    snapshots.push(snap0);

    let mut tau = 0.0;
    let mut steps = 0usize;
    let mut termination = Termination::ReachedT;
    let cubic = cfg.interpolation == Interpolation::Cubic;
    let total_steps = full_steps + usize::from(partial);

    'outer: for step in 1..=total_steps {
        let this_dtau = if step > full_steps { remainder } else { dtau };
        let c = this_dtau / h;
        let aligned = shift.is_some() && step <= full_steps;
        let reach = if aligned { shift.unwrap_or(0) } else { c.ceil() as usize + usize::from(cubic) };
        let (nlo, nhi) = if periodic {
            (0, n - 1)
        } else {
            if lo + reach > hi.saturating_sub(reach) || hi < reach {
                termination = Termination::NumericalFailure {
                    t: tau,
                    detail: "the domain of determinacy closed before the final time".into(),
                };
                break;
            }
            (lo + reach, hi - reach)
        };
        let mut next = Fields { s: f.s.clone(), p: f.p.clone(), q: f.q.clone() };
        for j in nlo..=nhi {
            let (foot_p, foot_q, fp, fq) = if aligned {
                let k = shift.unwrap_or(0) as isize;
                let jp = if periodic { wrap(j as isize - k, n) } else { j - k as usize };
                let jq = if periodic { wrap(j as isize + k, n) } else { j + k as usize };
                (f.state(jp), f.state(jq), src[jp], src[jq])
            } else {
                let xp = j as f64 - c;
                let xq = j as f64 + c;
                let sp = CharacteristicState {
                    s: sample(&f.s, xp, periodic, cubic),
                    p: sample(&f.p, xp, periodic, cubic),
                    q: sample(&f.q, xp, periodic, cubic),
                };
                let sq = CharacteristicState {
                    s: sample(&f.s, xq, periodic, cubic),
                    p: sample(&f.p, xq, periodic, cubic),
                    q: sample(&f.q, xq, periodic, cubic),
                };
                let (a, b) = match (chart.source(&sp), chart.source(&sq)) {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(e), _) | (_, Err(e)) => {
                        termination = failure_from(e, tau, map.phi(tau, vartheta[j]));
                        break 'outer;
                    }
                };
                (sp, sq, a, b)
            };
            let here = f.state(j);
            let pq_here = add(&here.p, &here.q, 1.0);
            let star = CharacteristicState {
                s: add(&here.s, &pq_here, 0.5 * this_dtau),
                p: add(&foot_p.p, &fp, this_dtau),
                q: add(&foot_q.q, &fq, this_dtau),
            };
            let fstar = match chart.source(&star) {
                Ok(v) => v,
                Err(e) => {
                    termination = failure_from(e, tau, map.phi(tau, vartheta[j]));
                    break 'outer;
                }
            };
            let pq_star = add(&star.p, &star.q, 1.0);
            next.s[j] = add(&add(&here.s, &pq_here, 0.25 * this_dtau), &pq_star, 0.25 * this_dtau);
            next.p[j] = add(&add(&foot_p.p, &fp, 0.5 * this_dtau), &fstar, 0.5 * this_dtau);
            next.q[j] = add(&add(&foot_q.q, &fq, 0.5 * this_dtau), &fstar, 0.5 * this_dtau);
        }
        tau += this_dtau;
        steps = step;
        f = next;
        lo = nlo;
        hi = nhi;
        // sources at the new level, and pointwise checks
        for j in lo..=hi {
            let st = f.state(j);
            if st.s.iter().chain(st.p.iter()).chain(st.q.iter()).any(|x| !x.is_finite()) {
                termination = Termination::NumericalFailure { t: tau, detail: "non-finite state".into() };
                break 'outer;
            }
            let sp = map.lambda_tilde(tau, vartheta[j]);
            if sp.gap() < gap_floor {
                termination = Termination::GapCollapse { t: tau, theta: map.phi(tau, vartheta[j]), gap: sp.gap() };
                break 'outer;
            }
            let hg = chart.horizon_gap(&st.s);
            if chart.mass() > 0.0 && hg < 0.5 * cfg.horizon_margin {
                termination = Termination::HorizonViolation { t: tau, theta: map.phi(tau, vartheta[j]), horizon_gap: hg };
                break 'outer;
            }
            let delta = chart.delta(&from_characteristic(&st, &sp))?;
            extremes.record(hg, delta, sp.gap());
            if !(delta < 0.0) {
                termination = Termination::TimelikeLost { t: tau, theta: map.phi(tau, vartheta[j]), delta };
                break 'outer;
            }
            src[j] = match chart.source(&st) {
                Ok(v) => v,
                Err(e) => {
                    termination = failure_from(e, tau, map.phi(tau, vartheta[j]));
                    break 'outer;
                }
            };
        }
        monitors.record(this_dtau, if aligned { Some(step) } else { None }, lo, hi, &build_states(&f, n), &src);
        let want = step == total_steps || (cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0);
        if want {
            snapshots.push(snapshot(chart, &map, &f, tau, &vartheta, lo, hi, &mut null_defect)?);
        }
    }
    if !termination.reached() {
        snapshots.push(snapshot(chart, &map, &f, tau, &vartheta, lo, hi, &mut null_defect)?);
    }
    Ok(SolveResult {
        chart: chart.name(),
        termination,
        final_time: tau,
        steps,
        grid: GridInfo { nodes: n, h, dt: dtau, cfl: cfg.cfl },
        snapshots,
        diagnostics: monitors.finish(epsilon),
        assumptions: Some(report),
        extremes,
        null_defect,
    })
}

fn failure_from(e: Error, t: f64, theta: f64) -> Termination {
    match e {
        Error::HorizonViolation { r, limit } => Termination::HorizonViolation { t, theta, horizon_gap: r - limit },
        other => Termination::NumericalFailure { t, detail: other.to_string() },
    }
}

fn build_states(f: &Fields, n: usize) -> Vec<CharacteristicState> {
    (0..n).map(|j| f.state(j)).collect()
}

#[allow(clippy::too_many_arguments)]
fn snapshot<C: Chart>(
    chart: &C,
    map: &CoordinateMap,
    f: &Fields,
    tau: f64,
    vartheta: &[f64],
    lo: usize,
    hi: usize,
    null_defect: &mut f64,
) -> Result<Snapshot> {
    let mut snap = Snapshot {
        t: tau,
        theta: Vec::with_capacity(hi + 1 - lo),
        jets: Vec::with_capacity(hi + 1 - lo),
        speeds: Vec::with_capacity(hi + 1 - lo),
        delta: Vec::with_capacity(hi + 1 - lo),
        horizon_gap: Vec::with_capacity(hi + 1 - lo),
    };
    for j in lo..=hi {
        let st = f.state(j);
        let sp: Speeds = map.lambda_tilde(tau, vartheta[j]);
        let jet = from_characteristic(&st, &sp);
        let gpq = chart.dot(&st.s, &st.p, &st.q)?;
        let gpp = chart.dot(&st.s, &st.p, &st.p)?;
        let gqq = chart.dot(&st.s, &st.q, &st.q)?;
        if gpq != 0.0 {
            *null_defect = null_defect.max(gpp.abs().max(gqq.abs()) / gpq.abs());
        }
        snap.theta.push(map.phi(tau, vartheta[j]));
        snap.delta.push(chart.delta(&jet)?);
        snap.horizon_gap.push(chart.horizon_gap(&st.s));
        snap.jets.push(jet);
        snap.speeds.push(sp);
    }
    Ok(snap)
}
