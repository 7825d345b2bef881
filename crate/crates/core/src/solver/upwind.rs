//! Method-of-lines solver for `U_t + A(U) U_theta + B(U) = 0` on a uniform
//! `theta` grid.
//!
//! Spatial derivatives are split into the two moving families with the
//! speeds frozen at each node, differenced from the upwind side and
//! recombined; the `u` block has no spatial derivative. Time stepping is
//! the three-stage strong-stability-preserving Runge-Kutta scheme.

use serde::{Deserialize, Serialize};

use super::{Snapshot, Termination};
use crate::dynamics::{eigenvalues, induced_metric_cartesian, radius, source_b, Speeds, Vec4, WorldSheetJet};
use crate::error::{Error, Result};
use crate::initial_data::InitialData;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpwindConfig {
    /// 1 or 2.
    pub order: u8,
    /// `dt max|lambda| / h`.
    pub cfl: f64,
    pub t_final: f64,
    /// Resample the data onto this many nodes; `None` keeps the data grid.
    pub nodes: Option<usize>,
    pub snapshot_every: usize,
    pub horizon_margin: f64,
    /// Extra cells dropped at each open end beyond the physical cone.
    pub boundary_margin: usize,
}

impl Default for UpwindConfig {
    fn default() -> Self {
        UpwindConfig {
            order: 2,
            cfl: 0.5,
            t_final: 1.0,
            nodes: None,
            snapshot_every: 0,
            horizon_margin: 0.1,
            boundary_margin: 10,
        }
    }
}

impl UpwindConfig {
    pub fn cfl_limit(&self) -> f64 {
        if self.order == 1 {
            1.0
        } else {
            0.8
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UpwindResult {
    pub termination: Termination,
    pub final_time: f64,
    pub steps: usize,
    pub h: f64,
    pub snapshots: Vec<Snapshot>,
}

impl UpwindResult {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("the initial level is always stored")
    }
}

type State = Vec<[f64; 12]>;

struct Grid {
    theta0: f64,
    h: f64,
    n: usize,
    periodic: bool,
    order: u8,
    mass: f64,
}

impl Grid {
    fn at(&self, u: &State, j: isize) -> [f64; 12] {
        let n = self.n as isize;
        if self.periodic {
            u[j.rem_euclid(n) as usize]
        } else {
            u[j.clamp(0, n - 1) as usize]
        }
    }

    /// One-sided difference toward `dir`
    /// (`-1` looks left, `+1` looks right), combined as `v + lam w`.
    fn one_sided(&self, u: &State, j: usize, lam: f64, dir: isize) -> Vec4 {
        let j = j as isize;
        let comb = |x: &[f64; 12]| [0, 1, 2, 3].map(|c| x[4 + c] + lam * x[8 + c]);
        let f0 = comb(&self.at(u, j));
        let f1 = comb(&self.at(u, j + dir));
        let mut d = [0.0; 4];
        if self.order == 1 {
            for c in 0..4 {
                d[c] = -(dir as f64) * (f0[c] - f1[c]) / self.h;
            }
        } else {
            let f2 = comb(&self.at(u, j + 2 * dir));
            for c in 0..4 {
                d[c] = -(dir as f64) * (3.0 * f0[c] - 4.0 * f1[c] + f2[c]) / (2.0 * self.h);
            }
        }
        d
    }

    fn rhs(&self, u: &State) -> Result<State> {
        let mut out = vec![[0.0; 12]; self.n];
        for j in 0..self.n {
            let jet = WorldSheetJet::from_array(&u[j]);
            let g = induced_metric_cartesian(&jet, self.mass)?;
            let sp = eigenvalues(&g)?;
            let b = source_b(&jet, &g, self.mass)?;
            // P = v + minus w moves at plus, Q = v + plus w at minus
            let dir_p = if sp.plus >= 0.0 { -1 } else { 1 };
            let dir_q = if sp.minus >= 0.0 { -1 } else { 1 };
            let dp = self.one_sided(u, j, sp.minus, dir_p);
            let dq = self.one_sided(u, j, sp.plus, dir_q);
            let gap = sp.gap();
            let o = &mut out[j];
            for c in 0..4 {
                let v_th = (sp.plus * dp[c] - sp.minus * dq[c]) / gap;
                let w_th = (dq[c] - dp[c]) / gap;
                o[c] = jet.v[c];
                o[4 + c] = -(sp.plus + sp.minus) * v_th - sp.plus * sp.minus * w_th - b[4 + c];
                o[8 + c] = v_th;
            }
        }
        Ok(out)
    }

    fn max_speed(&self, u: &State) -> Result<f64> {
        let mut m: f64 = 0.0;
        for x in u {
            let sp = eigenvalues(&induced_metric_cartesian(&WorldSheetJet::from_array(x), self.mass)?)?;
            m = m.max(sp.minus.abs()).max(sp.plus.abs());
        }
        Ok(m)
    }
}

fn combine(a: &State, wa: f64, b: &State, wb: f64, k: &State, wk: f64) -> State {
    a.iter()
        .zip(b)
        .zip(k)
        .map(|((x, y), z)| {
            let mut o = [0.0; 12];
            for c in 0..12 {
                o[c] = wa * x[c] + wb * y[c] + wk * z[c];
            }
            o
        })
        .collect()
}

pub fn solve_upwind(data: &InitialData, mass: f64, cfg: &UpwindConfig) -> Result<UpwindResult> {
    if cfg.order != 1 && cfg.order != 2 {
        return Err(Error::InvalidInput(format!("upwind order must be 1 or 2, got {}", cfg.order)));
    }
    if !(cfg.cfl > 0.0) || cfg.cfl > cfg.cfl_limit() {
        return Err(Error::CflViolation { cfl: cfg.cfl, limit: cfg.cfl_limit() });
    }
    let splines = data.splines()?;
    let (theta0, h, n) = match cfg.nodes {
        None => (data.theta0, data.h, data.len()),
        Some(n) => {
            let span = data.h * if data.periodic { data.len() } else { data.len() - 1 } as f64;
            let h = span / if data.periodic { n } else { n - 1 } as f64;
            (data.theta0, h, n)
        }
    };
    let grid = Grid { theta0, h, n, periodic: data.periodic, order: cfg.order, mass };
    let mut u: State = (0..n).map(|j| splines.jet(theta0 + j as f64 * h).to_array()).collect();

    let mut t = 0.0;
    let mut reach = 0.0;
    let mut steps = 0;
    let mut snapshots = vec![snapshot(&grid, &u, t, reach, cfg.boundary_margin)?];
    let mut termination = Termination::ReachedT;
    while t < cfg.t_final * (1.0 - 1e-14) {
        let smax = grid.max_speed(&u)?;
        let dt = (cfg.cfl * h / smax).min(cfg.t_final - t);
        let stage = |x: &State| -> std::result::Result<State, Termination> {
            grid.rhs(x).map_err(|e| Termination::NumericalFailure { t, detail: e.to_string() })
        };
        let step = (|| {
            let k1 = stage(&u)?;
            let u1 = combine(&u, 1.0, &u, 0.0, &k1, dt);
            let k2 = stage(&u1)?;
            let u2 = combine(&u, 0.75, &u1, 0.25, &k2, 0.25 * dt);
            let k3 = stage(&u2)?;
            Ok(combine(&u, 1.0 / 3.0, &u2, 2.0 / 3.0, &k3, 2.0 / 3.0 * dt))
        })();
        match step {
            Ok(next) => u = next,
            Err(term) => {
                termination = term;
                break;
            }
        }
        t += dt;
        reach += dt * smax;
        steps += 1;
        if let Some(term) = check_level(&grid, &u, t, reach, cfg) {
            termination = term;
            break;
        }
        let last = t >= cfg.t_final * (1.0 - 1e-14);
        if last || (cfg.snapshot_every > 0 && steps % cfg.snapshot_every == 0) {
            snapshots.push(snapshot(&grid, &u, t, reach, cfg.boundary_margin)?);
        }
    }
    if !termination.reached() {
        if let Ok(s) = snapshot(&grid, &u, t, reach, cfg.boundary_margin) {
            snapshots.push(s);
        }
    }
    Ok(UpwindResult { termination, final_time: t, steps, h, snapshots })
}

fn valid_range(grid: &Grid, reach: f64, margin: usize) -> Option<(usize, usize)> {
    if grid.periodic {
        return Some((0, grid.n - 1));
    }
    let cut = (reach / grid.h).ceil() as usize + margin;
    if 2 * cut + 1 > grid.n {
        return None;
    }
    Some((cut, grid.n - 1 - cut))
}

fn check_level(grid: &Grid, u: &State, t: f64, reach: f64, cfg: &UpwindConfig) -> Option<Termination> {
    let Some((lo, hi)) = valid_range(grid, reach, cfg.boundary_margin) else {
        return Some(Termination::NumericalFailure { t, detail: "the domain of determinacy closed".into() });
    };
    for j in lo..=hi {
        let x = &u[j];
        let theta = grid.theta0 + j as f64 * grid.h;
        if x.iter().any(|v| !v.is_finite()) {
            return Some(Termination::NumericalFailure { t, detail: "non-finite state".into() });
        }
        let jet = WorldSheetJet::from_array(x);
        let hg = radius(&jet.u) - 2.0 * grid.mass;
        if grid.mass > 0.0 && hg < 0.5 * cfg.horizon_margin {
            return Some(Termination::HorizonViolation { t, theta, horizon_gap: hg });
        }
        match induced_metric_cartesian(&jet, grid.mass) {
            Ok(g) if g.delta() < 0.0 => {}
            Ok(g) => return Some(Termination::TimelikeLost { t, theta, delta: g.delta() }),
            Err(e) => return Some(Termination::NumericalFailure { t, detail: e.to_string() }),
        }
    }
    None
}

fn snapshot(grid: &Grid, u: &State, t: f64, reach: f64, margin: usize) -> Result<Snapshot> {
    let (lo, hi) = valid_range(grid, reach, margin)
        .ok_or_else(|| Error::InvalidInput("grid too short for the requested time".into()))?;
    let mut s = Snapshot { t, theta: vec![], jets: vec![], speeds: vec![], delta: vec![], horizon_gap: vec![] };
    for j in lo..=hi {
        let jet = WorldSheetJet::from_array(&u[j]);
        let g = induced_metric_cartesian(&jet, grid.mass)?;
        let sp: Speeds = eigenvalues(&g)?;
        s.theta.push(grid.theta0 + j as f64 * grid.h);
        s.delta.push(g.delta());
        s.horizon_gap.push(radius(&jet.u) - 2.0 * grid.mass);
        s.speeds.push(sp);
        s.jets.push(jet);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::EpsilonFamily;
    use crate::solver::characteristic::{solve_characteristic, CharacteristicConfig};

    fn max_diff(a: &Snapshot, b: &Snapshot) -> f64 {
        let mut err: f64 = 0.0;
        for (th, jet) in b.theta.iter().zip(&b.jets) {
            if let Some(ja) = a.sample(*th) {
                for c in 0..4 {
                    err = err.max((ja.u[c] - jet.u[c]).abs());
                }
            }
        }
        err
    }

    #[test]
    fn agrees_with_characteristic_solver_on_a_pulse() {
        let fam = EpsilonFamily::pulse([10.0, 0.0, 0.0], 0.1, 8.0);
        let data = fam.sample(801).unwrap();
        let reference = solve_characteristic(
            &data,
            1.0,
            &CharacteristicConfig { nodes: 1601, t_final: 2.0, ..Default::default() },
            None,
            None,
        )
        .unwrap();
        let mut errs = vec![];
        for nodes in [201, 401] {
            let cfg = UpwindConfig { nodes: Some(nodes), t_final: 2.0, ..Default::default() };
            let res = solve_upwind(&data, 1.0, &cfg).unwrap();
            assert!(res.termination.reached(), "{:?}", res.termination);
            errs.push(max_diff(reference.last(), res.last()));
        }
        assert!(errs[1] < 1e-3, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn rejects_large_cfl() {
        let data = EpsilonFamily::pulse([10.0, 0.0, 0.0], 0.1, 8.0).sample(101).unwrap();
        let cfg = UpwindConfig { cfl: 0.95, ..Default::default() };
        assert!(matches!(solve_upwind(&data, 1.0, &cfg), Err(Error::CflViolation { .. })));
    }
}
