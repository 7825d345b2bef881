//! The string equations in the spherical chart `(t, r, alpha, beta)`.
//!
//! The metric does not depend on `t` or `beta`, so the first-order state
//! keeps only `r` and `alpha` among the positions:
//!
//! ```text
//! U = (r, alpha, t_tau, r_tau, alpha_tau, beta_tau, t_theta, r_theta, alpha_theta, beta_theta)
//! ```
//!
//! The `cot(alpha)` source blows up on the polar axis. Nothing here tries to
//! regularise it: every entry point refuses states with `|sin alpha|` below
//! the polar margin. This chart is used to cross-check the Cartesian solver,
//! not to drive production runs.

use nalgebra::SMatrix;

use crate::dynamics::{eigenvalues, CharacteristicState, SheetMetric, Speeds, Vec4, WorldSheetJet};
use crate::error::{Error, Result};
use crate::geometry::{cartesian_to_spherical, cartesian_vector_to_spherical, check_exterior, mat_vec, spherical_jacobian, spherical_to_cartesian};
use crate::initial_data::{check_exterior_data, lambda0_from_data, InitialData};
use crate::solver::characteristic::{solve_in_chart, CharacteristicConfig};
use crate::solver::{Chart, SolveResult};

pub type Matrix10 = SMatrix<f64, 10, 10>;

pub const DEFAULT_POLAR_MARGIN: f64 = 1e-3;

/// Reduced first-order state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalJet {
    pub u: [f64; 10],
}

impl SphericalJet {
    pub fn r(&self) -> f64 {
        self.u[0]
    }

    pub fn alpha(&self) -> f64 {
        self.u[1]
    }

    /// `(t, r, alpha, beta)` derivatives along `tau`.
    pub fn vel(&self) -> Vec4 {
        [self.u[2], self.u[3], self.u[4], self.u[5]]
    }

    pub fn tan(&self) -> Vec4 {
        [self.u[6], self.u[7], self.u[8], self.u[9]]
    }

    pub fn from_world(jet: &WorldSheetJet) -> Self {
        let (v, w) = (jet.v, jet.w);
        SphericalJet { u: [jet.u[1], jet.u[2], v[0], v[1], v[2], v[3], w[0], w[1], w[2], w[3]] }
    }

    /// Restores the full jet given the dropped `t` and `beta`.
    pub fn to_world(&self, t: f64, beta: f64) -> WorldSheetJet {
        WorldSheetJet { u: [t, self.r(), self.alpha(), beta], v: self.vel(), w: self.tan() }
    }
}

fn guard(r: f64, alpha: f64, m: f64, polar_margin: f64) -> Result<f64> {
    check_exterior(r, m, 1e-9)?;
    let s = alpha.sin();
    if !(s.abs() >= polar_margin) {
        return Err(Error::PolarSingularity { sin_alpha: s, margin: polar_margin });
    }
    Ok(s)
}

/// Diagonal of the ambient metric at `(r, alpha)`.
fn diag(r: f64, sin_a: f64, m: f64) -> Vec4 {
    let f = 1.0 - 2.0 * m / r;
    [-f, 1.0 / f, r * r, r * r * sin_a * sin_a]
}

fn quad(d: &Vec4, a: &Vec4, b: &Vec4) -> f64 {
    d[0] * a[0] * b[0] + d[1] * a[1] * b[1] + d[2] * a[2] * b[2] + d[3] * a[3] * b[3]
}

pub fn induced_metric_spherical(jet: &SphericalJet, m: f64, polar_margin: f64) -> Result<SheetMetric> {
    let s = guard(jet.r(), jet.alpha(), m, polar_margin)?;
    let d = diag(jet.r(), s, m);
    let (v, w) = (jet.vel(), jet.tan());
    Ok(SheetMetric { g00: quad(&d, &v, &v), g01: quad(&d, &v, &w), g11: quad(&d, &w, &w) })
}

/// The determinant written as a sum over coordinate-plane areas.
pub fn delta_expanded(jet: &SphericalJet, m: f64) -> f64 {
    let r = jet.r();
    let f = 1.0 - 2.0 * m / r;
    let s2 = jet.alpha().sin().powi(2);
    let (v, w) = (jet.vel(), jet.tan());
    let x = |i: usize, j: usize| v[i] * w[j] - v[j] * w[i];
    -f * r * r * s2 * x(0, 3).powi(2) - f * r * r * x(0, 2).powi(2) - x(0, 1).powi(2)
        + r * r * s2 / f * x(1, 3).powi(2)
        + r * r / f * x(1, 2).powi(2)
        + r.powi(4) * s2 * x(2, 3).powi(2)
}

/// `Gamma^C_AB a^A b^B` for the spherical chart.
fn christoffel_contract(r: f64, alpha: f64, m: f64, a: &Vec4, b: &Vec4) -> Vec4 {
    let (s, c) = alpha.sin_cos();
    let h = r - 2.0 * m;
    [
        m / (r * h) * (a[0] * b[1] + a[1] * b[0]),
        m * h / r.powi(3) * a[0] * b[0] - m / (r * h) * a[1] * b[1] - h * a[2] * b[2] - h * s * s * a[3] * b[3],
        (a[1] * b[2] + a[2] * b[1]) / r - s * c * a[3] * b[3],
        (a[1] * b[3] + a[3] * b[1]) / r + c / s * (a[2] * b[3] + a[3] * b[2]),
    ]
}

/// System matrix and source of `U_tau + A U_theta + B = 0`.
pub fn assemble_spherical(jet: &SphericalJet, m: f64, polar_margin: f64) -> Result<(Matrix10, [f64; 10])> {
    let g = induced_metric_spherical(jet, m, polar_margin)?;
    let delta = g.delta();
    if delta == 0.0 {
        return Err(Error::DegenerateMetric { det: delta });
    }
    // contravariant components of the induced metric
    let (i00, i01, i11) = (g.g11 / delta, -g.g01 / delta, g.g00 / delta);
    if i00 == 0.0 {
        return Err(Error::DegenerateG11 { g11: g.g11 });
    }
    let (a01, a11) = (i01 / i00, i11 / i00);
    let mut a = Matrix10::zeros();
    for k in 0..4 {
        a[(2 + k, 2 + k)] = 2.0 * a01;
        a[(2 + k, 6 + k)] = a11;
        a[(6 + k, 2 + k)] = -1.0;
    }
    let (v, w) = (jet.vel(), jet.tan());
    let (r, al) = (jet.r(), jet.alpha());
    let gvv = christoffel_contract(r, al, m, &v, &v);
    let gvw = christoffel_contract(r, al, m, &v, &w);
    let gww = christoffel_contract(r, al, m, &w, &w);
    let mut b = [0.0; 10];
    b[0] = -v[1];
    b[1] = -v[2];
    for c in 0..4 {
        b[2 + c] = gvv[c] + 2.0 * a01 * gvw[c] + a11 * gww[c];
    }
    Ok((a, b))
}

/// Left-hand sides of the second-order equations, contracted with the
/// inverse induced metric.
pub fn second_order_lhs_spherical(
    jet: &SphericalJet,
    x_tt: &Vec4,
    x_tth: &Vec4,
    x_thth: &Vec4,
    m: f64,
    polar_margin: f64,
) -> Result<Vec4> {
    let g = induced_metric_spherical(jet, m, polar_margin)?;
    let delta = g.delta();
    let (i00, i01, i11) = (g.g11 / delta, -g.g01 / delta, g.g00 / delta);
    let (v, w) = (jet.vel(), jet.tan());
    let (r, al) = (jet.r(), jet.alpha());
    let gvv = christoffel_contract(r, al, m, &v, &v);
    let gvw = christoffel_contract(r, al, m, &v, &w);
    let gww = christoffel_contract(r, al, m, &w, &w);
    let mut out = [0.0; 4];
    for c in 0..4 {
        out[c] = i00 * x_tt[c] + 2.0 * i01 * x_tth[c] + i11 * x_thth[c]
            + i00 * gvv[c]
            + 2.0 * i01 * gvw[c]
            + i11 * gww[c];
    }
    Ok(out)
}

/// Speeds of the spherical system; chart-independent up to round-off.
pub fn spherical_speeds(jet: &SphericalJet, m: f64, polar_margin: f64) -> Result<Speeds> {
    eigenvalues(&induced_metric_spherical(jet, m, polar_margin)?)
}

/// Right and left eigenvectors, `minus` family in rows 0..4, `plus` in
/// 4..8 and the two static directions last.
pub fn spherical_eigenvectors(sp: &Speeds) -> ([[f64; 10]; 10], [[f64; 10]; 10]) {
    let mut right = [[0.0; 10]; 10];
    let mut left = [[0.0; 10]; 10];
    for k in 0..4 {
        right[k][2 + k] = -sp.minus;
        right[k][6 + k] = 1.0;
        right[4 + k][2 + k] = -sp.plus;
        right[4 + k][6 + k] = 1.0;
        left[k][2 + k] = 1.0;
        left[k][6 + k] = sp.plus;
        left[4 + k][2 + k] = 1.0;
        left[4 + k][6 + k] = sp.minus;
    }
    right[8][0] = 1.0;
    right[9][1] = 1.0;
    left[8][0] = 1.0;
    left[9][1] = 1.0;
    (right, left)
}

/// Largest central-difference derivative of each speed along its own
/// family's right eigenvectors.
pub fn spherical_linear_degeneracy(jet: &SphericalJet, m: f64, h: f64, polar_margin: f64) -> Result<f64> {
    let sp = spherical_speeds(jet, m, polar_margin)?;
    let (right, _) = spherical_eigenvectors(&sp);
    let mut worst: f64 = 0.0;
    for idx in 0..8 {
        let shifted = |sgn: f64| -> Result<f64> {
            let mut u = jet.u;
            for k in 0..10 {
                u[k] += sgn * h * right[idx][k];
            }
            let s = spherical_speeds(&SphericalJet { u }, m, polar_margin)?;
            Ok(if idx < 4 { s.minus } else { s.plus })
        };
        worst = worst.max(((shifted(1.0)? - shifted(-1.0)?) / (2.0 * h)).abs());
    }
    Ok(worst)
}

/// `R = (r, alpha, U_vel + minus U_tan, U_vel + plus U_tan)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalRiemann {
    pub r: [f64; 10],
}

pub fn to_riemann(jet: &SphericalJet, sp: &Speeds) -> SphericalRiemann {
    let u = &jet.u;
    let mut r = [0.0; 10];
    r[0] = u[0];
    r[1] = u[1];
    for k in 0..4 {
        r[2 + k] = u[2 + k] + sp.minus * u[6 + k];
        r[6 + k] = u[2 + k] + sp.plus * u[6 + k];
    }
    SphericalRiemann { r }
}

pub fn from_riemann(rv: &SphericalRiemann, sp: &Speeds) -> SphericalJet {
    let r = &rv.r;
    let gap = sp.gap();
    let mut u = [0.0; 10];
    u[0] = r[0];
    u[1] = r[1];
    for k in 0..4 {
        u[2 + k] = (sp.plus * r[2 + k] - sp.minus * r[6 + k]) / gap;
        u[6 + k] = (r[6 + k] - r[2 + k]) / gap;
    }
    SphericalJet { u }
}

/// The six nonzero sources written in Riemann variables.
pub fn riemann_sources(rv: &SphericalRiemann, sp: &Speeds, m: f64, polar_margin: f64) -> Result<[f64; 6]> {
    let r = &rv.r;
    let s = guard(r[0], r[1], m, polar_margin)?;
    let c = r[1].cos();
    let (lm, lp) = (sp.minus, sp.plus);
    let r1 = r[0];
    let h = r1 - 2.0 * m;
    Ok([
        (lp * r[3] - lm * r[7]) / (lm - lp),
        (lp * r[4] - lm * r[8]) / (lm - lp),
        m * (r[2] * r[7] + r[3] * r[6]) / (r1 * h),
        h * (m * r[2] * r[6] / r1.powi(3) - m * r[3] * r[7] / (r1 * h * h) - r[4] * r[8] - s * s * r[5] * r[9]),
        (r[3] * r[8] + r[4] * r[7]) / r1 - s * c * r[5] * r[9],
        (r[3] * r[9] + r[5] * r[7]) / r1 + c / s * (r[4] * r[9] + r[5] * r[8]),
    ])
}

/// Spherical chart for the characteristic solver. States carry all four
/// positions `(t, r, alpha, beta)`.
#[derive(Debug, Clone, Copy)]
pub struct SphericalChart {
    pub mass: f64,
    pub polar_margin: f64,
}

impl SphericalChart {
    pub fn new(mass: f64) -> Self {
        SphericalChart { mass, polar_margin: DEFAULT_POLAR_MARGIN }
    }
}

impl Chart for SphericalChart {
    fn name(&self) -> &'static str {
        "spherical"
    }

    fn mass(&self) -> f64 {
        self.mass
    }

    fn source(&self, st: &CharacteristicState) -> Result<Vec4> {
        // the position sources do not enter, so any separated speeds will do
        let sp = Speeds { minus: -1.0, plus: 1.0 };
        let mut rv = [0.0; 10];
        rv[0] = st.s[1];
        rv[1] = st.s[2];
        rv[2..6].copy_from_slice(&st.p);
        rv[6..10].copy_from_slice(&st.q);
        let b = riemann_sources(&SphericalRiemann { r: rv }, &sp, self.mass, self.polar_margin)?;
        Ok([-b[2], -b[3], -b[4], -b[5]])
    }

    fn horizon_gap(&self, pos: &Vec4) -> f64 {
        pos[1] - 2.0 * self.mass
    }

    fn dot(&self, pos: &Vec4, a: &Vec4, b: &Vec4) -> Result<f64> {
        let s = guard(pos[1], pos[2], self.mass, self.polar_margin)?;
        Ok(quad(&diag(pos[1], s, self.mass), a, b))
    }

    fn to_cartesian(&self, jet: &WorldSheetJet) -> WorldSheetJet {
        spherical_jet_to_cartesian(jet)
    }
}

pub fn spherical_jet_to_cartesian(jet: &WorldSheetJet) -> WorldSheetJet {
    let j = spherical_jacobian(&jet.u);
    WorldSheetJet { u: spherical_to_cartesian(&jet.u), v: mat_vec(&j, &jet.v), w: mat_vec(&j, &jet.w) }
}

pub fn cartesian_jet_to_spherical(jet: &WorldSheetJet) -> WorldSheetJet {
    WorldSheetJet {
        u: cartesian_to_spherical(&jet.u),
        v: cartesian_vector_to_spherical(&jet.u, &jet.v),
        w: cartesian_vector_to_spherical(&jet.u, &jet.w),
    }
}

/// Runs the characteristic solver on Cartesian data re-expressed in the
/// spherical chart. The speeds are chart-invariant, so the straightened
/// grid is identical to the Cartesian run's.
pub fn solve_spherical(data: &InitialData, mass: f64, cfg: &CharacteristicConfig, polar_margin: f64) -> Result<SolveResult> {
    check_exterior_data(data, mass, cfg.horizon_margin)?;
    let lambda0 = lambda0_from_data(data, mass)?;
    let splines = data.splines()?;
    let chart = SphericalChart { mass, polar_margin };
    let init = |theta: f64| -> Result<CharacteristicState> {
        let jet = cartesian_jet_to_spherical(&splines.jet(theta));
        let sj = SphericalJet::from_world(&jet);
        let sp = spherical_speeds(&sj, mass, polar_margin)?;
        let rv = to_riemann(&sj, &sp);
        let mut p = [0.0; 4];
        let mut q = [0.0; 4];
        p.copy_from_slice(&rv.r[2..6]);
        q.copy_from_slice(&rv.r[6..10]);
        Ok(CharacteristicState { s: jet.u, p, q })
    };
    solve_in_chart(&chart, &lambda0, &init, cfg, None)
}

/// Largest distance between the Cartesian positions of the two runs on
/// their final levels, sampling the Cartesian run at the spherical run's
/// nodes.
pub fn cross_validate(cartesian: &SolveResult, spherical: &SolveResult) -> Result<f64> {
    let (a, b) = (cartesian.last(), spherical.last());
    if (a.t - b.t).abs() > 1e-9 * a.t.abs().max(1.0) {
        return Err(Error::InvalidInput(format!("runs end at different times: {} and {}", a.t, b.t)));
    }
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for (th, jet) in b.theta.iter().zip(&b.jets) {
        let Some(ja) = a.sample(*th) else { continue };
        let x = spherical_to_cartesian(&jet.u);
        for c in 0..4 {
            worst = worst.max((x[c] - ja.u[c]).abs());
        }
        compared += 1;
    }
    if compared == 0 {
        return Err(Error::InvalidInput("the two runs share no nodes".into()));
    }
    Ok(worst)
}
