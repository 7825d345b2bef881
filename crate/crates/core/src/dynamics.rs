//! Nambu-Goto string in the Cartesian Schwarzschild chart, written as a
//! first-order quasilinear system for `U = (u, v, w) = (X, X_t, X_theta)`.
//! The two characteristic speeds are the roots of
//! `g11 l^2 + 2 g01 l + g00 = 0` and both fields are linearly degenerate.

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::check_exterior;

pub type Vec4 = [f64; 4];
pub type Matrix12 = SMatrix<f64, 12, 12>;

/// Relative floor on `g11` below which the speeds are not computed.
pub const G11_FLOOR: f64 = 1e-12;

/// Point, velocity `X_t` and tangent `X_theta` of the world sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldSheetJet {
    pub u: Vec4,
    pub v: Vec4,
    pub w: Vec4,
}

impl WorldSheetJet {
    pub fn to_array(&self) -> [f64; 12] {
        let mut a = [0.0; 12];
        a[..4].copy_from_slice(&self.u);
        a[4..8].copy_from_slice(&self.v);
        a[8..].copy_from_slice(&self.w);
        a
    }

    pub fn from_array(a: &[f64; 12]) -> Self {
        WorldSheetJet {
            u: [a[0], a[1], a[2], a[3]],
            v: [a[4], a[5], a[6], a[7]],
            w: [a[8], a[9], a[10], a[11]],
        }
    }
}

/// Components of the induced metric on the world sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheetMetric {
    pub g00: f64,
    pub g01: f64,
    pub g11: f64,
}

impl SheetMetric {
    pub fn delta(&self) -> f64 {
        self.g00 * self.g11 - self.g01 * self.g01
    }
}

pub(crate) fn dot3(a: &Vec4, b: &Vec4) -> f64 {
    a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub(crate) fn radius(u: &Vec4) -> f64 {
    dot3(u, u).sqrt()
}

/// Radial functions of the Cartesian metric: `f = 1 - 2m/r` and
/// `k = 2m / (r^2 (r - 2m))`, so `g_ij = delta_ij + k x_i x_j`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Radial {
    pub r: f64,
    pub f: f64,
    pub k: f64,
}

pub(crate) fn radial(u: &Vec4, m: f64) -> Result<Radial> {
    let r = radius(u);
    if m == 0.0 {
        return Ok(Radial { r, f: 1.0, k: 0.0 });
    }
    check_exterior(r, m, 1e-9)?;
    Ok(Radial { r, f: 1.0 - 2.0 * m / r, k: 2.0 * m / (r * r * (r - 2.0 * m)) })
}

fn metric_dot(rad: &Radial, u: &Vec4, a: &Vec4, b: &Vec4) -> f64 {
    -rad.f * a[0] * b[0] + dot3(a, b) + rad.k * dot3(u, a) * dot3(u, b)
}

/// Ambient inner product of two vectors based at `u`.
pub fn ambient_dot(u: &Vec4, a: &Vec4, b: &Vec4, m: f64) -> Result<f64> {
    Ok(metric_dot(&radial(u, m)?, u, a, b))
}

pub fn induced_metric_cartesian(jet: &WorldSheetJet, m: f64) -> Result<SheetMetric> {
    let rad = radial(&jet.u, m)?;
    Ok(SheetMetric {
        g00: metric_dot(&rad, &jet.u, &jet.v, &jet.v),
        g01: metric_dot(&rad, &jet.u, &jet.v, &jet.w),
        g11: metric_dot(&rad, &jet.u, &jet.w, &jet.w),
    })
}

/// The two characteristic speeds, `minus < plus`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Speeds {
    pub minus: f64,
    pub plus: f64,
}

impl Speeds {
    pub fn gap(&self) -> f64 {
        self.plus - self.minus
    }
}

/// Roots of `g11 l^2 + 2 g01 l + g00 = 0`. Requires `Delta < 0` and
/// `g11` safely positive relative to the size of the metric.
pub fn eigenvalues(g: &SheetMetric) -> Result<Speeds> {
    let scale = g.g00.abs() + g.g01.abs() + g.g11.abs();
    if !(g.g11 > G11_FLOOR * scale) {
        return Err(Error::DegenerateG11 { g11: g.g11 });
    }
    let delta = g.delta();
    if !(delta < 0.0) {
        return Err(Error::NotTimelike { delta });
    }
    let s = (-delta).sqrt();
    // stable root pairing
    let (minus, plus) = if g.g01 >= 0.0 {
        let minus = (-g.g01 - s) / g.g11;
        (minus, g.g00 / (g.g11 * minus))
    } else {
        let plus = (-g.g01 + s) / g.g11;
        (g.g00 / (g.g11 * plus), plus)
    };
    Ok(Speeds { minus, plus })
}

pub fn speeds_of(jet: &WorldSheetJet, m: f64) -> Result<Speeds> {
    eigenvalues(&induced_metric_cartesian(jet, m)?)
}

/// Right and left eigenvectors of the system matrix.
/// Indices 0..4 belong to speed 0, 4..8 to `minus`, 8..12 to `plus`.
#[derive(Debug, Clone, Copy)]
pub struct EigenStructure {
    pub speeds: Speeds,
    pub values: [f64; 12],
    pub right: [[f64; 12]; 12],
    pub left: [[f64; 12]; 12],
}

pub fn eigenvectors(g: &SheetMetric) -> Result<EigenStructure> {
    let s = eigenvalues(g)?;
    let mut values = [0.0; 12];
    let mut right = [[0.0; 12]; 12];
    let mut left = [[0.0; 12]; 12];
    for k in 0..4 {
        values[k] = 0.0;
        values[4 + k] = s.minus;
        values[8 + k] = s.plus;
        right[k][k] = 1.0;
        left[k][k] = 1.0;
        // speed minus: r = (0, -minus e, e), l = (0, e, plus e)
        right[4 + k][4 + k] = -s.minus;
        right[4 + k][8 + k] = 1.0;
        left[4 + k][4 + k] = 1.0;
        left[4 + k][8 + k] = s.plus;
        right[8 + k][4 + k] = -s.plus;
        right[8 + k][8 + k] = 1.0;
        left[8 + k][4 + k] = 1.0;
        left[8 + k][8 + k] = s.minus;
    }
    Ok(EigenStructure { speeds: s, values, right, left })
}

/// Lower-order term `B` of `U_t + A U_theta + B = 0`.
pub fn source_b(jet: &WorldSheetJet, g: &SheetMetric, m: f64) -> Result<[f64; 12]> {
    let rad = radial(&jet.u, m)?;
    let (u, v, w) = (&jet.u, &jet.v, &jet.w);
    let mut b = [0.0; 12];
    for k in 0..4 {
        b[k] = -v[k];
    }
    if m == 0.0 {
        return Ok(b);
    }
    let r = rad.r;
    let a = g.g01 / g.g11;
    let c = g.g00 / g.g11;
    let (uv, uw) = (dot3(u, v), dot3(u, w));
    b[4] = rad.k * (v[0] * uv - a * (v[0] * uw + w[0] * uv) + c * w[0] * uw);
    let t1 = m * (r - 2.0 * m) / r.powi(4) * (v[0] * v[0] - 2.0 * a * v[0] * w[0] + c * w[0] * w[0]);
    let t2 = 2.0 * m / r.powi(3) * (dot3(v, v) - 2.0 * a * dot3(v, w) + c * dot3(w, w));
    let t3 = m * (3.0 * r - 4.0 * m) / (r.powi(5) * (2.0 * m - r)) * (uv * uv - 2.0 * a * uv * uw + c * uw * uw);
    for i in 1..4 {
        b[4 + i] = u[i] * (t1 + t2 + t3);
    }
    Ok(b)
}

/// System matrix `A` and source `B`.
pub fn assemble_a_b(jet: &WorldSheetJet, m: f64) -> Result<(Matrix12, [f64; 12])> {
    let g = induced_metric_cartesian(jet, m)?;
    if !(g.g11 > G11_FLOOR * (g.g00.abs() + g.g01.abs() + g.g11.abs())) {
        return Err(Error::DegenerateG11 { g11: g.g11 });
    }
    let mut a = Matrix12::zeros();
    for k in 0..4 {
        a[(4 + k, 4 + k)] = -2.0 * g.g01 / g.g11;
        a[(4 + k, 8 + k)] = g.g00 / g.g11;
        a[(8 + k, 4 + k)] = -1.0;
    }
    Ok((a, source_b(jet, &g, m)?))
}

/// Left-hand side of the second-order equations of motion,
/// `g11 X_tt - 2 g01 X_ttheta + g00 X_thetatheta + (Christoffel terms)`.
pub fn second_order_lhs(jet: &WorldSheetJet, x_tt: &Vec4, x_tth: &Vec4, x_thth: &Vec4, m: f64) -> Result<Vec4> {
    let g = induced_metric_cartesian(jet, m)?;
    let rad = radial(&jet.u, m)?;
    let (u, v, w) = (&jet.u, &jet.v, &jet.w);
    let mut out = [0.0; 4];
    for c in 0..4 {
        out[c] = g.g11 * x_tt[c] - 2.0 * g.g01 * x_tth[c] + g.g00 * x_thth[c];
    }
    if m == 0.0 {
        return Ok(out);
    }
    let r = rad.r;
    let (uv, uw) = (dot3(u, v), dot3(u, w));
    out[0] += rad.k * (g.g11 * v[0] * uv - g.g01 * (v[0] * uw + w[0] * uv) + g.g00 * w[0] * uw);
    let t1 = m * (r - 2.0 * m) / r.powi(4) * (g.g11 * v[0] * v[0] - 2.0 * g.g01 * v[0] * w[0] + g.g00 * w[0] * w[0]);
    let t2 = 2.0 * m / r.powi(3) * (g.g11 * dot3(v, v) - 2.0 * g.g01 * dot3(v, w) + g.g00 * dot3(w, w));
    let t3 = m * (3.0 * r - 4.0 * m) / (r.powi(5) * (2.0 * m - r))
        * (g.g11 * uv * uv - 2.0 * g.g01 * uv * uw + g.g00 * uw * uw);
    for i in 1..4 {
        out[i] += u[i] * (t1 + t2 + t3);
    }
    Ok(out)
}

/// Riemann-variable form of the state: position `S`, and
/// `P = X_t + minus X_theta`, `Q = X_t + plus X_theta`.
/// `P` is carried at speed `plus`, `Q` at speed `minus`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicState {
    pub s: Vec4,
    pub p: Vec4,
    pub q: Vec4,
}

pub fn to_characteristic(jet: &WorldSheetJet, sp: &Speeds) -> CharacteristicState {
    let mut p = [0.0; 4];
    let mut q = [0.0; 4];
    for c in 0..4 {
        p[c] = jet.v[c] + sp.minus * jet.w[c];
        q[c] = jet.v[c] + sp.plus * jet.w[c];
    }
    CharacteristicState { s: jet.u, p, q }
}

pub fn from_characteristic(st: &CharacteristicState, sp: &Speeds) -> WorldSheetJet {
    let gap = sp.gap();
    let mut v = [0.0; 4];
    let mut w = [0.0; 4];
    for c in 0..4 {
        v[c] = (sp.plus * st.p[c] - sp.minus * st.q[c]) / gap;
        w[c] = (st.q[c] - st.p[c]) / gap;
    }
    WorldSheetJet { u: st.s, v, w }
}

/// Deliberate source defects used to check that the verification suites notice them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceMutation {
    /// Flip the sign of the `<P, Q>` term in the spatial sources.
    FlipInnerProductTerm,
}

/// Common source of the `P` and `Q` equations:
/// `dP/dtau = F` along speed `plus`, `dQ/dtau = F` along speed `minus`.
pub fn spq_rhs(st: &CharacteristicState, m: f64) -> Result<Vec4> {
    spq_rhs_with(st, m, None)
}

pub fn spq_rhs_with(st: &CharacteristicState, m: f64, mutation: Option<SourceMutation>) -> Result<Vec4> {
    if m == 0.0 {
        return Ok([0.0; 4]);
    }
    let (s, p, q) = (&st.s, &st.p, &st.q);
    let r = radius(s);
    check_exterior(r, m, 1e-9)?;
    let sp = dot3(s, p);
    let sq = dot3(s, q);
    let mut out = [0.0; 4];
    out[0] = -m / (r * r * (r - 2.0 * m)) * (p[0] * sq + q[0] * sp);
    let inner = match mutation {
        Some(SourceMutation::FlipInnerProductTerm) => 2.0 * m / r.powi(3) * dot3(p, q),
        None => -2.0 * m / r.powi(3) * dot3(p, q),
    };
    let bracket = m * (2.0 * m - r) / r.powi(4) * p[0] * q[0]
        + inner
        + m * (3.0 * r - 4.0 * m) / (r.powi(5) * (r - 2.0 * m)) * sp * sq;
    for i in 1..4 {
        out[i] = s[i] * bracket;
    }
    Ok(out)
}

/// Gradient of the three induced-metric components with respect to `U`.
pub fn metric_gradient(jet: &WorldSheetJet, m: f64) -> Result<[[f64; 12]; 3]> {
    let rad = radial(&jet.u, m)?;
    let (u, v, w) = (&jet.u, &jet.v, &jet.w);
    let r = rad.r;
    let (uv, uw) = (dot3(u, v), dot3(u, w));
    let (df, dk) = if m == 0.0 {
        (0.0, 0.0)
    } else {
        (2.0 * m / r.powi(3), -2.0 * m * (3.0 * r - 4.0 * m) / (r.powi(4) * (r - 2.0 * m).powi(2)))
    };
    let mut out = [[0.0; 12]; 3];
    let pairs: [(&Vec4, &Vec4, f64, f64); 3] = [(v, v, uv, uv), (v, w, uv, uw), (w, w, uw, uw)];
    for (slot, &(a, b, ua, ub)) in out.iter_mut().zip(pairs.iter()) {
        for i in 1..4 {
            slot[i] = -df * u[i] * a[0] * b[0] + dk * u[i] * ua * ub + rad.k * (a[i] * ub + b[i] * ua);
        }
    }
    // velocity and tangent slots
    out[0][4] = -2.0 * rad.f * v[0];
    out[1][4] = -rad.f * w[0];
    out[1][8] = -rad.f * v[0];
    out[2][8] = -2.0 * rad.f * w[0];
    for i in 1..4 {
        out[0][4 + i] = 2.0 * (v[i] + rad.k * uv * u[i]);
        out[1][4 + i] = w[i] + rad.k * uw * u[i];
        out[1][8 + i] = v[i] + rad.k * uv * u[i];
        out[2][8 + i] = 2.0 * (w[i] + rad.k * uw * u[i]);
    }
    Ok(out)
}

/// Gradients of both speeds with respect to `U`, by implicit differentiation
/// of the characteristic quadratic.
pub fn lambda_gradient(jet: &WorldSheetJet, m: f64) -> Result<([f64; 12], [f64; 12])> {
    let g = induced_metric_cartesian(jet, m)?;
    let s = eigenvalues(&g)?;
    let dg = metric_gradient(jet, m)?;
    let root = (-g.delta()).sqrt();
    let mut dm = [0.0; 12];
    let mut dp = [0.0; 12];
    for i in 0..12 {
        let num = |l: f64| dg[2][i] * l * l + 2.0 * dg[1][i] * l + dg[0][i];
        dm[i] = num(s.minus) / (2.0 * root);
        dp[i] = -num(s.plus) / (2.0 * root);
    }
    Ok((dm, dp))
}

/// Largest central-difference derivative of each speed along the right
/// eigenvectors of its own family (step `h`). Vanishes for linearly
/// degenerate fields up to `O(h^2)`.
pub fn linear_degeneracy_residual(jet: &WorldSheetJet, m: f64, h: f64) -> Result<f64> {
    let e = eigenvectors(&induced_metric_cartesian(jet, m)?)?;
    let base = jet.to_array();
    let mut worst: f64 = 0.0;
    for (family, range) in [(0usize, 4..8), (1usize, 8..12)] {
        for idx in range {
            let shifted = |sgn: f64| -> Result<f64> {
                let mut a = base;
                for k in 0..12 {
                    a[k] += sgn * h * e.right[idx][k];
                }
                let s = speeds_of(&WorldSheetJet::from_array(&a), m)?;
                Ok(if family == 0 { s.minus } else { s.plus })
            };
            let d = (shifted(1.0)? - shifted(-1.0)?) / (2.0 * h);
            worst = worst.max(d.abs());
        }
    }
    Ok(worst)
}

/// Residuals of the coupled transport `d_t minus + plus d_theta minus = 0`
/// and `d_t plus + minus d_theta plus = 0` from centred differences on a
/// uniform `(t, theta)` grid; `minus[n][j]` is the value at `t_n, theta_j`.
pub fn riemann_invariant_residual(minus: &[Vec<f64>], plus: &[Vec<f64>], dt: f64, dtheta: f64) -> (f64, f64) {
    let mut rm: f64 = 0.0;
    let mut rp: f64 = 0.0;
    for n in 1..minus.len().saturating_sub(1) {
        let len = minus[n].len();
        for j in 1..len.saturating_sub(1) {
            let dtm = (minus[n + 1][j] - minus[n - 1][j]) / (2.0 * dt);
            let dxm = (minus[n][j + 1] - minus[n][j - 1]) / (2.0 * dtheta);
            let dtp = (plus[n + 1][j] - plus[n - 1][j]) / (2.0 * dt);
            let dxp = (plus[n][j + 1] - plus[n][j - 1]) / (2.0 * dtheta);
            rm = rm.max((dtm + plus[n][j] * dxm).abs());
            rp = rp.max((dtp + minus[n][j] * dxp).abs());
        }
    }
    (rm, rp)
}
