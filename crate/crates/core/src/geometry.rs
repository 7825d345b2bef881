//! Schwarzschild and Minkowski metrics with analytic Christoffel symbols in
//! Cartesian-like `(t, x1, x2, x3)` and spherical `(t, r, alpha, beta)` charts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chart and geometry of the ambient space-time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    SchwarzschildCartesian,
    SchwarzschildSpherical,
    Minkowski,
}

/// A metric kind together with its mass and the margins used to reject
/// points near the horizon or the polar axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricField {
    pub kind: MetricKind,
    pub mass: f64,
    /// Relative margin: points need `r > 2m (1 + horizon_margin)`.
    pub horizon_margin: f64,
    /// Spherical chart only: points need `|sin alpha| >= polar_margin`.
    pub polar_margin: f64,
}

impl MetricField {
    pub fn new(kind: MetricKind, mass: f64) -> Result<Self> {
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(Error::InvalidInput(format!("mass must be finite and >= 0, got {mass}")));
        }
        let mass = if kind == MetricKind::Minkowski { 0.0 } else { mass };
        Ok(MetricField { kind, mass, horizon_margin: 1e-6, polar_margin: 1e-12 })
    }

    pub fn schwarzschild(mass: f64) -> Result<Self> {
        Self::new(MetricKind::SchwarzschildCartesian, mass)
    }

    pub fn spherical(mass: f64) -> Result<Self> {
        Self::new(MetricKind::SchwarzschildSpherical, mass)
    }

    pub fn minkowski() -> Self {
        MetricField { kind: MetricKind::Minkowski, mass: 0.0, horizon_margin: 0.0, polar_margin: 0.0 }
    }

    pub fn evaluate(&self, x: &[f64; 4]) -> Result<MetricValue> {
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite space-time point {x:?}")));
        }
        match self.kind {
            MetricKind::Minkowski => Ok(MetricValue::minkowski()),
            MetricKind::SchwarzschildCartesian => {
                let r = (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
                check_exterior(r, self.mass, self.horizon_margin)?;
                Ok(cartesian_value(self.mass, [x[1], x[2], x[3]], r))
            }
            MetricKind::SchwarzschildSpherical => {
                let r = x[1];
                if !(r > 0.0) {
                    return Err(Error::HorizonViolation { r, limit: 0.0 });
                }
                check_exterior(r, self.mass, self.horizon_margin)?;
                let s = x[2].sin();
                if !(s.abs() >= self.polar_margin) || s == 0.0 {
                    return Err(Error::PolarSingularity { sin_alpha: s, margin: self.polar_margin });
                }
                Ok(spherical_value(self.mass, r, x[2]))
            }
        }
    }
}

/// Errors unless `r > 2m (1 + margin)`. Always passes for `m = 0`.
pub fn check_exterior(r: f64, m: f64, margin: f64) -> Result<()> {
    if m == 0.0 {
        return Ok(());
    }
    let limit = 2.0 * m * (1.0 + margin);
    if r > limit {
        Ok(())
    } else {
        Err(Error::HorizonViolation { r, limit })
    }
}

/// Metric, inverse metric and Christoffel symbols at one point.
/// `christoffel[c][a][b]` is the symbol with upper index `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub g: [[f64; 4]; 4],
    pub ginv: [[f64; 4]; 4],
    pub christoffel: [[[f64; 4]; 4]; 4],
}

impl MetricValue {
    pub fn minkowski() -> Self {
        let mut g = [[0.0; 4]; 4];
        g[0][0] = -1.0;
        g[1][1] = 1.0;
        g[2][2] = 1.0;
        g[3][3] = 1.0;
        MetricValue { g, ginv: g, christoffel: [[[0.0; 4]; 4]; 4] }
    }

    pub fn dot(&self, a: &[f64; 4], b: &[f64; 4]) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += self.g[i][j] * a[i] * b[j];
            }
        }
        s
    }

    /// `Gamma^c_ab a^a b^b` for each `c`.
    pub fn contract(&self, a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (c, gc) in self.christoffel.iter().enumerate() {
            let mut s = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    s += gc[i][j] * a[i] * b[j];
                }
            }
            out[c] = s;
        }
        out
    }
}

fn cartesian_value(m: f64, x: [f64; 3], r: f64) -> MetricValue {
    let mut v = MetricValue::minkowski();
    if m == 0.0 {
        return v;
    }
    let f = 1.0 - 2.0 * m / r;
    let k = 2.0 * m / (r * r * (r - 2.0 * m));
    let c = 2.0 * m / (r * r * r);
    v.g[0][0] = -f;
    v.ginv[0][0] = -1.0 / f;
    for i in 0..3 {
        for j in 0..3 {
            let d = if i == j { 1.0 } else { 0.0 };
            v.g[i + 1][j + 1] = d + k * x[i] * x[j];
            v.ginv[i + 1][j + 1] = d - c * x[i] * x[j];
        }
    }
    let a0 = m / (r * r * (r - 2.0 * m));
    let a1 = m * (r - 2.0 * m) / r.powi(4);
    let a2 = m * (3.0 * r - 4.0 * m) / (r.powi(5) * (r - 2.0 * m));
    for i in 0..3 {
        v.christoffel[0][0][i + 1] = a0 * x[i];
        v.christoffel[0][i + 1][0] = a0 * x[i];
        v.christoffel[i + 1][0][0] = a1 * x[i];
        for j in 0..3 {
            for l in 0..3 {
                let d = if j == l { 1.0 } else { 0.0 };
                v.christoffel[i + 1][j + 1][l + 1] = x[i] * (c * d - a2 * x[j] * x[l]);
            }
        }
    }
    v
}

fn spherical_value(m: f64, r: f64, alpha: f64) -> MetricValue {
    let f = 1.0 - 2.0 * m / r;
    let (s, co) = alpha.sin_cos();
    let mut v = MetricValue { g: [[0.0; 4]; 4], ginv: [[0.0; 4]; 4], christoffel: [[[0.0; 4]; 4]; 4] };
    v.g[0][0] = -f;
    v.g[1][1] = 1.0 / f;
    v.g[2][2] = r * r;
    v.g[3][3] = r * r * s * s;
    for i in 0..4 {
        v.ginv[i][i] = 1.0 / v.g[i][i];
    }
    let g = &mut v.christoffel;
    let t_tr = m / (r * (r - 2.0 * m));
    g[0][0][1] = t_tr;
    g[0][1][0] = t_tr;
    g[1][0][0] = m * f / (r * r);
    g[1][1][1] = -m / (r * r * f);
    g[1][2][2] = -(r - 2.0 * m);
    g[1][3][3] = -(r - 2.0 * m) * s * s;
    g[2][1][2] = 1.0 / r;
    g[2][2][1] = 1.0 / r;
    g[2][3][3] = -s * co;
    g[3][1][3] = 1.0 / r;
    g[3][3][1] = 1.0 / r;
    g[3][2][3] = co / s;
    g[3][3][2] = co / s;
    v
}

pub fn evaluate_metric(field: &MetricField, point: &[f64; 4]) -> Result<MetricValue> {
    field.evaluate(point)
}

fn metric_derivative(field: &MetricField, x: &[f64; 4], d: usize, h: f64, fourth: bool) -> Result<[[f64; 4]; 4]> {
    let shifted = |s: f64| -> Result<[[f64; 4]; 4]> {
        let mut y = *x;
        y[d] += s;
        Ok(field.evaluate(&y)?.g)
    };
    let p1 = shifted(h)?;
    let m1 = shifted(-h)?;
    let mut out = [[0.0; 4]; 4];
    if fourth {
        let p2 = shifted(2.0 * h)?;
        let m2 = shifted(-2.0 * h)?;
        for a in 0..4 {
            for b in 0..4 {
                out[a][b] = (8.0 * (p1[a][b] - m1[a][b]) - (p2[a][b] - m2[a][b])) / (12.0 * h);
            }
        }
    } else {
        for a in 0..4 {
            for b in 0..4 {
                out[a][b] = (p1[a][b] - m1[a][b]) / (2.0 * h);
            }
        }
    }
    Ok(out)
}

/// Largest absolute difference between the analytic Christoffel symbols and
/// those built from central differences (step `h`) of the metric.
pub fn christoffel_numeric_check(field: &MetricField, point: &[f64; 4], h: f64) -> Result<f64> {
    let v = field.evaluate(point)?;
    let mut dg = [[[0.0; 4]; 4]; 4];
    for (d, slot) in dg.iter_mut().enumerate() {
        *slot = metric_derivative(field, point, d, h, false)?;
    }
    let mut worst: f64 = 0.0;
    for c in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                let mut s = 0.0;
                for e in 0..4 {
                    s += 0.5 * v.ginv[c][e] * (dg[a][e][b] + dg[b][e][a] - dg[e][a][b]);
                }
                worst = worst.max((s - v.christoffel[c][a][b]).abs());
            }
        }
    }
    Ok(worst)
}

/// Residual of `d_c g_ab = g_eb Gamma^e_ca + g_ae Gamma^e_cb`, using
/// fourth-order differences of the metric.
pub fn metric_compatibility_residual(field: &MetricField, point: &[f64; 4], h: f64) -> Result<f64> {
    let v = field.evaluate(point)?;
    let mut worst: f64 = 0.0;
    for c in 0..4 {
        let dg = metric_derivative(field, point, c, h, true)?;
        for a in 0..4 {
            for b in 0..4 {
                let mut s = 0.0;
                for e in 0..4 {
                    s += v.g[e][b] * v.christoffel[e][c][a] + v.g[a][e] * v.christoffel[e][c][b];
                }
                worst = worst.max((dg[a][b] - s).abs());
            }
        }
    }
    Ok(worst)
}

/// `(t, r, alpha, beta)` to `(t, x1, x2, x3)`.
pub fn spherical_to_cartesian(p: &[f64; 4]) -> [f64; 4] {
    let (sa, ca) = p[2].sin_cos();
    let (sb, cb) = p[3].sin_cos();
    [p[0], p[1] * sa * cb, p[1] * sa * sb, p[1] * ca]
}

/// `(t, x1, x2, x3)` to `(t, r, alpha, beta)` with `beta` in `(-pi, pi]`.
pub fn cartesian_to_spherical(x: &[f64; 4]) -> [f64; 4] {
    let r = (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
    let alpha = (x[1] * x[1] + x[2] * x[2]).sqrt().atan2(x[3]);
    let beta = x[2].atan2(x[1]);
    [x[0], r, alpha, beta]
}

/// Jacobian `d x^i / d y^j` of [`spherical_to_cartesian`].
pub fn spherical_jacobian(p: &[f64; 4]) -> [[f64; 4]; 4] {
    let r = p[1];
    let (sa, ca) = p[2].sin_cos();
    let (sb, cb) = p[3].sin_cos();
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, sa * cb, r * ca * cb, -r * sa * sb],
        [0.0, sa * sb, r * ca * sb, r * sa * cb],
        [0.0, ca, -r * sa, 0.0],
    ]
}

pub fn mat_vec(a: &[[f64; 4]; 4], v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2] + a[i][3] * v[3];
    }
    out
}

/// Spherical-chart components of a Cartesian tangent vector at `x`.
pub fn cartesian_vector_to_spherical(x: &[f64; 4], v: &[f64; 4]) -> [f64; 4] {
    let s = cartesian_to_spherical(x);
    let r = s[1];
    let rho = (x[1] * x[1] + x[2] * x[2]).sqrt();
    let rdot = (x[1] * v[1] + x[2] * v[2] + x[3] * v[3]) / r;
    let rhodot = (x[1] * v[1] + x[2] * v[2]) / rho;
    let alphadot = (x[3] * rhodot - rho * v[3]) / (r * r);
    let betadot = (x[1] * v[2] - x[2] * v[1]) / (rho * rho);
    [v[0], rdot, alphadot, betadot]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_values_on_the_axis() {
        let f = MetricField::schwarzschild(1.0).unwrap();
        let v = f.evaluate(&[0.0, 4.0, 0.0, 0.0]).unwrap();
        assert!((v.g[0][0] + 0.5).abs() < 1e-15);
        assert!((v.g[1][1] - 2.0).abs() < 1e-15);
        assert!((v.g[2][2] - 1.0).abs() < 1e-15);
        assert!((v.g[3][3] - 1.0).abs() < 1e-15);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(v.g[i][j], 0.0);
                }
            }
        }
    }

    #[test]
    fn inverse_is_inverse() {
        let f = MetricField::schwarzschild(0.7).unwrap();
        let v = f.evaluate(&[0.3, 2.0, -1.5, 0.8]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let s: f64 = (0..4).map(|k| v.g[i][k] * v.ginv[k][j]).sum();
                let d = if i == j { 1.0 } else { 0.0 };
                assert!((s - d).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn horizon_and_axis_are_rejected() {
        let f = MetricField::schwarzschild(1.0).unwrap();
        assert!(matches!(f.evaluate(&[0.0, 1.5, 0.0, 0.0]), Err(Error::HorizonViolation { .. })));
        let s = MetricField::spherical(1.0).unwrap();
        assert!(matches!(s.evaluate(&[0.0, 5.0, 0.0, 0.3]), Err(Error::PolarSingularity { .. })));
    }

    #[test]
    fn christoffels_match_differences_at_second_order() {
        for field in [MetricField::schwarzschild(1.0).unwrap(), MetricField::spherical(1.0).unwrap()] {
            let p = match field.kind {
                MetricKind::SchwarzschildSpherical => [0.0, 6.0, 1.1, 0.4],
                _ => [0.0, 6.0, 1.0, 0.0],
            };
            let e1 = christoffel_numeric_check(&field, &p, 1e-2).unwrap();
            let e2 = christoffel_numeric_check(&field, &p, 5e-3).unwrap();
            assert!(e1 < 1e-4);
            let ratio = e1 / e2;
            assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
            assert!(metric_compatibility_residual(&field, &p, 1e-3).unwrap() < 1e-9);
        }
    }

    #[test]
    fn charts_agree_on_line_elements() {
        let cart = MetricField::schwarzschild(1.0).unwrap();
        let sph = MetricField::spherical(1.0).unwrap();
        let y = [0.2, 7.0, 0.9, -2.1];
        let dy = [0.3, -0.2, 0.05, 0.11];
        let x = spherical_to_cartesian(&y);
        let dx = mat_vec(&spherical_jacobian(&y), &dy);
        let a = sph.evaluate(&y).unwrap().dot(&dy, &dy);
        let b = cart.evaluate(&x).unwrap().dot(&dx, &dx);
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        let back = cartesian_vector_to_spherical(&x, &dx);
        for i in 0..4 {
            assert!((back[i] - dy[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_limit_is_linear_in_mass() {
        let p = [0.0, 5.0, 2.0, -1.0];
        let g = |m: f64| MetricField::schwarzschild(m).unwrap().evaluate(&p).unwrap().g;
        let (a, b) = (g(1e-6), g(2e-6));
        for i in 0..4 {
            for j in 0..4 {
                let eta = MetricValue::minkowski().g[i][j];
                let d1 = a[i][j] - eta;
                let d2 = b[i][j] - eta;
                assert!((d2 - 2.0 * d1).abs() < 1e-11);
            }
        }
    }
}
