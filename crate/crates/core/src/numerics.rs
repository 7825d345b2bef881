//! Small numerical kernels shared by the transform and the solvers: cubic
//! splines on uniform grids, adaptive Simpson quadrature and monotone inversion.

use crate::error::{Error, Result};

/// Boundary treatment for [`UniformSpline`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplineEnds {
    /// End slopes estimated with fourth-order one-sided differences; constant
    /// extension outside the node range.
    Clamped,
    /// Values repeat with period `n * h`; node `n` coincides with node 0.
    Periodic,
}

/// Cubic spline through values on the uniform grid `x0 + i h`.
#[derive(Debug, Clone)]
pub struct UniformSpline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
    ends: SplineEnds,
    // integral from x0 to node i
    cum: Vec<f64>,
}

impl UniformSpline {
    pub fn new(x0: f64, h: f64, y: Vec<f64>, ends: SplineEnds) -> Result<Self> {
        let n = y.len();
        if !(h > 0.0) || n < 2 {
            return Err(Error::InvalidInput(format!(
                "spline needs h > 0 and at least 2 nodes (h = {h}, n = {n})"
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("spline values must be finite".into()));
        }
        let m = match ends {
            SplineEnds::Clamped => clamped_moments(&y, h),
            SplineEnds::Periodic => periodic_moments(&y, h),
        };
        let mut s = UniformSpline { x0, h, y, m, ends, cum: Vec::new() };
        let cells = match ends {
            SplineEnds::Clamped => n - 1,
            SplineEnds::Periodic => n,
        };
        let mut cum = Vec::with_capacity(cells + 1);
        cum.push(0.0);
        for i in 0..cells {
            let (a, b, ma, mb) = s.cell(i);
            let step = 0.5 * h * (a + b) - h * h * h * (ma + mb) / 24.0;
            cum.push(cum[i] + step);
        }
        s.cum = cum;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Right end of the node range (the period end for periodic splines).
    pub fn x_end(&self) -> f64 {
        match self.ends {
            SplineEnds::Clamped => self.x0 + self.h * (self.y.len() - 1) as f64,
            SplineEnds::Periodic => self.x0 + self.h * self.y.len() as f64,
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self.ends {
            SplineEnds::Periodic => Some(self.h * self.y.len() as f64),
            SplineEnds::Clamped => None,
        }
    }

    fn cell(&self, i: usize) -> (f64, f64, f64, f64) {
        let n = self.y.len();
        let j = if i + 1 == n { 0 } else { i + 1 };
        (self.y[i], self.y[j], self.m[i], self.m[j])
    }

    // (cell index, local coordinate in [0,1], number of whole periods shifted)
    fn locate(&self, x: f64) -> (usize, f64, f64) {
        let n = self.y.len();
        match self.ends {
            SplineEnds::Clamped => {
                let s = (x - self.x0) / self.h;
                if s <= 0.0 {
                    (0, 0.0, 0.0)
                } else if s >= (n - 1) as f64 {
                    (n - 2, 1.0, 0.0)
                } else {
                    let i = (s.floor() as usize).min(n - 2);
                    (i, s - i as f64, 0.0)
                }
            }
            SplineEnds::Periodic => {
                let s = (x - self.x0) / self.h;
                let k = (s / n as f64).floor();
                let s = s - k * n as f64;
                let i = (s.floor() as usize).min(n - 1);
                (i, (s - i as f64).clamp(0.0, 1.0), k)
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (i, t, _) = self.locate(x);
        let (a, b, ma, mb) = self.cell(i);
        let u = 1.0 - t;
        u * a + t * b + self.h * self.h / 6.0 * ((u * u * u - u) * ma + (t * t * t - t) * mb)
    }

    /// First derivative; zero outside a clamped node range.
    pub fn deriv(&self, x: f64) -> f64 {
        if self.ends == SplineEnds::Clamped {
            let s = (x - self.x0) / self.h;
            if s < 0.0 || s > (self.y.len() - 1) as f64 {
                return 0.0;
            }
        }
        let (i, t, _) = self.locate(x);
        let (a, b, ma, mb) = self.cell(i);
        let u = 1.0 - t;
        (b - a) / self.h + self.h / 6.0 * (-(3.0 * u * u - 1.0) * ma + (3.0 * t * t - 1.0) * mb)
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        if self.ends == SplineEnds::Clamped {
            let s = (x - self.x0) / self.h;
            if s < 0.0 || s > (self.y.len() - 1) as f64 {
                return 0.0;
            }
        }
        let (i, t, _) = self.locate(x);
        let (_, _, ma, mb) = self.cell(i);
        (1.0 - t) * ma + t * mb
    }

    /// Integral from `x0` to `x`; constant extension outside a clamped range.
    pub fn integral_from_start(&self, x: f64) -> f64 {
        let n = self.y.len();
        match self.ends {
            SplineEnds::Clamped => {
                let end = self.x_end();
                if x <= self.x0 {
                    return (x - self.x0) * self.y[0];
                }
                if x >= end {
                    return self.cum[n - 1] + (x - end) * self.y[n - 1];
                }
                let (i, t, _) = self.locate(x);
                self.cum[i] + self.partial(i, t)
            }
            SplineEnds::Periodic => {
                let (i, t, k) = self.locate(x);
                k * self.cum[n] + self.cum[i] + self.partial(i, t)
            }
        }
    }

    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.integral_from_start(b) - self.integral_from_start(a)
    }

    fn partial(&self, i: usize, t: f64) -> f64 {
        let (a, b, ma, mb) = self.cell(i);
        let h = self.h;
        let u = 1.0 - t;
        h * (a * (t - 0.5 * t * t) + b * 0.5 * t * t)
            + h * h * h / 6.0
                * (ma * (-0.25 * u.powi(4) + 0.5 * u * u - 0.25) + mb * (0.25 * t.powi(4) - 0.5 * t * t))
    }
}

fn end_slopes(y: &[f64], h: f64) -> (f64, f64) {
    let n = y.len();
    if n >= 5 {
        let s0 = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h);
        let sn = (25.0 * y[n - 1] - 48.0 * y[n - 2] + 36.0 * y[n - 3] - 16.0 * y[n - 4] + 3.0 * y[n - 5])
            / (12.0 * h);
        (s0, sn)
    } else {
        let s = (y[n - 1] - y[0]) / (h * (n - 1) as f64);
        (s, s)
    }
}

fn clamped_moments(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let (s0, sn) = end_slopes(y, h);
    let mut diag = vec![4.0; n];
    let mut rhs = vec![0.0; n];
    diag[0] = 2.0;
    diag[n - 1] = 2.0;
    rhs[0] = 6.0 * ((y[1] - y[0]) / h - s0) / h;
    rhs[n - 1] = 6.0 * (sn - (y[n - 1] - y[n - 2]) / h) / h;
    for i in 1..n - 1 {
        rhs[i] = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
    }
    thomas(&diag, &rhs)
}

// tridiagonal solve with unit off-diagonals
fn thomas(diag: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = 1.0 / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - c[i - 1];
        c[i] = 1.0 / den;
        d[i] = (rhs[i] - d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn periodic_moments(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let rhs: Vec<f64> = (0..n)
        .map(|i| {
            let prev = y[(i + n - 1) % n];
            let next = y[(i + 1) % n];
            6.0 * (next - 2.0 * y[i] + prev) / (h * h)
        })
        .collect();
    if n < 3 {
        return vec![0.0; n];
    }
    // Sherman-Morrison on the cyclic system with corner entries 1
    let gamma = -4.0;
    let mut diag = vec![4.0; n];
    diag[0] -= gamma;
    diag[n - 1] -= 1.0 / gamma;
    let x = thomas(&diag, &rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = 1.0;
    let z = thomas(&diag, &u);
    let fact = (x[0] + x[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let v = simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Quadrature { detail: format!("non-finite integrand on [{a}, {b}]") })
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if diff.abs() <= 15.0 * tol || (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
        return Ok(left + right + diff / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature { detail: format!("depth exhausted on [{a}, {b}]") });
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Solves `f(x) = target` for increasing `f`, expanding the bracket `[lo, hi]`
/// if needed, then bisecting to width `tol`.
pub fn invert_increasing<F: Fn(f64) -> f64>(
    f: &F,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let mut width = (hi - lo).abs().max(1e-3);
    let mut tries = 0;
    while f(lo) > target {
        lo -= width;
        width *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::InvalidInput(format!("cannot bracket {target} from below")));
        }
    }
    while f(hi) < target {
        hi += width;
        width *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::InvalidInput(format!("cannot bracket {target} from above")));
        }
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Total variation of a sampled function (piecewise-linear interpolant).
pub fn total_variation(samples: &[f64]) -> f64 {
    samples.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamped_spline_reproduces_cubics() {
        let f = |x: f64| 0.3 * x * x * x - x * x + 2.0 * x - 1.0;
        let h = 0.1;
        let y: Vec<f64> = (0..21).map(|i| f(i as f64 * h)).collect();
        let s = UniformSpline::new(0.0, h, y, SplineEnds::Clamped).unwrap();
        for &x in &[0.0, 0.05, 0.37, 1.23, 1.99, 2.0] {
            assert!((s.eval(x) - f(x)).abs() < 1e-12, "x = {x}");
            let df = 0.9 * x * x - 2.0 * x + 2.0;
            assert!((s.deriv(x) - df).abs() < 1e-10);
        }
        let exact = |x: f64| 0.075 * x.powi(4) - x.powi(3) / 3.0 + x * x - x;
        assert!((s.integral(0.13, 1.77) - (exact(1.77) - exact(0.13))).abs() < 1e-12);
    }

    #[test]
    fn periodic_spline_converges_at_fourth_order() {
        let err = |n: usize| {
            let h = std::f64::consts::TAU / n as f64;
            let y: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
            let s = UniformSpline::new(0.0, h, y, SplineEnds::Periodic).unwrap();
            (0..200)
                .map(|k| {
                    let x = -3.0 + k as f64 * 0.0611;
                    (s.eval(x) - x.sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
        let h = std::f64::consts::TAU / 64.0;
        let y: Vec<f64> = (0..64).map(|i| (i as f64 * h).cos() + 1.0).collect();
        let s = UniformSpline::new(0.0, h, y, SplineEnds::Periodic).unwrap();
        let tau = std::f64::consts::TAU;
        assert!((s.integral(0.0, 2.0 * tau) - 2.0 * tau).abs() < 1e-10);
        assert!((s.integral(-1.0, 1.0) - (2.0 + 2.0 * 1f64.sin())).abs() < 1e-6);
    }

    #[test]
    fn simpson_and_inversion() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-11);
        let x = invert_increasing(&|x: f64| x * x * x, 8.0, 0.0, 1.0, 1e-13).unwrap();
        assert!((x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn slope_fit() {
        let x = [1e-2, 1e-3, 1e-4];
        let y: Vec<f64> = x.iter().map(|e| 3.0 * e * e).collect();
        assert!((loglog_slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
