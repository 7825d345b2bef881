//! Exact solution of the coupled speed transport through the change of
//! variables `(t, theta) -> (tau, vartheta)` in which both characteristic
//! families become straight lines of slope +-1.
//!
//! With `Theta0(theta) = int_anchor^theta 2 / (l+ - l-)` and `Phi0` its
//! inverse, the speeds are carried as `L+-(s) = l+-^0(Phi0(s))`, and
//!
//! ```text
//! theta = Phi(tau, vartheta)
//!       = anchor + 1/2 int_0^{vartheta+tau} L+ - 1/2 int_0^{vartheta-tau} L-
//! l+(t, theta) = L+(Theta(t, theta) + t),  l-(t, theta) = L-(Theta(t, theta) - t)
//! ```
//!
//! where `Theta(t, .)` is the inverse of `Phi(t, .)`.

use crate::dynamics::Speeds;
use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, invert_increasing, total_variation, SplineEnds, UniformSpline};

/// Initial speeds sampled on a uniform `theta` grid.
#[derive(Debug, Clone)]
pub struct LambdaInitial {
    pub minus: UniformSpline,
    pub plus: UniformSpline,
}

impl LambdaInitial {
    pub fn from_samples(theta0: f64, h: f64, minus: Vec<f64>, plus: Vec<f64>, periodic: bool) -> Result<Self> {
        if minus.len() != plus.len() {
            return Err(Error::InvalidInput("speed sample arrays differ in length".into()));
        }
        let ends = if periodic { SplineEnds::Periodic } else { SplineEnds::Clamped };
        Ok(LambdaInitial {
            minus: UniformSpline::new(theta0, h, minus, ends)?,
            plus: UniformSpline::new(theta0, h, plus, ends)?,
        })
    }

    /// Samples `f` at `n` nodes covering `[a, b]` (or `[a, b)` when periodic).
    pub fn from_fn<F: Fn(f64) -> (f64, f64)>(a: f64, b: f64, n: usize, periodic: bool, f: F) -> Result<Self> {
        let h = if periodic { (b - a) / n as f64 } else { (b - a) / (n - 1) as f64 };
        let (mut lm, mut lp) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let (m, p) = f(a + i as f64 * h);
            lm.push(m);
            lp.push(p);
        }
        Self::from_samples(a, h, lm, lp, periodic)
    }

    pub fn eval(&self, theta: f64) -> Speeds {
        Speeds { minus: self.minus.eval(theta), plus: self.plus.eval(theta) }
    }

    pub fn period(&self) -> Option<f64> {
        self.plus.period()
    }

    pub fn start(&self) -> f64 {
        self.plus.x0()
    }

    pub fn end(&self) -> f64 {
        self.plus.x_end()
    }

    pub fn spacing(&self) -> f64 {
        self.plus.h()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let (x0, h) = (self.plus.x0(), self.plus.h());
        self.minus
            .values()
            .iter()
            .zip(self.plus.values())
            .enumerate()
            .map(move |(i, (&m, &p))| (x0 + i as f64 * h, m, p))
    }

    /// Smallest sampled gap `l+ - l-`.
    pub fn kappa(&self) -> f64 {
        self.nodes().map(|(_, m, p)| p - m).fold(f64::INFINITY, f64::min)
    }

    /// Largest sampled `|l-|` and `|l+|`.
    pub fn max_speed(&self) -> f64 {
        self.nodes().map(|(_, m, p)| m.abs().max(p.abs())).fold(0.0, f64::max)
    }
}

/// Quadrature tolerance used for `Theta0`.
const QUAD_TOL: f64 = 1e-13;
/// Bisection tolerance used for the inverse maps.
const INVERT_TOL: f64 = 1e-13;

/// The coordinate change and the straightened speed profiles.
#[derive(Debug, Clone)]
pub struct CoordinateMap {
    lambda: LambdaInitial,
    anchor: f64,
    // Theta0 at the theta nodes of `lambda`, plus one extra node when periodic
    theta0_nodes: Vec<f64>,
    period_theta: Option<f64>,
    period_vartheta: Option<f64>,
    grid_start: f64,
    grid_h: f64,
    grid_n: usize,
    tilde_minus: UniformSpline,
    tilde_plus: UniformSpline,
}

impl CoordinateMap {
    /// Builds `Theta0` by quadrature and samples `L+-` on `nodes` uniform
    /// `vartheta` points covering the data window (one period when periodic).
    pub fn build(lambda: &LambdaInitial, nodes: usize) -> Result<Self> {
        if nodes < 5 {
            return Err(Error::InvalidInput("the vartheta grid needs at least 5 nodes".into()));
        }
        for (theta, m, p) in lambda.nodes() {
            if !(p - m > 0.0) {
                return Err(Error::CoincidentCharacteristics { gap: p - m, theta });
            }
        }
        let a = lambda.start();
        let b = lambda.end();
        let anchor = if a <= 0.0 && 0.0 < b { 0.0 } else { a };
        let h = lambda.spacing();
        let inv_gap = |x: f64| {
            let s = lambda.eval(x);
            2.0 / (s.plus - s.minus)
        };
        let cells = match lambda.period() {
            Some(_) => lambda.plus.len(),
            None => lambda.plus.len() - 1,
        };
        let mut cum = vec![0.0; cells + 1];
        for i in 0..cells {
            let x = a + i as f64 * h;
            cum[i + 1] = cum[i] + adaptive_simpson(&inv_gap, x, x + h, QUAD_TOL)?;
        }
        let mut map = CoordinateMap {
            lambda: lambda.clone(),
            anchor,
            theta0_nodes: cum,
            period_theta: lambda.period(),
            period_vartheta: None,
            grid_start: 0.0,
            grid_h: 1.0,
            grid_n: nodes,
            // placeholders, replaced below
            tilde_minus: lambda.minus.clone(),
            tilde_plus: lambda.plus.clone(),
        };
        let shift = map.raw_theta0(anchor)?;
        for c in map.theta0_nodes.iter_mut() {
            *c -= shift;
        }
        if map.period_theta.is_some() {
            map.period_vartheta = Some(map.theta0_nodes[cells] - map.theta0_nodes[0]);
        }
        let start = map.theta0_nodes[0];
        let end = map.theta0_nodes[cells];
        let (gh, ends) = match map.period_vartheta {
            Some(pv) => (pv / nodes as f64, SplineEnds::Periodic),
            None => ((end - start) / (nodes - 1) as f64, SplineEnds::Clamped),
        };
        let mut lm = Vec::with_capacity(nodes);
        let mut lp = Vec::with_capacity(nodes);
        for j in 0..nodes {
            let th = map.phi0(start + j as f64 * gh)?;
            let s = lambda.eval(th);
            lm.push(s.minus);
            lp.push(s.plus);
        }
        map.grid_start = start;
        map.grid_h = gh;
        map.tilde_minus = UniformSpline::new(start, gh, lm, ends)?;
        map.tilde_plus = UniformSpline::new(start, gh, lp, ends)?;
        Ok(map)
    }

    fn raw_theta0(&self, theta: f64) -> Result<f64> {
        let a = self.lambda.start();
        let h = self.lambda.spacing();
        let (x, base) = match self.period_theta {
            Some(pt) => {
                let k = ((theta - a) / pt).floor();
                let pv = self.theta0_nodes[self.theta0_nodes.len() - 1] - self.theta0_nodes[0];
                (theta - k * pt, k * pv)
            }
            None => (theta, 0.0),
        };
        let last = self.theta0_nodes.len() - 1;
        let s = ((x - a) / h).floor();
        let i = if s < 0.0 { 0 } else { (s as usize).min(last.saturating_sub(1)) };
        let xi = a + i as f64 * h;
        let inv_gap = |y: f64| {
            let sp = self.lambda.eval(y);
            2.0 / (sp.plus - sp.minus)
        };
        Ok(base + self.theta0_nodes[i] + adaptive_simpson(&inv_gap, xi, x, QUAD_TOL)?)
    }

    /// `Theta0(theta)`; increasing, zero at the anchor.
    pub fn theta0(&self, theta: f64) -> Result<f64> {
        self.raw_theta0(theta)
    }

    /// `Phi0 = Theta0^{-1}`.
    pub fn phi0(&self, vartheta: f64) -> Result<f64> {
        let kappa = self.lambda.kappa();
        let slope = 2.0 / kappa;
        let guess = self.anchor + vartheta / slope.max(1e-300);
        let f = |x: f64| self.raw_theta0(x).unwrap_or(f64::NAN);
        let (lo, hi) = bracket_around(guess, (self.lambda.end() - self.lambda.start()).abs());
        invert_increasing(&f, vartheta, lo, hi, INVERT_TOL * (1.0 + guess.abs()))
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn lambda(&self) -> &LambdaInitial {
        &self.lambda
    }

    /// Uniform `vartheta` grid: `(start, spacing, nodes)`.
    pub fn grid(&self) -> (f64, f64, usize) {
        (self.grid_start, self.grid_h, self.grid_n)
    }

    pub fn vartheta_period(&self) -> Option<f64> {
        self.period_vartheta
    }

    /// Straightened left speed `L-(s)` (spline on the `vartheta` grid).
    pub fn tilde_minus(&self, s: f64) -> f64 {
        self.tilde_minus.eval(s)
    }

    pub fn tilde_plus(&self, s: f64) -> f64 {
        self.tilde_plus.eval(s)
    }

    /// Speeds at the point `(tau, vartheta)`.
    pub fn lambda_tilde(&self, tau: f64, vartheta: f64) -> Speeds {
        Speeds { minus: self.tilde_minus(vartheta - tau), plus: self.tilde_plus(vartheta + tau) }
    }

    /// `theta = Phi(tau, vartheta)`.
    pub fn phi(&self, tau: f64, vartheta: f64) -> f64 {
        self.anchor + 0.5 * self.tilde_plus.integral(0.0, vartheta + tau)
            - 0.5 * self.tilde_minus.integral(0.0, vartheta - tau)
    }

    /// `vartheta = Theta(t, theta)`, the inverse of `Phi(t, .)`.
    pub fn theta(&self, t: f64, theta: f64) -> Result<f64> {
        let guess = self.theta0(theta)?;
        let f = |x: f64| self.phi(t, x);
        let width = 1.0 + t.abs() * 4.0 / self.lambda.kappa().max(1e-12);
        let width = width.min(1e6);
        invert_increasing(&f, theta, guess - width, guess + width, INVERT_TOL * (1.0 + guess.abs()))
    }

    /// Jacobian `d vartheta / d theta = 2 / (l+ - l-)` at `(t, theta)`.
    pub fn jacobian(&self, t: f64, theta: f64) -> Result<f64> {
        let s = solve_lambda_exact(self, t, theta)?;
        Ok(2.0 / s.gap())
    }
}

fn bracket_around(x: f64, w: f64) -> (f64, f64) {
    let w = w.max(1e-3) * 0.01;
    (x - w, x + w)
}

pub fn build_map(lambda: &LambdaInitial, nodes: usize) -> Result<CoordinateMap> {
    CoordinateMap::build(lambda, nodes)
}

/// Speeds at `(t, theta)` by the exact transport formula.
pub fn solve_lambda_exact(map: &CoordinateMap, t: f64, theta: f64) -> Result<Speeds> {
    let vt = map.theta(t, theta)?;
    let lam = map.lambda();
    let minus = lam.minus.eval(map.phi0(vt - t)?);
    let plus = lam.plus.eval(map.phi0(vt + t)?);
    Ok(Speeds { minus, plus })
}

/// Largest residual of `d_t (2/(l+ - l-)) + d_theta ((l+ + l-)/(l+ - l-)) = 0`
/// over the listed points, using centred differences of step `h`.
pub fn conservation_identity_residual(map: &CoordinateMap, points: &[(f64, f64)], h: f64) -> Result<f64> {
    let a = |t: f64, x: f64| -> Result<f64> {
        let s = solve_lambda_exact(map, t, x)?;
        Ok(2.0 / s.gap())
    };
    let b = |t: f64, x: f64| -> Result<f64> {
        let s = solve_lambda_exact(map, t, x)?;
        Ok((s.plus + s.minus) / s.gap())
    };
    let mut worst: f64 = 0.0;
    for &(t, x) in points {
        let dt = (a(t + h, x)? - a(t - h, x)?) / (2.0 * h);
        let dx = (b(t, x + h)? - b(t, x - h)?) / (2.0 * h);
        worst = worst.max((dt + dx).abs());
    }
    Ok(worst)
}

/// Total variation of sampled values.
pub fn bv_norm(samples: &[f64]) -> f64 {
    total_variation(samples)
}
