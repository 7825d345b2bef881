//! Closed-form flat-space strings in orthonormal gauge,
//! `<X_t, X_theta> = 0` and `|X_t|^2 + |X_theta|^2 = 0`:
//!
//! ```text
//! X(t, theta) = (p(theta + t) + p(theta - t)) / 2 + (1/2) int_{theta - t}^{theta + t} q
//! ```

use std::sync::Arc;

use crate::dynamics::{Vec4, WorldSheetJet};
use crate::error::{Error, Result};
use crate::initial_data::AnalyticData;
use crate::numerics::adaptive_simpson;

fn minkowski(a: &Vec4, b: &Vec4) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Exact flat solution generated by gauge-consistent data.
#[derive(Debug, Clone)]
pub struct DAlembert {
    data: AnalyticData,
}

impl DAlembert {
    /// Checks both gauge constraints at `samples` points of `[a, b]` to `1e-10`.
    pub fn new(data: AnalyticData, a: f64, b: f64, samples: usize) -> Result<Self> {
        let samples = samples.max(2);
        for i in 0..samples {
            let th = a + (b - a) * i as f64 / (samples - 1) as f64;
            let (q, dp) = ((data.q)(th), (data.dp)(th));
            let cross = minkowski(&q, &dp);
            let norm = minkowski(&q, &q) + minkowski(&dp, &dp);
            if cross.abs() > 1e-10 || norm.abs() > 1e-10 {
                return Err(Error::GaugeViolation {
                    detail: format!("at theta = {th}: <q, p'> = {cross:e}, |q|^2 + |p'|^2 = {norm:e}"),
                });
            }
        }
        Ok(DAlembert { data })
    }

    pub fn data(&self) -> &AnalyticData {
        &self.data
    }

    pub fn jet(&self, t: f64, theta: f64) -> Result<WorldSheetJet> {
        let (a, b) = (theta - t, theta + t);
        let (pa, pb) = ((self.data.p)(a), (self.data.p)(b));
        let (dpa, dpb) = ((self.data.dp)(a), (self.data.dp)(b));
        let (qa, qb) = ((self.data.q)(a), (self.data.q)(b));
        let mut jet = WorldSheetJet { u: [0.0; 4], v: [0.0; 4], w: [0.0; 4] };
        for c in 0..4 {
            let q = &self.data.q;
            let int = adaptive_simpson(&|s: f64| q(s)[c], a, b, 1e-13)?;
            jet.u[c] = 0.5 * (pa[c] + pb[c]) + 0.5 * int;
            jet.v[c] = 0.5 * (dpb[c] - dpa[c]) + 0.5 * (qb[c] + qa[c]);
            jet.w[c] = 0.5 * (dpb[c] + dpa[c]) + 0.5 * (qb[c] - qa[c]);
        }
        Ok(jet)
    }
}

/// Oscillating string with `X^2 = a sin(theta) cos(t)` exactly and
/// `X^1` chosen so the data is in orthonormal gauge. Needs `|a| < 1`.
pub fn standing_wave(a: f64) -> Result<AnalyticData> {
    if !(a.abs() < 1.0) {
        return Err(Error::InvalidInput(format!("standing wave amplitude must satisfy |a| < 1, got {a}")));
    }
    let speed = move |s: f64| (1.0 - a * a * s.cos().powi(2)).sqrt();
    Ok(AnalyticData {
        p: Arc::new(move |th: f64| {
            let x1 = adaptive_simpson(&speed, 0.0, th, 1e-14).unwrap_or(f64::NAN);
            [0.0, x1, a * th.sin(), 0.0]
        }),
        dp: Arc::new(move |th: f64| [0.0, speed(th), a * th.cos(), 0.0]),
        q: Arc::new(|_| [1.0, 0.0, 0.0, 0.0]),
    })
}

/// Open string released from rest with a unit-speed tangent
/// `p' = (0, cos phi, sin phi, 0)` turning by a Gaussian angle `phi`.
/// The kink splits into two halves moving apart at the speed of light.
pub fn kinked_string(amplitude: f64, width: f64) -> AnalyticData {
    let phi = move |s: f64| amplitude * (-(s / width).powi(2)).exp();
    AnalyticData {
        p: Arc::new(move |th: f64| {
            let x1 = adaptive_simpson(&|s: f64| phi(s).cos(), 0.0, th, 1e-14).unwrap_or(f64::NAN);
            let x2 = adaptive_simpson(&|s: f64| phi(s).sin(), 0.0, th, 1e-14).unwrap_or(f64::NAN);
            [0.0, x1, x2, 0.0]
        }),
        dp: Arc::new(move |th: f64| [0.0, phi(th).cos(), phi(th).sin(), 0.0]),
        q: Arc::new(|_| [1.0, 0.0, 0.0, 0.0]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standing_wave_matches_closed_form() {
        let a = 0.5;
        let d = DAlembert::new(standing_wave(a).unwrap(), -3.0, 3.0, 50).unwrap();
        for &(t, th) in &[(0.3, 0.1), (1.7, -0.8), (2.5, 1.2)] {
            let j = d.jet(t, th).unwrap();
            assert!((j.u[2] - a * th.sin() * t.cos()).abs() < 1e-12);
            assert!((j.u[0] - t).abs() < 1e-12);
            // gauge holds for all time
            assert!(minkowski(&j.v, &j.w).abs() < 1e-12);
            assert!((minkowski(&j.v, &j.v) + minkowski(&j.w, &j.w)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_data_off_gauge() {
        let mut bad = standing_wave(0.3).unwrap();
        bad.q = Arc::new(|_| [1.0, 0.1, 0.0, 0.0]);
        assert!(matches!(DAlembert::new(bad, 0.0, 1.0, 10), Err(Error::GaugeViolation { .. })));
    }
}
