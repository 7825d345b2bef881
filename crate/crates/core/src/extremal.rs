//! Extremal-surface identities for a `(p+1)`-dimensional immersion in an
//! `(n+1)`-dimensional Lorentzian manifold: the induced metric, the
//! mean-curvature vector `E`, the tangential projection `G` and the normal
//! projector `M = I - G g`.

use nalgebra::{Complex, DMatrix, DVector, Schur};
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::MetricField;

/// Metric tensor, inverse and Christoffel symbols of an ambient manifold.
/// `christoffel[c]` holds `Gamma^c_ab` as a matrix over `(a, b)`.
#[derive(Debug, Clone)]
pub struct AmbientTensor {
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub christoffel: Vec<DMatrix<f64>>,
}

pub trait AmbientMetric {
    fn dim(&self) -> usize;
    fn tensor(&self, x: &[f64]) -> Result<AmbientTensor>;
}

impl AmbientMetric for MetricField {
    fn dim(&self) -> usize {
        4
    }

    fn tensor(&self, x: &[f64]) -> Result<AmbientTensor> {
        let p: [f64; 4] = x
            .get(..4)
            .and_then(|s| s.try_into().ok())
            .ok_or_else(|| Error::InvalidInput("ambient point needs 4 coordinates".into()))?;
        let v = self.evaluate(&p)?;
        Ok(AmbientTensor {
            g: DMatrix::from_fn(4, 4, |i, j| v.g[i][j]),
            ginv: DMatrix::from_fn(4, 4, |i, j| v.ginv[i][j]),
            christoffel: (0..4).map(|c| DMatrix::from_fn(4, 4, |a, b| v.christoffel[c][a][b])).collect(),
        })
    }
}

/// Product of a four-dimensional metric with `extra` flat spatial directions.
#[derive(Debug, Clone, Copy)]
pub struct FlatExtension {
    pub base: MetricField,
    pub extra: usize,
}

impl AmbientMetric for FlatExtension {
    fn dim(&self) -> usize {
        4 + self.extra
    }

    fn tensor(&self, x: &[f64]) -> Result<AmbientTensor> {
        let d = self.dim();
        let b = self.base.tensor(x)?;
        let mut g = DMatrix::identity(d, d);
        let mut ginv = DMatrix::identity(d, d);
        g.view_mut((0, 0), (4, 4)).copy_from(&b.g);
        ginv.view_mut((0, 0), (4, 4)).copy_from(&b.ginv);
        let mut christoffel = vec![DMatrix::zeros(d, d); d];
        for (c, gc) in b.christoffel.iter().enumerate() {
            christoffel[c].view_mut((0, 0), (4, 4)).copy_from(gc);
        }
        Ok(AmbientTensor { g, ginv, christoffel })
    }
}

/// Position, first and second derivatives of an immersion at one parameter value.
#[derive(Debug, Clone)]
pub struct ImmersionJet {
    pub position: DVector<f64>,
    /// `(n+1) x (p+1)`; column `mu` is the tangent `X_mu`.
    pub tangents: DMatrix<f64>,
    /// `second[c]` is the symmetric `(p+1) x (p+1)` Hessian of component `c`.
    pub second: Vec<DMatrix<f64>>,
}

impl ImmersionJet {
    pub fn ambient_dim(&self) -> usize {
        self.tangents.nrows()
    }

    pub fn sheet_dim(&self) -> usize {
        self.tangents.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct InducedMetric {
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub det: f64,
}

impl InducedMetric {
    /// True when the metric has exactly one negative eigenvalue.
    pub fn is_lorentzian(&self) -> bool {
        let eig = self.g.clone().symmetric_eigenvalues();
        eig.iter().filter(|&&l| l < 0.0).count() == 1 && eig.iter().all(|l| l.abs() > 0.0)
    }
}

/// Induced metric `X^T g X`. Fails when `|det| < det_floor`.
pub fn induced_metric(jet: &ImmersionJet, amb: &AmbientTensor, det_floor: f64) -> Result<InducedMetric> {
    let q = &jet.tangents;
    let g = q.transpose() * &amb.g * q;
    let det = g.determinant();
    if !(det.abs() >= det_floor) {
        return Err(Error::DegenerateMetric { det });
    }
    let ginv = g.clone().try_inverse().ok_or(Error::DegenerateMetric { det })?;
    Ok(InducedMetric { g, ginv, det })
}

/// `E^c = g^{mu nu} (x^c_{mu nu} + Gamma^c_ab x^a_mu x^b_nu)`.
pub fn compute_e(jet: &ImmersionJet, amb: &AmbientTensor, ind: &InducedMetric) -> DVector<f64> {
    let q = &jet.tangents;
    DVector::from_fn(jet.ambient_dim(), |c, _| {
        let gamma_pulled = q.transpose() * &amb.christoffel[c] * q;
        (&ind.ginv).component_mul(&(&jet.second[c] + gamma_pulled)).sum()
    })
}

/// Tangential projection `G = X g^{-1} X^T` and `M = I - G g_amb`.
#[derive(Debug, Clone)]
pub struct FrameworkMatrices {
    pub projection: DMatrix<f64>,
    pub m: DMatrix<f64>,
}

pub fn framework_matrices(jet: &ImmersionJet, amb: &AmbientTensor, ind: &InducedMetric) -> FrameworkMatrices {
    let q = &jet.tangents;
    let projection = q * &ind.ginv * q.transpose();
    let d = jet.ambient_dim();
    let m = DMatrix::identity(d, d) - &projection * &amb.g;
    FrameworkMatrices { projection, m }
}

/// An immersion that can produce its jet at any parameter value.
pub trait Immersion {
    fn sheet_dim(&self) -> usize;
    fn jet(&self, u: &[f64]) -> ImmersionJet;
}

/// `x(u) = x0 + X u + u^T C u / 2` with constant Hessians.
#[derive(Debug, Clone)]
pub struct QuadraticImmersion {
    pub x0: DVector<f64>,
    pub tangents: DMatrix<f64>,
    pub hessians: Vec<DMatrix<f64>>,
}

impl Immersion for QuadraticImmersion {
    fn sheet_dim(&self) -> usize {
        self.tangents.ncols()
    }

    fn jet(&self, u: &[f64]) -> ImmersionJet {
        let uv = DVector::from_column_slice(u);
        let d = self.x0.len();
        let mut position = &self.x0 + &self.tangents * &uv;
        let mut tangents = self.tangents.clone();
        for c in 0..d {
            let hu = &self.hessians[c] * &uv;
            position[c] += 0.5 * uv.dot(&hu);
            for mu in 0..uv.len() {
                tangents[(c, mu)] += hu[mu];
            }
        }
        ImmersionJet { position, tangents, second: self.hessians.clone() }
    }
}

/// Compares the mean-curvature operator written with the intrinsic
/// connection of the induced metric against `M E`. The intrinsic
/// Christoffels come from central differences of the induced metric with
/// step `h`, so the residual decays like `h^2`.
pub fn me_form_residual<I: Immersion, A: AmbientMetric>(imm: &I, u0: &[f64], ambient: &A, h: f64) -> Result<f64> {
    let np = imm.sheet_dim();
    let jet = imm.jet(u0);
    let amb = ambient.tensor(jet.position.as_slice())?;
    let ind = induced_metric(&jet, &amb, 1e-14)?;
    let metric_at = |u: &[f64]| -> Result<DMatrix<f64>> {
        let j = imm.jet(u);
        let a = ambient.tensor(j.position.as_slice())?;
        Ok(j.tangents.transpose() * &a.g * &j.tangents)
    };
    // dg[s] = d g_{mu nu} / d u^s
    let mut dg = Vec::with_capacity(np);
    for s in 0..np {
        let mut up = u0.to_vec();
        let mut um = u0.to_vec();
        up[s] += h;
        um[s] -= h;
        dg.push((metric_at(&up)? - metric_at(&um)?) / (2.0 * h));
    }
    // intrinsic Gamma^rho_{mu nu}
    let mut gamma = vec![DMatrix::<f64>::zeros(np, np); np];
    for (rho, gr) in gamma.iter_mut().enumerate() {
        for mu in 0..np {
            for nu in 0..np {
                let mut s = 0.0;
                for sig in 0..np {
                    s += 0.5
                        * ind.ginv[(rho, sig)]
                        * (dg[mu][(sig, nu)] + dg[nu][(sig, mu)] - dg[sig][(mu, nu)]);
                }
                gr[(mu, nu)] = s;
            }
        }
    }
    let e = compute_e(&jet, &amb, &ind);
    let fm = framework_matrices(&jet, &amb, &ind);
    let me = &fm.m * &e;
    let mut worst: f64 = 0.0;
    for c in 0..jet.ambient_dim() {
        let mut tangential = 0.0;
        for mu in 0..np {
            for nu in 0..np {
                let mut t = 0.0;
                for rho in 0..np {
                    t += gamma[rho][(mu, nu)] * jet.tangents[(c, rho)];
                }
                tangential += ind.ginv[(mu, nu)] * t;
            }
        }
        worst = worst.max((e[c] - tangential - me[c]).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex<f64>>,
    pub rank: usize,
}

impl Spectrum {
    /// Number of eigenvalues within `tol` of `target`.
    pub fn count_near(&self, target: f64, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|z| (z.re - target).abs() <= tol && z.im.abs() <= tol).count()
    }
}

/// Eigenvalues of `M` (Schur form) and its numerical rank (SVD, relative tolerance).
///
/// The unshifted QR iteration can stall on the exactly repeated eigenvalues
/// of a projection, so a stalled decomposition is retried on `M + sI`.
/// Eigenvalues are NaN if every retry stalls.
pub fn m_matrix_spectrum(fm: &FrameworkMatrices) -> Spectrum {
    let d = fm.m.nrows();
    let eigenvalues = [0.0, 0.37, -0.61, 1.93]
        .iter()
        .find_map(|&s| {
            let shifted = &fm.m + DMatrix::identity(d, d) * s;
            Schur::try_new(shifted, f64::EPSILON, 2000)
                .map(|sc| sc.complex_eigenvalues().iter().map(|z| z - s).collect::<Vec<_>>())
        })
        .unwrap_or_else(|| vec![Complex::new(f64::NAN, f64::NAN); d]);
    let sv = fm.m.clone().singular_values();
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > 1e-9 * smax.max(1.0)).count();
    Spectrum { eigenvalues, rank }
}

/// `(max |M X X^T|, max |X^T M X|)`; both vanish because `M` kills tangents.
pub fn annihilation_check(fm: &FrameworkMatrices, jet: &ImmersionJet) -> (f64, f64) {
    let q = &jet.tangents;
    let a = (&fm.m * q * q.transpose()).abs().max();
    let b = (q.transpose() * &fm.m * q).abs().max();
    (a, b)
}

/// Random jet with Lorentzian induced metric, `det < -min_det`.
/// Points are placed at `3 <= r <= 12` in units of the base mass scale.
pub fn random_jet<R: Rng, A: AmbientMetric>(
    rng: &mut R,
    ambient: &A,
    p: usize,
    min_det: f64,
) -> Result<ImmersionJet> {
    let d = ambient.dim();
    if p + 1 > d - 1 {
        return Err(Error::InvalidInput(format!("sheet dimension {} needs codimension >= 1", p + 1)));
    }
    for _ in 0..10_000 {
        let mut position = DVector::zeros(d);
        position[0] = rng.gen_range(-1.0..1.0);
        let mut dir = [0.0; 3];
        let mut norm: f64 = 0.0;
        while norm < 1e-3 {
            for c in dir.iter_mut() {
                *c = rng.gen_range(-1.0..1.0);
            }
            norm = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
        }
        let r = rng.gen_range(3.0..12.0);
        for i in 0..3 {
            position[i + 1] = r * dir[i] / norm;
        }
        for k in 4..d {
            position[k] = rng.gen_range(-1.0..1.0);
        }
        let mut tangents = DMatrix::from_fn(d, p + 1, |_, _| rng.gen_range(-1.0..1.0));
        tangents[(0, 0)] = 1.0 + rng.gen_range(0.0..1.0);
        for mu in 1..=p {
            tangents[(0, mu)] *= 0.3;
        }
        for c in 1..d {
            tangents[(c, 0)] *= 0.4;
        }
        let second = (0..d)
            .map(|_| {
                let a = DMatrix::from_fn(p + 1, p + 1, |_, _| rng.gen_range(-1.0..1.0));
                (&a + a.transpose()) * 0.5
            })
            .collect();
        let jet = ImmersionJet { position, tangents, second };
        let Ok(amb) = ambient.tensor(jet.position.as_slice()) else { continue };
        let Ok(ind) = induced_metric(&jet, &amb, 1e-14) else { continue };
        if ind.det < -min_det && ind.is_lorentzian() {
            return Ok(jet);
        }
    }
    Err(Error::InvalidInput("rejection sampling found no Lorentzian jet".into()))
}

/// A quadratic immersion whose jet at `u = 0` is `jet`.
pub fn quadratic_through(jet: &ImmersionJet) -> QuadraticImmersion {
    QuadraticImmersion { x0: jet.position.clone(), tangents: jet.tangents.clone(), hessians: jet.second.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flat_line_jet() -> ImmersionJet {
        // static straight string along x1 in flat space
        let mut tangents = DMatrix::zeros(4, 2);
        tangents[(0, 0)] = 1.0;
        tangents[(1, 1)] = 1.0;
        ImmersionJet { position: DVector::zeros(4), tangents, second: vec![DMatrix::zeros(2, 2); 4] }
    }

    #[test]
    fn static_flat_string_has_diagonal_projector() {
        let jet = flat_line_jet();
        let amb = MetricField::minkowski().tensor(&[0.0; 4]).unwrap();
        let ind = induced_metric(&jet, &amb, 1e-14).unwrap();
        let fm = framework_matrices(&jet, &amb, &ind);
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0]));
        assert!((&fm.m - expect).abs().max() < 1e-15);
        assert_eq!(compute_e(&jet, &amb, &ind).abs().max(), 0.0);
    }

    #[test]
    fn degenerate_tangents_are_rejected() {
        let mut jet = flat_line_jet();
        jet.tangents[(1, 1)] = 0.0;
        jet.tangents[(0, 1)] = 1e-9;
        let amb = MetricField::minkowski().tensor(&[0.0; 4]).unwrap();
        assert!(matches!(induced_metric(&jet, &amb, 1e-14), Err(Error::DegenerateMetric { .. })));
    }

    #[test]
    fn spectrum_and_annihilation_on_random_jets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let amb5 = FlatExtension { base: MetricField::schwarzschild(1.0).unwrap(), extra: 1 };
        for _ in 0..50 {
            let jet = random_jet(&mut rng, &amb5, 2, 1e-3).unwrap();
            let t = amb5.tensor(jet.position.as_slice()).unwrap();
            let ind = induced_metric(&jet, &t, 1e-14).unwrap();
            let fm = framework_matrices(&jet, &t, &ind);
            let s = m_matrix_spectrum(&fm);
            assert_eq!(s.rank, 2);
            assert_eq!(s.count_near(0.0, 1e-9), 3);
            assert_eq!(s.count_near(1.0, 1e-9), 2);
            let (a, b) = annihilation_check(&fm, &jet);
            assert!(a < 1e-10 && b < 1e-10);
        }
    }

    #[test]
    fn me_form_residual_is_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let field = MetricField::schwarzschild(1.0).unwrap();
        let jet = random_jet(&mut rng, &field, 1, 1e-2).unwrap();
        let imm = quadratic_through(&jet);
        let r1 = me_form_residual(&imm, &[0.0, 0.0], &field, 1e-2).unwrap();
        let r2 = me_form_residual(&imm, &[0.0, 0.0], &field, 5e-3).unwrap();
        assert!(r1 / r2 > 3.5 && r1 / r2 < 4.5, "{r1} {r2}");
        assert!(me_form_residual(&imm, &[0.0, 0.0], &field, 1e-4).unwrap() < 1e-7);
    }
}
