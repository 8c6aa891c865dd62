//! H-projective checks: H-planarity of sampled curves, flatness certificates,
//! the mapping residual of a metric pair and the 4D λ-root classification.

use std::io::Read;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{FracMatrix, GeometryError, HermitianMetric};
use crate::params::{rat_to_f64, ModelParams};
use crate::symcore::{AFrac, GaussRat, SymError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HprojError {
    #[error("curve: {0}")]
    Curve(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("pencil matrix is not Hermitian")]
    NotHermitian,
    #[error("classification needs n = 2, got n = {0}")]
    Dimension(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// Samples of a curve with velocity and acceleration of the holomorphic components.
#[derive(Clone, Debug)]
pub struct SampledCurve {
    pub times: Vec<f64>,
    pub points: Vec<Vec<Complex64>>,
    pub velocities: Vec<Vec<Complex64>>,
    pub accelerations: Vec<Vec<Complex64>>,
}

fn check_times(times: &[f64]) -> Result<(), HprojError> {
    if times.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(HprojError::Curve("times must be strictly increasing".into()));
    }
    Ok(())
}

/// First and second derivative at `t` of the quadratic through three samples.
fn quad_derivs(ts: [f64; 3], fs: [Complex64; 3], t: f64) -> (Complex64, Complex64) {
    let mut d1 = Complex64::zero();
    let mut d2 = Complex64::zero();
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let den = (ts[i] - ts[j]) * (ts[i] - ts[k]);
        d1 += fs[i] * ((t - ts[j]) + (t - ts[k])) / den;
        d2 += fs[i] * 2.0 / den;
    }
    (d1, d2)
}

impl SampledCurve {
    /// Samples `f` and takes central differences with step `h`.
    pub fn from_fn(times: Vec<f64>, f: impl Fn(f64) -> Vec<Complex64>, h: f64) -> Result<Self, HprojError> {
        check_times(&times)?;
        let mut points = Vec::new();
        let mut velocities = Vec::new();
        let mut accelerations = Vec::new();
        for &t in &times {
            let (m, z, p) = (f(t - h), f(t), f(t + h));
            velocities.push(m.iter().zip(&p).map(|(a, b)| (b - a) / (2.0 * h)).collect());
            accelerations.push(m.iter().zip(&z).zip(&p).map(|((a, c), b)| (b - 2.0 * c + a) / (h * h)).collect());
            points.push(z);
        }
        Ok(SampledCurve { times, points, velocities, accelerations })
    }

    /// Derivatives from the quadratic through each sample and its neighbours
    /// (the first and last samples use the end triples).
    pub fn from_samples(times: Vec<f64>, points: Vec<Vec<Complex64>>) -> Result<Self, HprojError> {
        check_times(&times)?;
        if times.len() != points.len() {
            return Err(HprojError::Curve("times and points differ in length".into()));
        }
        if times.len() < 3 {
            return Err(HprojError::Curve("need at least three samples".into()));
        }
        let n = points[0].len();
        if n == 0 || points.iter().any(|p| p.len() != n) {
            return Err(HprojError::Curve("inconsistent point dimension".into()));
        }
        let last = times.len() - 1;
        let mut velocities = Vec::new();
        let mut accelerations = Vec::new();
        for i in 0..times.len() {
            let c = i.clamp(1, last - 1);
            let ts = [times[c - 1], times[c], times[c + 1]];
            let (v, a): (Vec<_>, Vec<_>) = (0..n)
                .map(|a| quad_derivs(ts, [points[c - 1][a], points[c][a], points[c + 1][a]], times[i]))
                .unzip();
            velocities.push(v);
            accelerations.push(a);
        }
        Ok(SampledCurve { times, points, velocities, accelerations })
    }

    /// Rows `t, Re z¹, Im z¹, …`; a non-numeric first row is taken as a header.
    pub fn from_csv(input: impl Read) -> Result<Self, HprojError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
        let mut times = Vec::new();
        let mut points = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| HprojError::Csv(e.to_string()))?;
            let vals: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            let vals = match vals {
                Ok(v) => v,
                Err(_) if row == 0 => continue,
                Err(e) => return Err(HprojError::Csv(format!("row {}: {e}", row + 1))),
            };
            if vals.len() < 3 || vals.len() % 2 == 0 {
                return Err(HprojError::Csv(format!("row {}: expected t followed by Re/Im pairs", row + 1)));
            }
            times.push(vals[0]);
            points.push(vals[1..].chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
        }
        Self::from_samples(times, points)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Fit of `∇_χ χ ≈ a χ + b Jχ` at one sample; `None` where `χ = 0`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PlanarityFit {
    pub t: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub residual: Option<f64>,
}

fn eval_matrix(m: &FracMatrix, z: &[Complex64]) -> Result<Vec<Vec<Complex64>>, SymError> {
    m.iter().map(|r| r.iter().map(|v| v.eval(z)).collect()).collect()
}

/// `⟨u, v⟩ = g_{αβ̄} u^α v̄^β`.
fn hermitian_product(g: &[Vec<Complex64>], u: &[Complex64], v: &[Complex64]) -> Complex64 {
    let mut s = Complex64::zero();
    for (a, ua) in u.iter().enumerate() {
        for (b, vb) in v.iter().enumerate() {
            s += g[a][b] * ua * vb.conj();
        }
    }
    s
}

/// Least-squares fit of `∇_χ χ` against `span{χ, Jχ}` at every sample, in the metric norm.
pub fn hplanarity_residual(c: &SampledCurve, m: &HermitianMetric) -> Result<Vec<PlanarityFit>, HprojError> {
    let n = m.n();
    if c.points.iter().any(|p| p.len() != n) {
        return Err(HprojError::Curve(format!("curve points must have {n} components")));
    }
    let fits = crate::par::map_range(c.len(), |i| -> Result<PlanarityFit, HprojError> {
        let z = &c.points[i];
        let chi = &c.velocities[i];
        let g = eval_matrix(&m.g_lower, z)?;
        let mut nabla = c.accelerations[i].clone();
        for (al, out) in nabla.iter_mut().enumerate() {
            for be in 0..n {
                for ga in 0..n {
                    *out += m.christoffel[al][be][ga].eval(z)? * chi[be] * chi[ga];
                }
            }
        }
        let chi2 = hermitian_product(&g, chi, chi).re;
        if chi2 <= f64::EPSILON * f64::EPSILON {
            return Ok(PlanarityFit { t: c.times[i], a: None, b: None, residual: None });
        }
        // Jχ = iχ on holomorphic components, so a + ib is one complex coefficient
        let lam = hermitian_product(&g, &nabla, chi) / chi2;
        let r: Vec<Complex64> = nabla.iter().zip(chi).map(|(v, x)| v - lam * x).collect();
        let res = hermitian_product(&g, &r, &r).re.max(0.0).sqrt();
        Ok(PlanarityFit { t: c.times[i], a: Some(lam.re), b: Some(lam.im), residual: Some(res) })
    });
    fits.into_iter().collect()
}

pub fn max_residual(fits: &[PlanarityFit]) -> f64 {
    fits.iter().filter_map(|f| f.residual).fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct FlatnessCertificate {
    pub phi: Option<Vec<AFrac>>,
    pub flat: bool,
}

impl FlatnessCertificate {
    fn fail() -> Self {
        FlatnessCertificate { phi: None, flat: false }
    }
}

/// Solves `Γ^α_{βγ} = φ_β δ^α_γ + φ_γ δ^α_β` exactly.
pub fn flatness_certificate(m: &HermitianMetric) -> FlatnessCertificate {
    let n = m.n();
    let p = &m.params;
    let half = GaussRat::ratio(1, 2);
    let gam = &m.christoffel;
    let phi: Vec<AFrac> = (0..n).map(|b| gam[b][b][b].scale(&half)).collect();
    let ok = (0..n).all(|a| {
        (0..n).all(|b| {
            (0..n).all(|c| {
                let mut rhs = AFrac::zero(p);
                if a == c {
                    rhs = &rhs + &phi[b];
                }
                if a == b {
                    rhs = &rhs + &phi[c];
                }
                gam[a][b][c] == rhs
            })
        })
    });
    if ok {
        FlatnessCertificate { phi: Some(phi), flat: true }
    } else {
        FlatnessCertificate::fail()
    }
}

/// `x / y` when the quotient is again an A-fraction.
fn divide(x: &AFrac, y: &AFrac) -> Option<AFrac> {
    if y.is_zero() {
        return None;
    }
    let p = x.params();
    let shifted = x.num() * &AFrac::a_pow(p, y.apow() as i32).num().clone();
    let q = shifted.div_exact(y.num())?;
    Some(AFrac::new(p, q, x.apow()))
}

/// Same identity lowered with `g`: `∂_β g_{γσ̄} = φ_β g_{γσ̄} + φ_γ g_{βσ̄}`.
///
/// Needs only `g_{αβ̄}`, so metrics whose inverse leaves the A-fractions can be tested.
/// `φ_β` is sought among A-fractions.
pub fn flatness_certificate_lower(params: &Arc<ModelParams>, g: &FracMatrix) -> FlatnessCertificate {
    let n = params.n();
    let two = GaussRat::from_int(2);
    let mut phi = Vec::with_capacity(n);
    for b in 0..n {
        let found = (0..n).find_map(|s| divide(&g[b][s].ddz(b, false), &g[b][s].scale(&two)));
        match found {
            Some(f) => phi.push(f),
            None => return FlatnessCertificate::fail(),
        }
    }
    let ok = (0..n).all(|b| {
        (0..n).all(|c| (0..n).all(|s| g[c][s].ddz(b, false) == &(&phi[b] * &g[c][s]) + &(&phi[c] * &g[b][s])))
    });
    if ok {
        FlatnessCertificate { phi: Some(phi), flat: true }
    } else {
        FlatnessCertificate::fail()
    }
}

/// `φ = coeff · ln A`; `e^{2φ} = A^{2·coeff}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogAPhi {
    pub coeff: BigRational,
}

impl LogAPhi {
    pub fn zero() -> Self {
        LogAPhi { coeff: BigRational::zero() }
    }

    pub fn new(coeff: BigRational) -> Self {
        LogAPhi { coeff }
    }

    /// `∂_μ φ` (or `∂_μ̄ φ`).
    pub fn grad(&self, params: &Arc<ModelParams>, conjugate: bool) -> Vec<AFrac> {
        let c = GaussRat::from_rat(self.coeff.clone());
        let inv = AFrac::a_pow(params, -1);
        let a = AFrac::a(params);
        (0..params.n()).map(|m| (&a.ddz(m, conjugate) * &inv).scale(&c)).collect()
    }

    pub fn exp2_at(&self, params: &ModelParams, z: &[Complex64]) -> f64 {
        let s: f64 = z.iter().map(|w| w.norm_sqr()).sum();
        (1.0 + params.k_f64() / 4.0 * s).powf(2.0 * rat_to_f64(&self.coeff))
    }
}

/// Metric pair with `b_{αβ̄} = e^{2φ} b0_{αβ̄}`, `b0_{αβ̄} = g'^{μ̄ν} g_{μ̄α} g_{νβ̄}`.
#[derive(Clone, Debug)]
pub struct HprojPair {
    pub g: HermitianMetric,
    pub g_prime: HermitianMetric,
    pub phi: LogAPhi,
    pub b0: FracMatrix,
}

impl HprojPair {
    pub fn new(g: HermitianMetric, g_prime: HermitianMetric, phi: LogAPhi) -> Self {
        let n = g.n();
        let p = g.params.clone();
        let gl = &g.g_lower;
        let gu = &g_prime.g_upper;
        let b0 = (0..n)
            .map(|al| {
                (0..n)
                    .map(|be| {
                        let mut s = AFrac::zero(&p);
                        for mu in 0..n {
                            for nu in 0..n {
                                s = &s + &(&(&gu[nu][mu] * &gl[al][mu]) * &gl[nu][be]);
                            }
                        }
                        s
                    })
                    .collect()
            })
            .collect();
        HprojPair { g, g_prime, phi, b0 }
    }

    pub fn params(&self) -> &Arc<ModelParams> {
        &self.g.params
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }
}

pub type Tensor3 = Vec<Vec<Vec<AFrac>>>;

/// Residuals `[α][β][γ]` with the common factor `e^{2φ}` removed.
///
/// `printed`: `b_{αβ̄;γ} − 2φ'_α g_{γβ̄}`; `symmetrized`: `b_{αβ̄;γ} − φ'_α g_{γβ̄} − φ'_γ g_{αβ̄}`;
/// `sign_flipped`: `b_{αβ̄;γ} + 2φ'_α g_{γβ̄}`; `barred`: `b_{αβ̄;γ̄} − 2φ'_β̄ g_{αγ̄}`.
#[derive(Clone, Debug)]
pub struct MappingResidual {
    pub printed: Tensor3,
    pub symmetrized: Tensor3,
    pub sign_flipped: Tensor3,
    pub barred: Tensor3,
}

pub fn tensor_vanishes(t: &Tensor3) -> bool {
    t.iter().flatten().flatten().all(AFrac::is_zero)
}

impl MappingResidual {
    pub fn printed_vanishes(&self) -> bool {
        tensor_vanishes(&self.printed)
    }

    pub fn symmetrized_vanishes(&self) -> bool {
        tensor_vanishes(&self.symmetrized)
    }

    pub fn sign_flipped_vanishes(&self) -> bool {
        tensor_vanishes(&self.sign_flipped)
    }

    /// Largest modulus of the printed residual (with `e^{2φ}` restored) over sample points.
    pub fn sampled_max(&self, pair: &HprojPair, points: &[Vec<Complex64>]) -> Result<f64, SymError> {
        let mut worst = 0.0f64;
        for z in points {
            let f = pair.phi.exp2_at(pair.params(), z);
            for v in self.printed.iter().flatten().flatten() {
                worst = worst.max(v.eval(z)?.norm() * f);
            }
        }
        Ok(worst)
    }
}

/// Covariant derivative is taken with respect to `g`.
pub fn mapping_residual(pair: &HprojPair) -> MappingResidual {
    let n = pair.n();
    let p = pair.params().clone();
    let g = &pair.g.g_lower;
    let gam = &pair.g.christoffel;
    let gpu = &pair.g_prime.g_upper;
    let b0 = &pair.b0;
    let dphi = pair.phi.grad(&p, false);
    let dphib = pair.phi.grad(&p, true);
    let two = GaussRat::from_int(2);
    // φ'_α / e^{2φ} = ∂_μφ g'^{μν̄} g_{αν̄};  φ'_β̄ / e^{2φ} = ∂_μ̄φ g'^{νμ̄} g_{νβ̄}
    let phi_p: Vec<AFrac> = (0..n)
        .map(|al| {
            let mut s = AFrac::zero(&p);
            for mu in 0..n {
                for nu in 0..n {
                    s = &s + &(&(&dphi[mu] * &gpu[mu][nu]) * &g[al][nu]);
                }
            }
            s
        })
        .collect();
    let phi_pb: Vec<AFrac> = (0..n)
        .map(|be| {
            let mut s = AFrac::zero(&p);
            for mu in 0..n {
                for nu in 0..n {
                    s = &s + &(&(&dphib[mu] * &gpu[nu][mu]) * &g[nu][be]);
                }
            }
            s
        })
        .collect();
    let grid = |f: &dyn Fn(usize, usize, usize) -> AFrac| -> Tensor3 {
        (0..n).map(|a| (0..n).map(|b| (0..n).map(|c| f(a, b, c)).collect()).collect()).collect()
    };
    // (b_{αβ̄;γ}) / e^{2φ} = ∂_γ b0 + 2∂_γφ b0 − Γ^σ_{γα} b0_{σβ̄}
    let cov = grid(&|a, b, c| {
        let mut s = &b0[a][b].ddz(c, false) + &(&dphi[c] * &b0[a][b]).scale(&two);
        for sg in 0..n {
            s = &s - &(&gam[sg][c][a] * &b0[sg][b]);
        }
        s
    });
    let cov_bar = grid(&|a, b, c| {
        let mut s = &b0[a][b].ddz(c, true) + &(&dphib[c] * &b0[a][b]).scale(&two);
        for sg in 0..n {
            s = &s - &(&gam[sg][c][b].conj() * &b0[a][sg]);
        }
        s
    });
    let term = |a: usize, b: usize, c: usize| &phi_p[a] * &g[c][b];
    MappingResidual {
        printed: grid(&|a, b, c| &cov[a][b][c] - &term(a, b, c).scale(&two)),
        symmetrized: grid(&|a, b, c| &(&cov[a][b][c] - &term(a, b, c)) - &term(c, b, a)),
        sign_flipped: grid(&|a, b, c| &cov[a][b][c] + &term(a, b, c).scale(&two)),
        barred: grid(&|a, b, c| &cov_bar[a][b][c] - &(&phi_pb[b] * &g[a][c]).scale(&two)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    Rescaling,
    Generic,
    Degenerate,
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaClassification {
    /// Distinct roots with multiplicities, ascending.
    pub roots: Vec<(f64, usize)>,
    pub case_tag: CaseTag,
    /// Discriminant of `det(b0 − λ g)` as an exact rational.
    pub discriminant: String,
    /// Roots from the Cholesky-reduced Hermitian eigenproblem.
    pub cholesky_roots: Vec<f64>,
}

pub type Mat2 = [[GaussRat; 2]; 2];

fn mat2(m: &FracMatrix, z: &[GaussRat]) -> Result<Mat2, SymError> {
    Ok([[m[0][0].eval_exact(z)?, m[0][1].eval_exact(z)?], [m[1][0].eval_exact(z)?, m[1][1].eval_exact(z)?]])
}

fn is_hermitian2(m: &Mat2) -> bool {
    m[0][0].is_real() && m[1][1].is_real() && m[0][1].conj() == m[1][0]
}

fn to_dmatrix(m: &Mat2, scale: f64) -> DMatrix<Complex64> {
    DMatrix::from_fn(2, 2, |i, j| m[i][j].to_c64() * scale)
}

/// Roots of `det(b − λ g) = 0` for a 2×2 Hermitian pencil, with `b` scaled by `b_scale`.
///
/// The case is decided on the exact discriminant; the roots are floating point.
pub fn classify_pencil(g: &Mat2, b: &Mat2, b_scale: f64) -> Result<LambdaClassification, HprojError> {
    if !is_hermitian2(g) || !is_hermitian2(b) {
        return Err(HprojError::NotHermitian);
    }
    let det = |m: &Mat2| &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]);
    let a2 = det(g);
    let a1 = -(&(&(&(&b[0][0] * &g[1][1]) + &(&b[1][1] * &g[0][0])) - &(&b[0][1] * &g[1][0])) - &(&b[1][0] * &g[0][1]));
    let a0 = det(b);
    let disc = &(&a1 * &a1) - &(&(&a2 * &a0) * &GaussRat::from_int(4));
    let disc_r = disc.re.clone();
    let positive_g = g[0][0].re.is_positive() && a2.re.is_positive();
    let chol = Cholesky::new(to_dmatrix(g, 1.0))
        .and_then(|c| c.l().try_inverse())
        .map(|li| {
            let m = &li * to_dmatrix(b, b_scale) * li.adjoint();
            let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            ev
        })
        .unwrap_or_default();
    if !positive_g {
        return Ok(LambdaClassification {
            roots: Vec::new(),
            case_tag: CaseTag::Degenerate,
            discriminant: disc_r.to_string(),
            cholesky_roots: chol,
        });
    }
    let (a2f, a1f, df) = (rat_to_f64(&a2.re), rat_to_f64(&a1.re), rat_to_f64(&disc_r).max(0.0));
    let (roots, tag) = if disc_r.is_zero() {
        (vec![(-a1f / (2.0 * a2f) * b_scale, 2)], CaseTag::Rescaling)
    } else {
        let s = df.sqrt();
        (
            vec![((-a1f - s) / (2.0 * a2f) * b_scale, 1), ((-a1f + s) / (2.0 * a2f) * b_scale, 1)],
            CaseTag::Generic,
        )
    };
    Ok(LambdaClassification { roots, case_tag: tag, discriminant: disc_r.to_string(), cholesky_roots: chol })
}

/// λ-roots of the pair at an interior rational point (`n = 2`).
pub fn classify_4d(pair: &HprojPair, point: &[GaussRat]) -> Result<LambdaClassification, HprojError> {
    if pair.n() != 2 {
        return Err(HprojError::Dimension(pair.n()));
    }
    let g = mat2(&pair.g.g_lower, point)?;
    let b = mat2(&pair.b0, point)?;
    let z: Vec<Complex64> = point.iter().map(GaussRat::to_c64).collect();
    classify_pencil(&g, &b, pair.phi.exp2_at(pair.params(), &z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_metric;

    #[test]
    fn quadratic_stencil_exact_on_quadratics() {
        let f = |t: f64| Complex64::new(3.0 * t * t - t, 2.0);
        let ts = [0.1, 0.25, 0.7];
        let (d1, d2) = quad_derivs(ts, [f(ts[0]), f(ts[1]), f(ts[2])], 0.1);
        assert!((d1.re - (0.6 - 1.0)).abs() < 1e-12);
        assert!((d2.re - 6.0).abs() < 1e-12);
    }

    #[test]
    fn csv_with_header() {
        let text = "t,re,im\n0,0,0\n0.1,0.1,0\n0.2,0.2,0\n";
        let c = SampledCurve::from_csv(text.as_bytes()).unwrap();
        assert_eq!(c.len(), 3);
        assert!((c.velocities[0][0].re - 1.0).abs() < 1e-12);
        assert!(SampledCurve::from_csv("0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn self_pair_has_zero_residual() {
        let p = ModelParams::from_ints(2, -4, 1, 1, 1).unwrap().shared();
        let g = build_metric(&p);
        let pair = HprojPair::new(g.clone(), g, LogAPhi::zero());
        assert!(mapping_residual(&pair).printed_vanishes());
    }
}
