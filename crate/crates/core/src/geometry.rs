//! Kähler structure of the constant-curvature chart: metric, inverse, Christoffel
//! symbols, curvature, symplectic form and the prequantization connection.

use std::sync::Arc;

use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::params::ModelParams;
use crate::symcore::{AFrac, GaussRat, Poly};

pub type FracMatrix = Vec<Vec<AFrac>>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("metric matrix is not square of size n")]
    Shape,
    #[error("metric is not Hermitian at entry ({0},{1})")]
    NotHermitian(usize, usize),
    #[error("determinant {0} is not a constant multiple of a power of A")]
    NotInvertible(String),
}

/// `g_{αβ̄}`, `g^{αβ̄}` and `Γ^α_{βγ}` as exact A-fractions.
///
/// Storage: `g_lower[a][b] = g_{ab̄}`, `g_upper[a][b] = g^{ab̄}`,
/// `christoffel[a][b][c] = Γ^a_{bc}`. The barred block is the conjugate.
#[derive(Clone, Debug)]
pub struct HermitianMetric {
    pub params: Arc<ModelParams>,
    pub g_lower: FracMatrix,
    pub g_upper: FracMatrix,
    pub christoffel: Vec<FracMatrix>,
}

/// Coefficients of `dz^α` in `α = −i ∂_αΦ dz^α`.
#[derive(Clone, Debug)]
pub struct ConnectionForm {
    pub params: Arc<ModelParams>,
    pub alpha_components: Vec<AFrac>,
}

/// `omega_lower[a][b]` is the coefficient of `dz^a ∧ dz̄^b`;
/// `omega_upper[a][b] = ω^{ab̄}` is the Poisson tensor entry.
#[derive(Clone, Debug)]
pub struct SymplecticForm {
    pub params: Arc<ModelParams>,
    pub omega_lower: FracMatrix,
    pub omega_upper: FracMatrix,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CurvatureReport {
    pub convention_c: i64,
    pub verified: bool,
    pub samples_checked: usize,
    pub failures: Vec<String>,
}

fn delta(params: &Arc<ModelParams>, a: usize, b: usize) -> AFrac {
    if a == b {
        AFrac::one(params)
    } else {
        AFrac::zero(params)
    }
}

/// `(A δ_{αβ} − (k/4) z̄^α z^β) / A²`.
pub fn metric_lower(params: &Arc<ModelParams>) -> FracMatrix {
    let n = params.n();
    let q = params.quarter_k();
    let a = params.a_poly();
    (0..n)
        .map(|al| {
            (0..n)
                .map(|be| {
                    let mut num = (&Poly::zb(n, al) * &Poly::z(n, be)).scale(&-&q);
                    if al == be {
                        num = &num + a;
                    }
                    AFrac::new(params, num, 2)
                })
                .collect()
        })
        .collect()
}

/// The closed form `g^{αβ̄} = A (δ + (k/4) z^α z̄^β)`.
pub fn inverse_closed_form(params: &Arc<ModelParams>) -> FracMatrix {
    let n = params.n();
    let q = AFrac::constant(params, params.quarter_k());
    let a = AFrac::a(params);
    (0..n)
        .map(|al| {
            (0..n)
                .map(|be| {
                    let t = &delta(params, al, be) + &(&q * &(&AFrac::z(params, al) * &AFrac::zb(params, be)));
                    &a * &t
                })
                .collect()
        })
        .collect()
}

/// `Γ^α_{βγ} = −(k/4) A^{-1} (z̄^β δ^α_γ + z̄^γ δ^α_β)`.
pub fn christoffel_closed_form(params: &Arc<ModelParams>) -> Vec<FracMatrix> {
    let n = params.n();
    let mq = AFrac::constant(params, -params.quarter_k());
    let ainv = AFrac::a_pow(params, -1);
    let pre = &mq * &ainv;
    (0..n)
        .map(|al| {
            (0..n)
                .map(|be| {
                    (0..n)
                        .map(|ga| {
                            let s = &(&AFrac::zb(params, be) * &delta(params, al, ga))
                                + &(&AFrac::zb(params, ga) * &delta(params, al, be));
                            &pre * &s
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub fn determinant(m: &FracMatrix, params: &Arc<ModelParams>) -> AFrac {
    let n = m.len();
    match n {
        0 => AFrac::one(params),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = AFrac::zero(params);
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let t = &m[0][j] * &determinant(&minor(m, 0, j), params);
                acc = if j % 2 == 0 { &acc + &t } else { &acc - &t };
            }
            acc
        }
    }
}

fn minor(m: &FracMatrix, r: usize, c: usize) -> FracMatrix {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(_, row)| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| v.clone()).collect())
        .collect()
}

/// `1/d` when `d = c·A^j` for a nonzero constant `c` and integer `j`.
fn invert_a_monomial(d: &AFrac) -> Option<AFrac> {
    let params = d.params();
    let mut num = d.num().clone();
    let mut j: i32 = 0;
    if !params.is_flat() {
        while num.as_constant().is_none() {
            num = num.div_exact(params.a_poly())?;
            j += 1;
        }
    }
    let c = num.as_constant()?;
    let cinv = c.inv()?;
    Some(AFrac::a_pow(params, d.apow() as i32 - j).scale(&cinv))
}

/// Exact matrix inverse by adjugate over a determinant of the form `c·A^j`.
pub fn invert(m: &FracMatrix, params: &Arc<ModelParams>) -> Result<FracMatrix, GeometryError> {
    let n = m.len();
    let det = determinant(m, params);
    let dinv = invert_a_monomial(&det).ok_or_else(|| GeometryError::NotInvertible(det.to_string()))?;
    if n == 1 {
        return Ok(vec![vec![dinv]]);
    }
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let c = determinant(&minor(m, j, i), params);
                    let c = if (i + j) % 2 == 0 { c } else { -c };
                    &c * &dinv
                })
                .collect()
        })
        .collect())
}

pub fn mat_mul(a: &FracMatrix, b: &FracMatrix, params: &Arc<ModelParams>) -> FracMatrix {
    let (r, k, c) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    (0..r)
        .map(|i| {
            (0..c)
                .map(|j| (0..k).fold(AFrac::zero(params), |acc, t| &acc + &(&a[i][t] * &b[t][j])))
                .collect()
        })
        .collect()
}

pub fn transpose(a: &FracMatrix) -> FracMatrix {
    let c = a.first().map_or(0, Vec::len);
    (0..c).map(|j| a.iter().map(|row| row[j].clone()).collect()).collect()
}

pub fn is_identity(a: &FracMatrix) -> bool {
    a.iter().enumerate().all(|(i, row)| {
        row.iter().enumerate().all(|(j, v)| {
            if i == j {
                v.as_constant().is_some_and(|c| c.is_one())
            } else {
                v.is_zero()
            }
        })
    })
}

pub fn build_metric(params: &Arc<ModelParams>) -> HermitianMetric {
    HermitianMetric::from_lower(params, metric_lower(params)).expect("constant-curvature metric is invertible")
}

impl HermitianMetric {
    /// Builds inverse and Christoffel symbols from `g_{αβ̄}`.
    pub fn from_lower(params: &Arc<ModelParams>, g_lower: FracMatrix) -> Result<Self, GeometryError> {
        let n = params.n();
        if g_lower.len() != n || g_lower.iter().any(|r| r.len() != n) {
            return Err(GeometryError::Shape);
        }
        for a in 0..n {
            for b in 0..n {
                if g_lower[a][b].conj() != g_lower[b][a] {
                    return Err(GeometryError::NotHermitian(a, b));
                }
            }
        }
        // g^{αβ̄} is the (β, α) entry of the matrix inverse
        let g_upper = transpose(&invert(&g_lower, params)?);
        let dg: Vec<FracMatrix> = (0..n)
            .map(|be| g_lower.iter().map(|row| row.iter().map(|v| v.ddz(be, false)).collect()).collect())
            .collect();
        let christoffel = (0..n)
            .map(|al| {
                (0..n)
                    .map(|be| {
                        (0..n)
                            .map(|ga| {
                                (0..n).fold(AFrac::zero(params), |acc, s| &acc + &(&g_upper[al][s] * &dg[be][ga][s]))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(HermitianMetric { params: params.clone(), g_lower, g_upper, christoffel })
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    /// `Σ_σ g_{ασ̄} g^{βσ̄} = δ^β_α` exactly.
    pub fn inverse_holds(&self) -> bool {
        let n = self.n();
        (0..n).all(|a| {
            (0..n).all(|b| {
                let s = (0..n).fold(AFrac::zero(&self.params), |acc, t| &acc + &(&self.g_lower[a][t] * &self.g_upper[b][t]));
                s == delta(&self.params, a, b)
            })
        })
    }

    /// `R_{αβ̄γδ̄} = −Σ_σ g_{σβ̄} ∂_δ̄ Γ^σ_{γα}`.
    pub fn curvature(&self, al: usize, be: usize, ga: usize, de: usize) -> AFrac {
        let n = self.n();
        let s = (0..n).fold(AFrac::zero(&self.params), |acc, s| {
            &acc + &(&self.g_lower[s][be] * &self.christoffel[s][ga][al].ddz(de, true))
        });
        -s
    }

    /// `c·(k/4)(g_{αβ̄} g_{γδ̄} + g_{αδ̄} g_{γβ̄})`.
    fn curvature_model(&self, c: i64, al: usize, be: usize, ga: usize, de: usize) -> AFrac {
        let g = &self.g_lower;
        let s = &(&g[al][be] * &g[ga][de]) + &(&g[al][de] * &g[ga][be]);
        s.scale(&(&self.params.quarter_k() * &GaussRat::from_int(c)))
    }
}

/// Fixes the convention constant on the disk `n = 1, k = −4` by an exact ratio at `z = 1/3`.
pub fn calibrate_curvature_constant() -> i64 {
    let p = ModelParams::from_ints(1, -4, 1, 1, 1).expect("valid").shared();
    let m = build_metric(&p);
    let pt = [GaussRat::ratio(1, 3)];
    let r = m.curvature(0, 0, 0, 0).eval_exact(&pt).expect("interior point");
    let model = m.curvature_model(1, 0, 0, 0, 0).eval_exact(&pt).expect("interior point");
    let ratio = &r / &model;
    assert!(ratio.is_real() && ratio.re.is_integer(), "curvature ratio {ratio} is not an integer");
    let c = ratio.re.to_integer();
    use num_traits::ToPrimitive;
    c.to_i64().expect("small constant")
}

/// Random Gaussian-rational point well inside the chart domain.
pub fn random_rational_point(rng: &mut impl Rng, params: &ModelParams) -> Vec<GaussRat> {
    let radius = params.ball_radius_sq().map_or(1.0, |r2| r2.sqrt().min(1.0));
    let n = params.n();
    (0..n)
        .map(|_| {
            let q: i64 = rng.random_range(3..=12);
            let bound = ((q as f64) * radius / (2.0 * n as f64)).floor() as i64;
            let re = rng.random_range(-bound..=bound);
            let im = rng.random_range(-bound..=bound);
            GaussRat::new(
                num_rational::BigRational::new(re.into(), q.into()),
                num_rational::BigRational::new(im.into(), q.into()),
            )
        })
        .collect()
}

/// Checks the constant-holomorphic-curvature identity exactly and at `samples` rational points.
pub fn verify_constant_curvature(m: &HermitianMetric, samples: usize, seed: u64) -> CurvatureReport {
    let c = calibrate_curvature_constant();
    let n = m.n();
    let mut failures = Vec::new();
    let mut idx = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for g in 0..n {
                for d in 0..n {
                    idx.push((a, b, g, d));
                }
            }
        }
    }
    let diffs: Vec<AFrac> = crate::par::map(&idx, |&(a, b, g, d)| &m.curvature(a, b, g, d) - &m.curvature_model(c, a, b, g, d));
    for (&(a, b, g, d), r) in idx.iter().zip(&diffs) {
        if !r.is_zero() {
            failures.push(format!("R[{a}{b}{g}{d}] - model = {r}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    for _ in 0..samples {
        let pt = random_rational_point(&mut rng, &m.params);
        for (&(a, b, g, d), r) in idx.iter().zip(&diffs) {
            match r.eval_exact(&pt) {
                Ok(v) if v.is_zero() => {}
                Ok(v) => failures.push(format!("R[{a}{b}{g}{d}] residual {v} at {pt:?}")),
                Err(_) => continue,
            }
        }
        checked += 1;
    }
    CurvatureReport { convention_c: c, verified: failures.is_empty(), samples_checked: checked, failures }
}

/// `∂_αΦ = z̄^α / A` (the `k = 0` limit is `z̄^α`, which is the same formula with `A = 1`).
pub fn potential_gradient(params: &Arc<ModelParams>) -> Vec<AFrac> {
    let ainv = AFrac::a_pow(params, -1);
    (0..params.n()).map(|a| &AFrac::zb(params, a) * &ainv).collect()
}

/// `Φ = (4/k) ln A`, or `Σ |z^ν|²` when `k = 0`.
pub fn potential(params: &ModelParams, z: &[Complex64]) -> f64 {
    let s: f64 = z.iter().map(|w| w.norm_sqr()).sum();
    if params.is_flat() {
        s
    } else {
        let k = params.k_f64();
        4.0 / k * (1.0 + k / 4.0 * s).ln()
    }
}

pub fn build_connection_form(params: &Arc<ModelParams>) -> ConnectionForm {
    let mi = GaussRat::imag(-1);
    ConnectionForm {
        params: params.clone(),
        alpha_components: potential_gradient(params).iter().map(|d| d.scale(&mi)).collect(),
    }
}

impl ConnectionForm {
    /// `α(X)` for `X = Σ X^μ ∂_μ + X^μ̄ ∂_μ̄`; only the holomorphic part pairs.
    pub fn pair(&self, holo: &[AFrac]) -> AFrac {
        holo.iter()
            .zip(&self.alpha_components)
            .fold(AFrac::zero(&self.params), |acc, (x, a)| &acc + &(x * a))
    }

    pub fn eval(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.alpha_components.iter().map(|a| a.eval(z).expect("point inside chart")).collect()
    }
}

pub fn build_symplectic_form(m: &HermitianMetric) -> SymplecticForm {
    let i = GaussRat::i();
    let scale = |mat: &FracMatrix| -> FracMatrix { mat.iter().map(|r| r.iter().map(|v| v.scale(&i)).collect()).collect() };
    SymplecticForm {
        params: m.params.clone(),
        omega_lower: scale(&m.g_lower),
        omega_upper: scale(&m.g_upper),
    }
}

impl SymplecticForm {
    /// The full `2n × 2n` products of the form matrix and the Poisson tensor is the identity.
    pub fn inverse_holds(&self) -> bool {
        let n = self.params.n();
        let p = &self.params;
        let zero = || AFrac::zero(p);
        let mut om = vec![vec![zero(); 2 * n]; 2 * n];
        let mut pi = vec![vec![zero(); 2 * n]; 2 * n];
        for a in 0..n {
            for b in 0..n {
                om[a][n + b] = self.omega_lower[a][b].clone();
                om[n + b][a] = -&self.omega_lower[a][b];
                pi[a][n + b] = self.omega_upper[a][b].clone();
                pi[n + b][a] = -&self.omega_upper[a][b];
            }
        }
        is_identity(&mat_mul(&pi, &om, p))
    }

    /// `dω = 0`: `∂_γ ω_{αβ̄}` symmetric in `αγ`, `∂_γ̄ ω_{αβ̄}` symmetric in `βγ`.
    pub fn is_closed(&self) -> bool {
        let n = self.params.n();
        let w = &self.omega_lower;
        (0..n).all(|a| {
            (0..n).all(|b| {
                (0..n).all(|g| w[a][b].ddz(g, false) == w[g][b].ddz(a, false) && w[a][b].ddz(g, true) == w[a][g].ddz(b, true))
            })
        })
    }
}

/// `dα = ω` as an exact identity of coefficient matrices.
///
/// The `(2,0)` part `∂_γ α_β − ∂_β α_γ` must vanish and the coefficient of
/// `dz^β ∧ dz̄^γ`, namely `−∂_γ̄ α_β`, must equal `ω_{βγ̄}`.
pub fn check_theorem1(c: &ConnectionForm, s: &SymplecticForm) -> bool {
    let n = s.params.n();
    let a = &c.alpha_components;
    if a.len() != n {
        return false;
    }
    let holo_ok = (0..n).all(|b| (0..n).all(|g| a[b].ddz(g, false) == a[g].ddz(b, false)));
    let mixed_ok = (0..n).all(|b| (0..n).all(|g| -a[b].ddz(g, true) == s.omega_lower[b][g]));
    holo_ok && mixed_ok
}

/// Metric, symplectic form and connection of one chart, built together.
#[derive(Clone, Debug)]
pub struct KahlerStructure {
    pub params: Arc<ModelParams>,
    pub metric: HermitianMetric,
    pub omega: SymplecticForm,
    pub connection: ConnectionForm,
}

impl KahlerStructure {
    pub fn new(params: &Arc<ModelParams>) -> Self {
        let metric = build_metric(params);
        let omega = build_symplectic_form(&metric);
        let connection = build_connection_form(params);
        KahlerStructure { params: params.clone(), metric, omega, connection }
    }
}
