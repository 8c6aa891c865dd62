//! Holomorphic representation space: monomial basis, weighted measure,
//! radial quadrature, norms and adjointness of the quantized pair.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::geometry::{potential, ConnectionForm, KahlerStructure};
use crate::observables::Observable;
use crate::params::{rat_to_f64, ModelParams};
use crate::quantize::{quantize_observable, to_matrix, OperatorMatrix, QuantizeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("divergent norm integral: {0}")]
    Divergent(String),
    #[error("quadrature did not converge: last {last}, previous {previous}")]
    NonConvergence { last: f64, previous: f64 },
    #[error("unknown measure mode `{0}` (expected literal or corrected)")]
    BadMode(String),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
}

/// Monomials `z^m` with `|m| ≤ L`, by degree and then lexicographically (`z¹` first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockBasis {
    n: usize,
    cutoff: usize,
    exps: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    starts: Vec<usize>,
}

fn compositions(n: usize, l: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![l]];
    }
    (0..=l)
        .rev()
        .flat_map(|first| compositions(n - 1, l - first).into_iter().map(move |rest| [vec![first], rest].concat()))
        .collect()
}

impl FockBasis {
    pub fn new(n: usize, cutoff: usize) -> Self {
        let mut exps = Vec::new();
        let mut starts = Vec::new();
        for l in 0..=cutoff {
            starts.push(exps.len());
            exps.extend(compositions(n, l as u32));
        }
        starts.push(exps.len());
        let index = exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        FockBasis { n, cutoff, exps, index, starts }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self, i: usize) -> &[u32] {
        &self.exps[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.exps[i].iter().sum::<u32>() as usize
    }

    pub fn index_of(&self, m: &[u32]) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn degree_range(&self, l: usize) -> std::ops::Range<usize> {
        self.starts[l]..self.starts[l + 1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMode {
    /// `exp(−Φ/ħ) ωⁿ`.
    Literal,
    /// `exp(−Φ/ħ) (det g)^{1/2}`.
    AdjointCorrected,
}

impl FromStr for MeasureMode {
    type Err = FockError;
    fn from_str(s: &str) -> Result<Self, FockError> {
        match s.trim() {
            "literal" => Ok(MeasureMode::Literal),
            "corrected" | "adjoint_corrected" => Ok(MeasureMode::AdjointCorrected),
            other => Err(FockError::BadMode(other.to_string())),
        }
    }
}

impl fmt::Display for MeasureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureMode::Literal => "literal",
            MeasureMode::AdjointCorrected => "corrected",
        })
    }
}

/// Radial weight `F(t)`, `t = |z|²`, of the inner product.
///
/// For `k ≠ 0`, `F = A^p`; for `k = 0`, `F = e^{−t/ħ}`. `offset` adds to the
/// exponent of `A` and exists for negative controls.
#[derive(Clone, Debug)]
pub struct FockMeasure {
    pub params: Arc<ModelParams>,
    pub mode: MeasureMode,
    pub offset: BigRational,
}

impl FockMeasure {
    pub fn new(params: &Arc<ModelParams>, mode: MeasureMode) -> Self {
        FockMeasure { params: params.clone(), mode, offset: BigRational::zero() }
    }

    pub fn with_offset(mut self, offset: i64) -> Self {
        self.offset = BigRational::from_integer(offset.into());
        self
    }

    /// Exponent `p` of `A`: `−4/(kħ) − (n+1)` or `−4/(kħ) − (n+1)/2`, plus the offset.
    pub fn exponent(&self) -> BigRational {
        let p = &self.params;
        let n1 = BigRational::from_integer((p.n() as i64 + 1).into());
        let det_part = match self.mode {
            MeasureMode::Literal => n1,
            MeasureMode::AdjointCorrected => n1 / BigRational::from_integer(2.into()),
        };
        if p.is_flat() {
            return self.offset.clone();
        }
        let four = BigRational::from_integer(4.into());
        -(four / (p.k() * p.hbar())) - det_part + &self.offset
    }

    /// Upper limit of `t`: `4/|k|` on the ball, infinite otherwise.
    pub fn t_max(&self) -> Option<f64> {
        self.params.ball_radius_sq()
    }

    pub fn radial_weight(&self, t: f64) -> f64 {
        let p = &self.params;
        if p.is_flat() {
            (-t / p.hbar_f64()).exp()
        } else {
            let a = 1.0 + p.k_f64() / 4.0 * t;
            if a <= 0.0 {
                0.0
            } else {
                a.powf(rat_to_f64(&self.exponent()))
            }
        }
    }

    /// Full density `exp(−Φ/ħ) · A^{offset}` of the Hermitian structure at a point.
    pub fn hermitian_density(&self, z: &[Complex64]) -> f64 {
        let s: f64 = z.iter().map(|w| w.norm_sqr()).sum();
        let a = 1.0 + self.params.k_f64() / 4.0 * s;
        (-potential(&self.params, z) / self.params.hbar_f64()).exp() * a.powf(rat_to_f64(&self.offset))
    }

    /// Whether `∫ t^{s−1} F(t) dt` converges (`s > 0`).
    pub fn integrable(&self, s: f64) -> Result<(), FockError> {
        let p = &self.params;
        if p.is_flat() {
            return Ok(());
        }
        let e = rat_to_f64(&self.exponent());
        if p.k().is_negative() {
            if e <= -1.0 {
                return Err(FockError::Divergent(format!("weight exponent {e} <= -1 at the boundary of the ball")));
            }
        } else if s + e >= 0.0 {
            return Err(FockError::Divergent(format!("t^{} A^{e} is not integrable at infinity", s - 1.0)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Finite(f64, f64),
    SemiInfinite(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[allow(clippy::excessive_precision)]
const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const GK_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const G_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &(impl Fn(f64) -> f64 + ?Sized), a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WEIGHTS[7];
    let mut g = fc * G_WEIGHTS[3];
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            g += G_WEIGHTS[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Adaptive<'a, F: Fn(f64) -> f64 + ?Sized> {
    f: &'a F,
    abs: f64,
    evals: usize,
    max_depth: u32,
    failed: bool,
}

impl<F: Fn(f64) -> f64 + ?Sized> Adaptive<'_, F> {
    fn run(&mut self, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let l = gk15(self.f, a, m);
        let r = gk15(self.f, m, b);
        self.evals += 30;
        let sum = l.0 + r.0;
        let err = l.1 + r.1;
        if err <= tol.max(self.abs * 1e-3) || (sum - whole.0).abs() <= tol * 1e-2 && depth > 3 {
            return (sum, err);
        }
        if depth >= self.max_depth || m <= a || m >= b {
            self.failed = true;
            return (sum, err);
        }
        let lr = self.run(a, m, tol * 0.5, l, depth + 1);
        let rr = self.run(m, b, tol * 0.5, r, depth + 1);
        (lr.0 + rr.0, lr.1 + rr.1)
    }
}

/// Adaptive Gauss–Kronrod (7/15) over `shells` equal sub-intervals evaluated in parallel.
///
/// Infinite domains are mapped with `t = a + s/(1−s)`. Each shell halves
/// until its error estimate meets its share of `max(abs_tol, rel_tol·|I|)`.
pub fn quadrature<F>(f: &F, domain: Domain, abs_tol: f64, rel_tol: f64, shells: usize) -> Result<QuadResult, FockError>
where
    F: Fn(f64) -> f64 + Sync,
{
    let (lo, hi, mapped): (f64, f64, Box<dyn Fn(f64) -> f64 + Sync>) = match domain {
        Domain::Finite(a, b) => (a, b, Box::new(f)),
        Domain::SemiInfinite(a) => (
            0.0,
            1.0,
            Box::new(move |s: f64| {
                if s >= 1.0 {
                    return 0.0;
                }
                let d = 1.0 - s;
                let v = f(a + s / d) / (d * d);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            }),
        ),
    };
    let shells = shells.max(1);
    let width = (hi - lo) / shells as f64;
    let bounds: Vec<(f64, f64)> = (0..shells)
        .map(|i| (lo + width * i as f64, if i + 1 == shells { hi } else { lo + width * (i + 1) as f64 }))
        .collect();
    let coarse: Vec<(f64, f64)> = crate::par::map(&bounds, |&(a, b)| gk15(&*mapped, a, b));
    let estimate: f64 = coarse.iter().map(|c| c.0).sum();
    let target = abs_tol.max(rel_tol * estimate.abs());
    let per_shell = target / shells as f64;
    let refined: Vec<(f64, f64, usize, bool)> = crate::par::map_range(shells, |i| {
        let (a, b) = bounds[i];
        let mut ad = Adaptive { f: &*mapped, abs: abs_tol / shells as f64, evals: 15, max_depth: 40, failed: false };
        let (v, e) = ad.run(a, b, per_shell, coarse[i], 0);
        (v, e, ad.evals, ad.failed)
    });
    let value: f64 = refined.iter().map(|r| r.0).sum();
    let error_estimate: f64 = refined.iter().map(|r| r.1).sum();
    let evaluations = refined.iter().map(|r| r.2).sum::<usize>() + shells * 15;
    if refined.iter().any(|r| r.3) && error_estimate > target * 10.0 {
        return Err(FockError::NonConvergence { last: value, previous: estimate });
    }
    Ok(QuadResult { value, error_estimate, evaluations })
}

/// Power `m` for `1 − x = y^m` that makes `(1 − x)^β` bounded at `y = 0`.
fn endpoint_power(beta: f64) -> f64 {
    (1.0 / (beta + 1.0)).ceil().clamp(1.0, 64.0)
}

/// `∫ t^{s−1} F(t) dt` over the chart's radial range.
///
/// For `k ≠ 0` the radial variable is mapped onto `x ∈ [0, 1)` with `(1 − x) ∝ A^{∓1}`
/// and then `1 − x = y^m`, so algebraic endpoint behaviour becomes smooth.
/// The integrand is formed in logarithms.
pub fn radial_moment(measure: &FockMeasure, s: f64, rel_tol: f64) -> Result<QuadResult, FockError> {
    measure.integrable(s)?;
    let p = &measure.params;
    let finite = |v: f64| if v.is_finite() { v } else { 0.0 };
    if p.is_flat() {
        let h = p.hbar_f64();
        let f = |t: f64| if t <= 0.0 { 0.0 } else { finite(((s - 1.0) * t.ln() - t / h).exp()) };
        return quadrature(&f, Domain::SemiInfinite(0.0), 1e-300, rel_tol, 16);
    }
    let e = rat_to_f64(&measure.exponent());
    let c = p.k_f64().abs() / 4.0;
    if p.k().is_negative() {
        // t = (1 − y^m)/c, A = y^m
        let m = endpoint_power(e);
        let f = move |y: f64| {
            if y <= 0.0 {
                return 0.0;
            }
            let ym = y.powf(m);
            let t = (1.0 - ym) / c;
            if t <= 0.0 {
                return 0.0;
            }
            finite(((s - 1.0) * t.ln() + e * m * y.ln() + (m - 1.0) * y.ln() + m.ln() - c.ln()).exp())
        };
        quadrature(&f, Domain::Finite(0.0, 1.0), 1e-300, rel_tol, 16)
    } else {
        // x = ct/(1+ct), 1 − x = y^m = 1/A
        let m = endpoint_power(-e - s - 1.0);
        let f = move |y: f64| {
            if y <= 0.0 {
                return 0.0;
            }
            let ym = y.powf(m);
            let x = 1.0 - ym;
            if x <= 0.0 {
                return 0.0;
            }
            let ln_y = y.ln();
            let ln_t = x.ln() - c.ln() - m * ln_y;
            let ln_jac = -c.ln() - 2.0 * m * ln_y + m.ln() + (m - 1.0) * ln_y;
            finite(((s - 1.0) * ln_t - e * m * ln_y + ln_jac).exp())
        };
        quadrature(&f, Domain::Finite(0.0, 1.0), 1e-300, rel_tol, 16)
    }
}

fn factorial_big(m: u32) -> BigInt {
    (1..=m).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Rational `r` with `‖z^m‖² = r · πⁿ`, when the weight exponent allows a finite product form.
pub fn exact_norm_coefficient(measure: &FockMeasure, m: &[u32]) -> Option<BigRational> {
    let p = &measure.params;
    let l: u32 = m.iter().sum();
    let n = p.n() as u32;
    let mfact = m.iter().fold(BigInt::one(), |acc, &e| acc * factorial_big(e));
    let mfact = BigRational::from_integer(mfact);
    if p.is_flat() {
        if !measure.offset.is_zero() {
            return None;
        }
        return Some(mfact * num_traits::pow(p.hbar().clone(), (l + n) as usize));
    }
    let e = measure.exponent();
    if !e.is_integer() || p.k().is_positive() {
        return None;
    }
    let e = e.to_integer().to_i64()?;
    if e < 0 {
        return None;
    }
    // κ^{−(l+n)} e! / (l+n+e)!
    let kappa = p.k().abs() / BigRational::from_integer(4.into());
    let kpow = num_traits::pow(kappa.recip(), (l + n) as usize);
    let num = factorial_big(e as u32);
    let den = factorial_big(l + n + e as u32);
    Some(mfact * kpow * BigRational::new(num, den))
}

/// Closed-form `‖z^m‖²` from Gamma functions.
pub fn closed_form_norm(measure: &FockMeasure, m: &[u32]) -> Option<f64> {
    let p = &measure.params;
    let l: f64 = m.iter().map(|&e| e as f64).sum();
    let n = p.n() as f64;
    let ln_mfact: f64 = m.iter().map(|&e| ln_gamma(e as f64 + 1.0)).sum();
    let ln_pi_n = n * std::f64::consts::PI.ln();
    if p.is_flat() {
        if !measure.offset.is_zero() {
            return None;
        }
        return Some((ln_pi_n + ln_mfact + (l + n) * p.hbar_f64().ln()).exp());
    }
    let e = rat_to_f64(&measure.exponent());
    let c = p.k_f64().abs() / 4.0;
    if p.k().is_negative() {
        if e <= -1.0 {
            return None;
        }
        Some((ln_pi_n + ln_mfact - (l + n) * c.ln() + ln_gamma(e + 1.0) - ln_gamma(l + n + e + 1.0)).exp())
    } else {
        if -e - l - n <= 0.0 {
            return None;
        }
        Some((ln_pi_n + ln_mfact - (l + n) * c.ln() + ln_gamma(-e - l - n) - ln_gamma(-e)).exp())
    }
}

/// `(1/2π) ∫ e^{ijθ} dθ` by the trapezoid rule on 64 nodes.
fn angular_factor(j: i64) -> Complex64 {
    let nodes = 64;
    let s: Complex64 = (0..nodes)
        .map(|q| Complex64::from_polar(1.0, j as f64 * 2.0 * std::f64::consts::PI * q as f64 / nodes as f64))
        .sum();
    s / nodes as f64
}

#[derive(Clone, Debug, Serialize)]
pub struct GramReport {
    pub mode: MeasureMode,
    pub weight_exponent: String,
    pub exponents: Vec<Vec<u32>>,
    pub norms: Vec<f64>,
    pub exact: Vec<Option<String>>,
    pub oracle: Vec<Option<f64>>,
    pub max_rel_dev_vs_oracle: Option<f64>,
    pub off_diagonal_max: f64,
    pub adjointness_residual: Option<f64>,
}

fn ln_dirichlet(half: &[f64]) -> f64 {
    // Π Γ(h_i+1) / Γ(Σ(h_i+1))
    half.iter().map(|h| ln_gamma(h + 1.0)).sum::<f64>() - ln_gamma(half.iter().map(|h| h + 1.0).sum())
}

/// `⟨z^a, z^b⟩` for arbitrary exponents; the radial part reduces to one moment.
pub fn inner_product(measure: &FockMeasure, a: &[u32], b: &[u32], rel_tol: f64) -> Result<Complex64, FockError> {
    let n = a.len();
    let ang: Complex64 = a.iter().zip(b).map(|(&x, &y)| angular_factor(x as i64 - y as i64)).product();
    let half: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| (x + y) as f64 / 2.0).collect();
    let s: f64 = half.iter().sum::<f64>() + n as f64;
    let moment = radial_moment(measure, s, rel_tol)?;
    // ∫_{Cⁿ} = (2π)ⁿ · angular average · ∫ Π r_i^{a_i+b_i+1} F dr, and ∫ Π ... dr = 2^{-n} Dirichlet · moment
    let pi_n = std::f64::consts::PI.powi(n as i32);
    Ok(ang * pi_n * ln_dirichlet(&half).exp() * moment.value)
}

pub fn monomial_norms(basis: &FockBasis, measure: &FockMeasure, rel_tol: f64) -> Result<GramReport, FockError> {
    let n = basis.n();
    let norms: Vec<Result<f64, FockError>> = crate::par::map_range(basis.len(), |i| {
        let m = basis.exponents(i);
        let l: u32 = m.iter().sum();
        let s = l as f64 + n as f64;
        let moment = radial_moment(measure, s, rel_tol)?;
        let ln_mf: f64 = m.iter().map(|&e| ln_gamma(e as f64 + 1.0)).sum();
        Ok(std::f64::consts::PI.powi(n as i32) * (ln_mf - ln_gamma(s)).exp() * moment.value)
    });
    let norms: Vec<f64> = norms.into_iter().collect::<Result<_, _>>()?;
    let exact: Vec<Option<String>> = (0..basis.len())
        .map(|i| exact_norm_coefficient(measure, basis.exponents(i)).map(|r| format!("{r}*pi^{n}")))
        .collect();
    let oracle: Vec<Option<f64>> = (0..basis.len()).map(|i| closed_form_norm(measure, basis.exponents(i))).collect();
    let max_rel = oracle
        .iter()
        .zip(&norms)
        .filter_map(|(o, v)| o.map(|o| ((v - o) / o).abs()))
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));
    let mut off = 0.0f64;
    if basis.len() <= 64 {
        let pairs: Vec<(usize, usize)> = (0..basis.len()).flat_map(|i| ((i + 1)..basis.len()).map(move |j| (i, j))).collect();
        let vals = crate::par::map(&pairs, |&(i, j)| {
            inner_product(measure, basis.exponents(i), basis.exponents(j), rel_tol)
                .map(|v| v.norm() / (norms[i] * norms[j]).sqrt())
        });
        for v in vals {
            off = off.max(v?);
        }
    }
    Ok(GramReport {
        mode: measure.mode,
        weight_exponent: measure.exponent().to_string(),
        exponents: (0..basis.len()).map(|i| basis.exponents(i).to_vec()).collect(),
        norms,
        exact,
        oracle,
        max_rel_dev_vs_oracle: max_rel,
        off_diagonal_max: off,
        adjointness_residual: None,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AdjointReport {
    pub mode: MeasureMode,
    pub alpha: usize,
    /// `max |(QN̄)†_{ij} − (QN)_{ij}|` over columns whose images stay below the cutoff.
    pub max_abs_deviation: f64,
    pub max_rel_deviation: f64,
    /// `(QN)_{m+e,m} − (QN̄)†_{m+e,m}` on every raising entry.
    pub raising_gaps: Vec<f64>,
    pub expected_literal_gap: String,
}

fn dense(m: &OperatorMatrix) -> Vec<Vec<Complex64>> {
    m.entries.iter().map(|r| r.iter().map(|v| v.to_c64()).collect()).collect()
}

/// Compares the weighted adjoint of `Q N^ᾱ` with `Q N^α` on the truncated basis.
pub fn adjointness_check(
    basis: &FockBasis,
    measure: &FockMeasure,
    ks: &KahlerStructure,
    alpha: usize,
    rel_tol: f64,
) -> Result<AdjointReport, FockError> {
    let p = &ks.params;
    let qn = quantize_observable(&Observable::n_holo(p, alpha), ks)?;
    let qnb = quantize_observable(&Observable::n_anti(p, alpha), ks)?;
    let gram = monomial_norms(basis, measure, rel_tol)?;
    let nu = &gram.norms;
    let a = dense(&to_matrix(&qn, basis));
    let b = dense(&to_matrix(&qnb, basis));
    let size = basis.len();
    let mut max_abs = 0.0f64;
    let mut max_rel = 0.0f64;
    let mut gaps = Vec::new();
    for j in 0..size {
        if basis.degree(j) >= basis.cutoff() {
            continue;
        }
        for i in 0..size {
            // ⟨B† e_j, e_i⟩ = ⟨e_j, B e_i⟩  ⇒  (B†)_{ij} = conj(B_{ji}) ν_j / ν_i
            let adj = b[j][i].conj() * nu[j] / nu[i];
            let d = (adj - a[i][j]).norm();
            max_abs = max_abs.max(d);
            let scale = a[i][j].norm().max(adj.norm());
            if scale > 0.0 {
                max_rel = max_rel.max(d / scale);
            }
        }
        let mut up = basis.exponents(j).to_vec();
        up[alpha] += 1;
        if let Some(i) = basis.index_of(&up) {
            let adj = b[j][i].conj() * nu[j] / nu[i];
            gaps.push((a[i][j] - adj).re);
        }
    }
    // −k ħ (n+1)/8
    let gap = -(p.k() * p.hbar() * BigRational::new((p.n() as i64 + 1).into(), 8.into()));
    Ok(AdjointReport {
        mode: measure.mode,
        alpha,
        max_abs_deviation: max_abs,
        max_rel_deviation: max_rel,
        raising_gaps: gaps,
        expected_literal_gap: gap.to_string(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub samples: usize,
    pub max_residual: f64,
}

/// Checks `X h = 2ħ⁻¹ Im α(X) · h` for the coordinate fields `∂_{x^μ}`, `∂_{y^μ}`
/// by central differences at random interior points.
pub fn hermitian_invariance_check(c: &ConnectionForm, measure: &FockMeasure, samples: usize, seed: u64) -> InvarianceReport {
    let p = &c.params;
    let n = p.n();
    let hbar = p.hbar_f64();
    let r_max = p.ball_radius_sq().map_or(1.0, |r2| 0.6 * r2.sqrt()) / (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]];
    for _ in 1..samples.max(1) {
        points.push((0..n).map(|_| Complex64::from_polar(rng.random::<f64>() * r_max, rng.random::<f64>() * std::f64::consts::TAU)).collect());
    }
    let residuals = crate::par::map(&points, |z| {
        let alpha = c.eval(z);
        let h0 = measure.hermitian_density(z);
        let step = 1e-5;
        let mut worst = 0.0f64;
        for mu in 0..n {
            for (dir, unit) in [(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)), (Complex64::new(0.0, 1.0), Complex64::new(0.0, 1.0))] {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[mu] += dir * step;
                zm[mu] -= dir * step;
                let xh = (measure.hermitian_density(&zp) - measure.hermitian_density(&zm)) / (2.0 * step);
                // ∂_x = ∂_μ + ∂_μ̄ and ∂_y = i(∂_μ − ∂_μ̄), so α(X) = unit · α_μ
                let ax = unit * alpha[mu];
                let predicted = 2.0 / hbar * ax.im * h0;
                worst = worst.max((xh - predicted).abs() / h0);
            }
        }
        worst
    });
    InvarianceReport { samples: points.len(), max_residual: residuals.into_iter().fold(0.0, f64::max) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_size_and_order() {
        let b = FockBasis::new(2, 3);
        assert_eq!(b.len(), 10);
        assert_eq!(b.exponents(1), &[1, 0]);
        assert_eq!(b.exponents(2), &[0, 1]);
        assert_eq!(b.degree_range(2), 3..6);
    }

    #[test]
    fn measure_exponents() {
        let p = ModelParams::from_ints(1, -4, 1, 1, 3).unwrap().shared();
        assert_eq!(FockMeasure::new(&p, MeasureMode::AdjointCorrected).exponent(), BigRational::from_integer(2.into()));
        assert_eq!(FockMeasure::new(&p, MeasureMode::Literal).exponent(), BigRational::from_integer(1.into()));
        assert_eq!("literal".parse::<MeasureMode>().unwrap(), MeasureMode::Literal);
        assert!("x".parse::<MeasureMode>().is_err());
    }

    #[test]
    fn quadrature_basics() {
        let r = quadrature(&|t: f64| (-t).exp(), Domain::SemiInfinite(0.0), 1e-14, 1e-12, 8).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        let z = quadrature(&|_| 0.0, Domain::Finite(0.0, 1.0), 1e-14, 1e-12, 4).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn divergence_reported() {
        let p = ModelParams::from_ints(1, -4, 1, 3, 1).unwrap().shared();
        let m = FockMeasure::new(&p, MeasureMode::Literal);
        assert!(matches!(radial_moment(&m, 1.0, 1e-10), Err(FockError::Divergent(_))));
    }
}
