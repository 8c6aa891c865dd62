//! Model parameters `(n, k, ħ)` of the space K₂ₙ(k).

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symcore::{GaussRat, MultiIndex, Poly};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamsError {
    #[error("complex dimension n must be at least 1")]
    ZeroDimension,
    #[error("hbar must be positive, got {0}")]
    NonPositiveHbar(String),
    #[error("cannot parse rational `{0}`")]
    BadRational(String),
}

/// Complex dimension, holomorphic curvature and Planck scale.
///
/// `k` and `ħ` are exact rationals. The polynomial `A = 1 + (k/4) Σ z^ν z̄^ν`
/// is built once at construction and shared by every A-fraction on this chart.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct ModelParams {
    n: usize,
    k: BigRational,
    hbar: BigRational,
    a_poly: Poly,
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    n: usize,
    k: String,
    hbar: String,
}

impl TryFrom<ParamsRepr> for ModelParams {
    type Error = ParamsError;
    fn try_from(r: ParamsRepr) -> Result<Self, Self::Error> {
        ModelParams::new(r.n, parse_rational(&r.k)?, parse_rational(&r.hbar)?)
    }
}

impl From<ModelParams> for ParamsRepr {
    fn from(p: ModelParams) -> Self {
        ParamsRepr {
            n: p.n,
            k: p.k.to_string(),
            hbar: p.hbar.to_string(),
        }
    }
}

/// Parses `"p"`, `"p/q"` or a short decimal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Result<BigRational, ParamsError> {
    let t = s.trim();
    if let Ok(r) = t.parse::<BigRational>() {
        return Ok(r);
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches('-'), frac);
        if let Ok(num) = digits.parse::<num_bigint::BigInt>() {
            let den = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
            let r = BigRational::new(num, den);
            return Ok(if neg { -r } else { r });
        }
    }
    Err(ParamsError::BadRational(s.to_string()))
}

impl ModelParams {
    pub fn new(n: usize, k: BigRational, hbar: BigRational) -> Result<Self, ParamsError> {
        if n == 0 {
            return Err(ParamsError::ZeroDimension);
        }
        if !hbar.is_positive() {
            return Err(ParamsError::NonPositiveHbar(hbar.to_string()));
        }
        let quarter_k = GaussRat::from_rat(&k / BigRational::from_integer(4.into()));
        let mut a_poly = Poly::constant(n, GaussRat::one());
        if !k.is_zero() {
            for nu in 0..n {
                let mut m = MultiIndex::zero(n);
                m.holo[nu] = 1;
                m.anti[nu] = 1;
                a_poly = a_poly + Poly::monomial(m, quarter_k.clone());
            }
        }
        Ok(ModelParams { n, k, hbar, a_poly })
    }

    /// Convenience constructor from small integers: `k = k_num/k_den`, `ħ = h_num/h_den`.
    pub fn from_ints(n: usize, k_num: i64, k_den: i64, h_num: i64, h_den: i64) -> Result<Self, ParamsError> {
        ModelParams::new(
            n,
            BigRational::new(k_num.into(), k_den.into()),
            BigRational::new(h_num.into(), h_den.into()),
        )
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> &BigRational {
        &self.k
    }

    pub fn hbar(&self) -> &BigRational {
        &self.hbar
    }

    /// `k/4` as a Gaussian rational.
    pub fn quarter_k(&self) -> GaussRat {
        GaussRat::from_rat(&self.k / BigRational::from_integer(4.into()))
    }

    pub fn is_flat(&self) -> bool {
        self.k.is_zero()
    }

    /// The polynomial `A = 1 + (k/4) Σ z^ν z̄^ν`.
    pub fn a_poly(&self) -> &Poly {
        &self.a_poly
    }

    /// Same `(n, ħ)` with a different curvature.
    pub fn with_k(&self, k: BigRational) -> ModelParams {
        ModelParams::new(self.n, k, self.hbar.clone()).expect("n and hbar already validated")
    }

    /// Same `(n, k)` with a different ħ.
    pub fn with_hbar(&self, hbar: BigRational) -> Result<ModelParams, ParamsError> {
        ModelParams::new(self.n, self.k.clone(), hbar)
    }

    /// Whether two parameter sets describe the same chart (same `n` and `k`).
    pub fn same_chart(&self, other: &ModelParams) -> bool {
        self.n == other.n && self.k == other.k
    }

    pub fn hbar_f64(&self) -> f64 {
        rat_to_f64(&self.hbar)
    }

    pub fn k_f64(&self) -> f64 {
        rat_to_f64(&self.k)
    }

    /// Radius² of the coordinate domain for `k < 0` (`|z|² < 4/|k|`), `None` otherwise.
    pub fn ball_radius_sq(&self) -> Option<f64> {
        if self.k.is_negative() {
            Some(4.0 / self.k_f64().abs())
        } else {
            None
        }
    }
}

impl PartialEq for ModelParams {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.k == other.k && self.hbar == other.hbar
    }
}

impl Eq for ModelParams {}

impl fmt::Debug for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModelParams(n={}, k={}, hbar={})", self.n, self.k, self.hbar)
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} k={} hbar={}", self.n, self.k, self.hbar)
    }
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // huge numerators/denominators: fall back to a scaled ratio
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub fn rat_one() -> BigRational {
    BigRational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_params() {
        assert_eq!(ModelParams::from_ints(0, 1, 1, 1, 1).unwrap_err(), ParamsError::ZeroDimension);
        assert!(matches!(
            ModelParams::from_ints(1, 1, 1, 0, 1),
            Err(ParamsError::NonPositiveHbar(_))
        ));
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("-4").unwrap(), BigRational::from_integer((-4).into()));
        assert_eq!(parse_rational("1/3").unwrap(), BigRational::new(1.into(), 3.into()));
        assert_eq!(parse_rational("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_rational("-1.5").unwrap(), BigRational::new((-3).into(), 2.into()));
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn flat_chart_has_unit_a() {
        let p = ModelParams::from_ints(2, 0, 1, 1, 1).unwrap();
        assert_eq!(p.a_poly(), &Poly::constant(2, GaussRat::one()));
    }

    #[test]
    fn serde_roundtrip() {
        let p = ModelParams::from_ints(3, -4, 1, 1, 3).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"n":3,"k":"-4","hbar":"1/3"}"#);
        let q: ModelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
