use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};

use super::{GaussRat, Poly, SymError, Var};
use crate::params::{rat_to_f64, ModelParams};

/// `num / A^apow` on the chart of `params`.
///
/// Always canonical: when `apow > 0` the numerator is not divisible by `A`.
/// For `k = 0` the denominator is trivial and `apow` is 0.
#[derive(Clone)]
pub struct AFrac {
    num: Poly,
    apow: u32,
    params: Arc<ModelParams>,
}

impl AFrac {
    pub fn new(params: &Arc<ModelParams>, num: Poly, apow: u32) -> AFrac {
        assert_eq!(num.n(), params.n(), "numerator has wrong number of variables");
        let mut f = AFrac { num, apow, params: params.clone() };
        f.canonicalize();
        f
    }

    pub fn from_poly(params: &Arc<ModelParams>, num: Poly) -> AFrac {
        AFrac::new(params, num, 0)
    }

    pub fn zero(params: &Arc<ModelParams>) -> AFrac {
        AFrac { num: Poly::zero(params.n()), apow: 0, params: params.clone() }
    }

    pub fn one(params: &Arc<ModelParams>) -> AFrac {
        AFrac::constant(params, GaussRat::one())
    }

    pub fn constant(params: &Arc<ModelParams>, c: GaussRat) -> AFrac {
        AFrac { num: Poly::constant(params.n(), c), apow: 0, params: params.clone() }
    }

    /// `z^α` (0-based index).
    pub fn z(params: &Arc<ModelParams>, a: usize) -> AFrac {
        AFrac::from_poly(params, Poly::z(params.n(), a))
    }

    /// `z̄^α` (0-based index).
    pub fn zb(params: &Arc<ModelParams>, a: usize) -> AFrac {
        AFrac::from_poly(params, Poly::zb(params.n(), a))
    }

    /// The polynomial `A` itself.
    pub fn a(params: &Arc<ModelParams>) -> AFrac {
        AFrac::from_poly(params, params.a_poly().clone())
    }

    /// `A^e` for a signed exponent.
    pub fn a_pow(params: &Arc<ModelParams>, e: i32) -> AFrac {
        if e >= 0 {
            AFrac::from_poly(params, params.a_poly().pow(e as u32))
        } else {
            AFrac::new(params, Poly::one(params.n()), (-e) as u32)
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn apow(&self) -> u32 {
        self.apow
    }

    pub fn params(&self) -> &Arc<ModelParams> {
        &self.params
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_constant(&self) -> Option<GaussRat> {
        if self.apow == 0 {
            self.num.as_constant()
        } else {
            None
        }
    }

    /// Divides out `A` while it divides the numerator.
    pub fn canonicalize(&mut self) {
        if self.params.is_flat() || self.num.is_zero() {
            self.apow = 0;
            return;
        }
        let a = self.params.a_poly();
        while self.apow > 0 {
            match self.num.div_exact(a) {
                Some(q) => {
                    self.num = q;
                    self.apow -= 1;
                }
                None => break,
            }
        }
    }

    pub fn canonical(mut self) -> AFrac {
        self.canonicalize();
        self
    }

    fn check(&self, o: &AFrac) -> Result<(), SymError> {
        if Arc::ptr_eq(&self.params, &o.params) || self.params.same_chart(&o.params) {
            Ok(())
        } else {
            Err(SymError::ParamsMismatch)
        }
    }

    /// Numerator raised to the denominator `A^m`, `m >= apow`.
    fn num_over(&self, m: u32) -> Poly {
        let d = m - self.apow;
        if d == 0 || self.params.is_flat() {
            self.num.clone()
        } else {
            &self.num * &self.params.a_poly().pow(d)
        }
    }

    pub fn try_add(&self, o: &AFrac) -> Result<AFrac, SymError> {
        self.check(o)?;
        let m = self.apow.max(o.apow);
        let num = &self.num_over(m) + &o.num_over(m);
        Ok(AFrac::new(&self.params, num, m))
    }

    pub fn try_sub(&self, o: &AFrac) -> Result<AFrac, SymError> {
        self.check(o)?;
        let m = self.apow.max(o.apow);
        let num = &self.num_over(m) - &o.num_over(m);
        Ok(AFrac::new(&self.params, num, m))
    }

    pub fn try_mul(&self, o: &AFrac) -> Result<AFrac, SymError> {
        self.check(o)?;
        if self.is_zero() || o.is_zero() {
            return Ok(AFrac::zero(&self.params));
        }
        Ok(AFrac::new(&self.params, &self.num * &o.num, self.apow + o.apow))
    }

    pub fn scale(&self, c: &GaussRat) -> AFrac {
        if c.is_zero() {
            return AFrac::zero(&self.params);
        }
        AFrac { num: self.num.scale(c), apow: self.apow, params: self.params.clone() }
    }

    pub fn pow(&self, e: u32) -> AFrac {
        let mut acc = AFrac::one(&self.params);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Partial derivative along a coordinate function.
    ///
    /// `∂(P/A^m) = (∂P·A − m·P·∂A) / A^{m+1}`.
    pub fn deriv(&self, v: Var) -> AFrac {
        let dp = self.num.deriv(v);
        if self.apow == 0 {
            return AFrac { num: dp, apow: 0, params: self.params.clone() };
        }
        let a = self.params.a_poly();
        let da = a.deriv(v);
        let m = GaussRat::from_int(self.apow as i64);
        let num = &(&dp * a) - &(&self.num * &da).scale(&m);
        AFrac::new(&self.params, num, self.apow + 1)
    }

    /// `∂/∂z^α` or, with `conjugate`, `∂/∂z̄^α` (0-based `α`).
    pub fn ddz(&self, alpha: usize, conjugate: bool) -> AFrac {
        self.deriv(if conjugate { Var::Zb(alpha) } else { Var::Z(alpha) })
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> AFrac {
        AFrac { num: self.num.conj(), apow: self.apow, params: self.params.clone() }
    }

    /// Real-valued as a function.
    pub fn is_real(&self) -> bool {
        self.num.conj() == self.num
    }

    /// Whether the fraction depends on `z` only.
    pub fn is_holomorphic(&self) -> bool {
        self.num.is_holomorphic() && (self.apow == 0 || self.params.is_flat())
    }

    fn a_value(&self, z: &[Complex64]) -> f64 {
        let q = rat_to_f64(self.params.k()) / 4.0;
        1.0 + q * z.iter().map(|w| w.norm_sqr()).sum::<f64>()
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64, SymError> {
        assert_eq!(z.len(), self.params.n(), "point has wrong dimension");
        let a = self.a_value(z);
        if a <= 0.0 || !a.is_finite() {
            return Err(SymError::Domain(format!("A = {a} at {z:?}")));
        }
        Ok(self.num.eval(z) / a.powi(self.apow as i32))
    }

    pub fn eval_exact(&self, z: &[GaussRat]) -> Result<GaussRat, SymError> {
        let a = self.params.a_poly().eval_exact(z);
        if !a.re.is_positive() {
            return Err(SymError::Domain(format!("A = {a} at exact point")));
        }
        let p = self.num.eval_exact(z);
        Ok(&p / &a.pow(self.apow))
    }

    /// Parses `(<poly>)/A^<m>`, or a bare polynomial.
    pub fn parse(s: &str, params: &Arc<ModelParams>) -> Result<AFrac, SymError> {
        let t = s.trim();
        if let Some(body) = t.strip_prefix('(') {
            if let Some((inner, m)) = body.rsplit_once(")/A^") {
                let m: u32 = m.trim().parse().map_err(|_| SymError::Parse(format!("bad A exponent in `{s}`")))?;
                let num = Poly::parse(inner, params.n())?;
                return Ok(AFrac::new(params, num, m));
            }
        }
        Ok(AFrac::from_poly(params, Poly::parse(t, params.n())?))
    }
}

impl PartialEq for AFrac {
    fn eq(&self, o: &AFrac) -> bool {
        self.params.same_chart(&o.params) && self.apow == o.apow && self.num == o.num
    }
}

impl Eq for AFrac {}

impl Hash for AFrac {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.num.hash(state);
        self.apow.hash(state);
    }
}

impl fmt::Display for AFrac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})/A^{}", self.num, self.apow)
    }
}

impl fmt::Debug for AFrac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<'a> Add<&'a AFrac> for &'a AFrac {
    type Output = AFrac;
    fn add(self, o: &AFrac) -> AFrac {
        self.try_add(o).expect("AFrac chart mismatch")
    }
}

impl<'a> Sub<&'a AFrac> for &'a AFrac {
    type Output = AFrac;
    fn sub(self, o: &AFrac) -> AFrac {
        self.try_sub(o).expect("AFrac chart mismatch")
    }
}

impl<'a> Mul<&'a AFrac> for &'a AFrac {
    type Output = AFrac;
    fn mul(self, o: &AFrac) -> AFrac {
        self.try_mul(o).expect("AFrac chart mismatch")
    }
}

impl Add for AFrac {
    type Output = AFrac;
    fn add(self, o: AFrac) -> AFrac {
        &self + &o
    }
}

impl Sub for AFrac {
    type Output = AFrac;
    fn sub(self, o: AFrac) -> AFrac {
        &self - &o
    }
}

impl Mul for AFrac {
    type Output = AFrac;
    fn mul(self, o: AFrac) -> AFrac {
        &self * &o
    }
}

impl Neg for &AFrac {
    type Output = AFrac;
    fn neg(self) -> AFrac {
        AFrac { num: -&self.num, apow: self.apow, params: self.params.clone() }
    }
}

impl Neg for AFrac {
    type Output = AFrac;
    fn neg(self) -> AFrac {
        -&self
    }
}
