use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::{GaussRat, SymError};

/// A coordinate function: `z^α` (holomorphic) or `z̄^α` (antiholomorphic), 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Z(usize),
    Zb(usize),
}

/// Exponents of `z¹..zⁿ` and `z̄¹..z̄ⁿ`.
///
/// The derived ordering is lexicographic with `z¹ > … > zⁿ > z̄¹ > … > z̄ⁿ`,
/// a monomial order; polynomial division relies on it.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct MultiIndex {
    pub holo: Vec<u32>,
    pub anti: Vec<u32>,
}

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex { holo: vec![0; n], anti: vec![0; n] }
    }

    pub fn var(n: usize, v: Var) -> Self {
        let mut m = MultiIndex::zero(n);
        match v {
            Var::Z(a) => m.holo[a] = 1,
            Var::Zb(a) => m.anti[a] = 1,
        }
        m
    }

    pub fn holomorphic(exps: &[u32]) -> Self {
        MultiIndex { holo: exps.to_vec(), anti: vec![0; exps.len()] }
    }

    pub fn n(&self) -> usize {
        self.holo.len()
    }

    pub fn degree(&self) -> u32 {
        self.holo.iter().sum::<u32>() + self.anti.iter().sum::<u32>()
    }

    pub fn holo_degree(&self) -> u32 {
        self.holo.iter().sum()
    }

    pub fn is_holomorphic(&self) -> bool {
        self.anti.iter().all(|&e| e == 0)
    }

    pub fn exp(&self, v: Var) -> u32 {
        match v {
            Var::Z(a) => self.holo[a],
            Var::Zb(a) => self.anti[a],
        }
    }

    fn exp_mut(&mut self, v: Var) -> &mut u32 {
        match v {
            Var::Z(a) => &mut self.holo[a],
            Var::Zb(a) => &mut self.anti[a],
        }
    }

    pub fn mul(&self, o: &MultiIndex) -> MultiIndex {
        MultiIndex {
            holo: self.holo.iter().zip(&o.holo).map(|(a, b)| a + b).collect(),
            anti: self.anti.iter().zip(&o.anti).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn divides(&self, o: &MultiIndex) -> bool {
        self.holo.iter().zip(&o.holo).all(|(a, b)| a <= b) && self.anti.iter().zip(&o.anti).all(|(a, b)| a <= b)
    }

    /// `o / self`, assuming `self.divides(o)`.
    fn quotient_of(&self, o: &MultiIndex) -> MultiIndex {
        MultiIndex {
            holo: o.holo.iter().zip(&self.holo).map(|(a, b)| a - b).collect(),
            anti: o.anti.iter().zip(&self.anti).map(|(a, b)| a - b).collect(),
        }
    }

    /// Swap `z ↔ z̄`.
    pub fn conj(&self) -> MultiIndex {
        MultiIndex { holo: self.anti.clone(), anti: self.holo.clone() }
    }
}

/// Multivariate polynomial in `z, z̄` with Gaussian-rational coefficients.
/// No zero coefficient is ever stored.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<MultiIndex, GaussRat>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: GaussRat) -> Self {
        Poly::monomial(MultiIndex::zero(n), c)
    }

    pub fn one(n: usize) -> Self {
        Poly::constant(n, GaussRat::one())
    }

    pub fn monomial(m: MultiIndex, c: GaussRat) -> Self {
        let n = m.n();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { n, terms }
    }

    pub fn var(n: usize, v: Var) -> Self {
        Poly::monomial(MultiIndex::var(n, v), GaussRat::one())
    }

    pub fn z(n: usize, a: usize) -> Self {
        Poly::var(n, Var::Z(a))
    }

    pub fn zb(n: usize, a: usize) -> Self {
        Poly::var(n, Var::Zb(a))
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (MultiIndex, GaussRat)>) -> Self {
        let mut p = Poly::zero(n);
        for (m, c) in terms {
            assert_eq!(m.n(), n, "multi-index length mismatch");
            p.add_term(m, &c);
        }
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &GaussRat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &MultiIndex) -> GaussRat {
        self.terms.get(m).cloned().unwrap_or_else(GaussRat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(c)` when the polynomial is the constant `c` (including 0).
    pub fn as_constant(&self) -> Option<GaussRat> {
        match self.terms.len() {
            0 => Some(GaussRat::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                (m.degree() == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_holomorphic(&self) -> bool {
        self.terms.keys().all(MultiIndex::is_holomorphic)
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    pub fn leading(&self) -> Option<(&MultiIndex, &GaussRat)> {
        self.terms.iter().next_back()
    }

    fn add_term(&mut self, m: MultiIndex, c: &GaussRat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c.clone());
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &GaussRat) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.n);
        }
        Poly {
            n: self.n,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(self.n);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn deriv(&self, v: Var) -> Poly {
        let mut out = Poly::zero(self.n);
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            *m2.exp_mut(v) -= 1;
            out.add_term(m2, &c.mul(&GaussRat::from_int(e as i64)));
        }
        out
    }

    /// Complex conjugate as a function: swap `z ↔ z̄` and conjugate coefficients.
    pub fn conj(&self) -> Poly {
        Poly {
            n: self.n,
            terms: self.terms.iter().map(|(m, c)| (m.conj(), c.conj())).collect(),
        }
    }

    /// Division by a single divisor in lex order.
    ///
    /// Returns `(q, r)` with `self = q·d + r` and no term of `r` divisible by
    /// the leading monomial of `d`. A single polynomial is a Gröbner basis of
    /// the ideal it generates, so `r == 0` exactly when `d` divides `self`.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let (lm, lc) = d.leading().expect("division by the zero polynomial");
        let (lm, lc_inv) = (lm.clone(), lc.inv().expect("nonzero leading coefficient"));
        let mut p = self.clone();
        let mut q = Poly::zero(self.n);
        let mut r = Poly::zero(self.n);
        while let Some((m, c)) = p.terms.iter().next_back().map(|(m, c)| (m.clone(), c.clone())) {
            if lm.divides(&m) {
                let qm = lm.quotient_of(&m);
                let qc = &c * &lc_inv;
                let t = Poly::monomial(qm, qc);
                p = &p - &(&t * d);
                q = &q + &t;
            } else {
                p.terms.remove(&m);
                r.add_term(m, &c);
            }
        }
        (q, r)
    }

    /// `Some(self / d)` when the division is exact.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (q, r) = self.div_rem(d);
        r.is_zero().then_some(q)
    }

    /// Exact evaluation at a Gaussian-rational point (`z̄` values are the conjugates).
    pub fn eval_exact(&self, z: &[GaussRat]) -> GaussRat {
        let zb: Vec<GaussRat> = z.iter().map(GaussRat::conj).collect();
        let mut acc = GaussRat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for a in 0..self.n {
                if m.holo[a] > 0 {
                    t *= &z[a].pow(m.holo[a]);
                }
                if m.anti[a] > 0 {
                    t *= &zb[a].pow(m.anti[a]);
                }
            }
            acc += &t;
        }
        acc
    }

    /// Floating evaluation; each monomial is built by repeated multiplication.
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut t = c.to_c64();
            for a in 0..self.n {
                for _ in 0..m.holo[a] {
                    t *= z[a];
                }
                for _ in 0..m.anti[a] {
                    t *= z[a].conj();
                }
            }
            acc += t;
        }
        acc
    }

    /// Re-embed into a space of a different dimension (`n` must match the used variables).
    pub fn with_n(&self, n: usize) -> Option<Poly> {
        if n == self.n {
            return Some(self.clone());
        }
        let mut out = Poly::zero(n);
        for (m, c) in &self.terms {
            let mut m2 = MultiIndex::zero(n);
            for a in 0..self.n {
                if a >= n {
                    if m.holo[a] != 0 || m.anti[a] != 0 {
                        return None;
                    }
                } else {
                    m2.holo[a] = m.holo[a];
                    m2.anti[a] = m.anti[a];
                }
            }
            out.add_term(m2, c);
        }
        Some(out)
    }
}

impl Poly {
    /// Parses the textual form produced by `Display` for an `n`-variable polynomial.
    pub fn parse(s: &str, n: usize) -> Result<Poly, SymError> {
        let t = s.trim();
        let bad = |why: &str| SymError::Parse(format!("{why} in polynomial `{s}`"));
        if t == "0" {
            return Ok(Poly::zero(n));
        }
        let mut out = Poly::zero(n);
        for term in t.split(" + ") {
            let mut coeff = GaussRat::one();
            let mut m = MultiIndex::zero(n);
            for (i, factor) in term.split(" * ").map(str::trim).enumerate() {
                let (var, rest) = if let Some(r) = factor.strip_prefix("zb") {
                    (Some(true), r)
                } else if let Some(r) = factor.strip_prefix('z') {
                    (Some(false), r)
                } else {
                    (None, factor)
                };
                match var {
                    None => {
                        if i != 0 {
                            return Err(bad("coefficient after a variable"));
                        }
                        let c = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(rest);
                        coeff = c.parse()?;
                    }
                    Some(anti) => {
                        let (idx, exp) = match rest.split_once('^') {
                            Some((a, e)) => (a, e.parse::<u32>().map_err(|_| bad("bad exponent"))?),
                            None => (rest, 1),
                        };
                        let a: usize = idx.parse().map_err(|_| bad("bad variable index"))?;
                        if a == 0 || a > n {
                            return Err(bad("variable index out of range"));
                        }
                        let slot = if anti { &mut m.anti[a - 1] } else { &mut m.holo[a - 1] };
                        *slot += exp;
                    }
                }
            }
            out.add_term(m, &coeff);
        }
        Ok(out)
    }
}

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        debug_assert_eq!(self.n, o.n);
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        debug_assert_eq!(self.n, o.n);
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), &-c);
        }
        out
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        debug_assert_eq!(self.n, o.n);
        let mut out = Poly::zero(self.n);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                out.add_term(m1.mul(m2), &(c1 * c2));
            }
        }
        out
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, o: Poly) -> Poly {
        &self + &o
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, o: Poly) -> Poly {
        &self - &o
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, o: Poly) -> Poly {
        &self * &o
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&GaussRat::from_int(-1))
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

impl fmt::Display for Poly {
    /// Terms in descending monomial order joined by ` + `, each as
    /// `c * z1^a * zb1^b`; a unit coefficient is dropped.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mut factors: Vec<String> = Vec::new();
            for a in 0..self.n {
                match m.holo[a] {
                    0 => {}
                    1 => factors.push(format!("z{}", a + 1)),
                    e => factors.push(format!("z{}^{}", a + 1, e)),
                }
            }
            for a in 0..self.n {
                match m.anti[a] {
                    0 => {}
                    1 => factors.push(format!("zb{}", a + 1)),
                    e => factors.push(format!("zb{}^{}", a + 1, e)),
                }
            }
            let coeff = if c.is_compound() { format!("({c})") } else { c.to_string() };
            if factors.is_empty() {
                write!(f, "{coeff}")?;
            } else if c.is_one() {
                write!(f, "{}", factors.join(" * "))?;
            } else {
                write!(f, "{} * {}", coeff, factors.join(" * "))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[{self}]")
    }
}
