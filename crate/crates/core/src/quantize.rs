//! Quantum layer: covariant derivatives on trivialized sections, prequantization,
//! the polarized quantizer, holomorphic differential operators, matrices and spectra.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix};
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::fock::FockBasis;
use crate::geometry::{ConnectionForm, KahlerStructure};
use crate::observables::{check_preservation, hamiltonian_field, poisson, Observable, PolyVectorField, PreservationCertificate};
use crate::params::ModelParams;
use crate::symcore::{AFrac, GaussRat, MultiIndex, Poly, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuantizeError {
    #[error("observable {0} is not polarization-preserving")]
    NotPreserving(String),
    #[error("holomorphic closure violated: {0}")]
    HolomorphicClosure(String),
}

/// `Σ_m c_m(z) ∂^m` with holomorphic polynomial coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct HoloDiffOp {
    n: usize,
    terms: BTreeMap<Vec<u32>, Poly>,
}

fn binom(n: u32, k: u32) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

fn deriv_poly(p: &Poly, m: &[u32]) -> Poly {
    let mut out = p.clone();
    for (a, &e) in m.iter().enumerate() {
        for _ in 0..e {
            out = out.deriv(Var::Z(a));
        }
    }
    out
}

impl HoloDiffOp {
    pub fn zero(n: usize) -> Self {
        HoloDiffOp { n, terms: BTreeMap::new() }
    }

    /// Multiplication by a holomorphic polynomial.
    pub fn multiplication(p: Poly) -> Self {
        let n = p.n();
        HoloDiffOp::zero(n).with_term(vec![0; n], p)
    }

    pub fn identity(n: usize) -> Self {
        HoloDiffOp::multiplication(Poly::one(n))
    }

    /// `∂_α` (0-based).
    pub fn partial(n: usize, a: usize) -> Self {
        let mut m = vec![0; n];
        m[a] = 1;
        HoloDiffOp::zero(n).with_term(m, Poly::one(n))
    }

    /// Adds `coeff · ∂^m`.
    pub fn with_term(mut self, m: Vec<u32>, coeff: Poly) -> Self {
        assert!(coeff.is_holomorphic(), "coefficients must be holomorphic");
        assert_eq!(m.len(), self.n);
        self.add_term(m, coeff);
        self
    }

    fn add_term(&mut self, m: Vec<u32>, coeff: Poly) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_insert_with(|| Poly::zero(coeff.n()));
        *entry = &*entry + &coeff;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Poly)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &[u32]) -> Poly {
        self.terms.get(m).cloned().unwrap_or_else(|| Poly::zero(self.n))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    /// Set of degree changes `deg(coeff monomial) − |m|` over all terms.
    pub fn degree_shifts(&self) -> Vec<i64> {
        let mut s: Vec<i64> = self
            .terms
            .iter()
            .flat_map(|(m, c)| {
                let o: i64 = m.iter().map(|&e| e as i64).sum();
                c.terms().map(move |(mi, _)| mi.holo_degree() as i64 - o).collect::<Vec<_>>()
            })
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn is_degree_preserving(&self) -> bool {
        self.degree_shifts().iter().all(|&d| d == 0)
    }

    pub fn apply(&self, psi: &Poly) -> Poly {
        self.terms.iter().fold(Poly::zero(self.n), |acc, (m, c)| &acc + &(c * &deriv_poly(psi, m)))
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&GaussRat::from_int(-1)))
    }

    pub fn scale(&self, c: &GaussRat) -> Self {
        let mut out = HoloDiffOp::zero(self.n);
        for (m, p) in &self.terms {
            out.add_term(m.clone(), p.scale(c));
        }
        out
    }

    /// `self ∘ o`, by the multivariate Leibniz rule.
    pub fn compose(&self, o: &Self) -> Self {
        let mut out = HoloDiffOp::zero(self.n);
        for (m, c) in &self.terms {
            for (r, d) in &o.terms {
                for j in sub_indices(m) {
                    let factor: u64 = m.iter().zip(&j).map(|(&mi, &ji)| binom(mi, ji)).product();
                    let dj = deriv_poly(d, &j);
                    if dj.is_zero() {
                        continue;
                    }
                    let order: Vec<u32> = m.iter().zip(&j).zip(r).map(|((&mi, &ji), &ri)| mi - ji + ri).collect();
                    let coeff = (c * &dj).scale(&GaussRat::from_int(factor as i64));
                    out.add_term(order, coeff);
                }
            }
        }
        out
    }

    pub fn eval_coefficient(&self, m: &[u32], z: &[GaussRat]) -> GaussRat {
        self.coefficient(m).eval_exact(z)
    }
}

fn sub_indices(m: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for &e in m {
        out = out.into_iter().flat_map(|v| (0..=e).map(move |j| [v.clone(), vec![j]].concat())).collect();
    }
    out
}

/// `PQ − QP`.
pub fn op_commutator(p: &HoloDiffOp, q: &HoloDiffOp) -> HoloDiffOp {
    p.compose(q).sub(&q.compose(p))
}

impl fmt::Display for HoloDiffOp {
    /// Terms `[coeff] d1^a d2^b`, highest derivative first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(m, c)| {
                let d: Vec<String> = m
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(a, &e)| if e == 1 { format!("d{}", a + 1) } else { format!("d{}^{}", a + 1, e) })
                    .collect();
                if d.is_empty() {
                    format!("[{c}]")
                } else {
                    format!("[{c}] {}", d.join(" "))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Debug for HoloDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HoloDiffOp[{self}]")
    }
}

/// `c^μ ∂_μ + c^μ̄ ∂_μ̄ + c⁰` acting on trivialized sections.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectionOp {
    pub field: PolyVectorField,
    pub multiplier: AFrac,
}

impl SectionOp {
    pub fn zero(params: &Arc<ModelParams>) -> Self {
        SectionOp { field: PolyVectorField::zero(params), multiplier: AFrac::zero(params) }
    }

    pub fn multiplication(f: AFrac) -> Self {
        SectionOp { field: PolyVectorField::zero(f.params()), multiplier: f }
    }

    pub fn apply(&self, phi: &AFrac) -> AFrac {
        &self.field.apply(phi) + &(&self.multiplier * phi)
    }

    pub fn add(&self, o: &Self) -> Self {
        SectionOp { field: self.field.add(&o.field), multiplier: &self.multiplier + &o.multiplier }
    }

    pub fn scale(&self, c: &GaussRat) -> Self {
        SectionOp { field: self.field.scale(c), multiplier: self.multiplier.scale(c) }
    }

    pub fn is_zero(&self) -> bool {
        self.field.is_zero() && self.multiplier.is_zero()
    }

    /// `[X + p, Y + q] = [X, Y] + X(q) − Y(p)`.
    pub fn commutator(&self, o: &Self) -> Self {
        SectionOp {
            field: crate::observables::lie_bracket(&self.field, &o.field),
            multiplier: &self.field.apply(&o.multiplier) - &o.field.apply(&self.multiplier),
        }
    }
}

/// `D_X φ = Xφ − iħ⁻¹ α(X) φ`.
pub fn covariant_derivative(x: &PolyVectorField, c: &ConnectionForm) -> SectionOp {
    let p = &c.params;
    let coef = GaussRat::new(Zero::zero(), -p.hbar().recip());
    SectionOp { field: x.clone(), multiplier: c.pair(&x.holo).scale(&coef) }
}

/// `f − iħ D_{V(f)}`.
pub fn prequantize(f: &Observable, ks: &KahlerStructure) -> SectionOp {
    let v = hamiltonian_field(&f.value, &ks.omega);
    let d = covariant_derivative(&v, &ks.connection);
    let mih = GaussRat::new(Zero::zero(), -ks.params.hbar().clone());
    d.scale(&mih).add(&SectionOp::multiplication(f.value.clone()))
}

/// The section operator `−iħ D_{V(f)} + f − (iħ/2) a[f]` before restriction.
pub fn quantized_section_op(f: &Observable, cert: &PreservationCertificate, ks: &KahlerStructure) -> Result<SectionOp, QuantizeError> {
    if !cert.preserved {
        return Err(QuantizeError::NotPreserving(f.label.to_string()));
    }
    let a = cert.a_trace().map_err(|_| QuantizeError::NotPreserving(f.label.to_string()))?;
    let half_ih = GaussRat::new(Zero::zero(), ks.params.hbar() / num_rational::BigRational::from_integer(2.into()));
    let mut op = prequantize(f, ks);
    op.multiplier = &op.multiplier - &a.scale(&half_ih);
    Ok(op)
}

fn holomorphic_poly(f: &AFrac, what: &str) -> Result<Poly, QuantizeError> {
    if f.apow() == 0 && f.num().is_holomorphic() {
        Ok(f.num().clone())
    } else {
        Err(QuantizeError::HolomorphicClosure(format!("{what} = {f}")))
    }
}

/// Restricts the quantized section operator to holomorphic `ψ`.
///
/// The `∂_μ̄` part annihilates `ψ`; the `∂_μ` coefficients and the multiplier
/// must be holomorphic polynomials.
pub fn quantize(f: &Observable, cert: &PreservationCertificate, ks: &KahlerStructure) -> Result<HoloDiffOp, QuantizeError> {
    let op = quantized_section_op(f, cert, ks)?;
    let n = ks.params.n();
    let mut out = HoloDiffOp::multiplication(holomorphic_poly(&op.multiplier, "multiplier")?);
    for (m, c) in op.field.holo.iter().enumerate() {
        let p = holomorphic_poly(c, &format!("coefficient of d{}", m + 1))?;
        let mut idx = vec![0; n];
        idx[m] = 1;
        out.add_term(idx, p);
    }
    Ok(out)
}

/// Certificate plus quantization in one step.
pub fn quantize_observable(f: &Observable, ks: &KahlerStructure) -> Result<HoloDiffOp, QuantizeError> {
    let cert = check_preservation(f, &ks.metric);
    quantize(f, &cert, ks)
}

/// `ħ(z^ν ∂_ν + n/2)`.
pub fn stated_qh(params: &ModelParams) -> HoloDiffOp {
    let n = params.n();
    let h = GaussRat::from_rat(params.hbar().clone());
    let half_n = GaussRat::ratio(n as i64, 2);
    let mut op = HoloDiffOp::multiplication(Poly::constant(n, &h * &half_n));
    for a in 0..n {
        op = op.add(&HoloDiffOp::partial(n, a).scale(&h).compose_left_mul(&Poly::z(n, a)));
    }
    op
}

/// `−ħ(k/4) z^α z^ν ∂_ν + z^α (1 − (ħk/8)(n+1))`.
pub fn stated_qn(params: &ModelParams, a: usize) -> HoloDiffOp {
    let n = params.n();
    let h = GaussRat::from_rat(params.hbar().clone());
    let q = params.quarter_k();
    let za = Poly::z(n, a);
    let c0 = &GaussRat::one() - &(&(&h * &GaussRat::from_rat(params.k().clone())) * &GaussRat::ratio(n as i64 + 1, 8));
    let mut op = HoloDiffOp::multiplication(za.scale(&c0));
    let lead = -(&h * &q);
    for nu in 0..n {
        op = op.add(&HoloDiffOp::partial(n, nu).compose_left_mul(&(&za * &Poly::z(n, nu)).scale(&lead)));
    }
    op
}

/// `ħ ∂_α`.
pub fn stated_qnbar(params: &ModelParams, a: usize) -> HoloDiffOp {
    HoloDiffOp::partial(params.n(), a).scale(&GaussRat::from_rat(params.hbar().clone()))
}

impl HoloDiffOp {
    /// `p · self`.
    pub fn compose_left_mul(&self, p: &Poly) -> Self {
        HoloDiffOp::multiplication(p.clone()).compose(self)
    }
}

/// Dense exact matrix of an operator on the truncated monomial basis.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub basis: FockBasis,
    /// `entries[row][col]`: coefficient of basis element `row` in `P(basis[col])`.
    pub entries: Vec<Vec<GaussRat>>,
    /// Columns whose image had components beyond the cutoff.
    pub truncated: Vec<bool>,
}

pub fn to_matrix(p: &HoloDiffOp, basis: &FockBasis) -> OperatorMatrix {
    let size = basis.len();
    let n = basis.n();
    let cols: Vec<(Vec<(usize, GaussRat)>, bool)> = crate::par::map_range(size, |j| {
        let img = p.apply(&Poly::monomial(MultiIndex::holomorphic(basis.exponents(j)), GaussRat::one()));
        let mut entries = Vec::new();
        let mut cut = false;
        for (m, c) in img.terms() {
            debug_assert_eq!(m.n(), n);
            match basis.index_of(&m.holo) {
                Some(i) => entries.push((i, c.clone())),
                None => cut = true,
            }
        }
        (entries, cut)
    });
    let mut entries = vec![vec![GaussRat::zero(); size]; size];
    let mut truncated = vec![false; size];
    for (j, (col, cut)) in cols.into_iter().enumerate() {
        truncated[j] = cut;
        for (i, c) in col {
            entries[i][j] = c;
        }
    }
    OperatorMatrix { basis: basis.clone(), entries, truncated }
}

impl OperatorMatrix {
    pub fn to_complex(&self) -> DMatrix<Complex<f64>> {
        let s = self.entries.len();
        DMatrix::from_fn(s, s, |i, j| {
            let c = self.entries[i][j].to_c64();
            Complex::new(c.re, c.im)
        })
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, v)| i == j || v.is_zero()))
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Eigenvalue {
    pub value_exact: Option<String>,
    pub value: f64,
    pub imag: f64,
    pub multiplicity: usize,
    pub degree: Option<usize>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SpectrumReport {
    pub exact: bool,
    pub eigenvalues: Vec<Eigenvalue>,
    /// `‖MM* − M*M‖_max` of the numeric matrix, when the numeric path was used.
    pub normality_residual: Option<f64>,
}

fn is_triangular(block: &[Vec<GaussRat>]) -> bool {
    let s = block.len();
    let lower = (0..s).all(|i| ((i + 1)..s).all(|j| block[i][j].is_zero()));
    let upper = (0..s).all(|i| (0..i).all(|j| block[i][j].is_zero()));
    lower || upper
}

fn numeric_eigenvalues(m: DMatrix<Complex<f64>>) -> (Vec<Complex<f64>>, f64) {
    let adj = m.adjoint();
    let normality = (&m * &adj - &adj * &m).iter().map(|c| c.norm()).fold(0.0, f64::max);
    let eig = m.clone().schur().eigenvalues().map(|v| v.iter().cloned().collect()).unwrap_or_default();
    (eig, normality)
}

/// Eigenvalues on the cutoff basis: exact per degree block when possible.
pub fn spectrum(p: &HoloDiffOp, basis: &FockBasis) -> SpectrumReport {
    let mat = to_matrix(p, basis);
    if p.is_degree_preserving() {
        let mut exact: BTreeMap<usize, Vec<(GaussRat, usize)>> = BTreeMap::new();
        let mut numeric = Vec::new();
        let mut all_exact = true;
        for l in 0..=basis.cutoff() {
            let idx = basis.degree_range(l);
            let block: Vec<Vec<GaussRat>> = idx.clone().map(|i| idx.clone().map(|j| mat.entries[i][j].clone()).collect()).collect();
            if is_triangular(&block) {
                let mut vals: Vec<(GaussRat, usize)> = Vec::new();
                for (i, row) in block.iter().enumerate() {
                    let v = &row[i];
                    match vals.iter_mut().find(|(x, _)| x == v) {
                        Some(e) => e.1 += 1,
                        None => vals.push((v.clone(), 1)),
                    }
                }
                exact.insert(l, vals);
            } else {
                all_exact = false;
                let s = block.len();
                let m = DMatrix::from_fn(s, s, |i, j| {
                    let c = block[i][j].to_c64();
                    Complex::new(c.re, c.im)
                });
                let (ev, _) = numeric_eigenvalues(m);
                numeric.extend(ev.into_iter().map(|e| (l, e)));
            }
        }
        let mut eigenvalues: Vec<Eigenvalue> = exact
            .into_iter()
            .flat_map(|(l, vals)| {
                vals.into_iter().map(move |(v, mult)| {
                    let c = v.to_c64();
                    Eigenvalue { value_exact: Some(v.to_string()), value: c.re, imag: c.im, multiplicity: mult, degree: Some(l) }
                })
            })
            .collect();
        eigenvalues.extend(numeric.into_iter().map(|(l, e)| Eigenvalue {
            value_exact: None,
            value: e.re,
            imag: e.im,
            multiplicity: 1,
            degree: Some(l),
        }));
        return SpectrumReport { exact: all_exact, eigenvalues, normality_residual: None };
    }
    // keep only basis vectors whose images stay inside the cutoff
    let keep: Vec<usize> = (0..basis.len()).filter(|&j| !mat.truncated[j]).collect();
    let full = mat.to_complex();
    let m = DMatrix::from_fn(keep.len(), keep.len(), |i, j| full[(keep[i], keep[j])]);
    let (ev, normality) = numeric_eigenvalues(m);
    let mut eigenvalues: Vec<Eigenvalue> = ev
        .into_iter()
        .map(|e| Eigenvalue { value_exact: None, value: e.re, imag: e.im, multiplicity: 1, degree: None })
        .collect();
    eigenvalues.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.imag.total_cmp(&b.imag)));
    SpectrumReport { exact: false, eigenvalues, normality_residual: Some(normality) }
}

/// Finds `c` with `lhs = c · rhs`, if such a constant exists.
pub fn proportionality_constant(lhs: &HoloDiffOp, rhs: &HoloDiffOp) -> Option<GaussRat> {
    let (m, r) = rhs.terms().next()?;
    let (mono, rc) = r.terms().next()?;
    let lc = lhs.coefficient(m).coeff(mono);
    let c = &lc / rc;
    (rhs.scale(&c) == *lhs).then_some(c)
}

fn section_proportionality(lhs: &SectionOp, rhs: &SectionOp) -> Option<GaussRat> {
    let first = rhs.field.holo.iter().chain(&rhs.field.anti).chain(std::iter::once(&rhs.multiplier));
    let lfirst = lhs.field.holo.iter().chain(&lhs.field.anti).chain(std::iter::once(&lhs.multiplier));
    for (l, r) in lfirst.zip(first) {
        if let Some((mono, rc)) = r.num().terms().next() {
            if r.apow() != l.apow() {
                return None;
            }
            let c = &l.num().coeff(mono) / rc;
            return (rhs.scale(&c) == *lhs).then_some(c);
        }
    }
    lhs.is_zero().then(GaussRat::zero)
}

/// `c` from one explicit pair `[Q H, Q N^1̄] = c · Q{H, N^1̄}`.
pub fn calibrate_homomorphism_constant(ks: &KahlerStructure) -> Option<GaussRat> {
    let p = &ks.params;
    let h = Observable::h(p);
    let nb = Observable::n_anti(p, 0);
    let qh = quantize_observable(&h, ks).ok()?;
    let qnb = quantize_observable(&nb, ks).ok()?;
    let br = poisson(&h, &nb, &ks.omega);
    let qbr = quantize_observable(&br, ks).ok()?;
    proportionality_constant(&op_commutator(&qh, &qnb), &qbr)
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct HomomorphismFailure {
    pub pair: String,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct HomomorphismReport {
    pub constant: Option<String>,
    pub pairs_checked: usize,
    pub quantizer_failures: Vec<HomomorphismFailure>,
    pub prequantizer_failures: Vec<HomomorphismFailure>,
}

impl HomomorphismReport {
    pub fn holds(&self) -> bool {
        self.constant.is_some() && self.quantizer_failures.is_empty() && self.prequantizer_failures.is_empty()
    }
}

/// `[Qf, Qg] = c·Q{f,g}` and `[P̌f, P̌g] = c·P̌{f,g}` for every pair of the family.
pub fn verify_homomorphism(ks: &KahlerStructure) -> HomomorphismReport {
    let Some(c) = calibrate_homomorphism_constant(ks) else {
        return HomomorphismReport { constant: None, pairs_checked: 0, quantizer_failures: vec![], prequantizer_failures: vec![] };
    };
    let fam = Observable::family(&ks.params);
    let qs: Vec<Result<HoloDiffOp, QuantizeError>> = crate::par::map(&fam, |f| quantize_observable(f, ks));
    let ps: Vec<SectionOp> = crate::par::map(&fam, |f| prequantize(f, ks));
    let pairs: Vec<(usize, usize)> = (0..fam.len()).flat_map(|i| (i..fam.len()).map(move |j| (i, j))).collect();
    let results = crate::par::map(&pairs, |&(i, j)| {
        let (f, g) = (&fam[i], &fam[j]);
        let name = format!("({}, {})", f.label, g.label);
        let br = poisson(f, g, &ks.omega);
        let q = match (&qs[i], &qs[j], quantize_observable(&br, ks)) {
            (Ok(qf), Ok(qg), Ok(qb)) => {
                let lhs = op_commutator(qf, qg);
                let rhs = qb.scale(&c);
                (lhs != rhs).then(|| HomomorphismFailure { pair: name.clone(), detail: format!("[Qf,Qg] = {lhs}; c Q{{f,g}} = {rhs}") })
            }
            (a, b, r) => Some(HomomorphismFailure {
                pair: name.clone(),
                detail: format!("quantization failed: {:?}", [a.clone().err(), b.clone().err(), r.err()]),
            }),
        };
        let lhs = ps[i].commutator(&ps[j]);
        let rhs = prequantize(&br, ks).scale(&c);
        let p = (lhs != rhs).then(|| HomomorphismFailure { pair: name, detail: "prequantized commutator mismatch".into() });
        (q, p)
    });
    let mut qf = Vec::new();
    let mut pf = Vec::new();
    for (q, p) in results {
        qf.extend(q);
        pf.extend(p);
    }
    // the prequantizer constant is calibrated independently and must agree
    let fam0 = &fam[0];
    let fam1 = &fam[fam.len().min(1 + ks.params.n())];
    let pc = section_proportionality(&prequantize(fam0, ks).commutator(&prequantize(fam1, ks)), &prequantize(&poisson(fam0, fam1, &ks.omega), ks));
    if pc.as_ref() != Some(&c) {
        pf.push(HomomorphismFailure { pair: "calibration".into(), detail: format!("prequantizer constant {pc:?} differs from {c}") });
    }
    HomomorphismReport { constant: Some(c.to_string()), pairs_checked: pairs.len(), quantizer_failures: qf, prequantizer_failures: pf }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks(n: usize, k: i64, h: (i64, i64)) -> KahlerStructure {
        KahlerStructure::new(&ModelParams::from_ints(n, k, 1, h.0, h.1).unwrap().shared())
    }

    #[test]
    fn quantized_h_matches_stated_form() {
        let s = ks(2, -4, (1, 3));
        let q = quantize_observable(&Observable::h(&s.params), &s).unwrap();
        assert_eq!(q, stated_qh(&s.params));
    }

    #[test]
    fn non_preserving_rejected() {
        let s = ks(1, -4, (1, 1));
        let f = Observable::custom(&AFrac::z(&s.params, 0) + &AFrac::zb(&s.params, 0), "x");
        assert!(matches!(quantize_observable(&f, &s), Err(QuantizeError::NotPreserving(_))));
    }

    #[test]
    fn composition_and_commutator() {
        let d = HoloDiffOp::partial(1, 0);
        let z = HoloDiffOp::multiplication(Poly::z(1, 0));
        assert_eq!(op_commutator(&d, &z), HoloDiffOp::identity(1));
        let zd = z.compose(&d);
        assert_eq!(zd.apply(&Poly::z(1, 0).pow(3)), Poly::z(1, 0).pow(3).scale(&GaussRat::from_int(3)));
    }

    #[test]
    fn one_quantizes_to_identity() {
        let s = ks(1, 4, (1, 1));
        let p = prequantize(&Observable::custom(AFrac::one(&s.params), "1"), &s);
        assert_eq!(p, SectionOp::multiplication(AFrac::one(&s.params)));
    }

    #[test]
    fn calibrated_constant() {
        let s = ks(1, -4, (1, 2));
        assert_eq!(calibrate_homomorphism_constant(&s), Some(GaussRat::new(Zero::zero(), -s.params.hbar().clone())));
    }
}
