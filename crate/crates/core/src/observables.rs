//! Classical layer: observables, Hamiltonian fields, Poisson brackets,
//! polarization preservation and the commutator tables of the T-fields.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{build_metric, build_symplectic_form, FracMatrix, HermitianMetric, SymplecticForm};
use crate::params::ModelParams;
use crate::symcore::{AFrac, GaussRat, MultiIndex, Poly, SymError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObservableError {
    #[error("observable {0} is not polarization-preserving")]
    NotPreserving(String),
    #[error("bracket with V(z^{0}) is not in the span of the polarization: {1}")]
    NoAMatrix(usize, String),
    #[error(transparent)]
    Sym(#[from] SymError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    H,
    N(usize),
    NBar(usize),
    Mixed(usize, usize),
    Custom(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::H => write!(f, "H"),
            Label::N(a) => write!(f, "N^{}", a + 1),
            Label::NBar(a) => write!(f, "N^{}bar", a + 1),
            Label::Mixed(a, b) => write!(f, "H^{}{}bar", a + 1, b + 1),
            Label::Custom(s) => write!(f, "{s}"),
        }
    }
}

/// A function on the chart together with a name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observable {
    pub value: AFrac,
    pub label: Label,
}

impl Observable {
    pub fn new(value: AFrac, label: Label) -> Self {
        Observable { value, label }
    }

    pub fn custom(value: AFrac, name: &str) -> Self {
        Observable { value, label: Label::Custom(name.to_string()) }
    }

    /// `H = Σ z^ν z̄^ν / A`.
    pub fn h(params: &Arc<ModelParams>) -> Self {
        let n = params.n();
        let num = (0..n).fold(Poly::zero(n), |acc, a| &acc + &(&Poly::z(n, a) * &Poly::zb(n, a)));
        Observable::new(AFrac::new(params, num, 1), Label::H)
    }

    /// `N^α = z^α / A`.
    pub fn n_holo(params: &Arc<ModelParams>, a: usize) -> Self {
        Observable::new(AFrac::new(params, Poly::z(params.n(), a), 1), Label::N(a))
    }

    /// `N^ᾱ = z̄^α / A`.
    pub fn n_anti(params: &Arc<ModelParams>, a: usize) -> Self {
        Observable::new(AFrac::new(params, Poly::zb(params.n(), a), 1), Label::NBar(a))
    }

    /// `H^{αβ̄} = z^α z̄^β / A`.
    pub fn mixed(params: &Arc<ModelParams>, a: usize, b: usize) -> Self {
        let n = params.n();
        Observable::new(AFrac::new(params, &Poly::z(n, a) * &Poly::zb(n, b), 1), Label::Mixed(a, b))
    }

    /// `H`, every `N^α`, `N^ᾱ` and `H^{αβ̄}`.
    pub fn family(params: &Arc<ModelParams>) -> Vec<Observable> {
        let n = params.n();
        let mut out = vec![Observable::h(params)];
        out.extend((0..n).map(|a| Observable::n_holo(params, a)));
        out.extend((0..n).map(|a| Observable::n_anti(params, a)));
        for a in 0..n {
            for b in 0..n {
                out.push(Observable::mixed(params, a, b));
            }
        }
        out
    }

    pub fn is_real(&self) -> bool {
        self.value.is_real()
    }

    pub fn params(&self) -> &Arc<ModelParams> {
        self.value.params()
    }
}

/// `Σ holo[μ] ∂_μ + anti[μ] ∂_μ̄` with A-fraction coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyVectorField {
    pub holo: Vec<AFrac>,
    pub anti: Vec<AFrac>,
}

impl PolyVectorField {
    pub fn new(holo: Vec<AFrac>, anti: Vec<AFrac>) -> Self {
        assert_eq!(holo.len(), anti.len());
        PolyVectorField { holo, anti }
    }

    pub fn zero(params: &Arc<ModelParams>) -> Self {
        let n = params.n();
        PolyVectorField { holo: vec![AFrac::zero(params); n], anti: vec![AFrac::zero(params); n] }
    }

    pub fn n(&self) -> usize {
        self.holo.len()
    }

    pub fn params(&self) -> &Arc<ModelParams> {
        self.holo[0].params()
    }

    /// `X f`.
    pub fn apply(&self, f: &AFrac) -> AFrac {
        let p = f.params();
        let mut acc = AFrac::zero(p);
        for m in 0..self.n() {
            if !self.holo[m].is_zero() {
                acc = &acc + &(&self.holo[m] * &f.ddz(m, false));
            }
            if !self.anti[m].is_zero() {
                acc = &acc + &(&self.anti[m] * &f.ddz(m, true));
            }
        }
        acc
    }

    fn zip(&self, o: &Self, op: impl Fn(&AFrac, &AFrac) -> AFrac) -> Self {
        PolyVectorField {
            holo: self.holo.iter().zip(&o.holo).map(|(a, b)| op(a, b)).collect(),
            anti: self.anti.iter().zip(&o.anti).map(|(a, b)| op(a, b)).collect(),
        }
    }

    fn map(&self, op: impl Fn(&AFrac) -> AFrac) -> Self {
        PolyVectorField { holo: self.holo.iter().map(&op).collect(), anti: self.anti.iter().map(&op).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        self.map(|a| -a)
    }

    pub fn scale(&self, c: &GaussRat) -> Self {
        self.map(|a| a.scale(c))
    }

    pub fn mul_fn(&self, f: &AFrac) -> Self {
        self.map(|a| a * f)
    }

    pub fn is_zero(&self) -> bool {
        self.holo.iter().chain(&self.anti).all(AFrac::is_zero)
    }

    /// The conjugate field `X̄`: holomorphic and antiholomorphic slots swap.
    pub fn conj(&self) -> Self {
        PolyVectorField {
            holo: self.anti.iter().map(AFrac::conj).collect(),
            anti: self.holo.iter().map(AFrac::conj).collect(),
        }
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>), SymError> {
        let h = self.holo.iter().map(|c| c.eval(z)).collect::<Result<_, _>>()?;
        let a = self.anti.iter().map(|c| c.eval(z)).collect::<Result<_, _>>()?;
        Ok((h, a))
    }
}

impl fmt::Display for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (m, c) in self.holo.iter().enumerate() {
            if !c.is_zero() {
                parts.push(format!("{c} d{}", m + 1));
            }
        }
        for (m, c) in self.anti.iter().enumerate() {
            if !c.is_zero() {
                parts.push(format!("{c} db{}", m + 1));
            }
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// `[X, Y]^μ = X(Y^μ) − Y(X^μ)` in both slots.
pub fn lie_bracket(x: &PolyVectorField, y: &PolyVectorField) -> PolyVectorField {
    let comp = |xa: &[AFrac], ya: &[AFrac]| -> Vec<AFrac> {
        xa.iter().zip(ya).map(|(xc, yc)| &x.apply(yc) - &y.apply(xc)).collect()
    };
    PolyVectorField { holo: comp(&x.holo, &y.holo), anti: comp(&x.anti, &y.anti) }
}

/// `V(f) = ω^{μν̄}(∂_ν̄ f ∂_μ − ∂_μ f ∂_ν̄)`.
pub fn hamiltonian_field(f: &AFrac, s: &SymplecticForm) -> PolyVectorField {
    let n = s.params.n();
    let p = &s.params;
    let df: Vec<AFrac> = (0..n).map(|a| f.ddz(a, false)).collect();
    let dbf: Vec<AFrac> = (0..n).map(|a| f.ddz(a, true)).collect();
    let w = &s.omega_upper;
    let holo = (0..n)
        .map(|mu| (0..n).fold(AFrac::zero(p), |acc, nu| &acc + &(&w[mu][nu] * &dbf[nu])))
        .collect();
    let anti = (0..n)
        .map(|nu| (0..n).fold(AFrac::zero(p), |acc, mu| &acc - &(&w[mu][nu] * &df[mu])))
        .collect();
    PolyVectorField { holo, anti }
}

/// `{f, g} = V(f) g`, so that `V({f,g}) = [V(f), V(g)]`.
pub fn poisson(f: &Observable, g: &Observable, s: &SymplecticForm) -> Observable {
    let v = hamiltonian_field(&f.value, s).apply(&g.value);
    Observable::custom(v, &format!("{{{},{}}}", f.label, g.label))
}

/// `(Σ u_α z̄^α + v) / A` for holomorphic `u_α`, `v`.
pub fn general_solution(params: &Arc<ModelParams>, u: &[Poly], v: &Poly) -> Result<Observable, ObservableError> {
    let n = params.n();
    if u.len() != n {
        return Err(SymError::Parse(format!("expected {n} coefficient functions, got {}", u.len())).into());
    }
    for (i, p) in u.iter().chain(std::iter::once(v)).enumerate() {
        if !p.is_holomorphic() {
            return Err(SymError::NotHolomorphic(format!("input {i}: {p}")).into());
        }
    }
    let w = u.iter().enumerate().fold(v.clone(), |acc, (a, ua)| &acc + &(ua * &Poly::zb(n, a)));
    Ok(Observable::custom(AFrac::new(params, w, 1), "W/A"))
}

/// Residual of the preservation equation and, when it vanishes, the multipliers `a[f]^α_β`.
#[derive(Clone, Debug)]
pub struct PreservationCertificate {
    pub residual: FracMatrix,
    pub preserved: bool,
    pub a_matrix: Option<FracMatrix>,
    pub a_trace: Option<AFrac>,
    label: String,
}

impl PreservationCertificate {
    pub fn a_trace(&self) -> Result<&AFrac, ObservableError> {
        self.a_trace.as_ref().ok_or_else(|| ObservableError::NotPreserving(self.label.clone()))
    }

    pub fn a_matrix(&self) -> Result<&FracMatrix, ObservableError> {
        self.a_matrix.as_ref().ok_or_else(|| ObservableError::NotPreserving(self.label.clone()))
    }
}

/// `V(z^α)`, the fields spanning the polarization.
pub fn polarization_fields(s: &SymplecticForm) -> Vec<PolyVectorField> {
    (0..s.params.n()).map(|a| hamiltonian_field(&AFrac::z(&s.params, a), s)).collect()
}

/// The antiholomorphic covariant Hessian `∇_μ̄ ∇_ν̄ f`.
pub fn preservation_residual(f: &AFrac, m: &HermitianMetric) -> FracMatrix {
    let n = m.n();
    let p = &m.params;
    let dbf: Vec<AFrac> = (0..n).map(|a| f.ddz(a, true)).collect();
    (0..n)
        .map(|mu| {
            (0..n)
                .map(|nu| {
                    let corr = (0..n).fold(AFrac::zero(p), |acc, s| &acc + &(&m.christoffel[s][mu][nu].conj() * &dbf[s]));
                    &dbf[nu].ddz(mu, true) - &corr
                })
                .collect()
        })
        .collect()
}

/// Solves `[V(f), V(z^α)] = a[f]^α_μ V(z^μ)` by matching `∂_ν̄` coefficients.
pub fn a_matrix(f: &AFrac, s: &SymplecticForm) -> Result<FracMatrix, ObservableError> {
    let n = s.params.n();
    let p = &s.params;
    let vf = hamiltonian_field(f, s);
    let pol = polarization_fields(s);
    let mut out = Vec::with_capacity(n);
    for (al, va) in pol.iter().enumerate() {
        let y = lie_bracket(&vf, va);
        // V(z^μ) has ∂_ν̄-components −ω^{μν̄}, and Σ_ν ω^{μν̄} ω_{γν̄} = −δ^μ_γ
        let row: Vec<AFrac> = (0..n)
            .map(|ga| (0..n).fold(AFrac::zero(p), |acc, nu| &acc + &(&y.anti[nu] * &s.omega_lower[ga][nu])))
            .collect();
        let recon = row.iter().zip(&pol).fold(PolyVectorField::zero(p), |acc, (c, v)| acc.add(&v.mul_fn(c)));
        if recon != y {
            return Err(ObservableError::NoAMatrix(al, y.to_string()));
        }
        out.push(row);
    }
    Ok(out)
}

pub fn check_preservation(f: &Observable, m: &HermitianMetric) -> PreservationCertificate {
    let residual = preservation_residual(&f.value, m);
    let preserved = residual.iter().flatten().all(AFrac::is_zero);
    let label = f.label.to_string();
    if !preserved {
        return PreservationCertificate { residual, preserved, a_matrix: None, a_trace: None, label };
    }
    let s = build_symplectic_form(m);
    match a_matrix(&f.value, &s) {
        Ok(am) => {
            let tr = (0..m.n()).fold(AFrac::zero(&m.params), |acc, i| &acc + &am[i][i]);
            PreservationCertificate { residual, preserved, a_matrix: Some(am), a_trace: Some(tr), label }
        }
        Err(_) => PreservationCertificate { residual, preserved: false, a_matrix: None, a_trace: None, label },
    }
}

/// The fields `T = V(H)`, `T^α = V(N^α)`, `T^ᾱ = V(N^ᾱ)`, `T^{αβ̄} = V(H^{αβ̄})`.
#[derive(Clone, Debug)]
pub struct TFields {
    pub t: PolyVectorField,
    pub holo: Vec<PolyVectorField>,
    pub anti: Vec<PolyVectorField>,
    pub mixed: Vec<Vec<PolyVectorField>>,
}

impl TFields {
    pub fn build(s: &SymplecticForm) -> Self {
        let p = &s.params;
        let n = p.n();
        let v = |o: Observable| hamiltonian_field(&o.value, s);
        TFields {
            t: v(Observable::h(p)),
            holo: (0..n).map(|a| v(Observable::n_holo(p, a))).collect(),
            anti: (0..n).map(|a| v(Observable::n_anti(p, a))).collect(),
            mixed: (0..n).map(|a| (0..n).map(|b| v(Observable::mixed(p, a, b))).collect()).collect(),
        }
    }

    /// `T^α`, `T^ᾱ` and `T^{αβ̄}`.
    pub fn generators(&self) -> Vec<PolyVectorField> {
        let mut g: Vec<PolyVectorField> = self.holo.iter().chain(&self.anti).cloned().collect();
        g.extend(self.mixed.iter().flatten().cloned());
        g
    }
}

/// How a computed bracket compares to the stated right-hand side.
#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SignVerdict {
    AsStated,
    Opposite,
    Differs,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Mismatch {
    pub indices: String,
    pub computed: String,
    pub stated: String,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct RelationCheck {
    pub group: String,
    pub name: String,
    pub holds: bool,
    pub computed_sign: SignVerdict,
    pub instances: usize,
    pub first_mismatch: Option<Mismatch>,
}

trait Comparable: Sized + PartialEq + fmt::Display + Send + Sync {
    fn negated(&self) -> Self;
    fn vanishes(&self) -> bool;
}

impl Comparable for AFrac {
    fn negated(&self) -> Self {
        -self
    }
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
}

impl Comparable for PolyVectorField {
    fn negated(&self) -> Self {
        self.neg()
    }
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
}

fn index_tuples(n: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..arity {
        out = out.into_iter().flat_map(|v| (0..n).map(move |i| [v.clone(), vec![i]].concat())).collect();
    }
    out
}

fn check_relation<T: Comparable>(
    group: &str,
    name: &str,
    n: usize,
    arity: usize,
    f: impl Fn(&[usize]) -> (T, T) + Sync + Send,
) -> RelationCheck {
    let tuples = index_tuples(n, arity);
    let results = crate::par::map(&tuples, |t| f(t));
    let mut as_stated = true;
    let mut opposite = true;
    let mut first = None;
    for (t, (lhs, rhs)) in tuples.iter().zip(&results) {
        let same = lhs == rhs;
        let neg = *lhs == rhs.negated() && !rhs.vanishes();
        as_stated &= same;
        opposite &= neg || (same && rhs.vanishes());
        if !same && first.is_none() {
            first = Some(Mismatch {
                indices: t.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(","),
                computed: lhs.to_string(),
                stated: rhs.to_string(),
            });
        }
    }
    let computed_sign = if as_stated {
        SignVerdict::AsStated
    } else if opposite {
        SignVerdict::Opposite
    } else {
        SignVerdict::Differs
    };
    RelationCheck {
        group: group.to_string(),
        name: name.to_string(),
        holds: as_stated,
        computed_sign,
        instances: tuples.len(),
        first_mismatch: first,
    }
}

fn kd(a: usize, b: usize) -> GaussRat {
    if a == b {
        GaussRat::from_int(1)
    } else {
        GaussRat::zero()
    }
}

/// Commutators of the deformed algebra, as stated for general `k`.
pub fn deformed_relations(tf: &TFields, params: &Arc<ModelParams>) -> Vec<RelationCheck> {
    let n = params.n();
    let i = GaussRat::i();
    let mi = GaussRat::imag(-1);
    let iq = &i * &params.quarter_k();
    let zero = || PolyVectorField::zero(params);
    let g = "deformed";
    vec![
        check_relation(g, "[T^a,T^b] = 0", n, 2, |x| (lie_bracket(&tf.holo[x[0]], &tf.holo[x[1]]), zero())),
        check_relation(g, "[T^a,T^bbar] = i k/4 (delta^a_b T + T^{a bbar})", n, 2, |x| {
            let rhs = tf.t.scale(&kd(x[0], x[1])).add(&tf.mixed[x[0]][x[1]]).scale(&iq);
            (lie_bracket(&tf.holo[x[0]], &tf.anti[x[1]]), rhs)
        }),
        check_relation(g, "[T^a,T] = -i T^a", n, 1, |x| (lie_bracket(&tf.holo[x[0]], &tf.t), tf.holo[x[0]].scale(&mi))),
        check_relation(g, "[T^abar,T] = -i T^abar", n, 1, |x| {
            (lie_bracket(&tf.anti[x[0]], &tf.t), tf.anti[x[0]].scale(&mi))
        }),
        check_relation(g, "[T^a,T^{b cbar}] = i delta^a_c T^b", n, 3, |x| {
            (lie_bracket(&tf.holo[x[0]], &tf.mixed[x[1]][x[2]]), tf.holo[x[1]].scale(&(&i * &kd(x[0], x[2]))))
        }),
        check_relation(g, "[T^abar,T^{b cbar}] = -i delta^a_b T^cbar", n, 3, |x| {
            (lie_bracket(&tf.anti[x[0]], &tf.mixed[x[1]][x[2]]), tf.anti[x[2]].scale(&(&mi * &kd(x[0], x[1]))))
        }),
        check_relation(g, "[T^{a bbar},T^{c nubar}] = i(delta^c_b T^{a nubar} - delta^nu_a T^{c bbar})", n, 4, |x| {
            let (a, b, c, nu) = (x[0], x[1], x[2], x[3]);
            let rhs = tf.mixed[a][nu].scale(&kd(c, b)).sub(&tf.mixed[c][b].scale(&kd(nu, a))).scale(&i);
            (lie_bracket(&tf.mixed[a][b], &tf.mixed[c][nu]), rhs)
        }),
    ]
}

/// The Poisson table of `N^α`, `N^ᾱ`, `H^{αβ̄}`.
pub fn poisson_relations(s: &SymplecticForm) -> Vec<RelationCheck> {
    let p = &s.params;
    let n = p.n();
    let i = GaussRat::i();
    let mi = GaussRat::imag(-1);
    let iq = &i * &p.quarter_k();
    let h = Observable::h(p).value;
    let na = |a| Observable::n_holo(p, a);
    let nb = |a| Observable::n_anti(p, a);
    let nm = |a, b| Observable::mixed(p, a, b);
    let br = |f: Observable, g: Observable| poisson(&f, &g, s).value;
    let g = "poisson";
    vec![
        check_relation(g, "{N^a,N^b} = 0", n, 2, |x| (br(na(x[0]), na(x[1])), AFrac::zero(p))),
        check_relation(g, "{N^a,N^bbar} = i k/4 (delta H + N^{a bbar}) - i delta", n, 2, |x| {
            let d = kd(x[0], x[1]);
            let rhs = &(&h.scale(&d) + &nm(x[0], x[1]).value).scale(&iq) - &AFrac::constant(p, &i * &d);
            (br(na(x[0]), nb(x[1])), rhs)
        }),
        check_relation(g, "{N^a,N^{b cbar}} = i delta^a_c N^b", n, 3, |x| {
            (br(na(x[0]), nm(x[1], x[2])), na(x[1]).value.scale(&(&i * &kd(x[0], x[2]))))
        }),
        check_relation(g, "{N^abar,N^{b cbar}} = -i delta^a_b N^cbar", n, 3, |x| {
            (br(nb(x[0]), nm(x[1], x[2])), nb(x[2]).value.scale(&(&mi * &kd(x[0], x[1]))))
        }),
        check_relation(g, "{N^{a bbar},N^{c nubar}} = i(delta^a_nu N^{c bbar} - delta^c_b N^{a nubar})", n, 4, |x| {
            let (a, b, c, nu) = (x[0], x[1], x[2], x[3]);
            let rhs = (&nm(c, b).value.scale(&kd(a, nu)) - &nm(a, nu).value.scale(&kd(c, b))).scale(&i);
            (br(nm(a, b), nm(c, nu)), rhs)
        }),
    ]
}

/// The flat-limit table, to be evaluated at `k = 0`.
pub fn contracted_relations(tf: &TFields, params: &Arc<ModelParams>) -> Vec<RelationCheck> {
    let n = params.n();
    let i = GaussRat::i();
    let mi = GaussRat::imag(-1);
    let zero = || PolyVectorField::zero(params);
    let g = "contracted";
    vec![
        check_relation(g, "[T^a,T^b] = 0", n, 2, |x| (lie_bracket(&tf.holo[x[0]], &tf.holo[x[1]]), zero())),
        check_relation(g, "[T^a,T^bbar] = 0", n, 2, |x| (lie_bracket(&tf.holo[x[0]], &tf.anti[x[1]]), zero())),
        check_relation(g, "[T^a,T^{b cbar}] = i delta^a_c T^b", n, 3, |x| {
            (lie_bracket(&tf.holo[x[0]], &tf.mixed[x[1]][x[2]]), tf.holo[x[1]].scale(&(&i * &kd(x[0], x[2]))))
        }),
        check_relation(g, "[T^abar,T^{b cbar}] = -i delta^a_b T^cbar", n, 3, |x| {
            (lie_bracket(&tf.anti[x[0]], &tf.mixed[x[1]][x[2]]), tf.anti[x[2]].scale(&(&mi * &kd(x[0], x[1]))))
        }),
        check_relation(g, "[T^{a bbar},T^{c nubar}] = i(delta^a_nu T^{c bbar} - delta^c_b T^{a nubar})", n, 4, |x| {
            let (a, b, c, nu) = (x[0], x[1], x[2], x[3]);
            let rhs = tf.mixed[c][b].scale(&kd(a, nu)).sub(&tf.mixed[a][nu].scale(&kd(c, b))).scale(&i);
            (lie_bracket(&tf.mixed[a][b], &tf.mixed[c][nu]), rhs)
        }),
    ]
}

/// The oscillator algebra relations among `T^α`, `T^ᾱ`, `T`.
pub fn oscillator_relations(tf: &TFields, params: &Arc<ModelParams>) -> Vec<RelationCheck> {
    let n = params.n();
    let i = GaussRat::i();
    let mi = GaussRat::imag(-1);
    let zero = || PolyVectorField::zero(params);
    let g = "oscillator";
    vec![
        check_relation(g, "[T^a,T^bbar] = 0", n, 2, |x| (lie_bracket(&tf.holo[x[0]], &tf.anti[x[1]]), zero())),
        check_relation(g, "[T^a,T^b] = 0", n, 2, |x| (lie_bracket(&tf.holo[x[0]], &tf.holo[x[1]]), zero())),
        check_relation(g, "[T^abar,T^bbar] = 0", n, 2, |x| (lie_bracket(&tf.anti[x[0]], &tf.anti[x[1]]), zero())),
        check_relation(g, "[T^a,T] = -i T^a", n, 1, |x| (lie_bracket(&tf.holo[x[0]], &tf.t), tf.holo[x[0]].scale(&mi))),
        check_relation(g, "[T^abar,T] = i T^abar", n, 1, |x| (lie_bracket(&tf.anti[x[0]], &tf.t), tf.anti[x[0]].scale(&i))),
    ]
}

// ---- rank over Q of sets of vector fields ----

trait Field: Clone + Zero + PartialEq {
    fn mul_r(&self, o: &Self) -> Self;
    fn sub_r(&self, o: &Self) -> Self;
    fn div_r(&self, o: &Self) -> Self;
}

impl Field for BigRational {
    fn mul_r(&self, o: &Self) -> Self {
        self * o
    }
    fn sub_r(&self, o: &Self) -> Self {
        self - o
    }
    fn div_r(&self, o: &Self) -> Self {
        self / o
    }
}

impl Field for GaussRat {
    fn mul_r(&self, o: &Self) -> Self {
        self * o
    }
    fn sub_r(&self, o: &Self) -> Self {
        self - o
    }
    fn div_r(&self, o: &Self) -> Self {
        self / o
    }
}

/// Incremental row echelon form; each stored row's pivot is its first column.
struct Echelon<K: Hash + Eq + Clone, F: Field> {
    cols: HashMap<K, usize>,
    rows: HashMap<usize, BTreeMap<usize, F>>,
}

impl<K: Hash + Eq + Clone, F: Field> Echelon<K, F> {
    fn new() -> Self {
        Echelon { cols: HashMap::new(), rows: HashMap::new() }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Inserts the vector; returns whether it was independent.
    fn insert(&mut self, entries: Vec<(K, F)>) -> bool {
        let mut v: BTreeMap<usize, F> = BTreeMap::new();
        for (k, x) in entries {
            if x.is_zero() {
                continue;
            }
            let next = self.cols.len();
            let c = *self.cols.entry(k).or_insert(next);
            v.insert(c, x);
        }
        while let Some((p, pv)) = v.iter().next().map(|(&p, x)| (p, x.clone())) {
            let Some(row) = self.rows.get(&p) else {
                let normalized = v.into_iter().map(|(c, x)| (c, x.div_r(&pv))).collect();
                self.rows.insert(p, normalized);
                return true;
            };
            let factor = pv;
            for (c, rx) in row {
                let cur = v.get(c).cloned().unwrap_or_else(F::zero);
                let nx = cur.sub_r(&factor.mul_r(rx));
                if nx.is_zero() {
                    v.remove(c);
                } else {
                    v.insert(*c, nx);
                }
            }
        }
        false
    }
}

type SlotKey = (usize, MultiIndex);

/// Numerators of all components over the common denominator `A^m`.
fn field_entries(x: &PolyVectorField, m: u32) -> Vec<(SlotKey, GaussRat)> {
    let mut out = Vec::new();
    for (slot, c) in x.holo.iter().chain(&x.anti).enumerate() {
        if c.is_zero() {
            continue;
        }
        let p = c.params();
        let num = if p.is_flat() { c.num().clone() } else { c.num() * &p.a_poly().pow(m - c.apow()) };
        for (mi, v) in num.terms() {
            out.push(((slot, mi.clone()), v.clone()));
        }
    }
    out
}

fn max_apow(x: &PolyVectorField) -> u32 {
    x.holo.iter().chain(&x.anti).map(AFrac::apow).max().unwrap_or(0)
}

/// Real and complex dimension of a span of vector fields.
struct SpanTracker {
    m: u32,
    basis: Vec<PolyVectorField>,
    real: Echelon<(SlotKey, bool), BigRational>,
    complex: Echelon<SlotKey, GaussRat>,
}

impl SpanTracker {
    fn new() -> Self {
        SpanTracker { m: 0, basis: Vec::new(), real: Echelon::new(), complex: Echelon::new() }
    }

    fn real_entries(x: &PolyVectorField, m: u32) -> Vec<((SlotKey, bool), BigRational)> {
        field_entries(x, m)
            .into_iter()
            .flat_map(|(k, v)| [((k.clone(), false), v.re), ((k, true), v.im)])
            .collect()
    }

    fn rebuild(&mut self, m: u32) {
        self.m = m;
        self.real = Echelon::new();
        self.complex = Echelon::new();
        for b in &self.basis {
            self.real.insert(Self::real_entries(b, m));
            self.complex.insert(field_entries(b, m));
        }
    }

    /// Adds `x` when it enlarges the real span.
    fn offer(&mut self, x: PolyVectorField) -> bool {
        let need = max_apow(&x);
        if need > self.m {
            self.rebuild(need);
        }
        if self.real.insert(Self::real_entries(&x, self.m)) {
            self.complex.insert(field_entries(&x, self.m));
            self.basis.push(x);
            true
        } else {
            false
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct DimensionReport {
    pub real_dimension: usize,
    pub complex_dimension: usize,
    pub generator_real_dimension: usize,
    pub depth_reached: usize,
    pub closed: bool,
}

/// Real rank of the bracket closure of `generators`, at most `max_depth` rounds.
pub fn closure_dimension(generators: &[PolyVectorField], max_depth: usize) -> DimensionReport {
    let mut span = SpanTracker::new();
    for g in generators {
        span.offer(g.clone());
    }
    let generator_real_dimension = span.real.rank();
    let mut frontier_start = 0;
    let mut depth = 0;
    let mut closed = false;
    while depth < max_depth {
        let len = span.basis.len();
        let pairs: Vec<(usize, usize)> = (0..len)
            .flat_map(|i| ((i + 1)..len).map(move |j| (i, j)))
            .filter(|&(_, j)| j >= frontier_start)
            .collect();
        let basis = &span.basis;
        let brackets = crate::par::map(&pairs, |&(i, j)| lie_bracket(&basis[i], &basis[j]));
        depth += 1;
        let mut added = false;
        for b in brackets {
            if !b.is_zero() {
                added |= span.offer(b);
            }
        }
        if !added {
            closed = true;
            break;
        }
        frontier_start = len;
    }
    DimensionReport {
        real_dimension: span.real.rank(),
        complex_dimension: span.complex.rank(),
        generator_real_dimension,
        depth_reached: depth,
        closed,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraReport {
    pub params: ModelParams,
    pub relations: Vec<RelationCheck>,
    pub t_is_trace_of_mixed: bool,
    pub dimension_computed: usize,
    pub dimension_complex: usize,
    pub dimension_claimed: usize,
    pub dimension_closed: bool,
}

impl AlgebraReport {
    pub fn all_hold(&self) -> bool {
        self.t_is_trace_of_mixed && self.relations.iter().all(|r| r.holds)
    }

    pub fn relation(&self, group: &str, name: &str) -> Option<&RelationCheck> {
        self.relations.iter().find(|r| r.group == group && r.name == name)
    }
}

pub const DIMENSION_DEPTH_CAP: usize = 4;

pub fn verify_algebra(params: &Arc<ModelParams>) -> AlgebraReport {
    let m = build_metric(params);
    let s = build_symplectic_form(&m);
    let tf = TFields::build(&s);
    let n = params.n();
    let mut relations = deformed_relations(&tf, params);
    relations.extend(poisson_relations(&s));
    if params.is_flat() {
        relations.extend(contracted_relations(&tf, params));
        relations.extend(oscillator_relations(&tf, params));
    }
    let trace = tf.mixed.iter().enumerate().fold(PolyVectorField::zero(params), |acc, (a, row)| acc.add(&row[a]));
    let dim = closure_dimension(&tf.generators(), DIMENSION_DEPTH_CAP);
    AlgebraReport {
        params: (**params).clone(),
        relations,
        t_is_trace_of_mixed: trace == tf.t,
        dimension_computed: dim.real_dimension,
        dimension_complex: dim.complex_dimension,
        dimension_claimed: n * (n + 4),
        dimension_closed: dim.closed,
    }
}

/// On the unit disk (`n = 1`, `k = −4`) the older observables `(1+zz̄)/(1−zz̄)`,
/// `z/(1−zz̄)`, `z̄/(1−zz̄)` equal `2H + 1`, `N¹`, `N^1̄`.
pub fn disk_cross_check(params: &Arc<ModelParams>) -> Option<bool> {
    if params.n() != 1 || *params.k() != BigRational::from_integer((-4).into()) {
        return None;
    }
    let zz = &Poly::z(1, 0) * &Poly::zb(1, 0);
    let one = Poly::one(1);
    let h_old = AFrac::new(params, &one + &zz, 1);
    let n_old = AFrac::new(params, Poly::z(1, 0), 1);
    let nb_old = AFrac::new(params, Poly::zb(1, 0), 1);
    let h = Observable::h(params).value;
    let affine = &h.scale(&GaussRat::from_int(2)) + &AFrac::one(params);
    Some(h_old == affine && n_old == Observable::n_holo(params, 0).value && nb_old == Observable::n_anti(params, 0).value)
}
