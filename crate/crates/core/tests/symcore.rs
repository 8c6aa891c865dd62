use std::sync::Arc;

use defosc::symcore::{AFrac, GaussRat, MultiIndex, Poly, Var};
use defosc::ModelParams;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;

const N: usize = 2;

fn rat() -> impl Strategy<Value = BigRational> {
    (-6i64..=6, 1i64..=4).prop_map(|(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q)))
}

fn scalar() -> impl Strategy<Value = GaussRat> {
    (rat(), rat()).prop_map(|(a, b)| GaussRat::new(a, b))
}

fn monomial() -> impl Strategy<Value = MultiIndex> {
    (prop::collection::vec(0u32..3, N), prop::collection::vec(0u32..3, N)).prop_map(|(holo, anti)| MultiIndex { holo, anti })
}

fn poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec((monomial(), scalar()), 0..4).prop_map(|t| Poly::from_terms(N, t))
}

fn params(k: i64) -> Arc<ModelParams> {
    ModelParams::from_ints(N, k, 1, 1, 1).unwrap().shared()
}

fn afrac() -> impl Strategy<Value = AFrac> {
    (poly(), 0u32..3, prop::sample::select(vec![-4i64, 0, 4])).prop_map(|(p, m, k)| AFrac::new(&params(k), p, m))
}

fn pair_same_chart() -> impl Strategy<Value = (AFrac, AFrac, AFrac)> {
    (poly(), poly(), poly(), 0u32..3, 0u32..3, 0u32..3, prop::sample::select(vec![-4i64, 0, 4])).prop_map(
        |(a, b, c, i, j, l, k)| {
            let p = params(k);
            (AFrac::new(&p, a, i), AFrac::new(&p, b, j), AFrac::new(&p, c, l))
        },
    )
}

fn point() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-0.4f64..0.4, -0.4f64..0.4).prop_map(|(a, b)| Complex64::new(a, b)), N)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn poly_ring_laws(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        prop_assert_eq!(&a * &Poly::one(N), a.clone());
    }

    #[test]
    fn afrac_ring_laws((a, b, c) in pair_same_chart()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn leibniz_and_mixed_partials((a, b, _c) in pair_same_chart(), i in 0..N, j in 0..N, bar in any::<bool>()) {
        let v = if bar { Var::Zb(i) } else { Var::Z(i) };
        prop_assert_eq!((&a * &b).deriv(v), &(&a.deriv(v) * &b) + &(&a * &b.deriv(v)));
        let w = Var::Zb(j);
        prop_assert_eq!(a.deriv(v).deriv(w), a.deriv(w).deriv(v));
    }

    #[test]
    fn canonical_form_is_idempotent_and_unique(a in afrac(), extra in 0u32..3) {
        prop_assert_eq!(a.clone().canonical(), a.clone());
        // multiplying numerator and denominator by A^extra gives the same element
        let p = a.params().clone();
        let padded = AFrac::new(&p, a.num() * AFrac::a_pow(&p, extra as i32).num(), a.apow() + extra);
        prop_assert_eq!(padded, a);
    }

    #[test]
    fn display_parse_roundtrip(a in afrac()) {
        let back = AFrac::parse(&a.to_string(), a.params()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn conjugation_is_an_involution_and_matches_evaluation(a in afrac(), z in point()) {
        prop_assert_eq!(a.conj().conj(), a.clone());
        let lhs = a.conj().eval(&z).unwrap();
        let rhs = a.eval(&z).unwrap().conj();
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
    }

    #[test]
    fn evaluation_is_a_homomorphism((a, b, _c) in pair_same_chart(), z in point()) {
        let prod = (&a * &b).eval(&z).unwrap();
        let sep = a.eval(&z).unwrap() * b.eval(&z).unwrap();
        prop_assert!((prod - sep).norm() <= 1e-9 * (1.0 + sep.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivative_matches_finite_difference(a in afrac(), z in point(), i in 0..N) {
        // ∂_i = (∂_x − i∂_y)/2
        let h = 1e-6;
        let shift = |dz: Complex64| {
            let mut w = z.clone();
            w[i] += dz;
            a.eval(&w).unwrap()
        };
        let dx = (shift(Complex64::new(h, 0.0)) - shift(Complex64::new(-h, 0.0))) / (2.0 * h);
        let dy = (shift(Complex64::new(0.0, h)) - shift(Complex64::new(0.0, -h))) / (2.0 * h);
        let fd = (dx - Complex64::i() * dy) / 2.0;
        let exact = a.ddz(i, false).eval(&z).unwrap();
        prop_assert!((fd - exact).norm() <= 1e-5 * (1.0 + exact.norm()));
    }

    #[test]
    fn exact_division_inverts_multiplication(a in poly(), b in poly()) {
        prop_assume!(!b.is_zero());
        let q = (&a * &b).div_exact(&b);
        prop_assert_eq!(q, Some(a));
    }
}

#[test]
fn gaussian_rationals_field_axioms() {
    let a = GaussRat::new(BigRational::new(3.into(), 4.into()), BigRational::new((-2).into(), 5.into()));
    assert_eq!(&a * &a.inv().unwrap(), GaussRat::from_int(1));
    assert!(GaussRat::from_int(0).inv().is_none());
    assert_eq!(&GaussRat::i() * &GaussRat::i(), GaussRat::from_int(-1));
    assert_eq!(a.to_string().parse::<GaussRat>().unwrap(), a);
}

#[test]
fn a_is_one_in_the_flat_chart() {
    let p = params(0);
    assert_eq!(AFrac::a(&p), AFrac::one(&p));
    assert_eq!(AFrac::a_pow(&p, -3), AFrac::one(&p));
}

#[test]
fn a_powers_cancel() {
    let p = params(-4);
    assert_eq!(&AFrac::a_pow(&p, 3) * &AFrac::a_pow(&p, -3), AFrac::one(&p));
    assert_eq!(AFrac::a(&p).ddz(0, false), AFrac::zb(&p, 0).scale(&GaussRat::from_int(-1)));
}

#[test]
fn mismatched_charts_are_rejected() {
    let a = AFrac::z(&params(4), 0);
    let b = AFrac::z(&params(-4), 0);
    assert!(a.try_add(&b).is_err());
    assert!(a.try_mul(&b).is_err());
}
