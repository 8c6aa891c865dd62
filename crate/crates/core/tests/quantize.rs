use defosc::fock::FockBasis;
use defosc::geometry::KahlerStructure;
use defosc::observables::{poisson, Observable};
use defosc::quantize::*;
use defosc::symcore::{GaussRat, Poly};
use defosc::ModelParams;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn ks(n: usize, k: i64, h: (i64, i64)) -> KahlerStructure {
    KahlerStructure::new(&ModelParams::from_ints(n, k, 1, h.0, h.1).unwrap().shared())
}

fn binom(n: usize, k: usize) -> usize {
    (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
}

#[test]
fn quantized_generators_match_closed_forms() {
    for n in 1..=3 {
        for k in [-4i64, 0, 4] {
            for h in [(1, 1), (1, 3), (2, 5)] {
                let s = ks(n, k, h);
                let p = &s.params;
                assert_eq!(quantize_observable(&Observable::h(p), &s).unwrap(), stated_qh(p), "n={n} k={k}");
                for a in 0..n {
                    assert_eq!(quantize_observable(&Observable::n_holo(p, a), &s).unwrap(), stated_qn(p, a), "N n={n} k={k}");
                    assert_eq!(quantize_observable(&Observable::n_anti(p, a), &s).unwrap(), stated_qnbar(p, a), "Nbar n={n} k={k}");
                }
            }
        }
    }
}

#[test]
fn number_operator_spectrum() {
    for n in 1..=3 {
        let s = ks(n, -4, (1, 3));
        let cutoff = if n == 3 { 6 } else { 8 };
        let basis = FockBasis::new(n, cutoff);
        let rep = spectrum(&quantize_observable(&Observable::h(&s.params), &s).unwrap(), &basis);
        assert!(rep.exact);
        assert_eq!(rep.eigenvalues.len(), cutoff + 1);
        let h = BigRational::new(BigInt::from(1), BigInt::from(3));
        for (l, ev) in rep.eigenvalues.iter().enumerate() {
            let want = &h * BigRational::new(BigInt::from(2 * l + n), BigInt::from(2));
            assert_eq!(ev.value_exact.as_deref(), Some(GaussRat::from_rat(want).to_string().as_str()));
            assert_eq!(ev.multiplicity, binom(l + n - 1, n - 1));
            assert_eq!(ev.degree, Some(l));
        }
    }
}

#[test]
fn ladder_operators_shift_degree() {
    let s = ks(2, 4, (1, 1));
    let p = &s.params;
    assert_eq!(stated_qn(p, 0).degree_shifts(), vec![1]);
    assert_eq!(stated_qnbar(p, 1).degree_shifts(), vec![-1]);
    let basis = FockBasis::new(2, 4);
    let m = to_matrix(&stated_qnbar(p, 0), &basis);
    assert!(m.truncated.iter().all(|t| !t));
    let up = to_matrix(&stated_qn(p, 0), &basis);
    for j in 0..basis.len() {
        assert_eq!(up.truncated[j], basis.degree(j) == 4);
    }
    let rep = spectrum(&stated_qn(p, 0), &basis);
    assert!(!rep.exact);
    let worst = rep.eigenvalues.iter().map(|e| e.value.hypot(e.imag)).fold(0.0, f64::max);
    // nilpotent: Jordan blocks spread roundoff as eps^(1/size)
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn homomorphism_constant_is_minus_i_hbar() {
    for n in 1..=2 {
        for k in [-4i64, 0, 4] {
            for h in [(1, 1), (1, 2)] {
                let s = ks(n, k, h);
                let rep = verify_homomorphism(&s);
                assert!(rep.holds(), "n={n} k={k}: {:?}", rep.quantizer_failures);
                let want = GaussRat::new(BigRational::from_integer(0.into()), -BigRational::new(h.0.into(), h.1.into()));
                assert_eq!(rep.constant, Some(want.to_string()));
                let fam = Observable::family(&s.params).len();
                assert_eq!(rep.pairs_checked, fam * (fam + 1) / 2);
            }
        }
    }
}

#[test]
fn oscillator_commutators() {
    // flat chart: [ħ∂_a, z^b] = ħ δ
    let s = ks(2, 0, (1, 1));
    let p = &s.params;
    for a in 0..2 {
        for b in 0..2 {
            let c = op_commutator(&stated_qnbar(p, a), &stated_qn(p, b));
            let want = if a == b { HoloDiffOp::identity(2) } else { HoloDiffOp::zero(2) };
            assert_eq!(c, want);
        }
    }
    let nb = Observable::n_anti(p, 0);
    let nh = Observable::n_holo(p, 0);
    let br = quantize_observable(&poisson(&nb, &nh, &s.omega), &s).unwrap();
    assert_eq!(br, HoloDiffOp::identity(2).scale(&GaussRat::i()));
}

fn holo_poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec(((0u32..3, 0u32..3), -4i64..=4), 1..4).prop_map(|t| {
        t.into_iter().fold(Poly::zero(2), |acc, ((i, j), c)| &acc + &(&Poly::z(2, 0).pow(i) * &Poly::z(2, 1).pow(j)).scale(&GaussRat::from_int(c)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_matches_sequential_application(psi in holo_poly(), a in 0usize..2, b in 0usize..2, k in prop::sample::select(vec![-4i64, 0, 4])) {
        let s = ks(2, k, (1, 2));
        let p = &s.params;
        let ops = [stated_qh(p), stated_qn(p, a), stated_qnbar(p, b)];
        for x in &ops {
            for y in &ops {
                prop_assert_eq!(x.compose(y).apply(&psi), x.apply(&y.apply(&psi)));
                let c = op_commutator(x, y);
                prop_assert_eq!(c.apply(&psi), &x.apply(&y.apply(&psi)) - &y.apply(&x.apply(&psi)));
            }
        }
    }
}
