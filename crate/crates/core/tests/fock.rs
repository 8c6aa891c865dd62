use std::f64::consts::PI;

use defosc::fock::*;
use defosc::geometry::KahlerStructure;
use defosc::params::rat_to_f64;
use defosc::ModelParams;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

fn measure(n: usize, k: i64, h: (i64, i64), mode: MeasureMode) -> FockMeasure {
    FockMeasure::new(&ModelParams::from_ints(n, k, 1, h.0, h.1).unwrap().shared(), mode)
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn binom(n: i64, k: i64) -> BigRational {
    (1..=k).fold(BigRational::one(), |acc, i| acc * rat(n + 1 - i, i))
}

fn fact(m: i64) -> BigRational {
    (1..=m).fold(BigRational::one(), |acc, i| acc * rat(i, 1))
}

/// `∫_0^1 u^{s−1} (1−u)^e du` for integer `s ≥ 1`, `e ≥ 0`, by expanding `(1−u)^e`.
fn beta_by_expansion(s: i64, e: i64) -> BigRational {
    (0..=e).fold(BigRational::zero(), |acc, j| {
        let sign = if j % 2 == 0 { BigRational::one() } else { -BigRational::one() };
        acc + sign * binom(e, j) / rat(s + j, 1)
    })
}

/// Radial moment `∫ t^{s−1} F(t) dt` as an exact rational, where it has a polynomial form.
fn exact_moment(k: i64, hbar: &BigRational, e: &BigRational, s: i64) -> BigRational {
    if k == 0 {
        // Γ(s) ħ^s
        return fact(s - 1) * num_traits::pow(hbar.clone(), s as usize);
    }
    let c = rat(k.abs(), 4);
    let e = e.to_integer().to_i64().unwrap();
    let cs = num_traits::pow(c.recip(), s as usize);
    if k < 0 {
        // t = u/c, A = 1 − u
        cs * beta_by_expansion(s, e)
    } else {
        // u = ct/(1+ct): ∫ u^{s−1}(1−u)^{−e−s−1} du
        cs * beta_by_expansion(s, -e - s - 1)
    }
}

fn check_against_exact(n: usize, k: i64, h: (i64, i64), mode: MeasureMode, cutoff: usize) -> f64 {
    let m = measure(n, k, h, mode);
    let e = m.exponent();
    assert!(e.is_integer(), "choose parameters with an integer weight exponent");
    let basis = FockBasis::new(n, cutoff);
    let rep = monomial_norms(&basis, &m, 1e-12).unwrap();
    let hbar = rat(h.0, h.1);
    let mut worst = 0.0f64;
    for i in 0..basis.len() {
        let ex = basis.exponents(i);
        let l: i64 = ex.iter().map(|&x| x as i64).sum();
        let s = l + n as i64;
        let mf = ex.iter().fold(BigRational::one(), |acc, &x| acc * fact(x as i64));
        let norm_over_pi = mf / fact(s - 1) * exact_moment(k, &hbar, &e, s);
        let want = rat_to_f64(&norm_over_pi) * PI.powi(n as i32);
        worst = worst.max(((rep.norms[i] - want) / want).abs());
        if let Some(r) = exact_norm_coefficient(&m, ex) {
            assert_eq!(r, norm_over_pi, "exact coefficient {ex:?}");
        }
    }
    worst
}

#[test]
fn norms_match_exact_binomial_oracle() {
    type Case = (usize, i64, (i64, i64), MeasureMode, usize);
    let cases: &[Case] = &[
        (1, -4, (1, 3), MeasureMode::AdjointCorrected, 8),
        (1, -4, (1, 3), MeasureMode::Literal, 8),
        (2, -4, (2, 7), MeasureMode::AdjointCorrected, 5),
        (3, -4, (1, 4), MeasureMode::AdjointCorrected, 4),
        (1, 4, (1, 10), MeasureMode::AdjointCorrected, 8),
        (2, 4, (2, 21), MeasureMode::AdjointCorrected, 5),
        (1, 0, (1, 2), MeasureMode::AdjointCorrected, 8),
        (3, 0, (3, 2), MeasureMode::Literal, 4),
        (3, -1, (1, 1), MeasureMode::AdjointCorrected, 4),
    ];
    for &(n, k, h, mode, cut) in cases {
        let d = check_against_exact(n, k, h, mode, cut);
        assert!(d < 1e-10, "n={n} k={k} h={h:?} {mode}: {d}");
    }
}

#[test]
fn monomials_are_orthogonal_and_oracle_agrees() {
    for (n, k, h) in [(1, -4, (1, 1)), (2, 4, (1, 5)), (2, 0, (1, 1)), (2, -4, (1, 2))] {
        let m = measure(n, k, h, MeasureMode::AdjointCorrected);
        let rep = monomial_norms(&FockBasis::new(n, 4), &m, 1e-12).unwrap();
        assert!(rep.off_diagonal_max < 1e-12, "{}", rep.off_diagonal_max);
        assert!(rep.max_rel_dev_vs_oracle.unwrap() < 1e-10);
    }
}

#[test]
fn radial_moment_matches_plain_simpson() {
    // non-integer exponent on the ball: plain composite Simpson on a smooth integrand
    let m = measure(2, -4, (1, 3), MeasureMode::AdjointCorrected);
    let e = rat_to_f64(&m.exponent());
    assert!((e - 1.5).abs() < 1e-15);
    for s in [2.0, 3.5, 6.0] {
        let steps = 20000;
        let h = 1.0 / steps as f64;
        let f = |t: f64| t.powf(s - 1.0) * (1.0 - t).powf(e);
        let simpson: f64 = (0..steps)
            .map(|i| {
                let a = i as f64 * h;
                h / 6.0 * (f(a) + 4.0 * f(a + h / 2.0) + f(a + h))
            })
            .sum();
        let q = radial_moment(&m, s, 1e-12).unwrap().value;
        assert!(((q - simpson) / simpson).abs() < 1e-8, "s={s}: {q} vs {simpson}");
    }
}

#[test]
fn divergent_weights_are_reported() {
    let ball = measure(3, -4, (2, 1), MeasureMode::AdjointCorrected);
    assert!(matches!(radial_moment(&ball, 1.0, 1e-10), Err(FockError::Divergent(_))));
    let sphere = measure(1, 4, (1, 1), MeasureMode::AdjointCorrected);
    assert!(radial_moment(&sphere, 1.0, 1e-10).is_ok());
    assert!(matches!(monomial_norms(&FockBasis::new(1, 3), &sphere, 1e-10), Err(FockError::Divergent(_))));
}

#[test]
fn corrected_measure_makes_ladder_operators_adjoint() {
    for (n, k, h) in [(1, -4, (1, 3)), (2, -4, (1, 2)), (2, 4, (1, 10)), (1, 0, (1, 1)), (3, -1, (1, 1))] {
        let m = measure(n, k, h, MeasureMode::AdjointCorrected);
        let ks = KahlerStructure::new(&m.params);
        for a in 0..n {
            let rep = adjointness_check(&FockBasis::new(n, 4), &m, &ks, a, 1e-12).unwrap();
            assert!(rep.max_rel_deviation < 1e-9, "n={n} k={k}: {}", rep.max_rel_deviation);
            assert!(rep.raising_gaps.iter().all(|g| g.abs() < 1e-9));
        }
    }
}

#[test]
fn literal_measure_leaves_a_constant_gap() {
    for (n, k, h) in [(1, -4, (1, 3)), (2, -4, (1, 4)), (1, 4, (1, 10))] {
        let m = measure(n, k, h, MeasureMode::Literal);
        let ks = KahlerStructure::new(&m.params);
        let rep = adjointness_check(&FockBasis::new(n, 4), &m, &ks, 0, 1e-12).unwrap();
        let gap = -(k as f64) * h.0 as f64 / h.1 as f64 * (n as f64 + 1.0) / 8.0;
        assert!(!rep.raising_gaps.is_empty());
        for g in &rep.raising_gaps {
            assert!((g - gap).abs() < 1e-9, "n={n} k={k}: {g} vs {gap}");
        }
        assert!(rep.max_abs_deviation > 0.1 * gap.abs());
    }
}

#[test]
fn hermitian_structure_is_invariant_and_offset_breaks_it() {
    for (n, k) in [(1, -4), (2, 4), (2, 0), (3, -1)] {
        let m = measure(n, k, (1, 2), MeasureMode::AdjointCorrected);
        let ks = KahlerStructure::new(&m.params);
        let ok = hermitian_invariance_check(&ks.connection, &m, 12, 5);
        assert_eq!(ok.samples, 12);
        assert!(ok.max_residual < 1e-6, "{}", ok.max_residual);
        if k != 0 {
            let bad = hermitian_invariance_check(&ks.connection, &m.clone().with_offset(1), 12, 5);
            assert!(bad.max_residual > 1e-3, "{}", bad.max_residual);
        }
    }
}

#[test]
fn basis_dimension_is_binomial() {
    for n in 1..=3usize {
        for cut in 0..=6usize {
            let b = FockBasis::new(n, cut);
            let want = binom((n + cut) as i64, n as i64).to_integer().to_usize().unwrap();
            assert_eq!(b.len(), want);
            for i in 0..b.len() {
                assert_eq!(b.index_of(b.exponents(i)), Some(i));
            }
        }
    }
}
