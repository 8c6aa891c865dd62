use std::sync::Arc;

use defosc::geometry::{metric_lower, random_rational_point, FracMatrix, HermitianMetric};
use defosc::hproj::*;
use defosc::symcore::{AFrac, GaussRat, Poly};
use defosc::ModelParams;
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::SeedableRng;

fn params(n: usize, k: i64) -> Arc<ModelParams> {
    ModelParams::from_ints(n, k, 1, 1, 1).unwrap().shared()
}

fn model(p: &Arc<ModelParams>) -> HermitianMetric {
    HermitianMetric::from_lower(p, metric_lower(p)).unwrap()
}

fn scaled_identity(p: &Arc<ModelParams>, s: i64) -> FracMatrix {
    let n = p.n();
    (0..n).map(|a| (0..n).map(|b| if a == b { AFrac::one(p).scale(&GaussRat::from_int(s)) } else { AFrac::zero(p) }).collect()).collect()
}

fn flat(p: &Arc<ModelParams>) -> HermitianMetric {
    HermitianMetric::from_lower(p, scaled_identity(p, 1)).unwrap()
}

fn half() -> LogAPhi {
    LogAPhi::new(BigRational::new(BigInt::from(1), BigInt::from(2)))
}

/// `g_{ab̄}` of the model written out directly.
fn g_num(k: f64, z: &[Complex64]) -> DMatrix<Complex64> {
    let n = z.len();
    let c = k / 4.0;
    let a = 1.0 + c * z.iter().map(|w| w.norm_sqr()).sum::<f64>();
    DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { a } else { 0.0 };
        (Complex64::new(d, 0.0) - c * z[i].conj() * z[j]) / (a * a)
    })
}

fn d_holo(f: &dyn Fn(&[Complex64]) -> DMatrix<Complex64>, z: &[Complex64], b: usize) -> DMatrix<Complex64> {
    let h = 1e-6;
    let at = |d: Complex64| {
        let mut w = z.to_vec();
        w[b] += d;
        f(&w)
    };
    let dx = (at(Complex64::new(h, 0.0)) - at(Complex64::new(-h, 0.0))) * Complex64::new(0.5 / h, 0.0);
    let dy = (at(Complex64::new(0.0, h)) - at(Complex64::new(0.0, -h))) * Complex64::new(0.5 / h, 0.0);
    (dx - dy * Complex64::i()) * Complex64::new(0.5, 0.0)
}

/// `Γ^α_{βγ} = g^{ατ̄} ∂_β g_{γτ̄}` by finite differences.
fn gamma_num(k: f64, z: &[Complex64]) -> Vec<Vec<Vec<Complex64>>> {
    let n = z.len();
    let inv = g_num(k, z).try_inverse().unwrap();
    let dg: Vec<DMatrix<Complex64>> = (0..n).map(|b| d_holo(&|w| g_num(k, w), z, b)).collect();
    (0..n)
        .map(|al| (0..n).map(|be| (0..n).map(|ga| (0..n).map(|t| inv[(t, al)] * dg[be][(ga, t)]).sum()).collect()).collect())
        .collect()
}

/// Planarity residual from the written-out metric and differentiated curve.
fn planarity_oracle(k: f64, f: &dyn Fn(f64) -> Vec<Complex64>, t: f64) -> f64 {
    let h = 1e-4;
    let z = f(t);
    let n = z.len();
    let (m, p) = (f(t - h), f(t + h));
    let v: Vec<Complex64> = (0..n).map(|a| (p[a] - m[a]) / (2.0 * h)).collect();
    let acc: Vec<Complex64> = (0..n).map(|a| (p[a] - 2.0 * z[a] + m[a]) / (h * h)).collect();
    let gam = gamma_num(k, &z);
    let nab: Vec<Complex64> =
        (0..n).map(|a| acc[a] + (0..n).flat_map(|b| (0..n).map(move |c| (b, c))).map(|(b, c)| gam[a][b][c] * v[b] * v[c]).sum::<Complex64>()).collect();
    let g = g_num(k, &z);
    let ip = |x: &[Complex64], y: &[Complex64]| -> Complex64 { (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| g[(a, b)] * x[a] * y[b].conj()).sum() };
    let lam = ip(&nab, &v) / ip(&v, &v).re;
    let r: Vec<Complex64> = (0..n).map(|a| nab[a] - lam * v[a]).collect();
    ip(&r, &r).re.max(0.0).sqrt()
}

fn times() -> Vec<f64> {
    (0..41).map(|i| -1.0 + i as f64 * 0.05).collect()
}

#[test]
fn complex_geodesics_and_lines_are_planar() {
    type Curve = Box<dyn Fn(f64) -> Vec<Complex64>>;
    for k in [-4i64, 4] {
        let g = model(&params(2, k));
        let curves: Vec<Curve> = vec![
            Box::new(|t: f64| vec![Complex64::new(0.3, 0.0) * t.tanh(), Complex64::new(0.0, 0.4) * t.tanh()]),
            Box::new(|t: f64| vec![Complex64::from_polar(0.3 + 0.1 * t, 2.0 * t), Complex64::new(0.0, 0.0)]),
            Box::new(|t: f64| vec![Complex64::new(0.2 * t, 0.1 * t * t), Complex64::new(0.2 * t, 0.1 * t * t)]),
        ];
        for c in &curves {
            let s = SampledCurve::from_fn(times(), c, 1e-4).unwrap();
            let r = max_residual(&hplanarity_residual(&s, &g).unwrap());
            assert!(r < 1e-6, "k={k}: {r}");
        }
    }
    // in one complex dimension every curve is planar
    let g1 = model(&params(1, -4));
    let s = SampledCurve::from_fn(times(), |t| vec![Complex64::new(0.5 * t.sin(), 0.3 * t * t)], 1e-4).unwrap();
    assert!(max_residual(&hplanarity_residual(&s, &g1).unwrap()) < 1e-6);
}

#[test]
fn bent_curve_residual_matches_independent_computation() {
    let f = |t: f64| vec![Complex64::new(0.6 * t.tanh(), 0.0), Complex64::new(0.0, 0.5 * t)];
    for k in [-4i64, -1, 0, 4] {
        let g = model(&params(2, k));
        let ts: Vec<f64> = (0..21).map(|i| -0.8 + i as f64 * 0.08).collect();
        let fits = hplanarity_residual(&SampledCurve::from_fn(ts.clone(), f, 1e-4).unwrap(), &g).unwrap();
        for (fit, &t) in fits.iter().zip(&ts) {
            let want = planarity_oracle(k as f64, &f, t);
            let got = fit.residual.unwrap();
            assert!((got - want).abs() < 1e-5 * (1.0 + want), "k={k} t={t}: {got} vs {want}");
        }
        assert!(max_residual(&fits) > 0.1);
    }
}

#[test]
fn sampled_and_csv_curves_agree() {
    let f = |t: f64| vec![Complex64::new(0.6 * t.tanh(), 0.0), Complex64::new(0.0, 0.5 * t)];
    let ts: Vec<f64> = (0..801).map(|i| -0.8 + i as f64 * 0.002).collect();
    let mut text = String::from("t,re1,im1,re2,im2\n");
    for &t in &ts {
        let z = f(t);
        text.push_str(&format!("{t},{},{},{},{}\n", z[0].re, z[0].im, z[1].re, z[1].im));
    }
    let g = model(&params(2, -4));
    let from_csv = hplanarity_residual(&SampledCurve::from_csv(text.as_bytes()).unwrap(), &g).unwrap();
    let from_fn = hplanarity_residual(&SampledCurve::from_fn(ts, f, 1e-4).unwrap(), &g).unwrap();
    for (a, b) in from_csv.iter().zip(&from_fn).skip(1).take(799) {
        assert!((a.residual.unwrap() - b.residual.unwrap()).abs() < 1e-4);
    }
    assert!(SampledCurve::from_samples(vec![0.0, 0.0, 1.0], vec![vec![Complex64::new(0.0, 0.0)]; 3]).is_err());
}

#[test]
fn model_metric_is_flat_for_every_curvature() {
    for n in 1..=3 {
        for k in [-4i64, -1, 0, 1, 4] {
            let p = params(n, k);
            let m = model(&p);
            let cert = flatness_certificate(&m);
            assert!(cert.flat, "n={n} k={k}");
            // φ_b = −(k/4) z̄^b / A
            let want: Vec<AFrac> = (0..n).map(|b| (&AFrac::zb(&p, b) * &AFrac::a_pow(&p, -1)).scale(&-p.quarter_k())).collect();
            assert_eq!(cert.phi.unwrap(), want);
            assert!(flatness_certificate_lower(&p, &metric_lower(&p)).flat);
        }
    }
}

#[test]
fn perturbed_metric_is_not_flat() {
    for k in [-4i64, 0, 4] {
        let p = params(2, k);
        let mut g = metric_lower(&p);
        g[0][0] = &g[0][0] + &AFrac::from_poly(&p, Poly::parse("1/10 * z1^2 * zb1^2", 2).unwrap());
        assert!(!flatness_certificate_lower(&p, &g).flat, "k={k}");
        g[1][0] = &g[1][0] + &AFrac::zb(&p, 0);
        assert!(HermitianMetric::from_lower(&p, g).is_err());
    }
}

#[test]
fn barred_residual_is_conjugate_of_printed() {
    for n in 1..=2 {
        for k in [-4i64, 4] {
            let p = params(n, k);
            for phi in [LogAPhi::zero(), half(), LogAPhi::new(BigRational::from_integer(BigInt::from(-2)))] {
                let r = mapping_residual(&HprojPair::new(model(&p), flat(&p), phi));
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            assert_eq!(r.barred[a][b][c], r.printed[b][a][c].conj());
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn printed_residual_of_the_flat_pair() {
    for n in 1..=2 {
        for k in [-4i64, 4] {
            let p = params(n, k);
            let zero = mapping_residual(&HprojPair::new(model(&p), flat(&p), LogAPhi::zero()));
            assert!(!zero.printed_vanishes(), "n={n} k={k}");
            let r = mapping_residual(&HprojPair::new(model(&p), flat(&p), half()));
            assert!(!r.printed_vanishes(), "n={n} k={k}");
            assert!(r.sign_flipped_vanishes(), "n={n} k={k}");
        }
    }
    let p = params(1, -4);
    let r = mapping_residual(&HprojPair::new(model(&p), flat(&p), half()));
    assert_eq!(r.printed[0][0][0], (&AFrac::zb(&p, 0) * &AFrac::a_pow(&p, -5)).scale(&GaussRat::from_int(2)));
}

#[test]
fn sampled_residual_matches_finite_differences() {
    let k = -4.0;
    let p = params(2, -4);
    let pair = HprojPair::new(model(&p), flat(&p), half());
    let r = mapping_residual(&pair);
    let pts = vec![
        vec![Complex64::new(0.1, 0.2), Complex64::new(-0.3, 0.05)],
        vec![Complex64::new(0.4, -0.1), Complex64::new(0.2, 0.3)],
    ];
    let coeff = 0.5;
    let a_of = |z: &[Complex64]| 1.0 + k / 4.0 * z.iter().map(|w| w.norm_sqr()).sum::<f64>();
    // b = e^{2φ} g g with g' = identity
    let b_num = |z: &[Complex64]| {
        let g = g_num(k, z);
        (&g * &g) * Complex64::new(a_of(z).powf(2.0 * coeff), 0.0)
    };
    let mut worst = 0.0f64;
    for z in &pts {
        let g = g_num(k, z);
        let gam = gamma_num(k, z);
        let b = b_num(z);
        let db: Vec<DMatrix<Complex64>> = (0..2).map(|c| d_holo(&b_num, z, c)).collect();
        let e2 = a_of(z).powf(2.0 * coeff);
        // ∂_μφ = coeff (k/4) z̄^μ / A
        let dphi: Vec<Complex64> = (0..2).map(|m| z[m].conj() * (coeff * k / 4.0 / a_of(z))).collect();
        for al in 0..2 {
            let phi_p: Complex64 = e2 * (0..2).map(|m| dphi[m] * g[(al, m)]).sum::<Complex64>();
            for be in 0..2 {
                for ga in 0..2 {
                    let mut v = db[ga][(al, be)];
                    for s in 0..2 {
                        v -= gam[s][ga][al] * b[(s, be)];
                    }
                    v -= 2.0 * phi_p * g[(ga, be)];
                    worst = worst.max(v.norm());
                }
            }
        }
    }
    let got = r.sampled_max(&pair, &pts).unwrap();
    assert!((got - worst).abs() < 1e-6 * (1.0 + worst), "{got} vs {worst}");
}

#[test]
fn lambda_roots_are_real_at_random_points() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for k in [-4i64, 4] {
        let p = params(2, k);
        let pair = HprojPair::new(model(&p), flat(&p), half());
        for _ in 0..50 {
            let z = random_rational_point(&mut rng, &p);
            let cl = classify_4d(&pair, &z).unwrap();
            assert_ne!(cl.case_tag, CaseTag::Degenerate);
            assert!(!cl.discriminant.starts_with('-'));
            let flat_roots: Vec<f64> = cl.roots.iter().flat_map(|&(r, m)| std::iter::repeat_n(r, m)).collect();
            assert_eq!(flat_roots.len(), 2);
            for (a, b) in flat_roots.iter().zip(&cl.cholesky_roots) {
                assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn roots_scale_inversely_with_the_second_metric() {
    let p = params(2, -4);
    let pt = [GaussRat::ratio(1, 3), GaussRat::ratio(-1, 5)];
    let base = classify_4d(&HprojPair::new(model(&p), flat(&p), LogAPhi::zero()), &pt).unwrap();
    let five = HermitianMetric::from_lower(&p, scaled_identity(&p, 5)).unwrap();
    let scaled = classify_4d(&HprojPair::new(model(&p), five, LogAPhi::zero()), &pt).unwrap();
    assert_eq!(base.case_tag, scaled.case_tag);
    for (a, b) in base.roots.iter().zip(&scaled.roots) {
        assert!((a.0 / 5.0 - b.0).abs() < 1e-12);
    }
}

#[test]
fn proportional_pairs_are_rescalings() {
    let p = params(2, -4);
    let third: FracMatrix = metric_lower(&p).iter().map(|r| r.iter().map(|v| v.scale(&GaussRat::ratio(1, 3))).collect()).collect();
    let pair = HprojPair::new(model(&p), HermitianMetric::from_lower(&p, third).unwrap(), LogAPhi::zero());
    let cl = classify_4d(&pair, &[GaussRat::ratio(1, 4), GaussRat::ratio(1, 5)]).unwrap();
    assert_eq!(cl.case_tag, CaseTag::Rescaling);
    assert_eq!(cl.roots.len(), 1);
    assert!((cl.roots[0].0 - 3.0).abs() < 1e-12 && cl.roots[0].1 == 2);

    let g: Mat2 = [[GaussRat::from_int(2), GaussRat::ratio(1, 2)], [GaussRat::ratio(1, 2), GaussRat::from_int(1)]];
    let b = g.clone().map(|r| r.map(|v| &v * &GaussRat::from_int(3)));
    let cl = classify_pencil(&g, &b, 1.0).unwrap();
    assert_eq!(cl.case_tag, CaseTag::Rescaling);
    assert!((cl.roots[0].0 - 3.0).abs() < 1e-12);
    let bad: Mat2 = [[GaussRat::from_int(1), GaussRat::i()], [GaussRat::i(), GaussRat::from_int(1)]];
    assert!(classify_pencil(&bad, &g, 1.0).is_err());
}

#[test]
fn flat_pair_at_the_reference_point() {
    let p = params(2, -4);
    let cl = classify_4d(&HprojPair::new(model(&p), flat(&p), LogAPhi::zero()), &[GaussRat::ratio(1, 2), GaussRat::from_int(0)]).unwrap();
    assert_eq!(cl.case_tag, CaseTag::Generic);
    assert_eq!(cl.discriminant, "65536/59049");
    assert!((cl.roots[0].0 - 4.0 / 3.0).abs() < 1e-12);
    assert!((cl.roots[1].0 - 16.0 / 9.0).abs() < 1e-12);
    assert!(classify_4d(&HprojPair::new(model(&params(1, -4)), flat(&params(1, -4)), LogAPhi::zero()), &[GaussRat::ratio(1, 2)]).is_err());
}
