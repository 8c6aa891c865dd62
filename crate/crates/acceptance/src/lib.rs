//! The acceptance criteria, one function each.

use std::sync::Arc;

use defosc::fock::{adjointness_check, monomial_norms, FockBasis, FockMeasure, MeasureMode};
use defosc::geometry::{check_theorem1, metric_lower, ConnectionForm, HermitianMetric, KahlerStructure};
use defosc::hproj::{classify_4d, flatness_certificate, flatness_certificate_lower, mapping_residual, CaseTag, HprojPair, LogAPhi};
use defosc::observables::{check_preservation, general_solution, verify_algebra, Observable, SignVerdict};
use defosc::quantize::{quantize, quantize_observable, quantized_section_op, spectrum, stated_qh, stated_qn, stated_qnbar, verify_homomorphism};
use defosc::symcore::{AFrac, GaussRat, MultiIndex, Poly};
use defosc::ModelParams;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};

pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub budget_s: f64,
    pub run: fn() -> Verdict,
}

pub const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, title: "exact algebra tables", budget_s: 10.0, run: algebra_tables },
    Criterion { id: 2, title: "contraction and oscillator relations", budget_s: 5.0, run: contraction },
    Criterion { id: 3, title: "quantizer reproduces the generator operators", budget_s: 10.0, run: quantizer },
    Criterion { id: 4, title: "number operator spectrum", budget_s: 5.0, run: number_spectrum },
    Criterion { id: 5, title: "quantization homomorphism", budget_s: 30.0, run: homomorphism },
    Criterion { id: 6, title: "d alpha = omega", budget_s: 5.0, run: connection_curvature },
    Criterion { id: 7, title: "Fock norms against Gamma and Beta oracles", budget_s: 60.0, run: fock_norms },
    Criterion { id: 8, title: "adjointness gap", budget_s: 60.0, run: adjointness_gap },
    Criterion { id: 9, title: "polarization preservation", budget_s: 10.0, run: polarization },
    Criterion { id: 10, title: "H-projective flatness and classification", budget_s: 10.0, run: hprojective },
    Criterion { id: 11, title: "algebra dimension report", budget_s: 10.0, run: dimension_report },
];

fn params(n: usize, k: i64, h: (i64, i64)) -> Arc<ModelParams> {
    ModelParams::from_ints(n, k, 1, h.0, h.1).expect("valid parameters").shared()
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

const DNK: [(usize, i64); 9] = [(1, -4), (1, 0), (1, 4), (2, -4), (2, 0), (2, 4), (3, -4), (3, 0), (3, 4)];

fn grid5() -> impl Iterator<Item = (usize, i64)> {
    (1..=3).flat_map(|n| [-4, -1, 0, 1, 4].map(|k| (n, k)))
}

fn sign(v: SignVerdict) -> &'static str {
    match v {
        SignVerdict::AsStated => "as stated",
        SignVerdict::Opposite => "opposite sign",
        SignVerdict::Differs => "differs",
    }
}

fn algebra_tables() -> Verdict {
    let mut failures = Vec::new();
    let mut checked = 0;
    for (n, k) in DNK {
        let rep = verify_algebra(&params(n, k, (1, 1)));
        for r in rep.relations.iter().filter(|r| r.group == "deformed" || r.group == "poisson") {
            checked += 1;
            if !r.holds {
                failures.push(format!("n={n} k={k} {}: {} ({})", r.group, r.name, sign(r.computed_sign)));
            }
        }
    }
    let pass = failures.is_empty();
    let detail = if pass {
        format!("{checked} relations hold exactly")
    } else {
        let mut names: Vec<String> = failures.iter().map(|f| f.split_once(' ').unwrap().1.split_once(' ').unwrap().1.to_string()).collect();
        names.sort();
        names.dedup();
        format!("{} of {checked} relation instances fail; distinct: {}", failures.len(), names.join("; "))
    };
    Verdict { pass, detail }
}

fn contraction() -> Verdict {
    let mut contracted = Vec::new();
    let mut oscillator = Vec::new();
    let mut bar_t_sign = Vec::new();
    for n in 1..=3 {
        let rep = verify_algebra(&params(n, 0, (1, 1)));
        for r in &rep.relations {
            match r.group.as_str() {
                "contracted" if !r.holds => contracted.push(format!("n={n} {} ({})", r.name, sign(r.computed_sign))),
                "oscillator" if !r.holds => oscillator.push(format!("n={n} {}", r.name)),
                _ => {}
            }
        }
        if let Some(r) = rep.relation("deformed", "[T^abar,T] = -i T^abar") {
            bar_t_sign.push(sign(r.computed_sign));
        }
    }
    bar_t_sign.dedup();
    let osc = if oscillator.is_empty() { "oscillator relations hold".to_string() } else { format!("oscillator failures: {}", oscillator.join("; ")) };
    let con = if contracted.is_empty() { "k=0 table holds term by term".to_string() } else { format!("k=0 table failures: {}", contracted.join("; ")) };
    Verdict {
        pass: contracted.is_empty() && oscillator.is_empty(),
        detail: format!("{osc}; {con}; [T^abar,T] = -i T^abar computed {}", bar_t_sign.join("/")),
    }
}

fn sample_psi(n: usize) -> Poly {
    let terms = [vec![0u32; n], (0..n).map(|i| (i % 2) as u32 + 1).collect::<Vec<_>>(), (0..n).map(|i| if i == 0 { 3 } else { 0 }).collect()];
    Poly::from_terms(n, terms.into_iter().enumerate().map(|(i, m)| (MultiIndex::holomorphic(&m), GaussRat::from_int(i as i64 + 2))))
}

fn quantizer() -> Verdict {
    let mut bad = Vec::new();
    for (n, k) in DNK {
        let ks = KahlerStructure::new(&params(n, k, (1, 3)));
        let p = &ks.params;
        let mut cases = vec![(Observable::h(p), stated_qh(p))];
        for a in 0..n {
            cases.push((Observable::n_holo(p, a), stated_qn(p, a)));
            cases.push((Observable::n_anti(p, a), stated_qnbar(p, a)));
        }
        let psi = sample_psi(n);
        for (f, stated) in cases {
            let cert = check_preservation(&f, &ks.metric);
            let q = match quantize(&f, &cert, &ks) {
                Ok(q) => q,
                Err(e) => {
                    bad.push(format!("n={n} k={k} {}: {e}", f.label));
                    continue;
                }
            };
            if q != stated {
                bad.push(format!("n={n} k={k} {}: {q} differs from {stated}", f.label));
            }
            // the full section operator on a holomorphic section agrees with its holomorphic restriction
            let full = quantized_section_op(&f, &cert, &ks).map(|op| op.apply(&AFrac::from_poly(p, psi.clone())));
            let closure = full.map(|v| &v - &AFrac::from_poly(p, q.apply(&psi)));
            if !closure.as_ref().is_ok_and(AFrac::is_zero) {
                bad.push(format!("n={n} k={k} {}: nonzero holomorphic closure residual", f.label));
            }
        }
    }
    Verdict { pass: bad.is_empty(), detail: if bad.is_empty() { "Q H, Q N, Q Nbar equal the closed forms; closure residual 0".into() } else { bad.join("; ") } }
}

fn binom(n: usize, k: usize) -> usize {
    (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
}

fn number_spectrum() -> Verdict {
    let mut bad = Vec::new();
    let hbar = rat(2, 5);
    for n in 1..=3 {
        for k in [-4, 0, 4] {
            let ks = KahlerStructure::new(&params(n, k, (2, 5)));
            let Ok(q) = quantize_observable(&Observable::h(&ks.params), &ks) else {
                bad.push(format!("n={n} k={k}: H does not quantize"));
                continue;
            };
            let rep = spectrum(&q, &FockBasis::new(n, 8));
            let want: Vec<(String, usize)> =
                (0..=8).map(|l| (GaussRat::from_rat(&hbar * rat(2 * l as i64 + n as i64, 2)).to_string(), binom(l + n - 1, n - 1))).collect();
            let got: Vec<(String, usize)> = rep.eigenvalues.iter().map(|e| (e.value_exact.clone().unwrap_or_default(), e.multiplicity)).collect();
            if !rep.exact || got != want {
                bad.push(format!("n={n} k={k}: {got:?}"));
            }
        }
    }
    Verdict { pass: bad.is_empty(), detail: if bad.is_empty() { "hbar (l + n/2) with multiplicity C(l+n-1, n-1), n <= 3, L = 8".into() } else { bad.join("; ") } }
}

fn homomorphism() -> Verdict {
    let mut bad = Vec::new();
    let mut pairs = 0;
    for n in 1..=2 {
        for k in [-4, 0, 4] {
            for h in [(1, 1), (1, 3)] {
                let rep = verify_homomorphism(&KahlerStructure::new(&params(n, k, h)));
                pairs += rep.pairs_checked;
                let want = GaussRat::new(rat(0, 1), -rat(h.0, h.1)).to_string();
                if !rep.holds() || rep.constant.as_deref() != Some(want.as_str()) {
                    bad.push(format!("n={n} k={k} hbar={}/{}: constant {:?}, {} failures", h.0, h.1, rep.constant, rep.quantizer_failures.len() + rep.prequantizer_failures.len()));
                }
            }
        }
    }
    Verdict { pass: bad.is_empty(), detail: if bad.is_empty() { format!("c = -i hbar on {pairs} pairs") } else { bad.join("; ") } }
}

fn connection_curvature() -> Verdict {
    let mut bad: Vec<String> = grid5()
        .filter(|&(n, k)| {
            let ks = KahlerStructure::new(&params(n, k, (1, 1)));
            !check_theorem1(&ks.connection, &ks.omega)
        })
        .map(|(n, k)| format!("fails at n={n} k={k}"))
        .collect();
    let ks = KahlerStructure::new(&params(2, -4, (1, 1)));
    let mut alpha = ks.connection.alpha_components.clone();
    alpha[0] = &alpha[0] + &AFrac::zb(&ks.params, 1);
    if check_theorem1(&ConnectionForm { params: ks.params.clone(), alpha_components: alpha }, &ks.omega) {
        bad.push("corrupted connection not detected".into());
    }
    Verdict { pass: bad.is_empty(), detail: if bad.is_empty() { "exact on 15 (n,k); corruption detected".into() } else { bad.join("; ") } }
}

fn fock_norms() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut err = None;
    // k = 0, hbar = 1: pi l!;  k = -4, hbar = 1/3: pi B(l+1, 3) = 2 pi / ((l+1)(l+2)(l+3))
    type Oracle = (i64, (i64, i64), fn(u32) -> f64);
    let oracles: [Oracle; 2] = [
        (0, (1, 1), |l| std::f64::consts::PI * (1..=l).map(f64::from).product::<f64>()),
        (-4, (1, 3), |l| 2.0 * std::f64::consts::PI / f64::from((l + 1) * (l + 2) * (l + 3))),
    ];
    for (k, h, oracle) in oracles {
        let m = FockMeasure::new(&params(1, k, h), MeasureMode::AdjointCorrected);
        match monomial_norms(&FockBasis::new(1, 12), &m, 1e-12) {
            Ok(rep) => {
                for (l, v) in rep.norms.iter().enumerate() {
                    let o = oracle(l as u32);
                    worst = worst.max(((v - o) / o).abs());
                }
            }
            Err(e) => err = Some(e.to_string()),
        }
    }
    match err {
        Some(e) => Verdict { pass: false, detail: e },
        None => Verdict { pass: worst < 1e-6, detail: format!("max relative deviation {worst:.3e} for l <= 12") },
    }
}

/// Raising gap `(QN)_{l+1,l} − (QN̄)†_{l+1,l}` from the Beta norms `ν_l = π B(l+1, e+1)`, n = 1, k = −4.
fn beta_gap(hbar: f64, e: u32, l: u32) -> f64 {
    let beta = |a: u32, b: u32| -> f64 {
        let f = |m: u32| (1..=m).map(f64::from).product::<f64>();
        f(a - 1) * f(b - 1) / f(a + b - 1)
    };
    let (nu_l, nu_next) = (beta(l + 1, e + 1), beta(l + 2, e + 1));
    // QN̄ = ħ∂ and QN z^l = (ħ l + 1 + ħ) z^{l+1}
    let adj = hbar * f64::from(l + 1) * nu_l / nu_next;
    hbar * f64::from(l) + 1.0 + hbar - adj
}

fn adjointness_gap() -> Verdict {
    let p = params(1, -4, (1, 3));
    let ks = KahlerStructure::new(&p);
    let basis = FockBasis::new(1, 10);
    let hbar = 1.0 / 3.0;
    let corrected = adjointness_check(&basis, &FockMeasure::new(&p, MeasureMode::AdjointCorrected), &ks, 0, 1e-12);
    let literal = adjointness_check(&basis, &FockMeasure::new(&p, MeasureMode::Literal), &ks, 0, 1e-12);
    let (Ok(c), Ok(l)) = (corrected, literal) else {
        return Verdict { pass: false, detail: "quadrature failed".into() };
    };
    let oracle_corr = (0..10).map(|i| beta_gap(hbar, 2, i).abs()).fold(0.0, f64::max);
    let oracle_lit = (0..10).map(|i| (beta_gap(hbar, 1, i) - hbar).abs()).fold(0.0, f64::max);
    let lit_dev = l.raising_gaps.iter().map(|g| (g - hbar).abs()).fold(0.0, f64::max);
    let pass = c.max_abs_deviation < 1e-6 && lit_dev < 1e-6 && !l.raising_gaps.is_empty() && oracle_corr < 1e-12 && oracle_lit < 1e-12;
    Verdict {
        pass,
        detail: format!(
            "corrected max deviation {:.3e}; literal gap deviation from hbar {:.3e} over {} entries; Beta oracle gaps {:.1e} / {:.1e}",
            c.max_abs_deviation,
            lit_dev,
            l.raising_gaps.len(),
            oracle_corr,
            oracle_lit
        ),
    }
}

fn random_holomorphic(rng: &mut impl Rng, n: usize) -> Poly {
    let terms: Vec<(MultiIndex, GaussRat)> = (0..3)
        .map(|_| {
            let m: Vec<u32> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let c = GaussRat::new(rat(rng.random_range(-5..=5), rng.random_range(1..=4)), rat(rng.random_range(-5..=5), 1));
            (MultiIndex::holomorphic(&m), c)
        })
        .collect();
    Poly::from_terms(n, terms)
}

fn polarization() -> Verdict {
    let mut bad = Vec::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut members = 0;
    for (n, k) in DNK {
        let p = params(n, k, (1, 1));
        let m = HermitianMetric::from_lower(&p, metric_lower(&p)).expect("model metric");
        let mut fam = vec![Observable::h(&p)];
        for a in 0..n {
            fam.push(Observable::n_holo(&p, a));
            fam.push(Observable::n_anti(&p, a));
        }
        for f in &fam {
            if !check_preservation(f, &m).preserved {
                bad.push(format!("n={n} k={k} {}", f.label));
            }
        }
        for _ in 0..4 {
            let u: Vec<Poly> = (0..n).map(|_| random_holomorphic(&mut rng, n)).collect();
            let v = random_holomorphic(&mut rng, n);
            let f = general_solution(&p, &u, &v).expect("holomorphic data");
            members += 1;
            if !check_preservation(&f, &m).preserved {
                bad.push(format!("n={n} k={k} random member {}", f.value));
            }
        }
        let zb = AFrac::zb(&p, 0);
        let control = Observable::custom(&(&zb * &zb) * &AFrac::z(&p, 0), "zb1^2 z1");
        if check_preservation(&control, &m).preserved {
            bad.push(format!("n={n} k={k} control preserved"));
        }
    }
    Verdict {
        pass: bad.is_empty(),
        detail: if bad.is_empty() { format!("H, N, Nbar and {members} random members give residual 0; control fails") } else { bad.join("; ") },
    }
}

fn hprojective() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    let not_flat: Vec<String> = grid5()
        .filter(|&(n, k)| {
            let p = params(n, k, (1, 1));
            !flatness_certificate(&HermitianMetric::from_lower(&p, metric_lower(&p)).expect("model metric")).flat
        })
        .map(|(n, k)| format!("n={n} k={k}"))
        .collect();
    pass &= not_flat.is_empty();
    parts.push(if not_flat.is_empty() { "certificate on 15 (n,k)".to_string() } else { format!("certificate fails at {}", not_flat.join(",")) });

    let p2 = params(2, -4, (1, 1));
    let mut g = metric_lower(&p2);
    g[0][0] = &g[0][0] + &AFrac::from_poly(&p2, Poly::parse("1/10 * z1^2 * zb1^2", 2).expect("poly"));
    let control_ok = !flatness_certificate_lower(&p2, &g).flat;
    pass &= control_ok;
    parts.push(format!("perturbed control {}", if control_ok { "rejected" } else { "accepted" }));

    let p1 = params(1, -4, (1, 1));
    let g1 = HermitianMetric::from_lower(&p1, metric_lower(&p1)).expect("model metric");
    let flat1 = HermitianMetric::from_lower(&p1, vec![vec![AFrac::one(&p1)]]).expect("flat metric");
    let phis = [rat(0, 1), rat(1, 2), rat(-1, 2), rat(1, 1), rat(-1, 1), rat(2, 1)];
    let vanishing: Vec<String> = phis
        .iter()
        .filter(|c| mapping_residual(&HprojPair::new(g1.clone(), flat1.clone(), LogAPhi::new((*c).clone()))).printed_vanishes())
        .map(ToString::to_string)
        .collect();
    let r = mapping_residual(&HprojPair::new(g1.clone(), flat1.clone(), LogAPhi::new(rat(1, 2))));
    pass &= !vanishing.is_empty();
    parts.push(if vanishing.is_empty() {
        format!(
            "n=1 residual nonzero for phi = c ln A, c in {{0, 1/2, -1/2, 1, -1, 2}} (entry {}; sign-flipped form {} at c = 1/2)",
            r.printed[0][0][0],
            if r.sign_flipped_vanishes() { "vanishes" } else { "nonzero" }
        )
    } else {
        format!("n=1 residual vanishes for c in {{{}}}", vanishing.join(", "))
    });

    let flat2 = HermitianMetric::from_lower(&p2, (0..2).map(|a| (0..2).map(|b| if a == b { AFrac::one(&p2) } else { AFrac::zero(&p2) }).collect()).collect())
        .expect("flat metric");
    let g2 = HermitianMetric::from_lower(&p2, metric_lower(&p2)).expect("model metric");
    match classify_4d(&HprojPair::new(g2, flat2, LogAPhi::zero()), &[GaussRat::ratio(1, 2), GaussRat::from_int(0)]) {
        Ok(cl) => {
            let generic = cl.case_tag == CaseTag::Generic;
            pass &= generic;
            let roots: Vec<String> = cl.roots.iter().map(|(r, _)| format!("{r:.6}")).collect();
            parts.push(format!("n=2 flat pair at (1/2,0): {:?} with roots {}", cl.case_tag, roots.join(", ")));
        }
        Err(e) => {
            pass = false;
            parts.push(format!("classification error {e}"));
        }
    }
    Verdict { pass, detail: parts.join("; ") }
}

fn dimension_report() -> Verdict {
    let mut rows = Vec::new();
    let mut ok = true;
    for (n, k) in DNK {
        let rep = verify_algebra(&params(n, k, (1, 1)));
        ok &= rep.dimension_closed && rep.dimension_claimed == n * (n + 4);
        rows.push(format!("n={n} k={k}: {} (claimed {})", rep.dimension_computed, rep.dimension_claimed));
    }
    Verdict { pass: ok, detail: format!("computed real dimension by exact rank: {}", rows.join(", ")) }
}
