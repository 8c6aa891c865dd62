use std::fs::File;

use num_integer::binomial;
use num_rational::BigRational;

use super::config::{HprojAction, RunConfig, Suite};
use super::report::{fmt_f64, Check, Kind, SuiteResult, Table};
use crate::fock::{adjointness_check, hermitian_invariance_check, monomial_norms, FockBasis, FockMeasure, MeasureMode};
use crate::geometry::{
    check_theorem1, christoffel_closed_form, inverse_closed_form, metric_lower, verify_constant_curvature, ConnectionForm,
    FracMatrix, HermitianMetric, KahlerStructure,
};
use crate::hproj::{
    classify_4d, flatness_certificate, flatness_certificate_lower, hplanarity_residual, mapping_residual, max_residual,
    HprojPair, LogAPhi, SampledCurve,
};
use crate::observables::{check_preservation, SignVerdict, disk_cross_check, verify_algebra, Observable};
use crate::quantize::{quantize_observable, spectrum, stated_qh, stated_qn, stated_qnbar, verify_homomorphism};
use crate::symcore::{AFrac, GaussRat, Poly};

pub(super) fn run_suite(cfg: &RunConfig, suite: Suite) -> SuiteResult {
    let mut res = SuiteResult { suite: suite.name().to_string(), error: None, checks: Vec::new(), tables: Vec::new() };
    let out = match suite {
        Suite::Geometry => geometry(cfg, &mut res),
        Suite::Algebra => algebra(cfg, &mut res),
        Suite::Operators => operators(cfg, &mut res),
        Suite::Spectrum => spectrum_suite(cfg, &mut res),
        Suite::Gram => gram(cfg, &mut res),
        Suite::Adjoint => adjoint(cfg, &mut res),
        Suite::Hproj => hproj(cfg, &mut res),
    };
    if let Err(e) = out {
        res.error = Some(format!("{}: {e}", suite.name()));
    }
    res
}

type SuiteOut = Result<(), String>;

fn exact(name: &str, relation: &str, pass: bool) -> Check {
    Check::new(name, relation, Kind::Exact, pass)
}

fn numeric(name: &str, relation: &str, value: f64, tol: f64) -> Check {
    Check::new(name, relation, Kind::Numeric, value.is_finite() && value <= tol).value(fmt_f64(value)).expected(format!("<= {}", fmt_f64(tol)))
}

fn geometry(cfg: &RunConfig, res: &mut SuiteResult) -> SuiteOut {
    let p = &cfg.params;
    let ks = KahlerStructure::new(p);
    let m = &ks.metric;
    res.checks.push(exact("metric inverse", "g_{ab} g^{cb} = delta", m.inverse_holds()));
    res.checks.push(exact("inverse closed form", "g^{ab} = A(delta + (k/4) z^a zb^b)", m.g_upper == inverse_closed_form(p)));
    res.checks.push(exact(
        "christoffel closed form",
        "Gamma^a_{bc} = -(k/4)/A (zb^b delta^a_c + zb^c delta^a_b)",
        m.christoffel == christoffel_closed_form(p),
    ));
    let curv = verify_constant_curvature(m, cfg.samples, cfg.seed);
    let mut c = exact("constant holomorphic curvature", "R = c (k/4)(g g + g g)", curv.verified)
        .value(format!("c = {}, {} samples", curv.convention_c, curv.samples_checked));
    if let Some(f) = curv.failures.first() {
        c = c.detail(f.clone());
    }
    res.checks.push(c);
    res.checks.push(exact("symplectic inverse", "Pi Omega = I", ks.omega.inverse_holds()));
    res.checks.push(exact("symplectic closed", "d omega = 0", ks.omega.is_closed()));
    res.checks.push(exact("connection curvature", "d alpha = omega", check_theorem1(&ks.connection, &ks.omega)));
    let mut bad = ks.connection.alpha_components.clone();
    bad[0] = bad[0].scale(&GaussRat::from_int(2));
    let corrupted = ConnectionForm { params: p.clone(), alpha_components: bad };
    res.checks.push(exact("corrupted connection detected", "d(2 alpha_1) != omega", !check_theorem1(&corrupted, &ks.omega)));
    Ok(())
}

fn verdict(v: SignVerdict) -> &'static str {
    match v {
        SignVerdict::AsStated => "as stated",
        SignVerdict::Opposite => "opposite sign",
        SignVerdict::Differs => "differs",
    }
}

fn algebra(cfg: &RunConfig, res: &mut SuiteResult) -> SuiteOut {
    let rep = verify_algebra(&cfg.params);
    for r in &rep.relations {
        let mut c = exact(&format!("{}: {}", r.group, r.name), &r.name, r.holds)
            .value(format!("{} ({} instances)", verdict(r.computed_sign), r.instances));
        if let Some(m) = &r.first_mismatch {
            c = c.detail(format!("at {}: computed {} vs stated {}", m.indices, m.computed, m.stated));
        }
        res.checks.push(c);
    }
    res.checks.push(exact("T is the trace of the mixed generators", "T = sum_a T^{a abar}", rep.t_is_trace_of_mixed));
    if let Some(ok) = disk_cross_check(&cfg.params) {
        res.checks.push(exact("disk observables", "(1+|z|^2)/(1-|z|^2) = 2H+1, z/(1-|z|^2) = N", ok));
    }
    let n = cfg.params.n();
    res.checks.push(
        Check::new("algebra dimension", "real dimension of the bracket closure", Kind::Info, true)
            .value(format!("{} real ({} complex)", rep.dimension_computed, rep.dimension_complex))
            .expected(format!("n(n+4) = {}", rep.dimension_claimed))
            .detail(format!("n = {n}, closed = {}", rep.dimension_closed)),
    );
    Ok(())
}

fn operators(cfg: &RunConfig, res: &mut SuiteResult) -> SuiteOut {
    let p = &cfg.params;
    let ks = KahlerStructure::new(p);
    let n = p.n();
    let mut cases = vec![(Observable::h(p), stated_qh(p), "Q H = hbar (z.d + n/2)".to_string())];
    for a in 0..n {
        cases.push((Observable::n_holo(p, a), stated_qn(p, a), format!("Q N^{} = hbar z^{} (1 - ...)", a + 1, a + 1)));
        cases.push((Observable::n_anti(p, a), stated_qnbar(p, a), format!("Q N^{}bar = hbar d_{}", a + 1, a + 1)));
    }
    for (f, stated, rel) in &cases {
        let cert = check_preservation(f, &ks.metric);
        res.checks.push(exact(&format!("{} preserves the polarization", f.label), "covariant antiholomorphic Hessian = 0", cert.preserved));
        match quantize_observable(f, &ks) {
            Ok(q) => {
                let c = exact(&format!("Q {} as stated", f.label), rel, &q == stated).value(q.to_string());
                res.checks.push(c);
            }
            Err(e) => res.checks.push(exact(&format!("Q {} holomorphic", f.label), rel, false).detail(e.to_string())),
        }
    }
    let ctrl = Observable::custom(
        AFrac::from_poly(p, &(&Poly::z(n, 0) * &Poly::z(n, 0)) * &(&Poly::zb(n, 0) * &Poly::zb(n, 0))),
        "|z1|^4",
    );
    res.checks.push(exact("non-member rejected", "|z1|^4 does not preserve the polarization", !check_preservation(&ctrl, &ks.metric).preserved));
    let hom = verify_homomorphism(&ks);
    let mut c = exact("quantization homomorphism", "[Qf,Qg] = c Q{f,g}, [Pf,Pg] = c P{f,g}", hom.holds())
        .value(format!("c = {}, {} pairs", hom.constant.clone().unwrap_or_else(|| "none".into()), hom.pairs_checked));
    if let Some(f) = hom.quantizer_failures.first().or(hom.prequantizer_failures.first()) {
        c = c.detail(format!("{}: {}", f.pair, f.detail));
    }
    res.checks.push(c);
    Ok(())
}

fn spectrum_suite(cfg: &RunConfig, res: &mut SuiteResult) -> SuiteOut {
    let p = &cfg.params;
    let n = p.n();
    let ks = KahlerStructure::new(p);
    let qh = quantize_observable(&Observable::h(p), &ks).map_err(|e| e.to_string())?;
    let basis = FockBasis::new(n, cfg.cutoff);
    let spec = spectrum(&qh, &basis);
    let mut ok = spec.exact;
    let mut rows = Vec::new();
    for l in 0..=cfg.cutoff {
        let expected = p.hbar() * (BigRational::from_integer((l as i64).into()) + BigRational::new((n as i64).into(), 2.into()));
        let mult = binomial(l + n - 1, n - 1);
        let got: Vec<_> = spec.eigenvalues.iter().filter(|e| e.degree == Some(l)).collect();
        ok &= got.len() == 1 && got[0].value_exact.as_deref() == Some(&expected.to_string()) && got[0].multiplicity == mult;
        for e in got {
            rows.push(vec![l.to_string(), e.value_exact.clone().unwrap_or_default(), fmt_f64(e.value), e.multiplicity.to_string()]);
        }
    }
    res.checks.push(
        exact("spectrum of Q H", "E_l = hbar (l + n/2), multiplicity C(l+n-1, n-1)", ok)
            .value(format!("{} levels", rows.len()))
            .expected(format!("{} levels", cfg.cutoff + 1)),
    );
    res.tables.push(Table {
        name: "spectrum".into(),
        columns: ["l", "exact", "float", "multiplicity"].map(String::from).to_vec(),
        rows,
    });
    Ok(())
}

fn gram(cfg: &RunConfig, res: &mut SuiteResult) -> SuiteOut {
    let basis = FockBasis::new(cfg.params.n(), cfg.cutoff);
    let measure = FockMeasure::new(&cfg.params, cfg.measure);
    let g = monomial_norms(&basis, &measure, cfg.quad_rel_tol).map_err(|e| e.to_string())?;
    match g.max_rel_dev_vs_oracle {
        Some(d) => res.checks.push(numeric("norms vs Gamma oracle", "|z^m|^2 quadrature = closed form", d, cfg.tol)),
        None => res.checks.push(Check::new("norms vs Gamma oracle", "no closed form for this weight", Kind::Info, true)),
    }
    res.checks.push(numeric("orthogonality", "<z^a, z^b> = 0 for a != b", g.off_diagonal_max, cfg.tol));
    res.checks.push(Check::new("weight exponent", "exponent of A in the measure", Kind::Info, true).value(g.weight_exponent.clone()));
    let rows = (0..g.norms.len())
        .map(|i| {
            vec![
                format!("{:?}", g.exponents[i]).replace(' ', ""),
                g.exact[i].clone().unwrap_or_default(),
                fmt_f64(g.norms[i]),
                g.oracle[i].map(fmt_f64).unwrap_or_default(),
            ]
        })
        .collect();
    res.tables.push(Table { name: "norms".into(), columns: ["m", "exact", "quadrature", "oracle"].map(String::from).to_vec(), rows });
    Ok(())
}

fn adjoint(cfg: &RunConfig, res: &mut SuiteResult) -> SuiteOut {
    let p = &cfg.params;
    let ks = KahlerStructure::new(p);
    let basis = FockBasis::new(p.n(), cfg.cutoff);
    let measure = FockMeasure::new(p, cfg.measure);
    for a in 0..p.n() {
        let r = adjointness_check(&basis, &measure, &ks, a, cfg.quad_rel_tol).map_err(|e| e.to_string())?;
        let rel = format!("(Q N^{}bar)^dagger = Q N^{}", a + 1, a + 1);
        match cfg.measure {
            MeasureMode::AdjointCorrected => {
                res.checks.push(numeric(&format!("adjointness alpha={}", a + 1), &rel, r.max_abs_deviation, cfg.tol));
            }
            MeasureMode::Literal => {
                let gap = rat_f64(&r.expected_literal_gap);
                let dev = r.raising_gaps.iter().map(|g| (g - gap).abs()).fold(0.0, f64::max);
                res.checks.push(
                    numeric(&format!("raising gap alpha={}", a + 1), "gap = -k hbar (n+1)/8 on every raising entry", dev, cfg.tol)
                        .detail(format!("expected gap {}, adjoint deviation {}", r.expected_literal_gap, fmt_f64(r.max_abs_deviation))),
                );
            }
        }
    }
    let inv = hermitian_invariance_check(&ks.connection, &measure, cfg.samples.max(2), cfg.seed);
    res.checks.push(numeric("hermitian invariance", "X h = 2 Im alpha(X) h / hbar", inv.max_residual, cfg.tol));
    Ok(())
}

fn rat_f64(s: &str) -> f64 {
    crate::params::parse_rational(s).map(|r| crate::params::rat_to_f64(&r)).unwrap_or(f64::NAN)
}

fn identity(p: &std::sync::Arc<crate::ModelParams>) -> FracMatrix {
    let n = p.n();
    (0..n).map(|a| (0..n).map(|b| if a == b { AFrac::one(p) } else { AFrac::zero(p) }).collect()).collect()
}

fn hproj(cfg: &RunConfig, res: &mut SuiteResult) -> SuiteOut {
    let p = &cfg.params;
    let n = p.n();
    let g = HermitianMetric::from_lower(p, metric_lower(p)).map_err(|e| e.to_string())?;
    let flat = HermitianMetric::from_lower(p, identity(p)).map_err(|e| e.to_string())?;
    for action in &cfg.hproj_actions {
        match action {
            HprojAction::Flatness => {
                let cert = flatness_certificate(&g);
                let phi = cert.phi.as_ref().map(|v| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "));
                res.checks.push(
                    exact("H-projective flatness", "Gamma^a_{bc} = phi_b delta^a_c + phi_c delta^a_b", cert.flat)
                        .value(phi.unwrap_or_else(|| "none".into())),
                );
                if n >= 2 {
                    let mut gl = metric_lower(p);
                    let eps = AFrac::from_poly(p, Poly::parse("1/10 * z1^2 * zb1^2", n).map_err(|e| e.to_string())?);
                    gl[0][0] = &gl[0][0] + &eps;
                    let c = flatness_certificate_lower(p, &gl);
                    res.checks.push(exact("perturbed metric not flat", "g + |z1|^4/10 admits no phi", !c.flat));
                }
            }
            HprojAction::Residual => {
                let half = LogAPhi::new(BigRational::new(1.into(), 2.into()));
                for (label, phi) in [("phi = 0", LogAPhi::zero()), ("phi = ln(A)/2", half)] {
                    let r = mapping_residual(&HprojPair::new(g.clone(), flat.clone(), phi));
                    let rel = "b_{a bbar; c} = 2 phi'_a g_{c bbar}";
                    let name = format!("mapping residual, flat pair, {label}");
                    let c = if n == 1 {
                        exact(&name, rel, r.printed_vanishes())
                    } else {
                        Check::new(name, rel, Kind::Info, true).value(if r.printed_vanishes() { "zero" } else { "nonzero" })
                    };
                    res.checks.push(c.detail(format!(
                        "symmetrized {}, sign-flipped {}, first entry {}",
                        if r.symmetrized_vanishes() { "zero" } else { "nonzero" },
                        if r.sign_flipped_vanishes() { "zero" } else { "nonzero" },
                        r.printed[0][0][0]
                    )));
                }
            }
            HprojAction::Classify => {
                let point = cfg.point.clone().unwrap_or_else(|| vec![GaussRat::ratio(1, 2), GaussRat::from_int(0)]);
                let pair = HprojPair::new(g.clone(), flat.clone(), LogAPhi::zero());
                let cl = classify_4d(&pair, &point).map_err(|e| e.to_string())?;
                let roots = cl.roots.iter().map(|(r, m)| format!("{}^{m}", fmt_f64(*r))).collect::<Vec<_>>().join(", ");
                let pt = point.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
                res.checks.push(
                    Check::new("lambda classification, flat pair", "det(b - lambda g) = 0", Kind::Info, true)
                        .value(format!("{:?}: {roots}", cl.case_tag).to_lowercase())
                        .detail(format!("point ({pt}), discriminant {}", cl.discriminant)),
                );
            }
            HprojAction::Curve => {
                let path = cfg.curve_input.as_ref().ok_or("curve needs an input file")?;
                let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
                let curve = SampledCurve::from_csv(file).map_err(|e| e.to_string())?;
                let fits = hplanarity_residual(&curve, &g).map_err(|e| e.to_string())?;
                let undefined = fits.iter().filter(|f| f.residual.is_none()).count();
                res.checks.push(
                    numeric("curve is H-planar", "nabla_chi chi in span{chi, J chi}", max_residual(&fits), cfg.tol)
                        .detail(format!("{} samples, {undefined} with vanishing velocity", fits.len())),
                );
            }
        }
    }
    Ok(())
}
