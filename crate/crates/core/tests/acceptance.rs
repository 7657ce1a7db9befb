//! One PASS/FAIL line per acceptance criterion; the test fails if any line fails.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use contact_mech::calculus::{
    d, directional, divergence, integrate, lie_derivative_form, pair, Chart, Method, ScalarField,
    VectorField,
};
use contact_mech::cli::{run, scenario::Scenario, DEFAULT_SEED};
use contact_mech::contact::{jacobiator, lemma_chain, weak_leibniz, ContactStructure, EtaField, HamiltonianSystem};
use contact_mech::hamjac::{hj_residual, relatedness_residual, HjSection};
use contact_mech::herglotz::{critical_point_residual, sample_path, Energy, HerglotzField, LagrangianSystem};
use contact_mech::linalg::norm_inf;
use contact_mech::nonholo::{seeded_triples, ConstraintValue, NonholonomicSystem};
use contact_mech::probe;
use contact_mech::singular::{classify_constraints, dirac_jacobi_bracket, run_algorithm, AlgorithmOptions, PrecontactSystem};
use contact_mech::symmetry::{conserved_ratio, noether_check, BaseField};
use contact_mech::Expr;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5EED;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0_f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn damped_q(t: f64, g: f64) -> f64 {
    let w = (1.0 - g * g / 4.0).sqrt();
    (-g * t / 2.0).exp() * ((w * t).cos() + g / (2.0 * w) * (w * t).sin())
}

fn c1_damped_oscillator() -> Verdict {
    const TOL: f64 = 1e-6;
    let g = 0.1;
    let sys = HamiltonianSystem::new(
        ContactStructure::canonical(1),
        Chart::cotangent(1).parse("p^2/2 + q^2/2 + 0.1*z").unwrap(),
    );
    let start = Instant::now();
    let tr = integrate(&sys.vector_field(), &[1.0, 0.0, 0.0], 1e-3, 10.0, Method::Rk4).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let q_err = max_abs(tr.times.iter().zip(&tr.rows).map(|(t, x)| x[0] - damped_q(*t, g)));
    let h0 = sys.h.eval_at(&tr.rows[0]).unwrap();
    let h_err = max_abs(
        tr.times
            .iter()
            .zip(&tr.rows)
            .map(|(t, x)| sys.h.eval_at(x).unwrap() / h0 - (-g * t).exp()),
    );
    verdict(
        q_err < TOL && h_err < TOL && secs < 1.0,
        format!("max|q-q*|={q_err:.2e} max|H/H0-e^-gt|={h_err:.2e} time={secs:.3}s"),
    )
}

fn c2_bracket_identities() -> Verdict {
    let (mut jac, mut leib, mut flow, mut eta) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for n in [1, 2] {
        let s = ContactStructure::canonical(n);
        let j = s.jacobi();
        let obs = probe::quadratics(&Chart::cotangent(n), 50, SEED + n as u64).unwrap();
        let probes = probe::uniform(s.dim(), 4, -1.0, 1.0, SEED ^ n as u64);
        for t in 0..16 {
            let (f, g, h) = (&obs[3 * t], &obs[3 * t + 1], &obs[3 * t + 2]);
            for x in &probes {
                jac = jac.max(jacobiator(j, f, g, h, x).unwrap().abs());
                leib = leib.max(weak_leibniz(j, f, g, h, x).unwrap().abs());
                let (a, b) = lemma_chain(s, f, g, x).unwrap();
                flow = flow.max(a.abs());
                eta = eta.max(b.abs());
            }
        }
    }
    verdict(
        jac < 1e-7 && leib < 1e-8 && flow < 1e-7 && eta < 1e-7,
        format!("jacobi={jac:.2e} weak_leibniz={leib:.2e} flow={flow:.2e} eta_bracket={eta:.2e}"),
    )
}

fn c3_structural_identities() -> Verdict {
    let hs = [
        (1, "p^2/2 + q^2/2 + 0.1*z"),
        (1, "p^2/2 + z^2/2 + sin(q)"),
        (2, "(p1^2 + p2^2)/2 + q1*q2 - 0.3*z*p1"),
        (2, "exp(0.2*z)*(p1^2 + 1) + cos(q2)*p2"),
        (3, "p1*p2 + p3^2/2 + q1^2*q3 + z*(q2 - 0.5)"),
    ];
    let (mut scaling, mut volume, mut eta_id) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (n, text) in hs {
        let s = ContactStructure::canonical(n);
        let sys = HamiltonianSystem::new(s, Chart::cotangent(n).parse(text).unwrap());
        let xh = sys.vector_field();
        let z = 2 * n;
        for x in probe::uniform(s.dim(), 20, -1.0, 1.0, SEED) {
            let dh = d(&sys.h, &x).unwrap();
            let rh = dh[z];
            let l = lie_derivative_form(&xh, &EtaField(s), &x).unwrap();
            scaling = scaling.max(max_abs(l.iter().zip(s.eta(&x)).map(|(a, e)| a + rh * e)));
            volume = volume.max((divergence(&xh, &x).unwrap() + (n as f64 + 1.0) * rh).abs());
            eta_id = eta_id.max((pair(&s.eta(&x), &xh.value(&x).unwrap()) + sys.h.eval_at(&x).unwrap()).abs());
        }
    }
    verdict(
        scaling < 1e-8 && volume < 1e-8 && eta_id < 1e-10,
        format!("eta_scaling={scaling:.2e} divergence={volume:.2e} eta(X_H)+H={eta_id:.2e}"),
    )
}

fn c4_legendre() -> Verdict {
    let ls = [
        (1, "v^2/2 - q^2/2 - 0.1*z"),
        (2, "(v1^2 + v2^2)/2"),
        (1, "v^2/2 - 0.1*z*v"),
    ];
    let (mut eq, mut pb) = (0.0_f64, 0.0_f64);
    for (n, text) in ls {
        let sys = LagrangianSystem::parse(text, n).unwrap();
        for x in probe::uniform(sys.dim(), 20, -1.0, 1.0, SEED) {
            eq = eq.max(sys.legendre_equivalence_residual(&x).unwrap());
            pb = pb.max(sys.pullback_residual(&x).unwrap());
        }
    }
    verdict(eq < 1e-7 && pb < 1e-9, format!("legendre_equivalence={eq:.2e} pullback={pb:.2e}"))
}

fn c5_variational() -> Verdict {
    let sys = LagrangianSystem::parse("v^2/2 - q^2/2 - 0.1*z", 1).unwrap();
    let exact = sample_path(1, 1e-3, 2.0, |t| vec![damped_q(t, 0.1)]);
    let off = sample_path(1, 1e-3, 2.0, |t| vec![damped_q(t, 0.1) + 0.3 * (std::f64::consts::PI * t / 2.0).sin()]);
    let a = critical_point_residual(&sys, &exact, 0.0, 10, SEED).unwrap();
    let b = critical_point_residual(&sys, &off, 0.0, 10, SEED).unwrap();
    verdict(a < 1e-4 && b > 1e-2, format!("closed-form={a:.2e} perturbed={b:.2e}"))
}

fn c6_noether() -> Verdict {
    let sys = LagrangianSystem::parse("(v1^2 + v2^2)/2 - q2^2/2 - 0.1*z", 2).unwrap();
    let probes = probe::uniform(sys.dim(), 20, -2.0, 2.0, SEED);
    let r = noether_check(&sys, &BaseField::on_q(2, &["1", "0"]).unwrap(), &probes).unwrap();
    let tr = integrate(&HerglotzField(&sys), &[0.2, 1.0, 1.0, 0.5, 0.0], 1e-3, 5.0, Method::Rk4).unwrap();
    let p1 = sys.chart().parse("v1").unwrap();
    let drift = conserved_ratio(&sys, &p1, &tr).unwrap();
    verdict(
        r.residual_a < 1e-12 && r.residual_b < 1e-8 && drift < 1e-6,
        format!("X^C(L)={:.2e} dissipated={:.2e} p1/E_L drift={drift:.2e}", r.residual_a, r.residual_b),
    )
}

/// Seeded (H, gamma) pairs; three in four are exact solutions.
fn hj_pairs(count: usize) -> Vec<(Expr, HjSection, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let chart = Chart::cotangent(1);
    let generic = probe::quadratics(&chart, count, SEED).unwrap();
    let mut out = Vec::new();
    for i in 0..count {
        let (a, b, c) = (rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let pair = match i % 4 {
            // H = a p + b z, gamma = c exp(-b q / a)
            0 => (format!("{a}*p + {b}*z"), format!("{c}*exp(-{b}*q/{a})"), true),
            // z-free, q-free H with constant gamma
            1 => (format!("{a}*p^2/2 + {b}*p"), format!("{c}"), true),
            // energy level set of the oscillator
            2 => (
                "p^2/2 + q^2/2".to_string(),
                format!("sqrt(2*{} - q^2)", 1.0 + a),
                true,
            ),
            _ => (generic[i].to_string(), format!("{b} + {c}*q + {a}*z"), false),
        };
        out.push((chart.parse(&pair.0).unwrap(), HjSection::parse(1, &[&pair.1]).unwrap(), pair.2));
    }
    out
}

fn c7_hamilton_jacobi() -> Verdict {
    let pairs = hj_pairs(50);
    let bases = probe::uniform(2, 5, -1.0, 1.0, SEED);
    let (mut agree, mut band, mut expected) = (0, 0, 0);
    let mut min_fail = f64::INFINITY;
    for (h, g, solution) in &pairs {
        let hj = max_abs(bases.iter().flat_map(|b| hj_residual(h, g, b).unwrap()));
        let rel = max_abs(bases.iter().map(|b| relatedness_residual(h, g, b).unwrap()));
        if (hj < 1e-6) == (rel < 1e-6) {
            agree += 1;
        }
        if (hj < 1e-6) == *solution {
            expected += 1;
        }
        if hj >= 1e-6 {
            min_fail = min_fail.min(hj.min(rel));
            if hj >= 1e-3 && rel >= 1e-3 {
                band += 1;
            }
        } else {
            band += 1;
        }
    }
    let n = pairs.len();
    verdict(
        agree == n && band == n && expected == n,
        format!("agree={agree}/{n} band={band}/{n} oracle={expected}/{n} min failing residual={min_fail:.2e}"),
    )
}

fn c8_constraint_algorithm() -> Verdict {
    let l = LagrangianSystem::parse("v1^2/2 + q2*v2 - 0.1*z", 2).unwrap();
    let sys = PrecontactSystem::lagrangian(&l);
    let lad = run_algorithm(&sys, &AlgorithmOptions::standard(5)).unwrap();
    let steps_ok = lad.steps() <= 3 && lad.batches.len() == 1 && lad.dims == vec![5, 4];
    let mut on = 0.0_f64;
    let mut off = 0.0_f64;
    for x in probe::uniform(5, 20, -2.0, 2.0, SEED) {
        let mut y = x.clone();
        y[1] = 0.0;
        on = on.max(norm_inf(&(lad.batches[0].eval)(&y).unwrap()));
        let v = (lad.batches[0].pairing)(&x).unwrap();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        off = off.max((norm - 0.1 * x[1].abs() / (1.0 + x[1] * x[1]).sqrt()).abs());
    }
    let d = PrecontactSystem::darboux(1, 1, "u^2").unwrap();
    let dl = run_algorithm(&d, &AlgorithmOptions::standard(4)).unwrap();
    let mut du = 0.0_f64;
    for x in probe::uniform(4, 20, -2.0, 2.0, SEED) {
        du = du.max(((dl.batches[0].pairing)(&x).unwrap()[0].abs() - 2.0 * x[3].abs()).abs());
    }
    let darboux_ok = dl.batches.len() == 1 && dl.dims == vec![4, 3] && du < 1e-10;
    verdict(
        steps_ok && on < 1e-12 && off < 1e-10 && darboux_ok,
        format!(
            "dims={:?} on q2=0: {on:.2e} pairing vs 0.1|q2|/sqrt(1+q2^2): {off:.2e}; darboux dims={:?} |pairing|-2|u|: {du:.2e}",
            lad.dims, dl.dims
        ),
    )
}

fn c9_dirac_jacobi() -> Verdict {
    let ch = Chart::cotangent(2);
    let j = ContactStructure::canonical(2).jacobi();
    let probes: Vec<Vec<f64>> = probe::uniform(3, 20, -1.0, 1.0, SEED)
        .into_iter()
        .map(|p| vec![p[0], 0.0, p[1], 0.0, p[2]])
        .collect();
    let cons = vec![ch.parse("q2").unwrap(), ch.parse("p2").unwrap()];
    let dd = classify_constraints(&cons, j, &probes).unwrap();
    let fs = probe::quadratics(&ch, 20, SEED).unwrap();
    let mut casimir = 0.0_f64;
    for (f, x) in fs.iter().zip(&probes) {
        for c in &cons {
            casimir = casimir.max(dirac_jacobi_bracket(&dd, f, c, x).unwrap().abs());
        }
    }
    let (q1, p1) = (ch.parse("q1").unwrap(), ch.parse("p1").unwrap());
    let canon = max_abs(probes.iter().map(|x| dirac_jacobi_bracket(&dd, &q1, &p1, x).unwrap() + 1.0));
    verdict(
        dd.second.len() == 2 && dd.first.is_empty() && casimir < 1e-9 && canon < 1e-9,
        format!(
            "second-class={} first-class={} max|{{f,phi}}_DJ|={casimir:.2e} |{{q1,p1}}_DJ+1|={canon:.2e}",
            dd.second.len(),
            dd.first.len()
        ),
    )
}

fn particle(rows: &[Vec<&str>]) -> NonholonomicSystem {
    NonholonomicSystem::parse("(v1^2 + v2^2 + v3^2)/2 - 0.1*z", 3, rows).unwrap()
}

fn c10_nonholonomic_particle() -> Verdict {
    let nh = particle(&[vec!["-q2", "0", "1"]]);
    let x = [0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
    let g = nh.constrained_dynamics(&x).unwrap();
    let oracle = [-0.6, -0.1, 0.4, 1.5];
    let dyn_err = max_abs(g[3..].iter().zip(oracle).map(|(a, b)| a - b));
    let tr = integrate(&contact_mech::nonholo::ConstrainedHerglotz(&nh), &x, 1e-3, 5.0, Method::Rk4).unwrap();
    let drift = max_abs(tr.rows.iter().map(|r| norm_inf(&nh.cons.values(r).unwrap())));
    let e = Energy(&nh.sys);
    let obs = probe::quadratics(&Chart::tangent(3), 4, SEED).unwrap();
    let pts: Vec<Vec<f64>> = probe::uniform(7, 10, -1.5, 1.5, SEED)
        .iter()
        .map(|p| nh.cons.project(p).unwrap())
        .collect();
    let (mut eta, mut casimir, mut evolution) = (0.0_f64, 0.0_f64, 0.0_f64);
    let phi = ConstraintValue(&nh.cons, 0);
    for p in &pts {
        let (_, r) = nh.nh_structure(p).unwrap();
        let re = pair(&d(&e, p).unwrap(), &r);
        let xe = nh.constrained_hvf(&e, p).unwrap();
        eta = eta.max((pair(&nh.sys.eta(p).unwrap(), &xe) + e.value(p).unwrap()).abs());
        for f in &obs {
            let xf = nh.constrained_hvf(f, p).unwrap();
            eta = eta.max((pair(&nh.sys.eta(p).unwrap(), &xf) + f.eval_at(p).unwrap()).abs());
            casimir = casimir.max(nh.nh_bracket(&phi, f, p).unwrap().abs());
            casimir = casimir.max(nh.nh_bracket(f, &phi, p).unwrap().abs());
            let lhs = directional(f, &contact_mech::nonholo::ConstrainedHerglotz(&nh), p).unwrap();
            evolution = evolution.max((lhs - nh.nh_bracket(&e, f, p).unwrap() + f.eval_at(p).unwrap() * re).abs());
        }
    }
    verdict(
        dyn_err < 1e-10 && (g[6] - 1.5).abs() < 1e-10 && drift < 1e-6 && eta < 1e-8 && casimir < 1e-7 && evolution < 1e-7,
        format!(
            "dynamics err={dyn_err:.2e} drift={drift:.2e} eta(X)+H={eta:.2e} casimir={casimir:.2e} evolution={evolution:.2e}"
        ),
    )
}

fn c11_semiholonomy() -> Verdict {
    let triples = seeded_triples(3, 3, SEED).unwrap();
    let points = |nh: &NonholonomicSystem| -> Vec<Vec<f64>> {
        probe::uniform(7, 3, -1.0, 1.0, SEED)
            .iter()
            .map(|p| nh.cons.project(p).unwrap())
            .collect()
    };
    let hol = particle(&[vec!["0", "0", "1"]]);
    let non = particle(&[vec!["-q2", "0", "1"]]);
    let a = hol.integrability_report(&points(&hol), &triples).unwrap();
    let b = non.integrability_report(&points(&non), &triples).unwrap();
    let flags_agree = (a.involutivity < 1e-8) == (a.jacobiator < 1e-8) && (b.involutivity < 1e-8) == (b.jacobiator < 1e-8);
    verdict(
        a.jacobiator < 1e-8 && b.jacobiator > 1e-6 && flags_agree,
        format!(
            "vw: jacobiator={:.2e} involutivity={:.2e}; vw-y*vx: jacobiator={:.2e} involutivity={:.2e}",
            a.jacobiator, a.involutivity, b.jacobiator, b.involutivity
        ),
    )
}

fn c12_determinism() -> Verdict {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    let mut same = 0;
    for f in &files {
        let s = Scenario::load(f).unwrap();
        let a = run::run(&s, DEFAULT_SEED).unwrap();
        let b = run::run(&s, DEFAULT_SEED).unwrap();
        if a.csv == b.csv && a.report.to_text() == b.report.to_text() {
            same += 1;
        }
    }
    verdict(
        same == files.len() && !files.is_empty(),
        format!("{same}/{} scenarios byte-identical", files.len()),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("damped oscillator reproduction", c1_damped_oscillator),
        ("bracket identities", c2_bracket_identities),
        ("structural identities", c3_structural_identities),
        ("lagrangian/hamiltonian equivalence", c4_legendre),
        ("herglotz variational check", c5_variational),
        ("noether suite", c6_noether),
        ("hamilton-jacobi biconditional", c7_hamilton_jacobi),
        ("constraint algorithm", c8_constraint_algorithm),
        ("dirac-jacobi bracket", c9_dirac_jacobi),
        ("nonholonomic particle", c10_nonholonomic_particle),
        ("semiholonomy biconditional", c11_semiholonomy),
        ("determinism", c12_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = f();
        let line = format!("criterion {:2} {name}: {} ({})\n", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
        // written past the test harness capture so the lines always reach the log
        std::io::stdout().write_all(line.as_bytes()).unwrap();
        if !v.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
