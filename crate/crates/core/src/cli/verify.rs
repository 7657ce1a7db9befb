//! The `verify` property suites.

use super::report::RunReport;
use super::scenario::{Kind, Scenario, System};
use crate::calculus::{d, directional, pair, Chart, Product, ScalarField, VectorField};
use crate::contact::{jacobiator, lemma_chain, weak_leibniz, ContactStructure, HamiltonianSystem};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::hamjac::{admissibility, hj_residual, relatedness_residual, HjSection};
use crate::herglotz::{Energy, HerglotzField, LagrangianSystem};
use crate::linalg::norm_inf;
use crate::nonholo::{seeded_triples, ConstrainedHerglotz, ConstraintValue, NonholonomicSystem};
use crate::probe;
use crate::singular::{constraint_step, run_algorithm, AlgorithmOptions, PrecontactSystem};
use crate::symmetry::{noether_check, BaseField};

pub const SUITES: [&str; 7] = ["brackets", "dissipation", "noether", "hamjac", "singular", "nonholonomic", "all"];

/// Suites that apply to a scenario kind, in report order.
pub fn applicable(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Hamiltonian => &["brackets", "dissipation"],
        Kind::Lagrangian => &["dissipation", "noether"],
        Kind::Nonholonomic => &["dissipation", "nonholonomic"],
        Kind::Singular => &["singular"],
        Kind::HamiltonJacobi => &["brackets", "dissipation", "hamjac"],
    }
}

pub fn verify(s: &Scenario, suite: &str, seed: u64) -> Result<RunReport> {
    if !SUITES.contains(&suite) {
        return Err(Error::UnknownSuite(suite.into()));
    }
    let mut report = RunReport {
        header: vec![format!(
            "verify kind={} n={} suite={suite} seed={seed:#x}",
            s.kind.name(),
            s.n
        )],
        lines: Vec::new(),
    };
    let list: Vec<&str> = if suite == "all" {
        applicable(s.kind).to_vec()
    } else if applicable(s.kind).contains(&suite) {
        vec![suite]
    } else {
        return Err(Error::Config {
            path: "suite".into(),
            msg: format!("'{suite}' does not apply to kind {}", s.kind.name()),
        });
    };
    let sys = s.build()?;
    for name in list {
        match (name, &sys) {
            ("brackets", System::Hamiltonian(h)) => brackets(s.n, Some(&h.h), seed, &mut report)?,
            ("brackets", System::HamiltonJacobi { h, .. }) => brackets(s.n, Some(h), seed, &mut report)?,
            ("dissipation", System::Hamiltonian(h)) => hamiltonian_dissipation(h, seed, &mut report)?,
            ("dissipation", System::HamiltonJacobi { h, .. }) => {
                let hs = HamiltonianSystem::new(ContactStructure::canonical(s.n), h.clone());
                hamiltonian_dissipation(&hs, seed, &mut report)?
            }
            ("dissipation", System::Lagrangian(l)) => lagrangian_dissipation(l, seed, &mut report)?,
            ("dissipation", System::Nonholonomic(nh)) => lagrangian_dissipation(&nh.sys, seed, &mut report)?,
            ("noether", System::Lagrangian(l)) => noether(s, l, seed, &mut report)?,
            ("hamjac", System::HamiltonJacobi { h, gamma }) => hamjac(h, gamma, seed, &mut report)?,
            ("singular", System::Singular(l)) => singular(l, &mut report)?,
            ("nonholonomic", System::Nonholonomic(nh)) => nonholonomic(nh, seed, &mut report)?,
            _ => unreachable!("applicability table"),
        }
    }
    Ok(report)
}

fn collect(points: &[Vec<f64>], mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    points.iter().map(|p| f(p)).collect()
}

fn brackets(n: usize, h: Option<&Expr>, seed: u64, report: &mut RunReport) -> Result<()> {
    let s = ContactStructure::canonical(n);
    let j = s.jacobi();
    let mut obs = probe::quadratics(&Chart::cotangent(n), 12, seed)?;
    if let Some(h) = h {
        obs.insert(0, h.clone());
    }
    let probes = probe::uniform(s.dim(), 5, -1.0, 1.0, seed ^ 1);
    let mut jac = Vec::new();
    let mut leib = Vec::new();
    let mut flow = Vec::new();
    let mut eta = Vec::new();
    for t in 0..4 {
        let (f, g, k) = (&obs[3 * t], &obs[3 * t + 1], &obs[3 * t + 2]);
        for p in &probes {
            jac.push(jacobiator(j, f, g, k, p)?);
            leib.push(weak_leibniz(j, f, g, k, p)?);
            let (a, b) = lemma_chain(s, f, g, p)?;
            flow.push(a);
            eta.push(b);
        }
    }
    report.push("jacobi_identity", &jac, 1e-7);
    report.push("weak_leibniz", &leib, 1e-8);
    report.push("lemma_chain_flow", &flow, 1e-7);
    report.push("lemma_chain_eta", &eta, 1e-7);
    Ok(())
}

fn hamiltonian_dissipation(sys: &HamiltonianSystem<Expr>, seed: u64, report: &mut RunReport) -> Result<()> {
    let s = sys.structure;
    let probes = probe::uniform(s.dim(), 20, -1.0, 1.0, seed);
    let xh = sys.vector_field();
    let reports = probes
        .iter()
        .map(|p| sys.dissipation_report(p))
        .collect::<Result<Vec<_>>>()?;
    let energy: Vec<f64> = reports.iter().map(|r| r.energy).collect();
    let eta_scaling: Vec<f64> = reports.iter().map(|r| norm_inf(&r.eta_scaling)).collect();
    let volume: Vec<f64> = reports.iter().map(|r| r.volume).collect();
    report.push("energy_identity", &energy, 1e-8);
    report.push("eta_scaling", &eta_scaling, 1e-8);
    report.push("volume_identity", &volume, 1e-8);
    let eta_id = collect(&probes, |p| Ok(pair(&s.eta(p), &xh.value(p)?) + sys.h.eval_at(p)?))?;
    report.push("eta_identity", &eta_id, 1e-10);
    let flat = collect(&probes, |p| Ok(max_diff(&xh.value(p)?, &sys.vector_field_by_flat(p)?)))?;
    report.push("flat_route", &flat, 1e-10);
    let lam = collect(&probes, |p| Ok(max_diff(&xh.value(p)?, &sys.vector_field_by_lambda(p)?)))?;
    report.push("lambda_route", &lam, 1e-10);
    Ok(())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()))
}

fn lagrangian_dissipation(sys: &LagrangianSystem, seed: u64, report: &mut RunReport) -> Result<()> {
    let probes = probe::uniform(sys.dim(), 20, -1.0, 1.0, seed);
    let xi = HerglotzField(sys);
    let e = Energy(sys);
    report.push("legendre_equivalence", &collect(&probes, |p| sys.legendre_equivalence_residual(p))?, 1e-7);
    report.push("pullback", &collect(&probes, |p| sys.pullback_residual(p))?, 1e-9);
    let flat = collect(&probes, |p| Ok(max_diff(&sys.herglotz(p)?, &sys.herglotz_by_flat(p)?)))?;
    report.push("herglotz_flat_route", &flat, 1e-8);
    let eta_id = collect(&probes, |p| Ok(pair(&sys.eta(p)?, &sys.herglotz(p)?) + sys.energy(p)?))?;
    report.push("eta_identity", &eta_id, 1e-10);
    let energy = collect(&probes, |p| Ok(directional(&e, &xi, p)? + sys.reeb_energy(p)? * sys.energy(p)?))?;
    report.push("energy_identity", &energy, 1e-8);
    Ok(())
}

fn noether(s: &Scenario, sys: &LagrangianSystem, seed: u64, report: &mut RunReport) -> Result<()> {
    let n = sys.n;
    let probes = probe::uniform(sys.dim(), 20, -1.0, 1.0, seed);
    let mut gens: Vec<(String, BaseField)> = Vec::new();
    if let Some(f) = s.symmetry_field()? {
        gens.push((String::new(), f));
    } else {
        for i in 0..n {
            let mut cyclic = true;
            for p in &probes {
                cyclic &= d(sys, p)?[i].abs() < 1e-12;
            }
            if cyclic {
                let comps: Vec<&str> = (0..n).map(|k| if k == i { "1" } else { "0" }).collect();
                gens.push((format!("_q{}", i + 1), BaseField::on_q(n, &comps)?));
            }
        }
    }
    if gens.is_empty() {
        return Err(Error::Config {
            path: "symmetry".into(),
            msg: "no generator given and no cyclic coordinate found".into(),
        });
    }
    for (suffix, g) in &gens {
        let r = noether_check(sys, g, &probes)?;
        report.push(&format!("noether_symmetry{suffix}"), &[r.residual_a], 1e-10);
        report.push(&format!("dissipated_quantity{suffix}"), &[r.residual_b], 1e-8);
    }
    Ok(())
}

fn hamjac(h: &Expr, gamma: &HjSection, seed: u64, report: &mut RunReport) -> Result<()> {
    let probes = probe::uniform(gamma.n + 1, 20, -1.0, 1.0, seed);
    report.push("admissibility", &collect(&probes, |b| admissibility(gamma, b).map(|a| a.max()))?, 1e-8);
    let hj = collect(&probes, |b| Ok(norm_inf(&hj_residual(h, gamma, b)?)))?;
    let rel = collect(&probes, |b| relatedness_residual(h, gamma, b))?;
    report.push("hj_residual", &hj, 1e-6);
    report.push("relatedness", &rel, 1e-6);
    let agree: Vec<f64> = hj
        .iter()
        .zip(&rel)
        .map(|(a, b)| if (*a < 1e-6) == (*b < 1e-6) { 0.0 } else { 1.0 })
        .collect();
    report.push("hj_biconditional", &agree, 0.5);
    Ok(())
}

fn singular(sys: &LagrangianSystem, report: &mut RunReport) -> Result<()> {
    let pre = PrecontactSystem::lagrangian(sys);
    let opts = AlgorithmOptions::standard(pre.dim);
    let ranks: Vec<usize> = opts
        .probes
        .iter()
        .map(|p| pre.class(p).map(|c| c.rank))
        .collect::<Result<_>>()?;
    let modal = ranks[0];
    let spread: Vec<f64> = ranks.iter().map(|&r| (r as f64 - modal as f64).abs()).collect();
    report.push("class_constant", &spread, 0.5);
    let ladder = run_algorithm(&pre, &opts)?;
    report.push("algorithm_termination", &[*ladder.max_values.last().unwrap_or(&0.0)], 1e-8);
    let mut residual = Vec::new();
    for p in &ladder.final_probes {
        let mut m = 0.0_f64;
        for b in &ladder.batches {
            m = m.max(norm_inf(&(b.eval)(p)?));
        }
        residual.push(m);
    }
    report.push("constraint_residual", &residual, 1e-9);
    let c = ranks.iter().map(|&r| pre.dim - r).max().unwrap_or(0);
    let shifted = AlgorithmOptions {
        reeb_offset: (0..c).map(|i| 0.7 - 0.5 * i as f64).collect(),
        ..opts.clone()
    };
    let grid = probe::grid(pre.dim);
    let a = constraint_step(&pre, &[], &grid, &opts)?;
    let b = constraint_step(&pre, &[], &grid, &shifted)?;
    let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(u, v)| max_diff(u, v)).collect();
    report.push("reeb_choice_independence", &diff, 1e-9);
    Ok(())
}

fn nonholonomic(nh: &NonholonomicSystem, seed: u64, report: &mut RunReport) -> Result<()> {
    let m = nh.dim();
    let n = nh.sys.n;
    let pts: Vec<Vec<f64>> = probe::uniform(m, 10, -1.5, 1.5, seed)
        .iter()
        .map(|p| nh.cons.project(p))
        .collect::<Result<_>>()?;
    let obs = probe::quadratics(&Chart::tangent(n), 4, seed)?;
    let e = Energy(&nh.sys);
    let fl = ConstrainedHerglotz(nh);
    let mut casimir = Vec::new();
    let mut evolution = Vec::new();
    let mut eta = Vec::new();
    let mut forms = Vec::new();
    let mut leibniz = Vec::new();
    for p in &pts {
        let (_, r) = nh.nh_structure(p)?;
        let re = pair(&d(&e, p)?, &r);
        let eta_l = nh.sys.eta(p)?;
        for (i, f) in obs.iter().enumerate() {
            for a in 0..nh.cons.k() {
                let phi = ConstraintValue(&nh.cons, a);
                casimir.push(nh.nh_bracket(&phi, f, p)?);
                casimir.push(nh.nh_bracket(f, &phi, p)?);
            }
            let lhs = directional(f, &fl, p)?;
            evolution.push(lhs - nh.nh_bracket(&e, f, p)? + f.eval_at(p)? * re);
            eta.push(pair(&eta_l, &nh.constrained_hvf(f, p)?) + f.eval_at(p)?);
            forms.push(nh.hvf_cross_residual(f, p)?);
            let g = &obs[(i + 1) % obs.len()];
            let gh = Product(g, &e);
            let rf = pair(&d(f, p)?, &r);
            let (gv, ev) = (g.eval_at(p)?, e.value(p)?);
            leibniz.push(
                nh.nh_bracket(f, &gh, p)? - gv * nh.nh_bracket(f, &e, p)? - ev * nh.nh_bracket(f, g, p)? + gv * ev * rf,
            );
        }
        eta.push(pair(&eta_l, &nh.constrained_hvf(&e, p)?) + e.value(p)?);
    }
    report.push("casimir", &casimir, 1e-7);
    report.push("evolution_identity", &evolution, 1e-7);
    report.push("constrained_eta_identity", &eta, 1e-8);
    report.push("hvf_forms", &forms, 1e-8);
    report.push("generalized_leibniz", &leibniz, 1e-6);
    let triples = seeded_triples(n, 2, seed)?;
    let rep = nh.integrability_report(&pts[..3], &triples)?;
    let involutive = rep.involutivity < 1e-8;
    let agree = if involutive { rep.jacobiator < 1e-8 } else { rep.jacobiator > 1e-6 };
    report.push_verdict("involutivity", &[rep.involutivity], agree);
    report.push_verdict("jacobiator_witness", &[rep.jacobiator], agree);
    Ok(())
}
