//! The `run` pipeline: build, integrate or analyse, summarise diagnostics.

use std::fmt::Write as _;

use super::report::RunReport;
use super::scenario::{Kind, Scenario, System};
use crate::calculus::{d, divergence, fmt17, integrate, lie_derivative_form, pair, Trajectory, VectorField};
use crate::contact::{EtaField, HamiltonianSystem};
use crate::error::Result;
use crate::expr::Expr;
use crate::hamjac::{admissibility, hj_residual, relatedness_residual, HjSection};
use crate::herglotz::{Energy, HerglotzField, LagrangianSystem};
use crate::linalg::norm_inf;
use crate::nonholo::{ConstrainedHerglotz, ConstraintValue, NonholonomicSystem};
use crate::probe;
use crate::singular::{run_algorithm, AlgorithmOptions, PrecontactSystem};

/// Default tolerance of a diagnostic, or None when the kind has no such diagnostic.
pub fn diagnostic_tolerance(kind: Kind, name: &str) -> Option<f64> {
    let t = match (kind, name) {
        (Kind::Hamiltonian, "energy_decay") => 1e-6,
        (Kind::Hamiltonian, "volume_identity") => 1e-8,
        (Kind::Hamiltonian, "eta_identity") => 1e-10,
        (Kind::Hamiltonian, "eta_scaling") => 1e-8,
        (Kind::Hamiltonian, "energy_identity") => 1e-8,
        (Kind::Lagrangian, "energy_decay") => 1e-6,
        (Kind::Lagrangian, "eta_identity") => 1e-10,
        (Kind::Lagrangian, "legendre_equivalence") => 1e-7,
        (Kind::Lagrangian, "pullback") => 1e-9,
        (Kind::Nonholonomic, "constraint_drift") => 1e-6,
        (Kind::Nonholonomic, "tangency") => 1e-9,
        (Kind::Nonholonomic, "eta_identity") => 1e-8,
        (Kind::Nonholonomic, "dissipation_identity") => 1e-7,
        (Kind::Singular, "algorithm_termination") => 1e-8,
        (Kind::Singular, "constraint_residual") => 1e-9,
        (Kind::HamiltonJacobi, "hj_residual") => 1e-6,
        (Kind::HamiltonJacobi, "relatedness") => 1e-6,
        (Kind::HamiltonJacobi, "admissibility") => 1e-8,
        (Kind::HamiltonJacobi, "hj_biconditional") => 0.5,
        _ => return None,
    };
    Some(t)
}

/// CSV text and report of a run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub csv: String,
    pub report: RunReport,
}

fn header(s: &Scenario, seed: u64) -> Vec<String> {
    vec![format!("scenario kind={} n={} seed={seed:#x}", s.kind.name(), s.n)]
}

pub fn run(s: &Scenario, seed: u64) -> Result<RunOutput> {
    let mut report = RunReport {
        header: header(s, seed),
        lines: Vec::new(),
    };
    let csv = match s.build()? {
        System::Hamiltonian(sys) => {
            let tr = trajectory(s, &sys.vector_field())?;
            for (name, tol) in requested(s) {
                report.push(&name, &hamiltonian_diagnostic(&sys, &name, &tr)?, tol);
            }
            tr.to_csv(&s.chart().names)
        }
        System::Lagrangian(sys) => {
            let tr = trajectory(s, &HerglotzField(&sys))?;
            for (name, tol) in requested(s) {
                report.push(&name, &lagrangian_diagnostic(&sys, &name, &tr)?, tol);
            }
            tr.to_csv(&s.chart().names)
        }
        System::Nonholonomic(nh) => {
            let tr = trajectory(s, &ConstrainedHerglotz(&nh))?;
            for (name, tol) in requested(s) {
                report.push(&name, &nonholonomic_diagnostic(&nh, &name, &tr)?, tol);
            }
            tr.to_csv(&s.chart().names)
        }
        System::Singular(sys) => singular(s, &sys, &mut report)?,
        System::HamiltonJacobi { h, gamma } => hamilton_jacobi(s, &h, &gamma, seed, &mut report)?,
    };
    Ok(RunOutput { csv, report })
}

fn requested(s: &Scenario) -> Vec<(String, f64)> {
    s.diagnostics
        .iter()
        .map(|d| {
            let tol = d
                .tol
                .or_else(|| diagnostic_tolerance(s.kind, &d.name))
                .expect("validated diagnostic");
            (d.name.clone(), tol)
        })
        .collect()
}

fn trajectory<X: VectorField>(s: &Scenario, field: &X) -> Result<Trajectory> {
    let integ = s.integrator.as_ref().expect("validated integrator");
    let x0 = s.initial.as_ref().expect("validated initial point");
    integrate(field, x0, integ.dt, integ.t_end, integ.method.into())
}

fn each(tr: &Trajectory, mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    tr.rows.iter().map(|x| f(x)).collect()
}

/// |E(t) - E(0) exp(-int_0^t R(E))| with the integral by the trapezoid rule.
fn decay(tr: &Trajectory, e: impl Fn(&[f64]) -> Result<f64>, re: impl Fn(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    let e0 = e(&tr.rows[0])?;
    let mut integral = 0.0;
    let mut prev = re(&tr.rows[0])?;
    let mut out = vec![0.0];
    for w in tr.rows.windows(2).zip(tr.times.windows(2)) {
        let (rows, ts) = w;
        let r = re(&rows[1])?;
        integral += 0.5 * (ts[1] - ts[0]) * (prev + r);
        prev = r;
        out.push(e(&rows[1])? - e0 * (-integral).exp());
    }
    Ok(out)
}

fn hamiltonian_diagnostic(sys: &HamiltonianSystem<Expr>, name: &str, tr: &Trajectory) -> Result<Vec<f64>> {
    let s = sys.structure;
    let xh = sys.vector_field();
    let z = 2 * s.n;
    match name {
        "energy_decay" => decay(tr, |x| sys.h.eval_at(x), |x| Ok(d(&sys.h, x)?[z])),
        "volume_identity" => each(tr, |x| Ok(divergence(&xh, x)? + (s.n as f64 + 1.0) * d(&sys.h, x)?[z])),
        "eta_identity" => each(tr, |x| Ok(pair(&s.eta(x), &xh.value(x)?) + sys.h.eval_at(x)?)),
        "eta_scaling" => each(tr, |x| {
            let rh = d(&sys.h, x)?[z];
            let l = lie_derivative_form(&xh, &EtaField(s), x)?;
            Ok(norm_inf(&l.iter().zip(s.eta(x)).map(|(a, e)| a + rh * e).collect::<Vec<_>>()))
        }),
        "energy_identity" => each(tr, |x| Ok(sys.dissipation_report(x)?.energy)),
        _ => unreachable!("validated diagnostic"),
    }
}

fn lagrangian_diagnostic(sys: &LagrangianSystem, name: &str, tr: &Trajectory) -> Result<Vec<f64>> {
    match name {
        "energy_decay" => decay(tr, |x| sys.energy(x), |x| sys.reeb_energy(x)),
        "eta_identity" => each(tr, |x| Ok(pair(&sys.eta(x)?, &sys.herglotz(x)?) + sys.energy(x)?)),
        "legendre_equivalence" => each(tr, |x| sys.legendre_equivalence_residual(x)),
        "pullback" => each(tr, |x| sys.pullback_residual(x)),
        _ => unreachable!("validated diagnostic"),
    }
}

fn nonholonomic_diagnostic(nh: &NonholonomicSystem, name: &str, tr: &Trajectory) -> Result<Vec<f64>> {
    let k = nh.cons.k();
    match name {
        "constraint_drift" => each(tr, |x| Ok(norm_inf(&nh.cons.values(x)?))),
        "tangency" => each(tr, |x| {
            let g = nh.constrained_dynamics(x)?;
            let mut m = 0.0_f64;
            for a in 0..k {
                m = m.max(pair(&d(&ConstraintValue(&nh.cons, a), x)?, &g).abs());
            }
            Ok(m)
        }),
        "eta_identity" => each(tr, |x| {
            let xe = nh.constrained_hvf(&Energy(&nh.sys), x)?;
            Ok(pair(&nh.sys.eta(x)?, &xe) + nh.sys.energy(x)?)
        }),
        "dissipation_identity" => each(tr, |x| nh.nh_dissipation_residual(x)),
        _ => unreachable!("validated diagnostic"),
    }
}

fn singular(s: &Scenario, sys: &LagrangianSystem, report: &mut RunReport) -> Result<String> {
    let pre = PrecontactSystem::lagrangian(sys);
    let opts = AlgorithmOptions::standard(pre.dim);
    let ladder = run_algorithm(&pre, &opts)?;
    let mut csv = String::from("step,dim,max_pairing\n");
    for (i, (dim, v)) in ladder.dims.iter().zip(&ladder.max_values).enumerate() {
        let _ = writeln!(csv, "{},{},{}", i + 1, dim, fmt17(*v));
    }
    for (name, tol) in requested(s) {
        let values = match name.as_str() {
            "algorithm_termination" => vec![*ladder.max_values.last().unwrap_or(&0.0)],
            "constraint_residual" => {
                let mut out = Vec::new();
                for p in &ladder.final_probes {
                    let mut m = 0.0_f64;
                    for b in &ladder.batches {
                        m = m.max(norm_inf(&(b.eval)(p)?));
                    }
                    out.push(m);
                }
                out
            }
            _ => unreachable!("validated diagnostic"),
        };
        report.push(&name, &values, tol);
    }
    Ok(csv)
}

fn hamilton_jacobi(s: &Scenario, h: &Expr, gamma: &HjSection, seed: u64, report: &mut RunReport) -> Result<String> {
    let n = s.n;
    let probes = probe::uniform(n + 1, 50, -1.0, 1.0, seed);
    let mut csv = String::new();
    let names = s.chart().names;
    for q in &names[..n] {
        csv.push_str(q);
        csv.push(',');
    }
    csv.push_str("z,hj_residual,relatedness\n");
    let mut hj = Vec::new();
    let mut rel = Vec::new();
    for b in &probes {
        hj.push(norm_inf(&hj_residual(h, gamma, b)?));
        rel.push(relatedness_residual(h, gamma, b)?);
        for v in b {
            let _ = write!(csv, "{},", fmt17(*v));
        }
        let _ = writeln!(csv, "{},{}", fmt17(*hj.last().unwrap()), fmt17(*rel.last().unwrap()));
    }
    for (name, tol) in requested(s) {
        let values = match name.as_str() {
            "hj_residual" => hj.clone(),
            "relatedness" => rel.clone(),
            "admissibility" => probes
                .iter()
                .map(|b| admissibility(gamma, b).map(|a| a.max()))
                .collect::<Result<_>>()?,
            "hj_biconditional" => hj
                .iter()
                .zip(&rel)
                .map(|(a, b)| if (*a < 1e-6) == (*b < 1e-6) { 0.0 } else { 1.0 })
                .collect(),
            _ => unreachable!("validated diagnostic"),
        };
        report.push(&name, &values, tol);
    }
    Ok(csv)
}
