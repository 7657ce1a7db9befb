//! Scenario files: strict JSON with key-path errors.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::calculus::{Chart, Method};
use crate::contact::{ContactStructure, HamiltonianSystem};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::hamjac::HjSection;
use crate::herglotz::LagrangianSystem;
use crate::nonholo::{LinearConstraints, NonholonomicSystem};
use crate::symmetry::BaseField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Hamiltonian,
    Lagrangian,
    Nonholonomic,
    Singular,
    HamiltonJacobi,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Hamiltonian => "hamiltonian",
            Kind::Lagrangian => "lagrangian",
            Kind::Nonholonomic => "nonholonomic",
            Kind::Singular => "singular",
            Kind::HamiltonJacobi => "hamilton-jacobi",
        }
    }

    /// Kinds that integrate a trajectory.
    pub fn integrates(self) -> bool {
        matches!(self, Kind::Hamiltonian | Kind::Lagrangian | Kind::Nonholonomic)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Rk4,
    Euler,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Method {
        match m {
            MethodName::Rk4 => Method::Rk4,
            MethodName::Euler => Method::Euler,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integrator {
    pub method: MethodName,
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostic {
    pub name: String,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_report")]
    pub report: String,
}

fn default_csv() -> String {
    "trajectory.csv".into()
}

fn default_report() -> String {
    "report.txt".into()
}

impl Default for Output {
    fn default() -> Self {
        Output {
            csv: default_csv(),
            report: default_report(),
        }
    }
}

/// A scenario document. Expression strings may use the names in `parameters`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: Kind,
    pub n: usize,
    #[serde(default)]
    pub hamiltonian: Option<String>,
    #[serde(default)]
    pub lagrangian: Option<String>,
    /// Rows of Phi^a_i over the q-variables.
    #[serde(default)]
    pub constraints: Vec<Vec<String>>,
    /// Section components gamma_j over (q, z).
    #[serde(default)]
    pub section: Vec<String>,
    /// Components of a base vector field on Q for the Noether suite.
    #[serde(default)]
    pub symmetry: Vec<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    #[serde(default)]
    pub integrator: Option<Integrator>,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default)]
    pub output: Output,
}

fn config(path: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        msg: msg.into(),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() || path == "." {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Turn serde's messages into `path: message` form.
fn from_serde(err: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = err.path().to_string();
    let msg = err.inner().to_string();
    let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
    if let Some(rest) = msg.strip_prefix("missing field `") {
        let key = rest.split('`').next().unwrap_or("");
        return config(join(&path, key), "required");
    }
    if msg.starts_with("unknown field `") {
        return config(path, "unknown key");
    }
    config(if path == "." { String::new() } else { path }, msg)
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(de).map_err(from_serde)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Replace parameter names by their values.
    pub fn substitute(&self, text: &str) -> String {
        if self.parameters.is_empty() {
            return text.to_string();
        }
        let mut out = String::with_capacity(text.len());
        let mut ident = String::new();
        let flush = |ident: &mut String, out: &mut String| {
            match self.parameters.get(ident.as_str()) {
                Some(v) => out.push_str(&format!("({v:?})")),
                None => out.push_str(ident),
            }
            ident.clear();
        };
        for c in text.chars() {
            let starts = c.is_ascii_alphabetic() || c == '_';
            if starts || (!ident.is_empty() && c.is_ascii_alphanumeric()) {
                ident.push(c);
            } else {
                flush(&mut ident, &mut out);
                out.push(c);
            }
        }
        flush(&mut ident, &mut out);
        out
    }

    fn parse_in(&self, chart: &Chart, key: &str, text: &str) -> Result<Expr> {
        self.precheck(key, text, &|s| chart.index_of(s))?;
        chart.parse(&self.substitute(text)).map_err(|e| expr_error(key, text, e))
    }

    /// Parse the raw text with parameter names as variables, so error
    /// offsets refer to the text as written.
    fn precheck(&self, key: &str, text: &str, known: &dyn Fn(&str) -> Option<usize>) -> Result<()> {
        let lookup = |s: &str| known(s).or_else(|| self.parameters.contains_key(s).then_some(0));
        Expr::parse_with(text, Vec::new(), &lookup)
            .map(|_| ())
            .map_err(|e| expr_error(key, text, e))
    }

    fn base_lookup(chart: &Chart, with_z: bool) -> impl Fn(&str) -> Option<usize> + '_ {
        move |s: &str| match chart.index_of(s)? {
            i if i < chart.n => Some(i),
            i if with_z && i == chart.z() => Some(i),
            _ => None,
        }
    }

    fn require<'a>(&self, key: &str, v: &'a Option<String>) -> Result<&'a str> {
        v.as_deref().ok_or_else(|| config(key, format!("required for kind {}", self.kind.name())))
    }

    pub fn chart(&self) -> Chart {
        match self.kind {
            Kind::Hamiltonian | Kind::HamiltonJacobi => Chart::cotangent(self.n),
            _ => Chart::tangent(self.n),
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(config("n", "must be at least 1"));
        }
        for (k, d) in self.diagnostics.iter().enumerate() {
            if super::run::diagnostic_tolerance(self.kind, &d.name).is_none() {
                return Err(config(
                    format!("diagnostics[{k}].name"),
                    format!("unknown diagnostic '{}' for kind {}", d.name, self.kind.name()),
                ));
            }
            if self.diagnostics[..k].iter().any(|e| e.name == d.name) {
                return Err(config(format!("diagnostics[{k}].name"), "listed twice"));
            }
            if let Some(t) = d.tol {
                if !(t > 0.0) {
                    return Err(config(format!("diagnostics[{k}].tol"), "must be positive"));
                }
            }
        }
        let built = self.build()?;
        if self.kind.integrates() {
            let x0 = self.initial.as_ref().ok_or_else(|| config("initial", "required"))?;
            if x0.len() != self.dim() {
                return Err(config(
                    "initial",
                    format!("expected {} values, got {}", self.dim(), x0.len()),
                ));
            }
            let integ = self.integrator.as_ref().ok_or_else(|| config("integrator", "required"))?;
            if !(integ.dt > 0.0) {
                return Err(config("integrator.dt", "must be positive"));
            }
            if !(integ.t_end >= 0.0) {
                return Err(config("integrator.t_end", "must be non-negative"));
            }
            if let System::Nonholonomic(nh) = &built {
                let v = nh.cons.values(x0)?;
                if v.iter().any(|c| c.abs() > 1e-9) {
                    return Err(config("initial", "does not satisfy the constraints within 1e-9"));
                }
            }
        }
        Ok(())
    }

    /// Build the system described by the scenario.
    pub fn build(&self) -> Result<System> {
        let chart = self.chart();
        let n = self.n;
        Ok(match self.kind {
            Kind::Hamiltonian => {
                let h = self.parse_in(&chart, "hamiltonian", self.require("hamiltonian", &self.hamiltonian)?)?;
                System::Hamiltonian(HamiltonianSystem::new(ContactStructure::canonical(n), h))
            }
            Kind::Lagrangian | Kind::Singular => {
                let l = self.parse_in(&chart, "lagrangian", self.require("lagrangian", &self.lagrangian)?)?;
                let sys = LagrangianSystem::new(n, l);
                if self.kind == Kind::Lagrangian {
                    System::Lagrangian(sys)
                } else {
                    System::Singular(sys)
                }
            }
            Kind::Nonholonomic => {
                let l = self.parse_in(&chart, "lagrangian", self.require("lagrangian", &self.lagrangian)?)?;
                let mut rows = Vec::new();
                for (a, row) in self.constraints.iter().enumerate() {
                    if row.len() != n {
                        return Err(config(format!("constraints[{a}]"), format!("expected {n} coefficients")));
                    }
                    let mut r = Vec::with_capacity(n);
                    for (i, c) in row.iter().enumerate() {
                        let key = format!("constraints[{a}][{i}]");
                        self.precheck(&key, c, &Self::base_lookup(&chart, false))?;
                        let sub = self.substitute(c);
                        r.push(chart.parse(&sub).map_err(|e| expr_error(&key, c, e))?);
                    }
                    rows.push(r);
                }
                let cons = LinearConstraints { n, rows };
                System::Nonholonomic(NonholonomicSystem::new(LagrangianSystem::new(n, l), cons)?)
            }
            Kind::HamiltonJacobi => {
                let h = self.parse_in(&chart, "hamiltonian", self.require("hamiltonian", &self.hamiltonian)?)?;
                if self.section.len() != n {
                    return Err(config("section", format!("expected {n} components")));
                }
                let comps: Vec<String> = self.section.iter().map(|c| self.substitute(c)).collect();
                for (j, c) in self.section.iter().enumerate() {
                    self.precheck(&format!("section[{j}]"), c, &Self::base_lookup(&chart, true))?;
                }
                let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
                System::HamiltonJacobi {
                    h,
                    gamma: HjSection::parse(n, &refs)?,
                }
            }
        })
    }

    /// The Noether generator, if one is declared.
    pub fn symmetry_field(&self) -> Result<Option<BaseField>> {
        if self.symmetry.is_empty() {
            return Ok(None);
        }
        if self.symmetry.len() != self.n {
            return Err(config("symmetry", format!("expected {} components", self.n)));
        }
        let chart = Chart::tangent(self.n);
        for (i, c) in self.symmetry.iter().enumerate() {
            self.precheck(&format!("symmetry[{i}]"), c, &Self::base_lookup(&chart, false))?;
        }
        let comps: Vec<String> = self.symmetry.iter().map(|c| self.substitute(c)).collect();
        let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
        BaseField::on_q(self.n, &refs)
            .map(Some)
            .map_err(|e| expr_error("symmetry", &self.symmetry.join(", "), e))
    }
}

fn expr_error(key: &str, text: &str, e: Error) -> Error {
    config(key, format!("cannot parse '{text}': {e}"))
}

/// A built system.
#[derive(Clone, Debug)]
pub enum System {
    Hamiltonian(HamiltonianSystem<Expr>),
    Lagrangian(LagrangianSystem),
    Nonholonomic(NonholonomicSystem),
    Singular(LagrangianSystem),
    HamiltonJacobi { h: Expr, gamma: HjSection },
}

#[cfg(test)]
mod tests {
    use super::*;

    const DAMPED: &str = r#"{
        "kind": "hamiltonian", "n": 1,
        "hamiltonian": "p^2/2 + q^2/2 + gamma*z",
        "parameters": {"gamma": 0.1},
        "initial": [1, 0, 0],
        "integrator": {"method": "rk4", "dt": 0.001, "t_end": 10},
        "diagnostics": [{"name": "energy_decay"}, {"name": "volume_identity"}]
    }"#;

    #[test]
    fn loads_damped_oscillator() {
        let s = Scenario::from_json(DAMPED).unwrap();
        assert_eq!((s.kind, s.n), (Kind::Hamiltonian, 1));
        assert_eq!(s.substitute("gamma*z + gammas"), "(0.1)*z + gammas");
    }

    #[test]
    fn key_path_errors() {
        let missing = DAMPED.replace(r#""dt": 0.001, "#, "");
        assert_eq!(
            Scenario::from_json(&missing).unwrap_err(),
            config("integrator.dt", "required")
        );
        let unknown = DAMPED.replace(r#""n": 1,"#, r#""n": 1, "bogus": 2,"#);
        assert_eq!(Scenario::from_json(&unknown).unwrap_err(), config("bogus", "unknown key"));
        let bad = DAMPED.replace("p^2/2", "p^^2");
        match Scenario::from_json(&bad).unwrap_err() {
            Error::Config { path, msg } => {
                assert_eq!(path, "hamiltonian");
                assert!(msg.contains("offset 2"), "{msg}");
            }
            e => panic!("{e:?}"),
        }
        let short = DAMPED.replace("[1, 0, 0]", "[1, 0]");
        assert!(matches!(Scenario::from_json(&short).unwrap_err(), Error::Config { path, .. } if path == "initial"));
    }

    #[test]
    fn nonholonomic_initial_must_satisfy_constraints() {
        let text = r#"{
            "kind": "nonholonomic", "n": 3,
            "lagrangian": "(v1^2 + v2^2 + v3^2)/2 - 0.1*z",
            "constraints": [["-q2", "0", "1"]],
            "initial": [0, 1, 0, 1, 1, 1.5, 0],
            "integrator": {"method": "rk4", "dt": 0.001, "t_end": 1}
        }"#;
        assert!(matches!(Scenario::from_json(text).unwrap_err(), Error::Config { path, .. } if path == "initial"));
        let bad = text.replace("\"-q2\"", "\"-v2\"");
        assert!(matches!(Scenario::from_json(&bad).unwrap_err(), Error::Config { path, .. } if path == "constraints[0][0]"));
    }
}
