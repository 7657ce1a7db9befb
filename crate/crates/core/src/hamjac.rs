//! Hamilton–Jacobi residuals for sections gamma of T*Q x R -> Q x R.
//!
//! A section is given by its momentum components gamma_j(q, z); base points
//! are (q, z).

use crate::calculus::{value_and_d, Chart, ScalarField, VectorField};
use crate::contact::{Bracket, ContactStructure, HamiltonianField};
use crate::error::{Error, Result};
use crate::expr::Expr;

/// gamma_j(q, z; lam) with optional fixed parameters appended to the base point.
#[derive(Clone, Debug)]
pub struct HjSection {
    pub n: usize,
    pub gamma: Vec<Expr>,
    pub params: Vec<f64>,
}

/// Value and derivatives of a section at a base point.
struct SectionJet {
    /// gamma_i
    g: Vec<f64>,
    /// dq[i][j] = d gamma_i / dq^j
    dq: Vec<Vec<f64>>,
    /// dz[i] = d gamma_i / dz
    dz: Vec<f64>,
}

impl HjSection {
    /// Components over (q, z).
    pub fn parse(n: usize, comps: &[&str]) -> Result<Self> {
        if comps.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: comps.len(),
            });
        }
        let chart = Chart::cotangent(n);
        Ok(HjSection {
            n,
            gamma: comps.iter().map(|c| chart.parse_base(c, true)).collect::<Result<_>>()?,
            params: Vec::new(),
        })
    }

    /// Components over (q, z, lam_1..lam_k); `lam` names the parameters.
    pub fn parse_family(n: usize, comps: &[&str], lam: &[&str]) -> Result<Self> {
        let chart = Chart::cotangent(n);
        let mut names: Vec<String> = chart.names[..n].to_vec();
        names.push("z".into());
        names.extend(lam.iter().map(|s| s.to_string()));
        let lookup = |s: &str| {
            if let Some(k) = lam.iter().position(|l| *l == s) {
                return Some(n + 1 + k);
            }
            match chart.index_of(s)? {
                i if i < n => Some(i),
                i if i == 2 * n => Some(n),
                _ => None,
            }
        };
        Ok(HjSection {
            n,
            gamma: comps
                .iter()
                .map(|c| Expr::parse_with(c, names.clone(), &lookup))
                .collect::<Result<_>>()?,
            params: vec![0.0; lam.len()],
        })
    }

    pub fn with_params(&self, params: &[f64]) -> Self {
        HjSection {
            params: params.to_vec(),
            ..self.clone()
        }
    }

    fn point(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n + 1 {
            return Err(Error::Dimension {
                expected: self.n + 1,
                got: b.len(),
            });
        }
        let mut p = b.to_vec();
        p.extend_from_slice(&self.params);
        Ok(p)
    }

    fn jet(&self, b: &[f64]) -> Result<SectionJet> {
        let n = self.n;
        let p = self.point(b)?;
        let mut g = Vec::with_capacity(n);
        let mut dq = Vec::with_capacity(n);
        let mut dz = Vec::with_capacity(n);
        for e in &self.gamma {
            let (v, d) = value_and_d(e, &p)?;
            g.push(v);
            dq.push(d[..n].to_vec());
            dz.push(d[n]);
        }
        Ok(SectionJet { g, dq, dz })
    }

    /// gamma(q, z) = (q, gamma(q, z), z) on the cotangent chart.
    pub fn lift(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let p = self.point(b)?;
        let mut x = b[..n].to_vec();
        for e in &self.gamma {
            x.push(e.eval_at(&p)?);
        }
        x.push(b[n]);
        Ok(x)
    }
}

/// Max residuals of the three coordinate admissibility conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Admissibility {
    /// d_j g_i - g_j dz g_i - d_i g_j + g_i dz g_j
    pub coiso: f64,
    /// d_j g_i - d_i g_j
    pub coiso2: f64,
    /// g_j dz g_i - g_i dz g_j
    pub coiso3: f64,
    /// Lambda(d phi_i, d phi_j) on the graph, phi_i = p_i - g_i:
    /// d_j g_i + g_j dz g_i - d_i g_j - g_i dz g_j
    pub coisotropic: f64,
}

impl Admissibility {
    pub fn max(&self) -> f64 {
        self.coiso.max(self.coiso2).max(self.coiso3).max(self.coisotropic)
    }
}

pub fn admissibility(gamma: &HjSection, b: &[f64]) -> Result<Admissibility> {
    let j = gamma.jet(b)?;
    let n = gamma.n;
    let mut r = Admissibility {
        coiso: 0.0,
        coiso2: 0.0,
        coiso3: 0.0,
        coisotropic: 0.0,
    };
    for a in 0..n {
        for c in 0..n {
            let sym = j.dq[a][c] - j.dq[c][a];
            let zz = j.g[a] * j.dz[c] - j.g[c] * j.dz[a];
            r.coiso = r.coiso.max((sym + zz).abs());
            r.coiso2 = r.coiso2.max(sym.abs());
            r.coiso3 = r.coiso3.max(zz.abs());
            r.coisotropic = r.coisotropic.max((sym - zz).abs());
        }
    }
    Ok(r)
}

fn h_jet<H: ScalarField>(h: &H, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    value_and_d(h, x)
}

/// Left side of the contact Hamilton–Jacobi equation, one entry per j:
/// H_qj + H_pi d_j g_i + g_j gamma_o - H dz g_j, with
/// gamma_o = H_z + H_pi dz g_i and H evaluated at (q, gamma(q, z), z).
pub fn hj_residual<H: ScalarField>(h: &H, gamma: &HjSection, b: &[f64]) -> Result<Vec<f64>> {
    let n = gamma.n;
    let j = gamma.jet(b)?;
    let (hv, dh) = h_jet(h, &gamma.lift(b)?)?;
    let hp = &dh[n..2 * n];
    let hz = dh[2 * n];
    let gamma_o = hz + (0..n).map(|i| hp[i] * j.dz[i]).sum::<f64>();
    Ok((0..n)
        .map(|c| {
            let mut r = dh[c] + j.g[c] * gamma_o - hv * j.dz[c];
            for i in 0..n {
                r += hp[i] * j.dq[i][c];
            }
            r
        })
        .collect())
}

/// ||X_H(gamma(b)) - T gamma(X_H^gamma)(b)||_inf.
pub fn relatedness_residual<H: ScalarField>(h: &H, gamma: &HjSection, b: &[f64]) -> Result<f64> {
    let n = gamma.n;
    let x = gamma.lift(b)?;
    let xh = HamiltonianField {
        s: ContactStructure::canonical(n),
        h,
    }
    .value(&x)?;
    // X_H^gamma = T pi X_H(gamma): the (q, z) components
    let mut base = xh[..n].to_vec();
    base.push(xh[2 * n]);
    let j = gamma.jet(b)?;
    let mut pushed = Vec::with_capacity(2 * n + 1);
    pushed.extend_from_slice(&base[..n]);
    for c in 0..n {
        let mut v = j.dz[c] * base[n];
        for i in 0..n {
            v += j.dq[c][i] * base[i];
        }
        pushed.push(v);
    }
    pushed.push(base[n]);
    Ok(xh.iter().zip(&pushed).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

/// |H(gamma) - gamma_i H_pi(gamma)|: zero when X_H is tangent to the leaves z = const.
pub fn strong_residual<H: ScalarField>(h: &H, gamma: &HjSection, b: &[f64]) -> Result<f64> {
    let n = gamma.n;
    let x = gamma.lift(b)?;
    let (hv, dh) = h_jet(h, &x)?;
    let s: f64 = (0..n).map(|i| x[n + i] * dh[n + i]).sum();
    Ok((hv - s).abs())
}

/// A parametrized family of sections with the recovered functions f_i on T*Q x R.
#[derive(Clone, Debug)]
pub struct CompleteSolution {
    pub family: HjSection,
    pub f: Vec<Expr>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompleteSolutionReport {
    /// max over parameters and base probes of admissibility and HJ residuals
    pub section_residual: f64,
    /// max |X_H(f_i)|
    pub conservation: f64,
    /// max |{f_i, f_j} + f_i R(f_j) - f_j R(f_i)|
    pub involution: f64,
}

pub fn complete_solution_report<H: ScalarField>(
    cs: &CompleteSolution,
    h: &H,
    params: &[Vec<f64>],
    base_probes: &[Vec<f64>],
    phase_probes: &[Vec<f64>],
) -> Result<CompleteSolutionReport> {
    let n = cs.family.n;
    let s = ContactStructure::canonical(n);
    let mut section_residual = 0.0_f64;
    for lam in params {
        let g = cs.family.with_params(lam);
        for b in base_probes {
            section_residual = section_residual.max(admissibility(&g, b)?.max());
            for r in hj_residual(h, &g, b)? {
                section_residual = section_residual.max(r.abs());
            }
        }
    }
    let xh = HamiltonianField { s, h };
    let mut conservation = 0.0_f64;
    let mut involution = 0.0_f64;
    for x in phase_probes {
        let field = xh.value(x)?;
        let mut vals = Vec::with_capacity(cs.f.len());
        let mut reeb = Vec::with_capacity(cs.f.len());
        for f in &cs.f {
            let (v, d) = value_and_d(f, x)?;
            conservation = conservation.max(crate::calculus::pair(&d, &field).abs());
            vals.push(v);
            reeb.push(d[2 * n]);
        }
        for a in 0..cs.f.len() {
            for c in a + 1..cs.f.len() {
                let br = Bracket {
                    j: s.jacobi(),
                    f: &cs.f[a],
                    g: &cs.f[c],
                }
                .value(x)?;
                involution = involution.max((br + vals[a] * reeb[c] - vals[c] * reeb[a]).abs());
            }
        }
    }
    Ok(CompleteSolutionReport {
        section_residual,
        conservation,
        involution,
    })
}
