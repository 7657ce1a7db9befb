//! Linear velocity constraints on Herglotz systems: projectors, the
//! nonholonomic bracket and integrability diagnostics.

use crate::calculus::{
    lie_bracket, lie_derivative_form, pair, value_and_d, Chart, CovectorField, ScalarField, VectorField,
};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::herglotz::{Energy, LagrangianEta, LagrangianSystem};
use crate::linalg::{self, Lu, Mat};
use crate::scalar::Scalar;

/// |det C| below this is treated as singular.
pub const C_DET_TOL: f64 = 1e-10;

/// Phi^a = Phi^a_i(q) v^i, a = 1..k.
#[derive(Clone, Debug)]
pub struct LinearConstraints {
    pub n: usize,
    /// k rows of n coefficient expressions over the tangent chart.
    pub rows: Vec<Vec<Expr>>,
}

impl LinearConstraints {
    /// Coefficient strings over the q-variables of the tangent chart.
    pub fn parse(n: usize, rows: &[Vec<&str>]) -> Result<Self> {
        let chart = Chart::tangent(n);
        let rows = rows
            .iter()
            .map(|r| {
                if r.len() != n {
                    return Err(Error::Dimension { expected: n, got: r.len() });
                }
                r.iter().map(|s| chart.parse_base(s, false).map(|e| pad(e, &chart))).collect()
            })
            .collect::<Result<_>>()?;
        Ok(LinearConstraints { n, rows })
    }

    pub fn none(n: usize) -> Self {
        LinearConstraints { n, rows: Vec::new() }
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    /// (Phi^a_i) at the base point of x.
    pub fn matrix<S: Scalar>(&self, x: &[S]) -> Result<Mat<S>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|e| e.eval_at(x)).collect())
            .collect()
    }

    /// Phibar^a(q, v, z).
    pub fn values<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let n = self.n;
        Ok(self
            .matrix(x)?
            .iter()
            .map(|r| pair(r, &x[n..2 * n]))
            .collect())
    }

    /// Phitilde^a = Phi^a_i dq^i as covectors on TQ x R.
    pub fn lifted<S: Scalar>(&self, x: &[S]) -> Result<Mat<S>> {
        let n = self.n;
        Ok(self
            .matrix(x)?
            .into_iter()
            .map(|r| {
                let mut c = r;
                c.resize(2 * n + 1, S::zero());
                c
            })
            .collect())
    }

    /// Pointwise rank k at every probe.
    pub fn check_rank(&self, probes: &[Vec<f64>]) -> Result<()> {
        for p in probes {
            let r = linalg::rank(&self.matrix(p)?, self.n, 1e-9);
            if r != self.k() {
                return Err(Error::RankDeficient { rank: r, expected: self.k() });
            }
        }
        Ok(())
    }

    /// Orthogonal projection of the velocity onto ker Phi(q).
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let mut y = x.to_vec();
        if self.k() == 0 {
            return Ok(y);
        }
        let phi = self.matrix(x)?;
        let v = &x[n..2 * n];
        let gram: Mat<f64> = phi.iter().map(|a| phi.iter().map(|b| pair(a, b)).collect()).collect();
        let lam = linalg::solve(&gram, &linalg::mat_vec(&phi, v))?;
        for i in 0..n {
            y[n + i] -= (0..self.k()).map(|a| lam[a] * phi[a][i]).sum::<f64>();
        }
        Ok(y)
    }

    /// Pivot velocity columns: the trailing independent columns at x.
    pub fn pivots(&self, x: &[f64]) -> Result<Vec<usize>> {
        let phi = self.matrix(x)?;
        let mut chosen: Vec<usize> = Vec::new();
        for j in (0..self.n).rev() {
            let mut cols = chosen.clone();
            cols.push(j);
            let sub: Mat<f64> = phi.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect();
            if linalg::rank(&sub, cols.len(), 1e-9) == cols.len() {
                chosen = cols;
            }
            if chosen.len() == self.k() {
                break;
            }
        }
        chosen.sort_unstable();
        Ok(chosen)
    }
}

/// Re-index a base expression to the full tangent chart.
fn pad(e: Expr, chart: &Chart) -> Expr {
    chart
        .parse(e.source())
        .expect("base expression parses on the full chart")
}

/// Phibar^a as a scalar field.
#[derive(Clone, Copy, Debug)]
pub struct ConstraintValue<'a>(pub &'a LinearConstraints, pub usize);

impl ScalarField for ConstraintValue<'_> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        Ok(self.0.values(x)?[self.1].clone())
    }
}

/// Generator X_f = e_f - Phi_P^{-1} Phi_f of Delta on Q for a free column f.
#[derive(Clone, Debug)]
pub struct DeltaGenerator<'a> {
    pub cons: &'a LinearConstraints,
    pub pivots: Vec<usize>,
    pub free: usize,
}

impl DeltaGenerator<'_> {
    fn full<S: Scalar>(&self, q: &[S]) -> Vec<S> {
        let mut x = q.to_vec();
        x.resize(2 * self.cons.n + 1, S::zero());
        x
    }

    /// Phi_P^{-1} Phi(w): coordinates of w along the pivot directions.
    fn pivot_part<S: Scalar>(&self, q: &[S], w: &[S]) -> Result<Vec<S>> {
        let phi = self.cons.matrix(&self.full(q))?;
        let pp: Mat<S> = phi.iter().map(|r| self.pivots.iter().map(|&c| r[c].clone()).collect()).collect();
        let rhs: Vec<S> = phi.iter().map(|r| pair(r, w)).collect();
        linalg::solve(&pp, &rhs)
    }
}

impl VectorField for DeltaGenerator<'_> {
    fn value<S: Scalar>(&self, q: &[S]) -> Result<Vec<S>> {
        let n = self.cons.n;
        let mut e = vec![S::zero(); n];
        e[self.free] = S::cst(1.0);
        let c = self.pivot_part(q, &e)?;
        for (a, &p) in self.pivots.iter().enumerate() {
            e[p] = -c[a].clone();
        }
        Ok(e)
    }
}

/// Constrained Herglotz system (L, Delta).
#[derive(Clone, Debug)]
pub struct NonholonomicSystem<F = Expr> {
    pub sys: LagrangianSystem<F>,
    pub cons: LinearConstraints,
}

/// Outcome of the Hessian definiteness check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Definiteness {
    Positive,
    Negative,
    /// Cholesky failed for W and -W at some probe; only C regularity is checked.
    Indefinite,
}

/// Pointwise structure at x.
#[derive(Clone, Debug)]
pub struct Projectors<S> {
    pub z: Mat<S>,
    pub c: Mat<S>,
    pub c_inv: Mat<S>,
    /// rows are d Phibar^a
    pub dphi: Mat<S>,
    pub p: Mat<S>,
    pub q: Mat<S>,
}

impl NonholonomicSystem<Expr> {
    pub fn parse(l: &str, n: usize, rows: &[Vec<&str>]) -> Result<Self> {
        Ok(NonholonomicSystem {
            sys: LagrangianSystem::parse(l, n)?,
            cons: LinearConstraints::parse(n, rows)?,
        })
    }
}

impl<F: ScalarField> NonholonomicSystem<F> {
    pub fn new(sys: LagrangianSystem<F>, cons: LinearConstraints) -> Result<Self> {
        if sys.n != cons.n {
            return Err(Error::Dimension { expected: sys.n, got: cons.n });
        }
        Ok(NonholonomicSystem { sys, cons })
    }

    pub fn dim(&self) -> usize {
        2 * self.sys.n + 1
    }

    /// Cholesky test of W (or -W) at every probe.
    pub fn definiteness(&self, probes: &[Vec<f64>]) -> Result<Definiteness> {
        let n = self.sys.n;
        let mut pos = true;
        let mut neg = true;
        for p in probes {
            let w = self.sys.w(p)?;
            let m = nalgebra::DMatrix::from_fn(n, n, |i, j| w[i][j]);
            pos &= nalgebra::Cholesky::new(m.clone()).is_some();
            neg &= nalgebra::Cholesky::new(-m).is_some();
        }
        Ok(if pos {
            Definiteness::Positive
        } else if neg {
            Definiteness::Negative
        } else {
            Definiteness::Indefinite
        })
    }

    /// Z_a = -W^{ik} Phi^a_k d/dv^i (rows) and C_ab = dPhibar^b(Z_a).
    pub fn za_and_c<S: Scalar>(&self, x: &[S]) -> Result<(Mat<S>, Mat<S>)> {
        let pr = self.projectors_partial(x)?;
        Ok((pr.0, pr.1))
    }

    fn projectors_partial<S: Scalar>(&self, x: &[S]) -> Result<(Mat<S>, Mat<S>, Mat<S>)> {
        let n = self.sys.n;
        let m = self.dim();
        let k = self.cons.k();
        let w = self.sys.w(x)?;
        let lu = Lu::new(&w).map_err(|_| Error::SingularHessian)?;
        if lu.det().re().abs() <= C_DET_TOL {
            return Err(Error::SingularHessian);
        }
        let phi = self.cons.matrix(x)?;
        let z: Mat<S> = phi
            .iter()
            .map(|row| {
                let y = lu.solve(row);
                let mut v = vec![S::zero(); m];
                for i in 0..n {
                    v[n + i] = -y[i].clone();
                }
                v
            })
            .collect();
        let dphi: Mat<S> = (0..k)
            .map(|a| value_and_d(&ConstraintValue(&self.cons, a), x).map(|r| r.1))
            .collect::<Result<_>>()?;
        let c: Mat<S> = (0..k).map(|a| (0..k).map(|b| pair(&dphi[b], &z[a])).collect()).collect();
        Ok((z, c, dphi))
    }

    /// P and Q as matrices acting on tangent components.
    pub fn projectors<S: Scalar>(&self, x: &[S]) -> Result<Projectors<S>> {
        let m = self.dim();
        let k = self.cons.k();
        let (z, c, dphi) = self.projectors_partial(x)?;
        let c_inv = if k == 0 {
            Vec::new()
        } else {
            let lu = Lu::new(&c).map_err(|_| Error::SingularC)?;
            if lu.det().re().abs() <= C_DET_TOL {
                return Err(Error::SingularC);
            }
            lu.inverse()
        };
        // Q(Y) = C^{ba} dPhibar^b(Y) Z_a
        let mut q = vec![vec![S::zero(); m]; m];
        for a in 0..k {
            for b in 0..k {
                for i in 0..m {
                    let zi = c_inv[b][a].clone() * z[a][i].clone();
                    for j in 0..m {
                        q[i][j] = q[i][j].clone() + zi.clone() * dphi[b][j].clone();
                    }
                }
            }
        }
        let p: Mat<S> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let id = if i == j { S::cst(1.0) } else { S::zero() };
                        id - q[i][j].clone()
                    })
                    .collect()
            })
            .collect();
        Ok(Projectors { z, c, c_inv, dphi, p, q })
    }

    /// Gamma_{L,Delta} = P(Gamma_L).
    pub fn constrained_dynamics<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let pr = self.projectors(x)?;
        Ok(linalg::mat_vec(&pr.p, &self.sys.herglotz(x)?))
    }

    /// Q(Gamma_L).
    pub fn constraint_force<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let pr = self.projectors(x)?;
        Ok(linalg::mat_vec(&pr.q, &self.sys.herglotz(x)?))
    }

    /// Lambda_L as a matrix, A[i][j] = Lambda_L(e^i, e^j) = (sharp_L e^i)^j - R^i R^j.
    pub fn lambda_l_matrix<S: Scalar>(&self, x: &[S]) -> Result<Mat<S>> {
        let f = self.sys.flat_matrix(x)?;
        let inv = Lu::new(&f).map_err(|_| Error::SingularLagrangian)?.inverse();
        let r = self.sys.reeb(x)?;
        let m = self.dim();
        Ok((0..m)
            .map(|i| (0..m).map(|j| inv[j][i].clone() - r[i].clone() * r[j].clone()).collect())
            .collect())
    }

    /// (Lambda_{L,Delta} matrix P A P^T, R_{L,Delta} = P R_L).
    pub fn nh_structure<S: Scalar>(&self, x: &[S]) -> Result<(Mat<S>, Vec<S>)> {
        let pr = self.projectors(x)?;
        let a = self.lambda_l_matrix(x)?;
        let pa = linalg::mat_mul(&pr.p, &a);
        let lam = linalg::mat_mul(&pa, &linalg::transpose(&pr.p));
        let r = linalg::mat_vec(&pr.p, &self.sys.reeb(x)?);
        Ok((lam, r))
    }

    /// {f, g}_nh = Lambda_{L,Delta}(df, dg) - f R_{L,Delta}(g) + g R_{L,Delta}(f).
    pub fn nh_bracket<G: ScalarField, H: ScalarField, S: Scalar>(&self, f: &G, g: &H, x: &[S]) -> Result<S> {
        let (lam, r) = self.nh_structure(x)?;
        let (fv, df) = value_and_d(f, x)?;
        let (gv, dg) = value_and_d(g, x)?;
        Ok(pair(&df, &linalg::mat_vec(&lam, &dg)) - fv * pair(&dg, &r) + gv * pair(&df, &r))
    }

    /// X_H^Delta = sharp_{Lambda_{L,Delta}}(dH) - H R_{L,Delta}.
    pub fn constrained_hvf<G: ScalarField, S: Scalar>(&self, h: &G, x: &[S]) -> Result<Vec<S>> {
        let (lam, r) = self.nh_structure(x)?;
        let (hv, dh) = value_and_d(h, x)?;
        let m = self.dim();
        Ok((0..m)
            .map(|k| {
                let mut s = S::zero();
                for i in 0..m {
                    s = s + dh[i].clone() * lam[i][k].clone();
                }
                s - hv.clone() * r[k].clone()
            })
            .collect())
    }

    /// Form (ii): P(sharp_L(P^* dH)) - (R_{L,Delta}(H) + H) R_{L,Delta}.
    pub fn constrained_hvf_ii<G: ScalarField>(&self, h: &G, x: &[f64]) -> Result<Vec<f64>> {
        let pr = self.projectors(x)?;
        let (hv, dh) = value_and_d(h, x)?;
        let pdh = linalg::mat_vec(&linalg::transpose(&pr.p), &dh);
        let s = self.sys.sharp(&pdh, x)?;
        let ps = linalg::mat_vec(&pr.p, &s);
        let r = linalg::mat_vec(&pr.p, &self.sys.reeb(x)?);
        let rh = pair(&dh, &r);
        Ok(ps.iter().zip(&r).map(|(a, b)| a - (rh + hv) * b).collect())
    }

    /// Form (iii): P(X_H) - P(sharp_{Lambda_L}(Q^* dH)).
    pub fn constrained_hvf_iii<G: ScalarField>(&self, h: &G, x: &[f64]) -> Result<Vec<f64>> {
        let pr = self.projectors(x)?;
        let (_, dh) = value_and_d(h, x)?;
        let xh = self.sys.hamiltonian_field_of(h, x)?;
        let qdh = linalg::mat_vec(&linalg::transpose(&pr.q), &dh);
        let a = self.lambda_l_matrix(x)?;
        let m = self.dim();
        let sq: Vec<f64> = (0..m).map(|k| (0..m).map(|i| qdh[i] * a[i][k]).sum()).collect();
        let diff: Vec<f64> = xh.iter().zip(&sq).map(|(u, v)| u - v).collect();
        Ok(linalg::mat_vec(&pr.p, &diff))
    }

    /// Max componentwise difference between forms (i), (ii) and (iii).
    pub fn hvf_cross_residual<G: ScalarField>(&self, h: &G, x: &[f64]) -> Result<f64> {
        let a = self.constrained_hvf(h, x)?;
        let b = self.constrained_hvf_ii(h, x)?;
        let c = self.constrained_hvf_iii(h, x)?;
        Ok(a.iter()
            .zip(&b)
            .zip(&c)
            .fold(0.0_f64, |m, ((u, v), w)| m.max((u - v).abs()).max((u - w).abs())))
    }

    /// Smooth generators of Delta on Q, with pivots fixed at `reference`.
    pub fn delta_generators(&self, reference: &[f64]) -> Result<Vec<DeltaGenerator<'_>>> {
        let pivots = self.cons.pivots(reference)?;
        Ok((0..self.sys.n)
            .filter(|j| !pivots.contains(j))
            .map(|free| DeltaGenerator {
                cons: &self.cons,
                pivots: pivots.clone(),
                free,
            })
            .collect())
    }

    /// Max |Phi_P^{-1} Phi([X_a, X_b])| over generator pairs and base probes.
    pub fn involutivity_residual(&self, q_probes: &[Vec<f64>]) -> Result<f64> {
        let Some(first) = q_probes.first() else {
            return Ok(0.0);
        };
        if self.cons.k() == 0 {
            return Ok(0.0);
        }
        let mut full = first.clone();
        full.resize(self.dim(), 0.0);
        let gens = self.delta_generators(&full)?;
        let mut worst = 0.0_f64;
        for q in q_probes {
            for a in 0..gens.len() {
                for b in a + 1..gens.len() {
                    let br = lie_bracket(&gens[a], &gens[b], q)?;
                    let out = gens[a].pivot_part(q, &br)?;
                    worst = out.iter().fold(worst, |m, v| m.max(v.abs()));
                }
            }
        }
        Ok(worst)
    }

    /// |{f,{g,h}} + {g,{h,f}} + {h,{f,g}}| at x.
    pub fn jacobiator<A: ScalarField, B: ScalarField, C: ScalarField>(&self, f: &A, g: &B, h: &C, x: &[f64]) -> Result<f64> {
        let gh = NhBracket { nh: self, f: g, g: h };
        let hf = NhBracket { nh: self, f: h, g: f };
        let fg = NhBracket { nh: self, f, g };
        Ok((self.nh_bracket(f, &gh, x)? + self.nh_bracket(g, &hf, x)? + self.nh_bracket(h, &fg, x)?).abs())
    }

    /// Involutivity of Delta against the Jacobiator of the nonholonomic bracket.
    pub fn integrability_report(&self, points: &[Vec<f64>], triples: &[[Expr; 3]]) -> Result<IntegrabilityReport> {
        let n = self.sys.n;
        let q_probes: Vec<Vec<f64>> = points.iter().map(|p| p[..n].to_vec()).collect();
        let involutivity = self.involutivity_residual(&q_probes)?;
        let mut jac = 0.0_f64;
        for p in points {
            for [f, g, h] in triples {
                jac = jac.max(self.jacobiator(f, g, h, p)?);
            }
        }
        Ok(IntegrabilityReport { involutivity, jacobiator: jac })
    }

    /// ||L_{Gamma_{L,Delta}} eta_L + R_L(E_L) eta_L + L_{Q(Gamma_L)} eta_L||_inf.
    pub fn nh_dissipation_residual(&self, x: &[f64]) -> Result<f64> {
        let eta = LagrangianEta(&self.sys);
        let lg = lie_derivative_form(&ConstrainedHerglotz(self), &eta, x)?;
        let lq = lie_derivative_form(&ConstraintForce(self), &eta, x)?;
        let re = self.sys.reeb_energy(x)?;
        let e = eta.value(x)?;
        Ok((0..x.len()).fold(0.0_f64, |m, i| m.max((lg[i] + re * e[i] + lq[i]).abs())))
    }

    /// L_{Q(Gamma_L)} eta_L paired with the given Delta^l vectors.
    pub fn correction_pairing(&self, x: &[f64], vectors: &[Vec<f64>]) -> Result<f64> {
        let lq = lie_derivative_form(&ConstraintForce(self), &LagrangianEta(&self.sys), x)?;
        Ok(vectors.iter().fold(0.0_f64, |m, v| m.max(pair(&lq, v).abs())))
    }

    /// Max |Phibar| along a trajectory.
    pub fn drift(&self, rows: &[Vec<f64>]) -> Result<f64> {
        let mut worst = 0.0_f64;
        for r in rows {
            worst = self.cons.values(r)?.iter().fold(worst, |m, v| m.max(v.abs()));
        }
        Ok(worst)
    }
}

/// Involutivity and Jacobiator residuals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrabilityReport {
    pub involutivity: f64,
    pub jacobiator: f64,
}

/// Gamma_{L,Delta}.
#[derive(Clone, Copy, Debug)]
pub struct ConstrainedHerglotz<'a, F>(pub &'a NonholonomicSystem<F>);

impl<F: ScalarField> VectorField for ConstrainedHerglotz<'_, F> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.0.constrained_dynamics(x)
    }
}

/// Q(Gamma_L).
#[derive(Clone, Copy, Debug)]
pub struct ConstraintForce<'a, F>(pub &'a NonholonomicSystem<F>);

impl<F: ScalarField> VectorField for ConstraintForce<'_, F> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.0.constraint_force(x)
    }
}

/// {f, g}_nh as a scalar field.
#[derive(Clone, Copy, Debug)]
pub struct NhBracket<'a, N, A, B> {
    pub nh: &'a NonholonomicSystem<N>,
    pub f: &'a A,
    pub g: &'a B,
}

impl<N: ScalarField, A: ScalarField, B: ScalarField> ScalarField for NhBracket<'_, N, A, B> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        self.nh.nh_bracket(self.f, self.g, x)
    }
}

/// E_L of the underlying system.
pub fn energy<F>(nh: &NonholonomicSystem<F>) -> Energy<'_, F> {
    Energy(&nh.sys)
}

/// Seeded random quadratic observables on the tangent chart, in triples.
pub fn seeded_triples(n: usize, count: usize, seed: u64) -> Result<Vec<[Expr; 3]>> {
    let fs = crate::probe::quadratics(&Chart::tangent(n), 3 * count, seed)?;
    Ok(fs.chunks(3).map(|c| [c[0].clone(), c[1].clone(), c[2].clone()]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe;

    const PARTICLE: &str = "(v1^2 + v2^2 + v3^2)/2 - 0.1*z";

    fn particle() -> NonholonomicSystem {
        NonholonomicSystem::parse(PARTICLE, 3, &[vec!["-q2", "0", "1"]]).unwrap()
    }

    fn holonomic() -> NonholonomicSystem {
        NonholonomicSystem::parse(PARTICLE, 3, &[vec!["0", "0", "1"]]).unwrap()
    }

    fn free() -> NonholonomicSystem {
        NonholonomicSystem::new(LagrangianSystem::parse(PARTICLE, 3).unwrap(), LinearConstraints::none(3)).unwrap()
    }

    fn on_delta(nh: &NonholonomicSystem, count: usize) -> Vec<Vec<f64>> {
        probe::uniform(7, count, -1.5, 1.5, probe::SEED)
            .iter()
            .map(|p| nh.cons.project(p).unwrap())
            .collect()
    }

    #[test]
    fn z_and_c() {
        let x = [0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let (z, c) = particle().za_and_c(&x).unwrap();
        assert_eq!(z, vec![vec![0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0]]);
        assert_eq!(c, vec![vec![-2.0]]);
        let (z, c) = holonomic().za_and_c(&x).unwrap();
        assert_eq!(z, vec![vec![0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0]]);
        assert_eq!(c, vec![vec![-1.0]]);
        let (z, c) = free().za_and_c(&x).unwrap();
        assert!(z.is_empty() && c.is_empty());
    }

    #[test]
    fn z_is_sharp_of_lifted_constraint() {
        let nh = NonholonomicSystem::parse("v1^2/2 + q1*v1*v2 + v2^2 + z*v1 - q2^2", 2, &[vec!["1", "q1"]]).unwrap();
        for x in on_delta_n(&nh, 2) {
            let (z, c) = nh.za_and_c(&x).unwrap();
            let phit = nh.cons.lifted(&x).unwrap();
            let s = nh.sys.sharp(&phit[0], &x).unwrap();
            assert!(s.iter().zip(&z[0]).all(|(a, b)| (a - b).abs() < 1e-12));
            // C_ab = -W^{ik} Phi^b_k Phi^a_i
            let w = nh.sys.w(&x).unwrap();
            let phi = nh.cons.matrix(&x).unwrap();
            let y = linalg::solve(&w, &phi[0]).unwrap();
            assert!((c[0][0] + pair(&phi[0], &y)).abs() < 1e-12);
        }
    }

    fn on_delta_n(nh: &NonholonomicSystem, n: usize) -> Vec<Vec<f64>> {
        probe::grid(2 * n + 1).iter().map(|p| nh.cons.project(p).unwrap()).collect()
    }

    #[test]
    fn particle_dynamics() {
        let nh = particle();
        let x = [0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let g = nh.constrained_dynamics(&x).unwrap();
        let expect = [1.0, 1.0, 1.0, -0.6, -0.1, 0.4, 1.5];
        assert!(g.iter().zip(&expect).all(|(a, b)| (a - b).abs() < 1e-12), "{g:?}");
        for p in on_delta(&nh, 20) {
            let g = nh.constrained_dynamics(&p).unwrap();
            let d = value_and_d(&ConstraintValue(&nh.cons, 0), &p).unwrap().1;
            assert!(pair(&d, &g).abs() < 1e-9);
        }
        let x = [0.3, -0.2, 0.5, 0.4, 1.0, 0.7, 0.2];
        let a = free().constrained_dynamics(&x).unwrap();
        assert_eq!(a, free().sys.herglotz(&x).unwrap());
    }

    #[test]
    fn projector_identities() {
        let nh = particle();
        for (p, v) in on_delta(&nh, 10).iter().zip(probe::uniform(7, 10, -1.0, 1.0, 7)) {
            let pr = nh.projectors(p).unwrap();
            let pp = linalg::mat_mul(&pr.p, &pr.p);
            let qq = linalg::mat_mul(&pr.q, &pr.q);
            for i in 0..7 {
                for j in 0..7 {
                    assert!((pp[i][j] - pr.p[i][j]).abs() < 1e-9);
                    assert!((qq[i][j] - pr.q[i][j]).abs() < 1e-9);
                    let id = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(pr.p[i][j] + pr.q[i][j], id);
                }
            }
            let qz = linalg::mat_vec(&pr.q, &pr.z[0]);
            assert!(qz.iter().zip(&pr.z[0]).all(|(a, b)| (a - b).abs() < 1e-12));
            let pv = linalg::mat_vec(&pr.p, &v);
            let tangent = linalg::mat_vec(&pr.p, &pv);
            assert!(tangent.iter().zip(&pv).all(|(a, b)| (a - b).abs() < 1e-12));
            assert!(pair(&pr.dphi[0], &pv).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_matrix_matches_flat_route() {
        let nh = particle();
        let x = [0.3, -0.2, 0.5, 0.4, 1.0, 0.7, 0.2];
        let a = nh.lambda_l_matrix(&x).unwrap();
        let e = linalg::identity::<f64>(7);
        for i in 0..7 {
            for j in 0..7 {
                let l = nh.sys.lambda(&e[i], &e[j], &x).unwrap();
                assert!((a[i][j] - l).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn structure_examples() {
        let x = [0.3, -0.2, 0.5, 0.4, 1.0, 0.0, 0.2];
        let (_, r) = holonomic().nh_structure(&x).unwrap();
        assert_eq!(r, vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let (l0, r0) = free().nh_structure(&x).unwrap();
        assert_eq!(r0, free().sys.reeb(&x).unwrap());
        assert_eq!(l0, free().lambda_l_matrix(&x).unwrap());
        let nh = particle();
        for (p, beta) in on_delta(&nh, 10).iter().zip(probe::uniform(7, 10, -1.0, 1.0, 3)) {
            let (lam, _) = nh.nh_structure(p).unwrap();
            let phit = nh.cons.lifted(p).unwrap();
            assert!(pair(&phit[0], &linalg::mat_vec(&lam, &beta)).abs() < 1e-12);
        }
    }

    #[test]
    fn bracket_properties() {
        let nh = particle();
        let chart = Chart::tangent(3);
        let f = chart.parse("q1*v2 + sin(z) + v3^2 - q2*v1").unwrap();
        let g = chart.parse("cos(q3) + z*v1 + v2*v3").unwrap();
        let phi = ConstraintValue(&nh.cons, 0);
        let e = energy(&nh);
        let fl = ConstrainedHerglotz(&nh);
        for p in on_delta(&nh, 10) {
            assert!(nh.nh_bracket(&phi, &f, &p).unwrap().abs() < 1e-12);
            assert!(nh.nh_bracket(&f, &f, &p).unwrap().abs() < 1e-12);
            let (_, r) = nh.nh_structure(&p).unwrap();
            let re = pair(&crate::calculus::d(&e, &p).unwrap(), &r);
            let lhs = crate::calculus::directional(&g, &fl, &p).unwrap();
            let rhs = nh.nh_bracket(&e, &g, &p).unwrap() - g.eval_at(&p).unwrap() * re;
            assert!((lhs - rhs).abs() < 1e-7);
            // {f, gh} - g{f,h} - h{f,g} + gh R(f)
            let gh = crate::calculus::Product(&g, &e);
            let rf = pair(&crate::calculus::d(&f, &p).unwrap(), &r);
            let (gv, ev) = (g.eval_at(&p).unwrap(), e.value(&p).unwrap());
            let lz = nh.nh_bracket(&f, &gh, &p).unwrap() - gv * nh.nh_bracket(&f, &e, &p).unwrap()
                - ev * nh.nh_bracket(&f, &g, &p).unwrap()
                + gv * ev * rf;
            assert!(lz.abs() < 1e-6);
        }
    }

    #[test]
    fn constrained_hamiltonian_fields() {
        let chart = Chart::tangent(3);
        let h = chart.parse("q1*v2 + exp(0.3*z) + v3^2").unwrap();
        let nh = particle();
        let eta = LagrangianEta(&nh.sys);
        let e = energy(&nh);
        for p in on_delta(&nh, 10) {
            let x = nh.constrained_hvf(&h, &p).unwrap();
            assert!((pair(&eta.value(&p).unwrap(), &x) + h.eval_at(&p).unwrap()).abs() < 1e-8);
            assert!(nh.hvf_cross_residual(&h, &p).unwrap() < 1e-8);
            let xe = nh.constrained_hvf(&e, &p).unwrap();
            let g = nh.constrained_dynamics(&p).unwrap();
            assert!(xe.iter().zip(&g).all(|(a, b)| (a - b).abs() < 1e-8));
        }
        let x = [0.3, -0.2, 0.5, 0.4, 1.0, 0.7, 0.2];
        let a = free().constrained_hvf(&h, &x).unwrap();
        let b = free().sys.hamiltonian_field_of(&h, &x).unwrap();
        assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-12));
    }

    #[test]
    fn integrability() {
        let triples = seeded_triples(3, 3, probe::SEED).unwrap();
        let nh = particle();
        let pts = on_delta(&nh, 4);
        let rep = nh.integrability_report(&pts, &triples).unwrap();
        let at_y1 = nh.involutivity_residual(&[vec![0.0, 1.0, 0.0]]).unwrap();
        assert!((at_y1 - 1.0).abs() < 1e-12);
        assert!(rep.involutivity > 0.5);
        assert!(rep.jacobiator > 1e-6, "{rep:?}");

        let hol = holonomic();
        let rep = hol.integrability_report(&on_delta(&hol, 4), &triples).unwrap();
        assert!(rep.involutivity < 1e-8 && rep.jacobiator < 1e-8, "{rep:?}");

        let fr = free();
        let rep = fr.integrability_report(&on_delta(&fr, 4), &triples).unwrap();
        assert!(rep.jacobiator < 1e-7, "{rep:?}");
    }

    #[test]
    fn dissipation_identity() {
        let nh = particle();
        for p in on_delta(&nh, 10) {
            assert!(nh.nh_dissipation_residual(&p).unwrap() < 1e-7);
            let gens = nh.delta_generators(&p).unwrap();
            let vs: Vec<Vec<f64>> = gens
                .iter()
                .zip(probe::uniform(4, gens.len(), -1.0, 1.0, 11))
                .map(|(g, r)| {
                    let mut v = g.value(&p[..3]).unwrap();
                    v.extend(r);
                    v
                })
                .collect();
            assert!(nh.correction_pairing(&p, &vs).unwrap() < 1e-8);
        }
        let x = [0.3, -0.2, 0.5, 0.4, 1.0, 0.7, 0.2];
        assert!(free().nh_dissipation_residual(&x).unwrap() < 1e-10);
    }

    #[test]
    fn drift_is_small() {
        let nh = particle();
        let x0 = [0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let tr = crate::calculus::integrate(&ConstrainedHerglotz(&nh), &x0, 1e-3, 5.0, crate::calculus::Method::Rk4).unwrap();
        assert!(nh.drift(&tr.rows).unwrap() < 1e-6);
    }

    #[test]
    fn definiteness_and_singular_c() {
        let nh = particle();
        assert_eq!(nh.definiteness(&probe::grid(7)).unwrap(), Definiteness::Positive);
        let ind = NonholonomicSystem::parse("(v1^2 - v2^2)/2", 2, &[vec!["1", "1"]]).unwrap();
        assert_eq!(ind.definiteness(&[vec![0.0; 5]]).unwrap(), Definiteness::Indefinite);
        assert_eq!(ind.projectors(&[0.0; 5]).unwrap_err(), Error::SingularC);
        let sing = NonholonomicSystem::parse("v1^2/2", 2, &[vec!["0", "1"]]).unwrap();
        assert_eq!(sing.za_and_c(&[0.0; 5]).unwrap_err(), Error::SingularHessian);
    }

    #[test]
    fn rank_check() {
        let c = LinearConstraints::parse(2, &[vec!["q1", "0"]]).unwrap();
        assert!(c.check_rank(&[vec![1.0, 0.0, 0.0, 0.0, 0.0]]).is_ok());
        assert!(matches!(c.check_rank(&[vec![0.0; 5]]), Err(Error::RankDeficient { .. })));
    }
}
