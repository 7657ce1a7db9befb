//! Precontact systems, the constraint algorithm and the Dirac–Jacobi bracket.

use std::rc::Rc;

use crate::calculus::{field_jacobian, pair, value_and_d, Chart, CovectorField, ScalarField, VectorField};
use crate::contact::{EtaField, JacobiStructure};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::herglotz::{Energy, LagrangianEta, LagrangianSystem};
use crate::linalg::{self, Lu, Mat};
use crate::probe;
use crate::scalar::Scalar;

/// Relative SVD threshold for rank decisions on exact (AD) matrices.
pub const RANK_TOL: f64 = 1e-9;
/// Relative threshold for constraint-differential matrices, whose rows past
/// the first batch come from finite differences.
pub const TANGENT_TOL: f64 = 1e-7;
const FD_STEP: f64 = 1e-5;

/// eta = dz - sum y_i dx^i on the chart (x, y, z, u).
#[derive(Clone, Copy, Debug)]
pub struct DarbouxEta {
    pub r: usize,
    pub s: usize,
}

impl CovectorField for DarbouxEta {
    fn value<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>> {
        let r = self.r;
        let mut e = vec![S::zero(); 2 * r + 1 + self.s];
        for i in 0..r {
            e[i] = -p[r + i].clone();
        }
        e[2 * r] = S::cst(1.0);
        Ok(e)
    }
}

/// A covector field viewed as a vector field, for Jacobians.
struct AsVector<'a, E>(&'a E);

impl<E: CovectorField> VectorField for AsVector<'_, E> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.0.value(x)
    }
}

/// (M, eta, H) with eta precontact.
#[derive(Clone, Debug)]
pub struct PrecontactSystem<E, H> {
    pub dim: usize,
    pub eta: E,
    pub h: H,
}

impl PrecontactSystem<DarbouxEta, Expr> {
    /// Darboux presentation on (x, y, z, u) with H parsed over that chart.
    pub fn darboux(r: usize, s: usize, h: &str) -> Result<Self> {
        Ok(PrecontactSystem {
            dim: 2 * r + 1 + s,
            eta: DarbouxEta { r, s },
            h: Chart::precontact(r, s).parse(h)?,
        })
    }
}

impl PrecontactSystem<EtaField, Expr> {
    /// The canonical contact structure as a (class 2n+1) precontact system.
    pub fn contact(n: usize, h: &str) -> Result<Self> {
        let s = crate::contact::ContactStructure::canonical(n);
        Ok(PrecontactSystem {
            dim: s.dim(),
            eta: EtaField(s),
            h: s.chart().parse(h)?,
        })
    }
}

impl<'a, F: ScalarField> PrecontactSystem<LagrangianEta<'a, F>, Energy<'a, F>> {
    /// (TQ x R, eta_L, E_L).
    pub fn lagrangian(sys: &'a LagrangianSystem<F>) -> Self {
        PrecontactSystem {
            dim: sys.dim(),
            eta: LagrangianEta(sys),
            h: Energy(sys),
        }
    }
}

/// Class data at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassInfo {
    pub r: usize,
    pub s: usize,
    /// rank of the flat-bar matrix, 2r + 1
    pub rank: usize,
}

impl<E: CovectorField, H: ScalarField> PrecontactSystem<E, H> {
    /// Matrix of flat-bar(v) = i_v d eta + eta(v) eta; column a is flat-bar(e_a).
    pub fn flat_bar(&self, x: &[f64]) -> Result<Mat<f64>> {
        let (eta, jac) = field_jacobian(&AsVector(&self.eta), x)?;
        let m = self.dim;
        // d eta(u, w) = sum (d_a eta_b - d_b eta_a) u^a w^b, jac[b][a] = d_a eta_b
        Ok((0..m)
            .map(|b| {
                (0..m)
                    .map(|a| jac[b][a] - jac[a][b] + eta[a] * eta[b])
                    .collect()
            })
            .collect())
    }

    pub fn class(&self, x: &[f64]) -> Result<ClassInfo> {
        let rank = linalg::rank_checked(&self.flat_bar(x)?, self.dim, RANK_TOL, 100.0)?;
        if rank % 2 == 0 {
            return Err(Error::BoundaryRank);
        }
        Ok(ClassInfo {
            r: (rank - 1) / 2,
            s: self.dim - rank,
            rank,
        })
    }

    /// Orthonormal basis of C = ker flat-bar.
    pub fn characteristic_kernel(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(linalg::null_space(&self.flat_bar(x)?, self.dim, RANK_TOL))
    }

    /// The minimum-norm Reeb vector, flat-bar(R) = eta.
    pub fn reeb(&self, x: &[f64]) -> Result<Vec<f64>> {
        let fb = self.flat_bar(x)?;
        let eta = self.eta.value(x)?;
        let r = linalg::pinv_solve(&fb, self.dim, &eta, RANK_TOL);
        let back = linalg::mat_vec(&fb, &r);
        if back.iter().zip(&eta).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Err(Error::SingularSystem);
        }
        Ok(r)
    }

    /// gamma_H = dH - (H + R(H)) eta for R = reeb + sum_k c_k K_k, K the kernel basis.
    pub fn gamma_h(&self, x: &[f64], reeb_offset: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.reeb(x)?;
        if !reeb_offset.is_empty() {
            for (c, k) in reeb_offset.iter().zip(self.characteristic_kernel(x)?) {
                for (ri, ki) in r.iter_mut().zip(k) {
                    *ri += c * ki;
                }
            }
        }
        let (h, dh) = value_and_d(&self.h, x)?;
        let eta = self.eta.value(x)?;
        let rh = pair(&dh, &r);
        Ok(dh.iter().zip(&eta).map(|(a, e)| a - (h + rh) * e).collect())
    }

    /// Right complement Delta^perp = (flat-bar(Delta))^o of a subspace.
    pub fn perp(&self, x: &[f64], delta: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let fb = self.flat_bar(x)?;
        let rows: Vec<Vec<f64>> = delta.iter().map(|v| linalg::mat_vec(&fb, v)).collect();
        Ok(linalg::null_space(&rows, self.dim, RANK_TOL))
    }

    /// Left complement {X : omega(X, Z) = 0 for Z in Delta}.
    pub fn perp_left(&self, x: &[f64], delta: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let fbt = linalg::transpose(&self.flat_bar(x)?);
        let rows: Vec<Vec<f64>> = delta.iter().map(|v| linalg::mat_vec(&fbt, v)).collect();
        Ok(linalg::null_space(&rows, self.dim, RANK_TOL))
    }
}

/// The class of eta_L together with rank W.
pub fn lagrangian_class<F: ScalarField>(sys: &LagrangianSystem<F>, x: &[f64]) -> Result<(ClassInfo, usize)> {
    let c = PrecontactSystem::lagrangian(sys).class(x)?;
    Ok((c, sys.w_rank(x)?))
}

type VecFn<'a> = Rc<dyn Fn(&[f64]) -> Result<Vec<f64>> + 'a>;

/// One batch of constraints.
#[derive(Clone)]
pub struct Batch<'a> {
    pub step: usize,
    /// Smooth vector of constraint functions: the projection of gamma_H onto
    /// (T M_i)^perp. Its zero set is the new submanifold.
    pub eval: VecFn<'a>,
    /// <gamma_H, X_a> for the orthonormal basis X_a of (T M_i)^perp.
    pub pairing: VecFn<'a>,
    /// Closed-form constraints, when known.
    pub exprs: Option<Vec<Expr>>,
}

impl std::fmt::Debug for Batch<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Batch")
            .field("step", &self.step)
            .field("exprs", &self.exprs)
            .finish()
    }
}

impl<'a> Batch<'a> {
    /// A batch given by expressions.
    pub fn symbolic(step: usize, exprs: Vec<Expr>) -> Self {
        let e1 = exprs.clone();
        let eval: VecFn<'a> = Rc::new(move |x: &[f64]| e1.iter().map(|e| e.eval_at(x)).collect());
        Batch {
            step,
            eval: eval.clone(),
            pairing: eval,
            exprs: Some(exprs),
        }
    }

    /// Jacobian rows; AD for expressions, central differences otherwise.
    pub fn jacobian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if let Some(exprs) = &self.exprs {
            return exprs.iter().map(|e| e.grad_at(x)).collect();
        }
        let m = x.len();
        let mut cols = Vec::with_capacity(m);
        let mut y = x.to_vec();
        for k in 0..m {
            y[k] = x[k] + FD_STEP;
            let plus = (self.eval)(&y)?;
            y[k] = x[k] - FD_STEP;
            let minus = (self.eval)(&y)?;
            y[k] = x[k];
            cols.push(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * FD_STEP)).collect::<Vec<_>>());
        }
        let rows = cols.first().map_or(0, |c| c.len());
        Ok((0..rows).map(|i| (0..m).map(|k| cols[k][i]).collect()).collect())
    }
}

fn stacked_values(batches: &[Batch], x: &[f64]) -> Result<Vec<f64>> {
    let mut v = Vec::new();
    for b in batches {
        v.extend((b.eval)(x)?);
    }
    Ok(v)
}

fn stacked_jacobian(batches: &[Batch], x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for b in batches {
        rows.extend(b.jacobian(x)?);
    }
    Ok(rows)
}

/// Orthonormal basis of T_x M for M cut out by `batches`.
pub fn tangent_space(batches: &[Batch], x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = stacked_jacobian(batches, x)?;
    if d.is_empty() {
        return Ok(linalg::identity(x.len()));
    }
    Ok(linalg::null_space(&d, x.len(), TANGENT_TOL))
}

/// Newton projection onto the zero set of `batches` along minimum-norm steps.
pub fn project(batches: &[Batch], x0: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    for _ in 0..=max_iter {
        let v = stacked_values(batches, &x)?;
        if v.iter().all(|c| c.abs() < tol) {
            return Ok(x);
        }
        if v.iter().any(|c| !c.is_finite()) {
            break;
        }
        let d = stacked_jacobian(batches, &x)?;
        let step = linalg::pinv_solve(&d, x.len(), &v, TANGENT_TOL);
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi -= si;
        }
    }
    Err(Error::NewtonDivergence { last: x })
}

/// Options for the constraint algorithm.
#[derive(Clone, Debug)]
pub struct AlgorithmOptions {
    pub max_iters: usize,
    pub probes: Vec<Vec<f64>>,
    /// Coefficients of a kernel section added to the Reeb field.
    pub reeb_offset: Vec<f64>,
    /// Values above this at some probe emit a new batch.
    pub tol: f64,
}

impl AlgorithmOptions {
    /// 64 Halton points in [-2, 2]^dim, max 10 iterations.
    pub fn standard(dim: usize) -> Self {
        AlgorithmOptions {
            max_iters: 10,
            probes: probe::halton(dim, 64, -2.0, 2.0),
            reeb_offset: Vec::new(),
            tol: 1e-8,
        }
    }
}

/// Outcome of a single step.
#[derive(Clone, Debug)]
pub struct StepOutcome<'a> {
    pub batch: Option<Batch<'a>>,
    /// max |<gamma_H, X_a>| over probes
    pub max_value: f64,
    /// pairings per retained probe
    pub values: Vec<Vec<f64>>,
    /// probes skipped for a rank that differs from the majority
    pub skipped: usize,
    /// dim M_i from the majority tangent rank
    pub dim: usize,
}

/// Compute (T_x M)^perp and gamma_H at x.
fn perp_data<E: CovectorField, H: ScalarField>(
    sys: &PrecontactSystem<E, H>,
    batches: &[Batch],
    x: &[f64],
    reeb_offset: &[f64],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let tm = tangent_space(batches, x)?;
    let perp = sys.perp(x, &tm)?;
    Ok((perp, sys.gamma_h(x, reeb_offset)?))
}

/// One step of the constraint algorithm on the probes lying on M_i.
pub fn constraint_step<'a, E: CovectorField, H: ScalarField>(
    sys: &'a PrecontactSystem<E, H>,
    batches: &[Batch<'a>],
    probes: &[Vec<f64>],
    opts: &AlgorithmOptions,
) -> Result<StepOutcome<'a>> {
    let m = sys.dim;
    let mut ranks = Vec::with_capacity(probes.len());
    for p in probes {
        ranks.push(linalg::rank(&stacked_jacobian(batches, p)?, m, TANGENT_TOL));
    }
    let majority = majority(&ranks).unwrap_or(0);
    let mut values = Vec::new();
    let mut skipped = 0;
    let mut max_value = 0.0_f64;
    for (p, &r) in probes.iter().zip(&ranks) {
        if r != majority {
            skipped += 1;
            continue;
        }
        let (perp, g) = perp_data(sys, batches, p, &opts.reeb_offset)?;
        let v: Vec<f64> = perp.iter().map(|x| pair(x, &g)).collect();
        max_value = v.iter().fold(max_value, |a, b| a.max(b.abs()));
        values.push(v);
    }
    let step = batches.len() + 1;
    let batch = if max_value > opts.tol {
        let prev: Vec<Batch<'a>> = batches.to_vec();
        let prev2 = prev.clone();
        let offset = opts.reeb_offset.clone();
        let offset2 = offset.clone();
        let eval: VecFn<'a> = Rc::new(move |x: &[f64]| {
            let (perp, g) = perp_data(sys, &prev, x, &offset)?;
            let mut out = vec![0.0; x.len()];
            for b in &perp {
                let c = pair(b, &g);
                for (o, bi) in out.iter_mut().zip(b) {
                    *o += c * bi;
                }
            }
            Ok(out)
        });
        let pairing: VecFn<'a> = Rc::new(move |x: &[f64]| {
            let (perp, g) = perp_data(sys, &prev2, x, &offset2)?;
            Ok(perp.iter().map(|b| pair(b, &g)).collect())
        });
        Some(Batch {
            step,
            eval,
            pairing,
            exprs: None,
        })
    } else {
        None
    };
    Ok(StepOutcome {
        batch,
        max_value,
        values,
        skipped,
        dim: m - majority,
    })
}

fn majority(v: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for &x in v {
        let c = v.iter().filter(|&&y| y == x).count();
        // ties go to the smaller rank
        if best.is_none_or(|(bx, bc)| c > bc || (c == bc && x < bx)) {
            best = Some((x, c));
        }
    }
    best.map(|b| b.0)
}

/// The sequence of constraint batches and per-step diagnostics.
#[derive(Clone, Debug)]
pub struct ConstraintLadder<'a> {
    pub batches: Vec<Batch<'a>>,
    /// dim M_0, dim M_1, ..., dim M_f
    pub dims: Vec<usize>,
    /// max pairing per step, the last one below tolerance
    pub max_values: Vec<f64>,
    /// probes on M_f
    pub final_probes: Vec<Vec<f64>>,
}

impl ConstraintLadder<'_> {
    /// Number of algorithm steps run, including the final empty one.
    pub fn steps(&self) -> usize {
        self.max_values.len()
    }
}

/// Iterate constraint steps until a step emits nothing.
pub fn run_algorithm<'a, E: CovectorField, H: ScalarField>(
    sys: &'a PrecontactSystem<E, H>,
    opts: &AlgorithmOptions,
) -> Result<ConstraintLadder<'a>> {
    let mut batches: Vec<Batch<'a>> = Vec::new();
    let mut dims = Vec::new();
    let mut max_values = Vec::new();
    for _ in 0..opts.max_iters {
        let on: Vec<Vec<f64>> = opts
            .probes
            .iter()
            .filter_map(|p| project(&batches, p, 1e-10, 30).ok())
            .collect();
        if on.is_empty() {
            return Err(Error::EmptyFinalManifold);
        }
        let out = constraint_step(sys, &batches, &on, opts)?;
        dims.push(out.dim);
        max_values.push(out.max_value);
        match out.batch {
            Some(b) => batches.push(b),
            None => {
                return Ok(ConstraintLadder {
                    batches,
                    dims,
                    max_values,
                    final_probes: on,
                })
            }
        }
    }
    Err(Error::NoConvergence(opts.max_iters))
}

/// Second- and first-class split of constraints defining M_f.
#[derive(Clone, Debug)]
pub struct DiracData {
    /// phi^a, with invertible C^{ab} = {phi^a, phi^b}
    pub second: Vec<Expr>,
    /// phi^abar before the first-class correction
    pub first: Vec<Expr>,
    /// rank of the Gram matrix
    pub rank: usize,
    /// max |{phibar, phi^beta}| over the probes
    pub first_class_residual: f64,
    pub jacobi: JacobiStructure,
}

fn gram(cs: &[Expr], j: &JacobiStructure, x: &[f64]) -> Result<Mat<f64>> {
    cs.iter()
        .map(|a| cs.iter().map(|b| j.bracket(a, b, x)).collect::<Result<Vec<f64>>>())
        .collect()
}

/// Split constraints into a maximal second-class family and first-class rest.
pub fn classify_constraints(constraints: &[Expr], jacobi: JacobiStructure, probes: &[Vec<f64>]) -> Result<DiracData> {
    let k = constraints.len();
    let first_probe = probes.first().ok_or(Error::EmptyFinalManifold)?;
    let g0 = gram(constraints, &jacobi, first_probe)?;
    let mut chosen: Vec<usize> = Vec::new();
    for a in 0..k {
        let mut rows: Vec<Vec<f64>> = chosen.iter().map(|&i| g0[i].clone()).collect();
        rows.push(g0[a].clone());
        if linalg::rank(&rows, k, RANK_TOL) > chosen.len() {
            chosen.push(a);
        }
    }
    let rank = chosen.len();
    let rest: Vec<usize> = (0..k).filter(|i| !chosen.contains(i)).collect();
    let mut residual = 0.0_f64;
    for p in probes {
        let g = gram(constraints, &jacobi, p)?;
        let sub: Vec<Vec<f64>> = chosen.iter().map(|&i| g[i].clone()).collect();
        if linalg::rank(&g, k, RANK_TOL) != rank || linalg::rank(&sub, k, RANK_TOL) != rank {
            return Err(Error::RankUnstable);
        }
        if rest.is_empty() {
            continue;
        }
        let c: Mat<f64> = chosen.iter().map(|&i| chosen.iter().map(|&j| g[i][j]).collect()).collect();
        let ct = linalg::transpose(&c);
        for &ab in &rest {
            // B C = G[abar][chosen]  <=>  C^T B^T = G[abar][chosen]^T
            let rhs: Vec<f64> = chosen.iter().map(|&j| g[ab][j]).collect();
            let b = linalg::solve(&ct, &rhs).map_err(|_| Error::SingularCMatrix)?;
            for beta in 0..k {
                let comb: f64 = chosen.iter().zip(&b).map(|(&i, bi)| bi * g[i][beta]).sum();
                residual = residual.max((g[ab][beta] - comb).abs());
            }
        }
    }
    if residual > 1e-7 {
        return Err(Error::RankUnstable);
    }
    Ok(DiracData {
        second: chosen.iter().map(|&i| constraints[i].clone()).collect(),
        first: rest.iter().map(|&i| constraints[i].clone()).collect(),
        rank,
        first_class_residual: residual,
        jacobi,
    })
}

impl DiracData {
    /// C^{ab} and its inverse at x.
    fn c_inverse<S: Scalar>(&self, x: &[S]) -> Result<Mat<S>> {
        let c: Mat<S> = self
            .second
            .iter()
            .map(|a| self.second.iter().map(|b| self.jacobi.bracket(a, b, x)).collect::<Result<Vec<S>>>())
            .collect::<Result<_>>()?;
        let lu = Lu::new(&c).map_err(|_| Error::SingularCMatrix)?;
        if lu.det().re().abs() <= 1e-10 {
            return Err(Error::SingularCMatrix);
        }
        Ok(lu.inverse())
    }

    /// B^abar_a at x and the first-class combinations phibar = phi^abar - B phi^a.
    pub fn first_class_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let cinv = self.c_inverse(x)?;
        let sec: Vec<f64> = self.second.iter().map(|e| e.eval_at(x)).collect::<Result<_>>()?;
        self.first
            .iter()
            .map(|fb| {
                let row: Vec<f64> = self
                    .second
                    .iter()
                    .map(|s| self.jacobi.bracket(fb, s, x))
                    .collect::<Result<_>>()?;
                // B = row C^{-1}
                let mut v = fb.eval_at(x)?;
                for a in 0..sec.len() {
                    let b: f64 = (0..sec.len()).map(|c| row[c] * cinv[c][a]).sum();
                    v -= b * sec[a];
                }
                Ok(v)
            })
            .collect()
    }

    /// {f, g}_DJ = {f, g} - {f, phi^a} C_ab {phi^b, g}.
    pub fn bracket<F: ScalarField, G: ScalarField, S: Scalar>(&self, f: &F, g: &G, x: &[S]) -> Result<S> {
        let cinv = self.c_inverse(x)?;
        let j = &self.jacobi;
        let fa: Vec<S> = self.second.iter().map(|p| j.bracket(f, p, x)).collect::<Result<_>>()?;
        let bg: Vec<S> = self.second.iter().map(|p| j.bracket(p, g, x)).collect::<Result<_>>()?;
        let mut v = j.bracket(f, g, x)?;
        for a in 0..fa.len() {
            for b in 0..bg.len() {
                v = v - fa[a].clone() * cinv[a][b].clone() * bg[b].clone();
            }
        }
        Ok(v)
    }

    fn reeb_dj_with<S: Scalar>(&self, x: &[S], phi_sign: f64) -> Result<Vec<S>> {
        let s = self.jacobi.s;
        let z = 2 * s.n;
        let cinv = self.c_inverse(x)?;
        let mut r = s.reeb::<S>();
        let reeb = r.clone();
        let data: Vec<(S, Vec<S>)> = self.second.iter().map(|p| value_and_d(p, x)).collect::<Result<_>>()?;
        for a in 0..data.len() {
            let sh = s.sharp_lambda(&data[a].1, x)?;
            for b in 0..data.len() {
                let coef = cinv[a][b].clone() * data[b].1[z].clone();
                for k in 0..r.len() {
                    let t = sh[k].clone() + (data[a].0.clone() * reeb[k].clone()).scale(phi_sign);
                    r[k] = r[k].clone() + coef.clone() * t;
                }
            }
        }
        Ok(r)
    }

    /// R_DJ = R + C_ab R(phi^b) (sharp_Lambda(d phi^a) - phi^a R). The
    /// generalized Leibniz rule holds with this field at every point.
    pub fn reeb_dj<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.reeb_dj_with(x, -1.0)
    }

    /// The printed form, with + phi^a R; equal to [`Self::reeb_dj`] on M_f.
    pub fn reeb_dj_printed<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.reeb_dj_with(x, 1.0)
    }
}

/// Dirac–Jacobi bracket at a point.
pub fn dirac_jacobi_bracket<F: ScalarField, G: ScalarField>(dd: &DiracData, f: &F, g: &G, x: &[f64]) -> Result<f64> {
    dd.bracket(f, g, x)
}

/// {f, g}_DJ as a scalar field.
#[derive(Clone, Copy, Debug)]
pub struct DjBracket<'a, F, G> {
    pub dd: &'a DiracData,
    pub f: &'a F,
    pub g: &'a G,
}

impl<F: ScalarField, G: ScalarField> ScalarField for DjBracket<'_, F, G> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        self.dd.bracket(self.f, self.g, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::ContactStructure;

    fn lsys() -> LagrangianSystem {
        LagrangianSystem::parse("v1^2/2 + q2*v2 - 0.1*z", 2).unwrap()
    }

    #[test]
    fn classes() {
        let c = PrecontactSystem::contact(2, "p1").unwrap();
        let x = [0.1, 0.2, 0.3, 0.4, 0.5];
        assert_eq!(c.class(&x).unwrap(), ClassInfo { r: 2, s: 0, rank: 5 });
        assert!(c.characteristic_kernel(&x).unwrap().is_empty());

        let l = LagrangianSystem::parse("(v1-v2)^2/2 - 0.1*z", 2).unwrap();
        let (ci, w) = lagrangian_class(&l, &x).unwrap();
        assert_eq!((ci.r, ci.s, w), (1, 2, 1));

        let d = PrecontactSystem::darboux(1, 1, "u^2").unwrap();
        let y = [0.3, -0.7, 0.2, 1.1];
        assert_eq!(d.class(&y).unwrap(), ClassInfo { r: 1, s: 1, rank: 3 });
        assert_eq!(d.characteristic_kernel(&y).unwrap(), vec![vec![0.0, 0.0, 0.0, 1.0]]);
    }

    #[test]
    fn singular_kernel_contains_dv2() {
        let l = lsys();
        let sys = PrecontactSystem::lagrangian(&l);
        let x = [0.3, 0.7, -0.2, 1.1, 0.4];
        let k = sys.characteristic_kernel(&x).unwrap();
        assert_eq!(k.len(), 2);
        let dv2 = [0.0, 0.0, 0.0, 1.0, 0.0];
        let other = [0.0, 1.0, 0.0, 0.0, 0.7];
        assert!(linalg::distance_to_span(&dv2, &k) < 1e-12);
        let n = (1.0f64 + 0.49).sqrt();
        let other: Vec<f64> = other.iter().map(|v| v / n).collect();
        assert!(linalg::distance_to_span(&other, &k) < 1e-12);
    }

    #[test]
    fn primary_constraints() {
        let d = PrecontactSystem::darboux(1, 1, "u^3 + x*u").unwrap();
        let opts = AlgorithmOptions::standard(4);
        let y = vec![0.3, -0.7, 0.2, 1.1];
        let out = constraint_step(&d, &[], std::slice::from_ref(&y), &opts).unwrap();
        let b = out.batch.unwrap();
        assert!(((b.pairing)(&y).unwrap()[0] - (3.0 * 1.21 + 0.3)).abs() < 1e-12);

        let flat = PrecontactSystem::darboux(1, 1, "x*y + z").unwrap();
        let out = constraint_step(&flat, &[], &[y], &opts).unwrap();
        assert!(out.batch.is_none());

        let l = lsys();
        let sys = PrecontactSystem::lagrangian(&l);
        for x in probe::grid(5) {
            let out = constraint_step(&sys, &[], std::slice::from_ref(&x), &opts).unwrap();
            let v = &out.values[0];
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let q2 = x[1];
            assert!((norm - 0.1 * q2.abs() / (1.0 + q2 * q2).sqrt()).abs() < 1e-10, "{x:?} {v:?}");
        }
    }

    #[test]
    fn ladders() {
        let c = PrecontactSystem::contact(1, "p^2/2 + q^2/2 + 0.1*z").unwrap();
        let lad = run_algorithm(&c, &AlgorithmOptions::standard(3)).unwrap();
        assert!(lad.batches.is_empty());
        assert_eq!(lad.dims, vec![3]);

        let d = PrecontactSystem::darboux(1, 1, "u^2").unwrap();
        let lad = run_algorithm(&d, &AlgorithmOptions::standard(4)).unwrap();
        assert_eq!(lad.batches.len(), 1);
        assert_eq!(lad.dims, vec![4, 3]);
        for p in &lad.final_probes {
            assert!(p[3].abs() < 1e-10);
            assert!(((lad.batches[0].pairing)(&[p[0], p[1], p[2], 0.25]).unwrap()[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_lagrangian_ladder() {
        let l = lsys();
        let sys = PrecontactSystem::lagrangian(&l);
        let lad = run_algorithm(&sys, &AlgorithmOptions::standard(5)).unwrap();
        assert_eq!(lad.batches.len(), 1);
        assert_eq!(lad.steps(), 2);
        assert_eq!(lad.dims, vec![5, 4]);
        assert!(lad.final_probes.iter().all(|p| p[1].abs() < 1e-9));
    }

    #[test]
    fn reeb_choice_does_not_matter() {
        let l = lsys();
        let sys = PrecontactSystem::lagrangian(&l);
        let base = AlgorithmOptions::standard(5);
        let shifted = AlgorithmOptions {
            reeb_offset: vec![0.8, -1.3],
            ..base.clone()
        };
        let probes = probe::grid(5);
        let a = constraint_step(&sys, &[], &probes, &base).unwrap();
        let b = constraint_step(&sys, &[], &probes, &shifted).unwrap();
        for (u, w) in a.values.iter().zip(&b.values) {
            for (p, q) in u.iter().zip(w) {
                assert!((p - q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn perp_calculus() {
        let d = PrecontactSystem::darboux(1, 1, "u").unwrap();
        let x = [0.3, -0.7, 0.2, 1.1];
        let all = linalg::identity::<f64>(4);
        assert!(linalg::subspace_gap(&d.perp(&x, &all).unwrap(), &d.characteristic_kernel(&x).unwrap(), 4) < 1e-12);
        let delta = vec![vec![1.0, 0.0, 0.0, 0.0]];
        let back = d.perp_left(&x, &d.perp(&x, &delta).unwrap()).unwrap();
        let expect = linalg::span_sum(&delta, &d.characteristic_kernel(&x).unwrap(), 4, 1e-10);
        assert!(linalg::subspace_gap(&back, &expect, 4) < 1e-10);
    }

    fn n2() -> (Chart, JacobiStructure) {
        (Chart::cotangent(2), ContactStructure::canonical(2).jacobi())
    }

    #[test]
    fn classification_examples() {
        let (ch, j) = n2();
        let on = |v: [f64; 3]| vec![v[0], 0.0, v[1], 0.0, v[2]];
        let probes: Vec<Vec<f64>> = probe::grid(3).into_iter().map(|p| on([p[0], p[1], p[2]])).collect();
        let pair = vec![ch.parse("q2").unwrap(), ch.parse("p2").unwrap()];
        let dd = classify_constraints(&pair, j, &probes).unwrap();
        assert_eq!((dd.second.len(), dd.first.len()), (2, 0));

        let single = vec![ch.parse("q2").unwrap()];
        let dd = classify_constraints(&single, j, &probes).unwrap();
        assert_eq!((dd.second.len(), dd.first.len()), (0, 1));

        let probes3: Vec<Vec<f64>> = probes.iter().map(|p| vec![0.0, 0.0, p[2], 0.0, p[4]]).collect();
        let three = vec![ch.parse("q2").unwrap(), ch.parse("p2").unwrap(), ch.parse("q1").unwrap()];
        let dd = classify_constraints(&three, j, &probes3).unwrap();
        assert_eq!(dd.rank, 2);
        assert_eq!(dd.first[0].to_string(), "q1");
        assert!(dd.first_class_residual < 1e-12);
    }

    #[test]
    fn dirac_jacobi_values() {
        let (ch, j) = n2();
        let dd = classify_constraints(&[ch.parse("q2").unwrap(), ch.parse("p2").unwrap()], j, &[vec![0.3, 0.0, -0.5, 0.0, 1.0]])
            .unwrap();
        let x = [0.3, 0.0, -0.5, 0.0, 1.0];
        let (q1, p1) = (ch.parse("q1").unwrap(), ch.parse("p1").unwrap());
        assert!((dirac_jacobi_bracket(&dd, &q1, &p1, &x).unwrap() + 1.0).abs() < 1e-12);
        let f = ch.parse("q1*p2 + sin(q2)*z + p1^2").unwrap();
        let q2 = ch.parse("q2").unwrap();
        let p2 = ch.parse("p2").unwrap();
        assert!(dirac_jacobi_bracket(&dd, &f, &q2, &x).unwrap().abs() < 1e-12);
        assert!(dirac_jacobi_bracket(&dd, &f, &p2, &x).unwrap().abs() < 1e-12);
        assert!(dirac_jacobi_bracket(&dd, &f, &f, &x).unwrap().abs() < 1e-12);
    }

    #[test]
    fn singular_c_matrix() {
        let (ch, j) = n2();
        let dd = DiracData {
            second: vec![ch.parse("q2").unwrap()],
            first: vec![],
            rank: 1,
            first_class_residual: 0.0,
            jacobi: j,
        };
        let f = ch.parse("q1").unwrap();
        assert_eq!(
            dirac_jacobi_bracket(&dd, &f, &f, &[0.0; 5]).unwrap_err(),
            Error::SingularCMatrix
        );
    }

    fn leibniz_defect(dd: &DiracData, x: &[f64], printed: bool) -> f64 {
        let ch = Chart::cotangent(2);
        let f = ch.parse("q1*p1 + sin(z) + p2*q2").unwrap();
        let g = ch.parse("cos(q1) + z*p1").unwrap();
        let h = ch.parse("p2^2 + q2*z - p1").unwrap();
        let gh = crate::calculus::Product(&g, &h);
        let r = if printed { dd.reeb_dj_printed(x) } else { dd.reeb_dj(x) }.unwrap();
        let (_, df) = value_and_d(&f, x).unwrap();
        let (gv, hv) = (g.eval_at(x).unwrap(), h.eval_at(x).unwrap());
        dd.bracket(&f, &gh, x).unwrap() - gv * dd.bracket(&f, &h, x).unwrap() - hv * dd.bracket(&f, &g, x).unwrap()
            + gv * hv * pair(&df, &r)
    }

    #[test]
    fn generalized_leibniz() {
        let (ch, j) = n2();
        let cs = vec![ch.parse("q2 + 0.3*z").unwrap(), ch.parse("p2 - 0.2*q1*z").unwrap()];
        let off = [0.4, -0.3, 0.7, 0.9, 1.2];
        let dd = classify_constraints(&cs, j, &[off.to_vec()]).unwrap();
        assert!(leibniz_defect(&dd, &off, false).abs() < 1e-10);
        assert!(leibniz_defect(&dd, &off, true).abs() > 1e-3);
        let (q1, z) = (0.4, 1.2);
        let on = [q1, -0.3 * z, 0.7, 0.2 * q1 * z, z];
        assert!(leibniz_defect(&dd, &on, false).abs() < 1e-10);
        assert!(leibniz_defect(&dd, &on, true).abs() < 1e-10);
        let (a, b) = (dd.reeb_dj(&on).unwrap(), dd.reeb_dj_printed(&on).unwrap());
        assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-12));
    }

    #[test]
    fn constraints_are_casimirs() {
        let (ch, j) = n2();
        let cs = vec![ch.parse("q2 + 0.3*z").unwrap(), ch.parse("p2 - 0.2*q1*z").unwrap()];
        let x = [0.4, -0.36, 0.7, 0.096, 1.2];
        let dd = classify_constraints(&cs, j, &[x.to_vec()]).unwrap();
        let f = ch.parse("q1*p1 + sin(z) + p2*q2").unwrap();
        for c in &cs {
            assert!(dd.bracket(&f, c, &x).unwrap().abs() < 1e-12);
            assert!(dd.bracket(c, &f, &x).unwrap().abs() < 1e-12);
        }
        let g = ch.parse("cos(q1) + z*p1").unwrap();
        assert!((dd.bracket(&f, &g, &x).unwrap() + dd.bracket(&g, &f, &x).unwrap()).abs() < 1e-12);
    }
}
