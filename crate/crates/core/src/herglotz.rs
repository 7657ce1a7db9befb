//! Contact Lagrangian side on (q, v, z): eta_L, W, E_L, R_L, the Herglotz
//! field, the Legendre map and the Herglotz action.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{
    field_jacobian, pair, Chart, CovectorField, ScalarField, Trajectory, VectorField,
};
use crate::contact::{ContactStructure, HamiltonianField};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::{self, Lu, Mat};
use crate::scalar::{self, Dual, Scalar};

/// Value, gradient and Hessian of L at a point.
#[derive(Clone, Debug)]
pub struct Jet<S> {
    pub l: S,
    pub g: Vec<S>,
    pub h: Mat<S>,
}

/// L on TQ x R together with its derived structure.
#[derive(Clone, Debug)]
pub struct LagrangianSystem<F = Expr> {
    pub n: usize,
    pub l: F,
}

impl LagrangianSystem<Expr> {
    /// Parse L over the (q, v, z) chart.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        Ok(LagrangianSystem {
            n,
            l: Chart::tangent(n).parse(text)?,
        })
    }
}

impl<F: ScalarField> LagrangianSystem<F> {
    pub fn new(n: usize, l: F) -> Self {
        LagrangianSystem { n, l }
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn chart(&self) -> Chart {
        Chart::tangent(self.n)
    }

    pub fn jet<S: Scalar>(&self, x: &[S]) -> Result<Jet<S>> {
        let (l, g, h) = scalar::hessian(|y: &[Dual<Dual<S>>]| self.l.value(y), x)?;
        Ok(Jet { l, g, h })
    }

    /// W_ij = d^2 L / dv^i dv^j.
    pub fn w<S: Scalar>(&self, x: &[S]) -> Result<Mat<S>> {
        let j = self.jet(x)?;
        Ok(self.w_of(&j))
    }

    fn w_of<S: Scalar>(&self, j: &Jet<S>) -> Mat<S> {
        let n = self.n;
        (0..n).map(|a| (0..n).map(|b| j.h[n + a][n + b].clone()).collect()).collect()
    }

    pub fn regular_at(&self, x: &[f64]) -> Result<bool> {
        let w = self.w(x)?;
        Ok(match Lu::new(&w) {
            Ok(lu) => lu.det().abs() > 1e-10,
            Err(_) => false,
        })
    }

    /// Regularity on a set of probe points.
    pub fn is_regular(&self, probes: &[Vec<f64>]) -> Result<bool> {
        for p in probes {
            if !self.regular_at(p)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn w_rank(&self, x: &[f64]) -> Result<usize> {
        Ok(linalg::rank(&self.w(x)?, self.n, 1e-9))
    }

    pub fn energy<S: Scalar>(&self, x: &[S]) -> Result<S> {
        let n = self.n;
        let (l, g) = scalar::gradient(|y: &[Dual<S>]| self.l.value(y), x)?;
        let mut e = -l;
        for i in 0..n {
            e = e + x[n + i].clone() * g[n + i].clone();
        }
        Ok(e)
    }

    fn energy_d<S: Scalar>(&self, x: &[S], j: &Jet<S>) -> (S, Vec<S>) {
        let n = self.n;
        let m = self.dim();
        let mut e = -j.l.clone();
        for i in 0..n {
            e = e + x[n + i].clone() * j.g[n + i].clone();
        }
        let de = (0..m)
            .map(|a| {
                let mut acc = if (n..2 * n).contains(&a) { S::zero() } else { -j.g[a].clone() };
                for i in 0..n {
                    acc = acc + x[n + i].clone() * j.h[n + i][a].clone();
                }
                acc
            })
            .collect();
        (e, de)
    }

    /// eta_L = dz - L_{v^i} dq^i.
    pub fn eta<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let (_, g) = scalar::gradient(|y: &[Dual<S>]| self.l.value(y), x)?;
        Ok(self.eta_of(&g))
    }

    fn eta_of<S: Scalar>(&self, g: &[S]) -> Vec<S> {
        let n = self.n;
        let mut e = vec![S::zero(); self.dim()];
        for i in 0..n {
            e[i] = -g[n + i].clone();
        }
        e[2 * n] = S::cst(1.0);
        e
    }

    /// Matrix of d eta_L: d eta_L(u, w) = u^T Omega w.
    fn deta_matrix<S: Scalar>(&self, j: &Jet<S>) -> Mat<S> {
        let n = self.n;
        let m = self.dim();
        let mut om = vec![vec![S::zero(); m]; m];
        // d eta_L = dq^i ^ d(L_{v^i})
        for i in 0..n {
            let theta = &j.h[n + i];
            for b in 0..m {
                om[i][b] = om[i][b].clone() + theta[b].clone();
                om[b][i] = om[b][i].clone() - theta[b].clone();
            }
        }
        om
    }

    pub fn deta<S: Scalar>(&self, u: &[S], w: &[S], x: &[S]) -> Result<S> {
        let om = self.deta_matrix(&self.jet(x)?);
        Ok(pair(u, &linalg::mat_vec(&om, w)))
    }

    /// Matrix of flat_L(u) = i_u d eta_L + eta_L(u) eta_L (column j is flat_L(e_j)).
    pub fn flat_matrix<S: Scalar>(&self, x: &[S]) -> Result<Mat<S>> {
        let j = self.jet(x)?;
        Ok(self.flat_matrix_of(&j))
    }

    fn flat_matrix_of<S: Scalar>(&self, j: &Jet<S>) -> Mat<S> {
        let om = self.deta_matrix(j);
        let eta = self.eta_of(&j.g);
        let m = self.dim();
        (0..m)
            .map(|b| (0..m).map(|a| om[a][b].clone() + eta[b].clone() * eta[a].clone()).collect())
            .collect()
    }

    pub fn sharp<S: Scalar>(&self, alpha: &[S], x: &[S]) -> Result<Vec<S>> {
        linalg::solve(&self.flat_matrix(x)?, alpha).map_err(|_| Error::SingularLagrangian)
    }

    /// R_L = d/dz - W^{ij} L_{v^j z} d/dv^i.
    pub fn reeb<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let j = self.jet(x)?;
        self.reeb_of(&j)
    }

    fn reeb_of<S: Scalar>(&self, j: &Jet<S>) -> Result<Vec<S>> {
        let n = self.n;
        let lvz: Vec<S> = (0..n).map(|i| j.h[n + i][2 * n].clone()).collect();
        let y = linalg::solve(&self.w_of(j), &lvz).map_err(|_| Error::SingularLagrangian)?;
        let mut r = vec![S::zero(); self.dim()];
        for i in 0..n {
            r[n + i] = -y[i].clone();
        }
        r[2 * n] = S::cst(1.0);
        Ok(r)
    }

    /// Lambda_L(a, b) = -d eta_L(sharp_L a, sharp_L b).
    pub fn lambda<S: Scalar>(&self, a: &[S], b: &[S], x: &[S]) -> Result<S> {
        let j = self.jet(x)?;
        let lu = Lu::new(&self.flat_matrix_of(&j)).map_err(|_| Error::SingularLagrangian)?;
        let (sa, sb) = (lu.solve(a), lu.solve(b));
        let om = self.deta_matrix(&j);
        Ok(-pair(&sa, &linalg::mat_vec(&om, &sb)))
    }

    /// Herglotz field in SODE form (v, B, L).
    pub fn herglotz<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let j = self.jet(x)?;
        self.herglotz_of(x, &j)
    }

    fn herglotz_of<S: Scalar>(&self, x: &[S], j: &Jet<S>) -> Result<Vec<S>> {
        let n = self.n;
        let lz = j.g[2 * n].clone();
        // W B = L_v L_z + L_q - v^i L_{v q^i} - L L_{v z}
        let rhs: Vec<S> = (0..n)
            .map(|a| {
                let mut r = j.g[n + a].clone() * lz.clone() + j.g[a].clone()
                    - j.l.clone() * j.h[n + a][2 * n].clone();
                for i in 0..n {
                    r = r - x[n + i].clone() * j.h[n + a][i].clone();
                }
                r
            })
            .collect();
        let b = linalg::solve(&self.w_of(j), &rhs).map_err(|_| Error::SingularLagrangian)?;
        let mut out = Vec::with_capacity(self.dim());
        out.extend_from_slice(&x[n..2 * n]);
        out.extend(b);
        out.push(j.l.clone());
        Ok(out)
    }

    /// Herglotz field from flat_L(xi) = dE_L - (R_L(E_L) + E_L) eta_L.
    pub fn herglotz_by_flat<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let j = self.jet(x)?;
        let (e, de) = self.energy_d(x, &j);
        let r = self.reeb_of(&j)?;
        let re = pair(&de, &r);
        let eta = self.eta_of(&j.g);
        let rhs: Vec<S> = de
            .iter()
            .zip(&eta)
            .map(|(a, h)| a.clone() - (re.clone() + e.clone()) * h.clone())
            .collect();
        linalg::solve(&self.flat_matrix_of(&j), &rhs).map_err(|_| Error::SingularLagrangian)
    }

    /// X_f from flat_L(X) = df - (R_L(f) + f) eta_L.
    pub fn hamiltonian_field_of<G: ScalarField, S: Scalar>(&self, f: &G, x: &[S]) -> Result<Vec<S>> {
        let j = self.jet(x)?;
        let (fv, df) = crate::calculus::value_and_d(f, x)?;
        let r = self.reeb_of(&j)?;
        let rf = pair(&df, &r);
        let eta = self.eta_of(&j.g);
        let rhs: Vec<S> = df
            .iter()
            .zip(&eta)
            .map(|(a, h)| a.clone() - (rf.clone() + fv.clone()) * h.clone())
            .collect();
        linalg::solve(&self.flat_matrix_of(&j), &rhs).map_err(|_| Error::SingularLagrangian)
    }

    /// R_L(E_L).
    pub fn reeb_energy<S: Scalar>(&self, x: &[S]) -> Result<S> {
        let j = self.jet(x)?;
        let (_, de) = self.energy_d(x, &j);
        Ok(pair(&de, &self.reeb_of(&j)?))
    }

    /// FL(q, v, z) = (q, L_v, z).
    pub fn legendre<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let n = self.n;
        let (_, g) = scalar::gradient(|y: &[Dual<S>]| self.l.value(y), x)?;
        let mut out = x.to_vec();
        out[n..2 * n].clone_from_slice(&g[n..2 * n]);
        Ok(out)
    }

    /// Solve L_v(q, v, z) = p for v by Newton iteration, starting at v = p.
    pub fn inverse_legendre<S: Scalar>(&self, y: &[S]) -> Result<Vec<S>> {
        let n = self.n;
        let mut x = y.to_vec();
        let mut converged_at = None;
        for it in 0..50 {
            let j = self.jet(&x)?;
            let res: Vec<S> = (0..n).map(|i| j.g[n + i].clone() - y[n + i].clone()).collect();
            let size = res.iter().fold(0.0_f64, |m, r| m.max(r.re().abs()));
            if !size.is_finite() {
                break;
            }
            if size < 1e-12 {
                // a couple more steps settle the derivative slots
                match converged_at {
                    None => converged_at = Some(it),
                    Some(c) if it >= c + 2 => return Ok(x),
                    _ => {}
                }
            }
            let Ok(step) = linalg::solve(&self.w_of(&j), &res) else { break };
            for i in 0..n {
                x[n + i] = x[n + i].clone() - step[i].clone();
            }
        }
        if converged_at.is_some() {
            return Ok(x);
        }
        Err(Error::NewtonDivergence {
            last: x.iter().map(|v| v.re()).collect(),
        })
    }

    pub fn herglotz_field(&self) -> HerglotzField<'_, F> {
        HerglotzField(self)
    }

    /// Hamiltonian H = E_L o FL^{-1} on the cotangent chart.
    pub fn hamiltonian(&self) -> LegendreHamiltonian<'_, F> {
        LegendreHamiltonian(self)
    }

    /// ||T(FL)(xi_L(x)) - X_H(FL(x))||_inf.
    pub fn legendre_equivalence_residual(&self, x: &[f64]) -> Result<f64> {
        let lm = LegendreMap(self);
        let (y, jac) = field_jacobian(&lm, x)?;
        let xi = self.herglotz(x)?;
        let pushed = linalg::mat_vec(&jac, &xi);
        let h = self.hamiltonian();
        let xh = HamiltonianField {
            s: ContactStructure::canonical(self.n),
            h: &h,
        }
        .value(&y)?;
        Ok(pushed.iter().zip(&xh).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// ||FL* eta - eta_L||_inf.
    pub fn pullback_residual(&self, x: &[f64]) -> Result<f64> {
        let (y, jac) = field_jacobian(&LegendreMap(self), x)?;
        let eta = ContactStructure::canonical(self.n).eta(&y);
        let pulled = linalg::mat_vec(&linalg::transpose(&jac), &eta);
        let eta_l = self.eta(x)?;
        Ok(pulled.iter().zip(&eta_l).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// xi_L as a vector field.
#[derive(Clone, Copy, Debug)]
pub struct HerglotzField<'a, F>(pub &'a LagrangianSystem<F>);

impl<F: ScalarField> VectorField for HerglotzField<'_, F> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.0.herglotz(x)
    }
}

/// R_L as a vector field.
#[derive(Clone, Copy, Debug)]
pub struct LagrangianReeb<'a, F>(pub &'a LagrangianSystem<F>);

impl<F: ScalarField> VectorField for LagrangianReeb<'_, F> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.0.reeb(x)
    }
}

/// eta_L as a covector field.
#[derive(Clone, Copy, Debug)]
pub struct LagrangianEta<'a, F>(pub &'a LagrangianSystem<F>);

impl<F: ScalarField> CovectorField for LagrangianEta<'_, F> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.0.eta(x)
    }
}

/// E_L as a scalar field.
#[derive(Clone, Copy, Debug)]
pub struct Energy<'a, F>(pub &'a LagrangianSystem<F>);

impl<F: ScalarField> ScalarField for Energy<'_, F> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        self.0.energy(x)
    }
}

/// The Lagrangian itself as a scalar field.
impl<F: ScalarField> ScalarField for LagrangianSystem<F> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        self.l.value(x)
    }
}

/// FL as a map between charts of equal dimension.
#[derive(Clone, Copy, Debug)]
pub struct LegendreMap<'a, F>(pub &'a LagrangianSystem<F>);

impl<F: ScalarField> VectorField for LegendreMap<'_, F> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.0.legendre(x)
    }
}

/// E_L o FL^{-1}, evaluated through Newton inversion.
#[derive(Clone, Copy, Debug)]
pub struct LegendreHamiltonian<'a, F>(pub &'a LagrangianSystem<F>);

impl<F: ScalarField> ScalarField for LegendreHamiltonian<'_, F> {
    fn value<S: Scalar>(&self, y: &[S]) -> Result<S> {
        let x = self.0.inverse_legendre(y)?;
        self.0.energy(&x)
    }
}

/// Velocities of a sampled path: centered inside, one-sided at the ends.
pub fn path_velocities(path: &Trajectory) -> Vec<Vec<f64>> {
    let k = path.rows.len();
    let dt = path.dt;
    let n = path.rows.first().map_or(0, |r| r.len());
    (0..k)
        .map(|i| {
            (0..n)
                .map(|c| {
                    if k < 2 {
                        0.0
                    } else if i == 0 {
                        (path.rows[1][c] - path.rows[0][c]) / dt
                    } else if i == k - 1 {
                        (path.rows[k - 1][c] - path.rows[k - 2][c]) / dt
                    } else {
                        (path.rows[i + 1][c] - path.rows[i - 1][c]) / (2.0 * dt)
                    }
                })
                .collect()
        })
        .collect()
}

/// A = Z(b) where Z' = L(q, q', Z), Z(a) = c, integrated with RK4 along the
/// sampled path. Midpoint states use the chord and its slope.
pub fn herglotz_action<F: ScalarField>(sys: &LagrangianSystem<F>, path: &Trajectory, c: f64) -> Result<f64> {
    let vel = path_velocities(path);
    let dt = path.dt;
    let state = |q: &[f64], v: &[f64], z: f64| -> Vec<f64> {
        let mut s = q.to_vec();
        s.extend_from_slice(v);
        s.push(z);
        s
    };
    let mut z = c;
    for k in 0..path.rows.len().saturating_sub(1) {
        let t = path.times[k];
        let (q0, q1) = (&path.rows[k], &path.rows[k + 1]);
        let qm: Vec<f64> = q0.iter().zip(q1).map(|(a, b)| 0.5 * (a + b)).collect();
        let vm: Vec<f64> = q0.iter().zip(q1).map(|(a, b)| (b - a) / dt).collect();
        let f = |q: &[f64], v: &[f64], z: f64| -> Result<f64> {
            sys.l.value(&state(q, v, z)).map_err(|e| Error::Step {
                t,
                source: Box::new(e),
            })
        };
        let k1 = f(q0, &vel[k], z)?;
        let k2 = f(&qm, &vm, z + 0.5 * dt * k1)?;
        let k3 = f(&qm, &vm, z + 0.5 * dt * k2)?;
        let k4 = f(q1, &vel[k + 1], z + dt * k3)?;
        z += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !z.is_finite() {
            return Err(Error::NonFinite { t: path.times[k + 1] });
        }
    }
    Ok(z)
}

/// Smooth endpoint-vanishing perturbations sum_k c_k sin(k pi s), s in [0, 1].
pub fn perturbations(path: &Trajectory, count: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (t0, t1) = (path.times[0], *path.times.last().unwrap());
    let span = (t1 - t0).max(f64::MIN_POSITIVE);
    let n = path.rows[0].len();
    (0..count)
        .map(|_| {
            let coef: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            path.times
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let s = (t - t0) / span;
                    let edge = i == 0 || i + 1 == path.times.len();
                    (0..n)
                        .map(|c| {
                            if edge {
                                return 0.0;
                            }
                            coef[c]
                                .iter()
                                .enumerate()
                                .map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * s).sin())
                                .sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// max over perturbations of |dA(delta)|, by central differences with eps = 1e-5.
pub fn critical_point_residual<F: ScalarField>(
    sys: &LagrangianSystem<F>,
    path: &Trajectory,
    c: f64,
    count: usize,
    seed: u64,
) -> Result<f64> {
    const EPS: f64 = 1e-5;
    let shift = |delta: &[Vec<f64>], s: f64| Trajectory {
        dt: path.dt,
        times: path.times.clone(),
        rows: path
            .rows
            .iter()
            .zip(delta)
            .map(|(r, d)| r.iter().zip(d).map(|(a, b)| a + s * b).collect())
            .collect(),
    };
    let mut worst = 0.0_f64;
    for delta in perturbations(path, count, seed) {
        let plus = herglotz_action(sys, &shift(&delta, EPS), c)?;
        let minus = herglotz_action(sys, &shift(&delta, -EPS), c)?;
        worst = worst.max(((plus - minus) / (2.0 * EPS)).abs());
    }
    Ok(worst)
}

/// Sample a configuration path q(t) on a uniform grid.
pub fn sample_path(n: usize, dt: f64, t_end: f64, q: impl Fn(f64) -> Vec<f64>) -> Trajectory {
    let steps = crate::calculus::step_count(dt, t_end);
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let rows = times
        .iter()
        .map(|&t| {
            let r = q(t);
            debug_assert_eq!(r.len(), n);
            r
        })
        .collect();
    Trajectory { dt, times, rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn damped_structure() {
        let sys = LagrangianSystem::parse("v^2/2 - q^2/2 - 0.1*z", 1).unwrap();
        let x = [1.0, 2.0, 0.5];
        assert!(sys.regular_at(&x).unwrap());
        // v L_v - L = 4 - 1.45
        assert!((sys.energy(&x).unwrap() - 2.55).abs() < 1e-15);
        assert_eq!(sys.eta(&x).unwrap(), vec![-2.0, 0.0, 1.0]);
        assert!(close(&sys.herglotz(&x).unwrap(), &[2.0, -1.2, 1.45], 1e-15));
        assert!(close(&sys.herglotz_by_flat(&x).unwrap(), &[2.0, -1.2, 1.45], 1e-13));
        assert_eq!(sys.legendre(&x).unwrap(), vec![1.0, 2.0, 0.5]);
    }

    #[test]
    fn singular_lagrangian_detected() {
        let sys = LagrangianSystem::parse("(v1-v2)^2/2 - 0.1*z", 2).unwrap();
        let x = [0.1, 0.2, 0.3, -0.4, 0.5];
        assert!(!sys.regular_at(&x).unwrap());
        assert_eq!(sys.w_rank(&x).unwrap(), 1);
        assert_eq!(sys.herglotz(&x).unwrap_err(), Error::SingularLagrangian);
    }

    #[test]
    fn coupled_reeb() {
        let sys = LagrangianSystem::parse("v^2/2 - 0.1*z*v", 1).unwrap();
        let x = [0.3, -0.7, 1.9];
        assert!(close(&sys.reeb(&x).unwrap(), &[0.0, 0.1, 1.0], 1e-15));
        // i_R d eta_L = 0 and eta_L(R_L) = 1
        let r = sys.reeb(&x).unwrap();
        let eta = sys.eta(&x).unwrap();
        assert!((pair(&eta, &r) - 1.0).abs() < 1e-15);
        for k in 0..3 {
            let mut e = vec![0.0; 3];
            e[k] = 1.0;
            assert!(sys.deta(&r, &e, &x).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn free_particle_field() {
        let sys = LagrangianSystem::parse("v^2/2", 1).unwrap();
        assert!(close(&sys.herglotz(&[3.0, -2.0, 1.0]).unwrap(), &[-2.0, 0.0, 2.0], 1e-15));
    }

    #[test]
    fn legendre_momentum() {
        let sys = LagrangianSystem::parse("3*v^2/2", 1).unwrap();
        assert_eq!(sys.legendre(&[0.4, 2.0, -1.0]).unwrap(), vec![0.4, 6.0, -1.0]);
    }

    #[test]
    fn newton_inversion_round_trip() {
        let sys = LagrangianSystem::parse("v^2/2 + v^4/12 - 0.2*z*v + q*v", 1).unwrap();
        let x = [0.3, 1.1, -0.4];
        let y = sys.legendre(&x).unwrap();
        let back = sys.inverse_legendre(&y).unwrap();
        assert!(close(&back, &x, 1e-12));
    }

    #[test]
    fn action_closed_forms() {
        let path = sample_path(1, 0.01, 2.0, |t| vec![t.sin()]);
        let zero = LagrangianSystem::parse("0", 1).unwrap();
        assert_eq!(herglotz_action(&zero, &path, 3.0).unwrap(), 3.0);
        let one = LagrangianSystem::parse("1", 1).unwrap();
        assert!((herglotz_action(&one, &path, 5.0).unwrap() - 7.0).abs() < 1e-12);
        let decay = LagrangianSystem::parse("-0.3*z", 1).unwrap();
        let path = sample_path(1, 0.01, 1.0, |t| vec![t]);
        assert!((herglotz_action(&decay, &path, 1.0).unwrap() - (-0.3f64).exp()).abs() < 1e-6);
    }
}
