//! Lifts, Noether-type checks, dynamical and Cartan symmetries, momentum maps.

use crate::calculus::{
    d, directional, lie_bracket, lie_derivative_form, pair, Along, Chart, ScalarField, Trajectory,
    VectorField,
};
use crate::contact::{Bracket, ContactStructure, EtaField, HamiltonianField, HamiltonianSystem};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::herglotz::{Energy, HerglotzField, LagrangianEta, LagrangianSystem};
use crate::probe;
use crate::scalar::Scalar;

/// Y = Y^i(q, z) d/dq^i + Zc(z) d/dz on Q x R. Expressions are over (q, z).
#[derive(Clone, Debug)]
pub struct BaseField {
    pub n: usize,
    pub comps: Vec<Expr>,
    pub zcomp: Option<Expr>,
}

impl BaseField {
    /// A field on Q.
    pub fn on_q(n: usize, comps: &[&str]) -> Result<Self> {
        Self::on_qz(n, comps, None)
    }

    pub fn on_qz(n: usize, comps: &[&str], zcomp: Option<&str>) -> Result<Self> {
        if comps.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: comps.len(),
            });
        }
        let chart = Chart::tangent(n);
        Ok(BaseField {
            n,
            comps: comps.iter().map(|c| chart.parse_base(c, true)).collect::<Result<_>>()?,
            zcomp: zcomp.map(|c| chart.parse_base(c, true)).transpose()?,
        })
    }

    pub fn zero(n: usize) -> Self {
        let names: Vec<String> = (0..=n).map(|i| format!("b{i}")).collect();
        BaseField {
            n,
            comps: (0..n).map(|_| Expr::constant(0.0, &names)).collect(),
            zcomp: None,
        }
    }

    fn base<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut b = x[..self.n].to_vec();
        b.push(x[2 * self.n].clone());
        b
    }

    fn z_value<S: Scalar>(&self, b: &[S]) -> Result<S> {
        match &self.zcomp {
            Some(e) => e.eval_at(b),
            None => Ok(S::zero()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftKind {
    Vertical,
    Complete,
}

/// Vertical or complete lift of a [`BaseField`] to the (q, v, z) chart.
#[derive(Clone, Debug)]
pub struct Lift<'a> {
    pub base: &'a BaseField,
    pub kind: LiftKind,
}

/// Lift a base field; complete lifts need a z-part independent of q.
pub fn lift(base: &BaseField, kind: LiftKind) -> Result<Lift<'_>> {
    if kind == LiftKind::Complete {
        if let Some(zc) = &base.zcomp {
            for b in probe::grid(base.n + 1) {
                let g = zc.grad_at(&b)?;
                if g[..base.n].iter().any(|v| v.abs() > 1e-12) {
                    return Err(Error::InadmissibleLift);
                }
            }
        }
    }
    Ok(Lift { base, kind })
}

impl VectorField for Lift<'_> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let n = self.base.n;
        let b = self.base.base(x);
        let mut out = vec![S::zero(); 2 * n + 1];
        match self.kind {
            LiftKind::Vertical => {
                for i in 0..n {
                    out[n + i] = self.base.comps[i].eval_at(&b)?;
                }
            }
            LiftKind::Complete => {
                for i in 0..n {
                    let (y, g) = crate::calculus::value_and_d(&self.base.comps[i], &b)?;
                    out[i] = y;
                    let mut acc = S::zero();
                    for j in 0..n {
                        acc = acc + x[n + j].clone() * g[j].clone();
                    }
                    out[n + i] = acc;
                }
                out[2 * n] = self.base.z_value(&b)?;
            }
        }
        Ok(out)
    }
}

fn max_over<F: FnMut(&[f64]) -> Result<f64>>(probes: &[Vec<f64>], mut f: F) -> Result<f64> {
    let mut m = 0.0_f64;
    for p in probes {
        m = m.max(f(p)?.abs());
    }
    Ok(m)
}

/// max |X_L(f) + R_L(E_L) f| over probes: zero when f commutes with E_L.
pub fn dissipated_residual<F: ScalarField, G: ScalarField>(
    sys: &LagrangianSystem<F>,
    f: &G,
    probes: &[Vec<f64>],
) -> Result<f64> {
    let xi = HerglotzField(sys);
    max_over(probes, |x| {
        Ok(directional(f, &xi, x)? + sys.reeb_energy(x)? * f.value(x)?)
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoetherReport {
    pub is_symmetry: bool,
    /// max |X^C(L)|
    pub residual_a: f64,
    /// max |xi_L(f) - L_z f| with f = X^V(L)
    pub residual_b: f64,
}

pub fn noether_check<F: ScalarField>(
    sys: &LagrangianSystem<F>,
    x_field: &BaseField,
    probes: &[Vec<f64>],
) -> Result<NoetherReport> {
    let xc = lift(x_field, LiftKind::Complete)?;
    let xv = lift(x_field, LiftKind::Vertical)?;
    let residual_a = max_over(probes, |x| directional(sys, &xc, x))?;
    let f = Along(xv, sys);
    let xi = HerglotzField(sys);
    let z = 2 * sys.n;
    let residual_b = max_over(probes, |x| {
        let lz = d(sys, x)?[z];
        Ok(directional(&f, &xi, x)? - lz * f.value(x)?)
    })?;
    Ok(NoetherReport {
        is_symmetry: residual_a < 1e-10,
        residual_a,
        residual_b,
    })
}

/// max_t |f/E_L - (f/E_L)(0)| along a trajectory on the (q, v, z) chart.
pub fn conserved_ratio<F: ScalarField, G: ScalarField>(
    sys: &LagrangianSystem<F>,
    f: &G,
    traj: &Trajectory,
) -> Result<f64> {
    let mut first = None;
    let mut drift = 0.0_f64;
    for (t, x) in traj.times.iter().zip(&traj.rows) {
        let e = sys.energy(x)?;
        if e.abs() <= 1e-6 {
            return Err(Error::NearZeroEnergy { t: *t });
        }
        let r = f.value(x)? / e;
        let r0 = *first.get_or_insert(r);
        drift = drift.max((r - r0).abs());
    }
    Ok(drift)
}

/// -eta(X) as a scalar field.
#[derive(Clone, Debug)]
pub struct NegEta<X> {
    pub s: ContactStructure,
    pub x: X,
}

impl<X: VectorField> ScalarField for NegEta<X> {
    fn value<S: Scalar>(&self, p: &[S]) -> Result<S> {
        Ok(-pair(&self.s.eta(p), &self.x.value(p)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicalSymmetryReport {
    /// max |eta([X_H, X])|
    pub bracket_residual: f64,
    /// max |{H, f}| with f = -eta(X)
    pub commutation_residual: f64,
}

pub fn dynamical_symmetry_residual<F: ScalarField, X: VectorField>(
    sys: &HamiltonianSystem<F>,
    field: &X,
    probes: &[Vec<f64>],
) -> Result<DynamicalSymmetryReport> {
    let s = sys.structure;
    let xh = sys.vector_field();
    let bracket_residual = max_over(probes, |p| Ok(pair(&s.eta(p), &lie_bracket(&xh, field, p)?)))?;
    let f = NegEta { s, x: field };
    let b = Bracket {
        j: s.jacobi(),
        f: &sys.h,
        g: &f,
    };
    let commutation_residual = max_over(probes, |p| b.value(p))?;
    Ok(DynamicalSymmetryReport {
        bracket_residual,
        commutation_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartanReport {
    /// max ||L_Y eta_L - a eta_L - dg||_inf
    pub form_residual: f64,
    /// max |Y(E_L) - a E_L - g R_L(E_L)|
    pub energy_residual: f64,
    /// For a = 0: max |xi_L(F) + R_L(E_L) F| with F = eta_L(Y) - g.
    pub dissipated_residual: Option<f64>,
}

/// eta_L(Y) - g.
struct CartanQuantity<'a, F, Y, G> {
    sys: &'a LagrangianSystem<F>,
    y: &'a Y,
    g: &'a G,
}

impl<F: ScalarField, Y: VectorField, G: ScalarField> ScalarField for CartanQuantity<'_, F, Y, G> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        Ok(pair(&self.sys.eta(x)?, &self.y.value(x)?) - self.g.value(x)?)
    }
}

pub fn cartan_symmetry_check<F, Y, A, G>(
    sys: &LagrangianSystem<F>,
    y: &Y,
    a: &A,
    g: &G,
    probes: &[Vec<f64>],
) -> Result<CartanReport>
where
    F: ScalarField,
    Y: VectorField,
    A: ScalarField,
    G: ScalarField,
{
    let eta = LagrangianEta(sys);
    let form_residual = max_over(probes, |x| {
        let lie = lie_derivative_form(y, &eta, x)?;
        let e = sys.eta(x)?;
        let dg = d(g, x)?;
        let av = a.value(x)?;
        Ok((0..x.len()).fold(0.0_f64, |m, k| m.max((lie[k] - av * e[k] - dg[k]).abs())))
    })?;
    let energy = Energy(sys);
    let energy_residual = max_over(probes, |x| {
        Ok(directional(&energy, y, x)?
            - a.value(x)? * sys.energy(x)?
            - g.value(x)? * sys.reeb_energy(x)?)
    })?;
    let a_zero = probes.iter().all(|x| a.value(x) == Ok(0.0));
    let dissipated = if a_zero {
        Some(dissipated_residual(sys, &CartanQuantity { sys, y, g }, probes)?)
    } else {
        None
    };
    Ok(CartanReport {
        form_residual,
        energy_residual,
        dissipated_residual: dissipated,
    })
}

/// max |-eta_L(Y^C) - (Y^V(L) - Zc)| for an admissible base field.
pub fn lie_symmetry_identity_residual<F: ScalarField>(
    sys: &LagrangianSystem<F>,
    y: &BaseField,
    probes: &[Vec<f64>],
) -> Result<f64> {
    let yc = lift(y, LiftKind::Complete)?;
    let yv = lift(y, LiftKind::Vertical)?;
    max_over(probes, |x| {
        let lhs = -pair(&sys.eta(x)?, &yc.value(x)?);
        let zc = y.z_value(&y.base(x))?;
        Ok(lhs - (directional(sys, &yv, x)? - zc))
    })
}

/// max componentwise |X^C - X_f| with f = X^V(L) and X_f the Hamiltonian field of eta_L.
pub fn complete_lift_hamiltonian_residual<F: ScalarField>(
    sys: &LagrangianSystem<F>,
    x_field: &BaseField,
    probes: &[Vec<f64>],
) -> Result<f64> {
    let xc = lift(x_field, LiftKind::Complete)?;
    let f = Along(lift(x_field, LiftKind::Vertical)?, sys);
    max_over(probes, |x| {
        let a = xc.value(x)?;
        let b = sys.hamiltonian_field_of(&f, x)?;
        Ok(a.iter().zip(&b).fold(0.0_f64, |m, (u, w)| m.max((u - w).abs())))
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentumReport {
    /// J_k(x) = -eta(xi_M^(k))(x)
    pub values: Vec<f64>,
    /// max componentwise |X_{J_k} - xi_M^(k)| over the probes
    pub field_residuals: Vec<f64>,
}

/// Momentum map at `x` for generators acting by strict contactomorphisms.
pub fn momentum_map<X: VectorField>(
    gens: &[X],
    s: ContactStructure,
    x: &[f64],
    probes: &[Vec<f64>],
) -> Result<MomentumReport> {
    let eta = EtaField(s);
    let mut values = Vec::with_capacity(gens.len());
    let mut field_residuals = Vec::with_capacity(gens.len());
    for (index, g) in gens.iter().enumerate() {
        let residual = max_over(probes, |p| {
            Ok(lie_derivative_form(g, &eta, p)?.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        })?;
        if residual >= 1e-8 {
            return Err(Error::NotContactomorphism { index, residual });
        }
        let j = NegEta { s, x: g };
        values.push(j.value(x)?);
        let xj = HamiltonianField { s, h: &j };
        field_residuals.push(max_over(probes, |p| {
            let a = xj.value(p)?;
            let b = g.value(p)?;
            Ok(a.iter().zip(&b).fold(0.0_f64, |m, (u, w)| m.max((u - w).abs())))
        })?);
    }
    Ok(MomentumReport {
        values,
        field_residuals,
    })
}
