//! Canonical contact structure in Darboux coordinates (q, p, z), with the
//! cosymplectic and symplectic baselines.

use crate::calculus::{
    d, directional, divergence, lie_bracket, lie_derivative_form, pair, value_and_d, Chart,
    CovectorField, ScalarField, VectorField,
};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::scalar::Scalar;

/// eta = dz - p_i dq^i on the (q, p, z) chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContactStructure {
    pub n: usize,
}

impl ContactStructure {
    pub fn canonical(n: usize) -> Self {
        assert!(n >= 1, "contact structure needs n >= 1");
        ContactStructure { n }
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn chart(&self) -> Chart {
        Chart::cotangent(self.n)
    }

    pub fn eta<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = self.n;
        let mut e = vec![S::zero(); 2 * n + 1];
        for i in 0..n {
            e[i] = -x[n + i].clone();
        }
        e[2 * n] = S::cst(1.0);
        e
    }

    pub fn reeb<S: Scalar>(&self) -> Vec<S> {
        let mut r = vec![S::zero(); self.dim()];
        r[2 * self.n] = S::cst(1.0);
        r
    }

    /// d eta(u, w) with d eta = dq^i ^ dp_i.
    pub fn deta<S: Scalar>(&self, u: &[S], w: &[S]) -> S {
        let n = self.n;
        let mut acc = S::zero();
        for i in 0..n {
            acc = acc + u[i].clone() * w[n + i].clone() - u[n + i].clone() * w[i].clone();
        }
        acc
    }

    /// i_v d eta + eta(v) eta.
    pub fn flat<S: Scalar>(&self, v: &[S], x: &[S]) -> Vec<S> {
        let n = self.n;
        let eta = self.eta(x);
        let ev = pair(&eta, v);
        let mut out: Vec<S> = eta.iter().map(|e| e.clone() * ev.clone()).collect();
        for i in 0..n {
            out[i] = out[i].clone() - v[n + i].clone();
            out[n + i] = out[n + i].clone() + v[i].clone();
        }
        out
    }

    /// Matrix of flat: column j is flat(e_j).
    pub fn flat_matrix<S: Scalar>(&self, x: &[S]) -> Mat<S> {
        let m = self.dim();
        let cols: Vec<Vec<S>> = (0..m)
            .map(|j| {
                let e: Vec<S> = (0..m).map(|i| S::cst(if i == j { 1.0 } else { 0.0 })).collect();
                self.flat(&e, x)
            })
            .collect();
        linalg::transpose(&cols)
    }

    /// Inverse of flat, by an LU solve.
    pub fn sharp<S: Scalar>(&self, alpha: &[S], x: &[S]) -> Result<Vec<S>> {
        let v = linalg::solve(&self.flat_matrix(x), alpha)?;
        let back = self.flat(&v, x);
        let scale = alpha.iter().fold(1.0_f64, |m, a| m.max(a.re().abs()));
        let res = back
            .iter()
            .zip(alpha)
            .fold(0.0_f64, |m, (b, a)| m.max((b.re() - a.re()).abs()));
        if res > 1e-10 * scale {
            return Err(Error::SingularSystem);
        }
        Ok(v)
    }

    /// sharp_Lambda(alpha) = sharp(alpha) - alpha(R) R.
    pub fn sharp_lambda<S: Scalar>(&self, alpha: &[S], x: &[S]) -> Result<Vec<S>> {
        let mut v = self.sharp(alpha, x)?;
        let z = 2 * self.n;
        v[z] = v[z].clone() - alpha[z].clone();
        Ok(v)
    }

    pub fn jacobi(&self) -> JacobiStructure {
        JacobiStructure { s: *self }
    }
}

/// eta as a covector field.
#[derive(Clone, Copy, Debug)]
pub struct EtaField(pub ContactStructure);

impl CovectorField for EtaField {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        Ok(self.0.eta(x))
    }
}

/// The Reeb field d/dz.
#[derive(Clone, Copy, Debug)]
pub struct ReebField(pub ContactStructure);

impl VectorField for ReebField {
    fn value<S: Scalar>(&self, _x: &[S]) -> Result<Vec<S>> {
        Ok(self.0.reeb())
    }
}

/// Lambda(a, b) = -d eta(sharp a, sharp b) together with E = -R.
#[derive(Clone, Copy, Debug)]
pub struct JacobiStructure {
    pub s: ContactStructure,
}

impl JacobiStructure {
    pub fn lambda<S: Scalar>(&self, a: &[S], b: &[S], x: &[S]) -> Result<S> {
        let sa = self.s.sharp(a, x)?;
        let sb = self.s.sharp(b, x)?;
        Ok(-self.s.deta(&sa, &sb))
    }

    pub fn e<S: Scalar>(&self) -> Vec<S> {
        self.s.reeb::<S>().into_iter().map(|c| -c).collect()
    }

    /// {f, g} = Lambda(df, dg) + f E(g) - g E(f).
    pub fn bracket<F: ScalarField, G: ScalarField, S: Scalar>(&self, f: &F, g: &G, x: &[S]) -> Result<S> {
        let (fv, df) = value_and_d(f, x)?;
        let (gv, dg) = value_and_d(g, x)?;
        let e = self.e::<S>();
        Ok(self.lambda(&df, &dg, x)? + fv * pair(&dg, &e) - gv * pair(&df, &e))
    }
}

/// The bracket {f, g} as a scalar field, so brackets can nest.
#[derive(Clone, Copy, Debug)]
pub struct Bracket<'a, F, G> {
    pub j: JacobiStructure,
    pub f: &'a F,
    pub g: &'a G,
}

impl<F: ScalarField, G: ScalarField> ScalarField for Bracket<'_, F, G> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        self.j.bracket(self.f, self.g, x)
    }
}

/// Contact Hamiltonian system (M, eta, H).
#[derive(Clone, Debug)]
pub struct HamiltonianSystem<F> {
    pub structure: ContactStructure,
    pub h: F,
}

impl<F: ScalarField> HamiltonianSystem<F> {
    pub fn new(structure: ContactStructure, h: F) -> Self {
        HamiltonianSystem { structure, h }
    }

    pub fn vector_field(&self) -> HamiltonianField<'_, F> {
        HamiltonianField {
            s: self.structure,
            h: &self.h,
        }
    }

    /// X_H from the flat equation flat(X) = dH - (R(H) + H) eta.
    pub fn vector_field_by_flat<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let s = self.structure;
        let (h, dh) = value_and_d(&self.h, x)?;
        let rh = dh[2 * s.n].clone();
        let eta = s.eta(x);
        let rhs: Vec<S> = dh
            .iter()
            .zip(&eta)
            .map(|(a, e)| a.clone() - (rh.clone() + h.clone()) * e.clone())
            .collect();
        s.sharp(&rhs, x)
    }

    /// X_H = sharp_Lambda(dH) - H R.
    pub fn vector_field_by_lambda<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let s = self.structure;
        let (h, dh) = value_and_d(&self.h, x)?;
        let mut v = s.sharp_lambda(&dh, x)?;
        let z = 2 * s.n;
        v[z] = v[z].clone() - h;
        Ok(v)
    }

    pub fn dissipation_report(&self, x: &[f64]) -> Result<DissipationReport> {
        dissipation_report(self, x)
    }
}

/// Coordinate form of X_H:
/// q' = H_p, p' = -(H_q + p H_z), z' = p H_p - H.
#[derive(Clone, Copy, Debug)]
pub struct HamiltonianField<'a, F> {
    pub s: ContactStructure,
    pub h: &'a F,
}

impl<F: ScalarField> VectorField for HamiltonianField<'_, F> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let n = self.s.n;
        let (h, dh) = value_and_d(self.h, x)?;
        let hz = dh[2 * n].clone();
        let mut out = vec![S::zero(); 2 * n + 1];
        let mut z = -h;
        for i in 0..n {
            let (hq, hp, p) = (dh[i].clone(), dh[n + i].clone(), x[n + i].clone());
            out[i] = hp.clone();
            out[n + i] = -(hq + p.clone() * hz.clone());
            z = z + p * hp;
        }
        out[2 * n] = z;
        Ok(out)
    }
}

/// Cosymplectic evolution field (H_p, -H_q, 1) for Omega = dq^dp, eta = dz.
#[derive(Clone, Copy, Debug)]
pub struct EvolutionField<'a, F> {
    pub n: usize,
    pub h: &'a F,
}

impl<F: ScalarField> VectorField for EvolutionField<'_, F> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let n = self.n;
        let dh = d(self.h, x)?;
        let mut out = vec![S::zero(); 2 * n + 1];
        for i in 0..n {
            out[i] = dh[n + i].clone();
            out[n + i] = -dh[i].clone();
        }
        out[2 * n] = S::cst(1.0);
        Ok(out)
    }
}

/// Symplectic field (H_p, -H_q) on a (q, p) chart.
#[derive(Clone, Copy, Debug)]
pub struct SymplecticField<'a, F> {
    pub n: usize,
    pub h: &'a F,
}

impl<F: ScalarField> VectorField for SymplecticField<'_, F> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let n = self.n;
        let dh = d(self.h, x)?;
        let mut out = vec![S::zero(); 2 * n];
        for i in 0..n {
            out[i] = dh[n + i].clone();
            out[n + i] = -dh[i].clone();
        }
        Ok(out)
    }
}

/// Residuals of the dissipation laws at a point; all vanish in exact arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct DissipationReport {
    /// X_H(H) + R(H) H
    pub energy: f64,
    /// Components of L_{X_H} eta + R(H) eta.
    pub eta_scaling: Vec<f64>,
    /// div X_H + (n+1) dH/dz
    pub volume: f64,
}

impl DissipationReport {
    pub fn max(&self) -> f64 {
        self.energy
            .abs()
            .max(linalg::norm_inf(&self.eta_scaling))
            .max(self.volume.abs())
    }
}

pub fn dissipation_report<F: ScalarField>(sys: &HamiltonianSystem<F>, x: &[f64]) -> Result<DissipationReport> {
    let s = sys.structure;
    let xh = sys.vector_field();
    let (h, dh) = value_and_d(&sys.h, x)?;
    let rh = dh[2 * s.n];
    let energy = directional(&sys.h, &xh, x)? + rh * h;
    let eta = s.eta(x);
    let eta_scaling = lie_derivative_form(&xh, &EtaField(s), x)?
        .iter()
        .zip(&eta)
        .map(|(l, e)| l + rh * e)
        .collect();
    let volume = divergence(&xh, x)? + (s.n as f64 + 1.0) * rh;
    Ok(DissipationReport {
        energy,
        eta_scaling,
        volume,
    })
}

/// {f, g} - X_f(g) - g R(f) and {f, g} + eta([X_f, X_g]).
pub fn lemma_chain<F: ScalarField, G: ScalarField>(
    s: ContactStructure,
    f: &F,
    g: &G,
    x: &[f64],
) -> Result<(f64, f64)> {
    let j = s.jacobi();
    let b = j.bracket(f, g, x)?;
    let xf = HamiltonianField { s, h: f };
    let xg = HamiltonianField { s, h: g };
    let gv = g.value(x)?;
    let rf = d(f, x)?[2 * s.n];
    let first = b - directional(g, &xf, x)? - gv * rf;
    let br = lie_bracket(&xf, &xg, x)?;
    let second = b + pair(&s.eta(x), &br);
    Ok((first, second))
}

/// {f,{g,h}} + {g,{h,f}} + {h,{f,g}}.
pub fn jacobiator<F: ScalarField, G: ScalarField, H: ScalarField>(
    j: JacobiStructure,
    f: &F,
    g: &G,
    h: &H,
    x: &[f64],
) -> Result<f64> {
    let gh = Bracket { j, f: g, g: h };
    let hf = Bracket { j, f: h, g: f };
    let fg = Bracket { j, f, g };
    Ok(j.bracket(f, &gh, x)? + j.bracket(g, &hf, x)? + j.bracket(h, &fg, x)?)
}

/// {f, gh} - g{f,h} - h{f,g} - gh E(f).
pub fn weak_leibniz<F: ScalarField, G: ScalarField, H: ScalarField>(
    j: JacobiStructure,
    f: &F,
    g: &G,
    h: &H,
    x: &[f64],
) -> Result<f64> {
    let gh = crate::calculus::Product(g, h);
    let (gv, hv) = (g.value(x)?, h.value(x)?);
    let ef = pair(&d(f, x)?, &j.e::<f64>());
    Ok(j.bracket(f, &gh, x)? - gv * j.bracket(f, h, x)? - hv * j.bracket(f, g, x)? - gv * hv * ef)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubmanifoldKind {
    Legendrian,
    Coisotropic,
    Isotropic,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub kind: SubmanifoldKind,
    /// max |Z_a(phi_b)|
    pub coisotropic_residual: f64,
    /// Largest distance from a unit tangent vector of N to span{Z_a}.
    pub isotropic_residual: f64,
    /// max |eta(t)| over an orthonormal tangent basis of N.
    pub horizontal_residual: f64,
    pub dim: usize,
}

/// Classify the zero set of `constraints` at a point on it.
pub fn submanifold_classify<F: ScalarField>(
    s: ContactStructure,
    constraints: &[F],
    x: &[f64],
) -> Result<Classification> {
    const TOL: f64 = 1e-8;
    let m = s.dim();
    let mut grads = Vec::new();
    let mut off = 0.0_f64;
    for c in constraints {
        let (v, g) = value_and_d(c, x)?;
        off = off.max(v.abs());
        grads.push(g);
    }
    if off > 1e-9 {
        return Err(Error::NotOnSubmanifold { residual: off });
    }
    let k = constraints.len();
    let rank = linalg::rank(&grads, m, 1e-9);
    if rank != k {
        return Err(Error::RankDeficient { rank, expected: k });
    }
    let zs: Vec<Vec<f64>> = grads
        .iter()
        .map(|g| s.sharp_lambda(g, x))
        .collect::<Result<_>>()?;
    let mut cois = 0.0_f64;
    for za in &zs {
        for gb in &grads {
            cois = cois.max(pair(gb, za).abs());
        }
    }
    let tangent = linalg::null_space(&grads, m, 1e-9);
    let zspan = linalg::orth(&zs, m, 1e-9);
    let iso = if zs.iter().all(|z| linalg::norm_inf(z) < 1e-14) {
        if tangent.is_empty() { 0.0 } else { 1.0 }
    } else {
        tangent
            .iter()
            .map(|t| linalg::distance_to_span(t, &zspan))
            .fold(0.0, f64::max)
    };
    let eta = s.eta(x);
    let horiz = tangent.iter().map(|t| pair(&eta, t).abs()).fold(0.0, f64::max);
    let dim = m - k;
    let coisotropic = cois < TOL;
    let kind = if coisotropic && dim == s.n && horiz < TOL {
        SubmanifoldKind::Legendrian
    } else if coisotropic {
        SubmanifoldKind::Coisotropic
    } else if iso < TOL {
        SubmanifoldKind::Isotropic
    } else {
        SubmanifoldKind::None
    };
    Ok(Classification {
        kind,
        coisotropic_residual: cois,
        isotropic_residual: iso,
        horizontal_residual: horiz,
        dim,
    })
}
