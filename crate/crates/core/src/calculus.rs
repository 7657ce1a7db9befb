//! Charts, fields, Lie brackets and fixed-step flows.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::scalar::{self, Dual, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartKind {
    /// (q, p, z)
    Cotangent,
    /// (q, v, z)
    Tangent,
    /// (x, y, z, u) with `s` extra coordinates.
    Precontact { s: usize },
}

/// Coordinate layout of a Darboux-type chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub n: usize,
    pub kind: ChartKind,
    pub names: Vec<String>,
}

fn block(prefix: &str, n: usize) -> Vec<String> {
    if n == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }
}

impl Chart {
    pub fn cotangent(n: usize) -> Chart {
        Self::build(n, ChartKind::Cotangent, "q", "p")
    }

    pub fn tangent(n: usize) -> Chart {
        Self::build(n, ChartKind::Tangent, "q", "v")
    }

    pub fn precontact(r: usize, s: usize) -> Chart {
        let mut c = Self::build(r, ChartKind::Precontact { s }, "x", "y");
        c.names.extend(block("u", s));
        c
    }

    fn build(n: usize, kind: ChartKind, a: &str, b: &str) -> Chart {
        let mut names = block(a, n);
        names.extend(block(b, n));
        names.push("z".into());
        Chart { n, kind, names }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn z(&self) -> usize {
        2 * self.n
    }

    /// Index of a coordinate; one-dimensional blocks also accept `q1`-style names.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Some(i);
        }
        if self.n == 1 {
            let alias = name.strip_suffix('1')?;
            let i = self.names.iter().position(|n| n == alias)?;
            return (i != self.z()).then_some(i);
        }
        None
    }

    pub fn parse(&self, text: &str) -> Result<Expr> {
        Expr::parse_with(text, self.names.clone(), &|s| self.index_of(s))
    }

    /// Parse an expression on the base (q, z) or (q) of this chart.
    pub fn parse_base(&self, text: &str, with_z: bool) -> Result<Expr> {
        let mut names: Vec<String> = self.names[..self.n].to_vec();
        if with_z {
            names.push("z".into());
        }
        let n = self.n;
        let lookup = |s: &str| {
            let i = self.index_of(s)?;
            if i < n {
                Some(i)
            } else if with_z && i == self.z() {
                Some(n)
            } else {
                None
            }
        };
        Expr::parse_with(text, names, &lookup)
    }
}

/// Differentiable scalar map on chart points.
pub trait ScalarField {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S>;
}

/// Differentiable map from chart points to vector components.
pub trait VectorField {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>>;
}

/// Differentiable map from chart points to 1-form components.
pub trait CovectorField {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>>;
}

impl ScalarField for Expr {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        self.eval_at(x)
    }
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        (**self).value(x)
    }
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        (**self).value(x)
    }
}

impl<T: CovectorField + ?Sized> CovectorField for &T {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        (**self).value(x)
    }
}

/// Constant function.
#[derive(Clone, Copy, Debug)]
pub struct Const(pub f64);

impl ScalarField for Const {
    fn value<S: Scalar>(&self, _x: &[S]) -> Result<S> {
        Ok(S::cst(self.0))
    }
}

/// Coordinate function `x -> x[i]`.
#[derive(Clone, Copy, Debug)]
pub struct Coord(pub usize);

impl ScalarField for Coord {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        Ok(x[self.0].clone())
    }
}

/// Pointwise product of two scalar fields.
#[derive(Clone, Debug)]
pub struct Product<A, B>(pub A, pub B);

impl<A: ScalarField, B: ScalarField> ScalarField for Product<A, B> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        Ok(self.0.value(x)? * self.1.value(x)?)
    }
}

/// Pointwise quotient of two scalar fields.
#[derive(Clone, Debug)]
pub struct Quotient<A, B>(pub A, pub B);

impl<A: ScalarField, B: ScalarField> ScalarField for Quotient<A, B> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        Ok(self.0.value(x)? / self.1.value(x)?)
    }
}

/// X(f) as a scalar field.
#[derive(Clone, Debug)]
pub struct Along<X, F>(pub X, pub F);

impl<X: VectorField, F: ScalarField> ScalarField for Along<X, F> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        directional(&self.1, &self.0, x)
    }
}

/// a f + b g.
#[derive(Clone, Debug)]
pub struct Combo<A, B>(pub f64, pub A, pub f64, pub B);

impl<A: ScalarField, B: ScalarField> ScalarField for Combo<A, B> {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<S> {
        Ok(self.1.value(x)?.scale(self.0) + self.3.value(x)?.scale(self.2))
    }
}

/// Vector (or covector) field whose components are expressions.
#[derive(Clone, Debug)]
pub struct ExprField(pub Vec<Expr>);

impl ExprField {
    pub fn parse(chart: &Chart, comps: &[&str]) -> Result<Self> {
        comps.iter().map(|c| chart.parse(c)).collect::<Result<_>>().map(ExprField)
    }
}

impl VectorField for ExprField {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.0.iter().map(|e| e.eval_at(x)).collect()
    }
}

impl CovectorField for ExprField {
    fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.0.iter().map(|e| e.eval_at(x)).collect()
    }
}

/// Constant-coefficient field.
#[derive(Clone, Debug)]
pub struct ConstField(pub Vec<f64>);

impl VectorField for ConstField {
    fn value<S: Scalar>(&self, _x: &[S]) -> Result<Vec<S>> {
        Ok(self.0.iter().map(|&c| S::cst(c)).collect())
    }
}

impl CovectorField for ConstField {
    fn value<S: Scalar>(&self, _x: &[S]) -> Result<Vec<S>> {
        Ok(self.0.iter().map(|&c| S::cst(c)).collect())
    }
}

/// Differential of a scalar field.
pub fn d<F: ScalarField, S: Scalar>(f: &F, x: &[S]) -> Result<Vec<S>> {
    Ok(scalar::gradient(|y: &[Dual<S>]| f.value(y), x)?.1)
}

/// Value and differential of a scalar field.
pub fn value_and_d<F: ScalarField, S: Scalar>(f: &F, x: &[S]) -> Result<(S, Vec<S>)> {
    scalar::gradient(|y: &[Dual<S>]| f.value(y), x)
}

pub fn pair<S: Scalar>(a: &[S], v: &[S]) -> S {
    crate::linalg::dot(a, v)
}

/// X(f) at x.
pub fn directional<F: ScalarField, X: VectorField, S: Scalar>(f: &F, field: &X, x: &[S]) -> Result<S> {
    Ok(pair(&d(f, x)?, &field.value(x)?))
}

/// Jacobian of a vector field: row k is the gradient of component k.
pub fn field_jacobian<X: VectorField, S: Scalar>(field: &X, x: &[S]) -> Result<(Vec<S>, Vec<Vec<S>>)> {
    scalar::jacobian(|y: &[Dual<S>]| field.value(y), x)
}

/// [X, Y]^k = X^j d_j Y^k - Y^j d_j X^k.
pub fn lie_bracket<X: VectorField, Y: VectorField, S: Scalar>(
    xf: &X,
    yf: &Y,
    x: &[S],
) -> Result<Vec<S>> {
    let (xv, jx) = field_jacobian(xf, x)?;
    let (yv, jy) = field_jacobian(yf, x)?;
    Ok((0..x.len())
        .map(|k| pair(&jy[k], &xv) - pair(&jx[k], &yv))
        .collect())
}

/// Coordinate divergence of a vector field.
pub fn divergence<X: VectorField, S: Scalar>(field: &X, x: &[S]) -> Result<S> {
    let (_, j) = field_jacobian(field, x)?;
    let mut acc = S::zero();
    for (k, row) in j.iter().enumerate() {
        acc = acc + row[k].clone();
    }
    Ok(acc)
}

/// L_X alpha through Cartan's formula i_X d(alpha) + d(alpha(X)).
pub fn lie_derivative_form<X: VectorField, A: CovectorField, S: Scalar>(
    xf: &X,
    alpha: &A,
    x: &[S],
) -> Result<Vec<S>> {
    let n = x.len();
    let (_, ja) = scalar::jacobian(|y: &[Dual<S>]| alpha.value(y), x)?;
    let xv = xf.value(x)?;
    let (_, dax) = scalar::gradient(
        |y: &[Dual<S>]| Ok(pair(&alpha.value(y)?, &xf.value(y)?)),
        x,
    )?;
    // (d alpha)_{ij} = d_i alpha_j - d_j alpha_i, and (i_X d alpha)_j = X^i (d alpha)_{ij}
    Ok((0..n)
        .map(|j| {
            let mut acc = dax[j].clone();
            for i in 0..n {
                acc = acc + xv[i].clone() * (ja[j][i].clone() - ja[i][j].clone());
            }
            acc
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Euler,
}

/// Uniform-step integral curve.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    pub fn last(&self) -> &[f64] {
        self.rows.last().expect("trajectory has at least one row")
    }

    /// CSV with header `t,<names>`, LF line endings and 17 significant digits.
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut s = String::from("t");
        for n in names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for (t, row) in self.times.iter().zip(&self.rows) {
            let _ = write!(s, "{}", fmt17(*t));
            for v in row {
                let _ = write!(s, ",{}", fmt17(*v));
            }
            s.push('\n');
        }
        s
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Number of steps for a uniform grid on [0, t_end].
pub fn step_count(dt: f64, t_end: f64) -> usize {
    (t_end / dt + 1e-9).floor() as usize
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Fixed-step integration of `field` from `x0`.
pub fn integrate<X: VectorField>(
    field: &X,
    x0: &[f64],
    dt: f64,
    t_end: f64,
    method: Method,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Config {
            path: "integrator".into(),
            msg: "dt must be positive and t_end non-negative".into(),
        });
    }
    let steps = step_count(dt, t_end);
    let mut rows = Vec::with_capacity(steps + 1);
    let mut times = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    rows.push(x.clone());
    times.push(0.0);
    let eval = |y: &[f64], t: f64| -> Result<Vec<f64>> {
        field.value(y).map_err(|e| Error::Step {
            t,
            source: Box::new(e),
        })
    };
    let axpy = |a: &[f64], k: &[f64], h: f64| -> Vec<f64> {
        a.iter().zip(k).map(|(ai, ki)| ai + h * ki).collect()
    };
    for k in 0..steps {
        let t = k as f64 * dt;
        x = match method {
            Method::Euler => axpy(&x, &eval(&x, t)?, dt),
            Method::Rk4 => {
                let k1 = eval(&x, t)?;
                let k2 = eval(&axpy(&x, &k1, dt / 2.0), t + dt / 2.0)?;
                let k3 = eval(&axpy(&x, &k2, dt / 2.0), t + dt / 2.0)?;
                let k4 = eval(&axpy(&x, &k3, dt), t + dt)?;
                (0..x.len())
                    .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            }
        };
        let t1 = (k + 1) as f64 * dt;
        if !finite(&x) {
            return Err(Error::NonFinite { t: t1 });
        }
        rows.push(x.clone());
        times.push(t1);
    }
    Ok(Trajectory { dt, times, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_names() {
        assert_eq!(Chart::cotangent(1).names, vec!["q", "p", "z"]);
        assert_eq!(
            Chart::tangent(2).names,
            vec!["q1", "q2", "v1", "v2", "z"]
        );
        assert_eq!(Chart::precontact(1, 1).names, vec!["x", "y", "z", "u"]);
        let c = Chart::cotangent(1);
        assert_eq!(c.index_of("p1"), Some(1));
        assert_eq!(c.index_of("z1"), None);
    }

    #[test]
    fn directional_examples() {
        let c = Chart::cotangent(1);
        let z = c.parse("z").unwrap();
        let r = ConstField(vec![0.0, 0.0, 1.0]);
        assert_eq!(directional(&z, &r, &[0.3, -2.0, 5.0]).unwrap(), 1.0);
        assert_eq!(directional(&Const(4.0), &r, &[0.3, -2.0, 5.0]).unwrap(), 0.0);
    }

    #[test]
    fn bracket_of_horizontal_basis() {
        let c = Chart::cotangent(1);
        let a = ExprField::parse(&c, &["1", "0", "p"]).unwrap();
        let b = ConstField(vec![0.0, 1.0, 0.0]);
        let v = lie_bracket(&a, &b, &[0.4, 1.3, -0.2]).unwrap();
        assert_eq!(v, vec![0.0, 0.0, -1.0]);
        // with the opposite sign on the z-component the bracket flips to +R
        let a_minus = ExprField::parse(&c, &["1", "0", "-p"]).unwrap();
        let v = lie_bracket(&a_minus, &b, &[0.4, 1.3, -0.2]).unwrap();
        assert_eq!(v, vec![0.0, 0.0, 1.0]);
        assert_eq!(lie_bracket(&a, &a, &[0.4, 1.3, -0.2]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn bracket_escapes_distribution() {
        // (x, y, w) configuration block
        let names = ["x", "y", "w"];
        let parse = |s: &str| Expr::parse(s, &names).unwrap();
        let x1 = ExprField(vec![parse("1"), parse("0"), parse("y")]);
        let x2 = ExprField(vec![parse("0"), parse("1"), parse("0")]);
        let v = lie_bracket(&x1, &x2, &[0.5, 1.5, -1.0]).unwrap();
        assert_eq!(v, vec![0.0, 0.0, -1.0]);
    }

    #[test]
    fn reeb_flow_steps_z() {
        let r = ConstField(vec![0.0, 0.0, 1.0]);
        let t = integrate(&r, &[0.0, 0.0, 0.0], 0.1, 1.0, Method::Rk4).unwrap();
        assert_eq!(t.rows.len(), 11);
        for (k, row) in t.rows.iter().enumerate() {
            assert!((row[2] - 0.1 * k as f64).abs() < 1e-15);
        }
        let t = integrate(&r, &[1.0, 2.0, 3.0], 0.1, 0.0, Method::Euler).unwrap();
        assert_eq!(t.rows, vec![vec![1.0, 2.0, 3.0]]);
    }

    #[test]
    fn blow_up_is_reported() {
        let c = Chart::cotangent(1);
        let f = ExprField::parse(&c, &["q^2", "0", "0"]).unwrap();
        let err = integrate(&f, &[1.0, 0.0, 0.0], 0.1, 5.0, Method::Euler).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
        let f = ExprField::parse(&c, &["1", "0", "log(1-q)"]).unwrap();
        let err = integrate(&f, &[0.5, 0.0, 0.0], 0.5, 5.0, Method::Euler).unwrap_err();
        assert!(matches!(err, Error::Step { .. }));
    }

    #[test]
    fn cartan_formula_on_exact_form() {
        // L_X df = d(X(f)); X = (q p, 1, 0), f = q^2 z
        let c = Chart::cotangent(1);
        let xf = ExprField::parse(&c, &["q*p", "1", "0"]).unwrap();
        let df = ExprField::parse(&c, &["2*q*z", "0", "q^2"]).unwrap();
        let x = [0.7, -1.1, 0.3];
        let lhs = lie_derivative_form(&xf, &df, &x).unwrap();
        // X(f) = 2 q^2 p z
        let xf_expr = c.parse("2*q^2*p*z").unwrap();
        let rhs = d(&xf_expr, &x).unwrap();
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_format() {
        let t = Trajectory {
            dt: 0.5,
            times: vec![0.0, 0.5],
            rows: vec![vec![1.0, 0.1], vec![2.0, -3.0]],
        };
        let csv = t.to_csv(&["q".into(), "p".into()]);
        assert_eq!(
            csv,
            "t,q,p\n0.0000000000000000e0,1.0000000000000000e0,1.0000000000000001e-1\n\
             5.0000000000000000e-1,2.0000000000000000e0,-3.0000000000000000e0\n"
        );
    }
}
