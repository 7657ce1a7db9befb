//! Dense linear algebra.
//!
//! LU with partial pivoting is generic over [`Scalar`] so solves can be
//! differentiated. Rank and null-space decisions are plain `f64` and go
//! through nalgebra's SVD.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Mat<S> = Vec<Vec<S>>;

/// Pivot magnitudes below this relative size are treated as singular.
const PIVOT_TOL: f64 = 1e-13;

/// Packed LU factors with the row permutation.
#[derive(Clone, Debug)]
pub struct Lu<S> {
    lu: Mat<S>,
    perm: Vec<usize>,
    sign: f64,
}

impl<S: Scalar> Lu<S> {
    /// Factor `a`; the first row holding the largest |pivot| wins ties.
    pub fn new(a: &Mat<S>) -> Result<Self> {
        let n = a.len();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = a
            .iter()
            .flatten()
            .map(|x| x.re().abs())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k][k].re().abs();
            for (i, row) in lu.iter().enumerate().skip(k + 1) {
                let m = row[k].re().abs();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if best <= PIVOT_TOL * scale {
                return Err(Error::SingularSystem);
            }
            if p != k {
                lu.swap(p, k);
                perm.swap(p, k);
                sign = -sign;
            }
            for i in k + 1..n {
                let f = lu[i][k].clone() / lu[k][k].clone();
                for j in k + 1..n {
                    let t = f.clone() * lu[k][j].clone();
                    lu[i][j] = lu[i][j].clone() - t;
                }
                lu[i][k] = f;
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.lu.len();
        let mut y: Vec<S> = self.perm.iter().map(|&i| b[i].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let t = self.lu[i][j].clone() * y[j].clone();
                y[i] = y[i].clone() - t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = self.lu[i][j].clone() * y[j].clone();
                y[i] = y[i].clone() - t;
            }
            y[i] = y[i].clone() / self.lu[i][i].clone();
        }
        y
    }

    pub fn det(&self) -> S {
        let mut d = S::cst(self.sign);
        for (i, row) in self.lu.iter().enumerate() {
            d = d * row[i].clone();
        }
        d
    }

    pub fn inverse(&self) -> Mat<S> {
        let n = self.lu.len();
        let cols: Vec<Vec<S>> = (0..n)
            .map(|j| {
                let e: Vec<S> = (0..n).map(|i| S::cst(if i == j { 1.0 } else { 0.0 })).collect();
                self.solve(&e)
            })
            .collect();
        transpose(&cols)
    }
}

pub fn solve<S: Scalar>(a: &Mat<S>, b: &[S]) -> Result<Vec<S>> {
    Ok(Lu::new(a)?.solve(b))
}

pub fn transpose<S: Clone>(a: &Mat<S>) -> Mat<S> {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect()
}

pub fn mat_vec<S: Scalar>(a: &Mat<S>, v: &[S]) -> Vec<S> {
    a.iter().map(|row| dot(row, v)).collect()
}

pub fn mat_mul<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Mat<S> {
    let bt = transpose(b);
    a.iter()
        .map(|row| bt.iter().map(|col| dot(row, col)).collect())
        .collect()
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc + x.clone() * y.clone();
    }
    acc
}

pub fn identity<S: Scalar>(n: usize) -> Mat<S> {
    (0..n)
        .map(|i| (0..n).map(|j| S::cst(if i == j { 1.0 } else { 0.0 })).collect())
        .collect()
}

pub fn to_f64(a: &Mat<impl Scalar>) -> Mat<f64> {
    a.iter().map(|r| r.iter().map(|x| x.re()).collect()).collect()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn to_dmatrix(a: &Mat<f64>, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), cols, |i, j| a[i][j])
}

/// Singular values in descending order.
pub fn singular_values(a: &Mat<f64>, cols: usize) -> Vec<f64> {
    if a.is_empty() || cols == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_dmatrix(a, cols).singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Numeric rank with a relative singular-value threshold.
pub fn rank(a: &Mat<f64>, cols: usize, rel_tol: f64) -> usize {
    let s = singular_values(a, cols);
    let Some(&smax) = s.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Like [`rank`], but fails when a singular value sits within a factor of
/// `band` of the threshold.
pub fn rank_checked(a: &Mat<f64>, cols: usize, rel_tol: f64, band: f64) -> Result<usize> {
    let s = singular_values(a, cols);
    let Some(&smax) = s.first() else { return Ok(0) };
    if smax == 0.0 {
        return Ok(0);
    }
    let thr = rel_tol * smax;
    if s.iter().any(|&x| x > thr / band && x <= thr * band) {
        return Err(Error::BoundaryRank);
    }
    Ok(s.iter().filter(|&&x| x > thr).count())
}

/// Orthonormal basis of the null space of `a` (rows x `cols`).
///
/// Basis vectors follow descending singular-value order of the padded
/// square matrix, and each is signed so its first entry above 1e-12 in
/// magnitude is positive.
pub fn null_space(a: &Mat<f64>, cols: usize, rel_tol: f64) -> Vec<Vec<f64>> {
    if cols == 0 {
        return Vec::new();
    }
    let rows = a.len().max(cols);
    let m = DMatrix::from_fn(rows, cols, |i, j| if i < a.len() { a[i][j] } else { 0.0 });
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    let smax = order.first().map(|&i| svd.singular_values[i]).unwrap_or(0.0);
    let thr = if smax == 0.0 { 0.0 } else { rel_tol * smax };
    order
        .into_iter()
        .filter(|&i| smax == 0.0 || svd.singular_values[i] <= thr)
        .map(|i| {
            let mut v: Vec<f64> = (0..cols).map(|j| vt[(i, j)]).collect();
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            v
        })
        .collect()
}

/// Orthonormal basis of the span of `vectors` (each of length `dim`).
pub fn orth(vectors: &[Vec<f64>], dim: usize, rel_tol: f64) -> Vec<Vec<f64>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    // span(V) is the orthogonal complement of null(V^T).
    let comp = null_space(&vectors.to_vec(), dim, rel_tol);
    if comp.is_empty() {
        return identity::<f64>(dim);
    }
    null_space(&comp, dim, rel_tol)
}

/// Distance from `v` to the span of the orthonormal `basis`.
pub fn distance_to_span(v: &[f64], basis: &[Vec<f64>]) -> f64 {
    let mut r = v.to_vec();
    for b in basis {
        let c: f64 = b.iter().zip(v).map(|(x, y)| x * y).sum();
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri -= c * bi;
        }
    }
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest sine of the principal angles between two subspaces, or 1 when
/// their dimensions differ.
pub fn subspace_gap(a: &[Vec<f64>], b: &[Vec<f64>], dim: usize) -> f64 {
    let (oa, ob) = (orth(a, dim, 1e-10), orth(b, dim, 1e-10));
    if oa.len() != ob.len() {
        return 1.0;
    }
    oa.iter()
        .map(|v| distance_to_span(v, &ob))
        .chain(ob.iter().map(|v| distance_to_span(v, &oa)))
        .fold(0.0, f64::max)
}

/// Minimum-norm least-squares solution of `a x = b` through the SVD, with
/// singular values below `rel_tol * s_max` treated as zero.
pub fn pinv_solve(a: &Mat<f64>, cols: usize, b: &[f64], rel_tol: f64) -> Vec<f64> {
    if a.is_empty() || cols == 0 {
        return vec![0.0; cols];
    }
    let svd = to_dmatrix(a, cols).svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0_f64, |m, &v| m.max(v));
    if smax == 0.0 {
        return vec![0.0; cols];
    }
    let rhs = nalgebra::DVector::from_column_slice(b);
    svd.solve(&rhs, rel_tol * smax)
        .map(|x| x.iter().copied().collect())
        .unwrap_or_else(|_| vec![0.0; cols])
}

/// Orthonormal basis of span(a) ∩ span(b).
pub fn intersect(a: &[Vec<f64>], b: &[Vec<f64>], dim: usize, rel_tol: f64) -> Vec<Vec<f64>> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut comp = null_space(&a.to_vec(), dim, rel_tol);
    comp.extend(null_space(&b.to_vec(), dim, rel_tol));
    if comp.is_empty() {
        return identity::<f64>(dim);
    }
    null_space(&comp, dim, rel_tol)
}

/// Orthonormal basis of span(a) + span(b).
pub fn span_sum(a: &[Vec<f64>], b: &[Vec<f64>], dim: usize, rel_tol: f64) -> Vec<Vec<f64>> {
    let mut all = a.to_vec();
    all.extend_from_slice(b);
    orth(&all, dim, rel_tol)
}

/// Least-squares solution of `a x = b` via the normal equations on the
/// column space (`a` has full column rank).
pub fn least_squares(a: &Mat<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let at = transpose(a);
    let ata = mat_mul(&at, a);
    let atb = mat_vec(&at, b);
    solve(&ata, &atb)
}
