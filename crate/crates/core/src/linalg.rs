//! Small dense linear-algebra helpers: ranks, kernels, projectors, inertia,
//! and exact rational elimination.

use nalgebra::{DMatrix, DVector};
use num::{BigRational, Signed, Zero};

/// Relative singular-value cutoff used for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-9;

/// Singular values of `m`, padded with zero rows when it is wide so that the
/// full right singular basis is available.
fn full_svd(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (r, c) = m.shape();
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    (svd.singular_values, svd.v_t.expect("requested v_t"))
}

fn cutoff(sv: &DVector<f64>, rel: f64) -> f64 {
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    rel * smax.max(f64::MIN_POSITIVE)
}

/// Numerical rank with singular values below `rel * sigma_max` treated as zero.
pub fn rank(m: &DMatrix<f64>, rel: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * smax).count()
}

/// Orthonormal basis (as columns) of the kernel of `m`, with the smallest
/// singular value that was kept as nonzero and the largest treated as zero.
pub fn nullspace_with_gap(m: &DMatrix<f64>, rel: f64) -> (DMatrix<f64>, f64, f64) {
    let n = m.ncols();
    if m.nrows() == 0 {
        return (DMatrix::identity(n, n), f64::INFINITY, 0.0);
    }
    let (sv, vt) = full_svd(m);
    let tol = cutoff(&sv, rel);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let mut cols = Vec::new();
    let mut kept_min = f64::INFINITY;
    let mut dropped_max: f64 = 0.0;
    for k in 0..n {
        let s = sv[k];
        if smax == 0.0 || s <= tol {
            cols.push(vt.row(k).transpose());
            dropped_max = dropped_max.max(s);
        } else {
            kept_min = kept_min.min(s);
        }
    }
    let basis = if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    (basis, kept_min, dropped_max)
}

pub fn nullspace(m: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    nullspace_with_gap(m, rel).0
}

/// Orthonormal basis of the column span of `m`.
pub fn column_basis(m: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested u");
    let tol = cutoff(&svd.singular_values, rel);
    let cols: Vec<_> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > tol)
        .map(|k| u.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Euclidean orthogonal projector onto the column span of an orthonormal basis.
pub fn projector(basis: &DMatrix<f64>) -> DMatrix<f64> {
    basis * basis.transpose()
}

/// Relative distance of `v` from the span of the orthonormal columns `basis`:
/// `|v - P v| / max(1, |v|)`.
pub fn span_residual(basis: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let proj = if basis.ncols() == 0 {
        DVector::zeros(v.len())
    } else {
        basis * (basis.transpose() * v)
    };
    (v - proj).norm() / v.norm().max(1.0)
}

/// Largest span residual of either orthonormal basis against the other; zero
/// iff the spans coincide. Differing dimensions give 1.
pub fn span_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    let one = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
        x.column_iter()
            .map(|c| span_residual(y, &c.into_owned()))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

/// Numbers of negative, positive and (numerically) zero eigenvalues of a
/// symmetric matrix. Eigenvalues with `|λ| <= tol * max|λ|` count as zero.
pub fn inertia(m: &DMatrix<f64>, tol: f64) -> (usize, usize, usize) {
    let eig = m.clone().symmetric_eigenvalues();
    let scale = eig.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut out = (0, 0, 0);
    for &l in eig.iter() {
        if l.abs() <= tol * scale.max(f64::MIN_POSITIVE) {
            out.2 += 1;
        } else if l < 0.0 {
            out.0 += 1;
        } else {
            out.1 += 1;
        }
    }
    out
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(rows: &mut [Vec<BigRational>]) -> Vec<usize> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..ncols {
                    let delta = &f * &rows[r][j];
                    rows[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rational_rank(rows: &[Vec<BigRational>]) -> usize {
    let mut work = rows.to_vec();
    rref(&mut work).len()
}

/// Exact kernel basis of a rational matrix given by rows with `ncols` columns.
pub fn rational_nullspace(rows: &[Vec<BigRational>], ncols: usize) -> Vec<Vec<BigRational>> {
    let mut work = rows.to_vec();
    let pivots = rref(&mut work);
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![BigRational::zero(); ncols];
        v[free] = BigRational::from_integer(1.into());
        for (r, &p) in pivots.iter().enumerate() {
            v[p] = -work[r][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Largest absolute entry of a rational vector (for normalisation checks).
pub fn rational_max_abs(v: &[BigRational]) -> BigRational {
    v.iter()
        .map(|x| x.abs())
        .max()
        .unwrap_or_else(BigRational::zero)
}
