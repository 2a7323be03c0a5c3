//! Dense numeric kernels shared across the crate: tolerance-aware rank and
//! kernel computation, minimum-norm solves, Hermitian eigendecompositions,
//! and Gauss-Hermite quadrature.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default relative singular-value cutoff for rank and kernel decisions.
/// Relative to the largest singular value, floored at unit scale so that
/// all-tiny matrices report rank zero instead of numerical noise.
pub const RANK_TOL: f64 = 1e-8;

/// Absolute cutoff derived from a relative tolerance and the largest singular value.
pub fn svd_cutoff(max_sv: f64, rel_tol: f64) -> f64 {
    rel_tol * max_sv.max(1.0)
}

/// Flip column signs so the largest-magnitude entry of each column is positive.
/// Removes the sign ambiguity of SVD-derived bases; ties break to the lowest row.
pub fn canonicalize_column_signs(m: &mut DMatrix<f64>) {
    for j in 0..m.ncols() {
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for i in 0..m.nrows() {
            let a = m[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if m[(best, j)] < 0.0 {
            for i in 0..m.nrows() {
                m[(i, j)] = -m[(i, j)];
            }
        }
    }
}

fn thin_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let vt = svd.v_t.expect("svd requested v_t");
    (u, svd.singular_values, vt)
}

/// Numerical rank with relative tolerance (see [`svd_cutoff`]).
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let cutoff = svd_cutoff(sv.max(), rel_tol);
    sv.iter().filter(|s| **s > cutoff).count()
}

/// Orthonormal basis of the right null space, canonical column signs.
/// Returns an `ncols x k` matrix (possibly zero columns).
pub fn kernel_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // pad wide matrices with zero rows so the thin SVD exposes all of V
    let work = if m.nrows() < n {
        let mut w = DMatrix::zeros(n, n);
        w.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        w
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let vt = svd.v_t.expect("svd requested v_t");
    let cutoff = svd_cutoff(svd.singular_values.max(), rel_tol);
    let r = svd.singular_values.iter().filter(|s| **s > cutoff).count();
    let mut basis = DMatrix::zeros(n, n - r);
    for (j, i) in (r..n).enumerate() {
        basis.set_column(j, &vt.row(i).transpose());
    }
    canonicalize_column_signs(&mut basis);
    basis
}

/// Orthonormal basis of the column space, canonical column signs.
pub fn column_space_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let nr = m.nrows();
    if nr == 0 || m.ncols() == 0 {
        return DMatrix::zeros(nr, 0);
    }
    let (u, sv, _) = thin_svd(m);
    let cutoff = svd_cutoff(sv.max(), rel_tol);
    let r = sv.iter().filter(|s| **s > cutoff).count();
    let mut basis = DMatrix::zeros(nr, r);
    for j in 0..r {
        basis.set_column(j, &u.column(j).into_owned());
    }
    canonicalize_column_signs(&mut basis);
    basis
}

/// Orthonormal basis of the Euclidean orthogonal complement of the span of
/// the (orthonormal) columns of `b`.
pub fn orthogonal_complement(b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    if b.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    kernel_basis(&b.transpose(), RANK_TOL)
}

/// Minimum-norm least-squares solution of `a x = rhs` via SVD pseudoinverse.
/// Returns the solution and the residual norm `|| a x - rhs ||`.
pub fn min_norm_solve(a: &DMatrix<f64>, rhs: &DVector<f64>, rel_tol: f64) -> (DVector<f64>, f64) {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return (DVector::zeros(n), rhs.norm());
    }
    let (u, sv, vt) = thin_svd(a);
    let cutoff = svd_cutoff(sv.max(), rel_tol);
    let mut x = DVector::zeros(n);
    for i in 0..sv.len() {
        if sv[i] > cutoff {
            let coeff = u.column(i).dot(rhs) / sv[i];
            x += coeff * vt.row(i).transpose();
        }
    }
    let residual = (a * &x - rhs).norm();
    (x, residual)
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Minimum eigenvalue of the Hermitian matrix `A + iC`, where `A` is symmetric
/// and `C` antisymmetric, via the real embedding [[A, -C], [C, A]] whose
/// spectrum equals that of `A + iC` with doubled multiplicities.
pub fn hermitian_min_eig(a: &DMatrix<f64>, c: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut emb = DMatrix::zeros(2 * n, 2 * n);
    emb.view_mut((0, 0), (n, n)).copy_from(a);
    emb.view_mut((n, n), (n, n)).copy_from(a);
    emb.view_mut((0, n), (n, n)).copy_from(&(-c));
    emb.view_mut((n, 0), (n, n)).copy_from(c);
    sym_eigenvalues(&emb)[0]
}

/// Eigendecomposition of a Hermitian complex matrix. Returns eigenvalues in
/// ascending order together with the matching orthonormal eigenvector columns.
pub fn eigh(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "eigh expects a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let fm = faer::Mat::from_fn(n, n, |i, j| faer::c64::new(m[(i, j)].re, m[(i, j)].im));
    let evd = fm
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Internal(format!("hermitian eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].re.total_cmp(&s[b].re));
    let vals: Vec<f64> = order.iter().map(|&i| s[i].re).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| {
        let src = order[j];
        Complex64::new(u[(i, src)].re, u[(i, src)].im)
    });
    Ok((vals, vecs))
}

/// In-place modified Gram-Schmidt on complex columns. Columns that collapse
/// below `drop_tol` are removed; returns the surviving orthonormal columns.
pub fn orthonormalize_complex(m: &DMatrix<Complex64>, drop_tol: f64) -> DMatrix<Complex64> {
    let n = m.nrows();
    let mut kept: Vec<DVector<Complex64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        for _ in 0..2 {
            for q in &kept {
                let c = q.dotc(&v);
                v -= q * c;
            }
        }
        let norm = v.norm();
        if norm > drop_tol {
            kept.push(v / Complex64::new(norm, 0.0));
        }
    }
    let mut out = DMatrix::zeros(n, kept.len());
    for (j, c) in kept.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Gauss-Hermite nodes and probability weights for the standard normal-like
/// weight `exp(-t^2)`: returns `(nodes, p)` with `p` renormalized so that the
/// weights sum to one exactly (Golub-Welsch on the Jacobi matrix).
pub fn gauss_hermite(q: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if q < 1 {
        return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
    }
    let mut j = DMatrix::zeros(q, q);
    for i in 1..q {
        let b = (i as f64 / 2.0).sqrt();
        j[(i - 1, i)] = b;
        j[(i, i - 1)] = b;
    }
    let eig = j.symmetric_eigen();
    let mut idx: Vec<usize> = (0..q).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let nodes: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut p: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let v0 = eig.eigenvectors[(0, i)];
            v0 * v0
        })
        .collect();
    let total: f64 = p.iter().sum();
    for w in p.iter_mut() {
        *w /= total;
    }
    Ok((nodes, p))
}

/// Draw a standard normal deviate (Box-Muller).
pub fn normal(rng: &mut impl rand::RngExt) -> f64 {
    let u1: f64 = loop {
        let u: f64 = rng.random();
        if u > 1e-300 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Largest absolute entry of a real matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}
