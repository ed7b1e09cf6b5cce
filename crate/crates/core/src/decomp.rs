//! Nonsingular parts of the spectral decomposition, SVD and Cholesky
//! factorization, and the Moore–Penrose inverse built from them.
//!
//! Column signs are fixed so that the first significant entry of every
//! column of `H₁` is nonnegative, which makes `(H₁, D) ↦ H₁ D H₁′` one to
//! one on simple spectra.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{symmetrized, TolerancePolicy};

/// Entries below this fraction of the column norm are skipped when picking
/// the entry whose sign is normalised.
const SIGN_PIVOT_REL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralParts {
    /// `m×r` with orthonormal columns.
    pub h1: DMatrix<f64>,
    /// Positives descending, then negatives by descending magnitude.
    pub d: Vec<f64>,
    pub m: usize,
}

impl SpectralParts {
    pub fn rank(&self) -> usize {
        self.d.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_row_slice(&self.d));
        &self.h1 * d * self.h1.transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdParts {
    /// `N×r` with orthonormal columns.
    pub h1: DMatrix<f64>,
    /// Strictly positive, descending.
    pub sigma: Vec<f64>,
    /// `m×r` with orthonormal columns.
    pub p1: DMatrix<f64>,
}

impl SvdParts {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let s = DMatrix::from_diagonal(&DVector::from_row_slice(&self.sigma));
        &self.h1 * s * self.p1.transpose()
    }
}

/// Upper-triangular `T` with positive diagonal and `A = T′T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CholeskyParts {
    pub t: DMatrix<f64>,
}

impl CholeskyParts {
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.t.diagonal().iter().copied().collect()
    }
}

/// Flips the column so that its first significant entry is nonnegative.
/// Returns whether a flip happened.
fn fix_column_sign(col: &mut [f64]) -> bool {
    let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
    let pivot = col.iter().find(|x| x.abs() > SIGN_PIVOT_REL * norm);
    match pivot {
        Some(&p) if p < 0.0 => {
            col.iter_mut().for_each(|x| *x = -*x);
            true
        }
        _ => false,
    }
}

/// Modified Gram–Schmidt, in place.
fn orthonormalize(h: &mut DMatrix<f64>) {
    for j in 0..h.ncols() {
        for i in 0..j {
            let proj = h.column(i).dot(&h.column(j));
            let ci = h.column(i).clone_owned();
            h.column_mut(j).axpy(-proj, &ci, 1.0);
        }
        let n = h.column(j).norm();
        if n > 0.0 {
            h.column_mut(j).unscale_mut(n);
        }
    }
}

/// `A = H₁ D H₁′` keeping only eigenvalues above the rank threshold.
///
/// Within a cluster of repeated eigenvalues the eigenbasis is whatever the
/// solver returns; only reconstruction is meaningful there.
pub fn spectral_nonsingular(a: &DMatrix<f64>, policy: &TolerancePolicy) -> Result<SpectralParts> {
    let a = symmetrized(a)?;
    let m = a.nrows();
    let eig = a.symmetric_eigen();
    let scale = eig.eigenvalues.amax();
    let cut = policy.rank_tol * scale;

    let mut pos: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > cut).collect();
    let mut neg: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] < -cut).collect();
    pos.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    neg.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let order: Vec<usize> = pos.into_iter().chain(neg).collect();

    let mut h1 = DMatrix::zeros(m, order.len());
    for (c, &i) in order.iter().enumerate() {
        h1.set_column(c, &eig.eigenvectors.column(i));
    }
    orthonormalize(&mut h1);
    for mut col in h1.column_iter_mut() {
        fix_column_sign(col.as_mut_slice());
    }
    let d = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    Ok(SpectralParts { h1, d, m })
}

/// All `min(N, m)` singular values of `X`, descending, with unit left and
/// right vectors in matching columns.
///
/// Read off the symmetric eigendecomposition of `[[0, X], [X′, 0]]`, whose
/// eigenpairs are `(±σ, [u; ±v])`. Within a repeated singular value any
/// orthonormal eigenbasis yields consistent `(u, v)` pairs, which a direct
/// bidiagonal SVD does not reliably deliver.
pub(crate) fn singular_triplets(x: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = x.shape();
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, n), (n, m)).copy_from(x);
    aug.view_mut((n, 0), (m, n)).copy_from(&x.transpose());
    let eig = aug.symmetric_eigen();
    let mut order: Vec<usize> = (0..n + m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    order.truncate(n.min(m));

    let mut u = DMatrix::zeros(n, order.len());
    let mut v = DMatrix::zeros(m, order.len());
    for (c, &i) in order.iter().enumerate() {
        let w = eig.eigenvectors.column(i);
        u.set_column(c, &w.rows(0, n).normalize());
        v.set_column(c, &w.rows(n, m).normalize());
    }
    let sigma = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    (sigma, u, v)
}

/// `X = H₁ diag(σ) P₁′` keeping singular values above the rank threshold.
pub fn svd_nonsingular(x: &DMatrix<f64>, policy: &TolerancePolicy) -> Result<SvdParts> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::input("matrix has non-finite entries"));
    }
    let (sv, u, v) = singular_triplets(x);
    let cut = policy.rank_tol * sv.first().copied().unwrap_or(0.0);
    let r = sv.iter().take_while(|&&s| s > cut).count();
    let mut h1 = u.columns(0, r).into_owned();
    let mut p1 = v.columns(0, r).into_owned();
    for c in 0..r {
        if fix_column_sign(h1.column_mut(c).as_mut_slice()) {
            p1.column_mut(c).neg_mut();
        }
    }
    Ok(SvdParts {
        h1,
        sigma: sv[..r].to_vec(),
        p1,
    })
}

/// `A = T′T` with `T` upper triangular.
///
/// Fails with a domain error naming the first leading principal minor that
/// is not positive.
pub fn cholesky(a: &DMatrix<f64>, policy: &TolerancePolicy) -> Result<CholeskyParts> {
    let a = symmetrized(a)?;
    let m = a.nrows();
    let scale = a.diagonal().amax();
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut minor = 1.0;
    for i in 0..m {
        let pivot = a[(i, i)] - (0..i).map(|k| t[(k, i)] * t[(k, i)]).sum::<f64>();
        minor *= pivot;
        if pivot.is_nan() || pivot <= policy.rank_tol * scale {
            return Err(Error::domain(format!(
                "not positive definite: leading minor of order {} is {:e} (must be > 0)",
                i + 1,
                minor
            )));
        }
        let tii = pivot.sqrt();
        t[(i, i)] = tii;
        for j in i + 1..m {
            let s = a[(i, j)] - (0..i).map(|k| t[(k, i)] * t[(k, j)]).sum::<f64>();
            t[(i, j)] = s / tii;
        }
    }
    Ok(CholeskyParts { t })
}

/// `X⁺ = P₁ diag(1/σ) H₁′`.
pub fn moore_penrose(x: &DMatrix<f64>, policy: &TolerancePolicy) -> Result<DMatrix<f64>> {
    let parts = svd_nonsingular(x, policy)?;
    let inv = DMatrix::from_diagonal(&DVector::from_iterator(
        parts.rank(),
        parts.sigma.iter().map(|s| 1.0 / s),
    ));
    Ok(&parts.p1 * inv * parts.h1.transpose())
}
