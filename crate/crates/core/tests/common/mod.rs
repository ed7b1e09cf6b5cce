#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use volform_core::integrator::haar_stiefel;

/// Magnitudes in `[0.1, 10]` whose pairwise relative gaps exceed `gap`.
pub fn separated(values: &[f64], gap: f64) -> bool {
    values.iter().enumerate().all(|(i, a)| {
        values[i + 1..]
            .iter()
            .all(|b| (a - b).abs() > gap * a.abs().max(b.abs()))
    })
}

pub fn magnitudes(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..10.0, len).prop_filter("well separated", |v| separated(v, 1e-2))
}

pub fn orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    haar_stiefel(&mut ChaCha8Rng::seed_from_u64(seed), n, n)
}

/// `Q diag(values) Q′` padded with zeros to dimension `m`.
pub fn symmetric_with(values: &[f64], m: usize, seed: u64) -> DMatrix<f64> {
    let mut d = values.to_vec();
    d.resize(m, 0.0);
    let q = orthogonal(m, seed);
    let a = &q * DMatrix::from_diagonal(&DVector::from_vec(d)) * q.transpose();
    (&a + a.transpose()) * 0.5
}

/// `U diag(sigma) V′` of shape `n×m`.
pub fn rect_with(sigma: &[f64], n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let u = haar_stiefel(&mut ChaCha8Rng::seed_from_u64(seed), n, sigma.len());
    let v = haar_stiefel(
        &mut ChaCha8Rng::seed_from_u64(seed ^ 0x9e37),
        m,
        sigma.len(),
    );
    u * DMatrix::from_diagonal(&DVector::from_row_slice(sigma)) * v.transpose()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
