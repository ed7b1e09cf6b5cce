//! Closed-form density factors of the spectral, singular-value and Cholesky
//! measure factorizations, and of the Moore–Penrose inverse.
//!
//! Every factor is accumulated as a sum of logarithms, so spectra spanning
//! `1e-150..1e150` neither overflow nor underflow. The power-of-two
//! normalisation coming from the column-sign convention is carried
//! separately in [`JacobianFactor::pow2`] and never folded into `log_abs`.

use serde::{Deserialize, Serialize};

use crate::decomp::CholeskyParts;
use crate::error::{Error, Result};
use crate::spectra::{MatrixClass, Spectrum};

/// `sign · 2^pow2 · exp(log_abs)`, or exactly zero when `degenerate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianFactor {
    pub log_abs: f64,
    pub sign: i8,
    pub pow2: i32,
    /// A tied pair annihilated the product; the measure vanishes.
    pub degenerate: bool,
}

impl JacobianFactor {
    pub const ONE: JacobianFactor = JacobianFactor {
        log_abs: 0.0,
        sign: 1,
        pow2: 0,
        degenerate: false,
    };

    fn zero(pow2: i32) -> Self {
        Self {
            log_abs: f64::NEG_INFINITY,
            sign: 1,
            pow2,
            degenerate: true,
        }
    }

    pub fn value(&self) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        f64::from(self.sign) * 2f64.powi(self.pow2) * self.log_abs.exp()
    }

    /// The eigenvalue-product part without the `2^pow2` normalisation.
    pub fn product_value(&self) -> f64 {
        if self.degenerate {
            0.0
        } else {
            f64::from(self.sign) * self.log_abs.exp()
        }
    }

    pub fn compose(&self, other: &JacobianFactor) -> JacobianFactor {
        if self.degenerate || other.degenerate {
            return Self::zero(self.pow2 + other.pow2);
        }
        JacobianFactor {
            log_abs: self.log_abs + other.log_abs,
            sign: self.sign * other.sign,
            pow2: self.pow2 + other.pow2,
            degenerate: false,
        }
    }
}

/// Accumulates `Σ log` terms, switching to the degenerate state on a zero.
struct LogProduct {
    log_abs: f64,
    degenerate: bool,
}

impl LogProduct {
    fn new() -> Self {
        Self {
            log_abs: 0.0,
            degenerate: false,
        }
    }

    fn power(&mut self, x: f64, exponent: i64) {
        self.log_abs += exponent as f64 * x.ln();
    }

    fn factor(&mut self, x: f64) {
        if x == 0.0 {
            self.degenerate = true;
        } else {
            self.log_abs += x.abs().ln();
        }
    }

    fn finish(self, pow2: i32) -> JacobianFactor {
        if self.degenerate {
            JacobianFactor::zero(pow2)
        } else {
            JacobianFactor {
                log_abs: self.log_abs,
                sign: 1,
                pow2,
                degenerate: false,
            }
        }
    }
}

fn check_positive(values: &[f64], what: &str) -> Result<()> {
    match values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        Some(v) => Err(Error::domain(format!(
            "{what} must be finite and positive, got {v}"
        ))),
        None => Ok(()),
    }
}

/// Positive and non-increasing; ties are allowed and annihilate the measure.
fn check_ordered(values: &[f64], what: &str) -> Result<()> {
    check_positive(values, what)?;
    match values.windows(2).find(|w| w[0] < w[1]) {
        Some(w) => Err(Error::domain(format!(
            "{what} must be descending, found {} < {}",
            w[0], w[1]
        ))),
        None => Ok(()),
    }
}

fn count_i32(n: usize) -> i32 {
    i32::try_from(n).expect("dimension fits in i32")
}

/// Shared core of every spectral-decomposition measure:
/// `∏λ^{m−q} ∏δ^{m−q} ∏_{i<j}(λ_i−λ_j) ∏_{i<j}(δ_i−δ_j) ∏_{i,j}(λ_i+δ_j)`
/// with `pow2 = −q`.
fn sd_measure(lambda: &[f64], delta: &[f64], m: usize) -> Result<JacobianFactor> {
    check_ordered(lambda, "positive eigenvalues")?;
    check_ordered(delta, "negative eigenvalue magnitudes")?;
    let q = lambda.len() + delta.len();
    if q > m {
        return Err(Error::domain(format!("rank {q} exceeds dimension {m}")));
    }
    let corank = (m - q) as i64;
    let mut p = LogProduct::new();
    for &x in lambda.iter().chain(delta) {
        p.power(x, corank);
    }
    for list in [lambda, delta] {
        for (i, &a) in list.iter().enumerate() {
            for &b in &list[i + 1..] {
                p.factor(a - b);
            }
        }
    }
    for &l in lambda {
        for &d in delta {
            p.factor(l + d);
        }
    }
    Ok(p.finish(-count_i32(q)))
}

/// Full-rank positive definite SD: `2^{-m} ∏_{i<j}(D_i − D_j)`.
pub fn jac_sd_posdef_full(d: &[f64]) -> Result<JacobianFactor> {
    sd_measure(d, &[], d.len())
}

/// Rank-`q` positive semidefinite SD: `2^{-q} ∏D_i^{m−q} ∏_{i<j}(D_i − D_j)`.
pub fn jac_sd_semidef(d: &[f64], m: usize) -> Result<JacobianFactor> {
    sd_measure(d, &[], m)
}

/// Nonsingular indefinite SD with `m₁` positive and `m₂` negative eigenvalues.
pub fn jac_sd_indef_full(lambda: &[f64], delta: &[f64]) -> Result<JacobianFactor> {
    sd_measure(lambda, delta, lambda.len() + delta.len())
}

/// Singular indefinite SD of rank `q = q₁ + q₂` in dimension `m`.
pub fn jac_sd_indef_singular(lambda: &[f64], delta: &[f64], m: usize) -> Result<JacobianFactor> {
    sd_measure(lambda, delta, m)
}

/// SD measure evaluated on a spectrum with every cluster expanded to its
/// multiplicity. Repeated eigenvalues make this vanish.
pub fn jac_sd_expanded(spectrum: &Spectrum, m: usize) -> Result<JacobianFactor> {
    sd_measure(
        &spectrum.positive_clusters().expanded(),
        &spectrum.negative_clusters().expanded(),
        m,
    )
}

/// Cholesky: `2^m ∏ t_ii^{m+1−i}`.
pub fn jac_cholesky(t: &CholeskyParts) -> Result<JacobianFactor> {
    let diag = t.diagonal();
    check_positive(&diag, "Cholesky diagonal")?;
    let m = diag.len();
    let mut p = LogProduct::new();
    for (i, &tii) in diag.iter().enumerate() {
        p.power(tii, (m - i) as i64);
    }
    Ok(p.finish(count_i32(m)))
}

/// Rank-`k` SVD measure of an `N×m` matrix:
/// `2^{-k} ∏σ_i^{N+m−2k} ∏_{i<j}(σ_i² − σ_j²)`.
pub fn jac_svd_measure(sigma: &[f64], n: usize, m: usize) -> Result<JacobianFactor> {
    check_ordered(sigma, "singular values")?;
    let k = sigma.len();
    if k > n.min(m) {
        return Err(Error::domain(format!("rank {k} exceeds min({n}, {m})")));
    }
    let mut p = LogProduct::new();
    for &s in sigma {
        p.power(s, (n + m) as i64 - 2 * k as i64);
    }
    for (i, &a) in sigma.iter().enumerate() {
        for &b in &sigma[i + 1..] {
            p.factor(a - b);
            p.factor(a + b);
        }
    }
    Ok(p.finish(-count_i32(k)))
}

fn power_factor(values: &[f64], exponent: i64) -> JacobianFactor {
    let mut p = LogProduct::new();
    for &v in values {
        p.power(v, exponent);
    }
    p.finish(0)
}

/// Exponent of `σ_i` in the Jacobian of `Y = X⁺`: `−2(N + m − k)`.
pub fn pinv_general_exponent(n: usize, m: usize, k: usize) -> i64 {
    -2 * (n + m - k) as i64
}

/// Exponent of `|λ_i|` in the Jacobian of `W = V⁺`: `−(2m − β + 1)`.
pub fn pinv_symmetric_exponent(m: usize, beta: usize) -> i64 {
    -(2 * m as i64 - beta as i64 + 1)
}

/// `Y = X⁺` for rank-`k` `N×m` `X`: `∏σ_i^{−2(N+m−k)}`.
pub fn jac_pinv_general(sigma: &[f64], n: usize, m: usize) -> Result<JacobianFactor> {
    check_positive(sigma, "singular values")?;
    let k = sigma.len();
    if k > n.min(m) {
        return Err(Error::domain(format!("rank {k} exceeds min({n}, {m})")));
    }
    Ok(power_factor(sigma, pinv_general_exponent(n, m, k)))
}

/// `W = V⁺` for symmetric `V` with `β` nonzero eigenvalue magnitudes:
/// `∏|λ_i|^{−(2m−β+1)}`.
pub fn jac_pinv_symmetric(lambda_abs: &[f64], m: usize) -> Result<JacobianFactor> {
    check_positive(lambda_abs, "eigenvalue magnitudes")?;
    let beta = lambda_abs.len();
    if beta > m {
        return Err(Error::domain(format!("rank {beta} exceeds dimension {m}")));
    }
    Ok(power_factor(lambda_abs, pinv_symmetric_exponent(m, beta)))
}

/// Both readings of the Jacobian of `W = V⁺` for indefinite `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinvIndef {
    /// Exponents as published: `λ^{−2(m−α₁/2−α₂+1)}`, `δ^{−2(m−(α−1)/2)}`.
    pub paper: JacobianFactor,
    /// Composition-derived: `−(2m−α+1)` on every eigenvalue magnitude.
    pub oracle: JacobianFactor,
    pub paper_lambda_exponent: i64,
    pub paper_delta_exponent: i64,
    pub oracle_exponent: i64,
    /// The two λ-exponents differ (happens iff `α₁ > 0` and `α₂ ∉ {0, 1}`).
    pub discrepancy: bool,
}

pub fn jac_pinv_indef(lambda: &[f64], delta: &[f64], m: usize) -> Result<PinvIndef> {
    check_positive(lambda, "positive eigenvalues")?;
    check_positive(delta, "negative eigenvalue magnitudes")?;
    let (a1, a2) = (lambda.len() as i64, delta.len() as i64);
    let alpha = a1 + a2;
    let mi = m as i64;
    if alpha > mi {
        return Err(Error::domain(format!("rank {alpha} exceeds dimension {m}")));
    }
    let oracle_exponent = pinv_symmetric_exponent(m, alpha as usize);
    if a1 == 0 || a2 == 0 {
        let all: Vec<f64> = lambda.iter().chain(delta).copied().collect();
        let f = jac_pinv_symmetric(&all, m)?;
        return Ok(PinvIndef {
            paper: f,
            oracle: f,
            paper_lambda_exponent: oracle_exponent,
            paper_delta_exponent: oracle_exponent,
            oracle_exponent,
            discrepancy: false,
        });
    }
    // −2(m − α₁/2 − α₂ + 1) and −2(m − (α − 1)/2), cleared of halves.
    let paper_lambda_exponent = -2 * mi + a1 + 2 * a2 - 2;
    let paper_delta_exponent = -2 * mi + alpha - 1;
    let paper = power_factor(lambda, paper_lambda_exponent)
        .compose(&power_factor(delta, paper_delta_exponent));
    let oracle =
        power_factor(lambda, oracle_exponent).compose(&power_factor(delta, oracle_exponent));
    Ok(PinvIndef {
        paper,
        oracle,
        paper_lambda_exponent,
        paper_delta_exponent,
        oracle_exponent,
        discrepancy: paper_lambda_exponent != oracle_exponent
            || paper_delta_exponent != oracle_exponent,
    })
}

/// Which measure or transformation [`jacobian_for`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    SdMeasure,
    SvdMeasure,
    Pinv,
}

/// Result of [`jacobian_for`]. `composition` is only populated for the
/// pseudoinverse of an indefinite matrix, where the published exponents and
/// the composition-derived ones can disagree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub factor: JacobianFactor,
    pub composition: Option<JacobianFactor>,
    pub discrepancy: bool,
    /// Number of distinct nonzero values the formula was evaluated on.
    pub effective_count: usize,
}

impl Evaluation {
    fn plain(factor: JacobianFactor, effective_count: usize) -> Self {
        Self {
            factor,
            composition: None,
            discrepancy: false,
            effective_count,
        }
    }
}

/// Dispatches a classified matrix to its formula.
///
/// Under multiplicity the formula is evaluated on the distinct values only,
/// with the multiplicity class treated as the rank-`l` semidefinite (or
/// singular indefinite) class of the same dimension.
pub fn jacobian_for(
    class: &MatrixClass,
    spectrum: &Spectrum,
    transform: Transform,
) -> Result<Evaluation> {
    use MatrixClass::*;
    let lam = spectrum.positives.as_slice();
    let del = spectrum.negative_magnitudes.as_slice();
    let distinct = lam.len() + del.len();
    let unsupported = || {
        Err(Error::Unsupported(format!(
            "{transform:?} is not defined for class {}",
            class.tag()
        )))
    };
    match (transform, *class) {
        (Transform::SdMeasure, PosDef { .. }) => {
            Ok(Evaluation::plain(jac_sd_posdef_full(lam)?, distinct))
        }
        (Transform::SdMeasure, NegDef { .. }) => {
            Ok(Evaluation::plain(jac_sd_posdef_full(del)?, distinct))
        }
        (
            Transform::SdMeasure,
            PosDefMult { m, .. } | SemiDef { m, .. } | SemiDefMult { m, .. },
        ) => Ok(Evaluation::plain(jac_sd_semidef(lam, m)?, distinct)),
        (
            Transform::SdMeasure,
            NegDefMult { m, .. } | NegSemiDef { m, .. } | NegSemiDefMult { m, .. },
        ) => Ok(Evaluation::plain(jac_sd_semidef(del, m)?, distinct)),
        (Transform::SdMeasure, Indef { .. }) => {
            Ok(Evaluation::plain(jac_sd_indef_full(lam, del)?, distinct))
        }
        (
            Transform::SdMeasure,
            IndefMult { m, .. } | SemiIndef { m, .. } | SemiIndefMult { m, .. },
        ) => Ok(Evaluation::plain(
            jac_sd_indef_singular(lam, del, m)?,
            distinct,
        )),
        (Transform::SvdMeasure, Rect { n, m, .. } | RectMult { n, m, .. }) => {
            Ok(Evaluation::plain(jac_svd_measure(lam, n, m)?, distinct))
        }
        (Transform::Pinv, Rect { n, m, .. } | RectMult { n, m, .. }) => {
            Ok(Evaluation::plain(jac_pinv_general(lam, n, m)?, distinct))
        }
        (
            Transform::Pinv,
            PosDef { m }
            | PosDefMult { m, .. }
            | SemiDef { m, .. }
            | SemiDefMult { m, .. }
            | NegDef { m }
            | NegDefMult { m, .. }
            | NegSemiDef { m, .. }
            | NegSemiDefMult { m, .. },
        ) => {
            let mags: Vec<f64> = lam.iter().chain(del).copied().collect();
            Ok(Evaluation::plain(jac_pinv_symmetric(&mags, m)?, distinct))
        }
        (
            Transform::Pinv,
            Indef { m, .. } | IndefMult { m, .. } | SemiIndef { m, .. } | SemiIndefMult { m, .. },
        ) => {
            let r = jac_pinv_indef(lam, del, m)?;
            Ok(Evaluation {
                factor: r.paper,
                composition: Some(r.oracle),
                discrepancy: r.discrepancy,
                effective_count: distinct,
            })
        }
        _ => unsupported(),
    }
}
