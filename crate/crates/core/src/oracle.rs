//! Differential frames for the spectral and singular value decompositions,
//! and the verification of every closed-form factor against them.
//!
//! A frame writes `H′(dA)H` (resp. `H′(dX)P`) in terms of independent basis
//! 1-forms. The independent entries are then wedged column by column, and the
//! coefficient of the top form is the density of the factorized measure.
//! Frames cannot see the `2^{-k}` double-cover normalisation, so only the
//! eigenvalue-product part of a formula is compared here; the integrator
//! covers the constants.
//!
//! The Moore–Penrose Jacobians are checked by composition: substitute the
//! reciprocal spectrum into the measure of the image and divide.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{det_coefficient, wedge_all, FormBasis, OneForm};
use crate::formulas::{
    jac_pinv_general, jac_pinv_indef, jac_pinv_symmetric, jac_sd_indef_full, jac_sd_indef_singular,
    jac_sd_posdef_full, jac_sd_semidef, jac_svd_measure,
};
use crate::integrator::haar_stiefel;

/// Agreement required between the wedge and determinant evaluations.
pub const WEDGE_DET_TOL: f64 = 1e-10;
/// Tolerance for the composition checks of the pseudoinverse Jacobians.
pub const COMPOSITION_TOL: f64 = 1e-12;
/// Spectra are resampled while two same-sign values are closer than this.
pub const MIN_RELATIVE_GAP: f64 = 1e-3;
pub const SPECTRUM_RANGE: (f64, f64) = (0.1, 10.0);

/// Which decomposition a frame is built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FrameSpec {
    /// Spectral decomposition of an `m×m` symmetric matrix with nonzero
    /// signed eigenvalues `d` (`q = d.len() ≤ m`).
    Sd { m: usize, d: Vec<f64> },
    /// Rank-`k` SVD of an `N×m` matrix, `k = sigma.len()`.
    Svd { n: usize, m: usize, sigma: Vec<f64> },
}

impl FrameSpec {
    pub fn build(&self) -> Result<DifferentialFrame> {
        match self {
            FrameSpec::Sd { m, d } => sd_frame(*m, d),
            FrameSpec::Svd { n, m, sigma } => svd_frame(*n, *m, sigma),
        }
    }
}

/// Basis 1-forms and the independent entries of the rotated differential.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialFrame {
    pub basis: FormBasis,
    pub entry_forms: Vec<OneForm>,
}

impl DifferentialFrame {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn checked(self) -> Result<Self> {
        if self.entry_forms.len() != self.basis.len() {
            return Err(Error::Dimension {
                expected: self.basis.len(),
                found: self.entry_forms.len(),
            });
        }
        Ok(self)
    }
}

fn check_values(values: &[f64], what: &str) -> Result<()> {
    match values.iter().find(|v| !(v.is_finite() && **v != 0.0)) {
        Some(v) => Err(Error::domain(format!(
            "{what} must be finite and nonzero, got {v}"
        ))),
        None => Ok(()),
    }
}

/// Frame of `A = H₁ D H₁′` with `q` nonzero eigenvalues `d` in dimension `m`.
///
/// Rotating by a completion `H = [H₁ H₂]`,
/// `H′(dA)H = [[S D − D S + dD, (K D)′], [K D, 0]]` with `S = H₁′dH₁` skew and
/// `K = H₂′dH₁`. The independent entries are the lower triangle of the
/// top-left block and all of `K D`:
///
/// * `M_ii = dd(i)`
/// * `M_ij = (d_j − d_i)·s(j,i)` for `j < i ≤ q`
/// * `M_ij = d_j·k(i,j)` for `i > q`
///
/// Tied eigenvalues are accepted; the frame then has a zero entry.
pub fn sd_frame(m: usize, d: &[f64]) -> Result<DifferentialFrame> {
    check_values(d, "eigenvalues")?;
    let q = d.len();
    if q > m {
        return Err(Error::domain(format!("rank {q} exceeds dimension {m}")));
    }
    let mut basis = FormBasis::new();
    let mut s = vec![vec![0usize; q]; q];
    for (i, row) in s.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate().skip(i + 1) {
            *slot = basis.push(format!("s({},{})", i + 1, j + 1))?;
        }
    }
    let mut k = vec![vec![0usize; q]; m];
    for (i, row) in k.iter_mut().enumerate().skip(q) {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = basis.push(format!("k({},{})", i + 1, j + 1))?;
        }
    }
    let dd: Vec<usize> = (0..q)
        .map(|i| basis.push(format!("dd({})", i + 1)))
        .collect::<Result<_>>()?;

    let mut entry_forms = Vec::with_capacity(basis.len());
    for j in 0..q {
        entry_forms.push(OneForm::basis(dd[j], 1.0));
        for i in j + 1..q {
            entry_forms.push(OneForm::basis(s[j][i], d[j] - d[i]));
        }
        for row in k.iter().skip(q) {
            entry_forms.push(OneForm::basis(row[j], d[j]));
        }
    }
    DifferentialFrame { basis, entry_forms }.checked()
}

/// Frame of `X = H₁ Σ P₁′` for an `N×m` matrix of rank `k`.
///
/// `H′(dX)P = [[V Σ + dΣ − Σ W, Σ K_P′], [K_H Σ, 0]]` with `V = H₁′dH₁`,
/// `W = P₁′dP₁` skew, `K_H = H₂′dH₁` and `K_P = P₂′dP₁`. For `a < b` the
/// top-left block pairs up as `σ_a v(a,b) − σ_b w(a,b)` and
/// `σ_a w(a,b) − σ_b v(a,b)`.
pub fn svd_frame(n: usize, m: usize, sigma: &[f64]) -> Result<DifferentialFrame> {
    check_values(sigma, "singular values")?;
    if sigma.iter().any(|&s| s < 0.0) {
        return Err(Error::domain("singular values must be positive"));
    }
    let k = sigma.len();
    if k > n.min(m) {
        return Err(Error::domain(format!("rank {k} exceeds min({n}, {m})")));
    }
    let mut basis = FormBasis::new();
    let mut v = vec![vec![0usize; k]; k];
    let mut w = vec![vec![0usize; k]; k];
    for (a, row) in v.iter_mut().enumerate() {
        for (b, slot) in row.iter_mut().enumerate().skip(a + 1) {
            *slot = basis.push(format!("v({},{})", a + 1, b + 1))?;
        }
    }
    for (a, row) in w.iter_mut().enumerate() {
        for (b, slot) in row.iter_mut().enumerate().skip(a + 1) {
            *slot = basis.push(format!("w({},{})", a + 1, b + 1))?;
        }
    }
    let mut kh = vec![vec![0usize; k]; n];
    for (i, row) in kh.iter_mut().enumerate().skip(k) {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = basis.push(format!("kH({},{})", i + 1, j + 1))?;
        }
    }
    let mut kp = vec![vec![0usize; k]; m];
    for (i, row) in kp.iter_mut().enumerate().skip(k) {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = basis.push(format!("kP({},{})", i + 1, j + 1))?;
        }
    }
    let ds: Vec<usize> = (0..k)
        .map(|i| basis.push(format!("dsigma({})", i + 1)))
        .collect::<Result<_>>()?;

    let expected = n * k + m * k - k * k;
    if basis.len() != expected {
        return Err(Error::Dimension {
            expected,
            found: basis.len(),
        });
    }

    let mut entry_forms = Vec::with_capacity(expected);
    for col in 0..m {
        for row in 0..n {
            let form = match (row < k, col < k) {
                (true, true) if row == col => OneForm::basis(ds[row], 1.0),
                (true, true) if row > col => {
                    let (a, b) = (col, row);
                    OneForm::basis(v[a][b], sigma[a]).with(w[a][b], -sigma[b])
                }
                (true, true) => {
                    let (a, b) = (row, col);
                    OneForm::basis(w[a][b], sigma[a]).with(v[a][b], -sigma[b])
                }
                (false, true) => OneForm::basis(kh[row][col], sigma[col]),
                (true, false) => OneForm::basis(kp[col][row], sigma[row]),
                (false, false) => continue,
            };
            entry_forms.push(form);
        }
    }
    DifferentialFrame { basis, entry_forms }.checked()
}

/// `|f₁ ∧ … ∧ f_n|` of the frame entries, cross-checked against the
/// determinant of their coefficient matrix.
pub fn oracle_density(frame: &DifferentialFrame) -> Result<f64> {
    let n = frame.dim();
    let w = wedge_all(&frame.entry_forms, n)?;
    let d = det_coefficient(&frame.entry_forms, n)?;
    if (w - d).abs() > WEDGE_DET_TOL * w.abs().max(d.abs()) {
        return Err(Error::Consistency(format!(
            "wedge {w:e} and determinant {d:e} disagree"
        )));
    }
    Ok(w.abs())
}

/// Which pseudoinverse composition to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CompositionKind {
    /// `Y = X⁺` for `N×m` `X`; values are singular values.
    General { n: usize, m: usize },
    /// `W = V⁺` for definite or semidefinite `V`; signed eigenvalues.
    Symmetric { m: usize },
    /// `W = V⁺` for indefinite `V`; signed eigenvalues.
    Indefinite { m: usize },
}

fn check_distinct(values: &[f64]) -> Result<()> {
    for (i, a) in values.iter().enumerate() {
        if values[i + 1..].contains(a) {
            return Err(Error::domain(format!("tied value {a}")));
        }
    }
    Ok(())
}

/// `log[∏σ^{N+m−2k} ∏_{i<j}|σ_i² − σ_j²|]`.
fn log_svd_density(sigma: &[f64], n: usize, m: usize) -> f64 {
    let k = sigma.len();
    let power = (n + m) as f64 - 2.0 * k as f64;
    let mut acc: f64 = sigma.iter().map(|s| power * s.ln()).sum();
    for (i, a) in sigma.iter().enumerate() {
        for b in &sigma[i + 1..] {
            acc += (a * a - b * b).abs().ln();
        }
    }
    acc
}

/// `log[∏|e|^{m−β} ∏_{i<j}|e_i − e_j|]` over signed eigenvalues.
fn log_sd_density(e: &[f64], m: usize) -> f64 {
    let power = m as f64 - e.len() as f64;
    let mut acc: f64 = e.iter().map(|x| power * x.abs().ln()).sum();
    for (i, a) in e.iter().enumerate() {
        for b in &e[i + 1..] {
            acc += (a - b).abs().ln();
        }
    }
    acc
}

/// Jacobian of the pseudoinverse obtained by substituting the reciprocal
/// spectrum into the measure of the image:
/// `density(1/σ) / density(σ) · ∏|d(1/σ_i)/dσ_i|`.
pub fn composition_pinv_ratio(kind: CompositionKind, values: &[f64]) -> Result<f64> {
    check_values(values, "spectrum")?;
    check_distinct(values)?;
    let recip: Vec<f64> = values.iter().map(|x| 1.0 / x).collect();
    let chain: f64 = values.iter().map(|x| -2.0 * x.abs().ln()).sum();
    let log_ratio = match kind {
        CompositionKind::General { n, m } => {
            if values.iter().any(|&s| s < 0.0) {
                return Err(Error::domain("singular values must be positive"));
            }
            if values.len() > n.min(m) {
                return Err(Error::domain("rank exceeds min(N, m)"));
            }
            log_svd_density(&recip, n, m) - log_svd_density(values, n, m)
        }
        CompositionKind::Symmetric { m } | CompositionKind::Indefinite { m } => {
            if values.len() > m {
                return Err(Error::domain("rank exceeds dimension"));
            }
            log_sd_density(&recip, m) - log_sd_density(values, m)
        }
    };
    Ok((log_ratio + chain).exp())
}

/// Identifies the closed form being verified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TheoremId {
    #[serde(rename = "SD-full")]
    SdFull,
    Eq2,
    T1,
    T2,
    #[serde(rename = "T3-measure")]
    T3Measure,
    #[serde(rename = "T3-pinv")]
    PinvGeneral,
    #[serde(rename = "T4-pinv-symmetric")]
    PinvSymmetric,
    #[serde(rename = "T4-pinv-indefinite")]
    PinvIndef,
}

/// A theorem together with the dimensions it is verified at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case")]
pub enum Case {
    /// Full-rank positive definite spectral decomposition.
    SdFull {
        m: usize,
    },
    /// Rank-`q` positive semidefinite spectral decomposition.
    Eq2 {
        m: usize,
        q: usize,
    },
    /// Nonsingular indefinite, `m₁` positive and `m₂` negative eigenvalues.
    T1 {
        m1: usize,
        m2: usize,
    },
    /// Singular indefinite of rank `q₁ + q₂` in dimension `m`.
    T2 {
        m: usize,
        q1: usize,
        q2: usize,
    },
    /// Rank-`k` SVD measure of `N×m` matrices.
    T3 {
        n: usize,
        m: usize,
        k: usize,
    },
    PinvGeneral {
        n: usize,
        m: usize,
        k: usize,
    },
    PinvSymmetric {
        m: usize,
        beta: usize,
    },
    PinvIndef {
        m: usize,
        a1: usize,
        a2: usize,
    },
}

impl Case {
    pub fn theorem_id(&self) -> TheoremId {
        match self {
            Case::SdFull { .. } => TheoremId::SdFull,
            Case::Eq2 { .. } => TheoremId::Eq2,
            Case::T1 { .. } => TheoremId::T1,
            Case::T2 { .. } => TheoremId::T2,
            Case::T3 { .. } => TheoremId::T3Measure,
            Case::PinvGeneral { .. } => TheoremId::PinvGeneral,
            Case::PinvSymmetric { .. } => TheoremId::PinvSymmetric,
            Case::PinvIndef { .. } => TheoremId::PinvIndef,
        }
    }

    /// `(positive count, negative count)` of the sampled spectrum.
    fn signature(&self) -> (usize, usize) {
        match *self {
            Case::SdFull { m } => (m, 0),
            Case::Eq2 { q, .. } => (q, 0),
            Case::T1 { m1, m2 } => (m1, m2),
            Case::T2 { q1, q2, .. } => (q1, q2),
            Case::T3 { k, .. } | Case::PinvGeneral { k, .. } => (k, 0),
            Case::PinvSymmetric { beta, .. } => (beta, 0),
            Case::PinvIndef { a1, a2, .. } => (a1, a2),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Case::SdFull { m } => m >= 1,
            Case::Eq2 { m, q } => q >= 1 && q <= m,
            Case::T1 { m1, m2 } => m1 + m2 >= 1,
            Case::T2 { m, q1, q2 } => q1 + q2 >= 1 && q1 + q2 <= m,
            Case::T3 { n, m, k } | Case::PinvGeneral { n, m, k } => k >= 1 && k <= n.min(m),
            Case::PinvSymmetric { m, beta } => beta >= 1 && beta <= m,
            Case::PinvIndef { m, a1, a2 } => a1 + a2 >= 1 && a1 + a2 <= m,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("inconsistent dimensions {self:?}")))
        }
    }

    fn tolerance(&self, rel_tol: f64) -> f64 {
        match self {
            Case::PinvGeneral { .. } | Case::PinvSymmetric { .. } | Case::PinvIndef { .. } => {
                rel_tol.min(COMPOSITION_TOL)
            }
            _ => rel_tol,
        }
    }
}

/// Positive values and negative-eigenvalue magnitudes, both descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSpectrum {
    pub positives: Vec<f64>,
    pub negatives: Vec<f64>,
}

impl SampledSpectrum {
    /// Positives first, then `−δ_j`.
    pub fn signed(&self) -> Vec<f64> {
        self.positives
            .iter()
            .copied()
            .chain(self.negatives.iter().map(|d| -d))
            .collect()
    }
}

fn min_relative_gap(sorted_desc: &[f64]) -> f64 {
    sorted_desc
        .windows(2)
        .map(|w| (w[0] - w[1]) / w[0])
        .fold(f64::INFINITY, f64::min)
}

/// `count` log-uniform magnitudes, descending, resampled until no two are
/// closer than [`MIN_RELATIVE_GAP`].
pub fn sample_magnitudes<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    let (lo, hi) = (SPECTRUM_RANGE.0.ln(), SPECTRUM_RANGE.1.ln());
    loop {
        let mut v: Vec<f64> = (0..count).map(|_| rng.random_range(lo..hi).exp()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        if min_relative_gap(&v) >= MIN_RELATIVE_GAP {
            return v;
        }
    }
}

pub fn sample_spectrum<R: Rng + ?Sized>(rng: &mut R, case: &Case) -> SampledSpectrum {
    let (p, n) = case.signature();
    SampledSpectrum {
        positives: sample_magnitudes(rng, p),
        negatives: sample_magnitudes(rng, n),
    }
}

/// RNG for one trial: the run seed selects the key, the trial index the
/// stream.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Signed values: positives, then negative eigenvalues.
    pub spectrum: Vec<f64>,
    pub oracle_value: f64,
    pub formula_value: f64,
    /// Published value where it differs in form from `formula_value`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_value: Option<f64>,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theorem_id: TheoremId,
    pub dims: Case,
    pub trials: usize,
    pub seed: u64,
    pub rel_tol: f64,
    /// Number of basis 1-forms of the frame, when a frame is involved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis_dim: Option<usize>,
    pub per_trial: Vec<TrialRecord>,
    pub max_rel_err: f64,
    pub pass: bool,
    /// Known, explained disagreements with the published formula.
    pub discrepancies: Vec<String>,
    /// Failures that are not explained (internal errors, flag mismatches).
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

/// Expected frame dimension: `q(q+1)/2 + (m−q)q`, resp. `Nk + mk − k²`.
pub fn expected_frame_dim(case: &Case) -> Option<usize> {
    match *case {
        Case::SdFull { m } => Some(m * (m + 1) / 2),
        Case::Eq2 { m, q } => Some(q * (q + 1) / 2 + (m - q) * q),
        Case::T1 { m1, m2 } => {
            let m = m1 + m2;
            Some(m * (m + 1) / 2)
        }
        Case::T2 { m, q1, q2 } => {
            let q = q1 + q2;
            Some(q * (q + 1) / 2 + (m - q) * q)
        }
        Case::T3 { n, m, k } => Some(n * k + m * k - k * k),
        _ => None,
    }
}

/// Builds the frame a case is verified against.
pub fn frame_for(case: &Case, s: &SampledSpectrum) -> Result<Option<DifferentialFrame>> {
    let frame = match *case {
        Case::SdFull { m } | Case::Eq2 { m, .. } | Case::T2 { m, .. } => sd_frame(m, &s.signed())?,
        Case::T1 { m1, m2 } => sd_frame(m1 + m2, &s.signed())?,
        Case::T3 { n, m, .. } => svd_frame(n, m, &s.positives)?,
        _ => return Ok(None),
    };
    Ok(Some(frame))
}

/// Closed-form factor a case is verified against.
pub fn formula_for(case: &Case, s: &SampledSpectrum) -> Result<f64> {
    let (lam, del) = (&s.positives[..], &s.negatives[..]);
    let f = match *case {
        Case::SdFull { .. } => jac_sd_posdef_full(lam)?,
        Case::Eq2 { m, .. } => jac_sd_semidef(lam, m)?,
        Case::T1 { .. } => jac_sd_indef_full(lam, del)?,
        Case::T2 { m, .. } => jac_sd_indef_singular(lam, del, m)?,
        Case::T3 { n, m, .. } => jac_svd_measure(lam, n, m)?,
        Case::PinvGeneral { n, m, .. } => return Ok(jac_pinv_general(lam, n, m)?.value()),
        Case::PinvSymmetric { m, .. } => return Ok(jac_pinv_symmetric(lam, m)?.value()),
        Case::PinvIndef { m, .. } => return Ok(jac_pinv_indef(lam, del, m)?.oracle.value()),
    };
    // Frames see only the product part; the 2^{-k} is a global convention.
    Ok(f.product_value())
}

fn run_trial<R: Rng>(
    case: &Case,
    rng: &mut R,
    discrepancies: &mut Vec<String>,
    failures: &mut Vec<String>,
) -> Result<TrialRecord> {
    let s = sample_spectrum(rng, case);
    let signed = s.signed();
    if let Some(frame) = frame_for(case, &s)? {
        let oracle_value = oracle_density(&frame)?;
        let formula_value = formula_for(case, &s)?;
        return Ok(TrialRecord {
            spectrum: signed,
            oracle_value,
            formula_value,
            paper_value: None,
            rel_err: rel_err(formula_value, oracle_value),
        });
    }
    match *case {
        Case::PinvGeneral { n, m, .. } => {
            let oracle_value = composition_pinv_ratio(CompositionKind::General { n, m }, &signed)?;
            let formula_value = formula_for(case, &s)?;
            Ok(TrialRecord {
                spectrum: signed,
                oracle_value,
                formula_value,
                paper_value: None,
                rel_err: rel_err(formula_value, oracle_value),
            })
        }
        Case::PinvSymmetric { m, beta } => {
            // V or −V definite: flip the whole spectrum on a coin toss.
            let e: Vec<f64> = if rng.random::<bool>() {
                signed.iter().map(|x| -x).collect()
            } else {
                signed
            };
            let oracle_value = composition_pinv_ratio(CompositionKind::Symmetric { m }, &e)?;
            let formula_value = formula_for(case, &s)?;
            let mut err = rel_err(formula_value, oracle_value);
            if beta == m {
                // Classical inverse Jacobian |det V|^{−(m+1)} on an explicit V.
                let h = haar_stiefel(rng, m, m);
                let v = &h * DMatrix::from_diagonal(&DVector::from_row_slice(&e)) * h.transpose();
                let classical = v.determinant().abs().powi(-(m as i32 + 1));
                err = err.max(rel_err(formula_value, classical));
            }
            Ok(TrialRecord {
                spectrum: e,
                oracle_value,
                formula_value,
                paper_value: None,
                rel_err: err,
            })
        }
        Case::PinvIndef { m, a1, a2 } => {
            let r = jac_pinv_indef(&s.positives, &s.negatives, m)?;
            let oracle_value = composition_pinv_ratio(CompositionKind::Indefinite { m }, &signed)?;
            let formula_value = r.oracle.value();
            let paper_value = r.paper.value();
            let mut err = rel_err(formula_value, oracle_value);
            let expect_flag = a1 > 0 && a2 > 1;
            if r.discrepancy != expect_flag {
                failures.push(format!(
                    "discrepancy flag {} but expected {expect_flag}",
                    r.discrepancy
                ));
            }
            if r.discrepancy {
                // The published form must differ by exactly ∏λ^{Δ}.
                let shift = r.paper_lambda_exponent - r.oracle_exponent;
                let lam_prod: f64 = s.positives.iter().product();
                let explained = oracle_value * lam_prod.powi(shift as i32);
                err = err.max(rel_err(paper_value, explained));
                let msg = format!(
                    "lambda exponent: published {} vs composition {} (differs by prod(lambda)^{}); \
                     composition supports -(2m-alpha+1) = {}",
                    r.paper_lambda_exponent, r.oracle_exponent, shift, r.oracle_exponent
                );
                if !discrepancies.contains(&msg) {
                    discrepancies.push(msg);
                }
            } else {
                err = err.max(rel_err(paper_value, oracle_value));
            }
            Ok(TrialRecord {
                spectrum: signed,
                oracle_value,
                formula_value,
                paper_value: Some(paper_value),
                rel_err: err,
            })
        }
        _ => unreachable!("frame cases handled above"),
    }
}

/// Verifies one case over `trials` seeded random spectra.
pub fn verify_theorem(
    case: Case,
    trials: usize,
    seed: u64,
    rel_tol: f64,
) -> Result<VerificationReport> {
    case.validate()?;
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let tol = case.tolerance(rel_tol);
    let mut per_trial = Vec::with_capacity(trials);
    let mut discrepancies = Vec::new();
    let mut failures = Vec::new();
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        match run_trial(&case, &mut rng, &mut discrepancies, &mut failures) {
            Ok(rec) => per_trial.push(rec),
            Err(e) => failures.push(format!("trial {t}: {e}")),
        }
    }

    let mut basis_dim = None;
    if let Some(expected) = expected_frame_dim(&case) {
        if let Some(first) = per_trial.first() {
            let s = split_signed(&first.spectrum);
            let frame = frame_for(&case, &s)?.expect("frame case");
            if frame.dim() != expected {
                failures.push(format!(
                    "frame dimension {} differs from expected {expected}",
                    frame.dim()
                ));
            }
            basis_dim = Some(frame.dim());
        }
    }

    let max_rel_err = per_trial.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let mut notes = Vec::new();
    if basis_dim.is_some() {
        notes.push(
            "frame densities are compared with the eigenvalue-product part only; the 2^-k \
             normalisation comes from the column-sign convention and is checked by the integrator"
                .to_string(),
        );
    } else {
        notes.push("compared against composition with the reciprocal spectrum".to_string());
    }
    let pass = failures.is_empty() && per_trial.len() == trials && max_rel_err <= tol;
    Ok(VerificationReport {
        theorem_id: case.theorem_id(),
        dims: case,
        trials,
        seed,
        rel_tol: tol,
        basis_dim,
        per_trial,
        max_rel_err,
        pass,
        discrepancies,
        failures,
        notes,
    })
}

fn split_signed(signed: &[f64]) -> SampledSpectrum {
    SampledSpectrum {
        positives: signed.iter().copied().filter(|&x| x > 0.0).collect(),
        negatives: signed.iter().filter(|&&x| x < 0.0).map(|x| -x).collect(),
    }
}

/// Named groups of cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    All,
    T1,
    T2,
    T3,
    Eq2,
    SdFull,
    Composition,
}

impl Suite {
    pub fn cases(self) -> Vec<Case> {
        match self {
            Suite::T1 => [(1, 2), (2, 1), (2, 2), (3, 2)]
                .map(|(m1, m2)| Case::T1 { m1, m2 })
                .to_vec(),
            Suite::T2 => [(3, 1, 1), (4, 2, 1), (5, 1, 2)]
                .map(|(m, q1, q2)| Case::T2 { m, q1, q2 })
                .to_vec(),
            Suite::T3 => [(3, 2, 2), (4, 3, 2), (4, 2, 1)]
                .map(|(n, m, k)| Case::T3 { n, m, k })
                .to_vec(),
            Suite::Eq2 => [(3, 1), (4, 2)].map(|(m, q)| Case::Eq2 { m, q }).to_vec(),
            Suite::SdFull => [2, 3, 4].map(|m| Case::SdFull { m }).to_vec(),
            Suite::Composition => {
                let mut v: Vec<Case> = [(1, 1, 1), (2, 1, 1), (3, 2, 2), (4, 3, 2)]
                    .map(|(n, m, k)| Case::PinvGeneral { n, m, k })
                    .to_vec();
                v.extend(
                    [(1, 1), (2, 1), (2, 2), (3, 2)]
                        .map(|(m, beta)| Case::PinvSymmetric { m, beta }),
                );
                v.extend(
                    [
                        (2, 1, 1),
                        (3, 2, 1),
                        (4, 1, 1),
                        (3, 1, 2),
                        (4, 1, 2),
                        (4, 1, 3),
                    ]
                    .map(|(m, a1, a2)| Case::PinvIndef { m, a1, a2 }),
                );
                v
            }
            Suite::All => [
                Suite::SdFull,
                Suite::Eq2,
                Suite::T1,
                Suite::T2,
                Suite::T3,
                Suite::Composition,
            ]
            .into_iter()
            .flat_map(Suite::cases)
            .collect(),
        }
    }
}

pub fn verify_suite(
    suite: Suite,
    trials: usize,
    seed: u64,
    rel_tol: f64,
) -> Result<Vec<VerificationReport>> {
    suite
        .cases()
        .into_iter()
        .map(|c| verify_theorem(c, trials, seed, rel_tol))
        .collect()
}
