//! Matrix taxonomy: signature, rank and eigenvalue/singular-value multiplicity.
//!
//! Eigenvalues are split by sign, thresholded against the largest magnitude
//! and then clustered. Positives are kept descending by value, negative
//! eigenvalues are stored as magnitudes descending by magnitude, so a
//! spectrum always reads `λ₁ > … > λ_{q₁} > 0` and `δ₁ > … > δ_{q₂} > 0`
//! with the negative eigenvalues being `−δ_j`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative asymmetry accepted before a matrix is rejected as non-symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Thresholds separating floating-point noise from intended structure.
///
/// Both tolerances are relative: `rank_tol` to the largest magnitude in the
/// spectrum, `cluster_tol` to the larger of two adjacent values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub rank_tol: f64,
    pub cluster_tol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            cluster_tol: 1e-8,
        }
    }
}

impl TolerancePolicy {
    pub fn new(rank_tol: f64, cluster_tol: f64) -> Result<Self> {
        if !(rank_tol > 0.0 && rank_tol.is_finite()) {
            return Err(Error::input(format!(
                "rank_tol must be positive, got {rank_tol}"
            )));
        }
        if !(cluster_tol > 0.0 && cluster_tol.is_finite()) {
            return Err(Error::input(format!(
                "cluster_tol must be positive, got {cluster_tol}"
            )));
        }
        Ok(Self {
            rank_tol,
            cluster_tol,
        })
    }
}

/// Distinct values with their repetition counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub distinct_values: Vec<f64>,
    pub multiplicities: Vec<usize>,
}

impl ClusterSpec {
    pub fn len(&self) -> usize {
        self.distinct_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distinct_values.is_empty()
    }

    pub fn total(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn has_multiplicity(&self) -> bool {
        self.multiplicities.iter().any(|&k| k > 1)
    }

    /// Every representative repeated by its multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.distinct_values
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&v, &k)| std::iter::repeat_n(v, k))
            .collect()
    }
}

/// Clustered spectrum of a symmetric matrix (or the singular values of a
/// rectangular one, stored in `positives`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub positives: Vec<f64>,
    pub negative_magnitudes: Vec<f64>,
    pub positive_multiplicities: Vec<usize>,
    pub negative_multiplicities: Vec<usize>,
    pub zero_count: usize,
}

impl Spectrum {
    fn from_clusters(pos: ClusterSpec, neg: ClusterSpec, zero_count: usize) -> Self {
        Self {
            positives: pos.distinct_values,
            positive_multiplicities: pos.multiplicities,
            negative_magnitudes: neg.distinct_values,
            negative_multiplicities: neg.multiplicities,
            zero_count,
        }
    }

    pub fn positive_clusters(&self) -> ClusterSpec {
        ClusterSpec {
            distinct_values: self.positives.clone(),
            multiplicities: self.positive_multiplicities.clone(),
        }
    }

    pub fn negative_clusters(&self) -> ClusterSpec {
        ClusterSpec {
            distinct_values: self.negative_magnitudes.clone(),
            multiplicities: self.negative_multiplicities.clone(),
        }
    }

    /// Number of nonzero values counted with multiplicity.
    pub fn rank(&self) -> usize {
        self.positive_multiplicities.iter().sum::<usize>()
            + self.negative_multiplicities.iter().sum::<usize>()
    }

    pub fn has_multiplicity(&self) -> bool {
        self.positive_multiplicities
            .iter()
            .chain(&self.negative_multiplicities)
            .any(|&k| k > 1)
    }

    /// Spectrum of `−A`.
    pub fn negated(&self) -> Self {
        Self {
            positives: self.negative_magnitudes.clone(),
            positive_multiplicities: self.negative_multiplicities.clone(),
            negative_magnitudes: self.positives.clone(),
            negative_multiplicities: self.positive_multiplicities.clone(),
            zero_count: self.zero_count,
        }
    }
}

/// Classes of symmetric and rectangular matrices.
///
/// `*Mult` variants carry the number of *distinct* values (`l`, `k`, `l₁`,
/// ...) next to the rank. Negative variants mirror the positive ones for
/// `−A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum MatrixClass {
    PosDef {
        m: usize,
    },
    PosDefMult {
        m: usize,
        l: usize,
    },
    SemiDef {
        m: usize,
        q: usize,
    },
    SemiDefMult {
        m: usize,
        q: usize,
        k: usize,
    },
    NegDef {
        m: usize,
    },
    NegDefMult {
        m: usize,
        l: usize,
    },
    NegSemiDef {
        m: usize,
        q: usize,
    },
    NegSemiDefMult {
        m: usize,
        q: usize,
        k: usize,
    },
    Indef {
        m: usize,
        m1: usize,
        m2: usize,
    },
    IndefMult {
        m: usize,
        l1: usize,
        l2: usize,
    },
    SemiIndef {
        m: usize,
        q: usize,
        q1: usize,
        q2: usize,
    },
    SemiIndefMult {
        m: usize,
        q: usize,
        k1: usize,
        k2: usize,
    },
    Rect {
        n: usize,
        m: usize,
        q: usize,
    },
    RectMult {
        n: usize,
        m: usize,
        q: usize,
        l: usize,
    },
}

impl MatrixClass {
    pub fn tag(&self) -> &'static str {
        match self {
            MatrixClass::PosDef { .. } => "PosDef",
            MatrixClass::PosDefMult { .. } => "PosDefMult",
            MatrixClass::SemiDef { .. } => "SemiDef",
            MatrixClass::SemiDefMult { .. } => "SemiDefMult",
            MatrixClass::NegDef { .. } => "NegDef",
            MatrixClass::NegDefMult { .. } => "NegDefMult",
            MatrixClass::NegSemiDef { .. } => "NegSemiDef",
            MatrixClass::NegSemiDefMult { .. } => "NegSemiDefMult",
            MatrixClass::Indef { .. } => "Indef",
            MatrixClass::IndefMult { .. } => "IndefMult",
            MatrixClass::SemiIndef { .. } => "SemiIndef",
            MatrixClass::SemiIndefMult { .. } => "SemiIndefMult",
            MatrixClass::Rect { .. } => "Rect",
            MatrixClass::RectMult { .. } => "RectMult",
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(
            self,
            MatrixClass::Rect { .. } | MatrixClass::RectMult { .. }
        )
    }

    /// Class of `−A`. Rectangular classes are unchanged.
    pub fn negated(&self) -> Self {
        use MatrixClass::*;
        match *self {
            PosDef { m } => NegDef { m },
            PosDefMult { m, l } => NegDefMult { m, l },
            NegDef { m } => PosDef { m },
            NegDefMult { m, l } => PosDefMult { m, l },
            // The zero matrix is its own negation.
            SemiDef { m, q: 0 } => SemiDef { m, q: 0 },
            SemiDef { m, q } => NegSemiDef { m, q },
            SemiDefMult { m, q, k } => NegSemiDefMult { m, q, k },
            NegSemiDef { m, q } => SemiDef { m, q },
            NegSemiDefMult { m, q, k } => SemiDefMult { m, q, k },
            Indef { m, m1, m2 } => Indef { m, m1: m2, m2: m1 },
            IndefMult { m, l1, l2 } => IndefMult { m, l1: l2, l2: l1 },
            SemiIndef { m, q, q1, q2 } => SemiIndef {
                m,
                q,
                q1: q2,
                q2: q1,
            },
            SemiIndefMult { m, q, k1, k2 } => SemiIndefMult {
                m,
                q,
                k1: k2,
                k2: k1,
            },
            c @ (Rect { .. } | RectMult { .. }) => c,
        }
    }

    /// Checks the counting relations between the fields.
    pub fn is_consistent(&self) -> bool {
        use MatrixClass::*;
        match *self {
            PosDef { m } | NegDef { m } => m >= 1,
            PosDefMult { m, l } | NegDefMult { m, l } => l >= 1 && l < m,
            SemiDef { m, q } | NegSemiDef { m, q } => q < m,
            SemiDefMult { m, q, k } | NegSemiDefMult { m, q, k } => k >= 1 && k < q && q < m,
            Indef { m, m1, m2 } => m1 >= 1 && m2 >= 1 && m1 + m2 == m,
            IndefMult { m, l1, l2 } => l1 >= 1 && l2 >= 1 && l1 + l2 < m,
            SemiIndef { m, q, q1, q2 } => q1 >= 1 && q2 >= 1 && q1 + q2 == q && q < m,
            SemiIndefMult { m, q, k1, k2 } => k1 >= 1 && k2 >= 1 && k1 + k2 < q && q < m,
            Rect { n, m, q } => q <= n.min(m),
            RectMult { n, m, q, l } => l >= 1 && l < q && q <= n.min(m),
        }
    }
}

/// Single-linkage clustering of a descending list on adjacent relative gaps.
///
/// Two neighbours `a, b` are merged when `|a − b| ≤ cluster_tol · max(|a|, |b|)`.
/// Each cluster is represented by the arithmetic mean of its members.
pub fn cluster_values(values: &[f64], cluster_tol: f64) -> ClusterSpec {
    let mut out = ClusterSpec::default();
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len() || {
            let (a, b) = (values[i - 1], values[i]);
            (a - b).abs() > cluster_tol * a.abs().max(b.abs())
        };
        if split && i > start {
            let members = &values[start..i];
            out.distinct_values
                .push(members.iter().sum::<f64>() / members.len() as f64);
            out.multiplicities.push(members.len());
            start = i;
        }
    }
    out
}

fn check_finite(a: &DMatrix<f64>) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::input("matrix has non-finite entries"))
    }
}

/// Verifies squareness and symmetry, returning the symmetrized matrix.
pub(crate) fn symmetrized(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::input(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    check_finite(a)?;
    let scale = a.amax();
    let asym = (a - a.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::input(format!(
            "matrix is not symmetric (max |a_ij - a_ji| = {asym:e})"
        )));
    }
    Ok((a + a.transpose()) * 0.5)
}

/// Splits signed eigenvalues into thresholded, clustered positive and
/// negative parts.
pub(crate) fn spectrum_from_eigenvalues(eigs: &[f64], policy: &TolerancePolicy) -> Spectrum {
    let scale = eigs.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let cut = policy.rank_tol * scale;
    let mut pos: Vec<f64> = eigs.iter().copied().filter(|&x| x > cut).collect();
    let mut neg: Vec<f64> = eigs.iter().filter(|&&x| x < -cut).map(|x| -x).collect();
    let zero_count = eigs.len() - pos.len() - neg.len();
    pos.sort_by(|a, b| b.total_cmp(a));
    neg.sort_by(|a, b| b.total_cmp(a));
    Spectrum::from_clusters(
        cluster_values(&pos, policy.cluster_tol),
        cluster_values(&neg, policy.cluster_tol),
        zero_count,
    )
}

pub(crate) fn class_from_spectrum(m: usize, s: &Spectrum) -> MatrixClass {
    use MatrixClass::*;
    let q1: usize = s.positive_multiplicities.iter().sum();
    let q2: usize = s.negative_multiplicities.iter().sum();
    let q = q1 + q2;
    let (l1, l2) = (s.positives.len(), s.negative_magnitudes.len());
    let mult = s.has_multiplicity();
    let full = s.zero_count == 0;
    match (q1 > 0, q2 > 0) {
        (false, false) => SemiDef { m, q: 0 },
        (true, false) => match (full, mult) {
            (true, false) => PosDef { m },
            (true, true) => PosDefMult { m, l: l1 },
            (false, false) => SemiDef { m, q },
            (false, true) => SemiDefMult { m, q, k: l1 },
        },
        (false, true) => match (full, mult) {
            (true, false) => NegDef { m },
            (true, true) => NegDefMult { m, l: l2 },
            (false, false) => NegSemiDef { m, q },
            (false, true) => NegSemiDefMult { m, q, k: l2 },
        },
        (true, true) => match (full, mult) {
            (true, false) => Indef { m, m1: q1, m2: q2 },
            (true, true) => IndefMult { m, l1, l2 },
            (false, false) => SemiIndef { m, q, q1, q2 },
            (false, true) => SemiIndefMult {
                m,
                q,
                k1: l1,
                k2: l2,
            },
        },
    }
}

/// Classifies a symmetric matrix and returns its clustered spectrum.
pub fn classify_symmetric(
    a: &DMatrix<f64>,
    policy: &TolerancePolicy,
) -> Result<(MatrixClass, Spectrum)> {
    let a = symmetrized(a)?;
    let m = a.nrows();
    if m == 0 {
        return Err(Error::input("empty matrix"));
    }
    let eigs = a.symmetric_eigenvalues();
    let spectrum = spectrum_from_eigenvalues(eigs.as_slice(), policy);
    Ok((class_from_spectrum(m, &spectrum), spectrum))
}

/// Classifies an `N×m` matrix by rank and singular-value multiplicity.
/// Singular values are stored in `Spectrum::positives`.
pub fn classify_rect(
    x: &DMatrix<f64>,
    policy: &TolerancePolicy,
) -> Result<(MatrixClass, Spectrum)> {
    let (n, m) = x.shape();
    if n == 0 || m == 0 {
        return Err(Error::input(format!("degenerate dimensions {n}x{m}")));
    }
    check_finite(x)?;
    let sv = crate::decomp::singular_triplets(x).0;
    let cut = policy.rank_tol * sv.first().copied().unwrap_or(0.0);
    let kept: Vec<f64> = sv.iter().copied().filter(|&s| s > cut).collect();
    let clusters = cluster_values(&kept, policy.cluster_tol);
    let q = kept.len();
    let l = clusters.len();
    let spectrum = Spectrum::from_clusters(clusters, ClusterSpec::default(), n.min(m) - q);
    let class = if l == q {
        MatrixClass::Rect { n, m, q }
    } else {
        MatrixClass::RectMult { n, m, q, l }
    };
    Ok((class, spectrum))
}
