//! Exterior algebra over an indexed basis of 1-forms.
//!
//! Basis monomials are stored as bitmasks, so a basis holds at most
//! [`MAX_BASIS`] forms. The sign of a product is the parity of the
//! permutation that sorts the concatenated index tuple.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_BASIS: usize = 64;

/// Named basis 1-forms, e.g. `s(1,2)`, `k(3,1)`, `dd(1)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FormBasis {
    labels: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl FormBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut basis = Self::new();
        for l in labels {
            basis.push(l)?;
        }
        Ok(basis)
    }

    /// Appends a label and returns its position.
    pub fn push(&mut self, label: impl Into<String>) -> Result<usize> {
        let label = label.into();
        if self.index.contains_key(&label) {
            return Err(Error::input(format!("duplicate basis label {label}")));
        }
        if self.labels.len() == MAX_BASIS {
            return Err(Error::input(format!("basis limited to {MAX_BASIS} forms")));
        }
        let pos = self.labels.len();
        self.index.insert(label.clone(), pos);
        self.labels.push(label);
        Ok(pos)
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, pos: usize) -> Option<&str> {
        self.labels.get(pos).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Sparse linear combination of basis 1-forms. Zero coefficients are never
/// stored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OneForm {
    coeffs: BTreeMap<usize, f64>,
}

impl OneForm {
    pub fn new() -> Self {
        Self::default()
    }

    /// `c · e_pos`.
    pub fn basis(pos: usize, c: f64) -> Self {
        Self::new().with(pos, c)
    }

    pub fn with(mut self, pos: usize, c: f64) -> Self {
        self.add(pos, c);
        self
    }

    pub fn add(&mut self, pos: usize, c: f64) {
        let v = self.coeffs.entry(pos).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.coeffs.remove(&pos);
        }
    }

    pub fn coeff(&self, pos: usize) -> f64 {
        self.coeffs.get(&pos).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs.iter().map(|(&p, &c)| (p, c))
    }

    pub fn nnz(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = Self::new();
        for (p, v) in self.iter() {
            out.add(p, c * v);
        }
        out
    }

    fn max_position(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }
}

/// Homogeneous element of the exterior algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct Multivector {
    dim: usize,
    grade: usize,
    terms: BTreeMap<u64, f64>,
}

fn mask_to_tuple(mask: u64) -> Vec<usize> {
    (0..MAX_BASIS).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Parity of the merge of `a` followed by `b`: counts pairs `(i ∈ a, j ∈ b)`
/// with `i > j`.
fn merge_sign(a: u64, b: u64) -> f64 {
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        inversions += (a.checked_shr(j + 1).unwrap_or(0)).count_ones();
        rest &= rest - 1;
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl Multivector {
    fn check_dim(dim: usize) {
        assert!(
            dim <= MAX_BASIS,
            "basis dimension {dim} exceeds {MAX_BASIS}"
        );
    }

    pub fn scalar(dim: usize, c: f64) -> Self {
        Self::check_dim(dim);
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(0, c);
        }
        Self {
            dim,
            grade: 0,
            terms,
        }
    }

    pub fn zero(dim: usize, grade: usize) -> Self {
        Self::check_dim(dim);
        Self {
            dim,
            grade,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_one_form(form: &OneForm, dim: usize) -> Self {
        Self::check_dim(dim);
        assert!(
            form.max_position().is_none_or(|p| p < dim),
            "1-form outside a basis of dimension {dim}"
        );
        Self {
            dim,
            grade: 1,
            terms: form.iter().map(|(p, c)| (1u64 << p, c)).collect(),
        }
    }

    /// Builds a multivector from `(increasing tuple, coefficient)` pairs.
    pub fn from_terms(dim: usize, grade: usize, terms: &[(&[usize], f64)]) -> Result<Self> {
        Self::check_dim(dim);
        let mut out = Self::zero(dim, grade);
        for (tuple, c) in terms {
            if tuple.len() != grade {
                return Err(Error::input(format!(
                    "term of grade {} in grade {grade}",
                    tuple.len()
                )));
            }
            if tuple.windows(2).any(|w| w[0] >= w[1]) || tuple.iter().any(|&p| p >= dim) {
                return Err(Error::input(format!("invalid index tuple {tuple:?}")));
            }
            let mask = tuple.iter().fold(0u64, |m, &p| m | 1 << p);
            out.accumulate(mask, *c);
        }
        Ok(out)
    }

    fn accumulate(&mut self, mask: u64, c: f64) {
        let v = self.terms.entry(mask).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.remove(&mask);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn nnz(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, tuple: &[usize]) -> f64 {
        if tuple.windows(2).any(|w| w[0] >= w[1]) || tuple.iter().any(|&p| p >= self.dim) {
            return 0.0;
        }
        let mask = tuple.iter().fold(0u64, |m, &p| m | 1 << p);
        self.terms.get(&mask).copied().unwrap_or(0.0)
    }

    /// Terms as `(strictly increasing tuple, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.terms.iter().map(|(&m, &c)| (mask_to_tuple(m), c))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = Self::zero(self.dim, self.grade);
        for (&m, &v) in &self.terms {
            out.accumulate(m, c * v);
        }
        out
    }

    /// Sum of two multivectors of the same grade.
    pub fn plus(&self, other: &Multivector) -> Self {
        assert_eq!(self.dim, other.dim, "basis mismatch");
        assert_eq!(self.grade, other.grade, "grade mismatch");
        let mut out = self.clone();
        for (&m, &v) in &other.terms {
            out.accumulate(m, v);
        }
        out
    }

    /// Largest coefficient difference against `other`.
    pub fn max_abs_diff(&self, other: &Multivector) -> f64 {
        let mut d = 0.0f64;
        for (m, v) in &self.terms {
            d = d.max((v - other.terms.get(m).copied().unwrap_or(0.0)).abs());
        }
        for (m, v) in &other.terms {
            if !self.terms.contains_key(m) {
                d = d.max(v.abs());
            }
        }
        d
    }

    fn wedge_form(&self, form: &OneForm) -> Self {
        let mut out = Self::zero(self.dim, self.grade + 1);
        for (&m, &c) in &self.terms {
            for (p, f) in form.iter() {
                let bit = 1u64 << p;
                if m & bit != 0 {
                    continue;
                }
                // e_I ∧ e_p: e_p has to move past every index of I above p.
                let above = m.checked_shr(p as u32 + 1).unwrap_or(0).count_ones();
                let sign = if above % 2 == 0 { 1.0 } else { -1.0 };
                out.accumulate(m | bit, sign * c * f);
            }
        }
        out
    }
}

/// Exterior product. Grades add; a product whose grade exceeds the basis
/// size is the zero multivector.
pub fn wedge(a: &Multivector, b: &Multivector) -> Multivector {
    assert_eq!(a.dim, b.dim, "wedge of multivectors over different bases");
    let mut out = Multivector::zero(a.dim, a.grade + b.grade);
    if out.grade > a.dim {
        return out;
    }
    for (&ma, &ca) in &a.terms {
        for (&mb, &cb) in &b.terms {
            if ma & mb != 0 {
                continue;
            }
            out.accumulate(ma | mb, merge_sign(ma, mb) * ca * cb);
        }
    }
    out
}

fn check_square_system(forms: &[OneForm], dim: usize) -> Result<()> {
    if forms.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: forms.len(),
        });
    }
    if dim > MAX_BASIS {
        return Err(Error::input(format!("basis limited to {MAX_BASIS} forms")));
    }
    if let Some(p) = forms
        .iter()
        .filter_map(OneForm::max_position)
        .find(|&p| p >= dim)
    {
        return Err(Error::input(format!(
            "form references position {p} outside basis of {dim}"
        )));
    }
    Ok(())
}

/// Coefficient of `e_0 ∧ … ∧ e_{n−1}` in `f_1 ∧ … ∧ f_n`, computed by
/// successive wedges.
pub fn wedge_all(forms: &[OneForm], dim: usize) -> Result<f64> {
    check_square_system(forms, dim)?;
    let mut acc = Multivector::scalar(dim, 1.0);
    for f in forms {
        acc = acc.wedge_form(f);
        if acc.is_zero() {
            return Ok(0.0);
        }
    }
    let top = if dim == MAX_BASIS {
        u64::MAX
    } else {
        (1u64 << dim) - 1
    };
    Ok(acc.terms.get(&top).copied().unwrap_or(0.0))
}

/// Determinant of the coefficient matrix (row `i` = coefficients of form
/// `i`), via LU with partial pivoting. Equal to [`wedge_all`] in exact
/// arithmetic.
pub fn det_coefficient(forms: &[OneForm], dim: usize) -> Result<f64> {
    check_square_system(forms, dim)?;
    let n = dim;
    let mut a = vec![0.0f64; n * n];
    for (i, f) in forms.iter().enumerate() {
        for (p, c) in f.iter() {
            a[i * n + p] = c;
        }
    }
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .expect("non-empty range");
        let pv = a[pivot * n + col];
        if pv == 0.0 {
            return Ok(0.0);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        det *= pv;
        for r in col + 1..n {
            let factor = a[r * n + col] / pv;
            if factor != 0.0 {
                for k in col + 1..n {
                    a[r * n + k] -= factor * a[col * n + k];
                }
            }
        }
    }
    Ok(det)
}
