//! Jacobians and Hausdorff measure factorizations for the spectral
//! decomposition, SVD, Cholesky factorization and Moore–Penrose inverse of
//! singular and indefinite matrices.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectra`] classifies matrices by signature, rank and eigenvalue
//!   multiplicity.
//! * [`decomp`] produces the nonsingular parts of the factorizations with a
//!   fixed column-sign convention.
//! * [`formulas`] evaluates the closed-form density factors in log space.
//! * [`exterior`] is a small exterior-algebra engine over indexed 1-forms.
//! * [`oracle`] builds differential frames for each decomposition and checks
//!   the closed forms against wedge products and measure composition.
//! * [`integrator`] runs Monte Carlo change-of-variables checks that include
//!   the global `2^{±k}` constants a local frame computation cannot see.

pub mod decomp;
pub mod error;
pub mod exterior;
pub mod formulas;
pub mod integrator;
pub mod oracle;
pub mod spectra;

pub use decomp::{cholesky, moore_penrose, spectral_nonsingular, svd_nonsingular};
pub use decomp::{CholeskyParts, SpectralParts, SvdParts};
pub use error::{Error, Result};
pub use exterior::{det_coefficient, wedge, wedge_all, FormBasis, Multivector, OneForm};
pub use formulas::{jacobian_for, Evaluation, JacobianFactor, Transform};
pub use integrator::{McResult, PinvVariant, SdVariant};
pub use oracle::{DifferentialFrame, FrameSpec, TheoremId, VerificationReport};
pub use spectra::{classify_rect, classify_symmetric, cluster_values};
pub use spectra::{ClusterSpec, MatrixClass, Spectrum, TolerancePolicy};
