//! Dense complex linear algebra over labeled multi-register Hilbert spaces.
//!
//! All state vectors and operators carry a [`RegisterLayout`]: an ordered list
//! of `(label, dimension)` pairs. The canonical basis ordering is row-major
//! with the *first* register most significant, so tensoring layouts matches
//! the Kronecker product of matrices. Register order is part of a value's
//! identity; every operation that moves registers does so explicitly.
//!
//! Numerical conventions, used throughout the crate:
//!
//! - matrices are dense `Complex<f64>`; layouts refuse to grow past
//!   [`crate::DEFAULT_DIM_CAP`] unless an explicit cap is supplied;
//! - a single tolerance [`crate::SPECTRAL_TOL`] (1e-9) governs eigenvalue
//!   thresholding and the unitary/projector/POVM kind checks; eigenvalues
//!   within the tolerance of a threshold resolve to the `<=` side;
//! - density operators clamp eigenvalues in `[-1e-9, 0)` to zero on
//!   construction and reject anything more negative, so numerical noise is
//!   distinguishable from logic errors;
//! - matrix square roots (fidelity) go through Hermitian eigendecomposition.

mod decomp;
mod density;
mod distance;
mod layout;
mod operator;
mod serial;
mod state;

pub use decomp::{eigenspace_projector, eigh, operator_norm, svd, EigSide, Hermitian, Svd};
pub use density::DensityOperator;
pub use distance::{distances, fidelity, uhlmann_fidelity_pure, DistanceReport};
pub use layout::RegisterLayout;
pub use operator::{OperatorKind, OperatorMatrix};
pub use serial::{OperatorSchema, StateSchema, SCHEMA_VERSION};
pub use state::PureState;

use num_complex::Complex64;

pub type CMat = nalgebra::DMatrix<Complex64>;
pub type CVec = nalgebra::DVector<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);


/// `c * 1.0` helper for real scalars.
#[inline]
pub fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}
