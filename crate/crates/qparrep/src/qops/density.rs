use num_complex::Complex64;

use super::decomp::eigh_matrix;
use super::{cr, CMat, CVec, PureState, RegisterLayout, C_ZERO};
use crate::{Error, Result, SPECTRAL_TOL};

/// A density operator: Hermitian, positive semidefinite (eigenvalues in
/// `[-1e-9, 0)` are clamped to zero on construction, anything more negative
/// is an error), trace at most `1 + 1e-9`.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    pub layout: RegisterLayout,
    pub matrix: CMat,
}

impl DensityOperator {
    pub fn new(layout: RegisterLayout, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != layout.total_dim() || matrix.ncols() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix {}x{} vs layout dim {}",
                matrix.nrows(),
                matrix.ncols(),
                layout.total_dim()
            )));
        }
        let herm = (&matrix - matrix.adjoint()).norm();
        if herm > SPECTRAL_TOL * (1.0 + matrix.norm()) {
            return Err(Error::NotHermitian(herm));
        }
        let tr = matrix.trace().re;
        if tr > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "density trace {tr} exceeds 1"
            )));
        }
        // PSD floor: clamp small negative eigenvalues, reject genuine ones.
        let eig = eigh_matrix(&matrix)?;
        let min = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -SPECTRAL_TOL {
            return Err(Error::InvalidParameter(format!(
                "density operator has eigenvalue {min:.3e} below the -1e-9 floor"
            )));
        }
        let matrix = if min < 0.0 {
            let n = matrix.nrows();
            let d = CMat::from_diagonal(&CVec::from_iterator(
                n,
                eig.values.iter().map(|&v| cr(v.max(0.0))),
            ));
            &eig.vectors * d * eig.vectors.adjoint()
        } else {
            matrix
        };
        Ok(Self { layout, matrix })
    }

    pub fn from_pure(psi: &PureState) -> Result<Self> {
        let m = &psi.amplitudes * psi.amplitudes.adjoint();
        Self::new(psi.layout.clone(), m)
    }

    /// Maximally mixed state.
    pub fn maximally_mixed(layout: RegisterLayout) -> Self {
        let n = layout.total_dim();
        Self {
            layout,
            matrix: CMat::identity(n, n) * cr(1.0 / n as f64),
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn mix(components: &[(f64, DensityOperator)]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let layout = first.1.layout.clone();
        let n = layout.total_dim();
        let mut m = CMat::from_element(n, n, C_ZERO);
        for (w, rho) in components {
            layout.expect_same(&rho.layout)?;
            m += &rho.matrix * cr(*w);
        }
        Self::new(layout, m)
    }

    /// Spectral decomposition as an ensemble of pure states (weights > tol).
    pub fn eigen_ensemble(&self) -> Result<Vec<(f64, PureState)>> {
        let eig = eigh_matrix(&self.matrix)?;
        let mut out = Vec::new();
        for (i, &w) in eig.values.iter().enumerate() {
            if w > 1e-12 {
                out.push((
                    w,
                    PureState::new(self.layout.clone(), eig.vector(i))?,
                ));
            }
        }
        Ok(out)
    }

    /// Partial trace over the named registers. Trace-preserving and
    /// PSD-preserving.
    pub fn partial_trace(&self, drop: &[&str]) -> Result<Self> {
        for d in drop {
            self.layout.position(d)?;
        }
        let keep_layout = self.layout.without(drop)?;
        // Reorder so kept registers come first.
        
        let dropped = self.layout.select(drop)?;
        let front = keep_layout.tensor_with_cap(&dropped, usize::MAX)?;
        let perm = self.layout.permutation_to(&front)?;
        let dk = keep_layout.total_dim();
        let dd = dropped.total_dim();
        let n = self.dim();
        let mut reordered = CMat::from_element(n, n, C_ZERO);
        for r in 0..n {
            for c in 0..n {
                reordered[(perm[r], perm[c])] = self.matrix[(r, c)];
            }
        }
        let mut out = CMat::from_element(dk, dk, C_ZERO);
        for r in 0..dk {
            for c in 0..dk {
                let mut acc = C_ZERO;
                for t in 0..dd {
                    acc += reordered[(r * dd + t, c * dd + t)];
                }
                out[(r, c)] = acc;
            }
        }
        Self::new(keep_layout, out)
    }

    /// `Tr(op · ρ)` for a square operator on the same layout (or a subset,
    /// which is embedded first).
    pub fn expectation(&self, op: &super::OperatorMatrix) -> Result<Complex64> {
        let full = if op.in_layout == self.layout {
            op.clone()
        } else {
            op.embed(&self.layout)?
        };
        Ok((&full.mat * &self.matrix).trace())
    }
}
