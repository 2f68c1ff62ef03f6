use num_complex::Complex64;

use super::{CMat, CVec, RegisterLayout, C_ZERO};
use crate::{Error, Result};

/// A (possibly subnormalized) state vector over a labeled layout.
///
/// Subnormalized states arise naturally after projective branches; the
/// [`PureState::is_normalized`] flag asserts norm within 1e-10 of 1.
#[derive(Debug, Clone)]
pub struct PureState {
    pub layout: RegisterLayout,
    pub amplitudes: CVec,
}

impl PureState {
    pub fn new(layout: RegisterLayout, amplitudes: CVec) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} vs layout dim {}",
                amplitudes.len(),
                layout.total_dim()
            )));
        }
        Ok(Self { layout, amplitudes })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(layout: RegisterLayout, index: usize) -> Result<Self> {
        let n = layout.total_dim();
        if index >= n {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range {n}"
            )));
        }
        let mut v = CVec::from_element(n, C_ZERO);
        v[index] = Complex64::new(1.0, 0.0);
        Self::new(layout, v)
    }

    /// All-zero basis state `|0…0⟩`.
    pub fn zero(layout: RegisterLayout) -> Self {
        Self::basis(layout, 0).expect("dim >= 1")
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < 1e-10
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.layout.expect_same(&other.layout)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n < 1e-14 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            layout: self.layout.clone(),
            amplitudes: self.amplitudes.clone() / Complex64::new(n, 0.0),
        })
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            layout: self.layout.clone(),
            amplitudes: self.amplitudes.clone() * c,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.layout.expect_same(&other.layout)?;
        Ok(Self {
            layout: self.layout.clone(),
            amplitudes: &self.amplitudes + &other.amplitudes,
        })
    }

    /// Tensor product with concatenated layout.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        self.tensor_with_cap(other, crate::DEFAULT_DIM_CAP)
    }

    pub fn tensor_with_cap(&self, other: &Self, cap: usize) -> Result<Self> {
        let layout = self.layout.tensor_with_cap(&other.layout, cap)?;
        Ok(Self {
            layout,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }

    /// Reorders registers to the order given by `labels` (which must name all
    /// registers exactly once).
    pub fn reordered(&self, labels: &[&str]) -> Result<Self> {
        let target = self.layout.select(labels)?;
        if target.len() != self.layout.len() {
            return Err(Error::LayoutMismatch(
                "reorder must name every register".into(),
            ));
        }
        self.permuted_to(&target)
    }

    pub fn permuted_to(&self, target: &RegisterLayout) -> Result<Self> {
        let perm = self.layout.permutation_to(target)?;
        let mut v = CVec::from_element(self.dim(), C_ZERO);
        for (i, &j) in perm.iter().enumerate() {
            v[j] = self.amplitudes[i];
        }
        Ok(Self {
            layout: target.clone(),
            amplitudes: v,
        })
    }

    /// Applies a matrix acting on the named registers (in the order given by
    /// `op_in`), writing the result into registers described by `op_out`.
    ///
    /// The result's layout is `[op_out registers..., remaining registers in
    /// original order...]`. This is the one register-moving primitive; all
    /// higher-level applications are built on it.
    pub fn apply_on(
        &self,
        mat: &CMat,
        op_in: &RegisterLayout,
        op_out: &RegisterLayout,
    ) -> Result<Self> {
        let d_in = op_in.total_dim();
        let d_out = op_out.total_dim();
        if mat.nrows() != d_out || mat.ncols() != d_in {
            return Err(Error::DimensionMismatch(format!(
                "matrix {}x{} vs op layouts {}x{}",
                mat.nrows(),
                mat.ncols(),
                d_out,
                d_in
            )));
        }
        for (l, d) in op_in.registers() {
            if self.layout.dim_of(l)? != *d {
                return Err(Error::DimensionMismatch(format!(
                    "register {l}: state dim {} vs operator dim {d}",
                    self.layout.dim_of(l)?
                )));
            }
        }
        for (l, _) in op_out.registers() {
            if op_in.contains(l) {
                continue;
            }
            if self.layout.contains(l) {
                return Err(Error::LabelCollision(format!(
                    "output register {l} already present and not an input"
                )));
            }
        }

        // Bring the input registers to the front, in op_in order.
        let in_labels: Vec<&str> = op_in.labels().collect();
        let rest = self.layout.without(&in_labels)?;
        let front = op_in.tensor_with_cap(&rest, usize::MAX)?;
        let permuted = self.permuted_to(&front)?;

        let d_rest = rest.total_dim();
        // View as (d_in x d_rest), multiply by mat.
        let m = CMat::from_row_slice(d_in, d_rest, permuted.amplitudes.as_slice());
        let out = mat * m;
        let out_layout = op_out.tensor_with_cap(&rest, usize::MAX)?;
        let mut v = CVec::from_element(d_out * d_rest, C_ZERO);
        for r in 0..d_out {
            for c in 0..d_rest {
                v[r * d_rest + c] = out[(r, c)];
            }
        }
        PureState::new(out_layout, v)
    }

    /// Probability weight of the named register being in basis state `value`.
    pub fn register_weight(&self, label: &str, value: usize) -> Result<f64> {
        let pos = self.layout.position(label)?;
        let strides = self.layout.strides();
        let dim = self.layout.registers()[pos].1;
        if value >= dim {
            return Err(Error::InvalidParameter(format!(
                "value {value} out of range for register {label} (dim {dim})"
            )));
        }
        let mut w = 0.0;
        for i in 0..self.dim() {
            if (i / strides[pos]) % dim == value {
                w += self.amplitudes[i].norm_sqr();
            }
        }
        Ok(w)
    }

    /// Projects the named register onto basis state `value` and removes the
    /// register from the layout (a `⟨value|` slice). The result is
    /// subnormalized by the projection amplitude.
    pub fn slice_register(&self, label: &str, value: usize) -> Result<Self> {
        let pos = self.layout.position(label)?;
        let strides = self.layout.strides();
        let dim = self.layout.registers()[pos].1;
        if value >= dim {
            return Err(Error::InvalidParameter(format!(
                "value {value} out of range for register {label} (dim {dim})"
            )));
        }
        let new_layout = self.layout.without(&[label])?;
        let mut v = CVec::from_element(new_layout.total_dim(), C_ZERO);
        let stride = strides[pos];
        let block = stride; // contiguous run with fixed higher digits
        let outer = self.dim() / (dim * stride);
        let mut out_idx = 0;
        for o in 0..outer {
            let base = o * dim * stride + value * stride;
            for b in 0..block {
                v[out_idx] = self.amplitudes[base + b];
                out_idx += 1;
            }
        }
        PureState::new(new_layout, v)
    }

    /// Appends a register in basis state `|value⟩` at the end of the layout.
    pub fn append_register(&self, label: &str, dim: usize, value: usize) -> Result<Self> {
        let extra = PureState::basis(RegisterLayout::with_cap([(label, dim)], usize::MAX)?, value)?;
        self.tensor_with_cap(&extra, usize::MAX)
    }
}
