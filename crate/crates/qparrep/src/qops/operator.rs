use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{cr, CMat, PureState, RegisterLayout, C_ZERO};
use crate::{Error, Result, SPECTRAL_TOL};

/// Structural tag carried by an [`OperatorMatrix`], checked on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    /// Square with `U†U = id` within tolerance. Input and output layouts may
    /// partition the same total dimension differently.
    Unitary,
    /// Hermitian and idempotent within tolerance.
    Projector,
    /// Hermitian with spectrum in `[-tol, 1+tol]`; also used for compressions
    /// of projectors, which may be rectangular.
    PovmElement,
    General,
}

/// A dense matrix between two labeled spaces.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub in_layout: RegisterLayout,
    pub out_layout: RegisterLayout,
    pub mat: CMat,
    pub kind: OperatorKind,
}

impl OperatorMatrix {
    pub fn new(
        in_layout: RegisterLayout,
        out_layout: RegisterLayout,
        mat: CMat,
        kind: OperatorKind,
    ) -> Result<Self> {
        if mat.ncols() != in_layout.total_dim() || mat.nrows() != out_layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix {}x{} vs layouts out={} in={}",
                mat.nrows(),
                mat.ncols(),
                out_layout.total_dim(),
                in_layout.total_dim()
            )));
        }
        let op = Self {
            in_layout,
            out_layout,
            mat,
            kind,
        };
        op.check_kind()?;
        Ok(op)
    }

    /// Square operator acting on a single layout.
    pub fn on(layout: RegisterLayout, mat: CMat, kind: OperatorKind) -> Result<Self> {
        Self::new(layout.clone(), layout, mat, kind)
    }

    pub fn identity(layout: RegisterLayout) -> Self {
        let n = layout.total_dim();
        Self {
            in_layout: layout.clone(),
            out_layout: layout,
            mat: CMat::identity(n, n),
            kind: OperatorKind::Projector,
        }
    }

    fn check_kind(&self) -> Result<()> {
        let m = &self.mat;
        match self.kind {
            OperatorKind::General => Ok(()),
            OperatorKind::Unitary => {
                if m.nrows() != m.ncols() {
                    return Err(Error::DimensionMismatch(
                        "unitary must be square".to_string(),
                    ));
                }
                let res = (m.adjoint() * m - CMat::identity(m.ncols(), m.ncols())).norm();
                if res > SPECTRAL_TOL {
                    return Err(Error::KindCheckFailed {
                        kind: "unitary",
                        residual: res,
                    });
                }
                Ok(())
            }
            OperatorKind::Projector => {
                if m.nrows() != m.ncols() {
                    return Err(Error::DimensionMismatch(
                        "projector must be square".to_string(),
                    ));
                }
                let herm = (m - m.adjoint()).norm();
                let idem = (m * m - m).norm();
                let res = herm.max(idem);
                if res > SPECTRAL_TOL {
                    return Err(Error::KindCheckFailed {
                        kind: "projector",
                        residual: res,
                    });
                }
                Ok(())
            }
            OperatorKind::PovmElement => {
                if m.nrows() == m.ncols() {
                    let herm = (m - m.adjoint()).norm();
                    if herm > SPECTRAL_TOL {
                        return Err(Error::KindCheckFailed {
                            kind: "povm_element",
                            residual: herm,
                        });
                    }
                    let eig = super::decomp::eigh_matrix(m)?;
                    let lo = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = eig.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    if lo < -SPECTRAL_TOL || hi > 1.0 + SPECTRAL_TOL {
                        return Err(Error::KindCheckFailed {
                            kind: "povm_element",
                            residual: (-lo).max(hi - 1.0),
                        });
                    }
                }
                // Rectangular POVM-tagged operators are compressions; only a
                // norm bound applies.
                Ok(())
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            in_layout: self.out_layout.clone(),
            out_layout: self.in_layout.clone(),
            mat: self.mat.adjoint(),
            kind: match self.kind {
                OperatorKind::General => OperatorKind::General,
                k => k,
            },
        }
    }

    /// Matrix product `self · rhs`; requires `rhs.out_layout == self.in_layout`.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        self.in_layout.expect_same(&rhs.out_layout)?;
        Ok(Self {
            in_layout: rhs.in_layout.clone(),
            out_layout: self.out_layout.clone(),
            mat: &self.mat * &rhs.mat,
            kind: OperatorKind::General,
        })
    }

    /// Kronecker product with concatenated layouts; preserves the kind when
    /// both operands share it.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        self.tensor_with_cap(other, crate::DEFAULT_DIM_CAP)
    }

    pub fn tensor_with_cap(&self, other: &Self, cap: usize) -> Result<Self> {
        let in_layout = self.in_layout.tensor_with_cap(&other.in_layout, cap)?;
        let out_layout = self.out_layout.tensor_with_cap(&other.out_layout, cap)?;
        let kind = if self.kind == other.kind {
            self.kind
        } else {
            OperatorKind::General
        };
        Ok(Self {
            in_layout,
            out_layout,
            mat: self.mat.kronecker(&other.mat),
            kind,
        })
    }

    /// Embeds a square operator into `target` as `op ⊗ id` on the complement,
    /// with register ordering permuted explicitly to match `target`.
    pub fn embed(&self, target: &RegisterLayout) -> Result<Self> {
        if self.in_layout != self.out_layout {
            return Err(Error::LayoutMismatch(
                "embed requires a square operator with in == out registers".into(),
            ));
        }
        for (l, d) in self.in_layout.registers() {
            if target.dim_of(l)? != *d {
                return Err(Error::DimensionMismatch(format!(
                    "register {l}: target dim {} vs operator dim {d}",
                    target.dim_of(l)?
                )));
            }
        }
        let n = target.total_dim();
        let d_on = self.in_layout.total_dim();
        let on_labels: Vec<&str> = self.in_layout.labels().collect();
        let rest = target.without(&on_labels)?;
        let front = self.in_layout.tensor_with_cap(&rest, usize::MAX)?;
        // target index -> front index, and its inverse
        let perm = target.permutation_to(&front)?;
        let mut inv = vec![0usize; n];
        for (t, &f) in perm.iter().enumerate() {
            inv[f] = t;
        }
        let d_rest = rest.total_dim();
        let mut mat = CMat::from_element(n, n, C_ZERO);
        for col in 0..n {
            let f_col = perm[col];
            let (c_on, c_rest) = (f_col / d_rest, f_col % d_rest);
            for r_on in 0..d_on {
                let v = self.mat[(r_on, c_on)];
                if v == C_ZERO {
                    continue;
                }
                let row = inv[r_on * d_rest + c_rest];
                mat[(row, col)] += v;
            }
        }
        Ok(Self {
            in_layout: target.clone(),
            out_layout: target.clone(),
            mat,
            kind: self.kind,
        })
    }

    /// Applies the operator to a state (operator registers may be a subset of
    /// the state's). Result layout: `[out registers..., rest...]`.
    pub fn apply(&self, psi: &PureState) -> Result<PureState> {
        psi.apply_on(&self.mat, &self.in_layout, &self.out_layout)
    }

    /// `⟨psi| self |psi⟩` for a square operator embedded in the state space.
    pub fn expectation(&self, psi: &PureState) -> Result<Complex64> {
        let applied = self.apply(psi)?;
        let reference = psi.permuted_to(&applied.layout)?;
        reference.inner(&applied)
    }

    /// The isometry `id ⊗ |0…0⟩` that inserts the named registers of `full`
    /// (initialized to zero) into a state lacking them: maps
    /// `full.without(labels)` into `full`.
    pub fn zero_insertion(full: &RegisterLayout, labels: &[&str]) -> Result<Self> {
        for l in labels {
            full.position(l)?;
        }
        let reduced = full.without(labels)?;
        let n_in = reduced.total_dim();
        let n_out = full.total_dim();
        let mut mat = CMat::from_element(n_out, n_in, C_ZERO);
        let strides_full = full.strides();
        let strides_red = reduced.strides();
        for col in 0..n_in {
            // build the full index with inserted registers at 0
            let mut row = 0usize;
            let mut rpos = 0usize;
            for (pos, (l, _)) in full.registers().iter().enumerate() {
                if labels.contains(&l.as_str()) {
                    continue; // digit 0
                }
                let digit = (col / strides_red[rpos]) % reduced.registers()[rpos].1;
                row += digit * strides_full[pos];
                rpos += 1;
            }
            mat[(row, col)] = cr(1.0);
        }
        Self::new(reduced, full.clone(), mat, OperatorKind::General)
    }

    /// Frobenius norm of the difference, for tests and invariant checks.
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        (&self.mat - &other.mat).norm()
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> CMat {
        CMat::from_row_slice(2, 2, &[C_ZERO, cr(1.0), cr(1.0), C_ZERO])
    }

    #[test]
    fn tensor_identity_dims() {
        let a = OperatorMatrix::identity(RegisterLayout::single("a", 2).unwrap());
        let b = OperatorMatrix::identity(RegisterLayout::single("b", 3).unwrap());
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.mat, CMat::identity(6, 6));
        assert_eq!(ab.kind, OperatorKind::Projector);
    }

    #[test]
    fn tensor_rejects_label_collision() {
        let a = OperatorMatrix::identity(RegisterLayout::single("a", 2).unwrap());
        assert!(a.tensor(&a).is_err());
    }

    #[test]
    fn embed_x_on_m() {
        let layout = RegisterLayout::new([("A", 2), ("M", 2)]).unwrap();
        let x = OperatorMatrix::on(
            RegisterLayout::single("M", 2).unwrap(),
            pauli_x(),
            OperatorKind::Unitary,
        )
        .unwrap();
        let full = x.embed(&layout).unwrap();
        let psi = PureState::zero(layout.clone());
        let out = full.apply(&psi).unwrap();
        // |0⟩_A |1⟩_M is index 1
        assert_eq!(out.amplitudes[1], cr(1.0));
    }

    #[test]
    fn embed_in_opposite_orders_commutes_for_disjoint_supports() {
        let layout = RegisterLayout::new([("a", 2), ("b", 2), ("c", 2), ("d", 2)]).unwrap();
        let xa = OperatorMatrix::on(
            RegisterLayout::single("a", 2).unwrap(),
            pauli_x(),
            OperatorKind::Unitary,
        )
        .unwrap()
        .embed(&layout)
        .unwrap();
        let xc = OperatorMatrix::on(
            RegisterLayout::single("c", 2).unwrap(),
            pauli_x(),
            OperatorKind::Unitary,
        )
        .unwrap()
        .embed(&layout)
        .unwrap();
        let ab = xa.compose(&xc).unwrap();
        let ba = xc.compose(&xa).unwrap();
        assert!(ab.frobenius_distance(&ba) < 1e-12);
    }

    #[test]
    fn projector_kind_check_rejects_non_idempotent() {
        let layout = RegisterLayout::single("a", 2).unwrap();
        let m = CMat::from_row_slice(2, 2, &[cr(0.5), C_ZERO, C_ZERO, cr(0.5)]);
        assert!(OperatorMatrix::on(layout, m, OperatorKind::Projector).is_err());
    }

    #[test]
    fn zero_insertion_isometry() {
        let full = RegisterLayout::new([("a", 2), ("w", 3), ("b", 2)]).unwrap();
        let ins = OperatorMatrix::zero_insertion(&full, &["w"]).unwrap();
        // isometry: V†V = id on the reduced space
        let gram = ins.mat.adjoint() * &ins.mat;
        assert!((gram - CMat::identity(4, 4)).norm() < 1e-12);
        let psi = PureState::basis(full.without(&["w"]).unwrap(), 3).unwrap();
        let out = ins.apply(&psi).unwrap();
        // (a=1,b=1) with w=0 in full layout: 1*6 + 0*2 + 1 = 7
        assert_eq!(out.amplitudes[7], cr(1.0));
    }
}
