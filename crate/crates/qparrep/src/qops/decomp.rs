
use super::{cr, CMat, CVec, OperatorKind, OperatorMatrix, C_ZERO};
use crate::{Error, Result, SPECTRAL_TOL};

/// Hermitian eigendecomposition, eigenvalues ascending.
pub struct Hermitian {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector for `values[i]`.
    pub vectors: CMat,
}

impl Hermitian {
    pub fn reconstruct(&self) -> CMat {
        let n = self.values.len();
        let d = CMat::from_diagonal(&CVec::from_iterator(n, self.values.iter().map(|&v| cr(v))));
        &self.vectors * d * self.vectors.adjoint()
    }

    pub fn vector(&self, i: usize) -> CVec {
        self.vectors.column(i).into_owned()
    }
}

/// Eigendecomposition of a Hermitian matrix (checked within tolerance).
pub(crate) fn eigh_matrix(m: &CMat) -> Result<Hermitian> {
    let herm_res = (m - m.adjoint()).norm();
    if herm_res > 1e-8 * (1.0 + m.norm()) {
        return Err(Error::NotHermitian(herm_res));
    }
    // Symmetrize to suppress roundoff before factorizing.
    let sym = (m + m.adjoint()).map(|c| c * cr(0.5));
    let se = nalgebra::SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..se.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let values: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let n = m.nrows();
    let mut vectors = CMat::from_element(n, values.len(), C_ZERO);
    for (col, &i) in idx.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(i));
    }
    Ok(Hermitian { values, vectors })
}

/// Eigendecomposition of a Hermitian [`OperatorMatrix`].
pub fn eigh(op: &OperatorMatrix) -> Result<Hermitian> {
    if op.in_layout != op.out_layout {
        return Err(Error::LayoutMismatch(
            "eigendecomposition needs a square operator".into(),
        ));
    }
    eigh_matrix(&op.mat)
}

/// Singular value decomposition `m = Σ ς_i |w_i⟩⟨v_i|`, singular values
/// descending. Total: every matrix decomposes.
pub struct Svd {
    /// Singular values, descending, length `min(nrows, ncols)`.
    pub values: Vec<f64>,
    /// Left singular vectors as columns (`w_i`).
    pub left: CMat,
    /// Right singular vectors as columns (`v_i`).
    pub right: CMat,
}

impl Svd {
    pub fn reconstruct(&self) -> CMat {
        let k = self.values.len();
        let d = CMat::from_diagonal(&CVec::from_iterator(k, self.values.iter().map(|&v| cr(v))));
        &self.left * d * self.right.adjoint()
    }
}

/// SVD of an arbitrary complex matrix. Primary route is nalgebra's SVD; if it
/// fails to converge, falls back to Hermitian eigendecomposition of the Gram
/// matrices (adequate at desk-scale dimensions).
pub fn svd(m: &CMat) -> Result<Svd> {
    let k = m.nrows().min(m.ncols());
    if let Some(f) = m.clone().try_svd(true, true, 1e-13, 4000) {
        let u = f.u.unwrap();
        let vt = f.v_t.unwrap();
        let mut idx: Vec<usize> = (0..f.singular_values.len()).collect();
        idx.sort_by(|&a, &b| {
            f.singular_values[b]
                .partial_cmp(&f.singular_values[a])
                .unwrap()
        });
        let values: Vec<f64> = idx.iter().map(|&i| f.singular_values[i]).collect();
        let mut left = CMat::from_element(m.nrows(), k, C_ZERO);
        let mut right = CMat::from_element(m.ncols(), k, C_ZERO);
        for (col, &i) in idx.iter().enumerate() {
            left.set_column(col, &u.column(i));
            right.set_column(col, &vt.row(i).adjoint());
        }
        return Ok(Svd {
            values,
            left,
            right,
        });
    }
    gram_svd(m)
}

/// SVD via eigendecomposition of `m† m` (fallback path).
fn gram_svd(m: &CMat) -> Result<Svd> {
    let gram = m.adjoint() * m;
    let eig = eigh_matrix(&gram)?;
    let k = m.nrows().min(m.ncols());
    // eigenvalues ascending -> take the top k in descending order
    let n = eig.values.len();
    let mut values = Vec::with_capacity(k);
    let mut right = CMat::from_element(m.ncols(), k, C_ZERO);
    let mut left = CMat::from_element(m.nrows(), k, C_ZERO);
    let mut used: Vec<CVec> = Vec::new();
    for (col, i) in (0..n).rev().take(k).enumerate() {
        let lam = eig.values[i].max(0.0);
        let s = lam.sqrt();
        values.push(s);
        let v = eig.vector(i);
        right.set_column(col, &v);
        let w = if s > 1e-12 {
            (m * &v) / cr(s)
        } else {
            // complete the left basis orthogonally
            complete_orthonormal(m.nrows(), &used)
        };
        used.push(w.clone());
        left.set_column(col, &w);
    }
    Ok(Svd {
        values,
        left,
        right,
    })
}

fn complete_orthonormal(dim: usize, used: &[CVec]) -> CVec {
    for b in 0..dim {
        let mut v = CVec::from_element(dim, C_ZERO);
        v[b] = cr(1.0);
        for u in used {
            let c = u.dotc(&v);
            v -= u * c;
        }
        let n = v.norm();
        if n > 1e-6 {
            return v / cr(n);
        }
    }
    unreachable!("orthogonal complement exhausted");
}

/// Operator norm (largest singular value); rectangular matrices allowed.
pub fn operator_norm(m: &CMat) -> f64 {
    // ‖m‖² = λ_max(m† m); the Gram route is robust and cheap here.
    let gram = if m.nrows() >= m.ncols() {
        m.adjoint() * m
    } else {
        m * m.adjoint()
    };
    match eigh_matrix(&gram) {
        Ok(e) => e.values.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => svd(m).map(|s| s.values[0]).unwrap_or(0.0),
    }
}

/// Which side of the threshold an eigenspace projector selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigSide {
    /// Eigenvalues `< κ`, with ties within [`SPECTRAL_TOL`] of κ included
    /// (the `<=`-side convention used for all thresholding in this crate).
    Lt,
    /// Eigenvalues `≥ κ`, excluding the tolerance band around κ.
    Geq,
}

/// Projector onto the eigenspaces of a Hermitian operator on one side of a
/// threshold. `Π_{<κ} + Π_{≥κ} = id` by construction.
pub fn eigenspace_projector(
    h: &OperatorMatrix,
    threshold: f64,
    side: EigSide,
) -> Result<OperatorMatrix> {
    let eig = eigh(h)?;
    let mat = eigenspace_projector_from(&eig, threshold, side, h.mat.nrows());
    OperatorMatrix::on(h.in_layout.clone(), mat, OperatorKind::Projector)
}

pub(crate) fn eigenspace_projector_from(
    eig: &Hermitian,
    threshold: f64,
    side: EigSide,
    n: usize,
) -> CMat {
    let mut mat = CMat::from_element(n, n, C_ZERO);
    for (i, &lam) in eig.values.iter().enumerate() {
        let low_side = lam < threshold + SPECTRAL_TOL;
        let select = match side {
            EigSide::Lt => low_side,
            EigSide::Geq => !low_side,
        };
        if select {
            let v = eig.vectors.column(i);
            mat += &v * v.adjoint();
        }
    }
    mat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::RegisterLayout;
    use crate::rng::{haar_unitary, trial_rng};
    use num_complex::Complex64;

    fn random_matrix(n: usize, m: usize, rng: &mut impl rand::Rng) -> CMat {
        CMat::from_fn(n, m, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn svd_reconstructs_random_8x8() {
        let mut rng = trial_rng(7, 0);
        let m = random_matrix(8, 8, &mut rng);
        let f = svd(&m).unwrap();
        assert!((f.reconstruct() - &m).norm() < 1e-9);
        for w in f.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn svd_of_projector_has_unit_and_zero_values() {
        let mut rng = trial_rng(7, 1);
        let u = haar_unitary(4, &mut rng);
        let mut p = CMat::from_element(4, 4, C_ZERO);
        for i in 0..2 {
            let c = u.column(i);
            p += &c * c.adjoint();
        }
        let f = svd(&p).unwrap();
        for &s in &f.values {
            assert!((s - 1.0).abs() < 1e-9 || s.abs() < 1e-9, "got {s}");
        }
    }

    #[test]
    fn svd_of_rank_one_cross_term() {
        // |0⟩⟨+| has a single singular value 1.
        let plus = CVec::from_vec(vec![cr(std::f64::consts::FRAC_1_SQRT_2); 2]);
        let zero = CVec::from_vec(vec![cr(1.0), C_ZERO]);
        let m = &zero * plus.adjoint();
        let f = svd(&m).unwrap();
        assert!((f.values[0] - 1.0).abs() < 1e-12);
        assert!(f.values[1].abs() < 1e-12);
    }

    #[test]
    fn eigh_matches_reconstruction() {
        let mut rng = trial_rng(7, 2);
        let a = random_matrix(6, 6, &mut rng);
        let h = &a + a.adjoint();
        let e = eigh_matrix(&h).unwrap();
        assert!((e.reconstruct() - &h).norm() < 1e-9);
    }

    #[test]
    fn eigenspace_projector_partitions_identity() {
        let mut rng = trial_rng(7, 3);
        let a = random_matrix(5, 5, &mut rng);
        let h = OperatorMatrix::on(
            RegisterLayout::single("x", 5).unwrap(),
            (&a + a.adjoint()).map(|c| c * cr(0.5)),
            OperatorKind::General,
        )
        .unwrap();
        let lo = eigenspace_projector(&h, 0.1, EigSide::Lt).unwrap();
        let hi = eigenspace_projector(&h, 0.1, EigSide::Geq).unwrap();
        let sum = &lo.mat + &hi.mat;
        assert!((sum - CMat::identity(5, 5)).norm() < 1e-9);
    }

    #[test]
    fn eigenspace_projector_diagonal_example() {
        let h = OperatorMatrix::on(
            RegisterLayout::single("x", 2).unwrap(),
            CMat::from_diagonal(&CVec::from_vec(vec![cr(0.2), cr(0.8)])),
            OperatorKind::General,
        )
        .unwrap();
        let lo = eigenspace_projector(&h, 0.5, EigSide::Lt).unwrap();
        assert!((lo.mat[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(lo.mat[(1, 1)].norm() < 1e-12);
        let hi = eigenspace_projector(&h, 0.5, EigSide::Geq).unwrap();
        assert!((hi.mat[(1, 1)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_examples() {
        let id2 = CMat::identity(3, 3) * cr(2.0);
        assert!((operator_norm(&id2) - 2.0).abs() < 1e-10);
        let mut p = CMat::from_element(3, 3, C_ZERO);
        p[(1, 1)] = cr(1.0);
        assert!((operator_norm(&p) - 1.0).abs() < 1e-10);
    }
}
