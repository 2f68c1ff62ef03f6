//! Jordan's lemma for two projectors and the machinery built on it.
//!
//! Any pair of projectors `(Π_A, Π_B)` decomposes the space into one- and
//! two-dimensional jointly invariant blocks. Each two-dimensional block
//! carries orthonormal bases `{|v¹⟩, |v⁰⟩}` and `{|w¹⟩, |w⁰⟩}` with
//! `Π_A = |v¹⟩⟨v¹|`, `Π_B = |w¹⟩⟨w¹|` on the block, and a value
//! `p = |⟨v¹|w¹⟩|²`. One-dimensional blocks use the same slots with the
//! absent vectors set to zero, matching the standard convention.
//!
//! Phase convention: `⟨v¹|w¹⟩ = √p ≥ 0`, so within a block
//! `|w¹⟩ = √p |v¹⟩ + √(1−p) |v⁰⟩` and `|w⁰⟩ = √(1−p) |v¹⟩ − √p |v⁰⟩`.
//! All in-block transition amplitudes are then real.

use rand::Rng;

use crate::qops::{
    cr, eigh, CMat, CVec, DensityOperator, OperatorKind, OperatorMatrix, PureState,
    RegisterLayout, C_ZERO,
};
use crate::{Error, Result, SPECTRAL_TOL};

/// One Jordan block.
#[derive(Debug, Clone)]
pub struct JordanBlock {
    /// `p = |⟨v¹|w¹⟩|²`; zero for all block shapes without both axes.
    pub value: f64,
    /// `Π_A`-side axis (zero vector if `Π_A` is rank 0 on the block).
    pub v1: CVec,
    /// Orthogonal complement of `v1` inside the block (zero if absent).
    pub v0: CVec,
    /// `Π_B`-side axis (zero vector if `Π_B` is rank 0 on the block).
    pub w1: CVec,
    /// Orthogonal complement of `w1` inside the block (zero if absent).
    pub w0: CVec,
}

impl JordanBlock {
    pub fn dim(&self) -> usize {
        if norm_nonzero(&self.v1) && norm_nonzero(&self.v0) {
            2
        } else {
            1
        }
    }

    /// Projector onto the block subspace.
    pub fn projector(&self) -> CMat {
        let n = self.v1.len();
        let mut p = CMat::from_element(n, n, C_ZERO);
        if norm_nonzero(&self.v1) {
            p += &self.v1 * self.v1.adjoint();
        }
        if norm_nonzero(&self.v0) {
            p += &self.v0 * self.v0.adjoint();
        }
        if p.norm() == 0.0 {
            // B-only or neither blocks: the w-slots hold the basis.
            if norm_nonzero(&self.w1) {
                p += &self.w1 * self.w1.adjoint();
            }
            if norm_nonzero(&self.w0) {
                p += &self.w0 * self.w0.adjoint();
            }
        }
        p
    }
}

fn norm_nonzero(v: &CVec) -> bool {
    v.norm() > 0.5
}

/// The full decomposition for a projector pair.
#[derive(Debug, Clone)]
pub struct JordanDecomposition {
    pub layout: RegisterLayout,
    pub blocks: Vec<JordanBlock>,
    pub pi_a: CMat,
    pub pi_b: CMat,
}

impl JordanDecomposition {
    /// Probability weights of a state across blocks.
    pub fn block_weights(&self, psi: &PureState) -> Result<Vec<f64>> {
        self.layout.expect_same(&psi.layout)?;
        Ok(self
            .blocks
            .iter()
            .map(|b| (b.projector() * &psi.amplitudes).norm_squared())
            .collect())
    }

    /// Σ_j over blocks with `p_j = 0` (the `Π₀` of the pseudoinverse lemma).
    pub fn zero_value_projector(&self) -> CMat {
        let n = self.layout.total_dim();
        let mut p = CMat::from_element(n, n, C_ZERO);
        for b in &self.blocks {
            if b.value <= SPECTRAL_TOL {
                p += b.projector();
            }
        }
        p
    }

    /// `E = Σ_{p_j>0} (1/p_j) Q_j`.
    pub fn pseudoinverse_weight_operator(&self) -> CMat {
        let n = self.layout.total_dim();
        let mut e = CMat::from_element(n, n, C_ZERO);
        for b in &self.blocks {
            if b.value > SPECTRAL_TOL {
                e += b.projector() * cr(1.0 / b.value);
            }
        }
        e
    }

    /// Spectral projector Σ `|v_j¹⟩⟨v_j¹|` over blocks whose value satisfies
    /// the predicate. These are the measurement-dilation projectors used by
    /// the state-transformation algorithm.
    pub fn a_axis_projector(&self, select: impl Fn(f64) -> bool) -> CMat {
        let n = self.layout.total_dim();
        let mut p = CMat::from_element(n, n, C_ZERO);
        for b in &self.blocks {
            if norm_nonzero(&b.v1) && select(b.value) {
                p += &b.v1 * b.v1.adjoint();
            }
        }
        p
    }
}

/// Computes the Jordan decomposition of two projectors on the same layout.
///
/// Blocks are extracted from the eigendecomposition of `Π_A Π_B Π_A`
/// restricted to the image of `Π_A`; the `w`-side bases are orthonormal
/// automatically (even for degenerate values, where any orthonormal
/// eigenbasis of the degenerate group is acceptable).
pub fn jordan_decompose(pa: &OperatorMatrix, pb: &OperatorMatrix) -> Result<JordanDecomposition> {
    check_projector(pa)?;
    check_projector(pb)?;
    pa.in_layout.expect_same(&pb.in_layout)?;
    let layout = pa.in_layout.clone();
    let n = layout.total_dim();
    let a = &pa.mat;
    let b = &pb.mat;

    let mut blocks: Vec<JordanBlock> = Vec::new();
    let zero = CVec::from_element(n, C_ZERO);

    // Orthonormal basis of img(Π_A), so the compressed Π_B can be
    // eigendecomposed without mixing in the kernel of Π_A.
    let eig_a = eigh(pa)?;
    let mut basis_cols: Vec<usize> = Vec::new();
    for (i, &lam) in eig_a.values.iter().enumerate() {
        if lam > 0.5 {
            basis_cols.push(i);
        }
    }
    let rank_a = basis_cols.len();
    let mut iso = CMat::from_element(n, rank_a, C_ZERO);
    for (c, &i) in basis_cols.iter().enumerate() {
        iso.set_column(c, &eig_a.vectors.column(i));
    }
    // Compressed Π_B on img(Π_A); eigenvalues are the block values.
    let compressed = iso.adjoint() * b * &iso;
    let eig = crate::qops::eigh(&OperatorMatrix::on(
        RegisterLayout::with_cap([("jordan_img_a", rank_a.max(1))], usize::MAX)?,
        if rank_a == 0 {
            CMat::identity(1, 1) * C_ZERO
        } else {
            compressed
        },
        OperatorKind::General,
    )?)?;
    let mut covered_b = CMat::from_element(n, n, C_ZERO);
    let mut covered = CMat::from_element(n, n, C_ZERO);
    for i in 0..if rank_a == 0 { 0 } else { eig.values.len() } {
        let lam = eig.values[i].clamp(0.0, 1.0);
        let v: CVec = &iso * eig.vector(i);
        if lam > 1.0 - 1e-7 {
            // Joint 1-dim block: v = w, value 1.
            covered_b += &v * v.adjoint();
            covered += &v * v.adjoint();
            blocks.push(JordanBlock {
                value: 1.0,
                v1: v.clone(),
                v0: zero.clone(),
                w1: v,
                w0: zero.clone(),
            });
        } else if lam > 1e-12 {
            // Genuine 2-dim block with value p = lam.
            let p = lam;
            let w1 = (b * &v) / cr(p.sqrt());
            let v0 = (&w1 - &v * cr(p.sqrt())) / cr((1.0 - p).sqrt());
            let w0 = &v * cr((1.0 - p).sqrt()) - &v0 * cr(p.sqrt());
            covered_b += &w1 * w1.adjoint();
            covered += &v * v.adjoint() + &v0 * v0.adjoint();
            blocks.push(JordanBlock {
                value: p,
                v1: v,
                v0,
                w1,
                w0,
            });
        } else {
            // A-only block: value 0, Π_B kills it.
            covered += &v * v.adjoint();
            blocks.push(JordanBlock {
                value: 0.0,
                v1: v.clone(),
                v0: zero.clone(),
                w1: zero.clone(),
                w0: v,
            });
        }
    }

    // B-only blocks: image of B not yet covered.
    let resid_b = b - &covered_b;
    let eig_b = eigh(&OperatorMatrix::on(
        layout.clone(),
        resid_b,
        OperatorKind::General,
    )?)?;
    for i in 0..eig_b.values.len() {
        if eig_b.values[i] > 0.5 {
            let w = eig_b.vector(i);
            covered += &w * w.adjoint();
            blocks.push(JordanBlock {
                value: 0.0,
                v1: zero.clone(),
                v0: w.clone(),
                w1: w,
                w0: zero.clone(),
            });
        }
    }

    // Neither blocks: the remaining orthogonal complement.
    let resid = CMat::identity(n, n) - &covered;
    let eig_r = eigh(&OperatorMatrix::on(
        layout.clone(),
        resid,
        OperatorKind::General,
    )?)?;
    for i in 0..eig_r.values.len() {
        if eig_r.values[i] > 0.5 {
            let u = eig_r.vector(i);
            blocks.push(JordanBlock {
                value: 0.0,
                v1: zero.clone(),
                v0: u.clone(),
                w1: zero.clone(),
                w0: u,
            });
        }
    }

    let decomp = JordanDecomposition {
        layout,
        blocks,
        pi_a: a.clone(),
        pi_b: b.clone(),
    };
    verify_decomposition(&decomp)?;
    Ok(decomp)
}

fn check_projector(p: &OperatorMatrix) -> Result<()> {
    if p.in_layout != p.out_layout {
        return Err(Error::LayoutMismatch("projector must be square".into()));
    }
    let herm = (&p.mat - p.mat.adjoint()).norm();
    let idem = (&p.mat * &p.mat - &p.mat).norm();
    if herm.max(idem) > 1e-8 {
        return Err(Error::KindCheckFailed {
            kind: "projector",
            residual: herm.max(idem),
        });
    }
    Ok(())
}

fn verify_decomposition(d: &JordanDecomposition) -> Result<()> {
    let n = d.layout.total_dim();
    let mut sum = CMat::from_element(n, n, C_ZERO);
    let mut a = CMat::from_element(n, n, C_ZERO);
    let mut b = CMat::from_element(n, n, C_ZERO);
    for blk in &d.blocks {
        sum += blk.projector();
        if norm_nonzero(&blk.v1) {
            a += &blk.v1 * blk.v1.adjoint();
        }
        if norm_nonzero(&blk.w1) {
            b += &blk.w1 * blk.w1.adjoint();
        }
    }
    let res_c = (sum - CMat::identity(n, n)).norm();
    let res_a = (a - &d.pi_a).norm();
    let res_b = (b - &d.pi_b).norm();
    let worst = res_c.max(res_a).max(res_b);
    if worst > 1e-7 {
        return Err(Error::KindCheckFailed {
            kind: "jordan decomposition",
            residual: worst,
        });
    }
    Ok(())
}

/// Projective measurement onto Jordan blocks: returns the sampled block index
/// and the renormalized post-measurement state.
pub fn jordan_measure(
    d: &JordanDecomposition,
    psi: &PureState,
    rng: &mut impl Rng,
) -> Result<(usize, PureState)> {
    let weights = d.block_weights(psi)?;
    let total: f64 = weights.iter().sum();
    if total < 1e-28 {
        return Err(Error::ZeroNorm);
    }
    let mut draw: f64 = rng.random::<f64>() * total;
    let mut idx = weights.len() - 1;
    for (j, &w) in weights.iter().enumerate() {
        if draw < w {
            idx = j;
            break;
        }
        draw -= w;
    }
    let post = d.blocks[idx].projector() * &psi.amplitudes;
    let norm = post.norm();
    let post = PureState::new(d.layout.clone(), post / cr(norm))?;
    Ok((idx, post))
}

/// Report accompanying a pseudoinverse state.
#[derive(Debug, Clone, Copy)]
pub struct PseudoinverseDiagnostics {
    /// `Tr(E ρ)`, the normalization of the construction.
    pub e_trace: f64,
    /// `Tr(Π₀ ρ)`: weight on zero-value blocks.
    pub zero_block_weight: f64,
    /// The lemma's bound `√(Tr(Π₀ρ))` on `td(ρ, Π_A σ Π_A / Tr(Π_A σ))`.
    pub trace_distance_bound: f64,
}

/// The pseudoinverse state of a state commuting with `Π_A` and supported on
/// `img Π_A`: the state on the `w¹`-axes whose block weights are
/// `Tr(Q_j ρ)/(p_j Tr(Eρ))`.
///
/// Postconditions (each an identity of the underlying lemma):
/// `Tr(Π_B σ) = 1`; `Tr(Q_j σ) = Tr(Q_j ρ)/(p_j Tr(Eρ))` for `p_j > 0`;
/// `Tr(Π₀ σ) = 0`; `Tr(Π_A σ) = (1 − Tr(Π₀ρ))/Tr(Eρ)`.
pub fn pseudoinverse_state(
    d: &JordanDecomposition,
    rho: &DensityOperator,
) -> Result<(DensityOperator, PseudoinverseDiagnostics)> {
    d.layout.expect_same(&rho.layout)?;
    let comm = (&d.pi_a * &rho.matrix - &rho.matrix * &d.pi_a).norm();
    if comm > 1e-8 {
        return Err(Error::Precondition(format!(
            "ρ does not commute with Π_A (residual {comm:.3e})"
        )));
    }
    let in_a = (&d.pi_a * &rho.matrix * &d.pi_a - &rho.matrix).norm();
    if in_a > 1e-8 {
        return Err(Error::Precondition(format!(
            "ρ is not supported on img Π_A (residual {in_a:.3e})"
        )));
    }
    let e = d.pseudoinverse_weight_operator();
    let e_trace = (&e * &rho.matrix).trace().re;
    if e_trace < 1e-14 {
        return Err(Error::Precondition("Tr(Eρ) = 0".into()));
    }
    let n = d.layout.total_dim();
    // S = Σ_{p_j>0} (1/√p_j) |w_j¹⟩⟨v_j¹|
    let mut s = CMat::from_element(n, n, C_ZERO);
    for b in &d.blocks {
        if b.value > SPECTRAL_TOL && norm_nonzero(&b.v1) && norm_nonzero(&b.w1) {
            s += (&b.w1 * b.v1.adjoint()) * cr(1.0 / b.value.sqrt());
        }
    }
    let sigma = (&s * &rho.matrix * s.adjoint()) / cr(e_trace);
    let zero_block_weight = (d.zero_value_projector() * &rho.matrix).trace().re;
    let sigma = DensityOperator::new(d.layout.clone(), sigma)?;
    Ok((
        sigma,
        PseudoinverseDiagnostics {
            e_trace,
            zero_block_weight,
            trace_distance_bound: zero_block_weight.max(0.0).sqrt(),
        },
    ))
}

/// Rotates the `Π_A`-complement component of a commuting state into `Π_A`
/// block by block (the swap `v⁰ ↔ v¹`), preserving all `E`-weights.
///
/// Requires `Π_A ρ = ρ Π_A` and `Tr(Π₀ ρ) = 0`. Postconditions:
/// `Tr(Eρ′) = Tr(Eρ)`, `Tr(Π_A ρ′) = 1`, `td(ρ,ρ′) ≤ 1 − Tr(Π_A ρ)`.
pub fn rotate_to_subspace(
    d: &JordanDecomposition,
    rho: &DensityOperator,
) -> Result<DensityOperator> {
    d.layout.expect_same(&rho.layout)?;
    let comm = (&d.pi_a * &rho.matrix - &rho.matrix * &d.pi_a).norm();
    if comm > 1e-8 {
        return Err(Error::Precondition(format!(
            "ρ does not commute with Π_A (residual {comm:.3e})"
        )));
    }
    let zero_w = (d.zero_value_projector() * &rho.matrix).trace().re;
    if zero_w > 1e-8 {
        return Err(Error::Precondition(format!(
            "ρ has weight {zero_w:.3e} on zero-value blocks"
        )));
    }
    let n = d.layout.total_dim();
    let mut u = CMat::from_element(n, n, C_ZERO);
    for b in &d.blocks {
        let two_dim = norm_nonzero(&b.v1) && norm_nonzero(&b.v0);
        if two_dim && b.value > SPECTRAL_TOL && b.value < 1.0 - SPECTRAL_TOL {
            u += &b.v1 * b.v0.adjoint() + &b.v0 * b.v1.adjoint();
        } else {
            // p ∈ {0,1}: identity on the block.
            u += b.projector();
        }
    }
    let pa = &d.pi_a;
    let out_of_a = (CMat::identity(n, n) - pa) * &rho.matrix * (CMat::identity(n, n) - pa);
    let rot = pa * &rho.matrix * pa + &u * out_of_a * u.adjoint();
    DensityOperator::new(d.layout.clone(), rot)
}
