//! Extraction reductions: index selection, the non-uniform extraction
//! adversary, state transformation for almost-projective measurements, and
//! the uniform pipeline.
//!
//! The non-uniform adversary turns a k-fold cheating strategy with a good
//! advice state into a single-fold strategy: it simulates the first `i−1`
//! challengers itself, coherently post-selects on them accepting via
//! singular-value amplification, and routes fold `i` to the real challenger.
//! The uniform pipeline reconstructs a suitable advice state from fresh
//! copies by measuring the prefix-game value and walking the prefix index
//! down with a state-transformation loop.
//!
//! Measurements inside the uniform pipeline are *measurement handles*: any
//! `(ε, δ)`-almost-projective measurement with dilation access. The handle
//! used here is the exact Jordan measurement of a projector pair (which is
//! `(ε, δ)`-almost projective for every ε, δ ≥ 0); its dilated threshold
//! projectors on the zero-ancilla slice are the block-axis sums, so the
//! transformation loop runs on the core space directly.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::altmeas::{AlternatingFrame, Axis, Side};
use crate::jordan::{jordan_decompose, JordanDecomposition};
use crate::protocol::{
    execute, fold_label, Adversary, PrefixGame, ProtocolInstance, Round,
};
use crate::qops::{
    cr, eigh, CMat, CVec, DensityOperator, OperatorKind, OperatorMatrix, PureState,
    RegisterLayout, C_ZERO,
};
use crate::rng::haar_unitary;
use crate::svt::{AmplifierMode, SVAmplifier};
use crate::{Error, Result, SPECTRAL_TOL};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Parameters of the reductions, with the derived uniform-mode schedule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReductionParams {
    pub k: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub mu: f64,
    /// ε₀ = ε δᵏ / 4.
    pub eps0: f64,
    /// τ̂ = ε₀² / 100.
    pub tau_hat: f64,
    /// δ̂ = τ̂⁶ / (8k³).
    pub delta_hat: f64,
    /// ε̂ = ε₀² τ̂ / (10 ln(1/δ)), clamped to τ̂/2 so that τ̂ ∈ [2ε̂, 1−δ̂].
    pub eps_hat: f64,
    /// K = ⌈(2/τ̂) ln(1/δ̂)⌉.
    pub big_k: u64,
    /// T = ⌈1/√δ̂⌉.
    pub big_t: u64,
    /// t = ⌈(1/ε̂) ln(10/ε₀)⌉ — advice-copy budget.
    pub copies: u64,
}

impl ReductionParams {
    pub fn derive(k: usize, delta: f64, epsilon: f64) -> Result<Self> {
        if !(0.0 < delta && delta <= 1.0) || !(0.0 < epsilon && epsilon < 1.0) {
            return Err(Error::InvalidParameter(
                "need δ ∈ (0,1], ε ∈ (0,1)".into(),
            ));
        }
        let eps0 = epsilon * delta.powi(k as i32) / 4.0;
        let tau_hat = eps0 * eps0 / 100.0;
        let delta_hat = tau_hat.powi(6) / (8.0 * (k as f64).powi(3));
        let log_term = (1.0 / delta).ln().max(f64::MIN_POSITIVE);
        let eps_hat = (eps0 * eps0 * tau_hat / (10.0 * log_term)).min(tau_hat / 2.0);
        let big_k = ((2.0 / tau_hat) * (1.0 / delta_hat).ln()).ceil() as u64;
        let big_t = (1.0 / delta_hat.sqrt()).ceil() as u64;
        let copies = ((1.0 / eps_hat) * (10.0 / eps0).ln()).ceil() as u64;
        let p = Self {
            k,
            delta,
            epsilon,
            mu: epsilon / 4.0,
            eps0,
            tau_hat,
            delta_hat,
            eps_hat,
            big_k,
            big_t,
            copies,
        };
        if !(p.tau_hat.is_finite() && p.eps_hat > 0.0 && p.delta_hat > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "degenerate schedule: {p:?}"
            )));
        }
        Ok(p)
    }
}

// ---------------------------------------------------------------------------
// Index selection
// ---------------------------------------------------------------------------

/// Smallest index `1 ≤ i ≤ k` with `norms[i−1] ≤ δ^{i−1}` and
/// `norms[i] ≥ δ^i` (ties within the spectral tolerance accepted).
///
/// Input: `norms[i] = ‖G̃_i‖²` (the maximum prefix win probabilities), with
/// `norms[0] = 1` and the hypothesis `norms[k] ≥ δᵏ`.
pub fn select_index(norms: &[f64], delta: f64, k: usize) -> Result<usize> {
    if norms.len() != k + 1 {
        return Err(Error::InvalidParameter(format!(
            "need k+1 = {} norms, got {}",
            k + 1,
            norms.len()
        )));
    }
    if (norms[0] - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "‖G̃_0‖² = {} must be 1",
            norms[0]
        )));
    }
    if norms[k] < delta.powi(k as i32) - 1e-9 {
        return Err(Error::Precondition(format!(
            "hypothesis ‖G̃_k‖² ≥ δᵏ fails: {} < {}",
            norms[k],
            delta.powi(k as i32)
        )));
    }
    for i in 1..=k {
        let lo = norms[i - 1] <= delta.powi(i as i32 - 1) + 1e-9;
        let hi = norms[i] >= delta.powi(i as i32) - 1e-9;
        if lo && hi {
            return Ok(i);
        }
    }
    // Unreachable given the endpoint conditions, by the discrete
    // intermediate value theorem.
    Err(Error::Precondition(
        "no qualifying index despite valid endpoints".into(),
    ))
}

// ---------------------------------------------------------------------------
// Planted instances
// ---------------------------------------------------------------------------

/// A 3-message protocol with a decision planted so that the single-fold
/// prefix operator has known eigenvalues, together with per-fold advice
/// vectors achieving them. Ground truth for extraction experiments.
pub struct PlantedInstance {
    pub protocol: ProtocolInstance,
    /// Distinct planted values, each with an advice vector achieving it
    /// exactly (an eigenvector of the single-fold `G̃₁`).
    pub planted: Vec<(f64, PureState)>,
    /// Single-fold adversary unitary `[A, R0] → [A, M1]`.
    pub fold_unitary: OperatorMatrix,
}

/// Dimensions of a planted instance. The private register is a spectator
/// (product with the message dynamics) so that decision planting stays exact.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlantedDims {
    pub adversary: usize,
    pub message: usize,
    pub workspace: usize,
}

impl PlantedDims {
    pub fn qubit() -> Self {
        Self {
            adversary: 2,
            message: 2,
            workspace: 2,
        }
    }
}

/// Builds a planted instance whose decision projector has one planted
/// direction per requested value. Requirements: `workspace ≥ 2`, and
/// `message ≥ #values` (one orthogonal message vector per value, plus room
/// for the padding directions used by values below 1).
pub fn planted_instance(
    dims: PlantedDims,
    values: &[f64],
    rng: &mut impl Rng,
) -> Result<PlantedInstance> {
    let a = dims.adversary;
    let m = dims.message;
    let w = dims.workspace;
    if w < 2 {
        return Err(Error::InvalidParameter("workspace must be ≥ 2".into()));
    }
    if values.len() > m {
        return Err(Error::InvalidParameter(format!(
            "at most {m} planted values fit in message dimension {m}"
        )));
    }
    for &v in values {
        if !(0.0 < v && v <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "planted value {v} outside (0,1]"
            )));
        }
    }

    // Challenger unitary and the message part of the adversary unitary.
    let c_mat = haar_unitary(m * w, rng);
    let u_a = haar_unitary(a, rng);
    let u_m = haar_unitary(m, rng);

    let c_op = OperatorMatrix::new(
        RegisterLayout::new([("M0", m), ("W0", w)])?,
        RegisterLayout::new([("R0", m), ("W1", w)])?,
        c_mat,
        OperatorKind::Unitary,
    )?;
    let a1 = OperatorMatrix::new(
        RegisterLayout::new([("A", a), ("R0", m)])?,
        RegisterLayout::new([("A", a), ("M1", m)])?,
        u_a.kronecker(&u_m),
        OperatorKind::Unitary,
    )?;

    // Orthonormal message-space advice directions, one per value.
    let basis = haar_unitary(m, rng);
    // Shared spectator state on A.
    let xi = haar_unitary(a, rng).column(0).into_owned();

    // Reachable final vectors (M1, W1 part only): φ_x = (U_M ⊗ id_W) C (b_x ⊗ |0⟩).
    let mw_layout = RegisterLayout::new([("M1", m), ("W1", w)])?;
    let reach = |vec_m: &CVec, w_idx: usize| -> Result<CVec> {
        let mut inp = CVec::from_element(m * w, C_ZERO);
        for r in 0..m {
            inp[r * w + w_idx] = vec_m[r];
        }
        let mid = &c_op.mat * inp;
        // apply U_M on the message factor of [R0, W1] -> [M1, W1]
        let mut out = CVec::from_element(m * w, C_ZERO);
        for r_out in 0..m {
            for r_in in 0..m {
                let u = u_m[(r_out, r_in)];
                if u == C_ZERO {
                    continue;
                }
                for wv in 0..w {
                    out[r_out * w + wv] += u * mid[r_in * w + wv];
                }
            }
        }
        Ok(out)
    };

    let mut d_mat = CMat::from_element(m * w, m * w, C_ZERO);
    let mut planted = Vec::new();
    let advice_layout = RegisterLayout::new([("A", a), ("M0", m)])?;
    for (x, &v) in values.iter().enumerate() {
        let alpha_m = basis.column(x).into_owned();
        let chi = reach(&alpha_m, 0)?;
        let theta = if v >= 1.0 - 1e-15 {
            chi
        } else {
            // Padding direction from the W₀ ≠ 0 sector: orthogonal to every
            // reachable-from-zero vector and to the other paddings.
            let pad = reach(&alpha_m, 1)?;
            &chi * cr(v.sqrt()) + &pad * cr((1.0 - v).sqrt())
        };
        d_mat += &theta * theta.adjoint();
        // Advice on [A, M0]: ξ ⊗ α.
        let mut adv = CVec::from_element(a * m, C_ZERO);
        for ai in 0..a {
            for mi in 0..m {
                adv[ai * m + mi] = xi[ai] * alpha_m[mi];
            }
        }
        planted.push((v, PureState::new(advice_layout.clone(), adv)?));
    }
    let decision = OperatorMatrix::on(mw_layout, d_mat, OperatorKind::Projector)?;
    let protocol = ProtocolInstance::new(
        crate::protocol::Challenger {
            rounds: vec![Round {
                unitary: c_op,
                message_labels: vec!["M0".into()],
                response_labels: vec!["R0".into()],
            }],
            decision,
            decision_projective: true,
            final_message_labels: vec!["M1".into()],
        },
        "planted-3msg",
    )?;
    Ok(PlantedInstance {
        protocol,
        planted,
        fold_unitary: a1,
    })
}

impl PlantedInstance {
    /// The k-fold adversary playing planted value `pattern[j]` on fold `j+1`:
    /// unitaries are fold products; the advice is the product of the chosen
    /// per-fold vectors.
    pub fn k_fold_adversary(&self, pattern: &[usize]) -> Result<Adversary> {
        let k = pattern.len();
        let single = self.single_adversary(pattern[0])?;
        let mut product = crate::protocol::product_adversary(&single, k)?;
        // Overwrite the advice with the requested per-fold pattern.
        let mut advice: Option<PureState> = None;
        for (j, &x) in pattern.iter().enumerate() {
            let fold_state = self.fold_advice(x, j + 1)?;
            advice = Some(match advice {
                None => fold_state,
                Some(prev) => prev.tensor_with_cap(&fold_state, usize::MAX)?,
            });
        }
        product.advice = advice.expect("k >= 1");
        Ok(product)
    }

    /// Advice vector for planted value index `x` relabeled to fold `j`.
    pub fn fold_advice(&self, x: usize, fold: usize) -> Result<PureState> {
        let base = &self.planted[x].1;
        let layout = RegisterLayout::with_cap(
            base.layout
                .registers()
                .iter()
                .map(|(l, d)| (fold_label(l, fold), *d)),
            usize::MAX,
        )?;
        PureState::new(layout, base.amplitudes.clone())
    }

    /// Single-fold adversary playing planted value index `x`.
    pub fn single_adversary(&self, x: usize) -> Result<Adversary> {
        let advice = self.planted[x].1.clone();
        let n = advice.dim();
        let a0 = OperatorMatrix::new(
            advice.layout.clone(),
            advice.layout.clone(),
            CMat::identity(n, n),
            OperatorKind::Unitary,
        )?;
        Ok(Adversary {
            unitaries: vec![a0, self.fold_unitary.clone()],
            advice,
        })
    }

    /// The k-fold adversary unitary (`A₁^{⊗k}` relabeled).
    pub fn k_fold_unitary(&self, k: usize) -> Result<OperatorMatrix> {
        let single = self.single_adversary(0)?;
        let product = crate::protocol::product_adversary(&single, k)?;
        Ok(product.unitaries[1].clone())
    }
}

// ---------------------------------------------------------------------------
// Measurement handles
// ---------------------------------------------------------------------------

/// The exact Jordan measurement of a projector pair as an almost-projective
/// measurement handle: outcomes are block values delivered on the `Π_A`-side
/// axes (a failed `Π_A` component aborts), which is `(ε, δ)`-almost
/// projective for every declared `ε, δ ≥ 0`.
pub struct JordanHandle {
    pub decomposition: JordanDecomposition,
    pub eps: f64,
    pub delta: f64,
}

impl JordanHandle {
    pub fn new(pa: &OperatorMatrix, pb: &OperatorMatrix, eps: f64, delta: f64) -> Result<Self> {
        Ok(Self {
            decomposition: jordan_decompose(pa, pb)?,
            eps,
            delta,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.decomposition.layout
    }

    /// Dilation projector selecting outcomes `≥ p` on the zero-ancilla slice:
    /// the sum of `|v_j¹⟩⟨v_j¹|` over blocks with value at least `p` (ties
    /// within tolerance included).
    pub fn outcome_geq_projector(&self, p: f64) -> CMat {
        self.decomposition
            .a_axis_projector(|v| v >= p - SPECTRAL_TOL)
    }

    /// Measures: samples a block axis. Returns `(Some(value), post)` when the
    /// state lands on a `Π_A`-side axis, `(None, post)` on the complement.
    pub fn measure(&self, psi: &PureState, rng: &mut impl Rng) -> Result<(Option<f64>, PureState)> {
        let d = &self.decomposition;
        let mut weights = Vec::new();
        let mut branches = Vec::new();
        for b in &d.blocks {
            if b.v1.norm() > 0.5 {
                let amp = b.v1.dotc(&psi.amplitudes);
                weights.push(amp.norm_sqr());
                branches.push(Some((b.value, &b.v1, amp)));
            }
        }
        let pass: f64 = weights.iter().sum();
        let total = psi.norm_squared();
        if rng.random::<f64>() * total >= pass {
            // Abort branch: complement of all v¹ axes.
            let mut keep = psi.amplitudes.clone();
            for b in &d.blocks {
                if b.v1.norm() > 0.5 {
                    let amp = b.v1.dotc(&psi.amplitudes);
                    keep -= &b.v1 * amp;
                }
            }
            let n = keep.norm();
            let post = if n > 1e-14 {
                PureState::new(d.layout.clone(), keep / cr(n))?
            } else {
                psi.clone()
            };
            return Ok((None, post));
        }
        // Sample the block proportionally.
        let mut draw = rng.random::<f64>() * pass;
        let mut pick = branches.len() - 1;
        for (j, &w) in weights.iter().enumerate() {
            if draw < w {
                pick = j;
                break;
            }
            draw -= w;
        }
        let (value, v1, _) = branches[pick].expect("v1 branch");
        Ok((Some(value), PureState::new(d.layout.clone(), v1.clone())?))
    }

    /// Outcome distribution over block values (plus abort mass) without
    /// collapsing: exact probabilities for bound evaluation.
    pub fn outcome_distribution(&self, psi: &PureState) -> Result<(Vec<(f64, f64)>, f64)> {
        let d = &self.decomposition;
        let mut out = Vec::new();
        let mut pass = 0.0;
        for b in &d.blocks {
            if b.v1.norm() > 0.5 {
                let w = b.v1.dotc(&psi.amplitudes).norm_sqr();
                if w > 0.0 {
                    out.push((b.value, w));
                    pass += w;
                }
            }
        }
        let abort = (psi.norm_squared() - pass).max(0.0);
        Ok((out, abort))
    }

    /// Probability that a measurement outcome would be `≥ x` (aborts count as
    /// failures).
    pub fn prob_outcome_geq(&self, psi: &PureState, x: f64) -> Result<f64> {
        let (dist, _) = self.outcome_distribution(psi)?;
        Ok(dist
            .iter()
            .filter(|(v, _)| *v >= x - SPECTRAL_TOL)
            .map(|(_, w)| w)
            .sum())
    }

    /// Probability that a measurement outcome would be `< x` (aborts count as
    /// failures).
    pub fn prob_outcome_lt(&self, psi: &PureState, x: f64) -> Result<f64> {
        let (dist, _) = self.outcome_distribution(psi)?;
        Ok(dist
            .iter()
            .filter(|(v, _)| *v < x - SPECTRAL_TOL)
            .map(|(_, w)| w)
            .sum())
    }

    /// Applies the dilation unitary and discards the record: dephases across
    /// block axes (trajectory form: samples a branch without reporting it).
    pub fn dephase(&self, psi: &PureState, rng: &mut impl Rng) -> Result<PureState> {
        Ok(self.measure(psi, rng)?.1)
    }
}

// ---------------------------------------------------------------------------
// State transformation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateTransFlag {
    /// The target measurement `M₁` already reads below `β`: the state was
    /// converted ("good for `M₁`" side of the guarantee).
    Zero,
    /// The repeat-frequency check certified joint overlap: the state is good
    /// for `M₀` and reads below `β` under `M₁`.
    One,
    /// Abort (`⊥`).
    Abort,
}

/// Outcome of one run of the state-transformation loop.
#[derive(Debug, Clone)]
pub struct StateTransOutcome {
    pub flag: StateTransFlag,
    pub state: PureState,
    /// The `M₀` outcomes `α_i` observed per iteration.
    pub alpha_trace: Vec<f64>,
    pub iterations: u64,
    /// Total dilated projector applications.
    pub measurements: u64,
}

/// Parameters of the state transformation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StateTransParams {
    pub eps: f64,
    pub delta: f64,
    pub tau: f64,
    pub beta: f64,
}

/// Hard ceiling on sequential repair steps; exceeding it is reported as a
/// loud error rather than a silent abort, since it means the simulation
/// budget (not the algorithm's own cap) ran out.
const REPAIR_SEQUENTIAL_CEILING: u64 = 50_000_000;

/// The state-transformation loop for two almost-projective measurement
/// handles on the same space.
///
/// Per iteration (at most `K = ⌈(2/τ) ln(1/δ)⌉`): measure `M₀` (outcome
/// `α_i`, abort on its failure branch); measure the dilated `Π̃¹_{<β}` — on
/// outcome 0 dephase with `M₁` and return [`StateTransFlag::Zero`]; alternate
/// `Π̃⁰_{≥α_i−ε}, Π̃¹_{<β}` for `2K−2` recorded bits; repair by alternating
/// until `Π̃⁰ → 1` (abort after `2TK+1` steps, `T = ⌈1/√δ⌉`); if the repeat
/// fraction of the recorded bits is at least `1−τ`, return
/// [`StateTransFlag::One`]; otherwise dephase with `M₀` and continue.
///
/// Guarantees verified by the acceptance suite: `Pr[⊥] ≤ 4K√δ`;
/// `Pr[0 ∧ M₁(σ) < β−ε] ≤ δ`; `Pr[1 ∧ M₀(σ) < α−2Kε] ≤ γ + √(τ+ε+δ)`;
/// `Pr[1 ∧ M₁(σ) > β] ≤ τ+ε+δ`.
pub fn state_trans(
    m0: &JordanHandle,
    m1: &JordanHandle,
    psi: &PureState,
    params: StateTransParams,
    rng: &mut impl Rng,
) -> Result<StateTransOutcome> {
    let StateTransParams {
        eps,
        delta,
        tau,
        beta,
    } = params;
    if !(tau >= 2.0 * eps && tau <= 1.0 - delta) {
        return Err(Error::InvalidParameter(format!(
            "τ = {tau} outside [2ε, 1−δ] = [{}, {}]",
            2.0 * eps,
            1.0 - delta
        )));
    }
    m0.layout().expect_same(m1.layout())?;
    m0.layout().expect_same(&psi.layout)?;
    let big_k = ((2.0 / tau) * (1.0 / delta).ln()).ceil().max(1.0) as u64;
    let big_t = (1.0 / delta.sqrt()).ceil() as u64;
    let repair_cap = (2u128 * big_t as u128 * big_k as u128 + 1).min(u64::MAX as u128) as u64;

    let mut state = psi.normalized()?;
    let mut alpha_trace = Vec::new();
    let mut measurements: u64 = 0;
    // Joint frames cached by the α-threshold block mask of m0 (β is fixed).
    let mut frame_cache: HashMap<Vec<bool>, JordanDecomposition> = HashMap::new();

    for iter in 1..=big_k {
        // (a) measure M0
        let (outcome, post) = m0.measure(&state, rng)?;
        measurements += 1;
        state = post;
        let alpha_i = match outcome {
            Some(v) => v,
            None => {
                return Ok(StateTransOutcome {
                    flag: StateTransFlag::Abort,
                    state,
                    alpha_trace,
                    iterations: iter,
                    measurements,
                })
            }
        };
        alpha_trace.push(alpha_i);

        // Projectors for this iteration.
        let p0_mat = m0.outcome_geq_projector(alpha_i - eps);
        let p1_lt_mat = {
            let n = state.dim();
            CMat::identity(n, n) - m1.outcome_geq_projector(beta)
        };

        // (c) measure Π̃¹_{<β}
        let w_lt = (&p1_lt_mat * &state.amplitudes).norm_squared();
        measurements += 1;
        let b1 = if rng.random::<f64>() < w_lt { 1 } else { 0 };
        if b1 == 0 {
            let keep = &state.amplitudes - &p1_lt_mat * &state.amplitudes;
            let n = keep.norm();
            if n > 1e-14 {
                state = PureState::new(state.layout.clone(), keep / cr(n))?;
            }
            let dephased = m1.dephase(&state, rng)?;
            return Ok(StateTransOutcome {
                flag: StateTransFlag::Zero,
                state: dephased,
                alpha_trace,
                iterations: iter,
                measurements: measurements + 1,
            });
        }
        let kept = &p1_lt_mat * &state.amplitudes;
        let norm = kept.norm();
        state = PureState::new(state.layout.clone(), kept / cr(norm))?;

        // (d) alternate 2K−2 recorded measurements in the joint frame.
        let mask: Vec<bool> = m0
            .decomposition
            .blocks
            .iter()
            .map(|b| b.v1.norm() > 0.5 && b.value >= alpha_i - eps - SPECTRAL_TOL)
            .collect();
        if !frame_cache.contains_key(&mask) {
            let layout = state.layout.clone();
            let pa = OperatorMatrix::on(layout.clone(), p0_mat.clone(), OperatorKind::Projector)?;
            let pb = OperatorMatrix::on(layout, p1_lt_mat.clone(), OperatorKind::Projector)?;
            frame_cache.insert(mask.clone(), jordan_decompose(&pa, &pb)?);
        }
        let joint = &frame_cache[&mask];
        // Current state is in img(Π̃¹_{<β}); express it on the B-side axes.
        let mut amps = Vec::new();
        let mut values = Vec::new();
        for b in &joint.blocks {
            values.push(b.value);
            amps.push(if b.w1.norm() > 0.5 {
                b.w1.dotc(&state.amplitudes)
            } else {
                C_ZERO
            });
        }
        let mut frame = AlternatingFrame::from_amplitudes(values, amps, Axis::B1);
        let recorded = 2 * big_k - 2;
        let reps = frame.fast_forward(recorded, rng);
        measurements += recorded;
        let num_reps = reps as f64 / recorded.max(1) as f64;

        // (e) repair until Π̃⁰ → 1.
        let budget = repair_cap.min(REPAIR_SEQUENTIAL_CEILING);
        let spent = frame.run_until_side_one(Side::A, budget, rng);
        match spent {
            Some(s) => {
                measurements += s;
            }
            None => {
                if repair_cap > REPAIR_SEQUENTIAL_CEILING {
                    return Err(Error::SimulationBudget(format!(
                        "repair loop exceeded the sequential ceiling \
                         ({REPAIR_SEQUENTIAL_CEILING} steps) before the cap {repair_cap}"
                    )));
                }
                let dense = frame_state(joint, &frame, &state.layout)?;
                return Ok(StateTransOutcome {
                    flag: StateTransFlag::Abort,
                    state: dense,
                    alpha_trace,
                    iterations: iter,
                    measurements: measurements + repair_cap,
                });
            }
        }
        state = frame.state_on_a1(joint)?;

        // (f) repeat-fraction check on (b₁ = 1, b₂, …, b_{2K−1}).
        if num_reps >= 1.0 - tau {
            return Ok(StateTransOutcome {
                flag: StateTransFlag::One,
                state,
                alpha_trace,
                iterations: iter,
                measurements,
            });
        }

        // (g) dephase with M0 and continue.
        state = m0.dephase(&state, rng)?;
        measurements += 1;
    }
    Ok(StateTransOutcome {
        flag: StateTransFlag::Abort,
        state,
        alpha_trace,
        iterations: big_k,
        measurements,
    })
}

/// Materializes a frame's state on the full space, whatever axis it is on.
fn frame_state(
    d: &JordanDecomposition,
    frame: &AlternatingFrame,
    layout: &RegisterLayout,
) -> Result<PureState> {
    let n = layout.total_dim();
    let mut v = CVec::from_element(n, C_ZERO);
    for (j, b) in d.blocks.iter().enumerate() {
        let axis_vec = match frame.axis {
            Axis::A1 => &b.v1,
            Axis::A0 => &b.v0,
            Axis::B1 => &b.w1,
            Axis::B0 => &b.w0,
        };
        if axis_vec.norm() > 0.5 {
            v += axis_vec * frame.amps[j];
        }
    }
    let norm = v.norm();
    if norm < 1e-14 {
        return Err(Error::ZeroNorm);
    }
    PureState::new(layout.clone(), v / cr(norm))
}

// ---------------------------------------------------------------------------
// Non-uniform extraction
// ---------------------------------------------------------------------------

/// Diagnostics of one extraction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub chosen_index: usize,
    /// Overlap of the advice with the `> δ^{i−1}` spectral part of `G̃_{i−1}`
    /// (precondition: at most 1e−9).
    pub high_overlap: f64,
    /// `Tr(G̃_i · advice)` (precondition: at least `τ δ^i`).
    pub prefix_trace: f64,
    /// Success probability of the extracted single-fold adversary, counting
    /// only non-aborted branches.
    pub success_probability: f64,
    /// Probability that the internal post-selection aborts.
    pub abort_probability: f64,
    /// The lemma's lower bound `(1−2μ)² τ δ`.
    pub guarantee: f64,
    /// Amplifier polynomial degree (or the degree formula value in exact
    /// mode).
    pub amplifier_degree: u64,
    /// Invocations of the k-fold adversary unitary.
    pub adversary_uses: u64,
    /// Invocations of the single-fold challenger unitary.
    pub challenger_uses: u64,
    /// Invocations of the single-fold decision.
    pub decision_uses: u64,
}

/// The extracted single-fold adversary: a genuine [`Adversary`] for the
/// original protocol whose second unitary carries two flag qubits recording
/// the internal post-selection; success is counted on the flag-ok branch.
pub struct ExtractedAdversary {
    pub adversary: Adversary,
    /// Projector (on the flag registers) marking the non-aborted branch.
    pub flag_ok: OperatorMatrix,
}

impl ExtractedAdversary {
    /// Executes the single-fold protocol and counts acceptance only on the
    /// non-aborted branch.
    pub fn conservative_success(&self, p3: &ProtocolInstance) -> Result<f64> {
        let run = execute(p3, &self.adversary)?;
        let flag = self.flag_ok.embed(&run.final_state.layout)?;
        let decision = p3.challenger.decision.embed(&run.final_state.layout)?;
        let flagged = flag.apply(&run.final_state)?.permuted_to(&run.final_state.layout)?;
        Ok(decision.expectation(&flagged)?.re.clamp(0.0, 1.0))
    }
}

/// Parameters of the non-uniform extraction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AmpParams {
    pub mu: f64,
    pub delta: f64,
    pub tau: f64,
    pub mode: AmplifierMode,
}

/// The non-uniform extraction adversary.
///
/// Verifies the advice preconditions numerically, builds the singular-value
/// amplifier for `Π` (first `i−1` folds correctly initialized) and
/// `Π̃ = A† D^{(<i)} A` with `γ = (1−μ)/√(δ^{i−1})`, `ν = μ√(τδ)`, and
/// assembles the single-fold adversary that routes fold `i` to the real
/// challenger. Returns the adversary together with its report; the reported
/// success uses direct simulation of the algorithm's branches and is
/// guaranteed at least `(1−2μ)² τ δ`.
pub fn amp_nonuniform(
    game: &PrefixGame,
    advice: &PureState,
    i: usize,
    params: AmpParams,
) -> Result<(ExtractedAdversary, ExtractionReport)> {
    let advice_density = DensityOperator::from_pure(advice)?;
    let (extracted, report) = amp_nonuniform_inner(game, &advice_density, i, params, true)?;
    Ok((extracted.expect("pure advice builds an adversary"), report))
}

/// Ensemble form for mixed advice (the algorithm is linear in the advice
/// density operator); no adversary object is materialized.
pub fn amp_nonuniform_mixed(
    game: &PrefixGame,
    advice: &DensityOperator,
    i: usize,
    params: AmpParams,
) -> Result<ExtractionReport> {
    Ok(amp_nonuniform_inner(game, advice, i, params, false)?.1)
}

fn amp_nonuniform_inner(
    game: &PrefixGame,
    advice: &DensityOperator,
    i: usize,
    params: AmpParams,
    build_adversary: bool,
) -> Result<(Option<ExtractedAdversary>, ExtractionReport)> {
    let AmpParams {
        mu,
        delta,
        tau,
        mode,
    } = params;
    if i < 1 || i > game.k {
        return Err(Error::InvalidParameter(format!(
            "extraction index {i} outside 1..={}",
            game.k
        )));
    }
    if !(0.0 < mu && mu < 0.5) {
        return Err(Error::InvalidParameter("μ must lie in (0, 1/2)".into()));
    }
    if !(0.0 < tau && tau <= 1.0) || !(0.0 < delta && delta <= 1.0) {
        return Err(Error::InvalidParameter("need τ, δ ∈ (0,1]".into()));
    }

    // Extend the advice to the T_i input layout (missing registers |0⟩).
    let t_i = game.prefix_amplitude_operator(i)?;
    let advice_i = extend_density(advice, &t_i.in_layout)?;

    // Precondition 1: no overlap with the > δ^{i−1} spectral part of G̃_{i−1}
    // (advice extended by |0⟩ on fold i's workspace).
    let high_overlap = if i == 1 {
        0.0
    } else {
        let g_prev = game.prefix_success_operator(i - 1)?;
        let advice_prev = extend_density(&advice_i, &g_prev.in_layout)?;
        let eig = eigh(&g_prev)?;
        let mut overlap = 0.0;
        for (idx, &lam) in eig.values.iter().enumerate() {
            if lam > delta.powi(i as i32 - 1) + SPECTRAL_TOL {
                let v = eig.vector(idx);
                overlap += (v.adjoint() * &advice_prev.matrix * &v)[(0, 0)].re;
            }
        }
        overlap.max(0.0)
    };
    if high_overlap > 1e-9 {
        return Err(Error::Precondition(format!(
            "advice has overlap {high_overlap:.3e} with the high spectral part of G̃_{}",
            i - 1
        )));
    }

    // Precondition 2: Tr(G̃_i · advice) ≥ τ δ^i.
    let g_i_mat = t_i.mat.adjoint() * &t_i.mat;
    let prefix_trace = (&g_i_mat * &advice_i.matrix).trace().re;
    let floor = tau * delta.powi(i as i32);
    if prefix_trace < floor - 1e-9 {
        return Err(Error::Precondition(format!(
            "Tr(G̃_{i}·advice) = {prefix_trace:.6} below τδ^{i} = {floor:.6}"
        )));
    }

    // Amplifier (skipped for i = 1, where no post-selection is needed).
    let gamma = (1.0 - mu) / delta.powf((i as f64 - 1.0) / 2.0);
    let nu = mu * (tau * delta).sqrt();
    let amplifier = if i >= 2 {
        let (pi, pi_tilde) = amplifier_projectors(game, i)?;
        Some(SVAmplifier::new(pi, pi_tilde, gamma, mu, nu, mode)?)
    } else {
        None
    };
    let degree_formula = ((gamma / mu) * (gamma / nu).ln()).ceil().max(1.0) as u64;
    let amplifier_degree = amplifier
        .as_ref()
        .and_then(|a| a.degree())
        .map(|d| d as u64)
        .unwrap_or(degree_formula);

    // Direct simulation of the branches, averaged over the advice ensemble.
    let mut success = 0.0;
    let mut abort = 0.0;
    let ensemble = advice_i.eigen_ensemble()?;
    for (w, aux) in &ensemble {
        let (s, a) = simulate_extraction(game, aux, i, amplifier.as_ref())?;
        success += w * s;
        abort += w * a;
    }

    let report = ExtractionReport {
        chosen_index: i,
        high_overlap,
        prefix_trace,
        success_probability: success,
        abort_probability: abort,
        guarantee: (1.0 - 2.0 * mu).powi(2) * tau * delta,
        amplifier_degree,
        adversary_uses: 2 * amplifier_degree + 1,
        challenger_uses: game.k as u64 + 2 * amplifier_degree * (i as u64 - 1),
        decision_uses: amplifier_degree * (i as u64 - 1) + i as u64,
    };

    let extracted = if build_adversary {
        let aux0 = ensemble
            .iter()
            .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .map(|(_, s)| s.clone())
            .ok_or(Error::ZeroNorm)?;
        Some(build_extracted_adversary(
            game,
            &aux0,
            i,
            amplifier.as_ref(),
        )?)
    } else {
        None
    };
    Ok((extracted, report))
}

fn extend_density(rho: &DensityOperator, target: &RegisterLayout) -> Result<DensityOperator> {
    if &rho.layout == target {
        return Ok(rho.clone());
    }
    let missing: Vec<&str> = target
        .labels()
        .filter(|l| !rho.layout.contains(l))
        .collect();
    let ins = OperatorMatrix::zero_insertion(target, &missing)?;
    // Reorder ρ to match the reduced layout of the insertion.
    let perm = rho.layout.permutation_to(&ins.in_layout)?;
    let n = rho.matrix.nrows();
    let mut reordered = CMat::from_element(n, n, C_ZERO);
    for r in 0..n {
        for c in 0..n {
            reordered[(perm[r], perm[c])] = rho.matrix[(r, c)];
        }
    }
    let big = &ins.mat * reordered * ins.mat.adjoint();
    DensityOperator::new(target.clone(), big)
}

fn extend_state(psi: &PureState, target: &RegisterLayout) -> Result<PureState> {
    let mut state = psi.clone();
    for (l, d) in target.registers() {
        if !state.layout.contains(l) {
            state = state.append_register(l, *d, 0)?;
        }
    }
    state.permuted_to(target)
}

/// The amplifier's projector pair on the post-challenge space
/// `[private…, R₀ folds…, W₁^{(<i)}]`:
/// `Π = C^{(<i)} |0⟩⟨0|_{W₀^{(<i)}} (C^{(<i)})†` (with identity on everything
/// else) and `Π̃ = A† D^{(<i)} A`.
fn amplifier_projectors(
    game: &PrefixGame,
    i: usize,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    // Build the operator space: private + all response registers + W1 of the
    // simulated folds < i.
    let a = game.adversary_unitary;
    let mut layout = a.in_layout.clone();
    let round
        = &game.protocol.challenger.rounds[0];
    for j in 1..i {
        let w_out = round.workspace_out()?;
        for (l, d) in w_out.registers() {
            layout = layout.tensor_with_cap(
                &RegisterLayout::with_cap([(fold_label(l, j), *d)], usize::MAX)?,
                usize::MAX,
            )?;
        }
    }
    let n = layout.total_dim();

    // Π: conjugate the zero projector on W0^{(<i)} by C^{(<i)}; acts on
    // (R0#j, W1#j) for j < i.
    let mut pi_mat = CMat::identity(n, n);
    if i >= 2 {
        let mut pi_small: Option<OperatorMatrix> = None;
        for j in 1..i {
            // |0⟩⟨0| on W0#j conjugated by fold-j challenger.
            let c_j = OperatorMatrix::new(
                relabel(&round.unitary.in_layout, j)?,
                relabel(&round.unitary.out_layout, j)?,
                round.unitary.mat.clone(),
                OperatorKind::Unitary,
            )?;
            let w_in = round.workspace_in()?;
            let mut zero_small: Option<OperatorMatrix> = None;
            for (l, d) in w_in.registers() {
                let mut m = CMat::from_element(*d, *d, C_ZERO);
                m[(0, 0)] = cr(1.0);
                let op = OperatorMatrix::on(
                    RegisterLayout::with_cap([(fold_label(l, j), *d)], usize::MAX)?,
                    m,
                    OperatorKind::Projector,
                )?;
                zero_small = Some(match zero_small {
                    None => op,
                    Some(prev) => prev.tensor_with_cap(&op, usize::MAX)?,
                });
            }
            // id on M0#j ⊗ |0⟩⟨0| on W0#j, then conjugate.
            let msg_dim: usize = round
                .message_labels
                .iter()
                .map(|l| round.unitary.in_layout.dim_of(l).unwrap())
                .product();
            let msg_layout = RegisterLayout::with_cap(
                round
                    .message_labels
                    .iter()
                    .map(|l| (fold_label(l, j), round.unitary.in_layout.dim_of(l).unwrap())),
                usize::MAX,
            )?;
            let id_msg = OperatorMatrix::on(
                msg_layout,
                CMat::identity(msg_dim, msg_dim),
                OperatorKind::Projector,
            )?;
            let zero_full = id_msg.tensor_with_cap(&zero_small.expect("nonempty W"), usize::MAX)?;
            let zero_perm = OperatorMatrix::new(
                c_j.in_layout.clone(),
                c_j.in_layout.clone(),
                permute_square(&zero_full, &c_j.in_layout)?,
                OperatorKind::Projector,
            )?;
            let conj = c_j.compose(&zero_perm)?.compose(&c_j.adjoint())?;
            let proj = OperatorMatrix::new(
                c_j.out_layout.clone(),
                c_j.out_layout.clone(),
                conj.mat,
                OperatorKind::Projector,
            )?;
            pi_small = Some(match pi_small {
                None => proj,
                Some(prev) => prev.tensor_with_cap(&proj, usize::MAX)?,
            });
        }
        pi_mat = pi_small.expect("i >= 2").embed(&layout)?.mat;
    }

    // Π̃ = A† D^{(<i)} A via columnwise application.
    let a_dag = a.adjoint();
    let n_cols = n;
    let mut pt_mat = CMat::from_element(n, n, C_ZERO);
    for col in 0..n_cols {
        let mut state = PureState::basis(layout.clone(), col)?;
        state = a.apply(&state)?;
        for j in 1..i {
            let d_j = OperatorMatrix::new(
                relabel(&game.protocol.challenger.decision.in_layout, j)?,
                relabel(&game.protocol.challenger.decision.in_layout, j)?,
                game.protocol.challenger.decision.mat.clone(),
                game.protocol.challenger.decision.kind,
            )?;
            state = d_j.apply(&state)?;
        }
        state = a_dag.apply(&state)?;
        let image = state.permuted_to(&layout)?;
        for row in 0..n {
            pt_mat[(row, col)] = image.amplitudes[row];
        }
    }

    let kind = if game.protocol.challenger.decision_projective {
        OperatorKind::Projector
    } else {
        OperatorKind::PovmElement
    };
    Ok((
        OperatorMatrix::on(layout.clone(), pi_mat, OperatorKind::Projector)?,
        OperatorMatrix::on(layout, pt_mat, kind)?,
    ))
}

fn relabel(l: &RegisterLayout, fold: usize) -> Result<RegisterLayout> {
    RegisterLayout::with_cap(
        l.registers().iter().map(|(n, d)| (fold_label(n, fold), *d)),
        usize::MAX,
    )
}

/// Rewrites a square operator onto a permuted register ordering.
fn permute_square(op: &OperatorMatrix, target: &RegisterLayout) -> Result<CMat> {
    let perm = op.in_layout.permutation_to(target)?;
    let n = op.mat.nrows();
    let mut out = CMat::from_element(n, n, C_ZERO);
    for r in 0..n {
        for c in 0..n {
            out[(perm[r], perm[c])] = op.mat[(r, c)];
        }
    }
    Ok(out)
}

/// Simulates the extraction branches directly: returns
/// `(success probability on the non-aborted branch, abort probability)`.
fn simulate_extraction(
    game: &PrefixGame,
    aux: &PureState,
    i: usize,
    amplifier: Option<&SVAmplifier>,
) -> Result<(f64, f64)> {
    // |init⟩ = aux ⊗ |0⟩ on W0^{(≤i)} (real challenger provides fold i's).
    let full = game.initial_layout()?;
    let mut state = extend_state(aux, &full)?;
    state = game.apply_all_challengers(&state)?;
    if let Some(amp) = amplifier {
        let map = OperatorMatrix::new(
            amp.pi.in_layout.clone(),
            amp.pi.in_layout.clone(),
            amplified_map_matrix(amp)?,
            OperatorKind::General,
        )?;
        state = map.apply(&state)?;
    }
    state = game.adversary_unitary.apply(&state)?;
    for j in 1..i {
        state = fold_decision(game, j)?.apply(&state)?;
    }
    let survive = state.norm_squared();
    state = fold_decision(game, i)?.apply(&state)?;
    let success = state.norm_squared();
    Ok((success.min(1.0), (1.0 - survive).max(0.0)))
}

fn fold_decision(game: &PrefixGame, j: usize) -> Result<OperatorMatrix> {
    let d = &game.protocol.challenger.decision;
    OperatorMatrix::new(
        relabel(&d.in_layout, j)?,
        relabel(&d.in_layout, j)?,
        d.mat.clone(),
        d.kind,
    )
}

/// The amplified map `Σ_{ς≤κ} ς̃ |w⟩⟨v|` as a dense matrix.
fn amplified_map_matrix(amp: &SVAmplifier) -> Result<CMat> {
    let n = amp.pi.mat.nrows();
    let layout = amp.pi.in_layout.clone();
    let mut m = CMat::from_element(n, n, C_ZERO);
    for col in 0..n {
        let basis = PureState::basis(layout.clone(), col)?;
        let image = amp.amplify(&basis)?;
        for row in 0..n {
            m[(row, col)] = image.amplitudes[row];
        }
    }
    Ok(m)
}

/// Completes an isometry (`m×k`, orthonormal columns) to a unitary `m×m`.
fn complete_to_unitary(iso: &CMat) -> CMat {
    let m = iso.nrows();
    let k = iso.ncols();
    let mut cols: Vec<CVec> = (0..k).map(|c| iso.column(c).into_owned()).collect();
    let mut basis_idx = 0;
    while cols.len() < m {
        let mut v = CVec::from_element(m, C_ZERO);
        v[basis_idx % m] = cr(1.0);
        basis_idx += 1;
        for u in &cols {
            let c = u.dotc(&v);
            v -= u * c;
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v / cr(n));
        }
        if basis_idx > 4 * m {
            break;
        }
    }
    let mut out = CMat::from_element(m, m, C_ZERO);
    for (c, v) in cols.iter().enumerate() {
        out.set_column(c, v);
    }
    out
}

/// Assembles the extracted adversary as a genuine [`Adversary`] for the
/// single-fold protocol: the advice carries the k-fold advice with the
/// simulated workspaces zeroed and fold `i`'s registers renamed to the
/// unfolded protocol labels; the response-round unitary bundles
/// `C^{(≠i)}`, the amplifier isometry (flagging its residual), the k-fold
/// adversary unitary, and the `D^{(<i)}` post-selection (flagging rejects).
fn build_extracted_adversary(
    game: &PrefixGame,
    aux: &PureState,
    i: usize,
    amplifier: Option<&SVAmplifier>,
) -> Result<ExtractedAdversary> {
    let round = &game.protocol.challenger.rounds[0];
    let full = game.initial_layout()?;
    // Advice registers: everything except fold i's workspace, with fold i's
    // message renamed to the protocol's own label.
    let w_i: Vec<String> = game.w0_labels(i)?
        .into_iter()
        .filter(|l| {
            // keep folds < i zeroed in the advice; exclude fold i's W (real)
            !game_w_fold_labels(game, i).contains(l)
        })
        .collect();
    let _ = w_i;
    let mut advice = extend_state(aux, &full)?;
    // Remove fold i's workspace registers (they belong to the challenger).
    for l in game_w_fold_labels(game, i) {
        advice = advice.slice_register(&l, 0)?;
    }
    let mut advice = advice.normalized()?;
    // Rename fold i's message to the protocol label.
    for l in &round.message_labels {
        advice = rename_register(&advice, &fold_label(l, i), l)?;
    }
    // Append the two flag qubits.
    advice = advice.append_register("flag_amp", 2, 0)?;
    advice = advice.append_register("flag_d", 2, 0)?;

    // First unitary: identity (the first message is already in the advice).
    let a0 = OperatorMatrix::new(
        advice.layout.clone(),
        advice.layout.clone(),
        CMat::identity(advice.dim(), advice.dim()),
        OperatorKind::Unitary,
    )?;

    // Second unitary input: advice minus the outgoing message, plus the
    // response register.
    let msg_refs: Vec<&str> = round.message_labels.iter().map(|s| s.as_str()).collect();
    let mut in_layout = advice.layout.without(&msg_refs)?;
    for l in &round.response_labels {
        let d = round.unitary.out_layout.dim_of(l)?;
        in_layout = in_layout.tensor_with_cap(&RegisterLayout::with_cap([(l.as_str(), d)], usize::MAX)?, usize::MAX)?;
    }

    // Columnwise assembly of the isometry on the flag-zero slice; flags are
    // inputs too, so assemble the full square matrix and complete unitarily.
    let n = in_layout.total_dim();
    let mut mat_cols: Vec<Option<CVec>> = vec![None; n];
    let mut out_layout: Option<RegisterLayout> = None;
    for col in 0..n {
        let basis = PureState::basis(in_layout.clone(), col)?;
        // Only flag-zero inputs are defined by the algorithm.
        if basis.register_weight("flag_amp", 0)? < 0.5
            || basis.register_weight("flag_d", 0)? < 0.5
        {
            continue;
        }
        let mut state = basis.slice_register("flag_amp", 0)?;
        state = state.slice_register("flag_d", 0)?;
        // Rename the response back to fold i.
        for l in &round.response_labels {
            state = rename_register(&state, l, &fold_label(l, i))?;
        }
        // Re-create the simulated workspaces for folds < i? They are part of
        // the advice already (zeroed). Apply C^{(≠i)}.
        for j in 1..=game.k {
            if j == i {
                continue;
            }
            let c_j = OperatorMatrix::new(
                relabel(&round.unitary.in_layout, j)?,
                relabel(&round.unitary.out_layout, j)?,
                round.unitary.mat.clone(),
                OperatorKind::Unitary,
            )?;
            state = c_j.apply(&state)?;
        }
        // Amplifier isometry with flag.
        let state = match amplifier {
            Some(amp) => {
                let good = OperatorMatrix::new(
                    amp.pi.in_layout.clone(),
                    amp.pi.in_layout.clone(),
                    amplified_map_matrix(amp)?,
                    OperatorKind::General,
                )?
                .apply(&state)?
                .append_register("flag_amp", 2, 0)?;
                // residual branch
                let m_mat = amplified_map_matrix(amp)?;
                let gram = CMat::identity(m_mat.ncols(), m_mat.ncols()) - m_mat.adjoint() * &m_mat;
                let res_mat = herm_sqrt_psd(&gram)?;
                let residual = OperatorMatrix::new(
                    amp.pi.in_layout.clone(),
                    amp.pi.in_layout.clone(),
                    res_mat,
                    OperatorKind::General,
                )?
                .apply(&state)?
                .append_register("flag_amp", 2, 1)?;
                good.add(&residual.permuted_to(&good.layout)?)?
            }
            None => state.append_register("flag_amp", 2, 0)?,
        };
        // k-fold adversary unitary.
        let state = game.adversary_unitary.apply(&state)?;
        // D^{(<i)} post-selection with flag.
        let mut ok = state.clone();
        for j in 1..i {
            ok = fold_decision(game, j)?.apply(&ok)?;
        }
        let ok_amps = ok.permuted_to(&state.layout)?;
        let rest = PureState::new(
            state.layout.clone(),
            &state.amplitudes - &ok_amps.amplitudes,
        )?;
        let ok = ok_amps.append_register("flag_d", 2, 0)?;
        let rest = rest.append_register("flag_d", 2, 1)?;
        let mut state = ok.add(&rest.permuted_to(&ok.layout)?)?;
        // Rename fold i's outgoing message to the protocol label.
        for l in &game.protocol.challenger.final_message_labels {
            state = rename_register(&state, &fold_label(l, i), l)?;
        }
        let state = match &out_layout {
            None => {
                out_layout = Some(state.layout.clone());
                state
            }
            Some(l) => state.permuted_to(l)?,
        };
        mat_cols[col] = Some(state.amplitudes);
    }
    let out_layout = out_layout.ok_or(Error::ZeroNorm)?;
    let defined: Vec<usize> = (0..n).filter(|&c| mat_cols[c].is_some()).collect();
    let mut iso = CMat::from_element(n, defined.len(), C_ZERO);
    for (pos, &c) in defined.iter().enumerate() {
        iso.set_column(pos, mat_cols[c].as_ref().unwrap());
    }
    let completed = complete_to_unitary(&iso);
    // Scatter completed columns back to their input positions.
    let mut mat = CMat::from_element(n, n, C_ZERO);
    let mut extra = defined.len();
    for c in 0..n {
        if let Some(pos) = defined.iter().position(|&d| d == c) {
            mat.set_column(c, &completed.column(pos));
        } else {
            mat.set_column(c, &completed.column(extra));
            extra += 1;
        }
    }
    let a1 = OperatorMatrix::new(in_layout, out_layout.clone(), mat, OperatorKind::Unitary)?;

    // Flag-ok projector on the two flag registers.
    let flag_layout = RegisterLayout::with_cap([("flag_amp", 2usize), ("flag_d", 2usize)], usize::MAX)?;
    let mut flag_mat = CMat::from_element(4, 4, C_ZERO);
    flag_mat[(0, 0)] = cr(1.0);
    let flag_ok = OperatorMatrix::on(flag_layout, flag_mat, OperatorKind::Projector)?;

    Ok(ExtractedAdversary {
        adversary: Adversary {
            unitaries: vec![a0, a1],
            advice,
        },
        flag_ok,
    })
}

fn game_w_fold_labels(game: &PrefixGame, fold: usize) -> Vec<String> {
    let round = &game.protocol.challenger.rounds[0];
    round
        .workspace_in()
        .map(|w| w.labels().map(|l| fold_label(l, fold)).collect())
        .unwrap_or_default()
}

fn rename_register(psi: &PureState, from: &str, to: &str) -> Result<PureState> {
    let regs: Vec<(String, usize)> = psi
        .layout
        .registers()
        .iter()
        .map(|(l, d)| {
            if l == from {
                (to.to_string(), *d)
            } else {
                (l.clone(), *d)
            }
        })
        .collect();
    PureState::new(
        RegisterLayout::with_cap(regs, usize::MAX)?,
        psi.amplitudes.clone(),
    )
}

fn herm_sqrt_psd(m: &CMat) -> Result<CMat> {
    let eig = crate::qops::eigh(&OperatorMatrix::new(
        RegisterLayout::with_cap([("sqrt_tmp", m.nrows())], usize::MAX)?,
        RegisterLayout::with_cap([("sqrt_tmp", m.nrows())], usize::MAX)?,
        m.clone(),
        OperatorKind::General,
    )?)?;
    let n = m.nrows();
    let d = CMat::from_diagonal(&CVec::from_iterator(
        n,
        eig.values.iter().map(|&v| cr(v.max(0.0).sqrt())),
    ));
    Ok(&eig.vectors * d * eig.vectors.adjoint())
}

// ---------------------------------------------------------------------------
// Uniform pipeline
// ---------------------------------------------------------------------------

/// Where the uniform pipeline aborted, when it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbortStage {
    /// No fresh copy reached the `δᵏ − ε̂` outcome within the copy budget.
    CopyExhaustion,
    /// A state-transformation run returned ⊥.
    StateTrans,
    /// The final extraction's preconditions failed after surgery.
    Extraction,
}

/// Report of one uniform extraction run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmpUniformReport {
    pub i_star: usize,
    pub copies_used: u64,
    pub gamma_outcome: f64,
    pub c_flags: Vec<StateTransFlag>,
    /// Weight removed by the spectral surgery.
    pub surgery_weight: f64,
    pub success_probability: f64,
    pub aborted: Option<AbortStage>,
    pub params: ReductionParams,
}

/// The uniform extraction pipeline.
///
/// Measures the k-fold prefix value on fresh advice copies (with the
/// almost-projective measurement of the pair `(|0⟩⟨0|_{W₀^{≤k}}, G_k)`) until
/// one reads at least `δᵏ − ε̂`; walks `i = k…2` with the
/// state-transformation loop against the pair for `i−1`, stopping at the
/// first certified index; projects out the high spectral part of
/// `G̃_{i*−1}`; traces out the simulated workspaces `W₀^{(≤i*)}`; and runs
/// the non-uniform extraction with `τ = 1 − ε₀/δ^{i*}`, `μ = ε/4`.
pub fn amp_uniform(
    game: &PrefixGame,
    advice: &PureState,
    params: &ReductionParams,
    rng: &mut impl Rng,
) -> Result<AmpUniformReport> {
    let k = game.k;
    if params.k != k {
        return Err(Error::InvalidParameter(
            "params.k must match the game's fold count".into(),
        ));
    }
    let full = game.initial_layout()?;

    // Handles M_i for the pairs (|0⟩⟨0|_{W0^{≤i}}, G_i).
    let mut handles: Vec<JordanHandle> = Vec::with_capacity(k);
    for i in 1..=k {
        let pa = zero_projector_on(game, &full, i)?;
        let gb = game.game_projector(i)?;
        handles.push(JordanHandle::new(&pa, &gb, params.eps_hat, params.delta_hat)?);
    }

    // Step 1: fresh copies until the k-fold value reads high enough.
    let mut state: Option<PureState> = None;
    let mut copies_used = 0;
    let mut gamma_outcome = 0.0;
    for _ in 0..params.copies {
        copies_used += 1;
        let fresh = extend_state(advice, &full)?;
        let (outcome, post) = handles[k - 1].measure(&fresh, rng)?;
        if let Some(v) = outcome {
            if v >= params.delta.powi(k as i32) - params.eps_hat {
                gamma_outcome = v;
                state = Some(post);
                break;
            }
        }
        // Failed copies are discarded entirely.
    }
    let mut state = match state {
        Some(s) => s,
        None => {
            return Ok(AmpUniformReport {
                i_star: 0,
                copies_used,
                gamma_outcome: 0.0,
                c_flags: Vec::new(),
                surgery_weight: 0.0,
                success_probability: 0.0,
                aborted: Some(AbortStage::CopyExhaustion),
                params: *params,
            })
        }
    };

    // Step 2: walk down with the state transformation.
    let mut c_flags = Vec::new();
    let mut i_star = 1;
    for i in (2..=k).rev() {
        let st = state_trans(
            &handles[i - 1],
            &handles[i - 2],
            &state,
            StateTransParams {
                eps: params.eps_hat,
                delta: params.delta_hat,
                tau: params.tau_hat,
                beta: params.delta.powi(i as i32 - 1) - params.eps_hat,
            },
            rng,
        )?;
        c_flags.push(st.flag);
        state = st.state;
        match st.flag {
            StateTransFlag::Abort => {
                return Ok(AmpUniformReport {
                    i_star: 0,
                    copies_used,
                    gamma_outcome,
                    c_flags,
                    surgery_weight: 0.0,
                    success_probability: 0.0,
                    aborted: Some(AbortStage::StateTrans),
                    params: *params,
                })
            }
            StateTransFlag::One => {
                i_star = i;
                break;
            }
            StateTransFlag::Zero => continue,
        }
    }

    // Step 3: spectral surgery for G̃_{i*−1}.
    let mut surgery_weight = 0.0;
    if i_star >= 2 {
        let g_prev = game.success_operator_embedded(i_star - 1)?;
        let eig = eigh(&g_prev)?;
        let mut keep = state.amplitudes.clone();
        let threshold = params.delta.powi(i_star as i32 - 1);
        for (idx, &lam) in eig.values.iter().enumerate() {
            if lam > threshold + SPECTRAL_TOL {
                let v = eig.vector(idx);
                let amp = v.dotc(&keep);
                surgery_weight += amp.norm_sqr();
                keep -= &v * amp;
            }
        }
        let n = keep.norm();
        if n < 1e-10 {
            return Ok(AmpUniformReport {
                i_star,
                copies_used,
                gamma_outcome,
                c_flags,
                surgery_weight,
                success_probability: 0.0,
                aborted: Some(AbortStage::Extraction),
                params: *params,
            });
        }
        state = PureState::new(state.layout.clone(), keep / cr(n))?;
    }

    // Step 4: hand the simulated workspaces W0^{(≤i*)} back by discarding
    // them; the extraction re-initializes the ones below i*.
    let rho = DensityOperator::from_pure(&state)?;
    let w_upto: Vec<String> = game.w0_labels(i_star)?;
    let w_refs: Vec<&str> = w_upto.iter().map(|s| s.as_str()).collect();
    let rho_adv = rho.partial_trace(&w_refs)?;

    // Step 5: non-uniform extraction.
    let tau = (1.0 - params.eps0 / params.delta.powi(i_star as i32)).clamp(0.0, 1.0);
    let amp_params = AmpParams {
        mu: params.mu,
        delta: params.delta,
        tau,
        mode: AmplifierMode::ExactOracle,
    };
    match amp_nonuniform_mixed(game, &rho_adv, i_star, amp_params) {
        Ok(report) => Ok(AmpUniformReport {
            i_star,
            copies_used,
            gamma_outcome,
            c_flags,
            surgery_weight,
            success_probability: report.success_probability,
            aborted: None,
            params: *params,
        }),
        Err(Error::Precondition(_)) => Ok(AmpUniformReport {
            i_star,
            copies_used,
            gamma_outcome,
            c_flags,
            surgery_weight,
            success_probability: 0.0,
            aborted: Some(AbortStage::Extraction),
            params: *params,
        }),
        Err(e) => Err(e),
    }
}

/// `id ⊗ |0⟩⟨0|_{W₀^{(≤i)}}` on the full pre-challenge layout.
fn zero_projector_on(
    game: &PrefixGame,
    full: &RegisterLayout,
    i: usize,
) -> Result<OperatorMatrix> {
    let n = full.total_dim();
    let mut mat = CMat::identity(n, n);
    for l in game.w0_labels(i)? {
        let d = full.dim_of(&l)?;
        let mut z = CMat::from_element(d, d, C_ZERO);
        z[(0, 0)] = cr(1.0);
        let op = OperatorMatrix::on(
            RegisterLayout::with_cap([(l.as_str(), d)], usize::MAX)?,
            z,
            OperatorKind::Projector,
        )?
        .embed(full)?;
        mat = &mat * &op.mat;
    }
    OperatorMatrix::on(full.clone(), mat, OperatorKind::Projector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    #[test]
    fn select_index_all_equal_ties_to_one() {
        let delta: f64 = 0.8;
        let norms = vec![1.0, delta, delta * delta];
        assert_eq!(select_index(&norms, delta, 2).unwrap(), 1);
    }

    #[test]
    fn select_index_rejects_weak_hypothesis() {
        // (1, 0.9, 0.5) with δ = 0.8: ‖G̃_2‖² = 0.5 < 0.64.
        let norms = vec![1.0, 0.9, 0.5];
        assert!(matches!(
            select_index(&norms, 0.8, 2),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn select_index_satisfies_definition_on_random_inputs() {
        for t in 0..200 {
            let mut rng = trial_rng(61, t);
            let k = 3;
            let delta: f64 = 0.5 + 0.4 * rng.random::<f64>();
            // Random non-increasing sequence from 1 to ≥ δᵏ.
            let mut norms = vec![1.0];
            for i in 1..=k {
                let lo = delta.powi(k as i32);
                let prev = norms[i - 1];
                norms.push(lo + (prev - lo) * rng.random::<f64>());
            }
            if norms[k] < delta.powi(k as i32) {
                continue;
            }
            let i = select_index(&norms, delta, k).unwrap();
            assert!(norms[i - 1] <= delta.powi(i as i32 - 1) + 1e-9);
            assert!(norms[i] >= delta.powi(i as i32) - 1e-9);
        }
    }

    #[test]
    fn planted_instance_has_exact_spectrum() {
        let mut rng = trial_rng(62, 0);
        let delta = 0.8;
        let inst = planted_instance(PlantedDims::qubit(), &[delta], &mut rng).unwrap();
        // Single-fold acceptance equals δ exactly.
        let adv = inst.single_adversary(0).unwrap();
        let r = execute(&inst.protocol, &adv).unwrap();
        assert!((r.accept_probability - delta).abs() < 1e-10);
        // The advice is an eigenvector of G̃₁ with eigenvalue δ.
        let ak = inst.k_fold_unitary(1).unwrap();
        let game = PrefixGame::new(&inst.protocol, &ak, 1).unwrap();
        let g1 = game.prefix_success_operator(1).unwrap();
        let aux = extend_state(&inst.fold_advice(0, 1).unwrap(), &g1.in_layout).unwrap();
        let image = &g1.mat * &aux.amplitudes;
        assert!((image - &aux.amplitudes * cr(delta)).norm() < 1e-9);
    }

    #[test]
    fn planted_k2_norms_are_powers() {
        let mut rng = trial_rng(62, 1);
        let delta = 0.8;
        let inst = planted_instance(PlantedDims::qubit(), &[delta], &mut rng).unwrap();
        let ak = inst.k_fold_unitary(2).unwrap();
        let game = PrefixGame::new(&inst.protocol, &ak, 2).unwrap();
        let norms = game.prefix_success_norms().unwrap();
        assert!((norms[0] - 1.0).abs() < 1e-9);
        assert!((norms[1] - delta).abs() < 1e-8, "{norms:?}");
        assert!((norms[2] - delta * delta).abs() < 1e-8, "{norms:?}");
    }

    #[test]
    fn amp_nonuniform_i1_degenerates_to_planted_success() {
        let mut rng = trial_rng(62, 2);
        let delta = 0.8;
        let inst = planted_instance(PlantedDims::qubit(), &[delta], &mut rng).unwrap();
        let k = 2;
        let ak = inst.k_fold_unitary(k).unwrap();
        let game = PrefixGame::new(&inst.protocol, &ak, k).unwrap();
        let advice = inst
            .fold_advice(0, 1)
            .unwrap()
            .tensor(&inst.fold_advice(0, 2).unwrap())
            .unwrap();
        let (_, report) = amp_nonuniform(
            &game,
            &advice,
            1,
            AmpParams {
                mu: 0.05,
                delta,
                tau: 1.0,
                mode: AmplifierMode::ExactOracle,
            },
        )
        .unwrap();
        assert!(
            (report.success_probability - delta).abs() < 1e-9,
            "{report:?}"
        );
        assert!(report.success_probability >= report.guarantee);
    }

    #[test]
    fn amp_nonuniform_i2_meets_lemma_bound() {
        let mut rng = trial_rng(62, 3);
        let delta = 0.8;
        let mu = 0.05;
        let inst = planted_instance(PlantedDims::qubit(), &[delta], &mut rng).unwrap();
        let k = 2;
        let ak = inst.k_fold_unitary(k).unwrap();
        let game = PrefixGame::new(&inst.protocol, &ak, k).unwrap();
        let advice = inst
            .fold_advice(0, 1)
            .unwrap()
            .tensor(&inst.fold_advice(0, 2).unwrap())
            .unwrap();
        let (extracted, report) = amp_nonuniform(
            &game,
            &advice,
            2,
            AmpParams {
                mu,
                delta,
                tau: 1.0,
                mode: AmplifierMode::ExactOracle,
            },
        )
        .unwrap();
        assert!(
            report.success_probability >= report.guarantee - 1e-9,
            "{report:?}"
        );
        // The assembled adversary agrees with the direct simulation.
        let via_adv = extracted.conservative_success(&inst.protocol).unwrap();
        assert!(
            (via_adv - report.success_probability).abs() < 1e-8,
            "adversary {via_adv} vs simulated {}",
            report.success_probability
        );
    }

    #[test]
    fn amp_nonuniform_rejects_bad_advice() {
        let mut rng = trial_rng(62, 4);
        let delta = 0.8;
        // Plant both a δ-value and a 1-value direction: advice on the 1-value
        // direction violates the i = 2 spectral precondition.
        let inst = planted_instance(PlantedDims::qubit(), &[delta, 1.0], &mut rng).unwrap();
        let k = 2;
        let ak = inst.k_fold_unitary(k).unwrap();
        let game = PrefixGame::new(&inst.protocol, &ak, k).unwrap();
        let advice = inst
            .fold_advice(1, 1)
            .unwrap()
            .tensor(&inst.fold_advice(1, 2).unwrap())
            .unwrap();
        let out = amp_nonuniform(
            &game,
            &advice,
            2,
            AmpParams {
                mu: 0.05,
                delta,
                tau: 1.0,
                mode: AmplifierMode::ExactOracle,
            },
        );
        assert!(matches!(out, Err(Error::Precondition(_))));
    }

    #[test]
    fn mixed_advice_success_is_affine() {
        let mut rng = trial_rng(62, 5);
        let delta = 0.9;
        let inst = planted_instance(PlantedDims::qubit(), &[delta, delta * delta], &mut rng)
            .unwrap();
        let k = 2;
        let ak = inst.k_fold_unitary(k).unwrap();
        let game = PrefixGame::new(&inst.protocol, &ak, k).unwrap();
        let params = AmpParams {
            mu: 0.05,
            delta,
            tau: 0.5,
            mode: AmplifierMode::ExactOracle,
        };
        let adv_a = inst
            .fold_advice(0, 1)
            .unwrap()
            .tensor(&inst.fold_advice(0, 2).unwrap())
            .unwrap();
        let adv_b = inst
            .fold_advice(0, 1)
            .unwrap()
            .tensor(&inst.fold_advice(1, 2).unwrap())
            .unwrap();
        let ra = amp_nonuniform(&game, &adv_a, 1, params).unwrap().1;
        let rb = amp_nonuniform(&game, &adv_b, 1, params).unwrap().1;
        let lam = 0.25;
        let mix = DensityOperator::mix(&[
            (lam, DensityOperator::from_pure(&adv_a).unwrap()),
            (1.0 - lam, DensityOperator::from_pure(&adv_b).unwrap()),
        ])
        .unwrap();
        let rm = amp_nonuniform_mixed(&game, &mix, 1, params).unwrap();
        let expect = lam * ra.success_probability + (1.0 - lam) * rb.success_probability;
        assert!(
            (rm.success_probability - expect).abs() < 1e-9,
            "{} vs {}",
            rm.success_probability,
            expect
        );
    }

    #[test]
    fn state_trans_immediate_zero_on_high_target() {
        // M1 reads the planted eigenvalue, above β: b₁ = 0 on the first
        // iteration and the flag is Zero.
        let mut rng = trial_rng(63, 0);
        let delta = 0.9;
        let inst = planted_instance(PlantedDims::qubit(), &[delta], &mut rng).unwrap();
        let k = 2;
        let ak = inst.k_fold_unitary(k).unwrap();
        let game = PrefixGame::new(&inst.protocol, &ak, k).unwrap();
        let full = game.initial_layout().unwrap();
        let m2 = JordanHandle::new(
            &zero_projector_on(&game, &full, 2).unwrap(),
            &game.game_projector(2).unwrap(),
            0.01,
            1e-4,
        )
        .unwrap();
        let m1 = JordanHandle::new(
            &zero_projector_on(&game, &full, 1).unwrap(),
            &game.game_projector(1).unwrap(),
            0.01,
            1e-4,
        )
        .unwrap();
        let advice = inst.k_fold_adversary(&[0, 0]).unwrap().advice;
        let state = extend_state(&advice, &full).unwrap();
        let out = state_trans(
            &m2,
            &m1,
            &state,
            StateTransParams {
                eps: 0.01,
                delta: 1e-4,
                tau: 0.2,
                beta: delta - 0.01,
            },
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.flag, StateTransFlag::Zero);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn state_trans_one_when_target_reads_low() {
        // β above the planted value: Π¹_{<β} holds the state, repeats
        // certify, flag One.
        let mut rng = trial_rng(63, 1);
        let delta = 0.6;
        let inst = planted_instance(PlantedDims::qubit(), &[delta], &mut rng).unwrap();
        let k = 2;
        let ak = inst.k_fold_unitary(k).unwrap();
        let game = PrefixGame::new(&inst.protocol, &ak, k).unwrap();
        let full = game.initial_layout().unwrap();
        let m2 = JordanHandle::new(
            &zero_projector_on(&game, &full, 2).unwrap(),
            &game.game_projector(2).unwrap(),
            0.01,
            1e-4,
        )
        .unwrap();
        let m1 = JordanHandle::new(
            &zero_projector_on(&game, &full, 1).unwrap(),
            &game.game_projector(1).unwrap(),
            0.01,
            1e-4,
        )
        .unwrap();
        let advice = inst.k_fold_adversary(&[0, 0]).unwrap().advice;
        let state = extend_state(&advice, &full).unwrap();
        let out = state_trans(
            &m2,
            &m1,
            &state,
            StateTransParams {
                eps: 0.01,
                delta: 1e-4,
                tau: 0.2,
                // target threshold above the planted single-fold value:
                // the state already reads below β under M1.
                beta: delta + 0.2,
            },
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.flag, StateTransFlag::One, "{:?}", out.alpha_trace);
        // Certified state reads high under M0 and low under M1.
        let p_hi = m2
            .prob_outcome_geq(&out.state, delta * delta - 0.05)
            .unwrap();
        assert!(p_hi > 0.9, "M0 readout {p_hi}");
        let p_lo = m1.prob_outcome_lt(&out.state, delta + 0.2).unwrap();
        assert!(p_lo > 0.9, "M1 readout {p_lo}");
    }

    #[test]
    fn amp_uniform_recovers_planted_success() {
        let delta: f64 = 0.9;
        let epsilon = 0.2;
        let k = 2;
        let mut rng = trial_rng(64, 0);
        let inst = planted_instance(PlantedDims::qubit(), &[delta], &mut rng).unwrap();
        let ak = inst.k_fold_unitary(k).unwrap();
        let game = PrefixGame::new(&inst.protocol, &ak, k).unwrap();
        let advice = inst.k_fold_adversary(&[0, 0]).unwrap().advice;
        let params = ReductionParams::derive(k, delta, epsilon).unwrap();
        let mut ok = 0;
        for t in 0..5 {
            let mut r = trial_rng(64, 100 + t);
            let report = amp_uniform(&game, &advice, &params, &mut r).unwrap();
            if report.aborted.is_none() {
                assert!(
                    report.success_probability >= delta - epsilon - 1e-9,
                    "{report:?}"
                );
                ok += 1;
            }
        }
        assert!(ok >= 4, "only {ok}/5 non-aborting runs");
    }

    #[test]
    fn reduction_params_schedule_shape() {
        let p = ReductionParams::derive(2, 0.9, 0.2).unwrap();
        assert!((p.eps0 - 0.2 * 0.81 / 4.0).abs() < 1e-12);
        assert!((p.tau_hat - p.eps0 * p.eps0 / 100.0).abs() < 1e-12);
        assert!(p.tau_hat >= 2.0 * p.eps_hat);
        assert!(p.tau_hat <= 1.0 - p.delta_hat);
        assert!(p.big_k > 0 && p.big_t > 0 && p.copies > 0);
    }
}
