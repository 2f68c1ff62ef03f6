//! Round halving and public-coin compilation for quantum interactive
//! arguments.
//!
//! The halved verifier receives the midpoint state (the prover's claim of
//! what the joint message/workspace state looks like after round `r/2`),
//! flips a coin, and either plays the original protocol forward from the
//! midpoint and applies the decision, or plays it backward and checks the
//! initial workspace. The coin is modeled as a qubit pair prepared by the
//! verifier (one kept, one sent, correlated in the computational basis);
//! since the decision is diagonal in the kept coin, acceptance probabilities
//! are exactly the average of the two branch probabilities.
//!
//! Honest provers for the compressed protocol replay the original prover
//! forward or backward, giving compressed acceptance exactly `1 − ε/2` from
//! original acceptance `1 − ε`. Lifting a compressed adversary back to the
//! original protocol simulates its backward interaction, checks the initial
//! workspace (abort on failure), sends the reconstructed first message, then
//! unwinds step by step and replays forward; the lift report records both the
//! conditional and unconditional acceptance together with the fidelity chain
//! that yields the `1 − 16ε` bound.

use serde::{Deserialize, Serialize};

use crate::protocol::{Adversary, Challenger, ProtocolInstance, Round};
use crate::qops::{
    cr, distances, CMat, CVec, DensityOperator, OperatorKind, OperatorMatrix, PureState,
    RegisterLayout, C_ZERO,
};
use crate::{Error, Result};

/// A compressed protocol with provenance bookkeeping.
#[derive(Debug, Clone)]
pub struct CompressedProtocol {
    pub instance: ProtocolInstance,
    pub source_messages: usize,
    pub halving_depth: usize,
}

// ---------------------------------------------------------------------------
// Halving
// ---------------------------------------------------------------------------

/// Dimensions collected from a protocol round chain.
struct Widths {
    msg: Vec<usize>,
    resp: Vec<usize>,
    w: Vec<usize>,
}

fn widths(p: &ProtocolInstance) -> Result<Widths> {
    let rounds = &p.challenger.rounds;
    let mut msg = Vec::new();
    let mut resp = Vec::new();
    let mut w = Vec::new();
    for r in rounds {
        msg.push(
            r.message_labels
                .iter()
                .map(|l| r.unitary.in_layout.dim_of(l).unwrap())
                .product(),
        );
        resp.push(
            r.response_labels
                .iter()
                .map(|l| r.unitary.out_layout.dim_of(l).unwrap())
                .product(),
        );
        w.push(r.workspace_in()?.total_dim());
    }
    // Final message and workspace.
    let final_msg: usize = p
        .challenger
        .final_message_labels
        .iter()
        .map(|l| p.challenger.decision.in_layout.dim_of(l).unwrap())
        .product();
    msg.push(final_msg);
    let final_w = {
        let m: Vec<&str> = p
            .challenger
            .final_message_labels
            .iter()
            .map(|s| s.as_str())
            .collect();
        p.challenger.decision.in_layout.without(&m)?.total_dim()
    };
    w.push(final_w);
    Ok(Widths { msg, resp, w })
}

/// Flattens the round unitary to an `(m·w) × (m·w)` matrix in
/// `[message..., workspace...]` index order on both sides.
fn round_matrix(r: &Round) -> Result<CMat> {
    let msg: Vec<&str> = r.message_labels.iter().map(|s| s.as_str()).collect();
    let resp: Vec<&str> = r.response_labels.iter().map(|s| s.as_str()).collect();
    let w_in = r.unitary.in_layout.without(&msg)?;
    let w_out = r.unitary.out_layout.without(&resp)?;
    let in_order = r
        .unitary
        .in_layout
        .select(&msg)?
        .tensor_with_cap(&w_in, usize::MAX)?;
    let out_order = r
        .unitary
        .out_layout
        .select(&resp)?
        .tensor_with_cap(&w_out, usize::MAX)?;
    let pi = r.unitary.in_layout.permutation_to(&in_order)?;
    let po = r.unitary.out_layout.permutation_to(&out_order)?;
    let n = r.unitary.mat.nrows();
    let mut m = CMat::from_element(n, n, C_ZERO);
    for row in 0..n {
        for col in 0..n {
            m[(po[row], pi[col])] = r.unitary.mat[(row, col)];
        }
    }
    Ok(m)
}

/// Decision as a matrix in `[message..., workspace...]` order.
fn decision_matrix(p: &ProtocolInstance) -> Result<CMat> {
    let d = &p.challenger.decision;
    let msg: Vec<&str> = p
        .challenger
        .final_message_labels
        .iter()
        .map(|s| s.as_str())
        .collect();
    let w = d.in_layout.without(&msg)?;
    let order = d.in_layout.select(&msg)?.tensor_with_cap(&w, usize::MAX)?;
    let perm = d.in_layout.permutation_to(&order)?;
    let n = d.mat.nrows();
    let mut m = CMat::from_element(n, n, C_ZERO);
    for row in 0..n {
        for col in 0..n {
            m[(perm[row], perm[col])] = d.mat[(row, col)];
        }
    }
    Ok(m)
}

/// `|0⟩⟨0|` on the second factor of an `m ⊗ w` space, i.e. the initial
/// workspace check, conjugated by nothing.
fn zero_w_projector(m: usize, w: usize) -> CMat {
    let mut z = CMat::from_element(m * w, m * w, C_ZERO);
    for x in 0..m {
        z[(x * w, x * w)] = cr(1.0);
    }
    z
}

/// Halves a `(2r+1)`-message protocol into an `(r+1)`-message one.
///
/// Requirements: `r` even and at least 2 (pad first via
/// [`pad_to_message_count`]); the mirror width conditions
/// `dim(M_{r/2+i}) = dim(R_{r/2−i})` and `dim(R_{r/2+i}) = dim(M_{r/2−i})`
/// plus a workspace chain of constant width, so the heads and tails branches
/// share wire registers. A uniform-width protocol satisfies all of these;
/// one level of halving is always available for such protocols.
pub fn halve(p: &ProtocolInstance) -> Result<CompressedProtocol> {
    let r = p.challenger.rounds.len();
    if r < 2 || r % 2 != 0 {
        return Err(Error::MessageCount {
            expected: "odd count 2r+1 with r even and r ≥ 2 (pad first)".into(),
            got: p.message_count(),
        });
    }
    let wd = widths(p)?;
    let half = r / 2;
    // Mirror width checks.
    for i in 1..=half {
        if wd.msg[half + i] != wd.resp[half - i] {
            return Err(Error::DimensionMismatch(format!(
                "halving needs dim(M_{}) = dim(R_{}): {} vs {}",
                half + i,
                half - i,
                wd.msg[half + i],
                wd.resp[half - i]
            )));
        }
        if i < half && wd.resp[half + i] != wd.msg[half - i] {
            return Err(Error::DimensionMismatch(format!(
                "halving needs dim(R_{}) = dim(M_{}): {} vs {}",
                half + i,
                half - i,
                wd.resp[half + i],
                wd.msg[half - i]
            )));
        }
    }
    let w_dim = wd.w[half];
    for (i, &wi) in wd.w.iter().enumerate() {
        if i >= 1 && wi != w_dim {
            return Err(Error::DimensionMismatch(format!(
                "halving needs a constant workspace width from round 1 on; \
                 W_{i} has dim {wi} vs {w_dim}"
            )));
        }
    }
    let m_mid = wd.msg[half];
    let w0_dim = wd.w[0];

    // Round matrices in [msg, w] order.
    let cmats: Vec<CMat> = p
        .challenger
        .rounds
        .iter()
        .map(round_matrix)
        .collect::<Result<Vec<_>>>()?;
    let dmat = decision_matrix(p)?;

    // Compressed round 0: receive the midpoint [mid-message, mid-workspace],
    // flip the coin pair, heads applies C_{r/2}.
    //
    // in:  [cm0_m (m_mid), cm0_w (w), cck (2), ccoin (2)]
    // out: [ccoin (2), cr0 (wire), cck (2), cws (w)]
    let wire0 = wd.resp[half]; // = wd.msg[half] by the i = 0 mirror? (heads R_{r/2}, tails M_{r/2})
    if wd.resp[half] != m_mid {
        return Err(Error::DimensionMismatch(format!(
            "halving needs dim(R_{half}) = dim(M_{half}): {} vs {m_mid}",
            wd.resp[half]
        )));
    }
    let in0 = RegisterLayout::with_cap(
        [
            ("hm0_m".to_string(), m_mid),
            ("hm0_w".to_string(), w_dim),
            ("hck".to_string(), 2),
            ("hcoin".to_string(), 2),
        ],
        usize::MAX,
    )?;
    let out0 = RegisterLayout::with_cap(
        [
            ("hcoin".to_string(), 2),
            ("hr0".to_string(), wire0),
            ("hck".to_string(), 2),
            ("hws".to_string(), w_dim),
        ],
        usize::MAX,
    )?;
    let n0 = in0.total_dim();
    let mut c0 = CMat::from_element(n0, n0, C_ZERO);
    {
        // index helpers: in = ((m*w + w_idx)*2 + ck)*2 + coin;
        // out = ((coin*wire + r)*2 + ck)*w + ws  — build by enumeration.
        let in_strides = in0.strides();
        let out_strides = out0.strides();
        let heads_op = &cmats[half]; // C_{r/2} on (m_mid ⊗ w)
        for m_in in 0..m_mid {
            for w_in in 0..w_dim {
                for coin_val in 0..2usize {
                    // Inputs have cck = 0 and ccoin = 0 in honest runs, but
                    // the unitary must be total: the Hadamard acts on cck and
                    // the copy targets ccoin; define on all inputs.
                    for ck_in in 0..2usize {
                        let col = m_in * in_strides[0]
                            + w_in * in_strides[1]
                            + ck_in * in_strides[2]
                            + coin_val * in_strides[3];
                        // H on cck: |ck_in⟩ → Σ_t (±1/√2)|t⟩; CNOT t→coin
                        for t in 0..2usize {
                            let h_amp = if ck_in == 1 && t == 1 { -1.0 } else { 1.0 }
                                * std::f64::consts::FRAC_1_SQRT_2;
                            let coin_out = coin_val ^ t;
                            if t == 0 {
                                // heads branch: apply C_{r/2} to (m, w)
                                for out_idx in 0..(m_mid * w_dim) {
                                    let amp = heads_op[(out_idx, m_in * w_dim + w_in)];
                                    if amp == C_ZERO {
                                        continue;
                                    }
                                    let (r_out, ws_out) = (out_idx / w_dim, out_idx % w_dim);
                                    let row = coin_out * out_strides[0]
                                        + r_out * out_strides[1]
                                        + t * out_strides[2]
                                        + ws_out * out_strides[3];
                                    c0[(row, col)] += amp * cr(h_amp);
                                }
                            } else {
                                // tails branch: return the midpoint message
                                let row = coin_out * out_strides[0]
                                    + m_in * out_strides[1]
                                    + t * out_strides[2]
                                    + w_in * out_strides[3];
                                c0[(row, col)] += cr(h_amp);
                            }
                        }
                    }
                }
            }
        }
    }
    let round0 = Round {
        unitary: OperatorMatrix::new(in0, out0, c0, OperatorKind::Unitary)?,
        message_labels: vec!["hm0_m".into(), "hm0_w".into()],
        response_labels: vec!["hcoin".into(), "hr0".into()],
    };

    // Compressed rounds 1..half−1: controlled forward/backward.
    let mut rounds = vec![round0];
    for i in 1..half {
        let wire_in = wd.msg[half + i]; // = resp[half−i]
        let wire_out = wd.resp[half + i]; // = msg[half−i]
        let in_l = RegisterLayout::with_cap(
            [
                (format!("hm{i}"), wire_in),
                ("hck".to_string(), 2),
                ("hws".to_string(), w_dim),
            ],
            usize::MAX,
        )?;
        let out_l = RegisterLayout::with_cap(
            [
                (format!("hr{i}"), wire_out),
                ("hck".to_string(), 2),
                ("hws".to_string(), w_dim),
            ],
            usize::MAX,
        )?;
        let n = in_l.total_dim();
        let mut mat = CMat::from_element(n, n, C_ZERO);
        let heads = &cmats[half + i];
        let tails = cmats[half - i].adjoint();
        let istr = in_l.strides();
        let ostr = out_l.strides();
        for x in 0..wire_in {
            for ws in 0..w_dim {
                for ck in 0..2usize {
                    let col = x * istr[0] + ck * istr[1] + ws * istr[2];
                    let op = if ck == 0 { heads } else { &tails };
                    for out_idx in 0..(wire_out * w_dim) {
                        let amp = op[(out_idx, x * w_dim + ws)];
                        if amp == C_ZERO {
                            continue;
                        }
                        let (xo, wo) = (out_idx / w_dim, out_idx % w_dim);
                        let row = xo * ostr[0] + ck * ostr[1] + wo * ostr[2];
                        mat[(row, col)] += amp;
                    }
                }
            }
        }
        rounds.push(Round {
            unitary: OperatorMatrix::new(in_l, out_l, mat, OperatorKind::Unitary)?,
            message_labels: vec![format!("hm{i}")],
            response_labels: vec![format!("hr{i}")],
        });
    }

    // Compressed decision on [hm{half}, hck, hws]:
    //   heads: D on (wire, ws); tails: C₀†-conjugated |0⟩_W check.
    let wire_fin = wd.msg[r]; // heads M_r; equals resp[0] by mirror
    let dec_in = RegisterLayout::with_cap(
        [
            (format!("hm{half}"), wire_fin),
            ("hck".to_string(), 2),
            ("hws".to_string(), w_dim),
        ],
        usize::MAX,
    )?;
    let n = dec_in.total_dim();
    let mut dec = CMat::from_element(n, n, C_ZERO);
    let tails_check = {
        let c0 = &cmats[0];
        // C₀ maps (M₀, W₀) → (R₀, W₁); the tails check is
        // C₀ (id ⊗ |0⟩⟨0|_{W₀}) C₀† on (R₀, W₁) indexing.
        let z = zero_w_projector(wd.msg[0], w0_dim);
        c0 * z * c0.adjoint()
    };
    let istr = dec_in.strides();
    for x in 0..wire_fin {
        for ws in 0..w_dim {
            for ck in 0..2usize {
                let col = x * istr[0] + ck * istr[1] + ws * istr[2];
                let block = if ck == 0 { &dmat } else { &tails_check };
                for out_idx in 0..(wire_fin * w_dim) {
                    let amp = block[(out_idx, x * w_dim + ws)];
                    if amp == C_ZERO {
                        continue;
                    }
                    let (xo, wo) = (out_idx / w_dim, out_idx % w_dim);
                    let row = xo * istr[0] + ck * istr[1] + wo * istr[2];
                    dec[(row, col)] += amp;
                }
            }
        }
    }
    let decision = OperatorMatrix::on(dec_in, dec, OperatorKind::Projector)?;
    let instance = ProtocolInstance::new(
        Challenger {
            rounds,
            decision,
            decision_projective: true,
            final_message_labels: vec![format!("hm{half}")],
        },
        format!("{}-halved", p.label),
    )?;
    Ok(CompressedProtocol {
        instance,
        source_messages: p.message_count(),
        halving_depth: 1,
    })
}

// ---------------------------------------------------------------------------
// Honest compression
// ---------------------------------------------------------------------------

/// Builds a square matrix from a state map defined on basis states.
fn matrix_from_map(
    in_layout: &RegisterLayout,
    map: impl Fn(PureState) -> Result<PureState>,
) -> Result<(CMat, RegisterLayout)> {
    let n = in_layout.total_dim();
    let mut out_layout: Option<RegisterLayout> = None;
    let mut m: Option<CMat> = None;
    for col in 0..n {
        let image = map(PureState::basis(in_layout.clone(), col)?)?;
        let image = match &out_layout {
            None => {
                out_layout = Some(image.layout.clone());
                image
            }
            Some(l) => image.permuted_to(l)?,
        };
        let mat = m.get_or_insert_with(|| CMat::from_element(image.dim(), n, C_ZERO));
        for row in 0..image.dim() {
            mat[(row, col)] = image.amplitudes[row];
        }
    }
    Ok((m.unwrap(), out_layout.unwrap()))
}

fn rename(psi: &PureState, from: &str, to: &str) -> Result<PureState> {
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

/// Bundles the original message registers of one direction into a single
/// register of the product dimension (for riding the compressed wire).
fn fuse_registers(psi: &PureState, labels: &[String], fused: &str) -> Result<PureState> {
    if labels.len() == 1 {
        return rename(psi, &labels[0], fused);
    }
    let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    let rest = psi.layout.without(&refs)?;
    let selected = psi.layout.select(&refs)?;
    let target = selected.tensor_with_cap(&rest, usize::MAX)?;
    let permuted = psi.permuted_to(&target)?;
    let fused_layout = RegisterLayout::with_cap(
        std::iter::once((fused.to_string(), selected.total_dim()))
            .chain(rest.registers().iter().cloned()),
        usize::MAX,
    )?;
    PureState::new(fused_layout, permuted.amplitudes)
}

fn split_register(
    psi: &PureState,
    fused: &str,
    parts: &[(String, usize)],
) -> Result<PureState> {
    let pos = psi.layout.position(fused)?;
    let mut regs: Vec<(String, usize)> = Vec::new();
    for (i, (l, d)) in psi.layout.registers().iter().enumerate() {
        if i == pos {
            regs.extend(parts.iter().cloned());
        } else {
            regs.push((l.clone(), *d));
        }
    }
    PureState::new(
        RegisterLayout::with_cap(regs, usize::MAX)?,
        psi.amplitudes.clone(),
    )
}

/// The honest prover for the halved protocol, from an honest prover of the
/// original: simulate to the midpoint, send it, then play forward (heads) or
/// backward (tails) according to the received coin.
///
/// Compressed acceptance is exactly `1 − ε/2` when the original accepts the
/// honest prover with probability `1 − ε`.
pub fn compress_honest(p: &ProtocolInstance, honest: &Adversary) -> Result<Adversary> {
    let r = p.challenger.rounds.len();
    if r < 2 || r % 2 != 0 {
        return Err(Error::MessageCount {
            expected: "r even and ≥ 2".into(),
            got: p.message_count(),
        });
    }
    let half = r / 2;
    let w0 = p.challenger.initial_workspace()?;

    // Advice: original advice padded with the simulated initial workspace.
    let mut advice = honest.advice.clone();
    for (l, d) in w0.registers() {
        advice = advice.append_register(&format!("sim_{l}"), *d, 0)?;
    }

    // A'₀: run A₀, C₀, …, A_{half} on the simulated registers, fuse the
    // midpoint into the compressed message registers.
    let mid_msg_labels: Vec<String> = p.challenger.rounds[half].message_labels.clone();
    let advice_layout = advice.layout.clone();
    let (a0_mat, a0_out) = matrix_from_map(&advice_layout, |mut state| {
        // Work on the simulated registers: rename sim_W back for the ops.
        for (l, _) in w0.registers() {
            state = rename(&state, &format!("sim_{l}"), l)?;
        }
        for i in 0..half {
            state = honest.unitaries[i].apply(&state)?;
            state = p.challenger.rounds[i].unitary.apply(&state)?;
        }
        state = honest.unitaries[half].apply(&state)?;
        // Fuse midpoint message registers → hm0_m and the workspace → hm0_w.
        state = fuse_registers(&state, &mid_msg_labels, "hm0_m")?;
        let w_mid_labels: Vec<String> = p.challenger.rounds[half]
            .workspace_in()?
            .labels()
            .map(|s| s.to_string())
            .collect();
        state = fuse_registers(&state, &w_mid_labels, "hm0_w")?;
        Ok(state)
    })?;
    let a0 = OperatorMatrix::new(advice_layout, a0_out.clone(), a0_mat, OperatorKind::Unitary)?;

    // A'_i for i = 1..=half: controlled on the received coin.
    let mut unitaries = vec![a0];
    let mut carry_layout = a0_out.without(&["hm0_m", "hm0_w"])?;
    for i in 1..=half {
        // input: carry ⊗ wire (hcoin arrives with the first response).
        let mut in_l = carry_layout.clone();
        if i == 1 {
            in_l = in_l.tensor_with_cap(&RegisterLayout::with_cap([("hcoin", 2usize)], usize::MAX)?, usize::MAX)?;
        }
        let wire_in_label = format!("hr{}", i - 1);
        let wire_dim = {
            // heads content: R_{half+i−1}; dims match tails by construction.
            let wd = widths(p)?;
            wd.resp[half + i - 1]
        };
        in_l = in_l.tensor_with_cap(
            &RegisterLayout::with_cap([(wire_in_label.clone(), wire_dim)], usize::MAX)?,
            usize::MAX,
        )?;
        let heads_adv = honest.unitaries[half + i].clone();
        let tails_adv = honest.unitaries[half - i + 1].adjoint();
        let heads_resp: Vec<String> = p.challenger.rounds[half + i - 1].response_labels.clone();
        let heads_msg: Vec<String> = if half + i < r {
            p.challenger.rounds[half + i].message_labels.clone()
        } else {
            p.challenger.final_message_labels.clone()
        };
        let tails_msg: Vec<String> = p.challenger.rounds[half - i + 1].message_labels.clone();
        let tails_resp: Vec<String> = p.challenger.rounds[half - i].response_labels.clone();
        let p_ref = p;
        let (mat, out_l) = matrix_from_map(&in_l, move |state| {
            // Split on the coin branch.
            let heads_part = state.slice_register("hcoin", 0)?;
            let tails_part = state.slice_register("hcoin", 1)?;
            let mut acc: Option<PureState> = None;
            if heads_part.norm() > 0.0 {
                // wire carries R_{half+i−1}: split into the original response
                // registers, apply A_{half+i}, fuse the produced message.
                let parts: Vec<(String, usize)> = heads_resp
                    .iter()
                    .map(|l| {
                        (
                            l.clone(),
                            p_ref.challenger.rounds[half + i - 1]
                                .unitary
                                .out_layout
                                .dim_of(l)
                                .unwrap(),
                        )
                    })
                    .collect();
                let mut s = split_register(&heads_part, &wire_in_label, &parts)?;
                s = heads_adv.apply(&s)?;
                s = fuse_registers(&s, &heads_msg, &format!("hm{i}"))?;
                let s = s.append_register("hcoin", 2, 0)?;
                acc = Some(s);
            }
            if tails_part.norm() > 0.0 {
                // wire carries M_{half−i+1}: split, apply A†_{half−i+1},
                // fuse the revealed response R_{half−i}.
                let parts: Vec<(String, usize)> = tails_msg
                    .iter()
                    .map(|l| {
                        (
                            l.clone(),
                            p_ref.challenger.rounds[half - i + 1]
                                .unitary
                                .in_layout
                                .dim_of(l)
                                .unwrap(),
                        )
                    })
                    .collect();
                let mut s = split_register(&tails_part, &wire_in_label, &parts)?;
                s = tails_adv.apply(&s)?;
                s = fuse_registers(&s, &tails_resp, &format!("hm{i}"))?;
                let s = s.append_register("hcoin", 2, 1)?;
                match acc {
                    None => acc = Some(s),
                    Some(prev) => {
                        let aligned = s.permuted_to(&prev.layout)?;
                        acc = Some(prev.add(&aligned)?);
                    }
                }
            }
            acc.ok_or(Error::ZeroNorm)
        })?;
        unitaries.push(OperatorMatrix::new(
            in_l,
            out_l.clone(),
            mat,
            OperatorKind::Unitary,
        )?);
        carry_layout = out_l.without(&[&format!("hm{i}")])?;
    }

    Ok(Adversary {
        unitaries,
        advice,
    })
}

// ---------------------------------------------------------------------------
// Lifting
// ---------------------------------------------------------------------------

/// Quantities measured during a soundness lift.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftReport {
    /// Compressed acceptance `1 − ε` (measured).
    pub compressed_acceptance: f64,
    pub heads_probability: f64,
    pub tails_probability: f64,
    pub bures_heads_to_aux: f64,
    pub bures_tails_to_aux: f64,
    pub bures_heads_to_tails: f64,
    pub fidelity_heads_tails: f64,
    /// Acceptance of the lifted adversary conditioned on not aborting.
    pub lifted_conditional: f64,
    /// Unconditional acceptance (aborts counted as rejections).
    pub lifted_unconditional: f64,
    /// Probability the initial-workspace check aborts: `1 − Tr(Π_T aux)`.
    pub abort_probability: f64,
}

/// The heads and tails branch projectors of a compressed adversary, as
/// operators on its advice space.
///
/// `Π_H` conjugates the decision through the heads interaction; `Π_T`
/// conjugates the initial-workspace check through the tails interaction.
pub fn heads_tails_projectors(
    p: &ProtocolInstance,
    compressed_adv: &Adversary,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let r = p.challenger.rounds.len();
    let half = r / 2;
    let aux_layout = compressed_adv.advice.layout.clone();
    let wd = widths(p)?;
    let build = |heads: bool| -> Result<OperatorMatrix> {
        let (mat, _) = matrix_from_map(&aux_layout, |state| {
            let mut s = compressed_adv.unitaries[0].apply(&state)?;
            // Feed the coin and walk the branch.
            s = s.append_register("hcoin", 2, if heads { 0 } else { 1 })?;
            if heads {
                // verifier C_{half}, prover B_1, verifier C_{half+1}, …
                let mut st = split_mid(&s, p, half)?;
                for i in 1..=half {
                    st = p.challenger.rounds[half + i - 1].unitary.apply(&st)?;
                    let resp: Vec<String> =
                        p.challenger.rounds[half + i - 1].response_labels.clone();
                    st = fuse_registers(&st, &resp, &format!("hr{}", i - 1))?;
                    st = compressed_adv.unitaries[i].apply(&st)?;
                    let msg: Vec<String> = if half + i < r {
                        p.challenger.rounds[half + i].message_labels.clone()
                    } else {
                        p.challenger.final_message_labels.clone()
                    };
                    st = split_wire(&st, &format!("hm{i}"), p, &msg)?;
                }
                // decision projector
                let d = p
                    .challenger
                    .decision
                    .embed(&st.layout)?;
                let st = d.apply(&st)?.permuted_to(&st.layout)?;
                // reverse the walk
                let mut st = st;
                for i in (1..=half).rev() {
                    let msg: Vec<String> = if half + i < r {
                        p.challenger.rounds[half + i].message_labels.clone()
                    } else {
                        p.challenger.final_message_labels.clone()
                    };
                    st = fuse_registers(&st, &msg, &format!("hm{i}"))?;
                    st = compressed_adv.unitaries[i].adjoint().apply(&st)?;
                    let resp: Vec<String> =
                        p.challenger.rounds[half + i - 1].response_labels.clone();
                    st = split_wire(&st, &format!("hr{}", i - 1), p, &resp)?;
                    st = p.challenger.rounds[half + i - 1]
                        .unitary
                        .adjoint()
                        .apply(&st)?;
                }
                let st = fuse_mid(&st, p, half)?;
                let st = st.slice_register("hcoin", 0)?;
                compressed_adv.unitaries[0].adjoint().apply(&st)
            } else {
                // tails: messages walk backward; wire hr0 carries the
                // midpoint message itself.
                let mut st = s;
                // hm0_m holds M_{half}: rename to hr0 and run B_1, then the
                // verifier applies C†_{half−1}, and so on.
                st = rename(&st, "hm0_m", "hr0")?;
                for i in 1..=half {
                    st = compressed_adv.unitaries[i].apply(&st)?;
                    // hm{i} carries R_{half−i}: verifier applies C†_{half−i}
                    // using the held workspace chain (hm0_w at i = 1).
                    let resp: Vec<String> = p.challenger.rounds[half - i].response_labels.clone();
                    st = split_wire(&st, &format!("hm{i}"), p, &resp)?;
                    if i == 1 {
                        let w_labels: Vec<String> = p.challenger.rounds[half]
                            .workspace_in()?
                            .labels()
                            .map(|x| x.to_string())
                            .collect();
                        st = split_register(
                            &st,
                            "hm0_w",
                            &w_labels
                                .iter()
                                .map(|l| {
                                    (
                                        l.clone(),
                                        p.challenger.rounds[half]
                                            .workspace_in()
                                            .unwrap()
                                            .dim_of(l)
                                            .unwrap(),
                                    )
                                })
                                .collect::<Vec<_>>(),
                        )?;
                    }
                    st = p.challenger.rounds[half - i].unitary.adjoint().apply(&st)?;
                    if i < half {
                        let msg: Vec<String> = p.challenger.rounds[half - i].message_labels.clone();
                        st = fuse_registers(&st, &msg, &format!("hr{i}"))?;
                    }
                }
                // check |0⟩⟨0| on the initial workspace registers
                let w0 = p.challenger.initial_workspace()?;
                let mut st_checked = st.clone();
                for l in w0.labels() {
                    let d = w0.dim_of(l)?;
                    let mut z = CMat::from_element(d, d, C_ZERO);
                    z[(0, 0)] = cr(1.0);
                    let zp = OperatorMatrix::on(
                        RegisterLayout::with_cap([(l, d)], usize::MAX)?,
                        z,
                        OperatorKind::Projector,
                    )?
                    .embed(&st_checked.layout)?;
                    st_checked = zp.apply(&st_checked)?.permuted_to(&st_checked.layout)?;
                }
                // reverse
                let mut st = st_checked;
                for i in (1..=half).rev() {
                    if i < half {
                        let msg: Vec<String> = p.challenger.rounds[half - i].message_labels.clone();
                        st = split_wire_named(&st, &format!("hr{i}"), p, &msg, half - i)?;
                    }
                    st = p.challenger.rounds[half - i].unitary.apply(&st)?;
                    if i == 1 {
                        let w_labels: Vec<String> = p.challenger.rounds[half]
                            .workspace_in()?
                            .labels()
                            .map(|x| x.to_string())
                            .collect();
                        st = fuse_registers(&st, &w_labels, "hm0_w")?;
                    }
                    let resp: Vec<String> = p.challenger.rounds[half - i].response_labels.clone();
                    st = fuse_registers(&st, &resp, &format!("hm{i}"))?;
                    st = compressed_adv.unitaries[i].adjoint().apply(&st)?;
                }
                let st = rename(&st, "hr0", "hm0_m")?;
                let st = st.slice_register("hcoin", 1)?;
                compressed_adv.unitaries[0].adjoint().apply(&st)
            }
        })?;
        let op = OperatorMatrix::new(
            aux_layout.clone(),
            aux_layout.clone(),
            mat,
            OperatorKind::PovmElement,
        )?;
        Ok(op)
    };
    let _ = wd;
    Ok((build(true)?, build(false)?))
}

fn split_mid(s: &PureState, p: &ProtocolInstance, half: usize) -> Result<PureState> {
    // hm0_m → midpoint message registers; hm0_w → the workspace registers.
    let msg: Vec<(String, usize)> = p.challenger.rounds[half]
        .message_labels
        .iter()
        .map(|l| {
            (
                l.clone(),
                p.challenger.rounds[half].unitary.in_layout.dim_of(l).unwrap(),
            )
        })
        .collect();
    let st = split_register(s, "hm0_m", &msg)?;
    let w = p.challenger.rounds[half].workspace_in()?;
    let parts: Vec<(String, usize)> = w.registers().to_vec();
    split_register(&st, "hm0_w", &parts)
}

fn fuse_mid(s: &PureState, p: &ProtocolInstance, half: usize) -> Result<PureState> {
    let msg: Vec<String> = p.challenger.rounds[half].message_labels.clone();
    let st = fuse_registers(s, &msg, "hm0_m")?;
    let w: Vec<String> = p.challenger.rounds[half]
        .workspace_in()?
        .labels()
        .map(|x| x.to_string())
        .collect();
    fuse_registers(&st, &w, "hm0_w")
}

fn split_wire(
    s: &PureState,
    wire: &str,
    p: &ProtocolInstance,
    labels: &[String],
) -> Result<PureState> {
    let mut parts = Vec::new();
    for l in labels {
        let d = dim_anywhere(p, l)?;
        parts.push((l.clone(), d));
    }
    split_register(s, wire, &parts)
}

fn split_wire_named(
    s: &PureState,
    wire: &str,
    p: &ProtocolInstance,
    labels: &[String],
    _round: usize,
) -> Result<PureState> {
    split_wire(s, wire, p, labels)
}

fn dim_anywhere(p: &ProtocolInstance, label: &str) -> Result<usize> {
    for r in &p.challenger.rounds {
        if r.unitary.in_layout.contains(label) {
            return r.unitary.in_layout.dim_of(label);
        }
        if r.unitary.out_layout.contains(label) {
            return r.unitary.out_layout.dim_of(label);
        }
    }
    p.challenger.decision.in_layout.dim_of(label)
}

/// Lifts a compressed adversary to the original `(2r+1)`-message protocol and
/// reports the full inequality chain. The lifted acceptance identities are
/// computed exactly from the branch operators:
/// unconditional acceptance `= ⟨aux|Π_T Π_H Π_T|aux⟩`, abort probability
/// `= 1 − Tr(Π_T aux)`.
pub fn lift_adversary(
    p: &ProtocolInstance,
    compressed: &CompressedProtocol,
    compressed_adv: &Adversary,
) -> Result<LiftReport> {
    let (pi_h, pi_t) = heads_tails_projectors(p, compressed_adv)?;
    let aux = &compressed_adv.advice;
    let heads_probability = pi_h.expectation(aux)?.re.clamp(0.0, 1.0);
    let tails_probability = pi_t.expectation(aux)?.re.clamp(0.0, 1.0);
    let compressed_acceptance =
        crate::protocol::execute(&compressed.instance, compressed_adv)?.accept_probability;

    let aux_rho = DensityOperator::from_pure(aux)?;
    let rho_h = post_measurement(&pi_h, aux)?;
    let rho_t = post_measurement(&pi_t, aux)?;
    let d_h = distances(&rho_h, &aux_rho)?;
    let d_t = distances(&rho_t, &aux_rho)?;
    let d_ht = distances(&rho_h, &rho_t)?;

    // Unconditional lifted acceptance: project Π_T, then the heads branch.
    let t_proj = pi_t.apply(aux)?;
    let uncond = pi_h
        .embed(&t_proj.layout)?
        .expectation(&t_proj)?
        .re
        .clamp(0.0, 1.0);
    let cond = if tails_probability > 1e-12 {
        uncond / tails_probability
    } else {
        0.0
    };

    Ok(LiftReport {
        compressed_acceptance,
        heads_probability,
        tails_probability,
        bures_heads_to_aux: d_h.bures_sq,
        bures_tails_to_aux: d_t.bures_sq,
        bures_heads_to_tails: d_ht.bures_sq,
        fidelity_heads_tails: d_ht.fidelity,
        lifted_conditional: cond.clamp(0.0, 1.0),
        lifted_unconditional: uncond,
        abort_probability: 1.0 - tails_probability,
    })
}

fn post_measurement(proj: &OperatorMatrix, psi: &PureState) -> Result<DensityOperator> {
    let branch = proj.apply(psi)?.permuted_to(&psi.layout)?;
    let n = branch.norm();
    if n < 1e-12 {
        return Err(Error::ZeroNorm);
    }
    DensityOperator::from_pure(&PureState::new(
        psi.layout.clone(),
        branch.amplitudes / cr(n),
    )?)
}

// ---------------------------------------------------------------------------
// Iterated compression and padding
// ---------------------------------------------------------------------------

/// Pads a protocol to `target` messages by prepending rounds with
/// dimension-1 message and response registers (empty messages).
pub fn pad_to_message_count(
    p: &ProtocolInstance,
    honest: Option<&Adversary>,
    target: usize,
) -> Result<(ProtocolInstance, Option<Adversary>)> {
    let current = p.message_count();
    if target < current || (target - current) % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "cannot pad {current} messages to {target}"
        )));
    }
    let extra = (target - current) / 2;
    if extra == 0 {
        return Ok((p.clone(), honest.cloned()));
    }
    let w0 = p.challenger.initial_workspace()?;
    let mut rounds = Vec::new();
    for e in 0..extra {
        let ml = format!("padm{e}");
        let rl = format!("padr{e}");
        let in_l = RegisterLayout::with_cap(
            std::iter::once((ml.clone(), 1usize)).chain(w0.registers().iter().cloned()),
            usize::MAX,
        )?;
        let out_l = RegisterLayout::with_cap(
            std::iter::once((rl.clone(), 1usize)).chain(w0.registers().iter().cloned()),
            usize::MAX,
        )?;
        let n = in_l.total_dim();
        rounds.push(Round {
            unitary: OperatorMatrix::new(in_l, out_l, CMat::identity(n, n), OperatorKind::Unitary)?,
            message_labels: vec![ml],
            response_labels: vec![rl],
        });
    }
    rounds.extend(p.challenger.rounds.iter().cloned());
    let instance = ProtocolInstance::new(
        Challenger {
            rounds,
            decision: p.challenger.decision.clone(),
            decision_projective: p.challenger.decision_projective,
            final_message_labels: p.challenger.final_message_labels.clone(),
        },
        format!("{}-padded", p.label),
    )?;
    let honest_padded = honest
        .map(|h| -> Result<Adversary> {
            let mut unitaries = Vec::new();
            for e in 0..extra {
                let ml = format!("padm{e}");
                let rl_prev = if e == 0 {
                    None
                } else {
                    Some(format!("padr{}", e - 1))
                };
                // produce the empty message (and absorb the empty response)
                let mut in_regs: Vec<(String, usize)> =
                    h.advice.layout.registers().to_vec();
                if let Some(rp) = &rl_prev {
                    in_regs.push((rp.clone(), 1));
                }
                let out_regs: Vec<(String, usize)> = h
                    .advice
                    .layout
                    .registers()
                    .iter()
                    .cloned()
                    .chain(std::iter::once((ml.clone(), 1)))
                    .collect();
                let in_l = RegisterLayout::with_cap(in_regs, usize::MAX)?;
                let out_l = RegisterLayout::with_cap(out_regs, usize::MAX)?;
                let n = in_l.total_dim();
                unitaries.push(OperatorMatrix::new(
                    in_l,
                    out_l,
                    CMat::identity(n, n),
                    OperatorKind::Unitary,
                )?);
            }
            // first real unitary also absorbs the last pad response
            let first = &h.unitaries[0];
            let last_pad = format!("padr{}", extra - 1);
            let in_l = first.in_layout.tensor_with_cap(
                &RegisterLayout::with_cap([(last_pad.as_str(), 1usize)], usize::MAX)?,
                usize::MAX,
            )?;
            let out_l = first.out_layout.clone();
            unitaries.push(OperatorMatrix::new(
                in_l,
                out_l,
                first.mat.clone(),
                OperatorKind::Unitary,
            )?);
            unitaries.extend(h.unitaries[1..].iter().cloned());
            Ok(Adversary {
                unitaries,
                advice: h.advice.clone(),
            })
        })
        .transpose()?;
    Ok((instance, honest_padded))
}

/// Iterates halving down to a 3-message protocol (padding the message count
/// to `2^κ + 1` first). Each level requires the mirror width conditions of
/// [`halve`]; uniform-width toys support one level, which covers
/// `m ∈ {3, 4→5, 5}`.
pub fn compress_to_three(p: &ProtocolInstance) -> Result<CompressedProtocol> {
    let m = p.message_count();
    if m < 3 {
        return Err(Error::MessageCount {
            expected: "at least 3".into(),
            got: m,
        });
    }
    if m == 3 {
        return Ok(CompressedProtocol {
            instance: p.clone(),
            source_messages: m,
            halving_depth: 0,
        });
    }
    let kappa = ((m - 1) as f64).log2().ceil() as u32;
    let target = (1usize << kappa) + 1;
    let (mut current, _) = pad_to_message_count(p, None, target)?;
    let mut depth = 0;
    while current.message_count() > 3 {
        let halved = halve(&current)?;
        current = halved.instance;
        depth += 1;
    }
    Ok(CompressedProtocol {
        instance: current,
        source_messages: m,
        halving_depth: depth,
    })
}

// ---------------------------------------------------------------------------
// Public-coin compilation
// ---------------------------------------------------------------------------

/// Compiles a 3-message protocol into a public-coin one: the prover sends the
/// challenger's post-challenge workspace, the challenger answers with one
/// uniformly random bit, and the final check either runs the decision
/// (heads) or undoes the challenge and checks the initial workspace (tails).
pub fn to_public_coin(p3: &ProtocolInstance) -> Result<CompressedProtocol> {
    p3.require_three_message()?;
    let wd = widths(p3)?;
    let m = wd.msg[0];
    if wd.resp[0] != wd.msg[1] {
        return Err(Error::DimensionMismatch(format!(
            "public-coin compilation needs dim(R₀) = dim(M₁): {} vs {}",
            wd.resp[0], wd.msg[1]
        )));
    }
    let wire = wd.resp[0];
    let w1 = wd.w[1];
    let w0 = wd.w[0];
    let c0 = round_matrix(&p3.challenger.rounds[0])?;
    let dmat = decision_matrix(p3)?;

    // Round 0: receive W₁ as the first message; emit the coin.
    let in0 = RegisterLayout::with_cap(
        [("pm0".to_string(), w1), ("pck".to_string(), 2), ("pcoin".to_string(), 2)],
        usize::MAX,
    )?;
    let out0 = RegisterLayout::with_cap(
        [("pcoin".to_string(), 2), ("pck".to_string(), 2), ("pws".to_string(), w1)],
        usize::MAX,
    )?;
    let n0 = in0.total_dim();
    let mut c0_mat = CMat::from_element(n0, n0, C_ZERO);
    let istr = in0.strides();
    let ostr = out0.strides();
    for x in 0..w1 {
        for ck in 0..2usize {
            for coin in 0..2usize {
                let col = x * istr[0] + ck * istr[1] + coin * istr[2];
                for t in 0..2usize {
                    let h_amp = if ck == 1 && t == 1 { -1.0 } else { 1.0 }
                        * std::f64::consts::FRAC_1_SQRT_2;
                    let row = (coin ^ t) * ostr[0] + t * ostr[1] + x * ostr[2];
                    c0_mat[(row, col)] += cr(h_amp);
                }
            }
        }
    }
    let round0 = Round {
        unitary: OperatorMatrix::new(in0, out0, c0_mat, OperatorKind::Unitary)?,
        message_labels: vec!["pm0".into()],
        response_labels: vec!["pcoin".into()],
    };

    // Decision on [pm1, pck, pws]: heads D; tails C₀† then |0⟩⟨0| on W₀.
    let dec_in = RegisterLayout::with_cap(
        [("pm1".to_string(), wire), ("pck".to_string(), 2), ("pws".to_string(), w1)],
        usize::MAX,
    )?;
    let n = dec_in.total_dim();
    let mut dec = CMat::from_element(n, n, C_ZERO);
    let tails_check = {
        let z = zero_w_projector(m, w0);
        &c0 * z * c0.adjoint()
    };
    let istr = dec_in.strides();
    for x in 0..wire {
        for ws in 0..w1 {
            for ck in 0..2usize {
                let col = x * istr[0] + ck * istr[1] + ws * istr[2];
                let block = if ck == 0 { &dmat } else { &tails_check };
                for out_idx in 0..(wire * w1) {
                    let amp = block[(out_idx, x * w1 + ws)];
                    if amp == C_ZERO {
                        continue;
                    }
                    let (xo, wo) = (out_idx / w1, out_idx % w1);
                    let row = xo * istr[0] + ck * istr[1] + wo * istr[2];
                    dec[(row, col)] += amp;
                }
            }
        }
    }
    let instance = ProtocolInstance::new(
        Challenger {
            rounds: vec![round0],
            decision: OperatorMatrix::on(dec_in, dec, OperatorKind::Projector)?,
            decision_projective: true,
            final_message_labels: vec!["pm1".into()],
        },
        format!("{}-public-coin", p3.label),
    )?;
    Ok(CompressedProtocol {
        instance,
        source_messages: 3,
        halving_depth: 0,
    })
}

/// Honest prover for the public-coin compilation: simulate the challenge
/// locally, send the challenger's workspace, then forward the message
/// (heads) or hand back the response (tails).
pub fn public_coin_honest(p3: &ProtocolInstance, honest: &Adversary) -> Result<Adversary> {
    p3.require_three_message()?;
    let w0 = p3.challenger.initial_workspace()?;
    let mut advice = honest.advice.clone();
    for (l, d) in w0.registers() {
        advice = advice.append_register(&format!("sim_{l}"), *d, 0)?;
    }
    let advice_layout = advice.layout.clone();
    let w1_labels: Vec<String> = p3.challenger.rounds[0]
        .workspace_out()?
        .labels()
        .map(|s| s.to_string())
        .collect();
    let (a0_mat, a0_out) = matrix_from_map(&advice_layout, |mut state| {
        for (l, _) in w0.registers() {
            state = rename(&state, &format!("sim_{l}"), l)?;
        }
        state = honest.unitaries[0].apply(&state)?;
        state = p3.challenger.rounds[0].unitary.apply(&state)?;
        fuse_registers(&state, &w1_labels, "pm0")
    })?;
    let a0 = OperatorMatrix::new(advice_layout, a0_out.clone(), a0_mat, OperatorKind::Unitary)?;

    let carry = a0_out.without(&["pm0"])?;
    let in_l = carry.tensor_with_cap(
        &RegisterLayout::with_cap([("pcoin", 2usize)], usize::MAX)?,
        usize::MAX,
    )?;
    let resp_labels: Vec<String> = p3.challenger.rounds[0].response_labels.clone();
    let final_labels: Vec<String> = p3.challenger.final_message_labels.clone();
    let (a1_mat, a1_out) = matrix_from_map(&in_l, |state| {
        let heads = state.slice_register("pcoin", 0)?;
        let tails = state.slice_register("pcoin", 1)?;
        let mut acc: Option<PureState> = None;
        if heads.norm() > 0.0 {
            let mut s = honest.unitaries[1].apply(&heads)?;
            s = fuse_registers(&s, &final_labels, "pm1")?;
            acc = Some(s.append_register("pcoin", 2, 0)?);
        }
        if tails.norm() > 0.0 {
            let s = fuse_registers(&tails, &resp_labels, "pm1")?;
            let s = s.append_register("pcoin", 2, 1)?;
            match acc {
                None => acc = Some(s),
                Some(prev) => acc = Some(prev.add(&s.permuted_to(&prev.layout)?)?),
            }
        }
        acc.ok_or(Error::ZeroNorm)
    })?;
    let a1 = OperatorMatrix::new(in_l, a1_out, a1_mat, OperatorKind::Unitary)?;
    Ok(Adversary {
        unitaries: vec![a0, a1],
        advice,
    })
}

/// Branch analysis of a public-coin adversary, mirroring [`lift_adversary`]:
/// `Π_H` conjugates the decision through the heads branch, `Π_T` the
/// challenge-undo check through the tails branch.
pub fn public_coin_lift(
    p3: &ProtocolInstance,
    compiled: &CompressedProtocol,
    adv: &Adversary,
) -> Result<LiftReport> {
    p3.require_three_message()?;
    let aux_layout = adv.advice.layout.clone();
    let w1 = p3.challenger.rounds[0].workspace_out()?;
    let resp_labels: Vec<String> = p3.challenger.rounds[0].response_labels.clone();
    let final_labels: Vec<String> = p3.challenger.final_message_labels.clone();
    let w0 = p3.challenger.initial_workspace()?;

    let build = |heads: bool| -> Result<OperatorMatrix> {
        let (mat, _) = matrix_from_map(&aux_layout, |state| {
            let mut s = adv.unitaries[0].apply(&state)?;
            s = s.append_register("pcoin", 2, if heads { 0 } else { 1 })?;
            s = adv.unitaries[1].apply(&s)?;
            // pm0 carries W₁; pm1 carries M₁ (heads) or R₀ (tails).
            let w1_parts: Vec<(String, usize)> = w1.registers().to_vec();
            let mut st = split_register(&s, "pm0", &w1_parts)?;
            if heads {
                let parts: Vec<(String, usize)> = final_labels
                    .iter()
                    .map(|l| (l.clone(), dim_anywhere(p3, l).unwrap()))
                    .collect();
                st = split_register(&st, "pm1", &parts)?;
                let d = p3.challenger.decision.embed(&st.layout)?;
                st = d.apply(&st)?.permuted_to(&st.layout)?;
                let mut back = fuse_registers(&st, &final_labels, "pm1")?;
                back = fuse_registers(
                    &back,
                    &w1_parts.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>(),
                    "pm0",
                )?;
                let back = adv.unitaries[1].adjoint().apply(&back)?;
                let back = back.slice_register("pcoin", 0)?;
                adv.unitaries[0].adjoint().apply(&back)
            } else {
                let parts: Vec<(String, usize)> = resp_labels
                    .iter()
                    .map(|l| (l.clone(), dim_anywhere(p3, l).unwrap()))
                    .collect();
                st = split_register(&st, "pm1", &parts)?;
                st = p3.challenger.rounds[0].unitary.adjoint().apply(&st)?;
                for l in w0.labels() {
                    let d = w0.dim_of(l)?;
                    let mut z = CMat::from_element(d, d, C_ZERO);
                    z[(0, 0)] = cr(1.0);
                    let zp = OperatorMatrix::on(
                        RegisterLayout::with_cap([(l, d)], usize::MAX)?,
                        z,
                        OperatorKind::Projector,
                    )?
                    .embed(&st.layout)?;
                    st = zp.apply(&st)?.permuted_to(&st.layout)?;
                }
                let mut back = p3.challenger.rounds[0].unitary.apply(&st)?;
                back = fuse_registers(&back, &resp_labels, "pm1")?;
                back = fuse_registers(
                    &back,
                    &w1_parts.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>(),
                    "pm0",
                )?;
                let back = adv.unitaries[1].adjoint().apply(&back)?;
                let back = back.slice_register("pcoin", 1)?;
                adv.unitaries[0].adjoint().apply(&back)
            }
        })?;
        OperatorMatrix::new(
            aux_layout.clone(),
            aux_layout.clone(),
            mat,
            OperatorKind::PovmElement,
        )
    };
    let pi_h = build(true)?;
    let pi_t = build(false)?;

    let aux = &adv.advice;
    let heads_probability = pi_h.expectation(aux)?.re.clamp(0.0, 1.0);
    let tails_probability = pi_t.expectation(aux)?.re.clamp(0.0, 1.0);
    let compressed_acceptance =
        crate::protocol::execute(&compiled.instance, adv)?.accept_probability;
    let aux_rho = DensityOperator::from_pure(aux)?;
    let rho_h = post_measurement(&pi_h, aux)?;
    let rho_t = post_measurement(&pi_t, aux)?;
    let d_h = distances(&rho_h, &aux_rho)?;
    let d_t = distances(&rho_t, &aux_rho)?;
    let d_ht = distances(&rho_h, &rho_t)?;
    let t_proj = pi_t.apply(aux)?;
    let uncond = pi_h
        .embed(&t_proj.layout)?
        .expectation(&t_proj)?
        .re
        .clamp(0.0, 1.0);
    let cond = if tails_probability > 1e-12 {
        (uncond / tails_probability).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(LiftReport {
        compressed_acceptance,
        heads_probability,
        tails_probability,
        bures_heads_to_aux: d_h.bures_sq,
        bures_tails_to_aux: d_t.bures_sq,
        bures_heads_to_tails: d_ht.bures_sq,
        fidelity_heads_tails: d_ht.fidelity,
        lifted_conditional: cond,
        lifted_unconditional: uncond,
        abort_probability: 1.0 - tails_probability,
    })
}

// ---------------------------------------------------------------------------
// Toy generators
// ---------------------------------------------------------------------------

/// A Haar-random uniform-width `(2r+1)`-message protocol with an honest
/// adversary planted to accept with exactly the requested probability.
pub fn random_multiround_instance(
    r: usize,
    message_dim: usize,
    workspace_dim: usize,
    adversary_dim: usize,
    honest_acceptance: f64,
    rng: &mut impl rand::Rng,
) -> Result<(ProtocolInstance, Adversary)> {
    if !(0.0..=1.0).contains(&honest_acceptance) {
        return Err(Error::InvalidParameter("acceptance must be in [0,1]".into()));
    }
    let m = message_dim;
    let w = workspace_dim;
    let a = adversary_dim;
    let mut rounds = Vec::new();
    for i in 0..r {
        rounds.push(Round {
            unitary: OperatorMatrix::new(
                RegisterLayout::new([(format!("M{i}"), m), (format!("W{i}"), w)])?,
                RegisterLayout::new([(format!("R{i}"), m), (format!("W{}", i + 1), w)])?,
                crate::rng::haar_unitary(m * w, rng),
                OperatorKind::Unitary,
            )?,
            message_labels: vec![format!("M{i}")],
            response_labels: vec![format!("R{i}")],
        });
    }
    // Honest adversary: advice on [A, M0], Haar unitaries for each round.
    let advice_layout = RegisterLayout::new([("A", a), ("M0", m)])?;
    let advice = crate::rng::random_pure_state(advice_layout.clone(), rng);
    let mut unitaries = vec![OperatorMatrix::new(
        advice_layout.clone(),
        advice_layout.clone(),
        CMat::identity(a * m, a * m),
        OperatorKind::Unitary,
    )?];
    for i in 1..=r {
        unitaries.push(OperatorMatrix::new(
            RegisterLayout::new([("A".to_string(), a), (format!("R{}", i - 1), m)])?,
            RegisterLayout::new([("A".to_string(), a), (format!("M{i}"), m)])?,
            crate::rng::haar_unitary(a * m, rng),
            OperatorKind::Unitary,
        )?);
    }

    // Plant the decision at the honest final state.
    let mut state = advice.clone();
    state = state.append_register(&format!("W{}", 0), w, 0)?;
    for i in 0..r {
        state = unitaries[i].apply(&state)?;
        state = rounds[i].unitary.apply(&state)?;
    }
    state = unitaries[r].apply(&state)?;
    // Reduce onto [M_r, W_r]; plant θ = √c |χ⟩ + √(1−c)|χ⊥⟩ per the honest
    // state's purification structure: build D as a projector on the final
    // message/workspace registers whose overlap with the honest reduced
    // state equals the requested acceptance.
    let fin_labels: Vec<&str> = {
        let mut v = vec![];
        v.push("A".into());
        let _: Vec<String> = v;
        vec![]
    };
    let _ = fin_labels;
    let m_label = format!("M{r}");
    let w_label = format!("W{r}");
    let dec_layout = RegisterLayout::new([(m_label.clone(), m), (w_label.clone(), w)])?;
    // The honest final state on (A ⊗ M_r ⊗ W_r): write as Σ_a |a⟩ ⊗ |φ_a⟩;
    // a projector D accepts with probability Σ_a ⟨φ_a| D |φ_a⟩. Plant D on
    // the dominant direction: use the reduced density's top eigenvector χ,
    // then tilt: θ = cos·χ + sin·χ⊥ to hit the target on the nose is not
    // exactly possible for entangled finals, so tilt numerically.
    let ordered = state.reordered(&{
        let mut labels: Vec<&str> = vec![];
        labels.push("A");
        labels.push(&m_label);
        labels.push(&w_label);
        labels
    })?;
    let rho = DensityOperator::from_pure(&ordered)?
        .partial_trace(&["A"])?;
    let eig = crate::qops::eigh(&OperatorMatrix::on(
        dec_layout.clone(),
        rho.matrix.clone(),
        OperatorKind::General,
    )?)?;
    // Greedy exact planting in the eigenbasis of the reduced honest state:
    // include whole eigenvectors while they fit under the target, then one
    // direction tilted toward the least-weight eigenvector to land exactly
    // (eigenvectors are orthogonal, so cross terms vanish).
    let n_e = eig.values.len();
    let mut order: Vec<usize> = (0..n_e).collect();
    order.sort_by(|&x, &y| eig.values[y].partial_cmp(&eig.values[x]).unwrap());
    let low_idx = order[n_e - 1];
    let low_w = eig.values[low_idx].max(0.0);
    let mw_dim = m * w;
    let mut d_mat = CMat::from_element(mw_dim, mw_dim, C_ZERO);
    let mut remaining = honest_acceptance;
    let mut done = false;
    for &idx in order.iter().take(n_e - 1) {
        let lam = eig.values[idx].max(0.0);
        let v = eig.vector(idx);
        if remaining >= lam - 1e-12 {
            d_mat += &v * v.adjoint();
            remaining -= lam;
        } else {
            // Tilt between this eigenvector and the least-weight one.
            if lam - low_w > 1e-12 && remaining >= low_w - 1e-12 {
                let cos2 = ((remaining - low_w) / (lam - low_w)).clamp(0.0, 1.0);
                let dir: CVec =
                    &v * cr(cos2.sqrt()) + eig.vector(low_idx) * cr((1.0 - cos2).sqrt());
                d_mat += &dir * dir.adjoint();
            }
            done = true;
            break;
        }
    }
    if !done && remaining >= low_w - 1e-9 {
        // Everything else included (c at or near 1): take the last direction.
        let v = eig.vector(low_idx);
        d_mat += &v * v.adjoint();
    }
    let decision = OperatorMatrix::on(dec_layout, d_mat, OperatorKind::Projector)?;
    let instance = ProtocolInstance::new(
        Challenger {
            rounds,
            decision,
            decision_projective: true,
            final_message_labels: vec![m_label],
        },
        format!("random-{}msg", 2 * r + 1),
    )?;
    Ok((
        instance,
        Adversary {
            unitaries,
            advice,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::execute;
    use crate::rng::trial_rng;

    /// A 5-message toy with honest acceptance exactly `1 − ε`, planted via a
    /// rank-1 decision on the honest path.
    fn five_message_toy(eps: f64, seed: u64) -> (ProtocolInstance, Adversary) {
        let mut rng = trial_rng(71, seed);
        random_multiround_instance(2, 2, 2, 2, 1.0 - eps, &mut rng).unwrap()
    }

    #[test]
    fn planted_honest_acceptance_is_exact() {
        let (p, h) = five_message_toy(0.2, 0);
        let r = execute(&p, &h).unwrap();
        assert!(
            (r.accept_probability - 0.8).abs() < 1e-6,
            "{}",
            r.accept_probability
        );
    }

    #[test]
    fn halve_reduces_messages() {
        let (p, _) = five_message_toy(0.0, 1);
        assert_eq!(p.message_count(), 5);
        let c = halve(&p).unwrap();
        assert_eq!(c.instance.message_count(), 3);
    }

    #[test]
    fn halve_rejects_three_message_input() {
        let mut rng = trial_rng(71, 2);
        let (p, _) = crate::protocol::random_three_message(
            crate::protocol::ThreeMessageDims::qubit(),
            2,
            &mut rng,
        )
        .unwrap();
        assert!(halve(&p).is_err());
    }

    #[test]
    fn compressed_honest_acceptance_is_one_minus_half_eps() {
        for (t, eps) in [(3u64, 0.0f64), (4, 0.2), (5, 0.35)] {
            let (p, h) = five_message_toy(eps, t);
            let c = halve(&p).unwrap();
            let hc = compress_honest(&p, &h).unwrap();
            let r = execute(&c.instance, &hc).unwrap();
            assert!(
                (r.accept_probability - (1.0 - eps / 2.0)).abs() < 1e-6,
                "eps {eps}: got {}",
                r.accept_probability
            );
        }
    }

    #[test]
    fn heads_and_tails_branches_behave_honestly() {
        let eps = 0.2;
        let (p, h) = five_message_toy(eps, 6);
        let hc = compress_honest(&p, &h).unwrap();
        let (pi_h, pi_t) = heads_tails_projectors(&p, &hc).unwrap();
        let heads = pi_h.expectation(&hc.advice).unwrap().re;
        let tails = pi_t.expectation(&hc.advice).unwrap().re;
        assert!((heads - (1.0 - eps)).abs() < 1e-6, "heads {heads}");
        assert!((tails - 1.0).abs() < 1e-6, "tails {tails}");
    }

    #[test]
    fn perfect_compressed_adversary_lifts_to_one() {
        let (p, h) = five_message_toy(0.0, 7);
        let c = halve(&p).unwrap();
        let hc = compress_honest(&p, &h).unwrap();
        let report = lift_adversary(&p, &c, &hc).unwrap();
        assert!((report.compressed_acceptance - 1.0).abs() < 1e-6);
        assert!((report.lifted_unconditional - 1.0).abs() < 1e-6, "{report:?}");
    }

    #[test]
    fn lifted_adversary_meets_sixteen_eps_chain() {
        // Perturb a perfect compressed adversary to measured ε ≤ 0.05 and
        // check every inequality of the chain.
        for t in 0..5 {
            let (p, h) = five_message_toy(0.0, 20 + t);
            let c = halve(&p).unwrap();
            let mut hc = compress_honest(&p, &h).unwrap();
            let mut rng = trial_rng(72, t);
            // Random small rotation on the advice.
            let dim = hc.advice.dim();
            let noise = crate::rng::random_pure_state(hc.advice.layout.clone(), &mut rng);
            let angle: f64 = 0.1;
            let mixed = {
                let mut v = hc.advice.amplitudes.clone() * cr(angle.cos());
                // orthogonalize the noise against the advice
                let overlap = hc.advice.amplitudes.dotc(&noise.amplitudes);
                let orth = &noise.amplitudes - &hc.advice.amplitudes * overlap;
                let n = orth.norm();
                if n > 1e-9 {
                    v += orth * cr(angle.sin() / n);
                }
                let norm = v.norm();
                PureState::new(hc.advice.layout.clone(), v / cr(norm)).unwrap()
            };
            let _ = dim;
            hc.advice = mixed;
            let report = lift_adversary(&p, &c, &hc).unwrap();
            let eps = 1.0 - report.compressed_acceptance;
            if eps > 0.05 {
                continue;
            }
            assert!(report.heads_probability >= 1.0 - 2.0 * eps - 1e-9, "{report:?}");
            assert!(report.tails_probability >= 1.0 - 2.0 * eps - 1e-9, "{report:?}");
            assert!(report.bures_heads_to_aux <= 3.0 * eps + 1e-9, "{report:?}");
            assert!(report.bures_tails_to_aux <= 3.0 * eps + 1e-9, "{report:?}");
            assert!(report.bures_heads_to_tails <= 12.0 * eps + 1e-9, "{report:?}");
            assert!(report.fidelity_heads_tails >= 1.0 - 12.0 * eps - 1e-9, "{report:?}");
            assert!(
                report.lifted_unconditional >= 1.0 - 16.0 * eps - 1e-9,
                "{report:?}"
            );
            assert!(report.abort_probability <= 2.0 * eps + 1e-9, "{report:?}");
        }
    }

    #[test]
    fn compress_to_three_formula() {
        // m = 5, honest acceptance c: one halving gives exactly 1 − (1−c)/2,
        // which meets the bound 1 − 2(1−c)/(m−1).
        let c_target = 0.9;
        let (p, h) = five_message_toy(1.0 - c_target, 9);
        let compressed = compress_to_three(&p).unwrap();
        assert_eq!(compressed.instance.message_count(), 3);
        assert_eq!(compressed.halving_depth, 1);
        let hc = compress_honest(&p, &h).unwrap();
        let r = execute(&compressed.instance, &hc).unwrap();
        let exact = 1.0 - (1.0 - c_target) / 2.0;
        let bound = 1.0 - 2.0 * (1.0 - c_target) / 4.0;
        assert!((r.accept_probability - exact).abs() < 1e-6);
        assert!(r.accept_probability >= bound - 1e-9);
    }

    #[test]
    fn compress_to_three_identity_on_three() {
        let mut rng = trial_rng(71, 10);
        let (p, _) = crate::protocol::random_three_message(
            crate::protocol::ThreeMessageDims::qubit(),
            2,
            &mut rng,
        )
        .unwrap();
        let c = compress_to_three(&p).unwrap();
        assert_eq!(c.halving_depth, 0);
        assert_eq!(c.instance.message_count(), 3);
    }

    #[test]
    fn public_coin_completeness_formula() {
        for (seed, c_target) in [(11u64, 1.0f64), (12, 0.8)] {
            let mut rng = trial_rng(71, seed);
            let (p, h) = random_multiround_instance(1, 2, 2, 2, c_target, &mut rng).unwrap();
            let compiled = to_public_coin(&p).unwrap();
            let hc = public_coin_honest(&p, &h).unwrap();
            let r = execute(&compiled.instance, &hc).unwrap();
            let expected = 1.0 - (1.0 - c_target) / 2.0;
            assert!(
                (r.accept_probability - expected).abs() < 1e-6,
                "c={c_target}: got {}",
                r.accept_probability
            );
        }
    }

    #[test]
    fn public_coin_transcript_has_one_coin_bit() {
        let mut rng = trial_rng(71, 13);
        let (p, _) = random_multiround_instance(1, 2, 2, 2, 1.0, &mut rng).unwrap();
        let compiled = to_public_coin(&p).unwrap();
        let round = &compiled.instance.challenger.rounds[0];
        assert_eq!(round.response_labels, vec!["pcoin".to_string()]);
        assert_eq!(
            round.unitary.out_layout.dim_of("pcoin").unwrap(),
            2,
            "the challenger's only message is one coin"
        );
    }

    #[test]
    fn public_coin_lift_chain() {
        let mut rng = trial_rng(71, 14);
        let (p, h) = random_multiround_instance(1, 2, 2, 2, 1.0, &mut rng).unwrap();
        let compiled = to_public_coin(&p).unwrap();
        let mut hc = public_coin_honest(&p, &h).unwrap();
        // small perturbation
        let noise = crate::rng::random_pure_state(hc.advice.layout.clone(), &mut rng);
        let overlap = hc.advice.amplitudes.dotc(&noise.amplitudes);
        let orth = &noise.amplitudes - &hc.advice.amplitudes * overlap;
        let n = orth.norm();
        let angle: f64 = 0.08;
        let v = hc.advice.amplitudes.clone() * cr(angle.cos()) + orth * cr(angle.sin() / n);
        let norm = v.norm();
        hc.advice = PureState::new(hc.advice.layout.clone(), v / cr(norm)).unwrap();
        let report = public_coin_lift(&p, &compiled, &hc).unwrap();
        let eps = 1.0 - report.compressed_acceptance;
        assert!(
            report.lifted_unconditional >= 1.0 - 16.0 * eps - 1e-9,
            "{report:?}"
        );
    }

    #[test]
    fn padding_preserves_acceptance() {
        let (p, h) = five_message_toy(0.25, 15);
        let before = execute(&p, &h).unwrap().accept_probability;
        let (padded, hp) = pad_to_message_count(&p, Some(&h), 9).unwrap();
        assert_eq!(padded.message_count(), 9);
        let after = execute(&padded, &hp.unwrap()).unwrap().accept_probability;
        assert!((before - after).abs() < 1e-9);
    }
}
