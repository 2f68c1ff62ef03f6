//! The (2r+1)-message challenger/adversary game model, execution, k-fold
//! parallel repetition, and the prefix-game operators of the extraction
//! reductions.
//!
//! Message flow: the adversary applies `A_i` on its private registers plus
//! the previous response `R_{i−1}` to produce the message `M_i`; the
//! challenger applies `C_i` on `M_i·W_i` to produce `R_i·W_{i+1}`; after the
//! final message the challenger measures the decision POVM `{D, id − D}` on
//! `M_r·W_r`. All registers are labeled, and parallel repetition relabels
//! fold `j`'s copy of register `X` as `X#j`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::qops::{
    cr, CMat, DensityOperator, OperatorKind, OperatorMatrix, OperatorSchema, PureState,
    RegisterLayout, StateSchema, C_ZERO,
};
use crate::rng::haar_unitary;
use crate::{Error, Result, DEFAULT_DIM_CAP};

/// One challenger interaction round: a unitary from `M_i·W_i` to
/// `R_i·W_{i+1}` with the message/response registers named explicitly.
#[derive(Debug, Clone)]
pub struct Round {
    pub unitary: OperatorMatrix,
    pub message_labels: Vec<String>,
    pub response_labels: Vec<String>,
}

impl Round {
    /// Workspace registers on the input side (`W_i`).
    pub fn workspace_in(&self) -> Result<RegisterLayout> {
        let m: Vec<&str> = self.message_labels.iter().map(|s| s.as_str()).collect();
        self.unitary.in_layout.without(&m)
    }

    /// Workspace registers on the output side (`W_{i+1}`).
    pub fn workspace_out(&self) -> Result<RegisterLayout> {
        let r: Vec<&str> = self.response_labels.iter().map(|s| s.as_str()).collect();
        self.unitary.out_layout.without(&r)
    }
}

/// The challenger: interaction rounds plus a decision element on
/// `M_r·W_r`.
#[derive(Debug, Clone)]
pub struct Challenger {
    pub rounds: Vec<Round>,
    pub decision: OperatorMatrix,
    /// When true the decision is treated as a projector; otherwise a general
    /// POVM element.
    pub decision_projective: bool,
    /// Message registers of the adversary's final message.
    pub final_message_labels: Vec<String>,
}

impl Challenger {
    /// Validates round-to-round workspace chaining and the decision layout.
    pub fn validate(&self) -> Result<()> {
        for (i, round) in self.rounds.iter().enumerate() {
            for l in &round.message_labels {
                round.unitary.in_layout.position(l)?;
            }
            for l in &round.response_labels {
                round.unitary.out_layout.position(l)?;
            }
            if i + 1 < self.rounds.len() {
                let w_out = round.workspace_out()?;
                let next = &self.rounds[i + 1];
                let w_in = next.workspace_in()?;
                for (l, d) in w_out.registers() {
                    if w_in.dim_of(l)? != *d {
                        return Err(Error::LayoutMismatch(format!(
                            "workspace register {l} does not chain between rounds {i} and {}",
                            i + 1
                        )));
                    }
                }
            }
        }
        if self.decision_projective {
            let m = &self.decision.mat;
            let res = (m * m - m).norm().max((m - m.adjoint()).norm());
            if res > 1e-8 {
                return Err(Error::KindCheckFailed {
                    kind: "projective decision",
                    residual: res,
                });
            }
        }
        for l in &self.final_message_labels {
            self.decision.in_layout.position(l)?;
        }
        Ok(())
    }

    /// Initial workspace registers `W₀` (all |0⟩ at the start).
    pub fn initial_workspace(&self) -> Result<RegisterLayout> {
        match self.rounds.first() {
            Some(r) => r.workspace_in(),
            None => {
                let m: Vec<&str> = self.final_message_labels.iter().map(|s| s.as_str()).collect();
                self.decision.in_layout.without(&m)
            }
        }
    }
}

/// A (2r+1)-message protocol instance.
#[derive(Debug, Clone)]
pub struct ProtocolInstance {
    pub challenger: Challenger,
    /// Informational tag (security parameter or description).
    pub label: String,
}

impl ProtocolInstance {
    pub fn new(challenger: Challenger, label: impl Into<String>) -> Result<Self> {
        challenger.validate()?;
        Ok(Self {
            challenger,
            label: label.into(),
        })
    }

    /// Number of messages exchanged: `2r + 1`.
    pub fn message_count(&self) -> usize {
        2 * self.challenger.rounds.len() + 1
    }

    pub fn require_three_message(&self) -> Result<()> {
        if self.message_count() != 3 {
            return Err(Error::MessageCount {
                expected: "3".into(),
                got: self.message_count(),
            });
        }
        Ok(())
    }
}

/// The adversary: a unitary per message plus an advice state on its private
/// registers. For 3-message protocols the first unitary may be the identity
/// with the first message folded into the advice.
#[derive(Debug, Clone)]
pub struct Adversary {
    pub unitaries: Vec<OperatorMatrix>,
    pub advice: PureState,
}

/// Result of executing a protocol with an adversary.
#[derive(Debug, Clone)]
pub struct ExecutionResult {
    /// Joint state just before the decision measurement.
    pub final_state: PureState,
    pub accept_probability: f64,
}

/// Runs the protocol: `A₀, C₀, A₁, C₁, …, A_r`, then evaluates the decision.
pub fn execute(p: &ProtocolInstance, a: &Adversary) -> Result<ExecutionResult> {
    let r = p.challenger.rounds.len();
    if a.unitaries.len() != r + 1 {
        return Err(Error::LayoutMismatch(format!(
            "adversary supplies {} unitaries for {} interactions",
            a.unitaries.len(),
            r
        )));
    }
    if !a.advice.is_normalized() {
        return Err(Error::Precondition("advice must be normalized".into()));
    }
    let w0 = p.challenger.initial_workspace()?;
    let mut state = a.advice.clone();
    for (label, dim) in w0.registers() {
        state = state.append_register(label, *dim, 0)?;
    }
    for i in 0..r {
        state = a.unitaries[i].apply(&state)?;
        state = p.challenger.rounds[i].unitary.apply(&state)?;
    }
    state = a.unitaries[r].apply(&state)?;
    // Expectation through subset application: embedding the decision densely
    // would materialize a total-dimension-squared matrix.
    let accept = p
        .challenger
        .decision
        .expectation(&state)?
        .re
        .clamp(0.0, 1.0);
    Ok(ExecutionResult {
        final_state: state,
        accept_probability: accept,
    })
}

/// Acceptance probability for a mixed advice state (affine in the advice by
/// linearity of the execution).
pub fn execute_density(p: &ProtocolInstance, a: &Adversary, advice: &DensityOperator) -> Result<f64> {
    let mut acc = 0.0;
    for (w, psi) in advice.eigen_ensemble()? {
        let adv = Adversary {
            unitaries: a.unitaries.clone(),
            advice: psi,
        };
        acc += w * execute(p, &adv)?.accept_probability;
    }
    Ok(acc / advice.trace().max(1e-300))
}

/// Fold-relabeled register name.
pub fn fold_label(base: &str, fold: usize) -> String {
    format!("{base}#{fold}")
}

fn relabel_layout(l: &RegisterLayout, fold: usize) -> Result<RegisterLayout> {
    RegisterLayout::with_cap(
        l.registers()
            .iter()
            .map(|(name, d)| (fold_label(name, fold), *d)),
        usize::MAX,
    )
}

fn relabel_operator(op: &OperatorMatrix, fold: usize) -> Result<OperatorMatrix> {
    OperatorMatrix::new(
        relabel_layout(&op.in_layout, fold)?,
        relabel_layout(&op.out_layout, fold)?,
        op.mat.clone(),
        op.kind,
    )
}

/// The k-fold parallel repetition: challenger unitaries become k-fold tensor
/// powers, the decision becomes `D^{⊗k}`, and registers gain fold suffixes.
pub fn parallel_repeat(p: &ProtocolInstance, k: usize) -> Result<ProtocolInstance> {
    parallel_repeat_with_cap(p, k, DEFAULT_DIM_CAP)
}

pub fn parallel_repeat_with_cap(
    p: &ProtocolInstance,
    k: usize,
    cap: usize,
) -> Result<ProtocolInstance> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut rounds = Vec::new();
    for round in &p.challenger.rounds {
        let mut op: Option<OperatorMatrix> = None;
        let mut message_labels = Vec::new();
        let mut response_labels = Vec::new();
        for j in 1..=k {
            let fold_op = relabel_operator(&round.unitary, j)?;
            op = Some(match op {
                None => fold_op,
                Some(acc) => acc.tensor_with_cap(&fold_op, cap)?,
            });
            message_labels.extend(round.message_labels.iter().map(|l| fold_label(l, j)));
            response_labels.extend(round.response_labels.iter().map(|l| fold_label(l, j)));
        }
        rounds.push(Round {
            unitary: op.expect("k >= 1"),
            message_labels,
            response_labels,
        });
    }
    let mut decision: Option<OperatorMatrix> = None;
    let mut final_message_labels = Vec::new();
    for j in 1..=k {
        let fold_d = relabel_operator(&p.challenger.decision, j)?;
        decision = Some(match decision {
            None => fold_d,
            Some(acc) => acc.tensor_with_cap(&fold_d, cap)?,
        });
        final_message_labels.extend(
            p.challenger
                .final_message_labels
                .iter()
                .map(|l| fold_label(l, j)),
        );
    }
    ProtocolInstance::new(
        Challenger {
            rounds,
            decision: decision.expect("k >= 1"),
            decision_projective: p.challenger.decision_projective,
            final_message_labels,
        },
        format!("{}^k{}", p.label, k),
    )
}

/// The product adversary `(A^{⊗k}, aux^{⊗k})` for the k-fold repetition of a
/// protocol, from a single-fold adversary.
pub fn product_adversary(a: &Adversary, k: usize) -> Result<Adversary> {
    product_adversary_with_cap(a, k, DEFAULT_DIM_CAP)
}

pub fn product_adversary_with_cap(a: &Adversary, k: usize, cap: usize) -> Result<Adversary> {
    let mut unitaries = Vec::new();
    for u in &a.unitaries {
        let mut acc: Option<OperatorMatrix> = None;
        for j in 1..=k {
            let f = relabel_operator(u, j)?;
            acc = Some(match acc {
                None => f,
                Some(prev) => prev.tensor_with_cap(&f, cap)?,
            });
        }
        unitaries.push(acc.expect("k >= 1"));
    }
    let mut advice: Option<PureState> = None;
    for j in 1..=k {
        let f = PureState::new(relabel_layout(&a.advice.layout, j)?, a.advice.amplitudes.clone())?;
        advice = Some(match advice {
            None => f,
            Some(prev) => prev.tensor_with_cap(&f, cap)?,
        });
    }
    Ok(Adversary {
        unitaries,
        advice: advice.expect("k >= 1"),
    })
}

/// A three-message protocol in the prefix-operator conventions: the single
/// challenger unitary `C`, the decision `D`, and an adversary unitary `A` for
/// the k-fold game acting on `[private…, R₀ folds…] → [private…, M₁ folds…]`.
///
/// `G_i = (C^{(≤k)})† A† D^{(≤i)} A C^{(≤k)}` acts on the pre-challenge space
/// `[private…, M₀^{(≤k)}, W₀^{(≤k)}]`.
pub struct PrefixGame<'a> {
    pub protocol: &'a ProtocolInstance,
    pub adversary_unitary: &'a OperatorMatrix,
    pub k: usize,
}

impl<'a> PrefixGame<'a> {
    pub fn new(
        protocol: &'a ProtocolInstance,
        adversary_unitary: &'a OperatorMatrix,
        k: usize,
    ) -> Result<Self> {
        protocol.require_three_message()?;
        if k < 1 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let game = Self {
            protocol,
            adversary_unitary,
            k,
        };
        // The adversary must consume every fold's response register.
        for j in 1..=k {
            for l in game.response_labels_fold(j) {
                adversary_unitary.in_layout.position(&l)?;
            }
        }
        Ok(game)
    }

    fn round(&self) -> &Round {
        &self.protocol.challenger.rounds[0]
    }

    fn response_labels_fold(&self, j: usize) -> Vec<String> {
        self.round()
            .response_labels
            .iter()
            .map(|l| fold_label(l, j))
            .collect()
    }

    /// Adversary private registers: everything in its input layout that is
    /// not a response register.
    pub fn private_layout(&self) -> Result<RegisterLayout> {
        let mut resp = Vec::new();
        for j in 1..=self.k {
            resp.extend(self.response_labels_fold(j));
        }
        let resp_refs: Vec<&str> = resp.iter().map(|s| s.as_str()).collect();
        self.adversary_unitary.in_layout.without(&resp_refs)
    }

    /// The pre-challenge layout `[private…, M₀ folds…, W₀ folds…]`.
    pub fn initial_layout(&self) -> Result<RegisterLayout> {
        let mut layout = self.private_layout()?;
        for j in 1..=self.k {
            for l in &self.round().message_labels {
                let d = self.round().unitary.in_layout.dim_of(l)?;
                layout = layout.tensor_with_cap(
                    &RegisterLayout::with_cap([(fold_label(l, j), d)], usize::MAX)?,
                    usize::MAX,
                )?;
            }
        }
        for j in 1..=self.k {
            layout = layout.tensor_with_cap(&self.w0_fold(j)?, usize::MAX)?;
        }
        Ok(layout)
    }

    fn w0_fold(&self, j: usize) -> Result<RegisterLayout> {
        relabel_layout(&self.round().workspace_in()?, j)
    }

    /// W₀ register labels of folds `1..=upto`.
    pub fn w0_labels(&self, upto: usize) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for j in 1..=upto {
            out.extend(self.w0_fold(j)?.labels().map(|s| s.to_string()));
        }
        Ok(out)
    }

    /// The advice layout of the k-fold adversary:
    /// `[private…, M₀ folds…]` (pre-challenge, workspaces excluded).
    pub fn advice_layout(&self) -> Result<RegisterLayout> {
        let all = self.initial_layout()?;
        let w: Vec<String> = self.w0_labels(self.k)?;
        let w_refs: Vec<&str> = w.iter().map(|s| s.as_str()).collect();
        all.without(&w_refs)
    }

    fn fold_challenger(&self, j: usize) -> Result<OperatorMatrix> {
        relabel_operator(&self.round().unitary, j)
    }

    fn fold_decision(&self, j: usize) -> Result<OperatorMatrix> {
        relabel_operator(&self.protocol.challenger.decision, j)
    }

    /// Applies `C^{(≤k)}` (all folds' challenger unitaries) to a state.
    pub fn apply_all_challengers(&self, psi: &PureState) -> Result<PureState> {
        let mut state = psi.clone();
        for j in 1..=self.k {
            state = self.fold_challenger(j)?.apply(&state)?;
        }
        Ok(state)
    }

    /// Builds a square operator on `layout` column by column from a state
    /// transformation.
    fn matrix_from_map(
        in_layout: &RegisterLayout,
        out_layout: &RegisterLayout,
        map: impl Fn(PureState) -> Result<PureState>,
    ) -> Result<CMat> {
        let n_in = in_layout.total_dim();
        let n_out = out_layout.total_dim();
        let mut m = CMat::from_element(n_out, n_in, C_ZERO);
        for col in 0..n_in {
            let basis = PureState::basis(in_layout.clone(), col)?;
            let image = map(basis)?.permuted_to(out_layout)?;
            for row in 0..n_out {
                m[(row, col)] = image.amplitudes[row];
            }
        }
        Ok(m)
    }

    /// The game projector
    /// `G_i = (C^{(≤k)})† A† D^{(≤i)} A C^{(≤k)}` on the pre-challenge layout.
    /// `G₀ = id`; for projective decisions `G_i` is a projector.
    pub fn game_projector(&self, i: usize) -> Result<OperatorMatrix> {
        if i > self.k {
            return Err(Error::InvalidParameter(format!(
                "prefix index {i} exceeds fold count {}",
                self.k
            )));
        }
        let layout = self.initial_layout()?;
        let a = self.adversary_unitary;
        let a_dag = a.adjoint();
        let mat = Self::matrix_from_map(&layout, &layout, |mut state| {
            state = self.apply_all_challengers(&state)?;
            state = a.apply(&state)?;
            for j in 1..=i {
                state = self.fold_decision(j)?.apply(&state)?;
            }
            state = a_dag.apply(&state)?;
            for j in 1..=self.k {
                state = self.fold_challenger(j)?.adjoint().apply(&state)?;
            }
            Ok(state)
        })?;
        let kind = if self.protocol.challenger.decision_projective && i > 0 {
            OperatorKind::Projector
        } else if i == 0 {
            OperatorKind::Projector
        } else {
            OperatorKind::PovmElement
        };
        OperatorMatrix::new(layout.clone(), layout, mat, kind)
    }

    /// The rectangular prefix amplitude operator
    /// `T_i = D^{(≤i)} A C^{(≤k)} (id ⊗ |0⟩_{W₀^{(≤i)}})`, from the restricted
    /// pre-challenge space `[private…, M₀^{(≤k)}, W₀^{(>i)}]` to the
    /// post-decision space.
    ///
    /// `‖T_i ψ‖²` is the probability of winning the first `i` folds from the
    /// advice `ψ`, and `‖T_i‖²` the maximum over advice states; the square
    /// compression `G̃_i = T_i† T_i` is the same operator conjugated into the
    /// sandwich form (see [`PrefixGame::prefix_success_operator`]).
    pub fn prefix_amplitude_operator(&self, i: usize) -> Result<OperatorMatrix> {
        if i > self.k {
            return Err(Error::InvalidParameter(format!(
                "prefix index {i} exceeds fold count {}",
                self.k
            )));
        }
        let full = self.initial_layout()?;
        let zeroed: Vec<String> = self.w0_labels(i)?;
        let zero_refs: Vec<&str> = zeroed.iter().map(|s| s.as_str()).collect();
        let in_layout = full.without(&zero_refs)?;
        // Output layout: run the maps once on a probe to learn it.
        let probe = {
            let mut state = PureState::basis(in_layout.clone(), 0)?;
            for l in &zero_refs {
                let d = full.dim_of(l)?;
                state = state.append_register(l, d, 0)?;
            }
            let mut state = self.apply_all_challengers(&state)?;
            state = self.adversary_unitary.apply(&state)?;
            state.layout
        };
        let a = self.adversary_unitary;
        let mat = Self::matrix_from_map(&in_layout, &probe, |mut state| {
            for l in &zero_refs {
                let d = full.dim_of(l)?;
                state = state.append_register(l, d, 0)?;
            }
            state = self.apply_all_challengers(&state)?;
            state = a.apply(&state)?;
            for j in 1..=i {
                state = self.fold_decision(j)?.apply(&state)?;
            }
            Ok(state)
        })?;
        OperatorMatrix::new(in_layout, probe, mat, OperatorKind::General)
    }

    /// The square compression `G̃_i = T_i† T_i` on the restricted
    /// pre-challenge layout. Its eigenvalues are prefix win probabilities.
    pub fn prefix_success_operator(&self, i: usize) -> Result<OperatorMatrix> {
        let t = self.prefix_amplitude_operator(i)?;
        let mat = t.mat.adjoint() * &t.mat;
        OperatorMatrix::new(
            t.in_layout.clone(),
            t.in_layout,
            mat,
            OperatorKind::PovmElement,
        )
    }

    /// The squared operator norms `[‖T_0‖², …, ‖T_k‖²]`: maximum prefix win
    /// probabilities, the inputs to index selection.
    pub fn prefix_success_norms(&self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.k + 1);
        for i in 0..=self.k {
            let t = self.prefix_amplitude_operator(i)?;
            let n = crate::qops::operator_norm(&t.mat);
            out.push((n * n).min(1.0));
        }
        Ok(out)
    }

    /// The square game projector embedded on the full pre-challenge layout
    /// with `W₀^{(≤i)}` compressed onto `|0⟩`:
    /// `(id ⊗ |0⟩⟨0|) G_i (id ⊗ |0⟩⟨0|)` — equivalently `G̃_i` padded back.
    pub fn success_operator_embedded(&self, i: usize) -> Result<OperatorMatrix> {
        let g = self.prefix_success_operator(i)?;
        let full = self.initial_layout()?;
        let zeroed: Vec<String> = self.w0_labels(i)?;
        let zero_refs: Vec<&str> = zeroed.iter().map(|s| s.as_str()).collect();
        let ins = OperatorMatrix::zero_insertion(&full, &zero_refs)?;
        let mat = &ins.mat * &g.mat * ins.mat.adjoint();
        OperatorMatrix::new(full.clone(), full, mat, OperatorKind::PovmElement)
    }
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

/// Register dimensions of a generated 3-message protocol with equal message
/// and response widths.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThreeMessageDims {
    /// Adversary private register (after emitting the first message).
    pub adversary: usize,
    /// Message/response width per direction.
    pub message: usize,
    /// Challenger workspace width.
    pub workspace: usize,
}

impl ThreeMessageDims {
    pub fn qubit() -> Self {
        Self {
            adversary: 2,
            message: 2,
            workspace: 2,
        }
    }
}

/// A Haar-random 3-message instance plus a random adversary: challenger
/// unitary and decision projector of the given rank drawn at random.
pub fn random_three_message(
    dims: ThreeMessageDims,
    decision_rank: usize,
    rng: &mut impl Rng,
) -> Result<(ProtocolInstance, Adversary)> {
    let m = dims.message;
    let w = dims.workspace;
    let a = dims.adversary;
    let c_layout_in = RegisterLayout::new([("M0", m), ("W0", w)])?;
    let c_layout_out = RegisterLayout::new([("R0", m), ("W1", w)])?;
    let c = OperatorMatrix::new(
        c_layout_in,
        c_layout_out,
        haar_unitary(m * w, rng),
        OperatorKind::Unitary,
    )?;
    let d_layout = RegisterLayout::new([("M1", m), ("W1", w)])?;
    let d = OperatorMatrix::on(
        d_layout,
        crate::rng::random_projector(m * w, decision_rank, rng),
        OperatorKind::Projector,
    )?;
    let instance = ProtocolInstance::new(
        Challenger {
            rounds: vec![Round {
                unitary: c,
                message_labels: vec!["M0".into()],
                response_labels: vec!["R0".into()],
            }],
            decision: d,
            decision_projective: true,
            final_message_labels: vec!["M1".into()],
        },
        "random-3msg",
    )?;

    let advice_layout = RegisterLayout::new([("A", a), ("M0", m)])?;
    let advice = crate::rng::random_pure_state(advice_layout.clone(), rng);
    let a0 = OperatorMatrix::new(
        advice_layout.clone(),
        advice_layout,
        CMat::identity(a * m, a * m),
        OperatorKind::Unitary,
    )?;
    let a1 = OperatorMatrix::new(
        RegisterLayout::new([("A", a), ("R0", m)])?,
        RegisterLayout::new([("A", a), ("M1", m)])?,
        haar_unitary(a * m, rng),
        OperatorKind::Unitary,
    )?;
    let adversary = Adversary {
        unitaries: vec![a0, a1],
        advice,
    };
    Ok((instance, adversary))
}

/// The trivial echo game: the challenger returns the message unchanged and
/// accepts on `|0⟩`; workspaces are trivial.
pub fn echo_game(message_dim: usize) -> Result<ProtocolInstance> {
    let c = OperatorMatrix::new(
        RegisterLayout::new([("M0", message_dim)])?,
        RegisterLayout::new([("R0", message_dim)])?,
        CMat::identity(message_dim, message_dim),
        OperatorKind::Unitary,
    )?;
    let mut d_mat = CMat::from_element(message_dim, message_dim, C_ZERO);
    d_mat[(0, 0)] = cr(1.0);
    let d = OperatorMatrix::on(
        RegisterLayout::new([("M1", message_dim)])?,
        d_mat,
        OperatorKind::Projector,
    )?;
    ProtocolInstance::new(
        Challenger {
            rounds: vec![Round {
                unitary: c,
                message_labels: vec!["M0".into()],
                response_labels: vec!["R0".into()],
            }],
            decision: d,
            decision_projective: true,
            final_message_labels: vec!["M1".into()],
        },
        "echo",
    )
}

/// Echo-game adversary sending a fixed first message and forwarding the
/// response.
pub fn echo_adversary(message_dim: usize, advice: PureState) -> Result<Adversary> {
    let a0 = OperatorMatrix::new(
        advice.layout.clone(),
        advice.layout.clone(),
        CMat::identity(advice.dim(), advice.dim()),
        OperatorKind::Unitary,
    )?;
    let forward_in: Vec<(String, usize)> = advice
        .layout
        .registers()
        .iter()
        .map(|(l, d)| (l.replace("M0", "R0"), *d))
        .collect();
    let forward_out: Vec<(String, usize)> = advice
        .layout
        .registers()
        .iter()
        .map(|(l, d)| (l.replace("M0", "M1"), *d))
        .collect();
    let a1 = OperatorMatrix::new(
        RegisterLayout::with_cap(forward_in, usize::MAX)?,
        RegisterLayout::with_cap(forward_out, usize::MAX)?,
        CMat::identity(advice.dim(), advice.dim()),
        OperatorKind::Unitary,
    )?;
    let _ = message_dim;
    Ok(Adversary {
        unitaries: vec![a0, a1],
        advice,
    })
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundSchema {
    pub unitary: OperatorSchema,
    pub message_labels: Vec<String>,
    pub response_labels: Vec<String>,
}

/// Versioned JSON schema of a protocol instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolSchema {
    pub schema_version: u32,
    pub label: String,
    pub rounds: Vec<RoundSchema>,
    pub decision: OperatorSchema,
    pub decision_projective: bool,
    pub final_message_labels: Vec<String>,
}

impl ProtocolSchema {
    pub fn from_instance(p: &ProtocolInstance) -> Self {
        Self {
            schema_version: crate::qops::SCHEMA_VERSION,
            label: p.label.clone(),
            rounds: p
                .challenger
                .rounds
                .iter()
                .map(|r| RoundSchema {
                    unitary: OperatorSchema::from_operator(&r.unitary),
                    message_labels: r.message_labels.clone(),
                    response_labels: r.response_labels.clone(),
                })
                .collect(),
            decision: OperatorSchema::from_operator(&p.challenger.decision),
            decision_projective: p.challenger.decision_projective,
            final_message_labels: p.challenger.final_message_labels.clone(),
        }
    }

    pub fn to_instance(&self) -> Result<ProtocolInstance> {
        let rounds = self
            .rounds
            .iter()
            .map(|r| {
                Ok(Round {
                    unitary: r.unitary.to_operator()?,
                    message_labels: r.message_labels.clone(),
                    response_labels: r.response_labels.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ProtocolInstance::new(
            Challenger {
                rounds,
                decision: self.decision.to_operator()?,
                decision_projective: self.decision_projective,
                final_message_labels: self.final_message_labels.clone(),
            },
            self.label.clone(),
        )
    }
}

/// Versioned JSON schema of an adversary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdversarySchema {
    pub schema_version: u32,
    pub unitaries: Vec<OperatorSchema>,
    pub advice: StateSchema,
}

impl AdversarySchema {
    pub fn from_adversary(a: &Adversary) -> Self {
        Self {
            schema_version: crate::qops::SCHEMA_VERSION,
            unitaries: a.unitaries.iter().map(OperatorSchema::from_operator).collect(),
            advice: StateSchema::from_state(&a.advice),
        }
    }

    pub fn to_adversary(&self) -> Result<Adversary> {
        Ok(Adversary {
            unitaries: self
                .unitaries
                .iter()
                .map(|u| u.to_operator())
                .collect::<Result<Vec<_>>>()?,
            advice: self.advice.to_state()?,
        })
    }
}
