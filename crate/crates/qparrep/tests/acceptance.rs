//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Every tolerance is pinned in code; statistical checks allow the stated
//! bound plus three binomial standard deviations of the trial count.

use qparrep::altmeas::{
    exact_alternating_distribution, mwdist_mixture_distribution,
    AlternatingFrame, Axis, EffJorMeasurement,
};
use qparrep::applications as apps;
use qparrep::compression;
use qparrep::jordan::{jordan_decompose, pseudoinverse_state};
use qparrep::protocol::{self, PrefixGame};
use qparrep::qops::{
    cr, distances, fidelity, CMat, CVec, DensityOperator, OperatorKind, OperatorMatrix,
    PureState, RegisterLayout, C_ZERO,
};
use qparrep::reduction::{
    self, amp_nonuniform, amp_uniform, state_trans, AmpParams, JordanHandle, PlantedDims,
    ReductionParams, StateTransFlag, StateTransParams,
};
use qparrep::rng::{random_projector, random_pure_state, trial_rng};
use qparrep::svt::AmplifierMode;

fn report(criterion: &str, pass: bool, detail: String) {
    println!(
        "[{}] {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

fn proj(l: &RegisterLayout, m: CMat) -> OperatorMatrix {
    OperatorMatrix::on(l.clone(), m, OperatorKind::Projector).unwrap()
}

/// Criterion 1: product-strategy factorization at per-fold dimension up to
/// 16 and k up to 4, within 1e-10.
#[test]
fn criterion_01_product_factorization() {
    let mut worst: f64 = 0.0;
    for (trial, dims) in [
        protocol::ThreeMessageDims {
            adversary: 2,
            message: 2,
            workspace: 2,
        },
        protocol::ThreeMessageDims {
            adversary: 2,
            message: 2,
            workspace: 4,
        },
        protocol::ThreeMessageDims {
            adversary: 4,
            message: 2,
            workspace: 2,
        },
    ]
    .into_iter()
    .enumerate()
    {
        for inner in 0..3u64 {
            let mut rng = trial_rng(1001, trial as u64 * 10 + inner);
            let (p, a) = protocol::random_three_message(dims, 2, &mut rng).unwrap();
            let single = protocol::execute(&p, &a).unwrap().accept_probability;
            for k in 1..=4usize {
                let pk = protocol::parallel_repeat_with_cap(&p, k, 1 << 18).unwrap();
                let ak = protocol::product_adversary_with_cap(&a, k, 1 << 18).unwrap();
                let measured = protocol::execute(&pk, &ak).unwrap().accept_probability;
                worst = worst.max((measured - single.powi(k as i32)).abs());
            }
        }
    }
    report(
        "criterion 1 (product factorization)",
        worst <= 1e-10,
        format!("max |p_k - p^k| = {worst:.3e} <= 1e-10"),
    );
}

/// Criterion 2: non-uniform extraction bound over 50 planted instances,
/// k in {2,3}, delta in {0.7, 0.8, 0.9}, mu = 0.05, tau = 1.
#[test]
fn criterion_02_nonuniform_extraction() {
    let mu = 0.05;
    let deltas = [0.7, 0.8, 0.9];
    let mut count = 0;
    let mut worst_margin = f64::INFINITY;
    let mut seed = 0u64;
    'outer: loop {
        for &delta in &deltas {
            for k in 2..=3usize {
                for i in 1..=k {
                    if count >= 50 {
                        break 'outer;
                    }
                    seed += 1;
                    let mut rng = trial_rng(1002, seed);
                    let planted =
                        reduction::planted_instance(PlantedDims::qubit(), &[delta], &mut rng)
                            .unwrap();
                    let adv = planted.k_fold_adversary(&vec![0; k]).unwrap();
                    let game = PrefixGame::new(&planted.protocol, &adv.unitaries[1], k).unwrap();
                    let (_, rep) = amp_nonuniform(
                        &game,
                        &adv.advice,
                        i,
                        AmpParams {
                            mu,
                            delta,
                            tau: 1.0,
                            mode: AmplifierMode::ExactOracle,
                        },
                    )
                    .unwrap();
                    let bound = (1.0 - 2.0 * mu).powi(2) * delta;
                    worst_margin = worst_margin.min(rep.success_probability - bound);
                    count += 1;
                }
            }
        }
    }
    report(
        "criterion 2 (non-uniform extraction bound)",
        worst_margin >= -1e-9,
        format!("50 instances, min margin over (1-2mu)^2*delta = {worst_margin:.3e}"),
    );
}

/// Criterion 3: alternating-measurement law — exact enumeration matches the
/// MWDist mixture (TV <= 1e-9) and Monte-Carlo at T = 50 matches within 3
/// standard errors.
#[test]
fn criterion_03_alternating_measurement_law() {
    // Exact enumeration, T <= 6, dim <= 16.
    let mut worst_tv: f64 = 0.0;
    for (dim, rank_a, rank_b, t) in [(8, 3, 4, 5), (16, 6, 7, 6), (16, 5, 9, 4)] {
        let mut rng = trial_rng(1003, dim as u64 + t as u64);
        let l = RegisterLayout::single("x", dim).unwrap();
        let pa = proj(&l, random_projector(dim, rank_a, &mut rng));
        let pb = proj(&l, random_projector(dim, rank_b, &mut rng));
        let d = jordan_decompose(&pa, &pb).unwrap();
        let mut v = CVec::from_element(dim, C_ZERO);
        for b in &d.blocks {
            if b.w1.norm() > 0.5 {
                v += &b.w1 * qparrep::rng::gaussian_c64(&mut rng);
            }
        }
        let psi = PureState::new(l, v).unwrap().normalized().unwrap();
        let exact = exact_alternating_distribution(&d, &psi, t).unwrap();
        let mixture = mwdist_mixture_distribution(&d, &psi, t).unwrap();
        let tv: f64 = exact
            .iter()
            .zip(&mixture)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        worst_tv = worst_tv.max(tv);
    }

    // Monte-Carlo at T = 50 with 1e5 samples (per-block frame sampling is
    // distribution-exact; cross-checked against the dense step simulator in
    // the unit suite).
    let dim = 8;
    let t_mc: u64 = 50;
    let samples = 100_000u64;
    let mut rng = trial_rng(1003, 99);
    let l = RegisterLayout::single("x", dim).unwrap();
    let pa = proj(&l, random_projector(dim, 3, &mut rng));
    let pb = proj(&l, random_projector(dim, 4, &mut rng));
    let d = jordan_decompose(&pa, &pb).unwrap();
    let mut v = CVec::from_element(dim, C_ZERO);
    for b in &d.blocks {
        if b.w1.norm() > 0.5 {
            v += &b.w1 * qparrep::rng::gaussian_c64(&mut rng);
        }
    }
    let psi = PureState::new(l, v).unwrap().normalized().unwrap();
    // Expected mean of NumReps(1, b_1..b_T) under the mixture: sum w_j p_j.
    let mut expected = 0.0;
    let mut weights = Vec::new();
    let mut values = Vec::new();
    for b in &d.blocks {
        if b.w1.norm() > 0.5 {
            let w = b.w1.dotc(&psi.amplitudes).norm_sqr();
            expected += w * b.value;
            weights.push(b.w1.dotc(&psi.amplitudes));
            values.push(b.value);
        }
    }
    let mut acc = 0.0;
    let mut acc2 = 0.0;
    for s in 0..samples {
        let mut srng = trial_rng(10_030, s);
        let mut frame =
            AlternatingFrame::from_amplitudes(values.clone(), weights.clone(), Axis::B1);
        let reps = frame.fast_forward(t_mc, &mut srng);
        let x = reps as f64 / t_mc as f64;
        acc += x;
        acc2 += x * x;
    }
    let mean = acc / samples as f64;
    let var = (acc2 / samples as f64 - mean * mean).max(0.0);
    let sigma = (var / samples as f64).sqrt();
    let dev = (mean - expected).abs();
    let pass = worst_tv <= 1e-9 && dev <= 3.0 * sigma + 1e-6;
    report(
        "criterion 3 (alternating-measurement law)",
        pass,
        format!(
            "max TV = {worst_tv:.3e} <= 1e-9; MC mean dev = {dev:.3e} <= 3 sigma = {:.3e}",
            3.0 * sigma
        ),
    );
}

/// Criterion 4: EffJor almost-projectivity at (0.1, 0.05) and (0.05, 0.01)
/// over 1e4 sequential double-applications.
#[test]
fn criterion_04_effjor_almost_projectivity() {
    let mut detail = String::new();
    let mut pass = true;
    for (eps, delta) in [(0.1, 0.05), (0.05, 0.01)] {
        let trials = 10_000u64;
        let mut failures = 0u64;
        let mut pairs = 0u64;
        // a few random instances at dim <= 8
        let instances: Vec<EffJorMeasurement> = (0..5)
            .map(|i| {
                let mut rng = trial_rng(1004, i);
                let l = RegisterLayout::single("x", 8).unwrap();
                let pa = proj(&l, random_projector(8, 4, &mut rng));
                let pb = proj(&l, random_projector(8, 4, &mut rng));
                EffJorMeasurement::new(&pa, &pb, eps, delta).unwrap()
            })
            .collect();
        for t in 0..trials {
            let m = &instances[(t % 5) as usize];
            let mut rng = trial_rng(10_040 + (eps * 1000.0) as u64, t);
            let psi = random_pure_state(m.decomposition.layout.clone(), &mut rng);
            let first = m.apply(&psi, &mut rng).unwrap();
            let p1 = match first.value {
                Some(v) if !first.aborted => v,
                _ => continue,
            };
            let second = m.apply(&first.post_state, &mut rng).unwrap();
            let p2 = match second.value {
                Some(v) => v,
                None => continue,
            };
            pairs += 1;
            if (p1 - p2).abs() > eps {
                failures += 1;
            }
        }
        let freq = failures as f64 / pairs as f64;
        let sigma = (delta * (1.0 - delta) / pairs as f64).sqrt();
        let ok = freq <= delta + 3.0 * sigma;
        pass &= ok;
        detail.push_str(&format!(
            "(eps={eps}, delta={delta}): freq {freq:.4} <= {:.4} over {pairs} pairs; ",
            delta + 3.0 * sigma
        ));
    }
    report("criterion 4 (EffJor almost-projectivity)", pass, detail);
}

/// Criterion 5: the four state-transformation bounds on commuting and random
/// instances, 1e3 trials per configuration.
#[test]
fn criterion_05_state_trans_bounds() {
    let eps = 1e-4;
    let delta = 1e-6;
    let tau = 0.3;
    let trials = 1000u64;
    let mut detail = String::new();
    let mut pass = true;

    for config in 0..2 {
        let dim = 16;
        let l = RegisterLayout::single("x", dim).unwrap();
        let mut rng = trial_rng(1005, config);
        let (pa0, pb0, pa1, pb1) = if config == 0 {
            // commuting: all diagonal
            let diag = |bits: u32| -> CMat {
                CMat::from_diagonal(&CVec::from_iterator(
                    dim,
                    (0..dim).map(|i| cr(((bits >> i) & 1) as f64)),
                ))
            };
            (
                diag(0b1111_1111_0000_1111),
                diag(0b0000_1111_1111_0011),
                diag(0b1111_0000_1111_1100),
                diag(0b0011_1100_0011_1111),
            )
        } else {
            (
                random_projector(dim, 8, &mut rng),
                random_projector(dim, 9, &mut rng),
                random_projector(dim, 8, &mut rng),
                random_projector(dim, 7, &mut rng),
            )
        };
        let m0 = JordanHandle::new(&proj(&l, pa0.clone()), &proj(&l, pb0), eps, delta).unwrap();
        let m1 = JordanHandle::new(&proj(&l, pa1), &proj(&l, pb1), eps, delta).unwrap();
        let big_k = ((2.0 / tau) * (1.0f64 / delta).ln()).ceil();
        let beta = 0.5;

        let mut p_abort = 0.0;
        let mut p_zero_bad = 0.0;
        let mut p_one_bad_m0 = 0.0;
        let mut p_one_bad_m1 = 0.0;
        let mut gamma_acc = 0.0;
        for t in 0..trials {
            let mut rng = trial_rng(10_050 + config, t);
            // state supported inside Π_A of m0
            let raw = random_pure_state(l.clone(), &mut rng);
            let v = &pa0 * &raw.amplitudes;
            if v.norm() < 1e-6 {
                continue;
            }
            let psi = PureState::new(l.clone(), v.clone() / cr(v.norm())).unwrap();
            // alpha: median of the M0 outcome distribution; gamma exact
            let (dist, abort_mass) = m0.outcome_distribution(&psi).unwrap();
            let mut below = 0.0;
            let alpha = dist
                .iter()
                .map(|(v, _)| *v)
                .fold(f64::INFINITY, f64::min)
                .max(0.0);
            for (v, w) in &dist {
                if *v < alpha {
                    below += w;
                }
            }
            below += abort_mass;
            gamma_acc += below;
            let out = state_trans(
                &m0,
                &m1,
                &psi,
                StateTransParams {
                    eps,
                    delta,
                    tau,
                    beta,
                },
                &mut rng,
            )
            .unwrap();
            match out.flag {
                StateTransFlag::Abort => p_abort += 1.0,
                StateTransFlag::Zero => {
                    // exact probability M1 reads < beta - eps
                    p_zero_bad += m1.prob_outcome_lt(&out.state, beta - eps).unwrap();
                }
                StateTransFlag::One => {
                    let alpha_last = *out.alpha_trace.last().unwrap();
                    let q0_bad = 1.0
                        - m0.prob_outcome_geq(&out.state, alpha_last - 2.0 * big_k * eps)
                            .unwrap();
                    let q1_bad = 1.0 - m1.prob_outcome_lt(&out.state, beta + 1e-12).unwrap();
                    p_one_bad_m0 += q0_bad;
                    p_one_bad_m1 += q1_bad;
                }
            }
        }
        let n = trials as f64;
        let gamma = gamma_acc / n;
        let checks = [
            (
                "Pr[abort]",
                p_abort / n,
                4.0 * big_k * delta.sqrt(),
            ),
            ("Pr[0 & M1<beta-eps]", p_zero_bad / n, delta),
            (
                "Pr[1 & M0<alpha-2Keps]",
                p_one_bad_m0 / n,
                gamma + (tau + eps + delta).sqrt(),
            ),
            ("Pr[1 & M1>beta]", p_one_bad_m1 / n, tau + eps + delta),
        ];
        for (name, freq, bound) in checks {
            let sigma = (bound.min(1.0) * (1.0 - bound.min(1.0)).max(0.0) / n)
                .sqrt()
                .max(1e-6);
            let ok = freq <= bound + 3.0 * sigma;
            pass &= ok;
            if !ok {
                detail.push_str(&format!(
                    "config {config} {name}: {freq:.4} > {:.4}; ",
                    bound + 3.0 * sigma
                ));
            }
        }
        detail.push_str(&format!(
            "config {config}: abort {:.4} / bound {:.4}; ",
            p_abort / n,
            4.0 * big_k * delta.sqrt()
        ));
    }
    report("criterion 5 (state transformation bounds)", pass, detail);
}

/// Criterion 6: the uniform pipeline on planted product adversaries (k = 2,
/// delta = 0.9, epsilon = 0.2): non-aborting success at least delta - epsilon
/// and abort frequency within the eps0 budget.
#[test]
fn criterion_06_uniform_pipeline() {
    let delta = 0.9f64;
    let epsilon = 0.2;
    let k = 2;
    let params = ReductionParams::derive(k, delta, epsilon).unwrap();
    let seeds = 100u64;
    let mut aborts = 0u64;
    let mut worst_success = f64::INFINITY;
    for s in 0..seeds {
        let mut rng = trial_rng(1006, s);
        let planted =
            reduction::planted_instance(PlantedDims::qubit(), &[delta], &mut rng).unwrap();
        let adv = planted.k_fold_adversary(&vec![0; k]).unwrap();
        let game = PrefixGame::new(&planted.protocol, &adv.unitaries[1], k).unwrap();
        let rep = amp_uniform(&game, &adv.advice, &params, &mut rng).unwrap();
        if rep.aborted.is_some() {
            aborts += 1;
        } else {
            worst_success = worst_success.min(rep.success_probability);
        }
    }
    let abort_freq = aborts as f64 / seeds as f64;
    let budget = params.eps0 / 5.0;
    let sigma = (budget * (1.0 - budget) / seeds as f64).sqrt().max(1e-4);
    let pass = worst_success >= delta - epsilon - 1e-9 && abort_freq <= budget + 3.0 * sigma;
    report(
        "criterion 6 (uniform pipeline)",
        pass,
        format!(
            "min non-aborting success {worst_success:.4} >= {:.4}; abort freq {abort_freq:.3} <= {:.3}",
            delta - epsilon,
            budget + 3.0 * sigma
        ),
    );
}

/// Criterion 7: compression completeness formulas, exact at 1e-10.
#[test]
fn criterion_07_compression_completeness() {
    let mut pass = true;
    let mut detail = String::new();
    for (t, eps) in [(0u64, 0.0f64), (1, 0.2), (2, 0.4)] {
        let mut rng = trial_rng(1007, t);
        let (p, honest) =
            compression::random_multiround_instance(2, 2, 2, 2, 1.0 - eps, &mut rng).unwrap();
        let halved = compression::halve(&p).unwrap();
        let hc = compression::compress_honest(&p, &honest).unwrap();
        let measured = protocol::execute(&halved.instance, &hc)
            .unwrap()
            .accept_probability;
        let err = (measured - (1.0 - eps / 2.0)).abs();
        pass &= err <= 1e-10;
        // compress_to_three bound for m = 5
        let c3 = compression::compress_to_three(&p).unwrap();
        pass &= c3.instance.message_count() == 3;
        let bound = 1.0 - 2.0 * eps / 4.0;
        pass &= measured >= bound - 1e-10;
        detail.push_str(&format!("eps={eps}: halve err {err:.2e}; "));
    }
    // public-coin completeness 1 - (1-c)/2 exactly
    for (t, c_target) in [(10u64, 1.0f64), (11, 0.8)] {
        let mut rng = trial_rng(1007, t);
        let (p, honest) =
            compression::random_multiround_instance(1, 2, 2, 2, c_target, &mut rng).unwrap();
        let compiled = compression::to_public_coin(&p).unwrap();
        let hc = compression::public_coin_honest(&p, &honest).unwrap();
        let measured = protocol::execute(&compiled.instance, &hc)
            .unwrap()
            .accept_probability;
        let err = (measured - (1.0 - (1.0 - c_target) / 2.0)).abs();
        pass &= err <= 1e-10;
        detail.push_str(&format!("pc c={c_target}: err {err:.2e}; "));
    }
    report("criterion 7 (compression completeness)", pass, detail);
}

/// Criterion 8: the soundness-lift chain on 50 planted compressed
/// adversaries with measured epsilon at most 0.05.
#[test]
fn criterion_08_compression_soundness_lift() {
    let mut count = 0;
    let mut pass = true;
    let mut worst_slack = f64::INFINITY;
    let mut seed = 0u64;
    while count < 50 {
        seed += 1;
        let mut rng = trial_rng(1008, seed);
        let (p, honest) =
            compression::random_multiround_instance(2, 2, 2, 2, 1.0, &mut rng).unwrap();
        let halved = compression::halve(&p).unwrap();
        let mut hc = compression::compress_honest(&p, &honest).unwrap();
        // Small advice rotation for a measured epsilon <= 0.05.
        let noise = random_pure_state(hc.advice.layout.clone(), &mut rng);
        let overlap = hc.advice.amplitudes.dotc(&noise.amplitudes);
        let orth = &noise.amplitudes - &hc.advice.amplitudes * overlap;
        let n = orth.norm();
        if n < 1e-9 {
            continue;
        }
        let angle = 0.05 + 0.1 * (seed as f64 % 7.0) / 7.0;
        let v = hc.advice.amplitudes.clone() * cr(angle.cos()) + orth * cr(angle.sin() / n);
        let norm = v.norm();
        hc.advice = PureState::new(hc.advice.layout.clone(), v / cr(norm)).unwrap();
        let rep = compression::lift_adversary(&p, &halved, &hc).unwrap();
        let eps = 1.0 - rep.compressed_acceptance;
        if eps > 0.05 {
            continue;
        }
        count += 1;
        let ok = rep.heads_probability >= 1.0 - 2.0 * eps - 1e-9
            && rep.tails_probability >= 1.0 - 2.0 * eps - 1e-9
            && rep.bures_heads_to_aux <= 3.0 * eps + 1e-9
            && rep.bures_tails_to_aux <= 3.0 * eps + 1e-9
            && rep.bures_heads_to_tails <= 12.0 * eps + 1e-9
            && rep.fidelity_heads_tails >= 1.0 - 12.0 * eps - 1e-9
            && rep.lifted_unconditional >= 1.0 - 16.0 * eps - 1e-9;
        pass &= ok;
        worst_slack = worst_slack.min(rep.lifted_unconditional - (1.0 - 16.0 * eps));
    }
    report(
        "criterion 8 (compression soundness lift)",
        pass,
        format!("50 planted lifts; min slack over 1-16eps = {worst_slack:.3e}"),
    );
}

/// Criterion 9: the forwarding counterexample wins with probability exactly
/// 1/2 for k = 2..6.
#[test]
fn criterion_09_forwarding_counterexample() {
    let mut pass = true;
    for k in 2..=6 {
        let out = apps::forwarding_counterexample(k).unwrap();
        pass &= out.win_probability == 0.5;
    }
    report(
        "criterion 9 (forwarding counterexample)",
        pass,
        "win probability exactly 1/2 for k = 2..6 by enumeration".into(),
    );
}

/// Criterion 10: the applications suite — XOR normalization and closed form,
/// flavor-switch hiding bound on 200 commitments, predicate invariants up to
/// k = 4, binding game equals the Uhlmann fidelity on 100 commitments.
#[test]
fn criterion_10_applications_suite() {
    let mut pass = true;
    let mut detail = String::new();

    // XOR normalization + k = 2 closed form.
    {
        let mut rng = trial_rng(1010, 0);
        let layout = RegisterLayout::new([("C", 2), ("R", 2)]).unwrap();
        let cc = apps::CanonicalCommitment::new(
            random_pure_state(layout.clone(), &mut rng),
            random_pure_state(layout, &mut rng),
            vec!["C".into()],
        )
        .unwrap();
        for k in 1..=3 {
            let xk = apps::xor_repeat(&cc, k).unwrap();
            pass &= (xk.psi[0].norm() - 1.0).abs() < 1e-9;
            pass &= (xk.psi[1].norm() - 1.0).abs() < 1e-9;
        }
        let x2 = apps::xor_repeat(&cc, 2).unwrap();
        let c00 = x2.psi[0]
            .slice_register("xbit1", 0)
            .unwrap()
            .slice_register("xbit2", 0)
            .unwrap();
        let c11 = x2.psi[0]
            .slice_register("xbit1", 1)
            .unwrap()
            .slice_register("xbit2", 1)
            .unwrap();
        let c01 = x2.psi[0]
            .slice_register("xbit1", 0)
            .unwrap()
            .slice_register("xbit2", 1)
            .unwrap();
        pass &= (c00.norm_squared() - 0.5).abs() < 1e-10
            && (c11.norm_squared() - 0.5).abs() < 1e-10
            && c01.norm_squared() < 1e-12;
        detail.push_str("xor closed form ok; ");
    }

    // Flavor-switch hiding bound on 200 random commitments.
    {
        let mut worst: f64 = f64::NEG_INFINITY;
        for t in 0..200u64 {
            let mut rng = trial_rng(1010, 100 + t);
            let layout = RegisterLayout::new([("C", 2), ("R", 2)]).unwrap();
            let cc = apps::CanonicalCommitment::new(
                random_pure_state(layout.clone(), &mut rng),
                random_pure_state(layout, &mut rng),
                vec!["C".into()],
            )
            .unwrap();
            let rep = apps::flavor_switch(&cc).unwrap();
            let bound = rep.base_binding.sqrt();
            worst = worst
                .max(rep.hiding_switched - bound)
                .max(rep.hiding_flagged_commit - bound);
        }
        pass &= worst <= 1e-8;
        detail.push_str(&format!("switch bound slack {worst:.2e}; "));
    }

    // Predicate invariants under xor_power, k <= 4.
    {
        let mut rng = trial_rng(1010, 500);
        let layout = RegisterLayout::single("x", 2).unwrap();
        let r0 = qparrep::rng::random_density(2, &mut rng);
        let r1 = qparrep::rng::random_density(2, &mut rng);
        let base = apps::QuantumPredicate::new(layout, &r0.matrix - &r1.matrix).unwrap();
        for k in 1..=4 {
            let pk = base.xor_power(k).unwrap();
            pass &= pk.rho.trace().norm() < 1e-9;
            pass &= (&pk.rho_plus * &pk.rho_minus).norm() < 1e-8;
            let norm1: f64 = pk.rho_plus.trace().re + pk.rho_minus.trace().re;
            pass &= norm1 <= 2.0 + 1e-8;
        }
        detail.push_str("predicate invariants ok; ");
    }

    // Binding game value equals the Uhlmann fidelity on 100 commitments.
    {
        let mut worst: f64 = 0.0;
        for t in 0..100u64 {
            let mut rng = trial_rng(1010, 1000 + t);
            let layout = RegisterLayout::new([("C", 2), ("R", 2)]).unwrap();
            let cc = apps::CanonicalCommitment::new(
                random_pure_state(layout.clone(), &mut rng),
                random_pure_state(layout, &mut rng),
                vec!["C".into()],
            )
            .unwrap();
            let (f_u, _) = apps::binding_value(&cc).unwrap();
            let m0 = cc.commit_marginal(0).unwrap();
            let m1 = cc.commit_marginal(1).unwrap();
            let f_m = fidelity(&m0, &m1).unwrap();
            worst = worst.max((f_u - f_m).abs());
        }
        pass &= worst <= 1e-8;
        detail.push_str(&format!("binding vs uhlmann dev {worst:.2e}"));
    }

    report("criterion 10 (applications suite)", pass, detail);
}

/// Criterion 11: the foundation suite over at least 1000 random trials each.
#[test]
fn criterion_11_foundation_suite() {
    let mut pass = true;
    let mut detail = String::new();

    // Fuchs–van de Graaf, both sides, 1000 random density pairs (dim <= 8).
    {
        let mut worst: f64 = 0.0;
        for t in 0..1000u64 {
            let mut rng = trial_rng(1011, t);
            let dim = 2 + (t % 4) as usize * 2;
            let rho = qparrep::rng::random_density(dim.min(8), &mut rng);
            let sigma = qparrep::rng::random_density(dim.min(8), &mut rng);
            let d = distances(&rho, &sigma).unwrap();
            worst = worst
                .max((1.0 - d.fidelity.sqrt()) - d.trace_distance)
                .max(d.trace_distance - (1.0 - d.fidelity).sqrt());
        }
        pass &= worst <= 1e-8;
        detail.push_str(&format!("fvdg violation {worst:.2e}; "));
    }

    // Weak Bures triangle with factor 2, 1000 random triples.
    {
        let mut worst: f64 = 0.0;
        for t in 0..1000u64 {
            let mut rng = trial_rng(1011, 2000 + t);
            let r1 = qparrep::rng::random_density(4, &mut rng);
            let r2 = qparrep::rng::random_density(4, &mut rng);
            let r3 = qparrep::rng::random_density(4, &mut rng);
            let d13 = distances(&r1, &r3).unwrap().bures_sq;
            let d12 = distances(&r1, &r2).unwrap().bures_sq;
            let d23 = distances(&r2, &r3).unwrap().bures_sq;
            worst = worst.max(d13 - 2.0 * (d12 + d23));
        }
        pass &= worst <= 1e-8;
        detail.push_str(&format!("bures triangle violation {worst:.2e}; "));
    }

    // Gentle measurement equality on 1000 random pure states.
    {
        let mut worst: f64 = 0.0;
        for t in 0..1000u64 {
            let mut rng = trial_rng(1011, 4000 + t);
            let layout = RegisterLayout::single("x", 4).unwrap();
            let psi = random_pure_state(layout.clone(), &mut rng);
            let p = proj(&layout, random_projector(4, 2, &mut rng));
            let weight = p.expectation(&psi).unwrap().re;
            if weight < 1e-6 {
                continue;
            }
            let post = p.apply(&psi).unwrap().normalized().unwrap();
            let f = fidelity(
                &DensityOperator::from_pure(&post).unwrap(),
                &DensityOperator::from_pure(&psi).unwrap(),
            )
            .unwrap();
            worst = worst.max((f - weight).abs());
        }
        pass &= worst <= 1e-9;
        detail.push_str(&format!("gentle equality dev {worst:.2e}; "));
    }

    // Jordan reconstruction residuals < 1e-9 on 1000 random pairs (dim 8).
    {
        let mut worst: f64 = 0.0;
        for t in 0..1000u64 {
            let mut rng = trial_rng(1011, 6000 + t);
            let l = RegisterLayout::single("x", 8).unwrap();
            let pa = proj(&l, random_projector(8, 3, &mut rng));
            let pb = proj(&l, random_projector(8, 3, &mut rng));
            let d = jordan_decompose(&pa, &pb).unwrap();
            let mut sum = CMat::from_element(8, 8, C_ZERO);
            let mut a = CMat::from_element(8, 8, C_ZERO);
            let mut b = CMat::from_element(8, 8, C_ZERO);
            for blk in &d.blocks {
                sum += blk.projector();
                if blk.v1.norm() > 0.5 {
                    a += &blk.v1 * blk.v1.adjoint();
                }
                if blk.w1.norm() > 0.5 {
                    b += &blk.w1 * blk.w1.adjoint();
                }
            }
            worst = worst
                .max((sum - CMat::identity(8, 8)).norm())
                .max((a - &pa.mat).norm())
                .max((b - &pb.mat).norm());
        }
        pass &= worst <= 1e-9;
        detail.push_str(&format!("jordan residual {worst:.2e}; "));
    }

    // Pseudoinverse lemma identities on 1000 commuting states inside Π_A.
    {
        let mut worst: f64 = 0.0;
        let mut tested = 0;
        for t in 0..1400u64 {
            if tested >= 1000 {
                break;
            }
            let mut rng = trial_rng(1011, 8000 + t);
            let l = RegisterLayout::single("x", 8).unwrap();
            let pa_m = random_projector(8, 4, &mut rng);
            let pb_m = random_projector(8, 4, &mut rng);
            let d = jordan_decompose(&proj(&l, pa_m.clone()), &proj(&l, pb_m)).unwrap();
            let raw = random_pure_state(l.clone(), &mut rng);
            let v = &pa_m * &raw.amplitudes;
            if v.norm() < 1e-3 {
                continue;
            }
            let psi = PureState::new(l.clone(), v.clone() / cr(v.norm())).unwrap();
            let rho = DensityOperator::from_pure(&psi).unwrap();
            let (sigma, diag) = match pseudoinverse_state(&d, &rho) {
                Ok(x) => x,
                Err(_) => continue,
            };
            tested += 1;
            // 1. Tr(Π_B σ) = 1
            let tb = (&d.pi_b * &sigma.matrix).trace().re;
            // 2. Tr(Π_A σ) = (1 − Tr(Π₀ρ)) / Tr(Eρ)
            let ta = (&d.pi_a * &sigma.matrix).trace().re;
            let zero_w = (d.zero_value_projector() * &rho.matrix).trace().re;
            let expect_ta = (1.0 - zero_w) / diag.e_trace;
            // 3. per-block weights for p_j > 0
            let mut block_dev: f64 = 0.0;
            for blk in &d.blocks {
                if blk.value > 1e-9 {
                    let q = blk.projector();
                    let ws = (&q * &sigma.matrix).trace().re;
                    let wr = (&q * &rho.matrix).trace().re;
                    block_dev = block_dev.max((ws - wr / (blk.value * diag.e_trace)).abs());
                }
            }
            // 4. Tr(Π₀ σ) = 0
            let t0 = (d.zero_value_projector() * &sigma.matrix).trace().re;
            worst = worst
                .max((tb - 1.0).abs())
                .max((ta - expect_ta).abs())
                .max(block_dev)
                .max(t0.abs());
        }
        pass &= worst <= 1e-8 && tested >= 1000;
        detail.push_str(&format!(
            "pseudoinverse identities dev {worst:.2e} over {tested} trials"
        ));
    }

    report("criterion 11 (foundation suite)", pass, detail);
}
