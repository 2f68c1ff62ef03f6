//! Non-uniform extraction: turn a k-fold cheating strategy with good advice
//! into a single-fold strategy via coherent post-selection (singular-value
//! amplification on the simulated folds).
//!
//! Run: `cargo run --release --example extract_nonuniform`

use qparrep::protocol::PrefixGame;
use qparrep::reduction::{amp_nonuniform, planted_instance, AmpParams, PlantedDims};
use qparrep::rng::trial_rng;
use qparrep::svt::AmplifierMode;

fn main() -> qparrep::Result<()> {
    let delta = 0.8;
    let mu = 0.05;
    let k = 2;
    let mut rng = trial_rng(7, 0);
    let planted = planted_instance(PlantedDims::qubit(), &[delta], &mut rng)?;
    let adversary = planted.k_fold_adversary(&vec![0; k])?;
    let game = PrefixGame::new(&planted.protocol, &adversary.unitaries[1], k)?;

    // The prefix win-probability ladder driving index selection.
    let norms = game.prefix_success_norms()?;
    println!("prefix norms ||T_i||^2: {norms:?}");
    let index = qparrep::reduction::select_index(&norms, delta, k)?;
    println!("selected index by the discrete IVT: {index}");

    for i in 1..=k {
        let (extracted, report) = amp_nonuniform(
            &game,
            &adversary.advice,
            i,
            AmpParams {
                mu,
                delta,
                tau: 1.0,
                mode: AmplifierMode::ExactOracle,
            },
        )?;
        let via_game = extracted.conservative_success(&planted.protocol)?;
        println!(
            "i = {i}: success {:.6} (replayed through the protocol: {via_game:.6}), \
             guarantee (1-2mu)^2*tau*delta = {:.6}, abort {:.3e}, amplifier degree {}",
            report.success_probability,
            report.guarantee,
            report.abort_probability,
            report.amplifier_degree
        );
    }
    Ok(())
}
