//! The uniform extraction pipeline: reconstruct a good advice state from
//! fresh copies by measuring the k-fold prefix value, walk the prefix index
//! down with the state-transformation loop, then run the non-uniform
//! extraction.
//!
//! Run: `cargo run --release --example extract_uniform`

use qparrep::protocol::PrefixGame;
use qparrep::reduction::{amp_uniform, planted_instance, PlantedDims, ReductionParams};
use qparrep::rng::trial_rng;

fn main() -> qparrep::Result<()> {
    let delta = 0.9;
    let epsilon = 0.2;
    let k = 2;
    let params = ReductionParams::derive(k, delta, epsilon)?;
    println!(
        "schedule: eps0 = {:.3e}, tau_hat = {:.3e}, delta_hat = {:.3e}, eps_hat = {:.3e}",
        params.eps0, params.tau_hat, params.delta_hat, params.eps_hat
    );
    println!(
        "          K = {}, T = {}, copy budget t = {}",
        params.big_k, params.big_t, params.copies
    );

    let mut aborted = 0;
    let mut worst: f64 = 1.0;
    let seeds = 20;
    for s in 0..seeds {
        let mut rng = trial_rng(11, s);
        let planted = planted_instance(PlantedDims::qubit(), &[delta], &mut rng)?;
        let adversary = planted.k_fold_adversary(&vec![0; k])?;
        let game = PrefixGame::new(&planted.protocol, &adversary.unitaries[1], k)?;
        let report = amp_uniform(&game, &adversary.advice, &params, &mut rng)?;
        match report.aborted {
            Some(stage) => {
                aborted += 1;
                println!("seed {s}: aborted at {stage:?}");
            }
            None => {
                worst = worst.min(report.success_probability);
                println!(
                    "seed {s}: i* = {}, copies used {}, extracted success {:.6}",
                    report.i_star, report.copies_used, report.success_probability
                );
            }
        }
    }
    println!(
        "\n{aborted}/{seeds} aborts; worst non-aborting success {worst:.6} \
         vs target delta - epsilon = {:.6}",
        delta - epsilon
    );
    Ok(())
}
