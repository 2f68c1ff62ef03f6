//! Round halving for interactive arguments: the verifier receives the
//! midpoint state and plays the original protocol forward or backward on a
//! coin flip. Honest completeness maps 1−ε to exactly 1−ε/2; a compressed
//! adversary with acceptance 1−ε lifts back to the original protocol with
//! acceptance at least 1−16ε.
//!
//! Run: `cargo run --release --example round_compression`

use qparrep::compression::{
    compress_honest, compress_to_three, halve, lift_adversary, random_multiround_instance,
};
use qparrep::protocol::execute;
use qparrep::qops::{cr, PureState};
use qparrep::rng::{random_pure_state, trial_rng};

fn main() -> qparrep::Result<()> {
    let eps = 0.2;
    let mut rng = trial_rng(3, 0);
    let (five_msg, honest) = random_multiround_instance(2, 2, 2, 2, 1.0 - eps, &mut rng)?;
    println!(
        "5-message toy: honest acceptance {:.9}",
        execute(&five_msg, &honest)?.accept_probability
    );

    let halved = halve(&five_msg)?;
    let honest_c = compress_honest(&five_msg, &honest)?;
    let measured = execute(&halved.instance, &honest_c)?.accept_probability;
    println!(
        "halved to {} messages: honest acceptance {measured:.9} (exactly 1 - eps/2 = {:.9})",
        halved.instance.message_count(),
        1.0 - eps / 2.0
    );

    let three = compress_to_three(&five_msg)?;
    println!(
        "compress_to_three: {} messages after {} halvings; completeness bound 1-2(1-c)/(m-1) = {:.6}",
        three.instance.message_count(),
        three.halving_depth,
        1.0 - 2.0 * eps / 4.0
    );

    // Soundness lift: perturb a perfect compressed prover and lift it back.
    let (perfect, honest_perfect) = random_multiround_instance(2, 2, 2, 2, 1.0, &mut rng)?;
    let halved_p = halve(&perfect)?;
    let mut adv = compress_honest(&perfect, &honest_perfect)?;
    let noise = random_pure_state(adv.advice.layout.clone(), &mut rng);
    let overlap = adv.advice.amplitudes.dotc(&noise.amplitudes);
    let orth = &noise.amplitudes - &adv.advice.amplitudes * overlap;
    let angle: f64 = 0.1;
    let v = adv.advice.amplitudes.clone() * cr(angle.cos())
        + orth.clone() * cr(angle.sin() / orth.norm());
    let norm = v.norm();
    adv.advice = PureState::new(adv.advice.layout.clone(), v / cr(norm))?;

    let report = lift_adversary(&perfect, &halved_p, &adv)?;
    let eps_measured = 1.0 - report.compressed_acceptance;
    println!("\nsoundness lift on a perturbed compressed adversary:");
    println!("  compressed acceptance 1 - eps = {:.6}", report.compressed_acceptance);
    println!(
        "  branch probabilities: heads {:.6}, tails {:.6} (>= 1-2eps = {:.6})",
        report.heads_probability,
        report.tails_probability,
        1.0 - 2.0 * eps_measured
    );
    println!(
        "  Bures chain: d(rho_H,aux) = {:.6}, d(rho_T,aux) = {:.6}, d(rho_H,rho_T) = {:.6} (<= 12 eps = {:.6})",
        report.bures_heads_to_aux,
        report.bures_tails_to_aux,
        report.bures_heads_to_tails,
        12.0 * eps_measured
    );
    println!(
        "  lifted acceptance: unconditional {:.6}, conditional {:.6} (>= 1-16eps = {:.6})",
        report.lifted_unconditional,
        report.lifted_conditional,
        1.0 - 16.0 * eps_measured
    );
    Ok(())
}
