//! Public-coin compilation of a 3-message protocol: the prover hands over
//! the challenger's post-challenge workspace, the challenger's only message
//! is one uniformly random bit.
//!
//! Run: `cargo run --release --example public_coin`

use qparrep::compression::{public_coin_honest, public_coin_lift, to_public_coin,
    random_multiround_instance};
use qparrep::protocol::execute;
use qparrep::rng::trial_rng;

fn main() -> qparrep::Result<()> {
    for c_target in [1.0, 0.8, 0.6] {
        let mut rng = trial_rng(5, (c_target * 100.0) as u64);
        let (p3, honest) = random_multiround_instance(1, 2, 2, 2, c_target, &mut rng)?;
        let compiled = to_public_coin(&p3)?;
        let coin_dim = compiled.instance.challenger.rounds[0]
            .unitary
            .out_layout
            .dim_of("pcoin")?;
        let honest_c = public_coin_honest(&p3, &honest)?;
        let measured = execute(&compiled.instance, &honest_c)?.accept_probability;
        println!(
            "c = {c_target:.1}: compiled completeness {measured:.9} \
             (formula 1-(1-c)/2 = {:.9}); challenger message = {coin_dim}-dim coin",
            1.0 - (1.0 - c_target) / 2.0
        );
        let lift = public_coin_lift(&p3, &compiled, &honest_c)?;
        println!(
            "          lift report: unconditional {:.6} vs 1-16eps = {:.6}",
            lift.lifted_unconditional,
            1.0 - 16.0 * (1.0 - lift.compressed_acceptance)
        );
    }
    Ok(())
}
