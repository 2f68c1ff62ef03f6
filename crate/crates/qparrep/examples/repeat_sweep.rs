//! Parallel repetition of a 3-message game: product strategies factorize
//! exactly, entangled strategies are allowed but cannot beat the k-fold
//! product of the optimal single-fold value on planted instances.
//!
//! Run: `cargo run --release --example repeat_sweep`

use qparrep::protocol::{execute, parallel_repeat, product_adversary};
use qparrep::reduction::{planted_instance, PlantedDims};
use qparrep::rng::trial_rng;

fn main() -> qparrep::Result<()> {
    let delta = 0.8;
    let mut rng = trial_rng(42, 0);
    let planted = planted_instance(PlantedDims::qubit(), &[delta], &mut rng)?;
    let single = planted.single_adversary(0)?;
    let base = execute(&planted.protocol, &single)?.accept_probability;
    println!("single-fold acceptance: {base:.12}");
    println!("{:>3} {:>16} {:>16} {:>10}", "k", "measured", "delta^k", "error");
    for k in 1..=4 {
        let pk = parallel_repeat(&planted.protocol, k)?;
        let ak = product_adversary(&single, k)?;
        let measured = execute(&pk, &ak)?.accept_probability;
        let expected = delta.powi(k as i32);
        println!(
            "{k:>3} {measured:>16.12} {expected:>16.12} {:>10.2e}",
            (measured - expected).abs()
        );
    }
    Ok(())
}
