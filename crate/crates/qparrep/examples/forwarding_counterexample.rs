//! The forwarding adversary against the k-fold repetition of the
//! XOR-guessing game: with a malleable (tag-free) commitment channel, the
//! adversary forwards the challengers' commitments cyclically and wins every
//! fold exactly when the global parity is odd — probability 1/2 for every k,
//! so repetition does not amplify at all.
//!
//! Run: `cargo run --release --example forwarding_counterexample`

use qparrep::applications::forwarding_counterexample;

fn main() -> qparrep::Result<()> {
    println!("{:>3} {:>18} {:>14}", "k", "win probability", "bit vectors");
    for k in 2..=8 {
        let out = forwarding_counterexample(k)?;
        println!(
            "{k:>3} {:>18} {:>14}",
            out.win_probability,
            out.records.len()
        );
    }
    let out = forwarding_counterexample(3)?;
    println!("\nper-fold records at k = 3 (win-all exactly when ⊕b = 1):");
    for (bits, wins) in &out.records {
        println!("  b = {bits:?} -> fold wins {wins:?}");
    }
    Ok(())
}
