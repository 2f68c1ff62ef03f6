//! Canonical commitments: binding as a fidelity, flavor switching, and XOR
//! repetition, with the duality identity connecting them.
//!
//! Run: `cargo run --release --example xor_commitments`

use qparrep::applications::{
    binding_game_search, binding_value, flavor_switch, hiding_advantage, xor_repeat,
    CanonicalCommitment,
};
use qparrep::qops::RegisterLayout;
use qparrep::rng::{random_pure_state, trial_rng};

fn main() -> qparrep::Result<()> {
    let mut rng = trial_rng(13, 0);
    let layout = RegisterLayout::new([("C", 2), ("R", 2)])?;
    let cc = CanonicalCommitment::new(
        random_pure_state(layout.clone(), &mut rng),
        random_pure_state(layout, &mut rng),
        vec!["C".into()],
    )?;

    let (delta, _) = binding_value(&cc)?;
    let eps = hiding_advantage(&cc)?;
    println!("base commitment: binding value delta = {delta:.6}, hiding advantage = {eps:.6}");
    let searched = binding_game_search(&cc, 4, &mut rng)?;
    println!("see-saw binding search reaches {searched:.6} (Uhlmann ground truth {delta:.6})");

    let switch = flavor_switch(&cc)?;
    println!(
        "\nflavor switch: hiding(switched) = {:.3e} (flag on the reveal side), \
         flagged-commit reading = {:.6} = sqrt(delta) = {:.6}",
        switch.hiding_switched,
        switch.hiding_flagged_commit,
        delta.sqrt()
    );
    println!(
        "               binding(switched) = {:.6} (reported; relates to the base hiding)",
        switch.binding_switched
    );

    println!("\nXOR repetition (binding bound k*sqrt(delta)):");
    for k in 1..=3 {
        let xk = xor_repeat(&cc, k)?;
        let bk = binding_value(&xk)?.0;
        let hk = hiding_advantage(&xk)?;
        println!(
            "  k = {k}: binding {bk:.6} <= {:.6}; hiding {hk:.6}",
            (k as f64 * delta.sqrt()).min(1.0)
        );
    }
    Ok(())
}
