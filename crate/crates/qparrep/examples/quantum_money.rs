//! The counterfeit security game for quantum money: clone-and-verify as a
//! protocol instance, with parallel repetition of the game equal to the
//! repeated protocol.
//!
//! Run: `cargo run --release --example quantum_money`

use qparrep::applications::{copy_adversary, money_game, optimal_cloner_search};
use qparrep::protocol::{execute, parallel_repeat, product_adversary};
use qparrep::qops::{cr, CMat, OperatorKind, OperatorMatrix, PureState, RegisterLayout, C_ZERO};
use qparrep::rng::{random_pure_state, trial_rng};

fn main() -> qparrep::Result<()> {
    // Classical banknote: a basis state with a basis-projector verifier.
    let mint_layout = RegisterLayout::new([("B", 2)])?;
    let mint = PureState::basis(mint_layout.clone(), 1)?;
    let v_layout = RegisterLayout::new([("B1", 2), ("B2", 2)])?;
    let mut v = CMat::from_element(4, 4, C_ZERO);
    v[(3, 3)] = cr(1.0);
    let verify = OperatorMatrix::on(v_layout.clone(), v, OperatorKind::Projector)?;
    let game = money_game(&mint, &verify)?;
    let copier = copy_adversary(2)?;
    println!(
        "classical banknote, copy adversary: win probability {:.6}",
        execute(&game, &copier)?.accept_probability
    );
    let g2 = parallel_repeat(&game, 2)?;
    let copier2 = product_adversary(&copier, 2)?;
    println!(
        "2-fold repetition with the product copier: {:.6} (single value squared)",
        execute(&g2, &copier2)?.accept_probability
    );

    // Haar banknote with a rank-1 two-copy verifier: the instance is fully
    // known at desk scale, so the see-saw finds the trivial re-preparation
    // cloner with value 1; the reported number is the search outcome.
    let mut rng = trial_rng(29, 0);
    let haar_mint = random_pure_state(mint_layout, &mut rng);
    let target = haar_mint.amplitudes.kronecker(&haar_mint.amplitudes);
    let haar_verify =
        OperatorMatrix::on(v_layout, &target * target.adjoint(), OperatorKind::Projector)?;
    let best = optimal_cloner_search(&haar_mint, &haar_verify, 6, 60, &mut rng)?;
    println!("\nHaar banknote, rank-1 verifier: see-saw cloner value {best:.6}");
    Ok(())
}
