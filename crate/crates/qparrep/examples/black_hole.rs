//! Commitments from radiation states: commit-to-0 sends H·B of
//! radiation ⊗ EPR, commit-to-1 sends H·D. Decodable radiation gives perfect
//! hiding and zero binding; radiation whose qubit is locked into H binds but
//! leaks.
//!
//! Run: `cargo run --release --example black_hole`

use qparrep::applications::blackhole_commitment;
use qparrep::qops::{cr, CVec, PureState, RegisterLayout, C_ZERO};
use qparrep::rng::trial_rng;

fn main() -> qparrep::Result<()> {
    let mut rng = trial_rng(31, 0);
    let layout = RegisterLayout::new([("H", 2), ("B", 2), ("R1", 2)])?;

    // Fully decodable: B maximally entangled with the prior radiation R.
    let mut v = CVec::from_element(8, C_ZERO);
    v[0] = cr(std::f64::consts::FRAC_1_SQRT_2);
    v[3] = cr(std::f64::consts::FRAC_1_SQRT_2);
    let decodable = PureState::new(layout.clone(), v)?;
    let report = blackhole_commitment(&decodable, &mut rng)?;
    println!("decodable radiation (B entangled with R):");
    println!(
        "  hiding {:.6}, binding break {:.6}, decodability {:.6}",
        report.hiding, report.binding_break, report.decodability
    );

    // Undecodable: B locked into H instead.
    let mut v = CVec::from_element(8, C_ZERO);
    v[0] = cr(std::f64::consts::FRAC_1_SQRT_2);
    v[6] = cr(std::f64::consts::FRAC_1_SQRT_2);
    let locked = PureState::new(layout, v)?;
    let report = blackhole_commitment(&locked, &mut rng)?;
    println!("undecodable radiation (B locked into H):");
    println!(
        "  hiding {:.6}, binding break {:.6}, decodability {:.6}",
        report.hiding, report.binding_break, report.decodability
    );
    Ok(())
}
