//! Jordan blocks of two projectors, the Marriott–Watrous outcome law for
//! alternating measurements, and the almost-projective value measurement.
//!
//! Run: `cargo run --release --example jordan_alternating`

use qparrep::altmeas::{
    exact_alternating_distribution, mwdist_mixture_distribution, EffJorMeasurement,
};
use qparrep::jordan::jordan_decompose;
use qparrep::qops::{CVec, OperatorKind, OperatorMatrix, PureState, RegisterLayout, C_ZERO};
use qparrep::rng::{gaussian_c64, random_projector, trial_rng};

fn main() -> qparrep::Result<()> {
    let mut rng = trial_rng(17, 0);
    let dim = 8;
    let layout = RegisterLayout::single("x", dim)?;
    let pa = OperatorMatrix::on(
        layout.clone(),
        random_projector(dim, 3, &mut rng),
        OperatorKind::Projector,
    )?;
    let pb = OperatorMatrix::on(
        layout.clone(),
        random_projector(dim, 4, &mut rng),
        OperatorKind::Projector,
    )?;
    let dec = jordan_decompose(&pa, &pb)?;
    println!("Jordan blocks (dim, value):");
    for b in &dec.blocks {
        println!("  dim {} value {:.6}", b.dim(), b.value);
    }

    // Outcome law: exact branch enumeration vs the MWDist mixture.
    let mut v = CVec::from_element(dim, C_ZERO);
    for b in &dec.blocks {
        if b.w1.norm() > 0.5 {
            v += &b.w1 * gaussian_c64(&mut rng);
        }
    }
    let psi = PureState::new(layout, v)?.normalized()?;
    let t = 5;
    let exact = exact_alternating_distribution(&dec, &psi, t)?;
    let mixture = mwdist_mixture_distribution(&dec, &psi, t)?;
    let tv: f64 = exact
        .iter()
        .zip(&mixture)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / 2.0;
    println!("\nalternating-measurement law at T = {t}: total variation {tv:.3e}");

    // The almost-projective measurement: two sequential applications agree.
    let m = EffJorMeasurement::new(&pa, &pb, 0.1, 0.05)?;
    println!(
        "\nalmost-projective measurement: T = {} alternations, repair cap {}",
        m.schedule.alternations, m.schedule.repair_cap
    );
    let mut agreements = 0;
    let trials = 200;
    let mut done = 0;
    for s in 0..trials {
        let mut rng = trial_rng(17, 100 + s);
        let psi = qparrep::rng::random_pure_state(m.decomposition.layout.clone(), &mut rng);
        let first = m.apply(&psi, &mut rng)?;
        let (Some(p1), false) = (first.value, first.aborted) else {
            continue;
        };
        let second = m.apply(&first.post_state, &mut rng)?;
        let Some(p2) = second.value else { continue };
        done += 1;
        if (p1 - p2).abs() <= 0.1 {
            agreements += 1;
        }
    }
    println!(
        "sequential agreement |p - p'| <= 0.1 on {agreements}/{done} completed pairs \
         (target >= 1 - delta = 0.95)"
    );
    Ok(())
}
