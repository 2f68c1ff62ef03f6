//! Singular-value amplification between two projectors: the exact spectral
//! oracle and the certified bounded-polynomial realization.
//!
//! Run: `cargo run --release --example singular_value_amplification`

use qparrep::qops::{OperatorKind, OperatorMatrix, RegisterLayout};
use qparrep::rng::{random_projector, random_pure_state, trial_rng};
use qparrep::svt::{AmplifierMode, SVAmplifier};

fn main() -> qparrep::Result<()> {
    let mut rng = trial_rng(23, 0);
    let dim = 16;
    let layout = RegisterLayout::single("x", dim)?;
    let pi = OperatorMatrix::on(
        layout.clone(),
        random_projector(dim, 6, &mut rng),
        OperatorKind::Projector,
    )?;
    let pi_tilde = OperatorMatrix::on(
        layout.clone(),
        random_projector(dim, 7, &mut rng),
        OperatorKind::Projector,
    )?;
    let (gamma, mu, nu) = (2.0, 0.1, 0.05);

    let exact = SVAmplifier::new(
        pi.clone(),
        pi_tilde.clone(),
        gamma,
        mu,
        nu,
        AmplifierMode::ExactOracle,
    )?;
    println!("singular values of the pair: {:?}", exact.singular_values());
    println!("threshold kappa = (1-mu)/gamma = {:.4}", exact.threshold());

    let psi = random_pure_state(layout, &mut rng);
    let amplified = exact.amplify(&psi)?;
    println!(
        "exact oracle: ||amplify(psi)|| = {:.6} (bounded by 1 - mu = {:.6} on the kept space)",
        amplified.norm(),
        1.0 - mu
    );

    let poly = SVAmplifier::new(pi, pi_tilde, gamma, mu, nu, AmplifierMode::Polynomial)?;
    let cert = poly.polynomial_certificate()?;
    println!(
        "\npolynomial mode: degree {} with grid certificate \
         max|g(x)/(gamma x) - 1| = {:.3e} <= nu = {nu}, max|g| = {:.6} <= 1",
        cert.degree, cert.max_relative_error, cert.max_abs
    );
    let deviation = {
        let a = poly.amplify(&psi)?;
        let b = exact.amplify(&psi)?;
        (a.amplitudes - b.amplitudes).norm()
    };
    println!("deviation between modes on a random state: {deviation:.3e} <= nu");
    Ok(())
}
