//! Seeded randomness: per-trial generator derivation, Haar-random unitaries,
//! random states and densities.
//!
//! Per-trial generators are derived deterministically from `(base seed, trial
//! index)` so that trial subsets are stable when trial counts change.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::qops::{CMat, DensityOperator, PureState, RegisterLayout};

/// SplitMix64 step, used to mix (seed, trial) into a ChaCha seed.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic per-trial generator for `(base_seed, trial_index)`.
pub fn trial_rng(base_seed: u64, trial: u64) -> ChaCha12Rng {
    let mixed = splitmix64(base_seed ^ splitmix64(trial.wrapping_add(0xA5A5_5A5A_0F0F_F0F0)));
    ChaCha12Rng::seed_from_u64(mixed)
}

/// Standard complex Gaussian entry.
pub fn gaussian_c64(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// Haar-random unitary via QR of a complex Gaussian matrix with the R
/// diagonal's phases fixed.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 1e-300 {
            d / Complex64::new(d.norm(), 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Haar-random pure state on a layout.
pub fn random_pure_state(layout: RegisterLayout, rng: &mut impl Rng) -> PureState {
    let n = layout.total_dim();
    let v = crate::qops::CVec::from_fn(n, |_, _| gaussian_c64(rng));
    let norm = v.norm();
    PureState::new(layout, v / Complex64::new(norm, 0.0)).expect("dims match")
}

/// Random full-rank density operator (Wishart-style).
pub fn random_density(dim: usize, rng: &mut impl Rng) -> DensityOperator {
    let layout = RegisterLayout::single("x", dim).expect("small dim");
    let g = CMat::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    DensityOperator::new(layout, w / Complex64::new(tr, 0.0)).expect("wishart is PSD")
}

/// Random rank-`r` projector matrix on dimension `dim`.
pub fn random_projector(dim: usize, rank: usize, rng: &mut impl Rng) -> CMat {
    assert!(rank <= dim);
    let u = haar_unitary(dim, rng);
    let mut p = CMat::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for i in 0..rank {
        let c = u.column(i);
        p += &c * c.adjoint();
    }
    p
}
