//! Seeded, reproducible experiment drivers.
//!
//! Every experiment takes an [`ExperimentConfig`] (a JSON document; command
//! line flags override fields), runs a set of trials on a worker pool with
//! per-trial generators derived from `(seed, trial index)`, and emits a
//! [`RunReport`]: the config echo, per-trial records, aggregate bound checks,
//! and the library version. Reports are byte-identical across runs for
//! identical configs, except for the wall-clock field.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::applications as apps;
use crate::compression;
use crate::protocol::{self, PrefixGame};
use crate::qops::{DensityOperator, OperatorKind, OperatorMatrix, PureState, RegisterLayout};
use crate::reduction::{self, AmpParams, PlantedDims, ReductionParams};
use crate::rng::trial_rng;
use crate::svt::AmplifierMode;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RepeatSweep,
    ExtractNonuniform,
    ExtractUniform,
    CompressCheck,
    PublicCoinCheck,
    Counterexample,
    XorSweep,
    Selftest,
}

impl ExperimentKind {
    pub fn needs_seed(self) -> bool {
        !matches!(self, ExperimentKind::Counterexample)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Description of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// Optional protocol JSON consumed by `repeat-sweep` in place of the
    /// seeded planted instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

/// One trial's numeric record (deterministically ordered for output).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub fields: BTreeMap<String, f64>,
}

/// One aggregate bound evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// `geq` when the value must be at least the bound, `leq` otherwise.
    pub direction: String,
    pub pass: bool,
}

impl CheckResult {
    fn leq(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            direction: "leq".into(),
            pass: value <= bound,
        }
    }

    fn geq(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            direction: "geq".into(),
            pass: value >= bound,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    pub wall_clock_ms: u128,
    pub library_version: String,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per trial with a header naming every column.
    pub fn to_csv(&self) -> String {
        let mut columns: Vec<String> = Vec::new();
        for t in &self.trials {
            for k in t.fields.keys() {
                if !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
        columns.sort();
        let mut out = String::from("trial");
        for c in &columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for t in &self.trials {
            out.push_str(&t.trial.to_string());
            for c in &columns {
                out.push(',');
                match t.fields.get(c) {
                    Some(v) => out.push_str(&format!("{v}")),
                    None => out.push_str(""),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_out(&self) -> Result<()> {
        let body = match self.config.format {
            OutputFormat::Json => self.to_json()?,
            OutputFormat::Csv => self.to_csv(),
        };
        match &self.config.out {
            Some(path) => {
                let mut f = std::fs::File::create(path)?;
                f.write_all(body.as_bytes())?;
            }
            None => println!("{body}"),
        }
        Ok(())
    }
}

fn record(trial: u64, fields: &[(&str, f64)]) -> TrialRecord {
    TrialRecord {
        trial,
        fields: fields
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect(),
    }
}

/// Runs the configured experiment.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    let start = std::time::Instant::now();
    let (trials, checks) = match config.experiment {
        ExperimentKind::RepeatSweep => repeat_sweep(config)?,
        ExperimentKind::ExtractNonuniform => extract_nonuniform(config)?,
        ExperimentKind::ExtractUniform => extract_uniform(config)?,
        ExperimentKind::CompressCheck => compress_check(config)?,
        ExperimentKind::PublicCoinCheck => public_coin_check(config)?,
        ExperimentKind::Counterexample => counterexample(config)?,
        ExperimentKind::XorSweep => xor_sweep(config)?,
        ExperimentKind::Selftest => selftest(config)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok(RunReport {
        config: config.clone(),
        trials,
        checks,
        pass,
        wall_clock_ms: start.elapsed().as_millis(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

type Outcome = (Vec<TrialRecord>, Vec<CheckResult>);

fn repeat_sweep(config: &ExperimentConfig) -> Result<Outcome> {
    let delta = config.delta.unwrap_or(0.8);
    let k_max = config.k.unwrap_or(4).clamp(1, 6);
    let (instance, single) = match &config.protocol_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let schema: protocol::ProtocolSchema = serde_json::from_str(&text)?;
            let p = schema.to_instance()?;
            p.require_three_message()?;
            let mut rng = trial_rng(config.seed, 0);
            let (_, adv) = protocol::random_three_message(
                protocol::ThreeMessageDims::qubit(),
                2,
                &mut rng,
            )?;
            // adversary dims must match the loaded protocol
            let _ = adv;
            return Err(Error::InvalidParameter(
                "protocol_file sweeps need a matching adversary; use the seeded planted mode"
                    .into(),
            ));
        }
        None => {
            let mut rng = trial_rng(config.seed, 0);
            let planted =
                reduction::planted_instance(PlantedDims::qubit(), &[delta], &mut rng)?;
            let single = planted.single_adversary(0)?;
            (planted.protocol, single)
        }
    };
    let mut trials = Vec::new();
    let mut worst: f64 = 0.0;
    for k in 1..=k_max {
        let pk = protocol::parallel_repeat_with_cap(&instance, k, 1 << 16)?;
        let ak = protocol::product_adversary_with_cap(&single, k, 1 << 16)?;
        let measured = protocol::execute(&pk, &ak)?.accept_probability;
        let expected = delta.powi(k as i32);
        let diff = (measured - expected).abs();
        worst = worst.max(diff);
        trials.push(record(
            k as u64,
            &[
                ("k", k as f64),
                ("measured", measured),
                ("expected", expected),
                ("abs_error", diff),
            ],
        ));
    }
    let checks = vec![CheckResult::leq(
        "product factorization |p_k - delta^k|",
        worst,
        1e-10,
    )];
    Ok((trials, checks))
}

fn extract_nonuniform(config: &ExperimentConfig) -> Result<Outcome> {
    let delta = config.delta.unwrap_or(0.8);
    let mu = config.mu.unwrap_or(0.05);
    let k = config.k.unwrap_or(2).clamp(2, 3);
    let n_trials = config.trials.unwrap_or(10);
    let results: Vec<Result<TrialRecord>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.seed, t);
            let planted = reduction::planted_instance(PlantedDims::qubit(), &[delta], &mut rng)?;
            let adv = planted.k_fold_adversary(&vec![0; k])?;
            let game = PrefixGame::new(&planted.protocol, &adv.unitaries[1], k)?;
            let i = 1 + (t as usize % k);
            let (_, report) = reduction::amp_nonuniform(
                &game,
                &adv.advice,
                i,
                AmpParams {
                    mu,
                    delta,
                    tau: 1.0,
                    mode: AmplifierMode::ExactOracle,
                },
            )?;
            Ok(record(
                t,
                &[
                    ("chosen_index", i as f64),
                    ("success", report.success_probability),
                    ("guarantee", report.guarantee),
                    (
                        "margin",
                        report.success_probability - report.guarantee,
                    ),
                    ("abort_probability", report.abort_probability),
                ],
            ))
        })
        .collect();
    let trials: Vec<TrialRecord> = results.into_iter().collect::<Result<_>>()?;
    let worst_margin = trials
        .iter()
        .map(|t| t.fields["margin"])
        .fold(f64::INFINITY, f64::min);
    let checks = vec![CheckResult::geq(
        "extraction success - (1-2mu)^2 tau delta",
        worst_margin,
        -1e-9,
    )];
    Ok((trials, checks))
}

fn extract_uniform(config: &ExperimentConfig) -> Result<Outcome> {
    let delta = config.delta.unwrap_or(0.9);
    let epsilon = config.epsilon.unwrap_or(0.2);
    let k = config.k.unwrap_or(2).clamp(2, 3);
    let n_trials = config.trials.unwrap_or(20);
    let params = ReductionParams::derive(k, delta, epsilon)?;
    let results: Vec<Result<TrialRecord>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.seed, t);
            let planted = reduction::planted_instance(PlantedDims::qubit(), &[delta], &mut rng)?;
            let adv = planted.k_fold_adversary(&vec![0; k])?;
            let game = PrefixGame::new(&planted.protocol, &adv.unitaries[1], k)?;
            let report = reduction::amp_uniform(&game, &adv.advice, &params, &mut rng)?;
            let aborted = report.aborted.is_some();
            Ok(record(
                t,
                &[
                    ("aborted", aborted as u64 as f64),
                    ("i_star", report.i_star as f64),
                    ("success", report.success_probability),
                    ("copies_used", report.copies_used as f64),
                ],
            ))
        })
        .collect();
    let trials: Vec<TrialRecord> = results.into_iter().collect::<Result<_>>()?;
    let aborts: f64 = trials.iter().map(|t| t.fields["aborted"]).sum();
    let abort_freq = aborts / n_trials as f64;
    let worst_success = trials
        .iter()
        .filter(|t| t.fields["aborted"] == 0.0)
        .map(|t| t.fields["success"])
        .fold(f64::INFINITY, f64::min);
    let budget = params.eps0 / 5.0;
    let sigma = (budget * (1.0 - budget) / n_trials as f64).sqrt().max(1e-6);
    let checks = vec![
        CheckResult::geq("non-aborting success >= delta - epsilon", worst_success, delta - epsilon - 1e-9),
        CheckResult::leq("abort frequency within eps0 budget", abort_freq, budget + 3.0 * sigma),
    ];
    Ok((trials, checks))
}

fn compress_check(config: &ExperimentConfig) -> Result<Outcome> {
    let eps = config.epsilon.unwrap_or(0.2);
    let n_trials = config.trials.unwrap_or(5);
    let results: Vec<Result<TrialRecord>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.seed, t);
            let (p, honest) =
                compression::random_multiround_instance(2, 2, 2, 2, 1.0 - eps, &mut rng)?;
            let halved = compression::halve(&p)?;
            let hc = compression::compress_honest(&p, &honest)?;
            let measured = protocol::execute(&halved.instance, &hc)?.accept_probability;
            let exact = 1.0 - eps / 2.0;
            let c3 = compression::compress_to_three(&p)?;
            let m = p.message_count() as f64;
            let c_orig = 1.0 - eps;
            let bound = 1.0 - 2.0 * (1.0 - c_orig) / (m - 1.0);
            Ok(record(
                t,
                &[
                    ("halved_acceptance", measured),
                    ("exact_target", exact),
                    ("halving_error", (measured - exact).abs()),
                    ("three_message_count", c3.instance.message_count() as f64),
                    ("completeness_bound", bound),
                    ("meets_bound", (measured >= bound - 1e-9) as u64 as f64),
                ],
            ))
        })
        .collect();
    let trials: Vec<TrialRecord> = results.into_iter().collect::<Result<_>>()?;
    let worst = trials
        .iter()
        .map(|t| t.fields["halving_error"])
        .fold(0.0, f64::max);
    let all_bounds = trials.iter().all(|t| t.fields["meets_bound"] == 1.0);
    let checks = vec![
        CheckResult::leq("halved acceptance equals 1 - eps/2", worst, 1e-6),
        CheckResult::geq(
            "completeness bound 1-2(1-c)/(m-1)",
            all_bounds as u64 as f64,
            1.0,
        ),
    ];
    Ok((trials, checks))
}

fn public_coin_check(config: &ExperimentConfig) -> Result<Outcome> {
    let eps = config.epsilon.unwrap_or(0.2);
    let n_trials = config.trials.unwrap_or(5);
    let results: Vec<Result<TrialRecord>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.seed, t);
            let (p, honest) =
                compression::random_multiround_instance(1, 2, 2, 2, 1.0 - eps, &mut rng)?;
            let compiled = compression::to_public_coin(&p)?;
            let hc = compression::public_coin_honest(&p, &honest)?;
            let measured = protocol::execute(&compiled.instance, &hc)?.accept_probability;
            let exact = 1.0 - eps / 2.0;
            let coin_dim = compiled.instance.challenger.rounds[0]
                .unitary
                .out_layout
                .dim_of("pcoin")? as f64;
            Ok(record(
                t,
                &[
                    ("compiled_acceptance", measured),
                    ("exact_target", exact),
                    ("error", (measured - exact).abs()),
                    ("coin_dim", coin_dim),
                ],
            ))
        })
        .collect();
    let trials: Vec<TrialRecord> = results.into_iter().collect::<Result<_>>()?;
    let worst = trials.iter().map(|t| t.fields["error"]).fold(0.0, f64::max);
    let coins_ok = trials.iter().all(|t| t.fields["coin_dim"] == 2.0);
    let checks = vec![
        CheckResult::leq("compiled completeness equals 1-(1-c)/2", worst, 1e-6),
        CheckResult::geq("single coin bit", coins_ok as u64 as f64, 1.0),
    ];
    Ok((trials, checks))
}

fn counterexample(config: &ExperimentConfig) -> Result<Outcome> {
    let k_max = config.k.unwrap_or(3).clamp(2, 12);
    let mut trials = Vec::new();
    let mut exact = true;
    for k in 2..=k_max {
        let out = apps::forwarding_counterexample(k)?;
        exact &= out.win_probability == 0.5;
        trials.push(record(
            k as u64,
            &[
                ("k", k as f64),
                ("win_probability", out.win_probability),
            ],
        ));
    }
    let checks = vec![CheckResult::geq(
        "forwarding win probability exactly 1/2",
        exact as u64 as f64,
        1.0,
    )];
    Ok((trials, checks))
}

fn xor_sweep(config: &ExperimentConfig) -> Result<Outcome> {
    let k_max = config.k.unwrap_or(3).clamp(1, 4);
    let n_trials = config.trials.unwrap_or(20);
    let results: Vec<Result<TrialRecord>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.seed, t);
            let layout = RegisterLayout::new([("C", 2), ("R", 2)])?;
            let psi0 = crate::rng::random_pure_state(layout.clone(), &mut rng);
            let psi1 = crate::rng::random_pure_state(layout, &mut rng);
            let cc = apps::CanonicalCommitment::new(psi0, psi1, vec!["C".into()])?;
            let delta = apps::binding_value(&cc)?.0;
            let switch = apps::flavor_switch(&cc)?;
            let mut worst_norm: f64 = 0.0;
            let mut worst_bind: f64 = f64::NEG_INFINITY;
            for k in 1..=k_max {
                let xk = apps::xor_repeat_with_cap(&cc, k, 1 << 14)?;
                worst_norm = worst_norm
                    .max((xk.psi[0].norm() - 1.0).abs())
                    .max((xk.psi[1].norm() - 1.0).abs());
                let bindk = apps::binding_value(&xk)?.0;
                worst_bind = worst_bind.max(bindk - (k as f64 * delta.sqrt()).min(1.0));
            }
            Ok(record(
                t,
                &[
                    ("base_binding", delta),
                    ("switch_hiding", switch.hiding_switched),
                    ("switch_hiding_flagged", switch.hiding_flagged_commit),
                    ("switch_bound_sqrt_delta", delta.sqrt()),
                    ("xor_norm_error", worst_norm),
                    ("xor_binding_slack", worst_bind),
                ],
            ))
        })
        .collect();
    let trials: Vec<TrialRecord> = results.into_iter().collect::<Result<_>>()?;
    let worst_norm = trials
        .iter()
        .map(|t| t.fields["xor_norm_error"])
        .fold(0.0, f64::max);
    let worst_switch = trials
        .iter()
        .map(|t| t.fields["switch_hiding_flagged"] - t.fields["switch_bound_sqrt_delta"])
        .fold(f64::NEG_INFINITY, f64::max);
    let worst_bind = trials
        .iter()
        .map(|t| t.fields["xor_binding_slack"])
        .fold(f64::NEG_INFINITY, f64::max);
    let checks = vec![
        CheckResult::leq("xor normalization", worst_norm, 1e-9),
        CheckResult::leq("flavor-switch hiding <= sqrt(binding)", worst_switch, 1e-8),
        CheckResult::leq("xor binding <= k sqrt(delta)", worst_bind, 1e-8),
    ];
    Ok((trials, checks))
}

fn selftest(config: &ExperimentConfig) -> Result<Outcome> {
    let n = config.trials.unwrap_or(200);
    let results: Vec<Result<TrialRecord>> = (0..n)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.seed, t);
            // Fuchs–van de Graaf and weak Bures triangle.
            let r1 = crate::rng::random_density(4, &mut rng);
            let r2 = crate::rng::random_density(4, &mut rng);
            let r3 = crate::rng::random_density(4, &mut rng);
            let d12 = crate::qops::distances(&r1, &r2)?;
            let d13 = crate::qops::distances(&r1, &r3)?;
            let d23 = crate::qops::distances(&r2, &r3)?;
            let fvg_lo = (1.0 - d12.fidelity.sqrt()) - d12.trace_distance;
            let fvg_hi = d12.trace_distance - (1.0 - d12.fidelity).sqrt();
            let triangle = d13.bures_sq - 2.0 * (d12.bures_sq + d23.bures_sq);
            // Gentle measurement on a random pure state.
            let layout = RegisterLayout::single("x", 4)?;
            let psi = crate::rng::random_pure_state(layout.clone(), &mut rng);
            let proj = OperatorMatrix::on(
                layout.clone(),
                crate::rng::random_projector(4, 2, &mut rng),
                OperatorKind::Projector,
            )?;
            let weight = proj.expectation(&psi)?.re;
            let gentle = if weight > 1e-6 {
                let post = proj.apply(&psi)?.normalized()?;
                let f = crate::qops::fidelity(
                    &DensityOperator::from_pure(&post)?,
                    &DensityOperator::from_pure(&psi)?,
                )?;
                (f - weight).abs()
            } else {
                0.0
            };
            // Jordan reconstruction residual.
            let pa = OperatorMatrix::on(
                layout.clone(),
                crate::rng::random_projector(4, 2, &mut rng),
                OperatorKind::Projector,
            )?;
            let pb = OperatorMatrix::on(
                layout.clone(),
                crate::rng::random_projector(4, 2, &mut rng),
                OperatorKind::Projector,
            )?;
            let dec = crate::jordan::jordan_decompose(&pa, &pb)?;
            let mut recon: f64 = 0.0;
            {
                let n_dim = 4;
                let mut sum = crate::qops::CMat::from_element(n_dim, n_dim, num_complex::Complex64::new(0.0, 0.0));
                for b in &dec.blocks {
                    sum += b.projector();
                }
                recon = recon.max((sum - crate::qops::CMat::identity(n_dim, n_dim)).norm());
            }
            // Pseudoinverse identities on a commuting state inside Π_A.
            let psi_a = {
                let raw = crate::rng::random_pure_state(layout.clone(), &mut rng);
                let v = &pa.mat * &raw.amplitudes;
                let norm = v.norm();
                if norm < 1e-6 {
                    None
                } else {
                    Some(PureState::new(layout.clone(), v / num_complex::Complex64::new(norm, 0.0))?)
                }
            };
            let pseudo = match psi_a {
                Some(pstate) => {
                    let rho = DensityOperator::from_pure(&pstate)?;
                    match crate::jordan::pseudoinverse_state(&dec, &rho) {
                        Ok((sigma, diag)) => {
                            let tb = (&dec.pi_b * &sigma.matrix).trace().re;
                            let ta = (&dec.pi_a * &sigma.matrix).trace().re;
                            let zero_w = (dec.zero_value_projector() * &rho.matrix).trace().re;
                            let expect_ta = (1.0 - zero_w) / diag.e_trace;
                            (tb - 1.0).abs().max((ta - expect_ta).abs())
                        }
                        Err(_) => 0.0,
                    }
                }
                None => 0.0,
            };
            Ok(record(
                t,
                &[
                    ("fvg_lower_violation", fvg_lo.max(0.0)),
                    ("fvg_upper_violation", fvg_hi.max(0.0)),
                    ("bures_triangle_violation", triangle.max(0.0)),
                    ("gentle_error", gentle),
                    ("jordan_residual", recon),
                    ("pseudoinverse_error", pseudo),
                ],
            ))
        })
        .collect();
    let trials: Vec<TrialRecord> = results.into_iter().collect::<Result<_>>()?;
    let max_of = |key: &str| -> f64 {
        trials
            .iter()
            .map(|t| t.fields[key])
            .fold(0.0, f64::max)
    };
    let checks = vec![
        CheckResult::leq("fuchs-van de graaf lower", max_of("fvg_lower_violation"), 1e-8),
        CheckResult::leq("fuchs-van de graaf upper", max_of("fvg_upper_violation"), 1e-8),
        CheckResult::leq("weak bures triangle", max_of("bures_triangle_violation"), 1e-8),
        CheckResult::leq("gentle measurement equality", max_of("gentle_error"), 1e-9),
        CheckResult::leq("jordan completeness residual", max_of("jordan_residual"), 1e-7),
        CheckResult::leq("pseudoinverse identities", max_of("pseudoinverse_error"), 1e-8),
    ];
    Ok((trials, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            experiment: kind,
            seed: 7,
            dim: None,
            k: None,
            delta: None,
            mu: None,
            epsilon: None,
            trials: Some(3),
            protocol_file: None,
            out: None,
            format: OutputFormat::Json,
        }
    }

    #[test]
    fn repeat_sweep_passes_and_is_reproducible() {
        let cfg = base_config(ExperimentKind::RepeatSweep);
        let r1 = run(&cfg).unwrap();
        let mut r2 = run(&cfg).unwrap();
        assert!(r1.pass, "{:?}", r1.checks);
        r2.wall_clock_ms = r1.wall_clock_ms;
        assert_eq!(r1.to_json().unwrap(), r2.to_json().unwrap());
    }

    #[test]
    fn counterexample_is_exact() {
        let mut cfg = base_config(ExperimentKind::Counterexample);
        cfg.k = Some(3);
        let r = run(&cfg).unwrap();
        assert!(r.pass);
        assert_eq!(r.trials.last().unwrap().fields["win_probability"], 0.5);
    }

    #[test]
    fn selftest_passes() {
        let mut cfg = base_config(ExperimentKind::Selftest);
        cfg.trials = Some(50);
        let r = run(&cfg).unwrap();
        assert!(r.pass, "{:?}", r.checks);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut cfg = base_config(ExperimentKind::Counterexample);
        cfg.k = Some(3);
        cfg.format = OutputFormat::Csv;
        let r = run(&cfg).unwrap();
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "trial,k,win_probability");
        assert_eq!(lines.count(), r.trials.len());
    }

    #[test]
    fn compress_check_passes() {
        let r = run(&base_config(ExperimentKind::CompressCheck)).unwrap();
        assert!(r.pass, "{:?}", r.checks);
    }

    #[test]
    fn xor_sweep_passes() {
        let mut cfg = base_config(ExperimentKind::XorSweep);
        cfg.k = Some(2);
        cfg.trials = Some(5);
        let r = run(&cfg).unwrap();
        assert!(r.pass, "{:?}", r.checks);
    }
}
