//! Monte Carlo studies on synthetic binomial classifiers.
//!
//! A synthetic classifier with true accuracy `p` scores `Binomial(n, p)`
//! correct answers on a holdout set of size `n`. Two studies are provided:
//!
//! - coverage: how often the normal-approximation interval contains `p`;
//! - multi-seed: folds × seeds measurements where every seed shifts the true
//!   accuracy by `N(0, τ)`, comparing the ensemble spread with the
//!   normal-approximation half-width.
//!
//! Each trial (coverage) or seed (multi-seed) draws from its own stream
//! derived from `(rng_seed, index)`, so results do not depend on the number
//! of worker threads.

use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use std::io::{Read, Write};

use crate::data::{
    check_header, csv_reader, csv_writer, AccuracyMeasurement, GroupKey, GroupValue,
};
use crate::format::sig7;
use crate::stats::{level_from_z, normal_approx_ci, normal_approx_ci_from_accuracy, sample_stats};
use crate::{rng, Error, Result};

/// Lower/upper clamp for perturbed per-seed accuracies.
pub const ACCURACY_CLAMP: f64 = 1e-9;

pub const ENSEMBLE_HEADER: [&str; 6] = ["model", "fold", "seed", "correct", "total", "accuracy"];

const SIMULATED_MODEL: &str = "sim";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    /// True accuracy of the synthetic classifier.
    pub p: f64,
    pub n_holdout: u64,
    pub folds: u32,
    pub seeds: u32,
    /// Standard deviation of the per-seed accuracy shift.
    pub tau: f64,
    pub trials: u64,
    pub rng_seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            p: 0.9,
            n_holdout: 670,
            folds: 20,
            seeds: 1,
            tau: 0.0,
            trials: 10_000,
            rng_seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Domain(format!(
                "true accuracy p = {} outside (0, 1)",
                self.p
            )));
        }
        if self.n_holdout == 0 {
            return Err(Error::Domain("n_holdout must be at least 1".into()));
        }
        if self.folds == 0 || self.seeds == 0 || self.trials == 0 {
            return Err(Error::Domain(
                "folds, seeds and trials must be at least 1".into(),
            ));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::Domain(format!(
                "seed spread tau = {} must be nonnegative",
                self.tau
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageResult {
    pub config: SimulationConfig,
    pub z: f64,
    pub covered: u64,
    pub trials: u64,
    pub coverage: f64,
    /// Nominal level `2Φ(z) - 1`.
    pub nominal: f64,
    pub clamp_events: u64,
}

/// Fraction of trials whose normal-approximation interval contains `p`.
///
/// `folds`, `seeds` and `tau` are ignored. Trial `i` draws from stream `i`,
/// so two calls that differ only in `z` see the same binomial draws.
pub fn simulate_coverage(config: &SimulationConfig, z: f64) -> Result<CoverageResult> {
    config.validate()?;
    let nominal = level_from_z(z)?;
    let binomial = Binomial::new(config.n_holdout, config.p)
        .map_err(|e| Error::Domain(format!("binomial: {e}")))?;
    let n = config.n_holdout;
    let covered = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::stream(config.rng_seed, trial);
            let correct = binomial.sample(&mut rng);
            let ci = normal_approx_ci(correct, n, z).expect("validated inputs");
            u64::from(ci.contains(config.p))
        })
        .sum::<u64>();
    Ok(CoverageResult {
        config: config.clone(),
        z,
        covered,
        trials: config.trials,
        coverage: covered as f64 / config.trials as f64,
        nominal,
        clamp_events: 0,
    })
}

/// Normal-approximation half-width against the observed ensemble spread.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyComparison {
    /// Half-width at the pooled accuracy, `z = 1`, per-fold `n_holdout`.
    pub approx_half_width: f64,
    /// Unbiased standard deviation of all fold × seed accuracies.
    pub sample_std: f64,
    /// `sample_std / approx_half_width`; `None` when the half-width is 0.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiseedResult {
    pub config: SimulationConfig,
    /// Sorted by (fold, seed).
    pub measurements: Vec<AccuracyMeasurement>,
    pub comparison: UncertaintyComparison,
    pub clamp_events: u64,
}

/// Simulates the folds × seeds protocol.
///
/// Seed `s` draws from stream `s`: first its accuracy shift `δ_s ~ N(0, τ)`,
/// then one `Binomial(n_holdout, p_s)` per fold, with
/// `p_s = clamp(p + δ_s, 1e-9, 1 - 1e-9)`.
pub fn simulate_multiseed(config: &SimulationConfig) -> Result<MultiseedResult> {
    config.validate()?;
    if config.folds < 2 {
        return Err(Error::Domain(format!(
            "multi-seed simulation needs at least 2 folds, got {}",
            config.folds
        )));
    }
    let shift = Normal::new(0.0, config.tau).map_err(|e| Error::Domain(format!("normal: {e}")))?;
    let per_seed: Vec<(bool, Vec<u64>)> = (0..config.seeds)
        .into_par_iter()
        .map(|seed| {
            let mut rng = rng::stream(config.rng_seed, seed.into());
            let shifted = config.p + shift.sample(&mut rng);
            let p_seed = shifted.clamp(ACCURACY_CLAMP, 1.0 - ACCURACY_CLAMP);
            let binomial = Binomial::new(config.n_holdout, p_seed).expect("p clamped into (0, 1)");
            let correct = (0..config.folds)
                .map(|_| binomial.sample(&mut rng))
                .collect();
            (p_seed != shifted, correct)
        })
        .collect();

    let clamp_events = per_seed.iter().filter(|(clamped, _)| *clamped).count() as u64;
    let mut measurements = Vec::with_capacity((config.folds * config.seeds) as usize);
    for fold in 0..config.folds {
        for (seed, (_, correct)) in per_seed.iter().enumerate() {
            measurements.push(AccuracyMeasurement::new(
                vec![
                    (GroupKey::Model, GroupValue::Text(SIMULATED_MODEL.into())),
                    (GroupKey::Fold, GroupValue::Int(fold.into())),
                    (GroupKey::Seed, GroupValue::Int(seed as u64)),
                ],
                correct[fold as usize],
                config.n_holdout,
            )?);
        }
    }
    let comparison = compare_uncertainty(&measurements, config.n_holdout)?;
    Ok(MultiseedResult {
        config: config.clone(),
        measurements,
        comparison,
        clamp_events,
    })
}

/// Compares the ensemble spread of `measurements` with the normal
/// approximation at their pooled accuracy for a holdout of size `n_holdout`.
pub fn compare_uncertainty(
    measurements: &[AccuracyMeasurement],
    n_holdout: u64,
) -> Result<UncertaintyComparison> {
    let accuracies: Vec<f64> = measurements.iter().map(|m| m.accuracy).collect();
    let sample_std = sample_stats(&accuracies)?.std()?;
    let correct: u64 = measurements.iter().map(|m| m.correct).sum();
    let total: u64 = measurements.iter().map(|m| m.total).sum();
    let pooled = correct as f64 / total as f64;
    let approx_half_width = normal_approx_ci_from_accuracy(pooled, n_holdout, 1.0)?.half_width;
    let ratio = (approx_half_width > 0.0).then(|| sample_std / approx_half_width);
    Ok(UncertaintyComparison {
        approx_half_width,
        sample_std,
        ratio,
    })
}

fn group_text(m: &AccuracyMeasurement, key: GroupKey) -> String {
    m.get(key).map(|v| v.to_string()).unwrap_or_default()
}

fn group_int(m: &AccuracyMeasurement, key: GroupKey) -> Option<u64> {
    match m.get(key) {
        Some(GroupValue::Int(v)) => Some(*v),
        _ => None,
    }
}

/// Writes an ensemble CSV, rows sorted by (fold, seed).
pub fn emit_ensemble<W: Write>(measurements: &[AccuracyMeasurement], sink: W) -> Result<()> {
    if measurements.is_empty() {
        return Err(Error::InsufficientData("empty ensemble".into()));
    }
    let mut rows: Vec<&AccuracyMeasurement> = measurements.iter().collect();
    rows.sort_by_key(|m| (group_int(m, GroupKey::Fold), group_int(m, GroupKey::Seed)));
    let mut w = csv_writer(sink);
    w.write_record(ENSEMBLE_HEADER)?;
    for m in rows {
        w.write_record([
            group_text(m, GroupKey::Model),
            group_text(m, GroupKey::Fold),
            group_text(m, GroupKey::Seed),
            m.correct.to_string(),
            m.total.to_string(),
            sig7(m.accuracy),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an ensemble CSV back into measurements. Accuracy is recomputed
/// from the counts.
pub fn parse_ensemble<R: Read>(source: R) -> Result<Vec<AccuracyMeasurement>> {
    let mut reader = csv_reader(source);
    check_header(reader.headers()?, &ENSEMBLE_HEADER)?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let int = |idx: usize, name: &str| -> Result<u64> {
            row[idx].parse().map_err(|_| Error::Parse {
                line,
                message: format!(
                    "`{name}` must be a nonnegative integer, got `{}`",
                    &row[idx]
                ),
            })
        };
        let group = vec![
            (GroupKey::Model, GroupValue::Text(row[0].to_string())),
            (GroupKey::Fold, GroupValue::Int(int(1, "fold")?)),
            (GroupKey::Seed, GroupValue::Int(int(2, "seed")?)),
        ];
        out.push(AccuracyMeasurement::new(
            group,
            int(3, "correct")?,
            int(4, "total")?,
        )?);
    }
    Ok(out)
}

/// Draws `count` binomial variates from one stream; used to check the
/// sampler's distribution.
pub fn binomial_draws(n: u64, p: f64, count: usize, rng_seed: u64) -> Result<Vec<u64>> {
    let binomial = Binomial::new(n, p).map_err(|e| Error::Domain(format!("binomial: {e}")))?;
    let mut rng = rng::stream(rng_seed, 0);
    Ok((0..count).map(|_| binomial.sample(&mut rng)).collect())
}

/// Seeded Gaussian draws, for building diagnostic fixtures.
pub fn gaussian_draws(mean: f64, sd: f64, count: usize, rng_seed: u64) -> Result<Vec<f64>> {
    let normal = Normal::new(mean, sd).map_err(|e| Error::Domain(format!("normal: {e}")))?;
    let mut rng = rng::stream(rng_seed, 0);
    Ok((0..count).map(|_| normal.sample(&mut rng)).collect())
}
