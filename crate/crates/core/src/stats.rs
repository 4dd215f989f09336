//! Numerical core: the standard normal distribution, accuracy confidence
//! intervals, sample statistics, interval overlap and McNemar's test.
//!
//! The normal CDF is evaluated through the complementary error function
//! (the FreeBSD msun implementation shipped in `libm`), which keeps full
//! relative precision deep in the lower tail. The quantile
//! function uses Wichura's AS 241 (PPND16) rational approximation, accurate
//! to about 1e-16 relative over the whole open unit interval.

use libm::{erf, erfc};
use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

use crate::{Error, Result};

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("normal_cdf: non-finite input {x}")));
    }
    let tail = 0.5 * erfc(x.abs() * FRAC_1_SQRT_2);
    Ok(if x < 0.0 { tail } else { 1.0 - tail })
}

/// Upper tail `1 - Φ(x)` without cancellation.
pub fn normal_sf(x: f64) -> Result<f64> {
    normal_cdf(-x)
}

/// Inverse of the standard normal CDF.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal_quantile: probability {p} outside (0, 1)"
        )));
    }
    Ok(ppnd16(p))
}

// Wichura, Algorithm AS 241, Applied Statistics 37 (1988).
fn ppnd16(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        2.417_807_251_774_506_117_7e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        6.897_673_349_851_000_045_5e-1,
        1.481_039_764_274_800_745_9e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        2.965_605_718_285_048_912_3e-1,
        2.653_218_952_657_612_309_3e-2,
        1.242_660_947_388_078_438_6e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_9e-1,
        1.369_298_809_227_358_053_1e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    fn ratio(num: &[f64; 8], den: &[f64; 8], x: f64) -> f64 {
        let horner = |c: &[f64; 8]| c.iter().rev().fold(0.0, |acc, &k| acc * x + k);
        horner(num) / horner(den)
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * ratio(&A, &B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let value = if r <= 5.0 {
        r -= 1.6;
        ratio(&C, &D, r)
    } else {
        r -= 5.0;
        ratio(&E, &F, r)
    };
    if q < 0.0 {
        -value
    } else {
        value
    }
}

/// Two-sided quantile `z` for a central confidence level.
pub fn z_from_level(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    // 1 - (1 - level)/2 loses digits near level -> 1; go through the lower tail
    let alpha_half = 0.5 * (1.0 - level);
    Ok(-ppnd16(alpha_half))
}

/// Central confidence level `2Φ(z) - 1` covered by `±z`.
pub fn level_from_z(z: f64) -> Result<f64> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::Domain(format!(
            "z must be positive and finite, got {z}"
        )));
    }
    Ok(erf(z * FRAC_1_SQRT_2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IntervalMethod {
    NormalApprox,
    FoldSampleStd,
}

/// A confidence interval around an accuracy point estimate.
///
/// `half_width` is the raw `z·σ̂` value; `lower` and `upper` are clamped to
/// the accuracy domain `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub point: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub z: f64,
    pub method: IntervalMethod,
    /// Holdout size, present for normal-approximation intervals.
    pub n: Option<u64>,
}

impl ConfidenceInterval {
    fn new(
        point: f64,
        half_width: f64,
        z: f64,
        method: IntervalMethod,
        n: Option<u64>,
    ) -> Result<Self> {
        Ok(Self {
            point,
            half_width,
            lower: (point - half_width).max(0.0),
            upper: (point + half_width).min(1.0),
            level: level_from_z(z)?,
            z,
            method,
            n,
        })
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

fn check_z(z: f64) -> Result<()> {
    if z.is_finite() && z > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "z must be positive and finite, got {z}"
        )))
    }
}

/// Normal-approximation interval for `correct` successes out of `n`:
/// `half_width = z·sqrt(acc·(1 - acc)/n)`.
pub fn normal_approx_ci(correct: u64, n: u64, z: f64) -> Result<ConfidenceInterval> {
    if n == 0 {
        return Err(Error::Domain("holdout size n must be at least 1".into()));
    }
    if correct > n {
        return Err(Error::Domain(format!(
            "correct count {correct} exceeds holdout size {n}"
        )));
    }
    check_z(z)?;
    let nf = n as f64;
    let point = correct as f64 / nf;
    // k(n - k) in integers keeps the width exactly symmetric under k -> n - k
    let spread = (u128::from(correct) * u128::from(n - correct)) as f64;
    let half_width = z * (spread / nf / nf / nf).sqrt();
    ConfidenceInterval::new(point, half_width, z, IntervalMethod::NormalApprox, Some(n))
}

/// Same as [`normal_approx_ci`] but from an accuracy value rather than a
/// count, for pre-aggregated estimates.
pub fn normal_approx_ci_from_accuracy(accuracy: f64, n: u64, z: f64) -> Result<ConfidenceInterval> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::Domain(format!("accuracy {accuracy} outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::Domain("holdout size n must be at least 1".into()));
    }
    check_z(z)?;
    let nf = n as f64;
    let half_width = z * (accuracy * (1.0 - accuracy) / nf).sqrt();
    ConfidenceInterval::new(
        accuracy,
        half_width,
        z,
        IntervalMethod::NormalApprox,
        Some(n),
    )
}

/// Interval from the spread of per-fold accuracies: mean ± z·s.
pub fn fold_sample_ci(accuracies: &[f64], z: f64) -> Result<ConfidenceInterval> {
    if accuracies.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "fold-sample interval needs at least 2 accuracies, got {}",
            accuracies.len()
        )));
    }
    if let Some(bad) = accuracies.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Domain(format!("accuracy {bad} outside [0, 1]")));
    }
    check_z(z)?;
    let stats = sample_stats(accuracies)?;
    let std = stats.std.expect("n >= 2");
    ConfidenceInterval::new(stats.mean, z * std, z, IntervalMethod::FoldSampleStd, None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (n - 1) standard deviation; `None` for a single value.
    pub std: Option<f64>,
    pub min: f64,
    pub max: f64,
}

impl SampleStats {
    pub fn std(&self) -> Result<f64> {
        self.std.ok_or_else(|| {
            Error::InsufficientData("standard deviation needs at least 2 values".into())
        })
    }
}

pub fn sample_stats(values: &[f64]) -> Result<SampleStats> {
    if values.is_empty() {
        return Err(Error::InsufficientData("no values".into()));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite value {bad}")));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    // two-pass with compensation term
    let (ss, comp) = values.iter().fold((0.0, 0.0), |(ss, comp), &v| {
        let d = v - mean;
        (ss + d * d, comp + d)
    });
    let std = (n >= 2).then(|| {
        ((ss - comp * comp / n as f64) / (n - 1) as f64)
            .max(0.0)
            .sqrt()
    });
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // rounding can push the mean a hair outside [min, max]
    let mean = mean.clamp(min, max);
    Ok(SampleStats {
        n,
        mean,
        std,
        min,
        max,
    })
}

/// True when the closed intervals intersect; touching bounds count.
pub fn intervals_overlap(a: &ConfidenceInterval, b: &ConfidenceInterval) -> bool {
    a.lower.max(b.lower) <= a.upper.min(b.upper)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McNemarResult {
    /// Model A correct, model B wrong.
    pub b: u64,
    /// Model A wrong, model B correct.
    pub c: u64,
    pub statistic: f64,
    pub p_chi2: f64,
    pub p_exact: f64,
}

/// McNemar's test on the discordant counts of a paired comparison.
///
/// The statistic is continuity corrected with the correction floored at
/// zero, `max(|b - c| - 1, 0)² / (b + c)`, so equal counts give 0 and p = 1.
/// The exact p-value doubles the lower binomial tail and caps at 1.
pub fn mcnemar(b: u64, c: u64) -> McNemarResult {
    let total = b + c;
    if total == 0 {
        return McNemarResult {
            b,
            c,
            statistic: 0.0,
            p_chi2: 1.0,
            p_exact: 1.0,
        };
    }
    let excess = (b.abs_diff(c) as f64 - 1.0).max(0.0);
    let statistic = excess * excess / total as f64;
    let p_chi2 = (2.0 * normal_sf(statistic.sqrt()).expect("finite")).min(1.0);
    let p_exact = (2.0 * binomial_half_lower_tail(total, b.min(c))).min(1.0);
    McNemarResult {
        b,
        c,
        statistic,
        p_chi2,
        p_exact,
    }
}

/// `P(X <= k)` for `X ~ Binomial(n, 1/2)`.
fn binomial_half_lower_tail(n: u64, k: u64) -> f64 {
    if k >= n {
        return 1.0;
    }
    // log pmf by the ratio recurrence pmf(i + 1) = pmf(i) (n - i) / (i + 1)
    let mut log_pmf = -(n as f64) * LN_2;
    let mut logs = Vec::with_capacity(k as usize + 1);
    for i in 0..=k {
        logs.push(log_pmf);
        log_pmf += ((n - i) as f64 / (i + 1) as f64).ln();
    }
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - peak).exp()).sum();
    (peak + sum.ln()).exp().min(1.0)
}
