//! Histogram and Gaussian quantile-quantile diagnostics for ensembles of
//! accuracy measurements.

use serde::Serialize;
use std::io::Write;

use crate::data::csv_writer;
use crate::format::sig7;
use crate::stats::{normal_quantile, sample_stats};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n: u64,
}

impl Histogram {
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv_writer(sink);
        w.write_record(["bin_lo", "bin_hi", "count"])?;
        for (i, count) in self.counts.iter().enumerate() {
            w.write_record([
                sig7(self.bin_edges[i]),
                sig7(self.bin_edges[i + 1]),
                count.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Equal-width histogram over `[min, max]`.
///
/// Bins are half-open `[lo, hi)` except the last, which also takes `max`.
/// When every value is equal the span is widened by 0.5 on each side.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::InsufficientData("histogram of no values".into()));
    }
    if bins == 0 {
        return Err(Error::Domain("bin count must be at least 1".into()));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite value {bad}")));
    }
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut bin_edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    bin_edges.push(hi);

    let mut counts = vec![0u64; bins];
    for &v in values {
        let mut idx = (((v - lo) / width) as usize).min(bins - 1);
        // settle rounding against the stored edges
        while idx > 0 && v < bin_edges[idx] {
            idx -= 1;
        }
        while idx + 1 < bins && v >= bin_edges[idx + 1] {
            idx += 1;
        }
        counts[idx] += 1;
    }
    Ok(Histogram {
        bin_edges,
        counts,
        n: values.len() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QqPoint {
    pub theoretical: f64,
    pub sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QqSeries {
    pub points: Vec<QqPoint>,
    pub mu: f64,
    pub sigma: f64,
    pub max_abs_deviation: f64,
}

impl QqSeries {
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv_writer(sink);
        w.write_record(["theoretical", "sample"])?;
        for p in &self.points {
            w.write_record([sig7(p.theoretical), sig7(p.sample)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Gaussian plotting position for the `i`-th of `n` order statistics
/// (1-based): `(i - 0.5) / n`.
pub fn plotting_position(i: usize, n: usize) -> f64 {
    (i as f64 - 0.5) / n as f64
}

/// Sorted sample against quantiles of a fitted Gaussian.
///
/// `mu` is the sample mean. `sigma` is the least-squares slope of the sorted
/// sample on the standard normal quantiles `z_i = Φ⁻¹((i - 0.5)/n)` through
/// the mean, `Σ (v_(i) - mu) z_i / Σ z_i²`. Inputs of the form `m + s·z_i`
/// are therefore reproduced exactly.
pub fn qq_gaussian(values: &[f64]) -> Result<QqSeries> {
    if values.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "QQ analysis needs at least 3 values, got {}",
            values.len()
        )));
    }
    let mu = sample_stats(values)?.mean;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::DegenerateDistribution(
            "all values are equal (sigma = 0)".into(),
        ));
    }
    let n = sorted.len();
    let z = (1..=n)
        .map(|i| normal_quantile(plotting_position(i, n)))
        .collect::<Result<Vec<_>>>()?;
    let (mut sxz, mut szz) = (0.0, 0.0);
    for (v, z) in sorted.iter().zip(&z) {
        sxz += (v - mu) * z;
        szz += z * z;
    }
    let sigma = (sxz / szz).max(0.0);
    let points: Vec<QqPoint> = sorted
        .into_iter()
        .zip(&z)
        .map(|(sample, z)| QqPoint {
            theoretical: mu + sigma * z,
            sample,
        })
        .collect();
    let max_abs_deviation = points
        .iter()
        .map(|p| (p.sample - p.theoretical).abs())
        .fold(0.0, f64::max);
    Ok(QqSeries {
        points,
        mu,
        sigma,
        max_abs_deviation,
    })
}

/// Histogram and QQ series over the same input.
pub fn normality_report(values: &[f64], bins: usize) -> Result<(Histogram, QqSeries)> {
    Ok((histogram(values, bins)?, qq_gaussian(values)?))
}
