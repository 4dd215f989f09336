//! Comparison reports, CI-augmented estimate tables and charts, plus the
//! `metrics-ci` command-line front end in [`cli`].

pub mod cli;
pub mod svg;

use serde::Serialize;
use std::io::{Read, Write};

use crate::data::{
    aggregate_accuracy, check_header, contingency, csv_reader, csv_writer, AccuracyMeasurement,
    ContingencyTable, Estimate, GroupKey, PredictionRecord,
};
use crate::stats::{
    intervals_overlap, mcnemar, normal_approx_ci, normal_approx_ci_from_accuracy,
    ConfidenceInterval, McNemarResult,
};
use crate::{Error, Result};

pub use svg::{render_error_bar_svg, ChartSeries, ChartSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub label: String,
    pub measurement: AccuracyMeasurement,
    pub one_sigma: ConfidenceInterval,
    pub requested: ConfidenceInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseMcNemar {
    pub a: String,
    pub b: String,
    pub table: ContingencyTable,
    pub result: McNemarResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub groups: Vec<GroupSummary>,
    /// `overlap[i][j]`: the requested-level intervals of groups i and j meet.
    pub overlap: Vec<Vec<bool>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcnemar: Option<Vec<PairwiseMcNemar>>,
}

/// Pairwise overlap of a list of intervals. Symmetric, true on the diagonal.
pub fn overlap_matrix(intervals: &[ConfidenceInterval]) -> Vec<Vec<bool>> {
    intervals
        .iter()
        .map(|a| intervals.iter().map(|b| intervals_overlap(a, b)).collect())
        .collect()
}

/// Per-group intervals on pooled counts, their overlap at `z`, and
/// optionally pairwise McNemar tests between models.
///
/// McNemar pairs predictions by (fold, seed, sample_id), so every model must
/// cover the same samples in every context.
pub fn compare(
    records: &[PredictionRecord],
    group_key: GroupKey,
    z: f64,
    with_mcnemar: bool,
) -> Result<ComparisonReport> {
    let measurements = aggregate_accuracy(records, &[group_key])?;
    if with_mcnemar {
        if group_key != GroupKey::Model {
            return Err(Error::Usage(
                "McNemar comparison requires grouping by model".into(),
            ));
        }
        if measurements.len() < 2 {
            return Err(Error::Usage(
                "McNemar comparison needs at least two models".into(),
            ));
        }
    }

    let groups = measurements
        .into_iter()
        .map(|m| {
            Ok(GroupSummary {
                label: m.label(),
                one_sigma: normal_approx_ci(m.correct, m.total, 1.0)?,
                requested: normal_approx_ci(m.correct, m.total, z)?,
                measurement: m,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let requested: Vec<ConfidenceInterval> = groups.iter().map(|g| g.requested.clone()).collect();
    let overlap = overlap_matrix(&requested);

    let mcnemar = if with_mcnemar {
        let by_model = |label: &str| -> Vec<PredictionRecord> {
            records
                .iter()
                .filter(|r| r.model_id == label)
                .cloned()
                .collect()
        };
        let mut pairs = Vec::new();
        for (i, a) in groups.iter().enumerate() {
            for b in &groups[i + 1..] {
                let table = contingency(&by_model(&a.label), &by_model(&b.label))?;
                pairs.push(PairwiseMcNemar {
                    a: a.label.clone(),
                    b: b.label.clone(),
                    table,
                    result: mcnemar(table.a_correct_b_wrong, table.a_wrong_b_correct),
                });
            }
        }
        Some(pairs)
    } else {
        None
    };
    Ok(ComparisonReport {
        groups,
        overlap,
        mcnemar,
    })
}

/// An estimate together with one interval per requested `z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentedRow {
    pub estimate: Estimate,
    pub intervals: Vec<ConfidenceInterval>,
}

fn check_z_list(zs: &[f64]) -> Result<()> {
    if zs.is_empty() || zs.len() > 2 {
        return Err(Error::Usage(format!(
            "expected one or two z values, got {}",
            zs.len()
        )));
    }
    Ok(())
}

/// Attaches normal-approximation intervals at each `z` to every estimate.
pub fn augment(estimates: &[Estimate], zs: &[f64]) -> Result<Vec<AugmentedRow>> {
    check_z_list(zs)?;
    estimates
        .iter()
        .map(|e| {
            let intervals = zs
                .iter()
                .map(|&z| normal_approx_ci_from_accuracy(e.accuracy, e.n, z))
                .collect::<Result<_>>()?;
            Ok(AugmentedRow {
                estimate: e.clone(),
                intervals,
            })
        })
        .collect()
}

fn augmented_header(count: usize) -> Vec<String> {
    let mut header: Vec<String> = vec!["group".into(), "accuracy".into(), "n".into()];
    for i in 1..=count {
        header.extend([format!("z{i}"), format!("lo{i}"), format!("hi{i}")]);
    }
    header
}

/// Writes `group,accuracy,n,z1,lo1,hi1[,z2,lo2,hi2]`.
///
/// Numbers use the shortest representation that reads back to the same
/// `f64`, so bounds can be recomputed from the file exactly.
pub fn write_augmented<W: Write>(rows: &[AugmentedRow], sink: W) -> Result<()> {
    let count = rows.first().map_or(1, |r| r.intervals.len());
    let mut w = csv_writer(sink);
    w.write_record(augmented_header(count))?;
    for row in rows {
        let mut record = vec![
            row.estimate.group.clone(),
            row.estimate.accuracy.to_string(),
            row.estimate.n.to_string(),
        ];
        for ci in &row.intervals {
            record.extend([ci.z.to_string(), ci.lower.to_string(), ci.upper.to_string()]);
        }
        w.write_record(record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_augmented`], recomputing each interval
/// from `(accuracy, n, z)`. Errors if a stored bound disagrees with the
/// recomputation by more than `tolerance`.
pub fn parse_augmented<R: Read>(source: R, tolerance: f64) -> Result<Vec<AugmentedRow>> {
    let mut reader = csv_reader(source);
    let header = reader.headers()?.clone();
    let columns = header.len();
    if columns != 6 && columns != 9 {
        return Err(Error::Format(format!(
            "expected 6 or 9 columns, found {columns}"
        )));
    }
    let expected = augmented_header((columns - 3) / 3);
    check_header(
        &header,
        &expected.iter().map(String::as_str).collect::<Vec<_>>(),
    )?;

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |idx: usize| -> Result<f64> {
            record[idx].parse().map_err(|_| Error::Parse {
                line,
                message: format!(
                    "column `{}` is not a number: `{}`",
                    expected[idx], &record[idx]
                ),
            })
        };
        let n: u64 = record[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("n `{}` is not a positive integer", &record[2]),
        })?;
        let estimate = Estimate {
            group: record[0].to_string(),
            accuracy: num(1)?,
            n,
        };
        let mut intervals = Vec::new();
        for k in 0..(columns - 3) / 3 {
            let base = 3 + 3 * k;
            let ci = normal_approx_ci_from_accuracy(estimate.accuracy, n, num(base)?)?;
            let (lo, hi) = (num(base + 1)?, num(base + 2)?);
            if (ci.lower - lo).abs() > tolerance || (ci.upper - hi).abs() > tolerance {
                return Err(Error::Integrity(format!(
                    "line {line}: stored interval [{lo}, {hi}] differs from recomputed [{}, {}]",
                    ci.lower, ci.upper
                )));
            }
            intervals.push(ci);
        }
        rows.push(AugmentedRow {
            estimate,
            intervals,
        });
    }
    Ok(rows)
}

/// Overlap matrix over the `which`-th interval of every augmented row.
pub fn augmented_overlap(rows: &[AugmentedRow], which: usize) -> Result<Vec<Vec<bool>>> {
    let intervals = rows
        .iter()
        .map(|r| {
            r.intervals.get(which).cloned().ok_or_else(|| {
                Error::Domain(format!(
                    "row `{}` has no interval #{}",
                    r.estimate.group,
                    which + 1
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(overlap_matrix(&intervals))
}

/// Error-bar chart of augmented rows: the first interval as the colored
/// whisker, the second (if any) as the grey one behind it.
pub fn chart_from_augmented(rows: &[AugmentedRow], title: &str) -> Result<ChartSpec> {
    let series = rows
        .iter()
        .map(|r| ChartSeries {
            label: r.estimate.group.clone(),
            point: r.estimate.accuracy,
            primary_half_width: r.intervals[0].half_width,
            secondary_half_width: r.intervals.get(1).map(|ci| ci.half_width),
        })
        .collect();
    ChartSpec::new(title, series)
}
