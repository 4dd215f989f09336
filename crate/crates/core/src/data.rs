//! Prediction ingestion, accuracy aggregation, stratified folds and paired
//! contingency tables.

use rand::seq::SliceRandom;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::format::sig7;
use crate::{rng, Error, Result};

pub const PREDICTIONS_HEADER: [&str; 6] =
    ["model", "fold", "seed", "sample_id", "label", "prediction"];
pub const LABELS_HEADER: [&str; 2] = ["sample_id", "label"];
pub const FOLDS_HEADER: [&str; 3] = ["sample_id", "label", "fold"];
pub const ESTIMATES_HEADER: [&str; 3] = ["group", "accuracy", "n"];

/// One prediction of one model on one sample in a (model, fold, seed) context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PredictionRecord {
    pub model_id: String,
    pub fold_id: u32,
    pub seed: u64,
    pub sample_id: String,
    pub true_label: String,
    pub predicted_label: String,
}

impl PredictionRecord {
    pub fn is_correct(&self) -> bool {
        self.true_label == self.predicted_label
    }
}

pub(crate) fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source)
}

pub(crate) fn csv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink)
}

/// Checks that the header matches `expected` exactly, column by column.
pub(crate) fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    for (i, want) in expected.iter().enumerate() {
        match found.get(i) {
            Some(got) if got == *want => {}
            Some(got) => {
                return Err(Error::Format(format!(
                    "expected column `{want}` at position {}, found `{got}`",
                    i + 1
                )))
            }
            None => return Err(Error::Format(format!("missing column `{want}`"))),
        }
    }
    if let Some(extra) = found.get(expected.len()) {
        return Err(Error::Format(format!("unexpected column `{extra}`")));
    }
    Ok(())
}

/// Position of a named column in a header, for files with free-form layout.
pub(crate) fn find_column(found: &csv::StringRecord, name: &str) -> Result<usize> {
    found
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Format(format!("missing column `{name}`")))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_field<T: FromStr>(record: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let raw = &record[idx];
    raw.parse().map_err(|_| Error::Parse {
        line: line_of(record),
        message: format!("`{name}` must be a nonnegative integer, got `{raw}`"),
    })
}

fn non_empty(record: &csv::StringRecord, idx: usize, name: &str) -> Result<String> {
    let raw = &record[idx];
    if raw.is_empty() {
        return Err(Error::Parse {
            line: line_of(record),
            message: format!("`{name}` must not be empty"),
        });
    }
    Ok(raw.to_string())
}

/// Reads a `predictions.csv` stream.
///
/// Rows keep their file order. A repeated (model, fold, seed, sample_id) key
/// is rejected.
pub fn parse_predictions<R: Read>(source: R) -> Result<Vec<PredictionRecord>> {
    let mut reader = csv_reader(source);
    check_header(reader.headers()?, &PREDICTIONS_HEADER)?;
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let record = PredictionRecord {
            model_id: non_empty(&row, 0, "model")?,
            fold_id: parse_field(&row, 1, "fold")?,
            seed: parse_field(&row, 2, "seed")?,
            sample_id: non_empty(&row, 3, "sample_id")?,
            true_label: non_empty(&row, 4, "label")?,
            predicted_label: non_empty(&row, 5, "prediction")?,
        };
        let key = (
            record.model_id.clone(),
            record.fold_id,
            record.seed,
            record.sample_id.clone(),
        );
        if !seen.insert(key) {
            return Err(Error::Integrity(format!(
                "duplicate prediction for model `{}`, fold {}, seed {}, sample `{}` (line {})",
                record.model_id,
                record.fold_id,
                record.seed,
                record.sample_id,
                line_of(&row)
            )));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_predictions<W: Write>(records: &[PredictionRecord], sink: W) -> Result<()> {
    let mut writer = csv_writer(sink);
    writer.write_record(PREDICTIONS_HEADER)?;
    for r in records {
        writer.write_record([
            r.model_id.as_str(),
            &r.fold_id.to_string(),
            &r.seed.to_string(),
            &r.sample_id,
            &r.true_label,
            &r.predicted_label,
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKey {
    Model,
    Fold,
    Seed,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Model => "model",
            GroupKey::Fold => "fold",
            GroupKey::Seed => "seed",
        }
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(GroupKey::Model),
            "fold" => Ok(GroupKey::Fold),
            "seed" => Ok(GroupKey::Seed),
            other => Err(Error::Domain(format!(
                "unknown group key `{other}` (expected model, fold or seed)"
            ))),
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Value of one grouping key. Integers order numerically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum GroupValue {
    Int(u64),
    Text(String),
}

impl fmt::Display for GroupValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupValue::Int(v) => write!(f, "{v}"),
            GroupValue::Text(v) => f.write_str(v),
        }
    }
}

/// Correct/total counts for one group of predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyMeasurement {
    /// Grouping keys in the order they were requested.
    pub group: Vec<(GroupKey, GroupValue)>,
    pub correct: u64,
    pub total: u64,
    pub accuracy: f64,
}

impl AccuracyMeasurement {
    pub fn new(group: Vec<(GroupKey, GroupValue)>, correct: u64, total: u64) -> Result<Self> {
        if total == 0 {
            return Err(Error::Domain("measurement total must be positive".into()));
        }
        if correct > total {
            return Err(Error::Domain(format!(
                "correct {correct} exceeds total {total}"
            )));
        }
        Ok(Self {
            group,
            correct,
            total,
            accuracy: correct as f64 / total as f64,
        })
    }

    pub fn get(&self, key: GroupKey) -> Option<&GroupValue> {
        self.group.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    /// Group values joined with `/`, or `all` for the ungrouped measurement.
    pub fn label(&self) -> String {
        if self.group.is_empty() {
            return "all".to_string();
        }
        self.group
            .iter()
            .map(|(_, v)| v.to_string())
            .collect::<Vec<_>>()
            .join("/")
    }
}

fn group_value(record: &PredictionRecord, key: GroupKey) -> GroupValue {
    match key {
        GroupKey::Model => GroupValue::Text(record.model_id.clone()),
        GroupKey::Fold => GroupValue::Int(record.fold_id.into()),
        GroupKey::Seed => GroupValue::Int(record.seed),
    }
}

/// Counts correct predictions per distinct group key tuple.
///
/// Output is sorted by the group values in `group_by` order. An empty
/// `group_by` pools everything into a single measurement.
pub fn aggregate_accuracy(
    records: &[PredictionRecord],
    group_by: &[GroupKey],
) -> Result<Vec<AccuracyMeasurement>> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no prediction records".into()));
    }
    let mut unique = BTreeSet::new();
    if let Some(dup) = group_by.iter().find(|k| !unique.insert(**k)) {
        return Err(Error::Domain(format!("group key `{dup}` given twice")));
    }
    let mut counts: BTreeMap<Vec<GroupValue>, (u64, u64)> = BTreeMap::new();
    for r in records {
        let key = group_by.iter().map(|k| group_value(r, *k)).collect();
        let entry = counts.entry(key).or_default();
        entry.0 += u64::from(r.is_correct());
        entry.1 += 1;
    }
    counts
        .into_iter()
        .map(|(values, (correct, total))| {
            let group = group_by.iter().copied().zip(values).collect();
            AccuracyMeasurement::new(group, correct, total)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldEntry {
    pub sample_id: String,
    pub class_label: String,
    pub fold: usize,
}

/// Stratified k-fold assignment. Entries keep the input order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<FoldEntry>,
    /// Classes with fewer than `k` members; some folds hold none of them.
    pub undersized_classes: Vec<String>,
}

impl FoldAssignment {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for e in &self.assignments {
            sizes[e.fold] += 1;
        }
        sizes
    }

    /// Per-class fold counts, keyed by class label.
    pub fn class_fold_counts(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut counts: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for e in &self.assignments {
            counts
                .entry(&e.class_label)
                .or_insert_with(|| vec![0; self.k])[e.fold] += 1;
        }
        counts
    }

    pub fn warnings(&self) -> Vec<String> {
        self.undersized_classes
            .iter()
            .map(|c| {
                format!(
                    "class `{c}` has fewer than {} members; some folds contain none of it",
                    self.k
                )
            })
            .collect()
    }

    /// Writes `folds.csv`, rows sorted by sample id.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut rows: Vec<&FoldEntry> = self.assignments.iter().collect();
        rows.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
        let mut writer = csv_writer(sink);
        writer.write_record(FOLDS_HEADER)?;
        for e in rows {
            writer.write_record([e.sample_id.as_str(), &e.class_label, &e.fold.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Assigns samples to `k` folds with per-class balance.
///
/// Classes are visited in label order. Each class's members are shuffled with
/// a generator seeded by `rng_seed`, then dealt round-robin; the deal carries
/// on from the fold where the previous class stopped, starting at fold 0.
/// Per-class fold counts therefore differ by at most one, and so do fold
/// sizes.
pub fn stratified_folds(
    labels: &[(String, String)],
    k: usize,
    rng_seed: u64,
) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Domain(format!("k must be at least 2, got {k}")));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut ids = BTreeSet::new();
    for (i, (sample_id, class)) in labels.iter().enumerate() {
        if !ids.insert(sample_id.as_str()) {
            return Err(Error::Integrity(format!(
                "duplicate sample id `{sample_id}`"
            )));
        }
        by_class.entry(class).or_default().push(i);
    }

    let mut rng = rng::stream(rng_seed, 0);
    let mut fold_of = vec![0usize; labels.len()];
    let mut undersized_classes = Vec::new();
    let mut next = 0usize;
    for (class, mut members) in by_class {
        if members.len() < k {
            undersized_classes.push(class.to_string());
        }
        members.shuffle(&mut rng);
        for idx in members {
            fold_of[idx] = next;
            next = (next + 1) % k;
        }
    }

    let assignments = labels
        .iter()
        .zip(fold_of)
        .map(|((sample_id, class_label), fold)| FoldEntry {
            sample_id: sample_id.clone(),
            class_label: class_label.clone(),
            fold,
        })
        .collect();
    Ok(FoldAssignment {
        k,
        seed: rng_seed,
        assignments,
        undersized_classes,
    })
}

/// Reads a `sample_id,label` file.
pub fn parse_labels<R: Read>(source: R) -> Result<Vec<(String, String)>> {
    let mut reader = csv_reader(source);
    check_header(reader.headers()?, &LABELS_HEADER)?;
    reader
        .records()
        .map(|row| {
            let row = row?;
            Ok((
                non_empty(&row, 0, "sample_id")?,
                non_empty(&row, 1, "label")?,
            ))
        })
        .collect()
}

/// One row of `estimates.csv`: a pre-aggregated accuracy and its holdout size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub group: String,
    pub accuracy: f64,
    pub n: u64,
}

/// Reads `estimates.csv`, validating every row.
pub fn parse_estimates<R: Read>(source: R) -> Result<Vec<Estimate>> {
    let mut reader = csv_reader(source);
    check_header(reader.headers()?, &ESTIMATES_HEADER)?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = line_of(&row);
        let invalid = |message: String| Error::Parse { line, message };
        let accuracy: f64 = row[1]
            .parse()
            .map_err(|_| invalid(format!("accuracy `{}` is not a number", &row[1])))?;
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(invalid(format!("accuracy {accuracy} outside [0, 1]")));
        }
        let n: u64 = row[2]
            .parse()
            .map_err(|_| invalid(format!("n `{}` is not a nonnegative integer", &row[2])))?;
        if n < 1 {
            return Err(invalid("n must be at least 1".into()));
        }
        out.push(Estimate {
            group: row[0].to_string(),
            accuracy,
            n,
        });
    }
    Ok(out)
}

pub fn write_estimates<W: Write>(estimates: &[Estimate], sink: W) -> Result<()> {
    let mut writer = csv_writer(sink);
    writer.write_record(ESTIMATES_HEADER)?;
    for e in estimates {
        writer.write_record([e.group.as_str(), &sig7(e.accuracy), &e.n.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Paired outcome counts of two models on the same samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ContingencyTable {
    pub both_correct: u64,
    pub a_correct_b_wrong: u64,
    pub a_wrong_b_correct: u64,
    pub both_wrong: u64,
    pub n: u64,
}

impl ContingencyTable {
    pub fn add(&mut self, a_correct: bool, b_correct: bool) {
        match (a_correct, b_correct) {
            (true, true) => self.both_correct += 1,
            (true, false) => self.a_correct_b_wrong += 1,
            (false, true) => self.a_wrong_b_correct += 1,
            (false, false) => self.both_wrong += 1,
        }
        self.n += 1;
    }
}

type PairKey<'a> = (u32, u64, &'a str);

fn index_by_sample<'a>(
    records: &'a [PredictionRecord],
    side: &str,
) -> Result<HashMap<PairKey<'a>, &'a PredictionRecord>> {
    let mut map = HashMap::with_capacity(records.len());
    for r in records {
        if map
            .insert((r.fold_id, r.seed, r.sample_id.as_str()), r)
            .is_some()
        {
            return Err(Error::Integrity(format!(
                "{side}: sample `{}` appears twice in fold {}, seed {}",
                r.sample_id, r.fold_id, r.seed
            )));
        }
    }
    Ok(map)
}

/// Pairs two prediction lists by (fold, seed, sample_id) and tallies the
/// four agreement cells.
pub fn contingency(
    records_a: &[PredictionRecord],
    records_b: &[PredictionRecord],
) -> Result<ContingencyTable> {
    let a = index_by_sample(records_a, "first model")?;
    let b = index_by_sample(records_b, "second model")?;

    let mut mismatched: Vec<String> = a
        .keys()
        .filter(|k| !b.contains_key(*k))
        .chain(b.keys().filter(|k| !a.contains_key(*k)))
        .map(|(fold, seed, id)| format!("{id} (fold {fold}, seed {seed})"))
        .collect();
    if !mismatched.is_empty() {
        mismatched.sort();
        let total = mismatched.len();
        mismatched.truncate(10);
        return Err(Error::Pairing(format!(
            "{total} sample(s) not shared by both models: {}",
            mismatched.join(", ")
        )));
    }

    let mut keys: Vec<&PairKey> = a.keys().collect();
    keys.sort();
    let mut table = ContingencyTable::default();
    for key in keys {
        let (ra, rb) = (a[key], b[key]);
        if ra.true_label != rb.true_label {
            return Err(Error::Integrity(format!(
                "sample `{}` (fold {}, seed {}) has label `{}` for one model and `{}` for the other",
                ra.sample_id, ra.fold_id, ra.seed, ra.true_label, rb.true_label
            )));
        }
        table.add(ra.is_correct(), rb.is_correct());
    }
    Ok(table)
}
