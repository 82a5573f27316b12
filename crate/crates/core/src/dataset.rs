//! Tabular dataset handling: CSV ingestion, label encoding,
//! standardization, class balancing, and subject-aware splitting.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::schema;
use crate::signal::FeatureVector;

/// Default CSV column name for the class label.
pub const LABEL_COLUMN: &str = "y";
/// Default CSV column name for the subject id.
pub const SUBJECT_COLUMN: &str = "subject";

/// A labelled feature matrix with one subject id per row.
///
/// Immutable by convention: every transform returns a new table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub column_names: Vec<String>,
    /// Row-major rows × features.
    pub data: Array2<f64>,
    /// One {0,1} label per row.
    pub labels: Vec<u8>,
    /// One subject id per row.
    pub subjects: Vec<i64>,
    /// The standardization this table was produced with, if any.
    pub scaler: Option<ScalerParams>,
}

impl FeatureTable {
    pub fn new(
        column_names: Vec<String>,
        data: Array2<f64>,
        labels: Vec<u8>,
        subjects: Vec<i64>,
    ) -> Result<Self> {
        if column_names.is_empty() {
            return Err(Error::Schema("table needs at least one feature".into()));
        }
        let mut unique: Vec<&String> = column_names.iter().collect();
        unique.sort();
        unique.dedup();
        if unique.len() != column_names.len() {
            return Err(Error::Schema("duplicate feature names".into()));
        }
        if data.ncols() != column_names.len() {
            return Err(Error::Shape(format!(
                "{} columns of data for {} feature names",
                data.ncols(),
                column_names.len()
            )));
        }
        if data.nrows() != labels.len() || data.nrows() != subjects.len() {
            return Err(Error::Shape(format!(
                "{} rows of data, {} labels, {} subject ids",
                data.nrows(),
                labels.len(),
                subjects.len()
            )));
        }
        if labels.iter().any(|l| *l > 1) {
            return Err(Error::Label("labels must be 0 or 1".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema("table contains non-finite values".into()));
        }
        Ok(FeatureTable {
            column_names,
            data,
            labels,
            subjects,
            scaler: None,
        })
    }

    /// Assemble a table from extracted vectors; every vector must carry a
    /// label.
    pub fn from_vectors(vectors: &[FeatureVector]) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Schema("no feature vectors".into()));
        }
        let names: Vec<String> = schema::feature_schema()
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut flat = Vec::with_capacity(vectors.len() * names.len());
        let mut labels = Vec::with_capacity(vectors.len());
        let mut subjects = Vec::with_capacity(vectors.len());
        for (i, v) in vectors.iter().enumerate() {
            let label = v
                .label
                .ok_or_else(|| Error::Schema(format!("vector {i} has no label")))?;
            flat.extend_from_slice(&v.values);
            labels.push(label);
            subjects.push(v.subject);
        }
        let data = Array2::from_shape_vec((vectors.len(), names.len()), flat)
            .map_err(|e| Error::Shape(e.to_string()))?;
        FeatureTable::new(names, data, labels, subjects)
    }

    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.data.ncols()
    }

    /// Rows per class as (count of 0s, count of 1s).
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.labels.iter().filter(|l| **l == 1).count();
        (self.labels.len() - ones, ones)
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// New table with only the named columns, in the given order.
    pub fn select_features(&self, names: &[String]) -> Result<FeatureTable> {
        let mut indices = Vec::with_capacity(names.len());
        for name in names {
            indices.push(self.feature_index(name).ok_or_else(|| {
                Error::Schema(format!("unknown feature {name:?}"))
            })?);
        }
        let data = self.data.select(Axis(1), &indices);
        let mut out = FeatureTable::new(
            names.to_vec(),
            data,
            self.labels.clone(),
            self.subjects.clone(),
        )?;
        out.scaler = self.scaler.as_ref().map(|s| s.subset(names));
        Ok(out)
    }

    /// New table with only the given rows, in the given order.
    pub fn subset_rows(&self, rows: &[usize]) -> Result<FeatureTable> {
        for &r in rows {
            if r >= self.n_rows() {
                return Err(Error::Parameter(format!(
                    "row {r} out of range for {} rows",
                    self.n_rows()
                )));
            }
        }
        let data = self.data.select(Axis(0), rows);
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        let subjects = rows.iter().map(|&r| self.subjects[r]).collect();
        let mut out = FeatureTable::new(self.column_names.clone(), data, labels, subjects)?;
        out.scaler = self.scaler.clone();
        Ok(out)
    }

    /// Indices of rows whose subject is in `subjects`, in table order.
    pub fn rows_with_subjects(&self, subjects: &BTreeSet<i64>) -> Vec<usize> {
        self.subjects
            .iter()
            .enumerate()
            .filter(|(_, s)| subjects.contains(s))
            .map(|(i, _)| i)
            .collect()
    }

    /// Distinct subject ids, ascending.
    pub fn unique_subjects(&self) -> Vec<i64> {
        let set: BTreeSet<i64> = self.subjects.iter().copied().collect();
        set.into_iter().collect()
    }
}

/// Decode a class-label token: `trust`/`1` → 1, `distrust`/`0` → 0.
pub fn encode_label(token: &str) -> Result<u8> {
    match token.trim() {
        "trust" | "1" => Ok(1),
        "distrust" | "0" => Ok(0),
        other => Err(Error::Label(other.to_string())),
    }
}

/// Read a feature CSV using the default `y`/`subject` column names.
pub fn load_csv(path: impl AsRef<Path>) -> Result<FeatureTable> {
    load_csv_with(path, LABEL_COLUMN, SUBJECT_COLUMN)
}

/// Read a feature CSV.
///
/// Every column other than `label_column` and `subject_column` is a
/// feature. The subject column is optional; without it each row becomes
/// its own subject. Cell-level problems surface as parse errors carrying
/// the 1-based data row and the column name.
pub fn load_csv_with(
    path: impl AsRef<Path>,
    label_column: &str,
    subject_column: &str,
) -> Result<FeatureTable> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Schema(format!("{other:?}")),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = headers.iter().position(|h| h == label_column).ok_or_else(|| {
        Error::Schema(format!("missing label column {label_column:?}"))
    })?;
    let subject_idx = headers.iter().position(|h| h == subject_column);
    let feature_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx && Some(*i) != subject_idx)
        .map(|(i, h)| (i, h.clone()))
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::Schema("no feature columns".into()));
    }

    let mut flat: Vec<f64> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    let mut subjects: Vec<i64> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: "-".into(),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: "-".into(),
                message: format!("{} fields, expected {}", record.len(), headers.len()),
            });
        }
        for (col, name) in &feature_cols {
            let cell = &record[*col];
            let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row,
                column: name.clone(),
                message: format!("not a number: {cell:?}"),
            })?;
            flat.push(value);
        }
        let label = encode_label(&record[label_idx]).map_err(|e| Error::Parse {
            row,
            column: label_column.into(),
            message: e.to_string(),
        })?;
        labels.push(label);
        let subject = match subject_idx {
            Some(col) => {
                let cell = &record[col];
                cell.trim().parse().map_err(|_| Error::Parse {
                    row,
                    column: subject_column.into(),
                    message: format!("not an integer: {cell:?}"),
                })?
            }
            None => i as i64,
        };
        subjects.push(subject);
    }
    if labels.is_empty() {
        return Err(Error::Parse {
            row: 0,
            column: "-".into(),
            message: "no data rows".into(),
        });
    }
    let names: Vec<String> = feature_cols.into_iter().map(|(_, h)| h).collect();
    let data = Array2::from_shape_vec((labels.len(), names.len()), flat)
        .map_err(|e| Error::Shape(e.to_string()))?;
    FeatureTable::new(names, data, labels, subjects)
}

/// Write a table as CSV: feature columns, then `y`, then `subject`.
///
/// Values use the shortest round-trip decimal form, so read-back is
/// value-exact.
pub fn write_csv(table: &FeatureTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema(format!("{other:?}")),
    })?;
    let mut header: Vec<&str> = table.column_names.iter().map(|s| s.as_str()).collect();
    header.push(LABEL_COLUMN);
    header.push(SUBJECT_COLUMN);
    let io_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema(format!("{other:?}")),
    };
    writer.write_record(&header).map_err(io_err)?;
    for (i, row) in table.data.rows().into_iter().enumerate() {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(table.labels[i].to_string());
        record.push(table.subjects[i].to_string());
        writer.write_record(&record).map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Per-column standardization statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
    /// True when the column was constant at fit time; such columns pass
    /// through apply unchanged.
    pub degenerate: bool,
}

/// Standardization parameters keyed by column name; serializes as a JSON
/// map `{column: {mean, sd, degenerate}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct ScalerParams {
    pub columns: BTreeMap<String, ColumnStats>,
}

impl ScalerParams {
    pub fn get(&self, name: &str) -> Option<&ColumnStats> {
        self.columns.get(name)
    }

    fn subset(&self, names: &[String]) -> ScalerParams {
        ScalerParams {
            columns: self
                .columns
                .iter()
                .filter(|(name, _)| names.contains(name))
                .map(|(name, stats)| (name.clone(), *stats))
                .collect(),
        }
    }
}

/// Fit per-column mean and population sd on (training) rows.
pub fn standardize_fit(table: &FeatureTable) -> ScalerParams {
    let n = table.n_rows() as f64;
    let mut columns = BTreeMap::new();
    for (j, name) in table.column_names.iter().enumerate() {
        let col = table.data.column(j);
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        columns.insert(
            name.clone(),
            ColumnStats {
                mean,
                sd,
                degenerate: sd == 0.0,
            },
        );
    }
    ScalerParams { columns }
}

/// Apply fitted statistics: z = (x − mean) / sd per column, matched by
/// name. Degenerate (constant-at-fit) columns pass through unchanged.
pub fn standardize_apply(params: &ScalerParams, table: &FeatureTable) -> Result<FeatureTable> {
    if params.columns.len() != table.n_features() {
        return Err(Error::Schema(format!(
            "scaler has {} columns, table has {}",
            params.columns.len(),
            table.n_features()
        )));
    }
    let mut data = table.data.clone();
    for (j, name) in table.column_names.iter().enumerate() {
        let stats = params
            .get(name)
            .ok_or_else(|| Error::Schema(format!("scaler has no column {name:?}")))?;
        if stats.degenerate {
            continue;
        }
        for v in data.column_mut(j).iter_mut() {
            *v = (*v - stats.mean) / stats.sd;
        }
    }
    let mut out = FeatureTable::new(
        table.column_names.clone(),
        data,
        table.labels.clone(),
        table.subjects.clone(),
    )?;
    out.scaler = Some(params.clone());
    Ok(out)
}

/// Downsample the majority class to the minority count.
///
/// Removed rows are drawn uniformly from the majority class under the
/// seed; surviving rows keep their original order. A balanced table
/// passes through with identical membership.
pub fn balance_downsample(table: &FeatureTable, seed: u64) -> Result<FeatureTable> {
    let (zeros, ones) = table.class_counts();
    if zeros == 0 || ones == 0 {
        return Err(Error::Balance(format!(
            "both classes required, got {zeros} of class 0 and {ones} of class 1"
        )));
    }
    if zeros == ones {
        return Ok(table.clone());
    }
    let (majority_label, keep) = if zeros > ones { (0u8, ones) } else { (1u8, zeros) };
    let majority_rows: Vec<usize> = table
        .labels
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == majority_label)
        .map(|(i, _)| i)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = majority_rows;
    shuffled.shuffle(&mut rng);
    let kept_majority: BTreeSet<usize> = shuffled.into_iter().take(keep).collect();
    let rows: Vec<usize> = (0..table.n_rows())
        .filter(|i| table.labels[*i] != majority_label || kept_majority.contains(i))
        .collect();
    table.subset_rows(&rows)
}

/// A subject partition and/or fold assignment over a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_subjects: BTreeSet<i64>,
    pub validation_subjects: BTreeSet<i64>,
    /// Row index → fold in `0..n_folds`; empty for pure subject splits.
    pub fold_assignments: Vec<usize>,
    pub n_folds: usize,
}

impl SplitPlan {
    /// Row indices assigned to `fold`.
    pub fn fold_rows(&self, fold: usize) -> Vec<usize> {
        self.fold_assignments
            .iter()
            .enumerate()
            .filter(|(_, f)| **f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Row indices outside `fold`.
    pub fn complement_rows(&self, fold: usize) -> Vec<usize> {
        self.fold_assignments
            .iter()
            .enumerate()
            .filter(|(_, f)| **f != fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Partition subjects (not rows) into train and validation sets.
///
/// `round(train_fraction × n_subjects)` subjects train; the rest
/// validate. Errors when fewer than two subjects exist or the rounding
/// would leave either side empty.
pub fn subject_split(table: &FeatureTable, train_fraction: f64, seed: u64) -> Result<SplitPlan> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Split(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut subjects = table.unique_subjects();
    if subjects.len() < 2 {
        return Err(Error::Split(format!(
            "need at least 2 subjects, got {}",
            subjects.len()
        )));
    }
    let n_train = (train_fraction * subjects.len() as f64).round() as usize;
    if n_train == 0 || n_train == subjects.len() {
        return Err(Error::Split(format!(
            "fraction {train_fraction} of {} subjects leaves an empty side",
            subjects.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    subjects.shuffle(&mut rng);
    let train_subjects: BTreeSet<i64> = subjects[..n_train].iter().copied().collect();
    let validation_subjects: BTreeSet<i64> = subjects[n_train..].iter().copied().collect();
    Ok(SplitPlan {
        train_subjects,
        validation_subjects,
        fold_assignments: Vec::new(),
        n_folds: 0,
    })
}

/// Shuffle rows and deal them into `k` folds of near-equal size
/// (differing by at most one).
pub fn kfold_partition(table: &FeatureTable, k: usize, seed: u64) -> Result<SplitPlan> {
    let n = table.n_rows();
    if k < 2 {
        return Err(Error::Partition(format!("k must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::Partition(format!("k = {k} exceeds {n} rows")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut fold_assignments = vec![0usize; n];
    let mut cursor = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &row in &order[cursor..cursor + size] {
            fold_assignments[row] = fold;
        }
        cursor += size;
    }
    Ok(SplitPlan {
        train_subjects: BTreeSet::new(),
        validation_subjects: BTreeSet::new(),
        fold_assignments,
        n_folds: k,
    })
}
