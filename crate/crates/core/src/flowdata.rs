//! Flow-record ingestion, cleaning, projection and synthetic generation.
//!
//! Records follow the CSE-CIC-IDS2018 CSV layout: a header row naming every
//! column, one flow per line, and a text label column that is mapped onto the
//! binary classes Benign (0) and Bot (1).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// The four learner-selected features of the botnet subset, in report order.
pub const SELECTED_FEATURES: [&str; 4] = ["Dst Port", "Fwd Pkt Len Mean", "Flow IAT Min", "Fwd IAT Tot"];

pub const DEFAULT_LABEL_COLUMN: &str = "Label";

/// Default fence multiplier for [`remove_outliers`].
pub const DEFAULT_OUTLIER_K: f64 = 1.5;

pub const BENIGN: u8 = 0;
pub const BOT: u8 = 1;

/// Reason keys used in [`DatasetSummary::dropped_reasons`].
pub mod reason {
    pub const UNMAPPED_LABEL: &str = "unmapped_label";
    pub const MISSING_CELL: &str = "missing_cell";
    pub const NON_NUMERIC: &str = "non_numeric";
    pub const NON_FINITE: &str = "non_finite";
    pub const OUTLIER: &str = "outlier";
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowSchema {
    column_names: Vec<String>,
    feature_columns: Vec<String>,
    label_column: String,
}

impl FlowSchema {
    pub fn new(column_names: Vec<String>, feature_columns: Vec<String>, label_column: String) -> Result<Self> {
        if !column_names.contains(&label_column) {
            return Err(Error::InvalidSchema(format!(
                "label column `{label_column}` not among columns"
            )));
        }
        if feature_columns.is_empty() {
            return Err(Error::InvalidSchema("no feature columns".into()));
        }
        let mut seen = HashSet::new();
        for f in &feature_columns {
            if f == &label_column {
                return Err(Error::InvalidSchema(format!("`{f}` is both a feature and the label")));
            }
            if !seen.insert(f.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate feature `{f}`")));
            }
            if !column_names.contains(f) {
                return Err(Error::InvalidSchema(format!("feature `{f}` not among columns")));
            }
        }
        Ok(Self {
            column_names,
            feature_columns,
            label_column,
        })
    }

    /// Schema whose columns are exactly `features` followed by `label`.
    pub fn from_features<S: AsRef<str>>(features: &[S], label: &str) -> Result<Self> {
        let feature_columns: Vec<String> = features.iter().map(|s| s.as_ref().to_string()).collect();
        let mut column_names = feature_columns.clone();
        column_names.push(label.to_string());
        Self::new(column_names, feature_columns, label.to_string())
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn feature_columns(&self) -> &[String] {
        &self.feature_columns
    }

    pub fn label_column(&self) -> &str {
        &self.label_column
    }

    pub fn feature_count(&self) -> usize {
        self.feature_columns.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_columns.iter().position(|f| f == name)
    }
}

/// One network flow.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledRecord {
    pub features: Vec<f64>,
    pub label: u8,
}

impl LabeledRecord {
    pub fn new(features: Vec<f64>, label: u8) -> Self {
        Self { features, label }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetSummary {
    pub total_rows: usize,
    pub rows_per_class: BTreeMap<u8, usize>,
    pub dropped_rows: usize,
    pub dropped_reasons: BTreeMap<String, usize>,
}

impl DatasetSummary {
    fn of(records: &[LabeledRecord]) -> Self {
        let mut summary = Self::default();
        for r in records {
            summary.count_row(r.label);
        }
        summary
    }

    fn count_row(&mut self, label: u8) {
        self.total_rows += 1;
        *self.rows_per_class.entry(label).or_default() += 1;
    }

    fn drop_row(&mut self, reason: &str) {
        self.dropped_rows += 1;
        *self.dropped_reasons.entry(reason.to_string()).or_default() += 1;
    }
}

pub type LabelMap = BTreeMap<String, u8>;

/// `{"Benign" → 0, "Bot" → 1}`.
pub fn default_label_map() -> LabelMap {
    LabelMap::from([("Benign".to_string(), BENIGN), ("Bot".to_string(), BOT)])
}

pub fn load_csv(
    path: &Path,
    schema: &FlowSchema,
    label_map: &LabelMap,
) -> Result<(Vec<LabeledRecord>, DatasetSummary)> {
    let file = File::open(path).map_err(|source| Error::IoFailure {
        path: path.to_path_buf(),
        source,
    })?;
    load_csv_from_reader(file, schema, label_map).map_err(|e| match e {
        Error::Csv(err) if err.is_io_error() => match err.into_kind() {
            csv::ErrorKind::Io(source) => Error::IoFailure {
                path: path.to_path_buf(),
                source,
            },
            _ => unreachable!(),
        },
        other => other,
    })
}

/// Column names from the header row of a CSV file.
pub fn csv_header(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|source| Error::IoFailure {
        path: path.to_path_buf(),
        source,
    })?;
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    Ok(csv.headers()?.iter().map(str::to_string).collect())
}

/// Same as [`load_csv`] over any reader.
pub fn load_csv_from_reader<R: Read>(
    reader: R,
    schema: &FlowSchema,
    label_map: &LabelMap,
) -> Result<(Vec<LabeledRecord>, DatasetSummary)> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: HashMap<String, usize> = csv
        .headers()?
        .iter()
        .enumerate()
        .map(|(i, name)| (name.trim().to_string(), i))
        .collect();
    let lookup = |name: &str| {
        header
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    for name in schema.column_names() {
        lookup(name)?;
    }
    let feature_idx: Vec<usize> = schema
        .feature_columns()
        .iter()
        .map(|f| lookup(f))
        .collect::<Result<_>>()?;
    let label_idx = lookup(schema.label_column())?;

    let mut records = Vec::new();
    let mut summary = DatasetSummary::default();
    let mut row = csv::StringRecord::new();
    'rows: while csv.read_record(&mut row)? {
        let label = match row.get(label_idx) {
            None | Some("") => {
                summary.drop_row(reason::MISSING_CELL);
                continue;
            }
            Some(text) => match label_map.get(text) {
                Some(&label) => label,
                None => {
                    summary.drop_row(reason::UNMAPPED_LABEL);
                    continue;
                }
            },
        };
        let mut features = Vec::with_capacity(feature_idx.len());
        for &i in &feature_idx {
            let cell = match row.get(i) {
                None | Some("") => {
                    summary.drop_row(reason::MISSING_CELL);
                    continue 'rows;
                }
                Some(cell) => cell,
            };
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => features.push(v),
                Ok(_) => {
                    summary.drop_row(reason::NON_FINITE);
                    continue 'rows;
                }
                Err(_) => {
                    summary.drop_row(reason::NON_NUMERIC);
                    continue 'rows;
                }
            }
        }
        summary.count_row(label);
        records.push(LabeledRecord { features, label });
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok((records, summary))
}

/// Drops non-finite rows, then rows with any feature outside the per-class
/// fence `[Q1 - k*IQR, Q3 + k*IQR]`.
///
/// Quartiles use linear interpolation between order statistics. A zero IQR
/// collapses the fence to `[Q1, Q3]`. One pass; relative order is kept.
pub fn remove_outliers(records: Vec<LabeledRecord>, k: f64) -> Result<(Vec<LabeledRecord>, DatasetSummary)> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "outlier multiplier must be finite and non-negative, got {k}"
        )));
    }
    let mut summary = DatasetSummary::default();
    let mut finite = Vec::with_capacity(records.len());
    for r in records {
        if r.features.iter().all(|v| v.is_finite()) {
            finite.push(r);
        } else {
            summary.drop_row(reason::NON_FINITE);
        }
    }

    let width = finite.first().map_or(0, |r| r.features.len());
    let mut fences: BTreeMap<u8, Vec<(f64, f64)>> = BTreeMap::new();
    let mut classes: Vec<u8> = finite.iter().map(|r| r.label).collect();
    classes.sort_unstable();
    classes.dedup();
    for class in classes {
        let bounds = (0..width)
            .map(|j| {
                let mut column: Vec<f64> = finite
                    .iter()
                    .filter(|r| r.label == class)
                    .map(|r| r.features[j])
                    .collect();
                column.sort_by(f64::total_cmp);
                let q1 = quantile_sorted(&column, 0.25);
                let q3 = quantile_sorted(&column, 0.75);
                let iqr = q3 - q1;
                (q1 - k * iqr, q3 + k * iqr)
            })
            .collect();
        fences.insert(class, bounds);
    }

    let mut kept = Vec::with_capacity(finite.len());
    for r in finite {
        let bounds = &fences[&r.label];
        let inside = r.features.iter().zip(bounds).all(|(v, (lo, hi))| v >= lo && v <= hi);
        if inside {
            summary.count_row(r.label);
            kept.push(r);
        } else {
            summary.drop_row(reason::OUTLIER);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok((kept, summary))
}

/// Linear-interpolation quantile of an ascending slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub fn project_features<S: AsRef<str>>(
    records: &[LabeledRecord],
    keep: &[S],
    schema: &FlowSchema,
) -> Result<(Vec<LabeledRecord>, FlowSchema)> {
    let idx: Vec<usize> = keep
        .iter()
        .map(|name| {
            schema
                .feature_index(name.as_ref())
                .ok_or_else(|| Error::UnknownFeature(name.as_ref().to_string()))
        })
        .collect::<Result<_>>()?;
    let projected_schema = FlowSchema::from_features(keep, schema.label_column())?;
    let projected = records
        .iter()
        .map(|r| LabeledRecord {
            features: idx.iter().map(|&i| r.features[i]).collect(),
            label: r.label,
        })
        .collect();
    Ok((projected, projected_schema))
}

/// Per-feature scale applied to the informative synthetic features, so the
/// raw columns span several orders of magnitude like real flow counters.
const SYNTHETIC_SCALES: [f64; 4] = [1500.0, 60.0, 2.0e4, 5.0e5];

/// Class-mean separation of informative features, in component std units.
const CLASS_SEPARATION: f64 = 3.0;
const COMPONENT_OFFSET: f64 = 0.5;

/// Seeded stand-in for the botnet subset.
///
/// Each informative feature is drawn in latent units from a two-component
/// Gaussian mixture per class (components at `3*label ± 0.5`, unit std),
/// clipped at zero and scaled. Noise features are standard normal for both
/// classes. Exactly `round(class_ratio * n_rows)` rows are Bot, placed by a
/// seeded shuffle.
pub fn generate_synthetic(
    n_rows: usize,
    n_noise_features: usize,
    class_ratio: f64,
    seed: u64,
) -> Result<(Vec<LabeledRecord>, FlowSchema)> {
    if !(class_ratio > 0.0 && class_ratio < 1.0) {
        return Err(Error::InvalidRatio(class_ratio));
    }
    if n_rows < 10 {
        return Err(Error::InvalidConfig(format!(
            "synthetic data needs at least 10 rows, got {n_rows}"
        )));
    }
    let mut names: Vec<String> = SELECTED_FEATURES.iter().map(|s| s.to_string()).collect();
    names.extend((1..=n_noise_features).map(|i| format!("Noise {i}")));
    let schema = FlowSchema::from_features(&names, DEFAULT_LABEL_COLUMN)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_bot = (class_ratio * n_rows as f64).round() as usize;
    let mut labels = vec![BENIGN; n_rows];
    labels[..n_bot].fill(BOT);
    labels.shuffle(&mut rng);

    let records = labels
        .into_iter()
        .map(|label| {
            let mut features = Vec::with_capacity(names.len());
            for (j, scale) in SYNTHETIC_SCALES.iter().enumerate() {
                let component = if rng.random::<bool>() {
                    COMPONENT_OFFSET
                } else {
                    -COMPONENT_OFFSET
                };
                let noise: f64 = StandardNormal.sample(&mut rng);
                let latent = CLASS_SEPARATION * f64::from(label) + component + noise;
                let mut value = latent.max(0.0) * scale;
                if j == 0 {
                    value = value.round();
                }
                features.push(value);
            }
            for _ in 0..n_noise_features {
                features.push(StandardNormal.sample(&mut rng));
            }
            LabeledRecord { features, label }
        })
        .collect();
    Ok((records, schema))
}

pub fn summarize(records: &[LabeledRecord]) -> DatasetSummary {
    DatasetSummary::of(records)
}

/// Writes records as CSV in the ingestion format. Labels are rendered through
/// the inverse of `label_map`.
pub fn write_csv<W: Write>(
    writer: W,
    records: &[LabeledRecord],
    schema: &FlowSchema,
    label_map: &LabelMap,
) -> Result<()> {
    let names: BTreeMap<u8, &str> = label_map.iter().map(|(k, &v)| (v, k.as_str())).collect();
    let mut out = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = schema.feature_columns().iter().map(String::as_str).collect();
    header.push(schema.label_column());
    out.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for r in records {
        row.clear();
        row.extend(r.features.iter().map(|v| v.to_string()));
        let label = names
            .get(&r.label)
            .map_or_else(|| r.label.to_string(), |s| s.to_string());
        row.push(label);
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
