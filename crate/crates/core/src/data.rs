//! Dataset ingestion, binary-task construction and synthetic data.
//!
//! Input files are delimited text with a required header row. Rows with an
//! empty cell are dropped (and counted); any other non-numeric feature
//! cell is an error with its line number. Class labels come either from a
//! label column (`iris`/`generic` schemas, ids assigned by first
//! appearance) or by binning an `ETo` target column (`agri` schema).
//!
//! Binary tasks pair two source classes: the first-listed class becomes
//! label 0, the second label 1. Each task carries a seeded, stratified
//! 80:20-style shuffle split so a run can be replayed exactly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: non-numeric value '{value}' in column '{column}'")]
    NonNumeric {
        line: u64,
        value: String,
        column: String,
    },
    #[error("label column '{0}' not found in header")]
    UnknownLabelColumn(String),
    #[error("feature column '{0}' not found in header")]
    UnknownFeatureColumn(String),
    #[error("no usable data rows after ingestion")]
    EmptyDataset,
    #[error("dataset needs at least one feature column")]
    NoFeatures,
    #[error("ETo value must be finite")]
    NonFiniteEto,
    #[error("class id {0} not present in dataset")]
    UnknownClass(u32),
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    BadRatio(f64),
    #[error("n_per_class must be >= 1")]
    EmptySynth,
}

/// How a file's columns map to features and labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schema {
    /// Species label column (default `species`), all other columns numeric
    /// features.
    Iris,
    /// Weather features plus an `ETo` column, binned into three classes.
    Agri,
    /// Last column (or `--label-column`) is the label, the rest features.
    Generic,
}

impl FromStr for Schema {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "iris" => Ok(Schema::Iris),
            "agri" => Ok(Schema::Agri),
            "generic" => Ok(Schema::Generic),
            other => Err(format!(
                "unknown schema '{other}' (expected iris, agri or generic)"
            )),
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Schema::Iris => "iris",
            Schema::Agri => "agri",
            Schema::Generic => "generic",
        })
    }
}

/// Which side of a task's split to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}' (expected train or test)")),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// Ingestion options; `None` fields fall back to the schema defaults.
#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub schema: Schema,
    pub delimiter: u8,
    pub label_column: Option<String>,
    pub feature_columns: Option<Vec<String>>,
}

impl CsvOptions {
    pub fn new(schema: Schema) -> Self {
        Self {
            schema,
            delimiter: b',',
            label_column: None,
            feature_columns: None,
        }
    }
}

/// Feature columns used for the agri schema unless overridden.
pub const AGRI_DEFAULT_FEATURES: [&str; 6] = ["Tmin", "Tmax", "RH", "u2", "Is", "Rs"];

/// A fully ingested dataset: numeric feature rows plus integer class ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    pub source: String,
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
    pub class_names: BTreeMap<u32, String>,
    /// Rows dropped during ingestion because of missing fields.
    pub dropped_rows: usize,
    /// Raw target column (e.g. ETo) when labels were derived by binning.
    pub target: Option<Vec<f64>>,
    pub target_name: Option<String>,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn class_counts(&self) -> BTreeMap<u32, usize> {
        let mut counts = BTreeMap::new();
        for &label in &self.labels {
            *counts.entry(label).or_insert(0) += 1;
        }
        counts
    }

    /// Renders the dataset back to CSV (features plus the target or label
    /// column), so prepared inputs can be re-ingested bit for bit.
    pub fn to_csv(&self) -> String {
        let label_header = self
            .target_name
            .clone()
            .unwrap_or_else(|| "label".to_string());
        let mut out = String::new();
        out.push_str(&self.feature_names.join(","));
        out.push(',');
        out.push_str(&label_header);
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            for value in row {
                out.push_str(&format!("{value},"));
            }
            match &self.target {
                Some(target) => out.push_str(&format!("{}", target[i])),
                None => out.push_str(
                    self.class_names
                        .get(&self.labels[i])
                        .map(String::as_str)
                        .unwrap_or("?"),
                ),
            }
            out.push('\n');
        }
        out
    }
}

/// Loads a delimited text file per the schema rules.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<RawDataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let source = match options.schema {
        Schema::Iris => "iris".to_string(),
        Schema::Agri => "agri".to_string(),
        Schema::Generic => path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "data".to_string()),
    };
    load_csv_reader(file, options, &source)
}

/// Reader-based variant of [`load_csv`]; `source` tags the dataset and
/// prefixes task names.
pub fn load_csv_reader<R: Read>(
    reader: R,
    options: &CsvOptions,
    source: &str,
) -> Result<RawDataset, DataError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = csv_reader
        .headers()?
        .iter()
        .map(|h| h.to_string())
        .collect();

    let label_idx = resolve_label_column(&headers, options)?;
    let label_name = headers[label_idx].clone();
    let feature_idx: Vec<usize> = match &options.feature_columns {
        Some(wanted) => wanted
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h.eq_ignore_ascii_case(name))
                    .ok_or_else(|| DataError::UnknownFeatureColumn(name.clone()))
            })
            .collect::<Result<_, _>>()?,
        None => match options.schema {
            Schema::Agri => AGRI_DEFAULT_FEATURES
                .iter()
                .map(|name| {
                    headers
                        .iter()
                        .position(|h| h.eq_ignore_ascii_case(name))
                        .ok_or_else(|| DataError::UnknownFeatureColumn(name.to_string()))
                })
                .collect::<Result<_, _>>()?,
            _ => (0..headers.len()).filter(|&i| i != label_idx).collect(),
        },
    };
    if feature_idx.is_empty() {
        return Err(DataError::NoFeatures);
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: BTreeMap<u32, String> = BTreeMap::new();
    let mut name_to_id: BTreeMap<String, u32> = BTreeMap::new();
    let mut dropped_rows = 0usize;
    let mut target = Vec::new();

    for record in csv_reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let cells: Vec<&str> = feature_idx
            .iter()
            .chain(std::iter::once(&label_idx))
            .map(|&i| record.get(i).unwrap_or(""))
            .collect();
        if cells.iter().any(|c| c.is_empty()) {
            dropped_rows += 1;
            continue;
        }
        let mut row = Vec::with_capacity(feature_idx.len());
        for (&col, &cell) in feature_idx.iter().zip(&cells) {
            let value: f64 = cell.parse().map_err(|_| DataError::NonNumeric {
                line,
                value: cell.to_string(),
                column: headers[col].clone(),
            })?;
            row.push(value);
        }
        let label_cell = cells[cells.len() - 1];
        let label = match options.schema {
            Schema::Agri => {
                let eto: f64 = label_cell.parse().map_err(|_| DataError::NonNumeric {
                    line,
                    value: label_cell.to_string(),
                    column: label_name.clone(),
                })?;
                let bin = bin_eto(eto)?;
                class_names.insert(bin.class_id(), bin.label().to_string());
                target.push(eto);
                bin.class_id()
            }
            _ => {
                let next_id = name_to_id.len() as u32 + 1;
                let id = *name_to_id
                    .entry(label_cell.to_string())
                    .or_insert_with(|| {
                        class_names.insert(next_id, label_cell.to_string());
                        next_id
                    });
                id
            }
        };
        rows.push(row);
        labels.push(label);
    }

    if rows.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let is_agri = options.schema == Schema::Agri;
    Ok(RawDataset {
        source: source.to_string(),
        feature_names: feature_idx.iter().map(|&i| headers[i].clone()).collect(),
        rows,
        labels,
        class_names,
        dropped_rows,
        target: is_agri.then_some(target),
        target_name: is_agri.then_some(label_name),
    })
}

fn resolve_label_column(headers: &[String], options: &CsvOptions) -> Result<usize, DataError> {
    if let Some(name) = &options.label_column {
        return headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| DataError::UnknownLabelColumn(name.clone()));
    }
    match options.schema {
        Schema::Iris => Ok(headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case("species"))
            .unwrap_or(headers.len() - 1)),
        Schema::Agri => headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case("ETo"))
            .ok_or_else(|| DataError::UnknownLabelColumn("ETo".to_string())),
        Schema::Generic => Ok(headers.len() - 1),
    }
}

/// ETo category: `[0, 2)` is LOW, `[2, 4)` MEDIUM, `[4, 6]` HIGH.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EtoBin {
    Low,
    Medium,
    High,
}

impl EtoBin {
    pub fn class_id(&self) -> u32 {
        match self {
            EtoBin::Low => 1,
            EtoBin::Medium => 2,
            EtoBin::High => 3,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EtoBin::Low => "LOW",
            EtoBin::Medium => "MEDIUM",
            EtoBin::High => "HIGH",
        }
    }

    /// The half-open ETo range the bin covers (upper edge 6 for HIGH).
    pub fn range(&self) -> (f64, f64) {
        match self {
            EtoBin::Low => (0.0, 2.0),
            EtoBin::Medium => (2.0, 4.0),
            EtoBin::High => (4.0, 6.0),
        }
    }
}

/// Total, monotone binning of an ETo value in mm; values outside `[0, 6]`
/// are clamped with a warning.
pub fn bin_eto(eto: f64) -> Result<EtoBin, DataError> {
    if !eto.is_finite() {
        return Err(DataError::NonFiniteEto);
    }
    let clamped = eto.clamp(0.0, 6.0);
    if clamped != eto {
        log::warn!("ETo value {eto} outside [0, 6]; clamped to {clamped}");
    }
    Ok(if clamped < 2.0 {
        EtoBin::Low
    } else if clamped < 4.0 {
        EtoBin::Medium
    } else {
        EtoBin::High
    })
}

/// One binary classification task carved out of a dataset, with its
/// deterministic train/test split. Serializes as the task manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryTask {
    pub name: String,
    /// Source class encoded as label 0 (the first of the pair).
    pub negative_class: u32,
    /// Source class encoded as label 1 (the second of the pair).
    pub positive_class: u32,
    pub negative_name: String,
    pub positive_name: String,
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    /// Root seed the split was drawn from.
    pub seed: u64,
}

impl BinaryTask {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn indices(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train_idx,
            Split::Test => &self.test_idx,
        }
    }

    /// `(row, label)` pairs of one split, in index order.
    pub fn split_samples(&self, split: Split) -> impl Iterator<Item = (&[f64], u8)> {
        self.indices(split)
            .iter()
            .map(|&i| (self.rows[i].as_slice(), self.labels[i]))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("task serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Builds one task per class pair `(negative, positive)` with a seeded,
/// stratified shuffle split at `ratio`; identical seeds give identical
/// splits. Tasks are named `{source}{1-based index}`.
pub fn make_pairwise_tasks(
    data: &RawDataset,
    pairs: &[(u32, u32)],
    ratio: f64,
    seed: u64,
) -> Result<Vec<BinaryTask>, DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::BadRatio(ratio));
    }
    let counts = data.class_counts();
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut tasks = Vec::with_capacity(pairs.len());
    for (task_no, &(neg, pos)) in pairs.iter().enumerate() {
        for class in [neg, pos] {
            if !counts.contains_key(&class) {
                return Err(DataError::UnknownClass(class));
            }
        }
        let mut rows = Vec::new();
        let mut labels: Vec<u8> = Vec::new();
        for (row, &label) in data.rows.iter().zip(&data.labels) {
            if label == neg || label == pos {
                rows.push(row.clone());
                labels.push(u8::from(label == pos));
            }
        }
        let task_seed = master.gen::<u64>();
        let (train_idx, test_idx) = stratified_split(&labels, ratio, task_seed);
        let unknown = || "?".to_string();
        tasks.push(BinaryTask {
            name: format!("{}{}", data.source, task_no + 1),
            negative_class: neg,
            positive_class: pos,
            negative_name: data.class_names.get(&neg).cloned().unwrap_or_else(unknown),
            positive_name: data.class_names.get(&pos).cloned().unwrap_or_else(unknown),
            feature_names: data.feature_names.clone(),
            rows,
            labels,
            train_idx,
            test_idx,
            seed,
        });
    }
    Ok(tasks)
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Seeded stratified split: the overall train size is
/// `round_half_up(ratio·n)` and each class contributes within one sample
/// of its stratified ideal.
fn stratified_split(labels: &[u8], ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n = labels.len();
    let total_train = round_half_up(ratio * n as f64);
    let classes: Vec<u8> = {
        let mut c: Vec<u8> = labels.to_vec();
        c.sort_unstable();
        c.dedup();
        c
    };
    let mut per_class: Vec<(Vec<usize>, f64, usize)> = classes
        .iter()
        .map(|&class| {
            let idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
            let ideal = ratio * idx.len() as f64;
            let take = round_half_up(ideal).min(idx.len());
            (idx, ideal, take)
        })
        .collect();

    // nudge the per-class takes until they sum to the overall target,
    // each staying within one of its ideal
    loop {
        let sum: usize = per_class.iter().map(|(_, _, t)| *t).sum();
        if sum == total_train {
            break;
        }
        if sum > total_train {
            let victim = per_class
                .iter_mut()
                .filter(|(_, _, t)| *t > 0)
                .max_by(|a, b| (a.2 as f64 - a.1).partial_cmp(&(b.2 as f64 - b.1)).unwrap())
                .expect("some class can shrink");
            victim.2 -= 1;
        } else {
            let victim = per_class
                .iter_mut()
                .filter(|(idx, _, t)| *t < idx.len())
                .min_by(|a, b| (a.2 as f64 - a.1).partial_cmp(&(b.2 as f64 - b.1)).unwrap())
                .expect("some class can grow");
            victim.2 += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(total_train);
    let mut test = Vec::with_capacity(n - total_train);
    for (mut idx, _, take) in per_class {
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..take]);
        test.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Per-feature generator parameters for the synthetic weather data:
/// `(name, mean, sd, min, max, direction)`, where `direction` is the sign
/// of the feature's association with the ETo class.
const AGRI_FEATURE_TABLE: [(&str, f64, f64, f64, f64, f64); 6] = [
    ("Tmin", 18.71, 7.50, 2.3, 30.7, 1.0),
    ("Tmax", 30.39, 7.10, 9.8, 44.4, 1.0),
    ("RH", 73.30, 17.64, 0.0, 100.0, -1.0),
    ("u2", 3.23, 2.18, 0.0, 16.0, 1.0),
    ("Is", 6.24, 3.53, 0.0, 12.2, 1.0),
    ("Rs", 16.15, 6.14, 4.9, 28.2, 1.0),
];

/// Class-mean offset in units of one feature SD per class step.
const AGRI_CLASS_SHIFT: f64 = 1.5;

/// Generates a synthetic three-class weather dataset shaped like the agri
/// schema: per class, features are drawn from truncated Gaussians around
/// class-shifted means (LOW/MEDIUM/HIGH at −1/0/+1 shift steps), and the
/// ETo target is drawn inside the class's bin. Deterministic per seed.
pub fn synth_agri(
    n_per_class: usize,
    seed: u64,
    noise_sigma: f64,
) -> Result<RawDataset, DataError> {
    if n_per_class == 0 {
        return Err(DataError::EmptySynth);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(3 * n_per_class);
    let mut labels = Vec::with_capacity(3 * n_per_class);
    let mut target = Vec::with_capacity(3 * n_per_class);
    let mut class_names = BTreeMap::new();

    for bin in [EtoBin::Low, EtoBin::Medium, EtoBin::High] {
        class_names.insert(bin.class_id(), bin.label().to_string());
        let delta = bin.class_id() as f64 - 2.0; // −1, 0, +1
        for _ in 0..n_per_class {
            let mut row = Vec::with_capacity(AGRI_FEATURE_TABLE.len());
            for &(_, mean, sd, min, max, direction) in &AGRI_FEATURE_TABLE {
                let center = (mean + direction * delta * AGRI_CLASS_SHIFT * sd).clamp(min, max);
                row.push(truncated_gaussian(
                    &mut rng,
                    center,
                    noise_sigma * sd,
                    min,
                    max,
                ));
            }
            let (lo, hi) = bin.range();
            // stay off the bin edges so re-binning is unambiguous
            let eto = rng.gen_range(lo + 0.1..hi - 0.1);
            rows.push(row);
            labels.push(bin.class_id());
            target.push(eto);
        }
    }

    Ok(RawDataset {
        source: "agri".to_string(),
        feature_names: AGRI_FEATURE_TABLE
            .iter()
            .map(|(name, ..)| name.to_string())
            .collect(),
        rows,
        labels,
        class_names,
        dropped_rows: 0,
        target: Some(target),
        target_name: Some("ETo".to_string()),
    })
}

fn truncated_gaussian(rng: &mut ChaCha8Rng, center: f64, sd: f64, min: f64, max: f64) -> f64 {
    if sd == 0.0 {
        return center;
    }
    for _ in 0..64 {
        let z: f64 = rng.sample(StandardNormal);
        let value = center + sd * z;
        if (min..=max).contains(&value) {
            return value;
        }
    }
    center.clamp(min, max)
}

/// Test fixture: the bundled Iris file, shared by other modules' tests.
#[cfg(test)]
pub(crate) fn load_iris_fixture() -> RawDataset {
    let path = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv");
    load_csv(path, &CsvOptions::new(Schema::Iris)).expect("bundled iris data loads")
}
