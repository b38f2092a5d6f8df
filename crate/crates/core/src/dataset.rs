//! Tabular classification data: CSV ingestion, label encoding, missing-value
//! handling, z-score normalization, stratified splits and folds.
//!
//! A [`Dataset`] is immutable once built. Every transformation returns a new
//! value, and every random choice is driven by an explicit seed.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense feature matrix with integer class labels.
///
/// Features are stored row-major. `original_index` records where each row sat
/// in the dataset it was first loaded from, so splits can be undone.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    class_names: Vec<String>,
    feature_names: Vec<String>,
    source_id: String,
    original_index: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset from rows, validating shape, labels and finiteness.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut features = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Parse {
                    row: i + 1,
                    message: format!("expected {} features, found {}", d, row.len()),
                });
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(features, d, labels, class_names)
    }

    /// Builds a dataset from a row-major feature buffer.
    pub fn from_flat(features: Vec<f64>, n_features: usize, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if let Some(v) = features.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite feature value {v}")));
        }
        Self::build(features, n_features, labels, class_names)
    }

    fn build(features: Vec<f64>, n_features: usize, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::validation("dataset has no samples"));
        }
        if n_features == 0 {
            return Err(Error::validation("dataset has no feature columns"));
        }
        if features.len() != n * n_features {
            return Err(Error::DimensionMismatch { expected: n * n_features, got: features.len() });
        }
        let n_classes = class_names.len();
        if n_classes < 2 {
            return Err(Error::validation(format!("need at least 2 classes, found {n_classes}")));
        }
        let mut seen = vec![false; n_classes];
        for &y in &labels {
            if y >= n_classes {
                return Err(Error::validation(format!("label {y} out of range for {n_classes} classes")));
            }
            seen[y] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::validation(format!("class '{}' has no samples", class_names[c])));
        }
        Ok(Dataset {
            feature_names: (0..n_features).map(|j| format!("x{j}")).collect(),
            features,
            n_features,
            labels,
            class_names,
            source_id: String::new(),
            original_index: (0..n).collect(),
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        Error::check_dim(self.n_features, names.len())?;
        self.feature_names = names;
        Ok(self)
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features)
    }

    /// Row-major feature buffer.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn original_index(&self) -> &[usize] {
        &self.original_index
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// True when the dataset still carries NaN placeholders from an
    /// impute-policy load.
    pub fn has_missing(&self) -> bool {
        self.features.iter().any(|v| v.is_nan())
    }

    /// Rows at `indices`, in the given order. Class names are kept even if a
    /// class ends up without samples in the subset.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            features,
            n_features: self.n_features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            feature_names: self.feature_names.clone(),
            source_id: self.source_id.clone(),
            original_index: indices.iter().map(|&i| self.original_index[i]).collect(),
        }
    }

    /// Same labels and metadata, new feature values.
    pub(crate) fn with_features(&self, features: Vec<f64>) -> Dataset {
        debug_assert_eq!(features.len(), self.features.len());
        Dataset { features, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Rows containing the missing marker are removed.
    #[default]
    Drop,
    /// Missing cells are kept as NaN and filled later by [`ClassMedianImputer`]
    /// fitted on the training portion.
    ImputeClassMedian,
}

/// Column roles and dialect for [`load_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    /// Label column index; negative values count from the end (-1 = last).
    pub label_column: isize,
    pub missing_marker: String,
    pub missing_policy: MissingPolicy,
    pub delimiter: u8,
    /// Columns ignored entirely (ids, names).
    pub drop_columns: Vec<usize>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            label_column: -1,
            missing_marker: "?".to_string(),
            missing_policy: MissingPolicy::Drop,
            delimiter: b',',
            drop_columns: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub dropped_rows: usize,
    pub had_header: bool,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LoadedCsv> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_csv(&text, &id, schema)
}

/// Parses CSV text. Labels are encoded in order of first appearance; a first
/// row whose feature cells are not all numeric is taken as a header.
pub fn parse_csv(text: &str, source_id: &str, schema: &CsvSchema) -> Result<LoadedCsv> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(schema.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(Error::validation(format!("{source_id}: file contains no rows")));
    }

    let n_cols = records[0].1.len();
    let label_col = if schema.label_column < 0 {
        n_cols as isize + schema.label_column
    } else {
        schema.label_column
    };
    if label_col < 0 || label_col as usize >= n_cols {
        return Err(Error::Config(format!("label column {} out of range for {n_cols} columns", schema.label_column)));
    }
    let label_col = label_col as usize;
    if schema.drop_columns.contains(&label_col) {
        return Err(Error::Config("label column is listed in drop_columns".into()));
    }
    let feature_cols: Vec<usize> = (0..n_cols)
        .filter(|c| *c != label_col && !schema.drop_columns.contains(c))
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::validation(format!("{source_id}: no feature columns")));
    }

    let is_header = feature_cols.iter().any(|&c| {
        let cell = &records[0].1[c];
        cell != schema.missing_marker && cell.parse::<f64>().is_err()
    });
    let feature_names: Vec<String> = if is_header {
        feature_cols.iter().map(|&c| records[0].1[c].to_string()).collect()
    } else {
        feature_cols.iter().map(|c| format!("x{c}")).collect()
    };
    let body = if is_header { &records[1..] } else { &records[..] };

    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let mut features = Vec::with_capacity(body.len() * feature_cols.len());
    let mut labels = Vec::with_capacity(body.len());
    let mut dropped = 0;

    for (line, rec) in body {
        if rec.len() != n_cols {
            return Err(Error::Parse {
                row: *line,
                message: format!("expected {n_cols} fields, found {}", rec.len()),
            });
        }
        let label = &rec[label_col];
        if label == schema.missing_marker {
            dropped += 1;
            continue;
        }
        let mut row = Vec::with_capacity(feature_cols.len());
        let mut missing = false;
        for &c in &feature_cols {
            let cell = &rec[c];
            if cell == schema.missing_marker {
                missing = true;
                row.push(f64::NAN);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(Error::Parse {
                        row: *line,
                        message: format!("column {c}: non-numeric feature value '{cell}'"),
                    })
                }
            }
        }
        if missing && schema.missing_policy == MissingPolicy::Drop {
            dropped += 1;
            continue;
        }
        let next = class_names.len();
        let y = *class_index.entry(label.to_string()).or_insert_with(|| {
            class_names.push(label.to_string());
            next
        });
        features.extend(row);
        labels.push(y);
    }

    if labels.is_empty() {
        return Err(Error::validation(format!("{source_id}: no usable rows")));
    }
    if class_names.len() < 2 {
        return Err(Error::validation(format!("{source_id}: only one class present")));
    }
    let dataset = Dataset::build(features, feature_cols.len(), labels, class_names)?
        .with_feature_names(feature_names)?
        .with_source_id(source_id);
    Ok(LoadedCsv { dataset, dropped_rows: dropped, had_header: is_header })
}

/// Fills NaN cells. Training rows use the median of their own class; rows
/// whose label must not be consulted use the median over all training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMedianImputer {
    pub class_medians: Vec<Vec<f64>>,
    pub global_medians: Vec<f64>,
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[m] } else { 0.5 * (values[m - 1] + values[m]) })
}

impl ClassMedianImputer {
    pub fn fit(train: &Dataset) -> Self {
        let d = train.n_features();
        let global: Vec<f64> = (0..d)
            .map(|j| median(train.rows().map(|r| r[j]).filter(|v| !v.is_nan()).collect()).unwrap_or(0.0))
            .collect();
        let class_medians = (0..train.n_classes())
            .map(|c| {
                (0..d)
                    .map(|j| {
                        let vals = train
                            .rows()
                            .zip(train.labels())
                            .filter(|(_, &y)| y == c)
                            .map(|(r, _)| r[j])
                            .filter(|v| !v.is_nan())
                            .collect();
                        median(vals).unwrap_or(global[j])
                    })
                    .collect()
            })
            .collect();
        ClassMedianImputer { class_medians, global_medians: global }
    }

    pub fn apply_labeled(&self, data: &Dataset) -> Result<Dataset> {
        Error::check_dim(self.global_medians.len(), data.n_features())?;
        let d = data.n_features();
        let mut out = data.features().to_vec();
        for (i, row) in out.chunks_exact_mut(d).enumerate() {
            let fill = &self.class_medians[data.label(i)];
            for (v, f) in row.iter_mut().zip(fill) {
                if v.is_nan() {
                    *v = *f;
                }
            }
        }
        Ok(data.with_features(out))
    }

    pub fn apply_unlabeled(&self, data: &Dataset) -> Result<Dataset> {
        Error::check_dim(self.global_medians.len(), data.n_features())?;
        let mut out = data.features().to_vec();
        for row in out.chunks_exact_mut(data.n_features()) {
            for (v, f) in row.iter_mut().zip(&self.global_medians) {
                if v.is_nan() {
                    *v = *f;
                }
            }
        }
        Ok(data.with_features(out))
    }
}

/// Per-feature z-score parameters, fitted on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for constant columns.
    pub std: Vec<f64>,
}

pub fn fit_normalizer(train: &Dataset) -> Result<NormalizationParams> {
    if train.has_missing() {
        return Err(Error::validation("cannot fit normalizer on data with missing values; impute first"));
    }
    let n = train.n_samples() as f64;
    let d = train.n_features();
    let mut mean = vec![0.0; d];
    let mut std = vec![1.0; d];
    for j in 0..d {
        let first = train.row(0)[j];
        if train.rows().all(|r| r[j] == first) {
            mean[j] = first;
            continue;
        }
        let m = train.rows().map(|r| r[j]).sum::<f64>() / n;
        let var = train.rows().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
        mean[j] = m;
        if var.sqrt() > 0.0 {
            std[j] = var.sqrt();
        }
    }
    Ok(NormalizationParams { mean, std })
}

pub fn apply_normalizer(params: &NormalizationParams, data: &Dataset) -> Result<Dataset> {
    Error::check_dim(params.mean.len(), data.n_features())?;
    let d = data.n_features();
    let mut out = data.features().to_vec();
    for row in out.chunks_exact_mut(d) {
        for ((v, m), s) in row.iter_mut().zip(&params.mean).zip(&params.std) {
            *v = (*v - m) / s;
        }
    }
    Ok(data.with_features(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { test_fraction: 0.3, seed: 42, stratified: true }
    }
}

/// Train/test partition plus the row indices (into the split input) of each side.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

fn test_count(total: usize, fraction: f64) -> usize {
    ((total as f64 * fraction).round() as usize).clamp(1, total - 1)
}

pub fn split_stratified(data: &Dataset, spec: &SplitSpec) -> Result<Split> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::Config(format!("test_fraction {} not in (0,1)", spec.test_fraction)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut test = Vec::new();
    if spec.stratified {
        for (c, members) in class_members(data).into_iter().enumerate() {
            if members.len() < 2 {
                return Err(Error::validation(format!(
                    "class '{}' has {} sample(s); a stratified split needs at least 2",
                    data.class_names()[c],
                    members.len()
                )));
            }
            let mut members = members;
            members.shuffle(&mut rng);
            test.extend_from_slice(&members[..test_count(members.len(), spec.test_fraction)]);
        }
    } else {
        let n = data.n_samples();
        if n < 2 {
            return Err(Error::validation("need at least 2 samples to split"));
        }
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        test.extend_from_slice(&all[..test_count(n, spec.test_fraction)]);
    }
    test.sort_unstable();
    let mut is_test = vec![false; data.n_samples()];
    for &i in &test {
        is_test[i] = true;
    }
    let train: Vec<usize> = (0..data.n_samples()).filter(|&i| !is_test[i]).collect();
    Ok(Split {
        train: data.select(&train),
        test: data.select(&test),
        train_indices: train,
        test_indices: test,
    })
}

fn class_members(data: &Dataset) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); data.n_classes()];
    for (i, &y) in data.labels().iter().enumerate() {
        members[y].push(i);
    }
    members
}

/// Index sets of one cross-validation fold (both sorted ascending).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k-fold partition. Each class is shuffled and dealt round-robin,
/// continuing the deal across classes so fold sizes differ by at most one.
pub fn kfold(data: &Dataset, k_folds: usize, seed: u64) -> Result<Vec<Fold>> {
    let counts = data.class_counts();
    let smallest = counts.iter().copied().filter(|&c| c > 0).min().unwrap_or(0);
    if k_folds < 2 || k_folds > smallest {
        return Err(Error::validation(format!(
            "k_folds = {k_folds} must lie in [2, {smallest}] (smallest class size)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; data.n_samples()];
    let mut dealt = 0;
    for mut members in class_members(data) {
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = dealt % k_folds;
            dealt += 1;
        }
    }
    Ok((0..k_folds)
        .map(|f| {
            let (validation, train) = (0..data.n_samples()).partition(|&i| fold_of[i] == f);
            Fold { train, validation }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class(n_per: usize) -> Dataset {
        let rows = (0..2 * n_per).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let labels = (0..2 * n_per).map(|i| i % 2).collect();
        Dataset::from_rows(rows, labels, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn labels_encoded_by_first_appearance() {
        let loaded = parse_csv("1,2,a\n3,4,b\n5,6,a\n", "t", &CsvSchema::default()).unwrap();
        assert_eq!(loaded.dataset.labels(), &[0, 1, 0]);
        assert_eq!(loaded.dataset.n_classes(), 2);
        assert_eq!(loaded.dataset.class_names(), &["a".to_string(), "b".to_string()]);
        assert!(!loaded.had_header);
    }

    #[test]
    fn first_appearance_is_not_lexicographic() {
        let loaded = parse_csv("1,zeta\n2,alpha\n", "t", &CsvSchema::default()).unwrap();
        assert_eq!(loaded.dataset.class_names()[0], "zeta");
    }

    #[test]
    fn header_detected_and_crlf_accepted() {
        let text = "f1,f2,class\r\n1,2,x\r\n3,4,y\r\n";
        let loaded = parse_csv(text, "t", &CsvSchema::default()).unwrap();
        assert!(loaded.had_header);
        assert_eq!(loaded.dataset.n_samples(), 2);
        assert_eq!(loaded.dataset.feature_names(), &["f1".to_string(), "f2".to_string()]);
    }

    #[test]
    fn missing_row_dropped_and_counted() {
        let text = "5.1,1.0,2.3,a\n5.1,?,2.3,a\n4.0,2.0,1.0,b\n";
        let loaded = parse_csv(text, "t", &CsvSchema::default()).unwrap();
        assert_eq!(loaded.dropped_rows, 1);
        assert_eq!(loaded.dataset.n_samples(), 2);
    }

    #[test]
    fn impute_policy_keeps_placeholders_until_imputed() {
        let schema = CsvSchema { missing_policy: MissingPolicy::ImputeClassMedian, ..Default::default() };
        let text = "1,a\n?,a\n3,a\n10,b\n20,b\n";
        let data = parse_csv(text, "t", &schema).unwrap().dataset;
        assert!(data.has_missing());
        assert!(fit_normalizer(&data).is_err());
        let imp = ClassMedianImputer::fit(&data);
        let filled = imp.apply_labeled(&data).unwrap();
        assert_eq!(filled.row(1), &[2.0]);
        let unlabeled = imp.apply_unlabeled(&data).unwrap();
        assert_eq!(unlabeled.row(1), &[6.5]);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let err = parse_csv("1,2,a\n3,b\n", "t", &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");
        let err = parse_csv("1,2,a\n3,zz,b\n", "t", &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");
    }

    #[test]
    fn empty_and_single_class_files_rejected() {
        assert!(matches!(parse_csv("", "t", &CsvSchema::default()), Err(Error::Validation(_))));
        assert!(matches!(parse_csv("1,a\n2,a\n", "t", &CsvSchema::default()), Err(Error::Validation(_))));
    }

    #[test]
    fn label_and_drop_columns() {
        let schema = CsvSchema { label_column: 1, drop_columns: vec![0], ..Default::default() };
        let data = parse_csv("id1,a,1.5\nid2,b,2.5\n", "t", &schema).unwrap().dataset;
        assert_eq!(data.n_features(), 1);
        assert_eq!(data.row(1), &[2.5]);
    }

    #[test]
    fn constant_column_normalizes_to_zero() {
        let data = Dataset::from_rows(
            vec![vec![2.0, 0.0], vec![2.0, 2.0], vec![2.0, 1.0]],
            vec![0, 1, 0],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let p = fit_normalizer(&data).unwrap();
        assert_eq!(p.std[0], 1.0);
        let z = apply_normalizer(&p, &data).unwrap();
        assert!(z.rows().all(|r| r[0] == 0.0));
    }

    #[test]
    fn two_value_column() {
        let data = Dataset::from_rows(vec![vec![0.0], vec![2.0]], vec![0, 1], vec!["a".into(), "b".into()]).unwrap();
        let p = fit_normalizer(&data).unwrap();
        assert_eq!((p.mean[0], p.std[0]), (1.0, 1.0));
        let z = apply_normalizer(&p, &data).unwrap();
        assert_eq!(z.features(), &[-1.0, 1.0]);
    }

    #[test]
    fn normalizer_dimension_mismatch() {
        let p = NormalizationParams { mean: vec![0.0], std: vec![1.0] };
        assert!(matches!(apply_normalizer(&p, &two_class(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn small_split_counts() {
        let data = two_class(5);
        for seed in 0..20 {
            let s = split_stratified(&data, &SplitSpec { test_fraction: 0.3, seed, stratified: true }).unwrap();
            let tc = s.test.class_counts();
            assert!(tc.iter().all(|&c| (1..=2).contains(&c)));
            assert_eq!(s.train.n_samples() + s.test.n_samples(), 10);
        }
    }

    #[test]
    fn split_is_deterministic() {
        let data = two_class(20);
        let spec = SplitSpec { test_fraction: 0.3, seed: 9, stratified: true };
        let a = split_stratified(&data, &spec).unwrap();
        let b = split_stratified(&data, &spec).unwrap();
        assert_eq!(a.test_indices, b.test_indices);
    }

    #[test]
    fn split_rejects_singleton_class() {
        let data = Dataset::from_rows(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![0, 0, 1],
            vec!["a".into(), "lonely".into()],
        )
        .unwrap();
        let err = split_stratified(&data, &SplitSpec::default()).unwrap_err();
        assert!(err.to_string().contains("lonely"));
    }

    #[test]
    fn kfold_six_three() {
        let folds = kfold(&two_class(3), 3, 1).unwrap();
        assert_eq!(folds.len(), 3);
        let mut all: Vec<usize> = folds.iter().flat_map(|f| f.validation.clone()).collect();
        assert!(folds.iter().all(|f| f.validation.len() == 2 && f.train.len() == 4));
        all.sort_unstable();
        assert_eq!(all, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn kfold_range_checked() {
        assert!(kfold(&two_class(3), 1, 0).is_err());
        assert!(kfold(&two_class(3), 4, 0).is_err());
    }
}
