use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Algorithm;
use crate::dataset::{load_csv, CsvSchema, LoadedCsv, MissingPolicy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchManifest {
    pub datasets: Vec<DatasetEntry>,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    /// Subset of algorithms to run; all four when absent.
    #[serde(default)]
    pub algorithms: Option<Vec<Algorithm>>,
}

fn default_outputs() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    /// Matches the reference table for the known benchmark sets.
    pub id: String,
    pub path: PathBuf,
    #[serde(default = "default_label_column")]
    pub label_column: isize,
    #[serde(default = "default_missing_marker")]
    pub missing_marker: String,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default)]
    pub drop_columns: Vec<usize>,
}

fn default_label_column() -> isize {
    -1
}

fn default_missing_marker() -> String {
    "?".into()
}

fn default_delimiter() -> char {
    ','
}

impl DatasetEntry {
    pub fn new(id: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        DatasetEntry {
            id: id.into(),
            path: path.into(),
            label_column: -1,
            missing_marker: default_missing_marker(),
            missing_policy: MissingPolicy::Drop,
            delimiter: ',',
            drop_columns: Vec::new(),
        }
    }

    pub fn schema(&self) -> Result<CsvSchema> {
        if !self.delimiter.is_ascii() {
            return Err(Error::Config(format!("dataset '{}': delimiter must be ASCII", self.id)));
        }
        Ok(CsvSchema {
            label_column: self.label_column,
            missing_marker: self.missing_marker.clone(),
            missing_policy: self.missing_policy,
            delimiter: self.delimiter as u8,
            drop_columns: self.drop_columns.clone(),
        })
    }

    pub fn load(&self) -> Result<LoadedCsv> {
        let mut loaded = load_csv(&self.path, &self.schema()?)?;
        loaded.dataset = loaded.dataset.with_source_id(self.id.clone());
        Ok(loaded)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Protocol {
    pub test_fraction: f64,
    pub seed: u64,
    pub folds: usize,
    pub repeats: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol { test_fraction: 0.3, seed: 42, folds: 5, repeats: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub knn: KGrid,
    pub enn: KGrid,
    pub svm: SvmGrid,
    pub lmnn: LmnnGrid,
}

impl Default for Grids {
    fn default() -> Self {
        Grids { knn: KGrid::default(), enn: KGrid::default(), svm: SvmGrid::default(), lmnn: LmnnGrid::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGrid {
    pub k: Vec<usize>,
}

impl Default for KGrid {
    fn default() -> Self {
        KGrid { k: vec![1, 3, 5, 7, 9, 11] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Rbf,
    Poly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    /// `"auto"`: `1 / (d · mean feature variance)` of the training portion.
    Auto(AutoTag),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmGrid {
    pub c: Vec<f64>,
    pub kernel: Vec<KernelKind>,
    /// Used by the RBF kernel.
    pub gamma: Vec<Gamma>,
    /// Used by the polynomial kernel, with `coef0`.
    pub degree: Vec<u32>,
    pub coef0: f64,
    pub tol: f64,
}

impl Default for SvmGrid {
    fn default() -> Self {
        SvmGrid {
            c: vec![0.1, 1.0, 10.0, 100.0],
            kernel: vec![KernelKind::Rbf],
            gamma: vec![Gamma::Auto(AutoTag::Auto)],
            degree: vec![3],
            coef0: 1.0,
            tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmnnGrid {
    pub k_t: Vec<usize>,
    pub mu: Vec<f64>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LmnnGrid {
    fn default() -> Self {
        LmnnGrid { k_t: vec![3], mu: vec![0.5], max_iter: 200, tol: 1e-5 }
    }
}

impl BenchManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: BenchManifest = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    /// Reads a manifest file. Relative dataset and output paths are taken
    /// relative to the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut m = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for d in &mut m.datasets {
            if d.path.is_relative() {
                d.path = base.join(&d.path);
            }
        }
        if m.outputs.is_relative() {
            m.outputs = base.join(&m.outputs);
        }
        Ok(m)
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        let mut algs = self.algorithms.clone().unwrap_or_else(|| Algorithm::ALL.to_vec());
        algs.sort();
        algs.dedup();
        algs
    }

    /// Schema-level checks; dataset files are not opened.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.datasets.is_empty() {
            return bad("manifest lists no datasets".into());
        }
        let mut ids = HashSet::new();
        for d in &self.datasets {
            if d.id.is_empty() {
                return bad("dataset id must not be empty".into());
            }
            if !ids.insert(d.id.as_str()) {
                return bad(format!("duplicate dataset id '{}'", d.id));
            }
            d.schema()?;
        }
        let p = &self.protocol;
        if !(p.test_fraction > 0.0 && p.test_fraction < 1.0) {
            return bad(format!("test_fraction must lie in (0, 1), got {}", p.test_fraction));
        }
        if p.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", p.folds));
        }
        if p.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        let g = &self.grids;
        for (name, ks) in [("knn", &g.knn.k), ("enn", &g.enn.k)] {
            if ks.is_empty() || ks.contains(&0) {
                return bad(format!("{name} k grid must be non-empty and positive"));
            }
        }
        if g.svm.c.is_empty() || g.svm.c.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return bad("svm C grid must be non-empty and positive".into());
        }
        if g.svm.kernel.is_empty() {
            return bad("svm kernel list must not be empty".into());
        }
        if g.svm.kernel.contains(&KernelKind::Rbf) {
            if g.svm.gamma.is_empty() {
                return bad("svm gamma list must not be empty for the rbf kernel".into());
            }
            if g.svm.gamma.iter().any(|v| matches!(v, Gamma::Value(x) if !(*x > 0.0 && x.is_finite()))) {
                return bad("svm gamma values must be positive".into());
            }
        }
        if g.svm.kernel.contains(&KernelKind::Poly) && (g.svm.degree.is_empty() || g.svm.degree.contains(&0)) {
            return bad("svm degree list must be non-empty and positive for the poly kernel".into());
        }
        if !(g.svm.tol > 0.0) {
            return bad("svm tol must be positive".into());
        }
        if g.lmnn.k_t.is_empty() || g.lmnn.k_t.contains(&0) {
            return bad("lmnn k_t grid must be non-empty and positive".into());
        }
        if g.lmnn.mu.is_empty() || g.lmnn.mu.iter().any(|&m| !(m > 0.0 && m < 1.0)) {
            return bad("lmnn mu grid must be non-empty with values in (0, 1)".into());
        }
        if matches!(&self.algorithms, Some(a) if a.is_empty()) {
            return bad("algorithm list must not be empty".into());
        }
        Ok(())
    }
}
