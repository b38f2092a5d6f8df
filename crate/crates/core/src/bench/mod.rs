//! Manifest-driven benchmark: every dataset × algorithm under one declared
//! protocol.
//!
//! For each dataset and repeat `r` the data is split with seed `seed + r`,
//! missing cells are imputed and features z-scored using the training portion
//! only, hyperparameters are chosen by stratified k-fold cross-validation on
//! the training portion, and the refitted model is scored on the held-out
//! portion. LMNN is scored as KNN, with KNN's selected `k`, under the learned
//! metric.

mod manifest;
pub mod reference;
mod report;

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    apply_normalizer, fit_normalizer, kfold, split_stratified, ClassMedianImputer, Dataset, Fold, SplitSpec,
};
use crate::error::{Error, Result};
use crate::lmnn::{self, LmnnConfig};
use crate::neighbors::{self, DistanceMetric, KnnModel};
use crate::svm::{self, KernelSpec, SvmConfig};
use crate::enn::{self, EnnModel};

pub use manifest::{AutoTag, BenchManifest, DatasetEntry, Gamma, Grids, KGrid, KernelKind, LmnnGrid, Protocol, SvmGrid};
pub use report::{check_output_dir, emit, EmitOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "knn", alias = "KNN")]
    Knn,
    #[serde(rename = "enn", alias = "ENN")]
    Enn,
    #[serde(rename = "svm", alias = "SVM")]
    Svm,
    #[serde(rename = "lmnn", alias = "LMNN")]
    Lmnn,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Knn, Algorithm::Enn, Algorithm::Svm, Algorithm::Lmnn];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Knn => "KNN",
            Algorithm::Enn => "ENN",
            Algorithm::Svm => "SVM",
            Algorithm::Lmnn => "LMNN",
        }
    }

    pub(crate) fn column(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate(predicted: &[usize], truth: &[usize], n_classes: usize) -> Result<Evaluation> {
    Error::check_dim(truth.len(), predicted.len())?;
    if truth.is_empty() {
        return Err(Error::validation("cannot evaluate on an empty set"));
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p >= n_classes || t >= n_classes {
            return Err(Error::validation(format!("label {} out of range for {n_classes} classes", p.max(t))));
        }
        confusion[t][p] += 1;
    }
    let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
    Ok(Evaluation { accuracy: correct as f64 / truth.len() as f64, confusion })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub params: String,
    /// Split seed of this repeat.
    pub seed: u64,
    pub repeat: usize,
    pub accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
    pub wall_time_s: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetError {
    pub dataset: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; rayon's default when `None`.
    pub jobs: Option<usize>,
    /// Score on the training portion instead of the held-out one, with LMNN
    /// as 1-NN. A diagnostic, not a protocol.
    pub eval_on_train: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub reports: Vec<EvalReport>,
    pub errors: Vec<DatasetError>,
    pub datasets: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub protocol: Protocol,
    pub diagnostic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSummary {
    pub mean: f64,
    /// Sample standard deviation; zero for a single repeat.
    pub std: f64,
    pub repeats: usize,
}

impl RunOutcome {
    pub fn summary(&self, dataset: &str, algorithm: Algorithm) -> Option<CellSummary> {
        let acc: Vec<f64> = self
            .reports
            .iter()
            .filter(|r| r.dataset == dataset && r.algorithm == algorithm)
            .map(|r| r.accuracy)
            .collect();
        if acc.is_empty() {
            return None;
        }
        let n = acc.len() as f64;
        let mean = acc.iter().sum::<f64>() / n;
        let std = if acc.len() > 1 {
            (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(CellSummary { mean, std, repeats: acc.len() })
    }

    pub fn table_markdown(&self) -> String {
        report::render_table(self)
    }
}

/// The prepared data of one repeat: imputed and normalized with training
/// statistics only.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
}

pub fn prepare(data: &Dataset, protocol: &Protocol, repeat: usize) -> Result<Prepared> {
    let seed = protocol.seed.wrapping_add(repeat as u64);
    let split = split_stratified(data, &SplitSpec { test_fraction: protocol.test_fraction, seed, stratified: true })?;
    let (train, test) = if data.has_missing() {
        let imputer = ClassMedianImputer::fit(&split.train);
        (imputer.apply_labeled(&split.train)?, imputer.apply_unlabeled(&split.test)?)
    } else {
        (split.train, split.test)
    };
    let norm = fit_normalizer(&train)?;
    Ok(Prepared { train: apply_normalizer(&norm, &train)?, test: apply_normalizer(&norm, &test)?, seed })
}

/// Hyperparameters chosen for one cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Selected {
    K(usize),
    Svm { c: f64, kernel: KernelSpec },
    Lmnn { k_t: usize, mu: f64, k: usize },
}

impl Selected {
    pub fn describe(&self) -> String {
        match self {
            Selected::K(k) => format!("k={k}"),
            Selected::Svm { c, kernel } => format!("C={c};kernel={}", kernel.label()),
            Selected::Lmnn { k_t, mu, k } => format!("k_t={k_t};mu={mu};k={k}"),
        }
    }
}

struct FoldData {
    train: Dataset,
    validation: Dataset,
}

fn fold_data(train: &Dataset, folds: &[Fold]) -> Vec<FoldData> {
    folds
        .iter()
        .map(|f| FoldData { train: train.select(&f.train), validation: train.select(&f.validation) })
        .collect()
}

/// Index of the best mean accuracy; earlier candidates win ties.
fn best_index(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] + 1e-12 {
            best = i;
        }
    }
    best
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

/// Cross-validation context for one training portion.
pub struct Selector<'a> {
    train: &'a Dataset,
    folds: Vec<FoldData>,
    grids: &'a Grids,
}

impl<'a> Selector<'a> {
    pub fn new(train: &'a Dataset, protocol: &Protocol, grids: &'a Grids, seed: u64) -> Result<Self> {
        let smallest = train.class_counts().into_iter().min().unwrap_or(0);
        let k_folds = protocol.folds.min(smallest);
        if k_folds < 2 {
            return Err(Error::validation(format!(
                "training portion has a class with {smallest} sample(s); cross-validation needs 2"
            )));
        }
        if k_folds < protocol.folds {
            log::warn!("{}: folds reduced to {k_folds} by class size", train.source_id());
        }
        Ok(Selector { train, folds: fold_data(train, &kfold(train, k_folds, seed)?), grids })
    }

    fn select_k(&self, grid: &[usize], max_k: usize, many: impl Fn(&FoldData, &[usize]) -> Result<Vec<Vec<usize>>>) -> Result<usize> {
        let mut ks: Vec<usize> = grid.iter().copied().filter(|&k| k <= max_k).collect();
        ks.sort_unstable();
        ks.dedup();
        if ks.is_empty() {
            return Err(Error::validation(format!("no k in {grid:?} fits a training fold (max {max_k})")));
        }
        if ks.len() == 1 {
            return Ok(ks[0]);
        }
        let mut scores = vec![0.0; ks.len()];
        for fd in &self.folds {
            for (s, pred) in scores.iter_mut().zip(many(fd, &ks)?) {
                *s += accuracy(&pred, fd.validation.labels());
            }
        }
        Ok(ks[best_index(&scores)])
    }

    fn min_fold_train(&self) -> usize {
        self.folds.iter().map(|f| f.train.n_samples()).min().unwrap_or(0)
    }

    pub fn knn_k(&self) -> Result<usize> {
        self.select_k(&self.grids.knn.k, self.min_fold_train(), |fd, ks| {
            neighbors::predict_many_k(&fd.train, &fd.validation, &DistanceMetric::Euclidean, ks)
        })
    }

    pub fn enn_k(&self) -> Result<usize> {
        self.select_k(&self.grids.enn.k, self.min_fold_train().saturating_sub(1), |fd, ks| {
            enn::predict_many_k(&fd.train, &fd.validation, &DistanceMetric::Euclidean, ks)
        })
    }

    fn kernels(&self) -> Vec<KernelSpec> {
        let g = &self.grids.svm;
        let mut out = Vec::new();
        for kind in &g.kernel {
            match kind {
                KernelKind::Linear => out.push(KernelSpec::Linear),
                KernelKind::Rbf => out.extend(g.gamma.iter().map(|gm| KernelSpec::Rbf {
                    gamma: match gm {
                        Gamma::Auto(_) => svm::auto_gamma(self.train),
                        Gamma::Value(v) => *v,
                    },
                })),
                KernelKind::Poly => {
                    out.extend(g.degree.iter().map(|&degree| KernelSpec::Polynomial { degree, coef0: g.coef0 }))
                }
            }
        }
        out
    }

    fn svm_base(&self, kernel: KernelSpec) -> SvmConfig {
        SvmConfig { tol: self.grids.svm.tol, ..SvmConfig::new(1.0, kernel) }
    }

    pub fn svm(&self) -> Result<(f64, KernelSpec)> {
        let mut cs = self.grids.svm.c.clone();
        cs.sort_by(f64::total_cmp);
        cs.dedup();
        let kernels = self.kernels();
        if cs.len() * kernels.len() == 1 {
            return Ok((cs[0], kernels[0].clone()));
        }
        // scores[c][kernel]; flattened C-major so smaller C wins ties.
        let mut scores = vec![vec![0.0; kernels.len()]; cs.len()];
        for (ki, kernel) in kernels.iter().enumerate() {
            for fd in &self.folds {
                let models = svm::fit_multiclass_path(&fd.train, &cs, &self.svm_base(kernel.clone()))?;
                for (ci, m) in models.iter().enumerate() {
                    scores[ci][ki] += accuracy(&m.predict_batch(&fd.validation)?, fd.validation.labels());
                }
            }
        }
        let flat: Vec<f64> = scores.concat();
        let best = best_index(&flat);
        Ok((cs[best / kernels.len()], kernels[best % kernels.len()].clone()))
    }

    fn lmnn_config(&self, data: &Dataset, k_t: usize, mu: f64) -> Result<LmnnConfig> {
        let k_t = lmnn::feasible_k_t(data, k_t);
        if k_t == 0 {
            return Err(Error::validation("a class has a single training sample; LMNN needs a target neighbor"));
        }
        Ok(LmnnConfig { k_t, mu, max_iter: self.grids.lmnn.max_iter, tol: self.grids.lmnn.tol, ..Default::default() })
    }

    /// `(k_t, mu)` for LMNN, scored as `k`-NN under each fold's learned metric.
    pub fn lmnn(&self, k: usize) -> Result<(usize, f64)> {
        let candidates: Vec<(usize, f64)> = self
            .grids
            .lmnn
            .k_t
            .iter()
            .flat_map(|&kt| self.grids.lmnn.mu.iter().map(move |&mu| (kt, mu)))
            .collect();
        if candidates.len() == 1 {
            return Ok(candidates[0]);
        }
        let mut scores = vec![0.0; candidates.len()];
        for (s, &(kt, mu)) in scores.iter_mut().zip(&candidates) {
            for fd in &self.folds {
                let model = lmnn::fit(&fd.train, &self.lmnn_config(&fd.train, kt, mu)?)?;
                let knn = KnnModel::new(&fd.train, k.min(fd.train.n_samples()), lmnn::export_metric(&model))?;
                *s += accuracy(&knn.predict_batch(&fd.validation)?, fd.validation.labels());
            }
        }
        Ok(candidates[best_index(&scores)])
    }
}

struct CellResult {
    selected: Selected,
    predicted: Vec<usize>,
    converged: bool,
}

fn run_cell(alg: Algorithm, prep: &Prepared, sel: &Selector<'_>, eval_on_train: bool, knn_k: &mut Option<usize>) -> Result<CellResult> {
    let eval = if eval_on_train { &prep.train } else { &prep.test };
    let train = &prep.train;
    let mut knn_k_cached = || -> Result<usize> {
        if let Some(k) = *knn_k {
            return Ok(k);
        }
        let k = sel.knn_k()?;
        *knn_k = Some(k);
        Ok(k)
    };
    Ok(match alg {
        Algorithm::Knn => {
            let k = knn_k_cached()?;
            let model = KnnModel::new(train, k, DistanceMetric::Euclidean)?;
            CellResult { selected: Selected::K(k), predicted: model.predict_batch(eval)?, converged: true }
        }
        Algorithm::Enn => {
            let k = sel.enn_k()?;
            let model = EnnModel::fit(train, k, &DistanceMetric::Euclidean)?;
            CellResult { selected: Selected::K(k), predicted: model.predict_batch(eval)?, converged: true }
        }
        Algorithm::Svm => {
            let (c, kernel) = sel.svm()?;
            let model = svm::fit_multiclass(train, &SvmConfig { c, ..sel.svm_base(kernel.clone()) })?;
            CellResult { selected: Selected::Svm { c, kernel }, predicted: model.predict_batch(eval)?, converged: model.converged() }
        }
        Algorithm::Lmnn => {
            let k = if eval_on_train { 1 } else { knn_k_cached()? };
            let (k_t, mu) = sel.lmnn(k)?;
            let config = sel.lmnn_config(train, k_t, mu)?;
            let model = lmnn::fit(train, &config)?;
            let knn = KnnModel::new(train, k, lmnn::export_metric(&model))?;
            CellResult {
                selected: Selected::Lmnn { k_t: config.k_t, mu, k },
                predicted: knn.predict_batch(eval)?,
                converged: model.converged,
            }
        }
    })
}

/// All algorithm cells of one dataset and repeat.
pub fn run_repeat(
    data: &Dataset,
    manifest: &BenchManifest,
    repeat: usize,
    algorithms: &[Algorithm],
    eval_on_train: bool,
) -> Result<Vec<EvalReport>> {
    let prep = prepare(data, &manifest.protocol, repeat)?;
    run_prepared(&prep, data.source_id(), manifest, repeat, algorithms, eval_on_train)
}

pub fn run_prepared(
    prep: &Prepared,
    dataset_id: &str,
    manifest: &BenchManifest,
    repeat: usize,
    algorithms: &[Algorithm],
    eval_on_train: bool,
) -> Result<Vec<EvalReport>> {
    let sel = Selector::new(&prep.train, &manifest.protocol, &manifest.grids, prep.seed)?;
    let eval = if eval_on_train { &prep.train } else { &prep.test };
    let mut knn_k = None;
    let mut out = Vec::new();
    for &alg in algorithms {
        let start = Instant::now();
        let cell = run_cell(alg, prep, &sel, eval_on_train, &mut knn_k)?;
        let wall_time_s = start.elapsed().as_secs_f64();
        let ev = evaluate(&cell.predicted, eval.labels(), eval.n_classes())?;
        let mut params = cell.selected.describe();
        if eval_on_train {
            params = format!("eval=train;{params}");
        }
        out.push(EvalReport {
            dataset: dataset_id.to_string(),
            algorithm: alg,
            params,
            seed: prep.seed,
            repeat,
            accuracy: ev.accuracy,
            confusion: ev.confusion,
            wall_time_s,
            converged: cell.converged,
        });
    }
    Ok(out)
}

/// Runs the whole manifest. Dataset-level failures are collected in
/// [`RunOutcome::errors`] and do not stop other datasets.
pub fn run(manifest: &BenchManifest, options: &RunOptions) -> Result<RunOutcome> {
    manifest.validate()?;
    let algorithms = manifest.algorithms();
    let work = || {
        let loaded: Vec<std::result::Result<Dataset, DatasetError>> = manifest
            .datasets
            .par_iter()
            .map(|entry| {
                entry.load().map(|l| l.dataset).map_err(|e| DatasetError {
                    dataset: entry.id.clone(),
                    message: format!("{}: {e}", entry.path.display()),
                })
            })
            .collect();
        let jobs: Vec<(usize, usize)> = loaded
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_ok())
            .flat_map(|(d, _)| (0..manifest.protocol.repeats).map(move |r| (d, r)))
            .collect();
        let results: Vec<(usize, Result<Vec<EvalReport>>)> = jobs
            .par_iter()
            .map(|&(d, r)| {
                let data = loaded[d].as_ref().expect("filtered to loaded datasets");
                (d, run_repeat(data, manifest, r, &algorithms, options.eval_on_train))
            })
            .collect();
        (loaded, results)
    };
    let (loaded, results) = match options.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut errors: Vec<DatasetError> = loaded.into_iter().filter_map(|l| l.err()).collect();
    let mut reports = Vec::new();
    for (d, res) in results {
        match res {
            Ok(mut r) => reports.append(&mut r),
            Err(e) => {
                let id = &manifest.datasets[d].id;
                let message = e.to_string();
                if !errors.iter().any(|x| &x.dataset == id && x.message == message) {
                    errors.push(DatasetError { dataset: id.clone(), message });
                }
            }
        }
    }
    let order = |id: &str| manifest.datasets.iter().position(|d| d.id == id).unwrap_or(usize::MAX);
    // A dataset that failed on some repeat keeps no partial reports.
    reports.retain(|r| !errors.iter().any(|e| e.dataset == r.dataset));
    reports.sort_by(|a, b| (order(&a.dataset), a.algorithm, a.repeat).cmp(&(order(&b.dataset), b.algorithm, b.repeat)));
    errors.sort_by_key(|e| order(&e.dataset));

    Ok(RunOutcome {
        reports,
        errors,
        datasets: manifest.datasets.iter().map(|d| d.id.clone()).collect(),
        algorithms,
        protocol: manifest.protocol.clone(),
        diagnostic: options.eval_on_train,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_cases() {
        let e = evaluate(&[0, 1, 1], &[0, 1, 1], 2).unwrap();
        assert_eq!(e.accuracy, 1.0);
        assert_eq!(e.confusion, vec![vec![1, 0], vec![0, 2]]);
        let e = evaluate(&[1, 0], &[0, 1], 2).unwrap();
        assert_eq!(e.accuracy, 0.0);
        assert_eq!(e.confusion, vec![vec![0, 1], vec![1, 0]]);
        let e = evaluate(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert!((e.accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert!(evaluate(&[0], &[0, 1], 2).is_err());
        assert!(evaluate(&[2], &[0], 2).is_err());
    }

    #[test]
    fn best_index_prefers_earlier() {
        assert_eq!(best_index(&[0.5, 0.7, 0.7]), 1);
        assert_eq!(best_index(&[0.9, 0.9]), 0);
    }

    fn blobs(n_per: usize) -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..2 {
            for i in 0..n_per {
                let t = i as f64;
                rows.push(vec![c as f64 * 2.0 + (t * 1.7).sin(), (t * 0.9).cos() + c as f64]);
                labels.push(c);
            }
        }
        Dataset::from_rows(rows, labels, vec!["a".into(), "b".into()]).unwrap().with_source_id("blobs")
    }

    #[test]
    fn selection_ignores_test_portion() {
        let manifest = BenchManifest::from_json(r#"{"datasets":[{"id":"blobs","path":"unused.csv"}],"grids":{"svm":{"c":[0.1,10]},"lmnn":{"k_t":[1,2]}}}"#).unwrap();
        let data = blobs(20);
        let clean = prepare(&data, &manifest.protocol, 0).unwrap();
        let poisoned = Prepared {
            test: clean.test.with_features(vec![f64::NAN; clean.test.features().len()]),
            ..clean.clone()
        };
        for prep in [&clean, &poisoned] {
            assert!(!prep.train.has_missing());
        }
        let pick = |p: &Prepared| {
            let sel = Selector::new(&p.train, &manifest.protocol, &manifest.grids, p.seed).unwrap();
            let k = sel.knn_k().unwrap();
            (k, sel.enn_k().unwrap(), sel.svm().unwrap(), sel.lmnn(k).unwrap())
        };
        assert_eq!(pick(&clean), pick(&poisoned));
        let a = run_prepared(&clean, "blobs", &manifest, 0, &Algorithm::ALL, false).unwrap();
        let b = run_prepared(&poisoned, "blobs", &manifest, 0, &Algorithm::ALL, false).unwrap();
        let params = |r: &[EvalReport]| r.iter().map(|x| x.params.clone()).collect::<Vec<_>>();
        assert_eq!(params(&a), params(&b));
    }

    #[test]
    fn report_confusion_is_consistent() {
        let manifest = BenchManifest::from_json(r#"{"datasets":[{"id":"blobs","path":"unused.csv"}]}"#).unwrap();
        let data = blobs(15);
        let reports = run_repeat(&data, &manifest, 0, &Algorithm::ALL, false).unwrap();
        let n_test = prepare(&data, &manifest.protocol, 0).unwrap().test.n_samples();
        assert_eq!(reports.len(), 4);
        for r in &reports {
            let total: usize = r.confusion.iter().flatten().sum();
            let diag: usize = (0..2).map(|c| r.confusion[c][c]).sum();
            assert_eq!(total, n_test);
            assert!((r.accuracy - diag as f64 / total as f64).abs() < 1e-15);
        }
    }
}
