//! Soft-margin kernel SVM.
//!
//! Binary machines are trained on the dual by SMO ([`solve_binary`]) and
//! classify by the sign of `Σ αⱼyⱼK(xⱼ, z) + b` ([`decide`]). Multiclass
//! problems use one machine per class pair and a plurality vote.

mod kernel;
mod solver;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub use kernel::{auto_gamma, kernel_eval, KernelSpec};
use kernel::KernelCache;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub kernel: KernelSpec,
    /// Stop once the KKT gap `m(α) − M(α)` is below this.
    pub tol: f64,
    /// Pair updates before giving up; `None` means `max(100·m, 100 000)`.
    pub max_iter: Option<usize>,
    /// Keep the dual objective after every update in
    /// [`SvmDual::objective_history`].
    #[serde(default)]
    pub record_objective: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, kernel: KernelSpec::Linear, tol: 1e-3, max_iter: None, record_objective: false }
    }
}

impl SvmConfig {
    pub fn new(c: f64, kernel: KernelSpec) -> Self {
        SvmConfig { c, kernel, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        self.kernel.validate()
    }
}

/// A trained binary machine.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmDual {
    pub alpha: Vec<f64>,
    pub b: f64,
    pub support_indices: Vec<usize>,
    pub c: f64,
    pub kernel: KernelSpec,
    pub signed_labels: Vec<i8>,
    pub converged: bool,
    pub iterations: usize,
    /// Dual objective `W(α)` at the returned iterate.
    pub objective: f64,
    /// Final `m(α) − M(α)`.
    pub kkt_gap: f64,
    pub objective_history: Option<Vec<f64>>,
    dim: usize,
    sv_points: Vec<f64>,
    sv_coef: Vec<f64>,
}

impl SvmDual {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Σ αⱼyⱼK(xⱼ, z) + b` over support vectors only.
    pub fn score(&self, z: &[f64]) -> Result<f64> {
        Error::check_dim(self.dim, z.len())?;
        Ok(self.score_unchecked(z))
    }

    fn score_unchecked(&self, z: &[f64]) -> f64 {
        let s: f64 = self
            .sv_points
            .chunks_exact(self.dim)
            .zip(&self.sv_coef)
            .map(|(x, &a)| a * self.kernel.apply(x, z))
            .sum();
        s + self.b
    }

    pub fn decide(&self, z: &[f64]) -> Result<(i8, f64)> {
        let s = self.score(z)?;
        Ok((if s >= 0.0 { 1 } else { -1 }, s))
    }
}

pub fn decide(model: &SvmDual, z: &[f64]) -> Result<(i8, f64)> {
    model.decide(z)
}

fn default_max_iter(m: usize) -> usize {
    (100 * m).max(100_000)
}

fn check_binary(features: &[f64], dim: usize, signed: &[i8]) -> Result<()> {
    if dim == 0 {
        return Err(Error::validation("samples need at least one feature"));
    }
    Error::check_dim(signed.len() * dim, features.len())?;
    if let Some(bad) = signed.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::validation(format!("signed labels must be ±1, found {bad}")));
    }
    if !(signed.contains(&1) && signed.contains(&-1)) {
        return Err(Error::validation("binary training set needs both a +1 and a −1 sample"));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("features contain non-finite values"));
    }
    Ok(())
}

fn solve_cached(cache: &KernelCache<'_>, features: &[f64], dim: usize, signed: &[i8], config: &SvmConfig) -> SvmDual {
    let y: Vec<f64> = signed.iter().map(|&v| v as f64).collect();
    let max_iter = config.max_iter.unwrap_or_else(|| default_max_iter(signed.len()));
    let out = solver::smo(cache, &y, config.c, config.tol, max_iter, config.record_objective);
    if !out.converged {
        log::warn!("SMO stopped after {} updates with KKT gap {:e} (tol {:e})", out.iterations, out.gap, config.tol);
    }
    let support_indices: Vec<usize> = (0..signed.len()).filter(|&i| out.alpha[i] > 0.0).collect();
    let sv_points = support_indices.iter().flat_map(|&i| features[i * dim..(i + 1) * dim].iter().copied()).collect();
    let sv_coef = support_indices.iter().map(|&i| out.alpha[i] * y[i]).collect();
    SvmDual {
        alpha: out.alpha,
        b: -out.rho,
        support_indices,
        c: config.c,
        kernel: config.kernel.clone(),
        signed_labels: signed.to_vec(),
        converged: out.converged,
        iterations: out.iterations,
        objective: out.objective,
        kkt_gap: out.gap,
        objective_history: out.history,
        dim,
        sv_points,
        sv_coef,
    }
}

/// Trains one binary machine on row-major `features` (`m × dim`) with labels
/// in `{−1, +1}`. A run that exhausts `max_iter` still returns its last
/// iterate, with `converged = false`.
pub fn solve_binary(features: &[f64], dim: usize, signed: &[i8], config: &SvmConfig) -> Result<SvmDual> {
    config.validate()?;
    check_binary(features, dim, signed)?;
    let cache = KernelCache::new(features, dim, &config.kernel);
    Ok(solve_cached(&cache, features, dim, signed, config))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairModel {
    /// `(a, b)` with `a < b`; class `a` is the `+1` side.
    pub classes: (usize, usize),
    pub model: SvmDual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassSvm {
    pub pairwise_models: Vec<PairModel>,
    n_classes: usize,
    dim: usize,
}

impl MulticlassSvm {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn converged(&self) -> bool {
        self.pairwise_models.iter().all(|p| p.model.converged)
    }

    /// Plurality vote; ties go to the larger summed `|score|`, then to the
    /// lower class index.
    pub fn predict(&self, z: &[f64]) -> Result<usize> {
        Error::check_dim(self.dim, z.len())?;
        let mut votes = vec![0usize; self.n_classes];
        let mut strength = vec![0.0f64; self.n_classes];
        for p in &self.pairwise_models {
            let s = p.model.score_unchecked(z);
            let winner = if s >= 0.0 { p.classes.0 } else { p.classes.1 };
            votes[winner] += 1;
            strength[winner] += s.abs();
        }
        let mut best = 0;
        for c in 1..self.n_classes {
            if votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best]) {
                best = c;
            }
        }
        Ok(best)
    }

    pub fn predict_batch(&self, queries: &Dataset) -> Result<Vec<usize>> {
        (0..queries.n_samples()).into_par_iter().map(|i| self.predict(queries.row(i))).collect()
    }
}

pub fn predict_multiclass(model: &MulticlassSvm, z: &[f64]) -> Result<usize> {
    model.predict(z)
}

pub fn fit_multiclass(train: &Dataset, config: &SvmConfig) -> Result<MulticlassSvm> {
    let mut models = fit_multiclass_path(train, &[config.c], config)?;
    Ok(models.pop().expect("one model per C"))
}

/// One multiclass model per value in `cs`, all other settings from `config`.
/// Each class pair's kernel matrix is computed once and shared by every `C`.
pub fn fit_multiclass_path(train: &Dataset, cs: &[f64], config: &SvmConfig) -> Result<Vec<MulticlassSvm>> {
    if cs.is_empty() {
        return Err(Error::Config("empty C list".into()));
    }
    for &c in cs {
        SvmConfig { c, ..config.clone() }.validate()?;
    }
    let n_classes = train.n_classes();
    let dim = train.n_features();
    let pairs: Vec<(usize, usize)> =
        (0..n_classes).flat_map(|a| ((a + 1)..n_classes).map(move |b| (a, b))).collect();

    let per_pair: Vec<Vec<SvmDual>> = pairs
        .par_iter()
        .map(|&(a, b)| -> Result<Vec<SvmDual>> {
            let idx: Vec<usize> = (0..train.n_samples()).filter(|&i| train.label(i) == a || train.label(i) == b).collect();
            let features: Vec<f64> = idx.iter().flat_map(|&i| train.row(i).iter().copied()).collect();
            let signed: Vec<i8> = idx.iter().map(|&i| if train.label(i) == a { 1 } else { -1 }).collect();
            check_binary(&features, dim, &signed)?;
            let cache = KernelCache::new(&features, dim, &config.kernel);
            Ok(cs
                .iter()
                .map(|&c| solve_cached(&cache, &features, dim, &signed, &SvmConfig { c, ..config.clone() }))
                .collect())
        })
        .collect::<Result<_>>()?;

    Ok((0..cs.len())
        .map(|ci| MulticlassSvm {
            pairwise_models: pairs
                .iter()
                .zip(&per_pair)
                .map(|(&classes, models)| PairModel { classes, model: models[ci].clone() })
                .collect(),
            n_classes,
            dim,
        })
        .collect())
}
