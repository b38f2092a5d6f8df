//! Large margin nearest neighbor metric learning.
//!
//! Every training point (anchor) gets `k_t` fixed same-class target neighbors.
//! The loss pulls targets in and pushes differently-labeled points
//! (imposters) at least one unit beyond each target:
//!
//! ```text
//! ε(M) = (1−μ) Σ_{i,j→i} D(i,j) + μ Σ_{i,j→i,l: yₗ≠yᵢ} [1 + D(i,j) − D(i,l)]₊
//! D(a,b) = (xₐ−x_b)ᵀ M (xₐ−x_b)
//! ```
//!
//! [`fit`] minimizes it over positive semidefinite `M` by projected
//! sub-gradient descent with an adaptive step.

use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::neighbors::{sq_euclid, DistanceMetric, TopK};

pub use crate::linalg::project_psd;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetNeighborMap {
    /// Row-major `n × k_t` target indices, nearest first.
    pub eta: Vec<usize>,
    pub k_t: usize,
}

impl TargetNeighborMap {
    pub fn targets(&self, i: usize) -> &[usize] {
        &self.eta[i * self.k_t..(i + 1) * self.k_t]
    }

    pub fn n_anchors(&self) -> usize {
        if self.k_t == 0 { 0 } else { self.eta.len() / self.k_t }
    }
}

/// The `k_t` Euclidean-nearest same-class points of every anchor, ties to the
/// lower index.
pub fn select_target_neighbors(train: &Dataset, k_t: usize) -> Result<TargetNeighborMap> {
    if k_t == 0 {
        return Err(Error::Config("k_t must be at least 1".into()));
    }
    for (c, &count) in train.class_counts().iter().enumerate() {
        if count <= k_t {
            return Err(Error::validation(format!(
                "class '{}' has {count} samples; k_t = {k_t} target neighbors need at least {}",
                train.class_names()[c],
                k_t + 1
            )));
        }
    }
    let n = train.n_samples();
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = train.row(i);
            let y = train.label(i);
            let mut top = TopK::new(k_t);
            for j in 0..n {
                if j != i && train.label(j) == y {
                    top.offer(sq_euclid(xi, train.row(j)), j);
                }
            }
            top.into_vec().into_iter().map(|e| e.1).collect()
        })
        .collect();
    Ok(TargetNeighborMap { eta: rows.concat(), k_t })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImposterTriple {
    pub i: usize,
    pub j: usize,
    pub l: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmnnConfig {
    pub k_t: usize,
    /// Push weight; the pull term gets `1 − mu`.
    pub mu: f64,
    /// Initial step. `None` picks `1e-3·‖M‖/‖G‖` so the first step moves `M`
    /// by about a thousandth of its norm.
    pub step: Option<f64>,
    pub max_iter: usize,
    /// Relative loss decrease below which an accepted step counts as stalled.
    pub tol: f64,
    /// Consecutive stalled steps before stopping.
    pub patience: usize,
}

impl Default for LmnnConfig {
    fn default() -> Self {
        LmnnConfig { k_t: 3, mu: 0.5, step: None, max_iter: 200, tol: 1e-5, patience: 10 }
    }
}

impl LmnnConfig {
    fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::Config(format!("mu must lie in (0, 1), got {}", self.mu)));
        }
        if let Some(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("step must be positive, got {s}")));
            }
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config(format!("tol must be non-negative, got {}", self.tol)));
        }
        Ok(())
    }
}

/// `min(requested, smallest class − 1)`, the largest feasible target count.
pub fn feasible_k_t(train: &Dataset, requested: usize) -> usize {
    let smallest = train.class_counts().into_iter().min().unwrap_or(0);
    requested.min(smallest.saturating_sub(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricModel {
    pub m: DMatrix<f64>,
    /// `L` with `M = LᵀL`, filled in after fitting.
    pub l: Option<DMatrix<f64>>,
    pub mu: f64,
    /// Loss of the initial metric followed by every accepted step.
    pub history: Vec<f64>,
    /// Smallest eigenvalue of `M` after each accepted step.
    pub min_eigenvalues: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl MetricModel {
    pub fn identity(d: usize, mu: f64) -> Self {
        MetricModel {
            m: DMatrix::identity(d, d),
            l: Some(DMatrix::identity(d, d)),
            mu,
            history: Vec::new(),
            min_eigenvalues: Vec::new(),
            iterations: 0,
            converged: false,
        }
    }

    pub fn from_matrix(m: DMatrix<f64>, mu: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        Ok(MetricModel { l: None, m, mu, history: Vec::new(), min_eigenvalues: Vec::new(), iterations: 0, converged: false })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }
}

pub fn squared_distance(model: &MetricModel, x: &[f64], y: &[f64]) -> Result<f64> {
    Error::check_dim(model.dim(), x.len())?;
    Error::check_dim(x.len(), y.len())?;
    Ok(quad_form(&model.m, x, y))
}

fn quad_form(m: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
    let d = x.len();
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mut q = 0.0;
    for a in 0..d {
        let mut row = 0.0;
        for b in 0..d {
            row += m[(a, b)] * diff[b];
        }
        q += diff[a] * row;
    }
    q
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub loss: f64,
    pub gradient: DMatrix<f64>,
    pub active: Vec<ImposterTriple>,
}

/// Training data in the layout the loss wants: rows, labels, and the
/// different-class candidates of every anchor.
struct Problem<'a> {
    x: &'a [f64],
    d: usize,
    labels: &'a [usize],
    targets: &'a TargetNeighborMap,
}

struct AnchorTerms {
    loss: f64,
    /// `(b, w)` pair weights for this anchor, targets first.
    weights: Vec<(usize, f64)>,
    active: Vec<ImposterTriple>,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.labels.len()
    }

    fn row<'b>(&self, flat: &'b [f64], i: usize) -> &'b [f64] {
        &flat[i * self.d..(i + 1) * self.d]
    }

    /// `(Pₐ − P_b)·(xₐ − x_b)` with `P = XM`; equals the quadratic form for
    /// any square `M`, symmetric or not.
    #[inline]
    fn dist(&self, p: &[f64], a: usize, b: usize) -> f64 {
        let (pa, pb) = (self.row(p, a), self.row(p, b));
        let (xa, xb) = (self.row(self.x, a), self.row(self.x, b));
        let mut s = 0.0;
        for f in 0..self.d {
            s += (pa[f] - pb[f]) * (xa[f] - xb[f]);
        }
        s
    }

    fn anchor(&self, p: &[f64], i: usize, mu: f64, collect: bool) -> AnchorTerms {
        let targets = self.targets.targets(i);
        let dt: Vec<f64> = targets.iter().map(|&j| self.dist(p, i, j)).collect();
        let mut loss = (1.0 - mu) * dt.iter().sum::<f64>();
        let mut target_w = vec![1.0 - mu; targets.len()];
        let mut weights = Vec::new();
        let mut active = Vec::new();
        // No imposter farther than this can be inside any target's margin.
        let radius = dt.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
        let yi = self.labels[i];
        for l in 0..self.n() {
            if self.labels[l] == yi {
                continue;
            }
            let dl = self.dist(p, i, l);
            if dl > radius {
                continue;
            }
            let mut count = 0usize;
            for (t, &j) in targets.iter().enumerate() {
                let margin = 1.0 + dt[t] - dl;
                if margin >= 0.0 {
                    loss += mu * margin;
                    target_w[t] += mu;
                    count += 1;
                    if collect {
                        active.push(ImposterTriple { i, j, l });
                    }
                }
            }
            if count > 0 {
                weights.push((l, -mu * count as f64));
            }
        }
        let mut all: Vec<(usize, f64)> = targets.iter().copied().zip(target_w).collect();
        all.extend(weights);
        AnchorTerms { loss, weights: all, active }
    }

    fn evaluate(&self, m: &DMatrix<f64>, mu: f64, collect: bool) -> (f64, DMatrix<f64>, Vec<ImposterTriple>) {
        let (n, d) = (self.n(), self.d);
        let mut p = vec![0.0; n * d];
        for i in 0..n {
            let xi = self.row(self.x, i);
            for c in 0..d {
                let mut s = 0.0;
                for r in 0..d {
                    s += xi[r] * m[(r, c)];
                }
                p[i * d + c] = s;
            }
        }
        let terms: Vec<AnchorTerms> = (0..n).into_par_iter().map(|i| self.anchor(&p, i, mu, collect)).collect();

        // G = Σ_a (s_a + t_a) x_a x_aᵀ − Σ_i (x_i y_iᵀ + y_i x_iᵀ), where s_i and
        // t_b are the weight sums per anchor and per partner and
        // y_i = Σ_b w_ib x_b. Reduced in anchor order for reproducibility.
        let mut loss = 0.0;
        let mut diag_w = vec![0.0; n];
        let mut cross = DMatrix::<f64>::zeros(d, d);
        let mut active = Vec::new();
        let mut y = vec![0.0; d];
        for (i, t) in terms.into_iter().enumerate() {
            loss += t.loss;
            y.iter_mut().for_each(|v| *v = 0.0);
            for &(b, w) in &t.weights {
                diag_w[i] += w;
                diag_w[b] += w;
                let xb = self.row(self.x, b);
                for f in 0..d {
                    y[f] += w * xb[f];
                }
            }
            let xi = self.row(self.x, i);
            for r in 0..d {
                for c in 0..d {
                    cross[(r, c)] += xi[r] * y[c];
                }
            }
            active.extend(t.active);
        }
        let mut g = DMatrix::<f64>::zeros(d, d);
        for (a, &w) in diag_w.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let xa = self.row(self.x, a);
            for r in 0..d {
                let wr = w * xa[r];
                for c in 0..d {
                    g[(r, c)] += wr * xa[c];
                }
            }
        }
        g -= &cross + cross.transpose();
        (loss, linalg::symmetrize(&g), active)
    }
}

fn check_targets(train: &Dataset, targets: &TargetNeighborMap) -> Result<()> {
    Error::check_dim(train.n_samples(), targets.n_anchors())?;
    for i in 0..train.n_samples() {
        for &j in targets.targets(i) {
            if j >= train.n_samples() || j == i || train.label(j) != train.label(i) {
                return Err(Error::validation(format!("anchor {i} has invalid target {j}")));
            }
        }
    }
    Ok(())
}

/// Loss, symmetric sub-gradient and the exact set of triples with
/// `D(i,l) ≤ D(i,j) + 1`.
pub fn loss_and_subgradient(model: &MetricModel, train: &Dataset, targets: &TargetNeighborMap) -> Result<LossEval> {
    Error::check_dim(train.n_features(), model.dim())?;
    check_targets(train, targets)?;
    let problem = Problem { x: train.features(), d: train.n_features(), labels: train.labels(), targets };
    let (loss, gradient, active) = problem.evaluate(&model.m, model.mu, true);
    Ok(LossEval { loss, gradient, active })
}

/// Projected sub-gradient descent from `M = I`.
///
/// A candidate `project_psd(M − step·G)` is accepted only if it lowers the
/// loss, after which the step grows by 10%; otherwise the step is halved.
/// Stops after `max_iter` candidates, after `patience` consecutive accepted
/// steps with relative improvement below `tol`, or when the step can no longer
/// move `M`.
pub fn fit(train: &Dataset, config: &LmnnConfig) -> Result<MetricModel> {
    config.validate()?;
    let targets = select_target_neighbors(train, config.k_t)?;
    let d = train.n_features();
    let problem = Problem { x: train.features(), d, labels: train.labels(), targets: &targets };

    let mut model = MetricModel::identity(d, config.mu);
    let (mut loss, mut grad, _) = problem.evaluate(&model.m, config.mu, false);
    model.history.push(loss);
    let g_norm = grad.norm();
    if g_norm == 0.0 || loss == 0.0 {
        model.converged = true;
        return Ok(model);
    }
    let mut step = config.step.unwrap_or(1e-3 * model.m.norm() / g_norm);
    let mut stalled = 0usize;

    while model.iterations < config.max_iter {
        model.iterations += 1;
        let candidate = linalg::project_psd(&(&model.m - &grad * step))?;
        let (c_loss, c_grad, _) = problem.evaluate(&candidate, config.mu, false);
        if c_loss < loss {
            let rel = (loss - c_loss) / loss.abs().max(f64::MIN_POSITIVE);
            model.m = candidate;
            model.min_eigenvalues.push(linalg::min_eigenvalue(&model.m)?);
            model.history.push(c_loss);
            loss = c_loss;
            grad = c_grad;
            step *= 1.1;
            stalled = if rel < config.tol { stalled + 1 } else { 0 };
            if stalled >= config.patience || loss == 0.0 {
                model.converged = true;
                break;
            }
        } else {
            step *= 0.5;
            if step * grad.norm() <= 1e-12 * (1.0 + model.m.norm()) {
                model.converged = true;
                break;
            }
        }
    }
    if !model.converged {
        log::info!("LMNN stopped at max_iter = {} with loss {loss:e}", config.max_iter);
    }
    model.l = Some(linalg::psd_factor(&model.m)?);
    Ok(model)
}

pub fn export_metric(model: &MetricModel) -> DistanceMetric {
    DistanceMetric::Mahalanobis(linalg::symmetrize(&model.m))
}

/// `d` lines of `d` comma-separated values, shortest round-trip formatting.
pub fn write_metric_csv(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in 0..m.nrows() {
        let line: Vec<String> = (0..m.ncols()).map(|c| format!("{:?}", m[(r, c)])).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_metric_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        for field in rec.iter() {
            values.push(field.parse::<f64>().map_err(|e| Error::Parse { row: r + 1, message: format!("'{field}': {e}") })?);
        }
        rows += 1;
    }
    Error::check_dim(rows * rows, values.len())?;
    Ok(DMatrix::from_row_slice(rows, rows, &values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Dataset {
        let n = labels.iter().max().unwrap() + 1;
        Dataset::from_rows(rows, labels, (0..n).map(|c| format!("c{c}")).collect()).unwrap()
    }

    #[test]
    fn targets_tie_to_lower_index() {
        let data = ds(vec![vec![0.0], vec![1.0], vec![2.0], vec![9.0], vec![10.0]], vec![0, 0, 0, 1, 1]);
        let t = select_target_neighbors(&data, 1).unwrap();
        assert_eq!(t.targets(1), &[0]);
        assert_eq!(t.targets(0), &[1]);
        assert_eq!(t.targets(3), &[4]);
    }

    #[test]
    fn targets_whole_class() {
        let data = ds(vec![vec![0.0], vec![1.0], vec![2.0], vec![9.0], vec![10.0], vec![11.0]], vec![0, 0, 0, 1, 1, 1]);
        let t = select_target_neighbors(&data, 2).unwrap();
        let mut got = t.targets(2).to_vec();
        got.sort();
        assert_eq!(got, vec![0, 1]);
    }

    #[test]
    fn tiny_class_is_rejected_by_name() {
        let data = ds(vec![vec![0.0], vec![1.0], vec![5.0]], vec![0, 0, 1]);
        let err = select_target_neighbors(&data, 1).unwrap_err().to_string();
        assert!(err.contains("c1") && err.contains("k_t = 1"), "{err}");
        assert_eq!(feasible_k_t(&ds(vec![vec![0.0], vec![1.0], vec![2.0], vec![5.0], vec![6.0]], vec![0, 0, 0, 1, 1]), 3), 1);
    }

    #[test]
    fn squared_distance_cases() {
        let id = MetricModel::identity(2, 0.5);
        assert_eq!(squared_distance(&id, &[3.0, 4.0], &[0.0, 0.0]).unwrap(), 25.0);
        let diag = MetricModel::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]), 0.5).unwrap();
        assert_eq!(squared_distance(&diag, &[1.0, 1.0], &[0.0, 0.0]).unwrap(), 5.0);
        assert!(squared_distance(&id, &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn separated_classes_have_no_push() {
        let data = ds(vec![vec![0.0], vec![0.5], vec![10.0], vec![10.5]], vec![0, 0, 1, 1]);
        let t = select_target_neighbors(&data, 1).unwrap();
        let e = loss_and_subgradient(&MetricModel::identity(1, 0.5), &data, &t).unwrap();
        assert!(e.active.is_empty());
        assert!((e.loss - 0.5 * 4.0 * 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_metric_activates_every_triple() {
        let data = ds(vec![vec![0.0], vec![0.5], vec![1.0], vec![10.0], vec![10.5]], vec![0, 0, 0, 1, 1]);
        let t = select_target_neighbors(&data, 1).unwrap();
        let zero = MetricModel::from_matrix(DMatrix::zeros(1, 1), 0.3).unwrap();
        let e = loss_and_subgradient(&zero, &data, &t).unwrap();
        // Class-0 anchors see 2 imposters, class-1 anchors see 3.
        let triples = 3 * 2 + 2 * 3;
        assert_eq!(e.active.len(), triples);
        assert!((e.loss - 0.3 * triples as f64).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_outer_products() {
        let data = ds(vec![vec![0.0, 0.1], vec![0.4, 0.3], vec![0.2, -0.5], vec![0.3, 0.2], vec![1.0, 0.0]], vec![0, 0, 1, 1, 1]);
        let t = select_target_neighbors(&data, 1).unwrap();
        let model = MetricModel::identity(2, 0.4);
        let e = loss_and_subgradient(&model, &data, &t).unwrap();
        let outer = |a: usize, b: usize| {
            let v = DMatrix::from_row_slice(2, 1, &[data.row(a)[0] - data.row(b)[0], data.row(a)[1] - data.row(b)[1]]);
            &v * v.transpose()
        };
        let mut g = DMatrix::zeros(2, 2);
        for i in 0..5 {
            g += outer(i, t.targets(i)[0]) * 0.6;
        }
        for tr in &e.active {
            g += (outer(tr.i, tr.j) - outer(tr.i, tr.l)) * 0.4;
        }
        assert!((g - &e.gradient).abs().max() < 1e-12);
    }

    #[test]
    fn fit_never_increases_loss() {
        let rows: Vec<Vec<f64>> = (0..24).map(|i| vec![(i % 6) as f64 * 0.3, ((i * 5) % 7) as f64 * 0.2]).collect();
        let labels: Vec<usize> = (0..24).map(|i| (i / 3) % 2).collect();
        let data = ds(rows, labels);
        let model = fit(&data, &LmnnConfig { k_t: 2, ..Default::default() }).unwrap();
        assert!(model.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(model.min_eigenvalues.iter().all(|&e| e >= -1e-8));
        let l = model.l.as_ref().unwrap();
        assert!((l.transpose() * l - &model.m).abs().max() < 1e-8);
    }

    #[test]
    fn metric_csv_roundtrip() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0 / 3.0, 1e-17, 1e-17, 2.5]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_metric_csv(&m, &path).unwrap();
        assert_eq!(read_metric_csv(&path).unwrap(), m);
    }
}
