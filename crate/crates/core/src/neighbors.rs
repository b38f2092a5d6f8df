//! Distance metrics and exhaustive k-nearest-neighbor search.
//!
//! Both metrics are served through a linear embedding: Euclidean is the
//! identity, and Mahalanobis with matrix `M = LᵀL` maps every point through
//! `L` once, after which all comparisons are plain squared Euclidean
//! distances. Neighbor order is decided on squared distances; ties go to the
//! lower training index.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub enum DistanceMetric {
    Euclidean,
    /// Symmetric PSD matrix `M`; distance is `√((x−y)ᵀM(x−y))`.
    Mahalanobis(DMatrix<f64>),
}

impl DistanceMetric {
    /// Validated Mahalanobis metric: square, symmetric within 1e-9 and with
    /// smallest eigenvalue at least -1e-8.
    pub fn mahalanobis(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let asym = linalg::max_asymmetry(&m);
        if asym > 1e-9 {
            return Err(Error::validation(format!("metric matrix asymmetric by {asym:e}")));
        }
        let lo = linalg::min_eigenvalue(&m)?;
        if lo < -1e-8 {
            return Err(Error::PsdViolation(lo));
        }
        Ok(DistanceMetric::Mahalanobis(m))
    }

    pub fn identity(d: usize) -> Self {
        DistanceMetric::Mahalanobis(DMatrix::identity(d, d))
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            DistanceMetric::Euclidean => None,
            DistanceMetric::Mahalanobis(m) => Some(m.nrows()),
        }
    }

    /// `(x−y)ᵀM(x−y)`, or the squared Euclidean distance.
    pub fn squared_distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Error::check_dim(x.len(), y.len())?;
        match self {
            DistanceMetric::Euclidean => Ok(sq_euclid(x, y)),
            DistanceMetric::Mahalanobis(m) => {
                Error::check_dim(m.nrows(), x.len())?;
                let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                let mut q = 0.0;
                for (a, da) in diff.iter().enumerate() {
                    let mut row = 0.0;
                    for (b, db) in diff.iter().enumerate() {
                        row += m[(a, b)] * db;
                    }
                    q += da * row;
                }
                if q < -1e-12 {
                    return Err(Error::PsdViolation(q));
                }
                Ok(q.max(0.0))
            }
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.squared_distance(x, y).map(f64::sqrt)
    }

    pub(crate) fn embedding(&self, d: usize) -> Result<Embedding> {
        match self {
            DistanceMetric::Euclidean => Ok(Embedding { factor: None, dim: d }),
            DistanceMetric::Mahalanobis(m) => {
                Error::check_dim(d, m.nrows())?;
                Ok(Embedding { factor: Some(linalg::psd_factor(m)?), dim: d })
            }
        }
    }
}

pub fn distance(metric: &DistanceMetric, x: &[f64], y: &[f64]) -> Result<f64> {
    metric.distance(x, y)
}

#[inline]
pub(crate) fn sq_euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Linear map under which a metric becomes Euclidean.
#[derive(Debug, Clone)]
pub(crate) struct Embedding {
    factor: Option<DMatrix<f64>>,
    dim: usize,
}

impl Embedding {
    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn map(&self, x: &[f64]) -> Vec<f64> {
        match &self.factor {
            None => x.to_vec(),
            Some(l) => (0..l.nrows())
                .map(|r| (0..self.dim).map(|c| l[(r, c)] * x[c]).sum())
                .collect(),
        }
    }

    pub(crate) fn map_all(&self, flat: &[f64]) -> Vec<f64> {
        match &self.factor {
            None => flat.to_vec(),
            Some(_) => flat.chunks_exact(self.dim).flat_map(|r| self.map(r)).collect(),
        }
    }
}

/// Training points already mapped into the metric's Euclidean embedding.
#[derive(Debug, Clone)]
pub(crate) struct EmbeddedSet {
    pub(crate) points: Vec<f64>,
    pub(crate) dim: usize,
    pub(crate) labels: Vec<usize>,
    pub(crate) n_classes: usize,
    pub(crate) embedding: Embedding,
}

impl EmbeddedSet {
    pub(crate) fn new(data: &Dataset, metric: &DistanceMetric) -> Result<Self> {
        let embedding = metric.embedding(data.n_features())?;
        Ok(EmbeddedSet {
            points: embedding.map_all(data.features()),
            dim: data.n_features(),
            labels: data.labels().to_vec(),
            n_classes: data.n_classes(),
            embedding,
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.labels.len()
    }

    pub(crate) fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Squared distances from an already-embedded query to every point.
    pub(crate) fn sq_distances(&self, q: &[f64]) -> Vec<f64> {
        self.points.chunks_exact(self.dim).map(|p| sq_euclid(p, q)).collect()
    }

    pub(crate) fn map_query(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.embedding.dim(), x.len())?;
        Ok(self.embedding.map(x))
    }
}

/// Keeps the `k` smallest `(sq_distance, index)` pairs. Candidates must be
/// offered in increasing index order so that an equal distance never
/// displaces an earlier index.
#[derive(Debug, Clone)]
pub(crate) struct TopK {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl TopK {
    pub(crate) fn new(k: usize) -> Self {
        TopK { k, items: Vec::with_capacity(k + 1) }
    }

    #[inline]
    pub(crate) fn offer(&mut self, d: f64, i: usize) {
        if self.items.len() == self.k {
            if self.k == 0 || d >= self.items[self.k - 1].0 {
                return;
            }
            self.items.pop();
        }
        let pos = self.items.partition_point(|e| e.0 <= d);
        self.items.insert(pos, (d, i));
    }

    pub(crate) fn into_vec(self) -> Vec<(f64, usize)> {
        self.items
    }
}

pub(crate) fn k_smallest(sq: &[f64], k: usize, exclude: Option<usize>) -> Vec<(f64, usize)> {
    let mut top = TopK::new(k);
    for (i, &d) in sq.iter().enumerate() {
        if Some(i) != exclude {
            top.offer(d, i);
        }
    }
    top.into_vec()
}

/// For every point, its `k` nearest other points (self excluded), sorted by
/// `(squared distance, index)`.
#[derive(Debug, Clone)]
pub(crate) struct NeighborTable {
    pub(crate) k: usize,
    /// Row-major `n × k` indices.
    pub(crate) indices: Vec<usize>,
    /// Matching squared distances.
    pub(crate) sq_dist: Vec<f64>,
}

impl NeighborTable {
    pub(crate) fn build(set: &EmbeddedSet, k: usize) -> Result<Self> {
        let n = set.len();
        if k == 0 || k + 1 > n {
            return Err(Error::validation(format!("neighbor count {k} needs 1 ≤ k ≤ n−1 = {}", n.saturating_sub(1))));
        }
        // Pairs visited with i < j: row i receives j < i during earlier outer
        // iterations, then j > i in its own, so candidates arrive in index order.
        let mut tops: Vec<TopK> = (0..n).map(|_| TopK::new(k)).collect();
        for i in 0..n {
            let pi = set.point(i);
            for j in (i + 1)..n {
                let d = sq_euclid(pi, set.point(j));
                tops[i].offer(d, j);
                tops[j].offer(d, i);
            }
        }
        let mut indices = Vec::with_capacity(n * k);
        let mut sq_dist = Vec::with_capacity(n * k);
        for t in tops {
            for (d, i) in t.into_vec() {
                indices.push(i);
                sq_dist.push(d);
            }
        }
        Ok(NeighborTable { k, indices, sq_dist })
    }

    pub(crate) fn row(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub(crate) fn row_sq(&self, i: usize) -> &[f64] {
        &self.sq_dist[i * self.k..(i + 1) * self.k]
    }
}

/// Neighbors of one query, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    /// Fraction of the `k` neighbors carrying each class.
    pub posterior: Vec<f64>,
}

/// Majority vote over a sorted neighbor list. Ties go to the class whose
/// nearest member is closest, then to the lower class index.
pub(crate) fn vote(neighbors: &[(f64, usize)], labels: &[usize], n_classes: usize) -> Prediction {
    let k = neighbors.len();
    let mut counts = vec![0usize; n_classes];
    let mut nearest = vec![f64::INFINITY; n_classes];
    for &(d, i) in neighbors {
        let y = labels[i];
        counts[y] += 1;
        if d < nearest[y] {
            nearest[y] = d;
        }
    }
    let mut best = 0;
    for c in 1..n_classes {
        if counts[c] > counts[best] || (counts[c] == counts[best] && nearest[c] < nearest[best]) {
            best = c;
        }
    }
    Prediction {
        label: best,
        posterior: counts.iter().map(|&c| c as f64 / k as f64).collect(),
    }
}

/// Exhaustive KNN classifier over a fixed training set.
#[derive(Debug, Clone)]
pub struct KnnModel {
    set: EmbeddedSet,
    k: usize,
    metric: DistanceMetric,
}

impl KnnModel {
    pub fn new(train: &Dataset, k: usize, metric: DistanceMetric) -> Result<Self> {
        if k == 0 || k > train.n_samples() {
            return Err(Error::Config(format!("k = {k} must lie in [1, {}]", train.n_samples())));
        }
        if k % 2 == 0 {
            log::warn!("even k = {k}; ties in the vote are possible");
        }
        Ok(KnnModel { set: EmbeddedSet::new(train, &metric)?, k, metric })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> &DistanceMetric {
        &self.metric
    }

    pub fn n_train(&self) -> usize {
        self.set.len()
    }

    fn nearest(&self, x: &[f64]) -> Result<Vec<(f64, usize)>> {
        let q = self.set.map_query(x)?;
        Ok(k_smallest(&self.set.sq_distances(&q), self.k, None))
    }

    pub fn search(&self, x: &[f64]) -> Result<NeighborList> {
        let nn = self.nearest(x)?;
        Ok(NeighborList {
            indices: nn.iter().map(|e| e.1).collect(),
            distances: nn.iter().map(|e| e.0.sqrt()).collect(),
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        Ok(vote(&self.nearest(x)?, &self.set.labels, self.set.n_classes))
    }

    /// Labels for every row of `queries`; independent of how rayon splits work.
    pub fn predict_batch(&self, queries: &Dataset) -> Result<Vec<usize>> {
        (0..queries.n_samples())
            .into_par_iter()
            .map(|i| self.predict(queries.row(i)).map(|p| p.label))
            .collect()
    }
}

pub fn knn_search(model: &KnnModel, x: &[f64]) -> Result<NeighborList> {
    model.search(x)
}

pub fn knn_predict(model: &KnnModel, x: &[f64]) -> Result<Prediction> {
    model.predict(x)
}

/// Predictions for several `k` at once from a single neighbor scan per query.
/// Used by cross-validation, where every candidate `k` sees the same fold.
pub(crate) fn predict_many_k(
    train: &Dataset,
    queries: &Dataset,
    metric: &DistanceMetric,
    ks: &[usize],
) -> Result<Vec<Vec<usize>>> {
    let set = EmbeddedSet::new(train, metric)?;
    let kmax = ks.iter().copied().max().unwrap_or(1).min(set.len());
    let per_query: Vec<Vec<usize>> = (0..queries.n_samples())
        .into_par_iter()
        .map(|qi| -> Result<Vec<usize>> {
            let q = set.map_query(queries.row(qi))?;
            let nn = k_smallest(&set.sq_distances(&q), kmax, None);
            Ok(ks
                .iter()
                .map(|&k| vote(&nn[..k.min(nn.len())], &set.labels, set.n_classes).label)
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..ks.len()).map(|ki| per_query.iter().map(|p| p[ki]).collect()).collect())
}
