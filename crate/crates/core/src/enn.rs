//! Extended nearest neighbor classification.
//!
//! A query `Z` is tentatively added to each class in turn, and the class whose
//! hypothesis leaves the training data most internally coherent wins. The
//! coherence of class `i` is its generalized class-wise statistic `Tᵢ`: the
//! fraction of the `k` nearest-neighbor slots of class-`i` points that are
//! held by class-`i` points (a point is never its own neighbor).
//!
//! [`EnnModel::predict_direct`] rebuilds every statistic over `S ∪ {Z}`.
//! [`EnnModel::predict_incremental`] gets the same argmax from the original
//! statistics plus the neighbor-set changes caused by `Z`:
//!
//! * a training point changes its neighbor set only if `Z` lands strictly
//!   inside its current `k`-th neighbor distance, in which case `Z` replaces
//!   that `k`-th neighbor (`Z` ranks after every training point on ties);
//! * `delta_n[i][i]` counts class-`i` points that trade an other-class `k`-th
//!   neighbor for `Z`, which is a gain only when `Z` is hypothesized as `i`;
//! * `delta_n[i][j]`, `i ≠ j`, counts class-`i` points that lose a same-class
//!   `k`-th neighbor to `Z`, a loss whenever `Z` is not of class `i`.
//!
//! With those counts the incremental score differs from `Θʲ` by a constant
//! independent of `j`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::{k_smallest, sq_euclid, DistanceMetric, EmbeddedSet, NeighborTable};

/// Scores closer than this are treated as tied and resolved by class index.
pub const SCORE_TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ClasswiseStats {
    /// `Tᵢ` per class.
    pub t: Vec<f64>,
    /// `nᵢ` per class.
    pub counts: Vec<usize>,
    pub k: usize,
    /// Row-major `n × k` training-neighbor indices, nearest first.
    pub neighbor_table: Vec<usize>,
    /// Same-class neighbor count of every training point.
    pub same_class: Vec<usize>,
}

impl ClasswiseStats {
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbor_table[i * self.k..(i + 1) * self.k]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnnDeltas {
    /// `kᵢ`: how many of `Z`'s `k` nearest training points belong to class `i`.
    pub k_i: Vec<usize>,
    /// `delta_n[i][j]`: change in class-`i` neighbor memberships when `Z` is
    /// hypothesized as class `j`.
    pub delta_n: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnnPrediction {
    pub label: usize,
    /// `Θʲ` for the direct rule, the incremental objective for the other.
    pub scores: Vec<f64>,
}

pub(crate) fn argmax_with_ties(scores: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..scores.len() {
        if scores[j] > scores[best] + SCORE_TIE_EPS {
            best = j;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct EnnModel {
    set: Arc<EmbeddedSet>,
    stats: ClasswiseStats,
    kth_sq: Vec<f64>,
    kth_same: Vec<bool>,
}

impl EnnModel {
    pub fn fit(train: &Dataset, k: usize, metric: &DistanceMetric) -> Result<Self> {
        let set = Arc::new(EmbeddedSet::new(train, metric)?);
        check_k(&set, k)?;
        let table = NeighborTable::build(&set, k)?;
        Ok(Self::from_table(set, &table, k))
    }

    /// Model for `k ≤ table.k`, reading the first `k` columns of a shared table.
    pub(crate) fn from_table(set: Arc<EmbeddedSet>, table: &NeighborTable, k: usize) -> Self {
        let n = set.len();
        let n_classes = set.n_classes;
        let mut counts = vec![0usize; n_classes];
        let mut same_total = vec![0usize; n_classes];
        let mut neighbor_table = Vec::with_capacity(n * k);
        let mut same_class = Vec::with_capacity(n);
        let mut kth_sq = Vec::with_capacity(n);
        let mut kth_same = Vec::with_capacity(n);
        for i in 0..n {
            let y = set.labels[i];
            let row = &table.row(i)[..k];
            let s = row.iter().filter(|&&j| set.labels[j] == y).count();
            counts[y] += 1;
            same_total[y] += s;
            same_class.push(s);
            neighbor_table.extend_from_slice(row);
            kth_sq.push(table.row_sq(i)[k - 1]);
            kth_same.push(set.labels[row[k - 1]] == y);
        }
        let t = (0..n_classes)
            .map(|c| same_total[c] as f64 / (counts[c] * k) as f64)
            .collect();
        EnnModel {
            set,
            stats: ClasswiseStats { t, counts, k, neighbor_table, same_class },
            kth_sq,
            kth_same,
        }
    }

    pub fn stats(&self) -> &ClasswiseStats {
        &self.stats
    }

    pub fn k(&self) -> usize {
        self.stats.k
    }

    fn deltas_from_sq(&self, sq: &[f64]) -> EnnDeltas {
        let n_classes = self.set.n_classes;
        let mut k_i = vec![0usize; n_classes];
        for (_, i) in k_smallest(sq, self.stats.k, None) {
            k_i[self.set.labels[i]] += 1;
        }
        let mut gained = vec![0usize; n_classes];
        let mut lost = vec![0usize; n_classes];
        for (x, &d) in sq.iter().enumerate() {
            if d < self.kth_sq[x] {
                let y = self.set.labels[x];
                if self.kth_same[x] {
                    lost[y] += 1;
                } else {
                    gained[y] += 1;
                }
            }
        }
        let delta_n = (0..n_classes)
            .map(|i| (0..n_classes).map(|j| if i == j { gained[i] } else { lost[i] }).collect())
            .collect();
        EnnDeltas { k_i, delta_n }
    }

    fn query_sq(&self, z: &[f64]) -> Result<Vec<f64>> {
        let q = self.set.map_query(z)?;
        Ok(self.set.sq_distances(&q))
    }

    pub fn deltas(&self, z: &[f64]) -> Result<EnnDeltas> {
        Ok(self.deltas_from_sq(&self.query_sq(z)?))
    }

    fn incremental_from_sq(&self, sq: &[f64]) -> EnnPrediction {
        let EnnDeltas { k_i, delta_n } = self.deltas_from_sq(sq);
        let k = self.stats.k as f64;
        let n_classes = self.set.n_classes;
        let scores: Vec<f64> = (0..n_classes)
            .map(|j| {
                let nj = self.stats.counts[j] as f64;
                let own = (delta_n[j][j] as f64 + k_i[j] as f64 - k * self.stats.t[j]) / ((nj + 1.0) * k);
                let others: f64 = (0..n_classes)
                    .filter(|&i| i != j)
                    .map(|i| delta_n[i][j] as f64 / (self.stats.counts[i] as f64 * k))
                    .sum();
                own - others
            })
            .collect();
        EnnPrediction { label: argmax_with_ties(&scores), scores }
    }

    pub fn predict_incremental(&self, z: &[f64]) -> Result<EnnPrediction> {
        Ok(self.incremental_from_sq(&self.query_sq(z)?))
    }

    /// Recomputes every `Tᵢʲ` over `S ∪ {Z}` for each hypothesis `j`.
    /// Quadratic in the training size per query; meant for small problems and
    /// for checking the incremental rule.
    pub fn predict_direct(&self, z: &[f64]) -> Result<EnnPrediction> {
        let q = self.set.map_query(z)?;
        let n = self.set.len();
        let k = self.stats.k;
        let point = |i: usize| if i == n { &q[..] } else { self.set.point(i) };

        // Neighbor lists in S' do not depend on the hypothesized label.
        let neighbor_lists: Vec<Vec<usize>> = (0..=n)
            .map(|a| {
                let pa = point(a);
                let mut others: Vec<(f64, usize)> =
                    (0..=n).filter(|&b| b != a).map(|b| (sq_euclid(pa, point(b)), b)).collect();
                others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                others.into_iter().take(k).map(|e| e.1).collect()
            })
            .collect();

        let n_classes = self.set.n_classes;
        let scores: Vec<f64> = (0..n_classes)
            .map(|j| {
                let label = |i: usize| if i == n { j } else { self.set.labels[i] };
                let mut same = vec![0usize; n_classes];
                let mut size = self.stats.counts.clone();
                size[j] += 1;
                for (a, list) in neighbor_lists.iter().enumerate() {
                    let ya = label(a);
                    same[ya] += list.iter().filter(|&&b| label(b) == ya).count();
                }
                (0..n_classes).map(|i| same[i] as f64 / (size[i] * k) as f64).sum()
            })
            .collect();
        Ok(EnnPrediction { label: argmax_with_ties(&scores), scores })
    }

    pub fn predict_batch(&self, queries: &Dataset) -> Result<Vec<usize>> {
        (0..queries.n_samples())
            .into_par_iter()
            .map(|i| self.predict_incremental(queries.row(i)).map(|p| p.label))
            .collect()
    }
}

fn check_k(set: &EmbeddedSet, k: usize) -> Result<()> {
    if k == 0 || k + 1 > set.len() {
        return Err(Error::Config(format!("k = {k} must lie in [1, n−1 = {}]", set.len().saturating_sub(1))));
    }
    Ok(())
}

/// `Iᵣ(x, S)`: 1 when the `r`-th nearest other point of `x` shares its class.
pub fn indicator(universe: &Dataset, x: usize, r: usize, metric: &DistanceMetric) -> Result<u8> {
    let n = universe.n_samples();
    if x >= n {
        return Err(Error::validation(format!("sample {x} not in universe of {n}")));
    }
    if r == 0 || r > n - 1 {
        return Err(Error::validation(format!("rank r = {r} must lie in [1, {}]", n - 1)));
    }
    let set = EmbeddedSet::new(universe, metric)?;
    let sq = set.sq_distances(set.point(x));
    let (_, nn) = k_smallest(&sq, r, Some(x))[r - 1];
    Ok(u8::from(universe.label(nn) == universe.label(x)))
}

pub fn classwise_statistics(train: &Dataset, k: usize, metric: &DistanceMetric) -> Result<ClasswiseStats> {
    if let Some(c) = train.class_counts().iter().position(|&c| c == 0) {
        return Err(Error::validation(format!("class '{}' is empty", train.class_names()[c])));
    }
    Ok(EnnModel::fit(train, k, metric)?.stats)
}

pub fn predict_direct(train: &Dataset, k: usize, metric: &DistanceMetric, z: &[f64]) -> Result<EnnPrediction> {
    EnnModel::fit(train, k, metric)?.predict_direct(z)
}

/// Incremental rule from precomputed statistics. The statistics must have been
/// computed for `train` under `metric`.
pub fn predict_incremental(
    stats: &ClasswiseStats,
    train: &Dataset,
    metric: &DistanceMetric,
    z: &[f64],
) -> Result<EnnPrediction> {
    let set = Arc::new(EmbeddedSet::new(train, metric)?);
    check_k(&set, stats.k)?;
    Error::check_dim(set.len() * stats.k, stats.neighbor_table.len())?;
    let n = set.len();
    let mut kth_sq = Vec::with_capacity(n);
    let mut kth_same = Vec::with_capacity(n);
    for i in 0..n {
        let kth = stats.neighbors(i)[stats.k - 1];
        kth_sq.push(sq_euclid(set.point(i), set.point(kth)));
        kth_same.push(set.labels[kth] == set.labels[i]);
    }
    let model = EnnModel { set, stats: stats.clone(), kth_sq, kth_same };
    model.predict_incremental(z)
}

/// Incremental-rule predictions for several `k` from one neighbor table.
pub(crate) fn predict_many_k(
    train: &Dataset,
    queries: &Dataset,
    metric: &DistanceMetric,
    ks: &[usize],
) -> Result<Vec<Vec<usize>>> {
    let set = Arc::new(EmbeddedSet::new(train, metric)?);
    let kmax = ks.iter().copied().max().unwrap_or(1);
    check_k(&set, kmax)?;
    let table = NeighborTable::build(&set, kmax)?;
    let models: Vec<EnnModel> = ks.iter().map(|&k| EnnModel::from_table(set.clone(), &table, k)).collect();
    let per_query: Vec<Vec<usize>> = (0..queries.n_samples())
        .into_par_iter()
        .map(|qi| -> Result<Vec<usize>> {
            let sq = models[0].query_sq(queries.row(qi))?;
            Ok(models.iter().map(|m| m.incremental_from_sq(&sq).label).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..ks.len()).map(|ki| per_query.iter().map(|p| p[ki]).collect()).collect())
}
