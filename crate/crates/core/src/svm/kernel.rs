use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::ops::Deref;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::sq_euclid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Polynomial { degree: u32, coef0: f64 },
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::Config(format!("RBF gamma must be positive, got {gamma}")))
            }
            KernelSpec::Polynomial { degree: 0, .. } => Err(Error::Config("polynomial degree must be ≥ 1".into())),
            KernelSpec::Polynomial { coef0, .. } if !coef0.is_finite() => {
                Err(Error::Config(format!("polynomial coef0 must be finite, got {coef0}")))
            }
            _ => Ok(()),
        }
    }

    /// Unchecked evaluation; callers validate the spec and dimensions once.
    #[inline]
    pub(crate) fn apply(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Polynomial { degree, coef0 } => (dot(x, y) + coef0).powi(degree as i32),
            KernelSpec::Rbf { gamma } => (-gamma * sq_euclid(x, y)).exp(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            KernelSpec::Linear => "linear".into(),
            KernelSpec::Polynomial { degree, coef0 } => format!("poly(degree={degree};coef0={coef0})"),
            KernelSpec::Rbf { gamma } => format!("rbf(gamma={gamma:.6})"),
        }
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.validate()?;
    Error::check_dim(x.len(), y.len())?;
    Ok(spec.apply(x, y))
}

/// `1 / (d · mean per-feature variance)`. Falls back to `1/d` when every
/// feature is constant.
pub fn auto_gamma(data: &Dataset) -> f64 {
    let n = data.n_samples() as f64;
    let d = data.n_features();
    let mut total = 0.0;
    for f in 0..d {
        let mean = data.rows().map(|r| r[f]).sum::<f64>() / n;
        total += data.rows().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n;
    }
    let mean_var = total / d as f64;
    if mean_var > 0.0 {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0 / d as f64
    }
}

/// Problems up to this size keep the whole Gram matrix in memory.
pub(crate) const FULL_GRAM_LIMIT: usize = 4000;
const LRU_BUDGET_BYTES: usize = 512 << 20;

pub(crate) enum RowRef<'a> {
    Borrowed(&'a [f64]),
    Shared(Rc<[f64]>),
}

impl Deref for RowRef<'_> {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        match self {
            RowRef::Borrowed(s) => s,
            RowRef::Shared(r) => r,
        }
    }
}

struct LruRows {
    rows: HashMap<usize, (Rc<[f64]>, u64)>,
    by_age: BTreeMap<u64, usize>,
    tick: u64,
    capacity: usize,
}

enum Storage {
    Full(Vec<f64>),
    Lru(RefCell<LruRows>),
}

/// Kernel rows for one training problem: a dense Gram matrix for small `m`,
/// an LRU of computed rows beyond that.
pub(crate) struct KernelCache<'a> {
    points: &'a [f64],
    dim: usize,
    m: usize,
    kernel: KernelSpec,
    diag: Vec<f64>,
    storage: Storage,
}

impl<'a> KernelCache<'a> {
    pub(crate) fn new(points: &'a [f64], dim: usize, kernel: &KernelSpec) -> Self {
        Self::with_limit(points, dim, kernel, FULL_GRAM_LIMIT)
    }

    pub(crate) fn with_limit(points: &'a [f64], dim: usize, kernel: &KernelSpec, full_limit: usize) -> Self {
        let m = points.len() / dim;
        let point = |i: usize| &points[i * dim..(i + 1) * dim];
        let diag = (0..m).map(|i| kernel.apply(point(i), point(i))).collect();
        let storage = if m <= full_limit {
            let mut gram = vec![0.0; m * m];
            for i in 0..m {
                for j in i..m {
                    let v = kernel.apply(point(i), point(j));
                    gram[i * m + j] = v;
                    gram[j * m + i] = v;
                }
            }
            Storage::Full(gram)
        } else {
            let capacity = (LRU_BUDGET_BYTES / (8 * m.max(1))).max(2);
            Storage::Lru(RefCell::new(LruRows {
                rows: HashMap::new(),
                by_age: BTreeMap::new(),
                tick: 0,
                capacity,
            }))
        };
        KernelCache { points, dim, m, kernel: kernel.clone(), diag, storage }
    }

    pub(crate) fn len(&self) -> usize {
        self.m
    }

    pub(crate) fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub(crate) fn row(&self, i: usize) -> RowRef<'_> {
        match &self.storage {
            Storage::Full(gram) => RowRef::Borrowed(&gram[i * self.m..(i + 1) * self.m]),
            Storage::Lru(cell) => {
                let mut lru = cell.borrow_mut();
                lru.tick += 1;
                let tick = lru.tick;
                if let Some((row, age)) = lru.rows.get_mut(&i) {
                    let row = row.clone();
                    let old = std::mem::replace(age, tick);
                    lru.by_age.remove(&old);
                    lru.by_age.insert(tick, i);
                    return RowRef::Shared(row);
                }
                if lru.rows.len() >= lru.capacity {
                    if let Some((_, victim)) = lru.by_age.pop_first() {
                        lru.rows.remove(&victim);
                    }
                }
                let xi = &self.points[i * self.dim..(i + 1) * self.dim];
                let row: Rc<[f64]> = self
                    .points
                    .chunks_exact(self.dim)
                    .map(|xj| self.kernel.apply(xi, xj))
                    .collect();
                lru.rows.insert(i, (row.clone(), tick));
                lru.by_age.insert(tick, i);
                RowRef::Shared(row)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(kernel_eval(&KernelSpec::Linear, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert_eq!(kernel_eval(&KernelSpec::Rbf { gamma: 3.7 }, &[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        let v = kernel_eval(&KernelSpec::Rbf { gamma: 0.5 }, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-12);
        let p = kernel_eval(&KernelSpec::Polynomial { degree: 2, coef0: 1.0 }, &[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(p, 144.0);
    }

    #[test]
    fn bad_specs() {
        assert!(kernel_eval(&KernelSpec::Rbf { gamma: 0.0 }, &[0.0], &[0.0]).is_err());
        assert!(kernel_eval(&KernelSpec::Rbf { gamma: -1.0 }, &[0.0], &[0.0]).is_err());
        assert!(kernel_eval(&KernelSpec::Polynomial { degree: 0, coef0: 0.0 }, &[0.0], &[0.0]).is_err());
        assert!(kernel_eval(&KernelSpec::Linear, &[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn lru_rows_match_full_gram() {
        let pts: Vec<f64> = (0..30).map(|i| ((i * 37) % 11) as f64 * 0.1).collect();
        let k = KernelSpec::Rbf { gamma: 0.7 };
        let full = KernelCache::new(&pts, 3, &k);
        let lru = KernelCache::with_limit(&pts, 3, &k, 0);
        for &i in &[0, 3, 9, 3, 0, 5, 7, 1, 2, 9] {
            assert_eq!(&*full.row(i), &*lru.row(i));
        }
        assert_eq!(full.diag(), lru.diag());
    }

    #[test]
    fn serde_roundtrip() {
        let k = KernelSpec::Polynomial { degree: 3, coef0: 0.5 };
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(serde_json::from_str::<KernelSpec>(&s).unwrap(), k);
        let r: KernelSpec = serde_json::from_str(r#"{"kind":"rbf","gamma":0.25}"#).unwrap();
        assert_eq!(r, KernelSpec::Rbf { gamma: 0.25 });
    }
}
