use nalgebra::DMatrix;
use nnclass::lmnn::{self, LmnnConfig, MetricModel};
use nnclass::{Dataset, DistanceMetric, KnnModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_data(rng: &mut ChaCha8Rng, n: usize, d: usize, n_classes: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let labels = (0..n).map(|i| i % n_classes).collect();
    Dataset::from_rows(rows, labels, (0..n_classes).map(|c| format!("c{c}")).collect()).unwrap()
}

fn random_psd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    &a * a.transpose()
}

fn sym_from(v: &[f64], d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_row_slice(d, d, &v[..d * d]);
    (&a + a.transpose()) * 0.5
}

/// Loss written as the plain triple sum over every differently labeled `l`.
fn loss_oracle(m: &DMatrix<f64>, mu: f64, train: &Dataset, k_t: usize) -> f64 {
    let metric = DistanceMetric::Mahalanobis(m.clone());
    let targets = target_oracle(train, k_t);
    let dist = |a: usize, b: usize| metric.squared_distance(train.row(a), train.row(b)).unwrap();
    let mut pull = 0.0;
    let mut push = 0.0;
    for i in 0..train.n_samples() {
        for &j in &targets[i] {
            pull += dist(i, j);
            for l in 0..train.n_samples() {
                if train.label(l) != train.label(i) {
                    push += (1.0 + dist(i, j) - dist(i, l)).max(0.0);
                }
            }
        }
    }
    (1.0 - mu) * pull + mu * push
}

/// Same-class neighbors by full sort on `(distance, index)`.
fn target_oracle(train: &Dataset, k_t: usize) -> Vec<Vec<usize>> {
    (0..train.n_samples())
        .map(|i| {
            let mut c: Vec<(f64, usize)> = (0..train.n_samples())
                .filter(|&j| j != i && train.label(j) == train.label(i))
                .map(|j| (train.row(i).iter().zip(train.row(j)).map(|(a, b)| (a - b) * (a - b)).sum(), j))
                .collect();
            c.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            c.into_iter().take(k_t).map(|e| e.1).collect()
        })
        .collect()
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let h = 1e-6;
    let mut checked = 0;
    for _ in 0..20 {
        let d = rng.gen_range(2..=4);
        let train = random_data(&mut rng, 18, d, 2);
        let targets = lmnn::select_target_neighbors(&train, 2).unwrap();
        let m = random_psd(&mut rng, d) + DMatrix::identity(d, d) * 0.2;
        let base = lmnn::loss_and_subgradient(&MetricModel::from_matrix(m.clone(), 0.5).unwrap(), &train, &targets).unwrap();
        for _ in 0..4 {
            let (a, b) = (rng.gen_range(0..d), rng.gen_range(0..d));
            let mut e = DMatrix::zeros(d, d);
            e[(a, b)] += 1.0;
            e[(b, a)] += 1.0;
            let plus = lmnn::loss_and_subgradient(&MetricModel::from_matrix(&m + &e * h, 0.5).unwrap(), &train, &targets).unwrap();
            let minus = lmnn::loss_and_subgradient(&MetricModel::from_matrix(&m - &e * h, 0.5).unwrap(), &train, &targets).unwrap();
            // A hinge switching inside the stencil makes the loss non-smooth there.
            if plus.active != base.active || minus.active != base.active {
                continue;
            }
            let fd = (plus.loss - minus.loss) / (2.0 * h);
            let analytic = base.gradient.component_mul(&e).sum();
            assert!((fd - analytic).abs() <= 1e-4 * (1.0 + analytic.abs()), "fd {fd} vs {analytic}");
            checked += 1;
        }
    }
    assert!(checked >= 60, "only {checked} smooth points checked");
}

#[test]
fn loss_matches_triple_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let d = rng.gen_range(1..=4);
        let train = random_data(&mut rng, 24, d, 3);
        let m = random_psd(&mut rng, d);
        let mu = rng.gen_range(0.1..0.9);
        let targets = lmnn::select_target_neighbors(&train, 3).unwrap();
        let eval = lmnn::loss_and_subgradient(&MetricModel::from_matrix(m.clone(), mu).unwrap(), &train, &targets).unwrap();
        let oracle = loss_oracle(&m, mu, &train, 3);
        assert!((eval.loss - oracle).abs() <= 1e-9 * (1.0 + oracle), "{} vs {oracle}", eval.loss);
    }
}

#[test]
fn active_triples_are_exactly_the_margin_violators() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let train = random_data(&mut rng, 20, 2, 2);
    let m = random_psd(&mut rng, 2);
    let model = MetricModel::from_matrix(m, 0.5).unwrap();
    let targets = lmnn::select_target_neighbors(&train, 2).unwrap();
    let eval = lmnn::loss_and_subgradient(&model, &train, &targets).unwrap();
    let dist = |a: usize, b: usize| lmnn::squared_distance(&model, train.row(a), train.row(b)).unwrap();
    let mut expect = Vec::new();
    for i in 0..20 {
        for &j in targets.targets(i) {
            for l in 0..20 {
                if train.label(l) != train.label(i) && dist(i, l) <= dist(i, j) + 1.0 {
                    expect.push((i, j, l));
                }
            }
        }
    }
    let mut got: Vec<(usize, usize, usize)> = eval.active.iter().map(|t| (t.i, t.j, t.l)).collect();
    got.sort_unstable();
    expect.sort_unstable();
    assert_eq!(got, expect);
}

#[test]
fn projection_is_nearest_psd_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let d = rng.gen_range(1..=5);
        let a = sym_from(&(0..d * d).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<_>>(), d);
        let p = lmnn::project_psd(&a).unwrap();
        assert!(p.clone().symmetric_eigenvalues().min() >= -1e-10);
        let dist = (&a - &p).norm();
        for _ in 0..200 {
            let b = random_psd(&mut rng, d) * rng.gen_range(0.0..3.0);
            assert!(dist <= (&a - &b).norm() + 1e-10);
        }
        assert!((lmnn::project_psd(&p).unwrap() - &p).norm() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pseudo_metric_axioms(v in prop::collection::vec(-2.0..2.0f64, 9), pts in prop::collection::vec(-3.0..3.0f64, 9)) {
        let m = lmnn::project_psd(&sym_from(&v, 3)).unwrap();
        let model = MetricModel::from_matrix(m, 0.5).unwrap();
        let (x, y, z) = (&pts[0..3], &pts[3..6], &pts[6..9]);
        let d = |a: &[f64], b: &[f64]| lmnn::squared_distance(&model, a, b).unwrap();
        prop_assert!(d(x, y) >= -1e-12);
        prop_assert!(d(x, x).abs() <= 1e-12);
        prop_assert!((d(x, y) - d(y, x)).abs() <= 1e-12);
        let s = |a, b| d(a, b).max(0.0).sqrt();
        prop_assert!(s(x, z) <= s(x, y) + s(y, z) + 1e-9);
    }

    #[test]
    fn loss_is_continuous_in_m(v in prop::collection::vec(-1.0..1.0f64, 4), e in prop::collection::vec(-1.0..1.0f64, 4), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = random_data(&mut rng, 12, 2, 2);
        let targets = lmnn::select_target_neighbors(&train, 1).unwrap();
        let m = sym_from(&v, 2);
        let e = sym_from(&e, 2);
        let at = |mm: DMatrix<f64>| lmnn::loss_and_subgradient(&MetricModel::from_matrix(mm, 0.5).unwrap(), &train, &targets).unwrap().loss;
        let l0 = at(m.clone());
        // Lipschitz bound: every distance moves by at most ‖E‖·‖x_a − x_b‖².
        for h in [1e-3, 1e-6] {
            prop_assert!((at(&m + &e * h) - l0).abs() <= h * 12.0 * 12.0 * 32.0 * (1.0 + e.norm()));
        }
    }
}

#[test]
fn descent_history_and_psd_iterates() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..5 {
        let train = random_data(&mut rng, 40, 3, 3);
        let model = lmnn::fit(&train, &LmnnConfig { max_iter: 60, ..LmnnConfig::default() }).unwrap();
        for w in model.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(model.history.len(), model.min_eigenvalues.len() + 1);
        assert!(model.min_eigenvalues.iter().all(|&e| e >= -1e-10));
        let l = model.l.as_ref().unwrap();
        for a in 0..10 {
            for b in 0..10 {
                let diff: Vec<f64> = train.row(a).iter().zip(train.row(b)).map(|(p, q)| p - q).collect();
                let ld = l * DMatrix::from_column_slice(3, 1, &diff);
                let q = lmnn::squared_distance(&model, train.row(a), train.row(b)).unwrap();
                assert!((ld.norm_squared() - q).abs() <= 1e-9 * (1.0 + q));
            }
        }
    }
}

#[test]
fn targets_match_full_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for grid in [false, true] {
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..30)
                .map(|_| (0..2).map(|_| if grid { f64::from(rng.gen_range(0..3)) } else { rng.gen_range(-1.0..1.0) }).collect())
                .collect();
            let mut labels: Vec<usize> = (0..30).map(|_| rng.gen_range(0..2)).collect();
            labels[0] = 0;
            labels[1] = 1;
            let train = Dataset::from_rows(rows, labels, vec!["a".into(), "b".into()]).unwrap();
            let k_t = lmnn::feasible_k_t(&train, 3);
            if k_t == 0 {
                continue;
            }
            let map = lmnn::select_target_neighbors(&train, k_t).unwrap();
            let oracle = target_oracle(&train, k_t);
            for i in 0..30 {
                assert_eq!(map.targets(i), oracle[i].as_slice());
            }
        }
    }
}

#[test]
fn too_small_class_is_rejected() {
    let train = Dataset::from_rows(
        vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
        vec![0, 0, 0, 0, 1],
        vec!["a".into(), "rare".into()],
    )
    .unwrap();
    let err = lmnn::select_target_neighbors(&train, 1).unwrap_err().to_string();
    assert!(err.contains("rare"), "{err}");
    assert_eq!(lmnn::feasible_k_t(&train, 3), 0);
}

#[test]
fn one_dimensional_optimum_matches_grid_search() {
    // Classes {0, 0.1} and {0.05, 0.15}. Every hinge is active for m < 80,
    // where the loss is 4 + 0.03·m, so the optimum on m ≥ 0 is m = 0.
    let train = Dataset::from_rows(
        vec![vec![0.0], vec![0.1], vec![0.05], vec![0.15]],
        vec![0, 0, 1, 1],
        vec!["A".into(), "B".into()],
    )
    .unwrap();
    let targets = lmnn::select_target_neighbors(&train, 1).unwrap();
    let loss_at = |m: f64| {
        lmnn::loss_and_subgradient(&MetricModel::from_matrix(DMatrix::from_element(1, 1, m), 0.5).unwrap(), &train, &targets)
            .unwrap()
            .loss
    };
    let grid: Vec<(f64, f64)> = (0..=10_000).map(|s| s as f64 * 0.01).map(|m| (m, loss_at(m))).collect();
    for &(m, l) in grid.iter().filter(|(m, _)| *m <= 40.0) {
        assert!((l - (4.0 + 0.03 * m)).abs() <= 1e-12);
    }
    let (best_m, best_loss) = grid.iter().copied().fold((f64::NAN, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    assert_eq!(best_m, 0.0);

    let fitted = lmnn::fit(&train, &LmnnConfig { k_t: 1, max_iter: 500, ..LmnnConfig::default() }).unwrap();
    let m = fitted.m[(0, 0)];
    assert!((0.0..=1e-3).contains(&m), "m = {m}");
    assert!((fitted.history.last().unwrap() - best_loss).abs() <= 1e-3);
}

#[test]
fn noisy_axis_is_suppressed() {
    // Class carried by axis 0; axis 1 is wide noise that misleads Euclidean KNN.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut draw = |n: usize| {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let c = i % 2;
            rows.push(vec![c as f64 + rng.gen_range(-0.3..0.3), rng.gen_range(-5.0..5.0)]);
            labels.push(c);
        }
        Dataset::from_rows(rows, labels, vec!["a".into(), "b".into()]).unwrap()
    };
    let train = draw(80);
    let test = draw(200);
    let model = lmnn::fit(&train, &LmnnConfig::default()).unwrap();
    let acc = |metric: DistanceMetric| {
        let knn = KnnModel::new(&train, 3, metric).unwrap();
        let pred = knn.predict_batch(&test).unwrap();
        pred.iter().zip(test.labels()).filter(|(p, t)| p == t).count() as f64 / test.n_samples() as f64
    };
    let euclid = acc(DistanceMetric::Euclidean);
    let learned = acc(lmnn::export_metric(&model));
    assert!(learned >= euclid, "learned {learned} < euclidean {euclid}");
    assert!(model.m[(0, 0)] > model.m[(1, 1)]);
}

#[test]
fn exported_metric_reproduces_loss_and_identity_is_euclidean() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let train = random_data(&mut rng, 30, 3, 2);
    let model = lmnn::fit(&train, &LmnnConfig { max_iter: 40, ..LmnnConfig::default() }).unwrap();
    let exported = lmnn::export_metric(&model);
    for a in 0..30 {
        for b in 0..30 {
            let q = lmnn::squared_distance(&model, train.row(a), train.row(b)).unwrap();
            assert!((exported.squared_distance(train.row(a), train.row(b)).unwrap() - q).abs() <= 1e-9 * (1.0 + q));
        }
    }
    let DistanceMetric::Mahalanobis(m) = &exported else { panic!("expected a Mahalanobis metric") };
    let oracle = loss_oracle(m, model.mu, &train, 3);
    assert!((model.history.last().unwrap() - oracle).abs() <= 1e-9 * (1.0 + oracle));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    lmnn::write_metric_csv(&model.m, &path).unwrap();
    assert_eq!(lmnn::read_metric_csv(&path).unwrap(), model.m);

    let test = random_data(&mut rng, 50, 3, 2);
    let eu = KnnModel::new(&train, 3, DistanceMetric::Euclidean).unwrap().predict_batch(&test).unwrap();
    let id = KnnModel::new(&train, 3, lmnn::export_metric(&MetricModel::identity(3, 0.5))).unwrap().predict_batch(&test).unwrap();
    assert_eq!(eu, id);
}
