use nnclass::dataset::{apply_normalizer, fit_normalizer, kfold, parse_csv, split_stratified, ClassMedianImputer};
use nnclass::{CsvSchema, Dataset, MissingPolicy, SplitSpec};
use proptest::prelude::*;

fn labeled() -> impl Strategy<Value = Dataset> {
    (2usize..=4, 1usize..=4).prop_flat_map(|(n_classes, d)| {
        prop::collection::vec(2usize..=20, n_classes).prop_flat_map(move |sizes| {
            let n: usize = sizes.iter().sum();
            prop::collection::vec(prop::collection::vec(-100.0..100.0f64, d), n).prop_map(move |rows| {
                let labels = sizes.iter().enumerate().flat_map(|(c, &s)| std::iter::repeat(c).take(s)).collect();
                Dataset::from_rows(rows, labels, (0..sizes.len()).map(|c| format!("c{c}")).collect()).unwrap()
            })
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn split_partitions_and_stratifies(data in labeled(), frac in 0.1..0.6f64, seed in any::<u64>()) {
        let spec = SplitSpec { test_fraction: frac, seed, stratified: true };
        let s = split_stratified(&data, &spec).unwrap();
        let mut all: Vec<usize> = s.train_indices.iter().chain(&s.test_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..data.n_samples()).collect::<Vec<_>>());
        let (tr, te) = (s.train.class_counts(), s.test.class_counts());
        for (c, &total) in data.class_counts().iter().enumerate() {
            prop_assert_eq!(tr[c] + te[c], total);
            prop_assert!(tr[c] >= 1 && te[c] >= 1);
            let want = ((total as f64 * frac).round() as usize).clamp(1, total - 1);
            prop_assert_eq!(te[c], want);
        }
        let again = split_stratified(&data, &spec).unwrap();
        prop_assert_eq!(again.test_indices, s.test_indices);
    }

    #[test]
    fn normalizer_uses_training_statistics_only(data in labeled(), seed in any::<u64>()) {
        let s = split_stratified(&data, &SplitSpec { seed, ..SplitSpec::default() }).unwrap();
        let p = fit_normalizer(&s.train).unwrap();
        let tr = apply_normalizer(&p, &s.train).unwrap();
        for j in 0..data.n_features() {
            let col: Vec<f64> = tr.rows().map(|r| r[j]).collect();
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(var < 1e-12 || (var - 1.0).abs() < 1e-9);
        }
        // Test rows move by the same affine map, whatever they contain.
        let te = apply_normalizer(&p, &s.test).unwrap();
        for (raw, out) in s.test.rows().zip(te.rows()) {
            for j in 0..data.n_features() {
                prop_assert!((out[j] - (raw[j] - p.mean[j]) / p.std[j]).abs() < 1e-12);
            }
        }
        prop_assert_eq!(te.labels(), s.test.labels());
    }

    #[test]
    fn folds_cover_each_index_once(data in labeled(), seed in any::<u64>()) {
        let smallest = *data.class_counts().iter().min().unwrap();
        let k = smallest.min(5);
        prop_assume!(k >= 2);
        let folds = kfold(&data, k, seed).unwrap();
        let mut seen = vec![0; data.n_samples()];
        for f in &folds {
            for &i in &f.validation {
                seen[i] += 1;
            }
            prop_assert_eq!(f.train.len() + f.validation.len(), data.n_samples());
            prop_assert!(f.train.iter().all(|i| !f.validation.contains(i)));
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let sizes: Vec<usize> = folds.iter().map(|f| f.validation.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}

#[test]
fn class_median_imputation() {
    let schema = CsvSchema { missing_policy: MissingPolicy::ImputeClassMedian, ..CsvSchema::default() };
    let text = "1,10,a\n3,?,a\n5,30,a\n?,7,b\n100,9,b\n";
    let data = parse_csv(text, "t", &schema).unwrap().dataset;
    assert!(data.has_missing());
    let imp = ClassMedianImputer::fit(&data);
    let filled = imp.apply_labeled(&data).unwrap();
    assert!(!filled.has_missing());
    assert_eq!(filled.row(1), &[3.0, 20.0]);
    assert_eq!(filled.row(3), &[100.0, 7.0]);
    let blind = imp.apply_unlabeled(&data).unwrap();
    assert_eq!(blind.row(3), &[4.0, 7.0]);
}

#[test]
fn dropped_rows_are_counted() {
    let loaded = parse_csv("1,2,a\n?,4,b\n5,6,b\n7,8,a\n", "t", &CsvSchema::default()).unwrap();
    assert_eq!(loaded.dropped_rows, 1);
    assert_eq!(loaded.dataset.n_samples(), 3);
}

#[test]
fn malformed_input_reports_row() {
    let err = parse_csv("1,2,a\n3,x,b\n", "t", &CsvSchema::default()).unwrap_err().to_string();
    assert!(err.contains('2'), "{err}");
    assert!(parse_csv("1,2,a\n3,b\n", "t", &CsvSchema::default()).is_err());
}
