//! Learn a Mahalanobis metric with LMNN and compare KNN under it with plain
//! Euclidean KNN. The learned matrix is written to `lmnn_metric.csv`.

use nnclass::dataset::{split_stratified, SplitSpec};
use nnclass::lmnn::{self, LmnnConfig};
use nnclass::{Dataset, DistanceMetric, KnnModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn accuracy(train: &Dataset, test: &Dataset, metric: DistanceMetric) -> nnclass::Result<f64> {
    let pred = KnnModel::new(train, 3, metric)?.predict_batch(test)?;
    Ok(pred.iter().zip(test.labels()).filter(|(p, t)| p == t).count() as f64 / pred.len() as f64)
}

fn main() -> nnclass::Result<()> {
    // Class is decided by the first coordinate; the other three are noise.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..120 {
        let c = i % 2;
        let mut row = vec![c as f64 + rng.gen_range(-0.45..0.45)];
        row.extend((0..3).map(|_| rng.gen_range(-2.0..2.0)));
        rows.push(row);
        labels.push(c);
    }
    let data = Dataset::from_rows(rows, labels, vec!["a".into(), "b".into()])?;
    let split = split_stratified(&data, &SplitSpec::default())?;

    let model = lmnn::fit(&split.train, &LmnnConfig::default())?;
    println!(
        "{} iterations, loss {:.2} -> {:.2}, converged {}",
        model.iterations,
        model.history[0],
        model.history.last().unwrap(),
        model.converged
    );
    println!("M = {:.4}", model.m);

    println!("3-NN test accuracy, euclidean: {:.3}", accuracy(&split.train, &split.test, DistanceMetric::Euclidean)?);
    println!("3-NN test accuracy, learned:   {:.3}", accuracy(&split.train, &split.test, lmnn::export_metric(&model))?);

    lmnn::write_metric_csv(&model.m, "lmnn_metric.csv")?;
    println!("wrote lmnn_metric.csv");
    Ok(())
}
