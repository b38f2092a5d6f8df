//! Exhaustive k-nearest-neighbor search and majority-vote prediction, under
//! Euclidean and a diagonal Mahalanobis metric.

use nalgebra::DMatrix;
use nnclass::{Dataset, DistanceMetric, KnnModel};

fn main() -> nnclass::Result<()> {
    // Two classes separated along x; y is noise with a large spread.
    let rows = vec![
        vec![0.0, 0.0],
        vec![0.4, 3.0],
        vec![0.2, -2.5],
        vec![0.3, 1.0],
        vec![2.0, 2.8],
        vec![2.3, -3.0],
        vec![2.1, 0.2],
        vec![1.9, -0.8],
    ];
    let labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
    let train = Dataset::from_rows(rows, labels, vec!["left".into(), "right".into()])?;
    let query = [1.2, 2.9];

    let euclid = KnnModel::new(&train, 3, DistanceMetric::Euclidean)?;
    let hits = euclid.search(&query)?;
    println!("euclidean neighbors {:?} at {:.3?}", hits.indices, hits.distances);
    let p = euclid.predict(&query)?;
    println!("  -> class {} posterior {:.3?}", train.class_names()[p.label], p.posterior);

    // Shrinking the noisy axis lets x decide.
    let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.01]);
    let scaled = KnnModel::new(&train, 3, DistanceMetric::mahalanobis(m)?)?;
    let hits = scaled.search(&query)?;
    println!("mahalanobis neighbors {:?} at {:.3?}", hits.indices, hits.distances);
    let p = scaled.predict(&query)?;
    println!("  -> class {} posterior {:.3?}", train.class_names()[p.label], p.posterior);
    Ok(())
}
