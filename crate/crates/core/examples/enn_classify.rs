//! Extended nearest neighbor: class-wise statistics, the incremental decision
//! rule, and a check against the direct recomputation.

use nnclass::enn::EnnModel;
use nnclass::{Dataset, DistanceMetric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> nnclass::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // A dense class next to a sparse one: plain KNN tends to favor the dense side.
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..40 {
        rows.push(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        labels.push(0);
    }
    for _ in 0..10 {
        rows.push(vec![rng.gen_range(0.5..3.5), rng.gen_range(-1.5..1.5)]);
        labels.push(1);
    }
    let train = Dataset::from_rows(rows, labels, vec!["dense".into(), "sparse".into()])?;

    let model = EnnModel::fit(&train, 3, &DistanceMetric::Euclidean)?;
    let stats = model.stats();
    println!("T = {:.3?} over class sizes {:?}", stats.t, stats.counts);

    let mut agree = 0;
    let queries: Vec<[f64; 2]> = (0..25).map(|_| [rng.gen_range(-1.5..3.5), rng.gen_range(-1.5..1.5)]).collect();
    for z in &queries {
        let inc = model.predict_incremental(z)?;
        let direct = model.predict_direct(z)?;
        agree += usize::from(inc.label == direct.label);
    }
    println!("incremental and direct rules agree on {agree}/{} queries", queries.len());

    let z = [0.9, 0.1];
    let deltas = model.deltas(&z)?;
    let p = model.predict_incremental(&z)?;
    println!("z = {z:?}: k_i = {:?}, delta_n = {:?}", deltas.k_i, deltas.delta_n);
    println!("  scores {:.4?} -> {}", p.scores, train.class_names()[p.label]);
    Ok(())
}
