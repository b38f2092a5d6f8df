//! Load a CSV, split it, z-score it on the training part and build CV folds.
//!
//!     cargo run --example dataset_pipeline [path/to/file.csv]
//!
//! Without an argument a small inline table is used.

use nnclass::dataset::{apply_normalizer, fit_normalizer, kfold, load_csv, parse_csv, split_stratified, CsvSchema, SplitSpec};

const INLINE: &str = "\
sepal,petal,kind
5.1,1.4,setosa
4.9,1.4,setosa
4.7,1.3,setosa
5.0,1.5,setosa
5.4,1.7,setosa
7.0,4.7,versicolor
6.4,4.5,versicolor
6.9,4.9,versicolor
5.5,4.0,versicolor
6.5,4.6,versicolor
";

fn main() -> nnclass::Result<()> {
    let schema = CsvSchema::default();
    let loaded = match std::env::args().nth(1) {
        Some(path) => load_csv(path, &schema)?,
        None => parse_csv(INLINE, "inline", &schema)?,
    };
    let data = loaded.dataset;
    println!(
        "{} samples × {} features, classes {:?} (header: {}, dropped rows: {})",
        data.n_samples(),
        data.n_features(),
        data.class_names(),
        loaded.had_header,
        loaded.dropped_rows
    );

    let split = split_stratified(&data, &SplitSpec { test_fraction: 0.3, seed: 7, stratified: true })?;
    println!("train {:?} / test {:?} per class", split.train.class_counts(), split.test.class_counts());

    let norm = fit_normalizer(&split.train)?;
    let train = apply_normalizer(&norm, &split.train)?;
    let test = apply_normalizer(&norm, &split.test)?;
    println!("feature means {:?}", norm.mean);
    println!("first test row after scaling {:?}", test.row(0));

    let folds = kfold(&train, 2, 7)?;
    for (i, f) in folds.iter().enumerate() {
        println!("fold {i}: {} train / {} validation", f.train.len(), f.validation.len());
    }
    Ok(())
}
