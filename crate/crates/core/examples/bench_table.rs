//! Run the benchmark harness on two generated datasets and print the table.
//!
//! The CSVs and the manifest are written to a temporary directory, so this
//! runs without any downloaded data. For the real benchmark use the `bench`
//! binary with `manifests/table1.json`.

use std::fmt::Write as _;

use nnclass::bench::{self, BenchManifest, EmitOptions, RunOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blobs(rng: &mut ChaCha8Rng, n: usize, classes: usize, spread: f64) -> String {
    let mut s = String::from("x,y,z,label\n");
    for i in 0..n {
        let c = i % classes;
        let center = c as f64 * 1.5;
        let _ = writeln!(
            s,
            "{:.4},{:.4},{:.4},c{c}",
            center + rng.gen_range(-spread..spread),
            -center + rng.gen_range(-spread..spread),
            rng.gen_range(-2.0..2.0)
        );
    }
    s
}

fn main() -> nnclass::Result<()> {
    let dir = std::env::temp_dir().join("nnclass-bench-example");
    std::fs::create_dir_all(&dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    std::fs::write(dir.join("easy.csv"), blobs(&mut rng, 90, 3, 0.8))?;
    std::fs::write(dir.join("hard.csv"), blobs(&mut rng, 120, 2, 1.6))?;
    std::fs::write(
        dir.join("manifest.json"),
        r#"{
  "datasets": [{"id": "easy", "path": "easy.csv"}, {"id": "hard", "path": "hard.csv"}],
  "protocol": {"test_fraction": 0.3, "seed": 1, "folds": 3, "repeats": 3},
  "grids": {"svm": {"c": [1, 10]}, "lmnn": {"max_iter": 50}},
  "outputs": "out"
}"#,
    )?;

    let manifest = BenchManifest::load(dir.join("manifest.json"))?;
    let outcome = bench::run(&manifest, &RunOptions::default())?;
    bench::emit(&outcome, &manifest.outputs, &EmitOptions::default())?;
    for r in outcome.reports.iter().filter(|r| r.repeat == 0) {
        println!("{:>5} {:>5} {:<40} acc {:.3}", r.dataset, r.algorithm.name(), r.params, r.accuracy);
    }
    println!();
    print!("{}", outcome.table_markdown().split("\n## ").next().unwrap_or_default());
    println!("\nfiles in {}", manifest.outputs.display());
    Ok(())
}
