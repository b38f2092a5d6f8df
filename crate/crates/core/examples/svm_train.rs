//! Soft-margin SVM: a binary linear machine with its margin geometry, then an
//! RBF one-vs-one model on three classes.

use nnclass::svm::{fit_multiclass, solve_binary, KernelSpec, SvmConfig};
use nnclass::Dataset;

fn main() -> nnclass::Result<()> {
    let x = [0.0, 0.0, 1.0, 0.5, 0.5, 1.0, 3.0, 3.0, 4.0, 2.5, 2.5, 4.0];
    let y = [-1, -1, -1, 1, 1, 1];
    let m = solve_binary(&x, 2, &y, &SvmConfig::new(1000.0, KernelSpec::Linear))?;
    let w: Vec<f64> = (0..2)
        .map(|f| (0..6).map(|i| m.alpha[i] * f64::from(y[i]) * x[2 * i + f]).sum())
        .collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("converged {} after {} updates, KKT gap {:.2e}", m.converged, m.iterations, m.kkt_gap);
    println!("support vectors {:?}, w = {w:.4?}, b = {:.4}, margin width {:.4}", m.support_indices, m.b, 2.0 / norm);
    for i in &m.support_indices {
        let (_, score) = m.decide(&x[2 * i..2 * i + 2])?;
        println!("  y·f(x_{i}) = {:.4}", f64::from(y[*i]) * score);
    }

    // Rings: inner class 0, middle class 1, outer class 2.
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, r) in [0.5, 2.0, 3.5].iter().enumerate() {
        for i in 0..16 {
            let a = i as f64 * std::f64::consts::TAU / 16.0;
            rows.push(vec![r * a.cos(), r * a.sin()]);
            labels.push(c);
        }
    }
    let data = Dataset::from_rows(rows, labels, vec!["inner".into(), "middle".into(), "outer".into()])?;
    let model = fit_multiclass(&data, &SvmConfig::new(10.0, KernelSpec::Rbf { gamma: 1.0 }))?;
    let pred = model.predict_batch(&data)?;
    let correct = pred.iter().zip(data.labels()).filter(|(p, t)| p == t).count();
    println!("{} pairwise machines, training accuracy {correct}/{}", model.pairwise_models.len(), data.n_samples());
    for z in [[0.0, 0.3], [1.4, 1.4], [0.0, -3.6]] {
        println!("  {z:?} -> {}", data.class_names()[model.predict(&z)?]);
    }
    Ok(())
}
