use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::reference::{lookup, REFERENCE};
use super::{Algorithm, RunOutcome};
use crate::error::{Error, Result};

/// Tolerance used when comparing against the reference table.
pub const REFERENCE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Default)]
pub struct EmitOptions {
    /// Fill `wall_time_s` in results.csv. Off by default so that the file is
    /// byte-identical across runs; timings.csv always carries the timings.
    pub wall_time_in_results: bool,
}

/// Creates `dir` if needed and proves it writable, before any work starts.
pub fn check_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"")
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| Error::Config(format!("output directory {} is not writable: {e}", dir.display())))
}

fn display_name(id: &str) -> &str {
    lookup(id).map(|r| r.name).unwrap_or(id)
}

pub(crate) fn render_table(out: &RunOutcome) -> String {
    let mut s = String::new();
    if out.diagnostic {
        s.push_str("# DIAGNOSTIC: accuracies on the training portion\n\n");
        s.push_str("Every cell is scored on the data it was trained on; LMNN cells use 1-NN. ");
        s.push_str("These numbers are not held-out estimates.\n\n");
    } else {
        s.push_str("# Accuracy by dataset and algorithm\n\n");
    }
    let p = &out.protocol;
    let _ = writeln!(
        s,
        "Protocol: stratified {:.0}/{:.0} split, {} repeat(s) from seed {}, {}-fold CV grid selection on the training portion. Cells show mean ± sample std.\n",
        (1.0 - p.test_fraction) * 100.0,
        p.test_fraction * 100.0,
        p.repeats,
        p.seed,
        p.folds
    );
    s.push_str("| Datasets | KNN | ENN | SVM | LMNN |\n|---|---|---|---|---|\n");
    for id in &out.datasets {
        let _ = write!(s, "| {} |", display_name(id));
        for alg in Algorithm::ALL {
            match out.summary(id, alg) {
                Some(c) if c.repeats > 1 => {
                    let _ = write!(s, " {:.4} ± {:.4} |", c.mean, c.std);
                }
                Some(c) => {
                    let _ = write!(s, " {:.4} |", c.mean);
                }
                None => s.push_str(" n/a |"),
            }
        }
        s.push('\n');
    }

    if !out.diagnostic {
        render_reference(out, &mut s);
        render_lmnn_vs_knn(out, &mut s);
    }

    if !out.errors.is_empty() {
        s.push_str("\n## Errors\n\n");
        for e in &out.errors {
            let _ = writeln!(s, "- {}: {}", e.dataset, e.message);
        }
    }
    s
}

fn render_reference(out: &RunOutcome, s: &mut String) {
    if !REFERENCE.iter().any(|row| out.datasets.iter().any(|id| id == row.id)) {
        return;
    }
    s.push_str("\n## Deviation from the published table\n\n");
    s.push_str("Δ = measured mean − published value. LMNN is listed for completeness; the published LMNN column is not a held-out target.\n\n");
    s.push_str("| Datasets | KNN Δ | ENN Δ | SVM Δ | LMNN Δ |\n|---|---|---|---|---|\n");
    let mut within = [0usize; 4];
    let mut measured = [0usize; 4];
    let mut misses = Vec::new();
    for row in &REFERENCE {
        let _ = write!(s, "| {} |", row.name);
        for alg in Algorithm::ALL {
            match out.summary(row.id, alg) {
                Some(c) => {
                    let delta = c.mean - row.accuracy[alg.column()];
                    measured[alg.column()] += 1;
                    let ok = delta.abs() <= REFERENCE_TOLERANCE;
                    if ok {
                        within[alg.column()] += 1;
                    } else if alg != Algorithm::Lmnn {
                        misses.push(format!(
                            "{} {}: measured {:.4}, published {:.4}, Δ {:+.4}",
                            row.name,
                            alg,
                            c.mean,
                            row.accuracy[alg.column()],
                            delta
                        ));
                    }
                    let _ = write!(s, " {delta:+.4}{} |", if ok { "" } else { " ✗" });
                }
                None => s.push_str(" not run |"),
            }
        }
        s.push('\n');
    }
    s.push('\n');
    for alg in Algorithm::ALL {
        let _ = writeln!(
            s,
            "- {alg}: {}/{} published datasets within ±{REFERENCE_TOLERANCE} ({} measured)",
            within[alg.column()],
            REFERENCE.len(),
            measured[alg.column()]
        );
    }
    if !misses.is_empty() {
        s.push_str("\nMisses beyond ±0.05:\n\n");
        for m in misses {
            let _ = writeln!(s, "- {m}");
        }
    }
}

fn render_lmnn_vs_knn(out: &RunOutcome, s: &mut String) {
    let rows: Vec<(&String, f64)> = out
        .datasets
        .iter()
        .filter_map(|id| Some((id, out.summary(id, Algorithm::Lmnn)?.mean - out.summary(id, Algorithm::Knn)?.mean)))
        .collect();
    if rows.is_empty() {
        return;
    }
    s.push_str("\n## Learned metric vs Euclidean KNN\n\n| Datasets | LMNN − KNN |\n|---|---|\n");
    for (id, d) in &rows {
        let _ = writeln!(s, "| {} | {d:+.4} |", display_name(id));
    }
    let not_worse = rows.iter().filter(|(_, d)| *d >= -0.01).count();
    let better = rows.iter().filter(|(_, d)| *d > 0.0).count();
    let _ = writeln!(s, "\n- not worse by more than 0.01 on {not_worse}/{}; strictly better on {better}/{}", rows.len(), rows.len());
}

/// Writes results.csv, table.md, fig5.csv and timings.csv into `dir`.
pub fn emit(out: &RunOutcome, dir: &Path, options: &EmitOptions) -> Result<()> {
    check_output_dir(dir)?;

    let mut w = csv::Writer::from_path(dir.join("results.csv"))?;
    w.write_record(["dataset", "algorithm", "params", "seed", "accuracy", "wall_time_s", "converged"])?;
    for r in &out.reports {
        let wall = if options.wall_time_in_results { format!("{:.3}", r.wall_time_s) } else { String::new() };
        w.write_record([
            r.dataset.as_str(),
            r.algorithm.name(),
            r.params.as_str(),
            &r.seed.to_string(),
            &format!("{:.6}", r.accuracy),
            &wall,
            if r.converged { "true" } else { "false" },
        ])?;
    }
    w.flush()?;

    fs::write(dir.join("table.md"), render_table(out))?;

    let mut w = csv::Writer::from_path(dir.join("fig5.csv"))?;
    w.write_record(["dataset", "algorithm", "accuracy"])?;
    for id in &out.datasets {
        for &alg in &out.algorithms {
            if let Some(c) = out.summary(id, alg) {
                w.write_record([id.as_str(), alg.name(), &format!("{:.6}", c.mean)])?;
            }
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("timings.csv"))?;
    w.write_record(["dataset", "algorithm", "seed", "wall_time_s"])?;
    for r in &out.reports {
        w.write_record([r.dataset.as_str(), r.algorithm.name(), &r.seed.to_string(), &format!("{:.3}", r.wall_time_s)])?;
    }
    w.flush()?;
    Ok(())
}
