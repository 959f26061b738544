//! Runs the heterogeneous three-node benchmark and prints the accuracy of
//! every scheme.
//!
//! ```text
//! cargo run --release -p chainsentry-core --example benchmark [seed ...]
//! ```

use chainsentry::collab::Scheme;
use chainsentry::experiment::{run_benchmark, BenchmarkConfig};

fn main() -> chainsentry::Result<()> {
    let mut seeds: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if seeds.is_empty() {
        seeds = vec![7, 13, 42];
    }
    let mut totals = [0.0; 3];
    println!("{:>6}  {:>8}  {:>8}  {:>8}", "seed", "pclm", "clm", "llm");
    for &seed in &seeds {
        let report = run_benchmark(&BenchmarkConfig::heterogeneous(seed), &Scheme::ALL)?;
        let row: Vec<f64> = Scheme::ALL
            .iter()
            .map(|&s| 100.0 * report.get(s).map_or(f64::NAN, |r| r.mean_accuracy))
            .collect();
        for (t, v) in totals.iter_mut().zip(&row) {
            *t += v;
        }
        println!("{seed:>6}  {:>8.2}  {:>8.2}  {:>8.2}", row[0], row[1], row[2]);
    }
    let n = seeds.len() as f64;
    println!("{:>6}  {:>8.2}  {:>8.2}  {:>8.2}", "mean", totals[0] / n, totals[1] / n, totals[2] / n);
    Ok(())
}
