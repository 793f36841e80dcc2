//! A scaled-down version of the observation ablation: the same episodes,
//! four observation settings, one model each.
//!
//!     cargo run --release --example ablation [train_count] [eval_count]
//!
//! The defaults finish in a few minutes; `solnav ablate` runs the full size.

use solnav::experiment::{ablation_table, run_ablation, ExperimentConfig};

fn main() -> solnav::Result<()> {
    let arg = |i: usize, d: u64| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let mut cfg = ExperimentConfig::default();
    cfg.train_suite.count = arg(1, 100);
    cfg.eval_suite.count = arg(2, 30);
    let rows = run_ablation(&cfg)?;
    print!("{}", ablation_table(&rows));
    for r in &rows {
        println!("{:<11} {} samples, {:.0} s", r.variant.label(), r.outcome.train_samples, r.outcome.seconds);
    }
    Ok(())
}
