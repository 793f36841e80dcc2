//! Trains the action predictor on simulated corridor and room episodes, then
//! drives held-out episodes closed loop with it.
//!
//!     cargo run --release --example learn_and_navigate [train_count] [eval_count] [training_seed]
//!
//! With no arguments this is the 400/50 experiment at a 1 m success radius.

use solnav::experiment::{run_experiment, ExperimentConfig};
use solnav::metrics::format_table;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> solnav::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.train_suite.count = arg(1, cfg.train_suite.count);
    cfg.eval_suite.count = arg(2, cfg.eval_suite.count);
    cfg.training.rng_seed = arg(3, cfg.training.rng_seed);

    let (model, outcome) = run_experiment(&cfg)?;
    let report = &outcome.report;
    println!(
        "{} training samples ({} held out), kept {} of {}",
        outcome.train_samples,
        report.heldout_samples,
        report.selection,
        report.epochs.len()
    );
    println!("selected loss {:.4} (started at {:.4})", report.selected_loss, report.initial_train_loss);
    print!("{}", format_table(&[("learned".to_string(), outcome.summary)]));
    let failed: Vec<_> = outcome.records.iter().filter(|r| !r.success).map(|r| r.episode_id.as_str()).collect();
    println!("missed: {}", if failed.is_empty() { "none".to_string() } else { failed.join(", ") });
    println!("{} action heads, {:.1} s", model.n_a(), outcome.seconds);
    Ok(())
}
