//! Scores three hand-made trajectories, writes them in the metrics record
//! format, and reads the file back through the validating reader.
//!
//!     cargo run --example metrics_report

use solnav::metrics::{format_table, read_metrics, spl_term, success, write_metrics, EpisodeRecord, EpisodeResult};

fn main() -> solnav::Result<()> {
    let goal = (4.0, 0.0);
    let results = [
        // Straight to the goal.
        EpisodeResult::from_trajectory("direct", vec![(0.0, 0.0), (2.0, 0.0), (4.0, 0.0)], goal, 4.0, true)?,
        // Gets there by a detour, so success is discounted by path length.
        EpisodeResult::from_trajectory("detour", vec![(0.0, 0.0), (2.0, 2.0), (4.0, 0.5)], goal, 4.0, true)?,
        // Passes the goal and keeps going: oracle success only.
        EpisodeResult::from_trajectory("overshoot", vec![(0.0, 0.0), (4.0, 0.2), (7.0, 0.0)], goal, 4.0, true)?,
    ];
    let radius = 1.0;
    for r in &results {
        println!(
            "{:<9}  walked {:.2} m, ended {:.2} m from the goal, success {}, SPL term {:.3}",
            r.episode_id,
            r.path_length,
            solnav::metrics::navigation_error(r),
            success(r, radius),
            spl_term(r, radius)?
        );
    }

    let records = results.iter().map(|r| EpisodeRecord::from_result(r, radius)).collect::<solnav::Result<Vec<_>>>()?;
    let dir = std::env::temp_dir().join("solnav-metrics-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("metrics.jsonl");
    write_metrics(&path, &records, radius)?;
    let back = read_metrics(&path)?;
    println!("\n{}:\n{}", path.display(), std::fs::read_to_string(&path)?);
    print!("{}", format_table(&[("hand-made".into(), back.summary)]));
    Ok(())
}
