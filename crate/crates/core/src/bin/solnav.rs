use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use solnav::commands::{self, PolicyChoice};
use solnav::experiment::{ablation_table, default_jobs, run_ablation, ExperimentConfig, Suite, Variant};
use solnav::metrics::{format_table, write_metrics};
use solnav::predictor::{Featurizer, TrainConfig};
use solnav::rollout::RolloutConfig;
use solnav::sim::{CameraModel, Difficulty};
use solnav::GridConfig;

#[derive(Parser)]
#[command(name = "solnav", version, about = "Structured-observation navigation: encode, simulate, train, evaluate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the cell lines of a frame directory, or a full prompt with --step.
    Encode(EncodeArgs),
    /// Generate episodes into one directory per episode.
    Simulate(SimulateArgs),
    /// Turn saved episodes into a JSONL file of training samples.
    BuildDataset(BuildDatasetArgs),
    /// Fit the head model to a sample file.
    Train(TrainArgs),
    /// Roll a policy on saved episodes and write a metrics file.
    Eval(EvalArgs),
    /// Train and evaluate the four observation variants on identical seeds.
    Ablate(AblateArgs),
    /// Validate metrics files and print one summary row per file.
    Report(ReportArgs),
}

#[derive(Args, Clone, Serialize)]
struct GridArgs {
    #[arg(long, default_value_t = 6)]
    n_curr: usize,
    #[arg(long, default_value_t = 4)]
    n_short: usize,
    #[arg(long, default_value_t = 2)]
    n_long: usize,
    #[arg(long, default_value_t = 2)]
    count_short: usize,
    #[arg(long, default_value_t = 16)]
    count_long: usize,
    #[arg(long)]
    no_depth: bool,
    #[arg(long)]
    no_history: bool,
    /// Actions per predicted block.
    #[arg(long, default_value_t = 4)]
    na: usize,
}

impl GridArgs {
    fn grid(&self) -> GridConfig {
        GridConfig {
            n_curr: self.n_curr,
            n_short: self.n_short,
            n_long: self.n_long,
            count_short: self.count_short,
            count_long: self.count_long,
            use_depth: !self.no_depth,
            use_history: !self.no_history,
        }
    }
}

#[derive(Args, Serialize)]
struct EncodeArgs {
    /// Frame directory, or episode directory together with --step.
    path: PathBuf,
    /// Grid side for a single frame.
    #[arg(long = "n", default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    timestep: i64,
    /// Build the whole prompt for this step of an episode directory.
    #[arg(long)]
    step: Option<usize>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: u64,
    /// corridor, rooms or cluttered.
    #[arg(long, default_value = "corridor", value_parser = parse_difficulty)]
    difficulty: Difficulty,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
}

#[derive(Args, Serialize)]
struct BuildDatasetArgs {
    #[arg(long)]
    episodes: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Steps between training windows; defaults to one window per block.
    #[arg(long)]
    stride: Option<usize>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
}

#[derive(Args, Clone, Serialize)]
struct TrainFlags {
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    batch_size: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = TrainConfig::default().l2)]
    l2: f64,
    /// Seed for shuffling and the held-out split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Feature dimension as a power of two.
    #[arg(long, default_value_t = 16)]
    dim_bits: u32,
    #[arg(long, default_value_t = 0)]
    hash_seed: u64,
}

impl TrainFlags {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            l2: self.l2,
            rng_seed: self.seed,
            ..Default::default()
        }
    }

    fn featurizer(&self) -> Result<Featurizer> {
        if self.dim_bits > 31 {
            bail!("--dim-bits must be at most 31");
        }
        Ok(Featurizer::new(1 << self.dim_bits, vec![1, 2, 3], self.hash_seed)?)
    }
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    model_out: PathBuf,
    #[command(flatten)]
    flags: TrainFlags,
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    episodes: PathBuf,
    /// Checkpoint written by `train`; implies --policy model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// model, oracle, stop or stdio.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3.0)]
    radius: f64,
    #[arg(long, default_value_t = 200)]
    step_cap: usize,
    /// Observation ablation: lower-res, no-history, no-depth or all-info.
    #[arg(long)]
    ablate: Option<String>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
}

#[derive(Args, Serialize)]
struct AblateArgs {
    /// First training episode seed; seeds alternate corridor and rooms.
    #[arg(long, default_value_t = 0)]
    train_first_seed: u64,
    #[arg(long, default_value_t = 400)]
    train_count: u64,
    #[arg(long, default_value_t = 100_000)]
    eval_seed: u64,
    #[arg(long, default_value_t = 50)]
    eval_count: u64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 200)]
    step_cap: usize,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Skip the left-right reflected copies of training episodes.
    #[arg(long)]
    no_mirror: bool,
    /// Detours off the oracle path added per training episode.
    #[arg(long, default_value_t = ExperimentConfig::default().recoveries)]
    recoveries: usize,
    #[command(flatten)]
    train: TrainFlags,
    #[command(flatten)]
    grid: GridArgs,
    /// Directory for each variant's metrics file and checkpoint, plus the
    /// evaluation episodes.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
}

#[derive(Args, Serialize)]
struct ReportArgs {
    #[arg(required = true)]
    metrics: Vec<PathBuf>,
}

fn parse_difficulty(s: &str) -> std::result::Result<Difficulty, String> {
    s.parse()
}

fn echo_config(name: &str, cfg: &impl Serialize) -> Result<()> {
    eprintln!("{name} config: {}", serde_json::to_string(cfg)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode(a) => {
            echo_config("encode", &a)?;
            let text = match a.step {
                Some(step) => commands::episode_prompt(&a.path, step, &a.grid.grid(), a.grid.na)?,
                None => commands::encode_observation(&a.path, a.n, a.timestep, !a.grid.no_depth)?,
            };
            commands::emit(&text, a.out.as_deref())?;
        }
        Command::Simulate(a) => {
            echo_config("simulate", &a)?;
            let s = commands::simulate(a.seed, a.count, a.difficulty, &CameraModel::default(), &a.out, a.jobs)?;
            for (seed, why) in &s.failures {
                eprintln!("seed {seed} failed: {why}");
            }
            println!(
                "simulated {} {} episodes into {} ({} failed)",
                s.written.len(),
                a.difficulty,
                a.out.display(),
                s.failures.len()
            );
        }
        Command::BuildDataset(a) => {
            echo_config("build-dataset", &a)?;
            let stride = a.stride.unwrap_or(a.grid.na);
            let n = commands::build_dataset_file(&a.episodes, &a.grid.grid(), a.grid.na, stride, &a.out, a.jobs)?;
            println!("wrote {n} samples to {}", a.out.display());
        }
        Command::Train(a) => {
            echo_config("train", &a)?;
            let report = commands::train_file(&a.dataset, &a.flags.config(), &a.flags.featurizer()?, &a.model_out, a.jobs)?;
            for e in &report.epochs {
                eprintln!("epoch {:>3}  train {:.4}  held-out {}", e.epoch, e.train_loss, e.heldout_loss.map_or("-".into(), |l| format!("{l:.4}")));
            }
            println!(
                "kept {} of {} (loss {:.4}; {} training, {} held-out samples); model written to {}",
                report.selection,
                report.epochs.len(),
                report.selected_loss,
                report.train_samples,
                report.heldout_samples,
                a.model_out.display()
            );
        }
        Command::Eval(a) => {
            echo_config("eval", &a)?;
            let policy = match (a.policy.as_deref(), &a.model) {
                (None | Some("model"), Some(m)) => PolicyChoice::Model(m.clone()),
                (None | Some("model"), None) => bail!("--policy model needs --model <checkpoint>"),
                (Some("oracle"), _) => PolicyChoice::Oracle,
                (Some("stop"), _) => PolicyChoice::Stop,
                (Some("stdio"), _) => PolicyChoice::Stdio,
                (Some(other), _) => bail!("unknown policy {other:?} (expected model, oracle, stop or stdio)"),
            };
            let mut grid = a.grid.grid();
            if let Some(v) = &a.ablate {
                grid = Variant::from_flag(v)?.apply(grid);
            }
            let cfg = RolloutConfig { grid, n_a: a.grid.na, step_cap: a.step_cap, radius: a.radius, camera: CameraModel::default() };
            echo_config("rollout", &cfg)?;
            let outcome = commands::eval_episodes(&a.episodes, &policy, &cfg, a.jobs, &a.out)?;
            let table = format_table(&[("eval".into(), outcome.summary)]);
            if policy == PolicyChoice::Stdio {
                eprint!("{table}");
            } else {
                print!("{table}");
            }
        }
        Command::Ablate(a) => {
            let mix = vec![Difficulty::Corridor, Difficulty::Rooms];
            let cfg = ExperimentConfig {
                train_suite: Suite::new(a.train_first_seed, a.train_count, mix.clone()),
                eval_suite: Suite::new(a.eval_seed, a.eval_count, mix),
                grid: a.grid.grid(),
                n_a: a.grid.na,
                stride: a.stride,
                mirror: !a.no_mirror,
                recoveries: a.recoveries,
                featurizer: a.train.featurizer()?,
                training: a.train.config(),
                radius: a.radius,
                step_cap: a.step_cap,
                camera: CameraModel::default(),
                jobs: a.jobs,
            };
            echo_config("ablate", &cfg)?;
            eprintln!(
                "all variants use training seeds {:?} and evaluation seeds {:?}",
                cfg.train_suite.seeds(),
                cfg.eval_suite.seeds()
            );
            let rows = run_ablation(&cfg)?;
            if let Some(dir) = &a.out_dir {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                for r in &rows {
                    write_metrics(&dir.join(format!("{}.jsonl", r.variant.flag())), &r.outcome.records, cfg.radius)?;
                    r.model.save(&dir.join(format!("{}.model", r.variant.flag())))?;
                }
                // Saved so that `eval` can replay any variant's checkpoint on the same episodes.
                let episodes = dir.join("eval-episodes");
                for ep in cfg.eval_suite.generate(&cfg.camera, cfg.jobs)? {
                    ep.save_dir(&episodes.join(&ep.id))?;
                }
            }
            print!("{}", ablation_table(&rows));
        }
        Command::Report(a) => {
            echo_config("report", &a)?;
            let rows = commands::report_rows(&a.metrics)?;
            print!("{}", format_table(&rows));
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<solnav::Error>() {
        Some(solnav::Error::MissingFile(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
