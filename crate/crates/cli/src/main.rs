//! `leadshare`: run the leadership pipeline stage by stage or end to end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use leadshare::pipeline::{Pipeline, PipelineConfig, PipelineError, Stage, StageOutcome, SweepAxis};
use leadshare::synth::{generate, SynthConfig};

#[derive(Parser)]
#[command(name = "leadshare", version, about = "Team-leader inference and bilateral leadership metrics")]
struct Cli {
    /// Pipeline config file (flat key = value).
    #[arg(long, global = true, default_value = "pipeline.conf")]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads per stage; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Fail on the first malformed input line or unknown country.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, deduplicate and filter the corpus to bilateral collaborations.
    Ingest,
    /// Cluster contribution verbs into roles and derive lead values.
    TrainRoles,
    /// Build author histories and the nine features per authorship.
    BuildProfiles,
    /// Fit the lead model and evaluate it on the held-out split.
    FitModel,
    /// Score every bilateral authorship and classify leaders.
    Score,
    /// Count leaders and supporters per pair, year and filter.
    Aggregate,
    /// Build metric series and fit parity trends.
    Forecast,
    /// Write the figure CSVs.
    Export,
    /// Every stage in order.
    All,
    /// Forecast table over several thresholds or impact-factor bins.
    Sweep {
        #[arg(long, value_parser = parse_axis)]
        axis: SweepAxis,
        /// Comma-separated values; may be empty.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        values: String,
    },
    /// Writes a seeded synthetic corpus, contribution statements and a config.
    Synth {
        #[arg(long, default_value = "synth")]
        out: PathBuf,
        #[arg(long, conflicts_with = "authorships")]
        papers: Option<usize>,
        /// Approximate number of authorships instead of a paper count.
        #[arg(long)]
        authorships: Option<usize>,
    },
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse()
}

fn stage_of(c: &Command) -> Option<Stage> {
    Some(match c {
        Command::Ingest => Stage::Ingest,
        Command::TrainRoles => Stage::TrainRoles,
        Command::BuildProfiles => Stage::BuildProfiles,
        Command::FitModel => Stage::FitModel,
        Command::Score => Stage::Score,
        Command::Aggregate => Stage::Aggregate,
        Command::Forecast => Stage::Forecast,
        Command::Export => Stage::Export,
        _ => return None,
    })
}

fn report(stage: &str, outcome: StageOutcome) {
    let word = match outcome {
        StageOutcome::Ran => "done",
        StageOutcome::Cached => "cached",
    };
    println!("{stage}: {word}");
}

fn synth(cli: &Cli, out: &Path, papers: Option<usize>, authorships: Option<usize>) -> anyhow::Result<()> {
    let seed = cli.seed.unwrap_or(7);
    let cfg = match (papers, authorships) {
        (_, Some(n)) => SynthConfig::with_authorships(n, seed),
        (Some(n), None) => SynthConfig { n_papers: n, seed, ..SynthConfig::default() },
        (None, None) => SynthConfig { seed, ..SynthConfig::default() },
    };
    let corpus = generate(&cfg);
    corpus.write_to(out)?;
    std::fs::write(
        out.join("pipeline.conf"),
        "corpus = corpus.jsonl\ncontributions = contributions.jsonl\noutput_dir = out\n",
    )?;
    println!(
        "synth: {} papers, {} authorships, {} contribution units in {}",
        corpus.papers.len(),
        corpus.n_authorships(),
        corpus.contributions.len(),
        out.display()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.strict |= cli.strict;
    let pipeline = Pipeline::new(cfg)?;
    if let Some(stage) = stage_of(&cli.command) {
        report(stage.as_str(), pipeline.run_stage(stage)?);
        return Ok(());
    }
    match &cli.command {
        Command::All => {
            for stage in Stage::ALL {
                report(stage.as_str(), pipeline.run_stage(stage)?);
            }
        }
        Command::Sweep { axis, values } => {
            let values: Vec<f64> = values
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|v| v.parse().map_err(|_| PipelineError::Config(format!("sweep value {v:?} is not a number"))))
                .collect::<Result<_, _>>()?;
            let (path, outcome) = pipeline.sweep(*axis, &values)?;
            report(&format!("sweep {}", path.display()), outcome);
        }
        _ => unreachable!("stage commands handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Command::Synth { out, papers, authorships } = &cli.command {
        return match synth(&cli, out, *papers, *authorships) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                log::error!("{e:#}");
                eprintln!("error: {e:#}");
                ExitCode::from(3)
            }
        };
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
