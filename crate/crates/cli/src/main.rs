//! Command-line front end: run single reachability computations, sweep
//! initial-set sizes, or compare strategies side by side. All outputs are
//! data files (flowpipe JSON, volume CSV); plotting is left to external
//! tools.

mod spec;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use parareach::{io as pio, reach, Flowpipe, ModelDef, Parallelotope, ReachError};
use spec::{build_config, initial_parallelotope, StrategySpec};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "parareach",
    version,
    about = "Reachability analysis for discrete polynomial systems using parallelotope bundles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one reachability computation; writes flowpipe JSON and volume CSV.
    Run(RunArgs),
    /// Run one strategy over several initial-box scale factors.
    Sweep(SweepArgs),
    /// Run two or more strategies on the same model and tabulate results.
    Compare(CompareArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ModelSource {
    /// Built-in model name (vanderpol, jetengine, neuron, sir,
    /// coupled_vanderpol, covid).
    #[arg(long)]
    model: Option<String>,
    /// Path to a model JSON document.
    #[arg(long, value_name = "PATH")]
    model_file: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum CovidParamsArg {
    /// Prose parameters (beta 0.25, gamma 0.02, eta 0.02, delta 0.1).
    Text,
    /// Tabulated parameters (beta 0.05, gamma 0.0, eta 0.02, delta 0.08).
    Table,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    source: ModelSource,
    /// Override the model's default step count.
    #[arg(long)]
    steps: Option<usize>,
    /// Parameter source for the built-in covid model.
    #[arg(long, value_enum, default_value = "text")]
    covid_params: CovidParamsArg,
    /// Use the corrected asymptomatic equation in the built-in covid model.
    #[arg(long)]
    covid_corrected: bool,
}

impl ModelArgs {
    fn load(&self) -> Result<ModelDef> {
        let mut model = match (&self.source.model, &self.source.model_file) {
            (Some(name), None) => {
                if name == "covid" {
                    let params = match self.covid_params {
                        CovidParamsArg::Text => parareach::CovidParams::Text,
                        CovidParamsArg::Table => parareach::CovidParams::Table,
                    };
                    parareach::models::covid(params, self.covid_corrected)
                } else {
                    parareach::builtin(name)?
                }
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading model file {}", path.display()))?;
                parareach::parse_model(&text)?
            }
            _ => unreachable!("clap enforces exactly one model source"),
        };
        if let Some(steps) = self.steps {
            model.default_steps = steps;
        }
        Ok(model)
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct StrategyArgs {
    /// K static diagonal template sets alongside the axis box.
    #[arg(long, value_name = "K")]
    static_diagonal: Option<usize>,
    /// K seeded random template sets alongside the axis box.
    #[arg(long, value_name = "K")]
    static_random: Option<usize>,
    /// Dynamic templates with the given lifespans.
    #[arg(long, num_args = 2, value_names = ["L_LIN", "L_PCA"])]
    dynamic: Option<Vec<usize>>,
}

impl StrategyArgs {
    fn to_spec(&self) -> StrategySpec {
        if let Some(k) = self.static_diagonal {
            StrategySpec::Diagonal(k)
        } else if let Some(k) = self.static_random {
            StrategySpec::Random(k)
        } else if let Some(d) = &self.dynamic {
            StrategySpec::Dynamic(d[0], d[1])
        } else {
            unreachable!("clap enforces exactly one strategy")
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Bernstein bisection depth per bound computation.
    #[arg(long, default_value_t = 0)]
    subdivision: u32,
    /// Seed for random template sets and seeded selections.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the per-direction bound computations
    /// (default: all cores).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

impl CommonArgs {
    fn configure_pool(&self) -> Result<()> {
        if let Some(jobs) = self.jobs {
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global()
                .context("configuring worker pool")?;
        }
        Ok(())
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Grow the initial box about its center by this factor
    /// (zero-width coordinates stay fixed).
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Flowpipe JSON output path.
    #[arg(long, default_value = "flowpipe.json", value_name = "PATH")]
    out_flowpipe: PathBuf,
    /// Volume CSV output path.
    #[arg(long, default_value = "volumes.csv", value_name = "PATH")]
    out_volumes: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated initial-box scale factors.
    #[arg(long, value_delimiter = ',', required = true, value_name = "F,F,...")]
    scales: Vec<f64>,
    /// Output CSV path (scale, total volume).
    #[arg(long, default_value = "sweep.csv", value_name = "PATH")]
    out_csv: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Strategy to include, e.g. `static-diagonal=5`, `static-random=5`,
    /// `dynamic=2,3`; repeat the flag for each strategy (at least two).
    #[arg(long = "strategy", value_name = "SPEC")]
    strategies: Vec<StrategySpec>,
    /// Trials averaged for random strategies (seeds seed..seed+T-1).
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Output CSV path (strategy, total volume, wall time).
    #[arg(long, default_value = "compare.csv", value_name = "PATH")]
    out_csv: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let internal = err
                .chain()
                .any(|c| c.downcast_ref::<ReachError>().is_some_and(ReachError::is_internal));
            if internal {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Compare(args) => compare(args),
    }
}

fn execute(
    model: &ModelDef,
    p0: &Parallelotope,
    strategy: &StrategySpec,
    common: &CommonArgs,
    seed: u64,
) -> Result<(parareach::ReachConfig, Flowpipe)> {
    let cfg = build_config(strategy, model, common.subdivision, seed)?;
    let dynamics = model.discretize();
    let fp = reach(&dynamics, p0, &cfg)?;
    Ok((cfg, fp))
}

fn run(args: RunArgs) -> Result<()> {
    args.common.configure_pool()?;
    let model = args.model.load()?;
    let strategy = args.strategy.to_spec();
    if args.scale <= 0.0 {
        bail!("--scale must be positive");
    }
    let p0 = initial_parallelotope(&model, args.scale)?;

    let start = Instant::now();
    let (cfg, fp) = execute(&model, &p0, &strategy, &args.common, args.common.seed)?;
    let elapsed = start.elapsed().as_secs_f64();

    std::fs::write(&args.out_flowpipe, pio::flowpipe_json(&model.name, &cfg, &fp))
        .with_context(|| format!("writing {}", args.out_flowpipe.display()))?;
    std::fs::write(&args.out_volumes, pio::volumes_csv(&fp))
        .with_context(|| format!("writing {}", args.out_volumes.display()))?;

    println!(
        "model={} strategy={} steps={}",
        model.name,
        strategy.label(),
        model.default_steps
    );
    println!("total_volume={}", fp.total_volume());
    println!("wall_time_s={elapsed:.3}");
    println!(
        "wrote {} and {}",
        args.out_flowpipe.display(),
        args.out_volumes.display()
    );
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    args.common.configure_pool()?;
    let model = args.model.load()?;
    let strategy = args.strategy.to_spec();
    if args.scales.iter().any(|&s| s <= 0.0) {
        bail!("--scales entries must be positive");
    }

    let mut csv = String::from("scale,total_volume\n");
    for &scale in &args.scales {
        let p0 = initial_parallelotope(&model, scale)?;
        let (_, fp) = execute(&model, &p0, &strategy, &args.common, args.common.seed)?;
        let total = fp.total_volume();
        println!("scale={scale} total_volume={total}");
        csv.push_str(&format!("{scale},{total}\n"));
    }
    std::fs::write(&args.out_csv, csv)
        .with_context(|| format!("writing {}", args.out_csv.display()))?;
    println!("wrote {}", args.out_csv.display());
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    args.common.configure_pool()?;
    if args.strategies.len() < 2 {
        bail!("compare needs at least two --strategy specifications");
    }
    if args.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let model = args.model.load()?;
    let p0 = initial_parallelotope(&model, 1.0)?;

    let mut csv = String::from("strategy,total_volume,wall_time_s\n");
    for strategy in &args.strategies {
        let start = Instant::now();
        let trials = if strategy.is_random() { args.trials } else { 1 };
        let mut total = 0.0;
        for t in 0..trials {
            let seed = args.common.seed + t as u64;
            let (_, fp) = execute(&model, &p0, strategy, &args.common, seed)?;
            total += fp.total_volume();
        }
        let mean = total / trials as f64;
        let elapsed = start.elapsed().as_secs_f64();
        println!(
            "strategy={} total_volume={mean} wall_time_s={elapsed:.3}",
            strategy.label()
        );
        csv.push_str(&format!("{},{mean},{elapsed:.3}\n", strategy.label()));
    }
    std::fs::write(&args.out_csv, csv)
        .with_context(|| format!("writing {}", args.out_csv.display()))?;
    println!("wrote {}", args.out_csv.display());
    Ok(())
}
