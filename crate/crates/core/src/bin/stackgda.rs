use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stackgda::algorithms::{run_g2da, run_gdalo, run_lgda, run_vanilla_gda, Algorithm, RunConfig, StepSchedule};
use stackgda::fisher::{
    analytic_cobb_douglas, generate_market, reference_descent, run_mbrd, MarketSpec, MarketState, MbrdConfig,
    ReferenceDescentOptions, UtilityClass,
};
use stackgda::harness::{derive_seed, run_experiment, verify_examples, write_report, ExperimentConfig, SeedPurpose};
use stackgda::kkt::{closed_form_multipliers, StructuredGameSpec};
use stackgda::{catalog_game, stackelberg_gap, ProjectionMode, ProjectionOptions, Result, StrategyProfile};

#[derive(Parser)]
#[command(name = "stackgda", version, about = "Min-max Stackelberg GDA solvers and Fisher market experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay the counterexample trajectories and report divergences.
    VerifyExamples,
    /// Run a solver on a catalog game.
    Solve(SolveArgs),
    /// Print the closed-form KKT multipliers of a log-separable game.
    Kkt(KktArgs),
    #[command(subcommand)]
    Fisher(FisherCommand),
    /// Batch MBRD runs over random markets.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    game: String,
    #[arg(long, default_value = "gdalo")]
    alg: Algorithm,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    /// Constant step size; defaults to 1/sqrt(iters).
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    #[arg(long, default_value_t = 0.0)]
    y0: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KktArgs {
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    a: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    b: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    c: Vec<f64>,
}

#[derive(Subcommand)]
enum FisherCommand {
    /// Run MBRD on one random market.
    Run(FisherArgs),
}

#[derive(Args)]
struct FisherArgs {
    #[arg(long, default_value = "linear")]
    utility: UtilityClass,
    #[arg(long, default_value_t = 5)]
    buyers: usize,
    #[arg(long, default_value_t = 8)]
    goods: usize,
    #[arg(long, default_value_t = 500)]
    iters: usize,
    #[arg(long, default_value_t = 3.0)]
    eta_price: f64,
    #[arg(long, default_value_t = 0.1)]
    eta_alloc: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value = "dykstra")]
    projection: ProjectionMode,
    #[arg(long)]
    lagged_constraint: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trajectory CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the generated market as JSON.
    #[arg(long)]
    market_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn solve(args: SolveArgs) -> Result<()> {
    let cat = catalog_game(&args.game)?;
    let eta = match args.eta {
        Some(e) => StepSchedule::Constant(e),
        None => StepSchedule::InverseSqrtHorizon(args.iters),
    };
    let mut initial = StrategyProfile::new(vec![args.x0], vec![args.y0]);
    if args.alg == Algorithm::G2da {
        initial.lambda = Some(vec![0.0]);
    }
    let config = RunConfig::new(args.iters, eta, initial).with_seed(args.seed);
    let lambda = cat.lambda_star();
    let (trajectory, selected) = match args.alg {
        Algorithm::Gda => (run_vanilla_gda(&cat.game, &config)?, None),
        Algorithm::G2da => (run_g2da(&cat.game, &config)?, None),
        Algorithm::Lgda => (run_lgda(&cat.game, lambda, &config)?, None),
        Algorithm::Gdalo => {
            let out = run_gdalo(&cat.game, lambda, &config)?;
            (out.trajectory, Some((out.selected_t, out.selected)))
        }
    };
    let last = trajectory.last();
    println!("game {} (value {})", cat.id, cat.min_max_value);
    println!("final  t={} x={:?} y={:?}", last.t, last.profile.x, last.profile.y);
    println!("average x={:?} y={:?}", last.x_avg, last.y_avg);
    if let Some((t, profile)) = selected {
        println!("selected t={t} x={:?} y={:?} f={}", profile.x, profile.y, cat.game.objective(&profile.x, &profile.y));
        match stackelberg_gap(&cat.game, &profile, &cat) {
            Ok(gap) => println!("gap epsilon={} delta={}", gap.epsilon, gap.delta),
            Err(e) => println!("gap unavailable: {e}"),
        }
    }
    if let Some(path) = args.out {
        trajectory.write_csv(File::create(&path)?, &[])?;
        println!("trajectory written to {}", path.display());
    }
    Ok(())
}

fn kkt(args: KktArgs) -> Result<()> {
    let spec = StructuredGameSpec::new(args.a, args.b, args.c)?;
    let lambda = closed_form_multipliers(&spec)?;
    println!("{}", lambda.iter().map(f64::to_string).collect::<Vec<_>>().join(" "));
    Ok(())
}

fn fisher_run(args: FisherArgs) -> Result<()> {
    let spec = MarketSpec {
        n: args.buyers,
        m: args.goods,
        ..Default::default()
    };
    let market = generate_market(derive_seed(args.seed, 0, SeedPurpose::Market), &spec, args.utility)?;
    if let Some(path) = &args.market_out {
        market.save(path)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(args.seed, 0, SeedPurpose::InitialPrices));
    let prices: Vec<f64> = (0..market.m).map(|_| rng.random_range(5.0..=15.0)).collect();
    let cert = match args.utility {
        UtilityClass::CobbDouglas => analytic_cobb_douglas(&market, 1e-5)?,
        _ => reference_descent(&market, &ReferenceDescentOptions::default())?,
    };
    let config = MbrdConfig {
        delta: args.delta,
        projection: ProjectionOptions {
            mode: args.projection,
            ..Default::default()
        },
        lagged_constraint: args.lagged_constraint,
        seed: derive_seed(args.seed, 0, SeedPurpose::Selection),
        ..MbrdConfig::new(args.iters, args.eta_price, args.eta_alloc)
    };
    let out = run_mbrd(&market, &MarketState::equal_spending(&market, prices)?, &config)?;
    let expl = out.average_price_exploitability(&market, cert.f_star)?;
    println!(
        "market: {} buyers, {} goods, {} utilities; f* = {} ({}, gap {:e})",
        market.n, market.m, market.utility, cert.f_star, cert.method, cert.duality_gap
    );
    for t in [1, 10, 100, args.iters].into_iter().filter(|t| *t <= args.iters) {
        println!("t={t:<6} exploitability of average prices {}", expl[t]);
    }
    println!("excess demand norm at T: {}", out.excess_demand_norm.last().unwrap_or(&f64::NAN));
    if let Some(path) = args.out {
        out.write_csv(File::create(&path)?, &market, cert.f_star)?;
        println!("trajectory written to {}", path.display());
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let mut c = ExperimentConfig::default();
            c.apply_env()?;
            c
        }
    };
    if args.paper_scale {
        config = config.paper_scale();
    }
    if args.jobs.is_some() {
        config.parallelism = args.jobs;
    }
    let report = run_experiment(&config)?;
    write_report(&report, &args.out)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &report.classes {
        println!(
            "{:<13} markets {:>4} (excluded {}), mean exploitability t=10 {:.6e} t={} {:.6e}, normalized {:.6e}",
            c.class.to_string(),
            c.markets_used,
            c.markets_excluded,
            c.mean_at(10),
            c.horizon,
            c.mean_at(c.horizon),
            c.final_normalized()
        );
    }
    println!("outputs in {} ({:.1}s)", args.out.display(), report.wall_clock_secs);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::VerifyExamples => verify_examples().map(|table| {
            print!("{table}");
            table.all_passed()
        }),
        Command::Solve(a) => solve(a).map(|_| true),
        Command::Kkt(a) => kkt(a).map(|_| true),
        Command::Fisher(FisherCommand::Run(a)) => fisher_run(a).map(|_| true),
        Command::Experiment(a) => experiment(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
