use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gamelab::error::{Error, Result};
use gamelab::harness::{defaults, emit_vector_field, run_benchmark, run_selfplay, write_field_csv, ExperimentConfig, GridSpec, RunOutput};
use gamelab::learners::{LearnerConfig, Rule};
use gamelab::plot::{field_chart, trajectory_chart};
use gamelab::record::write_csv;
use gamelab::verify::run_property_suite;

const OUT_ENV: &str = "GAMELAB_OUT";

#[derive(Parser)]
#[command(name = "gamelab", version, about = "Learning dynamics in two-player differentiable games")]
struct Cli {
    /// Output directory [default: $GAMELAB_OUT, else ./out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    #[value(name = "csv+svg")]
    CsvSvg,
}

#[derive(Subcommand)]
enum Command {
    /// Train one rule in self-play, or against `--opponent`
    Run(RunArgs),
    /// PBOS against each of LOLA, SOS and CGD
    Crossplay(RunArgs),
    /// Random 2×2 benchmark; writes a JSON summary
    Benchmark(BenchArgs),
    /// One-step update directions over a grid (scalar games only)
    Field(FieldArgs),
    /// Run the built-in property suite
    Verify,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment JSON; overrides the checked-in defaults
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    game: Option<String>,
    #[arg(long)]
    rule: Option<Rule>,
    #[arg(long)]
    opponent: Option<Rule>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    record_every: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// Learner JSON applied to every rule
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args)]
struct FieldArgs {
    /// Learner JSON
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    game: String,
    #[arg(long)]
    rule: Rule,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    hi: f64,
    /// Points per axis
    #[arg(long, default_value_t = 21)]
    points: usize,
}

enum Failure {
    Error(Error),
    Diverged,
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Diverged) => {
            eprintln!("error: run diverged");
            ExitCode::from(2)
        }
        Err(Failure::Verify) => {
            eprintln!("error: property suite failed");
            ExitCode::from(3)
        }
    }
}

fn dispatch(cli: &Cli) -> std::result::Result<(), Failure> {
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let svg = cli.format == Format::CsvSvg;
    match &cli.command {
        Command::Run(args) => {
            let cfg = experiment(args, None)?;
            fs::create_dir_all(&out).map_err(Error::from)?;
            let run = run_selfplay(&cfg)?;
            let diverged = emit_run(&out, &cfg, &run, svg)?;
            if diverged {
                return Err(Failure::Diverged);
            }
        }
        Command::Crossplay(args) => {
            fs::create_dir_all(&out).map_err(Error::from)?;
            let mut diverged = false;
            for opp in Rule::BASELINES {
                let cfg = experiment(args, Some(opp))?;
                let run = run_selfplay(&cfg)?;
                diverged |= emit_run(&out, &cfg, &run, svg)?;
            }
            if diverged {
                return Err(Failure::Diverged);
            }
        }
        Command::Benchmark(args) => {
            let (mut learner, mut steps) = defaults().benchmark.resolve(&["pbos".into()], Rule::Pbos)?;
            if let Some(path) = &args.config {
                learner = load_learner(path)?;
            }
            if let Some(s) = args.steps {
                steps = s;
            }
            let rules = [Rule::Pbos, Rule::Lola, Rule::Sos, Rule::Cgd];
            let summary = run_benchmark(args.n, args.seed, &rules, &learner, steps)?;
            let json = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
            fs::create_dir_all(&out).map_err(Error::from)?;
            fs::write(out.join(format!("benchmark_n{}_s{}.json", args.n, args.seed)), &json).map_err(Error::from)?;
            say(&json);
        }
        Command::Field(args) => {
            let game = gamelab::games::GameDefinition::by_name(&args.game)?;
            let learner = match &args.config {
                Some(path) => load_learner(path)?,
                None => ExperimentConfig::suite(&args.game, args.rule, None, 0)?.learner,
            };
            let grid = GridSpec::square(args.lo, args.hi, args.points);
            let samples = emit_vector_field(&game, args.rule, &learner, &grid)?;
            fs::create_dir_all(&out).map_err(Error::from)?;
            let stem = format!("field_{}_{}", game.name, args.rule);
            let file = fs::File::create(out.join(format!("{stem}.csv"))).map_err(Error::from)?;
            write_field_csv(file, &samples)?;
            if svg {
                fs::write(out.join(format!("{stem}.svg")), field_chart(&stem, &samples)).map_err(Error::from)?;
            }
            let holes = samples.iter().filter(|s| s.update.is_none()).count();
            say(&format!("{stem}: {} points, {holes} holes", samples.len()));
        }
        Command::Verify => {
            let results = run_property_suite()?;
            for r in &results {
                let status = if r.passed { "PASS" } else { "FAIL" };
                say(&format!("{status} {}: {}", r.name, r.detail));
            }
            if results.iter().any(|r| !r.passed) {
                return Err(Failure::Verify);
            }
        }
    }
    Ok(())
}

/// Config from `--config` or the checked-in defaults, then flag overrides.
fn experiment(args: &RunArgs, opponent: Option<Rule>) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let game = args.game.as_deref().expect("clap requires --game without --config");
            let rule = match opponent {
                Some(_) => Rule::Pbos,
                None => args
                    .rule
                    .ok_or_else(|| Error::Config("--rule is required without --config".into()))?,
            };
            ExperimentConfig::suite(game, rule, opponent.or(args.opponent), 0)?
        }
    };
    if let Some(o) = opponent {
        cfg.rule = args.rule.unwrap_or(cfg.rule);
        cfg.opponent = Some(o);
    }
    if let Some(s) = args.steps {
        cfg.steps = s;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(k) = args.record_every {
        cfg.record_every = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_learner(path: &Path) -> Result<LearnerConfig> {
    let learner: LearnerConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
    learner.validate()?;
    Ok(learner)
}

/// Write the trajectory (and chart) and print the summary line; returns
/// whether the run diverged.
fn emit_run(out: &Path, cfg: &ExperimentConfig, run: &RunOutput, svg: bool) -> Result<bool> {
    let [a, b] = cfg.rules();
    let game = match &cfg.game {
        gamelab::harness::GameSpec::Named(id) => cfg.game.build().map(|g| g.name).unwrap_or_else(|_| id.clone()),
        gamelab::harness::GameSpec::Bimatrix { .. } => "bimatrix".into(),
    };
    let pairing = if a == b { a.to_string() } else { format!("{a}_vs_{b}") };
    let stem = format!("{game}_{pairing}_s{}", cfg.seed);
    write_csv(fs::File::create(out.join(format!("{stem}.csv")))?, &run.records)?;
    if svg {
        fs::write(out.join(format!("{stem}.svg")), trajectory_chart(&stem, &run.records))?;
    }
    let s = run.summary();
    say(&format!(
        "{stem}: final L1={:.4} L2={:.4} c1={:.4} c2={:.4} xi_norm={:.3e} last L1={:.4} L2={:.4} diverged={}",
        s.l1, s.l2, s.c1, s.c2, s.xi_norm, s.last_l1, s.last_l2, s.diverged
    ));
    Ok(s.diverged)
}

/// Print a line to stdout; a closed pipe is not an error.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}
