//! `gridjam` command line: design one attack on a case, or sweep random
//! placements and write per-trial CSV rows.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridjam::attack::{Boost, DesignOptions};
use gridjam::experiment::{
    check_plan, fraction_grid, run_sweep, summarize, write_csv, write_summary_csv, Condition, ExperimentError,
    SweepConfig,
};
use gridjam::verify::DEFAULT_ALPHA;
use gridjam::{
    bundled_case, build_graph, design_attack, execute, parse_case, place_measurements, AttackType, CaseError,
    CaseFile, Cost, CostModel, DesignError, DetectorConfig, RemovalMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_NO_SOLUTION: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_IO: u8 = 74;

/// Directory searched for relative case paths that do not exist as given.
const CASE_DIR_ENV: &str = "GRIDJAM_CASE_DIR";

#[derive(Parser, Debug)]
#[command(name = "gridjam", version, about = "Injection and jamming attacks on DC state estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Design one attack on a random placement and verify it.
    Attack(AttackArgs),
    /// Sweep secure fractions and trials, writing one CSV row per plan.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct CaseArgs {
    /// Bundled case name (ieee14, ieee57) or path to a case file.
    #[arg(long, default_value = "ieee14")]
    case: String,

    /// Fraction of buses with an angle measurement.
    #[arg(long, default_value_t = 0.6)]
    angle_fraction: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Boost applied by the constrained cut search.
    #[arg(long, value_enum, default_value_t = BetaArg::Infinite)]
    beta: BetaArg,
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[command(flatten)]
    case: CaseArgs,

    #[arg(long = "type", value_parser = parse_type)]
    attack_type: AttackType,

    #[arg(long, default_value_t = 1.0)]
    pi: f64,

    #[arg(long, default_value_t = 0.5)]
    pjs: f64,

    #[arg(long, default_value_t = 0.25)]
    pjsc: f64,

    /// Fraction of measurements that are secure.
    #[arg(long, default_value_t = 0.0)]
    secure_fraction: f64,

    #[arg(long, value_enum, default_value_t = RemovalArg::Greedy)]
    removal: RemovalArg,

    /// Size of the state shift used for verification.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,

    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    case: CaseArgs,

    /// Comma-separated attack types.
    #[arg(long, value_delimiter = ',', value_parser = parse_type, default_value = "hi,di,hg")]
    types: Vec<AttackType>,

    /// Cost triple `pi,pjs,pjsc`; repeat for several intervals.
    #[arg(long = "cost", value_parser = parse_cost, default_value = "1,0.5,0.25")]
    costs: Vec<Cost>,

    /// Secure fractions as `start:end:step` or a comma-separated list.
    #[arg(long, default_value = "0:0.5:0.05", value_parser = parse_fractions)]
    fractions: Fractions,

    #[arg(long, default_value_t = 100)]
    trials: usize,

    /// Restrict averages to instances where this attack type is feasible.
    #[arg(long, default_value = "none")]
    condition: Condition,

    /// Add Gaussian measurement noise and use the chi-square threshold.
    #[arg(long)]
    noise: bool,

    /// Skip estimator verification of each plan.
    #[arg(long)]
    no_verify: bool,

    /// CSV output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Per-fraction averages CSV; printed to standard error when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BetaArg {
    Infinite,
    Double,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RemovalArg {
    Greedy,
    Exhaustive,
}

#[derive(Clone, Debug)]
struct Fractions(Vec<f64>);

fn parse_type(s: &str) -> Result<AttackType, String> {
    s.parse()
}

fn parse_cost(s: &str) -> Result<Cost, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [pi, pjs, pjsc] = parts[..] else {
        return Err(format!("expected three comma-separated costs, got `{s}`"));
    };
    CostModel::new(pi, pjs, pjsc).map_err(|e| e.to_string())
}

fn parse_fractions(s: &str) -> Result<Fractions, String> {
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    let values = match s.split(':').collect::<Vec<_>>()[..] {
        [a, b, step] => {
            let step = num(step)?;
            if !(step > 0.0) {
                return Err("step must be positive".into());
            }
            fraction_grid(num(a)?, num(b)?, step)
        }
        [_] => s.split(',').map(num).collect::<Result<_, _>>()?,
        _ => return Err(format!("expected start:end:step or a list, got `{s}`")),
    };
    if values.is_empty() || values.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err("fractions must lie in [0, 1]".into());
    }
    Ok(Fractions(values))
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Failure { code, message: message.to_string() }
    }
}

fn case_error(e: CaseError) -> Failure {
    match e {
        CaseError::UnknownCase(_) | CaseError::BadFraction(_) => Failure::new(EXIT_USAGE, e),
        _ => Failure::new(EXIT_DATA, e),
    }
}

fn design_error(e: DesignError) -> Failure {
    let code = match e {
        DesignError::Infeasible => EXIT_INFEASIBLE,
        DesignError::NoSolutionFound => EXIT_NO_SOLUTION,
        DesignError::InvalidCosts(_) => EXIT_USAGE,
        DesignError::Disconnected | DesignError::Cut(_) => EXIT_DATA,
    };
    Failure::new(code, e)
}

fn experiment_error(e: ExperimentError) -> Failure {
    match e {
        ExperimentError::Config(_) => Failure::new(EXIT_USAGE, e),
        ExperimentError::Case(c) => case_error(c),
        ExperimentError::Design(d) => design_error(d),
        ExperimentError::Verify(_) => Failure::new(EXIT_DATA, e),
        ExperimentError::Csv(_) | ExperimentError::Io(_) => Failure::new(EXIT_IO, e),
    }
}

/// Resolves a bundled name, a path, or a path under `$GRIDJAM_CASE_DIR`.
fn load_case(name: &str) -> Result<CaseFile, Failure> {
    let given = Path::new(name);
    let path = if given.exists() {
        Some(given.to_path_buf())
    } else {
        std::env::var_os(CASE_DIR_ENV).map(|dir| Path::new(&dir).join(name)).filter(|p| p.exists())
    };
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", p.display())))?;
            parse_case(&text).map_err(|e| Failure::new(EXIT_DATA, format!("{}: {e}", p.display())))
        }
        None => bundled_case(name).map_err(|_| {
            Failure::new(EXIT_IO, format!("case `{name}` is neither a bundled case nor a readable file"))
        }),
    }
}

fn design_options(beta: BetaArg) -> DesignOptions<f64> {
    let beta = match beta {
        BetaArg::Infinite => Boost::Infinite,
        BetaArg::Double => Boost::Double,
    };
    DesignOptions { beta, ..DesignOptions::default() }
}

fn ids(set: &std::collections::BTreeSet<gridjam::MeasurementId>) -> String {
    if set.is_empty() {
        return "-".into();
    }
    set.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(" ")
}

fn run_attack(args: &AttackArgs) -> Result<u8, Failure> {
    let cost = CostModel::new(args.pi, args.pjs, args.pjsc).map_err(design_error)?;
    if !(args.alpha > 0.0) {
        return Err(Failure::new(EXIT_USAGE, "alpha must be positive"));
    }
    let case = load_case(&args.case.case)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.case.seed);
    let sys = place_measurements(&case, args.case.angle_fraction, args.secure_fraction, rng.random())
        .map_err(case_error)?;
    let graph = build_graph(&sys).map_err(|e| case_error(e.into()))?;
    let n = sys.bus_count();
    let truth = nalgebra::DVector::from_fn(n + 1, |i, _| if i == n { 0.0 } else { rng.random_range(-0.1..0.1) });

    let plan = design_attack(args.attack_type, &graph, &cost, &design_options(args.case.beta)).map_err(design_error)?;
    let (verified, greedy_escape) = match args.removal {
        RemovalArg::Greedy => {
            let check = check_plan(&sys, &truth, None, &plan, args.alpha).map_err(|e| Failure::new(EXIT_DATA, e))?;
            (check.verified, check.greedy_escape)
        }
        RemovalArg::Exhaustive => {
            let cfg = DetectorConfig::noiseless(RemovalMode::ExhaustiveMinimal);
            let verdict = execute(&sys, &truth, &plan, &cfg, args.alpha).map_err(|e| Failure::new(EXIT_DATA, e))?;
            (verdict.matches_declared_type, false)
        }
    };

    let mut out = io::stdout().lock();
    let written = if args.json {
        let doc = json!({
            "case": case.name,
            "type": plan.attack_type,
            "interval": cost.interval().to_string(),
            "costs": cost,
            "plan": plan,
            "verified": verified,
            "greedy_escape": greedy_escape,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("plan serializes"))
    } else {
        writeln!(
            out,
            "case          {}\ntype          {}\ninterval      {}\nconstruction  {:?}\ncut edges     {}\ninjected      {}\njammed        {} (insecure) / {} (secure)\ncost          {}\nverified      {}{}",
            case.name,
            plan.attack_type,
            cost.interval(),
            plan.construction,
            ids(&plan.cut.edges),
            ids(&plan.injected),
            ids(&plan.jammed_insecure),
            ids(&plan.jammed_secure),
            plan.total_cost,
            verified,
            if greedy_escape { " (only under minimal removal)" } else { "" },
        )
    };
    written.map_err(|e| Failure::new(EXIT_IO, e))?;
    Ok(if verified { 0 } else { EXIT_VERIFY_FAILED })
}

/// Writes through a temporary file next to `path`, so a failed run leaves
/// nothing behind.
fn write_atomically(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<(), Failure>) -> Result<(), Failure> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io_err = |e: io::Error| Failure::new(EXIT_IO, format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    fill(tmp.as_file_mut())?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn run_sweep_cmd(args: &SweepArgs) -> Result<u8, Failure> {
    let case = load_case(&args.case.case)?;
    let cfg = SweepConfig {
        attack_types: args.types.clone(),
        costs: args.costs.clone(),
        secure_fractions: args.fractions.0.clone(),
        angle_fraction: args.case.angle_fraction,
        trials: args.trials,
        seed: args.case.seed,
        condition: args.condition,
        verify: !args.no_verify,
        noise: args.noise,
        alpha: DEFAULT_ALPHA,
        design: design_options(args.case.beta),
    };
    let rows = run_sweep(&case, &cfg).map_err(experiment_error)?;
    let summary = summarize(&rows, cfg.condition);

    match &args.out {
        Some(path) => write_atomically(path, |w| write_csv(&rows, w).map_err(experiment_error))?,
        None => write_csv(&rows, io::stdout().lock()).map_err(experiment_error)?,
    }
    match &args.summary {
        Some(path) => write_atomically(path, |w| write_summary_csv(&summary, w).map_err(experiment_error))?,
        None => write_summary_csv(&summary, io::stderr().lock()).map_err(experiment_error)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Attack(args) => run_attack(args),
        Command::Sweep(args) => run_sweep_cmd(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("gridjam: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
