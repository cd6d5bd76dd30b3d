//! The `planmod` command line: `gen`, `solve`, `bounds`, `sweep`, `modify`.
//!
//! Exit codes: 0 success (or solvable), 1 unsolvable / failed repair,
//! 2 search budget exhausted, 3 invalid input or parameters, 64 usage error.

pub mod document;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{
    goal_in_some_postcond_prob, lower_bound_alpha, one_op_success_prob_fixed, one_op_success_prob_variable,
    upper_bound_alpha,
};
use crate::error::{invalid, Error, Result};
use crate::experiment::{adaptive_sweep, run_sweep, AdaptiveGrid, Curve, Solver, SweepConfig};
use crate::generate::{gen_modification_instance, gen_raw_instance, ModelKind, ModelParams};
use crate::model::Plan;
use crate::modify::{modify_chain, one_step_solvable};
use crate::oracle::{plan_bfs, SearchBudget, SearchOutcome};

pub use document::{
    curve_to_columns, curve_to_csv, parse_curve_csv, parse_instance, parse_plan, write_plan, GenMode, GenParams,
    InstanceDocument, Provenance,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_ERROR: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "planmod", version, about = "Random conformant planning and plan-modification phase transitions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random instance document.
    Gen(GenArgs),
    /// Decide an instance in one step or by breadth-first search.
    Solve(SolveArgs),
    /// Print the analytic thresholds and per-operator probabilities.
    Bounds(BoundsArgs),
    /// Run a Monte Carlo density sweep and write its curve as CSV.
    Sweep(SweepArgs),
    /// Repair a plan for a changed problem.
    Modify(ModifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

impl From<Toggle> for bool {
    fn from(t: Toggle) -> bool {
        t == Toggle::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveMode {
    OneStep,
    Bfs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Variable)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    #[arg(long, default_value_t = 2)]
    pub c: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub protect_achieved: Toggle,
}

#[derive(Debug, Clone, Args)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = SearchBudget::default().max_depth)]
    pub max_depth: usize,
    #[arg(long, default_value_t = SearchBudget::default().max_beliefs)]
    pub max_beliefs: usize,
}

impl BudgetArgs {
    fn budget(&self) -> SearchBudget {
        SearchBudget { max_depth: self.max_depth, max_beliefs: self.max_beliefs }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub o: usize,
    #[arg(long, default_value_t = 1)]
    pub g: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `modification`: one unachieved goal literal; `raw`: `g` random goal literals.
    #[arg(long, value_enum, default_value_t = GenMode::Modification)]
    pub mode: GenMode,
    /// Output path; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = SolveMode::OneStep)]
    pub mode: SolveMode,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    #[arg(long, default_value_t = 2)]
    pub c: usize,
    /// Initial-state count.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.25)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated densities; an adaptive grid is used when absent.
    #[arg(long, value_delimiter = ',')]
    pub densities: Option<Vec<f64>>,
    #[arg(long, default_value_t = crate::experiment::DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = crate::experiment::DEFAULT_CONFIDENCE)]
    pub confidence: f64,
    #[arg(long, value_enum, default_value_t = SolveMode::OneStep)]
    pub solver: SolveMode,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// First density of the adaptive grid.
    #[arg(long, default_value_t = AdaptiveGrid::default().start)]
    pub alpha_start: f64,
    /// Number of evenly spaced densities in the adaptive grid.
    #[arg(long, default_value_t = AdaptiveGrid::default().points)]
    pub grid_points: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// CSV output path; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Optional whitespace-separated column file for plotting.
    #[arg(long)]
    pub columns: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModifyArgs {
    pub old: PathBuf,
    pub plan: PathBuf,
    pub new: PathBuf,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Generates the instance document text for `args`.
pub fn cmd_gen(args: &GenArgs) -> Result<String> {
    let params = ModelParams {
        model: args.model.model,
        n: args.model.n,
        o: args.o,
        r: args.model.r,
        c: args.model.c,
        m: args.model.m,
        g: args.g,
        seed: args.seed,
        protect_achieved: args.model.protect_achieved.into(),
    };
    let (inst, mode) = match args.mode {
        GenMode::Modification => (gen_modification_instance(&params)?, GenMode::Modification),
        GenMode::Raw => (gen_raw_instance(&params)?, GenMode::Raw),
    };
    let provenance = Provenance {
        model: params.model,
        params: GenParams {
            mode,
            n: params.n,
            o: params.o,
            r: params.r,
            c: params.c,
            m: params.m,
            g: params.g,
            protect_achieved: params.protect_achieved,
        },
        seed: params.seed,
    };
    Ok(InstanceDocument::from_instance(&inst, Some(provenance)).to_json())
}

/// Returns the exit code and the report text.
pub fn cmd_solve(args: &SolveArgs) -> Result<(i32, String)> {
    let inst = parse_instance(&read(&args.instance)?)?;
    Ok(match args.mode {
        SolveMode::OneStep => match one_step_solvable(&inst) {
            Some(id) => (EXIT_OK, format!("a{id}\n")),
            None => (EXIT_NEGATIVE, "unsolvable\n".to_string()),
        },
        SolveMode::Bfs => match plan_bfs(&inst, args.budget.budget())? {
            SearchOutcome::FoundPlan(plan) => (EXIT_OK, format!("plan: {plan}\n")),
            SearchOutcome::NoPlanWithinDepth => {
                (EXIT_NEGATIVE, format!("no plan within depth {}\n", args.budget.max_depth))
            }
            SearchOutcome::BudgetExhausted => {
                (EXIT_BUDGET, format!("budget exhausted after {} belief states\n", args.budget.max_beliefs))
            }
        },
    })
}

pub fn cmd_bounds(args: &BoundsArgs) -> Result<String> {
    let BoundsArgs { n, r, c, k, sigma } = *args;
    let alpha_ub = upper_bound_alpha(n, c, sigma)?;
    let alpha_lb = lower_bound_alpha(n, r, c, k, sigma)?;
    let p_var = one_op_success_prob_variable(n, r, c, k)?;
    let p_fix = one_op_success_prob_fixed(n, r, c, k)?;
    let o = alpha_ub.floor() as usize;
    let cover = goal_in_some_postcond_prob(n, c, o)?;
    let mut out = String::new();
    writeln!(out, "n\t{n}\nr\t{r}\nc\t{c}\nk\t{k}\nsigma\t{sigma}").unwrap();
    writeln!(out, "alpha_ub\t{alpha_ub}").unwrap();
    writeln!(out, "alpha_lb\t{alpha_lb}").unwrap();
    writeln!(out, "p_one_op_variable\t{p_var}").unwrap();
    writeln!(out, "p_one_op_fixed\t{p_fix}").unwrap();
    writeln!(out, "o_at_alpha_ub\t{o}").unwrap();
    writeln!(out, "p_goal_in_some_post\t{cover}").unwrap();
    Ok(out)
}

pub fn sweep_config(args: &SweepArgs) -> Result<SweepConfig> {
    let base = ModelParams {
        model: args.model.model,
        n: args.model.n,
        r: args.model.r,
        c: args.model.c,
        m: args.model.m,
        seed: args.seed,
        protect_achieved: args.model.protect_achieved.into(),
        ..Default::default()
    };
    let solver = match args.solver {
        SolveMode::OneStep => Solver::OneStep,
        SolveMode::Bfs => Solver::Bfs(args.budget.budget()),
    };
    Ok(SweepConfig {
        base,
        densities: args.densities.clone().unwrap_or_default(),
        trials: args.trials,
        confidence: args.confidence,
        solver,
        seed: args.seed,
        workers: args.workers,
    })
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Curve> {
    let config = sweep_config(args)?;
    match &args.densities {
        Some(_) => run_sweep(&config),
        None => adaptive_sweep(
            &config,
            AdaptiveGrid { start: args.alpha_start, points: args.grid_points, ..AdaptiveGrid::default() },
        ),
    }
}

/// Returns the exit code and the outcome report.
pub fn cmd_modify(args: &ModifyArgs) -> Result<(i32, String)> {
    let old = parse_instance(&read(&args.old)?)?;
    let plan: Plan = parse_plan(&read(&args.plan)?)?;
    let new = parse_instance(&read(&args.new)?)?;
    let report = modify_chain(&old, &plan, &new, args.budget.budget())?;

    let mut out = String::new();
    let deltas: Vec<String> = report.steps.iter().map(|s| s.delta.to_string()).collect();
    writeln!(out, "deltas: {}", if deltas.is_empty() { "(none)".into() } else { deltas.join(", ") }).unwrap();
    if report.steps.len() > 1 {
        for (i, step) in report.steps.iter().enumerate() {
            writeln!(out, "step {}: {} -> {}", i + 1, step.delta, step.outcome.kind()).unwrap();
        }
    }
    if report.fell_back {
        writeln!(out, "chain broke; planned the final problem directly").unwrap();
    }
    match report.outcome.appended_op() {
        Some(op) => writeln!(out, "outcome: {} a{op}", report.outcome.kind()).unwrap(),
        None => writeln!(out, "outcome: {}", report.outcome.kind()).unwrap(),
    }
    let code = match report.outcome.plan() {
        Some(plan) => {
            writeln!(out, "plan: {plan}").unwrap();
            EXIT_OK
        }
        None => EXIT_NEGATIVE,
    };
    Ok((code, out))
}

fn dispatch(command: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let emit = |stdout: &mut dyn Write, text: &str| {
        stdout.write_all(text.as_bytes()).map_err(|e| invalid(format!("cannot write output: {e}")))
    };
    match command {
        Command::Gen(args) => {
            let text = cmd_gen(args)?;
            match &args.output {
                Some(path) => write_file(path, &text)?,
                None => emit(stdout, &text)?,
            }
            Ok(EXIT_OK)
        }
        Command::Solve(args) => {
            let (code, text) = cmd_solve(args)?;
            emit(stdout, &text)?;
            Ok(code)
        }
        Command::Bounds(args) => {
            emit(stdout, &cmd_bounds(args)?)?;
            Ok(EXIT_OK)
        }
        Command::Sweep(args) => {
            let curve = cmd_sweep(args)?;
            let csv = curve_to_csv(&curve);
            if let Some(path) = &args.columns {
                write_file(path, &curve_to_columns(&curve))?;
            }
            let summary = curve.threshold_estimate.map(|a| format!("alpha_c\t{a}\n"));
            match &args.output {
                Some(path) => {
                    write_file(path, &csv)?;
                    if let Some(line) = summary {
                        emit(stdout, &line)?;
                    }
                }
                None => {
                    emit(stdout, &csv)?;
                    if let Some(line) = summary {
                        let _ = stderr.write_all(line.as_bytes());
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Modify(args) => {
            let (code, text) = cmd_modify(args)?;
            emit(stdout, &text)?;
            Ok(code)
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    match dispatch(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "planmod: {e}");
            EXIT_ERROR
        }
    }
}
