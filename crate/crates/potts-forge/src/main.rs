//! Command-line front end: estimation runs, spectra, NLL/bound curves, and
//! the DAS-vs-gradient comparison, as CSV/JSON files.
//!
//! Exit codes: 0 success/accepted, 1 usage or input error, 2 rejected
//! estimation, 3 solver resource limit without a usable result.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use milp::SolverConfig;
use potts_forge::formulations::FormulationError;
use potts_forge::spectrum::fmt_sig;
use potts_forge::{
    beta_grid, compute_spectrum, estimate_das, estimate_gsm, gsm_bruteforce, nll, nll_curve_csv,
    parse_model, spectrum_summary, train_nll, EstimationResult, Params, ParamBounds, PottsModel,
    State,
};

#[derive(Parser)]
#[command(name = "potts-forge", version, about = "Potts/Ising band-gap parameter estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Model JSON file (graph, tables, parameter bounds)
    #[arg(long)]
    model: PathBuf,
    /// Write primary output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Branch-and-bound node cap
    #[arg(long, default_value_t = 1_000_000)]
    node_limit: u64,
    /// Wall-clock cap for the solver, in seconds
    #[arg(long)]
    time_limit: Option<f64>,
    /// Worker thread count (env POTTS_FORGE_THREADS overrides)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct BetaArgs {
    #[arg(long, default_value_t = 1e-2)]
    beta_min: f64,
    #[arg(long, default_value_t = 1e2)]
    beta_max: f64,
    #[arg(long, default_value_t = 64)]
    beta_points: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate parameters for a prescribed ground-state data set
    EstimateDas {
        #[command(flatten)]
        common: CommonArgs,
        /// Data JSON: array of label sequences (1-based) or "+1"/"-1" spins
        #[arg(long)]
        data: PathBuf,
    },
    /// Estimate parameters for a prescribed ground-state count
    EstimateGsm {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        ngs: usize,
    },
    /// Exhaustive spectrum of a model at fixed parameters
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Parameters JSON: {"H": [...], "J": [...]}
        #[arg(long)]
        params: PathBuf,
    },
    /// NLL and bound curves for an accepted estimation result
    NllCurve {
        #[command(flatten)]
        common: CommonArgs,
        /// EstimationResult JSON produced by estimate-das/estimate-gsm
        #[arg(long)]
        result: PathBuf,
        /// Optional data JSON; defaults to the result's ground set
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        betas: BetaArgs,
    },
    /// DAS vs gradient-descent NLL baseline on the same data
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        betas: BetaArgs,
        /// Gradient-descent steps at beta = 1
        #[arg(long, default_value_t = 400)]
        steps: usize,
        #[arg(long, default_value_t = 0.25)]
        learning_rate: f64,
    },
    /// Brute-force GSM reference (tiny models only)
    GsmOracle {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        ngs: usize,
        /// Candidate ground-set cap
        #[arg(long, default_value_t = potts_forge::formulations::DEFAULT_BRUTEFORCE_CAP)]
        cap: usize,
    },
}

/// Error carrying the process exit code.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> CliError {
        CliError { code: 1, message: message.into() }
    }
    fn rejected(message: impl Into<String>) -> CliError {
        CliError { code: 2, message: message.into() }
    }
    fn limit(message: impl Into<String>) -> CliError {
        CliError { code: 3, message: message.into() }
    }
}

impl From<FormulationError> for CliError {
    fn from(e: FormulationError) -> CliError {
        match &e {
            FormulationError::SolverFailed(status) => match status {
                milp::Status::NodeLimit | milp::Status::TimeLimit | milp::Status::IterationLimit => {
                    CliError::limit(e.to_string())
                }
                _ => CliError::rejected(e.to_string()),
            },
            _ => CliError::usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    eprintln!("potts-forge {}", env!("CARGO_PKG_VERSION"));
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn init_threads(requested: Option<usize>) -> Result<(), CliError> {
    let threads = match std::env::var("POTTS_FORGE_THREADS") {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| CliError::usage(format!("POTTS_FORGE_THREADS={v} is not a number")))?,
        ),
        Err(_) => requested,
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn read_file(path: &PathBuf, what: &str) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn load_model(path: &PathBuf) -> Result<(PottsModel, ParamBounds), CliError> {
    parse_model(&read_file(path, "model file")?)
        .map_err(|e| CliError::usage(format!("model file {}: {e}", path.display())))
}

/// Parses a data file: a JSON array of states, each an array whose entries
/// are 1-based labels or Ising spin aliases ("+1"/"-1", or the numbers
/// +1/-1 where -1 maps to label 2).
fn parse_data(text: &str, model: &PottsModel) -> Result<Vec<State>, CliError> {
    let raw: Vec<Vec<serde_json::Value>> =
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("data file: {e}")))?;
    let mut states = Vec::with_capacity(raw.len());
    for (si, entry) in raw.iter().enumerate() {
        let mut labels = Vec::with_capacity(entry.len());
        for (vi, val) in entry.iter().enumerate() {
            let label = match val {
                serde_json::Value::Number(n) => {
                    let x = n.as_i64().ok_or_else(|| {
                        CliError::usage(format!("data state {si}: non-integer label at {vi}"))
                    })?;
                    spin_or_label(x, model).ok_or_else(|| {
                        CliError::usage(format!("data state {si}: label {x} out of range"))
                    })?
                }
                serde_json::Value::String(s) => match s.as_str() {
                    "+1" | "+" => 1,
                    "-1" | "-" => 2,
                    other => {
                        return Err(CliError::usage(format!(
                            "data state {si}: unknown spin alias {other:?}"
                        )))
                    }
                },
                _ => {
                    return Err(CliError::usage(format!(
                        "data state {si}: labels must be numbers or spin strings"
                    )))
                }
            };
            labels.push(label);
        }
        states.push(State(labels));
    }
    if states.is_empty() {
        return Err(CliError::usage("data file: empty data set"));
    }
    Ok(states)
}

fn spin_or_label(x: i64, model: &PottsModel) -> Option<u8> {
    if x == -1 && model.n_labels() == 2 {
        return Some(2);
    }
    if x >= 1 && x <= model.n_labels() as i64 {
        return Some(x as u8);
    }
    None
}

fn solver_config(common: &CommonArgs) -> SolverConfig {
    SolverConfig {
        node_limit: common.node_limit,
        time_limit: common.time_limit.map(Duration::from_secs_f64),
        ..Default::default()
    }
}

fn emit(common: &CommonArgs, content: &str) -> Result<(), CliError> {
    match &common.out {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn finish_estimation(common: &CommonArgs, result: &EstimationResult) -> Result<(), CliError> {
    emit(common, &result.to_json())?;
    if !result.accepted {
        return Err(CliError::rejected(format!(
            "estimation rejected: gap {} with {} ground states (solver status {})",
            result.delta_e,
            result.ground_states.len(),
            result.solver.status
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::EstimateDas { common, data } => {
            init_threads(common.threads)?;
            let (model, bounds) = load_model(&common.model)?;
            let states = parse_data(&read_file(&data, "data file")?, &model)?;
            let result = estimate_das(&model, &bounds, &states, &solver_config(&common))?;
            finish_estimation(&common, &result)
        }
        Command::EstimateGsm { common, ngs } => {
            init_threads(common.threads)?;
            let (model, bounds) = load_model(&common.model)?;
            let result = estimate_gsm(&model, &bounds, ngs, &solver_config(&common))?;
            finish_estimation(&common, &result)
        }
        Command::GsmOracle { common, ngs, cap } => {
            init_threads(common.threads)?;
            let (model, bounds) = load_model(&common.model)?;
            let result = gsm_bruteforce(&model, &bounds, ngs, cap)?;
            finish_estimation(&common, &result)
        }
        Command::Spectrum { common, params } => {
            init_threads(common.threads)?;
            let (model, _) = load_model(&common.model)?;
            let p: Params = serde_json::from_str(&read_file(&params, "params file")?)
                .map_err(|e| CliError::usage(format!("params file: {e}")))?;
            let spectrum = compute_spectrum(&model, &p)
                .map_err(|e| CliError::usage(format!("spectrum: {e}")))?;
            let summary = spectrum_summary(&model, &spectrum);
            emit(&common, &serde_json::to_string_pretty(&summary).expect("summary serializes"))
        }
        Command::NllCurve { common, result, data, betas } => {
            init_threads(common.threads)?;
            let (model, _) = load_model(&common.model)?;
            let result: EstimationResult =
                serde_json::from_str(&read_file(&result, "result file")?)
                    .map_err(|e| CliError::usage(format!("result file: {e}")))?;
            if !result.accepted {
                return Err(CliError::rejected(
                    "input result was rejected; bound theorems need an accepted estimate",
                ));
            }
            let spectrum = compute_spectrum(&model, &result.params)
                .map_err(|e| CliError::usage(format!("spectrum: {e}")))?;
            let indices: Vec<usize> = match data {
                Some(path) => parse_data(&read_file(&path, "data file")?, &model)?
                    .iter()
                    .map(|s| model.encode(s))
                    .collect::<Result<_, _>>()
                    .map_err(|e| CliError::usage(format!("data file: {e}")))?,
                None => spectrum.ground.clone(),
            };
            let grid = beta_grid(betas.beta_min, betas.beta_max, betas.beta_points)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let csv = nll_curve_csv(&spectrum, &indices, &grid)
                .map_err(|e| CliError::usage(e.to_string()))?;
            emit(&common, &csv)
        }
        Command::Compare { common, data, betas, steps, learning_rate } => {
            init_threads(common.threads)?;
            let (model, bounds) = load_model(&common.model)?;
            let states = parse_data(&read_file(&data, "data file")?, &model)?;
            let indices: Vec<usize> = states
                .iter()
                .map(|s| model.encode(s))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::usage(format!("data file: {e}")))?;
            let das = estimate_das(&model, &bounds, &states, &solver_config(&common))?;
            let trained = train_nll(&model, &bounds, &indices, 1.0, steps, learning_rate)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let das_spec = compute_spectrum(&model, &das.params)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let grad_spec = compute_spectrum(&model, &trained)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let grid = beta_grid(betas.beta_min, betas.beta_max, betas.beta_points)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let mut csv = String::from("beta,eta_das,eta_grad\n");
            let mut winners = Vec::with_capacity(grid.len());
            for &beta in &grid {
                let eta_das = nll(&das_spec, &indices, beta)
                    .map_err(|e| CliError::usage(e.to_string()))?;
                let eta_grad = nll(&grad_spec, &indices, beta)
                    .map_err(|e| CliError::usage(e.to_string()))?;
                csv.push_str(&format!(
                    "{},{},{}\n",
                    fmt_sig(beta),
                    fmt_sig(eta_das),
                    fmt_sig(eta_grad)
                ));
                winners.push(if eta_das <= eta_grad { "das" } else { "grad" });
            }
            emit(&common, &csv)?;
            let summary = serde_json::json!({
                "das_accepted": das.accepted,
                "das_delta_e": das.delta_e,
                "trained_params": trained,
                "lower_eta_per_beta": winners,
            });
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(())
        }
    }
}
