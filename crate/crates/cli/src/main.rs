//! dcrt: conditional-independence testing from the command line.
//!
//! Subcommands: `test` (one variable, JSON on stdout), `select` (batch
//! selection with FDR/FWER control, JSON file), `simulate` (benchmark
//! harness, CSV + JSON files), `estimate-model` (covariate model from
//! data). Every run is deterministic given its inputs and --seed. Exit
//! codes: 0 success, 2 invalid input, 3 numerical failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};

use dcrt_core::data::DataSet;
use dcrt_core::model::{estimate_ledoit_wolf, estimate_nodewise_lasso, XModel};
use dcrt_core::select::{
    select, test_single, Engine, ErrorRate, Method, SelectionConfig,
};
use dcrt_core::sim::{run_experiment, HarnessMethod, SimDesign};
use dcrt_core::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(name = "dcrt", version, about = "Distilled conditional randomization tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test one variable for conditional independence; prints TestOutcome JSON
    Test(TestArgs),
    /// Test every variable and select with FDR or FWER control
    Select(SelectArgs),
    /// Benchmark methods on a synthetic design
    Simulate(SimulateArgs),
    /// Estimate a covariate model and write it as JSON
    EstimateModel(EstimateArgs),
}

/// Flat key=value file; any long flag may be pre-populated here, with the
/// command line taking precedence.
struct Overlay {
    map: BTreeMap<String, String>,
}

impl Overlay {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path.display().to_string(), &e))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(Error::invalid(format!(
                        "config line {}: expected key=value, got `{line}`",
                        lineno + 1
                    )));
                };
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Overlay { map })
    }

    /// CLI value if given, else the config entry parsed as T.
    fn get<T: FromStr>(&self, key: &str, cli: Option<T>) -> Result<Option<T>> {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.map.get(key) {
            None => Ok(None),
            Some(text) => text.parse::<T>().map(Some).map_err(|_| {
                Error::invalid(format!("config key `{key}`: cannot parse `{text}`"))
            }),
        }
    }

    fn get_bool(&self, key: &str, on: bool, off: bool) -> Result<Option<bool>> {
        let cli = if on {
            Some(true)
        } else if off {
            Some(false)
        } else {
            None
        };
        self.get(key, cli)
    }
}

fn parse_method(name: &str) -> Result<Method> {
    match name {
        "d0" => Ok(Method::D0),
        "dI" | "di" => Ok(Method::Di),
        "ocrt" | "ocrt_original" => Ok(Method::OcrtOriginal),
        "ocrt_no_soft" => Ok(Method::OcrtNoSoft),
        "ocrt_centered" => Ok(Method::OcrtCentered),
        "hrt" => Ok(Method::Hrt),
        "gcm" => Ok(Method::Gcm),
        other => Err(Error::invalid(format!(
            "unknown method `{other}`; valid: d0, dI, ocrt, ocrt_no_soft, ocrt_centered, \
             hrt, gcm"
        ))),
    }
}

fn parse_engine(name: &str) -> Result<Engine> {
    match name {
        "rf" => Ok(Engine::ResamplingFree),
        "resample" => Ok(Engine::Resampling),
        other => Err(Error::invalid(format!("unknown engine `{other}`; valid: rf, resample"))),
    }
}

fn default_engine(method: Method) -> Engine {
    match method {
        Method::D0 | Method::Di | Method::Gcm => Engine::ResamplingFree,
        _ => Engine::Resampling,
    }
}

fn parse_error_rate(name: &str) -> Result<ErrorRate> {
    match name {
        "fdr" => Ok(ErrorRate::FdrBh),
        "fwer" => Ok(ErrorRate::FwerBonferroni),
        other => Err(Error::invalid(format!("unknown error rate `{other}`; valid: fdr, fwer"))),
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::invalid(format!("--{flag} is required (flag or config file)")))
}

fn resolve_jobs(overlay: &Overlay, cli: Option<usize>) -> Result<usize> {
    if let Some(j) = overlay.get("jobs", cli)? {
        return Ok(j);
    }
    match std::env::var("DCRT_JOBS") {
        Ok(text) => text
            .parse::<usize>()
            .map_err(|_| Error::invalid(format!("DCRT_JOBS: cannot parse `{text}`"))),
        Err(_) => Ok(1),
    }
}

#[derive(Args)]
struct TestArgs {
    /// Data CSV (header row, one response column)
    data: PathBuf,
    /// Covariate-model JSON
    model: PathBuf,
    /// Column label to test
    #[arg(long)]
    variable: Option<String>,
    /// d0 | dI | ocrt | ocrt_no_soft | ocrt_centered | hrt | gcm
    #[arg(long)]
    method: Option<String>,
    /// rf (resampling-free) | resample
    #[arg(long)]
    engine: Option<String>,
    /// Resample count (default 2000)
    #[arg(long = "M")]
    m: Option<usize>,
    /// Interaction-column count for dI (default ceil(2 ln p))
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Response column name
    #[arg(long)]
    response: Option<String>,
    /// Train fraction of the holdout split (hrt only)
    #[arg(long = "split-fraction")]
    split_fraction: Option<f64>,
    /// key=value file pre-populating any flag
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_test(args: TestArgs) -> Result<()> {
    let overlay = Overlay::load(args.config.as_deref())?;
    let variable = require(overlay.get("variable", args.variable)?, "variable")?;
    let method = parse_method(
        &overlay.get("method", args.method)?.unwrap_or_else(|| "d0".to_string()),
    )?;
    let engine = match overlay.get("engine", args.engine)? {
        Some(name) => parse_engine(&name)?,
        None => default_engine(method),
    };
    let seed = require(overlay.get("seed", args.seed)?, "seed")?;
    let response = overlay.get("response", args.response)?.unwrap_or_else(|| "y".to_string());

    let data = DataSet::from_csv(&args.data, &response)?;
    let model = XModel::load(&args.model)?;
    let j = data.column_index(&variable)?;

    let mut cfg = SelectionConfig::new(method, engine, seed);
    cfg.m = overlay.get("M", args.m)?;
    cfg.k = overlay.get("k", args.k)?;
    if let Some(f) = overlay.get("split-fraction", args.split_fraction)? {
        cfg.split_fraction = f;
    }
    let outcome = test_single(&data, &model, j, &cfg)?;
    let json = serde_json::to_string(&outcome)
        .map_err(|e| Error::invalid(format!("serialize outcome: {e}")))?;
    println!("{json}");
    Ok(())
}

#[derive(Args)]
struct SelectArgs {
    /// Data CSV (header row, one response column)
    data: PathBuf,
    /// Covariate-model JSON (or use --estimate)
    model: Option<PathBuf>,
    /// Estimate the model in-sample: ledoit | nodewise
    #[arg(long)]
    estimate: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// fdr (Benjamini-Hochberg) | fwer (Bonferroni)
    #[arg(long = "error-rate")]
    error_rate: Option<String>,
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Lasso screening before testing (default on)
    #[arg(long, action = ArgAction::SetTrue, overrides_with = "no_screen")]
    screen: bool,
    #[arg(long = "no-screen", action = ArgAction::SetTrue)]
    no_screen: bool,
    /// Reuse the full-data lasso across variables (default on)
    #[arg(long, action = ArgAction::SetTrue, overrides_with = "no_recycle")]
    recycle: bool,
    #[arg(long = "no-recycle", action = ArgAction::SetTrue)]
    no_recycle: bool,
    /// Worker threads (0 = all cores; falls back to DCRT_JOBS, then 1)
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    response: Option<String>,
    #[arg(long = "split-fraction")]
    split_fraction: Option<f64>,
    /// Output JSON path
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_select(args: SelectArgs) -> Result<()> {
    let overlay = Overlay::load(args.config.as_deref())?;
    let method = parse_method(
        &overlay.get("method", args.method)?.unwrap_or_else(|| "d0".to_string()),
    )?;
    let engine = match overlay.get("engine", args.engine)? {
        Some(name) => parse_engine(&name)?,
        None => default_engine(method),
    };
    let seed = require(overlay.get("seed", args.seed)?, "seed")?;
    let response = overlay.get("response", args.response)?.unwrap_or_else(|| "y".to_string());
    let out = overlay
        .get("out", args.out)?
        .unwrap_or_else(|| PathBuf::from("results.json"));

    let data = DataSet::from_csv(&args.data, &response)?;
    let mut cfg = SelectionConfig::new(method, engine, seed);
    cfg.alpha = overlay.get("alpha", args.alpha)?.unwrap_or(0.1);
    cfg.error_rate = match overlay.get("error-rate", args.error_rate)? {
        Some(name) => parse_error_rate(&name)?,
        None => ErrorRate::FdrBh,
    };
    cfg.m = overlay.get("M", args.m)?;
    cfg.k = overlay.get("k", args.k)?;
    cfg.screening = overlay.get_bool("screen", args.screen, args.no_screen)?.unwrap_or(true);
    cfg.recycling = overlay.get_bool("recycle", args.recycle, args.no_recycle)?.unwrap_or(true);
    cfg.jobs = resolve_jobs(&overlay, args.jobs)?;
    if let Some(f) = overlay.get("split-fraction", args.split_fraction)? {
        cfg.split_fraction = f;
    }

    let estimate = overlay.get("estimate", args.estimate)?;
    let model_path = overlay.get("model", args.model)?;
    let (model, model_source) = match (estimate, model_path) {
        (Some(_), Some(_)) => {
            return Err(Error::invalid("a model file and --estimate are mutually exclusive"))
        }
        (Some(est), None) => match est.as_str() {
            "ledoit" => {
                let m = estimate_ledoit_wolf(data.x.view())?;
                let source = m.source.to_string();
                (XModel::Gaussian(m), source)
            }
            "nodewise" => {
                let laws = estimate_nodewise_lasso(data.x.view(), &cfg.lasso)?;
                (XModel::PerColumn(laws), "nodewise".to_string())
            }
            other => {
                return Err(Error::invalid(format!(
                    "unknown estimator `{other}`; valid: ledoit, nodewise"
                )))
            }
        },
        (None, Some(path)) => {
            let model = XModel::load(&path)?;
            let source = model.source().to_string();
            (model, source)
        }
        (None, None) => {
            return Err(Error::invalid("provide a model file or --estimate {ledoit,nodewise}"))
        }
    };

    let started = Instant::now();
    let result = select(&data, &model, &cfg)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let mut json = serde_json::to_value(&result)
        .map_err(|e| Error::invalid(format!("serialize result: {e}")))?;
    json["source"] = serde_json::Value::String(model_source);
    let text = serde_json::to_string_pretty(&json)
        .map_err(|e| Error::invalid(format!("serialize result: {e}")))?;
    std::fs::write(&out, text).map_err(|e| Error::io(out.display().to_string(), &e))?;
    println!(
        "rejected {} of {} variables ({} screened in) in {:.1} ms -> {}",
        result.rejected.len(),
        data.p(),
        result.screened.len(),
        wall_ms,
        out.display()
    );
    Ok(())
}

#[derive(Args)]
struct SimulateArgs {
    /// SimDesign JSON file
    #[arg(long = "design-file")]
    design_file: Option<PathBuf>,
    /// Comma-separated method names (same names as --method)
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "error-rate")]
    error_rate: Option<String>,
    #[arg(long = "M")]
    m: Option<usize>,
    /// Output CSV path; the JSON report lands next to it
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let overlay = Overlay::load(args.config.as_deref())?;
    let design_file = require(overlay.get("design-file", args.design_file)?, "design-file")?;
    let methods_text = require(overlay.get("methods", args.methods)?, "methods")?;
    let reps = overlay.get("reps", args.reps)?.unwrap_or(50);
    let seed = require(overlay.get("seed", args.seed)?, "seed")?;
    let jobs = resolve_jobs(&overlay, args.jobs)?;
    let alpha = overlay.get("alpha", args.alpha)?.unwrap_or(0.1);
    let error_rate = match overlay.get("error-rate", args.error_rate)? {
        Some(name) => parse_error_rate(&name)?,
        None => ErrorRate::FdrBh,
    };
    let m = overlay.get("M", args.m)?;
    let out = overlay.get("out", args.out)?.unwrap_or_else(|| PathBuf::from("report.csv"));

    let design_text = std::fs::read_to_string(&design_file)
        .map_err(|e| Error::io(design_file.display().to_string(), &e))?;
    let design: SimDesign = serde_json::from_str(&design_text)
        .map_err(|e| Error::invalid(format!("design file: {e}")))?;
    design.validate()?;

    let mut methods = Vec::new();
    for name in methods_text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let method = parse_method(name)?;
        let mut cfg = SelectionConfig::new(method, default_engine(method), 0);
        cfg.alpha = alpha;
        cfg.error_rate = error_rate;
        cfg.m = m;
        methods.push(HarnessMethod { label: name.to_string(), config: cfg });
    }
    if methods.is_empty() {
        return Err(Error::invalid("--methods lists no method names"));
    }

    let report = run_experiment(&design, &methods, reps, seed, jobs)?;
    std::fs::write(&out, report.to_csv())
        .map_err(|e| Error::io(out.display().to_string(), &e))?;
    let json_path = out.with_extension("json");
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::invalid(format!("serialize report: {e}")))?;
    std::fs::write(&json_path, json)
        .map_err(|e| Error::io(json_path.display().to_string(), &e))?;
    println!(
        "{} methods x {} reps -> {} and {}",
        report.methods.len(),
        reps,
        out.display(),
        json_path.display()
    );
    Ok(())
}

#[derive(Args)]
struct EstimateArgs {
    /// Data CSV (header row, one response column)
    data: PathBuf,
    /// ledoit | nodewise
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    response: Option<String>,
    /// Output model JSON path
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_estimate_model(args: EstimateArgs) -> Result<()> {
    let overlay = Overlay::load(args.config.as_deref())?;
    let estimator = require(overlay.get("estimator", args.estimator)?, "estimator")?;
    let response = overlay.get("response", args.response)?.unwrap_or_else(|| "y".to_string());
    let out = overlay.get("out", args.out)?.unwrap_or_else(|| PathBuf::from("model.json"));

    let data = DataSet::from_csv(&args.data, &response)?;
    let model = match estimator.as_str() {
        "ledoit" => XModel::Gaussian(estimate_ledoit_wolf(data.x.view())?),
        "nodewise" => {
            XModel::PerColumn(estimate_nodewise_lasso(data.x.view(), &Default::default())?)
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown estimator `{other}`; valid: ledoit, nodewise"
            )))
        }
    };
    model.save(&out)?;
    println!("wrote {} ({} columns)", out.display(), model.p());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Select(args) => cmd_select(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::EstimateModel(args) => cmd_estimate_model(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version on stdout with status 0, usage
            // errors on stderr with status 2
            e.exit();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Validation => ExitCode::from(2),
                ErrorKind::Numerical => ExitCode::from(3),
            }
        }
    }
}
