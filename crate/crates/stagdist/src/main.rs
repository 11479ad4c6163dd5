//! Command-line interface: `estimate` for observational panels, `simulate`
//! for the Monte Carlo harness, and `dominance` for stochastic-dominance
//! tests.
//!
//! Configuration precedence is flags over config file over defaults; the
//! config file is a flat `key = value` text format whose keys are the long
//! flag names. Every run writes a metadata JSON embedding the schema
//! version, the effective configuration, and the seed. Exit codes: 0 on
//! success, 1 on I/O failure, 2 on validation failure, with a JSON error
//! envelope on standard error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stagdist::core::counterfactual::Method;
use stagdist::core::effects::{
    aggregate_event_time, aggregate_overall, kendall_tau_diagnostic, pre_treatment_periods,
    qtt_surface,
};
use stagdist::inference::{bootstrap_band, replicate_seed, sd_pair_bootstrap, InfError};
use stagdist::io::{load_panel_path, IoError, PanelSchema};
use stagdist::report::{
    write_aggregation_csv, write_aggregation_json, write_json, write_mc_csv, write_surface_csv,
    write_surface_json, ErrorReport, Metadata, SCHEMA_VERSION,
};
use stagdist::simulate::{run_monte_carlo, DgpSpec, McReport, Trend};

#[derive(Parser)]
#[command(
    name = "stagdist",
    version,
    about = "Counterfactual distributions and quantile treatment effects for staggered difference-in-differences designs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate QTT surfaces, aggregations, and bands from a CSV panel.
    #[command(args_override_self = true)]
    Estimate(EstimateArgs),
    /// Run Monte Carlo experiments on the built-in data-generating processes.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Test stochastic dominance of the treated outcome over its counterfactual.
    #[command(args_override_self = true)]
    Dominance(DominanceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Unconditional,
    Ipw,
    Conditional,
    Rcs,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Unconditional => Method::Unconditional,
            MethodArg::Ipw => Method::Ipw,
            MethodArg::Conditional => Method::ConditionalDiscrete,
            MethodArg::Rcs => Method::RepeatedCrossSection,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AggregateArg {
    Event,
    Overall,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TrendArg {
    Linear,
    Quadratic,
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV path.
    #[arg(long)]
    input: PathBuf,
    /// Unit-identifier column.
    #[arg(long, default_value = "unit")]
    unit: String,
    /// Integer period column.
    #[arg(long, default_value = "time")]
    time: String,
    /// Numeric outcome column.
    #[arg(long, default_value = "outcome")]
    outcome: String,
    /// First-treatment-period column (empty cell or `never` marks the
    /// never-treated group).
    #[arg(long, default_value = "first_treated")]
    first_treated: String,
    /// Per-period 0/1 treatment column; overrides --first-treated when set.
    #[arg(long)]
    treatment: Option<String>,
    /// Comma-separated covariate columns.
    #[arg(long, default_value = "")]
    covariates: String,
    /// Field delimiter: a single character or the word `tab`.
    #[arg(long, default_value = ",")]
    delimiter: String,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Identification route.
    #[arg(long, value_enum, default_value_t = MethodArg::Unconditional)]
    method: MethodArg,
    /// Anticipation horizon (base period becomes first-treatment minus this
    /// minus one).
    #[arg(long, default_value_t = 0)]
    anticipation: u32,
    /// Comma-separated quantile levels.
    #[arg(long, default_value = "0.25,0.5,0.75")]
    quantiles: String,
    /// Bootstrap replicates for uniform bands (0 disables bands).
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    /// Band level: bands cover with probability 1 - alpha.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Aggregation of the surface.
    #[arg(long, value_enum, default_value_t = AggregateArg::None)]
    aggregate: AggregateArg,
    /// Exposure length for event-time aggregation.
    #[arg(long, default_value_t = 0)]
    event_time: u32,
    /// Propensity-score trimming bound.
    #[arg(long, default_value_t = 0.001)]
    trim: f64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output path prefix.
    #[arg(long, default_value = "stagdist")]
    output: PathBuf,
    /// Tabular output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Flat key=value config file providing flag defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Data-generating process 1..=5.
    #[arg(long, default_value_t = 1)]
    dgp: u8,
    /// Units per replication.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Panel length T.
    #[arg(long, default_value_t = 4)]
    periods: u32,
    /// Monte Carlo replications.
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    /// Comma-separated estimation methods.
    #[arg(long, default_value = "unconditional")]
    methods: String,
    /// Comma-separated quantile levels.
    #[arg(long, default_value = "0.25,0.5,0.75")]
    quantiles: String,
    /// Cohort/period cells as `r:t` pairs, or `all` for every
    /// post-treatment cell.
    #[arg(long, default_value = "2:2")]
    cells: String,
    /// Trend-violation size for DGP 4.
    #[arg(long, default_value_t = 0.0)]
    epsilon_bar: f64,
    /// Copula-violation size for DGP 5.
    #[arg(long, default_value_t = 0.0)]
    rho_bar: f64,
    /// Additive treatment effect injected post treatment.
    #[arg(long, default_value_t = 0.0)]
    effect: f64,
    /// Trend shape.
    #[arg(long, value_enum, default_value_t = TrendArg::Linear)]
    trend: TrendArg,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output path prefix.
    #[arg(long, default_value = "stagdist")]
    output: PathBuf,
    /// Tabular output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Preset reproducing one benchmark simulation table (overrides
    /// dgp/n/periods/violations; 1, 2, 3, 4, or C4).
    #[arg(long)]
    table: Option<String>,
    /// Flat key=value config file providing flag defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DominanceArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Cohort r to test.
    #[arg(long)]
    cohort: u32,
    /// Outcome period t to test.
    #[arg(long)]
    period: u32,
    /// Anticipation horizon.
    #[arg(long, default_value_t = 0)]
    anticipation: u32,
    /// Identification route.
    #[arg(long, value_enum, default_value_t = MethodArg::Unconditional)]
    method: MethodArg,
    /// Propensity-score trimming bound.
    #[arg(long, default_value_t = 0.001)]
    trim: f64,
    /// Pair-bootstrap replicates (at least 100).
    #[arg(long, default_value_t = 299)]
    bootstrap: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output path prefix.
    #[arg(long, default_value = "stagdist")]
    output: PathBuf,
    /// Flat key=value config file providing flag defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// CLI failure with its process exit code.
struct CliError {
    code: String,
    message: String,
    exit: u8,
}

impl CliError {
    fn validation(code: &str, message: String) -> Self {
        Self {
            code: code.into(),
            message,
            exit: 2,
        }
    }

    fn io(message: String) -> Self {
        Self {
            code: "Io".into(),
            message,
            exit: 1,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        let exit = if e.is_io() { 1 } else { 2 };
        let code = match &e {
            IoError::Io(_) => "Io",
            IoError::Malformed(_) => "Malformed",
            IoError::MissingColumn(_) => "MissingColumn",
            IoError::BadCell { .. } => "BadCell",
            IoError::NoCohortColumn => "NoCohortColumn",
            IoError::UnknownTreatmentPeriod { .. } => "UnknownTreatmentPeriod",
            IoError::Validation(_) => "Validation",
        };
        Self {
            code: code.into(),
            message: e.to_string(),
            exit,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

impl From<stagdist::core::effects::EffectsError> for CliError {
    fn from(e: stagdist::core::effects::EffectsError) -> Self {
        use stagdist::core::counterfactual::CfError;
        use stagdist::core::effects::EffectsError;
        use stagdist::core::propensity::PropensityError;
        let code = match &e {
            EffectsError::Counterfactual(CfError::Propensity(
                PropensityError::MissingCovariates,
            )) => "MissingCovariates",
            EffectsError::Counterfactual(_) => "Estimation",
            _ => "Aggregation",
        };
        CliError::validation(code, e.to_string())
    }
}

impl From<InfError> for CliError {
    fn from(e: InfError) -> Self {
        let code = match &e {
            InfError::InvalidInput { .. } => "InvalidInput",
            InfError::DegenerateBootstrap { .. } => "DegenerateBootstrap",
            InfError::ResampleGroupCollapse => "ResampleGroupCollapse",
            InfError::Estimation(_) => "Estimation",
        };
        CliError::validation(code, e.to_string())
    }
}

impl From<stagdist::simulate::SimError> for CliError {
    fn from(e: stagdist::simulate::SimError) -> Self {
        CliError::validation("InvalidSpec", e.to_string())
    }
}

fn main() -> ExitCode {
    let args = match merge_config_args(std::env::args().collect()) {
        Ok(args) => args,
        Err(e) => return fail(e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are success paths in clap.
            if e.use_stderr() {
                let _ = e.print();
                return ExitCode::from(2);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Estimate(args) => run_estimate(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Dominance(args) => run_dominance(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    let report = ErrorReport {
        error: e.code,
        message: e.message,
    };
    let mut stderr = std::io::stderr().lock();
    let _ = write_json(&mut stderr, &report);
    ExitCode::from(e.exit)
}

/// Splices `key = value` lines from a `--config` file into the argument list
/// directly after the subcommand, so explicit flags (parsed later) win.
fn merge_config_args(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let config_pos = args.iter().position(|a| a == "--config");
    let Some(pos) = config_pos else {
        return Ok(args);
    };
    let path = args.get(pos + 1).ok_or_else(|| {
        CliError::validation("InvalidConfig", "--config requires a file path".into())
    })?;
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::io(format!("config `{path}`: {e}")))?;
    let mut injected = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::validation(
                "InvalidConfig",
                format!("config line {}: expected `key = value`", lineno + 1),
            )
        })?;
        injected.push(format!("--{}", key.trim()));
        injected.push(value.trim().to_string());
    }
    if args.len() < 2 {
        return Err(CliError::validation(
            "InvalidConfig",
            "--config requires a subcommand".into(),
        ));
    }
    let mut merged = args[..2].to_vec();
    merged.extend(injected);
    merged.extend(args[2..].iter().cloned());
    Ok(merged)
}

fn parse_quantiles(text: &str) -> Result<Vec<f64>, CliError> {
    let taus: Vec<f64> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            CliError::validation(
                "InvalidQuantiles",
                format!("`{text}` is not a quantile list"),
            )
        })?;
    if taus.is_empty() || taus.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(CliError::validation(
            "InvalidQuantiles",
            "quantile levels must lie strictly between 0 and 1".into(),
        ));
    }
    Ok(taus)
}

fn build_schema(input: &InputArgs) -> Result<PanelSchema, CliError> {
    let delimiter = match input.delimiter.as_str() {
        "tab" | "\\t" => b'\t',
        s if s.len() == 1 => s.as_bytes()[0],
        other => {
            return Err(CliError::validation(
                "InvalidDelimiter",
                format!("`{other}` is not a single character or `tab`"),
            ))
        }
    };
    let covariates: Vec<String> = input
        .covariates
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    Ok(PanelSchema {
        unit: input.unit.clone(),
        time: input.time.clone(),
        outcome: input.outcome.clone(),
        first_treated: if input.treatment.is_some() {
            None
        } else {
            Some(input.first_treated.clone())
        },
        treatment: input.treatment.clone(),
        covariates,
        delimiter,
    })
}

fn init_threads(threads: usize) -> Result<(), CliError> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::validation("InvalidThreads", e.to_string()))
}

fn create_output(prefix: &Path, suffix: &str) -> Result<BufWriter<File>, CliError> {
    let mut name = prefix.as_os_str().to_os_string();
    name.push("_");
    name.push(suffix);
    Ok(BufWriter::new(File::create(PathBuf::from(name))?))
}

fn write_metadata(
    prefix: &Path,
    command: &str,
    config: BTreeMap<String, String>,
    seed: u64,
    warnings: Vec<String>,
) -> Result<(), CliError> {
    let meta = Metadata {
        schema_version: SCHEMA_VERSION.into(),
        command: command.into(),
        config,
        seed,
        warnings,
    };
    write_json(create_output(prefix, "metadata.json")?, &meta)?;
    Ok(())
}

fn run_estimate(args: EstimateArgs) -> Result<(), CliError> {
    init_threads(args.threads)?;
    let taus = parse_quantiles(&args.quantiles)?;
    let schema = build_schema(&args.input)?;
    let loaded = load_panel_path(&args.input.input, &schema)?;
    let panel = &loaded.panel;
    let method: Method = args.method.into();

    let surface = qtt_surface(panel, args.anticipation, &taus, method, args.trim)?;

    let mut config = BTreeMap::new();
    config.insert("input".into(), args.input.input.display().to_string());
    config.insert("unit".into(), args.input.unit.clone());
    config.insert("time".into(), args.input.time.clone());
    config.insert("outcome".into(), args.input.outcome.clone());
    config.insert("first-treated".into(), args.input.first_treated.clone());
    config.insert(
        "treatment".into(),
        args.input.treatment.clone().unwrap_or_default(),
    );
    config.insert("covariates".into(), args.input.covariates.clone());
    config.insert("method".into(), method.to_string());
    config.insert("anticipation".into(), args.anticipation.to_string());
    config.insert("quantiles".into(), args.quantiles.clone());
    config.insert("bootstrap".into(), args.bootstrap.to_string());
    config.insert("alpha".into(), args.alpha.to_string());
    config.insert("seed".into(), args.seed.to_string());
    config.insert(
        "aggregate".into(),
        format!("{:?}", args.aggregate).to_lowercase(),
    );
    config.insert("event-time".into(), args.event_time.to_string());
    config.insert("trim".into(), args.trim.to_string());
    config.insert("threads".into(), args.threads.to_string());
    config.insert("format".into(), format!("{:?}", args.format).to_lowercase());

    match args.format {
        FormatArg::Csv => write_surface_csv(create_output(&args.output, "surface.csv")?, &surface)?,
        FormatArg::Json => {
            write_surface_json(create_output(&args.output, "surface.json")?, &surface)?
        }
    }

    if args.aggregate != AggregateArg::None {
        let shares: Vec<(u32, f64)> = panel
            .treated_cohorts()
            .iter()
            .map(|&r| (r, panel.cohort_share(r)))
            .collect();
        let agg = match args.aggregate {
            AggregateArg::Event => aggregate_event_time(&surface, &shares, args.event_time)?,
            AggregateArg::Overall => aggregate_overall(&surface, &shares)?,
            AggregateArg::None => unreachable!(),
        };
        match args.format {
            FormatArg::Csv => {
                write_aggregation_csv(create_output(&args.output, "aggregation.csv")?, &agg)?
            }
            FormatArg::Json => {
                write_aggregation_json(create_output(&args.output, "aggregation.json")?, &agg)?
            }
        }
    }

    if args.bootstrap > 0 {
        let mut cells: Vec<(u32, u32)> = surface
            .entries
            .iter()
            .map(|e| (e.cohort, e.period))
            .collect();
        cells.dedup();
        let bands: Vec<_> = cells
            .iter()
            .enumerate()
            .map(|(idx, &(r, t))| {
                bootstrap_band(
                    panel,
                    r,
                    t,
                    args.anticipation,
                    &taus,
                    method,
                    args.trim,
                    args.bootstrap,
                    args.alpha,
                    replicate_seed(args.seed, idx as u64),
                )
            })
            .collect::<Result<_, _>>()?;
        write_json(create_output(&args.output, "bands.json")?, &bands)?;
    }

    // Copula diagnostic per cohort with at least two pre-treatment periods.
    #[derive(serde::Serialize)]
    struct KendallOut {
        cohort: u32,
        periods: Vec<u32>,
        tau_treated: f64,
        tau_never_treated: f64,
    }
    let mut kendall = Vec::new();
    for r in panel.treated_cohorts() {
        let periods = pre_treatment_periods(r, args.anticipation);
        if periods.is_empty() {
            continue;
        }
        let (tau_treated, tau_never_treated) = kendall_tau_diagnostic(panel, r, &periods)?;
        kendall.push(KendallOut {
            cohort: r,
            periods,
            tau_treated,
            tau_never_treated,
        });
    }
    write_json(create_output(&args.output, "kendall.json")?, &kendall)?;

    write_metadata(&args.output, "estimate", config, args.seed, loaded.warnings)?;
    Ok(())
}

fn parse_methods(text: &str) -> Result<Vec<Method>, CliError> {
    let methods: Vec<Method> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s {
            "unconditional" => Ok(Method::Unconditional),
            "ipw" | "conditional" => Ok(Method::Ipw),
            "conditional-discrete" => Ok(Method::ConditionalDiscrete),
            "rcs" => Ok(Method::RepeatedCrossSection),
            other => Err(CliError::validation(
                "InvalidMethod",
                format!("unknown method `{other}`"),
            )),
        })
        .collect::<Result<_, _>>()?;
    if methods.is_empty() {
        return Err(CliError::validation(
            "InvalidMethod",
            "no methods given".into(),
        ));
    }
    Ok(methods)
}

fn parse_cells(text: &str, periods: u32) -> Result<Vec<(u32, u32)>, CliError> {
    if text.trim() == "all" {
        return Ok(stagdist::simulate::post_treatment_cells(periods));
    }
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            pair.split_once(':')
                .and_then(|(r, t)| Some((r.trim().parse().ok()?, t.trim().parse().ok()?)))
                .ok_or_else(|| {
                    CliError::validation("InvalidCells", format!("`{pair}` is not an `r:t` cell"))
                })
        })
        .collect()
}

/// One Monte Carlo run: a population spec plus the methods to score on it.
struct SimRun {
    spec: DgpSpec,
    methods: Vec<Method>,
}

fn preset_runs(table: &str, reps_seed: u64, trend: TrendArg) -> Result<Vec<SimRun>, CliError> {
    let both = vec![Method::Unconditional, Method::Ipw];
    let unc = vec![Method::Unconditional];
    let mut runs = Vec::new();
    let mut push =
        |dgp: u8, n: usize, periods: u32, methods: &Vec<Method>, eb: f64, rb: f64, quad: bool| {
            let mut spec = DgpSpec::new(dgp, n, periods, 0);
            spec.epsilon_bar = eb;
            spec.rho_bar = rb;
            if quad {
                spec.trend = Trend::Quadratic;
            }
            runs.push(SimRun {
                spec,
                methods: methods.clone(),
            });
        };
    match table {
        "1" | "2" => {
            let periods = if table == "1" { 4 } else { 10 };
            for &n in &[100usize, 1000] {
                push(1, n, periods, &unc, 0.0, 0.0, false);
                push(2, n, periods, &both, 0.0, 0.0, false);
                push(3, n, periods, &both, 0.0, 0.0, false);
            }
        }
        "3" => {
            for &eb in &[0.0, 0.05, 0.10, 0.50] {
                push(4, 1000, 4, &both, eb, 0.0, false);
            }
        }
        "4" => {
            for &rb in &[0.0, 0.05, 0.10, 0.50] {
                push(5, 1000, 4, &both, 0.0, rb, false);
            }
        }
        "C4" => {
            for &n in &[100usize, 1000] {
                push(2, n, 4, &both, 0.0, 0.0, true);
            }
        }
        other => {
            return Err(CliError::validation(
                "InvalidPreset",
                format!("unknown table preset `{other}` (use 1, 2, 3, 4, or C4)"),
            ))
        }
    }
    let _ = trend; // presets fix their own trend
    for (idx, run) in runs.iter_mut().enumerate() {
        run.spec.seed = replicate_seed(reps_seed, 0x5150 + idx as u64);
    }
    Ok(runs)
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    init_threads(args.threads)?;
    let taus = parse_quantiles(&args.quantiles)?;
    let runs: Vec<SimRun> = match &args.table {
        Some(table) => preset_runs(table, args.seed, args.trend)?,
        None => {
            let mut spec = DgpSpec::new(args.dgp, args.n, args.periods, args.seed);
            spec.epsilon_bar = args.epsilon_bar;
            spec.rho_bar = args.rho_bar;
            spec.effect = args.effect;
            spec.trend = match args.trend {
                TrendArg::Linear => Trend::Linear,
                TrendArg::Quadratic => Trend::Quadratic,
            };
            vec![SimRun {
                spec,
                methods: parse_methods(&args.methods)?,
            }]
        }
    };

    let mut reports: Vec<McReport> = Vec::new();
    for run in &runs {
        let cells = parse_cells(&args.cells, run.spec.periods)?;
        reports.push(run_monte_carlo(
            &run.spec,
            args.reps,
            &taus,
            &run.methods,
            &cells,
        )?);
    }

    match args.format {
        FormatArg::Csv => write_mc_csv(create_output(&args.output, "mc.csv")?, &reports)?,
        FormatArg::Json => write_json(create_output(&args.output, "mc.json")?, &reports)?,
    }

    let mut config = BTreeMap::new();
    config.insert("dgp".into(), args.dgp.to_string());
    config.insert("n".into(), args.n.to_string());
    config.insert("periods".into(), args.periods.to_string());
    config.insert("reps".into(), args.reps.to_string());
    config.insert("methods".into(), args.methods.clone());
    config.insert("quantiles".into(), args.quantiles.clone());
    config.insert("cells".into(), args.cells.clone());
    config.insert("epsilon-bar".into(), args.epsilon_bar.to_string());
    config.insert("rho-bar".into(), args.rho_bar.to_string());
    config.insert("effect".into(), args.effect.to_string());
    config.insert("trend".into(), format!("{:?}", args.trend).to_lowercase());
    config.insert("seed".into(), args.seed.to_string());
    config.insert("threads".into(), args.threads.to_string());
    config.insert("format".into(), format!("{:?}", args.format).to_lowercase());
    config.insert("table".into(), args.table.clone().unwrap_or_default());
    let failures: usize = reports.iter().map(|r| r.failures).sum();
    let warnings = if failures > 0 {
        vec![format!(
            "{failures} cell estimates failed and were excluded"
        )]
    } else {
        Vec::new()
    };
    write_metadata(&args.output, "simulate", config, args.seed, warnings)?;
    Ok(())
}

fn run_dominance(args: DominanceArgs) -> Result<(), CliError> {
    init_threads(args.threads)?;
    let schema = build_schema(&args.input)?;
    let loaded = load_panel_path(&args.input.input, &schema)?;
    let method: Method = args.method.into();
    let result = sd_pair_bootstrap(
        &loaded.panel,
        args.cohort,
        args.period,
        args.anticipation,
        method,
        args.trim,
        args.bootstrap,
        args.seed,
    )?;
    write_json(create_output(&args.output, "dominance.json")?, &result)?;

    let mut config = BTreeMap::new();
    config.insert("input".into(), args.input.input.display().to_string());
    config.insert("cohort".into(), args.cohort.to_string());
    config.insert("period".into(), args.period.to_string());
    config.insert("anticipation".into(), args.anticipation.to_string());
    config.insert("method".into(), method.to_string());
    config.insert("trim".into(), args.trim.to_string());
    config.insert("bootstrap".into(), args.bootstrap.to_string());
    config.insert("seed".into(), args.seed.to_string());
    config.insert("threads".into(), args.threads.to_string());
    write_metadata(
        &args.output,
        "dominance",
        config,
        args.seed,
        loaded.warnings,
    )?;
    Ok(())
}
