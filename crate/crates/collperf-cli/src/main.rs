//! `collperf` — pLogP collective-communication performance predictor.
//!
//! Every subcommand loads a pLogP profile, evaluates the requested models
//! or simulation, and prints records as CSV (default) or JSON. Exit codes:
//! 0 success, 1 data error (unreadable or invalid files, degenerate fits),
//! 2 usage error (bad flags or flag combinations, unschedulable
//! strategies).

use std::path::PathBuf;
use std::process::ExitCode;
use std::slice;

use clap::{Args, Parser, Subcommand, ValueEnum};

use collperf_core::models::{
    alltoall_bounds, predict, predict_alltoall, CollectiveRequest, ModelError, Operation,
    Prediction, Strategy,
};
use collperf_core::profile::NetworkProfile;
use collperf_core::simulator::{build_schedule, run, Semantics, SimError};
use collperf_core::tuning::{fit_gamma, optimize_segment, select_strategy, TuningError};

use collperf_cli::formats::{
    load_measurements, load_profile, render_trace, FormatError, ProfileFormat,
};
use collperf_cli::record::{
    render_csv, render_json_array, render_json_object, OutputRecord, Value,
};

#[derive(Parser)]
#[command(
    name = "collperf",
    version,
    about = "Predict, tune, and simulate MPI-style collective communications \
             from pLogP network profiles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price one collective under a strategy's closed-form model
    Predict(PredictArgs),
    /// Price every strategy in an operation's catalog, cheapest first
    Compare(CompareArgs),
    /// Emit prediction rows over a message-size or process-count sweep
    Curve(CurveArgs),
    /// Find the cheapest segment size for a segmented strategy
    OptimizeSegment(OptimizeSegmentArgs),
    /// Pick the cheapest strategy for an operation
    Select(SelectArgs),
    /// Fit the all-to-all congestion factor gamma to measured timings
    FitGamma(FitGammaArgs),
    /// Execute a strategy's event schedule and compare with the closed form
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// pLogP profile file
    #[arg(long, value_name = "PATH")]
    profile: PathBuf,
    /// Profile encoding; inferred from the extension when omitted
    #[arg(long, value_enum, value_name = "FORMAT")]
    profile_format: Option<ProfileFormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileFormatArg {
    Json,
    Columns,
}

impl ProfileFormatArg {
    fn into_format(self) -> ProfileFormat {
        match self {
            ProfileFormatArg::Json => ProfileFormat::Json,
            ProfileFormatArg::Columns => ProfileFormat::Columns,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SemanticsArg {
    /// One send port per rank; receiving is free (optimistic bound)
    OnePortOverlap,
    /// Every send and receive occupies its rank (pessimistic bound)
    Serialized,
}

impl SemanticsArg {
    fn into_semantics(self) -> Semantics {
        match self {
            SemanticsArg::OnePortOverlap => Semantics::OnePortOverlap,
            SemanticsArg::Serialized => Semantics::Serialized,
        }
    }

    fn id(self) -> &'static str {
        match self {
            SemanticsArg::OnePortOverlap => "one-port-overlap",
            SemanticsArg::Serialized => "serialized",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepAxis {
    Bytes,
    Procs,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Collective operation: broadcast, scatter, or alltoall
    #[arg(long)]
    op: Operation,
    /// Strategy id; defaults to direct-exchange for alltoall
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Number of participating processes
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    procs: u32,
    /// Message size per destination, in bytes
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    bytes: u64,
    /// Segment size in bytes (required by the segmented strategies)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    segment: Option<u64>,
    /// Congestion factor for alltoall; omit to print both bounds
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Collective operation: broadcast or scatter
    #[arg(long)]
    op: Operation,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    procs: u32,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    bytes: u64,
    /// Skip segmented strategies instead of auto-optimizing their segment
    #[arg(long)]
    no_auto_segment: bool,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Collective operation: broadcast, scatter, or alltoall
    #[arg(long)]
    op: Operation,
    /// Strategy id; repeat the flag to plot several strategies
    #[arg(long = "strategy", required = true)]
    strategies: Vec<Strategy>,
    /// Fixed process count (required when sweeping bytes)
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    procs: Option<u32>,
    /// Fixed message size (required when sweeping procs)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    bytes: Option<u64>,
    /// Fixed segment size; segmented strategies optimize it per point when omitted
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    segment: Option<u64>,
    /// Congestion factor (required for alltoall)
    #[arg(long)]
    gamma: Option<f64>,
    /// Swept axis
    #[arg(long, value_enum)]
    sweep: SweepAxis,
    /// First swept value (inclusive)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    from: u64,
    /// Last swept value (inclusive)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    to: u64,
    /// Sweep stride (default 1)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), conflicts_with = "dyadic")]
    step: Option<u64>,
    /// Sweep powers of two only (bytes sweeps)
    #[arg(long)]
    dyadic: bool,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Args)]
struct OptimizeSegmentArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Collective operation (broadcast has the segmented strategies)
    #[arg(long)]
    op: Operation,
    /// A segmented strategy id
    #[arg(long)]
    strategy: Strategy,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    procs: u32,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    bytes: u64,
    /// Stop at the best dyadic candidate without hill-climbing
    #[arg(long)]
    no_refine: bool,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Collective operation: broadcast or scatter
    #[arg(long)]
    op: Operation,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    procs: u32,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    bytes: u64,
    /// Skip segmented strategies instead of auto-optimizing their segment
    #[arg(long)]
    no_auto_segment: bool,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Args)]
struct FitGammaArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// All-to-all measurement CSV (procs,bytes,time_us)
    #[arg(long, value_name = "PATH")]
    measurements: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Collective operation: broadcast, scatter, or alltoall
    #[arg(long)]
    op: Operation,
    /// Strategy id; defaults to direct-exchange for alltoall
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    procs: u32,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    bytes: u64,
    /// Segment size in bytes (required by the segmented strategies)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    segment: Option<u64>,
    /// Port model to execute under
    #[arg(long, value_enum, default_value_t = SemanticsArg::OnePortOverlap)]
    semantics: SemanticsArg,
    /// Write the per-transfer timing trace to this CSV file
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

enum CliError {
    /// Bad flags or flag combinations → exit 2.
    Usage(String),
    /// Unreadable or invalid data → exit 1.
    Data(String),
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

/// After the request itself has been validated, remaining model errors stem
/// from the argument values, not from file contents.
fn usage_from_model(e: ModelError) -> CliError {
    CliError::Usage(e.to_string())
}

fn usage_from_tuning(e: TuningError) -> CliError {
    match e {
        TuningError::Model(m) => usage_from_model(m),
        other @ (TuningError::NotSegmented { .. } | TuningError::UnsupportedOperation { .. }) => {
            CliError::Usage(other.to_string())
        }
        other => CliError::Data(other.to_string()),
    }
}

fn load(args: &ProfileArgs) -> Result<NetworkProfile, CliError> {
    Ok(load_profile(
        &args.profile,
        args.profile_format.map(ProfileFormatArg::into_format),
    )?)
}

/// Resolves the strategy flag: alltoall has a single canonical strategy and
/// may omit it; everything else must name one.
fn resolve_strategy(op: Operation, strategy: Option<Strategy>) -> Result<Strategy, CliError> {
    match (op, strategy) {
        (_, Some(s)) => Ok(s),
        (Operation::AllToAll, None) => Ok(Strategy::DirectExchange),
        (op, None) => Err(CliError::Usage(format!(
            "--strategy is required for --op {op}; pick one of: {}",
            catalog_ids(op)
        ))),
    }
}

fn catalog_ids(op: Operation) -> String {
    let ids: Vec<&str> = Strategy::catalog(op).iter().map(|s| s.id()).collect();
    ids.join(", ")
}

/// The --segment flag must be present exactly for segmented strategies;
/// both violations are usage errors that name the flag.
fn check_segment_flag(strategy: Strategy, segment: Option<u64>) -> Result<(), CliError> {
    if strategy.is_segmented() && segment.is_none() {
        return Err(CliError::Usage(format!(
            "strategy '{strategy}' is segmented: --segment <BYTES> is required"
        )));
    }
    if !strategy.is_segmented() && segment.is_some() {
        return Err(CliError::Usage(format!(
            "--segment does not apply to strategy '{strategy}'"
        )));
    }
    Ok(())
}

fn base_record(
    op: Operation,
    strategy: Strategy,
    procs: u32,
    bytes: u64,
    segment: Option<u64>,
) -> OutputRecord {
    let mut r = OutputRecord::new();
    r.push("operation", Value::Text(op.id().to_string()));
    r.push("strategy", Value::Text(strategy.id().to_string()));
    r.push("procs", Value::Int(u64::from(procs)));
    r.push("bytes", Value::Int(bytes));
    r.push("segment", segment.map_or(Value::Absent, Value::Int));
    r
}

fn prediction_row(p: &Prediction) -> OutputRecord {
    let req = &p.request;
    let mut r = base_record(
        req.operation,
        req.strategy,
        req.procs,
        req.message_bytes,
        req.segment_bytes,
    );
    r.push("predicted_us", Value::Num(p.total_us));
    r
}

fn prediction_record_with_terms(p: &Prediction) -> OutputRecord {
    let mut r = prediction_row(p);
    for term in &p.terms {
        r.push(format!("term_{}", term.label), Value::Num(term.value_us));
    }
    r
}

fn render_single(record: &OutputRecord, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(slice::from_ref(record)),
        OutputFormat::Json => render_json_object(record),
    }
}

fn render_table(records: &[OutputRecord], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(records),
        OutputFormat::Json => render_json_array(records),
    }
}

fn cmd_predict(args: PredictArgs) -> Result<String, CliError> {
    let strategy = resolve_strategy(args.op, args.strategy)?;
    if args.gamma.is_some() && args.op != Operation::AllToAll {
        return Err(CliError::Usage(
            "--gamma applies only to --op alltoall".to_string(),
        ));
    }
    check_segment_flag(strategy, args.segment)?;
    let request = CollectiveRequest::new(args.op, strategy, args.procs, args.bytes, args.segment)
        .map_err(usage_from_model)?;
    let net = load(&args.profile)?;
    let record = match (args.op, args.gamma) {
        (Operation::AllToAll, None) => {
            // No gamma: report the contention bracket instead of a point.
            let bounds = alltoall_bounds(&net, args.procs, args.bytes)
                .map_err(|e| CliError::Data(e.to_string()))?;
            let mut r = base_record(args.op, strategy, args.procs, args.bytes, None);
            r.push("lower_us", Value::Num(bounds.lower.total_us));
            r.push("upper_us", Value::Num(bounds.upper.total_us));
            r
        }
        (Operation::AllToAll, Some(gamma)) => {
            let p = predict_alltoall(&net, args.procs, args.bytes, gamma)
                .map_err(|e| CliError::Data(e.to_string()))?;
            prediction_record_with_terms(&p)
        }
        _ => {
            let p = predict(&net, &request).map_err(|e| CliError::Data(e.to_string()))?;
            prediction_record_with_terms(&p)
        }
    };
    Ok(render_single(&record, args.format))
}

/// Prices every strategy in the catalog; segmented ones get an optimized
/// segment when auto-segmentation is on, and are skipped otherwise.
fn catalog_rows(
    net: &NetworkProfile,
    op: Operation,
    procs: u32,
    bytes: u64,
    auto_segment: bool,
) -> Result<Vec<Prediction>, CliError> {
    let mut rows = Vec::new();
    for &strategy in Strategy::catalog(op) {
        if strategy.is_segmented() {
            if !auto_segment {
                continue;
            }
            let choice = optimize_segment(net, op, strategy, procs, bytes, true)
                .map_err(usage_from_tuning)?;
            rows.push(choice.prediction);
        } else {
            let request = CollectiveRequest::new(op, strategy, procs, bytes, None)
                .map_err(usage_from_model)?;
            rows.push(predict(net, &request).map_err(|e| CliError::Data(e.to_string()))?);
        }
    }
    Ok(rows)
}

fn cmd_compare(args: CompareArgs) -> Result<String, CliError> {
    if args.op == Operation::AllToAll {
        return Err(CliError::Usage(
            "compare needs --op broadcast or --op scatter; the single alltoall \
             strategy is tuned through --gamma (see predict and fit-gamma)"
                .to_string(),
        ));
    }
    let net = load(&args.profile)?;
    let mut rows = catalog_rows(&net, args.op, args.procs, args.bytes, !args.no_auto_segment)?;
    // Stable sort: equal predictions keep catalog order, matching the
    // select subcommand's tie-break.
    rows.sort_by(|a, b| a.total_us.total_cmp(&b.total_us));
    let records: Vec<OutputRecord> = rows.iter().map(prediction_row).collect();
    Ok(render_table(&records, args.format))
}

fn sweep_points(args: &CurveArgs) -> Result<Vec<u64>, CliError> {
    if args.dyadic && args.sweep != SweepAxis::Bytes {
        return Err(CliError::Usage(
            "--dyadic applies only to --sweep bytes".to_string(),
        ));
    }
    let step = args.step.unwrap_or(1);
    let mut points = Vec::new();
    if args.dyadic {
        let mut p = 1u64;
        while p <= args.to {
            if p >= args.from {
                points.push(p);
            }
            match p.checked_mul(2) {
                Some(next) => p = next,
                None => break,
            }
        }
    } else {
        let mut v = args.from;
        while v <= args.to {
            points.push(v);
            match v.checked_add(step) {
                Some(next) => v = next,
                None => break,
            }
        }
    }
    if points.is_empty() {
        return Err(CliError::Usage(format!(
            "empty sweep range: no points between {} and {}",
            args.from, args.to
        )));
    }
    Ok(points)
}

fn cmd_curve(args: CurveArgs) -> Result<String, CliError> {
    match args.op {
        Operation::AllToAll => {
            if args.gamma.is_none() {
                return Err(CliError::Usage(
                    "--op alltoall sweeps need --gamma to blend the bounds \
                     into one curve (fit one with fit-gamma)"
                        .to_string(),
                ));
            }
        }
        _ => {
            if args.gamma.is_some() {
                return Err(CliError::Usage(
                    "--gamma applies only to --op alltoall".to_string(),
                ));
            }
        }
    }
    // The fixed axis must be pinned and the swept axis left free.
    let (fixed_procs, fixed_bytes) = match args.sweep {
        SweepAxis::Bytes => {
            let procs = args.procs.ok_or_else(|| {
                CliError::Usage("--sweep bytes needs a fixed --procs".to_string())
            })?;
            if args.bytes.is_some() {
                return Err(CliError::Usage(
                    "--bytes conflicts with --sweep bytes; the swept sizes come \
                     from --from/--to"
                        .to_string(),
                ));
            }
            (Some(procs), None)
        }
        SweepAxis::Procs => {
            let bytes = args.bytes.ok_or_else(|| {
                CliError::Usage("--sweep procs needs a fixed --bytes".to_string())
            })?;
            if args.procs.is_some() {
                return Err(CliError::Usage(
                    "--procs conflicts with --sweep procs; the swept counts come \
                     from --from/--to"
                        .to_string(),
                ));
            }
            (None, Some(bytes))
        }
    };
    let points = sweep_points(&args)?;
    if args.sweep == SweepAxis::Procs {
        if let Some(&too_big) = points.iter().find(|&&p| p > u64::from(u32::MAX)) {
            return Err(CliError::Usage(format!(
                "process count {too_big} exceeds the supported range"
            )));
        }
    }
    // Validate every (op, strategy, segment-flag) combination up front so a
    // bad flag fails before any output is produced.
    for &strategy in &args.strategies {
        if args.segment.is_some() && !strategy.is_segmented() {
            return Err(CliError::Usage(format!(
                "--segment does not apply to strategy '{strategy}'"
            )));
        }
        let probe_bytes = fixed_bytes.unwrap_or_else(|| points[0].max(1));
        let probe_segment = strategy.is_segmented().then_some(1);
        CollectiveRequest::new(args.op, strategy, fixed_procs.unwrap_or(2), probe_bytes, probe_segment)
            .map_err(usage_from_model)?;
    }
    let net = load(&args.profile)?;
    let mut records = Vec::new();
    for &point in &points {
        for &strategy in &args.strategies {
            let (procs, bytes) = match args.sweep {
                SweepAxis::Bytes => (fixed_procs.expect("validated"), point),
                SweepAxis::Procs => (point as u32, fixed_bytes.expect("validated")),
            };
            let prediction = if args.op == Operation::AllToAll {
                let gamma = args.gamma.expect("validated");
                predict_alltoall(&net, procs, bytes, gamma)
                    .map_err(|e| CliError::Data(e.to_string()))?
            } else if strategy.is_segmented() {
                match args.segment {
                    Some(segment) => {
                        let request =
                            CollectiveRequest::new(args.op, strategy, procs, bytes, Some(segment))
                                .map_err(usage_from_model)?;
                        predict(&net, &request).map_err(|e| CliError::Data(e.to_string()))?
                    }
                    None => {
                        optimize_segment(&net, args.op, strategy, procs, bytes, true)
                            .map_err(usage_from_tuning)?
                            .prediction
                    }
                }
            } else {
                let request = CollectiveRequest::new(args.op, strategy, procs, bytes, None)
                    .map_err(usage_from_model)?;
                predict(&net, &request).map_err(|e| CliError::Data(e.to_string()))?
            };
            records.push(prediction_row(&prediction));
        }
    }
    Ok(render_table(&records, args.format))
}

fn cmd_optimize_segment(args: OptimizeSegmentArgs) -> Result<String, CliError> {
    if !args.strategy.is_segmented() {
        return Err(CliError::Usage(format!(
            "strategy '{}' takes no segment; segmented strategies are: \
             flat-segmented, chain-segmented, binomial-segmented",
            args.strategy
        )));
    }
    // Validate the (op, strategy, procs, bytes) combination before touching
    // the filesystem; segment size 1 is always admissible.
    CollectiveRequest::new(args.op, args.strategy, args.procs, args.bytes, Some(1))
        .map_err(usage_from_model)?;
    let net = load(&args.profile)?;
    let choice = optimize_segment(
        &net,
        args.op,
        args.strategy,
        args.procs,
        args.bytes,
        !args.no_refine,
    )
    .map_err(usage_from_tuning)?;
    let mut r = prediction_row(&choice.prediction);
    r.push("candidates_examined", Value::Int(choice.candidates_examined as u64));
    Ok(render_single(&r, args.format))
}

fn cmd_select(args: SelectArgs) -> Result<String, CliError> {
    if args.op == Operation::AllToAll {
        return Err(CliError::Usage(
            "select needs --op broadcast or --op scatter; alltoall has a single \
             strategy tuned through --gamma"
                .to_string(),
        ));
    }
    let net = load(&args.profile)?;
    let (_, prediction) =
        select_strategy(&net, args.op, args.procs, args.bytes, !args.no_auto_segment)
            .map_err(usage_from_tuning)?;
    Ok(render_single(&prediction_row(&prediction), args.format))
}

fn cmd_fit_gamma(args: FitGammaArgs) -> Result<String, CliError> {
    let net = load(&args.profile)?;
    let set = load_measurements(&args.measurements)?;
    let fitted = fit_gamma(&net, &set).map_err(|e| CliError::Data(e.to_string()))?;
    let mut r = OutputRecord::new();
    r.push("gamma", Value::Num(fitted.gamma));
    r.push("residual_us", Value::Num(fitted.residual_us));
    r.push("n_points", Value::Int(fitted.n_points as u64));
    r.push("profile_name", Value::Text(fitted.profile_name));
    Ok(render_json_object(&r))
}

fn cmd_simulate(args: SimulateArgs) -> Result<String, CliError> {
    let strategy = resolve_strategy(args.op, args.strategy)?;
    check_segment_flag(strategy, args.segment)?;
    let schedule = build_schedule(args.op, strategy, args.procs, args.bytes, args.segment)
        .map_err(|e| match e {
            // No event-level realization is a usage-level refusal, as is a
            // malformed request; schedules themselves are built correct.
            SimError::Unschedulable { .. } => CliError::Usage(e.to_string()),
            SimError::Model(m) => usage_from_model(m),
            other => CliError::Data(other.to_string()),
        })?;
    let net = load(&args.profile)?;
    let result = run(&schedule, &net, args.semantics.into_semantics());
    // The comparable closed form: for alltoall, the bound the chosen
    // semantics realizes; otherwise the strategy's own model.
    let predicted = match args.op {
        Operation::AllToAll => {
            let bounds = alltoall_bounds(&net, args.procs, args.bytes)
                .map_err(|e| CliError::Data(e.to_string()))?;
            match args.semantics {
                SemanticsArg::OnePortOverlap => bounds.lower.total_us,
                SemanticsArg::Serialized => bounds.upper.total_us,
            }
        }
        _ => {
            let request =
                CollectiveRequest::new(args.op, strategy, args.procs, args.bytes, args.segment)
                    .map_err(usage_from_model)?;
            predict(&net, &request)
                .map_err(|e| CliError::Data(e.to_string()))?
                .total_us
        }
    };
    let rel_diff = if predicted == 0.0 {
        0.0
    } else {
        (result.completion_us - predicted) / predicted
    };
    if let Some(trace_path) = &args.trace {
        let text = render_trace(&schedule, &result);
        std::fs::write(trace_path, text).map_err(|source| {
            CliError::Data(
                FormatError::Io { path: trace_path.display().to_string(), source }.to_string(),
            )
        })?;
    }
    let mut r = base_record(args.op, strategy, args.procs, args.bytes, args.segment);
    r.push("semantics", Value::Text(args.semantics.id().to_string()));
    r.push("transfers", Value::Int(schedule.transfers().len() as u64));
    r.push("simulated_us", Value::Num(result.completion_us));
    r.push("predicted_us", Value::Num(predicted));
    r.push("rel_diff", Value::Num(rel_diff));
    Ok(render_single(&r, args.format))
}

fn dispatch(command: Command) -> Result<String, CliError> {
    match command {
        Command::Predict(args) => cmd_predict(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Curve(args) => cmd_curve(args),
        Command::OptimizeSegment(args) => cmd_optimize_segment(args),
        Command::Select(args) => cmd_select(args),
        Command::FitGamma(args) => cmd_fit_gamma(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn main() -> ExitCode {
    // Data streams must stay reproducible, so diagnostics go to stderr with
    // no timestamps; default visibility is warnings and up.
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Data(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
