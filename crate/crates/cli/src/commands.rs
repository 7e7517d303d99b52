use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, ValueEnum};
use serde::Serialize;
use vdisc::cusum::{self as cs, CusumConfig, CusumTrace, KeyAlarms, SeriesKey};
use vdisc::influence::{
    self, read_centers, read_municipalities, read_relations, BuildConfig, BuildDiagnostics, Municipality,
};
use vdisc::io::{read_edge_list, write_edge_list};
use vdisc::pipeline::{read_complaints, read_consumers, ComplaintStore, PipelineError, YearMonth};
use vdisc::ranking::{
    divergence_summary, report_at, write_report_csv, DivergenceSummary, InspectionReport, RankingMode,
    RankingOptions, ReportContext, Stratum, DEFAULT_K,
};
use vdisc::scenario::{self, ScenarioKind, ScenarioParams};
use vdisc::{Graph, VertexId};

use crate::config::{required, FileConfig, Inputs};
use crate::output::{render_top_k, write_atomic, write_json};
use crate::{CliError, Common};

#[derive(Debug, Args, Clone, Default)]
pub struct GraphInputs {
    /// Directory holding inputs under their standard file names.
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    municipalities: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    centers: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    relations: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SignalInputs {
    /// Prebuilt edge list; replaces centers and relations.
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    consumers: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    complaints: Option<PathBuf>,
    /// Comma-separated operator filter [default: all]
    #[arg(long, value_delimiter = ',')]
    operators: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    inputs: GraphInputs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Joint,
    PerOperator,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    inputs: GraphInputs,
    #[command(flatten)]
    signals: SignalInputs,
    /// Month to report on, YYYY-MM [default: last complete month]
    #[arg(long, conflicts_with = "date")]
    month: Option<YearMonth>,
    /// Exact report date, YYYY-MM-DD.
    #[arg(long)]
    date: Option<NaiveDate>,
    /// Inspections per stratum [default: 5]
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Debug, Args)]
pub struct CusumArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    inputs: GraphInputs,
    #[command(flatten)]
    signals: SignalInputs,
    /// First date scanned [default: first complete window]
    #[arg(long)]
    from: Option<NaiveDate>,
    /// Last date scanned [default: end of data]
    #[arg(long)]
    to: Option<NaiveDate>,
    /// In-control mean mu0 [default: 1]
    #[arg(long)]
    target_mean: Option<f64>,
    /// Allowance k [default: 0.25]
    #[arg(long)]
    allowance: Option<f64>,
    /// Threshold h [default: 5]
    #[arg(long)]
    threshold: Option<f64>,
    /// Keep accumulating after an alarm.
    #[arg(long)]
    no_reset: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    LocalAnomaly,
    RegionalAnomaly,
    StepChange,
    Flat,
}

impl From<KindArg> for ScenarioKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::LocalAnomaly => ScenarioKind::LocalAnomaly,
            KindArg::RegionalAnomaly => ScenarioKind::RegionalAnomaly,
            KindArg::StepChange => ScenarioKind::StepChange,
            KindArg::Flat => ScenarioKind::Flat,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Number of disconnected regions, 1 to 8 [default: 3]
    #[arg(long)]
    regions: Option<usize>,
    /// [default: 2021-01-01]
    #[arg(long)]
    start: Option<NaiveDate>,
    /// [default: 120]
    #[arg(long)]
    days: Option<usize>,
    /// [default: A,B]
    #[arg(long, value_delimiter = ',')]
    operators: Option<Vec<String>>,
    /// Affected municipality id, or region name for a regional anomaly.
    #[arg(long)]
    target: Option<String>,
    /// [default: first operator]
    #[arg(long)]
    affected_operator: Option<String>,
    /// Rate multiplier, or the step size relative to the baseline.
    #[arg(long)]
    magnitude: Option<f64>,
    /// [default: middle of the span]
    #[arg(long)]
    onset: Option<NaiveDate>,
    /// Per-pair rate spread in [0, 0.1].
    #[arg(long)]
    jitter: Option<f64>,
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

fn label(path: &Path) -> String {
    path.display().to_string()
}

fn out_dir(common: &Common, file: &FileConfig) -> PathBuf {
    common
        .out_dir
        .clone()
        .or_else(|| file.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn resolve_inputs(graph: GraphInputs, signals: Option<&SignalInputs>, file: &FileConfig) -> Inputs {
    let flags = Inputs {
        municipalities: graph.municipalities,
        centers: graph.centers,
        relations: graph.relations,
        graph: signals.and_then(|s| s.graph.clone()),
        consumers: signals.and_then(|s| s.consumers.clone()),
        complaints: signals.and_then(|s| s.complaints.clone()),
    };
    Inputs::resolve(flags, graph.data_dir, file)
}

fn load_municipalities(inputs: &Inputs) -> Result<Vec<Municipality>, CliError> {
    let path = required(&inputs.municipalities, "municipalities")?;
    Ok(read_municipalities(open(&path)?, &label(&path))?)
}

fn build_from_tables(inputs: &Inputs, munis: &[Municipality]) -> Result<(Graph, BuildDiagnostics), CliError> {
    let centers_path = required(&inputs.centers, "centers")?;
    let relations_path = required(&inputs.relations, "relations")?;
    let centers = read_centers(open(&centers_path)?, &label(&centers_path))?;
    let relations = read_relations(open(&relations_path)?, &label(&relations_path))?;
    let out = influence::build_graph::<f64>(munis, &centers, &relations, &BuildConfig::standard())?;
    for w in &out.diagnostics.warnings {
        log::warn!("{w}");
    }
    Ok((out.graph, out.diagnostics))
}

fn load_graph(inputs: &Inputs, munis: &[Municipality]) -> Result<Graph, CliError> {
    match &inputs.graph {
        Some(path) => {
            let ids: Vec<VertexId> = munis.iter().map(|m| m.id.clone()).collect();
            let g = read_edge_list(open(path)?, &label(path), Some(&ids))?;
            if !g.is_normalized() {
                log::info!("normalizing {}", path.display());
            }
            Ok(g.normalize())
        }
        None => Ok(build_from_tables(inputs, munis)?.0),
    }
}

fn load_store(inputs: &Inputs) -> Result<ComplaintStore, CliError> {
    let consumers_path = required(&inputs.consumers, "consumers")?;
    let complaints_path = required(&inputs.complaints, "complaints")?;
    let consumers = read_consumers(open(&consumers_path)?, &label(&consumers_path))?;
    let complaints = read_complaints(open(&complaints_path)?, &label(&complaints_path))?;
    Ok(ComplaintStore::from_records(&consumers, &complaints)?)
}

pub fn build_graph(args: BuildGraphArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let inputs = resolve_inputs(args.inputs, None, &file);
    let munis = load_municipalities(&inputs)?;
    let (graph, diagnostics) = build_from_tables(&inputs, &munis)?;
    let dir = out_dir(&args.common, &file);
    write_atomic(&dir.join("graph.csv"), |w| write_edge_list(&graph, w))?;
    write_json(&dir.join("build_diagnostics.json"), &diagnostics)?;
    println!("vertices: {}", diagnostics.vertices);
    println!("edges: {}", diagnostics.edges);
    for w in &diagnostics.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

/// The latest month end with a complete window.
fn default_month(store: &ComplaintStore) -> Result<YearMonth, CliError> {
    let (_, end) = store.span();
    let mut month = YearMonth::of(end);
    if month.last_day() > end {
        month = YearMonth::of(month.first_day().pred_opt().expect("date in range"));
    }
    if month.last_day() < store.first_complete_date() {
        return Err(PipelineError::IncompleteWindow {
            date: month.last_day(),
            first_computable: store.first_complete_date(),
        }
        .into());
    }
    Ok(month)
}

#[derive(Serialize)]
struct RankOutput<'a> {
    #[serde(flatten)]
    report: &'a InspectionReport,
    divergence: DivergenceSummary,
}

pub fn rank(args: RankArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let inputs = resolve_inputs(args.inputs, Some(&args.signals), &file);
    let munis = load_municipalities(&inputs)?;
    let graph = load_graph(&inputs, &munis)?;
    let store = load_store(&inputs)?;

    let month = match &file.month {
        Some(m) if args.month.is_none() => Some(m.parse::<YearMonth>().map_err(CliError::Usage)?),
        _ => args.month,
    };
    let date = match (args.date, month) {
        (Some(d), _) => d,
        (None, Some(m)) => m.last_day(),
        (None, None) => match file.date {
            Some(d) => d,
            None => default_month(&store)?.last_day(),
        },
    };
    let options = RankingOptions {
        operators: args.signals.operators.or(file.operators.clone()).unwrap_or_default(),
        strata: file.strata.clone().unwrap_or_else(Stratum::defaults),
        k: args.k.or(file.k).unwrap_or(DEFAULT_K),
        mode: args
            .mode
            .map(|m| match m {
                ModeArg::Joint => RankingMode::Joint,
                ModeArg::PerOperator => RankingMode::PerOperator,
            })
            .or(file.mode)
            .unwrap_or_default(),
    };
    let ctx = ReportContext {
        graph: &graph,
        store: &store,
        municipalities: &munis,
    };
    let report = report_at(ctx, &options, date)?;
    let divergence = divergence_summary(&report, options.k);

    let dir = out_dir(&args.common, &file);
    write_json(&dir.join("report.json"), &RankOutput {
        report: &report,
        divergence: divergence.clone(),
    })?;
    write_atomic(&dir.join("report.csv"), |w| write_report_csv(&report, w))?;
    print!("{}", render_top_k(&report));
    println!(
        "\ndivergence: {} of {} top-{} entries flagged ({:.4})",
        divergence.overall.flagged, divergence.overall.top_k, options.k, divergence.overall.fraction
    );
    Ok(())
}

#[derive(Serialize)]
struct AlarmOutput<'a> {
    config: &'a CusumConfig<f64>,
    from: NaiveDate,
    to: NaiveDate,
    operators: &'a [String],
    alarms: &'a [KeyAlarms],
}

pub fn cusum(args: CusumArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let inputs = resolve_inputs(args.inputs, Some(&args.signals), &file);
    let munis = load_municipalities(&inputs)?;
    let graph = load_graph(&inputs, &munis)?;
    let store = load_store(&inputs)?;

    let defaults = CusumConfig::<f64>::standard();
    let config = CusumConfig {
        target_mean: args.target_mean.or(file.cusum.target_mean).unwrap_or(defaults.target_mean),
        allowance: args.allowance.or(file.cusum.allowance).unwrap_or(defaults.allowance),
        threshold: args.threshold.or(file.cusum.threshold).unwrap_or(defaults.threshold),
        reset_on_alarm: if args.no_reset {
            false
        } else {
            file.cusum.reset_on_alarm.unwrap_or(defaults.reset_on_alarm)
        },
    };
    config.validate()?;
    let operators = args.signals.operators.or(file.operators.clone()).unwrap_or_default();
    let from = args.from.or(file.from).unwrap_or_else(|| store.first_complete_date());
    let to = args.to.or(file.to).unwrap_or(store.span().1);
    if from > to {
        return Err(CliError::Usage(format!("--from {from} is after --to {to}")));
    }
    let history = cs::discrepancy_history(&graph, &store, &operators, Some(from), Some(to))?;
    let traces: Vec<(&SeriesKey, CusumTrace<f64>)> = history
        .iter()
        .map(|(k, s)| Ok((k, cs::cusum(s, &config)?)))
        .collect::<Result<_, cs::CusumError>>()?;
    let alarms = cs::scan_all(&history, &config)?;
    let operators = if operators.is_empty() { store.operators() } else { operators };

    let dir = out_dir(&args.common, &file);
    write_atomic(&dir.join("cusum_trace.csv"), |w| {
        cs::write_trace_csv(traces.iter().map(|(k, t)| (*k, t)), w)
    })?;
    write_json(&dir.join("alarms.json"), &AlarmOutput {
        config: &config,
        from,
        to,
        operators: &operators,
        alarms: &alarms,
    })?;
    println!("scanned {} series from {from} to {to}", history.len());
    println!("alarmed: {}", alarms.len());
    for a in &alarms {
        println!(
            "  {}  {} / {}  ({} alarm{})",
            a.first_alarm,
            a.municipality,
            a.operator,
            a.alarm_dates.len(),
            if a.alarm_dates.len() == 1 { "" } else { "s" }
        );
    }
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let sim = &file.simulate;
    let kind = args
        .kind
        .map(ScenarioKind::from)
        .or(sim.kind)
        .ok_or_else(|| CliError::Usage("missing scenario kind: pass --kind".into()))?;
    let mut params = ScenarioParams::new(kind, args.seed.or(sim.seed).unwrap_or(0));
    if let Some(r) = args.regions.or(sim.regions) {
        params.regions = r;
    }
    if let Some(s) = args.start.or(sim.start) {
        params.start = s;
    }
    if let Some(d) = args.days.or(sim.days) {
        params.days = d;
    }
    if let Some(ops) = args.operators.or(sim.operators.clone()) {
        params.operators = ops;
    }
    params.target = args.target.or(sim.target.clone());
    params.affected_operator = args.affected_operator.or(sim.affected_operator.clone());
    params.magnitude = args.magnitude.or(sim.magnitude);
    params.onset = args.onset.or(sim.onset);
    params.jitter = args.jitter.or(sim.jitter);

    let world = scenario::generate(&params)?;
    let dir = out_dir(&args.common, &file);
    for (name, bytes) in world.render() {
        write_atomic(&dir.join(name), |w| w.write_all(&bytes))?;
    }
    println!(
        "{} scenario, seed {}: {} municipalities, {} relations, {} complaint rows in {}",
        kind.as_str(),
        params.seed,
        world.municipalities.len(),
        world.relations.len(),
        world.complaints.len(),
        dir.display()
    );
    for a in &world.affected {
        println!("  affected: {} / {}", a.municipality, a.operator);
    }
    Ok(())
}
