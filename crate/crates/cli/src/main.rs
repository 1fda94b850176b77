//! `sepaird` command-line front end.

mod svg;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sepaird::abm::{World, EVENT_HEADER};
use sepaird::montecarlo::{
    self, notched_box, quantile_series, read_boxes, read_dataset, read_quantiles, sweep_scenario, write_boxes,
    write_dataset_header, write_manifest, write_quantiles, write_rows, MetricRow, ScenarioKey, SweepGrid,
};
use sepaird::ode::{abm_to_ode, effective_reproduction, integrate, OdeState};
use sepaird::{Error, SimParams};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Core { path: PathBuf, source: Error },
    #[error(transparent)]
    Plain(#[from] Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 3,
            CliError::Core { source, .. } | CliError::Plain(source) if source.is_io() => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "sepaird", version, about = "Epidemic simulation with mutating variants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One agent-based run; writes one metric row per step.
    Run(RunArgs),
    /// Replicated runs over a parameter grid; writes dataset.csv and manifest.csv.
    Sweep(SweepArgs),
    /// Integrates the compartment model; writes the trajectory.
    Ode(OdeArgs),
    /// Quantile bands or notched box statistics from a sweep dataset.
    Analyze(AnalyzeArgs),
    /// Renders an aggregation table as SVG.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// key=value parameter file
    config: PathBuf,
    /// Overrides the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-event log here.
    #[arg(long)]
    events: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Base parameter file; grid values override it
    config: PathBuf,
    /// Grid file with comma-separated value lists.
    #[arg(long)]
    grid: PathBuf,
    /// Overrides the grid's replication count.
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for replications.
    #[arg(long, env = "SEPAIRD_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct OdeArgs {
    config: PathBuf,
    /// Days to integrate (defaults to the config horizon).
    #[arg(long)]
    horizon: Option<f64>,
    /// RK4 step size
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    dt: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["quantiles", "box_at"])))]
struct AnalyzeArgs {
    /// Sweep dataset CSV.
    dataset: PathBuf,
    /// Metric column to aggregate
    #[arg(long)]
    metric: String,
    /// Comma-separated quantiles, e.g. 0.05,0.5,0.95
    #[arg(long, value_delimiter = ',')]
    quantiles: Option<Vec<f64>>,
    /// Step at which to compute box statistics.
    #[arg(long)]
    box_at: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PlotKind {
    Lines,
    Boxes,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Output of `analyze`.
    table: PathBuf,
    #[arg(long, value_enum)]
    kind: PlotKind,
    #[arg(long)]
    out: PathBuf,
    /// Metric name for the value axis.
    #[arg(long, default_value = "value")]
    metric: String,
    /// Step shown on box plots.
    #[arg(long)]
    step: Option<usize>,
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

/// Runs `f` against the output file, or stdout when no path is given.
fn with_output(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> sepaird::Result<()>) -> CliResult<()> {
    let at = |path: &Path, source| CliError::Core { path: path.to_owned(), source };
    match out {
        Some(path) => {
            let mut w = create(path)?;
            f(&mut w).map_err(|e| at(path, e))?;
            w.flush().map_err(|source| CliError::Io { path: path.to_owned(), source })
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            f(&mut w).map_err(|e| at(Path::new("<stdout>"), e))?;
            w.flush().map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn load_params(path: &Path) -> CliResult<SimParams> {
    let text = read_text(path)?;
    SimParams::from_config_str(&text)
        .and_then(SimParams::validate)
        .map_err(|source| CliError::Core { path: path.to_owned(), source })
}

fn cmd_run(args: RunArgs) -> CliResult<()> {
    let mut params = load_params(&args.config)?;
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    let horizon = params.horizon;
    let key = ScenarioKey::of(&params);
    let mut world = if args.events.is_some() { World::with_event_log(params)? } else { World::new(params)? };
    let mut events = match &args.events {
        Some(path) => {
            let mut w = create(path)?;
            writeln!(w, "{EVENT_HEADER}").map_err(|source| CliError::Io { path: path.clone(), source })?;
            Some((path, w))
        }
        None => None,
    };
    let mut rows = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        rows.push(MetricRow::from_step(key, 0, &world.step()));
        if let Some((path, w)) = &mut events {
            for e in world.take_events() {
                writeln!(w, "{}", e.csv_line()).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
            }
        }
    }
    if let Some((path, mut w)) = events {
        w.flush().map_err(|source| CliError::Io { path: path.clone(), source })?;
    }
    with_output(args.out.as_deref(), |w| {
        write_dataset_header(w)?;
        write_rows(w, &rows)
    })
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let base = load_params(&args.config)?;
    let text = read_text(&args.grid)?;
    let at_grid = |source| CliError::Core { path: args.grid.clone(), source };
    let mut grid = SweepGrid::from_grid_str(base, &text).map_err(at_grid)?;
    if let Some(reps) = args.reps {
        grid.replications = reps;
    }
    let grid = grid.validate().map_err(at_grid)?;
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;

    fs::create_dir_all(&args.out).map_err(|source| CliError::Io { path: args.out.clone(), source })?;
    let manifest_path = args.out.join("manifest.csv");
    let mut manifest = create(&manifest_path)?;
    write_manifest(&mut manifest, &grid.manifest())
        .and_then(|_| manifest.flush().map_err(Error::from))
        .map_err(|source| CliError::Core { path: manifest_path.clone(), source })?;

    let data_path = args.out.join("dataset.csv");
    let mut data = create(&data_path)?;
    let at_data = |source| CliError::Core { path: data_path.clone(), source };
    write_dataset_header(&mut data).map_err(at_data)?;
    for key in grid.scenarios() {
        let rows = pool.install(|| sweep_scenario(&grid, &key))?;
        write_rows(&mut data, &rows).map_err(at_data)?;
    }
    data.flush().map_err(|source| CliError::Io { path: data_path.clone(), source })
}

/// Grid times print without accumulated binary noise (0.15, not 0.15000000000000002).
fn tidy(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

fn cmd_ode(args: OdeArgs) -> CliResult<()> {
    let params = load_params(&args.config)?;
    let horizon = args.horizon.unwrap_or(params.horizon as f64);
    let ode = abm_to_ode(&params)?.validate()?;
    let s0 = OdeState::seeded(params.n_agents as f64, params.n_initial_infected as f64);
    let traj = integrate(s0, &ode, horizon, args.dt)?;
    with_output(args.out.as_deref(), |w| {
        writeln!(w, "t,S,E,P,A,I,R,D,Rt")?;
        for (t, s) in &traj.points {
            let rt = effective_reproduction(s, &ode)?;
            let [sus, e, p, a, i, r, d] = s.to_array();
            writeln!(w, "{},{sus},{e},{p},{a},{i},{r},{d},{rt}", tidy(*t))?;
        }
        Ok(())
    })?;
    if traj.clipped > 0 {
        eprintln!("note: {} negative compartment values clipped to 0", traj.clipped);
    }
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> CliResult<()> {
    montecarlo::check_metric(&args.metric)?;
    let ds =
        read_dataset(open(&args.dataset)?).map_err(|source| CliError::Core { path: args.dataset.clone(), source })?;
    if ds.rows.is_empty() {
        return Err(CliError::Plain(Error::NoData(" in dataset".into())));
    }
    match (args.quantiles, args.box_at) {
        (Some(qs), None) => {
            let table = quantile_series(&ds, &args.metric, &qs)?;
            with_output(args.out.as_deref(), |w| write_quantiles(w, &table))
        }
        (None, Some(step)) => {
            let table = notched_box(&ds, &args.metric, step)?;
            with_output(args.out.as_deref(), |w| write_boxes(w, &table))
        }
        _ => Err(CliError::Usage("exactly one of --quantiles and --box-at is required".into())),
    }
}

fn cmd_plot(args: PlotArgs) -> CliResult<()> {
    let at = |source| CliError::Core { path: args.table.clone(), source };
    let text = read_text(&args.table)?;
    if text.trim().is_empty() {
        return Err(CliError::Usage("no data".into()));
    }
    let doc = match args.kind {
        PlotKind::Lines => {
            let rows = read_quantiles(text.as_bytes()).map_err(at)?;
            if rows.is_empty() {
                return Err(CliError::Usage("no data".into()));
            }
            svg::quantile_lines(&rows, &args.metric)
        }
        PlotKind::Boxes => {
            let rows = read_boxes(text.as_bytes()).map_err(at)?;
            if rows.is_empty() {
                return Err(CliError::Usage("no data".into()));
            }
            svg::notched_boxes(&rows, &args.metric, args.step)
        }
    };
    fs::write(&args.out, doc).map_err(|source| CliError::Io { path: args.out.clone(), source })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Ode(a) => cmd_ode(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
