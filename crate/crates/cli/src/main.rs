use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fcrack::fuelcell::calibrate_load_following;
use fcrack::io::config::PlantConfig;
use fcrack::io::report::{self, AvailabilityRow, CsvRecorder, Provenance, RunReport, SizingReport};
use fcrack::io::surge::{frequent_surges, gen_surge, single_surge_day, SurgeSpec};
use fcrack::io::trace::{read_trace_file, PowerTrace, TraceFile};
use fcrack::plant::{availability_sweep, min_esd_for_trace};
use fcrack::policies::PolicyKind;
use fcrack::sim::{simulate, SimSettings, Workload};
use fcrack::sizing::{self, Sla};
use fcrack::Error;

#[derive(Parser)]
#[command(name = "fcrack", version, about = "Fuel-cell rack simulator, capping policies and storage sizing")]
struct Cli {
    /// Simulation step, seconds.
    #[arg(long, global = true, default_value_t = 0.1)]
    dt: f64,
    /// Seed for per-server intensity spread and generated traces.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Capping control period, seconds.
    #[arg(long, global = true, default_value_t = 2.0)]
    tcapping: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trace under one policy (or uncapped) and write the report.
    Simulate(SimulateArgs),
    /// Write a synthetic surge trace.
    Surge(SurgeArgs),
    /// Print the smallest storage capacity (J) that rides out a trace uncapped.
    MinEsd(TraceArgs),
    /// Unavailable fraction of uncapped runs across storage sizes.
    Availability(AvailabilityArgs),
    /// Sweep policies and storage sizes against SLA margins.
    Size(SizeArgs),
    /// Fit the fuel-processor time constant to a load-following slope.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct TraceArgs {
    /// Plant config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `t_s,demand_w` or `t_s,server_id,intensity` CSV.
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: TraceArgs,
    /// Policy name, or `none` for an uncapped run.
    #[arg(long, default_value = "C-FCA-WU", value_parser = parse_policy)]
    policy: PolicyArg,
    /// Storage size as a fraction of the trace's minimum uncapped size.
    #[arg(long, conflicts_with = "capacity_j")]
    capacity_frac: Option<f64>,
    /// Storage size in joules.
    #[arg(long)]
    capacity_j: Option<f64>,
    /// Directory for report.json, steps.csv and decisions.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Archetype {
    /// Eight flat hours with one large surge.
    SingleSurgeDay,
    /// Eight hours with a random surge every 15-30 minutes.
    FrequentSurges,
}

#[derive(Args)]
struct SurgeArgs {
    #[arg(long, default_value_t = 5600.0)]
    base: f64,
    #[arg(long, default_value_t = 4700.0)]
    magnitude: f64,
    /// W/s
    #[arg(long, default_value_t = 78.0)]
    slope: f64,
    /// Ramps plus plateau, seconds.
    #[arg(long, default_value_t = 660.0)]
    width: f64,
    #[arg(long, default_value_t = 120.0)]
    pre: f64,
    #[arg(long, default_value_t = 120.0)]
    post: f64,
    /// Emit a whole-day archetype instead of a single surge.
    #[arg(long, value_enum)]
    archetype: Option<Archetype>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AvailabilityArgs {
    #[command(flatten)]
    input: TraceArgs,
    /// `start:stop:step` as fractions of the minimum uncapped size.
    #[arg(long, default_value = "0:1:0.05")]
    capacities: String,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SizeArgs {
    #[command(flatten)]
    input: TraceArgs,
    /// SLA JSON; baseline-relative default margins when omitted.
    #[arg(long)]
    sla: Option<PathBuf>,
    /// `all` or a comma-separated list of policy names.
    #[arg(long, default_value = "all")]
    policies: String,
    /// `start:stop:step` capacity fractions.
    #[arg(long, default_value = "0.05:1:0.05")]
    fractions: String,
    /// Directory for sizing_report.json and sweep.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Load-following slope to fit, W/s.
    #[arg(long, default_value_t = 16.0)]
    target_slope: f64,
    /// Operating range `low:high`, watts.
    #[arg(long, default_value = "5600:12500")]
    range: String,
    /// Calibrated config path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A policy, or `None` for an uncapped run.
#[derive(Clone, Copy)]
struct PolicyArg(Option<PolicyKind>);

fn parse_policy(s: &str) -> Result<PolicyArg, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(PolicyArg(None));
    }
    s.parse::<PolicyKind>().map(|p| PolicyArg(Some(p))).map_err(|e| e.to_string())
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn parse_numbers(s: &str, n: usize, what: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("{what} `{s}` is not numeric")))?;
    if parts.len() != n || parts.iter().any(|v| !v.is_finite()) {
        return Err(usage(format!("{what} `{s}` needs {n} finite values separated by `:`")));
    }
    Ok(parts)
}

/// Inclusive `start:stop:step` grid; points are counted, not accumulated,
/// so 0.05 steps land on the decimal values.
fn parse_grid(s: &str, what: &str) -> Result<Vec<f64>, Error> {
    let v = parse_numbers(s, 3, what)?;
    let (start, stop, step) = (v[0], v[1], v[2]);
    if !(step > 0.0 && stop >= start && start >= 0.0) {
        return Err(usage(format!("{what} `{s}` needs 0 <= start <= stop and step > 0")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9).collect())
}

fn load_config(path: Option<&Path>) -> Result<PlantConfig, Error> {
    match path {
        Some(p) => PlantConfig::load(p),
        None => Ok(PlantConfig::default()),
    }
}

fn settings(cli: &Cli) -> Result<SimSettings, Error> {
    if !(cli.dt.is_finite() && cli.dt > 0.0) {
        return Err(usage("--dt must be > 0"));
    }
    if !(cli.tcapping.is_finite() && cli.tcapping > 0.0) {
        return Err(usage("--tcapping must be > 0"));
    }
    Ok(SimSettings { dt_s: cli.dt, t_capping_s: cli.tcapping, seed: cli.seed, ..SimSettings::default() })
}

fn load_workload(cfg: &PlantConfig, path: &Path, s: &SimSettings) -> Result<Workload, Error> {
    match read_trace_file(path)? {
        TraceFile::Rack(samples) => {
            let trace = samples.to_uniform(s.dt_s)?;
            trace.check_rated(cfg.fuel_cell.rated_power_w)?;
            Workload::from_trace(&trace, &cfg.rack, s.seed)
        }
        TraceFile::PerServer(series) => Workload::from_intensities(series.to_uniform(s.dt_s)?, s.dt_s, &cfg.rack),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn out_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })
}

/// Writes to `path`, or stdout when there is none.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<(), Error>) -> Result<(), Error> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush().map_err(|e| Error::Io { path: p.into(), source: e })
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

fn provenance(cfg: &PlantConfig, s: &SimSettings, trace: &Path) -> Provenance {
    Provenance { config: cfg.clone(), settings: s.clone(), trace: trace.display().to_string() }
}

fn run_simulate(cli: &Cli, a: &SimulateArgs) -> Result<(), Error> {
    let s = settings(cli)?;
    let cfg = load_config(a.input.config.as_deref())?;
    if let Some(p) = a.policy.0 {
        if cfg.disabled_policies.contains(&p) {
            return Err(usage(format!("{p} is disabled for this rack")));
        }
    }
    let plant = cfg.plant(s.dt_s)?;
    let workload = load_workload(&cfg, &a.input.trace, &s)?;
    let capacity = match (a.capacity_j, a.capacity_frac) {
        (Some(c), _) => c,
        (None, Some(f)) => {
            if !(f.is_finite() && f >= 0.0) {
                return Err(usage("--capacity-frac must be >= 0"));
            }
            let base = sizing::baseline_capacity(&plant, &workload)?;
            f * base
        }
        (None, None) => cfg.esd.capacity_j,
    };
    let plant = plant.with_capacity(capacity);
    let mut resolved = cfg.clone();
    resolved.esd.capacity_j = capacity;

    let report = match &a.out {
        Some(dir) => {
            out_dir(dir)?;
            let mut rec = CsvRecorder::new(create(&dir.join("steps.csv"))?, Some(create(&dir.join("decisions.csv"))?));
            let r = simulate(&plant, &workload, &s, a.policy.0, Some(&mut rec))?;
            rec.finish()?;
            r
        }
        None => simulate(&plant, &workload, &s, a.policy.0, None)?,
    };
    let run = RunReport { provenance: provenance(&resolved, &s, &a.input.trace), report };
    let json = report::to_json(&run)?;
    if let Some(dir) = &a.out {
        write_file(&dir.join("report.json"), &json)?;
    }
    print!("{}", report::to_json(&run.report)?);
    Ok(())
}

fn run_surge(cli: &Cli, a: &SurgeArgs) -> Result<(), Error> {
    let s = settings(cli)?;
    let trace: PowerTrace = match a.archetype {
        Some(Archetype::SingleSurgeDay) => single_surge_day(s.dt_s),
        Some(Archetype::FrequentSurges) => frequent_surges(s.dt_s, s.seed),
        None => gen_surge(
            &SurgeSpec {
                base_w: a.base,
                magnitude_w: a.magnitude,
                slope_w_per_s: a.slope,
                width_s: a.width,
                pre_s: a.pre,
                post_s: a.post,
            },
            s.dt_s,
        )?,
    };
    with_output(a.out.as_deref(), |w| trace.write_csv(w))
}

fn run_min_esd(cli: &Cli, a: &TraceArgs) -> Result<(), Error> {
    let s = settings(cli)?;
    let cfg = load_config(a.config.as_deref())?;
    let plant = cfg.plant(s.dt_s)?;
    let workload = load_workload(&cfg, &a.trace, &s)?;
    println!("{}", min_esd_for_trace(&plant, workload.demand_w())?);
    Ok(())
}

fn run_availability(cli: &Cli, a: &AvailabilityArgs) -> Result<(), Error> {
    let s = settings(cli)?;
    let fractions = parse_grid(&a.capacities, "--capacities")?;
    let cfg = load_config(a.input.config.as_deref())?;
    let plant = cfg.plant(s.dt_s)?;
    let workload = load_workload(&cfg, &a.input.trace, &s)?;
    let base = sizing::baseline_capacity(&plant, &workload)?;
    let capacities: Vec<f64> = fractions.iter().map(|f| f * base).collect();
    let rows: Vec<AvailabilityRow> = availability_sweep(&plant, workload.demand_w(), &capacities)?
        .into_iter()
        .zip(&fractions)
        .map(|((c, u), &f)| AvailabilityRow { fraction: f, capacity_j: c, unavailability: u })
        .collect();
    with_output(a.out.as_deref(), |w| report::write_availability_csv(w, &rows))
}

fn parse_policies(s: &str) -> Result<Vec<PolicyKind>, Error> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(PolicyKind::ALL.to_vec());
    }
    s.split(',').map(|p| p.trim().parse::<PolicyKind>().map_err(|e| usage(e.to_string()))).collect()
}

fn run_size(cli: &Cli, a: &SizeArgs) -> Result<(), Error> {
    let s = settings(cli)?;
    let fractions = parse_grid(&a.fractions, "--fractions")?;
    let cfg = load_config(a.input.config.as_deref())?;
    let policies = cfg.enabled(&parse_policies(&a.policies)?);
    if policies.is_empty() {
        return Err(usage("every requested policy is disabled for this rack"));
    }
    let sla: Sla = match &a.sla {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => Sla::default(),
    };
    let plant = cfg.plant(s.dt_s)?;
    let workload = load_workload(&cfg, &a.input.trace, &s)?;
    let result = sizing::sweep(&plant, &workload, &s, &policies, &fractions, &sla)?;
    out_dir(&a.out)?;
    let mut w = create(&a.out.join("sweep.csv"))?;
    report::write_sweep_csv(&mut w, &result)?;
    w.flush().map_err(|e| Error::Io { path: a.out.join("sweep.csv"), source: e })?;
    let rep = SizingReport { provenance: provenance(&cfg, &s, &a.input.trace), result };
    write_file(&a.out.join("sizing_report.json"), &report::to_json(&rep)?)?;
    let summary = serde_json::json!({
        "chosen": rep.result.chosen,
        "baseline_capacity_j": rep.result.baseline_capacity_j,
        "no_reduction_possible": rep.result.no_reduction_possible,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn run_calibrate(cli: &Cli, a: &CalibrateArgs) -> Result<(), Error> {
    let s = settings(cli)?;
    let range = parse_numbers(&a.range, 2, "--range")?;
    let mut cfg = load_config(a.config.as_deref())?;
    if !(a.target_slope.is_finite() && a.target_slope > 0.0) {
        return Err(usage("--target-slope must be > 0"));
    }
    cfg.fuel_cell.load_following_w_per_s = a.target_slope;
    let (params, log) = calibrate_load_following(&cfg.fuel_cell, (range[0], range[1]), s.dt_s)?;
    cfg.fuel_cell = params;
    cfg.calibration = Some(log);
    let json = cfg.to_json()?;
    match &a.out {
        Some(p) => write_file(p, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Simulate(a) => run_simulate(cli, a),
        Command::Surge(a) => run_surge(cli, a),
        Command::MinEsd(a) => run_min_esd(cli, a),
        Command::Availability(a) => run_availability(cli, a),
        Command::Size(a) => run_size(cli, a),
        Command::Calibrate(a) => run_calibrate(cli, a),
    }
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            eprintln!("{}", error_json("usage", e.render().to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
