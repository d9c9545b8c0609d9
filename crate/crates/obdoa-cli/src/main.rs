//! Command-line front end for the one-bit DOA library.
//!
//! Subcommands cover the full pipeline: array geometry inspection, snapshot
//! simulation, one-bit quantization dumps, MUSIC spectra, DOA estimation,
//! Cramér-Rao bounds and Monte Carlo experiments. Exit codes: 0 on success,
//! 2 for configuration/input problems, 3 for numerical failures.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use obdoa_core::estimator::{
    baseline_covariance, baseline_unquantized, music_spectrum, ob_music1, ob_music1_covariance,
    ob_music2, ob_music2_covariance, CoarrayCovariance,
};
use obdoa_core::geometry::{parse_array_spec, CoarrayGeometry};
use obdoa_core::harness::{
    parse_experiment, parse_scenario, result_to_csv, result_to_json, run_experiment, Method,
    RunMetadata,
};
use obdoa_core::io::{read_snapshots, snapshots_to_csv, write_snapshots};
use obdoa_core::quantize::one_bit_quantize;
use obdoa_core::signal::{generate_snapshots, DipoleAxis, Scenario, SnapshotMatrix};
use obdoa_core::{crb, Error};

#[derive(Parser)]
#[command(name = "obdoa", version, about = "One-bit DOA estimation on sparse cross-dipole arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print array positions, coarray lags, holes and the uniform segment.
    Geometry(GeometryArgs),
    /// Simulate snapshots for a scenario file and write them to a container.
    Simulate(SimulateArgs),
    /// One-bit quantize a snapshot container (debugging aid).
    Quantize(QuantizeArgs),
    /// Emit MUSIC pseudo-spectra over a direction grid as CSV.
    Spectrum(SpectrumArgs),
    /// Estimate directions and report them as JSON.
    Estimate(EstimateArgs),
    /// Tabulate one-bit and unquantized bounds over SNR/snapshot grids.
    Crb(CrbArgs),
    /// Run a Monte Carlo experiment described by a config file.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TextFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SnapshotFormat {
    Bin,
    Csv,
}

#[derive(Args)]
struct GeometryArgs {
    /// Array spec, e.g. "nested 3 3", "coprime 2 3", "ula 6", "custom 0 1 4 6".
    #[arg(long, conflicts_with = "config")]
    array: Option<String>,
    /// Scenario file to take the array from instead.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: TextFormat,
    /// Output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Quantize before writing.
    #[arg(long)]
    quantize: bool,
    #[arg(long, value_enum, default_value = "bin")]
    format: SnapshotFormat,
    /// Output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QuantizeArgs {
    /// Snapshot container to quantize.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "bin")]
    format: SnapshotFormat,
    /// Output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated methods (default: all four).
    #[arg(long, default_value = "ob-music1-x,ob-music1-y,ob-music2,baseline")]
    methods: String,
    /// Direction grid step over [-1/2, 1/2).
    #[arg(long, default_value_t = 1e-3)]
    grid_step: f64,
    /// Output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Scenario file to simulate from.
    #[arg(long, conflicts_with_all = ["snapshots", "array", "k"])]
    config: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Snapshot container to estimate from instead of simulating.
    #[arg(long, requires = "array", requires = "k")]
    snapshots: Option<PathBuf>,
    /// Array spec for --snapshots input.
    #[arg(long)]
    array: Option<String>,
    /// Source count for --snapshots input.
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated methods (default: all four).
    #[arg(long, default_value = "ob-music1-x,ob-music1-y,ob-music2,baseline")]
    methods: String,
    /// Output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CrbArgs {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated SNR grid in dB (default: the scenario's own level).
    #[arg(long)]
    snr_grid: Option<String>,
    /// Comma-separated snapshot-count grid (default: the scenario's count).
    #[arg(long)]
    snapshot_grid: Option<String>,
    /// Monte Carlo draws of the signal sequence per grid cell.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Model the direction dependence of the y dipole gain in the bound.
    #[arg(long)]
    couple_y_gain: bool,
    /// Output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Override the experiment seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Pin the rayon worker count.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: TextFormat,
    /// Output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Geometry(args) => cmd_geometry(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Quantize(args) => cmd_quantize(args),
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Crb(args) => cmd_crb(args),
        Command::Experiment(args) => cmd_experiment(args),
    };
    if let Err(err) = result {
        // A reader that stopped consuming stdout (e.g. `head`) is not an
        // error worth reporting.
        if let Error::Io(io) = &err {
            if io.kind() == std::io::ErrorKind::BrokenPipe {
                return;
            }
        }
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numerical(_) | Error::EstimationFailure(_) | Error::SingularInformation(_) => 3,
        _ => 2,
    }
}

fn read_config(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(Error::Io)
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(Error::Io),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).map_err(Error::Io)?;
            stdout.flush().map_err(Error::Io)
        }
    }
}

fn parse_methods(list: &str) -> Result<Vec<Method>, Error> {
    let mut methods = Vec::new();
    for tok in list.split([',', ' ']).filter(|t| !t.is_empty()) {
        let m = Method::parse(tok)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method '{tok}'")))?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(Error::InvalidParameter("empty method list".into()));
    }
    Ok(methods)
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario<f64>, Error> {
    let mut scenario = parse_scenario(&read_config(path)?)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn cmd_geometry(args: GeometryArgs) -> Result<(), Error> {
    let config = match (&args.array, &args.config) {
        (Some(spec), None) => parse_array_spec(spec)?,
        (None, Some(path)) => load_scenario(path, None)?.array,
        _ => {
            return Err(Error::InvalidParameter(
                "give exactly one of --array or --config".into(),
            ))
        }
    };
    let geometry = CoarrayGeometry::new(config.clone());
    let coarray = geometry.coarray();
    let holes = coarray.holes();
    let join = |v: &[i64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };

    let text = match args.format {
        TextFormat::Csv => {
            let mut t = String::from("field,value\n");
            let _ = writeln!(t, "kind,{}", config.kind());
            let _ = writeln!(t, "sensors,{}", config.len());
            let _ = writeln!(t, "positions,{}", join(config.positions()));
            let _ = writeln!(t, "aperture,{}", config.aperture());
            let _ = writeln!(t, "coarray_lags,{}", join(coarray.lags()));
            let _ = writeln!(t, "uniform_segment,-{0}..{0}", coarray.uniform_max());
            let _ = writeln!(t, "virtual_sensors,{}", 2 * coarray.uniform_max() + 1);
            let _ = writeln!(t, "holes,{}", join(&holes));
            t
        }
        TextFormat::Json => {
            let value = json!({
                "kind": config.kind().to_string(),
                "sensors": config.len(),
                "positions": config.positions(),
                "aperture": config.aperture(),
                "coarray_lags": coarray.lags(),
                "uniform_max": coarray.uniform_max(),
                "virtual_sensors": 2 * coarray.uniform_max() + 1,
                "holes": holes,
            });
            let mut s = serde_json::to_string_pretty(&value).expect("serializable");
            s.push('\n');
            s
        }
    };
    write_output(args.out.as_deref(), text.as_bytes())
}

fn emit_snapshots(
    snaps: &SnapshotMatrix<f64>,
    format: SnapshotFormat,
    out: Option<&Path>,
) -> Result<(), Error> {
    match format {
        SnapshotFormat::Bin => {
            let mut bytes = Vec::new();
            write_snapshots(&mut bytes, snaps)?;
            write_output(out, &bytes)
        }
        SnapshotFormat::Csv => write_output(out, snapshots_to_csv(snaps).as_bytes()),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let scenario = load_scenario(&args.config, args.seed)?;
    let generated = generate_snapshots(&scenario)?;
    let snaps = if args.quantize {
        one_bit_quantize(&generated.snapshots)?
    } else {
        generated.snapshots
    };
    emit_snapshots(&snaps, args.format, args.out.as_deref())
}

fn cmd_quantize(args: QuantizeArgs) -> Result<(), Error> {
    let file = std::fs::File::open(&args.input).map_err(Error::Io)?;
    let snaps = read_snapshots(std::io::BufReader::new(file))?;
    let quantized = one_bit_quantize(&snaps)?;
    emit_snapshots(&quantized, args.format, args.out.as_deref())
}

fn method_covariance(
    method: Method,
    raw: &SnapshotMatrix<f64>,
    quantized: Option<&SnapshotMatrix<f64>>,
    geometry: &CoarrayGeometry,
) -> Result<CoarrayCovariance<f64>, Error> {
    let q = || quantized.expect("quantized snapshots prepared");
    match method {
        Method::ObMusic1X => ob_music1_covariance(q(), DipoleAxis::X, geometry),
        Method::ObMusic1Y => ob_music1_covariance(q(), DipoleAxis::Y, geometry),
        Method::ObMusic2 => ob_music2_covariance(q(), geometry),
        Method::Baseline => baseline_covariance(raw, geometry),
    }
}

fn cmd_spectrum(args: SpectrumArgs) -> Result<(), Error> {
    if !(args.grid_step > 0.0 && args.grid_step <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "grid step {} outside (0, 0.5]",
            args.grid_step
        )));
    }
    let methods = parse_methods(&args.methods)?;
    let scenario = load_scenario(&args.config, args.seed)?;
    let k = scenario.sources.len();
    let geometry = CoarrayGeometry::new(scenario.array.clone());
    let generated = generate_snapshots(&scenario)?;
    let quantized = if methods.iter().any(|m| m.one_bit()) {
        Some(one_bit_quantize(&generated.snapshots)?)
    } else {
        None
    };

    let steps = (1.0 / args.grid_step).round() as usize;
    let grid: Vec<f64> = (0..steps).map(|i| -0.5 + i as f64 * args.grid_step).collect();

    let mut columns = Vec::with_capacity(methods.len());
    for &method in &methods {
        let cov = method_covariance(method, &generated.snapshots, quantized.as_ref(), &geometry)?;
        columns.push(music_spectrum(&cov, k, &grid)?);
    }

    let mut text = String::from("theta_bar");
    for m in &methods {
        let _ = write!(text, ",{m}");
    }
    text.push('\n');
    for (i, &theta) in grid.iter().enumerate() {
        let _ = write!(text, "{theta}");
        for col in &columns {
            let _ = write!(text, ",{}", col[i].1);
        }
        text.push('\n');
    }
    write_output(args.out.as_deref(), text.as_bytes())
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), Error> {
    let methods = parse_methods(&args.methods)?;
    let (raw, k, array) = match (&args.config, &args.snapshots) {
        (Some(path), None) => {
            let scenario = load_scenario(path, args.seed)?;
            let generated = generate_snapshots(&scenario)?;
            (
                generated.snapshots,
                scenario.sources.len(),
                scenario.array,
            )
        }
        (None, Some(path)) => {
            let file = std::fs::File::open(path).map_err(Error::Io)?;
            let snaps = read_snapshots(std::io::BufReader::new(file))?;
            let spec = args.array.as_deref().expect("clap enforces --array");
            let k = args.k.expect("clap enforces --k");
            let array = parse_array_spec(spec)?;
            if array.len() != snaps.sensors() {
                return Err(Error::DimensionMismatch(format!(
                    "array has {} sensors but the container holds {}",
                    array.len(),
                    snaps.sensors()
                )));
            }
            (snaps, k, array)
        }
        _ => {
            return Err(Error::InvalidParameter(
                "give exactly one of --config or --snapshots".into(),
            ))
        }
    };
    let geometry = CoarrayGeometry::new(array.clone());
    let quantized = if methods.iter().any(|m| m.one_bit()) {
        if raw.quantized() {
            Some(raw.clone())
        } else {
            Some(one_bit_quantize(&raw)?)
        }
    } else {
        None
    };

    let mut estimates = Vec::with_capacity(methods.len());
    for &method in &methods {
        let start = Instant::now();
        let est = match method {
            Method::ObMusic1X => {
                ob_music1(quantized.as_ref().expect("prepared"), DipoleAxis::X, &geometry, k)
            }
            Method::ObMusic1Y => {
                ob_music1(quantized.as_ref().expect("prepared"), DipoleAxis::Y, &geometry, k)
            }
            Method::ObMusic2 => ob_music2(quantized.as_ref().expect("prepared"), &geometry, k),
            Method::Baseline => baseline_unquantized(&raw, &geometry, k),
        }?;
        estimates.push(json!({
            "method": method.name(),
            "thetas": est.thetas,
            "runtime_ms": start.elapsed().as_secs_f64() * 1e3,
        }));
    }
    let value = json!({
        "array": array.to_string(),
        "k": k,
        "estimates": estimates,
    });
    let mut s = serde_json::to_string_pretty(&value).expect("serializable");
    s.push('\n');
    write_output(args.out.as_deref(), s.as_bytes())
}

fn parse_grid(name: &str, text: &str) -> Result<Vec<f64>, Error> {
    let grid: Vec<f64> = text
        .split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("{name} entry '{t}' is not a number")))
        })
        .collect::<Result<_, _>>()?;
    if grid.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} is empty")));
    }
    Ok(grid)
}

fn cmd_crb(args: CrbArgs) -> Result<(), Error> {
    use rand::SeedableRng;
    if args.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let scenario = load_scenario(&args.config, args.seed)?;
    let k = scenario.sources.len();
    let mean_p2 = scenario
        .sources
        .iter()
        .map(|s| s.power() * s.power())
        .sum::<f64>()
        / k as f64;
    let implied_snr = 10.0 * (mean_p2 / (2.0 * scenario.noise_power)).log10();

    let snr_grid = match &args.snr_grid {
        Some(text) => parse_grid("snr grid", text)?,
        None => vec![implied_snr],
    };
    let z_grid = match &args.snapshot_grid {
        Some(text) => {
            let grid = parse_grid("snapshot grid", text)?;
            for &z in &grid {
                if z < 1.0 || z.fract() != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "snapshot grid entry {z} is not a positive integer"
                    )));
                }
            }
            grid
        }
        None => vec![scenario.snapshots as f64],
    };

    let mut text = String::from("snr_db,snapshots,k,crb_one_bit,crb_unquantized,loss_db\n");
    let mut cell = 0u64;
    for &snr in &snr_grid {
        let noise = mean_p2 * 10f64.powf(-snr / 10.0) / 2.0;
        for &z in &z_grid {
            let cell_scenario = Scenario::new(
                scenario.sources.clone(),
                scenario.array.clone(),
                noise,
                z as usize,
                scenario.seed,
            )?;
            let mut sum_ob = 0.0;
            let mut sum_unq = 0.0;
            let mut n_ob = 0usize;
            let mut n_unq = 0usize;
            for trial in 0..args.trials {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(scenario.seed);
                rng.set_stream((cell << 32) | trial as u64);
                let generated =
                    obdoa_core::signal::generate_snapshots_with_rng(&cell_scenario, &mut rng)?;
                let mut params =
                    crb::CrbParams::from_realization(&cell_scenario, &generated.source_signals)?;
                params.couple_y_gain = args.couple_y_gain;
                if let Some(v) = mean_bound(crb::fim_one_bit(&params), k)? {
                    sum_ob += v;
                    n_ob += 1;
                }
                if let Some(v) = mean_bound(crb::fim_unquantized(&params), k)? {
                    sum_unq += v;
                    n_unq += 1;
                }
            }
            cell += 1;
            let ob = if n_ob > 0 { sum_ob / n_ob as f64 } else { f64::NAN };
            let unq = if n_unq > 0 { sum_unq / n_unq as f64 } else { f64::NAN };
            let loss = 10.0 * (ob / unq).log10();
            let _ = writeln!(text, "{snr},{z},{k},{ob},{unq},{loss}");
        }
    }
    write_output(args.out.as_deref(), text.as_bytes())
}

/// Per-source mean bound from a Fisher information result; `None` when the
/// information matrix is singular or the weights degenerate.
fn mean_bound(
    info: Result<crb::FisherInfo<f64>, Error>,
    k: usize,
) -> Result<Option<f64>, Error> {
    let diag = info.and_then(|f| crb::crb_extract(&f, k));
    match diag {
        Ok(d) => Ok(Some(d.iter().sum::<f64>() / d.len() as f64)),
        Err(Error::Numerical(_)) | Err(Error::SingularInformation(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), Error> {
    let mut spec = parse_experiment(&read_config(&args.config)?)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        spec.trials = trials;
    }
    let start = Instant::now();
    let result = run_experiment(&spec, args.threads)?;
    match args.format {
        TextFormat::Csv => write_output(args.out.as_deref(), result_to_csv(&result).as_bytes()),
        TextFormat::Json => {
            let meta = RunMetadata {
                threads: args.threads,
                wall_ms: start.elapsed().as_millis(),
            };
            let value = result_to_json(&spec, &result, &meta);
            let mut s = serde_json::to_string_pretty(&value).expect("serializable");
            s.push('\n');
            write_output(args.out.as_deref(), s.as_bytes())
        }
    }
}
