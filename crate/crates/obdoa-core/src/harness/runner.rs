//! Monte Carlo experiment execution.
//!
//! Every (grid point, trial) pair gets its own counter-based RNG substream,
//! so results are identical regardless of thread count or scheduling, and a
//! single trial can be replayed in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::crb::{crb_extract, fim_one_bit, fim_unquantized, CrbParams};
use crate::error::{Error, Result};
use crate::estimator::{baseline_unquantized, ob_music1, ob_music2};
use crate::geometry::CoarrayGeometry;
use crate::harness::assign::matched_sse;
use crate::harness::config::{
    noise_power_for_snr, DopPolicy, ExperimentSpec, Method, PolarizationPolicy, SourceTemplate,
    Sweep,
};
use crate::quantize::one_bit_quantize;
use crate::signal::{
    generate_snapshots_with_rng, DipoleAxis, Scenario, SourceSpec, TransmissionMode,
};

/// Aggregated results for one (sweep value, method) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep: Sweep,
    pub sweep_value: f64,
    pub method: Method,
    /// Mean matched squared error over successful trials (summed over
    /// sources); NaN if every trial failed.
    pub mse: f64,
    pub mse_per_source: f64,
    /// `10 log10(mse_per_source)`.
    pub mse_db: f64,
    pub trials_ok: usize,
    pub failures: usize,
    /// Mean per-source one-bit bound over trials where it was computable.
    pub crb_one_bit: Option<f64>,
    pub crb_unquantized: Option<f64>,
    /// dB penalty of this method relative to the unquantized baseline at the
    /// same sweep value; only set on one-bit rows when a baseline row exists.
    pub loss_db: Option<f64>,
}

/// All rows of an experiment, grid-major then in method order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    /// The sweep values, one per grid point, in row order.
    pub sweep_values: Vec<f64>,
}

impl ExperimentResult {
    pub fn row(&self, method: Method, sweep_value: f64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.sweep_value == sweep_value)
    }

    /// dB penalty of a one-bit method against the baseline at a sweep value.
    pub fn quantization_loss_db(&self, method: Method, sweep_value: f64) -> Option<f64> {
        self.row(method, sweep_value)?.loss_db
    }
}

/// Classify estimator/bound failures that should be counted, not fatal.
fn is_soft(err: &Error) -> bool {
    matches!(
        err,
        Error::EstimationFailure(_) | Error::Numerical(_) | Error::SingularInformation(_)
    )
}

struct GridPoint {
    sweep_value: f64,
    noise_power: f64,
    snapshots: usize,
    dop_override: Option<f64>,
}

struct TrialOutcome {
    /// Matched SSE per method, `None` on a counted failure.
    sse: Vec<Option<f64>>,
    crb_one_bit: Option<f64>,
    crb_unquantized: Option<f64>,
}

fn mean_source_power_sq(sources: &[SourceTemplate]) -> f64 {
    sources.iter().map(|s| s.power * s.power).sum::<f64>() / sources.len() as f64
}

fn resolve_noise(spec: &ExperimentSpec) -> Result<f64> {
    match (spec.noise_power, spec.snr_db) {
        (Some(n), None) => {
            if n < 0.0 {
                return Err(Error::invalid("noise power must be non-negative"));
            }
            Ok(n)
        }
        (None, Some(db)) => Ok(noise_power_for_snr(db, &spec.sources)),
        _ => Err(Error::invalid("expected exactly one of noise_power / snr_db")),
    }
}

fn grid_points(spec: &ExperimentSpec) -> Result<Vec<GridPoint>> {
    match spec.sweep {
        Sweep::None => {
            let noise = resolve_noise(spec)?;
            let sweep_value = match spec.snr_db {
                Some(db) => db,
                None => 10.0 * (mean_source_power_sq(&spec.sources) / (2.0 * noise)).log10(),
            };
            Ok(vec![GridPoint {
                sweep_value,
                noise_power: noise,
                snapshots: spec.snapshots,
                dop_override: None,
            }])
        }
        Sweep::Snr => Ok(spec
            .grid
            .iter()
            .map(|&db| GridPoint {
                sweep_value: db,
                noise_power: noise_power_for_snr(db, &spec.sources),
                snapshots: spec.snapshots,
                dop_override: None,
            })
            .collect()),
        Sweep::Snapshots => {
            let noise = resolve_noise(spec)?;
            Ok(spec
                .grid
                .iter()
                .map(|&z| GridPoint {
                    sweep_value: z,
                    noise_power: noise,
                    snapshots: z as usize,
                    dop_override: None,
                })
                .collect())
        }
        Sweep::Dop => {
            let noise = resolve_noise(spec)?;
            if spec.grid.iter().any(|&d| d != 1.0)
                && spec.sources.iter().any(|s| s.mode == TransmissionMode::Single)
            {
                return Err(Error::invalid(
                    "dop sweep below 1 conflicts with a single-transmission source",
                ));
            }
            Ok(spec
                .grid
                .iter()
                .map(|&d| GridPoint {
                    sweep_value: d,
                    noise_power: noise,
                    snapshots: spec.snapshots,
                    dop_override: Some(d),
                })
                .collect())
        }
    }
}

/// Instantiate the per-trial sources. Draw order per source: degree of
/// polarization (if random), then the two Jones angles (if random). A sweep
/// override replaces the policy without consuming any draws.
fn resolve_sources<R: Rng + ?Sized>(
    templates: &[SourceTemplate],
    dop_override: Option<f64>,
    rng: &mut R,
) -> Result<Vec<SourceSpec<f64>>> {
    templates
        .iter()
        .map(|t| {
            let dop = match (dop_override, t.dop) {
                (Some(d), _) => d,
                (None, DopPolicy::Fixed(v)) => v,
                (None, DopPolicy::Random) => rng.gen::<f64>(),
            };
            match t.polarization {
                PolarizationPolicy::Ellipse { alpha, beta } => {
                    SourceSpec::new(t.theta_bar, t.power, dop, alpha, beta, t.mode)
                }
                PolarizationPolicy::Jones { varphi, psi } => {
                    SourceSpec::from_jones(t.theta_bar, t.power, dop, varphi, psi, t.mode)
                }
                PolarizationPolicy::Random => {
                    let varphi = rng.gen::<f64>() * std::f64::consts::FRAC_PI_2;
                    let psi = (rng.gen::<f64>() * 2.0 - 1.0) * std::f64::consts::PI;
                    SourceSpec::from_jones(t.theta_bar, t.power, dop, varphi, psi, t.mode)
                }
            }
        })
        .collect()
}

fn summarize_crb(result: Result<Vec<f64>>) -> Result<Option<f64>> {
    match result {
        Ok(diag) => Ok(Some(diag.iter().sum::<f64>() / diag.len() as f64)),
        Err(e) if is_soft(&e) => Ok(None),
        Err(e) => Err(e),
    }
}

fn run_trial(
    spec: &ExperimentSpec,
    geometry: &CoarrayGeometry,
    point: &GridPoint,
    grid_idx: usize,
    trial: usize,
) -> Result<TrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(((grid_idx as u64) << 32) | trial as u64);

    let sources = resolve_sources(&spec.sources, point.dop_override, &mut rng)?;
    let scenario = Scenario::new(
        sources,
        spec.array.clone(),
        point.noise_power,
        point.snapshots,
        spec.seed,
    )?;
    let generated = generate_snapshots_with_rng(&scenario, &mut rng)?;
    let quantized = if spec.methods.iter().any(|m| m.one_bit()) {
        Some(one_bit_quantize(&generated.snapshots)?)
    } else {
        None
    };

    let truths: Vec<f64> = scenario.sources.iter().map(|s| s.theta_bar()).collect();
    let k = truths.len();
    let mut sse = Vec::with_capacity(spec.methods.len());
    for &method in &spec.methods {
        let estimate = match method {
            Method::ObMusic1X => {
                ob_music1(quantized.as_ref().expect("quantized"), DipoleAxis::X, geometry, k)
            }
            Method::ObMusic1Y => {
                ob_music1(quantized.as_ref().expect("quantized"), DipoleAxis::Y, geometry, k)
            }
            Method::ObMusic2 => ob_music2(quantized.as_ref().expect("quantized"), geometry, k),
            Method::Baseline => baseline_unquantized(&generated.snapshots, geometry, k),
        };
        match estimate {
            Ok(est) => sse.push(Some(matched_sse(&est.thetas, &truths))),
            Err(e) if is_soft(&e) => sse.push(None),
            Err(e) => return Err(e),
        }
    }

    let mut crb_one_bit = None;
    let mut crb_unquantized = None;
    if spec.compute_crb {
        let mut params = CrbParams::from_realization(&scenario, &generated.source_signals)?;
        params.couple_y_gain = spec.couple_crb_y_gain;
        crb_one_bit = summarize_crb(fim_one_bit(&params).and_then(|f| crb_extract(&f, k)))?;
        crb_unquantized =
            summarize_crb(fim_unquantized(&params).and_then(|f| crb_extract(&f, k)))?;
    }

    Ok(TrialOutcome {
        sse,
        crb_one_bit,
        crb_unquantized,
    })
}

fn mean_present(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values.flatten() {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn aggregate(spec: &ExperimentSpec, point: &GridPoint, outcomes: &[TrialOutcome]) -> Vec<ResultRow> {
    let k = spec.sources.len() as f64;
    let crb_one_bit = spec
        .compute_crb
        .then(|| mean_present(outcomes.iter().map(|o| o.crb_one_bit)))
        .flatten();
    let crb_unquantized = spec
        .compute_crb
        .then(|| mean_present(outcomes.iter().map(|o| o.crb_unquantized)))
        .flatten();

    let mut rows: Vec<ResultRow> = spec
        .methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let mut sum = 0.0;
            let mut ok = 0usize;
            for o in outcomes {
                if let Some(v) = o.sse[mi] {
                    sum += v;
                    ok += 1;
                }
            }
            let mse = if ok > 0 { sum / ok as f64 } else { f64::NAN };
            let per_source = mse / k;
            ResultRow {
                sweep: spec.sweep,
                sweep_value: point.sweep_value,
                method,
                mse,
                mse_per_source: per_source,
                mse_db: 10.0 * per_source.log10(),
                trials_ok: ok,
                failures: outcomes.len() - ok,
                crb_one_bit,
                crb_unquantized,
                loss_db: None,
            }
        })
        .collect();

    let baseline = rows
        .iter()
        .find(|r| r.method == Method::Baseline)
        .map(|r| r.mse_per_source);
    if let Some(base) = baseline {
        for row in &mut rows {
            if row.method.one_bit() && row.mse_per_source.is_finite() && base > 0.0 {
                row.loss_db = Some(10.0 * (row.mse_per_source / base).log10());
            }
        }
    }
    rows
}

fn run_points(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let geometry = CoarrayGeometry::new(spec.array.clone());
    let points = grid_points(spec)?;
    let mut rows = Vec::with_capacity(points.len() * spec.methods.len());
    let mut sweep_values = Vec::with_capacity(points.len());
    for (gi, point) in points.iter().enumerate() {
        let outcomes: Vec<TrialOutcome> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| run_trial(spec, &geometry, point, gi, trial))
            .collect::<Result<_>>()?;
        rows.extend(aggregate(spec, point, &outcomes));
        sweep_values.push(point.sweep_value);
    }
    Ok(ExperimentResult { rows, sweep_values })
}

/// Run a full experiment. `threads` pins the worker count (useful for
/// reproducing results byte-for-byte across machines); `None` uses the
/// global rayon pool.
pub fn run_experiment(spec: &ExperimentSpec, threads: Option<usize>) -> Result<ExperimentResult> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            pool.install(|| run_points(spec))
        }
        None => run_points(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArrayConfig;

    fn base_spec() -> ExperimentSpec {
        ExperimentSpec {
            sources: vec![SourceTemplate {
                theta_bar: 0.2,
                power: 1.0,
                dop: DopPolicy::Fixed(1.0),
                polarization: PolarizationPolicy::Ellipse {
                    alpha: 0.7,
                    beta: 0.2,
                },
                mode: TransmissionMode::Dual,
            }],
            array: ArrayConfig::ula(4).unwrap(),
            snr_db: Some(10.0),
            noise_power: None,
            snapshots: 256,
            seed: 7,
            trials: 4,
            methods: vec![
                Method::ObMusic1X,
                Method::ObMusic1Y,
                Method::ObMusic2,
                Method::Baseline,
            ],
            sweep: Sweep::None,
            grid: Vec::new(),
            compute_crb: true,
            couple_crb_y_gain: false,
        }
    }

    #[test]
    fn test_single_source_experiment_recovers_direction() {
        let result = run_experiment(&base_spec(), Some(2)).unwrap();
        assert_eq!(result.rows.len(), 4);
        assert_eq!(result.sweep_values, vec![10.0]);
        for row in &result.rows {
            assert_eq!(row.sweep_value, 10.0);
            assert_eq!(row.trials_ok, 4);
            assert_eq!(row.failures, 0);
            assert!(row.mse.is_finite());
            assert!(row.crb_one_bit.unwrap() > 0.0);
            assert!(row.crb_unquantized.unwrap() > 0.0);
            // Quantization can only lose information.
            assert!(row.crb_one_bit.unwrap() >= row.crb_unquantized.unwrap());
        }
        let ob2 = result.row(Method::ObMusic2, 10.0).unwrap();
        assert!(ob2.mse_per_source < 1e-3, "mse {}", ob2.mse_per_source);
        assert!(ob2.loss_db.is_some());
        let baseline = result.row(Method::Baseline, 10.0).unwrap();
        assert!(baseline.loss_db.is_none());
    }

    #[test]
    fn test_results_identical_across_thread_counts() {
        let mut spec = base_spec();
        spec.sweep = Sweep::Snr;
        spec.snr_db = None;
        spec.grid = vec![0.0, 10.0];
        spec.trials = 6;
        spec.sources[0].dop = DopPolicy::Random;
        spec.sources[0].polarization = PolarizationPolicy::Random;
        let a = run_experiment(&spec, Some(1)).unwrap();
        let b = run_experiment(&spec, Some(4)).unwrap();
        let c = run_experiment(&spec, Some(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn test_row_order_is_grid_major() {
        let mut spec = base_spec();
        spec.sweep = Sweep::Snr;
        spec.snr_db = None;
        spec.grid = vec![-5.0, 5.0];
        spec.methods = vec![Method::ObMusic2, Method::Baseline];
        spec.trials = 2;
        spec.compute_crb = false;
        let result = run_experiment(&spec, Some(2)).unwrap();
        let got: Vec<(f64, Method)> = result.rows.iter().map(|r| (r.sweep_value, r.method)).collect();
        assert_eq!(
            got,
            vec![
                (-5.0, Method::ObMusic2),
                (-5.0, Method::Baseline),
                (5.0, Method::ObMusic2),
                (5.0, Method::Baseline),
            ]
        );
        assert!(result.rows.iter().all(|r| r.crb_one_bit.is_none()));
    }

    #[test]
    fn test_dop_sweep_overrides_policy() {
        let mut spec = base_spec();
        spec.sweep = Sweep::Dop;
        spec.snr_db = Some(15.0);
        spec.grid = vec![0.0, 1.0];
        spec.methods = vec![Method::ObMusic2];
        spec.trials = 3;
        spec.compute_crb = false;
        // Policy says random, but the sweep pins the value per grid point.
        spec.sources[0].dop = DopPolicy::Random;
        let result = run_experiment(&spec, Some(2)).unwrap();
        assert_eq!(result.sweep_values, vec![0.0, 1.0]);
        for row in &result.rows {
            assert!(row.mse.is_finite());
        }
    }

    #[test]
    fn test_dop_sweep_rejects_single_transmission() {
        let mut spec = base_spec();
        spec.sweep = Sweep::Dop;
        spec.grid = vec![0.5];
        spec.sources[0].mode = TransmissionMode::Single;
        assert!(run_experiment(&spec, Some(1)).is_err());
    }

    #[test]
    fn test_endfire_coupled_bound_fails_soft() {
        let mut spec = base_spec();
        spec.sources[0].theta_bar = 0.5;
        spec.couple_crb_y_gain = true;
        spec.methods = vec![Method::ObMusic1X, Method::Baseline];
        spec.trials = 2;
        let result = run_experiment(&spec, Some(1)).unwrap();
        // The coupled jacobian is undefined at endfire, so the bound is
        // dropped while the estimators still report.
        for row in &result.rows {
            assert!(row.crb_one_bit.is_none());
            assert!(row.mse.is_finite());
        }
    }
}
