//! Plain-text scenario and experiment configuration files.
//!
//! The format is flat `key = value` lines with `#` comments. Global keys
//! come first; each `[source]` section then describes one source. Scenario
//! files describe a single fully specified simulation; experiment files add
//! Monte Carlo controls (trials, methods, a sweep) and may randomize source
//! polarization per trial. Unknown keys, malformed values and out-of-range
//! settings are reported with their line number.

use crate::error::{Error, Result};
use crate::geometry::{parse_array_spec, ArrayConfig};
use crate::signal::{Scenario, SourceSpec, TransmissionMode};

/// Estimation methods the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ObMusic1X,
    ObMusic1Y,
    ObMusic2,
    Baseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ObMusic1X => "ob-music1-x",
            Method::ObMusic1Y => "ob-music1-y",
            Method::ObMusic2 => "ob-music2",
            Method::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "ob-music1-x" | "ob_music1_x" => Some(Method::ObMusic1X),
            "ob-music1-y" | "ob_music1_y" => Some(Method::ObMusic1Y),
            "ob-music2" | "ob_music2" => Some(Method::ObMusic2),
            "baseline" | "baseline-unquantized" => Some(Method::Baseline),
            _ => None,
        }
    }

    /// True for methods that consume one-bit data.
    pub fn one_bit(self) -> bool {
        !matches!(self, Method::Baseline)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// What the experiment sweeps over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sweep {
    #[default]
    None,
    Snr,
    Snapshots,
    Dop,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::None => "none",
            Sweep::Snr => "snr",
            Sweep::Snapshots => "snapshots",
            Sweep::Dop => "dop",
        }
    }
}

impl std::fmt::Display for Sweep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Degree-of-polarization policy for one source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DopPolicy {
    Fixed(f64),
    /// Drawn uniformly from [0, 1] each trial.
    Random,
}

/// Polarization-state policy for one source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolarizationPolicy {
    /// Orientation/ellipticity angles of the polarization ellipse.
    Ellipse { alpha: f64, beta: f64 },
    /// Jones-style auxiliary angle and phase difference.
    Jones { varphi: f64, psi: f64 },
    /// Jones angles drawn uniformly each trial.
    Random,
}

/// One source as described in a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTemplate {
    pub theta_bar: f64,
    pub power: f64,
    pub dop: DopPolicy,
    pub polarization: PolarizationPolicy,
    pub mode: TransmissionMode,
}

impl SourceTemplate {
    /// Instantiate with concrete values (errors if any policy is random).
    pub fn to_source_spec(&self) -> Result<SourceSpec<f64>> {
        let dop = match self.dop {
            DopPolicy::Fixed(v) => v,
            DopPolicy::Random => {
                return Err(Error::invalid(
                    "randomized dop needs the experiment runner, not a fixed scenario",
                ))
            }
        };
        match self.polarization {
            PolarizationPolicy::Ellipse { alpha, beta } => {
                SourceSpec::new(self.theta_bar, self.power, dop, alpha, beta, self.mode)
            }
            PolarizationPolicy::Jones { varphi, psi } => {
                SourceSpec::from_jones(self.theta_bar, self.power, dop, varphi, psi, self.mode)
            }
            PolarizationPolicy::Random => Err(Error::invalid(
                "randomized polarization needs the experiment runner, not a fixed scenario",
            )),
        }
    }
}

/// Full description of a Monte Carlo experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub sources: Vec<SourceTemplate>,
    pub array: ArrayConfig,
    /// Exactly one of `snr_db` / `noise_power` is set (unless SNR is swept).
    pub snr_db: Option<f64>,
    pub noise_power: Option<f64>,
    pub snapshots: usize,
    pub seed: u64,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub sweep: Sweep,
    pub grid: Vec<f64>,
    pub compute_crb: bool,
    pub couple_crb_y_gain: bool,
}

struct KeyValue {
    line: usize,
    key: String,
    value: String,
}

struct RawConfig {
    globals: Vec<KeyValue>,
    sources: Vec<Vec<KeyValue>>,
}

fn split_sections(text: &str) -> Result<RawConfig> {
    let mut raw = RawConfig {
        globals: Vec::new(),
        sources: Vec::new(),
    };
    let mut in_source = false;
    for (idx, line_raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match line_raw.find('#') {
            Some(cut) => &line_raw[..cut],
            None => line_raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(section) = line.strip_prefix('[') {
            let name = section
                .strip_suffix(']')
                .ok_or_else(|| Error::config(line_no, "unterminated section header"))?
                .trim();
            if name != "source" {
                return Err(Error::config(line_no, format!("unknown section [{name}]")));
            }
            raw.sources.push(Vec::new());
            in_source = true;
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(line_no, format!("expected key = value, got '{line}'")))?;
        let kv = KeyValue {
            line: line_no,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        };
        if kv.value.is_empty() {
            return Err(Error::config(line_no, format!("empty value for '{}'", kv.key)));
        }
        if in_source {
            raw.sources.last_mut().unwrap().push(kv);
        } else {
            raw.globals.push(kv);
        }
    }
    Ok(raw)
}

fn parse_f64(kv: &KeyValue) -> Result<f64> {
    kv.value.parse::<f64>().map_err(|_| {
        Error::config(kv.line, format!("'{}' is not a number for key '{}'", kv.value, kv.key))
    })
}

fn parse_usize(kv: &KeyValue) -> Result<usize> {
    kv.value.parse::<usize>().map_err(|_| {
        Error::config(
            kv.line,
            format!("'{}' is not a non-negative integer for key '{}'", kv.value, kv.key),
        )
    })
}

fn parse_u64(kv: &KeyValue) -> Result<u64> {
    kv.value.parse::<u64>().map_err(|_| {
        Error::config(
            kv.line,
            format!("'{}' is not a non-negative integer for key '{}'", kv.value, kv.key),
        )
    })
}

fn parse_bool(kv: &KeyValue) -> Result<bool> {
    match kv.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::config(
            kv.line,
            format!("'{other}' is not a boolean for key '{}'", kv.key),
        )),
    }
}

struct SourceAccumulator {
    first_line: usize,
    theta_bar: Option<f64>,
    power: f64,
    dop: Option<DopPolicy>,
    alpha: Option<f64>,
    beta: Option<f64>,
    varphi: Option<f64>,
    psi: Option<f64>,
    random_pol: bool,
    mode: TransmissionMode,
}

fn parse_source(entries: &[KeyValue]) -> Result<SourceTemplate> {
    let first_line = entries.first().map_or(0, |kv| kv.line);
    let mut acc = SourceAccumulator {
        first_line,
        theta_bar: None,
        power: 1.0,
        dop: None,
        alpha: None,
        beta: None,
        varphi: None,
        psi: None,
        random_pol: false,
        mode: TransmissionMode::Dual,
    };
    for kv in entries {
        match kv.key.as_str() {
            "theta_bar" => acc.theta_bar = Some(parse_f64(kv)?),
            "power" => acc.power = parse_f64(kv)?,
            "dop" => {
                acc.dop = Some(if kv.value == "random" {
                    DopPolicy::Random
                } else {
                    DopPolicy::Fixed(parse_f64(kv)?)
                })
            }
            "alpha" => acc.alpha = Some(parse_f64(kv)?),
            "beta" => acc.beta = Some(parse_f64(kv)?),
            "varphi" => acc.varphi = Some(parse_f64(kv)?),
            "psi" => acc.psi = Some(parse_f64(kv)?),
            "polarization" => match kv.value.as_str() {
                "random" => acc.random_pol = true,
                other => {
                    return Err(Error::config(
                        kv.line,
                        format!("polarization must be 'random', got '{other}'"),
                    ))
                }
            },
            "mode" => {
                acc.mode = match kv.value.as_str() {
                    "dual" => TransmissionMode::Dual,
                    "single" => TransmissionMode::Single,
                    other => {
                        return Err(Error::config(
                            kv.line,
                            format!("mode must be 'dual' or 'single', got '{other}'"),
                        ))
                    }
                }
            }
            other => {
                return Err(Error::config(kv.line, format!("unknown source key '{other}'")));
            }
        }
    }
    let theta_bar = acc
        .theta_bar
        .ok_or_else(|| Error::config(acc.first_line, "source is missing 'theta_bar'"))?;
    let dop = acc
        .dop
        .ok_or_else(|| Error::config(acc.first_line, "source is missing 'dop'"))?;
    let has_ellipse = acc.alpha.is_some() || acc.beta.is_some();
    let has_jones = acc.varphi.is_some() || acc.psi.is_some();
    let styles = has_ellipse as u8 + has_jones as u8 + acc.random_pol as u8;
    if styles > 1 {
        return Err(Error::config(
            acc.first_line,
            "give polarization as alpha/beta, varphi/psi, or 'random' - not a mixture",
        ));
    }
    let polarization = if acc.random_pol {
        PolarizationPolicy::Random
    } else if has_jones {
        PolarizationPolicy::Jones {
            varphi: acc.varphi.unwrap_or(0.0),
            psi: acc.psi.unwrap_or(0.0),
        }
    } else {
        PolarizationPolicy::Ellipse {
            alpha: acc.alpha.unwrap_or(0.0),
            beta: acc.beta.unwrap_or(0.0),
        }
    };
    let template = SourceTemplate {
        theta_bar,
        power: acc.power,
        dop,
        polarization,
        mode: acc.mode,
    };
    // Validate fixed values eagerly so errors carry a line number.
    if let DopPolicy::Fixed(_) = template.dop {
        if !template.polarization.eq(&PolarizationPolicy::Random) {
            template
                .to_source_spec()
                .map_err(|e| Error::config(acc.first_line, e.to_string()))?;
        }
    }
    Ok(template)
}

/// Convert an SNR in dB into a per-axis noise power, using the mean source
/// power: `snr = 10 log10(mean_p^2 / (2 sigma^2))`.
pub fn noise_power_for_snr(snr_db: f64, sources: &[SourceTemplate]) -> f64 {
    let mean_p2: f64 =
        sources.iter().map(|s| s.power * s.power).sum::<f64>() / sources.len() as f64;
    mean_p2 * 10f64.powf(-snr_db / 10.0) / 2.0
}

/// Parse an experiment file.
pub fn parse_experiment(text: &str) -> Result<ExperimentSpec> {
    let raw = split_sections(text)?;
    let mut array: Option<(usize, ArrayConfig)> = None;
    let mut snr_db = None;
    let mut noise_power = None;
    let mut snapshots = None;
    let mut seed = 0u64;
    let mut trials = None;
    let mut methods: Option<(usize, Vec<Method>)> = None;
    let mut sweep = Sweep::default();
    let mut sweep_line = 0usize;
    let mut grid: Vec<f64> = Vec::new();
    let mut grid_line = 0usize;
    let mut compute_crb = false;
    let mut couple_crb_y_gain = false;

    for kv in &raw.globals {
        match kv.key.as_str() {
            "array" => {
                let cfg = parse_array_spec(&kv.value)
                    .map_err(|e| Error::config(kv.line, e.to_string()))?;
                array = Some((kv.line, cfg));
            }
            "snr_db" => snr_db = Some(parse_f64(kv)?),
            "noise_power" => noise_power = Some(parse_f64(kv)?),
            "snapshots" => snapshots = Some((kv.line, parse_usize(kv)?)),
            "seed" => seed = parse_u64(kv)?,
            "trials" => trials = Some((kv.line, parse_usize(kv)?)),
            "methods" => {
                let mut list = Vec::new();
                for tok in kv.value.split([',', ' ']).filter(|t| !t.is_empty()) {
                    let m = Method::parse(tok).ok_or_else(|| {
                        Error::config(kv.line, format!("unknown method '{tok}'"))
                    })?;
                    if !list.contains(&m) {
                        list.push(m);
                    }
                }
                methods = Some((kv.line, list));
            }
            "sweep" => {
                sweep_line = kv.line;
                sweep = match kv.value.as_str() {
                    "none" => Sweep::None,
                    "snr" => Sweep::Snr,
                    "snapshots" => Sweep::Snapshots,
                    "dop" => Sweep::Dop,
                    other => {
                        return Err(Error::config(
                            kv.line,
                            format!("unknown sweep '{other}' (none|snr|snapshots|dop)"),
                        ))
                    }
                };
            }
            "grid" => {
                grid_line = kv.line;
                grid = kv
                    .value
                    .split([',', ' '])
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| {
                            Error::config(kv.line, format!("grid entry '{t}' is not a number"))
                        })
                    })
                    .collect::<Result<_>>()?;
            }
            "compute_crb" => compute_crb = parse_bool(kv)?,
            "couple_crb_y_gain" => couple_crb_y_gain = parse_bool(kv)?,
            other => {
                return Err(Error::config(kv.line, format!("unknown key '{other}'")));
            }
        }
    }

    let (_, array) = array.ok_or_else(|| Error::config(0, "missing 'array'"))?;
    let (snap_line, snapshots) =
        snapshots.ok_or_else(|| Error::config(0, "missing 'snapshots'"))?;
    if snapshots == 0 {
        return Err(Error::config(snap_line, "snapshots must be at least 1"));
    }
    let (trials_line, trials) = trials.ok_or_else(|| Error::config(0, "missing 'trials'"))?;
    if trials == 0 {
        return Err(Error::config(trials_line, "trials must be at least 1"));
    }
    let (methods_line, methods) =
        methods.ok_or_else(|| Error::config(0, "missing 'methods'"))?;
    if methods.is_empty() {
        return Err(Error::config(methods_line, "methods list is empty"));
    }

    match sweep {
        Sweep::None => {
            if !grid.is_empty() {
                return Err(Error::config(grid_line, "grid given but sweep is 'none'"));
            }
            if snr_db.is_none() && noise_power.is_none() {
                return Err(Error::config(0, "missing 'snr_db' or 'noise_power'"));
            }
        }
        Sweep::Snr => {
            if grid.is_empty() {
                return Err(Error::config(sweep_line, "snr sweep needs a 'grid' of dB values"));
            }
            if snr_db.is_some() || noise_power.is_some() {
                return Err(Error::config(
                    sweep_line,
                    "snr sweep conflicts with a fixed snr_db/noise_power",
                ));
            }
        }
        Sweep::Snapshots => {
            if grid.is_empty() {
                return Err(Error::config(
                    sweep_line,
                    "snapshot sweep needs a 'grid' of snapshot counts",
                ));
            }
            for g in &grid {
                if *g < 1.0 || g.fract() != 0.0 {
                    return Err(Error::config(
                        grid_line,
                        format!("snapshot grid entry {g} is not a positive integer"),
                    ));
                }
            }
            if snr_db.is_none() && noise_power.is_none() {
                return Err(Error::config(0, "missing 'snr_db' or 'noise_power'"));
            }
        }
        Sweep::Dop => {
            if grid.is_empty() {
                return Err(Error::config(sweep_line, "dop sweep needs a 'grid' of values"));
            }
            for g in &grid {
                if !(0.0..=1.0).contains(g) {
                    return Err(Error::config(
                        grid_line,
                        format!("dop grid entry {g} outside [0, 1]"),
                    ));
                }
            }
            if snr_db.is_none() && noise_power.is_none() {
                return Err(Error::config(0, "missing 'snr_db' or 'noise_power'"));
            }
        }
    }
    if snr_db.is_some() && noise_power.is_some() {
        return Err(Error::config(0, "give either 'snr_db' or 'noise_power', not both"));
    }

    if raw.sources.is_empty() {
        return Err(Error::config(0, "no [source] sections"));
    }
    let sources = raw
        .sources
        .iter()
        .map(|s| parse_source(s))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..sources.len() {
        for j in (i + 1)..sources.len() {
            if sources[i].theta_bar == sources[j].theta_bar {
                return Err(Error::config(
                    0,
                    format!("sources {i} and {j} share direction {}", sources[i].theta_bar),
                ));
            }
        }
    }

    Ok(ExperimentSpec {
        sources,
        array,
        snr_db,
        noise_power,
        snapshots,
        seed,
        trials,
        methods,
        sweep,
        grid,
        compute_crb,
        couple_crb_y_gain,
    })
}

/// Parse a scenario file: like an experiment file but without Monte Carlo
/// controls, and with every source fully specified.
pub fn parse_scenario(text: &str) -> Result<Scenario<f64>> {
    let raw = split_sections(text)?;
    let mut array = None;
    let mut snr_db = None;
    let mut noise_power = None;
    let mut snapshots = None;
    let mut seed = 0u64;
    for kv in &raw.globals {
        match kv.key.as_str() {
            "array" => {
                array = Some(
                    parse_array_spec(&kv.value).map_err(|e| Error::config(kv.line, e.to_string()))?,
                )
            }
            "snr_db" => snr_db = Some(parse_f64(kv)?),
            "noise_power" => {
                let v = parse_f64(kv)?;
                if v < 0.0 {
                    return Err(Error::config(kv.line, "noise_power must be non-negative"));
                }
                noise_power = Some(v);
            }
            "snapshots" => snapshots = Some(parse_usize(kv)?),
            "seed" => seed = parse_u64(kv)?,
            other => {
                return Err(Error::config(kv.line, format!("unknown key '{other}'")));
            }
        }
    }
    let array = array.ok_or_else(|| Error::config(0, "missing 'array'"))?;
    let snapshots = snapshots.ok_or_else(|| Error::config(0, "missing 'snapshots'"))?;
    if raw.sources.is_empty() {
        return Err(Error::config(0, "no [source] sections"));
    }
    let templates = raw
        .sources
        .iter()
        .map(|s| parse_source(s))
        .collect::<Result<Vec<_>>>()?;
    let noise = match (noise_power, snr_db) {
        (Some(n), None) => n,
        (None, Some(db)) => noise_power_for_snr(db, &templates),
        (None, None) => return Err(Error::config(0, "missing 'snr_db' or 'noise_power'")),
        (Some(_), Some(_)) => {
            return Err(Error::config(0, "give either 'snr_db' or 'noise_power', not both"))
        }
    };
    let sources = templates
        .iter()
        .map(|t| t.to_source_spec())
        .collect::<Result<Vec<_>>>()?;
    Scenario::new(sources, array, noise, snapshots, seed)
}
