//! Polarized source model and cross-dipole snapshot generation.
//!
//! Each sensor of the array carries two orthogonal short dipoles. A
//! narrowband far-field source arrives from direction `theta` and is
//! described by its normalized direction `theta_bar = sin(theta) / 2`
//! (unit inter-element spacing of half a wavelength), a power, a degree of
//! polarization (DOP), and the orientation/ellipticity angles of its
//! polarization ellipse. A partially polarized source is modeled as the sum
//! of a fully polarized component along its Jones vector and an unpolarized
//! component split evenly between the two orthogonal polarizations.

use ndarray::{Array1, Array2};
use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::ArrayConfig;
use crate::scalar::{cast, Scalar};

/// Which dipole of the cross pair a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DipoleAxis {
    X,
    Y,
}

impl DipoleAxis {
    pub const BOTH: [DipoleAxis; 2] = [DipoleAxis::X, DipoleAxis::Y];

    /// Row offset (0 or 1) of this axis in stacked two-component storage.
    pub fn index(self) -> usize {
        match self {
            DipoleAxis::X => 0,
            DipoleAxis::Y => 1,
        }
    }
}

/// How the source transmits: two independent streams on orthogonal
/// polarizations (the general, partially polarized case) or a single stream
/// on one fixed polarization (which forces DOP 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmissionMode {
    Dual,
    Single,
}

/// One far-field source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec<F> {
    theta_bar: F,
    power: F,
    dop: F,
    alpha: F,
    beta: F,
    mode: TransmissionMode,
}

impl<F: Scalar> SourceSpec<F> {
    /// Build a source from polarization-ellipse angles.
    ///
    /// `alpha` is the ellipse orientation (wrapped into `(-pi/2, pi/2]`),
    /// `beta` the ellipticity in `[-pi/4, pi/4]`. `dop` must lie in `[0, 1]`
    /// and a `Single` transmission mode requires `dop == 1`.
    pub fn new(
        theta_bar: F,
        power: F,
        dop: F,
        alpha: F,
        beta: F,
        mode: TransmissionMode,
    ) -> Result<Self> {
        if !(theta_bar.abs() <= cast(0.5)) {
            return Err(Error::invalid(format!(
                "normalized direction {theta_bar} outside [-1/2, 1/2]"
            )));
        }
        if !(power > F::zero()) || !power.is_finite() {
            return Err(Error::invalid(format!("source power {power} must be positive")));
        }
        if !(dop >= F::zero() && dop <= F::one()) {
            return Err(Error::invalid(format!("degree of polarization {dop} outside [0, 1]")));
        }
        let quarter_pi = F::FRAC_PI_4();
        if !(beta.abs() <= quarter_pi) {
            return Err(Error::invalid(format!(
                "ellipticity angle {beta} outside [-pi/4, pi/4]"
            )));
        }
        if !alpha.is_finite() {
            return Err(Error::invalid("orientation angle must be finite".to_string()));
        }
        if mode == TransmissionMode::Single && dop != F::one() {
            return Err(Error::invalid(
                "single-stream transmission implies a fully polarized source (dop = 1)".to_string(),
            ));
        }
        let mut alpha = alpha;
        let half_pi = F::FRAC_PI_2();
        while alpha > half_pi {
            alpha -= F::PI();
        }
        while alpha <= -half_pi {
            alpha += F::PI();
        }
        Ok(SourceSpec {
            theta_bar,
            power,
            dop,
            alpha,
            beta,
            mode,
        })
    }

    /// Build a source whose polarized component is the Jones vector
    /// `[cos(varphi), sin(varphi) e^{j psi}]` with `varphi` in `[0, pi/2]`.
    ///
    /// The auxiliary/phase pair `(varphi, psi)` is converted to equivalent
    /// ellipse angles; the resulting coherency matrix is identical.
    pub fn from_jones(
        theta_bar: F,
        power: F,
        dop: F,
        varphi: F,
        psi: F,
        mode: TransmissionMode,
    ) -> Result<Self> {
        if !(varphi >= F::zero() && varphi <= F::FRAC_PI_2()) {
            return Err(Error::invalid(format!(
                "auxiliary polarization angle {varphi} outside [0, pi/2]"
            )));
        }
        let two = cast::<F>(2.0);
        let s2p = (two * varphi).sin();
        let c2p = (two * varphi).cos();
        let sin2beta = s2p * psi.sin();
        let beta = sin2beta.max(-F::one()).min(F::one()).asin() / two;
        let alpha = (-s2p * psi.cos()).atan2(c2p) / two;
        SourceSpec::new(theta_bar, power, dop, alpha, beta, mode)
    }

    /// Completely unpolarized source.
    pub fn unpolarized(theta_bar: F, power: F) -> Result<Self> {
        SourceSpec::new(
            theta_bar,
            power,
            F::zero(),
            F::zero(),
            F::zero(),
            TransmissionMode::Dual,
        )
    }

    pub fn theta_bar(&self) -> F {
        self.theta_bar
    }

    pub fn power(&self) -> F {
        self.power
    }

    pub fn dop(&self) -> F {
        self.dop
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn beta(&self) -> F {
        self.beta
    }

    pub fn mode(&self) -> TransmissionMode {
        self.mode
    }

    /// Unit Jones vector of the fully polarized component,
    /// `Q(alpha) [cos(beta), j sin(beta)]`.
    pub fn polarized_component(&self) -> [Complex<F>; 2] {
        let (sa, ca) = (self.alpha.sin(), self.alpha.cos());
        let (sb, cb) = (self.beta.sin(), self.beta.cos());
        [
            Complex::new(ca * cb, sa * sb),
            Complex::new(-sa * cb, ca * sb),
        ]
    }
}

/// 2x2 Hermitian covariance of a source's two polarization components.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceCovariance<F> {
    m: [[Complex<F>; 2]; 2],
}

impl<F: Scalar> SourceCovariance<F> {
    pub fn entries(&self) -> &[[Complex<F>; 2]; 2] {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<F> {
        self.m[i][j]
    }

    pub fn trace(&self) -> F {
        self.m[0][0].re + self.m[1][1].re
    }

    /// Determinant; real for a Hermitian matrix.
    pub fn det(&self) -> F {
        self.m[0][0].re * self.m[1][1].re - self.m[0][1].norm_sqr()
    }
}

/// Source covariance `p^2 [ dop * q q^H + (1 - dop)/2 * I ]` where `q` is the
/// polarized-component Jones vector.
pub fn source_covariance<F: Scalar>(spec: &SourceSpec<F>) -> SourceCovariance<F> {
    let q = spec.polarized_component();
    let p2 = spec.power() * spec.power();
    let eta = spec.dop();
    let iso = p2 * (F::one() - eta) / cast(2.0);
    let pol = p2 * eta;
    let mut m = [[Complex::new(F::zero(), F::zero()); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = q[i] * q[j].conj() * pol;
        }
        m[i][i] += Complex::new(iso, F::zero());
    }
    SourceCovariance { m }
}

/// Degree of polarization of a 2x2 covariance:
/// `sqrt(1 - 4 det(R) / trace(R)^2)`.
///
/// Errors if the matrix cannot be a covariance (non-positive trace, or a
/// negative determinant beyond rounding tolerance).
pub fn dop<F: Scalar>(cov: &SourceCovariance<F>) -> Result<F> {
    let tr = cov.trace();
    if !(tr > F::zero()) {
        return Err(Error::invalid(format!("covariance trace {tr} must be positive")));
    }
    let det_norm = cov.det() / (tr * tr);
    let arg = F::one() - cast::<F>(4.0) * det_norm;
    let tol = cast::<F>(1e3) * F::epsilon();
    if arg < -tol {
        return Err(Error::invalid(
            "matrix is not positive semidefinite (det > (tr/2)^2)".to_string(),
        ));
    }
    if arg > F::one() + tol {
        return Err(Error::invalid(
            "matrix has negative determinant; not a covariance".to_string(),
        ));
    }
    Ok(arg.max(F::zero()).min(F::one()).sqrt())
}

/// Jones vector `[cos(varphi), sin(varphi) e^{j psi}]`.
pub fn jones_vector<F: Scalar>(varphi: F, psi: F) -> [Complex<F>; 2] {
    [
        Complex::new(varphi.cos(), F::zero()),
        Complex::from_polar(varphi.sin(), psi),
    ]
}

/// Effective gain of one dipole toward normalized direction `theta_bar`.
///
/// The x dipole sees a direction-independent gain of -1; the y dipole gain
/// falls off as `sqrt(1 - 4 theta_bar^2)`, vanishing at endfire.
pub fn dipole_gain<F: Scalar>(axis: DipoleAxis, theta_bar: F) -> Result<F> {
    if !(theta_bar.abs() <= cast(0.5)) {
        return Err(Error::invalid(format!(
            "normalized direction {theta_bar} outside [-1/2, 1/2]"
        )));
    }
    Ok(match axis {
        DipoleAxis::X => -F::one(),
        DipoleAxis::Y => {
            let four = cast::<F>(4.0);
            (F::one() - four * theta_bar * theta_bar).max(F::zero()).sqrt()
        }
    })
}

/// Array steering vector `exp(j 2 pi theta_bar w_l)` over sensor positions.
pub fn steering_vector<F: Scalar>(config: &ArrayConfig, theta_bar: F) -> Array1<Complex<F>> {
    let tau = F::PI() + F::PI();
    Array1::from_iter(
        config
            .positions()
            .iter()
            .map(|&p| Complex::from_polar(F::one(), tau * theta_bar * cast::<F>(p as f64))),
    )
}

/// A complete simulation setup: sources, array, noise level, snapshot count
/// and RNG seed.
#[derive(Debug, Clone)]
pub struct Scenario<F> {
    pub sources: Vec<SourceSpec<F>>,
    pub array: ArrayConfig,
    /// Per-sensor, per-axis complex noise power (sigma^2). May be zero.
    pub noise_power: F,
    pub snapshots: usize,
    pub seed: u64,
}

impl<F: Scalar> Scenario<F> {
    pub fn new(
        sources: Vec<SourceSpec<F>>,
        array: ArrayConfig,
        noise_power: F,
        snapshots: usize,
        seed: u64,
    ) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::invalid("scenario needs at least one source"));
        }
        for i in 0..sources.len() {
            for j in (i + 1)..sources.len() {
                if sources[i].theta_bar() == sources[j].theta_bar() {
                    return Err(Error::invalid(format!(
                        "sources {i} and {j} share direction {}",
                        sources[i].theta_bar()
                    )));
                }
            }
        }
        if !(noise_power >= F::zero()) || !noise_power.is_finite() {
            return Err(Error::invalid(format!(
                "noise power {noise_power} must be finite and non-negative"
            )));
        }
        if snapshots == 0 {
            return Err(Error::invalid("scenario needs at least one snapshot"));
        }
        Ok(Scenario {
            sources,
            array,
            noise_power,
            snapshots,
            seed,
        })
    }
}

/// Snapshot matrices for both dipole axes: each is `sensors x snapshots`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix<F> {
    x: Array2<Complex<F>>,
    y: Array2<Complex<F>>,
    quantized: bool,
}

impl<F: Scalar> SnapshotMatrix<F> {
    pub fn from_parts(x: Array2<Complex<F>>, y: Array2<Complex<F>>, quantized: bool) -> Result<Self> {
        if x.shape() != y.shape() {
            return Err(Error::DimensionMismatch(format!(
                "axis shapes differ: {:?} vs {:?}",
                x.shape(),
                y.shape()
            )));
        }
        Ok(SnapshotMatrix { x, y, quantized })
    }

    pub fn axis(&self, axis: DipoleAxis) -> &Array2<Complex<F>> {
        match axis {
            DipoleAxis::X => &self.x,
            DipoleAxis::Y => &self.y,
        }
    }

    pub fn quantized(&self) -> bool {
        self.quantized
    }

    pub fn sensors(&self) -> usize {
        self.x.nrows()
    }

    pub fn snapshots(&self) -> usize {
        self.x.ncols()
    }

    pub(crate) fn map_axes(&self, f: impl Fn(&Array2<Complex<F>>) -> Array2<Complex<F>>, quantized: bool) -> SnapshotMatrix<F> {
        SnapshotMatrix {
            x: f(&self.x),
            y: f(&self.y),
            quantized,
        }
    }
}

/// Snapshots plus the per-source signal draws that produced them.
///
/// `source_signals` has shape `(2 K, snapshots)`: row `2 k + a` holds the raw
/// polarization component on axis `a` of source `k`, *before* the dipole
/// gain is applied. Bound computations need these realized values.
#[derive(Debug, Clone)]
pub struct GeneratedSnapshots<F> {
    pub snapshots: SnapshotMatrix<F>,
    pub source_signals: Array2<Complex<F>>,
}

/// Draw snapshots for `scenario` with a fresh RNG seeded from its seed.
pub fn generate_snapshots<F: Scalar>(scenario: &Scenario<F>) -> Result<GeneratedSnapshots<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    generate_snapshots_with_rng(scenario, &mut rng)
}

/// Draw snapshots using a caller-provided RNG (for substream control).
///
/// The draw order is part of the determinism contract: for each snapshot,
/// four normals per source (real/imag of the two stream amplitudes), then
/// two normals per sensor for x-axis noise, then the same for y-axis noise.
pub fn generate_snapshots_with_rng<F: Scalar, R: Rng + ?Sized>(
    scenario: &Scenario<F>,
    rng: &mut R,
) -> Result<GeneratedSnapshots<F>> {
    let k_count = scenario.sources.len();
    let l = scenario.array.len();
    let z_count = scenario.snapshots;
    let half = cast::<F>(0.5);
    let inv_sqrt2 = F::FRAC_1_SQRT_2();

    // Per-source constants.
    let mut stream_a = Vec::with_capacity(k_count); // amplitude * polarized vector
    let mut stream_b = Vec::with_capacity(k_count); // amplitude * orthogonal vector
    let mut steering = Vec::with_capacity(k_count);
    let mut gains = Vec::with_capacity(k_count);
    for spec in &scenario.sources {
        let q = spec.polarized_component();
        let q_orth = [-q[1].conj(), q[0].conj()];
        let pa = spec.power() * ((F::one() + spec.dop()) * half).sqrt();
        let pb = spec.power() * ((F::one() - spec.dop()) * half).sqrt();
        stream_a.push([q[0] * pa, q[1] * pa]);
        stream_b.push([q_orth[0] * pb, q_orth[1] * pb]);
        steering.push(steering_vector(&scenario.array, spec.theta_bar()));
        gains.push([
            dipole_gain(DipoleAxis::X, spec.theta_bar())?,
            dipole_gain(DipoleAxis::Y, spec.theta_bar())?,
        ]);
    }
    let sigma = scenario.noise_power.sqrt();

    let mut x = Array2::<Complex<F>>::zeros((l, z_count));
    let mut y = Array2::<Complex<F>>::zeros((l, z_count));
    let mut source_signals = Array2::<Complex<F>>::zeros((2 * k_count, z_count));

    let draw_cn = |rng: &mut R| -> Complex<F> {
        let re: F = F::standard_normal(rng);
        let im: F = F::standard_normal(rng);
        Complex::new(re * inv_sqrt2, im * inv_sqrt2)
    };

    for z in 0..z_count {
        for k in 0..k_count {
            let sa = draw_cn(rng);
            let sb = draw_cn(rng);
            for axis in 0..2 {
                let mut component = stream_a[k][axis] * sa;
                if scenario.sources[k].mode() == TransmissionMode::Dual {
                    component += stream_b[k][axis] * sb;
                }
                source_signals[[2 * k + axis, z]] = component;
                let weighted = component * gains[k][axis];
                let target = if axis == 0 { &mut x } else { &mut y };
                for (li, v) in steering[k].iter().enumerate() {
                    target[[li, z]] += *v * weighted;
                }
            }
        }
        for li in 0..l {
            let n = draw_cn(rng);
            x[[li, z]] += n * sigma;
        }
        for li in 0..l {
            let n = draw_cn(rng);
            y[[li, z]] += n * sigma;
        }
    }
    Ok(GeneratedSnapshots {
        snapshots: SnapshotMatrix {
            x,
            y,
            quantized: false,
        },
        source_signals,
    })
}

/// Ensemble covariance of one axis: `sum_k b_a^2 (R_k)_{aa} v v^H + sigma^2 I`.
pub fn exact_covariance<F: Scalar>(
    scenario: &Scenario<F>,
    axis: DipoleAxis,
) -> Result<Array2<Complex<F>>> {
    let l = scenario.array.len();
    let a = axis.index();
    let mut cov = Array2::<Complex<F>>::zeros((l, l));
    for spec in &scenario.sources {
        let r = source_covariance(spec);
        let gain = dipole_gain(axis, spec.theta_bar())?;
        let weight = r.entry(a, a).re * gain * gain;
        let v = steering_vector(&scenario.array, spec.theta_bar());
        for i in 0..l {
            for j in 0..l {
                cov[[i, j]] += v[i] * v[j].conj() * weight;
            }
        }
    }
    for i in 0..l {
        cov[[i, i]] += Complex::new(scenario.noise_power, F::zero());
    }
    Ok(cov)
}

/// Total per-sensor power on one axis (the constant diagonal of the exact
/// covariance): signal powers through the dipole gain, plus noise.
pub fn axis_power<F: Scalar>(scenario: &Scenario<F>, axis: DipoleAxis) -> Result<F> {
    let a = axis.index();
    let mut total = scenario.noise_power;
    for spec in &scenario.sources {
        let r = source_covariance(spec);
        let gain = dipole_gain(axis, spec.theta_bar())?;
        total += r.entry(a, a).re * gain * gain;
    }
    Ok(total)
}

/// Which power-loss figure to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerLossKind {
    /// Loss of the x-axis dipole relative to the full source power.
    XAxis,
    /// Loss of the y-axis dipole (excluding the direction-dependent gain).
    YAxis,
    /// Loss of the summed two-axis power, including the y dipole gain.
    CombinedSum,
}

/// Polarization-induced power loss in dB for a source with the Jones angle
/// `varphi` and degree of polarization `dop`, at direction `theta_bar`.
///
/// The x dipole captures the fraction `(1 - dop)/2 + dop cos^2(varphi)` of
/// the source power, the y dipole the complement with `sin^2`, and the
/// combined figure weights the y fraction by the squared y dipole gain.
/// A vanishing captured fraction yields `+inf` dB, not an error.
pub fn power_loss_db<F: Scalar>(
    dop: F,
    varphi: F,
    theta_bar: F,
    kind: PowerLossKind,
) -> Result<F> {
    if !(dop >= F::zero() && dop <= F::one()) {
        return Err(Error::invalid(format!("degree of polarization {dop} outside [0, 1]")));
    }
    if !(theta_bar.abs() <= cast(0.5)) {
        return Err(Error::invalid(format!(
            "normalized direction {theta_bar} outside [-1/2, 1/2]"
        )));
    }
    let half = cast::<F>(0.5);
    let iso = (F::one() - dop) * half;
    let c = varphi.cos();
    let s = varphi.sin();
    let fx = iso + dop * c * c;
    let fy = iso + dop * s * s;
    let fraction = match kind {
        PowerLossKind::XAxis => fx,
        PowerLossKind::YAxis => fy,
        PowerLossKind::CombinedSum => {
            let four = cast::<F>(4.0);
            let y_gain_sq = F::one() - four * theta_bar * theta_bar;
            fx + y_gain_sq * fy
        }
    };
    Ok(-cast::<F>(10.0) * fraction.log10())
}
