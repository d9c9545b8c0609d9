//! Fisher information and Cramer-Rao bounds for one-bit and unquantized
//! cross-dipole measurements.
//!
//! The bound treats source directions plus the per-axis amplitudes and
//! phases of each source's effective signal as deterministic unknowns
//! (5K parameters for K sources: direction, two amplitudes, two phases).
//! For a real measurement component with mean `m` and noise variance
//! `sigma^2 / 2`, one-bit quantization scales its Fisher contribution by
//! `omega(m / sigma)`:
//!
//! `omega(x) = exp(-2 x^2) / (2 pi Phi(x) (1 - Phi(x)))`,
//!
//! where `Phi(x) = (1 + erf(x)) / 2`. The weight peaks at `omega(0) = 2/pi`
//! (the classic low-SNR quantization penalty) and decays rapidly, which is
//! what makes one-bit estimation SNR-sensitive: strong means pin their sign
//! and stop conveying information.

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geometry::ArrayConfig;
use crate::linalg::real_symmetric_eigen;
use crate::scalar::{cast, Scalar};
use crate::signal::{dipole_gain, DipoleAxis, Scenario};

/// `Phi(x) = (1 + erf(x)) / 2`, the probability that a real measurement
/// component with mean `x * sigma` and variance `sigma^2 / 2` is positive.
pub fn phi<F: Scalar>(x: F) -> F {
    (F::one() + x.erf()) / cast(2.0)
}

/// One-bit Fisher weight `omega(x)`; an even function with maximum `2/pi`
/// at the origin, evaluated stably over the whole real line (large inputs
/// underflow to zero rather than producing 0/0).
pub fn weight_omega<F: Scalar>(x: F) -> F {
    let a = x.abs();
    let two = cast::<F>(2.0);
    if a.is_infinite() {
        return F::zero();
    }
    if a <= cast(6.0) {
        // Direct evaluation; 1 - Phi(a) = erfc(a) / 2 keeps the tail factor
        // accurate where naive subtraction would underflow.
        let num = (-two * a * a).exp();
        num / (F::PI() * phi(a) * a.erfc())
    } else {
        // Log domain. Past ~25 even erfc underflows, so switch to its
        // asymptotic expansion; ln Phi(a) is zero to double precision there.
        let ln_erfc = if a <= cast(25.0) {
            a.erfc().ln()
        } else {
            let a2 = a * a;
            let correction = -F::one() / (two * a2) + cast::<F>(0.75) / (a2 * a2)
                - cast::<F>(1.875) / (a2 * a2 * a2);
            -a2 - (a * F::PI().sqrt()).ln() + correction.ln_1p()
        };
        let ln_phi = if a <= cast(25.0) { phi(a).ln() } else { F::zero() };
        (-two * a * a - F::PI().ln() - ln_phi - ln_erfc).exp()
    }
}

/// Which measurement model a Fisher information matrix describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FimKind {
    OneBit,
    Unquantized,
}

/// Fisher information over the stacked parameter vector
/// `[directions (K) | amplitudes (2K, axis-minor) | phases (2K)]`.
#[derive(Debug, Clone)]
pub struct FisherInfo<F> {
    pub matrix: Array2<F>,
    pub kind: FimKind,
}

/// Inputs of a bound evaluation.
///
/// `amplitudes[[z, 2k + a]]` is the effective complex amplitude of source
/// `k` on dipole axis `a` during snapshot `z` -- the raw signal component
/// times the dipole gain. A single row replicated over snapshots gives the
/// constant-amplitude bound; per-snapshot rows evaluate the bound at a
/// realized signal sequence.
#[derive(Debug, Clone)]
pub struct CrbParams<F> {
    array: ArrayConfig,
    noise_power: F,
    thetas: Vec<F>,
    amplitudes: Array2<Complex<F>>,
    /// Treat the y-axis amplitude as direction-dependent through the dipole
    /// gain, adding the corresponding term to the direction derivative.
    /// Off by default: amplitudes and directions are independent unknowns.
    pub couple_y_gain: bool,
}

impl<F: Scalar> CrbParams<F> {
    pub fn new(
        array: ArrayConfig,
        noise_power: F,
        thetas: Vec<F>,
        amplitudes: Array2<Complex<F>>,
    ) -> Result<Self> {
        if !(noise_power > F::zero()) || !noise_power.is_finite() {
            return Err(Error::invalid(format!(
                "bound evaluation needs positive noise power, got {noise_power}"
            )));
        }
        if thetas.is_empty() {
            return Err(Error::invalid("bound needs at least one source"));
        }
        for t in &thetas {
            if !(t.abs() <= cast(0.5)) {
                return Err(Error::invalid(format!("direction {t} outside [-1/2, 1/2]")));
            }
        }
        if amplitudes.ncols() != 2 * thetas.len() {
            return Err(Error::DimensionMismatch(format!(
                "amplitudes have {} columns, expected {}",
                amplitudes.ncols(),
                2 * thetas.len()
            )));
        }
        if amplitudes.nrows() == 0 {
            return Err(Error::invalid("bound needs at least one snapshot"));
        }
        Ok(CrbParams {
            array,
            noise_power,
            thetas,
            amplitudes,
            couple_y_gain: false,
        })
    }

    /// Constant amplitudes/phases replicated over `snapshots` snapshots.
    pub fn from_constant(
        array: ArrayConfig,
        noise_power: F,
        thetas: Vec<F>,
        amplitude: &[[F; 2]],
        phase: &[[F; 2]],
        snapshots: usize,
    ) -> Result<Self> {
        let k = thetas.len();
        if amplitude.len() != k || phase.len() != k {
            return Err(Error::DimensionMismatch(
                "amplitude/phase tables must have one row per source".into(),
            ));
        }
        if snapshots == 0 {
            return Err(Error::invalid("bound needs at least one snapshot"));
        }
        let mut amplitudes = Array2::zeros((snapshots, 2 * k));
        for z in 0..snapshots {
            for ki in 0..k {
                for a in 0..2 {
                    amplitudes[[z, 2 * ki + a]] =
                        Complex::from_polar(amplitude[ki][a], phase[ki][a]);
                }
            }
        }
        CrbParams::new(array, noise_power, thetas, amplitudes)
    }

    /// Evaluate the bound at the signal sequence that produced a simulated
    /// data set: applies each source's dipole gains to its raw components.
    pub fn from_realization(
        scenario: &Scenario<F>,
        source_signals: &Array2<Complex<F>>,
    ) -> Result<Self> {
        let k = scenario.sources.len();
        let z = source_signals.ncols();
        if source_signals.nrows() != 2 * k {
            return Err(Error::DimensionMismatch(format!(
                "signal matrix has {} rows, expected {}",
                source_signals.nrows(),
                2 * k
            )));
        }
        let thetas: Vec<F> = scenario.sources.iter().map(|s| s.theta_bar()).collect();
        let mut amplitudes = Array2::zeros((z, 2 * k));
        for (ki, spec) in scenario.sources.iter().enumerate() {
            for axis in DipoleAxis::BOTH {
                let gain = dipole_gain(axis, spec.theta_bar())?;
                let a = axis.index();
                for zi in 0..z {
                    amplitudes[[zi, 2 * ki + a]] = source_signals[[2 * ki + a, zi]] * gain;
                }
            }
        }
        CrbParams::new(
            scenario.array.clone(),
            scenario.noise_power,
            thetas,
            amplitudes,
        )
    }

    pub fn source_count(&self) -> usize {
        self.thetas.len()
    }

    pub fn snapshots(&self) -> usize {
        self.amplitudes.nrows()
    }

    pub fn parameter_count(&self) -> usize {
        5 * self.thetas.len()
    }

    pub fn thetas(&self) -> &[F] {
        &self.thetas
    }
}

fn unit_phase<F: Scalar>(c: Complex<F>) -> Complex<F> {
    let n = c.norm();
    if n > F::zero() {
        c / n
    } else {
        Complex::new(F::one(), F::zero())
    }
}

/// Mean measurement vector and its Jacobian for one snapshot.
///
/// Rows stack the x axis (sensors `0..L`) then the y axis (`L..2L`);
/// column `p` of the Jacobian is the complex derivative of the mean with
/// respect to parameter `p` in the `[directions | amplitudes | phases]`
/// ordering.
pub fn response_and_jacobian<F: Scalar>(
    params: &CrbParams<F>,
    snapshot: usize,
) -> Result<(Array1<Complex<F>>, Array2<Complex<F>>)> {
    let k_count = params.source_count();
    let l = params.array.len();
    let np = params.parameter_count();
    if snapshot >= params.snapshots() {
        return Err(Error::invalid(format!(
            "snapshot index {snapshot} out of range (have {})",
            params.snapshots()
        )));
    }
    let tau = F::PI() + F::PI();
    let j = Complex::new(F::zero(), F::one());

    let mut mu = Array1::<Complex<F>>::zeros(2 * l);
    let mut jac = Array2::<Complex<F>>::zeros((2 * l, np));

    for ki in 0..k_count {
        let theta = params.thetas[ki];
        // Direction-coupling factor for the y amplitude: d ln b_y / d theta.
        let couple = if params.couple_y_gain {
            let b2_sq = F::one() - cast::<F>(4.0) * theta * theta;
            if b2_sq <= F::zero() {
                return Err(Error::Numerical(
                    "y-gain coupling undefined at endfire (zero y gain)".into(),
                ));
            }
            Some(-cast::<F>(4.0) * theta / b2_sq)
        } else {
            None
        };
        for (li, &pos) in params.array.positions().iter().enumerate() {
            let w = cast::<F>(pos as f64);
            let v = Complex::from_polar(F::one(), tau * theta * w);
            for a in 0..2 {
                let c = params.amplitudes[[snapshot, 2 * ki + a]];
                let row = a * l + li;
                let cv = c * v;
                mu[row] += cv;
                // d mu / d theta_k
                let mut dtheta = cv * j * (tau * w);
                if a == 1 {
                    if let Some(f) = couple {
                        dtheta += cv * f;
                    }
                }
                jac[[row, ki]] += dtheta;
                // d mu / d A_{k,a} and d mu / d kappa_{k,a}
                jac[[row, k_count + 2 * ki + a]] = unit_phase(c) * v;
                jac[[row, 3 * k_count + 2 * ki + a]] = cv * j;
            }
        }
    }
    Ok((mu, jac))
}

fn accumulate_fim<F: Scalar>(params: &CrbParams<F>, one_bit: bool) -> Result<Array2<F>> {
    let np = params.parameter_count();
    let sigma = params.noise_power.sqrt();
    let base = cast::<F>(2.0) / params.noise_power;
    let mut fim = Array2::<F>::zeros((np, np));
    for z in 0..params.snapshots() {
        let (mu, jac) = response_and_jacobian(params, z)?;
        for row in 0..mu.len() {
            let wr;
            let wi;
            if one_bit {
                wr = base * weight_omega(mu[row].re / sigma);
                wi = base * weight_omega(mu[row].im / sigma);
            } else {
                wr = base;
                wi = base;
            }
            for p in 0..np {
                let gp = jac[[row, p]];
                if gp.re == F::zero() && gp.im == F::zero() {
                    continue;
                }
                for q in p..np {
                    let gq = jac[[row, q]];
                    let inc = wr * gp.re * gq.re + wi * gp.im * gq.im;
                    fim[[p, q]] += inc;
                }
            }
        }
    }
    // Mirror the upper triangle.
    for p in 0..np {
        for q in 0..p {
            fim[[p, q]] = fim[[q, p]];
        }
    }
    Ok(fim)
}

/// Fisher information of the one-bit (sign) measurements.
pub fn fim_one_bit<F: Scalar>(params: &CrbParams<F>) -> Result<FisherInfo<F>> {
    Ok(FisherInfo {
        matrix: accumulate_fim(params, true)?,
        kind: FimKind::OneBit,
    })
}

/// Fisher information of the unquantized measurements.
pub fn fim_unquantized<F: Scalar>(params: &CrbParams<F>) -> Result<FisherInfo<F>> {
    Ok(FisherInfo {
        matrix: accumulate_fim(params, false)?,
        kind: FimKind::Unquantized,
    })
}

/// Cramer-Rao bounds on the direction estimates: the first `K` diagonal
/// entries of the inverted Fisher information.
///
/// Errors if the information matrix is singular or has condition number
/// above 1e12 (an unidentifiable parameterization, e.g. a source exactly at
/// endfire with a vanishing y gain).
pub fn crb_extract<F: Scalar>(info: &FisherInfo<F>, k: usize) -> Result<Vec<F>> {
    let np = info.matrix.nrows();
    if k > np {
        return Err(Error::invalid(format!(
            "cannot extract {k} direction bounds from a {np}-parameter matrix"
        )));
    }
    let (values, vectors) = real_symmetric_eigen(info.matrix.view())?;
    let min = values[0];
    let max = values[np - 1];
    if !(min > F::zero()) || max / min > cast(1e12) {
        return Err(Error::SingularInformation(format!(
            "eigenvalue range [{min:e}, {max:e}]"
        )));
    }
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut acc = F::zero();
        for jx in 0..np {
            let v = vectors[[i, jx]];
            acc += v * v / values[jx];
        }
        out.push(acc);
    }
    Ok(out)
}
