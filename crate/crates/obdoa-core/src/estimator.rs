//! Coarray MUSIC estimators.
//!
//! All estimators here share one structure: average a (reconstructed or
//! plain) normalized covariance onto the uniform segment of the difference
//! coarray, assemble the Hermitian Toeplitz coarray covariance from those
//! lag values, and run MUSIC on it. The one-bit variants differ only in
//! which normalized covariance they start from and whether the two dipole
//! axes are used separately or summed.

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geometry::{coarray_average, CoarrayGeometry};
use crate::linalg::{hermitian_eigen, polynomial_roots};
use crate::quantize::{
    normalize_covariance, reconstruct_normalized_covariance, sample_covariance,
    NormalizedCovariance,
};
use crate::scalar::{cast, Scalar};
use crate::signal::{DipoleAxis, SnapshotMatrix};

/// Provenance tag for coarray-domain quantities: a single dipole axis or
/// the sum over both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementAxis {
    X,
    Y,
    Sum,
}

impl From<DipoleAxis> for MeasurementAxis {
    fn from(a: DipoleAxis) -> Self {
        match a {
            DipoleAxis::X => MeasurementAxis::X,
            DipoleAxis::Y => MeasurementAxis::Y,
        }
    }
}

/// Covariance values on the contiguous lags `[-u, u]` of the coarray's
/// uniform segment: the measurement vector of the equivalent virtual array.
#[derive(Debug, Clone)]
pub struct CoarrayMeasurement<F> {
    values: Vec<Complex<F>>, // index d + u holds lag d
    axis: MeasurementAxis,
}

impl<F: Scalar> CoarrayMeasurement<F> {
    /// Largest covered lag `u`.
    pub fn uniform_max(&self) -> i64 {
        (self.values.len() as i64 - 1) / 2
    }

    /// Value at `lag`, which must lie in `[-u, u]`.
    pub fn value(&self, lag: i64) -> Complex<F> {
        let u = self.uniform_max();
        assert!(lag.abs() <= u, "lag {lag} outside uniform segment [-{u}, {u}]");
        self.values[(lag + u) as usize]
    }

    pub fn axis(&self) -> MeasurementAxis {
        self.axis
    }
}

/// Average a normalized covariance over the coarray and keep the uniform
/// segment. Errors if the segment is trivial (`u < 1`), i.e. the array has
/// no usable virtual aperture.
pub fn coarray_measurement<F: Scalar>(
    ncov: &NormalizedCovariance<F>,
    geometry: &CoarrayGeometry,
) -> Result<CoarrayMeasurement<F>> {
    let u = geometry.coarray().uniform_max();
    if u < 1 {
        return Err(Error::DegenerateArray(format!(
            "uniform coarray segment is [{}, {}]; nothing to estimate from",
            -u, u
        )));
    }
    let avg = coarray_average(ncov.matrix().view(), geometry)?;
    let values = (-u..=u)
        .map(|d| avg.value(d).expect("uniform segment lag present"))
        .collect();
    Ok(CoarrayMeasurement {
        values,
        axis: ncov.axis().into(),
    })
}

/// Hermitian Toeplitz covariance of the virtual uniform array spanned by
/// the non-negative half of the coarray's uniform segment.
#[derive(Debug, Clone)]
pub struct CoarrayCovariance<F> {
    matrix: Array2<Complex<F>>,
    axis: MeasurementAxis,
}

impl<F: Scalar> CoarrayCovariance<F> {
    pub fn matrix(&self) -> &Array2<Complex<F>> {
        &self.matrix
    }

    pub fn axis(&self) -> MeasurementAxis {
        self.axis
    }

    /// Side length `u + 1`; MUSIC on this matrix resolves up to `u` sources.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Assemble the `(u+1) x (u+1)` Toeplitz covariance with entry `(n1, n2)`
/// equal to the measurement at lag `n1 - n2`.
///
/// Opposite-lag values are Hermitian-averaged so the result is exactly
/// Hermitian even under finite-sample asymmetry.
pub fn coarray_covariance<F: Scalar>(meas: &CoarrayMeasurement<F>) -> CoarrayCovariance<F> {
    let u = meas.uniform_max();
    let dim = (u + 1) as usize;
    let half = cast::<F>(0.5);
    let mut matrix = Array2::<Complex<F>>::zeros((dim, dim));
    for d in 0..=u {
        let sym = (meas.value(d) + meas.value(-d).conj()) * half;
        for n2 in 0..dim - d as usize {
            let n1 = n2 + d as usize;
            matrix[[n1, n2]] = sym;
            matrix[[n2, n1]] = sym.conj();
        }
    }
    CoarrayCovariance {
        matrix,
        axis: meas.axis(),
    }
}

/// Entrywise sum of two coarray covariances (used to combine the axes).
pub fn sum_covariance<F: Scalar>(
    a: &CoarrayCovariance<F>,
    b: &CoarrayCovariance<F>,
) -> Result<CoarrayCovariance<F>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "cannot sum coarray covariances of sizes {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(CoarrayCovariance {
        matrix: &a.matrix + &b.matrix,
        axis: MeasurementAxis::Sum,
    })
}

/// Estimated normalized directions, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate<F> {
    pub thetas: Vec<F>,
}

/// Noise subspace: eigenvectors of the `dim - k` smallest-magnitude
/// eigenvalues.
///
/// Magnitude ordering matches MUSIC on the spatially smoothed (squared)
/// coarray covariance. The distinction matters: the sample Toeplitz matrix
/// is indefinite, and near the estimation threshold a noise fluctuation can
/// sit at a negative eigenvalue whose magnitude exceeds a weak signal
/// component. Signed ordering would hand that fluctuation's direction to
/// the noise subspace and null a true source.
fn noise_subspace<F: Scalar>(cov: &CoarrayCovariance<F>, k: usize) -> Result<Array2<Complex<F>>> {
    let dim = cov.dim();
    if k == 0 {
        return Err(Error::invalid("source count must be at least 1"));
    }
    if k >= dim {
        return Err(Error::TooManySources {
            requested: k,
            max: dim - 1,
        });
    }
    let eig = hermitian_eigen(cov.matrix().view())?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (eig.values[a].abs(), eig.values[b].abs());
        ma.partial_cmp(&mb).expect("finite eigenvalues")
    });
    let split = dim - k;
    let scale = eig.values[order[dim - 1]].abs().max(F::min_positive_value());
    let boundary = eig.values[order[split]].abs() - eig.values[order[split - 1]].abs();
    if boundary <= cast::<F>(1e-10) * scale {
        log::warn!(
            "signal/noise eigenvalue boundary is degenerate ({} vs {}); source count may be wrong",
            eig.values[order[split - 1]],
            eig.values[order[split]]
        );
    }
    let mut un = Array2::zeros((dim, split));
    for (col, &idx) in order[..split].iter().enumerate() {
        un.column_mut(col).assign(&eig.vectors.column(idx));
    }
    Ok(un)
}

/// Virtual-array steering vector on lags `0..=u`.
fn virtual_steering<F: Scalar>(dim: usize, theta_bar: F) -> Array1<Complex<F>> {
    let tau = F::PI() + F::PI();
    Array1::from_iter((0..dim).map(|n| {
        Complex::from_polar(F::one(), tau * theta_bar * cast::<F>(n as f64))
    }))
}

/// MUSIC pseudo-spectrum `1 / ||Un^H v(theta)||^2` over a grid of
/// normalized directions. The denominator is floored at 1e-15.
pub fn music_spectrum<F: Scalar>(
    cov: &CoarrayCovariance<F>,
    k: usize,
    grid: &[F],
) -> Result<Vec<(F, F)>> {
    let un = noise_subspace(cov, k)?;
    let dim = cov.dim();
    let floor = cast::<F>(1e-15);
    let mut out = Vec::with_capacity(grid.len());
    for &theta in grid {
        let v = virtual_steering(dim, theta);
        let mut den = F::zero();
        for col in un.columns() {
            let mut dot = Complex::new(F::zero(), F::zero());
            for i in 0..dim {
                dot += col[i].conj() * v[i];
            }
            den += dot.norm_sqr();
        }
        out.push((theta, F::one() / den.max(floor)));
    }
    Ok(out)
}

/// Root-MUSIC: factor the noise-subspace polynomial and read DOAs off the
/// `k` roots closest to the unit circle, one per conjugate-reciprocal pair.
pub fn root_music<F: Scalar>(cov: &CoarrayCovariance<F>, k: usize) -> Result<DoaEstimate<F>> {
    let un = noise_subspace(cov, k)?;
    let dim = cov.dim();
    let u = dim - 1;
    let proj = un.dot(&un.t().mapv(|z| z.conj())); // Un Un^H

    // Coefficient m is the sum of the m-th diagonal of the projector;
    // conjugate symmetry is enforced exactly so roots pair as (z, 1/z*).
    let mut coeffs = vec![Complex::new(F::zero(), F::zero()); 2 * u + 1];
    for row in 0..dim {
        for col in 0..dim {
            coeffs[col + u - row] += proj[[row, col]];
        }
    }
    let half = cast::<F>(0.5);
    coeffs[u] = Complex::new(coeffs[u].re, F::zero());
    for m in 1..=u {
        let sym = (coeffs[u + m] + coeffs[u - m].conj()) * half;
        coeffs[u + m] = sym;
        coeffs[u - m] = sym.conj();
    }

    // The exact coefficient symmetry pairs every root z with 1/conj(z) at
    // the same argument, one nominally inside the circle and one outside.
    // Rooting error can push both members of a near-circle pair to the same
    // side, so selecting only strictly-inside roots loses directions exactly
    // when the signal subspace fills the matrix. Instead, rank all roots by
    // distance to the circle and skip a root whose argument duplicates an
    // already-chosen one (its pair partner).
    let mut roots = polynomial_roots(&coeffs)?;
    roots.sort_by(|a, b| {
        let da = (a.norm() - F::one()).abs();
        let db = (b.norm() - F::one()).abs();
        da.partial_cmp(&db).expect("finite root moduli")
    });
    let pair_tol = cast::<F>(1e-4);
    let mut picked: Vec<Complex<F>> = Vec::with_capacity(k);
    for z in roots {
        if picked.iter().any(|w| {
            let mut d = (z.arg() - w.arg()).abs();
            if d > F::PI() {
                d = (F::PI() + F::PI()) - d;
            }
            d < pair_tol
        }) {
            continue;
        }
        picked.push(z);
        if picked.len() == k {
            break;
        }
    }
    if picked.len() < k {
        return Err(Error::EstimationFailure(format!(
            "only {} distinct root angles, need {k}",
            picked.len()
        )));
    }
    let tau = F::PI() + F::PI();
    let mut thetas: Vec<F> = picked.iter().map(|z| z.arg() / tau).collect();
    thetas.sort_by(|a, b| a.partial_cmp(b).expect("finite directions"));
    Ok(DoaEstimate { thetas })
}

/// Coarray covariance of one axis of one-bit snapshots, via the arcsine law.
pub fn ob_music1_covariance<F: Scalar>(
    snaps: &SnapshotMatrix<F>,
    axis: DipoleAxis,
    geometry: &CoarrayGeometry,
) -> Result<CoarrayCovariance<F>> {
    if !snaps.quantized() {
        return Err(Error::invalid(
            "one-bit estimator requires quantized snapshots",
        ));
    }
    let cov = sample_covariance(snaps, axis);
    let ncov = reconstruct_normalized_covariance(cov.view(), axis)?;
    let meas = coarray_measurement(&ncov, geometry)?;
    Ok(coarray_covariance(&meas))
}

/// Summed-axis coarray covariance of one-bit snapshots.
pub fn ob_music2_covariance<F: Scalar>(
    snaps: &SnapshotMatrix<F>,
    geometry: &CoarrayGeometry,
) -> Result<CoarrayCovariance<F>> {
    let x = ob_music1_covariance(snaps, DipoleAxis::X, geometry)?;
    let y = ob_music1_covariance(snaps, DipoleAxis::Y, geometry)?;
    sum_covariance(&x, &y)
}

/// Summed-axis coarray covariance of *unquantized* snapshots, with each
/// axis diagonal-normalized first. The reference the one-bit pipelines are
/// judged against.
pub fn baseline_covariance<F: Scalar>(
    snaps: &SnapshotMatrix<F>,
    geometry: &CoarrayGeometry,
) -> Result<CoarrayCovariance<F>> {
    if snaps.quantized() {
        return Err(Error::invalid(
            "baseline estimator requires unquantized snapshots",
        ));
    }
    let mut per_axis = Vec::with_capacity(2);
    for axis in DipoleAxis::BOTH {
        let cov = sample_covariance(snaps, axis);
        let ncov = normalize_covariance(cov.view(), axis)?;
        let meas = coarray_measurement(&ncov, geometry)?;
        per_axis.push(coarray_covariance(&meas));
    }
    sum_covariance(&per_axis[0], &per_axis[1])
}

/// One-bit MUSIC on a single dipole axis.
pub fn ob_music1<F: Scalar>(
    snaps: &SnapshotMatrix<F>,
    axis: DipoleAxis,
    geometry: &CoarrayGeometry,
    k: usize,
) -> Result<DoaEstimate<F>> {
    root_music(&ob_music1_covariance(snaps, axis, geometry)?, k)
}

/// One-bit MUSIC on the summed axes. Robust to sources that are weak on
/// one dipole, since whatever power the other axis captures still enters.
pub fn ob_music2<F: Scalar>(
    snaps: &SnapshotMatrix<F>,
    geometry: &CoarrayGeometry,
    k: usize,
) -> Result<DoaEstimate<F>> {
    root_music(&ob_music2_covariance(snaps, geometry)?, k)
}

/// Unquantized coarray MUSIC with the same normalization and axis summing
/// as the one-bit pipeline.
pub fn baseline_unquantized<F: Scalar>(
    snaps: &SnapshotMatrix<F>,
    geometry: &CoarrayGeometry,
    k: usize,
) -> Result<DoaEstimate<F>> {
    root_music(&baseline_covariance(snaps, geometry)?, k)
}
