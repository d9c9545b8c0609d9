//! One-bit complex quantization and arcsine-law covariance reconstruction.
//!
//! A one-bit receiver keeps only the signs of the real and imaginary parts
//! of each measurement. For circular complex Gaussian inputs the arcsine law
//! ties the quantized covariance to the *normalized* (unit-diagonal)
//! covariance of the unquantized signal: each entry of the one-bit
//! covariance is `(2/pi) arcsine` of the corresponding normalized entry,
//! applied separately to real and imaginary parts. Inverting the law with an
//! entrywise sine recovers the normalized covariance, which is all a scale-
//! invariant DOA estimator needs.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};
use crate::signal::{DipoleAxis, SnapshotMatrix};

/// Replace each sample by `(sign(re) + j sign(im)) / sqrt(2)`.
///
/// Zero components quantize to -1 (they occur with probability zero for the
/// Gaussian model; pinning the tie keeps the map deterministic). Errors if
/// the input is already quantized.
pub fn one_bit_quantize<F: Scalar>(snaps: &SnapshotMatrix<F>) -> Result<SnapshotMatrix<F>> {
    if snaps.quantized() {
        return Err(Error::invalid("snapshots are already one-bit quantized"));
    }
    Ok(snaps.map_axes(|a| a.mapv(signc), true))
}

fn signc<F: Scalar>(c: Complex<F>) -> Complex<F> {
    let r = F::FRAC_1_SQRT_2();
    let sgn = |v: F| if v > F::zero() { r } else { -r };
    Complex::new(sgn(c.re), sgn(c.im))
}

/// Sample covariance `(1/Z) Y Y^H` of one axis. Hermitian by construction.
pub fn sample_covariance<F: Scalar>(
    snaps: &SnapshotMatrix<F>,
    axis: DipoleAxis,
) -> Array2<Complex<F>> {
    let data = snaps.axis(axis);
    let (l, z) = (data.nrows(), data.ncols());
    let inv_z = F::one() / cast::<F>(z as f64);
    let mut cov = Array2::<Complex<F>>::zeros((l, l));
    for i in 0..l {
        for j in i..l {
            let mut acc = Complex::new(F::zero(), F::zero());
            for t in 0..z {
                acc += data[[i, t]] * data[[j, t]].conj();
            }
            let v = acc * inv_z;
            cov[[i, j]] = v;
            if i != j {
                cov[[j, i]] = v.conj();
            }
        }
    }
    cov
}

/// A unit-diagonal Hermitian covariance, tagged with the dipole axis it
/// came from.
#[derive(Debug, Clone)]
pub struct NormalizedCovariance<F> {
    matrix: Array2<Complex<F>>,
    axis: DipoleAxis,
}

impl<F: Scalar> NormalizedCovariance<F> {
    /// Validate and wrap a normalized covariance. The diagonal must already
    /// be within 1e-8 of one (it is snapped to exactly one) and the matrix
    /// Hermitian to the same tolerance.
    pub fn new(mut matrix: Array2<Complex<F>>, axis: DipoleAxis) -> Result<Self> {
        let l = matrix.nrows();
        if matrix.ncols() != l {
            return Err(Error::DimensionMismatch(format!(
                "normalized covariance must be square, got {:?}",
                matrix.shape()
            )));
        }
        let tol = cast::<F>(1e-8);
        for i in 0..l {
            let d = matrix[[i, i]];
            if (d.re - F::one()).abs() > tol || d.im.abs() > tol {
                return Err(Error::invalid(format!(
                    "diagonal entry {i} of a normalized covariance is {d}, expected 1"
                )));
            }
            for j in (i + 1)..l {
                if (matrix[[i, j]] - matrix[[j, i]].conj()).norm() > tol {
                    return Err(Error::invalid(format!(
                        "normalized covariance is not Hermitian at ({i},{j})"
                    )));
                }
            }
            matrix[[i, i]] = Complex::new(F::one(), F::zero());
        }
        Ok(NormalizedCovariance { matrix, axis })
    }

    pub fn matrix(&self) -> &Array2<Complex<F>> {
        &self.matrix
    }

    pub fn axis(&self) -> DipoleAxis {
        self.axis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Diagonal-normalize an (unquantized) covariance: `N^{-1/2} R N^{-1/2}`
/// with `N = diag(R)`. Errors on a non-positive diagonal entry.
pub fn normalize_covariance<F: Scalar>(
    cov: ArrayView2<Complex<F>>,
    axis: DipoleAxis,
) -> Result<NormalizedCovariance<F>> {
    let l = cov.nrows();
    if cov.ncols() != l {
        return Err(Error::DimensionMismatch(format!(
            "covariance must be square, got {:?}",
            cov.shape()
        )));
    }
    let mut inv_sqrt = Vec::with_capacity(l);
    for i in 0..l {
        let d = cov[[i, i]].re;
        if !(d > F::zero()) {
            return Err(Error::invalid(format!(
                "covariance diagonal entry {i} is {d}, cannot normalize"
            )));
        }
        inv_sqrt.push(F::one() / d.sqrt());
    }
    let mut out = Array2::<Complex<F>>::zeros((l, l));
    for i in 0..l {
        for j in 0..l {
            out[[i, j]] = cov[[i, j]] * (inv_sqrt[i] * inv_sqrt[j]);
        }
    }
    NormalizedCovariance::new(out, axis)
}

/// Forward arcsine law: map a normalized covariance to the covariance its
/// one-bit quantization would have, `(2/pi) [arcsin(re) + j arcsin(im)]`
/// entrywise.
pub fn arcsine_forward<F: Scalar>(ncov: &NormalizedCovariance<F>) -> Array2<Complex<F>> {
    let scale = cast::<F>(2.0) / F::PI();
    ncov.matrix().mapv(|c| {
        Complex::new(
            scale * clamp_unit(c.re).asin(),
            scale * clamp_unit(c.im).asin(),
        )
    })
}

/// Invert the arcsine law: entrywise `sin(pi/2 re) + j sin(pi/2 im)` of a
/// one-bit sample covariance, recovering the normalized covariance of the
/// underlying unquantized signal.
///
/// Components are clipped to `[-1, 1]` first; finite-sample estimates can
/// stick out by a few ulps or, off the diagonal, by sampling noise.
pub fn reconstruct_normalized_covariance<F: Scalar>(
    one_bit_cov: ArrayView2<Complex<F>>,
    axis: DipoleAxis,
) -> Result<NormalizedCovariance<F>> {
    let half_pi = F::FRAC_PI_2();
    let mapped = one_bit_cov.mapv(|c| {
        Complex::new(
            (half_pi * clamp_unit(c.re)).sin(),
            (half_pi * clamp_unit(c.im)).sin(),
        )
    });
    NormalizedCovariance::new(mapped, axis)
}

fn clamp_unit<F: Scalar>(v: F) -> F {
    v.max(-F::one()).min(F::one())
}
