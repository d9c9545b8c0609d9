//! Dense numerical kernels: Hermitian eigendecomposition and polynomial
//! root finding.
//!
//! The matrices in this crate are small (tens of rows), so a cyclic Jacobi
//! eigensolver and an Aberth-Ehrlich root finder are plenty fast, carry no
//! external linking requirements, and stay generic over the scalar type.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen<F> {
    /// Eigenvalues in ascending order.
    pub values: Vec<F>,
    /// Unit eigenvectors; column `k` pairs with `values[k]`.
    pub vectors: Array2<Complex<F>>,
}

const MAX_JACOBI_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// The input is symmetrized as `(A + A^H) / 2` first, so tiny departures
/// from exact Hermitian symmetry are tolerated. Convergence is quadratic;
/// failure to converge within the sweep budget reports a numerical error.
pub fn hermitian_eigen<F: Scalar>(a: ArrayView2<Complex<F>>) -> Result<HermitianEigen<F>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {:?}",
            a.shape()
        )));
    }
    if n == 0 {
        return Err(Error::invalid("cannot decompose an empty matrix"));
    }

    let half = cast::<F>(0.5);
    let mut m = Array2::<Complex<F>>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] = (a[[i, j]] + a[[j, i]].conj()) * half;
        }
    }
    let mut v = Array2::<Complex<F>>::zeros((n, n));
    for i in 0..n {
        v[[i, i]] = Complex::new(F::one(), F::zero());
    }

    let frob = m.iter().map(|z| z.norm_sqr()).sum::<F>().sqrt();
    let tol = F::epsilon() * frob;

    let mut converged = frob == F::zero() || n == 1;
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        if converged {
            break;
        }
        let mut off = F::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            converged = true;
            break;
        }

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let g = m[[p, q]];
                let gn = g.norm();
                if gn == F::zero() {
                    continue;
                }
                let phase = g / gn;
                let alpha = m[[p, p]].re;
                let beta = m[[q, q]].re;
                let tau = (beta - alpha) / (gn + gn);
                // Smaller-angle solution of t^2 + 2 tau t - 1 = 0.
                let t = if tau == F::zero() {
                    F::one()
                } else {
                    tau.signum() / (tau.abs() + (tau * tau + F::one()).sqrt())
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = t * c;

                let cc = Complex::new(c, F::zero());
                let sp = phase * s; // s e^{i phi}
                let spc = sp.conj(); // s e^{-i phi}

                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = m[[i, p]];
                    let aiq = m[[i, q]];
                    let nip = aip * cc - aiq * spc;
                    let niq = aip * sp + aiq * cc;
                    m[[i, p]] = nip;
                    m[[i, q]] = niq;
                    m[[p, i]] = nip.conj();
                    m[[q, i]] = niq.conj();
                }
                m[[p, p]] = Complex::new(alpha - t * gn, F::zero());
                m[[q, q]] = Complex::new(beta + t * gn, F::zero());
                m[[p, q]] = Complex::new(F::zero(), F::zero());
                m[[q, p]] = Complex::new(F::zero(), F::zero());

                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = vip * cc - viq * spc;
                    v[[i, q]] = vip * sp + viq * cc;
                }
            }
        }
    }
    if !converged {
        // One final check: the budget is generous, so reaching it with a
        // still-large off-diagonal indicates something pathological.
        let mut off = F::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]].norm_sqr();
            }
        }
        if off.sqrt() > tol * cast::<F>(1e3) {
            return Err(Error::Numerical(
                "Jacobi eigendecomposition did not converge".into(),
            ));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<F> = (0..n).map(|i| m[[i, i]].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("finite eigenvalues"));

    let values: Vec<F> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Array2::<Complex<F>>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[[i, dst]] = v[[i, src]];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Eigendecomposition of a real symmetric matrix.
///
/// Runs the complex Jacobi solver on the embedded matrix; with a real input
/// every rotation stays real, so the imaginary parts are exactly zero.
pub fn real_symmetric_eigen<F: Scalar>(a: ArrayView2<F>) -> Result<(Vec<F>, Array2<F>)> {
    let n = a.nrows();
    let embedded = Array2::from_shape_fn((n, a.ncols()), |(i, j)| Complex::new(a[[i, j]], F::zero()));
    let eig = hermitian_eigen(embedded.view())?;
    let vectors = eig.vectors.mapv(|z| z.re);
    Ok((eig.values, vectors))
}

const MAX_ABERTH_ITERATIONS: usize = 400;

/// All complex roots of `c[0] + c[1] z + ... + c[n] z^n`, with multiplicity.
///
/// Exact zero coefficients at the ends are stripped (trailing zeros become
/// roots at the origin); degrees one and two use closed forms; higher
/// degrees run simultaneous Aberth-Ehrlich iteration followed by a Newton
/// polish. Root order is unspecified.
pub fn polynomial_roots<F: Scalar>(coeffs: &[Complex<F>]) -> Result<Vec<Complex<F>>> {
    let zero = Complex::new(F::zero(), F::zero());
    let high = coeffs
        .iter()
        .rposition(|c| *c != zero)
        .ok_or_else(|| Error::invalid("zero polynomial has no defined roots"))?;
    let low = coeffs.iter().position(|c| *c != zero).unwrap();

    let mut roots: Vec<Complex<F>> = vec![zero; low];
    let c = &coeffs[low..=high];
    let n = c.len() - 1;
    match n {
        0 => {}
        1 => roots.push(-c[0] / c[1]),
        2 => roots.extend(quadratic_roots(c[0], c[1], c[2])),
        _ => roots.extend(aberth(c)?),
    }
    Ok(roots)
}

/// Stable complex quadratic formula for `c0 + c1 z + c2 z^2`.
fn quadratic_roots<F: Scalar>(c0: Complex<F>, c1: Complex<F>, c2: Complex<F>) -> [Complex<F>; 2] {
    let two = cast::<F>(2.0);
    let four = cast::<F>(4.0);
    let disc = (c1 * c1 - c0 * c2 * four).sqrt();
    // Pick the sign that avoids cancellation in c1 + s * disc.
    let s = if (c1 + disc).norm() >= (c1 - disc).norm() {
        disc
    } else {
        -disc
    };
    let q = -(c1 + s) / two;
    if q.norm() == F::zero() {
        let r = -c1 / (c2 * two);
        [r, r]
    } else {
        [q / c2, c0 / q]
    }
}

fn aberth<F: Scalar>(c: &[Complex<F>]) -> Result<Vec<Complex<F>>> {
    let n = c.len() - 1;
    let nf = cast::<F>(n as f64);
    let eps = F::epsilon();
    let one = F::one();

    // Initial guesses on a circle whose radius estimates the geometric mean
    // of the root magnitudes, with an angular offset and a mild radius ramp
    // to break any symmetry shared with the polynomial.
    let lead = c[n];
    let mut r = (c[0] / lead).norm().powf(one / nf);
    if !r.is_finite() || r == F::zero() {
        r = one;
    }
    let tau = F::PI() + F::PI();
    let offset = cast::<F>(0.43);
    let mut z: Vec<Complex<F>> = (0..n)
        .map(|k| {
            let kf = cast::<F>(k as f64);
            let angle = tau * kf / nf + offset;
            let radius = r * (one + cast::<F>(0.08) * kf / nf);
            Complex::from_polar(radius, angle)
        })
        .collect();

    let mut done = vec![false; n];
    for _iter in 0..MAX_ABERTH_ITERATIONS {
        let mut all_done = true;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let (p, dp, bound) = horner_with_bound(c, z[k]);
            if p.norm() <= eps * bound {
                done[k] = true;
                continue;
            }
            all_done = false;
            let w = if dp == Complex::new(F::zero(), F::zero()) {
                // Saddle point: nudge off it rather than divide by zero.
                Complex::from_polar(eps.sqrt() * (one + z[k].norm()), cast::<F>(0.917))
            } else {
                p / dp
            };
            let mut repulsion = Complex::new(F::zero(), F::zero());
            for (j, zj) in z.iter().enumerate() {
                if j != k {
                    let d = z[k] - *zj;
                    if d != Complex::new(F::zero(), F::zero()) {
                        repulsion += Complex::new(one, F::zero()) / d;
                    }
                }
            }
            let denom = Complex::new(one, F::zero()) - w * repulsion;
            let step = if denom == Complex::new(F::zero(), F::zero()) {
                w
            } else {
                w / denom
            };
            z[k] -= step;
        }
        if all_done {
            // Newton polish sharpens roots that stalled just above the
            // floating-point residual floor.
            for zk in z.iter_mut() {
                for _ in 0..2 {
                    let (p, dp, _) = horner_with_bound(c, *zk);
                    if dp != Complex::new(F::zero(), F::zero()) {
                        let step = p / dp;
                        if step.norm() < one + zk.norm() {
                            *zk -= step;
                        }
                    }
                }
            }
            return Ok(z);
        }
    }
    Err(Error::Numerical(
        "polynomial root iteration did not converge".into(),
    ))
}

/// Horner evaluation returning `(p(z), p'(z), sum_i |c_i| |z|^i)`.
///
/// The last component bounds the attainable evaluation accuracy and drives
/// the per-root stopping test.
fn horner_with_bound<F: Scalar>(
    c: &[Complex<F>],
    z: Complex<F>,
) -> (Complex<F>, Complex<F>, F) {
    let n = c.len() - 1;
    let az = z.norm();
    let mut p = c[n];
    let mut dp = Complex::new(F::zero(), F::zero());
    let mut bound = c[n].norm();
    for i in (0..n).rev() {
        dp = dp * z + p;
        p = p * z + c[i];
        bound = bound * az + c[i].norm();
    }
    // Inflate by the polynomial length to absorb accumulated rounding.
    (p, dp, bound * cast::<F>((2 * n + 1) as f64))
}
