//! Sparse array geometries and their difference coarrays.
//!
//! Sensor positions are integer multiples of the base half-wavelength
//! spacing. The second-order statistics of such an array live on its
//! *difference coarray* -- the set of pairwise position differences -- and a
//! sparse physical array can therefore emulate a much longer uniform array.
//! This module constructs the standard sparse layouts, derives their
//! coarrays, and maps physical covariance entries onto coarray lags.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::ArrayView2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Family a sensor layout belongs to. Only used for labeling output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayKind {
    Ula,
    Nested,
    Coprime,
    Custom,
}

impl fmt::Display for ArrayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ArrayKind::Ula => "ula",
            ArrayKind::Nested => "nested",
            ArrayKind::Coprime => "coprime",
            ArrayKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Physical sensor layout: sorted, distinct, non-negative integer positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayConfig {
    kind: ArrayKind,
    positions: Vec<i64>,
}

impl ArrayConfig {
    /// Uniform linear array with sensors at `0..n`.
    pub fn ula(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("ULA needs at least one sensor"));
        }
        Ok(ArrayConfig {
            kind: ArrayKind::Ula,
            positions: (0..n as i64).collect(),
        })
    }

    /// Two-level nested array: a dense segment `{1, ..., l1}` followed by a
    /// sparse segment `{i (l1 + 1) : i = 1, ..., l2}`.
    pub fn nested(l1: usize, l2: usize) -> Result<Self> {
        if l1 == 0 || l2 == 0 {
            return Err(Error::invalid("nested array levels must be positive"));
        }
        let mut positions: Vec<i64> = (1..=l1 as i64).collect();
        let stride = l1 as i64 + 1;
        positions.extend((1..=l2 as i64).map(|i| i * stride));
        Ok(ArrayConfig {
            kind: ArrayKind::Nested,
            positions,
        })
    }

    /// Coprime array: `{i m : i = 0, ..., n - 1}` interleaved with
    /// `{i n : i = 1, ..., 2m - 1}`. Requires `gcd(m, n) == 1`.
    pub fn coprime(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("coprime array parameters must be positive"));
        }
        if gcd(m as i64, n as i64) != 1 {
            return Err(Error::invalid(format!(
                "coprime array requires gcd(m, n) = 1, got gcd({m}, {n}) = {}",
                gcd(m as i64, n as i64)
            )));
        }
        let mut positions: Vec<i64> = (0..n as i64).map(|i| i * m as i64).collect();
        positions.extend((1..2 * m as i64).map(|i| i * n as i64));
        positions.sort_unstable();
        positions.dedup();
        Ok(ArrayConfig {
            kind: ArrayKind::Coprime,
            positions,
        })
    }

    /// Arbitrary layout. Positions are sorted; duplicates and negative
    /// entries are rejected.
    pub fn custom(mut positions: Vec<i64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("array needs at least one sensor"));
        }
        positions.sort_unstable();
        if positions[0] < 0 {
            return Err(Error::invalid("sensor positions must be non-negative"));
        }
        if positions.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("sensor positions must be distinct"));
        }
        Ok(ArrayConfig {
            kind: ArrayKind::Custom,
            positions,
        })
    }

    pub fn kind(&self) -> ArrayKind {
        self.kind
    }

    /// Sorted sensor positions in half-wavelength units.
    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    /// Number of physical sensors.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Span between the first and last sensor.
    pub fn aperture(&self) -> i64 {
        self.positions[self.positions.len() - 1] - self.positions[0]
    }
}

impl fmt::Display for ArrayConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.kind)?;
        for (i, p) in self.positions.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

/// Parse an array description such as `"nested 3 3"`, `"coprime:2,3"`,
/// `"ula 10"` or `"custom 0 1 4 6"`. Separators may be spaces, colons or
/// commas in any mix.
pub fn parse_array_spec(spec: &str) -> Result<ArrayConfig> {
    let mut tokens = spec
        .split(|c: char| c.is_whitespace() || c == ':' || c == ',')
        .filter(|t| !t.is_empty());
    let kind = tokens
        .next()
        .ok_or_else(|| Error::invalid("empty array spec"))?;
    let args: Vec<i64> = tokens
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| Error::invalid(format!("bad array parameter '{t}' in '{spec}'")))
        })
        .collect::<Result<_>>()?;
    let expect = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "array kind '{kind}' takes {n} parameter(s), got {}",
                args.len()
            )))
        }
    };
    let as_usize = |v: i64| -> Result<usize> {
        usize::try_from(v).map_err(|_| Error::invalid(format!("array parameter {v} must be non-negative")))
    };
    match kind {
        "ula" => {
            expect(1)?;
            ArrayConfig::ula(as_usize(args[0])?)
        }
        "nested" => {
            expect(2)?;
            ArrayConfig::nested(as_usize(args[0])?, as_usize(args[1])?)
        }
        "coprime" => {
            expect(2)?;
            ArrayConfig::coprime(as_usize(args[0])?, as_usize(args[1])?)
        }
        "custom" => ArrayConfig::custom(args),
        other => Err(Error::invalid(format!("unknown array kind '{other}'"))),
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// The set of pairwise sensor-position differences, plus its longest
/// zero-centered contiguous run.
///
/// The coarray is symmetric about zero. Estimators can only use the
/// *uniform segment* `[-u, u]`, the longest hole-free stretch around lag 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceCoarray {
    lags: Vec<i64>,
    uniform_max: i64,
}

impl DifferenceCoarray {
    /// All distinct lags, sorted ascending.
    pub fn lags(&self) -> &[i64] {
        &self.lags
    }

    /// Largest `u` such that every integer lag in `[-u, u]` is present.
    pub fn uniform_max(&self) -> i64 {
        self.uniform_max
    }

    /// Number of lags in the non-negative half of the uniform segment,
    /// i.e. `u + 1`. This is the side length of the coarray covariance.
    pub fn nonneg_uniform_len(&self) -> usize {
        self.uniform_max as usize + 1
    }

    pub fn contains(&self, lag: i64) -> bool {
        self.lags.binary_search(&lag).is_ok()
    }

    /// Lags missing between the extreme differences (the coarray "holes").
    pub fn holes(&self) -> Vec<i64> {
        let (lo, hi) = (self.lags[0], self.lags[self.lags.len() - 1]);
        (lo..=hi).filter(|d| !self.contains(*d)).collect()
    }
}

/// For each coarray lag, the list of sensor index pairs `(i, j)` with
/// `position[i] - position[j]` equal to that lag.
///
/// Averaging a physical covariance over each bucket is the action of the
/// pseudo-inverse of the (implicit) lag selection matrix, so the full matrix
/// never needs to be materialized.
#[derive(Debug, Clone)]
pub struct LagMap {
    buckets: BTreeMap<i64, Vec<(usize, usize)>>,
}

impl LagMap {
    /// Index pairs contributing to `lag`, or `None` for a hole.
    pub fn pairs(&self, lag: i64) -> Option<&[(usize, usize)]> {
        self.buckets.get(&lag).map(|v| v.as_slice())
    }

    /// Number of sensor pairs mapping to `lag` (0 for holes).
    pub fn multiplicity(&self, lag: i64) -> usize {
        self.buckets.get(&lag).map_or(0, |v| v.len())
    }

    /// Lags in ascending order.
    pub fn lags(&self) -> impl Iterator<Item = i64> + '_ {
        self.buckets.keys().copied()
    }
}

/// An [`ArrayConfig`] together with its derived coarray structures.
#[derive(Debug, Clone)]
pub struct CoarrayGeometry {
    config: ArrayConfig,
    coarray: DifferenceCoarray,
    lag_map: LagMap,
}

impl CoarrayGeometry {
    pub fn new(config: ArrayConfig) -> Self {
        let coarray = difference_coarray(&config);
        let lag_map = lag_map(&config);
        CoarrayGeometry {
            config,
            coarray,
            lag_map,
        }
    }

    pub fn config(&self) -> &ArrayConfig {
        &self.config
    }

    pub fn coarray(&self) -> &DifferenceCoarray {
        &self.coarray
    }

    pub fn lag_map(&self) -> &LagMap {
        &self.lag_map
    }
}

/// Difference coarray of `config`.
pub fn difference_coarray(config: &ArrayConfig) -> DifferenceCoarray {
    let pos = config.positions();
    let mut set = std::collections::BTreeSet::new();
    for &a in pos {
        for &b in pos {
            set.insert(a - b);
        }
    }
    let lags: Vec<i64> = set.into_iter().collect();
    let mut u = 0i64;
    while lags.binary_search(&(u + 1)).is_ok() {
        u += 1;
    }
    DifferenceCoarray {
        lags,
        uniform_max: u,
    }
}

/// Bucket every ordered sensor pair of `config` by its position difference.
pub fn lag_map(config: &ArrayConfig) -> LagMap {
    let pos = config.positions();
    let mut buckets: BTreeMap<i64, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, &a) in pos.iter().enumerate() {
        for (j, &b) in pos.iter().enumerate() {
            buckets.entry(a - b).or_default().push((i, j));
        }
    }
    LagMap { buckets }
}

/// Complex values indexed by coarray lag.
#[derive(Debug, Clone)]
pub struct LagVector<F> {
    lags: Vec<i64>,
    values: Vec<Complex<F>>,
}

impl<F: Scalar> LagVector<F> {
    pub fn lags(&self) -> &[i64] {
        &self.lags
    }

    pub fn values(&self) -> &[Complex<F>] {
        &self.values
    }

    /// Value at `lag`, or `None` if the lag is a coarray hole.
    pub fn value(&self, lag: i64) -> Option<Complex<F>> {
        self.lags
            .binary_search(&lag)
            .ok()
            .map(|idx| self.values[idx])
    }
}

/// Average the entries of a physical covariance over each coarray lag.
///
/// `cov` must be `L x L` for an `L`-sensor array. The result holds one value
/// per distinct lag: the mean of all covariance entries whose sensor pair
/// maps to that lag. For a Hermitian input the output is conjugate-symmetric
/// in the lag (up to rounding from the per-bucket summation order).
pub fn coarray_average<F: Scalar>(
    cov: ArrayView2<Complex<F>>,
    geometry: &CoarrayGeometry,
) -> Result<LagVector<F>> {
    let l = geometry.config().len();
    if cov.shape() != [l, l] {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {:?}, array has {l} sensors",
            cov.shape()
        )));
    }
    let mut lags = Vec::with_capacity(geometry.coarray().lags().len());
    let mut values = Vec::with_capacity(lags.capacity());
    for (&lag, pairs) in &geometry.lag_map().buckets {
        let mut sum = Complex::new(F::zero(), F::zero());
        for &(i, j) in pairs {
            sum += cov[[i, j]];
        }
        let n = cast::<F>(pairs.len() as f64);
        lags.push(lag);
        values.push(sum / n);
    }
    Ok(LagVector { lags, values })
}
