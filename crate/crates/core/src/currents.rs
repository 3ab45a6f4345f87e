//! Step currents on the base `X = [0, 1]` and integration against `m`, the
//! Lebesgue measure scaled to total mass `theta`.
//!
//! All integrals over `X` are finite sums over pieces, so the only numerical
//! error anywhere in the crate comes from the r-quadrature and Monte Carlo.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::Group;

/// Breakpoints closer than this are merged during refinement.
const BREAK_EPS: f64 = 1e-14;

/// Piecewise-constant function on `[0, 1]`: `values[k]` on
/// `[breakpoints[k], breakpoints[k+1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Segment<T>>", into = "Vec<Segment<T>>")]
#[serde(bound(serialize = "T: Serialize + Clone", deserialize = "T: Deserialize<'de>"))]
pub struct Current<T> {
    breakpoints: Vec<f64>,
    values: Vec<T>,
}

/// JSON encoding of one piece: the value holds up to `until`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Segment<T> {
    pub until: f64,
    pub value: T,
}

impl<T> TryFrom<Vec<Segment<T>>> for Current<T> {
    type Error = Error;
    fn try_from(segs: Vec<Segment<T>>) -> Result<Self> {
        let mut breakpoints = vec![0.0];
        let mut values = Vec::with_capacity(segs.len());
        for s in segs {
            breakpoints.push(s.until);
            values.push(s.value);
        }
        Current::new(breakpoints, values)
    }
}

impl<T: Clone> From<Current<T>> for Vec<Segment<T>> {
    fn from(c: Current<T>) -> Self {
        c.breakpoints[1..]
            .iter()
            .zip(c.values)
            .map(|(&until, value)| Segment { until, value })
            .collect()
    }
}

impl<T> Current<T> {
    pub fn new(breakpoints: Vec<f64>, values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidCurrent("a current needs at least one piece".into()));
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidCurrent(format!(
                "{} breakpoints for {} pieces",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::InvalidCurrent("breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidCurrent("breakpoints must be strictly increasing".into()));
        }
        Ok(Current { breakpoints, values })
    }

    pub fn constant(value: T) -> Self {
        Current { breakpoints: vec![0.0, 1.0], values: vec![value] }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(lo, hi, value)` for every piece.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, &T)> {
        self.breakpoints.windows(2).zip(&self.values).map(|(w, v)| (w[0], w[1], v))
    }

    /// Value at `x` in `[0, 1]` (right-continuous; `x = 1` maps to the last piece).
    pub fn value_at(&self, x: f64) -> &T {
        let k = self.breakpoints[1..self.breakpoints.len() - 1].partition_point(|&b| b <= x);
        &self.values[k]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Current<U> {
        Current { breakpoints: self.breakpoints.clone(), values: self.values.iter().map(f).collect() }
    }

    pub fn try_map<U>(&self, f: impl FnMut(&T) -> Result<U>) -> Result<Current<U>> {
        Ok(Current {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(f).collect::<Result<_>>()?,
        })
    }

    /// Combine on the common refinement of both partitions.
    pub fn zip_with<U, V>(&self, other: &Current<U>, mut f: impl FnMut(&T, &U) -> V) -> Current<V> {
        let bps = refine(&self.breakpoints, &other.breakpoints);
        let values = bps
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                f(self.value_at(mid), other.value_at(mid))
            })
            .collect();
        Current { breakpoints: bps, values }
    }

    pub fn try_zip_with<U, V>(
        &self,
        other: &Current<U>,
        mut f: impl FnMut(&T, &U) -> Result<V>,
    ) -> Result<Current<V>> {
        let bps = refine(&self.breakpoints, &other.breakpoints);
        let values = bps
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                f(self.value_at(mid), other.value_at(mid))
            })
            .collect::<Result<_>>()?;
        Ok(Current { breakpoints: bps, values })
    }

    /// The same function on a finer partition containing `extra`.
    pub fn refined(&self, extra: &[f64]) -> Current<T>
    where
        T: Clone,
    {
        let bps = refine(&self.breakpoints, extra);
        let values = bps.windows(2).map(|w| self.value_at(0.5 * (w[0] + w[1])).clone()).collect();
        Current { breakpoints: bps, values }
    }

    /// `theta * sum_k f(value_k) * (t_{k+1} - t_k)`.
    pub fn integrate_with(&self, m: &BaseMeasure, mut f: impl FnMut(&T) -> Complex64) -> Complex64 {
        m.theta * self.pieces().map(|(lo, hi, v)| f(v) * (hi - lo)).sum::<Complex64>()
    }

    pub fn try_integrate_with(
        &self,
        m: &BaseMeasure,
        mut f: impl FnMut(&T) -> Result<Complex64>,
    ) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (lo, hi, v) in self.pieces() {
            acc += f(v)? * (hi - lo);
        }
        Ok(m.theta * acc)
    }
}

impl<T: Group> Current<T> {
    pub fn pointwise_mul(&self, other: &Current<T>) -> Current<T> {
        self.zip_with(other, |a, b| a.compose(b))
    }

    pub fn pointwise_inverse(&self) -> Current<T> {
        self.map(|g| g.inverse())
    }
}

impl Current<Complex64> {
    pub fn integrate(&self, m: &BaseMeasure) -> Complex64 {
        self.integrate_with(m, |v| *v)
    }
}

impl Current<f64> {
    pub fn integrate_real(&self, m: &BaseMeasure) -> f64 {
        self.integrate_with(m, |v| Complex64::new(*v, 0.0)).re
    }
}

/// Sorted union of two partitions of `[0, 1]`.
pub fn refine(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().filter(|t| (0.0..=1.0).contains(t)).collect();
    all.push(0.0);
    all.push(1.0);
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for t in all {
        match out.last() {
            Some(&last) if t - last <= BREAK_EPS => {}
            _ => out.push(t),
        }
    }
    // keep 1.0 exact as the last breakpoint
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

/// Measure `m` on `X` with total mass `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseMeasure {
    pub theta: f64,
}

impl Default for BaseMeasure {
    fn default() -> Self {
        BaseMeasure { theta: 1.0 }
    }
}

impl BaseMeasure {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
        }
        Ok(BaseMeasure { theta })
    }
}

/// Random step current with `pieces` pieces, interior breakpoints uniform.
pub fn random_current<T, R: rand::Rng>(
    pieces: usize,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> T,
) -> Current<T> {
    let mut cuts: Vec<f64> = (1..pieces).map(|_| rng.random_range(0.05..0.95)).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut bps = vec![0.0];
    for c in cuts {
        if c - bps.last().unwrap() > 1e-3 {
            bps.push(c);
        }
    }
    bps.push(1.0);
    let values = (0..bps.len() - 1).map(|_| draw(rng)).collect();
    Current { breakpoints: bps, values }
}
