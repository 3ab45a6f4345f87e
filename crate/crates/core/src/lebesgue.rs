//! The infinite-dimensional Lebesgue measure `L` on finite positive atomic
//! measures `xi = sum_k r_k delta_{x_k}` over `X = [0, 1]`.
//!
//! `L` is sigma-finite and cannot be sampled, but it has density `e^{sum r_k}`
//! with respect to the gamma random measure with jump intensity
//! `theta r^{-1} e^{-r} dr dm(x)`, which can. Every `L`-integral is therefore an
//! expectation over gamma configurations weighted by `e^{sum r_k}`.
//!
//! Closed forms rest on
//! `int exp(-sum_k phi(r_k, x_k)) dL = exp(theta int_X int_0^inf (e^{-phi} - e^{-r}) dr/r dm)`.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::currents::{BaseMeasure, Current};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::quadrature::{exponent_difference, haar_integral, quadratic_kernel};
use crate::rng;
use crate::special::{exp_integral_e1, exp_integral_e1_inverse};

/// One jump of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub r: f64,
    pub x: f64,
}

/// A finite configuration, atoms sorted by `r` descending.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Configuration {
    pub atoms: Vec<Atom>,
}

impl Configuration {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.r).sum()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub theta: f64,
    pub eps_trunc: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { theta: 1.0, eps_trunc: 1e-6, n_samples: 100_000, seed: 0 }
    }
}

impl SamplerConfig {
    pub fn new(theta: f64, eps_trunc: f64, n_samples: usize, seed: u64) -> Result<Self> {
        let cfg = SamplerConfig { theta, eps_trunc, n_samples, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {}", self.theta)));
        }
        if !(self.eps_trunc > 0.0 && self.eps_trunc < 1e-3) {
            return Err(Error::InvalidParameter(format!("eps_trunc must lie in (0, 1e-3), got {}", self.eps_trunc)));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
        }
        Ok(())
    }

    pub fn measure(&self) -> BaseMeasure {
        BaseMeasure { theta: self.theta }
    }

    /// Upper bound `theta * eps_trunc` on the expected mass discarded per sample.
    pub fn truncation_mass_bound(&self) -> f64 {
        self.theta * self.eps_trunc
    }

    /// Exact expected discarded mass `theta (1 - e^{-eps})`.
    pub fn truncation_mass_expected(&self) -> f64 {
        -self.theta * (-self.eps_trunc).exp_m1()
    }
}

/// Gamma configuration number `index` of the stream `cfg.seed`.
///
/// Jumps come from the inverse tail series: unit-rate arrivals
/// `G_1 < G_2 < ...` map to `r_i = E1^{-1}(G_i / theta)`, stopping below
/// `eps_trunc`. Positions are uniform.
pub fn sample_gamma_config(cfg: &SamplerConfig, index: u64) -> Configuration {
    let mut rng = rng::stream(cfg.seed, index);
    let stop = exp_integral_e1(cfg.eps_trunc);
    let mut arrival = 0.0;
    let mut atoms = Vec::new();
    loop {
        arrival -= rng::open_unit(&mut rng).ln();
        let level = arrival / cfg.theta;
        if level > stop {
            break;
        }
        let r = exp_integral_e1_inverse(level).expect("level is positive and finite");
        if r <= cfg.eps_trunc {
            break;
        }
        let x = rng::open_unit(&mut rng);
        atoms.push(Atom { r, x: 1.0 - x });
    }
    Configuration { atoms }
}

/// Mean and standard error of a real Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

impl Estimate {
    fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Estimate { value: mean, stderr: (var / n as f64).sqrt(), n, seed }
    }

    /// `|value - target|` in units of `stderr`; zero when both vanish.
    pub fn deviation(&self, target: f64) -> f64 {
        standardized(self.value - target, self.stderr)
    }
}

/// Complex Monte Carlo estimate, with separate errors for both parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEstimate {
    pub value: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub n: usize,
    pub seed: u64,
}

impl ComplexEstimate {
    fn from_samples(samples: &[Complex64], seed: u64) -> Self {
        let re: Vec<f64> = samples.iter().map(|v| v.re).collect();
        let im: Vec<f64> = samples.iter().map(|v| v.im).collect();
        let (re, im) = (Estimate::from_samples(&re, seed), Estimate::from_samples(&im, seed));
        ComplexEstimate {
            value: Complex64::new(re.value, im.value),
            stderr_re: re.stderr,
            stderr_im: im.stderr,
            n: samples.len(),
            seed,
        }
    }

    /// Larger of the standardized deviations of the two parts.
    pub fn deviation(&self, target: Complex64) -> f64 {
        standardized(self.value.re - target.re, self.stderr_re).max(standardized(self.value.im - target.im, self.stderr_im))
    }

    pub fn stderr(&self) -> f64 {
        self.stderr_re.hypot(self.stderr_im)
    }
}

fn standardized(diff: f64, stderr: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if stderr > 0.0 {
        diff.abs() / stderr
    } else {
        f64::INFINITY
    }
}

/// `int exp(sum_k log_factor(r_k, x_k)) dL` by importance sampling:
/// the per-sample value is `exp(sum_k (r_k + log_factor(r_k, x_k)))`.
pub fn mc_functional(
    cfg: &SamplerConfig,
    exec: Execution,
    log_factor: impl Fn(f64, f64) -> Complex64 + Sync + Send,
) -> Result<ComplexEstimate> {
    cfg.validate()?;
    let samples = exec.map(cfg.n_samples, |i| {
        let xi = sample_gamma_config(cfg, i as u64);
        xi.atoms.iter().map(|a| a.r + log_factor(a.r, a.x)).sum::<Complex64>().exp()
    });
    Ok(ComplexEstimate::from_samples(&samples, cfg.seed))
}

fn check_positive(f: &Current<f64>) -> Result<()> {
    match f.values().iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        Some(v) => Err(Error::InvalidParameter(format!("Laplace argument must be positive, got {v}"))),
        None => Ok(()),
    }
}

/// `int exp(-<f, xi>) dL(xi) = exp(-theta int log f dm)`.
pub fn laplace_closed(f: &Current<f64>, m: &BaseMeasure) -> Result<f64> {
    check_positive(f)?;
    Ok((-f.integrate_with(m, |v| Complex64::new(v.ln(), 0.0)).re).exp())
}

/// Monte Carlo estimate of the Laplace transform: mean of
/// `exp(sum_k r_k (1 - f(x_k)))` over gamma configurations. Unbiased for
/// `f > 0`; the variance is finite for `f > 1/2`.
pub fn laplace_mc(f: &Current<f64>, cfg: &SamplerConfig, exec: Execution) -> Result<Estimate> {
    check_positive(f)?;
    laplace_mc_fn(|x| *f.value_at(x), cfg, exec)
}

/// [`laplace_mc`] for an arbitrary positive function on `X`.
pub fn laplace_mc_fn(f: impl Fn(f64) -> f64 + Sync + Send, cfg: &SamplerConfig, exec: Execution) -> Result<Estimate> {
    cfg.validate()?;
    let samples = exec.map(cfg.n_samples, |i| {
        let xi = sample_gamma_config(cfg, i as u64);
        let mut exponent = 0.0;
        for a in &xi.atoms {
            let v = f(a.x);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("Laplace argument must be positive, got {v} at x = {}", a.x)));
            }
            exponent += a.r * (1.0 - v);
        }
        Ok(exponent.exp())
    });
    let samples = samples.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_samples(&samples, cfg.seed))
}

/// `exp(theta int_X int_0^inf (factor(r, x) - e^{-r}) dr/r dm)`, with the
/// r-integral taken on the real axis per piece of `profile`.
///
/// `factor(r, v)` is the per-atom multiplier `e^{-phi(r, x)}` on a piece with
/// value `v`; `factor(r) - e^{-r}` must vanish at 0 and decay at infinity.
pub fn laplace_of_factor<T>(
    profile: &Current<T>,
    m: &BaseMeasure,
    tol: f64,
    factor: impl Fn(f64, &T) -> Complex64,
) -> Result<Complex64> {
    let exponent = profile.try_integrate_with(m, |v| haar_integral(|r| factor(r, v) - (-r).exp(), tol))?;
    Ok(exponent.exp())
}

/// `int exp(-sum_k phi(r_k, x_k)) dL` for a complex `phi` with nonnegative
/// real part, piecewise in `x` through `profile`.
///
/// The integrand is formed as `e^{-r} expm1(r - phi)` so that the cancellation
/// near `r = 0` costs no precision. Works on the real axis, so strongly
/// oscillating `phi` is better served by [`laplace_quadratic`].
pub fn generalized_laplace_closed<T>(
    profile: &Current<T>,
    m: &BaseMeasure,
    tol: f64,
    phi: impl Fn(f64, &T) -> Complex64,
) -> Result<Complex64> {
    let exponent = profile.try_integrate_with(m, |v| {
        haar_integral(|r| exponent_difference(phi(r, v), Complex64::new(r, 0.0)), tol)
    })?;
    Ok(exponent.exp())
}

/// [`generalized_laplace_closed`] for `phi(r, x) = alpha(x) r + w(x) r^2`,
/// where the kernel is evaluated along a rotated ray.
pub fn laplace_quadratic(profile: &Current<(Complex64, Complex64)>, m: &BaseMeasure, tol: f64) -> Result<Complex64> {
    Ok(laplace_quadratic_exponent(profile, m, tol)?.exp())
}

/// `theta int J(alpha(x), w(x)) dm`, the logarithm of [`laplace_quadratic`].
pub fn laplace_quadratic_exponent(
    profile: &Current<(Complex64, Complex64)>,
    m: &BaseMeasure,
    tol: f64,
) -> Result<Complex64> {
    profile.try_integrate_with(m, |(alpha, w)| quadratic_kernel(*alpha, *w, tol))
}

/// Checks the pushforward identity of `L` under the multiplicator
/// `M_a: r_k -> a(x_k) r_k` at the level of Laplace transforms:
/// `int exp(-<f, M_a xi>) dL = exp(-theta int log a dm) * int exp(-<f, xi>) dL`.
///
/// The left side is estimated by Monte Carlo, the right side is closed form;
/// returns the standardized deviation.
pub fn multiplicator_invariance_check(
    a: &Current<f64>,
    f: &Current<f64>,
    cfg: &SamplerConfig,
    exec: Execution,
) -> Result<f64> {
    check_positive(a)?;
    let af = a.zip_with(f, |x, y| x * y);
    let est = laplace_mc(&af, cfg, exec)?;
    let m = cfg.measure();
    let target = laplace_closed(a, &m)? * laplace_closed(f, &m)?;
    Ok(est.deviation(target))
}

/// Moments of the total mass `sum_k r_k`, which is `Gamma(theta, 1)` up to the
/// truncated small jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassStatistics {
    pub mean: Estimate,
    /// Sample variance with its standard error `sqrt((mu4 - sigma^4) / n)`,
    /// using the gamma fourth central moment `3 theta^2 + 6 theta`.
    pub variance: Estimate,
}

pub fn total_mass_statistics(cfg: &SamplerConfig, exec: Execution) -> Result<MassStatistics> {
    cfg.validate()?;
    let masses = exec.map(cfg.n_samples, |i| sample_gamma_config(cfg, i as u64).total_mass());
    let mean = Estimate::from_samples(&masses, cfg.seed);
    let n = masses.len() as f64;
    let var = masses.iter().map(|v| (v - mean.value).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let t = cfg.theta;
    let mu4 = 3.0 * t * t + 6.0 * t;
    let variance = Estimate { value: var, stderr: ((mu4 - t * t) / n).sqrt(), n: masses.len(), seed: cfg.seed };
    Ok(MassStatistics { mean, variance })
}

/// Per-sample count of jumps `>= threshold` against its Poisson mean
/// `theta E1(threshold)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCount {
    pub threshold: f64,
    pub count: Estimate,
    pub expected: f64,
}

pub fn jump_tail_counts(cfg: &SamplerConfig, thresholds: &[f64], exec: Execution) -> Result<Vec<TailCount>> {
    cfg.validate()?;
    let per_sample = exec.map(cfg.n_samples, |i| {
        let xi = sample_gamma_config(cfg, i as u64);
        thresholds.iter().map(|t| xi.atoms.iter().take_while(|a| a.r >= *t).count() as f64).collect::<Vec<_>>()
    });
    Ok(thresholds
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let col: Vec<f64> = per_sample.iter().map(|row| row[j]).collect();
            TailCount { threshold: t, count: Estimate::from_samples(&col, cfg.seed), expected: cfg.theta * exp_integral_e1(t) }
        })
        .collect())
}

/// Writes samples `0..count` as CSV rows `sample_id,r,x`.
pub fn write_configurations_csv<W: Write>(cfg: &SamplerConfig, count: usize, exec: Execution, out: W) -> Result<()> {
    cfg.validate()?;
    let configs = exec.map(count, |i| sample_gamma_config(cfg, i as u64));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_id", "r", "x"])?;
    for (i, xi) in configs.iter().enumerate() {
        for a in &xi.atoms {
            w.write_record([i.to_string(), format!("{:.17e}", a.r), format!("{:.17e}", a.x)])?;
        }
    }
    w.flush()?;
    Ok(())
}
