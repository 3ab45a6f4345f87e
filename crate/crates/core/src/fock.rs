//! The Fock model: coherent vectors `EXP v` over the one-particle space
//! `H^X = int_X H dm`, with `<EXP v, EXP w> = exp <v, w>`, and the current group
//! acting by
//! `U(g) EXP v = exp(-|b(g)|^2 / 2 - <T(g) v, b(g)>) EXP(T(g) v + b(g))`.
//!
//! States are finite combinations of coherent vectors; nothing is truncated to
//! n-particle sectors.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::currents::{BaseMeasure, Current};
use crate::error::Result;
use crate::exec::Execution;
use crate::groups::ParabolicPair;
use crate::linalg;
use crate::specrep::{cocycle_b, fiber_inner, special_apply, ExponentialCombination, Sign};

/// Element of `H^X`: a step current of fiber vectors.
pub type OneParticleVector = Current<ExponentialCombination>;

pub fn zero_vector() -> OneParticleVector {
    Current::constant(ExponentialCombination::zero())
}

/// `sum_i c_i EXP v_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockState {
    pub terms: Vec<(Complex64, OneParticleVector)>,
}

impl FockState {
    pub fn coherent(v: OneParticleVector) -> Self {
        FockState { terms: vec![(Complex64::new(1.0, 0.0), v)] }
    }

    pub fn vacuum() -> Self {
        Self::coherent(zero_vector())
    }
}

/// `<v, w> = int_X <v(x), w(x)> dm`.
pub fn one_particle_inner(v: &OneParticleVector, w: &OneParticleVector, sign: Sign, m: &BaseMeasure) -> Result<Complex64> {
    let pointwise = v.try_zip_with(w, |a, b| {
        if a.terms.is_empty() || b.terms.is_empty() {
            Ok(Complex64::new(0.0, 0.0))
        } else {
            fiber_inner(a, b, sign)
        }
    })?;
    Ok(pointwise.integrate(m))
}

/// `<EXP v, EXP w> = exp <v, w>`.
pub fn exp_inner(v: &OneParticleVector, w: &OneParticleVector, sign: Sign, m: &BaseMeasure) -> Result<Complex64> {
    Ok(one_particle_inner(v, w, sign, m)?.exp())
}

pub fn state_inner(s: &FockState, t: &FockState, sign: Sign, m: &BaseMeasure) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (c, v) in &s.terms {
        for (d, w) in &t.terms {
            acc += c * d.conj() * exp_inner(v, w, sign, m)?;
        }
    }
    Ok(acc)
}

/// `b^X(g)(x) = b(g(x))`.
pub fn cocycle_current(g: &Current<ParabolicPair>, sign: Sign) -> OneParticleVector {
    g.map(|h| cocycle_b(h, sign))
}

/// `(T^X(g) v)(x) = T(g(x)) v(x)`.
pub fn transport(g: &Current<ParabolicPair>, v: &OneParticleVector, sign: Sign) -> OneParticleVector {
    g.zip_with(v, |h, f| special_apply(h, f, sign))
}

/// Image of one coherent vector: `U(g) EXP v = scalar * EXP label`.
pub fn apply_coherent(
    g: &Current<ParabolicPair>,
    v: &OneParticleVector,
    sign: Sign,
    m: &BaseMeasure,
) -> Result<(Complex64, OneParticleVector)> {
    let b = cocycle_current(g, sign);
    let tv = transport(g, v, sign);
    let bb = one_particle_inner(&b, &b, sign, m)?;
    let tvb = one_particle_inner(&tv, &b, sign, m)?;
    let label = tv.zip_with(&b, |x, y| x.add(y));
    Ok(((-0.5 * bb - tvb).exp(), label))
}

pub fn fock_apply(g: &Current<ParabolicPair>, s: &FockState, sign: Sign, m: &BaseMeasure) -> Result<FockState> {
    let terms = s
        .terms
        .iter()
        .map(|(c, v)| {
            let (k, w) = apply_coherent(g, v, sign, m)?;
            Ok((c * k, w))
        })
        .collect::<Result<_>>()?;
    Ok(FockState { terms })
}

/// `a(g1, g2) = <T(g1) b(g2), b(g1)>`.
pub fn two_cocycle_a(g1: &ParabolicPair, g2: &ParabolicPair, sign: Sign) -> Result<Complex64> {
    let (b1, b2) = (cocycle_b(g1, sign), cocycle_b(g2, sign));
    if b1.terms.is_empty() || b2.terms.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    fiber_inner(&special_apply(g1, &b2, sign), &b1, sign)
}

/// `int_X a(g1(x), g2(x)) dm`.
pub fn two_cocycle_integral(
    g1: &Current<ParabolicPair>,
    g2: &Current<ParabolicPair>,
    sign: Sign,
    m: &BaseMeasure,
) -> Result<Complex64> {
    Ok(g1.try_zip_with(g2, |a, b| two_cocycle_a(a, b, sign))?.integrate(m))
}

/// The phase `U(g1) U(g2) = lambda U(g1 g2)` predicted from the 2-cocycle:
/// `lambda = exp(-i Im int a dm)`.
pub fn predicted_multiplier(
    g1: &Current<ParabolicPair>,
    g2: &Current<ParabolicPair>,
    sign: Sign,
    m: &BaseMeasure,
) -> Result<Complex64> {
    Ok(Complex64::new(0.0, -two_cocycle_integral(g1, g2, sign, m)?.im).exp())
}

/// `Im a(g1, g2) - (beta(g1) + beta(g2) - beta(g1 g2))` with
/// `beta(g) = Im <b(g), f0>`: the imaginary part of `a` is a coboundary on P.
pub fn two_cocycle_coboundary_residual(g1: &ParabolicPair, g2: &ParabolicPair, sign: Sign) -> Result<f64> {
    let f0 = ExponentialCombination::f0();
    let beta = |g: &ParabolicPair| -> Result<f64> {
        let b = cocycle_b(g, sign);
        if b.terms.is_empty() {
            return Ok(0.0);
        }
        Ok(fiber_inner(&b, &f0, sign)?.im)
    };
    let a = two_cocycle_a(g1, g2, sign)?.im;
    Ok((a - (beta(g1)? + beta(g2)? - beta(&g1.mul(g2))?)).abs())
}

/// Measured projective multiplier over a probe panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveReport {
    /// Mean of the per-probe ratios.
    pub phase: Complex64,
    /// Largest deviation of a single ratio from the mean.
    pub spread: f64,
    /// Probe pairs skipped because the reference pairing nearly vanished.
    pub skipped: usize,
}

/// Reference elements `h_i` for the default probe panel.
pub fn default_probe_elements() -> Vec<ParabolicPair> {
    vec![
        ParabolicPair { epsilon: 2.0, gamma: 0.5 },
        ParabolicPair { epsilon: 0.5, gamma: -1.0 },
        ParabolicPair { epsilon: -1.5, gamma: 0.3 },
    ]
}

/// `EXP 0, EXP b^X(h_1), EXP b^X(h_2), ...` with constant `h_i`.
pub fn default_probes(sign: Sign) -> Vec<FockState> {
    let mut out = vec![FockState::vacuum()];
    out.extend(
        default_probe_elements()
            .into_iter()
            .map(|h| FockState::coherent(cocycle_current(&Current::constant(h), sign))),
    );
    out
}

/// Ratios `<U(g1) U(g2) s, t> / <U(g1 g2) s, t>` over all probe pairs.
pub fn projective_check(
    g1: &Current<ParabolicPair>,
    g2: &Current<ParabolicPair>,
    probes: &[FockState],
    sign: Sign,
    m: &BaseMeasure,
    exec: Execution,
) -> Result<ProjectiveReport> {
    if probes.len() < 3 {
        return Err(crate::Error::InvalidParameter("projective check needs at least three probes".into()));
    }
    let g12 = g1.pointwise_mul(g2);
    let n = probes.len();
    let two_step: Vec<FockState> = probes
        .iter()
        .map(|s| fock_apply(g1, &fock_apply(g2, s, sign, m)?, sign, m))
        .collect::<Result<_>>()?;
    let one_step: Vec<FockState> = probes.iter().map(|s| fock_apply(&g12, s, sign, m)).collect::<Result<_>>()?;
    let pairs = exec.map(n * n, |idx| -> Result<(Complex64, Complex64)> {
        let (i, j) = (idx / n, idx % n);
        Ok((state_inner(&two_step[i], &probes[j], sign, m)?, state_inner(&one_step[i], &probes[j], sign, m)?))
    });
    let mut ratios = Vec::with_capacity(n * n);
    let mut skipped = 0;
    for p in pairs {
        let (num, den) = p?;
        if den.norm() < 1e-12 {
            skipped += 1;
        } else {
            ratios.push(num / den);
        }
    }
    let phase = ratios.iter().sum::<Complex64>() / ratios.len().max(1) as f64;
    let spread = ratios.iter().map(|r| (r - phase).norm()).fold(0.0, f64::max);
    Ok(ProjectiveReport { phase, spread, skipped })
}

/// Gram matrix `exp <v_i, v_j>` of coherent labels.
pub fn coherent_gram(labels: &[OneParticleVector], sign: Sign, m: &BaseMeasure, exec: Execution) -> Result<DMatrix<Complex64>> {
    linalg::gram(labels.len(), exec, |i, j| exp_inner(&labels[i], &labels[j], sign, m))
}

/// Largest change of a pairwise inner product of coherent vectors under `U(g)`.
pub fn unitarity_residual(
    g: &Current<ParabolicPair>,
    labels: &[OneParticleVector],
    sign: Sign,
    m: &BaseMeasure,
    exec: Execution,
) -> Result<f64> {
    let before = coherent_gram(labels, sign, m, exec)?;
    let moved: Vec<(Complex64, OneParticleVector)> =
        labels.iter().map(|v| apply_coherent(g, v, sign, m)).collect::<Result<_>>()?;
    let n = labels.len();
    let after = linalg::gram(n, exec, |i, j| {
        Ok::<_, crate::Error>(moved[i].0 * moved[j].0.conj() * exp_inner(&moved[i].1, &moved[j].1, sign, m)?)
    })?;
    Ok((after - before).iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// `<U(g) EXP 0, EXP 0> = exp(-|b^X(g)|^2 / 2)`.
pub fn fock_spherical(g: &Current<ParabolicPair>, sign: Sign, m: &BaseMeasure) -> Result<Complex64> {
    let b = cocycle_current(g, sign);
    Ok((-0.5 * one_particle_inner(&b, &b, sign, m)?).exp())
}
