//! The integral model: functionals on finite atomic configurations
//! `xi = sum_k r_k delta_{x_k}`, paired by integrating against `L`.
//!
//! Coherent functionals are `F_p(xi) = prod_k exp(-q(p(x_k)) r_k^2)` for a step
//! current `p` of points of a hyperbolic space (`q = -i z` on the half-plane,
//! `q = -a` on the ball), and the vacuum `Omega(xi) = prod_k e^{-r_k/2}`. Every
//! pairing has per-atom factor `exp(-alpha r - w r^2)`, so
//! `<F, G> = exp(log scalar + theta int J(alpha, w) dm)` with
//! `J(alpha, w) = int (e^{-alpha r - w r^2} - e^{-r}) dr/r`. For two coherent
//! functionals `w = exp c(p1, p2)`.
//!
//! Variant `-` is the complex conjugate of `+`; variant `0` takes the real
//! part of each per-atom factor, i.e. the modulus of the `+` pairing.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::currents::{BaseMeasure, Current};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock;
use crate::geometry::{cocycle_u, CocycleVariant, HalfPlanePoint, HyperbolicSpace};
use crate::groups::{Group, ParabolicPair, SL2Element};
use crate::lebesgue::{self, laplace_quadratic_exponent, ComplexEstimate, SamplerConfig};
use crate::linalg;
use crate::quadrature::{quadratic_kernel, DEFAULT_TOL};
use crate::special::EULER_GAMMA;
use crate::specrep::{spherical_psi, Sign};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `F_p^{variant}` for a step current `p` of points.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentLabel<S> {
    pub variant: Sign,
    pub points: Current<S>,
}

impl<S> CoherentLabel<S> {
    pub fn new(variant: Sign, points: Current<S>) -> Self {
        CoherentLabel { variant, points }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntLabel<S> {
    Coherent(CoherentLabel<S>),
    /// `U(h) Omega` for a parabolic current `h` (`None` is `Omega` itself).
    Omega { variant: Sign, moved: Option<Current<ParabolicPair>> },
}

impl<S> IntLabel<S> {
    pub fn variant(&self) -> Sign {
        match self {
            IntLabel::Coherent(c) => c.variant,
            IntLabel::Omega { variant, .. } => *variant,
        }
    }

    pub fn omega(variant: Sign) -> Self {
        IntLabel::Omega { variant, moved: None }
    }
}

/// `sum_i c_i label_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntState<S> {
    pub terms: Vec<(Complex64, IntLabel<S>)>,
}

impl<S> IntState<S> {
    pub fn single(label: IntLabel<S>) -> Self {
        IntState { terms: vec![(Complex64::new(1.0, 0.0), label)] }
    }
}

fn omega_current(moved: &Option<Current<ParabolicPair>>) -> Current<ParabolicPair> {
    moved.clone().unwrap_or_else(|| Current::constant(ParabolicPair::IDENTITY))
}

/// `1/2 int log|epsilon| dm`, the log of the normalizing scalar of `U(h) Omega`.
fn omega_log_scalar(h: &Current<ParabolicPair>, m: &BaseMeasure) -> f64 {
    0.5 * h.integrate_with(m, |g| Complex64::new(g.epsilon.abs().ln(), 0.0)).re
}

/// Per-atom rate pair of `U(h) Omega` in the `+` convention:
/// `exp(-|e| r / 2 + i e gamma r^2)`.
fn omega_rates(h: &ParabolicPair) -> (f64, f64) {
    (0.5 * h.epsilon.abs(), h.epsilon * h.gamma)
}

/// Logarithm of the `+`-convention pairing `<l1, l2>`.
fn plus_log_pairing<S: HyperbolicSpace>(l1: &IntLabel<S>, l2: &IntLabel<S>, m: &BaseMeasure) -> Result<Complex64> {
    use IntLabel::*;
    let c = |re: f64| Complex64::new(re, 0.0);
    match (l1, l2) {
        (Coherent(a), Coherent(b)) => {
            let profile = a.points.try_zip_with(&b.points, |p, q| Ok((c(0.0), S::kernel_arg(p, q)?)))?;
            laplace_quadratic_exponent(&profile, m, DEFAULT_TOL)
        }
        (Coherent(a), Omega { moved, .. }) => {
            if moved.is_some() && !S::MOVABLE_VACUUM {
                return Err(Error::Unsupported("the vacuum of this space is not moved by parabolic elements".into()));
            }
            let h = omega_current(moved);
            let profile = a.points.zip_with(&h, |p, g| {
                let (alpha, phase) = omega_rates(g);
                (c(alpha), p.vacuum_rate() + I * phase)
            });
            Ok(omega_log_scalar(&h, m) + laplace_quadratic_exponent(&profile, m, DEFAULT_TOL)?)
        }
        (Omega { .. }, Coherent(_)) => Ok(plus_log_pairing(l2, l1, m)?.conj()),
        (Omega { moved: m1, .. }, Omega { moved: m2, .. }) => {
            if (m1.is_some() || m2.is_some()) && !S::MOVABLE_VACUUM {
                return Err(Error::Unsupported("the vacuum of this space is not moved by parabolic elements".into()));
            }
            let (h1, h2) = (omega_current(m1), omega_current(m2));
            let profile = h1.zip_with(&h2, |g1, g2| {
                let (a1, p1) = omega_rates(g1);
                let (a2, p2) = omega_rates(g2);
                (c(a1 + a2), -I * (p1 - p2))
            });
            Ok(omega_log_scalar(&h1, m) + omega_log_scalar(&h2, m) + laplace_quadratic_exponent(&profile, m, DEFAULT_TOL)?)
        }
    }
}

fn finish(log_plus: Complex64, variant: Sign) -> Complex64 {
    match variant {
        Sign::Plus => log_plus.exp(),
        Sign::Minus => log_plus.conj().exp(),
        Sign::Zero => Complex64::new(log_plus.re.exp(), 0.0),
    }
}

/// `<l1, l2> = int l1 conj(l2) dL`.
pub fn gram_kernel<S: HyperbolicSpace>(l1: &IntLabel<S>, l2: &IntLabel<S>, m: &BaseMeasure) -> Result<Complex64> {
    if l1.variant() != l2.variant() {
        return Err(Error::Unsupported(format!(
            "pairing between variants {:?} and {:?} is not part of the model",
            l1.variant(),
            l2.variant()
        )));
    }
    Ok(finish(plus_log_pairing(l1, l2, m)?, l1.variant()))
}

pub fn gram_matrix<S: HyperbolicSpace>(labels: &[IntLabel<S>], m: &BaseMeasure, exec: Execution) -> Result<DMatrix<Complex64>> {
    linalg::gram(labels.len(), exec, |i, j| gram_kernel(&labels[i], &labels[j], m))
}

pub fn state_inner<S: HyperbolicSpace>(s: &IntState<S>, t: &IntState<S>, m: &BaseMeasure) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, l1) in &s.terms {
        for (b, l2) in &t.terms {
            acc += a * b.conj() * gram_kernel(l1, l2, m)?;
        }
    }
    Ok(acc)
}

/// `kappa(p1, p2) = J(0, exp c(p1, p2))` by quadrature.
pub fn kappa_quadrature<S: HyperbolicSpace>(p1: &S, p2: &S) -> Result<Complex64> {
    quadratic_kernel(Complex64::new(0.0, 0.0), S::kernel_arg(p1, p2)?, DEFAULT_TOL)
}

/// `kappa = -c / 2 + gamma_E / 2`.
pub fn kappa_closed<S: HyperbolicSpace>(p1: &S, p2: &S) -> Result<Complex64> {
    Ok(-0.5 * S::kernel_c(p1, p2)? + 0.5 * EULER_GAMMA)
}

/// Image of a coherent label: `U(g) F_p = scalar * F_{g p}`.
pub fn apply_label<S: HyperbolicSpace>(
    g: &Current<S::Group>,
    l: &CoherentLabel<S>,
    m: &BaseMeasure,
) -> Result<(Complex64, CoherentLabel<S>)> {
    let points = g.try_zip_with(&l.points, |h, p| S::act(h, p))?;
    let u = g.try_zip_with(&l.points, |h, p| cocycle_u(h, p, CocycleVariant::Plus))?.integrate(m);
    let half = match l.variant {
        Sign::Plus => 0.5 * u,
        Sign::Minus => 0.5 * u.conj(),
        Sign::Zero => Complex64::new(0.5 * u.re, 0.0),
    };
    Ok((half.exp(), CoherentLabel { variant: l.variant, points }))
}

/// Extended operator `U(g)` on a state. The vacuum is in the domain only for
/// parabolic `g`.
pub fn extend_apply<S: HyperbolicSpace>(g: &Current<S::Group>, s: &IntState<S>, m: &BaseMeasure) -> Result<IntState<S>> {
    let mut terms = Vec::with_capacity(s.terms.len());
    for (coef, label) in &s.terms {
        match label {
            IntLabel::Coherent(l) => {
                let (k, moved) = apply_label(g, l, m)?;
                terms.push((coef * k, IntLabel::Coherent(moved)));
            }
            IntLabel::Omega { variant, moved } => {
                if !S::MOVABLE_VACUUM {
                    return Err(Error::Unsupported("the vacuum is outside the domain of the extension".into()));
                }
                let h = g.try_map(|x| {
                    S::as_parabolic(x).ok_or_else(|| {
                        Error::Unsupported(format!("the vacuum is only moved by parabolic elements, got {x:?}"))
                    })
                })?;
                let moved = h.pointwise_mul(&omega_current(moved));
                terms.push((*coef, IntLabel::Omega { variant: *variant, moved: Some(moved) }));
            }
        }
    }
    Ok(IntState { terms })
}

/// Frobenius norm of `Gram(U(g) labels) - Gram(labels)`.
pub fn unitarity_check<S: HyperbolicSpace>(
    g: &Current<S::Group>,
    labels: &[IntLabel<S>],
    m: &BaseMeasure,
    exec: Execution,
) -> Result<f64> {
    let before = gram_matrix(labels, m, exec)?;
    let moved: Vec<IntState<S>> =
        labels.iter().map(|l| extend_apply(g, &IntState::single(l.clone()), m)).collect::<Result<_>>()?;
    let n = labels.len();
    let after = linalg::gram(n, exec, |i, j| state_inner(&moved[i], &moved[j], m))?;
    Ok(linalg::frobenius(&(after - before)))
}

/// `U(g1) U(g2) = lambda U(g1 g2)` measured on a label panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntProjectiveReport {
    pub lambda: Complex64,
    pub spread: f64,
    pub skipped: usize,
    /// Condition number of the panel Gram matrix.
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// Panels with a larger Gram condition number are flagged.
pub const CONDITION_WARNING: f64 = 1e12;

pub fn int_projective_check<S: HyperbolicSpace>(
    g1: &Current<S::Group>,
    g2: &Current<S::Group>,
    labels: &[IntLabel<S>],
    m: &BaseMeasure,
    exec: Execution,
) -> Result<IntProjectiveReport> {
    if labels.len() < 2 {
        return Err(Error::InvalidParameter("projective check needs at least two labels".into()));
    }
    let g12 = g1.zip_with(g2, |a, b| a.compose(b));
    let n = labels.len();
    let mut two_step = Vec::with_capacity(n);
    let mut one_step = Vec::with_capacity(n);
    for l in labels {
        let s = IntState::single(l.clone());
        two_step.push(extend_apply(g1, &extend_apply(g2, &s, m)?, m)?);
        one_step.push(extend_apply(&g12, &s, m)?);
    }
    let probes: Vec<IntState<S>> = labels.iter().map(|l| IntState::single(l.clone())).collect();
    let pairs = exec.map(n * n, |idx| -> Result<(Complex64, Complex64)> {
        let (i, j) = (idx / n, idx % n);
        Ok((state_inner(&two_step[i], &probes[j], m)?, state_inner(&one_step[i], &probes[j], m)?))
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
    let lambda = ratios.iter().sum::<Complex64>() / ratios.len().max(1) as f64;
    let spread = ratios.iter().map(|r| (r - lambda).norm()).fold(0.0, f64::max);
    let condition = linalg::condition_number(&gram_matrix(labels, m, exec)?);
    Ok(IntProjectiveReport { lambda, spread, skipped, condition, ill_conditioned: condition > CONDITION_WARNING })
}

/// `exp(1/2 int [u(g1, g2 p) + u(g2, p) - u(g1 g2, p)] dm)` at one point
/// current `p`, adjusted to the variant.
pub fn predicted_int_multiplier<S: HyperbolicSpace>(
    g1: &Current<S::Group>,
    g2: &Current<S::Group>,
    l: &CoherentLabel<S>,
    m: &BaseMeasure,
) -> Result<Complex64> {
    let (k2, l2) = apply_label(g2, l, m)?;
    let (k1, _) = apply_label(g1, &l2, m)?;
    let (k12, _) = apply_label(&g1.zip_with(g2, |a, b| a.compose(b)), l, m)?;
    Ok(k1 * k2 / k12)
}

/// `<U(g) Omega, Omega>` for a parabolic current.
pub fn omega_pairings(g: &Current<ParabolicPair>, sign: Sign, m: &BaseMeasure) -> Result<Complex64> {
    let moved: IntLabel<HalfPlanePoint> = IntLabel::Omega { variant: sign, moved: Some(g.clone()) };
    gram_kernel(&moved, &IntLabel::omega(sign), m)
}

/// Monte Carlo estimate of [`omega_pairings`] by sampling `L`.
pub fn omega_pairings_mc(g: &Current<ParabolicPair>, sign: Sign, cfg: &SamplerConfig, exec: Execution) -> Result<ComplexEstimate> {
    let scalar = omega_log_scalar(g, &cfg.measure()).exp();
    let mut est = lebesgue::mc_functional(cfg, exec, |r, x| {
        let h = g.value_at(x);
        let (alpha, phase) = omega_rates(h);
        let plus = Complex64::new(-(alpha + 0.5) * r, phase * r * r);
        match sign {
            Sign::Plus => plus,
            Sign::Minus => plus.conj(),
            Sign::Zero => Complex64::new(plus.exp().re, 0.0).ln(),
        }
    })?;
    est.value *= scalar;
    est.stderr_re *= scalar;
    est.stderr_im *= scalar;
    Ok(est)
}

/// Compares the evolution of zero-variant Gram entries with the real part of
/// the per-atom factors of the `+` evolution, for half-plane labels.
///
/// Route one moves the labels with the Moebius action and multipliers and
/// pairs them with rotated-contour kernels. Route two applies the special
/// representation to each atom, `e^{i r^2 z} -> e^{i r^2 (e^2 z + e gamma)}`,
/// takes the real part of the per-atom product, and integrates on the real
/// axis; the dilation multipliers contribute `exp(int log|e| dm)`.
pub fn restriction_consistency(
    g: &Current<ParabolicPair>,
    points: &[Current<HalfPlanePoint>],
    m: &BaseMeasure,
    exec: Execution,
) -> Result<f64> {
    let embedded: Current<SL2Element> = g.map(|h| h.embed());
    let labels: Vec<IntLabel<HalfPlanePoint>> =
        points.iter().map(|p| IntLabel::Coherent(CoherentLabel::new(Sign::Zero, p.clone()))).collect();
    let moved: Vec<IntState<HalfPlanePoint>> =
        labels.iter().map(|l| extend_apply(&embedded, &IntState::single(l.clone()), m)).collect::<Result<_>>()?;
    let n = points.len();
    let route_a = linalg::gram(n, exec, |i, j| state_inner(&moved[i], &moved[j], m))?;
    let dilation = g.integrate_with(m, |h| Complex64::new(h.epsilon.abs().ln(), 0.0)).re.exp();
    let route_b = linalg::gram(n, exec, |i, j| -> Result<Complex64> {
        let shifted = |p: &Current<HalfPlanePoint>| {
            g.zip_with(p, |h, z| h.epsilon * h.epsilon * z.z() + h.epsilon * h.gamma)
        };
        let (zi, zj) = (shifted(&points[i]), shifted(&points[j]));
        let profile = zi.zip_with(&zj, |a, b| -I * (a - b.conj()));
        let v = lebesgue::laplace_of_factor(&profile, m, DEFAULT_TOL, |r, w| {
            Complex64::new((-w * r * r).exp().re, 0.0)
        })?;
        Ok(dilation * v)
    })?;
    Ok((route_a - route_b).iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// The vacuum spherical function in both models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalComparison {
    pub int_value: Complex64,
    pub fock_value: Complex64,
    /// `| |int| - |fock| |`.
    pub modulus_residual: f64,
    /// `int / |int|`.
    pub phase: Complex64,
    /// `exp(i int Im <b(g(x)), f0> dm)`.
    pub predicted_phase: Complex64,
}

pub fn int_vs_fock_spherical(g: &Current<ParabolicPair>, sign: Sign, m: &BaseMeasure) -> Result<SphericalComparison> {
    let int_value = omega_pairings(g, sign, m)?;
    let fock_value = fock::fock_spherical(g, sign, m)?;
    let psi = spherical_psi(g, sign, m)?;
    Ok(SphericalComparison {
        int_value,
        fock_value,
        modulus_residual: (int_value.norm() - fock_value.norm()).abs(),
        phase: int_value / int_value.norm(),
        predicted_phase: psi / psi.norm(),
    })
}
