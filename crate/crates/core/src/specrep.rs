//! The special representation of P on `H = int_0^inf H_r dr/r`, realized on
//! finite combinations `f(r) = sum_i A_i exp(-alpha_i r + i beta_i r^2)`.
//!
//! `(epsilon, gamma)` acts by `f(r) -> f(|epsilon| r) e^{i epsilon gamma r^2}`
//! (sign `+`), which on a term reads
//! `(A, alpha, beta) -> (A, |epsilon| alpha, epsilon^2 beta + epsilon gamma)`.
//! Sign `-` flips the phase; sign `0` uses the `+` action on the real pair
//! `(f, conj f)`, whose inner product is the real part of the `+` one.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::currents::{BaseMeasure, Current};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::groups::ParabolicPair;
use crate::linalg;
use crate::quadrature::{quadratic_kernel, DEFAULT_TOL};

/// Relative distance below which two exponents count as equal.
const MERGE_EPS: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
    Zero,
}

impl Sign {
    /// `+1` for the phase `e^{+i ...}` (signs `+` and `0`), `-1` otherwise.
    pub fn phase(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub a: Complex64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExponentialCombination {
    pub terms: Vec<Term>,
}

impl ExponentialCombination {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| !(t.alpha > 0.0) || !t.beta.is_finite() || !t.a.is_finite()) {
            return Err(Error::InvalidParameter(format!("terms need alpha > 0 and finite data, got {t:?}")));
        }
        Ok(ExponentialCombination { terms })
    }

    pub fn zero() -> Self {
        ExponentialCombination { terms: Vec::new() }
    }

    pub fn exponential(a: Complex64, alpha: f64, beta: f64) -> Self {
        ExponentialCombination { terms: vec![Term { a, alpha, beta }] }
    }

    /// The stabilizing vector `f0(r) = e^{-r/2}`.
    pub fn f0() -> Self {
        Self::exponential(Complex64::new(1.0, 0.0), 0.5, 0.0)
    }

    pub fn eval(&self, r: f64) -> Complex64 {
        self.terms.iter().map(|t| t.a * Complex64::new(-t.alpha * r, t.beta * r * r).exp()).sum()
    }

    pub fn coefficient_sum(&self) -> Complex64 {
        self.terms.iter().map(|t| t.a).sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        ExponentialCombination { terms: self.terms.iter().map(|t| Term { a: c * t.a, ..*t }).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        ExponentialCombination { terms }.simplified()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Merges terms whose `(alpha, beta)` agree up to rounding and drops zero
    /// coefficients.
    pub fn simplified(&self) -> Self {
        let same = |a: &Term, b: &Term| {
            let scale = a.alpha.max(b.alpha).max(a.beta.abs()).max(b.beta.abs());
            (a.alpha - b.alpha).abs() <= MERGE_EPS * scale && (a.beta - b.beta).abs() <= MERGE_EPS * scale
        };
        let mut out: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match out.iter_mut().find(|o| same(o, t)) {
                Some(o) => o.a += t.a,
                None => out.push(*t),
            }
        }
        let size: f64 = self.terms.iter().map(|t| t.a.norm()).sum();
        out.retain(|t| t.a.norm() > 1e-15 * size);
        ExponentialCombination { terms: out }
    }
}

/// `int_0^inf f(r) conj(g(r)) dr/r`; the real part for sign `0`.
///
/// Each pair of terms contributes `A_i conj(B_j) J(alpha_i + alpha'_j, -i (beta_i - beta'_j))`
/// where `J` is the Frullani-type kernel; the `e^{-r}` references cancel
/// because one side sums to zero.
pub fn fiber_inner(f: &ExponentialCombination, g: &ExponentialCombination, sign: Sign) -> Result<Complex64> {
    let sf = f.coefficient_sum();
    let sg = g.coefficient_sum();
    let size_f: f64 = f.terms.iter().map(|t| t.a.norm()).sum();
    let size_g: f64 = g.terms.iter().map(|t| t.a.norm()).sum();
    if (sf * sg.conj()).norm() > 1e-12 * size_f * size_g {
        return Err(Error::Divergent(format!(
            "f conj(g) does not vanish at r = 0 (coefficient sums {sf} and {sg})"
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for s in &f.terms {
        for t in &g.terms {
            let alpha = Complex64::new(s.alpha + t.alpha, 0.0);
            let w = -I * (s.beta - t.beta);
            acc += s.a * t.a.conj() * quadratic_kernel(alpha, w, DEFAULT_TOL)?;
        }
    }
    Ok(match sign {
        Sign::Zero => Complex64::new(acc.re, 0.0),
        _ => acc,
    })
}

pub fn fiber_norm_sqr(f: &ExponentialCombination, sign: Sign) -> Result<f64> {
    Ok(fiber_inner(f, f, sign)?.re.max(0.0))
}

/// Gram matrix of fiber vectors.
pub fn fiber_gram(
    vs: &[ExponentialCombination],
    sign: Sign,
    exec: Execution,
) -> Result<nalgebra::DMatrix<Complex64>> {
    linalg::gram(vs.len(), exec, |i, j| fiber_inner(&vs[i], &vs[j], sign))
}

/// `T(g) f`.
pub fn special_apply(g: &ParabolicPair, f: &ExponentialCombination, sign: Sign) -> ExponentialCombination {
    let (e, s) = (g.epsilon, sign.phase());
    ExponentialCombination {
        terms: f
            .terms
            .iter()
            .map(|t| Term { a: t.a, alpha: e.abs() * t.alpha, beta: e * e * t.beta + s * e * g.gamma })
            .collect(),
    }
}

/// `b(g) = T(g) f0 - f0` with `f0(r) = e^{-r/2}`.
pub fn cocycle_b(g: &ParabolicPair, sign: Sign) -> ExponentialCombination {
    cocycle_b_with(g, sign, &ExponentialCombination::f0())
}

/// `b(g) = T(g) phi - phi` for another profile `phi`; the resulting cocycles
/// are equivalent exactly when the values at zero agree.
pub fn cocycle_b_with(g: &ParabolicPair, sign: Sign, phi: &ExponentialCombination) -> ExponentialCombination {
    special_apply(g, phi, sign).sub(phi)
}

/// Fiber norm of `b(g1 g2) - T(g1) b(g2) - b(g1)`.
pub fn cocycle_identity_residual(g1: &ParabolicPair, g2: &ParabolicPair, sign: Sign) -> Result<f64> {
    let lhs = cocycle_b(&g1.mul(g2), sign);
    let rhs = special_apply(g1, &cocycle_b(g2, sign), sign).add(&cocycle_b(g1, sign));
    Ok(fiber_norm_sqr(&lhs.sub(&rhs), sign)?.sqrt())
}

/// Result of extrapolating `psi(g) = lim_{r -> 0} (1 - phi_h(g^r)) / r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiLimit {
    pub limit: f64,
    /// Observed order `p` in `D(r) = psi + O(r^p)`, when measurable.
    pub order: Option<f64>,
    pub converged: bool,
}

/// `phi_h(g) = <T(g) h, h>` for `g` in P0 on the fiber at `r = 1`.
fn phi_h(g: &ParabolicPair, sign: Sign) -> Complex64 {
    (I * sign.phase() * g.epsilon * g.gamma).exp()
}

/// `1 - Re phi_h(g^r)` without cancellation.
fn one_minus_re_phi(g: &ParabolicPair, sign: Sign) -> f64 {
    let x = sign.phase() * g.epsilon * g.gamma;
    2.0 * (0.5 * x).sin().powi(2)
}

/// Default grid `10^-1, ..., 10^-4`.
pub const PSI_GRID: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Richardson-extrapolated `psi(g)` for `g` in P0 from the difference
/// quotients on `r_grid` (decreasing, geometric).
pub fn psi_limit(g: &ParabolicPair, sign: Sign, r_grid: &[f64]) -> Result<PsiLimit> {
    if r_grid.len() < 3 {
        return Err(Error::InvalidParameter("psi extrapolation needs at least three radii".into()));
    }
    let d: Vec<f64> = r_grid
        .iter()
        .map(|&r| Ok(one_minus_re_phi(&g.automorphism_apply(r)?, sign) / r))
        .collect::<Result<_>>()?;
    let n = d.len();
    let step = r_grid[n - 2] / r_grid[n - 1];
    let (d1, d2) = (d[n - 3] - d[n - 2], d[n - 2] - d[n - 1]);
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if d2.abs() <= 1e-300 || d1.abs() <= 1e-300 {
        let converged = d2.abs() <= 1e-14 * scale.max(1e-300) || scale == 0.0;
        return Ok(PsiLimit { limit: d[n - 1], order: None, converged });
    }
    let p = (d1 / d2).abs().ln() / step.ln();
    let limit = d[n - 1] - d2 / (step.powf(p) - 1.0);
    let converged = p > 0.5 && (d[n - 1] - limit).abs() <= scale;
    Ok(PsiLimit { limit, order: Some(p), converged })
}

/// `|| T(g^r) h - h || = |phi-phase - 1|` at radius `r`, for `g` in P0.
pub fn almost_invariance_defect(g: &ParabolicPair, sign: Sign, r: f64) -> Result<f64> {
    let gr = g.automorphism_apply(r)?;
    Ok((phi_h(&gr, sign) - 1.0).norm())
}

/// `Psi(g) = exp(int_X (i Im <b(g(x)), f0> - |b(g(x))|^2 / 2) dm(x))`.
pub fn spherical_psi(g: &Current<ParabolicPair>, sign: Sign, m: &BaseMeasure) -> Result<Complex64> {
    let f0 = ExponentialCombination::f0();
    let exponent = g.try_integrate_with(m, |h| {
        let b = cocycle_b(h, sign);
        let phase = fiber_inner(&b, &f0, sign)?.im;
        Ok(Complex64::new(-0.5 * fiber_norm_sqr(&b, sign)?, phase))
    })?;
    Ok(exponent.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::random_parabolic;
    use crate::rng;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn term(a: f64, alpha: f64) -> Term {
        Term { a: c(a), alpha, beta: 0.0 }
    }

    #[test]
    fn frullani_norm() {
        let f = ExponentialCombination::new(vec![term(1.0, 1.0), term(-1.0, 2.0)]).unwrap();
        let v = fiber_inner(&f, &f, Sign::Plus).unwrap();
        assert!((v - (9.0f64 / 8.0).ln()).norm() < 1e-10, "{v}");
        assert!((v.re - 0.117783).abs() < 1e-6);
    }

    #[test]
    fn divergent_pairing_rejected() {
        let f = ExponentialCombination::new(vec![term(1.0, 1.0), term(-0.5, 2.0)]).unwrap();
        assert!(matches!(fiber_inner(&f, &f, Sign::Plus), Err(Error::Divergent(_))));
        assert!(ExponentialCombination::new(vec![term(1.0, 0.0)]).is_err());
    }

    #[test]
    fn hermitian_symmetry_on_random_pairs() {
        let mut rng = rng::stream(3, 0);
        for _ in 0..10 {
            let g1 = random_parabolic(&mut rng);
            let g2 = random_parabolic(&mut rng);
            let (f, g) = (cocycle_b(&g1, Sign::Plus), cocycle_b(&g2, Sign::Plus));
            let fg = fiber_inner(&f, &g, Sign::Plus).unwrap();
            let gf = fiber_inner(&g, &f, Sign::Plus).unwrap();
            assert!((fg - gf.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn action_examples() {
        let e = ExponentialCombination::exponential(c(1.0), 1.0, 0.0);
        assert_eq!(special_apply(&ParabolicPair::IDENTITY, &e, Sign::Plus), e);
        let d = special_apply(&ParabolicPair::dilation(3.0).unwrap(), &e, Sign::Plus);
        assert_eq!(d.terms[0].alpha, 3.0);
        let t = special_apply(&ParabolicPair::translation(0.7), &e, Sign::Plus);
        assert_eq!((t.terms[0].alpha, t.terms[0].beta), (1.0, 0.7));
        let t = special_apply(&ParabolicPair::translation(0.7), &e, Sign::Minus);
        assert_eq!(t.terms[0].beta, -0.7);
        // pointwise: (T(g) f)(r) = f(|e| r) e^{i e gamma r^2}
        let g = ParabolicPair::new(-1.5, 0.4).unwrap();
        let f = ExponentialCombination::new(vec![Term { a: Complex64::new(0.3, 1.0), alpha: 0.8, beta: -0.2 }]).unwrap();
        let tf = special_apply(&g, &f, Sign::Plus);
        for r in [0.1, 0.9, 2.5] {
            let expect = f.eval(1.5 * r) * (I * g.epsilon * g.gamma * r * r).exp();
            assert!((tf.eval(r) - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn cocycle_norms() {
        assert!(cocycle_b(&ParabolicPair::IDENTITY, Sign::Plus).terms.is_empty());
        for r0 in [0.2, 0.5, 1.0, 2.0, 4.0, 5.0] {
            let b = cocycle_b(&ParabolicPair::dilation(r0).unwrap(), Sign::Plus);
            assert_eq!(b.coefficient_sum(), c(0.0));
            let n = fiber_norm_sqr(&b, Sign::Plus).unwrap();
            let closed = ((1.0 + r0) * (1.0 + r0) / (4.0 * r0)).ln();
            assert!((n - closed).abs() < 1e-10, "r0={r0}: {n} vs {closed}");
        }
        let b4 = fiber_norm_sqr(&cocycle_b(&ParabolicPair::dilation(4.0).unwrap(), Sign::Plus), Sign::Plus).unwrap();
        assert!((b4 - 0.44629).abs() < 1e-5);
        // translations: |b|^2 = int e^{-r} 2 (1 - cos(gamma r^2)) dr/r, checked on the real axis
        for gamma in [0.3, 2.0] {
            let b = cocycle_b(&ParabolicPair::translation(gamma), Sign::Plus);
            let n = fiber_norm_sqr(&b, Sign::Plus).unwrap();
            let direct = crate::quadrature::haar_integral(
                |r| c((-r).exp() * 4.0 * (0.5 * gamma * r * r).sin().powi(2)),
                1e-12,
            )
            .unwrap();
            assert!((n - direct.re).abs() < 1e-9);
        }
    }

    #[test]
    fn cocycle_law_special_pairs() {
        let e = ParabolicPair::IDENTITY;
        let g = ParabolicPair::new(2.0, -1.0).unwrap();
        assert_eq!(cocycle_identity_residual(&e, &g, Sign::Plus).unwrap(), 0.0);
        let t1 = ParabolicPair::translation(0.4);
        let t2 = ParabolicPair::translation(-1.3);
        assert!(cocycle_identity_residual(&t1, &t2, Sign::Minus).unwrap() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn cocycle_law_holds(seed in any::<u64>(), minus in any::<bool>()) {
            let mut rng = rng::stream(seed, 0);
            let g1 = random_parabolic(&mut rng);
            let g2 = random_parabolic(&mut rng);
            let sign = if minus { Sign::Minus } else { Sign::Plus };
            prop_assert!(cocycle_identity_residual(&g1, &g2, sign).unwrap() < 1e-8);
        }

        #[test]
        fn fiber_gram_is_psd(seed in any::<u64>()) {
            let mut rng = rng::stream(seed, 1);
            let vs: Vec<_> = (0..4).map(|_| cocycle_b(&random_parabolic(&mut rng), Sign::Plus)).collect();
            let g = fiber_gram(&vs, Sign::Plus, Execution::Parallel).unwrap();
            prop_assert!(linalg::hermitian_defect(&g) < 1e-10);
            prop_assert!(linalg::min_eigenvalue(&g) >= -1e-10);
        }
    }

    #[test]
    fn psi_examples() {
        let t = ParabolicPair::translation(1.7);
        let p = psi_limit(&t, Sign::Plus, &PSI_GRID).unwrap();
        assert!(p.limit.abs() < 1e-9 && p.converged, "{p:?}");
        assert!((p.order.unwrap() - 3.0).abs() < 0.1);
        let p = psi_limit(&ParabolicPair::IDENTITY, Sign::Plus, &PSI_GRID).unwrap();
        assert_eq!(p.limit, 0.0);
        assert!(p.converged);
        assert!(psi_limit(&ParabolicPair::dilation(2.0).unwrap(), Sign::Plus, &PSI_GRID).is_err());
        for r in [1.0, 0.5, 0.1, 0.01] {
            assert!(almost_invariance_defect(&t, Sign::Plus, r).unwrap() <= 1.7 * r + 1e-15);
        }
        // psi is finite while the cocycle norm is not zero
        assert!(fiber_norm_sqr(&cocycle_b(&t, Sign::Plus), Sign::Plus).unwrap() > 0.0);
    }

    #[test]
    fn spherical_examples() {
        let m = BaseMeasure::default();
        let id = Current::constant(ParabolicPair::IDENTITY);
        assert_eq!(spherical_psi(&id, Sign::Plus, &m).unwrap(), c(1.0));
        let d = Current::constant(ParabolicPair::dilation(4.0).unwrap());
        let v = spherical_psi(&d, Sign::Plus, &m).unwrap();
        assert!((v - 0.8).norm() < 1e-10, "{v}");
        for r0 in [0.3, 2.0] {
            let v = spherical_psi(&Current::constant(ParabolicPair::dilation(r0).unwrap()), Sign::Plus, &m).unwrap();
            assert!((v.re - 2.0 * r0.sqrt() / (1.0 + r0)).abs() < 1e-10);
        }
        // translation: exp(int e^{-r} (e^{i gamma r^2} - 1) dr/r), computed along the real axis
        let gamma = 0.8;
        let t = Current::constant(ParabolicPair::translation(gamma));
        let v = spherical_psi(&t, Sign::Plus, &m).unwrap();
        let route = crate::lebesgue::generalized_laplace_closed(&Current::constant(()), &m, 1e-12, |r, _| {
            Complex64::new(r, -gamma * r * r)
        })
        .unwrap();
        assert!((v - route).norm() < 1e-8, "{v} vs {route}");
        assert!(v.norm() <= 1.0);
    }
}
