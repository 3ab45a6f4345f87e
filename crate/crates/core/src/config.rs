//! Numerical tolerances shared by every check in the crate.
//!
//! Each invariant reads its threshold from [`Tolerances`]; nothing below the
//! library boundary hard-codes a comparison constant. The CLI can rescale or
//! override these per scenario.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Exact group arithmetic (pair products, matrix embedding).
    pub group_exact: f64,
    /// `|det - 1|` for SL(2,R) elements.
    pub sl2_det: f64,
    /// Residual `|g* J g - J|` for U(n,1) elements.
    pub hermitian_form: f64,
    /// Group-action composition and domain checks.
    pub action: f64,
    /// Exponentiated multiplier-cocycle residual for the kernel c.
    pub multiplier_cocycle: f64,
    /// Absolute tolerance of one r-quadrature (per x-piece).
    pub quadrature_abs: f64,
    /// 1-cocycle law residual.
    pub cocycle_law: f64,
    /// Smallest admissible Gram eigenvalue (negated).
    pub gram_psd: f64,
    /// Gram-preservation residual for extended operators.
    pub unitarity: f64,
    /// Probe spread of the projective multiplier.
    pub projective_spread: f64,
    /// `||lambda| - 1|`, and `|lambda - 1|` for the orthogonal variant.
    pub projective_modulus: f64,
    /// Agreement between independent routes to the same number.
    pub route_agreement: f64,
    /// Closed-form versus quadrature for the Gram kernel kappa.
    pub kernel_closed_form: f64,
    /// Monte Carlo acceptance radius in standard errors.
    pub mc_sigmas: f64,
    /// Strictness margin of the complex-ball inequality.
    pub ball_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            group_exact: 1e-12,
            sl2_det: 1e-12,
            hermitian_form: 1e-10,
            action: 1e-10,
            multiplier_cocycle: 1e-10,
            quadrature_abs: 1e-10,
            cocycle_law: 1e-8,
            gram_psd: 1e-10,
            unitarity: 1e-6,
            projective_spread: 1e-6,
            projective_modulus: 1e-8,
            route_agreement: 1e-8,
            kernel_closed_form: 1e-8,
            mc_sigmas: 3.0,
            ball_margin: 1e-12,
        }
    }
}

impl Tolerances {
    /// Every threshold multiplied by `factor`; `scaled(0.0)` makes every
    /// nonzero residual a failure.
    pub fn scaled(&self, factor: f64) -> Self {
        Tolerances {
            group_exact: self.group_exact * factor,
            sl2_det: self.sl2_det * factor,
            hermitian_form: self.hermitian_form * factor,
            action: self.action * factor,
            multiplier_cocycle: self.multiplier_cocycle * factor,
            quadrature_abs: self.quadrature_abs * factor,
            cocycle_law: self.cocycle_law * factor,
            gram_psd: self.gram_psd * factor,
            unitarity: self.unitarity * factor,
            projective_spread: self.projective_spread * factor,
            projective_modulus: self.projective_modulus * factor,
            route_agreement: self.route_agreement * factor,
            kernel_closed_form: self.kernel_closed_form * factor,
            mc_sigmas: self.mc_sigmas * factor,
            ball_margin: self.ball_margin,
        }
    }
}
