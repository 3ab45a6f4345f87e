//! Quadrature for integrals against the multiplicative Haar measure `dr/r` on
//! `(0, inf)`.
//!
//! The half-line is cut into dyadic panels `[2^k, 2^{k+1}]`, walked outward
//! from 1 in both directions until the integrand is negligible; each panel is
//! integrated by 32-point Gauss–Legendre with bisection until two levels agree.
//! Panels that never become negligible signal divergence at 0 or at infinity.
//!
//! The integrands used in this crate are `exp(-alpha r - w r^2) - exp(-r)`,
//! which oscillate wildly on the real axis when `Im w` dominates. They are
//! analytic and decay in the sector between the real axis and the ray where
//! `w r^2` is real, so the integral is taken along that rotated ray instead.

use std::f64::consts::{FRAC_PI_2, LN_2};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute tolerance used by the higher-level routines for each r-integral.
pub const DEFAULT_TOL: f64 = 1e-11;

const GL_POINTS: usize = 32;
const MAX_DEPTH: u32 = 40;
const MAX_PANELS_UP: i32 = 80;
const MAX_PANELS_DOWN: i32 = -90;

/// Nodes and weights on `[-1, 1]`.
fn gauss_legendre_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

/// Fixed 32-point rule on `[a, b]`; also returns the largest `|f|` seen.
fn gl_panel(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let (nodes, weights) = gauss_legendre_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut peak = 0.0f64;
    for (x, w) in nodes.iter().zip(weights) {
        let v = f(mid + half * x);
        peak = peak.max(v.norm());
        acc += *w * v;
    }
    (acc * half, peak)
}

fn adaptive(f: &impl Fn(f64) -> Complex64, a: f64, b: f64, whole: Complex64, tol: f64, depth: u32) -> Result<Complex64> {
    let m = 0.5 * (a + b);
    let (left, _) = gl_panel(f, a, m);
    let (right, _) = gl_panel(f, m, b);
    let sum = left + right;
    let err = (sum - whole).norm();
    if err <= tol.max(1e-15 * sum.norm()) {
        return Ok(sum);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature { lo: a, hi: b, err });
    }
    Ok(adaptive(f, a, m, left, 0.5 * tol, depth + 1)? + adaptive(f, m, b, right, 0.5 * tol, depth + 1)?)
}

/// Adaptive Gauss–Legendre on a finite interval.
pub fn integrate_interval(f: impl Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    let (whole, _) = gl_panel(&f, a, b);
    adaptive(&f, a, b, whole, tol, 0)
}

/// `int_0^inf f(t e^{i phi}) dt / t`, with `f` given on the ray.
///
/// `tol` is the absolute tolerance for the whole integral. The integrand must
/// vanish at 0 and decay at infinity along the ray; otherwise
/// [`Error::Divergent`] is returned.
pub fn haar_ray_integral(f: impl Fn(Complex64) -> Complex64, phi: f64, tol: f64) -> Result<Complex64> {
    let dir = Complex64::from_polar(1.0, phi);
    // integrate over s = ln t so that dt/t = ds and panels have unit log-width
    let g = |s: f64| f(dir * s.exp());
    let panel_tol = tol * 1e-3;
    let mut total = Complex64::new(0.0, 0.0);
    let mut scale = 0.0f64;

    let run = |k: i32, scale: &mut f64| -> Result<(Complex64, f64)> {
        let (a, b) = (k as f64 * LN_2, (k + 1) as f64 * LN_2);
        let (whole, peak) = gl_panel(&g, a, b);
        *scale = scale.max(peak);
        let v = adaptive(&g, a, b, whole, panel_tol, 0)?;
        Ok((v, peak))
    };

    let negligible = |peak: f64, scale: f64| peak <= 1e-17 * scale;

    // outward from t = 1
    let mut quiet = 0;
    let mut k = 0;
    loop {
        let (v, peak) = run(k, &mut scale)?;
        total += v;
        quiet = if negligible(peak, scale) { quiet + 1 } else { 0 };
        if quiet >= 2 {
            break;
        }
        k += 1;
        if k > MAX_PANELS_UP {
            return Err(Error::Divergent(format!("integrand does not decay along the ray (|f| ~ {peak:e} at t = 2^{k})")));
        }
    }
    quiet = 0;
    k = -1;
    loop {
        let (v, peak) = run(k, &mut scale)?;
        total += v;
        quiet = if negligible(peak, scale) { quiet + 1 } else { 0 };
        if quiet >= 2 {
            break;
        }
        k -= 1;
        if k < MAX_PANELS_DOWN {
            return Err(Error::Divergent(format!("integrand does not vanish at r -> 0 (|f| ~ {peak:e})")));
        }
    }
    Ok(total)
}

/// `int_0^inf f(r) dr / r` on the real axis.
pub fn haar_integral(f: impl Fn(f64) -> Complex64, tol: f64) -> Result<Complex64> {
    haar_ray_integral(|r| f(r.re), 0.0, tol)
}

/// `exp(z) - 1` without cancellation for small `|z|`.
pub fn expm1_complex(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let half = (0.5 * z.im).sin();
        Complex64::new(z.re.exp_m1() * z.im.cos() - 2.0 * half * half, z.re.exp() * z.im.sin())
    } else {
        z.exp() - 1.0
    }
}

/// `exp(-phi) - exp(-r)` at complex `r`, accurate when `phi` is close to `r`.
pub fn exponent_difference(phi: Complex64, r: Complex64) -> Complex64 {
    let x = r - phi;
    if x.norm() < 0.5 {
        (-r).exp() * expm1_complex(x)
    } else {
        (-phi).exp() - (-r).exp()
    }
}

/// `exp(-alpha r - w r^2) - exp(-r)` at complex `r`, accurate near `r = 0`.
pub fn quadratic_exponent_difference(alpha: Complex64, w: Complex64, r: Complex64) -> Complex64 {
    exponent_difference(alpha * r + w * r * r, r)
}

/// Rotation angle for [`quadratic_kernel`]: aligns `w r^2` (or `alpha r` when
/// `w = 0`) with the real axis, kept inside the sector where every term decays.
pub fn rotation_angle(alpha: Complex64, w: Complex64) -> Result<f64> {
    let (mut lo, mut hi) = (-FRAC_PI_2, FRAC_PI_2);
    let target = if w.norm() > 0.0 {
        let a = w.arg();
        lo = lo.max((-FRAC_PI_2 - a) / 2.0);
        hi = hi.min((FRAC_PI_2 - a) / 2.0);
        -a / 2.0
    } else if alpha.norm() > 0.0 {
        let a = alpha.arg();
        lo = lo.max(-FRAC_PI_2 - a);
        hi = hi.min(FRAC_PI_2 - a);
        -a
    } else {
        return Err(Error::Divergent("exp(-0) - exp(-r) is not integrable against dr/r".into()));
    };
    if !(hi > lo) {
        return Err(Error::Divergent(format!("no decaying direction for alpha={alpha}, w={w}")));
    }
    let margin = (0.25 * (hi - lo)).min(0.1);
    let phi = target.clamp(lo + margin, hi - margin);
    let dir = Complex64::from_polar(1.0, phi);
    let quad = (w * dir * dir).re;
    let lin = (alpha * dir).re;
    if !(quad > 0.0 || (quad >= 0.0 && lin > 0.0)) {
        return Err(Error::Divergent(format!("exp(-alpha r - w r^2) does not decay for alpha={alpha}, w={w}")));
    }
    Ok(phi)
}

/// `J(alpha, w) = int_0^inf (exp(-alpha r - w r^2) - exp(-r)) dr / r`.
///
/// Converges whenever `Re w > 0`, or `w = 0` and `Re alpha > 0` (boundary
/// cases with `Re w = 0` need `Re alpha > 0`).
pub fn quadratic_kernel(alpha: Complex64, w: Complex64, tol: f64) -> Result<Complex64> {
    if w.re < 0.0 || (w.norm() == 0.0 && !(alpha.re > 0.0)) {
        return Err(Error::Divergent(format!("kernel with alpha={alpha}, w={w} diverges at infinity")));
    }
    let phi = rotation_angle(alpha, w)?;
    haar_ray_integral(|r| quadratic_exponent_difference(alpha, w, r), phi, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::EULER_GAMMA;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (nodes, weights) = gauss_legendre_rule();
        let sw: f64 = weights.iter().sum();
        assert!((sw - 2.0).abs() < 1e-14);
        let m = nodes.iter().zip(weights).map(|(x, w)| w * x.powi(62)).sum::<f64>();
        assert!((m - 2.0 / 63.0).abs() < 1e-14);
        let v = integrate_interval(|x| c(x.sin(), 0.0), 0.0, std::f64::consts::PI, 1e-13).unwrap();
        assert!((v.re - 2.0).abs() < 1e-13);
    }

    #[test]
    fn frullani_on_the_real_axis() {
        // int (e^{-a r} - e^{-b r}) dr/r = ln(b/a)
        for &(a, b) in &[(1.0, 2.0), (0.2, 5.0), (3.0, 0.5), (1e-3, 1.0)] {
            let v = haar_integral(|r| c((-a * r).exp() - (-b * r).exp(), 0.0), 1e-12).unwrap();
            assert!((v.re - (b / a).ln()).abs() < 1e-10, "a={a} b={b}: {v}");
        }
    }

    #[test]
    fn linear_kernel_is_minus_log() {
        for &a in &[c(2.0, 0.0), c(0.3, 0.0), c(1.0, 3.0), c(0.5, -4.0), c(7.0, 0.0)] {
            let j = quadratic_kernel(a, c(0.0, 0.0), 1e-10).unwrap();
            assert!((j + a.ln()).norm() < 1e-10, "alpha={a}: {j}");
        }
    }

    #[test]
    fn quadratic_kernel_closed_form() {
        // substitution u = r^2 reduces to a Frullani term plus the constant
        // int (e^{-u} - e^{-sqrt u}) du/u = gamma_E
        for &w in &[c(1.0, 0.0), c(2.0, -1.0), c(0.05, 3.0), c(10.0, 40.0), c(1e-3, -1e-2), c(400.0, 0.0)] {
            let j = quadratic_kernel(c(0.0, 0.0), w, 1e-10).unwrap();
            let closed = -0.5 * w.ln() + 0.5 * EULER_GAMMA;
            assert!((j - closed).norm() < 1e-9, "w={w}: {j} vs {closed}");
        }
    }

    #[test]
    fn real_axis_and_rotated_routes_agree() {
        // moderate oscillation: both routes are accurate
        for &(a, w) in &[(0.5, c(1.0, -0.5)), (1.5, c(0.2, 1.0)), (1.0, c(0.0, -2.0))] {
            let alpha = c(a, 0.0);
            let rotated = quadratic_kernel(alpha, w, 1e-11).unwrap();
            let real = haar_integral(|r| quadratic_exponent_difference(alpha, w, c(r, 0.0)), 1e-11).unwrap();
            assert!((rotated - real).norm() < 1e-9, "{rotated} vs {real}");
        }
    }

    #[test]
    fn divergence_detected() {
        assert!(matches!(quadratic_kernel(c(0.0, 0.0), c(0.0, 0.0), 1e-10), Err(Error::Divergent(_))));
        assert!(matches!(quadratic_kernel(c(0.0, 0.0), c(-1.0, 0.0), 1e-10), Err(Error::Divergent(_))));
        // nonvanishing at zero
        assert!(matches!(haar_integral(|r| c((-r).exp(), 0.0), 1e-10), Err(Error::Divergent(_))));
        // nondecaying tail
        assert!(matches!(haar_integral(|r| c(1.0 - (-r).exp(), 0.0), 1e-10), Err(Error::Divergent(_))));
    }

    #[test]
    fn expm1_is_accurate() {
        let z = c(1e-12, 2e-12);
        let e = expm1_complex(z);
        assert!((e - z).norm() < 1e-23);
        let z = c(0.3, -0.2);
        assert!((expm1_complex(z) - (z.exp() - 1.0)).norm() < 1e-15);
    }
}
