//! Exponential integral `E1` and its inverse.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `E1(x) = int_x^inf e^{-t}/t dt` for `x > 0`, power series below 1 and
/// Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs x > 0, got {x}");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// The `r > 0` with `E1(r) = y`, by Newton in `log r` safeguarded by bisection.
pub fn exp_integral_e1_inverse(y: f64) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::InvalidParameter(format!("E1 inverse needs y > 0, got {y}")));
    }
    // bracket in s = ln r: E1 is decreasing in s
    let mut lo = -(y + 40.0);
    let mut hi = 7.0f64.max((1.0 / y).ln() + 1.0);
    let mut s = if y > 1.0 {
        -EULER_GAMMA - y
    } else if y < 0.1 {
        let l = -y.ln();
        (l - l.ln()).max(1e-3).ln()
    } else {
        (0.5 / y).ln()
    };
    s = s.clamp(lo, hi);
    for _ in 0..200 {
        let r = s.exp();
        let g = exp_integral_e1(r) - y;
        if g > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        // d E1 / ds = -e^{-r}
        let step = g * r.exp();
        let mut next = s + step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() < 1e-15 * (1.0 + s.abs()) || hi - lo < 1e-15 * (1.0 + s.abs()) {
            return Ok(next.exp());
        }
        s = next;
    }
    Ok(s.exp())
}
