//! CSV and summary output for `spherical`, `sample` and `kernels`.

use std::io::Write;

use current_reps::geometry::{cocycle_u, BallPoint, CocycleVariant, HalfPlanePoint, HyperbolicSpace};
use current_reps::groups::{GroupElement, GroupKind};
use current_reps::intmodel;
use current_reps::lebesgue::{self, Estimate};
use current_reps::specrep;
use current_reps::Execution;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::scenario::{Route, Scenario};
use crate::verify::{check_seed, header, Header};

#[derive(Serialize)]
struct SphericalRow<'a> {
    current_id: &'a str,
    re: f64,
    im: f64,
    abs: f64,
    route: &'static str,
    stderr: Option<f64>,
}

/// One row per current and route. Monte Carlo rows use the seed of their row
/// index, so reordering routes does not change other rows.
pub fn spherical<W: Write>(s: &Scenario, exec: Execution, out: W) -> Result<()> {
    let spec = s.spherical.as_ref().ok_or_else(|| CliError::Schema("scenario has no 'spherical' section".into()))?;
    let m = s.measure();
    let mut w = csv::Writer::from_writer(out);
    let mut row = 0;
    for id in &spec.currents {
        let g = s.parabolic(id)?;
        for &route in &spec.routes {
            let (value, stderr) = match route {
                Route::Cocycle => (specrep::spherical_psi(g, s.variant, &m)?, None),
                Route::Laplace => (intmodel::omega_pairings(g, s.variant, &m)?, None),
                Route::Mc => {
                    let cfg = s.sampler_config(check_seed(s.sampler.seed, row))?;
                    let est = intmodel::omega_pairings_mc(g, s.variant, &cfg, exec)?;
                    (est.value, Some(est.stderr()))
                }
            };
            w.serialize(SphericalRow {
                current_id: id,
                re: value.re,
                im: value.im,
                abs: value.norm(),
                route: route.name(),
                stderr,
            })?;
            row += 1;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
pub struct SampleSummary {
    pub header: Header,
    pub theta: f64,
    pub eps_trunc: f64,
    pub seed: u64,
    pub written: usize,
    pub total_mass: Estimate,
    pub total_mass_deviation: f64,
    pub total_mass_variance: Estimate,
    pub truncation_mass_expected: f64,
    pub truncation_mass_bound: f64,
    pub truncation_within_bound: bool,
    pub smallest_jump: Option<f64>,
}

/// Writes `sample_count` configurations and returns statistics over
/// `n_samples` draws of the same streams.
pub fn sample<W: Write>(s: &Scenario, exec: Execution, out: W) -> Result<SampleSummary> {
    let cfg = s.sampler_config(s.sampler.seed)?;
    let count = s.outputs.sample_count;
    lebesgue::write_configurations_csv(&cfg, count, exec, out)?;
    let smallest_jump = exec
        .map(count, |i| lebesgue::sample_gamma_config(&cfg, i as u64).atoms.iter().map(|a| a.r).fold(f64::INFINITY, f64::min))
        .into_iter()
        .fold(None, |acc: Option<f64>, r| if r.is_finite() { Some(acc.map_or(r, |a| a.min(r))) } else { acc });
    let stats = lebesgue::total_mass_statistics(&cfg, exec)?;
    Ok(SampleSummary {
        header: header(),
        theta: cfg.theta,
        eps_trunc: cfg.eps_trunc,
        seed: cfg.seed,
        written: count,
        total_mass: stats.mean,
        total_mass_deviation: stats.mean.deviation(cfg.theta),
        total_mass_variance: stats.variance,
        truncation_mass_expected: cfg.truncation_mass_expected(),
        truncation_mass_bound: cfg.truncation_mass_bound(),
        truncation_within_bound: cfg.truncation_mass_expected() <= cfg.truncation_mass_bound(),
        smallest_jump,
    })
}

#[derive(Serialize)]
struct KernelRow {
    x: f64,
    y: f64,
    c_re: f64,
    c_im: f64,
    kappa_re: f64,
    kappa_im: f64,
    kappa_quad_re: f64,
    kappa_quad_im: f64,
    u_plus_re: f64,
    u_plus_im: f64,
    u_minus_re: f64,
    u_minus_im: f64,
}

/// `c(p, p0)`, the Gram kernel `kappa(p, p0)` in closed form and by
/// quadrature, and `u^{+-}(g, p)` for every grid point `p`.
pub fn kernels<W: Write>(s: &Scenario, out: W) -> Result<()> {
    let spec = s.kernels.as_ref().ok_or_else(|| CliError::Schema("scenario has no 'kernels' section".into()))?;
    let mut w = csv::Writer::from_writer(out);
    for &x in &spec.x {
        for &y in &spec.y {
            let row = match (&s.group_kind, &spec.element) {
                (GroupKind::Sl2 | GroupKind::Parabolic, element) => {
                    let g = match element {
                        GroupElement::Sl2(g) => *g,
                        GroupElement::Parabolic(h) => h.embed(),
                        GroupElement::Unitary(_) => {
                            return Err(CliError::Schema("kernel element must be sl2 or parabolic".into()))
                        }
                    };
                    let p = HalfPlanePoint::from_parts(x, y).map_err(|e| CliError::Schema(e.to_string()))?;
                    kernel_row(x, y, &g, &p)?
                }
                (GroupKind::Unitary(n), GroupElement::Unitary(g)) => {
                    let b1 = Complex64::new(x, y);
                    let mut b = vec![Complex64::new(0.0, 0.0); n - 1];
                    b[0] = b1;
                    let p = BallPoint::new(Complex64::new(-0.5 * (1.0 + b1.norm_sqr()), 0.0), b)?;
                    kernel_row(x, y, g, &p)?
                }
                _ => return Err(CliError::Schema("kernel element must be unitary".into())),
            };
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn kernel_row<S: HyperbolicSpace>(x: f64, y: f64, g: &S::Group, p: &S) -> Result<KernelRow> {
    let p0 = p.base_point_like();
    let c = S::kernel_c(p, &p0)?;
    let k = intmodel::kappa_closed(p, &p0)?;
    let kq = intmodel::kappa_quadrature(p, &p0)?;
    let up = cocycle_u(g, p, CocycleVariant::Plus)?;
    let um = cocycle_u(g, p, CocycleVariant::Minus)?;
    Ok(KernelRow {
        x,
        y,
        c_re: c.re,
        c_im: c.im,
        kappa_re: k.re,
        kappa_im: k.im,
        kappa_quad_re: kq.re,
        kappa_quad_im: kq.im,
        u_plus_re: up.re,
        u_plus_im: up.im,
        u_minus_re: um.re,
        u_minus_im: um.im,
    })
}
