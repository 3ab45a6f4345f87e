//! The `verify` subcommand: runs every check of a scenario and writes a JSON
//! report with one record per check.

use std::collections::BTreeMap;

use current_reps::currents::{refine, BaseMeasure, Current};
use current_reps::fock;
use current_reps::geometry::{BallPoint, HalfPlanePoint, HyperbolicSpace};
use current_reps::groups::{ParabolicPair, SL2Element};
use current_reps::intmodel::{self, CoherentLabel, IntLabel};
use current_reps::lebesgue;
use current_reps::linalg;
use current_reps::specrep;
use current_reps::{Execution, Tolerances};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::scenario::{wrong_kind, CheckEntry, CheckSpec, NamedCurrent, Scenario};

#[derive(Debug, Serialize)]
pub struct CheckRecord {
    pub check: &'static str,
    pub inputs_digest: String,
    /// `None` when the computation itself failed (see `error`).
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Header {
    pub tool: String,
    pub generated_unix: u64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub header: Header,
    pub scenario_digest: String,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<CheckRecord>,
}

pub fn header() -> Header {
    let generated_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Header { tool: format!("currep {}", env!("CARGO_PKG_VERSION")), generated_unix }
}

/// Per-piece quadrature tolerance for the Frullani check, well below its
/// acceptance threshold.
const FRULLANI_QUADRATURE_TOL: f64 = 1e-12;

pub fn digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed of the `index`-th check; deterministic checks report it too.
pub fn check_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

pub fn run(scenario: &Scenario, exec: Execution) -> Report {
    let tol = scenario.tolerances();
    let checks: Vec<CheckRecord> = scenario
        .checks
        .iter()
        .enumerate()
        .map(|(i, entry)| run_one(scenario, entry, check_seed(scenario.sampler.seed, i), &tol, exec))
        .collect();
    let passed = checks.iter().filter(|c| c.pass).count();
    Report {
        header: header(),
        scenario_digest: digest(scenario),
        seed: scenario.sampler.seed,
        passed,
        failed: checks.len() - passed,
        checks,
    }
}

fn run_one(scenario: &Scenario, entry: &CheckEntry, seed: u64, tol: &Tolerances, exec: Execution) -> CheckRecord {
    let inputs: BTreeMap<&str, &NamedCurrent> = entry
        .spec
        .references()
        .into_iter()
        .filter_map(|n| scenario.currents.get(n).map(|c| (n, c)))
        .collect();
    let inputs_digest = digest(&serde_json::json!({
        "check": entry.spec,
        "inputs": inputs,
        "group_kind": scenario.group_kind,
        "variant": scenario.variant,
        "theta": scenario.theta,
        "sampler": { "eps_trunc": scenario.sampler.eps_trunc, "n_samples": scenario.sampler.n_samples, "seed": seed },
    }));
    let default_tol = tolerance_for(&entry.spec, tol);
    let tolerance = entry.tolerance.map_or(default_tol, |t| t * scenario.tolerance_scale);
    let (residual, error) = match residual(scenario, &entry.spec, seed, exec) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    CheckRecord {
        check: entry.spec.name(),
        inputs_digest,
        residual,
        tolerance,
        pass: residual.is_some_and(|r| r <= tolerance),
        seed,
        error,
    }
}

fn tolerance_for(spec: &CheckSpec, t: &Tolerances) -> f64 {
    match spec {
        CheckSpec::CocycleLaw { .. } => t.cocycle_law,
        CheckSpec::FockProjective { .. } | CheckSpec::IntProjective { .. } => t.projective_spread,
        CheckSpec::FockUnitarity { .. } | CheckSpec::IntUnitarity { .. } => t.unitarity,
        CheckSpec::GramPsd { .. } => t.gram_psd,
        CheckSpec::SphericalRoutes { .. } | CheckSpec::Restriction { .. } => t.route_agreement,
        CheckSpec::Kappa { .. } => t.kernel_closed_form,
        CheckSpec::Frullani { .. } => t.quadrature_abs,
        CheckSpec::Truncation => t.group_exact,
        CheckSpec::SphericalMc { .. }
        | CheckSpec::LaplaceMc { .. }
        | CheckSpec::Multiplicator { .. }
        | CheckSpec::TotalMass
        | CheckSpec::TailLaw { .. } => t.mc_sigmas,
    }
}

fn residual(s: &Scenario, spec: &CheckSpec, seed: u64, exec: Execution) -> Result<f64> {
    let m = s.measure();
    let sign = s.variant;
    let cfg = || s.sampler_config(seed).map_err(CliError::from);
    Ok(match spec {
        CheckSpec::CocycleLaw { g1, g2 } => {
            let pieces = s.parabolic(g1)?.zip_with(s.parabolic(g2)?, |a, b| (*a, *b));
            max_over(pieces.values(), |(a, b)| specrep::cocycle_identity_residual(a, b, sign))?
        }
        CheckSpec::FockProjective { g1, g2 } => {
            let (g1, g2) = (s.parabolic(g1)?, s.parabolic(g2)?);
            let rep = fock::projective_check(g1, g2, &fock::default_probes(sign), sign, &m, exec)?;
            let predicted = fock::predicted_multiplier(g1, g2, sign, &m)?;
            rep.spread.max((rep.phase - predicted).norm())
        }
        CheckSpec::FockUnitarity { g, labels } => {
            let vectors: Vec<fock::OneParticleVector> = labels
                .iter()
                .map(|l| Ok(fock::cocycle_current(s.parabolic(l)?, sign)))
                .collect::<Result<_>>()?;
            fock::unitarity_residual(s.parabolic(g)?, &vectors, sign, &m, exec)?
        }
        CheckSpec::GramPsd { labels } => match point_labels(s, labels)? {
            Points::HalfPlane(l) => gram_defect(&l, &m, exec)?,
            Points::Ball(l) => gram_defect(&l, &m, exec)?,
        },
        CheckSpec::IntUnitarity { g, labels } => match point_labels(s, labels)? {
            Points::HalfPlane(l) => intmodel::unitarity_check(&sl2_current(s, g)?, &l, &m, exec)?,
            Points::Ball(l) => intmodel::unitarity_check(&unitary_current(s, g)?, &l, &m, exec)?,
        },
        CheckSpec::IntProjective { g1, g2, labels } => match point_labels(s, labels)? {
            Points::HalfPlane(l) => {
                intmodel::int_projective_check(&sl2_current(s, g1)?, &sl2_current(s, g2)?, &l, &m, exec)?.spread
            }
            Points::Ball(l) => {
                intmodel::int_projective_check(&unitary_current(s, g1)?, &unitary_current(s, g2)?, &l, &m, exec)?
                    .spread
            }
        },
        CheckSpec::SphericalRoutes { g } => {
            let g = s.parabolic(g)?;
            let psi = specrep::spherical_psi(g, sign, &m)?;
            let cmp = intmodel::int_vs_fock_spherical(g, sign, &m)?;
            (psi - cmp.int_value).norm().max(cmp.modulus_residual)
        }
        CheckSpec::SphericalMc { g } => {
            let g = s.parabolic(g)?;
            let est = intmodel::omega_pairings_mc(g, sign, &cfg()?, exec)?;
            est.deviation(intmodel::omega_pairings(g, sign, &m)?)
        }
        CheckSpec::Restriction { g, labels } => {
            let points: Vec<Current<HalfPlanePoint>> = labels
                .iter()
                .map(|l| match s.current(l)? {
                    NamedCurrent::HalfPlane(c) => Ok(c.clone()),
                    other => Err(wrong_kind(l, "half_plane", other)),
                })
                .collect::<Result<_>>()?;
            intmodel::restriction_consistency(s.parabolic(g)?, &points, &m, exec)?
        }
        CheckSpec::Kappa { p1, p2 } => match (s.current(p1)?, s.current(p2)?) {
            (NamedCurrent::HalfPlane(a), NamedCurrent::HalfPlane(b)) => kappa_defect(a, b)?,
            (NamedCurrent::Ball(a), NamedCurrent::Ball(b)) => kappa_defect(a, b)?,
            (a, _) => return Err(wrong_kind(p1, "half_plane or ball matching the second point", a)),
        },
        CheckSpec::LaplaceMc { f } => {
            let f = s.real(f)?;
            lebesgue::laplace_mc(f, &cfg()?, exec)?.deviation(lebesgue::laplace_closed(f, &m)?)
        }
        CheckSpec::Frullani { f } => {
            let f = s.real(f)?;
            let g = lebesgue::generalized_laplace_closed(f, &m, FRULLANI_QUADRATURE_TOL, |r, v| {
                num_complex::Complex64::new(r * v, 0.0)
            })?;
            (g - lebesgue::laplace_closed(f, &m)?).norm()
        }
        CheckSpec::Multiplicator { a, f } => lebesgue::multiplicator_invariance_check(s.real(a)?, s.real(f)?, &cfg()?, exec)?,
        CheckSpec::TotalMass => {
            let stats = lebesgue::total_mass_statistics(&cfg()?, exec)?;
            stats.mean.deviation(s.theta)
        }
        CheckSpec::Truncation => {
            let c = cfg()?;
            (c.truncation_mass_expected() - c.truncation_mass_bound()).max(0.0)
        }
        CheckSpec::TailLaw { thresholds } => {
            let counts = lebesgue::jump_tail_counts(&cfg()?, thresholds, exec)?;
            counts.iter().map(|t| t.count.deviation(t.expected)).fold(0.0, f64::max)
        }
    })
}

fn max_over<T>(items: &[T], f: impl Fn(&T) -> current_reps::Result<f64>) -> Result<f64> {
    let mut worst = 0.0f64;
    for it in items {
        worst = worst.max(f(it)?);
    }
    Ok(worst)
}

enum Points {
    HalfPlane(Vec<IntLabel<HalfPlanePoint>>),
    Ball(Vec<IntLabel<BallPoint>>),
}

fn point_labels(s: &Scenario, names: &[String]) -> Result<Points> {
    let first = names.first().ok_or_else(|| CliError::Schema("label panel is empty".into()))?;
    match s.current(first)? {
        NamedCurrent::HalfPlane(_) => names
            .iter()
            .map(|n| match s.current(n)? {
                NamedCurrent::HalfPlane(c) => Ok(IntLabel::Coherent(CoherentLabel::new(s.variant, c.clone()))),
                other => Err(wrong_kind(n, "half_plane", other)),
            })
            .collect::<Result<_>>()
            .map(Points::HalfPlane),
        NamedCurrent::Ball(_) => names
            .iter()
            .map(|n| match s.current(n)? {
                NamedCurrent::Ball(c) => Ok(IntLabel::Coherent(CoherentLabel::new(s.variant, c.clone()))),
                other => Err(wrong_kind(n, "ball", other)),
            })
            .collect::<Result<_>>()
            .map(Points::Ball),
        other => Err(wrong_kind(first, "half_plane or ball", other)),
    }
}

fn sl2_current(s: &Scenario, name: &str) -> Result<Current<SL2Element>> {
    match s.current(name)? {
        NamedCurrent::Sl2(c) => Ok(c.clone()),
        NamedCurrent::Parabolic(c) => Ok(c.map(ParabolicPair::embed)),
        other => Err(wrong_kind(name, "sl2 or parabolic", other)),
    }
}

fn unitary_current(s: &Scenario, name: &str) -> Result<Current<current_reps::groups::UnitaryElement>> {
    match s.current(name)? {
        NamedCurrent::Unitary(c) => Ok(c.clone()),
        other => Err(wrong_kind(name, "unitary", other)),
    }
}

fn gram_defect<S: HyperbolicSpace>(labels: &[IntLabel<S>], m: &BaseMeasure, exec: Execution) -> Result<f64> {
    let g = intmodel::gram_matrix(labels, m, exec)?;
    Ok((-linalg::min_eigenvalue(&g)).max(0.0))
}

fn kappa_defect<S: HyperbolicSpace>(a: &Current<S>, b: &Current<S>) -> Result<f64> {
    let grid = refine(a.breakpoints(), b.breakpoints());
    let mut worst = 0.0f64;
    for w in grid.windows(2) {
        let x = 0.5 * (w[0] + w[1]);
        let (p, q) = (a.value_at(x), b.value_at(x));
        worst = worst.max((intmodel::kappa_quadrature(p, q)? - intmodel::kappa_closed(p, q)?).norm());
    }
    Ok(worst)
}
