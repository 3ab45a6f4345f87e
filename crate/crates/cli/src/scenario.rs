//! Scenario files: named currents, a sampler, a list of checks and where to
//! write results.
//!
//! Currents use the segment encoding `[{"until": t, "value": v}, ...]` and
//! carry a `kind` tag that fixes how `v` is read:
//!
//! | kind        | value                                              |
//! |-------------|----------------------------------------------------|
//! | `real`      | number                                             |
//! | `parabolic` | `{"epsilon": e, "gamma": g}`                       |
//! | `sl2`       | `{"alpha", "beta", "gamma", "delta"}`              |
//! | `unitary`   | `{"n": n, "re": [[..]], "im": [[..]]}`             |
//! | `half_plane`| `{"re": u, "im": v}` with `v > 0`                  |
//! | `ball`      | `{"a": [re, im], "b": [[re, im], ...]}`            |

use std::collections::BTreeMap;
use std::path::Path;

use current_reps::currents::{BaseMeasure, Current};
use current_reps::geometry::{BallPoint, HalfPlanePoint};
use current_reps::groups::{GroupElement, GroupKind, ParabolicPair, SL2Element, UnitaryElement};
use current_reps::lebesgue::SamplerConfig;
use current_reps::specrep::Sign;
use current_reps::Tolerances;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "segments", rename_all = "snake_case")]
pub enum NamedCurrent {
    Real(Current<f64>),
    Parabolic(Current<ParabolicPair>),
    Sl2(Current<SL2Element>),
    Unitary(Current<UnitaryElement>),
    HalfPlane(Current<HalfPlanePoint>),
    Ball(Current<BallPoint>),
}

impl NamedCurrent {
    pub fn kind(&self) -> &'static str {
        match self {
            NamedCurrent::Real(_) => "real",
            NamedCurrent::Parabolic(_) => "parabolic",
            NamedCurrent::Sl2(_) => "sl2",
            NamedCurrent::Unitary(_) => "unitary",
            NamedCurrent::HalfPlane(_) => "half_plane",
            NamedCurrent::Ball(_) => "ball",
        }
    }
}

/// Sampler settings; the intensity comes from the scenario's `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSpec {
    pub eps_trunc: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        let d = SamplerConfig::default();
        SamplerSpec { eps_trunc: d.eps_trunc, n_samples: d.n_samples, seed: d.seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// `b(g1 g2) = b(g1) + T(g1) b(g2)` pointwise.
    CocycleLaw { g1: String, g2: String },
    /// Fock projective multiplier against its 2-cocycle prediction.
    FockProjective { g1: String, g2: String },
    /// Fock coherent Gram preserved by `U(g)`; labels are parabolic currents `h`
    /// giving coherent vectors `EXP b(h)`.
    FockUnitarity { g: String, labels: Vec<String> },
    /// Gram panel of coherent labels is positive semidefinite.
    GramPsd { labels: Vec<String> },
    IntUnitarity { g: String, labels: Vec<String> },
    /// Spread of the projective multiplier over a label panel.
    IntProjective { g1: String, g2: String, labels: Vec<String> },
    /// Cocycle formula, vacuum pairing and Fock modulus agree.
    SphericalRoutes { g: String },
    /// Monte Carlo vacuum pairing against its closed form, in standard errors.
    SphericalMc { g: String },
    /// Two routes to the zero-variant Gram after a parabolic move.
    Restriction { g: String, labels: Vec<String> },
    /// Closed form against quadrature for the Gram kernel, pointwise.
    Kappa { p1: String, p2: String },
    LaplaceMc { f: String },
    /// Generalized Laplace with `phi = r f` against the closed form.
    Frullani { f: String },
    /// Laplace identity under the multiplicator `r -> a r`.
    Multiplicator { a: String, f: String },
    /// Mean total mass against `theta`.
    TotalMass,
    /// Expected discarded mass against `theta * eps_trunc`.
    Truncation,
    /// Jump counts above thresholds against `theta E1(x)`.
    TailLaw { thresholds: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    #[serde(flatten)]
    pub spec: CheckSpec,
    /// Overrides the scenario tolerance for this check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphericalSpec {
    pub currents: Vec<String>,
    #[serde(default = "all_routes")]
    pub routes: Vec<Route>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Cocycle,
    Laplace,
    Mc,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Cocycle => "cocycle",
            Route::Laplace => "laplace",
            Route::Mc => "mc",
        }
    }
}

fn all_routes() -> Vec<Route> {
    vec![Route::Cocycle, Route::Laplace, Route::Mc]
}

/// Cartesian grid of points for the kernel table, and the group element
/// whose multipliers are tabulated.
///
/// Half-plane points are `x + i y`. Ball points take `b = (x + i y, 0, ...)`
/// and `a = -(1 + |b|^2) / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub element: GroupElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub report: String,
    pub spherical: String,
    pub samples: String,
    pub samples_summary: String,
    /// Configurations written by `sample`; statistics always use `n_samples`.
    pub sample_count: usize,
    pub kernels: String,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            report: "verify.json".into(),
            spherical: "spherical.csv".into(),
            samples: "samples.csv".into(),
            samples_summary: "samples_summary.json".into(),
            sample_count: 1000,
            kernels: "kernels.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub group_kind: GroupKind,
    pub variant: Sign,
    #[serde(default = "unit")]
    pub theta: f64,
    #[serde(default)]
    pub currents: BTreeMap<String, NamedCurrent>,
    #[serde(default)]
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub checks: Vec<CheckEntry>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Multiplies every tolerance; `0` turns every nonzero residual into a failure.
    #[serde(default = "unit")]
    pub tolerance_scale: f64,
    #[serde(default)]
    pub spherical: Option<SphericalSpec>,
    #[serde(default)]
    pub kernels: Option<KernelSpec>,
    #[serde(default)]
    pub outputs: Outputs,
}

fn unit() -> f64 {
    1.0
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let s: Scenario = serde_json::from_str(&text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        BaseMeasure::new(self.theta).map_err(|e| CliError::Schema(e.to_string()))?;
        self.sampler_config(self.sampler.seed).map_err(|e| CliError::Schema(e.to_string()))?;
        if self.tolerance_scale.is_nan() || self.tolerance_scale < 0.0 {
            return Err(CliError::Schema("tolerance_scale must be nonnegative".into()));
        }
        for c in &self.checks {
            for name in c.spec.references() {
                self.current(name)?;
            }
        }
        if let Some(sph) = &self.spherical {
            for name in &sph.currents {
                self.parabolic(name)?;
            }
        }
        Ok(())
    }

    pub fn measure(&self) -> BaseMeasure {
        BaseMeasure::new(self.theta).expect("validated")
    }

    pub fn sampler_config(&self, seed: u64) -> current_reps::Result<SamplerConfig> {
        SamplerConfig::new(self.theta, self.sampler.eps_trunc, self.sampler.n_samples, seed)
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.scaled(self.tolerance_scale)
    }

    pub fn current(&self, name: &str) -> Result<&NamedCurrent> {
        self.currents.get(name).ok_or_else(|| CliError::Schema(format!("unknown current '{name}'")))
    }

    pub fn parabolic(&self, name: &str) -> Result<&Current<ParabolicPair>> {
        match self.current(name)? {
            NamedCurrent::Parabolic(c) => Ok(c),
            other => Err(wrong_kind(name, "parabolic", other)),
        }
    }

    pub fn real(&self, name: &str) -> Result<&Current<f64>> {
        match self.current(name)? {
            NamedCurrent::Real(c) => Ok(c),
            other => Err(wrong_kind(name, "real", other)),
        }
    }
}

pub fn wrong_kind(name: &str, expected: &str, got: &NamedCurrent) -> CliError {
    CliError::Schema(format!("current '{name}' has kind '{}', expected {expected}", got.kind()))
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::CocycleLaw { .. } => "cocycle_law",
            CheckSpec::FockProjective { .. } => "fock_projective",
            CheckSpec::FockUnitarity { .. } => "fock_unitarity",
            CheckSpec::GramPsd { .. } => "gram_psd",
            CheckSpec::IntUnitarity { .. } => "int_unitarity",
            CheckSpec::IntProjective { .. } => "int_projective",
            CheckSpec::SphericalRoutes { .. } => "spherical_routes",
            CheckSpec::SphericalMc { .. } => "spherical_mc",
            CheckSpec::Restriction { .. } => "restriction",
            CheckSpec::Kappa { .. } => "kappa",
            CheckSpec::LaplaceMc { .. } => "laplace_mc",
            CheckSpec::Frullani { .. } => "frullani",
            CheckSpec::Multiplicator { .. } => "multiplicator",
            CheckSpec::TotalMass => "total_mass",
            CheckSpec::Truncation => "truncation",
            CheckSpec::TailLaw { .. } => "tail_law",
        }
    }

    /// Names of the currents this check reads.
    pub fn references(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        match self {
            CheckSpec::CocycleLaw { g1, g2 } | CheckSpec::FockProjective { g1, g2 } => out.extend([g1.as_str(), g2.as_str()]),
            CheckSpec::FockUnitarity { g, labels }
            | CheckSpec::IntUnitarity { g, labels }
            | CheckSpec::Restriction { g, labels } => {
                out.push(g);
                out.extend(labels.iter().map(String::as_str));
            }
            CheckSpec::GramPsd { labels } => out.extend(labels.iter().map(String::as_str)),
            CheckSpec::IntProjective { g1, g2, labels } => {
                out.extend([g1.as_str(), g2.as_str()]);
                out.extend(labels.iter().map(String::as_str));
            }
            CheckSpec::SphericalRoutes { g } | CheckSpec::SphericalMc { g } => out.push(g),
            CheckSpec::Kappa { p1, p2 } => out.extend([p1.as_str(), p2.as_str()]),
            CheckSpec::LaplaceMc { f } | CheckSpec::Frullani { f } => out.push(f),
            CheckSpec::Multiplicator { a, f } => out.extend([a.as_str(), f.as_str()]),
            CheckSpec::TotalMass | CheckSpec::Truncation | CheckSpec::TailLaw { .. } => {}
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_encoding_parses() {
        let json = r#"{"kind": "parabolic", "segments": [
            {"until": 0.5, "value": {"epsilon": 2.0, "gamma": 0.0}},
            {"until": 1.0, "value": {"epsilon": 1.0, "gamma": 1.0}}]}"#;
        let c: NamedCurrent = serde_json::from_str(json).unwrap();
        match c {
            NamedCurrent::Parabolic(c) => assert_eq!(c.breakpoints(), &[0.0, 0.5, 1.0]),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn invalid_values_are_schema_errors() {
        let json = r#"{"kind": "half_plane", "segments": [{"until": 1.0, "value": {"re": 0.0, "im": -1.0}}]}"#;
        assert!(serde_json::from_str::<NamedCurrent>(json).is_err());
        let json = r#"{"kind": "real", "segments": [{"until": 0.7, "value": 1.0}]}"#;
        assert!(serde_json::from_str::<NamedCurrent>(json).is_err());
    }

    #[test]
    fn unresolved_names_are_rejected() {
        let s: Scenario = serde_json::from_str(
            r#"{"group_kind": "sl2", "variant": "plus", "checks": [{"check": "spherical_routes", "g": "missing"}]}"#,
        )
        .unwrap();
        assert!(matches!(s.validate(), Err(CliError::Schema(_))));
    }
}
