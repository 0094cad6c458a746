//! Run configuration: a versioned TOML document describing the problem and the experiments.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain_grid::{build_grid, BoundaryData, Domain, FaceName, Grid, TPatch};
use crate::error::{AlapError, Result};
use crate::profiles::{Profile, ProfileSpec};
use crate::solver::SolverConfig;
use crate::vector_field::{FieldH, FieldSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub domain: DomainSpec,
    pub grid: GridSpec,
    pub profile: ProfileSpec,
    pub field: FieldSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub experiments: Experiments,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "one")]
    pub m_ceiling: f64,
    /// Parts of `∂Ω` carrying `u = 0`.
    #[serde(default)]
    pub t: Vec<TPatch>,
    /// Dirichlet data on the rest of the boundary.
    pub boundary: BoundaryData,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Node counts per axis, one entry per resolution.
    pub resolutions: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Experiments {
    pub check_profile: ProfileCheck,
    pub check_barriers: BarrierCheck,
    pub trace: TraceCheck,
    pub free_boundary: FreeBoundaryCheck,
    pub growth: GrowthCheck,
    pub boundary_growth: BoundaryGrowthCheck,
    pub rescale: RescaleCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileCheck {
    pub samples: usize,
    pub t_min: f64,
    pub t_max: f64,
    /// Random `(ξ, ζ)` pairs for the monotonicity gap.
    pub pairs: usize,
    /// Profiles checked in addition to the run profile.
    pub extra: Vec<ProfileSpec>,
}

impl Default for ProfileCheck {
    fn default() -> Self {
        ProfileCheck { samples: 200, t_min: 1e-6, t_max: 1e6, pairs: 10_000, extra: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierCheck {
    /// Radial barrier `r`, `ε` and height `m`.
    pub radius: f64,
    pub eps: f64,
    pub m: f64,
    /// Finite-difference steps of the `Δ_A` cross-check.
    pub fd_steps: Vec<f64>,
    /// Hopf ring radius, number of interior `κ` points and the `ε` values.
    pub hopf_radius: f64,
    pub hopf_kappa_points: usize,
    pub hopf_eps: Vec<f64>,
    /// Boundary barrier radius `R₀`.
    pub r0: f64,
    pub ode_samples: usize,
}

impl Default for BarrierCheck {
    fn default() -> Self {
        BarrierCheck {
            radius: 0.25,
            eps: 0.05,
            m: 1.0,
            fd_steps: vec![1e-2, 5e-3, 2.5e-3],
            hopf_radius: 0.25,
            hopf_kappa_points: 5,
            hopf_eps: vec![0.1, 1.0],
            r0: 0.2,
            ode_samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceCheck {
    pub h: f64,
    /// Orbit seeds per cross-section axis.
    pub omegas: usize,
    /// Jacobian comparison samples per orbit.
    pub samples_per_orbit: usize,
    pub fd_step: f64,
}

impl Default for TraceCheck {
    fn default() -> Self {
        TraceCheck { h: 0.5, omegas: 9, samples_per_orbit: 8, fd_step: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreeBoundaryCheck {
    pub levels: Vec<f64>,
    pub omegas: usize,
    /// Overrides of the default tolerances.
    pub chi_tol: Option<f64>,
    pub lsc_tol: Option<f64>,
}

impl Default for FreeBoundaryCheck {
    fn default() -> Self {
        FreeBoundaryCheck { levels: vec![0.1, 0.2, 0.3], omegas: 33, chi_tol: None, lsc_tol: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthCheck {
    pub count: usize,
}

impl Default for GrowthCheck {
    fn default() -> Self {
        GrowthCheck { count: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryGrowthCheck {
    pub face: FaceName,
    pub r0: f64,
    /// Tube width around `S₀`; defaults to `R₀`.
    pub width: Option<f64>,
}

impl Default for BoundaryGrowthCheck {
    fn default() -> Self {
        BoundaryGrowthCheck { face: FaceName::Bottom, r0: 0.1, width: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RescaleCheck {
    pub x0: Vec<f64>,
    pub radii: Vec<f64>,
}

impl Default for RescaleCheck {
    fn default() -> Self {
        RescaleCheck { x0: vec![0.5, 0.25], radii: vec![0.125, 0.0625] }
    }
}

/// The constructed problem objects of a configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub domain: Domain,
    pub profile: Profile,
    pub field: FieldH,
    pub grids: Vec<Grid>,
}

fn cfg_err(what: &str, e: AlapError) -> AlapError {
    AlapError::Config(format!("{what}: {e}"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| AlapError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AlapError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| AlapError::Config(e.to_string()))
    }

    /// Schema and constructibility checks; every error is a [`AlapError::Config`].
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(AlapError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.grid.resolutions.is_empty() {
            return Err(AlapError::Config("grid.resolutions is empty".into()));
        }
        self.solver.validate().map_err(|e| cfg_err("solver", e))?;
        for p in &self.experiments.check_profile.extra {
            p.build().map_err(|e| cfg_err("experiments.check_profile.extra", e))?;
        }
        self.build().map(|_| ())
    }

    pub fn build(&self) -> Result<Problem> {
        let d = &self.domain;
        let domain = Domain::new(d.lower.clone(), d.upper.clone(), &d.t, d.boundary.clone(), d.m_ceiling).map_err(|e| cfg_err("domain", e))?;
        let profile = self.profile.build().map_err(|e| cfg_err("profile", e))?;
        let field = self.field.build(&domain).map_err(|e| cfg_err("field", e))?;
        let grids = self
            .grid
            .resolutions
            .iter()
            .map(|r| build_grid(&domain, r).map_err(|e| cfg_err("grid", e)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Problem { domain, profile, field, grids })
    }

    /// The manufactured dam problem on the unit square with `H = (0, a(1))`.
    pub fn dam(p: f64, resolutions: &[usize]) -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            output_dir: default_output_dir(),
            domain: DomainSpec {
                lower: vec![0.0, 0.0],
                upper: vec![1.0, 1.0],
                m_ceiling: 1.0,
                t: vec![TPatch { face: FaceName::Top, lower: None, upper: None }],
                boundary: BoundaryData::Dam { level: 0.6, slope: 1.0 },
            },
            grid: GridSpec { resolutions: resolutions.iter().map(|&n| vec![n, n]).collect() },
            profile: ProfileSpec::Power { p },
            // a(1) = 1 for every power profile
            field: FieldSpec::Constant { c: vec![0.0, 1.0] },
            solver: SolverConfig::default(),
            experiments: Experiments::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dam_config_round_trips_through_toml() {
        let cfg = RunConfig::dam(2.0, &[33, 65]);
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(back.build().unwrap().grids.len(), 2);
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        let text = RunConfig::dam(2.0, &[17]).to_toml().unwrap();
        let bad = text.replacen("schema_version = 1", "schema_version = 1\ncolour = \"red\"", 1);
        assert!(matches!(RunConfig::from_toml(&bad), Err(AlapError::Config(_))));
        let bad = text.replacen("schema_version = 1", "schema_version = 7", 1);
        assert!(matches!(RunConfig::from_toml(&bad), Err(AlapError::Config(_))));
        let bad = text.replacen("inner_tol = 0.000000001", "inner_tol = -1.0", 1);
        assert!(matches!(RunConfig::from_toml(&bad), Err(AlapError::Config(_))));
        let bad = text.replacen("p = 2.0", "p = 0.5", 1);
        assert!(matches!(RunConfig::from_toml(&bad), Err(AlapError::Config(_))));
    }

    #[test]
    fn minimal_document_uses_defaults() {
        let text = r#"
schema_version = 1
[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]
t = [{ face = "top" }]
boundary = { kind = "dam", level = 0.6, slope = 1.0 }
[grid]
resolutions = [[17, 17]]
[profile]
family = "power"
p = 3.0
[field]
kind = "constant"
c = [0.0, 1.0]
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.experiments.free_boundary.levels, vec![0.1, 0.2, 0.3]);
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
    }
}
