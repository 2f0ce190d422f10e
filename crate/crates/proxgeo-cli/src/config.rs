//! JSON configuration schemas, one per command.

use proxgeo::centers::WindowPolicy;
use proxgeo::{
    ConvexSet, Functional, ModulusDescriptor, Operator, RateHypothesis, RateKind, Sampler,
    SpaceConfig, SpacePoint,
};
use serde::Deserialize;

fn default_tol() -> f64 {
    1e-7
}

fn default_center_tol() -> f64 {
    1e-5
}

fn default_k_max() -> usize {
    5
}

fn default_tail() -> usize {
    64
}

fn default_checks() -> u64 {
    4
}

fn default_trace_steps() -> usize {
    1_000
}

fn default_threshold() -> f64 {
    10.0
}

fn default_window() -> usize {
    64
}

fn default_orbit_cap() -> f64 {
    1e6
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub space: SpaceConfig,
    pub sampler: Sampler,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Run the CN check even on spaces that do not claim the inequality.
    #[serde(default)]
    pub force_cn: bool,
    /// Additionally audit this modulus of uniform convexity.
    #[serde(default)]
    pub modulus: Option<ModulusDescriptor>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditOperatorConfig {
    pub space: SpaceConfig,
    pub operator: Operator,
    /// Defaults to 0.1, 0.2, ..., 0.9.
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    pub pairs: usize,
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterateConfig {
    pub space: SpaceConfig,
    pub operator: Operator,
    pub x0: SpacePoint,
    pub steps: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_tail")]
    pub tail: usize,
    /// Fejér anchors; when omitted the audit is skipped.
    #[serde(default)]
    pub anchors: Vec<SpacePoint>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub space: SpaceConfig,
    pub operator: Operator,
    pub x0: SpacePoint,
    pub kinds: Vec<RateKind>,
    pub epsilons: Vec<f64>,
    pub lambda: f64,
    pub b: f64,
    #[serde(default)]
    pub modulus: Option<ModulusDescriptor>,
    pub hypothesis: RateHypothesis,
    #[serde(default = "default_checks")]
    pub checks: u64,
    /// Length of the exported CSV trace (certification itself streams).
    #[serde(default = "default_trace_steps")]
    pub trace_steps: usize,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum StepSizes {
    Constant { value: f64, count: usize },
    List { values: Vec<f64> },
}

impl StepSizes {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            StepSizes::Constant { value, count } => vec![*value; *count],
            StepSizes::List { values } => values.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxConfig {
    pub space: SpaceConfig,
    pub functional: Functional,
    pub x0: SpacePoint,
    pub step_sizes: StepSizes,
    #[serde(default = "default_threshold")]
    pub divergence_threshold: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentersConfig {
    pub space: SpaceConfig,
    pub operator: Operator,
    pub x0: SpacePoint,
    pub steps: usize,
    /// Constraint set for the centers (defaults to the whole space).
    #[serde(default)]
    pub set: Option<ConvexSet>,
    #[serde(default)]
    pub windows: Vec<WindowPolicy>,
    #[serde(default = "default_center_tol")]
    pub tol: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnionFixpointConfig {
    pub space: SpaceConfig,
    pub operator: Operator,
    pub pieces: Vec<ConvexSet>,
    pub z: SpacePoint,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_orbit_cap")]
    pub orbit_cap: f64,
}
