//! Typed experiment configuration with validation and builders.
//!
//! The schema mirrors the TOML config files consumed by the command line:
//! every key is range-checked here and validation errors carry the offending
//! dotted key.

use serde::{Deserialize, Serialize};

use crate::assembly::TailPolicy;
use crate::coeff::{CellFunction, CoefficientField, Structure, SymmetricSpec};
use crate::error::{Error, Result};
use crate::grid::{build_grid, FunctionSpec, Grid};
use crate::kernel::Kernel;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub grid: GridSpec,
    pub kernel: KernelSpec,
    pub coeff: CoeffSpec,
    #[serde(default)]
    pub experiment: ExperimentSpec,
    #[serde(default = "default_source")]
    pub source: FunctionSpec,
    #[serde(default)]
    pub quad: QuadSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub nonlinear: NonlinearSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_source() -> FunctionSpec {
    FunctionSpec::GaussianBump { center: vec![0.0], width: 0.2 }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "one_f")]
    pub box_halfwidth: f64,
}

fn one() -> usize {
    1
}
fn default_n() -> usize {
    256
}
fn one_f() -> f64 {
    1.0
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { dim: 1, n: 256, box_halfwidth: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Fractional,
    PerturbedFractional,
    Tempered,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(rename = "type")]
    pub kind: KernelKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_upsilon")]
    pub upsilon: f64,
}

fn default_alpha() -> f64 {
    0.5
}
fn default_upsilon() -> f64 {
    2.0
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    PeriodicProduct,
    PeriodicSymmetric,
    RandomProduct,
    RandomSymmetric,
    RandomCheckerboard,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CellFnSpec {
    Constant { value: f64 },
    TwoPhase { a: f64, b: f64, theta: f64 },
    Cosine { a: f64, b: f64, #[serde(default)] axis: usize },
}

impl CellFnSpec {
    pub fn build(&self) -> CellFunction {
        match self {
            CellFnSpec::Constant { value } => CellFunction::Constant(*value),
            CellFnSpec::TwoPhase { a, b, theta } => {
                CellFunction::TwoPhase { a: *a, b: *b, theta: *theta }
            }
            CellFnSpec::Cosine { a, b, axis } => CellFunction::Cosine { a: *a, b: *b, axis: *axis },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymmetricFnSpec {
    CosineProduct { base: f64, amplitude: f64 },
    MeanPair { phi: CellFnSpec },
}

impl SymmetricFnSpec {
    pub fn build(&self) -> SymmetricSpec {
        match self {
            SymmetricFnSpec::CosineProduct { base, amplitude } => {
                SymmetricSpec::CosineProduct { base: *base, amplitude: *amplitude }
            }
            SymmetricFnSpec::MeanPair { phi } => SymmetricSpec::MeanPair(phi.build()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoeffSpec {
    pub structure: StructureKind,
    #[serde(default)]
    pub lambda: Option<CellFnSpec>,
    #[serde(default)]
    pub mu: Option<CellFnSpec>,
    #[serde(default)]
    pub symmetric: Option<SymmetricFnSpec>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Checkerboard values {a, b}.
    #[serde(default)]
    pub q_values: Option<[f64; 2]>,
    /// Checkerboard probability of the first value.
    #[serde(default = "half")]
    pub prob: f64,
    /// Single-seed convenience alias; the harness seed list takes precedence.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_gamma() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Linear,
    Nonlinear,
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Linear
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "one_f")]
    pub m: f64,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub mode: Mode,
}

fn default_epsilons() -> Vec<f64> {
    vec![0.25]
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec { m: 1.0, epsilons: default_epsilons(), seeds: Vec::new(), mode: Mode::Linear }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QuadSpec {
    #[serde(default = "default_quad_tol")]
    pub tolerance: f64,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    /// Far-field cutoff; defaults to 16 box half-widths when absent.
    #[serde(default)]
    pub r_far: Option<f64>,
}

fn default_quad_tol() -> f64 {
    1e-6
}
fn default_max_depth() -> usize {
    60
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { tolerance: 1e-6, max_depth: 60, r_far: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_solver_tol")]
    pub tol: f64,
    #[serde(default = "default_solver_iter")]
    pub max_iter: usize,
    #[serde(default = "yes")]
    pub reproducible: bool,
}

fn default_solver_tol() -> f64 {
    1e-8
}
fn default_solver_iter() -> usize {
    50_000
}
fn yes() -> bool {
    true
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec { tol: 1e-8, max_iter: 50_000, reproducible: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NonlinearSpec {
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "half")]
    pub c: f64,
    #[serde(default = "default_nl_tol")]
    pub tol: f64,
    #[serde(default = "default_nl_iter")]
    pub max_iter: usize,
}

fn two() -> f64 {
    2.0
}
fn default_nl_tol() -> f64 {
    1e-8
}
fn default_nl_iter() -> usize {
    500_000
}

impl Default for NonlinearSpec {
    fn default() -> Self {
        NonlinearSpec { p: 2.0, c: 0.5, tol: 1e-8, max_iter: 500_000 }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<String>,
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() <= 1e-9 * x.abs().max(1.0) && x.round() >= 1.0
}

impl ExperimentConfig {
    pub fn r_far(&self) -> f64 {
        self.quad.r_far.unwrap_or(16.0 * self.grid.box_halfwidth)
    }

    pub fn tail_policy(&self) -> TailPolicy {
        TailPolicy { r_far: self.r_far(), max_depth: self.quad.max_depth, tolerance: self.quad.tolerance }
    }

    pub fn build_grid(&self) -> Result<Grid> {
        build_grid(self.grid.dim, self.grid.box_halfwidth, self.grid.n)
    }

    pub fn build_kernel(&self) -> Result<Kernel> {
        let d = self.grid.dim;
        match self.kernel.kind {
            KernelKind::Fractional => {
                if self.experiment.mode == Mode::Nonlinear {
                    Kernel::fractional_with_cap(d, self.kernel.alpha, self.nonlinear.p)
                } else {
                    Kernel::fractional(d, self.kernel.alpha)
                }
            }
            KernelKind::PerturbedFractional => {
                Kernel::perturbed_fractional(d, self.kernel.alpha, self.kernel.upsilon)
            }
            KernelKind::Tempered => Kernel::tempered(d, self.kernel.alpha),
        }
    }

    /// Coefficient template at the first epsilon (re-scaled per sweep point).
    pub fn build_coeff(&self) -> Result<CoefficientField> {
        let eps = *self.experiment.epsilons.first().unwrap_or(&0.25);
        let lambda = || -> Result<CellFunction> {
            Ok(self
                .coeff
                .lambda
                .as_ref()
                .map(|s| s.build())
                .unwrap_or(CellFunction::Constant(1.0)))
        };
        let mu = || -> Result<CellFunction> {
            Ok(self.coeff.mu.as_ref().map(|s| s.build()).unwrap_or(CellFunction::Constant(1.0)))
        };
        let structure = match self.coeff.structure {
            StructureKind::PeriodicProduct => {
                Structure::PeriodicProduct { lambda: lambda()?, mu: mu()? }
            }
            StructureKind::RandomProduct => Structure::RandomProduct { lambda: lambda()?, mu: mu()? },
            StructureKind::PeriodicSymmetric => Structure::PeriodicSymmetric(
                self.coeff
                    .symmetric
                    .as_ref()
                    .ok_or_else(|| Error::config("coeff.symmetric", "required for symmetric structure"))?
                    .build(),
            ),
            StructureKind::RandomSymmetric => Structure::RandomSymmetric(
                self.coeff
                    .symmetric
                    .as_ref()
                    .ok_or_else(|| Error::config("coeff.symmetric", "required for symmetric structure"))?
                    .build(),
            ),
            StructureKind::RandomCheckerboard => {
                let [a, b] = self.coeff.q_values.ok_or_else(|| {
                    Error::config("coeff.q_values", "required for the checkerboard structure")
                })?;
                Structure::RandomCheckerboard { a, b, prob_a: self.coeff.prob, mu: mu()? }
            }
        };
        CoefficientField::new(self.grid.dim, structure, self.coeff.gamma, eps)
            .map_err(|e| Error::config("coeff", e.to_string()))
    }

    /// Effective seed list: the experiment list, falling back to coeff.seed.
    pub fn seed_list(&self) -> Vec<u64> {
        if !self.experiment.seeds.is_empty() {
            self.experiment.seeds.clone()
        } else if let Some(s) = self.coeff.seed {
            vec![s]
        } else {
            Vec::new()
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(
            self.coeff.structure,
            StructureKind::RandomProduct
                | StructureKind::RandomSymmetric
                | StructureKind::RandomCheckerboard
        )
    }

    /// Range-check every field; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.grid.dim != 1 && self.grid.dim != 2 {
            return Err(Error::config("grid.dim", format!("must be 1 or 2, got {}", self.grid.dim)));
        }
        if self.grid.n == 0 {
            return Err(Error::config("grid.n", "must be a positive integer"));
        }
        if !(self.grid.box_halfwidth > 0.0) {
            return Err(Error::config("grid.box_halfwidth", "must be positive"));
        }
        let alpha_hi = match self.experiment.mode {
            Mode::Linear => 2.0,
            Mode::Nonlinear => self.nonlinear.p.min(2.0),
        };
        if !(self.kernel.alpha > 0.0 && self.kernel.alpha < alpha_hi) {
            return Err(Error::config(
                "kernel.alpha",
                format!("must lie in (0, {alpha_hi}), got {}", self.kernel.alpha),
            ));
        }
        if self.kernel.upsilon < 1.0 {
            return Err(Error::config("kernel.upsilon", "must be >= 1"));
        }
        if self.experiment.mode == Mode::Nonlinear && self.kernel.kind == KernelKind::Tempered {
            // the nonlinear theory needs two-sided power bounds on the kernel;
            // the tempered kernel has no power lower bound
            return Err(Error::config(
                "kernel.type",
                "nonlinear mode requires a kernel with two-sided power bounds (fractional or perturbed_fractional)",
            ));
        }
        if self.coeff.gamma < 1.0 {
            return Err(Error::config("coeff.gamma", "must be >= 1"));
        }
        if !(self.coeff.prob > 0.0 && self.coeff.prob < 1.0) {
            return Err(Error::config("coeff.prob", "must lie in (0, 1)"));
        }
        if !(self.experiment.m > 0.0) {
            return Err(Error::config("experiment.m", "must be positive"));
        }
        if self.experiment.epsilons.is_empty() {
            return Err(Error::config("experiment.epsilons", "must be nonempty"));
        }
        for w in self.experiment.epsilons.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::config("experiment.epsilons", "must be strictly decreasing"));
            }
        }
        let h = 2.0 * self.grid.box_halfwidth / self.grid.n as f64;
        for &eps in &self.experiment.epsilons {
            if !(eps > 0.0) {
                return Err(Error::config("experiment.epsilons", "entries must be positive"));
            }
            let cells_per_period = eps / h;
            let periods_per_box = 2.0 * self.grid.box_halfwidth / eps;
            if !is_integer(cells_per_period) || !is_integer(periods_per_box) {
                return Err(Error::config(
                    "experiment.epsilons",
                    format!(
                        "epsilon {eps} is misaligned: cell width {h} must divide it and the box must hold a whole number of periods"
                    ),
                ));
            }
        }
        if self.is_random() && self.seed_list().is_empty() {
            return Err(Error::config(
                "experiment.seeds",
                "random coefficient structures need at least one seed",
            ));
        }
        if !(self.quad.tolerance > 0.0 && self.quad.tolerance <= 1e-4) {
            return Err(Error::config("quad.tolerance", "must lie in (0, 1e-4]"));
        }
        if self.r_far() <= self.grid.box_halfwidth {
            return Err(Error::config("quad.r_far", "must exceed the box half-width"));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol <= 1e-6) {
            return Err(Error::config("solver.tol", "must lie in (0, 1e-6]"));
        }
        if self.experiment.mode == Mode::Nonlinear {
            if !(self.nonlinear.p > 1.0) {
                return Err(Error::config("nonlinear.p", "must exceed 1"));
            }
            if !(self.nonlinear.c > 0.0) {
                return Err(Error::config("nonlinear.c", "must be positive"));
            }
        }
        // structure-specific requirements, and coefficient range checks
        match self.coeff.structure {
            StructureKind::PeriodicSymmetric | StructureKind::RandomSymmetric => {
                if self.coeff.symmetric.is_none() {
                    return Err(Error::config("coeff.symmetric", "required for symmetric structure"));
                }
            }
            StructureKind::RandomCheckerboard => {
                if self.coeff.q_values.is_none() {
                    return Err(Error::config("coeff.q_values", "required for the checkerboard structure"));
                }
            }
            _ => {}
        }
        self.build_coeff()?;
        self.build_kernel().map_err(|e| Error::config("kernel", e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_toml() -> &'static str {
        r#"
            [kernel]
            type = "fractional"

            [coeff]
            structure = "periodic_product"
        "#
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: ExperimentConfig = toml::from_str(minimal_toml()).unwrap();
        assert_eq!(cfg.grid.n, 256);
        assert_eq!(cfg.grid.box_halfwidth, 1.0);
        assert_eq!(cfg.experiment.m, 1.0);
        assert_eq!(cfg.solver.tol, 1e-8);
        assert_eq!(cfg.kernel.alpha, 0.5);
        cfg.validate().unwrap();
    }

    #[test]
    fn alpha_out_of_range_names_key() {
        let mut cfg: ExperimentConfig = toml::from_str(minimal_toml()).unwrap();
        cfg.kernel.alpha = 2.5;
        match cfg.validate() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "kernel.alpha"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn misaligned_epsilon_rejected() {
        let mut cfg: ExperimentConfig = toml::from_str(minimal_toml()).unwrap();
        cfg.experiment.epsilons = vec![0.3];
        assert!(matches!(cfg.validate(), Err(Error::Config { key, .. }) if key == "experiment.epsilons"));
    }

    #[test]
    fn roundtrip_through_toml() {
        let text = r#"
            [grid]
            dim = 1
            n = 128
            box_halfwidth = 1.0

            [kernel]
            type = "fractional"
            alpha = 0.5

            [coeff]
            structure = "periodic_product"
            gamma = 2.0

            [coeff.lambda]
            type = "two_phase"
            a = 1.0
            b = 2.0
            theta = 0.5

            [coeff.mu]
            type = "constant"
            value = 1.0

            [experiment]
            m = 1.0
            epsilons = [0.25, 0.125]
            mode = "linear"

            [source]
            type = "gaussian_bump"
            center = [0.0]
            width = 0.2
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        cfg.validate().unwrap();
        let re = toml::to_string(&cfg).unwrap();
        let cfg2: ExperimentConfig = toml::from_str(&re).unwrap();
        assert_eq!(cfg, cfg2);
    }
}
