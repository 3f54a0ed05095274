//! Epsilon-sweep and ensemble experiments: solve the oscillating problems and
//! the homogenized reference on the same grid, and record the convergence
//! diagnostics that make the limit theorems observable at desk scale.

use std::time::Instant;

use crate::assembly::{
    assemble_system, assemble_unit, gagliardo_p_from_unit, seminorm_sq_from_unit, AssembledSystem,
    CoeffWeight, EffectiveWeight,
};
use crate::coeff::{effective_coefficient, EffectiveQuad};
use crate::config::{ExperimentConfig, Mode};
use crate::error::{Error, Result};
use crate::grid::{project, FunctionSpec, GridFunction};
use crate::solver::{functional_value, minimize_functional, solve_linear, PhiSpec};

/// Extra per-record measurements kept in memory (not serialized to CSV).
#[derive(Clone, Debug)]
pub struct RecordDiagnostics {
    /// ||u_eps||_{L2}.
    pub solution_l2: f64,
    /// Gagliardo seminorm of u_eps at order alpha/2.
    pub solution_seminorm: f64,
    /// ||u_eps||_{L2, nu} (weighted by the assembled mass).
    pub solution_l2_nu: f64,
    /// ||f||_{L2, nu} / m, the right-hand side of the a-priori bound.
    pub apriori_bound: f64,
    /// ||u_eps - u_0||_{L^p} in nonlinear mode.
    pub lp_error: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub seed: Option<u64>,
    pub l2_error: f64,
    pub seminorm_error: f64,
    pub energy_eps: f64,
    pub energy_hom: f64,
    pub weak_gaps: [f64; 3],
    pub iterations: usize,
    pub runtime_ms: u64,
    pub diagnostics: RecordDiagnostics,
}

/// A sweep abort: whatever completed, plus the cause.
#[derive(Debug)]
pub struct SweepFailure {
    pub partial: Vec<SweepRecord>,
    pub source: Error,
}

impl std::fmt::Display for SweepFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "sweep aborted after {} records: {}", self.partial.len(), self.source)
    }
}

impl std::error::Error for SweepFailure {}

pub const CSV_HEADER: &str = "epsilon,seed,l2_error,seminorm_error,energy_eps,energy_hom,weak_gap_1,weak_gap_2,weak_gap_3,iterations,runtime_ms";

/// Serialize records in the fixed CSV schema. In reproducible mode the
/// runtime column is written as 0 so reruns are byte-identical.
pub fn csv_string(records: &[SweepRecord], reproducible: bool) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let seed = r.seed.map(|s| s.to_string()).unwrap_or_default();
        let runtime = if reproducible { 0 } else { r.runtime_ms };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.epsilon,
            seed,
            r.l2_error,
            r.seminorm_error,
            r.energy_eps,
            r.energy_hom,
            r.weak_gaps[0],
            r.weak_gaps[1],
            r.weak_gaps[2],
            r.iterations,
            runtime
        ));
    }
    out
}

/// F(u) = u.Au + m u.Mu - 2 b.u, the quadratic energy of the linear mode.
fn quadratic_energy(sys: &AssembledSystem, u: &GridFunction) -> f64 {
    let uau = sys.a.quadratic_form(&u.values);
    let umu: f64 = u.values.iter().zip(&sys.mass).map(|(v, m)| m * v * v).sum();
    let bu: f64 = u.values.iter().zip(&sys.b).map(|(v, b)| v * b).sum();
    uau + sys.m * umu - 2.0 * bu
}

fn weighted_norm(sys: &AssembledSystem, u: &GridFunction) -> f64 {
    u.values.iter().zip(&sys.mass).map(|(v, m)| m * v * v).sum::<f64>().sqrt()
}

/// The three fixed test functions used for the weak-convergence gaps.
pub fn weak_test_functions(half_width: f64) -> [FunctionSpec; 3] {
    let w = half_width / 8.0;
    [
        FunctionSpec::GaussianBump { center: vec![-half_width / 2.0], width: w },
        FunctionSpec::GaussianBump { center: vec![0.0], width: w },
        FunctionSpec::GaussianBump { center: vec![half_width / 2.0], width: w },
    ]
}

fn solve_instance(
    cfg: &ExperimentConfig,
    sys: &AssembledSystem,
    phi: Option<&PhiSpec>,
) -> Result<(GridFunction, usize)> {
    match phi {
        None => {
            let rep = solve_linear(sys, cfg.solver.tol, cfg.solver.max_iter)?;
            if !rep.converged {
                return Err(Error::SolverFailed { residual: rep.residual, iterations: rep.iterations });
            }
            Ok((rep.solution, rep.iterations))
        }
        Some(phi) => {
            let start = GridFunction::zeros(sys.grid);
            let rep = minimize_functional(sys, phi, &start, cfg.nonlinear.tol, cfg.nonlinear.max_iter)?;
            Ok((rep.solution, rep.iterations))
        }
    }
}

/// Run the sweep: for each (epsilon, seed) draw the realization, assemble and
/// solve; solve the homogenized problem once and difference against it.
pub fn run_sweep(cfg: &ExperimentConfig) -> std::result::Result<Vec<SweepRecord>, SweepFailure> {
    run_sweep_inner(cfg).map_err(|(partial, source)| SweepFailure { partial, source })
}

fn run_sweep_inner(
    cfg: &ExperimentConfig,
) -> std::result::Result<Vec<SweepRecord>, (Vec<SweepRecord>, Error)> {
    let fail = |e: Error| (Vec::new(), e);
    cfg.validate().map_err(fail)?;
    let grid = cfg.build_grid().map_err(fail)?;
    let kernel = cfg.build_kernel().map_err(fail)?;
    let tail = cfg.tail_policy();
    let f = project(grid, &cfg.source);
    let m = cfg.experiment.m;
    let template = cfg.build_coeff().map_err(fail)?;
    let phi = match cfg.experiment.mode {
        Mode::Linear => None,
        Mode::Nonlinear => Some(PhiSpec::new(cfg.nonlinear.p, cfg.nonlinear.c).map_err(fail)?),
    };

    // shared unit-weight system for seminorms
    let unit_sys = assemble_unit(grid, kernel.alpha, &tail).map_err(fail)?;

    // homogenized reference: solved once, reused by every record
    let eff_quad = EffectiveQuad::default();
    let eff = effective_coefficient(&template, &eff_quad).map_err(fail)?;
    let scale_nu = template.mean_nu(&eff_quad).map_err(fail)?;
    let eff_weight = EffectiveWeight { eff: &eff, dim: grid.dim };
    let hom_sys = assemble_system(grid, &kernel, &eff_weight, m, &f, &tail).map_err(fail)?;
    let (u_hom, _) = solve_instance(cfg, &hom_sys, phi.as_ref()).map_err(fail)?;
    let energy_hom = scale_nu
        * match &phi {
            None => quadratic_energy(&hom_sys, &u_hom),
            Some(p) => functional_value(&hom_sys, p, &u_hom),
        };

    let tests = weak_test_functions(grid.half_width);
    let test_fns: Vec<GridFunction> = tests.iter().map(|t| project(grid, t)).collect();

    let seeds: Vec<Option<u64>> = if cfg.is_random() {
        cfg.seed_list().into_iter().map(Some).collect()
    } else {
        vec![None]
    };

    let mut records = Vec::new();
    for &eps in &cfg.experiment.epsilons {
        for &seed in &seeds {
            let started = Instant::now();
            let task = || -> Result<SweepRecord> {
                let mut coeff = template.with_epsilon(eps);
                if let Some(s) = seed {
                    coeff = coeff.draw_realization(s)?;
                }
                let weight = CoeffWeight::new(&coeff)?;
                let sys = assemble_system(grid, &kernel, &weight, m, &f, &tail)?;
                let (u, iterations) = solve_instance(cfg, &sys, phi.as_ref())?;

                let diff = u.sub(&u_hom);
                let l2_error = diff.l2_norm();
                let (seminorm_error, lp_error) = match &phi {
                    None => (seminorm_sq_from_unit(&unit_sys, &diff).max(0.0).sqrt(), None),
                    Some(p) => (
                        gagliardo_p_from_unit(&unit_sys, &diff, p.p).max(0.0).powf(1.0 / p.p),
                        Some(diff.lp_norm(p.p)),
                    ),
                };
                let energy_eps = match &phi {
                    None => quadratic_energy(&sys, &u),
                    Some(p) => functional_value(&sys, p, &u),
                };
                let mut weak_gaps = [0.0; 3];
                for (k, t) in test_fns.iter().enumerate() {
                    weak_gaps[k] = diff.l2_inner(t).abs();
                }
                let f_nu_norm = sys
                    .b
                    .iter()
                    .zip(&sys.mass)
                    .map(|(b, mm)| if *mm > 0.0 { b * b / mm } else { 0.0 })
                    .sum::<f64>()
                    .sqrt();
                let diagnostics = RecordDiagnostics {
                    solution_l2: u.l2_norm(),
                    solution_seminorm: seminorm_sq_from_unit(&unit_sys, &u).max(0.0).sqrt(),
                    solution_l2_nu: weighted_norm(&sys, &u),
                    apriori_bound: f_nu_norm / m,
                    lp_error,
                };
                Ok(SweepRecord {
                    epsilon: eps,
                    seed,
                    l2_error,
                    seminorm_error,
                    energy_eps,
                    energy_hom,
                    weak_gaps,
                    iterations,
                    runtime_ms: started.elapsed().as_millis() as u64,
                    diagnostics,
                })
            };
            match task() {
                Ok(rec) => records.push(rec),
                Err(e) => return Err((records, e)),
            }
        }
    }
    Ok(records)
}

/// Per-epsilon |energy_eps - energy_hom| in record order.
pub fn energy_gap(records: &[SweepRecord]) -> Vec<(f64, f64)> {
    records.iter().map(|r| (r.epsilon, (r.energy_eps - r.energy_hom).abs())).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Ordinary least squares of log(error) against log(epsilon).
pub fn fit_rate(records: &[SweepRecord]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.epsilon, r.l2_error))
        .collect();
    if pts.len() < 2 || pts.iter().any(|&(_, e)| !(e > 0.0)) {
        return Err(Error::RateFitUndefined);
    }
    let xs: Vec<f64> = pts.iter().map(|(e, _)| e.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateFit { slope, intercept, residual })
}

#[derive(Clone, Copy, Debug)]
pub struct EnsembleStat {
    pub epsilon: f64,
    pub mean_l2_error: f64,
    pub stddev: f64,
    pub count: usize,
}

/// Unbiased per-epsilon sample statistics over seeds (record order preserved).
pub fn ensemble_summary(records: &[SweepRecord]) -> Result<Vec<EnsembleStat>> {
    let mut order: Vec<f64> = Vec::new();
    for r in records {
        if !order.contains(&r.epsilon) {
            order.push(r.epsilon);
        }
    }
    let mut out = Vec::new();
    for eps in order {
        let errs: Vec<f64> =
            records.iter().filter(|r| r.epsilon == eps).map(|r| r.l2_error).collect();
        if errs.len() < 2 {
            return Err(Error::SingleSeedEnsemble);
        }
        let n = errs.len() as f64;
        let mean = errs.iter().sum::<f64>() / n;
        let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
        out.push(EnsembleStat { epsilon: eps, mean_l2_error: mean, stddev: var.sqrt(), count: errs.len() });
    }
    Ok(out)
}
