//! Bounded damped least squares for recovering L1, L2, V0, Q1, Q2 from a
//! sweep of P^2 and V^2.
//!
//! The optimizer is a Levenberg-Marquardt loop with Marquardt diagonal
//! scaling: a trial step is accepted iff the residual norm decreases, the
//! damping drops ×10 on acceptance and rises ×10 on rejection, and trial
//! points are projected onto the bounds. The Jacobian comes from central
//! differences with a relative step of 1e-6, shrunk ×10 whenever the
//! stencil straddles a kink of |w1 - w2|.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analytic::{evaluate_params, which_way_weights, ModelParams};
use crate::config::{DualityPoint, ModelKind};
use crate::dataset::SweepDataset;
use crate::error::DualityError;

pub const MAX_ITERATIONS: usize = 500;
const REL_COST_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-12;
const FD_REL_STEP: f64 = 1e-6;
const KINK_SHRINKS: usize = 4;
/// Singular-value ratio below which the Jacobian is treated as rank deficient.
const RANK_TOL: f64 = 1e-7;
const START_FRACTIONS: [f64; 5] = [0.5, 0.25, 0.75, 0.1, 0.9];

#[derive(Debug, Error)]
pub enum FitError {
    #[error("no free parameters")]
    NoFreeParameters,
    #[error("under-determined: {residuals} residuals for {params} free parameters")]
    Underdetermined { residuals: usize, params: usize },
    #[error("invalid bounds for {param}: [{lower}, {upper}]")]
    InvalidBounds {
        param: Param,
        lower: f64,
        upper: f64,
    },
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error(transparent)]
    Model(#[from] DualityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Param {
    L1,
    L2,
    V0,
    Q1,
    Q2,
}

impl Param {
    pub const ALL: [Param; 5] = [Param::L1, Param::L2, Param::V0, Param::Q1, Param::Q2];

    pub fn name(self) -> &'static str {
        match self {
            Param::L1 => "L1",
            Param::L2 => "L2",
            Param::V0 => "V0",
            Param::Q1 => "Q1",
            Param::Q2 => "Q2",
        }
    }

    /// Default fit bounds.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            Param::L1 | Param::L2 => (0.0, 0.999),
            Param::V0 => (0.0, 1.0),
            Param::Q1 | Param::Q2 => (0.05, 1.0),
        }
    }

    fn physical_range(self) -> (f64, f64) {
        match self {
            Param::L1 | Param::L2 | Param::V0 => (0.0, 1.0),
            Param::Q1 | Param::Q2 => (1e-6, 1.0),
        }
    }

    pub fn get(self, p: &ModelParams) -> f64 {
        match self {
            Param::L1 => p.l1,
            Param::L2 => p.l2,
            Param::V0 => p.v0,
            Param::Q1 => p.q1,
            Param::Q2 => p.q2,
        }
    }

    pub fn set(self, p: &mut ModelParams, value: f64) {
        match self {
            Param::L1 => p.l1 = value,
            Param::L2 => p.l2 = value,
            Param::V0 => p.v0 = value,
            Param::Q1 => p.q1 = value,
            Param::Q2 => p.q2 = value,
        }
    }
}

impl std::fmt::Display for Param {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Param {
    type Err = FitError;
    fn from_str(s: &str) -> Result<Self, FitError> {
        Param::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| FitError::UnknownParameter(s.to_string()))
    }
}

/// Which plotted quantities enter the residual vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observables {
    pub p_sq: bool,
    pub v_sq: bool,
}

impl Default for Observables {
    fn default() -> Self {
        Observables {
            p_sq: true,
            v_sq: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParam {
    pub param: Param,
    pub lower: f64,
    pub upper: f64,
}

impl FreeParam {
    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    points: Vec<DualityPoint>,
    model: ModelKind,
    free: Vec<FreeParam>,
    fixed: ModelParams,
    observables: Observables,
}

impl FitProblem {
    /// All parameters start fixed at `fixed`; mark some free with
    /// [`Self::free`] or [`Self::free_within`].
    pub fn new(dataset: &SweepDataset, model: ModelKind, fixed: ModelParams) -> Self {
        let mut points = dataset.points().to_vec();
        points.sort_by(|a, b| a.r.total_cmp(&b.r));
        FitProblem {
            points,
            model,
            free: Vec::new(),
            fixed,
            observables: Observables::default(),
        }
    }

    pub fn free(self, param: Param) -> Result<Self, FitError> {
        let (lo, hi) = param.default_bounds();
        self.free_within(param, lo, hi)
    }

    pub fn free_within(mut self, param: Param, lower: f64, upper: f64) -> Result<Self, FitError> {
        let (plo, phi) = param.physical_range();
        if !(lower <= upper && lower >= plo && upper <= phi) {
            return Err(FitError::InvalidBounds {
                param,
                lower,
                upper,
            });
        }
        self.free.retain(|f| f.param != param);
        self.free.push(FreeParam {
            param,
            lower,
            upper,
        });
        self.free
            .sort_by_key(|f| Param::ALL.iter().position(|p| *p == f.param));
        Ok(self)
    }

    pub fn with_observables(mut self, observables: Observables) -> Self {
        self.observables = observables;
        self
    }

    pub fn free_params(&self) -> &[FreeParam] {
        &self.free
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn points(&self) -> &[DualityPoint] {
        &self.points
    }

    /// Full parameter set with the free entries taken from `x`.
    pub fn params_at(&self, x: &[f64]) -> ModelParams {
        let mut p = self.fixed;
        for (f, &v) in self.free.iter().zip(x) {
            f.param.set(&mut p, v);
        }
        p
    }

    fn residuals_per_point(&self) -> usize {
        let v = if self.model.has_two_visibilities() {
            2
        } else {
            1
        };
        usize::from(self.observables.p_sq) + if self.observables.v_sq { v } else { 0 }
    }

    fn residual_len(&self) -> usize {
        self.points.len() * self.residuals_per_point()
    }

    /// Signs of every |w1 - w2| argument at `x`.
    fn kink_signs(&self, x: &[f64]) -> Vec<bool> {
        let p = self.params_at(x);
        self.points
            .iter()
            .flat_map(|pt| which_way_weights(self.model, &p, pt.r))
            .map(|(a, b)| a >= b)
            .collect()
    }
}

/// Model-minus-data residuals. Points where the model is degenerate
/// contribute zeros and are counted in `excluded`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub values: Vec<f64>,
    pub excluded: usize,
}

impl Residuals {
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|r| r * r).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

pub fn residuals(problem: &FitProblem, x: &[f64]) -> Residuals {
    let p = problem.params_at(x);
    let per = problem.residuals_per_point();
    let two_v = problem.model.has_two_visibilities();
    let obs = problem.observables;
    let mut values = Vec::with_capacity(problem.residual_len());
    let mut excluded = 0;
    for data in &problem.points {
        match evaluate_params(problem.model, &p, data.r) {
            Ok(m) => {
                if obs.p_sq {
                    values.push(m.p * m.p - data.p * data.p);
                }
                if obs.v_sq {
                    values.push(m.v1 * m.v1 - data.v1 * data.v1);
                    if two_v {
                        values.push(m.v2 * m.v2 - data.v2 * data.v2);
                    }
                }
            }
            Err(_) => {
                excluded += 1;
                values.extend(std::iter::repeat_n(0.0, per));
            }
        }
    }
    Residuals { values, excluded }
}

/// Central difference `(f(x + h) - f(x - h)) / 2h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Finite-difference Jacobian of the residuals, one column per free
/// parameter.
pub fn jacobian(problem: &FitProblem, x: &[f64]) -> DMatrix<f64> {
    let m = problem.residual_len();
    let n = problem.free.len();
    let base_signs = problem.kink_signs(x);
    let mut jac = DMatrix::zeros(m, n);
    for (j, free) in problem.free.iter().enumerate() {
        let (plo, phi) = free.param.physical_range();
        let mut h = FD_REL_STEP * x[j].abs().max(1.0);
        let mut shrinks = 0;
        loop {
            let (lo, hi) = ((x[j] - h).max(plo), (x[j] + h).min(phi));
            let mut xl = x.to_vec();
            let mut xh = x.to_vec();
            xl[j] = lo;
            xh[j] = hi;
            let straddles =
                problem.kink_signs(&xl) != base_signs || problem.kink_signs(&xh) != base_signs;
            if straddles && shrinks < KINK_SHRINKS {
                h /= 10.0;
                shrinks += 1;
                continue;
            }
            let rl = residuals(problem, &xl).values;
            let rh = residuals(problem, &xh).values;
            let width = hi - lo;
            for i in 0..m {
                jac[(i, j)] = (rh[i] - rl[i]) / width;
            }
            break;
        }
    }
    jac
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub model: ModelKind,
    pub params: ModelParams,
    pub estimates: Vec<(Param, f64)>,
    /// Row-major covariance of the free parameters; entries are infinite
    /// when the data cannot separate them.
    pub covariance: Vec<Vec<f64>>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub identifiable: bool,
    pub excluded_points: usize,
    pub start_index: usize,
}

impl FitResult {
    pub fn estimate(&self, param: Param) -> Option<f64> {
        self.estimates
            .iter()
            .find(|(p, _)| *p == param)
            .map(|&(_, v)| v)
    }

    pub fn std_error(&self, param: Param) -> Option<f64> {
        let i = self.estimates.iter().position(|(p, _)| *p == param)?;
        Some(self.covariance[i][i].sqrt())
    }
}

struct Run {
    x: Vec<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
}

fn project(problem: &FitProblem, x: &mut [f64]) {
    for (v, f) in x.iter_mut().zip(&problem.free) {
        *v = f.clamp(*v);
    }
}

fn levenberg_marquardt(problem: &FitProblem, x0: Vec<f64>) -> Run {
    let mut x = x0;
    project(problem, &mut x);
    let n = x.len();
    let mut res = DVector::from_vec(residuals(problem, &x).values);
    let mut cost = res.norm_squared();
    let mut lambda = 1e-3;
    let mut jac = jacobian(problem, &x);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        if cost <= 1e-30 {
            converged = true;
            break;
        }
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &res;
        let mut damped = jtj.clone();
        for i in 0..n {
            damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
        }
        let Some(delta) = damped.cholesky().map(|c| c.solve(&(-&grad))) else {
            lambda *= 10.0;
            continue;
        };
        let mut trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
        project(problem, &mut trial);
        let step = x
            .iter()
            .zip(&trial)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        if step < STEP_TOL {
            converged = true;
            break;
        }
        let trial_res = DVector::from_vec(residuals(problem, &trial).values);
        let trial_cost = trial_res.norm_squared();
        if trial_cost < cost {
            let rel = (cost - trial_cost) / cost;
            x = trial;
            res = trial_res;
            cost = trial_cost;
            lambda = (lambda / 10.0).max(1e-15);
            if rel < REL_COST_TOL {
                converged = true;
                break;
            }
            jac = jacobian(problem, &x);
        } else {
            lambda = (lambda * 10.0).min(1e20);
        }
    }
    Run {
        x,
        cost,
        iterations,
        converged,
    }
}

fn covariance(problem: &FitProblem, x: &[f64], cost: f64, active: usize) -> (Vec<Vec<f64>>, bool) {
    let n = x.len();
    let jac = jacobian(problem, x);
    let sv = jac.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let unbounded = || vec![vec![f64::INFINITY; n]; n];
    if max.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || min / max < RANK_TOL {
        return (unbounded(), false);
    }
    let dof = active.saturating_sub(n).max(1) as f64;
    let scale = cost / dof;
    match (jac.transpose() * &jac).try_inverse() {
        Some(inv) => (
            (0..n)
                .map(|i| (0..n).map(|j| inv[(i, j)] * scale).collect())
                .collect(),
            true,
        ),
        None => (unbounded(), false),
    }
}

/// Multi-start bounded least-squares fit: five deterministic starts at
/// fixed fractions of each parameter's bounds; the lowest final residual
/// wins, with ties going to the earlier start.
pub fn fit(problem: &FitProblem) -> Result<FitResult, FitError> {
    let n = problem.free.len();
    if n == 0 {
        return Err(FitError::NoFreeParameters);
    }
    let starts: Vec<Vec<f64>> = START_FRACTIONS
        .iter()
        .map(|&t| {
            problem
                .free
                .iter()
                .map(|f| f.lower + t * (f.upper - f.lower))
                .collect()
        })
        .collect();
    let first = residuals(problem, &starts[0]);
    let active = first.values.len() - first.excluded * problem.residuals_per_point();
    if active < n {
        return Err(FitError::Underdetermined {
            residuals: active,
            params: n,
        });
    }

    let runs: Vec<Run> = starts
        .into_par_iter()
        .map(|x0| levenberg_marquardt(problem, x0))
        .collect();
    let (start_index, best) = runs
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.cost.total_cmp(&b.cost).then(i.cmp(j)))
        .expect("five starts");

    let final_res = residuals(problem, &best.x);
    let active = final_res.values.len() - final_res.excluded * problem.residuals_per_point();
    let (cov, identifiable) = covariance(problem, &best.x, best.cost, active);
    Ok(FitResult {
        model: problem.model,
        params: problem.params_at(&best.x),
        estimates: problem
            .free
            .iter()
            .map(|f| f.param)
            .zip(best.x.iter().copied())
            .collect(),
        covariance: cov,
        residual_norm: best.cost.sqrt(),
        iterations: best.iterations,
        converged: best.converged,
        identifiable,
        excluded_points: final_res.excluded,
        start_index,
    })
}
