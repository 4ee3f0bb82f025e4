//! The majorized semi-proximal alternating coordinate method and baselines.
//!
//! One outer iteration of the main method computes, with `Θ = diag(S, T)`,
//!
//! ```text
//! z^{k+1/2} = argmin ½‖z − z^k‖²_Θ + σ Φ̂(z; z^k)
//! z^{k+1}   = argmin ½‖z − z^k‖²_Θ + σ Φ̂(z; z^{k+1/2})
//! ```
//!
//! where `Φ̂(·; a)` replaces `K` by its linearization at `a` plus the
//! quadratic `½‖· − a‖²_Σ̂`. Each argmin splits into independent x- and
//! y-subproblems of the form `argmin f(x) + ‖x − v‖²_W / (2σ)`.

mod run;
mod steps;

pub use run::{run, SolverKind};
pub use steps::{eg_step, mspacm_smooth_step, mspacm_step, ogda_step, pp_step, Mspacm, StepInfo};

use serde::{Deserialize, Serialize};

use crate::diagnostics::MetricKind;
use crate::error::{Error, Result};
use crate::problems::{default_operators, SaddleProblem};
use crate::prox::DrOptions;
use crate::spaces::{BlockOperator, ProductPoint, SelfAdjointOperator};

/// `(z^{k+1/2}, z^{k+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPair {
    pub half: ProductPoint,
    pub full: ProductPoint,
}

/// `inner_tol(k) = max(outer_tol · floor_ratio, base / (1 + k)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerSchedule {
    pub floor_ratio: f64,
    pub base: f64,
}

impl Default for InnerSchedule {
    fn default() -> Self {
        Self { floor_ratio: 0.01, base: 1e-6 }
    }
}

impl InnerSchedule {
    pub fn tol(&self, k: usize, outer_tol: f64) -> f64 {
        let decay = self.base / ((1 + k) as f64).powi(2);
        (outer_tol * self.floor_ratio).max(decay)
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub sigma: f64,
    pub s: SelfAdjointOperator,
    pub t: SelfAdjointOperator,
    pub max_outer: usize,
    pub outer_tol: f64,
    pub inner: InnerSchedule,
    pub metric: MetricKind,
    pub warm_start_inner: bool,
    /// Iteration cap and splitting parameters of the composite inner solver.
    pub dr_max_inner: usize,
    pub dr_step: f64,
    pub dr_relaxation: f64,
    /// Keep every `z^k` and `z^{k+1/2}` in the trace.
    pub record_iterates: bool,
    /// Evaluate the per-step certificates.
    pub certificates: bool,
    pub timing: bool,
}

impl SolverConfig {
    pub fn new(sigma: f64, s: SelfAdjointOperator, t: SelfAdjointOperator) -> Self {
        Self {
            sigma,
            s,
            t,
            max_outer: 10_000,
            outer_tol: 1e-9,
            inner: InnerSchedule::default(),
            metric: MetricKind::Auto,
            warm_start_inner: true,
            dr_max_inner: 20_000,
            dr_step: 1.0,
            dr_relaxation: 1.0,
            record_iterates: true,
            certificates: true,
            timing: true,
        }
    }

    /// `S = T = ‖A‖₂·I` for a matrix-based problem.
    pub fn standard(problem: &SaddleProblem, sigma: f64) -> Result<Self> {
        let (s, t, _, _) = default_operators(problem, 1.0, 0.0)?;
        Ok(Self::new(sigma, s, t))
    }

    pub fn theta(&self) -> BlockOperator {
        BlockOperator::new(self.s.clone(), self.t.clone())
    }

    pub fn inner_tol(&self, k: usize) -> f64 {
        self.inner.tol(k, self.outer_tol)
    }

    pub(crate) fn dr_options(&self, tol: f64) -> DrOptions {
        DrOptions {
            tol,
            max_inner: self.dr_max_inner,
            step: self.dr_step,
            relaxation: self.dr_relaxation,
            warm_start: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.outer_tol > 0.0) || self.max_outer == 0 {
            return Err(Error::InvalidParameter("need outer_tol > 0 and max_outer > 0".into()));
        }
        if !(self.dr_step > 0.0) || !(self.dr_relaxation > 0.0 && self.dr_relaxation < 2.0) || self.dr_max_inner == 0 {
            return Err(Error::InvalidParameter("invalid inner solver settings".into()));
        }
        if !(self.inner.floor_ratio > 0.0 && self.inner.base > 0.0) {
            return Err(Error::InvalidParameter("inner schedule must be positive".into()));
        }
        Ok(())
    }
}

/// The step-size and operator conditions of the convergence theory, evaluated
/// for a given problem and configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterCertificate {
    pub sigma: f64,
    pub eta0: f64,
    pub eta_hat0: f64,
    /// `λ_min(Σ̂ + Θ)`.
    pub lambda_min_sum: f64,
    /// `min(λ_min(Σ̂+Θ) / (√2·η̂₀), ½)`.
    pub sigma_bound: f64,
    /// `σ < sigma_bound`.
    pub cond_sigma: bool,
    /// `Θ ≻ (η̂₀ + 2)σI`.
    pub cond_theta: bool,
    /// `Σ̂ ≻ 6η₀σ/(1 − 2σ)·I`; only defined for `σ < ½`.
    pub cond_sigma_hat: Option<bool>,
    /// `σ·η̂₀ / λ_min(Θ + Σ̂)`.
    pub vartheta: f64,
}

impl ParameterCertificate {
    pub fn all_hold(&self) -> bool {
        self.cond_sigma && self.cond_theta && self.cond_sigma_hat == Some(true)
    }
}

/// Checks that every subproblem is strongly convex (`S, T ⪰ 0`,
/// `Σ̂_f + S ≻ 0`, `Σ̂_g + T ≻ 0`) and evaluates the convergence conditions.
/// Only the former is an error.
pub fn validate_params(problem: &SaddleProblem, config: &SolverConfig) -> Result<ParameterCertificate> {
    config.validate()?;
    if config.s.dim() != problem.n() {
        return Err(Error::dims(problem.n(), config.s.dim()));
    }
    if config.t.dim() != problem.m() {
        return Err(Error::dims(problem.m(), config.t.dim()));
    }
    if !config.s.is_psd() || !config.t.is_psd() {
        return Err(Error::ParameterCondition("S and T must be positive semidefinite".into()));
    }
    let sum_x = problem.sigma_f().add(&config.s)?;
    let sum_y = problem.sigma_g().add(&config.t)?;
    if !sum_x.is_pd() || !sum_y.is_pd() {
        return Err(Error::ParameterCondition("Σ̂_f + S and Σ̂_g + T must be positive definite".into()));
    }
    Ok(certificate(problem, config))
}

fn certificate(problem: &SaddleProblem, config: &SolverConfig) -> ParameterCertificate {
    let sigma = config.sigma;
    let eta0 = problem.eta0();
    let eta_hat0 = problem.eta_hat0();
    let sigma_hat = problem.sigma_hat();
    let theta = config.theta();
    let lambda_min_sum = sigma_hat.add(&theta).map(|s| s.extremal_eigs().0).unwrap_or(f64::NAN);
    let sigma_bound = (lambda_min_sum / (2f64.sqrt() * eta_hat0)).min(0.5);
    let cond_theta = theta.extremal_eigs().0 > (eta_hat0 + 2.0) * sigma;
    let cond_sigma_hat = (sigma < 0.5).then(|| sigma_hat.extremal_eigs().0 > 6.0 * eta0 * sigma / (1.0 - 2.0 * sigma));
    ParameterCertificate {
        sigma,
        eta0,
        eta_hat0,
        lambda_min_sum,
        sigma_bound,
        cond_sigma: sigma < sigma_bound,
        cond_theta,
        cond_sigma_hat,
        vartheta: sigma * eta_hat0 / lambda_min_sum,
    }
}
