use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::steps::{Mspacm, StepInfo};
use super::{validate_params, SolverConfig, StepPair};
use crate::diagnostics::{
    check_contraction, gnorm_step_ok, rate_operators, residual, residual_bound_holds, residual_bound_rhs,
    IterationRecord, MetricKind, RunStatus, RunTrace,
};
use crate::error::{Error, Result};
use crate::problems::{Resolvent, SaddleProblem};
use crate::prox::{prox, ConvexPiece};
use crate::spaces::{BlockOperator, ProductPoint};

/// Consecutive outer steps with an inner-solver failure before a run is declared failed.
pub const MAX_CONSECUTIVE_INNER_FAILURES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SolverKind {
    Mspacm,
    ProximalPoint { eta: f64 },
    ExtraGradient { eta: f64 },
    Ogda { eta: f64 },
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Mspacm => "mspACM",
            SolverKind::ProximalPoint { .. } => "PP",
            SolverKind::ExtraGradient { .. } => "EG",
            SolverKind::Ogda { .. } => "OGDA",
        }
    }

    pub fn eta(&self) -> Option<f64> {
        match *self {
            SolverKind::Mspacm => None,
            SolverKind::ProximalPoint { eta } | SolverKind::ExtraGradient { eta } | SolverKind::Ogda { eta } => {
                Some(eta)
            }
        }
    }

    /// Parses `mspacm`, `pp`, `eg` or `ogda` (case-insensitive); baselines take `eta`.
    pub fn parse(name: &str, eta: Option<f64>) -> Result<Self> {
        let need = || eta.ok_or_else(|| Error::InvalidConfig(format!("solver {name} needs a step size")));
        match name.to_ascii_lowercase().as_str() {
            "mspacm" => Ok(SolverKind::Mspacm),
            "pp" => Ok(SolverKind::ProximalPoint { eta: need()? }),
            "eg" => Ok(SolverKind::ExtraGradient { eta: need()? }),
            "ogda" => Ok(SolverKind::Ogda { eta: need()? }),
            other => Err(Error::InvalidConfig(format!("unknown solver {other:?}"))),
        }
    }
}

/// Projects onto the indicator terms of `piece` (identity if there are none).
fn project_domain(piece: &ConvexPiece, v: &nalgebra::DVector<f64>) -> Result<nalgebra::DVector<f64>> {
    let sets: Vec<ConvexPiece> = piece.parts().into_iter().filter(|p| p.is_indicator()).cloned().collect();
    if sets.is_empty() {
        return Ok(v.clone());
    }
    prox(&ConvexPiece::sum(sets)?, 1.0, v)
}

enum Stepper<'a> {
    Mspacm(Box<Mspacm<'a>>),
    Pp(Resolvent),
    Eg(f64),
    Ogda { eta: f64, prev_field: Option<ProductPoint> },
}

struct Certs {
    theta: BlockOperator,
    theta_scaled: BlockOperator,
    sigma_hat: BlockOperator,
    vartheta: f64,
    g: Option<(BlockOperator, ProductPoint)>,
}

/// Runs `kind` from `z0` until the metric drops below `config.outer_tol`,
/// `config.max_outer` iterations pass, or the run fails.
///
/// Baselines only use `max_outer`, `outer_tol`, `metric`, `record_iterates`
/// and `timing` from `config`.
pub fn run(kind: &SolverKind, problem: &SaddleProblem, config: &SolverConfig, z0: &ProductPoint) -> Result<RunTrace> {
    config.validate()?;
    z0.check_dims(problem.n(), problem.m())?;
    if !z0.is_finite() {
        return Err(Error::InvalidParameter("initial point is not finite".into()));
    }

    let mut certificate = None;
    let mut stepper = match *kind {
        SolverKind::Mspacm => {
            certificate = Some(validate_params(problem, config)?);
            Stepper::Mspacm(Box::new(Mspacm::new(problem, config)?.best_effort(true)))
        }
        SolverKind::ProximalPoint { eta } => {
            if !problem.is_smooth() {
                return Err(Error::Unsupported("PP needs f = g = 0".into()));
            }
            check_eta(eta)?;
            let q = problem
                .coupling()
                .as_quadratic()
                .ok_or_else(|| Error::Unsupported("PP needs an affine field".into()))?;
            Stepper::Pp(q.resolvent(eta)?)
        }
        SolverKind::ExtraGradient { eta } => {
            baseline_ok(problem, eta)?;
            Stepper::Eg(eta)
        }
        SolverKind::Ogda { eta } => {
            baseline_ok(problem, eta)?;
            Stepper::Ogda { eta, prev_field: None }
        }
    };

    let mut z = ProductPoint::new(project_domain(problem.f(), &z0.x)?, project_domain(problem.g(), &z0.y)?);

    let metric_kind = match config.metric {
        MetricKind::Auto => match problem.known_saddle() {
            Some(s) if s.norm() == 0.0 => MetricKind::RelativeError,
            _ => MetricKind::ResidualNorm,
        },
        other => other,
    };
    let saddle = match metric_kind {
        MetricKind::RelativeError => Some(problem.known_saddle().ok_or(Error::MissingSaddle)?.clone()),
        _ => None,
    };
    let raw_metric = |z: &ProductPoint, res: f64| match &saddle {
        Some(s) => z.distance(s),
        None => res,
    };

    let certs = match (&certificate, config.certificates) {
        (Some(cert), true) => {
            let theta = config.theta();
            let sigma_hat = problem.sigma_hat();
            let ops = rate_operators(&sigma_hat, &theta, problem.eta0(), problem.eta_hat0(), config.sigma)?;
            let g = match (problem.known_saddle(), ops.g_pd) {
                (Some(s), true) => Some((ops.g, s.clone())),
                _ => None,
            };
            Some(Certs { theta_scaled: theta.scaled(1.0 / config.sigma), theta, sigma_hat, vartheta: cert.vartheta, g })
        }
        _ => None,
    };

    let start = Instant::now();
    let elapsed = || config.timing.then(|| start.elapsed().as_secs_f64() * 1e3);

    let (_, res0) = residual(problem, &z)?;
    let reference = raw_metric(&z, res0);
    let normalize = |raw: f64| if reference > 0.0 { raw / reference } else { raw };
    let mut gnorm_prev = match &certs {
        Some(Certs { g: Some((g, s)), .. }) => Some(g.weighted_norm_sq(&z.sub(s))?),
        _ => None,
    };

    let mut trace = RunTrace {
        solver: kind.name().to_string(),
        metric_kind,
        records: vec![IterationRecord {
            k: 0,
            metric: normalize(reference),
            iterate_norm: z.norm(),
            residual_norm: res0,
            contraction_ok: None,
            residual_bound_ok: None,
            gnorm_ok: None,
            inner_iterations: 0,
            inner_failures: 0,
            wall_ms: elapsed(),
        }],
        iterates: Vec::new(),
        halves: Vec::new(),
        status: RunStatus::MaxIters,
        certificate,
        final_point: z.clone(),
        failure: None,
    };
    if config.record_iterates {
        trace.iterates.push(z.clone());
    }
    if trace.records[0].metric <= config.outer_tol {
        trace.status = RunStatus::Converged;
        return Ok(trace);
    }

    let mut prev_z = z.clone();
    let mut consecutive_failures = 0;
    for k in 0..config.max_outer {
        let outcome: Result<(StepPair, StepInfo)> = match &mut stepper {
            Stepper::Mspacm(m) => m.step(&z, config.inner_tol(k)),
            Stepper::Pp(res) => res.apply(&z).map(|full| (StepPair { half: full.clone(), full }, StepInfo::default())),
            Stepper::Eg(eta) => {
                let half = z.axpy(-*eta, &problem.field(&z));
                let full = z.axpy(-*eta, &problem.field(&half));
                Ok((StepPair { half, full }, StepInfo::default()))
            }
            Stepper::Ogda { eta, prev_field } => {
                let f = problem.field(&z);
                let fp = prev_field.take().unwrap_or_else(|| problem.field(&prev_z));
                let full = z.axpy(-2.0 * *eta, &f).axpy(*eta, &fp);
                *prev_field = Some(f);
                Ok((StepPair { half: z.clone(), full }, StepInfo::default()))
            }
        };
        let (step, info) = match outcome {
            Ok(v) => v,
            Err(e) => {
                trace.status = RunStatus::Failed;
                trace.failure = Some(e.to_string());
                break;
            }
        };
        if !step.full.is_finite() {
            trace.status = RunStatus::Failed;
            trace.failure = Some(format!("non-finite iterate at k = {}", k + 1));
            break;
        }

        let (_, res) = residual(problem, &step.full)?;
        let mut record = IterationRecord {
            k: k + 1,
            metric: normalize(raw_metric(&step.full, res)),
            iterate_norm: step.full.norm(),
            residual_norm: res,
            contraction_ok: None,
            residual_bound_ok: None,
            gnorm_ok: None,
            inner_iterations: info.inner_iterations,
            inner_failures: info.inner_failures,
            wall_ms: None,
        };
        if let Some(c) = &certs {
            record.contraction_ok = Some(check_contraction(&step, &z, &c.theta, &c.sigma_hat, c.vartheta)?);
            let rhs = residual_bound_rhs(&step, &z, problem.eta0(), &c.sigma_hat, &c.theta_scaled)?;
            record.residual_bound_ok = Some(residual_bound_holds(res * res, rhs));
            if let Some((g, s)) = &c.g {
                let d = g.weighted_norm_sq(&step.full.sub(s))?;
                record.gnorm_ok = gnorm_prev.map(|p| gnorm_step_ok(p, d));
                gnorm_prev = Some(d);
            }
        }
        record.wall_ms = elapsed();
        let metric = record.metric;
        trace.records.push(record);
        if config.record_iterates {
            trace.halves.push(step.half);
            trace.iterates.push(step.full.clone());
        }
        prev_z = std::mem::replace(&mut z, step.full);

        if info.inner_failures > 0 {
            consecutive_failures += 1;
            if consecutive_failures >= MAX_CONSECUTIVE_INNER_FAILURES {
                trace.status = RunStatus::Failed;
                trace.failure = Some(format!(
                    "inner solver failed on {MAX_CONSECUTIVE_INNER_FAILURES} consecutive outer iterations"
                ));
                break;
            }
        } else {
            consecutive_failures = 0;
        }
        if metric <= config.outer_tol {
            trace.status = RunStatus::Converged;
            break;
        }
    }
    trace.final_point = z;
    Ok(trace)
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("step size must be positive, got {eta}")))
    }
}

fn baseline_ok(problem: &SaddleProblem, eta: f64) -> Result<()> {
    if !problem.is_smooth() {
        return Err(Error::Unsupported("baselines need f = g = 0".into()));
    }
    check_eta(eta)
}
