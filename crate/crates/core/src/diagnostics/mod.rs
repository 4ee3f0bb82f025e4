//! Natural residual, rate operators and per-step certificate checks.

mod trace;

pub use trace::{read_trace_csv, IterationRecord, MetricKind, RunStatus, RunTrace, TraceCsvRow};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problems::SaddleProblem;
use crate::prox::{prox, ConvexPiece};
use crate::solvers::StepPair;
use crate::spaces::{BlockOperator, ProductPoint};

/// Relative slack of [`check_contraction`].
pub const CONTRACTION_SLACK: f64 = 1e-7;
/// Relative slack of [`check_residual_bound`].
pub const RESIDUAL_BOUND_SLACK: f64 = 1e-6;
/// Relative per-step slack of [`check_gnorm_decrease`].
pub const GNORM_SLACK: f64 = 1e-9;
/// Minimum number of metric ratios used by [`linear_rate_estimate`].
pub const MIN_RATE_TAIL: usize = 10;

/// `R(z) = (x − prox_f(x − D_xK), y − prox_g(y + D_yK))` and its norm.
///
/// Composite proxes that hit the inner iteration cap contribute their best iterate.
pub fn residual(problem: &SaddleProblem, z: &ProductPoint) -> Result<(ProductPoint, f64)> {
    z.check_dims(problem.n(), problem.m())?;
    let field = problem.field(z);
    // With a zero term the component is the field itself; skip the round trip.
    let part = |piece: &ConvexPiece, u: &DVector<f64>, d: &DVector<f64>| -> Result<DVector<f64>> {
        if piece.is_zero() {
            Ok(d.clone())
        } else {
            let p = match prox(piece, 1.0, &(u - d)) {
                Err(Error::NonConvergence { best, .. }) => DVector::from_vec(best),
                other => other?,
            };
            Ok(u - p)
        }
    };
    let r = ProductPoint::new(part(problem.f(), &z.x, &field.x)?, part(problem.g(), &z.y, &field.y)?);
    let norm = r.norm();
    Ok((r, norm))
}

/// `G = Σ̂ + Θ − 6η₀σI`, `N = Σ̂ + Θ − (η̂₀ + 6η₀)σI`, `H = Θ − (η̂₀ + 2)σI`.
#[derive(Debug, Clone)]
pub struct RateOperators {
    pub g: BlockOperator,
    pub n: BlockOperator,
    pub h: BlockOperator,
    pub g_pd: bool,
    pub n_pd: bool,
    pub h_pd: bool,
}

pub fn rate_operators(
    sigma_hat: &BlockOperator,
    theta: &BlockOperator,
    eta0: f64,
    eta_hat0: f64,
    sigma: f64,
) -> Result<RateOperators> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let sum = sigma_hat.add(theta)?;
    let g = sum.shifted(-6.0 * eta0 * sigma);
    let n = sum.shifted(-(eta_hat0 + 6.0 * eta0) * sigma);
    let h = theta.shifted(-(eta_hat0 + 2.0) * sigma);
    Ok(RateOperators { g_pd: g.is_pd(), n_pd: n.is_pd(), h_pd: h.is_pd(), g, n, h })
}

/// `‖z^{k+1} − z^{k+1/2}‖_{Θ+Σ̂} ≤ ϑ‖z^{k+1/2} − z^k‖_{Θ+Σ̂}` up to `1e−7·(1 + rhs)`.
pub fn check_contraction(
    step: &StepPair,
    z_k: &ProductPoint,
    theta: &BlockOperator,
    sigma_hat: &BlockOperator,
    vartheta: f64,
) -> Result<bool> {
    let w = theta.add(sigma_hat)?;
    let lhs = w.weighted_norm_sq(&step.full.sub(&step.half))?.sqrt();
    let rhs = vartheta * w.weighted_norm_sq(&step.half.sub(z_k))?.sqrt();
    Ok(lhs <= rhs + CONTRACTION_SLACK * (1.0 + rhs))
}

/// `σ·η̂₀ / λ_min(σΣ̂ + Θ)`: the contraction factor that follows from the
/// strong convexity of the step subproblems, valid in the `(σΣ̂ + Θ)`-norm.
///
/// Pass `σΣ̂` in place of `Σ̂` to [`check_contraction`] to test it. It equals
/// the certificate's `ϑ` at `σ = 1` and is larger for `σ < 1`.
pub fn subproblem_contraction_factor(
    sigma_hat: &BlockOperator,
    theta: &BlockOperator,
    eta_hat0: f64,
    sigma: f64,
) -> Result<f64> {
    let w = BlockOperator::combine(sigma, sigma_hat, 1.0, theta)?;
    Ok(sigma * eta_hat0 / w.extremal_eigs().0)
}

/// Right-hand side of the residual bound:
/// `6η₀²‖d₁‖² + 3‖(Σ̂+Θ)d₁‖² + 3‖Θd₂‖²` with `d₁ = z^{k+1} − z^{k+1/2}`, `d₂ = z^{k+1/2} − z^k`.
pub fn residual_bound_rhs(
    step: &StepPair,
    z_k: &ProductPoint,
    eta0: f64,
    sigma_hat: &BlockOperator,
    theta: &BlockOperator,
) -> Result<f64> {
    let d1 = step.full.sub(&step.half);
    let d2 = step.half.sub(z_k);
    let sum = sigma_hat.add(theta)?;
    Ok(6.0 * eta0 * eta0 * d1.norm_sq() + 3.0 * sum.apply(&d1)?.norm_sq() + 3.0 * theta.apply(&d2)?.norm_sq())
}

/// `‖R(z^{k+1})‖² ≤ residual_bound_rhs` up to `1e−6·(1 + rhs)`.
pub fn check_residual_bound(
    step: &StepPair,
    z_k: &ProductPoint,
    problem: &SaddleProblem,
    sigma_hat: &BlockOperator,
    theta: &BlockOperator,
) -> Result<bool> {
    let (_, r) = residual(problem, &step.full)?;
    let rhs = residual_bound_rhs(step, z_k, problem.eta0(), sigma_hat, theta)?;
    Ok(residual_bound_holds(r * r, rhs))
}

pub fn residual_bound_holds(lhs_sq: f64, rhs: f64) -> bool {
    lhs_sq <= rhs + RESIDUAL_BOUND_SLACK * (1.0 + rhs)
}

/// One step of the G-norm monotonicity test on squared distances.
pub fn gnorm_step_ok(prev_sq: f64, next_sq: f64) -> bool {
    next_sq <= prev_sq * (1.0 + GNORM_SLACK) + f64::MIN_POSITIVE
}

/// `‖z^k − z*‖_G` is non-increasing along the recorded iterates.
pub fn check_gnorm_decrease(trace: &RunTrace, z_star: &ProductPoint, g: &BlockOperator) -> Result<bool> {
    if trace.iterates.is_empty() {
        return Err(Error::InsufficientTrace { needed: 1, available: 0 });
    }
    gnorm_decrease(&trace.iterates, z_star, g)
}

pub fn gnorm_decrease(iterates: &[ProductPoint], z_star: &ProductPoint, g: &BlockOperator) -> Result<bool> {
    let mut prev: Option<f64> = None;
    for z in iterates {
        let d = g.weighted_norm_sq(&z.sub(z_star))?;
        if let Some(p) = prev {
            if !gnorm_step_ok(p, d) {
                return Ok(false);
            }
        }
        prev = Some(d);
    }
    Ok(true)
}

/// `‖z^k‖ / ‖z^0‖` for every record of the trace.
pub fn relative_error(trace: &RunTrace) -> Result<Vec<f64>> {
    let first = trace.records.first().ok_or(Error::InsufficientTrace { needed: 1, available: 0 })?;
    if first.iterate_norm == 0.0 {
        return Err(Error::ZeroInitialPoint);
    }
    Ok(trace.records.iter().map(|r| r.iterate_norm / first.iterate_norm).collect())
}

/// Empirical linear rate of a trace; see [`linear_rate_from_metrics`].
pub fn linear_rate_estimate(trace: &RunTrace) -> Result<f64> {
    linear_rate_from_metrics(&trace.metrics())
}

/// Geometric mean of successive metric ratios over the tail: the last half of
/// the positive prefix of `metrics`, and never fewer than ten ratios.
pub fn linear_rate_from_metrics(metrics: &[f64]) -> Result<f64> {
    let usable = metrics.iter().take_while(|&&m| m > 0.0 && m.is_finite()).count();
    let ratios = usable.saturating_sub(1);
    if ratios < MIN_RATE_TAIL {
        return Err(Error::InsufficientTrace { needed: MIN_RATE_TAIL + 1, available: usable });
    }
    let tail = (ratios / 2).max(MIN_RATE_TAIL);
    let end = usable - 1;
    let start = end - tail;
    Ok(((metrics[end].ln() - metrics[start].ln()) / tail as f64).exp())
}
