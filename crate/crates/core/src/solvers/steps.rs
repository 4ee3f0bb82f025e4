use nalgebra::DVector;

use super::{SolverConfig, StepPair};
use crate::error::{Error, Result};
use crate::problems::SaddleProblem;
use crate::prox::{prox, prox_composite, ConvexPiece, DrOptions};
use crate::spaces::{BlockOperator, ProductPoint, SelfAdjointOperator};

/// Inner-solver effort spent on one outer step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepInfo {
    pub inner_iterations: usize,
    /// Subproblems that hit the inner iteration cap (their best iterate was used).
    pub inner_failures: usize,
}

/// How `‖· − v‖²_W / (2σ)` is handed to the prox machinery.
#[derive(Debug, Clone)]
enum Metric {
    /// `W = αI`: a plain prox with parameter `σ/α`.
    Isotropic(f64),
    /// `W = λ_min·I + σP`: prox with parameter `σ/λ_min` of `f + ½‖· − v‖²_P`.
    Split { lambda_min: f64, p: SelfAdjointOperator },
}

#[derive(Debug, Clone)]
struct Block {
    /// `σΣ̂ + S` (or `σΣ̂_g + T`).
    w: SelfAdjointOperator,
    sigma_hat: SelfAdjointOperator,
    prox_weight: SelfAdjointOperator,
    metric: Metric,
}

impl Block {
    fn new(sigma: f64, sigma_hat: &SelfAdjointOperator, prox_weight: &SelfAdjointOperator) -> Result<Self> {
        let w = SelfAdjointOperator::combine(sigma, sigma_hat, 1.0, prox_weight)?;
        if !w.is_pd() {
            return Err(Error::ParameterCondition("σΣ̂ + S (or T) is not positive definite".into()));
        }
        let metric = match w.as_scaled_identity() {
            Some(alpha) => Metric::Isotropic(alpha),
            None => {
                let (lambda_min, _) = w.extremal_eigs();
                Metric::Split { lambda_min, p: w.shifted(-lambda_min).scaled(1.0 / sigma) }
            }
        };
        Ok(Self { w, sigma_hat: sigma_hat.clone(), prox_weight: prox_weight.clone(), metric })
    }
}

/// Prepared operators and inner-solver state for repeated outer steps.
#[derive(Debug, Clone)]
pub struct Mspacm<'a> {
    problem: &'a SaddleProblem,
    sigma: f64,
    x: Block,
    y: Block,
    dr: DrOptions,
    warm_start: bool,
    best_effort: bool,
    warm: [Option<Vec<DVector<f64>>>; 4],
}

impl<'a> Mspacm<'a> {
    pub fn new(problem: &'a SaddleProblem, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let x = Block::new(config.sigma, problem.sigma_f(), &config.s)?;
        let y = Block::new(config.sigma, problem.sigma_g(), &config.t)?;
        Ok(Self {
            problem,
            sigma: config.sigma,
            x,
            y,
            dr: config.dr_options(config.inner_tol(0)),
            warm_start: config.warm_start_inner,
            best_effort: false,
            warm: Default::default(),
        })
    }

    /// Use the best available iterate when an inner solve hits its cap,
    /// instead of failing the step.
    pub fn best_effort(mut self, on: bool) -> Self {
        self.best_effort = on;
        self
    }

    /// `argmin piece(u) + ‖u − v‖²_W / (2σ)`.
    fn subproblem(
        &mut self,
        slot: usize,
        piece: &ConvexPiece,
        block_is_x: bool,
        v: DVector<f64>,
        tol: f64,
        info: &mut StepInfo,
    ) -> Result<DVector<f64>> {
        if piece.is_zero() {
            return Ok(v);
        }
        let block = if block_is_x { &self.x } else { &self.y };
        let (rho, parts): (f64, Vec<ConvexPiece>) = match &block.metric {
            Metric::Isotropic(alpha) => {
                let rho = self.sigma / alpha;
                if !matches!(piece, ConvexPiece::Sum(_)) {
                    return prox(piece, rho, &v);
                }
                (rho, piece.parts().into_iter().cloned().collect())
            }
            Metric::Split { lambda_min, p } => {
                let mut parts: Vec<ConvexPiece> = piece.parts().into_iter().cloned().collect();
                parts.push(ConvexPiece::WeightedQuadratic { weight: p.clone(), center: v.clone() });
                (self.sigma / lambda_min, parts)
            }
        };
        let mut opts = self.dr.clone();
        opts.tol = tol;
        if self.warm_start {
            opts.warm_start = self.warm[slot].take();
        }
        match prox_composite(&parts, rho, &v, &opts) {
            Ok(out) => {
                info.inner_iterations += out.iterations;
                if self.warm_start {
                    self.warm[slot] = Some(out.blocks);
                }
                Ok(out.point)
            }
            Err(Error::NonConvergence { iterations, best, .. }) if self.best_effort => {
                info.inner_iterations += iterations;
                info.inner_failures += 1;
                Ok(DVector::from_vec(best))
            }
            Err(e) => Err(e),
        }
    }

    /// One outer iteration from `z_k` with relative inner tolerance `inner_tol`.
    pub fn step(&mut self, z_k: &ProductPoint, inner_tol: f64) -> Result<(StepPair, StepInfo)> {
        let problem = self.problem;
        z_k.check_dims(problem.n(), problem.m())?;
        let sigma = self.sigma;
        let mut info = StepInfo::default();

        let f0 = problem.field(z_k);
        let vx = &z_k.x - self.x.w.solve(&f0.x)? * sigma;
        let vy = &z_k.y - self.y.w.solve(&f0.y)? * sigma;
        let xh = self.subproblem(0, problem.f(), true, vx, inner_tol, &mut info)?;
        let yh = self.subproblem(1, problem.g(), false, vy, inner_tol, &mut info)?;
        let half = ProductPoint::new(xh, yh);

        let f1 = problem.field(&half);
        let rx = self.x.sigma_hat.apply(&half.x)? * sigma + self.x.prox_weight.apply(&z_k.x)? - &f1.x * sigma;
        let ry = self.y.sigma_hat.apply(&half.y)? * sigma + self.y.prox_weight.apply(&z_k.y)? - &f1.y * sigma;
        let vx = self.x.w.solve(&rx)?;
        let vy = self.y.w.solve(&ry)?;
        let xf = self.subproblem(2, problem.f(), true, vx, inner_tol, &mut info)?;
        let yf = self.subproblem(3, problem.g(), false, vy, inner_tol, &mut info)?;
        Ok((StepPair { half, full: ProductPoint::new(xf, yf) }, info))
    }
}

/// One outer step through the general subproblem path.
pub fn mspacm_step(problem: &SaddleProblem, config: &SolverConfig, z_k: &ProductPoint) -> Result<StepPair> {
    Mspacm::new(problem, config)?.step(z_k, config.inner_tol(0)).map(|(s, _)| s)
}

/// Closed-form step for `f = g = 0`, with `W = σΣ̂ + Θ` and `F = D̃K`:
///
/// ```text
/// z^{k+1/2} = z^k − σW⁻¹F(z^k)
/// z^{k+1}   = W⁻¹[−σF(z^{k+1/2}) + σΣ̂z^{k+1/2} + Θz^k]
/// ```
///
/// The second line follows from the optimality condition of the full step;
/// note the factor `σ` on `F(z^{k+1/2})`.
pub fn mspacm_smooth_step(problem: &SaddleProblem, config: &SolverConfig, z_k: &ProductPoint) -> Result<StepPair> {
    if !problem.is_smooth() {
        return Err(Error::Unsupported("the closed-form step needs f = g = 0".into()));
    }
    z_k.check_dims(problem.n(), problem.m())?;
    let sigma = config.sigma;
    let sigma_hat = problem.sigma_hat();
    let theta = config.theta();
    let w = BlockOperator::combine(sigma, &sigma_hat, 1.0, &theta)?;
    let half = z_k.sub(&w.solve_spd(&problem.field(z_k))?.scale(sigma));
    let rhs = sigma_hat
        .apply(&half)?
        .sub(&problem.field(&half))
        .scale(sigma)
        .add(&theta.apply(z_k)?);
    let full = w.solve_spd(&rhs)?;
    Ok(StepPair { half, full })
}

fn require_smooth(problem: &SaddleProblem, what: &str) -> Result<()> {
    if problem.is_smooth() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{what} is only defined for f = g = 0")))
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("step size must be positive, got {eta}")))
    }
}

/// Implicit step `z⁺ = z_k − ηD̃K(z⁺)`, solved exactly for affine fields.
pub fn pp_step(problem: &SaddleProblem, eta: f64, z_k: &ProductPoint) -> Result<ProductPoint> {
    require_smooth(problem, "the proximal point step")?;
    check_eta(eta)?;
    let q = problem
        .coupling()
        .as_quadratic()
        .ok_or_else(|| Error::Unsupported("the proximal point step needs an affine field".into()))?;
    q.resolvent(eta)?.apply(z_k)
}

/// `w = z_k − ηD̃K(z_k)`, `z⁺ = z_k − ηD̃K(w)`.
pub fn eg_step(problem: &SaddleProblem, eta: f64, z_k: &ProductPoint) -> Result<ProductPoint> {
    require_smooth(problem, "the extra-gradient step")?;
    check_eta(eta)?;
    z_k.check_dims(problem.n(), problem.m())?;
    let w = z_k.axpy(-eta, &problem.field(z_k));
    Ok(z_k.axpy(-eta, &problem.field(&w)))
}

/// `z⁺ = z_k − 2ηD̃K(z_k) + ηD̃K(z_{k−1})`.
pub fn ogda_step(problem: &SaddleProblem, eta: f64, z_k: &ProductPoint, z_km1: &ProductPoint) -> Result<ProductPoint> {
    require_smooth(problem, "the optimistic gradient step")?;
    check_eta(eta)?;
    z_k.check_dims(problem.n(), problem.m())?;
    z_km1.check_dims(problem.n(), problem.m())?;
    Ok(z_k.axpy(-2.0 * eta, &problem.field(z_k)).axpy(eta, &problem.field(z_km1)))
}
