//! Saddle problems `min_x max_y f(x) + K(x, y) − g(y)`.
//!
//! A [`SaddleProblem`] bundles the smooth coupling `K`, the nonsmooth pieces
//! `f` and `g`, the majorization operators `Σ̂_f`, `Σ̂_g` and the Lipschitz
//! constant `η₀` of `DK`. The built-in families are quadratic in `(x, y)`
//! with an ℓ∞ penalty and optional constraint sets.

mod coupling;
mod instance;

pub use coupling::{Coupling, QuadraticCoupling, Resolvent};
pub use instance::{
    gen_gaussian_matrix, ConstraintCase, ConstraintData, DenseMatrix, Instance, InstanceSpec, PointData,
    SCHEMA_VERSION,
};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::prox::ConvexPiece;
use crate::spaces::{BlockOperator, GramFactor, ProductPoint, SelfAdjointOperator, PSD_TOL};

/// Default multiplier of `AᵀA` and `AAᵀ` in `Σ̂_f`, `Σ̂_g`.
pub const DEFAULT_SIGMA_SCALE: f64 = 0.1;

/// Whether `Σ̂_f ⪰ D²_xx K` and `Σ̂_g ⪰ −D²_yy K` hold, as eigenvalue margins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorizationReport {
    /// `λ_min(Σ̂_f − D²_xx K)`, when computable.
    pub x_margin: Option<f64>,
    /// `λ_min(Σ̂_g + D²_yy K)`, when computable.
    pub y_margin: Option<f64>,
}

impl MajorizationReport {
    pub fn x_holds(&self) -> Option<bool> {
        self.x_margin.map(|m| m >= -PSD_TOL)
    }

    pub fn y_holds(&self) -> Option<bool> {
        self.y_margin.map(|m| m >= -PSD_TOL)
    }
}

#[derive(Debug, Clone)]
pub struct SaddleProblem {
    coupling: Arc<dyn Coupling>,
    f: ConvexPiece,
    g: ConvexPiece,
    sigma_f: SelfAdjointOperator,
    sigma_g: SelfAdjointOperator,
    eta0: f64,
    known_saddle: Option<ProductPoint>,
}

impl SaddleProblem {
    pub fn new(
        coupling: Arc<dyn Coupling>,
        f: ConvexPiece,
        g: ConvexPiece,
        sigma_f: SelfAdjointOperator,
        sigma_g: SelfAdjointOperator,
        eta0: f64,
    ) -> Result<Self> {
        let (n, m) = coupling.dims();
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter("problem dimensions must be positive".into()));
        }
        for (piece, d) in [(&f, n), (&g, m)] {
            if let Some(k) = piece.dim_hint() {
                if k != d {
                    return Err(Error::dims(d, k));
                }
            }
        }
        if sigma_f.dim() != n {
            return Err(Error::dims(n, sigma_f.dim()));
        }
        if sigma_g.dim() != m {
            return Err(Error::dims(m, sigma_g.dim()));
        }
        for op in [&sigma_f, &sigma_g] {
            if !op.is_psd() {
                let (lambda_min, lambda_max) = op.extremal_eigs();
                return Err(Error::NotPsd { lambda_min, lambda_max });
            }
        }
        if !(eta0 >= 0.0 && eta0.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta0 must be finite and >= 0, got {eta0}")));
        }
        Ok(Self { coupling, f, g, sigma_f, sigma_g, eta0, known_saddle: None })
    }

    pub fn with_known_saddle(mut self, z: Option<ProductPoint>) -> Result<Self> {
        if let Some(z) = &z {
            z.check_dims(self.n(), self.m())?;
        }
        self.known_saddle = z;
        Ok(self)
    }

    pub fn with_sigma_hat(mut self, sigma_f: SelfAdjointOperator, sigma_g: SelfAdjointOperator) -> Result<Self> {
        let rebuilt = Self::new(self.coupling.clone(), self.f.clone(), self.g.clone(), sigma_f, sigma_g, self.eta0)?;
        self.sigma_f = rebuilt.sigma_f;
        self.sigma_g = rebuilt.sigma_g;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.coupling.dims().0
    }

    pub fn m(&self) -> usize {
        self.coupling.dims().1
    }

    pub fn coupling(&self) -> &dyn Coupling {
        self.coupling.as_ref()
    }

    pub fn f(&self) -> &ConvexPiece {
        &self.f
    }

    pub fn g(&self) -> &ConvexPiece {
        &self.g
    }

    pub fn sigma_f(&self) -> &SelfAdjointOperator {
        &self.sigma_f
    }

    pub fn sigma_g(&self) -> &SelfAdjointOperator {
        &self.sigma_g
    }

    /// `Σ̂ = diag(Σ̂_f, Σ̂_g)`.
    pub fn sigma_hat(&self) -> BlockOperator {
        BlockOperator::new(self.sigma_f.clone(), self.sigma_g.clone())
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    /// `η̂₀ = ‖Σ̂‖ + η₀` with the spectral norm of the block operator.
    pub fn eta_hat0(&self) -> f64 {
        self.sigma_f.spectral_norm().max(self.sigma_g.spectral_norm()) + self.eta0
    }

    pub fn known_saddle(&self) -> Option<&ProductPoint> {
        self.known_saddle.as_ref()
    }

    /// The data matrix `A` for the built-in quadratic families.
    pub fn matrix_factor(&self) -> Option<&Arc<GramFactor>> {
        self.coupling.as_quadratic().map(|q| q.factor())
    }

    /// `f = g = 0`.
    pub fn is_smooth(&self) -> bool {
        self.f.is_zero() && self.g.is_zero()
    }

    pub fn k_value(&self, z: &ProductPoint) -> f64 {
        self.coupling.value(z)
    }

    /// `f(x) + K(x, y) − g(y)`; indicators count with a small feasibility slack.
    pub fn value(&self, z: &ProductPoint) -> f64 {
        self.f.value(&z.x) + self.coupling.value(z) - self.g.value(&z.y)
    }

    pub fn grad_x(&self, z: &ProductPoint) -> DVector<f64> {
        self.coupling.grad_x(z)
    }

    pub fn grad_y(&self, z: &ProductPoint) -> DVector<f64> {
        self.coupling.grad_y(z)
    }

    /// `D̃K(z) = (D_xK, −D_yK)`.
    pub fn field(&self, z: &ProductPoint) -> ProductPoint {
        self.coupling.field(z)
    }

    pub fn majorization(&self) -> MajorizationReport {
        match self.coupling.isotropic_curvature() {
            Some((a, b)) => MajorizationReport {
                x_margin: Some(self.sigma_f.extremal_eigs().0 - a),
                y_margin: Some(self.sigma_g.extremal_eigs().0 - b),
            },
            None => MajorizationReport { x_margin: None, y_margin: None },
        }
    }

    /// Largest constraint violation of `z` over the indicator terms of `f` and `g`.
    pub fn infeasibility(&self, z: &ProductPoint) -> f64 {
        self.f.violation(&z.x).max(self.g.violation(&z.y))
    }
}

fn gram_sigma_hat(a: &Arc<GramFactor>, scale: f64) -> (SelfAdjointOperator, SelfAdjointOperator) {
    (SelfAdjointOperator::gram_columns(a.clone(), scale), SelfAdjointOperator::gram_rows(a.clone(), scale))
}

/// `K(x, y) = (1/m)[−½‖y‖² − bᵀy + yᵀAx] + (λ/2)‖x‖²` with `f = g = 0`.
///
/// `Σ̂_f = 0.1AᵀA`, `Σ̂_g = 0.1AAᵀ`; the saddle is the stationary point of `K`.
pub fn make_regression_saddle(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> Result<SaddleProblem> {
    regression_from_factor(GramFactor::new(a.clone()), b, lambda)
}

pub(crate) fn regression_from_factor(a: Arc<GramFactor>, b: &DVector<f64>, lambda: f64) -> Result<SaddleProblem> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let m = a.matrix().nrows();
    if b.len() != m {
        return Err(Error::dims(m, b.len()));
    }
    if a.matrix().ncols() == 0 || m == 0 {
        return Err(Error::InvalidParameter("matrix must be non-empty".into()));
    }
    let inv_m = 1.0 / m as f64;
    let coupling = QuadraticCoupling::new(a.clone(), lambda, inv_m, inv_m, b * inv_m)?;
    let eta0 = coupling.lipschitz();
    let saddle = coupling.stationary_point()?;
    let (sf, sg) = gram_sigma_hat(&a, DEFAULT_SIGMA_SCALE);
    SaddleProblem::new(Arc::new(coupling), ConvexPiece::Zero, ConvexPiece::Zero, sf, sg, eta0)?
        .with_known_saddle(Some(saddle))
}

/// The regression coupling with `f = μ_x‖x‖_∞ + δ_X`, `g = μ_y‖y‖_∞ + δ_Y`.
///
/// `x_set` and `y_set` must be indicator pieces (or absent).
pub fn make_linf_saddle(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    lambda: f64,
    mu_x: f64,
    mu_y: f64,
    x_set: Option<ConvexPiece>,
    y_set: Option<ConvexPiece>,
) -> Result<SaddleProblem> {
    linf_from_factor(GramFactor::new(a.clone()), b, lambda, mu_x, mu_y, x_set, y_set)
}

pub(crate) fn linf_from_factor(
    a: Arc<GramFactor>,
    b: &DVector<f64>,
    lambda: f64,
    mu_x: f64,
    mu_y: f64,
    x_set: Option<ConvexPiece>,
    y_set: Option<ConvexPiece>,
) -> Result<SaddleProblem> {
    let base = regression_from_factor(a, b, lambda)?;
    let build = |mu: f64, set: Option<ConvexPiece>| -> Result<ConvexPiece> {
        let mut parts = vec![ConvexPiece::linf(mu)?];
        if let Some(s) = set {
            if !s.parts().iter().all(|p| p.is_indicator()) {
                return Err(Error::InvalidParameter("constraint piece must be an indicator".into()));
            }
            parts.push(s);
        }
        let piece = ConvexPiece::sum(parts)?;
        Ok(if piece.is_zero() { ConvexPiece::Zero } else { piece })
    };
    let f = build(mu_x, x_set)?;
    let g = build(mu_y, y_set)?;
    let (n, m) = (base.n(), base.m());

    let has_sets = f.parts().iter().chain(g.parts().iter()).any(|p| p.is_indicator());
    let origin = ProductPoint::zeros(n, m);
    let known = if b.iter().all(|&v| v == 0.0) {
        // ∂‖·‖_∞(0) contains 0 and the field vanishes at the origin.
        (f.violation(&origin.x) == 0.0 && g.violation(&origin.y) == 0.0).then_some(origin)
    } else if f.is_zero() && g.is_zero() && !has_sets {
        base.known_saddle().cloned()
    } else {
        None
    };
    let problem = SaddleProblem::new(
        base.coupling.clone(),
        f,
        g,
        base.sigma_f.clone(),
        base.sigma_g.clone(),
        base.eta0,
    )?;
    problem.with_known_saddle(known)
}

/// `∇K̂(z; anchor) = D̃K(anchor) + Σ̂(z − anchor)`, the field of the majorized
/// surrogate built at `anchor`.
pub fn surrogate_grad(problem: &SaddleProblem, z: &ProductPoint, anchor: &ProductPoint) -> Result<ProductPoint> {
    z.check_dims(problem.n(), problem.m())?;
    anchor.check_dims(problem.n(), problem.m())?;
    let base = problem.field(anchor);
    let corr = problem.sigma_hat().apply(&z.sub(anchor))?;
    Ok(base.add(&corr))
}

/// Proximal and majorization operators for a matrix family:
/// `S = T = scale_s·‖A‖₂·I`, `Σ̂_f = scale_sigma·AᵀA`, `Σ̂_g = scale_sigma·AAᵀ`.
pub fn default_operators(
    problem: &SaddleProblem,
    scale_s: f64,
    scale_sigma: f64,
) -> Result<(SelfAdjointOperator, SelfAdjointOperator, SelfAdjointOperator, SelfAdjointOperator)> {
    let a = problem
        .matrix_factor()
        .ok_or_else(|| Error::Unsupported("default operators need a matrix-based problem".into()))?;
    if !(scale_s >= 0.0 && scale_sigma >= 0.0) {
        return Err(Error::InvalidParameter("operator scales must be >= 0".into()));
    }
    let norm = a.spectral_norm();
    let s = SelfAdjointOperator::scaled_identity(problem.n(), scale_s * norm);
    let t = SelfAdjointOperator::scaled_identity(problem.m(), scale_s * norm);
    let (sf, sg) = if scale_sigma == 0.0 {
        (SelfAdjointOperator::zero(problem.n()), SelfAdjointOperator::zero(problem.m()))
    } else {
        gram_sigma_hat(a, scale_sigma)
    };
    Ok((s, t, sf, sg))
}
