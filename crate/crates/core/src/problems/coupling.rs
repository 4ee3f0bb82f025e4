use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spaces::{GramFactor, ProductPoint, SelfAdjointOperator};

/// The smooth convex-concave part `K(x, y)` of a saddle problem.
pub trait Coupling: Debug + Send + Sync {
    /// `(n, m)`: dimensions of the x- and y-blocks.
    fn dims(&self) -> (usize, usize);

    fn value(&self, z: &ProductPoint) -> f64;

    fn grad_x(&self, z: &ProductPoint) -> DVector<f64>;

    fn grad_y(&self, z: &ProductPoint) -> DVector<f64>;

    /// The monotone field `(D_xK, −D_yK)`.
    fn field(&self, z: &ProductPoint) -> ProductPoint {
        ProductPoint::new(self.grad_x(z), -self.grad_y(z))
    }

    /// Scalar curvatures `(a, b)` with `D²_xx K = aI` and `D²_yy K = −bI`, when
    /// the Hessian blocks are isotropic constants.
    fn isotropic_curvature(&self) -> Option<(f64, f64)> {
        None
    }

    /// Downcast hook for solvers that need the affine structure of the field.
    fn as_quadratic(&self) -> Option<&QuadraticCoupling> {
        None
    }
}

/// `K(x, y) = (λ/2)‖x‖² + c·yᵀAx − (ν/2)‖y‖² − βᵀy`.
///
/// Its field is affine, `(D_xK, −D_yK)(z) = Mz + d` with
/// `M = [[λI, cAᵀ], [−cA, νI]]` and `d = (0, β)`.
#[derive(Debug, Clone)]
pub struct QuadraticCoupling {
    a: Arc<GramFactor>,
    lambda: f64,
    scale: f64,
    nu: f64,
    beta: DVector<f64>,
}

impl QuadraticCoupling {
    pub fn new(a: Arc<GramFactor>, lambda: f64, scale: f64, nu: f64, beta: DVector<f64>) -> Result<Self> {
        let m = a.matrix().nrows();
        if beta.len() != m {
            return Err(Error::dims(m, beta.len()));
        }
        for (name, v) in [("lambda", lambda), ("nu", nu)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !scale.is_finite() {
            return Err(Error::InvalidParameter("coupling scale must be finite".into()));
        }
        if a.matrix().iter().any(|v| !v.is_finite()) || beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("coupling data has non-finite entries".into()));
        }
        Ok(Self { a, lambda, scale, nu, beta })
    }

    /// The scalar game `K(x, y) = xy`.
    pub fn bilinear_scalar() -> Self {
        let a = GramFactor::new(DMatrix::from_element(1, 1, 1.0));
        Self::new(a, 0.0, 1.0, 0.0, DVector::zeros(1)).expect("valid scalar game")
    }

    pub fn factor(&self) -> &Arc<GramFactor> {
        &self.a
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.a.matrix()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    /// Spectral norm of the (constant) Hessian `[[λI, cAᵀ], [cA, −νI]]`,
    /// i.e. the Lipschitz constant of `DK`.
    pub fn lipschitz(&self) -> f64 {
        let (l, nu, c) = (self.lambda, self.nu, self.scale);
        let smax = self.a.spectral_norm();
        let top = 0.5 * ((l - nu).abs() + ((l + nu).powi(2) + 4.0 * c * c * smax * smax).sqrt());
        // Directions outside the range of A see only the diagonal blocks.
        top.max(l).max(nu)
    }

    /// Stationary point of `K` (unconstrained saddle), when it is unique.
    pub fn stationary_point(&self) -> Result<ProductPoint> {
        let (n, m) = self.dims();
        if self.beta.iter().all(|&b| b == 0.0) {
            return Ok(ProductPoint::zeros(n, m));
        }
        if !(self.nu > 0.0) {
            return Err(Error::Unsupported("stationary solve needs nu > 0".into()));
        }
        // λx + cAᵀy = 0 and −cAx + νy + β = 0.
        let c = self.scale;
        let op = SelfAdjointOperator::gram_columns(self.a.clone(), c * c / self.nu).shifted(self.lambda);
        let rhs = self.matrix().tr_mul(&self.beta) * (c / self.nu);
        let x = op.solve(&rhs)?;
        let y = (self.matrix() * &x * c - &self.beta) / self.nu;
        Ok(ProductPoint::new(x, y))
    }

    /// Prepares `z ↦ (I + ηM)⁻¹(z − ηd)`, the resolvent of the field.
    pub fn resolvent(&self, eta: f64) -> Result<Resolvent> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {eta}")));
        }
        let c = self.scale;
        let dy = 1.0 + eta * self.nu;
        let op = SelfAdjointOperator::gram_columns(self.a.clone(), eta * eta * c * c / dy).shifted(1.0 + eta * self.lambda);
        Ok(Resolvent { coupling: self.clone(), eta, op })
    }
}

/// Cached linear solver for one resolvent step size.
#[derive(Debug, Clone)]
pub struct Resolvent {
    coupling: QuadraticCoupling,
    eta: f64,
    op: SelfAdjointOperator,
}

impl Resolvent {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Solves `(I + ηM)z⁺ = z − ηd` through the Schur complement on the x-block.
    pub fn apply(&self, z: &ProductPoint) -> Result<ProductPoint> {
        let k = &self.coupling;
        z.check_dims(k.dims().0, k.dims().1)?;
        let eta = self.eta;
        let c = k.scale;
        let dy = 1.0 + eta * k.nu;
        let rx = &z.x;
        let ry = &z.y - &k.beta * eta;
        let rhs = rx - k.matrix().tr_mul(&ry) * (eta * c / dy);
        let x = self.op.solve(&rhs)?;
        let y = (ry + k.matrix() * &x * (eta * c)) / dy;
        Ok(ProductPoint::new(x, y))
    }
}

impl Coupling for QuadraticCoupling {
    fn dims(&self) -> (usize, usize) {
        (self.a.matrix().ncols(), self.a.matrix().nrows())
    }

    fn value(&self, z: &ProductPoint) -> f64 {
        let ax = self.matrix() * &z.x;
        0.5 * self.lambda * z.x.norm_squared() + self.scale * z.y.dot(&ax)
            - 0.5 * self.nu * z.y.norm_squared()
            - self.beta.dot(&z.y)
    }

    fn grad_x(&self, z: &ProductPoint) -> DVector<f64> {
        &z.x * self.lambda + self.matrix().tr_mul(&z.y) * self.scale
    }

    fn grad_y(&self, z: &ProductPoint) -> DVector<f64> {
        self.matrix() * &z.x * self.scale - &z.y * self.nu - &self.beta
    }

    fn isotropic_curvature(&self) -> Option<(f64, f64)> {
        Some((self.lambda, self.nu))
    }

    fn as_quadratic(&self) -> Option<&QuadraticCoupling> {
        Some(self)
    }
}
