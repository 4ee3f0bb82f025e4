use crate::error::{Error, Result};

use super::{ProductPoint, SelfAdjointOperator};

/// Block-diagonal operator `(x, y) ↦ (W_x x, W_y y)` on the product space.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    pub x: SelfAdjointOperator,
    pub y: SelfAdjointOperator,
}

impl BlockOperator {
    pub fn new(x: SelfAdjointOperator, y: SelfAdjointOperator) -> Self {
        Self { x, y }
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self::scaled_identity(n, m, 1.0)
    }

    pub fn scaled_identity(n: usize, m: usize, alpha: f64) -> Self {
        Self::new(
            SelfAdjointOperator::scaled_identity(n, alpha),
            SelfAdjointOperator::scaled_identity(m, alpha),
        )
    }

    pub fn zero(n: usize, m: usize) -> Self {
        Self::scaled_identity(n, m, 0.0)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.dim(), self.y.dim())
    }

    fn check(&self, z: &ProductPoint) -> Result<()> {
        let (n, m) = self.dims();
        z.check_dims(n, m)
    }

    pub fn apply(&self, z: &ProductPoint) -> Result<ProductPoint> {
        self.check(z)?;
        Ok(self.mul(z))
    }

    pub(crate) fn mul(&self, z: &ProductPoint) -> ProductPoint {
        ProductPoint::new(self.x.mul(&z.x), self.y.mul(&z.y))
    }

    /// `⟨z, W z⟩` without a PSD check.
    pub fn quad_form(&self, z: &ProductPoint) -> f64 {
        self.x.quad_form(&z.x) + self.y.quad_form(&z.y)
    }

    /// `⟨z, W z⟩` for positive semidefinite `W`.
    pub fn weighted_norm_sq(&self, z: &ProductPoint) -> Result<f64> {
        self.check(z)?;
        if !self.is_psd() {
            let (lambda_min, lambda_max) = self.extremal_eigs();
            return Err(Error::NotPsd {
                lambda_min,
                lambda_max,
            });
        }
        Ok(self.quad_form(z).max(0.0))
    }

    pub fn extremal_eigs(&self) -> (f64, f64) {
        let (xl, xh) = self.x.extremal_eigs();
        let (yl, yh) = self.y.extremal_eigs();
        (xl.min(yl), xh.max(yh))
    }

    pub fn spectral_norm(&self) -> f64 {
        self.x.spectral_norm().max(self.y.spectral_norm())
    }

    pub fn is_psd(&self) -> bool {
        self.x.is_psd() && self.y.is_psd()
    }

    pub fn is_pd(&self) -> bool {
        self.x.is_pd() && self.y.is_pd()
    }

    /// Solves `W z = r` blockwise for SPD `W`.
    pub fn solve_spd(&self, r: &ProductPoint) -> Result<ProductPoint> {
        self.check(r)?;
        Ok(ProductPoint::new(self.x.solve(&r.x)?, self.y.solve(&r.y)?))
    }

    pub fn combine(a: f64, lhs: &Self, b: f64, rhs: &Self) -> Result<Self> {
        Ok(Self::new(
            SelfAdjointOperator::combine(a, &lhs.x, b, &rhs.x)?,
            SelfAdjointOperator::combine(a, &lhs.y, b, &rhs.y)?,
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::combine(1.0, self, 1.0, other)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.x.scaled(c), self.y.scaled(c))
    }

    pub fn shifted(&self, alpha: f64) -> Self {
        Self::new(self.x.shifted(alpha), self.y.shifted(alpha))
    }
}

/// Applies `w` to `z`.
pub fn apply(w: &BlockOperator, z: &ProductPoint) -> Result<ProductPoint> {
    w.apply(z)
}

/// `⟨z, W z⟩`; fails when `W` is not PSD.
pub fn weighted_norm_sq(z: &ProductPoint, w: &BlockOperator) -> Result<f64> {
    w.weighted_norm_sq(z)
}

pub fn extremal_eigs(w: &BlockOperator) -> (f64, f64) {
    w.extremal_eigs()
}

pub fn solve_spd(w: &BlockOperator, r: &ProductPoint) -> Result<ProductPoint> {
    w.solve_spd(r)
}
