use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative asymmetry accepted when wrapping a dense matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// `lambda_min >= -PSD_TOL * max(1, lambda_max)` counts as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;
/// `lambda_min > PD_TOL * lambda_max` counts as positive definite.
pub const PD_TOL: f64 = 1e-10;

/// A matrix `F` shared by the Gram operators `FᵀF` and `FFᵀ`.
///
/// The Gram products and their spectra are computed on first use and cached,
/// so every operator derived from the same factor (scalings, identity shifts)
/// reuses one eigendecomposition.
pub struct GramFactor {
    matrix: DMatrix<f64>,
    columns: OnceLock<GramCache>,
    rows: OnceLock<GramCache>,
}

struct GramCache {
    gram: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl GramFactor {
    pub fn new(matrix: DMatrix<f64>) -> Arc<Self> {
        Arc::new(Self {
            matrix,
            columns: OnceLock::new(),
            rows: OnceLock::new(),
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn cache(&self, side: GramSide) -> &GramCache {
        let cell = match side {
            GramSide::Columns => &self.columns,
            GramSide::Rows => &self.rows,
        };
        cell.get_or_init(|| {
            let gram = match side {
                GramSide::Columns => self.matrix.tr_mul(&self.matrix),
                GramSide::Rows => &self.matrix * self.matrix.transpose(),
            };
            let mut eigenvalues: Vec<f64> =
                gram.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            eigenvalues.sort_by(f64::total_cmp);
            GramCache { gram, eigenvalues }
        })
    }

    /// Largest singular value of the factor.
    pub fn spectral_norm(&self) -> f64 {
        let side = if self.matrix.ncols() <= self.matrix.nrows() {
            GramSide::Columns
        } else {
            GramSide::Rows
        };
        self.cache(side)
            .eigenvalues
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(0.0)
            .sqrt()
    }

    /// Singular values in ascending order (length `min(rows, cols)`).
    pub fn singular_values(&self) -> Vec<f64> {
        let side = if self.matrix.ncols() <= self.matrix.nrows() {
            GramSide::Columns
        } else {
            GramSide::Rows
        };
        self.cache(side)
            .eigenvalues
            .iter()
            .map(|l| l.max(0.0).sqrt())
            .collect()
    }
}

impl fmt::Debug for GramFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GramFactor")
            .field("rows", &self.matrix.nrows())
            .field("cols", &self.matrix.ncols())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramSide {
    /// `FᵀF`, acting on vectors of length `cols(F)`.
    Columns,
    /// `FFᵀ`, acting on vectors of length `rows(F)`.
    Rows,
}

/// Concrete storage of a self-adjoint operator.
#[derive(Debug, Clone)]
pub enum Representation {
    ScaledIdentity(f64),
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
    /// `shift·I + scale·G` with `G` one of the Gram products of `factor`.
    Gram {
        factor: Arc<GramFactor>,
        side: GramSide,
        scale: f64,
        shift: f64,
    },
}

/// A self-adjoint linear operator on `R^dim` with a lazily cached spectrum.
#[derive(Debug, Clone)]
pub struct SelfAdjointOperator {
    dim: usize,
    repr: Representation,
    spectrum: OnceLock<Arc<Vec<f64>>>,
    cholesky: OnceLock<Option<Arc<Cholesky<f64, Dyn>>>>,
}

impl SelfAdjointOperator {
    fn from_repr(dim: usize, repr: Representation) -> Self {
        Self {
            dim,
            repr,
            spectrum: OnceLock::new(),
            cholesky: OnceLock::new(),
        }
    }

    pub fn scaled_identity(dim: usize, alpha: f64) -> Self {
        Self::from_repr(dim, Representation::ScaledIdentity(alpha))
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn zero(dim: usize) -> Self {
        Self::scaled_identity(dim, 0.0)
    }

    pub fn diagonal(d: DVector<f64>) -> Self {
        Self::from_repr(d.len(), Representation::Diagonal(d))
    }

    /// Wraps a dense matrix after checking symmetry to [`SYMMETRY_TOL`] relative.
    pub fn dense(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::dims(m.nrows(), m.ncols()));
        }
        let scale = m.amax().max(1.0);
        let asymmetry = (&m - m.transpose()).amax();
        if asymmetry > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self::from_repr(m.nrows(), Representation::Dense(sym)))
    }

    /// `scale · FᵀF`.
    pub fn gram_columns(factor: Arc<GramFactor>, scale: f64) -> Self {
        let dim = factor.matrix.ncols();
        Self::from_repr(
            dim,
            Representation::Gram {
                factor,
                side: GramSide::Columns,
                scale,
                shift: 0.0,
            },
        )
    }

    /// `scale · FFᵀ`.
    pub fn gram_rows(factor: Arc<GramFactor>, scale: f64) -> Self {
        let dim = factor.matrix.nrows();
        Self::from_repr(
            dim,
            Representation::Gram {
                factor,
                side: GramSide::Rows,
                scale,
                shift: 0.0,
            },
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    /// `Some(alpha)` when the operator is `alpha·I`.
    pub fn as_scaled_identity(&self) -> Option<f64> {
        match &self.repr {
            Representation::ScaledIdentity(a) => Some(*a),
            Representation::Diagonal(d) => {
                let first = d.get(0).copied().unwrap_or(0.0);
                d.iter().all(|v| *v == first).then_some(first)
            }
            Representation::Gram { scale, shift, .. } if *scale == 0.0 => Some(*shift),
            _ => None,
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.dim {
            return Err(Error::dims(self.dim, v.len()));
        }
        Ok(self.mul(v))
    }

    /// Unchecked application; callers guarantee `v.len() == dim`.
    pub(crate) fn mul(&self, v: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(v.len(), self.dim);
        match &self.repr {
            Representation::ScaledIdentity(a) => v * *a,
            Representation::Diagonal(d) => d.component_mul(v),
            Representation::Dense(m) => m * v,
            Representation::Gram {
                factor,
                side,
                scale,
                shift,
            } => {
                let f = &factor.matrix;
                let g = match side {
                    GramSide::Columns => f.tr_mul(&(f * v)),
                    GramSide::Rows => f * f.tr_mul(v),
                };
                let mut out = g * *scale;
                if *shift != 0.0 {
                    out.axpy(*shift, v, 1.0);
                }
                out
            }
        }
    }

    /// `⟨v, W v⟩`.
    pub fn quad_form(&self, v: &DVector<f64>) -> f64 {
        match &self.repr {
            Representation::ScaledIdentity(a) => a * v.norm_squared(),
            Representation::Diagonal(d) => d.iter().zip(v.iter()).map(|(di, vi)| di * vi * vi).sum(),
            Representation::Gram {
                factor,
                side,
                scale,
                shift,
            } => {
                let f = &factor.matrix;
                let inner = match side {
                    GramSide::Columns => (f * v).norm_squared(),
                    GramSide::Rows => f.tr_mul(v).norm_squared(),
                };
                scale * inner + shift * v.norm_squared()
            }
            Representation::Dense(_) => v.dot(&self.mul(v)),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.repr {
            Representation::ScaledIdentity(a) => DMatrix::identity(self.dim, self.dim) * *a,
            Representation::Diagonal(d) => DMatrix::from_diagonal(d),
            Representation::Dense(m) => m.clone(),
            Representation::Gram {
                factor,
                side,
                scale,
                shift,
            } => {
                let mut g = &factor.cache(*side).gram * *scale;
                for i in 0..self.dim {
                    g[(i, i)] += shift;
                }
                g
            }
        }
    }

    /// All eigenvalues in ascending order; computed once and cached.
    pub fn eigenvalues(&self) -> &[f64] {
        self.spectrum.get_or_init(|| {
            let mut ev: Vec<f64> = match &self.repr {
                Representation::ScaledIdentity(a) => vec![*a; self.dim],
                Representation::Diagonal(d) => d.iter().copied().collect(),
                Representation::Dense(m) => m.clone().symmetric_eigen().eigenvalues.iter().copied().collect(),
                Representation::Gram {
                    factor,
                    side,
                    scale,
                    shift,
                } => factor
                    .cache(*side)
                    .eigenvalues
                    .iter()
                    .map(|mu| scale * mu.max(0.0) + shift)
                    .collect(),
            };
            ev.sort_by(f64::total_cmp);
            Arc::new(ev)
        })
    }

    /// `(lambda_min, lambda_max)`.
    pub fn extremal_eigs(&self) -> (f64, f64) {
        let ev = self.eigenvalues();
        match (ev.first(), ev.last()) {
            (Some(lo), Some(hi)) => (*lo, *hi),
            _ => (0.0, 0.0),
        }
    }

    pub fn spectral_norm(&self) -> f64 {
        let (lo, hi) = self.extremal_eigs();
        lo.abs().max(hi.abs())
    }

    pub fn is_psd(&self) -> bool {
        let (lo, hi) = self.extremal_eigs();
        lo >= -PSD_TOL * hi.max(1.0)
    }

    pub fn is_pd(&self) -> bool {
        let (lo, hi) = self.extremal_eigs();
        hi > 0.0 && lo > PD_TOL * hi
    }

    /// Solves `W z = r` for symmetric positive definite `W`.
    pub fn solve(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        if r.len() != self.dim {
            return Err(Error::dims(self.dim, r.len()));
        }
        match &self.repr {
            Representation::ScaledIdentity(a) => {
                if *a > 0.0 {
                    Ok(r / *a)
                } else {
                    Err(Error::SolveFailure(format!("scaled identity with alpha = {a}")))
                }
            }
            Representation::Diagonal(d) => {
                let (lo, hi) = self.extremal_eigs();
                if !(hi > 0.0 && lo > PD_TOL * hi) {
                    return Err(Error::SolveFailure(format!(
                        "diagonal operator not positive definite (min {lo:.3e})"
                    )));
                }
                Ok(r.component_div(d))
            }
            _ => {
                if !self.is_pd() {
                    let (lo, hi) = self.extremal_eigs();
                    return Err(Error::SolveFailure(format!(
                        "operator not positive definite (lambda_min {lo:.3e}, lambda_max {hi:.3e})"
                    )));
                }
                let chol = self
                    .cholesky
                    .get_or_init(|| Cholesky::new(self.to_dense()).map(Arc::new))
                    .as_ref()
                    .ok_or_else(|| Error::SolveFailure("Cholesky factorization failed".into()))?;
                Ok(chol.solve(r))
            }
        }
    }

    /// `c · W`.
    pub fn scaled(&self, c: f64) -> Self {
        let repr = match &self.repr {
            Representation::ScaledIdentity(a) => Representation::ScaledIdentity(a * c),
            Representation::Diagonal(d) => Representation::Diagonal(d * c),
            Representation::Dense(m) => Representation::Dense(m * c),
            Representation::Gram {
                factor,
                side,
                scale,
                shift,
            } => Representation::Gram {
                factor: factor.clone(),
                side: *side,
                scale: scale * c,
                shift: shift * c,
            },
        };
        Self::from_repr(self.dim, repr)
    }

    /// `W + alpha·I`.
    pub fn shifted(&self, alpha: f64) -> Self {
        let repr = match &self.repr {
            Representation::ScaledIdentity(a) => Representation::ScaledIdentity(a + alpha),
            Representation::Diagonal(d) => Representation::Diagonal(d.add_scalar(alpha)),
            Representation::Dense(m) => {
                let mut m = m.clone();
                for i in 0..self.dim {
                    m[(i, i)] += alpha;
                }
                Representation::Dense(m)
            }
            Representation::Gram {
                factor,
                side,
                scale,
                shift,
            } => Representation::Gram {
                factor: factor.clone(),
                side: *side,
                scale: *scale,
                shift: shift + alpha,
            },
        };
        Self::from_repr(self.dim, repr)
    }

    /// `a·self + b·other`, kept in structured form whenever possible.
    pub fn combine(a: f64, lhs: &Self, b: f64, rhs: &Self) -> Result<Self> {
        if lhs.dim != rhs.dim {
            return Err(Error::dims(lhs.dim, rhs.dim));
        }
        use Representation::*;
        let out = match (&lhs.repr, &rhs.repr) {
            (_, ScaledIdentity(beta)) => lhs.scaled(a).shifted(b * beta),
            (ScaledIdentity(alpha), _) => rhs.scaled(b).shifted(a * alpha),
            (Diagonal(d1), Diagonal(d2)) => Self::diagonal(d1 * a + d2 * b),
            (
                Gram {
                    factor: f1,
                    side: s1,
                    scale: c1,
                    shift: h1,
                },
                Gram {
                    factor: f2,
                    side: s2,
                    scale: c2,
                    shift: h2,
                },
            ) if Arc::ptr_eq(f1, f2) && s1 == s2 => Self::from_repr(
                lhs.dim,
                Gram {
                    factor: f1.clone(),
                    side: *s1,
                    scale: a * c1 + b * c2,
                    shift: a * h1 + b * h2,
                },
            ),
            _ => Self::from_repr(lhs.dim, Dense(lhs.to_dense() * a + rhs.to_dense() * b)),
        };
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::combine(1.0, self, 1.0, other)
    }
}
