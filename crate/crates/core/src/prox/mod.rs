//! Proximal maps and projections for the nonsmooth terms `f` and `g`.
//!
//! `prox(ψ, ρ, v) = argmin_w ψ(w) + ‖w − v‖² / (2ρ)`. Indicators reduce to
//! Euclidean projections; sums are handled by [`prox_composite_dr`].

mod composite;
mod l1;
mod sets;

pub use composite::{prox_composite, prox_composite_dr, DrOptions, DrOutcome};
pub use l1::{project_l1_ball, prox_linf};
pub use sets::{
    project_affine, project_polyhedron, project_quadratic_set, AffineSet, DykstraOutcome, Polyhedron,
    QuadraticSet, DEFAULT_MAX_SWEEPS, DEFAULT_PROJECTION_TOL,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spaces::SelfAdjointOperator;

/// Relative constraint slack used by [`ConvexPiece::value`] for indicators.
pub const INDICATOR_SLACK: f64 = 1e-8;

/// A closed proper convex function with a computable prox.
#[derive(Debug, Clone)]
pub enum ConvexPiece {
    Zero,
    /// `(λ/2)‖x‖²`.
    SquaredL2 { weight: f64 },
    /// `½‖x − center‖²_P` for a PSD operator `P`.
    WeightedQuadratic { weight: SelfAdjointOperator, center: DVector<f64> },
    /// `μ‖x‖_∞`.
    LInf { weight: f64 },
    Affine(AffineSet),
    Polyhedron(Polyhedron),
    QuadraticSet(QuadraticSet),
    Sum(Vec<ConvexPiece>),
}

impl ConvexPiece {
    pub fn squared_l2(weight: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("squared-l2 weight must be >= 0, got {weight}")));
        }
        Ok(ConvexPiece::SquaredL2 { weight })
    }

    pub fn linf(weight: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("l-inf weight must be >= 0, got {weight}")));
        }
        Ok(ConvexPiece::LInf { weight })
    }

    pub fn weighted_quadratic(weight: SelfAdjointOperator, center: DVector<f64>) -> Result<Self> {
        if weight.dim() != center.len() {
            return Err(Error::dims(weight.dim(), center.len()));
        }
        if !weight.is_psd() {
            let (lambda_min, lambda_max) = weight.extremal_eigs();
            return Err(Error::NotPsd { lambda_min, lambda_max });
        }
        Ok(ConvexPiece::WeightedQuadratic { weight, center })
    }

    pub fn affine(b_mat: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        Ok(ConvexPiece::Affine(AffineSet::new(b_mat, b)?))
    }

    pub fn polyhedron(m: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        Ok(ConvexPiece::Polyhedron(Polyhedron::new(m, b)?))
    }

    pub fn quadratic_set(q: DMatrix<f64>, c: DVector<f64>, bq: f64) -> Result<Self> {
        Ok(ConvexPiece::QuadraticSet(QuadraticSet::new(q, c, bq)?))
    }

    /// A sum of pieces; nested sums are flattened and a single term is unwrapped.
    pub fn sum(parts: Vec<ConvexPiece>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("sum of pieces must be non-empty".into()));
        }
        let mut flat = Vec::with_capacity(parts.len());
        flatten_into(parts, &mut flat);
        let mut dim = None;
        for p in &flat {
            if let Some(d) = p.dim_hint() {
                match dim {
                    Some(e) if e != d => return Err(Error::dims(e, d)),
                    _ => dim = Some(d),
                }
            }
        }
        if flat.len() == 1 {
            return Ok(flat.pop().unwrap());
        }
        Ok(ConvexPiece::Sum(flat))
    }

    /// Dimension fixed by the piece's data, if any.
    pub fn dim_hint(&self) -> Option<usize> {
        match self {
            ConvexPiece::Zero | ConvexPiece::SquaredL2 { .. } | ConvexPiece::LInf { .. } => None,
            ConvexPiece::WeightedQuadratic { center, .. } => Some(center.len()),
            ConvexPiece::Affine(s) => Some(s.dim()),
            ConvexPiece::Polyhedron(s) => Some(s.dim()),
            ConvexPiece::QuadraticSet(s) => Some(s.dim()),
            ConvexPiece::Sum(parts) => parts.iter().find_map(|p| p.dim_hint()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ConvexPiece::Zero => true,
            ConvexPiece::SquaredL2 { weight } | ConvexPiece::LInf { weight } => *weight == 0.0,
            ConvexPiece::Sum(parts) => parts.iter().all(|p| p.is_zero()),
            _ => false,
        }
    }

    pub fn is_indicator(&self) -> bool {
        matches!(self, ConvexPiece::Affine(_) | ConvexPiece::Polyhedron(_) | ConvexPiece::QuadraticSet(_))
    }

    /// Terms of the piece as a flat list.
    pub fn parts(&self) -> Vec<&ConvexPiece> {
        match self {
            ConvexPiece::Sum(parts) => parts.iter().flat_map(|p| p.parts()).collect(),
            other => vec![other],
        }
    }

    /// Function value; indicators count a point as feasible up to a relative slack.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.value_with_slack(x, INDICATOR_SLACK)
    }

    pub fn value_with_slack(&self, x: &DVector<f64>, slack: f64) -> f64 {
        let gate = |viol: f64, scale: f64| if viol <= slack * (1.0 + scale) { 0.0 } else { f64::INFINITY };
        match self {
            ConvexPiece::Zero => 0.0,
            ConvexPiece::SquaredL2 { weight } => 0.5 * weight * x.norm_squared(),
            ConvexPiece::WeightedQuadratic { weight, center } => 0.5 * weight.quad_form(&(x - center)),
            ConvexPiece::LInf { weight } => weight * x.amax(),
            ConvexPiece::Affine(s) => gate(s.violation(x), s.rhs().amax()),
            ConvexPiece::Polyhedron(s) => gate(s.violation(x), s.rhs().amax()),
            ConvexPiece::QuadraticSet(s) => gate(s.violation(x), s.bq().abs()),
            ConvexPiece::Sum(parts) => parts.iter().map(|p| p.value_with_slack(x, slack)).sum(),
        }
    }

    /// Largest constraint violation over the indicator terms (zero if there are none).
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        match self {
            ConvexPiece::Affine(s) => s.violation(x),
            ConvexPiece::Polyhedron(s) => s.violation(x),
            ConvexPiece::QuadraticSet(s) => s.violation(x),
            ConvexPiece::Sum(parts) => parts.iter().map(|p| p.violation(x)).fold(0.0, f64::max),
            _ => 0.0,
        }
    }
}

fn flatten_into(parts: Vec<ConvexPiece>, out: &mut Vec<ConvexPiece>) {
    for p in parts {
        match p {
            ConvexPiece::Sum(inner) => flatten_into(inner, out),
            ConvexPiece::Zero => {}
            other => out.push(other),
        }
    }
    if out.is_empty() {
        out.push(ConvexPiece::Zero);
    }
}

fn check_prox_args(rho: f64, v: &DVector<f64>) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("prox parameter must be > 0, got {rho}")));
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidParameter("prox input has non-finite entries".into()));
    }
    Ok(())
}

/// `argmin_w ψ(w) + ‖w − v‖² / (2ρ)`.
pub fn prox(psi: &ConvexPiece, rho: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
    check_prox_args(rho, v)?;
    if let Some(d) = psi.dim_hint() {
        if d != v.len() {
            return Err(Error::dims(d, v.len()));
        }
    }
    match psi {
        ConvexPiece::Sum(parts) => prox_composite(parts, rho, v, &DrOptions::default()).map(|o| o.point),
        single => prox_single(single, rho, v),
    }
}

pub(crate) fn prox_single(psi: &ConvexPiece, rho: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
    match psi {
        ConvexPiece::Zero => Ok(v.clone()),
        ConvexPiece::SquaredL2 { weight } => Ok(v / (1.0 + rho * weight)),
        ConvexPiece::WeightedQuadratic { weight, center } => {
            let rhs = weight.apply(center)? + v / rho;
            weight.shifted(1.0 / rho).solve(&rhs)
        }
        ConvexPiece::LInf { weight } => prox_linf(*weight, rho, v),
        ConvexPiece::Affine(s) => s.project(v),
        ConvexPiece::Polyhedron(s) => s.project(v),
        ConvexPiece::QuadraticSet(s) => s.project(v),
        ConvexPiece::Sum(parts) => prox_composite(parts, rho, v, &DrOptions::default()).map(|o| o.point),
    }
}
