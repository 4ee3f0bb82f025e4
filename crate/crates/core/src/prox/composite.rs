use nalgebra::DVector;

use super::{prox_single, ConvexPiece};
use crate::error::{Error, Result};
use crate::spaces::SelfAdjointOperator;

/// Settings for the product-space Douglas-Rachford solver.
#[derive(Debug, Clone)]
pub struct DrOptions {
    /// Stop when the splitting residual falls below `tol·max(‖v‖, ‖x‖)`.
    pub tol: f64,
    pub max_inner: usize,
    /// Douglas-Rachford step as a multiple of the prox parameter `ρ`.
    pub step: f64,
    pub relaxation: f64,
    /// Per-block state from a previous call ([`DrOutcome::blocks`]).
    pub warm_start: Option<Vec<DVector<f64>>>,
}

impl Default for DrOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_inner: 20_000, step: 1.0, relaxation: 1.0, warm_start: None }
    }
}

#[derive(Debug, Clone)]
pub struct DrOutcome {
    pub point: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Splitting state, reusable as a warm start.
    pub blocks: Vec<DVector<f64>>,
}

/// The anchor `‖x − v‖²/(2ρ)` plus every quadratic term, optionally with one
/// nonsmooth piece folded in when the quadratic part is isotropic.
struct SmoothBlock {
    kappa: f64,
    center: DVector<f64>,
    general: Option<(SelfAdjointOperator, DVector<f64>)>,
    merged: Option<ConvexPiece>,
}

impl SmoothBlock {
    /// Minimizer of the block alone.
    fn solve(&self) -> Result<DVector<f64>> {
        match &self.general {
            None => match &self.merged {
                Some(p) => prox_single(p, 1.0 / self.kappa, &self.center),
                None => Ok(self.center.clone()),
            },
            Some((p, pc)) => p.shifted(self.kappa).solve(&(pc + &self.center * self.kappa)),
        }
    }

    /// `argmin h(x) + ‖x − u‖²/(2γ)`; `shifted` caches `P + (κ + 1/γ)I`.
    fn prox(&self, gamma: f64, shifted: Option<&SelfAdjointOperator>, u: &DVector<f64>) -> Result<DVector<f64>> {
        match (&self.general, shifted) {
            (Some((_, pc)), Some(op)) => op.solve(&(pc + &self.center * self.kappa + u / gamma)),
            _ => {
                let k = self.kappa + 1.0 / gamma;
                let c = (&self.center * self.kappa + u / gamma) / k;
                match &self.merged {
                    Some(p) => prox_single(p, 1.0 / k, &c),
                    None => Ok(c),
                }
            }
        }
    }
}

/// `argmin_w Σ ψ_i(w) + ‖w − v‖²/(2ρ)` with default solver settings.
pub fn prox_composite_dr(
    parts: &[ConvexPiece],
    rho: f64,
    v: &DVector<f64>,
    tol: f64,
    max_inner: usize,
) -> Result<DVector<f64>> {
    let opts = DrOptions { tol, max_inner, ..DrOptions::default() };
    prox_composite(parts, rho, v, &opts).map(|o| o.point)
}

/// Composite prox by Douglas-Rachford splitting in the product space.
///
/// Blocks are the quadratic aggregate (anchor plus quadratic terms) and one
/// block per remaining nonsmooth term. Cases with a single block are solved
/// in closed form.
pub fn prox_composite(parts: &[ConvexPiece], rho: f64, v: &DVector<f64>, opts: &DrOptions) -> Result<DrOutcome> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("prox parameter must be > 0, got {rho}")));
    }
    if !(opts.tol > 0.0) || opts.max_inner == 0 || !(opts.step > 0.0) {
        return Err(Error::InvalidParameter("DR needs tol > 0, max_inner > 0, step > 0".into()));
    }
    if !(opts.relaxation > 0.0 && opts.relaxation < 2.0) {
        return Err(Error::InvalidParameter("DR relaxation must lie in (0, 2)".into()));
    }
    let n = v.len();
    let flat: Vec<&ConvexPiece> = parts.iter().flat_map(|p| p.parts()).collect();
    for p in &flat {
        if let Some(d) = p.dim_hint() {
            if d != n {
                return Err(Error::dims(d, n));
            }
        }
    }

    let mut kappa = 1.0 / rho;
    let mut weighted_center = v / rho;
    let mut general: Option<(SelfAdjointOperator, DVector<f64>)> = None;
    let mut nonsmooth: Vec<ConvexPiece> = Vec::new();
    for p in flat {
        match p {
            ConvexPiece::Zero => {}
            ConvexPiece::SquaredL2 { weight } => kappa += weight,
            ConvexPiece::WeightedQuadratic { weight, center } => {
                if let Some(alpha) = weight.as_scaled_identity() {
                    kappa += alpha;
                    weighted_center.axpy(alpha, center, 1.0);
                } else {
                    let pc = weight.apply(center)?;
                    general = Some(match general {
                        None => (weight.clone(), pc),
                        Some((acc, acc_c)) => (acc.add(weight)?, acc_c + pc),
                    });
                }
            }
            ConvexPiece::LInf { weight } if *weight == 0.0 => {}
            other => nonsmooth.push(other.clone()),
        }
    }
    let center = weighted_center / kappa;

    let merged = if general.is_none() && !nonsmooth.is_empty() {
        let idx = nonsmooth.iter().position(|p| matches!(p, ConvexPiece::LInf { .. })).unwrap_or(0);
        Some(nonsmooth.remove(idx))
    } else {
        None
    };
    let smooth = SmoothBlock { kappa, center, general, merged };

    if nonsmooth.is_empty() {
        let point = smooth.solve()?;
        return Ok(DrOutcome { blocks: vec![point.clone()], point, iterations: 0, residual: 0.0 });
    }

    let gamma = opts.step * rho;
    let shifted = smooth.general.as_ref().map(|(p, _)| p.shifted(smooth.kappa + 1.0 / gamma));
    let nblocks = 1 + nonsmooth.len();
    let mut w: Vec<DVector<f64>> = match &opts.warm_start {
        Some(ws) if ws.len() == nblocks && ws.iter().all(|b| b.len() == n) => ws.clone(),
        _ => vec![v.clone(); nblocks],
    };
    let indicator_blocks: Vec<usize> =
        (0..nonsmooth.len()).filter(|&i| nonsmooth[i].is_indicator()).map(|i| i + 1).collect();
    let v_norm = v.norm();
    let inv = 1.0 / nblocks as f64;

    let mut z: Vec<DVector<f64>> = vec![DVector::zeros(n); nblocks];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_inner {
        let mut mean = DVector::zeros(n);
        for wi in &w {
            mean.axpy(inv, wi, 1.0);
        }
        for (i, zi) in z.iter_mut().enumerate() {
            let u = &mean * 2.0 - &w[i];
            *zi = if i == 0 { smooth.prox(gamma, shifted.as_ref(), &u)? } else { prox_single(&nonsmooth[i - 1], gamma, &u)? };
        }
        let mut res_sq = 0.0;
        for (wi, zi) in w.iter_mut().zip(z.iter()) {
            let d = zi - &mean;
            res_sq += d.norm_squared();
            wi.axpy(opts.relaxation, &d, 1.0);
        }
        residual = res_sq.sqrt();
        let scale = v_norm.max(mean.norm()).max(f64::MIN_POSITIVE);
        if residual <= opts.tol * scale {
            let point = output_point(&z, &indicator_blocks);
            return Ok(DrOutcome { point, iterations: it, residual, blocks: w });
        }
    }
    Err(Error::NonConvergence {
        what: "Douglas-Rachford composite prox",
        iterations: opts.max_inner,
        residual,
        best: output_point(&z, &indicator_blocks).as_slice().to_vec(),
    })
}

fn output_point(z: &[DVector<f64>], indicator_blocks: &[usize]) -> DVector<f64> {
    if let [only] = indicator_blocks {
        return z[*only].clone();
    }
    let mut mean = DVector::zeros(z[0].len());
    for zi in z {
        mean += zi;
    }
    mean / z.len() as f64
}
