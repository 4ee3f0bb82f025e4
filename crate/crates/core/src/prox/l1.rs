use nalgebra::DVector;

use crate::error::{Error, Result};

/// Euclidean projection onto `{u : ‖u‖₁ ≤ radius}` by sort-based thresholding.
pub fn project_l1_ball(v: &DVector<f64>, radius: f64) -> Result<DVector<f64>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "l1-ball radius must be positive and finite, got {radius}"
        )));
    }
    if v.lp_norm(1) <= radius {
        return Ok(v.clone());
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
        } else {
            break;
        }
    }
    Ok(v.map(|x| x.signum() * (x.abs() - threshold).max(0.0)))
}

/// Prox of `mu·‖·‖_∞` with parameter `rho`, via the Moreau identity
/// `prox(v) = v − Π_{‖·‖₁ ≤ rho·mu}(v)`.
pub fn prox_linf(mu: f64, rho: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("l-inf weight must be >= 0, got {mu}")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("prox parameter must be > 0, got {rho}")));
    }
    if mu == 0.0 {
        return Ok(v.clone());
    }
    Ok(v - project_l1_ball(v, rho * mu)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn l1_examples() {
        assert_eq!(project_l1_ball(&dv(&[0.2, -0.3]), 1.0).unwrap(), dv(&[0.2, -0.3]));
        assert_eq!(project_l1_ball(&dv(&[3.0, 1.0]), 1.0).unwrap(), dv(&[1.0, 0.0]));
        assert_eq!(project_l1_ball(&dv(&[-3.0, 1.0]), 1.0).unwrap(), dv(&[-1.0, 0.0]));
    }

    #[test]
    fn l1_grid_oracle() {
        // Dense grid over the ball boundary and interior for v = (3, 1), r = 1.
        let v = dv(&[3.0, 1.0]);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let steps = 2000;
        for i in 0..=steps {
            for j in 0..=steps {
                let a = -1.0 + 2.0 * i as f64 / steps as f64;
                let b = -1.0 + 2.0 * j as f64 / steps as f64;
                if a.abs() + b.abs() <= 1.0 + 1e-12 {
                    let d = (a - 3.0).powi(2) + (b - 1.0).powi(2);
                    if d < best.0 {
                        best = (d, a, b);
                    }
                }
            }
        }
        let p = project_l1_ball(&v, 1.0).unwrap();
        assert!((p[0] - best.1).abs() <= 1e-3 && (p[1] - best.2).abs() <= 1e-3);
    }

    #[test]
    fn l1_rejects_bad_radius() {
        assert!(project_l1_ball(&dv(&[1.0]), 0.0).is_err());
        assert!(project_l1_ball(&dv(&[1.0]), f64::NAN).is_err());
    }

    #[test]
    fn linf_examples() {
        assert_eq!(prox_linf(0.0, 1.0, &dv(&[3.0, 1.0])).unwrap(), dv(&[3.0, 1.0]));
        assert_eq!(prox_linf(1.0, 1.0, &dv(&[3.0, 1.0])).unwrap(), dv(&[2.0, 1.0]));
        assert_eq!(prox_linf(1.0, 1.0, &dv(&[3.0])).unwrap(), dv(&[2.0]));
    }

    #[test]
    fn linf_ties_are_shared() {
        // Two coordinates at the max share the shrinkage equally.
        let p = prox_linf(1.0, 1.0, &dv(&[3.0, 3.0, 1.0])).unwrap();
        assert!((p[0] - 2.5).abs() < 1e-15 && (p[1] - 2.5).abs() < 1e-15 && p[2] == 1.0);
    }

    proptest! {
        #[test]
        fn moreau_identity(v in proptest::collection::vec(-10.0..10.0f64, 1..8),
                           mu in 0.01..3.0f64, rho in 0.01..3.0f64) {
            let v = dv(&v);
            let p = prox_linf(mu, rho, &v).unwrap();
            let q = project_l1_ball(&v, rho * mu).unwrap();
            let sum = &p + &q;
            for i in 0..v.len() {
                prop_assert!((sum[i] - v[i]).abs() <= 4.0 * f64::EPSILON * v[i].abs().max(1.0));
            }
        }

        #[test]
        fn scalar_soft_threshold(v in -10.0..10.0f64, mu in 0.0..3.0f64, rho in 0.01..3.0f64) {
            let p = prox_linf(mu, rho, &dv(&[v])).unwrap()[0];
            let expect = v.signum() * (v.abs() - rho * mu).max(0.0);
            prop_assert!((p - expect).abs() <= 1e-12);
        }

        #[test]
        fn l1_projection_is_feasible(v in proptest::collection::vec(-10.0..10.0f64, 1..10),
                                     r in 0.01..5.0f64) {
            let p = project_l1_ball(&dv(&v), r).unwrap();
            prop_assert!(p.lp_norm(1) <= r + 1e-12);
        }
    }
}
