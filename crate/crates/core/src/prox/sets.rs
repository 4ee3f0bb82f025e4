use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::spaces::{PSD_TOL, SYMMETRY_TOL};

/// Default tolerance for the iterative projections.
pub const DEFAULT_PROJECTION_TOL: f64 = 1e-10;
/// Default sweep limit for Dykstra's method.
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;
const MAX_BISECTION_STEPS: usize = 200;
const MAX_BRACKET_DOUBLINGS: usize = 200;

fn check_finite(v: &DVector<f64>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} has non-finite entries")))
    }
}

/// `{x : Bx = b}` with `B` of full row rank.
#[derive(Debug, Clone)]
pub struct AffineSet {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    gram: Cholesky<f64, Dyn>,
}

impl AffineSet {
    pub fn new(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != rhs.len() {
            return Err(Error::dims(matrix.nrows(), rhs.len()));
        }
        if matrix.nrows() == 0 || matrix.nrows() > matrix.ncols() {
            return Err(Error::RankDeficient);
        }
        check_finite(&rhs, "affine right-hand side")?;
        let gram = &matrix * matrix.transpose();
        let eig = gram.clone().symmetric_eigenvalues();
        let hi = eig.max();
        let lo = eig.min();
        if !(hi > 0.0) || lo <= 1e-12 * hi {
            return Err(Error::RankDeficient);
        }
        let gram = Cholesky::new(gram).ok_or(Error::RankDeficient)?;
        Ok(Self { matrix, rhs, gram })
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    /// Largest entry of `|Bx − b|`.
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        (&self.matrix * x - &self.rhs).amax()
    }

    pub fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.dim() {
            return Err(Error::dims(self.dim(), v.len()));
        }
        let r = &self.matrix * v - &self.rhs;
        let mult = self.gram.solve(&r);
        Ok(v - self.matrix.tr_mul(&mult))
    }
}

/// `{x : Mx ≤ b}`, projected onto with Dykstra's method over the rows.
#[derive(Debug, Clone)]
pub struct Polyhedron {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    row_norms_sq: Vec<f64>,
    tol: f64,
    max_sweeps: usize,
}

/// Result of a Dykstra run.
#[derive(Debug, Clone)]
pub struct DykstraOutcome {
    pub point: DVector<f64>,
    pub sweeps: usize,
    pub max_violation: f64,
}

impl Polyhedron {
    /// Builds the set and checks that it is non-empty.
    pub fn new(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        Self::with_settings(matrix, rhs, DEFAULT_PROJECTION_TOL, DEFAULT_MAX_SWEEPS)
    }

    pub fn with_settings(
        matrix: DMatrix<f64>,
        rhs: DVector<f64>,
        tol: f64,
        max_sweeps: usize,
    ) -> Result<Self> {
        let set = Self::unchecked(matrix, rhs, tol, max_sweeps)?;
        set.assert_nonempty()?;
        Ok(set)
    }

    fn unchecked(matrix: DMatrix<f64>, rhs: DVector<f64>, tol: f64, max_sweeps: usize) -> Result<Self> {
        if matrix.nrows() != rhs.len() {
            return Err(Error::dims(matrix.nrows(), rhs.len()));
        }
        if !(tol > 0.0) || max_sweeps == 0 {
            return Err(Error::InvalidParameter("Dykstra needs tol > 0 and max_sweeps > 0".into()));
        }
        check_finite(&rhs, "polyhedron right-hand side")?;
        let row_norms_sq: Vec<f64> = matrix.row_iter().map(|r| r.norm_squared()).collect();
        for (i, &ns) in row_norms_sq.iter().enumerate() {
            if ns == 0.0 && rhs[i] < 0.0 {
                return Err(Error::InfeasibleSet(format!("row {i} reads 0 <= {}", rhs[i])));
            }
        }
        Ok(Self { matrix, rhs, row_norms_sq, tol, max_sweeps })
    }

    fn assert_nonempty(&self) -> Result<()> {
        if self.rhs.iter().all(|&b| b >= 0.0) {
            return Ok(());
        }
        let origin = DVector::zeros(self.dim());
        match self.dykstra(&origin) {
            Ok(_) => Ok(()),
            Err(Error::NonConvergence { residual, .. }) => Err(Error::InfeasibleSet(format!(
                "alternating projections stalled with violation {residual:.3e}"
            ))),
            Err(e) => Err(e),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Largest entry of `max(Mx − b, 0)`.
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        (&self.matrix * x - &self.rhs).iter().fold(0.0, |acc, &r| acc.max(r))
    }

    fn feasibility_slack(&self) -> f64 {
        self.tol * (1.0 + self.rhs.amax())
    }

    pub fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.dykstra(v).map(|o| o.point)
    }

    /// Dykstra's alternating projections, one half-space per row in cyclic order.
    ///
    /// Each correction term is a nonnegative multiple `t_i` of row `i`, so the
    /// iterate always equals `v − Mᵀt`. The run stops once `x` is feasible and
    /// complementary with `t` (`t_i = 0` or row `i` active), both measured in
    /// distance units.
    pub fn dykstra(&self, v: &DVector<f64>) -> Result<DykstraOutcome> {
        if v.len() != self.dim() {
            return Err(Error::dims(self.dim(), v.len()));
        }
        check_finite(v, "projection input")?;
        let slack = self.feasibility_slack();
        if self.violation(v) <= 0.0 {
            return Ok(DykstraOutcome { point: v.clone(), sweeps: 0, max_violation: 0.0 });
        }
        let dist_tol = self.tol * (1.0 + v.norm());
        let q = self.matrix.nrows();
        let mut x = v.clone();
        let mut t = vec![0.0; q];
        let mut viol = f64::INFINITY;
        for sweep in 1..=self.max_sweeps {
            for i in 0..q {
                let ns = self.row_norms_sq[i];
                if ns == 0.0 {
                    continue;
                }
                let row = self.matrix.row(i);
                let ax = row.dot(&x.transpose());
                let t_new = ((ax - self.rhs[i]) / ns + t[i]).max(0.0);
                let delta = t[i] - t_new;
                if delta != 0.0 {
                    x.axpy(delta, &row.transpose(), 1.0);
                    t[i] = t_new;
                }
            }
            let resid = &self.matrix * &x - &self.rhs;
            viol = resid.iter().fold(0.0f64, |acc, &r| acc.max(r));
            let comp = (0..q)
                .filter(|&i| self.row_norms_sq[i] > 0.0)
                .map(|i| {
                    let norm = self.row_norms_sq[i].sqrt();
                    (t[i] * norm).min((-resid[i]).max(0.0) / norm)
                })
                .fold(0.0f64, f64::max);
            if viol <= slack && comp <= dist_tol {
                return Ok(DykstraOutcome { point: x, sweeps: sweep, max_violation: viol });
            }
        }
        Err(Error::NonConvergence {
            what: "Dykstra projection",
            iterations: self.max_sweeps,
            residual: viol,
            best: x.as_slice().to_vec(),
        })
    }
}

/// `{x : xᵀQx + cᵀx + b_q ≤ 0}` with `Q` positive semidefinite.
#[derive(Debug, Clone)]
pub struct QuadraticSet {
    q: DMatrix<f64>,
    c: DVector<f64>,
    bq: f64,
    eigvals: DVector<f64>,
    eigvecs: DMatrix<f64>,
    tol: f64,
}

impl QuadraticSet {
    pub fn new(q: DMatrix<f64>, c: DVector<f64>, bq: f64) -> Result<Self> {
        Self::with_tol(q, c, bq, DEFAULT_PROJECTION_TOL)
    }

    pub fn with_tol(q: DMatrix<f64>, c: DVector<f64>, bq: f64, tol: f64) -> Result<Self> {
        let n = c.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::dims(n, q.nrows()));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter("quadratic-set tolerance must be positive".into()));
        }
        check_finite(&c, "quadratic-set linear term")?;
        if !bq.is_finite() {
            return Err(Error::InvalidParameter("quadratic-set offset is not finite".into()));
        }
        let scale = q.amax().max(f64::MIN_POSITIVE);
        let asym = (&q - q.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let q = (&q + q.transpose()) * 0.5;
        let SymmetricEigen { eigenvalues, eigenvectors } = SymmetricEigen::new(q.clone());
        let hi = eigenvalues.max();
        let lo = eigenvalues.min();
        if lo < -PSD_TOL * hi.max(1.0) {
            return Err(Error::NotPsd { lambda_min: lo, lambda_max: hi });
        }
        let eigvals = eigenvalues.map(|l| l.max(0.0));
        let set = Self { q, c, bq, eigvals, eigvecs: eigenvectors, tol };
        set.assert_nonempty()?;
        Ok(set)
    }

    /// The set is empty iff the quadratic is bounded below by a positive number.
    fn assert_nonempty(&self) -> Result<()> {
        let ct = self.eigvecs.tr_mul(&self.c);
        let lmax = self.eigvals.max();
        let cut = 1e-12 * lmax.max(1.0);
        let cnorm = self.c.norm();
        let mut min_value = self.bq;
        for i in 0..ct.len() {
            let l = self.eigvals[i];
            if l <= cut {
                if ct[i].abs() > 1e-12 * cnorm.max(1.0) {
                    return Ok(());
                }
            } else {
                min_value -= ct[i] * ct[i] / (4.0 * l);
            }
        }
        if min_value <= self.tol * (1.0 + self.bq.abs()) {
            Ok(())
        } else {
            Err(Error::InfeasibleSet(format!("quadratic is bounded below by {min_value:.3e} > 0")))
        }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn bq(&self) -> f64 {
        self.bq
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `xᵀQx + cᵀx + b_q`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (&self.q * x).dot(x) + self.c.dot(x) + self.bq
    }

    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        self.value(x).max(0.0)
    }

    /// Projects by bisection on the multiplier `θ` of
    /// `p(θ) = (I + 2θQ)⁻¹(v − θc)`, working in the eigenbasis of `Q`.
    pub fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.dim() {
            return Err(Error::dims(self.dim(), v.len()));
        }
        check_finite(v, "projection input")?;
        if self.value(v) <= 0.0 {
            return Ok(v.clone());
        }
        let vt = self.eigvecs.tr_mul(v);
        let ct = self.eigvecs.tr_mul(&self.c);
        let point = |theta: f64| -> DVector<f64> {
            DVector::from_fn(vt.len(), |i, _| (vt[i] - theta * ct[i]) / (1.0 + 2.0 * theta * self.eigvals[i]))
        };
        let h = |p: &DVector<f64>| -> f64 {
            p.iter()
                .zip(self.eigvals.iter())
                .zip(ct.iter())
                .map(|((pi, li), ci)| li * pi * pi + ci * pi)
                .sum::<f64>()
                + self.bq
        };

        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut p_hi = point(hi);
        let mut h_hi = h(&p_hi);
        let mut doublings = 0;
        while h_hi > 0.0 {
            doublings += 1;
            if doublings > MAX_BRACKET_DOUBLINGS || !h_hi.is_finite() {
                return Err(Error::BracketFailure(format!(
                    "constraint still {h_hi:.3e} at multiplier {hi:.3e}"
                )));
            }
            lo = hi;
            hi *= 2.0;
            p_hi = point(hi);
            h_hi = h(&p_hi);
        }
        let resid_tol = self.tol * (1.0 + self.bq.abs());
        for _ in 0..MAX_BISECTION_STEPS {
            if h_hi >= -resid_tol || hi - lo <= f64::EPSILON * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let p_mid = point(mid);
            let h_mid = h(&p_mid);
            if h_mid > 0.0 {
                lo = mid;
            } else {
                hi = mid;
                p_hi = p_mid;
                h_hi = h_mid;
            }
        }
        Ok(&self.eigvecs * p_hi)
    }
}

/// Projection onto `{x : Bx = b}`.
pub fn project_affine(b_mat: &DMatrix<f64>, b: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    AffineSet::new(b_mat.clone(), b.clone())?.project(v)
}

/// Projection onto `{x : Mx ≤ b}` by Dykstra's method; the set is assumed non-empty.
pub fn project_polyhedron(
    m: &DMatrix<f64>,
    b: &DVector<f64>,
    v: &DVector<f64>,
    tol: f64,
) -> Result<DVector<f64>> {
    Polyhedron::unchecked(m.clone(), b.clone(), tol, DEFAULT_MAX_SWEEPS)?.project(v)
}

/// Projection onto `{x : xᵀQx + cᵀx + b_q ≤ 0}`.
pub fn project_quadratic_set(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    bq: f64,
    v: &DVector<f64>,
    tol: f64,
) -> Result<DVector<f64>> {
    QuadraticSet::with_tol(q.clone(), c.clone(), bq, tol)?.project(v)
}
