use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{linf_from_factor, SaddleProblem};
use crate::error::{Error, Result};
use crate::prox::ConvexPiece;
use crate::spaces::{GramFactor, ProductPoint};

/// Version tag written into every instance document.
pub const SCHEMA_VERSION: u32 = 1;

const MATRIX_STREAM: u64 = 0;
const POINT_STREAM: u64 = 1;
const CONSTRAINT_STREAM: u64 = 16;
const MAX_SUBSEEDS: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintCase {
    #[default]
    None,
    Affine,
    Polyhedron,
    Quadratic,
}

/// Parameters of a seeded random instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub m: usize,
    /// Condition number imposed on `A`.
    pub kappa: f64,
    pub seed: u64,
    /// Defaults to `1/m`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub mu_x: f64,
    #[serde(default)]
    pub mu_y: f64,
    /// Defaults to the zero vector.
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    #[serde(default)]
    pub constraint_case: ConstraintCase,
}

impl InstanceSpec {
    pub fn new(n: usize, m: usize, kappa: f64, seed: u64) -> Self {
        Self { n, m, kappa, seed, lambda: None, mu_x: 0.0, mu_y: 0.0, b: None, constraint_case: ConstraintCase::None }
    }

    pub fn with_weights(mut self, mu_x: f64, mu_y: f64) -> Self {
        self.mu_x = mu_x;
        self.mu_y = mu_y;
        self
    }

    pub fn with_constraints(mut self, case: ConstraintCase) -> Self {
        self.constraint_case = case;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidConfig("dimensions must be positive".into()));
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidConfig(format!("kappa must be >= 1, got {}", self.kappa)));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidConfig(format!("lambda must be positive, got {l}")));
            }
        }
        if !(self.mu_x >= 0.0 && self.mu_y >= 0.0 && self.mu_x.is_finite() && self.mu_y.is_finite()) {
            return Err(Error::InvalidConfig("mu_x and mu_y must be finite and >= 0".into()));
        }
        if let Some(b) = &self.b {
            if b.len() != self.m {
                return Err(Error::InvalidConfig(format!("b has length {}, expected {}", b.len(), self.m)));
            }
        }
        Ok(())
    }

    pub fn lambda_value(&self) -> f64 {
        self.lambda.unwrap_or(1.0 / self.m as f64)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Row-major dense matrix as stored in instance documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::InvalidConfig(format!(
                "matrix data has {} entries, expected {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

impl From<&DMatrix<f64>> for DenseMatrix {
    fn from(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl From<&ProductPoint> for PointData {
    fn from(z: &ProductPoint) -> Self {
        Self { x: z.x.as_slice().to_vec(), y: z.y.as_slice().to_vec() }
    }
}

/// Raw constraint data; `Mx ≤ b` and `xᵀQx + cᵀx + b_q ≤ 0` conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConstraintData {
    Affine { matrix: DenseMatrix, rhs: Vec<f64> },
    Polyhedron { matrix: DenseMatrix, rhs: Vec<f64> },
    Quadratic { q: DenseMatrix, c: Vec<f64>, bq: f64 },
}

impl ConstraintData {
    pub fn to_piece(&self) -> Result<ConvexPiece> {
        match self {
            ConstraintData::Affine { matrix, rhs } => {
                ConvexPiece::affine(matrix.to_matrix()?, DVector::from_column_slice(rhs))
            }
            ConstraintData::Polyhedron { matrix, rhs } => {
                ConvexPiece::polyhedron(matrix.to_matrix()?, DVector::from_column_slice(rhs))
            }
            ConstraintData::Quadratic { q, c, bq } => {
                ConvexPiece::quadratic_set(q.to_matrix()?, DVector::from_column_slice(c), *bq)
            }
        }
    }

    /// Random constraints on `R^dim` that the origin satisfies strictly
    /// (inequalities) or exactly (equalities).
    fn generate(case: ConstraintCase, dim: usize, rng: &mut ChaCha8Rng) -> Option<Self> {
        let gaussian = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| {
            DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
        };
        match case {
            ConstraintCase::None => None,
            ConstraintCase::Affine => {
                let p = (dim / 2).max(1);
                let b = gaussian(p, dim, rng);
                Some(ConstraintData::Affine { matrix: (&b).into(), rhs: vec![0.0; p] })
            }
            ConstraintCase::Polyhedron => {
                let m = gaussian(dim, dim, rng);
                let rhs = (0..dim).map(|_| rng.gen_range(0.1..1.0)).collect();
                Some(ConstraintData::Polyhedron { matrix: (&m).into(), rhs })
            }
            ConstraintCase::Quadratic => {
                let g = gaussian(dim, dim, rng);
                let q = g.tr_mul(&g) / dim as f64;
                let q = (&q + q.transpose()) * 0.5;
                let c = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                Some(ConstraintData::Quadratic { q: (&q).into(), c, bq: -1.0 })
            }
        }
    }
}

/// A fully materialized random instance; round-trips through JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub schema_version: u32,
    pub spec: InstanceSpec,
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub z0: PointData,
    #[serde(default)]
    pub x_constraint: Option<ConstraintData>,
    #[serde(default)]
    pub y_constraint: Option<ConstraintData>,
    /// Sub-seeds consumed when earlier constraint draws were rejected.
    #[serde(default)]
    pub constraint_subseeds: Vec<u64>,
}

impl Instance {
    pub fn generate(spec: &InstanceSpec) -> Result<Self> {
        spec.validate()?;
        let a = gen_gaussian_matrix(spec)?;
        let b = spec.b.clone().unwrap_or_else(|| vec![0.0; spec.m]);

        let mut rng = spec.rng(POINT_STREAM);
        let mut draw = |k: usize| (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect::<Vec<f64>>();
        let z0 = PointData { x: draw(spec.n), y: draw(spec.m) };

        let mut subseeds = Vec::new();
        let mut constraints = [None, None];
        for (side, dim) in [spec.n, spec.m].into_iter().enumerate() {
            if spec.constraint_case == ConstraintCase::None {
                continue;
            }
            let mut accepted = None;
            for sub in 0..MAX_SUBSEEDS {
                let mut rng = spec.rng(CONSTRAINT_STREAM + 2 * sub + side as u64);
                let data = ConstraintData::generate(spec.constraint_case, dim, &mut rng).expect("case is not none");
                match data.to_piece() {
                    Ok(_) => {
                        accepted = Some(data);
                        subseeds.push(sub);
                        break;
                    }
                    Err(Error::InfeasibleSet(_) | Error::RankDeficient) => continue,
                    Err(e) => return Err(e),
                }
            }
            constraints[side] = Some(accepted.ok_or_else(|| {
                Error::InfeasibleSet(format!("no valid constraint draw in {MAX_SUBSEEDS} sub-seeds"))
            })?);
        }
        let [x_constraint, y_constraint] = constraints;
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            spec: spec.clone(),
            a: (&a).into(),
            b,
            z0,
            x_constraint,
            y_constraint,
            constraint_subseeds: subseeds,
        })
    }

    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        let a = self.a.to_matrix()?;
        if a.nrows() != self.spec.m || a.ncols() != self.spec.n {
            return Err(Error::InvalidConfig(format!(
                "matrix is {}x{}, spec says {}x{}",
                a.nrows(),
                a.ncols(),
                self.spec.m,
                self.spec.n
            )));
        }
        Ok(a)
    }

    pub fn to_problem(&self) -> Result<SaddleProblem> {
        self.spec.validate()?;
        let a = GramFactor::new(self.matrix()?);
        if self.b.len() != self.spec.m {
            return Err(Error::InvalidConfig("b has the wrong length".into()));
        }
        let b = DVector::from_column_slice(&self.b);
        let x_set = self.x_constraint.as_ref().map(|c| c.to_piece()).transpose()?;
        let y_set = self.y_constraint.as_ref().map(|c| c.to_piece()).transpose()?;
        linf_from_factor(a, &b, self.spec.lambda_value(), self.spec.mu_x, self.spec.mu_y, x_set, y_set)
    }

    pub fn initial_point(&self) -> Result<ProductPoint> {
        let z = ProductPoint::from_slices(&self.z0.x, &self.z0.y);
        z.check_dims(self.spec.n, self.spec.m)?;
        Ok(z)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)?;
        if inst.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                inst.schema_version
            )));
        }
        inst.spec.validate()?;
        Ok(inst)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Gaussian `m×n` matrix whose singular values are remapped affinely in log
/// scale so that the smallest is kept and the ratio of extremes equals `kappa`.
pub fn gen_gaussian_matrix(spec: &InstanceSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let mut rng = spec.rng(MATRIX_STREAM);
    let g = DMatrix::from_fn(spec.m, spec.n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let svd = g.svd(true, true);
    let s = &svd.singular_values;
    let smin = s.min();
    let smax = s.max();
    if !(smin > 0.0) {
        return Err(Error::RankDeficient);
    }
    let spread = (smax / smin).ln();
    let target = spec.kappa.ln();
    let remapped = s.map(|si| {
        if spread > 0.0 {
            (smin.ln() + (si / smin).ln() * target / spread).exp()
        } else {
            smin
        }
    });
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    Ok(u * DMatrix::from_diagonal(&remapped) * vt)
}
