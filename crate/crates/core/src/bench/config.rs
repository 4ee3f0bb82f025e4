use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::ConstraintCase;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Environment variable that replaces the configured seed list with one seed.
pub const SEED_ENV_VAR: &str = "MINIMAX_FOM_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Figure1,
    Table1,
    Table2,
    Custom,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Figure1 => "figure1",
            Experiment::Table1 => "table1",
            Experiment::Table2 => "table2",
            Experiment::Custom => "custom",
        }
    }
}

/// Benchmark grid description. Empty lists and absent options take
/// experiment-specific defaults (see [`BenchConfig::resolved`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub experiment: Experiment,
    /// `(n, m)` pairs.
    #[serde(default)]
    pub dims: Vec<(usize, usize)>,
    #[serde(default)]
    pub kappas: Vec<f64>,
    #[serde(default)]
    pub sigmas: Vec<f64>,
    /// Strictly decreasing stopping thresholds; the last one ends each run.
    #[serde(default)]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Any of `mspACM`, `PP`, `EG`, `OGDA` (figure1 and custom).
    #[serde(default)]
    pub solvers: Vec<String>,
    /// Constraint cases (table2 and custom).
    #[serde(default)]
    pub cases: Vec<ConstraintCase>,
    /// `(μ_x, μ_y)`; zero for figure1, `(1, 1)` for the tables.
    #[serde(default)]
    pub weights: (f64, f64),
    /// Baseline step sizes for custom grids; defaults to the step grid.
    #[serde(default)]
    pub etas: Option<Vec<f64>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Runs per cell; the fastest wall time is reported.
    #[serde(default = "one")]
    pub repeat: usize,
    #[serde(default)]
    pub max_outer: usize,
    #[serde(default = "yes")]
    pub timing: bool,
    /// Try every baseline step size instead of stopping once runs get worse.
    #[serde(default)]
    pub full_sweep: bool,
}

fn schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl BenchConfig {
    /// An empty configuration for `experiment`; every list takes its default.
    pub fn new(experiment: Experiment) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            experiment,
            dims: Vec::new(),
            kappas: Vec::new(),
            sigmas: Vec::new(),
            thresholds: Vec::new(),
            seeds: Vec::new(),
            solvers: Vec::new(),
            cases: Vec::new(),
            weights: (0.0, 0.0),
            etas: None,
            output_dir: None,
            repeat: 1,
            max_outer: 0,
            timing: true,
            full_sweep: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported config schema version {} (expected {CONFIG_SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Replaces the seed list with `[seed]`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds = vec![seed];
        self
    }

    /// Applies [`SEED_ENV_VAR`] when it is set.
    pub fn with_env_seed(self) -> Result<Self> {
        match std::env::var(SEED_ENV_VAR) {
            Ok(v) => {
                let seed = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV_VAR}={v:?} is not an unsigned integer")))?;
                Ok(self.with_seed(seed))
            }
            Err(_) => Ok(self),
        }
    }

    /// Fills defaults and validates.
    pub fn resolved(&self) -> Result<Self> {
        let mut c = self.clone();
        let thresholds_to = |k: i32| (1..=k).step_by(2).map(|e| 10f64.powi(-e)).collect::<Vec<_>>();
        match c.experiment {
            Experiment::Figure1 => {
                fill(&mut c.dims, vec![(10, 10), (100, 100), (1000, 1000)]);
                fill(&mut c.kappas, vec![10.0]);
                fill(&mut c.sigmas, vec![1.0]);
                fill(&mut c.thresholds, vec![1e-9]);
                fill(&mut c.solvers, ["mspACM", "PP", "EG", "OGDA"].map(String::from).to_vec());
                fill(&mut c.cases, vec![ConstraintCase::None]);
                if c.max_outer == 0 {
                    c.max_outer = 20_000;
                }
            }
            Experiment::Table1 => {
                fill(&mut c.dims, vec![(10, 10), (50, 50)]);
                fill(&mut c.kappas, vec![10.0, 50.0, 200.0]);
                fill(&mut c.sigmas, vec![1.0, 0.1]);
                fill(&mut c.thresholds, thresholds_to(9));
                fill(&mut c.solvers, vec!["mspACM".into()]);
                fill(&mut c.cases, vec![ConstraintCase::None]);
                if c.weights == (0.0, 0.0) {
                    c.weights = (1.0, 1.0);
                }
            }
            Experiment::Table2 => {
                fill(&mut c.dims, vec![(10, 10), (20, 50), (50, 20)]);
                fill(&mut c.kappas, vec![10.0]);
                fill(&mut c.sigmas, vec![1.0]);
                fill(&mut c.thresholds, thresholds_to(7));
                fill(&mut c.solvers, vec!["mspACM".into()]);
                fill(&mut c.cases, vec![ConstraintCase::Affine, ConstraintCase::Polyhedron, ConstraintCase::Quadratic]);
                if c.weights == (0.0, 0.0) {
                    c.weights = (1.0, 1.0);
                }
            }
            Experiment::Custom => {
                fill(&mut c.dims, vec![(10, 10)]);
                fill(&mut c.kappas, vec![10.0]);
                fill(&mut c.sigmas, vec![1.0]);
                fill(&mut c.thresholds, thresholds_to(9));
                fill(&mut c.solvers, vec!["mspACM".into()]);
                fill(&mut c.cases, vec![ConstraintCase::None]);
            }
        }
        fill(&mut c.seeds, vec![0]);
        if c.max_outer == 0 {
            c.max_outer = 10_000;
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.dims.iter().any(|&(n, m)| n == 0 || m == 0) {
            return bad("dimensions must be positive".into());
        }
        if self.kappas.iter().any(|&k| !(k >= 1.0 && k.is_finite())) {
            return bad("condition numbers must be finite and >= 1".into());
        }
        if self.sigmas.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return bad("sigma values must be positive".into());
        }
        if self.thresholds.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return bad("thresholds must be positive".into());
        }
        if self.thresholds.windows(2).any(|w| w[1] >= w[0]) {
            return bad("thresholds must be strictly decreasing".into());
        }
        if self.repeat == 0 {
            return bad("repeat must be at least 1".into());
        }
        let (mx, my) = self.weights;
        if !(mx >= 0.0 && my >= 0.0 && mx.is_finite() && my.is_finite()) {
            return bad("weights must be finite and >= 0".into());
        }
        if let Some(etas) = &self.etas {
            if etas.is_empty() || etas.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
                return bad("etas must be a non-empty list of positive step sizes".into());
            }
        }
        self.solver_names()?;
        match self.experiment {
            Experiment::Figure1 => {
                if self.weights != (0.0, 0.0) || self.cases.iter().any(|&c| c != ConstraintCase::None) {
                    return Err(Error::Unsupported("figure1 compares solvers on the smooth problem only".into()));
                }
            }
            Experiment::Table1 | Experiment::Table2 => {
                if self.solver_names()? != ["mspacm"] {
                    return Err(Error::Unsupported(format!(
                        "{} runs mspACM only; use the custom experiment for baselines",
                        self.experiment.as_str()
                    )));
                }
                if self.experiment == Experiment::Table1 && self.cases != [ConstraintCase::None] {
                    return bad("table1 is unconstrained; use table2 for constraint cases".into());
                }
                if self.experiment == Experiment::Table2 && self.cases.contains(&ConstraintCase::None) {
                    return bad("table2 cases must be affine, polyhedron or quadratic".into());
                }
            }
            Experiment::Custom => {}
        }
        Ok(())
    }

    /// Lower-case solver names, validated and de-duplicated in order.
    pub fn solver_names(&self) -> Result<Vec<String>> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.solvers {
            let name = s.to_ascii_lowercase();
            if !matches!(name.as_str(), "mspacm" | "pp" | "eg" | "ogda") {
                return Err(Error::InvalidConfig(format!("unknown solver {s:?}")));
            }
            if !out.contains(&name) {
                out.push(name);
            }
        }
        Ok(out)
    }
}

fn fill<T>(v: &mut Vec<T>, default: Vec<T>) {
    if v.is_empty() {
        *v = default;
    }
}
