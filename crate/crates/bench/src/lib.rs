//! Fixtures shared by the criterion benchmarks.

use minimax_fom::problems::{ConstraintCase, Instance, InstanceSpec, SaddleProblem};
use minimax_fom::solvers::SolverConfig;
use minimax_fom::spaces::ProductPoint;
use minimax_fom::Result;

/// A generated problem with its default solver settings and start point.
pub struct Fixture {
    pub problem: SaddleProblem,
    pub config: SolverConfig,
    pub z0: ProductPoint,
}

impl Fixture {
    pub fn new(spec: &InstanceSpec, sigma: f64) -> Result<Self> {
        let inst = Instance::generate(spec)?;
        let problem = inst.to_problem()?;
        let mut config = SolverConfig::standard(&problem, sigma)?;
        config.record_iterates = false;
        config.certificates = false;
        config.timing = false;
        Ok(Self { problem, config, z0: inst.initial_point()? })
    }

    /// The smooth regression saddle with `b = 0`.
    pub fn smooth(n: usize, seed: u64) -> Result<Self> {
        Self::new(&InstanceSpec::new(n, n, 10.0, seed), 1.0)
    }

    /// The l-inf regularized problem with constraints of the given kind.
    pub fn constrained(n: usize, case: ConstraintCase, seed: u64) -> Result<Self> {
        Self::new(&InstanceSpec::new(n, n, 10.0, seed).with_weights(1.0, 1.0).with_constraints(case), 1.0)
    }
}
