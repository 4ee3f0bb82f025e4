use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::ProductPoint;
use crate::solvers::ParameterCertificate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    MaxIters,
    Failed,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIters => "max-iters",
            RunStatus::Failed => "failed",
        }
    }
}

/// Quantity used for the stopping test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    /// Relative error when the known saddle is the origin, residual otherwise.
    #[default]
    Auto,
    /// `‖z^k‖ / ‖z^0‖`.
    RelativeError,
    /// `‖R(z^k)‖ / ‖R(z^0)‖`.
    ResidualNorm,
}

impl MetricKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Auto => "auto",
            MetricKind::RelativeError => "relative-error",
            MetricKind::ResidualNorm => "residual-norm",
        }
    }
}

/// One row of a run trace: the state after `k` outer iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub metric: f64,
    pub iterate_norm: f64,
    pub residual_norm: f64,
    /// Certificates of the step that produced `z^k` (absent for `k = 0`).
    pub contraction_ok: Option<bool>,
    pub residual_bound_ok: Option<bool>,
    pub gnorm_ok: Option<bool>,
    pub inner_iterations: usize,
    pub inner_failures: usize,
    /// Milliseconds since the start of the run; absent when timing is off.
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub solver: String,
    pub metric_kind: MetricKind,
    pub records: Vec<IterationRecord>,
    /// `z^k` for every recorded `k` (empty when iterate recording is off).
    pub iterates: Vec<ProductPoint>,
    /// `z^{k+1/2}` for the step leaving `z^k`.
    pub halves: Vec<ProductPoint>,
    pub status: RunStatus,
    pub certificate: Option<ParameterCertificate>,
    pub final_point: ProductPoint,
    /// Reason for a failed status.
    pub failure: Option<String>,
}

impl RunTrace {
    pub fn metrics(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.metric).collect()
    }

    /// Number of completed outer iterations.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    pub fn final_metric(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.metric)
    }

    /// First iteration whose metric is at most `threshold`.
    pub fn iterations_to(&self, threshold: f64) -> Option<usize> {
        self.records.iter().find(|r| r.metric <= threshold).map(|r| r.k)
    }

    fn all(&self, pick: impl Fn(&IterationRecord) -> Option<bool>) -> Option<bool> {
        let flags: Vec<bool> = self.records.iter().filter_map(pick).collect();
        if flags.is_empty() {
            None
        } else {
            Some(flags.iter().all(|&b| b))
        }
    }

    pub fn all_contraction_ok(&self) -> Option<bool> {
        self.all(|r| r.contraction_ok)
    }

    pub fn all_residual_bound_ok(&self) -> Option<bool> {
        self.all(|r| r.residual_bound_ok)
    }

    pub fn all_gnorm_ok(&self) -> Option<bool> {
        self.all(|r| r.gnorm_ok)
    }

    /// Writes the per-iteration table
    /// `k, metric, residual_norm, contraction_ok, residual_bound_ok, gnorm_ok, wall_ms`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["k", "metric", "residual_norm", "contraction_ok", "residual_bound_ok", "gnorm_ok", "wall_ms"])
            .map_err(io)?;
        let flag = |b: Option<bool>| b.map_or(String::new(), |b| b.to_string());
        for r in &self.records {
            w.write_record([
                r.k.to_string(),
                r.metric.to_string(),
                r.residual_norm.to_string(),
                flag(r.contraction_ok),
                flag(r.residual_bound_ok),
                flag(r.gnorm_ok),
                r.wall_ms.map_or(String::new(), |t| format!("{t:.3}")),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A row read back from a trace CSV.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TraceCsvRow {
    pub k: usize,
    pub metric: f64,
    pub residual_norm: f64,
    pub contraction_ok: Option<bool>,
    pub residual_bound_ok: Option<bool>,
    pub gnorm_ok: Option<bool>,
    pub wall_ms: Option<f64>,
}

pub fn read_trace_csv<R: std::io::Read>(input: R) -> Result<Vec<TraceCsvRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    rdr.deserialize()
        .map(|row| row.map_err(|e| Error::InvalidConfig(format!("malformed trace CSV: {e}"))))
        .collect()
}
