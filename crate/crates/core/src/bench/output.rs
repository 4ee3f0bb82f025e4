use std::path::{Path, PathBuf};

use super::{BenchReport, BenchRow, Curve, Experiment};
use crate::error::{Error, Result};
use crate::problems::ConstraintCase;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn case_name(c: ConstraintCase) -> &'static str {
    match c {
        ConstraintCase::None => "none",
        ConstraintCase::Affine => "affine",
        ConstraintCase::Polyhedron => "polyhedron",
        ConstraintCase::Quadratic => "quadratic",
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// One row per run, with a `T_<eps>` column per threshold.
pub fn rows_csv(thresholds: &[f64], rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["experiment", "n", "m", "kappa", "sigma", "case", "seed", "solver", "eta", "selected", "status", "iterations"]
        .map(String::from)
        .to_vec();
    header.extend(thresholds.iter().map(|t| format!("T_{t:e}")));
    header.extend(
        [
            "final_metric",
            "cond_sigma",
            "cond_theta",
            "cond_sigma_hat",
            "vartheta",
            "contraction_ok",
            "residual_bound_ok",
            "gnorm_ok",
            "linear_rate",
            "infeasibility",
            "constraint_subseeds",
            "wall_ms",
        ]
        .map(String::from),
    );
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let cert = r.certificate.as_ref();
        let mut rec = vec![
            r.experiment.as_str().to_string(),
            r.n.to_string(),
            r.m.to_string(),
            r.kappa.to_string(),
            opt(r.sigma),
            case_name(r.case).to_string(),
            r.seed.to_string(),
            r.solver.clone(),
            opt(r.eta),
            r.selected.to_string(),
            r.status.as_str().to_string(),
            r.iterations.to_string(),
        ];
        rec.extend(r.counts.iter().map(|c| opt(*c)));
        rec.extend([
            r.final_metric.to_string(),
            opt(cert.map(|c| c.cond_sigma)),
            opt(cert.map(|c| c.cond_theta)),
            opt(cert.and_then(|c| c.cond_sigma_hat)),
            opt(cert.map(|c| c.vartheta)),
            opt(r.contraction_ok),
            opt(r.residual_bound_ok),
            opt(r.gnorm_ok),
            opt(r.linear_rate),
            r.infeasibility.to_string(),
            r.constraint_subseeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
            r.wall_ms.map_or(String::new(), |t| format!("{t:.3}")),
        ]);
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

/// Same as [`rows_csv`] for a figure1 report (all step sizes tried).
pub fn summary_csv(report: &BenchReport) -> Result<String> {
    rows_csv(&report.thresholds, &report.rows)
}

/// Plot data `iteration, solver, error` for the given curves.
pub fn curve_csv<'a>(curves: impl IntoIterator<Item = &'a Curve>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "solver", "error"]).map_err(csv_err)?;
    for c in curves {
        for (k, e) in c.errors.iter().enumerate() {
            w.write_record([k.to_string(), c.solver.clone(), e.to_string()]).map_err(csv_err)?;
        }
    }
    finish(w)
}

/// Writes the report's CSV files into `dir` (created if missing) and returns their paths.
pub fn write_report(report: &BenchReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let experiment = report.experiment.unwrap_or(Experiment::Custom);
    let mut files: Vec<(String, String)> = Vec::new();
    if experiment == Experiment::Figure1 {
        files.push(("figure1_summary.csv".into(), summary_csv(report)?));
        let mut keys: Vec<(usize, usize, f64, u64)> = report.curves.iter().map(|c| (c.n, c.m, c.kappa, c.seed)).collect();
        keys.dedup();
        let many_kappas = keys.iter().any(|k| k.2 != keys[0].2);
        let many_seeds = keys.iter().any(|k| k.3 != keys[0].3);
        for (n, m, kappa, seed) in keys {
            let mut name = format!("figure1_n{n}_m{m}");
            if many_kappas {
                name.push_str(&format!("_kappa{kappa}"));
            }
            if many_seeds {
                name.push_str(&format!("_seed{seed}"));
            }
            name.push_str(".csv");
            let body = curve_csv(report.curves.iter().filter(|c| (c.n, c.m, c.kappa, c.seed) == (n, m, kappa, seed)))?;
            files.push((name, body));
        }
    } else {
        files.push((format!("{}.csv", experiment.as_str()), rows_csv(&report.thresholds, &report.rows)?));
    }
    let mut paths = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        paths.push(path);
    }
    Ok(paths)
}
