//! Acceptance suite. Prints one `PASS` or `FAIL` line per criterion, then a
//! summary. The process exits with status 0 so that the rest of the workspace
//! suite still runs; set `MINIMAX_FOM_ACCEPTANCE_STRICT=1` to exit with status 1
//! when any criterion fails. Numeric arguments select criteria, e.g.
//! `cargo test --test acceptance -- 1 7`.

use std::sync::Arc;
use std::time::Instant;

use minimax_fom::bench::*;
use minimax_fom::diagnostics::*;
use minimax_fom::problems::*;
use minimax_fom::prox::*;
use minimax_fom::solvers::*;
use minimax_fom::spaces::{GramFactor, ProductPoint, SelfAdjointOperator};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

const STRICT_ENV_VAR: &str = "MINIMAX_FOM_ACCEPTANCE_STRICT";
const SEEDS: std::ops::Range<u64> = 0..10;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("prox and projection oracles", prox_oracles),
        ("subproblem optimality inequality", subproblem_inequality),
        ("contraction certificate", contraction_certificate),
        ("G-norm decrease", gnorm_decrease_criterion),
        ("residual bound", residual_bound_criterion),
        ("smooth saddle comparison at n=1000", smooth_comparison),
        ("table1 iteration bands", table1_bands),
        ("table2 iteration band and feasibility", table2_bands),
        ("linear rate", linear_rate_criterion),
        ("bench determinism", determinism),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !selected.is_empty() && !selected.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let out = check();
        let secs = start.elapsed().as_secs_f64();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {:>2}: {name}: {} ({secs:.1} s)", i + 1, out.detail);
        if !out.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    let strict = std::env::var(STRICT_ENV_VAR).is_ok_and(|v| !v.is_empty() && v != "0");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `LLᵀ` with `L` of shape `n × rank`.
fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<f64> {
    let l = gaussian_mat(rng, n, rank);
    let p = &l * l.transpose();
    (&p + p.transpose()) * 0.5
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2] as f64
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2]) as f64
    }
}

/// Smallest `t` in `[lo, hi]` with `g(t) ≥ 0` for nondecreasing `g`.
fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// 1. Oracles

fn l1_ball_oracle(v: &DVector<f64>, r: f64) -> DVector<f64> {
    if v.lp_norm(1) <= r {
        return v.clone();
    }
    let tau = bisect(0.0, v.amax(), |t| r - v.iter().map(|x| (x.abs() - t).max(0.0)).sum::<f64>());
    v.map(|x| x.signum() * (x.abs() - tau).max(0.0))
}

/// The prox of `μ‖·‖_∞` clips at the level `t` minimizing
/// `μt + Σ(|v_i| − t)₊²/(2ρ)`.
fn linf_oracle(mu: f64, rho: f64, v: &DVector<f64>) -> DVector<f64> {
    let slope = |t: f64| mu - v.iter().map(|x| (x.abs() - t).max(0.0)).sum::<f64>() / rho;
    let t = if slope(0.0) >= 0.0 { 0.0 } else { bisect(0.0, v.amax(), slope) };
    v.map(|x| x.clamp(-t, t))
}

fn affine_oracle(b: &DMatrix<f64>, rhs: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let (k, n) = b.shape();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).fill_with_identity();
    kkt.view_mut((0, n), (n, k)).copy_from(&b.transpose());
    kkt.view_mut((n, 0), (k, n)).copy_from(b);
    let mut r = DVector::zeros(n + k);
    r.rows_mut(0, n).copy_from(v);
    r.rows_mut(n, k).copy_from(rhs);
    kkt.lu().solve(&r).expect("nonsingular KKT system").rows(0, n).into_owned()
}

fn active_set_oracle(m: &DMatrix<f64>, b: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let q = m.nrows();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << q) {
        let rows: Vec<usize> = (0..q).filter(|i| mask & (1 << i) != 0).collect();
        let cand = if rows.is_empty() {
            v.clone()
        } else {
            let sub = DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)]);
            let rhs = DVector::from_fn(rows.len(), |i, _| b[rows[i]]);
            match (&sub * sub.transpose()).lu().solve(&(&sub * v - rhs)) {
                Some(mult) if mult.iter().all(|x| x.is_finite()) => v - sub.tr_mul(&mult),
                _ => continue,
            }
        };
        if (m * &cand - b).max() <= 1e-10 {
            let d = (&cand - v).norm();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, cand));
            }
        }
    }
    best.expect("feasible candidate").1
}

/// Projection onto `{xᵀQx + cᵀx + b_q ≤ 0}` from the stationarity condition
/// `x + θ(2Qx + c) = v`, bisecting on `θ` with a dense LU solve per trial.
fn quadratic_set_oracle(q: &DMatrix<f64>, c: &DVector<f64>, bq: f64, v: &DVector<f64>) -> DVector<f64> {
    let value = |x: &DVector<f64>| (q * x).dot(x) + c.dot(x) + bq;
    if value(v) <= 0.0 {
        return v.clone();
    }
    let n = v.len();
    let point = |theta: f64| {
        let lhs = DMatrix::identity(n, n) + q * (2.0 * theta);
        lhs.lu().solve(&(v - c * theta)).expect("I + 2θQ is nonsingular")
    };
    let mut hi = 1.0;
    while value(&point(hi)) > 0.0 {
        hi *= 2.0;
    }
    point(bisect(0.0, hi, |t| -value(&point(t))))
}

type P2 = (f64, f64);

/// Brute-force minimizer of a piecewise-smooth function on the plane: a 2-D
/// grid plus 1-D grids along the lines where `obj` may be nonsmooth (each line
/// given by a point and a unit direction) and the given isolated points, all
/// refined around the incumbent.
fn zoom_grid(obj: impl Fn(P2) -> f64, lines: &[(P2, P2)], points: &[P2], radius: f64) -> P2 {
    let steps = 200;
    let mut best = points.iter().map(|&p| (obj(p), p)).fold((f64::INFINITY, (0.0, 0.0)), |a, b| if b.0 < a.0 { b } else { a });
    let mut r = radius;
    let consider = |p: P2, best: &mut (f64, P2)| {
        let f = obj(p);
        if f < best.0 {
            *best = (f, p);
        }
    };
    while r > 1e-13 {
        let c = best.1;
        for i in 0..=steps {
            for j in 0..=steps {
                let p = (c.0 - r + 2.0 * r * i as f64 / steps as f64, c.1 - r + 2.0 * r * j as f64 / steps as f64);
                consider(p, &mut best);
            }
        }
        for &(p0, d) in lines {
            let tc = (c.0 - p0.0) * d.0 + (c.1 - p0.1) * d.1;
            for i in 0..=10 * steps {
                let t = tc - 2.0 * r + 4.0 * r * i as f64 / (10 * steps) as f64;
                consider((p0.0 + t * d.0, p0.1 + t * d.1), &mut best);
            }
        }
        r *= 0.25;
    }
    best.1
}

fn prox_oracles() -> Outcome {
    const TOL: f64 = 1e-6;
    const PER_FAMILY: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: Vec<(&str, f64)> = Vec::new();
    let mut errors = Vec::new();
    let mut family = |name: &'static str, rng: &mut ChaCha8Rng, case: &dyn Fn(&mut ChaCha8Rng) -> (DVector<f64>, DVector<f64>)| {
        let mut w: f64 = 0.0;
        for _ in 0..PER_FAMILY {
            let (got, want) = case(rng);
            w = w.max((got - want).amax());
        }
        worst.push((name, w));
    };

    family("l1-ball", &mut rng, &|rng| {
        let n = rng.gen_range(1..=5);
        let v = gaussian_vec(rng, n, 2.0);
        let r = rng.gen_range(0.1..3.0);
        (project_l1_ball(&v, r).unwrap(), l1_ball_oracle(&v, r))
    });
    family("linf prox", &mut rng, &|rng| {
        let n = rng.gen_range(1..=5);
        let v = gaussian_vec(rng, n, 2.0);
        let (mu, rho) = (rng.gen_range(0.05..2.0), rng.gen_range(0.1..3.0));
        (prox(&ConvexPiece::linf(mu).unwrap(), rho, &v).unwrap(), linf_oracle(mu, rho, &v))
    });
    family("squared-l2 prox", &mut rng, &|rng| {
        let n = rng.gen_range(1..=5);
        let v = gaussian_vec(rng, n, 2.0);
        let (lam, rho) = (rng.gen_range(0.0..3.0), rng.gen_range(0.1..3.0));
        (prox(&ConvexPiece::squared_l2(lam).unwrap(), rho, &v).unwrap(), &v / (1.0 + rho * lam))
    });
    family("weighted quadratic prox", &mut rng, &|rng| {
        let n = rng.gen_range(1..=5);
        let rank = rng.gen_range(1..=n);
        let p = random_psd(rng, n, rank);
        let (c, v) = (gaussian_vec(rng, n, 1.0), gaussian_vec(rng, n, 2.0));
        let rho = rng.gen_range(0.1..3.0);
        let piece = ConvexPiece::weighted_quadratic(SelfAdjointOperator::dense(p.clone()).unwrap(), c.clone()).unwrap();
        let want = (DMatrix::identity(n, n) + &p * rho).lu().solve(&(&v + &p * &c * rho)).unwrap();
        (prox(&piece, rho, &v).unwrap(), want)
    });
    family("affine", &mut rng, &|rng| {
        let n = rng.gen_range(2..=5);
        let k = rng.gen_range(1..n);
        let b = gaussian_mat(rng, k, n);
        let (rhs, v) = (gaussian_vec(rng, k, 1.0), gaussian_vec(rng, n, 2.0));
        (project_affine(&b, &rhs, &v).unwrap(), affine_oracle(&b, &rhs, &v))
    });
    family("polyhedron", &mut rng, &|rng| {
        let n = rng.gen_range(1..=5);
        let q = rng.gen_range(1..=4);
        let m = gaussian_mat(rng, q, n);
        let x0 = gaussian_vec(rng, n, 0.5);
        let b = &m * &x0 + DVector::from_fn(q, |_, _| rng.gen_range(0.0..1.0));
        let v = gaussian_vec(rng, n, 2.0);
        let piece = ConvexPiece::polyhedron(m.clone(), b.clone()).unwrap();
        (prox(&piece, 1.0, &v).unwrap(), active_set_oracle(&m, &b, &v))
    });
    family("quadratic set", &mut rng, &|rng| {
        let n = rng.gen_range(1..=5);
        let rank = rng.gen_range(1..=n);
        let q = random_psd(rng, n, rank);
        let c = gaussian_vec(rng, n, 0.5);
        let bq = -rng.gen_range(0.2..2.0);
        let v = gaussian_vec(rng, n, 2.0);
        (project_quadratic_set(&q, &c, bq, &v, 1e-12).unwrap(), quadratic_set_oracle(&q, &c, bq, &v))
    });
    family("2-D composite", &mut rng, &|rng| {
        let mu = rng.gen_range(0.1..1.5);
        let lam = rng.gen_range(0.0..1.0);
        let rho = rng.gen_range(0.3..2.0);
        let a = gaussian_vec(rng, 2, 1.0);
        let off = rng.gen_range(0.0..1.0);
        let v = gaussian_vec(rng, 2, 2.0);
        let parts = [
            ConvexPiece::linf(mu).unwrap(),
            ConvexPiece::squared_l2(lam).unwrap(),
            ConvexPiece::polyhedron(DMatrix::from_row_slice(1, 2, &[a[0], a[1]]), DVector::from_element(1, off)).unwrap(),
        ];
        let got = prox_composite(&parts, rho, &v, &DrOptions { tol: 1e-13, max_inner: 200_000, ..DrOptions::default() })
            .unwrap()
            .point;
        let obj = |(x, y): P2| {
            if a[0] * x + a[1] * y > off + 1e-12 {
                return f64::INFINITY;
            }
            mu * x.abs().max(y.abs()) + 0.5 * lam * (x * x + y * y) + ((x - v[0]).powi(2) + (y - v[1]).powi(2)) / (2.0 * rho)
        };
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let na2 = a.norm_squared();
        let foot = (a[0] * off / na2, a[1] * off / na2);
        let edge = (-a[1] / na2.sqrt(), a[0] / na2.sqrt());
        let lines = [((0.0, 0.0), (h, h)), ((0.0, 0.0), (h, -h)), (foot, edge)];
        // The boundary meets the diagonal through d where a·(s·d) = off.
        let mut points = vec![(0.0, 0.0)];
        for d in [(1.0, 1.0), (1.0, -1.0)] {
            let ad = a[0] * d.0 + a[1] * d.1;
            if ad.abs() > 1e-12 {
                points.push((off / ad * d.0, off / ad * d.1));
            }
        }
        let (x, y) = zoom_grid(obj, &lines, &points, v.amax() + off.abs() / na2.sqrt() + 1.0);
        (got, DVector::from_column_slice(&[x, y]))
    });

    let fails: Vec<String> = worst.iter().filter(|(_, w)| !(*w <= TOL)).map(|(n, w)| format!("{n} {w:.1e}")).collect();
    errors.extend(fails);
    let summary = worst.iter().map(|(n, w)| format!("{n} {w:.1e}")).collect::<Vec<_>>().join(", ");
    Outcome::new(errors.is_empty(), format!("{PER_FAMILY} inputs per family, worst max-abs error vs oracle (tol {TOL:.0e}): {summary}"))
}

// ---------------------------------------------------------------------------
// 2. Subproblem optimality inequality

fn subproblem_inequality() -> Outcome {
    const TUPLES: usize = 1000;
    const INNER_TOL: f64 = 1e-12;
    let slack = 1e-9 + INNER_TOL;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for i in 0..TUPLES {
        let n = rng.gen_range(2..=5);
        // ψ, plus the set used to make probes feasible.
        let (psi, set): (ConvexPiece, Option<ConvexPiece>) = match i % 6 {
            0 => (ConvexPiece::linf(rng.gen_range(0.1..2.0)).unwrap(), None),
            1 => (ConvexPiece::squared_l2(rng.gen_range(0.0..2.0)).unwrap(), None),
            2 => {
                let s = ConvexPiece::affine(gaussian_mat(&mut rng, 1, n), gaussian_vec(&mut rng, 1, 1.0)).unwrap();
                (s.clone(), Some(s))
            }
            3 => {
                let q = rng.gen_range(1..=3);
                let m = gaussian_mat(&mut rng, q, n);
                let b = DVector::from_fn(q, |_, _| rng.gen_range(0.1..1.0));
                let s = ConvexPiece::polyhedron(m, b).unwrap();
                (s.clone(), Some(s))
            }
            4 => {
                let s = ConvexPiece::quadratic_set(random_psd(&mut rng, n, n), gaussian_vec(&mut rng, n, 0.3), -1.0).unwrap();
                (s.clone(), Some(s))
            }
            _ => {
                let m = gaussian_mat(&mut rng, 2, n);
                let s = ConvexPiece::polyhedron(m, DVector::from_element(2, 0.5)).unwrap();
                (ConvexPiece::sum(vec![ConvexPiece::linf(0.7).unwrap(), s.clone()]).unwrap(), Some(s))
            }
        };
        let rank = rng.gen_range(1..=n);
        let sigma = random_psd(&mut rng, n, rank);
        let t_mat = random_psd(&mut rng, n, n) + DMatrix::identity(n, n) * rng.gen_range(0.05..1.0);
        let anchor = gaussian_vec(&mut rng, n, 1.0);
        let center = gaussian_vec(&mut rng, n, 2.0);
        let mut probe = gaussian_vec(&mut rng, n, 2.0);
        if let Some(s) = &set {
            probe = prox(s, 1.0, &probe).unwrap();
        }

        let t_min = SelfAdjointOperator::dense(t_mat.clone()).unwrap().extremal_eigs().0;
        let rest = SelfAdjointOperator::dense(&t_mat - DMatrix::identity(n, n) * t_min).unwrap();
        let sigma_op = SelfAdjointOperator::dense(sigma.clone()).unwrap();
        let parts = [
            psi.clone(),
            ConvexPiece::weighted_quadratic(sigma_op, anchor.clone()).unwrap(),
            ConvexPiece::weighted_quadratic(rest, center.clone()).unwrap(),
        ];
        let opts = DrOptions { tol: INNER_TOL, max_inner: 500_000, ..DrOptions::default() };
        let zp = prox_composite(&parts, 1.0 / t_min, &center, &opts).unwrap().point;

        let f = |z: &DVector<f64>| 0.5 * (&sigma * (z - &anchor)).dot(&(z - &anchor));
        let t_norm = |d: DVector<f64>| (&t_mat * &d).dot(&d);
        let ts_norm = |d: DVector<f64>| (&t_mat * &d).dot(&d) + (&sigma * &d).dot(&d);
        let lhs = psi.value(&probe) + f(&probe) + 0.5 * t_norm(&probe - &center) - 0.5 * ts_norm(&probe - &zp);
        let rhs = psi.value(&zp) + f(&zp) + 0.5 * t_norm(&zp - &center);
        let gap = rhs - lhs;
        worst = worst.max(gap);
        if !(gap <= slack) {
            violations += 1;
        }
    }
    Outcome::new(
        violations == 0,
        format!("{TUPLES} tuples, {violations} violations, worst rhs - lhs {worst:.2e} (slack {slack:.1e})"),
    )
}

// ---------------------------------------------------------------------------
// 3 and 4. Compliant configuration: Σ̂ = 2I, Θ = 3I, σ = 0.1, η₀ = 1

const COMPLIANT_N: usize = 10;
const COMPLIANT_ITERS: usize = 50;

/// Regression-type coupling with `λ = ν = 0.1`, scaled so that `η₀ = 1`, and
/// `f = g = 0`. The origin is the saddle point.
fn compliant_problem(seed: u64) -> (SaddleProblem, SolverConfig, ProductPoint) {
    let n = COMPLIANT_N;
    let a = gen_gaussian_matrix(&InstanceSpec::new(n, n, 10.0, seed)).unwrap();
    let lambda: f64 = 0.1;
    let smax = a.singular_values().max();
    let scale = (1.0 - lambda * lambda).sqrt() / smax;
    let coupling = QuadraticCoupling::new(GramFactor::new(a), lambda, scale, lambda, DVector::zeros(n)).unwrap();
    let eta0 = coupling.lipschitz();
    let two = SelfAdjointOperator::scaled_identity(n, 2.0);
    let p = SaddleProblem::new(Arc::new(coupling), ConvexPiece::Zero, ConvexPiece::Zero, two.clone(), two, eta0)
        .unwrap()
        .with_known_saddle(Some(ProductPoint::zeros(n, n)))
        .unwrap();
    let three = SelfAdjointOperator::scaled_identity(n, 3.0);
    let mut cfg = SolverConfig::new(0.1, three.clone(), three);
    cfg.max_outer = COMPLIANT_ITERS;
    cfg.outer_tol = 1e-300;
    cfg.timing = false;
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let z0 = ProductPoint::new(gaussian_vec(&mut rng, n, 1.0), gaussian_vec(&mut rng, n, 1.0));
    (p, cfg, z0)
}

fn contraction_certificate() -> Outcome {
    let mut total = 0;
    let mut ok = 0;
    let mut seeds_ok = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut vartheta = f64::NAN;
    let mut sub_ok = true;
    let mut sub_factor = f64::NAN;
    let mut all_hold = true;
    for seed in SEEDS {
        let (p, cfg, z0) = compliant_problem(seed);
        let cert = validate_params(&p, &cfg).unwrap();
        all_hold &= cert.all_hold() && (p.eta0() - 1.0).abs() < 1e-12;
        vartheta = cert.vartheta;
        let trace = run(&SolverKind::Mspacm, &p, &cfg, &z0).unwrap();
        let flags: Vec<bool> = trace.records.iter().filter_map(|r| r.contraction_ok).collect();
        total += flags.len();
        ok += flags.iter().filter(|&&b| b).count();
        if flags.len() == COMPLIANT_ITERS && flags.iter().all(|&b| b) {
            seeds_ok += 1;
        }
        let theta = cfg.theta();
        let sh = p.sigma_hat();
        let norm_op = sh.add(&theta).unwrap();
        let scaled = sh.scaled(cfg.sigma);
        sub_factor = subproblem_contraction_factor(&sh, &theta, p.eta_hat0(), cfg.sigma).unwrap();
        for k in 0..trace.halves.len() {
            let step = StepPair { half: trace.halves[k].clone(), full: trace.iterates[k + 1].clone() };
            let z = &trace.iterates[k];
            let num = norm_op.weighted_norm_sq(&step.full.sub(&step.half)).unwrap().sqrt();
            let den = norm_op.weighted_norm_sq(&step.half.sub(z)).unwrap().sqrt();
            if den > 0.0 {
                worst_ratio = worst_ratio.max(num / den);
            }
            sub_ok &= check_contraction(&step, z, &theta, &scaled, sub_factor).unwrap();
        }
    }
    let pass = all_hold && total == COMPLIANT_ITERS * SEEDS.count() && ok == total;
    Outcome::new(
        pass,
        format!(
            "{ok}/{total} iterations and {seeds_ok}/10 seeds within vartheta = {vartheta:.3} \
             (parameter conditions hold: {all_hold}); worst observed ratio {worst_ratio:.4}; \
             the subproblem factor {sub_factor:.4} in the (sigma*Sigma_hat + Theta)-norm holds at every step: {sub_ok}"
        ),
    )
}

fn gnorm_decrease_criterion() -> Outcome {
    let mut seeds_ok = 0;
    let mut details = Vec::new();
    for seed in SEEDS {
        let (p, cfg, z0) = compliant_problem(seed);
        let trace = run(&SolverKind::Mspacm, &p, &cfg, &z0).unwrap();
        let ops = rate_operators(&p.sigma_hat(), &cfg.theta(), p.eta0(), p.eta_hat0(), cfg.sigma).unwrap();
        let offline = check_gnorm_decrease(&trace, p.known_saddle().unwrap(), &ops.g).unwrap();
        let online = trace.all_gnorm_ok() == Some(true);
        if offline && online && ops.g_pd {
            seeds_ok += 1;
        } else {
            details.push(format!("seed {seed}: offline {offline}, online {online}"));
        }
    }
    let extra = if details.is_empty() { String::new() } else { format!("; {}", details.join(", ")) };
    Outcome::new(seeds_ok == 10, format!("{seeds_ok}/10 seeds with monotone G-norm over {COMPLIANT_ITERS} iterations{extra}"))
}

// ---------------------------------------------------------------------------
// 5 and 9. Default settings on the smooth regression instance

struct DefaultRun {
    n: usize,
    seed: u64,
    status: RunStatus,
    residual_ok: Option<bool>,
    rate: Option<f64>,
}

fn default_runs() -> &'static [DefaultRun] {
    static RUNS: std::sync::OnceLock<Vec<DefaultRun>> = std::sync::OnceLock::new();
    RUNS.get_or_init(|| {
        let cells: Vec<(usize, u64)> = [10usize, 100].iter().flat_map(|&n| SEEDS.map(move |s| (n, s))).collect();
        cells
            .into_par_iter()
            .map(|(n, seed)| {
                let inst = Instance::generate(&InstanceSpec::new(n, n, 10.0, seed)).unwrap();
                let p = inst.to_problem().unwrap();
                let mut cfg = SolverConfig::standard(&p, 1.0).unwrap();
                cfg.record_iterates = false;
                cfg.timing = false;
                let trace = run(&SolverKind::Mspacm, &p, &cfg, &inst.initial_point().unwrap()).unwrap();
                let rate = (trace.status == RunStatus::Converged).then(|| linear_rate_estimate(&trace).ok()).flatten();
                DefaultRun { n, seed, status: trace.status, residual_ok: trace.all_residual_bound_ok(), rate }
            })
            .collect()
    })
}

fn residual_bound_criterion() -> Outcome {
    let runs = default_runs();
    let ok = runs.iter().filter(|r| r.residual_ok == Some(true)).count();
    let bad: Vec<String> =
        runs.iter().filter(|r| r.residual_ok != Some(true)).map(|r| format!("n={} seed {}", r.n, r.seed)).collect();
    let extra = if bad.is_empty() { String::new() } else { format!("; violated on {}", bad.join(", ")) };
    Outcome::new(
        ok == runs.len(),
        format!("{ok}/{} runs (n in {{10, 100}}, 10 seeds, sigma = 1) hold at every iteration, slack {RESIDUAL_BOUND_SLACK:.0e}{extra}", runs.len()),
    )
}

fn linear_rate_criterion() -> Outcome {
    let runs = default_runs();
    let converged: Vec<&DefaultRun> = runs.iter().filter(|r| r.status == RunStatus::Converged).collect();
    let mut below = 0;
    let mut per_n = Vec::new();
    for n in [10, 100] {
        let rates: Vec<f64> = converged.iter().filter(|r| r.n == n).filter_map(|r| r.rate).collect();
        let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        per_n.push(format!("n={n}: {} runs, rate in [{lo:.4}, {hi:.4}]", rates.len()));
    }
    for r in &converged {
        if r.rate.is_some_and(|q| q < 0.95) {
            below += 1;
        }
    }
    Outcome::new(
        below == converged.len() && converged.len() == runs.len(),
        format!("{below}/{} converged runs with rate < 0.95 ({})", converged.len(), per_n.join("; ")),
    )
}

// ---------------------------------------------------------------------------
// 6. Smooth comparison at n = 1000

const LARGE_N: usize = 1000;

fn smooth_comparison() -> Outcome {
    let mut good = 0;
    let mut bad = 0;
    let mut notes = Vec::new();
    for seed in SEEDS {
        // Ten seeds with at least eight successes: three failures settle it.
        if bad > 2 || good >= 8 {
            break;
        }
        let inst = Instance::generate(&InstanceSpec::new(LARGE_N, LARGE_N, 10.0, seed)).unwrap();
        let p = inst.to_problem().unwrap();
        let z0 = inst.initial_point().unwrap();
        let norm = p.matrix_factor().unwrap().spectral_norm();
        let mut cfg = SolverConfig::standard(&p, 1.0).unwrap();
        cfg.max_outer = 20_000;
        cfg.record_iterates = false;
        cfg.certificates = false;
        cfg.timing = false;
        let run_it = |kind: SolverKind| run(&kind, &p, &cfg, &z0).unwrap();
        let (ms, eg0) = rayon::join(|| run_it(SolverKind::Mspacm), || run_it(SolverKind::ExtraGradient { eta: step_grid(norm)[0] }));
        let ms_it = (ms.status == RunStatus::Converged).then(|| ms.iterations());
        let eg0_it = (eg0.status == RunStatus::Converged).then(|| eg0.iterations());
        // The tuned EG count is the minimum over the step grid, so it cannot
        // exceed the count at the largest step.
        if let (Some(a), Some(e)) = (ms_it, eg0_it) {
            if a >= e {
                bad += 1;
                notes.push(format!("seed {seed}: mspACM {a} >= EG(1/|A|) {e}"));
                continue;
            }
        }
        let mut config = BenchConfig::new(Experiment::Figure1);
        config.dims = vec![(LARGE_N, LARGE_N)];
        config.seeds = vec![seed];
        config.timing = false;
        let report = run_figure1(&config).unwrap();
        let pick = |name: &str| {
            report
                .rows
                .iter()
                .find(|r| r.selected && r.solver == name)
                .and_then(|r| (r.status == RunStatus::Converged).then_some(r.iterations))
        };
        let counts: Vec<Option<usize>> = ["mspACM", "PP", "EG", "OGDA"].iter().map(|s| pick(s)).collect();
        let ok = match counts[..] {
            [Some(a), Some(pp), Some(eg), Some(og)] => pp <= a.min(eg).min(og) && a < eg && a < og,
            _ => false,
        };
        notes.push(format!("seed {seed}: {counts:?}"));
        if ok {
            good += 1;
        } else {
            bad += 1;
        }
    }
    Outcome::new(good >= 8, format!("{good} seeds satisfy the ordering, {bad} do not ({})", notes.join("; ")))
}

// ---------------------------------------------------------------------------
// 7 and 8. Table bands

fn table1_bands() -> Outcome {
    let mut config = BenchConfig::new(Experiment::Table1);
    config.dims = vec![(10, 10)];
    config.kappas = vec![10.0];
    config.seeds = SEEDS.collect();
    config.timing = false;
    let report = run_table1(&config).unwrap();
    let count = |seed: u64, sigma: f64| {
        report
            .rows
            .iter()
            .find(|r| r.seed == seed && r.sigma == Some(sigma))
            .and_then(|r| r.counts.last().copied().flatten())
    };
    let mut fast = Vec::new();
    let mut slow = Vec::new();
    let mut ordered = true;
    for seed in SEEDS {
        match (count(seed, 1.0), count(seed, 0.1)) {
            (Some(a), Some(b)) => {
                ordered &= a < b;
                fast.push(a);
                slow.push(b);
            }
            _ => ordered = false,
        }
    }
    let (m1, m01) = (median(fast.clone()), median(slow.clone()));
    let pass = fast.len() == 10 && (5.0..=42.0).contains(&m1) && (35.0..=320.0).contains(&m01) && ordered;
    Outcome::new(
        pass,
        format!(
            "median T(1e-9): sigma=1 {m1} (band [5, 42], target 14), sigma=0.1 {m01} (band [35, 320], target 106); \
             sigma=1 faster on every seed: {ordered}"
        ),
    )
}

fn table2_bands() -> Outcome {
    let mut config = BenchConfig::new(Experiment::Table2);
    config.dims = vec![(10, 10)];
    config.seeds = SEEDS.collect();
    config.timing = false;
    let report = run_table2(&config).unwrap();
    let case1: Vec<usize> = report
        .rows
        .iter()
        .filter(|r| r.case == ConstraintCase::Affine)
        .filter_map(|r| r.counts.last().copied().flatten())
        .collect();
    let med = median(case1.clone());
    let worst_infeas = report.rows.iter().map(|r| r.infeasibility).fold(0.0, f64::max);
    let all_conv = report.rows.iter().all(|r| r.status == RunStatus::Converged);
    let pass = case1.len() == 10 && (3.0..=27.0).contains(&med) && worst_infeas <= 1e-6 && all_conv;
    Outcome::new(
        pass,
        format!(
            "Case 1 median T(1e-7) {med} (band [3, 27], target 9); worst final infeasibility over Cases 1-3 \
             {worst_infeas:.1e} (tol 1e-6); all {} runs converged: {all_conv}",
            report.rows.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 10. Determinism

fn determinism() -> Outcome {
    let mut configs = Vec::new();
    for exp in [Experiment::Figure1, Experiment::Table1, Experiment::Table2] {
        let mut c = BenchConfig::new(exp);
        c.dims = vec![(10, 10)];
        c.kappas = vec![10.0];
        c.seeds = vec![0, 1, 2];
        c.timing = false;
        configs.push(c);
    }
    let mut files = 0;
    let mut mismatches = Vec::new();
    for config in &configs {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for d in &dirs {
            let report = run_bench(config).unwrap();
            write_report(&report, d.path()).unwrap();
        }
        let mut names: Vec<_> = std::fs::read_dir(dirs[0].path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for name in names {
            files += 1;
            let a = std::fs::read(dirs[0].path().join(&name)).unwrap();
            let b = std::fs::read(dirs[1].path().join(&name)).ok();
            if b.as_deref() != Some(a.as_slice()) {
                mismatches.push(name.to_string_lossy().into_owned());
            }
        }
    }
    Outcome::new(
        files > 0 && mismatches.is_empty(),
        format!("{files} CSV files compared across two runs, {} differ {mismatches:?}", mismatches.len()),
    )
}
