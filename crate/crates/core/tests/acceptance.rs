#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scalarflat::analysis::{self, DEFAULT_CURVATURE_TOL, DEFAULT_FD_FACTOR};
use scalarflat::corpus;
use scalarflat::exec::{self, Execution};
use scalarflat::harmonic::fd_pde_residual_increments;
use scalarflat::oracles::{self, OracleFamily};
use scalarflat::potential::{det2x2, grid_points, hessian};
use scalarflat::{Chart, HalfPlanePoint, MomentPolygon, NutParameter};

struct Outcome {
    passed: bool,
    detail: String,
}

fn charts() -> Vec<(String, Chart)> {
    let mut out = Vec::new();
    for (name, p) in corpus::standard() {
        let mut nus = vec![NutParameter::ZERO];
        nus.extend(corpus::interior_nuts(&p));
        for nu in nus {
            let label = format!("{name} nu=({}, {})", nu.alpha, nu.beta);
            out.push((label, Chart::new(p.clone(), nu).expect("corpus chart")));
        }
    }
    out
}

fn h_span(chart: &Chart) -> (f64, f64) {
    let a = chart.a();
    (-a[a.len() - 1] - 2.0, 2.0)
}

fn random_points(chart: &Chart, n: usize, r_range: (f64, f64), seed: u64) -> Vec<HalfPlanePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = h_span(chart);
    let (rl, rh) = (r_range.0.ln(), r_range.1.ln());
    (0..n)
        .map(|_| HalfPlanePoint::new(rng.random_range(lo..hi), rng.random_range(rl..rh).exp()))
        .collect()
}

fn harmonicity(charts: &[(String, Chart)]) -> Outcome {
    let worst = exec::map(Execution::Parallel, charts, |(_, c)| {
        let field = c.field();
        random_points(c, 100, (0.5, 4.0), 1)
            .iter()
            .map(|&p| {
                let r1 = fd_pde_residual_increments(|q| field.xi_increment(p, q)[0], p, 1e-4).abs();
                let r2 = fd_pde_residual_increments(|q| field.xi_increment(p, q)[1], p, 1e-4).abs();
                r1.max(r2)
            })
            .fold(0.0, f64::max)
    });
    let max = worst.iter().copied().fold(0.0, f64::max);
    Outcome {
        passed: max < 1e-6,
        detail: format!("{} charts x 100 points, max residual {max:.2e} (< 1e-6)", charts.len()),
    }
}

fn det_positivity(charts: &[(String, Chart)]) -> Outcome {
    let results = exec::map(Execution::Parallel, charts, |(_, c)| {
        let base = c.with_nu(NutParameter::ZERO).expect("ALE chart");
        let mut min_det = f64::INFINITY;
        let mut min_term = f64::INFINITY;
        for p in random_points(c, 400, (1e-3, 1e2), 2) {
            let jet = c.jet(p);
            min_det = min_det.min(jet.det);
            if !c.nu().is_zero() {
                let terms = c.field().extra_det_terms(p);
                let sum: f64 = terms.iter().sum();
                let expect = jet.det - base.jet(p).det;
                let t = terms.iter().copied().fold(f64::INFINITY, f64::min);
                min_term = min_term.min(t);
                if (sum - expect).abs() > 1e-10 * jet.det.abs() {
                    min_term = min_term.min(-1.0);
                }
            }
        }
        (min_det, min_term)
    });
    let min_det = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let min_term = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Outcome {
        passed: min_det > 0.0 && min_term >= 0.0,
        detail: format!("min det Dxi {min_det:.2e} (> 0), min extra term {min_term:.2e} (>= 0, sums exact)"),
    }
}

fn boundary_map() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut polygons: Vec<(String, MomentPolygon)> = corpus::standard();
    polygons.push(("S2xR2".into(), corpus::s2r2(1.0)));
    let mut worst_zero = 0.0_f64;
    let mut worst_other = f64::INFINITY;
    for (_, p) in &polygons {
        let chart = Chart::new(p.clone(), NutParameter::ZERO).expect("chart");
        let a = chart.a();
        let d = p.d();
        for j in 1..=d {
            let (lo, hi) = match j {
                1 => (-a[0], -a[0] + 10.0),
                j if j == d => (-a[d - 2] - 10.0, -a[d - 2]),
                j => (-a[j - 1], -a[j - 2]),
            };
            for _ in 0..100 {
                let h = rng.random_range(lo..hi);
                if h == lo || h == hi {
                    continue;
                }
                let b = chart.boundary_image(h);
                if b.edges != vec![j] {
                    worst_zero = f64::INFINITY;
                }
                for k in 1..=d {
                    let l = p.edge_function(k, b.x).unwrap();
                    if k == j {
                        worst_zero = worst_zero.max(l.abs());
                    } else {
                        worst_other = worst_other.min(l);
                    }
                }
            }
        }
    }
    let mut exact = true;
    for p in 1..=4 {
        for lambda in [0.5, 1.0, 2.75] {
            let a = scalarflat::solve_a(&corpus::op(p, lambda)).unwrap();
            exact &= a == vec![0.0, lambda];
        }
    }
    Outcome {
        passed: worst_zero <= 1e-9 && worst_other > 0.0 && exact,
        detail: format!(
            "{} polygons, max |l_j| {worst_zero:.2e} (<= 1e-9), min other l {worst_other:.2e} (> 0), a_2 = lambda_3 exact: {exact}",
            polygons.len()
        ),
    }
}

fn det_identity(charts: &[(String, Chart)]) -> Outcome {
    let results = exec::map(Execution::Parallel, charts, |(_, c)| {
        let mut worst = 0.0_f64;
        for x in random_interior_x(c, 1000, 4) {
            let q = c.invert(x, None)?;
            let h = hessian(c, q)?;
            worst = worst.max((det2x2(&h.hess) * q.r * q.r - 1.0).abs());
        }
        Ok::<_, scalarflat::Error>(worst)
    });
    let mut max = 0.0_f64;
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(w) => max = max.max(w),
            Err(e) => errors.push(e.to_string()),
        }
    }
    Outcome {
        passed: errors.is_empty() && max < 1e-10,
        detail: format!(
            "{} charts x 1000 points, max |det Hess r^2 - 1| {max:.2e} (< 1e-10){}",
            charts.len(),
            if errors.is_empty() {
                String::new()
            } else {
                format!(", errors: {errors:?}")
            }
        ),
    }
}

fn curvature_grid(chart: &Chart) -> Vec<[f64; 2]> {
    let (lo, hi) = h_span(chart);
    grid_points((lo + 0.5, hi - 0.5), (0.5, 2.5), 5, 5)
        .into_iter()
        .map(|p| chart.action_coords(p))
        .collect()
}

fn scalar_flatness(charts: &[(String, Chart)]) -> Outcome {
    let reports = exec::map(Execution::Parallel, charts, |(_, c)| {
        analysis::curvature_report(c, &curvature_grid(c), DEFAULT_FD_FACTOR, Execution::Sequential)
    });
    let mut max_s = 0.0_f64;
    let mut max_gap = 0.0_f64;
    let mut errors = Vec::new();
    for ((name, _), r) in charts.iter().zip(&reports) {
        match r {
            Ok(r) => {
                max_s = max_s.max(r.max_abs_s);
                max_gap = max_gap.max(r.max_step_gap);
            }
            Err(e) => errors.push(format!("{name}: {e}")),
        }
    }
    Outcome {
        passed: errors.is_empty() && max_s < DEFAULT_CURVATURE_TOL && max_gap < DEFAULT_CURVATURE_TOL,
        detail: format!(
            "{} charts x 25 points, max |s| {max_s:.2e}, max |s(h) - s(h/2)| {max_gap:.2e} (< 1e-5){}",
            charts.len(),
            if errors.is_empty() {
                String::new()
            } else {
                format!(", errors: {errors:?}")
            }
        ),
    }
}

fn oracle_equivalence() -> Outcome {
    let cases: Vec<(MomentPolygon, NutParameter)> = vec![
        (corpus::quadrant(), NutParameter::ZERO),
        (corpus::op(1, 1.0), NutParameter::ZERO),
        (corpus::op(2, 1.0), NutParameter::ZERO),
        (corpus::op(3, 1.0), NutParameter::ZERO),
        (corpus::op(4, 1.0), NutParameter::ZERO),
        (corpus::ap(3), NutParameter::ZERO),
        (corpus::ap(4), NutParameter::ZERO),
        (corpus::op(2, 1.0), NutParameter::new(0.5, -0.5)),
        (corpus::op(2, 1.0), NutParameter::new(0.5, -0.45)),
        (corpus::s2r2(1.0), NutParameter::ZERO),
    ];
    let results = exec::map(Execution::Parallel, &cases, |(p, nu)| {
        let chart = Chart::new(p.clone(), *nu)?;
        let family = OracleFamily::detect(p, *nu)?;
        let (lo, hi) = h_span(&chart);
        let points = grid_points((lo, hi), (0.2, 3.0), 15, 15);
        oracles::compare_with_oracle(&chart, &family, &points, Execution::Sequential)
    });
    let mut max = 0.0_f64;
    let mut names = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(c) => {
                max = max.max(c.max_gap());
                names.push(c.family.name());
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    Outcome {
        passed: errors.is_empty() && max < 1e-7,
        detail: format!(
            "{} families ({}) on 15x15 grids, max gradient gap {max:.2e} (< 1e-7){}",
            names.len(),
            names.join(", "),
            if errors.is_empty() {
                String::new()
            } else {
                format!(", errors: {errors:?}")
            }
        ),
    }
}

fn ricci(charts: &[(String, Chart)]) -> Outcome {
    let mut cases: Vec<(String, Chart, Option<bool>)> =
        charts.iter().map(|(n, c)| (n.clone(), c.clone(), None)).collect();
    for t in [0.25, 1.0, 3.0] {
        let nu = NutParameter::new(t, -t);
        cases.push((
            format!("O(-2) nu=({t}, -{t})"),
            Chart::new(corpus::op(2, 1.0), nu).unwrap(),
            Some(true),
        ));
        for p in 2..=4 {
            cases.push((
                format!("A_{p} nu=({t}, -{t})"),
                Chart::new(corpus::ap(p), nu).unwrap(),
                Some(true),
            ));
        }
    }
    let o3 = corpus::op(3, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut o3_nus = vec![NutParameter::ZERO, NutParameter::new(1.0, -1.0)];
    while o3_nus.len() < 12 {
        let nu = NutParameter::new(rng.random_range(0.0..4.0), rng.random_range(-4.0..0.0));
        if nu.is_admissible(&o3) {
            o3_nus.push(nu);
        }
    }
    for nu in o3_nus {
        cases.push((
            format!("O(-3) {nu:?}"),
            Chart::new(o3.clone(), nu).unwrap(),
            Some(false),
        ));
    }
    let mut failures = Vec::new();
    let mut flat = 0;
    for (name, c, expected) in &cases {
        let class = analysis::ricci_classify(c.polygon(), c.nu());
        let eta = class.eta.expect("eta is always determined by the first two normals");
        let dev = analysis::ricci_numeric_check(c, eta, &random_points(c, 50, (0.05, 5.0), 5));
        let numeric_ok = if class.ricci_flat { dev < 1e-9 } else { dev > 1e-6 };
        if !numeric_ok || expected.is_some_and(|e| e != class.ricci_flat) {
            failures.push(format!("{name}: flat={} deviation={dev:e}", class.ricci_flat));
        }
        flat += class.ricci_flat as usize;
    }
    Outcome {
        passed: failures.is_empty(),
        detail: format!(
            "{} charts ({flat} Ricci-flat), classification agrees with |grad(eta.xi - log r)| \
             (< 1e-9 when flat, > 1e-6 otherwise); A_p and O(-2) on alpha + beta = 0 flat, O(-3) never{}",
            cases.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!(", failures: {failures:?}")
            }
        ),
    }
}

fn growth(ray: &[f64]) -> f64 {
    let (last, earlier) = ray.split_last().unwrap();
    last / (earlier.iter().copied().fold(0.0, f64::max) + 1e-6)
}

fn asymptotics(charts: &[(String, Chart)]) -> Outcome {
    let rhos = [1e2, 1e3, 1e4];
    let angles = [15.0, 45.0, 75.0, 90.0, 105.0, 135.0, 165.0];
    let mut failures = Vec::new();
    let mut worst_corrected = 0.0_f64;
    let mut worst_first_order = 0.0_f64;
    let mut model_only = 0;
    for (name, c) in charts {
        let Ok(rep) = analysis::asymptotic_v(c, &angles, &rhos) else {
            failures.push(format!("{name}: not strictly unbounded"));
            continue;
        };
        if !rep.bounded {
            failures.push(format!("{name}: residual not bounded"));
        }
        if c.nu().is_zero() && !rep.model_bounded {
            failures.push(format!("{name}: Euclidean model not bounded"));
        }
        model_only += rep.model_bounded as usize;
        for (ray, samples) in rep
            .corrected_residuals
            .chunks(rhos.len())
            .zip(rep.samples.chunks(rhos.len()))
        {
            worst_corrected = worst_corrected.max(growth(ray));
            let first: Vec<f64> = samples.iter().map(|s| s.rho * (s.v - s.v_model).abs()).collect();
            if !analysis::decade_bounded(&first) {
                failures.push(format!("{name}: rho |V - V_model| not bounded"));
            }
            worst_first_order = worst_first_order.max(growth(&first));
        }
        if !c.nu().is_zero() {
            let (d1, dd) = c.nu().cone_dets(c.polygon());
            let bound = 0.5 * d1.min(dd);
            let min_v = rep
                .samples
                .iter()
                .filter(|s| s.angle <= 90.0)
                .map(|s| s.v)
                .fold(f64::INFINITY, f64::min);
            if !(min_v >= bound) {
                failures.push(format!("{name}: min V {min_v} < {bound}"));
            }
        }
    }
    Outcome {
        passed: failures.is_empty(),
        detail: format!(
            "{} charts, rho^2 |V - V_model - V_moment| last/max(earlier) <= {worst_corrected:.2} (<= 3); \
             V_model alone rho^2-bounded in {model_only} (every nu = 0 chart), rho-bounded in all \
             (last/max(earlier) <= {worst_first_order:.2}); V >= min(det(nu,nu_1), det(nu,nu_d))/2 on H >= 0{}",
            charts.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!(", failures: {failures:?}")
            }
        ),
    }
}

fn killing(charts: &[(String, Chart)]) -> Outcome {
    let radii = [1e2, 1e3, 1e4];
    let mut worst_bracket = 0.0_f64;
    let mut worst_growth = 0.0_f64;
    let mut count = 0;
    for (_, c) in charts.iter().filter(|(_, c)| !c.nu().is_zero()) {
        let nu = c.nu();
        let along = analysis::killing_norm(c, nu.as_array(), 1.0, &radii);
        let lo = along.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = along.iter().copied().fold(0.0, f64::max);
        worst_bracket = worst_bracket.max(if lo > 0.0 { hi / lo } else { f64::INFINITY });
        let across = analysis::killing_norm(c, [-nu.beta, nu.alpha], 1.0, &radii);
        let growth = across[2] / across[0] / 1e4;
        worst_growth = worst_growth.max((growth - 1.0).abs());
        count += 1;
    }
    Outcome {
        passed: worst_bracket <= 3.0 && worst_growth <= 0.2,
        detail: format!(
            "{count} charts, v = nu max/min {worst_bracket:.3} (<= 3), independent v growth off r^2 by {:.2}% (<= 20%)",
            100.0 * worst_growth
        ),
    }
}

fn random_interior_x(c: &Chart, n: usize, seed: u64) -> Vec<[f64; 2]> {
    let p = c.polygon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = ([0.0_f64, 0.0_f64], [0.0_f64, 0.0_f64]);
    for j in 1..p.d() {
        let v = p.vertex(j);
        for k in 0..2 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = [
            rng.random_range(lo[0] - 5.0..hi[0] + 5.0),
            rng.random_range(lo[1] - 5.0..hi[1] + 5.0),
        ];
        if p.min_edge_value(x) >= 1e-3 {
            out.push(x);
        }
    }
    out
}

fn round_trip(charts: &[(String, Chart)]) -> Outcome {
    let results = exec::map(Execution::Parallel, charts, |(_, c)| {
        let mut worst = 0.0_f64;
        let mut failures = 0;
        for x in random_interior_x(c, 1000, 6) {
            match c.invert(x, None) {
                Ok(q) => {
                    let y = c.action_coords(q);
                    let err = (y[0] - x[0]).hypot(y[1] - x[1]) / (1.0 + x[0].hypot(x[1]));
                    worst = worst.max(err);
                }
                Err(_) => failures += 1,
            }
        }
        (worst, failures)
    });
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let failures: usize = results.iter().map(|r| r.1).sum();
    Outcome {
        passed: failures == 0 && worst <= 1e-10,
        detail: format!(
            "{} charts x 1000 points, max relative residual {worst:.2e} (<= 1e-10), failures {failures}",
            charts.len()
        ),
    }
}

fn main() {
    let charts = charts();
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, Duration, Check)> = vec![
        (
            "harmonicity of xi",
            Duration::from_secs(5),
            Box::new(|| harmonicity(&charts)),
        ),
        (
            "det Dxi > 0 and extra terms >= 0",
            Duration::from_secs(5),
            Box::new(|| det_positivity(&charts)),
        ),
        (
            "boundary map traces the polygon",
            Duration::from_secs(1),
            Box::new(boundary_map),
        ),
        (
            "determinant identity",
            Duration::from_secs(5),
            Box::new(|| det_identity(&charts)),
        ),
        (
            "scalar flatness",
            Duration::from_secs(30),
            Box::new(|| scalar_flatness(&charts)),
        ),
        (
            "oracle equivalence",
            Duration::from_secs(10),
            Box::new(oracle_equivalence),
        ),
        (
            "Ricci-flat criterion",
            Duration::from_secs(5),
            Box::new(|| ricci(&charts)),
        ),
        (
            "asymptotics of V",
            Duration::from_secs(5),
            Box::new(|| asymptotics(&charts)),
        ),
        (
            "Killing field norms",
            Duration::from_secs(5),
            Box::new(|| killing(&charts)),
        ),
        (
            "round-trip inversion",
            Duration::from_secs(10),
            Box::new(|| round_trip(&charts)),
        ),
    ];
    let mut all = true;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let ok = outcome.passed && elapsed <= *limit;
        all &= ok;
        println!(
            "{} [{:>2}] {name}: {} ({:.3}s, limit {}s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if !all {
        std::process::exit(1);
    }
}
