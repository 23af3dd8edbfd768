use std::fs;
use std::io::Write;
use std::path::Path;

use scalarflat::analysis::{self, AsymptoticModel, CurvatureReport};
use scalarflat::oracles::{self, OracleFamily};
use scalarflat::potential::{self, BoundaryTarget};
use scalarflat::{corpus, Chart, HalfPlanePoint, NutParameter, PolygonClass, PolygonSpec};
use serde::Serialize;

use crate::failure::{Failure, Outcome};
use crate::{GridArgs, Settings};

const ASYMPTOTIC_ANGLES: [f64; 7] = [15.0, 45.0, 75.0, 90.0, 105.0, 135.0, 165.0];
const FAR_RADII: [f64; 3] = [1e2, 1e3, 1e4];
const BOUNDARY_RADII: [f64; 3] = [1e-2, 1e-3, 1e-4];
const DET_TOL: f64 = 1e-8;

pub fn load_spec(path: &Path) -> Outcome<PolygonSpec> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path.display(), e))?;
    serde_json::from_str(&text).map_err(|e| Failure::io(format_args!("cannot parse {}", path.display()), e))
}

/// Reads a spec and solves its chart. The nut is checked first so an
/// inadmissible one is reported by the determinant it violates.
pub fn load_chart(path: &Path) -> Outcome<(PolygonSpec, Chart)> {
    let spec = load_spec(path)?;
    let polygon = spec.polygon()?;
    let nu = spec.nut();
    let (first, last) = nu.cone_dets(&polygon);
    let mut violated = Vec::new();
    if first < 0.0 {
        violated.push(format!("det(nu, nu_1) = {first} < 0"));
    }
    if last < 0.0 {
        violated.push(format!("det(nu, nu_{}) = {last} < 0", polygon.d()));
    }
    if !violated.is_empty() {
        return Err(Failure::Input(format!(
            "nut ({}, {}) is outside the admissible cone: {}",
            nu.alpha,
            nu.beta,
            violated.join(", ")
        )));
    }
    let chart = Chart::new(polygon, nu)?;
    Ok((spec, chart))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn emit(out: Option<&Path>, content: &str) -> Outcome<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Failure::io(dir.display(), e))?;
            }
            fs::write(path, content).map_err(|e| Failure::io(path.display(), e))
        }
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| Failure::io("stdout", e)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub n_h: usize,
    pub n_r: usize,
    pub h_range: (f64, f64),
    pub r_range: (f64, f64),
}

impl Grid {
    pub fn resolve(args: GridArgs, default: Grid) -> Outcome<Grid> {
        let grid = Grid {
            n_h: args.n_h.unwrap_or(default.n_h),
            n_r: args.n_r.unwrap_or(default.n_r),
            h_range: (
                args.h_min.unwrap_or(default.h_range.0),
                args.h_max.unwrap_or(default.h_range.1),
            ),
            r_range: (
                args.r_min.unwrap_or(default.r_range.0),
                args.r_max.unwrap_or(default.r_range.1),
            ),
        };
        let bad = |m: String| Err(Failure::Input(m));
        if grid.n_h < 2 || grid.n_r < 2 {
            return bad(format!(
                "grid counts must be at least 2 (got {} x {})",
                grid.n_h, grid.n_r
            ));
        }
        let (h0, h1) = grid.h_range;
        let (r0, r1) = grid.r_range;
        if !(h0.is_finite() && h1.is_finite() && h0 < h1) {
            return bad(format!("H range [{h0}, {h1}] must have positive length"));
        }
        if !(r0.is_finite() && r1.is_finite() && r0 > 0.0 && r0 < r1) {
            return bad(format!("r range [{r0}, {r1}] must satisfy 0 < r_min < r_max"));
        }
        Ok(grid)
    }

    pub fn points(&self) -> Vec<HalfPlanePoint> {
        potential::grid_points(self.h_range, self.r_range, self.n_h, self.n_r)
    }
}

/// `H` from two units beyond the last vertex preimage to `H = 2`.
pub fn h_span(chart: &Chart) -> (f64, f64) {
    let a = chart.a();
    (-a[a.len() - 1] - 2.0, 2.0)
}

/// Default grid for curvature and Ricci checks: away from the axis and
/// half a unit inside [`h_span`].
pub fn check_grid(chart: &Chart) -> Grid {
    let (lo, hi) = h_span(chart);
    Grid {
        n_h: 5,
        n_r: 5,
        h_range: (lo + 0.5, hi - 0.5),
        r_range: (0.5, 2.5),
    }
}

pub fn curvature(chart: &Chart, grid: &Grid, settings: &Settings) -> Outcome<CurvatureReport> {
    let xs: Vec<[f64; 2]> = grid.points().into_iter().map(|p| chart.action_coords(p)).collect();
    analysis::curvature_report(chart, &xs, settings.fd_step, settings.exec()).map_err(|e| named("curvature", e))
}

fn named(check: &str, e: scalarflat::Error) -> Failure {
    match Failure::from(e) {
        Failure::Numeric(m) => Failure::Numeric(format!("{check}: {m}")),
        Failure::Input(m) => Failure::Input(format!("{check}: {m}")),
        Failure::Io(m) => Failure::Io(m),
    }
}

fn class_words(class: &PolygonClass) -> &'static str {
    if class.strictly_unbounded {
        "strictly_unbounded"
    } else if class.unbounded {
        "unbounded"
    } else {
        "bounded"
    }
}

pub fn validate(path: &Path) -> Outcome<()> {
    let (spec, chart) = load_chart(path)?;
    let polygon = chart.polygon();
    let class = polygon.classify();
    let nu = chart.nu();
    // Adding zero turns a signed zero into +0 for display.
    let (first, last) = nu.cone_dets(polygon);
    let (first, last) = (first + 0.0, last + 0.0);
    let mut text = format!("{}: {}, c1_zero={}\n", spec.name, class_words(&class), class.c1_zero);
    text += &format!("edges: {}\n", polygon.d());
    let t = polygon.translation();
    if t != [0.0, 0.0] {
        text += &format!("translated by ({}, {}) into gauge\n", t[0], t[1]);
    }
    text += &format!("a: {:?}\n", chart.a());
    text += &format!(
        "nut: ({}, {}), det(nu, nu_1) = {first}, det(nu, nu_{}) = {last}\n",
        nu.alpha,
        nu.beta,
        polygon.d()
    );
    emit(None, &text)?;
    Ok(())
}

#[derive(Serialize)]
struct ChartMeta<'a> {
    name: &'a str,
    normals: Vec<[i64; 2]>,
    offsets: &'a [f64],
    translation: [f64; 2],
    nut: [f64; 2],
    a: &'a [f64],
    class: PolygonClass,
    anchor: HalfPlanePoint,
    grid: Grid,
    checks: BuildChecks,
}

#[derive(Serialize)]
struct BuildChecks {
    rows: usize,
    max_det_r2_error: f64,
    all_positive_definite: bool,
    passed: bool,
}

pub fn build(path: &Path, out: &Path, grid: GridArgs, settings: &Settings) -> Outcome<()> {
    let (spec, chart) = load_chart(path)?;
    let grid = Grid::resolve(
        grid,
        Grid {
            n_h: 20,
            n_r: 20,
            h_range: h_span(&chart),
            r_range: (0.05, 5.0),
        },
    )?;
    let samples = potential::sample_grid(&chart, grid.h_range, grid.r_range, grid.n_h, grid.n_r, settings.exec())?;
    let max_det_r2_error = samples
        .iter()
        .map(|s| (s.det_hess * s.hr.r * s.hr.r - 1.0).abs())
        .fold(0.0, f64::max);
    let all_positive_definite = samples.iter().all(|s| s.is_positive_definite());
    let checks = BuildChecks {
        rows: samples.len(),
        max_det_r2_error,
        all_positive_definite,
        passed: max_det_r2_error < DET_TOL && all_positive_definite,
    };
    let passed = checks.passed;
    let meta = ChartMeta {
        name: &spec.name,
        normals: chart.polygon().normals().iter().map(|n| [n.a, n.b]).collect(),
        offsets: chart.polygon().offsets(),
        translation: chart.polygon().translation(),
        nut: chart.nu().as_array(),
        a: chart.a(),
        class: chart.polygon().classify(),
        anchor: chart.anchor(),
        grid,
        checks,
    };
    fs::create_dir_all(out).map_err(|e| Failure::io(out.display(), e))?;
    let mut csv = Vec::new();
    potential::write_csv(&samples, &mut csv).map_err(|e| Failure::io("grid.csv", e))?;
    emit(
        Some(&out.join("grid.csv")),
        std::str::from_utf8(&csv).expect("csv is utf-8"),
    )?;
    emit(Some(&out.join("chart.json")), &to_json(&meta))?;
    emit(
        None,
        &format!("wrote {} rows to {}\n", samples.len(), out.join("grid.csv").display()),
    )?;
    if !passed {
        return Err(Failure::Numeric(format!(
            "metric checks failed: max |det(Hess) r^2 - 1| = {max_det_r2_error:e}, positive definite = {all_positive_definite}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    fn of(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Serialize)]
struct CurvatureCheck {
    status: Status,
    points: usize,
    max_abs_s: f64,
    max_step_gap: f64,
    tolerance: f64,
}

#[derive(Serialize)]
struct RicciCheck {
    status: Status,
    ricci_flat: bool,
    eta: Option<[f64; 2]>,
    reason: String,
    max_deviation: f64,
}

#[derive(Serialize)]
struct AsymptoticCheck {
    status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    model: Option<AsymptoticModel>,
    bounded: Option<bool>,
    model_bounded: Option<bool>,
    min_v: Option<f64>,
}

#[derive(Serialize)]
struct KillingCheck {
    status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    radii: [f64; 3],
    along_nu: Vec<f64>,
    across_nu: Vec<f64>,
}

#[derive(Serialize)]
struct XiRangeCheck {
    status: Status,
    drift: [f64; 2],
    expected: [f64; 2],
    complete: bool,
    strictly_unbounded: bool,
}

#[derive(Serialize)]
struct BoundaryEntry {
    target: BoundaryTarget,
    h: f64,
    sup_u_minus_guillemin: f64,
    delta_min: f64,
    delta_max: f64,
    passed: bool,
}

#[derive(Serialize)]
struct BoundaryCheck {
    status: Status,
    radii: [f64; 3],
    targets: Vec<BoundaryEntry>,
}

#[derive(Serialize)]
struct VerifyReport {
    name: String,
    nut: [f64; 2],
    class: PolygonClass,
    grid: Grid,
    fd_step: f64,
    curvature: CurvatureCheck,
    ricci: RicciCheck,
    asymptotics: AsymptoticCheck,
    killing_norm: KillingCheck,
    xi_range: XiRangeCheck,
    boundary: BoundaryCheck,
    failed: Vec<&'static str>,
    passed: bool,
}

pub fn verify(path: &Path, out: Option<&Path>, grid: GridArgs, settings: &Settings) -> Outcome<()> {
    let (spec, chart) = load_chart(path)?;
    let grid = Grid::resolve(grid, check_grid(&chart))?;
    let nu = chart.nu();
    let class = chart.polygon().classify();

    let curv = curvature(&chart, &grid, settings)?;
    let curvature = CurvatureCheck {
        status: Status::of(curv.passed(settings.tol_curvature)),
        points: curv.samples.len(),
        max_abs_s: curv.max_abs_s,
        max_step_gap: curv.max_step_gap,
        tolerance: settings.tol_curvature,
    };

    let rc = analysis::ricci_classify(chart.polygon(), nu);
    let max_deviation = rc
        .eta
        .map(|eta| analysis::ricci_numeric_check(&chart, eta, &grid.points()))
        .unwrap_or(f64::INFINITY);
    let ricci = RicciCheck {
        status: Status::of(if rc.ricci_flat {
            max_deviation < 1e-9
        } else {
            max_deviation > 1e-6
        }),
        ricci_flat: rc.ricci_flat,
        eta: rc.eta,
        reason: rc.reason,
        max_deviation,
    };

    let asymptotics = if class.strictly_unbounded {
        let rep =
            analysis::asymptotic_v(&chart, &ASYMPTOTIC_ANGLES, &FAR_RADII).map_err(|e| named("asymptotics", e))?;
        AsymptoticCheck {
            status: Status::of(rep.bounded && (!nu.is_zero() || rep.model_bounded)),
            note: None,
            model: Some(rep.model),
            bounded: Some(rep.bounded),
            model_bounded: Some(rep.model_bounded),
            min_v: Some(rep.min_v),
        }
    } else {
        AsymptoticCheck {
            status: Status::Skipped,
            note: Some("polygon is not strictly unbounded".into()),
            model: None,
            bounded: None,
            model_bounded: None,
            min_v: None,
        }
    };

    let killing_norm = if nu.is_zero() || !class.strictly_unbounded {
        KillingCheck {
            status: Status::Skipped,
            note: Some(
                if nu.is_zero() {
                    "nu = 0"
                } else {
                    "polygon is not strictly unbounded"
                }
                .into(),
            ),
            radii: FAR_RADII,
            along_nu: Vec::new(),
            across_nu: Vec::new(),
        }
    } else {
        let along = analysis::killing_norm(&chart, nu.as_array(), 1.0, &FAR_RADII);
        let across = analysis::killing_norm(&chart, [-nu.beta, nu.alpha], 1.0, &FAR_RADII);
        let lo = along.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = along.iter().copied().fold(0.0, f64::max);
        let growth = across[2] / across[0] / (FAR_RADII[2] / FAR_RADII[0]).powi(2);
        KillingCheck {
            status: Status::of(lo > 0.0 && hi <= 3.0 * lo && (growth - 1.0).abs() <= 0.2),
            note: None,
            radii: FAR_RADII,
            along_nu: along,
            across_nu: across,
        }
    };

    let hs: Vec<f64> = grid.points().iter().map(|p| p.h).step_by(grid.n_r).collect();
    let xr = analysis::xi_range_probe(&chart, &FAR_RADII, &hs);
    let xi_range = XiRangeCheck {
        status: Status::of(xr.complete == xr.strictly_unbounded),
        drift: xr.drift,
        expected: xr.expected,
        complete: xr.complete,
        strictly_unbounded: xr.strictly_unbounded,
    };

    let d = chart.polygon().d();
    let targets = (1..=d)
        .map(BoundaryTarget::Edge)
        .chain((1..d).map(BoundaryTarget::Vertex));
    let mut entries = Vec::new();
    for target in targets {
        let rep = potential::boundary_regularity(&chart, target, &BOUNDARY_RADII).map_err(|e| named("boundary", e))?;
        entries.push(BoundaryEntry {
            target,
            h: rep.h,
            sup_u_minus_guillemin: rep.sup_u_minus_guillemin,
            delta_min: rep.delta_min,
            delta_max: rep.delta_max,
            passed: rep.passed(),
        });
    }
    let boundary = BoundaryCheck {
        status: Status::of(entries.iter().all(|e| e.passed)),
        radii: BOUNDARY_RADII,
        targets: entries,
    };

    let failed: Vec<&'static str> = [
        ("curvature", curvature.status),
        ("ricci", ricci.status),
        ("asymptotics", asymptotics.status),
        ("killing_norm", killing_norm.status),
        ("xi_range", xi_range.status),
        ("boundary", boundary.status),
    ]
    .into_iter()
    .filter(|(_, s)| *s == Status::Fail)
    .map(|(n, _)| n)
    .collect();
    let report = VerifyReport {
        name: spec.name,
        nut: nu.as_array(),
        class,
        grid,
        fd_step: settings.fd_step,
        curvature,
        ricci,
        asymptotics,
        killing_norm,
        xi_range,
        boundary,
        passed: failed.is_empty(),
        failed,
    };
    emit(out, &to_json(&report))?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Numeric(format!("failed checks: {}", report.failed.join(", "))))
    }
}

#[derive(Serialize)]
struct OracleReport {
    name: String,
    family: OracleFamily,
    grid: Grid,
    points: usize,
    max_value_fd_gap: f64,
    max_gradient_gap: f64,
    tolerance: f64,
    passed: bool,
}

/// Moves the polygon into normal form (`ν_1 = (0,1)`, `ν_2 = (1,0)`) so the
/// family can be recognised; the nut transforms with the normals.
fn normal_form_chart(chart: &Chart) -> Outcome<Chart> {
    let n = chart.polygon().normals();
    if (n[0].a, n[0].b, n[1].a, n[1].b) == (0, 1, 1, 0) {
        return Ok(chart.clone());
    }
    let (polygon, m) = chart.polygon().normalize_sl2z()?;
    let nu = chart.nu();
    let nu = NutParameter::new(
        m[0][0] as f64 * nu.alpha + m[0][1] as f64 * nu.beta,
        m[1][0] as f64 * nu.alpha + m[1][1] as f64 * nu.beta,
    );
    Ok(Chart::new(polygon, nu)?)
}

pub fn oracle_compare(path: &Path, out: Option<&Path>, grid: GridArgs, settings: &Settings) -> Outcome<()> {
    let (spec, chart) = load_chart(path)?;
    let chart = normal_form_chart(&chart)?;
    let family = OracleFamily::detect(chart.polygon(), chart.nu())?;
    let grid = Grid::resolve(
        grid,
        Grid {
            n_h: 15,
            n_r: 15,
            h_range: h_span(&chart),
            r_range: (0.2, 3.0),
        },
    )?;
    let cmp = oracles::compare_with_oracle(&chart, &family, &grid.points(), settings.exec())?;
    let passed = cmp.max_gap() < settings.tol_oracle;
    let report = OracleReport {
        name: spec.name,
        family: cmp.family.clone(),
        grid,
        points: cmp.points,
        max_value_fd_gap: cmp.max_value_fd_gap,
        max_gradient_gap: cmp.max_gradient_gap,
        tolerance: settings.tol_oracle,
        passed,
    };
    emit(out, &to_json(&report))?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Numeric(format!(
            "oracle gap {:e} is not below {:e}",
            cmp.max_gap(),
            settings.tol_oracle
        )))
    }
}

pub fn examples(out: &Path) -> Outcome<()> {
    fs::create_dir_all(out).map_err(|e| Failure::io(out.display(), e))?;
    let specs = corpus::example_specs();
    for spec in &specs {
        emit(Some(&out.join(format!("{}.json", spec.name))), &to_json(spec))?;
    }
    emit(None, &format!("wrote {} specs to {}\n", specs.len(), out.display()))
}
