//! Columnar CSV data for plotting; no rendering.

use std::fmt::Write;
use std::path::Path;

use scalarflat::analysis;
use scalarflat::Chart;

use crate::commands::{self, check_grid, emit, h_span, load_chart, Grid};
use crate::failure::{Failure, Outcome};
use crate::{GridArgs, PlotKind, Settings};

pub fn plotdata(path: &Path, what: PlotKind, out: Option<&Path>, grid: GridArgs, settings: &Settings) -> Outcome<()> {
    let (_, chart) = load_chart(path)?;
    let table = match what {
        PlotKind::BoundaryMap => boundary_map(&chart, grid)?,
        PlotKind::VDecay => v_decay(&chart)?,
        PlotKind::KillingNorm => killing_norm(&chart),
        PlotKind::CurvatureHeat => curvature_heat(&chart, grid, settings)?,
    };
    emit(out, &table)
}

fn row(out: &mut String, values: &[f64]) {
    let cells: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

/// `x(H, 0)` as `H` sweeps past every vertex preimage; vertices list both edges.
fn boundary_map(chart: &Chart, grid: GridArgs) -> Outcome<String> {
    let (lo, hi) = h_span(chart);
    let n = grid.n_h.unwrap_or(201);
    let (lo, hi) = (grid.h_min.unwrap_or(lo - 1.0), grid.h_max.unwrap_or(hi + 1.0));
    if n < 2 || !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Failure::Input(format!(
            "boundary sweep needs n >= 2 and H_min < H_max (got {n}, [{lo}, {hi}])"
        )));
    }
    // Include each vertex preimage exactly so the polyline has its corners.
    let mut hs: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    hs.extend(chart.a().iter().map(|a| 0.0 - a).filter(|h| *h > lo && *h < hi));
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    let mut out = String::from("H,edge,x1,x2\n");
    for h in hs {
        let img = chart.boundary_image(h);
        let edges: Vec<String> = img.edges.iter().map(|e| e.to_string()).collect();
        writeln!(out, "{h:?},{},{:?},{:?}", edges.join("|"), img.x[0], img.x[1]).expect("string write");
    }
    Ok(out)
}

fn v_decay(chart: &Chart) -> Outcome<String> {
    let angles: Vec<f64> = (1..12).map(|k| 15.0 * k as f64).collect();
    let rhos: Vec<f64> = (4..=16).map(|k| 10f64.powf(k as f64 / 4.0)).collect();
    let rep = analysis::asymptotic_v(chart, &angles, &rhos)?;
    let mut out = String::from("angle,rho,V,V_model,V_moment\n");
    for s in &rep.samples {
        row(&mut out, &[s.angle, s.rho, s.v, s.v_model, s.v_moment]);
    }
    Ok(out)
}

/// `vᵀ Hess⁻¹ v` along `H = 1` for the coordinate vectors and for `ν`.
fn killing_norm(chart: &Chart) -> String {
    let radii: Vec<f64> = (-4..=16).map(|k| 10f64.powf(k as f64 / 4.0)).collect();
    let e1 = analysis::killing_norm(chart, [1.0, 0.0], 1.0, &radii);
    let e2 = analysis::killing_norm(chart, [0.0, 1.0], 1.0, &radii);
    let nu = analysis::killing_norm(chart, chart.nu().as_array(), 1.0, &radii);
    let mut out = String::from("r,e1,e2,nu\n");
    for (k, r) in radii.iter().enumerate() {
        row(&mut out, &[*r, e1[k], e2[k], nu[k]]);
    }
    out
}

fn curvature_heat(chart: &Chart, grid: GridArgs, settings: &Settings) -> Outcome<String> {
    let grid = Grid::resolve(
        grid,
        Grid {
            n_h: 12,
            n_r: 12,
            ..check_grid(chart)
        },
    )?;
    let rep = commands::curvature(chart, &grid, settings)?;
    let mut out = String::from("x1,x2,s\n");
    for s in &rep.samples {
        row(&mut out, &[s.x[0], s.x[1], s.s]);
    }
    Ok(out)
}
