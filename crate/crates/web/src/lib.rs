//! Browser bindings: transition-density curves, a sample path and the S-matrix.
//!
//! Each export is a thin wrapper over a plain function returning flat `f64`
//! buffers, so the logic is testable off the browser.

use starwalk::simulate::{simulate_path, RngConfig, SimConfig};
use starwalk::{process_smatrix, transition, GraphPoint, ProcessParams, Result};
use wasm_bindgen::prelude::*;

fn params(w: &[f64], beta: f64, gamma: f64) -> Result<ProcessParams> {
    // sliders give raw weights; normalize here so the page stays dumb
    let s: f64 = w.iter().sum();
    let w = w.iter().map(|v| v / s).collect();
    ProcessParams::new(w, beta, gamma)
}

fn start_point(edge: i32, x: f64) -> Result<GraphPoint> {
    if edge < 0 || x == 0.0 {
        Ok(GraphPoint::Vertex)
    } else {
        GraphPoint::new(edge as usize, x)
    }
}

/// `[atom, total_mass, d_0(y_0..y_{n-1}), d_1(...), ...]` on `n_y` points of `[0, y_max]`.
#[allow(clippy::too_many_arguments)]
pub fn density_curves(
    w: &[f64],
    beta: f64,
    gamma: f64,
    t: f64,
    start_edge: i32,
    start_x: f64,
    y_max: f64,
    n_y: usize,
) -> Result<Vec<f64>> {
    let p = params(w, beta, gamma)?;
    let k = transition(&p, t, start_point(start_edge, start_x)?)?;
    let n_y = n_y.max(2);
    let mut out = vec![k.atom(), k.total_mass()?];
    for m in 0..p.n_edges() {
        for i in 0..n_y {
            out.push(k.density(m, y_max * i as f64 / (n_y - 1) as f64)?);
        }
    }
    Ok(out)
}

/// Triples `(time, edge, x)` with edge `-1` at the vertex; a final triple with
/// edge `-2` marks a kill.
pub fn path_points(w: &[f64], beta: f64, gamma: f64, dt: f64, horizon: f64, seed: u64) -> Result<Vec<f64>> {
    let p = params(w, beta, gamma)?;
    let cfg = SimConfig { dt, horizon, n_paths: 1, ..SimConfig::default() };
    let traj = simulate_path(&p, GraphPoint::Vertex, &cfg, &mut RngConfig::new(seed, 0).rng())?;
    let mut out = Vec::with_capacity(3 * traj.times.len());
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let (e, x) = match *s {
            GraphPoint::Vertex => (-1.0, 0.0),
            GraphPoint::Interior { edge, x } => (edge as f64, x),
        };
        out.extend([*t, e, x]);
    }
    if traj.killed {
        out.extend([traj.lifetime, -2.0, 0.0]);
    }
    Ok(out)
}

/// Row-major `S(λ)` followed by its determinant and involution residual.
pub fn smatrix_entries(w: &[f64], beta: f64, gamma: f64, lambda: f64) -> Result<Vec<f64>> {
    let s = process_smatrix(&params(w, beta, gamma)?, lambda)?;
    let mut out: Vec<f64> = s.rows().into_iter().flatten().collect();
    out.extend([s.determinant(), s.involution_residual()]);
    Ok(out)
}

fn js(e: starwalk::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = densityCurves)]
#[allow(clippy::too_many_arguments)]
pub fn density_curves_js(
    w: &[f64],
    beta: f64,
    gamma: f64,
    t: f64,
    start_edge: i32,
    start_x: f64,
    y_max: f64,
    n_y: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    density_curves(w, beta, gamma, t, start_edge, start_x, y_max, n_y).map_err(js)
}

#[wasm_bindgen(js_name = samplePath)]
pub fn path_points_js(
    w: &[f64],
    beta: f64,
    gamma: f64,
    dt: f64,
    horizon: f64,
    seed: u64,
) -> std::result::Result<Vec<f64>, JsError> {
    path_points(w, beta, gamma, dt, horizon, seed).map_err(js)
}

#[wasm_bindgen(js_name = sMatrix)]
pub fn smatrix_js(w: &[f64], beta: f64, gamma: f64, lambda: f64) -> std::result::Result<Vec<f64>, JsError> {
    smatrix_entries(w, beta, gamma, lambda).map_err(js)
}
