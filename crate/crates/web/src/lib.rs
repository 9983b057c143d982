//! WebAssembly bindings for the single-page demo in `www/`.
//!
//! Results cross the boundary as JSON strings; infinite `xi` values (vanishing
//! weights) become `null`.

use polaron_entanglement::fock::basis_dimension;
use polaron_entanglement::model::{g_p_from_lambda, vertex_total};
use polaron_entanglement::sweep::solve_point;
use polaron_entanglement::{BasisIndexMap, ModelParams, SolverSettings};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest sector dimension the page will attempt.
pub const MAX_DIM: usize = 5_000;

/// Largest number of grid points in one sweep request.
pub const MAX_POINTS: usize = 200;

#[derive(Clone, Debug, Serialize)]
pub struct PointSummary {
    pub lambda_p: f64,
    pub g_p: f64,
    pub k_over_pi: f64,
    pub degenerate: bool,
    pub energy: f64,
    pub entropy: f64,
    pub xis: Vec<f64>,
    pub weights: Vec<f64>,
    pub bare_overlap: f64,
    /// `(K / pi, E_K)` for every sector.
    pub sectors: Vec<(f64, f64)>,
}

fn basis_for(n_sites: usize, n_ph: usize) -> Result<BasisIndexMap, String> {
    match basis_dimension(n_sites, n_ph) {
        Some(d) if d <= MAX_DIM => BasisIndexMap::enumerate(n_sites, n_ph).map_err(|e| e.to_string()),
        _ => Err(format!(
            "N = {n_sites}, N_ph = {n_ph} exceeds the {MAX_DIM}-state limit of the demo"
        )),
    }
}

fn summarize(lambda_p: f64, params: &ModelParams, basis: &BasisIndexMap) -> Result<PointSummary, String> {
    let point = solve_point(params, basis, &SolverSettings::default()).map_err(|e| e.to_string())?;
    let rec = &point.record;
    Ok(PointSummary {
        lambda_p,
        g_p: params.g_p,
        k_over_pi: rec.momentum.over_pi(),
        degenerate: rec.is_degenerate(),
        energy: rec.energy,
        entropy: point.entropy,
        xis: point.spectrum.xis.clone(),
        weights: point.spectrum.weights.clone(),
        bare_overlap: rec.bare_overlap(),
        sectors: rec.sector_energies.iter().map(|(k, e)| (k.over_pi(), *e)).collect(),
    })
}

fn params_at(lambda_p: f64, g_bm: f64, omega: f64, n_sites: usize, n_ph: usize) -> Result<ModelParams, String> {
    if !(lambda_p >= 0.0 && lambda_p.is_finite()) {
        return Err(format!("lambda_P must be non-negative, got {lambda_p}"));
    }
    let base = ModelParams::new(omega, 0.0, g_bm, n_sites, n_ph).map_err(|e| e.to_string())?;
    Ok(base.with_g_p(g_p_from_lambda(lambda_p, &base)))
}

/// Ground state and entanglement spectrum at one coupling.
pub fn point_summary(lambda_p: f64, g_bm: f64, omega: f64, n_sites: usize, n_ph: usize) -> Result<PointSummary, String> {
    let params = params_at(lambda_p, g_bm, omega, n_sites, n_ph)?;
    let basis = basis_for(n_sites, n_ph)?;
    summarize(lambda_p, &params, &basis)
}

/// One summary per `lambda_P` in `0, step, 2 step, ... <= lambda_max`.
pub fn sweep_series(
    g_bm: f64,
    omega: f64,
    n_sites: usize,
    n_ph: usize,
    lambda_max: f64,
    step: f64,
) -> Result<Vec<PointSummary>, String> {
    if !(step > 0.0 && lambda_max >= 0.0) {
        return Err("need step > 0 and lambda_max >= 0".into());
    }
    let count = (lambda_max / step + 1e-9).floor() as usize + 1;
    if count > MAX_POINTS {
        return Err(format!("{count} points requested, limit is {MAX_POINTS}"));
    }
    let basis = basis_for(n_sites, n_ph)?;
    (0..count)
        .map(|i| {
            let lam = i as f64 * step;
            summarize(lam, &params_at(lam, g_bm, omega, n_sites, n_ph)?, &basis)
        })
        .collect()
}

/// `|gamma(k, q)|^2` on a `resolution x resolution` grid over `(-pi, pi]^2`,
/// row-major with `k` along rows.
pub fn vertex_grid(g_p: f64, g_bm: f64, omega: f64, resolution: usize) -> Vec<f64> {
    let Ok(params) = ModelParams::new(omega, g_p, g_bm, 2, 0) else {
        return Vec::new();
    };
    let h = 2.0 * std::f64::consts::PI / resolution as f64;
    let node = |i: usize| -std::f64::consts::PI + (i as f64 + 1.0) * h;
    let mut out = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        for j in 0..resolution {
            out.push(vertex_total(node(i), node(j), &params).norm_sqr());
        }
    }
    out
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = spectrumJson)]
pub fn spectrum_json(lambda_p: f64, g_bm: f64, omega: f64, n_sites: u32, n_ph: u32) -> Result<String, JsValue> {
    to_js(point_summary(lambda_p, g_bm, omega, n_sites as usize, n_ph as usize))
}

#[wasm_bindgen(js_name = sweepJson)]
pub fn sweep_json(
    g_bm: f64,
    omega: f64,
    n_sites: u32,
    n_ph: u32,
    lambda_max: f64,
    step: f64,
) -> Result<String, JsValue> {
    to_js(sweep_series(g_bm, omega, n_sites as usize, n_ph as usize, lambda_max, step))
}

#[wasm_bindgen(js_name = vertexMap)]
pub fn vertex_map(g_p: f64, g_bm: f64, omega: f64, resolution: u32) -> Vec<f64> {
    vertex_grid(g_p, g_bm, omega, resolution.min(512) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oversized_requests_are_refused() {
        assert!(point_summary(1.0, 0.25, 1.0, 8, 9).is_err());
        assert!(sweep_series(0.25, 1.0, 4, 2, 100.0, 0.1).is_err());
        assert!(sweep_series(0.25, 1.0, 4, 2, 1.0, 0.0).is_err());
        assert!(point_summary(-1.0, 0.25, 1.0, 4, 2).is_err());
    }

    #[test]
    fn vertex_grid_shape() {
        let g = vertex_grid(0.5, 0.25, 1.0, 16);
        assert_eq!(g.len(), 256);
        assert!(g.iter().all(|x| x.is_finite() && *x >= 0.0));
        assert!(vertex_grid(0.5, 0.25, -1.0, 16).is_empty());
    }

    #[test]
    fn infinite_xi_serializes_as_null() {
        let s = point_summary(0.125, 0.25, 1.0, 4, 2).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("null"));
    }
}
