//! WebAssembly bindings for the browser demo in `www/`. Every export returns
//! a JSON string; errors come back as a rejected string.

pub mod demo;

use wasm_bindgen::prelude::*;

fn to_json<T: serde::Serialize>(value: Result<T, String>) -> Result<String, String> {
    value.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
}

/// Runs one cascade on a synthetic market and summarizes it per step.
#[wasm_bindgen(js_name = runCascade)]
pub fn run_cascade(market: &str, seed: u32, shock: usize, alpha: f64, c: f64) -> Result<String, String> {
    to_json(demo::cascade(market, seed, shock, alpha, c))
}

/// Mean and max critical confidence for price limits 0.1 to 0.9.
#[wasm_bindgen(js_name = phaseBoundary)]
pub fn phase_boundary(market: &str, seed: u32) -> Result<String, String> {
    to_json(demo::boundary(market, seed))
}

/// Driving-node probability against branching for every stock.
#[wasm_bindgen(js_name = drivingNodes)]
pub fn driving_nodes(market: &str, seed: u32, c: f64) -> Result<String, String> {
    to_json(demo::driving_nodes(market, seed, c))
}
