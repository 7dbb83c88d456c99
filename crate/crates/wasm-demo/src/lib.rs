//! WebAssembly bindings for the static demo page in `www/`.

use wasm_bindgen::prelude::*;

pub mod demo;

fn factor_list(factors: &[u32]) -> Vec<usize> {
    factors.iter().map(|&m| m as usize).collect()
}

#[wasm_bindgen]
pub fn pwm_signal(period: f64, teeth: u32, t_end: f64, samples: usize) -> Vec<f64> {
    demo::pwm_samples(period, teeth, t_end, samples)
}

#[wasm_bindgen]
pub fn pwm_average(period: f64, teeth: u32, window_teeth: u32, t_end: f64, samples: usize) -> Vec<f64> {
    demo::pwm_moving_average(period, teeth, window_teeth, t_end, samples)
}

/// Residual history: initial residual, then one value per iteration.
#[wasm_bindgen]
pub fn mgrit_convergence(problem: &str, nt: usize, factors: &[u32], fcf: bool) -> Result<Vec<f64>, JsError> {
    demo::mgrit_history(problem, nt, &factor_list(factors), fcf, 1)
        .map(|h| h.residuals)
        .map_err(|e| JsError::new(&e))
}

/// Flattened `[workers, speedup, workers, speedup, ...]` pairs.
#[wasm_bindgen]
pub fn speedup_curve(
    problem: &str,
    nt: usize,
    factors: &[u32],
    fcf: bool,
    max_workers: usize,
) -> Result<Vec<f64>, JsError> {
    demo::mgrit_history(problem, nt, &factor_list(factors), fcf, max_workers)
        .map(|h| h.speedup.into_iter().flat_map(|(p, s)| [p as f64, s]).collect())
        .map_err(|e| JsError::new(&e))
}
