//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Angles cross the boundary in degrees. Errors come back as plain strings so
//! the functions stay callable from native tests.

use hopfsim::chsh::{self, AngleQuad};
use hopfsim::model::{self, Orientation};
use hopfsim::rng::{streams, RngContract};
use hopfsim::stats;
use wasm_bindgen::prelude::*;

fn msg(e: hopfsim::Error) -> String {
    e.to_string()
}

/// Sampled standardized correlation against Bob's angle, flattened as
/// `[β°, sampled scalar, residual norm, -cos 2(α-β)]` rows for
/// `β = 0, step, …, 180`.
#[wasm_bindgen]
pub fn correlation_curve(alpha_deg: f64, step_deg: f64, trials: u32, seed: u32) -> Result<Vec<f64>, String> {
    if !(step_deg > 0.0 && step_deg <= 180.0) {
        return Err(format!("step must lie in (0, 180], got {step_deg}"));
    }
    if trials == 0 {
        return Err("at least one trial is required".into());
    }
    let rng = RngContract::new(u64::from(seed), streams::SOURCE);
    let lambdas = stats::sample_orientations(u64::from(trials), &rng).map_err(msg)?;
    let alpha = alpha_deg.to_radians();
    let steps = (180.0 / step_deg).floor() as usize;
    let mut out = Vec::with_capacity(4 * (steps + 1));
    for k in 0..=steps {
        let beta_deg = k as f64 * step_deg;
        let beta = beta_deg.to_radians();
        let est = stats::correlate_standard_from(alpha, beta, &lambdas).map_err(msg)?;
        out.extend([beta_deg, est.scalar_part, est.residual_norm(), model::singlet_correlation(alpha, beta)]);
    }
    Ok(out)
}

/// CHSH report for one quadruple as a JSON object.
#[wasm_bindgen]
pub fn chsh_report(alpha_deg: f64, alpha_p_deg: f64, beta_deg: f64, beta_p_deg: f64) -> Result<String, String> {
    let q = AngleQuad::from_degrees(alpha_deg, alpha_p_deg, beta_deg, beta_p_deg).map_err(msg)?;
    let report = chsh::variance_inequality_analytic(&q).map_err(msg)?;
    let value = serde_json::json!({
        "string_value": report.string_value,
        "bound_sine": report.bound_sine,
        "bound_cross": report.bound_cross,
        "qm_limit": report.qm_limit,
        "commutator_norms": report.commutator_norms,
        "within_bound": report.within_bound(),
        "within_qm_limit": report.within_qm_limit(),
    });
    Ok(value.to_string())
}

/// The product of the two standard scores for one orientation, as
/// `[scalar, e23, e31, e12]`.
#[wasm_bindgen]
pub fn score_product_point(alpha_deg: f64, beta_deg: f64, lambda: i8) -> Result<Vec<f64>, String> {
    let lambda = Orientation::from_lambda(lambda).map_err(msg)?;
    let q = model::score_product(alpha_deg.to_radians(), beta_deg.to_radians(), lambda).map_err(msg)?;
    let [b1, b2, b3] = q.bivector.0;
    Ok(vec![q.scalar, b1, b2, b3])
}
