//! Browser demo bindings: three interactive views over the lowdim toolkit.
//!
//! Each export returns a JSON string (parsed by the page's JavaScript):
//!
//! * [`attractor`] — chaos-game sample of the four-corner square system with
//!   its contraction dimension and recovery thresholds;
//! * [`attractor_boxcount`] — box-counting fit for the largest component of
//!   the same system;
//! * [`sparse_phase`] — exhaustive-decoder phase transition for 1-sparse
//!   3x3 matrices.
//!
//! Build with `wasm-pack build --target web` (or cargo + wasm-bindgen-cli)
//! and serve `www/` next to the generated `pkg/`.

use lowdim::dimest::{estimate_minkowski, PointCloud};
use lowdim::harness::{run_phase, DecoderChoice, KRange, PhaseConfig};
use lowdim::measurement::ColumnDistribution;
use lowdim::rifs::four_corner_square_system;
use lowdim::setmodel::SetDescriptor;
use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

fn error_json(msg: impl std::fmt::Display) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

/// Samples the attractor of the four-corner system at the given
/// contractivity (0 < scale < 0.5, no self transitions) and reports the
/// contraction dimension, the stacked-attractor bound, and the measurement
/// thresholds of the attractor set.
#[wasm_bindgen]
pub fn attractor(scale: f64, points_per_component: u32, seed: u64) -> String {
    if !(scale > 0.0 && scale < 0.5) {
        return error_json("scale must lie strictly between 0 and 0.5");
    }
    let points = (points_per_component as usize).clamp(10, 100_000);
    let sys = match four_corner_square_system(scale, false) {
        Ok(s) => s,
        Err(e) => return error_json(e),
    };
    let d = match sys.contraction_dimension() {
        Ok(d) => d,
        Err(e) => return error_json(e),
    };
    let descriptor = SetDescriptor::RifsAttractor {
        rifs: sys.to_spec(),
    };
    let thresholds = match descriptor.thresholds() {
        Ok(t) => t,
        Err(e) => return error_json(e),
    };
    let sample = sys.attractor_points(points, 200, seed);
    let pts: Vec<[f64; 3]> = sample
        .components
        .iter()
        .enumerate()
        .flat_map(|(comp, cloud)| cloud.iter().map(move |p| [comp as f64, p[0], p[1]]))
        .collect();
    json!({
        "scale": scale,
        "d": d,
        "nd_bound": 4.0 * d,
        "k_probabilistic": thresholds.k_probabilistic,
        "k_unique": thresholds.k_unique,
        "points": pts,
    })
    .to_string()
}

/// Box-counting fit for the largest-dimension component of the four-corner
/// system: returns the fitted slope next to the exact contraction dimension
/// together with the (log 1/delta, log N) pairs behind the fit.
#[wasm_bindgen]
pub fn attractor_boxcount(
    scale: f64,
    points_per_component: u32,
    seed: u64,
    delta_min: f64,
    delta_max: f64,
) -> String {
    if !(scale > 0.0 && scale < 0.5) {
        return error_json("scale must lie strictly between 0 and 0.5");
    }
    let points = (points_per_component as usize).clamp(100, 100_000);
    let sys = match four_corner_square_system(scale, false) {
        Ok(s) => s,
        Err(e) => return error_json(e),
    };
    let d = match sys.contraction_dimension() {
        Ok(d) => d,
        Err(e) => return error_json(e),
    };
    let sample = sys.attractor_points(points, 200, seed);
    let mut best: Option<lowdim::dimest::DimensionEstimate> = None;
    for cloud in &sample.components {
        let cloud = match PointCloud::from_vectors(cloud) {
            Ok(c) => c,
            Err(e) => return error_json(e),
        };
        match estimate_minkowski(&cloud, delta_min, delta_max, 10) {
            Ok(est) => {
                if best.as_ref().is_none_or(|b| est.slope > b.slope) {
                    best = Some(est);
                }
            }
            Err(e) => return error_json(e),
        }
    }
    let est = best.expect("four components");
    let log_inv_delta: Vec<f64> = est.delta_grid.iter().map(|&x| (1.0 / x).ln()).collect();
    let log_counts: Vec<f64> = est.counts.iter().map(|&n| (n as f64).ln()).collect();
    json!({
        "d": d,
        "slope": est.slope,
        "intercept": est.intercept,
        "r_squared": est.r_squared,
        "log_inv_delta": log_inv_delta,
        "log_counts": log_counts,
    })
    .to_string()
}

/// Phase transition for 1-sparse 3x3 matrices under the exhaustive decoder:
/// success rate per measurement count k = 1..5 with the derived thresholds.
#[wasm_bindgen]
pub fn sparse_phase(trials: u32, seed: u64) -> String {
    let trials = (trials as usize).clamp(5, 500);
    let config = PhaseConfig {
        descriptor: SetDescriptor::Sparse { m: 3, n: 3, s: 1 },
        k_range: KRange {
            start: 1,
            end: 5,
            step: 1,
        },
        trials,
        seed,
        decoder: DecoderChoice::SparseBruteForce { s: 1 },
        distribution: ColumnDistribution::default(),
        amplitude: 1.0,
        residual_scale: 1e-8,
        success_error_scale: 1e-6,
    };
    let (curve, _) = match run_phase(&config, 1) {
        Ok(r) => r,
        Err(e) => return error_json(e),
    };
    let ks: Vec<usize> = curve.rows.iter().map(|r| r.k).collect();
    let rates: Vec<f64> = curve.rows.iter().map(|r| r.success_rate).collect();
    json!({
        "ks": ks,
        "rates": rates,
        "trials": trials,
        "k_probabilistic": curve.rows[0].k_probabilistic,
        "k_unique": curve.rows[0].k_unique,
    })
    .to_string()
}
