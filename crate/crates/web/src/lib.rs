//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export takes plain numbers or text and returns a JSON string, which
//! keeps the JavaScript side free of generated type glue.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use qtomo::io::parse_returns_csv;
use qtomo::linalg::{eigh, DensityMatrix};
use qtomo::problems::{gen_instance, portfolio_from_returns, GenConfig};
use qtomo::solvers::{run, run_cover, Algorithm, ConvergenceReport, SolverOptions};

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn instance(dim: usize, bases: usize, shots: u32, rank: usize, seed: u32) -> Result<qtomo::ProblemInstance, JsValue> {
    gen_instance(&GenConfig {
        dim,
        bases,
        shots_per_basis: u64::from(shots),
        rank,
        seed: u64::from(seed),
    })
    .map_err(js_err)
}

fn trace_json(report: &ConvergenceReport) -> Value {
    let column = |f: fn(&qtomo::solvers::TraceRecord) -> f64| -> Vec<f64> { report.records.iter().map(f).collect() };
    json!({
        "algorithm": report.algorithm.name(),
        "k": report.records.iter().map(|r| r.k).collect::<Vec<_>>(),
        "objective": column(|r| r.objective_at_rho),
        "certificate": column(|r| r.certificate_at_rho.min(r.certificate_at_rho_bar)),
        "iterations": report.iterations,
        "stop_reason": report.stop_reason.to_string(),
        "time_ms": report.total_time_ms,
    })
}

/// Runs every tomography solver on one synthetic problem.
#[wasm_bindgen]
pub fn compare_solvers(dim: usize, bases: usize, shots: u32, seed: u32, max_iters: usize) -> Result<String, JsValue> {
    let inst = instance(dim, bases, shots, dim, seed)?;
    let runs: Vec<Value> = [Algorithm::Qem, Algorithm::Rrr, Algorithm::DrrrExact, Algorithm::DrrrArmijo]
        .into_iter()
        .map(|algorithm| {
            let opts = SolverOptions::new(algorithm)
                .max_iters(max_iters)
                .certificate_tol(1e-10);
            match run(&inst.ensemble, &opts) {
                Ok(report) => trace_json(&report),
                Err(e) => json!({ "algorithm": algorithm.name(), "error": e.to_string() }),
            }
        })
        .collect();
    Ok(json!({ "dim": dim, "outcomes": inst.ensemble.len(), "runs": runs }).to_string())
}

fn matrix_json(rho: &DensityMatrix) -> Value {
    let h = rho.as_hermitian();
    let d = h.dim();
    let rows: Vec<Vec<[f64; 2]>> = (0..d)
        .map(|i| (0..d).map(|j| [h.get(i, j).re, h.get(i, j).im]).collect())
        .collect();
    json!(rows)
}

/// Reconstructs a random state from simulated counts with qem.
#[wasm_bindgen]
pub fn reconstruct(dim: usize, rank: usize, shots: u32, seed: u32) -> Result<String, JsValue> {
    let inst = instance(dim, 3, shots, rank, seed)?;
    let truth = inst.true_state.clone().ok_or_else(|| js_err("generator returned no true state"))?;
    let opts = SolverOptions::new(Algorithm::Qem)
        .max_iters(5_000)
        .certificate_tol(1e-8)
        .record_every(5_000);
    let report = run(&inst.ensemble, &opts).map_err(js_err)?;
    let estimate = &report.final_rho;
    let distance = 0.5
        * eigh(&(estimate.as_hermitian() - truth.as_hermitian()))
            .map_err(js_err)?
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .sum::<f64>();
    Ok(json!({
        "truth": matrix_json(&truth),
        "estimate": matrix_json(estimate),
        "trace_distance": distance,
        "iterations": report.iterations,
        "certificate": report.final_certificate(),
        "estimate_spectrum": eigh(estimate.as_hermitian()).map_err(js_err)?.eigenvalues,
    })
    .to_string())
}

/// Growth-optimal weights for a returns table pasted as CSV.
#[wasm_bindgen]
pub fn portfolio(returns_csv: &str, max_iters: usize) -> Result<String, JsValue> {
    let rows = parse_returns_csv(returns_csv).map_err(js_err)?;
    let prob = portfolio_from_returns(&rows, None).map_err(js_err)?;
    let report = run_cover(&prob, max_iters, 1e-10, max_iters).map_err(js_err)?;
    let last = report.records.last().ok_or_else(|| js_err("empty report"))?;
    Ok(json!({
        "weights": report.x.entries(),
        "growth_rate": -last.objective_at_x,
        "certificate": last.certificate_at_x.min(last.certificate_at_x_bar),
        "iterations": last.k,
        "stop_reason": report.stop_reason.to_string(),
    })
    .to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_returns_four_runs() {
        let v: Value = serde_json::from_str(&compare_solvers(3, 3, 500, 1, 50).unwrap()).unwrap();
        assert_eq!(v["runs"].as_array().unwrap().len(), 4);
        assert_eq!(v["runs"][0]["algorithm"], "qem");
    }

    #[test]
    fn reconstruct_is_close_with_many_shots() {
        let v: Value = serde_json::from_str(&reconstruct(2, 1, 100_000, 4).unwrap()).unwrap();
        assert!(v["trace_distance"].as_f64().unwrap() < 0.05);
    }

    #[test]
    fn portfolio_symmetric_market() {
        let v: Value = serde_json::from_str(&portfolio("1,0.5\n0.5,1\n", 10_000).unwrap()).unwrap();
        let w = v["weights"].as_array().unwrap();
        assert!((w[0].as_f64().unwrap() - 0.5).abs() < 1e-9);
    }
}
