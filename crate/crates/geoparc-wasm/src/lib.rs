//! Browser bindings for the parking phase diagram.
//!
//! Three operations drive the demo page in `www/`: the critical curve
//! `q_c(alpha)` of a family, phase classification of one `(alpha, q)`
//! point, and the exact flux law `P(X = k)` at a subcritical point together
//! with its fixed-point iteration history. Everything returns JSON strings
//! (an `{"error": ...}` object on invalid input), which keeps the JS side
//! to a few `JSON.parse` calls.

use serde_json::json;
use wasm_bindgen::prelude::*;

use geoparc::kernel::{self, Kernel, Phase};
use geoparc::series;
use geoparc::{ArrivalLaw, OffspringParam};

fn make_law(family: &str, alpha: f64) -> Result<ArrivalLaw, String> {
    let law = match family {
        "binary" => ArrivalLaw::binary(alpha),
        "geometric" => ArrivalLaw::geometric(alpha),
        "poisson" => ArrivalLaw::poisson(alpha),
        other => return Err(format!("unknown family {other:?}")),
    };
    law.map_err(|e| e.to_string())
}

fn error_json(message: String) -> String {
    json!({ "error": message }).to_string()
}

/// Critical curve of a family: arrays `alpha`, `t_c`, `criterion`, `q_c`
/// (null where the process is supercritical for every q).
#[wasm_bindgen]
pub fn threshold_curve_json(family: &str, alpha_min: f64, alpha_max: f64, points: usize) -> String {
    let run = || -> Result<String, String> {
        if !(alpha_min > 0.0 && alpha_max > alpha_min && (2..=2048).contains(&points)) {
            return Err("need 0 < alpha_min < alpha_max and 2..=2048 points".into());
        }
        let mut alphas = Vec::with_capacity(points);
        let mut t_cs = Vec::with_capacity(points);
        let mut crits = Vec::with_capacity(points);
        let mut q_cs: Vec<Option<f64>> = Vec::with_capacity(points);
        for i in 0..points {
            let alpha = alpha_min + (alpha_max - alpha_min) * i as f64 / (points - 1) as f64;
            let law = make_law(family, alpha)?;
            let kern = Kernel::new(&law).map_err(|e| e.to_string())?;
            let crit = kern.criterion_value().map_err(|e| e.to_string())?;
            let t_c = kern.threshold().t_c;
            alphas.push(alpha);
            t_cs.push(t_c);
            crits.push(crit);
            q_cs.push(if t_c > 1.0 && crit <= 0.25 {
                Some(0.5 * (1.0 + (1.0 - 4.0 * crit).max(0.0).sqrt()))
            } else {
                None
            });
        }
        Ok(json!({
            "family": family,
            "alpha": alphas,
            "t_c": t_cs,
            "criterion": crits,
            "q_c": q_cs,
        })
        .to_string())
    };
    run().unwrap_or_else(error_json)
}

/// Phase verdict for one `(family, alpha, q)` point.
#[wasm_bindgen]
pub fn classify_json(family: &str, alpha: f64, q: f64) -> String {
    let run = || -> Result<String, String> {
        let law = make_law(family, alpha)?;
        let qp = OffspringParam::new(q).map_err(|e| e.to_string())?;
        let report = kernel::classify(&law, qp).map_err(|e| e.to_string())?;
        Ok(json!({
            "family": family,
            "alpha": alpha,
            "q": q,
            "t_c": report.threshold.t_c,
            "criterion": report.criterion_value,
            "q_threshold": report.q_threshold_value,
            "phase": match report.phase { Phase::Subcritical => "subcritical", Phase::Supercritical => "supercritical" },
            "boundary": report.boundary,
            "q_c": report.q_c,
        })
        .to_string())
    };
    run().unwrap_or_else(error_json)
}

/// Exact flux law at a subcritical point: `P(X = 0)`, the bar heights
/// `P(X = k+1)` for `k <= k_max`, the truncation deficit, and the
/// per-height fixed-point iteration trace `P(X_h = 0)`. Supercritical
/// points return the trace only.
#[wasm_bindgen]
pub fn flux_json(family: &str, alpha: f64, q: f64, k_max: usize) -> String {
    let run = || -> Result<String, String> {
        let k_max = k_max.clamp(1, 40);
        let law = make_law(family, alpha)?;
        let qp = OffspringParam::new(q).map_err(|e| e.to_string())?;
        let kern = Kernel::new(&law).map_err(|e| e.to_string())?;
        let fixed_point = kern.solve_p_circ(qp).map_err(|e| e.to_string())?;
        let rde = kernel::iterate_rde(&law, qp, 60, 400).map_err(|e| e.to_string())?;
        let base = match fixed_point {
            None => json!({
                "family": family, "alpha": alpha, "q": q,
                "phase": "supercritical",
                "p_zero_history": rde.p_x_zero_history,
            }),
            Some(fp) => {
                let table =
                    series::tutte_solve_f64(&law, 160, 60).map_err(|e| e.to_string())?;
                let flux = series::flux_distribution_exact(qp, fp.p_circ, &table)
                    .map_err(|e| e.to_string())?;
                json!({
                    "family": family, "alpha": alpha, "q": q,
                    "phase": "subcritical",
                    "p_zero": flux.p_zero,
                    "p": flux.p[..=k_max.min(flux.p.len() - 1)],
                    "deficit": flux.deficit,
                    "deficit_bound": flux.deficit_bound,
                    "x_boltzmann": flux.x_boltzmann,
                    "p_zero_history": rde.p_x_zero_history,
                })
            }
        };
        Ok(base.to_string())
    };
    run().unwrap_or_else(error_json)
}
