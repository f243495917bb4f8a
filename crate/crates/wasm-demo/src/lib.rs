//! Browser front end for `momentum-lab`: run and certify a config, re-certify a
//! trace CSV, and simulate a continuous-time dynamics.
//!
//! Each export returns a JSON string. The `*_json` functions carry the logic
//! and are plain Rust so they can be tested natively.

use momentum_lab::dynamics::{continuous_lyapunov, simulate_first_el, simulate_second_el, ContinuousSchedule, DynamicsKind, IntegratorOpts};
use momentum_lab::harness::output::{certify_csv_text, trace_csv};
use momentum_lab::harness::{execute, ExperimentConfig};
use momentum_lab::methods::{default_geometry, default_x0};
use momentum_lab::problems::{corpus, CorpusParams, Problem};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Longest run the page will start; keeps the tab responsive.
const MAX_ITERATIONS: usize = 20_000;

/// Run the experiment described by `config` (INI text) and certify it.
pub fn run_json(config: &str) -> Result<String, String> {
    let mut cfg = ExperimentConfig::parse(config).map_err(|e| e.to_string())?;
    if cfg.iterations > MAX_ITERATIONS {
        return Err(format!("iterations {} exceeds the demo limit {MAX_ITERATIONS}", cfg.iterations));
    }
    cfg.outputs = Default::default();
    let out = execute(&cfg).map_err(|e| e.to_string())?;
    if let Some(e) = &out.error {
        return Err(e.clone());
    }
    let (trace, rep) = match (&out.trace, &out.report) {
        (Some(t), Some(r)) => (t, r),
        _ => return Err("run produced no certificate".into()),
    };
    let doc = json!({
        "method": rep.method_id,
        "problem": rep.problem_id,
        "kind": rep.kind.name(),
        "overall": rep.overall,
        "checks": rep.checks,
        "first_failure": rep.first_failure,
        "rate_exponent": rep.rate_fit.as_ref().map(|f| f.exponent),
        "gaps": rep.gaps,
        "lyapunov": rep.per_k.iter().map(|e| e.e_k).chain(rep.per_k.last().map(|e| e.e_next)).collect::<Vec<_>>(),
        "csv": trace_csv(trace, rep).map_err(|e| e.to_string())?,
    });
    Ok(doc.to_string())
}

/// Recompute the verdict of a trace CSV written by `run`.
pub fn certify_json(csv: &str) -> Result<String, String> {
    let c = certify_csv_text(csv).map_err(|e| e.to_string())?;
    serde_json::to_string(&c).map_err(|e| e.to_string())
}

/// Simulate `kind` (`first_el` or `second_el`) on a corpus problem over `[t0, t1]`.
pub fn dynamics_json(kind: &str, problem: &str, dim: usize, p: f64, t1: f64) -> Result<String, String> {
    let go = || -> momentum_lab::Result<serde_json::Value> {
        let kind = DynamicsKind::parse(kind)?;
        let inst = corpus(problem, dim, 0, &CorpusParams::new())?;
        let Problem::Plain(f) = &inst.problem else {
            return Err(momentum_lab::LabError::ConfigError(format!("{problem} is composite")));
        };
        let h = default_geometry(&inst)?;
        let x0 = default_x0(&inst, &h);
        let opts = IntegratorOpts::default().with_samples(200);
        let mu = inst.meta().strong_convexity_mu;
        let trace = match kind {
            DynamicsKind::FirstEl => simulate_first_el(f, &h, &ContinuousSchedule::polynomial(p), &x0, None, 1.0, t1, &opts)?,
            DynamicsKind::SecondEl => {
                let mu = mu.ok_or_else(|| momentum_lab::LabError::ConfigError(format!("{problem} declares no mu")))?;
                simulate_second_el(f, &h, mu, &ContinuousSchedule::linear(mu.sqrt()), &x0, None, 0.0, t1, &opts)?
            }
            _ => return Err(momentum_lab::LabError::ConfigError("the demo simulates first_el or second_el".into())),
        };
        let r = inst.reference()?;
        let rep = continuous_lyapunov(&trace, trace.lyapunov_kind(), &r.x_star, r.f_star, mu)?;
        Ok(json!({
            "kind": kind.name(),
            "t": rep.t,
            "lyapunov": rep.values,
            "gaps": trace.gaps(),
            "nonincreasing": rep.nonincreasing,
            "rate_bound_holds": rep.rate_bound_holds,
            "max_increase": rep.max_increase,
        }))
    };
    go().map(|v| v.to_string()).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn run(config: &str) -> Result<String, JsValue> {
    run_json(config).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn certify(csv: &str) -> Result<String, JsValue> {
    certify_json(csv).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn dynamics(kind: &str, problem: &str, dim: usize, p: f64, t1: f64) -> Result<String, JsValue> {
    dynamics_json(kind, problem, dim, p, t1).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const AGD: &str = "[problem]\nname = quadratic_illcond\ndim = 10\nseed = 1\nkappa = 100\n\
        [method]\nid = agd_family_I\ngmap = nesterov\n[schedule]\nkind = quadratic\ndelta = auto\n[run]\niterations = 100\n";

    #[test]
    fn run_then_certify_round_trip() {
        let v: serde_json::Value = serde_json::from_str(&run_json(AGD).unwrap()).unwrap();
        assert_eq!(v["overall"], true);
        assert_eq!(v["gaps"].as_array().unwrap().len(), 101);
        let c: serde_json::Value = serde_json::from_str(&certify_json(v["csv"].as_str().unwrap()).unwrap()).unwrap();
        assert_eq!(c["overall"], true);
        assert_eq!(c["checks"], 100);
    }

    #[test]
    fn dynamics_are_certified() {
        let v: serde_json::Value = serde_json::from_str(&dynamics_json("first_el", "quadratic_illcond", 5, 2.0, 10.0).unwrap()).unwrap();
        assert_eq!(v["nonincreasing"], true);
        let v: serde_json::Value = serde_json::from_str(&dynamics_json("second_el", "quadratic_illcond", 5, 2.0, 10.0).unwrap()).unwrap();
        assert_eq!(v["nonincreasing"], true);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(run_json("[problem]\nname = nope\n").is_err());
        assert!(run_json(&AGD.replace("= 100\n", "= 1000000\n")).is_err());
        assert!(certify_json("k,E_k\n0,1\n").is_err());
        assert!(dynamics_json("prox_first", "lasso", 5, 2.0, 5.0).is_err());
    }
}
