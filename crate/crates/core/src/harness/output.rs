//! CSV persistence of certified traces and continuous samples, and re-certification from CSV.
//!
//! Every number is written with Rust's shortest round-trip formatting, so
//! parsing a field gives back the exact `f64` that was written.

use crate::certify::CertReport;
use crate::dynamics::ContinuousTrace;
use crate::methods::Trace;
use crate::{LabError, Result};
use serde::Serialize;
use std::path::Path;

pub const TRACE_COLUMNS: [&str; 12] =
    ["k", "A_k", "alpha_k", "tau_k", "f_x", "f_y", "grad_norm", "E_k", "eps_k", "pass", "delta", "slack"];
pub const CONTINUOUS_COLUMNS: [&str; 4] = ["t", "f", "E_t", "step_size"];

fn num(v: f64) -> String {
    format!("{v}")
}

fn csv_err(e: csv::Error) -> LabError {
    LabError::Io(e.to_string())
}

/// The certified trace as CSV text. Row `k` carries the step `k−1 → k`; the
/// `k = 0` row has empty step fields. A trace without steps gives the header only.
pub fn trace_csv(trace: &Trace, report: &CertReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_COLUMNS).map_err(csv_err)?;
    if !trace.records.is_empty() && trace.n_steps() > 0 {
        if report.per_k.len() != trace.n_steps() {
            return Err(LabError::ConfigError(format!(
                "report has {} steps, trace has {}",
                report.per_k.len(),
                trace.n_steps()
            )));
        }
        let delta = num(trace.meta.schedule.delta);
        for (k, r) in trace.records.iter().enumerate() {
            let grad_norm = r.grads.first().map(|g| num(g.value.norm())).unwrap_or_default();
            let (e_k, eps, pass, slack) = if k == 0 {
                (num(report.per_k[0].e_k), String::new(), String::new(), String::new())
            } else {
                let c = &report.per_k[k - 1];
                (num(c.e_next), num(c.rhs), c.pass.to_string(), num(c.slack))
            };
            w.write_record([
                k.to_string(),
                num(r.a_k),
                num(r.alpha_k),
                num(r.tau_k),
                num(r.f_x),
                num(r.f_y),
                grad_norm,
                e_k,
                eps,
                pass,
                delta.clone(),
                slack,
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Continuous samples as CSV with columns `t, f, E_t, step_size`.
pub fn continuous_csv(trace: &ContinuousTrace) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CONTINUOUS_COLUMNS).map_err(csv_err)?;
    for s in &trace.samples {
        w.write_record([num(s.state.t), num(s.f), num(s.lyapunov), num(s.step_size)]).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Verdict recomputed from a persisted trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvCertificate {
    pub checks: usize,
    pub overall: bool,
    pub first_failure: Option<usize>,
    /// Steps whose recomputed verdict differs from the stored `pass` column.
    pub stored_mismatches: Vec<usize>,
    pub max_error: Option<f64>,
}

fn parse_f(field: &str, col: &str, row: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| LabError::ConfigError(format!("row {row}: column {col} value '{field}' is not a number")))
}

/// Re-check `(E_k − E_{k−1})/δ ≤ ε_k + slack_k/δ` from the CSV columns alone.
pub fn certify_csv_text(text: &str) -> Result<CsvCertificate> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let headers = rd.headers().map_err(csv_err)?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LabError::MissingTraceField(format!("CSV column {name}")))
    };
    let (ie, ieps, ipass, idelta, islack) = (col("E_k")?, col("eps_k")?, col("pass")?, col("delta")?, col("slack")?);
    let mut prev: Option<f64> = None;
    let mut checks = 0;
    let mut first = None;
    let mut mismatches = Vec::new();
    let mut max_error: Option<f64> = None;
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let e = parse_f(get(ie), "E_k", row)?;
        if let Some(e_prev) = prev {
            let delta = parse_f(get(idelta), "delta", row)?;
            let eps = parse_f(get(ieps), "eps_k", row)?;
            let slack = parse_f(get(islack), "slack", row)?;
            let lhs = (e - e_prev) / delta;
            let pass = lhs.is_finite() && eps.is_finite() && lhs <= eps + slack / delta;
            let step = checks;
            checks += 1;
            if !pass && first.is_none() {
                first = Some(step);
            }
            match get(ipass) {
                "true" if !pass => mismatches.push(step),
                "false" if pass => mismatches.push(step),
                "true" | "false" => {}
                other => return Err(LabError::ConfigError(format!("row {row}: pass value '{other}' is not true/false"))),
            }
            max_error = Some(max_error.map_or(eps, |m: f64| m.max(eps)));
        }
        prev = Some(e);
    }
    Ok(CsvCertificate { checks, overall: first.is_none(), first_failure: first, stored_mismatches: mismatches, max_error })
}

pub fn certify_csv(path: &Path) -> Result<CsvCertificate> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::ConfigError(format!("cannot read {}: {e}", path.display())))?;
    certify_csv_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip_formatting() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5e-8, f64::MAX, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.1), "0.1");
        assert!(num(f64::INFINITY).parse::<f64>().unwrap().is_infinite());
    }

    #[test]
    fn recertifies_handwritten_csv() {
        let head = TRACE_COLUMNS.join(",");
        let ok = format!("{head}\n0,1,1,0.5,2,2,,3,,,1,\n1,2,1,0.5,1,1,1,2.5,0,true,1,1e-9\n2,3,1,0.3,1,1,1,2.5,0,true,1,1e-9\n");
        let c = certify_csv_text(&ok).unwrap();
        assert_eq!((c.checks, c.overall, c.stored_mismatches.len()), (2, true, 0));
        let bad = ok.replace("2,3,1,0.3,1,1,1,2.5,0,true", "2,3,1,0.3,1,1,1,2.6,0,true");
        let c = certify_csv_text(&bad).unwrap();
        assert_eq!((c.overall, c.first_failure, c.stored_mismatches.clone()), (false, Some(1), vec![1]));
        assert!(certify_csv_text("k,A_k\n0,1\n").is_err());
        let header_only = certify_csv_text(&format!("{head}\n")).unwrap();
        assert_eq!((header_only.checks, header_only.overall), (0, true));
    }
}
