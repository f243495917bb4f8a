//! `run → certify → persist` for one configuration.

use super::config::{ExperimentConfig, ResolvedExperiment};
use super::output::trace_csv;
use super::plot::{emit_plot, PlotStyle, Series};
use crate::certify::{certify, CertReport};
use crate::methods::{run, Trace};
use crate::{LabError, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub final_gap: Option<f64>,
    pub rate_exponent: Option<f64>,
    /// Certificate verdict; false when the run or certifier failed.
    pub verdict: bool,
    pub status: String,
    pub error: Option<String>,
}

/// In-memory products of a run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub resolved: ResolvedExperiment,
    pub trace: Option<Trace>,
    pub report: Option<CertReport>,
    pub error: Option<String>,
}

impl Outcome {
    pub fn summary(&self) -> Summary {
        let report = self.report.as_ref();
        Summary {
            final_gap: report.and_then(|r| r.gaps.last().copied()),
            rate_exponent: report.and_then(|r| r.rate_fit.as_ref().map(|f| f.exponent)),
            verdict: self.error.is_none() && report.map(|r| r.overall).unwrap_or(false),
            status: if self.error.is_none() { "ok".into() } else { "failed".into() },
            error: self.error.clone(),
        }
    }

    /// The JSON document: the certificate report fields plus status, summary and config.
    pub fn json(&self, cfg: &ExperimentConfig) -> Value {
        let mut doc = match &self.report {
            Some(r) => serde_json::to_value(r).expect("report serializes"),
            None => json!({
                "method_id": cfg.method.id.name(),
                "problem_id": self.resolved.instance.id(),
                "per_k": [],
                "overall": false,
                "rate_fit": null,
                "slack_used": null,
            }),
        };
        let obj = doc.as_object_mut().expect("object");
        let s = self.summary();
        obj.insert("status".into(), json!(s.status));
        obj.insert("error".into(), json!(s.error));
        obj.insert("summary".into(), serde_json::to_value(&s).expect("summary serializes"));
        obj.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
        doc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunArtifacts {
    pub trace_csv: Option<PathBuf>,
    pub cert_json: Option<PathBuf>,
    pub plot_svg: Option<PathBuf>,
    pub summary: Summary,
    /// The JSON document as written (also used for `--json -`).
    #[serde(skip)]
    pub json_text: String,
}

/// Fail with ConfigError unless every output path can be created.
pub fn check_writable(cfg: &ExperimentConfig) -> Result<()> {
    let o = &cfg.outputs;
    let dash = |p: &Option<PathBuf>| p.as_deref().map(|p| p.as_os_str() == "-").unwrap_or(false);
    if dash(&o.csv) || dash(&o.svg) {
        return Err(LabError::ConfigError("only the json output may be '-'".into()));
    }
    for p in [&o.csv, &o.json, &o.svg].into_iter().flatten() {
        if p.as_os_str() == "-" {
            continue;
        }
        let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !dir.is_dir() {
            return Err(LabError::ConfigError(format!("output directory {} does not exist", dir.display())));
        }
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(p)
            .map_err(|e| LabError::ConfigError(format!("output {} is not writable: {e}", p.display())))?;
    }
    Ok(())
}

/// Resolve, run and certify without touching the filesystem. Method and
/// certifier errors are captured in the outcome; config errors propagate.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    let resolved = cfg.resolve()?;
    let trace = match run(&resolved.method, &resolved.instance, &resolved.schedule, cfg.iterations, cfg.seed) {
        Ok(t) => t,
        Err(e) if matches!(e, LabError::ConfigError(_)) => return Err(e),
        Err(e) => return Ok(Outcome { resolved, trace: None, report: None, error: Some(e.to_string()) }),
    };
    let (kind, formula) = cfg.certificate_for(&trace);
    let result = resolved.instance.reference().cloned().and_then(|r| certify(&trace, kind, formula, &r));
    Ok(match result {
        Ok(report) => Outcome { resolved, trace: Some(trace), report: Some(report), error: None },
        Err(e) => Outcome { resolved, trace: Some(trace), report: None, error: Some(e.to_string()) },
    })
}

/// Gap against k on log-log axes, keeping the positive part.
pub fn gap_plot(label: &str, gaps: &[f64]) -> Result<Vec<u8>> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        gaps.iter().enumerate().filter(|(k, g)| *k > 0 && **g > 0.0 && g.is_finite()).map(|(k, &g)| (k as f64, g)).unzip();
    emit_plot(
        &[Series::new(label, x, y)],
        &PlotStyle { title: label.into(), x_label: "k".into(), y_label: "f - f*".into(), log_x: true, log_y: true },
    )
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
}

/// Execute and write the configured CSV, JSON and SVG outputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    check_writable(cfg)?;
    let outcome = execute(cfg)?;
    persist(cfg, &outcome)
}

pub fn persist(cfg: &ExperimentConfig, outcome: &Outcome) -> Result<RunArtifacts> {
    let o = &cfg.outputs;
    let json_text = serde_json::to_string_pretty(&outcome.json(cfg)).expect("json") + "\n";
    let mut arts = RunArtifacts { trace_csv: None, cert_json: None, plot_svg: None, summary: outcome.summary(), json_text };
    if let Some(p) = &o.csv {
        let text = match (&outcome.trace, &outcome.report) {
            (Some(t), Some(r)) => trace_csv(t, r)?,
            _ => super::output::TRACE_COLUMNS.join(",") + "\n",
        };
        write(p, text.as_bytes())?;
        arts.trace_csv = Some(p.clone());
    }
    if let Some(p) = &o.json {
        if p.as_os_str() != "-" {
            write(p, arts.json_text.as_bytes())?;
            arts.cert_json = Some(p.clone());
        }
    }
    if let Some(p) = &o.svg {
        let label = format!("{} on {}", cfg.method.id.name(), outcome.resolved.instance.id());
        let gaps = outcome.report.as_ref().map(|r| r.gaps.clone()).unwrap_or_default();
        // A run without positive gaps still gets a (flat) plot so the artifact set is complete.
        let svg = match gap_plot(&label, &gaps) {
            Ok(s) => s,
            Err(_) => emit_plot(&[Series::new(&label, vec![0.0], vec![0.0])], &PlotStyle { title: label.clone(), ..Default::default() })?,
        };
        write(p, &svg)?;
        arts.plot_svg = Some(p.clone());
    }
    Ok(arts)
}
