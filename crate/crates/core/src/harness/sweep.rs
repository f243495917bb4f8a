//! Parameter and seed sweeps over a base config.
//!
//! Each grid point applies one `section.key=value` override to the base
//! document. With a seed list every point runs once per `run.seed`, and the
//! per-point gap and Lyapunov trajectories are aggregated into a mean with a
//! normal-approximation 95% band. Cells run in parallel and write only into
//! their own directory; the aggregate files are written after all cells finish.

use super::config::{parse_seed_list, ExperimentConfig};
use super::ini::Ini;
use super::plot::{emit_plot, PlotStyle, Series};
use super::run::{check_writable, execute, persist, Summary};
use crate::{LabError, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// One swept parameter and its grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    /// `section.key` path.
    pub parameter: String,
    pub values: Vec<String>,
}

impl Axis {
    /// Parse `section.key=v1,v2,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || LabError::ConfigError(format!("axis '{spec}' must be section.key=v1,v2,..."));
        let (path, values) = spec.split_once('=').ok_or_else(bad)?;
        let parameter = path.trim().to_string();
        if !parameter.contains('.') {
            return Err(bad());
        }
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(LabError::ConfigError(format!("axis '{parameter}' has no values")));
        }
        Ok(Axis { parameter, values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses all logical cores.
    pub jobs: Option<usize>,
    /// Seed list overriding the config's `run.seeds`.
    pub seeds: Option<Vec<u64>>,
}

/// Result of one (value, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub index: usize,
    pub value: String,
    pub seed: Option<u64>,
    pub dir: PathBuf,
    pub summary: Summary,
    #[serde(skip)]
    pub gaps: Vec<f64>,
    #[serde(skip)]
    pub lyapunov: Vec<f64>,
}

/// Mean and 95% band of the per-seed trajectories at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band {
    pub value: String,
    pub seeds: usize,
    pub mean_gap: Vec<f64>,
    pub gap_lo: Vec<f64>,
    pub gap_hi: Vec<f64>,
    pub mean_e: Vec<f64>,
    pub e_lo: Vec<f64>,
    pub e_hi: Vec<f64>,
    pub csv: PathBuf,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub parameter: String,
    pub cells: Vec<CellResult>,
    pub bands: Vec<Band>,
    pub aggregate_csv: PathBuf,
}

impl SweepReport {
    /// True when every cell ran and certified.
    pub fn all_pass(&self) -> bool {
        self.cells.iter().all(|c| c.summary.verdict)
    }
}

/// Sample mean and half-width of the normal-approximation 95% interval.
pub fn mean_ci(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

fn failed(msg: String) -> Summary {
    Summary { final_gap: None, rate_exponent: None, verdict: false, status: "failed".into(), error: Some(msg) }
}

fn run_cell(base: &Ini, parameter: &str, index: usize, value: &str, seed: Option<u64>, dir: PathBuf) -> CellResult {
    let mut cell = CellResult { index, value: value.to_string(), seed, dir: dir.clone(), summary: failed(String::new()), gaps: vec![], lyapunov: vec![] };
    let mut attempt = || -> Result<()> {
        let mut ini = base.clone();
        if !parameter.is_empty() {
            ini.apply_override(&format!("{parameter}={value}"))?;
        }
        let mut cfg = ExperimentConfig::from_ini(&ini)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        std::fs::create_dir_all(&dir).map_err(|e| LabError::Io(format!("{}: {e}", dir.display())))?;
        cfg.outputs.csv = Some(dir.join("trace.csv"));
        cfg.outputs.json = Some(dir.join("cert.json"));
        cfg.outputs.svg = Some(dir.join("gap.svg"));
        check_writable(&cfg)?;
        let outcome = execute(&cfg)?;
        let arts = persist(&cfg, &outcome)?;
        cell.summary = arts.summary;
        if let Some(r) = &outcome.report {
            cell.gaps = r.gaps.clone();
            cell.lyapunov = r.per_k.first().map(|c| c.e_k).into_iter().chain(r.per_k.iter().map(|c| c.e_next)).collect();
        }
        Ok(())
    };
    if let Err(e) = attempt() {
        cell.summary = failed(e.to_string());
        // The cell still leaves a JSON record of its failure.
        if std::fs::create_dir_all(&dir).is_ok() {
            let doc = serde_json::json!({ "status": "failed", "error": e.to_string(), "parameter": parameter, "value": value, "seed": seed });
            let _ = std::fs::write(dir.join("cert.json"), serde_json::to_string_pretty(&doc).expect("json") + "\n");
        }
    }
    cell
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
}

fn band_for(value: &str, cells: &[&CellResult], csv: PathBuf, svg: PathBuf) -> Result<Option<Band>> {
    let ok: Vec<&&CellResult> = cells.iter().filter(|c| c.summary.status == "ok" && !c.gaps.is_empty()).collect();
    let Some(first) = ok.first() else { return Ok(None) };
    let len = ok.iter().map(|c| c.gaps.len().min(c.lyapunov.len())).min().unwrap_or(0).min(first.gaps.len());
    let mut band = Band {
        value: value.to_string(),
        seeds: ok.len(),
        mean_gap: vec![],
        gap_lo: vec![],
        gap_hi: vec![],
        mean_e: vec![],
        e_lo: vec![],
        e_hi: vec![],
        csv: csv.clone(),
        svg: None,
    };
    let mut text = String::from("k,mean_gap,gap_ci_lo,gap_ci_hi,mean_E,E_ci_lo,E_ci_hi\n");
    for k in 0..len {
        let (mg, hg) = mean_ci(&ok.iter().map(|c| c.gaps[k]).collect::<Vec<_>>());
        let (me, he) = mean_ci(&ok.iter().map(|c| c.lyapunov[k]).collect::<Vec<_>>());
        band.mean_gap.push(mg);
        band.gap_lo.push(mg - hg);
        band.gap_hi.push(mg + hg);
        band.mean_e.push(me);
        band.e_lo.push(me - he);
        band.e_hi.push(me + he);
        text.push_str(&format!("{k},{mg},{},{},{me},{},{}\n", mg - hg, mg + hg, me - he, me + he));
    }
    write_text(&csv, &text)?;
    let positive = |ys: &[f64]| -> (Vec<f64>, Vec<f64>) {
        ys.iter().enumerate().filter(|(k, y)| *k > 0 && **y > 0.0 && y.is_finite()).map(|(k, &y)| (k as f64, y)).unzip()
    };
    let series: Vec<Series> = [("mean gap", &band.mean_gap), ("95% lower", &band.gap_lo), ("95% upper", &band.gap_hi)]
        .into_iter()
        .filter_map(|(label, ys)| {
            let (x, y) = positive(ys);
            (!x.is_empty()).then(|| Series::new(label, x, y))
        })
        .collect();
    if !series.is_empty() {
        let style = PlotStyle {
            title: format!("mean gap over {} seeds, value {value}", band.seeds),
            x_label: "k".into(),
            y_label: "f - f*".into(),
            log_x: true,
            log_y: true,
        };
        let bytes = emit_plot(&series, &style)?;
        std::fs::write(&svg, bytes).map_err(|e| LabError::Io(format!("{}: {e}", svg.display())))?;
        band.svg = Some(svg);
    }
    Ok(Some(band))
}

/// Run every grid point (and seed) of `axis` over `base`. `None` sweeps the
/// base config alone, which is how a pure seed sweep is expressed.
pub fn sweep(base: &Ini, axis: Option<&Axis>, opts: &SweepOptions) -> Result<SweepReport> {
    let base_cfg = ExperimentConfig::from_ini(base)?;
    std::fs::create_dir_all(&opts.out_dir)
        .map_err(|e| LabError::ConfigError(format!("cannot create sweep directory {}: {e}", opts.out_dir.display())))?;
    let seeds: Vec<Option<u64>> = match &opts.seeds {
        Some(s) if !s.is_empty() => s.iter().copied().map(Some).collect(),
        _ if !base_cfg.seeds.is_empty() => base_cfg.seeds.iter().copied().map(Some).collect(),
        _ => vec![None],
    };
    let (parameter, values) = match axis {
        Some(a) => (a.parameter.clone(), a.values.clone()),
        None => (String::new(), vec![String::new()]),
    };
    let stochastic = seeds[0].is_some();
    let mut jobs_list = Vec::new();
    for (i, v) in values.iter().enumerate() {
        for s in &seeds {
            let mut dir = opts.out_dir.join(format!("cell_{i:03}"));
            if let Some(s) = s {
                dir = dir.join(format!("seed_{s}"));
            }
            jobs_list.push((i, v.clone(), *s, dir));
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.jobs {
        if n == 0 {
            return Err(LabError::ConfigError("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| LabError::ConfigError(format!("thread pool: {e}")))?;
    let cells: Vec<CellResult> =
        pool.install(|| jobs_list.into_par_iter().map(|(i, v, s, dir)| run_cell(base, &parameter, i, &v, s, dir)).collect());

    let mut agg = String::from("parameter,value,seed,final_gap,exponent,verdict,status,error\n");
    for c in &cells {
        let err = c.summary.error.clone().unwrap_or_default().replace(['"', '\n'], " ");
        agg.push_str(&format!(
            "{},{},{},{},{},{},{},\"{}\"\n",
            parameter,
            c.value,
            c.seed.map(|s| s.to_string()).unwrap_or_default(),
            opt(c.summary.final_gap),
            opt(c.summary.rate_exponent),
            c.summary.verdict,
            c.summary.status,
            err
        ));
    }
    let aggregate_csv = opts.out_dir.join("summary.csv");
    write_text(&aggregate_csv, &agg)?;

    let mut bands = Vec::new();
    if stochastic {
        for (i, v) in values.iter().enumerate() {
            let group: Vec<&CellResult> = cells.iter().filter(|c| c.index == i).collect();
            let csv = opts.out_dir.join(format!("band_{i:03}.csv"));
            let svg = opts.out_dir.join(format!("band_{i:03}.svg"));
            if let Some(b) = band_for(v, &group, csv, svg)? {
                bands.push(b);
            }
        }
    }
    Ok(SweepReport { parameter, cells, bands, aggregate_csv })
}

/// Seed list from an explicit string, for the CLI.
pub fn seeds_arg(s: &str) -> Result<Vec<u64>> {
    parse_seed_list(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const STRONG: &str = "[problem]\nname = quadratic_illcond\ndim = 10\nseed = 1\nkappa = 100\n[method]\nid = agd_strong\n[schedule]\nkind = geometric\n[run]\niterations = 60\n";

    #[test]
    fn axis_parsing() {
        let a = Axis::parse("schedule.tau=0.1, 0.2").unwrap();
        assert_eq!(a.parameter, "schedule.tau");
        assert_eq!(a.values, vec!["0.1", "0.2"]);
        assert!(Axis::parse("tau=0.1").is_err());
        assert!(Axis::parse("schedule.tau=").is_err());
    }

    #[test]
    fn mean_ci_matches_hand_computation() {
        let (m, h) = mean_ci(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((h - 1.96 * (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bad_cells_are_recorded_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let base = Ini::parse(STRONG).unwrap();
        let axis = Axis::parse("schedule.tau=0.1,abc").unwrap();
        let rep = sweep(&base, Some(&axis), &SweepOptions { out_dir: dir.path().into(), jobs: Some(2), seeds: None }).unwrap();
        assert_eq!(rep.cells.len(), 2);
        assert!(rep.cells[0].summary.verdict);
        assert_eq!(rep.cells[1].summary.status, "failed");
        assert!(dir.path().join("cell_001/cert.json").exists());
        let agg = std::fs::read_to_string(&rep.aggregate_csv).unwrap();
        assert_eq!(agg.lines().count(), 3);
    }

    #[test]
    fn seed_sweep_emits_band() {
        let dir = tempfile::tempdir().unwrap();
        let text = "[problem]\nname = l1_on_box\ndim = 5\n[method]\nid = quasi_monotone\nnoise = gaussian\nnoise_scale = 0.1\n[schedule]\nkind = sqrt\n[run]\niterations = 20\n";
        let base = Ini::parse(text).unwrap();
        let rep = sweep(&base, None, &SweepOptions { out_dir: dir.path().into(), jobs: Some(2), seeds: Some(vec![0, 1, 2]) }).unwrap();
        assert_eq!(rep.cells.len(), 3);
        assert_eq!(rep.bands.len(), 1);
        let b = &rep.bands[0];
        assert_eq!(b.mean_gap.len(), 21);
        assert!(b.gap_lo.iter().zip(&b.gap_hi).all(|(l, h)| l <= h));
        assert!(b.csv.exists());
    }
}
