//! Typed experiment configuration built from an [`Ini`] document.
//!
//! Sections and keys (values marked `auto` are derived from problem metadata):
//!
//! ```text
//! [problem]   name, dim, seed, <any other key> = corpus parameter (number)
//! [geometry]  kind = auto | euclidean | euclidean_box | p_power | p_power_separable | negative_entropy
//!             p (power kinds), lo, hi (euclidean_box)
//! [method]    id, gmap = auto | nesterov | identity_xk1 | tseng_coupled | universal_higher | universal_nu
//!             eps = auto | x, p, nu, n, tol (universal_higher), delta_tilde (universal_nu)
//!             mu = auto | x, noise = none | gaussian | bounded, noise_scale
//! [schedule]  kind = quadratic | polynomial | universal | geometric | two_over_k_plus_2 | sqrt
//!                    | sqrt_optimized | exponential
//!             a0, eps_sigma, coef, degree, c, p_tilde, tau, ratio, d, g
//!             delta = auto | sqrt_eps | x, convention = auto | tau_over_Ak | tau_over_Ak1
//! [run]       iterations, seed, seeds = comma list or a..b (inclusive)
//! [certify]   kind = auto | weak_x | weak_y | strong_x | strong_y | value_only, formula = auto | <name>
//! [output]    csv, json, svg (paths; `-` for json means standard output)
//! ```

use super::ini::Ini;
use crate::certify::{default_certificate, ErrorFormula, LyapunovKind};
use crate::geometry::DistanceGenerator;
use crate::methods::{
    default_delta, default_geometry, default_x0, DiscreteSchedule, GradientMapSpec, MethodConfig, MethodId, NoiseSpec, ScheduleKind,
    TauConvention,
};
use crate::problems::{corpus, CorpusParams, ProblemInstance};
use crate::{LabError, Result};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub name: String,
    pub dim: usize,
    pub seed: u64,
    pub params: CorpusParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometrySpec {
    Auto,
    Euclidean,
    EuclideanBox { lo: f64, hi: f64 },
    PPower { p: f64 },
    PPowerSeparable { p: f64 },
    NegativeEntropy,
}

/// Gradient map request; `None` fields are derived from the problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GmapConfig {
    Auto,
    Nesterov { eps: Option<f64> },
    IdentityXk1,
    TsengCoupled,
    UniversalHigher { eps: Option<f64>, p: u32, nu: f64, n: f64, tol: f64 },
    UniversalNu { eps: Option<f64>, nu: Option<f64>, delta_tilde: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSpec {
    pub id: MethodId,
    pub gmap: GmapConfig,
    pub mu: Option<f64>,
    pub noise: Option<NoiseSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    Quadratic { a0: f64, eps_sigma: Option<f64> },
    Polynomial { a0: f64, coef: f64, degree: f64 },
    Universal { c: Option<f64>, p_tilde: Option<f64> },
    Geometric { a0: f64, tau: Option<f64> },
    TwoOverKPlus2 { a0: f64 },
    Sqrt { a0: f64, c: f64 },
    SqrtOptimized { d: Option<f64>, g: Option<f64> },
    Exponential { a0: f64, ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaSpec {
    Auto,
    SqrtEps,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleConfig {
    pub spec: ScheduleSpec,
    pub delta: DeltaSpec,
    pub convention: Option<TauConvention>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifySpec {
    pub kind: Option<LyapunovKind>,
    pub formula: Option<ErrorFormula>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl OutputSpec {
    /// True when JSON goes to standard output.
    pub fn json_stdout(&self) -> bool {
        self.json.as_deref().map(|p| p.as_os_str() == "-").unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub geometry: GeometrySpec,
    pub method: MethodSpec,
    pub schedule: ScheduleConfig,
    pub iterations: usize,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub certify: CertifySpec,
    pub outputs: OutputSpec,
}

/// Everything `run` and `certify` need, derived from a config.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub instance: ProblemInstance,
    pub method: MethodConfig,
    pub schedule: DiscreteSchedule,
    pub geometry: DistanceGenerator,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("geometry", &["kind", "p", "lo", "hi"]),
    ("method", &["id", "gmap", "eps", "p", "nu", "n", "tol", "delta_tilde", "mu", "noise", "noise_scale"]),
    (
        "schedule",
        &["kind", "a0", "eps_sigma", "coef", "degree", "c", "p_tilde", "tau", "ratio", "d", "g", "delta", "convention"],
    ),
    ("run", &["iterations", "seed", "seeds"]),
    ("certify", &["kind", "formula"]),
    ("output", &["csv", "json", "svg"]),
];

struct Reader<'a> {
    ini: &'a Ini,
}

impl<'a> Reader<'a> {
    fn raw(&self, sec: &str, key: &str) -> Option<&'a str> {
        self.ini.get(sec, key).filter(|v| !v.is_empty())
    }

    fn err(&self, sec: &str, key: &str, msg: impl std::fmt::Display) -> LabError {
        LabError::ConfigError(format!("{}: {msg}", self.ini.location(sec, key)))
    }

    fn required(&self, sec: &str, key: &str) -> Result<&'a str> {
        self.raw(sec, key).ok_or_else(|| LabError::ConfigError(format!("{sec}.{key} is required")))
    }

    fn num(&self, sec: &str, key: &str) -> Result<Option<f64>> {
        match self.raw(sec, key) {
            None => Ok(None),
            Some(v) => v.parse::<f64>().map(Some).map_err(|_| self.err(sec, key, format!("'{v}' is not a number"))),
        }
    }

    fn num_or(&self, sec: &str, key: &str, default: f64) -> Result<f64> {
        Ok(self.num(sec, key)?.unwrap_or(default))
    }

    fn auto_num(&self, sec: &str, key: &str) -> Result<Option<f64>> {
        match self.raw(sec, key) {
            None | Some("auto") => Ok(None),
            Some(_) => self.num(sec, key),
        }
    }

    fn required_num(&self, sec: &str, key: &str) -> Result<f64> {
        self.num(sec, key)?.ok_or_else(|| LabError::ConfigError(format!("{sec}.{key} is required")))
    }

    fn uint(&self, sec: &str, key: &str) -> Result<Option<u64>> {
        match self.raw(sec, key) {
            None => Ok(None),
            Some(v) => v.parse::<u64>().map(Some).map_err(|_| self.err(sec, key, format!("'{v}' is not a nonnegative integer"))),
        }
    }
}

/// Parse `1,2,5` or `0..199` (inclusive).
pub fn parse_seed_list(s: &str) -> Result<Vec<u64>> {
    let bad = || LabError::ConfigError(format!("seed list '{s}' must be 'a,b,c' or 'a..b'"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse::<u64>().map_err(|_| bad())).collect()
}

impl ExperimentConfig {
    pub fn from_ini(ini: &Ini) -> Result<Self> {
        for (name, sec) in &ini.sections {
            if name == "problem" {
                continue;
            }
            let allowed = SECTIONS
                .iter()
                .find(|(s, _)| s == name)
                .map(|(_, k)| *k)
                .ok_or_else(|| LabError::ConfigError(format!("unknown section [{name}]")))?;
            for key in sec.keys() {
                if !allowed.contains(&key.as_str()) {
                    return Err(LabError::ConfigError(format!("{}: unknown key", ini.location(name, key))));
                }
            }
        }
        let r = Reader { ini };

        let mut params = CorpusParams::new();
        if let Some(sec) = ini.sections.get("problem") {
            for key in sec.keys() {
                if !matches!(key.as_str(), "name" | "dim" | "seed") {
                    params.insert(key.clone(), r.required_num("problem", key)?);
                }
            }
        }
        let dim = r.uint("problem", "dim")?.ok_or_else(|| LabError::ConfigError("problem.dim is required".into()))?;
        if dim == 0 {
            return Err(r.err("problem", "dim", "must be positive"));
        }
        let problem = ProblemSpec {
            name: r.required("problem", "name")?.to_string(),
            dim: dim as usize,
            seed: r.uint("problem", "seed")?.unwrap_or(0),
            params,
        };

        let geometry = match r.raw("geometry", "kind").unwrap_or("auto") {
            "auto" => GeometrySpec::Auto,
            "euclidean" => GeometrySpec::Euclidean,
            "euclidean_box" => GeometrySpec::EuclideanBox {
                lo: r.required_num("geometry", "lo")?,
                hi: r.required_num("geometry", "hi")?,
            },
            "p_power" => GeometrySpec::PPower { p: r.required_num("geometry", "p")? },
            "p_power_separable" => GeometrySpec::PPowerSeparable { p: r.required_num("geometry", "p")? },
            "negative_entropy" => GeometrySpec::NegativeEntropy,
            other => return Err(r.err("geometry", "kind", format!("unknown geometry '{other}'"))),
        };

        let id_raw = r.required("method", "id")?;
        let id = MethodId::parse(id_raw).map_err(|_| r.err("method", "id", format!("unknown method '{id_raw}'")))?;
        let gmap = match r.raw("method", "gmap").unwrap_or("auto") {
            "auto" => GmapConfig::Auto,
            "nesterov" => GmapConfig::Nesterov { eps: r.auto_num("method", "eps")? },
            "identity_xk1" => GmapConfig::IdentityXk1,
            "tseng_coupled" => GmapConfig::TsengCoupled,
            "universal_higher" => {
                let p = r.uint("method", "p")?.unwrap_or(3);
                GmapConfig::UniversalHigher {
                    eps: r.auto_num("method", "eps")?,
                    p: u32::try_from(p).map_err(|_| r.err("method", "p", "too large"))?,
                    nu: r.num_or("method", "nu", 1.0)?,
                    n: r.num_or("method", "n", 2.0)?,
                    tol: r.num_or("method", "tol", 1e-10)?,
                }
            }
            "universal_nu" => GmapConfig::UniversalNu {
                eps: r.auto_num("method", "eps")?,
                nu: r.auto_num("method", "nu")?,
                delta_tilde: r.required_num("method", "delta_tilde")?,
            },
            other => return Err(r.err("method", "gmap", format!("unknown gradient map '{other}'"))),
        };
        let noise = match r.raw("method", "noise").unwrap_or("none") {
            "none" => None,
            "gaussian" => Some(NoiseSpec::Gaussian { scale: r.required_num("method", "noise_scale")? }),
            "bounded" => Some(NoiseSpec::Bounded { scale: r.required_num("method", "noise_scale")? }),
            other => return Err(r.err("method", "noise", format!("unknown noise '{other}'"))),
        };
        if let Some(n) = &noise {
            n.validate()?;
        }
        let method = MethodSpec { id, gmap, mu: r.auto_num("method", "mu")?, noise };

        let a0 = r.num_or("schedule", "a0", 1.0)?;
        let spec = match r.required("schedule", "kind")? {
            "quadratic" => ScheduleSpec::Quadratic { a0, eps_sigma: r.auto_num("schedule", "eps_sigma")? },
            "polynomial" => ScheduleSpec::Polynomial {
                a0,
                coef: r.required_num("schedule", "coef")?,
                degree: r.required_num("schedule", "degree")?,
            },
            "universal" => ScheduleSpec::Universal { c: r.auto_num("schedule", "c")?, p_tilde: r.auto_num("schedule", "p_tilde")? },
            "geometric" => ScheduleSpec::Geometric { a0, tau: r.auto_num("schedule", "tau")? },
            "two_over_k_plus_2" => ScheduleSpec::TwoOverKPlus2 { a0 },
            "sqrt" => ScheduleSpec::Sqrt { a0, c: r.num_or("schedule", "c", 1.0)? },
            "sqrt_optimized" => ScheduleSpec::SqrtOptimized { d: r.auto_num("schedule", "d")?, g: r.auto_num("schedule", "g")? },
            "exponential" => ScheduleSpec::Exponential { a0, ratio: r.required_num("schedule", "ratio")? },
            other => return Err(r.err("schedule", "kind", format!("unknown schedule '{other}'"))),
        };
        let delta = match r.raw("schedule", "delta").unwrap_or("auto") {
            "auto" => DeltaSpec::Auto,
            "sqrt_eps" => DeltaSpec::SqrtEps,
            _ => DeltaSpec::Value(r.required_num("schedule", "delta")?),
        };
        let convention = match r.raw("schedule", "convention").unwrap_or("auto") {
            "auto" => None,
            c => Some(TauConvention::parse(c).map_err(|e| r.err("schedule", "convention", e))?),
        };
        let schedule = ScheduleConfig { spec, delta, convention };

        let iterations = r.uint("run", "iterations")?.ok_or_else(|| LabError::ConfigError("run.iterations is required".into()))?;
        let seed = r.uint("run", "seed")?.unwrap_or(0);
        let seeds = match r.raw("run", "seeds") {
            Some(s) => parse_seed_list(s).map_err(|e| r.err("run", "seeds", e))?,
            None => Vec::new(),
        };

        let kind = match r.raw("certify", "kind").unwrap_or("auto") {
            "auto" => None,
            k => Some(LyapunovKind::parse(k).map_err(|e| r.err("certify", "kind", e))?),
        };
        let formula = match r.raw("certify", "formula").unwrap_or("auto") {
            "auto" => None,
            f => Some(ErrorFormula::parse(f).map_err(|e| r.err("certify", "formula", e))?),
        };
        let outputs = OutputSpec {
            csv: r.raw("output", "csv").map(PathBuf::from),
            json: r.raw("output", "json").map(PathBuf::from),
            svg: r.raw("output", "svg").map(PathBuf::from),
        };
        Ok(ExperimentConfig {
            problem,
            geometry,
            method,
            schedule,
            iterations: iterations as usize,
            seed,
            seeds,
            certify: CertifySpec { kind, formula },
            outputs,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_ini(&Ini::parse(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Build the problem, method, schedule and certificate choice.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        let p = &self.problem;
        let instance = corpus(&p.name, p.dim, p.seed, &p.params)?;
        let meta = instance.meta();
        let n = instance.dim();
        let geometry = match self.geometry {
            GeometrySpec::Auto => default_geometry(&instance)?,
            GeometrySpec::Euclidean => DistanceGenerator::euclidean(n),
            GeometrySpec::EuclideanBox { lo, hi } => DistanceGenerator::euclidean_box(lo, hi, n)?,
            GeometrySpec::PPower { p } => DistanceGenerator::p_power(p, n)?,
            GeometrySpec::PPowerSeparable { p } => DistanceGenerator::p_power_separable(p, n)?,
            GeometrySpec::NegativeEntropy => DistanceGenerator::negative_entropy(n),
        };
        let need = |what: &str| LabError::ConfigError(format!("{what} is auto but {} declares no value for it", instance.id()));
        let inv_l = meta.lipschitz_grad_l.map(|l| 1.0 / l);
        let gmap = match self.method.gmap {
            GmapConfig::Auto => None,
            GmapConfig::Nesterov { eps } => Some(GradientMapSpec::Nesterov { eps: eps.or(inv_l).ok_or_else(|| need("method.eps"))? }),
            GmapConfig::IdentityXk1 => Some(GradientMapSpec::IdentityXk1),
            GmapConfig::TsengCoupled => Some(GradientMapSpec::TsengCoupled),
            GmapConfig::UniversalHigher { eps, p, nu, n, tol } => {
                let eps = eps.or(meta.holder.map(|h| h.epsilon)).ok_or_else(|| need("method.eps"))?;
                Some(GradientMapSpec::UniversalHigher { eps, p, nu, n, tol })
            }
            GmapConfig::UniversalNu { eps, nu, delta_tilde } => {
                let eps = eps.or(meta.holder.map(|h| h.epsilon)).ok_or_else(|| need("method.eps"))?;
                let nu = nu.or(meta.holder.map(|h| h.nu)).ok_or_else(|| need("method.nu"))?;
                Some(GradientMapSpec::universal_nu_auto(eps, nu, delta_tilde)?)
            }
        };
        let mut method = MethodConfig::new(self.method.id).with_geometry(geometry);
        if let Some(g) = gmap {
            method = method.with_gmap(g);
        }
        if let Some(mu) = self.method.mu {
            method = method.with_mu(mu);
        }
        if let Some(noise) = self.method.noise {
            method = method.with_noise(noise);
        }

        let delta = match self.schedule.delta {
            DeltaSpec::Auto => default_delta(self.method.id, &meta),
            DeltaSpec::SqrtEps => inv_l.ok_or_else(|| need("schedule.delta = sqrt_eps"))?.sqrt(),
            DeltaSpec::Value(d) => d,
        };
        let convention = self.schedule.convention.unwrap_or_else(|| self.method.id.convention());
        let kind = match &self.schedule.spec {
            ScheduleSpec::Quadratic { a0, eps_sigma } => ScheduleKind::Quadratic {
                a0: *a0,
                eps_sigma: match eps_sigma {
                    Some(v) => *v,
                    None => inv_l.ok_or_else(|| need("schedule.eps_sigma"))? * geometry.sigma,
                },
            },
            ScheduleSpec::Polynomial { a0, coef, degree } => ScheduleKind::Polynomial { a0: *a0, coef: *coef, degree: *degree },
            ScheduleSpec::Universal { c, p_tilde } => {
                let pt = p_tilde.or(gmap.and_then(|g| g.p_tilde())).ok_or_else(|| need("schedule.p_tilde"))?;
                let c = c.or(gmap.and_then(|g| g.universal_schedule_constant(geometry.sigma))).ok_or_else(|| need("schedule.c"))?;
                DiscreteSchedule::universal(c, pt, delta)?.kind
            }
            ScheduleSpec::Geometric { a0, tau } => {
                let tau = match tau {
                    Some(t) => *t,
                    None => {
                        let l = meta.lipschitz_grad_l.ok_or_else(|| need("schedule.tau"))?;
                        let mu = self.method.mu.or(meta.strong_convexity_mu).ok_or_else(|| need("schedule.tau"))?;
                        (mu / l).sqrt()
                    }
                };
                ScheduleKind::Geometric { a0: *a0, tau }
            }
            ScheduleSpec::TwoOverKPlus2 { a0 } => ScheduleKind::TwoOverKPlus2 { a0: *a0 },
            ScheduleSpec::Sqrt { a0, c } => ScheduleKind::Sqrt { a0: *a0, c: *c },
            ScheduleSpec::SqrtOptimized { d, g } => {
                let d = match d {
                    Some(d) => *d,
                    None => {
                        let x0 = default_x0(&instance, &geometry);
                        geometry.divergence(&instance.reference()?.x_star, &x0)?
                    }
                };
                let g = g.or(meta.subgradient_bound_g).ok_or_else(|| need("schedule.g"))?;
                DiscreteSchedule::sqrt_optimized(d, g, geometry.sigma, self.iterations.max(1), delta)?.kind
            }
            ScheduleSpec::Exponential { a0, ratio } => ScheduleKind::Exponential { a0: *a0, ratio: *ratio },
        };
        let schedule = DiscreteSchedule::new(kind, delta, convention)?;
        Ok(ResolvedExperiment { instance, method, schedule, geometry })
    }

    /// Resolve `auto` certificate fields against the produced trace.
    pub fn certificate_for(&self, trace: &crate::methods::Trace) -> (LyapunovKind, ErrorFormula) {
        let (k, f) = default_certificate(trace);
        (self.certify.kind.unwrap_or(k), self.certify.formula.unwrap_or(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const AGD: &str = "[problem]\nname = quadratic_illcond\ndim = 10\nseed = 1\nkappa = 100\n\n[method]\nid = agd_family_I\ngmap = nesterov\n\n[schedule]\nkind = quadratic\n\n[run]\niterations = 50\n";

    #[test]
    fn parses_a_minimal_config() {
        let c = ExperimentConfig::parse(AGD).unwrap();
        assert_eq!(c.problem.dim, 10);
        assert_eq!(c.problem.params.get("kappa"), Some(&100.0));
        assert_eq!(c.method.id, MethodId::AgdFamilyI);
        assert_eq!(c.method.gmap, GmapConfig::Nesterov { eps: None });
        assert_eq!(c.iterations, 50);
        let r = c.resolve().unwrap();
        assert_eq!(r.schedule.convention, TauConvention::TauOverAk1);
        let l = r.instance.meta().lipschitz_grad_l.unwrap();
        assert!((r.schedule.delta - (1.0 / l).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn field_level_errors() {
        let bad = AGD.replace("dim = 10", "dim = ten");
        let e = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(e.contains("problem.dim") && e.contains("line 3"), "{e}");
        let e = ExperimentConfig::parse(&format!("{AGD}[run2]\nx = 1\n")).unwrap_err().to_string();
        assert!(e.contains("[run2]"), "{e}");
        let e = ExperimentConfig::parse(&AGD.replace("gmap = nesterov", "gmap = nesterov\nwat = 1")).unwrap_err().to_string();
        assert!(e.contains("method.wat"), "{e}");
        let e = ExperimentConfig::parse(&AGD.replace("[run]\niterations = 50\n", "")).unwrap_err().to_string();
        assert!(e.contains("run.iterations"), "{e}");
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seed_list("3..5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_seed_list("1, 7").unwrap(), vec![1, 7]);
        assert!(parse_seed_list("5..3").is_err());
        assert!(parse_seed_list("a").is_err());
    }

    #[test]
    fn auto_tau_is_inverse_sqrt_kappa() {
        let text = "[problem]\nname = quadratic_illcond\ndim = 10\nkappa = 100\n[method]\nid = agd_strong\n[schedule]\nkind = geometric\n[run]\niterations = 5\n";
        let r = ExperimentConfig::parse(text).unwrap().resolve().unwrap();
        assert!((r.schedule.tau(0) - 0.1).abs() < 1e-12);
    }
}
