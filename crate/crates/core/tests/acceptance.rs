//! Acceptance suite: one PASS/FAIL line per criterion at the stated tolerances.
//!
//! Run with `cargo test --release --test acceptance`.

use momentum_lab::certify::{
    certify, certify_default, default_certificate, evaluate_lyapunov, fit_rate, fit_rate_window, from_estimate_sequence,
    to_estimate_sequence, verify_estimate_sequence, CertReport, LyapunovKind,
};
use momentum_lab::dynamics::{
    continuous_lyapunov, simulate_first_el, simulate_second_el, time_dilation_check, ContinuousLyapunovKind, ContinuousSchedule,
    IntegratorOpts, TimeMap,
};
use momentum_lab::geometry::DistanceGenerator;
use momentum_lab::harness::{execute, mean_ci, selfcheck, sweep, Axis, ExperimentConfig, Ini, SweepOptions};
use momentum_lab::linalg::{gaussian_vector, rng};
use momentum_lab::methods::{
    run, stochastic_variant, DiscreteSchedule, GradientMapSpec, MethodConfig, MethodId, NoiseSpec, ScheduleKind,
    StochasticBase, TauConvention, Trace,
};
use momentum_lab::problems::{corpus, CorpusParams, ProblemInstance, ReferenceSolution};
use momentum_lab::{Result, Vector};
use rayon::prelude::*;
use std::path::PathBuf;
use std::time::Instant;

type Verdict = (bool, String);

fn params(kv: &[(&str, f64)]) -> CorpusParams {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn config_text(name: &str) -> Result<String> {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    std::fs::read_to_string(&p).map_err(|e| momentum_lab::LabError::Io(format!("{}: {e}", p.display())))
}

/// Parse a shipped config with its outputs removed.
fn shipped_config(name: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::parse(&config_text(name)?)?;
    cfg.outputs = Default::default();
    Ok(cfg)
}

fn executed(cfg: &ExperimentConfig) -> Result<(Trace, CertReport, ReferenceSolution)> {
    let out = execute(cfg)?;
    if let Some(e) = out.error {
        return Err(momentum_lab::LabError::ConfigError(e));
    }
    let r = out.resolved.instance.reference()?.clone();
    Ok((out.trace.expect("trace"), out.report.expect("report"), r))
}

fn exponent(rep: &CertReport) -> f64 {
    rep.rate_fit.as_ref().map(|f| f.exponent).unwrap_or(f64::NAN)
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn all_errors_nonpositive(rep: &CertReport, delta: f64) -> (bool, f64) {
    let worst = rep.per_k.iter().map(|e| e.rhs - e.slack / delta).fold(f64::NEG_INFINITY, f64::max);
    (worst <= 0.0, rep.max_error())
}

/// `E_k/A_k ≤ (1−τ)^k E₀/A₀ · (1 + 1e−6)` for every k.
fn geometric_envelope(trace: &Trace, rep: &CertReport, tau: f64) -> (bool, f64) {
    let e = std::iter::once(rep.per_k[0].e_k).chain(rep.per_k.iter().map(|c| c.e_next));
    let base = rep.per_k[0].e_k / trace.records[0].a_k;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (k, (ek, r)) in e.zip(&trace.records).enumerate() {
        let bound = (1.0 - tau).powi(k as i32) * base * (1.0 + 1e-6);
        let v = ek / r.a_k;
        if !(v <= bound) {
            ok = false;
        }
        if bound > 0.0 {
            worst = worst.max(v / bound);
        }
    }
    (ok, worst)
}

fn c1() -> Result<Verdict> {
    let t0 = Instant::now();
    let inst = corpus("quadratic_illcond", 50, 1, &params(&[("kappa", 100.0)]))?;
    let s = DiscreteSchedule::new(ScheduleKind::Exponential { a0: 1.0, ratio: 2.0 }, 1.0, MethodId::Implicit.convention())?;
    let tr = run(&MethodConfig::new(MethodId::Implicit), &inst, &s, 60, 0)?;
    let e = evaluate_lyapunov(&tr, LyapunovKind::WeakX, inst.reference()?)?;
    let slack = 1e-9 * (1.0 + e[0].abs());
    let worst = e.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let secs = t0.elapsed().as_secs_f64();
    Ok((
        worst <= slack && e.iter().all(|v| v.is_finite()) && secs < 1.0,
        format!("max increase {worst:.3e} vs slack {slack:.3e} over 60 steps, A_60 = {:.3e}, {secs:.2}s", tr.records[60].a_k),
    ))
}

fn c2() -> Result<Verdict> {
    let t0 = Instant::now();
    let cfg = shipped_config("agd.cfg")?;
    let (tr, rep, _) = executed(&cfg)?;
    let secs = t0.elapsed().as_secs_f64();
    let (a, max_eps) = all_errors_nonpositive(&rep, tr.meta.schedule.delta);
    let e0 = rep.per_k[0].e_k;
    let b = rep.gaps.iter().zip(&tr.records).all(|(g, r)| *g <= e0 / r.a_k * (1.0 + 1e-12));
    let x = exponent(&rep);
    let c = within(x, -2.0, 0.15);
    Ok((
        a && b && c && secs < 5.0 && rep.per_k.len() == 2000,
        format!("(a) errors <= slack: {a} (max eps {max_eps:.3e}); (b) gap <= E0/A_k: {b}; (c) exponent {x:.3} in -2.0 +/- 0.15: {c}; {secs:.2}s"),
    ))
}

fn c3() -> Result<Verdict> {
    let t0 = Instant::now();
    let cfg = shipped_config("agd_strong.cfg")?;
    let (tr, rep, _) = executed(&cfg)?;
    let tau = tr.records[0].tau_k;
    let kappa = 100.0_f64;
    let (env, ratio) = geometric_envelope(&tr, &rep, tau);
    let tau_ok = within(tau, 1.0 / kappa.sqrt(), 1e-12);

    let mut ini = Ini::parse(&config_text("agd_strong.cfg")?)?;
    for key in ["csv", "json", "svg"] {
        ini.apply_override(&format!("output.{key}="))?;
    }
    let factors = [0.5, 1.0, 1.5, 2.0, 3.0];
    let values: Vec<String> = factors.iter().map(|f| format!("{}", f / kappa.sqrt())).collect();
    let axis = Axis::parse(&format!("schedule.tau={}", values.join(",")))?;
    let dir = tempfile::tempdir().map_err(|e| momentum_lab::LabError::Io(e.to_string()))?;
    let report = sweep(&ini, Some(&axis), &SweepOptions { out_dir: dir.path().to_path_buf(), jobs: None, seeds: None })?;
    let verdicts: Vec<bool> = report.cells.iter().map(|c| c.summary.verdict).collect();
    let flip = verdicts.iter().zip(factors).all(|(v, f)| *v == (f < 2.0));
    let secs = t0.elapsed().as_secs_f64();
    Ok((
        env && tau_ok && rep.overall && flip && secs < 5.0,
        format!(
            "envelope holds: {env} (max ratio {ratio:.6}), certificate {}, sweep verdicts {:?} for tau*sqrt(kappa) = {factors:?}; {secs:.2}s",
            rep.overall, verdicts
        ),
    ))
}

fn c4() -> Result<Verdict> {
    let cfg = shipped_config("quasi_monotone.cfg")?;
    let (tr, rep, _) = executed(&cfg)?;
    let delta = tr.meta.schedule.delta;
    let mut acc = rep.per_k[0].e_k;
    let mut ok = rep.gaps[0] <= acc / tr.records[0].a_k;
    for (k, c) in rep.per_k.iter().enumerate() {
        acc += delta * c.rhs;
        ok &= rep.gaps[k + 1] <= acc / tr.records[k + 1].a_k * (1.0 + 1e-12);
    }
    let x = exponent(&rep);
    let fit = within(x, -0.5, 0.1);
    Ok((
        ok && fit && rep.per_k.len() == 10_000,
        format!("bound (E0 + sum delta eps)/A_k holds: {ok}; exponent {x:.3} in -0.5 +/- 0.1: {fit}; certificate {}", rep.overall),
    ))
}

fn c5() -> Result<Verdict> {
    let inst = corpus("l1_ridge", 20, 2, &CorpusParams::new())?;
    let s = DiscreteSchedule::new(ScheduleKind::TwoOverKPlus2 { a0: 1.0 }, 1.0, MethodId::QuasiMonotoneStrong.convention())?;
    let tr = run(&MethodConfig::new(MethodId::QuasiMonotoneStrong), &inst, &s, 10_000, 0)?;
    let tau_ok = (0..50).all(|k| within(tr.records[k].tau_k, 2.0 / (k as f64 + 2.0), 1e-12));
    let rep = certify_default(&tr, inst.reference()?)?;
    let x = exponent(&rep);
    let fit = within(x, -1.0, 0.1);
    Ok((
        rep.overall && fit && tau_ok,
        format!("every step certified: {} ({} checks); tau_k = 2/(k+2): {tau_ok}; exponent {x:.3} in -1.0 +/- 0.1: {fit}", rep.overall, rep.checks),
    ))
}

fn c6() -> Result<Verdict> {
    let cfg = shipped_config("frank_wolfe.cfg")?;
    let (tr, rep, _) = executed(&cfg)?;
    let eps = 1.0 / tr.meta.smoothness.lipschitz_grad_l.expect("L");
    let delta = tr.meta.schedule.delta;
    // x_{k+1} − x_k = τ_k(v_k − x_k), so the error is A_{k+1}‖x_{k+1} − x_k‖²/(2εδ).
    let mut worst: f64 = 0.0;
    for (k, c) in rep.per_k.iter().enumerate() {
        let (r0, r1) = (&tr.records[k], &tr.records[k + 1]);
        let expect = r1.a_k * (&r1.state.x - &r0.state.x).norm_squared() / (2.0 * eps * delta);
        worst = worst.max((c.rhs - expect).abs() / expect.abs().max(1.0));
    }
    let ident = worst <= 1e-12;
    let x = exponent(&rep);
    let fit = within(x, -1.0, 0.15);

    let sh = corpus("simplex_holder", 20, 2, &params(&[("nu", 0.5)]))?;
    let s = DiscreteSchedule::new(ScheduleKind::TwoOverKPlus2 { a0: 1.0 }, 1.0, MethodId::FrankWolfe.convention())?;
    let th = run(&MethodConfig::new(MethodId::FrankWolfe), &sh, &s, 2000, 0)?;
    let hrep = certify_default(&th, sh.reference()?)?;
    Ok((
        ident && fit && rep.overall && hrep.overall,
        format!(
            "error identity max rel dev {worst:.2e} (<= 1e-12: {ident}); exponent {x:.3} in -1.0 +/- 0.15: {fit}; nu = 0.5 certificate ({}): {}",
            serde_json::to_value(hrep.formula).map(|v| v.to_string()).unwrap_or_default(),
            hrep.overall
        ),
    ))
}

fn c7() -> Result<Verdict> {
    let cfg = shipped_config("fista_lasso.cfg")?;
    let (tr, rep, _) = executed(&cfg)?;
    let (nonpos, max_eps) = all_errors_nonpositive(&rep, tr.meta.schedule.delta);
    let x = exponent(&rep);
    let fit = within(x, -2.0, 0.2);

    let inst = corpus("lasso", 30, 3, &params(&[("ridge", 0.1)]))?;
    let m = inst.meta();
    let (l, mu) = (m.lipschitz_grad_l.expect("L"), m.strong_convexity_mu.expect("mu"));
    let tau = (mu / l).sqrt();
    let s = DiscreteSchedule::geometric(tau, (1.0 / l).sqrt(), MethodId::ProxStrong.convention())?;
    let ts = run(&MethodConfig::new(MethodId::ProxStrong), &inst, &s, 500, 0)?;
    let srep = certify_default(&ts, inst.reference()?)?;
    let (env, ratio) = geometric_envelope(&ts, &srep, tau);
    Ok((
        nonpos && fit && rep.overall && env && srep.overall,
        format!(
            "fista errors nonpositive: {nonpos} (max {max_eps:.3e}); exponent {x:.3} in -2.0 +/- 0.2: {fit}; prox_strong E_k/A_k <= (1-tau)^k E0/A0: {env} (max ratio {ratio:.6}), certificate {}",
            srep.overall
        ),
    ))
}

fn c8() -> Result<Verdict> {
    let qq = corpus("quad_quartic", 2, 2, &CorpusParams::new())?;
    let eps = qq.meta().holder.expect("holder").epsilon;
    let g = GradientMapSpec::UniversalHigher { eps, p: 3, nu: 1.0, n: 2.0, tol: 1e-10 };
    let h3 = DistanceGenerator::p_power(3.0, 2)?;
    let c = g.universal_schedule_constant(h3.sigma).expect("constant");
    let s = DiscreteSchedule::universal(c, g.p_tilde().expect("p~"), 1.0)?;
    let acc = run(&MethodConfig::new(MethodId::AgdFamilyII).with_gmap(g).with_geometry(h3), &qq, &s, 300, 0)?;
    let mut worst = f64::NEG_INFINITY;
    let mut steps = 0;
    for r in &acc.records[1..] {
        let (lhs, rhs) = (r.aux.get("progress_lhs"), r.aux.get("progress_rhs_conservative"));
        if let (Some(lhs), Some(rhs)) = (lhs, rhs) {
            worst = worst.max(lhs - rhs - 1e-12 * rhs.abs().max(1e-300));
            steps += 1;
        }
    }
    let progress = steps == 300 && worst <= 0.0;
    let rep = certify_default(&acc, qq.reference()?)?;
    let xa = fit_rate_window(&rep.gaps, 1, 300, false).map(|f| f.exponent).unwrap_or(f64::NAN);
    let hod = run(&MethodConfig::new(MethodId::HigherOrderDescent).with_gmap(g), &qq, &s, 300, 0)?;
    let hrep = certify_default(&hod, qq.reference()?)?;
    let xh = fit_rate_window(&hrep.gaps, 1, 300, false).map(|f| f.exponent).unwrap_or(f64::NAN);
    let (fa, fh) = (within(xa, -3.0, 0.4), within(xh, -2.0, 0.3));
    Ok((
        progress && fa && fh,
        format!(
            "progress inequality at all {steps} steps: {progress} (max excess {worst:.2e}); accelerated exponent {xa:.2} in -3.0 +/- 0.4: {fa}; descent exponent {xh:.2} in -2.0 +/- 0.3: {fh}"
        ),
    ))
}

fn c9() -> Result<Verdict> {
    let inst = corpus("quadratic_illcond", 10, 1, &params(&[("kappa", 100.0)]))?;
    let f = inst.objective()?;
    let r = inst.reference()?;
    let mu = inst.meta().strong_convexity_mu.expect("mu");
    let h = DistanceGenerator::euclidean(10);
    let x0 = r.x_star.clone() + gaussian_vector(&mut rng(9), 10);
    let tol = 1e-8;
    let opts = IntegratorOpts::default().with_tol(tol).with_samples(200);
    let weak = simulate_first_el(f, &h, &ContinuousSchedule::polynomial(2.0), &x0, None, 1.0, 20.0, &opts)?;
    let wl = continuous_lyapunov(&weak, ContinuousLyapunovKind::Weak, &r.x_star, r.f_star, None)?;
    let strong = simulate_second_el(f, &h, mu, &ContinuousSchedule::linear(mu.sqrt()), &x0, None, 0.0, 60.0, &opts)?;
    let sl = continuous_lyapunov(&strong, ContinuousLyapunovKind::Strong, &r.x_star, r.f_star, Some(mu))?;
    let dil = time_dilation_check(f, &h, &ContinuousSchedule::polynomial(2.0), TimeMap::Power { p: 2.0 }, &x0, None, 1.0, 20.0, &opts)?;
    let ok = wl.nonincreasing && wl.rate_bound_holds && sl.nonincreasing && sl.rate_bound_holds && dil.pass;
    Ok((
        ok,
        format!(
            "weak: nonincreasing {} rate {}, max increase {:.2e} (slack {:.2e}); strong: nonincreasing {} rate {}; dilation t^2: deviation {:.2e} vs {:.2e}",
            wl.nonincreasing, wl.rate_bound_holds, wl.max_increase, wl.slack, sl.nonincreasing, sl.rate_bound_holds, dil.max_deviation,
            dil.threshold
        ),
    ))
}

/// Largest distance between the interpolated AGD iterates and the weak trajectory on `[2, t_end]`.
fn discrete_deviation(inst: &ProblemInstance, eps: f64, t_end: f64) -> Result<f64> {
    let delta = eps.sqrt();
    let s = DiscreteSchedule::quadratic(eps, delta)?;
    // A_k ≈ (kδ)²/4, so t_k = 2√A_k matches e^{β_t} = t²/4.
    let n = ((t_end / delta) * 1.1).ceil() as usize + 10;
    let cfg = MethodConfig::new(MethodId::AgdFamilyI).with_gmap(GradientMapSpec::Nesterov { eps });
    let tr = run(&cfg, inst, &s, n, 0)?;
    let times: Vec<f64> = tr.records.iter().map(|r| 2.0 * r.a_k.sqrt()).collect();
    let t0 = times[0];
    let grid: Vec<f64> = (0..=80).map(|i| t0 + (t_end - t0) * i as f64 / 80.0).collect();
    let f = inst.objective()?;
    let h = DistanceGenerator::euclidean(inst.dim());
    let x0 = tr.records[0].state.x.clone();
    let opts = IntegratorOpts::default().with_tol(1e-10).with_sample_times(grid.clone());
    let ct = simulate_first_el(f, &h, &ContinuousSchedule::polynomial_scaled(2.0, 0.25), &x0, None, t0, t_end, &opts)?;
    let mut worst: f64 = 0.0;
    for (t, sample) in grid.iter().zip(&ct.samples) {
        let j = times.partition_point(|&s| s <= *t).clamp(1, times.len() - 1);
        let (ta, tb) = (times[j - 1], times[j]);
        let w = if tb > ta { (t - ta) / (tb - ta) } else { 0.0 };
        let x: Vector = &tr.records[j - 1].state.x * (1.0 - w) + &tr.records[j].state.x * w;
        worst = worst.max((&x - &sample.state.x).norm());
    }
    Ok(worst)
}

fn c10() -> Result<Verdict> {
    let inst = corpus("quadratic_illcond", 10, 1, &params(&[("kappa", 10.0)]))?;
    let d2 = discrete_deviation(&inst, 1e-2, 10.0)?;
    let d4 = discrete_deviation(&inst, 1e-4, 10.0)?;
    let ratio = d2 / d4;
    Ok((ratio >= 3.0, format!("max deviation {d2:.3e} at eps 1e-2, {d4:.3e} at eps 1e-4, ratio {ratio:.2} (>= 3)")))
}

fn es_cases() -> Result<Vec<(String, MethodConfig, ProblemInstance, DiscreteSchedule, usize)>> {
    let ak = TauConvention::TauOverAk;
    let ak1 = TauConvention::TauOverAk1;
    let q = corpus("quadratic_illcond", 20, 1, &params(&[("kappa", 100.0)]))?;
    let l = q.meta().lipschitz_grad_l.expect("L");
    let mu = q.meta().strong_convexity_mu.expect("mu");
    let lasso = corpus("lasso", 20, 2, &CorpusParams::new())?;
    let ll = lasso.meta().lipschitz_grad_l.expect("L");
    let rl = corpus("lasso", 20, 3, &params(&[("ridge", 0.1)]))?;
    let (rll, rmu) = (rl.meta().lipschitz_grad_l.expect("L"), rl.meta().strong_convexity_mu.expect("mu"));
    let sq = corpus("simplex_quadratic", 20, 2, &CorpusParams::new())?;
    Ok(vec![
        ("implicit".into(), MethodConfig::new(MethodId::Implicit), q.clone(), DiscreteSchedule::geometric(1.0, 1.0, ak)?, 30),
        ("implicit_strong".into(), MethodConfig::new(MethodId::ImplicitStrong), q.clone(), DiscreteSchedule::geometric(0.5, 1.0, ak)?, 30),
        (
            "quasi_monotone".into(),
            MethodConfig::new(MethodId::QuasiMonotone),
            corpus("l1_on_box", 20, 2, &CorpusParams::new())?,
            DiscreteSchedule::new(ScheduleKind::Sqrt { a0: 1.0, c: 0.3 }, 1.0, ak1)?,
            200,
        ),
        (
            "quasi_monotone_strong".into(),
            MethodConfig::new(MethodId::QuasiMonotoneStrong),
            corpus("l1_ridge", 20, 2, &CorpusParams::new())?,
            DiscreteSchedule::new(ScheduleKind::TwoOverKPlus2 { a0: 1.0 }, 1.0, ak)?,
            200,
        ),
        ("agd_family_I".into(), MethodConfig::new(MethodId::AgdFamilyI), q.clone(), DiscreteSchedule::quadratic(1.0 / l, (1.0 / l).sqrt())?, 200),
        ("agd_family_II".into(), MethodConfig::new(MethodId::AgdFamilyII), q.clone(), DiscreteSchedule::quadratic(1.0 / l, (1.0 / l).sqrt())?, 200),
        (
            "agd_strong".into(),
            MethodConfig::new(MethodId::AgdStrong),
            q.clone(),
            DiscreteSchedule::geometric((mu / l).sqrt(), (1.0 / l).sqrt(), ak1)?,
            200,
        ),
        ("fista".into(), MethodConfig::new(MethodId::Fista), lasso, DiscreteSchedule::quadratic(1.0 / ll, 1.0)?, 200),
        (
            "prox_strong".into(),
            MethodConfig::new(MethodId::ProxStrong),
            rl,
            DiscreteSchedule::geometric((rmu / rll).sqrt(), (1.0 / rll).sqrt(), ak1)?,
            200,
        ),
        (
            "frank_wolfe".into(),
            MethodConfig::new(MethodId::FrankWolfe),
            sq,
            DiscreteSchedule::new(ScheduleKind::TwoOverKPlus2 { a0: 1.0 }, 1.0, ak1)?,
            200,
        ),
    ])
}

fn sample_points(inst: &ProblemInstance, h: &DistanceGenerator, x_star: &Vector, n: usize) -> Vec<Vector> {
    let mut r = rng(21);
    (0..n)
        .map(|_| match &inst.set {
            Some(set) => set.sample(&mut r),
            None => {
                let p = h.sample_point(&mut r, 1.0);
                let shifted = x_star + &p;
                if h.check_domain(&shifted).is_ok() {
                    shifted
                } else {
                    p
                }
            }
        })
        .collect()
}

fn c11() -> Result<Verdict> {
    let mut failures = Vec::new();
    let mut names = Vec::new();
    for (name, cfg, inst, s, n) in es_cases()? {
        let tr = run(&cfg, &inst, &s, n, 0)?;
        let r = inst.reference()?;
        let (kind, formula) = default_certificate(&tr);
        let rep = certify(&tr, kind, formula, r)?;
        if !rep.overall {
            failures.push(format!("{name}: trace not certified"));
            continue;
        }
        let es = to_estimate_sequence(&tr, kind, formula, r)?;
        let pts = sample_points(&inst, &tr.meta.geometry, &r.x_star, 50);
        let ks: Vec<usize> = (0..=n).collect();
        let v = verify_estimate_sequence(&es, &inst, &pts, &ks)?;
        let rt = from_estimate_sequence(&es, &tr, kind, r)?;
        if !v.pass {
            failures.push(format!("{name}: estimate inequality violated by {:.2e}", v.max_violation));
        }
        if !(rt.pass && rt.max_rel_deviation <= 1e-12) {
            failures.push(format!("{name}: round trip deviation {:.2e}", rt.max_rel_deviation));
        }
        names.push(name);
    }
    let ok = failures.is_empty();
    Ok((
        ok,
        if ok { format!("{} methods, 50 points each: {}", names.len(), names.join(", ")) } else { failures.join("; ") },
    ))
}

struct McResult {
    /// No k where the bound is exceeded at 95% confidence (`mean − 1.96 se > bound`).
    bound_ok: bool,
    worst_margin: f64,
    /// Largest `mean + 1.96 se − bound`, reported for reference.
    upper_margin: f64,
    exponent: f64,
}

/// Mean Lyapunov series against `E₀ + Σδ·Ê[ε_i]`, with `Ê[ε_i]` the seed mean of the
/// error term evaluated at `‖∇f‖² + E‖ξ‖²`. The bound can hold with equality
/// (‖x‖₁ at x* = 0 makes the first steps tight), so the check is that no k
/// exceeds it at 95% confidence.
fn monte_carlo(base: StochasticBase, inst: &ProblemInstance, s: &DiscreteSchedule, n: usize, noise: NoiseSpec) -> Result<McResult> {
    let cfg = stochastic_variant(base, noise)?;
    let r = inst.reference()?;
    let m2 = noise.second_moment(inst.dim());
    let runs: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..200u64)
        .into_par_iter()
        .map(|seed| -> Result<_> {
            let tr = run(&cfg, inst, s, n, seed)?;
            let (kind, _) = default_certificate(&tr);
            let e = evaluate_lyapunov(&tr, kind, r)?;
            let sigma = tr.meta.geometry.sigma;
            let delta = s.delta;
            let mu = tr.meta.mu.unwrap_or(1.0);
            let mut eps = Vec::with_capacity(n);
            for k in 0..n {
                let (r0, r1) = (&tr.records[k], &tr.records[k + 1]);
                let g2 = r1.grad("x").expect("gradient").value.norm_squared() + m2;
                eps.push(match base {
                    StochasticBase::FamilyIIdentity => r0.alpha_k * r0.alpha_k / (2.0 * sigma * delta) * g2,
                    _ => r0.a_k * r0.tau_k * r0.tau_k / (2.0 * mu * sigma * delta) * g2,
                });
            }
            let gaps = tr.records.iter().map(|q| q.f_x - r.f_star).collect();
            Ok((e, eps, gaps))
        })
        .collect::<Result<_>>()?;
    let ns = runs.len() as f64;
    let mean_at = |pick: &dyn Fn(&(Vec<f64>, Vec<f64>, Vec<f64>)) -> f64| -> (f64, f64) {
        let xs: Vec<f64> = runs.iter().map(pick).collect();
        mean_ci(&xs)
    };
    let e0 = mean_at(&|r| r.0[0]).0;
    let slack = 1e-9 * (1.0 + e0.abs());
    let mut bound = e0;
    let mut worst = f64::NEG_INFINITY;
    let mut upper = f64::NEG_INFINITY;
    let mut mean_gap = vec![0.0; n + 1];
    for k in 0..=n {
        if k > 0 {
            bound += s.delta * mean_at(&|r| r.1[k - 1]).0;
        }
        let (m, hw) = mean_at(&|r| r.0[k]);
        worst = worst.max(m - hw - bound - slack);
        upper = upper.max(m + hw - bound - slack);
        mean_gap[k] = runs.iter().map(|r| r.2[k]).sum::<f64>() / ns;
    }
    let exponent = fit_rate(&mean_gap, false, 0.0).map(|f| f.exponent).unwrap_or(f64::NAN);
    Ok(McResult { bound_ok: worst <= 0.0, worst_margin: worst, upper_margin: upper, exponent })
}

fn c12() -> Result<Verdict> {
    let t0 = Instant::now();
    let noise = NoiseSpec::Gaussian { scale: 1.0 };
    let ak1 = TauConvention::TauOverAk1;
    let weak_inst = corpus("l1_on_box", 10, 0, &CorpusParams::new())?;
    let ws = DiscreteSchedule::new(ScheduleKind::Sqrt { a0: 1.0, c: 0.3 }, 1.0, ak1)?;
    let w = monte_carlo(StochasticBase::FamilyIIdentity, &weak_inst, &ws, 2000, noise)?;
    let strong_inst = corpus("l1_ridge", 10, 0, &CorpusParams::new())?;
    let ss = DiscreteSchedule::new(ScheduleKind::TwoOverKPlus2 { a0: 1.0 }, 1.0, MethodId::QuasiMonotoneStrong.convention())?;
    let st = monte_carlo(StochasticBase::QuasiMonotoneStrong, &strong_inst, &ss, 2000, noise)?;
    let secs = t0.elapsed().as_secs_f64();
    let (fw, fs) = (within(w.exponent, -0.5, 0.15), within(st.exponent, -1.0, 0.2));
    Ok((
        w.bound_ok && st.bound_ok && fw && fs && secs < 60.0,
        format!(
            "200 seeds; weak: bound not exceeded {} (margin {:.2e}, upper limit margin {:.2e}), exponent {:.3}: {fw}; strong: bound not exceeded {} (margin {:.2e}, upper limit margin {:.2e}), exponent {:.3}: {fs}; {secs:.1}s",
            w.bound_ok, w.worst_margin, w.upper_margin, w.exponent, st.bound_ok, st.worst_margin, st.upper_margin, st.exponent
        ),
    ))
}

fn c13() -> Result<Verdict> {
    let checks = selfcheck();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let code = std::process::Command::new(env!("CARGO_BIN_EXE_momentum-lab"))
        .arg("selfcheck")
        .output()
        .map(|o| o.status.code().unwrap_or(-1))
        .map_err(|e| momentum_lab::LabError::Io(e.to_string()))?;
    Ok((
        failed.is_empty() && code == 0,
        format!("{} checks, {} failed {:?}; selfcheck exit code {code}", checks.len(), failed.len(), failed),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Verdict>); 13] = [
        ("implicit method certificate", c1),
        ("accelerated rate, weakly convex", c2),
        ("strongly convex linear rate", c3),
        ("quasi-monotone, nonsmooth", c4),
        ("strong quasi-monotone", c5),
        ("frank-wolfe", c6),
        ("fista and composite", c7),
        ("universal higher-order", c8),
        ("continuous dynamics", c9),
        ("discrete-to-continuous consistency", c10),
        ("estimate-sequence equivalence", c11),
        ("stochastic variants", c12),
        ("oracle and identity suite", c13),
    ];
    let mut passed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let (ok, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        passed += ok as usize;
        println!("{} criterion {:2} {name}: {detail} [{:.2}s]", if ok { "PASS" } else { "FAIL" }, i + 1, t0.elapsed().as_secs_f64());
    }
    println!("acceptance: {passed}/{} criteria pass", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
