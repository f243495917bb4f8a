//! Adaptive Dormand–Prince 5(4) integration that lands exactly on requested output times.

use crate::{LabError, Result, Vector};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratorOpts {
    pub rtol: f64,
    pub atol: f64,
    /// Blowup threshold on the sup norm of the integrated state.
    pub max_norm: f64,
    pub max_steps: usize,
    /// Number of evenly spaced output times when `sample_times` is empty.
    pub n_samples: usize,
    /// Explicit output times inside `(t0, t1]`, increasing. `t0` is always sampled.
    pub sample_times: Vec<f64>,
}

impl Default for IntegratorOpts {
    fn default() -> Self {
        IntegratorOpts { rtol: 1e-8, atol: 1e-10, max_norm: 1e12, max_steps: 2_000_000, n_samples: 200, sample_times: Vec::new() }
    }
}

impl IntegratorOpts {
    pub fn with_tol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self.atol = rtol * 1e-2;
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    pub fn with_sample_times(mut self, ts: Vec<f64>) -> Self {
        self.sample_times = ts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.max_norm > 0.0 && self.max_steps > 0) {
            return Err(LabError::ConfigError("integrator tolerances, max_norm and max_steps must be positive".into()));
        }
        if self.sample_times.is_empty() && self.n_samples == 0 {
            return Err(LabError::ConfigError("need at least one output time".into()));
        }
        if self.sample_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::ConfigError("sample_times must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Output times after `t0`.
    pub fn output_times(&self, t0: f64, t1: f64) -> Vec<f64> {
        if !self.sample_times.is_empty() {
            return self.sample_times.iter().copied().filter(|&t| t > t0 && t <= t1).collect();
        }
        let n = self.n_samples.max(1);
        (1..=n).map(|i| if i == n { t1 } else { t0 + (t1 - t0) * i as f64 / n as f64 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    /// Largest sup-norm local error estimate over accepted steps.
    pub max_error: f64,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `y' = rhs(t, y)` from `(t0, y0)` to `t1`, calling `on_sample(t, y, h)` at `t0`
/// and at every output time. `h` is the last accepted step size (0 at `t0`).
pub fn integrate(
    rhs: &mut dyn FnMut(f64, &Vector) -> Result<Vector>,
    t0: f64,
    y0: Vector,
    t1: f64,
    opts: &IntegratorOpts,
    on_sample: &mut dyn FnMut(f64, &Vector, f64) -> Result<()>,
) -> Result<IntegratorStats> {
    opts.validate()?;
    if !(t1 > t0) {
        return Err(LabError::ConfigError(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    let outputs = opts.output_times(t0, t1);
    let mut stats = IntegratorStats::default();
    let mut t = t0;
    let mut y = y0;
    check_norm(t, &y, opts.max_norm)?;
    on_sample(t, &y, 0.0)?;
    let mut k1 = rhs(t, &y)?;
    let mut h = initial_step(&y, &k1, t0, t1, opts);
    let mut last_h = 0.0;
    for &target in &outputs {
        while t < target {
            if stats.steps + stats.rejected >= opts.max_steps {
                return Err(LabError::IntegrationBlowup { t, norm: crate::linalg::max_abs(&y) });
            }
            let remaining = target - t;
            // Land on the output time without leaving a sliver step.
            let step = if h >= remaining || h > 0.99 * remaining { remaining } else { h };
            let trial = dp_step(rhs, t, &y, &k1, step);
            let (y_new, k7, err_vec) = match trial {
                Ok(v) => v,
                // Trial stages may leave the domain; retry with a smaller step.
                Err(LabError::MirrorInversionFailure(_) | LabError::DomainViolation(_)) if step > 1e-12 * t.abs().max(1.0) => {
                    stats.rejected += 1;
                    h = step * 0.25;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let finite = y_new.iter().all(|v| v.is_finite()) && err_vec.iter().all(|v| v.is_finite());
            let err = if finite { error_norm(&err_vec, &y, &y_new, opts) } else { f64::INFINITY };
            if err <= 1.0 {
                t = if step == remaining { target } else { t + step };
                stats.steps += 1;
                stats.max_error = stats.max_error.max(crate::linalg::max_abs(&err_vec));
                y = y_new;
                k1 = k7;
                last_h = step;
                check_norm(t, &y, opts.max_norm)?;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // A shortened landing step keeps the previous proposal.
                if step >= h {
                    h = step * fac;
                }
            } else {
                stats.rejected += 1;
                let fac = if finite { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
                h = step * fac;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(LabError::IntegrationBlowup { t, norm: crate::linalg::max_abs(&y) });
                }
            }
        }
        on_sample(t, &y, last_h)?;
    }
    Ok(stats)
}

fn check_norm(t: f64, y: &Vector, max_norm: f64) -> Result<()> {
    let n = crate::linalg::max_abs(y);
    if !n.is_finite() || n > max_norm {
        return Err(LabError::IntegrationBlowup { t, norm: n });
    }
    Ok(())
}

fn error_norm(e: &Vector, y: &Vector, y_new: &Vector, opts: &IntegratorOpts) -> f64 {
    let n = e.len().max(1) as f64;
    let s: f64 = (0..e.len())
        .map(|i| {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            (e[i] / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step(y: &Vector, f: &Vector, t0: f64, t1: f64, opts: &IntegratorOpts) -> f64 {
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let n = y.len().max(1) as f64;
    let d0 = (y.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(t1 - t0).max(1e-12 * t0.abs().max(1.0))
}

type StepResult = (Vector, Vector, Vector);

fn dp_step(rhs: &mut dyn FnMut(f64, &Vector) -> Result<Vector>, t: f64, y: &Vector, k1: &Vector, h: f64) -> Result<StepResult> {
    let mut ks: Vec<Vector> = Vec::with_capacity(7);
    ks.push(k1.clone());
    for s in 1..7 {
        let mut ys = y.clone();
        for (j, kj) in ks.iter().enumerate() {
            let a = A[s][j];
            if a != 0.0 {
                ys.axpy(h * a, kj, 1.0);
            }
        }
        if s == 6 {
            // The last stage point is the fifth-order solution (FSAL).
            let k7 = rhs(t + h, &ys)?;
            ks.push(k7);
            let mut err = Vector::zeros(y.len());
            for (j, kj) in ks.iter().enumerate() {
                if E[j] != 0.0 {
                    err.axpy(h * E[j], kj, 1.0);
                }
            }
            let k7 = ks.pop().expect("seven stages");
            return Ok((ys, k7, err));
        }
        ks.push(rhs(t + C[s] * h, &ys)?);
    }
    unreachable!("the stage loop returns at s = 6")
}
