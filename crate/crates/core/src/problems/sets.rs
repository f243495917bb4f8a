use crate::{LabError, Result, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Compact convex sets with a linear minimisation oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    Simplex { dim: usize },
    L1Ball { radius: f64, dim: usize },
    L2Ball { radius: f64, dim: usize },
    Box { lo: f64, hi: f64, dim: usize },
}

/// Index of the smallest entry; the first one wins ties.
fn argmin_first(v: &Vector) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] < v[best] {
            best = i;
        }
    }
    best
}

impl FeasibleSet {
    pub fn dim(&self) -> usize {
        match *self {
            FeasibleSet::Simplex { dim }
            | FeasibleSet::L1Ball { dim, .. }
            | FeasibleSet::L2Ball { dim, .. }
            | FeasibleSet::Box { dim, .. } => dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FeasibleSet::L1Ball { radius, .. } | FeasibleSet::L2Ball { radius, .. } if !(radius > 0.0) => {
                Err(LabError::ConfigError(format!("ball radius must be positive, got {radius}")))
            }
            FeasibleSet::Box { lo, hi, .. } if !(lo < hi) => {
                Err(LabError::ConfigError(format!("empty box [{lo}, {hi}]")))
            }
            _ => Ok(()),
        }
    }

    /// `argmin_{z ∈ set} ⟨direction, z⟩`, always an extreme point; ties go to the lowest index.
    pub fn lmo(&self, direction: &Vector) -> Result<Vector> {
        let n = self.dim();
        if direction.len() != n {
            return Err(LabError::DomainViolation(format!(
                "direction has dimension {}, set has {n}",
                direction.len()
            )));
        }
        if !direction.iter().all(|v| v.is_finite()) {
            return Err(LabError::DomainViolation("non-finite LMO direction".into()));
        }
        Ok(match *self {
            FeasibleSet::Simplex { .. } => {
                let mut z = Vector::zeros(n);
                z[argmin_first(direction)] = 1.0;
                z
            }
            FeasibleSet::L1Ball { radius, .. } => {
                let abs = direction.map(|v| -v.abs());
                let i = argmin_first(&abs);
                let mut z = Vector::zeros(n);
                // A zero direction makes every point optimal; pick +radius·e_0.
                z[i] = if direction[i] > 0.0 { -radius } else { radius };
                z
            }
            FeasibleSet::L2Ball { radius, .. } => {
                let nd = direction.norm();
                if nd == 0.0 {
                    let mut z = Vector::zeros(n);
                    z[0] = radius;
                    z
                } else {
                    direction * (-radius / nd)
                }
            }
            FeasibleSet::Box { lo, hi, .. } => direction.map(|v| if v > 0.0 { lo } else { hi }),
        })
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        if x.len() != self.dim() || !x.iter().all(|v| v.is_finite()) {
            return false;
        }
        match *self {
            FeasibleSet::Simplex { .. } => x.iter().all(|&v| v >= -tol) && (x.sum() - 1.0).abs() <= tol,
            FeasibleSet::L1Ball { radius, .. } => x.lp_norm(1) <= radius + tol,
            FeasibleSet::L2Ball { radius, .. } => x.norm() <= radius + tol,
            FeasibleSet::Box { lo, hi, .. } => x.iter().all(|&v| v >= lo - tol && v <= hi + tol),
        }
    }

    /// Extreme-point test against the vertex description of each set.
    pub fn is_extreme_point(&self, x: &Vector, tol: f64) -> bool {
        if !self.contains(x, tol) {
            return false;
        }
        match *self {
            FeasibleSet::Simplex { .. } => {
                x.iter().filter(|&&v| (v - 1.0).abs() <= tol).count() == 1
                    && x.iter().filter(|&&v| v.abs() <= tol).count() == x.len() - 1
            }
            FeasibleSet::L1Ball { radius, .. } => {
                x.iter().filter(|&&v| (v.abs() - radius).abs() <= tol).count() == 1
                    && x.iter().filter(|&&v| v.abs() <= tol).count() == x.len() - 1
            }
            FeasibleSet::L2Ball { radius, .. } => (x.norm() - radius).abs() <= tol,
            FeasibleSet::Box { lo, hi, .. } => {
                x.iter().all(|&v| (v - lo).abs() <= tol || (v - hi).abs() <= tol)
            }
        }
    }

    /// Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        match *self {
            FeasibleSet::Simplex { .. } => 2f64.sqrt(),
            FeasibleSet::L1Ball { radius, .. } | FeasibleSet::L2Ball { radius, .. } => 2.0 * radius,
            FeasibleSet::Box { lo, hi, dim } => (hi - lo) * (dim as f64).sqrt(),
        }
    }

    /// Random member of the set.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vector {
        let n = self.dim();
        match *self {
            FeasibleSet::Simplex { .. } => crate::geometry::sample_simplex(rng, n),
            FeasibleSet::L1Ball { radius, .. } => {
                let w = crate::geometry::sample_simplex(rng, n);
                let scale = radius * rng.gen_range(0.0..1.0_f64);
                Vector::from_iterator(n, w.iter().map(|&v| {
                    let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    s * v * scale
                }))
            }
            FeasibleSet::L2Ball { radius, .. } => {
                let g = crate::linalg::gaussian_vector(rng, n);
                let r = radius * rng.gen_range(0.0..1.0_f64).powf(1.0 / n as f64);
                let ng = g.norm();
                if ng == 0.0 {
                    Vector::zeros(n)
                } else {
                    g * (r / ng)
                }
            }
            FeasibleSet::Box { lo, hi, .. } => Vector::from_iterator(n, (0..n).map(|_| rng.gen_range(lo..hi))),
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Vector) -> Vector {
        match *self {
            FeasibleSet::Simplex { .. } => project_simplex(x),
            FeasibleSet::L2Ball { radius, .. } => {
                let n = x.norm();
                if n <= radius {
                    x.clone()
                } else {
                    x * (radius / n)
                }
            }
            FeasibleSet::Box { lo, hi, .. } => x.map(|v| v.clamp(lo, hi)),
            FeasibleSet::L1Ball { radius, .. } => {
                if x.lp_norm(1) <= radius {
                    return x.clone();
                }
                let a = x.map(|v| v.abs() / radius);
                let w = project_simplex(&a);
                Vector::from_iterator(x.len(), x.iter().zip(w.iter()).map(|(s, m)| s.signum() * m * radius))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeasibleSet::Simplex { .. } => "simplex",
            FeasibleSet::L1Ball { .. } => "l1_ball",
            FeasibleSet::L2Ball { .. } => "l2_ball",
            FeasibleSet::Box { .. } => "box",
        }
    }
}

/// Sort-based Euclidean projection onto the probability simplex.
pub fn project_simplex(x: &Vector) -> Vector {
    let mut u: Vec<f64> = x.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    x.map(|v| (v - theta).max(0.0))
}
