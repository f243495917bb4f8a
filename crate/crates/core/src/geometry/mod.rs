//! Distance-generating functions `h`, their Bregman divergences and mirror maps.
//!
//! All norms are Euclidean. The three kinds are the squared norm, powers of the
//! norm (plus a coordinate-separable variant) and the negative entropy on the
//! probability simplex.

use crate::linalg::{log_sum_exp, softmax};
use crate::{LabError, Matrix, Result, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Coordinates below this value are treated as the entropy boundary.
pub const ENTROPY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    Euclidean,
    /// `h(x) = (1/p)‖x‖^p`.
    PPower { p: f64 },
    /// `h(x) = (1/p) Σ |x_i|^p`.
    PPowerSeparable { p: f64 },
    NegativeEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryDomain {
    FullSpace { dim: usize },
    Simplex { dim: usize },
    Box { lo: f64, hi: f64, dim: usize },
}

impl GeometryDomain {
    pub fn dim(&self) -> usize {
        match *self {
            GeometryDomain::FullSpace { dim }
            | GeometryDomain::Simplex { dim }
            | GeometryDomain::Box { dim, .. } => dim,
        }
    }
}

/// An element `∇h(x)` of the dual space.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub coords: Vector,
}

impl DualPoint {
    pub fn new(coords: Vector) -> Self {
        DualPoint { coords }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceGenerator {
    pub kind: GeneratorKind,
    pub domain: GeometryDomain,
    /// Uniform-convexity modulus σ in `D_h(y,x) ≥ (σ/p)‖y−x‖^p`.
    pub sigma: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub samples: usize,
    pub min_ratio: f64,
    pub pass: bool,
}

impl DistanceGenerator {
    pub fn euclidean(dim: usize) -> Self {
        DistanceGenerator {
            kind: GeneratorKind::Euclidean,
            domain: GeometryDomain::FullSpace { dim },
            sigma: 1.0,
            p: 2.0,
        }
    }

    /// Squared norm restricted to the box `[lo, hi]^dim`; the mirror map is a projection.
    pub fn euclidean_box(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        if !(lo < hi) {
            return Err(LabError::DomainViolation(format!("empty box [{lo}, {hi}]")));
        }
        Ok(DistanceGenerator {
            kind: GeneratorKind::Euclidean,
            domain: GeometryDomain::Box { lo, hi, dim },
            sigma: 1.0,
            p: 2.0,
        })
    }

    pub fn p_power(p: f64, dim: usize) -> Result<Self> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(LabError::DomainViolation(format!("p_power needs p >= 2, got {p}")));
        }
        Ok(DistanceGenerator {
            kind: GeneratorKind::PPower { p },
            domain: GeometryDomain::FullSpace { dim },
            sigma: 2f64.powf(2.0 - p),
            p,
        })
    }

    /// Separable power; the modulus picks up the factor `dim^{1−p/2}` relating
    /// `Σ|u_i|^p` to `‖u‖^p`.
    pub fn p_power_separable(p: f64, dim: usize) -> Result<Self> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(LabError::DomainViolation(format!("p_power needs p >= 2, got {p}")));
        }
        Ok(DistanceGenerator {
            kind: GeneratorKind::PPowerSeparable { p },
            domain: GeometryDomain::FullSpace { dim },
            sigma: 2f64.powf(2.0 - p) * (dim as f64).powf(1.0 - p / 2.0),
            p,
        })
    }

    pub fn negative_entropy(dim: usize) -> Self {
        DistanceGenerator {
            kind: GeneratorKind::NegativeEntropy,
            domain: GeometryDomain::Simplex { dim },
            sigma: 1.0,
            p: 2.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.kind, GeneratorKind::Euclidean)
    }

    pub fn name(&self) -> String {
        match self.kind {
            GeneratorKind::Euclidean => match self.domain {
                GeometryDomain::Box { .. } => "euclidean_box".into(),
                _ => "euclidean".into(),
            },
            GeneratorKind::PPower { p } => format!("p_power({p})"),
            GeneratorKind::PPowerSeparable { p } => format!("p_power_separable({p})"),
            GeneratorKind::NegativeEntropy => "negative_entropy".into(),
        }
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(LabError::DomainViolation(format!(
                "dimension {} does not match geometry dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Membership test with a small tolerance for the simplex constraint and box bounds.
    pub fn check_domain(&self, x: &Vector) -> Result<()> {
        self.check_dim(x)?;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(LabError::DomainViolation("non-finite coordinate".into()));
        }
        match self.domain {
            GeometryDomain::FullSpace { .. } => Ok(()),
            GeometryDomain::Simplex { dim } => {
                let tol = 1e-9 * (dim as f64).max(1.0);
                if let Some(i) = x.iter().position(|&v| v < -tol) {
                    return Err(LabError::DomainViolation(format!(
                        "coordinate {i} = {} is negative on the simplex",
                        x[i]
                    )));
                }
                let s = x.sum();
                if (s - 1.0).abs() > tol {
                    return Err(LabError::DomainViolation(format!(
                        "coordinates sum to {s}, not 1"
                    )));
                }
                Ok(())
            }
            GeometryDomain::Box { lo, hi, .. } => {
                let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
                if let Some(i) = x.iter().position(|&v| v < lo - tol || v > hi + tol) {
                    return Err(LabError::DomainViolation(format!(
                        "coordinate {i} = {} outside [{lo}, {hi}]",
                        x[i]
                    )));
                }
                Ok(())
            }
        }
    }

    fn check_interior(&self, x: &Vector) -> Result<()> {
        self.check_domain(x)?;
        if let GeneratorKind::NegativeEntropy = self.kind {
            if let Some(i) = x.iter().position(|&v| v <= ENTROPY_FLOOR) {
                return Err(LabError::SingularPoint(format!(
                    "entropy coordinate {i} = {:e} at the boundary",
                    x[i]
                )));
            }
        }
        Ok(())
    }

    /// `h(x)`.
    pub fn value(&self, x: &Vector) -> Result<f64> {
        self.check_domain(x)?;
        Ok(match self.kind {
            GeneratorKind::Euclidean => 0.5 * x.norm_squared(),
            GeneratorKind::PPower { p } => x.norm().powf(p) / p,
            GeneratorKind::PPowerSeparable { p } => x.iter().map(|v| v.abs().powf(p)).sum::<f64>() / p,
            GeneratorKind::NegativeEntropy => x
                .iter()
                .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
                .sum(),
        })
    }

    /// `∇h(x)`.
    pub fn grad(&self, x: &Vector) -> Result<DualPoint> {
        self.check_interior(x)?;
        let g = match self.kind {
            GeneratorKind::Euclidean => x.clone(),
            GeneratorKind::PPower { p } => {
                let n = x.norm();
                if n == 0.0 {
                    Vector::zeros(x.len())
                } else {
                    x * n.powf(p - 2.0)
                }
            }
            GeneratorKind::PPowerSeparable { p } => x.map(|v| v.signum() * v.abs().powf(p - 1.0)),
            GeneratorKind::NegativeEntropy => x.map(|v| 1.0 + v.ln()),
        };
        Ok(DualPoint::new(g))
    }

    /// `argmin_{x ∈ domain} h(x) − ⟨d, x⟩`, the inverse of `∇h` on its range.
    ///
    /// For the entropy this is the softmax, so `grad(mirror_inverse(d))` equals
    /// `d` up to an additive constant vector.
    pub fn mirror_inverse(&self, d: &DualPoint) -> Result<Vector> {
        self.check_dim(&d.coords)?;
        if !d.coords.iter().all(|v| v.is_finite()) {
            return Err(LabError::NotInvertible("non-finite dual coordinate".into()));
        }
        let x = match self.kind {
            GeneratorKind::Euclidean => match self.domain {
                GeometryDomain::Box { lo, hi, .. } => d.coords.map(|v| v.clamp(lo, hi)),
                _ => d.coords.clone(),
            },
            GeneratorKind::PPower { p } => {
                let n = d.coords.norm();
                if n == 0.0 {
                    Vector::zeros(d.coords.len())
                } else {
                    &d.coords * n.powf(1.0 / (p - 1.0) - 1.0)
                }
            }
            GeneratorKind::PPowerSeparable { p } => {
                d.coords.map(|v| v.signum() * v.abs().powf(1.0 / (p - 1.0)))
            }
            GeneratorKind::NegativeEntropy => softmax(&d.coords),
        };
        if !x.iter().all(|v| v.is_finite()) {
            return Err(LabError::NotInvertible("mirror map overflowed".into()));
        }
        Ok(x)
    }

    /// One mirror step `∇h(z⁺) = ∇h(z) + step`, returning `z⁺` together with a
    /// canonical dual representative satisfying `mirror_inverse(dual) = z⁺`.
    pub fn mirror_step(&self, dual: &DualPoint, step: &Vector) -> Result<(Vector, DualPoint)> {
        let d = &dual.coords + step;
        self.from_dual(d)
    }

    /// Primal point and canonical dual representative for an arbitrary dual vector.
    pub fn from_dual(&self, d: Vector) -> Result<(Vector, DualPoint)> {
        let z = self.mirror_inverse(&DualPoint::new(d.clone()))?;
        let canon = match (self.kind, self.domain) {
            (GeneratorKind::Euclidean, GeometryDomain::Box { .. }) => z.clone(),
            (GeneratorKind::NegativeEntropy, _) => {
                let m = d.max();
                d.map(|v| v - m)
            }
            _ => d,
        };
        Ok((z, DualPoint::new(canon)))
    }

    /// Bregman divergence `D_h(y, x) = h(y) − h(x) − ⟨∇h(x), y − x⟩`.
    pub fn divergence(&self, y: &Vector, x: &Vector) -> Result<f64> {
        self.check_domain(y)?;
        self.check_interior(x)?;
        Ok(match self.kind {
            GeneratorKind::Euclidean => 0.5 * (y - x).norm_squared(),
            GeneratorKind::NegativeEntropy => y
                .iter()
                .zip(x.iter())
                .map(|(&a, &b)| if a > 0.0 { a * (a / b).ln() - a + b } else { b })
                .sum(),
            _ => {
                let g = self.grad(x)?;
                self.value(y)? - self.value(x)? - g.coords.dot(&(y - x))
            }
        })
    }

    /// `D_h(y, x)` where `x` is given through a dual representative `d` (`x = mirror_inverse(d)`).
    /// Uses the Fenchel–Young gap, so it stays finite at entropy boundary points.
    pub fn divergence_from_dual(&self, y: &Vector, d: &DualPoint) -> Result<f64> {
        match self.kind {
            GeneratorKind::NegativeEntropy => {
                self.check_domain(y)?;
                Ok(self.value(y)? - d.coords.dot(y) + log_sum_exp(&d.coords))
            }
            _ => {
                let x = self.mirror_inverse(d)?;
                self.divergence(y, &x)
            }
        }
    }

    /// `∇²h(x)` (the entropy Hessian is restricted to the simplex tangent space by callers).
    pub fn hessian(&self, x: &Vector) -> Result<Matrix> {
        self.check_interior(x)?;
        let n = x.len();
        Ok(match self.kind {
            GeneratorKind::Euclidean => Matrix::identity(n, n),
            GeneratorKind::PPower { p } => {
                let r = x.norm();
                if r == 0.0 {
                    if p == 2.0 {
                        Matrix::identity(n, n)
                    } else {
                        Matrix::zeros(n, n)
                    }
                } else {
                    Matrix::identity(n, n) * r.powf(p - 2.0) + (x * x.transpose()) * ((p - 2.0) * r.powf(p - 4.0))
                }
            }
            GeneratorKind::PPowerSeparable { p } => {
                Matrix::from_diagonal(&x.map(|v| (p - 1.0) * v.abs().powf(p - 2.0)))
            }
            GeneratorKind::NegativeEntropy => Matrix::from_diagonal(&x.map(|v| 1.0 / v)),
        })
    }

    /// Jacobian of the mirror map at the dual point `d`.
    pub fn mirror_inverse_jacobian(&self, d: &DualPoint) -> Result<Matrix> {
        let n = d.coords.len();
        Ok(match self.kind {
            GeneratorKind::Euclidean => match self.domain {
                GeometryDomain::Box { lo, hi, .. } => Matrix::from_diagonal(
                    &d.coords.map(|v| if v > lo && v < hi { 1.0 } else { 0.0 }),
                ),
                _ => Matrix::identity(n, n),
            },
            GeneratorKind::NegativeEntropy => {
                let z = softmax(&d.coords);
                Matrix::from_diagonal(&z) - &z * z.transpose()
            }
            GeneratorKind::PPower { p } => {
                let q = 1.0 / (p - 1.0);
                let r = d.coords.norm();
                if r == 0.0 {
                    return Err(LabError::SingularPoint("p_power mirror Jacobian at 0".into()));
                }
                (Matrix::identity(n, n) + (&d.coords * d.coords.transpose()) * ((q - 1.0) / (r * r)))
                    * r.powf(q - 1.0)
            }
            GeneratorKind::PPowerSeparable { p } => {
                let q = 1.0 / (p - 1.0);
                if d.coords.iter().any(|&v| v == 0.0) && q < 1.0 {
                    return Err(LabError::SingularPoint("separable mirror Jacobian at 0".into()));
                }
                Matrix::from_diagonal(&d.coords.map(|v| q * v.abs().powf(q - 1.0)))
            }
        })
    }

    /// Random point of the domain (strictly interior for the entropy).
    pub fn sample_point(&self, rng: &mut ChaCha8Rng, scale: f64) -> Vector {
        let n = self.dim();
        match self.domain {
            GeometryDomain::FullSpace { .. } => {
                let radius = scale * rng.gen_range(0.0..2.0_f64);
                let mut v = crate::linalg::gaussian_vector(rng, n);
                let nv = v.norm();
                if nv > 0.0 {
                    v *= radius / nv;
                }
                v
            }
            GeometryDomain::Simplex { .. } => sample_simplex(rng, n),
            GeometryDomain::Box { lo, hi, .. } => Vector::from_iterator(n, (0..n).map(|_| rng.gen_range(lo..hi))),
        }
    }

    /// Sample point pairs and report the smallest `D_h(x,y) / ((σ/p)‖x−y‖^p)`.
    pub fn check_uniform_convexity(&self, n_samples: usize, rng_seed: u64) -> ConvexityReport {
        let mut rng = crate::linalg::rng(rng_seed);
        let mut min_ratio = f64::INFINITY;
        let mut used = 0;
        let mut attempts = 0;
        while used < n_samples.max(1) && attempts < 100 * n_samples.max(1) {
            attempts += 1;
            let scale = 10f64.powf(rng.gen_range(-2.0..1.0));
            let x = self.sample_point(&mut rng, scale);
            let y = self.sample_point(&mut rng, scale);
            let dist = (&x - &y).norm();
            if dist < 1e-6 {
                continue;
            }
            let Ok(d) = self.divergence(&x, &y) else { continue };
            let ratio = d / (self.sigma / self.p * dist.powf(self.p));
            min_ratio = min_ratio.min(ratio);
            used += 1;
        }
        ConvexityReport {
            samples: used,
            min_ratio,
            pass: used > 0 && min_ratio >= 1.0 - 1e-9,
        }
    }
}

/// Uniform sample from the interior of the probability simplex.
pub fn sample_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    let e = Vector::from_iterator(n, (0..n).map(|_| -(rng.gen_range(1e-12..1.0_f64)).ln()));
    let s = e.sum();
    e / s
}

pub fn uniform_simplex(n: usize) -> Vector {
    Vector::from_element(n, 1.0 / n as f64)
}

#[cfg(test)]
mod tests;
