//! Position-statistics layer: expectation values computed from wrapped
//! position densities alone.
//!
//! When an apparatus correlates an unknown property with position, the
//! observable A_0 = integral cos(2 pi xbar / l) |xbar><xbar| needs nothing
//! but the wrapped position density p(xbar) on one period. These types hold
//! such densities on a uniform periodic grid and evaluate the expectations.

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::modular::ModularFrame;

/// Normalization tolerance for density grids.
pub const DENSITY_NORM_TOL: f64 = 1e-10;

/// Probability density over one position period [0, l), sampled on a
/// uniform periodic grid (node j at j l / n, weight l / n).
#[derive(Debug, Clone)]
pub struct WrappedDensity {
    ell: f64,
    values: Vec<f64>,
}

impl WrappedDensity {
    /// Wraps and validates raw grid values: nonnegative, unit mass.
    pub fn from_values(frame: &ModularFrame, values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 {
            return Err(CoreError::InvalidParameter {
                name: "values",
                message: format!("need at least 4 nodes, got {}", values.len()),
            });
        }
        let w = frame.ell() / values.len() as f64;
        let mut integral = 0.0;
        for (i, &v) in values.iter().enumerate() {
            if v < -1e-12 {
                return Err(CoreError::DensityNegative { value: v, index: i });
            }
            integral += w * v;
        }
        if (integral - 1.0).abs() > DENSITY_NORM_TOL {
            return Err(CoreError::DensityNotNormalized { integral });
        }
        Ok(Self {
            ell: frame.ell(),
            values,
        })
    }

    /// Wrapped normal density with the given center and standard deviation,
    /// renormalized on the grid.
    pub fn wrapped_normal(frame: &ModularFrame, center: f64, sigma: f64, n: usize) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "sigma",
                message: format!("width must be positive, got {sigma}"),
            });
        }
        let ell = frame.ell();
        let images = (8.0 * sigma / ell).ceil() as i64 + 2;
        let mut values = Vec::with_capacity(n);
        for j in 0..n {
            let x = j as f64 * ell / n as f64;
            let mut rho = 0.0;
            for k in -images..=images {
                let u = (x - center + k as f64 * ell) / sigma;
                rho += (-0.5 * u * u).exp();
            }
            values.push(rho);
        }
        let w = ell / n as f64;
        let mass: f64 = values.iter().map(|v| v * w).sum();
        for v in &mut values {
            *v /= mass;
        }
        Self::from_values(frame, values)
    }

    /// Uniform density on the period.
    pub fn uniform(frame: &ModularFrame, n: usize) -> Result<Self> {
        Self::from_values(frame, vec![1.0 / frame.ell(); n])
    }

    /// All mass on node `k`: the grid version of a delta spike.
    pub fn node_spike(frame: &ModularFrame, n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(CoreError::InvalidParameter {
                name: "k",
                message: format!("spike node {k} outside grid of {n}"),
            });
        }
        let w = frame.ell() / n as f64;
        let mut values = vec![0.0; n];
        values[k] = 1.0 / w;
        Self::from_values(frame, values)
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.ell / self.values.len() as f64
    }

    fn weight(&self) -> f64 {
        self.ell / self.values.len() as f64
    }

    fn check_normalized(&self) -> Result<()> {
        let integral: f64 = self.values.iter().map(|v| v * self.weight()).sum();
        if (integral - 1.0).abs() > DENSITY_NORM_TOL {
            return Err(CoreError::DensityNotNormalized { integral });
        }
        Ok(())
    }
}

/// Joint density over [0, l)^2 on a uniform periodic grid, row-major.
#[derive(Debug, Clone)]
pub struct JointWrappedDensity {
    ell: f64,
    n: usize,
    values: Vec<f64>,
}

impl JointWrappedDensity {
    pub fn from_values(frame: &ModularFrame, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(CoreError::DimensionMismatch {
                left: values.len(),
                right: n * n,
            });
        }
        let w = frame.ell() / n as f64;
        let mut integral = 0.0;
        for (i, &v) in values.iter().enumerate() {
            if v < -1e-12 {
                return Err(CoreError::DensityNegative { value: v, index: i });
            }
            integral += w * w * v;
        }
        if (integral - 1.0).abs() > DENSITY_NORM_TOL {
            return Err(CoreError::DensityNotNormalized { integral });
        }
        Ok(Self {
            ell: frame.ell(),
            n,
            values,
        })
    }

    /// p(x, y) = p_a(x) p_b(y).
    pub fn product(a: &WrappedDensity, b: &WrappedDensity) -> Result<Self> {
        if a.len() != b.len() {
            return Err(CoreError::DimensionMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        let n = a.len();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(a.values()[i] * b.values()[j]);
            }
        }
        let frame = ModularFrame::new(a.ell())?;
        Self::from_values(&frame, n, values)
    }

    /// Perfectly correlated density p(x, y) = q(x) delta(x - y) on the grid.
    pub fn correlated_diagonal(q: &WrappedDensity) -> Result<Self> {
        let n = q.len();
        let w = q.ell() / n as f64;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = q.values()[i] / w;
        }
        let frame = ModularFrame::new(q.ell())?;
        Self::from_values(&frame, n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn weight(&self) -> f64 {
        self.ell / self.n as f64
    }

    fn check_normalized(&self) -> Result<()> {
        let w2 = self.weight() * self.weight();
        let integral: f64 = self.values.iter().map(|v| v * w2).sum();
        if (integral - 1.0).abs() > DENSITY_NORM_TOL {
            return Err(CoreError::DensityNotNormalized { integral });
        }
        Ok(())
    }
}

/// <A_0> = integral over one period of cos(2 pi xbar / l) p(xbar).
pub fn expectation_from_wrapped_density(density: &WrappedDensity) -> Result<f64> {
    density.check_normalized()?;
    let n = density.len();
    let w = density.weight();
    let mut acc = 0.0;
    for j in 0..n {
        let x = density.node(j);
        acc += w * density.values()[j] * (2.0 * std::f64::consts::PI * x / density.ell()).cos();
    }
    Ok(acc)
}

/// <A_0 B_0> = double integral of cos(2 pi x / l) cos(2 pi y / l) p(x, y).
pub fn correlation_from_joint_wrapped_density(joint: &JointWrappedDensity) -> Result<f64> {
    joint.check_normalized()?;
    let n = joint.n;
    let w = joint.weight();
    let two_pi = 2.0 * std::f64::consts::PI;
    let cosines: Vec<f64> = (0..n)
        .map(|j| (two_pi * (j as f64 * joint.ell / n as f64) / joint.ell).cos())
        .collect();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += w * w * joint.values[i * n + j] * cosines[i] * cosines[j];
        }
    }
    Ok(acc)
}

/// <e^{i 2 pi x / l}>; its real part is the A_0 expectation.
pub fn position_phase_expectation(density: &WrappedDensity) -> Result<C64> {
    density.check_normalized()?;
    let n = density.len();
    let w = density.weight();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        let phase = two_pi * density.node(j) / density.ell();
        acc += C64::new(phase.cos(), phase.sin()) * (w * density.values()[j]);
    }
    Ok(acc)
}
