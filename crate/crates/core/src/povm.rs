//! Binary POVMs from bounded observables, correlations, joint
//! probabilities, the CHSH combination, and outcome sampling.
//!
//! The measurement model: any Hermitian observable with spectrum inside
//! [-1, 1] defines a two-outcome POVM E_pm = (1 pm A)/2, so its expectation
//! value is a binary statistic P_+ - P_- without any binning step.

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::linalg::{self, CMat, CVec};
use crate::sampling::Stream;

/// Elementwise Hermiticity / completeness tolerance.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Spectrum-bound tolerance for [-1, 1] membership.
pub const SPECTRUM_TOL: f64 = 1e-10;
/// Eigenvalues down to -POSITIVITY_TOL count as positive.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Finite Hermitian operator with spectrum inside [-1, 1].
///
/// Observables with eigenvalues outside the unit range are rejected, not
/// rescaled; rescaling would silently change every CHSH value built from
/// them. Use [`DiscreteObservable::rescale_to_unit_spectrum`] when a
/// rescaled operator is actually wanted.
#[derive(Debug, Clone)]
pub struct DiscreteObservable {
    entries: CMat,
}

impl DiscreteObservable {
    pub fn new(entries: CMat) -> Result<Self> {
        linalg::require_hermitian(&entries, HERMITICITY_TOL)?;
        let vals = linalg::eigvalsh(&entries);
        for &v in &vals {
            if v < -1.0 - SPECTRUM_TOL || v > 1.0 + SPECTRUM_TOL {
                return Err(CoreError::SpectrumOutOfRange { value: v });
            }
        }
        Ok(Self { entries })
    }

    pub fn from_diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut m = CMat::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.entries)
    }
}

/// Rescales a Hermitian operator by its spectral radius so the result fits
/// in [-1, 1]. Companion to the strict constructor above.
pub fn rescale_to_unit_spectrum(entries: &CMat) -> Result<DiscreteObservable> {
    linalg::require_hermitian(entries, HERMITICITY_TOL)?;
    let vals = linalg::eigvalsh(entries);
    let radius = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if radius == 0.0 {
        return Err(CoreError::DegenerateSpectrum);
    }
    DiscreteObservable::new(entries / C64::new(radius, 0.0))
}

/// Dense unitary operator.
#[derive(Debug, Clone)]
pub struct UnitaryOperator {
    entries: CMat,
}

impl UnitaryOperator {
    pub fn new(entries: CMat) -> Result<Self> {
        linalg::require_unitary(&entries, HERMITICITY_TOL)?;
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }
}

/// Two-effect POVM {E_+, E_-} with E_+ + E_- = 1 and both effects positive.
#[derive(Debug, Clone)]
pub struct BinaryPOVM {
    e_plus: CMat,
    e_minus: CMat,
}

impl BinaryPOVM {
    pub fn new(e_plus: CMat, e_minus: CMat) -> Result<Self> {
        linalg::require_hermitian(&e_plus, HERMITICITY_TOL)?;
        linalg::require_hermitian(&e_minus, HERMITICITY_TOL)?;
        if e_plus.nrows() != e_minus.nrows() {
            return Err(CoreError::DimensionMismatch {
                left: e_plus.nrows(),
                right: e_minus.nrows(),
            });
        }
        let n = e_plus.nrows();
        let completeness = (&e_plus + &e_minus - CMat::identity(n, n)).norm();
        if completeness > HERMITICITY_TOL * n as f64 {
            return Err(CoreError::InvalidParameter {
                name: "completeness",
                message: format!("E_+ + E_- differs from identity by {completeness:.3e}"),
            });
        }
        for effect in [&e_plus, &e_minus] {
            let min = linalg::min_eigenvalue(effect);
            if min < -POSITIVITY_TOL {
                return Err(CoreError::NotPositive {
                    min_eigenvalue: min,
                });
            }
        }
        Ok(Self { e_plus, e_minus })
    }

    pub fn e_plus(&self) -> &CMat {
        &self.e_plus
    }

    pub fn e_minus(&self) -> &CMat {
        &self.e_minus
    }

    pub fn dim(&self) -> usize {
        self.e_plus.nrows()
    }
}

/// E_pm = (1 pm A)/2.
///
/// ```
/// use chsh_core::povm::{povm_from_observable, DiscreteObservable};
///
/// let a = DiscreteObservable::from_diagonal(&[1.0, -1.0])?;
/// let povm = povm_from_observable(&a)?;
/// assert_eq!(povm.e_plus()[(0, 0)].re, 1.0); // projective limit
/// # Ok::<(), chsh_core::CoreError>(())
/// ```
pub fn povm_from_observable(a: &DiscreteObservable) -> Result<BinaryPOVM> {
    let n = a.dim();
    let eye = CMat::identity(n, n);
    let half = C64::new(0.5, 0.0);
    BinaryPOVM::new((&eye + a.entries()) * half, (&eye - a.entries()) * half)
}

/// E_pm = (1 pm D^H)(1 pm D)/4; equals `povm_from_observable((D + D^H)/2)`
/// for unitary D.
pub fn povm_from_unitary(d: &UnitaryOperator) -> Result<BinaryPOVM> {
    let n = d.dim();
    let eye = CMat::identity(n, n);
    let quarter = C64::new(0.25, 0.0);
    let dm = d.entries();
    let e_plus = (&eye + dm.adjoint()) * (&eye + dm) * quarter;
    let e_minus = (&eye - dm.adjoint()) * (&eye - dm) * quarter;
    BinaryPOVM::new(e_plus, e_minus)
}

/// A = (D + D^H)/2; unitarity puts the spectrum inside [-1, 1] automatically.
pub fn observable_from_unitary(d: &UnitaryOperator) -> Result<DiscreteObservable> {
    let a = (d.entries() + d.entries().adjoint()) * C64::new(0.5, 0.0);
    DiscreteObservable::new(a)
}

/// Two-level observable with eigenvalues cos(theta + (-1)^j pi/2), j = 0, 1,
/// i.e. diag(-sin theta, sin theta). With `normalized` the spectrum is
/// rescaled to +-1, recovering a Pauli operator.
pub fn two_level_observable(theta: f64, normalized: bool) -> Result<DiscreteObservable> {
    let lam0 = (theta + std::f64::consts::FRAC_PI_2).cos();
    let lam1 = (theta - std::f64::consts::FRAC_PI_2).cos();
    if normalized {
        let s = theta.sin();
        if s.abs() < 1e-14 {
            return Err(CoreError::DegenerateSpectrum);
        }
        DiscreteObservable::from_diagonal(&[lam0 / s.abs(), lam1 / s.abs()])
    } else {
        DiscreteObservable::from_diagonal(&[lam0, lam1])
    }
}

/// Bipartite quantum state, as a vector or a density matrix.
#[derive(Debug, Clone)]
pub enum StateRepr {
    Vector(CVec),
    Density(CMat),
}

#[derive(Debug, Clone)]
pub struct BipartiteState {
    dim_a: usize,
    dim_b: usize,
    repr: StateRepr,
}

impl BipartiteState {
    pub fn from_vector(dim_a: usize, dim_b: usize, v: CVec) -> Result<Self> {
        if v.len() != dim_a * dim_b {
            return Err(CoreError::DimensionMismatch {
                left: v.len(),
                right: dim_a * dim_b,
            });
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > HERMITICITY_TOL {
            return Err(CoreError::NotNormalized { norm });
        }
        Ok(Self {
            dim_a,
            dim_b,
            repr: StateRepr::Vector(v),
        })
    }

    pub fn from_density(dim_a: usize, dim_b: usize, rho: CMat) -> Result<Self> {
        let d = dim_a * dim_b;
        if rho.nrows() != d || rho.ncols() != d {
            return Err(CoreError::DimensionMismatch {
                left: rho.nrows(),
                right: d,
            });
        }
        linalg::require_hermitian(&rho, HERMITICITY_TOL)?;
        let trace: f64 = (0..d).map(|i| rho[(i, i)].re).sum();
        if (trace - 1.0).abs() > HERMITICITY_TOL * d as f64 {
            return Err(CoreError::NotNormalized { norm: trace });
        }
        let min = linalg::min_eigenvalue(&rho);
        if min < -POSITIVITY_TOL {
            return Err(CoreError::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(Self {
            dim_a,
            dim_b,
            repr: StateRepr::Density(rho),
        })
    }

    /// The singlet (|01> - |10>)/sqrt(2).
    pub fn singlet() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = CVec::from_vec(vec![
            C64::new(0.0, 0.0),
            C64::new(s, 0.0),
            C64::new(-s, 0.0),
            C64::new(0.0, 0.0),
        ]);
        Self {
            dim_a: 2,
            dim_b: 2,
            repr: StateRepr::Vector(v),
        }
    }

    /// Maximally mixed state on dim_a x dim_b.
    pub fn maximally_mixed(dim_a: usize, dim_b: usize) -> Self {
        let d = dim_a * dim_b;
        let rho = CMat::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
        Self {
            dim_a,
            dim_b,
            repr: StateRepr::Density(rho),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    /// <M> for a full-space operator M (dimension dim_a * dim_b).
    pub fn expectation(&self, m: &CMat) -> f64 {
        match &self.repr {
            StateRepr::Vector(v) => {
                let mv = m * v;
                v.dotc(&mv).re
            }
            StateRepr::Density(rho) => {
                let prod = rho * m;
                (0..prod.nrows()).map(|i| prod[(i, i)].re).sum()
            }
        }
    }

    fn check_dims(&self, a: &DiscreteObservable, b: &DiscreteObservable) -> Result<()> {
        if a.dim() != self.dim_a {
            return Err(CoreError::DimensionMismatch {
                left: a.dim(),
                right: self.dim_a,
            });
        }
        if b.dim() != self.dim_b {
            return Err(CoreError::DimensionMismatch {
                left: b.dim(),
                right: self.dim_b,
            });
        }
        Ok(())
    }
}

/// <A (x) B>.
pub fn correlation(
    state: &BipartiteState,
    a: &DiscreteObservable,
    b: &DiscreteObservable,
) -> Result<f64> {
    state.check_dims(a, b)?;
    let full = a.entries().kronecker(b.entries());
    Ok(state.expectation(&full))
}

/// Single-party expectations <A (x) 1> and <1 (x) B>.
pub fn marginal_expectations(
    state: &BipartiteState,
    a: &DiscreteObservable,
    b: &DiscreteObservable,
) -> Result<(f64, f64)> {
    state.check_dims(a, b)?;
    let eye_a = CMat::identity(state.dim_a, state.dim_a);
    let eye_b = CMat::identity(state.dim_b, state.dim_b);
    let ma = a.entries().kronecker(&eye_b);
    let mb = eye_a.kronecker(b.entries());
    Ok((state.expectation(&ma), state.expectation(&mb)))
}

/// Joint outcome probabilities P_{k,l}, k, l = +-1.
///
/// Entries may be microscopically negative from rounding; they are reported
/// as computed and only clamped inside [`sample_outcomes`].
#[derive(Debug, Clone, Copy)]
pub struct JointProbs {
    /// p[i][j] with index 0 = outcome +, 1 = outcome -.
    pub p: [[f64; 2]; 2],
}

pub const JOINT_PROB_TOL: f64 = 1e-10;

impl JointProbs {
    pub fn validate(&self) -> Result<()> {
        let mut sum = 0.0;
        for row in &self.p {
            for &v in row {
                if !(-JOINT_PROB_TOL..=1.0 + JOINT_PROB_TOL).contains(&v) {
                    return Err(CoreError::InvalidParameter {
                        name: "joint_probs",
                        message: format!("entry {v} outside [0, 1]"),
                    });
                }
                sum += v;
            }
        }
        if (sum - 1.0).abs() > JOINT_PROB_TOL {
            return Err(CoreError::NotNormalized { norm: sum });
        }
        Ok(())
    }

    /// E = P_{++} + P_{--} - P_{+-} - P_{-+}.
    pub fn correlation(&self) -> f64 {
        self.p[0][0] + self.p[1][1] - self.p[0][1] - self.p[1][0]
    }

    /// Marginals (P_+^a, P_+^b).
    pub fn marginals_plus(&self) -> (f64, f64) {
        (self.p[0][0] + self.p[0][1], self.p[0][0] + self.p[1][0])
    }
}

/// P_{k,l} = (1 + k<A> + l<B> + kl<AB>)/4.
pub fn joint_probs(
    state: &BipartiteState,
    a: &DiscreteObservable,
    b: &DiscreteObservable,
) -> Result<JointProbs> {
    let (ea, eb) = marginal_expectations(state, a, b)?;
    let eab = correlation(state, a, b)?;
    let mut p = [[0.0; 2]; 2];
    for (i, k) in [(0usize, 1.0f64), (1, -1.0)] {
        for (j, l) in [(0usize, 1.0f64), (1, -1.0)] {
            p[i][j] = 0.25 * (1.0 + k * ea + l * eb + k * l * eab);
        }
    }
    let probs = JointProbs { p };
    probs.validate()?;
    Ok(probs)
}

/// CHSH combination E(a1,b1) + E(a1,b2) + E(a2,b1) - E(a2,b2).
pub fn chsh(
    state: &BipartiteState,
    a1: &DiscreteObservable,
    a2: &DiscreteObservable,
    b1: &DiscreteObservable,
    b2: &DiscreteObservable,
) -> Result<f64> {
    Ok(correlation(state, a1, b1)?
        + correlation(state, a1, b2)?
        + correlation(state, a2, b1)?
        - correlation(state, a2, b2)?)
}

/// 2x2 table of outcome counts, indexed like [`JointProbs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub counts: [[u64; 2]; 2],
}

impl OutcomeCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Empirical correlation estimate.
    pub fn correlation(&self) -> f64 {
        let n = self.total() as f64;
        (self.counts[0][0] as f64 + self.counts[1][1] as f64
            - self.counts[0][1] as f64
            - self.counts[1][0] as f64)
            / n
    }
}

/// Draws `shots` outcomes from `probs`. Negative rounding noise is clamped
/// to zero here and only here. Keyed by (seed, shot index): reproducible,
/// and shot ranges can be split across workers without changing results.
pub fn sample_outcomes(probs: &JointProbs, shots: u64, seed: u64) -> OutcomeCounts {
    sample_outcomes_stream(probs, shots, Stream::new(seed, 0))
}

pub(crate) fn sample_outcomes_stream(
    probs: &JointProbs,
    shots: u64,
    stream: Stream,
) -> OutcomeCounts {
    let flat = [
        probs.p[0][0].max(0.0),
        probs.p[0][1].max(0.0),
        probs.p[1][0].max(0.0),
        probs.p[1][1].max(0.0),
    ];
    let total: f64 = flat.iter().sum();
    let mut cdf = [0.0; 4];
    let mut acc = 0.0;
    for (i, &f) in flat.iter().enumerate() {
        acc += f / total;
        cdf[i] = acc;
    }
    cdf[3] = 1.0;
    let mut counts = [[0u64; 2]; 2];
    for shot in 0..shots {
        let k = stream.categorical(shot, &cdf);
        counts[k / 2][k % 2] += 1;
    }
    OutcomeCounts { counts }
}

/// sigma_z, sigma_x, sigma_y as observables (handy for tests and audits).
pub fn pauli_z() -> DiscreteObservable {
    DiscreteObservable::from_diagonal(&[1.0, -1.0]).expect("pauli z")
}

pub fn pauli_x() -> DiscreteObservable {
    let mut m = CMat::zeros(2, 2);
    m[(0, 1)] = C64::new(1.0, 0.0);
    m[(1, 0)] = C64::new(1.0, 0.0);
    DiscreteObservable::new(m).expect("pauli x")
}

pub fn pauli_y() -> DiscreteObservable {
    let mut m = CMat::zeros(2, 2);
    m[(0, 1)] = C64::new(0.0, -1.0);
    m[(1, 0)] = C64::new(0.0, 1.0);
    DiscreteObservable::new(m).expect("pauli y")
}

/// cos(theta) sigma_z + sin(theta) sigma_x.
pub fn rotated_observable(theta: f64) -> DiscreteObservable {
    let mut m = CMat::zeros(2, 2);
    m[(0, 0)] = C64::new(theta.cos(), 0.0);
    m[(1, 1)] = C64::new(-theta.cos(), 0.0);
    m[(0, 1)] = C64::new(theta.sin(), 0.0);
    m[(1, 0)] = C64::new(theta.sin(), 0.0);
    DiscreteObservable::new(m).expect("rotated observable")
}
