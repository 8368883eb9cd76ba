//! Modular-variables engine.
//!
//! Position and momentum split as x = xbar + N l and p = pbar + M h/l with
//! xbar in [0, l) and pbar in [0, h/l). The modular pair commutes, so the
//! pointwise structure on each (xbar, pbar) fiber is a qubit spanned by
//! |{xbar, pbar}> and |{xbar + l/2, pbar}>; the Bell operator acts there as
//! a weighted combination of sigma_z and sigma_y blocks.
//!
//! Internal units: hbar = 1, so h = 2 pi and the momentum period is 2 pi / l.

mod bell;
mod density;
mod packet;

pub use bell::{
    bell_expectation, bell_expectation_bruteforce, delta_limit_bell, sweep_ax,
    violation_threshold, BellValue, SweepResult, SweepRow, ThresholdResult,
    BRUTEFORCE_NODE_BUDGET, QUADRATURE_CONVERGENCE_TOL,
};
pub use density::{
    correlation_from_joint_wrapped_density, expectation_from_wrapped_density,
    position_phase_expectation, JointWrappedDensity, WrappedDensity,
};
pub use packet::{
    wrapped_gaussian_density, ModularWavepacket, PartyIntegrals, QuadratureGrid,
    POSITION_DENSITY_WIDTH_SCALE,
};

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::linalg::{self, CMat};

/// Planck constant in internal units (hbar = 1).
pub const PLANCK_H: f64 = 2.0 * std::f64::consts::PI;

/// Length scale of the modular split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularFrame {
    ell: f64,
}

impl ModularFrame {
    pub fn new(ell: f64) -> Result<Self> {
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(CoreError::InvalidParameter {
                name: "ell",
                message: format!("length scale must be positive and finite, got {ell}"),
            });
        }
        Ok(Self { ell })
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// Momentum period h / l.
    pub fn momentum_period(&self) -> f64 {
        PLANCK_H / self.ell
    }

    /// Half of the position period; centers of Bell-block points live here.
    pub fn half_ell(&self) -> f64 {
        0.5 * self.ell
    }
}

impl Default for ModularFrame {
    fn default() -> Self {
        Self { ell: 1.0 }
    }
}

/// x = xbar + n l with xbar in [0, l).
pub fn wrap_position(x: f64, frame: &ModularFrame) -> (f64, i64) {
    let ell = frame.ell();
    let n = (x / ell).floor();
    let mut xbar = x - n * ell;
    // guard the half-open interval against rounding at the top edge
    if xbar >= ell {
        xbar -= ell;
        return (xbar, n as i64 + 1);
    }
    (xbar, n as i64)
}

/// p = pbar + m (h/l) with pbar in [0, h/l).
pub fn wrap_momentum(p: f64, frame: &ModularFrame) -> (f64, i64) {
    let period = frame.momentum_period();
    let m = (p / period).floor();
    let mut pbar = p - m * period;
    if pbar >= period {
        pbar -= period;
        return (pbar, m as i64 + 1);
    }
    (pbar, m as i64)
}

/// A point of the joint modular spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularPoint {
    pub xbar: f64,
    pub pbar: f64,
}

impl ModularPoint {
    /// Point with xbar in [0, l) and pbar in [0, h/l).
    pub fn new(xbar: f64, pbar: f64, frame: &ModularFrame) -> Result<Self> {
        if !(0.0..frame.ell()).contains(&xbar) {
            return Err(CoreError::OutOfDomain {
                value: xbar,
                lo: 0.0,
                hi: frame.ell(),
            });
        }
        if !(0.0..frame.momentum_period()).contains(&pbar) {
            return Err(CoreError::OutOfDomain {
                value: pbar,
                lo: 0.0,
                hi: frame.momentum_period(),
            });
        }
        Ok(Self { xbar, pbar })
    }

    /// Point restricted to the reduced zone xbar in [0, l/2).
    pub fn reduced(xbar: f64, pbar: f64, frame: &ModularFrame) -> Result<Self> {
        let point = Self::new(xbar, pbar, frame)?;
        if xbar >= frame.half_ell() {
            return Err(CoreError::OutOfDomain {
                value: xbar,
                lo: 0.0,
                hi: frame.half_ell(),
            });
        }
        Ok(point)
    }
}

/// sigma_z and sigma_y in the ordered fiber basis
/// (|{xbar, pbar}>, |{xbar + l/2, pbar}>).
pub fn sigma_blocks() -> (CMat, CMat) {
    let mut sz = CMat::zeros(2, 2);
    sz[(0, 0)] = C64::new(1.0, 0.0);
    sz[(1, 1)] = C64::new(-1.0, 0.0);
    let mut sy = CMat::zeros(2, 2);
    sy[(0, 1)] = C64::new(0.0, -1.0);
    sy[(1, 0)] = C64::new(0.0, 1.0);
    (sz, sy)
}

/// Pointwise weights of the two observables:
/// c = cos(2 pi xbar / l) for the sigma_z block,
/// d = cos(2 pi xbar / l - pbar l / 2) for the sigma_y block (hbar = 1).
pub fn block_weights(xbar: f64, pbar: f64, frame: &ModularFrame) -> (f64, f64) {
    let phase = 2.0 * std::f64::consts::PI * xbar / frame.ell();
    let c = phase.cos();
    let d = (phase - 0.5 * pbar * frame.ell()).cos();
    (c, d)
}

/// 4x4 pointwise Bell operator at a pair of modular points, with its weights.
#[derive(Debug, Clone)]
pub struct BellBlock {
    pub point_a: ModularPoint,
    pub point_b: ModularPoint,
    pub c_a: f64,
    pub d_a: f64,
    pub c_b: f64,
    pub d_b: f64,
    matrix: CMat,
}

impl BellBlock {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.matrix)
    }
}

/// Builds the pointwise Bell operator
/// c_a c_b sz(x)sz + c_a d_b sz(x)sy + d_a c_b sy(x)sz - d_a d_b sy(x)sy
/// in the basis {|{xbar_a + i l/2, pbar_a}> (x) |{xbar_b + j l/2, pbar_b}>}.
/// Both xbar coordinates must lie in the reduced zone [0, l/2).
pub fn bell_block(
    point_a: ModularPoint,
    point_b: ModularPoint,
    frame: &ModularFrame,
) -> Result<BellBlock> {
    for point in [&point_a, &point_b] {
        if !(0.0..frame.half_ell()).contains(&point.xbar) {
            return Err(CoreError::OutOfDomain {
                value: point.xbar,
                lo: 0.0,
                hi: frame.half_ell(),
            });
        }
    }
    let (c_a, d_a) = block_weights(point_a.xbar, point_a.pbar, frame);
    let (c_b, d_b) = block_weights(point_b.xbar, point_b.pbar, frame);
    let matrix = bell_matrix_from_weights(c_a, d_a, c_b, d_b);
    Ok(BellBlock {
        point_a,
        point_b,
        c_a,
        d_a,
        c_b,
        d_b,
        matrix,
    })
}

pub(crate) fn bell_matrix_from_weights(c_a: f64, d_a: f64, c_b: f64, d_b: f64) -> CMat {
    let (sz, sy) = sigma_blocks();
    let zz = sz.kronecker(&sz);
    let zy = sz.kronecker(&sy);
    let yz = sy.kronecker(&sz);
    let yy = sy.kronecker(&sy);
    zz * C64::new(c_a * c_b, 0.0)
        + zy * C64::new(c_a * d_b, 0.0)
        + yz * C64::new(d_a * c_b, 0.0)
        - yy * C64::new(d_a * d_b, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Amplitudes of |psi_pm> = (1, pm i(sqrt2 mp 1), pm i(sqrt2 mp 1), 1) / N_pm
/// with N_pm = 2 (2 mp sqrt2)^{1/2}, in basis ordering (00, 01, 10, 11).
/// At both-party origin points these are the eigenvectors of the Bell block
/// with eigenvalues pm 2 sqrt 2.
pub fn psi_amplitudes(sign: Sign) -> [C64; 4] {
    let sqrt2 = std::f64::consts::SQRT_2;
    let (cross, norm) = match sign {
        Sign::Plus => (sqrt2 - 1.0, 2.0 * (2.0 - sqrt2).sqrt()),
        Sign::Minus => (-(sqrt2 + 1.0), 2.0 * (2.0 + sqrt2).sqrt()),
    };
    let one = C64::new(1.0 / norm, 0.0);
    let mid = C64::new(0.0, cross / norm);
    [one, mid, mid, one]
}

/// Contractions <psi_+| s_i (x) s_j |psi_+> for (i, j) in
/// (zz, zy, yz, yy) order; these are the constant weights of the factorized
/// Bell expectation.
pub fn psi_sigma_contractions() -> [f64; 4] {
    let psi = psi_amplitudes(Sign::Plus);
    let (sz, sy) = sigma_blocks();
    let mats = [
        sz.kronecker(&sz),
        sz.kronecker(&sy),
        sy.kronecker(&sz),
        sy.kronecker(&sy),
    ];
    let mut out = [0.0; 4];
    for (k, m) in mats.iter().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                acc += psi[i].conj() * m[(i, j)] * psi[j];
            }
        }
        out[k] = acc.re;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

    fn frame() -> ModularFrame {
        ModularFrame::default()
    }

    #[test]
    fn wrap_position_cases() {
        let f = frame();
        assert_eq!(wrap_position(0.0, &f), (0.0, 0));
        let (x, n) = wrap_position(2.5, &f);
        assert!((x - 0.5).abs() < 1e-15);
        assert_eq!(n, 2);
        // floor-division oracle for a negative coordinate
        let (x, n) = wrap_position(-0.25, &f);
        assert!((x - 0.75).abs() < 1e-15);
        assert_eq!(n, -1);
    }

    #[test]
    fn wrap_momentum_cases() {
        let f = frame();
        let period = f.momentum_period();
        let (p, m) = wrap_momentum(2.5 * period, &f);
        assert!((p - 0.5 * period).abs() < 1e-12);
        assert_eq!(m, 2);
    }

    #[test]
    fn sigma_block_spectra_and_commutator() {
        let (sz, sy) = sigma_blocks();
        let ez = linalg::eigvalsh(&sz);
        let ey = linalg::eigvalsh(&sy);
        assert!((ez[0] + 1.0).abs() < 1e-14 && (ez[1] - 1.0).abs() < 1e-14);
        assert!((ey[0] + 1.0).abs() < 1e-14 && (ey[1] - 1.0).abs() < 1e-14);
        // [sz, sy] = -2i sx, by direct 2x2 arithmetic
        let comm = &sz * &sy - &sy * &sz;
        assert!((comm[(0, 1)] - C64::new(0.0, -2.0)).norm() < 1e-15);
        assert!((comm[(1, 0)] - C64::new(0.0, -2.0)).norm() < 1e-15);
        assert!(comm[(0, 0)].norm() < 1e-15 && comm[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn bell_block_origin_eigensystem() {
        let f = frame();
        let origin = ModularPoint::reduced(0.0, 0.0, &f).unwrap();
        let block = bell_block(origin, origin, &f).unwrap();
        let vals = block.eigenvalues();
        let want = [-2.0 * SQRT_2, 0.0, 0.0, 2.0 * SQRT_2];
        for (v, w) in vals.iter().zip(want.iter()) {
            assert!((v - w).abs() < 1e-12, "{v} vs {w}");
        }
    }

    #[test]
    fn bell_block_vanishes_at_quarter_period() {
        let f = frame();
        let quarter = ModularPoint::reduced(0.25, 0.0, &f).unwrap();
        let origin = ModularPoint::reduced(0.0, 0.0, &f).unwrap();
        let block = bell_block(quarter, origin, &f).unwrap();
        assert!(block.c_a.abs() < 1e-15);
        assert!(block.d_a.abs() < 1e-15);
        assert!(block.matrix().norm() < 1e-14);
    }

    #[test]
    fn bell_block_pure_zz_when_momentum_kills_d() {
        // pbar l / 2 = pi/2 makes d = cos(0 - pi/2) = 0 at xbar = 0
        let f = frame();
        let pbar = PI; // pbar * l / 2 = pi/2 for l = 1
        let point = ModularPoint::reduced(0.0, pbar, &f).unwrap();
        let block = bell_block(point, point, &f).unwrap();
        assert!(block.d_a.abs() < 1e-15);
        // matrix = sz (x) sz: diagonal with entries (1, -1, -1, 1)
        let vals = block.eigenvalues();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[3] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bell_block_rejects_points_outside_reduced_zone() {
        let f = frame();
        let outside = ModularPoint::new(0.7, 0.0, &f).unwrap();
        let origin = ModularPoint::reduced(0.0, 0.0, &f).unwrap();
        assert!(bell_block(outside, origin, &f).is_err());
    }

    #[test]
    fn psi_amplitudes_are_unit_eigenvectors() {
        let f = frame();
        let origin = ModularPoint::reduced(0.0, 0.0, &f).unwrap();
        let block = bell_block(origin, origin, &f).unwrap();
        for (sign, lambda) in [(Sign::Plus, 2.0 * SQRT_2), (Sign::Minus, -2.0 * SQRT_2)] {
            let psi = psi_amplitudes(sign);
            let norm2: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
            assert!((norm2 - 1.0).abs() < 1e-14);
            // residual of the eigenvalue equation
            let m = block.matrix();
            for i in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..4 {
                    acc += m[(i, j)] * psi[j];
                }
                assert!(
                    (acc - psi[i] * C64::new(lambda, 0.0)).norm() < 1e-12,
                    "row {i} residual"
                );
            }
        }
    }

    #[test]
    fn psi_contractions_reference_values() {
        // 4-amplitude contraction oracle: all three mixed contractions are
        // 1/sqrt2 and the yy one is -1/sqrt2
        let w = psi_sigma_contractions();
        assert!((w[0] - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((w[1] - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((w[2] - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((w[3] + FRAC_1_SQRT_2).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        /// x = xbar + n l with xbar in [0, l), for any frame scale.
        #[test]
        fn wrap_position_roundtrip(x in -1e3f64..1e3, ell in 0.1f64..10.0) {
            let f = ModularFrame::new(ell).unwrap();
            let (xbar, n) = wrap_position(x, &f);
            prop_assert!((0.0..ell).contains(&xbar));
            prop_assert!((xbar + n as f64 * ell - x).abs() < 1e-9 * (1.0 + x.abs()));
        }

        /// Bell-block eigenvalues never leave [-2 sqrt 2, 2 sqrt 2].
        #[test]
        fn block_eigenvalues_bounded(
            xa in 0.0f64..0.499, pa in 0.0f64..6.28,
            xb in 0.0f64..0.499, pb in 0.0f64..6.28,
        ) {
            let f = ModularFrame::default();
            let a = ModularPoint::reduced(xa, pa, &f).unwrap();
            let b = ModularPoint::reduced(xb, pb, &f).unwrap();
            let block = bell_block(a, b, &f).unwrap();
            for v in block.eigenvalues() {
                prop_assert!(v.abs() <= 2.0 * SQRT_2 + 1e-12);
            }
        }
    }
}
