//! Wrapped-Gaussian wavepackets and the tensor-grid quadrature behind the
//! Bell expectation.
//!
//! A packet is the modular-density model of a photon that went through a
//! diffraction grating: in modular position the density is a wrapped normal
//! on the full period [0, l) with its center in the reduced zone [0, l/2);
//! in modular momentum it is a Gaussian clipped to one period [0, h/l) and
//! renormalized there (the support convention of the state family).

use crate::error::{CoreError, Result};
use crate::modular::{ModularFrame, ModularPoint};

/// Standard deviation of the position density in units of `sigma_xbar`.
///
/// The violation-curve family is parameterized by the nominal width
/// `sigma_xbar`; its position density is the wrapped normal with standard
/// deviation `2 * sigma_xbar`. The momentum density uses `sigma_pbar`
/// directly.
pub const POSITION_DENSITY_WIDTH_SCALE: f64 = 2.0;

/// Internal reference resolution for normalizing the clipped momentum
/// factor in pointwise density evaluation.
const REFERENCE_NORM_RESOLUTION: usize = 4096;

/// Wrapped-Gaussian wavepacket (a_xbar, a_pbar, sigma_xbar, sigma_pbar).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularWavepacket {
    a_xbar: f64,
    a_pbar: f64,
    sigma_xbar: f64,
    sigma_pbar: f64,
}

impl ModularWavepacket {
    pub fn new(
        a_xbar: f64,
        a_pbar: f64,
        sigma_xbar: f64,
        sigma_pbar: f64,
        frame: &ModularFrame,
    ) -> Result<Self> {
        if !(0.0..frame.half_ell()).contains(&a_xbar) {
            return Err(CoreError::OutOfDomain {
                value: a_xbar,
                lo: 0.0,
                hi: frame.half_ell(),
            });
        }
        if !(0.0..frame.momentum_period()).contains(&a_pbar) {
            return Err(CoreError::OutOfDomain {
                value: a_pbar,
                lo: 0.0,
                hi: frame.momentum_period(),
            });
        }
        for (name, sigma) in [("sigma_xbar", sigma_xbar), ("sigma_pbar", sigma_pbar)] {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(CoreError::InvalidParameter {
                    name,
                    message: format!("width must be positive and finite, got {sigma}"),
                });
            }
        }
        Ok(Self {
            a_xbar,
            a_pbar,
            sigma_xbar,
            sigma_pbar,
        })
    }

    /// Builds a packet from dimensionless fractions: positions as fractions
    /// of l, momenta as fractions of h/l.
    pub fn from_fractions(
        ax_frac: f64,
        ap_frac: f64,
        sx_frac: f64,
        sp_frac: f64,
        frame: &ModularFrame,
    ) -> Result<Self> {
        Self::new(
            ax_frac * frame.ell(),
            ap_frac * frame.momentum_period(),
            sx_frac * frame.ell(),
            sp_frac * frame.momentum_period(),
            frame,
        )
    }

    pub fn a_xbar(&self) -> f64 {
        self.a_xbar
    }

    pub fn a_pbar(&self) -> f64 {
        self.a_pbar
    }

    pub fn sigma_xbar(&self) -> f64 {
        self.sigma_xbar
    }

    pub fn sigma_pbar(&self) -> f64 {
        self.sigma_pbar
    }

    pub fn with_a_xbar(mut self, a_xbar: f64, frame: &ModularFrame) -> Result<Self> {
        if !(0.0..frame.half_ell()).contains(&a_xbar) {
            return Err(CoreError::OutOfDomain {
                value: a_xbar,
                lo: 0.0,
                hi: frame.half_ell(),
            });
        }
        self.a_xbar = a_xbar;
        Ok(self)
    }

    pub fn with_a_pbar(mut self, a_pbar: f64, frame: &ModularFrame) -> Result<Self> {
        if !(0.0..frame.momentum_period()).contains(&a_pbar) {
            return Err(CoreError::OutOfDomain {
                value: a_pbar,
                lo: 0.0,
                hi: frame.momentum_period(),
            });
        }
        self.a_pbar = a_pbar;
        Ok(self)
    }

    pub fn with_sigma_xbar(mut self, sigma_xbar: f64) -> Result<Self> {
        if !(sigma_xbar > 0.0) || !sigma_xbar.is_finite() {
            return Err(CoreError::InvalidParameter {
                name: "sigma_xbar",
                message: format!("width must be positive and finite, got {sigma_xbar}"),
            });
        }
        self.sigma_xbar = sigma_xbar;
        Ok(self)
    }

    /// Normalized wrapped-normal position density at `xbar`, period l.
    /// Image terms are summed until the truncated tail is below 1e-14.
    pub fn position_density(&self, xbar: f64, frame: &ModularFrame) -> f64 {
        let ell = frame.ell();
        let s = POSITION_DENSITY_WIDTH_SCALE * self.sigma_xbar;
        let images = (8.0 * s / ell).ceil() as i64 + 2;
        let mut rho = 0.0;
        for k in -images..=images {
            let u = (xbar - self.a_xbar + k as f64 * ell) / s;
            rho += (-0.5 * u * u).exp();
        }
        rho / (s * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Unnormalized clipped-Gaussian momentum factor at `pbar`.
    pub(crate) fn momentum_kernel(&self, pbar: f64) -> f64 {
        let u = (pbar - self.a_pbar) / self.sigma_pbar;
        (-0.5 * u * u).exp()
    }

    /// Normalized momentum density on [0, h/l) (reference-grid norm).
    pub fn momentum_density(&self, pbar: f64, frame: &ModularFrame) -> f64 {
        let period = frame.momentum_period();
        let n = REFERENCE_NORM_RESOLUTION;
        let dp = period / n as f64;
        let mut norm = 0.0;
        for j in 0..=n {
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            norm += w * self.momentum_kernel(j as f64 * dp);
        }
        norm *= dp;
        self.momentum_kernel(pbar) / norm
    }

    /// Position density on a grid, up to a common positive factor.
    ///
    /// Exponents are shifted by the grid minimum before exponentiation so
    /// that near-delta packets whose tails underflow still produce the
    /// correct renormalized weights (the mass snaps onto the nearest node).
    pub(crate) fn position_density_grid(&self, nodes: &[f64], frame: &ModularFrame) -> Vec<f64> {
        let ell = frame.ell();
        let s = POSITION_DENSITY_WIDTH_SCALE * self.sigma_xbar;
        let images = (8.0 * s / ell).ceil() as i64 + 2;
        let exps: Vec<Vec<f64>> = nodes
            .iter()
            .map(|&x| {
                (-images..=images)
                    .map(|k| {
                        let u = (x - self.a_xbar + k as f64 * ell) / s;
                        0.5 * u * u
                    })
                    .collect()
            })
            .collect();
        let shift = exps
            .iter()
            .flat_map(|row| row.iter())
            .fold(f64::INFINITY, |m, &e| m.min(e));
        exps.iter()
            .map(|row| row.iter().map(|&e| (shift - e).exp()).sum())
            .collect()
    }

    /// Momentum kernel on a grid, up to a common positive factor
    /// (exponent-shifted like [`Self::position_density_grid`]).
    pub(crate) fn momentum_kernel_grid(&self, nodes: &[f64]) -> Vec<f64> {
        let exps: Vec<f64> = nodes
            .iter()
            .map(|&p| {
                let u = (p - self.a_pbar) / self.sigma_pbar;
                0.5 * u * u
            })
            .collect();
        let shift = exps.iter().fold(f64::INFINITY, |m, &e| m.min(e));
        exps.iter().map(|&e| (shift - e).exp()).collect()
    }
}

/// Joint packet density at a modular point.
pub fn wrapped_gaussian_density(
    packet: &ModularWavepacket,
    point: &ModularPoint,
    frame: &ModularFrame,
) -> f64 {
    packet.position_density(point.xbar, frame) * packet.momentum_density(point.pbar, frame)
}

/// Tensor quadrature grid for one party.
///
/// The position axis covers the full period [0, l) with equal trapezoid
/// weights (the integrand is smooth and periodic there, so the rule is
/// spectrally accurate); the momentum axis covers [0, h/l] with a closed
/// trapezoid whose endpoint half-weights cancel the antiperiodic boundary
/// terms of the cosine weight.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub resolution: usize,
    pub x_nodes: Vec<f64>,
    pub x_weight: f64,
    pub p_nodes: Vec<f64>,
    pub p_weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(frame: &ModularFrame, resolution: usize) -> Result<Self> {
        if !(8..=4096).contains(&resolution) {
            return Err(CoreError::InvalidParameter {
                name: "resolution",
                message: format!("resolution must be in [8, 4096], got {resolution}"),
            });
        }
        let ell = frame.ell();
        let period = frame.momentum_period();
        let x_nodes: Vec<f64> = (0..resolution)
            .map(|j| j as f64 * ell / resolution as f64)
            .collect();
        let x_weight = ell / resolution as f64;
        let p_nodes: Vec<f64> = (0..=resolution)
            .map(|j| j as f64 * period / resolution as f64)
            .collect();
        let dp = period / resolution as f64;
        let mut p_weights = vec![dp; resolution + 1];
        p_weights[0] *= 0.5;
        p_weights[resolution] *= 0.5;
        Ok(Self {
            resolution,
            x_nodes,
            x_weight,
            p_nodes,
            p_weights,
        })
    }
}

/// The two per-party 2D integrals of the factorized Bell expectation:
/// C = E[cos(2 pi xbar / l)] and D = E[cos(2 pi xbar / l - pbar l / 2)],
/// taken over the packet's joint modular density.
#[derive(Debug, Clone, Copy)]
pub struct PartyIntegrals {
    pub c: f64,
    pub d: f64,
}

impl PartyIntegrals {
    /// Grid quadrature with on-grid density renormalization.
    pub fn compute(
        packet: &ModularWavepacket,
        frame: &ModularFrame,
        grid: &QuadratureGrid,
    ) -> Self {
        let ell = frame.ell();
        let rho_x = packet.position_density_grid(&grid.x_nodes, frame);
        let x_mass: f64 = rho_x
            .iter()
            .map(|r| r * grid.x_weight)
            .sum();
        let rho_p = packet.momentum_kernel_grid(&grid.p_nodes);
        let p_mass: f64 = rho_p
            .iter()
            .zip(&grid.p_weights)
            .map(|(r, w)| r * w)
            .sum();

        let mut c = 0.0;
        let mut d = 0.0;
        for (i, &x) in grid.x_nodes.iter().enumerate() {
            let phase = 2.0 * std::f64::consts::PI * x / ell;
            let wx = grid.x_weight * rho_x[i] / x_mass;
            let cx = phase.cos();
            c += wx * cx;
            for (j, &p) in grid.p_nodes.iter().enumerate() {
                let wp = grid.p_weights[j] * rho_p[j] / p_mass;
                d += wx * wp * (phase - 0.5 * p * ell).cos();
            }
        }
        PartyIntegrals { c, d }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular::PLANCK_H;

    fn frame() -> ModularFrame {
        ModularFrame::default()
    }

    #[test]
    fn packet_validates_domains() {
        let f = frame();
        assert!(ModularWavepacket::new(0.6, 0.0, 0.1, 0.1, &f).is_err());
        assert!(ModularWavepacket::new(0.1, -1.0, 0.1, 0.1, &f).is_err());
        assert!(ModularWavepacket::new(0.1, 0.0, 0.0, 0.1, &f).is_err());
        assert!(ModularWavepacket::new(0.1, 0.0, 0.1, 0.1, &f).is_ok());
    }

    #[test]
    fn density_peaks_at_center() {
        let f = frame();
        let packet = ModularWavepacket::from_fractions(0.2, 0.3, 0.03, 0.05, &f).unwrap();
        let center = ModularPoint::new(packet.a_xbar(), packet.a_pbar(), &f).unwrap();
        let peak = wrapped_gaussian_density(&packet, &center, &f);
        for (dx, dp) in [(0.05, 0.0), (-0.05, 0.0), (0.0, 0.4), (0.0, -0.4)] {
            let point =
                ModularPoint::new(packet.a_xbar() + dx, packet.a_pbar() + dp, &f).unwrap();
            assert!(wrapped_gaussian_density(&packet, &point, &f) < peak);
        }
    }

    #[test]
    fn flat_wrap_limit_is_uniform() {
        // widths large against both periods: joint density -> 1/h
        let f = frame();
        let packet = ModularWavepacket::new(0.2, 1.0, 50.0, 500.0, &f).unwrap();
        let uniform = 1.0 / PLANCK_H;
        for (x, p) in [(0.0, 0.0), (0.3, 2.0), (0.9, 6.0)] {
            let point = ModularPoint::new(x, p, &f).unwrap();
            let rho = wrapped_gaussian_density(&packet, &point, &f);
            assert!(
                (rho - uniform).abs() < 1e-3 * uniform,
                "rho {rho} vs uniform {uniform}"
            );
        }
    }

    #[test]
    fn density_integrates_to_one_on_grid() {
        // quadrature self-test at a resolved, well-contained width
        let f = frame();
        let packet = ModularWavepacket::from_fractions(0.1, 0.5, 0.05, 0.05, &f).unwrap();
        let grid = QuadratureGrid::new(&f, 512).unwrap();
        let mut total = 0.0;
        for &x in &grid.x_nodes {
            let rho_x = packet.position_density(x, &f);
            for (j, &p) in grid.p_nodes.iter().enumerate() {
                total += grid.x_weight
                    * grid.p_weights[j]
                    * rho_x
                    * packet.momentum_density(p, &f);
            }
        }
        assert!((total - 1.0).abs() < 1e-10, "integral {total}");
    }

    #[test]
    fn position_density_is_periodic_and_normalized() {
        let f = frame();
        let packet = ModularWavepacket::from_fractions(0.4, 0.0, 0.08, 1e-4, &f).unwrap();
        let a = packet.position_density(0.05, &f);
        let b = packet.position_density(0.05 + 1.0, &f);
        assert!((a - b).abs() < 1e-12 * a.max(1.0));
        // analytic normalization of the wrapped normal
        let n = 20_000;
        let mut total = 0.0;
        for j in 0..n {
            total += packet.position_density(j as f64 / n as f64, &f) / n as f64;
        }
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn party_integrals_near_delta_snap_to_center_weights() {
        let f = frame();
        let grid = QuadratureGrid::new(&f, 64).unwrap();
        // center on a grid node: C -> cos(2 pi a), D -> same at a_p = 0
        let a = 8.0 / 64.0;
        let packet = ModularWavepacket::new(a, 0.0, 1e-4, 1e-4 * f.momentum_period(), &f)
            .unwrap();
        let ints = PartyIntegrals::compute(&packet, &f, &grid);
        let expected = (2.0 * std::f64::consts::PI * a).cos();
        assert!((ints.c - expected).abs() < 1e-9, "{} vs {expected}", ints.c);
        assert!((ints.d - expected).abs() < 1e-9);
    }

    #[test]
    fn party_integrals_match_characteristic_function() {
        // resolved widths, center away from edges: C = e^{-(2 pi s)^2/2} cos(2 pi a)
        // with s the density std (dense-summation oracle is the analytic CF)
        let f = frame();
        let grid = QuadratureGrid::new(&f, 256).unwrap();
        let sx = 0.03;
        let a = 0.2;
        let packet = ModularWavepacket::new(a, 0.0, sx, 1e-4 * f.momentum_period(), &f)
            .unwrap();
        let ints = PartyIntegrals::compute(&packet, &f, &grid);
        let s = POSITION_DENSITY_WIDTH_SCALE * sx;
        let two_pi = 2.0 * std::f64::consts::PI;
        let expected = (-0.5 * (two_pi * s).powi(2)).exp() * (two_pi * a).cos();
        assert!(
            (ints.c - expected).abs() < 1e-12,
            "{} vs {expected}",
            ints.c
        );
    }
}
