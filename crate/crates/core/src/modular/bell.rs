//! Bell expectation over wavepacket pairs: factorized fast path, 4D
//! brute-force oracle, delta-limit closed form, sweeps, and the
//! violation-threshold search.

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::modular::packet::{ModularWavepacket, PartyIntegrals, QuadratureGrid};
use crate::modular::{bell_matrix_from_weights, block_weights, psi_amplitudes, Sign};
use crate::modular::{psi_sigma_contractions, ModularFrame};

/// Resolution doubling must move the result by less than this.
pub const QUADRATURE_CONVERGENCE_TOL: f64 = 5e-4;

/// Node budget per axis for the 4D brute-force quadrature.
pub const BRUTEFORCE_NODE_BUDGET: usize = 48;

/// Golden-section iterations for the inner maximization.
const GOLDEN_ITERS: usize = 60;

/// Coarse grid size for the inner maximization over a_xbar.
const INNER_MAX_COARSE_POINTS: usize = 64;

#[derive(Debug, Clone, Copy)]
pub struct BellValue {
    pub value: f64,
    /// value(2 * resolution) - value(resolution).
    pub convergence_delta: f64,
    pub resolution: usize,
}

fn factorized_value(
    packet_a: &ModularWavepacket,
    packet_b: &ModularWavepacket,
    frame: &ModularFrame,
    resolution: usize,
) -> Result<f64> {
    let grid = QuadratureGrid::new(frame, resolution)?;
    let a = PartyIntegrals::compute(packet_a, frame, &grid);
    let b = if packet_a == packet_b {
        a
    } else {
        PartyIntegrals::compute(packet_b, frame, &grid)
    };
    let [w_zz, w_zy, w_yz, w_yy] = psi_sigma_contractions();
    Ok(w_zz * a.c * b.c + w_zy * a.c * b.d + w_yz * a.d * b.c - w_yy * a.d * b.d)
}

/// <B> for the packet pair, computed on the fast path: the Bell-block
/// expectation separates into c/d-weighted terms with constant psi_+
/// contractions, so only the two 2D integrals per party are needed.
/// Convergence is estimated by doubling the resolution; divergence beyond
/// [`QUADRATURE_CONVERGENCE_TOL`] is an error.
pub fn bell_expectation(
    packet_a: &ModularWavepacket,
    packet_b: &ModularWavepacket,
    frame: &ModularFrame,
    resolution: usize,
) -> Result<BellValue> {
    let coarse = factorized_value(packet_a, packet_b, frame, resolution)?;
    let fine = factorized_value(packet_a, packet_b, frame, 2 * resolution)?;
    let delta = fine - coarse;
    if delta.abs() > QUADRATURE_CONVERGENCE_TOL {
        return Err(CoreError::QuadratureNotConverged {
            delta: delta.abs(),
            resolution,
        });
    }
    Ok(BellValue {
        value: coarse,
        convergence_delta: delta,
        resolution,
    })
}

/// Full 4D tensor-grid quadrature of the same integrand: at every grid
/// point the 4x4 Bell block is assembled from its weights and sandwiched
/// with psi_+ directly. Validation oracle for the factorized path.
pub fn bell_expectation_bruteforce(
    packet_a: &ModularWavepacket,
    packet_b: &ModularWavepacket,
    frame: &ModularFrame,
    resolution: usize,
) -> Result<f64> {
    if resolution > BRUTEFORCE_NODE_BUDGET {
        return Err(CoreError::ResolutionBudget {
            requested: resolution,
            budget: BRUTEFORCE_NODE_BUDGET,
        });
    }
    let grid = QuadratureGrid::new(frame, resolution)?;
    let psi = psi_amplitudes(Sign::Plus);

    // per-party renormalized density factors on the grid
    let party_factors = |packet: &ModularWavepacket| {
        let mut rho_x = packet.position_density_grid(&grid.x_nodes, frame);
        let x_mass: f64 = rho_x.iter().map(|r| r * grid.x_weight).sum();
        for r in &mut rho_x {
            *r *= grid.x_weight / x_mass;
        }
        let mut rho_p = packet.momentum_kernel_grid(&grid.p_nodes);
        let p_mass: f64 = rho_p
            .iter()
            .zip(&grid.p_weights)
            .map(|(r, w)| r * w)
            .sum();
        for (r, w) in rho_p.iter_mut().zip(&grid.p_weights) {
            *r *= w / p_mass;
        }
        (rho_x, rho_p)
    };
    let (rho_xa, rho_pa) = party_factors(packet_a);
    let (rho_xb, rho_pb) = party_factors(packet_b);

    let weights_at = |x: f64, p: f64| block_weights(x, p, frame);

    let mut total = 0.0;
    for (ia, &xa) in grid.x_nodes.iter().enumerate() {
        for (ja, &pa) in grid.p_nodes.iter().enumerate() {
            let (c_a, d_a) = weights_at(xa, pa);
            let wa = rho_xa[ia] * rho_pa[ja];
            if wa == 0.0 {
                continue;
            }
            for (ib, &xb) in grid.x_nodes.iter().enumerate() {
                for (jb, &pb) in grid.p_nodes.iter().enumerate() {
                    let (c_b, d_b) = weights_at(xb, pb);
                    let block = bell_matrix_from_weights(c_a, d_a, c_b, d_b);
                    let mut sandwich = C64::new(0.0, 0.0);
                    for i in 0..4 {
                        for j in 0..4 {
                            sandwich += psi[i].conj() * block[(i, j)] * psi[j];
                        }
                    }
                    total += wa * rho_xb[ib] * rho_pb[jb] * sandwich.re;
                }
            }
        }
    }
    Ok(total)
}

/// Closed-form delta-packet limit 2 sqrt2 cos^2(2 pi a_xbar / l).
pub fn delta_limit_bell(a_xbar: f64, frame: &ModularFrame) -> f64 {
    let c = (2.0 * std::f64::consts::PI * a_xbar / frame.ell()).cos();
    2.0 * std::f64::consts::SQRT_2 * c * c
}

#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub a_xbar: f64,
    pub bell_value: f64,
    pub converged: bool,
    pub convergence_delta: f64,
}

/// Violation curve <B>(a_xbar) with quadrature metadata.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub resolution: usize,
    pub template: ModularWavepacket,
    /// Largest |convergence delta| across rows.
    pub max_convergence_delta: f64,
}

impl SweepResult {
    pub fn max_value(&self) -> f64 {
        self.rows
            .iter()
            .fold(f64::NEG_INFINITY, |m, r| m.max(r.bell_value))
    }
}

/// Evaluates the Bell expectation at each center of `ax_grid`, both parties
/// sharing the template packet. Rows are independent and keep grid order;
/// a row whose quadrature fails to converge is flagged, a row with an
/// invalid center is a hard error carrying the row index.
pub fn sweep_ax(
    template: &ModularWavepacket,
    ax_grid: &[f64],
    frame: &ModularFrame,
    resolution: usize,
) -> Result<SweepResult> {
    let mut rows = Vec::with_capacity(ax_grid.len());
    let mut max_delta: f64 = 0.0;
    for (row, &a) in ax_grid.iter().enumerate() {
        let packet = template
            .with_a_xbar(a, frame)
            .map_err(|e| CoreError::SweepRow {
                row,
                source: Box::new(e),
            })?;
        match bell_expectation(&packet, &packet, frame, resolution) {
            Ok(v) => {
                max_delta = max_delta.max(v.convergence_delta.abs());
                rows.push(SweepRow {
                    a_xbar: a,
                    bell_value: v.value,
                    converged: true,
                    convergence_delta: v.convergence_delta,
                });
            }
            Err(CoreError::QuadratureNotConverged { delta, .. }) => {
                max_delta = max_delta.max(delta);
                let value = factorized_value(&packet, &packet, frame, resolution)
                    .map_err(|e| CoreError::SweepRow {
                        row,
                        source: Box::new(e),
                    })?;
                rows.push(SweepRow {
                    a_xbar: a,
                    bell_value: value,
                    converged: false,
                    convergence_delta: delta,
                });
            }
            Err(e) => {
                return Err(CoreError::SweepRow {
                    row,
                    source: Box::new(e),
                });
            }
        }
    }
    Ok(SweepResult {
        rows,
        resolution,
        template: *template,
        max_convergence_delta: max_delta,
    })
}

/// max over a_xbar in [0, l/2) of <B> at fixed widths: coarse grid then
/// golden-section refinement.
pub fn inner_max(
    template: &ModularWavepacket,
    frame: &ModularFrame,
    resolution: usize,
) -> Result<(f64, f64)> {
    let half = frame.half_ell();
    let eval = |a: f64| -> Result<f64> {
        let packet = template.with_a_xbar(a, frame)?;
        Ok(bell_expectation(&packet, &packet, frame, resolution)?.value)
    };

    let m = INNER_MAX_COARSE_POINTS;
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = 0usize;
    for k in 0..m {
        let a = k as f64 * half / m as f64;
        let v = eval(a)?;
        if v > best {
            best = v;
            best_idx = k;
        }
    }
    let step = half / m as f64;
    let mut lo = best_idx as f64 * step - step;
    let mut hi = best_idx as f64 * step + step;
    lo = lo.max(0.0);
    hi = hi.min(half * (1.0 - 1e-12));

    let gr = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c1 = hi - gr * (hi - lo);
    let mut c2 = lo + gr * (hi - lo);
    let mut f1 = eval(c1)?;
    let mut f2 = eval(c2)?;
    for _ in 0..GOLDEN_ITERS {
        if f1 > f2 {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = hi - gr * (hi - lo);
            f1 = eval(c1)?;
        } else {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + gr * (hi - lo);
            f2 = eval(c2)?;
        }
    }
    let (val, arg) = if f1 > f2 { (f1, c1) } else { (f2, c2) };
    Ok((val.max(best), arg))
}

#[derive(Debug, Clone, Copy)]
pub struct ThresholdResult {
    /// Width at which the inner maximum crosses the local-realism bound 2.
    pub sigma_xbar_star: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// Location and value of the inner maximum at sigma_xbar_star.
    pub inner_max_a_xbar: f64,
    pub inner_max_value: f64,
}

/// Bisection tolerance on sigma_xbar, in units of l.
pub const THRESHOLD_BISECTION_TOL: f64 = 5e-4;

/// Bisects sigma_xbar within `bracket` for the width where
/// max_{a_xbar} <B> = 2. The template fixes a_pbar and sigma_pbar.
pub fn violation_threshold(
    template: &ModularWavepacket,
    frame: &ModularFrame,
    resolution: usize,
    bracket: (f64, f64),
) -> Result<ThresholdResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0) || !(hi > lo) {
        return Err(CoreError::InvalidParameter {
            name: "bracket",
            message: format!("need 0 < lo < hi, got ({lo}, {hi})"),
        });
    }
    let excess = |sigma: f64| -> Result<f64> {
        let t = template.with_sigma_xbar(sigma)?;
        Ok(inner_max(&t, frame, resolution)?.0 - 2.0)
    };
    let f_lo = excess(lo)?;
    let f_hi = excess(hi)?;
    if f_lo <= 0.0 || f_hi >= 0.0 {
        return Err(CoreError::NoBracketCrossing {
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    let tol = THRESHOLD_BISECTION_TOL * frame.ell();
    let mut iterations = 0usize;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 64 {
            break;
        }
    }
    let sigma_star = 0.5 * (lo + hi);
    let t = template.with_sigma_xbar(sigma_star)?;
    let (max_value, max_arg) = inner_max(&t, frame, resolution)?;
    Ok(ThresholdResult {
        sigma_xbar_star: sigma_star,
        bracket,
        iterations,
        inner_max_a_xbar: max_arg,
        inner_max_value: max_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn frame() -> ModularFrame {
        ModularFrame::default()
    }

    fn near_delta(ax_frac: f64, f: &ModularFrame) -> ModularWavepacket {
        ModularWavepacket::from_fractions(ax_frac, 0.0, 1e-4, 1e-4, f).unwrap()
    }

    #[test]
    fn near_delta_origin_reaches_tsirelson() {
        let f = frame();
        let p = near_delta(0.0, &f);
        let v = bell_expectation(&p, &p, &f, 64).unwrap();
        assert!((v.value - 2.0 * SQRT_2).abs() < 1e-3, "value {}", v.value);
    }

    #[test]
    fn near_delta_eighth_period() {
        let f = frame();
        let p = near_delta(0.125, &f);
        let v = bell_expectation(&p, &p, &f, 64).unwrap();
        assert!((v.value - SQRT_2).abs() < 1e-3, "value {}", v.value);
    }

    #[test]
    fn wide_packet_never_violates() {
        // widest curve of the family stays below the local bound
        let f = frame();
        let template = ModularWavepacket::from_fractions(0.0, 0.0, 0.08, 1e-4, &f).unwrap();
        let (max, _) = inner_max(&template, &f, 64).unwrap();
        assert!(max < 2.0, "max {max}");
    }

    #[test]
    fn delta_limit_values() {
        let f = frame();
        assert!((delta_limit_bell(0.0, &f) - 2.0 * SQRT_2).abs() < 1e-15);
        assert!(delta_limit_bell(0.25, &f).abs() < 1e-15);
        assert!((delta_limit_bell(0.125, &f) - SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn sweep_tracks_delta_limit_for_narrow_packets() {
        let f = frame();
        let template = ModularWavepacket::from_fractions(0.0, 0.0, 0.001, 1e-4, &f).unwrap();
        let grid: Vec<f64> = (0..32).map(|k| k as f64 * 0.5 / 32.0).collect();
        let sweep = sweep_ax(&template, &grid, &f, 64).unwrap();
        for row in &sweep.rows {
            let reference = delta_limit_bell(row.a_xbar, &f);
            assert!(
                (row.bell_value - reference).abs() < 0.01,
                "a = {}: {} vs {}",
                row.a_xbar,
                row.bell_value,
                reference
            );
            assert!(row.converged);
        }
    }

    #[test]
    fn sweep_rejects_out_of_zone_centers_with_row_index() {
        let f = frame();
        let template = near_delta(0.0, &f);
        let err = sweep_ax(&template, &[0.1, 0.7], &f, 32).unwrap_err();
        match err {
            CoreError::SweepRow { row, .. } => assert_eq!(row, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unresolved_off_grid_delta_fails_convergence() {
        // a near-delta center whose nearest node changes when the
        // resolution doubles, which the convergence check must flag
        let f = frame();
        let a = 0.04;
        let packet = ModularWavepacket::new(a, 0.0, 1e-5, 1e-4, &f).unwrap();
        let result = bell_expectation(&packet, &packet, &f, 16);
        assert!(matches!(
            result,
            Err(CoreError::QuadratureNotConverged { .. })
        ));
    }

    #[test]
    fn bruteforce_agrees_with_fast_path() {
        let f = frame();
        let packet = ModularWavepacket::from_fractions(0.07, 0.1, 0.04, 0.1, &f).unwrap();
        let fast = factorized_value(&packet, &packet, &f, 24).unwrap();
        let brute = bell_expectation_bruteforce(&packet, &packet, &f, 24).unwrap();
        assert!((fast - brute).abs() < 1e-10, "{fast} vs {brute}");
    }

    #[test]
    fn bruteforce_uniform_flat_limit_matches() {
        let f = frame();
        let packet = ModularWavepacket::new(0.2, 2.0, 30.0, 100.0, &f).unwrap();
        let fast = factorized_value(&packet, &packet, &f, 32).unwrap();
        let brute = bell_expectation_bruteforce(&packet, &packet, &f, 32).unwrap();
        assert!((fast - brute).abs() < 1e-10);
        assert!(fast.abs() < 1e-6, "flat packets carry no correlation");
    }

    #[test]
    fn bruteforce_origin_near_delta() {
        let f = frame();
        let packet = near_delta(0.0, &f);
        let brute = bell_expectation_bruteforce(&packet, &packet, &f, 32).unwrap();
        assert!((brute - 2.0 * SQRT_2).abs() < 1e-2, "brute {brute}");
    }

    #[test]
    fn bruteforce_rejects_large_resolution() {
        let f = frame();
        let packet = near_delta(0.0, &f);
        assert!(matches!(
            bell_expectation_bruteforce(&packet, &packet, &f, 64),
            Err(CoreError::ResolutionBudget { .. })
        ));
    }

    #[test]
    fn threshold_squeezed_momentum_case() {
        let f = frame();
        let template = ModularWavepacket::from_fractions(0.0, 0.0, 0.05, 1e-4, &f).unwrap();
        let result = violation_threshold(&template, &f, 64, (0.02, 0.09)).unwrap();
        assert!(
            (0.045..=0.053).contains(&result.sigma_xbar_star),
            "sigma* = {}",
            result.sigma_xbar_star
        );
        assert!((result.inner_max_value - 2.0).abs() < 5e-3);
    }

    #[test]
    fn doubling_changes_default_packets_below_tolerance() {
        // default smooth packets at the origin: resolution doubling is
        // far inside the convergence tolerance
        let f = frame();
        for (sx, sp) in [(1e-4, 1e-4), (0.05, 0.05), (0.03, 0.1)] {
            let packet = ModularWavepacket::from_fractions(0.0, 0.0, sx, sp, &f).unwrap();
            let v = bell_expectation(&packet, &packet, &f, 64).unwrap();
            assert!(
                v.convergence_delta.abs() < 1e-6,
                "({sx}, {sp}): delta {}",
                v.convergence_delta
            );
        }
    }

    #[test]
    fn sweep_values_never_exceed_tsirelson() {
        let f = frame();
        let grid: Vec<f64> = (0..64).map(|k| k as f64 * 0.5 / 64.0).collect();
        for sx in [1e-4, 0.01, 0.05] {
            let template =
                ModularWavepacket::from_fractions(0.0, 0.05, sx, 0.08, &f).unwrap();
            let sweep = sweep_ax(&template, &grid, &f, 64).unwrap();
            for row in &sweep.rows {
                assert!(row.bell_value.abs() <= 2.0 * SQRT_2 + 1e-6);
            }
        }
    }

    #[test]
    fn sweep_gap_to_delta_limit_shrinks_with_width() {
        // pointwise convergence to the delta limit as the packets narrow;
        // resolution 512 so the middle width is still resolved
        let f = frame();
        let grid: Vec<f64> = (0..32).map(|k| k as f64 * 0.5 / 32.0).collect();
        let mut gaps = Vec::new();
        for sx in [1e-2, 1e-3, 1e-4] {
            let template =
                ModularWavepacket::from_fractions(0.0, 0.0, sx, 1e-4, &f).unwrap();
            let sweep = sweep_ax(&template, &grid, &f, 512).unwrap();
            let gap = sweep
                .rows
                .iter()
                .map(|r| (r.bell_value - delta_limit_bell(r.a_xbar, &f)).abs())
                .fold(0.0f64, f64::max);
            gaps.push(gap);
        }
        assert!(
            gaps[0] > gaps[1] && gaps[1] > gaps[2],
            "gaps not shrinking: {gaps:?}"
        );
    }

    #[test]
    fn threshold_needs_a_sign_change() {
        let f = frame();
        let template = ModularWavepacket::from_fractions(0.0, 0.0, 0.05, 1e-4, &f).unwrap();
        let err = violation_threshold(&template, &f, 64, (0.005, 0.01)).unwrap_err();
        assert!(matches!(err, CoreError::NoBracketCrossing { .. }));
    }
}
