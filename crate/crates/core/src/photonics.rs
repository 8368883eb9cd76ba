//! Photonic realization layer: diffraction-grating synthesis, the map from
//! optical parameters to modular wavepackets, Mach-Zehnder photon-count
//! probabilities, two-party coincidence statistics, and finite-shot
//! sampling.

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::modular::{
    psi_sigma_contractions, wrap_momentum, wrap_position, ModularFrame, ModularWavepacket,
    PartyIntegrals, QuadratureGrid,
};
use crate::modular::{psi_amplitudes, Sign};
use crate::sampling::Stream;

/// Conditional success probability of the polarization-to-path
/// entanglement swap; metadata on prepared states, not simulated per event.
pub const SWAP_SUCCESS_PROBABILITY: f64 = 0.5;

/// L/sigma ratio beyond which the modular product approximation degrades.
pub const VALIDITY_RATIO_WARNING: f64 = 0.2;

/// Grating and beam parameters of one party's state preparation.
#[derive(Debug, Clone, Copy)]
pub struct GratingSpec {
    /// Slit period L.
    pub slit_period: f64,
    /// Tooth-width parameter kappa of the Fourier coefficients e^{-m^2 kappa^2 / 2}.
    pub kappa: f64,
    /// Gaussian envelope width sigma.
    pub envelope_width: f64,
    /// Transverse grating offset; sets the modular-position center.
    pub transverse_shift: f64,
    /// Linear SLM phase slope; sets the modular-momentum center.
    pub slm_phase_slope: f64,
}

impl GratingSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("slit_period", self.slit_period),
            ("kappa", self.kappa),
            ("envelope_width", self.envelope_width),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CoreError::InvalidParameter {
                    name,
                    message: format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// L / sigma; the product form assumes this is small.
    pub fn validity_ratio(&self) -> f64 {
        self.slit_period / self.envelope_width
    }

    /// Standard deviation of one amplitude tooth of the comb, kappa L / 2 pi.
    pub fn tooth_width(&self) -> f64 {
        self.kappa * self.slit_period / (2.0 * std::f64::consts::PI)
    }
}

/// Fourier coefficients c_m = e^{-m^2 kappa^2 / 2} for m in 0..=m_max,
/// renormalized so that sum over all |c_m|^2 (both signs of m) is 1.
/// Rejects m_max too small for a discarded tail below 1e-14.
pub fn transmission_coeffs(kappa: f64, m_max: usize) -> Result<Vec<f64>> {
    if !(kappa > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "kappa",
            message: format!("must be positive, got {kappa}"),
        });
    }
    let c = |m: f64| (-0.5 * m * m * kappa * kappa).exp();
    // geometric bound on the discarded |c_m|^2 tail
    let first = c((m_max + 1) as f64).powi(2);
    let ratio = (-(2.0 * (m_max + 1) as f64 + 1.0) * kappa * kappa).exp();
    let tail = 2.0 * first / (1.0 - ratio.min(0.5)).max(0.5);
    const TAIL_BOUND: f64 = 1e-14;
    if tail > TAIL_BOUND {
        return Err(CoreError::TailBound {
            tail,
            bound: TAIL_BOUND,
        });
    }
    let mut coeffs: Vec<f64> = (0..=m_max).map(|m| c(m as f64)).collect();
    let norm2: f64 = coeffs[0] * coeffs[0]
        + 2.0 * coeffs[1..].iter().map(|v| v * v).sum::<f64>();
    let scale = norm2.sqrt();
    for v in &mut coeffs {
        *v /= scale;
    }
    Ok(coeffs)
}

/// Modular frame and wavepacket induced by a grating preparation.
#[derive(Debug, Clone)]
pub struct GratingMap {
    pub frame: ModularFrame,
    pub packet: ModularWavepacket,
    pub validity_ratio: f64,
    pub validity_warning: bool,
}

/// Parameter dictionary of the preparation: frame scale l = 2L, widths
/// sigma_xbar = kappa^2 L^2 / (2 pi)^2 and sigma_pbar = h^2 / (2 pi sigma)^2,
/// centers from the transverse shift (wrapped into the reduced zone) and
/// the SLM phase slope (wrapped into the momentum period).
pub fn grating_to_modular(spec: &GratingSpec) -> Result<GratingMap> {
    spec.validate()?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let frame = ModularFrame::new(2.0 * spec.slit_period)?;
    let sigma_xbar = (spec.kappa * spec.slit_period / two_pi).powi(2);
    let h = crate::modular::PLANCK_H;
    let sigma_pbar = (h / (two_pi * spec.envelope_width)).powi(2);

    // shifting the grating by a half period lands on the level-shifted slot,
    // so the center folds into the reduced zone
    let (wrapped_x, _) = wrap_position(spec.transverse_shift, &frame);
    let a_xbar = wrapped_x % frame.half_ell();
    let (a_pbar, _) = wrap_momentum(spec.slm_phase_slope, &frame);

    let packet = ModularWavepacket::new(a_xbar, a_pbar, sigma_xbar, sigma_pbar, &frame)?;
    let ratio = spec.validity_ratio();
    Ok(GratingMap {
        frame,
        packet,
        validity_ratio: ratio,
        validity_warning: ratio > VALIDITY_RATIO_WARNING,
    })
}

/// Transverse wavefunction right after the grating: the truncated Fourier
/// comb times the Gaussian envelope, normalized on the sample grid.
/// The grid must cover +-5 envelope widths and resolve the comb teeth
/// (spacing below a quarter tooth width).
pub fn grating_wavefunction(spec: &GratingSpec, x_grid: &[f64]) -> Result<Vec<C64>> {
    spec.validate()?;
    if x_grid.len() < 2 {
        return Err(CoreError::InvalidParameter {
            name: "x_grid",
            message: "need at least two samples".into(),
        });
    }
    let lo = x_grid[0];
    let hi = x_grid[x_grid.len() - 1];
    let span = 5.0 * spec.envelope_width;
    if lo > -span || hi < span {
        return Err(CoreError::InvalidParameter {
            name: "x_grid",
            message: format!("grid [{lo}, {hi}] must cover +-{span}"),
        });
    }
    let spacing = (hi - lo) / (x_grid.len() - 1) as f64;
    if spacing >= spec.tooth_width() / 4.0 {
        return Err(CoreError::InvalidParameter {
            name: "x_grid",
            message: format!(
                "spacing {spacing:.3e} too coarse for tooth width {:.3e}",
                spec.tooth_width()
            ),
        });
    }

    // grow m_max until the dropped coefficient tail clears the bound
    let mut m_max = 4usize;
    while (-0.5 * ((m_max + 1) as f64 * spec.kappa).powi(2)).exp() > 1e-8 && m_max < 4096 {
        m_max *= 2;
    }
    let coeffs = transmission_coeffs(spec.kappa, m_max)?;

    let two_pi = 2.0 * std::f64::consts::PI;
    let mut psi: Vec<C64> = x_grid
        .iter()
        .map(|&x| {
            let mut t = C64::new(coeffs[0], 0.0);
            for (m, &cm) in coeffs.iter().enumerate().skip(1) {
                let phase = two_pi * m as f64 * (x - spec.transverse_shift) / spec.slit_period;
                // c_m e^{i m phi} + c_{-m} e^{-i m phi} = 2 c_m cos(m phi)
                t += C64::new(2.0 * cm * phase.cos(), 0.0);
            }
            let envelope = (-0.5 * (x / spec.envelope_width).powi(2)).exp();
            t * envelope
        })
        .collect();
    let norm2: f64 = psi.iter().map(|a| a.norm_sqr() * spacing).sum();
    let scale = C64::new(1.0 / norm2.sqrt(), 0.0);
    for a in &mut psi {
        *a *= scale;
    }
    Ok(psi)
}

/// Shifts the packet's modular-momentum center by `a_pbar` (the action of a
/// linear SLM phase on the comb). Shifts that leave the period are
/// rejected; the caller wraps explicitly.
pub fn apply_slm_phase(
    packet: &ModularWavepacket,
    a_pbar: f64,
    frame: &ModularFrame,
) -> Result<ModularWavepacket> {
    if !(0.0..frame.momentum_period()).contains(&a_pbar) {
        return Err(CoreError::OutOfDomain {
            value: a_pbar,
            lo: 0.0,
            hi: frame.momentum_period(),
        });
    }
    let shifted = packet.a_pbar() + a_pbar;
    if shifted >= frame.momentum_period() {
        return Err(CoreError::OutOfDomain {
            value: shifted,
            lo: 0.0,
            hi: frame.momentum_period(),
        });
    }
    packet.clone().with_a_pbar(shifted, frame)
}

/// Interferometer setting phi in {0, pi/2}: the two propagation phases
/// with closed modular forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    Phi0,
    PhiHalfPi,
}

impl Setting {
    /// Parses a setting given in degrees; only 0 and 90 have closed
    /// modular forms.
    pub fn from_degrees(degrees: u32) -> Result<Self> {
        match degrees {
            0 => Ok(Setting::Phi0),
            90 => Ok(Setting::PhiHalfPi),
            _ => Err(CoreError::UnsupportedSetting),
        }
    }

    pub fn phi(&self) -> f64 {
        match self {
            Setting::Phi0 => 0.0,
            Setting::PhiHalfPi => std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn label_degrees(&self) -> &'static str {
        match self {
            Setting::Phi0 => "0",
            Setting::PhiHalfPi => "90",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            Setting::Phi0 => 0,
            Setting::PhiHalfPi => 1,
        }
    }
}

/// Photon-count probabilities at the two interferometer outputs.
#[derive(Debug, Clone, Copy)]
pub struct MachZehnderOutcome {
    pub p_plus: f64,
    pub p_minus: f64,
    pub setting: Setting,
}

/// Single-photon expectation <A_phi> of a prepared packet: the C integral
/// for phi = 0 and the D integral for phi = pi/2.
pub fn packet_expectation(
    packet: &ModularWavepacket,
    setting: Setting,
    frame: &ModularFrame,
    resolution: usize,
) -> Result<f64> {
    let grid = QuadratureGrid::new(frame, resolution)?;
    let ints = PartyIntegrals::compute(packet, frame, &grid);
    Ok(match setting {
        Setting::Phi0 => ints.c,
        Setting::PhiHalfPi => ints.d,
    })
}

/// p_pm = (1 pm <A_phi>)/2 from counting at the interferometer outputs.
pub fn mach_zehnder_probs(
    packet: &ModularWavepacket,
    setting: Setting,
    frame: &ModularFrame,
    resolution: usize,
) -> Result<MachZehnderOutcome> {
    let expectation = packet_expectation(packet, setting, frame, resolution)?;
    Ok(MachZehnderOutcome {
        p_plus: 0.5 * (1.0 + expectation),
        p_minus: 0.5 * (1.0 - expectation),
        setting,
    })
}

/// Coincidence probabilities for one setting pair, indexed [k][l] with
/// 0 = +, 1 = -.
#[derive(Debug, Clone, Copy)]
pub struct CoincidenceTable {
    pub setting_a: Setting,
    pub setting_b: Setting,
    pub p: [[f64; 2]; 2],
}

impl CoincidenceTable {
    /// E = P_{++} + P_{--} - P_{+-} - P_{-+}.
    pub fn correlation(&self) -> f64 {
        self.p[0][0] + self.p[1][1] - self.p[0][1] - self.p[1][0]
    }

    pub fn marginals_plus(&self) -> (f64, f64) {
        (self.p[0][0] + self.p[0][1], self.p[0][0] + self.p[1][0])
    }
}

/// Coincidence counts for one setting pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoincidenceCounts {
    pub setting_a: Setting,
    pub setting_b: Setting,
    pub counts: [[u64; 2]; 2],
}

impl CoincidenceCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correlation(&self) -> f64 {
        let n = self.total() as f64;
        (self.counts[0][0] as f64 + self.counts[1][1] as f64
            - self.counts[0][1] as f64
            - self.counts[1][0] as f64)
            / n
    }
}

/// Joint correlation <A_phi (x) B_phi'> of the entangled pair state built
/// on the packet pair: the psi_+ contraction weight for the setting pair
/// times the per-party integrals.
pub fn joint_setting_correlation(
    packet_a: &ModularWavepacket,
    packet_b: &ModularWavepacket,
    setting_a: Setting,
    setting_b: Setting,
    frame: &ModularFrame,
    resolution: usize,
) -> Result<f64> {
    let grid = QuadratureGrid::new(frame, resolution)?;
    let a = PartyIntegrals::compute(packet_a, frame, &grid);
    let b = PartyIntegrals::compute(packet_b, frame, &grid);
    let [w_zz, w_zy, w_yz, w_yy] = psi_sigma_contractions();
    let xa = |s: Setting, ints: &PartyIntegrals| match s {
        Setting::Phi0 => ints.c,
        Setting::PhiHalfPi => ints.d,
    };
    let w = match (setting_a, setting_b) {
        (Setting::Phi0, Setting::Phi0) => w_zz,
        (Setting::Phi0, Setting::PhiHalfPi) => w_zy,
        (Setting::PhiHalfPi, Setting::Phi0) => w_yz,
        (Setting::PhiHalfPi, Setting::PhiHalfPi) => w_yy,
    };
    Ok(w * xa(setting_a, &a) * xa(setting_b, &b))
}

/// Coincidence table P_{k,l} = (1 + k<A> + l<B> + kl<AB>)/4 for the shared
/// entangled state. Its single-party expectations vanish identically (the
/// Bell eigenvector carries no local sigma_z or sigma_y polarization), so
/// the marginals are 1/2 and the CHSH combination of the four tables equals
/// the Bell expectation of the packet pair.
pub fn coincidence_povm_probs(
    packet_a: &ModularWavepacket,
    packet_b: &ModularWavepacket,
    setting_a: Setting,
    setting_b: Setting,
    frame: &ModularFrame,
    resolution: usize,
) -> Result<CoincidenceTable> {
    let joint = joint_setting_correlation(
        packet_a, packet_b, setting_a, setting_b, frame, resolution,
    )?;
    let mut p = [[0.0; 2]; 2];
    for (i, k) in [(0usize, 1.0f64), (1, -1.0)] {
        for (j, l) in [(0usize, 1.0f64), (1, -1.0)] {
            p[i][j] = 0.25 * (1.0 + k * l * joint);
        }
    }
    Ok(CoincidenceTable {
        setting_a,
        setting_b,
        p,
    })
}

/// Single-party expectation <sigma (x) 1> of the shared entangled state,
/// contracted from the psi_+ amplitudes. Vanishes for both settings: the
/// slot populations balance and the cross terms are imaginary.
pub fn entangled_marginal_expectation(setting: Setting) -> f64 {
    let psi = psi_amplitudes(Sign::Plus);
    let (sz, sy) = crate::modular::sigma_blocks();
    let sigma = match setting {
        Setting::Phi0 => sz,
        Setting::PhiHalfPi => sy,
    };
    let eye = crate::linalg::CMat::identity(2, 2);
    let op = sigma.kronecker(&eye);
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            acc += psi[i].conj() * op[(i, j)] * psi[j];
        }
    }
    acc.re
}

/// The four CHSH setting pairs in canonical order.
pub const CHSH_SETTING_PAIRS: [(Setting, Setting); 4] = [
    (Setting::Phi0, Setting::Phi0),
    (Setting::Phi0, Setting::PhiHalfPi),
    (Setting::PhiHalfPi, Setting::Phi0),
    (Setting::PhiHalfPi, Setting::PhiHalfPi),
];

/// S = E(0,0) + E(0,pi/2) + E(pi/2,0) - E(pi/2,pi/2) from four tables.
pub fn chsh_from_tables(tables: &[CoincidenceTable; 4]) -> f64 {
    tables[0].correlation() + tables[1].correlation() + tables[2].correlation()
        - tables[3].correlation()
}

/// Multinomial coincidence counts, keyed by (seed, setting pair, shot):
/// deterministic and partition-safe. Negative rounding noise in the table
/// is clamped to zero here only.
pub fn sample_coincidences(
    table: &CoincidenceTable,
    shots: u64,
    seed: u64,
) -> CoincidenceCounts {
    let stream_tag = (table.setting_a.index() * 2 + table.setting_b.index()) as u64;
    let stream = Stream::new(seed, stream_tag);
    let flat = [
        table.p[0][0].max(0.0),
        table.p[0][1].max(0.0),
        table.p[1][0].max(0.0),
        table.p[1][1].max(0.0),
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
    CoincidenceCounts {
        setting_a: table.setting_a,
        setting_b: table.setting_b,
        counts,
    }
}

/// Polarization-state amplitudes (HH, HV, VH, VV) produced by the swap
/// preparation: (1, pm i(sqrt2 mp 1), pm i(sqrt2 mp 1), 1) / N_pm with
/// N_pm = 2 (2 mp sqrt2)^{1/2}. As a vector this is exactly the Bell-block
/// eigenvector of the modular layer; the swap transfers the coefficients
/// unchanged.
pub fn polarization_coeffs(sign: Sign) -> [C64; 4] {
    let sqrt2 = std::f64::consts::SQRT_2;
    let (cross, norm) = match sign {
        Sign::Plus => (sqrt2 - 1.0, 2.0 * (2.0 - sqrt2).sqrt()),
        Sign::Minus => (-(sqrt2 + 1.0), 2.0 * (2.0 + sqrt2).sqrt()),
    };
    [
        C64::new(1.0 / norm, 0.0),
        C64::new(0.0, cross / norm),
        C64::new(0.0, cross / norm),
        C64::new(1.0 / norm, 0.0),
    ]
}
