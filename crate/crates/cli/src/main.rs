//! Batch front-end: point evaluations, violation-curve sweeps, threshold
//! searches, grating parameter maps, and coincidence sampling.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure. Reports go to stdout as JSON with sorted keys; data files are
//! CSV. Given the same config and seed, all outputs are byte-identical
//! (wall time is logged to stderr only).

mod config;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use chsh_core::modular::{
    bell_expectation, sweep_ax, violation_threshold, ModularFrame, ModularWavepacket,
};
use chsh_core::photonics::{
    chsh_from_tables, coincidence_povm_probs, grating_to_modular, grating_wavefunction,
    mach_zehnder_probs, sample_coincidences, CoincidenceTable, GratingSpec, Setting,
    CHSH_SETTING_PAIRS,
};
use chsh_core::CoreError;
use config::{ConfigError, RunConfig};

const EXIT_USAGE: i32 = 1;
const EXIT_NUMERICAL: i32 = 2;

#[derive(Parser)]
#[command(
    name = "chsh",
    about = "CHSH violation curves for modular-variable wavepackets",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Flat key = value config file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Parameter preset: fig1a (squeezed momentum) or fig1b (offset momentum).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Primary output path (CSV or sample file, command dependent).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Quadrature resolution (power of two, 16..=512).
    #[arg(long, value_name = "N")]
    resolution: Option<usize>,

    /// Sampling seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Packet center fraction a_xbar / l in [0, 0.5).
    #[arg(long, value_name = "FRAC")]
    ax: Option<f64>,

    /// Packet center fraction a_pbar / (h/l) in [0, 1).
    #[arg(long, value_name = "FRAC")]
    ap: Option<f64>,

    /// Packet width fraction sigma_xbar / l.
    #[arg(long, value_name = "FRAC")]
    sx: Option<f64>,

    /// Packet width fraction sigma_pbar / (h/l).
    #[arg(long, value_name = "FRAC")]
    sp: Option<f64>,

    /// Shots per setting pair.
    #[arg(long, value_name = "N")]
    shots: Option<u64>,

    /// Interferometer setting in degrees (0 or 90) for the single-photon
    /// diagnostic block of `point`.
    #[arg(long, value_name = "DEG")]
    phi: Option<u32>,

    /// Grating tooth-width parameter.
    #[arg(long, value_name = "KAPPA")]
    kappa: Option<f64>,

    /// Grating slit period.
    #[arg(long = "L", value_name = "LEN")]
    slit_period: Option<f64>,

    /// Gaussian envelope width.
    #[arg(long, value_name = "LEN")]
    sigma: Option<f64>,

    /// Sweep grid size over [0, l/2).
    #[arg(long, value_name = "N")]
    points: Option<usize>,

    /// Threshold bracket lower edge (fraction of l).
    #[arg(long, value_name = "FRAC")]
    bracket_lo: Option<f64>,

    /// Threshold bracket upper edge (fraction of l).
    #[arg(long, value_name = "FRAC")]
    bracket_hi: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the Bell expectation for one packet configuration.
    Point(CommonOpts),
    /// Sweep the Bell expectation over packet centers; writes CSV.
    Sweep(CommonOpts),
    /// Bisect the width where the violation crosses the local bound 2.
    Threshold(CommonOpts),
    /// Map grating parameters to a modular frame and wavepacket.
    Grating(CommonOpts),
    /// Sample coincidence counts over the four setting pairs; writes CSV.
    Sample(CommonOpts),
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::usage(e.0)
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::QuadratureNotConverged { .. }
            | CoreError::NoBracketCrossing { .. }
            | CoreError::ResolutionBudget { .. } => Failure::numerical(e.to_string()),
            other => Failure::usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(format!("io error: {e}"))
    }
}

fn main() {
    let started = Instant::now();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not failures
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprintln!("{e}");
            std::process::exit(EXIT_USAGE);
        }
    };
    let result = match &cli.command {
        Command::Point(opts) => run_point(opts),
        Command::Sweep(opts) => run_sweep(opts),
        Command::Threshold(opts) => run_threshold(opts),
        Command::Grating(opts) => run_grating(opts),
        Command::Sample(opts) => run_sample(opts),
    };
    let code = match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    eprintln!("wall_time_ms={}", started.elapsed().as_millis());
    std::process::exit(code);
}

fn resolve_config(opts: &CommonOpts) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &opts.config {
        cfg.load_file(path)?;
    }
    if let Some(preset) = &opts.preset {
        cfg.apply_preset(preset)?;
    }
    macro_rules! flag {
        ($field:ident, $opt:expr) => {
            if let Some(v) = $opt {
                cfg.$field = v;
            }
        };
    }
    flag!(resolution, opts.resolution);
    flag!(seed, opts.seed);
    flag!(ax, opts.ax);
    flag!(ap, opts.ap);
    flag!(sx, opts.sx);
    flag!(sp, opts.sp);
    flag!(shots, opts.shots);
    flag!(kappa, opts.kappa);
    flag!(slit_period, opts.slit_period);
    flag!(envelope_width, opts.sigma);
    flag!(points, opts.points);
    flag!(bracket_lo, opts.bracket_lo);
    flag!(bracket_hi, opts.bracket_hi);
    if let Some(phi) = opts.phi {
        cfg.phi_degrees = Some(phi);
    }
    if let Some(out) = &opts.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn packet_from(cfg: &RunConfig, frame: &ModularFrame) -> Result<ModularWavepacket, Failure> {
    Ok(ModularWavepacket::from_fractions(
        cfg.ax, cfg.ap, cfg.sx, cfg.sp, frame,
    )?)
}

fn emit(report: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(report).expect("json"));
}

fn run_point(opts: &CommonOpts) -> Result<i32, Failure> {
    let cfg = resolve_config(opts)?;
    let frame = ModularFrame::new(cfg.ell)?;
    let packet = packet_from(&cfg, &frame)?;
    let value = bell_expectation(&packet, &packet, &frame, cfg.resolution)?;
    let mut report = json!({
        "command": "point",
        "config": cfg.echo(),
        "value": value.value,
        "convergence_delta": value.convergence_delta,
        "resolution": value.resolution,
        "local_bound_violated": value.value > 2.0,
    });
    if let Some(phi) = cfg.phi_degrees {
        let setting = Setting::from_degrees(phi)?;
        let mz = mach_zehnder_probs(&packet, setting, &frame, cfg.resolution)?;
        report["mz"] = json!({
            "phi_degrees": phi,
            "p_plus": mz.p_plus,
            "p_minus": mz.p_minus,
        });
    }
    emit(&report);
    Ok(0)
}

fn run_sweep(opts: &CommonOpts) -> Result<i32, Failure> {
    let cfg = resolve_config(opts)?;
    if cfg.points == 0 {
        return Err(Failure::usage("key `points` must be at least 1"));
    }
    let frame = ModularFrame::new(cfg.ell)?;
    let template = packet_from(&cfg, &frame)?;
    let grid: Vec<f64> = (0..cfg.points)
        .map(|k| k as f64 * frame.half_ell() / cfg.points as f64)
        .collect();
    let sweep = sweep_ax(&template, &grid, &frame, cfg.resolution)?;

    let mut csv = String::from("a_xbar_frac,bell_value,converged\n");
    for row in &sweep.rows {
        writeln!(
            csv,
            "{:.12},{:.12},{}",
            row.a_xbar / frame.ell(),
            row.bell_value,
            row.converged
        )
        .expect("string write");
    }
    let path = cfg.resolve_out("sweep.csv");
    std::fs::write(&path, csv)?;

    let converged = sweep.rows.iter().filter(|r| r.converged).count();
    let report = json!({
        "command": "sweep",
        "config": cfg.echo(),
        "csv_path": path.display().to_string(),
        "rows": sweep.rows.len(),
        "converged_rows": converged,
        "max_value": sweep.max_value(),
        "max_convergence_delta": sweep.max_convergence_delta,
    });
    emit(&report);
    // the run still counts if at least 90% of rows converged
    if (converged as f64) < 0.9 * sweep.rows.len() as f64 {
        return Ok(EXIT_NUMERICAL);
    }
    Ok(0)
}

fn run_threshold(opts: &CommonOpts) -> Result<i32, Failure> {
    let cfg = resolve_config(opts)?;
    let frame = ModularFrame::new(cfg.ell)?;
    let template = packet_from(&cfg, &frame)?;
    let bracket = (cfg.bracket_lo * frame.ell(), cfg.bracket_hi * frame.ell());
    let result = violation_threshold(&template, &frame, cfg.resolution, bracket)?;
    let report = json!({
        "command": "threshold",
        "config": cfg.echo(),
        "sigma_xbar_star_frac": result.sigma_xbar_star / frame.ell(),
        "sigma_xbar_star": result.sigma_xbar_star,
        "bracket": [cfg.bracket_lo, cfg.bracket_hi],
        "iterations": result.iterations,
        "inner_max_a_xbar_frac": result.inner_max_a_xbar / frame.ell(),
        "inner_max_value": result.inner_max_value,
    });
    emit(&report);
    Ok(0)
}

fn run_grating(opts: &CommonOpts) -> Result<i32, Failure> {
    let cfg = resolve_config(opts)?;
    let ell = 2.0 * cfg.slit_period;
    let spec = GratingSpec {
        slit_period: cfg.slit_period,
        kappa: cfg.kappa,
        envelope_width: cfg.envelope_width,
        transverse_shift: cfg.ax * ell,
        slm_phase_slope: cfg.ap * chsh_core::modular::PLANCK_H / ell,
    };
    let map = grating_to_modular(&spec)?;
    let frame = &map.frame;
    let mut report = json!({
        "command": "grating",
        "config": cfg.echo(),
        "ell": frame.ell(),
        "sigma_xbar": map.packet.sigma_xbar(),
        "sigma_xbar_frac": map.packet.sigma_xbar() / frame.ell(),
        "sigma_pbar": map.packet.sigma_pbar(),
        "sigma_pbar_frac": map.packet.sigma_pbar() / frame.momentum_period(),
        "a_xbar_frac": map.packet.a_xbar() / frame.ell(),
        "a_pbar_frac": map.packet.a_pbar() / frame.momentum_period(),
        "validity_ratio": map.validity_ratio,
        "validity_warning": map.validity_warning,
    });

    if cfg.out.is_some() {
        let span = 5.5 * spec.envelope_width;
        let spacing = spec.tooth_width() / 8.0;
        let n = (2.0 * span / spacing).ceil() as usize + 1;
        if n > 2_000_000 {
            return Err(Failure::usage(format!(
                "wavefunction sample would need {n} nodes; reduce sigma or increase kappa"
            )));
        }
        let grid: Vec<f64> = (0..n)
            .map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64)
            .collect();
        let psi = grating_wavefunction(&spec, &grid)?;
        let mut csv = String::from("x,re,im,abs2\n");
        for (x, amp) in grid.iter().zip(&psi) {
            writeln!(csv, "{x:.9},{:.12e},{:.12e},{:.12e}", amp.re, amp.im, amp.norm_sqr())
                .expect("string write");
        }
        let path = cfg.resolve_out("wavefunction.csv");
        std::fs::write(&path, csv)?;
        report["wavefunction_path"] = json!(path.display().to_string());
        report["wavefunction_nodes"] = json!(n);
    }
    emit(&report);
    Ok(0)
}

fn run_sample(opts: &CommonOpts) -> Result<i32, Failure> {
    let cfg = resolve_config(opts)?;
    let frame = ModularFrame::new(cfg.ell)?;
    let packet = packet_from(&cfg, &frame)?;

    let mut tables: Vec<CoincidenceTable> = Vec::with_capacity(4);
    for (sa, sb) in CHSH_SETTING_PAIRS {
        tables.push(coincidence_povm_probs(
            &packet,
            &packet,
            sa,
            sb,
            &frame,
            cfg.resolution,
        )?);
    }
    let tables: [CoincidenceTable; 4] = [tables[0], tables[1], tables[2], tables[3]];
    let analytic = chsh_from_tables(&tables);
    let bell = bell_expectation(&packet, &packet, &frame, cfg.resolution)?;

    let mut csv = String::from("setting_a,setting_b,kk,kl,lk,ll\n");
    let mut s_emp = 0.0;
    let mut variance = 0.0;
    for (i, table) in tables.iter().enumerate() {
        let counts = sample_coincidences(table, cfg.shots, cfg.seed);
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            table.setting_a.label_degrees(),
            table.setting_b.label_degrees(),
            counts.counts[0][0],
            counts.counts[0][1],
            counts.counts[1][0],
            counts.counts[1][1]
        )
        .expect("string write");
        let e = counts.correlation();
        variance += (1.0 - e * e).max(1e-12) / cfg.shots as f64;
        s_emp += if i == 3 { -e } else { e };
    }
    let path = cfg.resolve_out("samples.csv");
    std::fs::write(&path, csv)?;

    let se = variance.sqrt();
    let report = json!({
        "command": "sample",
        "config": cfg.echo(),
        "csv_path": path.display().to_string(),
        "shots_per_setting": cfg.shots,
        "empirical_chsh": s_emp,
        "standard_error": se,
        "analytic_chsh": analytic,
        "bell_expectation": bell.value,
        "pull": (s_emp - analytic) / se,
    });
    emit(&report);
    Ok(0)
}
