//! Run configuration: flat key = value files, presets, flag overrides,
//! and validation. All physical inputs are dimensionless fractions of
//! their periods, so curve-family parameters are directly typable.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

/// Environment variable that prefixes relative output paths.
pub const OUT_DIR_ENV: &str = "CHSH_OUT_DIR";

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Frame length scale.
    pub ell: f64,
    /// Packet center fractions: a_xbar / l in [0, 0.5), a_pbar / (h/l) in [0, 1).
    pub ax: f64,
    pub ap: f64,
    /// Packet width fractions: sigma_xbar / l, sigma_pbar / (h/l), positive.
    pub sx: f64,
    pub sp: f64,
    /// Quadrature resolution: power of two in [16, 512].
    pub resolution: usize,
    /// Sweep grid size over [0, l/2).
    pub points: usize,
    /// Shots per setting pair.
    pub shots: u64,
    pub seed: u64,
    /// Interferometer setting in degrees (0 or 90) for the optional
    /// single-photon diagnostic.
    pub phi_degrees: Option<u32>,
    /// Grating parameters.
    pub kappa: f64,
    pub slit_period: f64,
    pub envelope_width: f64,
    /// Threshold bracket on sigma_xbar / l.
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    /// Primary output path (CSV for sweep/sample, wavefunction for grating).
    pub out: Option<PathBuf>,
    pub preset: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ell: 1.0,
            ax: 0.0,
            ap: 0.0,
            sx: 1e-4,
            sp: 1e-4,
            resolution: 64,
            points: 32,
            shots: 1000,
            seed: 1,
            phi_degrees: None,
            kappa: 2.0 * std::f64::consts::PI * 0.1,
            slit_period: 1.0,
            envelope_width: 10.0,
            bracket_lo: 0.02,
            bracket_hi: 0.09,
            out: None,
            preset: None,
        }
    }
}

impl RunConfig {
    /// Applies one key = value assignment (file line or flag override).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |k: &str, v: &str| ConfigError(format!("invalid value for key `{k}`: `{v}`"));
        match key {
            "ell" => self.ell = value.parse().map_err(|_| bad(key, value))?,
            "ax" => self.ax = value.parse().map_err(|_| bad(key, value))?,
            "ap" => self.ap = value.parse().map_err(|_| bad(key, value))?,
            "sx" => self.sx = value.parse().map_err(|_| bad(key, value))?,
            "sp" => self.sp = value.parse().map_err(|_| bad(key, value))?,
            "resolution" => self.resolution = value.parse().map_err(|_| bad(key, value))?,
            "points" => self.points = value.parse().map_err(|_| bad(key, value))?,
            "shots" => self.shots = value.parse().map_err(|_| bad(key, value))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value))?,
            "phi" => {
                let v: u32 = value.parse().map_err(|_| bad(key, value))?;
                self.phi_degrees = Some(v);
            }
            "kappa" => self.kappa = value.parse().map_err(|_| bad(key, value))?,
            "L" => self.slit_period = value.parse().map_err(|_| bad(key, value))?,
            "sigma" => self.envelope_width = value.parse().map_err(|_| bad(key, value))?,
            "bracket_lo" => self.bracket_lo = value.parse().map_err(|_| bad(key, value))?,
            "bracket_hi" => self.bracket_hi = value.parse().map_err(|_| bad(key, value))?,
            "out" => self.out = Some(PathBuf::from(value)),
            "preset" => self.apply_preset(value)?,
            other => return Err(ConfigError(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Loads assignments from a flat key = value file ('#' starts a comment).
    pub fn load_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "config line {} is not `key = value`: `{line}`",
                    lineno + 1
                )));
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Parameter families of the two violation-curve panels:
    /// `fig1a` squeezes the modular momentum at the origin, `fig1b` offsets
    /// it to a_pbar = sigma_pbar = 0.1 of the period.
    pub fn apply_preset(&mut self, name: &str) -> Result<(), ConfigError> {
        match name {
            "fig1a" => {
                self.ap = 0.0;
                self.sp = 1e-4;
                self.sx = 0.05;
            }
            "fig1b" => {
                self.ap = 0.1;
                self.sp = 0.1;
                self.sx = 0.04;
            }
            other => {
                return Err(ConfigError(format!(
                    "unknown value for key `preset`: `{other}` (expected fig1a or fig1b)"
                )))
            }
        }
        self.preset = Some(name.to_string());
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError(format!(
                    "key `{key}` must be positive and finite, got {v}"
                )))
            }
        };
        positive("ell", self.ell)?;
        positive("sx", self.sx)?;
        positive("sp", self.sp)?;
        positive("kappa", self.kappa)?;
        positive("L", self.slit_period)?;
        positive("sigma", self.envelope_width)?;
        if !(0.0..0.5).contains(&self.ax) {
            return Err(ConfigError(format!(
                "key `ax` must lie in [0, 0.5) as a fraction of the period, got {}",
                self.ax
            )));
        }
        for (key, v) in [("ap", self.ap), ("sx", self.sx), ("sp", self.sp)] {
            if !(0.0..1.0).contains(&v) {
                return Err(ConfigError(format!(
                    "key `{key}` must lie in [0, 1) as a fraction of the period, got {v}"
                )));
            }
        }
        if !(16..=512).contains(&self.resolution) || !self.resolution.is_power_of_two() {
            return Err(ConfigError(format!(
                "key `resolution` must be a power of two in [16, 512], got {}",
                self.resolution
            )));
        }
        if self.shots == 0 {
            return Err(ConfigError("key `shots` must be at least 1".into()));
        }
        if let Some(phi) = self.phi_degrees {
            if phi != 0 && phi != 90 {
                return Err(ConfigError(format!(
                    "key `phi` must be 0 or 90 degrees, got {phi}"
                )));
            }
        }
        if !(self.bracket_lo > 0.0) || !self.bracket_lo.is_finite() || !self.bracket_hi.is_finite()
        {
            return Err(ConfigError(format!(
                "keys `bracket_lo`/`bracket_hi` must be positive and finite, got ({}, {})",
                self.bracket_lo, self.bracket_hi
            )));
        }
        if self.bracket_lo >= self.bracket_hi {
            return Err(ConfigError(format!(
                "key `bracket_lo` must be below `bracket_hi`, got ({}, {})",
                self.bracket_lo, self.bracket_hi
            )));
        }
        Ok(())
    }

    /// Resolves an output path against the directory override variable.
    pub fn resolve_out(&self, default_name: &str) -> PathBuf {
        let path = self
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(default_name));
        if path.is_absolute() {
            return path;
        }
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) => PathBuf::from(dir).join(path),
            None => path,
        }
    }

    /// Resolved-config echo for reports (sorted keys, deterministic).
    pub fn echo(&self) -> Value {
        let mut map = BTreeMap::new();
        map.insert("ell", json!(self.ell));
        map.insert("ax", json!(self.ax));
        map.insert("ap", json!(self.ap));
        map.insert("sx", json!(self.sx));
        map.insert("sp", json!(self.sp));
        map.insert("resolution", json!(self.resolution));
        map.insert("points", json!(self.points));
        map.insert("shots", json!(self.shots));
        map.insert("seed", json!(self.seed));
        map.insert("kappa", json!(self.kappa));
        map.insert("L", json!(self.slit_period));
        map.insert("sigma", json!(self.envelope_width));
        map.insert("bracket_lo", json!(self.bracket_lo));
        map.insert("bracket_hi", json!(self.bracket_hi));
        if let Some(phi) = self.phi_degrees {
            map.insert("phi", json!(phi));
        }
        if let Some(preset) = &self.preset {
            map.insert("preset", json!(preset));
        }
        json!(map)
    }
}
