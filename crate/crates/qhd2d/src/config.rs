//! Run configuration: an INI-style `key = value` format grouped by
//! `[section]` headers, with full validation at parse time. Every error
//! names the offending line and key. `serialize` emits a text that parses
//! back to an equal configuration.

use crate::error::{QhdError, Result};
use crate::poisson::PoissonMode;
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub enum DopingSpec {
    None,
    File(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcSpec {
    pub name: String,
    /// Center; defaults to the domain midpoint when unset.
    pub x0: Option<f64>,
    pub y0: Option<f64>,
    pub width: f64,
    pub amp: f64,
    pub kx_index: i32,
    pub ky_index: i32,
    pub amp_phase: f64,
    pub path: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    // [grid]
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    // [physics]
    pub hbar: f64,
    pub p: f64,
    pub poisson_mode: PoissonMode,
    pub doping: DopingSpec,
    pub nonlinearity: bool,
    pub potential: bool,
    // [time]
    pub dt: f64,
    pub tau: f64,
    pub t_max: f64,
    pub collision_on: bool,
    // [output]
    pub out_dir: Option<String>,
    pub cadence: usize,
    pub snapshot_every: usize,
    // [ic]
    pub ic: IcSpec,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            nx: 128,
            ny: 128,
            lx: 2.0 * PI,
            ly: 2.0 * PI,
            hbar: 1.0,
            p: 3.0,
            poisson_mode: PoissonMode::PeriodicZeroMean,
            doping: DopingSpec::None,
            nonlinearity: true,
            potential: true,
            dt: 1e-3,
            tau: 0.1,
            t_max: 1.0,
            collision_on: false,
            out_dir: None,
            cadence: 10,
            snapshot_every: 0,
            ic: IcSpec {
                name: "gaussian".into(),
                x0: None,
                y0: None,
                width: 1.0,
                amp: 1.0,
                kx_index: 1,
                ky_index: 0,
                amp_phase: 0.5,
                path: String::new(),
            },
        }
    }
}

fn err_at(line: usize, msg: impl std::fmt::Display) -> QhdError {
    QhdError::Config(format!("line {line}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| err_at(line, format!("cannot parse '{value}' for key '{key}'")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        other => Err(err_at(line, format!("cannot parse '{other}' as bool for key '{key}'"))),
    }
}

impl SimConfig {
    /// Parse a config text; keys not present keep their defaults.
    pub fn parse(text: &str) -> Result<SimConfig> {
        let mut cfg = SimConfig::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(err_at(lineno, "unterminated section header"));
                }
                section = line[1..line.len() - 1].trim().to_string();
                match section.as_str() {
                    "grid" | "physics" | "time" | "ic" | "output" => {}
                    other => return Err(err_at(lineno, format!("unknown section [{other}]"))),
                }
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(err_at(lineno, format!("expected 'key = value', got '{line}'")));
            };
            let key = line[..eq].trim();
            let value = line[eq + 1..].trim();
            if section.is_empty() {
                return Err(err_at(lineno, format!("key '{key}' before any [section]")));
            }
            cfg.set_key(&section, key, value, lineno)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply one `section.key=value` override (CLI flags).
    pub fn apply_override(&mut self, path: &str, value: &str) -> Result<()> {
        let Some(dot) = path.find('.') else {
            return Err(QhdError::Config(format!(
                "override '{path}' is not of the form section.key"
            )));
        };
        let (section, key) = (&path[..dot], &path[dot + 1..]);
        self.set_key(section, key, value, 0)
    }

    fn set_key(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<()> {
        match (section, key) {
            ("grid", "nx") => self.nx = parse_num(line, key, value)?,
            ("grid", "ny") => self.ny = parse_num(line, key, value)?,
            ("grid", "lx") => self.lx = parse_num(line, key, value)?,
            ("grid", "ly") => self.ly = parse_num(line, key, value)?,
            ("physics", "hbar") => self.hbar = parse_num(line, key, value)?,
            ("physics", "p") => self.p = parse_num(line, key, value)?,
            ("physics", "poisson_mode") => {
                self.poisson_mode = PoissonMode::parse(value.trim())
                    .map_err(|e| err_at(line, e))?
            }
            ("physics", "doping") => {
                let v = value.trim();
                self.doping = if v == "none" {
                    DopingSpec::None
                } else if let Some(path) = v.strip_prefix("file:") {
                    DopingSpec::File(path.trim().to_string())
                } else {
                    return Err(err_at(
                        line,
                        format!("doping must be 'none' or 'file:<path>', got '{v}'"),
                    ));
                };
            }
            ("physics", "nonlinearity") => self.nonlinearity = parse_bool(line, key, value)?,
            ("physics", "potential") => self.potential = parse_bool(line, key, value)?,
            ("time", "dt") => self.dt = parse_num(line, key, value)?,
            ("time", "tau") => self.tau = parse_num(line, key, value)?,
            ("time", "t_max") => self.t_max = parse_num(line, key, value)?,
            ("time", "collision_on") => self.collision_on = parse_bool(line, key, value)?,
            ("ic", "name") => self.ic.name = value.trim().to_string(),
            ("ic", "x0") => self.ic.x0 = Some(parse_num(line, key, value)?),
            ("ic", "y0") => self.ic.y0 = Some(parse_num(line, key, value)?),
            ("ic", "width") => self.ic.width = parse_num(line, key, value)?,
            ("ic", "amp") => self.ic.amp = parse_num(line, key, value)?,
            ("ic", "kx_index") => self.ic.kx_index = parse_num(line, key, value)?,
            ("ic", "ky_index") => self.ic.ky_index = parse_num(line, key, value)?,
            ("ic", "amp_phase") => self.ic.amp_phase = parse_num(line, key, value)?,
            ("ic", "path") => self.ic.path = value.trim().to_string(),
            ("output", "out_dir") => self.out_dir = Some(value.trim().to_string()),
            ("output", "cadence") => self.cadence = parse_num(line, key, value)?,
            ("output", "snapshot_every") => self.snapshot_every = parse_num(line, key, value)?,
            (s, k) => {
                return Err(err_at(line, format!("unknown key '{k}' in section [{s}]")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (n, name) in [(self.nx, "grid.nx"), (self.ny, "grid.ny")] {
            if n < 4 || !n.is_power_of_two() {
                return Err(QhdError::Config(format!(
                    "{name} = {n} must be a power of two >= 4"
                )));
            }
        }
        for (v, name) in [(self.lx, "grid.lx"), (self.ly, "grid.ly")] {
            if !(v > 0.0) {
                return Err(QhdError::Config(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.hbar > 0.0) {
            return Err(QhdError::Config(format!(
                "physics.hbar = {} must be positive",
                self.hbar
            )));
        }
        if !(1.0..=5.0).contains(&self.p) {
            return Err(QhdError::Config(format!(
                "physics.p = {} outside the supported range [1, 5]",
                self.p
            )));
        }
        if !(self.dt > 0.0) {
            return Err(QhdError::Config(format!(
                "time.dt = {} must be positive",
                self.dt
            )));
        }
        if self.tau < self.dt {
            return Err(QhdError::Config(format!(
                "time.tau = {} must be >= time.dt = {}",
                self.tau, self.dt
            )));
        }
        let ratio = self.tau / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(QhdError::Config(format!(
                "time.tau / time.dt = {ratio} must be an integer"
            )));
        }
        if self.collision_on && !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(QhdError::Config(format!(
                "time.tau = {} must satisfy 0 < tau < 1 when time.collision_on is set",
                self.tau
            )));
        }
        if self.t_max < 0.0 {
            return Err(QhdError::Config("time.t_max must be non-negative".into()));
        }
        let steps = self.t_max / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * (1.0 + steps) {
            return Err(QhdError::Config(format!(
                "time.t_max / time.dt = {steps} must be an integer"
            )));
        }
        match self.ic.name.as_str() {
            "gaussian" | "gaussian_boosted" | "vortex" => {
                if !(self.ic.width > 0.0) {
                    return Err(QhdError::Config(format!(
                        "ic.width = {} must be positive",
                        self.ic.width
                    )));
                }
            }
            "plane_wave" | "phase_bump" => {}
            "file" => {
                if self.ic.path.is_empty() {
                    return Err(QhdError::Config("ic.path required when ic.name = file".into()));
                }
            }
            other => {
                return Err(QhdError::Config(format!(
                    "ic.name = '{other}' is not one of gaussian, plane_wave, \
                     gaussian_boosted, vortex, phase_bump, file"
                )));
            }
        }
        let half_nx = (self.nx / 2) as i32;
        let half_ny = (self.ny / 2) as i32;
        if self.ic.kx_index.abs() > half_nx || self.ic.ky_index.abs() > half_ny {
            return Err(QhdError::Config(format!(
                "ic mode index ({}, {}) beyond the Nyquist limit ({half_nx}, {half_ny})",
                self.ic.kx_index, self.ic.ky_index
            )));
        }
        Ok(())
    }

    /// Emit a text form that parses back to an equal configuration.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        s.push_str("[grid]\n");
        s.push_str(&format!("nx = {}\n", self.nx));
        s.push_str(&format!("ny = {}\n", self.ny));
        s.push_str(&format!("lx = {}\n", self.lx));
        s.push_str(&format!("ly = {}\n", self.ly));
        s.push_str("\n[physics]\n");
        s.push_str(&format!("hbar = {}\n", self.hbar));
        s.push_str(&format!("p = {}\n", self.p));
        s.push_str(&format!("poisson_mode = {}\n", self.poisson_mode.name()));
        match &self.doping {
            DopingSpec::None => s.push_str("doping = none\n"),
            DopingSpec::File(p) => s.push_str(&format!("doping = file:{p}\n")),
        }
        s.push_str(&format!("nonlinearity = {}\n", self.nonlinearity));
        s.push_str(&format!("potential = {}\n", self.potential));
        s.push_str("\n[time]\n");
        s.push_str(&format!("dt = {}\n", self.dt));
        s.push_str(&format!("tau = {}\n", self.tau));
        s.push_str(&format!("t_max = {}\n", self.t_max));
        s.push_str(&format!("collision_on = {}\n", self.collision_on));
        s.push_str("\n[ic]\n");
        s.push_str(&format!("name = {}\n", self.ic.name));
        if let Some(x0) = self.ic.x0 {
            s.push_str(&format!("x0 = {x0}\n"));
        }
        if let Some(y0) = self.ic.y0 {
            s.push_str(&format!("y0 = {y0}\n"));
        }
        s.push_str(&format!("width = {}\n", self.ic.width));
        s.push_str(&format!("amp = {}\n", self.ic.amp));
        s.push_str(&format!("kx_index = {}\n", self.ic.kx_index));
        s.push_str(&format!("ky_index = {}\n", self.ic.ky_index));
        s.push_str(&format!("amp_phase = {}\n", self.ic.amp_phase));
        if !self.ic.path.is_empty() {
            s.push_str(&format!("path = {}\n", self.ic.path));
        }
        s.push_str("\n[output]\n");
        if let Some(d) = &self.out_dir {
            s.push_str(&format!("out_dir = {d}\n"));
        }
        s.push_str(&format!("cadence = {}\n", self.cadence));
        s.push_str(&format!("snapshot_every = {}\n", self.snapshot_every));
        s
    }
}
