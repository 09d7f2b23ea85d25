//! Plain-text configuration: `key = value` lines grouped in `[section]`s.
//!
//! ```text
//! preset = rb87
//! [atoms]
//! n = 2
//! [lasers]
//! delta_ghz = 1.2
//! omega_c_mhz = 420
//! omega_p_max_mhz = 70
//! [decay]
//! gamma_p_per_us = 36
//! tau_r_us = 66
//! [interactions]
//! v_control_over_eps = 40, 40
//! v_ensemble_over_eps = 0, 5; 5, 0
//! [sweep]
//! points = 20
//! ```
//!
//! Frequencies are given as ν in MHz/GHz and stored as ω = 2πν. `#` and `;`
//! at the start of a line begin comments. Interaction rows are separated by
//! `;` and a single number stands for a uniform value.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hilbert::Model;
use crate::params::{pi_pulse_duration, pi_pulse_omega_max, PhysParams};

/// Grid spacing of a sweep axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

impl FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "lin" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            _ => Err(Error::InvalidParameter(format!("unknown spacing `{s}` (linear or log)"))),
        }
    }
}

/// Optional `[sweep]` settings; unset fields fall back to the experiment defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepSection {
    pub points: Option<usize>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub spacing: Option<Spacing>,
    pub workers: Option<usize>,
    pub model: Option<Model>,
    pub include_decay: Option<bool>,
    pub x_max: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub params: PhysParams,
    pub sweep: SweepSection,
    /// Regime warnings from [`PhysParams::validate`].
    pub warnings: Vec<String>,
}

#[derive(Default)]
struct Raw {
    preset: Option<usize>,
    n: Option<(usize, usize)>,
    delta: Option<f64>,
    omega_c: Option<f64>,
    omega_p_max: Option<f64>,
    t_raman: Option<f64>,
    gamma_p: Option<(usize, f64)>,
    tau_r: Option<f64>,
    v_control: Option<(usize, Vec<f64>)>,
    v_ensemble: Option<(usize, Vec<Vec<f64>>)>,
    sweep: SweepSection,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn number(line: usize, key: &str, value: &str) -> Result<f64> {
    let v: f64 = value.parse().map_err(|_| err(line, format!("`{key}` expects a number, got `{value}`")))?;
    if !v.is_finite() {
        return Err(err(line, format!("`{key}` must be finite")));
    }
    Ok(v)
}

fn positive(line: usize, key: &str, value: &str) -> Result<f64> {
    let v = number(line, key, value)?;
    if v <= 0.0 {
        return Err(err(line, format!("`{key}` must be positive, got {v}")));
    }
    Ok(v)
}

fn list(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|s| number(line, key, s.trim())).collect()
}

fn boolean(line: usize, key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(err(line, format!("`{key}` expects true or false, got `{value}`"))),
    }
}

fn count(line: usize, key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| err(line, format!("`{key}` expects a nonnegative integer, got `{value}`")))
}

fn set<T>(slot: &mut Option<T>, line: usize, key: &str, v: T) -> Result<()> {
    if slot.is_some() {
        return Err(err(line, format!("duplicate key `{key}`")));
    }
    *slot = Some(v);
    Ok(())
}

impl Raw {
    fn assign(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<()> {
        match (section, key) {
            ("", "preset") => {
                if !value.eq_ignore_ascii_case("rb87") {
                    return Err(err(line, format!("unknown preset `{value}`")));
                }
                set(&mut self.preset, line, key, line)
            }
            ("atoms", "n") => set(&mut self.n, line, key, (line, count(line, key, value)?)),
            ("lasers", "delta_ghz") => set(&mut self.delta, line, key, TAU * 1e9 * positive(line, key, value)?),
            ("lasers", "omega_c_mhz") => {
                let v = number(line, key, value)?;
                if v < 0.0 {
                    return Err(err(line, "`omega_c_mhz` must be nonnegative"));
                }
                set(&mut self.omega_c, line, key, TAU * 1e6 * v)
            }
            ("lasers", "omega_p_max_mhz") => {
                set(&mut self.omega_p_max, line, key, TAU * 1e6 * positive(line, key, value)?)
            }
            ("lasers", "t_raman_us") => set(&mut self.t_raman, line, key, 1e-6 * positive(line, key, value)?),
            ("decay", "gamma_p_per_us") => {
                let v = number(line, key, value)?;
                set(&mut self.gamma_p, line, "gamma_p", (line, 1e6 * v))
            }
            ("decay", "gamma_p_2pi_mhz") => {
                let v = number(line, key, value)?;
                set(&mut self.gamma_p, line, "gamma_p", (line, TAU * 1e6 * v))
            }
            ("decay", "tau_r_us") => set(&mut self.tau_r, line, key, 1e-6 * positive(line, key, value)?),
            ("interactions", "v_control_over_eps") => {
                set(&mut self.v_control, line, key, (line, list(line, key, value)?))
            }
            ("interactions", "v_ensemble_over_eps") => {
                let rows = value.split(';').map(|r| list(line, key, r.trim())).collect::<Result<Vec<_>>>()?;
                set(&mut self.v_ensemble, line, key, (line, rows))
            }
            ("sweep", "points") => {
                let p = count(line, key, value)?;
                if p < 2 {
                    return Err(err(line, "a sweep needs at least 2 points"));
                }
                set(&mut self.sweep.points, line, key, p)
            }
            ("sweep", "start") => set(&mut self.sweep.start, line, key, number(line, key, value)?),
            ("sweep", "stop") => set(&mut self.sweep.stop, line, key, number(line, key, value)?),
            ("sweep", "spacing") => {
                let s = value.parse().map_err(|e: Error| err(line, e.to_string()))?;
                set(&mut self.sweep.spacing, line, key, s)
            }
            ("sweep", "workers") => set(&mut self.sweep.workers, line, key, count(line, key, value)?),
            ("sweep", "model") => {
                let m = Model::parse(value).map_err(|e| err(line, e.to_string()))?;
                set(&mut self.sweep.model, line, key, m)
            }
            ("sweep", "decay") => set(&mut self.sweep.include_decay, line, key, boolean(line, key, value)?),
            ("sweep", "x_max") => {
                let xs = list(line, key, value)?;
                if xs.iter().any(|&x| x <= 0.0) {
                    return Err(err(line, "`x_max` values must be positive"));
                }
                set(&mut self.sweep.x_max, line, key, xs)
            }
            ("", _) => Err(err(line, format!("unknown top-level key `{key}`"))),
            _ => Err(err(line, format!("unknown key `{key}` in section [{section}]"))),
        }
    }

    fn build(self, last_line: usize) -> Result<Config> {
        let base = self.preset.map(|_| PhysParams::rb87(1));
        let missing = |what: &str| err(last_line, format!("missing `{what}` (or set preset = rb87)"));

        let delta = self.delta.or(base.as_ref().map(|b| b.delta)).ok_or_else(|| missing("delta_ghz"))?;
        let omega_c = self.omega_c.or(base.as_ref().map(|b| b.omega_c)).ok_or_else(|| missing("omega_c_mhz"))?;
        // Ω_max and T are tied by the π-area condition unless both are given.
        let (omega_p_max, t_raman) = match (self.omega_p_max, self.t_raman) {
            (Some(w), Some(t)) => (w, t),
            (Some(w), None) => (w, pi_pulse_duration(delta, w)),
            (None, Some(t)) => (pi_pulse_omega_max(delta, t)?, t),
            (None, None) => match &base {
                Some(_) => {
                    let w = PhysParams::rb87(1).omega_p_max;
                    (w, pi_pulse_duration(delta, w))
                }
                None => return Err(missing("omega_p_max_mhz or t_raman_us")),
            },
        };
        let gamma_p = self.gamma_p.map(|g| g.1).or(base.as_ref().map(|b| b.gamma_p)).ok_or_else(|| missing("gamma_p_per_us"))?;
        let tau_r = self.tau_r.or(base.as_ref().map(|b| b.tau_r)).ok_or_else(|| missing("tau_r_us"))?;
        let n = match self.n {
            Some((_, n)) => n,
            None if base.is_some() => 1,
            None => return Err(missing("[atoms] n")),
        };

        let mut params = PhysParams {
            delta,
            omega_c,
            omega_p_max,
            t_raman,
            gamma_p,
            tau_r,
            v_control: Vec::new(),
            v_ensemble: Vec::new(),
            n_atoms: n,
        };
        let eps = params.epsilon();
        let default_vk = if base.is_some() { 40.0 } else { 0.0 };
        params.set_uniform_interactions(default_vk, 0.0);

        if let Some((line, vs)) = self.v_control {
            params.v_control = match vs.len() {
                1 => vec![vs[0] * eps; n],
                len if len == n => vs.iter().map(|v| v * eps).collect(),
                len => return Err(err(line, format!("`v_control_over_eps` has {len} entries for {n} atoms"))),
            };
        }
        if let Some((line, rows)) = self.v_ensemble {
            if rows.len() == 1 && rows[0].len() == 1 {
                let v = rows[0][0] * eps;
                params.v_ensemble = (0..n * n).map(|i| if i / n == i % n { 0.0 } else { v }).collect();
            } else {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(err(line, format!("`v_ensemble_over_eps` must be a scalar or {n} rows of {n}")));
                }
                params.v_ensemble = rows.iter().flatten().map(|v| v * eps).collect();
            }
        }
        let warnings = params.validate().map_err(|e| err(last_line, e.to_string()))?;
        Ok(Config { params, sweep: self.sweep, warnings })
    }
}

impl Config {
    /// The preset with no overrides.
    pub fn preset() -> Self {
        Config { params: PhysParams::rb87(1), sweep: SweepSection::default(), warnings: Vec::new() }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Raw::default();
        let mut section = String::new();
        let mut last = 0;
        for (i, line) in text.lines().enumerate() {
            let no = i + 1;
            last = no;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(no, format!("malformed section header `{line}`")))?
                    .trim();
                if !matches!(name, "atoms" | "lasers" | "decay" | "interactions" | "sweep") {
                    return Err(err(no, format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(no, format!("expected `key = value`, got `{line}`")))?;
            let value = value.split_once(" #").map_or(value, |(v, _)| v);
            raw.assign(&section, key.trim(), value.trim(), no)?;
        }
        raw.build(last.max(1))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn trim_number(v: f64) -> String {
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_string()
}

/// The preset written out in the config format; parsing it back gives the
/// preset parameters.
pub fn dump_preset() -> String {
    let p = PhysParams::rb87(1);
    let mut out = String::new();
    let _ = writeln!(out, "# Rb87 preset (frequencies as nu, omega = 2*pi*nu)");
    let _ = writeln!(out, "# epsilon = 2pi * {} MHz, x_max = {}", trim_number(p.epsilon() / TAU / 1e6), trim_number(p.x_max()));
    let _ = writeln!(out, "[atoms]\nn = {}", p.n_atoms);
    let _ = writeln!(out, "[lasers]");
    let _ = writeln!(out, "delta_ghz = {}", trim_number(p.delta / TAU / 1e9));
    let _ = writeln!(out, "omega_c_mhz = {}", trim_number(p.omega_c / TAU / 1e6));
    let _ = writeln!(out, "omega_p_max_mhz = {}", trim_number(p.omega_p_max / TAU / 1e6));
    let _ = writeln!(out, "# t_raman_us = {} follows from the pi-area condition", trim_number(p.t_raman * 1e6));
    let _ = writeln!(out, "[decay]");
    let _ = writeln!(out, "gamma_p_per_us = {}", trim_number(p.gamma_p / 1e6));
    let _ = writeln!(out, "tau_r_us = {}", trim_number(p.tau_r * 1e6));
    let _ = writeln!(out, "[interactions]");
    let _ = writeln!(out, "v_control_over_eps = 40");
    let _ = writeln!(out, "v_ensemble_over_eps = 0");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
    }

    fn same(a: &PhysParams, b: &PhysParams) -> bool {
        let scalars = [
            (a.delta, b.delta),
            (a.omega_c, b.omega_c),
            (a.omega_p_max, b.omega_p_max),
            (a.t_raman, b.t_raman),
            (a.gamma_p, b.gamma_p),
            (a.tau_r, b.tau_r),
        ];
        a.n_atoms == b.n_atoms
            && scalars.iter().all(|&(x, y)| close(x, y))
            && a.v_control.iter().zip(&b.v_control).all(|(x, y)| close(*x, *y))
            && a.v_ensemble.iter().zip(&b.v_ensemble).all(|(x, y)| close(*x, *y) || (*x == 0.0 && *y == 0.0))
    }

    #[test]
    fn preset_key_loads_defaults() {
        let c = Config::parse("preset = rb87\n").unwrap();
        assert_eq!(c.params, PhysParams::rb87(1));
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn dump_round_trips() {
        let c = Config::parse(&dump_preset()).unwrap();
        assert!(same(&c.params, &PhysParams::rb87(1)));
        assert!(dump_preset().contains("delta_ghz = 1.2\n"));
        assert!(dump_preset().contains("omega_p_max_mhz = 70\n"));
    }

    #[test]
    fn overrides_and_matrices() {
        let text = "preset=rb87\n[atoms]\nn = 3\n[interactions]\nv_control_over_eps = 10, 20, 30\nv_ensemble_over_eps = 0,1,2; 1,0,3; 2,3,0\n";
        let c = Config::parse(text).unwrap();
        let eps = c.params.epsilon();
        assert_eq!(c.params.n_atoms, 3);
        assert!(close(c.params.v_control[2], 30.0 * eps));
        assert!(close(c.params.v_jk(1, 2), 3.0 * eps));
        assert!(close(c.params.v_jk(2, 0), 2.0 * eps));

        let c = Config::parse("preset=rb87\n[atoms]\nn=2\n[interactions]\nv_ensemble_over_eps = 7\n").unwrap();
        assert!(close(c.params.v_jk(0, 1), 7.0 * c.params.epsilon()));
        assert_eq!(c.params.v_jk(1, 1), 0.0);
        assert!(close(c.params.v_control[1], 40.0 * c.params.epsilon()));
    }

    #[test]
    fn pulse_area_ties_omega_and_duration() {
        let c = Config::parse("preset=rb87\n[lasers]\nt_raman_us = 0.44\n").unwrap();
        // Δ = 2π·1.2 GHz, T = 0.44 μs → Ω_max ≈ 2π·85.3 MHz
        assert!((c.params.omega_p_max / TAU / 1e6 - 85.3).abs() < 0.05);
        assert!((c.params.pulse().raman_area(c.params.delta) / std::f64::consts::PI - 1.0).abs() < 1e-6);
        assert!(c.warnings.is_empty());
        let both = Config::parse("preset=rb87\n[lasers]\nomega_p_max_mhz = 70\nt_raman_us = 0.44\n").unwrap();
        assert!((both.params.t_raman - 0.44e-6).abs() < 1e-15);
        assert!(both.warnings.iter().any(|w| w.contains("pi pulse")));
    }

    #[test]
    fn gamma_readings() {
        let rate = Config::parse("preset=rb87\n[decay]\ngamma_p_per_us = 36\n").unwrap();
        let angular = Config::parse("preset=rb87\n[decay]\ngamma_p_2pi_mhz = 36\n").unwrap();
        assert_eq!(rate.params.gamma_p, 36e6);
        assert!(close(angular.params.gamma_p, TAU * 36e6));
        let both = Config::parse("preset=rb87\n[decay]\ngamma_p_per_us = 36\ngamma_p_2pi_mhz = 36\n");
        assert!(matches!(both, Err(Error::Config { line: 4, .. })));
    }

    #[test]
    fn sweep_section() {
        let c = Config::parse("preset=rb87\n[sweep]\npoints=7\nspacing=log\nworkers=2\nmodel=full\ndecay=on\nx_max=0.1,0.3\n").unwrap();
        assert_eq!(c.sweep.points, Some(7));
        assert_eq!(c.sweep.spacing, Some(Spacing::Log));
        assert_eq!(c.sweep.workers, Some(2));
        assert_eq!(c.sweep.model, Some(Model::Full));
        assert_eq!(c.sweep.include_decay, Some(true));
        assert_eq!(c.sweep.x_max, Some(vec![0.1, 0.3]));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("preset=rb87\n[lasers]\nwavelength = 780\n", 3),
            ("preset=rb87\n[optics]\n", 2),
            ("preset=rb87\n\n[atoms]\nn = two\n", 4),
            ("preset=rb87\n[atoms]\nn=2\n[interactions]\nv_control_over_eps = 1,2,3\n", 5),
            ("preset=rb87\n[lasers]\ndelta_ghz = -1\n", 3),
            ("preset=rb87\nnonsense\n", 2),
            ("preset=rb85\n", 1),
            ("preset=rb87\n[sweep]\npoints = 1\n", 3),
        ];
        for (text, line) in cases {
            match Config::parse(text) {
                Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn explicit_file_without_preset() {
        let text = "[atoms]\nn=1\n[lasers]\ndelta_ghz=2.4\nomega_c_mhz=420\nomega_p_max_mhz=70\n[decay]\ngamma_p_per_us=36\ntau_r_us=66\n";
        let c = Config::parse(text).unwrap();
        assert!(close(c.params.delta, TAU * 2.4e9));
        assert_eq!(c.params.v_control, vec![0.0]);
        assert!(Config::parse("[atoms]\nn=1\n").is_err());
    }
}
