//! Parameter sweeps over independent grid points, emitted as CSV in axis order.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{Config, Spacing};
use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::gate::{run_gate, GateInput, GateOptions};
use crate::hilbert::{ControlLevel, EnsembleLevel, Model};
use crate::params::PhysParams;
use crate::susceptibility::susceptibility;

pub const WORKERS_ENV: &str = "RYDGATE_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    /// χ(δ) with and without the Rydberg shift.
    Susceptibility,
    /// Blocking fidelity against Ω_c/max(Ω_p).
    Blocking,
    /// Transfer fidelity against V_k/ε.
    Transfer,
    /// GHZ fidelity against uniform V_jk/ε for several x_max.
    Ghz,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [Experiment::Susceptibility, Experiment::Blocking, Experiment::Transfer, Experiment::Ghz];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Susceptibility => "susceptibility",
            Experiment::Blocking => "blocking",
            Experiment::Transfer => "transfer",
            Experiment::Ghz => "ghz",
        }
    }

    pub fn header(self) -> &'static str {
        match self {
            Experiment::Susceptibility => "delta,re_chi_v0,im_chi_v0,re_chi_vk,im_chi_vk",
            Experiment::Blocking => "ratio,fidelity,norm_loss",
            Experiment::Transfer => "v_over_eps,fidelity,norm_loss",
            Experiment::Ghz => "vjk_over_eps,x_max,fidelity,norm_loss",
        }
    }

    fn columns(self) -> usize {
        self.header().split(',').count()
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn linear(start: f64, stop: f64, points: usize) -> Self {
        Axis { start, stop, points, spacing: Spacing::Linear }
    }

    pub fn log(start: f64, stop: f64, points: usize) -> Self {
        Axis { start, stop, points, spacing: Spacing::Log }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::InvalidParameter(format!("an axis needs at least 2 points, got {}", self.points)));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::InvalidParameter("axis bounds must be finite".into()));
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(Error::InvalidParameter("log axis bounds must be positive".into()));
        }
        Ok(())
    }

    /// Grid values; the endpoints are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i == 0 {
                    return self.start;
                }
                if i + 1 == self.points {
                    return self.stop;
                }
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + f * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub experiment: Experiment,
    pub axis: Axis,
    /// Parameters the sweep overrides point by point.
    pub params: PhysParams,
    pub model: Model,
    pub include_decay: bool,
    pub integrator: IntegratorConfig,
    /// Curves of the GHZ sweep.
    pub x_max_values: Vec<f64>,
    /// `None` uses the rayon default.
    pub workers: Option<usize>,
}

impl SweepSpec {
    /// Default grid for each experiment on the preset.
    pub fn new(experiment: Experiment) -> Self {
        let params = PhysParams::rb87(if experiment == Experiment::Ghz { 3 } else { 1 });
        let axis = match experiment {
            Experiment::Susceptibility => {
                Axis::linear(params.delta - 5.0 * params.omega_c, params.delta + 5.0 * params.omega_c, 401)
            }
            Experiment::Blocking => Axis::linear(1.0, 6.0, 25),
            Experiment::Transfer => Axis::log(1.0, 1e3, 30),
            Experiment::Ghz => Axis::log(0.1, 1e4, 30),
        };
        SweepSpec {
            experiment,
            axis,
            params,
            model: Model::Effective,
            include_decay: false,
            integrator: IntegratorConfig::default(),
            x_max_values: vec![0.1, 0.2, 0.3, 0.4],
            workers: None,
        }
    }

    /// Defaults overridden by a parsed config file.
    pub fn from_config(experiment: Experiment, config: &Config) -> Self {
        let mut spec = SweepSpec::new(experiment);
        spec.params = config.params.clone();
        if experiment == Experiment::Susceptibility {
            let p = &spec.params;
            spec.axis = Axis::linear(p.delta - 5.0 * p.omega_c, p.delta + 5.0 * p.omega_c, spec.axis.points);
        }
        let s = &config.sweep;
        if let Some(v) = s.points {
            spec.axis.points = v;
        }
        if let Some(v) = s.start {
            spec.axis.start = v;
        }
        if let Some(v) = s.stop {
            spec.axis.stop = v;
        }
        if let Some(v) = s.spacing {
            spec.axis.spacing = v;
        }
        if let Some(v) = s.model {
            spec.model = v;
        }
        if let Some(v) = s.include_decay {
            spec.include_decay = v;
        }
        if let Some(v) = &s.x_max {
            spec.x_max_values = v.clone();
        }
        spec.workers = s.workers;
        spec
    }

    pub fn validate(&self) -> Result<()> {
        self.axis.validate()?;
        self.integrator.validate()?;
        self.params.validate()?;
        match self.experiment {
            Experiment::Blocking if self.axis.start <= 0.0 => {
                Err(Error::InvalidParameter("Ω_c/Ω_p ratios must be positive".into()))
            }
            Experiment::Transfer | Experiment::Ghz if self.axis.start < 0.0 || self.axis.stop < 0.0 => {
                Err(Error::InvalidParameter("interaction strengths must be nonnegative".into()))
            }
            Experiment::Blocking | Experiment::Transfer if self.params.n_atoms == 0 => {
                Err(Error::InvalidParameter("the sweep needs at least one ensemble atom".into()))
            }
            Experiment::Ghz if self.x_max_values.is_empty() || self.x_max_values.iter().any(|&x| !(x > 0.0)) => {
                Err(Error::InvalidParameter("GHZ sweep needs positive x_max values".into()))
            }
            _ => Ok(()),
        }
    }

    fn options(&self) -> GateOptions {
        GateOptions { model: self.model, include_decay: self.include_decay, integrator: self.integrator, ..GateOptions::default() }
    }
}

/// One CSV line. A failed point keeps its axis values and carries NaN results.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub experiment: Experiment,
    pub rows: Vec<SweepRow>,
}

/// Interaction strengths of atom 0 and pair (0, 1) in units of ε.
fn interactions_over_eps(p: &PhysParams) -> (f64, f64) {
    let eps = p.epsilon();
    let vk = p.v_control.first().map_or(40.0, |v| v / eps);
    let vjk = if p.n_atoms >= 2 { p.v_jk(0, 1) / eps } else { 0.0 };
    (vk, vjk)
}

fn gate_point(input: &GateInput, params: &PhysParams, options: &GateOptions) -> std::result::Result<[f64; 2], String> {
    run_gate(input, params, options).map(|o| [o.fidelity, o.norm_loss]).map_err(|e| e.to_string())
}

fn point(spec: &SweepSpec, axis: &[f64]) -> SweepRow {
    let base = &spec.params;
    let (vk, vjk) = interactions_over_eps(base);
    let ensemble = |n| vec![EnsembleLevel::A; n];
    let result = match spec.experiment {
        Experiment::Susceptibility => {
            let shift = base.v_control.first().copied().unwrap_or(40.0 * base.epsilon());
            let free = susceptibility(axis[0], base, 0.0);
            let shifted = susceptibility(axis[0], base, shift);
            Ok(vec![free.re, free.im, shifted.re, shifted.im])
        }
        Experiment::Blocking => {
            let mut p = base.clone().with_ratio(axis[0]);
            p.set_uniform_interactions(vk, vjk);
            GateInput::basis(ControlLevel::Zero, ensemble(p.n_atoms))
                .map_err(|e| e.to_string())
                .and_then(|input| gate_point(&input, &p, &spec.options()))
                .map(Vec::from)
        }
        Experiment::Transfer => {
            let mut p = base.clone();
            p.set_uniform_interactions(axis[0], vjk);
            GateInput::basis(ControlLevel::One, ensemble(p.n_atoms))
                .map_err(|e| e.to_string())
                .and_then(|input| gate_point(&input, &p, &spec.options()))
                .map(Vec::from)
        }
        Experiment::Ghz => {
            let mut p = base.clone().with_x_max(axis[1]);
            p.n_atoms = 3;
            p.set_uniform_interactions(vk, axis[0]);
            GateInput::superposition(ensemble(3))
                .map_err(|e| e.to_string())
                .and_then(|input| gate_point(&input, &p, &spec.options()))
                .map(Vec::from)
        }
    };
    match result {
        Ok(values) => SweepRow { axis: axis.to_vec(), values, error: None },
        Err(e) => SweepRow {
            axis: axis.to_vec(),
            values: vec![f64::NAN; spec.experiment.columns() - axis.len()],
            error: Some(e),
        },
    }
}

fn grid(spec: &SweepSpec) -> Vec<Vec<f64>> {
    let values = spec.axis.values();
    match spec.experiment {
        Experiment::Ghz => spec
            .x_max_values
            .iter()
            .flat_map(|&x| values.iter().map(move |&v| vec![v, x]))
            .collect(),
        _ => values.into_iter().map(|v| vec![v]).collect(),
    }
}

/// Evaluates every grid point. Point failures become NaN rows; only an
/// invalid spec is an error.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let points = grid(spec);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = spec.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let rows = pool.install(|| points.par_iter().map(|a| point(spec, a)).collect());
    Ok(SweepOutput { experiment: spec.experiment, rows })
}

/// Worker count with precedence flag > `RYDGATE_WORKERS` > config.
pub fn resolve_workers(flag: Option<usize>, config: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidParameter(format!("{WORKERS_ENV} must be a nonnegative integer, got `{v}`"))),
        _ => Ok(config),
    }
}

impl SweepOutput {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.failed()).count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.experiment.header())?;
        for row in &self.rows {
            let fields: Vec<String> = row.axis.iter().chain(&row.values).map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }
}
