use std::f64::consts::{PI, SQRT_2, TAU};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rydgate::config::{dump_preset, Config, Spacing};
use rydgate::gate::{dark_states, run_gate, ControlPulse, GateInput, GateOptions};
use rydgate::hamiltonian::effective_site_matrix;
use rydgate::hilbert::{basis_index, parse_labels, write_snapshot};
use rydgate::interferometer::{run_interferometer, BranchUnitary, GateMode};
use rydgate::susceptibility::susceptibility_with_regulator;
use rydgate::sweep::{resolve_workers, run_sweep, Experiment, SweepSpec};
use rydgate::{ControlLevel, Error, EnsembleLevel, HamiltonianSpec, IntegratorConfig, LevelScheme, Model, PhysParams, C64};

/// Simulator for an EIT-controlled Rydberg CNOT^N gate.
#[derive(Parser)]
#[command(name = "rydgate", version)]
struct Cli {
    /// Parameter file; the Rb87 preset is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one gate and print a key=value report.
    Gate(GateArgs),
    /// Run a parameter sweep and write CSV.
    Sweep(SweepArgs),
    /// Run the overlap interferometer.
    Interfere(InterfereArgs),
    /// Quick self-checks of the numerics.
    Validate,
    /// Preset parameter sets.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// Print the Rb87 preset in the config format.
    Dump,
}

#[derive(Args)]
struct ModelArgs {
    /// effective or full.
    #[arg(long)]
    model: Option<String>,
    /// Include |P> scattering and |r> decay.
    #[arg(long)]
    decay: bool,
    /// Relative tolerance of the adaptive integrator.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Absolute tolerance of the adaptive integrator.
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Step budget per integration.
    #[arg(long)]
    max_steps: Option<usize>,
}

impl ModelArgs {
    fn integrator(&self) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::default();
        if self.rel_tol.is_some() || self.abs_tol.is_some() {
            cfg.method = IntegratorConfig::adaptive(self.rel_tol.unwrap_or(1e-9), self.abs_tol.unwrap_or(1e-12)).method;
        }
        if let Some(n) = self.max_steps {
            cfg.max_steps = n;
        }
        cfg
    }

    fn model(&self, fallback: Option<Model>) -> Result<Model, Error> {
        match &self.model {
            Some(m) => Model::parse(m),
            None => Ok(fallback.unwrap_or(Model::Effective)),
        }
    }
}

#[derive(Args)]
struct GateArgs {
    /// Control input: 0, 1, or + for (|0>+|1>)/√2.
    #[arg(long, default_value = "1")]
    control: String,
    /// Ensemble labels over A and B; the length sets N.
    #[arg(long, default_value = "A")]
    ensemble: String,
    /// V_k/ε, one value or one per atom.
    #[arg(long, value_delimiter = ',')]
    v_control: Option<Vec<f64>>,
    /// Uniform V_jk/ε.
    #[arg(long)]
    v_ensemble: Option<f64>,
    /// x_max = √2·max(Ω_p)/Ω_c, set through Ω_c.
    #[arg(long)]
    x_max: Option<f64>,
    /// Resolve the control π-pulses with Ω_r = 2π·value MHz.
    #[arg(long)]
    omega_r_mhz: Option<f64>,
    /// Write the final state snapshot here.
    #[arg(long)]
    state_out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// susceptibility, blocking, transfer or ghz.
    experiment: String,
    /// Grid size, at least 2.
    #[arg(long)]
    points: Option<usize>,
    /// First axis value: probe detuning in rad/s, Ω_c/Ω_p, V_k/ε or V_jk/ε by experiment.
    #[arg(long)]
    start: Option<f64>,
    /// Last axis value, included exactly.
    #[arg(long)]
    stop: Option<f64>,
    /// linear or log.
    #[arg(long)]
    spacing: Option<String>,
    /// x_max curves of the ghz sweep.
    #[arg(long, value_delimiter = ',')]
    x_max: Option<Vec<f64>>,
    /// Worker threads; overrides RYDGATE_WORKERS and the config.
    #[arg(long)]
    workers: Option<usize>,
    /// Output file, `-` for standard output.
    #[arg(long, default_value = "-")]
    out: String,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct InterfereArgs {
    /// Number of ensemble atoms.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Auxiliary dimension, used when --phi is absent.
    #[arg(long, default_value_t = 2)]
    aux_dim: usize,
    /// Auxiliary amplitudes `re` or `re:im`, normalized on input. Uniform by default.
    #[arg(long, value_delimiter = ',')]
    phi: Option<Vec<String>>,
    /// Branch unitary on |A^N>: identity, global:θ, phase:k:θ or mix:i:j:θ.
    #[arg(long, default_value = "identity")]
    ua: String,
    /// Branch unitary on |B^N>.
    #[arg(long, default_value = "identity")]
    ub: String,
    /// Replace the ideal gate by the simulated pulse sequence.
    #[arg(long)]
    simulated: bool,
    #[command(flatten)]
    model: ModelArgs,
}

fn load_config(path: Option<&Path>) -> Result<Config, Error> {
    let config = match path {
        Some(p) => Config::load(p)?,
        None => Config::preset(),
    };
    for w in &config.warnings {
        eprintln!("warning: {w}");
    }
    Ok(config)
}

fn open_out(out: &str) -> Result<Box<dyn Write>, Error> {
    Ok(if out == "-" { Box::new(io::stdout().lock()) } else { Box::new(BufWriter::new(File::create(out)?)) })
}

fn cmd_gate(args: &GateArgs, config: &Config) -> Result<(), Error> {
    let ensemble = parse_labels(&args.ensemble)?;
    let n = ensemble.len();
    let mut params = config.params.clone();
    if let Some(x) = args.x_max {
        if !(x > 0.0) {
            return Err(Error::InvalidParameter("x_max must be positive".into()));
        }
        let eps = params.epsilon();
        let vk: Vec<f64> = params.v_control.iter().map(|v| v / eps).collect();
        let vjk: Vec<f64> = params.v_ensemble.iter().map(|v| v / eps).collect();
        params = params.with_x_max(x);
        let eps = params.epsilon();
        params.v_control = vk.iter().map(|v| v * eps).collect();
        params.v_ensemble = vjk.iter().map(|v| v * eps).collect();
    }
    if params.n_atoms != n {
        params = params.with_n_atoms(n);
    }
    let eps = params.epsilon();
    if let Some(vs) = &args.v_control {
        params.v_control = match vs.len() {
            1 => vec![vs[0] * eps; n],
            len if len == n => vs.iter().map(|v| v * eps).collect(),
            len => return Err(Error::InvalidParameter(format!("--v-control has {len} values for {n} atoms"))),
        };
    }
    if let Some(v) = args.v_ensemble {
        params.v_ensemble = (0..n * n).map(|i| if i / n == i % n { 0.0 } else { v * eps }).collect();
    }
    for w in params.validate()? {
        eprintln!("warning: {w}");
    }
    let input = match args.control.as_str() {
        "+" => GateInput::superposition(ensemble)?,
        c => GateInput::basis(ControlLevel::parse(c)?, ensemble)?,
    };
    let control_pulse = match args.omega_r_mhz {
        Some(f) if f > 0.0 => ControlPulse::Resolved { omega_r: TAU * 1e6 * f, duration: PI / (TAU * 1e6 * f) },
        Some(_) => return Err(Error::InvalidParameter("--omega-r-mhz must be positive".into())),
        None => ControlPulse::Instant,
    };
    let options = GateOptions {
        model: args.model.model(None)?,
        include_decay: args.model.decay,
        control_pulse,
        integrator: args.model.integrator(),
    };
    let outcome = run_gate(&input, &params, &options)?;
    print!("{}", outcome.report_text());
    if let Some(path) = &args.state_out {
        write_snapshot(&outcome.final_state, BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, config: &Config) -> Result<bool, Error> {
    let experiment: Experiment = args.experiment.parse()?;
    let mut spec = SweepSpec::from_config(experiment, config);
    if let Some(v) = args.points {
        spec.axis.points = v;
    }
    if let Some(v) = args.start {
        spec.axis.start = v;
    }
    if let Some(v) = args.stop {
        spec.axis.stop = v;
    }
    if let Some(s) = &args.spacing {
        spec.axis.spacing = s.parse::<Spacing>()?;
    }
    if let Some(xs) = &args.x_max {
        spec.x_max_values = xs.clone();
    }
    spec.model = args.model.model(Some(spec.model))?;
    spec.include_decay |= args.model.decay;
    spec.integrator = args.model.integrator();
    spec.workers = resolve_workers(args.workers, config.sweep.workers)?;
    let output = run_sweep(&spec)?;
    let mut w = open_out(&args.out)?;
    output.write_csv(&mut w)?;
    w.flush()?;
    for row in output.rows.iter().filter(|r| r.failed()) {
        eprintln!("point {:?} failed: {}", row.axis, row.error.as_deref().unwrap_or(""));
    }
    Ok(output.failures() == 0)
}

fn parse_unitary(s: &str, d: usize) -> Result<BranchUnitary, Error> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::InvalidParameter(format!("malformed branch unitary `{s}`"));
    let num = |p: &str| p.parse::<f64>().map_err(|_| bad());
    let idx = |p: &str| p.parse::<usize>().map_err(|_| bad());
    match parts.as_slice() {
        ["identity"] => BranchUnitary::identity(d),
        ["global", t] => BranchUnitary::global_phase(d, num(t)?),
        ["phase", k, t] => BranchUnitary::phase_rotation(d, idx(k)?, num(t)?),
        ["mix", i, j, t] => BranchUnitary::two_level_mixing(d, idx(i)?, idx(j)?, num(t)?),
        _ => Err(bad()),
    }
}

fn parse_phi(items: &[String]) -> Result<Vec<C64>, Error> {
    let mut phi = Vec::with_capacity(items.len());
    for item in items {
        let bad = || Error::InvalidParameter(format!("malformed amplitude `{item}`"));
        let (re, im) = item.split_once(':').unwrap_or((item, "0"));
        phi.push(C64::new(re.trim().parse().map_err(|_| bad())?, im.trim().parse().map_err(|_| bad())?));
    }
    let norm = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidParameter("auxiliary state has zero norm".into()));
    }
    Ok(phi.into_iter().map(|z| z / norm).collect())
}

fn cmd_interfere(args: &InterfereArgs, config: &Config) -> Result<(), Error> {
    let phi = match &args.phi {
        Some(items) => parse_phi(items)?,
        None if args.aux_dim > 0 => vec![C64::new(1.0 / (args.aux_dim as f64).sqrt(), 0.0); args.aux_dim],
        None => return Err(Error::InvalidParameter("--aux-dim must be positive".into())),
    };
    let d = phi.len();
    let ua = parse_unitary(&args.ua, d)?;
    let ub = parse_unitary(&args.ub, d)?;
    let mode = if args.simulated {
        let options = GateOptions {
            model: args.model.model(None)?,
            include_decay: args.model.decay,
            integrator: args.model.integrator(),
            ..GateOptions::default()
        };
        GateMode::Simulated { params: config.params.clone().with_n_atoms(args.n), options }
    } else {
        GateMode::Ideal { n_atoms: args.n }
    };
    let r = run_interferometer(&phi, &ua, &ub, &mode)?;
    println!("{:.12} {:.12}", r.p_plus, r.p_minus);
    println!("{:.12} {:.12}", r.overlap_estimate.re, r.overlap_estimate.im);
    Ok(())
}

fn check(name: &str, ok: Result<bool, Error>) -> bool {
    match ok {
        Ok(true) => {
            println!("{name}: ok");
            true
        }
        Ok(false) => {
            println!("{name}: FAILED");
            false
        }
        Err(e) => {
            println!("{name}: FAILED ({e})");
            false
        }
    }
}

fn cmd_validate() -> bool {
    let p = PhysParams::rb87(1);
    let mut all = true;
    all &= check("basis_bijection", (|| {
        for model in [Model::Full, Model::Effective] {
            for n in 0..=3 {
                let scheme = LevelScheme::new(model, n)?;
                for i in 0..scheme.dim() {
                    let (c, labels) = scheme.labels(i)?;
                    if basis_index(&scheme, c, &labels)? != i {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    })());
    all &= check("pi_pulse_area", Ok((p.pulse().raman_area(p.delta) / PI - 1.0).abs() <= 1e-6));
    all &= check("dark_states", (|| {
        for i in 0..=10 {
            let x = 0.05 * i as f64;
            let d = dark_states(x)?;
            let m = effective_site_matrix(SQRT_2 * x, 2.0, 1.0, 0.0);
            for v in [d.d1, d.d2] {
                for r in 0..3 {
                    let hv: C64 = (0..3).map(|c| m[3 * r + c] * v[c]).sum();
                    if hv.norm() > 1e-12 {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    })());
    all &= check("eit_zero", Ok(susceptibility_with_regulator(p.delta, &p, 0.0, 0.0).norm() == 0.0));
    all &= check("hermiticity", (|| {
        let mut q = PhysParams::rb87(2);
        q.set_uniform_interactions(40.0, 3.0);
        for model in [Model::Full, Model::Effective] {
            let h = HamiltonianSpec::raman(model, q.clone(), false).build()?;
            for k in 1..5 {
                let m = h.dense(0.2 * k as f64 * q.t_raman)?;
                let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if (&m - m.adjoint()).iter().any(|z| z.norm() > 1e-12 * scale) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    })());
    all &= check("gate_norm", (|| {
        let input = GateInput::basis(ControlLevel::One, vec![EnsembleLevel::A])?;
        let o = run_gate(&input, &p, &GateOptions::default())?;
        Ok(o.norm_loss.abs() <= 1e-8 && o.fidelity >= 0.98)
    })());
    all &= check("interferometer_identity", (|| {
        let phi = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let ua = BranchUnitary::two_level_mixing(2, 0, 1, 0.4)?;
        let ub = BranchUnitary::phase_rotation(2, 1, 1.1)?;
        let r = run_interferometer(&phi, &ua, &ub, &GateMode::Ideal { n_atoms: 2 })?;
        let expect: C64 = (ua.matrix().adjoint() * ub.matrix())
            .row_iter()
            .enumerate()
            .map(|(i, row)| phi[i].conj() * (0..2).map(|j| row[j] * phi[j]).sum::<C64>())
            .sum();
        Ok((r.overlap_estimate - expect).norm() <= 1e-10)
    })());
    all &= check("config_round_trip", Config::parse(&dump_preset()).map(|c| {
        let q = c.params;
        (q.delta / p.delta - 1.0).abs() < 1e-12 && (q.t_raman / p.t_raman - 1.0).abs() < 1e-12
    }));
    all
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_numerical() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let needs_config = !matches!(cli.command, Command::Validate | Command::Preset { .. });
    let config = if needs_config {
        match load_config(cli.config.as_deref()) {
            Ok(c) => c,
            Err(e) => return exit_for(&e),
        }
    } else {
        Config::preset()
    };
    let result = match &cli.command {
        Command::Gate(args) => cmd_gate(args, &config).map(|_| true),
        Command::Sweep(args) => cmd_sweep(args, &config),
        Command::Interfere(args) => cmd_interfere(args, &config).map(|_| true),
        Command::Validate => Ok(cmd_validate()),
        Command::Preset { action: PresetAction::Dump } => {
            print!("{}", dump_preset());
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => exit_for(&e),
    }
}
