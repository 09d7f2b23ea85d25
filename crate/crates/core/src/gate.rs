//! The three-pulse gate: control π-pulse, Raman pulse on the ensemble,
//! control π-pulse. Also the single-atom dark states, the two-atom grey
//! state and the dynamical phase it accumulates.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};

use crate::dynamics::{evolve, IntegratorConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::{effective_site_matrix, HamiltonianSpec};
use crate::hilbert::{inner, CompositeState, ControlLevel, EnsembleLevel, LevelScheme, Model, C64};
use crate::params::PhysParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ControlPulse {
    /// exp(-iπσ_x/2) on {|1>, |r>}, applied instantaneously.
    Instant,
    /// Finite pulse `(Ω_r/2)(|1><r| + h.c.)` of the given duration.
    Resolved { omega_r: f64, duration: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateOptions {
    pub model: Model,
    pub include_decay: bool,
    pub control_pulse: ControlPulse,
    pub integrator: IntegratorConfig,
}

impl Default for GateOptions {
    fn default() -> Self {
        GateOptions {
            model: Model::Effective,
            include_decay: false,
            control_pulse: ControlPulse::Instant,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl GateOptions {
    pub fn validate(&self) -> Result<()> {
        if let ControlPulse::Resolved { omega_r, duration } = self.control_pulse {
            if !(duration > 0.0) || ((omega_r * duration - PI) / PI).abs() > 1e-6 {
                return Err(Error::InvalidParameter(format!(
                    "resolved control pulse needs Ω_r·τ = π, got {}",
                    omega_r * duration
                )));
            }
        }
        self.integrator.validate()
    }
}

/// Control amplitudes `α|0> + β|1>` and the ensemble product labels.
#[derive(Clone, Debug, PartialEq)]
pub struct GateInput {
    pub alpha: C64,
    pub beta: C64,
    pub ensemble: Vec<EnsembleLevel>,
}

impl GateInput {
    pub fn new(alpha: C64, beta: C64, ensemble: Vec<EnsembleLevel>) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("|α|²+|β|² = {n}, expected 1")));
        }
        if ensemble.is_empty() {
            return Err(Error::InvalidParameter("ensemble must contain at least one atom".into()));
        }
        if let Some(l) = ensemble.iter().find(|l| !matches!(l, EnsembleLevel::A | EnsembleLevel::B)) {
            return Err(Error::UnknownLabel(format!("{} (ensemble inputs use A and B only)", l.as_char())));
        }
        Ok(GateInput { alpha, beta, ensemble })
    }

    pub fn basis(control: ControlLevel, ensemble: Vec<EnsembleLevel>) -> Result<Self> {
        let (z, o) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        match control {
            ControlLevel::Zero => GateInput::new(o, z, ensemble),
            ControlLevel::One => GateInput::new(z, o, ensemble),
            ControlLevel::Rydberg => Err(Error::InvalidParameter("control input must be |0> or |1>".into())),
        }
    }

    /// `(|0> + |1>)/√2` on the control.
    pub fn superposition(ensemble: Vec<EnsembleLevel>) -> Result<Self> {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        GateInput::new(h, h, ensemble)
    }

    fn flipped(&self) -> Vec<EnsembleLevel> {
        self.ensemble
            .iter()
            .map(|l| if *l == EnsembleLevel::A { EnsembleLevel::B } else { EnsembleLevel::A })
            .collect()
    }
}

/// Phase the ideal gate puts on the transfer branch: `-(-1)^N`.
pub fn transfer_branch_sign(n_atoms: usize) -> f64 {
    if n_atoms % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Clone, Debug)]
pub struct GateOutcome {
    pub final_state: CompositeState,
    /// |<desired|obtained>|².
    pub fidelity: f64,
    /// arg <desired|obtained>.
    pub conditional_phase: f64,
    /// arg of the `|1>|s̄>` amplitude relative to β; `None` when β = 0.
    pub transfer_phase: Option<f64>,
    pub norm_loss: f64,
    /// Population outside control {0,1} ⊗ ensemble {A,B}^N.
    pub leakage: f64,
    pub max_double_rydberg: f64,
    pub max_control_ensemble_rydberg: f64,
    pub steps: usize,
    pub model: Model,
    pub control_pulse: ControlPulse,
}

impl GateOutcome {
    /// `key=value` lines.
    pub fn report_text(&self) -> String {
        let mut s = String::new();
        let n = self.final_state.scheme().n_atoms();
        let _ = writeln!(s, "fidelity={:.12}", self.fidelity);
        let _ = writeln!(s, "conditional_phase={:.12}", self.conditional_phase);
        match self.transfer_phase {
            Some(p) => {
                let _ = writeln!(s, "transfer_phase={p:.12}");
            }
            None => {
                let _ = writeln!(s, "transfer_phase=nan");
            }
        }
        let _ = writeln!(s, "norm_loss={:.12e}", self.norm_loss);
        let _ = writeln!(s, "leakage={:.12e}", self.leakage);
        let _ = writeln!(s, "max_double_occupancy={:.12e}", self.max_double_rydberg);
        let _ = writeln!(s, "max_control_ensemble_occupancy={:.12e}", self.max_control_ensemble_rydberg);
        let _ = writeln!(s, "steps={}", self.steps);
        let _ = writeln!(s, "model={}", self.model);
        let pulse = match self.control_pulse {
            ControlPulse::Instant => "instant".to_string(),
            ControlPulse::Resolved { omega_r, duration } => format!("resolved(omega_r={omega_r:e},duration={duration:e})"),
        };
        let _ = writeln!(s, "control_pulse={pulse}");
        let _ = writeln!(s, "target_transfer_sign={}", transfer_branch_sign(n));
        s
    }
}

/// Totals collected across the gate segments.
#[derive(Clone, Debug)]
pub struct GateTrace {
    pub norm_loss: f64,
    pub steps: usize,
    pub max_double_rydberg: f64,
    pub max_control_ensemble_rydberg: f64,
}

fn instant_pi(state: &mut CompositeState) {
    let block = state.scheme().block_len();
    let (one, ryd) = (ControlLevel::One.index(), ControlLevel::Rydberg.index());
    let amps = state.amplitudes_mut();
    let mi = C64::new(0.0, -1.0);
    for e in 0..block {
        let a1 = amps[one * block + e];
        let ar = amps[ryd * block + e];
        amps[one * block + e] = mi * ar;
        amps[ryd * block + e] = mi * a1;
    }
}

fn empty_trace() -> GateTrace {
    GateTrace { norm_loss: 0.0, steps: 0, max_double_rydberg: 0.0, max_control_ensemble_rydberg: 0.0 }
}

/// Evolves `psi` (any norm) under `spec`, folding the report into `trace`.
fn evolve_scaled(
    psi: &CompositeState,
    spec: &HamiltonianSpec,
    t1: f64,
    cfg: &IntegratorConfig,
    trace: &mut GateTrace,
) -> Result<CompositeState> {
    let n = psi.norm();
    if n == 0.0 {
        return Ok(psi.clone());
    }
    let unit = psi.clone().scaled(C64::new(1.0 / n, 0.0));
    let r = evolve(&unit, spec, 0.0, t1, cfg)?;
    trace.steps += r.steps;
    let w = n * n;
    trace.max_double_rydberg = trace.max_double_rydberg.max(w * r.max_double_rydberg);
    trace.max_control_ensemble_rydberg = trace.max_control_ensemble_rydberg.max(w * r.max_control_ensemble_rydberg);
    Ok(r.final_state.scaled(C64::new(n, 0.0)))
}

fn control_step(psi: CompositeState, params: &PhysParams, options: &GateOptions, trace: &mut GateTrace) -> Result<CompositeState> {
    match options.control_pulse {
        ControlPulse::Instant => {
            let mut out = psi;
            instant_pi(&mut out);
            Ok(out)
        }
        ControlPulse::Resolved { omega_r, duration } => {
            let spec = HamiltonianSpec::control_pulse(options.model, params.clone(), omega_r, options.include_decay);
            evolve_scaled(&psi, &spec, duration, &options.integrator, trace)
        }
    }
}

/// Applies the three-pulse sequence to an arbitrary state. The evolution is
/// linear, so the input is normalized for the integrator and the result
/// rescaled back.
pub fn apply_gate(state: &CompositeState, params: &PhysParams, options: &GateOptions) -> Result<(CompositeState, GateTrace)> {
    options.validate()?;
    let scheme = state.scheme();
    if scheme.model() != options.model || scheme.n_atoms() != params.n_atoms {
        return Err(Error::SchemeMismatch);
    }
    let norm = state.norm();
    let mut trace = empty_trace();
    if norm == 0.0 {
        return Ok((state.clone(), trace));
    }
    let mut psi = state.clone().scaled(C64::new(1.0 / norm, 0.0));
    psi = control_step(psi, params, options, &mut trace)?;
    let raman = HamiltonianSpec::raman(options.model, params.clone(), options.include_decay);
    psi = evolve_scaled(&psi, &raman, params.t_raman, &options.integrator, &mut trace)?;
    psi = control_step(psi, params, options, &mut trace)?;
    trace.norm_loss = 1.0 - psi.norm_sqr();
    Ok((psi.scaled(C64::new(norm, 0.0)), trace))
}

/// Target state `α|0>|s> + β·(-(-1)^N)|1>|s̄>`.
pub fn desired_state(input: &GateInput, model: Model) -> Result<CompositeState> {
    let scheme = LevelScheme::new(model, input.ensemble.len())?;
    let sign = C64::new(transfer_branch_sign(input.ensemble.len()), 0.0);
    let zero = CompositeState::basis(scheme, ControlLevel::Zero, &input.ensemble)?.scaled(input.alpha);
    let one = CompositeState::basis(scheme, ControlLevel::One, &input.flipped())?.scaled(input.beta * sign);
    zero.add(&one)
}

fn computational_population(state: &CompositeState) -> f64 {
    let scheme = state.scheme();
    let block = scheme.block_len();
    let model = scheme.model();
    let (a, b) = (model.level_index(EnsembleLevel::A).unwrap(), model.level_index(EnsembleLevel::B).unwrap());
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let c = i / block;
            c != ControlLevel::Rydberg.index()
                && (0..scheme.n_atoms()).all(|k| {
                    let d = scheme.digit(i % block, k);
                    d == a || d == b
                })
        })
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

pub fn run_gate(input: &GateInput, params: &PhysParams, options: &GateOptions) -> Result<GateOutcome> {
    if input.ensemble.len() != params.n_atoms {
        return Err(Error::LabelCount { expected: params.n_atoms, got: input.ensemble.len() });
    }
    let scheme = LevelScheme::new(options.model, params.n_atoms)?;
    let zero = CompositeState::basis(scheme, ControlLevel::Zero, &input.ensemble)?.scaled(input.alpha);
    let one = CompositeState::basis(scheme, ControlLevel::One, &input.ensemble)?.scaled(input.beta);
    let initial = zero.add(&one)?;
    let (out, trace) = apply_gate(&initial, params, options)?;
    let desired = desired_state(input, options.model)?;
    let amp = inner(desired.amplitudes(), out.amplitudes());
    let transfer_phase = if input.beta.norm() > 0.0 {
        let a = out.amplitude(ControlLevel::One, &input.flipped())? / input.beta;
        Some(a.arg())
    } else {
        None
    };
    Ok(GateOutcome {
        fidelity: amp.norm_sqr(),
        conditional_phase: amp.arg(),
        transfer_phase,
        norm_loss: trace.norm_loss,
        leakage: out.norm_sqr() - computational_population(&out),
        max_double_rydberg: trace.max_double_rydberg,
        max_control_ensemble_rydberg: trace.max_control_ensemble_rydberg,
        steps: trace.steps,
        model: options.model,
        control_pulse: options.control_pulse,
        final_state: out,
    })
}

/// |<A^N|ψ(T)>|² for control in `|0>`, EFFECTIVE model, decay off.
pub fn blocking_fidelity_numeric(params: &PhysParams, cfg: &IntegratorConfig) -> Result<f64> {
    let n = params.n_atoms;
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidParameter(format!("blocking fidelity supports 1 to 4 atoms, got {n}")));
    }
    let ensemble = vec![EnsembleLevel::A; n];
    let scheme = LevelScheme::new(Model::Effective, n)?;
    let psi = CompositeState::basis(scheme, ControlLevel::Zero, &ensemble)?;
    let spec = HamiltonianSpec::raman(Model::Effective, params.clone(), false);
    let r = evolve(&psi, &spec, 0.0, params.t_raman, cfg)?;
    Ok(r.final_state.amplitude(ControlLevel::Zero, &ensemble)?.norm_sqr())
}

/// Single-atom dark states in the `{A, B, R}` basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DarkStateSet {
    pub x: f64,
    pub d1: [f64; 3],
    pub d2: [f64; 3],
}

pub fn dark_states(x: f64) -> Result<DarkStateSet> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("x must be non-negative, got {x}")));
    }
    let norm = (2.0 * (1.0 + x * x)).sqrt();
    Ok(DarkStateSet {
        x,
        d1: [FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0],
        d2: [1.0 / norm, 1.0 / norm, -std::f64::consts::SQRT_2 * x / norm],
    })
}

/// Two-atom grey state; `state` is indexed `3·a + b` over `{A, B, R}²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreyStateInfo {
    pub x: f64,
    /// V_12 in units of ε; infinite for the limiting construction.
    pub v12_over_eps: f64,
    pub state: [f64; 9],
    /// E_g in units of ε.
    pub energy_over_eps: f64,
}

impl GreyStateInfo {
    /// Weight of `(|+R> + |R+>)/√2`.
    pub fn superatom_weight(&self) -> f64 {
        let h = FRAC_1_SQRT_2;
        // |+R> = (|AR> + |BR>)/√2, indices 2 and 5; |R+> at 6 and 7
        let o = h * h * (self.state[2] + self.state[5] + self.state[6] + self.state[7]);
        o * o
    }

    /// Coefficient of `|++>`.
    pub fn plus_plus(&self) -> f64 {
        0.5 * (self.state[0] + self.state[1] + self.state[3] + self.state[4])
    }
}

/// Infinite-V_12 grey state `(1+x⁴)^{-1/2}[(1-x²)|++> - x(|+R>+|R+>)]`
/// with its leading-order energy 2εx⁴.
pub fn grey_state_limit(x: f64) -> Result<GreyStateInfo> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("x must be non-negative, got {x}")));
    }
    let norm = (1.0 + x.powi(4)).sqrt();
    let plus = [FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0];
    let r = [0.0, 0.0, 1.0];
    let mut state = [0.0; 9];
    for a in 0..3 {
        for b in 0..3 {
            state[3 * a + b] = ((1.0 - x * x) * plus[a] * plus[b] - x * (plus[a] * r[b] + r[a] * plus[b])) / norm;
        }
    }
    Ok(GreyStateInfo { x, v12_over_eps: f64::INFINITY, state, energy_over_eps: 2.0 * x.powi(4) })
}

/// Two-atom Hamiltonian on the symmetric-product basis
/// `{|++>, |+R>, |R+>, |RR>}`, in units of ε.
fn grey_block(x: f64, v12_over_eps: f64) -> Matrix4<f64> {
    // Single-atom {A,B,R} matrix at ε = 1, projected onto {|+>, |R>}.
    let m = effective_site_matrix(std::f64::consts::SQRT_2 * x, 2.0, 1.0, 0.0);
    let h = FRAC_1_SQRT_2;
    let pp = h * h * (m[0].re + m[1].re + m[3].re + m[4].re);
    let pr = h * (m[2].re + m[5].re);
    let rr = m[8].re;
    let site = [[pp, pr], [pr, rr]];
    let mut out = Matrix4::zeros();
    for i in 0..4 {
        let (a, b) = (i / 2, i % 2);
        for j in 0..4 {
            let (c, d) = (j / 2, j % 2);
            let mut v = 0.0;
            if b == d {
                v += site[a][c];
            }
            if a == c {
                v += site[b][d];
            }
            out[(i, j)] = v;
        }
    }
    out[(3, 3)] += v12_over_eps;
    out
}

/// Follows the eigenvector connected to `|++>` at x = 0 by maximal-overlap
/// continuation.
#[derive(Clone, Debug)]
struct GreyTracker {
    v12_over_eps: f64,
    x: f64,
    vector: Vector4<f64>,
    energy: f64,
}

impl GreyTracker {
    fn new(v12_over_eps: f64) -> Self {
        GreyTracker { v12_over_eps, x: 0.0, vector: Vector4::new(1.0, 0.0, 0.0, 0.0), energy: 0.0 }
    }

    fn advance(&mut self, x: f64, max_dx: f64) -> Result<f64> {
        let n = ((x - self.x).abs() / max_dx).ceil().max(1.0) as usize;
        let x0 = self.x;
        for i in 1..=n {
            let xi = if i == n { x } else { x0 + (x - x0) * i as f64 / n as f64 };
            let eig = SymmetricEigen::new(grey_block(xi, self.v12_over_eps));
            let mut overlaps: Vec<(f64, usize)> =
                (0..4).map(|j| (eig.eigenvectors.column(j).dot(&self.vector).abs(), j)).collect();
            overlaps.sort_by(|a, b| b.0.total_cmp(&a.0));
            let (best, j) = overlaps[0];
            if best * best < 0.5 || overlaps[1].0 * overlaps[1].0 > 0.25 {
                return Err(Error::EigenTracking(format!(
                    "no unique continuation at x = {xi} (overlaps {:.3}, {:.3})",
                    best, overlaps[1].0
                )));
            }
            let e = eig.eigenvalues[j];
            let scale = 1.0 + e.abs();
            if (0..4).any(|k| k != j && (eig.eigenvalues[k] - e).abs() < 1e-12 * scale) {
                return Err(Error::EigenTracking(format!("degenerate crossing at x = {xi}")));
            }
            let mut v: Vector4<f64> = eig.eigenvectors.column(j).into();
            if v.dot(&self.vector) < 0.0 {
                v = -v;
            }
            self.vector = v;
            self.energy = e;
            self.x = xi;
        }
        Ok(self.energy)
    }
}

/// Grid resolution used to follow the grey state from x = 0.
pub const GREY_TRACKING_POINTS: usize = 400;

/// Energy, in units of ε, of the two-atom eigenstate adiabatically connected
/// to `|++>` at x = 0, with `V_12 = v12_over_eps·ε` on `|RR>`.
pub fn grey_energy_numeric(x: f64, v12_over_eps: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 0.5) {
        return Err(Error::InvalidParameter(format!("x must lie in (0, 0.5], got {x}")));
    }
    if !(v12_over_eps >= 0.0 && v12_over_eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("V_12 must be non-negative, got {v12_over_eps}")));
    }
    GreyTracker::new(v12_over_eps).advance(x, x / GREY_TRACKING_POINTS as f64)
}

/// How φ relates to the integrated grey-state energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PhiConvention {
    /// φ = ½∫E_g dt, so that the pair picks up 2φ.
    #[default]
    HalfGreyIntegral,
    /// φ = ∫E_g dt.
    FullGreyIntegral,
}

impl PhiConvention {
    pub fn name(self) -> &'static str {
        match self {
            PhiConvention::HalfGreyIntegral => "half_grey_integral",
            PhiConvention::FullGreyIntegral => "full_grey_integral",
        }
    }
}

/// Which E_g(t) enters the quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum GreyEnergyModel {
    /// E_g = 2εx⁴.
    #[default]
    LeadingOrder,
    /// Tracked two-atom eigenvalue at the given V_12/ε.
    Tracked { v12_over_eps: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseResult {
    pub phi: f64,
    pub convention: PhiConvention,
    pub energy_model: GreyEnergyModel,
}

/// Quadrature intervals over half the pulse.
const PHI_INTERVALS: usize = 400;

pub fn phase_phi(params: &PhysParams, convention: PhiConvention, energy_model: GreyEnergyModel) -> Result<PhaseResult> {
    let scales = params.scales()?;
    let half = 0.5 * params.t_raman;
    let h = half / PHI_INTERVALS as f64;
    let mut tracker = match energy_model {
        GreyEnergyModel::Tracked { v12_over_eps } => {
            if !(v12_over_eps >= 0.0 && v12_over_eps.is_finite()) {
                return Err(Error::InvalidParameter(format!("V_12 must be non-negative, got {v12_over_eps}")));
            }
            Some(GreyTracker::new(v12_over_eps))
        }
        GreyEnergyModel::LeadingOrder => None,
    };
    let max_dx = scales.x_max / GREY_TRACKING_POINTS as f64;
    let mut sum = 0.0;
    // x(t) rises monotonically on [0, T/2]; the second half mirrors it.
    for i in 0..=PHI_INTERVALS {
        let x = scales.x_at(i as f64 * h);
        let e = match tracker.as_mut() {
            Some(t) => t.advance(x, max_dx)?,
            None => 2.0 * x.powi(4),
        };
        let w = if i == 0 || i == PHI_INTERVALS { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * e;
    }
    let integral = 2.0 * scales.epsilon * sum * h / 3.0;
    let phi = match convention {
        PhiConvention::HalfGreyIntegral => 0.5 * integral,
        PhiConvention::FullGreyIntegral => integral,
    };
    Ok(PhaseResult { phi, convention, energy_model })
}

/// `|Σ_m C(N,m) 2^{-N} exp(-i m(m-1)φ)|²`.
pub fn analytic_blocking_fidelity(n_atoms: usize, phi: f64) -> Result<f64> {
    if n_atoms == 0 {
        return Err(Error::InvalidParameter("need at least one atom".into()));
    }
    let n = n_atoms as f64;
    let mut ln_binom = 0.0;
    let mut sum = C64::new(0.0, 0.0);
    for m in 0..=n_atoms {
        if m > 0 {
            ln_binom += ((n_atoms - m + 1) as f64).ln() - (m as f64).ln();
        }
        let w = (ln_binom - n * std::f64::consts::LN_2).exp();
        let mm = m as f64;
        sum += C64::from_polar(w, -mm * (mm - 1.0) * phi);
    }
    Ok(sum.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::EnsembleLevel::*;

    #[test]
    fn closed_form_blocking_fidelity() {
        for n in [1, 2, 3, 7, 40] {
            assert!((analytic_blocking_fidelity(n, 0.0).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((analytic_blocking_fidelity(2, PI / 2.0).unwrap() - 0.25).abs() < 1e-14);
        for phi in [1e-3, 3e-3, 1e-2] {
            let f = analytic_blocking_fidelity(2, phi).unwrap();
            let direct = (C64::new(3.0, 0.0) + C64::from_polar(1.0, -2.0 * phi)).norm_sqr() / 16.0;
            assert!((f - direct).abs() < 1e-14);
            assert!((f - (1.0 - 0.75 * phi * phi)).abs() < phi.powi(4));
        }
        assert!(analytic_blocking_fidelity(0, 0.1).is_err());
    }

    #[test]
    fn dark_states_are_dark() {
        for i in 0..=10 {
            let x = 0.05 * i as f64;
            let d = dark_states(x).unwrap();
            let m = effective_site_matrix(std::f64::consts::SQRT_2 * x, 2.0, 1.0, 0.0);
            for v in [d.d1, d.d2] {
                let norm: f64 = v.iter().map(|a| a * a).sum();
                assert!((norm - 1.0).abs() < 1e-15);
                for r in 0..3 {
                    let hv: C64 = (0..3).map(|c| m[3 * r + c] * v[c]).sum();
                    assert!(hv.norm() < 1e-12);
                }
            }
            let dot: f64 = d.d1.iter().zip(&d.d2).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-15);
        }
        let d = dark_states(1.0).unwrap();
        assert!((d.d2[2] + FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((d.d2[0] - 0.5).abs() < 1e-15);
        assert!(dark_states(-0.1).is_err());
    }

    #[test]
    fn grey_state_limit_coefficients() {
        let g = grey_state_limit(0.2).unwrap();
        assert!((g.plus_plus() - 0.96 / 1.0016f64.sqrt()).abs() < 1e-12);
        assert!((g.plus_plus() - 0.95923).abs() < 1e-5);
        let norm: f64 = g.state.iter().map(|a| a * a).sum();
        assert!((norm - 1.0).abs() < 1e-14);
        assert!((g.superatom_weight() - 0.08 / 1.0016).abs() < 1e-12);
        let g0 = grey_state_limit(0.0).unwrap();
        assert!((g0.plus_plus() - 1.0).abs() < 1e-15 && g0.energy_over_eps == 0.0);
    }

    #[test]
    fn grey_limit_state_matches_tracked_eigenvector() {
        // The limiting form is leading order in x; the tracked eigenvector at
        // huge V_12 differs from it at O(x³) and has no |RR> weight.
        for x in [0.05, 0.1, 0.2] {
            let mut t = GreyTracker::new(1e9);
            t.advance(x, x / 400.0).unwrap();
            let n = (1.0 + x.powi(4)).sqrt();
            let expect = Vector4::new((1.0 - x * x) / n, -x / n, -x / n, 0.0);
            assert!((t.vector - expect).norm() < 5.0 * x.powi(3), "x = {x}: {}", (t.vector - expect).norm());
            assert!(t.vector[3].abs() < 1e-8);
        }
    }

    #[test]
    fn grey_energy_limits() {
        assert!(grey_energy_numeric(0.3, 0.0).unwrap().abs() < 1e-12);
        let x = 0.05;
        let weak = grey_energy_numeric(x, 1e-3).unwrap();
        assert!((weak / (x.powi(4) * 1e-3) - 1.0).abs() < 0.02);
        let x = 0.1;
        let strong = grey_energy_numeric(x, 1e4).unwrap();
        assert!((strong / (2.0 * x.powi(4)) - 1.0).abs() < 0.05);
        assert!(grey_energy_numeric(0.0, 1.0).is_err());
        assert!(grey_energy_numeric(0.6, 1.0).is_err());
    }

    #[test]
    fn phi_closed_form() {
        for x in [0.1, 0.2, 0.3] {
            let p = PhysParams::rb87(2).with_x_max(x);
            let half = phase_phi(&p, PhiConvention::HalfGreyIntegral, GreyEnergyModel::LeadingOrder).unwrap();
            assert!((half.phi - 35.0 / 48.0 * PI * x * x).abs() < 1e-9 * half.phi, "{}", half.phi);
            let full = phase_phi(&p, PhiConvention::FullGreyIntegral, GreyEnergyModel::LeadingOrder).unwrap();
            assert!((full.phi - 35.0 / 24.0 * PI * x * x).abs() < 1e-9 * full.phi);
        }
    }

    #[test]
    fn tracked_phi_below_leading_order() {
        let p = PhysParams::rb87(2).with_x_max(0.2);
        let lead = phase_phi(&p, PhiConvention::HalfGreyIntegral, GreyEnergyModel::LeadingOrder).unwrap().phi;
        let tracked =
            phase_phi(&p, PhiConvention::HalfGreyIntegral, GreyEnergyModel::Tracked { v12_over_eps: 1e4 }).unwrap().phi;
        assert!(tracked < lead && tracked > 0.85 * lead, "{tracked} {lead}");
    }

    #[test]
    fn ideal_sign() {
        assert_eq!(transfer_branch_sign(1), 1.0);
        assert_eq!(transfer_branch_sign(2), -1.0);
        assert_eq!(transfer_branch_sign(3), 1.0);
    }

    #[test]
    fn input_validation() {
        assert!(GateInput::new(C64::new(1.0, 0.0), C64::new(1.0, 0.0), vec![A]).is_err());
        assert!(GateInput::basis(ControlLevel::One, vec![A, R]).is_err());
        assert!(GateInput::basis(ControlLevel::Rydberg, vec![A]).is_err());
        let bad = GateOptions { control_pulse: ControlPulse::Resolved { omega_r: 1e8, duration: 1e-8 }, ..Default::default() };
        assert!(bad.validate().is_err());
        let p = PhysParams::rb87(2);
        let input = GateInput::basis(ControlLevel::Zero, vec![A]).unwrap();
        assert!(matches!(run_gate(&input, &p, &GateOptions::default()), Err(Error::LabelCount { .. })));
    }

    #[test]
    fn blocked_and_transferred() {
        let p = PhysParams::rb87(1);
        let opts = GateOptions::default();
        let b = run_gate(&GateInput::basis(ControlLevel::Zero, vec![A]).unwrap(), &p, &opts).unwrap();
        assert!(b.fidelity >= 0.999, "{}", b.fidelity);
        assert!(b.transfer_phase.is_none());
        let t = run_gate(&GateInput::basis(ControlLevel::One, vec![A]).unwrap(), &p, &opts).unwrap();
        assert!(t.fidelity >= 0.98, "{}", t.fidelity);
        assert!(t.fidelity + t.leakage <= 1.0 + 1e-8);
        let text = t.report_text();
        for key in ["fidelity=", "conditional_phase=", "norm_loss=", "max_double_occupancy=", "target_transfer_sign=1"] {
            assert!(text.contains(key), "{text}");
        }
    }

    #[test]
    fn resolved_pulse_matches_instant_for_fast_pulses() {
        let p = PhysParams::rb87(1);
        let input = GateInput::basis(ControlLevel::One, vec![A]).unwrap();
        let instant = run_gate(&input, &p, &GateOptions::default()).unwrap();
        let omega_r = 2.0 * PI * 2e9;
        let opts = GateOptions {
            control_pulse: ControlPulse::Resolved { omega_r, duration: PI / omega_r },
            ..Default::default()
        };
        let resolved = run_gate(&input, &p, &opts).unwrap();
        assert!((resolved.fidelity - instant.fidelity).abs() < 5e-3, "{} {}", resolved.fidelity, instant.fidelity);
    }

    #[test]
    fn gate_is_linear() {
        let p = PhysParams::rb87(1);
        let opts = GateOptions::default();
        let scheme = LevelScheme::new(Model::Effective, 1).unwrap();
        let a = CompositeState::basis(scheme, ControlLevel::Zero, &[A]).unwrap();
        let b = CompositeState::basis(scheme, ControlLevel::One, &[B]).unwrap();
        let (ga, _) = apply_gate(&a, &p, &opts).unwrap();
        let (gb, _) = apply_gate(&b, &p, &opts).unwrap();
        let mix = a.scaled(C64::new(0.6, 0.0)).add(&b.scaled(C64::new(0.0, 0.8))).unwrap();
        let (gm, _) = apply_gate(&mix.clone().scaled(C64::new(3.0, 0.0)), &p, &opts).unwrap();
        let expect = ga.scaled(C64::new(1.8, 0.0)).add(&gb.scaled(C64::new(0.0, 2.4))).unwrap();
        let diff: f64 = gm.amplitudes().iter().zip(expect.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-7, "{diff}");
    }
}
