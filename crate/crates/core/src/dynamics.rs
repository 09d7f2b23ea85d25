//! Time integration of `i dψ/dt = H(t)ψ` with an embedded Dormand–Prince
//! 5(4) pair or classic fixed-step RK4.
//!
//! The norm is never renormalized; whatever leaves through the imaginary
//! diagonal shows up as `norm_loss`.

use std::f64::consts::TAU;
use std::io::Write;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, HamiltonianSpec};
use crate::hilbert::{CompositeState, ControlLevel, EnsembleLevel, LevelScheme, Model, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Rk4 { dt: f64 },
    Adaptive { rel_tol: f64, abs_tol: f64, pair: EmbeddedPair },
}

/// Error-controlled Runge–Kutta pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EmbeddedPair {
    /// Dormand–Prince 5(4), FSAL, six evaluations per step.
    DormandPrince54,
    /// Classic RK4 with Zonneveld's third-order estimate, five evaluations
    /// per step. RK4 is stable on the imaginary axis up to |hλ| = 2√2 while
    /// DOPRI5 is mildly unstable there beyond |hλ| ≈ 1, so this pair is the
    /// cheaper one when large interaction shifts limit the step.
    #[default]
    Zonneveld43,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub max_steps: usize,
    /// Optional ceiling on |h|, on top of the one the FULL model imposes.
    pub max_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Adaptive { rel_tol: 1e-9, abs_tol: 1e-12, pair: EmbeddedPair::Zonneveld43 },
            max_steps: 200_000_000,
            max_step: None,
        }
    }
}

impl IntegratorConfig {
    pub fn adaptive(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorConfig::with_pair(rel_tol, abs_tol, EmbeddedPair::default())
    }

    pub fn with_pair(rel_tol: f64, abs_tol: f64, pair: EmbeddedPair) -> Self {
        IntegratorConfig { method: Method::Adaptive { rel_tol, abs_tol, pair }, ..Default::default() }
    }

    pub fn rk4(dt: f64) -> Self {
        IntegratorConfig { method: Method::Rk4 { dt }, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Rk4 { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")))
            }
            Method::Adaptive { rel_tol, abs_tol, .. } => {
                for (name, v) in [("rel_tol", rel_tol), ("abs_tol", abs_tol)] {
                    if !(v > 0.0 && v <= 1e-3) {
                        return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1e-3], got {v}")));
                    }
                }
            }
            _ => {}
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be positive".into()));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter("max_step must be positive".into()));
            }
        }
        Ok(())
    }

    /// Relative tolerance, or zero for fixed-step runs.
    pub fn rel_tol(&self) -> f64 {
        match self.method {
            Method::Adaptive { rel_tol, .. } => rel_tol,
            Method::Rk4 { .. } => 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionReport {
    pub final_state: CompositeState,
    /// `1 - ‖ψ(t1)‖²` for a normalized input.
    pub norm_loss: f64,
    pub steps: usize,
    /// Peak over accepted steps of Σ_{j<k} P(atoms j and k both in `|R>`).
    pub max_double_rydberg: f64,
    /// Peak over accepted steps of Σ_k P(control in `|r>` and atom k in `|R>`).
    pub max_control_ensemble_rydberg: f64,
}

/// One row of the trajectory dump. Populations are summed over atoms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub norm: f64,
    pub pop_a: f64,
    pub pop_b: f64,
    pub pop_p: f64,
    pub pop_r: f64,
    pub pop_double_r: f64,
}

impl TrajectorySample {
    fn of(t: f64, state: &CompositeState, diag: &Diagnostics) -> Self {
        TrajectorySample {
            t,
            norm: state.norm(),
            pop_a: state.ensemble_population(EnsembleLevel::A),
            pop_b: state.ensemble_population(EnsembleLevel::B),
            pop_p: state.ensemble_population(EnsembleLevel::P),
            pop_r: state.ensemble_population(EnsembleLevel::R),
            pop_double_r: diag.measure(state.amplitudes()).0,
        }
    }
}

pub fn write_trajectory_csv<W: Write>(samples: &[TrajectorySample], mut w: W) -> Result<()> {
    writeln!(w, "t,norm,pop_A,pop_B,pop_P,pop_R,pop_doubleR")?;
    for s in samples {
        writeln!(
            w,
            "{:.9e},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12}",
            s.t, s.norm, s.pop_a, s.pop_b, s.pop_p, s.pop_r, s.pop_double_r
        )?;
    }
    Ok(())
}

/// Per-index weights for the Rydberg occupancy diagnostics.
struct Diagnostics {
    block: usize,
    pairs: Vec<f64>,
    singles: Vec<f64>,
}

impl Diagnostics {
    fn new(scheme: &LevelScheme) -> Self {
        let block = scheme.block_len();
        let r = scheme.model().level_index(EnsembleLevel::R).expect("R in every model");
        let mut pairs = Vec::with_capacity(block);
        let mut singles = Vec::with_capacity(block);
        for e in 0..block {
            let n_r = (0..scheme.n_atoms()).filter(|&k| scheme.digit(e, k) == r).count() as f64;
            pairs.push(n_r * (n_r - 1.0) / 2.0);
            singles.push(n_r);
        }
        Diagnostics { block, pairs, singles }
    }

    /// (double ensemble occupancy, joint control–ensemble occupancy).
    fn measure(&self, psi: &[C64]) -> (f64, f64) {
        let mut double = 0.0;
        let mut joint = 0.0;
        let rydberg = ControlLevel::Rydberg.index();
        for (c, chunk) in psi.chunks(self.block).enumerate() {
            for ((a, &wp), &ws) in chunk.iter().zip(&self.pairs).zip(&self.singles) {
                let p = a.norm_sqr();
                double += wp * p;
                if c == rydberg {
                    joint += ws * p;
                }
            }
        }
        (double, joint)
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integration state for one run; owns all scratch buffers.
struct Stepper<'a> {
    h: &'a Hamiltonian,
    ranges: Vec<Range<usize>>,
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    ynew: Vec<C64>,
}

impl<'a> Stepper<'a> {
    fn new(h: &'a Hamiltonian, active: [bool; 3]) -> Self {
        let scheme = h.scheme();
        let dim = scheme.dim();
        let block = scheme.block_len();
        let ranges = (0..3).filter(|&c| active[c]).map(|c| c * block..(c + 1) * block).collect();
        let z = || vec![C64::new(0.0, 0.0); dim];
        Stepper { h, ranges, k: [z(), z(), z(), z(), z(), z(), z()], tmp: z(), ynew: z() }
    }

    /// `out = -i H(t) y`.
    fn rhs(h: &Hamiltonian, ranges: &[Range<usize>], t: f64, y: &[C64], out: &mut [C64]) {
        h.apply_into(t, y, out);
        for r in ranges {
            for z in &mut out[r.clone()] {
                *z = C64::new(z.im, -z.re);
            }
        }
    }

    /// `tmp = y + h Σ a_j k_j`.
    fn stage(&mut self, y: &[C64], h: f64, coeffs: &[f64]) {
        for r in &self.ranges {
            self.tmp[r.clone()].copy_from_slice(&y[r.clone()]);
            for (j, &a) in coeffs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let f = h * a;
                for (t, k) in self.tmp[r.clone()].iter_mut().zip(&self.k[j][r.clone()]) {
                    *t += k * f;
                }
            }
        }
    }

    fn rk4_step(&mut self, t: f64, y: &mut [C64], h: f64) {
        let hm = self.h;
        Self::rhs(hm, &self.ranges, t, y, &mut self.k[0]);
        self.stage(y, h, &[0.5]);
        Self::rhs(hm, &self.ranges, t + 0.5 * h, &self.tmp, &mut self.k[1]);
        self.stage(y, h, &[0.0, 0.5]);
        Self::rhs(hm, &self.ranges, t + 0.5 * h, &self.tmp, &mut self.k[2]);
        self.stage(y, h, &[0.0, 0.0, 1.0]);
        Self::rhs(hm, &self.ranges, t + h, &self.tmp, &mut self.k[3]);
        for r in &self.ranges {
            for i in r.clone() {
                y[i] += (self.k[0][i] + self.k[1][i] * 2.0 + self.k[2][i] * 2.0 + self.k[3][i]) * (h / 6.0);
            }
        }
    }

    /// One DOPRI5 trial step from `(t, y)` with `k[0] = f(t, y)` already
    /// filled. Writes the 5th-order solution to `ynew`, `f(t+h, ynew)` to
    /// `k[6]`, and returns the scaled error norm.
    fn dopri_trial(&mut self, t: f64, y: &[C64], h: f64, rtol: f64, atol: f64) -> f64 {
        let hm = self.h;
        self.stage(y, h, &[A21]);
        Self::rhs(hm, &self.ranges, t + C2 * h, &self.tmp, &mut self.k[1]);
        self.stage(y, h, &[A31, A32]);
        Self::rhs(hm, &self.ranges, t + C3 * h, &self.tmp, &mut self.k[2]);
        self.stage(y, h, &[A41, A42, A43]);
        Self::rhs(hm, &self.ranges, t + C4 * h, &self.tmp, &mut self.k[3]);
        self.stage(y, h, &[A51, A52, A53, A54]);
        Self::rhs(hm, &self.ranges, t + C5 * h, &self.tmp, &mut self.k[4]);
        self.stage(y, h, &[A61, A62, A63, A64, A65]);
        Self::rhs(hm, &self.ranges, t + h, &self.tmp, &mut self.k[5]);
        self.stage(y, h, &[B1, 0.0, B3, B4, B5, B6]);
        std::mem::swap(&mut self.tmp, &mut self.ynew);
        Self::rhs(hm, &self.ranges, t + h, &self.ynew, &mut self.k[6]);
        let mut sum = 0.0;
        let mut count = 0usize;
        for r in &self.ranges {
            for i in r.clone() {
                let k = &self.k;
                let err = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
                let sc = atol + rtol * y[i].norm_sqr().max(self.ynew[i].norm_sqr()).sqrt();
                sum += err.norm_sqr() / (sc * sc);
                count += 1;
            }
        }
        (sum / count.max(1) as f64).sqrt()
    }
}

impl Stepper<'_> {
    /// Zonneveld 4(3) trial step; `k[0] = f(t, y)` must be filled. Writes
    /// the RK4 solution to `ynew` and returns the scaled error norm.
    fn zonneveld_trial(&mut self, t: f64, y: &[C64], h: f64, rtol: f64, atol: f64) -> f64 {
        let hm = self.h;
        self.stage(y, h, &[0.5]);
        Self::rhs(hm, &self.ranges, t + 0.5 * h, &self.tmp, &mut self.k[1]);
        self.stage(y, h, &[0.0, 0.5]);
        Self::rhs(hm, &self.ranges, t + 0.5 * h, &self.tmp, &mut self.k[2]);
        self.stage(y, h, &[0.0, 0.0, 1.0]);
        Self::rhs(hm, &self.ranges, t + h, &self.tmp, &mut self.k[3]);
        self.stage(y, h, &[5.0 / 32.0, 7.0 / 32.0, 13.0 / 32.0, -1.0 / 32.0]);
        Self::rhs(hm, &self.ranges, t + 0.75 * h, &self.tmp, &mut self.k[4]);
        self.stage(y, h, &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]);
        std::mem::swap(&mut self.tmp, &mut self.ynew);
        let mut sum = 0.0;
        let mut count = 0usize;
        for r in &self.ranges {
            for i in r.clone() {
                let k = &self.k;
                let err = (k[0][i] * (2.0 / 3.0) - (k[1][i] + k[2][i] + k[3][i]) * 2.0 + k[4][i] * (16.0 / 3.0)) * h;
                let sc = atol + rtol * y[i].norm_sqr().max(self.ynew[i].norm_sqr()).sqrt();
                sum += err.norm_sqr() / (sc * sc);
                count += 1;
            }
        }
        (sum / count.max(1) as f64).sqrt()
    }
}

fn check_window(h: &Hamiltonian, t0: f64, t1: f64) -> Result<()> {
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(Error::InvalidParameter("integration limits must be finite".into()));
    }
    if let Some((lo, hi)) = h.window() {
        let slack = 1e-12 * (hi - lo);
        for t in [t0, t1] {
            if t < lo - slack || t > hi + slack {
                return Err(Error::TimeOutOfRange { t, duration: hi - lo });
            }
        }
    }
    Ok(())
}

fn active_blocks(h: &Hamiltonian, psi: &[C64]) -> [bool; 3] {
    if h.couples_control() {
        return [true; 3];
    }
    let block = h.scheme().block_len();
    let mut active = [false; 3];
    for (c, a) in active.iter_mut().enumerate() {
        *a = psi[c * block..(c + 1) * block].iter().any(|z| z.re != 0.0 || z.im != 0.0);
    }
    active
}

/// Largest admissible step: the user ceiling and, for the FULL model, 20
/// steps per period of the `|P>` detuning.
fn step_ceiling(h: &Hamiltonian, spec: &HamiltonianSpec, cfg: &IntegratorConfig) -> f64 {
    let mut ceiling = cfg.max_step.unwrap_or(f64::INFINITY);
    if h.scheme().model() == Model::Full && spec.params.delta != 0.0 {
        ceiling = ceiling.min(TAU / (20.0 * spec.params.delta.abs()));
    }
    ceiling
}

struct RunTotals {
    steps: usize,
    max_double: f64,
    max_joint: f64,
}

/// Integrates `psi` in place from `t0` to `t1`. `h_hint` carries the last
/// accepted adaptive step between calls.
#[allow(clippy::too_many_arguments)]
fn integrate(
    ham: &Hamiltonian,
    ceiling: f64,
    psi: &mut [C64],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    diag: &Diagnostics,
    totals: &mut RunTotals,
    h_hint: &mut Option<f64>,
) -> Result<()> {
    if t1 == t0 {
        return Ok(());
    }
    let active = active_blocks(ham, psi);
    let ham_active = ham.clone().with_active_blocks(active);
    let mut st = Stepper::new(&ham_active, active);
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let track = |psi: &[C64], totals: &mut RunTotals| {
        let (d, j) = diag.measure(psi);
        totals.max_double = totals.max_double.max(d);
        totals.max_joint = totals.max_joint.max(j);
    };
    track(psi, totals);
    let finite = |psi: &[C64], t: f64| -> Result<()> {
        if psi.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { t })
        }
    };
    match cfg.method {
        Method::Rk4 { dt } => {
            let n = ((span / dt.min(ceiling)).ceil() as usize).max(1);
            if totals.steps + n > cfg.max_steps {
                return Err(Error::MaxSteps(cfg.max_steps));
            }
            let h = (t1 - t0) / n as f64;
            for s in 0..n {
                let t = t0 + s as f64 * h;
                st.rk4_step(t, psi, h);
                totals.steps += 1;
                finite(psi, t + h)?;
                track(psi, totals);
            }
        }
        Method::Adaptive { rel_tol, abs_tol, pair } => {
            let exponent = match pair {
                EmbeddedPair::DormandPrince54 => -0.2,
                EmbeddedPair::Zonneveld43 => -0.25,
            };
            let mut t = t0;
            Stepper::rhs(st.h, &st.ranges, t, psi, &mut st.k[0]);
            let mut h = match *h_hint {
                Some(h) => h,
                None => initial_step(&mut st, psi, t, dir, span, rel_tol, abs_tol),
            }
            .min(ceiling)
            .min(span);
            let h_min = 1e-14 * span.max(t0.abs()).max(t1.abs());
            loop {
                let remaining = (t1 - t).abs();
                if remaining <= 1e-15 * span {
                    break;
                }
                let last = h >= remaining;
                if last {
                    h = remaining;
                }
                if h < h_min {
                    return Err(Error::StepUnderflow { t, h });
                }
                if totals.steps >= cfg.max_steps {
                    return Err(Error::MaxSteps(cfg.max_steps));
                }
                let err = match pair {
                    EmbeddedPair::DormandPrince54 => st.dopri_trial(t, psi, dir * h, rel_tol, abs_tol),
                    EmbeddedPair::Zonneveld43 => st.zonneveld_trial(t, psi, dir * h, rel_tol, abs_tol),
                };
                if !err.is_finite() {
                    finite(&st.ynew, t)?;
                    h *= 0.1;
                    continue;
                }
                if err <= 1.0 {
                    totals.steps += 1;
                    t = if last { t1 } else { t + dir * h };
                    for r in &st.ranges {
                        psi[r.clone()].copy_from_slice(&st.ynew[r.clone()]);
                    }
                    match pair {
                        EmbeddedPair::DormandPrince54 => st.k.swap(0, 6),
                        EmbeddedPair::Zonneveld43 => Stepper::rhs(st.h, &st.ranges, t, psi, &mut st.k[0]),
                    }
                    track(psi, totals);
                    if !last {
                        *h_hint = Some(h);
                    }
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(exponent)).clamp(0.2, 5.0) };
                    h = (h * fac).min(ceiling);
                } else {
                    h *= (0.9 * err.powf(exponent)).max(0.1);
                }
            }
        }
    }
    Ok(())
}

fn initial_step(st: &mut Stepper, y: &[C64], t: f64, dir: f64, span: f64, rtol: f64, atol: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    let mut n = 0usize;
    for r in &st.ranges {
        for i in r.clone() {
            let sc = atol + rtol * y[i].norm();
            d0 += (y[i].norm() / sc).powi(2);
            d1 += (st.k[0][i].norm() / sc).powi(2);
            n += 1;
        }
    }
    let n = n.max(1) as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
    st.stage(y, dir * h0, &[1.0]);
    let hm = st.h;
    Stepper::rhs(hm, &st.ranges, t + dir * h0, &st.tmp, &mut st.k[1]);
    let mut d2 = 0.0;
    for r in &st.ranges {
        for i in r.clone() {
            let sc = atol + rtol * y[i].norm();
            d2 += ((st.k[1][i] - st.k[0][i]).norm() / sc).powi(2);
        }
    }
    let d2 = (d2 / n).sqrt() / h0;
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 { (h0 * 1e-3).max(1e-6 * span) } else { (0.01 / m).powf(0.2) };
    (100.0 * h0).min(h1)
}

fn check_normalized(state: &CompositeState) -> Result<()> {
    let n = state.norm_sqr();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("initial state must be normalized, ‖ψ‖² = {n}")));
    }
    Ok(())
}

/// Evolves `state` under `spec` from `t0` to `t1`; `t1 < t0` integrates
/// backwards with the same `H(t)`.
pub fn evolve(
    state: &CompositeState,
    spec: &HamiltonianSpec,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<EvolutionReport> {
    evolve_piecewise(state, &[(spec.clone(), t0, t1)], cfg)
}

/// Evolves through contiguous segments in order.
pub fn evolve_piecewise(
    state: &CompositeState,
    segments: &[(HamiltonianSpec, f64, f64)],
    cfg: &IntegratorConfig,
) -> Result<EvolutionReport> {
    run_segments(state, segments, cfg, None).map(|(r, _)| r)
}

/// Like [`evolve`], additionally recording a sample every `interval` seconds
/// (plus the endpoints).
pub fn evolve_sampled(
    state: &CompositeState,
    spec: &HamiltonianSpec,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    interval: f64,
) -> Result<(EvolutionReport, Vec<TrajectorySample>)> {
    if !(interval > 0.0) {
        return Err(Error::InvalidParameter("sample interval must be positive".into()));
    }
    run_segments(state, &[(spec.clone(), t0, t1)], cfg, Some(interval))
        .map(|(r, s)| (r, s.expect("sampling requested")))
}

fn run_segments(
    state: &CompositeState,
    segments: &[(HamiltonianSpec, f64, f64)],
    cfg: &IntegratorConfig,
    interval: Option<f64>,
) -> Result<(EvolutionReport, Option<Vec<TrajectorySample>>)> {
    cfg.validate()?;
    check_normalized(state)?;
    if segments.is_empty() {
        return Err(Error::SegmentGap("no segments given".into()));
    }
    for w in segments.windows(2) {
        let (a, b) = (w[0].2, w[1].1);
        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1e-300) {
            return Err(Error::SegmentGap(format!("segment ends at {a:e} s but the next starts at {b:e} s")));
        }
        if (w[0].2 - w[0].1) * (w[1].2 - w[1].1) < 0.0 {
            return Err(Error::SegmentGap("segments run in opposite time directions".into()));
        }
    }
    let mut psi = state.amplitudes().to_vec();
    let scheme = state.scheme();
    let diag = Diagnostics::new(&scheme);
    let mut totals = RunTotals { steps: 0, max_double: 0.0, max_joint: 0.0 };
    let mut samples = interval.map(|_| Vec::new());
    for (spec, t0, t1) in segments {
        if spec.scheme()? != scheme {
            return Err(Error::SchemeMismatch);
        }
        let ham = spec.build()?;
        check_window(&ham, *t0, *t1)?;
        let ceiling = step_ceiling(&ham, spec, cfg);
        let mut hint = None;
        match (interval, samples.as_mut()) {
            (Some(dt), Some(out)) => {
                let dir = (t1 - t0).signum();
                let n = ((t1 - t0).abs() / dt).ceil().max(1.0) as usize;
                let snap = |psi: &[C64], t: f64| {
                    let s = CompositeState::from_amplitudes(scheme, psi.to_vec()).expect("dimension fixed");
                    TrajectorySample::of(t, &s, &diag)
                };
                out.push(snap(&psi, *t0));
                let mut ta = *t0;
                for i in 1..=n {
                    let tb = if i == n { *t1 } else { t0 + dir * dt * i as f64 };
                    integrate(&ham, ceiling, &mut psi, ta, tb, cfg, &diag, &mut totals, &mut hint)?;
                    out.push(snap(&psi, tb));
                    ta = tb;
                }
            }
            _ => integrate(&ham, ceiling, &mut psi, *t0, *t1, cfg, &diag, &mut totals, &mut hint)?,
        }
    }
    let final_state = CompositeState::from_amplitudes(scheme, psi)?;
    let report = EvolutionReport {
        norm_loss: 1.0 - final_state.norm_sqr(),
        final_state,
        steps: totals.steps,
        max_double_rydberg: totals.max_double,
        max_control_ensemble_rydberg: totals.max_joint,
    };
    Ok((report, samples))
}
