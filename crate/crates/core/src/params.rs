//! Physical parameters, the Raman pulse, and derived energy scales.
//!
//! All frequencies and energies are angular frequencies in rad/s with
//! ħ = 1; times are in seconds.

use std::f64::consts::{PI, SQRT_2, TAU};

use crate::error::{Error, Result};

/// Laser, atom and interaction parameters of one gate configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysParams {
    /// Raman detuning Δ from `|P>`.
    pub delta: f64,
    /// Control-field Rabi frequency Ω_c on `|P> <-> |R>`.
    pub omega_c: f64,
    /// Peak Raman Rabi frequency, equal on both legs.
    pub omega_p_max: f64,
    /// Raman pulse duration T.
    pub t_raman: f64,
    /// Decay rate of `|P>`.
    pub gamma_p: f64,
    /// Lifetime of the control Rydberg state `|r>`.
    pub tau_r: f64,
    /// Control-ensemble shifts V_k, one per atom.
    pub v_control: Vec<f64>,
    /// Ensemble-ensemble shifts V_jk, row-major `n_atoms x n_atoms`, zero diagonal.
    pub v_ensemble: Vec<f64>,
    pub n_atoms: usize,
}

impl PhysParams {
    /// The ⁸⁷Rb parameter set: Δ = 2π·1.2 GHz, max Ω_p = 2π·70 MHz,
    /// Ω_c = 6·max Ω_p, γ_p = 36·10⁶ s⁻¹, τ_r = 66 μs, V_k = 40ε, V_jk = 0,
    /// and T fixed by the π-area condition.
    pub fn rb87(n_atoms: usize) -> Self {
        let delta = TAU * 1.2e9;
        let omega_p_max = TAU * 70e6;
        let mut p = PhysParams {
            delta,
            omega_c: 6.0 * omega_p_max,
            omega_p_max,
            t_raman: pi_pulse_duration(delta, omega_p_max),
            gamma_p: 36e6,
            tau_r: 66e-6,
            v_control: Vec::new(),
            v_ensemble: Vec::new(),
            n_atoms,
        };
        p.set_uniform_interactions(40.0, 0.0);
        p
    }

    /// ε = Ω_c²/(4Δ).
    pub fn epsilon(&self) -> f64 {
        self.omega_c * self.omega_c / (4.0 * self.delta)
    }

    /// x_max = √2·max(Ω_p)/Ω_c.
    pub fn x_max(&self) -> f64 {
        SQRT_2 * self.omega_p_max / self.omega_c
    }

    pub fn pulse(&self) -> RamanPulse {
        RamanPulse { omega_max: self.omega_p_max, duration: self.t_raman }
    }

    pub fn scales(&self) -> Result<DerivedScales> {
        Ok(DerivedScales {
            epsilon: epsilon(self)?,
            x_max: self.x_max(),
            omega_c: self.omega_c,
            pulse: self.pulse(),
        })
    }

    pub fn v_jk(&self, j: usize, k: usize) -> f64 {
        self.v_ensemble[j * self.n_atoms + k]
    }

    /// Sets every V_k and every off-diagonal V_jk, both in units of the current ε.
    pub fn set_uniform_interactions(&mut self, v_control_over_eps: f64, v_ensemble_over_eps: f64) {
        let eps = self.epsilon();
        let n = self.n_atoms;
        self.v_control = vec![v_control_over_eps * eps; n];
        self.v_ensemble = (0..n * n)
            .map(|i| if i / n == i % n { 0.0 } else { v_ensemble_over_eps * eps })
            .collect();
    }

    /// Changes Ω_c so that x_max takes the requested value; Ω_p and T are kept.
    pub fn with_x_max(mut self, x_max: f64) -> Self {
        self.omega_c = SQRT_2 * self.omega_p_max / x_max;
        self
    }

    /// Changes Ω_c to `ratio · max(Ω_p)`.
    pub fn with_ratio(mut self, ratio: f64) -> Self {
        self.omega_c = ratio * self.omega_p_max;
        self
    }

    /// Resizes the interaction tables to `n` atoms keeping uniform values
    /// taken from atom 0 and pair (0, 1).
    pub fn with_n_atoms(mut self, n: usize) -> Self {
        let eps = self.epsilon();
        let vk = self.v_control.first().copied().unwrap_or(0.0) / eps;
        let vjk = if self.n_atoms >= 2 { self.v_jk(0, 1) / eps } else { 0.0 };
        self.n_atoms = n;
        self.set_uniform_interactions(vk, vjk);
        self
    }

    /// Checks hard invariants and returns soft regime warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let named = [
            ("delta", self.delta),
            ("omega_c", self.omega_c),
            ("omega_p_max", self.omega_p_max),
            ("t_raman", self.t_raman),
            ("gamma_p", self.gamma_p),
            ("tau_r", self.tau_r),
        ];
        for (name, v) in named {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.delta <= 0.0 {
            return Err(Error::InvalidParameter("delta must be positive".into()));
        }
        if self.t_raman <= 0.0 {
            return Err(Error::InvalidParameter("t_raman must be positive".into()));
        }
        let n = self.n_atoms;
        if self.v_control.len() != n {
            return Err(Error::InvalidParameter(format!("{} control shifts for {n} atoms", self.v_control.len())));
        }
        if self.v_ensemble.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "ensemble interaction matrix has {} entries, expected {}",
                self.v_ensemble.len(),
                n * n
            )));
        }
        if let Some(v) = self.v_control.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("control shift {v} must be finite and >= 0")));
        }
        for j in 0..n {
            if self.v_jk(j, j) != 0.0 {
                return Err(Error::InvalidParameter("ensemble interaction diagonal must be zero".into()));
            }
            for k in 0..n {
                let v = self.v_jk(j, k);
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidParameter(format!("V_{j}{k} = {v} must be finite and >= 0")));
                }
                if v != self.v_jk(k, j) {
                    return Err(Error::InvalidParameter("ensemble interaction matrix must be symmetric".into()));
                }
            }
        }
        let mut warnings = Vec::new();
        if self.delta < 2.0 * self.omega_c {
            warnings.push(format!(
                "delta = {:.4e} rad/s is not large compared with omega_c = {:.4e} rad/s",
                self.delta, self.omega_c
            ));
        }
        if self.omega_c <= self.omega_p_max {
            warnings.push("omega_c <= max omega_p: EIT blocking regime not satisfied".into());
        }
        let t_pi = pi_pulse_duration(self.delta, self.omega_p_max);
        if ((self.t_raman - t_pi) / t_pi).abs() > 1e-6 {
            warnings.push(format!("t_raman = {:.4e} s is not a Raman pi pulse (needs {:.4e} s)", self.t_raman, t_pi));
        }
        Ok(warnings)
    }
}

/// ε = Ω_c²/(4Δ).
pub fn epsilon(params: &PhysParams) -> Result<f64> {
    if params.delta == 0.0 {
        return Err(Error::InvalidParameter("delta must be nonzero".into()));
    }
    Ok(params.epsilon())
}

/// Peak Rabi frequency for which the sin² pulse of duration `t_raman` has
/// Raman area ∫Ω_p²/(2Δ) dt = π.
pub fn pi_pulse_omega_max(delta: f64, t_raman: f64) -> Result<f64> {
    if !(delta > 0.0 && t_raman > 0.0) {
        return Err(Error::InvalidParameter("delta and t_raman must be positive".into()));
    }
    Ok((16.0 * PI * delta / (3.0 * t_raman)).sqrt())
}

/// Duration for which a sin² pulse with peak `omega_max` is a Raman π-pulse.
pub fn pi_pulse_duration(delta: f64, omega_max: f64) -> f64 {
    16.0 * PI * delta / (3.0 * omega_max * omega_max)
}

/// Ω_p(t) = Ω_max·sin²(πt/T) on [0, T].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RamanPulse {
    pub omega_max: f64,
    pub duration: f64,
}

impl RamanPulse {
    pub fn rabi(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.duration;
        if !(t >= -slack && t <= self.duration + slack) {
            return Err(Error::TimeOutOfRange { t, duration: self.duration });
        }
        Ok(self.rabi_at(t))
    }

    /// Unchecked evaluation; zero outside the window.
    #[inline]
    pub fn rabi_at(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= self.duration {
            return 0.0;
        }
        let s = (PI * t / self.duration).sin();
        self.omega_max * s * s
    }

    /// ∫₀ᵀ Ω_p²/(2Δ) dt, using ∫ sin⁴ = 3T/8.
    pub fn raman_area(&self, delta: f64) -> f64 {
        self.omega_max * self.omega_max * 3.0 * self.duration / (16.0 * delta)
    }
}

/// ε, x_max and the time-dependent x(t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedScales {
    pub epsilon: f64,
    pub x_max: f64,
    pub omega_c: f64,
    pub pulse: RamanPulse,
}

impl DerivedScales {
    /// x(t) = √2·Ω_p(t)/Ω_c.
    pub fn x_at(&self, t: f64) -> f64 {
        SQRT_2 * self.pulse.rabi_at(t) / self.omega_c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn pulse_shape() {
        let p = RamanPulse { omega_max: 3.0, duration: 2.0 };
        assert_eq!(p.rabi(0.0).unwrap(), 0.0);
        assert!((p.rabi(1.0).unwrap() - 3.0).abs() < 1e-15);
        assert!(p.rabi(2.0).unwrap().abs() < 1e-15);
        assert!(matches!(p.rabi(2.1), Err(Error::TimeOutOfRange { .. })));
        assert!(p.rabi(-0.1).is_err());
    }

    #[test]
    fn pi_area_by_quadrature() {
        let delta = TAU * 1.2e9;
        let t = 0.44e-6;
        let om = pi_pulse_omega_max(delta, t).unwrap();
        let p = RamanPulse { omega_max: om, duration: t };
        let area = simpson(|s| p.rabi_at(s).powi(2) / (2.0 * delta), 0.0, t, 2000);
        assert!((area / PI - 1.0).abs() < 1e-6);
        let sq = simpson(|s| p.rabi_at(s).powi(2), 0.0, t, 2000);
        assert!((sq / (om * om * 3.0 * t / 8.0) - 1.0).abs() < 1e-9);
        assert!((sq / (TAU * delta) - 1.0).abs() < 1e-6);
        assert!((p.raman_area(delta) - PI).abs() < 1e-12);
    }

    #[test]
    fn pi_pulse_examples() {
        let delta = TAU * 1.2e9;
        let om = pi_pulse_omega_max(delta, 0.44e-6).unwrap();
        assert!((om / TAU / 1e6 - 85.3).abs() < 0.05, "{}", om / TAU / 1e6);
        let om4 = pi_pulse_omega_max(delta, 4.0 * 0.44e-6).unwrap();
        assert!((om4 / om - 0.5).abs() < 1e-14);
        let t = pi_pulse_duration(delta, TAU * 70e6);
        assert!((t / 1e-6 - 0.653).abs() < 1e-3, "{t}");
        assert!(pi_pulse_omega_max(0.0, 1.0).is_err());
        assert!(pi_pulse_omega_max(1.0, -1.0).is_err());
    }

    #[test]
    fn epsilon_examples() {
        let p = PhysParams::rb87(1);
        let eps = epsilon(&p).unwrap();
        assert!((eps / TAU / 1e6 - 36.75).abs() < 1e-9);
        let mut q = p.clone();
        q.omega_c *= 2.0;
        assert!((q.epsilon() / eps - 4.0).abs() < 1e-14);
        // V_k = 10 Ω_c²/Δ is 40ε
        assert!((10.0 * p.omega_c.powi(2) / p.delta / eps - 40.0).abs() < 1e-12);
        assert!((p.v_control[0] / eps - 40.0).abs() < 1e-12);
        let mut z = p;
        z.delta = 0.0;
        assert!(epsilon(&z).is_err());
    }

    #[test]
    fn derived_scales_consistent() {
        let p = PhysParams::rb87(1);
        let s = p.scales().unwrap();
        assert!((s.x_at(p.t_raman / 2.0) - s.x_max).abs() < 1e-12);
        assert!(s.epsilon > 0.0);
        assert!((s.x_max - SQRT_2 / 6.0).abs() < 1e-14);
        let q = p.clone().with_x_max(0.1);
        assert!((q.x_max() - 0.1).abs() < 1e-14);
        assert_eq!(q.omega_p_max, p.omega_p_max);
    }

    #[test]
    fn validation() {
        let p = PhysParams::rb87(2);
        assert!(p.validate().unwrap().is_empty());
        let warn = p.clone().with_x_max(0.1).validate().unwrap();
        assert_eq!(warn.len(), 1);
        let warn = p.clone().with_ratio(0.9).validate().unwrap();
        assert!(warn.iter().any(|w| w.contains("EIT")));

        let mut bad = p.clone();
        bad.v_ensemble[1] = -1.0;
        bad.v_ensemble[2] = -1.0;
        assert!(bad.validate().is_err());
        let mut asym = p.clone();
        asym.v_ensemble[1] = 1.0;
        assert!(asym.validate().is_err());
        let mut neg = p.clone();
        neg.gamma_p = -1.0;
        assert!(neg.validate().is_err());
        let mut short = p;
        short.v_control.pop();
        assert!(short.validate().is_err());
    }
}
