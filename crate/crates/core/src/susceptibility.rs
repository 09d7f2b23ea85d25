//! Linear susceptibility of the Raman probe on the `|A> -> |P>` leg of the
//! `{A, P, R}` ladder, with the Rydberg level optionally shifted.

use crate::hilbert::C64;
use crate::params::PhysParams;

/// Ratio of the Rydberg-coherence regulator γ_R to γ_p.
pub const RYDBERG_REGULATOR: f64 = 1e-4;

/// χ(δ) up to normalization, for probe detuning `delta_probe` measured from
/// `|P>`. Two-photon resonance sits at δ = Δ + `rydberg_shift`.
pub fn susceptibility(delta_probe: f64, params: &PhysParams, rydberg_shift: f64) -> C64 {
    susceptibility_with_regulator(delta_probe, params, rydberg_shift, RYDBERG_REGULATOR * params.gamma_p)
}

pub fn susceptibility_with_regulator(delta_probe: f64, params: &PhysParams, rydberg_shift: f64, gamma_r: f64) -> C64 {
    let two_photon = C64::new(delta_probe - params.delta - rydberg_shift, gamma_r);
    let one_photon = C64::new(delta_probe, 0.5 * params.gamma_p);
    two_photon / (one_photon * two_photon - 0.25 * params.omega_c * params.omega_c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
        let mut fa = f(a);
        assert!(fa * f(b) <= 0.0);
        while b - a > tol {
            let m = 0.5 * (a + b);
            let fm = f(m);
            if fa * fm <= 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn transparency_at_two_photon_resonance() {
        let p = PhysParams::rb87(1);
        let chi = susceptibility_with_regulator(p.delta, &p, 0.0, 0.0);
        assert_eq!(chi, C64::new(0.0, 0.0));
        // regulated value is tiny compared with the off-resonant scale 1/Δ
        assert!(susceptibility(p.delta, &p, 0.0).norm() * p.delta < 1e-4);
    }

    #[test]
    fn zero_located_by_bisection() {
        let p = PhysParams::rb87(1);
        // stay inside the Autler-Townes pole at Δ + ε
        let w = 0.5 * p.epsilon();
        let re = |d: f64| susceptibility_with_regulator(d, &p, 0.0, 0.0).re;
        let im = |d: f64| susceptibility_with_regulator(d, &p, 0.0, 0.0).im;
        let r0 = bisect(re, p.delta - w, p.delta + w, 1e-3);
        assert!((r0 - p.delta).abs() <= 1e-9 * p.delta);
        // Im χ touches zero without changing sign
        assert!(im(p.delta).abs() == 0.0);
        assert!(im(p.delta + 1e-3 * w).abs() > 0.0);
    }

    #[test]
    fn two_level_limit() {
        let mut p = PhysParams::rb87(1);
        p.omega_c = 0.0;
        for d in [-3e8, 0.0, 1.7e9, p.delta] {
            let chi = susceptibility(d, &p, 0.0);
            let lorentz = C64::new(1.0, 0.0) / C64::new(d, 0.5 * p.gamma_p);
            assert!((chi - lorentz).norm() <= 1e-12 * lorentz.norm());
        }
    }

    #[test]
    fn shifted_rydberg_level_opens_absorption() {
        let p = PhysParams::rb87(1);
        let v = 40.0 * p.epsilon();
        let chi = susceptibility(p.delta, &p, v);
        // χ(Δ) = V/(Δ(V+ε)) in the γ → 0 limit
        let expect = v / (p.delta * (v + p.epsilon()));
        assert!((chi.norm() / expect - 1.0).abs() < 1e-3);
        let lorentz = 1.0 / p.delta;
        assert!(chi.norm() > 0.1 * lorentz);
    }

    #[test]
    fn decays_far_from_resonance() {
        let p = PhysParams::rb87(1);
        for v in [0.0, 40.0 * p.epsilon()] {
            let near = susceptibility(p.delta + 2.0 * p.omega_c, &p, v).norm();
            let far = susceptibility(p.delta + 200.0 * p.omega_c, &p, v).norm();
            assert!(far < 0.05 * near);
        }
    }
}
