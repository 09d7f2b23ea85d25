//! Time-dependent Hamiltonians for the full four-level ensemble atoms and
//! for the three-level model left after eliminating `|P>`.
//!
//! Rotating frame: `|A>`, `|B>` and `|R>` at zero energy (two-photon
//! resonance), `|P>` at `-Δ`. With this sign the light shift of `|R>` is
//! `+ε` and eliminating `|P>` gives
//! `H_k = ε[x²|+><+| + |R><R| + x(|+><R| + h.c.)]`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{accumulate_local, CompositeState, ControlLevel, LevelScheme, Model, Site, C64};
use crate::params::{PhysParams, RamanPulse};

/// What to assemble: model, parameters, which fields are on.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub model: Model,
    pub params: PhysParams,
    /// Raman pulse; `None` keeps Ω_p = 0 (used between the Raman window and
    /// resolved control pulses).
    pub pulse: Option<RamanPulse>,
    /// Adds `-iγ_p/2` on every `|P>` and `-i/(2τ_r)` on `|r>`.
    pub include_decay: bool,
    /// Ω_r of `(Ω_r/2)(|1><r| + h.c.)` on the control atom.
    pub control_rabi: Option<f64>,
}

impl HamiltonianSpec {
    /// Raman window Hamiltonian, control atom idle.
    pub fn raman(model: Model, params: PhysParams, include_decay: bool) -> Self {
        let pulse = Some(params.pulse());
        HamiltonianSpec { model, params, pulse, include_decay, control_rabi: None }
    }

    /// Control-atom π-pulse segment with the Raman lasers off.
    pub fn control_pulse(model: Model, params: PhysParams, omega_r: f64, include_decay: bool) -> Self {
        HamiltonianSpec { model, params, pulse: None, include_decay, control_rabi: Some(omega_r) }
    }

    pub fn scheme(&self) -> Result<LevelScheme> {
        LevelScheme::new(self.model, self.params.n_atoms)
    }

    pub fn build(&self) -> Result<Hamiltonian> {
        self.params.validate()?;
        if let Some(p) = &self.pulse {
            if !(p.duration > 0.0) {
                return Err(Error::InvalidParameter("pulse duration must be positive".into()));
            }
        }
        let scheme = self.scheme()?;
        let p = &self.params;
        let n = p.n_atoms;
        let r_digit = self.model.level_index(crate::hilbert::EnsembleLevel::R).expect("R in every model");
        let block = scheme.block_len();
        let r_decay = if self.include_decay && p.tau_r > 0.0 && p.tau_r.is_finite() {
            -0.5 / p.tau_r
        } else {
            0.0
        };
        let mut diag = vec![C64::new(0.0, 0.0); scheme.dim()];
        for (i, d) in diag.iter_mut().enumerate() {
            let control = i / block;
            let e = i % block;
            let in_r: Vec<bool> = (0..n).map(|k| scheme.digit(e, k) == r_digit).collect();
            let mut energy = 0.0;
            for j in 0..n {
                if !in_r[j] {
                    continue;
                }
                if control == ControlLevel::Rydberg.index() {
                    energy += p.v_control[j];
                }
                for k in j + 1..n {
                    if in_r[k] {
                        energy += p.v_jk(j, k);
                    }
                }
            }
            let im = if control == ControlLevel::Rydberg.index() { r_decay } else { 0.0 };
            *d = C64::new(energy, im);
        }
        Ok(Hamiltonian {
            scheme,
            delta: p.delta,
            omega_c: p.omega_c,
            gamma_p: if self.include_decay { p.gamma_p } else { 0.0 },
            pulse: self.pulse,
            control_rabi: self.control_rabi,
            diag,
            active: [true; 3],
            hermitian: !self.include_decay,
        })
    }
}

/// Per-atom Hamiltonian of the eliminated model in the `{A, B, R}` basis,
/// row-major. A nonzero `gamma_p` makes the effective detuning complex.
pub fn effective_site_matrix(omega_p: f64, omega_c: f64, delta: f64, gamma_p: f64) -> [C64; 9] {
    let kappa = C64::new(1.0, 0.0) / C64::new(delta, 0.5 * gamma_p);
    let w = [0.5 * omega_p, 0.5 * omega_p, 0.5 * omega_c];
    let mut m = [C64::new(0.0, 0.0); 9];
    for i in 0..3 {
        for j in 0..3 {
            m[i * 3 + j] = kappa * (w[i] * w[j]);
        }
    }
    m
}

/// Per-atom Hamiltonian of the four-level atom in the `{A, B, P, R}` basis.
pub fn full_site_matrix(omega_p: f64, omega_c: f64, delta: f64, gamma_p: f64) -> [C64; 16] {
    let z = C64::new(0.0, 0.0);
    let mut m = [z; 16];
    let (a, b, pp, r) = (0, 1, 2, 3);
    let half_p = C64::new(0.5 * omega_p, 0.0);
    let half_c = C64::new(0.5 * omega_c, 0.0);
    m[a * 4 + pp] = half_p;
    m[pp * 4 + a] = half_p;
    m[b * 4 + pp] = half_p;
    m[pp * 4 + b] = half_p;
    m[r * 4 + pp] = half_c;
    m[pp * 4 + r] = half_c;
    m[pp * 4 + pp] = C64::new(-delta, -0.5 * gamma_p);
    m
}

/// `out += κ (w wᵀ ⊗ 1) psi` for a three-level site with the given stride.
#[inline]
fn accumulate_rank_one(psi: &[C64], out: &mut [C64], stride: usize, w: [f64; 3], kappa: C64) {
    let span = 3 * stride;
    for base in (0..psi.len()).step_by(span) {
        for i in base..base + stride {
            let s = (psi[i] * w[0] + psi[i + stride] * w[1] + psi[i + 2 * stride] * w[2]) * kappa;
            out[i] += s * w[0];
            out[i + stride] += s * w[1];
            out[i + 2 * stride] += s * w[2];
        }
    }
}

/// Assembled operator; applies `H(t)` to amplitude vectors without
/// materializing a matrix.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    scheme: LevelScheme,
    delta: f64,
    omega_c: f64,
    gamma_p: f64,
    pulse: Option<RamanPulse>,
    control_rabi: Option<f64>,
    diag: Vec<C64>,
    active: [bool; 3],
    hermitian: bool,
}

impl Hamiltonian {
    pub fn scheme(&self) -> LevelScheme {
        self.scheme
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Time window in which the operator is defined, if a pulse is on.
    pub fn window(&self) -> Option<(f64, f64)> {
        self.pulse.map(|p| (0.0, p.duration))
    }

    /// Whether different control levels are coupled.
    pub fn couples_control(&self) -> bool {
        self.control_rabi.is_some()
    }

    /// Restricts application to the given control blocks. Only valid when
    /// the control atom is not driven; the other blocks are left at zero.
    pub fn with_active_blocks(mut self, active: [bool; 3]) -> Self {
        self.active = if self.couples_control() { [true; 3] } else { active };
        self
    }

    /// Row-major site matrix padded to 16 entries; the first `d*d` are used.
    fn site_matrix(&self, t: f64) -> [C64; 16] {
        let omega_p = self.pulse.map_or(0.0, |p| p.rabi_at(t));
        match self.scheme.model() {
            Model::Full => full_site_matrix(omega_p, self.omega_c, self.delta, self.gamma_p),
            Model::Effective => {
                let mut m = [C64::new(0.0, 0.0); 16];
                m[..9].copy_from_slice(&effective_site_matrix(omega_p, self.omega_c, self.delta, self.gamma_p));
                m
            }
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if let Some(p) = &self.pulse {
            p.rabi(t)?;
        }
        Ok(())
    }

    /// `H(t)·state`, with range and scheme checks.
    pub fn apply(&self, t: f64, state: &CompositeState) -> Result<CompositeState> {
        self.check_time(t)?;
        if state.scheme() != self.scheme {
            return Err(Error::SchemeMismatch);
        }
        let mut out = CompositeState::zeros(self.scheme);
        let full = self.clone().with_active_blocks([true; 3]);
        full.apply_into(t, state.amplitudes(), out.amplitudes_mut());
        Ok(out)
    }

    /// Hot path: `out = H(t)·psi`, no checks.
    pub fn apply_into(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        let block = self.scheme.block_len();
        let d = self.scheme.ensemble_dim();
        let n = self.scheme.n_atoms();
        let m_full = self.site_matrix(t);
        let m = &m_full[..d * d];
        // The eliminated model's site operator is κ·w wᵀ.
        let rank_one = (self.scheme.model() == Model::Effective).then(|| {
            let omega_p = self.pulse.map_or(0.0, |p| p.rabi_at(t));
            let kappa = C64::new(1.0, 0.0) / C64::new(self.delta, 0.5 * self.gamma_p);
            ([0.5 * omega_p, 0.5 * omega_p, 0.5 * self.omega_c], kappa)
        });
        for c in 0..3 {
            let range = c * block..(c + 1) * block;
            if !self.active[c] {
                out[range].iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                continue;
            }
            let (p, o, dg) = (&psi[range.clone()], &mut out[range.clone()], &self.diag[range]);
            for ((oi, &pi), &di) in o.iter_mut().zip(p).zip(dg) {
                *oi = di * pi;
            }
            for k in 0..n {
                let stride = d.pow((n - 1 - k) as u32);
                match rank_one {
                    Some((w, kappa)) => accumulate_rank_one(p, o, stride, w, kappa),
                    None => accumulate_local(p, o, d, stride, m),
                }
            }
        }
        if let Some(om) = self.control_rabi {
            let h = C64::new(0.5 * om, 0.0);
            let z = C64::new(0.0, 0.0);
            let mc = [z, z, z, z, z, h, z, h, z];
            accumulate_local(psi, out, 3, block, &mc);
        }
    }

    /// Dense matrix of `H(t)`; refused above 10⁴ amplitudes.
    pub fn dense(&self, t: f64) -> Result<DMatrix<C64>> {
        self.check_time(t)?;
        let dim = self.scheme.dim();
        if dim > 10_000 {
            return Err(Error::TooLarge { dim, cap: 10_000 });
        }
        let full = self.clone().with_active_blocks([true; 3]);
        let mut mat = DMatrix::zeros(dim, dim);
        let mut e = vec![C64::new(0.0, 0.0); dim];
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            e[j] = C64::new(1.0, 0.0);
            full.apply_into(t, &e, &mut col);
            for i in 0..dim {
                mat[(i, j)] = col[i];
            }
            e[j] = C64::new(0.0, 0.0);
        }
        Ok(mat)
    }

    /// Site operator of atom `k` at time `t` (same for every atom).
    pub fn atom_operator(&self, k: usize, t: f64) -> Result<crate::hilbert::SiteOperator> {
        self.check_time(t)?;
        let d = self.scheme.ensemble_dim();
        crate::hilbert::SiteOperator::new(Site::Atom(k), d, self.site_matrix(t)[..d * d].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{inner, EnsembleLevel::*};
    use std::f64::consts::{SQRT_2, TAU};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_vec(dim: usize, seed: u64) -> Vec<C64> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        (0..dim).map(|_| C64::new(next(), next())).collect()
    }

    #[test]
    fn diagonal_limit_full() {
        let mut p = PhysParams::rb87(2);
        p.omega_c = 0.0;
        p.omega_p_max = 0.0;
        p.v_control = vec![0.0; 2];
        let h = HamiltonianSpec::raman(Model::Full, p.clone(), false).build().unwrap();
        let s = h.scheme();
        let psi = CompositeState::from_amplitudes(s, random_vec(s.dim(), 3)).unwrap();
        let out = h.apply(0.3 * p.t_raman, &psi).unwrap();
        for i in 0..s.dim() {
            let (_, labels) = s.labels(i).unwrap();
            let n_p = labels.iter().filter(|&&l| l == P).count() as f64;
            let expect = psi.amplitudes()[i] * (-p.delta * n_p);
            assert!((out.amplitudes()[i] - expect).norm() <= 1e-12 * p.delta);
        }
    }

    #[test]
    fn interaction_shifts() {
        let p = PhysParams::rb87(1);
        let h = HamiltonianSpec::raman(Model::Full, p.clone(), false).build().unwrap();
        let m = h.dense(0.0).unwrap();
        let i = h.scheme().index(ControlLevel::Rydberg, &[R]).unwrap();
        assert!((m[(i, i)].re - p.v_control[0]).abs() < 1e-6);

        let mut p2 = PhysParams::rb87(2);
        p2.v_control = vec![1.0e8, 2.0e8];
        p2.v_ensemble = vec![0.0, 5.0e7, 5.0e7, 0.0];
        let h2 = HamiltonianSpec::raman(Model::Full, p2, false).build().unwrap();
        let s = h2.scheme();
        let m2 = h2.dense(0.0).unwrap();
        let i = s.index(ControlLevel::Rydberg, &[R, R]).unwrap();
        assert!((m2[(i, i)].re - 3.5e8).abs() < 1e-3);
        let j = s.index(ControlLevel::Zero, &[R, R]).unwrap();
        assert!((m2[(j, j)].re - 5.0e7).abs() < 1e-3);
    }

    #[test]
    fn hermitian_at_random_times() {
        for model in [Model::Full, Model::Effective] {
            let mut p = PhysParams::rb87(2);
            p.set_uniform_interactions(40.0, 3.0);
            let mut spec = HamiltonianSpec::raman(model, p.clone(), false);
            spec.control_rabi = Some(TAU * 5e6);
            let h = spec.build().unwrap();
            let dim = h.scheme().dim();
            for k in 0..10 {
                let t = p.t_raman * (k as f64 + 0.37) / 10.0;
                let a = random_vec(dim, 2 * k + 1);
                let b = random_vec(dim, 2 * k + 2);
                let mut ha = vec![C64::new(0.0, 0.0); dim];
                let mut hb = vec![C64::new(0.0, 0.0); dim];
                h.apply_into(t, &a, &mut ha);
                h.apply_into(t, &b, &mut hb);
                let l = inner(&a, &hb);
                let r = inner(&b, &ha).conj();
                assert!((l - r).norm() <= 1e-12 * l.norm().max(1.0), "{model:?} {l} {r}");
            }
        }
    }

    #[test]
    fn decay_breaks_hermiticity() {
        let p = PhysParams::rb87(1);
        let h = HamiltonianSpec::raman(Model::Full, p.clone(), true).build().unwrap();
        assert!(!h.is_hermitian());
        let m = h.dense(p.t_raman / 2.0).unwrap();
        let s = h.scheme();
        let i = s.index(ControlLevel::Zero, &[P]).unwrap();
        assert!((m[(i, i)].im + 0.5 * p.gamma_p).abs() < 1e-6);
        let j = s.index(ControlLevel::Rydberg, &[A]).unwrap();
        assert!((m[(j, j)].im + 0.5 / p.tau_r).abs() < 1e-9);
    }

    #[test]
    fn effective_matrix_is_eliminated_form() {
        // H_k/ε = x²|+><+| + |R><R| + x(|+><R| + h.c.)
        let (delta, omega_c) = (7.0, 3.0);
        let eps = omega_c * omega_c / (4.0 * delta);
        for x in [0.0, 0.2, 0.7] {
            let omega_p = x * omega_c / SQRT_2;
            let m = effective_site_matrix(omega_p, omega_c, delta, 0.0);
            let s = 1.0 / SQRT_2;
            let expect = [
                [x * x / 2.0, x * x / 2.0, x * s],
                [x * x / 2.0, x * x / 2.0, x * s],
                [x * s, x * s, 1.0],
            ];
            for i in 0..3 {
                for j in 0..3 {
                    assert!((m[i * 3 + j] - c(eps * expect[i][j])).norm() < 1e-14, "x={x} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn effective_single_atom_spectrum() {
        // {|->} decoupled at 0; the {|+>, |R>} block is [[x², x], [x, 1]].
        let x: f64 = 0.2;
        let (delta, omega_c) = (1.0, 2.0);
        let m = effective_site_matrix(x * omega_c / SQRT_2, omega_c, delta, 0.0);
        let dm = DMatrix::from_fn(3, 3, |i, j| m[i * 3 + j].re);
        let mut ev: Vec<f64> = dm.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let disc = ((1.0 - x * x).powi(2) + 4.0 * x * x).sqrt();
        let lo = (1.0 + x * x - disc) / 2.0;
        let hi = (1.0 + x * x + disc) / 2.0;
        assert!(ev[0].abs() < 1e-14);
        assert!((ev[1] - lo).abs() < 1e-14 && (ev[2] - hi).abs() < 1e-14);
        // the {|+>,|R>} block has the dark state d2 at zero
        assert!(lo.abs() < 1e-14);
        assert!((hi - 1.04).abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_keeps_only_rydberg_terms() {
        let mut p = PhysParams::rb87(1);
        let h = HamiltonianSpec::raman(Model::Effective, p.clone(), false).build().unwrap();
        let m = h.dense(0.0).unwrap();
        let eps = p.epsilon();
        let s = h.scheme();
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                let (ci, li) = s.labels(i).unwrap();
                let expected = if i == j && li[0] == R {
                    eps + if ci == ControlLevel::Rydberg { p.v_control[0] } else { 0.0 }
                } else {
                    0.0
                };
                assert!((m[(i, j)].re - expected).abs() < 1e-6 && m[(i, j)].im == 0.0);
            }
        }
        p.omega_c = 0.0;
        let h = HamiltonianSpec::raman(Model::Effective, p.clone(), false).build().unwrap();
        let m = h.dense(p.t_raman / 2.0).unwrap();
        // pure two-photon Raman coupling Ω_p²/(4Δ) between A and B
        let a = s.index(ControlLevel::Zero, &[A]).unwrap();
        let b = s.index(ControlLevel::Zero, &[B]).unwrap();
        assert!((m[(a, b)].re - p.omega_p_max.powi(2) / (4.0 * p.delta)).abs() < 1e-3);
    }

    #[test]
    fn time_window_enforced() {
        let p = PhysParams::rb87(1);
        let h = HamiltonianSpec::raman(Model::Effective, p.clone(), false).build().unwrap();
        let psi = CompositeState::zeros(h.scheme());
        assert!(h.apply(-1e-9, &psi).is_err());
        assert!(h.apply(p.t_raman * 1.01, &psi).is_err());
        let other = CompositeState::zeros(LevelScheme::new(Model::Full, 1).unwrap());
        assert!(matches!(h.apply(0.0, &other), Err(Error::SchemeMismatch)));
    }

    #[test]
    fn dense_refused_for_large_spaces() {
        let p = PhysParams::rb87(7);
        let h = HamiltonianSpec::raman(Model::Full, p, false).build().unwrap();
        assert!(matches!(h.dense(0.0), Err(Error::TooLarge { .. })));
    }
}
