//! Many-body interferometer: control superposition, gate, branch-dependent
//! evolution of an auxiliary register, recombining gate, and a control
//! measurement in the `|c±> = (|0> ± |1>)/√2` basis.
//!
//! The branch unitaries act on a small auxiliary register that travels with
//! the ensemble; the ensemble configuration `A^N` or `B^N` selects which one.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gate::{apply_gate, transfer_branch_sign, GateOptions};
use crate::hilbert::{CompositeState, ControlLevel, EnsembleLevel, LevelScheme, C64};
use crate::params::PhysParams;

/// Tolerance on `U†U = I`.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct BranchUnitary {
    pub label: String,
    matrix: DMatrix<C64>,
}

impl BranchUnitary {
    pub fn new(label: impl Into<String>, matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Dimension(format!("branch unitary must be square, got {}×{}", matrix.nrows(), matrix.ncols())));
        }
        let dev = unitarity_deviation(&matrix);
        if !(dev <= UNITARITY_TOL) {
            return Err(Error::NonUnitary(dev));
        }
        Ok(BranchUnitary { label: label.into(), matrix })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        BranchUnitary::new("identity", DMatrix::identity(dim, dim))
    }

    /// `e^{iθ}·I`.
    pub fn global_phase(dim: usize, theta: f64) -> Result<Self> {
        BranchUnitary::new(format!("global_phase({theta})"), DMatrix::identity(dim, dim) * C64::from_polar(1.0, theta))
    }

    /// `e^{iθ}` on mode `k`, identity elsewhere.
    pub fn phase_rotation(dim: usize, k: usize, theta: f64) -> Result<Self> {
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, dim });
        }
        let mut m = DMatrix::identity(dim, dim);
        m[(k, k)] = C64::from_polar(1.0, theta);
        BranchUnitary::new(format!("phase_rotation({k},{theta})"), m)
    }

    /// Real rotation by θ in the `(i, j)` plane.
    pub fn two_level_mixing(dim: usize, i: usize, j: usize, theta: f64) -> Result<Self> {
        for idx in [i, j] {
            if idx >= dim {
                return Err(Error::IndexOutOfRange { index: idx, dim });
            }
        }
        if i == j {
            return Err(Error::InvalidParameter("two-level mixing needs distinct modes".into()));
        }
        let mut m = DMatrix::identity(dim, dim);
        let (c, s) = (theta.cos(), theta.sin());
        m[(i, i)] = C64::new(c, 0.0);
        m[(j, j)] = C64::new(c, 0.0);
        m[(i, j)] = C64::new(-s, 0.0);
        m[(j, i)] = C64::new(s, 0.0);
        BranchUnitary::new(format!("two_level_mixing({i},{j},{theta})"), m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
}

fn unitarity_deviation(m: &DMatrix<C64>) -> f64 {
    let prod = m.adjoint() * m;
    let id = DMatrix::<C64>::identity(m.nrows(), m.ncols());
    (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// The ideal CNOT^N as a permutation-with-phase matrix on control `{0,1}` ⊗ `{A,B}^N`,
/// control-major with atom 0 most significant and `A` = 0. The `|1>` branch
/// flips every atom and carries `-(-1)^N`, or `+1` when `compensate` is set.
pub fn ideal_gate_unitary(n_atoms: usize, compensate: bool) -> Result<DMatrix<C64>> {
    if n_atoms == 0 {
        return Err(Error::InvalidParameter("need at least one atom".into()));
    }
    if n_atoms > 12 {
        return Err(Error::InvalidParameter(format!("dense ideal gate limited to 12 atoms, got {n_atoms}")));
    }
    let block = 1usize << n_atoms;
    let dim = 2 * block;
    let phase = if compensate { 1.0 } else { transfer_branch_sign(n_atoms) };
    let mut u = DMatrix::zeros(dim, dim);
    for s in 0..block {
        u[(s, s)] = C64::new(1.0, 0.0);
        let flipped = !s & (block - 1);
        u[(block + flipped, block + s)] = C64::new(phase, 0.0);
    }
    Ok(u)
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateMode {
    /// The exact CNOT^N with the transfer-branch phase compensated.
    Ideal { n_atoms: usize },
    /// The gate replaced by the simulated pulse sequence.
    Simulated { params: PhysParams, options: GateOptions },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterferometerResult {
    pub p_plus: f64,
    pub p_minus: f64,
    /// Outcome probabilities for the run with control `(|0> + i|1>)/√2`.
    pub p_plus_quadrature: f64,
    pub p_minus_quadrature: f64,
    /// `Re = p₊ − p₋`, `Im = p₋' − p₊'`.
    pub overlap_estimate: C64,
}

/// Runs both arms (real and quadrature) of the interferometer.
pub fn run_interferometer(
    phi: &[C64],
    u_a: &BranchUnitary,
    u_b: &BranchUnitary,
    mode: &GateMode,
) -> Result<InterferometerResult> {
    let d = phi.len();
    if u_a.dim() != d || u_b.dim() != d {
        return Err(Error::Dimension(format!(
            "auxiliary state has dimension {d}, branch unitaries {} and {}",
            u_a.dim(),
            u_b.dim()
        )));
    }
    let norm: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("auxiliary state must be normalized, ‖Φ‖² = {norm}")));
    }
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let (p_plus, p_minus) = one_arm(phi, u_a, u_b, mode, h, h)?;
    let (pq_plus, pq_minus) = one_arm(phi, u_a, u_b, mode, h, C64::new(0.0, FRAC_1_SQRT_2))?;
    Ok(InterferometerResult {
        p_plus,
        p_minus,
        p_plus_quadrature: pq_plus,
        p_minus_quadrature: pq_minus,
        overlap_estimate: C64::new(p_plus - p_minus, pq_minus - pq_plus),
    })
}

fn one_arm(
    phi: &[C64],
    u_a: &BranchUnitary,
    u_b: &BranchUnitary,
    mode: &GateMode,
    alpha: C64,
    beta: C64,
) -> Result<(f64, f64)> {
    match mode {
        GateMode::Ideal { n_atoms } => ideal_arm(phi, u_a, u_b, *n_atoms, alpha, beta),
        GateMode::Simulated { params, options } => simulated_arm(phi, u_a, u_b, params, options, alpha, beta),
    }
}

/// Control-outcome probabilities from the control blocks `ψ_0`, `ψ_1`.
fn measure(psi0: &[C64], psi1: &[C64]) -> (f64, f64) {
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (a, b) in psi0.iter().zip(psi1) {
        plus += (a + b).norm_sqr() / 2.0;
        minus += (a - b).norm_sqr() / 2.0;
    }
    (plus, minus)
}

/// Full vector on control ⊗ ensemble ⊗ aux, aux fastest.
fn ideal_arm(phi: &[C64], u_a: &BranchUnitary, u_b: &BranchUnitary, n: usize, alpha: C64, beta: C64) -> Result<(f64, f64)> {
    let gate = ideal_gate_unitary(n, true)?;
    let d = phi.len();
    let block = 1usize << n;
    let id_aux = DMatrix::<C64>::identity(d, d);
    let gate_full = gate.kronecker(&id_aux);
    let mut psi = DVector::<C64>::zeros(2 * block * d);
    for (a, &p) in phi.iter().enumerate() {
        psi[a] = alpha * p;
        psi[block * d + a] = beta * p;
    }
    psi = &gate_full * psi;
    // branch evolution: U_A when every atom is in A, U_B when every atom is in B
    let all_b = block - 1;
    for c in 0..2 {
        for (cfg, u) in [(0usize, u_a), (all_b, u_b)] {
            let start = (c * block + cfg) * d;
            let seg = psi.rows(start, d).into_owned();
            psi.rows_mut(start, d).copy_from(&(u.matrix() * seg));
        }
    }
    psi = &gate_full * psi;
    let v = psi.as_slice();
    Ok(measure(&v[..block * d], &v[block * d..]))
}

fn simulated_arm(
    phi: &[C64],
    u_a: &BranchUnitary,
    u_b: &BranchUnitary,
    params: &PhysParams,
    options: &GateOptions,
    alpha: C64,
    beta: C64,
) -> Result<(f64, f64)> {
    let n = params.n_atoms;
    let scheme = LevelScheme::new(options.model, n)?;
    let all_a = vec![EnsembleLevel::A; n];
    let all_b = vec![EnsembleLevel::B; n];
    let zero = CompositeState::basis(scheme, ControlLevel::Zero, &all_a)?.scaled(alpha);
    let one = CompositeState::basis(scheme, ControlLevel::One, &all_a)?.scaled(beta);
    // every aux component starts with the same control ⊗ ensemble state
    let (mut after_gate, _) = apply_gate(&zero.add(&one)?, params, options)?;
    let ia = scheme.index(ControlLevel::Zero, &all_a)? % scheme.block_len();
    let ib = scheme.index(ControlLevel::Zero, &all_b)? % scheme.block_len();
    let block = scheme.block_len();
    // Relative phase of the two gate branches, removed after each gate by a
    // phase on the control |1> (the laser-phase compensation of the ideal mode).
    let blocked = after_gate.amplitude(ControlLevel::Zero, &all_a)? / alpha;
    let transferred = after_gate.amplitude(ControlLevel::One, &all_b)? / beta;
    let correction = C64::from_polar(1.0, blocked.arg() - transferred.arg());
    let compensate = |amps: &mut [C64]| {
        let one = ControlLevel::One.index();
        for z in &mut amps[one * block..(one + 1) * block] {
            *z *= correction;
        }
    };
    compensate(after_gate.amplitudes_mut());
    let d = phi.len();
    // slices[a] is the control ⊗ ensemble state multiplying aux basis |a>
    let mut slices: Vec<Vec<C64>> =
        phi.iter().map(|&p| after_gate.amplitudes().iter().map(|z| z * p).collect()).collect();
    for c in 0..3 {
        for (e, u) in [(ia, u_a), (ib, u_b)] {
            let idx = c * block + e;
            let v = DVector::from_iterator(d, slices.iter().map(|s| s[idx]));
            let w = u.matrix() * v;
            for (s, x) in slices.iter_mut().zip(w.iter()) {
                s[idx] = *x;
            }
        }
    }
    let mut psi0 = Vec::with_capacity(d * block);
    let mut psi1 = Vec::with_capacity(d * block);
    for s in slices {
        let state = CompositeState::from_amplitudes(scheme, s)?;
        let (mut out, _) = apply_gate(&state, params, options)?;
        compensate(out.amplitudes_mut());
        psi0.extend_from_slice(out.control_block(ControlLevel::Zero));
        psi1.extend_from_slice(out.control_block(ControlLevel::One));
    }
    Ok(measure(&psi0, &psi1))
}
