use nalgebra::DMatrix;
use proptest::prelude::*;
use rydgate::hilbert::{apply_site_operator, apply_two_site_projector, basis_index, overlap, Site, SiteLevel, SiteOperator};
use rydgate::interferometer::{run_interferometer, BranchUnitary, GateMode};
use rydgate::{CompositeState, ControlLevel, EnsembleLevel, HamiltonianSpec, LevelScheme, Model, PhysParams, C64};

fn model_strategy() -> impl Strategy<Value = Model> {
    prop_oneof![Just(Model::Full), Just(Model::Effective)]
}

fn amplitudes(dim: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

fn scheme_and_state() -> impl Strategy<Value = (LevelScheme, CompositeState)> {
    (model_strategy(), 0usize..=3).prop_flat_map(|(model, n)| {
        let scheme = LevelScheme::new(model, n).unwrap();
        amplitudes(scheme.dim()).prop_map(move |a| (scheme, CompositeState::from_amplitudes(scheme, a).unwrap()))
    })
}

/// Q factor of a random complex matrix, row-major.
fn unitary_from(entries: &[C64], d: usize) -> Vec<C64> {
    let q = DMatrix::from_row_slice(d, d, entries).qr().q();
    (0..d * d).map(|k| q[(k / d, k % d)]).collect()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn max_diff(a: &CompositeState, b: &CompositeState) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_index_round_trips(model in model_strategy(), n in 0usize..=3, seed in any::<usize>()) {
        let scheme = LevelScheme::new(model, n).unwrap();
        let i = seed % scheme.dim();
        let (c, labels) = scheme.labels(i).unwrap();
        prop_assert_eq!(basis_index(&scheme, c, &labels).unwrap(), i);
    }

    #[test]
    fn unitary_site_operator_preserves_norm((scheme, psi) in scheme_and_state(), site_pick in any::<usize>(), entries in amplitudes(16)) {
        let n = scheme.n_atoms();
        let site = if site_pick % (n + 1) == n { Site::Control } else { Site::Atom(site_pick % (n + 1)) };
        let d = scheme.site_dim(site);
        let u = unitary_from(&entries[..d * d], d);
        let m = DMatrix::from_row_slice(d, d, &u);
        prop_assume!((m.adjoint() * &m - DMatrix::identity(d, d)).norm() < 1e-12);
        let op = SiteOperator::new(site, d, u).unwrap();
        let out = apply_site_operator(&psi, &op).unwrap();
        let (a, b) = (psi.norm(), out.norm());
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }

    #[test]
    fn operators_on_different_sites_commute((scheme, psi) in scheme_and_state(), e1 in amplitudes(16), e2 in amplitudes(16)) {
        let n = scheme.n_atoms();
        prop_assume!(n >= 1);
        let sites = [Site::Control, Site::Atom(n - 1)];
        let ops: Vec<SiteOperator> = sites
            .iter()
            .zip([&e1, &e2])
            .map(|(&s, e)| {
                let d = scheme.site_dim(s);
                SiteOperator::new(s, d, e[..d * d].to_vec()).unwrap()
            })
            .collect();
        let ab = apply_site_operator(&apply_site_operator(&psi, &ops[0]).unwrap(), &ops[1]).unwrap();
        let ba = apply_site_operator(&apply_site_operator(&psi, &ops[1]).unwrap(), &ops[0]).unwrap();
        let scale = norm(ab.amplitudes()).max(1.0);
        prop_assert!(max_diff(&ab, &ba) <= 1e-12 * scale);
    }

    #[test]
    fn overlap_is_conjugate_symmetric((scheme, a) in scheme_and_state(), seed in amplitudes(3)) {
        let b = CompositeState::from_amplitudes(
            scheme,
            a.amplitudes().iter().enumerate().map(|(i, z)| z * seed[i % 3] + seed[(i + 1) % 3]).collect(),
        ).unwrap();
        let ab = overlap(&a, &b).unwrap();
        let ba = overlap(&b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() <= 1e-14 * (1.0 + a.norm() * b.norm()));
        prop_assert!(ab.norm() <= a.norm() * b.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn two_site_projector_matches_dense_oracle(amps in amplitudes(48), la in 0usize..4, lb in 0usize..4, coeff in -3.0f64..3.0) {
        let scheme = LevelScheme::new(Model::Full, 2).unwrap();
        let psi = CompositeState::from_amplitudes(scheme, amps.clone()).unwrap();
        let levels = Model::Full.levels();
        let out = apply_two_site_projector(&psi, SiteLevel::Atom(0, levels[la]), SiteLevel::Atom(1, levels[lb]), coeff).unwrap();
        // digits (control, atom 0, atom 1) in base (3, 4, 4)
        for (i, z) in amps.iter().enumerate() {
            let expect = if (i / 4) % 4 == la && i % 4 == lb { z * coeff } else { C64::new(0.0, 0.0) };
            prop_assert!((out.amplitudes()[i] - expect).norm() <= 1e-15);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian(model in model_strategy(), frac in 0.0f64..=1.0, a in amplitudes(48), b in amplitudes(48), vjk in 0.0f64..100.0) {
        let mut p = PhysParams::rb87(2);
        p.set_uniform_interactions(40.0, vjk);
        let h = HamiltonianSpec::raman(model, p.clone(), false).build().unwrap();
        let scheme = LevelScheme::new(model, 2).unwrap();
        let dim = scheme.dim();
        let sa = CompositeState::from_amplitudes(scheme, a[..dim].to_vec()).unwrap();
        let sb = CompositeState::from_amplitudes(scheme, b[..dim].to_vec()).unwrap();
        let t = frac * p.t_raman;
        let ahb = overlap(&sa, &h.apply(t, &sb).unwrap()).unwrap();
        let bha = overlap(&sb, &h.apply(t, &sa).unwrap()).unwrap();
        prop_assert!((ahb - bha.conj()).norm() <= 1e-12 * ahb.norm().max(p.delta * 1e-6));
    }

    #[test]
    fn interferometer_probabilities_are_sane(phi in amplitudes(4), ta in -3.2f64..3.2, tb in -3.2f64..3.2, n in 1usize..=3, k in 0usize..4) {
        let s = norm(&phi);
        prop_assume!(s > 1e-3);
        let phi: Vec<C64> = phi.iter().map(|z| z / s).collect();
        let ua = BranchUnitary::two_level_mixing(4, k, (k + 1) % 4, ta).unwrap();
        let ub = BranchUnitary::phase_rotation(4, k, tb).unwrap();
        let r = run_interferometer(&phi, &ua, &ub, &GateMode::Ideal { n_atoms: n }).unwrap();
        for p in [r.p_plus, r.p_minus, r.p_plus_quadrature, r.p_minus_quadrature] {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
        }
        prop_assert!(r.overlap_estimate.norm() <= 1.0 + 1e-12);
    }
}

#[test]
fn basis_bijection_is_exhaustive() {
    for model in [Model::Full, Model::Effective] {
        for n in 0..=3 {
            let scheme = LevelScheme::new(model, n).unwrap();
            let mut seen = vec![false; scheme.dim()];
            for i in 0..scheme.dim() {
                let (c, labels) = scheme.labels(i).unwrap();
                let j = basis_index(&scheme, c, &labels).unwrap();
                assert!(!seen[j]);
                seen[j] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }
    let scheme = LevelScheme::new(Model::Full, 2).unwrap();
    let idx = basis_index(&scheme, ControlLevel::Rydberg, &[EnsembleLevel::R, EnsembleLevel::R]).unwrap();
    assert_eq!(idx, 47);
}
