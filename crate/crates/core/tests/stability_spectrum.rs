use std::f64::consts::PI;

use elastica_core::stability::{compute_spectrum_with_modes, morse_index};
use elastica_core::{
    assemble_operator, compute_spectrum, critical_loads, newton_solve, ElasticaParams,
    EquilibriumState, Mesh, NewtonSettings,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn state_with(mesh: Mesh, params: &ElasticaParams, coeffs: &[f64]) -> EquilibriumState {
    let theta = mesh
        .coordinates()
        .iter()
        .map(|s| {
            params.theta0
                + coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k + 1) as f64 * PI * s / 2.0).sin())
                    .sum::<f64>()
        })
        .collect();
    EquilibriumState::from_theta(theta, params).unwrap()
}

fn admissible(values: Vec<f64>) -> Vec<f64> {
    let mut v = values;
    v[0] = 0.0;
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operator_is_self_adjoint_in_the_discrete_inner_product(
        load in 0.0f64..25.0,
        alpha in -PI..PI,
        eps in -0.6f64..0.6,
        psi in -PI..PI,
        coeffs in prop::collection::vec(-2.0f64..2.0, 3),
        u in prop::collection::vec(-1.0f64..1.0, 31),
        v in prop::collection::vec(-1.0f64..1.0, 31),
    ) {
        let mesh = Mesh::new(31).unwrap();
        let params = ElasticaParams::new(load, alpha, eps, psi, 0.0);
        let op = assemble_operator(&state_with(mesh, &params, &coeffs), &params).unwrap();
        let (u, v) = (admissible(u), admissible(v));
        let a = mesh.inner(&op.apply(&u), &v);
        let b = mesh.inner(&u, &op.apply(&v));
        let scale = mesh.inner(&op.apply(&u), &op.apply(&u)).sqrt()
            * mesh.inner(&v, &v).sqrt()
            + mesh.inner(&u, &u).sqrt() * mesh.inner(&op.apply(&v), &op.apply(&v)).sqrt();
        prop_assert!((a - b).abs() <= 1e-10 * scale.max(1e-300), "{a} vs {b}");
    }
}

#[test]
fn smallest_eigenvalue_bounds_random_rayleigh_quotients() {
    let mesh = Mesh::new(101).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = ElasticaParams::new(9.0, 0.7, 0.3, 0.4, 0.0);
    let state = state_with(mesh, &params, &[1.2, -0.4]);
    let op = assemble_operator(&state, &params).unwrap();
    let spec = compute_spectrum(&op).unwrap();
    for _ in 0..100 {
        let h = admissible(
            (0..mesh.n_nodes())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        );
        let q = op.rayleigh_quotient(&h);
        assert!(
            spec.mu_min <= q + 1e-9 * q.abs().max(1.0),
            "mu_min {} > {q}",
            spec.mu_min
        );
    }
}

#[test]
fn modes_are_eigenvectors_of_the_operator() {
    let mesh = Mesh::new(81).unwrap();
    let params = ElasticaParams::new(6.0, 0.2, -0.3, 0.1, 0.0);
    let op = assemble_operator(&state_with(mesh, &params, &[0.5]), &params).unwrap();
    let (spec, modes) = compute_spectrum_with_modes(&op).unwrap();
    for (mu, mode) in spec.eigenvalues.iter().zip(&modes).take(5) {
        assert!((op.rayleigh_quotient(mode) - mu).abs() < 1e-8 * mu.abs().max(1.0));
        let residual: Vec<f64> = op
            .apply(mode)
            .iter()
            .zip(mode)
            .map(|(a, b)| a - mu * b)
            .collect();
        assert!(mesh.inner(&residual, &residual).sqrt() < 1e-6 * mu.abs().max(1.0));
    }
}

#[test]
fn unloaded_spectrum_approaches_quarter_wave_values() {
    let mesh = Mesh::new(401).unwrap();
    let params = ElasticaParams::new(0.0, 0.0, 0.0, 0.0, 0.0);
    let spec = morse_index(&EquilibriumState::straight(mesh, &params), &params).unwrap();
    assert_eq!(spec.index, 0);
    for k in 0..3 {
        let exact = ((2 * k + 1) as f64 * PI / 2.0).powi(2);
        let rel = (spec.eigenvalues[k] - exact).abs() / exact;
        assert!(
            rel < 1e-3,
            "mode {}: {} vs {exact}",
            k + 1,
            spec.eigenvalues[k]
        );
    }
}

#[test]
fn first_three_eigenvalues_converge_at_second_order() {
    let params = ElasticaParams::new(4.0, 0.3, 0.25, 0.6, 0.0);
    let eig = |n: usize| {
        let mesh = Mesh::new(n).unwrap();
        let guess = state_with(mesh, &params, &[0.6]);
        let (state, _) = newton_solve(&guess, &params, &NewtonSettings::default()).unwrap();
        morse_index(&state, &params).unwrap().eigenvalues[..3].to_vec()
    };
    let (e1, e2, e4) = (eig(101), eig(201), eig(401));
    for k in 0..3 {
        let ratio = (e1[k] - e2[k]) / (e2[k] - e4[k]);
        assert!(
            (3.0..=5.0).contains(&ratio),
            "mode {}: ratio {ratio}",
            k + 1
        );
    }
}

#[test]
fn straight_index_steps_at_the_first_critical_load() {
    let mesh = Mesh::new(201).unwrap();
    for eps in [0.25, -0.25] {
        let p_cr = critical_loads(eps, 1).unwrap().roots[0];
        for (load, expected) in [(0.97 * p_cr, 0), (1.03 * p_cr, 1)] {
            let params = ElasticaParams::new(load, 0.0, eps, 0.0, 0.0);
            let spec = morse_index(&EquilibriumState::straight(mesh, &params), &params).unwrap();
            assert_eq!(spec.index, expected, "eps {eps} P {load}");
            assert_eq!(
                spec.index,
                spec.eigenvalues
                    .iter()
                    .filter(|m| **m < -spec.tol_eig)
                    .count()
            );
        }
    }
}

#[test]
fn operator_is_symmetric() {
    let mesh = Mesh::new(51).unwrap();
    let params = ElasticaParams::new(12.0, -0.4, 0.5, 1.0, 0.3);
    let op = assemble_operator(&state_with(mesh, &params, &[1.0, 0.3]), &params).unwrap();
    let n = mesh.n_nodes();
    // Column-by-column matrix of the symmetric form from its action.
    let basis = |i: usize| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    };
    for i in 1..n {
        let si = op.apply(&basis(i));
        for j in (i.saturating_sub(1).max(1))..(i + 2).min(n) {
            let sj = op.apply(&basis(j));
            let a = si[j] * mesh.weight(j);
            let b = sj[i] * mesh.weight(i);
            assert!(
                (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0),
                "({i}, {j})"
            );
        }
    }
}
