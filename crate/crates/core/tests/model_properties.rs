use std::f64::consts::{PI, TAU};

use elastica_core::model::{
    discrete_energy, el_residual_interior, first_integral_residual, ordinate,
    reconstruct_centerline, tip_boundary_residual,
};
use elastica_core::{
    newton_solve, ElasticaParams, EquilibriumState, Mesh, NewtonSettings, OrdinateKind,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth angle field `θ₀ + Σ a_k sin(kπs/2)`.
fn smooth_theta(mesh: Mesh, theta0: f64, coeffs: &[f64]) -> Vec<f64> {
    mesh.coordinates()
        .iter()
        .map(|s| {
            theta0
                + coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k + 1) as f64 * PI * s / 2.0).sin())
                    .sum::<f64>()
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn params_strategy() -> impl Strategy<Value = ElasticaParams> {
    (0.0f64..25.0, -PI..PI, -0.6f64..0.6, -PI..PI, -PI..PI)
        .prop_map(|(p, a, e, s, t)| ElasticaParams::new(p, a, e, s, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rigid_rotation_with_opposite_load_turn_is_invisible(
        params in params_strategy(),
        coeffs in prop::collection::vec(-2.0f64..2.0, 4),
        delta in -3.0f64..3.0,
    ) {
        let mesh = Mesh::new(61).unwrap();
        let theta = smooth_theta(mesh, params.theta0, &coeffs);
        let a = EquilibriumState::from_theta(theta.clone(), &params).unwrap();
        let mut turned = params;
        turned.theta0 += delta;
        turned.alpha -= delta;
        let b = EquilibriumState::from_theta(theta.iter().map(|t| t + delta).collect(), &turned).unwrap();
        let ra = el_residual_interior(&a, &params).unwrap();
        let rb = el_residual_interior(&b, &turned).unwrap();
        // Second differences of O(1) angles carry rounding of ulp(θ)/h².
        let h = mesh.h();
        let floor = 64.0 * f64::EPSILON * (1.0 + max_abs(&theta) + delta.abs()) / (h * h);
        for (x, y) in ra.iter().zip(&rb) {
            prop_assert!((x - y).abs() <= floor, "{x} vs {y}");
        }
        let (ta, tb) = (tip_boundary_residual(&a, &params), tip_boundary_residual(&b, &turned));
        prop_assert!((ta - tb).abs() <= floor * h);
    }

    #[test]
    fn residuals_are_two_pi_periodic_in_arm_and_load_angles(
        params in params_strategy(),
        coeffs in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let mesh = Mesh::new(61).unwrap();
        let theta = smooth_theta(mesh, params.theta0, &coeffs);
        let base = EquilibriumState::from_theta(theta.clone(), &params).unwrap();
        let r0 = el_residual_interior(&base, &params).unwrap();
        let t0 = tip_boundary_residual(&base, &params);
        for kind in [OrdinateKind::Psi, OrdinateKind::Alpha] {
            let shifted = params.with(kind, params.get(kind) + TAU);
            let state = EquilibriumState::from_theta(theta.clone(), &shifted).unwrap();
            let r1 = el_residual_interior(&state, &shifted).unwrap();
            let t1 = tip_boundary_residual(&state, &shifted);
            // sin and cos of ξ and ξ + 2π differ by rounding of the argument.
            let tol = 1e-12 * (1.0 + params.load);
            prop_assert!(max_abs(&r0.iter().zip(&r1).map(|(a, b)| a - b).collect::<Vec<_>>()) <= tol);
            prop_assert!((t0 - t1).abs() <= tol);
        }
    }
}

#[test]
fn energy_gradient_is_the_scaled_residual() {
    let mesh = Mesh::new(41).unwrap();
    let h = mesh.h();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let params = ElasticaParams::new(
            rng.gen_range(0.5..20.0),
            rng.gen_range(-PI..PI),
            rng.gen_range(-0.6..0.6),
            rng.gen_range(-PI..PI),
            rng.gen_range(-1.0..1.0),
        );
        let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let theta = smooth_theta(mesh, params.theta0, &coeffs);
        let state = EquilibriumState::from_theta(theta.clone(), &params).unwrap();
        let interior = el_residual_interior(&state, &params).unwrap();
        let tip = tip_boundary_residual(&state, &params);
        let step = 1e-5;
        let n = theta.len();
        for i in 1..n {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[i] += step;
            down[i] -= step;
            let fd = (discrete_energy(&up, &params).unwrap()
                - discrete_energy(&down, &params).unwrap())
                / (2.0 * step);
            let expected = if i < n - 1 { h * interior[i - 1] } else { tip };
            let scale = expected.abs().max(1.0);
            assert!(
                (fd - expected).abs() <= 1e-8 * scale,
                "node {i}: finite difference {fd}, residual {expected}"
            );
        }
    }
}

/// Interior residual of a smooth field against `−θ″ − P sin(θ + α)` at
/// `s = 1/4, 1/2, 3/4`, which are nodes of all three meshes.
#[test]
fn interior_residual_converges_at_second_order() {
    let params = ElasticaParams::new(3.0, 0.4, 0.3, 0.2, 0.1);
    let theta = |s: f64| 0.1 + 0.7 * (1.3 * s).sin() + 0.4 * s * s * s;
    let theta_pp = |s: f64| -0.7 * 1.69 * (1.3 * s).sin() + 2.4 * s;
    let exact = |s: f64| -theta_pp(s) - params.load * (theta(s) + params.alpha).sin();
    let err = |n: usize| {
        let mesh = Mesh::new(n).unwrap();
        let values: Vec<f64> = mesh.coordinates().iter().map(|s| theta(*s)).collect();
        let state = EquilibriumState::from_theta(values, &params).unwrap();
        let r = el_residual_interior(&state, &params).unwrap();
        [0.25, 0.5, 0.75]
            .iter()
            .map(|s| {
                let i = (s * (n - 1) as f64).round() as usize;
                (r[i - 1] - exact(*s)).abs()
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2, e4) = (err(101), err(201), err(401));
    for ratio in [e1 / e2, e2 / e4] {
        assert!(
            (3.0..=5.0).contains(&ratio),
            "ratio {ratio} ({e1}, {e2}, {e4})"
        );
    }
}

#[test]
fn hand_values() {
    let mesh = Mesh::new(21).unwrap();
    let params = ElasticaParams::new(1.0, PI / 2.0, 0.0, 0.0, 0.0);
    let state = EquilibriumState::straight(mesh, &params);
    for r in el_residual_interior(&state, &params).unwrap() {
        assert!((r + 1.0).abs() < 1e-14);
    }
    let params = ElasticaParams::new(PI * PI / 4.0, 0.0, 0.25, 0.0, 0.0);
    let state = EquilibriumState::straight(mesh, &params);
    let e = ordinate(&state, &params, OrdinateKind::Epsilon);
    assert!((e - PI * PI / 4.0).abs() < 1e-14);
}

fn buckled_cantilever(n: usize, load: f64) -> (EquilibriumState, ElasticaParams) {
    let mesh = Mesh::new(n).unwrap();
    let params = ElasticaParams::new(load, 0.0, 0.0, 0.0, 0.0);
    let guess = EquilibriumState::from_theta(smooth_theta(mesh, 0.0, &[1.0]), &params).unwrap();
    let (state, _) = newton_solve(&guess, &params, &NewtonSettings::default()).unwrap();
    (state, params)
}

#[test]
fn buckled_state_has_a_short_chord_and_free_tip() {
    let (state, params) = buckled_cantilever(201, PI * PI / 4.0 + 0.5);
    assert!(state.theta1().abs() > 0.3);
    assert!(max_abs(&el_residual_interior(&state, &params).unwrap()) < 1e-10);
    assert!(state.theta_prime_1.abs() < 1e-10);
    let line = reconstruct_centerline(&state);
    let tip = line.last().unwrap();
    assert!((tip[0] - state.x1).abs() < 1e-14 && (tip[1] - state.y1).abs() < 1e-14);
    assert!(tip[0].hypot(tip[1]) < 1.0);
    let length: f64 = line
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .sum();
    assert!((length - 1.0).abs() < 1e-4, "polyline length {length}");
}

#[test]
fn clamp_moment_balances_tip_moment_on_solved_states() {
    let mesh = Mesh::new(201).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut solved = 0;
    while solved < 10 {
        let params = ElasticaParams::new(
            rng.gen_range(0.5..12.0),
            rng.gen_range(-PI..PI),
            rng.gen_range(-0.6..0.6),
            rng.gen_range(-PI..PI),
            rng.gen_range(-1.0..1.0),
        );
        let guess = EquilibriumState::from_theta(
            smooth_theta(mesh, params.theta0, &[rng.gen_range(-1.0..1.0)]),
            &params,
        )
        .unwrap();
        let Ok((state, _)) = newton_solve(&guess, &params, &NewtonSettings::default()) else {
            continue;
        };
        assert!(first_integral_residual(&state, &params).abs() < 1e-6);
        let theta0_ord = ordinate(&state, &params, OrdinateKind::Theta0);
        let alpha_ord = ordinate(&state, &params, OrdinateKind::Alpha);
        // The arm's moment about the tip is the tip slope, so the clamp
        // moment is minus the load-angle ordinate, arm included.
        assert!((theta0_ord + alpha_ord).abs() < 1e-6);
        solved += 1;
    }
}
