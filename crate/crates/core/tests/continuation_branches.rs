use std::f64::consts::PI;

use elastica_core::model::{first_integral_residual, ordinate};
use elastica_core::{
    Branch, Continuation, ContinuationSettings, ElasticaParams, EquilibriumState, Mesh,
    OrdinateKind, Termination, Verdict,
};

const SIX_PI: f64 = 6.0 * PI;

fn run(
    params: ElasticaParams,
    kind: OrdinateKind,
    range: [f64; 2],
    seed: Option<&EquilibriumState>,
) -> (Branch, Continuation) {
    let mesh = Mesh::new(201).unwrap();
    let cont = Continuation::new(params, mesh, ContinuationSettings::new(kind, range)).unwrap();
    let straight = EquilibriumState::straight(mesh, &params);
    let branch = cont.run(seed.unwrap_or(&straight)).unwrap();
    (branch, cont)
}

fn rotate_arm() -> (Branch, Continuation) {
    let params = ElasticaParams::new(PI * PI / 4.0, 0.0, 0.25, 0.0, 0.0);
    run(params, OrdinateKind::Psi, [-SIX_PI, SIX_PI], None)
}

fn check_branch_invariants(branch: &Branch) {
    let mesh = branch.mesh;
    for p in &branch.points {
        let t = p.theta_dot();
        let norm = mesh.inner(t, t) + p.xi_dot * p.xi_dot;
        assert!(
            (norm - 1.0).abs() <= 1e-10,
            "tangent norm² {norm} at xi = {}",
            p.xi
        );
        let params = branch.params_at(p.xi);
        assert!(first_integral_residual(&p.state, &params).abs() < 1e-6);
        assert_eq!(p.ordinate, ordinate(&p.state, &params, branch.kind));
    }
    // Indices change only across a fold or a flagged singularity.
    for (i, w) in branch.points.windows(2).enumerate() {
        if w[0].index != w[1].index {
            let explained = branch.folds.iter().any(|f| f.point_before == i)
                || branch.singularities.iter().any(|s| s.point_before == i);
            assert!(
                explained,
                "index {} -> {} between points {i} and {}",
                w[0].index,
                w[1].index,
                i + 1
            );
        }
    }
    for f in &branch.folds {
        assert!(f.xi_dot.abs() < 1e-8, "fold xi_dot {}", f.xi_dot);
        let v = f.validation.as_ref().expect("every fold is validated");
        assert_eq!(v.verdict, Verdict::Pass, "fold at {}: {v:?}", f.xi_star);
        assert!(v.mu_at_fold.abs() < 100.0 * v.tol_eig);
        assert!(v.mu_before * v.mu_after < 0.0);
        assert_eq!(f.index_after, Some(v.oracle_index_after));
        assert!(
            v.null_vector_cosine > 0.999,
            "cosine {}",
            v.null_vector_cosine
        );
        let (lo, hi) = (
            branch.settings.range[0].min(branch.settings.range[1]),
            branch.settings.range[0].max(branch.settings.range[1]),
        );
        assert!(lo <= f.xi_star && f.xi_star <= hi);
        assert!(branch.points[f.point_before].xi_dot * branch.points[f.point_after].xi_dot < 0.0);
    }
}

#[test]
fn trivial_branch_stays_straight_and_steps_grow() {
    let params = ElasticaParams::new(0.2, 0.0, 0.0, 0.0, 0.0);
    let (branch, _) = run(params, OrdinateKind::LoadP, [0.2, 2.0], None);
    assert_eq!(branch.termination, Termination::LeftRange);
    assert!(branch.folds.is_empty() && branch.singularities.is_empty());
    for w in branch.points.windows(2) {
        assert!(w[1].xi > w[0].xi);
        assert!(w[1].state.theta.iter().all(|t| t.abs() < 1e-12));
    }
    let steps: Vec<f64> = branch
        .points
        .windows(2)
        .map(|w| w[1].tau - w[0].tau)
        .collect();
    let s = &branch.settings;
    assert!((steps[0] - s.ds_init).abs() < 1e-15);
    assert!(steps[..steps.len() - 1]
        .iter()
        .all(|d| *d <= s.ds_max + 1e-15));
    // Four easy steps at ds_init, then the step doubles.
    assert!(steps[..4].iter().all(|d| (d - s.ds_init).abs() < 1e-15));
    assert!(
        (steps[4] - 2.0 * s.ds_init).abs() < 1e-15,
        "steps {:?}",
        &steps[..6]
    );
    assert!(steps.iter().any(|d| (d - s.ds_max).abs() < 1e-15));
}

#[test]
fn arm_rotation_folds_pass_the_eigenvalue_check() {
    let (branch, _) = rotate_arm();
    assert_eq!(branch.termination, Termination::LeftRange);
    assert!(branch.folds.len() >= 4, "{} folds", branch.folds.len());
    check_branch_invariants(&branch);
    assert!(branch.points.iter().any(|p| p.index == 0));
    assert!(branch.points.iter().any(|p| p.index == 1));
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Each sampled point is matched with the chord guess at `ξ − 2π` closest
/// to it. Guesses farther than 0.5 rad belong to another equilibrium: the
/// translate then lies beyond the computed end of the branch.
#[test]
fn branch_is_two_pi_periodic() {
    let (branch, cont) = rotate_arm();
    let mut compared = 0;
    for p in branch.points.iter().step_by(25) {
        let target = p.xi - 2.0 * PI;
        let mut closest: Option<(f64, EquilibriumState)> = None;
        for w in branch.points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.xi == b.xi || (a.xi - target) * (b.xi - target) > 0.0 {
                continue;
            }
            let t = (target - a.xi) / (b.xi - a.xi);
            let theta: Vec<f64> = a
                .state
                .theta
                .iter()
                .zip(&b.state.theta)
                .map(|(x, y)| x + t * (y - x))
                .collect();
            let gap = max_diff(&theta, &p.state.theta);
            if closest.as_ref().map_or(true, |(g, _)| gap < *g) {
                closest = Some((
                    gap,
                    EquilibriumState {
                        theta,
                        ..a.state.clone()
                    },
                ));
            }
        }
        let Some((gap, guess)) = closest else {
            continue;
        };
        if gap > 0.5 {
            continue;
        }
        let s = cont.solve_at(target, &guess).unwrap();
        let d = max_diff(&s.theta, &p.state.theta);
        assert!(d < 1e-6, "xi = {}: distance {d}", p.xi);
        compared += 1;
    }
    assert!(compared > 10, "{compared} points compared");
}

#[test]
fn reversed_sweep_retraces_the_curve() {
    let params = ElasticaParams::new(PI * PI / 4.0, 0.0, 0.25, 0.0, 0.0);
    let (forward, cont) = run(params, OrdinateKind::Psi, [0.0, 0.6], None);
    let end = forward.points.last().unwrap();
    assert!((end.xi - 0.6).abs() < 1e-12);
    let (back, _) = run(
        params.with(OrdinateKind::Psi, 0.6),
        OrdinateKind::Psi,
        [0.6, 0.0],
        Some(&end.state),
    );
    assert!((back.points.last().unwrap().xi).abs() < 1e-12);
    for p in &back.points {
        let seg = forward
            .points
            .windows(2)
            .find(|w| (w[0].xi - p.xi) * (w[1].xi - p.xi) <= 0.0)
            .expect("forward branch covers the reversed one");
        let t = (p.xi - seg[0].xi) / (seg[1].xi - seg[0].xi);
        let theta = seg[0]
            .state
            .theta
            .iter()
            .zip(&seg[1].state.theta)
            .map(|(x, y)| x + t * (y - x))
            .collect();
        let guess = EquilibriumState {
            theta,
            ..seg[0].state.clone()
        };
        let s = cont.solve_at(p.xi, &guess).unwrap();
        let o = ordinate(&s, &params.with(OrdinateKind::Psi, p.xi), OrdinateKind::Psi);
        assert!(
            (o - p.ordinate).abs() < 1e-6,
            "xi = {}: {o} vs {}",
            p.xi,
            p.ordinate
        );
    }
}

#[test]
fn arm_length_sweep_through_the_pitchfork_is_flagged() {
    let params = ElasticaParams::new(PI * PI / 4.0, 0.0, 0.5, 0.0, 0.0);
    let (branch, _) = run(params, OrdinateKind::Epsilon, [0.5, -0.5], None);
    assert!(branch.folds.is_empty());
    assert!(!branch.singularities.is_empty());
    let s = &branch.singularities[0];
    assert!(s.xi.abs() < 0.05, "singularity at eps = {}", s.xi);
    check_branch_invariants(&branch);
}

#[test]
fn clamp_rotation_uses_the_clamp_moment_and_fixed_end_rule() {
    let params = ElasticaParams::new(PI * PI / 4.0, 0.0, 0.25, 0.0, 0.0);
    let (branch, _) = run(params, OrdinateKind::Theta0, [-SIX_PI, SIX_PI], None);
    assert!(!branch.folds.is_empty());
    for p in &branch.points {
        assert_eq!(p.ordinate, p.state.theta_prime_0);
    }
    check_branch_invariants(&branch);
}

#[test]
fn runs_are_deterministic() {
    let params = ElasticaParams::new(PI * PI / 4.0, 0.0, 0.25, 0.0, 0.0);
    let (a, _) = run(params, OrdinateKind::Psi, [0.0, 2.0], None);
    let (b, _) = run(params, OrdinateKind::Psi, [0.0, 2.0], None);
    assert_eq!(a, b);
}

#[test]
fn invalid_settings_are_rejected() {
    let params = ElasticaParams::new(1.0, 0.0, 0.0, 0.0, 0.0);
    let mesh = Mesh::new(21).unwrap();
    let mut s = ContinuationSettings::new(OrdinateKind::Psi, [0.0, 1.0]);
    s.ds_min = 1.0;
    assert!(Continuation::new(params, mesh, s).is_err());
    let cont = Continuation::new(
        params,
        mesh,
        ContinuationSettings::new(OrdinateKind::Psi, [1.0, 2.0]),
    )
    .unwrap();
    assert!(cont
        .run(&EquilibriumState::straight(mesh, &params))
        .is_err());
}
