//! Starting equilibria for scenario branches.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use elastica_core::continuation::Branch;
use elastica_core::stability::morse_index;
use elastica_core::{
    critical_loads, newton_solve, Continuation, ContinuationSettings, ElasticaParams,
    EquilibriumState, Mesh, OrdinateKind,
};
use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::config::{ScenarioConfig, SeedSpec};
use crate::CliError;

/// Two states closer than this in max-norm are the same equilibrium.
pub const SAME_STATE_TOL: f64 = 1e-6;

/// A solved starting equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSeed {
    pub label: String,
    pub params: ElasticaParams,
    pub state: EquilibriumState,
    pub index: usize,
}

/// On-disk form of a stored equilibrium, as written next to every branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSeed {
    pub params: ElasticaParams,
    pub state: EquilibriumState,
}

impl StoredSeed {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Seed(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Seed(format!("{}: {e}", path.display())))
    }
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Shifted copies `target + 2πk` lying between `a` and `b` (inclusive), or
/// `target` alone for a non-angle parameter.
pub fn targets_between(a: f64, b: f64, target: f64, angle: bool) -> Vec<f64> {
    let (lo, hi) = (a.min(b), a.max(b));
    if !angle {
        return if lo <= target && target <= hi {
            vec![target]
        } else {
            Vec::new()
        };
    }
    let k0 = ((lo - target) / TAU).ceil() as i64;
    let k1 = ((hi - target) / TAU).floor() as i64;
    (k0..=k1).map(|k| target + TAU * k as f64).collect()
}

/// Solution on `branch` at `ξ = target` (mod 2π for angle sweeps), one per
/// crossing, polished by Newton at the shifted value. Returns the shifted
/// value, the position of the segment and the state.
pub fn branch_crossings(
    branch: &Branch,
    cont: &Continuation,
    target: f64,
) -> Vec<(f64, usize, EquilibriumState)> {
    let angle = branch.kind.is_angle();
    let mut out = Vec::new();
    for (i, w) in branch.points.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        if a.xi == b.xi {
            continue;
        }
        for xi in targets_between(a.xi, b.xi, target, angle) {
            let t = (xi - a.xi) / (b.xi - a.xi);
            let theta: Vec<f64> = a
                .state
                .theta
                .iter()
                .zip(&b.state.theta)
                .map(|(x, y)| x + t * (y - x))
                .collect();
            let guess = EquilibriumState {
                theta,
                ..a.state.clone()
            };
            match cont.solve_at(xi, &guess) {
                Ok(state) => out.push((xi, i, state)),
                Err(e) => debug!("crossing at xi = {xi} not polished: {e}"),
            }
        }
    }
    out
}

/// Moves a state found at `shifted` to the equivalent parameter `target`.
pub fn unshift(
    kind: OrdinateKind,
    state: &EquilibriumState,
    shifted: f64,
    target: f64,
) -> Vec<f64> {
    if kind.is_fixed_end() {
        let d = target - shifted;
        state.theta.iter().map(|t| t + d).collect()
    } else {
        state.theta.clone()
    }
}

/// Resolves a seed spec at the context parameters.
pub fn resolve(
    spec: &SeedSpec,
    ctx: &ElasticaParams,
    cfg: &ScenarioConfig,
    label: &str,
) -> Result<Vec<ResolvedSeed>, CliError> {
    let mesh = Mesh::new(cfg.mesh)?;
    let newton = cfg.newton();
    let finish = |params: ElasticaParams, guess: EquilibriumState, label: String| {
        let (state, _) = newton_solve(&guess, &params, &newton)
            .map_err(|e| CliError::Seed(format!("seed {label}: {e}")))?;
        let index = morse_index(&state, &params)?.index;
        Ok::<_, CliError>(ResolvedSeed {
            label,
            params,
            state,
            index,
        })
    };
    match spec {
        SeedSpec::Straight => {
            let guess = EquilibriumState::straight(mesh, ctx);
            Ok(vec![finish(*ctx, guess, format!("{label}straight"))?])
        }
        SeedSpec::Buckled { delta, sign } => {
            let state = buckled(ctx, mesh, cfg, delta * sign)?;
            Ok(vec![finish(*ctx, state, format!("{label}buckled"))?])
        }
        SeedSpec::File { path } => {
            let stored = StoredSeed::read(path)?;
            if stored.state.theta.len() != cfg.mesh {
                return Err(CliError::Seed(format!(
                    "{}: stored state has {} nodes, mesh is {}",
                    path.display(),
                    stored.state.theta.len(),
                    cfg.mesh
                )));
            }
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(vec![finish(
                stored.params,
                stored.state,
                format!("{label}file:{name}"),
            )?])
        }
        SeedSpec::Crossing {
            via,
            start,
            range,
            target,
            from,
            index,
            limit,
        } => {
            let inner_ctx = ctx.with(*via, *start);
            let inner = resolve(from, &inner_ctx, cfg, label)?;
            let mut out: Vec<ResolvedSeed> = Vec::new();
            for seed in inner {
                let mut settings = ContinuationSettings::new(*via, *range);
                cfg.tune(&mut settings);
                let cont = Continuation::new(seed.params, mesh, settings)?;
                let branch = cont.run(&seed.state)?;
                info!(
                    "seed branch {} in {via}: {} points, {} folds",
                    seed.label,
                    branch.points.len(),
                    branch.folds.len()
                );
                let params = seed.params.with(*via, *target);
                for (shifted, _, state) in branch_crossings(&branch, &cont, *target) {
                    let theta = unshift(*via, &state, shifted, *target);
                    if out
                        .iter()
                        .any(|s| max_diff(&s.state.theta, &theta) < SAME_STATE_TOL)
                    {
                        continue;
                    }
                    let guess = EquilibriumState::from_theta(theta, &params)?;
                    let n = out.len() + 1;
                    let resolved = finish(
                        params,
                        guess,
                        format!("{}>{via}={target:.6}#{n}", seed.label),
                    )?;
                    if index.map_or(true, |k| resolved.index == k) {
                        out.push(resolved);
                    }
                }
            }
            if let Some(limit) = limit {
                out.truncate(*limit);
            }
            if out.is_empty() {
                return Err(CliError::Seed(format!(
                    "no crossing of {via} = {target} found{}",
                    index
                        .map(|k| format!(" with index {k}"))
                        .unwrap_or_default()
                )));
            }
            Ok(out)
        }
    }
}

/// Buckled equilibrium at the context parameters.
///
/// With `α = ψ = 0` above the first critical load the perturbed state is
/// solved just above that load, where a small amplitude is accurate, and
/// carried to the requested load by continuation in `P`. Otherwise the
/// perturbed state is handed to Newton directly.
fn buckled(
    ctx: &ElasticaParams,
    mesh: Mesh,
    cfg: &ScenarioConfig,
    amplitude: f64,
) -> Result<EquilibriumState, CliError> {
    let perturbed = |p: &ElasticaParams| {
        let theta = mesh
            .coordinates()
            .iter()
            .map(|s| p.theta0 + amplitude * (PI * s / 2.0).sin())
            .collect();
        EquilibriumState::from_theta(theta, p)
    };
    let p_cr = critical_loads(ctx.epsilon, 1)?.roots[0];
    let symmetric = ctx.alpha == 0.0 && ctx.psi == 0.0;
    if !(symmetric && ctx.load > p_cr) {
        return Ok(perturbed(ctx)?);
    }
    // θ(1)² ≈ 8(P/P_cr − 1) near the cantilever pitchfork.
    let mut eta = amplitude * amplitude / 8.0;
    for _ in 0..8 {
        let load = (p_cr * (1.0 + eta)).min(ctx.load);
        let params = ctx.with(OrdinateKind::LoadP, load);
        if let Ok((state, _)) = newton_solve(&perturbed(&params)?, &params, &cfg.newton()) {
            if (state.theta1() - params.theta0).abs() > 0.1 * amplitude.abs() {
                if load == ctx.load {
                    return Ok(state);
                }
                let mut settings = ContinuationSettings::new(OrdinateKind::LoadP, [load, ctx.load]);
                cfg.tune(&mut settings);
                let branch = Continuation::new(params, mesh, settings)?.run(&state)?;
                let last = branch.points.last().expect("branch has a start point");
                if (last.xi - ctx.load).abs() > 1e-12 {
                    return Err(CliError::Seed(format!(
                        "load ramp from {load} stopped at P = {} ({:?})",
                        last.xi, branch.termination
                    )));
                }
                return Ok(last.state.clone());
            }
        }
        eta *= 4.0;
    }
    Err(CliError::Seed(
        "perturbed state fell back to the straight one".into(),
    ))
}
