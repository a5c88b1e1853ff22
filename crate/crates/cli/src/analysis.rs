//! Cross-branch diagnostics: snap targets at folds, coexisting equilibria
//! and 2π-periodicity of angle sweeps.

use std::f64::consts::TAU;

use elastica_core::continuation::Branch;
use elastica_core::stability::morse_index;
use elastica_core::{Continuation, EquilibriumState, FoldRecord, OrdinateKind};
use log::debug;
use serde::{Deserialize, Serialize};

use crate::seed::{max_diff, targets_between, unshift, SAME_STATE_TOL};

/// Targets closer than this to the fold state are the fold itself.
const FOLD_SELF_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapStatus {
    Resolved,
    /// No stable equilibrium exists at the fold's parameter value.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapTarget {
    /// 0-based branch position within the scenario.
    pub branch: usize,
    /// Segment `[segment, segment + 1]` of that branch holding the target.
    pub segment: usize,
    /// Parameter value on the target branch; equals the fold's modulo 2π
    /// for angle sweeps.
    pub xi: f64,
    pub ordinate: f64,
    pub theta1: f64,
    pub mu_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapPair {
    pub branch: usize,
    pub fold: usize,
    pub xi_star: f64,
    pub from_ordinate: f64,
    pub from_theta1: f64,
    /// Index of the family that ends at the fold.
    pub stable_side: String,
    pub targets: Vec<SnapTarget>,
    pub status: SnapStatus,
}

fn continuation_of(branch: &Branch) -> Option<Continuation> {
    Continuation::new(branch.base_params, branch.mesh, branch.settings.clone()).ok()
}

/// Branches swept in the same parameter from the same fixed parameters.
pub fn same_family(a: &Branch, b: &Branch) -> bool {
    a.kind == b.kind
        && OrdinateKind::ALL
            .iter()
            .filter(|k| **k != a.kind)
            .all(|k| a.base_params.get(*k) == b.base_params.get(*k))
}

fn interpolate(a: &EquilibriumState, b: &EquilibriumState, t: f64) -> EquilibriumState {
    EquilibriumState {
        theta: a
            .theta
            .iter()
            .zip(&b.theta)
            .map(|(x, y)| x + t * (y - x))
            .collect(),
        ..a.clone()
    }
}

/// Every equilibrium at `ξ = target` (mod 2π for angles) on the branches
/// of the same family as `branches[0]`, polished by Newton. With
/// `stable_only` only index-0 segments are searched. Returns `(branch, segment, shifted ξ, state)`.
fn equilibria_at(
    branches: &[&Branch],
    conts: &[Option<Continuation>],
    target: f64,
    stable_only: bool,
) -> Vec<(usize, usize, f64, EquilibriumState)> {
    let mut out = Vec::new();
    for (b, branch) in branches.iter().enumerate() {
        let Some(cont) = &conts[b] else { continue };
        let angle = branch.kind.is_angle();
        if !same_family(branch, branches[0]) {
            continue;
        }
        for (i, w) in branch.points.windows(2).enumerate() {
            let (p, q) = (&w[0], &w[1]);
            if p.xi == q.xi || (stable_only && (p.index != 0 || q.index != 0)) {
                continue;
            }
            for xi in targets_between(p.xi, q.xi, target, angle) {
                let t = (xi - p.xi) / (q.xi - p.xi);
                match cont.solve_at(xi, &interpolate(&p.state, &q.state, t)) {
                    Ok(state) => out.push((b, i, xi, state)),
                    Err(e) => debug!("no equilibrium polished at xi = {xi}: {e}"),
                }
            }
        }
    }
    out
}

fn fold_ends_stable(f: &FoldRecord) -> Option<&'static str> {
    match (f.index_before, f.index_after) {
        (Some(0), _) => Some("before"),
        (_, Some(0)) => Some("after"),
        _ => None,
    }
}

/// Candidate snap transitions. For each fold bounding an index-0 family,
/// the other index-0 equilibria at the fold's parameter value across all
/// `branches`.
pub fn snap_pairs(branches: &[&Branch]) -> Vec<SnapPair> {
    let conts: Vec<_> = branches.iter().map(|b| continuation_of(b)).collect();
    let mut pairs = Vec::new();
    for (b, branch) in branches.iter().enumerate() {
        let kind = branch.kind;
        // The fold's own branch goes first so that it defines the family.
        let mut family_index: Vec<usize> = vec![b];
        family_index.extend((0..branches.len()).filter(|&j| j != b));
        let family: Vec<&Branch> = family_index.iter().map(|&j| branches[j]).collect();
        let fam_conts: Vec<Option<Continuation>> =
            family_index.iter().map(|&j| conts[j].clone()).collect();
        for (k, fold) in branch.folds.iter().enumerate() {
            let Some(stable_side) = fold_ends_stable(fold) else {
                continue;
            };
            let mut targets: Vec<(SnapTarget, Vec<f64>)> = Vec::new();
            for (tb, seg, xi, state) in equilibria_at(&family, &fam_conts, fold.xi_star, true) {
                let tb = family_index[tb];
                let theta = unshift(kind, &state, xi, fold.xi_star);
                if max_diff(&theta, &fold.state.theta) < FOLD_SELF_TOL {
                    continue;
                }
                if targets
                    .iter()
                    .any(|(_, t)| max_diff(t, &theta) < SAME_STATE_TOL)
                {
                    continue;
                }
                let params = branches[tb].params_at(xi);
                let Ok(spec) = morse_index(&state, &params) else {
                    continue;
                };
                if spec.index != 0 || !spec.is_clear(10.0) {
                    continue;
                }
                targets.push((
                    SnapTarget {
                        branch: tb,
                        segment: seg,
                        xi,
                        ordinate: elastica_core::model::ordinate(&state, &params, kind),
                        theta1: state.theta1(),
                        mu_min: spec.mu_min,
                    },
                    theta,
                ));
            }
            let status = if targets.is_empty() {
                SnapStatus::Unresolved
            } else {
                SnapStatus::Resolved
            };
            pairs.push(SnapPair {
                branch: b,
                fold: k,
                xi_star: fold.xi_star,
                from_ordinate: fold.ordinate,
                from_theta1: fold.state.theta1(),
                stable_side: stable_side.to_string(),
                targets: targets.into_iter().map(|(t, _)| t).collect(),
                status,
            });
        }
    }
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coexistence {
    /// Sampled parameter values.
    pub xi: Vec<f64>,
    /// Distinct equilibria found at each value, over all branches.
    pub counts: Vec<usize>,
    /// Stable ones among them.
    pub stable_counts: Vec<usize>,
    pub max_count: usize,
    pub xi_at_max: f64,
}

/// Counts distinct equilibria over the branches of the family of the first
/// branch on a grid of `samples`
/// values spanning one period for angle sweeps, or the common range
/// otherwise.
pub fn coexisting_equilibria(branches: &[&Branch], samples: usize) -> Option<Coexistence> {
    let first = branches.first()?;
    let kind: OrdinateKind = first.kind;
    let start = first.settings.range[0];
    let (lo, hi) = if kind.is_angle() {
        (start, start + TAU)
    } else {
        let r = first.settings.range;
        (r[0].min(r[1]), r[0].max(r[1]))
    };
    let conts: Vec<_> = branches.iter().map(|b| continuation_of(b)).collect();
    let n = samples.max(2);
    let mut xs = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(n);
    let mut stable = Vec::with_capacity(n);
    for j in 0..n {
        // Half-open period for angles so the end point is not counted twice.
        let t = if kind.is_angle() {
            j as f64 / n as f64
        } else {
            j as f64 / (n - 1) as f64
        };
        let xi = lo + t * (hi - lo);
        let mut found: Vec<Vec<f64>> = Vec::new();
        let mut n_stable = 0;
        for (b, _, shifted, state) in equilibria_at(branches, &conts, xi, false) {
            let theta = unshift(kind, &state, shifted, xi);
            if found.iter().any(|t| max_diff(t, &theta) < SAME_STATE_TOL) {
                continue;
            }
            if let Ok(spec) = morse_index(&state, &branches[b].params_at(shifted)) {
                if spec.index == 0 {
                    n_stable += 1;
                }
            }
            found.push(theta);
        }
        xs.push(xi);
        counts.push(found.len());
        stable.push(n_stable);
    }
    let (arg, &max_count) = counts.iter().enumerate().max_by_key(|(_, c)| **c)?;
    Some(Coexistence {
        xi_at_max: xs[arg],
        xi: xs,
        counts,
        stable_counts: stable,
        max_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodicity {
    /// Points whose state was compared with a solution 2π away.
    pub checked: usize,
    /// Points whose translate the computed part of the branch never comes
    /// near, or whose partner did not polish.
    pub skipped: usize,
    /// Largest max-norm gap between a checked point's translate and the
    /// chord guess it was matched with.
    pub max_guess_gap: f64,
    /// Largest over checked points of the smallest max-norm distance.
    pub max_diff: f64,
    pub worst_xi: f64,
}

impl Periodicity {
    pub fn passes(&self, tol: f64) -> bool {
        self.checked > 0 && self.max_diff <= tol
    }
}

/// Chord guesses farther than this from a point's translate belong to a
/// different equilibrium: the computed arc does not reach the translate.
/// Distinct equilibria at one parameter value differ by O(1) away from
/// folds, while chords between accepted points are within a step length.
pub const PARTNER_REACH: f64 = 0.5;

/// Compares branch states at `ξ` with the branch's own solutions at
/// `ξ ± 2π`. Points within two steps of a fold or singularity are not
/// checked since Newton is ill-conditioned there. A point counts as
/// skipped when the computed arc never passes within [`PARTNER_REACH`] of
/// its translate (the translate lies beyond the computed ends, or the
/// branch is not a closed loop modulo 2π) or the polish fails. At most
/// `max_checks` points are used, evenly spread.
pub fn periodicity_check(branch: &Branch, max_checks: usize) -> Option<Periodicity> {
    let kind = branch.kind;
    if !kind.is_angle() || branch.points.len() < 2 {
        return None;
    }
    let cont = continuation_of(branch)?;
    let mut near = vec![false; branch.points.len()];
    let mut mark = |i: usize| {
        for j in i.saturating_sub(2)..=(i + 2).min(near.len() - 1) {
            near[j] = true;
        }
    };
    for f in &branch.folds {
        mark(f.point_before);
        mark(f.point_after);
    }
    for s in &branch.singularities {
        mark(s.point_before);
    }
    let candidates: Vec<usize> = (0..branch.points.len()).filter(|&i| !near[i]).collect();
    let stride = (candidates.len() / max_checks.max(1)).max(1);
    let mut checked = 0;
    let mut skipped = 0;
    let mut worst = (0.0f64, f64::NAN);
    let mut max_gap = 0.0f64;
    for &i in candidates.iter().step_by(stride) {
        let p = &branch.points[i];
        // The partner is the crossing whose chord guess is closest; near a
        // fold of the translated branch the other crossings are a different
        // equilibrium at the same parameter.
        let mut partner: Option<(f64, f64, EquilibriumState)> = None;
        for shift in [TAU, -TAU] {
            let target = p.xi + shift;
            for w in branch.points.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                if a.xi == b.xi || !((a.xi - target) * (b.xi - target) <= 0.0) {
                    continue;
                }
                let t = (target - a.xi) / (b.xi - a.xi);
                let guess = interpolate(&a.state, &b.state, t);
                let d = max_diff(&unshift(kind, &guess, target, p.xi), &p.state.theta);
                if partner.as_ref().map_or(true, |(best, _, _)| d < *best) {
                    partner = Some((d, target, guess));
                }
            }
        }
        let mut best = f64::INFINITY;
        if let Some((gap, target, guess)) = partner.filter(|(gap, _, _)| *gap <= PARTNER_REACH) {
            if let Ok(state) = cont.solve_at(target, &guess) {
                best = max_diff(&unshift(kind, &state, target, p.xi), &p.state.theta);
                max_gap = max_gap.max(gap);
            }
        }
        if best.is_finite() {
            checked += 1;
            if best > worst.0 || worst.1.is_nan() {
                worst = (best.max(worst.0), p.xi);
            }
        } else {
            skipped += 1;
        }
    }
    Some(Periodicity {
        checked,
        skipped,
        max_guess_gap: max_gap,
        max_diff: worst.0,
        worst_xi: worst.1,
    })
}
