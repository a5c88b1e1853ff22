//! Serializable record of one continuation branch.

use std::f64::consts::TAU;

use elastica_core::continuation::Branch;
use elastica_core::model::{first_integral_residual, reconstruct_centerline};
use elastica_core::stability::morse_index;
use elastica_core::{
    ContinuationSettings, ElasticaParams, FoldRecord, Mesh, OrdinateKind, Singularity, Termination,
};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::seed::{branch_crossings, ResolvedSeed};

/// Number of centerline samples kept per labeled shape.
const SHAPE_SAMPLES: usize = 41;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub scenario: String,
    /// 1-based position of the branch within the scenario.
    pub branch: usize,
    pub seed_label: String,
    pub seed_index: usize,
    pub kind: OrdinateKind,
    pub base_params: ElasticaParams,
    pub mesh: Mesh,
    pub settings: ContinuationSettings,
    pub config: ScenarioConfig,
    pub version: String,
    pub created: String,
}

/// Scalar summary of a branch point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub tau: f64,
    pub xi: f64,
    /// `ξ` reduced to `[0, 2π)` for angle sweeps, `ξ` otherwise.
    pub xi_wrapped: f64,
    pub ordinate: f64,
    pub index: usize,
    pub theta0: f64,
    pub theta1: f64,
    pub theta_prime_0: f64,
    pub theta_prime_1: f64,
    pub x1: f64,
    pub y1: f64,
    pub energy: f64,
    pub mu_min: f64,
    pub xi_dot: f64,
    /// Moment-balance residual `θ′(0) − θ′(1) + [r(1) × F]_z`.
    pub first_integral: f64,
}

/// Equilibrium drawn at a requested parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSample {
    /// Requested value; for angles it matches `xi` modulo 2π.
    pub label: f64,
    pub xi: f64,
    /// Branch segment `[segment, segment + 1]` holding the sample.
    pub segment: usize,
    pub ordinate: f64,
    pub index: usize,
    pub centerline: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchArtifact {
    pub metadata: Metadata,
    pub points: Vec<PointRecord>,
    pub folds: Vec<FoldRecord>,
    pub singularities: Vec<Singularity>,
    pub termination: Termination,
    pub diagnostics: Vec<String>,
    pub shapes: Vec<ShapeSample>,
}

pub fn wrap(kind: OrdinateKind, xi: f64) -> f64 {
    if kind.is_angle() {
        xi.rem_euclid(TAU)
    } else {
        xi
    }
}

impl BranchArtifact {
    pub fn from_branch(
        branch: &Branch,
        cfg: &ScenarioConfig,
        number: usize,
        seed: &ResolvedSeed,
    ) -> Self {
        let kind = branch.kind;
        let points = branch
            .points
            .iter()
            .map(|p| {
                let params = branch.params_at(p.xi);
                let s = &p.state;
                PointRecord {
                    tau: p.tau,
                    xi: p.xi,
                    xi_wrapped: wrap(kind, p.xi),
                    ordinate: p.ordinate,
                    index: p.index,
                    theta0: s.theta[0],
                    theta1: s.theta1(),
                    theta_prime_0: s.theta_prime_0,
                    theta_prime_1: s.theta_prime_1,
                    x1: s.x1,
                    y1: s.y1,
                    energy: s.energy,
                    mu_min: p.mu_min,
                    xi_dot: p.xi_dot,
                    first_integral: first_integral_residual(s, &params),
                }
            })
            .collect();
        let mut diagnostics = branch.diagnostics.clone();
        let shapes = sample_shapes(branch, &cfg.labels, &mut diagnostics);
        Self {
            metadata: Metadata {
                scenario: cfg.scenario.name().to_string(),
                branch: number,
                seed_label: seed.label.clone(),
                seed_index: seed.index,
                kind,
                base_params: branch.base_params,
                mesh: branch.mesh,
                settings: branch.settings.clone(),
                config: cfg.clone(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                created: chrono::Utc::now().to_rfc3339(),
            },
            points,
            folds: branch.folds.clone(),
            singularities: branch.singularities.clone(),
            termination: branch.termination,
            diagnostics,
            shapes,
        }
    }

    pub fn kind(&self) -> OrdinateKind {
        self.metadata.kind
    }
}

fn sample_shapes(
    branch: &Branch,
    labels: &[f64],
    diagnostics: &mut Vec<String>,
) -> Vec<ShapeSample> {
    if labels.is_empty() || branch.points.len() < 2 {
        return Vec::new();
    }
    let cont = match elastica_core::Continuation::new(
        branch.base_params,
        branch.mesh,
        branch.settings.clone(),
    ) {
        Ok(c) => c,
        Err(e) => {
            diagnostics.push(format!("shape sampling skipped: {e}"));
            return Vec::new();
        }
    };
    let mut out = Vec::new();
    for &label in labels {
        for (xi, segment, state) in branch_crossings(branch, &cont, label) {
            let params = branch.params_at(xi);
            let index = match morse_index(&state, &params) {
                Ok(s) => s.index,
                Err(e) => {
                    diagnostics.push(format!("shape at {xi}: {e}"));
                    continue;
                }
            };
            let line = reconstruct_centerline(&state);
            let stride = ((line.len() - 1) / (SHAPE_SAMPLES - 1)).max(1);
            let mut centerline: Vec<[f64; 2]> = line.iter().step_by(stride).copied().collect();
            if centerline.last() != line.last() {
                centerline.push(*line.last().expect("non-empty centerline"));
            }
            out.push(ShapeSample {
                label,
                xi,
                segment,
                ordinate: elastica_core::model::ordinate(&state, &params, branch.kind),
                index,
                centerline,
            });
        }
    }
    out
}
