//! Pseudo-arclength continuation in one parameter with fold detection,
//! refinement and sign-rule classification.
//!
//! Branch points carry the unit tangent `(θ̇, ξ̇)` in the norm
//! `⟨θ̇, θ̇⟩_h + ξ̇²`. A fold is a sign change of `ξ̇` at which the
//! determinant of the bordered Jacobian keeps its sign; if that determinant
//! changes sign instead, the branch crossed a bifurcation.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::bvp::{solve_shape, NewtonSettings, SolveReport};
use crate::linalg::{bordered_solve, max_norm};
use crate::model::{ordinate, ElasticaParams, EquilibriumState, Frame, Mesh, OrdinateKind, Shape};
use crate::stability::{inspect_fold, morse_index, FoldValidation};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSettings {
    pub param_kind: OrdinateKind,
    /// `[ξ_start, ξ_end]`; the branch starts moving towards `ξ_end` and stops
    /// once it leaves the interval.
    pub range: [f64; 2],
    pub ds_init: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_steps: usize,
    pub corrector: NewtonSettings,
    /// Target for `|ξ̇|` at a refined fold.
    pub fold_tol: f64,
}

impl ContinuationSettings {
    pub fn new(param_kind: OrdinateKind, range: [f64; 2]) -> Self {
        Self {
            param_kind,
            range,
            ds_init: 0.01,
            ds_min: 1e-5,
            ds_max: 0.05,
            max_steps: 20000,
            corrector: NewtonSettings {
                tol_residual: 1e-10,
                max_iters: 10,
                damping_min: 1.0,
            },
            fold_tol: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ds_min > 0.0 && self.ds_min <= self.ds_init && self.ds_init <= self.ds_max) {
            return Err(Error::InvalidSettings(
                "need 0 < ds_min <= ds_init <= ds_max".into(),
            ));
        }
        if !(self.range[0].is_finite() && self.range[1].is_finite()) {
            return Err(Error::InvalidSettings("range must be finite".into()));
        }
        if self.range[0] == self.range[1] {
            return Err(Error::InvalidSettings("range must not be empty".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidSettings(
                "max_steps must be at least 1".into(),
            ));
        }
        if !(self.fold_tol > 0.0) {
            return Err(Error::InvalidSettings("fold_tol must be positive".into()));
        }
        self.corrector.validate()
    }

    fn direction(&self) -> f64 {
        (self.range[1] - self.range[0]).signum()
    }

    fn bounds(&self) -> (f64, f64) {
        (
            self.range[0].min(self.range[1]),
            self.range[0].max(self.range[1]),
        )
    }
}

/// One converged equilibrium on a branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub tau: f64,
    pub xi: f64,
    pub state: EquilibriumState,
    /// Unit tangent: nodal `θ̇` followed by `ξ̇`.
    pub tangent: Vec<f64>,
    pub xi_dot: f64,
    pub ordinate: f64,
    /// Morse index from the eigenvalue count.
    pub index: usize,
    pub mu_min: f64,
    /// Eigenvalue closest to zero.
    pub mu_nearest_zero: f64,
    pub tol_eig: f64,
    /// Sign of the determinant of the equilibrium Jacobian (0 if singular).
    pub det_sign: f64,
    #[serde(skip)]
    shape: Option<Shape>,
}

impl BranchPoint {
    pub fn theta_dot(&self) -> &[f64] {
        &self.tangent[..self.tangent.len() - 1]
    }

    fn is_clear(&self) -> bool {
        self.mu_nearest_zero.abs() > 10.0 * self.tol_eig
    }
}

/// Equilibrium on one side of a fold used for the eigenvalue check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSide {
    /// Position of the point on its branch.
    pub point: usize,
    pub tau: f64,
    pub xi: f64,
    pub state: EquilibriumState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub tau_star: f64,
    pub xi_star: f64,
    pub xi_ddot_sign: i32,
    /// Sign of the ordinate's derivative along the branch (0 if degenerate).
    pub ordinate_slope_sign: i32,
    pub ordinate_slope: f64,
    /// Predicted direction of the critical eigenvalue; `None` when the
    /// sign rule does not apply.
    pub mu_dot_sign: Option<i32>,
    pub index_before: Option<usize>,
    pub index_after: Option<usize>,
    /// Refined fold equilibrium and its tangent.
    pub state: EquilibriumState,
    pub theta_dot: Vec<f64>,
    pub xi_dot: f64,
    pub ordinate: f64,
    /// Consecutive branch points bracketing the fold.
    pub point_before: usize,
    pub point_after: usize,
    pub before: FoldSide,
    pub after: FoldSide,
    pub validation: Option<FoldValidation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularityKind {
    /// Bordered determinant changed sign while `ξ̇` did not.
    BranchPoint,
    /// `ξ̇` changed sign but the point could not be treated as a simple fold.
    Unresolved,
    /// The index changed between points with no fold or bifurcation nearby.
    MissedIndexChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Singularity {
    pub kind: SingularityKind,
    pub tau: f64,
    pub xi: f64,
    /// Branch point preceding the singularity.
    pub point_before: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    LeftRange,
    ClosedLoop,
    MaxSteps,
    StepTooSmall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub kind: OrdinateKind,
    /// Parameters with the swept entry at its starting value.
    pub base_params: ElasticaParams,
    pub mesh: Mesh,
    pub settings: ContinuationSettings,
    pub points: Vec<BranchPoint>,
    pub folds: Vec<FoldRecord>,
    pub singularities: Vec<Singularity>,
    pub termination: Termination,
    pub diagnostics: Vec<String>,
}

impl Branch {
    pub fn params_at(&self, xi: f64) -> ElasticaParams {
        self.base_params.with(self.kind, xi)
    }
}

/// Converged equilibrium with tangent, in the clamp frame.
#[derive(Debug, Clone)]
struct Node {
    shape: Shape,
    xi: f64,
    t_theta: Vec<f64>,
    t_xi: f64,
    det_sign: f64,
}

/// Pseudo-arclength continuation driver for one parameter.
#[derive(Debug, Clone)]
pub struct Continuation {
    params: ElasticaParams,
    mesh: Mesh,
    settings: ContinuationSettings,
}

impl Continuation {
    pub fn new(params: ElasticaParams, mesh: Mesh, settings: ContinuationSettings) -> Result<Self> {
        params.validate()?;
        settings.validate()?;
        Ok(Self {
            params,
            mesh,
            settings,
        })
    }

    pub fn kind(&self) -> OrdinateKind {
        self.settings.param_kind
    }

    pub fn settings(&self) -> &ContinuationSettings {
        &self.settings
    }

    pub fn params_at(&self, xi: f64) -> ElasticaParams {
        self.params.with(self.kind(), xi)
    }

    fn frame_at(&self, xi: f64) -> Frame {
        Frame::new(self.mesh, &self.params_at(xi))
    }

    /// `θ = u + c ξ`: the clamp rotation shifts every node.
    fn shift(&self) -> f64 {
        if self.kind().is_fixed_end() {
            1.0
        } else {
            0.0
        }
    }

    fn weighted_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mesh.inner(a, b)
    }

    /// Equilibrium at fixed `ξ` by Newton from `guess`.
    pub fn solve_at(&self, xi: f64, guess: &EquilibriumState) -> Result<EquilibriumState> {
        let params = self.params_at(xi);
        let shape = self.polish(xi, Shape::from_theta(&guess.theta, params.theta0))?;
        EquilibriumState::from_shape(&shape, &params)
    }

    fn polish(&self, xi: f64, shape: Shape) -> Result<Shape> {
        let settings = NewtonSettings {
            max_iters: 50,
            damping_min: 1.0 / 64.0,
            ..self.settings.corrector
        };
        let (shape, report) = solve_shape(&self.frame_at(xi), shape, &settings)?;
        if !report.converged {
            return Err(Error::NonConvergence(Box::new(report)));
        }
        Ok(shape)
    }

    fn border(&self, node: &Node) -> (Vec<f64>, f64) {
        let r_u: Vec<f64> = (0..node.t_theta.len())
            .map(|i| self.mesh.weight(i) * node.t_theta[i])
            .collect();
        let r_xi = node.t_xi + self.shift() * r_u.iter().sum::<f64>();
        (r_u, r_xi)
    }

    /// Unit tangent at a converged point. With a bordering row the tangent
    /// is oriented along the previous one; without it `ξ̇` points towards
    /// the end of the range.
    fn tangent_at(
        &self,
        shape: &Shape,
        xi: f64,
        border: Option<&(Vec<f64>, f64)>,
    ) -> Result<(Vec<f64>, f64, f64)> {
        let frame = self.frame_at(xi);
        let jac = frame.jacobian(&shape.u);
        let j_xi = frame.param_column(&shape.u, self.kind());
        let lu = jac.factor();
        let det_sign = match &lu {
            Ok(lu) => lu.det_sign(),
            Err(Error::SingularJacobian { .. }) => 0.0,
            Err(e) => return Err(e.clone()),
        };
        let (du, dxi) = match border {
            Some((r_u, r_xi)) => {
                let zeros = vec![0.0; jac.dim()];
                bordered_solve(&jac, &j_xi, r_u, *r_xi, &zeros, 1.0)?
            }
            None => {
                let lu = lu?;
                let rhs: Vec<f64> = j_xi.iter().map(|v| -v).collect();
                (lu.solve(&rhs), 1.0)
            }
        };
        let c = self.shift();
        let mut t_theta: Vec<f64> = du.iter().map(|v| v + c * dxi).collect();
        t_theta[0] = c * dxi;
        let norm = (self.weighted_dot(&t_theta, &t_theta) + dxi * dxi).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NonFinite("tangent"));
        }
        let mut sign = 1.0 / norm;
        if border.is_none() && dxi * self.settings.direction() < 0.0 {
            sign = -sign;
        }
        for v in &mut t_theta {
            *v *= sign;
        }
        Ok((t_theta, dxi * sign, det_sign))
    }

    fn node_of(&self, p: &BranchPoint) -> Node {
        let n = p.tangent.len() - 1;
        let shape = p
            .shape
            .clone()
            .unwrap_or_else(|| Shape::from_theta(&p.state.theta, self.params_at(p.xi).theta0));
        Node {
            shape,
            xi: p.xi,
            t_theta: p.tangent[..n].to_vec(),
            t_xi: p.tangent[n],
            det_sign: p.det_sign,
        }
    }

    fn make_point(&self, node: &Node, tau: f64) -> Result<BranchPoint> {
        let params = self.params_at(node.xi);
        let state = EquilibriumState::from_shape(&node.shape, &params)?;
        let spec = morse_index(&state, &params)?;
        let mut tangent = node.t_theta.clone();
        tangent.push(node.t_xi);
        Ok(BranchPoint {
            tau,
            xi: node.xi,
            ordinate: ordinate(&state, &params, self.kind()),
            state,
            tangent,
            xi_dot: node.t_xi,
            index: spec.index,
            mu_min: spec.mu_min,
            mu_nearest_zero: spec.nearest_zero().1,
            tol_eig: spec.tol_eig,
            det_sign: node.det_sign,
            shape: Some(node.shape.clone()),
        })
    }

    fn initial_node(&self, seed: &EquilibriumState) -> Result<Node> {
        let xi = self.params.get(self.kind());
        let shape = self.polish(xi, Shape::from_theta(&seed.theta, self.params.theta0))?;
        let (t_theta, t_xi, det_sign) = self.tangent_at(&shape, xi, None)?;
        Ok(Node {
            shape,
            xi,
            t_theta,
            t_xi,
            det_sign,
        })
    }

    /// Converged starting point of a branch.
    pub fn start(&self, seed: &EquilibriumState) -> Result<BranchPoint> {
        let node = self.initial_node(seed)?;
        self.make_point(&node, 0.0)
    }

    /// Euler predictor and bordered Newton corrector over a step `sigma`.
    fn advance(&self, from: &Node, sigma: f64) -> Result<(Node, usize)> {
        let c = self.shift();
        let du_pred: Vec<f64> = from.t_theta.iter().map(|t| t - c * from.t_xi).collect();
        let mut shape = from.shape.updated(&du_pred, sigma);
        let mut xi = from.xi + sigma * from.t_xi;
        let border = self.border(from);
        let tol = self.settings.corrector.tol_residual;
        let max_iters = self.settings.corrector.max_iters;
        let mut history = Vec::new();
        let mut iterations = 0;
        loop {
            let frame = self.frame_at(xi);
            let residual = frame.residual(&shape);
            let dxi = xi - from.xi;
            let g = (0..shape.len())
                .map(|i| {
                    self.mesh.weight(i)
                        * ((shape.u[i] - from.shape.u[i]) + c * dxi)
                        * from.t_theta[i]
                })
                .sum::<f64>()
                + dxi * from.t_xi
                - sigma;
            let res_norm = max_norm(&residual);
            history.push(res_norm.max(g.abs()));
            if !(res_norm.is_finite() && g.is_finite()) {
                break;
            }
            if res_norm <= tol && g.abs() <= tol {
                let (t_theta, t_xi, det_sign) = self.tangent_at(&shape, xi, Some(&border))?;
                return Ok((
                    Node {
                        shape,
                        xi,
                        t_theta,
                        t_xi,
                        det_sign,
                    },
                    iterations,
                ));
            }
            if iterations >= max_iters {
                break;
            }
            iterations += 1;
            let jac = frame.jacobian(&shape.u);
            let j_xi = frame.param_column(&shape.u, self.kind());
            let rhs: Vec<f64> = residual.iter().map(|v| -v).collect();
            let (dx, dy) = bordered_solve(&jac, &j_xi, &border.0, border.1, &rhs, -g)?;
            shape.update(&dx, 1.0);
            xi += dy;
        }
        let final_residual = history.last().copied().unwrap_or(f64::NAN);
        Err(Error::NonConvergence(Box::new(SolveReport {
            converged: false,
            iterations,
            final_residual,
            residual_history: history,
        })))
    }

    /// One predictor-corrector step of length `ds` from `current`.
    pub fn predictor_corrector_step(&self, current: &BranchPoint, ds: f64) -> Result<BranchPoint> {
        if ds.abs() < self.settings.ds_min {
            return Err(Error::StepTooSmall {
                ds_min: self.settings.ds_min,
                tau: current.tau,
                xi: current.xi,
            });
        }
        let (node, _) = self.advance(&self.node_of(current), ds)?;
        self.make_point(&node, current.tau + ds)
    }

    fn acceptable(&self, from: &Node, to: &Node, sigma: f64) -> bool {
        let turn = self.weighted_dot(&from.t_theta, &to.t_theta) + from.t_xi * to.t_xi;
        let c = self.shift();
        let dxi = to.xi - from.xi;
        let diff: Vec<f64> = (0..to.shape.len())
            .map(|i| to.shape.u[i] - from.shape.u[i] + c * dxi)
            .collect();
        let dist = (self.weighted_dot(&diff, &diff) + dxi * dxi).sqrt();
        let small = sigma <= 4.0 * self.settings.ds_min;
        (turn >= 0.9 || small) && dist <= 2.0 * sigma
    }

    fn distance(&self, a: &Node, b: &Node) -> f64 {
        let c = self.shift();
        let dxi = b.xi - a.xi;
        let diff: Vec<f64> = (0..a.shape.len())
            .map(|i| b.shape.u[i] - a.shape.u[i] + c * dxi)
            .collect();
        (self.weighted_dot(&diff, &diff) + dxi * dxi).sqrt()
    }

    /// Refines a fold between `prev` and `next` (consecutive points of one
    /// branch). Returns `None` when `ξ̇` keeps its sign.
    pub fn detect_and_refine_fold(
        &self,
        prev: &BranchPoint,
        next: &BranchPoint,
    ) -> Result<Option<FoldRecord>> {
        if same_sign(prev.xi_dot, next.xi_dot) {
            return Ok(None);
        }
        let a = self.node_of(prev);
        let b = self.node_of(next);
        if bordered_det_flips(&a, &b) {
            return Err(Error::UnresolvedSingularity {
                tau: prev.tau,
                xi: prev.xi,
                reason: "parameter tangent and bordered determinant change sign together".into(),
            });
        }
        let sigma = next.tau - prev.tau;
        self.refine_fold(prev, &a, next, &b, sigma, 0).map(Some)
    }

    fn refine_fold(
        &self,
        prev: &BranchPoint,
        a: &Node,
        next: &BranchPoint,
        b: &Node,
        sigma: f64,
        prev_index: usize,
    ) -> Result<FoldRecord> {
        let unresolved = |reason: String| Error::UnresolvedSingularity {
            tau: prev.tau,
            xi: prev.xi,
            reason,
        };
        let tol = self.settings.fold_tol;
        let (mut lo, mut hi) = (0.0, sigma);
        let (mut f_lo, mut f_hi) = (a.t_xi, b.t_xi);
        let mut side = 0;
        let mut found = None;
        for _ in 0..100 {
            let mut s = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            if !(s > lo && s < hi) {
                s = 0.5 * (lo + hi);
            }
            let node = match self.advance(a, s) {
                Ok((node, _)) => node,
                Err(_) => {
                    let mid = 0.5 * (lo + hi);
                    match self.advance(a, mid) {
                        Ok((node, _)) => {
                            s = mid;
                            node
                        }
                        Err(e) => return Err(unresolved(format!("corrector failed: {e}"))),
                    }
                }
            };
            let f = node.t_xi;
            if f.abs() < tol {
                found = Some((node, s));
                break;
            }
            if same_sign(f, f_hi) {
                hi = s;
                f_hi = f;
                if side == -1 {
                    f_lo *= 0.5;
                }
                side = -1;
            } else {
                lo = s;
                f_lo = f;
                if side == 1 {
                    f_hi *= 0.5;
                }
                side = 1;
            }
            if hi - lo < 1e-15 * sigma.max(1.0) {
                break;
            }
        }
        let (fold, s_star) = found
            .ok_or_else(|| unresolved("xi_dot could not be reduced below tolerance".into()))?;

        let delta = 1e-3_f64.min(0.5 * sigma.max(self.settings.ds_min));
        let (left, _) = self
            .advance(&fold, -delta)
            .map_err(|e| unresolved(format!("slope probe failed: {e}")))?;
        let (right, _) = self
            .advance(&fold, delta)
            .map_err(|e| unresolved(format!("slope probe failed: {e}")))?;
        let ord = |node: &Node| -> Result<f64> {
            let params = self.params_at(node.xi);
            let state = EquilibriumState::from_shape(&node.shape, &params)?;
            Ok(ordinate(&state, &params, self.kind()))
        };
        let slope = (ord(&right)? - ord(&left)?) / (2.0 * delta);
        let ordinate_slope_sign = if slope.abs() < 1e-10 {
            0
        } else {
            slope.signum() as i32
        };
        let xi_ddot_sign = sign_i32(next.xi_dot - prev.xi_dot);

        let params = self.params_at(fold.xi);
        let state = EquilibriumState::from_shape(&fold.shape, &params)?;
        let ordinate = ordinate(&state, &params, self.kind());
        Ok(FoldRecord {
            tau_star: prev.tau + s_star,
            xi_star: fold.xi,
            xi_ddot_sign,
            ordinate_slope_sign,
            ordinate_slope: slope,
            mu_dot_sign: None,
            index_before: None,
            index_after: None,
            state,
            theta_dot: fold.t_theta.clone(),
            xi_dot: fold.t_xi,
            ordinate,
            point_before: prev_index,
            point_after: prev_index + 1,
            before: FoldSide {
                point: prev_index,
                tau: prev.tau,
                xi: prev.xi,
                state: prev.state.clone(),
            },
            after: FoldSide {
                point: prev_index + 1,
                tau: next.tau,
                xi: next.xi,
                state: next.state.clone(),
            },
            validation: None,
        })
    }

    /// Point where the step from `from` crosses `xi = boundary`.
    fn boundary_node(
        &self,
        from: &Node,
        to: &Node,
        sigma: f64,
        boundary: f64,
    ) -> Result<(Node, f64)> {
        let (mut lo, mut hi) = (0.0, sigma);
        let (mut f_lo, mut f_hi) = (from.xi - boundary, to.xi - boundary);
        let mut best = None;
        for _ in 0..60 {
            let mut s = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            if !(s > lo && s < hi) {
                s = 0.5 * (lo + hi);
            }
            let (node, _) = self.advance(from, s)?;
            let f = node.xi - boundary;
            best = Some((node, s));
            if f.abs() < 1e-9 {
                break;
            }
            if same_sign(f, f_hi) {
                hi = s;
                f_hi = f;
                f_lo *= 0.5;
            } else {
                lo = s;
                f_lo = f;
                f_hi *= 0.5;
            }
        }
        let (node, s) = best.ok_or(Error::NonFinite("boundary search"))?;
        let shape = self.polish(boundary, node.shape)?;
        let border = self.border(from);
        let (t_theta, t_xi, det_sign) = self.tangent_at(&shape, boundary, Some(&border))?;
        Ok((
            Node {
                shape,
                xi: boundary,
                t_theta,
                t_xi,
                det_sign,
            },
            s,
        ))
    }

    /// Follows the branch through `seed` (an equilibrium at the base
    /// parameters) until it leaves the range or a stopping rule fires.
    pub fn run(&self, seed: &EquilibriumState) -> Result<Branch> {
        let settings = &self.settings;
        let (lo, hi) = settings.bounds();
        let xi0 = self.params.get(self.kind());
        if xi0 < lo - 1e-12 || xi0 > hi + 1e-12 {
            return Err(Error::InvalidSettings(format!(
                "starting value {xi0} lies outside the range [{lo}, {hi}]"
            )));
        }
        let node0 = self.initial_node(seed)?;
        let mut points = vec![self.make_point(&node0, 0.0)?];
        let mut folds = Vec::new();
        let mut singularities = Vec::new();
        let mut diagnostics = Vec::new();
        let mut cur = node0.clone();
        let mut tau = 0.0;
        let mut ds = settings.ds_init;
        let mut easy = 0;
        let mut termination = Termination::MaxSteps;

        let mut steps = 0;
        while steps < settings.max_steps {
            steps += 1;
            let attempt = self.advance(&cur, ds);
            let (next, iters) = match attempt {
                Ok((next, iters)) if self.acceptable(&cur, &next, ds) => (next, iters),
                other => {
                    if let Err(e) = other {
                        debug!("step {ds:e} rejected at xi = {}: {e}", cur.xi);
                    }
                    ds *= 0.5;
                    easy = 0;
                    if ds < settings.ds_min {
                        let msg = format!(
                            "step size fell below ds_min = {:e} at tau = {tau}, xi = {}",
                            settings.ds_min, cur.xi
                        );
                        warn!("{msg}");
                        diagnostics.push(msg);
                        termination = Termination::StepTooSmall;
                        break;
                    }
                    continue;
                }
            };

            if next.xi < lo || next.xi > hi {
                let boundary = if next.xi < lo { lo } else { hi };
                match self.boundary_node(&cur, &next, ds, boundary) {
                    Ok((bnode, s)) => points.push(self.make_point(&bnode, tau + s)?),
                    Err(e) => {
                        diagnostics.push(format!("could not place end point on {boundary}: {e}"))
                    }
                }
                termination = Termination::LeftRange;
                break;
            }

            let prev_index = points.len() - 1;
            let next_point = self.make_point(&next, tau + ds)?;
            self.analyze_step(
                &points[prev_index],
                &cur,
                &next_point,
                &next,
                ds,
                prev_index,
                &mut folds,
                &mut singularities,
            );
            tau += ds;
            points.push(next_point);
            cur = next;

            if tau > 20.0 * settings.ds_max
                && self.distance(&cur, &node0) < ds
                && self.weighted_dot(&cur.t_theta, &node0.t_theta) + cur.t_xi * node0.t_xi > 0.0
            {
                termination = Termination::ClosedLoop;
                break;
            }

            if iters <= 3 {
                easy += 1;
                if easy >= 4 {
                    ds = (2.0 * ds).min(settings.ds_max);
                    easy = 0;
                }
            } else {
                easy = 0;
            }
        }

        let mut branch = Branch {
            kind: self.kind(),
            base_params: self.params,
            mesh: self.mesh,
            settings: self.settings.clone(),
            points,
            folds,
            singularities,
            termination,
            diagnostics,
        };
        finalize(&mut branch);
        Ok(branch)
    }

    #[allow(clippy::too_many_arguments)]
    fn analyze_step(
        &self,
        prev: &BranchPoint,
        a: &Node,
        next: &BranchPoint,
        b: &Node,
        sigma: f64,
        prev_index: usize,
        folds: &mut Vec<FoldRecord>,
        singularities: &mut Vec<Singularity>,
    ) {
        let xi_flip = !same_sign(a.t_xi, b.t_xi);
        let det_flip = bordered_det_flips(a, b);
        let record = |kind, reason: String| Singularity {
            kind,
            tau: prev.tau,
            xi: prev.xi,
            point_before: prev_index,
            reason,
        };
        match (xi_flip, det_flip) {
            (true, false) => match self.refine_fold(prev, a, next, b, sigma, prev_index) {
                Ok(fold) => folds.push(fold),
                Err(e) => singularities.push(record(SingularityKind::Unresolved, e.to_string())),
            },
            (true, true) => singularities.push(record(
                SingularityKind::Unresolved,
                "parameter tangent and bordered determinant change sign together".into(),
            )),
            (false, true) => singularities.push(record(
                SingularityKind::BranchPoint,
                "bordered determinant changes sign".into(),
            )),
            (false, false) => {}
        }
    }
}

fn same_sign(a: f64, b: f64) -> bool {
    (a >= 0.0) == (b >= 0.0)
}

fn sign_i32(v: f64) -> i32 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn bordered_det_flips(a: &Node, b: &Node) -> bool {
    if a.det_sign == 0.0 || b.det_sign == 0.0 {
        return false;
    }
    let da = a.det_sign * if a.t_xi >= 0.0 { 1.0 } else { -1.0 };
    let db = b.det_sign * if b.t_xi >= 0.0 { 1.0 } else { -1.0 };
    da != db
}

/// Applies the distinguished-diagram sign rule to a refined fold.
///
/// For the clamp rotation `μ̇ ∝ ξ̈ · d(ordinate)/dτ`; for the tip parameters
/// `μ̇ ∝ −ξ̈ · d(ordinate)/dτ`. A critical eigenvalue moving up removes one
/// negative eigenvalue.
pub fn classify_fold(
    mut record: FoldRecord,
    kind: OrdinateKind,
    index_before: usize,
) -> Result<FoldRecord> {
    if record.xi_ddot_sign == 0 || record.ordinate_slope_sign == 0 {
        return Err(Error::Degenerate);
    }
    let product = record.xi_ddot_sign * record.ordinate_slope_sign;
    let mu_dot_sign = if kind.is_fixed_end() {
        product
    } else {
        -product
    };
    record.mu_dot_sign = Some(mu_dot_sign);
    record.index_before = Some(index_before);
    record.index_after = Some((index_before as i64 - mu_dot_sign as i64).max(0) as usize);
    Ok(record)
}

/// Picks oracle sides, classifies and validates every fold, and flags
/// index changes that no fold or bifurcation explains.
fn finalize(branch: &mut Branch) {
    let n_folds = branch.folds.len();
    for k in 0..n_folds {
        let lower = if k == 0 {
            0
        } else {
            branch.folds[k - 1].point_after
        };
        let upper = if k + 1 < n_folds {
            branch.folds[k + 1].point_before
        } else {
            branch.points.len() - 1
        };
        let pb = branch.folds[k].point_before;
        let pa = branch.folds[k].point_after;
        let before = pick_side(&branch.points, (lower..=pb).rev());
        let after = pick_side(&branch.points, pa..=upper.max(pa));
        let side = |i: usize| FoldSide {
            point: i,
            tau: branch.points[i].tau,
            xi: branch.points[i].xi,
            state: branch.points[i].state.clone(),
        };
        let mut fold = branch.folds[k].clone();
        fold.before = side(before);
        fold.after = side(after);
        let ib = branch.points[before].index;
        fold = match classify_fold(fold.clone(), branch.kind, ib) {
            Ok(f) => f,
            Err(_) => {
                fold.index_before = Some(ib);
                fold.index_after = Some(branch.points[after].index);
                fold
            }
        };
        fold.validation = match inspect_fold(branch, &fold) {
            Ok(v) => Some(v),
            Err(e) => {
                branch
                    .diagnostics
                    .push(format!("fold at xi = {}: oracle failed: {e}", fold.xi_star));
                None
            }
        };
        branch.folds[k] = fold;
    }

    let near = |i: usize, p: usize| p + 2 >= i && p <= i + 1;
    let mut missed = Vec::new();
    for i in 1..branch.points.len() {
        if branch.points[i].index == branch.points[i - 1].index {
            continue;
        }
        let explained = branch.folds.iter().any(|f| near(i, f.point_before))
            || branch.singularities.iter().any(|s| near(i, s.point_before));
        if !explained {
            missed.push(Singularity {
                kind: SingularityKind::MissedIndexChange,
                tau: branch.points[i - 1].tau,
                xi: branch.points[i - 1].xi,
                point_before: i - 1,
                reason: format!(
                    "index changes from {} to {}",
                    branch.points[i - 1].index,
                    branch.points[i].index
                ),
            });
        }
    }
    branch.singularities.extend(missed);
    branch.singularities.sort_by(|a, b| a.tau.total_cmp(&b.tau));
}

fn pick_side(points: &[BranchPoint], candidates: impl Iterator<Item = usize>) -> usize {
    let mut best: Option<usize> = None;
    for i in candidates {
        if points[i].is_clear() {
            return i;
        }
        let better = match best {
            None => true,
            Some(j) => {
                points[i].mu_nearest_zero.abs() / points[i].tol_eig
                    > points[j].mu_nearest_zero.abs() / points[j].tol_eig
            }
        };
        if better {
            best = Some(i);
        }
    }
    best.unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(xi_ddot_sign: i32, ordinate_slope_sign: i32) -> FoldRecord {
        let mesh = Mesh::new(5).unwrap();
        let params = ElasticaParams::new(1.0, 0.0, 0.0, 0.0, 0.0);
        let state = EquilibriumState::straight(mesh, &params);
        let side = FoldSide {
            point: 0,
            tau: 0.0,
            xi: 0.0,
            state: state.clone(),
        };
        FoldRecord {
            tau_star: 0.0,
            xi_star: 0.0,
            xi_ddot_sign,
            ordinate_slope_sign,
            ordinate_slope: ordinate_slope_sign as f64,
            mu_dot_sign: None,
            index_before: None,
            index_after: None,
            state,
            theta_dot: vec![0.0; 5],
            xi_dot: 0.0,
            ordinate: 0.0,
            point_before: 0,
            point_after: 1,
            before: side.clone(),
            after: side,
            validation: None,
        }
    }

    #[test]
    fn free_end_rising_ordinate_gains_an_unstable_direction() {
        let r = classify_fold(record(1, 1), OrdinateKind::Psi, 0).unwrap();
        assert_eq!(r.mu_dot_sign, Some(-1));
        assert_eq!((r.index_before, r.index_after), (Some(0), Some(1)));
        let r = classify_fold(record(-1, 1), OrdinateKind::Alpha, 1).unwrap();
        assert_eq!(r.index_after, Some(0));
    }

    #[test]
    fn fixed_end_rising_ordinate_loses_an_unstable_direction() {
        let r = classify_fold(record(1, 1), OrdinateKind::Theta0, 1).unwrap();
        assert_eq!(r.mu_dot_sign, Some(1));
        assert_eq!(r.index_after, Some(0));
    }

    #[test]
    fn zero_slope_defers_to_the_oracle() {
        assert!(matches!(
            classify_fold(record(1, 0), OrdinateKind::Psi, 0),
            Err(Error::Degenerate)
        ));
        assert!(matches!(
            classify_fold(record(0, 1), OrdinateKind::Psi, 0),
            Err(Error::Degenerate)
        ));
    }
}
