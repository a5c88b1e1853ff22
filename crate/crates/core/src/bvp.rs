//! Damped Newton iteration for equilibria at fixed parameters.

use serde::{Deserialize, Serialize};

use crate::linalg::{max_norm, Tridiagonal};
use crate::model::{ElasticaParams, EquilibriumState, Frame, Shape};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    /// Convergence threshold on the residual max-norm.
    pub tol_residual: f64,
    pub max_iters: usize,
    /// Smallest step fraction tried by the backtracking line search.
    pub damping_min: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol_residual: 1e-10,
            max_iters: 30,
            damping_min: 1.0 / 64.0,
        }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidSettings(
                "tol_residual must be positive".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidSettings(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.damping_min > 0.0 && self.damping_min <= 1.0) {
            return Err(Error::InvalidSettings(
                "damping_min must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    /// Residual max-norm before the first and after every iteration.
    pub residual_history: Vec<f64>,
}

/// Residual `[θ(0) − θ₀; interior; tip]` and its tridiagonal Jacobian.
pub fn assemble_system(
    state: &EquilibriumState,
    params: &ElasticaParams,
) -> Result<(Vec<f64>, Tridiagonal)> {
    let mesh = state.mesh()?;
    let frame = Frame::new(mesh, params);
    let shape = Shape::from_theta(&state.theta, params.theta0);
    let mut residual = frame.residual(&shape);
    residual[0] = state.theta[0] - params.theta0;
    Ok((residual, frame.jacobian(&shape.u)))
}

/// Solves the discrete equilibrium equations starting from `initial_guess`.
///
/// The Dirichlet value is taken from `params.theta0`; the first entry of the
/// guess is ignored.
pub fn newton_solve(
    initial_guess: &EquilibriumState,
    params: &ElasticaParams,
    settings: &NewtonSettings,
) -> Result<(EquilibriumState, SolveReport)> {
    settings.validate()?;
    params.validate()?;
    let mesh = initial_guess.mesh()?;
    if initial_guess.theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonConvergence(Box::new(SolveReport {
            converged: false,
            iterations: 0,
            final_residual: f64::NAN,
            residual_history: Vec::new(),
        })));
    }
    let frame = Frame::new(mesh, params);
    let mut theta = initial_guess.theta.clone();
    theta[0] = params.theta0;
    let shape = Shape::from_theta(&theta, params.theta0);
    let (shape, report) = solve_shape(&frame, shape, settings)?;
    if !report.converged {
        return Err(Error::NonConvergence(Box::new(report)));
    }
    Ok((EquilibriumState::from_shape(&shape, params)?, report))
}

/// Newton in the clamp frame. Returns the last iterate with a report; the
/// caller decides what non-convergence means.
pub(crate) fn solve_shape(
    frame: &Frame,
    mut shape: Shape,
    settings: &NewtonSettings,
) -> Result<(Shape, SolveReport)> {
    let mut residual = frame.residual(&shape);
    let mut norm = max_norm(&residual);
    let mut history = vec![norm];
    let mut iterations = 0;
    while norm.is_finite() && norm > settings.tol_residual && iterations < settings.max_iters {
        iterations += 1;
        let lu = frame.jacobian(&shape.u).factor()?;
        let mut step = residual.clone();
        lu.solve_in_place(&mut step);
        let mut lambda = 1.0;
        loop {
            let trial = shape.updated(&step, -lambda);
            let trial_res = frame.residual(&trial);
            let trial_norm = max_norm(&trial_res);
            if trial_norm < norm || lambda <= settings.damping_min {
                shape = trial;
                residual = trial_res;
                norm = trial_norm;
                break;
            }
            lambda *= 0.5;
        }
        history.push(norm);
    }
    let converged = norm <= settings.tol_residual;
    Ok((
        shape,
        SolveReport {
            converged,
            iterations,
            final_residual: norm,
            residual_history: history,
        },
    ))
}
