//! Reduced scalar model of the lever-arm elastica.
//!
//! The internal force is constant along the rod and equal to the dead load
//! `F = (−P cos α, −P sin α)`, so the multipliers carried by the full
//! formulation drop out and the equilibrium problem becomes a scalar
//! boundary-value problem for `θ(s)`:
//!
//! ```text
//! −θ″ − P sin(θ + α) = 0,   θ(0) = θ₀,   θ′(1) − εP sin(θ(1) − ψ + α) = 0.
//! ```
//!
//! The discrete model uses a uniform mesh, central second differences in
//! the interior and trapezoidal quadrature. End slopes use one-sided
//! second-order stencils in which the `O(h)` truncation term is replaced by
//! the equilibrium equation. With that choice the discrete equations are
//! exactly the stationarity conditions of the discrete energy, so the
//! Newton Jacobian and the second-variation operator share one spectrum.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::Tridiagonal;
use crate::{Error, Result};

/// The five nondimensional parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticaParams {
    /// Load magnitude `‖F‖l²/K`. Negative values reverse the load.
    #[serde(rename = "P")]
    pub load: f64,
    /// Load direction (rad). At `α = 0` the load points along `−x`.
    pub alpha: f64,
    /// Arm length over rod length. Negative values flip the arm.
    pub epsilon: f64,
    /// Arm angle relative to the tip tangent (rad).
    pub psi: f64,
    /// Clamp rotation (rad).
    pub theta0: f64,
}

impl ElasticaParams {
    pub fn new(load: f64, alpha: f64, epsilon: f64, psi: f64, theta0: f64) -> Self {
        Self {
            load,
            alpha,
            epsilon,
            psi,
            theta0,
        }
    }

    pub fn get(&self, kind: OrdinateKind) -> f64 {
        match kind {
            OrdinateKind::Psi => self.psi,
            OrdinateKind::Epsilon => self.epsilon,
            OrdinateKind::Alpha => self.alpha,
            OrdinateKind::LoadP => self.load,
            OrdinateKind::Theta0 => self.theta0,
        }
    }

    pub fn set(&mut self, kind: OrdinateKind, value: f64) {
        match kind {
            OrdinateKind::Psi => self.psi = value,
            OrdinateKind::Epsilon => self.epsilon = value,
            OrdinateKind::Alpha => self.alpha = value,
            OrdinateKind::LoadP => self.load = value,
            OrdinateKind::Theta0 => self.theta0 = value,
        }
    }

    pub fn with(mut self, kind: OrdinateKind, value: f64) -> Self {
        self.set(kind, value);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.load, self.alpha, self.epsilon, self.psi, self.theta0];
        if all.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("parameters"))
        }
    }

    /// Load force `F = (−P cos α, −P sin α)`.
    pub fn force(&self) -> [f64; 2] {
        [-self.load * self.alpha.cos(), -self.load * self.alpha.sin()]
    }
}

/// Tag for the swept parameter and the matching distinguished-diagram
/// ordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrdinateKind {
    Psi,
    Epsilon,
    Alpha,
    #[serde(rename = "load")]
    LoadP,
    Theta0,
}

impl OrdinateKind {
    pub const ALL: [OrdinateKind; 5] = [
        OrdinateKind::Psi,
        OrdinateKind::Epsilon,
        OrdinateKind::Alpha,
        OrdinateKind::LoadP,
        OrdinateKind::Theta0,
    ];

    /// The clamp rotation is imposed through the Dirichlet condition; the
    /// other four parameters enter through the tip.
    pub fn is_fixed_end(self) -> bool {
        self == OrdinateKind::Theta0
    }

    /// Angles for which the model is 2π-periodic.
    pub fn is_angle(self) -> bool {
        matches!(
            self,
            OrdinateKind::Psi | OrdinateKind::Alpha | OrdinateKind::Theta0
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            OrdinateKind::Psi => "psi",
            OrdinateKind::Epsilon => "epsilon",
            OrdinateKind::Alpha => "alpha",
            OrdinateKind::LoadP => "load",
            OrdinateKind::Theta0 => "theta0",
        }
    }

    /// Human-readable label of the plotted ordinate.
    pub fn ordinate_label(self) -> &'static str {
        match self {
            OrdinateKind::Psi => "m(1) = θ′(1)",
            OrdinateKind::Epsilon => "B_ε (force along arm)",
            OrdinateKind::Alpha => "B_α",
            OrdinateKind::LoadP => "B_P (height of load point)",
            OrdinateKind::Theta0 => "m(0) = θ′(0)",
        }
    }
}

impl fmt::Display for OrdinateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrdinateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "psi" => Ok(OrdinateKind::Psi),
            "epsilon" | "eps" => Ok(OrdinateKind::Epsilon),
            "alpha" => Ok(OrdinateKind::Alpha),
            "load" | "p" => Ok(OrdinateKind::LoadP),
            "theta0" => Ok(OrdinateKind::Theta0),
            _ => Err(Error::UnknownKind(s.to_string())),
        }
    }
}

/// Uniform mesh on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mesh {
    n_nodes: usize,
}

impl Mesh {
    pub const DEFAULT_NODES: usize = 201;

    pub fn new(n_nodes: usize) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::MeshTooSmall(n_nodes));
        }
        Ok(Self { n_nodes })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n_nodes - 1) as f64
    }

    pub fn s(&self, i: usize) -> f64 {
        i as f64 / (self.n_nodes - 1) as f64
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.s(i)).collect()
    }

    /// Trapezoidal quadrature weights (they sum to one).
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.h();
        if i == 0 || i + 1 == self.n_nodes {
            0.5 * h
        } else {
            h
        }
    }

    /// Discrete inner product `⟨u, v⟩_h`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter()
            .zip(v)
            .enumerate()
            .map(|(i, (a, b))| self.weight(i) * a * b)
            .sum()
    }
}

/// A discrete configuration together with derived tip and energy data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumState {
    /// `θ` at the mesh nodes.
    pub theta: Vec<f64>,
    pub theta_prime_0: f64,
    pub theta_prime_1: f64,
    pub x1: f64,
    pub y1: f64,
    /// Discrete reduced energy including the arm term.
    pub energy: f64,
}

impl EquilibriumState {
    /// Builds a state from nodal angles, computing the derived quantities.
    pub fn from_theta(theta: Vec<f64>, params: &ElasticaParams) -> Result<Self> {
        let mesh = Mesh::new(theta.len())?;
        if !theta.iter().all(|t| t.is_finite()) {
            return Err(Error::NonFinite("theta"));
        }
        let frame = Frame::new(mesh, params);
        let shape = Shape::from_theta(&theta, params.theta0);
        let (theta_prime_0, theta_prime_1) = frame.end_slopes(&shape);
        let (x1, y1) = tip_position(&theta, mesh.h());
        let energy = frame.energy(&shape);
        Ok(Self {
            theta,
            theta_prime_0,
            theta_prime_1,
            x1,
            y1,
            energy,
        })
    }

    pub(crate) fn from_shape(shape: &Shape, params: &ElasticaParams) -> Result<Self> {
        let mesh = Mesh::new(shape.len())?;
        if !shape.is_finite() {
            return Err(Error::NonFinite("theta"));
        }
        let frame = Frame::new(mesh, params);
        let theta = shape.to_theta(params.theta0);
        let (theta_prime_0, theta_prime_1) = frame.end_slopes(shape);
        let (x1, y1) = tip_position(&theta, mesh.h());
        let energy = frame.energy(shape);
        Ok(Self {
            theta,
            theta_prime_0,
            theta_prime_1,
            x1,
            y1,
            energy,
        })
    }

    /// The straight configuration `θ ≡ θ₀`.
    pub fn straight(mesh: Mesh, params: &ElasticaParams) -> Self {
        Self::from_theta(vec![params.theta0; mesh.n_nodes()], params)
            .expect("mesh is valid and theta0 finite")
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::new(self.theta.len())
    }

    pub fn theta1(&self) -> f64 {
        *self.theta.last().expect("non-empty state")
    }
}

/// Energy density `½θ′² + P cos(θ + α)` of the reduced functional.
pub fn reduced_integrand(theta: f64, theta_prime: f64, params: &ElasticaParams) -> f64 {
    0.5 * theta_prime * theta_prime + params.load * (theta + params.alpha).cos()
}

/// Discrete Euler–Lagrange residual at interior nodes `1..n−1`.
pub fn el_residual_interior(state: &EquilibriumState, params: &ElasticaParams) -> Result<Vec<f64>> {
    let mesh = state.mesh()?;
    let frame = Frame::new(mesh, params);
    let shape = Shape::from_theta(&state.theta, params.theta0);
    Ok((1..mesh.n_nodes() - 1)
        .map(|i| frame.interior_residual(&shape, i))
        .collect())
}

/// Natural boundary condition at the tip, `θ′(1) − εP sin(θ(1) − ψ + α)`.
pub fn tip_boundary_residual(state: &EquilibriumState, params: &ElasticaParams) -> f64 {
    let chi = state.theta1() - params.psi + params.alpha;
    state.theta_prime_1 - params.epsilon * params.load * chi.sin()
}

/// Lever arm `Ψ(1) = ε (cos(θ(1) − ψ), −sin(θ(1) − ψ))` in the lab frame.
pub fn arm_vector(state: &EquilibriumState, params: &ElasticaParams) -> [f64; 2] {
    let chi = state.theta1() - params.psi;
    [params.epsilon * chi.cos(), -params.epsilon * chi.sin()]
}

/// Distinguished-diagram ordinate for the given swept parameter.
///
/// For the tip parameters this is `∂B/∂ξ` with `B = −F·(r(1) + Ψ(1))`; for
/// the clamp rotation it is the clamp moment `θ′(0)`.
pub fn ordinate(state: &EquilibriumState, params: &ElasticaParams, kind: OrdinateKind) -> f64 {
    let load = params.load;
    let (sa, ca) = params.alpha.sin_cos();
    let arm = arm_vector(state, params);
    let px = state.x1 + arm[0];
    let py = state.y1 + arm[1];
    match kind {
        OrdinateKind::Psi => state.theta_prime_1,
        OrdinateKind::Epsilon => load * (state.theta1() - params.psi + params.alpha).cos(),
        OrdinateKind::Alpha => -load * sa * px + load * ca * py,
        OrdinateKind::LoadP => ca * px + sa * py,
        OrdinateKind::Theta0 => state.theta_prime_0,
    }
}

/// `[r(1) × F]·e_z` for the dead load `F`.
pub fn tip_moment_of_load(state: &EquilibriumState, params: &ElasticaParams) -> f64 {
    let f = params.force();
    state.x1 * f[1] - state.y1 * f[0]
}

/// Moment balance between clamp and tip, `θ′(0) − θ′(1) + [r(1) × n(1)]·e_z`.
///
/// `θ′ − [r × n]·e_z` is constant along an equilibrium, so this vanishes on
/// converged states. The discrete stencils make it vanish to solver
/// precision rather than to `O(h²)`.
pub fn first_integral_residual(state: &EquilibriumState, params: &ElasticaParams) -> f64 {
    state.theta_prime_0 - state.theta_prime_1 + tip_moment_of_load(state, params)
}

/// Trapezoidal reconstruction of the centerline from `x′ = cos θ`,
/// `y′ = −sin θ`, starting at the origin.
pub fn reconstruct_centerline(state: &EquilibriumState) -> Vec<[f64; 2]> {
    let n = state.theta.len();
    if n == 0 {
        return Vec::new();
    }
    let h = 1.0 / (n.max(2) - 1) as f64;
    let mut out = Vec::with_capacity(n);
    let (mut x, mut y) = (0.0, 0.0);
    out.push([x, y]);
    for w in state.theta.windows(2) {
        x += 0.5 * h * (w[0].cos() + w[1].cos());
        y -= 0.5 * h * (w[0].sin() + w[1].sin());
        out.push([x, y]);
    }
    out
}

/// Discrete total energy of arbitrary nodal angles.
pub fn discrete_energy(theta: &[f64], params: &ElasticaParams) -> Result<f64> {
    let mesh = Mesh::new(theta.len())?;
    let frame = Frame::new(mesh, params);
    Ok(frame.energy(&Shape::from_theta(theta, params.theta0)))
}

fn tip_position(theta: &[f64], h: f64) -> (f64, f64) {
    let mut x = 0.0;
    let mut y = 0.0;
    for w in theta.windows(2) {
        x += 0.5 * h * (w[0].cos() + w[1].cos());
        y -= 0.5 * h * (w[0].sin() + w[1].sin());
    }
    (x, y)
}

/// Nodal angles relative to the clamp, `u = θ − θ₀`, stored together with
/// their increments `w_i = u_i − u_{i−1}`.
///
/// Newton updates are applied to the increments. Second differences are
/// then formed from quantities of size `O(h)`, so the discrete residual can
/// be driven far below `ulp(θ)/h²` even for strongly wound states.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Shape {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

impl Shape {
    /// The clamp value is taken from `theta0`; `theta[0]` only enters
    /// through the first increment.
    pub fn from_theta(theta: &[f64], theta0: f64) -> Self {
        let n = theta.len();
        let mut w = vec![0.0; n];
        for i in 1..n {
            w[i] = theta[i] - theta[i - 1];
        }
        if n > 1 {
            w[1] = theta[1] - theta0;
        }
        let mut shape = Self { u: vec![0.0; n], w };
        shape.rebuild();
        shape
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    /// `u ← u + scale·du`, applied through the increments.
    pub fn update(&mut self, du: &[f64], scale: f64) {
        for i in 1..self.w.len() {
            self.w[i] += scale * (du[i] - du[i - 1]);
        }
        self.rebuild();
    }

    pub fn updated(&self, du: &[f64], scale: f64) -> Self {
        let mut out = self.clone();
        out.update(du, scale);
        out
    }

    fn rebuild(&mut self) {
        self.u[0] = 0.0;
        for i in 1..self.u.len() {
            self.u[i] = self.u[i - 1] + self.w[i];
        }
    }

    pub fn to_theta(&self, theta0: f64) -> Vec<f64> {
        let mut theta: Vec<f64> = self.u.iter().map(|v| v + theta0).collect();
        theta[0] = theta0;
        theta
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|v| v.is_finite())
    }
}

/// Discrete equations in the clamp frame.
///
/// The unknowns are `u = θ − θ₀`, so `u[0] = 0` and the trigonometric terms
/// see the phase `θ₀ + α`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Frame {
    pub mesh: Mesh,
    pub h: f64,
    pub load: f64,
    pub phase: f64,
    pub epsilon: f64,
    pub psi: f64,
}

impl Frame {
    pub fn new(mesh: Mesh, params: &ElasticaParams) -> Self {
        Self {
            mesh,
            h: mesh.h(),
            load: params.load,
            phase: params.theta0 + params.alpha,
            epsilon: params.epsilon,
            psi: params.psi,
        }
    }

    pub fn n(&self) -> usize {
        self.mesh.n_nodes()
    }

    /// `θ(1) − ψ + α` expressed through the tip unknown.
    fn chi(&self, u_tip: f64) -> f64 {
        u_tip + self.phase - self.psi
    }

    pub fn interior_residual(&self, s: &Shape, i: usize) -> f64 {
        -(s.w[i + 1] - s.w[i]) / (self.h * self.h) - self.load * (s.u[i] + self.phase).sin()
    }

    /// One-sided slopes at both ends.
    pub fn end_slopes(&self, s: &Shape) -> (f64, f64) {
        let n = s.len();
        let h = self.h;
        let d0 = s.w[1] / h + 0.5 * h * self.load * (s.u[0] + self.phase).sin();
        let d1 = s.w[n - 1] / h - 0.5 * h * self.load * (s.u[n - 1] + self.phase).sin();
        (d0, d1)
    }

    pub fn tip_residual(&self, s: &Shape) -> f64 {
        let tip = s.u[s.len() - 1];
        let (_, d1) = self.end_slopes(s);
        d1 - self.epsilon * self.load * self.chi(tip).sin()
    }

    /// Residual stacked as `[Dirichlet; interior; tip]`.
    pub fn residual_into(&self, s: &Shape, out: &mut [f64]) {
        let n = self.n();
        out[0] = s.u[0];
        for i in 1..n - 1 {
            out[i] = self.interior_residual(s, i);
        }
        out[n - 1] = self.tip_residual(s);
    }

    pub fn residual(&self, s: &Shape) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.residual_into(s, &mut out);
        out
    }

    pub fn jacobian(&self, u: &[f64]) -> Tridiagonal {
        let n = self.n();
        let h = self.h;
        let inv_h2 = 1.0 / (h * h);
        let mut jac = Tridiagonal::zeros(n);
        jac.diag[0] = 1.0;
        for i in 1..n - 1 {
            jac.sub[i - 1] = -inv_h2;
            jac.diag[i] = 2.0 * inv_h2 - self.load * (u[i] + self.phase).cos();
            jac.sup[i] = -inv_h2;
        }
        let tip = u[n - 1];
        jac.sub[n - 2] = -1.0 / h;
        jac.diag[n - 1] = 1.0 / h
            - 0.5 * h * self.load * (tip + self.phase).cos()
            - self.epsilon * self.load * self.chi(tip).cos();
        jac
    }

    /// Derivative of the residual with respect to one parameter at fixed `u`.
    pub fn param_column(&self, u: &[f64], kind: OrdinateKind) -> Vec<f64> {
        let n = self.n();
        let h = self.h;
        let tip = u[n - 1];
        let chi = self.chi(tip);
        let mut col = vec![0.0; n];
        match kind {
            OrdinateKind::Psi => {
                col[n - 1] = self.epsilon * self.load * chi.cos();
            }
            OrdinateKind::Epsilon => {
                col[n - 1] = -self.load * chi.sin();
            }
            // In the clamp frame θ₀ enters only through the phase, like α.
            OrdinateKind::Alpha | OrdinateKind::Theta0 => {
                for i in 1..n - 1 {
                    col[i] = -self.load * (u[i] + self.phase).cos();
                }
                col[n - 1] = -0.5 * h * self.load * (tip + self.phase).cos()
                    - self.epsilon * self.load * chi.cos();
            }
            OrdinateKind::LoadP => {
                for i in 1..n - 1 {
                    col[i] = -(u[i] + self.phase).sin();
                }
                col[n - 1] = -0.5 * h * (tip + self.phase).sin() - self.epsilon * chi.sin();
            }
        }
        col
    }

    pub fn energy(&self, s: &Shape) -> f64 {
        let u = &s.u;
        let n = u.len();
        let h = self.h;
        let bending: f64 = s.w[1..].iter().map(|w| w * w).sum::<f64>() / (2.0 * h);
        let potential: f64 = (0..n)
            .map(|i| self.mesh.weight(i) * (u[i] + self.phase).cos())
            .sum::<f64>()
            * self.load;
        let arm = self.epsilon * self.load * self.chi(u[n - 1]).cos();
        bending + potential + arm
    }
}
