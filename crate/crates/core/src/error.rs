use thiserror::Error;

use crate::bvp::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("mesh needs at least 3 nodes, got {0}")]
    MeshTooSmall(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("unknown ordinate kind `{0}`")]
    UnknownKind(String),

    #[error(
        "Newton iteration did not converge after {} iterations (residual {:.3e})",
        .0.iterations,
        .0.final_residual
    )]
    NonConvergence(Box<SolveReport>),

    #[error("singular Jacobian: pivot ratio {pivot_ratio:.3e}")]
    SingularJacobian { pivot_ratio: f64 },

    #[error("continuation step fell below ds_min = {ds_min:e} at tau = {tau:.6}, xi = {xi:.6}")]
    StepTooSmall { ds_min: f64, tau: f64, xi: f64 },

    #[error("unresolved singularity near xi = {xi:.8} (tau = {tau:.6}): {reason}")]
    UnresolvedSingularity { tau: f64, xi: f64, reason: String },

    #[error("degenerate fold: ordinate slope or fold curvature vanishes")]
    Degenerate,

    #[error("load P = {load} lies within 1e-9 of the critical load {root}")]
    AtBifurcation { load: f64, root: f64 },

    #[error("eigensolver did not converge for a {dim}x{dim} matrix (max |entry| {scale:.3e})")]
    EigenNonConvergence { dim: usize, scale: f64 },

    #[error(
        "fold at xi = {xi_star:.8}: sign rule predicts index {predicted}, eigenvalues give {oracle}"
    )]
    FoldClassificationMismatch {
        xi_star: f64,
        predicted: usize,
        oracle: usize,
    },
}
