//! Equilibria, pseudo-arclength continuation and stability of a planar
//! elastica clamped at one end and loaded at the other through a rigid
//! lever arm.
//!
//! The rod is described by its tangent angle `θ(s)` on `s ∈ [0, 1]`. Five
//! nondimensional parameters enter the problem: the load magnitude `P`, the
//! load direction `α`, the arm length `ε`, the arm angle `ψ` and the clamp
//! rotation `θ₀`. The crate provides
//!
//! * [`model`]: energy, discrete Euler–Lagrange residuals, centerline
//!   reconstruction and the distinguished-diagram ordinates,
//! * [`bvp`]: damped Newton for equilibria at fixed parameters,
//! * [`continuation`]: pseudo-arclength branch following with fold
//!   detection, refinement and sign-rule classification,
//! * [`stability`]: the discretized second-variation operator, its spectrum
//!   and the eigenvalue cross-check of every classified fold,
//! * [`buckling`]: analytic critical loads of the straight state.

pub mod buckling;
pub mod bvp;
pub mod continuation;
mod error;
pub mod linalg;
pub mod model;
pub mod stability;

pub use buckling::{critical_loads, straight_branch_index, CriticalLoadTable};
pub use bvp::{assemble_system, newton_solve, NewtonSettings, SolveReport};
pub use continuation::{
    classify_fold, Branch, BranchPoint, Continuation, ContinuationSettings, FoldRecord,
    Singularity, SingularityKind, Termination,
};
pub use error::{Error, Result};
pub use model::{ElasticaParams, EquilibriumState, Mesh, OrdinateKind};
pub use stability::{
    assemble_operator, compute_spectrum, validate_fold, FoldValidation, SecondVariationOperator,
    SpectrumReport, Verdict,
};
