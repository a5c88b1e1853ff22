//! Scenario runner for the lever-arm elastica: seeds equilibria, follows
//! branches in one parameter, cross-checks every fold against the
//! eigenvalue count and writes CSV, JSON and SVG artifacts.

pub mod analysis;
pub mod artifact;
pub mod config;
pub mod export;
pub mod scenario;
pub mod seed;
pub mod svg;

pub use analysis::{coexisting_equilibria, periodicity_check, snap_pairs, SnapPair, SnapStatus};
pub use artifact::{BranchArtifact, PointRecord, ShapeSample};
pub use config::{Overrides, ScenarioConfig, ScenarioKind, SeedSpec};
pub use export::{parse_csv, write_csv, write_folds_csv, CsvRow};
pub use scenario::{run_scenario, ScenarioRun, ScenarioSummary};
pub use svg::{render_svg, SvgStyle};

use elastica_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("bad config: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(#[from] CoreError),
    #[error("{0}")]
    Seed(String),
    #[error("fold classification disagrees with the eigenvalue count: {0}")]
    Mismatch(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code: 2 solver failure, 3 fold mismatch, 4 bad config.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 4,
            CliError::Solver(e) => match e {
                CoreError::InvalidSettings(_)
                | CoreError::NonFinite(_)
                | CoreError::UnknownKind(_)
                | CoreError::MeshTooSmall(_)
                | CoreError::AtBifurcation { .. } => 4,
                CoreError::FoldClassificationMismatch { .. } => 3,
                _ => 2,
            },
            CliError::Seed(_) => 2,
            CliError::Mismatch(_) => 3,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}
