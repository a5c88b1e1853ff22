//! End-to-end scenario runs.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use elastica_core::continuation::Branch;
use elastica_core::{Continuation, Mesh, Termination, Verdict};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    coexisting_equilibria, periodicity_check, snap_pairs, Coexistence, Periodicity, SnapPair,
};
use crate::artifact::BranchArtifact;
use crate::config::ScenarioConfig;
use crate::export::{write_csv, write_folds_csv, write_manifest};
use crate::seed::{resolve, ResolvedSeed, StoredSeed};
use crate::svg::{render_svg, SvgStyle};
use crate::CliError;

/// Points compared per branch in the periodicity check.
const PERIODICITY_CHECKS: usize = 120;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    pub branch: usize,
    pub seed_label: String,
    pub seed_index: usize,
    pub points: usize,
    pub folds: usize,
    pub verdicts: Vec<Verdict>,
    pub singularities: usize,
    pub termination: Termination,
    pub min_index: usize,
    pub max_index: usize,
    /// Largest moment-balance residual along the branch.
    pub max_first_integral: f64,
    pub periodicity: Option<Periodicity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub stem: String,
    pub branches: Vec<BranchSummary>,
    pub snap_pairs: Vec<SnapPair>,
    pub coexistence: Option<Coexistence>,
    /// Folds whose verdict is not `pass`.
    pub failed_folds: usize,
    /// Branches that stopped on a too-small step.
    pub aborted_branches: usize,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub seeds: Vec<ResolvedSeed>,
    pub branches: Vec<Branch>,
    pub artifacts: Vec<BranchArtifact>,
    pub summary: ScenarioSummary,
}

impl ScenarioRun {
    /// Error to report once all artifacts are written: a fold whose
    /// verdict is not `pass` takes precedence over aborted branches.
    pub fn outcome(&self) -> Result<(), CliError> {
        let s = &self.summary;
        if s.failed_folds > 0 {
            return Err(CliError::Mismatch(format!(
                "{} of {} folds did not pass",
                s.failed_folds,
                s.branches.iter().map(|b| b.folds).sum::<usize>()
            )));
        }
        if s.aborted_branches > 0 {
            return Err(CliError::Seed(format!(
                "{} branch(es) stopped on a too-small step",
                s.aborted_branches
            )));
        }
        Ok(())
    }
}

/// Resolves the seeds, follows one branch per seed (in parallel) and
/// computes the cross-branch diagnostics. Writes nothing.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun, CliError> {
    config.validate()?;
    let mesh = Mesh::new(config.mesh)?;
    let ctx = config.base_params();
    let kind = config.sweep_kind();
    let start = config.sweep_start();

    let resolved: Vec<Vec<ResolvedSeed>> = config
        .seeds
        .par_iter()
        .enumerate()
        .map(|(k, spec)| resolve(spec, &ctx, config, &format!("{}:", k + 1)))
        .collect::<Result<_, _>>()?;
    let seeds: Vec<ResolvedSeed> = resolved.into_iter().flatten().collect();
    for s in &seeds {
        if (s.params.get(kind) - start).abs() > 1e-12 {
            return Err(CliError::Config(format!(
                "seed {} has {kind} = {}, but the sweep starts at {start}",
                s.label,
                s.params.get(kind)
            )));
        }
    }
    info!("{}: {} seed(s)", config.stem(), seeds.len());

    let settings = config.continuation();
    let branches: Vec<Branch> = seeds
        .par_iter()
        .map(|s| {
            let cont = Continuation::new(s.params, mesh, settings.clone())?;
            Ok(cont.run(&s.state)?)
        })
        .collect::<Result<_, CliError>>()?;

    let artifacts: Vec<BranchArtifact> = branches
        .par_iter()
        .zip(&seeds)
        .enumerate()
        .map(|(k, (b, s))| BranchArtifact::from_branch(b, config, k + 1, s))
        .collect();

    let refs: Vec<&Branch> = branches.iter().collect();
    let pairs = snap_pairs(&refs);
    let coexistence = coexisting_equilibria(&refs, config.coexistence_samples);
    let periodicity: Vec<Option<Periodicity>> = branches
        .par_iter()
        .map(|b| {
            if config.periodicity {
                periodicity_check(b, PERIODICITY_CHECKS)
            } else {
                None
            }
        })
        .collect();

    let mut failed_folds = 0;
    let mut aborted = 0;
    let mut summaries = Vec::new();
    for (k, ((a, s), per)) in artifacts.iter().zip(&seeds).zip(periodicity).enumerate() {
        let verdicts: Vec<Verdict> = a
            .folds
            .iter()
            .map(|f| f.validation.as_ref().map_or(Verdict::Fail, |v| v.verdict))
            .collect();
        failed_folds += verdicts.iter().filter(|v| **v != Verdict::Pass).count();
        if a.termination == Termination::StepTooSmall {
            aborted += 1;
            warn!("branch {} stopped on a too-small step", k + 1);
        }
        summaries.push(BranchSummary {
            branch: k + 1,
            seed_label: s.label.clone(),
            seed_index: s.index,
            points: a.points.len(),
            folds: a.folds.len(),
            verdicts,
            singularities: a.singularities.len(),
            termination: a.termination,
            min_index: a.points.iter().map(|p| p.index).min().unwrap_or(0),
            max_index: a.points.iter().map(|p| p.index).max().unwrap_or(0),
            max_first_integral: a
                .points
                .iter()
                .map(|p| p.first_integral.abs())
                .fold(0.0, f64::max),
            periodicity: per,
        });
    }
    let summary = ScenarioSummary {
        scenario: config.scenario.name().to_string(),
        stem: config.stem(),
        branches: summaries,
        snap_pairs: pairs,
        coexistence,
        failed_folds,
        aborted_branches: aborted,
    };
    Ok(ScenarioRun {
        config: config.clone(),
        seeds,
        branches,
        artifacts,
        summary,
    })
}

/// Writes every artifact of `run` below `dir` and returns the paths.
///
/// Per branch `k`: `<stem>_<k>.csv`, `<stem>_<k>_folds.csv`,
/// `<stem>_<k>.json`, `<stem>_<k>_end.json` (last point as a reusable
/// seed) and `<stem>_<k>.svg`. Per scenario: `<stem>.svg` and
/// `<stem>_summary.json`.
pub fn write_outputs(run: &ScenarioRun, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let stem = run.config.stem();
    let mut written = Vec::new();
    let mut create = |name: String| -> Result<(PathBuf, BufWriter<fs::File>), CliError> {
        let path = dir.join(name);
        let file = BufWriter::new(fs::File::create(&path)?);
        written.push(path.clone());
        Ok((path, file))
    };
    for (a, b) in run.artifacts.iter().zip(&run.branches) {
        let k = a.metadata.branch;
        let (_, f) = create(format!("{stem}_{k}.csv"))?;
        write_csv(a, f)?;
        let (_, f) = create(format!("{stem}_{k}_folds.csv"))?;
        write_folds_csv(a, f)?;
        let (path, _) = create(format!("{stem}_{k}.json"))?;
        write_manifest(a, &path)?;
        if let Some(last) = b.points.last() {
            let (_, f) = create(format!("{stem}_{k}_end.json"))?;
            let stored = StoredSeed {
                params: b.params_at(last.xi),
                state: last.state.clone(),
            };
            serde_json::to_writer_pretty(f, &stored)?;
        }
        if run.config.svg && a.points.len() >= 2 {
            let style = SvgStyle {
                title: Some(format!("{stem} branch {k}")),
                ..SvgStyle::default()
            };
            let (path, _) = create(format!("{stem}_{k}.svg"))?;
            fs::write(&path, render_svg(&[a], &style))?;
        }
    }
    if run.config.svg && !run.artifacts.is_empty() {
        let refs: Vec<&BranchArtifact> = run.artifacts.iter().collect();
        let style = SvgStyle {
            title: Some(stem.clone()),
            ..SvgStyle::default()
        };
        let (path, _) = create(format!("{stem}.svg"))?;
        fs::write(&path, render_svg(&refs, &style))?;
    }
    let (_, f) = create(format!("{stem}_summary.json"))?;
    serde_json::to_writer_pretty(f, &run.summary)?;
    Ok(written)
}
