use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use elastica_cli::export::read_manifest;
use elastica_cli::scenario::write_outputs;
use elastica_cli::{run_scenario, CliError, Overrides, ScenarioConfig};
use elastica_core::stability::{inspect_fold_at, morse_index};
use elastica_core::{
    critical_loads, straight_branch_index, ElasticaParams, EquilibriumState, Mesh, Verdict,
};

#[derive(Parser)]
#[command(
    name = "elastica",
    version,
    about = "Branches, folds and stability of the lever-arm elastica"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write CSV, JSON and SVG artifacts.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mesh: Option<usize>,
        #[arg(long = "ds-init")]
        ds_init: Option<f64>,
        #[arg(long = "no-svg")]
        no_svg: bool,
    },
    /// Critical loads of the straight state.
    Criticals {
        #[arg(long, allow_hyphen_values = true)]
        epsilon: f64,
        #[arg(long = "k-max", default_value_t = 5)]
        k_max: usize,
    },
    /// Morse index of the straight state, analytic and from the spectrum.
    Index {
        #[arg(long = "p", allow_hyphen_values = true)]
        p: f64,
        #[arg(long, allow_hyphen_values = true)]
        epsilon: f64,
        #[arg(long, default_value_t = 201)]
        mesh: usize,
    },
    /// Re-run the eigenvalue check on every fold of a branch manifest.
    Validate { artifact: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run {
            config,
            out,
            mesh,
            ds_init,
            no_svg,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            cfg.apply(&Overrides {
                out,
                mesh,
                ds_init,
                no_svg,
            })?;
            let run = run_scenario(&cfg)?;
            let written = write_outputs(&run, &cfg.out)?;
            for b in &run.summary.branches {
                println!(
                    "branch {:>2} [{}]: {} points, {} folds, index {}..{}, {:?}",
                    b.branch,
                    b.seed_label,
                    b.points,
                    b.folds,
                    b.min_index,
                    b.max_index,
                    b.termination
                );
            }
            if let Some(c) = &run.summary.coexistence {
                println!(
                    "at most {} coexisting equilibria (at {} = {:.6})",
                    c.max_count,
                    cfg.sweep_kind(),
                    c.xi_at_max
                );
            }
            println!(
                "{} snap pair(s), {} file(s) written to {}",
                run.summary.snap_pairs.len(),
                written.len(),
                cfg.out.display()
            );
            run.outcome()
        }
        Command::Criticals { epsilon, k_max } => {
            let table = critical_loads(epsilon, k_max)?;
            println!("k,P");
            for (k, p) in table.roots.iter().enumerate() {
                println!("{},{:.16e}", k + 1, p);
            }
            Ok(())
        }
        Command::Index { p, epsilon, mesh } => {
            let analytic = straight_branch_index(p, epsilon)?;
            let params = ElasticaParams::new(p, 0.0, epsilon, 0.0, 0.0);
            let state = EquilibriumState::straight(Mesh::new(mesh)?, &params);
            let oracle = morse_index(&state, &params)?.index;
            println!("analytic {analytic}");
            println!("eigenvalues {oracle}");
            if analytic != oracle {
                return Err(CliError::Mismatch(format!(
                    "analytic index {analytic}, eigenvalue count {oracle}"
                )));
            }
            Ok(())
        }
        Command::Validate { artifact } => {
            let a = read_manifest(&artifact)?;
            let mut bad = 0;
            for (k, f) in a.folds.iter().enumerate() {
                let v = inspect_fold_at(a.metadata.kind, &a.metadata.base_params, f)?;
                let stored = f.validation.as_ref().map(|s| s.verdict);
                println!(
                    "fold {}: xi* = {:.10}, index {} -> {}, mu = {:.3e} (tol {:.3e}), {}{}",
                    k + 1,
                    f.xi_star,
                    v.oracle_index_before,
                    v.oracle_index_after,
                    v.mu_at_fold,
                    v.tol_eig,
                    v.verdict.as_str(),
                    match stored {
                        Some(s) if s != v.verdict => format!(" (stored {})", s.as_str()),
                        _ => String::new(),
                    }
                );
                if v.verdict != Verdict::Pass {
                    bad += 1;
                }
            }
            if bad > 0 {
                return Err(CliError::Mismatch(format!(
                    "{bad} of {} folds",
                    a.folds.len()
                )));
            }
            println!("{} fold(s) validated", a.folds.len());
            Ok(())
        }
    }
}
