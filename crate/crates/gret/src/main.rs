//! Command-line front end: registration, rigidity certification, instance
//! simulation, and noise sweeps over JSON/CSV files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gret::assembly::SystemMatrices;
use gret::generate::GeneratedInstance;
use gret::harness::{rmsd, run_sweep, sweep_rows_to_csv, GeneratorSpec, SweepConfig};
use gret::io;
use gret::model::validate_framework;
use gret::registration::RegistrationResult;
use gret::rigidity::{gret_rrt, Verdict};
use gret::sdp::{gret_sdp_with, refine_registration, SdpParams};
use gret::spectral::gret_spec_with;

#[derive(Parser)]
#[command(
    name = "gret",
    about = "Global registration of point clouds from overlapping rigid patches",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMethod {
    Spec,
    Sdp,
    Manopt,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliGenerator {
    Lateration,
    Clustered,
}

#[derive(Subcommand)]
enum Command {
    /// Register a patch framework and write the recovered coordinates.
    Register {
        /// Framework JSON file.
        #[arg(long)]
        input: PathBuf,
        /// Solution pipeline.
        #[arg(long, value_enum)]
        method: CliMethod,
        /// Refine the result by manifold descent.
        #[arg(long)]
        refine: bool,
        /// Result JSON file.
        #[arg(long)]
        output: PathBuf,
        /// Ground-truth configuration; adds an RMSD to the diagnostics.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Relative SDP stopping tolerance (absolute = one tenth of this).
        #[arg(long, value_name = "TOL")]
        sdp_tol: Option<f64>,
        /// SDP iteration cap.
        #[arg(long, value_name = "N")]
        sdp_max_iters: Option<usize>,
        /// Relative eigenvalue threshold for the rank decision.
        #[arg(long, value_name = "TOL")]
        rank_tol: Option<f64>,
        /// Directory for a CSV dump of the assembled L, B, D, C matrices.
        #[arg(long, value_name = "DIR")]
        dump_matrices: Option<PathBuf>,
    },
    /// Randomized exact-recovery certificate for a membership graph.
    RankTest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        trials: usize,
    },
    /// Generate a synthetic framework (and optionally its ground truth).
    Simulate {
        #[arg(long, value_enum)]
        generator: CliGenerator,
        /// Number of points.
        #[arg(long)]
        n: usize,
        /// Number of patches.
        #[arg(long)]
        m: usize,
        /// Ambient dimension.
        #[arg(long)]
        d: usize,
        /// Shared points per lateration step (lateration generator).
        #[arg(long)]
        overlap: Option<usize>,
        /// Foreign points added per cluster (clustered generator).
        #[arg(long)]
        augment: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Run a noise sweep described by a JSON config and write CSV rows.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; overrides the config's own output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> gret::Result<ExitCode> {
    match cli.command {
        Command::Register {
            input,
            method,
            refine,
            output,
            truth,
            sdp_tol,
            sdp_max_iters,
            rank_tol,
            dump_matrices,
        } => {
            let fw = io::load_framework_file(&input)?;
            let report = validate_framework(&fw);
            for w in &report.warnings {
                eprintln!("warning [{}]: {}", w.code, w.message);
            }
            for e in &report.errors {
                eprintln!("error [{}]: {}", e.code, e.message);
            }

            let mut params = SdpParams::default();
            if let Some(tol) = sdp_tol {
                params.rel_tol = tol;
                params.abs_tol = tol / 10.0;
            }
            if let Some(iters) = sdp_max_iters {
                params.max_iters = iters;
            }
            if let Some(tol) = rank_tol {
                params.rank_tol = tol;
            }

            let sys = SystemMatrices::assemble(&fw)?;
            if let Some(dir) = dump_matrices {
                dump_system(&dir, &sys)?;
            }

            let mut result: RegistrationResult = match method {
                CliMethod::Spec => gret_spec_with(&fw, &sys)?,
                CliMethod::Sdp => gret_sdp_with(&fw, &sys, &params)?,
                CliMethod::Manopt => {
                    let start = gret_spec_with(&fw, &sys)?;
                    refine_registration(&fw, &start, &Default::default())?
                }
            };
            if refine && !matches!(method, CliMethod::Manopt) {
                result = refine_registration(&fw, &result, &Default::default())?;
            }

            let rmsd_value = match truth {
                Some(path) => {
                    let truth = io::load_configuration_file(&path)?;
                    Some(rmsd(&result.coordinates, &truth)?)
                }
                None => None,
            };
            std::fs::write(
                &output,
                io::registration_to_json(&result, rmsd_value) + "\n",
            )?;

            println!(
                "method {} objective {:.6e} lower bound {:.6e} tight {}{}",
                result.diagnostics.method,
                result.objective,
                result.diagnostics.lower_bound,
                result.diagnostics.tight,
                rmsd_value
                    .map(|r| format!(" rmsd {r:.6e}"))
                    .unwrap_or_default()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::RankTest {
            input,
            seed,
            trials,
        } => {
            let fw = io::load_framework_file(&input)?;
            let cert = gret_rrt(&fw.membership_graph(), fw.dimension(), seed, trials)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&cert).expect("certificate serialization")
            );
            Ok(match cert.verdict {
                Verdict::Positive => ExitCode::SUCCESS,
                Verdict::Negative => ExitCode::from(2),
            })
        }

        Command::Simulate {
            generator,
            n,
            m,
            d,
            overlap,
            augment,
            seed,
            output,
            truth,
        } => {
            let spec = match generator {
                CliGenerator::Lateration => GeneratorSpec::Lateration {
                    num_points: n,
                    num_patches: m,
                    dimension: d,
                    overlap: overlap.unwrap_or(d + 1),
                },
                CliGenerator::Clustered => GeneratorSpec::Clustered {
                    num_points: n,
                    num_patches: m,
                    dimension: d,
                    augment: augment.unwrap_or(d + 1),
                    text: None,
                },
            };
            let GeneratedInstance {
                framework,
                truth: truth_config,
                ..
            } = spec.generate(seed)?;
            io::save_framework_file(&output, &framework)?;
            if let Some(path) = truth {
                io::save_configuration_file(&path, &truth_config)?;
            }
            println!(
                "wrote framework with {} points, {} patches, {} edges",
                framework.num_points(),
                framework.num_patches(),
                framework.num_edges()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Sweep { config, output } => {
            let text = std::fs::read(&config)?;
            let cfg: SweepConfig = serde_json::from_slice(&text)?;
            let rows = run_sweep(&cfg)?;
            let csv = sweep_rows_to_csv(&rows);
            let target = output.or_else(|| cfg.output.clone()).ok_or_else(|| {
                gret::Error::InvalidConfig(
                    "no output path on the command line or in the config".into(),
                )
            })?;
            std::fs::write(&target, csv)?;
            println!("wrote {} rows to {}", rows.len(), target.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn dump_system(dir: &Path, sys: &SystemMatrices) -> gret::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("L.csv"), io::matrix_to_csv(&sys.laplacian))?;
    std::fs::write(dir.join("B.csv"), io::matrix_to_csv(&sys.coupling))?;
    std::fs::write(dir.join("D.csv"), io::matrix_to_csv(&sys.local_gram))?;
    std::fs::write(dir.join("C.csv"), io::matrix_to_csv(&sys.stress))?;
    Ok(())
}
