//! `iqc-lmi`: command-line frontend for the robustness-analysis toolbox.
//!
//! Two subcommands:
//!
//! * `example` runs the cyclic-network worked example end to end and
//!   writes report.json, certificate.json, problem.dat-s, eigenvalues.csv,
//!   and boundary.csv into the output directory.
//! * `analyze` builds and solves the robustness test for a plant, value
//!   set, and multiplier recipe supplied as JSON files, printing a report
//!   to stdout.
//!
//! Exit codes: 0 when a certificate was produced and passed the residual
//! check, 2 when the analysis is infeasible or could not be certified,
//! 1 on errors (bad input, I/O, solver failure).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use iqc_core::builder;
use iqc_core::multiplier::{make_basis_filter, FilterFamily, MultiplierRecipe, TestKind};
use iqc_core::netex::{run_example, CoveringKind, ExampleConfig};
use iqc_core::problem::Plant;
use iqc_core::sdp::{self, SolveStatus, SolverOptions, SolverReport};
use iqc_core::sdpa;
use iqc_core::valueset::ValueSet;

#[derive(Parser)]
#[command(
    name = "iqc-lmi",
    version,
    about = "Robustness analysis of uncertain linear systems via LMI tests with dynamic multipliers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the cyclic-network worked example and write report/plot data.
    Example {
        /// Basis-filter order (0 = static multipliers).
        #[arg(long)]
        nu: usize,
        /// Basis-filter pole location.
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        /// Covering of the eigenvalue cloud: "intersection" or "disk".
        #[arg(long, default_value = "intersection")]
        test: String,
        /// Output directory for report.json, certificate.json,
        /// problem.dat-s, eigenvalues.csv, boundary.csv.
        #[arg(long)]
        out: PathBuf,
        /// Random Laplacian instances in the eigenvalue cloud.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Seed for the random instances.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Analyze one plant against a value set with a multiplier recipe.
    Analyze {
        /// Plant JSON (state-space w→z channel, optional performance
        /// channel).
        #[arg(long)]
        plant: PathBuf,
        /// Value-set JSON.
        #[arg(long)]
        set: PathBuf,
        /// Recipe JSON: {"test_kind": ..., "filter": {"alpha": ..,
        /// "nu": ..}} — filter omitted for static kinds.
        #[arg(long)]
        recipe: PathBuf,
        /// Optional directory for certificate.json and problem.dat-s.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Multiplier parameters as they appear in a recipe file; the value set
/// comes from its own file, so the recipe only picks the test and filter.
#[derive(Deserialize)]
struct RecipeFile {
    test_kind: TestKind,
    #[serde(default)]
    filter: Option<FilterParams>,
}

#[derive(Deserialize)]
struct FilterParams {
    alpha: f64,
    nu: usize,
    #[serde(default)]
    family: Option<FilterFamily>,
}

/// Report printed by `analyze` (stdout, JSON).
#[derive(Serialize)]
struct AnalyzeReport {
    status: SolveStatus,
    certified: bool,
    gamma: Option<f64>,
    residual_floor: f64,
    solver: SolverReport,
    notes: Vec<String>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

/// Returns whether a certificate was produced.
fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.cmd {
        Cmd::Example {
            nu,
            alpha,
            test,
            out,
            samples,
            seed,
        } => {
            let covering: CoveringKind = test.parse()?;
            let config = ExampleConfig {
                nu_basis: nu,
                alpha,
                covering,
                out_dir: Some(out.clone()),
                cloud_samples: samples,
                seed,
            };
            let report = run_example(&config)?;
            match (&report.gamma, report.certified) {
                (Some(g), true) => println!(
                    "certified: energy-gain bound {g:.3} (covering {covering}, filter order {nu})"
                ),
                _ => println!(
                    "not certified (covering {covering}, filter order {nu}): {}",
                    report.notes.last().map(String::as_str).unwrap_or("see report")
                ),
            }
            println!("outputs written to {}", out.display());
            Ok(report.certified)
        }
        Cmd::Analyze {
            plant,
            set,
            recipe,
            out,
        } => analyze(&plant, &set, &recipe, out.as_deref()),
    }
}

fn analyze(
    plant_path: &std::path::Path,
    set_path: &std::path::Path,
    recipe_path: &std::path::Path,
    out: Option<&std::path::Path>,
) -> anyhow::Result<bool> {
    let plant: Plant = read_json(plant_path).context("reading plant")?;
    let set: ValueSet = read_json(set_path).context("reading value set")?;
    let recipe_file: RecipeFile = read_json(recipe_path).context("reading recipe")?;

    let problem = match recipe_file.filter {
        None => builder::build_static(&plant, &set)?,
        Some(params) => {
            let family = params.family.unwrap_or(match recipe_file.test_kind {
                TestKind::DynFullBlock => FilterFamily::SisoColumn,
                _ => FilterFamily::Repeated,
            });
            let channels = match family {
                FilterFamily::Repeated => set.k(),
                FilterFamily::SisoColumn => 1,
            };
            let filter = make_basis_filter(params.alpha, params.nu, channels, family)?;
            let recipe = MultiplierRecipe::new(recipe_file.test_kind, Some(filter), set)?;
            builder::build_dynamic(&plant, &recipe)?
        }
    };
    let problem = if plant.perf.is_some() {
        builder::add_performance(problem)?
    } else {
        problem
    };

    let solution = sdp::solve(&problem, &SolverOptions::default())?;
    let certificate = solution.certificate(&problem);
    let slacks = sdp::check_solution(&problem, &certificate.variables)?;
    let residual_floor = slacks
        .iter()
        .map(|(_, s)| *s)
        .fold(f64::INFINITY, f64::min);
    let point_ok = residual_floor >= -1e-8;
    let certified = match solution.status {
        SolveStatus::Feasible | SolveStatus::Inaccurate => point_ok,
        SolveStatus::Infeasible | SolveStatus::Failed => false,
    };

    let mut notes = certificate.notes.clone();
    if certified && solution.status == SolveStatus::Inaccurate {
        notes.push(
            "solver stopped short of its gap target; the point passes the residual check".into(),
        );
    }
    let report = AnalyzeReport {
        status: solution.status,
        certified,
        gamma: if certified { certificate.gamma } else { None },
        residual_floor,
        solver: solution.report(),
        notes,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);

    if let Some(dir) = out {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        fs::write(
            dir.join("certificate.json"),
            serde_json::to_string_pretty(&certificate)?,
        )?;
        fs::write(dir.join("problem.dat-s"), sdpa::export_sdpa(&problem))?;
    }
    Ok(certified)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    if text.trim().is_empty() {
        bail!("{} is empty", path.display());
    }
    Ok(serde_json::from_str(&text)
        .with_context(|| format!("cannot parse {}", path.display()))?)
}
