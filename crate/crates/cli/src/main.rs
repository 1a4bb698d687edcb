use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use maropf::conditions::{check_conditions_with, Thresholds, DEFAULT_ETA};
use maropf::maropf::{DispatchSolution, Method};
use maropf::pf::validate;
use maropf::scenario::{
    bundled_case_file, gen_synthetic, resolve_case, run_method, run_scenario,
    write_method_artifacts, ScenarioConfig, SummaryRow, SyntheticSpec, BUNDLED,
};
use maropf::Error;

#[derive(Parser)]
#[command(name = "maropf", version, about = "Battery-aware convex OPF for radial feeders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CaseArg {
    /// Case file, `bundled:<name>`, or `synthetic:<nodes>:<steps>:<pv>:<batteries>`.
    #[arg(long)]
    case: String,
    /// Seed for synthetic case references.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case with one method and validate the dispatch.
    Solve {
        #[command(flatten)]
        case: CaseArg,
        #[arg(long, default_value = "maropf")]
        method: Method,
        #[arg(long, default_value_t = 10)]
        max_iters: usize,
        /// Solver tolerance.
        #[arg(long, env = "MAROPF_TOL", default_value_t = maropf::conic::DEFAULT_TOL)]
        tol: f64,
        /// Margin tolerance for validation.
        #[arg(long, default_value_t = 1e-6)]
        validate_tol: f64,
        #[arg(long)]
        out: PathBuf,
        /// Write the first program (maropf: first iteration) in text form.
        #[arg(long)]
        dump_program: Option<PathBuf>,
    },
    /// Replay a dispatch through the power-flow oracle.
    Validate {
        #[command(flatten)]
        case: CaseArg,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Evaluate the sufficient exactness conditions.
    CheckConditions {
        #[command(flatten)]
        case: CaseArg,
        #[arg(long, default_value_t = DEFAULT_ETA)]
        eta: f64,
    },
    /// Run several methods on one case and write a comparison table.
    Run {
        /// JSON scenario config; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        case: Option<String>,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        #[arg(long, env = "MAROPF_TOL")]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a random feeder.
    Gen {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 34)]
        nodes: usize,
        #[arg(long, default_value_t = 48)]
        steps: usize,
        /// Installed PV as a multiple of peak load.
        #[arg(long, default_value_t = 0.3)]
        pv: f64,
        #[arg(long, default_value_t = 2)]
        batteries: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in cases or write them as JSON files.
    Bundled {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn print_row(row: &SummaryRow) {
    println!(
        "{}: objective {:.9e}, validated cost {:.9e}, feasible {}, min margin {:.3e}, iterations {}, converged {}",
        row.method,
        row.objective,
        row.validated_cost,
        row.feasible,
        row.min_margin,
        row.iterations,
        row.converged
    );
}

fn solve(
    case_arg: CaseArg,
    method: Method,
    max_iters: usize,
    tol: f64,
    validate_tol: f64,
    out: PathBuf,
    dump_program: Option<PathBuf>,
) -> Result<()> {
    let case = resolve_case(&case_arg.case, case_arg.seed).context("load stage")?;
    let mut config = ScenarioConfig::new(case_arg.case.clone(), vec![method], &out);
    config.tol = tol;
    config.validate_tol = validate_tol;
    config.max_iters = max_iters;
    config.seed = case_arg.seed;

    if let Some(path) = &dump_program {
        let built = match method {
            Method::Maropf | Method::Enumerate => maropf::maropf::build_maropf(
                &case,
                &maropf::maropf::default_initial_guess(&case),
            )?,
            Method::Ropf => maropf::maropf::build_ropf(&case)?,
            Method::RelaxedLinear => maropf::maropf::build_relaxed_linear(&case)?,
        };
        write_file(path, &built.program.to_text())?;
    }

    let run = match run_method(&case, method, &config) {
        Ok(run) => run,
        Err(Error::IterationSolve {
            iteration,
            status,
            program,
        }) => {
            let path = out.join(format!("failed_program_iter{iteration}.txt"));
            write_file(&path, &program.to_text())?;
            bail!(
                "{method} stage: iteration {iteration} solver returned {status}; program written to {}",
                path.display()
            );
        }
        Err(e) => return Err(e).with_context(|| format!("{method} stage")),
    };
    write_method_artifacts(&out, &run).context("output stage")?;
    print_row(&SummaryRow::of(&run));
    Ok(())
}

fn run(
    config: Option<PathBuf>,
    case: Option<String>,
    methods: Option<Vec<Method>>,
    tol: Option<f64>,
    max_iters: Option<usize>,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<()> {
    let mut cfg = match &config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("config stage: reading {}", path.display()))?;
            serde_json::from_str::<ScenarioConfig>(&text).context("config stage")?
        }
        None => {
            let case = case.clone().context("config stage: --case or --config is required")?;
            let out = out.clone().context("config stage: --out or --config is required")?;
            ScenarioConfig::new(case, vec![Method::Maropf], out)
        }
    };
    if let Some(c) = case {
        cfg.case = c;
    }
    if let Some(m) = methods {
        cfg.methods = m;
    }
    if let Some(t) = tol {
        cfg.tol = t;
    }
    if let Some(k) = max_iters {
        cfg.max_iters = k;
    }
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let rows = run_scenario(&cfg)?;
    for row in &rows {
        print_row(row);
    }
    println!("summary written to {}", cfg.out_dir.join("summary.csv").display());
    Ok(())
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve {
            case,
            method,
            max_iters,
            tol,
            validate_tol,
            out,
            dump_program,
        } => solve(case, method, max_iters, tol, validate_tol, out, dump_program),
        Command::Validate {
            case,
            solution,
            tol,
        } => {
            let case = resolve_case(&case.case, case.seed).context("load stage")?;
            let text = std::fs::read_to_string(&solution)
                .with_context(|| format!("load stage: reading {}", solution.display()))?;
            let solution = DispatchSolution::from_json(&text).context("load stage")?;
            let report = validate(&case, &solution, tol).context("validate stage")?;
            println!("{}", report.to_json());
            Ok(())
        }
        Command::CheckConditions { case, eta } => {
            let case = resolve_case(&case.case, case.seed).context("load stage")?;
            let report = check_conditions_with(
                &case,
                Thresholds {
                    eta1: eta,
                    eta2: eta,
                    eta3: eta,
                },
            )
            .context("conditions stage")?;
            println!("{}", report.to_json());
            Ok(())
        }
        Command::Run {
            config,
            case,
            methods,
            tol,
            max_iters,
            out,
            seed,
        } => run(config, case, methods, tol, max_iters, out, seed),
        Command::Gen {
            seed,
            nodes,
            steps,
            pv,
            batteries,
            out,
        } => {
            let file = gen_synthetic(&SyntheticSpec {
                seed,
                nodes,
                steps,
                pv_penetration: pv,
                batteries,
            })?;
            let json = file.to_json();
            match out {
                Some(path) => write_file(&path, &json),
                None => {
                    println!("{json}");
                    Ok(())
                }
            }
        }
        Command::Bundled { out } => {
            for name in BUNDLED {
                match &out {
                    Some(dir) => {
                        let file = bundled_case_file(name)?;
                        write_file(&dir.join(format!("{name}.json")), &file.to_json())?;
                    }
                    None => println!("{name}"),
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
