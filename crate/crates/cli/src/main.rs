use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sitgrid::checker::{Checker, SolverOptions};
use sitgrid::dtmc::{self, Dtmc};
use sitgrid::estimation::{self, AugmentedGrid};
use sitgrid::export::{self, ModelStats, ReportDocument, ReportFormat, VerdictRow};
use sitgrid::log_ingest::{self, ObservationLog};
use sitgrid::pctl::{self, PathFormula, StateFormula};
use sitgrid::sampling;
use sitgrid::situation_space::SituationSpace;

#[derive(Parser)]
#[command(
    name = "sitgrid",
    version,
    about = "Situation coverage grids and DTMC safety checks"
)]
struct Cli {
    /// Output format for reports: text, csv or json.
    #[arg(long, global = true, default_value = "text")]
    format: ReportFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Grid CSV (`from,to,prob`), or `-` for stdin.
    #[arg(long)]
    grid: String,
    /// Initial situation code.
    #[arg(long)]
    initial: String,
}

#[derive(Subcommand)]
enum Command {
    /// List every situation of the space.
    Enumerate {
        #[arg(long)]
        axes: String,
    },
    /// Observed and unobserved situations of one or more logs.
    Coverage {
        #[arg(long)]
        axes: String,
        #[arg(long, required = true)]
        log: Vec<String>,
    },
    /// Estimate a transition grid from logs.
    Estimate {
        #[arg(long)]
        axes: String,
        #[arg(long, required = true)]
        log: Vec<String>,
        /// Dirichlet prior weight; maximum likelihood when absent.
        #[arg(long, value_name = "ALPHA")]
        bayes: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build and validate the Markov chain for a grid.
    Synthesize {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Check a requirements file against the model.
    Check {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        requirements: String,
    },
    /// Rank situations by probability of eventually reaching a label.
    Rank {
        #[arg(long)]
        grid: String,
        /// Proposition to reach, e.g. `fail`.
        #[arg(long)]
        target: String,
        /// Only count paths reaching the target within this many steps.
        #[arg(long)]
        horizon: Option<u64>,
        /// Defaults to the first situation in the grid.
        #[arg(long)]
        initial: Option<String>,
    },
    /// Write the model in the PRISM language.
    ExportPrism {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Labels file; defaults to the output path with a `.lab` extension.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Draw a synthetic log from a grid.
    SampleLog {
        #[arg(long)]
        grid: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 200)]
        max_steps: usize,
        /// Defaults to the first situation in the grid.
        #[arg(long)]
        start: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut text = String::new();
        io::stdin()
            .read_to_string(&mut text)
            .context("reading stdin")?;
        Ok(text)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        _ => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_space(path: &str) -> Result<SituationSpace> {
    SituationSpace::from_json(&read_input(path)?).with_context(|| format!("axes file {path}"))
}

fn load_logs(paths: &[String]) -> Result<ObservationLog> {
    let logs = paths
        .iter()
        .map(|p| log_ingest::parse_log(&read_input(p)?).with_context(|| format!("log {p}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(log_ingest::merge(logs)?)
}

fn load_grid(path: &str) -> Result<AugmentedGrid> {
    AugmentedGrid::from_csv(&read_input(path)?).with_context(|| format!("grid {path}"))
}

fn load_model(args: &ModelArgs) -> Result<Dtmc> {
    let grid = load_grid(&args.grid)?;
    build_model(&grid, &args.initial)
}

fn build_model(grid: &AugmentedGrid, initial: &str) -> Result<Dtmc> {
    let model = dtmc::synthesize(grid, initial)?;
    let problems = dtmc::validate(&model);
    if !problems.is_empty() {
        let list: Vec<String> = problems.iter().map(|d| format!("  {d}")).collect();
        bail!("model failed validation:\n{}", list.join("\n"));
    }
    Ok(model)
}

fn enumerate(space: &SituationSpace, format: ReportFormat) -> String {
    let situations = space.enumerate();
    match format {
        ReportFormat::Text => situations
            .iter()
            .map(|s| format!("{:<4} {}  {}\n", s.name(), s.code(), space.describe(s)))
            .collect(),
        ReportFormat::Csv => {
            let names: Vec<&str> = space.axes().iter().map(|a| a.name()).collect();
            let mut out = format!("id,code,{}\n", names.join(","));
            for s in &situations {
                let values: Vec<&str> = s
                    .assignments()
                    .iter()
                    .zip(space.axes())
                    .map(|(&v, a)| a.values()[v].as_str())
                    .collect();
                out.push_str(&format!("{},{},{}\n", s.name(), s.code(), values.join(",")));
            }
            out
        }
        ReportFormat::Json => {
            let list: Vec<serde_json::Value> = situations
                .iter()
                .map(|s| {
                    let values: serde_json::Map<String, serde_json::Value> = s
                        .assignments()
                        .iter()
                        .zip(space.axes())
                        .map(|(&v, a)| (a.name().to_string(), a.values()[v].clone().into()))
                        .collect();
                    serde_json::json!({ "id": s.name(), "code": s.code(), "values": values })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&list).expect("json");
            s.push('\n');
            s
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let format = cli.format;
    match cli.command {
        Command::Enumerate { axes } => {
            print!("{}", enumerate(&load_space(&axes)?, format));
        }
        Command::Coverage { axes, log } => {
            let space = load_space(&axes)?;
            let validated = log_ingest::validate_log(load_logs(&log)?, &space)?;
            let doc = ReportDocument {
                coverage: Some(log_ingest::coverage_summary(&validated)),
                ..Default::default()
            };
            print!("{}", export::render_report(&doc, format));
        }
        Command::Estimate {
            axes,
            log,
            bayes,
            output,
        } => {
            let space = load_space(&axes)?;
            let validated = log_ingest::validate_log(load_logs(&log)?, &space)?;
            let counts = estimation::count_transitions(&validated);
            let grid = match bayes {
                None => estimation::estimate_mle(&counts)?,
                Some(alpha) => {
                    let support = estimation::default_support(&counts);
                    estimation::estimate_bayes(&counts, alpha, &support)?
                }
            };
            write_output(output.as_deref(), &export::export_grid_csv(&grid))?;
        }
        Command::Synthesize { model } => {
            let dtmc = load_model(&model)?;
            let doc = ReportDocument {
                model: Some(ModelStats::of(&dtmc)),
                ..Default::default()
            };
            print!("{}", export::render_report(&doc, format));
        }
        Command::Check {
            model,
            requirements,
        } => {
            let dtmc = load_model(&model)?;
            let reqs = pctl::parse_requirements(&read_input(&requirements)?)
                .with_context(|| format!("requirements {requirements}"))?;
            for r in &reqs {
                let problems = pctl::validate_formula(&r.query, &dtmc);
                if let Some(p) = problems.first() {
                    bail!("requirement {}: {p}", r.id);
                }
            }
            let checker = Checker::with_options(&dtmc, SolverOptions::from_env()?);
            let rows = reqs
                .iter()
                .map(|r| {
                    let result = checker
                        .check(&r.query)
                        .with_context(|| format!("requirement {}", r.id))?;
                    Ok(VerdictRow::new(r, &result))
                })
                .collect::<Result<Vec<_>>>()?;
            let doc = ReportDocument {
                model: Some(ModelStats::of(&dtmc)),
                requirements: Some(rows),
                ..Default::default()
            };
            print!("{}", export::render_report(&doc, format));
            if doc.any_violation() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Rank {
            grid,
            target,
            horizon,
            initial,
        } => {
            let grid = load_grid(&grid)?;
            let initial = match initial {
                Some(i) => i,
                None => match grid.covered().first() {
                    Some(c) => c.clone(),
                    None => bail!("grid has no situations"),
                },
            };
            let dtmc = build_model(&grid, &initial)?;
            if !dtmc.has_proposition(&target) {
                bail!("target `{target}` is not a proposition of the model");
            }
            let goal = StateFormula::atom(target);
            let path = match horizon {
                Some(k) => PathFormula::bounded_eventually(goal, k),
                None => PathFormula::eventually(goal),
            };
            let checker = Checker::with_options(&dtmc, SolverOptions::from_env()?);
            let doc = ReportDocument {
                ranking: Some(checker.rank_situations(&path)?),
                ..Default::default()
            };
            print!("{}", export::render_report(&doc, format));
        }
        Command::ExportPrism {
            model,
            output,
            labels,
        } => {
            let dtmc = load_model(&model)?;
            let (model_text, labels_text) = export::export_prism(&dtmc);
            write_output(output.as_deref(), &model_text)?;
            let labels = labels.or_else(|| {
                output
                    .filter(|p| p != Path::new("-"))
                    .map(|p| p.with_extension("lab"))
            });
            if let Some(path) = labels {
                write_output(Some(&path), &labels_text)?;
            }
        }
        Command::SampleLog {
            grid,
            seed,
            runs,
            max_steps,
            start,
            output,
        } => {
            let grid = load_grid(&grid)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let log = sampling::sample_log(&grid, start.as_deref(), runs, max_steps, &mut rng)?;
            write_output(output.as_deref(), &log_ingest::write_log(&log))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
