use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rgg_core::estimate::{
    clique_all_coord_bound, clique_bias_scan, clique_lower_bound_er, edge_dev_lower_bounds, mc_event_probability,
    tilted_estimator, EstimateRecord, LogEstimate, McOptions, DEFAULT_BIAS_GRID,
};
use rgg_core::experiment::{fit_regimes, read_observations, run, ExperimentConfig};
use rgg_core::oracle::{compute_fixtures, FIXTURE_GRID};
use rgg_core::rearrange::{simulate_cap_process_with, simulate_mgf_process, write_eta_paths, write_mgf_traces};
use rgg_core::specfun::CapGeometry;
use rgg_core::{Event, Model, ModelParams, RngStream, Threshold};

const SYNTHETIC_FIXTURE: &str = include_str!("../fixtures/synthetic_regime.csv");

#[derive(Parser)]
#[command(name = "rgg", version, about = "Rare events in high-dimensional random geometric graphs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of independent shards per estimate.
    #[arg(long, global = true, default_value_t = 1)]
    shards: u32,
    /// Monte Carlo samples (or simulated paths).
    #[arg(long, global = true, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, global = true, value_enum, default_value_t = ModelArg::Gauss)]
    model: ModelArg,
    /// Experiment configuration (JSON), for `scan`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; files go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Sphere,
    Gauss,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Sphere => Model::Sphere,
            ModelArg::Gauss => Model::Gauss,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Naive,
    Bias,
    Tilted,
    ClosedForm,
    All,
}

#[derive(Args)]
struct Cell {
    #[arg(short, long)]
    n: u32,
    #[arg(short, long)]
    d: u32,
    #[arg(short, long)]
    p: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Print the thresholds t_{p,d} and s_{p,d}.
    Threshold {
        #[arg(short, long)]
        p: f64,
        #[arg(short, long)]
        d: u32,
    },
    /// Estimate ln P(clique) for one cell.
    EstimateClique {
        #[command(flatten)]
        cell: Cell,
        #[arg(long, value_enum, default_value_t = MethodArg::Naive)]
        method: MethodArg,
        /// Tilt for the tilted estimator.
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
    },
    /// Estimate ln P(|E| >= (1+ε) p n(n-1)/2) for one cell.
    EstimateEdges {
        #[command(flatten)]
        cell: Cell,
        #[arg(short, long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Naive)]
        method: MethodArg,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
    },
    /// Simulate cap-process paths (CSV: path_id,k,eta).
    CapProcess {
        #[command(flatten)]
        cell: Cell,
        /// Last step to simulate; defaults to n.
        #[arg(long)]
        k_stop: Option<u32>,
    },
    /// Simulate the edge-count interpolation (CSV: path_id,k,m_k).
    MgfProcess {
        #[command(flatten)]
        cell: Cell,
    },
    /// Print exact three-point probabilities, or rewrite the fixtures file.
    Oracle {
        #[arg(short, long, requires = "d")]
        p: Option<f64>,
        #[arg(short, long)]
        d: Option<u32>,
        /// Recompute the fixture grid and write it to this path.
        #[arg(long, conflicts_with_all = ["p", "d"])]
        regenerate_fixtures: Option<PathBuf>,
    },
    /// Run an experiment grid from `--config`.
    Scan,
    /// Fit candidate decay rates to a results CSV.
    Fit {
        /// Results CSV; the bundled synthetic fixture when absent.
        csv: Option<PathBuf>,
        /// Keep only rows of this method.
        #[arg(long)]
        method: Option<String>,
    },
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn emit(out: Option<&Path>, name: &str, write: impl FnOnce(&mut dyn Write) -> rgg_core::Result<()>) -> CliResult<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            let mut file = io::BufWriter::new(fs::File::create(&path)?);
            write(&mut file)?;
            file.flush()?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn estimates(
    g: &Global,
    params: &ModelParams,
    event: Event,
    method: MethodArg,
    theta: f64,
) -> CliResult<Vec<LogEstimate>> {
    let model = Model::from(g.model);
    let opts = McOptions::new(g.samples, g.seed).shards(g.shards);
    let want = |m: MethodArg| method == m || method == MethodArg::All;
    let mut out = Vec::new();
    if want(MethodArg::Naive) {
        out.push(mc_event_probability(params, model, event, &opts)?);
    }
    if want(MethodArg::Bias) {
        match event {
            Event::Clique => out.push(clique_bias_scan(params, &DEFAULT_BIAS_GRID, &opts.lane(100))?),
            Event::EdgeDev(_) if method == MethodArg::Bias => {
                return Err("the conditioned estimator targets the clique event; use closed-form".into())
            }
            Event::EdgeDev(_) => {}
        }
    }
    if want(MethodArg::Tilted) {
        let t = tilted_estimator(params, model, event, theta, &opts.lane(200), 0.0)?;
        out.push(
            t.estimate
                .with_flag(format!("theta={theta}"))
                .with_flag(format!("ess={}", t.ess))
                .with_flag(format!("variance_ratio={}", t.variance_ratio)),
        );
    }
    if want(MethodArg::ClosedForm) {
        match event {
            Event::Clique => {
                out.push(clique_lower_bound_er(params).with_flag("bound=er"));
                out.push(clique_all_coord_bound(params)?.with_flag("bound=all_coord"));
            }
            Event::EdgeDev(_) => {
                let b = edge_dev_lower_bounds(params)?;
                out.push(b.er_type.with_flag("bound=er_type"));
                out.push(b.bias_type.with_flag("bound=bias_type"));
            }
        }
    }
    Ok(out)
}

fn print_records(params: &ModelParams, event: Event, ests: &[LogEstimate]) {
    println!("{}", EstimateRecord::CSV_HEADER);
    for e in ests {
        println!("{}", EstimateRecord::new(params, event, e).csv_row());
    }
}

fn execute(cli: Cli) -> CliResult<ExitCode> {
    let g = &cli.global;
    match cli.command {
        Command::Threshold { p, d } => {
            let t = Threshold::solve(p, d)?;
            println!("t={} s={}", t.t_sphere, t.s_gauss);
        }
        Command::EstimateClique { cell, method, theta } => {
            let params = ModelParams::new(cell.n, cell.d, cell.p)?;
            let ests = estimates(g, &params, Event::Clique, method, theta)?;
            print_records(&params, Event::Clique, &ests);
        }
        Command::EstimateEdges {
            cell,
            epsilon,
            method,
            theta,
        } => {
            let params = ModelParams::with_epsilon(cell.n, cell.d, cell.p, epsilon)?;
            let event = Event::EdgeDev(epsilon);
            let ests = estimates(g, &params, event, method, theta)?;
            print_records(&params, event, &ests);
        }
        Command::CapProcess { cell, k_stop } => {
            let params = ModelParams::new(cell.n, cell.d, cell.p)?;
            let geom = CapGeometry::new(params.d)?;
            let k_stop = k_stop.unwrap_or(params.n);
            let paths = (0..g.samples)
                .map(|i| simulate_cap_process_with(&geom, params.n, params.p, k_stop, RngStream::new(g.seed, i)))
                .collect::<rgg_core::Result<Vec<_>>>()?;
            emit(g.out.as_deref(), "eta_paths.csv", |w| write_eta_paths(&paths, w))?;
        }
        Command::MgfProcess { cell } => {
            let params = ModelParams::new(cell.n, cell.d, cell.p)?;
            let paths = (0..g.samples)
                .map(|i| simulate_mgf_process(&params, RngStream::new(g.seed, i), true))
                .collect::<rgg_core::Result<Vec<_>>>()?;
            emit(g.out.as_deref(), "mgf_traces.csv", |w| write_mgf_traces(&paths, w))?;
        }
        Command::Oracle {
            p,
            d,
            regenerate_fixtures,
        } => {
            if let Some(path) = regenerate_fixtures {
                let fixtures = compute_fixtures(&FIXTURE_GRID)?;
                fs::write(&path, serde_json::to_string_pretty(&fixtures)? + "\n")?;
                eprintln!("wrote {}", path.display());
            } else {
                let grid: Vec<(f64, u32)> = match (p, d) {
                    (Some(p), Some(d)) => vec![(p, d)],
                    _ => FIXTURE_GRID.to_vec(),
                };
                println!("{}", serde_json::to_string_pretty(&compute_fixtures(&grid)?)?);
            }
        }
        Command::Scan => {
            let path = g.config.as_ref().ok_or("scan needs --config <file>")?;
            let mut config = ExperimentConfig::load(path)?;
            if let Some(out) = &g.out {
                config.output = Some(out.clone());
            }
            let summary = run(&config)?;
            eprintln!(
                "{} cells, {} with errors; results in {}",
                summary.cells,
                summary.failed_cells,
                summary.csv_path.display()
            );
            return Ok(ExitCode::from(summary.exit_code() as u8));
        }
        Command::Fit { csv, method } => {
            let text = match &csv {
                Some(path) => fs::read_to_string(path)?,
                None => SYNTHETIC_FIXTURE.to_string(),
            };
            let fit = fit_regimes(&read_observations(&text, method.as_deref())?)?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
