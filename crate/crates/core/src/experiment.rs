//! Grid runs driven by a JSON configuration, and regime fitting of the
//! resulting log-probability estimates.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{
    clique_all_coord_bound, clique_bias_scan, clique_lower_bound_er, edge_dev_lower_bounds, mc_event_probability,
    tilted_estimator, EstimateRecord, LogEstimate, McOptions, DEFAULT_BIAS_GRID,
};
use crate::params::{Event, Model, ModelParams};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "RGG_OUT_DIR";

/// Default wall-clock budget per cell.
pub const DEFAULT_CELL_BUDGET_SECS: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Clique,
    EdgeDev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Grid {
    pub n: Vec<u32>,
    pub d: Vec<u32>,
    pub p: Vec<f64>,
    #[serde(default)]
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    Naive,
    /// First-coordinate biasing, best certified value over the `C` grid.
    CondBias {
        #[serde(default = "default_bias_grid")]
        bias_grid: Vec<f64>,
    },
    Tilted {
        theta: f64,
        #[serde(default)]
        ess_floor: f64,
    },
    /// ER and all-coordinate clique bounds, or both edge-deviation bounds.
    ClosedForm,
}

fn default_bias_grid() -> Vec<f64> {
    DEFAULT_BIAS_GRID.to_vec()
}

fn default_shards() -> u32 {
    1
}

fn default_budget() -> f64 {
    DEFAULT_CELL_BUDGET_SECS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    pub event: EventKind,
    pub grid: Grid,
    pub estimators: Vec<EstimatorSpec>,
    pub samples: u64,
    pub master_seed: u64,
    #[serde(default = "default_shards")]
    pub shards: u32,
    /// Output directory; falls back to `RGG_OUT_DIR`, then `./rgg-out`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_budget")]
    pub cell_budget_secs: f64,
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: u32,
    pub d: u32,
    pub p: f64,
    pub epsilon: Option<f64>,
}

impl Cell {
    fn params(&self) -> Result<ModelParams> {
        match self.epsilon {
            Some(eps) => ModelParams::with_epsilon(self.n, self.d, self.p, eps),
            None => ModelParams::new(self.n, self.d, self.p),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Cells in row-major order over `(n, d, p, ε)`.
    pub fn cells(&self) -> Vec<Cell> {
        let eps: Vec<Option<f64>> = match self.event {
            EventKind::Clique => vec![None],
            EventKind::EdgeDev => self.grid.epsilon.iter().map(|&e| Some(e)).collect(),
        };
        let mut cells = Vec::new();
        for &n in &self.grid.n {
            for &d in &self.grid.d {
                for &p in &self.grid.p {
                    for &epsilon in &eps {
                        cells.push(Cell { n, d, p, epsilon });
                    }
                }
            }
        }
        cells
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.n.is_empty() || g.d.is_empty() || g.p.is_empty() {
            return Err(Error::param("the parameter grid is empty"));
        }
        if self.event == EventKind::EdgeDev && g.epsilon.is_empty() {
            return Err(Error::param("the edge-deviation event needs an epsilon grid"));
        }
        if self.shards == 0 {
            return Err(Error::param("shard count must be at least 1"));
        }
        if self.samples == 0 {
            return Err(Error::param("sample count must be at least 1"));
        }
        if self.estimators.is_empty() {
            return Err(Error::param("no estimators selected"));
        }
        if !(self.cell_budget_secs > 0.0) {
            return Err(Error::param("cell budget must be positive"));
        }
        for spec in &self.estimators {
            match spec {
                EstimatorSpec::CondBias { bias_grid } if bias_grid.is_empty() => {
                    return Err(Error::param("empty bias grid"));
                }
                EstimatorSpec::CondBias { .. } if self.model != Model::Gauss => {
                    return Err(Error::param("conditioned biasing runs on the Gaussian model"));
                }
                EstimatorSpec::CondBias { .. } if self.event != EventKind::Clique => {
                    return Err(Error::param("conditioned biasing targets the clique event"));
                }
                EstimatorSpec::Tilted { theta, .. } if !(*theta >= 0.0) => {
                    return Err(Error::param(format!("tilt must be nonnegative, got {theta}")));
                }
                _ => {}
            }
        }
        for cell in self.cells() {
            cell.params()?;
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("rgg-out"))
    }
}

/// Per-cell output file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub index: usize,
    pub model: Model,
    pub cell: Cell,
    pub records: Vec<EstimateRecord>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub cells: usize,
    pub failed_cells: usize,
    pub csv_path: PathBuf,
    pub json_paths: Vec<PathBuf>,
}

impl RunSummary {
    /// 0 when every cell succeeded, 1 when some cell recorded an error.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.failed_cells > 0)
    }
}

fn run_estimator(
    spec: &EstimatorSpec,
    model: Model,
    params: &ModelParams,
    event: Event,
    opts: &McOptions,
) -> Result<Vec<LogEstimate>> {
    Ok(match spec {
        EstimatorSpec::Naive => vec![mc_event_probability(params, model, event, opts)?],
        EstimatorSpec::CondBias { bias_grid } => vec![clique_bias_scan(params, bias_grid, &opts.lane(100))?],
        EstimatorSpec::Tilted { theta, ess_floor } => {
            let t = tilted_estimator(params, model, event, *theta, &opts.lane(200), *ess_floor)?;
            vec![t
                .estimate
                .with_flag(format!("theta={theta}"))
                .with_flag(format!("ess={}", t.ess))
                .with_flag(format!("variance_ratio={}", t.variance_ratio))]
        }
        EstimatorSpec::ClosedForm => match event {
            Event::Clique => {
                let mut out = vec![clique_lower_bound_er(params).with_flag("bound=er")];
                if model == Model::Gauss {
                    out.push(clique_all_coord_bound(params)?.with_flag("bound=all_coord"));
                }
                out
            }
            Event::EdgeDev(_) => {
                let b = edge_dev_lower_bounds(params)?;
                vec![b.er_type.with_flag("bound=er_type"), b.bias_type.with_flag("bound=bias_type")]
            }
        },
    })
}

/// Runs one cell; estimator failures are collected, not propagated.
pub fn run_cell(config: &ExperimentConfig, index: usize, cell: Cell) -> CellResult {
    let mut result = CellResult {
        index,
        model: config.model,
        cell,
        records: Vec::new(),
        errors: Vec::new(),
    };
    let params = match cell.params() {
        Ok(p) => p,
        Err(e) => {
            result.errors.push(e.to_string());
            return result;
        }
    };
    let event = match (config.event, cell.epsilon) {
        (EventKind::EdgeDev, Some(eps)) => Event::EdgeDev(eps),
        _ => Event::Clique,
    };
    let deadline = Instant::now() + Duration::from_secs_f64(config.cell_budget_secs);
    // Cells draw from disjoint lanes of the master seed.
    let opts = McOptions::new(config.samples, config.master_seed)
        .shards(config.shards)
        .lane(1000 * index as u32)
        .deadline(Some(deadline));
    for spec in &config.estimators {
        match run_estimator(spec, config.model, &params, event, &opts) {
            Ok(ests) => result
                .records
                .extend(ests.iter().map(|e| EstimateRecord::new(&params, event, e))),
            Err(e) => result.errors.push(format!("{spec:?}: {e}")),
        }
    }
    result
}

/// Runs the whole grid, writing `cell_NNNN.json` per cell and `results.csv`.
/// I/O failures abort the run.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    let dir = config.output_dir();
    fs::create_dir_all(&dir)?;
    let cells = config.cells();
    let mut csv = String::from(EstimateRecord::CSV_HEADER);
    csv.push('\n');
    let mut json_paths = Vec::with_capacity(cells.len());
    let mut failed_cells = 0;
    for (index, cell) in cells.iter().enumerate() {
        let result = run_cell(config, index, *cell);
        if !result.errors.is_empty() {
            failed_cells += 1;
        }
        for r in &result.records {
            csv.push_str(&r.csv_row());
            csv.push('\n');
        }
        let path = dir.join(format!("cell_{index:04}.json"));
        fs::write(&path, serde_json::to_string_pretty(&result)? + "\n")?;
        json_paths.push(path);
    }
    let csv_path = dir.join("results.csv");
    fs::write(&csv_path, csv)?;
    Ok(RunSummary {
        cells: cells.len(),
        failed_cells,
        csv_path,
        json_paths,
    })
}

/// Candidate rates for `-ln P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rate {
    /// `n²`
    NSquared,
    /// `n sqrt(d ln n)`
    NSqrtDLogN,
    /// `n d`
    ND,
    /// `n sqrt(d)`
    NSqrtD,
}

impl Rate {
    pub const ALL: [Rate; 4] = [Rate::NSquared, Rate::NSqrtDLogN, Rate::ND, Rate::NSqrtD];

    pub fn eval(self, n: f64, d: f64) -> f64 {
        match self {
            Rate::NSquared => n * n,
            Rate::NSqrtDLogN => n * (d * n.ln()).sqrt(),
            Rate::ND => n * d,
            Rate::NSqrtD => n * d.sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rate::NSquared => "n^2",
            Rate::NSqrtDLogN => "n*sqrt(d*ln n)",
            Rate::ND => "n*d",
            Rate::NSqrtD => "n*sqrt(d)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateFit {
    pub rate: Rate,
    pub coefficient: f64,
    /// Residual sum of squares over the total sum of squares of `-ln P`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub n: u32,
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeFit {
    pub candidates: Vec<CandidateFit>,
    pub selected: Rate,
    /// `ln(-ln P)` against `ln d`, per `n` with at least two distinct `d`.
    pub slopes: Vec<SlopeFit>,
}

/// A fitted observation: `-ln P` at `(n, d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub n: u32,
    pub d: u32,
    pub log_value: f64,
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Numeric {
            message: "degenerate design: all abscissae equal".into(),
            achieved: sxx,
        });
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

pub fn fit_regimes(obs: &[Observation]) -> Result<RegimeFit> {
    let finite: Vec<&Observation> = obs.iter().filter(|o| o.log_value.is_finite() && o.log_value < 0.0).collect();
    if finite.len() < 4 {
        return Err(Error::param(format!(
            "need at least 4 finite negative log estimates, got {}",
            finite.len()
        )));
    }
    let first = (finite[0].n, finite[0].d);
    if finite.iter().all(|o| (o.n, o.d) == first) {
        return Err(Error::Numeric {
            message: "degenerate design: every cell has the same (n, d)".into(),
            achieved: f64::NAN,
        });
    }
    let ys: Vec<f64> = finite.iter().map(|o| -o.log_value).collect();
    let tss: f64 = ys.iter().map(|y| y * y).sum();
    let candidates: Vec<CandidateFit> = Rate::ALL
        .iter()
        .map(|&rate| {
            let xs: Vec<f64> = finite.iter().map(|o| rate.eval(o.n as f64, o.d as f64)).collect();
            let sxx: f64 = xs.iter().map(|x| x * x).sum();
            let coefficient = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / sxx;
            let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - coefficient * x).powi(2)).sum();
            CandidateFit {
                rate,
                coefficient,
                residual: (rss / tss).max(0.0),
            }
        })
        .collect();
    let selected = candidates
        .iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .expect("four candidates")
        .rate;
    let mut ns: Vec<u32> = finite.iter().map(|o| o.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut slopes = Vec::new();
    for n in ns {
        let at_n: Vec<&&Observation> = finite.iter().filter(|o| o.n == n).collect();
        let xs: Vec<f64> = at_n.iter().map(|o| (o.d as f64).ln()).collect();
        let ys: Vec<f64> = at_n.iter().map(|o| (-o.log_value).ln()).collect();
        if let Ok((slope, intercept)) = linear_fit(&xs, &ys) {
            slopes.push(SlopeFit {
                n,
                slope,
                intercept,
                points: xs.len(),
            });
        }
    }
    Ok(RegimeFit {
        candidates,
        selected,
        slopes,
    })
}

/// Reads `(n, d, log_value)` from a results CSV, optionally keeping only one
/// method.
pub fn read_observations(csv: &str, method: Option<&str>) -> Result<Vec<Observation>> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV".into()))?
        .split(',')
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Format(format!("CSV lacks a `{name}` column")))
    };
    let (cn, cd, cv) = (col("n")?, col("d")?, col("log_value")?);
    let cm = col("method").ok();
    let mut out = Vec::new();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        let get = |c: usize| {
            fields
                .get(c)
                .map(|s| s.trim())
                .ok_or_else(|| Error::Format(format!("row {} is short", k + 2)))
        };
        if let (Some(m), Some(c)) = (method, cm) {
            if get(c)? != m {
                continue;
            }
        }
        let bad = |what: &str| Error::Format(format!("row {}: bad {what}", k + 2));
        let log_value = match get(cv)? {
            "-inf" => f64::NEG_INFINITY,
            "inf" => f64::INFINITY,
            "nan" => f64::NAN,
            s => s.parse().map_err(|_| bad("log_value"))?,
        };
        out.push(Observation {
            n: get(cn)?.parse().map_err(|_| bad("n"))?,
            d: get(cd)?.parse().map_err(|_| bad("d"))?,
            log_value,
        });
    }
    Ok(out)
}
