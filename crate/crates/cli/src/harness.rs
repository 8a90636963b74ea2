//! Benchmark runs: solve every order of a dataset with one method, check
//! feasibility, and report per-order objectives plus the dataset ASA.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use fbpp_core::dataio::{self, DataError, Dataset, ReportRow};
use fbpp_core::ga::{self, GaError, GaParams, DEFAULT_GRID_SCALES};
use fbpp_core::oracle::{self, OracleError};
use fbpp_core::strategy::{greedy_lwsc, random_solution, StrategyError};
use fbpp_core::{bounding_box, validate, Item, Solution, Strategy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("order {order_id}: {message}")]
    Solve { order_id: String, message: String },
    #[error("order {order_id}: infeasible solution from {method}: {message}")]
    Infeasible { order_id: String, method: Method, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lwsc,
    Random,
    GaLwsc,
    GaDblf,
    BrkgaDftrc,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Lwsc,
        Method::Random,
        Method::GaLwsc,
        Method::GaDblf,
        Method::BrkgaDftrc,
        Method::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lwsc => "lwsc",
            Method::Random => "random",
            Method::GaLwsc => "ga-lwsc",
            Method::GaDblf => "ga-dblf",
            Method::BrkgaDftrc => "brkga-dftrc",
            Method::Oracle => "oracle",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| HarnessError::UnknownMethod(s.to_string()))
    }
}

/// Solver knobs shared by every order of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub seed: u64,
    /// Overrides the instance-size default population.
    pub ga_pop: Option<usize>,
    pub ga_gens: Option<usize>,
    /// Stretch factors of the DFTRC bin-size grid.
    pub grid_scales: Vec<f64>,
    /// Largest order the `oracle` method accepts.
    pub oracle_cap: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ga_pop: None,
            ga_gens: None,
            grid_scales: DEFAULT_GRID_SCALES.to_vec(),
            oracle_cap: oracle::DEFAULT_FULL_CAP,
        }
    }
}

impl SolveConfig {
    pub fn ga_params(&self, n: usize, seed: u64) -> GaParams {
        let mut p = GaParams::for_instance(n, seed);
        if let Some(pop) = self.ga_pop {
            p.population_size = pop;
        }
        if let Some(gens) = self.ga_gens {
            p.generations = gens;
        }
        p
    }
}

fn solve_error(order_id: &str, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Solve { order_id: order_id.to_string(), message: e.to_string() }
}

/// Solves one order. `index` decorrelates the random streams of
/// different orders within a run.
pub fn solve(
    method: Method,
    order_id: &str,
    items: &[Item],
    config: &SolveConfig,
    index: u64,
) -> Result<Solution, HarnessError> {
    let seed = config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index);
    let err = |e: &dyn std::fmt::Display| solve_error(order_id, e);
    let sol = match method {
        Method::Lwsc => greedy_lwsc(items).map_err(|e: StrategyError| err(&e))?,
        Method::Random => random_solution(items, seed).map_err(|e| err(&e))?,
        Method::GaLwsc => ga::evolve(items, &config.ga_params(items.len(), seed), &Strategy::Lwsc)
            .map_err(|e: GaError| err(&e))?,
        Method::GaDblf => ga::evolve(items, &config.ga_params(items.len(), seed), &Strategy::Dblf)
            .map_err(|e| err(&e))?,
        Method::BrkgaDftrc => {
            let grid = ga::dftrc_grid(items, &config.grid_scales).map_err(|e| err(&e))?;
            ga::grid_search_dftrc(items, &config.ga_params(items.len(), seed), &grid)
                .map_err(|e| err(&e))?
        }
        Method::Oracle => oracle::exhaustive_full(items, config.oracle_cap)
            .map_err(|e: OracleError| err(&e))?
            .best,
    };
    check_solution(method, order_id, items, &sol)?;
    Ok(sol)
}

/// Every reported solution must pass the full validator with its tight box.
pub fn check_solution(
    method: Method,
    order_id: &str,
    items: &[Item],
    sol: &Solution,
) -> Result<(), HarnessError> {
    let infeasible = |message: String| HarnessError::Infeasible {
        order_id: order_id.to_string(),
        method,
        message,
    };
    let bb = bounding_box(&sol.layout, items).map_err(|e| infeasible(e.to_string()))?;
    validate(&sol.layout, items, &bb).map_err(|e| infeasible(e.to_string()))?;
    if bb != sol.bbox || fbpp_core::objective(&bb) != sol.sa {
        return Err(infeasible(format!("reported bin {:?} / {} disagrees with layout", sol.bbox, sol.sa)));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: Method,
    pub dataset: PathBuf,
    pub solve: SolveConfig,
    /// Report CSV to append to, if any.
    pub report: Option<PathBuf>,
}

/// Per-order rows followed by one summary row.
pub fn run_dataset(
    method: Method,
    dataset: &Dataset,
    config: &SolveConfig,
) -> Result<Vec<ReportRow>, HarnessError> {
    let started = Instant::now();
    let mut rows: Vec<ReportRow> = dataset
        .instances
        .par_iter()
        .enumerate()
        .map(|(index, inst)| {
            let t = Instant::now();
            let sol = solve(method, &inst.order_id, &inst.items, config, index as u64)?;
            Ok(ReportRow {
                method: method.name().to_string(),
                dataset: format!("{}/{}", dataset.meta.name, inst.order_id),
                asa: sol.sa as f64,
                solved_count: 1,
                wall_ms: t.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect::<Result<_, HarnessError>>()?;
    let objectives: Vec<u64> = rows.iter().map(|r| r.asa as u64).collect();
    rows.push(ReportRow {
        method: method.name().to_string(),
        dataset: dataset.meta.name.clone(),
        asa: dataio::asa(&objectives)?,
        solved_count: objectives.len(),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    });
    Ok(rows)
}

pub fn run(config: &RunConfig) -> Result<Vec<ReportRow>, HarnessError> {
    let dataset = dataio::load(&config.dataset)?;
    let rows = run_dataset(config.method, &dataset, &config.solve)?;
    if let Some(path) = &config.report {
        dataio::append_report(path, &rows)?;
    }
    Ok(rows)
}
