use std::io::{self, BufReader};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fbpp_cli::harness::{self, Method, RunConfig, SolveConfig};
use fbpp_cli::protocol::Server;
use fbpp_core::dataio::{self, GenSpec};
use fbpp_core::oracle;

#[derive(Parser)]
#[command(name = "fbpp", version, about = "3D flexible bin packing solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen {
        #[arg(long)]
        out: PathBuf,
        /// Items per order.
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 10)]
        low: u32,
        #[arg(long, default_value_t = 50)]
        high: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Integer units per written unit (a power of ten).
        #[arg(long, default_value_t = 1)]
        scale: u32,
    },
    /// Solve every order of a dataset and report the ASA.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        /// lwsc, random, ga-lwsc, ga-dblf, brkga-dftrc or oracle.
        #[arg(long)]
        method: Method,
        #[command(flatten)]
        solve: SolveArgs,
        /// Report CSV to append to.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact optimum under EMS placement for small orders.
    Oracle {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = oracle::DEFAULT_FULL_CAP)]
        oracle_cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve evaluation requests (newline-delimited JSON) on stdio or a Unix socket.
    Serve {
        #[arg(long)]
        socket: Option<PathBuf>,
        #[arg(long, default_value_t = oracle::DEFAULT_CAP)]
        oracle_cap: usize,
    },
    /// Print the summary rows of a report CSV.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    ga_pop: Option<usize>,
    #[arg(long)]
    ga_gens: Option<usize>,
    #[arg(long, default_value_t = oracle::DEFAULT_FULL_CAP)]
    oracle_cap: usize,
}

impl SolveArgs {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            seed: self.seed,
            ga_pop: self.ga_pop,
            ga_gens: self.ga_gens,
            oracle_cap: self.oracle_cap,
            ..SolveConfig::default()
        }
    }
}

fn run_and_print(config: RunConfig) -> Result<()> {
    let rows = harness::run(&config)?;
    let summary = rows.last().expect("summary row");
    println!(
        "{} on {}: asa {:.3} over {} orders in {:.0} ms",
        summary.method, summary.dataset, summary.asa, summary.solved_count, summary.wall_ms
    );
    Ok(())
}

#[cfg(unix)]
fn serve_socket(server: Server, path: PathBuf) -> Result<()> {
    use std::os::unix::net::UnixListener;
    let listener = UnixListener::bind(&path).with_context(|| format!("binding {}", path.display()))?;
    for stream in listener.incoming() {
        let stream = stream?;
        let reader = BufReader::new(stream.try_clone()?);
        server.serve(reader, stream)?;
    }
    Ok(())
}

#[cfg(not(unix))]
fn serve_socket(_: Server, _: PathBuf) -> Result<()> {
    bail!("socket transport needs a Unix platform")
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen { out, n, count, low, high, seed, scale } => {
            let mut ds = dataio::generate(&GenSpec { n_items: n, count, dim_low: low, dim_high: high, seed })?;
            ds.meta.scale_factor = scale;
            ds = dataio::Dataset::new(ds.meta, ds.instances)?;
            dataio::save(&ds, &out).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} orders to {}", ds.instances.len(), out.display());
        }
        Command::Run { dataset, method, solve, out } => {
            run_and_print(RunConfig { method, dataset, solve: solve.config(), report: out })?;
        }
        Command::Oracle { dataset, oracle_cap, out } => {
            let solve = SolveConfig { oracle_cap, ..SolveConfig::default() };
            run_and_print(RunConfig { method: Method::Oracle, dataset, solve, report: out })?;
        }
        Command::Serve { socket, oracle_cap } => {
            let server = Server { max_oracle_n: oracle_cap };
            match socket {
                Some(path) => serve_socket(server, path)?,
                None => server.serve(io::stdin().lock(), io::stdout().lock())?,
            }
        }
        Command::Report { out } => {
            let rows = dataio::read_report(&out)?;
            let summaries: Vec<_> = rows.iter().filter(|r| !r.dataset.contains('/')).collect();
            if summaries.is_empty() {
                bail!("{} has no summary rows", out.display());
            }
            println!("{:<12} {:<32} {:>12} {:>8} {:>12}", "method", "dataset", "asa", "orders", "wall_ms");
            for r in summaries {
                println!("{:<12} {:<32} {:>12.3} {:>8} {:>12.0}", r.method, r.dataset, r.asa, r.solved_count, r.wall_ms);
            }
        }
    }
    Ok(())
}
