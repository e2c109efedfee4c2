//! Command-line front end. Every subcommand reads JSON documents (see
//! [`crate::io`]), runs one library operation and prints one JSON report.
//!
//! Exit status: 0 on success, 2 on argument errors (usage on stderr), 1 on
//! any other failure with `{"error": kind, "detail": message}` on stdout.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::divergence::{f_div_chains, DivergenceGenerator};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::factorization::{
    clique_candidate, clique_pythagorean_check, independence_decomposition, parse_blocks, partition_projection,
    CliqueCover, Partition,
};
use crate::inequality::{
    han_check, modularity_scan, partition_lemma_check, sanov_rate, shearer_chain_check, shearer_independence_check,
    Functional, SubsetCoverSpec,
};
use crate::io;
use crate::projection::{coordinate_descent, keep_in, DescentOptions};
use crate::spectral::{hitting_analysis, l2_mixing_time, spectral_report, HittingReport, SpectralReport};
use crate::state::{stationary_distribution, CoordinateSubset, Distribution, StochasticMatrix};
use crate::swapping::{
    build_swapping_matrix, gamma_escape, restriction_residual, simulate_projection_sampler, simulate_replicas,
    speedup_report, GibbsLadder, SwapConfig,
};

#[derive(Debug, Parser)]
#[command(name = "mcgeo", version, about = "Information geometry of multivariate Markov chains")]
pub struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = OutputMode::Json, global = true)]
    pub output: OutputMode,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputMode {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Chain document.
    #[arg(long)]
    pub p: PathBuf,
    /// Stationary law; defaults to the chain document's `pi`, then to the
    /// computed stationary distribution.
    #[arg(long)]
    pub pi: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FKind {
    Kl,
    Rkl,
    Alpha,
    Hellinger,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Kl,
    Rkl,
    Alpha,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FunctionalArg {
    Entropy,
    Fact,
    Ind,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// f-divergence between two chains under a weighting law.
    Divergence {
        #[arg(long = "f", value_enum)]
        f: FKind,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        pi: PathBuf,
        #[arg(long)]
        m: PathBuf,
        #[arg(long)]
        l: PathBuf,
    },
    /// Closest product chain by coordinate descent.
    Project {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        chain: ChainArgs,
        /// Directory with starting factors L1.json ... Ld.json.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Keep-S-in chain, S given 1-based as "1,3".
    Marginal {
        #[arg(long)]
        s: String,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Projection onto a partition-factorizable family, blocks as "1,2|3".
    Factor {
        #[arg(long)]
        blocks: String,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Clique-factorizable candidate and, with candidate blocks, the
    /// Pythagorean inequality.
    Clique {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        cliques: String,
        #[command(flatten)]
        chain: ChainArgs,
        /// Directory with candidate clique chains C1.json ... Ck.json.
        #[arg(long)]
        candidate: Option<PathBuf>,
    },
    /// Han-Shearer type inequalities.
    Check {
        #[command(subcommand)]
        which: CheckCommand,
    },
    /// Exhaustive (sub/super)modularity scan.
    Scan {
        #[arg(long, value_enum)]
        functional: FunctionalArg,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Large-deviation rate for the pair empirical measure.
    Sanov {
        /// Free coordinate, 1-based.
        #[arg(long)]
        i: usize,
        #[command(flatten)]
        chain: ChainArgs,
        /// Directory with the fixed factors Lj.json, j != i.
        #[arg(long)]
        factors: PathBuf,
    },
    /// Spectral gap, log-Sobolev bracket, optionally Cheeger and hitting times.
    Spectral {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        cheeger: bool,
        #[arg(long)]
        hitting: bool,
    },
    /// L² mixing time of the continuized chain.
    Mix {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        eps: f64,
    },
    /// Swapping chain and its projection sampler.
    Swap {
        #[command(subcommand)]
        which: SwapCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum CheckCommand {
    /// D(P||L) >= D(P^(S)||L^(S)).
    Partition {
        #[arg(long)]
        s: String,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        l: PathBuf,
    },
    /// Shearer inequality for divergences to a product chain.
    Shearer {
        #[arg(long)]
        cover: String,
        #[arg(long)]
        r: Option<usize>,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        factors: PathBuf,
    },
    /// Han inequality (leave-one-out cover).
    Han {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        factors: PathBuf,
    },
    /// Shearer inequality for the distance to independence.
    ShearerInd {
        #[arg(long)]
        cover: String,
        #[arg(long)]
        r: Option<usize>,
        #[command(flatten)]
        chain: ChainArgs,
    },
}

#[derive(Debug, Args)]
pub struct SwapArgs {
    /// Hypercube dimension.
    #[arg(long = "N")]
    pub n: usize,
    /// Number of temperatures; must match --betas.
    #[arg(long)]
    pub d: Option<usize>,
    /// Strictly increasing inverse temperatures, "0,0.5,1".
    #[arg(long)]
    pub betas: String,
    /// Energies over {0,1}^N in flat order.
    #[arg(long)]
    pub hamiltonian: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SwapCommand {
    Build(SwapArgs),
    Compare(SwapArgs),
    Sample {
        #[command(flatten)]
        swap: SwapArgs,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        seed: u64,
        /// Tallied temperature level, 2..=d or "last".
        #[arg(long, default_value = "last")]
        coordinate: String,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: 2, stdout: String::new(), stderr: text }
            } else {
                Outcome { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    if let Err(e) = configure_threads() {
        return failure(e);
    }
    match dispatch(&cli.command) {
        Ok(value) => {
            let stdout = match cli.output {
                OutputMode::Json => io::render(&value),
                OutputMode::Table => Ok(io::render_table(&value)),
            };
            match stdout {
                Ok(s) => Outcome { code: 0, stdout: s + "\n", stderr: String::new() },
                Err(e) => failure(e),
            }
        }
        Err(e) => failure(e),
    }
}

fn failure(e: Error) -> Outcome {
    if e.is_argument_error() {
        let usage = Cli::command().render_usage().to_string();
        return Outcome { code: 2, stdout: String::new(), stderr: format!("error: {e}\n\n{usage}\n") };
    }
    let body = json!({ "error": e.kind(), "detail": e.to_string() });
    Outcome { code: 1, stdout: format!("{body}\n"), stderr: String::new() }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("MCGEO_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::arg(format!("MCGEO_THREADS must be a non-negative integer, got {raw:?}")))?;
    // a second configuration in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn load_with_pi(args: &ChainArgs) -> Result<(StochasticMatrix, Distribution)> {
    let (p, doc_pi) = io::load_chain(&args.p)?;
    let pi = match (&args.pi, doc_pi) {
        (Some(path), _) => io::load_distribution(path, Some(p.space()))?,
        (None, Some(pi)) => pi,
        (None, None) => stationary_distribution(&p)?,
    };
    Ok((p, pi))
}

fn generator(kind: FKind, alpha: Option<f64>) -> Result<DivergenceGenerator> {
    match (kind, alpha) {
        (FKind::Alpha, Some(a)) => DivergenceGenerator::alpha(a),
        (FKind::Alpha, None) => Err(Error::arg("--f alpha needs --alpha")),
        (_, Some(_)) => Err(Error::arg("--alpha is only valid with the alpha divergence")),
        (FKind::Kl, None) => Ok(DivergenceGenerator::kl()),
        (FKind::Rkl, None) => Ok(DivergenceGenerator::reverse_kl()),
        (FKind::Hellinger, None) => Ok(DivergenceGenerator::squared_hellinger()),
    }
}

fn cover(d: usize, text: &str, r: Option<usize>) -> Result<SubsetCoverSpec> {
    let subsets = parse_blocks(d, text)?;
    match r {
        Some(r) => SubsetCoverSpec::new(d, subsets, r),
        None => SubsetCoverSpec::tight(d, subsets),
    }
}

fn factor_dir(dir: &Path, coords: impl IntoIterator<Item = usize>) -> Result<Vec<StochasticMatrix>> {
    io::load_factor_dir(dir, coords)
}

fn dispatch(cmd: &Command) -> Result<Value> {
    match cmd {
        Command::Divergence { f, alpha, pi, m, l } => {
            let f = generator(*f, *alpha)?;
            let (m, _) = io::load_chain(m)?;
            let (l, _) = io::load_chain(l)?;
            let pi = io::load_distribution(pi, Some(m.space()))?;
            let value = f_div_chains(&pi, &m, &l, &f)?;
            Ok(json!({ "value": value }))
        }
        Command::Project { method, alpha, chain, init, tol, max_iters } => {
            let kind = match method {
                Method::Kl => FKind::Kl,
                Method::Rkl => FKind::Rkl,
                Method::Alpha => FKind::Alpha,
            };
            let f = generator(kind, *alpha)?;
            let mut opts = DescentOptions::default();
            if let Some(t) = tol {
                if !(*t > 0.0 && t.is_finite()) {
                    return Err(Error::arg("--tol must be positive"));
                }
                opts.tol = *t;
            }
            if let Some(k) = max_iters {
                if *k == 0 {
                    return Err(Error::arg("--max-iters must be at least 1"));
                }
                opts.max_iters = *k;
            }
            let (p, pi) = load_with_pi(chain)?;
            let init = match init {
                Some(dir) => Some(factor_dir(dir, 0..p.space().d())?),
                None => None,
            };
            to_value(&coordinate_descent(&p, &pi, &f, init, opts)?)
        }
        Command::Marginal { s, chain } => {
            let (p, pi) = load_with_pi(chain)?;
            let s = CoordinateSubset::parse_one_based(p.space().d(), s)?;
            let ps = keep_in(&p, &pi, &s)?;
            Ok(io::chain_document(&ps, Some(&pi.marginal(&s))))
        }
        Command::Factor { blocks, chain } => {
            let (p, pi) = load_with_pi(chain)?;
            let part = Partition::parse_one_based(p.space().d(), blocks)?;
            Ok(json!({
                "projection": to_value(&partition_projection(&p, &pi, &part)?)?,
                "decomposition": to_value(&independence_decomposition(&p, &pi, &part)?)?,
            }))
        }
        Command::Clique { graph, cliques, chain, candidate } => {
            let adjacency = io::load_graph(graph)?;
            let (p, pi) = load_with_pi(chain)?;
            let cliques = parse_blocks(adjacency.len(), cliques)?;
            let k = cliques.len();
            let cover = CliqueCover::new(adjacency, cliques)?;
            let cand = clique_candidate(&p, &pi, &cover)?;
            let check = match candidate {
                Some(dir) => {
                    let blocks = (1..=k)
                        .map(|c| Ok(io::load_chain(&dir.join(format!("C{c}.json")))?.0))
                        .collect::<Result<Vec<_>>>()?;
                    Some(to_value(&clique_pythagorean_check(&p, &pi, &cover, &blocks)?)?)
                }
                None => None,
            };
            Ok(json!({ "candidate": to_value(&cand)?, "check": check }))
        }
        Command::Check { which } => check(which),
        Command::Scan { functional, chain } => {
            let (p, pi) = load_with_pi(chain)?;
            let g = match functional {
                FunctionalArg::Entropy => Functional::EntropyRate,
                FunctionalArg::Fact => Functional::FactorizabilityDistance,
                FunctionalArg::Ind => Functional::DistanceToIndependence,
            };
            to_value(&modularity_scan(&p, &pi, g)?)
        }
        Command::Sanov { i, chain, factors } => {
            let (p, pi) = load_with_pi(chain)?;
            let d = p.space().d();
            if !(1..=d).contains(i) {
                return Err(Error::arg(format!("--i must be in 1..={d}")));
            }
            let others = factor_dir(factors, (0..d).filter(|&j| j != i - 1))?;
            let rate: ExtReal = sanov_rate(&p, &pi, i - 1, &others)?;
            Ok(json!({ "coordinate": i, "rate": rate }))
        }
        Command::Spectral { chain, cheeger, hitting } => {
            #[derive(Serialize)]
            struct Out {
                #[serde(flatten)]
                report: SpectralReport,
                #[serde(skip_serializing_if = "Option::is_none")]
                hitting: Option<HittingReport>,
            }
            let (p, pi) = load_with_pi(chain)?;
            let report = spectral_report(&p, &pi, *cheeger)?;
            let hitting = if *hitting { Some(hitting_analysis(&p, &pi, 0)?) } else { None };
            to_value(&Out { report, hitting })
        }
        Command::Mix { chain, eps } => {
            if !(*eps > 0.0 && eps.is_finite()) {
                return Err(Error::arg("--eps must be positive"));
            }
            let (p, pi) = load_with_pi(chain)?;
            let t = l2_mixing_time(&p, &pi, *eps)?;
            Ok(json!({ "eps": eps, "t_mix": t }))
        }
        Command::Swap { which } => swap(which),
    }
}

fn check(which: &CheckCommand) -> Result<Value> {
    match which {
        CheckCommand::Partition { s, chain, l } => {
            let (p, pi) = load_with_pi(chain)?;
            let (l, _) = io::load_chain(l)?;
            let s = CoordinateSubset::parse_one_based(p.space().d(), s)?;
            to_value(&partition_lemma_check(&pi, &p, &l, &s)?)
        }
        CheckCommand::Shearer { cover: c, r, chain, factors } => {
            let (p, pi) = load_with_pi(chain)?;
            let d = p.space().d();
            let spec = cover(d, c, *r)?;
            let ls = factor_dir(factors, 0..d)?;
            with_cover(to_value(&shearer_chain_check(&pi, &p, &ls, &spec)?)?, &spec)
        }
        CheckCommand::Han { chain, factors } => {
            let (p, pi) = load_with_pi(chain)?;
            let ls = factor_dir(factors, 0..p.space().d())?;
            to_value(&han_check(&pi, &p, &ls)?)
        }
        CheckCommand::ShearerInd { cover: c, r, chain } => {
            let (p, pi) = load_with_pi(chain)?;
            let spec = cover(p.space().d(), c, *r)?;
            with_cover(to_value(&shearer_independence_check(&pi, &p, &spec)?)?, &spec)
        }
    }
}

// the inequality is only guaranteed for exact covers
fn with_cover(mut report: Value, spec: &SubsetCoverSpec) -> Result<Value> {
    report["r"] = json!(spec.r());
    report["cover_exact"] = json!(spec.is_exact());
    Ok(report)
}

fn swap_config(args: &SwapArgs) -> Result<SwapConfig> {
    if args.n == 0 || args.n > 12 {
        return Err(Error::arg("--N must be in 1..=12"));
    }
    let betas = args
        .betas
        .split(',')
        .map(|b| b.trim().parse::<f64>().map_err(|_| Error::arg(format!("bad inverse temperature {b:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if let Some(d) = args.d {
        if d != betas.len() {
            return Err(Error::arg(format!("--d {d} disagrees with {} values in --betas", betas.len())));
        }
    }
    let energy = io::load_energy(&args.hamiltonian)?;
    if energy.len() != 1 << args.n {
        return Err(Error::arg(format!("hamiltonian has {} energies, need 2^{} = {}", energy.len(), args.n, 1usize << args.n)));
    }
    SwapConfig::hypercube(args.n, energy, betas)
}

fn swap(which: &SwapCommand) -> Result<Value> {
    match which {
        SwapCommand::Build(args) => {
            let cfg = swap_config(args)?;
            let p = build_swapping_matrix(&cfg)?;
            let pi = GibbsLadder::new(&cfg)?.product(&cfg)?;
            Ok(json!({
                "states": p.n(),
                "stationarity_residual": p.stationarity_residual(&pi),
                "detailed_balance_residual": p.detailed_balance_residual(&pi),
                "restriction_residual": restriction_residual(&cfg, &p)?,
                "escape": gamma_escape(&cfg, &p),
                "chain": io::chain_document(&p, Some(&pi)),
            }))
        }
        SwapCommand::Compare(args) => to_value(&speedup_report(&swap_config(args)?)?),
        SwapCommand::Sample { swap, steps, seed, coordinate, replicas } => {
            let cfg = swap_config(swap)?;
            let d = cfg.d();
            let coord = if coordinate == "last" {
                d
            } else {
                coordinate.parse().map_err(|_| Error::arg(format!("--coordinate must be 2..={d} or \"last\"")))?
            };
            if *steps == 0 {
                return Err(Error::arg("--steps must be at least 1"));
            }
            if *replicas == 0 {
                return Err(Error::arg("--replicas must be at least 1"));
            }
            if !(2..=d).contains(&coord) {
                return Err(Error::arg(format!("--coordinate must be in 2..={d}")));
            }
            let target = GibbsLadder::new(&cfg)?.dists[coord - 1].clone();
            let counts = if *replicas == 1 {
                simulate_projection_sampler(&cfg, *seed, *steps, coord)?.counts
            } else {
                simulate_replicas(&cfg, *seed, *steps, coord, *replicas)?
            };
            let empirical =
                Distribution::from_weights(cfg.base_space().clone(), counts.iter().map(|&c| c as f64).collect())?;
            Ok(json!({
                "seed": seed,
                "steps": steps,
                "replicas": replicas,
                "coordinate": coord,
                "counts": counts,
                "empirical": empirical.mass(),
                "target": target.mass(),
                "total_variation": empirical.total_variation(&target),
            }))
        }
    }
}
