//! Command-line front end. Exit codes: 0 success, 2 validation error,
//! 3 I/O or file-format error, 4 internal invariant breach.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use partree::bounds::{
    doubling_failure_bound, doubling_phi_bound, failure_bound, level_beta, level_sizes,
    summation_lemma_bound, topic_phi_bound, BoundFamily,
};
use partree::experiment::{emit_report, run_experiment, ExperimentConfig, GeneratorKind};
use partree::io::{load_dataset, load_tree, save_dataset, save_tree, DataFormat};
use partree::potential::{log_grid, NeighborOrdering, PotentialProfile};
use partree::{Dataset, Error, PartitionTree, Result, TreeKind};

#[derive(Parser)]
#[command(name = "partree", version, about = "Randomized partition trees for nearest-neighbor search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset (and optionally queries) to disk.
    Gen(GenArgs),
    /// Build a tree over a dataset and save it.
    Build(BuildArgs),
    /// Answer k-NN queries with a saved tree.
    Query(QueryArgs),
    /// Potential profiles of queries against a dataset.
    Phi(PhiArgs),
    /// Measure failure rates against the bound (see `ExperimentConfig`).
    Bench(BenchArgs),
    /// Closed-form bound calculators.
    #[command(subcommand)]
    Bounds(BoundsCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Doubling,
    Topic,
    Adversarial,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Rp,
    Spill,
    VirtualSpill,
}

impl From<Kind> for TreeKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Rp => TreeKind::Rp,
            Kind::Spill => TreeKind::Spill,
            Kind::VirtualSpill => TreeKind::VirtualSpill,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Binary,
}

fn format_for(path: &Path, explicit: Option<Format>) -> DataFormat {
    match explicit {
        Some(Format::Csv) => DataFormat::Csv,
        Some(Format::Binary) => DataFormat::Binary,
        None => DataFormat::from_path(path),
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    generator: Generator,
    #[arg(long)]
    n: usize,
    /// Ambient dimension (vocabulary size for the topic model).
    #[arg(long)]
    d: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    intrinsic_dim: Option<usize>,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    target_length: Option<f64>,
    #[arg(long)]
    spike: Option<f64>,
    /// Output file; `.csv` selects CSV unless --format says otherwise.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also write this many queries from the same distribution.
    #[arg(long, requires = "queries_out")]
    queries: Option<usize>,
    #[arg(long)]
    queries_out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n_o: usize,
    /// Overlap parameter for spill and virtual spill trees.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Write CSV results here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PhiArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Points on the geometric m grid between max(2, k+1) and n.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Report path (JSON); a text table is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    generator: Option<BenchGenerator>,
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n_o: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    c_o: Option<f64>,
    #[arg(long)]
    intrinsic_dim: Option<usize>,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    target_length: Option<f64>,
    #[arg(long)]
    spike: Option<f64>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    query_file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchGenerator {
    Doubling,
    Topic,
    Adversarial,
    ExternalFile,
}

#[derive(Subcommand)]
enum BoundsCommand {
    /// Tree failure bound from each query's potential profile.
    Tree {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        n_o: usize,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Print JSON instead of tables.
        #[arg(long)]
        json: bool,
    },
    /// Potential bound for doubling-measure data.
    DoublingPhi {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d_o: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Potential bound for topic-model data.
    TopicPhi {
        #[arg(long)]
        v: usize,
        /// Smallest expected document length L.
        #[arg(long)]
        length: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0.125)]
        c_o: f64,
    },
    /// Closed-form bound on a geometric level sum.
    Summation {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        d_o: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n_o: usize,
        #[arg(long)]
        with_log: bool,
    },
    /// Failure bound for doubling-measure data.
    DoublingFailure {
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        d_o: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long)]
        n_o: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.125)]
        c_o: f64,
        #[arg(long, value_enum)]
        family: Family,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Spill,
    Rp,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Build(a) => build(a),
        Command::Query(a) => query(a),
        Command::Phi(a) => phi(a),
        Command::Bench(a) => bench(a),
        Command::Bounds(c) => bounds(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load(path: &Path) -> Result<Dataset> {
    load_dataset(path, DataFormat::from_path(path))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.into(),
            source: e,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
        }
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let config = ExperimentConfig {
        generator: match a.generator {
            Generator::Doubling => GeneratorKind::Doubling,
            Generator::Topic => GeneratorKind::Topic,
            Generator::Adversarial => GeneratorKind::Adversarial,
        },
        tree_kind: TreeKind::Rp,
        n: a.n,
        d: a.d,
        n_o: 1,
        alpha: 0.1,
        k: 1,
        trials: 1,
        queries: a.queries.unwrap_or(1),
        delta: 0.05,
        c_o: 0.125,
        seed: a.seed,
        intrinsic_dim: a.intrinsic_dim,
        topics: a.topics,
        target_length: a.target_length,
        spike: a.spike,
        data_path: None,
        query_path: None,
    };
    let (data, queries) = config.materialize()?;
    save_dataset(&data, &a.out, format_for(&a.out, a.format))?;
    if let Some(qp) = &a.queries_out {
        let flat: Vec<f64> = queries.concat();
        let q = Dataset::new(flat, data.dim())?;
        save_dataset(&q, qp, format_for(qp, a.format))?;
    }
    eprintln!("wrote {} points in R^{} to {}", data.len(), data.dim(), a.out.display());
    Ok(())
}

fn build(a: BuildArgs) -> Result<()> {
    let data = load(&a.data)?;
    let tree = PartitionTree::build(a.kind.into(), &data, a.n_o, a.alpha, a.seed)?;
    save_tree(&tree, &a.out)?;
    let s = tree.stats();
    eprintln!(
        "{} tree: depth {}, {} leaves, {} stored indices, largest leaf {}",
        tree.kind(),
        s.depth,
        s.leaf_count,
        s.stored_indices,
        s.max_leaf_size
    );
    Ok(())
}

fn query(a: QueryArgs) -> Result<()> {
    let data = load(&a.data)?;
    let tree = load_tree(&a.tree)?;
    let queries = load(&a.queries)?;
    let mut out = String::from("query,rank,index,distance,leaves_visited,points_scanned\n");
    for (j, q) in queries.rows().enumerate() {
        let res = tree.query(&data, q, a.k)?;
        for (r, (i, d)) in res.indices.iter().zip(&res.distances).enumerate() {
            let _ = writeln!(
                out,
                "{j},{r},{i},{d},{},{}",
                res.leaves_visited, res.points_scanned
            );
        }
    }
    emit(a.out.as_deref(), &out)
}

fn phi(a: PhiArgs) -> Result<()> {
    let data = load(&a.data)?;
    let queries = load(&a.queries)?;
    let lo = 2.max(a.k + 1);
    if data.len() < lo {
        return Err(Error::InvalidParameter(format!(
            "dataset of {} points is too small for k = {}",
            data.len(),
            a.k
        )));
    }
    let grid = log_grid(lo, data.len(), a.grid);
    let mut out = String::from("query,m,phi\n");
    for (j, q) in queries.rows().enumerate() {
        let ordering = NeighborOrdering::new(&data, q)?;
        let profile = PotentialProfile::compute(&ordering, a.k, &grid)?;
        for (m, v) in profile.m_grid().iter().zip(profile.values()) {
            let _ = writeln!(out, "{j},{m},{v}");
        }
    }
    emit(a.out.as_deref(), &out)
}

fn bench(a: BenchArgs) -> Result<()> {
    let mut c = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig {
            generator: GeneratorKind::Doubling,
            tree_kind: TreeKind::Rp,
            n: 0,
            d: 0,
            n_o: 0,
            alpha: 0.1,
            k: 1,
            trials: 100,
            queries: 50,
            delta: 0.05,
            c_o: 0.125,
            seed: a.seed,
            intrinsic_dim: None,
            topics: None,
            target_length: None,
            spike: None,
            data_path: None,
            query_path: None,
        },
    };
    c.seed = a.seed;
    if let Some(g) = a.generator {
        c.generator = match g {
            BenchGenerator::Doubling => GeneratorKind::Doubling,
            BenchGenerator::Topic => GeneratorKind::Topic,
            BenchGenerator::Adversarial => GeneratorKind::Adversarial,
            BenchGenerator::ExternalFile => GeneratorKind::ExternalFile,
        };
    }
    if let Some(k) = a.kind {
        c.tree_kind = k.into();
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = a.$field { c.$field = v; } )* };
    }
    set!(n, d, n_o, alpha, k, trials, queries, delta, c_o);
    macro_rules! set_opt {
        ($($field:ident),*) => { $( if a.$field.is_some() { c.$field = a.$field; } )* };
    }
    set_opt!(intrinsic_dim, topics, target_length, spike);
    if a.data.is_some() {
        c.data_path = a.data.clone();
    }
    if a.query_file.is_some() {
        c.query_path = a.query_file.clone();
    }
    let report = run_experiment(&c)?;
    match &a.out {
        Some(p) => {
            emit_report(&report, p)?;
            eprintln!("wrote {} and its .txt table", p.display());
        }
        None => emit(None, &report.to_table())?,
    }
    Ok(())
}

fn bounds(c: BoundsCommand) -> Result<()> {
    let text = match c {
        BoundsCommand::Tree {
            data,
            queries,
            kind,
            n_o,
            alpha,
            k,
            json,
        } => {
            let data = load(&data)?;
            let queries = load(&queries)?;
            let kind: TreeKind = kind.into();
            let levels = level_sizes(data.len(), n_o, level_beta(kind, alpha), k)?;
            let mut reports = Vec::new();
            for q in queries.rows() {
                let ordering = NeighborOrdering::new(&data, q)?;
                let profile = PotentialProfile::compute(&ordering, k, &levels)?;
                reports.push(failure_bound(&profile, kind, alpha, n_o, data.len(), k)?);
            }
            if json {
                serde_json::to_string_pretty(&reports)
                    .map_err(|e| Error::Invariant(e.to_string()))?
                    + "\n"
            } else {
                reports
                    .iter()
                    .enumerate()
                    .map(|(j, r)| format!("query {j}\n{}", r.to_table()))
                    .collect::<Vec<_>>()
                    .join("\n")
            }
        }
        BoundsCommand::DoublingPhi { m, d_o, delta, k } => {
            format!("{}\n", doubling_phi_bound(m, d_o, delta, k)?)
        }
        BoundsCommand::TopicPhi { v, length, n, m, c_o } => {
            format!("{}\n", topic_phi_bound(v, length, n, m, c_o)?)
        }
        BoundsCommand::Summation {
            a,
            b,
            d_o,
            beta,
            n_o,
            with_log,
        } => format!("{}\n", summation_lemma_bound(a, b, d_o, beta, n_o, with_log)?),
        BoundsCommand::DoublingFailure {
            k,
            d_o,
            alpha,
            n_o,
            delta,
            c_o,
            family,
        } => {
            let family = match family {
                Family::Spill => BoundFamily::Spill,
                Family::Rp => BoundFamily::Rp,
            };
            let v = doubling_failure_bound(k, d_o, alpha, n_o, delta, c_o, family)?;
            format!("{} (raw {})\n", v.clamped, v.raw)
        }
    };
    emit(None, &text)
}
