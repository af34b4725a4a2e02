use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use capemb::diamond::gen_diamond;
use capemb::eval::{default_copies, embed, run_eval, suite_case, Embedder, Instance, SUITE};
use capemb::gen::{gen_general_tim, gen_line, gen_lipschitz_caps, gen_points, gen_random_tree, gen_symmetric_tim};
use capemb::io::{read_points, read_reals, read_tree, write_embedding, write_points, write_reals, write_tree};
use capemb::ising::{GeneralTim, SymmetricTim};
use capemb::{CapAssignment, LineMetric, PointSet, RngSeed, WeightedTree};

/// Low-dimensional ℓ1 embeddings of capped metrics.
#[derive(Parser)]
#[command(name = "capemb", version)]
struct Cli {
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of boosted copies (default 64 ceil(log2 n)).
    #[arg(long, global = true)]
    copies: Option<usize>,
    /// Output file (default stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random instance.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Embed an instance into ℓ1.
    #[command(subcommand)]
    Embed(Target),
    /// Same as `embed tree`.
    EmbedTree(TreeArgs),
    /// Same as `embed l1`.
    EmbedL1(L1Args),
    /// Embed and compare against the exact oracle; writes the per-pair CSV.
    Eval(EvalArgs),
}

#[derive(Subcommand)]
enum GenCmd {
    /// Random attachment tree (TSV).
    Tree {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        max_weight: f64,
    },
    /// Random Lipschitz caps for a tree or a line.
    Caps {
        #[arg(long, conflicts_with = "line", required_unless_present = "line")]
        tree: Option<PathBuf>,
        #[arg(long)]
        line: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        root_lo: f64,
        #[arg(long, default_value_t = 4.0)]
        root_hi: f64,
        #[arg(long, default_value_t = 0.0)]
        floor: f64,
    },
    /// Random line locations, one per line.
    Line {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        max_gap: f64,
    },
    /// Random tree Ising model (JSON).
    Tim {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = TimKind::Symmetric)]
        kind: TimKind,
    },
    /// Diamond network: scaled Hamming vectors as points, or samples.
    Diamond {
        #[arg(long)]
        level: usize,
        /// Write this many joint samples of the D-nodes instead.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Uniform random points in `[0, scale]^dim` (CSV).
    Points {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TimKind {
    Symmetric,
    General,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeCap {
    Fixed,
    Lipschitz,
    /// Uncapped isometric caterpillar embedding.
    None,
}

#[derive(Subcommand)]
enum Target {
    /// Line locations with a fixed cap `--m` or Lipschitz caps `--caps`.
    Line(LineArgs),
    /// Weighted tree with a fixed cap, Lipschitz caps or no cap.
    Tree(TreeArgs),
    /// Tree Ising model JSON, symmetric or general.
    Tim(TimArgs),
    /// Capped ℓ1 point set.
    L1(L1Args),
}

#[derive(Args)]
struct LineArgs {
    #[arg(long)]
    locs: PathBuf,
    #[arg(long, conflicts_with = "caps", required_unless_present = "caps")]
    m: Option<f64>,
    #[arg(long)]
    caps: Option<PathBuf>,
}

#[derive(Args)]
struct TreeArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long, value_enum, default_value_t = TreeCap::Fixed)]
    cap: TreeCap,
    /// Cap for `--cap fixed`.
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Cap file for `--cap lipschitz`.
    #[arg(long)]
    caps: Option<PathBuf>,
}

#[derive(Args)]
struct TimArgs {
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct L1Args {
    #[arg(long)]
    points: PathBuf,
    /// The cap `M`.
    #[arg(long)]
    cap: f64,
    /// Buckets per dimension.
    #[arg(long, default_value_t = capemb::capped_l1::DEFAULT_C)]
    c: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Summary JSON destination (default stderr).
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(subcommand)]
    target: EvalTarget,
}

#[derive(Subcommand)]
enum EvalTarget {
    /// Capped line metric.
    Line(LineArgs),
    /// Capped tree metric.
    Tree(TreeArgs),
    /// Disagreement metric of a tree Ising model.
    Tim(TimArgs),
    /// Capped ℓ1 point set.
    L1(L1Args),
    /// Generated instance from the statistical suite.
    Suite {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITE))]
        entry: String,
        #[arg(long)]
        n: usize,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: &Option<PathBuf>, s: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, s).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{s}");
            Ok(())
        }
    }
}

fn load_line(path: &Path) -> Result<LineMetric> {
    Ok(LineMetric::new(read_reals(&read(path)?)?)?)
}

fn load_tree(path: &Path) -> Result<WeightedTree> {
    Ok(read_tree(&read(path)?)?)
}

fn load_points(path: &Path) -> Result<PointSet> {
    Ok(read_points(&read(path)?)?)
}

fn load_tim(path: &Path) -> Result<Instance> {
    let s = read(path)?;
    let v: serde_json::Value = serde_json::from_str(&s).context("parsing model JSON")?;
    if v.get("root_marginal_p0").is_some() {
        Ok(Instance::General(GeneralTim::from_json(&s)?))
    } else {
        Ok(Instance::Symmetric(SymmetricTim::from_json(&s)?))
    }
}

fn line_case(a: &LineArgs) -> Result<(Instance, Embedder)> {
    let line = load_line(&a.locs)?;
    Ok(match (a.m, &a.caps) {
        (Some(m), _) => (Instance::Line { line, caps: None }, Embedder::LineFixed { m }),
        (None, Some(p)) => {
            let caps = CapAssignment::lipschitz_on_line(read_reals(&read(p)?)?, &line)?;
            (Instance::Line { line, caps: Some(caps) }, Embedder::LineLipschitz)
        }
        (None, None) => bail!("give --m or --caps"),
    })
}

fn tree_case(a: &TreeArgs) -> Result<(Instance, Embedder)> {
    let tree = load_tree(&a.tree)?;
    Ok(match a.cap {
        TreeCap::Fixed => (Instance::Tree { tree, caps: None }, Embedder::TreeFixed { m: a.m }),
        TreeCap::None => (Instance::Tree { tree, caps: None }, Embedder::Caterpillar),
        TreeCap::Lipschitz => {
            let p = a.caps.as_ref().context("--cap lipschitz needs --caps")?;
            let caps = CapAssignment::lipschitz_on_tree(read_reals(&read(p)?)?, &tree)?;
            (Instance::Tree { tree, caps: Some(caps) }, Embedder::TreeLipschitz)
        }
    })
}

fn tim_case(a: &TimArgs) -> Result<(Instance, Embedder)> {
    let inst = load_tim(&a.model)?;
    let emb = match inst {
        Instance::General(_) => Embedder::General,
        _ => Embedder::Symmetric,
    };
    Ok((inst, emb))
}

fn l1_case(a: &L1Args) -> Result<(Instance, Embedder)> {
    Ok((Instance::Points(load_points(&a.points)?), Embedder::L1 { m: a.cap, c: a.c }))
}

fn target_case(t: &Target) -> Result<(Instance, Embedder)> {
    match t {
        Target::Line(a) => line_case(a),
        Target::Tree(a) => tree_case(a),
        Target::Tim(a) => tim_case(a),
        Target::L1(a) => l1_case(a),
    }
}

fn run_gen(cli: &Cli, g: &GenCmd) -> Result<String> {
    let seed = RngSeed::new(cli.seed);
    Ok(match g {
        GenCmd::Tree { n, max_weight } => write_tree(&gen_random_tree(*n, *max_weight, seed.named("gen-tree"))?),
        GenCmd::Caps { tree, line, root_lo, root_hi, floor } => {
            let s = seed.named("gen-caps");
            let caps = match (tree, line) {
                (Some(t), _) => gen_lipschitz_caps(&load_tree(t)?, *root_lo, *root_hi, *floor, s)?,
                (None, Some(l)) => capemb::gen::gen_line_caps(&load_line(l)?, *root_lo, *root_hi, *floor, s)?,
                (None, None) => bail!("give --tree or --line"),
            };
            write_reals(caps.caps())
        }
        GenCmd::Line { n, max_gap } => write_reals(gen_line(*n, *max_gap, seed.named("gen-line"))?.locs()),
        GenCmd::Tim { n, kind } => match kind {
            TimKind::Symmetric => gen_symmetric_tim(*n, seed.named("gen-tim"))?.to_json()? + "\n",
            TimKind::General => gen_general_tim(*n, seed.named("gen-tim"))?.to_json()? + "\n",
        },
        GenCmd::Diamond { level, samples } => {
            let net = gen_diamond(*level)?;
            match samples {
                None => {
                    let scale = 1.0 / (1u64 << level) as f64;
                    let rows = (0..net.d_nodes())
                        .map(|i| net.hamming_vector(i).into_iter().map(|x| x * scale).collect())
                        .collect();
                    write_points(&PointSet::new(rows)?)
                }
                Some(k) => {
                    let base = seed.named("gen-diamond");
                    let mut s = String::new();
                    for t in 0..*k {
                        let (d, _) = net.sample(base.derive(t as u64));
                        let line: Vec<String> = d.iter().map(|b| b.to_string()).collect();
                        s.push_str(&line.join(","));
                        s.push('\n');
                    }
                    s
                }
            }
        }
        GenCmd::Points { n, dim, scale } => write_points(&gen_points(*n, *dim, *scale, seed.named("gen-points"))?),
    })
}

fn copies_for(cli: &Cli, inst: &Instance) -> usize {
    cli.copies.unwrap_or_else(|| default_copies(inst.n()))
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let seed = RngSeed::new(cli.seed);
    match &cli.cmd {
        Cmd::Gen(g) => {
            let s = run_gen(&cli, g)?;
            emit(&cli.out, &s)
        }
        Cmd::Embed(_) | Cmd::EmbedTree(_) | Cmd::EmbedL1(_) => {
            let (inst, emb) = match &cli.cmd {
                Cmd::Embed(t) => target_case(t)?,
                Cmd::EmbedTree(a) => tree_case(a)?,
                Cmd::EmbedL1(a) => l1_case(a)?,
                _ => unreachable!(),
            };
            let e = embed(&inst, emb, copies_for(&cli, &inst), seed)?;
            emit(&cli.out, &write_embedding(&e))
        }
        Cmd::Eval(a) => {
            let (inst, emb) = match &a.target {
                EvalTarget::Line(x) => line_case(x)?,
                EvalTarget::Tree(x) => tree_case(x)?,
                EvalTarget::Tim(x) => tim_case(x)?,
                EvalTarget::L1(x) => l1_case(x)?,
                EvalTarget::Suite { entry, n } => suite_case(entry, *n, seed.named("instance"))?,
            };
            let report = run_eval(&inst, emb, copies_for(&cli, &inst), seed.named("embed"))?;
            emit(&cli.out, &report.rows_csv())?;
            let summary = report.summary_json()? + "\n";
            match &a.summary {
                Some(p) => fs::write(p, summary).with_context(|| format!("writing {}", p.display()))?,
                None => eprint!("{summary}"),
            }
            if report.summary.violations > 0 {
                bail!("{} pairs exceed the exact per-run bound", report.summary.violations);
            }
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
