use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;
use serde_json::{json, Value};

use hypermatch_core::constructions::{
    counterexample_graph, counterexample_stats, extendable_paper, extendable_search,
    regular_linear, tower_build, tower_stats, ExtendableGraph, TowerArithmetic,
    DEFAULT_MAX_VERTICES, DEFAULT_TOWER_BITS,
};
use hypermatch_core::count::{self, CountSummary, RatioJson, DEFAULT_COUNT_BUDGET};
use hypermatch_core::dynamics::{
    self, decimal_ceil, decimal_floor, decimal_round, parse_rational, DynParams, Side, DEFAULT_PREC,
};
use hypermatch_core::sample::{self, ExactSampler, GlauberChain};
use hypermatch_core::walktree::{self, DEFAULT_MAX_NODES};
use hypermatch_core::{CountOptions, Error, Hypergraph, VertexOrdering};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "hypermatch", version, about = "Exact matching statistics for k-uniform hypergraphs")]
struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate hypergraphs.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Matching counts by size.
    Count(CountArgs),
    /// Matching polynomial and matching-generating polynomial.
    Poly(PolyArgs),
    /// Probability that a uniform random matching avoids vertices.
    Prob(ProbArgs),
    /// Conflict-free walk tree of a rooted hypergraph.
    Walktree(WalktreeArgs),
    /// Check identities on an instance.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Fixed points and iteration of the tower maps.
    #[command(subcommand)]
    Dynamics(DynamicsCommand),
    /// Sample uniform random matchings.
    Sample(SampleArgs),
    /// Summary reports.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Text,
    Json,
}

#[derive(Args)]
struct GraphOut {
    #[arg(long, value_enum, default_value = "text")]
    format: GraphFormat,
}

#[derive(Args)]
struct Budget {
    /// Counting recursion node limit (default: $HYPERMATCH_BUDGET or 10^8).
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct Base {
    /// Base hypergraph file.
    #[arg(long)]
    base: PathBuf,
    /// Designated vertex of the base (default: the vertex labelled `head`).
    #[arg(long)]
    head: Option<usize>,
    #[arg(long)]
    d: usize,
    /// Require the base to be d-extendable and linear.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum GenCommand {
    /// d-regular linear k-graph on k^d vertices.
    Regular {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_VERTICES)]
        max_vertices: usize,
        #[command(flatten)]
        out: GraphOut,
    },
    /// Smallest d-extendable linear k-graph found by exhaustive search.
    ExtendableSearch {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 30)]
        max_n: usize,
        #[command(flatten)]
        out: GraphOut,
    },
    /// (k*level+1)-extendable linear k-graph from the inductive recipe.
    ExtendablePaper {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_VERTICES)]
        max_vertices: usize,
        #[command(flatten)]
        out: GraphOut,
    },
    /// Iterated extension S_d^(levels) of a base graph.
    Tower {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        levels: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_VERTICES)]
        max_vertices: usize,
        #[command(flatten)]
        out: GraphOut,
    },
    /// Regular counterexample around S_d^(levels) of a base graph.
    Counterexample {
        #[command(flatten)]
        base: Base,
        #[arg(long, default_value_t = 0)]
        levels: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_VERTICES)]
        max_vertices: usize,
        #[command(flatten)]
        out: GraphOut,
    },
}

#[derive(Args)]
struct CountArgs {
    input: PathBuf,
    #[command(flatten)]
    budget: Budget,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolyFormArg {
    Defect,
    Generating,
    Both,
}

#[derive(Args)]
struct PolyArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    form: PolyFormArg,
    #[command(flatten)]
    budget: Budget,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Brute,
    Recursion,
    Walktree,
    Montecarlo,
}

#[derive(Args)]
struct ProbArgs {
    input: PathBuf,
    /// Vertices that must be uncovered.
    #[arg(long, value_delimiter = ',', required = true)]
    avoid: Vec<usize>,
    /// Vertices conditioned to be uncovered.
    #[arg(long, value_delimiter = ',')]
    given: Vec<usize>,
    #[arg(long, value_enum, default_value = "brute")]
    method: Method,
    /// Vertex ordering as a permutation (rank order), for recursion and walktree.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<usize>>,
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    max_nodes: usize,
    /// Chain length for montecarlo.
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    /// Recorded states for montecarlo.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Required for montecarlo.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    budget: Budget,
}

#[derive(Args)]
struct WalktreeArgs {
    input: PathBuf,
    #[arg(long)]
    root: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    max_nodes: usize,
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<usize>>,
    /// Where to write the node -> walk map.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    #[command(flatten)]
    out: GraphOut,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// m(H - v) m(T) = m(H) m(T - root) for walk trees T.
    Godsil {
        input: PathBuf,
        /// Root vertex (default: every vertex).
        #[arg(long)]
        root: Option<usize>,
        /// Orderings per root: the identity, then random ones.
        #[arg(long, default_value_t = 1)]
        orders: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
        max_nodes: usize,
        #[command(flatten)]
        budget: Budget,
    },
    /// Polynomial identities: both forms agree, the vertex recursion, and the
    /// product rule against a second hypergraph.
    Identity {
        input: PathBuf,
        #[arg(long)]
        with: Option<PathBuf>,
        #[command(flatten)]
        budget: Budget,
    },
    /// P(a, b uncovered) = P(a uncovered) P(b uncovered | a uncovered).
    Chain {
        input: PathBuf,
        #[arg(long)]
        a: Option<usize>,
        #[arg(long)]
        b: Option<usize>,
        #[command(flatten)]
        budget: Budget,
    },
    /// Lower bound 1/(d+1) on every avoidance probability and the average
    /// matching size bound, for d-regular linear input.
    Bounds {
        input: PathBuf,
        #[command(flatten)]
        budget: Budget,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum DynamicsCommand {
    /// Certified enclosures of α, β and γ.
    FixedPoints {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: u64,
        #[arg(long, default_value_t = DEFAULT_PREC)]
        prec: u32,
        #[arg(long, value_enum, default_value = "csv")]
        format: TableFormat,
    },
    /// Iterate f_d from p0.
    Iterate {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        p0: String,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        #[arg(long, default_value = "1e-12")]
        tol: String,
        #[arg(long, default_value_t = DEFAULT_PREC)]
        prec: u32,
    },
    /// Fixed points over a range of d; also reports the smallest d with three.
    Scan {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        d_from: u64,
        #[arg(long)]
        d_to: u64,
        #[arg(long, default_value_t = 1)]
        d_step: u64,
        #[arg(long, default_value_t = 96)]
        prec: u32,
        #[arg(long, value_enum, default_value = "csv")]
        format: TableFormat,
    },
    /// Sign of f_d(x) - x on each interval between fixed points.
    Signs {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: u64,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_PREC)]
        prec: u32,
    },
}

#[derive(Args)]
struct SampleArgs {
    input: PathBuf,
    #[arg(long, conflicts_with = "glauber", required_unless_present = "glauber")]
    exact: bool,
    #[arg(long)]
    glauber: bool,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    /// Chain length for --glauber.
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    #[command(flatten)]
    budget: Budget,
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Head probabilities along a tower and the resulting regular counterexample.
    KahnGap {
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Default: the smallest d with three certified fixed points.
        #[arg(long)]
        d: Option<u64>,
        #[arg(long, default_value = "1")]
        p0: String,
        #[arg(long, default_value = "1/10")]
        epsilon: String,
        #[arg(long, default_value = "1e-6")]
        tol: String,
        #[arg(long, default_value_t = 20_000)]
        max_levels: usize,
        #[arg(long, default_value_t = DEFAULT_PREC)]
        prec: u32,
    },
    /// Closed-form statistics of the counterexample for a head probability p.
    Counterexample {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: String,
        #[arg(long, default_value = "1/10")]
        epsilon: String,
    },
}

enum Failure {
    Core(Error),
    Io(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 8,
            Failure::Input(_) => 3,
            Failure::Core(e) => match e {
                Error::BudgetExceeded { .. } => 4,
                Error::DisjointnessViolated(_) | Error::InvalidWalk(_) | Error::NotAHypertree => 5,
                Error::NotExtendable(_) | Error::NotFound { .. } | Error::ConstructionAmbiguous(_) => 6,
                Error::RationalBlowup { .. } | Error::DomainError(_) | Error::NoThreeFixedPoints { .. } => 7,
                _ => 3,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Io(m) | Failure::Input(m) => m.clone(),
        }
    }
}

/// Command output; `passed` is false when a requested check failed.
struct Output {
    body: String,
    passed: bool,
}

impl Output {
    fn json(v: &impl Serialize) -> Self {
        Output {
            body: serde_json::to_string_pretty(v).expect("serializable") + "\n",
            passed: true,
        }
    }

    fn checked(v: &impl Serialize, passed: bool) -> Self {
        Output {
            passed,
            ..Self::json(v)
        }
    }

    fn text(body: String) -> Self {
        Output { body, passed: true }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli.command).and_then(|out| {
        emit(cli.out.as_deref(), &out.body)?;
        Ok(out.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(9),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn emit(path: Option<&Path>, body: &str) -> Res<()> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn read_input(path: &Path) -> Res<String> {
    let io_err = |e: io::Error| Failure::Io(format!("{}: {e}", path.display()));
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(io_err)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(io_err)
    }
}

fn load(path: &Path) -> Res<Hypergraph> {
    Ok(Hypergraph::parse_any(&read_input(path)?)?)
}

fn count_opts(b: &Budget) -> Res<CountOptions> {
    let budget = match b.budget {
        Some(x) => x,
        None => match std::env::var("HYPERMATCH_BUDGET") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| Failure::Input(format!("HYPERMATCH_BUDGET is not an integer: {s:?}")))?,
            Err(_) => DEFAULT_COUNT_BUDGET,
        },
    };
    Ok(CountOptions::with_budget(budget))
}

fn ordering(h: &Hypergraph, order: &Option<Vec<usize>>) -> Res<VertexOrdering> {
    match order {
        Some(perm) => {
            let o = VertexOrdering::from_perm(perm.clone())?;
            if o.len() != h.n() {
                return Err(Error::InvalidOrdering(format!(
                    "ordering has {} vertices, hypergraph has {}",
                    o.len(),
                    h.n()
                ))
                .into());
            }
            Ok(o)
        }
        None => Ok(VertexOrdering::identity(h.n())),
    }
}

fn rational(s: &str) -> Res<BigRational> {
    Ok(parse_rational(s)?)
}

fn ratio(r: &BigRational) -> RatioJson {
    r.into()
}

fn graph_output(h: &Hypergraph, out: &GraphOut) -> Output {
    match out.format {
        GraphFormat::Text => Output::text(h.serialize()),
        GraphFormat::Json => Output::json(&h.to_json()),
    }
}

fn run(command: Command) -> Res<Output> {
    match command {
        Command::Gen(g) => run_gen(g),
        Command::Count(a) => {
            let h = load(&a.input)?;
            let c = count::match_coeffs(&h, count_opts(&a.budget)?)?;
            Ok(Output::json(&CountSummary::new(&c)))
        }
        Command::Poly(a) => run_poly(a),
        Command::Prob(a) => run_prob(a),
        Command::Walktree(a) => run_walktree(a),
        Command::Verify(v) => run_verify(v),
        Command::Dynamics(d) => run_dynamics(d),
        Command::Sample(a) => run_sample(a),
        Command::Report(r) => run_report(r),
    }
}

fn load_base(b: &Base) -> Res<ExtendableGraph> {
    let h = load(&b.base)?;
    let head = match b.head {
        Some(v) => v,
        None => h
            .find_label("head")
            .ok_or_else(|| Failure::Input("no --head given and no vertex labelled head".into()))?,
    };
    let g = h.with_labels(BTreeMap::new())?;
    Ok(if b.strict {
        ExtendableGraph::new(g, head, b.d)?
    } else {
        ExtendableGraph::designated(g, head, b.d)?
    })
}

fn run_gen(g: GenCommand) -> Res<Output> {
    match g {
        GenCommand::Regular {
            k,
            d,
            max_vertices,
            out,
        } => Ok(graph_output(&regular_linear(k, d, max_vertices)?, &out)),
        GenCommand::ExtendableSearch { k, d, max_n, out } => {
            Ok(graph_output(&extendable_search(k, d, max_n)?.labelled()?, &out))
        }
        GenCommand::ExtendablePaper {
            k,
            level,
            max_vertices,
            out,
        } => Ok(graph_output(
            &extendable_paper(k, level, max_vertices)?.labelled()?,
            &out,
        )),
        GenCommand::Tower {
            base,
            levels,
            max_vertices,
            out,
        } => {
            let f = load_base(&base)?;
            let t = tower_build(&f, levels, max_vertices)?;
            let h = if levels == 0 { t.labelled()? } else { t.into_graph() };
            Ok(graph_output(&h, &out))
        }
        GenCommand::Counterexample {
            base,
            levels,
            max_vertices,
            out,
        } => {
            let f = load_base(&base)?;
            let h0 = tower_build(&f, levels, max_vertices)?;
            Ok(graph_output(&counterexample_graph(&h0, max_vertices)?, &out))
        }
    }
}

fn poly_json(p: &count::MatchingPolynomial) -> Value {
    json!({
        "form": p.form,
        "k": p.k,
        "n": p.n,
        "coeffs": p.coeffs.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "text": p.poly().to_string(),
    })
}

fn run_poly(a: PolyArgs) -> Res<Output> {
    let h = load(&a.input)?;
    let c = count::match_coeffs(&h, count_opts(&a.budget)?)?;
    let v = match a.form {
        PolyFormArg::Defect => poly_json(&c.matching_polynomial()),
        PolyFormArg::Generating => poly_json(&c.generating_polynomial()),
        PolyFormArg::Both => json!({
            "defect": poly_json(&c.matching_polynomial()),
            "generating": poly_json(&c.generating_polynomial()),
        }),
    };
    Ok(Output::json(&v))
}

/// Chain rule over `avoid` on `H - given`, one vertex at a time. `single`
/// receives the current deletion and the surviving id of the next vertex.
fn chained(
    h: &Hypergraph,
    avoid: &[usize],
    given: &[usize],
    mut single: impl FnMut(&Hypergraph, usize, &[Option<usize>]) -> Res<BigRational>,
) -> Res<BigRational> {
    let mut removed = given.to_vec();
    let mut acc = BigRational::one();
    for &w in avoid {
        let del = h.delete_vertices(&removed)?;
        let v = del.old_to_new[w].expect("avoided vertex is not deleted");
        acc *= single(&del.graph, v, &del.old_to_new)?;
        removed.push(w);
    }
    Ok(acc)
}

fn validate_sets(h: &Hypergraph, avoid: &[usize], given: &[usize]) -> Res<()> {
    for &v in avoid.iter().chain(given) {
        if v >= h.n() {
            return Err(Error::UnknownVertex(v).into());
        }
    }
    if let Some(&v) = avoid.iter().find(|v| given.contains(v)) {
        return Err(Error::DisjointnessViolated(v).into());
    }
    let mut seen = avoid.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != avoid.len() {
        return Err(Failure::Input("--avoid lists a vertex twice".into()));
    }
    Ok(())
}

/// The ordering induced on the surviving vertices of a deletion.
fn restrict(order: &VertexOrdering, old_to_new: &[Option<usize>], n: usize) -> VertexOrdering {
    let perm: Vec<usize> = order
        .perm()
        .iter()
        .filter_map(|&v| old_to_new[v])
        .collect();
    debug_assert_eq!(perm.len(), n);
    VertexOrdering::from_perm(perm).expect("restriction of a permutation")
}

fn run_prob(a: ProbArgs) -> Res<Output> {
    let h = load(&a.input)?;
    validate_sets(&h, &a.avoid, &a.given)?;
    let opts = count_opts(&a.budget)?;
    let order = ordering(&h, &a.order)?;
    let method = match a.method {
        Method::Brute => "brute",
        Method::Recursion => "recursion",
        Method::Walktree => "walktree",
        Method::Montecarlo => "montecarlo",
    };
    if a.method == Method::Montecarlo {
        let seed = a
            .seed
            .ok_or_else(|| Failure::Input("--method montecarlo requires --seed".into()))?;
        let del = h.delete_vertices(&a.given)?;
        let avoid: Vec<usize> = a.avoid.iter().map(|&w| del.old_to_new[w].unwrap()).collect();
        let est = sample::mc_estimate_avoid_all(&del.graph, &avoid, a.steps, a.samples, seed)?;
        return Ok(Output::json(&json!({
            "method": method,
            "estimate": est.estimate,
            "stderr": est.stderr,
            "samples": est.samples,
            "steps": est.steps,
            "seed": seed,
        })));
    }
    let value = match a.method {
        Method::Brute => count::prob_avoid(&h, &a.avoid, &a.given, opts)?.into_value(),
        Method::Recursion => {
            let budget = opts.budget;
            chained(&h, &a.avoid, &a.given, |g, v, old_to_new| {
                let o = restrict(&order, old_to_new, g.n());
                Ok(walktree::prob_via_recursion(g, v, &o, budget)?.into_value())
            })?
        }
        Method::Walktree => {
            chained(&h, &a.avoid, &a.given, |g, v, old_to_new| {
                let o = restrict(&order, old_to_new, g.n());
                let wt = walktree::build_walk_tree(g, v, &o, a.max_nodes)?;
                Ok(walktree::prob_on_hypertree(wt.tree(), wt.root())?.into_value())
            })?
        }
        Method::Montecarlo => unreachable!(),
    };
    Ok(Output::json(&json!({
        "method": method,
        "prob": ratio(&value),
        "decimal": decimal_round(&value, 12),
    })))
}

fn run_walktree(a: WalktreeArgs) -> Res<Output> {
    let h = load(&a.input)?;
    let order = ordering(&h, &a.order)?;
    let wt = walktree::build_walk_tree(&h, a.root, &order, a.max_nodes)?;
    if let Some(path) = &a.sidecar {
        let body = serde_json::to_string_pretty(&wt.sidecar()).expect("serializable") + "\n";
        fs::write(path, body).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(graph_output(wt.tree(), &a.out))
}

fn run_verify(v: VerifyCommand) -> Res<Output> {
    match v {
        VerifyCommand::Godsil {
            input,
            root,
            orders,
            seed,
            max_nodes,
            budget,
        } => {
            let h = load(&input)?;
            let opts = count_opts(&budget)?;
            let roots: Vec<usize> = match root {
                Some(r) if r >= h.n() => return Err(Error::UnknownVertex(r).into()),
                Some(r) => vec![r],
                None => (0..h.n()).collect(),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut orderings = vec![VertexOrdering::identity(h.n())];
            while orderings.len() < orders.max(1) {
                orderings.push(VertexOrdering::random(h.n(), &mut rng));
            }
            let mut results = Vec::new();
            let mut all = true;
            for &r in &roots {
                for o in &orderings {
                    let rep = walktree::verify_godsil(&h, r, o, opts, max_nodes)?;
                    all &= rep.equal;
                    results.push(json!({
                        "root": r,
                        "order": o.perm(),
                        "equal": rep.equal,
                        "tree_nodes": rep.tree_nodes,
                        "tree_edges": rep.tree_edges,
                        "prob_h": ratio(rep.prob_h.value()),
                        "prob_t": ratio(rep.prob_t.value()),
                    }));
                }
            }
            Ok(Output::checked(
                &json!({"equal": all, "checks": results.len(), "results": results}),
                all,
            ))
        }
        VerifyCommand::Identity {
            input,
            with,
            budget,
        } => {
            let h = load(&input)?;
            let opts = count_opts(&budget)?;
            let c = count::match_coeffs(&h, opts)?;
            let m = c.matching_polynomial().poly();
            let q = c.generating_polynomial().poly();
            let forms_agree = count::defect_from_generating(&q, h.n(), h.k()) == m;
            let mut recursion_failures = Vec::new();
            for (v, edges) in h.incidence().iter().enumerate() {
                let hv = count::matching_polynomial(&h.delete_vertices(&[v])?.graph, opts)?.poly();
                let mut rhs = hv.shift(1);
                for &e in edges {
                    let he = count::matching_polynomial(&h.delete_vertices(h.edge(e))?.graph, opts)?;
                    rhs = &rhs - &he.poly();
                }
                if rhs != m {
                    recursion_failures.push(v);
                }
            }
            let product = match with {
                Some(path) => {
                    let other = load(&path)?;
                    let (u, _) = Hypergraph::disjoint_union(&[h.clone(), other.clone()])?;
                    let mu = count::matching_polynomial(&u, opts)?.poly();
                    let mo = count::matching_polynomial(&other, opts)?.poly();
                    Some(mu == &m * &mo)
                }
                None => None,
            };
            let ok = forms_agree && recursion_failures.is_empty() && product != Some(false);
            Ok(Output::checked(
                &json!({
                    "equal": ok,
                    "forms_agree": forms_agree,
                    "vertex_recursion_failures": recursion_failures,
                    "product_rule": product,
                    "polynomial": m.to_string(),
                }),
                ok,
            ))
        }
        VerifyCommand::Chain {
            input,
            a,
            b,
            budget,
        } => {
            let h = load(&input)?;
            let opts = count_opts(&budget)?;
            let pairs: Vec<(usize, usize)> = match (a, b) {
                (Some(a), Some(b)) if a == b => return Err(Failure::Input("--a and --b must differ".into())),
                (Some(a), Some(b)) => vec![(a, b)],
                (None, None) => (0..h.n())
                    .flat_map(|a| (0..h.n()).filter(move |&b| b != a).map(move |b| (a, b)))
                    .collect(),
                _ => return Err(Failure::Input("give both --a and --b, or neither".into())),
            };
            let mut failures = Vec::new();
            for &(a, b) in &pairs {
                let joint = count::prob_avoid(&h, &[a, b], &[], opts)?.into_value();
                let pa = count::prob_avoid(&h, &[a], &[], opts)?.into_value();
                let pba = count::prob_avoid(&h, &[b], &[a], opts)?.into_value();
                if joint != pa * pba {
                    failures.push([a, b]);
                }
            }
            let ok = failures.is_empty();
            Ok(Output::checked(
                &json!({"equal": ok, "checks": pairs.len(), "failures": failures}),
                ok,
            ))
        }
        VerifyCommand::Bounds { input, budget } => {
            let h = load(&input)?;
            let opts = count_opts(&budget)?;
            let r = h.degree_report();
            let d = match (r.is_regular, r.is_linear) {
                (Some(d), true) if d >= 1 => d,
                _ => {
                    return Err(Failure::Input(
                        "bounds apply to d-regular linear hypergraphs only".into(),
                    ))
                }
            };
            let one = BigRational::one();
            let lower = BigRational::new(BigInt::one(), BigInt::from(d + 1));
            let mut below = Vec::new();
            let mut min_prob: Option<BigRational> = None;
            for v in 0..h.n() {
                let p = count::prob_avoid(&h, &[v], &[], opts)?.into_value();
                if p < lower {
                    below.push(v);
                }
                if min_prob.as_ref().is_none_or(|m| p < *m) {
                    min_prob = Some(p);
                }
            }
            let avg = count::avg_matching_size(&h, opts)?;
            let avg_bound = (&one - &lower) * BigRational::new(BigInt::from(h.n()), BigInt::from(h.k()));
            let ok = below.is_empty() && avg <= avg_bound;
            Ok(Output::checked(
                &json!({
                    "passed": ok,
                    "d": d,
                    "lower_bound": ratio(&lower),
                    "min_prob": min_prob.as_ref().map(ratio),
                    "below_bound": below,
                    "avg": ratio(&avg),
                    "avg_bound": ratio(&avg_bound),
                }),
                ok,
            ))
        }
    }
}

fn enclosure_json(e: &dynamics::Enclosure) -> Value {
    serde_json::to_value(e.to_json()).expect("serializable")
}

fn run_dynamics(c: DynamicsCommand) -> Res<Output> {
    match c {
        DynamicsCommand::FixedPoints { k, d, prec, format } => {
            let p = DynParams::new(k, d)?;
            let fp = dynamics::beta_gamma(p, prec)?;
            match format {
                TableFormat::Csv => {
                    let row = dynamics::ScanRow {
                        d,
                        alpha: fp.alpha.clone(),
                        fixed: Some(fp),
                    };
                    Ok(Output::text(format!(
                        "{}\n{}\n",
                        dynamics::CSV_HEADER,
                        dynamics::csv_row(k, &row)
                    )))
                }
                TableFormat::Json => Ok(Output::json(&json!({
                    "k": k,
                    "d": d,
                    "prec": prec,
                    "alpha": enclosure_json(&fp.alpha),
                    "beta": enclosure_json(&fp.beta),
                    "gamma": enclosure_json(&fp.gamma),
                }))),
            }
        }
        DynamicsCommand::Iterate {
            k,
            d,
            p0,
            max_iters,
            tol,
            prec,
        } => {
            let p = DynParams::new(k, d)?;
            let t = dynamics::iterate(p, &rational(&p0)?, max_iters, &rational(&tol)?, prec)?;
            Ok(Output::json(&json!({
                "k": k,
                "d": d,
                "p0": ratio(&t.points[0]),
                "side": t.side,
                "converged": t.converged,
                "iterations": t.points.len() - 1,
                "rounded_from": t.rounded_from,
                "last": decimal_round(t.last(), 30),
                "attractor_distance": t.attractor_distance.as_ref().map(|x| decimal_ceil(x, 30)),
                "points": t.points.iter().map(|x| decimal_round(x, 20)).collect::<Vec<_>>(),
            })))
        }
        DynamicsCommand::Scan {
            k,
            d_from,
            d_to,
            d_step,
            prec,
            format,
        } => {
            if d_step == 0 || d_from > d_to {
                return Err(Failure::Input("empty d range".into()));
            }
            let ds: Vec<u64> = (d_from..=d_to).step_by(d_step as usize).collect();
            let rows = dynamics::scan(k, &ds, prec)?;
            let first = rows.iter().find(|r| r.fixed.is_some()).map(|r| r.d);
            match format {
                TableFormat::Csv => {
                    let mut s = String::from(dynamics::CSV_HEADER);
                    s.push('\n');
                    for r in &rows {
                        s.push_str(&dynamics::csv_row(k, r));
                        s.push('\n');
                    }
                    if let Some(d) = first {
                        eprintln!("smallest d with three fixed points: {d}");
                    }
                    Ok(Output::text(s))
                }
                TableFormat::Json => Ok(Output::json(&json!({
                    "k": k,
                    "first_three_fixed_points": first,
                    "rows": rows.iter().map(|r| json!({
                        "d": r.d,
                        "alpha": enclosure_json(&r.alpha),
                        "beta": r.fixed.as_ref().map(|f| enclosure_json(&f.beta)),
                        "gamma": r.fixed.as_ref().map(|f| enclosure_json(&f.gamma)),
                    })).collect::<Vec<_>>(),
                }))),
            }
        }
        DynamicsCommand::Signs {
            k,
            d,
            samples,
            prec,
        } => {
            let r = dynamics::sign_pattern_check(DynParams::new(k, d)?, samples, prec)?;
            let ok = r.violations.is_empty();
            Ok(Output::checked(&r, ok))
        }
    }
}

fn run_sample(a: SampleArgs) -> Res<Output> {
    let h = load(&a.input)?;
    let mut hist: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut extra = json!({});
    if a.exact {
        let mut s = ExactSampler::new(&h, count_opts(&a.budget)?)?;
        for _ in 0..a.samples {
            *hist.entry(s.sample(&mut rng)?.edges().to_vec()).or_default() += 1;
        }
        extra["N"] = json!(s.total().to_string());
    } else {
        if a.samples == 0 || a.steps == 0 {
            return Err(Failure::Input("--samples and --steps must be positive".into()));
        }
        let mut chain = GlauberChain::new(&h, rng);
        let burn_in = a.steps / 2;
        for _ in 0..burn_in {
            chain.step();
        }
        let stride = ((a.steps - burn_in) / a.samples as u64).max(1);
        for _ in 0..a.samples {
            for _ in 0..stride {
                chain.step();
            }
            *hist.entry(chain.matching().edges().to_vec()).or_default() += 1;
        }
        extra["burn_in"] = json!(burn_in);
        extra["stride"] = json!(stride);
    }
    let counts: Vec<Value> = hist
        .into_iter()
        .map(|(edges, count)| json!({"edges": edges, "count": count}))
        .collect();
    let mut v = json!({
        "method": if a.exact { "exact" } else { "glauber" },
        "seed": a.seed,
        "samples": a.samples,
        "counts": counts,
    });
    if let (Value::Object(dst), Value::Object(src)) = (&mut v, extra) {
        dst.extend(src);
    }
    Ok(Output::json(&v))
}

fn run_report(r: ReportCommand) -> Res<Output> {
    match r {
        ReportCommand::Counterexample { k, d, p, epsilon } => {
            let s = counterexample_stats(k, d, &rational(&p)?, &rational(&epsilon)?)?;
            Ok(Output::json(&s.to_json()))
        }
        ReportCommand::KahnGap {
            k,
            d,
            p0,
            epsilon,
            tol,
            max_levels,
            prec,
        } => kahn_gap(k, d, &rational(&p0)?, &rational(&epsilon)?, &rational(&tol)?, max_levels, prec),
    }
}

fn kahn_gap(
    k: usize,
    d: Option<u64>,
    p0: &BigRational,
    epsilon: &BigRational,
    tol: &BigRational,
    max_levels: usize,
    prec: u32,
) -> Res<Output> {
    let d = match d {
        Some(d) => d,
        None => dynamics::threshold(k, 10_000, prec)?
            .ok_or(Error::NoThreeFixedPoints { k, d: 10_000 })?,
    };
    let params = DynParams::new(k, d)?;
    let fp = dynamics::beta_gamma(params, prec)?;
    // the tower starts above α; a start below α is pushed over by one extension
    let (start, shifted) = match dynamics::side(&fp.alpha, p0) {
        Side::Beta => (p0.clone(), false),
        Side::Gamma => (dynamics::g(params, p0)?, true),
        s => {
            return Err(Error::DomainError(format!("p0 is not separated from α ({s:?})")).into());
        }
    };
    let du = d as usize;
    // double the tower height until both subsequences are within `tol`;
    // exact arithmetic is abandoned for good once it blows up
    let mut arithmetic = TowerArithmetic::Exact {
        max_bits: DEFAULT_TOWER_BITS,
    };
    let mut exact_note = None;
    let mut double_steps = 8usize;
    let (stats, level) = loop {
        let stats = match tower_stats(k, du, &start, 2 * double_steps + 1, arithmetic, prec) {
            Err(e @ Error::RationalBlowup { .. }) => {
                exact_note = Some(e.to_string());
                arithmetic = TowerArithmetic::Rounded {
                    bits: dynamics::ROUNDED_BITS,
                };
                continue;
            }
            r => r?,
        };
        let even = stats.even_gaps.as_ref().expect("β side with certified fixed points");
        let odd = stats.odd_gaps.as_ref().expect("β side with certified fixed points");
        if let Some(level) = (0..odd.len()).find(|&i| even[i] <= *tol && odd[i] <= *tol) {
            break (stats, level);
        }
        if double_steps >= max_levels {
            return Err(Error::DomainError(format!(
                "tower did not reach the attractors within {max_levels} double steps"
            ))
            .into());
        }
        double_steps = (2 * double_steps).min(max_levels);
    };
    let arithmetic = if stats.exact { "exact" } else { "rounded" };
    let even = stats.even_gaps.as_ref().unwrap();
    let odd = stats.odd_gaps.as_ref().unwrap();
    let p_even = &stats.trajectory[2 * level];
    let p_odd = &stats.trajectory[2 * level + 1];
    let ce = counterexample_stats(k, du, p_odd, epsilon)?;
    let one = BigRational::one();
    let dk = BigRational::from_integer(BigInt::from(d));
    let center_bound = &one - (&one + epsilon) / dk.pow(k as i32 - 2);
    let head_bound = (&one + epsilon) / (dk + &one);
    let passed = ce.center_ok && ce.head_ok;
    let f = |x: &BigRational| x.to_f64().unwrap_or(f64::NAN);
    eprintln!("k = {k}, d = {d}, tower level 2L+1 = {}", 2 * level + 1);
    eprintln!("{:<28}{:>14}{:>14}", "quantity", "value", "bound");
    eprintln!("{:<28}{:>14.6}{:>14}", "p_2L (near beta)", f(p_even), "");
    eprintln!("{:<28}{:>14.6}{:>14}", "p_2L+1 (near gamma)", f(p_odd), "");
    eprintln!("{:<28}{:>14.6}{:>14.6}  {}", "P_center  (> bound)", f(&ce.p_center), f(&center_bound), ok_str(ce.center_ok));
    eprintln!("{:<28}{:>14.6}{:>14.6}  {}", "P_head    (< bound)", f(&ce.p_head), f(&head_bound), ok_str(ce.head_ok));
    let body = json!({
        "k": k,
        "d": d,
        "p0": ratio(p0),
        "shifted_start": shifted,
        "alpha": enclosure_json(&fp.alpha),
        "beta": enclosure_json(&fp.beta),
        "gamma": enclosure_json(&fp.gamma),
        "tower": {
            "arithmetic": arithmetic,
            "exact_failure": exact_note,
            "double_steps": level,
            "level_odd": 2 * level + 1,
            "p_even": decimal_round(p_even, 30),
            "p_odd": decimal_round(p_odd, 30),
            "gap_even": decimal_ceil(&even[level], 30),
            "gap_odd": decimal_ceil(&odd[level], 30),
        },
        "counterexample": {
            "p": decimal_round(&ce.p, 30),
            "P_center": decimal_round(&ce.p_center, 30),
            "P_head": decimal_round(&ce.p_head, 30),
            "checks": {
                "center_ok": ce.center_ok,
                "head_ok": ce.head_ok,
                "epsilon": ratio(epsilon),
                "center_bound": decimal_floor(&center_bound, 30),
                "head_bound": decimal_ceil(&head_bound, 30),
            },
        },
        "passed": passed,
    });
    Ok(Output::checked(&body, passed))
}

fn ok_str(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}
