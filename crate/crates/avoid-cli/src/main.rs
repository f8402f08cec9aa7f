//! Command-line front end for the digraph reduction toolkit: generators,
//! randomized reductions with verified outputs, the exact small-instance
//! oracle, a standalone verifier, and the cycle-orientation catalog. Every
//! run is seeded and reproducible; graphs travel as arc-list text and each
//! command leaves a JSON report.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use avoid_core::constructions::{
    bipartite_gadget_opts, forest_gadget_opts, layered_gadget_opts, out_arborescence,
    random_regular_digraph, DEFAULT_VERTEX_CAP,
};
use avoid_core::digraph::Digraph;
use avoid_core::io::{emit_digraph, parse_digraph, pattern_name};
use avoid_core::oracle::{
    check_unavoidable, max_f_free_min_outdegree, verify, OracleCaps, OracleError,
    VerificationSpec, Verdict,
};
use avoid_core::patterns::{builtin, builtin_names, enumerate_orientations, Pattern};
use avoid_core::reductions::{
    avoid_directed_cycles, coloring_violations, directed_cycles_up_to, extract_typed,
    majority_3_coloring, pipeline_avoid_c3_c5, tripartite_restrict, typed_violations, GateMode,
    Profile, ReductionReport, TypedPartition,
};
use avoid_core::regular::{
    avoid_short_cycle_regular, layered_partition, layered_violations, regular_avoid,
    regular_degree, undirected_cycles, AvoidBranch, LayeredPartition, RegularError,
    UNDIRECTED_CYCLE_CAP,
};
use avoid_core::resample::ResampleConfig;

#[derive(Parser)]
#[command(
    name = "avoid",
    version,
    about = "Extract subdigraphs of prescribed minimum out-degree avoiding small forbidden orientations"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate host digraphs and lower-bound gadgets
    Gen {
        #[command(subcommand)]
        what: GenCmd,
    },
    /// Run a randomized reduction; the output is independently re-verified
    Reduce {
        #[command(subcommand)]
        what: ReduceCmd,
    },
    /// Check a digraph against explicit requirements
    Verify(VerifyArgs),
    /// Exact exhaustive searches on small hosts
    Oracle {
        #[command(subcommand)]
        what: OracleCmd,
    },
    /// List the orientations of the l-cycle up to isomorphism
    OrientEnum(OrientArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output graph file (arc-list text); stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report path; defaults to `<out>.json` when --out is given
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write a DOT rendering of the output graph
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    /// Enforce the full demand inequalities; honest infeasibility on small inputs
    Strict,
    /// Desk-scale gates; every output still re-verified exactly
    Desk,
}

impl ProfileArg {
    fn mode(self) -> GateMode {
        match self {
            ProfileArg::Strict => GateMode::Strict,
            ProfileArg::Desk => GateMode::Calibrated,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ProfileArg::Strict => "strict",
            ProfileArg::Desk => "desk",
        }
    }

    fn profile(self) -> Profile {
        match self {
            ProfileArg::Strict => Profile::Strict,
            ProfileArg::Desk => Profile::Desk,
        }
    }
}

#[derive(Args)]
struct BudgetArgs {
    /// Keep probability for the resampled arcs
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Trim every out-neighborhood to this size first (0 = use the input's
    /// minimum out-degree, keeping every arc)
    #[arg(long, default_value_t = 0)]
    d_trim: usize,
    /// Resampling round budget per restart
    #[arg(long, default_value_t = 2_000_000)]
    max_rounds: u64,
    /// Independent restarts before giving up
    #[arg(long, default_value_t = 10)]
    restarts: u32,
}

impl BudgetArgs {
    fn config(&self, seed: u64) -> Result<ResampleConfig> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            bail!("--p must be in (0, 1], got {}", self.p);
        }
        if self.max_rounds == 0 || self.restarts == 0 {
            bail!("--max-rounds and --restarts must be positive");
        }
        Ok(ResampleConfig {
            p: self.p,
            d_trim: self.d_trim,
            max_rounds: self.max_rounds,
            restarts: self.restarts,
            seed,
        })
    }

    /// Config for stages that trim first; `--d-trim 0` falls back to the
    /// host's minimum out-degree so the demand gate sees the real degree.
    fn config_trimmed(&self, seed: u64, g: &Digraph) -> Result<ResampleConfig> {
        let mut cfg = self.config(seed)?;
        if cfg.d_trim == 0 {
            cfg.d_trim = g.min_out_degree();
        }
        Ok(cfg)
    }
}

/// Budget flags for the regular-host lane, which resamples every arc of the
/// host directly and never trims.
#[derive(Args)]
struct RegularBudgetArgs {
    /// Keep probability for the resampled arcs
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Resampling round budget per restart
    #[arg(long, default_value_t = 2_000_000)]
    max_rounds: u64,
    /// Independent restarts before giving up
    #[arg(long, default_value_t = 10)]
    restarts: u32,
}

impl RegularBudgetArgs {
    fn config(&self, seed: u64) -> Result<ResampleConfig> {
        BudgetArgs {
            p: self.p,
            d_trim: 0,
            max_rounds: self.max_rounds,
            restarts: self.restarts,
        }
        .config(seed)
    }
}

#[derive(Subcommand)]
enum GenCmd {
    /// Complete d-ary out-tree of height l
    Arborescence {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        l: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Host on which no one-directed K_{a,b}-free subdigraph keeps min out-degree k
    BipartiteGadget {
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        /// Vertex cap for the construction
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: u128,
        /// Override the arborescence height (smaller, non-certifying instances)
        #[arg(long)]
        height: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Layered rooted host blocking directed-cycle avoidance at degree k
    LayeredGadget {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: u128,
        /// Override the recursion depth
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Host certifying the oriented tree in --tree cannot be avoided
    ForestGadget {
        /// Arc-list file holding an oriented tree
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: u128,
        /// Override the layer budget (smaller, non-certifying instances)
        #[arg(long)]
        height: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Random digraph that is d-regular in both directions
    RandomRegular {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Subcommand)]
enum ReduceCmd {
    /// 3-color so every vertex keeps a third of its out-degree across colors,
    /// then keep only cross-color arcs
    MajorityColor {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the coloring as a partition JSON sidecar
        #[arg(long)]
        partition_out: Option<PathBuf>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Majority-color, restrict, then refine into an s-typed spanning subdigraph
    Typed {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        partition_out: Option<PathBuf>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Delete arcs until no directed cycle of the given lengths remains,
    /// keeping min out-degree k
    AvoidDicycles {
        #[arg(long)]
        input: PathBuf,
        /// Cycle lengths to remove
        #[arg(long, value_delimiter = ',', default_values_t = [3usize, 5])]
        lengths: Vec<usize>,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Full chain to a subdigraph free of every orientation of C3 and C5
    /// with min out-degree k
    AvoidC35 {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        partition_out: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Remove every undirected l-cycle from a regular host, keeping min
    /// out-degree k
    RegularCycle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        budget: RegularBudgetArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Partition a regular host into t cyclically-arced classes with unique
    /// in-arcs off the first class
    LayeredPartition {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        partition_out: Option<PathBuf>,
        #[command(flatten)]
        budget: RegularBudgetArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Remove a pattern from a regular host: girth branch for cyclic
    /// patterns, layering for non-grounded forests, refusal otherwise
    RegularAvoid {
        #[arg(long)]
        input: PathBuf,
        /// Builtin pattern name or @path to an arc-list file
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        budget: RegularBudgetArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    /// Required minimum out-degree
    #[arg(long, default_value_t = 0)]
    min_out: usize,
    /// Patterns that must not embed: builtin names or @paths, comma separated
    #[arg(long, value_delimiter = ',')]
    forbid: Vec<String>,
    /// Layered-partition sidecar to check against
    #[arg(long)]
    layered: Option<PathBuf>,
    /// Typed-partition sidecar to check against
    #[arg(long)]
    typed: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CapsArgs {
    #[arg(long, default_value_t = 12)]
    max_vertices: usize,
    #[arg(long, default_value_t = 30)]
    max_arcs: usize,
    #[arg(long, default_value_t = 10_000_000)]
    max_nodes: u64,
}

impl CapsArgs {
    fn caps(&self) -> OracleCaps {
        OracleCaps {
            max_vertices: self.max_vertices,
            max_arcs: self.max_arcs,
            max_nodes_expanded: self.max_nodes,
        }
    }
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Largest min out-degree over pattern-free sub-digraphs, with a witness
    MaxFfree {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        pattern: String,
        #[command(flatten)]
        caps: CapsArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Does this host certify that the pattern cannot be avoided at degree k?
    Unavoidable {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        caps: CapsArgs,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OrientArgs {
    /// Cycle length (3 to 8)
    #[arg(long)]
    l: usize,
    /// Write one arc-list file per orientation into this directory
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_graph(path: &Path) -> Result<Digraph> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    parse_digraph(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn load_pattern(spec: &str) -> Result<Pattern> {
    if let Some(path) = spec.strip_prefix('@') {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {path}"))?;
        let g = parse_digraph(&text).map_err(|e| anyhow!("{path}: {e}"))?;
        let name = pattern_name(&text).unwrap_or("custom").to_string();
        return Ok(Pattern::new(name, g));
    }
    builtin(spec).map_err(|e| {
        anyhow!("{e}; builtin patterns include {}", builtin_names().join(", "))
    })
}

fn dot_string(g: &Digraph) -> String {
    let mut s = String::from("digraph g {\n");
    for v in 0..g.n() {
        s.push_str(&format!("  {v};\n"));
    }
    for (u, v) in g.arcs() {
        s.push_str(&format!("  {u} -> {v};\n"));
    }
    s.push_str("}\n");
    s
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

struct Run {
    command: String,
    profile: Option<&'static str>,
    seed: Option<u64>,
    params: Value,
    /// The output graph; failed reductions produce no graph artifact.
    graph: Option<Digraph>,
    /// Commands like verify keep the graph for report stats without
    /// re-emitting it.
    emit_graph: bool,
    checks: Vec<Value>,
    rounds: u64,
    verified: bool,
}

impl Run {
    fn new(command: &str) -> Self {
        Run {
            command: command.into(),
            profile: None,
            seed: None,
            params: json!({}),
            graph: None,
            emit_graph: true,
            checks: Vec::new(),
            rounds: 0,
            verified: true,
        }
    }

    fn check(&mut self, name: &str, pass: bool, detail: Option<String>) {
        self.verified &= pass;
        self.checks.push(json!({ "name": name, "pass": pass, "detail": detail }));
    }

    fn fail(&mut self, name: &str, detail: String) {
        self.check(name, false, Some(detail));
    }

    fn stage_reports(&mut self, reports: &[ReductionReport]) {
        for r in reports {
            self.rounds += r.rounds;
            let detail = if r.violations.is_empty() {
                format!(
                    "m {} -> {}, min out-degree {} -> {}",
                    r.m_before, r.m, r.min_out_before, r.min_out_after
                )
            } else {
                r.violations.join("; ")
            };
            self.check(&r.stage, r.verified, Some(detail));
        }
    }

    /// Writes the graph and report artifacts and prints a summary line.
    /// Exit code 0 when everything verified, 1 otherwise.
    fn finish(self, output: &OutputArgs, started: Instant) -> Result<u8> {
        let (n, m, min_out) = match &self.graph {
            Some(g) => (json!(g.n()), json!(g.m()), json!(g.min_out_degree())),
            None => (Value::Null, Value::Null, Value::Null),
        };
        let report = json!({
            "command": self.command,
            "profile": self.profile,
            "seed": self.seed,
            "params": self.params,
            "n": n,
            "m": m,
            "min_out": min_out,
            "verified": self.verified,
            "checks": self.checks,
            "rounds": self.rounds,
            "runtime_ms": started.elapsed().as_millis() as u64,
        });
        let graph_on_stdout =
            self.emit_graph && self.graph.is_some() && output.out.is_none();
        if self.emit_graph {
            if let Some(g) = &self.graph {
                let text = emit_digraph(g);
                match &output.out {
                    Some(path) => fs::write(path, text)
                        .with_context(|| format!("cannot write {}", path.display()))?,
                    None => print!("{text}"),
                }
                if let Some(path) = &output.dot {
                    fs::write(path, dot_string(g))
                        .with_context(|| format!("cannot write {}", path.display()))?;
                }
            }
        }
        let report_path = output
            .report
            .clone()
            .or_else(|| output.out.as_ref().map(|p| sidecar_path(p)));
        match report_path {
            Some(path) => write_json(&path, &report)?,
            None if !graph_on_stdout => println!("{}", serde_json::to_string_pretty(&report)?),
            None => {}
        }
        eprintln!(
            "{}: verified={} ({} checks, {} rounds, {} ms)",
            self.command,
            self.verified,
            self.checks.len(),
            self.rounds,
            started.elapsed().as_millis()
        );
        Ok(if self.verified { 0 } else { 1 })
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut os = out.as_os_str().to_owned();
    os.push(".json");
    PathBuf::from(os)
}

fn run(cmd: Cmd) -> Result<u8> {
    let started = Instant::now();
    match cmd {
        Cmd::Gen { what } => run_gen(what, started),
        Cmd::Reduce { what } => run_reduce(what, started),
        Cmd::Verify(args) => run_verify(args, started),
        Cmd::Oracle { what } => run_oracle(what, started),
        Cmd::OrientEnum(args) => run_orient(args, started),
    }
}

fn run_gen(what: GenCmd, started: Instant) -> Result<u8> {
    match what {
        GenCmd::Arborescence { d, l, output } => {
            let mut run = Run::new("gen arborescence");
            run.params = json!({ "d": d, "l": l });
            match out_arborescence(d, l) {
                Ok(t) => {
                    let structure = t.check();
                    run.check(
                        "layered rooted structure",
                        structure.is_ok(),
                        structure.err(),
                    );
                    run.params["root"] = json!(t.root);
                    run.params["leaves"] = json!(t.bottom.len());
                    run.graph = Some(t.graph);
                }
                Err(e) => run.fail("construction", e.to_string()),
            }
            run.finish(&output, started)
        }
        GenCmd::BipartiteGadget { a, b, k, d, cap, height, output } => {
            let mut run = Run::new("gen bipartite-gadget");
            run.params = json!({ "a": a, "b": b, "k": k, "d": d, "cap": cap.to_string() });
            match bipartite_gadget_opts(a, b, k, d, cap, height) {
                Ok(g) => {
                    run.params["roots"] = json!(g.roots);
                    run.params["height"] = json!(g.height);
                    run.params["height_truncated"] = json!(height.is_some());
                    let stats = g.graph.degree_stats();
                    run.check(
                        "out-degree is d everywhere",
                        stats.min_out == d && stats.max_out == d,
                        Some(format!("min {} max {}", stats.min_out, stats.max_out)),
                    );
                    run.graph = Some(g.graph);
                }
                Err(e) => run.fail("construction", e.to_string()),
            }
            run.finish(&output, started)
        }
        GenCmd::LayeredGadget { k, d, t, cap, depth, output } => {
            let mut run = Run::new("gen layered-gadget");
            run.params = json!({ "k": k, "d": d, "t": t, "cap": cap.to_string() });
            match layered_gadget_opts(k, d, t, cap, depth) {
                Ok(g) => {
                    let structure = g.check();
                    run.check(
                        "layered rooted structure",
                        structure.is_ok(),
                        structure.err(),
                    );
                    run.params["layers"] = json!(g.layers.len());
                    run.params["depth_truncated"] = json!(depth.is_some());
                    run.graph = Some(g.graph);
                }
                Err(e) => run.fail("construction", e.to_string()),
            }
            run.finish(&output, started)
        }
        GenCmd::ForestGadget { tree, d, cap, height, output } => {
            let mut run = Run::new("gen forest-gadget");
            let t = load_graph(&tree)?;
            run.params = json!({
                "tree_n": t.n(), "tree_m": t.m(), "d": d, "cap": cap.to_string(),
                "height_truncated": height.is_some(),
            });
            match forest_gadget_opts(&t, d, cap, height) {
                Ok(g) => {
                    run.params["roots"] = json!(g.roots.len());
                    run.check(
                        "every vertex reaches out-degree d",
                        g.graph.min_out_degree() == d,
                        Some(format!("min out-degree {}", g.graph.min_out_degree())),
                    );
                    run.graph = Some(g.graph);
                }
                Err(e) => run.fail("construction", e.to_string()),
            }
            run.finish(&output, started)
        }
        GenCmd::RandomRegular { n, d, seed, output } => {
            let mut run = Run::new("gen random-regular");
            run.seed = Some(seed);
            run.params = json!({ "n": n, "d": d });
            match random_regular_digraph(n, d, seed) {
                Ok(g) => {
                    let reg = regular_degree(&g);
                    run.check(
                        "d-regular in both directions",
                        reg.as_ref().is_ok_and(|&r| r == d),
                        reg.err().map(|e| e.to_string()),
                    );
                    run.graph = Some(g);
                }
                Err(e) => run.fail("construction", e.to_string()),
            }
            run.finish(&output, started)
        }
    }
}

fn write_partition(path: &Option<PathBuf>, value: Value) -> Result<()> {
    if let Some(path) = path {
        write_json(path, &value)?;
    }
    Ok(())
}

fn run_reduce(what: ReduceCmd, started: Instant) -> Result<u8> {
    match what {
        ReduceCmd::MajorityColor { input, seed, partition_out, budget, output } => {
            let g = load_graph(&input)?;
            let cfg = budget.config(seed)?;
            let mut run = Run::new("reduce majority-color");
            run.seed = Some(seed);
            run.params = json!({ "colors": 3 });
            match majority_3_coloring(&g, &cfg).and_then(|c| {
                let bad = coloring_violations(&g, &c, 3);
                let (restricted, tp) = tripartite_restrict(&g, &c)?;
                Ok((bad, restricted, tp))
            }) {
                Ok((bad, restricted, tp)) => {
                    run.check(
                        "majority condition at every vertex",
                        bad.is_empty(),
                        Some(format!("{} violations", bad.len())),
                    );
                    run.check(
                        "min out-degree at least a third of the input",
                        restricted.min_out_degree() >= g.min_out_degree().div_ceil(3),
                        Some(format!(
                            "{} -> {}",
                            g.min_out_degree(),
                            restricted.min_out_degree()
                        )),
                    );
                    write_partition(&partition_out, serde_json::to_value(&tp)?)?;
                    run.graph = Some(restricted);
                }
                Err(e) => run.fail("coloring", e.to_string()),
            }
            run.finish(&output, started)
        }
        ReduceCmd::Typed { input, s, seed, partition_out, budget, output } => {
            if !(1..=12).contains(&s) {
                bail!("--s must be between 1 and 12, got {s}");
            }
            let g = load_graph(&input)?;
            let cfg = budget.config(seed)?;
            let mut run = Run::new("reduce typed");
            run.seed = Some(seed);
            run.params = json!({ "s": s });
            let result = majority_3_coloring(&g, &cfg)
                .and_then(|c| tripartite_restrict(&g, &c))
                .and_then(|(tri, tp0)| extract_typed(&tri, &tp0, s));
            match result {
                Ok((typed, tp)) => {
                    let viols = typed_violations(&typed, &tp);
                    run.check(
                        "typed-partition invariants",
                        viols.is_empty(),
                        Some(if viols.is_empty() {
                            format!("all reachable sets class-pure to depth {s}")
                        } else {
                            viols.join("; ")
                        }),
                    );
                    let floor = g.min_out_degree().div_ceil(3usize.pow(s as u32 + 1));
                    run.check(
                        "degree floor preserved",
                        typed.min_out_degree() >= floor,
                        Some(format!("{} >= {floor}", typed.min_out_degree())),
                    );
                    write_partition(&partition_out, serde_json::to_value(&tp)?)?;
                    run.graph = Some(typed);
                }
                Err(e) => run.fail("typing", e.to_string()),
            }
            run.finish(&output, started)
        }
        ReduceCmd::AvoidDicycles { input, lengths, k, profile, seed, budget, output } => {
            let g = load_graph(&input)?;
            let cfg = budget.config_trimmed(seed, &g)?;
            let mut run = Run::new("reduce avoid-dicycles");
            run.profile = Some(profile.name());
            run.seed = Some(seed);
            run.params = json!({
                "lengths": lengths, "k": k, "p": cfg.p, "d_trim": cfg.d_trim
            });
            match avoid_directed_cycles(&g, &lengths, k, &cfg, profile.mode()) {
                Ok((out, stats)) => {
                    run.rounds = stats.rounds;
                    let survivors = directed_cycles_up_to(&out, &lengths, 20_000_000)
                        .map(|c| c.len())
                        .unwrap_or(usize::MAX);
                    run.check(
                        "no directed cycles of the given lengths",
                        survivors == 0,
                        Some(format!("{survivors} survivors")),
                    );
                    run.check(
                        "min out-degree target",
                        out.min_out_degree() >= k,
                        Some(format!("{} >= {k}", out.min_out_degree())),
                    );
                    run.graph = Some(out);
                }
                Err(e) => run.fail("cycle removal", e.to_string()),
            }
            run.finish(&output, started)
        }
        ReduceCmd::AvoidC35 { input, k, profile, seed, partition_out, output } => {
            let g = load_graph(&input)?;
            let mut run = Run::new("reduce avoid-c35");
            run.profile = Some(profile.name());
            run.seed = Some(seed);
            run.params = json!({ "k": k });
            match pipeline_avoid_c3_c5(&g, k, profile.profile(), seed) {
                Ok(outcome) => {
                    run.stage_reports(&outcome.reports);
                    write_partition(&partition_out, serde_json::to_value(&outcome.tp)?)?;
                    run.graph = Some(outcome.graph);
                }
                Err((e, reports)) => {
                    run.stage_reports(&reports);
                    run.fail("pipeline", e.to_string());
                }
            }
            run.finish(&output, started)
        }
        ReduceCmd::RegularCycle { input, l, k, profile, seed, budget, output } => {
            let g = load_graph(&input)?;
            let cfg = budget.config(seed)?;
            let mut run = Run::new("reduce regular-cycle");
            run.profile = Some(profile.name());
            run.seed = Some(seed);
            run.params = json!({ "l": l, "k": k, "p": cfg.p });
            match avoid_short_cycle_regular(&g, l, k, &cfg, profile.mode()) {
                Ok((out, stats)) => {
                    run.rounds = stats.rounds;
                    let survivors = undirected_cycles(&out, l, UNDIRECTED_CYCLE_CAP)
                        .map(|c| c.len())
                        .unwrap_or(usize::MAX);
                    run.check(
                        "no undirected cycles of the given length",
                        survivors == 0,
                        Some(format!("{survivors} survivors")),
                    );
                    run.check(
                        "min out-degree target",
                        out.min_out_degree() >= k,
                        Some(format!("{} >= {k}", out.min_out_degree())),
                    );
                    run.graph = Some(out);
                }
                Err(e) => run.fail("cycle removal", e.to_string()),
            }
            run.finish(&output, started)
        }
        ReduceCmd::LayeredPartition { input, t, k, profile, seed, partition_out, budget, output } => {
            let g = load_graph(&input)?;
            let cfg = budget.config(seed)?;
            let mut run = Run::new("reduce layered-partition");
            run.profile = Some(profile.name());
            run.seed = Some(seed);
            run.params = json!({ "t": t, "k": k });
            match layered_partition(&g, t, k, &cfg, profile.mode()) {
                Ok((out, lp, stats)) => {
                    run.rounds = stats.rounds;
                    let viols = layered_violations(&out, &lp);
                    run.check(
                        "layered-partition invariants",
                        viols.is_empty(),
                        Some(if viols.is_empty() {
                            format!("{} classes", lp.t)
                        } else {
                            viols.join("; ")
                        }),
                    );
                    run.check(
                        "min out-degree target",
                        out.min_out_degree() >= k,
                        Some(format!("{} >= {k}", out.min_out_degree())),
                    );
                    write_partition(&partition_out, serde_json::to_value(&lp)?)?;
                    run.graph = Some(out);
                }
                Err(e) => run.fail("layering", e.to_string()),
            }
            run.finish(&output, started)
        }
        ReduceCmd::RegularAvoid { input, pattern, k, profile, seed, budget, output } => {
            let g = load_graph(&input)?;
            let f = load_pattern(&pattern)?;
            let cfg = budget.config(seed)?;
            let mut run = Run::new("reduce regular-avoid");
            run.profile = Some(profile.name());
            run.seed = Some(seed);
            run.params = json!({ "pattern": f.name, "k": k });
            match regular_avoid(&g, &f, k, &cfg, profile.mode()) {
                Ok(outcome) => {
                    run.rounds = outcome.stats.rounds;
                    run.params["branch"] = match &outcome.branch {
                        AvoidBranch::ShortCycle { l } => json!({ "kind": "short-cycle", "l": l }),
                        AvoidBranch::Layered { partition } => {
                            json!({ "kind": "layered", "t": partition.t })
                        }
                    };
                    let hit = avoid_core::patterns::find_pattern(&outcome.graph, &f.graph);
                    run.check(
                        "output is pattern-free",
                        hit.is_none(),
                        hit.map(|phi| format!("embedding at {phi:?}")),
                    );
                    run.check(
                        "min out-degree target",
                        outcome.graph.min_out_degree() >= k,
                        Some(format!("{} >= {k}", outcome.graph.min_out_degree())),
                    );
                    run.graph = Some(outcome.graph);
                }
                Err(RegularError::NotRegularAvoidable(cert)) => {
                    run.params["certificate"] = json!(format!("{cert:?}"));
                    run.fail(
                        "pattern is removable from regular hosts",
                        "the pattern is a grounded forest; no arc deletion on a regular host can remove it"
                            .into(),
                    );
                }
                Err(e) => run.fail("avoidance", e.to_string()),
            }
            run.finish(&output, started)
        }
    }
}

fn run_verify(args: VerifyArgs, started: Instant) -> Result<u8> {
    let g = load_graph(&args.input)?;
    let mut forbidden = Vec::new();
    for spec in &args.forbid {
        forbidden.push(load_pattern(spec)?);
    }
    let layered: Option<LayeredPartition> = match &args.layered {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            Some(serde_json::from_str(&text)?)
        }
        None => None,
    };
    let typed: Option<TypedPartition> = match &args.typed {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            Some(serde_json::from_str(&text)?)
        }
        None => None,
    };
    let spec = VerificationSpec { min_out_degree: args.min_out, forbidden, layered, typed };
    let report = verify(&g, &spec);
    let mut run = Run::new("verify");
    run.params = json!({
        "min_out": args.min_out,
        "forbid": args.forbid,
    });
    for c in &report.checks {
        run.check(&c.name, c.pass, c.detail.clone());
    }
    run.graph = Some(g);
    run.emit_graph = false;
    let out = OutputArgs { out: None, report: args.report, dot: None };
    run.finish(&out, started)
}

fn run_oracle(what: OracleCmd, started: Instant) -> Result<u8> {
    match what {
        OracleCmd::MaxFfree { input, pattern, caps, output } => {
            let g = load_graph(&input)?;
            let f = load_pattern(&pattern)?;
            let mut run = Run::new("oracle max-ffree");
            run.params = json!({ "pattern": f.name });
            match max_f_free_min_outdegree(&g, &f.graph, &caps.caps()) {
                Ok(r) => {
                    run.params["value"] = json!(r.value);
                    run.params["witness_vertices"] = json!(r.vertices);
                    run.params["nodes_expanded"] = json!(r.nodes_expanded);
                    run.check(
                        "witness attains the value and avoids the pattern",
                        r.witness.min_out_degree() == r.value
                            && avoid_core::patterns::find_pattern(&r.witness, &f.graph).is_none(),
                        None,
                    );
                    run.graph = Some(r.witness);
                }
                Err(e @ OracleError::InvalidInput(_)) => return Err(anyhow!(e.to_string())),
                Err(e) => run.fail("search", e.to_string()),
            }
            run.finish(&output, started)
        }
        OracleCmd::Unavoidable { input, pattern, k, caps, report } => {
            let g = load_graph(&input)?;
            let f = load_pattern(&pattern)?;
            let mut run = Run::new("oracle unavoidable");
            run.params = json!({ "pattern": f.name, "k": k });
            match check_unavoidable(&g, &f, k, &caps.caps()) {
                Verdict::UnavoidableWitness { value } => {
                    run.params["verdict"] = json!("unavoidable_witness");
                    run.params["value"] = json!(value);
                    run.check(
                        "every pattern-free subdigraph drops below k",
                        true,
                        Some(format!("best pattern-free min out-degree is {value}")),
                    );
                }
                Verdict::AvoidableHere { value, vertices, .. } => {
                    run.params["verdict"] = json!("avoidable_here");
                    run.params["value"] = json!(value);
                    run.params["witness_vertices"] = json!(vertices);
                    run.check(
                        "host does not certify unavoidability",
                        true,
                        Some(format!("a pattern-free subdigraph keeps min out-degree {value}")),
                    );
                }
                Verdict::Unknown { reason } => {
                    run.params["verdict"] = json!("unknown");
                    run.fail("search", reason);
                }
            }
            run.graph = Some(g);
            run.emit_graph = false;
            let out = OutputArgs { out: None, report, dot: None };
            run.finish(&out, started)
        }
    }
}

fn run_orient(args: OrientArgs, started: Instant) -> Result<u8> {
    if !(3..=8).contains(&args.l) {
        bail!("--l must be between 3 and 8, got {}", args.l);
    }
    let pats = enumerate_orientations(args.l);
    let mut run = Run::new("orient-enum");
    run.params = json!({
        "l": args.l,
        "count": pats.len(),
        "orientations": pats
            .iter()
            .map(|p| json!({
                "name": p.name,
                "arcs": p.graph.arcs().collect::<Vec<_>>(),
            }))
            .collect::<Vec<_>>(),
    });
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for p in &pats {
            let path = dir.join(format!("{}.graph", p.name));
            fs::write(&path, avoid_core::io::emit_pattern(&p.name, &p.graph))
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    run.check("catalog is nonempty", !pats.is_empty(), None);
    let out = OutputArgs { out: None, report: args.report, dot: None };
    run.finish(&out, started)
}
