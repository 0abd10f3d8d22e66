use std::collections::BTreeSet;
use std::error::Error;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use sndp::cost::{format_rational, parse_rational};
use sndp::dp::ec::solve_ecsndp;
use sndp::dp::ec_full::{solve_ecsndp_full, FULL_CELL_BUDGET};
use sndp::dp::reductions::{kvc_root_charge, subset_kvc_reduce};
use sndp::dp::steiner::solve_steiner;
use sndp::dp::vc::solve_vcsndp;
use sndp::dp::DpOptions;
use sndp::gen::random_csp;
use sndp::graph::{check_feasible, parse_instance, solution_json, Group, Instance, Members, Mode, Solution};
use sndp::lp::{build_tree_lp, round_fractional, solve_tree_lp, LpEngine, RoundingOptions};
use sndp::oracle::csp::{csp_to_rgsndp, min_label_optimum, parse_csp, serialize_csp};
use sndp::oracle::{brute_force_optimum, SubsetInstance};
use sndp::tree_instance::{build_tree_instance, TreeLimits};
use sndp::treedec::pace::parse_td;
use sndp::treedec::{decompose, TreeDecomposition};

type Res<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "sndp", version, about = "Survivable network design on graphs of bounded treewidth")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Instance file (`p rgsndp ...` format).
    instance: PathBuf,
    /// Tree decomposition in PACE `.td` format; computed when absent.
    #[arg(long)]
    td: Option<PathBuf>,
    /// Include statistics and wall time in the output.
    #[arg(long)]
    stats: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Exact Steiner tree over the group vertices.
    SolveSteiner {
        #[command(flatten)]
        input: Input,
        /// Write a DOT drawing of the chosen tree.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Exact rooted edge-connectivity SNDP.
    SolveEcsndp {
        #[command(flatten)]
        input: Input,
        /// Use exhaustive set-valued profiles (tiny instances only).
        #[arg(long)]
        full_profiles: bool,
        /// Replace the instance demands by `<vertex> <k>` lines from this file.
        #[arg(long)]
        demands: Option<PathBuf>,
    },
    /// Exact rooted SNDP with vertex costs.
    SolveVcsndp {
        #[command(flatten)]
        input: Input,
        /// Comma-separated roots replacing those of the instance.
        #[arg(long, value_delimiter = ',')]
        roots: Option<Vec<usize>>,
        /// Treat the group vertices as terminals of a Subset-k-VC instance.
        #[arg(long)]
        subset_kvc: bool,
        /// Ask for edge-disjoint instead of vertex-disjoint paths.
        #[arg(long)]
        ec_vertex_costs: bool,
    },
    /// Randomized LP rounding for group demands.
    ApproxRgsndp {
        #[command(flatten)]
        input: Input,
        /// Trials per batch are ceil(c * ln n * ln h); rationals such as 17/2 are accepted.
        #[arg(long, default_value = "8")]
        trials_constant: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Batches allowed beyond the first while groups stay uncovered.
        #[arg(long, default_value_t = 3)]
        extra_batches: usize,
        /// Write the covering LP in CPLEX LP format.
        #[arg(long)]
        lp_export: Option<PathBuf>,
        /// Write the copy-split tree instance; `.json` gives JSON, anything else DOT.
        #[arg(long)]
        materialize: Option<PathBuf>,
        /// Node cap for `--materialize`.
        #[arg(long, default_value_t = 100_000)]
        materialize_cap: usize,
        /// Solve the LP in exact rational arithmetic.
        #[arg(long)]
        exact_lp: bool,
    },
    /// Generate a random Min-k-CSP.
    GenCsp {
        #[arg(long, default_value_t = 3)]
        vars: usize,
        #[arg(long, default_value_t = 3)]
        domain: usize,
        #[arg(long, default_value_t = 3)]
        constraints: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit the reduced network design instance instead of the CSP.
        #[arg(long)]
        reduce: bool,
    },
    /// Exhaustive optimum of an instance, or of a CSP with `--csp`.
    Oracle {
        file: PathBuf,
        /// The input is a CSP; report both optima.
        #[arg(long)]
        csp: bool,
        /// Largest number of priced elements to enumerate.
        #[arg(long, default_value_t = 22)]
        budget: usize,
    },
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load(input: &Input) -> Res<(Instance, TreeDecomposition)> {
    let inst = parse_instance(&read(&input.instance)?).map_err(|e| format!("{}: {e}", input.instance.display()))?;
    let td = match &input.td {
        Some(p) => parse_td(&read(p)?)?,
        None => decompose(&inst.graph, None)?.td,
    };
    Ok((inst, td))
}

fn parse_demands(text: &str) -> Res<Vec<Group>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = || format!("demands line {}: expected `<vertex> <k>`", i + 1);
        if toks.len() != 2 {
            return Err(bad().into());
        }
        let v = toks[0].parse().map_err(|_| bad())?;
        let k = toks[1].parse().map_err(|_| bad())?;
        out.push(Group { members: vec![v], demand: k });
    }
    Ok(out)
}

fn with_groups(inst: &Instance, roots: Vec<usize>, groups: Vec<Group>) -> Res<Instance> {
    let multi = roots.len() > 1;
    Ok(Instance::new(inst.graph.clone(), roots, multi, groups, inst.cost_mode, inst.conn_mode)?)
}

fn report(inst: &Instance, sol: &Solution) -> Res<Value> {
    let rep = check_feasible(inst, sol)?;
    Ok(solution_json(inst, sol, &rep))
}

fn steiner_dot(inst: &Instance, sol: &Solution) -> String {
    let chosen: BTreeSet<usize> = match &sol.members {
        Members::Edges(es) => es.clone(),
        Members::Vertices(_) => BTreeSet::new(),
    };
    let terminals: BTreeSet<usize> = inst.groups.iter().flat_map(|g| g.members.iter().copied()).collect();
    let mut s = String::from("graph solution {\n");
    for v in 0..inst.graph.vertex_count() {
        let shape = if inst.is_root(v) {
            "doublecircle"
        } else if terminals.contains(&v) {
            "box"
        } else {
            "circle"
        };
        let _ = writeln!(s, "  {v} [shape={shape}];");
    }
    for (e, &(u, v)) in inst.graph.edges().iter().enumerate() {
        let style = if chosen.contains(&e) { "bold" } else { "dotted" };
        let _ = writeln!(s, "  {u} -- {v} [style={style}, label=\"{}\"];", format_rational(&inst.graph.edge_cost(e)));
    }
    s.push_str("}\n");
    s
}

fn finish(mut out: Value, stats: bool, extra: Value, start: Instant) -> Value {
    if stats {
        out["stats"] = extra;
        out["wall_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    }
    out
}

fn run(cli: Cli) -> Res<Value> {
    let start = Instant::now();
    let opts = DpOptions::default();
    match cli.command {
        Command::SolveSteiner { input, dot } => {
            let (inst, td) = load(&input)?;
            let res = solve_steiner(&inst, &td, &opts)?;
            if let Some(p) = dot {
                fs::write(p, steiner_dot(&inst, &res.solution))?;
            }
            let out = report(&inst, &res.solution)?;
            Ok(finish(out, input.stats, json!(res.stats), start))
        }
        Command::SolveEcsndp { input, full_profiles, demands } => {
            let (mut inst, td) = load(&input)?;
            if let Some(p) = demands {
                inst = with_groups(&inst, inst.roots.clone(), parse_demands(&read(&p)?)?)?;
            }
            if full_profiles {
                let res = solve_ecsndp_full(&inst, &td, FULL_CELL_BUDGET, &opts)?;
                let out = report(&inst, &res.solution)?;
                return Ok(finish(out, input.stats, json!({ "cells": res.cells }), start));
            }
            let res = solve_ecsndp(&inst, &td, &opts)?;
            let out = report(&inst, &res.solution)?;
            Ok(finish(out, input.stats, json!(res.stats), start))
        }
        Command::SolveVcsndp { input, roots, subset_kvc, ec_vertex_costs } => {
            let (mut inst, td) = load(&input)?;
            if let Some(roots) = roots {
                inst = with_groups(&inst, roots, inst.groups.clone())?;
            }
            if subset_kvc {
                let terminals: BTreeSet<usize> = inst.roots.iter().chain(inst.groups.iter().flat_map(|g| &g.members)).copied().collect();
                let si = SubsetInstance { graph: inst.graph.clone(), terminals: terminals.into_iter().collect(), k: inst.k, mode: Mode::Vertex };
                let reduced = subset_kvc_reduce(&si)?;
                let res = solve_vcsndp(&reduced, &td, false, &opts)?;
                let mut out = report(&reduced, &res.solution)?;
                out["subset_cost"] = json!(format_rational(&(res.solution.cost + kvc_root_charge(&si))));
                return Ok(finish(out, input.stats, json!(res.stats), start));
            }
            if ec_vertex_costs {
                inst.conn_mode = Mode::Edge;
            }
            let res = solve_vcsndp(&inst, &td, ec_vertex_costs, &opts)?;
            let out = report(&inst, &res.solution)?;
            Ok(finish(out, input.stats, json!(res.stats), start))
        }
        Command::ApproxRgsndp { input, trials_constant, seed, extra_batches, lp_export, materialize, materialize_cap, exact_lp } => {
            let (inst, td) = load(&input)?;
            let c = parse_rational(&trials_constant)?;
            let c = *c.numer() as f64 / *c.denom() as f64;
            if c <= 0.0 {
                return Err("the trials constant must be positive".into());
            }
            let ti = build_tree_instance(&inst, &td, TreeLimits::default())?;
            if let Some(p) = lp_export {
                fs::write(p, build_tree_lp(&ti).to_cplex_lp())?;
            }
            if let Some(p) = materialize {
                let tree = ti.materialize(materialize_cap)?;
                let text = if p.extension().is_some_and(|e| e == "json") {
                    serde_json::to_string_pretty(&tree.to_json())?
                } else {
                    tree.to_dot()
                };
                fs::write(p, text)?;
            }
            let engine = if exact_lp { LpEngine::Exact } else { LpEngine::default() };
            let frac = solve_tree_lp(&ti, engine)?;
            let ropts = RoundingOptions { trials_constant: c, seed, extra_batches, engine, limits: TreeLimits::default() };
            let run = round_fractional(&ti, &frac, &ropts)?;
            let mut out = report(&inst, &run.union)?;
            out["rounding"] = run.to_json();
            if !run.report.feasible {
                eprintln!("warning: groups remain uncovered after {} batches", run.batches);
            }
            Ok(finish(out, input.stats, json!(ti.stats), start))
        }
        Command::GenCsp { vars, domain, constraints, k, seed, reduce } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let csp = random_csp(vars, domain, constraints, k, &mut rng);
            let text = if reduce { sndp::graph::serialize_instance(&csp_to_rgsndp(&csp)?) } else { serialize_csp(&csp) };
            print!("{text}");
            Ok(Value::Null)
        }
        Command::Oracle { file, csp, budget } => {
            let text = read(&file)?;
            if csp {
                let csp = parse_csp(&text)?;
                let inst = csp_to_rgsndp(&csp)?;
                let labels = min_label_optimum(&csp);
                let opt = brute_force_optimum(&inst, budget).ok().map(|s| format_rational(&s.cost));
                return Ok(json!({ "min_labels": labels, "network_optimum": opt }));
            }
            let inst = parse_instance(&text).map_err(|e| format!("{}: {e}", file.display()))?;
            match brute_force_optimum(&inst, budget) {
                Ok(sol) => report(&inst, &sol),
                Err(e) => Ok(json!({ "error": e.to_string() })),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Value::Null) => ExitCode::SUCCESS,
        Ok(v) => {
            let text = serde_json::to_string_pretty(&v).expect("JSON value serializes");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
