//! `cc`: reproducible batch runs over the ccgraph library.
//!
//! Subcommands cover graph statistics, dense FCI, graph-projected CI,
//! single-reference CC, coupled multireference solves, covering-based
//! reference selection, DOT export, and the oracle agreement battery.
//! `--json` switches every report to a single deterministic JSON document;
//! identical inputs and seeds produce byte-identical output.
//!
//! Exit codes: 0 success, 1 failed selfcheck, 2 configuration or usage
//! error, 3 solver did not converge.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num::rational::BigRational;
use num::ToPrimitive;
use serde::Serialize;

use ccgraph::cover;
use ccgraph::graph::{Classification, ExcitationGraph, GraphSpec};
use ccgraph::ham::{dense_cap, Hamiltonian};
use ccgraph::integrals::{builtin_model, parse_integrals, IntegralSet};
use ccgraph::mr::{solve_jm_mrcc, solve_mrci, MRProblem, MrSolution};
use ccgraph::oracle;
use ccgraph::solver::{
    solve_cc, solve_ci_projected, solve_fci, CCProblem, JacobianMode, SolverOptions,
};
use ccgraph::wavefn::AmplitudeSet;
use ccgraph::{Det, Error, Result};

#[derive(Parser)]
#[command(name = "cc", version, about = "Graph-based coupled-cluster toolkit")]
struct Cli {
    /// Emit a machine-readable JSON report instead of text
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for the parallel code paths (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerated graph statistics checked against their closed forms
    GraphStats(GraphStatsArgs),
    /// Dense full CI in the N-electron determinant basis
    Fci(FciArgs),
    /// CI projected onto the reference plus the graph's excitation space
    Ci(CiArgs),
    /// Single-reference coupled-cluster solve on the graph
    #[command(name = "cc", alias = "solve")]
    Cc(CcArgs),
    /// Coupled multireference solve over a shared model space
    Mrcc(MrccArgs),
    /// Minimum-cost reference selection by Hamming covering
    SelectRefs(SelectRefsArgs),
    /// DOT rendering of the excitation multigraph
    ExportDot(ExportDotArgs),
    /// Agreement battery against the brute-force oracle
    Selfcheck(SelfcheckArgs),
}

/// Where the integrals come from: a file or a built-in model.
#[derive(Args)]
struct Source {
    /// FCIDUMP-style integral file
    #[arg(long, conflicts_with = "model")]
    integrals: Option<PathBuf>,
    /// Built-in model: pairing | hubbard-chain
    #[arg(long)]
    model: Option<String>,
    /// Orbital count; required with --model, overrides headerless files
    #[arg(long)]
    norb: Option<u32>,
    /// Level spacing (pairing model)
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Pair-hopping strength (pairing model)
    #[arg(long = "g", default_value_t = 0.0)]
    g: f64,
    /// Hopping amplitude (Hubbard chain)
    #[arg(long = "t", default_value_t = 1.0)]
    t: f64,
    /// On-site repulsion (Hubbard chain)
    #[arg(long = "u", default_value_t = 0.0)]
    u: f64,
}

impl Source {
    fn load(&self, nelec: Option<u32>) -> Result<(IntegralSet, Option<u32>)> {
        match (&self.integrals, &self.model) {
            (Some(path), None) => {
                let text = fs::read_to_string(path)?;
                parse_integrals(&text, self.norb, nelec)
            }
            (None, Some(name)) => {
                let k = self
                    .norb
                    .ok_or_else(|| Error::Config("--model requires --norb".into()))?;
                if k == 0 || k % 2 != 0 {
                    return Err(Error::Config(format!(
                        "built-in models pair their orbitals; --norb must be even, got {k}"
                    )));
                }
                let (one, two) = match name.as_str() {
                    "hubbard-chain" => (self.t, self.u),
                    _ => (self.delta, self.g),
                };
                Ok((builtin_model(name, k / 2, one, two)?, nelec))
            }
            _ => Err(Error::Config(
                "need exactly one integral source: --integrals or --model".into(),
            )),
        }
    }
}

#[derive(Args)]
struct GraphStatsArgs {
    #[arg(long)]
    norb: u32,
    #[arg(long)]
    nelec: u32,
    /// References as a JSON list of index lists, e.g. '[[1,2],[3,4]]'
    #[arg(long)]
    refs: Option<String>,
    /// Graph spec as JSON, e.g. '{"kind":"ranks","ranks":[1,2]}'
    #[arg(long)]
    graph: Option<String>,
}

#[derive(Args)]
struct FciArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    nelec: Option<u32>,
    /// Number of eigenvectors to keep
    #[arg(long, default_value_t = 1)]
    nroots: usize,
}

#[derive(Args)]
struct CiArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    nelec: Option<u32>,
    /// Reference as a JSON index list; default: lowest orbitals
    #[arg(long = "ref")]
    reference: Option<String>,
    /// Graph spec as JSON; default: singles and doubles
    #[arg(long)]
    graph: Option<String>,
}

#[derive(Args)]
struct CcArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    nelec: Option<u32>,
    /// Reference as a JSON index list; default: lowest orbitals
    #[arg(long = "ref")]
    reference: Option<String>,
    /// Graph spec as JSON; default: the full graph
    #[arg(long)]
    graph: Option<String>,
    /// Residual norm target
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Step-halving factor for damped Newton
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    /// Use the finite-difference Jacobian instead of the analytic one
    #[arg(long)]
    fd_jacobian: bool,
    /// Write the converged amplitudes to this JSON file
    #[arg(long)]
    amplitudes_out: Option<PathBuf>,
}

#[derive(Args)]
struct MrccArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    nelec: Option<u32>,
    /// References as a JSON list of index lists, e.g. '[[1,2,3],[1,2,4]]'
    #[arg(long)]
    refs: String,
    /// Graph spec as JSON; default: the full graph
    #[arg(long)]
    graph: Option<String>,
    /// Solve the CI variant instead of the exponential ansatz
    #[arg(long)]
    mrci: bool,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    /// Write per-reference amplitudes to this JSON file
    #[arg(long)]
    amplitudes_out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectRefsArgs {
    #[arg(long)]
    norb: u32,
    #[arg(long)]
    nelec: u32,
    /// Truncation rank rho of the intended calculation
    #[arg(long)]
    rank: u32,
    /// JSON file with the target determinants as index lists
    #[arg(long)]
    targets: PathBuf,
    /// Optional JSON cost file: a list of {"det": [...], "cost": number}
    #[arg(long)]
    costs: Option<PathBuf>,
    /// Branch-and-bound node budget
    #[arg(long, default_value_t = cover::DEFAULT_NODE_CAP)]
    node_cap: u64,
}

#[derive(Args)]
struct ExportDotArgs {
    #[arg(long)]
    norb: u32,
    #[arg(long)]
    nelec: u32,
    /// References as a JSON list of index lists
    #[arg(long)]
    refs: Option<String>,
    /// Graph spec as JSON; default: the full graph
    #[arg(long)]
    graph: Option<String>,
    /// Output file; stdout when absent
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SelfcheckArgs {
    #[arg(long)]
    norb: u32,
    #[arg(long)]
    nelec: u32,
    /// Seed for the randomized integral checks
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    #[cfg(not(feature = "parallel"))]
    if cli.jobs.is_some() {
        eprintln!("note: built without the parallel feature; --jobs has no effect");
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                // a singular Jacobian is a failure of the iteration, not
                // of the configuration
                Error::SingularJacobian { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.cmd {
        Cmd::GraphStats(a) => graph_stats(cli.json, a),
        Cmd::Fci(a) => fci(cli.json, a),
        Cmd::Ci(a) => ci(cli.json, a),
        Cmd::Cc(a) => cc_solve(cli.json, a),
        Cmd::Mrcc(a) => mrcc(cli.json, a),
        Cmd::SelectRefs(a) => select_refs(cli.json, a),
        Cmd::ExportDot(a) => export_dot(cli.json, a),
        Cmd::Selfcheck(a) => selfcheck(cli.json, a),
    }
}

fn emit<T: Serialize>(json: bool, report: &T, human: &str) {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(report).expect("reports are serializable")
        );
    } else {
        println!("{human}");
    }
}

fn parse_refs(k: u32, nelec: u32, refs: Option<&str>) -> Result<Vec<Det>> {
    match refs {
        None => Ok(vec![Det::from_orbitals(
            &(1..=nelec).collect::<Vec<u32>>(),
            k,
        )?]),
        Some(text) => {
            let lists: Vec<Vec<u32>> = serde_json::from_str(text)
                .map_err(|e| Error::Config(format!("cannot parse reference list: {e}")))?;
            if lists.is_empty() {
                return Err(Error::Config("reference list is empty".into()));
            }
            lists
                .iter()
                .map(|orbs| Det::from_orbitals(orbs, k))
                .collect()
        }
    }
}

fn parse_spec(spec: Option<&str>, default: GraphSpec) -> Result<GraphSpec> {
    match spec {
        None => Ok(default),
        Some(text) => serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("cannot parse graph spec: {e}"))),
    }
}

fn resolve_nelec(flag: Option<u32>, from_file: Option<u32>) -> Result<u32> {
    flag.or(from_file)
        .ok_or_else(|| Error::Config("electron count unknown: pass --nelec".into()))
}

#[derive(Serialize)]
struct GraphStatsReport {
    command: &'static str,
    stats: ccgraph::graph::StatsReport,
    classifications: Vec<Classification>,
}

fn graph_stats(json: bool, a: &GraphStatsArgs) -> Result<ExitCode> {
    let refs = parse_refs(a.norb, a.nelec, a.refs.as_deref())?;
    let spec = parse_spec(a.graph.as_deref(), GraphSpec::Full)?;
    let g = ExcitationGraph::build(a.norb, &refs, spec)?;
    let stats = g.stats();
    let classifications: Vec<Classification> =
        (0..g.num_references()).map(|m| g.classify(m)).collect();

    let mut human = format!(
        "K = {}, N = {}, {} reference frame(s)",
        stats.norb,
        stats.nelec,
        stats.frames.len()
    );
    for (m, f) in stats.frames.iter().enumerate() {
        human += &format!(
            "\nframe {}: reference {}\n  |L|  = {:>8} states   (closed form {}, {})",
            m + 1,
            f.reference,
            f.vertices_enumerated,
            f.vertices_closed_form,
            tick(f.vertices_agree)
        );
        for l in &f.layers {
            human += &format!(
                "\n  |L({})| = {:>6} states   (closed form {})",
                l.rank, l.enumerated, l.closed_form
            );
        }
        human += &format!(
            "\n  |E|  = {:>8} edges    (closed form {}, {})\n  mean rank {:.6} (closed form {:.6})\n  {}",
            f.edges_enumerated,
            f.edges_closed_form,
            tick(f.edges_agree),
            f.mean_rank_enumerated,
            f.mean_rank_closed_form,
            describe(&classifications[m]),
        );
    }
    emit(
        json,
        &GraphStatsReport {
            command: "graph-stats",
            stats,
            classifications,
        },
        &human,
    );
    Ok(ExitCode::SUCCESS)
}

fn tick(ok: bool) -> &'static str {
    if ok {
        "agree"
    } else {
        "MISMATCH"
    }
}

fn describe(c: &Classification) -> String {
    format!(
        "consistent: {}, transitive: {}, excitation complete: {}",
        c.consistent, c.transitive, c.excitation_complete
    )
}

#[derive(Serialize)]
struct FciReport {
    command: &'static str,
    norb: u32,
    nelec: u32,
    dim: usize,
    energies: Vec<f64>,
}

fn fci(json: bool, a: &FciArgs) -> Result<ExitCode> {
    let (ints, file_nelec) = a.source.load(a.nelec)?;
    let nelec = resolve_nelec(a.nelec, file_nelec)?;
    let ham = Hamiltonian::new(ints);
    let r = solve_fci(&ham, nelec, dense_cap(), a.nroots)?;
    let mut human = format!(
        "FCI on K = {}, N = {}: dimension {}\nground energy  {:+.12}",
        ham.k(),
        nelec,
        r.dim,
        r.energies[0]
    );
    for (i, e) in r.energies.iter().enumerate().skip(1).take(a.nroots.max(1) - 1) {
        human += &format!("\nroot {i} energy  {e:+.12}");
    }
    emit(
        json,
        &FciReport {
            command: "fci",
            norb: ham.k(),
            nelec,
            dim: r.dim,
            energies: r.energies,
        },
        &human,
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CiReport {
    command: &'static str,
    energy: f64,
    c0: f64,
    dim: usize,
}

fn ci(json: bool, a: &CiArgs) -> Result<ExitCode> {
    let (ints, file_nelec) = a.source.load(a.nelec)?;
    let nelec = resolve_nelec(a.nelec, file_nelec)?;
    let refs = parse_refs(ints.k(), nelec, a.reference.as_deref().map(wrap_single).as_deref())?;
    let spec = parse_spec(
        a.graph.as_deref(),
        GraphSpec::Ranks { ranks: vec![1, 2] },
    )?;
    let g = ExcitationGraph::build(ints.k(), &refs, spec)?;
    let ham = Hamiltonian::new(ints);
    let r = solve_ci_projected(&ham, &g, 0, dense_cap())?;
    let human = format!(
        "projected CI: dimension {}\nenergy  {:+.12}\nreference coefficient  {:+.6}",
        r.dim, r.energy, r.c0
    );
    emit(
        json,
        &CiReport {
            command: "ci",
            energy: r.energy,
            c0: r.c0,
            dim: r.dim,
        },
        &human,
    );
    Ok(ExitCode::SUCCESS)
}

/// `--ref '[1,2]'` arrives as one list; the graph builders want a list of
/// lists.
fn wrap_single(s: &str) -> String {
    format!("[{s}]")
}

#[derive(Serialize)]
struct CcReport {
    command: &'static str,
    energy: f64,
    iterations: usize,
    residual_norm: f64,
    converged: bool,
    amplitudes_path: Option<String>,
}

fn cc_solve(json: bool, a: &CcArgs) -> Result<ExitCode> {
    let (ints, file_nelec) = a.source.load(a.nelec)?;
    let nelec = resolve_nelec(a.nelec, file_nelec)?;
    let refs = parse_refs(ints.k(), nelec, a.reference.as_deref().map(wrap_single).as_deref())?;
    let spec = parse_spec(a.graph.as_deref(), GraphSpec::Full)?;
    let g = ExcitationGraph::build(ints.k(), &refs, spec)?;
    let p = CCProblem::new(g, Hamiltonian::new(ints))?;
    let options = SolverOptions {
        tol_residual: a.tol,
        max_iter: a.max_iter,
        damping: a.damping,
        jacobian_mode: if a.fd_jacobian {
            JacobianMode::FiniteDifference
        } else {
            JacobianMode::Analytic
        },
    };
    let sol = solve_cc(&p, &options)?;
    let amplitudes_path = match &a.amplitudes_out {
        Some(path) => {
            let set = AmplitudeSet {
                reference: 1,
                t: sol.t.clone(),
            };
            fs::write(path, serde_json::to_string_pretty(&set).expect("serializable") + "\n")?;
            Some(path.display().to_string())
        }
        None => None,
    };
    let human = format!(
        "CC on {} amplitudes: {} after {} iteration(s)\nenergy  {:+.12}\nresidual norm  {:.3e}{}",
        p.graph().xi(0).len(),
        if sol.converged { "converged" } else { "NOT converged" },
        sol.iterations,
        sol.energy,
        sol.residual_norm,
        amplitudes_path
            .as_deref()
            .map(|p| format!("\namplitudes written to {p}"))
            .unwrap_or_default()
    );
    emit(
        json,
        &CcReport {
            command: "cc",
            energy: sol.energy,
            iterations: sol.iterations,
            residual_norm: sol.residual_norm,
            converged: sol.converged,
            amplitudes_path,
        },
        &human,
    );
    Ok(if sol.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

#[derive(Serialize)]
struct MrccReport {
    command: &'static str,
    method: &'static str,
    energies: Vec<f64>,
    heff: Vec<Vec<f64>>,
    coefficients: Vec<Vec<f64>>,
    complex_roots: bool,
    converged: bool,
    iterations: usize,
    residual_norm: f64,
    amplitudes: Vec<AmplitudeSet>,
    amplitudes_path: Option<String>,
}

fn mrcc(json: bool, a: &MrccArgs) -> Result<ExitCode> {
    let (ints, file_nelec) = a.source.load(a.nelec)?;
    let nelec = resolve_nelec(a.nelec, file_nelec)?;
    let refs = parse_refs(ints.k(), nelec, Some(&a.refs))?;
    let spec = parse_spec(a.graph.as_deref(), GraphSpec::Full)?;
    let g = ExcitationGraph::build(ints.k(), &refs, spec)?;
    let p = MRProblem::new(g, Hamiltonian::new(ints))?;
    let options = SolverOptions {
        tol_residual: a.tol,
        max_iter: a.max_iter,
        damping: a.damping,
        ..SolverOptions::default()
    };
    let method = if a.mrci { "mrci" } else { "jm-mrcc" };
    let sol: MrSolution = if a.mrci {
        solve_mrci(&p, &options)?
    } else {
        solve_jm_mrcc(&p, None, &options)?
    };

    let mm = sol.heff.matrix.nrows();
    let heff: Vec<Vec<f64>> = (0..mm)
        .map(|i| (0..mm).map(|j| sol.heff.matrix[(i, j)]).collect())
        .collect();
    let coefficients: Vec<Vec<f64>> = (0..mm)
        .map(|j| sol.model.coefficients.column(j).iter().copied().collect())
        .collect();
    let amplitudes: Vec<AmplitudeSet> = sol
        .amplitudes
        .iter()
        .enumerate()
        .map(|(m, t)| AmplitudeSet {
            reference: m + 1,
            t: t.clone(),
        })
        .collect();
    let amplitudes_path = match &a.amplitudes_out {
        Some(path) => {
            fs::write(
                path,
                serde_json::to_string_pretty(&amplitudes).expect("serializable") + "\n",
            )?;
            Some(path.display().to_string())
        }
        None => None,
    };

    let mut human = format!(
        "{} over {} references: {} after {} iteration(s), residual norm {:.3e}",
        method,
        mm,
        if sol.converged { "converged" } else { "NOT converged" },
        sol.iterations,
        sol.residual_norm
    );
    for (j, e) in sol.model.energies.iter().enumerate() {
        human += &format!("\nroot {j} energy  {e:+.12}");
    }
    if sol.model.complex_roots {
        human += "\nwarning: complex-conjugate eigenvalue pair in the effective Hamiltonian";
    }
    emit(
        json,
        &MrccReport {
            command: "mrcc",
            method,
            energies: sol.model.energies.clone(),
            heff,
            coefficients,
            complex_roots: sol.model.complex_roots,
            converged: sol.converged,
            iterations: sol.iterations,
            residual_norm: sol.residual_norm,
            amplitudes,
            amplitudes_path,
        },
        &human,
    );
    Ok(if sol.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

#[derive(serde::Deserialize)]
struct CostEntry {
    det: Vec<u32>,
    cost: f64,
}

#[derive(Serialize)]
struct TargetLine {
    target: Det,
    nearest: Option<Det>,
    hamming: u32,
    rank: u32,
    covered: bool,
}

#[derive(Serialize)]
struct CertificateLine {
    candidates: usize,
    forced: usize,
    greedy_cost: f64,
    root_lower_bound: f64,
    nodes_explored: u64,
    node_cap: u64,
}

#[derive(Serialize)]
struct SelectRefsReport {
    command: &'static str,
    references: Vec<Det>,
    total_cost: f64,
    total_cost_exact: String,
    optimal: bool,
    certificate: CertificateLine,
    verification_pass: bool,
    targets: Vec<TargetLine>,
    candidate_fraction_estimate: Option<f64>,
}

fn rat_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn select_refs(json: bool, a: &SelectRefsArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&a.targets)?;
    let lists: Vec<Vec<u32>> = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("cannot parse target file: {e}")))?;
    let targets: Result<Vec<Det>> = lists
        .iter()
        .map(|orbs| Det::from_orbitals(orbs, a.norb))
        .collect();
    let mut inst =
        cover::CoverInstance::new(a.norb, a.nelec, targets?, a.rank)?.with_node_cap(a.node_cap);
    if let Some(path) = &a.costs {
        let text = fs::read_to_string(path)?;
        let entries: Vec<CostEntry> = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("cannot parse cost file: {e}")))?;
        let mut costs = BTreeMap::new();
        for e in entries {
            let d = Det::from_orbitals(&e.det, a.norb)?;
            let c = BigRational::from_float(e.cost)
                .ok_or_else(|| Error::Config(format!("cost for {d} is not finite")))?;
            costs.insert(d, c);
        }
        inst = inst.with_costs(costs)?;
    }
    let sol = cover::solve_cover(&inst)?;
    let report = cover::verify_cover(&inst, &sol.references);
    let estimate =
        cover::covering_fraction_estimate(a.norb, a.nelec, a.rank, inst.targets().len());

    let mut human = format!(
        "candidates: {} ({} zero-cost forced)\nselected references:",
        sol.certificate.candidates, sol.certificate.forced
    );
    for r in &sol.references {
        human += &format!("\n  {r}");
    }
    human += &format!(
        "\ntotal cost {} ({}), {}\nsearch: {} node(s) of {} budget, greedy bound {}, root bound {}",
        sol.total_cost,
        rat_f64(&sol.total_cost),
        if sol.optimal {
            "optimal"
        } else {
            "budget exhausted: best found, possibly not optimal"
        },
        sol.certificate.nodes_explored,
        sol.certificate.node_cap,
        sol.certificate.greedy_cost,
        sol.certificate.root_lower_bound,
    );
    human += &format!(
        "\nverification: {}",
        if report.pass { "pass" } else { "FAIL" }
    );
    for t in &report.targets {
        human += &format!(
            "\n  target {}: nearest {} at rank {}",
            t.target,
            t.nearest.map(|d| d.to_string()).unwrap_or("none".into()),
            t.rank
        );
    }
    human += &match estimate {
        Some(f) => format!("\ncandidate fraction estimate n/|S| <= {f:.3e}"),
        None => "\ncandidate fraction estimate not applicable (needs 0 < 2p/K, N/K < 1/2)"
            .to_string(),
    };

    emit(
        json,
        &SelectRefsReport {
            command: "select-refs",
            references: sol.references.clone(),
            total_cost: rat_f64(&sol.total_cost),
            total_cost_exact: sol.total_cost.to_string(),
            optimal: sol.optimal,
            certificate: CertificateLine {
                candidates: sol.certificate.candidates,
                forced: sol.certificate.forced,
                greedy_cost: rat_f64(&sol.certificate.greedy_cost),
                root_lower_bound: rat_f64(&sol.certificate.root_lower_bound),
                nodes_explored: sol.certificate.nodes_explored,
                node_cap: sol.certificate.node_cap,
            },
            verification_pass: report.pass,
            targets: report
                .targets
                .iter()
                .map(|t| TargetLine {
                    target: t.target,
                    nearest: t.nearest,
                    hamming: t.hamming,
                    rank: t.rank,
                    covered: t.covered,
                })
                .collect(),
            candidate_fraction_estimate: estimate,
        },
        &human,
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct DotReport {
    command: &'static str,
    dot: String,
}

fn export_dot(json: bool, a: &ExportDotArgs) -> Result<ExitCode> {
    let refs = parse_refs(a.norb, a.nelec, a.refs.as_deref())?;
    let spec = parse_spec(a.graph.as_deref(), GraphSpec::Full)?;
    let g = ExcitationGraph::build(a.norb, &refs, spec)?;
    let dot = g.to_dot();
    match &a.output {
        Some(path) => {
            fs::write(path, &dot)?;
            emit(
                json,
                &DotReport {
                    command: "export-dot",
                    dot: path.display().to_string(),
                },
                &format!("graph written to {}", path.display()),
            );
        }
        None => {
            if json {
                emit(json, &DotReport { command: "export-dot", dot }, "");
            } else {
                print!("{dot}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CheckLine {
    name: &'static str,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct SelfcheckReport {
    command: &'static str,
    norb: u32,
    nelec: u32,
    seed: u64,
    checks: Vec<CheckLine>,
    passed: bool,
}

fn selfcheck(json: bool, a: &SelfcheckArgs) -> Result<ExitCode> {
    let checks = oracle::selfcheck(a.norb, a.nelec, a.seed)?;
    let passed = checks.iter().all(|c| c.passed);
    let mut human = String::new();
    for c in &checks {
        human += &format!(
            "{:<32} {}  ({})\n",
            c.name,
            if c.passed { "ok" } else { "FAILED" },
            c.detail
        );
    }
    human += &if passed {
        format!("all {} checks passed", checks.len())
    } else {
        format!(
            "{} of {} checks failed",
            checks.iter().filter(|c| !c.passed).count(),
            checks.len()
        )
    };
    emit(
        json,
        &SelfcheckReport {
            command: "selfcheck",
            norb: a.norb,
            nelec: a.nelec,
            seed: a.seed,
            checks: checks
                .into_iter()
                .map(|c| CheckLine {
                    name: c.name,
                    passed: c.passed,
                    detail: c.detail,
                })
                .collect(),
            passed,
        },
        &human,
    );
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
