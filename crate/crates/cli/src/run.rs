//! Subcommand bodies: resolve config, execute, write artifacts, emit
//! the manifest. Any failure wipes partial outputs.

use crate::manifest::RunDir;
use crate::{CommonOpts, EXIT_NOT_SPARSE, EXIT_NO_CONVERGENCE, EXIT_OK, EXIT_PARSE};
use serde::Serialize;
use sparsedyn::gamedisc::{assemble_social_network, reconstruct_agent};
use sparsedyn::netdisc::{assemble_network, reconstruct_node, NetworkData, Symmetrization};
use sparsedyn::simkit::{simulate as run_sim, SimOutput, SimSpec};
use sparsedyn::weakpde::{default_pde_library, identify_pde, PdeConfig};
use sparsedyn::{
    discover_map as fit_map, discover_ode as fit_ode, discover_time_varying as fit_tv,
    scan_bifurcation as scan_model, DiscoveryConfig, Error, FieldData, GameParams, GameRecord,
    MapLibrary, RecoveredModel, Result, ScanConfig, SolverTag, TimeSeries,
};
use std::path::Path;

pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Json(_) | Error::Io(_) => EXIT_PARSE,
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        Error::NotSparse { .. } => EXIT_NOT_SPARSE,
        _ => crate::EXIT_FAIL,
    }
}

fn parse_solver(s: &str) -> Result<SolverTag> {
    match s {
        "lasso" => Ok(SolverTag::LassoCd),
        "omp" => Ok(SolverTag::Omp),
        "stls" => Ok(SolverTag::Stls),
        other => Err(Error::Parse(format!(
            "unknown solver '{other}' (expected lasso, omp, or stls)"
        ))),
    }
}

/// Config file first, then flag overrides on top.
fn resolve_discovery(common: &CommonOpts) -> Result<DiscoveryConfig> {
    let mut config: DiscoveryConfig = match &common.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => DiscoveryConfig::default(),
    };
    if let Some(s) = &common.solver {
        config.solver = parse_solver(s)?;
    }
    if let Some(l) = common.lambda {
        config.lambda = l;
    }
    if let Some(t) = common.threshold {
        config.threshold = t;
    }
    Ok(config)
}

/// Resolved settings echoed into the manifest.
#[derive(Serialize)]
struct DiscoverEcho<'a> {
    input: String,
    order: u32,
    time_order: Option<u32>,
    fourier: Option<u32>,
    discovery: &'a DiscoveryConfig,
}

fn finish_model(
    run: &mut RunDir,
    command: &str,
    echo: &impl Serialize,
    seed: u64,
    model: &RecoveredModel,
) -> Result<u8> {
    run.write("model.json", &model.to_json()?)?;
    run.finish(command, echo, seed)?;
    if model.diagnostics.not_sparse {
        eprintln!(
            "warning: dense rows {:?} — model failed the sparsity gate",
            model.diagnostics.dense_rows
        );
        return Ok(EXIT_NOT_SPARSE);
    }
    Ok(EXIT_OK)
}

/// Wraps a command body so any error wipes partial artifacts.
fn guarded(run: &mut Option<RunDir>, out: &Path, body: impl FnOnce(&mut RunDir) -> Result<u8>) -> Result<u8> {
    let mut dir = RunDir::create(out)?;
    let result = body(&mut dir);
    if result.is_err() {
        dir.cleanup();
    } else {
        *run = Some(dir);
    }
    result
}

pub fn simulate(common: &CommonOpts) -> Result<u8> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Parse("simulate requires --config with a system spec".into()))?;
    let mut spec: SimSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    let seed = spec.seed;
    let mut keep = None;
    guarded(&mut keep, &common.out, |run| {
        match run_sim(&spec)? {
            SimOutput::Series(s) => {
                let p = run.path("series.csv");
                s.to_csv_file(&p)?;
                run.track(p);
            }
            SimOutput::SeriesWithTruth(s, adjacency) => {
                let p = run.path("series.csv");
                s.to_csv_file(&p)?;
                run.track(p);
                run.write("truth_edges.csv", &edge_csv(&adjacency))?;
            }
            SimOutput::Field(f) => {
                let p = run.path("field.csv");
                f.to_csv_file(&p)?;
                run.track(p);
            }
            SimOutput::Game(g) => {
                let p = run.path("game.csv");
                g.to_csv_file(&p)?;
                run.track(p);
            }
            SimOutput::GameWithTruth(g, adjacency) => {
                let p = run.path("game.csv");
                g.to_csv_file(&p)?;
                run.track(p);
                run.write("truth_edges.csv", &edge_csv(&adjacency))?;
            }
        }
        run.finish("simulate", &spec, seed)?;
        Ok(EXIT_OK)
    })
}

fn edge_csv(adjacency: &[Vec<usize>]) -> String {
    let mut out = String::from("i,j\n");
    for (i, neighbors) in adjacency.iter().enumerate() {
        for &j in neighbors {
            if j > i {
                out.push_str(&format!("{i},{j}\n"));
            }
        }
    }
    out
}

pub fn discover_ode(input: &Path, common: &CommonOpts) -> Result<u8> {
    let config = resolve_discovery(common)?;
    let order = common.order.unwrap_or(2);
    let series = TimeSeries::from_csv_file(input)?;
    let mut keep = None;
    guarded(&mut keep, &common.out, |run| {
        let model = fit_ode(&series, order, &config)?;
        let echo = DiscoverEcho {
            input: input.to_string_lossy().into_owned(),
            order,
            time_order: None,
            fourier: None,
            discovery: &config,
        };
        finish_model(run, "discover-ode", &echo, common.seed.unwrap_or(0), &model)
    })
}

pub fn discover_map(input: &Path, fourier: Option<u32>, common: &CommonOpts) -> Result<u8> {
    let config = resolve_discovery(common)?;
    let order = common.order.unwrap_or(2);
    let library = match fourier {
        Some(h) => MapLibrary::Fourier { max_harmonic: h },
        None => MapLibrary::Polynomial { order },
    };
    let series = TimeSeries::from_csv_file(input)?;
    let mut keep = None;
    guarded(&mut keep, &common.out, |run| {
        let model = fit_map(&series, library, &config)?;
        let echo = DiscoverEcho {
            input: input.to_string_lossy().into_owned(),
            order,
            time_order: None,
            fourier,
            discovery: &config,
        };
        finish_model(run, "discover-map", &echo, common.seed.unwrap_or(0), &model)
    })
}

pub fn discover_tv(input: &Path, common: &CommonOpts) -> Result<u8> {
    let config = resolve_discovery(common)?;
    let order = common.order.unwrap_or(2);
    let time_order = common.time_order.unwrap_or(1);
    let series = TimeSeries::from_csv_file(input)?;
    let mut keep = None;
    guarded(&mut keep, &common.out, |run| {
        let model = fit_tv(&series, order, time_order, &config)?;
        let echo = DiscoverEcho {
            input: input.to_string_lossy().into_owned(),
            order,
            time_order: Some(time_order),
            fourier: None,
            discovery: &config,
        };
        finish_model(run, "discover-tv", &echo, common.seed.unwrap_or(0), &model)
    })
}

#[derive(Serialize)]
struct NetworkEcho<'a> {
    input: String,
    nodes: usize,
    node_dim: usize,
    order: u32,
    edge_threshold: Option<f64>,
    discovery: &'a DiscoveryConfig,
}

pub fn discover_network(
    input: &Path,
    nodes: usize,
    node_dim: usize,
    edge_threshold: Option<f64>,
    common: &CommonOpts,
) -> Result<u8> {
    let mut config = resolve_discovery(common)?;
    if common.solver.is_none() && common.config.is_none() {
        // compressed-sensing regime: the lasso handles coherent
        // concatenated blocks far better than the default stls
        config.solver = SolverTag::LassoCd;
        config.lambda = 0.0;
    }
    let order = common.order.unwrap_or(2);
    let series = TimeSeries::from_csv_file(input)?;
    let data = NetworkData::new(nodes, node_dim, series)?;
    let mut keep = None;
    guarded(&mut keep, &common.out, |run| {
        let recs = (0..nodes)
            .map(|i| reconstruct_node(&data, i, order, &config))
            .collect::<Result<Vec<_>>>()?;
        let estimate = assemble_network(recs, edge_threshold, Symmetrization::Or)?;
        run.write("network.json", &estimate.to_json()?)?;
        run.write("edges.csv", &estimate.edge_list_csv())?;
        let echo = NetworkEcho {
            input: input.to_string_lossy().into_owned(),
            nodes,
            node_dim,
            order,
            edge_threshold,
            discovery: &config,
        };
        run.finish("discover-network", &echo, common.seed.unwrap_or(0))?;
        let dense: Vec<usize> = estimate
            .nodes
            .iter()
            .filter(|r| !r.dense_components.is_empty())
            .map(|r| r.node)
            .collect();
        if !dense.is_empty() {
            eprintln!("warning: dense fits at nodes {dense:?} excluded from edge evidence");
        }
        let nonlocal: Vec<usize> = estimate
            .nodes
            .iter()
            .filter(|r| !r.nonlocal_components.is_empty())
            .map(|r| r.node)
            .collect();
        if !nonlocal.is_empty() {
            eprintln!("warning: nonlocal fits at nodes {nonlocal:?} excluded from edge evidence");
        }
        Ok(EXIT_OK)
    })
}

#[derive(Serialize)]
struct GameEcho {
    input: String,
    game: String,
    payoff: f64,
    kappa: f64,
    solver: String,
}

pub fn discover_game(
    input: &Path,
    game: &str,
    payoff: f64,
    kappa: f64,
    common: &CommonOpts,
) -> Result<u8> {
    let params = match game {
        "pdg" => GameParams::pdg(payoff, kappa)?,
        "sg" => GameParams::sg(payoff, kappa)?,
        other => {
            return Err(Error::Parse(format!(
                "unknown game '{other}' (expected pdg or sg)"
            )))
        }
    };
    let solver = match &common.solver {
        Some(s) => parse_solver(s)?,
        None => SolverTag::LassoCd,
    };
    let record = GameRecord::from_csv_file(input)?;
    let mut keep = None;
    guarded(&mut keep, &common.out, |run| {
        let rows = (0..record.agents())
            .map(|a| reconstruct_agent(&record, &params, a, solver))
            .collect::<Result<Vec<_>>>()?;
        let network = assemble_social_network(rows)?;
        run.write("network.json", &serde_json::to_string_pretty(&network)?)?;
        run.write("edges.csv", &network.edge_list_csv())?;
        let echo = GameEcho {
            input: input.to_string_lossy().into_owned(),
            game: game.to_string(),
            payoff,
            kappa,
            solver: format!("{solver:?}"),
        };
        run.finish("discover-game", &echo, common.seed.unwrap_or(0))?;
        if network.consistency < 1.0 {
            eprintln!(
                "note: endpoint consistency {:.3} (< 1 means some edges were seen from one side only)",
                network.consistency
            );
        }
        Ok(EXIT_OK)
    })
}

pub fn discover_pde(input: &Path, periodic: bool, common: &CommonOpts) -> Result<u8> {
    let mut config = PdeConfig::default();
    if let Some(p) = &common.config {
        config = serde_json::from_str(&std::fs::read_to_string(p)?)?;
    }
    if let Some(s) = &common.solver {
        config.solver = parse_solver(s)?;
    }
    if let Some(l) = common.lambda {
        config.lambda = l;
    }
    if let Some(t) = common.threshold {
        config.threshold = t;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let field = FieldData::from_csv_file(input, periodic)?;
    let terms = default_pde_library();
    let seed = config.seed;
    let mut keep = None;
    guarded(&mut keep, &common.out, |run| {
        let model = identify_pde(&field, &terms, &config)?;
        finish_model(run, "discover-pde", &config, seed, &model)
    })
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!(
            "grid '{spec}' must be lo:hi:count"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Parse(format!("bad grid bound '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Parse(format!("bad grid bound '{}'", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| Error::Parse(format!("bad grid count '{}'", parts[2])))?;
    if count < 2 || hi <= lo {
        return Err(Error::Parse("grid needs hi > lo and count >= 2".into()));
    }
    Ok((0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect())
}

#[derive(Serialize)]
struct ScanEcho<'a> {
    model: String,
    row: usize,
    term: usize,
    scan: &'a ScanConfig,
}

pub fn scan_bifurcation(
    model_path: &Path,
    row: usize,
    term: Option<usize>,
    term_label: Option<&str>,
    grid: &str,
    common: &CommonOpts,
) -> Result<u8> {
    let model = RecoveredModel::from_json(&std::fs::read_to_string(model_path)?)?;
    let term = match (term, term_label) {
        (Some(t), _) => t,
        (None, Some(label)) => model
            .library
            .iter()
            .position(|d| d.label(&model.channel_names) == label)
            .ok_or_else(|| Error::Parse(format!("no library term labelled '{label}'")))?,
        (None, None) => {
            return Err(Error::Parse(
                "scan-bifurcation needs --term or --term-label".into(),
            ))
        }
    };
    let mut scan: ScanConfig = match &common.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => ScanConfig::new(Vec::new(), vec![0.1; model.dim]),
    };
    scan.grid = parse_grid(grid)?;
    if let Some(seed) = common.seed {
        scan.seed = seed;
    }
    let seed = scan.seed;
    let mut keep = None;
    guarded(&mut keep, &common.out, |run| {
        let report = scan_model(&model, row, term, &scan)?;
        run.write("scan.json", &serde_json::to_string_pretty(&report)?)?;
        let mut csv = String::from("parameter,outcome,mean_lifetime\n");
        for (v, o) in report.grid.iter().zip(&report.outcomes) {
            let (name, life) = match o {
                sparsedyn::ScanOutcome::Sustained => ("sustained", String::new()),
                sparsedyn::ScanOutcome::FixedPoint => ("fixed_point", String::new()),
                sparsedyn::ScanOutcome::TransientEscape { mean_lifetime } => {
                    ("transient_escape", format!("{mean_lifetime}"))
                }
            };
            csv.push_str(&format!("{v},{name},{life}\n"));
        }
        run.write("scan.csv", &csv)?;
        let echo = ScanEcho {
            model: model_path.to_string_lossy().into_owned(),
            row,
            term,
            scan: &scan,
        };
        run.finish("scan-bifurcation", &echo, seed)?;
        Ok(EXIT_OK)
    })
}

pub fn report(model_path: &Path) -> Result<u8> {
    let model = RecoveredModel::from_json(&std::fs::read_to_string(model_path)?)?;
    let lhs = |name: &str| match model.kind {
        sparsedyn::ModelKind::Map => format!("{name}[t+1] - {name}[t]"),
        sparsedyn::ModelKind::Pde => format!("d{name}/dt"),
        _ => format!("d{name}/dt"),
    };
    println!("kind: {:?}  dim: {}  terms: {}", model.kind, model.dim, model.n_terms());
    for row in 0..model.dim {
        let mut parts = Vec::new();
        for (j, d) in model.library.iter().enumerate() {
            let c = model.coefficient_rows[row][j];
            if c != 0.0 {
                parts.push(format!("{:+.6}*{}", c, d.label(&model.channel_names)));
            }
        }
        let rhs = if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" ")
        };
        println!("{} = {}", lhs(&model.channel_names[row]), rhs);
    }
    let d = &model.diagnostics;
    println!(
        "solver: {:?}  rows: {}  coherence: {:.4}  not_sparse: {}",
        d.solver_tag, d.rows_used, d.coherence, d.not_sparse
    );
    for (row, r) in d.per_row.iter().enumerate() {
        println!(
            "row {row}: support {}  residual {:.3e}  iterations {}  converged {}",
            r.sparsity, r.residual_norm, r.iterations, r.converged
        );
    }
    Ok(EXIT_OK)
}
