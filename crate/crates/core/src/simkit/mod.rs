//! Ground-truth generators: canonical flows and maps, coupled oscillator
//! networks, evolutionary game rounds, and 1-D PDE solvers.

pub mod flows;
pub mod game_sim;
pub mod ks;
pub mod maps;
pub mod network;

pub use flows::{rk4_step, simulate_flow, FlowSystem};
pub use game_sim::simulate_game;
pub use ks::{simulate_heat, simulate_ks, HeatSpec, KsSpec};
pub use maps::{ikeda_step, iterate_map, quadratic_map_step, standard_map_step, MapSystem};
pub use network::{make_network_instance, NetworkInstance, NodeDynamics, Topology};

use crate::error::{Error, Result};
use crate::fields::FieldData;
use crate::game::GameRecord;
use crate::timeseries::TimeSeries;
use serde::{Deserialize, Serialize};

/// Declarative simulation request, loadable from a JSON config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimSpec {
    pub system: SystemSpec,
    #[serde(default)]
    pub initial: Vec<f64>,
    /// Recorded steps (post transient).
    pub horizon: usize,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub transient_discard: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    Lorenz {
        sigma: f64,
        rho: f64,
        beta: f64,
    },
    Roessler {
        a: f64,
        b: f64,
        c: f64,
    },
    StandardMap {
        k: f64,
    },
    Ikeda {
        a: f64,
        b: f64,
        k: f64,
        p: f64,
    },
    QuadraticMap {
        a: f64,
    },
    /// dx/dt = -(c0 + c1 t) x, the linear-drift test system.
    LinearDrift {
        c0: f64,
        c1: f64,
    },
    CoupledNetwork {
        n: usize,
        topology: Topology,
        oscillator: NodeDynamics,
        coupling: f64,
    },
    Game {
        n: usize,
        topology: Topology,
        game: crate::game::GameParams,
        rounds: usize,
    },
    KsPde {
        modes: usize,
        domain: f64,
    },
    HeatPde {
        diffusivity: f64,
        nx: usize,
        domain: f64,
    },
}

/// Output of a simulation run; the variant depends on the system kind.
#[derive(Debug, Clone)]
pub enum SimOutput {
    Series(TimeSeries),
    Field(FieldData),
    Game(GameRecord),
    /// Game output plus the generating adjacency (ground truth).
    GameWithTruth(GameRecord, Vec<Vec<usize>>),
    /// Series plus ground-truth adjacency for network systems.
    SeriesWithTruth(TimeSeries, Vec<Vec<usize>>),
}

impl SimOutput {
    pub fn into_series(self) -> Result<TimeSeries> {
        match self {
            SimOutput::Series(s) => Ok(s),
            SimOutput::SeriesWithTruth(s, _) => Ok(s),
            _ => Err(Error::ShapeMismatch("expected time-series output".into())),
        }
    }

    pub fn into_field(self) -> Result<FieldData> {
        match self {
            SimOutput::Field(f) => Ok(f),
            _ => Err(Error::ShapeMismatch("expected field output".into())),
        }
    }

    pub fn into_game(self) -> Result<GameRecord> {
        match self {
            SimOutput::Game(g) => Ok(g),
            SimOutput::GameWithTruth(g, _) => Ok(g),
            _ => Err(Error::ShapeMismatch("expected game output".into())),
        }
    }
}

/// Runs the simulation described by `spec`. Deterministic for a fixed spec.
pub fn simulate(spec: &SimSpec) -> Result<SimOutput> {
    match &spec.system {
        SystemSpec::Lorenz { sigma, rho, beta } => {
            let sys = FlowSystem::Lorenz {
                sigma: *sigma,
                rho: *rho,
                beta: *beta,
            };
            let x0 = default_initial(&spec.initial, &[1.0, 1.0, 1.0]);
            let dt = spec.dt.unwrap_or(0.01);
            Ok(SimOutput::Series(simulate_flow(
                &sys,
                &x0,
                dt,
                spec.horizon,
                spec.transient_discard,
            )?))
        }
        SystemSpec::Roessler { a, b, c } => {
            let sys = FlowSystem::Roessler {
                a: *a,
                b: *b,
                c: *c,
            };
            let x0 = default_initial(&spec.initial, &[1.0, 1.0, 1.0]);
            let dt = spec.dt.unwrap_or(0.01);
            Ok(SimOutput::Series(simulate_flow(
                &sys,
                &x0,
                dt,
                spec.horizon,
                spec.transient_discard,
            )?))
        }
        SystemSpec::LinearDrift { c0, c1 } => {
            let sys = FlowSystem::LinearDrift { c0: *c0, c1: *c1 };
            let x0 = default_initial(&spec.initial, &[1.0]);
            let dt = spec.dt.unwrap_or(0.01);
            Ok(SimOutput::Series(simulate_flow(
                &sys,
                &x0,
                dt,
                spec.horizon,
                spec.transient_discard,
            )?))
        }
        SystemSpec::StandardMap { k } => {
            let sys = MapSystem::Standard { k: *k };
            let x0 = default_initial(&spec.initial, &[0.5, 0.6]);
            Ok(SimOutput::Series(iterate_map(
                &sys,
                &x0,
                spec.horizon,
                spec.transient_discard,
            )?))
        }
        SystemSpec::Ikeda { a, b, k, p } => {
            let sys = MapSystem::Ikeda {
                a: *a,
                b: *b,
                k: *k,
                p: *p,
            };
            let x0 = default_initial(&spec.initial, &[0.1, 0.1]);
            Ok(SimOutput::Series(iterate_map(
                &sys,
                &x0,
                spec.horizon,
                spec.transient_discard,
            )?))
        }
        SystemSpec::QuadraticMap { a } => {
            let sys = MapSystem::Quadratic { a: *a };
            let x0 = default_initial(&spec.initial, &[0.3]);
            Ok(SimOutput::Series(iterate_map(
                &sys,
                &x0,
                spec.horizon,
                spec.transient_discard,
            )?))
        }
        SystemSpec::CoupledNetwork {
            n,
            topology,
            oscillator,
            coupling,
        } => {
            let instance =
                make_network_instance(*n, topology.clone(), *oscillator, *coupling, spec.seed)?;
            let dt = spec.dt.unwrap_or(0.01);
            let series =
                instance.simulate(dt, spec.horizon, spec.transient_discard, spec.seed)?;
            Ok(SimOutput::SeriesWithTruth(series, instance.adjacency))
        }
        SystemSpec::Game {
            n,
            topology,
            game,
            rounds,
        } => {
            let graph = network::build_topology(*n, topology.clone(), spec.seed)?;
            let record = simulate_game(&graph, game, *rounds, spec.seed)?;
            Ok(SimOutput::GameWithTruth(record, graph))
        }
        SystemSpec::KsPde { modes, domain } => {
            let ks = KsSpec {
                modes: *modes,
                domain: *domain,
                dt: spec.dt.unwrap_or(0.25),
                samples: spec.horizon,
                transient_discard: spec.transient_discard,
                seed: spec.seed,
            };
            Ok(SimOutput::Field(simulate_ks(&ks)?))
        }
        SystemSpec::HeatPde {
            diffusivity,
            nx,
            domain,
        } => {
            let heat = HeatSpec {
                diffusivity: *diffusivity,
                nx: *nx,
                domain: *domain,
                dt: spec.dt.unwrap_or(1e-3),
                samples: spec.horizon,
                seed: spec.seed,
            };
            Ok(SimOutput::Field(simulate_heat(&heat)?))
        }
    }
}

fn default_initial(given: &[f64], fallback: &[f64]) -> Vec<f64> {
    if given.is_empty() {
        fallback.to_vec()
    } else {
        given.to_vec()
    }
}
