//! Social-network reconstruction from evolutionary-game records.
//!
//! Each agent's recorded payoff is linear in its unknown neighbor
//! indicator vector: P_x(t) = sum_y a_xy * F_xy(t), where F_xy(t) is the
//! pairwise payoff agent x would collect from y given the recorded
//! strategies. Stacking rounds gives X_x = G_x A_x, one small sparse
//! regression per agent.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{pair_payoff, GameParams, GameRecord};
use crate::solvers::{solve, RegressionProblem, SolverTag};

/// One agent's estimated neighborhood.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentRow {
    pub agent: usize,
    pub n: usize,
    /// Raw solver weights over the n-1 candidate neighbors, re-indexed
    /// to full agent ids (self entry fixed at 0).
    pub weights: Vec<f64>,
    /// weights thresholded at 0.5; true entries are exactly 0 or 1.
    pub neighbors: Vec<bool>,
    pub rank: usize,
    /// Set when rank(G_x) < n-1, e.g. after strategies froze.
    pub rank_deficient: bool,
    pub residual_norm: f64,
}

/// Builds G_x (rounds x (n-1), self column excluded) and the payoff
/// target for one agent.
fn payoff_system(
    record: &GameRecord,
    params: &GameParams,
    agent: usize,
) -> Result<(DMatrix<f64>, DVector<f64>, Vec<usize>)> {
    let n = record.agents();
    let m = record.rounds();
    if agent >= n {
        return Err(Error::InvalidDimension(format!(
            "agent {agent} out of range for n = {n}"
        )));
    }
    let others: Vec<usize> = (0..n).filter(|&y| y != agent).collect();
    let mut g = DMatrix::zeros(m, n - 1);
    let mut x = DVector::zeros(m);
    for t in 0..m {
        let s = &record.strategies[t];
        for (col, &y) in others.iter().enumerate() {
            g[(t, col)] = pair_payoff(s[agent], s[y], params);
        }
        x[t] = record.payoffs[(t, agent)];
    }
    Ok((g, x, others))
}

/// Recovers agent x's neighbor row from M rounds of strategies and its
/// own payoffs.
pub fn reconstruct_agent(
    record: &GameRecord,
    params: &GameParams,
    agent: usize,
    solver: SolverTag,
) -> Result<AgentRow> {
    let n = record.agents();
    let (g, x, others) = payoff_system(record, params, agent)?;
    let rank = g.clone().svd(false, false).rank(1e-9);
    let rank_deficient = rank < n - 1;

    let row = if x.amax() == 0.0 {
        // isolated agent: no payoff ever, nothing to fit
        vec![0.0; n - 1]
    } else {
        let scales: Vec<f64> = (0..n - 1)
            .map(|c| {
                let norm = g.column(c).norm();
                if norm > 0.0 {
                    norm
                } else {
                    1.0
                }
            })
            .collect();
        let mut gn = g.clone();
        for (c, &s) in scales.iter().enumerate() {
            if s != 1.0 {
                for r in 0..gn.nrows() {
                    gn[(r, c)] /= s;
                }
            }
        }
        let lambda_max = (gn.transpose() * &x).abs().max() / gn.nrows() as f64;
        let problem = RegressionProblem::new(gn, x.clone())?
            .with_lambda(1e-4 * lambda_max)
            .with_threshold(1e-3)
            .with_column_scales(scales.clone());
        let sol = solve(&problem, solver)?;
        sol.coefficients
            .iter()
            .zip(&scales)
            .map(|(c, s)| c / s)
            .collect()
    };

    let mut weights = vec![0.0; n];
    let mut neighbors = vec![false; n];
    for (col, &y) in others.iter().enumerate() {
        weights[y] = row[col];
        neighbors[y] = row[col] > 0.5;
    }
    let a = DVector::from_iterator(n - 1, others.iter().map(|&y| weights[y]));
    let residual_norm = (&g * a - &x).norm();

    Ok(AgentRow {
        agent,
        n,
        weights,
        neighbors,
        rank,
        rank_deficient,
        residual_norm,
    })
}

/// Full adjacency assembled from per-agent rows, with a consistency
/// score: the fraction of unordered pairs where both endpoints agree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SocialNetwork {
    pub n: usize,
    pub adjacency: Vec<Vec<bool>>,
    pub consistency: f64,
    pub rows: Vec<AgentRow>,
}

impl SocialNetwork {
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.adjacency[i][j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_list_csv(&self) -> String {
        let mut out = String::from("i,j\n");
        for (i, j) in self.edges() {
            out.push_str(&format!("{i},{j}\n"));
        }
        out
    }
}

/// OR-merges the per-agent rows: an edge claimed by either endpoint is
/// kept, and disagreements lower the consistency score.
pub fn assemble_social_network(rows: Vec<AgentRow>) -> Result<SocialNetwork> {
    if rows.is_empty() {
        return Err(Error::InvalidDimension("no agent rows".into()));
    }
    let n = rows[0].n;
    if rows.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "need all {n} agent rows, got {}",
            rows.len()
        )));
    }
    let mut by_agent = vec![None; n];
    for r in rows {
        let i = r.agent;
        by_agent[i] = Some(r);
    }
    let rows: Vec<AgentRow> = by_agent
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| Error::ShapeMismatch(format!("agent {i} missing"))))
        .collect::<Result<_>>()?;

    let mut adjacency = vec![vec![false; n]; n];
    let mut agree = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let a = rows[i].neighbors[j];
            let b = rows[j].neighbors[i];
            let edge = a || b;
            adjacency[i][j] = edge;
            adjacency[j][i] = edge;
            total += 1;
            if a == b {
                agree += 1;
            }
        }
    }
    Ok(SocialNetwork {
        n,
        adjacency,
        consistency: agree as f64 / total as f64,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Strategy;
    use crate::simkit::game_sim::{simulate_game, simulate_game_with_exploration};
    use crate::simkit::network::{build_topology, Topology};

    /// Exhaustive-profile record on a 3-agent line graph 0-1-2.
    fn line_graph_record(params: &GameParams) -> GameRecord {
        let adj = vec![vec![1], vec![0, 2], vec![1]];
        let mut strategies = Vec::new();
        let mut payoffs = Vec::new();
        for bits in 0..8u8 {
            let s: Vec<Strategy> = (0..3)
                .map(|i| {
                    if bits >> i & 1 == 1 {
                        Strategy::C
                    } else {
                        Strategy::D
                    }
                })
                .collect();
            let p: Vec<f64> = (0..3)
                .map(|i| {
                    adj[i]
                        .iter()
                        .map(|&j| pair_payoff(s[i], s[j], params))
                        .sum()
                })
                .collect();
            strategies.push(s);
            payoffs.push(p);
        }
        let m = strategies.len();
        let payoffs = DMatrix::from_fn(m, 3, |r, c| payoffs[r][c]);
        GameRecord {
            strategies,
            payoffs,
        }
    }

    #[test]
    fn line_graph_exact_reconstruction() {
        let params = GameParams::pdg(1.3, 0.1).unwrap();
        let record = line_graph_record(&params);
        let rows: Vec<AgentRow> = (0..3)
            .map(|x| reconstruct_agent(&record, &params, x, SolverTag::Omp).unwrap())
            .collect();
        let net = assemble_social_network(rows).unwrap();
        assert_eq!(net.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(net.consistency, 1.0);
    }

    #[test]
    fn isolated_agent_row_is_zero() {
        let params = GameParams::pdg(1.3, 0.1).unwrap();
        let mut record = line_graph_record(&params);
        // zero agent 0's payoffs: it has no neighbors in this variant
        for t in 0..record.rounds() {
            record.payoffs[(t, 0)] = 0.0;
        }
        let row = reconstruct_agent(&record, &params, 0, SolverTag::Omp).unwrap();
        assert!(row.weights.iter().all(|&w| w == 0.0));
        assert!(row.neighbors.iter().all(|&b| !b));
    }

    #[test]
    fn simulated_pdg_round_record_is_payoff_consistent() {
        let adj = build_topology(10, Topology::Ring { k: 2 }, 5).unwrap();
        let params = GameParams::pdg(1.2, 0.1).unwrap();
        let record = simulate_game(&adj, &params, 12, 5).unwrap();
        for t in 0..record.rounds() {
            for i in 0..10 {
                let expect: f64 = adj[i]
                    .iter()
                    .map(|&j| pair_payoff(record.strategies[t][i], record.strategies[t][j], &params))
                    .sum();
                assert!((record.payoffs[(t, i)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn simulated_pdg_network_recovered() {
        let n = 22;
        let adj = build_topology(n, Topology::ErdosRenyi { p: 4.0 / 21.0 }, 3).unwrap();
        let params = GameParams::pdg(1.2, 0.1).unwrap();
        // exploration keeps both strategies in play; pure Fermi updates
        // fixate on defection and the late rounds become uninformative
        let record = simulate_game_with_exploration(&adj, &params, 15, 0.5, 3).unwrap();
        let rows: Vec<AgentRow> = (0..n)
            .map(|x| reconstruct_agent(&record, &params, x, SolverTag::LassoCd).unwrap())
            .collect();
        let net = assemble_social_network(rows).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(net.adjacency[i][j], adj[i].contains(&j), "pair ({i},{j})");
            }
        }
    }
}
