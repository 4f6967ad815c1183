//! Evolutionary-game domain types: payoff matrices, the Fermi update
//! probability, and recorded strategy/payoff rounds.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    C,
    D,
}

impl Strategy {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "C" => Ok(Strategy::C),
            "D" => Ok(Strategy::D),
            other => Err(Error::Parse(format!("invalid strategy '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::C => "C",
            Strategy::D => "D",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Pdg,
    Sg,
}

/// Game parameters. The payoff matrix is derived from these on demand:
///
/// PDG: [[1, 0], [b, 0]]    SG: [[1, 1-r], [1+r, 0]]
///
/// with rows indexed by the focal player's strategy (C, D) and columns
/// by the opponent's.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GameParams {
    pub game: GameKind,
    pub b: f64,
    pub r: f64,
    pub kappa: f64,
}

impl GameParams {
    pub fn pdg(b: f64, kappa: f64) -> Result<Self> {
        if !(1.0 < b && b < 2.0) {
            return Err(Error::Degenerate(format!("PDG needs 1 < b < 2, got {b}")));
        }
        if kappa < 0.0 {
            return Err(Error::Degenerate("kappa must be nonnegative".into()));
        }
        Ok(Self {
            game: GameKind::Pdg,
            b,
            r: 0.0,
            kappa,
        })
    }

    pub fn sg(r: f64, kappa: f64) -> Result<Self> {
        if !(0.0 < r && r < 1.0) {
            return Err(Error::Degenerate(format!("SG needs 0 < r < 1, got {r}")));
        }
        if kappa < 0.0 {
            return Err(Error::Degenerate("kappa must be nonnegative".into()));
        }
        Ok(Self {
            game: GameKind::Sg,
            b: 0.0,
            r,
            kappa,
        })
    }

    pub fn payoff_matrix(&self) -> [[f64; 2]; 2] {
        match self.game {
            GameKind::Pdg => [[1.0, 0.0], [self.b, 0.0]],
            GameKind::Sg => [[1.0, 1.0 - self.r], [1.0 + self.r, 0.0]],
        }
    }
}

/// S_self' * P * S_other for the selected game.
pub fn pair_payoff(s_self: Strategy, s_other: Strategy, params: &GameParams) -> f64 {
    let p = params.payoff_matrix();
    let i = if s_self == Strategy::C { 0 } else { 1 };
    let j = if s_other == Strategy::C { 0 } else { 1 };
    p[i][j]
}

/// Fermi adoption probability W(S_i <- S_j) = 1 / (1 + exp((P_i - P_j)/kappa)).
/// kappa = 0 is the absolute-rationality limit (0/1, with 1/2 on ties).
pub fn fermi_probability(p_i: f64, p_j: f64, kappa: f64) -> f64 {
    if kappa == 0.0 {
        return if p_j > p_i {
            1.0
        } else if p_j < p_i {
            0.0
        } else {
            0.5
        };
    }
    1.0 / (1.0 + ((p_i - p_j) / kappa).exp())
}

/// Recorded strategy/payoff history of all agents over M rounds.
#[derive(Debug, Clone)]
pub struct GameRecord {
    pub strategies: Vec<Vec<Strategy>>,
    pub payoffs: DMatrix<f64>,
}

impl GameRecord {
    pub fn rounds(&self) -> usize {
        self.strategies.len()
    }

    pub fn agents(&self) -> usize {
        self.strategies.first().map_or(0, |r| r.len())
    }

    /// CSV `round,agent,strategy,payoff`, one row per (round, agent).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "round,agent,strategy,payoff")?;
        for (t, row) in self.strategies.iter().enumerate() {
            for (i, s) in row.iter().enumerate() {
                writeln!(out, "{},{},{},{}", t + 1, i, s.as_str(), self.payoffs[(t, i)])?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty game CSV".into()))??;
        if header.trim() != "round,agent,strategy,payoff" {
            return Err(Error::Parse(format!(
                "expected header 'round,agent,strategy,payoff', got '{header}'"
            )));
        }
        let mut entries: Vec<(usize, usize, Strategy, f64)> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected 4 fields", lineno + 2)));
            }
            let round: usize = f[0]
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
            let agent: usize = f[1]
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
            let strategy = Strategy::parse(f[2])?;
            let payoff: f64 = f[3]
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
            entries.push((round, agent, strategy, payoff));
        }
        if entries.is_empty() {
            return Err(Error::Parse("no game rows".into()));
        }
        let rounds = entries.iter().map(|e| e.0).max().unwrap();
        let agents = entries.iter().map(|e| e.1).max().unwrap() + 1;
        if entries.len() != rounds * agents {
            return Err(Error::Parse(format!(
                "expected {} rows for {rounds} rounds x {agents} agents, got {}",
                rounds * agents,
                entries.len()
            )));
        }
        let mut strategies = vec![vec![Strategy::C; agents]; rounds];
        let mut payoffs = DMatrix::zeros(rounds, agents);
        for (round, agent, s, p) in entries {
            strategies[round - 1][agent] = s;
            payoffs[(round - 1, agent)] = p;
        }
        Ok(GameRecord {
            strategies,
            payoffs,
        })
    }

    pub fn to_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn from_csv_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(BufReader::new(file))
    }
}
