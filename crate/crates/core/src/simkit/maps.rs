//! Discrete-time map iteration.

use crate::error::{Error, Result};
use crate::timeseries::{default_channel_names, TimeSeries};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum MapSystem {
    /// Chirikov standard map, lifted (no modulo) so the recorded iterates
    /// satisfy the defining relations exactly: p' = p + K sin(theta),
    /// theta' = theta + p'.
    Standard { k: f64 },
    /// Ikeda map with phase phi = p - k / (1 + x^2 + y^2).
    Ikeda { a: f64, b: f64, k: f64, p: f64 },
    /// x' = a - x^2
    Quadratic { a: f64 },
    Identity { dim: usize },
}

impl MapSystem {
    pub fn dim(&self) -> usize {
        match self {
            MapSystem::Standard { .. } | MapSystem::Ikeda { .. } => 2,
            MapSystem::Quadratic { .. } => 1,
            MapSystem::Identity { dim } => *dim,
        }
    }

    pub fn step(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            MapSystem::Standard { k } => {
                let (theta, p) = (x[0], x[1]);
                let (t2, p2) = standard_map_step(theta, p, k);
                out[0] = t2;
                out[1] = p2;
            }
            MapSystem::Ikeda { a, b, k, p } => {
                let (x2, y2) = ikeda_step(x[0], x[1], a, b, k, p);
                out[0] = x2;
                out[1] = y2;
            }
            MapSystem::Quadratic { a } => out[0] = quadratic_map_step(x[0], a),
            MapSystem::Identity { .. } => out.copy_from_slice(x),
        }
    }
}

pub fn standard_map_step(theta: f64, p: f64, k: f64) -> (f64, f64) {
    let p_next = p + k * theta.sin();
    let theta_next = theta + p_next;
    (theta_next, p_next)
}

pub fn ikeda_step(x: f64, y: f64, a: f64, b: f64, k: f64, p: f64) -> (f64, f64) {
    let phi: f64 = p - k / (1.0 + x * x + y * y);
    let (s, c) = phi.sin_cos();
    (a + b * (x * c - y * s), b * (x * s + y * c))
}

pub fn quadratic_map_step(x: f64, a: f64) -> f64 {
    a - x * x
}

/// Iterates the map, discards the transient, and records `steps` states.
/// Recorded "times" are the iterate indices 0, 1, 2, ...
pub fn iterate_map(
    sys: &MapSystem,
    x0: &[f64],
    steps: usize,
    transient_discard: usize,
) -> Result<TimeSeries> {
    if x0.len() != sys.dim() {
        return Err(Error::ShapeMismatch(format!(
            "initial state has {} entries, map needs {}",
            x0.len(),
            sys.dim()
        )));
    }
    if steps == 0 {
        return Err(Error::NotEnoughSamples { need: 1, have: 0 });
    }
    let dim = sys.dim();
    let mut x = x0.to_vec();
    let mut next = vec![0.0; dim];
    for step in 0..transient_discard {
        sys.step(&x, &mut next);
        x.copy_from_slice(&next);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step });
        }
    }
    let mut values = DMatrix::zeros(steps, dim);
    for i in 0..steps {
        for j in 0..dim {
            values[(i, j)] = x[j];
        }
        if i + 1 < steps {
            sys.step(&x, &mut next);
            x.copy_from_slice(&next);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged {
                    step: transient_discard + i,
                });
            }
        }
    }
    TimeSeries::uniform(0.0, 1.0, values, default_channel_names(dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ikeda_matches_defining_equations() {
        let (a, b, k, p) = (1.0, 0.9, 6.0, 0.4);
        let (x, y) = (0.3, -0.2);
        let phi: f64 = p - k / (1.0 + x * x + y * y);
        let expect_x = a + b * (x * phi.cos() - y * phi.sin());
        let expect_y = b * (x * phi.sin() + y * phi.cos());
        let (nx, ny) = ikeda_step(x, y, a, b, k, p);
        assert!((nx - expect_x).abs() < 1e-15);
        assert!((ny - expect_y).abs() < 1e-15);
    }

    #[test]
    fn standard_map_integrable_limit() {
        // K = 0: p constant, theta advances by p each step
        let sys = MapSystem::Standard { k: 0.0 };
        let ts = iterate_map(&sys, &[0.3, 0.7], 10, 0).unwrap();
        for i in 0..10 {
            assert!((ts.values[(i, 1)] - 0.7).abs() < 1e-15);
            assert!((ts.values[(i, 0)] - (0.3 + 0.7 * i as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn standard_map_relations_hold_rowwise() {
        let k = 0.9;
        let sys = MapSystem::Standard { k };
        let ts = iterate_map(&sys, &[0.5, 0.6], 100, 0).unwrap();
        for i in 0..99 {
            let (theta, p) = (ts.values[(i, 0)], ts.values[(i, 1)]);
            let (tn, pn) = (ts.values[(i + 1, 0)], ts.values[(i + 1, 1)]);
            assert!((pn - (p + k * theta.sin())).abs() < 1e-12);
            assert!((tn - (theta + pn)).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_map_constant() {
        let sys = MapSystem::Identity { dim: 2 };
        let ts = iterate_map(&sys, &[1.0, 2.0], 5, 3).unwrap();
        for i in 0..5 {
            assert_eq!(ts.values[(i, 0)], 1.0);
            assert_eq!(ts.values[(i, 1)], 2.0);
        }
    }

    #[test]
    fn quadratic_map_escape_diverges() {
        let sys = MapSystem::Quadratic { a: 3.0 };
        // far outside the invariant interval: escapes to infinity
        let err = iterate_map(&sys, &[5.0], 1000, 0);
        assert!(matches!(err, Err(Error::Diverged { .. })));
    }
}
