//! Critical loads of the straight configuration.
//!
//! Linearizing about `θ ≡ 0` at `α = ψ = 0` gives `−h″ − P h = 0`,
//! `h(0) = 0`, `h′(1) − Pε h(1) = 0`. Nontrivial solutions `h = sin(√P s)`
//! exist when `cot √P − ε √P = 0` with `√P ≠ nπ`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Distance below which a load is treated as sitting on a critical load.
pub const BIFURCATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalLoadTable {
    pub epsilon: f64,
    /// Ascending critical loads, one per mode.
    pub roots: Vec<f64>,
    pub k_max: usize,
}

/// Bracket in `x = √P` holding the `k`th root (1-based).
pub fn root_bracket(epsilon: f64, k: usize) -> (f64, f64) {
    let kf = k as f64;
    let mid = (2.0 * kf - 1.0) * FRAC_PI_2;
    if epsilon > 0.0 {
        ((kf - 1.0) * PI, mid)
    } else if epsilon < 0.0 {
        (mid, kf * PI)
    } else {
        (mid, mid)
    }
}

fn characteristic(x: f64, epsilon: f64) -> f64 {
    x.cos() / x.sin() - epsilon * x
}

fn root_in_bracket(epsilon: f64, k: usize) -> f64 {
    let (mut lo, mut hi) = root_bracket(epsilon, k);
    if epsilon == 0.0 {
        return lo;
    }
    // ε > 0: g → +∞ at the left end and g < 0 at the right end.
    // ε < 0: g > 0 at the left end and g → −∞ at the right end.
    // Both brackets have g positive on the left and negative on the right.
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        x = 0.5 * (lo + hi);
        if x <= lo || x >= hi {
            break;
        }
        let g = characteristic(x, epsilon);
        if g.abs() < 1e-12 {
            break;
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    x
}

/// First `k_max` roots of `cot √P − ε √P = 0`.
pub fn critical_loads(epsilon: f64, k_max: usize) -> Result<CriticalLoadTable> {
    if !epsilon.is_finite() {
        return Err(Error::NonFinite("epsilon"));
    }
    if k_max == 0 {
        return Err(Error::InvalidSettings("k_max must be at least 1".into()));
    }
    let roots = (1..=k_max)
        .map(|k| {
            let x = root_in_bracket(epsilon, k);
            x * x
        })
        .collect();
    Ok(CriticalLoadTable {
        epsilon,
        roots,
        k_max,
    })
}

/// Morse index of the straight configuration: the number of critical loads
/// strictly below `load`. Non-positive loads give zero.
pub fn straight_branch_index(load: f64, epsilon: f64) -> Result<usize> {
    if !load.is_finite() {
        return Err(Error::NonFinite("load"));
    }
    if load <= 0.0 {
        return Ok(0);
    }
    let k_max = (load.sqrt() / PI).ceil() as usize + 2;
    let table = critical_loads(epsilon, k_max)?;
    let mut count = 0;
    for root in table.roots {
        if (load - root).abs() <= BIFURCATION_TOL {
            return Err(Error::AtBifurcation { load, root });
        }
        if root < load {
            count += 1;
        }
    }
    Ok(count)
}
