//! Synchronous coupling on a sequence of network snapshots.
//!
//! Snapshot `t` drives the transition from step `t` to `t + 1`; the last
//! snapshot is reused once the sequence runs out.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CascadeError, ReplicationStream, SimulationConfig, StateVector};
use crate::netgraph::{ContractorNetwork, Role};

/// Snapshots over a fixed node set. Idiosyncratic risks are taken from the
/// first snapshot.
#[derive(Debug, Clone)]
pub struct TimeVaryingNetwork {
    snapshots: Vec<ContractorNetwork>,
    alpha_bar: f64,
}

impl TimeVaryingNetwork {
    /// Checks that pure obligees stay pure obligees, nodes with
    /// subcontractor ties keep at least one, and every node that is not a
    /// pure obligee has `alpha <= alpha_bar`.
    pub fn new(snapshots: Vec<ContractorNetwork>, alpha_bar: f64) -> Result<Self, CascadeError> {
        if snapshots.is_empty() {
            return Err(CascadeError::InvalidConfig("at least one snapshot is required".into()));
        }
        if !(alpha_bar > 0.0 && alpha_bar < 1.0) {
            return Err(CascadeError::InvalidConfig(format!("alpha_bar {alpha_bar} must lie in (0, 1)")));
        }
        let n = snapshots[0].n();
        for (t, s) in snapshots.iter().enumerate() {
            if s.n() != n {
                return Err(CascadeError::DimensionMismatch { expected: n, got: s.n() });
            }
            for i in 0..n {
                if s.role(i) != Role::PureObligee && s.alpha()[i] > alpha_bar {
                    return Err(CascadeError::AlphaBoundViolated {
                        t,
                        node: i,
                        alpha: s.alpha()[i],
                        bound: alpha_bar,
                    });
                }
            }
        }
        for (t, pair) in snapshots.windows(2).enumerate() {
            for i in 0..n {
                let was_obligee = pair[0].role(i) == Role::PureObligee;
                let becomes_principal = pair[1].out_degree(i) > 0;
                let was_principal = pair[0].out_degree(i) > 0;
                if (was_obligee && becomes_principal) || (was_principal && !becomes_principal) {
                    return Err(CascadeError::RolePersistenceViolated { t, node: i });
                }
            }
        }
        Ok(TimeVaryingNetwork { snapshots, alpha_bar })
    }

    pub fn n(&self) -> usize {
        self.snapshots[0].n()
    }

    pub fn alpha_bar(&self) -> f64 {
        self.alpha_bar
    }

    pub fn snapshots(&self) -> &[ContractorNetwork] {
        &self.snapshots
    }

    /// Network driving the transition `t -> t + 1`.
    pub fn snapshot(&self, t: usize) -> &ContractorNetwork {
        &self.snapshots[t.min(self.snapshots.len() - 1)]
    }

    fn threshold(&self, t: usize, i: usize, x: &[bool]) -> f64 {
        let s = self.snapshot(t);
        let r = self.snapshots[0].r()[i];
        let a = s.alpha()[i];
        let f: f64 = s.in_edges(i).filter(|&(j, _)| x[j]).map(|(_, w)| w).sum();
        (1.0 - a) * r + a * f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeVaryingReport {
    /// `n alpha_bar^{floor(t/2)}` for `t = 0..=horizon`.
    pub tv_bound: Vec<f64>,
    /// `n ||M_{t-1} ... M_0||_inf` with `M_s = A_s W_s`, never looser than
    /// `tv_bound`.
    pub product_bound: Vec<f64>,
    /// Fraction of replications with `X^t != Y^t`.
    pub uncoalesced_fraction: Vec<f64>,
    /// Mean Hamming distance `E ||X^t - Y^t||_1`.
    pub mean_discrepancy: Vec<f64>,
    pub replications: usize,
}

/// Run `cfg.replications` coupled pairs from `x0` and `y0` for the horizon
/// in `cfg` (an `Auto` horizon falls back to the first snapshot's mixing
/// bound).
pub fn simulate_time_varying(
    tv: &TimeVaryingNetwork,
    x0: &StateVector,
    y0: &StateVector,
    cfg: &SimulationConfig,
) -> Result<TimeVaryingReport, CascadeError> {
    cfg.validate()?;
    let n = tv.n();
    for s in [x0, y0] {
        if s.len() != n {
            return Err(CascadeError::DimensionMismatch { expected: n, got: s.len() });
        }
    }
    let horizon = cfg.resolve_horizon(tv.snapshot(0));

    let zero = || (vec![0u64; horizon + 1], vec![0u64; horizon + 1]);
    let (differ, hamming) = (0..cfg.replications)
        .into_par_iter()
        .fold(zero, |(mut differ, mut ham), rep| {
            let stream = ReplicationStream::new(cfg.seed, rep as u64, n);
            let mut x = x0.0.clone();
            let mut y = y0.0.clone();
            let mut nx = vec![false; n];
            let mut ny = vec![false; n];
            for t in 0..=horizon {
                let d = x.iter().zip(&y).filter(|(a, b)| a != b).count() as u64;
                differ[t] += (d > 0) as u64;
                ham[t] += d;
                if t == horizon {
                    break;
                }
                for i in 0..n {
                    let u = stream.uniform(t + 1, i);
                    nx[i] = u <= tv.threshold(t, i, &x);
                    ny[i] = u <= tv.threshold(t, i, &y);
                }
                std::mem::swap(&mut x, &mut nx);
                std::mem::swap(&mut y, &mut ny);
            }
            (differ, ham)
        })
        .reduce(zero, |(mut a, mut b), (c, d)| {
            a.iter_mut().zip(c).for_each(|(x, y)| *x += y);
            b.iter_mut().zip(d).for_each(|(x, y)| *x += y);
            (a, b)
        });

    let reps = cfg.replications as f64;
    let nf = n as f64;
    let tv_bound = (0..=horizon).map(|t| nf * tv.alpha_bar.powi((t / 2) as i32)).collect();
    let mut product_bound = Vec::with_capacity(horizon + 1);
    let mut v = vec![1.0; n];
    let mut next = vec![0.0; n];
    for t in 0..=horizon {
        product_bound.push(nf * v.iter().fold(0.0f64, |a, &b| a.max(b)));
        // v = M_t ... M_0 1 after this step.
        tv.snapshot(t).aw_apply(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
    }
    Ok(TimeVaryingReport {
        tv_bound,
        product_bound,
        uncoalesced_fraction: differ.iter().map(|&c| c as f64 / reps).collect(),
        mean_discrepancy: hamming.iter().map(|&c| c as f64 / reps).collect(),
        replications: cfg.replications,
    })
}
