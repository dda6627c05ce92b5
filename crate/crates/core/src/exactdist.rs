//! Exact joint failure laws on small instances.
//!
//! States are packed into integers with node `i` at bit `i`, and laws are
//! dense arrays of length `2^n`. Two independent constructions are provided:
//! forward propagation over in-neighbor layers (DAGs only, up to 20 nodes)
//! and brute-force propagation of the full transition kernel (any graph, up
//! to 12 nodes).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cascade::general_mixing_horizon;
use crate::netgraph::{layer_decomposition, ContractorNetwork};

pub const LAYERED_MAX_NODES: usize = 20;
pub const DENSE_MAX_NODES: usize = 12;
/// Largest `2^(|source| + |target|)` a single layer transition may touch.
pub const MAX_TRANSITION_WORK: u64 = 1 << 36;
/// Consecutive-law TV below which brute-force propagation stops.
pub const BRUTE_FORCE_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error("network has a directed cycle")]
    NotADag,
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),
    #[error("no convergence within {t_max} steps (last change {last_tv:e})")]
    NoConvergenceWithinTMax { t_max: usize, last_tv: f64 },
    #[error("distributions over {0} and {1} nodes")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    n: usize,
    probabilities: Vec<f64>,
}

impl JointDistribution {
    pub fn new(n: usize, probabilities: Vec<f64>) -> Self {
        assert_eq!(probabilities.len(), 1usize << n);
        JointDistribution { n, probabilities }
    }

    pub fn point_mass(n: usize, state: u64) -> Self {
        let mut p = vec![0.0; 1 << n];
        p[state as usize] = 1.0;
        JointDistribution { n, probabilities: p }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn prob(&self, state: u64) -> f64 {
        self.probabilities[state as usize]
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// `P(X_i = 1)` for every node.
    pub fn marginals(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for (s, &p) in self.probabilities.iter().enumerate() {
            for (i, mi) in m.iter_mut().enumerate() {
                if s >> i & 1 == 1 {
                    *mi += p;
                }
            }
        }
        m
    }

    /// Law of `L = beta^T X` as `(loss, probability)` pairs sorted by loss.
    pub fn loss_law(&self, beta: &[f64]) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self
            .probabilities
            .iter()
            .enumerate()
            .map(|(s, &p)| (state_loss(s as u64, beta), p))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (l, p) in pts {
            match out.last_mut() {
                Some(last) if last.0 == l => last.1 += p,
                _ => out.push((l, p)),
            }
        }
        out
    }

    /// `P(beta^T X > eps)`.
    pub fn tail(&self, beta: &[f64], eps: f64) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(s, _)| state_loss(*s as u64, beta) > eps)
            .map(|(_, &p)| p)
            .sum()
    }
}

/// `beta^T x` for a packed state, summed in node order.
pub fn state_loss(state: u64, beta: &[f64]) -> f64 {
    beta.iter()
        .enumerate()
        .filter(|(i, _)| state >> i & 1 == 1)
        .fold(0.0, |a, (_, b)| a + b)
}

/// Half the L1 distance.
pub fn tv_distance(p: &JointDistribution, q: &JointDistribution) -> Result<f64, ExactError> {
    if p.n != q.n {
        return Err(ExactError::DimensionMismatch(p.n, q.n));
    }
    Ok(0.5 * p.probabilities.iter().zip(&q.probabilities).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Expand independent Bernoulli probabilities `theta` into a product law,
/// accumulating `weight * law` into `out` (length `2^theta.len()`).
fn add_product(theta: &[f64], weight: f64, scratch: &mut Vec<f64>, out: &mut [f64]) {
    scratch.clear();
    scratch.push(weight);
    for &p in theta {
        let len = scratch.len();
        scratch.extend_from_within(..len);
        let (lo, hi) = scratch.split_at_mut(len);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            *b = *a * p;
            *a *= 1.0 - p;
        }
    }
    for (o, s) in out.iter_mut().zip(scratch.iter()) {
        *o += s;
    }
}

/// Product law `prod_i Bernoulli(m_i)`.
pub fn independent_product_law(net: &ContractorNetwork, m: &[f64]) -> Result<JointDistribution, ExactError> {
    let n = net.n();
    if n > LAYERED_MAX_NODES {
        return Err(ExactError::InstanceTooLarge(format!("{n} nodes exceeds {LAYERED_MAX_NODES}")));
    }
    if m.len() != n {
        return Err(ExactError::DimensionMismatch(n, m.len()));
    }
    let mut out = vec![0.0; 1 << n];
    add_product(m, 1.0, &mut Vec::with_capacity(1 << n), &mut out);
    Ok(JointDistribution::new(n, out))
}

/// Stationary law of a DAG by forward propagation over in-neighbor layers.
///
/// The deepest layer holds only pure principals, whose states are
/// independent Bernoulli(r) at every step. Layer `k` at step `d - k` depends
/// only on layer `k + 1` one step earlier, and the full state at step `d`
/// depends only on layer 1 at step `d - 1`.
pub fn dag_stationary(net: &ContractorNetwork) -> Result<JointDistribution, ExactError> {
    let n = net.n();
    if n > LAYERED_MAX_NODES {
        return Err(ExactError::InstanceTooLarge(format!("{n} nodes exceeds {LAYERED_MAX_NODES}")));
    }
    let layers = layer_decomposition(net);
    if !layers.is_dag {
        return Err(ExactError::NotADag);
    }
    let mut seq = layers.layers;
    seq.reverse();
    seq.push((0..n).collect());

    let r = net.r();
    let first = &seq[0];
    let mut law = vec![0.0; 1 << first.len()];
    let theta: Vec<f64> = first.iter().map(|&i| r[i]).collect();
    let mut scratch = Vec::new();
    add_product(&theta, 1.0, &mut scratch, &mut law);

    let mut pos = vec![usize::MAX; n];
    for w in seq.windows(2) {
        let (src, dst) = (&w[0], &w[1]);
        let work = 1u64
            .checked_shl((src.len() + dst.len()) as u32)
            .unwrap_or(u64::MAX);
        if work > MAX_TRANSITION_WORK {
            return Err(ExactError::InstanceTooLarge(format!(
                "layer transition {} -> {} nodes",
                src.len(),
                dst.len()
            )));
        }
        for (k, &j) in src.iter().enumerate() {
            pos[j] = k;
        }
        let mut next = vec![0.0; 1 << dst.len()];
        let mut theta = vec![0.0; dst.len()];
        for (s, &p) in law.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (t, &i) in dst.iter().enumerate() {
                let f: f64 = net
                    .in_edges(i)
                    .filter(|&(j, _)| s >> pos[j] & 1 == 1)
                    .map(|(_, w)| w)
                    .sum();
                theta[t] = (1.0 - net.alpha()[i]) * r[i] + net.alpha()[i] * f;
            }
            add_product(&theta, p, &mut scratch, &mut next);
        }
        for &j in src {
            pos[j] = usize::MAX;
        }
        law = next;
    }
    Ok(JointDistribution::new(n, law))
}

/// Dense one-step kernel of the cascade on up to [`DENSE_MAX_NODES`] nodes.
pub struct DenseKernel<'a> {
    net: &'a ContractorNetwork,
    // Per-state failure thresholds, row-major `state * n + i`.
    theta: Vec<f64>,
}

impl<'a> DenseKernel<'a> {
    pub fn new(net: &'a ContractorNetwork) -> Result<Self, ExactError> {
        let n = net.n();
        if n > DENSE_MAX_NODES {
            return Err(ExactError::InstanceTooLarge(format!("{n} nodes exceeds {DENSE_MAX_NODES}")));
        }
        let mut theta = vec![0.0; (1 << n) * n];
        let mut x = vec![false; n];
        for s in 0..1usize << n {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = s >> i & 1 == 1;
            }
            for i in 0..n {
                theta[s * n + i] = net.threshold(i, &x);
            }
        }
        Ok(DenseKernel { net, theta })
    }

    /// Law of `X^0`: independent Bernoulli(r).
    pub fn initial(&self) -> JointDistribution {
        let n = self.net.n();
        let mut out = vec![0.0; 1 << n];
        add_product(self.net.r(), 1.0, &mut Vec::new(), &mut out);
        JointDistribution::new(n, out)
    }

    pub fn step(&self, law: &JointDistribution) -> JointDistribution {
        let n = self.net.n();
        let mut out = vec![0.0; 1 << n];
        let mut scratch = Vec::with_capacity(1 << n);
        for (s, &p) in law.probabilities.iter().enumerate() {
            if p != 0.0 {
                add_product(&self.theta[s * n..(s + 1) * n], p, &mut scratch, &mut out);
            }
        }
        JointDistribution::new(n, out)
    }

    /// Laws of `X^0, ..., X^steps` from the independent initial law.
    pub fn laws(&self, steps: usize) -> Vec<JointDistribution> {
        let mut v = vec![self.initial()];
        for _ in 0..steps {
            let next = self.step(v.last().unwrap());
            v.push(next);
        }
        v
    }
}

/// Laws of `X^0, ..., X^steps` by dense propagation.
pub fn propagate_laws(net: &ContractorNetwork, steps: usize) -> Result<Vec<JointDistribution>, ExactError> {
    Ok(DenseKernel::new(net)?.laws(steps))
}

/// Stationary law by propagating the full kernel until consecutive laws are
/// within [`BRUTE_FORCE_TOLERANCE`] in total variation. `t_max = None` uses
/// ten times the general mixing bound at that tolerance.
pub fn brute_force_stationary(net: &ContractorNetwork, t_max: Option<usize>) -> Result<JointDistribution, ExactError> {
    let kernel = DenseKernel::new(net)?;
    let t_max = t_max.unwrap_or_else(|| 10 * general_mixing_horizon(net, BRUTE_FORCE_TOLERANCE).steps.max(1));
    let mut law = kernel.initial();
    let mut last_tv = f64::INFINITY;
    for _ in 0..t_max {
        let next = kernel.step(&law);
        last_tv = tv_distance(&law, &next)?;
        law = next;
        if last_tv < BRUTE_FORCE_TOLERANCE {
            return Ok(law);
        }
    }
    Err(ExactError::NoConvergenceWithinTMax { t_max, last_tv })
}
