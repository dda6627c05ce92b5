//! Monte Carlo simulation of the failure cascade.
//!
//! At each step every node redraws its state:
//! `X_i^{t+1} = 1` iff `U_i^{t+1} <= (1 - alpha_i) r_i + alpha_i sum_j w_ij X_j^t`,
//! starting from independent failures `X_i^0 ~ Bernoulli(r_i)`.
//! Replications run in parallel with results collected in replication order,
//! so output is identical for any thread count.

mod quantile;
mod rng;
mod time_varying;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use quantile::{order_statistic_ranks, LossDistribution, QuantileEstimate, DEFAULT_QUANTILES};
pub use rng::{mix64, to_unit, ReplicationStream};
pub use time_varying::{simulate_time_varying, TimeVaryingNetwork, TimeVaryingReport};

use crate::meanfield::mean_field_path;
use crate::netgraph::{check_assumption_monotone, layer_decomposition, operator_norm_aw_squared, ContractorNetwork};

#[derive(Debug, Error, PartialEq)]
pub enum CascadeError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("state has length {got}, network has {expected} nodes")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("node {node} changes role between snapshots {t} and {}", t + 1)]
    RolePersistenceViolated { t: usize, node: usize },
    #[error("node {node} has alpha {alpha} above the bound {bound} in snapshot {t}")]
    AlphaBoundViolated { t: usize, node: usize, alpha: f64, bound: f64 },
}

/// One failure configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateVector(pub Vec<bool>);

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        StateVector(vec![false; n])
    }

    pub fn ones(n: usize) -> Self {
        StateVector(vec![true; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `beta^T x`.
    pub fn loss(&self, beta: &[f64]) -> f64 {
        self.0.iter().zip(beta).filter(|(x, _)| **x).fold(0.0, |a, (_, b)| a + b)
    }

    /// Bit `i` of the packed integer is node `i`.
    pub fn pack(&self) -> u64 {
        self.0.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    pub fn unpack(bits: u64, n: usize) -> Self {
        StateVector((0..n).map(|i| bits >> i & 1 == 1).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horizon {
    Auto,
    Steps(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub replications: usize,
    pub horizon: Horizon,
    pub seed: u64,
    /// Total-variation target used by `Horizon::Auto` on cyclic graphs.
    pub epsilon: f64,
    /// Uniform alpha applied to intermediaries only.
    pub alpha_override: Option<f64>,
    pub quantiles: Vec<f64>,
    pub confidence: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            replications: 100_000,
            horizon: Horizon::Auto,
            seed: 0,
            epsilon: 0.01,
            alpha_override: None,
            quantiles: DEFAULT_QUANTILES.to_vec(),
            confidence: 0.95,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), CascadeError> {
        let bad = |m: String| Err(CascadeError::InvalidConfig(m));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon {} must lie in (0, 1)", self.epsilon));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad(format!("confidence {} must lie in (0, 1)", self.confidence));
        }
        if let Some(q) = self.quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return bad(format!("quantile {q} must lie in (0, 1)"));
        }
        if let Some(a) = self.alpha_override {
            if !(0.0..=1.0).contains(&a) {
                return bad(format!("alpha override {a} must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// The network the config actually simulates.
    pub fn effective_network(&self, net: &ContractorNetwork) -> ContractorNetwork {
        match self.alpha_override {
            Some(a) => net.with_intermediary_alpha(a),
            None => net.clone(),
        }
    }

    pub fn resolve_horizon(&self, net: &ContractorNetwork) -> usize {
        match self.horizon {
            Horizon::Steps(t) => t,
            Horizon::Auto => mixing_horizon(net, self.epsilon).steps,
        }
    }
}

/// One synchronous update from explicit uniforms.
pub fn step(net: &ContractorNetwork, x: &StateVector, uniforms: &[f64]) -> StateVector {
    StateVector((0..net.n()).map(|i| uniforms[i] <= net.threshold(i, &x.0)).collect())
}

/// `X^0 .. X^horizon` for replication `rep`.
pub fn simulate_trajectory(net: &ContractorNetwork, cfg: &SimulationConfig, rep: usize) -> Vec<StateVector> {
    let net = cfg.effective_network(net);
    let horizon = cfg.resolve_horizon(&net);
    trajectory(&net, ReplicationStream::new(cfg.seed, rep as u64, net.n()), horizon)
}

fn trajectory(net: &ContractorNetwork, stream: ReplicationStream, horizon: usize) -> Vec<StateVector> {
    let n = net.n();
    let mut u = vec![0.0; n];
    stream.step_uniforms(0, &mut u);
    let mut path = Vec::with_capacity(horizon + 1);
    path.push(StateVector((0..n).map(|i| u[i] <= net.r()[i]).collect()));
    for t in 1..=horizon {
        stream.step_uniforms(t, &mut u);
        let next = step(net, path.last().unwrap(), &u);
        path.push(next);
    }
    path
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MixingBranch {
    /// Finite mixing: the law of `X^t` is stationary from `t = depth` on.
    Dag { depth: usize },
    /// Geometric bound driven by `||(AW)^2||`.
    NormBound { norm_aw_squared: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingCertificate {
    pub steps: usize,
    pub epsilon: f64,
    pub branch: MixingBranch,
}

/// Steps after which the law of `X^t` is within `epsilon` of stationarity.
pub fn mixing_horizon(net: &ContractorNetwork, epsilon: f64) -> MixingCertificate {
    match layer_decomposition(net).depth {
        Some(depth) => MixingCertificate {
            steps: depth,
            epsilon,
            branch: MixingBranch::Dag { depth },
        },
        None => general_mixing_horizon(net, epsilon),
    }
}

/// `ceil(2 + 2 / (1 - nu) ln(n / epsilon))`, ignoring DAG structure.
pub fn general_mixing_horizon(net: &ContractorNetwork, epsilon: f64) -> MixingCertificate {
    let nu = operator_norm_aw_squared(net);
    let steps = time_bound(net.n(), nu, epsilon);
    MixingCertificate {
        steps,
        epsilon,
        branch: MixingBranch::NormBound { norm_aw_squared: nu },
    }
}

fn time_bound(n: usize, nu: f64, epsilon: f64) -> usize {
    let nu = nu.min(1.0 - 1e-12);
    let v = 2.0 + 2.0 / (1.0 - nu) * (n as f64 / epsilon).ln().max(0.0);
    // Guard against ceil of a value that is an integer up to rounding.
    (v - 1e-9).ceil().max(0.0) as usize
}

/// Paired loss samples at `t = 0` and at the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedLosses {
    pub horizon: usize,
    /// `(L(X^0), L(X^horizon))` per replication, in replication order.
    pub per_replication: Vec<(f64, f64)>,
    pub t0: LossDistribution,
    pub stationary: LossDistribution,
}

/// Nodes whose state is needed at each step to evaluate `L(X^0)` and
/// `L(X^horizon)`, and the lossy pure principals whose horizon draw may
/// reuse their `t = 0` draw.
///
/// A principal whose `t = 0` state cannot reach any lossy node by the
/// horizon is independent of everything else in `L(X^horizon)`, and its
/// horizon state has the same Bernoulli law as its initial one. Reusing the
/// initial draw leaves the law of each loss unchanged and cancels the
/// principal's contribution from `L(X^horizon) - L(X^0)`.
fn needed_sets(net: &ContractorNetwork, horizon: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = net.n();
    let lossy: Vec<usize> = (0..n).filter(|&i| net.beta()[i] != 0.0).collect();
    let mut sets = vec![Vec::new(); horizon + 1];
    sets[horizon] = lossy.clone();
    let mut mark = vec![false; n];
    let mut reach_lossy = vec![false; n];
    for t in (0..horizon).rev() {
        let mut next = Vec::new();
        for &i in &sets[t + 1] {
            for &j in net.principals(i) {
                if !mark[j] {
                    mark[j] = true;
                    next.push(j);
                }
            }
        }
        if t == 0 {
            for &j in &next {
                reach_lossy[j] = true;
            }
            for &i in &lossy {
                if !mark[i] {
                    mark[i] = true;
                    next.push(i);
                }
            }
        }
        for &j in &next {
            mark[j] = false;
        }
        next.sort_unstable();
        sets[t] = next;
    }
    let reuse = if horizon == 0 {
        Vec::new()
    } else {
        lossy
            .into_iter()
            .filter(|&i| net.in_degree(i) == 0 && net.alpha()[i] == 0.0 && !reach_lossy[i])
            .collect()
    };
    (sets, reuse)
}

/// Sample `L(X^0)` and `L(X^horizon)` on every replication. Only nodes that
/// can influence the losses are simulated, with the same per-node uniforms
/// as [`simulate_trajectory`], except that lossy pure principals with no
/// downstream influence within the horizon keep their `t = 0` state. Each
/// loss has its exact law; the pair is positively coupled, which sharpens
/// comparisons between the two.
pub fn sample_stationary_losses(net: &ContractorNetwork, cfg: &SimulationConfig) -> Result<PairedLosses, CascadeError> {
    cfg.validate()?;
    let net = cfg.effective_network(net);
    let horizon = cfg.resolve_horizon(&net);
    let (mut sets, reuse) = needed_sets(&net, horizon);
    if horizon > 0 {
        sets[horizon].retain(|i| reuse.binary_search(i).is_err());
    }
    let n = net.n();
    let beta = net.beta();
    let r = net.r();
    let alpha = net.alpha();
    let lossy: Vec<usize> = (0..n).filter(|&i| beta[i] != 0.0).collect();

    let per_replication: Vec<(f64, f64)> = (0..cfg.replications)
        .into_par_iter()
        .map_init(
            || vec![vec![false; n]; horizon + 1],
            |state, rep| {
                let stream = ReplicationStream::new(cfg.seed, rep as u64, n);
                for &i in &sets[0] {
                    state[0][i] = stream.uniform(0, i) <= r[i];
                }
                for t in 1..=horizon {
                    let (prev, cur) = state.split_at_mut(t);
                    let first = &prev[0];
                    let prev = &prev[t - 1];
                    let cur = &mut cur[0];
                    for &i in &sets[t] {
                        let s: f64 = net.in_edges(i).filter(|&(j, _)| prev[j]).map(|(_, w)| w).sum();
                        let th = (1.0 - alpha[i]) * r[i] + alpha[i] * s;
                        cur[i] = stream.uniform(t, i) <= th;
                    }
                    if t == horizon {
                        for &i in &reuse {
                            cur[i] = first[i];
                        }
                    }
                }
                let loss = |x: &[bool]| -> f64 { lossy.iter().filter(|&&i| x[i]).fold(0.0, |a, &i| a + beta[i]) };
                (loss(&state[0]), loss(&state[horizon]))
            },
        )
        .collect();

    let t0 = LossDistribution::from_samples(
        per_replication.iter().map(|p| p.0).collect(),
        &cfg.quantiles,
        cfg.confidence,
    );
    let stationary = LossDistribution::from_samples(
        per_replication.iter().map(|p| p.1).collect(),
        &cfg.quantiles,
        cfg.confidence,
    );
    Ok(PairedLosses {
        horizon,
        per_replication,
        t0,
        stationary,
    })
}

/// Empirical `P(X_i^t = 1)` for every `t <= horizon` and node `i`.
pub fn empirical_marginals(net: &ContractorNetwork, cfg: &SimulationConfig) -> Result<Vec<Vec<f64>>, CascadeError> {
    cfg.validate()?;
    let net = cfg.effective_network(net);
    let horizon = cfg.resolve_horizon(&net);
    let n = net.n();
    let zero = || vec![0u64; (horizon + 1) * n];
    let counts = (0..cfg.replications)
        .into_par_iter()
        .fold(zero, |mut acc, rep| {
            let path = trajectory(&net, ReplicationStream::new(cfg.seed, rep as u64, n), horizon);
            for (t, x) in path.iter().enumerate() {
                for (i, &b) in x.0.iter().enumerate() {
                    acc[t * n + i] += b as u64;
                }
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        });
    let reps = cfg.replications as f64;
    Ok((0..=horizon)
        .map(|t| (0..n).map(|i| counts[t * n + i] as f64 / reps).collect())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub t: usize,
    pub epsilon: f64,
    pub survival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// Set when intermediaries violate the monotonicity assumption; the
    /// curves are still emitted.
    pub exploratory: bool,
    /// `m^t <= m^{t+1}` for every step in the horizon.
    pub mean_field_monotone: bool,
    /// No replication saw a node recover between consecutive steps.
    pub pathwise_monotone: bool,
    pub violations: usize,
    pub replications: usize,
    pub horizon: usize,
    pub survival_curves: Vec<SurvivalPoint>,
}

/// Monotone coupling `X~_i^t = 1{U_i <= m_i^t}` with one uniform per node
/// per replication. Its marginals match the cascade's at every step.
pub fn coupled_dominance_test(
    net: &ContractorNetwork,
    cfg: &SimulationConfig,
    epsilons: &[f64],
) -> Result<DominanceReport, CascadeError> {
    cfg.validate()?;
    let net = cfg.effective_network(net);
    let horizon = cfg.resolve_horizon(&net);
    let path = mean_field_path(&net, horizon);
    let mean_field_monotone = path.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| a <= b));
    let n = net.n();
    let beta = net.beta();
    let ne = epsilons.len();

    let zero = || (0usize, vec![0u64; (horizon + 1) * ne]);
    let (violations, counts) = (0..cfg.replications)
        .into_par_iter()
        .fold(zero, |(mut viol, mut acc), rep| {
            let stream = ReplicationStream::new(cfg.seed, rep as u64, n);
            let u: Vec<f64> = (0..n).map(|i| stream.uniform(0, i)).collect();
            let mut prev: Option<Vec<bool>> = None;
            for (t, m) in path.iter().enumerate() {
                let x: Vec<bool> = u.iter().zip(m).map(|(u, m)| u <= m).collect();
                if let Some(p) = &prev {
                    if p.iter().zip(&x).any(|(a, b)| *a && !*b) {
                        viol += 1;
                    }
                }
                let loss = x.iter().zip(beta).filter(|(b, _)| **b).fold(0.0, |a, (_, v)| a + v);
                for (k, &e) in epsilons.iter().enumerate() {
                    acc[t * ne + k] += (loss > e) as u64;
                }
                prev = Some(x);
            }
            (viol, acc)
        })
        .reduce(zero, |(va, mut a), (vb, b)| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            (va + vb, a)
        });

    let reps = cfg.replications as f64;
    let survival_curves = (0..=horizon)
        .flat_map(|t| {
            let counts = &counts;
            epsilons.iter().enumerate().map(move |(k, &e)| SurvivalPoint {
                t,
                epsilon: e,
                survival: counts[t * ne + k] as f64 / reps,
            })
        })
        .collect();
    Ok(DominanceReport {
        exploratory: !check_assumption_monotone(&net).all_satisfied,
        mean_field_monotone,
        pathwise_monotone: violations == 0,
        violations,
        replications: cfg.replications,
        horizon,
        survival_curves,
    })
}
