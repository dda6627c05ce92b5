//! Mean-field failure probabilities and derived risk measures.
//!
//! The marginal failure probabilities of the cascade obey the linear
//! recursion `m^{t+1} = (I - A) r + AW m^t`, whose unique fixed point is
//! `m = (I - AW)^{-1} (I - A) r`. Everything in this module is a linear solve
//! against `I - AW` or its transpose.

mod resolvent;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use resolvent::{neumann, residual, DirectFactor, NeumannOutcome};

use crate::netgraph::{check_assumption_monotone, layer_decomposition, operator_norm_aw_squared, ContractorNetwork, Role};

/// Above this many nodes `Auto` iterates instead of factoring.
pub const AUTO_DIRECT_MAX_NODES: usize = 10_000;
/// Largest strongly connected block `Auto` will factor densely.
pub const AUTO_DIRECT_MAX_BLOCK: usize = 1_500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Direct,
    Neumann,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    DirectSolve,
    NeumannIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tolerance: f64,
    /// `None` derives the cap from `||(AW)^2||`.
    pub max_iterations: Option<usize>,
    pub method: SolverChoice,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-12,
            max_iterations: None,
            method: SolverChoice::Auto,
        }
    }
}

impl SolverConfig {
    pub fn direct() -> Self {
        SolverConfig {
            method: SolverChoice::Direct,
            ..Default::default()
        }
    }

    pub fn neumann() -> Self {
        SolverConfig {
            method: SolverChoice::Neumann,
            ..Default::default()
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MeanFieldError {
    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    SolverDidNotConverge { iterations: usize, residual: f64 },
    #[error("node {0} is not an intermediary")]
    NotAnIntermediary(usize),
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("vector has length {got}, network has {expected} nodes")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    pub m: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub method: SolveMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityVector {
    pub u: Vec<f64>,
    pub u_tilde: Vec<f64>,
}

/// Default iteration cap `2 ceil(ln(n / 1e-12) / (1 - nu)) + 2`.
pub fn default_iteration_cap(net: &ContractorNetwork) -> usize {
    let nu = operator_norm_aw_squared(net).min(1.0 - 1e-12);
    let n = net.n().max(1) as f64;
    2 * ((n / 1e-12).ln() / (1.0 - nu)).ceil() as usize + 2
}

/// Reusable solver for `I - AW` systems on one network.
pub struct Resolvent<'a> {
    net: &'a ContractorNetwork,
    factor: Option<DirectFactor>,
    tolerance: f64,
    cap: usize,
}

impl<'a> Resolvent<'a> {
    pub fn new(net: &'a ContractorNetwork, cfg: &SolverConfig) -> Self {
        let factor = match cfg.method {
            SolverChoice::Direct => Some(DirectFactor::new(net)),
            SolverChoice::Neumann => None,
            SolverChoice::Auto if net.n() > AUTO_DIRECT_MAX_NODES => None,
            SolverChoice::Auto => Some(DirectFactor::new(net)).filter(|f| f.largest_block() <= AUTO_DIRECT_MAX_BLOCK),
        };
        let cap = cfg.max_iterations.unwrap_or_else(|| default_iteration_cap(net));
        Resolvent {
            net,
            factor,
            tolerance: cfg.tolerance,
            cap,
        }
    }

    pub fn method(&self) -> SolveMethod {
        if self.factor.is_some() {
            SolveMethod::DirectSolve
        } else {
            SolveMethod::NeumannIteration
        }
    }

    fn check_len(&self, v: &[f64]) -> Result<(), MeanFieldError> {
        if v.len() != self.net.n() {
            return Err(MeanFieldError::DimensionMismatch {
                expected: self.net.n(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Solve `(I - AW) x = b` or its transpose, returning the solution with
    /// iteration count and certified residual.
    pub fn solve_with_stats(&self, b: &[f64], transpose: bool) -> Result<(Vec<f64>, usize, f64), MeanFieldError> {
        self.check_len(b)?;
        let start = match &self.factor {
            Some(f) if transpose => f.solve_transpose(self.net, b),
            Some(f) => f.solve(self.net, b),
            None => b.to_vec(),
        };
        if self.factor.is_some() {
            let res = residual(self.net, &start, b, transpose);
            if res <= self.tolerance {
                return Ok((start, 0, res));
            }
        }
        // Iterate from the direct answer when it needs polishing.
        let out = neumann(self.net, b, start, transpose, self.tolerance, self.cap);
        if !out.converged {
            return Err(MeanFieldError::SolverDidNotConverge {
                iterations: out.iterations,
                residual: out.residual,
            });
        }
        Ok((out.x, out.iterations, out.residual))
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, MeanFieldError> {
        self.solve_with_stats(b, false).map(|s| s.0)
    }

    pub fn solve_transpose(&self, c: &[f64]) -> Result<Vec<f64>, MeanFieldError> {
        self.solve_with_stats(c, true).map(|s| s.0)
    }
}

/// `(I - A) r`.
pub fn source_term(net: &ContractorNetwork) -> Vec<f64> {
    net.r().iter().zip(net.alpha()).map(|(r, a)| (1.0 - a) * r).collect()
}

/// `m^t` from `m^0 = r`.
pub fn iterate_mean_field(net: &ContractorNetwork, t: usize) -> Vec<f64> {
    mean_field_path(net, t).pop().expect("path is nonempty")
}

/// `[m^0, m^1, ..., m^t]`.
pub fn mean_field_path(net: &ContractorNetwork, t: usize) -> Vec<Vec<f64>> {
    let b = source_term(net);
    let mut path = Vec::with_capacity(t + 1);
    path.push(net.r().to_vec());
    let mut next = vec![0.0; net.n()];
    for _ in 0..t {
        net.aw_apply(path.last().unwrap(), &mut next);
        let m: Vec<f64> = next.iter().zip(&b).map(|(x, y)| x + y).collect();
        path.push(m);
    }
    path
}

/// `||m - (I - A) r - AW m||_inf`.
pub fn fixed_point_residual(net: &ContractorNetwork, m: &[f64]) -> f64 {
    residual(net, m, &source_term(net), false)
}

pub fn solve_fixed_point(net: &ContractorNetwork, cfg: &SolverConfig) -> Result<MeanFieldSolution, MeanFieldError> {
    let res = Resolvent::new(net, cfg);
    let b = source_term(net);
    let (mut m, iterations, residual) = if res.method() == SolveMethod::NeumannIteration {
        // Start from r so that iterate k is m^k and DAGs stop after `depth` steps.
        let cap = res.cap;
        let out = neumann(net, &b, net.r().to_vec(), false, cfg.tolerance, cap);
        if !out.converged {
            return Err(MeanFieldError::SolverDidNotConverge {
                iterations: out.iterations,
                residual: out.residual,
            });
        }
        (out.x, out.iterations, out.residual)
    } else {
        res.solve_with_stats(&b, false)?
    };
    for v in &mut m {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(MeanFieldSolution {
        m,
        iterations,
        residual,
        method: res.method(),
    })
}

/// Upper bound on `||m^t - m||_inf`. Exactly zero on a DAG once `t` reaches
/// the depth; otherwise [`convergence_bound_general`].
pub fn convergence_bound(net: &ContractorNetwork, t: usize) -> f64 {
    match layer_decomposition(net).depth {
        Some(d) if t >= d => 0.0,
        _ => convergence_bound_general(net, t),
    }
}

/// `(1 + 2 / (1 - nu)) ||r||_inf nu^{floor(t/2)}` with `nu = ||(AW)^2||_inf`,
/// ignoring any DAG structure.
pub fn convergence_bound_general(net: &ContractorNetwork, t: usize) -> f64 {
    let nu = operator_norm_aw_squared(net);
    let r_norm = net.r().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    (1.0 + 2.0 / (1.0 - nu)) * r_norm * nu.powi((t / 2) as i32)
}

pub fn centrality(net: &ContractorNetwork, cfg: &SolverConfig) -> Result<CentralityVector, MeanFieldError> {
    let res = Resolvent::new(net, cfg);
    let n = net.n();
    let uniform = vec![1.0 / n as f64; n];
    let z = res.solve_transpose(&uniform)?;
    let z_tilde = res.solve_transpose(net.beta())?;
    let scale = |z: Vec<f64>| -> Vec<f64> {
        z.into_iter()
            .zip(net.alpha())
            .map(|(z, a)| ((1.0 - a) * z).max(0.0))
            .collect()
    };
    Ok(CentralityVector {
        u: scale(z),
        u_tilde: scale(z_tilde),
    })
}

/// `dm / d alpha_i = (I - AW)^{-1} E_i (W m - r)`.
pub fn alpha_sensitivity(net: &ContractorNetwork, i: usize, cfg: &SolverConfig) -> Result<Vec<f64>, MeanFieldError> {
    if i >= net.n() || net.role(i) != Role::Intermediary {
        return Err(MeanFieldError::NotAnIntermediary(i));
    }
    let m = solve_fixed_point(net, cfg)?.m;
    let wm: f64 = net.in_edges(i).map(|(j, w)| w * m[j]).sum();
    let mut rhs = vec![0.0; net.n()];
    rhs[i] = wm - net.r()[i];
    Resolvent::new(net, cfg).solve(&rhs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapBound {
    pub delta: f64,
    /// `delta (I - AW)^{-1} A r`.
    pub m_minus_r_bound: Vec<f64>,
    /// `delta beta^T (I - AW)^{-1} A r`.
    pub expected_loss_gap_bound: f64,
    /// `min_i (m_i - r_i - bound_i)`; nonnegative when the bound holds.
    pub min_slack: f64,
}

/// Lower bound on `m - r` under strictly positive intermediary margins.
/// With `delta = None` the largest admissible value is taken from
/// [`check_assumption_monotone`]; a user value above it is rejected.
pub fn gap_lower_bound(
    net: &ContractorNetwork,
    delta: Option<f64>,
    cfg: &SolverConfig,
) -> Result<GapBound, MeanFieldError> {
    let report = check_assumption_monotone(net);
    let admissible = match report.delta {
        Some(d) => d,
        None if report.intermediaries.is_empty() => f64::INFINITY,
        None => {
            return Err(MeanFieldError::AssumptionViolated(
                "some intermediary does not have strictly higher-risk principals".into(),
            ))
        }
    };
    let delta = match delta {
        Some(d) if d < 0.0 || d > admissible * (1.0 + 1e-12) => {
            return Err(MeanFieldError::AssumptionViolated(format!(
                "delta {d} outside [0, {admissible}]"
            )))
        }
        Some(d) => d,
        None if admissible.is_finite() => admissible,
        None => 0.0,
    };
    let res = Resolvent::new(net, cfg);
    let ar: Vec<f64> = net.r().iter().zip(net.alpha()).map(|(r, a)| a * r).collect();
    let y = res.solve(&ar)?;
    let bound: Vec<f64> = y.iter().map(|v| delta * v).collect();
    let m = solve_fixed_point(net, cfg)?.m;
    let min_slack = (0..net.n())
        .map(|i| m[i] - net.r()[i] - bound[i])
        .fold(f64::INFINITY, f64::min);
    Ok(GapBound {
        delta,
        expected_loss_gap_bound: dot(net.beta(), &bound),
        m_minus_r_bound: bound,
        min_slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amplification {
    pub m_minus_r: f64,
    pub amplified: bool,
}

/// `m - r = (I - AW)^{-1} A (W - I) r`, flagged positive per node.
pub fn amplification_condition(
    net: &ContractorNetwork,
    cfg: &SolverConfig,
) -> Result<Vec<Amplification>, MeanFieldError> {
    let wr = net.w_apply(net.r());
    let rhs: Vec<f64> = (0..net.n()).map(|i| net.alpha()[i] * (wr[i] - net.r()[i])).collect();
    let d = Resolvent::new(net, cfg).solve(&rhs)?;
    Ok(d
        .into_iter()
        .map(|v| Amplification {
            m_minus_r: v,
            amplified: v > 0.0,
        })
        .collect())
}

/// `beta^T m`.
pub fn expected_loss(net: &ContractorNetwork, m: &[f64]) -> Result<f64, MeanFieldError> {
    if m.len() != net.n() {
        return Err(MeanFieldError::DimensionMismatch {
            expected: net.n(),
            got: m.len(),
        });
    }
    Ok(dot(net.beta(), m))
}

/// Percentage increase of the network-aware expected loss over the
/// independent one. `None` when the independent loss is zero.
pub fn uplift_pct(independent: f64, network: f64) -> Option<f64> {
    (independent > 0.0).then(|| 100.0 * (network - independent) / independent)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
