//! Degree-, depth- and role-preserving replicas with perturbed attributes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{laplace, SynthError};
use crate::netgraph::{node_depths, ContractorNetwork, EdgeRecord, NodeRecord, Role, ValidationOptions};

const MAX_ATTEMPTS: usize = 100;
const R_FLOOR: f64 = 1e-6;
const BOND_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnonymizationConfig {
    pub seed: u64,
    pub laplace_scale_r: f64,
    pub laplace_scale_beta: f64,
    pub laplace_scale_bond: f64,
    pub rescale_r: f64,
    pub rescale_beta: f64,
    pub rescale_bond: f64,
}

impl Default for AnonymizationConfig {
    fn default() -> Self {
        AnonymizationConfig {
            seed: 0,
            laplace_scale_r: 0.0,
            laplace_scale_beta: 0.0,
            laplace_scale_bond: 0.0,
            rescale_r: 1.0,
            rescale_beta: 1.0,
            rescale_bond: 1.0,
        }
    }
}

impl AnonymizationConfig {
    /// Pure rewiring: unit rescaling and no noise.
    pub fn rewire_only(seed: u64) -> Self {
        AnonymizationConfig { seed, ..Default::default() }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let scales = [self.laplace_scale_r, self.laplace_scale_beta, self.laplace_scale_bond];
        let factors = [self.rescale_r, self.rescale_beta, self.rescale_bond];
        if scales.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(SynthError::InfeasibleSpec("Laplace scales must be finite and >= 0".into()));
        }
        if factors.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(SynthError::InfeasibleSpec("rescale factors must be positive".into()));
        }
        Ok(())
    }
}

/// Stub bookkeeping for the depth-by-depth matching.
struct Stubs {
    /// Unmatched out-stubs per source depth, one entry per stub.
    pools: Vec<Vec<usize>>,
    /// Unmatched in-stubs per target depth.
    in_rem: Vec<usize>,
}

impl Stubs {
    /// `slack[s] = (in-stubs at depths > s) - (out-stubs at depths >= s)`.
    fn slack(&self) -> Vec<i64> {
        let d = self.pools.len();
        let mut slack = vec![0i64; d];
        let mut ins: i64 = 0;
        let mut outs: i64 = 0;
        for s in (0..d).rev() {
            if s + 1 < self.in_rem.len() {
                ins += self.in_rem[s + 1] as i64;
            }
            outs += self.pools[s].len() as i64;
            slack[s] = ins - outs;
        }
        slack
    }
}

/// One attempt at the matching. Returns the principal list of every node.
fn match_stubs(
    depth: &[usize],
    in_deg: &[usize],
    out_deg: &[usize],
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Vec<usize>>> {
    let n = depth.len();
    let dmax = depth.iter().copied().max().unwrap_or(0);
    let mut stubs = Stubs {
        pools: vec![Vec::new(); dmax + 1],
        in_rem: vec![0; dmax + 1],
    };
    for v in 0..n {
        stubs.pools[depth[v]].extend(std::iter::repeat_n(v, out_deg[v]));
        stubs.in_rem[depth[v]] += in_deg[v];
    }
    let mut by_depth: Vec<Vec<usize>> = vec![Vec::new(); dmax + 1];
    for v in 0..n {
        if in_deg[v] > 0 {
            by_depth[depth[v]].push(v);
        }
    }
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for tau in 1..=dmax {
        let mut targets = std::mem::take(&mut by_depth[tau]);
        targets.shuffle(rng);
        let mut mandatory_left = targets.len();
        for &v in &targets {
            // One principal from the depth directly above fixes v's depth.
            mandatory_left -= 1;
            let j = take_stub(&mut stubs.pools[tau - 1], &preds[v], rng)?;
            preds[v].push(j);
            stubs.in_rem[tau] -= 1;
            for _ in 1..in_deg[v] {
                let slack = stubs.slack();
                let feasible: Vec<usize> = (0..tau)
                    .filter(|&s| {
                        let reserve = if s == tau - 1 { mandatory_left } else { 0 };
                        stubs.pools[s].len() > reserve && (s + 1..tau).all(|k| slack[k] >= 1)
                    })
                    .collect();
                let total: usize = feasible.iter().map(|&s| stubs.pools[s].len()).sum();
                if total == 0 {
                    return None;
                }
                let mut pick = rng.random_range(0..total);
                let mut chosen = feasible[0];
                for &s in &feasible {
                    if pick < stubs.pools[s].len() {
                        chosen = s;
                        break;
                    }
                    pick -= stubs.pools[s].len();
                }
                let j = take_stub(&mut stubs.pools[chosen], &preds[v], rng)
                    .or_else(|| {
                        feasible
                            .iter()
                            .filter(|&&s| s != chosen)
                            .find_map(|&s| take_stub(&mut stubs.pools[s], &preds[v], rng))
                    })?;
                preds[v].push(j);
                stubs.in_rem[tau] -= 1;
            }
        }
    }
    stubs.pools.iter().all(Vec::is_empty).then_some(preds)
}

/// Remove and return a uniformly chosen stub whose node is not in `taken`.
fn take_stub(pool: &mut Vec<usize>, taken: &[usize], rng: &mut ChaCha8Rng) -> Option<usize> {
    if pool.is_empty() {
        return None;
    }
    for _ in 0..8 {
        let k = rng.random_range(0..pool.len());
        if !taken.contains(&pool[k]) {
            return Some(pool.swap_remove(k));
        }
    }
    let k = pool.iter().position(|j| !taken.contains(j))?;
    Some(pool.swap_remove(k))
}

fn perturb(x: f64, factor: f64, scale: f64, rng: &mut ChaCha8Rng) -> f64 {
    factor * x + laplace(rng, scale)
}

/// Build a privacy-preserving replica of a DAG.
///
/// Edges are rewired target by target in order of depth (longest incoming
/// path). Each node takes one principal from the depth directly above and its
/// remaining principals uniformly from the unmatched out-stubs at shallower
/// depths, subject to a look-ahead that keeps the rest of the matching
/// feasible. In- and out-degrees, depths and roles are preserved exactly.
///
/// `r`, `beta` and bond amounts are rescaled and perturbed with Laplace noise;
/// each obligee's bonds are shuffled onto its new in-edges and normalized into
/// weights. Node ids become indices, revenue is dropped, alpha and
/// segment labels are kept.
pub fn anonymize_rewire(net: &ContractorNetwork, cfg: &AnonymizationConfig) -> Result<ContractorNetwork, SynthError> {
    cfg.validate()?;
    let depth = node_depths(net).ok_or(SynthError::NotADag)?;
    let n = net.n();
    let in_deg: Vec<usize> = (0..n).map(|i| net.in_degree(i)).collect();
    let out_deg: Vec<usize> = (0..n).map(|i| net.out_degree(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut preds = None;
    for _ in 0..MAX_ATTEMPTS {
        preds = match_stubs(&depth, &in_deg, &out_deg, &mut rng);
        if preds.is_some() {
            break;
        }
    }
    let preds = preds.ok_or(SynthError::StubMatchingFailed { attempts: MAX_ATTEMPTS })?;

    let mut bonds: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (i, _, w, bond) in net.edges() {
        let raw = bond.unwrap_or_else(|| w * net.node(i).revenue.unwrap_or(1.0));
        let b = perturb(raw, cfg.rescale_bond, cfg.laplace_scale_bond, &mut rng);
        bonds[i].push(b.max(BOND_FLOOR));
    }

    let id = |v: usize| v.to_string();
    let nodes: Vec<NodeRecord> = (0..n)
        .map(|v| {
            let node = net.node(v);
            let role = net.role(v);
            let (r, beta) = if role == Role::PureObligee {
                (node.r, node.beta)
            } else {
                let mut r = perturb(node.r, cfg.rescale_r, cfg.laplace_scale_r, &mut rng);
                if r < 0.0 || (r == 0.0 && role == Role::Intermediary) {
                    r = R_FLOOR;
                } else if r >= 1.0 {
                    r = 1.0 - R_FLOOR;
                }
                let beta = perturb(node.beta, cfg.rescale_beta, cfg.laplace_scale_beta, &mut rng).max(0.0);
                (r, beta)
            };
            NodeRecord {
                node_id: id(v),
                r,
                alpha: Some(node.alpha),
                beta,
                revenue: None,
                segment_type: node.segment_type.clone(),
            }
        })
        .collect();

    let mut edges = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        let mut b = std::mem::take(&mut bonds[i]);
        b.shuffle(&mut rng);
        let total: f64 = b.iter().sum();
        for (&j, &bond) in p.iter().zip(&b) {
            edges.push(EdgeRecord {
                obligee_id: id(i),
                principal_id: id(j),
                weight: Some(bond / total),
                bond_amount: Some(bond),
            });
        }
    }
    let opts = ValidationOptions {
        allow_override: true,
        ..Default::default()
    };
    Ok(ContractorNetwork::from_records(nodes, edges, &opts)?)
}
