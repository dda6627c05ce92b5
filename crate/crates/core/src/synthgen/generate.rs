//! Random network generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::netgraph::{roles_from_degrees, ContractorNetwork, EdgeRecord, NodeRecord, Role, ValidationOptions};

/// A one-dimensional sampling law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    Constant { value: f64 },
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
}

impl Law {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Law::Constant { value } => value,
            Law::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Law::LogUniform { lo, hi } => (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp(),
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            Law::Constant { value } => (value, value),
            Law::Uniform { lo, hi } | Law::LogUniform { lo, hi } => (lo, hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoleFractions {
    pub principal: f64,
    pub intermediary: f64,
    pub obligee: f64,
}

impl Default for RoleFractions {
    fn default() -> Self {
        RoleFractions {
            principal: 0.25,
            intermediary: 0.01,
            obligee: 0.74,
        }
    }
}

/// How intermediary risks relate to their principals' weighted risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssumptionMode {
    /// Every intermediary is safer than its principals on average.
    Satisfy,
    /// Every intermediary is riskier than its principals on average.
    Violate,
    /// A random mix of the two.
    Mixed,
    /// Intermediary risks drawn from `r_law` like everyone else.
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub n: usize,
    pub role_fractions: RoleFractions,
    /// Longest path length of the generated DAG.
    pub depth: usize,
    /// Largest number of principals per node (each node draws uniformly
    /// from `1..=max_in_degree`).
    pub max_in_degree: usize,
    /// Raw edge weights before per-obligee normalization.
    pub weight_law: Law,
    pub r_law: Law,
    pub beta_law: Law,
    pub revenue_law: Law,
    pub assumption_mode: AssumptionMode,
    pub intermediary_alpha: f64,
    /// Fraction of nodes that keep a weight deficit (unobserved contracts).
    pub unobserved_share: f64,
    pub segments: usize,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            n: 1000,
            role_fractions: RoleFractions::default(),
            depth: 7,
            max_in_degree: 3,
            weight_law: Law::Uniform { lo: 0.1, hi: 1.0 },
            r_law: Law::LogUniform { lo: 0.002, hi: 0.05 },
            beta_law: Law::LogUniform { lo: 1e4, hi: 1e6 },
            revenue_law: Law::LogUniform { lo: 1e5, hi: 1e8 },
            assumption_mode: AssumptionMode::Satisfy,
            intermediary_alpha: 0.25,
            unobserved_share: 0.0,
            segments: 4,
        }
    }
}

impl GeneratorSpec {
    /// `(principals, intermediaries, obligees)`.
    pub fn role_counts(&self) -> Result<(usize, usize, usize), SynthError> {
        let f = self.role_fractions;
        let bad = |m: String| Err(SynthError::InfeasibleSpec(m));
        if [f.principal, f.intermediary, f.obligee].iter().any(|x| !(0.0..=1.0).contains(x)) {
            return bad("role fractions must lie in [0, 1]".into());
        }
        if (f.principal + f.intermediary + f.obligee - 1.0).abs() > 1e-9 {
            return bad("role fractions must sum to 1".into());
        }
        if self.depth == 0 {
            return bad("depth must be at least 1".into());
        }
        let ni = (self.n as f64 * f.intermediary).round() as usize;
        let no = (self.n as f64 * f.obligee).round() as usize;
        if ni + no >= self.n {
            return bad(format!("{} nodes leave no room for principals", self.n));
        }
        let np = self.n - ni - no;
        if no == 0 {
            return bad("at least one pure obligee is required".into());
        }
        if self.depth == 1 && ni > 0 {
            return bad("depth 1 admits no intermediaries".into());
        }
        if ni < self.depth - 1 {
            return bad(format!(
                "depth {} needs at least {} intermediaries, composition gives {ni}",
                self.depth,
                self.depth - 1
            ));
        }
        Ok((np, ni, no))
    }

    fn check_laws(&self) -> Result<(), SynthError> {
        let (lo, hi) = self.r_law.bounds();
        if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
            return Err(SynthError::InfeasibleSpec("r_law must lie inside (0, 1)".into()));
        }
        let (lo, _) = self.weight_law.bounds();
        if lo <= 0.0 {
            return Err(SynthError::InfeasibleSpec("weight_law must be positive".into()));
        }
        if self.beta_law.bounds().0 < 0.0 || self.revenue_law.bounds().0 <= 0.0 {
            return Err(SynthError::InfeasibleSpec("beta_law must be >= 0 and revenue_law > 0".into()));
        }
        if !(self.intermediary_alpha > 0.0 && self.intermediary_alpha < 1.0) {
            return Err(SynthError::InfeasibleSpec("intermediary_alpha must lie in (0, 1)".into()));
        }
        if self.max_in_degree == 0 {
            return Err(SynthError::InfeasibleSpec("max_in_degree must be at least 1".into()));
        }
        Ok(())
    }
}

/// Normalize raw positive weights to sum to `total`.
fn normalized<R: Rng>(k: usize, law: &Law, total: f64, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| law.sample(rng)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / s * total).collect()
}

/// Layered random DAG with the requested role composition.
///
/// Principals sit at level 0, intermediaries on levels `1..depth`, and pure
/// obligees on levels `1..=depth` with at least one at `depth`. Every
/// non-principal takes one principal from the level directly above and the
/// rest from any shallower level, so a node's level is exactly its longest
/// incoming path.
pub fn generate_random_network(spec: &GeneratorSpec, seed: u64) -> Result<ContractorNetwork, SynthError> {
    let (np, ni, no) = spec.role_counts()?;
    spec.check_laws()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.depth;
    let n = spec.n;

    // Node order: principals, intermediaries by level, obligees by level.
    let mut level = vec![0usize; n];
    let mut int_levels: Vec<usize> = (1..d).collect();
    int_levels.extend((int_levels.len()..ni).map(|_| rng.random_range(1..d.max(2))));
    int_levels.sort_unstable();
    let mut obl_levels: Vec<usize> = vec![d];
    obl_levels.extend((1..no).map(|_| rng.random_range(1..=d)));
    obl_levels.sort_unstable();
    for (k, &l) in int_levels.iter().enumerate() {
        level[np + k] = l;
    }
    for (k, &l) in obl_levels.iter().enumerate() {
        level[np + ni + k] = l;
    }
    let sources = np + ni;
    // Sources are sorted by level: those below level l are 0..below[l].
    let mut below = vec![0usize; d + 2];
    for l in 0..=d + 1 {
        below[l] = (0..sources).filter(|&v| level[v] < l).count();
    }

    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut out_deg = vec![0usize; n];
    for v in np..n {
        let l = level[v];
        let k = rng.random_range(1..=spec.max_in_degree).min(below[l]);
        let first = rng.random_range(below[l - 1]..below[l]);
        let mut chosen = vec![first];
        let mut tries = 0;
        while chosen.len() < k && tries < 20 * k {
            tries += 1;
            let c = rng.random_range(0..below[l]);
            if !chosen.contains(&c) {
                chosen.push(c);
            }
        }
        for &c in &chosen {
            out_deg[c] += 1;
        }
        preds[v] = chosen;
    }
    // Targets sorted by level: non-principals at level > l are above[l]..
    let mut targets: Vec<usize> = (np..n).collect();
    targets.sort_by_key(|&v| level[v]);
    for s in 0..sources {
        if out_deg[s] > 0 {
            continue;
        }
        let start = targets.partition_point(|&v| level[v] <= level[s]);
        loop {
            let t = targets[rng.random_range(start..targets.len())];
            if !preds[t].contains(&s) {
                preds[t].push(s);
                out_deg[s] += 1;
                break;
            }
        }
    }

    let revenue: Vec<f64> = (0..n).map(|_| spec.revenue_law.sample(&mut rng)).collect();
    let mut weights: Vec<Vec<f64>> = vec![Vec::new(); n];
    for v in np..n {
        let total = if rng.random::<f64>() < spec.unobserved_share {
            rng.random_range(0.5..0.95)
        } else {
            1.0
        };
        weights[v] = normalized(preds[v].len(), &spec.weight_law, total, &mut rng);
    }

    let mut r = vec![0.0; n];
    for v in 0..np {
        r[v] = spec.r_law.sample(&mut rng);
    }
    let mut mixed_flags: Vec<bool> = (0..ni).map(|k| k % 2 == 0).collect();
    mixed_flags.shuffle(&mut rng);
    for (k, v) in (np..np + ni).enumerate() {
        let avg: f64 = preds[v].iter().zip(&weights[v]).map(|(&j, &w)| w * r[j]).sum();
        let satisfy = match spec.assumption_mode {
            AssumptionMode::Satisfy => Some(true),
            AssumptionMode::Violate => Some(false),
            AssumptionMode::Mixed => Some(mixed_flags[k]),
            AssumptionMode::Free => None,
        };
        r[v] = match satisfy {
            Some(true) => avg * rng.random_range(0.2..0.8),
            Some(false) => (avg * rng.random_range(1.25..3.0)).min(avg + 0.5 * (1.0 - avg)),
            None => spec.r_law.sample(&mut rng),
        };
    }

    let segments = spec.segments.max(1);
    let nodes: Vec<NodeRecord> = (0..n)
        .map(|v| {
            let is_obligee = v >= sources;
            NodeRecord {
                node_id: format!("n{v}"),
                r: r[v],
                alpha: (v >= np && !is_obligee).then_some(spec.intermediary_alpha),
                beta: if is_obligee { 0.0 } else { spec.beta_law.sample(&mut rng) },
                revenue: Some(revenue[v]),
                segment_type: Some(format!("seg{}", rng.random_range(0..segments))),
            }
        })
        .collect();
    let mut edges = Vec::new();
    for v in np..n {
        for (&j, &w) in preds[v].iter().zip(&weights[v]) {
            edges.push(EdgeRecord {
                obligee_id: format!("n{v}"),
                principal_id: format!("n{j}"),
                weight: Some(w),
                bond_amount: Some(w * revenue[v]),
            });
        }
    }
    Ok(ContractorNetwork::from_records(nodes, edges, &ValidationOptions::default())?)
}

/// Spec for small general graphs (cycles and self-loops allowed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralGraphSpec {
    pub n: usize,
    pub edge_probability: f64,
    pub self_loop_probability: f64,
    /// Probability that a node's incoming weights sum to less than one.
    pub substochastic_probability: f64,
    pub alpha_law: Law,
    pub r_law: Law,
    pub beta_law: Law,
}

impl Default for GeneralGraphSpec {
    fn default() -> Self {
        GeneralGraphSpec {
            n: 8,
            edge_probability: 0.25,
            self_loop_probability: 0.1,
            substochastic_probability: 0.2,
            alpha_law: Law::Uniform { lo: 0.05, hi: 0.95 },
            r_law: Law::Uniform { lo: 0.01, hi: 0.5 },
            beta_law: Law::Uniform { lo: 0.5, hi: 2.0 },
        }
    }
}

/// Erdos-Renyi style directed graph with attributes consistent with the
/// structural roles.
pub fn random_general_network(spec: &GeneralGraphSpec, seed: u64) -> Result<ContractorNetwork, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, p) in preds.iter_mut().enumerate() {
        for j in 0..n {
            let prob = if i == j { spec.self_loop_probability } else { spec.edge_probability };
            if rng.random::<f64>() < prob {
                p.push(j);
            }
        }
    }
    let in_deg: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut out_deg = vec![0usize; n];
    for p in &preds {
        for &j in p {
            out_deg[j] += 1;
        }
    }
    let roles = roles_from_degrees(&in_deg, &out_deg);
    let unit = Law::Uniform { lo: 0.1, hi: 1.0 };
    let mut edges = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        let total = if rng.random::<f64>() < spec.substochastic_probability {
            rng.random_range(0.5..1.0)
        } else {
            1.0
        };
        for (&j, w) in p.iter().zip(normalized(p.len(), &unit, total, &mut rng)) {
            edges.push(EdgeRecord::weighted(format!("g{i}"), format!("g{j}"), w));
        }
    }
    let nodes = (0..n)
        .map(|i| match roles[i] {
            Role::PureObligee => NodeRecord::new(format!("g{i}"), 0.0, None, 0.0),
            Role::PurePrincipal => NodeRecord::new(format!("g{i}"), spec.r_law.sample(&mut rng), None, spec.beta_law.sample(&mut rng)),
            Role::Intermediary => NodeRecord::new(
                format!("g{i}"),
                spec.r_law.sample(&mut rng),
                Some(spec.alpha_law.sample(&mut rng)),
                spec.beta_law.sample(&mut rng),
            ),
        })
        .collect();
    Ok(ContractorNetwork::from_records(nodes, edges, &ValidationOptions::default())?)
}

/// Spec for role-persistent snapshot sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSpec {
    pub n: usize,
    pub snapshots: usize,
    pub alpha_bar: f64,
    pub obligee_fraction: f64,
    pub max_in_degree: usize,
}

impl Default for SnapshotSpec {
    fn default() -> Self {
        SnapshotSpec {
            n: 20,
            snapshots: 5,
            alpha_bar: 0.5,
            obligee_fraction: 0.5,
            max_in_degree: 3,
        }
    }
}

/// Snapshots over a fixed node set where the pure obligees are the same in
/// every snapshot and every other node keeps at least one obligee. Ties among
/// the other nodes are redrawn per snapshot and may form cycles.
pub fn random_snapshot_sequence(spec: &SnapshotSpec, seed: u64) -> Result<Vec<ContractorNetwork>, SynthError> {
    let n = spec.n;
    let no = ((n as f64 * spec.obligee_fraction).round() as usize).clamp(1, n.saturating_sub(1));
    let ns = n - no;
    if ns == 0 {
        return Err(SynthError::InfeasibleSpec("need at least one non-obligee".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: Vec<f64> = (0..ns).map(|_| rng.random_range(0.01..0.3)).collect();
    let beta: Vec<f64> = (0..ns).map(|_| rng.random_range(0.5..2.0)).collect();
    let unit = Law::Uniform { lo: 0.1, hi: 1.0 };
    let mut out = Vec::with_capacity(spec.snapshots);
    for _ in 0..spec.snapshots {
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut out_deg = vec![0usize; ns];
        let pick = |rng: &mut ChaCha8Rng, preds: &mut Vec<usize>, k: usize, out_deg: &mut [usize]| {
            for _ in 0..k {
                let j = rng.random_range(0..ns);
                if !preds.contains(&j) {
                    preds.push(j);
                    out_deg[j] += 1;
                }
            }
        };
        for p in preds.iter_mut().skip(ns) {
            let k = rng.random_range(1..=spec.max_in_degree);
            pick(&mut rng, p, k, &mut out_deg);
        }
        for p in preds.iter_mut().take(ns) {
            if rng.random::<f64>() < 0.6 {
                let k = rng.random_range(1..=spec.max_in_degree.min(2));
                pick(&mut rng, p, k, &mut out_deg);
            }
        }
        for j in 0..ns {
            if out_deg[j] == 0 {
                let t = rng.random_range(ns..n);
                preds[t].push(j);
                out_deg[j] += 1;
            }
        }
        let mut edges = Vec::new();
        for (i, p) in preds.iter().enumerate() {
            for (&j, w) in p.iter().zip(normalized(p.len(), &unit, 1.0, &mut rng)) {
                edges.push(EdgeRecord::weighted(format!("s{i}"), format!("s{j}"), w));
            }
        }
        let nodes = (0..n)
            .map(|i| {
                if i >= ns {
                    NodeRecord::new(format!("s{i}"), 0.0, None, 0.0)
                } else if preds[i].is_empty() {
                    NodeRecord::new(format!("s{i}"), r[i], None, beta[i])
                } else {
                    let a = rng.random_range(0.05..spec.alpha_bar);
                    NodeRecord::new(format!("s{i}"), r[i], Some(a), beta[i])
                }
            })
            .collect();
        out.push(ContractorNetwork::from_records(nodes, edges, &ValidationOptions::default())?);
    }
    Ok(out)
}
