//! Structural analysis: operator norms, in-neighbor layers, depths, and the
//! monotonicity assumption check.

use serde::{Deserialize, Serialize};

use super::{ContractorNetwork, Role};

/// `(AW)^t 1`, computed by `t` sparse matvecs. Because `AW` is entrywise
/// nonnegative, the max entry of this vector is exactly `||(AW)^t||_inf`.
pub fn aw_power_row_sums(net: &ContractorNetwork, t: usize) -> Vec<f64> {
    let mut v = vec![1.0; net.n()];
    let mut next = vec![0.0; net.n()];
    for _ in 0..t {
        net.aw_apply(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
    }
    v
}

/// `||(AW)^t||_inf`, exact. Returns 1 for `t = 0` on a nonempty network.
pub fn operator_norm_aw_power(net: &ContractorNetwork, t: usize) -> f64 {
    aw_power_row_sums(net, t).into_iter().fold(0.0, f64::max)
}

/// `||(AW)^2||_inf`, exact, in `O(nnz)`.
pub fn operator_norm_aw_squared(net: &ContractorNetwork) -> f64 {
    operator_norm_aw_power(net, 2)
}

/// The cheap upper bound `max_i sum_k alpha_i w_ik alpha_k` on
/// `||(AW)^2||_inf`: each intermediate row sum is at most `alpha_k`.
pub fn row_sum_bound_aw_squared(net: &ContractorNetwork) -> f64 {
    (0..net.n())
        .map(|i| net.alpha()[i] * net.in_edges(i).map(|(k, w)| w * net.alpha()[k]).sum::<f64>())
        .fold(0.0, f64::max)
}

/// In-neighbor layers `Delta^1 ⊇ Delta^2 ⊇ ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDecomposition {
    /// Node indices of each layer, sorted ascending. On a DAG the list ends at
    /// the last nonempty layer; on a cyclic graph it ends once the layers
    /// stop shrinking.
    pub layers: Vec<Vec<usize>>,
    /// Longest directed path length (edge count). `None` when a cycle exists.
    pub depth: Option<usize>,
    pub is_dag: bool,
}

impl LayerDecomposition {
    /// `depth` for DAGs; panics otherwise.
    pub fn dag_depth(&self) -> usize {
        self.depth.expect("network has a cycle")
    }
}

/// Topological order with principals before their obligees, or `None` if the
/// graph has a cycle (self-loops included).
pub fn topological_order(net: &ContractorNetwork) -> Option<Vec<usize>> {
    let n = net.n();
    let mut indeg: Vec<usize> = (0..n).map(|i| net.in_degree(i)).collect();
    let mut order: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut head = 0;
    while head < order.len() {
        let j = order[head];
        head += 1;
        for &i in net.obligees(j) {
            indeg[i] -= 1;
            if indeg[i] == 0 {
                order.push(i);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Per-node depth: length of the longest directed path ending at the node.
/// Pure principals sit at depth 0. `None` on cyclic graphs.
pub fn node_depths(net: &ContractorNetwork) -> Option<Vec<usize>> {
    let order = topological_order(net)?;
    let mut depth = vec![0usize; net.n()];
    for &i in &order {
        depth[i] = net.principals(i).iter().map(|&j| depth[j] + 1).max().unwrap_or(0);
    }
    Some(depth)
}

pub fn layer_decomposition(net: &ContractorNetwork) -> LayerDecomposition {
    let n = net.n();
    let mut layers: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&j| net.out_degree(j) > 0).collect();
    let mut mark = vec![false; n];
    while !current.is_empty() {
        if layers.last() == Some(&current) {
            break;
        }
        let mut next = Vec::new();
        for &i in &current {
            for &j in net.principals(i) {
                if !mark[j] {
                    mark[j] = true;
                    next.push(j);
                }
            }
        }
        for &j in &next {
            mark[j] = false;
        }
        next.sort_unstable();
        layers.push(std::mem::replace(&mut current, next));
    }
    let is_dag = topological_order(net).is_some();
    LayerDecomposition {
        depth: is_dag.then_some(layers.len()),
        layers,
        is_dag,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermediaryMargin {
    pub node: usize,
    /// `sum_j w_ij r_j - r_i`.
    pub margin: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub intermediaries: Vec<IntermediaryMargin>,
    /// Every margin is nonnegative (vacuously true without intermediaries).
    pub all_satisfied: bool,
    /// Every margin is nonpositive: the reversed regime.
    pub all_reversed: bool,
    /// `min_i margin_i / r_i` when every margin is strictly positive.
    pub delta: Option<f64>,
}

/// Compare each intermediary's own risk with the weighted risk of its
/// principals.
pub fn check_assumption_monotone(net: &ContractorNetwork) -> AssumptionReport {
    let r = net.r();
    let intermediaries: Vec<IntermediaryMargin> = (0..net.n())
        .filter(|&i| net.role(i) == Role::Intermediary)
        .map(|i| {
            let avg: f64 = net.in_edges(i).map(|(j, w)| w * r[j]).sum();
            let margin = avg - r[i];
            IntermediaryMargin {
                node: i,
                margin,
                satisfied: margin >= 0.0,
            }
        })
        .collect();
    let all_satisfied = intermediaries.iter().all(|m| m.satisfied);
    let all_reversed = intermediaries.iter().all(|m| m.margin <= 0.0);
    let positive = !intermediaries.is_empty() && intermediaries.iter().all(|m| m.margin > 0.0 && r[m.node] > 0.0);
    let delta = positive.then(|| {
        intermediaries
            .iter()
            .map(|m| m.margin / r[m.node])
            .fold(f64::INFINITY, f64::min)
    });
    AssumptionReport {
        intermediaries,
        all_satisfied,
        all_reversed,
        delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{toy_network, EdgeRecord, NodeRecord, ValidationOptions};

    fn chain(len: usize) -> ContractorNetwork {
        let nodes = (0..=len)
            .map(|k| match k {
                0 => NodeRecord::new("n0", 0.1, None, 1.0),
                k if k == len => NodeRecord::new(format!("n{k}"), 0.0, None, 0.0),
                k => NodeRecord::new(format!("n{k}"), 0.05, Some(0.5), 1.0),
            })
            .collect();
        let edges = (1..=len)
            .map(|k| EdgeRecord::weighted(format!("n{k}"), format!("n{}", k - 1), 1.0))
            .collect();
        ContractorNetwork::from_records(nodes, edges, &ValidationOptions::default()).unwrap()
    }

    #[test]
    fn toy_norm() {
        let net = toy_network();
        assert!((operator_norm_aw_squared(&net) - 0.25).abs() < 1e-15);
        assert!(row_sum_bound_aw_squared(&net) >= operator_norm_aw_squared(&net));
    }

    #[test]
    fn edgeless_norm_is_zero() {
        let nodes = (0..3).map(|k| NodeRecord::new(format!("n{k}"), 0.1, None, 1.0)).collect();
        let net = ContractorNetwork::from_records(nodes, vec![], &ValidationOptions::default()).unwrap();
        assert_eq!(operator_norm_aw_squared(&net), 0.0);
        assert_eq!(layer_decomposition(&net).depth, Some(0));
    }

    #[test]
    fn toy_layers() {
        let l = layer_decomposition(&toy_network());
        assert_eq!(l.layers, vec![vec![0, 1, 2], vec![0, 1]]);
        assert_eq!(l.depth, Some(2));
        assert!(l.is_dag);
        assert_eq!(node_depths(&toy_network()).unwrap(), vec![0, 0, 1, 2, 2]);
    }

    #[test]
    fn chain_depth() {
        let l = layer_decomposition(&chain(7));
        assert_eq!(l.depth, Some(7));
        assert_eq!(operator_norm_aw_power(&chain(7), 8), 0.0);
    }

    #[test]
    fn self_loop_is_cyclic() {
        let nodes = vec![NodeRecord::new("s", 0.4, Some(0.5), 1.0)];
        let edges = vec![EdgeRecord::weighted("s", "s", 1.0)];
        let net = ContractorNetwork::from_records(nodes, edges, &ValidationOptions::default()).unwrap();
        let l = layer_decomposition(&net);
        assert!(!l.is_dag);
        assert_eq!(l.depth, None);
        assert_eq!(l.layers, vec![vec![0]]);
    }

    #[test]
    fn toy_assumption() {
        let rep = check_assumption_monotone(&toy_network());
        assert_eq!(rep.intermediaries.len(), 1);
        assert!((rep.intermediaries[0].margin - 0.11).abs() < 1e-15);
        assert!(rep.all_satisfied);
        assert!((rep.delta.unwrap() - 2.2).abs() < 1e-12);

        let mut r = toy_network().r().to_vec();
        r[2] = 0.5;
        let rep = check_assumption_monotone(&toy_network().with_r(&r));
        assert!((rep.intermediaries[0].margin + 0.34).abs() < 1e-15);
        assert!(!rep.all_satisfied);
        assert_eq!(rep.delta, None);
    }

    #[test]
    fn no_intermediaries_is_vacuous() {
        let nodes = vec![NodeRecord::new("P", 0.1, None, 1.0), NodeRecord::new("O", 0.0, None, 0.0)];
        let edges = vec![EdgeRecord::weighted("O", "P", 1.0)];
        let net = ContractorNetwork::from_records(nodes, edges, &ValidationOptions::default()).unwrap();
        let rep = check_assumption_monotone(&net);
        assert!(rep.all_satisfied);
        assert_eq!(rep.delta, None);
    }
}
