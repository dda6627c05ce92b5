//! Linear solves against `I - AW` and its transpose.
//!
//! The direct path condenses the graph into strongly connected components
//! and back-substitutes block by block. On a DAG every block is a singleton
//! and a solve is a single pass over the edges; nontrivial blocks are
//! factored densely.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::netgraph::ContractorNetwork;

enum Block {
    Single { node: usize, diag: f64 },
    Dense {
        nodes: Vec<usize>,
        lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
        lu_t: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    },
}

/// Block-triangular factorization of `I - AW`.
pub struct DirectFactor {
    // Sources first.
    blocks: Vec<Block>,
    block_of: Vec<usize>,
    largest_block: usize,
}

impl DirectFactor {
    pub fn new(net: &ContractorNetwork) -> Self {
        let n = net.n();
        let mut g = DiGraph::<(), ()>::with_capacity(n, net.edge_count());
        let ids: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
        for (i, j, _, _) in net.edges() {
            g.add_edge(ids[j], ids[i], ());
        }
        let mut sccs = tarjan_scc(&g);
        sccs.reverse();

        let alpha = net.alpha();
        let mut block_of = vec![usize::MAX; n];
        let mut blocks = Vec::with_capacity(sccs.len());
        let mut largest_block = 0;
        let mut local = vec![usize::MAX; n];
        for (b, comp) in sccs.into_iter().enumerate() {
            largest_block = largest_block.max(comp.len());
            if comp.len() == 1 {
                let i = comp[0].index();
                block_of[i] = b;
                let self_w: f64 = net.in_edges(i).filter(|&(j, _)| j == i).map(|(_, w)| w).sum();
                blocks.push(Block::Single {
                    node: i,
                    diag: 1.0 - alpha[i] * self_w,
                });
                continue;
            }
            let mut nodes: Vec<usize> = comp.iter().map(|v| v.index()).collect();
            nodes.sort_unstable();
            for (k, &i) in nodes.iter().enumerate() {
                block_of[i] = b;
                local[i] = k;
            }
            let size = nodes.len();
            let mut m = DMatrix::<f64>::identity(size, size);
            for (r, &i) in nodes.iter().enumerate() {
                for (j, w) in net.in_edges(i) {
                    if block_of[j] == b {
                        m[(r, local[j])] -= alpha[i] * w;
                    }
                }
            }
            let lu_t = m.transpose().lu();
            blocks.push(Block::Dense { nodes, lu: m.lu(), lu_t });
        }
        DirectFactor {
            blocks,
            block_of,
            largest_block,
        }
    }

    pub fn largest_block(&self) -> usize {
        self.largest_block
    }

    /// Solve `(I - AW) x = b`.
    pub fn solve(&self, net: &ContractorNetwork, b: &[f64]) -> Vec<f64> {
        let alpha = net.alpha();
        let mut x = vec![0.0; net.n()];
        for (bi, block) in self.blocks.iter().enumerate() {
            match block {
                Block::Single { node, diag } => {
                    let i = *node;
                    let ext: f64 = net.in_edges(i).filter(|&(j, _)| j != i).map(|(j, w)| w * x[j]).sum();
                    x[i] = (b[i] + alpha[i] * ext) / diag;
                }
                Block::Dense { nodes, lu, .. } => {
                    let rhs = DVector::from_iterator(
                        nodes.len(),
                        nodes.iter().map(|&i| {
                            let ext: f64 = net
                                .in_edges(i)
                                .filter(|&(j, _)| self.block_of[j] != bi)
                                .map(|(j, w)| w * x[j])
                                .sum();
                            b[i] + alpha[i] * ext
                        }),
                    );
                    let sol = lu.solve(&rhs).expect("I - AW is nonsingular");
                    for (k, &i) in nodes.iter().enumerate() {
                        x[i] = sol[k];
                    }
                }
            }
        }
        x
    }

    /// Solve `(I - AW)^T z = c`.
    pub fn solve_transpose(&self, net: &ContractorNetwork, c: &[f64]) -> Vec<f64> {
        let alpha = net.alpha();
        let mut z = vec![0.0; net.n()];
        for (bi, block) in self.blocks.iter().enumerate().rev() {
            match block {
                Block::Single { node, diag } => {
                    let j = *node;
                    let ext: f64 = net.out_edges(j).filter(|&(i, _)| i != j).map(|(i, w)| alpha[i] * w * z[i]).sum();
                    z[j] = (c[j] + ext) / diag;
                }
                Block::Dense { nodes, lu_t, .. } => {
                    let rhs = DVector::from_iterator(
                        nodes.len(),
                        nodes.iter().map(|&j| {
                            let ext: f64 = net
                                .out_edges(j)
                                .filter(|&(i, _)| self.block_of[i] != bi)
                                .map(|(i, w)| alpha[i] * w * z[i])
                                .sum();
                            c[j] + ext
                        }),
                    );
                    let sol = lu_t.solve(&rhs).expect("I - AW is nonsingular");
                    for (k, &j) in nodes.iter().enumerate() {
                        z[j] = sol[k];
                    }
                }
            }
        }
        z
    }
}

/// `||x - b - AW x||_inf` (or the transposed operator).
pub fn residual(net: &ContractorNetwork, x: &[f64], b: &[f64], transpose: bool) -> f64 {
    let mut y = vec![0.0; net.n()];
    if transpose {
        net.aw_transpose_apply(x, &mut y);
    } else {
        net.aw_apply(x, &mut y);
    }
    x.iter()
        .zip(b)
        .zip(&y)
        .map(|((xi, bi), yi)| (xi - bi - yi).abs())
        .fold(0.0, f64::max)
}

/// Outcome of a fixed-point iteration `x <- b + AW x`.
pub struct NeumannOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Iterate `x <- b + (AW) x` (or `(AW)^T`) from `x0` until the residual of
/// the current iterate is at most `tol`. The residual of `x^k` is
/// `||x^{k+1} - x^k||`, so the returned iterate is certified.
pub fn neumann(
    net: &ContractorNetwork,
    b: &[f64],
    x0: Vec<f64>,
    transpose: bool,
    tol: f64,
    max_iterations: usize,
) -> NeumannOutcome {
    let n = net.n();
    let mut x = x0;
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    loop {
        if transpose {
            net.aw_transpose_apply(&x, &mut next);
        } else {
            net.aw_apply(&x, &mut next);
        }
        for (v, bi) in next.iter_mut().zip(b) {
            *v += bi;
        }
        let res = x.iter().zip(&next).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        if res <= tol {
            return NeumannOutcome {
                x,
                iterations,
                residual: res,
                converged: true,
            };
        }
        if iterations >= max_iterations {
            return NeumannOutcome {
                x: next,
                iterations,
                residual: res,
                converged: false,
            };
        }
        std::mem::swap(&mut x, &mut next);
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{toy_network, EdgeRecord, NodeRecord, ValidationOptions};

    fn cycle3() -> ContractorNetwork {
        let nodes = vec![
            NodeRecord::new("a", 0.1, Some(0.5), 1.0),
            NodeRecord::new("b", 0.2, Some(0.4), 1.0),
            NodeRecord::new("c", 0.3, Some(0.3), 1.0),
            NodeRecord::new("p", 0.2, None, 1.0),
            NodeRecord::new("o", 0.0, None, 0.0),
        ];
        let edges = vec![
            EdgeRecord::weighted("a", "c", 0.5),
            EdgeRecord::weighted("a", "p", 0.5),
            EdgeRecord::weighted("b", "a", 1.0),
            EdgeRecord::weighted("c", "b", 0.7),
            EdgeRecord::weighted("c", "c", 0.3),
            EdgeRecord::weighted("o", "c", 1.0),
        ];
        ContractorNetwork::from_records(nodes, edges, &ValidationOptions::default()).unwrap()
    }

    #[test]
    fn direct_and_transpose_residuals() {
        for net in [toy_network(), cycle3()] {
            let f = DirectFactor::new(&net);
            let b: Vec<f64> = (0..net.n()).map(|k| 0.1 + 0.05 * k as f64).collect();
            let x = f.solve(&net, &b);
            assert!(residual(&net, &x, &b, false) < 1e-14);
            let z = f.solve_transpose(&net, &b);
            assert!(residual(&net, &z, &b, true) < 1e-14);
        }
        assert_eq!(DirectFactor::new(&cycle3()).largest_block(), 3);
    }

    #[test]
    fn neumann_matches_direct() {
        let net = cycle3();
        let b = vec![0.3; net.n()];
        let x = DirectFactor::new(&net).solve(&net, &b);
        let out = neumann(&net, &b, b.clone(), false, 1e-14, 10_000);
        assert!(out.converged);
        for (p, q) in x.iter().zip(&out.x) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
