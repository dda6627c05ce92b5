//! Contractor network data model.
//!
//! A [`ContractorNetwork`] is an immutable directed weighted graph. An edge
//! `j -> i` means principal `j` performs bonded work for obligee `i`, with
//! weight `w_ij` equal to the fraction of `i`'s work subcontracted to `j`.
//! Risk flows along edge direction: a failing principal raises the failure
//! probability of its obligees.
//!
//! Adjacency is stored per obligee ("in-rows"), which is the orientation every
//! solver consumes: row `i` of the weighted adjacency matrix `W` lists the
//! principals of `i`.

mod io;
mod structure;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{
    load_json, load_network, load_path, load_snapshots, read_csv_sources, read_records, snapshot_edge_files, write_csv,
    write_json, NetworkDocument,
};
pub use structure::{
    aw_power_row_sums, check_assumption_monotone, layer_decomposition, node_depths, operator_norm_aw_power,
    operator_norm_aw_squared, row_sum_bound_aw_squared, topological_order, AssumptionReport, IntermediaryMargin,
    LayerDecomposition,
};

/// Default tolerance on per-obligee weight sums.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Structural role of a node, derived purely from its edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    /// No in-edges. Isolated nodes are also classified here.
    PurePrincipal,
    /// Both in- and out-edges (self-loops count as both).
    Intermediary,
    /// In-edges but no out-edges.
    PureObligee,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::PurePrincipal => "PurePrincipal",
            Role::Intermediary => "Intermediary",
            Role::PureObligee => "PureObligee",
        };
        f.write_str(s)
    }
}

/// One row of `nodes.csv` (or an element of the JSON `nodes` array).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub node_id: String,
    pub r: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    pub beta: f64,
    #[serde(default)]
    pub revenue: Option<f64>,
    #[serde(default)]
    pub segment_type: Option<String>,
}

impl NodeRecord {
    pub fn new(id: impl Into<String>, r: f64, alpha: Option<f64>, beta: f64) -> Self {
        NodeRecord {
            node_id: id.into(),
            r,
            alpha,
            beta,
            revenue: None,
            segment_type: None,
        }
    }
}

/// One row of `edges.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub obligee_id: String,
    pub principal_id: String,
    #[serde(default)]
    pub weight: Option<f64>,
    #[serde(default)]
    pub bond_amount: Option<f64>,
}

impl EdgeRecord {
    pub fn weighted(obligee: impl Into<String>, principal: impl Into<String>, weight: f64) -> Self {
        EdgeRecord {
            obligee_id: obligee.into(),
            principal_id: principal.into(),
            weight: Some(weight),
            bond_amount: None,
        }
    }
}

/// How strictly [`ContractorNetwork::from_records`] validates its input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// Keep explicitly supplied `alpha`, `r`, `beta` even when they disagree
    /// with the node's structural role.
    pub allow_override: bool,
    /// Tolerance on `sum_j w_ij <= 1`.
    pub weight_tolerance: f64,
    /// Require every node with in-edges to have weights summing to one.
    pub require_stochastic: bool,
    /// Fallback alpha for intermediaries whose record leaves it blank.
    pub intermediary_alpha: Option<f64>,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            allow_override: false,
            weight_tolerance: WEIGHT_TOLERANCE,
            require_stochastic: false,
            intermediary_alpha: None,
        }
    }
}

/// Machine-readable diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticCode {
    DuplicateNode,
    DuplicateEdge,
    UnknownNodeReference,
    WeightSumExceedsOne,
    WeightSumBelowOne,
    RoleAlphaMismatch,
    RoleAttributeMismatch,
    RiskOutOfRange,
    InvalidValue,
    MissingWeight,
    ParseError,
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// A single validation finding, tied to a node id or an `obligee<-principal`
/// edge label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub severity: Severity,
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    fn error(code: DiagnosticCode, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: Severity::Error,
            subject: subject.into(),
            message: message.into(),
        }
    }

    fn warning(code: DiagnosticCode, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: Severity::Warning,
            subject: subject.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.code, self.subject, self.message)
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("network failed validation with {} error(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Diagnostic>),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl NetworkError {
    /// Error diagnostics, or a single `ParseError` for I/O and syntax failures.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            NetworkError::Invalid(d) => d.clone(),
            other => vec![Diagnostic::error(DiagnosticCode::ParseError, "input", other.to_string())],
        }
    }
}

/// A validated node with its resolved propagation probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub revenue: Option<f64>,
    pub segment_type: Option<String>,
}

/// Immutable contractor network.
#[derive(Debug, Clone)]
pub struct ContractorNetwork {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    roles: Vec<Role>,
    // CSR over obligees: in_idx[in_ptr[i]..in_ptr[i+1]] are principals of i.
    in_ptr: Vec<usize>,
    in_idx: Vec<usize>,
    in_w: Vec<f64>,
    in_bond: Vec<Option<f64>>,
    // CSR over principals: out_idx[out_ptr[j]..out_ptr[j+1]] are obligees of j,
    // with out_pos pointing back into the in-arrays.
    out_ptr: Vec<usize>,
    out_idx: Vec<usize>,
    out_pos: Vec<usize>,
    r: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    warnings: Vec<Diagnostic>,
}

/// Derive roles from degree counts.
pub fn roles_from_degrees(in_deg: &[usize], out_deg: &[usize]) -> Vec<Role> {
    in_deg
        .iter()
        .zip(out_deg)
        .map(|(&i, &o)| match (i > 0, o > 0) {
            (false, _) => Role::PurePrincipal,
            (true, false) => Role::PureObligee,
            (true, true) => Role::Intermediary,
        })
        .collect()
}

fn is_prob(x: f64) -> bool {
    x.is_finite() && (0.0..=1.0).contains(&x)
}

fn is_amount(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

impl ContractorNetwork {
    /// Validate records and build the network. Errors are collected rather
    /// than reported one at a time; warnings are kept on the network.
    pub fn from_records(
        nodes: Vec<NodeRecord>,
        edges: Vec<EdgeRecord>,
        options: &ValidationOptions,
    ) -> Result<Self, NetworkError> {
        let mut diags = Vec::new();
        let mut index = HashMap::with_capacity(nodes.len());
        for (k, rec) in nodes.iter().enumerate() {
            if index.insert(rec.node_id.clone(), k).is_some() {
                diags.push(Diagnostic::error(
                    DiagnosticCode::DuplicateNode,
                    &rec.node_id,
                    "node id appears more than once",
                ));
            }
        }
        let n = nodes.len();

        // Resolve edges to (obligee, principal, weight, bond).
        let mut resolved: Vec<(usize, usize, f64, Option<f64>)> = Vec::with_capacity(edges.len());
        let mut seen = HashMap::with_capacity(edges.len());
        for e in &edges {
            let label = format!("{}<-{}", e.obligee_id, e.principal_id);
            let obligee = index.get(&e.obligee_id).copied();
            let principal = index.get(&e.principal_id).copied();
            let (Some(i), Some(j)) = (obligee, principal) else {
                let missing = if obligee.is_none() { &e.obligee_id } else { &e.principal_id };
                diags.push(Diagnostic::error(
                    DiagnosticCode::UnknownNodeReference,
                    &label,
                    format!("edge references unknown node '{missing}'"),
                ));
                continue;
            };
            if seen.insert((i, j), ()).is_some() {
                diags.push(Diagnostic::error(
                    DiagnosticCode::DuplicateEdge,
                    &label,
                    "parallel edges must be aggregated into one record",
                ));
                continue;
            }
            if let Some(b) = e.bond_amount {
                if !is_amount(b) {
                    diags.push(Diagnostic::error(
                        DiagnosticCode::InvalidValue,
                        &label,
                        format!("bond_amount {b} must be a nonnegative amount"),
                    ));
                    continue;
                }
            }
            let w = match (e.weight, e.bond_amount, nodes[i].revenue) {
                (Some(w), _, _) => w,
                (None, Some(b), Some(rev)) if rev > 0.0 => b / rev,
                (None, Some(_), _) => {
                    diags.push(Diagnostic::error(
                        DiagnosticCode::MissingWeight,
                        &label,
                        "bond_amount given but obligee has no positive revenue to normalize by",
                    ));
                    continue;
                }
                (None, None, _) => {
                    diags.push(Diagnostic::error(
                        DiagnosticCode::MissingWeight,
                        &label,
                        "one of weight or bond_amount is required",
                    ));
                    continue;
                }
            };
            if !(w.is_finite() && w > 0.0 && w <= 1.0) {
                diags.push(Diagnostic::error(
                    DiagnosticCode::InvalidValue,
                    &label,
                    format!("weight {w} must lie in (0, 1]"),
                ));
                continue;
            }
            resolved.push((i, j, w, e.bond_amount));
        }

        let mut in_deg = vec![0usize; n];
        let mut out_deg = vec![0usize; n];
        let mut wsum = vec![0.0f64; n];
        for &(i, j, w, _) in &resolved {
            in_deg[i] += 1;
            out_deg[j] += 1;
            wsum[i] += w;
        }
        let roles = roles_from_degrees(&in_deg, &out_deg);
        let mut warnings = Vec::new();

        for i in 0..n {
            if in_deg[i] == 0 {
                continue;
            }
            let id = &nodes[i].node_id;
            if wsum[i] > 1.0 + options.weight_tolerance {
                diags.push(Diagnostic::error(
                    DiagnosticCode::WeightSumExceedsOne,
                    id,
                    format!("incoming weights sum to {}", wsum[i]),
                ));
            } else if wsum[i] < 1.0 - options.weight_tolerance {
                let msg = format!("incoming weights sum to {} (unobserved contracts?)", wsum[i]);
                if options.require_stochastic {
                    diags.push(Diagnostic::error(DiagnosticCode::WeightSumBelowOne, id, msg));
                } else {
                    warnings.push(Diagnostic::warning(DiagnosticCode::WeightSumBelowOne, id, msg));
                }
            }
        }

        let mut resolved_nodes = Vec::with_capacity(n);
        for (rec, &role) in nodes.iter().zip(&roles) {
            let id = &rec.node_id;
            let mut bad = |code, msg: String| diags.push(Diagnostic::error(code, id, msg));
            if !is_prob(rec.r) || rec.r >= 1.0 {
                bad(DiagnosticCode::RiskOutOfRange, format!("r = {} must lie in [0, 1)", rec.r));
            }
            if !is_amount(rec.beta) {
                bad(DiagnosticCode::InvalidValue, format!("beta = {} must be nonnegative", rec.beta));
            }
            if let Some(rev) = rec.revenue {
                if !is_amount(rev) {
                    bad(DiagnosticCode::InvalidValue, format!("revenue = {rev} must be nonnegative"));
                }
            }
            if let Some(a) = rec.alpha {
                if !is_prob(a) {
                    bad(DiagnosticCode::InvalidValue, format!("alpha = {a} must lie in [0, 1]"));
                }
            }
            let alpha = match role {
                Role::PurePrincipal => match rec.alpha {
                    Some(a) if a != 0.0 && options.allow_override => a,
                    Some(a) if a != 0.0 => {
                        bad(
                            DiagnosticCode::RoleAlphaMismatch,
                            format!("pure principal must have alpha = 0, got {a}"),
                        );
                        0.0
                    }
                    _ => 0.0,
                },
                Role::PureObligee => {
                    if !options.allow_override && (rec.r != 0.0 || rec.beta != 0.0) {
                        bad(
                            DiagnosticCode::RoleAttributeMismatch,
                            format!("pure obligee must have r = 0 and beta = 0, got r = {}, beta = {}", rec.r, rec.beta),
                        );
                    }
                    match rec.alpha {
                        Some(a) if a != 1.0 && options.allow_override => a,
                        Some(a) if a != 1.0 => {
                            bad(
                                DiagnosticCode::RoleAlphaMismatch,
                                format!("pure obligee must have alpha = 1, got {a}"),
                            );
                            1.0
                        }
                        _ => 1.0,
                    }
                }
                Role::Intermediary => {
                    if rec.r == 0.0 && !options.allow_override {
                        bad(DiagnosticCode::RiskOutOfRange, "intermediary requires r in (0, 1)".into());
                    }
                    match rec.alpha.or(options.intermediary_alpha) {
                        Some(a) if (a > 0.0 && a < 1.0) || (options.allow_override && is_prob(a)) => a,
                        Some(a) => {
                            bad(
                                DiagnosticCode::RoleAlphaMismatch,
                                format!("intermediary requires alpha in (0, 1), got {a}"),
                            );
                            0.5
                        }
                        None => {
                            bad(
                                DiagnosticCode::RoleAlphaMismatch,
                                "intermediary has no alpha and no default was configured".into(),
                            );
                            0.5
                        }
                    }
                }
            };
            resolved_nodes.push(Node {
                id: rec.node_id.clone(),
                r: rec.r,
                alpha,
                beta: rec.beta,
                revenue: rec.revenue,
                segment_type: rec.segment_type.clone(),
            });
        }

        if !diags.is_empty() {
            return Err(NetworkError::Invalid(diags));
        }
        for w in &warnings {
            log::debug!("{w}");
        }
        Ok(Self::assemble(resolved_nodes, index, &resolved, roles, warnings))
    }

    fn assemble(
        nodes: Vec<Node>,
        index: HashMap<String, usize>,
        edges: &[(usize, usize, f64, Option<f64>)],
        roles: Vec<Role>,
        warnings: Vec<Diagnostic>,
    ) -> Self {
        let n = nodes.len();
        let mut sorted: Vec<_> = edges.to_vec();
        sorted.sort_by_key(|&(i, j, _, _)| (i, j));

        let mut in_ptr = vec![0usize; n + 1];
        for &(i, ..) in &sorted {
            in_ptr[i + 1] += 1;
        }
        for i in 0..n {
            in_ptr[i + 1] += in_ptr[i];
        }
        let in_idx: Vec<usize> = sorted.iter().map(|e| e.1).collect();
        let in_w: Vec<f64> = sorted.iter().map(|e| e.2).collect();
        let in_bond: Vec<Option<f64>> = sorted.iter().map(|e| e.3).collect();

        let mut out_ptr = vec![0usize; n + 1];
        for &j in &in_idx {
            out_ptr[j + 1] += 1;
        }
        for j in 0..n {
            out_ptr[j + 1] += out_ptr[j];
        }
        let mut fill = out_ptr.clone();
        let mut out_idx = vec![0usize; in_idx.len()];
        let mut out_pos = vec![0usize; in_idx.len()];
        for i in 0..n {
            for p in in_ptr[i]..in_ptr[i + 1] {
                let j = in_idx[p];
                out_idx[fill[j]] = i;
                out_pos[fill[j]] = p;
                fill[j] += 1;
            }
        }

        let r = nodes.iter().map(|v| v.r).collect();
        let alpha = nodes.iter().map(|v| v.alpha).collect();
        let beta = nodes.iter().map(|v| v.beta).collect();
        ContractorNetwork {
            nodes,
            index,
            roles,
            in_ptr,
            in_idx,
            in_w,
            in_bond,
            out_ptr,
            out_idx,
            out_pos,
            r,
            alpha,
            beta,
            warnings,
        }
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.in_idx.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn role(&self, i: usize) -> Role {
        self.roles[i]
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Non-fatal findings from construction (e.g. sub-stochastic in-weights).
    pub fn warnings(&self) -> &[Diagnostic] {
        &self.warnings
    }

    /// Principals of `i` with their weights `w_ij`.
    pub fn in_edges(&self, i: usize) -> impl ExactSizeIterator<Item = (usize, f64)> + '_ {
        let range = self.in_ptr[i]..self.in_ptr[i + 1];
        self.in_idx[range.clone()].iter().copied().zip(self.in_w[range].iter().copied())
    }

    /// Principal indices of `i`, without weights.
    pub fn principals(&self, i: usize) -> &[usize] {
        &self.in_idx[self.in_ptr[i]..self.in_ptr[i + 1]]
    }

    /// Obligees of `j` with the weight `w_ij` of each edge.
    pub fn out_edges(&self, j: usize) -> impl ExactSizeIterator<Item = (usize, f64)> + '_ {
        let range = self.out_ptr[j]..self.out_ptr[j + 1];
        self.out_idx[range.clone()]
            .iter()
            .zip(&self.out_pos[range])
            .map(move |(&i, &p)| (i, self.in_w[p]))
    }

    pub fn obligees(&self, j: usize) -> &[usize] {
        &self.out_idx[self.out_ptr[j]..self.out_ptr[j + 1]]
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_ptr[i + 1] - self.in_ptr[i]
    }

    pub fn out_degree(&self, j: usize) -> usize {
        self.out_ptr[j + 1] - self.out_ptr[j]
    }

    /// `sum_j w_ij`.
    pub fn in_weight_sum(&self, i: usize) -> f64 {
        self.in_w[self.in_ptr[i]..self.in_ptr[i + 1]].iter().sum()
    }

    /// All edges as `(obligee, principal, weight, bond_amount)`, sorted by
    /// obligee then principal.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64, Option<f64>)> + '_ {
        (0..self.n()).flat_map(move |i| {
            (self.in_ptr[i]..self.in_ptr[i + 1]).map(move |p| (i, self.in_idx[p], self.in_w[p], self.in_bond[p]))
        })
    }

    /// `(AW x)_i = alpha_i * sum_j w_ij x_j`.
    pub fn aw_apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n());
        for (i, o) in out.iter_mut().enumerate() {
            let s = self.in_edges(i).fold(0.0, |a, (j, w)| a + w * x[j]);
            *o = self.alpha[i] * s;
        }
    }

    /// `((AW)^T y)_j = sum_i w_ij alpha_i y_i`.
    pub fn aw_transpose_apply(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.n());
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.out_edges(j).fold(0.0, |a, (i, w)| a + w * self.alpha[i] * y[i]);
        }
    }

    /// `((W x) - y)`-style helper: `sum_j w_ij x_j` for every `i`.
    pub fn w_apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|i| self.in_edges(i).fold(0.0, |a, (j, w)| a + w * x[j])).collect()
    }

    /// Failure threshold `(1 - alpha_i) r_i + alpha_i sum_j w_ij x_j` for a
    /// binary state.
    #[inline]
    pub fn threshold(&self, i: usize, state: &[bool]) -> f64 {
        let s: f64 = self.in_edges(i).filter(|&(j, _)| state[j]).map(|(_, w)| w).sum();
        (1.0 - self.alpha[i]) * self.r[i] + self.alpha[i] * s
    }

    /// Copy of the network with every intermediary's alpha replaced.
    /// Pure principals and pure obligees keep their structural values.
    pub fn with_intermediary_alpha(&self, alpha: f64) -> Self {
        let mut net = self.clone();
        for i in 0..net.n() {
            if net.roles[i] == Role::Intermediary {
                net.alpha[i] = alpha;
                net.nodes[i].alpha = alpha;
            }
        }
        net
    }

    /// Copy of the network with one node's alpha replaced (no validation).
    pub fn with_alpha(&self, i: usize, alpha: f64) -> Self {
        let mut net = self.clone();
        net.alpha[i] = alpha;
        net.nodes[i].alpha = alpha;
        net
    }

    /// Copy of the network with a new loss vector.
    pub fn with_beta(&self, beta: &[f64]) -> Self {
        assert_eq!(beta.len(), self.n());
        let mut net = self.clone();
        net.beta = beta.to_vec();
        for (v, &b) in net.nodes.iter_mut().zip(beta) {
            v.beta = b;
        }
        net
    }

    /// Copy of the network with a new idiosyncratic risk vector.
    pub fn with_r(&self, r: &[f64]) -> Self {
        assert_eq!(r.len(), self.n());
        let mut net = self.clone();
        net.r = r.to_vec();
        for (v, &x) in net.nodes.iter_mut().zip(r) {
            v.r = x;
        }
        net
    }

    /// Records that reproduce this network when fed back through
    /// [`ContractorNetwork::from_records`]. Alpha is written explicitly.
    pub fn to_records(&self) -> (Vec<NodeRecord>, Vec<EdgeRecord>) {
        let nodes = self
            .nodes
            .iter()
            .map(|v| NodeRecord {
                node_id: v.id.clone(),
                r: v.r,
                alpha: Some(v.alpha),
                beta: v.beta,
                revenue: v.revenue,
                segment_type: v.segment_type.clone(),
            })
            .collect();
        let edges = self
            .edges()
            .map(|(i, j, w, b)| EdgeRecord {
                obligee_id: self.nodes[i].id.clone(),
                principal_id: self.nodes[j].id.clone(),
                weight: Some(w),
                bond_amount: b,
            })
            .collect();
        (nodes, edges)
    }
}

/// Recompute role labels from the edge structure. Idempotent.
pub fn classify_roles(net: &ContractorNetwork) -> Vec<Role> {
    let in_deg: Vec<usize> = (0..net.n()).map(|i| net.in_degree(i)).collect();
    let out_deg: Vec<usize> = (0..net.n()).map(|i| net.out_degree(i)).collect();
    roles_from_degrees(&in_deg, &out_deg)
}

/// The five-node example network used throughout the docs and tests:
/// principals A and B, intermediary C, obligees D and E.
///
/// Risks are `r = [0.2, 0.1, 0.05, 0, 0]`, the intermediary has
/// `alpha = 0.25`, and losses are `beta = [1, 1, 1, 0, 0]`.
pub fn toy_network() -> ContractorNetwork {
    let nodes = vec![
        NodeRecord::new("A", 0.2, None, 1.0),
        NodeRecord::new("B", 0.1, None, 1.0),
        NodeRecord::new("C", 0.05, Some(0.25), 1.0),
        NodeRecord::new("D", 0.0, None, 0.0),
        NodeRecord::new("E", 0.0, None, 0.0),
    ];
    let edges = vec![
        EdgeRecord::weighted("C", "A", 0.6),
        EdgeRecord::weighted("C", "B", 0.4),
        EdgeRecord::weighted("D", "C", 1.0),
        EdgeRecord::weighted("E", "C", 0.62),
        EdgeRecord::weighted("E", "B", 0.38),
    ];
    ContractorNetwork::from_records(nodes, edges, &ValidationOptions::default()).expect("toy network is valid")
}
