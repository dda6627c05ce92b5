//! Dummy principals for unobserved contracting shares.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::netgraph::{ContractorNetwork, EdgeRecord, NodeRecord, Role, ValidationOptions};

/// Id prefix of imputed principals; the obligee id follows.
pub const DUMMY_PREFIX: &str = "__dummy_";
const DEFICIT_TOLERANCE: f64 = 1e-9;
const IMPUTED_SEGMENT: &str = "imputed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationEntry {
    pub obligee: String,
    pub dummy_id: String,
    pub dummy_weight: f64,
    pub dummy_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationReport {
    pub dummies_added: usize,
    pub entries: Vec<ImputationEntry>,
    /// Modelling assumption behind the dummy risks. Not checked.
    pub assumption: String,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[k]
    } else {
        0.5 * (xs[k - 1] + xs[k])
    }
}

/// Median `r` per `segment_type` over principals and intermediaries. Pure
/// obligees (r = 0 by construction) and earlier dummies are left out.
pub fn segment_medians(net: &ContractorNetwork) -> BTreeMap<String, f64> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (v, node) in net.nodes().iter().enumerate() {
        if net.role(v) == Role::PureObligee || node.id.starts_with(DUMMY_PREFIX) {
            continue;
        }
        if let Some(seg) = &node.segment_type {
            groups.entry(seg.clone()).or_default().push(node.r);
        }
    }
    groups.into_iter().map(|(k, mut xs)| (k, median(&mut xs))).collect()
}

/// Give every node whose incoming weights fall short of one a dummy pure
/// principal carrying the missing share.
///
/// The dummy's risk is the weight-averaged segment median of the node's
/// observed principals, i.e. unobserved contractors are assumed to follow the
/// same segment mix as observed ones. Principals without a segment label are
/// dropped from the average. Running this twice adds nothing the second time.
pub fn impute_unobserved(net: &ContractorNetwork) -> Result<(ContractorNetwork, ImputationReport), SynthError> {
    let medians = segment_medians(net);
    let (mut nodes, mut edges) = net.to_records();
    let mut entries = Vec::new();
    for i in 0..net.n() {
        if net.in_degree(i) == 0 {
            continue;
        }
        let total = net.in_weight_sum(i);
        if total >= 1.0 - DEFICIT_TOLERANCE {
            continue;
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, w) in net.in_edges(i) {
            let seg = net.node(j).segment_type.as_ref().and_then(|s| medians.get(s));
            if let Some(&m) = seg {
                num += w * m;
                den += w;
            }
        }
        let obligee = net.node(i).id.clone();
        if den == 0.0 {
            return Err(SynthError::NoSegmentInformation { obligee });
        }
        let dummy_weight = 1.0 - total;
        let dummy_risk = num / den;
        let dummy_id = format!("{DUMMY_PREFIX}{obligee}");
        nodes.push(NodeRecord {
            node_id: dummy_id.clone(),
            r: dummy_risk,
            alpha: None,
            beta: 0.0,
            revenue: None,
            segment_type: Some(IMPUTED_SEGMENT.to_string()),
        });
        edges.push(EdgeRecord {
            obligee_id: obligee.clone(),
            principal_id: dummy_id.clone(),
            weight: Some(dummy_weight),
            bond_amount: net.node(i).revenue.map(|rev| rev * dummy_weight),
        });
        entries.push(ImputationEntry {
            obligee,
            dummy_id,
            dummy_weight,
            dummy_risk,
        });
    }
    let opts = ValidationOptions {
        allow_override: true,
        require_stochastic: true,
        ..Default::default()
    };
    let imputed = ContractorNetwork::from_records(nodes, edges, &opts)?;
    let report = ImputationReport {
        dummies_added: entries.len(),
        entries,
        assumption: "each dummy stands for contractors that have no ties to any other node's unobserved \
                     contractors, so dummy failures are independent; its risk follows the segment mix of \
                     the node's observed contractors"
            .to_string(),
    };
    Ok((imputed, report))
}
