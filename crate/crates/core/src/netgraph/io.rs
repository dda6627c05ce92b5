//! CSV and JSON ingestion and export.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ContractorNetwork, EdgeRecord, NetworkError, NodeRecord, ValidationOptions};

/// Single-file JSON form: `{"nodes": [...], "edges": [...]}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

fn open(path: &Path) -> Result<File, NetworkError> {
    File::open(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parse `nodes.csv` and `edges.csv` streams into records.
pub fn read_csv_sources<N: Read, E: Read>(
    nodes: N,
    edges: E,
) -> Result<(Vec<NodeRecord>, Vec<EdgeRecord>), NetworkError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(nodes);
    let node_recs = rdr.deserialize().collect::<Result<Vec<NodeRecord>, _>>()?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(edges);
    let edge_recs = rdr.deserialize().collect::<Result<Vec<EdgeRecord>, _>>()?;
    Ok((node_recs, edge_recs))
}

/// Build a validated network from `nodes.csv` and `edges.csv` streams.
pub fn load_network<N: Read, E: Read>(
    nodes: N,
    edges: E,
    options: &ValidationOptions,
) -> Result<ContractorNetwork, NetworkError> {
    let (n, e) = read_csv_sources(nodes, edges)?;
    ContractorNetwork::from_records(n, e, options)
}

/// Load a JSON document from a reader.
pub fn load_json<R: Read>(src: R, options: &ValidationOptions) -> Result<ContractorNetwork, NetworkError> {
    let doc: NetworkDocument = serde_json::from_reader(src)?;
    ContractorNetwork::from_records(doc.nodes, doc.edges, options)
}

/// Read raw records from either a `.json` file or a directory holding
/// `nodes.csv` and `edges.csv`.
pub fn read_records(path: &Path) -> Result<NetworkDocument, NetworkError> {
    if path.is_dir() {
        let (nodes, edges) = read_csv_sources(open(&path.join("nodes.csv"))?, open(&path.join("edges.csv"))?)?;
        Ok(NetworkDocument { nodes, edges })
    } else {
        Ok(serde_json::from_reader(std::io::BufReader::new(open(path)?))?)
    }
}

/// Load a network from a `.json` file or a CSV directory.
pub fn load_path(path: &Path, options: &ValidationOptions) -> Result<ContractorNetwork, NetworkError> {
    let doc = read_records(path)?;
    ContractorNetwork::from_records(doc.nodes, doc.edges, options)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> NetworkError + '_ {
    move |source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Paths of `edges_t0.csv`, `edges_t1.csv`, ... in `dir`, stopping at the
/// first missing index.
pub fn snapshot_edge_files(dir: &Path) -> Vec<std::path::PathBuf> {
    (0..)
        .map(|k| dir.join(format!("edges_t{k}.csv")))
        .take_while(|p| p.is_file())
        .collect()
}

/// Load a snapshot sequence: a shared `nodes.csv` plus one `edges_t<k>.csv`
/// per snapshot. Alpha is read from `nodes.csv` for nodes that are
/// intermediaries in a snapshot and derived from the role otherwise.
pub fn load_snapshots(dir: &Path, options: &ValidationOptions) -> Result<Vec<ContractorNetwork>, NetworkError> {
    let files = snapshot_edge_files(dir);
    if files.is_empty() {
        return Err(NetworkError::Io {
            path: dir.join("edges_t0.csv").display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no snapshot edge files"),
        });
    }
    let node_bytes = std::fs::read(dir.join("nodes.csv")).map_err(io_err(dir))?;
    files
        .iter()
        .map(|f| {
            let (mut nodes, edges) = read_csv_sources(&node_bytes[..], open(f)?)?;
            let mut has_in = std::collections::HashSet::new();
            let mut has_out = std::collections::HashSet::new();
            for e in &edges {
                has_in.insert(e.obligee_id.clone());
                has_out.insert(e.principal_id.clone());
            }
            for v in &mut nodes {
                if !(has_in.contains(&v.node_id) && has_out.contains(&v.node_id)) {
                    v.alpha = None;
                }
            }
            ContractorNetwork::from_records(nodes, edges, options)
        })
        .collect()
}

/// Write `nodes.csv` and `edges.csv` into `dir`.
pub fn write_csv(net: &ContractorNetwork, dir: &Path) -> Result<(), NetworkError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let (nodes, edges) = net.to_records();
    let mut w = csv::Writer::from_path(dir.join("nodes.csv"))?;
    for rec in nodes {
        w.serialize(rec)?;
    }
    w.flush().map_err(io_err(dir))?;
    let mut w = csv::Writer::from_path(dir.join("edges.csv"))?;
    for rec in edges {
        w.serialize(rec)?;
    }
    w.flush().map_err(io_err(dir))?;
    Ok(())
}

/// Serialize the network as a single JSON document.
pub fn write_json<W: Write>(net: &ContractorNetwork, out: W) -> Result<(), NetworkError> {
    let (nodes, edges) = net.to_records();
    serde_json::to_writer_pretty(out, &NetworkDocument { nodes, edges })?;
    Ok(())
}
