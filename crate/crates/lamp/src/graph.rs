//! Graph data model, TU-format ingestion, degree featurization, and disjoint-union batching.
//!
//! The TU text layout: a directory `NAME/` holding `NAME_A.txt` (comma-separated
//! 1-based edge pairs), `NAME_graph_indicator.txt` (1-based graph id per node),
//! `NAME_graph_labels.txt` (one label per graph), and optionally
//! `NAME_node_labels.txt` (one integer label per node, one-hot encoded as features).

use crate::tensor::Tensor;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing dataset file: {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: {message}")]
    Format {
        file: String,
        line: usize,
        message: String,
    },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("cannot batch an empty graph list")]
    EmptyBatch,
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    FeatureDimMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable undirected simple graph with per-node features and an optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    features: Vec<f64>,
    feature_dim: usize,
    label: Option<usize>,
}

impl Graph {
    /// Builds a graph, normalizing each edge to `(min, max)` and sorting the list.
    /// Rejects self-loops, duplicate pairs, out-of-range endpoints, and feature
    /// buffers that do not hold exactly `node_count × feature_dim` values.
    pub fn new(
        node_count: usize,
        edges: Vec<(usize, usize)>,
        features: Vec<f64>,
        feature_dim: usize,
        label: Option<usize>,
    ) -> Result<Graph, DataError> {
        if node_count == 0 {
            return Err(DataError::InvalidGraph("graph must have at least one node".into()));
        }
        if features.len() != node_count * feature_dim {
            return Err(DataError::InvalidGraph(format!(
                "feature buffer holds {} values, expected {} ({} nodes x {} dims)",
                features.len(),
                node_count * feature_dim,
                node_count,
                feature_dim
            )));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u == v {
                return Err(DataError::InvalidGraph(format!("self-loop at node {u}")));
            }
            if u >= node_count || v >= node_count {
                return Err(DataError::InvalidGraph(format!(
                    "edge ({u}, {v}) references a node outside [0, {node_count})"
                )));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if normalized.windows(2).any(|w| w[0] == w[1]) {
            return Err(DataError::InvalidGraph("duplicate edge".into()));
        }
        Ok(Graph {
            node_count,
            edges: normalized,
            features,
            feature_dim,
            label,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn feature_row(&self, node: usize) -> &[f64] {
        &self.features[node * self.feature_dim..(node + 1) * self.feature_dim]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.node_count];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Sorted degree multiset; handy for isomorphism-insensitive comparisons.
    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut deg = self.degrees();
        deg.sort_unstable();
        deg
    }
}

/// Sum of all node degrees, `2·|edges|`.
pub fn volume(graph: &Graph) -> usize {
    2 * graph.edge_count()
}

/// A named collection of graphs with shared feature dimensionality and
/// contiguous class indices. `original_labels[c]` is the raw label value that
/// was remapped to class `c`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub original_labels: Vec<i64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn mean_node_count(&self) -> f64 {
        if self.graphs.is_empty() {
            return 0.0;
        }
        self.graphs.iter().map(|g| g.node_count() as f64).sum::<f64>() / self.len() as f64
    }

    pub fn mean_edge_count(&self) -> f64 {
        if self.graphs.is_empty() {
            return 0.0;
        }
        self.graphs.iter().map(|g| g.edge_count() as f64).sum::<f64>() / self.len() as f64
    }

    /// Fraction held by the most common class.
    pub fn majority_rate(&self) -> f64 {
        let mut counts = vec![0usize; self.num_classes];
        for g in &self.graphs {
            if let Some(l) = g.label() {
                counts[l] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        if total == 0 {
            return 0.0;
        }
        counts.into_iter().max().unwrap_or(0) as f64 / total as f64
    }

    /// Dataset summary as JSON.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "num_graphs": self.len(),
            "num_classes": self.num_classes,
            "feature_dim": self.feature_dim,
            "original_labels": self.original_labels,
            "mean_node_count": self.mean_node_count(),
            "mean_edge_count": self.mean_edge_count(),
            "majority_rate": self.majority_rate(),
        })
    }
}

/// Disjoint union of graphs: node indices offset by cumulative node counts,
/// with a per-node graph id for segment readout.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub total_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub features: Tensor,
    pub graph_ids: Vec<usize>,
    pub batch_size: usize,
}

/// Builds the disjoint union of `graphs`. All members must share a feature dimension.
pub fn make_batch(graphs: &[&Graph]) -> Result<GraphBatch, DataError> {
    let first = graphs.first().ok_or(DataError::EmptyBatch)?;
    let feature_dim = first.feature_dim();
    let total_nodes: usize = graphs.iter().map(|g| g.node_count()).sum();

    let mut edges = Vec::new();
    let mut features = Vec::with_capacity(total_nodes * feature_dim);
    let mut graph_ids = Vec::with_capacity(total_nodes);
    let mut offset = 0usize;
    for (gi, g) in graphs.iter().enumerate() {
        if g.feature_dim() != feature_dim {
            return Err(DataError::FeatureDimMismatch {
                expected: feature_dim,
                found: g.feature_dim(),
            });
        }
        for &(u, v) in g.edges() {
            edges.push((u + offset, v + offset));
        }
        features.extend_from_slice(g.features());
        graph_ids.extend(std::iter::repeat(gi).take(g.node_count()));
        offset += g.node_count();
    }
    Ok(GraphBatch {
        total_nodes,
        edges,
        features: Tensor::from_vec(total_nodes, feature_dim, features),
        graph_ids,
        batch_size: graphs.len(),
    })
}

/// Replaces every node's features with a one-hot of `min(degree, max_degree)`
/// over `max_degree + 1` bins. Used for datasets that carry no node attributes.
pub fn featurize_degrees(dataset: &Dataset, max_degree: usize) -> Dataset {
    assert!(max_degree >= 1, "max_degree must be at least 1");
    let dim = max_degree + 1;
    let graphs = dataset
        .graphs
        .iter()
        .map(|g| {
            let mut features = vec![0.0; g.node_count() * dim];
            for (v, &d) in g.degrees().iter().enumerate() {
                features[v * dim + d.min(max_degree)] = 1.0;
            }
            Graph {
                node_count: g.node_count(),
                edges: g.edges().to_vec(),
                features,
                feature_dim: dim,
                label: g.label(),
            }
        })
        .collect();
    Dataset {
        name: dataset.name.clone(),
        graphs,
        num_classes: dataset.num_classes,
        feature_dim: dim,
        original_labels: dataset.original_labels.clone(),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, DataError> {
    if !path.is_file() {
        return Err(DataError::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect())
}

fn parse_int(file: &Path, line_no: usize, raw: &str) -> Result<i64, DataError> {
    raw.trim().parse::<i64>().map_err(|_| DataError::Format {
        file: file.display().to_string(),
        line: line_no,
        message: format!("expected an integer, found {raw:?}"),
    })
}

/// Loads a dataset in TU text format from `directory_path`; the directory name
/// is the dataset name and file prefix. Edges are deduplicated and converted to
/// 0-based; graph labels are remapped to contiguous `[0, num_classes)`.
pub fn load_tu_dataset(directory_path: &Path) -> Result<Dataset, DataError> {
    let name = directory_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| DataError::InvalidGraph(format!(
            "cannot derive a dataset name from {}",
            directory_path.display()
        )))?
        .to_string();

    let file = |suffix: &str| directory_path.join(format!("{name}_{suffix}.txt"));
    let indicator_path = file("graph_indicator");
    let adjacency_path = file("A");
    let labels_path = file("graph_labels");
    let node_labels_path = file("node_labels");

    // graph_indicator: line i gives the (1-based) graph of global node i
    let indicator_lines = read_lines(&indicator_path)?;
    let mut node_graph = Vec::with_capacity(indicator_lines.len());
    for (i, line) in indicator_lines.iter().enumerate() {
        let gid = parse_int(&indicator_path, i + 1, line)?;
        if gid < 1 {
            return Err(DataError::Format {
                file: indicator_path.display().to_string(),
                line: i + 1,
                message: format!("graph indicator must be >= 1, found {gid}"),
            });
        }
        node_graph.push((gid - 1) as usize);
    }
    let total_nodes = node_graph.len();
    let num_graphs = node_graph.iter().copied().max().map_or(0, |m| m + 1);
    if num_graphs == 0 {
        return Err(DataError::Format {
            file: indicator_path.display().to_string(),
            line: 0,
            message: "dataset has no nodes".into(),
        });
    }

    // local index of each global node within its graph, in file order
    let mut graph_sizes = vec![0usize; num_graphs];
    let mut local_index = Vec::with_capacity(total_nodes);
    for &g in &node_graph {
        local_index.push(graph_sizes[g]);
        graph_sizes[g] += 1;
    }
    if let Some(empty) = graph_sizes.iter().position(|&s| s == 0) {
        return Err(DataError::Format {
            file: indicator_path.display().to_string(),
            line: 0,
            message: format!("graph {} has no nodes", empty + 1),
        });
    }

    // adjacency: 1-based global pairs; both directions may be listed
    let adjacency_lines = read_lines(&adjacency_path)?;
    let mut edge_sets: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); num_graphs];
    for (i, line) in adjacency_lines.iter().enumerate() {
        let line_no = i + 1;
        let mut parts = line.split(',');
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(DataError::Format {
                    file: adjacency_path.display().to_string(),
                    line: line_no,
                    message: format!("expected two comma-separated node ids, found {line:?}"),
                })
            }
        };
        let u = parse_int(&adjacency_path, line_no, a)?;
        let v = parse_int(&adjacency_path, line_no, b)?;
        if u < 1 || v < 1 || u as usize > total_nodes || v as usize > total_nodes {
            return Err(DataError::Format {
                file: adjacency_path.display().to_string(),
                line: line_no,
                message: format!("node id out of range in edge ({u}, {v})"),
            });
        }
        let (u, v) = (u as usize - 1, v as usize - 1);
        if node_graph[u] != node_graph[v] {
            return Err(DataError::Format {
                file: adjacency_path.display().to_string(),
                line: line_no,
                message: format!(
                    "edge ({}, {}) crosses graphs {} and {}",
                    u + 1,
                    v + 1,
                    node_graph[u] + 1,
                    node_graph[v] + 1
                ),
            });
        }
        if u == v {
            return Err(DataError::Format {
                file: adjacency_path.display().to_string(),
                line: line_no,
                message: format!("self-loop at node {}", u + 1),
            });
        }
        let (lu, lv) = (local_index[u], local_index[v]);
        edge_sets[node_graph[u]].insert((lu.min(lv), lu.max(lv)));
    }

    // graph labels, remapped to contiguous class indices by sorted raw value
    let label_lines = read_lines(&labels_path)?;
    if label_lines.len() != num_graphs {
        return Err(DataError::Format {
            file: labels_path.display().to_string(),
            line: label_lines.len(),
            message: format!("expected {num_graphs} labels, found {}", label_lines.len()),
        });
    }
    let mut raw_labels = Vec::with_capacity(num_graphs);
    for (i, line) in label_lines.iter().enumerate() {
        raw_labels.push(parse_int(&labels_path, i + 1, line)?);
    }
    let distinct: BTreeSet<i64> = raw_labels.iter().copied().collect();
    let original_labels: Vec<i64> = distinct.into_iter().collect();
    let class_of: BTreeMap<i64, usize> = original_labels
        .iter()
        .enumerate()
        .map(|(c, &raw)| (raw, c))
        .collect();
    let num_classes = original_labels.len();

    // optional node labels, one-hot encoded over the sorted distinct values
    let (node_features, feature_dim) = if node_labels_path.is_file() {
        let node_label_lines = read_lines(&node_labels_path)?;
        if node_label_lines.len() != total_nodes {
            return Err(DataError::Format {
                file: node_labels_path.display().to_string(),
                line: node_label_lines.len(),
                message: format!(
                    "expected {total_nodes} node labels, found {}",
                    node_label_lines.len()
                ),
            });
        }
        let mut raw = Vec::with_capacity(total_nodes);
        for (i, line) in node_label_lines.iter().enumerate() {
            raw.push(parse_int(&node_labels_path, i + 1, line)?);
        }
        let vocab: BTreeSet<i64> = raw.iter().copied().collect();
        let bin_of: BTreeMap<i64, usize> = vocab
            .into_iter()
            .enumerate()
            .map(|(bin, value)| (value, bin))
            .collect();
        let dim = bin_of.len();
        (Some((raw, bin_of)), dim)
    } else {
        (None, 0)
    };

    let mut graphs = Vec::with_capacity(num_graphs);
    let mut node_cursor = vec![0usize; num_graphs];
    // per-graph feature rows in node file order
    let mut features: Vec<Vec<f64>> = graph_sizes
        .iter()
        .map(|&s| vec![0.0; s * feature_dim])
        .collect();
    if let Some((raw, bin_of)) = &node_features {
        for (global, &g) in node_graph.iter().enumerate() {
            let local = node_cursor[g];
            node_cursor[g] += 1;
            let bin = bin_of[&raw[global]];
            features[g][local * feature_dim + bin] = 1.0;
        }
    }
    for g in 0..num_graphs {
        let edges: Vec<(usize, usize)> = edge_sets[g].iter().copied().collect();
        let graph = Graph::new(
            graph_sizes[g],
            edges,
            std::mem::take(&mut features[g]),
            feature_dim,
            Some(class_of[&raw_labels[g]]),
        )?;
        graphs.push(graph);
    }

    Ok(Dataset {
        name,
        graphs,
        num_classes,
        feature_dim,
        original_labels,
    })
}

/// Writes a dataset back out in TU text format (both edge directions listed, as
/// the public files do). Node labels are recovered from one-hot features when
/// `feature_dim > 0`.
pub fn write_tu_dataset(dataset: &Dataset, directory_path: &Path) -> Result<(), DataError> {
    fs::create_dir_all(directory_path)?;
    let name = &dataset.name;
    let mut adjacency = String::new();
    let mut indicator = String::new();
    let mut graph_labels = String::new();
    let mut node_labels = String::new();

    let mut offset = 0usize;
    for (gi, g) in dataset.graphs.iter().enumerate() {
        for &(u, v) in g.edges() {
            let (a, b) = (u + offset + 1, v + offset + 1);
            let _ = writeln!(adjacency, "{a}, {b}");
            let _ = writeln!(adjacency, "{b}, {a}");
        }
        for v in 0..g.node_count() {
            let _ = writeln!(indicator, "{}", gi + 1);
            if dataset.feature_dim > 0 {
                let row = g.feature_row(v);
                let bin = row
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                let _ = writeln!(node_labels, "{bin}");
            }
        }
        let raw = g
            .label()
            .map(|c| dataset.original_labels.get(c).copied().unwrap_or(c as i64))
            .unwrap_or(0);
        let _ = writeln!(graph_labels, "{raw}");
        offset += g.node_count();
    }

    let write = |suffix: &str, body: &str| {
        crate::util::write_atomic(
            &directory_path.join(format!("{name}_{suffix}.txt")),
            body.as_bytes(),
        )
    };
    write("A", &adjacency)?;
    write("graph_indicator", &indicator)?;
    write("graph_labels", &graph_labels)?;
    if dataset.feature_dim > 0 {
        write("node_labels", &node_labels)?;
    }
    Ok(())
}
