//! One-level structural entropy, the three classical graph augmentations, and
//! the dataset-level audit that quantifies how much structure each augmentation
//! destroys.
//!
//! Entropy is the Shannon entropy (base 2) of the degree distribution normalized
//! by graph volume. Damage is reported as the percent change
//! `1 − H(augmented)/H(original)`: positive means information loss, negative
//! means the augmentation injected entropy the original graph never had.

use crate::graph::{Dataset, Graph};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    #[error("structural entropy is undefined for an edgeless graph (volume 0)")]
    EdgelessGraph,
    #[error("augmentation ratio must lie strictly inside (0, 1), got {0}")]
    InvalidRatio(f64),
    #[error("audit needs at least one repeat, got {0}")]
    InvalidRepeats(usize),
}

/// The three GraphCL-style augmentation operators under audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Augmentation {
    NodeDrop,
    EdgePerturb,
    Subgraph,
}

impl fmt::Display for Augmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Augmentation::NodeDrop => "node_drop",
            Augmentation::EdgePerturb => "edge_perturb",
            Augmentation::Subgraph => "subgraph",
        };
        f.write_str(s)
    }
}

impl FromStr for Augmentation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "node_drop" => Ok(Augmentation::NodeDrop),
            "edge_perturb" => Ok(Augmentation::EdgePerturb),
            "subgraph" => Ok(Augmentation::Subgraph),
            other => Err(format!(
                "unknown augmentation {other:?} (expected node_drop, edge_perturb, or subgraph)"
            )),
        }
    }
}

/// Structural entropy in bits: `−Σ_v (g_v/vol)·log₂(g_v/vol)` with the
/// `0·log 0 = 0` convention for isolated nodes.
pub fn structural_entropy(graph: &Graph) -> Result<f64, EntropyError> {
    let vol = crate::graph::volume(graph);
    if vol == 0 {
        return Err(EntropyError::EdgelessGraph);
    }
    let vol = vol as f64;
    let mut h = 0.0;
    for d in graph.degrees() {
        if d > 0 {
            let share = d as f64 / vol;
            h -= share * share.log2();
        }
    }
    Ok(h)
}

/// Percent change of structural entropy, `1 − H(augmented)/H(original)`.
/// An augmented graph that lost every edge counts as total loss (1.0) so
/// dataset-level statistics stay total.
pub fn entropy_percent_change(original: &Graph, augmented: &Graph) -> Result<f64, EntropyError> {
    let h_orig = structural_entropy(original)?;
    match structural_entropy(augmented) {
        Ok(h_aug) => Ok(1.0 - h_aug / h_orig),
        Err(EntropyError::EdgelessGraph) => Ok(1.0),
        Err(e) => Err(e),
    }
}

fn check_ratio(ratio: f64) -> Result<(), EntropyError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(EntropyError::InvalidRatio(ratio));
    }
    Ok(())
}

fn induced_subgraph(graph: &Graph, keep: &[usize]) -> Graph {
    let mut map = vec![usize::MAX; graph.node_count()];
    for (new, &old) in keep.iter().enumerate() {
        map[old] = new;
    }
    let edges: Vec<(usize, usize)> = graph
        .edges()
        .iter()
        .filter(|&&(u, v)| map[u] != usize::MAX && map[v] != usize::MAX)
        .map(|&(u, v)| (map[u], map[v]))
        .collect();
    let dim = graph.feature_dim();
    let mut features = Vec::with_capacity(keep.len() * dim);
    for &old in keep {
        features.extend_from_slice(graph.feature_row(old));
    }
    Graph::new(keep.len(), edges, features, dim, graph.label())
        .expect("induced subgraph of a valid graph is valid")
}

/// Removes `⌊ratio·n⌋` uniformly chosen nodes with their incident edges,
/// keeping at least one node. Remaining nodes are re-indexed contiguously with
/// their feature rows preserved.
pub fn augment_node_drop(
    graph: &Graph,
    ratio: f64,
    rng: &mut impl Rng,
) -> Result<Graph, EntropyError> {
    check_ratio(ratio)?;
    let n = graph.node_count();
    let drop = ((ratio * n as f64).floor() as usize).min(n - 1);
    if drop == 0 {
        return Ok(graph.clone());
    }
    let dropped: BTreeSet<usize> = rand::seq::index::sample(rng, n, drop).into_iter().collect();
    let keep: Vec<usize> = (0..n).filter(|v| !dropped.contains(v)).collect();
    Ok(induced_subgraph(graph, &keep))
}

/// Runs `⌊ratio·|edges|⌋` perturbation actions; each action drops a uniformly
/// chosen existing edge or adds a uniformly sampled absent non-self-loop edge,
/// with equal probability. Impossible actions (nothing to drop, or the graph is
/// complete) are skipped.
pub fn augment_edge_perturb(
    graph: &Graph,
    ratio: f64,
    rng: &mut impl Rng,
) -> Result<Graph, EntropyError> {
    check_ratio(ratio)?;
    let n = graph.node_count();
    let actions = (ratio * graph.edge_count() as f64).floor() as usize;
    if actions == 0 {
        return Ok(graph.clone());
    }
    let mut edges: Vec<(usize, usize)> = graph.edges().to_vec();
    let mut present: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
    let complete = n * (n - 1) / 2;

    for _ in 0..actions {
        let drop = rng.gen_bool(0.5);
        if drop {
            if edges.is_empty() {
                continue;
            }
            let idx = rng.gen_range(0..edges.len());
            let e = edges.swap_remove(idx);
            present.remove(&e);
        } else {
            if present.len() >= complete {
                continue;
            }
            // rejection sampling; sparse graphs accept almost immediately
            let mut added = false;
            for _ in 0..64 {
                let u = rng.gen_range(0..n);
                let v = rng.gen_range(0..n);
                if u == v {
                    continue;
                }
                let e = (u.min(v), u.max(v));
                if present.insert(e) {
                    edges.push(e);
                    added = true;
                    break;
                }
            }
            if !added {
                // dense fallback: enumerate the absent pairs and pick uniformly
                let absent: Vec<(usize, usize)> = (0..n)
                    .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                    .filter(|e| !present.contains(e))
                    .collect();
                let e = absent[rng.gen_range(0..absent.len())];
                present.insert(e);
                edges.push(e);
            }
        }
    }
    Ok(Graph::new(
        n,
        edges,
        graph.features().to_vec(),
        graph.feature_dim(),
        graph.label(),
    )
    .expect("perturbed edge set stays simple"))
}

/// Random-walk subgraph sampling: walks from a uniform start until
/// `⌈ratio·n⌉` distinct nodes are visited, restarting from a fresh uniform
/// node whenever the walk's component is exhausted, then returns the induced
/// subgraph on the visited set.
pub fn augment_subgraph(
    graph: &Graph,
    ratio: f64,
    rng: &mut impl Rng,
) -> Result<Graph, EntropyError> {
    check_ratio(ratio)?;
    let n = graph.node_count();
    let target = ((ratio * n as f64).ceil() as usize).clamp(1, n);

    let mut adjacency = vec![Vec::new(); n];
    for &(u, v) in graph.edges() {
        adjacency[u].push(v);
        adjacency[v].push(u);
    }

    let mut visited = vec![false; n];
    let mut count = 1usize;
    let mut current = rng.gen_range(0..n);
    visited[current] = true;
    let mut stalled = 0usize;
    let stall_limit = 8 * n + 16;

    while count < target {
        let neighbors = &adjacency[current];
        if neighbors.is_empty() {
            // isolated node: restart the walk somewhere unvisited
            let unvisited: Vec<usize> = (0..n).filter(|&v| !visited[v]).collect();
            current = unvisited[rng.gen_range(0..unvisited.len())];
            visited[current] = true;
            count += 1;
            stalled = 0;
            continue;
        }
        let next = neighbors[rng.gen_range(0..neighbors.len())];
        if !visited[next] {
            visited[next] = true;
            count += 1;
            stalled = 0;
        } else {
            stalled += 1;
        }
        current = next;

        if stalled > stall_limit {
            // walk is trapped: jump to the frontier if one exists, otherwise the
            // component is exhausted and the walk restarts in a new one
            let frontier: Vec<usize> = (0..n)
                .filter(|&v| !visited[v] && adjacency[v].iter().any(|&u| visited[u]))
                .collect();
            let pick = if frontier.is_empty() {
                let unvisited: Vec<usize> = (0..n).filter(|&v| !visited[v]).collect();
                unvisited[rng.gen_range(0..unvisited.len())]
            } else {
                frontier[rng.gen_range(0..frontier.len())]
            };
            visited[pick] = true;
            count += 1;
            current = pick;
            stalled = 0;
        }
    }

    let keep: Vec<usize> = (0..n).filter(|&v| visited[v]).collect();
    Ok(induced_subgraph(graph, &keep))
}

/// Applies one augmentation by name.
pub fn augment(
    graph: &Graph,
    augmentation: Augmentation,
    ratio: f64,
    rng: &mut impl Rng,
) -> Result<Graph, EntropyError> {
    match augmentation {
        Augmentation::NodeDrop => augment_node_drop(graph, ratio, rng),
        Augmentation::EdgePerturb => augment_edge_perturb(graph, ratio, rng),
        Augmentation::Subgraph => augment_subgraph(graph, ratio, rng),
    }
}

/// One audited (graph, repeat) observation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DamageSample {
    pub graph_index: usize,
    pub repeat: usize,
    pub percent_change: f64,
}

/// Histogram bin width used by damage reports.
pub const HISTOGRAM_BIN_WIDTH: f64 = 0.05;

/// Per-dataset structural damage of one augmentation at one strength.
#[derive(Debug, Clone)]
pub struct DamageReport {
    pub dataset_name: String,
    pub augmentation: Augmentation,
    pub strength: f64,
    pub samples: Vec<DamageSample>,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// `(bin_lo, bin_hi, count)` over [−1, 1]; outliers clamp into the end bins.
    pub histogram: Vec<(f64, f64, usize)>,
    pub skipped_edgeless: usize,
}

impl DamageReport {
    /// `graph_index,repeat,percent_change` rows.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("graph_index,repeat,percent_change\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{}", s.graph_index, s.repeat, s.percent_change);
        }
        out
    }

    /// Summary statistics plus the histogram, as JSON.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dataset": self.dataset_name,
            "augmentation": self.augmentation,
            "strength": self.strength,
            "num_samples": self.samples.len(),
            "skipped_edgeless": self.skipped_edgeless,
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "max": self.max,
            "histogram": self.histogram.iter()
                .map(|&(lo, hi, c)| serde_json::json!([lo, hi, c]))
                .collect::<Vec<_>>(),
        })
    }
}

fn build_histogram(values: &[f64]) -> Vec<(f64, f64, usize)> {
    let bins = (2.0 / HISTOGRAM_BIN_WIDTH).round() as usize;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v + 1.0) / HISTOGRAM_BIN_WIDTH).floor() as isize).clamp(0, bins as isize - 1);
        counts[idx as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let lo = -1.0 + i as f64 * HISTOGRAM_BIN_WIDTH;
            (lo, lo + HISTOGRAM_BIN_WIDTH, c)
        })
        .collect()
}

/// Audits every graph of `dataset` under `augmentation` at `strength`,
/// `repeats` times each, with a child generator derived per (graph, repeat)
/// so audits are order-independent and reproducible. Edgeless originals are
/// skipped and counted.
pub fn audit_dataset(
    dataset: &Dataset,
    augmentation: Augmentation,
    strength: f64,
    repeats: usize,
    seed: u64,
) -> Result<DamageReport, EntropyError> {
    if repeats == 0 {
        return Err(EntropyError::InvalidRepeats(repeats));
    }
    check_ratio(strength)?;

    let mut samples = Vec::new();
    let mut skipped = 0usize;
    for (gi, graph) in dataset.graphs.iter().enumerate() {
        if graph.edge_count() == 0 {
            skipped += 1;
            continue;
        }
        for r in 0..repeats {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ gi as u64 ^ r as u64);
            let augmented = augment(graph, augmentation, strength, &mut rng)?;
            let change = entropy_percent_change(graph, &augmented)?;
            samples.push(DamageSample {
                graph_index: gi,
                repeat: r,
                percent_change: change,
            });
        }
    }

    let values: Vec<f64> = samples.iter().map(|s| s.percent_change).collect();
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DamageReport {
        dataset_name: dataset.name.clone(),
        augmentation,
        strength,
        histogram: build_histogram(&values),
        samples,
        mean,
        std: var.sqrt(),
        min: if min.is_finite() { min } else { 0.0 },
        max: if max.is_finite() { max } else { 0.0 },
        skipped_edgeless: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::volume;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::new(n, edges.to_vec(), vec![0.0; n], 1, None).unwrap()
    }

    fn triangle() -> Graph {
        graph(3, &[(0, 1), (1, 2), (0, 2)])
    }

    fn star3() -> Graph {
        graph(4, &[(0, 1), (0, 2), (0, 3)])
    }

    fn cycle(n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        graph(n, &edges)
    }

    fn complete(n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .collect();
        graph(n, &edges)
    }

    #[test]
    fn regular_graphs_hit_log2_n() {
        for g in [triangle(), cycle(4), cycle(7), complete(4), complete(5)] {
            let h = structural_entropy(&g).unwrap();
            let expect = (g.node_count() as f64).log2();
            assert!((h - expect).abs() < 1e-12, "H={h} expected {expect}");
        }
    }

    #[test]
    fn star3_matches_hand_derivation() {
        // term-by-term oracle: degrees 3,1,1,1 over volume 6
        let mut expected = 0.0;
        for d in [3.0f64, 1.0, 1.0, 1.0] {
            let share: f64 = d / 6.0;
            expected -= share * share.log2();
        }
        let got = structural_entropy(&star3()).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 1.79248, epsilon = 1e-5);
    }

    #[test]
    fn edgeless_graph_is_a_domain_error() {
        let g = graph(3, &[]);
        assert_eq!(structural_entropy(&g), Err(EntropyError::EdgelessGraph));
    }

    #[test]
    fn percent_change_identity_is_zero() {
        let g = triangle();
        assert_abs_diff_eq!(entropy_percent_change(&g, &g).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn percent_change_triangle_to_k2() {
        let change = entropy_percent_change(&triangle(), &graph(2, &[(0, 1)])).unwrap();
        let expected = 1.0 - 1.0 / 3.0f64.log2();
        assert_abs_diff_eq!(change, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(change, 0.3691, epsilon = 1e-4);
    }

    #[test]
    fn percent_change_negative_when_entropy_grows() {
        // star has lower entropy than the cycle on the same nodes
        let change = entropy_percent_change(&star3(), &cycle(4)).unwrap();
        assert!(change < 0.0, "expected entropy gain, got {change}");
    }

    #[test]
    fn percent_change_total_loss_when_augmented_edgeless() {
        let change = entropy_percent_change(&triangle(), &graph(2, &[])).unwrap();
        assert_eq!(change, 1.0);
    }

    #[test]
    fn node_drop_tiny_ratio_is_identity() {
        let g = triangle();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = augment_node_drop(&g, 0.01, &mut rng).unwrap();
        assert_eq!(out, g);
    }

    #[test]
    fn node_drop_on_triangle_leaves_k2() {
        for seed in 0..8 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = augment_node_drop(&triangle(), 0.34, &mut rng).unwrap();
            assert_eq!(out.node_count(), 2);
            assert_eq!(out.edge_count(), 1);
        }
    }

    #[test]
    fn node_drop_never_removes_everything() {
        let g = graph(2, &[(0, 1)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = augment_node_drop(&g, 0.99, &mut rng).unwrap();
        assert_eq!(out.node_count(), 1);
    }

    #[test]
    fn edge_perturb_zero_actions_is_identity() {
        let g = triangle();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = augment_edge_perturb(&g, 0.2, &mut rng).unwrap(); // floor(0.2*3)=0
        assert_eq!(out, g);
    }

    #[test]
    fn edge_perturb_one_action_on_k3() {
        // K3 is complete: an add action is skipped, a drop leaves 2 edges
        let mut dropped = false;
        for seed in 0..16 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = augment_edge_perturb(&triangle(), 0.4, &mut rng).unwrap(); // 1 action
            assert!(out.edge_count() == 2 || out.edge_count() == 3);
            dropped |= out.edge_count() == 2;
        }
        assert!(dropped, "no seed produced a drop action");
    }

    #[test]
    fn subgraph_k3_two_nodes_is_k2() {
        for seed in 0..8 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = augment_subgraph(&triangle(), 0.5, &mut rng).unwrap(); // ceil(1.5)=2
            assert_eq!(out.node_count(), 2);
            assert_eq!(out.edge_count(), 1);
        }
    }

    #[test]
    fn subgraph_near_full_ratio_keeps_connected_graph_whole() {
        let g = cycle(6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = augment_subgraph(&g, 0.99, &mut rng).unwrap();
        assert_eq!(out.node_count(), 6);
        assert_abs_diff_eq!(entropy_percent_change(&g, &out).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn subgraph_handles_disconnected_graphs() {
        // two triangles, no bridge: reaching 5 nodes requires a restart
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = augment_subgraph(&g, 0.8, &mut rng).unwrap(); // ceil(4.8)=5
        assert_eq!(out.node_count(), 5);
    }

    #[test]
    fn augmentations_are_deterministic_given_seed() {
        let g = cycle(9);
        for aug in [Augmentation::NodeDrop, Augmentation::EdgePerturb, Augmentation::Subgraph] {
            let mut a = ChaCha8Rng::seed_from_u64(77);
            let mut b = ChaCha8Rng::seed_from_u64(77);
            assert_eq!(
                augment(&g, aug, 0.3, &mut a).unwrap(),
                augment(&g, aug, 0.3, &mut b).unwrap()
            );
        }
    }

    #[test]
    fn ratio_bounds_are_enforced() {
        let g = triangle();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for bad in [0.0, 1.0, -0.2, 1.5] {
            assert!(augment_node_drop(&g, bad, &mut rng).is_err());
        }
    }

    #[test]
    fn audit_zero_action_strength_gives_all_zero_samples() {
        let ds = Dataset {
            name: "zero".into(),
            graphs: vec![triangle(), cycle(4)],
            num_classes: 0,
            feature_dim: 1,
            original_labels: vec![],
        };
        // strength small enough that floor(ratio * edges) = 0 for every member
        let report = audit_dataset(&ds, Augmentation::EdgePerturb, 0.05, 3, 5).unwrap();
        assert_eq!(report.samples.len(), 6);
        assert!(report.samples.iter().all(|s| s.percent_change == 0.0));
        let total: usize = report.histogram.iter().map(|&(_, _, c)| c).sum();
        assert_eq!(total, report.samples.len());
    }

    #[test]
    fn audit_skips_edgeless_graphs() {
        let ds = Dataset {
            name: "skip".into(),
            graphs: vec![triangle(), graph(2, &[])],
            num_classes: 0,
            feature_dim: 1,
            original_labels: vec![],
        };
        let report = audit_dataset(&ds, Augmentation::NodeDrop, 0.3, 2, 0).unwrap();
        assert_eq!(report.skipped_edgeless, 1);
        assert_eq!(report.samples.len(), 2);
    }

    #[test]
    fn audit_csv_and_json_are_well_formed() {
        let ds = Dataset {
            name: "fmt".into(),
            graphs: vec![cycle(5)],
            num_classes: 0,
            feature_dim: 1,
            original_labels: vec![],
        };
        let report = audit_dataset(&ds, Augmentation::Subgraph, 0.4, 2, 1).unwrap();
        let csv = report.to_csv_string();
        assert!(csv.starts_with("graph_index,repeat,percent_change\n"));
        assert_eq!(csv.lines().count(), 3);
        let json = report.summary_json();
        assert_eq!(json["num_samples"], 2);
        assert!(json["histogram"].as_array().unwrap().len() == 40);
    }

    proptest! {
        #[test]
        fn entropy_is_permutation_invariant(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(3..10usize);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.4) {
                        edges.push((u, v));
                    }
                }
            }
            prop_assume!(!edges.is_empty());
            let g = graph(n, &edges);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let permuted_edges: Vec<(usize, usize)> =
                edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
            let gp = graph(n, &permuted_edges);
            let a = structural_entropy(&g).unwrap();
            let b = structural_entropy(&gp).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn entropy_lies_in_range(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..12usize);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.3) {
                        edges.push((u, v));
                    }
                }
            }
            prop_assume!(!edges.is_empty());
            let g = graph(n, &edges);
            let h = structural_entropy(&g).unwrap();
            prop_assert!(h > 0.0);
            prop_assert!(h <= (n as f64).log2() + 1e-12);
        }

        #[test]
        fn volume_is_even_and_twice_edges(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..10usize);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.5) {
                        edges.push((u, v));
                    }
                }
            }
            let g = graph(n, &edges);
            prop_assert_eq!(volume(&g) % 2, 0);
            prop_assert_eq!(volume(&g), 2 * g.edge_count());
        }

        #[test]
        fn augmentation_size_contracts_hold(seed in 0u64..200, ratio in 0.05f64..0.95) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..14usize);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.35) {
                        edges.push((u, v));
                    }
                }
            }
            let g = graph(n, &edges);
            let mut r1 = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let dropped = augment_node_drop(&g, ratio, &mut r1).unwrap();
            let expect_drop = ((ratio * n as f64).floor() as usize).min(n - 1);
            prop_assert_eq!(dropped.node_count(), n - expect_drop);

            let mut r2 = ChaCha8Rng::seed_from_u64(seed ^ 0x1234);
            let sub = augment_subgraph(&g, ratio, &mut r2).unwrap();
            let expect_keep = ((ratio * n as f64).ceil() as usize).clamp(1, n);
            prop_assert_eq!(sub.node_count(), expect_keep);
        }
    }
}
