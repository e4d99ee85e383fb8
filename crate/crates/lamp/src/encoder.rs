//! GIN message-passing encoder and the shared two-layer projection head.
//!
//! The same encoder weights drive both contrastive branches: the dense branch
//! uses them as-is, the pruned twin multiplies each MLP weight matrix by a
//! binary mask. Layer update: `H ← MLP((1+eps)·H + Σ_{u∈N(v)} H_u)` with ReLU
//! between and after the two MLP sublayers.

use crate::autodiff::{Engine, ParamRef};
use crate::graph::GraphBatch;
use crate::pruning::PruneMask;
use crate::tensor::{Tensor, TensorError};
use rand::Rng;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EncoderError {
    #[error("encoder requires at least 2 layers, got {0}")]
    TooFewLayers(usize),
    #[error("hidden dimension must be at least 1")]
    ZeroHidden,
    #[error("input dimension must be at least 1 (featurize the dataset first)")]
    ZeroInput,
}

/// Graph-level pooling mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    Sum,
    Mean,
}

impl fmt::Display for Readout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Readout::Sum => "sum",
            Readout::Mean => "mean",
        })
    }
}

impl FromStr for Readout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(Readout::Sum),
            "mean" => Ok(Readout::Mean),
            other => Err(format!("unknown readout {other:?} (expected sum or mean)")),
        }
    }
}

fn glorot(rows: usize, cols: usize, name: &str, rng: &mut impl Rng) -> ParamRef {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
    ParamRef::new(name, Tensor::from_vec(rows, cols, data))
}

/// One GIN layer: a two-layer MLP applied after neighbor aggregation.
/// `eps` is fixed at construction (0 by default, non-learnable).
#[derive(Debug, Clone)]
pub struct GinLayer {
    pub w1: ParamRef,
    pub b1: ParamRef,
    pub w2: ParamRef,
    pub b2: ParamRef,
    pub eps: f64,
}

impl GinLayer {
    fn new(input_dim: usize, hidden_dim: usize, index: usize, rng: &mut impl Rng) -> Self {
        GinLayer {
            w1: glorot(input_dim, hidden_dim, &format!("encoder.layer{index}.w1"), rng),
            b1: ParamRef::new(format!("encoder.layer{index}.b1"), Tensor::zeros(1, hidden_dim)),
            w2: glorot(hidden_dim, hidden_dim, &format!("encoder.layer{index}.w2"), rng),
            b2: ParamRef::new(format!("encoder.layer{index}.b2"), Tensor::zeros(1, hidden_dim)),
            eps: 0.0,
        }
    }
}

/// Stack of GIN layers producing node embeddings.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub layers: Vec<GinLayer>,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl Encoder {
    pub fn new(
        input_dim: usize,
        hidden_dim: usize,
        num_layers: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, EncoderError> {
        if num_layers < 2 {
            return Err(EncoderError::TooFewLayers(num_layers));
        }
        if hidden_dim == 0 {
            return Err(EncoderError::ZeroHidden);
        }
        if input_dim == 0 {
            return Err(EncoderError::ZeroInput);
        }
        let layers = (0..num_layers)
            .map(|i| GinLayer::new(if i == 0 { input_dim } else { hidden_dim }, hidden_dim, i, rng))
            .collect();
        Ok(Encoder {
            layers,
            input_dim,
            hidden_dim,
        })
    }

    /// All trainable parameters, in a stable order.
    pub fn parameters(&self) -> Vec<ParamRef> {
        self.layers
            .iter()
            .flat_map(|l| [l.w1.clone(), l.b1.clone(), l.w2.clone(), l.b2.clone()])
            .collect()
    }

    /// The weight matrices subject to pruning (biases are never pruned).
    pub fn prunable_weights(&self) -> Vec<[ParamRef; 2]> {
        self.layers.iter().map(|l| [l.w1.clone(), l.w2.clone()]).collect()
    }

    /// Node embeddings for a batch. With `mask` present each MLP weight is
    /// elementwise-multiplied by the corresponding mask matrix (the pruned
    /// branch); without it the raw weights are used (the dense branch).
    pub fn encode<E: Engine>(
        &self,
        eng: &mut E,
        batch: &GraphBatch,
        mask: Option<&PruneMask>,
    ) -> Result<E::Value, TensorError> {
        if batch.features.cols() != self.input_dim {
            return Err(TensorError::ShapeMismatch {
                op: "encode",
                lhs: batch.features.shape(),
                rhs: (batch.total_nodes, self.input_dim),
            });
        }
        if let Some(m) = mask {
            m.check_shapes(self)?;
        }
        let mut h = eng.input(batch.features.clone());
        for (li, layer) in self.layers.iter().enumerate() {
            let agg = eng.scatter_sum(&h, &batch.edges)?;
            let self_term = if layer.eps == 0.0 {
                h
            } else {
                eng.scale(&h, 1.0 + layer.eps)
            };
            let x = eng.add(&self_term, &agg)?;

            let mut w1 = eng.param(&layer.w1);
            let mut w2 = eng.param(&layer.w2);
            if let Some(m) = mask {
                let m1 = eng.constant(m.layers[li].mlp1.clone());
                let m2 = eng.constant(m.layers[li].mlp2.clone());
                w1 = eng.mul_elem(&w1, &m1)?;
                w2 = eng.mul_elem(&w2, &m2)?;
            }
            let b1 = eng.param(&layer.b1);
            let b2 = eng.param(&layer.b2);

            let y = eng.matmul(&x, &w1)?;
            let y = eng.add_bias(&y, &b1)?;
            let y = eng.relu(&y);
            let y = eng.matmul(&y, &w2)?;
            let y = eng.add_bias(&y, &b2)?;
            h = eng.relu(&y);
        }
        Ok(h)
    }
}

/// Pools node embeddings into one row per graph.
pub fn readout<E: Engine>(
    eng: &mut E,
    node_embeds: &E::Value,
    graph_ids: &[usize],
    batch_size: usize,
    mode: Readout,
) -> Result<E::Value, TensorError> {
    match mode {
        Readout::Sum => eng.segment_sum(node_embeds, graph_ids, batch_size),
        Readout::Mean => eng.segment_mean(node_embeds, graph_ids, batch_size),
    }
}

/// Two-layer perceptron mapping graph embeddings into the contrast space.
/// Shared verbatim between branches and never pruned.
#[derive(Debug, Clone)]
pub struct ProjectionHead {
    pub w1: ParamRef,
    pub b1: ParamRef,
    pub w2: ParamRef,
    pub b2: ParamRef,
}

impl ProjectionHead {
    pub fn new(dim: usize, rng: &mut impl Rng) -> Self {
        ProjectionHead {
            w1: glorot(dim, dim, "head.w1", rng),
            b1: ParamRef::new("head.b1", Tensor::zeros(1, dim)),
            w2: glorot(dim, dim, "head.w2", rng),
            b2: ParamRef::new("head.b2", Tensor::zeros(1, dim)),
        }
    }

    pub fn parameters(&self) -> Vec<ParamRef> {
        vec![self.w1.clone(), self.b1.clone(), self.w2.clone(), self.b2.clone()]
    }

    /// `z = W2·ReLU(W1·h + b1) + b2`, row-wise.
    pub fn project<E: Engine>(&self, eng: &mut E, x: &E::Value) -> Result<E::Value, TensorError> {
        let w1 = eng.param(&self.w1);
        let b1 = eng.param(&self.b1);
        let w2 = eng.param(&self.w2);
        let b2 = eng.param(&self.b2);
        let h = eng.matmul(x, &w1)?;
        let h = eng.add_bias(&h, &b1)?;
        let h = eng.relu(&h);
        let z = eng.matmul(&h, &w2)?;
        eng.add_bias(&z, &b2)
    }
}
