//! Graph contrastive pre-training by model pruning.

pub mod autodiff;
pub mod entropy;
pub mod gradcheck;
pub mod graph;
pub mod tensor;
pub mod util;
