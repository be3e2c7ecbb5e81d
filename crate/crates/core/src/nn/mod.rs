//! Fusion model: layers with explicit backward passes, the text/palette/visual
//! heads, and the binary checkpoint format.

mod checkpoint;
mod layers;
mod model;
mod tensor;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use layers::{
    CrossAttentionBlock, FeedForward, LayerNorm, Linear, MultiHeadAttention, Params, TransformerBlock,
};
pub use model::{
    palette_features, similarity, similarity_matrix, FusionParameters, ModelConfig, PaletteTrace, TextTrace,
    VisualTrace,
};
pub use tensor::{dot, l2_normalize, Mat, Scalar, Tensor};
