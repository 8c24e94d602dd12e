//! Minimal neural-network toolkit: autodiff tape, layers, and Adam.

pub mod graph;
pub mod layers;
pub mod optim;
pub mod params;

pub use graph::{Graph, Product, Var};
pub use layers::{causal_mask, dropout, scaled_dot_attention, tile_rows, LayerNorm, Linear, Lstm, MultiHeadAttention};
pub use optim::Adam;
pub use params::{Bound, ParamId, ParamSet};
