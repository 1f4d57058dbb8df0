//! Dense arrays and a minimal reverse-mode differentiation engine.

mod array;
mod graph;

pub use array::Array;
pub use graph::{Bindings, Graph, GraphBuilder, NodeId};
