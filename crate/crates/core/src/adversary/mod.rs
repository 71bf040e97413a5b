//! Lower-bound data generators and the resisting first-order oracle.

mod resisting;
mod streams;

pub use resisting::{QueryRecord, ResistingOracle, Transcript};
pub use streams::{
    block_sign_stream, hidden_coordinate_stream, linear_level_stream, linear_tree_stream,
    orthonormal_levels, unobserved_coordinates, unobserved_probability, BlockAdversaryPlan,
    BlockStream, LinearTreeStream,
};

#[cfg(test)]
mod tests;
