//! Block paving, the renormalised bond percolation built from it, crossings,
//! clusters and the auxiliary random walk.

mod edge;
mod estimate;
mod flow;
mod paving;
mod walk;

pub use edge::{
    blocks_state, build_field, edge_state, face_configuration, face_state, hat_open, hat_state,
    EdgeState, FaceCache, FieldProvenance, RenormalizedField,
};
pub use estimate::{estimate_open_fraction, OpenFractionEstimate};
pub use flow::{clusters, crossing_count, window_adjacency, ClusterReport};
pub use paving::{
    block_neighborhood, build_paving, hat_anchor, hat_neighborhood, Block, BlockNeighborhood,
    BlockPaving,
};
pub use walk::{aux_walk, AuxWalkParams};
