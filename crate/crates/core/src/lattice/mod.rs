//! Lattice geometry, occupancy fields and the elementary transformations
//! (exchange, translation, box exchange) shared by every other module.

mod bits;
mod config;
mod region;
mod site;
mod snapshot;

pub use bits::BitField;
pub use config::{box_swap, neighbors, swap, translate, Boundary, Configuration, Domain};
pub use region::{boundary_sets, Region};
pub use site::SiteVector;
pub use snapshot::Snapshot;
