//! Regular bin packing on an integer grid, in 2D and 3D.
//!
//! Objects are packed one at a time into identical boxes tracked as height
//! maps. The packing order is the only decision variable: this crate
//! provides random, volume-sorted, and evolutionary orderings plus a
//! pointer-network policy trained with an actor-critic method, together
//! with dataset generation, benchmarking, and SVG rendering.

pub mod baselines;
pub mod checkpoint;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod grad;
pub mod instance;
pub mod mat;
pub mod metrics;
pub mod optim;
pub mod placement;
pub mod policy;
pub mod render;
pub mod train;

pub use error::{Error, Result};
pub use instance::{BoxSpec, GenConfig, Instance, ObjectDims, PackingOrder};
pub use metrics::{evaluate, order_cost, BoxMetrics, PackingMetrics, RewardConfig};
pub use placement::{pack_sequence, select_target, HeightMap, PackingResult, Placement, Position};
