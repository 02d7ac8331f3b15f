//! Analytical cycle and energy model of a spatial CNN accelerator that can
//! run each layer either weight stationary or output stationary.
//!
//! The crate evaluates networks one layer at a time: [`workload`] describes
//! layer shapes, [`dataflow`] costs the compute side of each dataflow,
//! [`memtile`] tiles a layer against the global buffer and overlaps DRAM
//! transfers with compute, and [`engine`] picks the faster dataflow per layer
//! and rolls results up into reports rendered by [`report`].

pub mod cli;
pub mod dataflow;
pub mod engine;
pub mod error;
pub mod hwconfig;
pub mod memtile;
pub mod report;
pub mod workload;

pub use dataflow::{AccessCounts, Dataflow};
pub use engine::{compare_policies, select_dataflow, simulate_network, NetworkReport, Policy};
pub use error::{Error, Result};
pub use hwconfig::{default_config, HardwareConfig, UnitEnergyTable};
pub use memtile::{tiling_search, TileConfig};
pub use workload::{LayerCategory, LayerKind, LayerSpec, NetworkSpec};
