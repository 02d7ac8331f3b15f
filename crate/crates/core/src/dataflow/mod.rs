//! Compute-side cycle and access-count models of the two dataflows.
//!
//! Both models take a [`ConvShape`], the loop bounds of one convolution
//! group, so the tiling search can cost a tile without building a fake
//! [`LayerSpec`]. The `*_layer_cost` entry points cost a whole layer.

mod os;
mod ws;

use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hwconfig::HardwareConfig;
use crate::workload::{LayerKind, LayerSpec};

pub use os::{os_block_geometry, os_layer_cost, os_shape_cost, BlockGeometry, OsLayerCost};
pub use ws::{ws_layer_cost, ws_psum_traffic, ws_shape_cost, PsumTraffic, WsLayerCost};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dataflow {
    /// Output stationary.
    Os,
    /// Weight stationary.
    Ws,
}

impl Dataflow {
    pub const BOTH: [Dataflow; 2] = [Dataflow::Os, Dataflow::Ws];

    pub fn as_str(self) -> &'static str {
        match self {
            Dataflow::Os => "OS",
            Dataflow::Ws => "WS",
        }
    }

    /// Whether the dataflow can map a layer of this kind.
    pub fn supports(self, kind: LayerKind) -> bool {
        match self {
            Dataflow::Os => matches!(kind, LayerKind::Conv | LayerKind::DepthwiseConv),
            Dataflow::Ws => kind.is_compute(),
        }
    }

    pub(crate) fn check(self, layer: &LayerSpec) -> Result<()> {
        if self.supports(layer.kind) {
            Ok(())
        } else {
            Err(Error::Unsupported {
                layer: layer.name.clone(),
                kind: layer.kind.to_string(),
                dataflow: self.to_string(),
            })
        }
    }
}

impl fmt::Display for Dataflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Access counts per level of the memory hierarchy. Buffer-side counts are in
/// elements; DRAM traffic is in bytes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessCounts {
    pub mac_ops: u64,
    pub regfile: u64,
    pub inter_pe: u64,
    pub global_buffer: u64,
    pub dram_bytes: u64,
}

impl AccessCounts {
    pub fn times(self, k: u64) -> Self {
        AccessCounts {
            mac_ops: self.mac_ops * k,
            regfile: self.regfile * k,
            inter_pe: self.inter_pe * k,
            global_buffer: self.global_buffer * k,
            dram_bytes: self.dram_bytes * k,
        }
    }
}

impl Add for AccessCounts {
    type Output = AccessCounts;

    fn add(self, o: AccessCounts) -> AccessCounts {
        AccessCounts {
            mac_ops: self.mac_ops + o.mac_ops,
            regfile: self.regfile + o.regfile,
            inter_pe: self.inter_pe + o.inter_pe,
            global_buffer: self.global_buffer + o.global_buffer,
            dram_bytes: self.dram_bytes + o.dram_bytes,
        }
    }
}

impl AddAssign for AccessCounts {
    fn add_assign(&mut self, o: AccessCounts) {
        *self = *self + o;
    }
}

impl std::iter::Sum for AccessCounts {
    fn sum<I: Iterator<Item = AccessCounts>>(iter: I) -> Self {
        iter.fold(AccessCounts::default(), Add::add)
    }
}

/// Loop bounds of one convolution group, possibly a tile of a layer.
///
/// For depthwise layers `in_c` is 1 and `out_c` is the number of channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvShape {
    pub kind: LayerKind,
    pub out_h: u64,
    pub out_w: u64,
    pub in_c: u64,
    pub out_c: u64,
    pub filter_h: u64,
    pub filter_w: u64,
    pub stride: u64,
    pub sparsity: f64,
    /// Input rows and columns actually present, used to clip halo reads.
    pub in_h: u64,
    pub in_w: u64,
}

impl ConvShape {
    /// Shape of one group of `layer`.
    pub fn of_group(layer: &LayerSpec) -> Self {
        ConvShape {
            kind: layer.kind,
            out_h: layer.out_h(),
            out_w: layer.out_w(),
            in_c: layer.in_c_per_group(),
            out_c: layer.out_c_per_group(),
            filter_h: layer.filter_h,
            filter_w: layer.filter_w,
            stride: layer.stride,
            sparsity: layer.sparsity,
            in_h: layer.in_h,
            in_w: layer.in_w,
        }
    }

    pub fn taps(&self) -> u64 {
        self.filter_h * self.filter_w
    }

    pub fn is_depthwise(&self) -> bool {
        self.kind == LayerKind::DepthwiseConv
    }

    /// Dense MACs of the shape.
    pub fn macs(&self) -> u64 {
        self.out_h * self.out_w * self.out_c * self.in_c * self.taps()
    }
}

/// Compute-side cost of a layer or tile under either dataflow.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ComputeCost {
    pub compute_cycles: u64,
    pub active_macs: u64,
    pub accesses: AccessCounts,
}

impl ComputeCost {
    pub fn times(self, k: u64) -> Self {
        ComputeCost {
            compute_cycles: self.compute_cycles * k,
            active_macs: self.active_macs * k,
            accesses: self.accesses.times(k),
        }
    }
}

/// Costs a group-shaped loop nest under `dataflow`.
pub fn shape_cost(dataflow: Dataflow, shape: &ConvShape, cfg: &HardwareConfig) -> ComputeCost {
    match dataflow {
        Dataflow::Os => os_shape_cost(shape, cfg).into(),
        Dataflow::Ws => ws_shape_cost(shape, cfg).into(),
    }
}

/// Costs a whole layer under `dataflow`, rejecting unsupported kinds.
pub fn layer_cost(dataflow: Dataflow, layer: &LayerSpec, cfg: &HardwareConfig) -> Result<ComputeCost> {
    match dataflow {
        Dataflow::Os => os_layer_cost(layer, cfg).map(Into::into),
        Dataflow::Ws => ws_layer_cost(layer, cfg).map(Into::into),
    }
}

/// Non-zero filter taps under a uniform sparsity: `ceil(taps * (1 - sparsity))`.
pub fn nonzero_taps(taps: u64, sparsity: f64) -> u64 {
    let x = taps as f64 * (1.0 - sparsity);
    let nearest = x.round();
    // Absorb rounding noise such as 9 * (1 - 4/9) = 5.000000000000001.
    let v = if (x - nearest).abs() < 1e-9 { nearest } else { x.ceil() };
    (v.max(0.0) as u64).min(taps)
}

pub(crate) fn div_ceil(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}
