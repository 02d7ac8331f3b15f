//! Weight-stationary model.
//!
//! An N x N tile of one filter tap's weights is held in the array: rows are
//! input channels, columns are output channels. Input pixels stream in one per
//! cycle and partial sums reduce down each column's adder chain. Every tap is a
//! separate pass whose partial sums accumulate through the global buffer.
//!
//! A depthwise output channel reads a single input channel, so only one PE of
//! a column could ever be busy; each channel is mapped as its own pass.

use super::{div_ceil, AccessCounts, ComputeCost, ConvShape, Dataflow};
use crate::error::Result;
use crate::hwconfig::HardwareConfig;
use crate::workload::LayerSpec;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WsLayerCost {
    /// Total compute-side cycles, preload and pipeline fill included.
    pub compute_cycles: u64,
    pub preload_cycles: u64,
    pub pipeline_fill_cycles: u64,
    pub accesses: AccessCounts,
    pub active_macs: u64,
}

impl From<WsLayerCost> for ComputeCost {
    fn from(c: WsLayerCost) -> Self {
        ComputeCost {
            compute_cycles: c.compute_cycles,
            active_macs: c.active_macs,
            accesses: c.accesses,
        }
    }
}

/// Partial-sum round trips through the global buffer, in elements.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PsumTraffic {
    pub writes: u64,
    pub reads: u64,
}

impl PsumTraffic {
    pub fn total(&self) -> u64 {
        self.writes + self.reads
    }
}

pub fn ws_layer_cost(layer: &LayerSpec, cfg: &HardwareConfig) -> Result<WsLayerCost> {
    Dataflow::Ws.check(layer)?;
    let one = ws_shape_cost(&ConvShape::of_group(layer), cfg);
    let g = layer.groups;
    Ok(WsLayerCost {
        compute_cycles: one.compute_cycles * g,
        preload_cycles: one.preload_cycles * g,
        pipeline_fill_cycles: one.pipeline_fill_cycles * g,
        accesses: one.accesses.times(g),
        active_macs: one.active_macs * g,
    })
}

pub fn ws_psum_traffic(layer: &LayerSpec, n: u64) -> PsumTraffic {
    let passes = div_ceil(layer.in_c_per_group(), n) * layer.taps();
    let per_pass = layer.out_h() * layer.out_w() * layer.out_c;
    let writes = per_pass * passes.saturating_sub(1);
    PsumTraffic {
        writes,
        reads: writes,
    }
}

fn shape_psum(s: &ConvShape, n: u64) -> u64 {
    let passes = div_ceil(s.in_c, n) * s.taps();
    s.out_h * s.out_w * s.out_c * passes.saturating_sub(1)
}

pub fn ws_shape_cost(s: &ConvShape, cfg: &HardwareConfig) -> WsLayerCost {
    let n = cfg.pe_dim;
    let oc_width = if s.is_depthwise() { 1 } else { n };
    let tiles = div_ceil(s.in_c, n) * div_ceil(s.out_c, oc_width) * s.taps();
    let pixels = s.out_h * s.out_w;

    let active = s.macs();
    let psum = shape_psum(s, n);
    let streamed = div_ceil(s.out_c, oc_width) * s.taps() * pixels * s.in_c;
    let accesses = AccessCounts {
        mac_ops: active,
        regfile: active,
        inter_pe: active,
        global_buffer: s.in_c * s.out_c * s.taps() + streamed + 2 * psum + pixels * s.out_c,
        dram_bytes: 0,
    };
    WsLayerCost {
        compute_cycles: tiles * (2 * n + pixels),
        preload_cycles: tiles * n,
        pipeline_fill_cycles: tiles * n,
        accesses,
        active_macs: active,
    }
}
