//! Output-stationary model.
//!
//! Each PE owns one output pixel of an N x N output block and holds G
//! accumulators, one per output channel of the current channel set. For every
//! input channel the input block is preloaded one PE row per cycle, then the
//! non-zero weights of the G filters are broadcast one per cycle while inputs
//! shift between neighbouring PEs. Finished outputs drain one row per cycle.

use super::{div_ceil, nonzero_taps, AccessCounts, ComputeCost, ConvShape, Dataflow};
use crate::error::Result;
use crate::hwconfig::HardwareConfig;
use crate::workload::LayerSpec;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OsLayerCost {
    /// Total compute-side cycles, preload and drain included.
    pub compute_cycles: u64,
    pub preload_cycles: u64,
    pub drain_cycles: u64,
    pub accesses: AccessCounts,
    /// MACs actually issued after zero-weight skipping.
    pub active_macs: u64,
}

impl From<OsLayerCost> for ComputeCost {
    fn from(c: OsLayerCost) -> Self {
        ComputeCost {
            compute_cycles: c.compute_cycles,
            active_macs: c.active_macs,
            accesses: c.accesses,
        }
    }
}

/// Input block needed for one N x N output block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockGeometry {
    pub block_rows: u64,
    pub block_cols: u64,
    pub halo_h: u64,
    pub halo_w: u64,
}

pub fn os_block_geometry(layer: &LayerSpec, n: u64) -> BlockGeometry {
    let rows = layer.stride * (n - 1) + layer.filter_h;
    let cols = layer.stride * (n - 1) + layer.filter_w;
    BlockGeometry {
        block_rows: rows,
        block_cols: cols,
        halo_h: rows.saturating_sub(n),
        halo_w: cols.saturating_sub(n),
    }
}

/// Costs a conv or depthwise layer; grouped convolutions cost each group.
pub fn os_layer_cost(layer: &LayerSpec, cfg: &HardwareConfig) -> Result<OsLayerCost> {
    Dataflow::Os.check(layer)?;
    let one = os_shape_cost(&ConvShape::of_group(layer), cfg);
    let g = layer.groups;
    Ok(OsLayerCost {
        compute_cycles: one.compute_cycles * g,
        preload_cycles: one.preload_cycles * g,
        drain_cycles: one.drain_cycles * g,
        accesses: one.accesses.times(g),
        active_macs: one.active_macs * g,
    })
}

/// Sum over the blocks along one axis of the input extent each block reads.
fn input_span(out: u64, n: u64, stride: u64, filter: u64, input: u64) -> u64 {
    let full = out / n;
    let rest = out % n;
    let need = |b: u64| (stride * (b - 1) + filter).min(input);
    full * need(n) + if rest > 0 { need(rest) } else { 0 }
}

pub fn os_shape_cost(s: &ConvShape, cfg: &HardwareConfig) -> OsLayerCost {
    let n = cfg.pe_dim;
    // A depthwise output channel has its own input channel, so there is no
    // input to share between accumulators.
    let g = if s.is_depthwise() { 1 } else { cfg.regfile_depth };
    let nnz = nonzero_taps(s.taps(), s.sparsity);
    let blocks = div_ceil(s.out_h, n) * div_ceil(s.out_w, n);
    let sets = div_ceil(s.out_c, g);

    // Per block: every set preloads each input channel once, every output
    // channel consumes nnz broadcasts per input channel, then drains N rows.
    let preload = blocks * sets * s.in_c * n;
    let broadcast = blocks * s.in_c * s.out_c * nnz;
    let drain = blocks * s.out_c * n;

    let outputs = s.out_h * s.out_w * s.out_c;
    let active = outputs * s.in_c * nnz;
    let input_reads = input_span(s.out_h, n, s.stride, s.filter_h, s.in_h)
        * input_span(s.out_w, n, s.stride, s.filter_w, s.in_w)
        * sets
        * s.in_c;
    let accesses = AccessCounts {
        mac_ops: active,
        regfile: 2 * active,
        inter_pe: outputs * s.in_c * nnz.saturating_sub(1),
        global_buffer: input_reads + blocks * s.in_c * s.out_c * nnz + outputs,
        dram_bytes: 0,
    };
    OsLayerCost {
        compute_cycles: preload + broadcast + drain,
        preload_cycles: preload,
        drain_cycles: drain,
        accesses,
        active_macs: active,
    }
}
