//! DRAM transfer timing, tile working sets and the tiling search.
//!
//! A layer is split along the six convolution loops (output rows, output
//! columns, output channels, input channels, filter rows, filter columns) and
//! the resulting tiles are processed in loop order. Tile i's DRAM transfer
//! overlaps tile i-1's compute (double buffering), so only half the global
//! buffer is available to a tile.

mod search;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hwconfig::HardwareConfig;
use crate::workload::{layer_footprint_bytes, LayerKind, LayerSpec};

pub use search::{
    candidate_count, candidate_sizes, evaluate_tiling, tile_schedule, tiling_search, TileSchedule,
    TilingResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LoopDim {
    Oh,
    Ow,
    Oc,
    Ic,
    Fh,
    Fw,
}

impl LoopDim {
    pub const ALL: [LoopDim; 6] = [
        LoopDim::Oh,
        LoopDim::Ow,
        LoopDim::Oc,
        LoopDim::Ic,
        LoopDim::Fh,
        LoopDim::Fw,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            LoopDim::Oh => "oh",
            LoopDim::Ow => "ow",
            LoopDim::Oc => "oc",
            LoopDim::Ic => "ic",
            LoopDim::Fh => "fh",
            LoopDim::Fw => "fw",
        }
    }
}

use LoopDim::{Fh, Fw, Ic, Oc, Oh, Ow};

/// Loop orders considered by the search, outermost first. Filter loops are
/// always innermost; each of the other four loops is tried outermost with two
/// arrangements of the remaining three.
pub const LOOP_ORDERS: [[LoopDim; 6]; 8] = [
    [Oc, Oh, Ow, Ic, Fh, Fw],
    [Oc, Ic, Oh, Ow, Fh, Fw],
    [Ic, Oh, Ow, Oc, Fh, Fw],
    [Ic, Oc, Oh, Ow, Fh, Fw],
    [Oh, Ow, Oc, Ic, Fh, Fw],
    [Oh, Ow, Ic, Oc, Fh, Fw],
    [Ow, Oh, Oc, Ic, Fh, Fw],
    [Ow, Oh, Ic, Oc, Fh, Fw],
];

/// Tile sizes for the six loops and the order the tiles are visited in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TileConfig {
    pub t_oh: u64,
    pub t_ow: u64,
    pub t_oc: u64,
    pub t_ic: u64,
    pub t_fh: u64,
    pub t_fw: u64,
    /// Outermost loop first.
    pub loop_order: [LoopDim; 6],
}

impl TileConfig {
    pub fn from_sizes(sizes: [u64; 6], loop_order: [LoopDim; 6]) -> Self {
        TileConfig {
            t_oh: sizes[0],
            t_ow: sizes[1],
            t_oc: sizes[2],
            t_ic: sizes[3],
            t_fh: sizes[4],
            t_fw: sizes[5],
            loop_order,
        }
    }

    /// One tile covering the whole layer.
    pub fn identity(layer: &LayerSpec) -> Self {
        Self::from_sizes(loop_extents(layer), LOOP_ORDERS[0])
    }

    /// Tile sizes indexed by [`LoopDim::index`].
    pub fn sizes(&self) -> [u64; 6] {
        [self.t_oh, self.t_ow, self.t_oc, self.t_ic, self.t_fh, self.t_fw]
    }

    pub fn size(&self, dim: LoopDim) -> u64 {
        self.sizes()[dim.index()]
    }

    /// Number of tiles along each loop.
    pub fn counts(&self, layer: &LayerSpec) -> [u64; 6] {
        let ext = loop_extents(layer);
        let t = self.sizes();
        std::array::from_fn(|i| ext[i].div_ceil(t[i]))
    }

    /// Tiles per convolution group.
    pub fn tile_count(&self, layer: &LayerSpec) -> u64 {
        self.counts(layer).iter().product()
    }

    pub fn check(&self, layer: &LayerSpec) -> Result<()> {
        let ext = loop_extents(layer);
        for (dim, (&t, &e)) in LoopDim::ALL.iter().zip(self.sizes().iter().zip(ext.iter())) {
            if t == 0 || t > e {
                return Err(Error::InvalidLayer {
                    layer: layer.name.clone(),
                    reason: format!("tile size {t} for loop {} outside 1..={e}", dim.label()),
                });
            }
        }
        let mut seen = [false; 6];
        for d in self.loop_order {
            seen[d.index()] = true;
        }
        if seen.contains(&false) {
            return Err(Error::InvalidLayer {
                layer: layer.name.clone(),
                reason: "loop order is not a permutation of the six loops".into(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for TileConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "oh{} ow{} oc{} ic{} fh{} fw{} [",
            self.t_oh, self.t_ow, self.t_oc, self.t_ic, self.t_fh, self.t_fw
        )?;
        for (i, d) in self.loop_order.iter().enumerate() {
            if i > 0 {
                f.write_str(">")?;
            }
            f.write_str(d.label())?;
        }
        f.write_str("]")
    }
}

/// Full extent of each loop for one convolution group. A depthwise layer's
/// channels live on the output-channel loop; its input-channel loop is 1.
pub fn loop_extents(layer: &LayerSpec) -> [u64; 6] {
    [
        layer.out_h(),
        layer.out_w(),
        layer.out_c_per_group(),
        layer.in_c_per_group(),
        layer.filter_h,
        layer.filter_w,
    ]
}

/// Input rows read by each tile along one spatial axis. Spans are contiguous
/// and together cover the whole input, so strided layers whose windows skip
/// pixels still move every input element once.
pub(crate) fn input_spans(out: u64, tile: u64, stride: u64, filter: u64, pad: u64, input: u64) -> Vec<u64> {
    let n = out.div_ceil(tile);
    (0..n)
        .map(|i| {
            let a = i * tile;
            let b = ((i + 1) * tile).min(out);
            let start = if i == 0 {
                0
            } else {
                (a * stride).saturating_sub(pad).min(input)
            };
            let end = if i + 1 == n {
                input
            } else {
                ((b - 1) * stride + filter)
                    .max(b * stride)
                    .saturating_sub(pad)
                    .min(input)
            };
            end.saturating_sub(start)
        })
        .collect()
}

/// Bytes one tile occupies in the buffer: the largest input tile (halo
/// included) plus the weight and output tiles.
pub fn working_set_bytes(layer: &LayerSpec, tile: &TileConfig, bytes_per_element: u64) -> u64 {
    let ext = loop_extents(layer);
    let rows = input_spans(ext[0], tile.t_oh, layer.stride, tile.t_fh, layer.pad_h, layer.in_h);
    let cols = input_spans(ext[1], tile.t_ow, layer.stride, tile.t_fw, layer.pad_w, layer.in_w);
    let max_rows = rows.into_iter().max().unwrap_or(0);
    let max_cols = cols.into_iter().max().unwrap_or(0);
    let in_ch = if layer.kind == LayerKind::DepthwiseConv {
        tile.t_oc
    } else {
        tile.t_ic
    };
    let input = max_rows * max_cols * in_ch;
    let weights = if layer.kind.is_compute() {
        tile.t_fh * tile.t_fw * tile.t_ic * tile.t_oc
    } else {
        0
    };
    let output = tile.t_oh * tile.t_ow * tile.t_oc;
    (input + weights + output) * bytes_per_element
}

/// Two-stage pipeline time: tile i's transfer runs while tile i-1 computes.
/// Transfer entries already include the DRAM latency of their burst.
pub fn overlap_layer_time(compute: &[u64], transfer: &[u64]) -> Result<u64> {
    if compute.len() != transfer.len() {
        return Err(Error::LengthMismatch {
            compute: compute.len(),
            transfer: transfer.len(),
        });
    }
    let n = compute.len();
    if n == 0 {
        return Err(Error::EmptySchedule);
    }
    let overlapped: u64 = (1..n).map(|i| compute[i - 1].max(transfer[i])).sum();
    Ok(transfer[0] + overlapped + compute[n - 1])
}

/// Uniform-tile transfer summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransferPlan {
    pub tile_count: u64,
    pub bytes_per_tile: u64,
    pub transfer_cycles_per_tile: u64,
}

impl TransferPlan {
    pub fn new(tile_count: u64, bytes_per_tile: u64, cfg: &HardwareConfig) -> Self {
        TransferPlan {
            tile_count,
            bytes_per_tile,
            transfer_cycles_per_tile: cfg.transfer_cycles(bytes_per_tile),
        }
    }

    /// Layer time when every tile computes for `compute_per_tile` cycles.
    pub fn total_layer_cycles(&self, compute_per_tile: u64) -> u64 {
        if self.tile_count == 0 {
            return 0;
        }
        let t = self.transfer_cycles_per_tile;
        t + (self.tile_count - 1) * compute_per_tile.max(t) + compute_per_tile
    }
}

/// Total DRAM traffic of a tiling: fetched inputs and weights, partial sums
/// read back, and outputs written. Operands shared by consecutive tiles are
/// not fetched again. Pool and element-wise layers move their footprint once.
pub fn dram_bytes(layer: &LayerSpec, tile: &TileConfig, bytes_per_element: u64) -> u64 {
    if !layer.kind.is_compute() {
        return layer_footprint_bytes(layer, bytes_per_element).total();
    }
    search::walk_dram_bytes(layer, tile, bytes_per_element) * layer.groups
}
