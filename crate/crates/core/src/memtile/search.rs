//! Tile walking and the bounded exhaustive tiling search.

use std::cmp::{Ordering, Reverse};

use super::{input_spans, loop_extents, working_set_bytes, TileConfig, LOOP_ORDERS};
use crate::dataflow::{shape_cost, AccessCounts, ComputeCost, ConvShape, Dataflow};
use crate::error::{Error, Result};
use crate::hwconfig::{default_config, HardwareConfig};
use crate::workload::{layer_footprint_bytes, LayerKind, LayerSpec};

const OH: u8 = 1 << 0;
const OW: u8 = 1 << 1;
const OC: u8 = 1 << 2;
const IC: u8 = 1 << 3;
const FH: u8 = 1 << 4;
const FW: u8 = 1 << 5;
const WEIGHT_DEPS: u8 = OC | IC | FH | FW;
const OUTPUT_DEPS: u8 = OH | OW | OC;

/// Outcome of costing one tiling of a layer, all groups included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TilingResult {
    pub tile: TileConfig,
    /// Layer time with transfers overlapped against compute.
    pub total_cycles: u64,
    /// Sum of per-tile compute cycles.
    pub compute_cycles: u64,
    pub tile_count: u64,
    pub dram_bytes: u64,
    pub active_macs: u64,
    /// Compute-side accesses summed over tiles, plus the DRAM traffic.
    pub accesses: AccessCounts,
}

impl TilingResult {
    /// Transfer cycles not hidden behind compute.
    pub fn exposed_transfer_cycles(&self) -> u64 {
        self.total_cycles - self.compute_cycles
    }
}

/// Explicit per-tile compute and transfer cycles, in visiting order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TileSchedule {
    pub compute: Vec<u64>,
    pub transfer: Vec<u64>,
}

/// Candidate sizes per loop: a ladder of powers of two times N/4 clipped to
/// the extent, plus the extent itself; filter loops are either whole or 1.
pub fn candidate_sizes(layer: &LayerSpec, cfg: &HardwareConfig) -> [Vec<u64>; 6] {
    let ext = loop_extents(layer);
    let ladder = |extent: u64| {
        let mut v = Vec::new();
        let mut s = (cfg.pe_dim / 4).max(1);
        while s < extent {
            v.push(s);
            s *= 2;
        }
        v.push(extent);
        v
    };
    let filter = |extent: u64| {
        if extent == 1 {
            vec![1]
        } else {
            vec![1, extent]
        }
    };
    [
        ladder(ext[0]),
        ladder(ext[1]),
        ladder(ext[2]),
        ladder(ext[3]),
        filter(ext[4]),
        filter(ext[5]),
    ]
}

fn feasible_combos(layer: &LayerSpec, cfg: &HardwareConfig) -> Vec<[u64; 6]> {
    let c = candidate_sizes(layer, cfg);
    let budget = cfg.tile_budget_bytes();
    let mut out = Vec::new();
    for &a in &c[0] {
        for &b in &c[1] {
            for &oc in &c[2] {
                for &ic in &c[3] {
                    for &fh in &c[4] {
                        for &fw in &c[5] {
                            let sizes = [a, b, oc, ic, fh, fw];
                            let tile = TileConfig::from_sizes(sizes, LOOP_ORDERS[0]);
                            if working_set_bytes(layer, &tile, cfg.bytes_per_element) <= budget {
                                out.push(sizes);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Number of feasible (tile sizes, loop order) configurations the search
/// chooses among.
pub fn candidate_count(layer: &LayerSpec, cfg: &HardwareConfig) -> usize {
    if !layer.kind.is_compute() {
        return 0;
    }
    feasible_combos(layer, cfg).len() * LOOP_ORDERS.len()
}

/// Per-tile geometry of one tiling.
struct Geometry {
    ext: [u64; 6],
    tile: [u64; 6],
    counts: [u64; 6],
    rows: Vec<u64>,
    cols: Vec<u64>,
    input_deps: u8,
    depthwise: bool,
    bytes_per_element: u64,
}

impl Geometry {
    fn new(layer: &LayerSpec, tile: [u64; 6], bytes_per_element: u64) -> Self {
        let ext = loop_extents(layer);
        let depthwise = layer.kind == LayerKind::DepthwiseConv;
        Geometry {
            ext,
            tile,
            counts: std::array::from_fn(|i| ext[i].div_ceil(tile[i])),
            rows: input_spans(ext[0], tile[0], layer.stride, tile[4], layer.pad_h, layer.in_h),
            cols: input_spans(ext[1], tile[1], layer.stride, tile[5], layer.pad_w, layer.in_w),
            input_deps: OH | OW | FH | FW | if depthwise { OC } else { IC },
            depthwise,
            bytes_per_element,
        }
    }

    fn tile_count(&self) -> u64 {
        self.counts.iter().product()
    }

    fn extent_at(&self, d: usize, idx: u64) -> u64 {
        if idx + 1 == self.counts[d] {
            self.ext[d] - idx * self.tile[d]
        } else {
            self.tile[d]
        }
    }

    /// Loops whose last tile is shorter than the others.
    fn has_edge(&self, d: usize) -> bool {
        !self.ext[d].is_multiple_of(self.tile[d])
    }

    fn class_of(&self, idx: &[u64; 6]) -> usize {
        (0..6)
            .filter(|&d| self.has_edge(d) && idx[d] + 1 == self.counts[d])
            .fold(0, |acc, d| acc | 1 << d)
    }

    fn input_bytes(&self, idx: &[u64; 6]) -> u64 {
        let ch = if self.depthwise {
            self.extent_at(2, idx[2])
        } else {
            self.extent_at(3, idx[3])
        };
        self.rows[idx[0] as usize] * self.cols[idx[1] as usize] * ch * self.bytes_per_element
    }

    fn weight_bytes(&self, idx: &[u64; 6]) -> u64 {
        [2, 3, 4, 5]
            .iter()
            .map(|&d| self.extent_at(d, idx[d]))
            .product::<u64>()
            * self.bytes_per_element
    }

    fn output_bytes(&self, idx: &[u64; 6]) -> u64 {
        [0, 1, 2]
            .iter()
            .map(|&d| self.extent_at(d, idx[d]))
            .product::<u64>()
            * self.bytes_per_element
    }
}

/// Compute cost of every tile class (bit d set: edge tile along loop d) and
/// the total over all tiles of one group.
struct ClassCosts {
    cycles: [u64; 64],
    total: ComputeCost,
}

fn class_costs(layer: &LayerSpec, geo: &Geometry, cfg: &HardwareConfig, df: Dataflow) -> ClassCosts {
    let mut cycles = [0u64; 64];
    let mut total = ComputeCost::default();
    let edge_mask = (0..6)
        .filter(|&d| geo.has_edge(d))
        .fold(0usize, |acc, d| acc | 1 << d);
    for (class, slot) in cycles.iter_mut().enumerate() {
        if class & !edge_mask != 0 {
            continue;
        }
        let mut dims = [0u64; 6];
        let mut count = 1u64;
        for (d, dim) in dims.iter_mut().enumerate() {
            if class & (1 << d) != 0 {
                *dim = geo.ext[d] % geo.tile[d];
            } else {
                *dim = geo.tile[d].min(geo.ext[d]);
                count *= if geo.has_edge(d) {
                    geo.counts[d] - 1
                } else {
                    geo.counts[d]
                };
            }
        }
        if count == 0 {
            continue;
        }
        let shape = ConvShape {
            kind: layer.kind,
            out_h: dims[0],
            out_w: dims[1],
            out_c: dims[2],
            in_c: dims[3],
            filter_h: dims[4],
            filter_w: dims[5],
            stride: layer.stride,
            sparsity: layer.sparsity,
            in_h: (layer.stride * (dims[0] - 1) + dims[4]).min(layer.in_h),
            in_w: (layer.stride * (dims[1] - 1) + dims[5]).min(layer.in_w),
        };
        let cost = shape_cost(df, &shape, cfg);
        *slot = cost.compute_cycles;
        let all = cost.times(count);
        total.compute_cycles += all.compute_cycles;
        total.active_macs += all.active_macs;
        total.accesses += all.accesses;
    }
    ClassCosts { cycles, total }
}

/// Result of walking one group's tiles.
struct Walk {
    first_transfer: u64,
    overlapped: u64,
    last_compute: u64,
    bytes: u64,
}

impl Walk {
    /// Pipeline time when the group's tile sequence is repeated `groups` times.
    fn total(&self, groups: u64) -> u64 {
        self.first_transfer
            + groups * self.overlapped
            + (groups - 1) * self.last_compute.max(self.first_transfer)
            + self.last_compute
    }
}

/// Visits the tiles in `order`, tracking which operands must be fetched and
/// accumulating the double-buffered pipeline time. Returns `None` once the
/// running time exceeds `bound`.
fn walk(
    geo: &Geometry,
    class_cycles: &[u64; 64],
    order: &[crate::memtile::LoopDim; 6],
    cfg: &HardwareConfig,
    groups: u64,
    bound: Option<u64>,
    mut record: Option<&mut TileSchedule>,
) -> Option<Walk> {
    let transfer = |bytes: u64| if bytes == 0 { 0 } else { cfg.transfer_cycles(bytes) };
    let pos: [usize; 6] = std::array::from_fn(|p| order[p].index());

    let mut idx = [0u64; 6];
    let mut pending = geo.input_bytes(&idx) + geo.weight_bytes(&idx);
    let mut cur_compute = class_cycles[geo.class_of(&idx)];
    let mut prev_compute = 0;
    let mut first = true;
    let mut w = Walk {
        first_transfer: 0,
        overlapped: 0,
        last_compute: 0,
        bytes: 0,
    };

    let mut finalize = |bytes: u64, compute: u64, prev_compute: u64, first: bool, w: &mut Walk| {
        let t = transfer(bytes);
        w.bytes += bytes;
        if first {
            w.first_transfer = t;
        } else {
            w.overlapped += prev_compute.max(t);
        }
        if let Some(rec) = record.as_deref_mut() {
            rec.compute.push(compute);
            rec.transfer.push(t);
        }
    };

    loop {
        // Advance the odometer, innermost loop fastest.
        let mut changed = 0u8;
        let mut p = 6;
        let done = loop {
            if p == 0 {
                break true;
            }
            p -= 1;
            let d = pos[p];
            if geo.counts[d] > 1 {
                changed |= 1 << d;
            }
            idx[d] += 1;
            if idx[d] < geo.counts[d] {
                break false;
            }
            idx[d] = 0;
        };
        if done {
            break;
        }
        if changed & OUTPUT_DEPS != 0 {
            let mut prev = idx;
            // Reconstruct the previous tile's output extents: only loops in
            // `changed` differ, and each of them stepped by one or wrapped.
            for d in 0..6 {
                if changed & (1 << d) != 0 {
                    prev[d] = if idx[d] == 0 { geo.counts[d] - 1 } else { idx[d] - 1 };
                }
            }
            pending += geo.output_bytes(&prev);
        }
        finalize(pending, cur_compute, prev_compute, first, &mut w);
        first = false;
        if let Some(b) = bound {
            if w.first_transfer + groups * w.overlapped > b {
                return None;
            }
        }

        let reduction_started = idx[3] != 0 || idx[4] != 0 || idx[5] != 0;
        pending = 0;
        if changed & geo.input_deps != 0 {
            pending += geo.input_bytes(&idx);
        }
        if changed & WEIGHT_DEPS != 0 {
            pending += geo.weight_bytes(&idx);
        }
        // An output tile is first visited with every reduction index at zero;
        // any later visit resumes from partial sums spilled to DRAM.
        if changed & OUTPUT_DEPS != 0 && reduction_started {
            pending += geo.output_bytes(&idx);
        }
        prev_compute = cur_compute;
        cur_compute = class_cycles[geo.class_of(&idx)];
    }

    // The last tile writes its output back; idx has wrapped to all zeros.
    let last: [u64; 6] = std::array::from_fn(|d| geo.counts[d] - 1);
    pending += geo.output_bytes(&last);
    finalize(pending, cur_compute, prev_compute, first, &mut w);
    w.last_compute = cur_compute;
    Some(w)
}

fn check_layer(layer: &LayerSpec, df: Dataflow) -> Result<()> {
    df.check(layer)
}

fn result_from(
    layer: &LayerSpec,
    tile: TileConfig,
    geo: &Geometry,
    costs: &ClassCosts,
    w: &Walk,
) -> TilingResult {
    let g = layer.groups;
    let dram = w.bytes * g;
    let mut accesses = costs.total.accesses.times(g);
    accesses.dram_bytes = dram;
    TilingResult {
        tile,
        total_cycles: w.total(g),
        compute_cycles: costs.total.compute_cycles * g,
        tile_count: geo.tile_count() * g,
        dram_bytes: dram,
        active_macs: costs.total.active_macs * g,
        accesses,
    }
}

fn infeasible(layer: &LayerSpec, tile: &TileConfig, cfg: &HardwareConfig) -> Error {
    Error::Infeasible {
        layer: layer.name.clone(),
        reason: format!(
            "tile needs {} bytes but only {} bytes (half the global buffer) are available",
            working_set_bytes(layer, tile, cfg.bytes_per_element),
            cfg.tile_budget_bytes()
        ),
    }
}

/// Costs one specific tiling.
pub fn evaluate_tiling(
    layer: &LayerSpec,
    tile: &TileConfig,
    cfg: &HardwareConfig,
    df: Dataflow,
) -> Result<TilingResult> {
    check_layer(layer, df)?;
    tile.check(layer)?;
    if working_set_bytes(layer, tile, cfg.bytes_per_element) > cfg.tile_budget_bytes() {
        return Err(infeasible(layer, tile, cfg));
    }
    let geo = Geometry::new(layer, tile.sizes(), cfg.bytes_per_element);
    let costs = class_costs(layer, &geo, cfg, df);
    let w = walk(&geo, &costs.cycles, &tile.loop_order, cfg, layer.groups, None, None)
        .expect("unbounded walk completes");
    Ok(result_from(layer, *tile, &geo, &costs, &w))
}

/// Explicit per-tile cycle lists of a tiling, all groups included.
pub fn tile_schedule(
    layer: &LayerSpec,
    tile: &TileConfig,
    cfg: &HardwareConfig,
    df: Dataflow,
) -> Result<TileSchedule> {
    check_layer(layer, df)?;
    tile.check(layer)?;
    let geo = Geometry::new(layer, tile.sizes(), cfg.bytes_per_element);
    let costs = class_costs(layer, &geo, cfg, df);
    let mut one = TileSchedule::default();
    walk(&geo, &costs.cycles, &tile.loop_order, cfg, 1, None, Some(&mut one));
    let mut all = TileSchedule::default();
    for _ in 0..layer.groups {
        all.compute.extend_from_slice(&one.compute);
        all.transfer.extend_from_slice(&one.transfer);
    }
    Ok(all)
}

pub(crate) fn walk_dram_bytes(layer: &LayerSpec, tile: &TileConfig, bytes_per_element: u64) -> u64 {
    let geo = Geometry::new(layer, tile.sizes(), bytes_per_element);
    let cfg = default_config();
    walk(&geo, &[0; 64], &tile.loop_order, &cfg, 1, None, None)
        .expect("unbounded walk completes")
        .bytes
}

/// Preference among equally fast tilings: larger tiles, then earlier order.
fn tie_key(sizes: &[u64; 6], order_index: usize) -> (Reverse<u64>, Reverse<[u64; 6]>, usize) {
    (Reverse(sizes.iter().product()), Reverse(*sizes), order_index)
}

/// Finds the fastest tiling among the candidate sizes and loop orders.
///
/// A layer whose whole working set fits in half the buffer is not tiled.
/// Otherwise candidates are visited in order of an order-independent lower bound on
/// their time, and the search stops once that bound exceeds the best time
/// found, so the result equals exhaustive enumeration.
pub fn tiling_search(layer: &LayerSpec, cfg: &HardwareConfig, df: Dataflow) -> Result<TilingResult> {
    check_layer(layer, df)?;
    let identity = TileConfig::identity(layer);
    if working_set_bytes(layer, &identity, cfg.bytes_per_element) <= cfg.tile_budget_bytes() {
        return evaluate_tiling(layer, &identity, cfg, df);
    }
    let combos = feasible_combos(layer, cfg);
    if combos.is_empty() {
        let c = candidate_sizes(layer, cfg);
        let smallest = TileConfig::from_sizes(std::array::from_fn(|i| c[i][0]), LOOP_ORDERS[0]);
        return Err(infeasible(layer, &smallest, cfg));
    }

    let g = layer.groups;
    let footprint = layer_footprint_bytes(layer, cfg.bytes_per_element).total();
    let mut ranked: Vec<(u64, [u64; 6], Geometry, ClassCosts)> = combos
        .into_iter()
        .map(|sizes| {
            let geo = Geometry::new(layer, sizes, cfg.bytes_per_element);
            let costs = class_costs(layer, &geo, cfg, df);
            let transfer_floor = g * geo.tile_count() * cfg.dram_latency_cycles + cfg.stream_cycles(footprint);
            let lb = (costs.total.compute_cycles * g).max(transfer_floor);
            (lb, sizes, geo, costs)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| tie_key(&a.1, 0).cmp(&tie_key(&b.1, 0))));

    let mut best: Option<(TilingResult, usize)> = None;
    for (lb, sizes, geo, costs) in &ranked {
        if let Some((b, _)) = &best {
            if *lb > b.total_cycles {
                break;
            }
        }
        let mut seen: Vec<Vec<usize>> = Vec::new();
        for (oi, order) in LOOP_ORDERS.iter().enumerate() {
            // Orders that agree on the loops with more than one tile visit
            // the same sequence.
            let proj: Vec<usize> = order
                .iter()
                .map(|d| d.index())
                .filter(|&d| geo.counts[d] > 1)
                .collect();
            if seen.contains(&proj) {
                continue;
            }
            seen.push(proj);
            let bound = best.as_ref().map(|(b, _)| b.total_cycles);
            let Some(w) = walk(geo, &costs.cycles, order, cfg, g, bound, None) else {
                continue;
            };
            let res = result_from(layer, TileConfig::from_sizes(*sizes, *order), geo, costs, &w);
            let better = match &best {
                None => true,
                Some((b, boi)) => match res.total_cycles.cmp(&b.total_cycles) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => tie_key(sizes, oi) < tie_key(&b.tile.sizes(), *boi),
                },
            };
            if better {
                best = Some((res, oi));
            }
        }
    }
    Ok(best.expect("at least one feasible candidate").0)
}
