//! Reference implementations and generators shared by the integration tests.
//!
//! The oracles here are written independently of the library internals: the
//! MAC counter slides windows over the padded input, and the tiling oracle
//! enumerates every candidate with its own nested loops and operand tracking.

#![allow(dead_code)]

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use squeezesim::dataflow::{shape_cost, ConvShape, Dataflow};
use squeezesim::hwconfig::{default_config, HardwareConfig};
use squeezesim::memtile::{LoopDim, TileConfig};
use squeezesim::workload::{LayerKind, LayerSpec, NetworkSpec};

/// Counts multiply-accumulates by walking every output position, output
/// channel, input channel and filter tap.
pub fn brute_force_macs(l: &LayerSpec) -> u64 {
    if !l.kind.is_compute() {
        return 0;
    }
    let groups = l.groups.max(1);
    let mut count = 0u64;
    let mut y = 0;
    while y + l.filter_h <= l.in_h + 2 * l.pad_h {
        let mut x = 0;
        while x + l.filter_w <= l.in_w + 2 * l.pad_w {
            for oc in 0..l.out_c {
                for ic in 0..l.in_c {
                    let connected = match l.kind {
                        LayerKind::DepthwiseConv => ic == oc,
                        _ => ic / (l.in_c / groups) == oc / (l.out_c / groups),
                    };
                    if !connected {
                        continue;
                    }
                    for _fy in 0..l.filter_h {
                        for _fx in 0..l.filter_w {
                            count += 1;
                        }
                    }
                }
            }
            x += l.stride;
        }
        y += l.stride;
    }
    count
}

/// Random layer with every dimension at most `max_dim`.
pub fn random_layer(rng: &mut ChaCha8Rng, name: &str, max_dim: u64) -> LayerSpec {
    let kind = match rng.gen_range(0..10) {
        0..=5 => LayerKind::Conv,
        6..=7 => LayerKind::DepthwiseConv,
        _ => LayerKind::FullyConnected,
    };
    let sparsity = [0.0, 0.25, 0.4, 0.5, 0.9][rng.gen_range(0..5)];
    match kind {
        LayerKind::FullyConnected => {
            let i = rng.gen_range(1..=max_dim);
            let o = rng.gen_range(1..=max_dim);
            LayerSpec::fully_connected(name, i, o).with_sparsity(sparsity)
        }
        _ => {
            let fh = rng.gen_range(1..=3.min(max_dim));
            let fw = rng.gen_range(1..=3.min(max_dim));
            let stride = rng.gen_range(1..=2);
            let pad_h = rng.gen_range(0..=fh / 2);
            let pad_w = rng.gen_range(0..=fw / 2);
            let h = rng.gen_range(fh.max(1)..=max_dim);
            let w = rng.gen_range(fw.max(1)..=max_dim);
            let c = rng.gen_range(1..=max_dim);
            if kind == LayerKind::DepthwiseConv {
                LayerSpec::depthwise(name, [h, w, c], [fh, fw], stride, 0)
                    .with_padding(pad_h, pad_w)
                    .with_sparsity(sparsity)
            } else {
                let groups = if c % 2 == 0 && rng.gen_bool(0.2) { 2 } else { 1 };
                let mut o = rng.gen_range(1..=max_dim);
                if o % groups != 0 {
                    o += 1;
                }
                LayerSpec::conv(name, [h, w, c], o, [fh, fw], stride, 0)
                    .with_padding(pad_h, pad_w)
                    .with_groups(groups)
                    .with_sparsity(sparsity)
            }
        }
    }
}

/// Random chain of up to `max_layers` layers whose shapes line up, with
/// spatial and channel sizes at most `max_dim`.
pub fn random_network(rng: &mut ChaCha8Rng, max_layers: usize, max_dim: u64) -> NetworkSpec {
    let n = rng.gen_range(1..=max_layers);
    let mut layers: Vec<LayerSpec> = Vec::with_capacity(n);
    let mut shape = [
        rng.gen_range(4..=max_dim),
        rng.gen_range(4..=max_dim),
        rng.gen_range(1..=max_dim.min(8)),
    ];
    let mut flat = false;
    for i in 0..n {
        let name = format!("l{i}");
        let [h, w, c] = shape;
        let layer = if flat {
            LayerSpec::fully_connected(&name, c, rng.gen_range(1..=max_dim))
        } else {
            match rng.gen_range(0..10) {
                0..=4 => {
                    let f = if h >= 3 && w >= 3 && rng.gen_bool(0.6) { 3 } else { 1 };
                    let stride = if h >= 8 && w >= 8 && rng.gen_bool(0.3) { 2 } else { 1 };
                    LayerSpec::conv(&name, [h, w, c], rng.gen_range(1..=max_dim), [f, f], stride, f / 2)
                }
                5..=6 => {
                    let f = if h >= 3 && w >= 3 { 3 } else { 1 };
                    LayerSpec::depthwise(&name, [h, w, c], [f, f], 1, f / 2)
                }
                7 if h >= 2 && w >= 2 => LayerSpec::pool(&name, [h, w, c], [2, 2], 2),
                8 => LayerSpec::elementwise(&name, [h, w, c]),
                _ => {
                    let feats = h * w * c;
                    flat = true;
                    LayerSpec::fully_connected(&name, feats, rng.gen_range(1..=max_dim))
                }
            }
        };
        let layer = if i == 0 && layer.kind == LayerKind::Conv {
            layer.first()
        } else {
            layer
        };
        let out = layer.out_shape();
        shape = if layer.kind == LayerKind::FullyConnected {
            [1, 1, out[2]]
        } else {
            out
        };
        layers.push(layer);
    }
    NetworkSpec::new("random", layers).expect("generated network is consistent")
}

pub fn config_with(f: impl FnOnce(&mut HardwareConfig)) -> HardwareConfig {
    let mut cfg = default_config();
    f(&mut cfg);
    cfg
}

// ---------------------------------------------------------------------------
// Exhaustive tiling oracle
// ---------------------------------------------------------------------------

use LoopDim::{Fh, Fw, Ic, Oc, Oh, Ow};

/// The search's loop orders, restated.
pub const ORDERS: [[LoopDim; 6]; 8] = [
    [Oc, Oh, Ow, Ic, Fh, Fw],
    [Oc, Ic, Oh, Ow, Fh, Fw],
    [Ic, Oh, Ow, Oc, Fh, Fw],
    [Ic, Oc, Oh, Ow, Fh, Fw],
    [Oh, Ow, Oc, Ic, Fh, Fw],
    [Oh, Ow, Ic, Oc, Fh, Fw],
    [Ow, Oh, Oc, Ic, Fh, Fw],
    [Ow, Oh, Ic, Oc, Fh, Fw],
];

fn extents(l: &LayerSpec) -> [u64; 6] {
    let dw = l.kind == LayerKind::DepthwiseConv;
    let g = l.groups;
    [
        l.out_h(),
        l.out_w(),
        if dw { l.in_c } else { l.out_c / g },
        if dw { 1 } else { l.in_c / g },
        l.filter_h,
        l.filter_w,
    ]
}

fn sizes_for(ext: u64, n: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (0..)
        .map(|k| (n / 4).max(1) << k)
        .take_while(|&s| s < ext)
        .collect();
    v.push(ext);
    v
}

/// Input rows `[start, end)` read by the tile covering outputs `[a, b)`: the
/// receptive field, stretched so consecutive tiles abut, with the first tile
/// starting at row 0 and the last ending at the input edge.
fn input_range(a: u64, b: u64, last: bool, stride: u64, f: u64, pad: u64, input: u64) -> u64 {
    let start = if a == 0 { 0 } else { (a * stride).saturating_sub(pad).min(input) };
    let end = if last {
        input
    } else {
        let receptive = (b - 1) * stride + f;
        let abut = b * stride;
        receptive.max(abut).saturating_sub(pad).min(input)
    };
    end.saturating_sub(start)
}

#[derive(Clone, Copy)]
struct TileBox {
    lo: [u64; 6],
    len: [u64; 6],
    last: [bool; 6],
}

fn boxes(ext: &[u64; 6], t: &[u64; 6], order: &[LoopDim; 6]) -> Vec<TileBox> {
    fn rec(depth: usize, ext: &[u64; 6], t: &[u64; 6], order: &[LoopDim; 6], cur: &mut TileBox, out: &mut Vec<TileBox>) {
        if depth == 6 {
            out.push(*cur);
            return;
        }
        let d = order[depth].index();
        let mut lo = 0;
        while lo < ext[d] {
            cur.lo[d] = lo;
            cur.len[d] = t[d].min(ext[d] - lo);
            cur.last[d] = lo + t[d] >= ext[d];
            rec(depth + 1, ext, t, order, cur, out);
            lo += t[d];
        }
    }
    let mut out = Vec::new();
    let mut cur = TileBox {
        lo: [0; 6],
        len: [0; 6],
        last: [false; 6],
    };
    rec(0, ext, t, order, &mut cur, &mut out);
    out
}

fn oracle_working_set(l: &LayerSpec, ext: &[u64; 6], t: &[u64; 6], b: u64) -> u64 {
    let dw = l.kind == LayerKind::DepthwiseConv;
    let mut max_rows = 0;
    let mut a = 0;
    while a < ext[0] {
        let end = (a + t[0]).min(ext[0]);
        max_rows = max_rows.max(input_range(a, end, end == ext[0], l.stride, t[4], l.pad_h, l.in_h));
        a += t[0];
    }
    let mut max_cols = 0;
    let mut a = 0;
    while a < ext[1] {
        let end = (a + t[1]).min(ext[1]);
        max_cols = max_cols.max(input_range(a, end, end == ext[1], l.stride, t[5], l.pad_w, l.in_w));
        a += t[1];
    }
    let input = max_rows * max_cols * if dw { t[2] } else { t[3] };
    let weights = t[4] * t[5] * t[3] * t[2];
    let output = t[0] * t[1] * t[2];
    (input + weights + output) * b
}

/// Per-tile compute and transfer cycles for one tiling, all groups included.
pub fn oracle_schedule(l: &LayerSpec, t: &[u64; 6], order: &[LoopDim; 6], cfg: &HardwareConfig, df: Dataflow) -> (Vec<u64>, Vec<u64>, u64) {
    let ext = extents(l);
    let dw = l.kind == LayerKind::DepthwiseConv;
    let b = cfg.bytes_per_element;
    let tiles = boxes(&ext, t, order);

    type Key = Vec<u64>;
    let in_key = |x: &TileBox| -> Key {
        vec![x.lo[0], x.lo[1], if dw { x.lo[2] } else { x.lo[3] }, x.lo[4], x.lo[5]]
    };
    let w_key = |x: &TileBox| -> Key { vec![x.lo[2], x.lo[3], x.lo[4], x.lo[5]] };
    let o_key = |x: &TileBox| -> Key { vec![x.lo[0], x.lo[1], x.lo[2]] };

    let in_bytes = |x: &TileBox| {
        let rows = input_range(x.lo[0], x.lo[0] + x.len[0], x.last[0], l.stride, t[4], l.pad_h, l.in_h);
        let cols = input_range(x.lo[1], x.lo[1] + x.len[1], x.last[1], l.stride, t[5], l.pad_w, l.in_w);
        rows * cols * if dw { x.len[2] } else { x.len[3] } * b
    };
    let w_bytes = |x: &TileBox| x.len[2] * x.len[3] * x.len[4] * x.len[5] * b;
    let o_bytes = |x: &TileBox| x.len[0] * x.len[1] * x.len[2] * b;

    let mut compute = Vec::new();
    let mut bytes = Vec::new();
    let mut visited: HashSet<Key> = HashSet::new();
    for (i, x) in tiles.iter().enumerate() {
        let prev = if i > 0 { Some(&tiles[i - 1]) } else { None };
        let next = tiles.get(i + 1);
        let mut moved = 0;
        if prev.is_none_or(|p| in_key(p) != in_key(x)) {
            moved += in_bytes(x);
        }
        if prev.is_none_or(|p| w_key(p) != w_key(x)) {
            moved += w_bytes(x);
        }
        let fresh_output = prev.is_none_or(|p| o_key(p) != o_key(x));
        if fresh_output && !visited.insert(o_key(x)) {
            moved += o_bytes(x);
        }
        if next.is_none_or(|n| o_key(n) != o_key(x)) {
            moved += o_bytes(x);
        }
        bytes.push(moved);

        let shape = ConvShape {
            kind: l.kind,
            out_h: x.len[0],
            out_w: x.len[1],
            out_c: x.len[2],
            in_c: x.len[3],
            filter_h: x.len[4],
            filter_w: x.len[5],
            stride: l.stride,
            sparsity: l.sparsity,
            in_h: (l.stride * (x.len[0] - 1) + x.len[4]).min(l.in_h),
            in_w: (l.stride * (x.len[1] - 1) + x.len[5]).min(l.in_w),
        };
        compute.push(shape_cost(df, &shape, cfg).compute_cycles);
    }
    let transfer: Vec<u64> = bytes
        .iter()
        .map(|&m| {
            if m == 0 {
                0
            } else {
                cfg.dram_latency_cycles + (m as f64 / cfg.dram_bytes_per_cycle).ceil() as u64
            }
        })
        .collect();
    let total_bytes: u64 = bytes.iter().sum();
    let g = l.groups as usize;
    (
        compute.repeat(g),
        transfer.repeat(g),
        total_bytes * l.groups,
    )
}

/// Double-buffered pipeline time, restated.
pub fn pipeline_time(c: &[u64], t: &[u64]) -> u64 {
    let mut total = t[0];
    for i in 1..c.len() {
        total += c[i - 1].max(t[i]);
    }
    total + c[c.len() - 1]
}

pub struct OracleResult {
    pub tile: TileConfig,
    pub cycles: u64,
    pub candidates: usize,
}

/// Exhaustive search: the unsplit layer if it fits in half the buffer,
/// otherwise the fastest feasible candidate, ties going to larger tiles and
/// then to the earlier loop order. Spaces larger than `limit` are only
/// counted: the result has `cycles == 0` and an identity tile.
pub fn exhaustive_tiling(l: &LayerSpec, cfg: &HardwareConfig, df: Dataflow, limit: usize) -> Option<OracleResult> {
    let ext = extents(l);
    let b = cfg.bytes_per_element;
    let budget = cfg.global_buffer_bytes / 2;
    let n = cfg.pe_dim;
    let filter_sizes = |e: u64| if e == 1 { vec![1] } else { vec![1, e] };
    let lists = [
        sizes_for(ext[0], n),
        sizes_for(ext[1], n),
        sizes_for(ext[2], n),
        sizes_for(ext[3], n),
        filter_sizes(ext[4]),
        filter_sizes(ext[5]),
    ];
    let mut all = Vec::new();
    for &a in &lists[0] {
        for &bb in &lists[1] {
            for &c in &lists[2] {
                for &d in &lists[3] {
                    for &e in &lists[4] {
                        for &f in &lists[5] {
                            let t = [a, bb, c, d, e, f];
                            if oracle_working_set(l, &ext, &t, b) <= budget {
                                for (oi, order) in ORDERS.iter().enumerate() {
                                    all.push((t, oi, *order));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let candidates = all.len();
    if candidates > limit {
        return Some(OracleResult {
            tile: TileConfig::from_sizes(ext, ORDERS[0]),
            cycles: 0,
            candidates,
        });
    }
    if oracle_working_set(l, &ext, &ext, b) <= budget {
        let (c, t, _) = oracle_schedule(l, &ext, &ORDERS[0], cfg, df);
        return Some(OracleResult {
            tile: TileConfig::from_sizes(ext, ORDERS[0]),
            cycles: pipeline_time(&c, &t),
            candidates,
        });
    }
    let mut best: Option<(u64, [u64; 6], usize)> = None;
    for (t, oi, order) in all {
        let (c, tr, _) = oracle_schedule(l, &t, &order, cfg, df);
        let cycles = pipeline_time(&c, &tr);
        let better = match best {
            None => true,
            Some((bc, bt, boi)) => {
                let vol = |s: &[u64; 6]| s.iter().product::<u64>();
                (cycles, std::cmp::Reverse(vol(&t)), std::cmp::Reverse(t), oi)
                    < (bc, std::cmp::Reverse(vol(&bt)), std::cmp::Reverse(bt), boi)
            }
        };
        if better {
            best = Some((cycles, t, oi));
        }
    }
    best.map(|(cycles, t, oi)| OracleResult {
        tile: TileConfig::from_sizes(t, ORDERS[oi]),
        cycles,
        candidates,
    })
}
