//! Library results checked against independent reference computations.

mod common;

use common::{brute_force_macs, config_with, exhaustive_tiling, oracle_schedule, pipeline_time, random_layer, ORDERS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use squeezesim::dataflow::{os_layer_cost, ws_layer_cost, ws_psum_traffic, Dataflow};
use squeezesim::hwconfig::default_config;
use squeezesim::memtile::{candidate_count, dram_bytes, evaluate_tiling, tile_schedule, tiling_search, TileConfig};
use squeezesim::workload::{bundled_network, bundled_names, layer_footprint_bytes, mac_count, LayerSpec};

#[test]
fn mac_count_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..1000 {
        let l = random_layer(&mut rng, &format!("r{i}"), 12);
        assert_eq!(mac_count(&l), brute_force_macs(&l), "{l:?}");
    }
}

#[test]
fn mac_count_worked_examples() {
    let conv = LayerSpec::conv("c", [8, 8, 3], 32, [3, 3], 1, 1);
    assert_eq!(brute_force_macs(&conv), 8 * 8 * 32 * 3 * 9);
    assert_eq!(mac_count(&conv), 55296);
    let dw = LayerSpec::depthwise("d", [4, 4, 2], [3, 3], 1, 1);
    assert_eq!(mac_count(&dw), 288);
    let pw = LayerSpec::conv("p", [4, 4, 6], 8, [1, 1], 1, 0);
    assert_eq!(mac_count(&pw), 768);
}

#[test]
fn bundled_mac_counts_match_brute_force() {
    for name in bundled_names() {
        let net = bundled_network(name).unwrap().unwrap();
        for l in &net.layers {
            if mac_count(l) < 200_000_000 {
                assert_eq!(mac_count(l), brute_force_macs(l), "{name}/{}", l.name);
            }
        }
    }
}

/// Output-stationary cost restated from the array mechanics: every N x N
/// output block of every channel set preloads N input rows per input channel,
/// broadcasts each nonzero weight once per (input, output) channel pair and
/// drains N rows per output channel.
fn os_reference(l: &LayerSpec, n: u64, g: u64) -> u64 {
    let taps = l.filter_h * l.filter_w;
    let nnz = ((taps as f64) * (1.0 - l.sparsity) - 1e-9).ceil().max(0.0) as u64;
    let mut blocks = 0;
    let mut y = 0;
    while y < l.out_h() {
        let mut x = 0;
        while x < l.out_w() {
            blocks += 1;
            x += n;
        }
        y += n;
    }
    let (ic, oc) = if l.kind == squeezesim::workload::LayerKind::DepthwiseConv {
        (1, 1)
    } else {
        (l.in_c, l.out_c)
    };
    let sets = oc.div_ceil(g);
    let per = blocks * (sets * ic * n + ic * oc * nnz + oc * n);
    if l.kind == squeezesim::workload::LayerKind::DepthwiseConv {
        per * l.in_c
    } else {
        per
    }
}

#[test]
fn os_compute_matches_reference() {
    let cfg = default_config();
    let l = LayerSpec::conv("c", [8, 8, 1], 1, [3, 3], 1, 1).with_sparsity(0.0);
    // One block: 32 preload cycles, 9 broadcasts, 32 drain cycles.
    assert_eq!(os_reference(&l, 32, 8), 32 + 9 + 32);
    assert_eq!(os_layer_cost(&l, &cfg).unwrap().compute_cycles, 73);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..300 {
        let l = random_layer(&mut rng, &format!("r{i}"), 40);
        if l.kind == squeezesim::workload::LayerKind::FullyConnected || l.groups > 1 {
            continue;
        }
        let got = os_layer_cost(&l, &cfg).unwrap().compute_cycles;
        assert_eq!(got, os_reference(&l, cfg.pe_dim, cfg.regfile_depth), "{l:?}");
    }
}

/// Weight-stationary cost restated: one pass per (input-channel block,
/// output-channel block, tap), each loading N weight rows, streaming every
/// output pixel and draining N rows.
fn ws_reference(l: &LayerSpec, n: u64) -> u64 {
    let dw = l.kind == squeezesim::workload::LayerKind::DepthwiseConv;
    let taps = l.filter_h * l.filter_w;
    let passes = if dw {
        l.in_c * taps
    } else {
        l.in_c.div_ceil(n) * l.out_c.div_ceil(n) * taps
    };
    passes * (2 * n + l.out_h() * l.out_w())
}

#[test]
fn ws_compute_matches_reference() {
    let cfg = default_config();
    let pw = LayerSpec::conv("p", [32, 32, 64], 64, [1, 1], 1, 0);
    assert_eq!(ws_reference(&pw, 32), 4 * (64 + 1024));
    assert_eq!(ws_layer_cost(&pw, &cfg).unwrap().compute_cycles, 4352);
    let one = LayerSpec::conv("o", [4, 4, 8], 8, [1, 1], 1, 0);
    assert_eq!(ws_layer_cost(&one, &cfg).unwrap().compute_cycles, 64 + 16);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for i in 0..300 {
        let l = random_layer(&mut rng, &format!("r{i}"), 80);
        if l.groups > 1 {
            continue;
        }
        let got = ws_layer_cost(&l, &cfg).unwrap().compute_cycles;
        assert_eq!(got, ws_reference(&l, cfg.pe_dim), "{l:?}");
    }
}

#[test]
fn psum_traffic_reference() {
    // Partial sums leave the array once per reduction pass except the last.
    let single = LayerSpec::conv("a", [8, 8, 16], 16, [1, 1], 1, 0);
    assert_eq!(ws_psum_traffic(&single, 32).total(), 0);
    let two_blocks = LayerSpec::conv("b", [2, 2, 64], 8, [1, 1], 1, 0);
    let t = ws_psum_traffic(&two_blocks, 32);
    assert_eq!((t.writes, t.reads), (32, 32));
    let taps = LayerSpec::conv("c", [3, 3, 8], 4, [3, 3], 1, 1);
    let t = ws_psum_traffic(&taps, 32);
    assert_eq!(t.writes, 9 * 4 * 8);
    assert_eq!(t.reads, t.writes);
}

#[test]
fn tile_schedule_matches_oracle_walk() {
    let cfg = default_config();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    while checked < 200 {
        let l = random_layer(&mut rng, "t", 24);
        let ext = TileConfig::identity(&l).sizes();
        let sizes: [u64; 6] = std::array::from_fn(|i| rng.gen_range(1..=ext[i]));
        let order = ORDERS[rng.gen_range(0..8)];
        let tile = TileConfig::from_sizes(sizes, order);
        for df in Dataflow::BOTH {
            if !df.supports(l.kind) {
                continue;
            }
            let (c, t, bytes) = oracle_schedule(&l, &sizes, &order, &cfg, df);
            let s = tile_schedule(&l, &tile, &cfg, df).unwrap();
            assert_eq!(s.compute, c, "{l:?} {tile}");
            assert_eq!(s.transfer, t, "{l:?} {tile}");
            assert_eq!(dram_bytes(&l, &tile, cfg.bytes_per_element), bytes);
            let big = config_with(|c| c.global_buffer_bytes = 1 << 40);
            let r = evaluate_tiling(&l, &tile, &big, df).unwrap();
            let (c, t, _) = oracle_schedule(&l, &sizes, &order, &big, df);
            assert_eq!(r.total_cycles, pipeline_time(&c, &t));
            checked += 1;
        }
    }
}

/// Compares search and oracle for both dataflows; returns how many
/// comparisons were made and how many of those split the layer.
fn check_search_against_oracle(l: &LayerSpec, cfg: &squeezesim::hwconfig::HardwareConfig) -> (u32, u32) {
    let mut compared = 0;
    let mut tiled = 0;
    for df in Dataflow::BOTH {
        if !df.supports(l.kind) {
            continue;
        }
        let Some(oracle) = exhaustive_tiling(l, cfg, df, 200) else {
            assert!(tiling_search(l, cfg, df).unwrap_err().is_infeasible());
            continue;
        };
        assert_eq!(candidate_count(l, cfg), oracle.candidates, "{l:?}");
        if oracle.candidates > 200 {
            continue;
        }
        let r = tiling_search(l, cfg, df).unwrap();
        assert_eq!(r.total_cycles, oracle.cycles, "{l:?} {df:?}");
        assert_eq!(r.tile, oracle.tile, "{l:?} {df:?}");
        compared += 1;
        if r.tile_count > l.groups {
            tiled += 1;
        }
    }
    (compared, tiled)
}

#[test]
fn tiling_search_equals_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let (mut compared, mut tiled) = (0, 0);
    for i in 0..400 {
        let l = random_layer(&mut rng, &format!("r{i}"), 48);
        let buffer = [1024, 2048, 4096, 8192, 16384][rng.gen_range(0..5)];
        let cfg = config_with(|c| {
            c.global_buffer_bytes = buffer;
            c.pe_dim = [8, 16, 32][i % 3];
        });
        let (c, t) = check_search_against_oracle(&l, &cfg);
        compared += c;
        tiled += t;
    }
    assert!(compared > 100, "only {compared} comparisons");
    assert!(tiled > 50, "only {tiled} comparisons needed tiling");
}

#[test]
fn fc_time_is_at_least_streaming_time() {
    let cfg = default_config();
    let net = bundled_network("alexnet").unwrap().unwrap();
    for l in net.layers.iter().filter(|l| l.kind == squeezesim::workload::LayerKind::FullyConnected) {
        let r = tiling_search(l, &cfg, Dataflow::Ws).unwrap();
        let bytes = layer_footprint_bytes(l, cfg.bytes_per_element).total();
        assert!(r.total_cycles >= bytes / 16, "{}", l.name);
        assert!(r.dram_bytes >= bytes);
    }
}
