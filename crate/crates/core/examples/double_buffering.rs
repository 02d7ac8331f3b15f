//! Double-buffered transfer/compute overlap on explicit tile schedules.
//!
//! Run with `cargo run --example double_buffering`.

use squeezesim::memtile::{overlap_layer_time, tile_schedule, TransferPlan};
use squeezesim::{default_config, tiling_search, Dataflow, LayerSpec};

fn main() -> squeezesim::Result<()> {
    let cfg = default_config();

    // Compute-bound and transfer-bound uniform schedules.
    for (compute, bytes) in [(5_000, 16_000), (500, 16_000)] {
        let plan = TransferPlan::new(8, bytes, &cfg);
        let serial = 8 * (compute + plan.transfer_cycles_per_tile);
        println!(
            "8 tiles, {compute} compute and {} transfer cycles each: {} overlapped vs {serial} serial",
            plan.transfer_cycles_per_tile,
            plan.total_layer_cycles(compute)
        );
    }

    // A real layer: fully connected layers are dominated by weight traffic.
    let fc = LayerSpec::fully_connected("fc", 4096, 4096);
    let best = tiling_search(&fc, &cfg, Dataflow::Ws)?;
    let s = tile_schedule(&fc, &best.tile, &cfg, Dataflow::Ws)?;
    let compute: u64 = s.compute.iter().sum();
    let transfer: u64 = s.transfer.iter().sum();
    println!(
        "{}: {} tiles, compute {compute}, transfer {transfer}, overlapped {}",
        fc.name,
        s.compute.len(),
        overlap_layer_time(&s.compute, &s.transfer)?
    );
    Ok(())
}
