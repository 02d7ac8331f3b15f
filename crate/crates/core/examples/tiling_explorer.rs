//! How the tiling search splits a layer that does not fit the buffer.
//!
//! Run with `cargo run --example tiling_explorer`.

use squeezesim::memtile::{candidate_count, evaluate_tiling, working_set_bytes, LOOP_ORDERS};
use squeezesim::workload::layer_footprint_bytes;
use squeezesim::{default_config, tiling_search, Dataflow, LayerSpec, TileConfig};

fn main() -> squeezesim::Result<()> {
    let cfg = default_config();
    let layer = LayerSpec::conv("conv 56x56x128 -> 128", [56, 56, 128], 128, [3, 3], 1, 1);
    let fp = layer_footprint_bytes(&layer, cfg.bytes_per_element);
    println!(
        "{}: footprint {} bytes (input {}, weights {}, output {}), tile budget {} bytes",
        layer.name,
        fp.total(),
        fp.input_bytes,
        fp.weight_bytes,
        fp.output_bytes,
        cfg.tile_budget_bytes()
    );
    println!("{} candidate tilings", candidate_count(&layer, &cfg));

    for df in Dataflow::BOTH {
        let best = tiling_search(&layer, &cfg, df)?;
        println!(
            "{}: best {} -> {} tiles, {} cycles ({} compute, {} exposed transfer), {} DRAM bytes, working set {}",
            df.as_str(),
            best.tile,
            best.tile_count,
            best.total_cycles,
            best.compute_cycles,
            best.exposed_transfer_cycles(),
            best.dram_bytes,
            working_set_bytes(&layer, &best.tile, cfg.bytes_per_element)
        );
        // The same tile sizes visited in every other loop order.
        for order in LOOP_ORDERS {
            let t = TileConfig { loop_order: order, ..best.tile };
            let r = evaluate_tiling(&layer, &t, &cfg, df)?;
            println!("    {t}: {} cycles, {} DRAM bytes", r.total_cycles, r.dram_bytes);
        }
    }
    Ok(())
}
