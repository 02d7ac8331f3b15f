//! Output- versus weight-stationary cycles for representative layer shapes.
//!
//! Run with `cargo run --example dataflow_affinity`.

use squeezesim::dataflow::{os_layer_cost, ws_layer_cost};
use squeezesim::{default_config, select_dataflow, LayerSpec};

fn main() -> squeezesim::Result<()> {
    let cfg = default_config();
    let layers = [
        LayerSpec::conv("first 3x3, 3 input channels", [224, 224, 3], 32, [3, 3], 2, 1).first(),
        LayerSpec::conv("pointwise 56x56", [56, 56, 128], 128, [1, 1], 1, 0),
        LayerSpec::conv("pointwise 7x7", [7, 7, 512], 1024, [1, 1], 1, 0),
        LayerSpec::conv("3x3 at 28x28", [28, 28, 128], 128, [3, 3], 1, 1),
        LayerSpec::depthwise("depthwise 3x3", [56, 56, 128], [3, 3], 1, 1),
    ];
    println!("{:<30} {:>12} {:>12} {:>8}  pick", "layer", "OS cycles", "WS cycles", "OS/WS");
    for l in &layers {
        let os = os_layer_cost(l, &cfg)?.compute_cycles;
        let ws = ws_layer_cost(l, &cfg)?.compute_cycles;
        let (pick, _) = select_dataflow(l, &cfg)?;
        println!("{:<30} {os:>12} {ws:>12} {:>8.2}  {}", l.name, os as f64 / ws as f64, pick.as_str());
    }
    Ok(())
}
