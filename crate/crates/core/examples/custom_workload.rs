//! Build a network in code, save it as a workload document and simulate it.
//!
//! Run with `cargo run --example custom_workload -- [output.json]`.

use squeezesim::report::emit_layer_csv;
use squeezesim::workload::{parse_network, serialize_network};
use squeezesim::{default_config, simulate_network, LayerSpec, NetworkSpec, Policy};

fn main() -> squeezesim::Result<()> {
    // A small residual block: the element-wise sum reads two earlier layers.
    let net = NetworkSpec::new(
        "residual-demo",
        vec![
            LayerSpec::conv("stem", [64, 64, 3], 32, [3, 3], 1, 1).first(),
            LayerSpec::conv("reduce", [64, 64, 32], 16, [1, 1], 1, 0),
            LayerSpec::depthwise("dw", [64, 64, 16], [3, 3], 1, 1).with_sparsity(0.5),
            LayerSpec::conv("expand", [64, 64, 16], 32, [1, 1], 1, 0),
            LayerSpec::elementwise("add", [64, 64, 32]).with_inputs(&["stem", "expand"]),
            LayerSpec::pool("pool", [64, 64, 32], [2, 2], 2),
            LayerSpec::fully_connected("fc", 32 * 32 * 32, 10),
        ],
    )?;
    let text = serialize_network(&net);
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, &text)?;
        println!("wrote {path}");
    } else {
        print!("{text}");
    }
    let reparsed = parse_network(&text)?;
    assert_eq!(reparsed, net);

    let rep = simulate_network(&reparsed, &default_config(), Policy::Hybrid)?;
    print!("{}", emit_layer_csv(&rep));
    Ok(())
}
