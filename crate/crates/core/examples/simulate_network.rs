//! Per-layer simulation of one bundled network under the hybrid policy.
//!
//! Run with `cargo run --example simulate_network -- [network]`; the default
//! network is `squeezenet_v11`.

use squeezesim::report::emit_layer_table;
use squeezesim::workload::bundled_network;
use squeezesim::{default_config, simulate_network, Policy};

fn main() -> squeezesim::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "squeezenet_v11".into());
    let net = bundled_network(&name).unwrap_or_else(|| panic!("no bundled network '{name}'"))?;
    let rep = simulate_network(&net, &default_config(), Policy::Hybrid)?;
    print!("{}", emit_layer_table(&rep).render());
    for (cat, t) in &rep.by_category {
        println!("{:<6} {:>3} layers {:>10} cycles", cat.label(), t.layers, t.cycles);
    }
    Ok(())
}
