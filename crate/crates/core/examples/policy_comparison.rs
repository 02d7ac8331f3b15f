//! Hybrid dataflow selection against OS-only and WS-only hardware.
//!
//! Run with `cargo run --example policy_comparison`.

use squeezesim::report::emit_comparison_table;
use squeezesim::workload::{bundled_names, bundled_network};
use squeezesim::{compare_policies, default_config};

fn main() -> squeezesim::Result<()> {
    let cfg = default_config();
    let mut records = Vec::new();
    for name in bundled_names() {
        let net = bundled_network(name).expect("bundled name")?;
        let cmp = compare_policies(&net, &cfg)?;
        let os_layers = cmp
            .hybrid
            .layers
            .iter()
            .filter(|l| l.dataflow == Some(squeezesim::Dataflow::Os))
            .count();
        println!("{:<18} {os_layers:>3} of {:>3} layers run output stationary", net.name, net.compute_layers().count());
        records.push(cmp.record);
    }
    println!();
    print!("{}", emit_comparison_table(&records)?.render());
    Ok(())
}
