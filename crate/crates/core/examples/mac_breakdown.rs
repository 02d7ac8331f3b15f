//! Share of MACs per layer category for every bundled network.
//!
//! Run with `cargo run --example mac_breakdown`.

use squeezesim::report::emit_proportions_table;
use squeezesim::workload::{bundled_names, bundled_network, mac_count};

fn main() -> squeezesim::Result<()> {
    let nets = bundled_names()
        .map(|n| bundled_network(n).expect("bundled name"))
        .collect::<squeezesim::Result<Vec<_>>>()?;
    print!("{}", emit_proportions_table(&nets)?.render());

    println!();
    for net in &nets {
        let (name, macs) = net
            .compute_layers()
            .map(|l| (l.name.as_str(), mac_count(l)))
            .max_by_key(|&(_, m)| m)
            .expect("network has compute layers");
        println!("{:<18} {:>6.1} MMAC total, heaviest layer {name} ({:.1} MMAC)", net.name, net.total_macs() as f64 / 1e6, macs as f64 / 1e6);
    }
    Ok(())
}
