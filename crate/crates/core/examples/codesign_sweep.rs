//! Hardware co-design: vary one parameter at a time on SqueezeNext.
//!
//! Run with `cargo run --example codesign_sweep`.

use squeezesim::report::{emit_sweep_table, SweepPoint};
use squeezesim::workload::bundled_network;
use squeezesim::{default_config, simulate_network, HardwareConfig, NetworkSpec, Policy};

fn sweep(net: &NetworkSpec, axis: &str, configs: Vec<(String, HardwareConfig)>) -> squeezesim::Result<()> {
    let mut points = Vec::new();
    for (value, cfg) in configs {
        let rep = simulate_network(net, &cfg, Policy::Hybrid)?;
        points.push(SweepPoint {
            value,
            total_cycles: rep.total_cycles,
            total_energy: rep.total_energy,
            utilization: rep.utilization(),
        });
    }
    println!("{}", emit_sweep_table(&net.name, axis, &points).render());
    Ok(())
}

fn main() -> squeezesim::Result<()> {
    let net = bundled_network("squeezenext_23").expect("bundled")?;
    let base = default_config();
    let with = |f: &dyn Fn(&mut HardwareConfig)| {
        let mut c = base;
        f(&mut c);
        c
    };
    sweep(&net, "regfile", [4, 8, 16, 32].map(|g| (g.to_string(), with(&|c| c.regfile_depth = g))).into())?;
    sweep(&net, "pe_dim", [8, 16, 32, 64].map(|n| (n.to_string(), with(&|c| c.pe_dim = n))).into())?;
    sweep(
        &net,
        "dram_gbps",
        [4.0, 8.0, 16.0, 32.0].map(|g| (g.to_string(), with(&|c| c.set_dram_gbps(g)))).into(),
    )?;
    Ok(())
}
