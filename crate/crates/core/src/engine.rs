//! Dataflow selection, whole-network simulation and energy accounting.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataflow::{AccessCounts, Dataflow};
use crate::error::{Error, Result};
use crate::hwconfig::{HardwareConfig, UnitEnergyTable};
use crate::memtile::{tiling_search, TileConfig, TilingResult};
use crate::workload::{
    classify_layer, layer_footprint_bytes, mac_count, LayerCategory, LayerKind, LayerSpec,
    NetworkSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    /// Per-layer choice of the faster dataflow.
    Hybrid,
    OsOnly,
    WsOnly,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Hybrid, Policy::OsOnly, Policy::WsOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Hybrid => "hybrid",
            Policy::OsOnly => "os",
            Policy::WsOnly => "ws",
        }
    }

    /// The dataflow forced on layers of `kind`, if any. Fully-connected layers
    /// have no output-stationary mapping and always run weight stationary.
    fn forced(self, kind: LayerKind) -> Option<Dataflow> {
        match (self, kind) {
            (_, LayerKind::FullyConnected) => Some(Dataflow::Ws),
            (Policy::OsOnly, _) => Some(Dataflow::Os),
            (Policy::WsOnly, _) => Some(Dataflow::Ws),
            (Policy::Hybrid, _) => None,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hybrid" => Ok(Policy::Hybrid),
            "os" | "os_only" | "osonly" => Ok(Policy::OsOnly),
            "ws" | "ws_only" | "wsonly" => Ok(Policy::WsOnly),
            other => Err(Error::Config(format!("unknown policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerReport {
    pub name: String,
    pub kind: LayerKind,
    pub category: LayerCategory,
    /// `None` for transfer-only layers.
    pub dataflow: Option<Dataflow>,
    pub cycles_total: u64,
    pub cycles_compute: u64,
    pub cycles_transfer_exposed: u64,
    pub tile: Option<TileConfig>,
    pub accesses: AccessCounts,
    pub energy: f64,
    pub utilization: f64,
    /// Dense MACs of the layer.
    pub macs: u64,
    /// MACs issued after zero-weight skipping.
    pub active_macs: u64,
    /// Best time under each dataflow that was simulated.
    pub os_cycles: Option<u64>,
    pub ws_cycles: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CategoryTotals {
    pub layers: usize,
    pub cycles: u64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkReport {
    pub network: String,
    pub hw_fingerprint: String,
    pub policy: Policy,
    pub pe_dim: u64,
    pub layers: Vec<LayerReport>,
    pub total_cycles: u64,
    pub total_energy: f64,
    pub by_category: BTreeMap<LayerCategory, CategoryTotals>,
}

impl NetworkReport {
    fn assemble(net: &NetworkSpec, cfg: &HardwareConfig, policy: Policy, layers: Vec<LayerReport>) -> Self {
        let mut by_category: BTreeMap<LayerCategory, CategoryTotals> = LayerCategory::ALL
            .iter()
            .map(|&c| (c, CategoryTotals::default()))
            .collect();
        let mut total_cycles = 0;
        let mut total_energy = 0.0;
        for l in &layers {
            total_cycles += l.cycles_total;
            total_energy += l.energy;
            let c = by_category.get_mut(&l.category).expect("every category present");
            c.layers += 1;
            c.cycles += l.cycles_total;
            c.energy += l.energy;
        }
        NetworkReport {
            network: net.name.clone(),
            hw_fingerprint: cfg.fingerprint(),
            policy,
            pe_dim: cfg.pe_dim,
            layers,
            total_cycles,
            total_energy,
            by_category,
        }
    }

    pub fn total_active_macs(&self) -> u64 {
        self.layers.iter().map(|l| l.active_macs).sum()
    }

    /// Active MACs over the PE-cycles of the whole network.
    pub fn utilization(&self) -> f64 {
        if self.total_cycles == 0 {
            return 0.0;
        }
        self.total_active_macs() as f64 / (self.total_cycles as f64 * (self.pe_dim * self.pe_dim) as f64)
    }
}

/// Weighted sum of access counts: DRAM traffic is charged per element moved.
pub fn energy_of(
    accesses: &AccessCounts,
    dram_bytes: u64,
    table: &UnitEnergyTable,
    bytes_per_element: u64,
) -> f64 {
    accesses.mac_ops as f64 * table.mac
        + accesses.regfile as f64 * table.regfile
        + accesses.inter_pe as f64 * table.inter_pe
        + accesses.global_buffer as f64 * table.global_buffer
        + (dram_bytes as f64 / bytes_per_element as f64) * table.dram
}

/// Best tilings of a layer under each dataflow it was evaluated with.
#[derive(Debug, Clone, Copy, Default)]
struct LayerEval {
    os: Option<TilingResult>,
    ws: Option<TilingResult>,
}

fn evaluate(layer: &LayerSpec, cfg: &HardwareConfig, want: &[Dataflow]) -> Result<LayerEval> {
    let mut eval = LayerEval::default();
    if !layer.is_compute() {
        return Ok(eval);
    }
    for &df in want {
        if !df.supports(layer.kind) {
            continue;
        }
        let r = tiling_search(layer, cfg, df).map_err(|e| e.in_layer(&layer.name))?;
        match df {
            Dataflow::Os => eval.os = Some(r),
            Dataflow::Ws => eval.ws = Some(r),
        }
    }
    Ok(eval)
}

/// Picks the dataflow with fewer cycles; ties go to output stationary.
pub fn select_dataflow(layer: &LayerSpec, cfg: &HardwareConfig) -> Result<(Dataflow, u64)> {
    if !layer.is_compute() {
        return Err(Error::Unsupported {
            layer: layer.name.clone(),
            kind: layer.kind.to_string(),
            dataflow: "OS or WS".into(),
        });
    }
    let eval = evaluate(layer, cfg, &Dataflow::BOTH)?;
    let (df, r) = choose(&eval, Policy::Hybrid, layer.kind);
    Ok((df, r.total_cycles))
}

fn choose(eval: &LayerEval, policy: Policy, kind: LayerKind) -> (Dataflow, TilingResult) {
    let pick = |df: Dataflow| {
        let r = match df {
            Dataflow::Os => eval.os,
            Dataflow::Ws => eval.ws,
        };
        (df, r.expect("required dataflow was evaluated"))
    };
    match policy.forced(kind) {
        Some(df) => pick(df),
        None => match (eval.os, eval.ws) {
            (Some(os), Some(ws)) if os.total_cycles <= ws.total_cycles => (Dataflow::Os, os),
            (_, Some(ws)) => (Dataflow::Ws, ws),
            (Some(os), None) => (Dataflow::Os, os),
            (None, None) => unreachable!("compute layer without any evaluation"),
        },
    }
}

/// Pool and element-wise layers only move data: one DRAM burst of their
/// footprint, passing through the global buffer.
fn transfer_only_report(layer: &LayerSpec, cfg: &HardwareConfig) -> LayerReport {
    let fp = layer_footprint_bytes(layer, cfg.bytes_per_element);
    let bytes = fp.total();
    let cycles = cfg.transfer_cycles(bytes);
    let accesses = AccessCounts {
        global_buffer: bytes / cfg.bytes_per_element,
        dram_bytes: bytes,
        ..AccessCounts::default()
    };
    LayerReport {
        name: layer.name.clone(),
        kind: layer.kind,
        category: classify_layer(layer),
        dataflow: None,
        cycles_total: cycles,
        cycles_compute: 0,
        cycles_transfer_exposed: cycles,
        tile: None,
        accesses,
        energy: energy_of(&accesses, bytes, &cfg.unit_energy, cfg.bytes_per_element),
        utilization: 0.0,
        macs: 0,
        active_macs: 0,
        os_cycles: None,
        ws_cycles: None,
    }
}

fn layer_report(layer: &LayerSpec, eval: &LayerEval, policy: Policy, cfg: &HardwareConfig) -> LayerReport {
    if !layer.is_compute() {
        return transfer_only_report(layer, cfg);
    }
    let (df, r) = choose(eval, policy, layer.kind);
    let pes = (cfg.pe_dim * cfg.pe_dim) as f64;
    LayerReport {
        name: layer.name.clone(),
        kind: layer.kind,
        category: classify_layer(layer),
        dataflow: Some(df),
        cycles_total: r.total_cycles,
        cycles_compute: r.compute_cycles,
        cycles_transfer_exposed: r.exposed_transfer_cycles(),
        tile: Some(r.tile),
        accesses: r.accesses,
        energy: energy_of(&r.accesses, r.dram_bytes, &cfg.unit_energy, cfg.bytes_per_element),
        utilization: r.active_macs as f64 / (r.total_cycles as f64 * pes),
        macs: mac_count(layer),
        active_macs: r.active_macs,
        os_cycles: eval.os.map(|o| o.total_cycles),
        ws_cycles: eval.ws.map(|w| w.total_cycles),
    }
}

/// Evaluates each layer under the dataflows `policy` can pick for it.
fn evaluate_all(net: &NetworkSpec, cfg: &HardwareConfig, policy: Policy) -> Result<Vec<LayerEval>> {
    net.layers
        .par_iter()
        .map(|l| match policy.forced(l.kind) {
            Some(df) => evaluate(l, cfg, &[df]),
            None => evaluate(l, cfg, &Dataflow::BOTH),
        })
        .collect()
}

/// Simulates every layer under `policy`. Layers are evaluated in parallel;
/// the report lists them in network order.
pub fn simulate_network(net: &NetworkSpec, cfg: &HardwareConfig, policy: Policy) -> Result<NetworkReport> {
    let cfg = cfg.validate()?;
    let evals = evaluate_all(net, &cfg, policy)?;
    let layers = net
        .layers
        .iter()
        .zip(&evals)
        .map(|(l, e)| layer_report(l, e, policy, &cfg))
        .collect();
    Ok(NetworkReport::assemble(net, &cfg, policy, layers))
}

/// One row of the cross-policy comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRecord {
    pub network: String,
    pub cycles_hybrid: u64,
    pub cycles_os: u64,
    pub cycles_ws: u64,
    pub energy_hybrid: f64,
    pub energy_os: f64,
    pub energy_ws: f64,
    /// OsOnly cycles over Hybrid cycles.
    pub speedup_vs_os: f64,
    pub speedup_vs_ws: f64,
    /// Energy saved relative to OsOnly, in percent; negative if Hybrid uses more.
    pub energy_reduction_vs_os: f64,
    pub energy_reduction_vs_ws: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyComparison {
    pub record: ComparisonRecord,
    pub hybrid: NetworkReport,
    pub os_only: NetworkReport,
    pub ws_only: NetworkReport,
}

/// Runs all three policies, evaluating each layer's tilings only once.
pub fn compare_policies(net: &NetworkSpec, cfg: &HardwareConfig) -> Result<PolicyComparison> {
    let cfg = cfg.validate()?;
    let evals = evaluate_all(net, &cfg, Policy::Hybrid)?;
    let report = |policy: Policy| {
        let layers = net
            .layers
            .iter()
            .zip(&evals)
            .map(|(l, e)| layer_report(l, e, policy, &cfg))
            .collect();
        NetworkReport::assemble(net, &cfg, policy, layers)
    };
    let hybrid = report(Policy::Hybrid);
    let os_only = report(Policy::OsOnly);
    let ws_only = report(Policy::WsOnly);
    let reduction = |base: f64| {
        if base == 0.0 {
            0.0
        } else {
            (base - hybrid.total_energy) / base * 100.0
        }
    };
    let record = ComparisonRecord {
        network: net.name.clone(),
        cycles_hybrid: hybrid.total_cycles,
        cycles_os: os_only.total_cycles,
        cycles_ws: ws_only.total_cycles,
        energy_hybrid: hybrid.total_energy,
        energy_os: os_only.total_energy,
        energy_ws: ws_only.total_energy,
        speedup_vs_os: os_only.total_cycles as f64 / hybrid.total_cycles as f64,
        speedup_vs_ws: ws_only.total_cycles as f64 / hybrid.total_cycles as f64,
        energy_reduction_vs_os: reduction(os_only.total_energy),
        energy_reduction_vs_ws: reduction(ws_only.total_energy),
    };
    Ok(PolicyComparison {
        record,
        hybrid,
        os_only,
        ws_only,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hwconfig::default_config;

    #[test]
    fn energy_dot_product() {
        let a = AccessCounts {
            mac_ops: 100,
            regfile: 200,
            inter_pe: 0,
            global_buffer: 50,
            dram_bytes: 20,
        };
        let e = energy_of(&a, 20, &UnitEnergyTable::default(), 2);
        assert_eq!(e, 2600.0);
        assert_eq!(energy_of(&AccessCounts::default(), 0, &UnitEnergyTable::default(), 2), 0.0);
    }

    #[test]
    fn transfer_only_layer() {
        // A 1x1 pool over 64x64x4 moves 32 KB in and 32 KB out.
        let pool = LayerSpec::pool("p", [64, 64, 4], [1, 1], 1);
        assert_eq!(layer_footprint_bytes(&pool, 2).total(), 65_536);
        let net = NetworkSpec::new("pool", vec![pool]).unwrap();
        let rep = simulate_network(&net, &default_config(), Policy::Hybrid).unwrap();
        assert_eq!(rep.total_cycles, 100 + 4096);
        assert_eq!(rep.layers[0].dataflow, None);
        assert_eq!(rep.layers[0].accesses.mac_ops, 0);
    }

    #[test]
    fn tie_goes_to_output_stationary() {
        let eval = LayerEval {
            os: Some(dummy(500)),
            ws: Some(dummy(500)),
        };
        assert_eq!(choose(&eval, Policy::Hybrid, LayerKind::Conv).0, Dataflow::Os);
        let eval = LayerEval {
            os: Some(dummy(501)),
            ws: Some(dummy(500)),
        };
        assert_eq!(choose(&eval, Policy::Hybrid, LayerKind::Conv).0, Dataflow::Ws);
    }

    fn dummy(cycles: u64) -> TilingResult {
        let l = LayerSpec::conv("c", [4, 4, 4], 4, [1, 1], 1, 0);
        TilingResult {
            tile: TileConfig::identity(&l),
            total_cycles: cycles,
            compute_cycles: cycles,
            tile_count: 1,
            dram_bytes: 0,
            active_macs: 0,
            accesses: AccessCounts::default(),
        }
    }

    #[test]
    fn fc_runs_weight_stationary_under_os_policy() {
        let net = NetworkSpec::new(
            "fc",
            vec![LayerSpec::fully_connected("fc", 256, 10)],
        )
        .unwrap();
        let rep = simulate_network(&net, &default_config(), Policy::OsOnly).unwrap();
        assert_eq!(rep.layers[0].dataflow, Some(Dataflow::Ws));
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("hybrid".parse::<Policy>().unwrap(), Policy::Hybrid);
        assert_eq!("OS".parse::<Policy>().unwrap(), Policy::OsOnly);
        assert!("rs".parse::<Policy>().is_err());
    }
}
