//! Accelerator parameters and the normalized unit-energy table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_PE_DIM: u64 = 8;
pub const MAX_PE_DIM: u64 = 256;

/// Energy per access at each level, in units of one MAC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitEnergyTable {
    pub mac: f64,
    pub regfile: f64,
    pub inter_pe: f64,
    pub global_buffer: f64,
    pub dram: f64,
}

impl Default for UnitEnergyTable {
    fn default() -> Self {
        UnitEnergyTable {
            mac: 1.0,
            regfile: 1.0,
            inter_pe: 2.0,
            global_buffer: 6.0,
            dram: 200.0,
        }
    }
}

impl UnitEnergyTable {
    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        UnitEnergyTable {
            mac: self.mac * factor,
            regfile: self.regfile * factor,
            inter_pe: self.inter_pe * factor,
            global_buffer: self.global_buffer * factor,
            dram: self.dram * factor,
        }
    }

    fn entries(&self) -> [(&'static str, f64); 5] {
        [
            ("mac", self.mac),
            ("regfile", self.regfile),
            ("inter_pe", self.inter_pe),
            ("global_buffer", self.global_buffer),
            ("dram", self.dram),
        ]
    }
}

/// Clock frequency and DRAM bandwidth, from which bytes per cycle follow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockSpec {
    pub clock_mhz: f64,
    pub dram_gbps: f64,
}

impl Default for ClockSpec {
    fn default() -> Self {
        ClockSpec {
            clock_mhz: 1000.0,
            dram_gbps: 16.0,
        }
    }
}

impl ClockSpec {
    pub fn dram_bytes_per_cycle(&self) -> f64 {
        self.dram_gbps * 1e9 / (self.clock_mhz * 1e6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareConfig {
    /// The PE array is `pe_dim` x `pe_dim`.
    pub pe_dim: u64,
    /// Accumulator entries per PE.
    pub regfile_depth: u64,
    pub global_buffer_bytes: u64,
    pub dram_latency_cycles: u64,
    pub dram_bytes_per_cycle: f64,
    pub bytes_per_element: u64,
    /// Clock used to convert a GB/s bandwidth into bytes per cycle.
    pub clock_mhz: f64,
    pub unit_energy: UnitEnergyTable,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        default_config()
    }
}

pub fn default_config() -> HardwareConfig {
    let clock = ClockSpec::default();
    HardwareConfig {
        pe_dim: 32,
        regfile_depth: 8,
        global_buffer_bytes: 131_072,
        dram_latency_cycles: 100,
        dram_bytes_per_cycle: clock.dram_bytes_per_cycle(),
        bytes_per_element: 2,
        clock_mhz: clock.clock_mhz,
        unit_energy: UnitEnergyTable::default(),
    }
}

impl HardwareConfig {
    pub fn pe_count(&self) -> u64 {
        self.pe_dim * self.pe_dim
    }

    /// Bytes usable by one of the two double-buffered tiles.
    pub fn tile_budget_bytes(&self) -> u64 {
        self.global_buffer_bytes / 2
    }

    /// DRAM bandwidth implied by the current bytes per cycle and clock.
    pub fn dram_gbps(&self) -> f64 {
        self.dram_bytes_per_cycle * self.clock_mhz * 1e6 / 1e9
    }

    pub fn clock(&self) -> ClockSpec {
        ClockSpec {
            clock_mhz: self.clock_mhz,
            dram_gbps: self.dram_gbps(),
        }
    }

    /// Applies a clock and bandwidth pair, re-deriving bytes per cycle.
    pub fn set_clock(&mut self, clock: ClockSpec) {
        self.clock_mhz = clock.clock_mhz;
        self.dram_bytes_per_cycle = clock.dram_bytes_per_cycle();
    }

    /// Changes the DRAM bandwidth in GB/s at the current clock.
    pub fn set_dram_gbps(&mut self, gbps: f64) {
        let clock = ClockSpec {
            clock_mhz: self.clock_mhz,
            dram_gbps: gbps,
        };
        self.set_clock(clock);
    }

    /// Changes the clock while keeping the DRAM bandwidth in GB/s fixed.
    pub fn set_clock_mhz(&mut self, mhz: f64) {
        let clock = ClockSpec {
            clock_mhz: mhz,
            dram_gbps: self.dram_gbps(),
        };
        self.set_clock(clock);
    }

    /// Cycles for one DRAM burst of `bytes`: latency plus streaming time.
    pub fn transfer_cycles(&self, bytes: u64) -> u64 {
        self.dram_latency_cycles + self.stream_cycles(bytes)
    }

    /// Cycles to stream `bytes` at the DRAM bandwidth, without latency.
    pub fn stream_cycles(&self, bytes: u64) -> u64 {
        if bytes == 0 {
            0
        } else {
            (bytes as f64 / self.dram_bytes_per_cycle).ceil() as u64
        }
    }

    pub fn validate(&self) -> Result<HardwareConfig> {
        validate(self)
    }

    /// Short stable identifier of every parameter, used in report headers.
    pub fn fingerprint(&self) -> String {
        let e = &self.unit_energy;
        format!(
            "N{}-G{}-buf{}-L{}-B{}-b{}-E{}/{}/{}/{}/{}",
            self.pe_dim,
            self.regfile_depth,
            self.global_buffer_bytes,
            self.dram_latency_cycles,
            self.dram_bytes_per_cycle,
            self.bytes_per_element,
            e.mac,
            e.regfile,
            e.inter_pe,
            e.global_buffer,
            e.dram
        )
    }
}

/// Checks every invariant and returns the accepted configuration.
pub fn validate(cfg: &HardwareConfig) -> Result<HardwareConfig> {
    let positive = |name: &str, v: u64| {
        if v == 0 {
            Err(Error::Config(format!("{name} must be positive")))
        } else {
            Ok(())
        }
    };
    positive("pe_dim", cfg.pe_dim)?;
    if !(MIN_PE_DIM..=MAX_PE_DIM).contains(&cfg.pe_dim) {
        return Err(Error::Config(format!(
            "pe_dim {} outside the accepted range {MIN_PE_DIM}..={MAX_PE_DIM}",
            cfg.pe_dim
        )));
    }
    positive("regfile_depth", cfg.regfile_depth)?;
    positive("global_buffer_bytes", cfg.global_buffer_bytes)?;
    positive("bytes_per_element", cfg.bytes_per_element)?;
    if !(cfg.dram_bytes_per_cycle.is_finite() && cfg.dram_bytes_per_cycle > 0.0) {
        return Err(Error::Config("dram_bytes_per_cycle must be positive".into()));
    }
    if !(cfg.clock_mhz.is_finite() && cfg.clock_mhz > 0.0) {
        return Err(Error::Config("clock_mhz must be positive".into()));
    }
    for (name, value) in cfg.unit_energy.entries() {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Config(format!("unit_energy.{name} must be positive")));
        }
    }
    Ok(*cfg)
}

/// Hardware document: every field optional, missing ones take defaults.
/// `clock_mhz` and `dram_gbps` may be given instead of `dram_bytes_per_cycle`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct HardwareDoc {
    pe_dim: Option<u64>,
    regfile_depth: Option<u64>,
    global_buffer_bytes: Option<u64>,
    dram_latency_cycles: Option<u64>,
    dram_bytes_per_cycle: Option<f64>,
    bytes_per_element: Option<u64>,
    clock_mhz: Option<f64>,
    dram_gbps: Option<f64>,
    unit_energy: Option<UnitEnergyDoc>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitEnergyDoc {
    mac: Option<f64>,
    regfile: Option<f64>,
    inter_pe: Option<f64>,
    global_buffer: Option<f64>,
    dram: Option<f64>,
}

/// Parses and validates a hardware document.
pub fn parse_hardware(text: &str) -> Result<HardwareConfig> {
    let doc: HardwareDoc = serde_json::from_str(text).map_err(Error::from_json)?;
    let mut cfg = default_config();
    if doc.dram_bytes_per_cycle.is_some() && doc.dram_gbps.is_some() {
        return Err(Error::Config(
            "give either dram_bytes_per_cycle or dram_gbps, not both".into(),
        ));
    }
    cfg.pe_dim = doc.pe_dim.unwrap_or(cfg.pe_dim);
    cfg.regfile_depth = doc.regfile_depth.unwrap_or(cfg.regfile_depth);
    cfg.global_buffer_bytes = doc.global_buffer_bytes.unwrap_or(cfg.global_buffer_bytes);
    cfg.dram_latency_cycles = doc.dram_latency_cycles.unwrap_or(cfg.dram_latency_cycles);
    cfg.bytes_per_element = doc.bytes_per_element.unwrap_or(cfg.bytes_per_element);
    let clock = ClockSpec {
        clock_mhz: doc.clock_mhz.unwrap_or(cfg.clock_mhz),
        dram_gbps: doc.dram_gbps.unwrap_or(ClockSpec::default().dram_gbps),
    };
    cfg.set_clock(clock);
    if let Some(b) = doc.dram_bytes_per_cycle {
        cfg.dram_bytes_per_cycle = b;
    }
    if let Some(e) = doc.unit_energy {
        let t = &mut cfg.unit_energy;
        t.mac = e.mac.unwrap_or(t.mac);
        t.regfile = e.regfile.unwrap_or(t.regfile);
        t.inter_pe = e.inter_pe.unwrap_or(t.inter_pe);
        t.global_buffer = e.global_buffer.unwrap_or(t.global_buffer);
        t.dram = e.dram.unwrap_or(t.dram);
    }
    validate(&cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = default_config();
        assert_eq!(c.dram_latency_cycles, 100);
        assert_eq!(c.dram_bytes_per_cycle, 16.0);
        assert_eq!(c.global_buffer_bytes, 131_072);
        assert_eq!((c.pe_dim, c.regfile_depth, c.bytes_per_element), (32, 8, 2));
        assert_eq!(c.unit_energy, UnitEnergyTable::default());
        assert_eq!(c.tile_budget_bytes(), 65_536);
    }

    #[test]
    fn zero_pe_dim_is_rejected() {
        let cfg = HardwareConfig {
            pe_dim: 0,
            ..default_config()
        };
        let err = validate(&cfg).unwrap_err();
        assert_eq!(err.to_string(), "invalid hardware configuration: pe_dim must be positive");
    }

    #[test]
    fn pe_dim_range() {
        for (n, ok) in [(7, false), (8, true), (256, true), (257, false)] {
            let cfg = HardwareConfig {
                pe_dim: n,
                ..default_config()
            };
            assert_eq!(validate(&cfg).is_ok(), ok, "N = {n}");
        }
    }

    #[test]
    fn doubled_regfile_is_valid() {
        let cfg = HardwareConfig {
            regfile_depth: 16,
            ..default_config()
        };
        assert_eq!(validate(&cfg).unwrap(), cfg);
    }

    #[test]
    fn zero_dram_energy_is_rejected() {
        let mut cfg = default_config();
        cfg.unit_energy.dram = 0.0;
        assert!(validate(&cfg).is_err());
    }

    #[test]
    fn clock_overrides_rederive_bandwidth() {
        let mut cfg = default_config();
        cfg.set_clock_mhz(500.0);
        assert_eq!(cfg.dram_bytes_per_cycle, 32.0);
        cfg.set_dram_gbps(8.0);
        assert_eq!(cfg.dram_bytes_per_cycle, 16.0);
        assert!((cfg.dram_gbps() - 8.0).abs() < 1e-9);
    }

    #[test]
    fn parse_partial_document() {
        let cfg = parse_hardware(r#"{"regfile_depth": 16, "unit_energy": {"dram": 100}}"#).unwrap();
        assert_eq!(cfg.regfile_depth, 16);
        assert_eq!(cfg.unit_energy.dram, 100.0);
        assert_eq!(cfg.unit_energy.global_buffer, 6.0);
        let cfg = parse_hardware(r#"{"clock_mhz": 800, "dram_gbps": 16}"#).unwrap();
        assert_eq!(cfg.dram_bytes_per_cycle, 20.0);
        assert!(parse_hardware(r#"{"pe_dims": 16}"#).is_err());
        assert!(parse_hardware(r#"{"pe_dim": 0}"#).is_err());
    }

    #[test]
    fn fingerprint_distinguishes_configs() {
        let a = default_config();
        let b = HardwareConfig {
            regfile_depth: 16,
            ..a
        };
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), default_config().fingerprint());
    }
}
