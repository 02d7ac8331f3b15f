//! Command-line front end.
//!
//! Exit status: 0 on success, 2 for usage, input or configuration errors, 1
//! when a layer cannot be mapped onto the configured hardware.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::{compare_policies, simulate_network, Policy};
use crate::error::{Error, Result};
use crate::hwconfig::{default_config, parse_hardware, HardwareConfig};
use crate::report::{
    emit_comparison_table, emit_layer_csv, emit_layer_table, emit_proportions_table,
    emit_sweep_table, SweepPoint, TableDoc,
};
use crate::workload::{bundled_source, parse_network, NetworkSpec};

/// Overrides the directory searched for workloads given by bare name.
pub const WORKLOAD_DIR_ENV: &str = "SQUEEZESIM_WORKLOAD_DIR";

#[derive(Debug, Parser)]
#[command(name = "squeezesim", version, about = "Cycle and energy model of a dual-dataflow CNN accelerator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the share of MACs per layer category.
    Analyze {
        /// Workload files or bundled workload names.
        #[arg(required = true)]
        workloads: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Simulate one network and print per-layer results.
    Simulate {
        workload: String,
        #[command(flatten)]
        hw: HwArgs,
        #[arg(long, value_enum, default_value_t = PolicyArg::Hybrid)]
        policy: PolicyArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare the hybrid policy against OS-only and WS-only hardware.
    Compare {
        #[arg(required = true)]
        workloads: Vec<String>,
        #[command(flatten)]
        hw: HwArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Re-simulate one network while varying a hardware parameter.
    Sweep {
        workload: String,
        #[command(flatten)]
        hw: HwArgs,
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// Comma-separated values for the swept parameter.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct HwArgs {
    /// Hardware configuration document (JSON).
    #[arg(long)]
    pub hw: Option<PathBuf>,
    #[arg(long)]
    pub pe_dim: Option<u64>,
    #[arg(long)]
    pub regfile: Option<u64>,
    #[arg(long)]
    pub buffer_bytes: Option<u64>,
    #[arg(long)]
    pub dram_latency: Option<u64>,
    #[arg(long)]
    pub dram_gbps: Option<f64>,
    #[arg(long)]
    pub clock_mhz: Option<f64>,
}

impl HwArgs {
    pub fn resolve(&self) -> Result<HardwareConfig> {
        let mut cfg = match &self.hw {
            Some(path) => parse_hardware(&std::fs::read_to_string(path).map_err(|e| io_error(path, e))?)?,
            None => default_config(),
        };
        if let Some(v) = self.pe_dim {
            cfg.pe_dim = v;
        }
        if let Some(v) = self.regfile {
            cfg.regfile_depth = v;
        }
        if let Some(v) = self.buffer_bytes {
            cfg.global_buffer_bytes = v;
        }
        if let Some(v) = self.dram_latency {
            cfg.dram_latency_cycles = v;
        }
        if let Some(v) = self.clock_mhz {
            cfg.set_clock_mhz(v);
        }
        if let Some(v) = self.dram_gbps {
            cfg.set_dram_gbps(v);
        }
        cfg.validate()
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Hybrid,
    Os,
    Ws,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Hybrid => Policy::Hybrid,
            PolicyArg::Os => Policy::OsOnly,
            PolicyArg::Ws => Policy::WsOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepAxis {
    #[value(name = "pe_dim")]
    PeDim,
    Regfile,
    Buffer,
    #[value(name = "dram_gbps")]
    DramGbps,
}

impl SweepAxis {
    fn label(self) -> &'static str {
        match self {
            SweepAxis::PeDim => "pe_dim",
            SweepAxis::Regfile => "regfile",
            SweepAxis::Buffer => "buffer",
            SweepAxis::DramGbps => "dram_gbps",
        }
    }

    /// Returns `base` with the axis set to `value`.
    pub fn apply(self, base: &HardwareConfig, value: &str) -> Result<HardwareConfig> {
        let bad = || Error::Config(format!("invalid {} value '{value}'", self.label()));
        let int = || value.trim().parse::<u64>().map_err(|_| bad());
        let mut cfg = *base;
        match self {
            SweepAxis::PeDim => cfg.pe_dim = int()?,
            SweepAxis::Regfile => cfg.regfile_depth = int()?,
            SweepAxis::Buffer => cfg.global_buffer_bytes = int()?,
            SweepAxis::DramGbps => {
                let g: f64 = value.trim().parse().map_err(|_| bad())?;
                cfg.set_dram_gbps(g);
            }
        }
        cfg.validate()
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Loads a workload from a path, the override directory, or the bundled set.
pub fn load_workload(spec: &str) -> Result<NetworkSpec> {
    let direct = Path::new(spec);
    if direct.is_file() {
        return read_workload(direct);
    }
    if let Some(dir) = std::env::var_os(WORKLOAD_DIR_ENV) {
        let dir = PathBuf::from(dir);
        for candidate in [dir.join(spec), dir.join(format!("{spec}.json"))] {
            if candidate.is_file() {
                return read_workload(&candidate);
            }
        }
    }
    match bundled_source(spec) {
        Some(text) => parse_network(text),
        None => Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{spec}: no such workload file or bundled workload"),
        ))),
    }
}

fn read_workload(path: &Path) -> Result<NetworkSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_network(&text).map_err(|e| match e {
        Error::Syntax { line, column, message } => Error::Syntax {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn render(t: &TableDoc, format: Format) -> String {
    match format {
        Format::Table => t.render(),
        Format::Csv => t.to_csv(),
    }
}

/// Executes a parsed command and returns the text to emit.
pub fn execute(command: &Command) -> Result<(String, Option<PathBuf>)> {
    match command {
        Command::Analyze { workloads, output } => {
            let nets = workloads.iter().map(|w| load_workload(w)).collect::<Result<Vec<_>>>()?;
            let t = emit_proportions_table(&nets)?;
            Ok((render(&t, output.format), output.out.clone()))
        }
        Command::Simulate {
            workload,
            hw,
            policy,
            output,
        } => {
            let cfg = hw.resolve()?;
            let net = load_workload(workload)?;
            let rep = simulate_network(&net, &cfg, (*policy).into())?;
            let text = match output.format {
                Format::Table => emit_layer_table(&rep).render(),
                Format::Csv => emit_layer_csv(&rep),
            };
            Ok((text, output.out.clone()))
        }
        Command::Compare { workloads, hw, output } => {
            let cfg = hw.resolve()?;
            let mut records = Vec::with_capacity(workloads.len());
            for w in workloads {
                let net = load_workload(w)?;
                records.push(compare_policies(&net, &cfg)?.record);
            }
            let t = emit_comparison_table(&records)?;
            Ok((render(&t, output.format), output.out.clone()))
        }
        Command::Sweep {
            workload,
            hw,
            axis,
            values,
            output,
        } => {
            let base = hw.resolve()?;
            let net = load_workload(workload)?;
            let configs = values
                .iter()
                .map(|v| axis.apply(&base, v).map(|c| (v.trim().to_string(), c)))
                .collect::<Result<Vec<_>>>()?;
            let mut points = Vec::with_capacity(configs.len());
            for (value, cfg) in configs {
                let rep = simulate_network(&net, &cfg, Policy::Hybrid)?;
                points.push(SweepPoint {
                    value,
                    total_cycles: rep.total_cycles,
                    total_energy: rep.total_energy,
                    utilization: rep.utilization(),
                });
            }
            let t = emit_sweep_table(&net.name, axis.label(), &points);
            Ok((render(&t, output.format), output.out.clone()))
        }
    }
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_infeasible() {
        1
    } else {
        2
    }
}

/// Parses `args` (program name first), runs the command and writes results
/// and diagnostics to the given streams. Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
            } else {
                let _ = stdout.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(&cli.command) {
        Ok((text, None)) => match stdout.write_all(text.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                2
            }
        },
        Ok((text, Some(path))) => match std::fs::write(&path, text) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(stderr, "error: {}", io_error(&path, e));
                2
            }
        },
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
