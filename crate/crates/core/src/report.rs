//! Plain-text tables and CSV output.
//!
//! Cycles are printed as integers, percentages with one decimal and ratios
//! with two. Every emitter is a pure function of its input.

use std::fmt::Write as _;

use crate::engine::{ComparisonRecord, NetworkReport};
use crate::error::{Error, Result};
use crate::workload::{mac_proportions, LayerCategory, NetworkSpec};

/// A rectangular table with optional footnotes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDoc {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub footnotes: Vec<String>,
}

impl TableDoc {
    pub fn new<S: Into<String>>(title: impl Into<String>, headers: impl IntoIterator<Item = S>) -> Self {
        TableDoc {
            title: title.into(),
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            footnotes: Vec::new(),
        }
    }

    /// Appends a row; panics if its arity differs from the header's.
    pub fn push_row(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.headers.len(), "row arity must match the header");
        self.rows.push(row);
    }

    /// Aligned plain text: first column left-aligned, the rest right-aligned.
    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                if i == 0 {
                    let _ = write!(s, "{cell:<w$}");
                } else {
                    let _ = write!(s, "{cell:>w$}");
                }
            }
            s.trim_end().to_string()
        };
        let mut out = String::new();
        if !self.title.is_empty() {
            out.push_str(&self.title);
            out.push('\n');
        }
        out.push_str(&line(&self.headers));
        out.push('\n');
        let total: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        for note in &self.footnotes {
            out.push_str(note);
            out.push('\n');
        }
        out
    }

    /// RFC 4180 CSV of the header and rows; footnotes are omitted.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }
}

pub fn fmt_pct(v: f64) -> String {
    format!("{v:.1}")
}

pub fn fmt_ratio(v: f64) -> String {
    format!("{v:.2}")
}

/// Share of MACs per layer category, one row per network.
pub fn emit_proportions_table(nets: &[NetworkSpec]) -> Result<TableDoc> {
    if nets.is_empty() {
        return Err(Error::NoNetworks);
    }
    let cats = [
        LayerCategory::Conv1,
        LayerCategory::Pointwise,
        LayerCategory::FxF,
        LayerCategory::Depthwise,
    ];
    let mut t = TableDoc::new(
        "MAC share by layer category (%)",
        ["network", "Conv1", "1x1", "FxF", "DW"],
    );
    for net in nets {
        let p = mac_proportions(net);
        let mut row = vec![net.name.clone()];
        row.extend(cats.iter().map(|c| fmt_pct(p[c])));
        t.push_row(row);
    }
    Ok(t)
}

pub const LAYER_CSV_HEADER: [&str; 8] = [
    "layer",
    "category",
    "dataflow",
    "cycles",
    "compute_cycles",
    "exposed_transfer_cycles",
    "energy",
    "utilization",
];

fn layer_cells(rep: &NetworkReport) -> Vec<Vec<String>> {
    rep.layers
        .iter()
        .map(|l| {
            vec![
                l.name.clone(),
                l.category.label().to_string(),
                l.dataflow.map_or("none", |d| d.as_str()).to_string(),
                l.cycles_total.to_string(),
                l.cycles_compute.to_string(),
                l.cycles_transfer_exposed.to_string(),
                format!("{:.1}", l.energy),
                format!("{:.4}", l.utilization),
            ]
        })
        .collect()
}

/// One CSV row per layer in network order, with a header line.
pub fn emit_layer_csv(rep: &NetworkReport) -> String {
    let mut t = TableDoc::new("", LAYER_CSV_HEADER);
    for row in layer_cells(rep) {
        t.push_row(row);
    }
    t.to_csv()
}

/// Per-layer table with network totals as footnotes.
pub fn emit_layer_table(rep: &NetworkReport) -> TableDoc {
    let mut t = TableDoc::new(
        format!("{} [policy {}, {}]", rep.network, rep.policy, rep.hw_fingerprint),
        LAYER_CSV_HEADER,
    );
    for row in layer_cells(rep) {
        t.push_row(row);
    }
    t.footnotes.push(format!("total cycles: {}", rep.total_cycles));
    t.footnotes.push(format!("total energy: {:.1}", rep.total_energy));
    t.footnotes.push(format!("utilization: {:.4}", rep.utilization()));
    t
}

/// Speedup and energy saving of the hybrid policy over each single dataflow.
pub fn emit_comparison_table(records: &[ComparisonRecord]) -> Result<TableDoc> {
    if records.is_empty() {
        return Err(Error::NoNetworks);
    }
    let mut t = TableDoc::new(
        "Hybrid dataflow vs single-dataflow architectures",
        [
            "network",
            "speedup vs OS",
            "speedup vs WS",
            "energy reduction vs OS (%)",
            "energy reduction vs WS (%)",
        ],
    );
    for r in records {
        t.push_row(vec![
            r.network.clone(),
            fmt_ratio(r.speedup_vs_os),
            fmt_ratio(r.speedup_vs_ws),
            fmt_pct(r.energy_reduction_vs_os),
            fmt_pct(r.energy_reduction_vs_ws),
        ]);
    }
    Ok(t)
}

/// One sweep point: the swept value and the hybrid totals it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: String,
    pub total_cycles: u64,
    pub total_energy: f64,
    pub utilization: f64,
}

pub fn emit_sweep_table(network: &str, axis: &str, points: &[SweepPoint]) -> TableDoc {
    let mut t = TableDoc::new(
        format!("{network}: sweep over {axis} (hybrid policy)"),
        [axis, "total_cycles", "total_energy", "utilization"],
    );
    for p in points {
        t.push_row(vec![
            p.value.clone(),
            p.total_cycles.to_string(),
            format!("{:.1}", p.total_energy),
            format!("{:.4}", p.utilization),
        ]);
    }
    t
}
