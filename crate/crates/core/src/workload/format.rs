//! JSON workload documents.
//!
//! ```json
//! {"name": "tiny", "layers": [
//!   {"name": "conv1", "kind": "conv", "in": [32, 32, 3], "out_c": 16,
//!    "filter": [3, 3], "stride": 1, "pad": 1, "is_first": true}
//! ]}
//! ```
//!
//! `pad` is either one integer or `[pad_h, pad_w]`; the string `"same"` is
//! resolved to `(filter - 1) / 2` per dimension at parse time. Optional keys:
//! `sparsity` (defaults to 0.4 on weighted layers), `is_first`, `groups`, and
//! `inputs` (producer layer names, defaulting to the previous layer).

use serde::{Deserialize, Serialize};

use super::{LayerKind, LayerSpec, NetworkSpec, DEFAULT_SPARSITY};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    name: String,
    layers: Vec<LayerDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    name: String,
    kind: String,
    #[serde(rename = "in")]
    input: [u64; 3],
    out_c: Option<u64>,
    filter: Option<[u64; 2]>,
    stride: Option<u64>,
    pad: Option<PadDoc>,
    sparsity: Option<f64>,
    is_first: Option<bool>,
    groups: Option<u64>,
    inputs: Option<Vec<String>>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum PadDoc {
    Uniform(u64),
    PerAxis([u64; 2]),
    Named(String),
}

impl LayerDoc {
    fn into_layer(self) -> Result<LayerSpec> {
        let kind = LayerKind::from_name(&self.kind).ok_or_else(|| Error::UnknownKind {
            layer: self.name.clone(),
            kind: self.kind.clone(),
        })?;
        let [fh, fw] = self.filter.unwrap_or([1, 1]);
        let (pad_h, pad_w) = match self.pad {
            None => (0, 0),
            Some(PadDoc::Uniform(p)) => (p, p),
            Some(PadDoc::PerAxis([ph, pw])) => (ph, pw),
            Some(PadDoc::Named(ref s)) if s.eq_ignore_ascii_case("same") => {
                (fh.saturating_sub(1) / 2, fw.saturating_sub(1) / 2)
            }
            Some(PadDoc::Named(s)) => {
                return Err(Error::InvalidLayer {
                    layer: self.name,
                    reason: format!("unknown padding mode '{s}'"),
                })
            }
        };
        let out_c = match (self.out_c, kind) {
            (Some(c), _) => c,
            (None, LayerKind::Conv | LayerKind::FullyConnected) => {
                return Err(Error::InvalidLayer {
                    layer: self.name,
                    reason: "missing out_c".into(),
                })
            }
            (None, _) => self.input[2],
        };
        let default_sparsity = if kind.is_compute() { DEFAULT_SPARSITY } else { 0.0 };
        Ok(LayerSpec {
            name: self.name,
            kind,
            in_h: self.input[0],
            in_w: self.input[1],
            in_c: self.input[2],
            out_c,
            filter_h: fh,
            filter_w: fw,
            stride: self.stride.unwrap_or(1),
            pad_h,
            pad_w,
            groups: self.groups.unwrap_or(1),
            sparsity: self.sparsity.unwrap_or(default_sparsity),
            is_first: self.is_first.unwrap_or(false),
            inputs: self.inputs.unwrap_or_default(),
        })
    }
}

/// Parses and validates a workload document.
pub fn parse_network(text: &str) -> Result<NetworkSpec> {
    let doc: NetworkDoc = serde_json::from_str(text).map_err(Error::from_json)?;
    if doc.layers.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let layers = doc
        .layers
        .into_iter()
        .map(LayerDoc::into_layer)
        .collect::<Result<Vec<_>>>()?;
    NetworkSpec::new(doc.name, layers)
}

#[derive(Serialize)]
struct LayerOut<'a> {
    name: &'a str,
    kind: &'static str,
    #[serde(rename = "in")]
    input: [u64; 3],
    out_c: u64,
    filter: [u64; 2],
    stride: u64,
    pad: PadDoc,
    sparsity: f64,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    is_first: bool,
    #[serde(skip_serializing_if = "is_one")]
    groups: u64,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    inputs: &'a [String],
}

fn is_one(v: &u64) -> bool {
    *v == 1
}

/// Writes a network back out as a workload document, one layer per line.
pub fn serialize_network(net: &NetworkSpec) -> String {
    let mut out = String::new();
    out.push_str("{\n  \"name\": ");
    out.push_str(&serde_json::to_string(&net.name).expect("string serializes"));
    out.push_str(",\n  \"layers\": [\n");
    for (i, l) in net.layers.iter().enumerate() {
        let pad = if l.pad_h == l.pad_w {
            PadDoc::Uniform(l.pad_h)
        } else {
            PadDoc::PerAxis([l.pad_h, l.pad_w])
        };
        let doc = LayerOut {
            name: &l.name,
            kind: l.kind.as_str(),
            input: [l.in_h, l.in_w, l.in_c],
            out_c: l.out_c,
            filter: [l.filter_h, l.filter_w],
            stride: l.stride,
            pad,
            sparsity: l.sparsity,
            is_first: l.is_first,
            groups: l.groups,
            inputs: &l.inputs,
        };
        out.push_str("    ");
        out.push_str(&serde_json::to_string(&doc).expect("layer serializes"));
        if i + 1 < net.layers.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("  ]\n}\n");
    out
}
