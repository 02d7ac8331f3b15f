//! Network and layer data model.
//!
//! A [`NetworkSpec`] is an ordered list of [`LayerSpec`]s evaluated one layer
//! at a time (batch size 1). Layers carry only shapes and a weight-sparsity
//! fraction; no weight values are stored. Besides the shape types this module
//! provides the MAC and memory-footprint accounting used by the cost models,
//! and the layer taxonomy used for the MAC-breakdown tables.

mod bundled;
mod format;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bundled::{bundled_names, bundled_network, bundled_source, BUNDLED};
pub use format::{parse_network, serialize_network};

/// Fraction of zero weights assumed when a workload does not state one.
pub const DEFAULT_SPARSITY: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LayerKind {
    Conv,
    DepthwiseConv,
    FullyConnected,
    Pool,
    ElementWise,
}

impl LayerKind {
    /// Canonical spelling used in workload documents.
    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Conv => "conv",
            LayerKind::DepthwiseConv => "depthwise",
            LayerKind::FullyConnected => "fc",
            LayerKind::Pool => "pool",
            LayerKind::ElementWise => "elementwise",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let kind = match name.to_ascii_lowercase().as_str() {
            "conv" | "convolution" => LayerKind::Conv,
            "depthwise" | "depthwiseconv" | "dwconv" | "dw" => LayerKind::DepthwiseConv,
            "fc" | "fullyconnected" | "fully_connected" | "linear" => LayerKind::FullyConnected,
            "pool" | "maxpool" | "avgpool" => LayerKind::Pool,
            "elementwise" | "eltwise" | "add" => LayerKind::ElementWise,
            _ => return None,
        };
        Some(kind)
    }

    /// Layers that perform multiply-accumulates on the PE array.
    pub fn is_compute(self) -> bool {
        matches!(
            self,
            LayerKind::Conv | LayerKind::DepthwiseConv | LayerKind::FullyConnected
        )
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Layer taxonomy for MAC-share reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LayerCategory {
    /// The network's first convolution.
    Conv1,
    /// 1x1 convolution.
    Pointwise,
    /// Convolution with a spatial filter larger than 1x1.
    FxF,
    Depthwise,
    /// Fully-connected, pooling and element-wise layers.
    Other,
}

impl LayerCategory {
    pub const ALL: [LayerCategory; 5] = [
        LayerCategory::Conv1,
        LayerCategory::Pointwise,
        LayerCategory::FxF,
        LayerCategory::Depthwise,
        LayerCategory::Other,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LayerCategory::Conv1 => "Conv1",
            LayerCategory::Pointwise => "1x1",
            LayerCategory::FxF => "FxF",
            LayerCategory::Depthwise => "DW",
            LayerCategory::Other => "Other",
        }
    }
}

impl fmt::Display for LayerCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One network layer.
///
/// Spatial sizes are in pixels, channel counts in feature maps. Fully-connected
/// layers use a 1x1 spatial extent with `in_c` inputs. `inputs` names the
/// producing layers when the layer does not simply consume its predecessor:
/// several producers are concatenated along channels, except for element-wise
/// layers where every producer must match the input shape.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub in_h: u64,
    pub in_w: u64,
    pub in_c: u64,
    pub out_c: u64,
    pub filter_h: u64,
    pub filter_w: u64,
    pub stride: u64,
    pub pad_h: u64,
    pub pad_w: u64,
    /// Convolution groups; 1 for everything but grouped convolutions.
    pub groups: u64,
    pub sparsity: f64,
    pub is_first: bool,
    pub inputs: Vec<String>,
}

impl LayerSpec {
    fn base(name: &str, kind: LayerKind, input: [u64; 3], out_c: u64) -> Self {
        LayerSpec {
            name: name.to_string(),
            kind,
            in_h: input[0],
            in_w: input[1],
            in_c: input[2],
            out_c,
            filter_h: 1,
            filter_w: 1,
            stride: 1,
            pad_h: 0,
            pad_w: 0,
            groups: 1,
            sparsity: if kind.is_compute() { DEFAULT_SPARSITY } else { 0.0 },
            is_first: false,
            inputs: Vec::new(),
        }
    }

    pub fn conv(
        name: &str,
        input: [u64; 3],
        out_c: u64,
        filter: [u64; 2],
        stride: u64,
        pad: u64,
    ) -> Self {
        LayerSpec {
            filter_h: filter[0],
            filter_w: filter[1],
            stride,
            pad_h: pad,
            pad_w: pad,
            ..Self::base(name, LayerKind::Conv, input, out_c)
        }
    }

    pub fn depthwise(name: &str, input: [u64; 3], filter: [u64; 2], stride: u64, pad: u64) -> Self {
        LayerSpec {
            filter_h: filter[0],
            filter_w: filter[1],
            stride,
            pad_h: pad,
            pad_w: pad,
            ..Self::base(name, LayerKind::DepthwiseConv, input, input[2])
        }
    }

    pub fn fully_connected(name: &str, in_features: u64, out_features: u64) -> Self {
        Self::base(name, LayerKind::FullyConnected, [1, 1, in_features], out_features)
    }

    pub fn pool(name: &str, input: [u64; 3], window: [u64; 2], stride: u64) -> Self {
        LayerSpec {
            filter_h: window[0],
            filter_w: window[1],
            stride,
            ..Self::base(name, LayerKind::Pool, input, input[2])
        }
    }

    pub fn elementwise(name: &str, input: [u64; 3]) -> Self {
        Self::base(name, LayerKind::ElementWise, input, input[2])
    }

    pub fn with_sparsity(mut self, sparsity: f64) -> Self {
        self.sparsity = sparsity;
        self
    }

    pub fn with_padding(mut self, pad_h: u64, pad_w: u64) -> Self {
        self.pad_h = pad_h;
        self.pad_w = pad_w;
        self
    }

    pub fn with_groups(mut self, groups: u64) -> Self {
        self.groups = groups;
        self
    }

    pub fn with_inputs<S: AsRef<str>>(mut self, inputs: &[S]) -> Self {
        self.inputs = inputs.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    pub fn first(mut self) -> Self {
        self.is_first = true;
        self
    }

    pub fn out_h(&self) -> u64 {
        out_extent(self.in_h, self.pad_h, self.filter_h, self.stride)
    }

    pub fn out_w(&self) -> u64 {
        out_extent(self.in_w, self.pad_w, self.filter_w, self.stride)
    }

    pub fn out_shape(&self) -> [u64; 3] {
        [self.out_h(), self.out_w(), self.out_c]
    }

    pub fn is_compute(&self) -> bool {
        self.kind.is_compute()
    }

    pub fn taps(&self) -> u64 {
        self.filter_h * self.filter_w
    }

    /// Input channels feeding one output channel.
    pub fn in_c_per_group(&self) -> u64 {
        match self.kind {
            LayerKind::DepthwiseConv => 1,
            _ => self.in_c / self.groups.max(1),
        }
    }

    pub fn out_c_per_group(&self) -> u64 {
        self.out_c / self.groups.max(1)
    }

    /// Checks the per-layer shape invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidLayer {
            layer: self.name.clone(),
            reason,
        };
        for (field, value) in [
            ("in_h", self.in_h),
            ("in_w", self.in_w),
            ("in_c", self.in_c),
            ("out_c", self.out_c),
            ("filter_h", self.filter_h),
            ("filter_w", self.filter_w),
            ("stride", self.stride),
            ("groups", self.groups),
        ] {
            if value == 0 {
                return Err(bad(format!("{field} must be positive")));
            }
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(bad(format!("sparsity {} outside [0, 1]", self.sparsity)));
        }
        if self.in_h + 2 * self.pad_h < self.filter_h || self.in_w + 2 * self.pad_w < self.filter_w {
            return Err(bad(format!(
                "filter {}x{} does not fit the padded {}x{} input",
                self.filter_h, self.filter_w, self.in_h, self.in_w
            )));
        }
        if self.groups > 1 {
            if self.kind != LayerKind::Conv {
                return Err(bad("only convolutions may be grouped".into()));
            }
            if !self.in_c.is_multiple_of(self.groups) || !self.out_c.is_multiple_of(self.groups) {
                return Err(bad(format!(
                    "groups {} must divide in_c {} and out_c {}",
                    self.groups, self.in_c, self.out_c
                )));
            }
        }
        match self.kind {
            LayerKind::DepthwiseConv | LayerKind::Pool | LayerKind::ElementWise
                if self.out_c != self.in_c =>
            {
                Err(bad(format!(
                    "{} layers require out_c == in_c (got {} and {})",
                    self.kind, self.out_c, self.in_c
                )))
            }
            LayerKind::FullyConnected
                if self.in_h != 1
                    || self.in_w != 1
                    || self.filter_h != 1
                    || self.filter_w != 1
                    || self.stride != 1
                    || self.pad_h != 0
                    || self.pad_w != 0 =>
            {
                Err(bad(
                    "fully-connected layers use a 1x1 input, 1x1 filter, stride 1 and no padding"
                        .into(),
                ))
            }
            LayerKind::ElementWise
                if self.filter_h != 1 || self.filter_w != 1 || self.stride != 1 =>
            {
                Err(bad("element-wise layers use a 1x1 window and stride 1".into()))
            }
            _ => Ok(()),
        }
    }
}

fn out_extent(input: u64, pad: u64, filter: u64, stride: u64) -> u64 {
    let padded = input + 2 * pad;
    if padded < filter || stride == 0 {
        0
    } else {
        (padded - filter) / stride + 1
    }
}

/// A validated, ordered list of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    /// Builds a network and checks every per-layer and chaining invariant.
    pub fn new(name: impl Into<String>, layers: Vec<LayerSpec>) -> Result<Self> {
        let net = NetworkSpec {
            name: name.into(),
            layers,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.validate()?;
            if index.insert(layer.name.as_str(), i).is_some() {
                return Err(Error::InvalidLayer {
                    layer: layer.name.clone(),
                    reason: "duplicate layer name".into(),
                });
            }
        }
        self.check_first_flag()?;
        for (i, layer) in self.layers.iter().enumerate() {
            let sources: Vec<&LayerSpec> = if layer.inputs.is_empty() {
                match i.checked_sub(1) {
                    Some(prev) => vec![&self.layers[prev]],
                    None => continue,
                }
            } else {
                let mut v = Vec::with_capacity(layer.inputs.len());
                for src in &layer.inputs {
                    match index.get(src.as_str()) {
                        Some(&j) if j < i => v.push(&self.layers[j]),
                        Some(_) => {
                            return Err(Error::InvalidLayer {
                                layer: layer.name.clone(),
                                reason: format!("input '{src}' is not an earlier layer"),
                            })
                        }
                        None => {
                            return Err(Error::InvalidLayer {
                                layer: layer.name.clone(),
                                reason: format!("unknown input layer '{src}'"),
                            })
                        }
                    }
                }
                v
            };
            check_chain(&sources, layer)?;
        }
        Ok(())
    }

    fn check_first_flag(&self) -> Result<()> {
        let flagged: Vec<&LayerSpec> = self.layers.iter().filter(|l| l.is_first).collect();
        match flagged.as_slice() {
            [] => Ok(()),
            [only] => {
                let first_conv = self.layers.iter().find(|l| l.kind == LayerKind::Conv);
                match first_conv {
                    Some(conv) if conv.name == only.name => Ok(()),
                    _ => Err(Error::InvalidLayer {
                        layer: only.name.clone(),
                        reason: "is_first may only mark the network's first convolution".into(),
                    }),
                }
            }
            [_, second, ..] => Err(Error::InvalidLayer {
                layer: second.name.clone(),
                reason: "more than one layer is marked is_first".into(),
            }),
        }
    }

    pub fn layer(&self, name: &str) -> Option<&LayerSpec> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn compute_layers(&self) -> impl Iterator<Item = &LayerSpec> {
        self.layers.iter().filter(|l| l.is_compute())
    }

    pub fn total_macs(&self) -> u64 {
        self.layers.iter().map(mac_count).sum()
    }
}

fn check_chain(sources: &[&LayerSpec], layer: &LayerSpec) -> Result<()> {
    let mismatch = |src: &LayerSpec, detail: String| Error::ChainMismatch {
        producer: src.name.clone(),
        consumer: layer.name.clone(),
        detail,
    };
    let expected = [layer.in_h, layer.in_w, layer.in_c];

    if layer.kind == LayerKind::ElementWise {
        for src in sources {
            if src.out_shape() != expected {
                return Err(mismatch(
                    src,
                    format!("produces {:?}, consumer expects {:?}", src.out_shape(), expected),
                ));
            }
        }
        return Ok(());
    }

    // Fully-connected layers flatten whatever they consume.
    if layer.kind == LayerKind::FullyConnected {
        let total: u64 = sources.iter().map(|s| s.out_shape().iter().product::<u64>()).sum();
        if total != layer.in_c {
            return Err(mismatch(
                sources[sources.len() - 1],
                format!("produces {total} features, consumer expects {}", layer.in_c),
            ));
        }
        return Ok(());
    }

    let mut channels = 0;
    for src in sources {
        let [h, w, c] = src.out_shape();
        if (h, w) != (layer.in_h, layer.in_w) {
            return Err(mismatch(
                src,
                format!(
                    "produces {h}x{w} feature maps, consumer expects {}x{}",
                    layer.in_h, layer.in_w
                ),
            ));
        }
        channels += c;
    }
    if channels != layer.in_c {
        return Err(mismatch(
            sources[sources.len() - 1],
            format!("produces {channels} channels, consumer expects {}", layer.in_c),
        ));
    }
    Ok(())
}

pub fn classify_layer(layer: &LayerSpec) -> LayerCategory {
    match layer.kind {
        LayerKind::Conv if layer.is_first => LayerCategory::Conv1,
        LayerKind::Conv if layer.filter_h == 1 && layer.filter_w == 1 => LayerCategory::Pointwise,
        LayerKind::Conv => LayerCategory::FxF,
        LayerKind::DepthwiseConv => LayerCategory::Depthwise,
        LayerKind::FullyConnected | LayerKind::Pool | LayerKind::ElementWise => LayerCategory::Other,
    }
}

/// Dense multiply-accumulate count of one layer.
pub fn mac_count(layer: &LayerSpec) -> u64 {
    let spatial = layer.out_h() * layer.out_w();
    match layer.kind {
        LayerKind::Conv => spatial * layer.out_c * layer.in_c_per_group() * layer.taps(),
        LayerKind::DepthwiseConv => spatial * layer.in_c * layer.taps(),
        LayerKind::FullyConnected => layer.in_c * layer.out_c,
        LayerKind::Pool | LayerKind::ElementWise => 0,
    }
}

/// Percentage of the network's MACs falling in each category. All five
/// categories are present; the values sum to 100 unless the network has no
/// MACs at all, in which case every entry is zero.
pub fn mac_proportions(net: &NetworkSpec) -> BTreeMap<LayerCategory, f64> {
    let mut sums: BTreeMap<LayerCategory, u64> =
        LayerCategory::ALL.iter().map(|&c| (c, 0)).collect();
    for layer in &net.layers {
        *sums.get_mut(&classify_layer(layer)).unwrap() += mac_count(layer);
    }
    let total: u64 = sums.values().sum();
    sums.into_iter()
        .map(|(cat, macs)| {
            let pct = if total == 0 {
                0.0
            } else {
                macs as f64 * 100.0 / total as f64
            };
            (cat, pct)
        })
        .collect()
}

/// Bytes of input, weights and output a layer touches once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Footprint {
    pub input_bytes: u64,
    pub weight_bytes: u64,
    pub output_bytes: u64,
}

impl Footprint {
    pub fn total(&self) -> u64 {
        self.input_bytes + self.weight_bytes + self.output_bytes
    }
}

pub fn layer_footprint_bytes(layer: &LayerSpec, bytes_per_element: u64) -> Footprint {
    let b = bytes_per_element;
    // An element-wise layer reads one full tensor per operand.
    let operands = match layer.kind {
        LayerKind::ElementWise => layer.inputs.len().max(1) as u64,
        _ => 1,
    };
    let weights = match layer.kind {
        LayerKind::Conv | LayerKind::FullyConnected => {
            layer.taps() * layer.in_c_per_group() * layer.out_c
        }
        LayerKind::DepthwiseConv => layer.taps() * layer.in_c,
        LayerKind::Pool | LayerKind::ElementWise => 0,
    };
    Footprint {
        input_bytes: operands * layer.in_h * layer.in_w * layer.in_c * b,
        weight_bytes: weights * b,
        output_bytes: layer.out_h() * layer.out_w() * layer.out_c * b,
    }
}
