//! Workload documents compiled into the library.

use super::{parse_network, NetworkSpec};
use crate::error::Result;

/// `(file name, document text)` for every bundled workload, in table order.
pub const BUNDLED: &[(&str, &str)] = &[
    ("alexnet.json", include_str!("../../workloads/alexnet.json")),
    ("squeezenet_v10.json", include_str!("../../workloads/squeezenet_v10.json")),
    ("squeezenet_v11.json", include_str!("../../workloads/squeezenet_v11.json")),
    ("mobilenet_224.json", include_str!("../../workloads/mobilenet_224.json")),
    ("tiny_darknet.json", include_str!("../../workloads/tiny_darknet.json")),
    ("squeezenext_23.json", include_str!("../../workloads/squeezenext_23.json")),
];

/// Bundled file names, in table order.
pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(name, _)| *name)
}

/// Source text of a bundled workload. Accepts the file name with or without
/// the `.json` extension.
pub fn bundled_source(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".json").unwrap_or(name);
    BUNDLED
        .iter()
        .find(|(file, _)| file.strip_suffix(".json") == Some(stem))
        .map(|(_, text)| *text)
}

/// Parses a bundled workload by name; `None` if no such file is bundled.
pub fn bundled_network(name: &str) -> Option<Result<NetworkSpec>> {
    bundled_source(name).map(parse_network)
}
