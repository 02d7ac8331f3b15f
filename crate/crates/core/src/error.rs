use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed workload or hardware document.
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("empty network")]
    EmptyNetwork,

    #[error("unknown layer kind '{kind}' in layer '{layer}'")]
    UnknownKind { layer: String, kind: String },

    #[error("invalid layer '{layer}': {reason}")]
    InvalidLayer { layer: String, reason: String },

    /// Layer `consumer` does not accept the output of layer `producer`.
    #[error("shape chain mismatch between '{producer}' and '{consumer}': {detail}")]
    ChainMismatch {
        producer: String,
        consumer: String,
        detail: String,
    },

    #[error("invalid hardware configuration: {0}")]
    Config(String),

    #[error("layer '{layer}' ({kind}) is not supported by the {dataflow} dataflow")]
    Unsupported {
        layer: String,
        kind: String,
        dataflow: String,
    },

    #[error("no feasible tiling for layer '{layer}': {reason}")]
    Infeasible { layer: String, reason: String },

    #[error("tile lists differ in length: {compute} compute entries, {transfer} transfer entries")]
    LengthMismatch { compute: usize, transfer: usize },

    #[error("empty tile schedule")]
    EmptySchedule,

    #[error("no networks")]
    NoNetworks,

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Prefixes the message of a per-layer failure with the layer name when it
    /// does not already carry one.
    pub fn in_layer(self, layer: &str) -> Self {
        match self {
            Error::LengthMismatch { .. } | Error::EmptySchedule => Error::InvalidLayer {
                layer: layer.to_string(),
                reason: self.to_string(),
            },
            other => other,
        }
    }

    /// True for errors caused by a configuration that cannot be mapped, as
    /// opposed to malformed input.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible { .. } | Error::Unsupported { .. })
    }

    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        let text = err.to_string();
        // serde_json appends its own position; we report it separately.
        let message = match text.rfind(" at line ") {
            Some(idx) => text[..idx].to_string(),
            None => text,
        };
        Error::Syntax {
            line: err.line(),
            column: err.column(),
            message,
        }
    }
}
