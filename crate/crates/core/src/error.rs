//! Error types shared across the crate.

use thiserror::Error;

/// Configuration and validation failures. Messages carry the offending key
/// path so CLI users can locate the problem in their scenario file.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
    #[error("unknown or malformed configuration: {0}")]
    Parse(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }
}

/// Runtime failures inside a simulation replication.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    /// No admissible storage slot remained for an arriving pallet.
    #[error("storage full: no admissible slot for class {class} (zone searched: {zone})")]
    StorageFull { class: char, zone: String },
    /// A SKU was requested but no stored pallet of it exists.
    #[error("stock-out of sku {sku}")]
    StockOut { sku: u32 },
    /// No admissible path between two navigation nodes.
    #[error("unreachable: no admissible path from node {from} to node {to}")]
    Unreachable { from: u32, to: u32 },
    /// An event was scheduled before the current clock (logic bug).
    #[error("event scheduled in the past: t={t} < clock={clock}")]
    PastEvent { t: f64, clock: f64 },
}
