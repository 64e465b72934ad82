use std::io;

use thiserror::Error;

/// Errors raised by the isotropy toolkit.
#[derive(Debug, Error)]
pub enum IsoError {
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("record {sentence_id} has no tokens")]
    EmptyRecord { sentence_id: u64 },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt stream at byte {offset} (record #{record}): {reason}")]
    CorruptStream {
        record: u64,
        offset: u64,
        reason: String,
    },

    #[error("invalid data in record {sentence_id}: {reason}")]
    InvalidData { sentence_id: u64, reason: String },

    #[error("insufficient data for selector {selector}: {found} matching record(s), need at least 2")]
    InsufficientData { selector: String, found: usize },

    #[error(
        "misaligned evaluation for {pair}: sentence ids only in multilingual {only_multi:?}, only in bilingual {only_bi:?}"
    )]
    MisalignedEvaluation {
        pair: String,
        only_multi: Vec<u64>,
        only_bi: Vec<u64>,
    },

    #[error("need at least 2 target languages, found {found:?}")]
    InsufficientLanguages { found: Vec<String> },

    #[error("missing layer {0}")]
    MissingLayer(u32),

    #[error("report has no rows")]
    EmptyReport,

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl IsoError {
    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, IsoError::Io(_))
    }
}

pub type Result<T, E = IsoError> = std::result::Result<T, E>;
