use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown language code {0:?}; add it to the script table")]
    UnknownLanguage(String),

    #[error("unknown Unicode script {script:?} for language {lang:?}")]
    UnknownScript { lang: String, script: String },

    #[error("source has {src_lines} lines but target has {tgt_lines}")]
    MisalignedBitext { src_lines: usize, tgt_lines: usize },

    #[error("external verdicts: {0}")]
    ExternalVerdicts(String),

    #[error("invalid filter config: {0}")]
    InvalidConfig(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl CorpusError {
    pub fn is_io(&self) -> bool {
        matches!(self, CorpusError::Io(_))
    }
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;
