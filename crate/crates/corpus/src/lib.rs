//! Rule-based cleaning for line-aligned parallel corpora.
//!
//! ```no_run
//! use isoscope_corpus::{FilterConfig, Pipeline, ScriptTable, WhitespacePunctTokenizer};
//!
//! let config = FilterConfig::default();
//! let scripts = ScriptTable::default();
//! let pipeline = Pipeline {
//!     config: &config,
//!     src_lang: "en",
//!     tgt_lang: "ru",
//!     scripts: &scripts,
//!     tokenizer: &WhitespacePunctTokenizer,
//!     external: None,
//! };
//! let out = pipeline.run(&["Hello there."], &["Привет."]).unwrap();
//! assert_eq!(out.stats.kept, 1);
//! ```

mod config;
mod error;
mod pipeline;
mod rules;

pub use config::{DedupMode, FilterConfig};
pub use error::{CorpusError, Result};
pub use pipeline::{
    deduplicate, find_duplicates, render_rejected, run_files, CorpusPair, ExternalVerdicts,
    FilterStats, OutputFiles, Pipeline, PipelineOutput, StepCounts,
};
pub use rules::{
    filter_length, filter_punctuation, filter_script, foreign_script_ratio, is_punctuation,
    punctuation_ratio, Reason, ScriptTable, Side, Step, TokenCounter, Verdict,
    WhitespacePunctTokenizer,
};
