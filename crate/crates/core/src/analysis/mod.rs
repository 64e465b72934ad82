//! Bilingual vs. multilingual comparisons built from hidden-state streams.

mod compare;
mod delta;
pub mod emit;
mod layerwise;
mod report;
mod spectrum;

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::baselines;
use crate::error::{IsoError, Result};
use crate::group::{GroupKey, Side, TargetLang};
use crate::ingest::{self, HiddenStateRecord, Stream};
use crate::isoscore;

pub use compare::compare_models;
pub use delta::{delta_isoscore, DeltaEntry, DeltaReport};
pub use emit::{emit_report, render_csv, render_json, OutputFormat, PlotKind, PlotSeries, Tabular};
pub use layerwise::{layerwise_isotropy, LangScore, LayerRow, LayerwiseReport};
pub use report::{IsotropyReport, ReportRow};
pub use spectrum::{spectrum_overlay, spectrum_overlay_clouds, SpectrumEntry, SpectrumOverlay};

/// Version of the JSON report schemas.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Union clouds whose largest language exceeds the smallest by more than
/// this factor are flagged.
pub const UNION_IMBALANCE_RATIO: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineOptions {
    pub sample_pairs: usize,
    pub seed: u64,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        Self {
            sample_pairs: baselines::DEFAULT_SAMPLE_PAIRS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AnalysisOptions {
    /// Compute average cosine and partition scores next to IsoScore.
    pub baselines: Option<BaselineOptions>,
    /// Subsample every language to the smallest before pooling UNION
    /// clouds, with this seed.
    pub balanced_union_seed: Option<u64>,
}

fn all_records(streams: &[Stream]) -> impl Iterator<Item = &HiddenStateRecord> + Clone {
    streams.iter().flat_map(|s| s.records.iter())
}

/// The single (model, dataset, source) template shared by the streams at
/// this side and layer, with its target languages.
fn stream_template(
    streams: &[Stream],
    side: Side,
    layer: u32,
) -> Result<(GroupKey, Vec<TargetLang>)> {
    let matching: Vec<&GroupKey> = streams
        .iter()
        .map(|s| s.key.as_ref())
        .filter(|k| k.side == side && k.layer == layer && !k.target_lang.is_union())
        .collect();
    let Some(first) = matching.first() else {
        return Err(IsoError::InsufficientData {
            selector: format!("{side}/L{layer}"),
            found: 0,
        });
    };
    if let Some(other) = matching.iter().find(|k| {
        k.model_type != first.model_type
            || k.dataset_tag != first.dataset_tag
            || k.source_lang != first.source_lang
    }) {
        return Err(IsoError::InvalidManifest(format!(
            "streams mix {first} and {other}; pass one model and source language at a time"
        )));
    }
    let langs: BTreeSet<TargetLang> = matching.iter().map(|k| k.target_lang.clone()).collect();
    Ok(((*first).clone(), langs.into_iter().collect()))
}

/// Per-language record counts for `key` (a UNION selector).
fn language_sizes(streams: &[Stream], key: &GroupKey) -> Vec<usize> {
    let mut sizes = std::collections::BTreeMap::<&TargetLang, usize>::new();
    for r in all_records(streams).filter(|r| key.matches(&r.key)) {
        *sizes.entry(&r.key.target_lang).or_default() += 1;
    }
    sizes.into_values().collect()
}

fn imbalanced(sizes: &[usize]) -> bool {
    match (sizes.iter().min(), sizes.iter().max()) {
        (Some(&lo), Some(&hi)) if lo > 0 => hi as f64 > UNION_IMBALANCE_RATIO * lo as f64,
        _ => false,
    }
}

/// Scores one group; UNION keys honor the balanced-subsample option.
fn score_group(streams: &[Stream], key: &GroupKey, opts: &AnalysisOptions) -> Result<ReportRow> {
    let records = all_records(streams);
    let cloud = match (key.target_lang.is_union(), opts.balanced_union_seed) {
        (true, Some(seed)) => ingest::assemble_balanced_union(records, key, seed)?,
        _ => ingest::assemble_cloud(records, key)?,
    };
    let iso = isoscore::isoscore(&cloud)?;
    let baselines = opts
        .baselines
        .map(|b| baselines::baselines(&cloud, b.sample_pairs, b.seed))
        .transpose()?;
    let size_imbalance = key.target_lang.is_union() && imbalanced(&language_sizes(streams, key));
    Ok(ReportRow {
        key: key.clone(),
        iso,
        baselines,
        count: cloud.len(),
        low_sample: isoscore::is_low_sample(cloud.len(), cloud.dim()),
        higher: None,
        size_imbalance,
    })
}

/// Scores independent groups in parallel, returning rows in input order.
fn score_groups(jobs: &[(&[Stream], GroupKey)], opts: &AnalysisOptions) -> Result<Vec<ReportRow>> {
    jobs.par_iter()
        .map(|(streams, key)| score_group(streams, key, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
