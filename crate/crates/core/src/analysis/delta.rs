use serde::{Deserialize, Serialize};

use super::emit::{PlotKind, PlotSeries, Tabular};
use super::{language_sizes, imbalanced, score_groups, stream_template, AnalysisOptions};
use super::REPORT_SCHEMA_VERSION;
use crate::error::{IsoError, Result};
use crate::group::{GroupKey, Side, TargetLang};
use crate::ingest::Stream;

/// Sign convention recorded in every delta report.
pub const DELTA_CONVENTION: &str = "per_language_minus_union";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEntry {
    pub side: Side,
    pub target_lang: String,
    pub iso_lang: f64,
    pub iso_union: f64,
    /// `iso_lang − iso_union`; positive means the union is less isotropic
    /// than the language on its own.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub schema_version: u32,
    pub convention: String,
    pub entries: Vec<DeltaEntry>,
    /// Sides whose union pooled languages of very different sizes.
    #[serde(default)]
    pub size_imbalance: Vec<Side>,
}

impl DeltaReport {
    /// Builds the report from already-computed scores.
    pub fn from_scores(side: Side, per_language: &[(String, f64)], iso_union: f64) -> Result<Self> {
        if per_language.len() < 2 {
            return Err(IsoError::InsufficientLanguages {
                found: per_language.iter().map(|(l, _)| l.clone()).collect(),
            });
        }
        let entries = per_language
            .iter()
            .map(|(lang, iso)| DeltaEntry {
                side,
                target_lang: lang.clone(),
                iso_lang: *iso,
                iso_union,
                delta: iso - iso_union,
            })
            .collect();
        Ok(Self {
            schema_version: REPORT_SCHEMA_VERSION,
            convention: DELTA_CONVENTION.into(),
            entries,
            size_imbalance: Vec::new(),
        })
    }

    pub fn merge(reports: Vec<DeltaReport>) -> Self {
        let mut out = Self {
            schema_version: REPORT_SCHEMA_VERSION,
            convention: DELTA_CONVENTION.into(),
            entries: Vec::new(),
            size_imbalance: Vec::new(),
        };
        for r in reports {
            out.entries.extend(r.entries);
            out.size_imbalance.extend(r.size_imbalance);
        }
        out
    }

    pub fn entry(&self, side: Side, lang: &str) -> Option<&DeltaEntry> {
        self.entries
            .iter()
            .find(|e| e.side == side && e.target_lang == lang)
    }
}

/// Per-language IsoScore minus UNION IsoScore for the multilingual streams
/// at one side and layer.
pub fn delta_isoscore(
    multi: &[Stream],
    side: Side,
    layer: u32,
    opts: &AnalysisOptions,
) -> Result<DeltaReport> {
    let (template, langs) = stream_template(multi, side, layer)?;
    if langs.len() < 2 {
        return Err(IsoError::InsufficientLanguages {
            found: langs.iter().map(|l| l.to_string()).collect(),
        });
    }
    let union_key = template.with_target(TargetLang::Union);
    let mut jobs: Vec<(&[Stream], GroupKey)> = langs
        .iter()
        .map(|l| (multi, template.with_target(l.clone())))
        .collect();
    jobs.push((multi, union_key.clone()));
    let rows = score_groups(&jobs, opts)?;
    let (union, per_lang) = rows.split_last().expect("union job present");
    let scores: Vec<(String, f64)> = per_lang
        .iter()
        .map(|r| (r.key.target_lang.to_string(), r.iso.score))
        .collect();
    let mut report = DeltaReport::from_scores(side, &scores, union.iso.score)?;
    if imbalanced(&language_sizes(multi, &union_key)) {
        report.size_imbalance.push(side);
    }
    Ok(report)
}

impl Tabular for DeltaReport {
    fn stem(&self) -> &'static str {
        "delta"
    }

    fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn csv_header(&self) -> Vec<&'static str> {
        vec!["side", "target_lang", "iso_lang", "iso_union", "delta"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.entries
            .iter()
            .map(|e| {
                vec![
                    e.side.to_string(),
                    e.target_lang.clone(),
                    e.iso_lang.to_string(),
                    e.iso_union.to_string(),
                    e.delta.to_string(),
                ]
            })
            .collect()
    }

    fn plot_series(&self) -> Vec<PlotSeries> {
        vec![PlotSeries {
            name: "delta_isoscore".into(),
            kind: PlotKind::Bar,
            x_label: "side/target_lang".into(),
            y_label: "delta_isoscore".into(),
            semilog_y: false,
            points: self
                .entries
                .iter()
                .map(|e| (format!("{}/{}", e.side, e.target_lang), e.delta))
                .collect(),
        }]
    }
}
