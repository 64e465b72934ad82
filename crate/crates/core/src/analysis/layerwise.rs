use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::emit::{PlotKind, PlotSeries, Tabular};
use super::{score_groups, stream_template, AnalysisOptions, REPORT_SCHEMA_VERSION};
use crate::error::{IsoError, Result};
use crate::group::{GroupKey, Side, TargetLang};
use crate::ingest::Stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangScore {
    pub target_lang: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRow {
    pub layer: u32,
    pub per_language: Vec<LangScore>,
    pub union: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerwiseReport {
    pub schema_version: u32,
    pub side: Side,
    pub rows: Vec<LayerRow>,
}

impl LayerwiseReport {
    pub fn language_trajectory(&self, lang: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.per_language.iter().find(|l| l.target_lang == lang))
            .map(|l| l.score)
            .collect()
    }

    pub fn union_trajectory(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.union).collect()
    }
}

/// Per-language and UNION IsoScores at each requested layer boundary, in
/// ascending layer order. `layers = None` takes every layer present.
pub fn layerwise_isotropy(
    multi: &[Stream],
    side: Side,
    layers: Option<&[u32]>,
    opts: &AnalysisOptions,
) -> Result<LayerwiseReport> {
    let present: BTreeSet<u32> = multi
        .iter()
        .filter(|s| s.key.side == side)
        .map(|s| s.key.layer)
        .collect();
    let wanted: BTreeSet<u32> = match layers {
        Some(ls) => ls.iter().copied().collect(),
        None => present.clone(),
    };
    if let Some(missing) = wanted.iter().find(|l| !present.contains(l)) {
        return Err(IsoError::MissingLayer(*missing));
    }

    let mut jobs: Vec<(&[Stream], GroupKey)> = Vec::new();
    let mut shape = Vec::new();
    for &layer in &wanted {
        let (template, langs) = stream_template(multi, side, layer)?;
        for l in &langs {
            jobs.push((multi, template.with_target(l.clone())));
        }
        jobs.push((multi, template.with_target(TargetLang::Union)));
        shape.push((layer, langs.len()));
    }
    let scored = score_groups(&jobs, opts)?;

    let mut rows = Vec::with_capacity(shape.len());
    let mut at = 0;
    for (layer, n_langs) in shape {
        let chunk = &scored[at..at + n_langs + 1];
        at += n_langs + 1;
        rows.push(LayerRow {
            layer,
            per_language: chunk[..n_langs]
                .iter()
                .map(|r| LangScore {
                    target_lang: r.key.target_lang.to_string(),
                    score: r.iso.score,
                })
                .collect(),
            union: chunk[n_langs].iso.score,
        });
    }
    Ok(LayerwiseReport {
        schema_version: REPORT_SCHEMA_VERSION,
        side,
        rows,
    })
}

impl Tabular for LayerwiseReport {
    fn stem(&self) -> &'static str {
        "layerwise"
    }

    fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn csv_header(&self) -> Vec<&'static str> {
        vec!["side", "layer", "target_lang", "isoscore"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        for r in &self.rows {
            for l in &r.per_language {
                out.push(vec![
                    self.side.to_string(),
                    r.layer.to_string(),
                    l.target_lang.clone(),
                    l.score.to_string(),
                ]);
            }
            out.push(vec![
                self.side.to_string(),
                r.layer.to_string(),
                TargetLang::Union.to_string(),
                r.union.to_string(),
            ]);
        }
        out
    }

    fn plot_series(&self) -> Vec<PlotSeries> {
        let mut langs: Vec<&str> = self
            .rows
            .iter()
            .flat_map(|r| r.per_language.iter().map(|l| l.target_lang.as_str()))
            .collect();
        langs.sort_unstable();
        langs.dedup();
        let series = |name: String, points: Vec<(String, f64)>| PlotSeries {
            name,
            kind: PlotKind::Line,
            x_label: "layer".into(),
            y_label: "isoscore".into(),
            semilog_y: false,
            points,
        };
        let mut out: Vec<PlotSeries> = langs
            .iter()
            .map(|lang| {
                let points = self
                    .rows
                    .iter()
                    .filter_map(|r| {
                        r.per_language
                            .iter()
                            .find(|l| l.target_lang == *lang)
                            .map(|l| (r.layer.to_string(), l.score))
                    })
                    .collect();
                series(format!("layerwise_{}_{lang}", self.side), points)
            })
            .collect();
        out.push(series(
            format!("layerwise_{}_union", self.side),
            self.rows.iter().map(|r| (r.layer.to_string(), r.union)).collect(),
        ));
        out
    }
}
