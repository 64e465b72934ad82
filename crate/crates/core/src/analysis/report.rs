use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::emit::{PlotKind, PlotSeries, Tabular};
use super::REPORT_SCHEMA_VERSION;
use crate::baselines::BaselineResult;
use crate::error::{IsoError, Result};
use crate::group::GroupKey;
use crate::isoscore::IsoScoreResult;
use crate::TOOLKIT_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub key: GroupKey,
    pub iso: IsoScoreResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baselines: Option<BaselineResult>,
    /// Rows in the assembled cloud.
    pub count: usize,
    /// Fewer than ten observations per dimension.
    pub low_sample: bool,
    /// Whether this row beats its bilingual/multilingual counterpart.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub higher: Option<bool>,
    /// UNION row pooled from languages whose sizes differ by more than 2×.
    #[serde(default)]
    pub size_imbalance: bool,
}

/// IsoScores per group, one row per unique [`GroupKey`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotropyReport {
    pub schema_version: u32,
    pub toolkit_version: String,
    /// Left empty by default so identical inputs give identical bytes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub rows: Vec<ReportRow>,
}

impl IsotropyReport {
    pub fn new(rows: Vec<ReportRow>) -> Result<Self> {
        let mut seen = HashSet::new();
        if let Some(dup) = rows.iter().find(|r| !seen.insert(&r.key)) {
            return Err(IsoError::InvalidManifest(format!(
                "duplicate report row for {}",
                dup.key
            )));
        }
        Ok(Self {
            schema_version: REPORT_SCHEMA_VERSION,
            toolkit_version: TOOLKIT_VERSION.to_string(),
            generated_at: None,
            rows,
        })
    }

    pub fn row(&self, key: &GroupKey) -> Option<&ReportRow> {
        self.rows.iter().find(|r| &r.key == key)
    }

    /// Concatenates reports (e.g. one per side), rejecting duplicate keys.
    pub fn merge(reports: Vec<IsotropyReport>) -> Result<Self> {
        Self::new(reports.into_iter().flat_map(|r| r.rows).collect())
    }
}

fn opt_bool(b: Option<bool>) -> String {
    b.map(|v| v.to_string()).unwrap_or_default()
}

impl Tabular for IsotropyReport {
    fn stem(&self) -> &'static str {
        "isotropy"
    }

    fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "model_type",
            "dataset_tag",
            "source_lang",
            "target_lang",
            "side",
            "layer",
            "count",
            "isoscore",
            "phi",
            "delta",
            "avg_cosine",
            "partition_score",
            "low_sample",
            "higher",
            "size_imbalance",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.key.model_type.short().to_string(),
                    r.key.dataset_tag.clone(),
                    r.key.source_lang.clone(),
                    r.key.target_lang.to_string(),
                    r.key.side.to_string(),
                    r.key.layer.to_string(),
                    r.count.to_string(),
                    r.iso.score.to_string(),
                    r.iso.phi.to_string(),
                    r.iso.delta.to_string(),
                    r.baselines.map(|b| b.avg_cosine.to_string()).unwrap_or_default(),
                    r.baselines
                        .map(|b| b.partition_score.to_string())
                        .unwrap_or_default(),
                    r.low_sample.to_string(),
                    opt_bool(r.higher),
                    r.size_imbalance.to_string(),
                ]
            })
            .collect()
    }

    fn plot_series(&self) -> Vec<PlotSeries> {
        let mut sides: Vec<_> = self.rows.iter().map(|r| r.key.side).collect();
        sides.dedup();
        sides.sort();
        sides.dedup();
        sides
            .into_iter()
            .map(|side| PlotSeries {
                name: format!("isoscore_{side}"),
                kind: PlotKind::Bar,
                x_label: "group".into(),
                y_label: "isoscore".into(),
                semilog_y: false,
                points: self
                    .rows
                    .iter()
                    .filter(|r| r.key.side == side)
                    .map(|r| {
                        (
                            format!("{}/{}/L{}", r.key.model_type.short(), r.key.pair(), r.key.layer),
                            r.iso.score,
                        )
                    })
                    .collect(),
            })
            .collect()
    }
}
