use serde::{Deserialize, Serialize};

use super::emit::{PlotKind, PlotSeries, Tabular};
use super::REPORT_SCHEMA_VERSION;
use crate::cloud::PointCloud;
use crate::error::{IsoError, Result};
use crate::geometry::{self, Spectrum};
use crate::group::Side;
use crate::ingest::{self, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub label: String,
    pub spectrum: Spectrum,
    pub min_max_ratio: f64,
    pub spectral_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOverlay {
    pub schema_version: u32,
    pub centered: bool,
    pub entries: Vec<SpectrumEntry>,
}

impl SpectrumOverlay {
    pub fn entry(&self, label: &str) -> Option<&SpectrumEntry> {
        self.entries.iter().find(|e| e.label == label)
    }
}

/// Spectra of labeled clouds, which must share one dimension.
pub fn spectrum_overlay_clouds(clouds: &[(String, PointCloud)], centered: bool) -> Result<SpectrumOverlay> {
    if let Some((_, first)) = clouds.first() {
        if let Some((label, c)) = clouds.iter().find(|(_, c)| c.dim() != first.dim()) {
            return Err(IsoError::InvalidDimension(format!(
                "{label} has dimension {}, expected {}",
                c.dim(),
                first.dim()
            )));
        }
    }
    let entries = clouds
        .iter()
        .map(|(label, cloud)| {
            let spectrum = geometry::svd_spectrum(cloud, centered)?;
            Ok(SpectrumEntry {
                label: label.clone(),
                min_max_ratio: spectrum.min_max_ratio(),
                spectral_entropy: spectrum.spectral_entropy(),
                spectrum,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SpectrumOverlay {
        schema_version: REPORT_SCHEMA_VERSION,
        centered,
        entries,
    })
}

/// Spectrum of every stream at `side`/`layer`, labeled by its group key.
pub fn spectrum_overlay(
    streams: &[Stream],
    side: Side,
    layer: u32,
    centered: bool,
) -> Result<SpectrumOverlay> {
    let clouds = streams
        .iter()
        .filter(|s| s.key.side == side && s.key.layer == layer)
        .map(|s| Ok((s.key.to_string(), ingest::assemble_cloud(&s.records, &s.key)?)))
        .collect::<Result<Vec<_>>>()?;
    if clouds.is_empty() {
        return Err(IsoError::InsufficientData {
            selector: format!("{side}/L{layer}"),
            found: 0,
        });
    }
    spectrum_overlay_clouds(&clouds, centered)
}

impl Tabular for SpectrumOverlay {
    fn stem(&self) -> &'static str {
        "spectrum"
    }

    fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn csv_header(&self) -> Vec<&'static str> {
        vec!["label", "index", "singular_value", "normalized"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.entries
            .iter()
            .flat_map(|e| {
                e.spectrum
                    .singular_values
                    .iter()
                    .zip(&e.spectrum.normalized)
                    .enumerate()
                    .map(|(i, (s, n))| {
                        vec![e.label.clone(), (i + 1).to_string(), s.to_string(), n.to_string()]
                    })
            })
            .collect()
    }

    fn plot_series(&self) -> Vec<PlotSeries> {
        self.entries
            .iter()
            .map(|e| PlotSeries {
                name: format!("spectrum_{}", e.label),
                kind: PlotKind::Line,
                x_label: "index".into(),
                y_label: "normalized_singular_value".into(),
                semilog_y: true,
                points: e
                    .spectrum
                    .normalized
                    .iter()
                    .enumerate()
                    .map(|(i, v)| ((i + 1).to_string(), *v))
                    .collect(),
            })
            .collect()
    }
}
