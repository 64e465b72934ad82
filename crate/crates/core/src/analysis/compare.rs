use std::collections::BTreeSet;

use super::{all_records, score_groups, stream_template, AnalysisOptions, IsotropyReport};
use crate::error::{IsoError, Result};
use crate::group::{GroupKey, ModelType, Side, TargetLang};
use crate::ingest::Stream;

fn sentence_ids(streams: &[Stream], key: &GroupKey) -> BTreeSet<u64> {
    all_records(streams)
        .filter(|r| key.matches(&r.key))
        .map(|r| r.sentence_id)
        .collect()
}

fn stream_dim(streams: &[Stream], key: &GroupKey) -> Option<usize> {
    streams.iter().find(|s| key.matches(&s.key)).map(|s| s.dim)
}

/// IsoScores of a multilingual model against bilingual models on the same
/// sentences, for one side and layer.
///
/// Rows come out as (multi, bi) per target language in language order,
/// followed by the multilingual UNION row. `higher` marks the strictly
/// larger score of each pair; ties mark neither.
pub fn compare_models(
    multi: &[Stream],
    bi: &[Stream],
    side: Side,
    layer: u32,
    opts: &AnalysisOptions,
) -> Result<IsotropyReport> {
    let (multi_template, langs) = stream_template(multi, side, layer)?;
    if multi_template.model_type != ModelType::Multilingual {
        return Err(IsoError::InvalidManifest(format!(
            "{multi_template} is not a multilingual stream"
        )));
    }

    let mut jobs: Vec<(&[Stream], GroupKey)> = Vec::new();
    for lang in &langs {
        let multi_key = multi_template.with_target(lang.clone());
        let bi_key = bi
            .iter()
            .map(|s| s.key.as_ref())
            .find(|k| {
                k.model_type == ModelType::Bilingual
                    && k.side == side
                    && k.layer == layer
                    && k.source_lang == multi_key.source_lang
                    && &k.target_lang == lang
            })
            .cloned()
            .ok_or_else(|| IsoError::InsufficientData {
                selector: format!("bi/{}/{}/L{layer}", multi_key.pair(), side),
                found: 0,
            })?;

        let (md, bd) = (stream_dim(multi, &multi_key), stream_dim(bi, &bi_key));
        if md != bd {
            return Err(IsoError::InvalidDimension(format!(
                "{}: multilingual dimension {md:?} vs bilingual {bd:?}",
                multi_key.pair()
            )));
        }

        let (m_ids, b_ids) = (sentence_ids(multi, &multi_key), sentence_ids(bi, &bi_key));
        if m_ids != b_ids {
            return Err(IsoError::MisalignedEvaluation {
                pair: multi_key.pair(),
                only_multi: m_ids.difference(&b_ids).copied().collect(),
                only_bi: b_ids.difference(&m_ids).copied().collect(),
            });
        }
        jobs.push((multi, multi_key));
        jobs.push((bi, bi_key));
    }
    jobs.push((multi, multi_template.with_target(TargetLang::Union)));

    let mut rows = score_groups(&jobs, opts)?;
    for pair in rows[..2 * langs.len()].chunks_mut(2) {
        let (m, b) = (pair[0].iso.score, pair[1].iso.score);
        pair[0].higher = Some(m > b);
        pair[1].higher = Some(b > m);
    }
    IsotropyReport::new(rows)
}
