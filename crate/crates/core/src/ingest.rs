//! Hidden-state records, stream manifests and sentence-level pooling.
//!
//! A stream is one ISOB-R file holding the token matrices of a single
//! [`GroupKey`]. The key lives in JSON next to the binary, either as a
//! sidecar object per stream or as a `{"streams": [...]}` set:
//!
//! ```json
//! {"path": "dec_L6_en-ru.isobr", "model_type": "multilingual",
//!  "dataset_tag": "wmt-large", "source_lang": "en", "target_lang": "ru",
//!  "side": "dec", "layer": 6, "count": 2993}
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{IsoError, Result};
use crate::format::{Dtype, RecordReader, RecordWriter};
use crate::group::{GroupKey, TargetLang};

/// One sentence's non-padding token states for one [`GroupKey`].
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStateRecord {
    pub sentence_id: u64,
    dim: usize,
    /// `T × dim`, row-major, in token order.
    tokens: Vec<f64>,
    pub key: Arc<GroupKey>,
}

impl HiddenStateRecord {
    pub fn new(sentence_id: u64, dim: usize, tokens: Vec<f64>, key: Arc<GroupKey>) -> Result<Self> {
        if dim == 0 || tokens.len() % dim != 0 {
            return Err(IsoError::InvalidDimension(format!(
                "sentence {sentence_id}: {} values do not form rows of dimension {dim}",
                tokens.len()
            )));
        }
        if tokens.iter().any(|v| !v.is_finite()) {
            return Err(IsoError::InvalidData {
                sentence_id,
                reason: "non-finite token value".into(),
            });
        }
        Ok(Self {
            sentence_id,
            dim,
            tokens,
            key,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len() / self.dim
    }

    pub fn tokens(&self) -> &[f64] {
        &self.tokens
    }
}

/// Mean of the record's token vectors.
pub fn mean_pool(record: &HiddenStateRecord) -> Result<Vec<f64>> {
    let t = record.token_count();
    if t == 0 {
        return Err(IsoError::EmptyRecord {
            sentence_id: record.sentence_id,
        });
    }
    let mut sum = vec![0.0; record.dim];
    for token in record.tokens.chunks_exact(record.dim) {
        for (s, v) in sum.iter_mut().zip(token) {
            *s += v;
        }
    }
    Ok(sum.into_iter().map(|s| s / t as f64).collect())
}

/// Manifest entry describing one ISOB-R stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(flatten)]
    pub key: GroupKey,
    pub count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestSet {
    pub streams: Vec<StreamManifest>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestFile {
    Set(ManifestSet),
    Single(StreamManifest),
}

/// Reads a manifest (set or single sidecar) and resolves stream paths. A
/// sidecar without `path` refers to the file named like the manifest minus
/// its `.json` suffix.
pub fn read_manifest(path: &Path) -> Result<Vec<StreamManifest>> {
    let text = fs::read_to_string(path)?;
    let parsed: ManifestFile = serde_json::from_str(&text)
        .map_err(|e| IsoError::InvalidManifest(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = match parsed {
        ManifestFile::Set(set) => set.streams,
        ManifestFile::Single(mut one) => {
            if one.path.is_none() {
                one.path = Some(path.with_extension(""));
            }
            vec![one]
        }
    };
    for (i, e) in entries.iter_mut().enumerate() {
        e.key.validate()?;
        let p = e.path.take().ok_or_else(|| {
            IsoError::InvalidManifest(format!("{}: stream #{i} has no path", path.display()))
        })?;
        e.path = Some(if p.is_absolute() { p } else { base.join(p) });
    }
    Ok(entries)
}

pub fn write_manifest(path: &Path, streams: &[StreamManifest]) -> Result<()> {
    let set = ManifestSet {
        streams: streams.to_vec(),
    };
    let text = serde_json::to_string_pretty(&set).map_err(|e| IsoError::Io(e.into()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// All records of one stream, in file order.
#[derive(Debug, Clone)]
pub struct Stream {
    pub key: Arc<GroupKey>,
    pub dim: usize,
    pub records: Vec<HiddenStateRecord>,
}

impl Stream {
    /// Wraps pre-pooled rows as single-token records with the given ids.
    pub fn from_cloud(key: GroupKey, cloud: &PointCloud, ids: &[u64]) -> Result<Self> {
        if ids.len() != cloud.len() {
            return Err(IsoError::InvalidDimension(format!(
                "{} ids for {} rows",
                ids.len(),
                cloud.len()
            )));
        }
        let key = Arc::new(key);
        let records = cloud
            .rows()
            .zip(ids)
            .map(|(row, id)| HiddenStateRecord::new(*id, cloud.dim(), row, key.clone()))
            .collect::<Result<_>>()?;
        Ok(Self {
            key,
            dim: cloud.dim(),
            records,
        })
    }
}

/// Reads one ISOB-R stream and tags every record with `key`.
pub fn read_record_stream(path: &Path, key: GroupKey) -> Result<Stream> {
    let reader = RecordReader::open(path)?;
    let dim = reader.dim();
    let key = Arc::new(key);
    let mut records = Vec::new();
    for raw in reader {
        let raw = raw?;
        records.push(HiddenStateRecord::new(
            raw.sentence_id,
            dim,
            raw.values,
            key.clone(),
        )?);
    }
    Ok(Stream { key, dim, records })
}

/// Loads every stream a manifest lists, checking declared record counts.
pub fn load_streams(manifest: &Path) -> Result<Vec<Stream>> {
    read_manifest(manifest)?
        .into_iter()
        .map(|entry| {
            let path = entry.path.expect("resolved by read_manifest");
            let stream = read_record_stream(&path, entry.key)?;
            if stream.records.len() as u64 != entry.count {
                return Err(IsoError::InvalidManifest(format!(
                    "{}: manifest declares {} records, file holds {}",
                    path.display(),
                    entry.count,
                    stream.records.len()
                )));
            }
            Ok(stream)
        })
        .collect()
}

/// Writes a stream as ISOB-R and returns its manifest entry (path relative
/// to `dir`).
pub fn write_record_stream(
    dir: &Path,
    file_name: &str,
    stream: &Stream,
    dtype: Dtype,
) -> Result<StreamManifest> {
    let path = dir.join(file_name);
    let mut w = RecordWriter::create(&path, dtype, stream.dim)?;
    for r in &stream.records {
        w.write_record(r.sentence_id, r.tokens())?;
    }
    w.finish()?;
    Ok(StreamManifest {
        path: Some(PathBuf::from(file_name)),
        key: (*stream.key).clone(),
        count: stream.records.len() as u64,
    })
}

/// Records matching `selector`, ordered by (sentence id, target language).
pub fn select_records<'a>(
    records: impl IntoIterator<Item = &'a HiddenStateRecord>,
    selector: &GroupKey,
) -> Vec<&'a HiddenStateRecord> {
    let mut out: Vec<_> = records
        .into_iter()
        .filter(|r| selector.matches(&r.key))
        .collect();
    out.sort_by(|a, b| {
        a.sentence_id
            .cmp(&b.sentence_id)
            .then_with(|| a.key.target_lang.cmp(&b.key.target_lang))
    });
    out
}

/// One mean-pooled row per record matching `selector`.
pub fn assemble_cloud<'a>(
    records: impl IntoIterator<Item = &'a HiddenStateRecord>,
    selector: &GroupKey,
) -> Result<PointCloud> {
    pool_selected(&select_records(records, selector), selector)
}

fn pool_selected(selected: &[&HiddenStateRecord], selector: &GroupKey) -> Result<PointCloud> {
    if selected.len() < 2 {
        return Err(IsoError::InsufficientData {
            selector: selector.to_string(),
            found: selected.len(),
        });
    }
    let dim = selected[0].dim();
    if let Some(r) = selected.iter().find(|r| r.dim() != dim) {
        return Err(IsoError::InvalidDimension(format!(
            "{}: record {} has dimension {}, expected {dim}",
            selector,
            r.sentence_id,
            r.dim()
        )));
    }
    let rows = selected
        .iter()
        .map(|r| mean_pool(r))
        .collect::<Result<Vec<_>>>()?;
    PointCloud::from_rows(&rows)
}

/// UNION cloud with every target language subsampled (seeded, without
/// replacement) to the size of the smallest one.
pub fn assemble_balanced_union<'a>(
    records: impl IntoIterator<Item = &'a HiddenStateRecord>,
    selector: &GroupKey,
    seed: u64,
) -> Result<PointCloud> {
    let selected = select_records(records, &selector.with_target(TargetLang::Union));
    let mut by_lang: BTreeMap<&TargetLang, Vec<&HiddenStateRecord>> = BTreeMap::new();
    for r in &selected {
        by_lang.entry(&r.key.target_lang).or_default().push(r);
    }
    let Some(smallest) = by_lang.values().map(Vec::len).min() else {
        return pool_selected(&[], selector);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::new();
    for group in by_lang.values() {
        let mut picks = index::sample(&mut rng, group.len(), smallest).into_vec();
        picks.sort_unstable();
        kept.extend(picks.into_iter().map(|i| group[i]));
    }
    kept.sort_by(|a, b| {
        a.sentence_id
            .cmp(&b.sentence_id)
            .then_with(|| a.key.target_lang.cmp(&b.key.target_lang))
    });
    pool_selected(&kept, selector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{ModelType, Side};

    fn key(target: &str) -> GroupKey {
        GroupKey {
            model_type: ModelType::Multilingual,
            dataset_tag: "toy".into(),
            source_lang: "en".into(),
            target_lang: TargetLang::lang(target),
            side: Side::Decoder,
            layer: 2,
        }
    }

    fn record(id: u64, tokens: &[f64], target: &str) -> HiddenStateRecord {
        HiddenStateRecord::new(id, 2, tokens.to_vec(), Arc::new(key(target))).unwrap()
    }

    #[test]
    fn pooling_examples() {
        assert_eq!(
            mean_pool(&record(0, &[1.0, 3.0, 3.0, 5.0], "ru")).unwrap(),
            vec![2.0, 4.0]
        );
        assert_eq!(mean_pool(&record(0, &[7.0, -1.0], "ru")).unwrap(), vec![7.0, -1.0]);
        assert_eq!(
            mean_pool(&record(0, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0], "ru")).unwrap(),
            vec![0.0, 0.0]
        );
        assert!(matches!(
            mean_pool(&record(4, &[], "ru")),
            Err(IsoError::EmptyRecord { sentence_id: 4 })
        ));
    }

    fn mixed_stream() -> Vec<HiddenStateRecord> {
        let mut out = Vec::new();
        for i in 0..5u64 {
            let x = i as f64;
            out.push(record(i, &[x, 1.0, x + 1.0, 0.0], "ru"));
            out.push(record(i, &[-x, x * x, 0.5, 2.0], "zh"));
        }
        out
    }

    #[test]
    fn selection_and_union() {
        let recs = mixed_stream();
        let ru = assemble_cloud(&recs, &key("ru")).unwrap();
        assert_eq!(ru.len(), 5);
        assert_eq!(ru.row(3), vec![3.5, 0.5]);
        let union = assemble_cloud(&recs, &key("ru").with_target(TargetLang::Union)).unwrap();
        assert_eq!(union.len(), 10);
        let missing = assemble_cloud(&recs, &key("ru").with_layer(9));
        assert!(matches!(
            missing,
            Err(IsoError::InsufficientData { found: 0, .. })
        ));
    }

    #[test]
    fn assembly_ignores_input_order() {
        let recs = mixed_stream();
        let mut rev = recs.clone();
        rev.reverse();
        let sel = key("x").with_target(TargetLang::Union);
        assert_eq!(
            assemble_cloud(&recs, &sel).unwrap(),
            assemble_cloud(&rev, &sel).unwrap()
        );
    }

    #[test]
    fn balanced_union_equalizes_languages() {
        let mut recs = mixed_stream();
        for i in 5..20u64 {
            recs.push(record(i, &[i as f64, 0.0], "ru"));
        }
        let sel = key("ru").with_target(TargetLang::Union);
        let full = assemble_cloud(&recs, &sel).unwrap();
        assert_eq!(full.len(), 25);
        let bal = assemble_balanced_union(&recs, &sel, 3).unwrap();
        assert_eq!(bal.len(), 10);
        assert_eq!(bal, assemble_balanced_union(&recs, &sel, 3).unwrap());
    }

    #[test]
    fn manifest_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let stream = Stream {
            key: Arc::new(key("ru")),
            dim: 2,
            records: mixed_stream().into_iter().filter(|r| r.key.target_lang == TargetLang::lang("ru")).collect(),
        };
        let entry = write_record_stream(dir.path(), "ru.isobr", &stream, Dtype::F64).unwrap();
        let set_path = dir.path().join("set.json");
        write_manifest(&set_path, std::slice::from_ref(&entry)).unwrap();
        let loaded = load_streams(&set_path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].records, stream.records);

        // Sidecar without a path names its sibling.
        let sidecar = dir.path().join("ru.isobr.json");
        let mut single = entry.clone();
        single.path = None;
        fs::write(&sidecar, serde_json::to_string(&single).unwrap()).unwrap();
        assert_eq!(load_streams(&sidecar).unwrap()[0].records.len(), 5);

        // Count mismatch is reported.
        let mut bad = entry;
        bad.count = 6;
        write_manifest(&set_path, &[bad]).unwrap();
        assert!(matches!(load_streams(&set_path), Err(IsoError::InvalidManifest(_))));
    }
}
