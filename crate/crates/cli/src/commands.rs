use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use isoscope::analysis::{
    self, emit_report, AnalysisOptions, BaselineOptions, DeltaReport, OutputFormat,
};
use isoscope::baselines::{self, DEFAULT_SAMPLE_PAIRS};
use isoscope::format::{self, Dtype, RecordReader};
use isoscope::geometry::Denominator;
use isoscope::ingest::{self, Stream};
use isoscope::isoscore::{is_low_sample, isoscore_with};
use isoscope::synth::{self, CloudSpec};
use isoscope::{PointCloud, Side};
use isoscope_corpus::{
    run_files, DedupMode, ExternalVerdicts, FilterConfig, Pipeline, ScriptTable, Step,
    WhitespacePunctTokenizer,
};

use crate::run_manifest::Context;

fn parse_side(s: &str) -> Result<Side, String> {
    s.parse().map_err(|e: isoscope::IsoError| e.to_string())
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: isoscope::IsoError| e.to_string())
}

fn parse_dtype(s: &str) -> Result<Dtype, String> {
    s.parse().map_err(|e: isoscope::IsoError| e.to_string())
}

fn parse_dedup(s: &str) -> Result<DedupMode, String> {
    match s {
        "pair" => Ok(DedupMode::Pair),
        "per-side" => Ok(DedupMode::PerSide),
        other => Err(format!("unknown dedup mode {other:?} (pair, per-side)")),
    }
}

fn score(v: f64) -> String {
    format!("{v:.6}")
}

/// Baseline metric flags shared by the scoring commands.
#[derive(Debug, Args, Serialize)]
pub struct BaselineFlags {
    /// Also compute average cosine similarity and partition isotropy.
    #[arg(long)]
    baselines: bool,
    /// Random pairs sampled for average cosine similarity.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_PAIRS)]
    pairs: usize,
    /// Seed for pair sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl BaselineFlags {
    fn options(&self) -> Option<BaselineOptions> {
        self.baselines.then_some(BaselineOptions {
            sample_pairs: self.pairs,
            seed: self.seed,
        })
    }
}

/// Report output flags shared by the analysis commands.
#[derive(Debug, Args, Serialize)]
pub struct ReportFlags {
    /// Directory for report files and the run manifest.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Report format: json, csv or plotdata.
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: OutputFormat,
}

impl ReportFlags {
    fn emit<R: analysis::Tabular>(&self, report: &R, ctx: &mut Context) -> Result<()> {
        if let Some(dir) = &self.out_dir {
            let written = emit_report(report, self.format, dir)?;
            ctx.outputs(written);
        }
        Ok(())
    }
}

fn load_manifest(path: &Path, ctx: &mut Context) -> Result<Vec<Stream>> {
    ctx.input(path)?;
    for entry in ingest::read_manifest(path)? {
        ctx.input(entry.path.as_deref().expect("resolved by read_manifest"))?;
    }
    ingest::load_streams(path).with_context(|| format!("loading {}", path.display()))
}

/// Highest layer present on `side`, used when no layer is given.
fn final_layer(streams: &[Stream], side: Side) -> Result<u32> {
    streams
        .iter()
        .filter(|s| s.key.side == side)
        .map(|s| s.key.layer)
        .max()
        .ok_or_else(|| anyhow::Error::new(isoscope::IsoError::InsufficientData {
            selector: side.to_string(),
            found: 0,
        }))
}

#[derive(Debug, Args, Serialize)]
pub struct IsoscoreArgs {
    /// Point cloud file (ISOB-M or headered CSV).
    #[arg(long)]
    input: PathBuf,
    /// Use the N covariance denominator instead of N−1.
    #[arg(long)]
    population: bool,
    #[command(flatten)]
    baselines: BaselineFlags,
    /// Directory for isoscore.json and the run manifest.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct IsoscoreOutput {
    schema_version: u32,
    isoscore: isoscope::IsoScoreResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    baselines: Option<baselines::BaselineResult>,
    low_sample: bool,
}

pub fn isoscore(args: &IsoscoreArgs, mut ctx: Context) -> Result<()> {
    ctx.input(&args.input)?;
    let cloud = format::load_cloud(&args.input)
        .with_context(|| format!("loading {}", args.input.display()))?;
    let denom = if args.population {
        Denominator::Population
    } else {
        Denominator::Sample
    };
    let iso = isoscore_with(&cloud, denom)?;
    let low_sample = is_low_sample(cloud.len(), cloud.dim());
    if low_sample {
        log::warn!(
            "{} points in {} dimensions; fewer than ten per dimension",
            cloud.len(),
            cloud.dim()
        );
    }
    let base = match args.baselines.options() {
        Some(o) => Some(baselines::baselines(&cloud, o.sample_pairs, o.seed)?),
        None => None,
    };

    println!("{}", score(iso.score));
    if let Some(b) = &base {
        println!("avg_cosine\t{}", score(b.avg_cosine));
        println!("partition\t{}", score(b.partition_score));
    }
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
        let out = IsoscoreOutput {
            schema_version: analysis::REPORT_SCHEMA_VERSION,
            isoscore: iso,
            baselines: base,
            low_sample,
        };
        let path = dir.join("isoscore.json");
        fs::write(&path, serde_json::to_string_pretty(&out)? + "\n")?;
        ctx.outputs([path]);
    }
    ctx.finish("isoscore", args, args.out_dir.as_deref())
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    /// Point cloud files; each is labeled by its file stem.
    #[arg(long, conflicts_with = "manifest")]
    input: Vec<PathBuf>,
    /// Stream manifest; every stream at --side/--layer becomes one entry.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_parser = parse_side, default_value = "dec")]
    side: Side,
    /// Layer to read; defaults to the last one present.
    #[arg(long)]
    layer: Option<u32>,
    /// Skip mean-centering before the SVD.
    #[arg(long)]
    uncentered: bool,
    #[command(flatten)]
    report: ReportFlags,
}

pub fn spectrum(args: &SpectrumArgs, mut ctx: Context) -> Result<()> {
    let centered = !args.uncentered;
    let overlay = match &args.manifest {
        Some(m) => {
            let streams = load_manifest(m, &mut ctx)?;
            let layer = match args.layer {
                Some(l) => l,
                None => final_layer(&streams, args.side)?,
            };
            analysis::spectrum_overlay(&streams, args.side, layer, centered)?
        }
        None => {
            if args.input.is_empty() {
                bail!(isoscope::IsoError::InvalidManifest(
                    "give --input files or a --manifest".into()
                ));
            }
            let mut clouds: Vec<(String, PointCloud)> = Vec::new();
            for path in &args.input {
                ctx.input(path)?;
                let label = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                let cloud = format::load_cloud(path)
                    .with_context(|| format!("loading {}", path.display()))?;
                clouds.push((label, cloud));
            }
            analysis::spectrum_overlay_clouds(&clouds, centered)?
        }
    };
    for e in &overlay.entries {
        println!(
            "{}\tmin_max_ratio={}\tspectral_entropy={}",
            e.label,
            score(e.min_max_ratio),
            score(e.spectral_entropy)
        );
    }
    args.report.emit(&overlay, &mut ctx)?;
    ctx.finish("spectrum", args, args.report.out_dir.as_deref())
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// Manifest of the multilingual model's streams.
    #[arg(long)]
    multi: PathBuf,
    /// Manifest of the bilingual models' streams.
    #[arg(long)]
    bi: PathBuf,
    #[arg(long, value_parser = parse_side, default_value = "dec")]
    side: Side,
    /// Layer to compare; defaults to the last one present.
    #[arg(long)]
    layer: Option<u32>,
    /// Subsample each language to the smallest before pooling the union.
    #[arg(long)]
    balanced_union_seed: Option<u64>,
    #[command(flatten)]
    baselines: BaselineFlags,
    #[command(flatten)]
    report: ReportFlags,
}

pub fn compare(args: &CompareArgs, mut ctx: Context) -> Result<()> {
    let multi = load_manifest(&args.multi, &mut ctx)?;
    let bi = load_manifest(&args.bi, &mut ctx)?;
    let layer = match args.layer {
        Some(l) => l,
        None => final_layer(&multi, args.side)?,
    };
    let opts = AnalysisOptions {
        baselines: args.baselines.options(),
        balanced_union_seed: args.balanced_union_seed,
    };
    let report = analysis::compare_models(&multi, &bi, args.side, layer, &opts)?;
    for row in &report.rows {
        let mark = match row.higher {
            Some(true) => "\thigher",
            _ => "",
        };
        println!("{}\t{}{mark}", row.key, score(row.iso.score));
        if row.low_sample {
            log::warn!("{}: fewer than ten points per dimension", row.key);
        }
        if row.size_imbalance {
            log::warn!("{}: union languages differ in size by more than 2x", row.key);
        }
    }
    args.report.emit(&report, &mut ctx)?;
    ctx.finish("compare", args, args.report.out_dir.as_deref())
}

/// Stored scores for one side: per-language IsoScores and the union score.
#[derive(Debug, Deserialize)]
struct StoredScores {
    side: Side,
    languages: BTreeMap<String, f64>,
    union: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct DeltaArgs {
    /// Manifest of the multilingual model's streams.
    #[arg(long, required_unless_present = "scores", conflicts_with = "scores")]
    manifest: Option<PathBuf>,
    /// JSON file of already-computed scores:
    /// {"side": "dec", "languages": {"ru": 0.1571, ...}, "union": 0.0623}.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Side to analyze; both sides when omitted.
    #[arg(long, value_parser = parse_side)]
    side: Option<Side>,
    /// Layer to read; defaults to the last one present per side.
    #[arg(long)]
    layer: Option<u32>,
    #[arg(long)]
    balanced_union_seed: Option<u64>,
    #[command(flatten)]
    report: ReportFlags,
}

pub fn delta(args: &DeltaArgs, mut ctx: Context) -> Result<()> {
    let report = if let Some(path) = &args.scores {
        ctx.input(path)?;
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let stored: StoredScores = serde_json::from_str(&text).map_err(|e| {
            isoscope::IsoError::InvalidManifest(format!("{}: {e}", path.display()))
        })?;
        if args.side.is_some_and(|s| s != stored.side) {
            bail!(isoscope::IsoError::InvalidManifest(format!(
                "{} holds {} scores",
                path.display(),
                stored.side
            )));
        }
        let langs: Vec<(String, f64)> = stored.languages.into_iter().collect();
        DeltaReport::from_scores(stored.side, &langs, stored.union)?
    } else {
        let manifest = args.manifest.as_ref().expect("clap requires one source");
        let multi = load_manifest(manifest, &mut ctx)?;
        let sides: Vec<Side> = match args.side {
            Some(s) => vec![s],
            None => [Side::Encoder, Side::Decoder]
                .into_iter()
                .filter(|s| multi.iter().any(|st| st.key.side == *s))
                .collect(),
        };
        let opts = AnalysisOptions {
            baselines: None,
            balanced_union_seed: args.balanced_union_seed,
        };
        let mut reports = Vec::new();
        for side in sides {
            let layer = match args.layer {
                Some(l) => l,
                None => final_layer(&multi, side)?,
            };
            reports.push(analysis::delta_isoscore(&multi, side, layer, &opts)?);
        }
        DeltaReport::merge(reports)
    };
    for e in &report.entries {
        println!("{}\t{}\t{}", e.side, e.target_lang, score(e.delta));
    }
    for side in &report.size_imbalance {
        log::warn!("{side}: union languages differ in size by more than 2x");
    }
    args.report.emit(&report, &mut ctx)?;
    ctx.finish("delta", args, args.report.out_dir.as_deref())
}

#[derive(Debug, Args, Serialize)]
pub struct LayerwiseArgs {
    /// Manifest of the multilingual model's streams.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_parser = parse_side, default_value = "dec")]
    side: Side,
    /// Comma-separated layers; all present layers when omitted.
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<u32>>,
    #[arg(long)]
    balanced_union_seed: Option<u64>,
    #[command(flatten)]
    report: ReportFlags,
}

pub fn layerwise(args: &LayerwiseArgs, mut ctx: Context) -> Result<()> {
    let multi = load_manifest(&args.manifest, &mut ctx)?;
    let opts = AnalysisOptions {
        baselines: None,
        balanced_union_seed: args.balanced_union_seed,
    };
    let report = analysis::layerwise_isotropy(&multi, args.side, args.layers.as_deref(), &opts)?;
    for row in &report.rows {
        for l in &row.per_language {
            println!("{}\t{}\t{}", row.layer, l.target_lang, score(l.score));
        }
        println!("{}\tUNION\t{}", row.layer, score(row.union));
    }
    args.report.emit(&report, &mut ctx)?;
    ctx.finish("layerwise", args, args.report.out_dir.as_deref())
}

#[derive(Debug, Args, Serialize)]
pub struct PoolArgs {
    /// ISOB-R record stream.
    #[arg(long)]
    input: PathBuf,
    /// ISOB-M (or .csv) file of mean-pooled sentence vectors.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "f32", value_parser = parse_dtype)]
    dtype: Dtype,
}

pub fn pool(args: &PoolArgs, mut ctx: Context) -> Result<()> {
    ctx.input(&args.input)?;
    let reader = RecordReader::open(&args.input)
        .with_context(|| format!("opening {}", args.input.display()))?;
    let dim = reader.dim();
    let mut rows = Vec::new();
    for raw in reader {
        let raw = raw?;
        if raw.token_count == 0 {
            bail!(isoscope::IsoError::EmptyRecord {
                sentence_id: raw.sentence_id
            });
        }
        let t = raw.token_count as f64;
        let mut mean = vec![0.0; dim];
        for tok in raw.values.chunks_exact(dim) {
            for (m, v) in mean.iter_mut().zip(tok) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= t);
        rows.push(mean);
    }
    let cloud = PointCloud::from_rows(&rows)?;
    format::save_cloud(&args.output, &cloud, args.dtype)
        .with_context(|| format!("writing {}", args.output.display()))?;
    log::info!("pooled {} records of dimension {dim}", cloud.len());
    ctx.outputs([args.output.clone()]);
    ctx.finish("pool", args, None)
}

#[derive(Debug, Args, Serialize)]
pub struct FilterArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    #[arg(long)]
    src_lang: String,
    #[arg(long)]
    tgt_lang: String,
    #[arg(long)]
    out_dir: PathBuf,
    /// Largest tolerated share of punctuation characters per line.
    #[arg(long, default_value_t = 0.5)]
    punct_max: f64,
    /// Largest tolerated token-count ratio between the two sides.
    #[arg(long, default_value_t = 3.0)]
    ratio_max: f64,
    /// Longest tolerated line, in tokens.
    #[arg(long, default_value_t = 250)]
    max_tokens: usize,
    /// Largest tolerated share of letters outside the language's scripts.
    #[arg(long, default_value_t = 0.5)]
    script_max: f64,
    /// Duplicate detection: pair or per-side.
    #[arg(long, default_value = "pair", value_parser = parse_dedup)]
    dedup: DedupMode,
    /// JSON table mapping language codes to Unicode script names.
    #[arg(long)]
    scripts: Option<PathBuf>,
    /// Steps to skip (punctuation, dedup, script, length).
    #[arg(long, value_delimiter = ',')]
    skip: Vec<String>,
    /// Per-line keep/drop verdicts from an outside filter.
    #[arg(long)]
    external_verdicts: Option<PathBuf>,
}

pub fn filter_corpus(args: &FilterArgs, mut ctx: Context) -> Result<()> {
    ctx.input(&args.src)?;
    ctx.input(&args.tgt)?;
    let mut config = FilterConfig {
        punct_ratio_max: args.punct_max,
        length_ratio_max: args.ratio_max,
        max_tokens: args.max_tokens,
        script_foreign_ratio_max: args.script_max,
        dedup: args.dedup,
        ..Default::default()
    };
    for name in &args.skip {
        let step = [Step::Punctuation, Step::Dedup, Step::Script, Step::Length]
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| {
                isoscope_corpus::CorpusError::InvalidConfig(format!("unknown step {name:?}"))
            })?;
        config.enabled_steps.remove(&step);
    }
    let scripts = match &args.scripts {
        Some(p) => {
            ctx.input(p)?;
            ScriptTable::from_json(&fs::read_to_string(p)?)?
        }
        None => ScriptTable::default(),
    };
    let external = match &args.external_verdicts {
        Some(p) => {
            ctx.input(p)?;
            Some(ExternalVerdicts::load(p)?)
        }
        None => None,
    };
    let pipeline = Pipeline {
        config: &config,
        src_lang: &args.src_lang,
        tgt_lang: &args.tgt_lang,
        scripts: &scripts,
        tokenizer: &WhitespacePunctTokenizer,
        external: external.as_ref(),
    };
    let (out, files) = run_files(&pipeline, &args.src, &args.tgt, &args.out_dir)?;
    println!("{}", serde_json::to_string_pretty(&out.stats)?);
    ctx.outputs([files.kept_src, files.kept_tgt, files.rejected, files.stats]);
    ctx.finish("filter-corpus", args, Some(&args.out_dir))
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// JSON cloud spec; overrides the shape flags below.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Comma-separated per-axis variances; unit variance when omitted.
    #[arg(long, value_delimiter = ',')]
    variances: Option<Vec<f64>>,
    /// Seed for a random rotation applied after scaling.
    #[arg(long)]
    rotation_seed: Option<u64>,
    /// Comma-separated translation added to every point.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    offset: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (ISOB-M, or CSV when it ends in .csv).
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "f64", value_parser = parse_dtype)]
    dtype: Dtype,
}

pub fn synth(args: &SynthArgs, mut ctx: Context) -> Result<()> {
    let spec = match &args.spec {
        Some(p) => {
            ctx.input(p)?;
            serde_json::from_str::<CloudSpec>(&fs::read_to_string(p)?).map_err(|e| {
                isoscope::IsoError::InvalidManifest(format!("{}: {e}", p.display()))
            })?
        }
        None => CloudSpec {
            dim: args.dim,
            count: args.count,
            variance_profile: args.variances.clone().unwrap_or_else(|| vec![1.0; args.dim]),
            rotation_seed: args.rotation_seed,
            offset: args.offset.clone(),
            sample_seed: args.seed,
        },
    };
    let cloud = synth::generate_gaussian(&spec)?;
    format::save_cloud(&args.output, &cloud, args.dtype)
        .with_context(|| format!("writing {}", args.output.display()))?;
    ctx.outputs([args.output.clone()]);
    #[derive(Serialize)]
    struct Config<'a> {
        spec: &'a CloudSpec,
        dtype: Dtype,
    }
    ctx.finish(
        "synth",
        &Config {
            spec: &spec,
            dtype: args.dtype,
        },
        None,
    )
}
