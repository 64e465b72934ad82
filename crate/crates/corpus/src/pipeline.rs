//! Ordered cleaning pipeline over a line-aligned bitext.
//!
//! Steps run in order punctuation → dedup → script → length → external.
//! A pair is kept iff every enabled step passes; a rejected pair is
//! attributed to the first step that failed.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DedupMode, FilterConfig};
use crate::error::{CorpusError, Result};
use crate::rules::{
    filter_length, filter_punctuation, filter_script, Reason, ScriptTable, Step, TokenCounter,
    Verdict,
};

/// One source/target line pair and its per-step verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusPair {
    /// 1-based line number in the input files.
    pub line: usize,
    pub src: String,
    pub tgt: String,
    pub verdicts: Vec<Verdict>,
}

impl CorpusPair {
    pub fn kept(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// First failing verdict in step order.
    pub fn rejection(&self) -> Option<&Verdict> {
        self.verdicts
            .iter()
            .filter(|v| !v.pass)
            .min_by_key(|v| v.step.number())
    }
}

/// Removal counts attributed to each step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCounts {
    pub punctuation: usize,
    pub dedup: usize,
    pub script: usize,
    pub length: usize,
    pub external: usize,
}

impl StepCounts {
    fn bump(&mut self, step: Step) {
        match step {
            Step::Punctuation => self.punctuation += 1,
            Step::Dedup => self.dedup += 1,
            Step::Script => self.script += 1,
            Step::Length => self.length += 1,
            Step::External => self.external += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.punctuation + self.dedup + self.script + self.length + self.external
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub input_pairs: usize,
    pub removed: StepCounts,
    pub kept: usize,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub pairs: Vec<CorpusPair>,
    pub stats: FilterStats,
}

impl PipelineOutput {
    pub fn kept(&self) -> impl Iterator<Item = &CorpusPair> {
        self.pairs.iter().filter(|p| p.kept())
    }

    pub fn rejected(&self) -> impl Iterator<Item = &CorpusPair> {
        self.pairs.iter().filter(|p| !p.kept())
    }
}

/// Per-line keep/drop decisions from an outside tool (language ID,
/// embedding-margin filtering). One line per input pair: `1`, `keep` or
/// `pass` keeps; `0`, `drop` or `fail` rejects; an optional tab-separated
/// second field is recorded as the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalVerdicts {
    verdicts: Vec<(bool, String)>,
}

impl ExternalVerdicts {
    pub fn parse(text: &str) -> Result<Self> {
        let verdicts = text
            .lines()
            .enumerate()
            .map(|(i, line)| {
                let (flag, detail) = line.split_once('\t').unwrap_or((line, ""));
                let keep = match flag.trim() {
                    "1" | "keep" | "pass" => true,
                    "0" | "drop" | "fail" => false,
                    other => {
                        return Err(CorpusError::ExternalVerdicts(format!(
                            "line {}: unrecognized verdict {other:?}",
                            i + 1
                        )))
                    }
                };
                Ok((keep, detail.trim().to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(Self { verdicts })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.verdicts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verdicts.is_empty()
    }
}

/// Keeps the first occurrence of each pair (or of each side, in per-side
/// mode). Returns, per input, the 1-based line of the earlier occurrence it
/// duplicates.
pub fn find_duplicates<'a>(
    pairs: impl IntoIterator<Item = (usize, &'a str, &'a str)>,
    mode: DedupMode,
) -> HashMap<usize, usize> {
    let mut seen_pairs: HashMap<(&str, &str), usize> = HashMap::new();
    let mut seen_src: HashMap<&str, usize> = HashMap::new();
    let mut seen_tgt: HashMap<&str, usize> = HashMap::new();
    let mut dups = HashMap::new();
    for (line, src, tgt) in pairs {
        match mode {
            DedupMode::Pair => {
                if let Some(first) = seen_pairs.get(&(src, tgt)) {
                    dups.insert(line, *first);
                } else {
                    seen_pairs.insert((src, tgt), line);
                }
            }
            DedupMode::PerSide => {
                if let Some(first) = seen_src.get(src).or_else(|| seen_tgt.get(tgt)) {
                    dups.insert(line, *first);
                } else {
                    seen_src.insert(src, line);
                    seen_tgt.insert(tgt, line);
                }
            }
        }
    }
    dups
}

/// First occurrences of each exact (src, tgt) pair, in input order.
pub fn deduplicate<S: AsRef<str> + Clone>(pairs: &[(S, S)]) -> Vec<(S, S)> {
    let dups = find_duplicates(
        pairs
            .iter()
            .enumerate()
            .map(|(i, (s, t))| (i, s.as_ref(), t.as_ref())),
        DedupMode::Pair,
    );
    pairs
        .iter()
        .enumerate()
        .filter(|(i, _)| !dups.contains_key(i))
        .map(|(_, p)| p.clone())
        .collect()
}

pub struct Pipeline<'a> {
    pub config: &'a FilterConfig,
    pub src_lang: &'a str,
    pub tgt_lang: &'a str,
    pub scripts: &'a ScriptTable,
    pub tokenizer: &'a dyn TokenCounter,
    pub external: Option<&'a ExternalVerdicts>,
}

impl Pipeline<'_> {
    pub fn run<S: AsRef<str> + Sync>(&self, src: &[S], tgt: &[S]) -> Result<PipelineOutput> {
        self.config.validate()?;
        if src.len() != tgt.len() {
            return Err(CorpusError::MisalignedBitext {
                src_lines: src.len(),
                tgt_lines: tgt.len(),
            });
        }
        if let Some(ext) = self.external {
            if ext.len() != src.len() {
                return Err(CorpusError::ExternalVerdicts(format!(
                    "{} verdicts for {} pairs",
                    ext.len(),
                    src.len()
                )));
            }
        }
        // Fail early on unknown languages instead of once per line.
        if self.config.enabled(Step::Script) {
            self.scripts.scripts(self.src_lang)?;
            self.scripts.scripts(self.tgt_lang)?;
        }

        let cfg = self.config;
        // Steps 1, 3 and 4 are independent per pair.
        let mut pairs: Vec<CorpusPair> = src
            .par_iter()
            .zip(tgt.par_iter())
            .enumerate()
            .map(|(i, (s, t))| {
                let (s, t) = (s.as_ref(), t.as_ref());
                let mut verdicts = Vec::with_capacity(4);
                if cfg.enabled(Step::Punctuation) {
                    verdicts.push(filter_punctuation(s, t, cfg));
                }
                if cfg.enabled(Step::Script) {
                    verdicts.push(filter_script(
                        s,
                        t,
                        self.src_lang,
                        self.tgt_lang,
                        self.scripts,
                        cfg,
                    )?);
                }
                if cfg.enabled(Step::Length) {
                    verdicts.push(filter_length(s, t, cfg, self.tokenizer));
                }
                Ok(CorpusPair {
                    line: i + 1,
                    src: s.to_string(),
                    tgt: t.to_string(),
                    verdicts,
                })
            })
            .collect::<Result<_>>()?;

        // Dedup sees the pairs that survived step 1, in input order.
        if cfg.enabled(Step::Dedup) {
            let survivors = pairs
                .iter()
                .filter(|p| {
                    p.verdicts
                        .iter()
                        .all(|v| v.step != Step::Punctuation || v.pass)
                })
                .map(|p| (p.line, p.src.as_str(), p.tgt.as_str()));
            let dups = find_duplicates(survivors, cfg.dedup);
            for p in &mut pairs {
                let step1_ok = p
                    .verdicts
                    .iter()
                    .all(|v| v.step != Step::Punctuation || v.pass);
                if !step1_ok {
                    continue;
                }
                p.verdicts.push(match dups.get(&p.line) {
                    Some(first) => Verdict::fail(
                        Step::Dedup,
                        Reason::Duplicate {
                            first_line: *first,
                        },
                    ),
                    None => Verdict::pass(Step::Dedup),
                });
            }
        }

        if let Some(ext) = self.external {
            for (p, (keep, detail)) in pairs.iter_mut().zip(&ext.verdicts) {
                p.verdicts.push(if *keep {
                    Verdict::pass(Step::External)
                } else {
                    Verdict::fail(
                        Step::External,
                        Reason::External {
                            detail: detail.clone(),
                        },
                    )
                });
            }
        }

        for p in &mut pairs {
            p.verdicts.sort_by_key(|v| v.step.number());
        }

        let mut stats = FilterStats {
            input_pairs: pairs.len(),
            ..Default::default()
        };
        for p in &pairs {
            match p.rejection() {
                Some(v) => stats.removed.bump(v.step),
                None => stats.kept += 1,
            }
        }
        Ok(PipelineOutput { pairs, stats })
    }
}

/// Files written by [`run_files`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub kept_src: PathBuf,
    pub kept_tgt: PathBuf,
    pub rejected: PathBuf,
    pub stats: PathBuf,
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(fs::read_to_string(path)?
        .lines()
        .map(str::to_string)
        .collect())
}

fn escape_field(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t")
}

/// Rejected pairs as `line<TAB>step<TAB>reason<TAB>src<TAB>tgt`, with a
/// header row.
pub fn render_rejected(out: &PipelineOutput) -> String {
    let mut text = String::from("line\tstep\treason\tsrc\ttgt\n");
    for p in out.rejected() {
        let v = p.rejection().expect("rejected pair has a failing verdict");
        let reason = v.reason.as_ref().map(|r| r.to_string()).unwrap_or_default();
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            p.line,
            v.step.name(),
            escape_field(&reason),
            escape_field(&p.src),
            escape_field(&p.tgt)
        ));
    }
    text
}

/// Runs the pipeline over two line-aligned UTF-8 files and writes
/// `kept.<src_lang>`, `kept.<tgt_lang>`, `rejected.tsv` and `stats.json`
/// into `out_dir`.
pub fn run_files(
    pipeline: &Pipeline<'_>,
    src_path: &Path,
    tgt_path: &Path,
    out_dir: &Path,
) -> Result<(PipelineOutput, OutputFiles)> {
    let src = read_lines(src_path)?;
    let tgt = read_lines(tgt_path)?;
    let out = pipeline.run(&src, &tgt)?;

    fs::create_dir_all(out_dir)?;
    let files = OutputFiles {
        kept_src: out_dir.join(format!("kept.{}", pipeline.src_lang)),
        kept_tgt: out_dir.join(format!("kept.{}", pipeline.tgt_lang)),
        rejected: out_dir.join("rejected.tsv"),
        stats: out_dir.join("stats.json"),
    };
    let (mut ks, mut kt) = (String::new(), String::new());
    for p in out.kept() {
        ks.push_str(&p.src);
        ks.push('\n');
        kt.push_str(&p.tgt);
        kt.push('\n');
    }
    fs::write(&files.kept_src, ks)?;
    fs::write(&files.kept_tgt, kt)?;
    fs::write(&files.rejected, render_rejected(&out))?;
    let stats = serde_json::to_string_pretty(&out.stats).expect("stats serialize");
    fs::write(&files.stats, stats + "\n")?;
    Ok((out, files))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::WhitespacePunctTokenizer;

    fn pipeline<'a>(cfg: &'a FilterConfig, table: &'a ScriptTable) -> Pipeline<'a> {
        Pipeline {
            config: cfg,
            src_lang: "en",
            tgt_lang: "ru",
            scripts: table,
            tokenizer: &WhitespacePunctTokenizer,
            external: None,
        }
    }

    #[test]
    fn dedup_examples() {
        let pairs = vec![("a", "b"), ("a", "b"), ("a", "c")];
        assert_eq!(deduplicate(&pairs), vec![("a", "b"), ("a", "c")]);
        let unique = vec![("x", "1"), ("y", "2")];
        assert_eq!(deduplicate(&unique), unique);
    }

    #[test]
    fn dedup_large_synthetic() {
        // 900 000 distinct pairs, every tenth line repeated once.
        let mut pairs = Vec::with_capacity(1_000_000);
        for i in 0..900_000u32 {
            pairs.push((i.to_string(), (i * 7).to_string()));
            if i % 9 == 0 {
                pairs.push((i.to_string(), (i * 7).to_string()));
            }
        }
        assert_eq!(pairs.len(), 1_000_000);
        assert_eq!(deduplicate(&pairs).len(), 900_000);
    }

    #[test]
    fn per_side_dedup() {
        let pairs = [(1, "a", "x"), (2, "a", "y"), (3, "b", "x"), (4, "c", "z")];
        let pair_dups = find_duplicates(pairs, DedupMode::Pair);
        assert!(pair_dups.is_empty());
        let side_dups = find_duplicates(pairs, DedupMode::PerSide);
        assert_eq!(side_dups.get(&2), Some(&1));
        assert_eq!(side_dups.get(&3), Some(&1));
        assert_eq!(side_dups.len(), 2);
    }

    #[test]
    fn empty_and_misaligned_input() {
        let cfg = FilterConfig::default();
        let table = ScriptTable::default();
        let out = pipeline(&cfg, &table).run::<&str>(&[], &[]).unwrap();
        assert_eq!(out.stats, FilterStats::default());
        assert!(matches!(
            pipeline(&cfg, &table).run(&["a"], &[]),
            Err(CorpusError::MisalignedBitext {
                src_lines: 1,
                tgt_lines: 0
            })
        ));
    }

    #[test]
    fn attribution_follows_step_order() {
        let cfg = FilterConfig::default();
        let table = ScriptTable::default();
        // Line 1 is both punctuation-heavy and length-imbalanced.
        let src = ["?!?! ok", "the cat sat", "the cat sat"];
        let tgt = ["да", "кот сидел", "кот сидел"];
        let out = pipeline(&cfg, &table).run(&src, &tgt).unwrap();
        assert_eq!(out.pairs[0].rejection().unwrap().step, Step::Punctuation);
        assert_eq!(out.pairs[2].rejection().unwrap().step, Step::Dedup);
        assert!(out.pairs[1].kept());
        assert_eq!(out.stats.removed.punctuation, 1);
        assert_eq!(out.stats.removed.dedup, 1);
        assert_eq!(out.stats.kept, 1);
    }

    #[test]
    fn external_hook() {
        let cfg = FilterConfig::default();
        let table = ScriptTable::default();
        let ext = ExternalVerdicts::parse("1\n0\tlangid=de\n").unwrap();
        let mut p = pipeline(&cfg, &table);
        p.external = Some(&ext);
        let out = p.run(&["one two", "three four"], &["раз два", "три четыре"]).unwrap();
        assert!(out.pairs[0].kept());
        assert_eq!(
            out.pairs[1].rejection().unwrap().reason,
            Some(Reason::External {
                detail: "langid=de".into()
            })
        );
        assert_eq!(out.stats.removed.external, 1);
        assert!(ExternalVerdicts::parse("maybe\n").is_err());
        let short = ExternalVerdicts::parse("1\n").unwrap();
        p.external = Some(&short);
        assert!(p.run(&["a b", "c d"], &["а б", "в г"]).is_err());
    }

    #[test]
    fn disabled_steps_are_skipped() {
        let mut cfg = FilterConfig::default();
        cfg.enabled_steps.remove(&Step::Script);
        let table = ScriptTable::default();
        let mut p = pipeline(&cfg, &table);
        p.tgt_lang = "xx";
        let out = p.run(&["hello there"], &["hello there"]).unwrap();
        assert!(out.pairs[0].kept());
    }
}
