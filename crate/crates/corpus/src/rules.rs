//! Per-pair predicates: punctuation share, script membership, length.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_script::{Script, UnicodeScript};

use crate::config::FilterConfig;
use crate::error::{CorpusError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Src,
    Tgt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    Punctuation,
    Dedup,
    Script,
    Length,
    External,
}

impl Step {
    /// Position in the cleaning order.
    pub fn number(self) -> u8 {
        match self {
            Step::Punctuation => 1,
            Step::Dedup => 2,
            Step::Script => 3,
            Step::Length => 4,
            Step::External => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Step::Punctuation => "punctuation",
            Step::Dedup => "dedup",
            Step::Script => "script",
            Step::Length => "length",
            Step::External => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reason {
    Punctuation { side: Side, ratio: f64 },
    Duplicate { first_line: usize },
    ForeignScript { side: Side, ratio: f64 },
    EmptyLine { side: Side },
    LengthRatio { ratio: f64 },
    TooLong { side: Side, tokens: usize },
    External { detail: String },
}

impl std::fmt::Display for Reason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let side = |s: &Side| match s {
            Side::Src => "src",
            Side::Tgt => "tgt",
        };
        match self {
            Reason::Punctuation { side: s, ratio } => {
                write!(f, "{} punctuation ratio {ratio:.4}", side(s))
            }
            Reason::Duplicate { first_line } => write!(f, "duplicate of line {first_line}"),
            Reason::ForeignScript { side: s, ratio } => {
                write!(f, "{} foreign-script ratio {ratio:.4}", side(s))
            }
            Reason::EmptyLine { side: s } => write!(f, "{} is empty", side(s)),
            Reason::LengthRatio { ratio } => write!(f, "length ratio {ratio:.4}"),
            Reason::TooLong { side: s, tokens } => write!(f, "{} has {tokens} tokens", side(s)),
            Reason::External { detail } => write!(f, "external: {detail}"),
        }
    }
}

/// Outcome of one step for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub step: Step,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<Reason>,
}

impl Verdict {
    pub fn pass(step: Step) -> Self {
        Self {
            step,
            pass: true,
            reason: None,
        }
    }

    pub fn fail(step: Step, reason: Reason) -> Self {
        Self {
            step,
            pass: false,
            reason: Some(reason),
        }
    }
}

pub fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::OtherPunctuation
            | GeneralCategory::OpenPunctuation
    )
}

/// Share of non-whitespace characters that are punctuation; 0 for a line
/// with no such characters.
pub fn punctuation_ratio(line: &str) -> f64 {
    let (mut punct, mut total) = (0usize, 0usize);
    for c in line.chars().filter(|c| !c.is_whitespace()) {
        total += 1;
        punct += is_punctuation(c) as usize;
    }
    if total == 0 {
        0.0
    } else {
        punct as f64 / total as f64
    }
}

pub fn filter_punctuation(src: &str, tgt: &str, config: &FilterConfig) -> Verdict {
    for (side, line) in [(Side::Src, src), (Side::Tgt, tgt)] {
        let ratio = punctuation_ratio(line);
        if ratio > config.punct_ratio_max {
            return Verdict::fail(Step::Punctuation, Reason::Punctuation { side, ratio });
        }
    }
    Verdict::pass(Step::Punctuation)
}

const DEFAULT_SCRIPTS: &str = include_str!("../data/scripts.json");

/// Language code → accepted Unicode scripts.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptTable {
    langs: HashMap<String, Vec<Script>>,
}

impl Default for ScriptTable {
    fn default() -> Self {
        Self::from_json(DEFAULT_SCRIPTS).expect("bundled script table is valid")
    }
}

impl ScriptTable {
    /// Parses `{"lang": ["ScriptName", ...], ...}` using Unicode full or
    /// short script names.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: HashMap<String, Vec<String>> = serde_json::from_str(text)
            .map_err(|e| CorpusError::InvalidConfig(format!("script table: {e}")))?;
        let mut langs = HashMap::new();
        for (lang, names) in raw {
            let scripts = names
                .iter()
                .map(|n| {
                    Script::from_full_name(n)
                        .or_else(|| Script::from_short_name(n))
                        .ok_or_else(|| CorpusError::UnknownScript {
                            lang: lang.clone(),
                            script: n.clone(),
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            langs.insert(lang, scripts);
        }
        Ok(Self { langs })
    }

    pub fn scripts(&self, lang: &str) -> Result<&[Script]> {
        self.langs
            .get(lang)
            .map(Vec::as_slice)
            .ok_or_else(|| CorpusError::UnknownLanguage(lang.to_string()))
    }
}

/// Share of script-bearing letters outside `scripts`. Letters in the
/// Common or Inherited pseudo-scripts are not counted either way.
pub fn foreign_script_ratio(line: &str, scripts: &[Script]) -> f64 {
    let (mut foreign, mut total) = (0usize, 0usize);
    for c in line.chars().filter(|c| c.is_alphabetic()) {
        let script = c.script();
        if matches!(script, Script::Common | Script::Inherited | Script::Unknown) {
            continue;
        }
        total += 1;
        foreign += !scripts.contains(&script) as usize;
    }
    if total == 0 {
        0.0
    } else {
        foreign as f64 / total as f64
    }
}

pub fn filter_script(
    src: &str,
    tgt: &str,
    src_lang: &str,
    tgt_lang: &str,
    table: &ScriptTable,
    config: &FilterConfig,
) -> Result<Verdict> {
    let sides = [
        (Side::Src, src, table.scripts(src_lang)?),
        (Side::Tgt, tgt, table.scripts(tgt_lang)?),
    ];
    for (side, line, scripts) in sides {
        let ratio = foreign_script_ratio(line, scripts);
        if ratio > config.script_foreign_ratio_max {
            return Ok(Verdict::fail(
                Step::Script,
                Reason::ForeignScript { side, ratio },
            ));
        }
    }
    Ok(Verdict::pass(Step::Script))
}

/// Token counting used by the length step. Swap in a subword model by
/// implementing this trait.
pub trait TokenCounter: Send + Sync {
    fn count(&self, line: &str) -> usize;
}

/// Approximates subword counts: whitespace-separated words, with every
/// punctuation character and every Han/kana character counted as its own
/// token.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespacePunctTokenizer;

fn is_ideographic(c: char) -> bool {
    matches!(c.script(), Script::Han | Script::Hiragana | Script::Katakana)
}

impl TokenCounter for WhitespacePunctTokenizer {
    fn count(&self, line: &str) -> usize {
        let mut count = 0;
        let mut in_word = false;
        for c in line.chars() {
            if c.is_whitespace() {
                in_word = false;
            } else if is_punctuation(c) || is_ideographic(c) {
                count += 1;
                in_word = false;
            } else if !in_word {
                count += 1;
                in_word = true;
            }
        }
        count
    }
}

pub fn filter_length(src: &str, tgt: &str, config: &FilterConfig, tokenizer: &dyn TokenCounter) -> Verdict {
    let (ls, lt) = (tokenizer.count(src), tokenizer.count(tgt));
    for (side, len) in [(Side::Src, ls), (Side::Tgt, lt)] {
        if len == 0 {
            return Verdict::fail(Step::Length, Reason::EmptyLine { side });
        }
    }
    for (side, len) in [(Side::Src, ls), (Side::Tgt, lt)] {
        if len > config.max_tokens {
            return Verdict::fail(Step::Length, Reason::TooLong { side, tokens: len });
        }
    }
    let ratio = ls.max(lt) as f64 / ls.min(lt) as f64;
    if ratio > config.length_ratio_max {
        return Verdict::fail(Step::Length, Reason::LengthRatio { ratio });
    }
    Verdict::pass(Step::Length)
}
