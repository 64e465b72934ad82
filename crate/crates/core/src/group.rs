use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::IsoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelType {
    #[serde(alias = "bi")]
    Bilingual,
    #[serde(alias = "multi")]
    Multilingual,
}

impl ModelType {
    pub fn short(self) -> &'static str {
        match self {
            ModelType::Bilingual => "bi",
            ModelType::Multilingual => "multi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "enc", alias = "encoder")]
    Encoder,
    #[serde(rename = "dec", alias = "decoder")]
    Decoder,
}

impl Side {
    pub fn short(self) -> &'static str {
        match self {
            Side::Encoder => "enc",
            Side::Decoder => "dec",
        }
    }
}

impl FromStr for Side {
    type Err = IsoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "enc" | "encoder" => Ok(Side::Encoder),
            "dec" | "decoder" => Ok(Side::Decoder),
            other => Err(IsoError::InvalidManifest(format!("unknown side {other:?}"))),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

/// Marker used on disk for the union of all target languages.
pub const UNION_MARKER: &str = "UNION";

/// A single target language, or the union of every target language of a
/// multilingual model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum TargetLang {
    Lang(String),
    Union,
}

impl TargetLang {
    pub fn lang(code: &str) -> Self {
        TargetLang::Lang(code.to_string())
    }

    pub fn as_lang(&self) -> Option<&str> {
        match self {
            TargetLang::Lang(l) => Some(l),
            TargetLang::Union => None,
        }
    }

    pub fn is_union(&self) -> bool {
        matches!(self, TargetLang::Union)
    }
}

impl From<String> for TargetLang {
    fn from(s: String) -> Self {
        if s == UNION_MARKER {
            TargetLang::Union
        } else {
            TargetLang::Lang(s)
        }
    }
}

impl From<TargetLang> for String {
    fn from(t: TargetLang) -> Self {
        t.to_string()
    }
}

impl fmt::Display for TargetLang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetLang::Lang(l) => f.write_str(l),
            TargetLang::Union => f.write_str(UNION_MARKER),
        }
    }
}

/// Identifies one analyzable cloud: which model, which data, which language
/// pair, which side of the network and which layer boundary
/// (0 = embedding output).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupKey {
    pub model_type: ModelType,
    pub dataset_tag: String,
    pub source_lang: String,
    pub target_lang: TargetLang,
    pub side: Side,
    pub layer: u32,
}

impl GroupKey {
    pub fn validate(&self) -> Result<(), IsoError> {
        if self.target_lang.is_union() && self.model_type != ModelType::Multilingual {
            return Err(IsoError::InvalidManifest(format!(
                "{self}: UNION target is only valid for multilingual models"
            )));
        }
        Ok(())
    }

    /// Whether a record tagged with `record` belongs to this selector. A
    /// UNION selector accepts every target language.
    pub fn matches(&self, record: &GroupKey) -> bool {
        self.model_type == record.model_type
            && self.dataset_tag == record.dataset_tag
            && self.source_lang == record.source_lang
            && self.side == record.side
            && self.layer == record.layer
            && (self.target_lang.is_union() || self.target_lang == record.target_lang)
    }

    pub fn with_target(&self, target: TargetLang) -> Self {
        Self {
            target_lang: target,
            ..self.clone()
        }
    }

    pub fn with_layer(&self, layer: u32) -> Self {
        Self {
            layer,
            ..self.clone()
        }
    }

    /// `en-ru`, or `en-UNION`.
    pub fn pair(&self) -> String {
        format!("{}-{}", self.source_lang, self.target_lang)
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}/{}/L{}",
            self.model_type.short(),
            self.dataset_tag,
            self.pair(),
            self.side,
            self.layer
        )
    }
}
