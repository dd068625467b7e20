use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stemmer {
    None,
    /// Strips the longest of `ing`, `ed`, `es`, `s` that leaves at least
    /// three characters.
    #[default]
    SuffixRules,
}

/// Text preprocessing settings. The stopword set is always case-folded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawTokenizerConfig")]
pub struct TokenizerConfig {
    pub lowercase: bool,
    stopwords: BTreeSet<String>,
    pub stemmer: Stemmer,
}

#[derive(Deserialize)]
struct RawTokenizerConfig {
    #[serde(default = "yes")]
    lowercase: bool,
    #[serde(default)]
    stopwords: Option<Vec<String>>,
    #[serde(default)]
    stemmer: Stemmer,
}

fn yes() -> bool {
    true
}

impl From<RawTokenizerConfig> for TokenizerConfig {
    fn from(raw: RawTokenizerConfig) -> Self {
        let stopwords = match raw.stopwords {
            Some(words) => words,
            None => default_stopwords(),
        };
        TokenizerConfig::new(raw.lowercase, stopwords, raw.stemmer)
    }
}

pub fn default_stopwords() -> Vec<String> {
    DEFAULT_STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig::new(true, default_stopwords(), Stemmer::SuffixRules)
    }
}

impl TokenizerConfig {
    pub fn new<I, S>(lowercase: bool, stopwords: I, stemmer: Stemmer) -> TokenizerConfig
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        TokenizerConfig {
            lowercase,
            stopwords: stopwords
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
            stemmer,
        }
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }
}

/// Splits on anything that is not alphanumeric, then case-folds, drops
/// stopwords and stems according to `cfg`.
pub fn preprocess(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter_map(|raw| {
            let token = if cfg.lowercase {
                raw.to_lowercase()
            } else {
                raw.to_string()
            };
            if cfg.stopwords.contains(&token.to_lowercase()) {
                return None;
            }
            Some(match cfg.stemmer {
                Stemmer::None => token,
                Stemmer::SuffixRules => strip_suffix(&token),
            })
        })
        .collect()
}

fn strip_suffix(token: &str) -> String {
    let chars: Vec<char> = token.chars().collect();
    for suffix in ["ing", "ed", "es", "s"] {
        let k = suffix.len();
        if chars.len() < k + 3 {
            continue;
        }
        let tail = &chars[chars.len() - k..];
        if tail
            .iter()
            .map(|c| c.to_ascii_lowercase())
            .eq(suffix.chars())
        {
            return chars[..chars.len() - k].iter().collect();
        }
    }
    token.to_string()
}
