//! Token categorization and importance weights for pooling.
//!
//! Tokens map to one of four lexical categories. Salient tokens (actions,
//! objects, state descriptors) get the high weight, context and generic
//! tokens share the mid weight under the default scheme (the generic tier is
//! independently overridable), and punctuation gets the low weight.

use std::collections::HashMap;

use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("malformed category dictionary: {0}")]
    Schema(String),
    #[error("invalid weighting scheme: {0}")]
    Validation(String),
}

/// Lexical tier of a surface token. Ordered by weight priority:
/// Salient > Context > Generic >= Punctuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexicalCategory {
    Salient,
    Context,
    Generic,
    Punctuation,
}

/// Maps tokens to categories and categories to pooling weights.
///
/// Immutable after construction; safe to share across pooling workers.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WeightingScheme {
    pub alpha_high: f64,
    pub alpha_mid: f64,
    pub alpha_low: f64,
    /// Weight for the Generic tier when it should diverge from `alpha_mid`.
    pub alpha_generic: Option<f64>,
    #[serde(skip)]
    dict: HashMap<String, LexicalCategory>,
    pub default_category: LexicalCategory,
}

/// Default lexicon file contents shipped with the crate.
pub const DEFAULT_LEXICON_TOML: &str = include_str!("../data/lexicon.toml");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconDoc {
    alpha_high: f64,
    alpha_mid: f64,
    alpha_low: f64,
    #[serde(default)]
    alpha_generic: Option<f64>,
    #[serde(default)]
    salient: Vec<String>,
    #[serde(default)]
    context: Vec<String>,
    #[serde(default)]
    generic: Vec<String>,
}

impl WeightingScheme {
    /// The scheme built from the lexicon file checked into the repo, with
    /// the reference weights 1.0 / 0.3 / 0.1.
    pub fn default_scheme() -> Self {
        load_category_dict(DEFAULT_LEXICON_TOML)
            .expect("bundled lexicon.toml must be valid")
    }

    /// A scheme with the given alphas and no dictionary entries: every
    /// non-punctuation token falls through to the default category.
    pub fn uniform(alpha_high: f64, alpha_mid: f64, alpha_low: f64) -> Result<Self, LexiconError> {
        let scheme = Self {
            alpha_high,
            alpha_mid,
            alpha_low,
            alpha_generic: None,
            dict: HashMap::new(),
            default_category: LexicalCategory::Context,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn with_entry(mut self, token: &str, category: LexicalCategory) -> Self {
        self.dict.insert(token.to_lowercase(), category);
        self
    }

    pub fn dict_len(&self) -> usize {
        self.dict.len()
    }

    fn validate(&self) -> Result<(), LexiconError> {
        for (name, v) in [
            ("alpha_high", self.alpha_high),
            ("alpha_mid", self.alpha_mid),
            ("alpha_low", self.alpha_low),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(LexiconError::Validation(format!(
                    "{name} must be a finite non-negative number, got {v}"
                )));
            }
        }
        if self.alpha_high <= 0.0 || self.alpha_mid <= 0.0 {
            return Err(LexiconError::Validation(
                "alpha_high and alpha_mid must be strictly positive".into(),
            ));
        }
        if !(self.alpha_high >= self.alpha_mid && self.alpha_mid >= self.alpha_low) {
            return Err(LexiconError::Validation(format!(
                "alpha ordering violated: need alpha_high >= alpha_mid >= alpha_low, got {} / {} / {}",
                self.alpha_high, self.alpha_mid, self.alpha_low
            )));
        }
        if let Some(g) = self.alpha_generic {
            if !g.is_finite() || g > self.alpha_mid || g < self.alpha_low {
                return Err(LexiconError::Validation(format!(
                    "alpha_generic must lie in [alpha_low, alpha_mid], got {g}"
                )));
            }
        }
        Ok(())
    }
}

/// Assigns a lexical category to one token. Dictionary lookups are
/// case-folded; tokens made entirely of punctuation or symbols are
/// Punctuation; everything else falls back to the scheme default.
/// Total: never fails.
pub fn categorize(token: &str, scheme: &WeightingScheme) -> LexicalCategory {
    let folded = token.to_lowercase();
    if let Some(&cat) = scheme.dict.get(&folded) {
        return cat;
    }
    if !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric()) {
        return LexicalCategory::Punctuation;
    }
    scheme.default_category
}

/// The pooling weight for a category under the scheme.
pub fn weight_of(category: LexicalCategory, scheme: &WeightingScheme) -> f64 {
    match category {
        LexicalCategory::Salient => scheme.alpha_high,
        LexicalCategory::Context => scheme.alpha_mid,
        LexicalCategory::Generic => scheme.alpha_generic.unwrap_or(scheme.alpha_mid),
        LexicalCategory::Punctuation => scheme.alpha_low,
    }
}

/// Convenience: weight for a token, composing categorize and weight_of.
pub fn token_weight(token: &str, scheme: &WeightingScheme) -> f64 {
    weight_of(categorize(token, scheme), scheme)
}

/// Loads a TOML category dictionary with keys `alpha_high`, `alpha_mid`,
/// `alpha_low`, `salient`, `context`, `generic`. Tokens listed in multiple
/// categories resolve to the highest-priority one (Salient first).
pub fn load_category_dict(source: &str) -> Result<WeightingScheme, LexiconError> {
    let doc: LexiconDoc =
        toml::from_str(source).map_err(|e| LexiconError::Schema(e.to_string()))?;
    let mut dict = HashMap::new();
    // Lowest priority inserted first so higher-priority categories overwrite.
    for token in &doc.generic {
        dict.insert(token.to_lowercase(), LexicalCategory::Generic);
    }
    for token in &doc.context {
        dict.insert(token.to_lowercase(), LexicalCategory::Context);
    }
    for token in &doc.salient {
        dict.insert(token.to_lowercase(), LexicalCategory::Salient);
    }
    let scheme = WeightingScheme {
        alpha_high: doc.alpha_high,
        alpha_mid: doc.alpha_mid,
        alpha_low: doc.alpha_low,
        alpha_generic: doc.alpha_generic,
        dict,
        default_category: LexicalCategory::Context,
    };
    scheme.validate()?;
    Ok(scheme)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dictionary_hit_wins() {
        let scheme = WeightingScheme::uniform(1.0, 0.3, 0.1)
            .unwrap()
            .with_entry("stirring", LexicalCategory::Salient);
        assert_eq!(categorize("stirring", &scheme), LexicalCategory::Salient);
        assert_eq!(categorize("Stirring", &scheme), LexicalCategory::Salient);
    }

    #[test]
    fn punctuation_rule() {
        let scheme = WeightingScheme::uniform(1.0, 0.3, 0.1).unwrap();
        assert_eq!(categorize(",", &scheme), LexicalCategory::Punctuation);
        assert_eq!(categorize("...", &scheme), LexicalCategory::Punctuation);
        assert_eq!(categorize("?!", &scheme), LexicalCategory::Punctuation);
    }

    #[test]
    fn unknown_token_falls_back() {
        let scheme = WeightingScheme::uniform(1.0, 0.3, 0.1).unwrap();
        assert_eq!(categorize("zxqv", &scheme), LexicalCategory::Context);
    }

    #[test]
    fn reference_weights() {
        let scheme = WeightingScheme::default_scheme();
        assert_eq!(weight_of(LexicalCategory::Salient, &scheme), 1.0);
        assert_eq!(weight_of(LexicalCategory::Context, &scheme), 0.3);
        assert_eq!(weight_of(LexicalCategory::Generic, &scheme), 0.3);
        assert_eq!(weight_of(LexicalCategory::Punctuation, &scheme), 0.1);
    }

    #[test]
    fn load_valid_document() {
        let doc = r#"
            alpha_high = 1.0
            alpha_mid = 0.3
            alpha_low = 0.1
            salient = ["stir", "chop"]
            context = ["red"]
            generic = ["the", "a"]
        "#;
        let scheme = load_category_dict(doc).unwrap();
        assert_eq!(scheme.dict_len(), 5);
        assert_eq!(categorize("stir", &scheme), LexicalCategory::Salient);
        assert_eq!(categorize("the", &scheme), LexicalCategory::Generic);
    }

    #[test]
    fn load_rejects_alpha_violation() {
        let doc = r#"
            alpha_high = 0.1
            alpha_mid = 0.3
            alpha_low = 1.0
        "#;
        assert!(matches!(
            load_category_dict(doc),
            Err(LexiconError::Validation(_))
        ));
    }

    #[test]
    fn load_rejects_garbage() {
        assert!(matches!(
            load_category_dict("alpha_high = \"not a number\""),
            Err(LexiconError::Schema(_))
        ));
    }

    #[test]
    fn empty_token_lists_fall_back_everywhere() {
        let doc = "alpha_high = 1.0\nalpha_mid = 0.3\nalpha_low = 0.1\n";
        let scheme = load_category_dict(doc).unwrap();
        assert_eq!(scheme.dict_len(), 0);
        assert_eq!(categorize("anything", &scheme), LexicalCategory::Context);
    }

    #[test]
    fn duplicate_tokens_resolve_to_highest_priority() {
        let doc = r#"
            alpha_high = 1.0
            alpha_mid = 0.3
            alpha_low = 0.1
            salient = ["pan"]
            generic = ["pan"]
        "#;
        let scheme = load_category_dict(doc).unwrap();
        assert_eq!(categorize("pan", &scheme), LexicalCategory::Salient);
    }

    #[test]
    fn bundled_lexicon_loads_and_orders_weights() {
        let scheme = WeightingScheme::default_scheme();
        assert!(scheme.dict_len() > 100);
        let s = weight_of(LexicalCategory::Salient, &scheme);
        let c = weight_of(LexicalCategory::Context, &scheme);
        let g = weight_of(LexicalCategory::Generic, &scheme);
        let p = weight_of(LexicalCategory::Punctuation, &scheme);
        assert!(s >= c && c >= g && g >= p);
    }

    #[test]
    fn categorize_is_total_and_deterministic() {
        let scheme = WeightingScheme::default_scheme();
        for token in ["", "a", "камера", "🎥", "stir!", "42"] {
            // Empty string is not pure punctuation (no chars), so it falls back.
            let first = categorize(token, &scheme);
            let second = categorize(token, &scheme);
            assert_eq!(first, second);
        }
    }
}
