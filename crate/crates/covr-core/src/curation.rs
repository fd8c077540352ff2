//! Benchmark curation: the triplet-acceptance predicate and the synthesis
//! filters for clip corpora without native composed triplets.
//!
//! A candidate triplet is accepted when it satisfies at least `min_criteria`
//! of five criteria. Criteria (i)-(iv) are semantic judgments supplied as
//! flags by annotators or upstream heuristics; only (v), low lexical
//! sufficiency, is computed here (Jaccard overlap of salient tokens below a
//! strict threshold).

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::lexicon::{categorize, LexicalCategory, WeightingScheme};
use crate::model::{EditText, Triplet};

#[derive(Debug, thiserror::Error)]
pub enum CurationError {
    #[error("candidate '{id}' is missing the {which} video description")]
    MissingDescriptions { id: String, which: &'static str },
}

/// Per-candidate criterion inputs. The boolean flags are inputs; the overlap
/// is computed by `lexical_overlap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceFlags {
    #[serde(default)]
    pub temporal_dependency: bool,
    #[serde(default)]
    pub state_transition: bool,
    #[serde(default)]
    pub cinematography: bool,
    #[serde(default)]
    pub implicit_cause_effect: bool,
    #[serde(default = "default_overlap")]
    pub lexical_overlap: f64,
}

fn default_overlap() -> f64 {
    1.0
}

impl Default for AcceptanceFlags {
    fn default() -> Self {
        Self {
            temporal_dependency: false,
            state_transition: false,
            cinematography: false,
            implicit_cause_effect: false,
            // Full overlap: criterion (v) unsatisfied until computed.
            lexical_overlap: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurationConfig {
    pub min_criteria: u32,
    /// Criterion (v) fires only strictly below this.
    pub overlap_threshold: f64,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            min_criteria: 2,
            overlap_threshold: 0.3,
        }
    }
}

/// The five acceptance criteria, labeled (i)-(v).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    TemporalDependency,
    StateTransition,
    Cinematography,
    ImplicitCauseEffect,
    LowLexicalSufficiency,
}

impl Criterion {
    pub fn label(self) -> &'static str {
        match self {
            Criterion::TemporalDependency => "(i) temporal dependency",
            Criterion::StateTransition => "(ii) state transition",
            Criterion::Cinematography => "(iii) cinematography",
            Criterion::ImplicitCauseEffect => "(iv) implicit cause-effect",
            Criterion::LowLexicalSufficiency => "(v) low lexical sufficiency",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceDecision {
    pub accepted: bool,
    pub satisfied: Vec<Criterion>,
}

/// Case-folded salient tokens of a text, with punctuation trimmed off the
/// token edges.
pub fn salient_tokens(text: &str, scheme: &WeightingScheme) -> BTreeSet<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .filter(|t| categorize(t, scheme) == LexicalCategory::Salient)
        .collect()
}

/// Jaccard similarity over the salient tokens of the edit and the target's
/// description. Two empty salient sets give 0.0.
pub fn lexical_overlap(edit: &EditText, target_description: &str, scheme: &WeightingScheme) -> f64 {
    let a = salient_tokens(edit.as_str(), scheme);
    let b = salient_tokens(target_description, scheme);
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let intersection = a.intersection(&b).count();
    let union = a.union(&b).count();
    intersection as f64 / union as f64
}

/// Applies the at-least-`min_criteria` rule and returns the satisfied list
/// for the audit log. Criterion (v) counts exactly when the overlap is
/// strictly below the threshold.
pub fn accept_triplet(flags: &AcceptanceFlags, config: &CurationConfig) -> AcceptanceDecision {
    let mut satisfied = Vec::new();
    if flags.temporal_dependency {
        satisfied.push(Criterion::TemporalDependency);
    }
    if flags.state_transition {
        satisfied.push(Criterion::StateTransition);
    }
    if flags.cinematography {
        satisfied.push(Criterion::Cinematography);
    }
    if flags.implicit_cause_effect {
        satisfied.push(Criterion::ImplicitCauseEffect);
    }
    if flags.lexical_overlap < config.overlap_threshold {
        satisfied.push(Criterion::LowLexicalSufficiency);
    }
    AcceptanceDecision {
        accepted: satisfied.len() >= config.min_criteria as usize,
        satisfied,
    }
}

/// Synthesis filter for clip pairs: keeps a candidate only when
/// (a) the two descriptions share at least one salient token,
/// (b) a phase or state flag is set, and
/// (c) no single salient edit token already separates the target description
///     from the reference description (the single-keyword disqualifier).
pub fn ssv2_pair_filter(
    candidate: &Triplet,
    reference_description: Option<&str>,
    target_description: Option<&str>,
    flags: &AcceptanceFlags,
    scheme: &WeightingScheme,
) -> Result<bool, CurationError> {
    let reference_description = non_empty(reference_description).ok_or_else(|| {
        CurationError::MissingDescriptions {
            id: candidate.id.clone(),
            which: "reference",
        }
    })?;
    let target_description = non_empty(target_description).ok_or_else(|| {
        CurationError::MissingDescriptions {
            id: candidate.id.clone(),
            which: "target",
        }
    })?;

    let ref_tokens = salient_tokens(reference_description, scheme);
    let tgt_tokens = salient_tokens(target_description, scheme);
    if ref_tokens.intersection(&tgt_tokens).next().is_none() {
        return Ok(false);
    }
    if !(flags.temporal_dependency || flags.state_transition) {
        return Ok(false);
    }
    let edit_tokens = salient_tokens(candidate.edit.as_str(), scheme);
    let single_keyword_resolvable = edit_tokens
        .iter()
        .any(|t| tgt_tokens.contains(t) && !ref_tokens.contains(t));
    Ok(!single_keyword_resolvable)
}

fn non_empty(text: Option<&str>) -> Option<&str> {
    text.filter(|t| !t.trim().is_empty())
}

/// A candidate distractor for hard-negative mining.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardNegativeCandidate {
    pub id: String,
    pub description: String,
    #[serde(default)]
    pub temporal_dependency: bool,
    #[serde(default)]
    pub state_transition: bool,
}

/// Keeps candidates that share at least one salient token with the target
/// description while lacking any phase/state signal. Input order preserved;
/// ordering among negatives is left to retrieval scoring.
pub fn mine_hard_negatives(
    target_description: &str,
    candidates: &[HardNegativeCandidate],
    scheme: &WeightingScheme,
) -> Vec<String> {
    let target_tokens = salient_tokens(target_description, scheme);
    candidates
        .iter()
        .filter(|c| {
            let tokens = salient_tokens(&c.description, scheme);
            let shares = tokens.intersection(&target_tokens).next().is_some();
            shares && !(c.temporal_dependency || c.state_transition)
        })
        .map(|c| c.id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VideoRef;

    fn scheme() -> WeightingScheme {
        WeightingScheme::default_scheme()
    }

    fn edit(text: &str) -> EditText {
        EditText::new(text).unwrap()
    }

    #[test]
    fn overlap_identity_is_one() {
        let text = "stir the peppers in a pan";
        assert_eq!(lexical_overlap(&edit(text), text, &scheme()), 1.0);
    }

    #[test]
    fn overlap_disjoint_is_zero() {
        let overlap = lexical_overlap(
            &edit("a dog runs outside"),
            "pour water into the glass",
            &scheme(),
        );
        assert_eq!(overlap, 0.0);
    }

    #[test]
    fn overlap_half_case() {
        // Salient sets {stir, pepper(s), pan} vs {stir, pan, stove}:
        // intersection 2, union 4.
        let overlap = lexical_overlap(
            &edit("the stir of peppers in the pan"),
            "stir in the pan on the stove",
            &scheme(),
        );
        assert!((overlap - 0.5).abs() < 1e-12, "got {overlap}");
    }

    #[test]
    fn overlap_no_salient_tokens_is_zero() {
        let overlap = lexical_overlap(&edit("the of and"), "a an the", &scheme());
        assert_eq!(overlap, 0.0);
    }

    #[test]
    fn two_flags_accept() {
        let flags = AcceptanceFlags {
            temporal_dependency: true,
            cinematography: true,
            lexical_overlap: 0.9,
            ..Default::default()
        };
        let decision = accept_triplet(&flags, &CurationConfig::default());
        assert!(decision.accepted);
        assert_eq!(decision.satisfied.len(), 2);
    }

    #[test]
    fn zero_criteria_reject() {
        let flags = AcceptanceFlags {
            lexical_overlap: 0.9,
            ..Default::default()
        };
        let decision = accept_triplet(&flags, &CurationConfig::default());
        assert!(!decision.accepted);
        assert!(decision.satisfied.is_empty());
    }

    #[test]
    fn one_flag_plus_low_overlap_accepts() {
        let flags = AcceptanceFlags {
            state_transition: true,
            lexical_overlap: 0.1,
            ..Default::default()
        };
        let decision = accept_triplet(&flags, &CurationConfig::default());
        assert!(decision.accepted);
        assert_eq!(decision.satisfied.len(), 2);
        assert!(decision.satisfied.contains(&Criterion::LowLexicalSufficiency));
    }

    #[test]
    fn threshold_boundary_is_strict() {
        let config = CurationConfig::default();
        let at = AcceptanceFlags {
            temporal_dependency: true,
            lexical_overlap: config.overlap_threshold,
            ..Default::default()
        };
        let decision = accept_triplet(&at, &config);
        assert!(!decision.satisfied.contains(&Criterion::LowLexicalSufficiency));
        assert!(!decision.accepted);

        let below = AcceptanceFlags {
            lexical_overlap: config.overlap_threshold - 1e-9,
            ..at
        };
        let decision = accept_triplet(&below, &config);
        assert!(decision.satisfied.contains(&Criterion::LowLexicalSufficiency));
        assert!(decision.accepted);
    }

    #[test]
    fn min_criteria_override() {
        let flags = AcceptanceFlags {
            temporal_dependency: true,
            state_transition: true,
            lexical_overlap: 0.9,
            ..Default::default()
        };
        let config = CurationConfig {
            min_criteria: 3,
            ..Default::default()
        };
        assert!(!accept_triplet(&flags, &config).accepted);
        assert!(accept_triplet(&flags, &CurationConfig::default()).accepted);
    }

    fn candidate(edit_text: &str) -> Triplet {
        Triplet::new(
            "c1",
            VideoRef::from_id("ref").unwrap(),
            EditText::new(edit_text).unwrap(),
            VideoRef::from_id("tgt").unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn ssv2_keeps_reasoning_dependent_pair() {
        // Shared object "cup"; state flag set; the salient edit token "full"
        // does not appear in the target description.
        let flags = AcceptanceFlags {
            state_transition: true,
            ..Default::default()
        };
        let keep = ssv2_pair_filter(
            &candidate("now the liquid is poured so the cup is full"),
            Some("an empty cup on a table"),
            Some("a cup on a table holding water"),
            &flags,
            &scheme(),
        )
        .unwrap();
        assert!(keep);
    }

    #[test]
    fn ssv2_rejects_without_shared_object() {
        let flags = AcceptanceFlags {
            state_transition: true,
            ..Default::default()
        };
        let keep = ssv2_pair_filter(
            &candidate("fill the cup"),
            Some("a dog in a garden"),
            Some("a cup of water"),
            &flags,
            &scheme(),
        )
        .unwrap();
        assert!(!keep);
    }

    #[test]
    fn ssv2_rejects_single_keyword_resolvable() {
        // "snow" is salient, present in the target description, absent from
        // the reference description: one keyword resolves the pair.
        let flags = AcceptanceFlags {
            temporal_dependency: true,
            ..Default::default()
        };
        let keep = ssv2_pair_filter(
            &candidate("add snow falling over the dog"),
            Some("a dog runs across a field"),
            Some("a dog runs through falling snow"),
            &flags,
            &scheme(),
        )
        .unwrap();
        assert!(!keep);
    }

    #[test]
    fn ssv2_rejects_without_phase_or_state_flag() {
        let flags = AcceptanceFlags::default();
        let keep = ssv2_pair_filter(
            &candidate("the cup fills"),
            Some("a cup on a table"),
            Some("a cup being held"),
            &flags,
            &scheme(),
        )
        .unwrap();
        assert!(!keep);
    }

    #[test]
    fn ssv2_missing_descriptions_error() {
        let flags = AcceptanceFlags::default();
        let err = ssv2_pair_filter(&candidate("x y"), None, Some("a cup"), &flags, &scheme());
        assert!(matches!(
            err,
            Err(CurationError::MissingDescriptions { which: "reference", .. })
        ));
        let err = ssv2_pair_filter(&candidate("x y"), Some("a cup"), Some("  "), &flags, &scheme());
        assert!(matches!(
            err,
            Err(CurationError::MissingDescriptions { which: "target", .. })
        ));
    }

    #[test]
    fn hard_negatives_share_tokens_but_lack_phase() {
        let candidates = vec![
            HardNegativeCandidate {
                id: "n1".into(),
                description: "a cup being filled with water".into(),
                temporal_dependency: false,
                state_transition: false,
            },
            HardNegativeCandidate {
                id: "n2".into(),
                description: "a cup with a proper state change".into(),
                temporal_dependency: true,
                state_transition: false,
            },
            HardNegativeCandidate {
                id: "n3".into(),
                description: "a garden of flowers".into(),
                temporal_dependency: false,
                state_transition: false,
            },
        ];
        let negatives = mine_hard_negatives("a full cup of water", &candidates, &scheme());
        assert_eq!(negatives, vec!["n1".to_string()]);
    }

    #[test]
    fn enumeration_over_flag_combinations() {
        // Independent oracle: count satisfied criteria explicitly for all
        // 2^4 flag combinations x {below, at, above} overlap cases.
        let config = CurationConfig::default();
        for bits in 0u8..16 {
            for (overlap, counts_v) in [
                (config.overlap_threshold - 0.05, true),
                (config.overlap_threshold, false),
                (config.overlap_threshold + 0.05, false),
            ] {
                let flags = AcceptanceFlags {
                    temporal_dependency: bits & 1 != 0,
                    state_transition: bits & 2 != 0,
                    cinematography: bits & 4 != 0,
                    implicit_cause_effect: bits & 8 != 0,
                    lexical_overlap: overlap,
                };
                let expected_count = bits.count_ones() as usize + usize::from(counts_v);
                let decision = accept_triplet(&flags, &config);
                assert_eq!(decision.satisfied.len(), expected_count);
                assert_eq!(decision.accepted, expected_count >= 2);
            }
        }
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn adding_a_flag_never_unaccepts(
            bits in 0u8..16,
            overlap in 0.0f64..1.0,
            extra in 0usize..4,
        ) {
            let config = CurationConfig::default();
            let base = AcceptanceFlags {
                temporal_dependency: bits & 1 != 0,
                state_transition: bits & 2 != 0,
                cinematography: bits & 4 != 0,
                implicit_cause_effect: bits & 8 != 0,
                lexical_overlap: overlap,
            };
            let mut improved = base;
            match extra {
                0 => improved.temporal_dependency = true,
                1 => improved.state_transition = true,
                2 => improved.cinematography = true,
                _ => improved.implicit_cause_effect = true,
            }
            let before = accept_triplet(&base, &config);
            let after = accept_triplet(&improved, &config);
            prop_assert!(!(before.accepted && !after.accepted));
            prop_assert!(after.satisfied.len() >= before.satisfied.len());
        }

        #[test]
        fn satisfied_list_drives_the_decision(
            bits in 0u8..16,
            overlap in 0.0f64..1.0,
            min_criteria in 1u32..=5,
        ) {
            let config = CurationConfig { min_criteria, overlap_threshold: 0.3 };
            let flags = AcceptanceFlags {
                temporal_dependency: bits & 1 != 0,
                state_transition: bits & 2 != 0,
                cinematography: bits & 4 != 0,
                implicit_cause_effect: bits & 8 != 0,
                lexical_overlap: overlap,
            };
            let decision = accept_triplet(&flags, &config);
            prop_assert_eq!(
                decision.accepted,
                decision.satisfied.len() >= min_criteria as usize
            );
        }
    }
}
