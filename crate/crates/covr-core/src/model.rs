//! Core domain model: videos, edits, triplets, and the five-slot after-effect
//! reasoning record with its canonical text form.
//!
//! A reasoning record collects atomic assertions about what a target video
//! must show after an edit is applied to a reference video. Assertions live in
//! five slots (states, actions, scene, camera, tempo), each capped at four,
//! and are written in a canonical `slot: value` line form with an optional
//! relative operator against the reference and an optional evidence tag.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::curation::AcceptanceFlags;

/// Maximum number of assertions a single slot may hold.
pub const MAX_ASSERTIONS_PER_SLOT: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("{field} must not be empty")]
    EmptyField { field: &'static str },
    #[error("reference and target must be different videos (both are '{id}')")]
    SameReferenceTarget { id: String },
    #[error("fps hint must be positive, got {value}")]
    InvalidFps { value: f64 },
    #[error("confidence must lie in [0, 1], got {value}")]
    InvalidConfidence { value: f64 },
    #[error("assertion value must not contain conjunction token '{token}'")]
    Conjunction { token: &'static str },
    #[error("slot '{slot}' already holds {MAX_ASSERTIONS_PER_SLOT} assertions")]
    SlotOverflow { slot: Slot },
    #[error("assertion slot {actual} does not match destination slot {expected}")]
    SlotMismatch { expected: Slot, actual: Slot },
}

/// Identifies one gallery or triplet video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRef {
    pub id: String,
    pub uri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps_hint: Option<f64>,
}

impl VideoRef {
    pub fn new(id: impl Into<String>, uri: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        let uri = uri.into();
        if id.trim().is_empty() {
            return Err(ModelError::EmptyField { field: "video id" });
        }
        if uri.trim().is_empty() {
            return Err(ModelError::EmptyField { field: "video uri" });
        }
        Ok(Self { id, uri, fps_hint: None })
    }

    /// A reference whose locator is the id itself. Used when a corpus or
    /// cache records only ids and the backend resolves videos by id.
    pub fn from_id(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        Self::new(id.clone(), id)
    }

    pub fn with_fps_hint(mut self, fps: f64) -> Result<Self, ModelError> {
        if !fps.is_finite() || fps <= 0.0 {
            return Err(ModelError::InvalidFps { value: fps });
        }
        self.fps_hint = Some(fps);
        Ok(self)
    }
}

/// The modification instruction applied to a reference video.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EditText(String);

impl EditText {
    pub fn new(text: impl Into<String>) -> Result<Self, ModelError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ModelError::EmptyField { field: "edit text" });
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EditText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One benchmark unit: reference video, edit, target video, plus optional
/// annotation strings and curation flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub id: String,
    pub reference: VideoRef,
    pub edit: EditText,
    pub target: VideoRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modification_text: Option<String>,
    /// Brief reasoning summary; serialized under the corpus field name `reasoning`.
    #[serde(rename = "reasoning", default, skip_serializing_if = "Option::is_none")]
    pub reasoning_brief: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning_detailed: Option<String>,
    #[serde(default)]
    pub criteria_flags: AcceptanceFlags,
}

impl Triplet {
    pub fn new(
        id: impl Into<String>,
        reference: VideoRef,
        edit: EditText,
        target: VideoRef,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(ModelError::EmptyField { field: "triplet id" });
        }
        if reference.id == target.id {
            return Err(ModelError::SameReferenceTarget { id: reference.id });
        }
        Ok(Self {
            id,
            reference,
            edit,
            target,
            modification_text: None,
            reasoning_brief: None,
            reasoning_detailed: None,
            criteria_flags: AcceptanceFlags::default(),
        })
    }

    /// Checks the invariants that serde-based loading cannot enforce.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.reference.id == self.target.id {
            return Err(ModelError::SameReferenceTarget {
                id: self.reference.id.clone(),
            });
        }
        if let Some(detailed) = &self.reasoning_detailed {
            if detailed.trim().is_empty() {
                return Err(ModelError::EmptyField {
                    field: "reasoning_detailed",
                });
            }
        }
        Ok(())
    }
}

/// The five after-effect dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    States,
    Actions,
    Scene,
    Camera,
    Tempo,
}

impl Slot {
    /// Fixed emission order: actions, camera, states, scene, tempo.
    pub const CANONICAL_ORDER: [Slot; 5] = [
        Slot::Actions,
        Slot::Camera,
        Slot::States,
        Slot::Scene,
        Slot::Tempo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Slot::States => "states",
            Slot::Actions => "actions",
            Slot::Scene => "scene",
            Slot::Camera => "camera",
            Slot::Tempo => "tempo",
        }
    }

    pub fn parse(token: &str) -> Option<Slot> {
        match token.trim().to_ascii_lowercase().as_str() {
            "states" => Some(Slot::States),
            "actions" => Some(Slot::Actions),
            "scene" => Some(Slot::Scene),
            "camera" => Some(Slot::Camera),
            "tempo" => Some(Slot::Tempo),
            _ => None,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Relative operator comparing the asserted property against the reference video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    GreaterThanRef,
    LessThanRef,
    EqualToRef,
}

impl Relation {
    fn suffix(self) -> &'static str {
        match self {
            Relation::GreaterThanRef => " > ref",
            Relation::LessThanRef => " < ref",
            Relation::EqualToRef => " = ref",
        }
    }
}

/// Parsed form of an evidence tag, when it matches a known shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EvidenceSpan {
    /// Start and end in seconds.
    Seconds(f64, f64),
    /// A single frame index.
    Frame(u64),
}

/// Where in the target video an assertion can be checked. The raw tag is
/// stored verbatim; a parsed span is attached when the tag matches the
/// `<start>-<end>s` or bare-integer frame forms. No video decoding happens
/// here; grounding is the curation pipeline's concern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<EvidenceSpan>,
}

impl Evidence {
    pub fn parse(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let span = Self::parse_span(&raw);
        Self { raw, span }
    }

    fn parse_span(raw: &str) -> Option<EvidenceSpan> {
        if let Ok(frame) = raw.parse::<u64>() {
            return Some(EvidenceSpan::Frame(frame));
        }
        let body = raw.strip_suffix('s')?;
        let (start, end) = body.split_once('-')?;
        let start: f64 = start.parse().ok()?;
        let end: f64 = end.parse().ok()?;
        if start.is_finite() && end.is_finite() && start <= end {
            Some(EvidenceSpan::Seconds(start, end))
        } else {
            None
        }
    }
}

/// A single atomic after-effect claim: one observable effect, one predicate,
/// checkable over a concrete span of the target video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub slot: Slot,
    /// Head predicate used for contradiction detection. Derived from the
    /// value: the first word's stem, cut at the first hyphen, case-folded
    /// ("zoom-in" and "zoom-out" share the predicate "zoom").
    pub predicate: String,
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<Relation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Evidence>,
    pub confidence: f64,
    #[serde(default)]
    pub verify_only: bool,
}

const CONJUNCTIONS: [&str; 2] = ["and", "then"];

impl Assertion {
    pub fn new(slot: Slot, value: impl Into<String>) -> Result<Self, ModelError> {
        let value = value.into();
        let value = value.trim().to_string();
        if value.is_empty() {
            return Err(ModelError::EmptyField {
                field: "assertion value",
            });
        }
        for token in CONJUNCTIONS {
            if value
                .split_whitespace()
                .any(|word| word.eq_ignore_ascii_case(token))
            {
                return Err(ModelError::Conjunction { token });
            }
        }
        let predicate = derive_predicate(&value);
        Ok(Self {
            slot,
            predicate,
            value,
            relation: None,
            evidence: None,
            confidence: 1.0,
            verify_only: false,
        })
    }

    pub fn with_relation(mut self, relation: Relation) -> Self {
        self.relation = Some(relation);
        self
    }

    pub fn with_evidence(mut self, evidence: Evidence) -> Self {
        self.evidence = Some(evidence);
        self
    }

    pub fn with_confidence(mut self, confidence: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(ModelError::InvalidConfidence { value: confidence });
        }
        self.confidence = confidence;
        Ok(self)
    }

    /// The canonical `slot: value` text, with the relation suffix when
    /// present. Duplicate detection compares exactly this string; evidence
    /// and confidence are excluded.
    pub fn canonical_text(&self) -> String {
        match self.relation {
            Some(rel) => format!("{}: {}{}", self.slot, self.value, rel.suffix()),
            None => format!("{}: {}", self.slot, self.value),
        }
    }

    /// The full rendered line: canonical text plus the evidence tag.
    pub fn render_line(&self) -> String {
        match &self.evidence {
            Some(ev) => format!("{} @{}", self.canonical_text(), ev.raw),
            None => self.canonical_text(),
        }
    }

    /// Two assertions contradict when they share a slot and predicate but
    /// claim different values or carry opposing relations.
    pub fn contradicts(&self, other: &Assertion) -> bool {
        if self.slot != other.slot || self.predicate != other.predicate {
            return false;
        }
        if self.canonical_text() == other.canonical_text() {
            return false;
        }
        let opposing_relation = matches!((self.relation, other.relation),
            (Some(a), Some(b)) if a != b);
        self.value != other.value || opposing_relation
    }
}

fn derive_predicate(value: &str) -> String {
    let head = value.split_whitespace().next().unwrap_or(value);
    let stem = head.split('-').next().unwrap_or(head);
    stem.to_ascii_lowercase()
}

/// The five-slot set of atomic after-effect assertions for one (reference,
/// edit) pair.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReasoningRecord {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<Assertion>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<Assertion>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scene: Vec<Assertion>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub camera: Vec<Assertion>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tempo: Vec<Assertion>,
}

impl ReasoningRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn slot(&self, slot: Slot) -> &[Assertion] {
        match slot {
            Slot::States => &self.states,
            Slot::Actions => &self.actions,
            Slot::Scene => &self.scene,
            Slot::Camera => &self.camera,
            Slot::Tempo => &self.tempo,
        }
    }

    fn slot_mut(&mut self, slot: Slot) -> &mut Vec<Assertion> {
        match slot {
            Slot::States => &mut self.states,
            Slot::Actions => &mut self.actions,
            Slot::Scene => &mut self.scene,
            Slot::Camera => &mut self.camera,
            Slot::Tempo => &mut self.tempo,
        }
    }

    /// Appends an assertion, enforcing the per-slot cap and slot agreement.
    pub fn try_push(&mut self, assertion: Assertion) -> Result<(), ModelError> {
        let slot = assertion.slot;
        let list = self.slot_mut(slot);
        if list.len() >= MAX_ASSERTIONS_PER_SLOT {
            return Err(ModelError::SlotOverflow { slot });
        }
        list.push(assertion);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        Slot::CANONICAL_ORDER
            .iter()
            .all(|&s| self.slot(s).is_empty())
    }

    /// Assertions in canonical slot order (actions, camera, states, scene,
    /// tempo), input order within a slot.
    pub fn iter_canonical(&self) -> impl Iterator<Item = &Assertion> {
        Slot::CANONICAL_ORDER
            .into_iter()
            .flat_map(move |s| self.slot(s).iter())
    }

    /// Active (non-verify-only) assertions in canonical order.
    pub fn iter_active(&self) -> impl Iterator<Item = &Assertion> {
        self.iter_canonical().filter(|a| !a.verify_only)
    }

    pub fn active_count(&self) -> usize {
        self.iter_active().count()
    }

    /// The cleaning pass: collapses duplicates (canonical-text equality,
    /// first occurrence wins), resolves contradictions by keeping the
    /// higher-confidence assertion active and demoting the other to
    /// verify-only (ties keep the earlier one active), and fixes the slot
    /// emission order. Verify-only assertions are never re-promoted, which
    /// makes the pass idempotent. Total: never fails.
    pub fn canonicalize(&self) -> ReasoningRecord {
        let mut out = ReasoningRecord::new();
        for slot in Slot::CANONICAL_ORDER {
            let mut kept: Vec<Assertion> = Vec::new();
            for assertion in self.slot(slot) {
                let text = assertion.canonical_text();
                if kept.iter().any(|a| a.canonical_text() == text) {
                    continue;
                }
                kept.push(assertion.clone());
            }
            // Contradiction resolution over assertions that are still active.
            for i in 0..kept.len() {
                for j in (i + 1)..kept.len() {
                    if kept[i].verify_only || kept[j].verify_only {
                        continue;
                    }
                    if kept[i].contradicts(&kept[j]) {
                        if kept[j].confidence > kept[i].confidence {
                            kept[i].verify_only = true;
                        } else {
                            kept[j].verify_only = true;
                        }
                    }
                }
            }
            *out.slot_mut(slot) = kept;
        }
        out
    }

    /// Renders the active assertions to the effect-query text form: one line
    /// per assertion, slots in canonical order. Expects a canonicalized
    /// record; rendering does not re-canonicalize.
    pub fn render_effect_query(&self) -> EffectQuery {
        let lines: Vec<String> = self.iter_active().map(|a| a.render_line()).collect();
        EffectQuery(lines.join("\n"))
    }

    /// One unsatisfied-by-default checklist item per active assertion, in
    /// render order.
    pub fn derive_checklist(&self) -> Checklist {
        Checklist {
            items: self
                .iter_active()
                .map(|a| ChecklistItem {
                    assertion: a.canonical_text(),
                    satisfied: None,
                })
                .collect(),
        }
    }
}

/// The deterministic text rendering of a reasoning record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EffectQuery(String);

impl EffectQuery {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for EffectQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChecklistItem {
    pub assertion: String,
    /// None until a verification pass fills it in; treated as unsatisfied.
    pub satisfied: Option<bool>,
}

/// Binary checklist derived from a record's active assertions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Checklist {
    pub items: Vec<ChecklistItem>,
}

impl Checklist {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_satisfied(&self, index: usize) -> bool {
        self.items
            .get(index)
            .and_then(|i| i.satisfied)
            .unwrap_or(false)
    }
}

/// Why a trace line was not turned into an assertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TraceDiagnostic {
    /// Slot token outside the five-slot vocabulary.
    UnknownSlot { line_no: usize, line: String },
    /// The slot already holds the maximum number of assertions.
    SlotOverflow { line_no: usize, slot: Slot },
    /// No `:` separator on the line.
    MissingSeparator { line_no: usize, line: String },
    /// Empty value after the separator.
    EmptyValue { line_no: usize, slot: Slot },
    /// Value contains a conjunction token, violating atomicity.
    Conjunction { line_no: usize, line: String },
}

impl fmt::Display for TraceDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceDiagnostic::UnknownSlot { line_no, line } => {
                write!(f, "line {line_no}: unknown slot in '{line}'")
            }
            TraceDiagnostic::SlotOverflow { line_no, slot } => {
                write!(f, "line {line_no}: slot '{slot}' overflows {MAX_ASSERTIONS_PER_SLOT} assertions")
            }
            TraceDiagnostic::MissingSeparator { line_no, line } => {
                write!(f, "line {line_no}: missing ':' in '{line}'")
            }
            TraceDiagnostic::EmptyValue { line_no, slot } => {
                write!(f, "line {line_no}: empty value for slot '{slot}'")
            }
            TraceDiagnostic::Conjunction { line_no, line } => {
                write!(f, "line {line_no}: conjunction inside assertion '{line}'")
            }
        }
    }
}

/// Result of parsing raw trace text: the record plus every malformed line,
/// collected rather than silently dropped so curation tooling can lint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedTrace {
    pub record: ReasoningRecord,
    pub diagnostics: Vec<TraceDiagnostic>,
}

/// Parses canonical `slot: value` trace text into a reasoning record.
///
/// Each line may carry a relation suffix (`> ref`, `< ref`, `= ref`) and a
/// trailing `@<evidence>` tag. Blank lines and leading list markers
/// (`-`, `*`, `1.`, `(2)`) are tolerated. Malformed lines become diagnostics.
pub fn parse_trace(raw: &str) -> ParsedTrace {
    let mut out = ParsedTrace::default();
    for (idx, raw_line) in raw.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_list_marker(raw_line.trim());
        if line.is_empty() {
            continue;
        }
        let Some((slot_token, rest)) = line.split_once(':') else {
            out.diagnostics.push(TraceDiagnostic::MissingSeparator {
                line_no,
                line: line.to_string(),
            });
            continue;
        };
        let Some(slot) = Slot::parse(slot_token) else {
            out.diagnostics.push(TraceDiagnostic::UnknownSlot {
                line_no,
                line: line.to_string(),
            });
            continue;
        };
        let mut body = rest.trim().to_string();

        // Trailing evidence tag: last whitespace-separated token starting with '@'.
        let mut evidence = None;
        if let Some(pos) = body.rfind(" @") {
            let tag = &body[pos + 2..];
            if !tag.is_empty() && !tag.contains(char::is_whitespace) {
                evidence = Some(Evidence::parse(tag));
                body.truncate(pos);
            }
        }

        // Relation suffix after evidence removal.
        let mut relation = None;
        for (suffix, rel) in [
            (" > ref", Relation::GreaterThanRef),
            (" < ref", Relation::LessThanRef),
            (" = ref", Relation::EqualToRef),
        ] {
            if let Some(stripped) = body.strip_suffix(suffix) {
                relation = Some(rel);
                body = stripped.to_string();
                break;
            }
        }

        let value = body.trim();
        if value.is_empty() {
            out.diagnostics
                .push(TraceDiagnostic::EmptyValue { line_no, slot });
            continue;
        }
        let assertion = match Assertion::new(slot, value) {
            Ok(a) => a,
            Err(ModelError::Conjunction { .. }) => {
                out.diagnostics.push(TraceDiagnostic::Conjunction {
                    line_no,
                    line: line.to_string(),
                });
                continue;
            }
            Err(_) => {
                out.diagnostics.push(TraceDiagnostic::EmptyValue { line_no, slot });
                continue;
            }
        };
        let mut assertion = assertion;
        assertion.relation = relation;
        assertion.evidence = evidence;
        if out.record.try_push(assertion).is_err() {
            out.diagnostics
                .push(TraceDiagnostic::SlotOverflow { line_no, slot });
        }
    }
    out
}

fn strip_list_marker(line: &str) -> &str {
    let trimmed = line.trim_start_matches(['-', '*']).trim_start();
    // "1." / "2)" / "(3)" enumeration prefixes.
    let mut rest = trimmed;
    if let Some(inner) = rest.strip_prefix('(') {
        if let Some(close) = inner.find(')') {
            if inner[..close].chars().all(|c| c.is_ascii_digit()) && close > 0 {
                rest = inner[close + 1..].trim_start();
            }
        }
    } else {
        let digits: usize = rest.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits > 0 {
            let after = &rest[digits..];
            if let Some(stripped) = after.strip_prefix(['.', ')']) {
                rest = stripped.trim_start();
            }
        }
    }
    rest
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assertion(slot: Slot, value: &str) -> Assertion {
        Assertion::new(slot, value).unwrap()
    }

    #[test]
    fn parse_two_slots() {
        let parsed = parse_trace("actions: stirring\ncamera: close-up");
        assert!(parsed.diagnostics.is_empty());
        assert_eq!(parsed.record.actions.len(), 1);
        assert_eq!(parsed.record.actions[0].value, "stirring");
        assert_eq!(parsed.record.camera.len(), 1);
        assert_eq!(parsed.record.camera[0].value, "close-up");
        assert!(parsed.record.states.is_empty());
        assert!(parsed.record.scene.is_empty());
        assert!(parsed.record.tempo.is_empty());
    }

    #[test]
    fn parse_empty_input() {
        let parsed = parse_trace("");
        assert!(parsed.record.is_empty());
        assert!(parsed.diagnostics.is_empty());
    }

    #[test]
    fn parse_relation_suffix() {
        let parsed = parse_trace("camera: tighter > ref");
        let a = &parsed.record.camera[0];
        assert_eq!(a.value, "tighter");
        assert_eq!(a.relation, Some(Relation::GreaterThanRef));
        // Round-trip through render keeps the assertion.
        let rendered = parsed.record.canonicalize().render_effect_query();
        let again = parse_trace(rendered.as_str());
        assert_eq!(again.record.camera[0].canonical_text(), a.canonical_text());
    }

    #[test]
    fn parse_evidence_tags() {
        let parsed = parse_trace("states: browned @3.5-7.0s\nactions: pouring @42");
        let states = &parsed.record.states[0];
        assert_eq!(
            states.evidence.as_ref().unwrap().span,
            Some(EvidenceSpan::Seconds(3.5, 7.0))
        );
        let actions = &parsed.record.actions[0];
        assert_eq!(
            actions.evidence.as_ref().unwrap().span,
            Some(EvidenceSpan::Frame(42))
        );
    }

    #[test]
    fn parse_unknown_slot_collected() {
        let parsed = parse_trace("mood: gloomy\nactions: running");
        assert_eq!(parsed.record.actions.len(), 1);
        assert!(matches!(
            parsed.diagnostics[0],
            TraceDiagnostic::UnknownSlot { line_no: 1, .. }
        ));
    }

    #[test]
    fn parse_slot_overflow_collected() {
        let raw = "actions: a\nactions: b\nactions: c\nactions: d\nactions: e";
        let parsed = parse_trace(raw);
        assert_eq!(parsed.record.actions.len(), 4);
        assert!(matches!(
            parsed.diagnostics[0],
            TraceDiagnostic::SlotOverflow {
                slot: Slot::Actions,
                ..
            }
        ));
    }

    #[test]
    fn parse_conjunction_rejected() {
        let parsed = parse_trace("actions: chopping then stirring");
        assert!(parsed.record.is_empty());
        assert!(matches!(
            parsed.diagnostics[0],
            TraceDiagnostic::Conjunction { .. }
        ));
    }

    #[test]
    fn parse_list_markers_tolerated() {
        let parsed = parse_trace("1. actions: running\n- camera: close-up\n(2) tempo: faster");
        assert_eq!(parsed.record.actions.len(), 1);
        assert_eq!(parsed.record.camera.len(), 1);
        assert_eq!(parsed.record.tempo.len(), 1);
    }

    #[test]
    fn canonicalize_collapses_duplicates() {
        let mut r = ReasoningRecord::new();
        r.try_push(assertion(Slot::Actions, "stirring")).unwrap();
        r.try_push(assertion(Slot::Actions, "stirring")).unwrap();
        let c = r.canonicalize();
        assert_eq!(c.actions.len(), 1);
    }

    #[test]
    fn canonicalize_keeps_higher_confidence() {
        let mut r = ReasoningRecord::new();
        r.try_push(
            assertion(Slot::Camera, "zoom-in")
                .with_confidence(0.9)
                .unwrap(),
        )
        .unwrap();
        r.try_push(
            assertion(Slot::Camera, "zoom-out")
                .with_confidence(0.4)
                .unwrap(),
        )
        .unwrap();
        let c = r.canonicalize();
        assert_eq!(c.camera.len(), 2);
        let zoom_in = c.camera.iter().find(|a| a.value == "zoom-in").unwrap();
        let zoom_out = c.camera.iter().find(|a| a.value == "zoom-out").unwrap();
        assert!(!zoom_in.verify_only);
        assert!(zoom_out.verify_only);
    }

    #[test]
    fn canonicalize_confidence_tie_keeps_first() {
        let mut r = ReasoningRecord::new();
        r.try_push(assertion(Slot::Tempo, "pace-faster")).unwrap();
        r.try_push(assertion(Slot::Tempo, "pace-slower")).unwrap();
        let c = r.canonicalize();
        assert!(!c.tempo[0].verify_only);
        assert!(c.tempo[1].verify_only);
    }

    #[test]
    fn canonicalize_opposing_relations_contradict() {
        let mut r = ReasoningRecord::new();
        r.try_push(assertion(Slot::Camera, "tighter").with_relation(Relation::GreaterThanRef))
            .unwrap();
        r.try_push(
            assertion(Slot::Camera, "tighter")
                .with_relation(Relation::LessThanRef)
                .with_confidence(0.8)
                .unwrap(),
        )
        .unwrap();
        let c = r.canonicalize();
        assert!(!c.camera[0].verify_only);
        assert!(c.camera[1].verify_only);
    }

    #[test]
    fn different_predicates_do_not_contradict() {
        let a = assertion(Slot::States, "full");
        let b = assertion(Slot::States, "empty");
        assert!(!a.contradicts(&b));
    }

    #[test]
    fn render_empty_record() {
        let r = ReasoningRecord::new();
        assert_eq!(r.render_effect_query().as_str(), "");
    }

    #[test]
    fn render_fixed_slot_order() {
        let mut r = ReasoningRecord::new();
        r.try_push(assertion(Slot::States, "full")).unwrap();
        r.try_push(assertion(Slot::Actions, "pour")).unwrap();
        let q = r.canonicalize().render_effect_query();
        assert_eq!(q.as_str(), "actions: pour\nstates: full");
    }

    #[test]
    fn render_excludes_verify_only() {
        let mut r = ReasoningRecord::new();
        r.try_push(assertion(Slot::Camera, "zoom-in")).unwrap();
        r.try_push(
            assertion(Slot::Camera, "zoom-out")
                .with_confidence(0.2)
                .unwrap(),
        )
        .unwrap();
        let c = r.canonicalize();
        let q = c.render_effect_query();
        assert_eq!(q.as_str(), "camera: zoom-in");
    }

    #[test]
    fn checklist_counts_active_only() {
        let mut r = ReasoningRecord::new();
        r.try_push(assertion(Slot::Actions, "pour")).unwrap();
        r.try_push(assertion(Slot::States, "full")).unwrap();
        r.try_push(assertion(Slot::Scene, "kitchen")).unwrap();
        let mut demoted = assertion(Slot::Tempo, "slower");
        demoted.verify_only = true;
        r.try_push(demoted).unwrap();
        let checklist = r.derive_checklist();
        assert_eq!(checklist.len(), 3);
        assert!(!checklist.is_satisfied(0));
    }

    #[test]
    fn checklist_order_matches_render_order() {
        let parsed = parse_trace("tempo: faster\nactions: stirring\ncamera: close-up");
        let c = parsed.record.canonicalize();
        let rendered = c.render_effect_query();
        let lines: Vec<&str> = rendered.as_str().lines().collect();
        let checklist = c.derive_checklist();
        let items: Vec<String> = checklist.items.iter().map(|i| i.assertion.clone()).collect();
        assert_eq!(items, lines);
    }

    #[test]
    fn triplet_rejects_same_reference_target() {
        let v = VideoRef::from_id("v1").unwrap();
        let err = Triplet::new(
            "t1",
            v.clone(),
            EditText::new("make it snow").unwrap(),
            v,
        );
        assert!(matches!(err, Err(ModelError::SameReferenceTarget { .. })));
    }

    #[test]
    fn edit_text_rejects_whitespace() {
        assert!(EditText::new("   ").is_err());
        assert!(EditText::new("pan left").is_ok());
    }

    #[test]
    fn slot_cap_enforced_on_push() {
        let mut r = ReasoningRecord::new();
        for v in ["a", "b", "c", "d"] {
            r.try_push(assertion(Slot::Scene, v)).unwrap();
        }
        assert!(matches!(
            r.try_push(assertion(Slot::Scene, "e")),
            Err(ModelError::SlotOverflow { slot: Slot::Scene })
        ));
    }
}

#[cfg(test)]
pub(crate) mod generators {
    //! Proptest generators shared by the property suites.

    use super::*;
    use proptest::prelude::*;

    pub fn arb_slot() -> impl Strategy<Value = Slot> {
        prop_oneof![
            Just(Slot::States),
            Just(Slot::Actions),
            Just(Slot::Scene),
            Just(Slot::Camera),
            Just(Slot::Tempo),
        ]
    }

    pub fn arb_relation() -> impl Strategy<Value = Option<Relation>> {
        prop_oneof![
            Just(None),
            Just(Some(Relation::GreaterThanRef)),
            Just(Some(Relation::LessThanRef)),
            Just(Some(Relation::EqualToRef)),
        ]
    }

    prop_compose! {
        pub fn arb_assertion()(
            slot in arb_slot(),
            value in "[a-z]{1,8}(-[a-z]{1,6})?",
            relation in arb_relation(),
            confidence in 0.0f64..=1.0,
            evidence in prop_oneof![
                Just(None),
                (0.0f64..30.0, 0.0f64..30.0).prop_map(|(a, b)| {
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    Some(Evidence::parse(format!("{lo:.1}-{hi:.1}s")))
                }),
                (0u64..500).prop_map(|f| Some(Evidence::parse(f.to_string()))),
            ],
        ) -> Assertion {
            let mut a = Assertion::new(slot, value).unwrap()
                .with_confidence(confidence).unwrap();
            a.relation = relation;
            a.evidence = evidence;
            a
        }
    }

    pub fn arb_record() -> impl Strategy<Value = ReasoningRecord> {
        proptest::collection::vec(arb_assertion(), 0..14).prop_map(|assertions| {
            let mut r = ReasoningRecord::new();
            for a in assertions {
                let _ = r.try_push(a); // overflow beyond 4 per slot is dropped
            }
            r
        })
    }
}
