//! Retrieval and reasoning-quality metrics: Recall@K, the ten-dimension
//! judge score, and mean +/- s.e.m. aggregation, plus the benchmark runner
//! that ties the query pipeline to a gallery index.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::LmmBackend;
use crate::gallery::{score, GalleryError, GalleryIndex};
use crate::model::{ReasoningRecord, Slot, Triplet};
use crate::pooling::PoolingStrategy;
use crate::reasoner::{
    encode_query, encode_query_no_reasoning, encode_query_refined, QueryArtifacts,
    ReasonerError, ReasonerOptions,
};

/// The standard report cutoffs.
pub const DEFAULT_KS: [u32; 4] = [1, 5, 10, 50];

/// Number of judge dimensions: one coverage and one correctness dimension
/// per slot.
pub const JUDGE_DIMENSIONS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no retrieval outcomes to aggregate")]
    EmptyOutcomes,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("judge unavailable: {0}")]
    JudgeUnavailable(String),
    #[error("malformed judge response: expected {JUDGE_DIMENSIONS} numeric scores, found {found}")]
    MalformedJudgeResponse { found: usize },
    #[error("triplet '{triplet_id}' names target '{target_id}' which is not in the gallery")]
    MissingTarget {
        triplet_id: String,
        target_id: String,
    },
    #[error("outcome invalid: rank {rank} outside 1..={gallery_size}")]
    InvalidRank { rank: usize, gallery_size: usize },
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
    #[error(transparent)]
    Gallery(#[from] GalleryError),
}

/// Where the ground-truth target landed for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalOutcome {
    pub triplet_id: String,
    /// 1-based rank of the ground-truth target in the full ranking.
    pub target_rank: usize,
    pub gallery_size: usize,
}

impl RetrievalOutcome {
    pub fn new(
        triplet_id: impl Into<String>,
        target_rank: usize,
        gallery_size: usize,
    ) -> Result<Self, EvalError> {
        if target_rank == 0 || target_rank > gallery_size {
            return Err(EvalError::InvalidRank {
                rank: target_rank,
                gallery_size,
            });
        }
        Ok(Self {
            triplet_id: triplet_id.into(),
            target_rank,
            gallery_size,
        })
    }
}

/// Recall@K over a batch of outcomes plus their arithmetic mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub recall_at: BTreeMap<u32, f64>,
    pub mean_recall: f64,
    pub n: usize,
}

/// recall_at[K] = fraction of outcomes whose target rank is <= K.
pub fn recall_at_k(outcomes: &[RetrievalOutcome], ks: &[u32]) -> Result<EvalReport, EvalError> {
    if outcomes.is_empty() {
        return Err(EvalError::EmptyOutcomes);
    }
    if ks.is_empty() {
        return Err(EvalError::EmptyInput("ks"));
    }
    let n = outcomes.len();
    let mut recall_at = BTreeMap::new();
    for &k in ks {
        let hits = outcomes
            .iter()
            .filter(|o| o.target_rank <= k as usize)
            .count();
        recall_at.insert(k, hits as f64 / n as f64);
    }
    let mean_recall = recall_at.values().sum::<f64>() / recall_at.len() as f64;
    Ok(EvalReport {
        recall_at,
        mean_recall,
        n,
    })
}

/// Ten per-dimension scores in [1, 10] and their arithmetic mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningScore {
    pub per_dimension: Vec<f64>,
    pub overall: f64,
}

/// A judge that compares a generated trace against ground truth and answers
/// with raw text carrying ten numeric scores. Temperature is pinned to 0.0
/// for remote judges.
pub trait JudgeClient: Send + Sync {
    fn judge(
        &self,
        generated: &ReasoningRecord,
        ground_truth: &ReasoningRecord,
    ) -> Result<String, EvalError>;
}

/// Parses the judge's response into exactly ten scores, clamping each to
/// [1, 10] rather than rejecting out-of-range numerics.
pub fn judge_trace(
    generated: &ReasoningRecord,
    ground_truth: &ReasoningRecord,
    judge: &dyn JudgeClient,
) -> Result<ReasoningScore, EvalError> {
    let raw = judge.judge(generated, ground_truth)?;
    let scores: Vec<f64> = raw
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .filter_map(|s| s.parse::<f64>().ok())
        .collect();
    if scores.len() != JUDGE_DIMENSIONS {
        return Err(EvalError::MalformedJudgeResponse {
            found: scores.len(),
        });
    }
    let per_dimension: Vec<f64> = scores.iter().map(|s| s.clamp(1.0, 10.0)).collect();
    let overall = per_dimension.iter().sum::<f64>() / per_dimension.len() as f64;
    Ok(ReasoningScore {
        per_dimension,
        overall,
    })
}

/// Deterministic judge used in tests and offline runs: per slot, one
/// coverage dimension (|gen ∩ truth| / |truth|) and one correctness
/// dimension (|gen ∩ truth| / |gen|), each mapped onto [1, 10] via
/// 1 + 9 * ratio. An entirely empty generated trace against a non-empty
/// ground truth floors every dimension at 1. Slots where the denominator is
/// empty score a full ratio for coverage, and for correctness exactly when
/// the truth slot is also empty.
pub struct MockJudge;

impl MockJudge {
    fn slot_texts(record: &ReasoningRecord, slot: Slot) -> Vec<String> {
        record
            .slot(slot)
            .iter()
            .filter(|a| !a.verify_only)
            .map(|a| a.canonical_text())
            .collect()
    }
}

impl JudgeClient for MockJudge {
    fn judge(
        &self,
        generated: &ReasoningRecord,
        ground_truth: &ReasoningRecord,
    ) -> Result<String, EvalError> {
        let gen_empty = generated.active_count() == 0;
        let truth_empty = ground_truth.active_count() == 0;
        let mut dims: Vec<f64> = Vec::with_capacity(JUDGE_DIMENSIONS);
        for slot in Slot::CANONICAL_ORDER {
            if gen_empty && !truth_empty {
                dims.push(1.0);
                dims.push(1.0);
                continue;
            }
            let gen = Self::slot_texts(generated, slot);
            let truth = Self::slot_texts(ground_truth, slot);
            let overlap = gen.iter().filter(|t| truth.contains(t)).count() as f64;
            let coverage = if truth.is_empty() {
                1.0
            } else {
                overlap / truth.len() as f64
            };
            let correctness = if gen.is_empty() {
                if truth.is_empty() {
                    1.0
                } else {
                    0.0
                }
            } else {
                overlap / gen.len() as f64
            };
            dims.push(1.0 + 9.0 * coverage);
            dims.push(1.0 + 9.0 * correctness);
        }
        Ok(dims
            .iter()
            .map(|d| format!("{d:.4}"))
            .collect::<Vec<_>>()
            .join(","))
    }
}

/// Remote judge speaking the same wire contract as the model backend, with
/// the temperature pinned to 0.0. The rubric names one coverage and one
/// correctness dimension per slot and asks for ten comma-separated numbers.
pub struct HttpJudge {
    config: crate::backend::RemoteConfig,
    client: reqwest::blocking::Client,
    auth_token: Option<String>,
}

impl HttpJudge {
    pub fn new(config: crate::backend::RemoteConfig) -> Result<Self, EvalError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| EvalError::JudgeUnavailable(e.to_string()))?;
        let auth_token = std::env::var(&config.auth_env).ok();
        Ok(Self {
            config,
            client,
            auth_token,
        })
    }

    fn rubric_prompt(generated: &ReasoningRecord, ground_truth: &ReasoningRecord) -> String {
        let mut dimensions = String::new();
        for (i, slot) in Slot::CANONICAL_ORDER.iter().enumerate() {
            dimensions.push_str(&format!(
                "{}. {slot} coverage  {}. {slot} correctness\n",
                2 * i + 1,
                2 * i + 2
            ));
        }
        format!(
            "Compare the generated reasoning trace against the ground truth trace.\n\
             Score each of these ten dimensions from 1 to 10:\n{dimensions}\n\
             Ground truth trace:\n{}\n\nGenerated trace:\n{}\n\n\
             Answer with exactly ten comma-separated numbers and nothing else.",
            ground_truth.render_effect_query(),
            generated.render_effect_query()
        )
    }
}

impl JudgeClient for HttpJudge {
    fn judge(
        &self,
        generated: &ReasoningRecord,
        ground_truth: &ReasoningRecord,
    ) -> Result<String, EvalError> {
        let request = crate::backend::GenerationRequest {
            model: self.config.model.clone(),
            messages: vec![crate::backend::ChatMessage {
                role: "user".to_string(),
                content: vec![crate::backend::ContentPart::Text {
                    text: Self::rubric_prompt(generated, ground_truth),
                }],
            }],
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: 64,
            return_hidden_states: false,
            layer_selector: self.config.layer_selector.clone(),
        };
        let url = format!("{}/generate", self.config.endpoint.trim_end_matches('/'));
        let mut req = self.client.post(&url).json(&request);
        if let Some(token) = &self.auth_token {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .map_err(|e| EvalError::JudgeUnavailable(format!("{url}: {e}")))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(EvalError::JudgeUnavailable(format!("{url}: {status}")));
        }
        let body: crate::backend::GenerationResponse = resp
            .json()
            .map_err(|e| EvalError::JudgeUnavailable(format!("{url}: bad body: {e}")))?;
        Ok(body.text)
    }
}

/// Mean and standard error of the mean over judged scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub mean: f64,
    pub sem: f64,
    pub n: usize,
}

/// sem = sample standard deviation (n-1 denominator) / sqrt(n); defined as
/// 0 for a single value.
pub fn summarize_scores(values: &[f64]) -> Result<ScoreSummary, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyInput("scores"));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sem = if n == 1 {
        0.0
    } else {
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        variance.sqrt() / (n as f64).sqrt()
    };
    Ok(ScoreSummary { mean, sem, n })
}

/// Which query pipeline a benchmark run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryVariant {
    /// Target description generated from (reference, edit) only.
    Base,
    /// Single-pass after-effect reasoning.
    PlusR,
    /// Iterative refinement with the given number of rounds.
    Refined { rounds: u32 },
}

impl QueryVariant {
    pub fn label(&self) -> String {
        match self {
            QueryVariant::Base => "base".to_string(),
            QueryVariant::PlusR => "plus_r".to_string(),
            QueryVariant::Refined { rounds } => format!("refined_{rounds}"),
        }
    }
}

pub struct BenchmarkConfig<'a> {
    pub variant: QueryVariant,
    pub strategy: &'a PoolingStrategy,
    pub reasoner: ReasonerOptions,
    pub judge: Option<&'a dyn JudgeClient>,
    /// Skip triplets whose target is absent from the gallery instead of
    /// failing the run.
    pub skip_missing: bool,
}

#[derive(Debug)]
pub struct BenchmarkOutcome {
    pub report: EvalReport,
    pub reasoning: Option<ScoreSummary>,
    pub outcomes: Vec<RetrievalOutcome>,
    /// Triplet ids skipped for a missing target (only with skip_missing).
    pub skipped_missing: Vec<String>,
    /// Triplets judged / skipped for lack of a parseable ground-truth trace.
    pub judged: usize,
    pub skipped_judging: usize,
}

/// Encodes a query per triplet, ranks it against the index, records the
/// target rank, and aggregates recalls (plus judge scores when enabled).
pub fn run_benchmark(
    triplets: &[Triplet],
    index: &GalleryIndex,
    backend: &dyn LmmBackend,
    config: &BenchmarkConfig<'_>,
) -> Result<BenchmarkOutcome, EvalError> {
    if triplets.is_empty() {
        return Err(EvalError::EmptyInput("triplets"));
    }
    let mut outcomes = Vec::new();
    let mut skipped_missing = Vec::new();
    let mut judged_scores = Vec::new();
    let mut judged = 0usize;
    let mut skipped_judging = 0usize;

    for triplet in triplets {
        if !index.contains(&triplet.target.id) {
            if config.skip_missing {
                skipped_missing.push(triplet.id.clone());
                continue;
            }
            return Err(EvalError::MissingTarget {
                triplet_id: triplet.id.clone(),
                target_id: triplet.target.id.clone(),
            });
        }
        let artifacts = encode_variant(triplet, backend, config)?;
        let ranked = score(&artifacts.query_embedding, index)?;
        let rank = ranked
            .rank_of(&triplet.target.id)
            .expect("target presence checked above");
        outcomes.push(RetrievalOutcome::new(&triplet.id, rank, ranked.len())?);

        if let Some(judge) = config.judge {
            let ground_truth = triplet
                .reasoning_brief
                .as_deref()
                .map(|text| crate::model::parse_trace(text).record.canonicalize())
                .unwrap_or_default();
            if ground_truth.active_count() == 0 {
                skipped_judging += 1;
            } else {
                let score = judge_trace(&artifacts.trace, &ground_truth, judge)?;
                judged_scores.push(score.overall);
                judged += 1;
            }
        }
    }

    if outcomes.is_empty() {
        return Err(EvalError::EmptyOutcomes);
    }
    let report = recall_at_k(&outcomes, &DEFAULT_KS)?;
    let reasoning = if judged_scores.is_empty() {
        None
    } else {
        Some(summarize_scores(&judged_scores)?)
    };
    Ok(BenchmarkOutcome {
        report,
        reasoning,
        outcomes,
        skipped_missing,
        judged,
        skipped_judging,
    })
}

fn encode_variant(
    triplet: &Triplet,
    backend: &dyn LmmBackend,
    config: &BenchmarkConfig<'_>,
) -> Result<QueryArtifacts, ReasonerError> {
    match config.variant {
        QueryVariant::Base => encode_query_no_reasoning(
            &triplet.reference,
            &triplet.edit,
            backend,
            config.strategy,
            &config.reasoner,
        ),
        QueryVariant::PlusR => encode_query(
            &triplet.reference,
            &triplet.edit,
            backend,
            config.strategy,
            &config.reasoner,
        ),
        QueryVariant::Refined { rounds } => encode_query_refined(
            &triplet.reference,
            &triplet.edit,
            backend,
            config.strategy,
            &config.reasoner,
            rounds,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_trace, Assertion};

    fn outcome(id: &str, rank: usize, size: usize) -> RetrievalOutcome {
        RetrievalOutcome::new(id, rank, size).unwrap()
    }

    #[test]
    fn single_outcome_rank_three() {
        let report = recall_at_k(&[outcome("t", 3, 100)], &DEFAULT_KS).unwrap();
        assert_eq!(report.recall_at[&1], 0.0);
        assert_eq!(report.recall_at[&5], 1.0);
        assert_eq!(report.recall_at[&10], 1.0);
        assert_eq!(report.recall_at[&50], 1.0);
        assert_eq!(report.mean_recall, 0.75);
        assert_eq!(report.n, 1);
    }

    #[test]
    fn perfect_retrieval() {
        let outcomes: Vec<_> = (0..10).map(|i| outcome(&format!("t{i}"), 1, 40)).collect();
        let report = recall_at_k(&outcomes, &DEFAULT_KS).unwrap();
        assert!(report.recall_at.values().all(|&r| r == 1.0));
        assert_eq!(report.mean_recall, 1.0);
    }

    #[test]
    fn empty_outcomes_rejected() {
        assert!(matches!(
            recall_at_k(&[], &DEFAULT_KS),
            Err(EvalError::EmptyOutcomes)
        ));
    }

    #[test]
    fn rank_bounds_validated() {
        assert!(RetrievalOutcome::new("t", 0, 10).is_err());
        assert!(RetrievalOutcome::new("t", 11, 10).is_err());
        assert!(RetrievalOutcome::new("t", 10, 10).is_ok());
    }

    #[test]
    fn judge_identity_scores_ten() {
        let record = parse_trace("actions: stirring\nstates: diced").record.canonicalize();
        let score = judge_trace(&record, &record, &MockJudge).unwrap();
        assert_eq!(score.per_dimension.len(), 10);
        assert!(score.per_dimension.iter().all(|&d| (d - 10.0).abs() < 1e-9));
        assert!((score.overall - 10.0).abs() < 1e-9);
    }

    #[test]
    fn judge_empty_generated_floors_at_one() {
        let truth = parse_trace("actions: stirring\ncamera: close-up").record.canonicalize();
        let empty = ReasoningRecord::new();
        let score = judge_trace(&empty, &truth, &MockJudge).unwrap();
        assert!(score.per_dimension.iter().all(|&d| (d - 1.0).abs() < 1e-9));
        assert!((score.overall - 1.0).abs() < 1e-9);
    }

    #[test]
    fn judge_partial_overlap_lands_between() {
        let truth = parse_trace("actions: stirring\nactions: pouring").record.canonicalize();
        let gen = parse_trace("actions: stirring").record.canonicalize();
        let score = judge_trace(&gen, &truth, &MockJudge).unwrap();
        // Coverage 1/2 -> 5.5, correctness 1/1 -> 10 on the actions slot.
        assert!((score.per_dimension[0] - 5.5).abs() < 1e-9);
        assert!((score.per_dimension[1] - 10.0).abs() < 1e-9);
        assert!(score.overall > 1.0 && score.overall < 10.0);
    }

    struct CannedJudge(&'static str);

    impl JudgeClient for CannedJudge {
        fn judge(&self, _: &ReasoningRecord, _: &ReasoningRecord) -> Result<String, EvalError> {
            Ok(self.0.to_string())
        }
    }

    #[test]
    fn three_scores_are_malformed() {
        let r = ReasoningRecord::new();
        let err = judge_trace(&r, &r, &CannedJudge("9,8,7"));
        assert!(matches!(
            err,
            Err(EvalError::MalformedJudgeResponse { found: 3 })
        ));
    }

    #[test]
    fn out_of_range_scores_clamp() {
        let r = ReasoningRecord::new();
        let score = judge_trace(&r, &r, &CannedJudge("0, 11, 5, 5, 5, 5, 5, 5, 5, -2")).unwrap();
        assert_eq!(score.per_dimension[0], 1.0);
        assert_eq!(score.per_dimension[1], 10.0);
        assert_eq!(score.per_dimension[9], 1.0);
    }

    #[test]
    fn summarize_hand_computed_cases() {
        let s = summarize_scores(&[8.31, 8.31, 8.31]).unwrap();
        assert!((s.mean - 8.31).abs() < 1e-12);
        assert_eq!(s.sem, 0.0);

        // [7, 9]: sample std = sqrt(2), sem = sqrt(2)/sqrt(2) = 1.
        let s = summarize_scores(&[7.0, 9.0]).unwrap();
        assert!((s.mean - 8.0).abs() < 1e-12);
        assert!((s.sem - 1.0).abs() < 1e-12);

        let s = summarize_scores(&[5.0]).unwrap();
        assert_eq!((s.mean, s.sem, s.n), (5.0, 0.0, 1));

        assert!(matches!(
            summarize_scores(&[]),
            Err(EvalError::EmptyInput(_))
        ));
    }

    #[test]
    fn benchmark_is_gallery_order_independent() {
        use crate::backend::MockBackend;
        use crate::gallery::{encode_gallery, EncodeOptions};
        use crate::model::{EditText, VideoRef};

        let mut mock = MockBackend::new(17);
        let mut videos = Vec::new();
        for (id, description) in [
            ("a", "a dog running across a field"),
            ("b", "a dog running through falling snow"),
            ("c", "a cup being filled with water"),
            ("d", "a full cup on a table"),
        ] {
            mock = mock.with_description(id, description);
            videos.push(VideoRef::from_id(id).unwrap());
        }
        mock = mock
            .with_trace("a", "make it snow", "scene: snowfall")
            .with_target("a", "make it snow", "a dog running through falling snow")
            .with_trace("c", "fill it up", "states: full")
            .with_target("c", "fill it up", "a full cup on a table");
        let triplets = vec![
            {
                let mut t = Triplet::new(
                    "t1",
                    VideoRef::from_id("a").unwrap(),
                    EditText::new("make it snow").unwrap(),
                    VideoRef::from_id("b").unwrap(),
                )
                .unwrap();
                t.reasoning_brief = Some("scene: snowfall".into());
                t
            },
            {
                let mut t = Triplet::new(
                    "t2",
                    VideoRef::from_id("c").unwrap(),
                    EditText::new("fill it up").unwrap(),
                    VideoRef::from_id("d").unwrap(),
                )
                .unwrap();
                t.reasoning_brief = Some("states: full".into());
                t
            },
        ];
        let strategy = PoolingStrategy::Mean;
        let run = |order: &[VideoRef]| {
            let outcome =
                encode_gallery(order, &mock, &strategy, EncodeOptions::default()).unwrap();
            run_benchmark(
                &triplets,
                &outcome.index,
                &mock,
                &BenchmarkConfig {
                    variant: QueryVariant::PlusR,
                    strategy: &strategy,
                    reasoner: Default::default(),
                    judge: Some(&MockJudge),
                    skip_missing: false,
                },
            )
            .unwrap()
        };
        let forward = run(&videos);
        let mut reversed_videos = videos.clone();
        reversed_videos.reverse();
        let reversed = run(&reversed_videos);
        assert_eq!(forward.report, reversed.report);
        assert_eq!(forward.reasoning, reversed.reasoning);
        assert_eq!(forward.report.recall_at[&1], 1.0);
    }

    #[test]
    fn http_judge_pins_temperature_to_zero() {
        use crate::testutil::TinyServer;
        let server = TinyServer::start(
            |_path, _body| r#"{"text": "10,9,8,7,6,5,4,3,2,1"}"#.to_string(),
            1,
        );
        let judge = HttpJudge::new(crate::backend::RemoteConfig {
            endpoint: server.addr.clone(),
            model: "judge-model".into(),
            auth_env: "COVR_TEST_JUDGE_TOKEN_UNSET".into(),
            layer_selector: "final".into(),
            embed_endpoint: None,
            timeout_secs: 10,
        })
        .unwrap();
        let truth = parse_trace("actions: stirring").record.canonicalize();
        let gen = parse_trace("actions: pouring").record.canonicalize();
        let score = judge_trace(&gen, &truth, &judge).unwrap();
        assert_eq!(score.per_dimension.len(), 10);
        assert_eq!(score.per_dimension[0], 10.0);

        let captured = server.finish();
        let request: crate::backend::GenerationRequest =
            serde_json::from_str(&captured[0].1).unwrap();
        assert_eq!(request.temperature, 0.0);
        assert!(!request.return_hidden_states);
        assert!(matches!(
            &request.messages[0].content[0],
            crate::backend::ContentPart::Text { text }
                if text.contains("actions: stirring") && text.contains("actions: pouring")
        ));
    }

    #[test]
    fn overall_equals_mean_of_dimensions() {
        let mut gen = ReasoningRecord::new();
        gen.try_push(Assertion::new(Slot::Actions, "stirring").unwrap()).unwrap();
        let truth = parse_trace("actions: stirring\ncamera: close-up\ntempo: faster")
            .record
            .canonicalize();
        let score = judge_trace(&gen, &truth, &MockJudge).unwrap();
        let mean = score.per_dimension.iter().sum::<f64>() / 10.0;
        assert!((score.overall - mean).abs() < 1e-9);
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn recall_is_monotone_and_bounded(
            ranks in proptest::collection::vec(1usize..=500, 1..60),
        ) {
            let outcomes: Vec<RetrievalOutcome> = ranks
                .iter()
                .enumerate()
                .map(|(i, &r)| RetrievalOutcome::new(format!("t{i}"), r, 500).unwrap())
                .collect();
            let report = recall_at_k(&outcomes, &DEFAULT_KS).unwrap();
            let values: Vec<f64> = report.recall_at.values().copied().collect();
            for w in values.windows(2) {
                prop_assert!(w[0] <= w[1], "recall not monotone: {:?}", report.recall_at);
            }
            for &v in &values {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            // K >= gallery size means every target is within the cutoff.
            let full = recall_at_k(&outcomes, &[500]).unwrap();
            prop_assert_eq!(full.recall_at[&500], 1.0);
        }

        #[test]
        fn sem_is_nonnegative_and_zero_on_constant(
            value in -10.0f64..10.0,
            n in 1usize..20,
        ) {
            let values = vec![value; n];
            let s = summarize_scores(&values).unwrap();
            prop_assert!(s.sem.abs() < 1e-9);
            prop_assert!((s.mean - value).abs() < 1e-9);
        }
    }
}
