//! Zero-shot composed video retrieval.
//!
//! Given a reference video and a textual edit, the engine reasons about the
//! edit's after-effects (object states, actions, scene, camera, tempo),
//! generates a hypothetical target description, pools its token embeddings
//! into a query vector, and ranks a gallery of precomputed video embeddings
//! by cosine similarity. The crate also ships the benchmark-curation
//! predicates and the Recall@K / reasoning-score evaluation metrics used to
//! validate the engine.
//!
//! Modules mirror the pipeline: [`model`] holds the trace schema and triplet
//! data model, [`lexicon`] and [`pooling`] implement importance-weighted
//! token aggregation, [`backend`] is the model contract (with a
//! deterministic mock), [`gallery`] owns the embedding cache and exact
//! ranking, [`reasoner`] is the query-side pipeline, and [`eval`] /
//! [`curation`] cover measurement and benchmark construction.

pub mod backend;
pub mod corpus;
pub mod curation;
pub mod eval;
pub mod gallery;
pub mod lexicon;
pub mod model;
pub mod pooling;
pub mod reasoner;
#[cfg(test)]
pub(crate) mod testutil;

pub use backend::{Granularity, LmmBackend, MockBackend, SamplingParams};
pub use gallery::{encode_gallery, load_cache, save_cache, score, GalleryIndex, RankedResult};
pub use lexicon::WeightingScheme;
pub use model::{parse_trace, EditText, ReasoningRecord, Triplet, VideoRef};
pub use pooling::{l2_normalize, pool, EmbeddingVector, PoolingKind, PoolingStrategy};
pub use reasoner::{encode_query, encode_query_no_reasoning, encode_query_refined, QueryArtifacts};
