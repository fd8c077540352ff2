//! Gallery encoding, the embedding cache, and exact cosine ranking.
//!
//! Every gallery video is described once, pooled into a single normalized
//! embedding, and cached. Scoring is exhaustive: with normalized vectors the
//! cosine similarity is the dot product, so a query is ranked against every
//! entry and sorted descending, ties broken by ascending video id.
//!
//! Cache layout (all integers and floats little-endian):
//!   magic "CVRR" | version u32 = 1 | dim u32 | strategy tag u8 | count u64
//!   then per entry: id len u16, id UTF-8, description len u32,
//!   description UTF-8, dim x f32.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, LmmBackend, SamplingParams};
use crate::model::VideoRef;
use crate::pooling::{dot, l2_normalize, pool, EmbeddingVector, PoolingKind, PoolingStrategy};

pub const CACHE_MAGIC: [u8; 4] = *b"CVRR";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum GalleryError {
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("gallery index is empty")]
    EmptyIndex,
    #[error("every video failed to encode ({failed} failures)")]
    AllVideosFailed { failed: usize },
    #[error("duplicate video id '{id}' in gallery")]
    DuplicateId { id: String },
    #[error("entry embedding must be L2-normalized")]
    NotNormalized,
    #[error("query embedding must be L2-normalized before scoring")]
    QueryNotNormalized,
    #[error("corrupt cache: {0}")]
    CorruptCache(String),
    #[error("cache io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// One cached gallery member: the video, its description, and the pooled,
/// normalized, f32-snapped embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub video: VideoRef,
    pub embedding: EmbeddingVector,
    pub strategy: PoolingKind,
    pub description_text: String,
}

impl GalleryEntry {
    pub fn new(
        video: VideoRef,
        embedding: EmbeddingVector,
        strategy: PoolingKind,
        description_text: String,
    ) -> Result<Self, GalleryError> {
        if !embedding.is_normalized() {
            return Err(GalleryError::NotNormalized);
        }
        // Entries live on the f32 grid so the cache round-trips bit-exactly.
        let embedding = embedding.quantize_to_f32();
        Ok(Self {
            video,
            embedding,
            strategy,
            description_text,
        })
    }
}

/// Immutable set of gallery embeddings sharing one dimension and strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct GalleryIndex {
    dim: usize,
    strategy: PoolingKind,
    entries: Vec<GalleryEntry>,
}

impl GalleryIndex {
    pub fn new(dim: usize, strategy: PoolingKind) -> Self {
        Self {
            dim,
            strategy,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn strategy(&self) -> PoolingKind {
        self.strategy
    }

    pub fn entries(&self) -> &[GalleryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, video_id: &str) -> bool {
        self.entries.iter().any(|e| e.video.id == video_id)
    }

    pub fn get(&self, video_id: &str) -> Option<&GalleryEntry> {
        self.entries.iter().find(|e| e.video.id == video_id)
    }

    /// Adds an entry, rejecting dimension mismatches (e.g. an entry pooled
    /// against a different backend), strategy mismatches, and duplicate ids.
    pub fn insert(&mut self, entry: GalleryEntry) -> Result<(), GalleryError> {
        if entry.embedding.dim() != self.dim {
            return Err(GalleryError::DimensionMismatch {
                expected: self.dim,
                actual: entry.embedding.dim(),
            });
        }
        if entry.strategy != self.strategy {
            return Err(GalleryError::CorruptCache(format!(
                "entry strategy {} does not match index strategy {}",
                entry.strategy, self.strategy
            )));
        }
        if self.contains(&entry.video.id) {
            return Err(GalleryError::DuplicateId {
                id: entry.video.id.clone(),
            });
        }
        self.entries.push(entry);
        Ok(())
    }
}

/// Per-video encode failure, recorded instead of aborting the batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoFailure {
    pub video_id: String,
    pub error: String,
}

#[derive(Debug)]
pub struct EncodeOutcome {
    pub index: GalleryIndex,
    pub failures: Vec<VideoFailure>,
}

#[derive(Debug, Clone, Copy)]
pub struct EncodeOptions {
    pub sampling: SamplingParams,
    /// Upper bound on concurrent describe calls; 1 means sequential.
    pub parallelism: usize,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self {
            sampling: SamplingParams::describe_defaults(),
            parallelism: 1,
        }
    }
}

/// Describes, pools, and normalizes every video into a fresh index.
/// Individual failures become diagnostics; only a fully failed batch errors.
pub fn encode_gallery(
    videos: &[VideoRef],
    backend: &dyn LmmBackend,
    strategy: &PoolingStrategy,
    options: EncodeOptions,
) -> Result<EncodeOutcome, GalleryError> {
    if videos.is_empty() {
        return Err(GalleryError::EmptyIndex);
    }
    let handshake = backend.handshake()?;
    let kind = strategy.kind();
    let index_dim = strategy.output_dim(handshake.dim);

    let encode_one = |video: &VideoRef| -> Result<GalleryEntry, VideoFailure> {
        let fail = |e: String| VideoFailure {
            video_id: video.id.clone(),
            error: e,
        };
        let result = backend
            .describe_video(video, &options.sampling)
            .map_err(|e| fail(e.to_string()))?;
        if result.token_embeddings.dim() != handshake.dim {
            return Err(fail(format!(
                "backend returned dim {} but handshake advertised {}",
                result.token_embeddings.dim(),
                handshake.dim
            )));
        }
        let pooled = pool(&result.token_embeddings, strategy).map_err(|e| fail(e.to_string()))?;
        let normalized = l2_normalize(&pooled).map_err(|e| fail(e.to_string()))?;
        GalleryEntry::new(video.clone(), normalized, kind, result.text)
            .map_err(|e| fail(e.to_string()))
    };

    let results: Vec<Result<GalleryEntry, VideoFailure>> = if options.parallelism > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.parallelism)
            .build()
            .map_err(|e| GalleryError::CorruptCache(format!("thread pool: {e}")))?;
        pool.install(|| videos.par_iter().map(encode_one).collect())
    } else {
        videos.iter().map(encode_one).collect()
    };

    let mut index = GalleryIndex::new(index_dim, kind);
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(entry) => {
                let id = entry.video.id.clone();
                if let Err(e) = index.insert(entry) {
                    failures.push(VideoFailure {
                        video_id: id,
                        error: e.to_string(),
                    });
                }
            }
            Err(failure) => failures.push(failure),
        }
    }
    if index.is_empty() {
        return Err(GalleryError::AllVideosFailed {
            failed: failures.len(),
        });
    }
    Ok(EncodeOutcome { index, failures })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub video_id: String,
    pub score: f64,
}

/// Gallery candidates sorted by similarity, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub ranking: Vec<RankedEntry>,
}

impl RankedResult {
    /// 1-based rank of a video id.
    pub fn rank_of(&self, video_id: &str) -> Option<usize> {
        self.ranking
            .iter()
            .position(|e| e.video_id == video_id)
            .map(|i| i + 1)
    }

    pub fn top(&self, k: usize) -> &[RankedEntry] {
        &self.ranking[..k.min(self.ranking.len())]
    }

    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }
}

/// Scores the query against every entry (dot product over normalized
/// vectors) and returns the full descending ranking. Equal scores order by
/// ascending video id so reruns are identical.
pub fn score(query: &EmbeddingVector, index: &GalleryIndex) -> Result<RankedResult, GalleryError> {
    if !query.is_normalized() {
        return Err(GalleryError::QueryNotNormalized);
    }
    if query.dim() != index.dim() {
        return Err(GalleryError::DimensionMismatch {
            expected: index.dim(),
            actual: query.dim(),
        });
    }
    if index.is_empty() {
        return Err(GalleryError::EmptyIndex);
    }
    let mut ranking: Vec<RankedEntry> = index
        .entries()
        .iter()
        .map(|entry| {
            let s = dot(query, &entry.embedding).expect("dims validated");
            RankedEntry {
                video_id: entry.video.id.clone(),
                score: s,
            }
        })
        .collect();
    ranking.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.video_id.cmp(&b.video_id))
    });
    Ok(RankedResult { ranking })
}

/// Writes the index in the fixed little-endian cache layout.
pub fn save_cache(index: &GalleryIndex, sink: &mut impl Write) -> Result<(), GalleryError> {
    sink.write_all(&CACHE_MAGIC)?;
    sink.write_all(&CACHE_VERSION.to_le_bytes())?;
    sink.write_all(&(index.dim() as u32).to_le_bytes())?;
    sink.write_all(&[index.strategy().code()])?;
    sink.write_all(&(index.len() as u64).to_le_bytes())?;
    for entry in index.entries() {
        let id = entry.video.id.as_bytes();
        if id.len() > u16::MAX as usize {
            return Err(GalleryError::CorruptCache(format!(
                "id '{}' exceeds u16 length budget",
                entry.video.id
            )));
        }
        sink.write_all(&(id.len() as u16).to_le_bytes())?;
        sink.write_all(id)?;
        let desc = entry.description_text.as_bytes();
        sink.write_all(&(desc.len() as u32).to_le_bytes())?;
        sink.write_all(desc)?;
        for value in entry.embedding.to_f32_vec() {
            sink.write_all(&value.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a cache back. Cached entries store only the video id, so the
/// reconstructed VideoRef uses the id as its locator and carries no fps
/// hint. When `expected_dim` is given, a differing cache dim is rejected.
pub fn load_cache(
    source: &mut impl Read,
    expected_dim: Option<usize>,
) -> Result<GalleryIndex, GalleryError> {
    let corrupt = |msg: &str| GalleryError::CorruptCache(msg.to_string());
    let mut magic = [0u8; 4];
    read_exact_or_corrupt(source, &mut magic, "magic")?;
    if magic != CACHE_MAGIC {
        return Err(corrupt("bad magic bytes"));
    }
    let version = read_u32(source, "version")?;
    if version != CACHE_VERSION {
        return Err(GalleryError::CorruptCache(format!(
            "unsupported version {version}"
        )));
    }
    let dim = read_u32(source, "dim")? as usize;
    if dim == 0 {
        return Err(corrupt("dim 0"));
    }
    if let Some(expected) = expected_dim {
        if dim != expected {
            return Err(GalleryError::DimensionMismatch {
                expected,
                actual: dim,
            });
        }
    }
    let mut tag = [0u8; 1];
    read_exact_or_corrupt(source, &mut tag, "strategy tag")?;
    let strategy = PoolingKind::from_code(tag[0])
        .ok_or_else(|| GalleryError::CorruptCache(format!("unknown strategy tag {}", tag[0])))?;
    let mut count_bytes = [0u8; 8];
    read_exact_or_corrupt(source, &mut count_bytes, "entry count")?;
    let count = u64::from_le_bytes(count_bytes);

    let mut index = GalleryIndex::new(dim, strategy);
    for i in 0..count {
        let mut len2 = [0u8; 2];
        read_exact_or_corrupt(source, &mut len2, "id length")?;
        let id_len = u16::from_le_bytes(len2) as usize;
        let mut id_bytes = vec![0u8; id_len];
        read_exact_or_corrupt(source, &mut id_bytes, "id")?;
        let id = String::from_utf8(id_bytes).map_err(|_| corrupt("id not UTF-8"))?;
        if id.is_empty() {
            return Err(corrupt("empty id"));
        }
        let desc_len = read_u32(source, "description length")? as usize;
        let mut desc_bytes = vec![0u8; desc_len];
        read_exact_or_corrupt(source, &mut desc_bytes, "description")?;
        let description =
            String::from_utf8(desc_bytes).map_err(|_| corrupt("description not UTF-8"))?;
        let mut values = vec![0f32; dim];
        for value in values.iter_mut() {
            let mut b = [0u8; 4];
            read_exact_or_corrupt(source, &mut b, "embedding values")?;
            *value = f32::from_le_bytes(b);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(corrupt("non-finite embedding value"));
        }
        let embedding = EmbeddingVector::from_f32_slice(&values, true)
            .map_err(|e| GalleryError::CorruptCache(e.to_string()))?;
        if (embedding.norm() - 1.0).abs() > 1e-6 {
            return Err(GalleryError::CorruptCache(format!(
                "entry {i} is not L2-normalized (norm {})",
                embedding.norm()
            )));
        }
        let video = VideoRef::from_id(id).map_err(|e| GalleryError::CorruptCache(e.to_string()))?;
        index.insert(GalleryEntry {
            video,
            embedding,
            strategy,
            description_text: description,
        })?;
    }
    // Anything after the last entry means the count field lied.
    let mut probe = [0u8; 1];
    match source.read(&mut probe) {
        Ok(0) => Ok(index),
        Ok(_) => Err(corrupt("trailing bytes after final entry")),
        Err(e) => Err(GalleryError::Io(e)),
    }
}

fn read_exact_or_corrupt(
    source: &mut impl Read,
    buf: &mut [u8],
    what: &str,
) -> Result<(), GalleryError> {
    source.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            GalleryError::CorruptCache(format!("truncated while reading {what}"))
        } else {
            GalleryError::Io(e)
        }
    })
}

fn read_u32(source: &mut impl Read, what: &str) -> Result<u32, GalleryError> {
    let mut b = [0u8; 4];
    read_exact_or_corrupt(source, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}
