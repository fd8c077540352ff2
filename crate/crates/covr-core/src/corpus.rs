//! Line-delimited corpus I/O: one JSON triplet or video record per line.
//! Malformed lines become per-line diagnostics instead of aborting the read.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::model::{Triplet, VideoRef};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusDiagnostic {
    pub line_no: usize,
    pub error: String,
}

/// Reads triplets from JSONL. Invalid JSON or invariant violations are
/// collected as diagnostics.
pub fn read_triplets(
    reader: impl BufRead,
) -> std::io::Result<(Vec<Triplet>, Vec<CorpusDiagnostic>)> {
    let mut triplets = Vec::new();
    let mut diagnostics = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Triplet>(&line) {
            Ok(triplet) => match triplet.validate() {
                Ok(()) => triplets.push(triplet),
                Err(e) => diagnostics.push(CorpusDiagnostic {
                    line_no,
                    error: e.to_string(),
                }),
            },
            Err(e) => diagnostics.push(CorpusDiagnostic {
                line_no,
                error: e.to_string(),
            }),
        }
    }
    Ok((triplets, diagnostics))
}

pub fn write_triplets(triplets: &[Triplet], mut writer: impl Write) -> std::io::Result<()> {
    for triplet in triplets {
        serde_json::to_writer(&mut writer, triplet)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct VideoLine {
    id: String,
    #[serde(default)]
    uri: Option<String>,
    #[serde(default)]
    fps_hint: Option<f64>,
}

/// Reads a video list from JSONL records `{"id": ..., "uri": ..?}`. A
/// missing uri defaults to the id (backends that resolve by id).
pub fn read_video_list(
    reader: impl BufRead,
) -> std::io::Result<(Vec<VideoRef>, Vec<CorpusDiagnostic>)> {
    let mut videos = Vec::new();
    let mut diagnostics = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Result<VideoLine, _> = serde_json::from_str(&line);
        let record = match parsed {
            Ok(r) => r,
            Err(e) => {
                diagnostics.push(CorpusDiagnostic {
                    line_no,
                    error: e.to_string(),
                });
                continue;
            }
        };
        let uri = record.uri.unwrap_or_else(|| record.id.clone());
        let video = VideoRef::new(record.id, uri).and_then(|v| match record.fps_hint {
            Some(fps) => v.with_fps_hint(fps),
            None => Ok(v),
        });
        match video {
            Ok(v) => {
                if videos.iter().any(|existing: &VideoRef| existing.id == v.id) {
                    diagnostics.push(CorpusDiagnostic {
                        line_no,
                        error: format!("duplicate video id '{}'", v.id),
                    });
                } else {
                    videos.push(v);
                }
            }
            Err(e) => diagnostics.push(CorpusDiagnostic {
                line_no,
                error: e.to_string(),
            }),
        }
    }
    Ok((videos, diagnostics))
}
