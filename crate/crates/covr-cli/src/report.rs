//! Evaluation report file format and the stdout summary table. Every
//! section embeds the resolved engine config so a run can be reproduced
//! from the report alone.

use serde::{Deserialize, Serialize};

use covr_core::eval::{EvalReport, ScoreSummary, DEFAULT_KS};
use covr_core::pooling::PoolingKind;

use crate::config::EngineConfig;

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportFile {
    pub sections: Vec<ReportSection>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportSection {
    pub variant: String,
    pub strategy: PoolingKind,
    pub config: EngineConfig,
    pub report: EvalReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<ScoreSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped_missing: Vec<String>,
    #[serde(default)]
    pub judged: usize,
    #[serde(default)]
    pub skipped_judging: usize,
}

pub fn render_table(sections: &[ReportSection]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:<10} {:>7} {:>7} {:>7} {:>7} {:>7} {:>5}  {}\n",
        "variant", "strategy", "R@1", "R@5", "R@10", "R@50", "Rmean", "n", "reasoning"
    ));
    for section in sections {
        let r = |k: u32| {
            section
                .report
                .recall_at
                .get(&k)
                .map(|v| format!("{:.4}", v))
                .unwrap_or_else(|| "-".to_string())
        };
        let reasoning = section
            .reasoning
            .as_ref()
            .map(|s| format!("{:.2} ± {:.4} (n={})", s.mean, s.sem, s.n))
            .unwrap_or_else(|| "-".to_string());
        out.push_str(&format!(
            "{:<12} {:<10} {:>7} {:>7} {:>7} {:>7} {:>7.4} {:>5}  {}\n",
            section.variant,
            section.strategy.name(),
            r(DEFAULT_KS[0]),
            r(DEFAULT_KS[1]),
            r(DEFAULT_KS[2]),
            r(DEFAULT_KS[3]),
            section.report.mean_recall,
            section.report.n,
            reasoning
        ));
    }
    out
}
