//! Output artifacts: histogram CSV, JSON summaries and SVG bar charts.
//!
//! All artifacts are deterministic text. Floating-point values are written
//! in the shortest representation that parses back to the identical bits,
//! so re-reading an artifact reproduces the original value exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use rankcal::RankHistogram;

use crate::error::CliResult;

/// JSON summary of one rank histogram.
#[derive(Debug, Serialize)]
pub struct HistogramSummaryReport {
    pub method: String,
    pub m: usize,
    pub n_cases: u64,
    pub counts: Vec<u64>,
    pub mean_rank: f64,
    pub rank_variance: f64,
    pub chi_square: f64,
}

impl HistogramSummaryReport {
    pub fn new(method: &str, histogram: &RankHistogram) -> CliResult<Self> {
        let summary = histogram
            .summary()
            .map_err(|e| crate::error::data(format!("{method}: {e}")))?;
        Ok(Self {
            method: method.to_string(),
            m: histogram.m(),
            n_cases: histogram.n_cases(),
            counts: histogram.counts().to_vec(),
            mean_rank: summary.mean_rank,
            rank_variance: summary.rank_variance,
            chi_square: summary.chi_square,
        })
    }
}

/// Write a histogram as `rank,count` rows.
pub fn write_histogram_csv(path: &Path, histogram: &RankHistogram) -> CliResult<()> {
    let mut out = String::from("rank,count\n");
    for (i, count) in histogram.counts().iter().enumerate() {
        writeln!(out, "{},{count}", i + 1).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write a JSON document with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

const BAR_WIDTH: usize = 20;
const PLOT_HEIGHT: f64 = 240.0;
const MARGIN: f64 = 30.0;

/// Render a histogram as a self-contained SVG bar chart with a dashed line
/// at the uniform expectation. Plain string templating, no timestamps.
pub fn histogram_svg(histogram: &RankHistogram, title: &str) -> String {
    let m = histogram.m();
    let width = MARGIN * 2.0 + (m * BAR_WIDTH) as f64;
    let height = PLOT_HEIGHT + MARGIN * 2.0;
    let max_count = histogram.counts().iter().copied().max().unwrap_or(0).max(1) as f64;
    let scale = PLOT_HEIGHT / max_count;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2}" height="{height:.2}" viewBox="0 0 {width:.2} {height:.2}">"#
    )
    .expect("string write");
    writeln!(
        svg,
        r#"  <title>{title}</title>
  <rect x="0" y="0" width="{width:.2}" height="{height:.2}" fill="white"/>"#
    )
    .expect("string write");
    for (i, &count) in histogram.counts().iter().enumerate() {
        let bar_height = count as f64 * scale;
        let x = MARGIN + (i * BAR_WIDTH) as f64;
        let y = MARGIN + PLOT_HEIGHT - bar_height;
        writeln!(
            svg,
            r##"  <rect x="{x:.2}" y="{y:.2}" width="{}" height="{bar_height:.2}" fill="#4878a8" stroke="white" stroke-width="0.5"/>"##,
            BAR_WIDTH
        )
        .expect("string write");
    }
    let expectation_y = MARGIN + PLOT_HEIGHT - histogram.uniform_expectation() * scale;
    writeln!(
        svg,
        r#"  <line x1="{MARGIN:.2}" y1="{expectation_y:.2}" x2="{:.2}" y2="{expectation_y:.2}" stroke="black" stroke-dasharray="4 3" stroke-width="1"/>"#,
        width - MARGIN
    )
    .expect("string write");
    writeln!(
        svg,
        r#"  <text x="{MARGIN:.2}" y="{:.2}" font-family="monospace" font-size="12">{title} (n={})</text>"#,
        MARGIN - 10.0,
        histogram.n_cases()
    )
    .expect("string write");
    writeln!(
        svg,
        r#"  <text x="{MARGIN:.2}" y="{:.2}" font-family="monospace" font-size="10">rank 1..{m}</text>"#,
        height - 10.0
    )
    .expect("string write");
    svg.push_str("</svg>\n");
    svg
}

pub fn write_histogram_svg(path: &Path, histogram: &RankHistogram, title: &str) -> CliResult<()> {
    fs::write(path, histogram_svg(histogram, title))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rankcal::accumulate_histogram;

    #[test]
    fn svg_is_deterministic_text() {
        let hist = accumulate_histogram([1, 2, 2, 3], 4).unwrap();
        let a = histogram_svg(&hist, "avg");
        let b = histogram_svg(&hist, "avg");
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("stroke-dasharray"));
        assert!(!a.to_lowercase().contains("date"));
    }
}
