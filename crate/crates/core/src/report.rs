//! Result files: per-episode CSV, per-agent summary CSV and SVG bar charts.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::agents::AgentKind;
use crate::error::{Error, Result};
use crate::harness::ComparisonReport;
use crate::metrics::EpisodeMetrics;

pub const RESULTS_HEADER: [&str; 10] = [
    "experiment_id",
    "agent",
    "seed",
    "episode",
    "reward_sum",
    "tcr_percent",
    "art_seconds_or_empty",
    "failures",
    "capacity_violations",
    "tmax_violations",
];

pub const SUMMARY_HEADER: [&str; 6] = [
    "agent",
    "median_reward",
    "median_tcr_percent",
    "median_art_seconds_or_empty",
    "capacity_violations",
    "tmax_violations",
];

/// Formats `x` with 9 significant digits, without trailing zeros.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..15).contains(&exp) {
        format!("{:.*}", (8 - exp).max(0) as usize, x)
    } else {
        format!("{x:.8e}")
    };
    trim_zeros(s)
}

fn trim_zeros(s: String) -> String {
    let (mantissa, exponent) = match s.find('e') {
        Some(i) => (&s[..i], &s[i..]),
        None => (&s[..], ""),
    };
    if !mantissa.contains('.') {
        return s;
    }
    let m = mantissa.trim_end_matches('0').trim_end_matches('.');
    format!("{m}{exponent}")
}

/// One evaluated (or training) episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub experiment_id: String,
    pub agent: AgentKind,
    pub seed: u64,
    pub episode: usize,
    pub reward_sum: f64,
    pub tcr_percent: f64,
    pub art_seconds_or_empty: Option<f64>,
    pub failures: usize,
    pub capacity_violations: usize,
    pub tmax_violations: usize,
}

impl ResultsRow {
    pub fn from_metrics(
        experiment_id: &str,
        agent: AgentKind,
        seed: u64,
        episode: usize,
        m: &EpisodeMetrics,
    ) -> Self {
        Self {
            experiment_id: experiment_id.to_string(),
            agent,
            seed,
            episode,
            reward_sum: m.reward_sum,
            tcr_percent: m.tcr,
            art_seconds_or_empty: m.art,
            failures: m.failures,
            capacity_violations: m.capacity_violations,
            tmax_violations: m.tmax_violations,
        }
    }

    fn fields(&self) -> [String; 10] {
        [
            self.experiment_id.clone(),
            self.agent.name().to_string(),
            self.seed.to_string(),
            self.episode.to_string(),
            format_sig9(self.reward_sum),
            format_sig9(self.tcr_percent),
            self.art_seconds_or_empty.map(format_sig9).unwrap_or_default(),
            self.failures.to_string(),
            self.capacity_violations.to_string(),
            self.tmax_violations.to_string(),
        ]
    }
}

/// Evaluation rows of a comparison, agent-major then seed then episode.
pub fn comparison_rows(report: &ComparisonReport) -> Vec<ResultsRow> {
    report
        .cells
        .iter()
        .flat_map(|c| {
            c.evaluation.episodes.iter().enumerate().map(move |(i, m)| {
                ResultsRow::from_metrics(&report.experiment_id, c.agent, c.seed, i, m)
            })
        })
        .collect()
}

pub fn write_results<W: Write>(out: W, rows: &[ResultsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn results_to_string(rows: &[ResultsRow]) -> String {
    let mut buf = Vec::new();
    write_results(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultsRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::config(format!("unexpected results header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Per-agent medians across seeds, as written to `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub agent: AgentKind,
    pub median_reward: f64,
    pub median_tcr_percent: f64,
    pub median_art_seconds_or_empty: Option<f64>,
    pub capacity_violations: usize,
    pub tmax_violations: usize,
}

pub fn summary_rows(report: &ComparisonReport) -> Vec<SummaryRow> {
    report
        .summary
        .iter()
        .map(|s| SummaryRow {
            agent: s.agent,
            median_reward: s.median_reward,
            median_tcr_percent: s.median_tcr,
            median_art_seconds_or_empty: s.median_art,
            capacity_violations: s.capacity_violations,
            tmax_violations: s.tmax_violations,
        })
        .collect()
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.agent.name().to_string(),
            format_sig9(r.median_reward),
            format_sig9(r.median_tcr_percent),
            r.median_art_seconds_or_empty.map(format_sig9).unwrap_or_default(),
            r.capacity_violations.to_string(),
            r.tmax_violations.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_summary<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(Error::config(format!("unexpected summary header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// The three charts written next to `summary.csv`: file name and SVG text.
pub fn summary_charts(rows: &[SummaryRow]) -> Vec<(&'static str, String)> {
    let labels: Vec<&str> = rows.iter().map(|r| r.agent.name()).collect();
    let reward: Vec<f64> = rows.iter().map(|r| r.median_reward).collect();
    let tcr: Vec<f64> = rows.iter().map(|r| r.median_tcr_percent).collect();
    let art: Vec<f64> = rows
        .iter()
        .map(|r| r.median_art_seconds_or_empty.unwrap_or(0.0))
        .collect();
    vec![
        ("avg_reward.svg", bar_chart_svg("Average reward", "reward", &labels, &reward)),
        ("tcr.svg", bar_chart_svg("Task completion rate", "%", &labels, &tcr)),
        ("art.svg", bar_chart_svg("Average response time", "s", &labels, &art)),
    ]
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Vertical bar chart with a zero baseline; negative values hang below it.
pub fn bar_chart_svg(title: &str, unit: &str, labels: &[&str], values: &[f64]) -> String {
    assert_eq!(labels.len(), values.len(), "one label per bar");
    let finite = |v: f64| if v.is_finite() { v } else { 0.0 };
    let hi = values.iter().copied().map(finite).fold(0.0, f64::max);
    let lo = values.iter().copied().map(finite).fold(0.0, f64::min);
    let span = if hi - lo > 0.0 { hi - lo } else { 1.0 };
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let y_of = |v: f64| MARGIN_TOP + (hi - v) / span * plot_h;
    let zero = y_of(0.0);
    let slot = plot_w / values.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(unit)
    );
    for (i, (&label, &v)) in labels.iter().zip(values).enumerate() {
        let v = finite(v);
        let x = MARGIN_LEFT + slot * i as f64 + slot * 0.15;
        let w = slot * 0.7;
        let (top, h) = if v >= 0.0 {
            (y_of(v), zero - y_of(v))
        } else {
            (zero, y_of(v) - zero)
        };
        let _ = writeln!(
            s,
            r##"<rect x="{x:.2}" y="{top:.2}" width="{w:.2}" height="{h:.2}" fill="#4878a8"><title>{}: {}</title></rect>"##,
            escape(label),
            format_sig9(v)
        );
        let value_y = if v >= 0.0 { top - 4.0 } else { top + h + 14.0 };
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{value_y:.2}" text-anchor="middle">{v:.3}</text>"#,
            x + w / 2.0,
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x + w / 2.0,
            HEIGHT - MARGIN_BOTTOM + 20.0,
            escape(label)
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_LEFT}" y1="{zero:.2}" x2="{:.2}" y2="{zero:.2}" stroke="black"/>"#,
        WIDTH - MARGIN_RIGHT
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{:.2}" stroke="black"/>"#,
        HEIGHT - MARGIN_BOTTOM
    );
    s.push_str("</svg>\n");
    s
}
