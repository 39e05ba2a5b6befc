use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{MatchReport, OrchestratorError};
use crate::judge::Mechanism;
use crate::llm::ChatRole;
use crate::metrics::MetricResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

/// `{"header": {...}, "report": {...}}` with every object's keys sorted. Only
/// the header varies between emissions of the same report.
pub fn report_json(report: &MatchReport, created_at: &str) -> Result<String, OrchestratorError> {
    let body = serde_json::to_value(report).map_err(|e| OrchestratorError::Io(e.to_string()))?;
    let doc = serde_json::json!({
        "header": {
            "created_at": created_at,
            "generator": concat!("gems ", env!("CARGO_PKG_VERSION")),
        },
        "report": body,
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| OrchestratorError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn value_table(out: &mut String, result: &MetricResult) {
    if let Some(why) = &result.failure {
        let _ = writeln!(out, "Failed: {why}\n");
        return;
    }
    out.push_str("| team | value |\n|---|---|\n");
    for (team, v) in &result.values {
        let note = if result.missing.contains(team) { " (not reported)" } else { "" };
        let _ = writeln!(out, "| {team} | {v}{note} |");
    }
    out.push('\n');
}

fn mechanism_label(m: &Mechanism) -> String {
    match m {
        Mechanism::Approval { approval_k } => format!("approval (top {approval_k})"),
        other => other.name().to_string(),
    }
}

pub fn report_markdown(report: &MatchReport, created_at: &str) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "# Team match report\n\nGenerated {created_at}.\n");
    let _ = writeln!(o, "## Goal\n\n{}\n", report.goal);

    let g = &report.goal_metric;
    let _ = writeln!(o, "## Goal metric\n\n**{}** ({})\n\n{}\n", g.function_name, g.polarity, g.description);
    if !g.reason.is_empty() {
        let _ = writeln!(o, "Reason: {}\n", g.reason);
    }
    let _ = writeln!(o, "Implementation ({:?}):\n\n```sql\n{}\n```\n", report.goal_metric_impl.kind, report.goal_metric_impl.sql);
    value_table(&mut o, &report.goal_metric_values);

    let _ = writeln!(o, "## Team needing help\n\n{}\n", report.team_x);

    let _ = writeln!(o, "## Expert pool\n");
    for (d, experts) in &report.expert_pool.by_discipline {
        let _ = writeln!(o, "- {d}");
        for e in experts {
            let _ = writeln!(o, "  - {}: {}", e.name, e.summary);
        }
    }
    let _ = writeln!(o, "\n## Panel\n");
    for m in &report.panel.members {
        let _ = writeln!(o, "- {} ({})", m.name, m.field);
    }

    let _ = writeln!(o, "\n## Supporting metrics\n");
    o.push_str("| metric | expert | polarity | implementation | status |\n|---|---|---|---|---|\n");
    for (m, r) in report.supporting_metrics.iter().zip(&report.metric_results) {
        let implementation = match &m.implementation {
            Some(i) if m.repaired => format!("{:?}, repaired", i.kind),
            Some(i) => format!("{:?}", i.kind),
            None => "none".into(),
        };
        let status = if r.is_usable() { "usable" } else { "dropped" };
        let _ = writeln!(
            o,
            "| {} | {} | {} | {implementation} | {status} |",
            m.spec.function_name, m.expert, m.spec.polarity
        );
    }

    let _ = writeln!(o, "\n## Rankings\n");
    for r in &report.rankings {
        let order: Vec<&str> = r.ranked_teams.iter().map(|t| t.as_str()).collect();
        let _ = writeln!(o, "### {}\n\n{}\n\n{}\n", r.expert.name, order.join(" > "), r.explanation);
    }

    let d = &report.decision;
    let _ = writeln!(o, "## Decision\n\nMechanism: {}\n", mechanism_label(&d.mechanism));
    for (i, round) in d.tally.iter().enumerate() {
        let cells: Vec<String> = round.iter().map(|(t, s)| format!("{t}={s}")).collect();
        if d.tally.len() > 1 {
            let _ = writeln!(o, "- round {}: {}", i + 1, cells.join(", "));
        } else {
            let _ = writeln!(o, "- tally: {}", cells.join(", "));
        }
    }
    o.push('\n');
    for step in &d.trace {
        let _ = writeln!(
            o,
            "- Thought: {}\n  Action: {}\n  Observation: {}",
            step.thought, step.action, step.observation
        );
    }

    let _ = writeln!(o, "\n## Partner team\n\n{}\n", report.team_y);

    let _ = writeln!(o, "## Expert transcripts\n");
    for t in &report.transcripts {
        let _ = writeln!(o, "### {} ({})\n", t.expert.name, t.expert.field);
        for m in &t.messages {
            let who = match m.role {
                ChatRole::User => "Prompt",
                ChatRole::Assistant => "Reply",
                ChatRole::System => "System",
            };
            let _ = writeln!(o, "**{who}**\n");
            for line in m.content.lines() {
                let _ = writeln!(o, "> {line}");
            }
            o.push('\n');
        }
    }

    if !report.warnings.is_empty() {
        let _ = writeln!(o, "## Warnings\n");
        for w in &report.warnings {
            let _ = writeln!(o, "- {w}");
        }
    }
    o
}

pub fn render_report(report: &MatchReport, format: ReportFormat, created_at: &str) -> Result<String, OrchestratorError> {
    match format {
        ReportFormat::Json => report_json(report, created_at),
        ReportFormat::Markdown => Ok(report_markdown(report, created_at)),
    }
}

/// Writes the report stamped with the current UTC time; returns bytes written.
pub fn emit_report(report: &MatchReport, format: ReportFormat, out: &Path) -> Result<usize, OrchestratorError> {
    let created_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let text = render_report(report, format, &created_at)?;
    std::fs::write(out, &text).map_err(|e| OrchestratorError::Io(format!("{}: {e}", out.display())))?;
    Ok(text.len())
}
