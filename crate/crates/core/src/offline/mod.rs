//! A scripted stand-in for the chat model, plus a deterministic demo
//! dataset. Together they let the whole pipeline run, and fixture cassettes
//! be recorded, without network access.
//!
//! The scripted model recognizes each prompt the pipeline sends by its
//! wording and answers in the expected format. Experts, disciplines and
//! metric proposals are fictional.

use std::fmt::Write as _;
use std::sync::Arc;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde_json::json;

use crate::llm::{ChatMessage, ChatRole, Gateway, HttpReply, LiveClient, Transport, WireRequest, WireResponse};
use crate::metrics::{PROGRAMMER_PROMPT_HEAD, REPAIR_PROMPT_HEAD};

mod authoring;

pub use authoring::{
    fixture_ballots, fixture_expert, fixture_ranking_results, merge_cassettes, ping_request, record_components,
    record_pipeline, FixtureSet, ALT_GOAL, FIXTURE_GOAL, OPEN_PREFERENCE, REVIEW_GOAL,
};

/// Variations on the scripted behaviour, each exercising a recovery path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    /// The query for `knowledgeSharingIndex` names a table that does not
    /// exist, both at first and after the repair prompt.
    pub bad_sql: bool,
    /// The panel pick puts three experts from one field on the panel.
    pub invalid_panel_pick: bool,
    /// The first discipline list repeats itself.
    pub duplicate_disciplines: bool,
    /// The first expert list for every discipline contains a nameless line.
    pub nameless_expert: bool,
    /// Ranking replies name a team that is not a candidate.
    pub garbled_ranking: bool,
    /// Stage 2 lists this many elements instead of the number asked for.
    pub short_element_list: Option<usize>,
    /// Number of pairs in the baseline reply.
    pub vanilla_pairs: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            bad_sql: false,
            invalid_panel_pick: false,
            duplicate_disciplines: false,
            nameless_expert: false,
            garbled_ranking: false,
            short_element_list: None,
            vanilla_pairs: 9,
        }
    }
}

pub const DISCIPLINES: [&str; 8] = [
    "Development Operations",
    "Organizational Psychology",
    "Software Quality Engineering",
    "Communication Studies",
    "Knowledge Management",
    "Engineering Management",
    "Human-Computer Interaction",
    "Behavioral Economics",
];

const FIRST: [&str; 20] = [
    "Ada", "Bram", "Celia", "Dario", "Elin", "Farid", "Greta", "Hugo", "Ines", "Jonas", "Kaia",
    "Lorenz", "Mira", "Nico", "Odile", "Pavel", "Quinn", "Rosa", "Soren", "Talia",
];
const LAST: [&str; 20] = [
    "Rivera", "Okafor", "Lindqvist", "Moreau", "Tanaka", "Haddad", "Kowalski", "Brennan",
    "Sato", "Varga", "Oyelaran", "Fischer", "Castellanos", "Nakamura", "Delacroix", "Petrov",
    "Abernathy", "Solberg", "Achebe", "Whitlock",
];

/// The scripted name of the `i`th expert of discipline `d`.
pub fn expert_name(d: usize, i: usize) -> String {
    format!("{} {}", FIRST[(d * 5 + i) % FIRST.len()], LAST[(d * 7 + i * 3) % LAST.len()])
}

struct MetricKind {
    name: &'static str,
    description: &'static str,
    reason: &'static str,
    polarity: &'static str,
    /// Query returned to the programmer agent. Kinds whose name matches a
    /// registry entry are never sent to it.
    sql: Option<&'static str>,
}

const KINDS: [MetricKind; 12] = [
    MetricKind {
        name: "commitFrequency",
        description: "How many commits the team lands per week.",
        reason: "Small, frequent integration shortens feedback loops.",
        polarity: "higher_better",
        sql: None,
    },
    MetricKind {
        name: "pullRequestMergeRate",
        description: "Share of opened pull requests that end up merged.",
        reason: "A team whose changes get merged has a working review and integration flow.",
        polarity: "higher_better",
        sql: None,
    },
    MetricKind {
        name: "reviewTurnaroundTime",
        description: "Hours from a pull request being opened to its first review.",
        reason: "Fast reviews keep work in progress low.",
        polarity: "lower_better",
        sql: None,
    },
    MetricKind {
        name: "mentorshipCommentRatio",
        description: "Comments written per issue, a proxy for how much guidance flows through issue threads.",
        reason: "Teams that explain their reasoning in the open are easier to learn from.",
        polarity: "higher_better",
        sql: Some(
            "SELECT r.id AS team_id, COUNT(DISTINCT c.id) * 1.0 / MAX(1, COUNT(DISTINCT i.id)) AS value \
             FROM repositories r LEFT JOIN issues i ON i.repository_id = r.id \
             LEFT JOIN comments c ON c.issue_id = i.id GROUP BY r.id",
        ),
    },
    MetricKind {
        name: "knowledgeSharingIndex",
        description: "Distinct people taking part in discussions relative to distinct people committing code.",
        reason: "Knowledge spreads when more people than the authors engage with the work.",
        polarity: "higher_better",
        sql: Some(
            "SELECT r.id AS team_id, \
             (SELECT COUNT(DISTINCT c.author_id) FROM comments c WHERE c.repository_id = r.id) * 1.0 \
             / MAX(1, (SELECT COUNT(DISTINCT m.author_id) FROM commits m WHERE m.repository_id = r.id)) AS value \
             FROM repositories r",
        ),
    },
    MetricKind {
        name: "discussionActivity",
        description: "Comments per issue and pull request.",
        reason: "Active discussion shows a team that talks through its problems.",
        polarity: "higher_better",
        sql: None,
    },
    MetricKind {
        name: "openIssueBacklog",
        description: "Issues that are still open.",
        reason: "A growing backlog signals a team that cannot keep up.",
        polarity: "lower_better",
        sql: None,
    },
    MetricKind {
        name: "milestoneOnTimeRate",
        description: "Share of milestones closed by their due date.",
        reason: "Predictable delivery is a sign of healthy planning.",
        polarity: "higher_better",
        sql: None,
    },
    MetricKind {
        name: "reactionPositivityShare",
        description: "Share of reactions on comments that are positive.",
        reason: "A positive tone in review threads reflects psychological safety.",
        polarity: "higher_better",
        sql: Some(
            "SELECT r.id AS team_id, AVG(CASE WHEN x.content IN ('+1', 'heart', 'hooray') THEN 1.0 ELSE 0.0 END) AS value \
             FROM repositories r LEFT JOIN reactions x ON x.repository_id = r.id GROUP BY r.id",
        ),
    },
    MetricKind {
        name: "codeChurn",
        description: "Lines added plus lines deleted across commits.",
        reason: "Churn shows how much of the code is being reworked.",
        polarity: "lower_better",
        sql: None,
    },
    MetricKind {
        name: "testCommitShare",
        description: "Share of commits whose message mentions tests.",
        reason: "Teams that write tests alongside changes ship with more confidence.",
        polarity: "higher_better",
        sql: Some(
            "SELECT r.id AS team_id, AVG(CASE WHEN lower(c.message) LIKE '%test%' THEN 1.0 ELSE 0.0 END) AS value \
             FROM repositories r LEFT JOIN commits c ON c.repository_id = r.id GROUP BY r.id",
        ),
    },
    MetricKind {
        name: "reviewApprovalLatency",
        description: "Days from a pull request being opened to an approving review.",
        reason: "Slow approvals stall delivery even when reviews start quickly.",
        polarity: "lower_better",
        sql: Some(
            "SELECT r.id AS team_id, AVG(julianday(v.submitted_at) - julianday(p.created_at)) AS value \
             FROM repositories r LEFT JOIN pull_requests p ON p.repository_id = r.id \
             LEFT JOIN reviews v ON v.pull_request_id = p.id AND v.state = 'APPROVED' GROUP BY r.id",
        ),
    },
];

const TASK_COMPLETION_SQL: &str = "SELECT r.id AS team_id, \
    SUM(CASE WHEN i.state = 'closed' THEN 1.0 ELSE 0.0 END) / MAX(1, COUNT(i.id)) AS value \
    FROM repositories r LEFT JOIN issues i ON i.repository_id = r.id GROUP BY r.id";

const BAD_SQL: &str = "SELECT r.id AS team_id, SUM(d.amount) AS value FROM repositories r \
                       LEFT JOIN investment_data d ON d.repository_id = r.id GROUP BY r.id";

const ELEMENTS: [&str; 8] = [
    "Shared understanding of goals",
    "Fast and frequent feedback",
    "Psychological safety",
    "Visible flow of work",
    "Sustainable pace",
    "Knowledge sharing across roles",
    "Ownership of quality",
    "Clear decision rights",
];

const VANILLA: [(&str, &str); 12] = [
    ("commitFrequency", "How often the team commits code."),
    ("pullRequestMergeTime", "Average time for a pull request to be merged."),
    ("issueResolutionTime", "Average time to close an issue."),
    ("codeReviewParticipation", "How many team members take part in code reviews."),
    ("testCoverage", "The share of the code covered by tests."),
    ("buildSuccessRate", "How often the team's builds succeed."),
    ("documentationUpdates", "How often the team updates its documentation."),
    ("contributorCount", "The number of people contributing to the repository."),
    ("openIssueCount", "The number of issues that remain open."),
    ("releaseFrequency", "How often the team publishes a release."),
    ("codeChurn", "How much code is rewritten shortly after it is written."),
    ("bugReopenRate", "How often fixed bugs are reopened."),
];

/// Implements [`Transport`] by answering from the script.
#[derive(Debug, Clone, Default)]
pub struct ScriptedModel {
    pub scenario: Scenario,
}

impl ScriptedModel {
    pub fn new(scenario: Scenario) -> Self {
        Self { scenario }
    }

    /// The reply the script gives to a conversation.
    pub fn respond(&self, messages: &[ChatMessage]) -> String {
        let first = messages.first().map(|m| m.content.as_str()).unwrap_or_default();
        let last = messages
            .iter()
            .rev()
            .find(|m| m.role == ChatRole::User)
            .map(|m| m.content.as_str())
            .unwrap_or_default();
        let s = &self.scenario;

        if last == "ping" {
            "pong".to_string()
        } else if last.starts_with("You are the lead orchestrator") {
            goal_metric_reply()
        } else if last.starts_with("A software engineering manager has the following goal") {
            let n = number_after(last, "Identify ").unwrap_or(4);
            if s.duplicate_disciplines {
                duplicate_disciplines_reply(n)
            } else {
                disciplines_reply(n)
            }
        } else if last.starts_with("Some of those disciplines repeat") {
            disciplines_reply(number_after(last, "exactly ").unwrap_or(4))
        } else if first.starts_with("Name ") && first.contains("real-world experts in") {
            let n = number_after(first, "Name ").unwrap_or(3);
            let d = between(first, "real-world experts in ", " whose").map_or(0, discipline_index);
            let retry = last.starts_with("Some of those lines");
            experts_reply(d, n, s.nameless_expert && !retry)
        } else if last.starts_with("We need to assemble a panel") {
            if s.invalid_panel_pick {
                "<panel>1, 2, 3</panel>".to_string()
            } else {
                "The two Development Operations experts bring depth and the psychologist a second view.\n<panel>1, 2, 4</panel>".to_string()
            }
        } else if last.starts_with("You are now consulting with") {
            let name = between(last, "You are now consulting with ", " in ").unwrap_or("the expert");
            let field = between(last, " in ", ". Who is").unwrap_or("their field");
            biography(name, field)
        } else if last.contains("List out at least") {
            let n = number_after(last, "List out at least ").unwrap_or(5);
            elements_reply(s.short_element_list.unwrap_or(n))
        } else if last.starts_with("These elements make a lot of sense") {
            let name = between(first, "You are now consulting with ", " in ").unwrap_or_default();
            let n = number_after(last, "Propose exactly ").unwrap_or(3);
            metrics_reply(expert_index(name), n)
        } else if first.starts_with(PROGRAMMER_PROMPT_HEAD) {
            let name = between(first, "Metric name: ", "\n").unwrap_or_default();
            let repair = last.starts_with(REPAIR_PROMPT_HEAD);
            programmer_reply(name, s.bad_sql, repair)
        } else if last.contains("Rank all candidate teams") {
            ranking_reply(last, s.garbled_ranking)
        } else if last.starts_with("You are the judge") {
            "Thought: The request does not name a mechanism, so every position on every ballot should count.\n\
             Action: borda\n\
             Observation: Borda rewards teams that all experts rank highly, not only first choices."
                .to_string()
        } else if last.starts_with("I am a software manager") {
            vanilla_reply(s.vanilla_pairs)
        } else {
            "I have no scripted reply for this request.".to_string()
        }
    }
}

fn word_count(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

impl Transport for ScriptedModel {
    fn post_json(&self, _url: &str, _bearer: &str, body: &str) -> Result<HttpReply, String> {
        let request: WireRequest = serde_json::from_str(body).map_err(|e| e.to_string())?;
        let content = self.respond(&request.messages);
        let prompt_tokens = request.messages.iter().map(|m| word_count(&m.content)).sum();
        let reply = WireResponse::from_content(&content, prompt_tokens, word_count(&content));
        Ok(HttpReply {
            status: 200,
            body: serde_json::to_string(&reply).map_err(|e| e.to_string())?,
        })
    }
}

/// A live client that talks to the script instead of the network.
pub fn scripted_client(scenario: Scenario) -> LiveClient {
    LiveClient::new(
        "offline://scripted",
        Some("offline".to_string()),
        Arc::new(ScriptedModel::new(scenario)),
    )
}

/// A recording gateway over the script; see [`Gateway::recorded`].
pub fn scripted_gateway(scenario: Scenario) -> Gateway {
    Gateway::record_in_memory(scripted_client(scenario))
}

fn number_after(text: &str, marker: &str) -> Option<usize> {
    let rest = &text[text.find(marker)? + marker.len()..];
    let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let from = text.find(start)? + start.len();
    let to = text[from..].find(end)? + from;
    Some(&text[from..to])
}

fn discipline_index(name: &str) -> usize {
    DISCIPLINES
        .iter()
        .position(|d| d.eq_ignore_ascii_case(name.trim()))
        .unwrap_or(DISCIPLINES.len() - 1)
}

/// Position of an expert in the default pool of three per discipline.
fn expert_index(name: &str) -> usize {
    (0..DISCIPLINES.len())
        .flat_map(|d| (0..5).map(move |i| (d, i)))
        .find(|&(d, i)| expert_name(d, i) == name)
        .map_or(0, |(d, i)| d * 3 + i)
}

fn goal_metric_reply() -> String {
    "A simple proxy for keeping projects on track is how long issues stay open.\n\
     <metric>\n\
     \x20   <metric_name>averageIssueResolutionTime</metric_name>\n\
     \x20   <metric_description>Average number of days between an issue being opened and closed.</metric_description>\n\
     \x20   <metric_reason>Teams that resolve issues slowly are the ones falling behind.</metric_reason>\n\
     \x20   <metric_polarity>lower_better</metric_polarity>\n\
     </metric>"
        .to_string()
}

fn disciplines_reply(n: usize) -> String {
    DISCIPLINES
        .iter()
        .cycle()
        .take(n)
        .enumerate()
        .map(|(i, d)| format!("{}. {d}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

fn duplicate_disciplines_reply(n: usize) -> String {
    (0..n)
        .map(|i| {
            let d = DISCIPLINES[i / 2];
            let d = if i % 2 == 1 { d.to_lowercase() } else { d.to_string() };
            format!("{}. {d}", i + 1)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

const TOPICS: [&str; 5] = [
    "known for a book on how operations and development work together",
    "known for pioneering research on team dynamics",
    "known for field studies of how engineers learn from each other",
    "known for practical guidance on measuring delivery",
    "known for work on feedback and review practices",
];

/// The one-line summary the script gives for expert `i` of discipline `d`.
pub fn expert_summary(d: usize, i: usize) -> &'static str {
    TOPICS[(d + i) % TOPICS.len()]
}

fn experts_reply(d: usize, n: usize, nameless: bool) -> String {
    (0..n)
        .map(|i| {
            if nameless && i == n - 1 {
                format!("-  | {}", expert_summary(d, i))
            } else {
                format!("- {} | {}", expert_name(d, i), expert_summary(d, i))
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn biography(name: &str, field: &str) -> String {
    format!(
        "{name} is a practitioner and researcher in {field}. Over two decades {name} has studied how \
         software teams organize their work and how small changes in practice compound over time.\n\n\
         One major contribution is a long-running study of teams that improved delivery by shortening \
         feedback loops. The insight is that teams learn fastest when the cost of trying something is low.\n\n\
         A second contribution is a widely read essay on shared ownership. {name} argues that quality \
         improves when the whole team, not a separate group, is responsible for it.\n\n\
         A third line of work looks at how knowledge moves between teams, showing that pairing a \
         struggling team with one that has solved a similar problem is more effective than formal training."
    )
}

fn elements_reply(n: usize) -> String {
    let mut out = String::from("Here are the elements to consider:\n");
    for i in 0..n {
        let _ = writeln!(
            out,
            "{}. {}: how well the team handles this day to day.",
            i + 1,
            ELEMENTS[i % ELEMENTS.len()]
        );
    }
    out
}

fn metrics_reply(expert: usize, n: usize) -> String {
    let mut out = String::from("Based on our discussion, these metrics can be computed from the data.\n");
    for j in 0..n {
        let k = &KINDS[(expert * 3 + j) % KINDS.len()];
        let _ = write!(
            out,
            "\n<metric>\n    <metric_name>{}</metric_name>\n    <metric_description>{}</metric_description>\n    <metric_reason>{}</metric_reason>\n    <metric_polarity>{}</metric_polarity>\n</metric>\n",
            k.name, k.description, k.reason, k.polarity
        );
        if j + 1 < n {
            out.push_str("\nThe next metric covers a different element.\n");
        }
    }
    out
}

fn programmer_reply(metric: &str, bad_sql: bool, repair: bool) -> String {
    let sql = if bad_sql && metric == "knowledgeSharingIndex" {
        BAD_SQL
    } else if metric == "taskCompletionRate" {
        TASK_COMPLETION_SQL
    } else {
        KINDS
            .iter()
            .find(|k| k.name == metric)
            .and_then(|k| k.sql)
            .unwrap_or("SELECT r.id AS team_id, COUNT(c.sha) AS value FROM repositories r LEFT JOIN commits c ON c.repository_id = r.id GROUP BY r.id")
    };
    let lead = if repair { "Here is a corrected query." } else { "Here is the query." };
    format!("{lead}\n\n```sql\n{sql}\n```")
}

/// Orders teams by the first metric column of the values table.
fn ranking_reply(prompt: &str, garbled: bool) -> String {
    let expert = between(prompt, "You are ", ", an expert").unwrap_or("The expert");
    let mut lines = prompt.lines().filter(|l| l.starts_with('|'));
    let header = lines.next().unwrap_or_default();
    let metric = header.split('|').nth(2).map(str::trim).unwrap_or("the first metric");
    let lower_better = metric.contains("lower is better");
    let mut rows: Vec<(String, Option<f64>)> = lines
        .filter(|l| !l.starts_with("|---"))
        .filter_map(|l| {
            let cells: Vec<&str> = l.split('|').map(str::trim).collect();
            let team = cells.get(1)?.to_string();
            Some((team, cells.get(2).and_then(|v| v.parse().ok())))
        })
        .collect();
    rows.sort_by(|a, b| {
        let key = |v: Option<f64>| v.map(|x| if lower_better { -x } else { x });
        match (key(a.1), key(b.1)) {
            (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.0.cmp(&b.0)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.0.cmp(&b.0),
        }
    });
    let mut order: Vec<String> = rows.iter().map(|r| r.0.clone()).collect();
    if garbled {
        order.push("r99".into());
    }
    let metric_name = metric.split(" (").next().unwrap_or(metric);
    format!(
        "<ranking>{}</ranking>\n<explanation>{expert} puts the teams that do best on {metric_name} first, \
         because they have already solved the problem the struggling team faces.</explanation>",
        order.join(", ")
    )
}

fn vanilla_reply(n: usize) -> String {
    let items: Vec<String> = VANILLA
        .iter()
        .take(n)
        .map(|(k, v)| format!("  {{'{k}': '{v}'}}"))
        .collect();
    format!(
        "Here are metrics you could look for:\n```\n[\n{}\n]\n```",
        items.join(",\n")
    )
}

struct RepoProfile {
    id: &'static str,
    name: &'static str,
    language: &'static str,
    commits: usize,
    test_every: usize,
    authors: usize,
    issues: usize,
    resolution_days: i64,
    prs: usize,
    unmerged_every: usize,
    review_hours: i64,
    comments_per_issue: usize,
    positive_every: usize,
}

const REPOS: [RepoProfile; 6] = [
    RepoProfile { id: "r1", name: "atlas", language: "Rust", commits: 24, test_every: 2, authors: 4, issues: 10, resolution_days: 2, prs: 8, unmerged_every: 5, review_hours: 6, comments_per_issue: 3, positive_every: 1 },
    RepoProfile { id: "r2", name: "beacon", language: "Go", commits: 18, test_every: 3, authors: 3, issues: 8, resolution_days: 4, prs: 6, unmerged_every: 3, review_hours: 30, comments_per_issue: 1, positive_every: 2 },
    RepoProfile { id: "r3", name: "cinder", language: "Python", commits: 9, test_every: 5, authors: 2, issues: 9, resolution_days: 15, prs: 5, unmerged_every: 2, review_hours: 72, comments_per_issue: 0, positive_every: 3 },
    RepoProfile { id: "r4", name: "delta", language: "TypeScript", commits: 30, test_every: 2, authors: 5, issues: 12, resolution_days: 1, prs: 10, unmerged_every: 6, review_hours: 3, comments_per_issue: 4, positive_every: 1 },
    RepoProfile { id: "r5", name: "ember", language: "Java", commits: 14, test_every: 4, authors: 3, issues: 6, resolution_days: 5, prs: 4, unmerged_every: 2, review_hours: 48, comments_per_issue: 2, positive_every: 2 },
    RepoProfile { id: "r6", name: "fjord", language: "Kotlin", commits: 21, test_every: 3, authors: 4, issues: 7, resolution_days: 3, prs: 7, unmerged_every: 4, review_hours: 12, comments_per_issue: 1, positive_every: 4 },
];

fn stamp(t: NaiveDateTime) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Six fictional repositories with commits, issues, pull requests, reviews,
/// comments, reactions and milestones, as event lines for ingestion. The
/// output is a pure function of this source file.
pub fn demo_events() -> String {
    let base = NaiveDate::from_ymd_opt(2023, 1, 2)
        .expect("valid date")
        .and_hms_opt(9, 0, 0)
        .expect("valid time");
    let mut lines: Vec<serde_json::Value> = Vec::new();
    let mut event = |entity: &str, data: serde_json::Value| lines.push(json!({ "entity": entity, "data": data }));

    for u in 1..=12 {
        event("users", json!({ "id": format!("u{u}"), "login": format!("dev{u}"), "created_at": stamp(base - Duration::days(400 - u)) }));
    }
    for (p, repo) in REPOS.iter().enumerate() {
        let user = |k: usize| format!("u{}", (p * 2 + k) % 12 + 1);
        event("repositories", json!({
            "id": repo.id, "name": repo.name, "language": repo.language,
            "description": format!("The {} service", repo.name),
            "created_at": stamp(base - Duration::days(200)),
        }));
        for c in 0..repo.commits {
            let message = if c % repo.test_every == 0 { format!("Add tests for change {c}") } else { format!("Implement change {c}") };
            event("commits", json!({
                "sha": format!("{}c{c:03}", repo.id), "repository_id": repo.id,
                "author_id": user(c % repo.authors), "message": message,
                "additions": 10 + (c * 7 + p * 13) % 90, "deletions": (c * 5 + p * 3) % 40,
                "files_changed": 1 + c % 4,
                "committed_at": stamp(base + Duration::hours((c as i64) * 60 / (1 + p as i64 % 3))),
            }));
        }
        let mut comment_no = 0;
        for i in 0..repo.issues {
            let opened = base + Duration::days(i as i64 * 3);
            let open = i + 2 >= repo.issues;
            let closed = (!open).then(|| stamp(opened + Duration::days(repo.resolution_days + (i % 3) as i64)));
            event("issues", json!({
                "id": format!("{}-i{i}", repo.id), "repository_id": repo.id, "number": i + 1,
                "title": format!("Issue {}", i + 1), "author_id": user(i),
                "state": if open { "open" } else { "closed" },
                "labels": if i % 2 == 0 { json!(["bug"]) } else { json!(["enhancement", "ui"]) },
                "created_at": stamp(opened), "closed_at": closed,
            }));
            for k in 0..repo.comments_per_issue + i % 2 {
                let id = format!("{}-m{comment_no}", repo.id);
                event("comments", json!({
                    "id": id, "repository_id": repo.id, "issue_id": format!("{}-i{i}", repo.id),
                    "author_id": user(k + i), "body": "Looked into this.",
                    "created_at": stamp(opened + Duration::hours(4 + k as i64)),
                }));
                let positive = comment_no % repo.positive_every == 0;
                event("reactions", json!({
                    "id": format!("{}-x{comment_no}", repo.id), "repository_id": repo.id,
                    "comment_id": id, "user_id": user(k + 1),
                    "content": if positive { "+1" } else { "confused" },
                    "created_at": stamp(opened + Duration::hours(6 + k as i64)),
                }));
                comment_no += 1;
            }
        }
        for j in 0..repo.prs {
            let opened = base + Duration::days(j as i64 * 4) + Duration::hours(2);
            let merged = j % repo.unmerged_every != 0;
            let pr = format!("{}-p{j}", repo.id);
            event("pull_requests", json!({
                "id": pr, "repository_id": repo.id, "number": 100 + j,
                "title": format!("Change {j}"), "author_id": user(j),
                "state": if merged { "merged" } else { "closed" },
                "additions": 20 + j * 11, "deletions": j * 3,
                "created_at": stamp(opened),
                "merged_at": merged.then(|| stamp(opened + Duration::hours(repo.review_hours + 24))),
                "closed_at": stamp(opened + Duration::hours(repo.review_hours + 24)),
            }));
            for (n, state) in ["COMMENTED", "APPROVED"].iter().enumerate() {
                event("reviews", json!({
                    "id": format!("{pr}-v{n}"), "repository_id": repo.id, "pull_request_id": pr,
                    "reviewer_id": user(j + 1 + n), "state": state,
                    "submitted_at": stamp(opened + Duration::hours(repo.review_hours * (n as i64 + 1) + j as i64)),
                }));
            }
        }
        for m in 0..2 {
            let due = base + Duration::days(30 * (m + 1));
            let late = (p as i64 + m) % 3 == 0;
            event("milestones", json!({
                "id": format!("{}-ms{m}", repo.id), "repository_id": repo.id,
                "title": format!("Milestone {}", m + 1), "state": "closed",
                "created_at": stamp(base), "due_on": stamp(due),
                "closed_at": stamp(due + Duration::days(if late { 5 } else { -2 })),
            }));
        }
    }
    let mut out = String::new();
    for line in lines {
        out.push_str(&serde_json::to_string(&line).expect("json value"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expert_names_are_distinct_within_a_discipline() {
        for d in 0..DISCIPLINES.len() {
            let names: std::collections::BTreeSet<String> = (0..5).map(|i| expert_name(d, i)).collect();
            assert_eq!(names.len(), 5);
        }
    }

    #[test]
    fn expert_index_follows_pool_order() {
        assert_eq!(expert_index(&expert_name(0, 0)), 0);
        assert_eq!(expert_index(&expert_name(1, 0)), 3);
        assert_eq!(expert_index(&expert_name(2, 2)), 8);
    }

    #[test]
    fn ranking_reply_orders_by_first_column() {
        let prompt = "You are Ada Rivera, an expert in X.\n| team_id | m (lower is better) | n (higher is better) |\n|---|---|---|\n| r1 | 3 | 1 |\n| r2 | 1 | 1 |\n| r4 | n/a | 1 |";
        let reply = ranking_reply(prompt, false);
        assert!(reply.starts_with("<ranking>r2, r1, r4</ranking>"), "{reply}");
    }

    #[test]
    fn demo_events_ingest_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let store = crate::store::RepoStore::open(dir.path().join("demo.sqlite")).unwrap();
        let summary = store.ingest_str(&demo_events()).unwrap();
        assert_eq!(summary.count("repositories"), 6);
        assert_eq!(demo_events(), demo_events());
    }
}
