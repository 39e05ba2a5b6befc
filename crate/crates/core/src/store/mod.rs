//! Repository community data behind ingestion, a schema catalog and a
//! read-only query sandbox.

pub mod sandbox;
pub mod schema;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{Duration, Instant};

use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};
use rusqlite::types::{Value, ValueRef};
use rusqlite::{params_from_iter, Connection, OpenFlags};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use sandbox::AdmittedSelect;
pub use schema::{Table, TABLES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("store unavailable: {0}")]
    StoreUnavailable(String),
    #[error("malformed event on line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("unknown entity {tag:?} on line {line}")]
    UnknownEntity { tag: String, line: usize },
    #[error("conflicting duplicate {table} record {key} on line {line}")]
    DuplicateKey {
        table: String,
        key: String,
        line: usize,
    },
    #[error("forbidden statement: {0}")]
    ForbiddenStatement(String),
    #[error("query error: {0}")]
    QueryError(String),
    #[error("query exceeded {0:?}")]
    Timeout(Duration),
}

/// Identifier of a team. Teams are repositories.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TeamId(pub String);

impl TeamId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TeamId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamRecord {
    pub team_id: TeamId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaCatalog {
    pub description: String,
    pub tables: Vec<String>,
}

impl SchemaCatalog {
    pub fn table_list(&self) -> String {
        self.tables.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Timestamp(String),
}

impl Scalar {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Integer(i) => Some(*i as f64),
            Scalar::Real(r) => Some(*r),
            Scalar::Text(s) => s.trim().parse().ok(),
            Scalar::Null | Scalar::Timestamp(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<String> {
        match self {
            Scalar::Null => None,
            Scalar::Integer(i) => Some(i.to_string()),
            Scalar::Real(r) => Some(r.to_string()),
            Scalar::Text(s) | Scalar::Timestamp(s) => Some(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Scalar>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub counts: BTreeMap<String, usize>,
}

impl IngestSummary {
    pub fn count(&self, table: &str) -> usize {
        self.counts.get(table).copied().unwrap_or(0)
    }
}

pub const DEFAULT_QUERY_TIMEOUT: Duration = Duration::from_secs(10);

/// SQLite-backed store. Reads may run concurrently; ingestion holds the
/// store exclusively.
pub struct RepoStore {
    path: PathBuf,
    writer: Mutex<Connection>,
    gate: RwLock<()>,
    query_timeout: Duration,
}

impl fmt::Debug for RepoStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RepoStore").field("path", &self.path).finish()
    }
}

fn unavailable(e: impl fmt::Display) -> StoreError {
    StoreError::StoreUnavailable(e.to_string())
}

impl RepoStore {
    /// Opens (creating if needed) the database at `path` with the fixed schema.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let conn = Connection::open(&path).map_err(unavailable)?;
        conn.busy_timeout(Duration::from_secs(5)).map_err(unavailable)?;
        for table in TABLES {
            conn.execute(&table.ddl(), []).map_err(unavailable)?;
        }
        Ok(Self {
            path,
            writer: Mutex::new(conn),
            gate: RwLock::new(()),
            query_timeout: DEFAULT_QUERY_TIMEOUT,
        })
    }

    pub fn with_query_timeout(mut self, timeout: Duration) -> Self {
        self.query_timeout = timeout;
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn schema_catalog(&self) -> Result<SchemaCatalog, StoreError> {
        let _read = self.gate.read().map_err(unavailable)?;
        Ok(SchemaCatalog {
            description: schema::DESCRIPTION.to_string(),
            tables: schema::table_names(),
        })
    }

    pub fn list_teams(&self) -> Result<Vec<TeamRecord>, StoreError> {
        let _read = self.gate.read().map_err(unavailable)?;
        let conn = self.writer.lock().map_err(unavailable)?;
        let mut stmt = conn
            .prepare("SELECT id, name FROM repositories ORDER BY id")
            .map_err(unavailable)?;
        let teams = stmt
            .query_map([], |row| {
                Ok(TeamRecord {
                    team_id: TeamId(row.get(0)?),
                    name: row.get(1)?,
                })
            })
            .map_err(unavailable)?
            .collect::<Result<Vec<_>, _>>()
            .map_err(unavailable)?;
        Ok(teams)
    }

    /// Loads a JSON Lines event file in one transaction.
    ///
    /// Each line is `{"entity": <table>, "data": {<column>: <value>, ...}}`.
    /// A record whose key already exists with identical content is accepted
    /// as a no-op, so re-ingesting a file leaves the store unchanged.
    pub fn ingest(&self, events_path: impl AsRef<Path>) -> Result<IngestSummary, StoreError> {
        let text = std::fs::read_to_string(events_path.as_ref()).map_err(|e| {
            unavailable(format!("{}: {e}", events_path.as_ref().display()))
        })?;
        self.ingest_str(&text)
    }

    pub fn ingest_str(&self, text: &str) -> Result<IngestSummary, StoreError> {
        let mut counts: BTreeMap<String, usize> =
            TABLES.iter().map(|t| (t.name.to_string(), 0)).collect();
        let _write = self.gate.write().map_err(unavailable)?;
        let mut conn = self.writer.lock().map_err(unavailable)?;
        let tx = conn.transaction().map_err(unavailable)?;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (table, row) = parse_event(line, line_no)?;
            insert_idempotent(&tx, table, &row, line_no)?;
            *counts.get_mut(table.name).expect("known table") += 1;
        }
        tx.commit().map_err(unavailable)?;
        Ok(IngestSummary { counts })
    }

    /// Runs one admitted SELECT on a fresh read-only connection.
    pub fn execute_readonly(&self, sql: &str) -> Result<RowSet, StoreError> {
        sandbox::check(sql)?;
        let _read = self.gate.read().map_err(unavailable)?;
        let conn = Connection::open_with_flags(
            &self.path,
            OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
        )
        .map_err(unavailable)?;
        conn.busy_timeout(Duration::from_secs(5)).map_err(unavailable)?;
        conn.pragma_update(None, "query_only", true)
            .map_err(unavailable)?;

        let deadline = Instant::now() + self.query_timeout;
        conn.progress_handler(1_000, Some(move || Instant::now() > deadline));

        let timeout = self.query_timeout;
        let query_err = move |e: rusqlite::Error| match e.sqlite_error_code() {
            Some(rusqlite::ErrorCode::OperationInterrupted) => StoreError::Timeout(timeout),
            _ => StoreError::QueryError(e.to_string()),
        };

        let mut stmt = conn.prepare(sql).map_err(query_err)?;
        if !stmt.readonly() {
            return Err(StoreError::ForbiddenStatement(
                "statement is not read-only".into(),
            ));
        }
        let columns: Vec<String> = stmt.column_names().iter().map(|c| c.to_string()).collect();
        let timestamp_cols: Vec<bool> = stmt
            .columns()
            .iter()
            .map(|c| c.decl_type().is_some_and(|t| t.eq_ignore_ascii_case("TIMESTAMP")))
            .collect();
        let mut rows = Vec::new();
        let mut cursor = stmt.query([]).map_err(query_err)?;
        while let Some(row) = cursor.next().map_err(query_err)? {
            let mut out = Vec::with_capacity(columns.len());
            for (idx, is_ts) in timestamp_cols.iter().enumerate() {
                let v = row.get_ref(idx).map_err(query_err)?;
                out.push(to_scalar(v, *is_ts));
            }
            rows.push(out);
        }
        Ok(RowSet { columns, rows })
    }

    /// Canonical text dump of every table, rows in primary-key order.
    pub fn dump(&self) -> Result<String, StoreError> {
        let _read = self.gate.read().map_err(unavailable)?;
        let conn = self.writer.lock().map_err(unavailable)?;
        let mut out = String::new();
        for table in TABLES {
            let cols: Vec<&str> = table.columns.iter().map(|c| c.name).collect();
            out.push_str(&format!("-- {} ({})\n", table.name, cols.join(", ")));
            let sql = format!(
                "SELECT {} FROM {} ORDER BY {}",
                cols.join(", "),
                table.name,
                table.primary_key.join(", ")
            );
            let mut stmt = conn.prepare(&sql).map_err(unavailable)?;
            let mut rows = stmt.query([]).map_err(unavailable)?;
            while let Some(row) = rows.next().map_err(unavailable)? {
                let mut fields = Vec::with_capacity(cols.len());
                for idx in 0..cols.len() {
                    let v = row.get_ref(idx).map_err(unavailable)?;
                    fields.push(format!("{:?}", to_scalar(v, false)));
                }
                out.push_str(&fields.join("\t"));
                out.push('\n');
            }
        }
        Ok(out)
    }
}

fn to_scalar(v: ValueRef<'_>, timestamp: bool) -> Scalar {
    match v {
        ValueRef::Null => Scalar::Null,
        ValueRef::Integer(i) => Scalar::Integer(i),
        ValueRef::Real(r) => Scalar::Real(r),
        ValueRef::Text(t) => {
            let s = String::from_utf8_lossy(t).into_owned();
            if timestamp {
                Scalar::Timestamp(s)
            } else {
                Scalar::Text(s)
            }
        }
        ValueRef::Blob(b) => Scalar::Text(hex::encode(b)),
    }
}

fn parse_event(line: &str, line_no: usize) -> Result<(&'static Table, Vec<Value>), StoreError> {
    let malformed = |reason: String| StoreError::MalformedLine {
        line: line_no,
        reason,
    };
    let event: serde_json::Value =
        serde_json::from_str(line).map_err(|e| malformed(format!("invalid JSON: {e}")))?;
    let obj = event
        .as_object()
        .ok_or_else(|| malformed("event is not an object".into()))?;
    let tag = obj
        .get("entity")
        .ok_or_else(|| malformed("missing \"entity\" field".into()))?
        .as_str()
        .ok_or_else(|| malformed("\"entity\" is not a string".into()))?;
    let table = schema::table(tag).ok_or_else(|| StoreError::UnknownEntity {
        tag: tag.to_string(),
        line: line_no,
    })?;
    let data = obj
        .get("data")
        .and_then(|d| d.as_object())
        .ok_or_else(|| malformed("missing \"data\" object".into()))?;
    if let Some(unknown) = data.keys().find(|k| table.column(k).is_none()) {
        return Err(malformed(format!(
            "unknown column {unknown:?} for {}",
            table.name
        )));
    }
    let mut row = Vec::with_capacity(table.columns.len());
    for column in table.columns {
        let raw = data.get(column.name).unwrap_or(&serde_json::Value::Null);
        let value = convert(raw, column.ty)
            .map_err(|reason| malformed(format!("column {}: {reason}", column.name)))?;
        if column.required && value == Value::Null {
            return Err(malformed(format!("column {} is required", column.name)));
        }
        row.push(value);
    }
    Ok((table, row))
}

fn convert(raw: &serde_json::Value, ty: schema::ColumnType) -> Result<Value, String> {
    use schema::ColumnType;
    use serde_json::Value as J;
    Ok(match (raw, ty) {
        (J::Null, _) => Value::Null,
        (J::String(s), ColumnType::Text) => Value::Text(s.clone()),
        (J::Number(n), ColumnType::Text) => Value::Text(n.to_string()),
        (J::Bool(b), ColumnType::Text) => Value::Text(b.to_string()),
        (J::Array(items), ColumnType::Text) => {
            let parts: Option<Vec<&str>> = items.iter().map(|v| v.as_str()).collect();
            Value::Text(parts.ok_or("array must hold strings")?.join(","))
        }
        (J::Number(n), ColumnType::Integer) => {
            Value::Integer(n.as_i64().ok_or("expected an integer")?)
        }
        (J::Bool(b), ColumnType::Integer) => Value::Integer(*b as i64),
        (J::Number(n), ColumnType::Real) => Value::Real(n.as_f64().ok_or("expected a number")?),
        (J::String(s), ColumnType::Timestamp) => Value::Text(normalize_timestamp(s)?),
        (other, ty) => return Err(format!("{other} does not fit {ty:?}")),
    })
}

fn normalize_timestamp(s: &str) -> Result<String, String> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt
            .with_timezone(&Utc)
            .to_rfc3339_opts(SecondsFormat::Secs, true));
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        let dt = d.and_hms_opt(0, 0, 0).expect("midnight").and_utc();
        return Ok(dt.to_rfc3339_opts(SecondsFormat::Secs, true));
    }
    Err(format!("{s:?} is not an ISO-8601 timestamp"))
}

fn insert_idempotent(
    conn: &Connection,
    table: &Table,
    row: &[Value],
    line_no: usize,
) -> Result<(), StoreError> {
    let cols: Vec<&str> = table.columns.iter().map(|c| c.name).collect();
    let key_idx: Vec<usize> = table
        .primary_key
        .iter()
        .map(|k| cols.iter().position(|c| c == k).expect("key column"))
        .collect();
    let key_values: Vec<&Value> = key_idx.iter().map(|&i| &row[i]).collect();
    let where_clause = table
        .primary_key
        .iter()
        .map(|k| format!("{k} = ?"))
        .collect::<Vec<_>>()
        .join(" AND ");
    let select = format!(
        "SELECT {} FROM {} WHERE {where_clause}",
        cols.join(", "),
        table.name
    );
    let existing: Option<Vec<Value>> = {
        let mut stmt = conn.prepare_cached(&select).map_err(unavailable)?;
        let mut rows = stmt
            .query(params_from_iter(key_values.iter()))
            .map_err(unavailable)?;
        match rows.next().map_err(unavailable)? {
            Some(r) => Some(
                (0..cols.len())
                    .map(|i| r.get::<_, Value>(i))
                    .collect::<Result<_, _>>()
                    .map_err(unavailable)?,
            ),
            None => None,
        }
    };
    match existing {
        Some(current) if current == row => Ok(()),
        Some(_) => Err(StoreError::DuplicateKey {
            table: table.name.to_string(),
            key: key_values
                .iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join("/"),
            line: line_no,
        }),
        None => {
            let placeholders = vec!["?"; cols.len()].join(", ");
            let insert = format!(
                "INSERT INTO {} ({}) VALUES ({placeholders})",
                table.name,
                cols.join(", ")
            );
            conn.prepare_cached(&insert)
                .and_then(|mut s| s.execute(params_from_iter(row.iter())))
                .map_err(unavailable)?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> (tempfile::TempDir, RepoStore) {
        let dir = tempfile::tempdir().unwrap();
        let s = RepoStore::open(dir.path().join("s.db")).unwrap();
        (dir, s)
    }

    #[test]
    fn empty_ingest_counts_zero() {
        let (_d, s) = store();
        let summary = s.ingest_str("").unwrap();
        assert_eq!(summary.counts.len(), TABLES.len());
        assert!(summary.counts.values().all(|&c| c == 0));
        assert!(s.list_teams().unwrap().is_empty());
    }

    #[test]
    fn missing_entity_aborts_without_partial_commit() {
        let (_d, s) = store();
        let before = s.dump().unwrap();
        let text = [
            r#"{"entity":"repositories","data":{"id":"r1","name":"one"}}"#,
            r#"{"entity":"repositories","data":{"id":"r2","name":"two"}}"#,
            r#"{"entity":"issues","data":{"id":"i1","repository_id":"r1"}}"#,
            r#"{"entity":"issues","data":{"id":"i2","repository_id":"r1"}}"#,
            r#"{"data":{"id":"i3","repository_id":"r1"}}"#,
        ]
        .join("\n");
        let err = s.ingest_str(&text).unwrap_err();
        assert!(matches!(err, StoreError::MalformedLine { line: 5, .. }), "{err}");
        assert_eq!(s.dump().unwrap(), before);
    }

    #[test]
    fn unknown_entity_reports_tag_and_line() {
        let (_d, s) = store();
        let err = s
            .ingest_str(r#"{"entity":"investment_data","data":{}}"#)
            .unwrap_err();
        assert_eq!(
            err,
            StoreError::UnknownEntity {
                tag: "investment_data".into(),
                line: 1
            }
        );
    }

    #[test]
    fn conflicting_duplicate_rejected() {
        let (_d, s) = store();
        let text = [
            r#"{"entity":"repositories","data":{"id":"r1","name":"one"}}"#,
            r#"{"entity":"repositories","data":{"id":"r1","name":"uno"}}"#,
        ]
        .join("\n");
        assert!(matches!(
            s.ingest_str(&text),
            Err(StoreError::DuplicateKey { line: 2, .. })
        ));
        assert!(s.list_teams().unwrap().is_empty());
    }

    #[test]
    fn timestamps_are_normalized_to_utc() {
        let (_d, s) = store();
        s.ingest_str(
            r#"{"entity":"repositories","data":{"id":"r1","name":"one","created_at":"2023-01-02T03:04:05+02:00"}}"#,
        )
        .unwrap();
        let rows = s
            .execute_readonly("SELECT created_at FROM repositories")
            .unwrap();
        assert_eq!(
            rows.rows,
            vec![vec![Scalar::Timestamp("2023-01-02T01:04:05Z".into())]]
        );
        assert!(matches!(
            s.ingest_str(r#"{"entity":"users","data":{"id":"u","login":"u","created_at":"yesterday"}}"#),
            Err(StoreError::MalformedLine { line: 1, .. })
        ));
    }

    #[test]
    fn readonly_connection_refuses_writes_even_past_the_parser() {
        let (_d, s) = store();
        // Bypass the static check to exercise the connection layer directly.
        let conn = Connection::open_with_flags(s.path(), OpenFlags::SQLITE_OPEN_READ_ONLY).unwrap();
        assert!(conn.execute("DELETE FROM issues", []).is_err());
    }

    #[test]
    fn timeout_interrupts_long_queries() {
        let (_d, s) = store();
        let s = s.with_query_timeout(Duration::from_millis(20));
        let sql = "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) \
                   SELECT COUNT(*) FROM c";
        assert!(matches!(s.execute_readonly(sql), Err(StoreError::Timeout(_))));
    }
}
