//! Static admission check for model-generated SQL.
//!
//! A statement is admitted only if it survives all three layers: a keyword
//! denylist over the token stream, a single-statement parse that must yield
//! a plain query with no nested writes, and (at execution time) a read-only
//! connection that refuses any statement SQLite does not mark read-only.

use std::ops::ControlFlow;

use sqlparser::ast::{visit_statements, SelectItem, SetExpr, Statement};
use sqlparser::dialect::SQLiteDialect;
use sqlparser::parser::Parser;
use sqlparser::tokenizer::{Token, Tokenizer};

use super::StoreError;

const DENYLIST: &[&str] = &[
    "INSERT",
    "UPDATE",
    "DELETE",
    "DROP",
    "ALTER",
    "CREATE",
    "ATTACH",
    "DETACH",
    "PRAGMA",
    "VACUUM",
    "REINDEX",
    "ANALYZE",
    "TRUNCATE",
    "GRANT",
    "REVOKE",
    "BEGIN",
    "COMMIT",
    "ROLLBACK",
    "SAVEPOINT",
    "RELEASE",
    "UPSERT",
    "MERGE",
    "INTO",
    "LOAD_EXTENSION",
    "READFILE",
    "WRITEFILE",
];

/// What the parser learned about an admitted statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmittedSelect {
    /// Number of result columns of the leftmost SELECT, `None` if it uses a
    /// wildcard.
    pub projection_width: Option<usize>,
}

pub fn check(sql: &str) -> Result<AdmittedSelect, StoreError> {
    let dialect = SQLiteDialect {};
    let tokens = Tokenizer::new(&dialect, sql)
        .tokenize()
        .map_err(|e| StoreError::QueryError(format!("syntax error: {e}")))?;

    let mut seen_semicolon = false;
    for token in &tokens {
        match token {
            Token::Whitespace(_) => {}
            Token::SemiColon => seen_semicolon = true,
            _ if seen_semicolon => {
                return Err(StoreError::ForbiddenStatement(
                    "multiple statements are not allowed".into(),
                ))
            }
            Token::Word(w) if w.quote_style.is_none() => {
                let upper = w.value.to_ascii_uppercase();
                if DENYLIST.contains(&upper.as_str()) {
                    return Err(StoreError::ForbiddenStatement(format!(
                        "keyword {upper} is not allowed"
                    )));
                }
            }
            _ => {}
        }
    }

    let statements = Parser::parse_sql(&dialect, sql)
        .map_err(|e| StoreError::QueryError(format!("syntax error: {e}")))?;
    let query = match statements.as_slice() {
        [] => return Err(StoreError::QueryError("empty statement".into())),
        [Statement::Query(q)] => q,
        [_] => {
            return Err(StoreError::ForbiddenStatement(
                "only SELECT statements are allowed".into(),
            ))
        }
        _ => {
            return Err(StoreError::ForbiddenStatement(
                "multiple statements are not allowed".into(),
            ))
        }
    };

    let nested = visit_statements(&statements, |s| match s {
        Statement::Query(q) if q.locks.is_empty() => ControlFlow::Continue(()),
        other => ControlFlow::Break(other.to_string()),
    });
    if let ControlFlow::Break(stmt) = nested {
        return Err(StoreError::ForbiddenStatement(format!(
            "nested non-SELECT statement: {stmt}"
        )));
    }

    if !is_select_body(&query.body) {
        return Err(StoreError::ForbiddenStatement(
            "only SELECT statements are allowed".into(),
        ));
    }

    Ok(AdmittedSelect {
        projection_width: projection_width(&query.body),
    })
}

fn is_select_body(body: &SetExpr) -> bool {
    match body {
        SetExpr::Select(_) => true,
        SetExpr::Query(q) => is_select_body(&q.body),
        SetExpr::SetOperation { left, right, .. } => is_select_body(left) && is_select_body(right),
        _ => false,
    }
}

fn projection_width(body: &SetExpr) -> Option<usize> {
    match body {
        SetExpr::Select(select) => {
            let wildcard = select.projection.iter().any(|item| {
                matches!(
                    item,
                    SelectItem::Wildcard(_) | SelectItem::QualifiedWildcard(_, _)
                )
            });
            (!wildcard).then_some(select.projection.len())
        }
        SetExpr::Query(q) => projection_width(&q.body),
        SetExpr::SetOperation { left, .. } => projection_width(left),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forbidden(sql: &str) -> bool {
        matches!(check(sql), Err(StoreError::ForbiddenStatement(_)))
    }

    #[test]
    fn admits_plain_selects() {
        for sql in [
            "SELECT COUNT(*) FROM issues",
            "SELECT COUNT(*) FROM issues;",
            "select r.id, count(i.id) from repositories r left join issues i on i.repository_id = r.id group by r.id",
            "SELECT id, AVG(julianday(closed_at) - julianday(created_at)) FROM issues GROUP BY id",
            "SELECT replace(title, 'a', 'b'), 1 FROM issues",
            "WITH t AS (SELECT 1 AS x) SELECT x FROM t",
        ] {
            check(sql).unwrap_or_else(|e| panic!("{sql}: {e}"));
        }
    }

    #[test]
    fn keyword_inside_string_literal_is_fine() {
        check("SELECT COUNT(*) FROM issues WHERE title = 'DROP TABLE issues'").unwrap();
    }

    #[test]
    fn rejects_writes_and_batches() {
        assert!(forbidden("DROP TABLE issues"));
        assert!(forbidden("DELETE FROM issues"));
        assert!(forbidden("SELECT 1; DELETE FROM issues"));
        assert!(forbidden("SELECT 1; SELECT 2"));
        assert!(forbidden("PRAGMA writable_schema = 1"));
        assert!(forbidden("ATTACH DATABASE 'x.db' AS x"));
        assert!(forbidden("VALUES (1)"));
    }

    #[test]
    fn syntax_errors_are_query_errors() {
        assert!(matches!(
            check("SELEC oops"),
            Err(StoreError::QueryError(_))
        ));
        assert!(matches!(check("   "), Err(StoreError::QueryError(_))));
    }

    #[test]
    fn reports_projection_width() {
        assert_eq!(
            check("SELECT a, b FROM t").unwrap().projection_width,
            Some(2)
        );
        assert_eq!(check("SELECT * FROM t").unwrap().projection_width, None);
        assert_eq!(
            check("SELECT a, b FROM t UNION SELECT c, d FROM u")
                .unwrap()
                .projection_width,
            Some(2)
        );
    }
}
