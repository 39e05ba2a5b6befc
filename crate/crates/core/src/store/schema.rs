//! The fixed relational schema for repository community data.
//!
//! One team is one repository; every activity table carries `repository_id`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Text,
    Integer,
    Real,
    Timestamp,
}

impl ColumnType {
    fn sql(self) -> &'static str {
        match self {
            ColumnType::Text => "TEXT",
            ColumnType::Integer => "INTEGER",
            ColumnType::Real => "REAL",
            ColumnType::Timestamp => "TIMESTAMP",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Column {
    pub name: &'static str,
    pub ty: ColumnType,
    pub required: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Table {
    pub name: &'static str,
    pub columns: &'static [Column],
    pub primary_key: &'static [&'static str],
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub(crate) fn ddl(&self) -> String {
        let mut cols: Vec<String> = self
            .columns
            .iter()
            .map(|c| {
                let mut s = format!("{} {}", c.name, c.ty.sql());
                if c.required {
                    s.push_str(" NOT NULL");
                }
                s
            })
            .collect();
        cols.push(format!("PRIMARY KEY ({})", self.primary_key.join(", ")));
        format!("CREATE TABLE IF NOT EXISTS {} ({})", self.name, cols.join(", "))
    }
}

const fn col(name: &'static str, ty: ColumnType) -> Column {
    Column {
        name,
        ty,
        required: false,
    }
}

const fn req(name: &'static str, ty: ColumnType) -> Column {
    Column {
        name,
        ty,
        required: true,
    }
}

use ColumnType::*;

pub const TABLES: &[Table] = &[
    Table {
        name: "repositories",
        columns: &[
            req("id", Text),
            req("name", Text),
            col("description", Text),
            col("language", Text),
            col("created_at", Timestamp),
        ],
        primary_key: &["id"],
    },
    Table {
        name: "users",
        columns: &[
            req("id", Text),
            req("login", Text),
            col("name", Text),
            col("created_at", Timestamp),
        ],
        primary_key: &["id"],
    },
    Table {
        name: "commits",
        columns: &[
            req("sha", Text),
            req("repository_id", Text),
            col("author_id", Text),
            col("message", Text),
            col("additions", Integer),
            col("deletions", Integer),
            col("files_changed", Integer),
            col("committed_at", Timestamp),
        ],
        primary_key: &["sha"],
    },
    Table {
        name: "issues",
        columns: &[
            req("id", Text),
            req("repository_id", Text),
            col("number", Integer),
            col("title", Text),
            col("body", Text),
            col("author_id", Text),
            col("state", Text),
            col("labels", Text),
            col("milestone_id", Text),
            col("created_at", Timestamp),
            col("closed_at", Timestamp),
        ],
        primary_key: &["id"],
    },
    Table {
        name: "pull_requests",
        columns: &[
            req("id", Text),
            req("repository_id", Text),
            col("number", Integer),
            col("title", Text),
            col("body", Text),
            col("author_id", Text),
            col("state", Text),
            col("additions", Integer),
            col("deletions", Integer),
            col("created_at", Timestamp),
            col("merged_at", Timestamp),
            col("closed_at", Timestamp),
        ],
        primary_key: &["id"],
    },
    Table {
        name: "comments",
        columns: &[
            req("id", Text),
            req("repository_id", Text),
            col("issue_id", Text),
            col("pull_request_id", Text),
            col("author_id", Text),
            col("body", Text),
            col("created_at", Timestamp),
        ],
        primary_key: &["id"],
    },
    Table {
        name: "reactions",
        columns: &[
            req("id", Text),
            req("repository_id", Text),
            col("comment_id", Text),
            col("user_id", Text),
            col("content", Text),
            col("created_at", Timestamp),
        ],
        primary_key: &["id"],
    },
    Table {
        name: "reviews",
        columns: &[
            req("id", Text),
            req("repository_id", Text),
            col("pull_request_id", Text),
            col("reviewer_id", Text),
            col("state", Text),
            col("body", Text),
            col("submitted_at", Timestamp),
        ],
        primary_key: &["id"],
    },
    Table {
        name: "milestones",
        columns: &[
            req("id", Text),
            req("repository_id", Text),
            col("title", Text),
            col("state", Text),
            col("created_at", Timestamp),
            col("due_on", Timestamp),
            col("closed_at", Timestamp),
        ],
        primary_key: &["id"],
    },
    Table {
        name: "issue_assignees",
        columns: &[
            req("issue_id", Text),
            req("user_id", Text),
            col("repository_id", Text),
            col("assigned_at", Timestamp),
        ],
        primary_key: &["issue_id", "user_id"],
    },
];

pub const DESCRIPTION: &str = "We have a relational database of open-source software community \
data mined from code repositories, where each repository is one team. It holds repository \
metadata, contributors, commit details, issues with their labels and assignees, pull requests \
with their reviews, discussion comments with emoji reactions, and milestones; every activity \
table references its repository through repository_id, and timestamps are ISO-8601 UTC text";

pub fn table(name: &str) -> Option<&'static Table> {
    TABLES.iter().find(|t| t.name == name)
}

pub fn table_names() -> Vec<String> {
    TABLES.iter().map(|t| t.name.to_string()).collect()
}
