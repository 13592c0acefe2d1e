//! Publication records and the line-delimited JSON corpus format.
//!
//! One JSON object per line:
//!
//! ```text
//! {"paper_id":"W1","year":2015,"pub_date":"2015-03-02","journal_id":"J9",
//!  "impact_factor":3.2,"concepts":[{"name":"Physics","level":0}],
//!  "references":["W0"],
//!  "authorships":[{"author_id":"A1","position":0,"country":"China","institution_id":"I4"}]}
//! ```
//!
//! `pub_date` may be `null` or absent; `concepts` and `references` default to empty.
//! Unknown keys are ignored.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Concept {
    pub name: String,
    pub level: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorshipRecord {
    pub author_id: String,
    pub position: usize,
    pub country: String,
    pub institution_id: String,
}

/// A validated publication. Authorships are sorted by position, concepts and
/// references are deduplicated and sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicationRecord {
    pub paper_id: String,
    pub year: i32,
    pub pub_date: Option<NaiveDate>,
    pub journal_id: String,
    pub impact_factor: f64,
    pub concepts: Vec<Concept>,
    pub references: Vec<String>,
    pub authorships: Vec<AuthorshipRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordErrorKind {
    Malformed,
    InvariantViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct RecordError {
    pub kind: RecordErrorKind,
    /// 1-based input line.
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            RecordErrorKind::Malformed => "malformed record",
            RecordErrorKind::InvariantViolation => "invariant violation",
        };
        write!(f, "line {}: {kind} at `{}`: {}", self.line, self.field, self.message)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct WireRecord {
    paper_id: String,
    year: i32,
    #[serde(default)]
    pub_date: Option<String>,
    journal_id: String,
    impact_factor: f64,
    #[serde(default)]
    concepts: Vec<Concept>,
    #[serde(default)]
    references: Vec<String>,
    authorships: Vec<AuthorshipRecord>,
}

pub const MIN_YEAR: i32 = 1500;

impl PublicationRecord {
    /// Parses and validates one corpus line. `line_no` is only used for error reporting.
    pub fn parse_line(line: &str, line_no: usize) -> Result<Self, RecordError> {
        let mut de = serde_json::Deserializer::from_str(line);
        let wire: WireRecord = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            RecordError {
                kind: RecordErrorKind::Malformed,
                line: line_no,
                field: if path == "." { "<record>".into() } else { path },
                message: e.into_inner().to_string(),
            }
        })?;
        de.end().map_err(|e| RecordError {
            kind: RecordErrorKind::Malformed,
            line: line_no,
            field: "<record>".into(),
            message: e.to_string(),
        })?;
        Self::from_wire(wire, line_no)
    }

    fn from_wire(w: WireRecord, line: usize) -> Result<Self, RecordError> {
        let invariant = |field: &str, message: String| RecordError {
            kind: RecordErrorKind::InvariantViolation,
            line,
            field: field.to_string(),
            message,
        };
        if w.paper_id.trim().is_empty() {
            return Err(invariant("paper_id", "empty paper id".into()));
        }
        if w.year < MIN_YEAR {
            return Err(invariant("year", format!("year {} before {MIN_YEAR}", w.year)));
        }
        let pub_date = match w.pub_date.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(s) => {
                let d = NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| RecordError {
                    kind: RecordErrorKind::Malformed,
                    line,
                    field: "pub_date".into(),
                    message: format!("{s:?}: {e}"),
                })?;
                if d.year() != w.year {
                    return Err(invariant("pub_date", format!("date {d} disagrees with year {}", w.year)));
                }
                Some(d)
            }
        };
        if !(w.impact_factor.is_finite() && w.impact_factor >= 0.0) {
            return Err(invariant(
                "impact_factor",
                format!("impact factor {} is not a non-negative number", w.impact_factor),
            ));
        }
        if w.authorships.is_empty() {
            return Err(invariant("authorships", "no authorships".into()));
        }
        let n = w.authorships.len();
        let mut seen_pos = vec![false; n];
        let mut seen_authors = HashSet::with_capacity(n);
        for (i, a) in w.authorships.iter().enumerate() {
            let field = |f: &str| format!("authorships[{i}].{f}");
            if a.author_id.trim().is_empty() {
                return Err(invariant(&field("author_id"), "empty author id".into()));
            }
            if a.country.trim().is_empty() {
                return Err(invariant(&field("country"), "empty country".into()));
            }
            if a.position >= n {
                return Err(invariant(
                    &field("position"),
                    format!("position {} out of range for {n} authors", a.position),
                ));
            }
            if std::mem::replace(&mut seen_pos[a.position], true) {
                return Err(invariant(&field("position"), format!("duplicate position {}", a.position)));
            }
            if !seen_authors.insert(a.author_id.as_str()) {
                return Err(invariant(&field("author_id"), format!("author {} listed twice", a.author_id)));
            }
        }
        let mut authorships = w.authorships;
        authorships.sort_by_key(|a| a.position);

        let references: BTreeSet<String> = w.references.into_iter().collect();
        if references.contains(&w.paper_id) {
            return Err(invariant("references", "paper cites itself".into()));
        }
        let concepts: BTreeSet<Concept> = w.concepts.into_iter().collect();

        Ok(Self {
            paper_id: w.paper_id,
            year: w.year,
            pub_date,
            journal_id: w.journal_id,
            impact_factor: w.impact_factor,
            concepts: concepts.into_iter().collect(),
            references: references.into_iter().collect(),
            authorships,
        })
    }

    /// Serializes back to the corpus line format (no trailing newline).
    pub fn to_json_line(&self) -> String {
        let wire = WireRecord {
            paper_id: self.paper_id.clone(),
            year: self.year,
            pub_date: self.pub_date.map(|d| d.format("%Y-%m-%d").to_string()),
            journal_id: self.journal_id.clone(),
            impact_factor: self.impact_factor,
            concepts: self.concepts.clone(),
            references: self.references.clone(),
            authorships: self.authorships.clone(),
        };
        serde_json::to_string(&wire).expect("record serializes")
    }

    /// Effective publication date; a missing date counts as July 1 of the year.
    pub fn effective_date(&self) -> NaiveDate {
        self.pub_date.unwrap_or_else(|| NaiveDate::from_ymd_opt(self.year, 7, 1).expect("year within calendar range"))
    }

    /// Chronological processing key. Papers sharing a date are not prior to each other.
    pub fn sort_key(&self) -> (NaiveDate, &str) {
        (self.effective_date(), self.paper_id.as_str())
    }

    pub fn n_authors(&self) -> usize {
        self.authorships.len()
    }

    pub fn authorship_of(&self, author_id: &str) -> Option<&AuthorshipRecord> {
        self.authorships.iter().find(|a| a.author_id == author_id)
    }

    #[cfg(test)]
    pub(crate) fn example(paper_id: &str, year: i32) -> Self {
        Self {
            paper_id: paper_id.into(),
            year,
            pub_date: None,
            journal_id: "J".into(),
            impact_factor: 1.0,
            concepts: vec![],
            references: vec![],
            authorships: vec![AuthorshipRecord {
                author_id: "A".into(),
                position: 0,
                country: "China".into(),
                institution_id: "I".into(),
            }],
        }
    }
}
