//! Author-history features for lead prediction.
//!
//! Every feature of an (author, focal paper) cell only looks at papers dated
//! strictly before the focal paper; papers sharing the focal date are not
//! prior. A missing publication date counts as July 1 of the paper's year.
//!
//! Two routes compute the same vectors: [`AuthorProfileIndex`] answers
//! arbitrary queries after an in-memory build, while [`ChronologicalSweep`]
//! streams a date-sorted corpus and keeps only per-author state. The sweep is
//! what the pipeline runs; [`external_sort`] produces its input when the
//! corpus does not fit in memory.

mod dump;
mod index;
mod sort;
mod sweep;

use std::fmt;

pub use dump::{read_feature_dump, write_feature_dump, FEATURE_DUMP_HEADER};
pub use index::{build_profiles, extract_features, AuthorProfileIndex};
pub use sort::{external_sort, sort_in_memory};
pub use sweep::{sweep_features, ChronologicalSweep};

pub const N_FEATURES: usize = 9;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "f1_refs_previously_cited",
    "f2_keyword_overlap",
    "f3_self_citations",
    "f4_career_age",
    "f5_prior_pub_count",
    "f6_citations_received",
    "f7_unique_keywords",
    "f8_first_or_last_count",
    "f9_affiliation_score",
];

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LeadFeatureVector {
    /// Focal references the author already cited in earlier papers.
    pub refs_previously_cited: u64,
    /// Focal concepts that appeared in the author's earlier papers.
    pub keyword_overlap: u64,
    /// Focal references that are the author's own earlier papers.
    pub self_citations: u64,
    /// Focal year minus the year of the author's first earlier paper (0 for a debut).
    pub career_age: u64,
    pub prior_pub_count: u64,
    /// Citations to the author's earlier papers from papers that also precede the focal paper.
    pub citations_received: u64,
    pub unique_keywords: u64,
    pub first_or_last_count: u64,
    /// Percentile rank of the authorship's institution by paper volume before the focal year.
    pub affiliation_score: f64,
}

impl LeadFeatureVector {
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        [
            self.refs_previously_cited as f64,
            self.keyword_overlap as f64,
            self.self_citations as f64,
            self.career_age as f64,
            self.prior_pub_count as f64,
            self.citations_received as f64,
            self.unique_keywords as f64,
            self.first_or_last_count as f64,
            self.affiliation_score,
        ]
    }
}

/// How the affiliation score is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum AffiliationScore {
    /// Share of institutions (with at least one earlier-year paper) whose volume
    /// does not exceed this institution's; 0 for institutions with no earlier papers.
    #[default]
    Percentile,
    /// Always 0.
    Disabled,
}

/// One row of the feature dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub paper_id: String,
    pub author_id: String,
    pub features: LeadFeatureVector,
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("paper id {0} appears more than once")]
    DuplicatePaperId(String),
    #[error("author {author_id} is not on paper {paper_id}")]
    AuthorNotOnPaper { paper_id: String, author_id: String },
    #[error("sweep input out of order at paper {0}")]
    OutOfOrder(String),
    #[error("feature dump line {line}: {message}")]
    Dump { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Record(#[from] crate::corpus::RecordError),
}

impl fmt::Display for LeadFeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{} {} {} {} {} {} {} {} {:.6}]",
            self.refs_previously_cited,
            self.keyword_overlap,
            self.self_citations,
            self.career_age,
            self.prior_pub_count,
            self.citations_received,
            self.unique_keywords,
            self.first_or_last_count,
            self.affiliation_score
        )
    }
}

/// Rank share of `count` among the positive values of `sorted_counts`.
pub(crate) fn percentile(count: u64, sorted_counts: &[u64]) -> f64 {
    if count == 0 || sorted_counts.is_empty() {
        return 0.0;
    }
    let at_most = sorted_counts.partition_point(|c| *c <= count);
    at_most as f64 / sorted_counts.len() as f64
}

pub(crate) fn is_first_or_last(position: usize, n_authors: usize) -> bool {
    position == 0 || position + 1 == n_authors
}
