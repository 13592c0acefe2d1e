//! Corpus ingestion: parsing, region assignment, bilateral filtering and tagging.

pub mod bri;
pub mod record;
pub mod region;
pub mod tables;
pub mod topics;

use std::io::BufRead;

use rayon::prelude::*;

pub use bri::{BriClass, BriClassification};
pub use record::{AuthorshipRecord, Concept, PublicationRecord, RecordError, RecordErrorKind};
pub use region::{BilateralPair, GlobalRegion, RegionMap, UnknownCountry};
pub use tables::{TableError, TableSource};
pub use topics::{TopicMap, TopicTags, AREA_TAGS, FIELD_TAGS};

/// Papers must be published strictly after this year.
pub const MIN_YEAR_EXCLUSIVE: i32 = 1990;
/// Journals need a 2021 impact factor of at least this value.
pub const MIN_IMPACT_FACTOR: f64 = 1.0;

/// What to do with a record whose author country is missing from the region table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum UnknownCountryPolicy {
    /// Drop the record and count it.
    #[default]
    Skip,
    /// Fail the run.
    Abort,
}

/// Returns the pair iff the authors span exactly two distinct regions.
pub fn bilateral_pair(record: &PublicationRecord, map: &RegionMap) -> Result<Option<BilateralPair>, UnknownCountry> {
    let mut first: Option<GlobalRegion> = None;
    let mut second: Option<GlobalRegion> = None;
    let mut extra = false;
    for a in &record.authorships {
        let r = map.assign_region(&a.country)?;
        match (first, second) {
            (None, _) => first = Some(r),
            (Some(f), None) if f != r => second = Some(r),
            (Some(f), Some(s)) if f != r && s != r => extra = true,
            _ => {}
        }
    }
    if extra {
        return Ok(None);
    }
    Ok(match (first, second) {
        (Some(a), Some(b)) => BilateralPair::new(a, b),
        _ => None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    Year,
    ImpactFactor,
    NotBilateral,
    UnknownCountry,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterStats {
    pub seen: usize,
    pub kept: usize,
    pub dropped_year: usize,
    pub dropped_impact_factor: usize,
    pub dropped_not_bilateral: usize,
    pub dropped_unknown_country: usize,
}

impl FilterStats {
    fn record(&mut self, verdict: Result<BilateralPair, DropReason>) {
        self.seen += 1;
        match verdict {
            Ok(_) => self.kept += 1,
            Err(DropReason::Year) => self.dropped_year += 1,
            Err(DropReason::ImpactFactor) => self.dropped_impact_factor += 1,
            Err(DropReason::NotBilateral) => self.dropped_not_bilateral += 1,
            Err(DropReason::UnknownCountry) => self.dropped_unknown_country += 1,
        }
    }
}

/// Per-record admission test: year after 1990, impact factor at least 1, bilateral.
pub fn admit(
    record: &PublicationRecord,
    map: &RegionMap,
    policy: UnknownCountryPolicy,
) -> Result<Result<BilateralPair, DropReason>, UnknownCountry> {
    if record.year <= MIN_YEAR_EXCLUSIVE {
        return Ok(Err(DropReason::Year));
    }
    if record.impact_factor < MIN_IMPACT_FACTOR {
        return Ok(Err(DropReason::ImpactFactor));
    }
    match bilateral_pair(record, map) {
        Ok(Some(pair)) => Ok(Ok(pair)),
        Ok(None) => Ok(Err(DropReason::NotBilateral)),
        Err(e) => match policy {
            UnknownCountryPolicy::Skip => Ok(Err(DropReason::UnknownCountry)),
            UnknownCountryPolicy::Abort => Err(e),
        },
    }
}

/// Admitted records with their pair.
pub type Admitted<'a> = Vec<(&'a PublicationRecord, BilateralPair)>;

/// Keeps admitted records with their pair, in input order.
pub fn filter_corpus<'a, I>(
    records: I,
    map: &RegionMap,
    policy: UnknownCountryPolicy,
) -> Result<(Admitted<'a>, FilterStats), UnknownCountry>
where
    I: IntoIterator<Item = &'a PublicationRecord>,
{
    let mut stats = FilterStats::default();
    let mut kept = Vec::new();
    for record in records {
        let verdict = admit(record, map, policy)?;
        stats.record(verdict);
        if let Ok(pair) = verdict {
            kept.push((record, pair));
        }
    }
    if stats.dropped_unknown_country > 0 {
        log::warn!("skipped {} records with countries missing from the region table", stats.dropped_unknown_country);
    }
    Ok((kept, stats))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BinError {
    #[error("bin edges must be a non-empty strictly ascending list of finite numbers")]
    InvalidEdges,
    #[error("value {value} is below the lowest bin edge {lowest}")]
    BelowRange { value: f64, lowest: f64 },
}

/// Ascending impact-factor bin edges; bin `i` is `[edges[i], edges[i+1])`, the last bin is open.
#[derive(Debug, Clone, PartialEq)]
pub struct IfBinEdges(Vec<f64>);

impl IfBinEdges {
    pub fn new(edges: Vec<f64>) -> Result<Self, BinError> {
        if edges.is_empty() || edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BinError::InvalidEdges);
        }
        Ok(Self(edges))
    }

    pub fn edges(&self) -> &[f64] {
        &self.0
    }

    pub fn n_bins(&self) -> usize {
        self.0.len()
    }

    pub fn bin(&self, value: f64) -> Result<usize, BinError> {
        impact_factor_bin(value, &self.0)
    }
}

impl Default for IfBinEdges {
    fn default() -> Self {
        Self(vec![1.0, 2.0, 4.0, 8.0, 16.0])
    }
}

pub fn impact_factor_bin(value: f64, edges: &[f64]) -> Result<usize, BinError> {
    let lowest = *edges.first().ok_or(BinError::InvalidEdges)?;
    if value.is_nan() || value < lowest {
        return Err(BinError::BelowRange { value, lowest });
    }
    // number of edges <= value, minus one
    Ok(edges.partition_point(|e| *e <= value) - 1)
}

/// Result of reading a corpus file.
#[derive(Debug, Default)]
pub struct CorpusRead {
    pub records: Vec<PublicationRecord>,
    /// Lines that failed to parse or validate (only populated when not strict).
    pub rejected: Vec<RecordError>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// Reads a line-delimited corpus. Lines are parsed in parallel; output keeps input order.
/// Blank lines are ignored. In strict mode the first bad line is an error.
pub fn read_corpus<R: BufRead>(reader: R, strict: bool) -> Result<CorpusRead, CorpusError> {
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    let parsed: Vec<Option<Result<PublicationRecord, RecordError>>> = lines
        .par_iter()
        .enumerate()
        .map(|(i, line)| if line.trim().is_empty() { None } else { Some(PublicationRecord::parse_line(line, i + 1)) })
        .collect();
    let mut out = CorpusRead::default();
    for item in parsed.into_iter().flatten() {
        match item {
            Ok(r) => out.records.push(r),
            Err(e) if strict => return Err(e.into()),
            Err(e) => out.rejected.push(e),
        }
    }
    if !out.rejected.is_empty() {
        log::warn!("rejected {} malformed corpus lines", out.rejected.len());
    }
    Ok(out)
}
