//! Leader and supporter counts per region pair and year, and the share metrics built on them.
//!
//! Lead Share is a region's fraction of the leaders in a pair's collaborations;
//! Supporter Share is the same over supporters; Lead Premium is their difference.

mod filter;
mod io;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::{BilateralPair, GlobalRegion};

pub use crate::leadmodel::ScoredAuthorship;
pub use filter::{FilterAtom, FilterSpec};
pub use io::{read_counts, read_series, write_counts, write_series, COUNTS_HEADER, SERIES_HEADER};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("paper {0} has rows from more than one region pair")]
    InconsistentPair(String),
    #[error("no leaders on either side")]
    NoLeaders,
    #[error("no supporters on either side")]
    NoSupporters,
    #[error("{region} is not part of {pair}")]
    NotInPair { region: GlobalRegion, pair: String },
    #[error("invalid filter {0:?}")]
    InvalidFilter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// How often one scientist is counted within a pair and year.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CountingMode {
    /// Every (author, paper) row counts.
    #[default]
    AuthorPaper,
    /// Each author counts once per pair and year: as a leader if they led any of those papers.
    UniqueAuthor,
}

impl FromStr for CountingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "author_paper" => Ok(CountingMode::AuthorPaper),
            "unique_author" => Ok(CountingMode::UniqueAuthor),
            other => Err(format!("unknown counting mode {other:?}")),
        }
    }
}

impl CountingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CountingMode::AuthorPaper => "author_paper",
            CountingMode::UniqueAuthor => "unique_author",
        }
    }
}

/// Leader and supporter tallies for the two sides of a pair, indexed by [`BilateralPair::side`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SideCounts {
    pub leaders: [u64; 2],
    pub supporters: [u64; 2],
}

impl SideCounts {
    pub fn add(&mut self, other: &SideCounts) {
        for s in 0..2 {
            self.leaders[s] += other.leaders[s];
            self.supporters[s] += other.supporters[s];
        }
    }

    pub fn swapped(&self) -> SideCounts {
        SideCounts { leaders: [self.leaders[1], self.leaders[0]], supporters: [self.supporters[1], self.supporters[0]] }
    }

    pub fn lead_share(&self, side: usize) -> Result<f64, MetricError> {
        share(self.leaders, side).ok_or(MetricError::NoLeaders)
    }

    pub fn supporter_share(&self, side: usize) -> Result<f64, MetricError> {
        share(self.supporters, side).ok_or(MetricError::NoSupporters)
    }

    /// One exact fraction in lowest terms, converted once.
    pub fn lead_premium(&self, side: usize) -> Result<f64, MetricError> {
        let l = self.leaders[0] as i128 + self.leaders[1] as i128;
        let s = self.supporters[0] as i128 + self.supporters[1] as i128;
        if l == 0 {
            return Err(MetricError::NoLeaders);
        }
        if s == 0 {
            return Err(MetricError::NoSupporters);
        }
        let num = self.leaders[side] as i128 * s - self.supporters[side] as i128 * l;
        let den = l * s;
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()).max(1) as i128;
        Ok((num / g) as f64 / (den / g) as f64)
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn share(counts: [u64; 2], side: usize) -> Option<f64> {
    let total = counts[0] + counts[1];
    (total > 0).then(|| counts[side] as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairYearCounts {
    pub pair: BilateralPair,
    pub year: i32,
    pub filter: FilterSpec,
    pub counts: SideCounts,
}

impl PairYearCounts {
    fn side_of(&self, focal: GlobalRegion) -> Result<usize, MetricError> {
        self.pair.side(focal).ok_or(MetricError::NotInPair { region: focal, pair: self.pair.to_string() })
    }

    pub fn leaders(&self, region: GlobalRegion) -> u64 {
        self.pair.side(region).map_or(0, |s| self.counts.leaders[s])
    }

    pub fn supporters(&self, region: GlobalRegion) -> u64 {
        self.pair.side(region).map_or(0, |s| self.counts.supporters[s])
    }
}

pub fn lead_share(c: &PairYearCounts, focal: GlobalRegion) -> Result<f64, MetricError> {
    c.counts.lead_share(c.side_of(focal)?)
}

pub fn supporter_share(c: &PairYearCounts, focal: GlobalRegion) -> Result<f64, MetricError> {
    c.counts.supporter_share(c.side_of(focal)?)
}

pub fn lead_premium(c: &PairYearCounts, focal: GlobalRegion) -> Result<f64, MetricError> {
    c.counts.lead_premium(c.side_of(focal)?)
}

type Key = (usize, BilateralPair, i32);

#[derive(Default)]
struct Tally {
    counts: BTreeMap<Key, SideCounts>,
    // (author, side) -> led any paper, for unique-author counting
    authors: BTreeMap<Key, HashMap<(String, usize), bool>>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (k, c) in other.counts {
            self.counts.entry(k).or_default().add(&c);
        }
        for (k, m) in other.authors {
            let mine = self.authors.entry(k).or_default();
            for (a, led) in m {
                *mine.entry(a).or_insert(false) |= led;
            }
        }
        self
    }
}

/// Groups rows by paper (rows of one paper must be contiguous) and checks each group's pair.
pub fn group_by_paper(rows: &[ScoredAuthorship]) -> Result<Vec<&[ScoredAuthorship]>, MetricError> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=rows.len() {
        if i == rows.len() || rows[i].paper_id != rows[start].paper_id {
            let g = &rows[start..i];
            if g.iter().any(|r| r.pair != g[0].pair) {
                return Err(MetricError::InconsistentPair(g[0].paper_id.clone()));
            }
            groups.push(g);
            start = i;
        }
    }
    Ok(groups)
}

/// Counts leaders and supporters per (filter, pair, year). Rows of one paper
/// must be contiguous. Output is ordered by filter (in the given order), pair, year.
pub fn aggregate(
    rows: &[ScoredAuthorship],
    filters: &[FilterSpec],
    mode: CountingMode,
) -> Result<Vec<PairYearCounts>, MetricError> {
    let groups = group_by_paper(rows)?;
    let tally = groups
        .par_iter()
        .fold(Tally::default, |mut t, paper| {
            for (fi, f) in filters.iter().enumerate() {
                let kept = f.apply(paper);
                let Some(first) = kept.first() else { continue };
                let key = (fi, first.pair, first.year);
                for r in kept {
                    let Some(side) = r.pair.side(r.region) else { continue };
                    match mode {
                        CountingMode::AuthorPaper => {
                            let c = t.counts.entry(key).or_default();
                            if r.is_leader {
                                c.leaders[side] += 1;
                            } else {
                                c.supporters[side] += 1;
                            }
                        }
                        CountingMode::UniqueAuthor => {
                            *t.authors.entry(key).or_default().entry((r.author_id.clone(), side)).or_insert(false) |=
                                r.is_leader;
                        }
                    }
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);

    let mut counts = tally.counts;
    for (k, authors) in tally.authors {
        let c = counts.entry(k).or_default();
        for ((_, side), led) in authors {
            if led {
                c.leaders[side] += 1;
            } else {
                c.supporters[side] += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|((fi, pair, year), counts)| PairYearCounts { pair, year, filter: filters[fi].clone(), counts })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    LeadShare,
    SupporterShare,
    LeadPremium,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::LeadShare, Metric::SupporterShare, Metric::LeadPremium];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::LeadShare => "lead_share",
            Metric::SupporterShare => "supporter_share",
            Metric::LeadPremium => "lead_premium",
        }
    }

    /// Value at which the focal region is level with its partner.
    pub fn parity(self) -> f64 {
        match self {
            Metric::LeadShare | Metric::SupporterShare => 0.5,
            Metric::LeadPremium => 0.0,
        }
    }

    pub fn eval(self, counts: &SideCounts, side: usize) -> Result<f64, MetricError> {
        match self {
            Metric::LeadShare => counts.lead_share(side),
            Metric::SupporterShare => counts.supporter_share(side),
            Metric::LeadPremium => counts.lead_premium(side),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL.into_iter().find(|m| m.as_str() == s.trim()).ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

/// Which pairs a series draws on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Partner {
    Region(GlobalRegion),
    /// Every pair containing the focal region, pooled.
    Any,
}

impl Partner {
    pub fn label(self, focal: GlobalRegion) -> String {
        match self {
            Partner::Region(r) => match BilateralPair::new(focal, r) {
                Some(p) => p.to_string(),
                None => format!("{focal}/{r}"),
            },
            Partner::Any => format!("{focal}/*"),
        }
    }
}

impl FromStr for Partner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "*" | "any" => Ok(Partner::Any),
            other => other.parse().map(Partner::Region).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSeries {
    /// Pair label, e.g. `China/U.S.`, or `China/*` for a pooled series.
    pub pair: String,
    pub focal: GlobalRegion,
    pub metric: Metric,
    pub filter: FilterSpec,
    pub points: Vec<(i32, f64)>,
}

/// Counts per year for the focal region against `partner`, oriented with focal on side 0.
pub fn focal_counts(
    counts: &[PairYearCounts],
    focal: GlobalRegion,
    partner: Partner,
    filter: &FilterSpec,
) -> BTreeMap<i32, SideCounts> {
    let mut by_year: BTreeMap<i32, SideCounts> = BTreeMap::new();
    for c in counts.iter().filter(|c| &c.filter == filter) {
        let Some(side) = c.pair.side(focal) else { continue };
        if let Partner::Region(r) = partner {
            if c.pair.other(focal) != Some(r) {
                continue;
            }
        }
        let oriented = if side == 0 { c.counts } else { c.counts.swapped() };
        by_year.entry(c.year).or_default().add(&oriented);
    }
    by_year
}

/// One point per year where the metric is defined, ascending by year.
pub fn build_series(
    counts: &[PairYearCounts],
    focal: GlobalRegion,
    partner: Partner,
    metric: Metric,
    filter: &FilterSpec,
) -> RegionSeries {
    let points = focal_counts(counts, focal, partner, filter)
        .into_iter()
        .filter_map(|(y, c)| metric.eval(&c, 0).ok().map(|v| (y, v)))
        .collect();
    RegionSeries { pair: partner.label(focal), focal, metric, filter: filter.clone(), points }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::BriClass;
    use std::collections::BTreeSet;

    const CN: GlobalRegion = GlobalRegion::China;
    const US: GlobalRegion = GlobalRegion::UnitedStates;

    fn pair() -> BilateralPair {
        BilateralPair::new(CN, US).unwrap()
    }

    fn counts(l: [u64; 2], s: [u64; 2]) -> PairYearCounts {
        PairYearCounts {
            pair: pair(),
            year: 2020,
            filter: FilterSpec::all(),
            counts: SideCounts { leaders: l, supporters: s },
        }
    }

    pub(crate) fn row(paper: &str, author: &str, region: GlobalRegion, leader: bool) -> ScoredAuthorship {
        ScoredAuthorship {
            paper_id: paper.into(),
            author_id: author.into(),
            position: 0,
            country: region.name().into(),
            region,
            year: 2020,
            pair: pair(),
            lead_prob: if leader { 0.9 } else { 0.1 },
            is_leader: leader,
            areas: BTreeSet::new(),
            fields: BTreeSet::new(),
            if_bin: 0,
            bri_class: BriClass::NonSignatory,
        }
    }

    #[test]
    fn share_arithmetic() {
        // China is side 0 of China/U.S.
        assert_eq!(lead_share(&counts([3, 1], [0, 1]), CN), Ok(0.75));
        assert_eq!(lead_share(&counts([0, 5], [0, 1]), CN), Ok(0.0));
        assert_eq!(lead_share(&counts([7, 7], [0, 1]), CN), Ok(0.5));
        assert_eq!(supporter_share(&counts([1, 1], [1, 3]), CN), Ok(0.25));
        assert_eq!(supporter_share(&counts([1, 1], [0, 1]), CN), Ok(0.0));
        let p = lead_premium(&counts([2, 2], [8, 2]), CN).unwrap();
        assert!((p + 0.3).abs() < 1e-15);
        assert_eq!(lead_share(&counts([0, 0], [1, 1]), CN), Err(MetricError::NoLeaders));
        assert!(matches!(
            lead_share(&counts([1, 0], [1, 1]), GlobalRegion::Africa),
            Err(MetricError::NotInPair { .. })
        ));
    }

    #[test]
    fn one_paper_counts() {
        let rows = [row("p", "a", CN, true), row("p", "b", US, false)];
        let out = aggregate(&rows, &[FilterSpec::all()], CountingMode::AuthorPaper).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].leaders(CN), 1);
        assert_eq!(out[0].leaders(US), 0);
        assert_eq!(out[0].supporters(CN), 0);
        assert_eq!(out[0].supporters(US), 1);
        assert!(aggregate(&[], &[FilterSpec::all()], CountingMode::AuthorPaper).unwrap().is_empty());
    }

    #[test]
    fn inconsistent_pair_is_rejected() {
        let mut b = row("p", "b", US, false);
        b.pair = BilateralPair::new(CN, GlobalRegion::UnitedKingdom).unwrap();
        let rows = [row("p", "a", CN, true), b];
        assert_eq!(
            aggregate(&rows, &[FilterSpec::all()], CountingMode::AuthorPaper),
            Err(MetricError::InconsistentPair("p".into()))
        );
    }

    #[test]
    fn unique_author_counting() {
        let rows =
            [row("p1", "a", CN, true), row("p1", "b", US, false), row("p2", "a", CN, false), row("p2", "b", US, false)];
        let per_row = aggregate(&rows, &[FilterSpec::all()], CountingMode::AuthorPaper).unwrap();
        assert_eq!(per_row[0].counts, SideCounts { leaders: [1, 0], supporters: [1, 2] });
        let unique = aggregate(&rows, &[FilterSpec::all()], CountingMode::UniqueAuthor).unwrap();
        assert_eq!(unique[0].counts, SideCounts { leaders: [1, 0], supporters: [0, 1] });
    }

    #[test]
    fn series_skips_undefined_years() {
        let mk = |year, l: [u64; 2]| PairYearCounts { year, ..counts(l, [1, 1]) };
        let cs = [mk(2012, [4, 6]), mk(2010, [3, 7]), mk(2011, [0, 0])];
        let s = build_series(&cs, CN, Partner::Region(US), Metric::LeadShare, &FilterSpec::all());
        assert_eq!(s.points, vec![(2010, 0.3), (2012, 0.4)]);
        assert_eq!(s.pair, "China/U.S.");
        let us = build_series(&cs, US, Partner::Any, Metric::LeadShare, &FilterSpec::all());
        assert_eq!(us.points, vec![(2010, 0.7), (2012, 0.6)]);
        assert!(build_series(&[], CN, Partner::Any, Metric::LeadShare, &FilterSpec::all()).points.is_empty());
    }
}
