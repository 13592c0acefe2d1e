use std::io::{self, BufRead, Write};

use super::{MetricError, PairYearCounts, RegionSeries, SideCounts};
use crate::digest::decimal9;

pub const COUNTS_HEADER: &str =
    "filter\tpair\tyear\tregion_a\tleaders_a\tsupporters_a\tregion_b\tleaders_b\tsupporters_b";
pub const SERIES_HEADER: &str = "pair\tfocal\tmetric\tfilter\tyear\tvalue";

pub fn write_counts<W: Write>(mut w: W, counts: &[PairYearCounts]) -> io::Result<()> {
    writeln!(w, "{COUNTS_HEADER}")?;
    for c in counts {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            c.filter,
            c.pair,
            c.year,
            c.pair.first(),
            c.counts.leaders[0],
            c.counts.supporters[0],
            c.pair.second(),
            c.counts.leaders[1],
            c.counts.supporters[1]
        )?;
    }
    w.flush()
}

fn data_lines<R: BufRead>(r: R, header: &str, n_cols: usize) -> Result<Vec<(usize, Vec<String>)>, MetricError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| MetricError::Parse { line: i + 1, message: e.to_string() })?;
        if i == 0 {
            if line != header {
                return Err(MetricError::Parse { line: 1, message: "missing or unexpected header".into() });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(str::to_string).collect();
        if cols.len() != n_cols {
            return Err(MetricError::Parse {
                line: i + 1,
                message: format!("expected {n_cols} columns, got {}", cols.len()),
            });
        }
        out.push((i + 1, cols));
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(line: usize, what: &str, v: &str) -> Result<T, MetricError> {
    v.parse().map_err(|_| MetricError::Parse { line, message: format!("bad {what}: {v:?}") })
}

pub fn read_counts<R: BufRead>(r: R) -> Result<Vec<PairYearCounts>, MetricError> {
    data_lines(r, COUNTS_HEADER, 9)?
        .into_iter()
        .map(|(line, c)| {
            let pair: crate::corpus::BilateralPair = parse(line, "pair", &c[1])?;
            if pair.first().name() != c[3] || pair.second().name() != c[6] {
                return Err(MetricError::Parse { line, message: "region columns disagree with pair".into() });
            }
            Ok(PairYearCounts {
                filter: parse(line, "filter", &c[0])?,
                pair,
                year: parse(line, "year", &c[2])?,
                counts: SideCounts {
                    leaders: [parse(line, "count", &c[4])?, parse(line, "count", &c[7])?],
                    supporters: [parse(line, "count", &c[5])?, parse(line, "count", &c[8])?],
                },
            })
        })
        .collect()
}

pub fn write_series<W: Write>(mut w: W, series: &[RegionSeries]) -> io::Result<()> {
    writeln!(w, "{SERIES_HEADER}")?;
    for s in series {
        for (year, value) in &s.points {
            writeln!(w, "{}\t{}\t{}\t{}\t{}\t{}", s.pair, s.focal, s.metric, s.filter, year, decimal9(*value))?;
        }
    }
    w.flush()
}

/// Consecutive rows with the same (pair, focal, metric, filter) form one series.
pub fn read_series<R: BufRead>(r: R) -> Result<Vec<RegionSeries>, MetricError> {
    let mut out: Vec<RegionSeries> = Vec::new();
    for (line, c) in data_lines(r, SERIES_HEADER, 6)? {
        let focal = parse(line, "focal region", &c[1])?;
        let metric = parse(line, "metric", &c[2])?;
        let filter = parse(line, "filter", &c[3])?;
        let point = (parse(line, "year", &c[4])?, parse(line, "value", &c[5])?);
        match out.last_mut() {
            Some(s) if s.pair == c[0] && s.focal == focal && s.metric == metric && s.filter == filter => {
                if s.points.last().is_some_and(|(y, _)| *y >= point.0) {
                    return Err(MetricError::Parse { line, message: "years must increase within a series".into() });
                }
                s.points.push(point);
            }
            _ => out.push(RegionSeries { pair: c[0].clone(), focal, metric, filter, points: vec![point] }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BilateralPair, GlobalRegion};
    use crate::metrics::{FilterSpec, Metric};

    #[test]
    fn counts_and_series_round_trip() {
        let pair = BilateralPair::new(GlobalRegion::UnitedStates, GlobalRegion::China).unwrap();
        let counts = vec![PairYearCounts {
            pair,
            year: 2015,
            filter: "field=medicine".parse().unwrap(),
            counts: SideCounts { leaders: [3, 4], supporters: [10, 2] },
        }];
        let mut buf = Vec::new();
        write_counts(&mut buf, &counts).unwrap();
        assert_eq!(read_counts(&buf[..]).unwrap(), counts);

        let series = vec![RegionSeries {
            pair: pair.to_string(),
            focal: GlobalRegion::China,
            metric: Metric::LeadPremium,
            filter: FilterSpec::all(),
            points: vec![(2010, -0.25), (2011, 0.125)],
        }];
        let mut buf = Vec::new();
        write_series(&mut buf, &series).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("China/U.S.\tChina\tlead_premium\tall\t2010\t-0.250000000\n"));
        assert_eq!(read_series(&buf[..]).unwrap(), series);
    }
}
