use std::io::{BufRead, Write};

use super::{FeatureError, FeatureRow, LeadFeatureVector, FEATURE_NAMES};
use crate::digest::decimal9;

pub const FEATURE_DUMP_HEADER: &str = "paper_id\tauthor_id\tf1_refs_previously_cited\tf2_keyword_overlap\tf3_self_citations\tf4_career_age\tf5_prior_pub_count\tf6_citations_received\tf7_unique_keywords\tf8_first_or_last_count\tf9_affiliation_score";

pub fn write_feature_dump<W: Write>(mut w: W, rows: &[FeatureRow]) -> std::io::Result<()> {
    writeln!(w, "{FEATURE_DUMP_HEADER}")?;
    for r in rows {
        let f = &r.features;
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.paper_id,
            r.author_id,
            f.refs_previously_cited,
            f.keyword_overlap,
            f.self_citations,
            f.career_age,
            f.prior_pub_count,
            f.citations_received,
            f.unique_keywords,
            f.first_or_last_count,
            decimal9(f.affiliation_score)
        )?;
    }
    w.flush()
}

pub fn read_feature_dump<R: BufRead>(r: R) -> Result<Vec<FeatureRow>, FeatureError> {
    let mut lines = r.lines();
    let bad = |line: usize, message: String| FeatureError::Dump { line, message };
    let header = lines.next().transpose()?;
    if header.as_deref() != Some(FEATURE_DUMP_HEADER) {
        return Err(bad(1, "missing or unexpected header".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 + FEATURE_NAMES.len() {
            return Err(bad(line_no, format!("expected {} columns, got {}", 2 + FEATURE_NAMES.len(), cols.len())));
        }
        let mut ints = [0u64; 8];
        for (k, slot) in ints.iter_mut().enumerate() {
            *slot = cols[2 + k]
                .parse()
                .map_err(|_| bad(line_no, format!("{}: not a count: {}", FEATURE_NAMES[k], cols[2 + k])))?;
        }
        let affiliation_score: f64 =
            cols[10].parse().map_err(|_| bad(line_no, format!("{}: not a number: {}", FEATURE_NAMES[8], cols[10])))?;
        if !(0.0..=1.0).contains(&affiliation_score) {
            return Err(bad(line_no, format!("affiliation score {affiliation_score} outside [0, 1]")));
        }
        rows.push(FeatureRow {
            paper_id: cols[0].to_string(),
            author_id: cols[1].to_string(),
            features: LeadFeatureVector {
                refs_previously_cited: ints[0],
                keyword_overlap: ints[1],
                self_citations: ints[2],
                career_age: ints[3],
                prior_pub_count: ints[4],
                citations_received: ints[5],
                unique_keywords: ints[6],
                first_or_last_count: ints[7],
                affiliation_score,
            },
        });
    }
    Ok(rows)
}
