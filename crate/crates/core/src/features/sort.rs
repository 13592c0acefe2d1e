use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use super::FeatureError;
use crate::corpus::PublicationRecord;

pub fn sort_in_memory(records: &mut [PublicationRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

type Key = (NaiveDate, String);

fn key_of(r: &PublicationRecord) -> Key {
    (r.effective_date(), r.paper_id.clone())
}

struct Run {
    lines: Lines<BufReader<File>>,
    line_no: usize,
}

impl Run {
    fn next(&mut self) -> Result<Option<PublicationRecord>, FeatureError> {
        match self.lines.next() {
            None => Ok(None),
            Some(line) => {
                self.line_no += 1;
                Ok(Some(PublicationRecord::parse_line(&line?, self.line_no)?))
            }
        }
    }
}

/// Sorts a JSONL corpus by (date, paper id) using runs of at most `chunk_size`
/// records spilled under `work_dir`. Blank lines are skipped. Returns the
/// number of records written.
pub fn external_sort<R: BufRead, W: Write>(
    input: R,
    output: W,
    chunk_size: usize,
    work_dir: &Path,
) -> Result<usize, FeatureError> {
    let chunk_size = chunk_size.max(1);
    fs::create_dir_all(work_dir)?;
    let mut paths: Vec<PathBuf> = Vec::new();
    let mut chunk: Vec<PublicationRecord> = Vec::with_capacity(chunk_size.min(1 << 16));

    let spill = |chunk: &mut Vec<PublicationRecord>, paths: &mut Vec<PathBuf>| -> Result<(), FeatureError> {
        sort_in_memory(chunk);
        let path = work_dir.join(format!("run-{:05}.jsonl", paths.len()));
        let mut w = BufWriter::new(File::create(&path)?);
        for r in chunk.drain(..) {
            writeln!(w, "{}", r.to_json_line())?;
        }
        w.flush()?;
        paths.push(path);
        Ok(())
    };

    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        chunk.push(PublicationRecord::parse_line(&line, i + 1)?);
        if chunk.len() >= chunk_size {
            spill(&mut chunk, &mut paths)?;
        }
    }

    let mut out = BufWriter::new(output);
    let mut written = 0;
    if paths.is_empty() {
        sort_in_memory(&mut chunk);
        for r in &chunk {
            writeln!(out, "{}", r.to_json_line())?;
        }
        out.flush()?;
        return Ok(chunk.len());
    }
    if !chunk.is_empty() {
        spill(&mut chunk, &mut paths)?;
    }

    let mut runs = Vec::with_capacity(paths.len());
    for p in &paths {
        runs.push(Run { lines: BufReader::new(File::open(p)?).lines(), line_no: 0 });
    }
    let mut heads: Vec<Option<PublicationRecord>> = Vec::with_capacity(runs.len());
    let mut heap = BinaryHeap::new();
    for (i, run) in runs.iter_mut().enumerate() {
        let head = run.next()?;
        if let Some(r) = &head {
            heap.push(Reverse((key_of(r), i)));
        }
        heads.push(head);
    }
    while let Some(Reverse((_, i))) = heap.pop() {
        let r = heads[i].take().expect("heap entry has a head");
        writeln!(out, "{}", r.to_json_line())?;
        written += 1;
        heads[i] = runs[i].next()?;
        if let Some(next) = &heads[i] {
            heap.push(Reverse((key_of(next), i)));
        }
    }
    out.flush()?;
    for p in &paths {
        fs::remove_file(p)?;
    }
    Ok(written)
}
