use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::NaiveDate;

use super::{is_first_or_last, percentile, AffiliationScore, FeatureError, FeatureRow, LeadFeatureVector};
use crate::corpus::PublicationRecord;

#[derive(Debug, Default)]
struct Ids(HashMap<String, u32>);

impl Ids {
    fn intern(&mut self, s: &str) -> u32 {
        let next = self.0.len() as u32;
        *self.0.entry(s.to_string()).or_insert(next)
    }
}

#[derive(Debug, Default)]
struct State {
    first_year: Option<i32>,
    n_prior: u64,
    first_or_last: u64,
    refs: HashSet<u32>,
    concepts: HashSet<u32>,
    citations: u64,
}

/// Single-pass feature extraction over a corpus sorted by (date, paper id).
///
/// Papers are buffered until the date changes; the whole same-date group is
/// scored against the state accumulated so far, then folded into it.
#[derive(Debug, Default)]
pub struct ChronologicalSweep {
    affiliation: AffiliationScore,
    paper_ids: Ids,
    authors: Ids,
    concepts: Ids,
    institutions: Ids,
    state: Vec<State>,
    /// Committed paper -> its authors.
    committed: HashMap<u32, Vec<u32>>,
    /// Citations from committed papers to papers not yet seen.
    pending_citations: HashMap<u32, u64>,
    institution_volume: Vec<u64>,
    institutions_by_year: BTreeMap<i32, Vec<u32>>,
    sorted_volumes: Vec<u64>,
    group: Vec<PublicationRecord>,
    last_key: Option<(NaiveDate, String)>,
}

impl ChronologicalSweep {
    pub fn new(affiliation: AffiliationScore) -> Self {
        Self { affiliation, ..Default::default() }
    }

    /// Feeds the next record; returns feature rows for any group completed by it.
    pub fn push(&mut self, record: PublicationRecord) -> Result<Vec<FeatureRow>, FeatureError> {
        let key = (record.effective_date(), record.paper_id.clone());
        if let Some(last) = &self.last_key {
            if key < *last {
                return Err(FeatureError::OutOfOrder(record.paper_id));
            }
            if key == *last {
                return Err(FeatureError::DuplicatePaperId(record.paper_id));
            }
        }
        if let Some(&pid) = self.paper_ids.0.get(&record.paper_id) {
            if self.committed.contains_key(&pid) {
                return Err(FeatureError::DuplicatePaperId(record.paper_id));
            }
        }
        let flushed = match self.group.first() {
            Some(g) if g.effective_date() != key.0 => self.flush(),
            _ => Vec::new(),
        };
        self.last_key = Some(key);
        self.group.push(record);
        Ok(flushed)
    }

    pub fn finish(mut self) -> Vec<FeatureRow> {
        self.flush()
    }

    fn flush(&mut self) -> Vec<FeatureRow> {
        let group = std::mem::take(&mut self.group);
        let Some(year) = group.first().map(|r| r.year) else {
            return Vec::new();
        };
        self.roll_volumes(year);

        let mut rows = Vec::new();
        for r in &group {
            let refs: Vec<u32> = r.references.iter().map(|x| self.paper_ids.intern(x)).collect();
            let focal_concepts: HashSet<u32> = r.concepts.iter().map(|c| self.concepts.intern(&c.name)).collect();
            for a in &r.authorships {
                let aid = self.author(&a.author_id);
                let inst = self.institutions.intern(&a.institution_id) as usize;
                let vol = self.institution_volume.get(inst).copied().unwrap_or(0);
                let affiliation_score = match self.affiliation {
                    AffiliationScore::Percentile => percentile(vol, &self.sorted_volumes),
                    AffiliationScore::Disabled => 0.0,
                };
                let s = &self.state[aid as usize];
                let self_citations =
                    refs.iter().filter(|x| self.committed.get(x).is_some_and(|au| au.contains(&aid))).count() as u64;
                let features = LeadFeatureVector {
                    refs_previously_cited: refs.iter().filter(|x| s.refs.contains(x)).count() as u64,
                    keyword_overlap: focal_concepts.iter().filter(|c| s.concepts.contains(c)).count() as u64,
                    self_citations,
                    career_age: s.first_year.map_or(0, |y| (r.year - y).max(0) as u64),
                    prior_pub_count: s.n_prior,
                    citations_received: s.citations,
                    unique_keywords: s.concepts.len() as u64,
                    first_or_last_count: s.first_or_last,
                    affiliation_score,
                };
                rows.push(FeatureRow { paper_id: r.paper_id.clone(), author_id: a.author_id.clone(), features });
            }
        }
        self.commit(&group);
        rows
    }

    fn author(&mut self, id: &str) -> u32 {
        let aid = self.authors.intern(id);
        if aid as usize == self.state.len() {
            self.state.push(State::default());
        }
        aid
    }

    /// Makes `institution_volume` count papers from years strictly before `year`.
    fn roll_volumes(&mut self, year: i32) {
        let ready: Vec<i32> = self.institutions_by_year.range(..year).map(|(y, _)| *y).collect();
        if ready.is_empty() {
            return;
        }
        for y in ready {
            for inst in self.institutions_by_year.remove(&y).unwrap_or_default() {
                let inst = inst as usize;
                if inst >= self.institution_volume.len() {
                    self.institution_volume.resize(inst + 1, 0);
                }
                self.institution_volume[inst] += 1;
            }
        }
        self.sorted_volumes = self.institution_volume.iter().copied().filter(|v| *v > 0).collect();
        self.sorted_volumes.sort_unstable();
    }

    fn commit(&mut self, group: &[PublicationRecord]) {
        let mut ids = Vec::with_capacity(group.len());
        for r in group {
            let pid = self.paper_ids.intern(&r.paper_id);
            let authors: Vec<u32> = r.authorships.iter().map(|a| self.author(&a.author_id)).collect();
            if let Some(n) = self.pending_citations.remove(&pid) {
                for &a in &authors {
                    self.state[a as usize].citations += n;
                }
            }
            self.committed.insert(pid, authors);
            ids.push(pid);
        }
        for (r, pid) in group.iter().zip(ids) {
            let refs: Vec<u32> = r.references.iter().map(|x| self.paper_ids.intern(x)).collect();
            for &x in &refs {
                match self.committed.get(&x) {
                    Some(cited) => {
                        for &a in cited {
                            self.state[a as usize].citations += 1;
                        }
                    }
                    None => *self.pending_citations.entry(x).or_insert(0) += 1,
                }
            }
            let concepts: Vec<u32> = r.concepts.iter().map(|c| self.concepts.intern(&c.name)).collect();
            let n = r.n_authors();
            let mut insts = HashSet::new();
            for (a, &aid) in r.authorships.iter().zip(&self.committed[&pid]) {
                let s = &mut self.state[aid as usize];
                s.first_year = Some(s.first_year.map_or(r.year, |y| y.min(r.year)));
                s.n_prior += 1;
                s.first_or_last += u64::from(is_first_or_last(a.position, n));
                s.refs.extend(refs.iter().copied());
                s.concepts.extend(concepts.iter().copied());
                insts.insert(self.institutions.intern(&a.institution_id));
            }
            let mut insts: Vec<u32> = insts.into_iter().collect();
            insts.sort_unstable();
            self.institutions_by_year.entry(r.year).or_default().extend(insts);
        }
    }
}

/// Sorts in memory and sweeps; rows come out in (date, paper id, position) order.
pub fn sweep_features(
    corpus: &[PublicationRecord],
    affiliation: AffiliationScore,
) -> Result<Vec<FeatureRow>, FeatureError> {
    let mut sorted: Vec<&PublicationRecord> = corpus.iter().collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut sweep = ChronologicalSweep::new(affiliation);
    let mut rows = Vec::new();
    for r in sorted {
        rows.extend(sweep.push(r.clone())?);
    }
    rows.extend(sweep.finish());
    Ok(rows)
}
