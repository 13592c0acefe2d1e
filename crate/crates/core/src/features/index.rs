use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::NaiveDate;

use super::{is_first_or_last, percentile, AffiliationScore, FeatureError, LeadFeatureVector};
use crate::corpus::PublicationRecord;

#[derive(Debug, Default)]
struct Interner {
    ids: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.ids.len() as u32;
        self.ids.insert(s.to_string(), id);
        id
    }

    fn get(&self, s: &str) -> Option<u32> {
        self.ids.get(s).copied()
    }
}

#[derive(Debug)]
struct PaperInfo {
    date: NaiveDate,
    authors: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct PriorPaper {
    pub paper: u32,
    pub year: i32,
    pub date: NaiveDate,
    pub position: usize,
    pub n_authors: usize,
}

#[derive(Debug, Default)]
struct AuthorProfile {
    /// Sorted by (date, paper id).
    papers: Vec<PriorPaper>,
    /// Running count of first/last-author papers, aligned with `papers`.
    first_or_last_prefix: Vec<u64>,
    /// Earliest date the author cited each reference.
    ref_first: HashMap<u32, NaiveDate>,
    /// Earliest date the author used each concept.
    concept_first: HashMap<u32, NaiveDate>,
    concept_first_sorted: Vec<NaiveDate>,
    /// For each citation of one of the author's papers: the later of citing and cited dates.
    citation_events: Vec<NaiveDate>,
}

impl AuthorProfile {
    fn n_before(&self, date: NaiveDate) -> usize {
        self.papers.partition_point(|p| p.date < date)
    }
}

/// Frozen, query-anywhere view of every author's publication history.
#[derive(Debug)]
pub struct AuthorProfileIndex {
    paper_ids: Interner,
    concepts: Interner,
    authors: Interner,
    institutions: Interner,
    papers: HashMap<u32, PaperInfo>,
    profiles: Vec<AuthorProfile>,
    /// Per institution: sorted years of the distinct papers listing it.
    institution_years: Vec<Vec<i32>>,
    /// Sorted positive institution volumes before each corpus year.
    volume_cache: BTreeMap<i32, Vec<u64>>,
    affiliation: AffiliationScore,
}

pub fn build_profiles<'a, I>(corpus: I) -> Result<AuthorProfileIndex, FeatureError>
where
    I: IntoIterator<Item = &'a PublicationRecord>,
{
    AuthorProfileIndex::build(corpus, AffiliationScore::default())
}

impl AuthorProfileIndex {
    pub fn build<'a, I>(corpus: I, affiliation: AffiliationScore) -> Result<Self, FeatureError>
    where
        I: IntoIterator<Item = &'a PublicationRecord>,
    {
        let mut sorted: Vec<&PublicationRecord> = corpus.into_iter().collect();
        sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));

        let mut idx = AuthorProfileIndex {
            paper_ids: Interner::default(),
            concepts: Interner::default(),
            authors: Interner::default(),
            institutions: Interner::default(),
            papers: HashMap::new(),
            profiles: Vec::new(),
            institution_years: Vec::new(),
            volume_cache: BTreeMap::new(),
            affiliation,
        };

        for r in &sorted {
            let pid = idx.paper_ids.intern(&r.paper_id);
            if idx.papers.contains_key(&pid) {
                return Err(FeatureError::DuplicatePaperId(r.paper_id.clone()));
            }
            let date = r.effective_date();
            let n = r.n_authors();
            let refs: Vec<u32> = r.references.iter().map(|x| idx.paper_ids.intern(x)).collect();
            let concepts: HashSet<u32> = r.concepts.iter().map(|c| idx.concepts.intern(&c.name)).collect();
            let mut authors = Vec::with_capacity(n);
            let mut insts = HashSet::new();
            for a in &r.authorships {
                let aid = idx.authors.intern(&a.author_id) as usize;
                if aid == idx.profiles.len() {
                    idx.profiles.push(AuthorProfile::default());
                }
                authors.push(aid as u32);
                let p = &mut idx.profiles[aid];
                p.papers.push(PriorPaper { paper: pid, year: r.year, date, position: a.position, n_authors: n });
                for &x in &refs {
                    p.ref_first.entry(x).or_insert(date);
                }
                for &c in &concepts {
                    p.concept_first.entry(c).or_insert(date);
                }
                let inst = idx.institutions.intern(&a.institution_id) as usize;
                if inst == idx.institution_years.len() {
                    idx.institution_years.push(Vec::new());
                }
                if insts.insert(inst) {
                    idx.institution_years[inst].push(r.year);
                }
            }
            idx.papers.insert(pid, PaperInfo { date, authors });
        }

        // citation events need every paper's date, so they come after the first pass
        for r in &sorted {
            let citing = r.effective_date();
            for x in &r.references {
                let Some(qid) = idx.paper_ids.get(x) else { continue };
                let Some(cited) = idx.papers.get(&qid) else { continue };
                let event = citing.max(cited.date);
                for &a in &cited.authors {
                    idx.profiles[a as usize].citation_events.push(event);
                }
            }
        }

        for p in &mut idx.profiles {
            let mut running = 0;
            p.first_or_last_prefix = p
                .papers
                .iter()
                .map(|x| {
                    running += u64::from(is_first_or_last(x.position, x.n_authors));
                    running
                })
                .collect();
            p.concept_first_sorted = p.concept_first.values().copied().collect();
            p.concept_first_sorted.sort();
            p.citation_events.sort();
        }
        let years: Vec<i32> = sorted.iter().map(|r| r.year).collect();
        for y in years {
            if !idx.volume_cache.contains_key(&y) {
                let v = idx.volumes_before(y);
                idx.volume_cache.insert(y, v);
            }
        }
        Ok(idx)
    }

    fn volumes_before(&self, year: i32) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .institution_years
            .iter()
            .map(|ys| ys.partition_point(|y| *y < year) as u64)
            .filter(|c| *c > 0)
            .collect();
        v.sort_unstable();
        v
    }

    pub fn n_authors(&self) -> usize {
        self.profiles.len()
    }

    pub fn n_papers(&self) -> usize {
        self.papers.len()
    }

    /// Year of the author's first paper in the corpus.
    pub fn first_pub_year(&self, author_id: &str) -> Option<i32> {
        let a = self.authors.get(author_id)?;
        self.profiles[a as usize].papers.first().map(|p| p.year)
    }

    /// The author's papers dated strictly before `date`.
    pub fn prior_papers(&self, author_id: &str, date: NaiveDate) -> &[PriorPaper] {
        match self.authors.get(author_id) {
            Some(a) => {
                let p = &self.profiles[a as usize];
                &p.papers[..p.n_before(date)]
            }
            None => &[],
        }
    }

    /// Percentile of an institution by corpus papers published before `year`.
    pub fn institution_rank(&self, institution_id: &str, year: i32) -> f64 {
        if self.affiliation == AffiliationScore::Disabled {
            return 0.0;
        }
        let Some(inst) = self.institutions.get(institution_id) else {
            return 0.0;
        };
        let count = self.institution_years[inst as usize].partition_point(|y| *y < year) as u64;
        match self.volume_cache.get(&year) {
            Some(v) => percentile(count, v),
            None => percentile(count, &self.volumes_before(year)),
        }
    }
}

pub fn extract_features(
    record: &PublicationRecord,
    author_id: &str,
    index: &AuthorProfileIndex,
) -> Result<LeadFeatureVector, FeatureError> {
    let authorship = record.authorship_of(author_id).ok_or_else(|| FeatureError::AuthorNotOnPaper {
        paper_id: record.paper_id.clone(),
        author_id: author_id.to_string(),
    })?;
    let focal = record.effective_date();
    let affiliation_score = index.institution_rank(&authorship.institution_id, record.year);
    let Some(aid) = index.authors.get(author_id) else {
        return Ok(LeadFeatureVector { affiliation_score, ..Default::default() });
    };
    let profile = &index.profiles[aid as usize];
    let n_prior = profile.n_before(focal);
    if n_prior == 0 {
        return Ok(LeadFeatureVector { affiliation_score, ..Default::default() });
    }

    let mut refs_previously_cited = 0;
    let mut self_citations = 0;
    for r in &record.references {
        let Some(x) = index.paper_ids.get(r) else { continue };
        if profile.ref_first.get(&x).is_some_and(|d| *d < focal) {
            refs_previously_cited += 1;
        }
        if let Some(info) = index.papers.get(&x) {
            if info.date < focal && info.authors.contains(&aid) {
                self_citations += 1;
            }
        }
    }
    let focal_concepts: HashSet<&str> = record.concepts.iter().map(|c| c.name.as_str()).collect();
    let keyword_overlap = focal_concepts
        .iter()
        .filter_map(|c| index.concepts.get(c))
        .filter(|c| profile.concept_first.get(c).is_some_and(|d| *d < focal))
        .count() as u64;

    Ok(LeadFeatureVector {
        refs_previously_cited,
        keyword_overlap,
        self_citations,
        career_age: (record.year - profile.papers[0].year).max(0) as u64,
        prior_pub_count: n_prior as u64,
        citations_received: profile.citation_events.partition_point(|d| *d < focal) as u64,
        unique_keywords: profile.concept_first_sorted.partition_point(|d| *d < focal) as u64,
        first_or_last_count: profile.first_or_last_prefix[n_prior - 1],
        affiliation_score,
    })
}
