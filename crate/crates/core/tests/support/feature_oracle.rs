use std::collections::{HashMap, HashSet};

use leadshare::corpus::PublicationRecord;
use leadshare::features::LeadFeatureVector;

/// Direct transcription of the feature definitions, quadratic in corpus size.
pub fn oracle(corpus: &[PublicationRecord], focal: &PublicationRecord, author: &str) -> LeadFeatureVector {
    let d = focal.effective_date();
    let prior: Vec<&PublicationRecord> =
        corpus.iter().filter(|p| p.effective_date() < d && p.authorship_of(author).is_some()).collect();
    let prior_ids: HashSet<&str> = prior.iter().map(|p| p.paper_id.as_str()).collect();
    let prior_refs: HashSet<&str> = prior.iter().flat_map(|p| p.references.iter().map(String::as_str)).collect();
    let prior_concepts: HashSet<&str> = prior.iter().flat_map(|p| p.concepts.iter().map(|c| c.name.as_str())).collect();

    let f1 = focal.references.iter().filter(|x| prior_refs.contains(x.as_str())).count();
    let f2 = focal.concepts.iter().filter(|c| prior_concepts.contains(c.name.as_str())).count();
    let f3 = focal.references.iter().filter(|x| prior_ids.contains(x.as_str())).count();
    let f4 = prior.iter().map(|p| p.year).min().map_or(0, |y| focal.year - y);
    let f6: usize = corpus
        .iter()
        .filter(|q| q.effective_date() < d)
        .map(|q| q.references.iter().filter(|x| prior_ids.contains(x.as_str())).count())
        .sum();
    let f8 = prior
        .iter()
        .filter(|p| {
            let pos = p.authorship_of(author).unwrap().position;
            pos == 0 || pos + 1 == p.n_authors()
        })
        .count();

    let mut volume: HashMap<&str, usize> = HashMap::new();
    for p in corpus.iter().filter(|p| p.year < focal.year) {
        let insts: HashSet<&str> = p.authorships.iter().map(|a| a.institution_id.as_str()).collect();
        for i in insts {
            *volume.entry(i).or_default() += 1;
        }
    }
    let inst = &focal.authorship_of(author).unwrap().institution_id;
    let mine = volume.get(inst.as_str()).copied().unwrap_or(0);
    let f9 = if mine == 0 { 0.0 } else { volume.values().filter(|v| **v <= mine).count() as f64 / volume.len() as f64 };

    LeadFeatureVector {
        refs_previously_cited: f1 as u64,
        keyword_overlap: f2 as u64,
        self_citations: f3 as u64,
        career_age: f4 as u64,
        prior_pub_count: prior.len() as u64,
        citations_received: f6 as u64,
        unique_keywords: prior_concepts.len() as u64,
        first_or_last_count: f8 as u64,
        affiliation_score: f9,
    }
}
