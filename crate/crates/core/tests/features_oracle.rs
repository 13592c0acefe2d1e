use std::collections::HashMap;

use chrono::{Datelike, NaiveDate};
use leadshare::corpus::{AuthorshipRecord, Concept, PublicationRecord};
use leadshare::features::{sweep_features, AffiliationScore, AuthorProfileIndex, FeatureRow, LeadFeatureVector};
use proptest::prelude::*;

#[path = "support/feature_oracle.rs"]
mod feature_oracle;
use feature_oracle::oracle;

#[derive(Debug, Clone)]
struct Spec {
    year: i32,
    day: Option<u32>,
    authors: Vec<(usize, usize)>,
    refs: Vec<usize>,
    concepts: Vec<usize>,
}

fn paper_spec() -> impl Strategy<Value = Spec> {
    (
        2000..2005i32,
        prop::option::of(0..3u32),
        prop::collection::btree_map(0..8usize, 0..4usize, 1..4),
        prop::collection::btree_set(0..48usize, 0..5),
        prop::collection::btree_set(0..6usize, 0..3),
    )
        .prop_map(|(year, day, authors, refs, concepts)| Spec {
            year,
            day,
            authors: authors.into_iter().collect(),
            refs: refs.into_iter().collect(),
            concepts: concepts.into_iter().collect(),
        })
}

fn build(specs: &[Spec], prefix: &str) -> Vec<PublicationRecord> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let id = format!("{prefix}{i:02}");
            PublicationRecord {
                paper_id: id.clone(),
                year: s.year,
                // three possible dates per year so same-date ties are common
                pub_date: s.day.map(|d| NaiveDate::from_ymd_opt(s.year, 3 + 3 * d, 1).unwrap()),
                journal_id: "J".into(),
                impact_factor: 2.0,
                concepts: s.concepts.iter().map(|c| Concept { name: format!("C{c}"), level: 1 }).collect(),
                references: s.refs.iter().map(|r| format!("{prefix}{r:02}")).filter(|r| *r != id).collect(),
                authorships: s
                    .authors
                    .iter()
                    .enumerate()
                    .map(|(pos, (a, inst))| AuthorshipRecord {
                        author_id: format!("A{a}"),
                        position: pos,
                        country: "China".into(),
                        institution_id: format!("I{inst}"),
                    })
                    .collect(),
            }
        })
        .collect()
}

fn by_cell(rows: Vec<FeatureRow>) -> HashMap<(String, String), LeadFeatureVector> {
    rows.into_iter().map(|r| ((r.paper_id, r.author_id), r.features)).collect()
}

fn assert_close(a: &LeadFeatureVector, b: &LeadFeatureVector) {
    let (x, y) = (a.to_array(), b.to_array());
    for k in 0..x.len() {
        assert!((x[k] - y[k]).abs() < 1e-12, "feature {k}: {a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_and_sweep_match_oracle(specs in prop::collection::vec(paper_spec(), 0..40)) {
        let corpus = build(&specs, "W");
        let index = AuthorProfileIndex::build(&corpus, AffiliationScore::Percentile).unwrap();
        let swept = by_cell(sweep_features(&corpus, AffiliationScore::Percentile).unwrap());
        let n_cells: usize = corpus.iter().map(|p| p.n_authors()).sum();
        prop_assert_eq!(swept.len(), n_cells);
        for p in &corpus {
            for a in &p.authorships {
                let want = oracle(&corpus, p, &a.author_id);
                let got = leadshare::features::extract_features(p, &a.author_id, &index).unwrap();
                assert_close(&got, &want);
                assert_close(&swept[&(p.paper_id.clone(), a.author_id.clone())], &want);
            }
        }
    }

    #[test]
    fn later_papers_do_not_change_features(
        specs in prop::collection::vec(paper_spec(), 1..30),
        extra in prop::collection::vec(paper_spec(), 1..10),
    ) {
        let corpus = build(&specs, "W");
        let focal = corpus.iter().max_by_key(|p| p.sort_key()).unwrap().clone();
        let cutoff = focal.effective_date();
        let mut grown = corpus.clone();
        for mut p in build(&extra, "X") {
            p.year = p.year.max(cutoff.year()) + 6;
            p.pub_date = None;
            p.references.push(focal.paper_id.clone());
            grown.push(p);
        }
        let before = AuthorProfileIndex::build(&corpus, AffiliationScore::Percentile).unwrap();
        let after = AuthorProfileIndex::build(&grown, AffiliationScore::Percentile).unwrap();
        for a in &focal.authorships {
            let x = leadshare::features::extract_features(&focal, &a.author_id, &before).unwrap();
            let y = leadshare::features::extract_features(&focal, &a.author_id, &after).unwrap();
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn prior_count_is_monotone(specs in prop::collection::vec(paper_spec(), 1..40)) {
        let corpus = build(&specs, "W");
        let rows = sweep_features(&corpus, AffiliationScore::Percentile).unwrap();
        let mut last: HashMap<String, (u64, u64, u64)> = HashMap::new();
        for r in rows {
            let f = r.features;
            let now = (f.prior_pub_count, f.unique_keywords, f.citations_received);
            if let Some(prev) = last.get(&r.author_id) {
                prop_assert!(now.0 >= prev.0 && now.1 >= prev.1 && now.2 >= prev.2);
            }
            last.insert(r.author_id, now);
        }
    }

    #[test]
    fn affiliation_score_survives_volume_scaling(
        specs in prop::collection::vec(paper_spec(), 1..25),
        k in 2..4usize,
    ) {
        let corpus = build(&specs, "W");
        let mut scaled = Vec::new();
        for copy in 0..k {
            let mut c = build(&specs, &format!("K{copy}_"));
            for p in &mut c {
                for a in &mut p.authorships {
                    a.author_id = format!("{}_{copy}", a.author_id);
                }
            }
            scaled.extend(c);
        }
        let base = by_cell(sweep_features(&corpus, AffiliationScore::Percentile).unwrap());
        let big = by_cell(sweep_features(&scaled, AffiliationScore::Percentile).unwrap());
        for ((paper, author), f) in &base {
            let twin = (format!("K0_{}", &paper[1..]), format!("{author}_0"));
            prop_assert!((big[&twin].affiliation_score - f.affiliation_score).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&f.affiliation_score));
        }
    }
}

#[test]
fn disabled_affiliation_is_zero() {
    let specs: Vec<Spec> = (0..6)
        .map(|i| Spec { year: 2000 + i, day: None, authors: vec![(0, 0), (1, 1)], refs: vec![], concepts: vec![] })
        .collect();
    let rows = sweep_features(&build(&specs, "W"), AffiliationScore::Disabled).unwrap();
    assert!(rows.iter().all(|r| r.features.affiliation_score == 0.0));
}
