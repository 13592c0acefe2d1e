use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use super::{classify, Classification, LinearLeadModel};
use crate::corpus::{
    BilateralPair, BinError, BriClass, BriClassification, GlobalRegion, IfBinEdges, PublicationRecord, RegionMap,
    TopicMap, UnknownCountry, AREA_TAGS, FIELD_TAGS,
};
use crate::digest::decimal9;
use crate::features::{extract_features, AuthorProfileIndex, FeatureError, FeatureRow, LeadFeatureVector};

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Bin(#[from] BinError),
    #[error(transparent)]
    UnknownCountry(#[from] UnknownCountry),
    #[error("no feature row for author {author_id} on paper {paper_id}")]
    MissingFeatures { paper_id: String, author_id: String },
    #[error("scored file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where per-authorship features come from at scoring time.
pub trait FeatureSource: Sync {
    fn lookup(&self, record: &PublicationRecord, author_id: &str) -> Result<LeadFeatureVector, ScoreError>;
}

impl FeatureSource for AuthorProfileIndex {
    fn lookup(&self, record: &PublicationRecord, author_id: &str) -> Result<LeadFeatureVector, ScoreError> {
        Ok(extract_features(record, author_id, self)?)
    }
}

/// Precomputed features keyed by (paper id, author id), as read from a feature dump.
#[derive(Debug, Default)]
pub struct FeatureTable(HashMap<(String, String), LeadFeatureVector>);

impl FeatureTable {
    pub fn from_rows(rows: Vec<FeatureRow>) -> Self {
        Self(rows.into_iter().map(|r| ((r.paper_id, r.author_id), r.features)).collect())
    }

    pub fn get(&self, paper_id: &str, author_id: &str) -> Option<&LeadFeatureVector> {
        self.0.get(&(paper_id.to_string(), author_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FeatureSource for FeatureTable {
    fn lookup(&self, record: &PublicationRecord, author_id: &str) -> Result<LeadFeatureVector, ScoreError> {
        self.get(&record.paper_id, author_id).copied().ok_or_else(|| ScoreError::MissingFeatures {
            paper_id: record.paper_id.clone(),
            author_id: author_id.to_string(),
        })
    }
}

pub struct ScoringContext<'a> {
    pub regions: &'a RegionMap,
    pub topics: &'a TopicMap,
    pub bri: &'a BriClassification,
    pub if_edges: &'a IfBinEdges,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredAuthorship {
    pub paper_id: String,
    pub author_id: String,
    pub position: usize,
    /// Canonical country name.
    pub country: String,
    pub region: GlobalRegion,
    pub year: i32,
    pub pair: BilateralPair,
    pub lead_prob: f64,
    pub is_leader: bool,
    pub areas: BTreeSet<&'static str>,
    pub fields: BTreeSet<&'static str>,
    pub if_bin: usize,
    /// Class of this authorship's country.
    pub bri_class: BriClass,
}

/// One row per authorship of every paper, ordered by (paper id, position).
pub fn score_corpus<S: FeatureSource>(
    model: &LinearLeadModel,
    papers: &[(&PublicationRecord, BilateralPair)],
    features: &S,
    ctx: &ScoringContext<'_>,
) -> Result<Vec<ScoredAuthorship>, ScoreError> {
    let per_paper: Vec<Vec<ScoredAuthorship>> = papers
        .par_iter()
        .map(|(record, pair)| score_paper(model, record, *pair, features, ctx))
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<ScoredAuthorship> = per_paper.into_iter().flatten().collect();
    rows.sort_by(|a, b| (&a.paper_id, a.position).cmp(&(&b.paper_id, b.position)));
    Ok(rows)
}

fn score_paper<S: FeatureSource>(
    model: &LinearLeadModel,
    record: &PublicationRecord,
    pair: BilateralPair,
    features: &S,
    ctx: &ScoringContext<'_>,
) -> Result<Vec<ScoredAuthorship>, ScoreError> {
    let tags = ctx.topics.classify(record);
    let if_bin = ctx.if_edges.bin(record.impact_factor)?;
    record
        .authorships
        .iter()
        .map(|a| {
            let v = features.lookup(record, &a.author_id)?;
            let lead_prob = model.predict(&v);
            let country = ctx.regions.canonical_name(&a.country).unwrap_or(&a.country).to_string();
            Ok(ScoredAuthorship {
                paper_id: record.paper_id.clone(),
                author_id: a.author_id.clone(),
                position: a.position,
                region: ctx.regions.assign_region(&a.country)?,
                bri_class: ctx.bri.class_with_aliases(&a.country, ctx.regions),
                country,
                year: record.year,
                pair,
                lead_prob,
                is_leader: classify(lead_prob, ctx.threshold) == Classification::Leader,
                areas: tags.areas.clone(),
                fields: tags.fields.clone(),
                if_bin,
            })
        })
        .collect()
}

pub const SCORED_HEADER: &str =
    "paper_id\tauthor_id\tposition\tcountry\tregion\tyear\tpair\tlead_prob\tis_leader\tareas\tfields\tif_bin\tbri_class";

fn join(tags: &BTreeSet<&'static str>) -> String {
    tags.iter().copied().collect::<Vec<_>>().join(",")
}

pub fn write_scored<W: Write>(mut w: W, rows: &[ScoredAuthorship]) -> std::io::Result<()> {
    writeln!(w, "{SCORED_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.paper_id,
            r.author_id,
            r.position,
            r.country,
            r.region,
            r.year,
            r.pair,
            decimal9(r.lead_prob),
            u8::from(r.is_leader),
            join(&r.areas),
            join(&r.fields),
            r.if_bin,
            r.bri_class
        )?;
    }
    w.flush()
}

fn tags(text: &str, known: &[&'static str], line: usize) -> Result<BTreeSet<&'static str>, ScoreError> {
    text.split(',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            known
                .iter()
                .copied()
                .find(|k| *k == t)
                .ok_or_else(|| ScoreError::Parse { line, message: format!("unknown tag {t:?}") })
        })
        .collect()
}

pub fn read_scored<R: BufRead>(r: R) -> Result<Vec<ScoredAuthorship>, ScoreError> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?;
    if header.as_deref() != Some(SCORED_HEADER) {
        return Err(ScoreError::Parse { line: 1, message: "missing or unexpected header".into() });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| ScoreError::Parse { line: line_no, message };
        let c: Vec<&str> = line.split('\t').collect();
        if c.len() != 13 {
            return Err(bad(format!("expected 13 columns, got {}", c.len())));
        }
        let field = |k: usize, what: &str| bad(format!("bad {what}: {:?}", c[k]));
        rows.push(ScoredAuthorship {
            paper_id: c[0].to_string(),
            author_id: c[1].to_string(),
            position: c[2].parse().map_err(|_| field(2, "position"))?,
            country: c[3].to_string(),
            region: c[4].parse().map_err(|_| field(4, "region"))?,
            year: c[5].parse().map_err(|_| field(5, "year"))?,
            pair: c[6].parse().map_err(|_| field(6, "pair"))?,
            lead_prob: c[7].parse().map_err(|_| field(7, "lead_prob"))?,
            is_leader: match c[8] {
                "1" => true,
                "0" => false,
                _ => return Err(field(8, "is_leader")),
            },
            areas: tags(c[9], &AREA_TAGS, line_no)?,
            fields: tags(c[10], &FIELD_TAGS, line_no)?,
            if_bin: c[11].parse().map_err(|_| field(11, "if_bin"))?,
            bri_class: c[12].parse().map_err(|_| field(12, "bri_class"))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AuthorshipRecord, Concept};
    use crate::features::build_profiles;
    use crate::features::N_FEATURES;
    use crate::leadmodel::ModelFamily;

    fn model() -> LinearLeadModel {
        let mut weights = [0.0; N_FEATURES];
        weights[4] = 0.2;
        LinearLeadModel {
            family: ModelFamily::Ols,
            weights,
            intercept: 0.5,
            feature_means: [0.0; N_FEATURES],
            feature_stds: [1.0; N_FEATURES],
            seed: 0,
            split_ratio: 0.9,
            n_train: 0,
            damping: 0.0,
        }
    }

    fn paper(id: &str, year: i32) -> PublicationRecord {
        PublicationRecord {
            paper_id: id.into(),
            year,
            pub_date: None,
            journal_id: "J".into(),
            impact_factor: 5.0,
            concepts: vec![Concept { name: "Medicine".into(), level: 0 }],
            references: vec![],
            authorships: vec![
                AuthorshipRecord {
                    author_id: "a".into(),
                    position: 0,
                    country: "China".into(),
                    institution_id: "I1".into(),
                },
                AuthorshipRecord {
                    author_id: "b".into(),
                    position: 1,
                    country: "USA".into(),
                    institution_id: "I2".into(),
                },
            ],
        }
    }

    #[test]
    fn scores_every_author_and_round_trips() {
        let (regions, topics, bri) = (RegionMap::builtin(), TopicMap::builtin(), BriClassification::builtin());
        let edges = IfBinEdges::default();
        let ctx = ScoringContext { regions: &regions, topics: &topics, bri: &bri, if_edges: &edges, threshold: 0.65 };
        let corpus = [paper("p1", 2010), paper("p2", 2011)];
        let idx = build_profiles(&corpus).unwrap();
        let pair = BilateralPair::new(GlobalRegion::China, GlobalRegion::UnitedStates).unwrap();
        let papers = vec![(&corpus[1], pair)];
        let rows = score_corpus(&model(), &papers, &idx, &ctx).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].country, "United States");
        assert_eq!(rows[1].region, GlobalRegion::UnitedStates);
        assert!((rows[0].lead_prob - 0.7).abs() < 1e-12);
        assert!(rows[0].is_leader);
        assert_eq!(rows[0].if_bin, 2);
        assert!(rows[0].fields.contains("medicine"));

        let mut buf = Vec::new();
        write_scored(&mut buf, &rows).unwrap();
        let back = read_scored(&buf[..]).unwrap();
        let mut again = Vec::new();
        write_scored(&mut again, &back).unwrap();
        assert_eq!(buf, again);
        assert_eq!(back[0].areas, rows[0].areas);

        let table = FeatureTable::default();
        assert!(matches!(score_corpus(&model(), &papers, &table, &ctx), Err(ScoreError::MissingFeatures { .. })));
    }
}
