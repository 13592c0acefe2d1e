//! Shared inputs for the benchmarks.

use leadshare::corpus::{bilateral_pair, BriClassification, IfBinEdges, PublicationRecord, RegionMap, TopicMap};
use leadshare::features::{sweep_features, AffiliationScore, N_FEATURES};
use leadshare::leadmodel::{fit_arrays, score_corpus, FeatureTable, ModelFamily, ScoredAuthorship, ScoringContext};
use leadshare::synth::{generate, SynthConfig};

pub fn corpus(n_papers: usize) -> Vec<PublicationRecord> {
    generate(&SynthConfig { n_papers, seed: 5, ..SynthConfig::default() }).papers
}

/// Scores every bilateral paper of a synthetic corpus with a model fitted on a positional proxy label.
pub fn scored(n_papers: usize) -> Vec<ScoredAuthorship> {
    let papers = corpus(n_papers);
    let rows = sweep_features(&papers, AffiliationScore::Percentile).expect("synthetic corpus is valid");
    let train: Vec<([f64; N_FEATURES], f64)> =
        rows.iter().map(|r| (r.features.to_array(), f64::from(u8::from(r.features.first_or_last_count > 0)))).collect();
    let model = fit_arrays(&train, ModelFamily::Ols).expect("enough examples");
    let regions = RegionMap::builtin();
    let (topics, bri, edges) = (TopicMap::builtin(), BriClassification::builtin(), IfBinEdges::default());
    let bilateral: Vec<_> = papers
        .iter()
        .filter(|p| p.year > 1990 && p.impact_factor >= 1.0)
        .filter_map(|p| bilateral_pair(p, &regions).ok().flatten().map(|pair| (p, pair)))
        .collect();
    let ctx = ScoringContext { regions: &regions, topics: &topics, bri: &bri, if_edges: &edges, threshold: 0.65 };
    score_corpus(&model, &bilateral, &FeatureTable::from_rows(rows), &ctx).expect("features cover every cell")
}
