use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use super::config::{plan_filters, series_plan};
use super::export::{export_stage, forecast_one};
use super::{PipelineError, Stage, StepInputs, StepOutputs};
use crate::corpus::{
    filter_corpus, read_corpus, BilateralPair, BriClassification, PublicationRecord, RegionMap, TableSource, TopicMap,
    UnknownCountryPolicy,
};
use crate::digest::decimal9;
use crate::features::{read_feature_dump, sort_in_memory, sweep_features, write_feature_dump};
use crate::forecast::write_forecasts;
use crate::leadmodel::{
    fit, read_scored, score_corpus, split_indices, write_scored, FeatureTable, FitOptions, LinearLeadModel, ModelError,
    ScoringContext,
};
use crate::metrics::{aggregate, build_series, read_counts, write_counts, write_series, Metric, MetricError};
use crate::roles::{
    build_cooccurrence, cluster_roles, label_clusters, read_contributions_with, training_labels, RolesError, SeedVerbs,
};

pub const LABELS_HEADER: &str = "paper_id\tauthor_id\tlead_value";
pub const BILATERAL_HEADER: &str = "paper_id\tpair";
pub const EVAL_HEADER: &str = "threshold\tprecision\trecall\ttp\tfp\tfn\ttn";

pub(crate) fn run(stage: Stage, inputs: &StepInputs<'_>) -> Result<StepOutputs, PipelineError> {
    match stage {
        Stage::Ingest => ingest(inputs),
        Stage::TrainRoles => train_roles(inputs),
        Stage::BuildProfiles => build_profiles(inputs),
        Stage::FitModel => fit_model(inputs),
        Stage::Score => score(inputs),
        Stage::Aggregate => aggregate_stage(inputs),
        Stage::Forecast => forecast(inputs),
        Stage::Export => export_stage(inputs),
    }
}

fn data<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> PipelineError + '_ {
    move |e| PipelineError::Data(format!("{context}: {e}"))
}

fn table_error(e: crate::corpus::TableError) -> PipelineError {
    PipelineError::Data(e.to_string())
}

fn io_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

fn table_source(inputs: &StepInputs<'_>, label: &str, configured: &TableSource) -> Result<TableSource, PipelineError> {
    // tables are re-read from the bytes hashed for the manifest
    match configured {
        TableSource::Builtin => Ok(TableSource::Builtin),
        TableSource::Path(p) => {
            let _ = inputs.text(label)?;
            Ok(TableSource::Path(p.clone()))
        }
    }
}

fn region_map(inputs: &StepInputs<'_>) -> Result<RegionMap, PipelineError> {
    let cfg = inputs.cfg;
    RegionMap::load(
        &table_source(inputs, "regions_table", &cfg.regions_table)?,
        &table_source(inputs, "aliases_table", &cfg.aliases_table)?,
        cfg.verify_tables,
    )
    .map_err(table_error)
}

fn ingest(inputs: &StepInputs<'_>) -> Result<StepOutputs, PipelineError> {
    let cfg = inputs.cfg;
    let read = read_corpus(inputs.bytes("corpus"), cfg.strict).map_err(data("corpus"))?;
    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(read.records.len());
    let mut duplicates = 0usize;
    for r in read.records {
        if seen.insert(r.paper_id.clone()) {
            records.push(r);
        } else if cfg.strict {
            return Err(PipelineError::Data(format!("corpus: paper id {} appears twice", r.paper_id)));
        } else {
            duplicates += 1;
        }
    }
    if duplicates > 0 {
        log::warn!("dropped {duplicates} records with repeated paper ids");
    }
    sort_in_memory(&mut records);
    let regions = region_map(inputs)?;
    let policy = if cfg.strict { UnknownCountryPolicy::Abort } else { UnknownCountryPolicy::Skip };
    let (kept, stats) = filter_corpus(&records, &regions, policy).map_err(data("corpus"))?;

    let mut corpus = String::new();
    for r in &records {
        corpus.push_str(&r.to_json_line());
        corpus.push('\n');
    }
    let mut bilateral = format!("{BILATERAL_HEADER}\n");
    for (r, pair) in &kept {
        let _ = writeln!(bilateral, "{}\t{pair}", r.paper_id);
    }
    let mut stats_tsv = String::from("statistic\tvalue\n");
    for (k, v) in [
        ("rejected_lines", read.rejected.len()),
        ("duplicate_ids", duplicates),
        ("records", stats.seen),
        ("bilateral", stats.kept),
        ("dropped_year", stats.dropped_year),
        ("dropped_impact_factor", stats.dropped_impact_factor),
        ("dropped_not_bilateral", stats.dropped_not_bilateral),
        ("dropped_unknown_country", stats.dropped_unknown_country),
    ] {
        let _ = writeln!(stats_tsv, "{k}\t{v}");
    }
    log::info!("ingest: {} records, {} bilateral", stats.seen, stats.kept);
    Ok(vec![
        ("corpus.jsonl".into(), corpus.into_bytes()),
        ("bilateral.tsv".into(), bilateral.into_bytes()),
        ("ingest_stats.tsv".into(), stats_tsv.into_bytes()),
    ])
}

fn roles_error(e: RolesError) -> PipelineError {
    match e {
        RolesError::Malformed { .. } | RolesError::ModelFormat { .. } | RolesError::EmptyCorpus => {
            PipelineError::Data(format!("contributions: {e}"))
        }
        other => PipelineError::Numeric(format!("role clustering: {other}")),
    }
}

fn train_roles(inputs: &StepInputs<'_>) -> Result<StepOutputs, PipelineError> {
    let cfg = inputs.cfg;
    let (records, _) = read_contributions_with(inputs.bytes("contributions"), cfg.strict).map_err(roles_error)?;
    let matrix = build_cooccurrence(records.iter()).map_err(roles_error)?;
    let partition = cluster_roles(&matrix, 3, cfg.seed).map_err(roles_error)?;
    let model = label_clusters(&partition, &SeedVerbs::default()).map_err(roles_error)?;
    let (labels, dropped) = training_labels(&records, &model, cfg.label_mode);
    log::info!("train-roles: {} labels, {dropped} units without known verbs", labels.len());
    let mut out = format!("{LABELS_HEADER}\n");
    for l in &labels {
        let _ = writeln!(out, "{}\t{}\t{}", l.paper_id, l.author_id, decimal9(l.lead_value));
    }
    Ok(vec![("roles.tsv".into(), model.to_tsv().into_bytes()), ("labels.tsv".into(), out.into_bytes())])
}

fn own_corpus(inputs: &StepInputs<'_>) -> Result<Vec<PublicationRecord>, PipelineError> {
    Ok(read_corpus(inputs.bytes("corpus.jsonl"), true).map_err(data("corpus.jsonl"))?.records)
}

fn build_profiles(inputs: &StepInputs<'_>) -> Result<StepOutputs, PipelineError> {
    let records = own_corpus(inputs)?;
    let rows = sweep_features(&records, inputs.cfg.affiliation_score).map_err(data("features"))?;
    Ok(vec![("features.tsv".into(), io_bytes(|w| write_feature_dump(w, &rows)))])
}

fn read_labels(text: &str) -> Result<Vec<(String, String, f64)>, PipelineError> {
    let mut lines = text.lines();
    if lines.next() != Some(LABELS_HEADER) {
        return Err(PipelineError::Data("labels.tsv: unexpected header".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let bad = || PipelineError::Data(format!("labels.tsv line {}: malformed", i + 2));
            let mut c = l.split('\t');
            let (Some(p), Some(a), Some(v), None) = (c.next(), c.next(), c.next(), c.next()) else {
                return Err(bad());
            };
            Ok((p.to_string(), a.to_string(), v.parse().map_err(|_| bad())?))
        })
        .collect()
}

fn model_error(e: ModelError) -> PipelineError {
    match e {
        ModelError::Format { .. } => PipelineError::Data(format!("model.txt: {e}")),
        other => PipelineError::Numeric(format!("lead model: {other}")),
    }
}

fn fit_model(inputs: &StepInputs<'_>) -> Result<StepOutputs, PipelineError> {
    let cfg = inputs.cfg;
    let labels = read_labels(inputs.text("labels.tsv")?)?;
    let features =
        FeatureTable::from_rows(read_feature_dump(inputs.bytes("features.tsv")).map_err(data("features.tsv"))?);
    let mut missing = 0usize;
    let examples: Vec<_> = labels
        .iter()
        .filter_map(|(p, a, y)| {
            let v = features.get(p, a).copied();
            missing += usize::from(v.is_none());
            v.map(|v| (v, *y))
        })
        .collect();
    if missing > 0 {
        log::warn!("fit-model: {missing} labels have no corpus authorship and were skipped");
    }
    let opts =
        FitOptions { split_ratio: cfg.split_ratio, seed: cfg.seed, threshold: cfg.threshold, family: cfg.model_family };
    let (model, report) = fit(&examples, &opts).map_err(model_error)?;
    log::info!(
        "fit-model: held-out precision {:.3} recall {:.3} at {} over {} examples",
        report.precision,
        report.recall,
        report.threshold,
        report.n()
    );
    let (_, test) = split_indices(examples.len(), cfg.split_ratio, cfg.seed);
    let held_out: Vec<_> = test.iter().map(|&i| examples[i]).collect();
    let grid: Vec<f64> = (1..20).map(|k| f64::from(k) / 20.0).collect();
    let mut eval = format!("{EVAL_HEADER}\n");
    for r in model.threshold_sweep(&held_out, &grid) {
        let _ = writeln!(
            eval,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            decimal9(r.threshold),
            decimal9(r.precision),
            decimal9(r.recall),
            r.tp,
            r.fp,
            r.fn_,
            r.tn
        );
    }
    Ok(vec![("model.txt".into(), model.to_text().into_bytes()), ("eval.tsv".into(), eval.into_bytes())])
}

fn read_bilateral(text: &str) -> Result<HashMap<String, BilateralPair>, PipelineError> {
    let mut lines = text.lines();
    if lines.next() != Some(BILATERAL_HEADER) {
        return Err(PipelineError::Data("bilateral.tsv: unexpected header".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let bad = || PipelineError::Data(format!("bilateral.tsv line {}: malformed", i + 2));
            let (p, pair) = l.split_once('\t').ok_or_else(bad)?;
            Ok((p.to_string(), pair.parse().map_err(|_| bad())?))
        })
        .collect()
}

fn score(inputs: &StepInputs<'_>) -> Result<StepOutputs, PipelineError> {
    let cfg = inputs.cfg;
    let model = LinearLeadModel::from_text(inputs.text("model.txt")?).map_err(model_error)?;
    let records = own_corpus(inputs)?;
    let pairs = read_bilateral(inputs.text("bilateral.tsv")?)?;
    let features =
        FeatureTable::from_rows(read_feature_dump(inputs.bytes("features.tsv")).map_err(data("features.tsv"))?);
    let regions = region_map(inputs)?;
    let topics = TopicMap::load(&table_source(inputs, "topics_table", &cfg.topics_table)?, cfg.verify_tables)
        .map_err(table_error)?;
    let bri = BriClassification::load(&table_source(inputs, "bri_table", &cfg.bri_table)?, cfg.verify_tables)
        .map_err(table_error)?;
    let papers: Vec<(&PublicationRecord, BilateralPair)> =
        records.iter().filter_map(|r| pairs.get(&r.paper_id).map(|p| (r, *p))).collect();
    let ctx = ScoringContext {
        regions: &regions,
        topics: &topics,
        bri: &bri,
        if_edges: &cfg.if_bin_edges,
        threshold: cfg.threshold,
    };
    let rows = score_corpus(&model, &papers, &features, &ctx).map_err(data("score"))?;
    Ok(vec![("scored.tsv".into(), io_bytes(|w| write_scored(w, &rows)))])
}

fn metric_error(e: MetricError) -> PipelineError {
    PipelineError::Data(e.to_string())
}

fn aggregate_stage(inputs: &StepInputs<'_>) -> Result<StepOutputs, PipelineError> {
    let cfg = inputs.cfg;
    let rows = read_scored(inputs.bytes("scored.tsv")).map_err(data("scored.tsv"))?;
    let filters = plan_filters(&series_plan(cfg));
    let counts = aggregate(&rows, &filters, cfg.counting).map_err(metric_error)?;
    Ok(vec![("counts.tsv".into(), io_bytes(|w| write_counts(w, &counts)))])
}

fn forecast(inputs: &StepInputs<'_>) -> Result<StepOutputs, PipelineError> {
    let cfg = inputs.cfg;
    let counts = read_counts(inputs.bytes("counts.tsv")).map_err(metric_error)?;
    let mut series = Vec::new();
    let mut rows = Vec::new();
    let mut unfit: BTreeMap<String, usize> = BTreeMap::new();
    for spec in series_plan(cfg) {
        for metric in Metric::ALL {
            let s = build_series(&counts, cfg.focal, spec.partner, metric, &spec.filter);
            if s.points.is_empty() {
                continue;
            }
            match forecast_one(&s, cfg) {
                Ok(f) => {
                    series.push(f.series.clone());
                    rows.push(f);
                }
                Err(e) => {
                    *unfit.entry(e.to_string()).or_default() += 1;
                    series.push(s);
                }
            }
        }
    }
    for (reason, n) in unfit {
        log::warn!("forecast: {n} series not fitted ({reason})");
    }
    Ok(vec![
        ("series.tsv".into(), io_bytes(|w| write_series(w, &series))),
        ("forecast.tsv".into(), io_bytes(|w| write_forecasts(w, &rows))),
    ])
}
