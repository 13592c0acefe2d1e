//! Plot-ready figure tables and parameter sweeps.
//!
//! Every figure CSV has the columns of [`FIGURE_HEADER`]. `kind` is
//! `observed` (one metric value per year), `fit` (fitted line and confidence
//! band on a yearly grid from the window start to `export_end`) or `parity`
//! (threshold in `value`, crossing years in `year`, `lower`, `upper`; `never`
//! when a line does not cross before the horizon).

use std::fmt::Write as _;
use std::str::FromStr;

use super::config::{base_plan, PipelineConfig, SeriesSpec};
use super::{PipelineError, StepInputs, StepOutputs};
use crate::digest::decimal9;
use crate::forecast::{
    confidence_band, fit_series, forecast_cells, parity_year, year_cell, ForecastError, SeriesForecast, FORECAST_HEADER,
};
use crate::leadmodel::{classify, read_scored, Classification, ScoredAuthorship};
use crate::metrics::{aggregate, build_series, read_series, FilterAtom, FilterSpec, Metric, Partner, RegionSeries};

pub const FIGURES: [&str; 7] =
    ["fig1c.csv", "fig1d.csv", "fig2a.csv", "fig2b.csv", "fig3.csv", "fig4a.csv", "fig4b.csv"];
pub const FIGURE_HEADER: [&str; 9] = ["group", "pair", "metric", "filter", "kind", "year", "value", "lower", "upper"];

/// Fits a series as persisted (values at 9 decimals) and locates its parity crossing.
pub fn forecast_one(series: &RegionSeries, cfg: &PipelineConfig) -> Result<SeriesForecast, ForecastError> {
    let mut series = series.clone();
    for p in &mut series.points {
        p.1 = decimal9(p.1).parse().expect("decimal round-trips");
    }
    let fit = fit_series(&series, cfg.window)?.with_confidence(cfg.confidence)?;
    let parity = parity_year(&fit, series.metric.parity(), cfg.horizon);
    Ok(SeriesForecast { series, fit, parity })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Threshold,
    IfBin,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Threshold => "threshold",
            SweepAxis::IfBin => "if_bin",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "threshold" => Ok(SweepAxis::Threshold),
            "if_bin" | "if-bin" => Ok(SweepAxis::IfBin),
            other => Err(format!("unknown sweep axis {other:?}")),
        }
    }
}

pub const SWEEP_HEADER: &str = "axis_value";

/// One (value, series, metric) cell of a sweep; `forecast` holds the reason when the series cannot be fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub series: RegionSeries,
    pub forecast: Result<SeriesForecast, ForecastError>,
}

/// Forecasts for each sweep value over `plan` and `metrics`, in (value, plan, metric) order.
pub fn sweep_rows(
    rows: &[ScoredAuthorship],
    cfg: &PipelineConfig,
    plan: &[SeriesSpec],
    metrics: &[Metric],
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepRow>, PipelineError> {
    let mut out = Vec::new();
    for &v in values {
        let (relabeled, specs): (Option<Vec<ScoredAuthorship>>, Vec<SeriesSpec>) = match axis {
            SweepAxis::Threshold => {
                if !(v > 0.0 && v < 1.0) {
                    return Err(PipelineError::Config(format!("sweep threshold {v} outside (0, 1)")));
                }
                let rel = rows
                    .iter()
                    .map(|r| ScoredAuthorship {
                        is_leader: classify(r.lead_prob, v) == Classification::Leader,
                        ..r.clone()
                    })
                    .collect();
                (Some(rel), plan.to_vec())
            }
            SweepAxis::IfBin => {
                let n = cfg.if_bin_edges.n_bins();
                if v.fract() != 0.0 || v < 0.0 || v >= n as f64 {
                    return Err(PipelineError::Config(format!("impact-factor bin {v} outside 0..{n}")));
                }
                let atom = FilterSpec::new([FilterAtom::IfBin(v as usize)]);
                (None, plan.iter().map(|s| SeriesSpec { partner: s.partner, filter: s.filter.and(&atom) }).collect())
            }
        };
        let rows = relabeled.as_deref().unwrap_or(rows);
        let mut filters: Vec<FilterSpec> = Vec::new();
        for s in &specs {
            if !filters.contains(&s.filter) {
                filters.push(s.filter.clone());
            }
        }
        let counts = aggregate(rows, &filters, cfg.counting).map_err(|e| PipelineError::Data(e.to_string()))?;
        for s in &specs {
            for &m in metrics {
                let series = build_series(&counts, cfg.focal, s.partner, m, &s.filter);
                let forecast = forecast_one(&series, cfg);
                out.push(SweepRow { value: v, series, forecast });
            }
        }
    }
    Ok(out)
}

fn axis_cell(axis: SweepAxis, v: f64) -> String {
    match axis {
        SweepAxis::Threshold => decimal9(v),
        SweepAxis::IfBin => format!("{}", v as usize),
    }
}

pub(crate) fn sweep_stage(
    inputs: &StepInputs<'_>,
    axis: SweepAxis,
    values: &[f64],
    file: &str,
) -> Result<StepOutputs, PipelineError> {
    let cfg = inputs.cfg;
    let rows = read_scored(inputs.bytes("scored.tsv")).map_err(|e| PipelineError::Data(format!("scored.tsv: {e}")))?;
    let results = sweep_rows(&rows, cfg, &base_plan(cfg), &Metric::ALL, axis, values)?;
    let mut out = format!("{SWEEP_HEADER}\t{FORECAST_HEADER}\n");
    for r in &results {
        let cells = match &r.forecast {
            Ok(f) => forecast_cells(f),
            Err(_) => {
                let s = &r.series;
                let na = ["na"; 6].join("\t");
                format!("{}\t{}\t{}\t{}\t{}\t{na}", s.pair, s.focal, s.metric, s.filter, decimal9(s.metric.parity()))
            }
        };
        let _ = writeln!(out, "{}\t{cells}", axis_cell(axis, r.value));
    }
    Ok(vec![(file.to_string(), out.into_bytes())])
}

struct Figure {
    rows: Vec<[String; 9]>,
}

impl Figure {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    fn observed(&mut self, group: &str, s: &RegionSeries) {
        for (y, v) in &s.points {
            self.rows.push(row(group, s, "observed", y.to_string(), decimal9(*v), String::new(), String::new()));
        }
    }

    fn fit(&mut self, group: &str, f: &SeriesForecast, cfg: &PipelineConfig) {
        for y in cfg.window.0..=cfg.export_end.max(cfg.window.1) {
            let x = f64::from(y);
            let (lo, hi) = confidence_band(&f.fit, x);
            self.rows.push(row(
                group,
                &f.series,
                "fit",
                y.to_string(),
                decimal9(f.fit.predict(x)),
                decimal9(lo),
                decimal9(hi),
            ));
        }
    }

    fn parity(&mut self, group: &str, f: &SeriesForecast) {
        let p = &f.parity;
        self.rows.push(row(
            group,
            &f.series,
            "parity",
            year_cell(p.point_year),
            decimal9(p.threshold),
            year_cell(p.lower_year),
            year_cell(p.upper_year),
        ));
    }

    fn to_csv(&self) -> Result<Vec<u8>, PipelineError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| PipelineError::Data(format!("csv: {e}"));
        w.write_record(FIGURE_HEADER).map_err(fail)?;
        for r in &self.rows {
            w.write_record(r).map_err(fail)?;
        }
        w.into_inner().map_err(|e| PipelineError::Data(format!("csv: {e}")))
    }
}

fn row(
    group: &str,
    s: &RegionSeries,
    kind: &str,
    year: String,
    value: String,
    lower: String,
    upper: String,
) -> [String; 9] {
    [
        group.to_string(),
        s.pair.clone(),
        s.metric.to_string(),
        s.filter.to_string(),
        kind.to_string(),
        year,
        value,
        lower,
        upper,
    ]
}

pub(crate) fn export_stage(inputs: &StepInputs<'_>) -> Result<StepOutputs, PipelineError> {
    let cfg = inputs.cfg;
    let series =
        read_series(inputs.bytes("series.tsv")).map_err(|e| PipelineError::Data(format!("series.tsv: {e}")))?;
    let find = |partner: Partner, metric: Metric, filter: &FilterSpec| {
        let label = partner.label(cfg.focal);
        series.iter().find(|s| s.focal == cfg.focal && s.pair == label && s.metric == metric && &s.filter == filter)
    };
    let full = |fig: &mut Figure, group: &str, s: &RegionSeries| {
        fig.observed(group, s);
        if let Ok(f) = forecast_one(s, cfg) {
            fig.fit(group, &f, cfg);
            fig.parity(group, &f);
        }
    };
    let primary = cfg.primary_partner();
    let all = FilterSpec::all();
    let mut out = Vec::new();

    for (name, metric) in [("fig1c.csv", Metric::LeadShare), ("fig1d.csv", Metric::LeadPremium)] {
        let mut fig = Figure::new();
        for p in &cfg.partners {
            if let Some(s) = find(*p, metric, &all) {
                full(&mut fig, &s.pair, s);
            }
        }
        out.push((name.to_string(), fig.to_csv()?));
    }

    let mut fig = Figure::new();
    for b in 0..cfg.if_bin_edges.n_bins() {
        let filter = FilterSpec::new([FilterAtom::IfBin(b)]);
        for metric in [Metric::LeadShare, Metric::LeadPremium] {
            if let Some(f) = find(primary, metric, &filter).and_then(|s| forecast_one(s, cfg).ok()) {
                fig.parity(&filter.to_string(), &f);
            }
        }
    }
    out.push(("fig2a.csv".to_string(), fig.to_csv()?));

    let rows = read_scored(inputs.bytes("scored.tsv")).map_err(|e| PipelineError::Data(format!("scored.tsv: {e}")))?;
    let plan = [SeriesSpec { partner: primary, filter: all.clone() }];
    let mut fig = Figure::new();
    for r in sweep_rows(
        &rows,
        cfg,
        &plan,
        &[Metric::LeadShare, Metric::LeadPremium],
        super::SweepAxis::Threshold,
        &cfg.sweep_thresholds,
    )? {
        if let Ok(f) = &r.forecast {
            fig.parity(&format!("threshold={}", decimal9(r.value)), f);
        }
    }
    out.push(("fig2b.csv".to_string(), fig.to_csv()?));

    let mut fig = Figure::new();
    let areas = std::iter::once(FilterSpec::new([FilterAtom::AnyArea]))
        .chain(crate::corpus::AREA_TAGS.iter().map(|a| FilterSpec::new([FilterAtom::Area(a)])));
    for filter in areas {
        for metric in [Metric::LeadShare, Metric::LeadPremium] {
            if let Some(s) = find(primary, metric, &filter) {
                full(&mut fig, &filter.to_string(), s);
            }
        }
    }
    out.push(("fig3.csv".to_string(), fig.to_csv()?));

    for (name, metric) in [("fig4a.csv", Metric::LeadShare), ("fig4b.csv", Metric::LeadPremium)] {
        let mut fig = Figure::new();
        for class in [crate::corpus::BriClass::HighIncome, crate::corpus::BriClass::LowIncome] {
            let filter = FilterSpec::new([FilterAtom::Bri(class)]);
            if let Some(s) = find(Partner::Any, metric, &filter) {
                full(&mut fig, &filter.to_string(), s);
            }
        }
        out.push((name.to_string(), fig.to_csv()?));
    }
    Ok(out)
}
