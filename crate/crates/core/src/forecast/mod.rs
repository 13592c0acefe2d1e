//! Linear trend fits over metric series, mean-response confidence bands and parity years.

pub mod tdist;

use std::io::{self, Write};

use crate::digest::decimal9;
use crate::metrics::RegionSeries;

pub const DEFAULT_WINDOW: (i32, i32) = (2010, 2021);
pub const DEFAULT_CONFIDENCE: f64 = 0.95;
pub const DEFAULT_HORIZON: f64 = 2200.0;
/// Bisection tolerance in years.
const ROOT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ForecastError {
    #[error("need at least 3 points in the window, got {0}")]
    TooFewPoints(usize),
    #[error("all points fall in the same year")]
    ZeroVariance,
    #[error("window start {0} is after window end {1}")]
    InvalidWindow(i32, i32),
    #[error("confidence level {0} must lie in (0, 1)")]
    InvalidConfidence(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
    pub x_mean: f64,
    pub y_mean: f64,
    pub s_xx: f64,
    pub residual_variance: f64,
    pub dof: usize,
    pub confidence_level: f64,
    pub window: (i32, i32),
}

/// Ordinary least squares of value on year over the points inside `window` (inclusive).
pub fn ols_fit(points: &[(i32, f64)], window: (i32, i32)) -> Result<RegressionFit, ForecastError> {
    if window.0 > window.1 {
        return Err(ForecastError::InvalidWindow(window.0, window.1));
    }
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, _)| (window.0..=window.1).contains(x)).map(|&(x, y)| (x as f64, y)).collect();
    let n = pts.len();
    if n < 3 {
        return Err(ForecastError::TooFewPoints(n));
    }
    let nf = n as f64;
    let x_mean = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    // offsets from the first value keep constant series exactly flat
    let y0 = pts[0].1;
    let d_mean = pts.iter().map(|p| p.1 - y0).sum::<f64>() / nf;
    let y_mean = y0 + d_mean;
    let s_xx: f64 = pts.iter().map(|p| (p.0 - x_mean).powi(2)).sum();
    if s_xx == 0.0 {
        return Err(ForecastError::ZeroVariance);
    }
    let s_xy: f64 = pts.iter().map(|p| (p.0 - x_mean) * ((p.1 - y0) - d_mean)).sum();
    let slope = s_xy / s_xx;
    let intercept = y_mean - slope * x_mean;
    let sse: f64 = pts.iter().map(|p| ((p.1 - y0) - (d_mean + slope * (p.0 - x_mean))).powi(2)).sum();
    Ok(RegressionFit {
        slope,
        intercept,
        n,
        x_mean,
        y_mean,
        s_xx,
        residual_variance: sse / (nf - 2.0),
        dof: n - 2,
        confidence_level: DEFAULT_CONFIDENCE,
        window,
    })
}

pub fn fit_series(series: &RegionSeries, window: (i32, i32)) -> Result<RegressionFit, ForecastError> {
    ols_fit(&series.points, window)
}

impl RegressionFit {
    pub fn with_confidence(mut self, level: f64) -> Result<Self, ForecastError> {
        if !(level > 0.0 && level < 1.0) {
            return Err(ForecastError::InvalidConfidence(level));
        }
        self.confidence_level = level;
        Ok(self)
    }

    /// Fitted value, evaluated around the centroid.
    pub fn predict(&self, x: f64) -> f64 {
        self.y_mean + self.slope * (x - self.x_mean)
    }

    pub fn residual_se(&self) -> f64 {
        self.residual_variance.max(0.0).sqrt()
    }

    pub fn slope_se(&self) -> f64 {
        self.residual_se() / self.s_xx.sqrt()
    }

    pub fn t_critical(&self) -> f64 {
        tdist::t_quantile(0.5 + 0.5 * self.confidence_level, self.dof as f64)
    }

    fn half_width_factor(&self) -> f64 {
        self.t_critical() * self.residual_se()
    }

    fn spread(&self, u: f64) -> f64 {
        (1.0 / self.n as f64 + u * u / self.s_xx).sqrt()
    }
}

/// Mean-response band at `x` for the fit's confidence level.
pub fn confidence_band(fit: &RegressionFit, x: f64) -> (f64, f64) {
    let y = fit.predict(x);
    if fit.residual_variance <= 0.0 {
        return (y, y);
    }
    let h = fit.half_width_factor() * fit.spread(x - fit.x_mean);
    (y - h, y + h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParityForecast {
    pub threshold: f64,
    /// Crossing of the fitted line; `None` means never.
    pub point_year: Option<f64>,
    /// Earliest plausible crossing (the band edge nearer the threshold).
    pub lower_year: Option<f64>,
    /// Latest plausible crossing (the band edge farther from the threshold).
    pub upper_year: Option<f64>,
    /// The fitted value at the window end is already on the far side of the threshold.
    pub already_reached: bool,
}

#[derive(Clone, Copy)]
enum Edge {
    Leading,
    Trailing,
}

/// Parity-year crossings of the fit and its band with `threshold`.
///
/// For a rising fit the band's upper edge gives `lower_year` and the lower edge
/// gives `upper_year`; a falling fit is handled by mirroring. Each edge reports
/// the last year, up to `horizon`, at which it moves onto the threshold's far
/// side. An edge already past the threshold everywhere reports the window start.
pub fn parity_year(fit: &RegressionFit, threshold: f64, horizon: f64) -> ParityForecast {
    let sign = if fit.slope < 0.0 { -1.0 } else { 1.0 };
    let m = Mirrored {
        y_mean: sign * fit.y_mean,
        slope: sign * fit.slope,
        threshold: sign * threshold,
        x_mean: fit.x_mean,
        half: if fit.residual_variance > 0.0 { fit.half_width_factor() } else { 0.0 },
        n: fit.n as f64,
        s_xx: fit.s_xx,
    };
    let start = fit.window.0 as f64;
    let already_reached = m.line(fit.window.1 as f64) >= m.threshold;
    let point_year = if fit.slope == 0.0 {
        (fit.intercept >= threshold).then_some(start)
    } else {
        let p = fit.x_mean + (threshold - fit.y_mean) / fit.slope;
        (p <= horizon).then_some(p)
    };
    ParityForecast {
        threshold,
        point_year,
        lower_year: m.last_entry(Edge::Leading, start, horizon),
        upper_year: m.last_entry(Edge::Trailing, start, horizon),
        already_reached,
    }
}

/// A fit oriented so that parity is reached by rising through the threshold.
struct Mirrored {
    y_mean: f64,
    slope: f64,
    threshold: f64,
    x_mean: f64,
    half: f64,
    n: f64,
    s_xx: f64,
}

impl Mirrored {
    fn line(&self, x: f64) -> f64 {
        self.y_mean + self.slope * (x - self.x_mean)
    }

    fn spread(&self, u: f64) -> f64 {
        (1.0 / self.n + u * u / self.s_xx).sqrt()
    }

    /// Edge minus threshold, in centered coordinates.
    fn g(&self, edge: Edge, u: f64) -> f64 {
        let h = self.half * self.spread(u);
        let base = self.y_mean + self.slope * u - self.threshold;
        match edge {
            Edge::Leading => base + h,
            Edge::Trailing => base - h,
        }
    }

    fn dg(&self, edge: Edge, u: f64) -> f64 {
        let dh = self.half * u / (self.s_xx * self.spread(u));
        match edge {
            Edge::Leading => self.slope + dh,
            Edge::Trailing => self.slope - dh,
        }
    }

    fn scale(&self) -> f64 {
        1.0 + self.threshold.abs() + self.y_mean.abs()
    }

    fn last_entry(&self, edge: Edge, start: f64, horizon: f64) -> Option<f64> {
        let uh = horizon - self.x_mean;
        let roots = self.analytic_roots(edge).unwrap_or_else(|| self.bisection_roots(edge, start, horizon));
        let entry = roots
            .into_iter()
            .filter(|u| *u <= uh + ROOT_TOLERANCE && self.dg(edge, *u) > 0.0)
            .fold(None, |acc: Option<f64>, u| Some(acc.map_or(u, |a| a.max(u))));
        if let Some(u) = entry {
            return Some(self.x_mean + u.min(uh));
        }
        // no entry: either always past the threshold, or never
        let above_everywhere = self.g(edge, start - self.x_mean) >= 0.0 && self.g(edge, uh) >= 0.0;
        above_everywhere.then_some(start)
    }

    /// Roots of `g` from the squared equation, verified against `g` itself.
    /// `None` asks for the bisection fallback.
    fn analytic_roots(&self, edge: Edge) -> Option<Vec<f64>> {
        let (b, c) = (self.slope, self.threshold - self.y_mean);
        let h2 = self.half * self.half;
        let qa = h2 / self.s_xx - b * b;
        let qb = 2.0 * b * c;
        let qc = h2 / self.n - c * c;
        let coef_scale = qa.abs().max(qb.abs()).max(qc.abs());
        if coef_scale == 0.0 {
            return None;
        }
        let mut cands = Vec::new();
        if qa.abs() <= 1e-12 * coef_scale {
            if qb == 0.0 {
                return None;
            }
            cands.push(-qc / qb);
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            let tol = 1e-12 * (qb * qb).max((4.0 * qa * qc).abs());
            if disc < -tol {
                return Some(Vec::new());
            }
            let sq = disc.max(0.0).sqrt();
            // stable form
            let q = -0.5 * (qb + qb.signum() * sq);
            if q == 0.0 {
                cands.push(0.0);
            } else {
                cands.push(q / qa);
                cands.push(qc / q);
            }
        }
        let tol = 1e-9 * self.scale();
        let mut roots = Vec::new();
        for u in cands {
            if !u.is_finite() {
                return None;
            }
            // the squared equation also carries the other edge's roots
            if self.g(edge, u).abs() <= tol {
                roots.push(u);
            }
        }
        Some(roots)
    }

    fn bisection_roots(&self, edge: Edge, start: f64, horizon: f64) -> Vec<f64> {
        let (lo, hi) = (start.min(horizon) - 1000.0 - self.x_mean, horizon - self.x_mean);
        let steps = ((hi - lo).ceil() as usize).max(1);
        let step = (hi - lo) / steps as f64;
        let mut roots = Vec::new();
        let mut prev = (lo, self.g(edge, lo));
        for i in 1..=steps {
            let x = lo + step * i as f64;
            let cur = (x, self.g(edge, x));
            if (prev.1 < 0.0) != (cur.1 < 0.0) {
                let (mut a, mut b) = (prev.0, cur.0);
                let neg_at_a = prev.1 < 0.0;
                while b - a > ROOT_TOLERANCE {
                    let mid = 0.5 * (a + b);
                    if (self.g(edge, mid) < 0.0) == neg_at_a {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            prev = cur;
        }
        roots
    }
}

pub const FORECAST_HEADER: &str =
    "pair\tfocal\tmetric\tfilter\tthreshold\tslope\tintercept\tpoint_year\tlower_year\tupper_year\talready_reached";

pub fn year_cell(y: Option<f64>) -> String {
    y.map_or_else(|| "never".to_string(), decimal9)
}

/// One row of the forecast table.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesForecast {
    pub series: RegionSeries,
    pub fit: RegressionFit,
    pub parity: ParityForecast,
}

/// Tab-joined cells of one forecast row, in [`FORECAST_HEADER`] order.
pub fn forecast_cells(r: &SeriesForecast) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        r.series.pair,
        r.series.focal,
        r.series.metric,
        r.series.filter,
        decimal9(r.parity.threshold),
        decimal9(r.fit.slope),
        decimal9(r.fit.intercept),
        year_cell(r.parity.point_year),
        year_cell(r.parity.lower_year),
        year_cell(r.parity.upper_year),
        r.parity.already_reached
    )
}

pub fn write_forecasts<W: Write>(mut w: W, rows: &[SeriesForecast]) -> io::Result<()> {
    writeln!(w, "{FORECAST_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", forecast_cells(r))?;
    }
    w.flush()
}
