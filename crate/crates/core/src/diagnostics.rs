//! Post-fit summaries, model selection along a penalty path, and noise
//! variance estimates.

use crate::crops::CropsResult;
use crate::error::{Error, Result};
use crate::model::{DataSeries, Segmentation};

/// One fitted line segment between consecutive knots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedSegmentRow {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub gradient: f64,
    pub intercept: f64,
    /// Weighted RSS of the observations in `(x0, x1]` (the first segment also
    /// takes an observation sitting on `x0`).
    pub rss: f64,
}

pub fn fitted_table(seg: &Segmentation, series: &DataSeries) -> Vec<FittedSegmentRow> {
    let residuals = seg.residuals(series);
    let x = series.x();
    let mut i = 0;
    seg.knots
        .windows(2)
        .enumerate()
        .map(|(j, w)| {
            let (k0, k1) = (w[0], w[1]);
            let gradient = (k1.value - k0.value) / (k1.x - k0.x);
            let last = j + 2 == seg.knots.len();
            let mut rss = 0.0;
            while i < x.len() && (x[i] <= k1.x || last) {
                let r = residuals[i] / series.sd()[i];
                rss += r * r;
                i += 1;
            }
            FittedSegmentRow {
                x0: k0.x,
                y0: k0.value,
                x1: k1.x,
                y1: k1.value,
                gradient,
                intercept: k0.value - gradient * k0.x,
                rss,
            }
        })
        .collect()
}

/// Unknown-variance information criterion of a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BicScore {
    Finite(f64),
    /// Every residual is exactly zero, so the log term is minus infinity.
    PerfectFit,
}

impl BicScore {
    pub fn value(&self) -> f64 {
        match self {
            BicScore::Finite(v) => *v,
            BicScore::PerfectFit => f64::NEG_INFINITY,
        }
    }
}

/// `n log(mean squared residual) + 2 K log n`, with unweighted residuals even
/// when the fit itself was weighted.
pub fn bic_score(seg: &Segmentation, series: &DataSeries) -> BicScore {
    let n = series.len() as f64;
    let msr = seg.residuals(series).iter().map(|r| r * r).sum::<f64>() / n;
    if msr == 0.0 {
        return BicScore::PerfectFit;
    }
    BicScore::Finite(n * msr.ln() + 2.0 * seg.num_changepoints() as f64 * n.ln())
}

/// Index of the record with the smallest BIC; ties go to fewer changepoints.
pub fn select_by_bic(crops: &CropsResult, series: &DataSeries) -> Option<usize> {
    crops
        .models
        .iter()
        .map(|m| (bic_score(&m.segmentation, series).value(), m.segmentation.num_changepoints()))
        .enumerate()
        .min_by(|(_, a), (_, b)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(i, _)| i)
}

/// `(m, Qm)` pairs sorted by `m` ascending.
pub fn elbow_table(crops: &CropsResult) -> Vec<(usize, f64)> {
    let mut rows: Vec<(usize, f64)> = crops.records.iter().map(|r| (r.m, r.qm)).collect();
    rows.sort_by_key(|r| r.0);
    rows
}

/// Mean squared second difference of `y`, divided by 6.
pub fn estimate_variance_ddiff(y: &[f64]) -> Result<f64> {
    if y.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: y.len(),
        });
    }
    let sum: f64 = y
        .windows(3)
        .map(|w| {
            let dd = w[2] - 2.0 * w[1] + w[0];
            dd * dd
        })
        .sum();
    Ok(sum / (y.len() - 2) as f64 / 6.0)
}

/// Fitted variance model `log sigma^2(x) = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLinearVariance {
    pub a: f64,
    pub b: f64,
}

impl LogLinearVariance {
    pub fn variance_at(&self, x: f64) -> f64 {
        (self.a + self.b * x).exp()
    }

    /// `n a + b sum(x) + sum(r^2 exp(-(a + b x)))`.
    pub fn objective(a: f64, b: f64, residuals: &[f64], x: &[f64]) -> f64 {
        residuals
            .iter()
            .zip(x)
            .map(|(r, xi)| a + b * xi + r * r * (-(a + b * xi)).exp())
            .sum()
    }
}

/// Profile of the variance model for a fixed slope: the optimal intercept and
/// the weighted mean of the centred locations under weights `r^2 exp(-b x)`,
/// whose root in `b` is the joint optimum.
struct Profile {
    xc: Vec<f64>,
    log_r2: Vec<f64>,
    n: f64,
}

impl Profile {
    /// (log sum r^2 exp(-b xc), weighted mean of xc)
    fn at(&self, b: f64) -> (f64, f64) {
        let shift = self
            .log_r2
            .iter()
            .zip(&self.xc)
            .map(|(l, x)| l - b * x)
            .fold(f64::NEG_INFINITY, f64::max);
        let (mut total, mut first) = (0.0, 0.0);
        for (l, x) in self.log_r2.iter().zip(&self.xc) {
            let w = (l - b * x - shift).exp();
            total += w;
            first += w * x;
        }
        (shift + total.ln(), first / total)
    }
}

/// Gaussian maximum likelihood for `log sigma^2 = a + b x` given residuals.
///
/// For fixed `b` the optimal `a` is `log(mean(r^2 exp(-b x)))`; the remaining
/// one-dimensional problem is convex and is solved by bisection on its
/// derivative.
pub fn fit_loglinear_variance(residuals: &[f64], x: &[f64]) -> Result<LogLinearVariance> {
    if residuals.len() != x.len() {
        return Err(Error::Shape(format!(
            "{} residuals but {} locations",
            residuals.len(),
            x.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: x.len(),
        });
    }
    if residuals.iter().all(|r| *r == 0.0) {
        return Err(Error::DegenerateResiduals);
    }
    let n = x.len() as f64;
    let xbar = x.iter().sum::<f64>() / n;
    let (xc, log_r2): (Vec<f64>, Vec<f64>) = residuals
        .iter()
        .zip(x)
        .filter(|(r, _)| **r != 0.0)
        .map(|(r, xi)| (xi - xbar, (r * r).ln()))
        .unzip();
    let profile = Profile { xc, log_r2, n };

    let range = x.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
        - x.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let span = if range > 0.0 { 10.0 / range } else { 10.0 };
    // weighted mean of xc is decreasing in b; bracket its root
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..60 {
        if profile.at(lo).1 > 0.0 {
            break;
        }
        lo *= 2.0;
    }
    for _ in 0..60 {
        if profile.at(hi).1 < 0.0 {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if profile.at(mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b = 0.5 * (lo + hi);
    // a for centred x, then shifted back to raw x
    let a_centred = profile.at(b).0 - profile.n.ln();
    Ok(LogLinearVariance {
        a: a_centred - b * xbar,
        b,
    })
}
