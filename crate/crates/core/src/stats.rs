//! Weighted prefix statistics over grid points and the closed-form
//! coefficients of the segment cost `C_{k,l}(alpha', alpha)`.
//!
//! Grid indices are 1-based here: index `k` refers to grid point `g_k`, and
//! index 0 is the empty prefix whose statistics are all zero. A segment
//! `(k, l)` covers the half-open interval `(g_k, g_l]`.

use crate::error::{Error, Result};
use crate::model::{DataSeries, Grid};

/// Cumulative weighted sums over the data points with `x_i <= g_k`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PrefixRow {
    /// Number of data points at or before the grid point.
    pub count: usize,
    pub s: f64,
    pub sx: f64,
    pub sxx: f64,
    pub sy: f64,
    pub syy: f64,
    pub sxy: f64,
}

/// Prefix statistics for every grid point, plus the raw points needed for
/// exact single-observation segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixStats {
    grid: Vec<f64>,
    rows: Vec<PrefixRow>,
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

/// Coefficients of `A a^2 + B a a' + C a + D + E a' + F a'^2`, where `a` is the
/// fitted value at the right end of the segment and `a'` at the left end.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SegmentCostCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl SegmentCostCoeffs {
    pub fn eval(&self, alpha_prime: f64, alpha: f64) -> f64 {
        self.a * alpha * alpha
            + self.b * alpha * alpha_prime
            + self.c * alpha
            + self.d
            + self.e * alpha_prime
            + self.f * alpha_prime * alpha_prime
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            a: self.a * factor,
            b: self.b * factor,
            c: self.c * factor,
            d: self.d * factor,
            e: self.e * factor,
            f: self.f * factor,
        }
    }

    /// Exact coefficients for a single observation at relative position
    /// `u = (x - g_k) / (g_l - g_k)`.
    fn single_point(u: f64, y: f64, w: f64) -> Self {
        let v = 1.0 - u;
        Self {
            a: w * u * u,
            b: 2.0 * w * u * v,
            c: -2.0 * w * y * u,
            d: w * y * y,
            e: -2.0 * w * y * v,
            f: w * v * v,
        }
    }
}

/// One pass over data and grid, `O(n + N)`.
pub fn build_prefix_stats(series: &DataSeries, grid: &Grid) -> PrefixStats {
    let (x, y) = (series.x(), series.y());
    let w: Vec<f64> = (0..series.len()).map(|i| series.weight(i)).collect();
    let mut rows = Vec::with_capacity(grid.len() + 1);
    rows.push(PrefixRow::default());
    let mut acc = PrefixRow::default();
    let mut i = 0;
    for &g in grid.points() {
        while i < x.len() && x[i] <= g {
            let (xi, yi, wi) = (x[i], y[i], w[i]);
            acc.count += 1;
            acc.s += wi;
            acc.sx += wi * xi;
            acc.sxx += wi * xi * xi;
            acc.sy += wi * yi;
            acc.syy += wi * yi * yi;
            acc.sxy += wi * xi * yi;
            i += 1;
        }
        rows.push(acc);
    }
    PrefixStats {
        grid: grid.points().to_vec(),
        rows,
        x: x.to_vec(),
        y: y.to_vec(),
        w,
    }
}

impl PrefixStats {
    /// Number of grid points `N`.
    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    /// Location of grid point `k` (1-based).
    pub fn location(&self, k: usize) -> f64 {
        self.grid[k - 1]
    }

    /// Statistics for grid index `k` in `0..=N`.
    pub fn row(&self, k: usize) -> &PrefixRow {
        &self.rows[k]
    }

    /// Location of observation `i` (0-based).
    pub fn point_at(&self, i: usize) -> f64 {
        self.x[i]
    }

    /// Number of observations in `(g_k, g_l]`.
    pub fn count_between(&self, k: usize, l: usize) -> usize {
        self.rows[l].count - self.rows[k].count
    }

    fn check_segment(&self, k: usize, l: usize) -> Result<()> {
        let n = self.grid_len();
        if k == 0 || k >= l || l > n {
            return Err(Error::InvalidSegment { k, l, n });
        }
        Ok(())
    }

    /// Coefficients of `C_{k,l}` from statistic differences, `O(1)`.
    pub fn segment_cost_coeffs(&self, k: usize, l: usize) -> Result<SegmentCostCoeffs> {
        self.check_segment(k, l)?;
        let (lo, hi) = (&self.rows[k], &self.rows[l]);
        let (gk, gl) = (self.location(k), self.location(l));
        let h = gl - gk;
        match hi.count - lo.count {
            // nothing to fit: C == 0
            0 => return Ok(SegmentCostCoeffs::default()),
            1 => {
                let i = lo.count;
                return Ok(SegmentCostCoeffs::single_point(
                    (self.x[i] - gk) / h,
                    self.y[i],
                    self.w[i],
                ));
            }
            _ => {}
        }
        let ds = hi.s - lo.s;
        let dx = hi.sx - lo.sx;
        let dxx = hi.sxx - lo.sxx;
        let dy = hi.sy - lo.sy;
        let dyy = hi.syy - lo.syy;
        let dxy = hi.sxy - lo.sxy;
        let h2 = h * h;
        // sum w (x - g_k)^2, sum w (g_l - x)^2 and sum w (x - g_k)(g_l - x)
        let right = (dxx - 2.0 * gk * dx + gk * gk * ds).max(0.0);
        let left = (dxx - 2.0 * gl * dx + gl * gl * ds).max(0.0);
        let cross = (gk + gl) * dx - dxx - gk * gl * ds;
        Ok(SegmentCostCoeffs {
            a: right / h2,
            b: 2.0 * cross / h2,
            c: -2.0 * (dxy - gk * dy) / h,
            d: dyy.max(0.0),
            e: -2.0 * (gl * dy - dxy) / h,
            f: left / h2,
        })
    }

    /// Direct weighted sum of squared residuals of the line through
    /// `(g_k, alpha_prime)` and `(g_l, alpha)` over the data in `(g_k, g_l]`.
    pub fn segment_cost_eval(
        &self,
        k: usize,
        l: usize,
        alpha_prime: f64,
        alpha: f64,
    ) -> Result<f64> {
        self.check_segment(k, l)?;
        let (gk, gl) = (self.location(k), self.location(l));
        let range = self.rows[k].count..self.rows[l].count;
        Ok(range
            .map(|i| {
                let fit = alpha_prime + (alpha - alpha_prime) * (self.x[i] - gk) / (gl - gk);
                let r = self.y[i] - fit;
                self.w[i] * r * r
            })
            .sum())
    }
}

/// Free-function form of [`PrefixStats::segment_cost_coeffs`].
pub fn segment_cost_coeffs(stats: &PrefixStats, k: usize, l: usize) -> Result<SegmentCostCoeffs> {
    stats.segment_cost_coeffs(k, l)
}

/// Direct evaluation of `C_{k,l}(alpha', alpha)` from the raw data; the
/// reference against which the coefficient form is checked.
pub fn segment_cost_eval(
    series: &DataSeries,
    grid: &Grid,
    k: usize,
    l: usize,
    alpha_prime: f64,
    alpha: f64,
) -> Result<f64> {
    let n = grid.len();
    if k == 0 || k >= l || l > n {
        return Err(Error::InvalidSegment { k, l, n });
    }
    let g = grid.points();
    let (gk, gl) = (g[k - 1], g[l - 1]);
    Ok(series
        .x()
        .iter()
        .zip(series.y())
        .zip(series.sd())
        .filter(|((&x, _), _)| x > gk && x <= gl)
        .map(|((&x, &y), &sd)| {
            let r = y - alpha_prime - (alpha - alpha_prime) * (x - gk) / (gl - gk);
            r * r / (sd * sd)
        })
        .sum())
}
