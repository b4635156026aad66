//! Input and result types: observations, candidate grids, solver settings and
//! fitted piecewise-linear segmentations.

use crate::error::{Error, Result};

/// Per-observation noise standard deviations, either shared or one per point.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseScale {
    Constant(f64),
    PerPoint(Vec<f64>),
}

impl NoiseScale {
    fn expand(self, n: usize) -> Result<Vec<f64>> {
        match self {
            NoiseScale::Constant(sd) => Ok(vec![sd; n]),
            NoiseScale::PerPoint(sd) if sd.len() == n => Ok(sd),
            NoiseScale::PerPoint(sd) if sd.len() == 1 => Ok(vec![sd[0]; n]),
            NoiseScale::PerPoint(sd) => Err(Error::Shape(format!(
                "sd has length {} but there are {n} observations",
                sd.len()
            ))),
        }
    }
}

impl From<f64> for NoiseScale {
    fn from(sd: f64) -> Self {
        NoiseScale::Constant(sd)
    }
}

impl From<Vec<f64>> for NoiseScale {
    fn from(sd: Vec<f64>) -> Self {
        NoiseScale::PerPoint(sd)
    }
}

/// Ordered observations `(x_i, y_i)` with noise standard deviations `sd_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSeries {
    x: Vec<f64>,
    y: Vec<f64>,
    sd: Vec<f64>,
}

impl DataSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>, sd: impl Into<NoiseScale>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Shape(format!(
                "x has length {} but y has length {}",
                x.len(),
                y.len()
            )));
        }
        let n = x.len();
        let sd = sd.into().expand(n)?;
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, got: n });
        }
        for (field, values) in [("x", &x), ("y", &y)] {
            if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { field, index });
            }
        }
        if let Some(index) = sd.iter().position(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidNoiseScale {
                index,
                value: sd[index],
            });
        }
        if let Some(index) = x.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedData {
                index,
                prev: x[index],
                next: x[index + 1],
            });
        }
        Ok(Self { x, y, sd })
    }

    /// Observations at locations `0, 1, ..., n - 1`.
    pub fn evenly_spaced(y: Vec<f64>, sd: impl Into<NoiseScale>) -> Result<Self> {
        let x = (0..y.len()).map(|i| i as f64).collect();
        Self::new(x, y, sd)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sd(&self) -> &[f64] {
        &self.sd
    }

    /// Inverse-variance weight `1 / sd_i^2` of observation `i`.
    pub fn weight(&self, i: usize) -> f64 {
        1.0 / (self.sd[i] * self.sd[i])
    }

    /// Same locations and noise, different responses.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.x.clone(), y, NoiseScale::PerPoint(self.sd.clone()))
    }

    /// Same locations and responses, different noise scale.
    pub fn with_sd(&self, sd: impl Into<NoiseScale>) -> Result<Self> {
        Self::new(self.x.clone(), self.y.clone(), sd)
    }

    /// Default penalty `2 log n`.
    pub fn default_beta(&self) -> f64 {
        2.0 * (self.len() as f64).ln()
    }
}

/// Ordered candidate changepoint locations, independent of the data locations.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if let Some(index) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                field: "grid",
                index,
            });
        }
        if let Some(i) = points.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "grid must be strictly increasing (g[{i}] = {} , g[{}] = {})",
                points[i],
                i + 1,
                points[i + 1]
            )));
        }
        Ok(Self(points))
    }

    /// The data locations themselves.
    pub fn from_data(series: &DataSeries) -> Self {
        Self(series.x().to_vec())
    }

    /// `count` evenly spaced points spanning `[lo, hi]`, endpoints included.
    pub fn even(count: usize, lo: f64, hi: f64) -> Result<Self> {
        match count {
            0 => Err(Error::InvalidGrid("grid is empty".into())),
            1 => Self::new(vec![lo]),
            _ => {
                let step = (hi - lo) / (count - 1) as f64;
                let mut pts: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
                pts[count - 1] = hi;
                Self::new(pts)
            }
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Prepends `x_1` and/or appends `x_n` so the grid covers the data.
    pub fn augmented(&self, series: &DataSeries) -> Grid {
        let x = series.x();
        let (first, last) = (x[0], x[x.len() - 1]);
        let mut pts = Vec::with_capacity(self.0.len() + 2);
        if self.0[0] > first {
            pts.push(first);
        }
        pts.extend_from_slice(&self.0);
        if pts[pts.len() - 1] < last {
            pts.push(last);
        }
        Grid(pts)
    }
}

/// Penalty and segment-length settings for one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Penalty paid per changepoint.
    pub beta: f64,
    /// Minimum x-distance between successive changepoints.
    pub minseglen: f64,
    /// Keep candidate pruning on when `minseglen > 0` (may be sub-optimal).
    pub prune_approx: bool,
    /// Candidate pruning of last-change locations. Only exact when `minseglen == 0`.
    pub pelt: bool,
}

impl SolverConfig {
    pub fn new(beta: f64) -> Self {
        Self {
            beta,
            minseglen: 0.0,
            prune_approx: false,
            pelt: true,
        }
    }

    pub fn with_minseglen(mut self, minseglen: f64) -> Self {
        self.minseglen = minseglen;
        self
    }

    pub fn with_prune_approx(mut self, prune_approx: bool) -> Self {
        self.prune_approx = prune_approx;
        self
    }

    pub fn with_pelt(mut self, pelt: bool) -> Self {
        self.pelt = pelt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidPenalty(self.beta));
        }
        if !(self.minseglen.is_finite() && self.minseglen >= 0.0) {
            return Err(Error::InvalidMinSegLen(self.minseglen));
        }
        Ok(())
    }

    /// Whether last-change candidates are pruned in this configuration.
    pub fn candidate_pruning(&self) -> bool {
        self.pelt && (self.minseglen == 0.0 || self.prune_approx)
    }
}

/// A validated problem instance with the grid augmented to cover the data.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub series: DataSeries,
    pub grid: Grid,
    pub config: SolverConfig,
}

/// Checks the configuration and augments the grid; series and grid are valid
/// by construction.
pub fn validate(series: DataSeries, grid: &Grid, config: SolverConfig) -> Result<Problem> {
    config.validate()?;
    let grid = grid.augmented(&series);
    Ok(Problem {
        series,
        grid,
        config,
    })
}

/// A `(location, value)` pair of the fitted piecewise-linear mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot {
    pub x: f64,
    pub value: f64,
}

/// Estimated changepoints and the continuous piecewise-linear fit through them.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    /// Interior knots only; the boundary knots are not changes.
    pub changepoints: Vec<f64>,
    /// Boundary and interior knots, strictly increasing in location.
    pub knots: Vec<Knot>,
    /// Penalised cost `rss + K * beta`.
    pub cost: f64,
    /// Weighted residual sum of squares of the fit.
    pub rss: f64,
}

impl Segmentation {
    /// Builds a segmentation from knots, computing the weighted RSS against `series`.
    pub fn from_knots(knots: Vec<Knot>, series: &DataSeries, beta: f64) -> Self {
        let changepoints = if knots.len() > 2 {
            knots[1..knots.len() - 1].iter().map(|k| k.x).collect()
        } else {
            Vec::new()
        };
        let mut seg = Segmentation {
            changepoints,
            knots,
            cost: 0.0,
            rss: 0.0,
        };
        seg.rss = seg.weighted_rss(series);
        seg.cost = seg.rss + seg.changepoints.len() as f64 * beta;
        seg
    }

    pub fn num_changepoints(&self) -> usize {
        self.changepoints.len()
    }

    /// Fitted mean at each query location. Outside the knot range the end
    /// segments are extended linearly.
    pub fn evaluate(&self, xq: &[f64]) -> Vec<f64> {
        xq.iter().map(|&x| self.evaluate_at(x)).collect()
    }

    pub fn evaluate_at(&self, x: f64) -> f64 {
        let knots = &self.knots;
        let last = knots.len() - 1;
        if last == 0 {
            return knots[0].value;
        }
        // index of the first knot strictly right of x
        let right = knots.partition_point(|k| k.x <= x);
        let seg = match right {
            0 => 0,
            r if r > last => {
                if knots[last].x == x {
                    return knots[last].value;
                }
                last - 1
            }
            r => {
                if knots[r - 1].x == x {
                    return knots[r - 1].value;
                }
                r - 1
            }
        };
        let (k0, k1) = (knots[seg], knots[seg + 1]);
        let slope = (k1.value - k0.value) / (k1.x - k0.x);
        if x > k1.x {
            k1.value + slope * (x - k1.x)
        } else {
            k0.value + slope * (x - k0.x)
        }
    }

    /// Unweighted residuals `y_i - f(x_i)`.
    pub fn residuals(&self, series: &DataSeries) -> Vec<f64> {
        series
            .y()
            .iter()
            .zip(self.evaluate(series.x()))
            .map(|(y, f)| y - f)
            .collect()
    }

    /// `sum_i (y_i - f(x_i))^2 / sd_i^2`.
    pub fn weighted_rss(&self, series: &DataSeries) -> f64 {
        self.residuals(series)
            .iter()
            .zip(series.sd())
            .map(|(r, s)| (r / s) * (r / s))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(knots: &[(f64, f64)]) -> Segmentation {
        Segmentation {
            changepoints: Vec::new(),
            knots: knots.iter().map(|&(x, value)| Knot { x, value }).collect(),
            cost: 0.0,
            rss: 0.0,
        }
    }

    #[test]
    fn accepts_valid_series_and_keeps_grid() {
        let s = DataSeries::new(vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 2.0], 1.0).unwrap();
        let p = validate(s.clone(), &Grid::from_data(&s), SolverConfig::new(1.0)).unwrap();
        assert_eq!(p.grid.points(), &[1.0, 2.0, 3.0]);
        assert_eq!(p.series.sd(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn rejects_unsorted_x() {
        let err = DataSeries::new(vec![3.0, 2.0, 1.0], vec![0.0, 1.0, 2.0], 1.0).unwrap_err();
        assert!(matches!(err, Error::UnsortedData { index: 0, .. }));
        assert!(err.to_string().starts_with("unsorted data"));
    }

    #[test]
    fn rejects_bad_noise_shape_and_size() {
        let err = DataSeries::new(vec![1.0, 2.0], vec![0.0, 1.0], vec![1.0, 0.0]).unwrap_err();
        assert!(err.to_string().starts_with("invalid noise scale"));
        let err = DataSeries::new(vec![1.0, 2.0], vec![0.0, 1.0], -1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidNoiseScale { .. }));
        let err = DataSeries::new(vec![1.0, 2.0], vec![0.0], 1.0).unwrap_err();
        assert!(err.to_string().starts_with("shape error"));
        let err = DataSeries::new(vec![1.0, 2.0], vec![0.0, 1.0], vec![1.0; 3]).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
        let err = DataSeries::new(vec![1.0], vec![0.0], 1.0).unwrap_err();
        assert!(err.to_string().starts_with("insufficient data"));
    }

    #[test]
    fn grid_is_augmented_to_cover_data() {
        let s = DataSeries::new(vec![1.0, 2.0, 3.0], vec![0.0; 3], 1.0).unwrap();
        let p = validate(s, &Grid::new(vec![2.0]).unwrap(), SolverConfig::new(1.0)).unwrap();
        assert_eq!(p.grid.points(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_bad_config_and_grid() {
        assert!(SolverConfig::new(0.0).validate().is_err());
        assert!(SolverConfig::new(1.0).with_minseglen(-1.0).validate().is_err());
        assert!(Grid::new(vec![1.0, 1.0]).is_err());
        assert!(Grid::new(vec![]).is_err());
    }

    #[test]
    fn even_grid_hits_both_ends() {
        let g = Grid::even(5, 0.0, 1.0).unwrap();
        assert_eq!(g.points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn evaluates_lines_and_hinges() {
        let line = seg(&[(0.0, 0.0), (10.0, 10.0)]);
        assert_eq!(line.evaluate(&[5.0]), vec![5.0]);
        assert!(line.evaluate(&[]).is_empty());
        let hinge = seg(&[(0.0, 0.0), (5.0, 5.0), (10.0, 5.0)]);
        assert_eq!(hinge.evaluate(&[2.5, 7.5]), vec![2.5, 5.0]);
    }

    #[test]
    fn extrapolates_with_end_slopes() {
        let line = seg(&[(0.0, 0.0), (10.0, 10.0)]);
        // hand extension of y = x
        assert_eq!(line.evaluate_at(12.0), 12.0);
        assert_eq!(line.evaluate_at(-3.0), -3.0);
        let hinge = seg(&[(0.0, 1.0), (5.0, 6.0), (10.0, 4.0)]);
        assert!((hinge.evaluate_at(12.0) - 3.2).abs() < 1e-12);
        assert!((hinge.evaluate_at(-2.0) - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn knots_evaluate_exactly() {
        let s = seg(&[(0.1, 0.3), (0.7, -1.9), (2.3, 4.1e3), (9.9, 1.0 / 3.0)]);
        for k in &s.knots {
            assert_eq!(s.evaluate_at(k.x), k.value);
        }
    }

    #[test]
    fn residuals_of_constant_fit() {
        let series = DataSeries::new(vec![0.0, 1.0], vec![1.0, -1.0], 1.0).unwrap();
        let zero = seg(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(zero.residuals(&series), vec![1.0, -1.0]);
        let exact = seg(&[(0.0, 1.0), (1.0, -1.0)]);
        assert_eq!(exact.residuals(&series), vec![0.0, 0.0]);
    }
}
