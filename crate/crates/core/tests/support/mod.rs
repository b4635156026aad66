//! Test-only oracles and instance generators. Nothing here calls the solver.
#![allow(dead_code)]

use cpop_core::{DataSeries, Grid};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Best knot values for a fixed set of knot locations, by weighted least
/// squares on the hat-function basis. Returns (knot values, weighted RSS).
pub fn fit_knots(series: &DataSeries, knots: &[f64]) -> (Vec<f64>, f64) {
    let (x, y, sd) = (series.x(), series.y(), series.sd());
    let n = x.len();
    let p = knots.len();
    let mut design = DMatrix::<f64>::zeros(n, p);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        let w = 1.0 / sd[i];
        let j = knots
            .windows(2)
            .position(|k| x[i] <= k[1])
            .unwrap_or(p - 2);
        let (t0, t1) = (knots[j], knots[j + 1]);
        let u = (x[i] - t0) / (t1 - t0);
        design[(i, j)] = w * (1.0 - u);
        design[(i, j + 1)] = w * u;
        rhs[i] = w * y[i];
    }
    let svd = design.clone().svd(true, true);
    let coef = svd.solve(&rhs, 1e-12).expect("svd solve");
    let resid = &design * &coef - &rhs;
    (coef.iter().copied().collect(), resid.norm_squared())
}

#[derive(Debug, Clone)]
pub struct OracleFit {
    pub changepoints: Vec<f64>,
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub rss: f64,
    pub cost: f64,
}

/// Exhaustive search over all changepoint subsets of the interior
/// candidates, honouring a minimum distance between successive changes.
/// Returns every feasible configuration sorted by cost.
pub fn brute_force(series: &DataSeries, grid: &Grid, beta: f64, minseglen: f64) -> Vec<OracleFit> {
    let x = series.x();
    let (first, last) = (x[0], x[x.len() - 1]);
    let g = grid.augmented(series);
    let pts = g.points();
    let (lo, hi) = (pts[0], pts[pts.len() - 1]);
    let interior: Vec<f64> = pts[1..pts.len() - 1]
        .iter()
        .copied()
        .filter(|&v| v > first && v < last)
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << interior.len()) {
        let cps: Vec<f64> = interior
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, v)| *v)
            .collect();
        if cps.windows(2).any(|w| w[1] - w[0] < minseglen) {
            continue;
        }
        let mut knots = vec![lo];
        knots.extend(&cps);
        knots.push(hi);
        let (values, rss) = fit_knots(series, &knots);
        let cost = rss + beta * cps.len() as f64;
        out.push(OracleFit {
            changepoints: cps,
            knots,
            values,
            rss,
            cost,
        });
    }
    out.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    out
}

/// Whether `changepoints` is one of the configurations whose cost ties the
/// optimum within `tol` (relative).
pub fn is_tied_optimum(fits: &[OracleFit], changepoints: &[f64], tol: f64) -> bool {
    let best = fits[0].cost;
    fits.iter()
        .take_while(|f| f.cost - best <= tol * best.abs().max(1.0))
        .any(|f| f.changepoints == changepoints)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// A small random instance: uneven or even locations, a random
/// piecewise-linear signal plus noise, homoscedastic or heteroscedastic sd,
/// and a grid of at most `max_grid` interior candidates drawn from the data
/// locations or from the continuum.
pub fn random_instance(rng: &mut ChaCha8Rng, n_range: (usize, usize), max_grid: usize) -> (DataSeries, Grid) {
    let n = rng.random_range(n_range.0..=n_range.1);
    let x: Vec<f64> = if rng.random_bool(0.5) {
        (0..n).map(|i| i as f64).collect()
    } else {
        let mut acc = rng.random_range(-5.0..5.0);
        (0..n)
            .map(|_| {
                acc += rng.random_range(0.1..2.0);
                acc
            })
            .collect()
    };
    let (x0, x1) = (x[0], x[n - 1]);
    let kinks: Vec<(f64, f64)> = (0..rng.random_range(0..4))
        .map(|_| (rng.random_range(x0..x1), rng.random_range(-2.0..2.0)))
        .collect();
    let slope0 = rng.random_range(-1.0..1.0);
    let sd: Vec<f64> = if rng.random_bool(0.5) {
        vec![rng.random_range(0.3..2.0); n]
    } else {
        (0..n).map(|_| rng.random_range(0.3..2.0)).collect()
    };
    let y: Vec<f64> = x
        .iter()
        .zip(&sd)
        .map(|(&xi, &s)| {
            let mean: f64 = slope0 * (xi - x0)
                + kinks.iter().map(|(c, d)| d * (xi - c).max(0.0)).sum::<f64>();
            mean + s * rng.random_range(-1.5..1.5)
        })
        .collect();
    let series = DataSeries::new(x.clone(), y, sd).unwrap();
    let m = rng.random_range(1..=max_grid);
    let mut grid: Vec<f64> = if rng.random_bool(0.5) {
        let mut idx: Vec<usize> = (1..n - 1).collect();
        for i in (1..idx.len()).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }
        idx.into_iter().take(m).map(|i| x[i]).collect()
    } else {
        (0..m).map(|_| rng.random_range(x0..x1)).collect()
    };
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.is_empty() {
        grid.push(0.5 * (x0 + x1));
    }
    (series, Grid::new(grid).unwrap())
}

/// Hinge data sampled at integer locations with changes at some of them.
pub fn random_hinge(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let k = rng.random_range(1..=4);
    let mut cps: Vec<f64> = Vec::new();
    while cps.len() < k {
        let c = rng.random_range(3..(n - 3)) as f64;
        if cps.iter().all(|&d| (d - c).abs() >= 3.0) {
            cps.push(c);
        }
    }
    cps.sort_by(f64::total_cmp);
    let slopes: Vec<f64> = cps
        .iter()
        .map(|_| {
            let mag = rng.random_range(0.1..1.0);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    (cps, slopes, (0..n).map(|i| i as f64).collect())
}
