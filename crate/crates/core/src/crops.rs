//! Every optimal segmentation over a penalty interval, found by solving at
//! interval endpoints and at the crossover penalties between neighbouring
//! solutions.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{DataSeries, Grid, SolverConfig};
use crate::solver::{solve, CpopResult};

/// One distinct segmentation on the penalty path.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationRecord {
    /// Smallest solved penalty at which this segmentation was returned.
    pub beta: f64,
    /// Unpenalised weighted RSS.
    pub qm: f64,
    pub penalised_cost: f64,
    /// Number of changepoints.
    pub m: usize,
    pub changepoints: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CropsResult {
    /// Sorted by `m` descending, i.e. by increasing penalty.
    pub records: Vec<SegmentationRecord>,
    /// Full solver output for each record, in the same order.
    pub models: Vec<CpopResult>,
    pub solver_calls: usize,
}

/// Default penalty range `[1.5 log n, 2.5 log n]`.
pub fn default_range(n: usize) -> (f64, f64) {
    let ln = (n as f64).ln();
    (1.5 * ln, 2.5 * ln)
}

struct PathSolver<'a> {
    series: &'a DataSeries,
    grid: &'a Grid,
    config: SolverConfig,
    cache: BTreeMap<u64, CpopResult>,
    calls: usize,
}

impl PathSolver<'_> {
    fn at(&mut self, beta: f64) -> Result<&CpopResult> {
        let key = beta.to_bits();
        if !self.cache.contains_key(&key) {
            let cfg = SolverConfig { beta, ..self.config };
            let res = solve(self.series, self.grid, cfg)?;
            self.calls += 1;
            self.cache.insert(key, res);
        }
        Ok(&self.cache[&key])
    }

    fn summary(&mut self, beta: f64) -> Result<(usize, f64)> {
        let r = self.at(beta)?;
        Ok((r.segmentation.num_changepoints(), r.segmentation.rss))
    }
}

/// Runs the penalty-path search over `[beta_min, beta_max]`. `config.beta` is
/// ignored.
pub fn crops_run(
    series: &DataSeries,
    grid: &Grid,
    beta_min: f64,
    beta_max: f64,
    config: SolverConfig,
) -> Result<CropsResult> {
    if !(beta_min.is_finite() && beta_max.is_finite() && beta_min > 0.0 && beta_min <= beta_max) {
        return Err(Error::InvalidPenaltyRange {
            min: beta_min,
            max: beta_max,
        });
    }
    let mut path = PathSolver {
        series,
        grid,
        config,
        cache: BTreeMap::new(),
        calls: 0,
    };
    path.at(beta_min)?;
    path.at(beta_max)?;

    let mut pending = vec![(beta_min, beta_max)];
    while let Some((lo, hi)) = pending.pop() {
        let (m_lo, q_lo) = path.summary(lo)?;
        let (m_hi, q_hi) = path.summary(hi)?;
        if m_lo <= m_hi + 1 {
            continue;
        }
        let crossing = (q_hi - q_lo) / (m_lo - m_hi) as f64;
        if !(crossing > lo && crossing < hi) {
            continue;
        }
        let (m_mid, _) = path.summary(crossing)?;
        if m_mid != m_lo && m_mid != m_hi {
            pending.push((crossing, hi));
            pending.push((lo, crossing));
        }
    }

    // one record per distinct changepoint set, keeping the smallest beta
    let mut solved: Vec<(f64, CpopResult)> = path
        .cache
        .into_values()
        .map(|r| (r.beta, r))
        .collect();
    solved.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut records: Vec<SegmentationRecord> = Vec::new();
    let mut models: Vec<CpopResult> = Vec::new();
    for (beta, res) in solved {
        let seg = &res.segmentation;
        if models
            .iter()
            .any(|m| m.segmentation.changepoints == seg.changepoints)
        {
            continue;
        }
        let m = seg.num_changepoints();
        records.push(SegmentationRecord {
            beta,
            qm: seg.rss,
            penalised_cost: seg.rss + m as f64 * beta,
            m,
            changepoints: seg.changepoints.clone(),
        });
        models.push(res);
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&i, &j| {
        records[j]
            .m
            .cmp(&records[i].m)
            .then(records[i].beta.total_cmp(&records[j].beta))
    });
    let records = order.iter().map(|&i| records[i].clone()).collect();
    let models = order.iter().map(|&i| models[i].clone()).collect();
    Ok(CropsResult {
        records,
        models,
        solver_calls: path.calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hinge() -> DataSeries {
        let x: Vec<f64> = (0..=10).map(f64::from).collect();
        let y = x.iter().map(|&v| f64::max(0.0, v - 5.0)).collect();
        DataSeries::new(x, y, 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_ranges() {
        let s = hinge();
        let g = Grid::from_data(&s);
        for (lo, hi) in [(0.0, 1.0), (2.0, 1.0), (-1.0, 3.0)] {
            assert!(matches!(
                crops_run(&s, &g, lo, hi, SolverConfig::new(1.0)),
                Err(Error::InvalidPenaltyRange { .. })
            ));
        }
    }

    #[test]
    fn degenerate_range_gives_one_record() {
        let s = hinge();
        let g = Grid::from_data(&s);
        let res = crops_run(&s, &g, 0.5, 0.5, SolverConfig::new(1.0)).unwrap();
        assert_eq!(res.records.len(), 1);
        assert_eq!(res.solver_calls, 1);
        let direct = solve(&s, &g, SolverConfig::new(0.5)).unwrap();
        assert_eq!(res.records[0].changepoints, direct.segmentation.changepoints);
        assert_eq!(res.records[0].qm, direct.segmentation.rss);
    }

    #[test]
    fn hinge_path_has_two_records_split_at_rss_gap() {
        let s = hinge();
        let g = Grid::from_data(&s);
        // the best straight line leaves this much RSS; the hinge leaves none
        let q0 = solve(&s, &g, SolverConfig::new(1e6)).unwrap().segmentation.rss;
        let res = crops_run(&s, &g, 0.01 * q0, 10.0 * q0, SolverConfig::new(1.0)).unwrap();
        let ms: Vec<usize> = res.records.iter().map(|r| r.m).collect();
        assert_eq!(ms, vec![1, 0]);
        let crossover = (res.records[1].qm - res.records[0].qm) / 1.0;
        assert!((crossover - q0).abs() < 1e-9 * q0);
        assert!(res.solver_calls <= 2 + 2 * res.records.len());
    }
}
