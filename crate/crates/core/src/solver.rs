//! The dynamic program over grid points.
//!
//! `F_l(alpha)` is the smallest penalised cost of the data up to grid point
//! `g_l` given that the fitted mean equals `alpha` there. It is kept as an
//! [`Envelope`] of quadratics, each tagged with the previous knot it came from,
//! so the optimal segmentation can be read back once `F_N` is known.
//!
//! The first grid point anchors the fit. Its cost-to-go is the residual of any
//! observation sitting exactly on it, minus `beta`, so that the first segment
//! is not charged a penalty.

use crate::error::{Error, Result};
use crate::model::{validate, DataSeries, Grid, Knot, Segmentation, SolverConfig};
use crate::quadratic::{eliminate_alpha_prime, envelope_min, BackMap, Envelope, Piece, Provenance, Quadratic};
use crate::stats::{build_prefix_stats, PrefixStats, SegmentCostCoeffs};

/// Per-step sizes, for inspecting how much pruning did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepDiagnostics {
    /// 1-based grid index of the step.
    pub grid_index: usize,
    /// Candidate last-change indices considered at this step.
    pub candidates: usize,
    /// Pieces in `F_l` after envelope pruning.
    pub pieces: usize,
    /// Candidates dropped by last-change pruning after this step.
    pub pruned: usize,
}

/// Output of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct CpopResult {
    pub segmentation: Segmentation,
    pub beta: f64,
    /// `min_alpha F_N(alpha)` as computed by the recursion.
    pub dp_cost: f64,
    /// The augmented grid the recursion ran on.
    pub grid: Grid,
    pub config: SolverConfig,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Candidate pruning was used under a minimum segment length, so the
    /// result may be sub-optimal.
    pub approximate: bool,
}

/// Recursion state: one envelope per processed grid index and the set of
/// last-change candidates still alive.
#[derive(Debug, Clone)]
pub struct Solver {
    stats: PrefixStats,
    config: SolverConfig,
    first_x: f64,
    last_x: f64,
    envelopes: Vec<Option<Envelope>>,
    candidates: Vec<usize>,
    diagnostics: Vec<StepDiagnostics>,
}

/// Slack on the penalty in the domination test so that rounding never prunes
/// a candidate that ties.
const PRUNE_SLACK: f64 = 1e-9;

impl Solver {
    /// Prepares the recursion for a validated (augmented) grid.
    pub fn new(series: &DataSeries, grid: &Grid, config: SolverConfig) -> Self {
        let stats = build_prefix_stats(series, grid);
        let n_grid = grid.len();
        let beta = config.beta;
        let base = match stats.row(1).count {
            0 => Quadratic::constant(-beta),
            _ => {
                let (y, w) = (series.y()[0], series.weight(0));
                Quadratic::new(w * y * y - beta, -2.0 * w * y, w)
            }
        };
        let mut envelopes = vec![None; n_grid + 1];
        envelopes[1] = Some(Envelope::from_pieces(vec![Piece::base(base)]));
        Self {
            stats,
            config,
            first_x: series.x()[0],
            last_x: series.x()[series.len() - 1],
            envelopes,
            candidates: vec![1],
            diagnostics: Vec::new(),
        }
    }

    pub fn stats(&self) -> &PrefixStats {
        &self.stats
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn envelope(&self, l: usize) -> Option<&Envelope> {
        self.envelopes.get(l).and_then(Option::as_ref)
    }

    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.diagnostics
    }

    /// Grid indices the recursion visits: interior candidates strictly inside
    /// the data range, then the final grid point.
    pub fn schedule(&self) -> Vec<usize> {
        let n = self.stats.grid_len();
        let mut steps: Vec<usize> = (2..n)
            .filter(|&l| {
                let g = self.stats.location(l);
                g > self.first_x && g < self.last_x
            })
            .collect();
        steps.push(n);
        steps
    }

    /// Whether the data between `g_l` and the next scheduled grid point is
    /// empty or a single observation sitting on that grid point.
    fn bridgeable_after(&self, l: usize) -> bool {
        let n = self.stats.grid_len();
        let next = (l + 1..=n).find(|&m| {
            let g = self.stats.location(m);
            m == n || (g > self.first_x && g < self.last_x)
        });
        let Some(next) = next else { return false };
        match self.stats.count_between(l, next) {
            0 => true,
            1 => self.stats.point_at(self.stats.row(next).count - 1) == self.stats.location(next),
            _ => false,
        }
    }

    fn admissible(&self, k: usize, l: usize) -> bool {
        k == 1
            || l == self.stats.grid_len()
            || self.stats.location(l) - self.stats.location(k) >= self.config.minseglen
    }

    /// Eliminated contributions of every piece of `F_k` to `F_l`.
    fn contributions(&self, k: usize, l: usize) -> Result<Vec<Piece>> {
        let env = self.envelopes[k]
            .as_ref()
            .ok_or(Error::BrokenProvenance(k))?;
        let coeffs = self.stats.segment_cost_coeffs(k, l)?;
        let single = self.stats.count_between(k, l) == 1;
        env.pieces()
            .iter()
            .enumerate()
            .map(|(parent, p)| {
                let (q, backmap) = if single && p.q.is_constant() && coeffs.f > 0.0 {
                    single_point_from_constant(&p.q, &coeffs, self.config.beta)
                } else {
                    eliminate_alpha_prime(&p.q, &coeffs, self.config.beta)?
                };
                Ok(Piece {
                    q,
                    provenance: Some(Provenance { origin: k, parent }),
                    backmap,
                })
            })
            .collect()
    }

    /// Builds `F_l` from every admissible candidate, then drops candidates
    /// that can never again be the last change.
    pub fn recursion_step(&mut self, l: usize) -> Result<()> {
        let mut per_candidate: Vec<(usize, Vec<Piece>)> = Vec::with_capacity(self.candidates.len());
        for &k in &self.candidates {
            if k < l && self.admissible(k, l) {
                per_candidate.push((k, self.contributions(k, l)?));
            }
        }
        let all: Vec<Piece> = per_candidate
            .iter()
            .flat_map(|(_, pieces)| pieces.iter().copied())
            .collect();
        let env = Envelope::from_pieces(all);
        if env.is_empty() {
            return Err(Error::EmptyEnvelope);
        }

        let considered = self.candidates.len();
        let mut pruned = 0;
        if self.config.candidate_pruning() && l < self.stats.grid_len() {
            let margin = self.config.beta * (1.0 + PRUNE_SLACK);
            // min-based test, valid when the next step's segment can be
            // bridged without changing the cost of the data it holds
            let min_gap = if self.bridgeable_after(l) {
                let (env_min, _, _) = envelope_min(&env)?;
                Some(env_min + 2.0 * margin)
            } else {
                None
            };
            let dead: Vec<usize> = per_candidate
                .iter()
                .filter(|(_, pieces)| {
                    let by_min = min_gap.is_some_and(|bound| {
                        pieces
                            .iter()
                            .all(|p| p.q.minimum().is_ok_and(|(v, _)| v > bound))
                    });
                    by_min || pieces.iter().all(|p| env.dominated_by(&p.q, margin))
                })
                .map(|(k, _)| *k)
                .collect();
            pruned = dead.len();
            self.candidates.retain(|k| !dead.contains(k));
        }
        self.diagnostics.push(StepDiagnostics {
            grid_index: l,
            candidates: considered,
            pieces: env.len(),
            pruned,
        });
        self.envelopes[l] = Some(env);
        if l < self.stats.grid_len() {
            self.candidates.push(l);
        }
        Ok(())
    }

    /// Runs every step of the schedule.
    pub fn run(&mut self) -> Result<()> {
        for l in self.schedule() {
            self.recursion_step(l)?;
        }
        Ok(())
    }

    /// Reads the optimal knots back from `F_N`, right to left. Returns the
    /// knots and `min F_N`.
    pub fn backtrack(&self) -> Result<(Vec<Knot>, f64)> {
        let n = self.stats.grid_len();
        let last = self.envelopes[n].as_ref().ok_or(Error::BrokenProvenance(n))?;
        let (value, mut alpha, idx) = envelope_min(last)?;
        let mut knots = vec![Knot {
            x: self.stats.location(n),
            value: alpha,
        }];
        let mut piece = last.pieces()[idx];
        let mut at = n;
        while let Some(Provenance { origin, parent }) = piece.provenance {
            if origin >= at {
                return Err(Error::BrokenProvenance(at));
            }
            alpha = piece.backmap.apply(alpha);
            knots.push(Knot {
                x: self.stats.location(origin),
                value: alpha,
            });
            piece = *self.envelopes[origin]
                .as_ref()
                .and_then(|e| e.pieces().get(parent))
                .ok_or(Error::BrokenProvenance(origin))?;
            at = origin;
        }
        if at != 1 {
            return Err(Error::BrokenProvenance(at));
        }
        knots.reverse();
        Ok((knots, value))
    }
}

/// A constant piece followed by a segment holding one observation strictly
/// left of `g_l`: the line can always pass through the point, so the result is
/// the constant plus the penalty.
fn single_point_from_constant(q: &Quadratic, c: &SegmentCostCoeffs, beta: f64) -> (Quadratic, BackMap) {
    let denom = 2.0 * c.f;
    (
        Quadratic::constant(q.a + beta),
        BackMap {
            r: -c.e / denom,
            s: -c.b / denom,
        },
    )
}

/// Minimises the penalised cost over all changepoint subsets of the grid.
pub fn solve(series: &DataSeries, grid: &Grid, config: SolverConfig) -> Result<CpopResult> {
    let problem = validate(series.clone(), grid, config)?;
    let mut solver = Solver::new(&problem.series, &problem.grid, config);
    solver.run()?;
    let (knots, dp_cost) = solver.backtrack()?;
    let segmentation = Segmentation::from_knots(knots, &problem.series, config.beta);
    Ok(CpopResult {
        segmentation,
        beta: config.beta,
        dp_cost,
        grid: problem.grid,
        config,
        diagnostics: solver.diagnostics,
        approximate: config.minseglen > 0.0 && config.candidate_pruning(),
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
    fn line_has_no_changes() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y = x.iter().map(|v| 0.5 * v - 2.0).collect();
        let s = DataSeries::new(x, y, 1.0).unwrap();
        let r = solve(&s, &Grid::from_data(&s), SolverConfig::new(3.0)).unwrap();
        assert!(r.segmentation.changepoints.is_empty());
        assert!(r.segmentation.rss < 1e-20);
        assert!(r.segmentation.cost < 1e-20);
        assert!(r.dp_cost.abs() < 1e-9);
    }

    #[test]
    fn noiseless_hinge() {
        let s = hinge();
        let r = solve(&s, &Grid::from_data(&s), SolverConfig::new(0.1)).unwrap();
        let seg = &r.segmentation;
        assert_eq!(seg.changepoints, vec![5.0]);
        assert!(seg.rss < 1e-20);
        assert!((seg.cost - 0.1).abs() < 1e-12);
        let want = [(0.0, 0.0), (5.0, 0.0), (10.0, 5.0)];
        for (k, (x, v)) in seg.knots.iter().zip(want) {
            assert_eq!(k.x, x);
            assert!((k.value - v).abs() < 1e-9);
        }
    }

    #[test]
    fn first_step_uses_only_the_anchor() {
        let s = hinge();
        let mut solver = Solver::new(&s, &Grid::from_data(&s), SolverConfig::new(1.0));
        solver.recursion_step(2).unwrap();
        let env = solver.envelope(2).unwrap();
        assert!(env.pieces().iter().all(|p| p.key() == (1, 0)));
        assert_eq!(solver.candidates(), &[1, 2]);
    }

    #[test]
    fn empty_segment_carries_minimum_plus_penalty() {
        let s = DataSeries::new(vec![0.0, 1.0, 4.0, 5.0], vec![0.0, 1.0, 3.0, 2.0], 1.0).unwrap();
        let grid = Grid::new(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let beta = 0.7;
        let mut solver = Solver::new(&s, &grid, SolverConfig::new(beta).with_pelt(false));
        for l in 2..=4 {
            solver.recursion_step(l).unwrap();
        }
        // from g_3 = 2 to g_4 = 3 there is no data
        let (min3, _, _) = envelope_min(solver.envelope(3).unwrap()).unwrap();
        let from3: Vec<_> = solver
            .envelope(4)
            .unwrap()
            .pieces()
            .iter()
            .filter(|p| p.key().0 == 3)
            .collect();
        assert!(!from3.is_empty());
        for p in from3 {
            assert!(p.q.is_constant());
            assert!((p.q.a - (min3 + beta)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_observation_anchor_gap() {
        // grid starts left of the data, so the anchor carries no observation
        let s = DataSeries::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], 1.0).unwrap();
        let r = solve(&s, &Grid::new(vec![0.0, 2.0, 3.0]).unwrap(), SolverConfig::new(1.0)).unwrap();
        assert!(r.segmentation.changepoints.is_empty());
        assert!(r.segmentation.rss < 1e-20);
        assert_eq!(r.segmentation.knots[0].x, 0.0);
        assert!((r.segmentation.evaluate_at(2.0) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn minseglen_blocks_close_changes() {
        let x: Vec<f64> = (0..40).map(f64::from).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 0.5 * f64::max(0.0, v - 10.0) - 0.9 * f64::max(0.0, v - 14.0))
            .collect();
        let s = DataSeries::new(x, y, 0.1).unwrap();
        let grid = Grid::from_data(&s);
        let free = solve(&s, &grid, SolverConfig::new(1.0)).unwrap();
        assert_eq!(free.segmentation.changepoints, vec![10.0, 14.0]);
        for approx in [false, true] {
            let cfg = SolverConfig::new(1.0).with_minseglen(8.0).with_prune_approx(approx);
            let r = solve(&s, &grid, cfg).unwrap();
            assert_eq!(r.approximate, approx);
            for w in r.segmentation.changepoints.windows(2) {
                assert!(w[1] - w[0] >= 8.0);
            }
            assert!(r.segmentation.cost >= free.segmentation.cost);
        }
    }
}
