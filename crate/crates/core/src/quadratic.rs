//! Quadratics in one variable, the elimination of the left-end value from a
//! segment cost, and exact lower envelopes of sets of convex quadratics.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::stats::SegmentCostCoeffs;

/// `q(alpha) = a + b alpha + c alpha^2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Quadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quadratic {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub const fn constant(a: f64) -> Self {
        Self { a, b: 0.0, c: 0.0 }
    }

    #[inline]
    pub fn eval(&self, alpha: f64) -> f64 {
        self.a + alpha * (self.b + alpha * self.c)
    }

    #[inline]
    pub fn derivative(&self, alpha: f64) -> f64 {
        self.b + 2.0 * self.c * alpha
    }

    pub fn is_constant(&self) -> bool {
        self.b == 0.0 && self.c == 0.0
    }

    fn sub(&self, other: &Quadratic) -> Quadratic {
        Quadratic::new(self.a - other.a, self.b - other.b, self.c - other.c)
    }

    /// Global minimum `(value, argmin)`. Constants report argmin 0.
    pub fn minimum(&self) -> Result<(f64, f64)> {
        if self.c > 0.0 {
            let arg = -self.b / (2.0 * self.c);
            Ok((self.a - self.b * self.b / (4.0 * self.c), arg))
        } else if self.c == 0.0 && self.b == 0.0 {
            Ok((self.a, 0.0))
        } else {
            Err(Error::NonConvexPiece(self.c))
        }
    }

    /// Minimum over `[lo, hi]`; either bound may be infinite.
    fn minimum_on(&self, lo: f64, hi: f64) -> f64 {
        let mut best = f64::INFINITY;
        for end in [lo, hi] {
            let v = if end.is_finite() {
                self.eval(end)
            } else {
                let dir = end.signum();
                if self.c > 0.0 {
                    f64::INFINITY
                } else if self.c < 0.0 {
                    f64::NEG_INFINITY
                } else if self.b * dir > 0.0 {
                    f64::INFINITY
                } else if self.b * dir < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    self.a
                }
            };
            best = best.min(v);
        }
        if self.c > 0.0 {
            let v = -self.b / (2.0 * self.c);
            if v > lo && v < hi {
                best = best.min(self.eval(v));
            }
        }
        best
    }
}

/// Linear map `alpha' = r + s alpha` from the value at the right end of a
/// segment to the optimal value at its left end.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BackMap {
    pub r: f64,
    pub s: f64,
}

impl BackMap {
    #[inline]
    pub fn apply(&self, alpha: f64) -> f64 {
        self.r + self.s * alpha
    }
}

/// Where a piece came from: the grid index of the previous knot and the
/// index of the piece it was derived from in that knot's envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Provenance {
    pub origin: usize,
    pub parent: usize,
}

/// A quadratic tagged with the information needed to backtrack through it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub q: Quadratic,
    /// `None` for the base piece of the recursion.
    pub provenance: Option<Provenance>,
    pub backmap: BackMap,
}

impl Piece {
    pub fn base(q: Quadratic) -> Self {
        Self {
            q,
            provenance: None,
            backmap: BackMap::default(),
        }
    }

    /// Tie-break key: smaller origin index first, then smaller parent id.
    pub fn key(&self) -> (usize, usize) {
        self.provenance.map_or((0, 0), |p| (p.origin, p.parent))
    }
}

/// Minimises `q(alpha') + C(alpha', alpha) + beta` over `alpha'`, returning the
/// resulting quadratic in `alpha` and the minimiser as a function of `alpha`.
pub fn eliminate_alpha_prime(
    q: &Quadratic,
    coeffs: &SegmentCostCoeffs,
    beta: f64,
) -> Result<(Quadratic, BackMap)> {
    let lin = coeffs.e + q.b;
    let curv = coeffs.f + q.c;
    if curv == 0.0 {
        // only reachable with a constant piece and no data pulling on alpha'
        if lin != 0.0 || coeffs.b != 0.0 {
            return Err(Error::UnboundedElimination);
        }
        let out = Quadratic::new(coeffs.d + q.a + beta, coeffs.c, coeffs.a);
        return Ok((out, BackMap::default()));
    }
    if curv < 0.0 {
        return Err(Error::NonConvexPiece(curv));
    }
    let denom = 2.0 * curv;
    let out = Quadratic::new(
        coeffs.d + q.a + beta - lin * lin / (2.0 * denom),
        coeffs.c - lin * coeffs.b / denom,
        (coeffs.a - coeffs.b * coeffs.b / (2.0 * denom)).max(0.0),
    );
    let backmap = BackMap {
        r: -lin / denom,
        s: -coeffs.b / denom,
    };
    Ok((out, backmap))
}

/// One interval of an envelope: the piece that is minimal from `start` up to
/// the next segment's start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSegment {
    pub start: f64,
    pub piece: usize,
}

/// Pointwise minimum of a set of convex quadratics, stored with the pieces
/// that attain it and the ordered intervals on which each does.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Envelope {
    pieces: Vec<Piece>,
    segments: Vec<EnvelopeSegment>,
}

impl Envelope {
    pub fn from_pieces(candidates: Vec<Piece>) -> Self {
        lower_envelope(candidates)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn segments(&self) -> &[EnvelopeSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Envelope value, using the segment structure.
    pub fn eval(&self, alpha: f64) -> f64 {
        let i = self
            .segments
            .partition_point(|s| s.start <= alpha)
            .saturating_sub(1);
        self.pieces[self.segments[i].piece].q.eval(alpha)
    }

    /// Envelope value as the minimum over every retained piece.
    pub fn eval_min(&self, alpha: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.q.eval(alpha))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `q(alpha) >= self(alpha) + margin` for every `alpha`.
    pub fn dominated_by(&self, q: &Quadratic, margin: f64) -> bool {
        self.segments.iter().enumerate().all(|(i, seg)| {
            let hi = self
                .segments
                .get(i + 1)
                .map_or(f64::INFINITY, |next| next.start);
            let diff = q.sub(&self.pieces[seg.piece].q);
            diff.minimum_on(seg.start, hi) >= margin
        })
    }
}

/// First location `>= pos` from which `other` lies strictly below `cur`, or
/// `None` if it never does.
fn entry_point(cur: &Quadratic, other: &Quadratic, pos: f64) -> Option<f64> {
    let d = other.sub(cur);
    if d.c == 0.0 {
        return match d.b.partial_cmp(&0.0)? {
            Ordering::Less => Some((-d.a / d.b).max(pos)),
            Ordering::Greater => {
                let t = -d.a / d.b;
                (t > pos).then_some(pos)
            }
            Ordering::Equal => (d.a < 0.0).then_some(pos),
        };
    }
    let disc = d.b * d.b - 4.0 * d.c * d.a;
    if disc <= 0.0 {
        // no sign change: below everywhere only if concave difference
        return (d.c < 0.0).then_some(pos);
    }
    let sq = disc.sqrt();
    let t = -0.5 * (d.b + d.b.signum() * sq);
    let (mut r1, mut r2) = if t == 0.0 {
        (0.0, 0.0)
    } else {
        (t / d.c, d.a / t)
    };
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    if !(r1 < r2) {
        return None;
    }
    if d.c > 0.0 {
        // below on (r1, r2)
        (r2 > pos).then(|| r1.max(pos))
    } else if pos < r1 {
        // below on (-inf, r1) and (r2, inf)
        Some(pos)
    } else {
        Some(r2.max(pos))
    }
}

/// Order by value at minus infinity: smaller curvature, then larger slope,
/// then smaller constant.
fn cmp_at_neg_infinity(p: &Piece, q: &Piece) -> Ordering {
    p.q.c
        .total_cmp(&q.q.c)
        .then_with(|| q.q.b.total_cmp(&p.q.b))
        .then_with(|| p.q.a.total_cmp(&q.q.a))
        .then_with(|| p.key().cmp(&q.key()))
}

/// Exact lower envelope of convex quadratics by a left-to-right sweep: starting
/// from the minimal piece at minus infinity, repeatedly jump to the piece
/// whose next crossing below the current one comes first.
fn lower_envelope(mut cands: Vec<Piece>) -> Envelope {
    if cands.is_empty() {
        return Envelope::default();
    }
    cands.sort_by(cmp_at_neg_infinity);
    cands.dedup_by(|later, earlier| later.q == earlier.q);

    let m = cands.len();
    let mut cur = 0;
    let mut pos = f64::NEG_INFINITY;
    let mut path = vec![EnvelopeSegment {
        start: pos,
        piece: 0,
    }];
    let mut visited_here: Vec<usize> = vec![0];
    loop {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..m {
            if j == cur || (visited_here.contains(&j)) {
                continue;
            }
            let Some(t) = entry_point(&cands[cur].q, &cands[j].q, pos) else {
                continue;
            };
            if !t.is_finite() {
                continue;
            }
            best = match best {
                None => Some((t, j)),
                Some((bt, bj)) => {
                    let better = match t.total_cmp(&bt) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => {
                            let (qj, qb) = (&cands[j].q, &cands[bj].q);
                            qj.derivative(t)
                                .total_cmp(&qb.derivative(t))
                                .then_with(|| qj.c.total_cmp(&qb.c))
                                .then_with(|| cands[j].key().cmp(&cands[bj].key()))
                                == Ordering::Less
                        }
                    };
                    if better {
                        Some((t, j))
                    } else {
                        Some((bt, bj))
                    }
                }
            };
        }
        let Some((t, j)) = best else { break };
        if t > pos {
            pos = t;
            visited_here.clear();
        }
        visited_here.push(j);
        cur = j;
        match path.last_mut() {
            Some(last) if last.start == t => last.piece = j,
            _ => path.push(EnvelopeSegment { start: t, piece: j }),
        }
    }

    // renumber retained pieces in order of first appearance
    let mut index = vec![usize::MAX; m];
    let mut pieces = Vec::new();
    let mut segments: Vec<EnvelopeSegment> = Vec::with_capacity(path.len());
    for seg in path {
        if index[seg.piece] == usize::MAX {
            index[seg.piece] = pieces.len();
            pieces.push(cands[seg.piece]);
        }
        let piece = index[seg.piece];
        if segments.last().is_some_and(|s| s.piece == piece) {
            continue;
        }
        segments.push(EnvelopeSegment {
            start: seg.start,
            piece,
        });
    }
    Envelope { pieces, segments }
}

/// Lower envelope of `env` together with `candidates`.
pub fn envelope_add_and_prune(env: &Envelope, candidates: Vec<Piece>) -> Envelope {
    let mut all = env.pieces.clone();
    all.extend(candidates);
    lower_envelope(all)
}

/// Global minimum of an envelope: `(value, argmin, index of attaining piece)`.
/// Equal minima go to the piece with the smaller provenance key.
pub fn envelope_min(env: &Envelope) -> Result<(f64, f64, usize)> {
    let mut best: Option<(f64, f64, usize)> = None;
    for (i, p) in env.pieces.iter().enumerate() {
        let (v, arg) = p.q.minimum()?;
        let replace = match best {
            None => true,
            Some((bv, _, bi)) => v < bv || (v == bv && p.key() < env.pieces[bi].key()),
        };
        if replace {
            best = Some((v, arg, i));
        }
    }
    best.ok_or(Error::EmptyEnvelope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn piece(a: f64, b: f64, c: f64, origin: usize) -> Piece {
        Piece {
            q: Quadratic::new(a, b, c),
            provenance: Some(Provenance { origin, parent: 0 }),
            backmap: BackMap::default(),
        }
    }

    /// (alpha - m)^2 + h
    fn vertex(m: f64, h: f64, origin: usize) -> Piece {
        piece(m * m + h, -2.0 * m, 1.0, origin)
    }

    fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..200 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = f(x2);
            }
        }
        let x = 0.5 * (lo + hi);
        (f(x), x)
    }

    #[test]
    fn base_piece_over_empty_segment_cancels_penalty() {
        let beta = 3.7;
        let (q, bm) =
            eliminate_alpha_prime(&Quadratic::constant(-beta), &SegmentCostCoeffs::default(), beta)
                .unwrap();
        assert_eq!(q, Quadratic::constant(0.0));
        assert_eq!(bm, BackMap::default());
    }

    #[test]
    fn single_point_segment_leaves_residual() {
        let y = 1.75;
        let coeffs = SegmentCostCoeffs {
            a: 1.0,
            c: -2.0 * y,
            d: y * y,
            ..Default::default()
        };
        let (q, _) = eliminate_alpha_prime(&Quadratic::constant(0.0), &coeffs, 0.0).unwrap();
        assert_eq!(q, Quadratic::new(y * y, -2.0 * y, 1.0));
    }

    #[test]
    fn unbounded_elimination_is_reported() {
        let coeffs = SegmentCostCoeffs {
            e: 1.0,
            ..Default::default()
        };
        assert_eq!(
            eliminate_alpha_prime(&Quadratic::constant(0.0), &coeffs, 1.0),
            Err(Error::UnboundedElimination)
        );
    }

    #[test]
    fn identical_pieces_collapse_to_one() {
        let env = Envelope::from_pieces(vec![vertex(1.0, 0.0, 4), vertex(1.0, 0.0, 2)]);
        assert_eq!(env.len(), 1);
        assert_eq!(env.pieces()[0].key(), (2, 0));
    }

    #[test]
    fn dominated_piece_is_pruned() {
        let env = Envelope::from_pieces(vec![vertex(0.0, 1.0, 1), vertex(0.0, 0.0, 2)]);
        assert_eq!(env.len(), 1);
        assert_eq!(env.pieces()[0].q, Quadratic::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn crossing_pieces_are_both_kept() {
        let (q1, q2) = (vertex(-1.0, 0.0, 1), vertex(1.0, 0.0, 2));
        let env = Envelope::from_pieces(vec![q1, q2]);
        assert_eq!(env.len(), 2);
        assert_eq!(env.segments().len(), 2);
        assert_eq!(env.segments()[1].start, 0.0);
        for i in 0..50 {
            let a = -5.0 + 0.2 * i as f64 + 0.013;
            let want = q1.q.eval(a).min(q2.q.eval(a));
            assert_eq!(env.eval(a), want);
            assert_eq!(env.eval_min(a), want);
        }
    }

    #[test]
    fn constant_and_linear_like_pieces() {
        let env = Envelope::from_pieces(vec![
            piece(2.0, 0.0, 0.0, 1),
            vertex(0.0, 0.0, 2),
            vertex(10.0, 0.5, 3),
        ]);
        // x^2 below 2 on (-sqrt2, sqrt2); second bowl dips below 2 near 10
        assert_eq!(env.len(), 3);
        assert!((env.eval(0.3) - 0.09).abs() < 1e-15);
        assert_eq!(env.eval(5.0), 2.0);
        assert_eq!(env.eval(-50.0), 2.0);
        assert_eq!(env.eval(10.0), 0.5);
    }

    #[test]
    fn envelope_minimum_examples() {
        let env = Envelope::from_pieces(vec![piece(2.0, -2.0, 1.0, 1)]);
        let (v, arg, _) = envelope_min(&env).unwrap();
        assert_eq!((v, arg), (1.0, 1.0));

        let env = Envelope::from_pieces(vec![vertex(0.0, 0.0, 1), vertex(2.0, 0.5, 2)]);
        let (v, arg, i) = envelope_min(&env).unwrap();
        assert_eq!((v, arg), (0.0, 0.0));
        assert_eq!(env.pieces()[i].key(), (1, 0));

        let env = Envelope::from_pieces(vec![piece(3.0, 0.0, 0.0, 1)]);
        assert_eq!(envelope_min(&env).unwrap().1, 0.0);

        let env = Envelope::from_pieces(vec![piece(0.0, 1.0, -1.0, 1)]);
        assert!(matches!(envelope_min(&env), Err(Error::NonConvexPiece(_))));
        assert_eq!(envelope_min(&Envelope::default()), Err(Error::EmptyEnvelope));
    }

    #[test]
    fn envelope_minimum_matches_dense_scan() {
        let pieces: Vec<Piece> = (0..10)
            .map(|i| {
                let m = ((i * 37) % 11) as f64 - 5.0;
                let h = ((i * 13) % 7) as f64 * 0.3;
                let c = 0.5 + (i % 3) as f64;
                piece(c * m * m + h, -2.0 * c * m, c, i)
            })
            .collect();
        let env = Envelope::from_pieces(pieces.clone());
        let (v, _, _) = envelope_min(&env).unwrap();
        let scan = (0..1_000_000)
            .map(|i| {
                let a = -8.0 + 16.0 * i as f64 / 1e6;
                pieces.iter().map(|p| p.q.eval(a)).fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((v - scan).abs() < 1e-6);
    }

    #[test]
    fn domination_check() {
        let env = Envelope::from_pieces(vec![vertex(-1.0, 0.0, 1), vertex(1.0, 0.0, 2)]);
        assert!(env.dominated_by(&vertex(0.0, 2.0, 3).q, 1.0));
        assert!(!env.dominated_by(&vertex(0.0, 0.5, 3).q, 1.0));
        assert!(!env.dominated_by(&Quadratic::new(100.0, 1.0, 0.0), 1.0));
    }

    fn convex_piece() -> impl Strategy<Value = Quadratic> {
        (-5.0f64..5.0, -3.0f64..3.0, 0.0f64..4.0).prop_map(|(m, h, c)| {
            Quadratic::new(c * m * m + h, -2.0 * c * m, c)
        })
    }

    fn coeffs() -> impl Strategy<Value = SegmentCostCoeffs> {
        // C = sum_j w_j (y_j - a'(1-u_j) - a u_j)^2 over random points
        prop::collection::vec((0.01f64..0.99, -5.0f64..5.0, 0.1f64..3.0), 1..6).prop_map(|pts| {
            let mut c = SegmentCostCoeffs::default();
            for (u, y, w) in pts {
                let v = 1.0 - u;
                c.a += w * u * u;
                c.b += 2.0 * w * u * v;
                c.c += -2.0 * w * y * u;
                c.d += w * y * y;
                c.e += -2.0 * w * y * v;
                c.f += w * v * v;
            }
            c
        })
    }

    proptest! {
        #[test]
        fn elimination_matches_numeric_minimisation(
            q in convex_piece(),
            c in coeffs(),
            beta in 0.0f64..10.0,
            alphas in prop::collection::vec(-6.0f64..6.0, 10),
        ) {
            let (out, bm) = eliminate_alpha_prime(&q, &c, beta).unwrap();
            prop_assert!(out.c >= 0.0);
            for a in alphas {
                let inner = |ap: f64| q.eval(ap) + c.eval(ap, a) + beta;
                let (v, _) = golden_min(inner, -200.0, 200.0);
                prop_assert!((out.eval(a) - v).abs() <= 1e-8 * v.abs().max(1.0));
                let ap = bm.apply(a);
                let grad = q.derivative(ap) + c.b * a + c.e + 2.0 * c.f * ap;
                prop_assert!(grad.abs() <= 1e-8 * (1.0 + q.c + c.f) * (1.0 + ap.abs() + a.abs()));
            }
        }

        #[test]
        fn pruning_preserves_pointwise_minimum(
            qs in prop::collection::vec(convex_piece(), 1..25),
            alphas in prop::collection::vec(-10.0f64..10.0, 100),
        ) {
            let pieces: Vec<Piece> = qs.iter().enumerate().map(|(i, q)| Piece {
                q: *q,
                provenance: Some(Provenance { origin: i, parent: 0 }),
                backmap: BackMap::default(),
            }).collect();
            let env = Envelope::from_pieces(pieces.clone());
            prop_assert!(env.len() <= pieces.len());
            for a in alphas {
                let all = qs.iter().map(|q| q.eval(a)).fold(f64::INFINITY, f64::min);
                prop_assert!((env.eval_min(a) - all).abs() <= 1e-10 * all.abs().max(1.0));
                prop_assert!((env.eval(a) - all).abs() <= 1e-10 * all.abs().max(1.0));
            }
            // every retained piece owns at least one interval of positive length
            let segs = env.segments();
            for (i, s) in segs.iter().enumerate() {
                let hi = segs.get(i + 1).map_or(f64::INFINITY, |n| n.start);
                prop_assert!(hi > s.start);
            }
            let mut owners: Vec<usize> = segs.iter().map(|s| s.piece).collect();
            owners.sort_unstable();
            owners.dedup();
            prop_assert_eq!(owners.len(), env.len());
        }

        #[test]
        fn adding_more_pieces_never_grows_the_minimum(
            first in prop::collection::vec(convex_piece(), 1..10),
            second in prop::collection::vec(convex_piece(), 1..10),
            a in -10.0f64..10.0,
        ) {
            let tag = |qs: &[Quadratic], off: usize| -> Vec<Piece> {
                qs.iter().enumerate().map(|(i, q)| Piece {
                    q: *q,
                    provenance: Some(Provenance { origin: off + i, parent: 0 }),
                    backmap: BackMap::default(),
                }).collect()
            };
            let env = Envelope::from_pieces(tag(&first, 0));
            let merged = envelope_add_and_prune(&env, tag(&second, 100));
            prop_assert!(merged.eval(a) <= env.eval(a) + 1e-12 * env.eval(a).abs().max(1.0));
        }
    }
}
