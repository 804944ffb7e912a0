//! Numeric check of the separation hypothesis behind the exact dimension
//! formula: for every `t` in `[0, 1]` some slab must contain two columns
//! whose fiber sums `sum_k a^t` differ.
//!
//! This is evidence, not proof: the check evaluates a finite grid and refines
//! every near-coincidence, so a `holds = true` verdict means "no common zero
//! of all column gaps was found", while `holds = false` verdicts are exact
//! (witnessed by a `t` or by structural impossibility).

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::solve::bracketed_root;
use crate::spec::SpongeSpec;

/// Gap below which two fiber sums count as coinciding.
pub const GAP_TOL: f64 = 1e-12;

/// Default number of grid points on `[0, 1]`.
pub const DEFAULT_GRID: usize = 129;

/// The best separating column pair at one grid point. Indices are 1-based to
/// match validation paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness<R: Real> {
    pub t: R,
    pub i: usize,
    pub j: usize,
    pub j_prime: usize,
    /// `|sum_k a[i][j][k]^t - sum_k a[i][j'][k]^t|` for that pair.
    pub gap: R,
}

/// Outcome of the separation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport<R: Real> {
    pub holds: bool,
    /// Always `"numeric-evidence"`; a reminder that `holds = true` is a grid
    /// scan with refinement, not a symbolic proof.
    pub method: String,
    pub grid_points: usize,
    pub tolerance: R,
    /// Number of same-slab column pairs.
    pub pair_count: usize,
    /// Pairs whose fiber ratio multisets differ; only these can separate.
    pub distinct_pair_count: usize,
    /// Smallest max-gap seen over the scanned and refined `t` values.
    pub min_gap: R,
    pub min_gap_t: R,
    /// A `t` at which every pair coincides, when one was found.
    pub violating_t: Option<R>,
    /// Why the hypothesis fails, when it fails for structural reasons.
    pub reason: Option<String>,
    /// Best separating pair per grid point, in grid order.
    pub witnesses: Vec<Witness<R>>,
}

/// Same-slab column pairs `(i, j, j')` with `j < j'`, split by whether their
/// fiber multisets are exactly equal (equal multisets give a zero gap for
/// every `t` and can never witness separation).
fn column_pairs<R: Real>(spec: &SpongeSpec<R>) -> (Vec<(usize, usize, usize)>, usize) {
    let mut distinct = Vec::new();
    let mut total = 0usize;
    for i in 0..spec.m() {
        for j in 0..spec.m_i(i) {
            for jp in j + 1..spec.m_i(i) {
                total += 1;
                let mut left: Vec<R> = spec.fiber(i, j).to_vec();
                let mut right: Vec<R> = spec.fiber(i, jp).to_vec();
                left.sort_by(|x, y| x.partial_cmp(y).unwrap());
                right.sort_by(|x, y| x.partial_cmp(y).unwrap());
                if left != right {
                    distinct.push((i, j, jp));
                }
            }
        }
    }
    (distinct, total)
}

/// Max over distinct pairs of the fiber sum gap at `t`, with the argmax pair.
fn max_gap_at<R: Real>(
    spec: &SpongeSpec<R>,
    pairs: &[(usize, usize, usize)],
    t: R,
) -> (R, (usize, usize, usize)) {
    let mut best = R::neg_infinity();
    let mut best_pair = pairs[0];
    for &(i, j, jp) in pairs {
        let gap = (spec.fiber_sum(i, j, t) - spec.fiber_sum(i, jp, t)).abs();
        if gap > best {
            best = gap;
            best_pair = (i, j, jp);
        }
    }
    (best, best_pair)
}

/// Scans `grid_points` values of `t` on `[0, 1]`, then refines around every
/// sign change of each pair's gap (the only places where all pairs can meet
/// zero simultaneously without the grid noticing).
pub fn check_generic_hypothesis<R: Real>(
    spec: &SpongeSpec<R>,
    grid_points: usize,
) -> HypothesisReport<R> {
    let grid_points = grid_points.max(2);
    let tolerance = R::of(GAP_TOL);
    let (pairs, pair_count) = column_pairs(spec);

    let mut report = HypothesisReport {
        holds: false,
        method: "numeric-evidence".into(),
        grid_points,
        tolerance,
        pair_count,
        distinct_pair_count: pairs.len(),
        min_gap: R::zero(),
        min_gap_t: R::zero(),
        violating_t: None,
        reason: None,
        witnesses: Vec::new(),
    };

    if pair_count == 0 {
        report.reason = Some("no slab has two columns, so no pair can separate".into());
        return report;
    }
    if pairs.is_empty() {
        // Every pair has identical fibers: the gap vanishes for every t.
        report.violating_t = Some(R::zero());
        report.reason = Some("all same-slab columns have identical fiber multisets".into());
        return report;
    }

    let step = R::one() / R::of((grid_points - 1) as f64);
    let mut min_gap = R::infinity();
    let mut min_gap_t = R::zero();
    let mut grid = Vec::with_capacity(grid_points);
    for q in 0..grid_points {
        let t = (R::of(q as f64) * step).min(R::one());
        let (gap, (i, j, jp)) = max_gap_at(spec, &pairs, t);
        if gap < min_gap {
            min_gap = gap;
            min_gap_t = t;
        }
        grid.push(t);
        report.witnesses.push(Witness {
            t,
            i: i + 1,
            j: j + 1,
            j_prime: jp + 1,
            gap,
        });
        if gap <= tolerance {
            report.min_gap = min_gap;
            report.min_gap_t = min_gap_t;
            report.violating_t = Some(t);
            report.reason = Some("all pair gaps vanish at a grid point".into());
            return report;
        }
    }

    // Refinement: each pair's signed gap is analytic in t, so inside a grid
    // cell it can only reach zero by changing sign or staying tiny; bisect
    // every sign change to its root and test the other pairs there.
    for &(i, j, jp) in &pairs {
        let d = |t: R| spec.fiber_sum(i, j, t) - spec.fiber_sum(i, jp, t);
        for w in 1..grid_points {
            let (lo, hi) = (grid[w - 1], grid[w]);
            let (d_lo, d_hi) = (d(lo), d(hi));
            if d_lo * d_hi < R::zero() {
                let root = bracketed_root(lo, hi, d_lo, d_hi, |t| (d(t), R::zero()), R::zero(), 128);
                let (gap, _) = max_gap_at(spec, &pairs, root.x);
                if gap < min_gap {
                    min_gap = gap;
                    min_gap_t = root.x;
                }
                if gap <= tolerance {
                    report.min_gap = min_gap;
                    report.min_gap_t = min_gap_t;
                    report.violating_t = Some(root.x);
                    report.reason =
                        Some("all pair gaps vanish at a refined sign change".into());
                    return report;
                }
            }
        }
    }

    report.holds = true;
    report.min_gap = min_gap;
    report.min_gap_t = min_gap_t;
    report
}
