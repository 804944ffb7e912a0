//! The one-parameter family of candidate optimal distributions.
//!
//! For `t` strictly between the smallest and largest per-column Moran roots
//! and `rho` in `(0, 1]`, the candidate weights have the Gibbs form
//!
//! ```text
//! p_ij = C * c_i^lambda1 * b_ij^lambda2 * S_ij(t)^alpha * gamma_i^(rho - 1)
//! gamma_i = sum_j b_ij^lambda2 * S_ij(t)^alpha,     S_ij(t) = sum_k a_ijk^t
//! ```
//!
//! with three scalars fixed by three nested equations, solved innermost out:
//!
//! 1. `alpha`: the fiber average `F = sum_ij p_ij ln S_ij` vanishes, which
//!    makes `t(p) = t`. `F` is strictly increasing in `alpha` whenever some
//!    weighted slab contains columns with distinct fiber sums.
//! 2. `lambda1`: the weights sum to 1 with `C = 1` (`ln Z = 0` below);
//!    `ln Z` is strictly decreasing in `lambda1`.
//! 3. `lambda2`: the slab average `G = sum_i p_i ln gamma_i` vanishes, which
//!    makes `lambda1(p) = lambda1` and `lambda2(p) = lambda2`; `G` is
//!    strictly decreasing in `lambda2`.
//!
//! All products are evaluated in log space: `alpha` is unbounded and the
//! Gibbs factors overflow `exp` long before the solves become ill-posed.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::dimension::{objective, ObjectiveValue};
use crate::distribution::NestedDistribution;
use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Real};
use crate::solve::{bracketed_root, expand_bracket};
use crate::spec::SpongeSpec;

/// Residual tolerance on the fiber average `F` in the `alpha` solve.
pub const ALPHA_TOL: f64 = 1e-12;
/// Residual tolerance on `ln Z` in the `lambda1` solve.
pub const LAMBDA1_TOL: f64 = 1e-10;
/// Residual tolerance on the slab average `G` in the `lambda2` solve.
pub const LAMBDA2_TOL: f64 = 1e-10;
/// Bracket expansion cap for all three scalars.
pub const BRACKET_CAP: f64 = 1e6;
/// Below this root spread the family degenerates to a point.
pub const ROOT_SPREAD_EPS: f64 = 1e-12;

/// Per-column Moran roots `t_ij` (the root of `sum_k a_ijk^s = 1` in
/// `[0, 1]`) and their extremes. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberRoots<R: Real> {
    pub t: Vec<Vec<R>>,
    pub t_lower: R,
    pub t_upper: R,
    pub argmin: (usize, usize),
    pub argmax: (usize, usize),
}

impl<R: Real> FiberRoots<R> {
    /// True when the open interval `(t_lower, t_upper)` is non-degenerate.
    pub fn applicable(&self) -> bool {
        self.t_upper - self.t_lower > R::of(ROOT_SPREAD_EPS)
    }
}

/// Solves every column's Moran equation. Roots are exact to one rounding:
/// a fiber summing to 1 returns exactly 1, a singleton fiber below 1 returns
/// exactly 0 (`sum a^0 = 1` already).
pub fn fiber_roots<R: Real>(spec: &SpongeSpec<R>) -> FiberRoots<R> {
    let mut t = Vec::with_capacity(spec.m());
    let mut lower = (R::infinity(), (0, 0));
    let mut upper = (R::neg_infinity(), (0, 0));
    for i in 0..spec.m() {
        let mut row = Vec::with_capacity(spec.m_i(i));
        for j in 0..spec.m_i(i) {
            let g0 = spec.log_fiber_sum(i, j, R::zero());
            let g1 = spec.log_fiber_sum(i, j, R::one());
            let root = if g0 <= R::zero() {
                R::zero()
            } else if g1 >= R::zero() {
                R::one()
            } else {
                bracketed_root(
                    R::zero(),
                    R::one(),
                    g0,
                    g1,
                    |s| spec.log_fiber_sum_d(i, j, s),
                    R::of(1e-14),
                    200,
                )
                .x
            };
            if root < lower.0 {
                lower = (root, (i, j));
            }
            if root > upper.0 {
                upper = (root, (i, j));
            }
            row.push(root);
        }
        t.push(row);
    }
    FiberRoots {
        t,
        t_lower: lower.0,
        t_upper: upper.0,
        argmin: lower.1,
        argmax: upper.1,
    }
}

/// One full evaluation of the Gibbs family at fixed scalars.
struct EvalOut<R: Real> {
    log_z: R,
    log_gamma: Vec<R>,
    /// Normalized weights (they sum to 1 regardless of `ln Z`).
    p: Vec<Vec<R>>,
    /// `F = sum_ij p_ij ln S_ij` and its derivative in `alpha`.
    f: R,
    df: R,
}

fn evaluate<R: Real>(
    spec: &SpongeSpec<R>,
    phi: &[Vec<R>],
    alpha: R,
    lambda1: R,
    lambda2: R,
    rho: R,
) -> EvalOut<R> {
    let m = spec.m();
    let mut log_gamma = Vec::with_capacity(m);
    let mut row_terms: Vec<Vec<R>> = Vec::with_capacity(m);
    for i in 0..m {
        let terms: Vec<R> = (0..spec.m_i(i))
            .map(|j| lambda2 * spec.b[i][j].ln() + alpha * phi[i][j])
            .collect();
        log_gamma.push(log_sum_exp(&terms));
        row_terms.push(terms);
    }

    let mut log_w = Vec::new();
    for i in 0..m {
        let base = lambda1 * spec.c[i].ln() + (rho - R::one()) * log_gamma[i];
        for &term in &row_terms[i] {
            log_w.push(base + term);
        }
    }
    let log_z = log_sum_exp(&log_w);

    let mut p = Vec::with_capacity(m);
    let mut f = R::zero();
    let mut within_var = R::zero(); // sum_i p_i Var_{q_i}(phi)
    let mut h_mean = R::zero(); // sum_i p_i h_i
    let mut h_sq = R::zero(); // sum_i p_i h_i^2
    let mut flat = log_w.iter();
    for i in 0..m {
        let mut row = Vec::with_capacity(spec.m_i(i));
        let mut p_i = R::zero();
        let mut h_i = R::zero(); // E_{q_i}[phi], with q_i(j) = p(j | i)
        for j in 0..spec.m_i(i) {
            let w = (*flat.next().unwrap() - log_z).exp();
            p_i = p_i + w;
            f = f + w * phi[i][j];
            row.push(w);
        }
        if p_i > R::zero() {
            for j in 0..spec.m_i(i) {
                h_i = h_i + row[j] / p_i * phi[i][j];
            }
            let mut v = R::zero();
            for j in 0..spec.m_i(i) {
                let d = phi[i][j] - h_i;
                v = v + row[j] / p_i * d * d;
            }
            within_var = within_var + p_i * v;
            h_mean = h_mean + p_i * h_i;
            h_sq = h_sq + p_i * h_i * h_i;
        }
        p.push(row);
    }
    // dF/dalpha = sum_i p_i Var_{q_i}(phi) + rho * Var_{p_i}(E_{q_i} phi),
    // strictly positive whenever a weighted slab separates fiber sums.
    let df = within_var + rho * (h_sq - h_mean * h_mean);

    EvalOut {
        log_z,
        log_gamma,
        p,
        f,
        df,
    }
}

/// Result of the innermost solve: the `alpha` making `t(p) = t` at fixed
/// `(lambda1, lambda2, t, rho)`.
#[derive(Debug, Clone)]
pub struct InnerSolve<R: Real> {
    pub alpha: R,
    pub log_z: R,
    pub log_gamma: Vec<R>,
    pub p: NestedDistribution<R>,
    /// `|F|` at the returned alpha.
    pub f_residual: R,
    pub evaluations: usize,
}

fn log_fiber_sums<R: Real>(spec: &SpongeSpec<R>, t: R) -> Vec<Vec<R>> {
    (0..spec.m())
        .map(|i| {
            (0..spec.m_i(i))
                .map(|j| spec.log_fiber_sum(i, j, t))
                .collect()
        })
        .collect()
}

fn check_rho<R: Real>(rho: R) -> Result<()> {
    if rho > R::zero() && rho <= R::one() {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "rho = {rho} must lie in (0, 1]"
        )))
    }
}

/// Solves the fiber-average equation `F(alpha) = 0`.
///
/// Preconditions on `t` are the caller's business: for `t` outside the open
/// root interval `F` is sign-definite and the bracket expansion reports
/// [`Error::BracketNotFound`] at the cap instead of clamping.
pub fn solve_alpha<R: Real>(
    spec: &SpongeSpec<R>,
    t: R,
    rho: R,
    lambda1: R,
    lambda2: R,
    start: R,
) -> Result<InnerSolve<R>> {
    check_rho(rho)?;
    let phi = log_fiber_sums(spec, t);
    solve_alpha_inner(spec, &phi, t, rho, lambda1, lambda2, start)
}

fn solve_alpha_inner<R: Real>(
    spec: &SpongeSpec<R>,
    phi: &[Vec<R>],
    _t: R,
    rho: R,
    lambda1: R,
    lambda2: R,
    start: R,
) -> Result<InnerSolve<R>> {
    let evals = Cell::new(0usize);
    let f_only = |alpha: R| {
        evals.set(evals.get() + 1);
        evaluate(spec, phi, alpha, lambda1, lambda2, rho).f
    };
    let (lo, hi, f_lo, f_hi) = expand_bracket(
        f_only,
        start,
        R::one(),
        R::of(BRACKET_CAP),
        "alpha solve (fiber average)",
    )?;
    let out = bracketed_root(
        lo,
        hi,
        f_lo,
        f_hi,
        |alpha: R| {
            evals.set(evals.get() + 1);
            let e = evaluate(spec, phi, alpha, lambda1, lambda2, rho);
            (e.f, e.df)
        },
        R::of(ALPHA_TOL),
        200,
    );
    if !out.converged {
        return Err(Error::NonConvergence(format!(
            "alpha solve stalled with |F| = {:e}",
            out.residual
        )));
    }
    let e = evaluate(spec, phi, out.x, lambda1, lambda2, rho);
    Ok(InnerSolve {
        alpha: out.x,
        log_z: e.log_z,
        log_gamma: e.log_gamma,
        p: NestedDistribution::new(e.p)?,
        f_residual: e.f.abs(),
        evaluations: evals.get() + 1,
    })
}

/// Solves `ln Z(lambda1) = 0` (equivalently `C = 1`), re-solving `alpha`
/// at every trial `lambda1`. Returns the root and the inner solve there.
pub fn solve_lambda1<R: Real>(
    spec: &SpongeSpec<R>,
    t: R,
    rho: R,
    lambda2: R,
    start: R,
) -> Result<(R, InnerSolve<R>)> {
    check_rho(rho)?;
    let phi = log_fiber_sums(spec, t);
    solve_lambda1_inner(spec, &phi, t, rho, lambda2, start, &Cell::new(R::zero()))
}

fn solve_lambda1_inner<R: Real>(
    spec: &SpongeSpec<R>,
    phi: &[Vec<R>],
    t: R,
    rho: R,
    lambda2: R,
    start: R,
    warm_alpha: &Cell<R>,
) -> Result<(R, InnerSolve<R>)> {
    let failure: Cell<Option<Error>> = Cell::new(None);
    let log_z_at = |lambda1: R| -> (R, R) {
        match solve_alpha_inner(spec, phi, t, rho, lambda1, lambda2, warm_alpha.get()) {
            Ok(inner) => {
                warm_alpha.set(inner.alpha);
                // Envelope: at F = 0 the alpha sensitivity of ln Z vanishes,
                // leaving d ln Z / d lambda1 = sum_i p_i ln c_i < 0.
                let slope = inner
                    .p
                    .marginals()
                    .iter()
                    .enumerate()
                    .fold(R::zero(), |s, (i, &pi)| s + pi * spec.c[i].ln());
                (inner.log_z, slope)
            }
            Err(e) => {
                failure.set(Some(e));
                (R::nan(), R::nan())
            }
        }
    };

    let bracket = expand_bracket(
        |l1| log_z_at(l1).0,
        start,
        R::one(),
        R::of(BRACKET_CAP),
        "lambda1 solve (normalization)",
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let (lo, hi, f_lo, f_hi) = bracket?;
    let out = bracketed_root(lo, hi, f_lo, f_hi, log_z_at, R::of(LAMBDA1_TOL), 200);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if !out.converged {
        return Err(Error::NonConvergence(format!(
            "lambda1 solve stalled with |ln Z| = {:e}",
            out.residual
        )));
    }
    let inner = solve_alpha_inner(spec, phi, t, rho, lambda1_clean(out.x), lambda2, warm_alpha.get())?;
    warm_alpha.set(inner.alpha);
    Ok((lambda1_clean(out.x), inner))
}

/// Normalizes `-0.0` to `0.0` so reports do not print negative zeros.
fn lambda1_clean<R: Real>(x: R) -> R {
    if x == R::zero() {
        R::zero()
    } else {
        x
    }
}

/// Residuals of the three family equations plus the self-consistency check
/// `t(p) = t`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FamilyResiduals<R: Real> {
    /// `|sum_ij p_ij ln S_ij|` (alpha equation).
    pub alpha_equation: R,
    /// `|ln Z|` (normalization, `C = 1`).
    pub normalization: R,
    /// `|sum_i p_i ln gamma_i|` (lambda2 equation).
    pub gamma_equation: R,
    /// `|t(p) - t|` recomputed from the weights.
    pub t_match: R,
}

/// A fully solved family member.
#[derive(Debug, Clone, Serialize)]
pub struct FamilySolution<R: Real> {
    pub t: R,
    pub rho: R,
    pub alpha: R,
    pub lambda1: R,
    pub lambda2: R,
    /// `ln gamma_i` per slab; kept in log space because `alpha` can push
    /// `gamma` past the range of `exp`.
    pub log_gamma: Vec<R>,
    /// `C = exp(-ln Z)`, equal to 1 up to the normalization residual.
    pub c_value: R,
    pub p: NestedDistribution<R>,
    /// The variational objective evaluated at `p`; its parts reproduce
    /// `lambda1`, `lambda2` and `t` up to the residuals.
    pub objective: ObjectiveValue<R>,
    pub residuals: FamilyResiduals<R>,
    /// Total Gibbs evaluations across all nested solves.
    pub evaluations: usize,
}

impl<R: Real> FamilySolution<R> {
    /// `gamma_i = exp(log_gamma_i)`; may overflow to infinity for extreme
    /// `alpha`, which is why the solution stores logs.
    pub fn gamma(&self) -> Vec<R> {
        self.log_gamma.iter().map(|&x| x.exp()).collect()
    }
}

/// Checks `t` against the open root interval and degeneracy.
fn check_t_range<R: Real>(roots: &FiberRoots<R>, t: R) -> Result<()> {
    if !roots.applicable() {
        return Err(Error::NotApplicable(format!(
            "all column Moran roots coincide at {}; the family degenerates to a point",
            roots.t_lower
        )));
    }
    if t <= roots.t_lower || t >= roots.t_upper {
        return Err(Error::Precondition(format!(
            "t = {} is outside the open root interval ({}, {})",
            t, roots.t_lower, roots.t_upper
        )));
    }
    Ok(())
}

/// Solves the full family at `(t, rho)`: outer root of the slab average
/// `G(lambda2) = 0` with `lambda1` and `alpha` re-solved at every trial.
pub fn solve_lambda2<R: Real>(spec: &SpongeSpec<R>, t: R, rho: R) -> Result<FamilySolution<R>> {
    check_rho(rho)?;
    let roots = fiber_roots(spec);
    check_t_range(&roots, t)?;
    solve_family_inner(spec, t, rho, &Cell::new(R::zero()), &Cell::new(R::of(0.5)), &Cell::new(R::of(0.5)))
}

fn solve_family_inner<R: Real>(
    spec: &SpongeSpec<R>,
    t: R,
    rho: R,
    warm_alpha: &Cell<R>,
    warm_lambda1: &Cell<R>,
    warm_lambda2: &Cell<R>,
) -> Result<FamilySolution<R>> {
    let phi = log_fiber_sums(spec, t);
    let evals = Cell::new(0usize);
    let failure: Cell<Option<Error>> = Cell::new(None);

    let g_at = |lambda2: R| -> (R, R) {
        match solve_lambda1_inner(spec, &phi, t, rho, lambda2, warm_lambda1.get(), warm_alpha) {
            Ok((lambda1, inner)) => {
                warm_lambda1.set(lambda1);
                evals.set(evals.get() + inner.evaluations);
                let marginals = inner.p.marginals();
                let g = marginals
                    .iter()
                    .zip(&inner.log_gamma)
                    .fold(R::zero(), |s, (&pi, &lg)| s + pi * lg);
                // On the solved manifold dG/dlambda2 = sum_ij p_ij ln b_ij < 0.
                let slope = inner
                    .p
                    .support()
                    .fold(R::zero(), |s, (i, j, w)| s + w * spec.b[i][j].ln());
                (g, slope)
            }
            Err(e) => {
                failure.set(Some(e));
                (R::nan(), R::nan())
            }
        }
    };

    let bracket = expand_bracket(
        |l2| g_at(l2).0,
        warm_lambda2.get(),
        R::one(),
        R::of(BRACKET_CAP),
        "lambda2 solve (slab average)",
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let (lo, hi, f_lo, f_hi) = bracket?;
    let out = bracketed_root(lo, hi, f_lo, f_hi, g_at, R::of(LAMBDA2_TOL), 200);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if !out.converged {
        return Err(Error::NonConvergence(format!(
            "lambda2 solve stalled with |G| = {:e}",
            out.residual
        )));
    }
    let lambda2 = out.x;
    warm_lambda2.set(lambda2);

    let (lambda1, inner) =
        solve_lambda1_inner(spec, &phi, t, rho, lambda2, warm_lambda1.get(), warm_alpha)?;
    warm_lambda1.set(lambda1);
    let marginals = inner.p.marginals();
    let gamma_equation = marginals
        .iter()
        .zip(&inner.log_gamma)
        .fold(R::zero(), |s, (&pi, &lg)| s + pi * lg)
        .abs();
    let obj = objective(spec, &inner.p, R::of(ALPHA_TOL))?;

    Ok(FamilySolution {
        t,
        rho,
        alpha: inner.alpha,
        lambda1,
        lambda2,
        log_gamma: inner.log_gamma.clone(),
        c_value: (-inner.log_z).exp(),
        objective: obj,
        residuals: FamilyResiduals {
            alpha_equation: inner.f_residual,
            normalization: inner.log_z.abs(),
            gamma_equation,
            t_match: (obj.t - t).abs(),
        },
        evaluations: evals.get() + inner.evaluations,
        p: inner.p,
    })
}

/// One point of a family sweep; failed points carry the error text so a
/// sweep survives isolated non-convergence.
#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint<R: Real> {
    pub t: R,
    pub solution: Option<FamilySolution<R>>,
    pub error: Option<String>,
}

/// Solves the family along a grid of `t` values at fixed `rho`, warm-starting
/// each point from its predecessor.
///
/// Every grid point must lie strictly inside the open root interval; points
/// that fail to converge are flagged and the sweep continues.
pub fn family_curve<R: Real>(
    spec: &SpongeSpec<R>,
    t_grid: &[R],
    rho: R,
) -> Result<Vec<CurvePoint<R>>> {
    check_rho(rho)?;
    let roots = fiber_roots(spec);
    for &t in t_grid {
        check_t_range(&roots, t)?;
    }
    let warm_alpha = Cell::new(R::zero());
    let warm_lambda1 = Cell::new(R::of(0.5));
    let warm_lambda2 = Cell::new(R::of(0.5));
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        match solve_family_inner(spec, t, rho, &warm_alpha, &warm_lambda1, &warm_lambda2) {
            Ok(sol) => out.push(CurvePoint {
                t,
                solution: Some(sol),
                error: None,
            }),
            Err(e) => {
                // Cold-start the next point; a failed warm state is useless.
                warm_alpha.set(R::zero());
                warm_lambda1.set(R::of(0.5));
                warm_lambda2.set(R::of(0.5));
                out.push(CurvePoint {
                    t,
                    solution: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    Ok(out)
}

/// `n` evenly spaced interior points of the open root interval.
pub fn default_t_grid<R: Real>(roots: &FiberRoots<R>, n: usize) -> Vec<R> {
    let span = roots.t_upper - roots.t_lower;
    (1..=n)
        .map(|k| roots.t_lower + span * R::of(k as f64) / R::of((n + 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Single slab, two columns with equal b but different fibers; the
    /// hypothesis holds for every t and all three scalars have closed forms.
    fn single_slab() -> SpongeSpec<f64> {
        SpongeSpec::from_ratios(
            "single-slab",
            vec![0.9],
            vec![vec![0.45, 0.45]],
            vec![vec![vec![0.3, 0.1], vec![0.2]]],
        )
        .unwrap()
    }

    /// Two slabs with distinct fiber sums inside the first slab.
    fn two_slab() -> SpongeSpec<f64> {
        SpongeSpec::from_ratios(
            "two-slab",
            vec![0.5, 0.4],
            vec![vec![0.4, 0.3], vec![0.3]],
            vec![
                vec![vec![0.3, 0.1], vec![0.2]],
                vec![vec![0.25, 0.05]],
            ],
        )
        .unwrap()
    }

    #[test]
    fn fiber_roots_hit_closed_forms() {
        let s: SpongeSpec<f64> = SpongeSpec::from_ratios(
            "roots",
            vec![0.9],
            vec![vec![0.3, 0.3, 0.3]],
            vec![vec![
                vec![0.3, 0.3, 0.2, 0.2],
                vec![0.25, 0.0625],
                vec![0.2],
            ]],
        )
        .unwrap();
        let r = fiber_roots(&s);
        // Sum = 1 exactly: root 1. Fiber {u, u^2}: golden-ratio root
        // ln((1 + sqrt 5) / 2) / ln(1/u). Singleton below 1: root 0.
        assert_eq!(r.t[0][0], 1.0);
        let golden = ((1.0 + 5.0f64.sqrt()) / 2.0).ln() / 4.0f64.ln();
        assert!((r.t[0][1] - golden).abs() < 1e-12);
        assert_eq!(r.t[0][2], 0.0);
        assert_eq!(r.t_lower, 0.0);
        assert_eq!(r.t_upper, 1.0);
        assert_eq!(r.argmin, (0, 2));
        assert_eq!(r.argmax, (0, 0));
        assert!(r.applicable());
        // Moran-root residuals stay at solver precision.
        for (i, row) in r.t.iter().enumerate() {
            for (j, &tij) in row.iter().enumerate() {
                assert!((s.fiber_sum(i, j, tij) - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_root_interval_is_not_applicable() {
        let s: SpongeSpec<f64> = SpongeSpec::from_ratios(
            "degenerate",
            vec![0.5],
            vec![vec![0.5, 0.5]],
            vec![vec![vec![0.5, 0.25], vec![0.5, 0.25]]],
        )
        .unwrap();
        let r = fiber_roots(&s);
        assert!(!r.applicable());
        let err = solve_lambda2(&s, 0.5, 1.0).unwrap_err();
        assert!(matches!(err, Error::NotApplicable(_)));
    }

    #[test]
    fn t_outside_interval_is_a_precondition_error() {
        let s = single_slab();
        let r = fiber_roots(&s);
        let err = solve_lambda2(&s, r.t_upper + 0.1, 1.0).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let err = solve_lambda2(&s, r.t_lower, 1.0).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn alpha_bracket_cap_is_reported_outside_the_interval() {
        // t above every Moran root: F > 0 for all alpha, no bracket exists.
        let s = single_slab();
        let err = solve_alpha(&s, 0.9, 1.0, 0.0, 0.5, 0.0).unwrap_err();
        assert!(matches!(err, Error::BracketNotFound(_)));
    }

    #[test]
    fn single_slab_solution_matches_closed_forms() {
        // With one slab: G = 0 forces ln gamma = 0, then ln Z = lambda1 ln c
        // forces lambda1 = 0. With equal b and two columns, alpha and
        // lambda2 follow in closed form from q1 phi1 + q2 phi2 = 0.
        let s = single_slab();
        let t = 0.2f64;
        let sol = solve_lambda2(&s, t, 1.0).unwrap();

        let phi1 = (0.3f64.powf(t) + 0.1f64.powf(t)).ln();
        let phi2 = 0.2f64.powf(t).ln();
        let q1 = -phi2 / (phi1 - phi2);
        let q2 = 1.0 - q1;
        let alpha = (q1 / q2).ln() / (phi1 - phi2);
        let lambda2 = -((alpha * phi1).exp() + (alpha * phi2).exp()).ln() / 0.45f64.ln();

        assert!(sol.lambda1.abs() <= 1e-9);
        assert!((sol.alpha - alpha).abs() <= 1e-8);
        assert!((sol.lambda2 - lambda2).abs() <= 1e-8);
        assert!((sol.p.get(0, 0) - q1).abs() <= 1e-10);
        assert!((sol.p.get(0, 1) - q2).abs() <= 1e-10);
        assert!(sol.log_gamma[0].abs() <= 1e-9);
        assert!((sol.c_value - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn rho_does_not_matter_for_a_single_slab() {
        let s = single_slab();
        let a = solve_lambda2(&s, 0.2, 1.0).unwrap();
        let b = solve_lambda2(&s, 0.2, 0.5).unwrap();
        assert!((a.p.get(0, 0) - b.p.get(0, 0)).abs() < 1e-9);
        assert!((a.alpha - b.alpha).abs() < 1e-7);
    }

    #[test]
    fn residuals_and_self_consistency_hold_on_a_two_slab_spec() {
        let s = two_slab();
        let roots = fiber_roots(&s);
        let t = 0.5 * (roots.t_lower + roots.t_upper);
        for rho in [1.0, 0.5, 0.25] {
            let sol = solve_lambda2(&s, t, rho).unwrap();
            assert!(sol.residuals.alpha_equation <= 1e-12);
            assert!(sol.residuals.normalization <= 1e-10);
            assert!(sol.residuals.gamma_equation <= 1e-10);
            // The three equations force the weights to reproduce their own
            // parameters.
            assert!(sol.residuals.t_match <= 1e-8, "rho = {rho}");
            assert!((sol.objective.lambda1 - sol.lambda1).abs() <= 1e-8);
            assert!((sol.objective.lambda2 - sol.lambda2).abs() <= 1e-8);
            let total: f64 = sol.p.flat().iter().sum();
            assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn alpha_increases_with_t() {
        let s = two_slab();
        let roots = fiber_roots(&s);
        let grid = default_t_grid(&roots, 6);
        let curve = family_curve(&s, &grid, 1.0).unwrap();
        let alphas: Vec<f64> = curve
            .iter()
            .map(|pt| pt.solution.as_ref().expect("interior points solve").alpha)
            .collect();
        for w in alphas.windows(2) {
            assert!(w[1] > w[0], "alpha must increase along t: {alphas:?}");
        }
    }

    #[test]
    fn curve_rejects_out_of_range_grids() {
        let s = two_slab();
        let roots = fiber_roots(&s);
        let err = family_curve(&s, &[roots.t_upper + 0.01], 1.0).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn invalid_rho_is_rejected() {
        let s = two_slab();
        assert!(matches!(
            solve_lambda2(&s, 0.3, 0.0),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            solve_lambda2(&s, 0.3, 1.5),
            Err(Error::Precondition(_))
        ));
    }
}
