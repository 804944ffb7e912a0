//! Maximization of `lambda1(p) + lambda2(p) + t(p)` over the column simplex.
//!
//! The search is multi-start projected gradient ascent: a uniform start plus
//! seeded Dirichlet restarts, finite-difference gradients of the
//! renormalized objective, clip-and-renormalize projection with a positive
//! floor, backtracking line search with Barzilai-Borwein step seeds, and a
//! high-accuracy polish (five-point stencil, machine-tight `t` solves) that
//! measures the final KKT residual. Boundary faces are evaluated through
//! sub-sponges when the column count is small, and the one-parameter family
//! at `rho = 1` is swept as an independent candidate source when it applies.
//!
//! Restarts, faces and the sweep are deterministic: every random draw comes
//! from a seed derived from the configured base, and parallel results are
//! reduced in a fixed order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boxes::OracleComparison;
use crate::dimension::{objective, ObjectiveValue};
use crate::distribution::NestedDistribution;
use crate::error::Result;
use crate::family::{default_t_grid, family_curve, fiber_roots, solve_lambda2};
use crate::hypothesis::{check_generic_hypothesis, HypothesisReport, DEFAULT_GRID};
use crate::scalar::Real;
use crate::spec::SpongeSpec;

/// Settings for [`maximize`]; serialized into every report for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Random interior restarts in addition to the uniform start.
    pub restarts: usize,
    /// Base RNG seed; restart `k` uses `seed + k + 1`.
    pub seed: u64,
    /// Iteration cap per ascent.
    pub max_iterations: usize,
    /// Target KKT residual of the projected gradient at the optimum.
    pub stationarity_tol: f64,
    /// Residual tolerance of the `t(p)` solve inside bulk evaluations; the
    /// final polish always solves `t` to machine precision.
    pub t_tol: f64,
    /// Iterates are clipped to at least this weight before renormalizing.
    pub weight_floor: f64,
    /// Faces are enumerated when the spec has at most this many columns.
    pub face_limit: usize,
    /// Grid size of the family sweep at `rho = 1` when applicable.
    pub family_sweep_points: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            seed: 42,
            max_iterations: 600,
            stationarity_tol: 1e-9,
            t_tol: 1e-12,
            weight_floor: 1e-12,
            face_limit: 12,
            family_sweep_points: 40,
        }
    }
}

/// Diagnostics of one `maximize` run.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics<R: Real> {
    /// Whether the final KKT residual met `stationarity_tol`.
    pub converged: bool,
    /// Final KKT residual at the reported optimum (high-accuracy stencil).
    pub stationarity: R,
    /// Which candidate source produced the optimum.
    pub best_source: String,
    /// The uniform weights are exactly optimal by symmetry (all counts and
    /// ratios per level identical). The search still runs.
    pub exact_by_symmetry: bool,
    /// Ascent iterations summed over all starts.
    pub iterations: usize,
    /// Number of boundary faces evaluated.
    pub faces_evaluated: usize,
    /// Best objective seen on any proper face (never above the optimum:
    /// entropy has infinite inward slope at the boundary).
    pub best_face_value: Option<R>,
    pub warnings: Vec<String>,
}

/// Everything `maximize` knows at the end of a run.
#[derive(Debug, Clone, Serialize)]
pub struct DimensionReport<R: Real> {
    pub spec_name: String,
    /// The variational optimum `lambda1 + lambda2 + t` at `p`.
    pub dimension: R,
    pub objective: ObjectiveValue<R>,
    pub p: NestedDistribution<R>,
    pub hypothesis: HypothesisReport<R>,
    pub diagnostics: Diagnostics<R>,
    pub config: OptimizerConfig,
    /// Box-counting cross-check, attached by callers that ran one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleComparison<R>>,
}

/// Evaluates the renormalized objective at arbitrary positive weights.
/// Renormalization makes the map scale-invariant, so simplex stationarity
/// is simply "all free partial derivatives vanish".
fn eval_flat<R: Real>(spec: &SpongeSpec<R>, flat: &[R], t_tol: R) -> R {
    let p = NestedDistribution::from_flat(spec, flat).expect("interior iterate");
    objective(spec, &p, t_tol).expect("objective at interior iterate").total
}

/// Finite-difference gradient of the renormalized objective.
///
/// `rich` switches from central differences to a five-point stencil with
/// machine-tight `t` solves; coordinates too close to zero for a symmetric
/// step use a one-sided difference, which is all the KKT test needs there.
fn fd_gradient<R: Real>(spec: &SpongeSpec<R>, flat: &[R], rich: bool, t_tol: R) -> Vec<R> {
    let n = flat.len();
    let h = if rich { R::of(1e-4) } else { R::of(1e-6) };
    let t_tol = if rich { R::zero() } else { t_tol };
    let mut g = Vec::with_capacity(n);
    let mut work = flat.to_vec();
    let f0 = eval_flat(spec, flat, t_tol);
    for idx in 0..n {
        let x = flat[idx];
        let grad = if x < h * R::of(2.0) {
            // One-sided at the boundary; negative weights are not evaluable.
            work[idx] = x + h;
            let fp = eval_flat(spec, &work, t_tol);
            (fp - f0) / h
        } else if rich {
            work[idx] = x + h;
            let f1 = eval_flat(spec, &work, t_tol);
            work[idx] = x - h;
            let fm1 = eval_flat(spec, &work, t_tol);
            work[idx] = x + h + h;
            let f2 = eval_flat(spec, &work, t_tol);
            work[idx] = x - h - h;
            let fm2 = eval_flat(spec, &work, t_tol);
            (fm2 - f2 + R::of(8.0) * (f1 - fm1)) / (R::of(12.0) * h)
        } else {
            work[idx] = x + h;
            let f1 = eval_flat(spec, &work, t_tol);
            work[idx] = x - h;
            let fm1 = eval_flat(spec, &work, t_tol);
            (f1 - fm1) / (R::of(2.0) * h)
        };
        work[idx] = x;
        g.push(grad);
    }
    g
}

/// KKT residual on the simplex for the scale-invariant gradient: free
/// coordinates must have zero derivative, floored coordinates must not want
/// to grow.
fn kkt_residual<R: Real>(flat: &[R], g: &[R], floor: R) -> R {
    let active = floor * R::of(4.0);
    let mut r = R::zero();
    for (&x, &gi) in flat.iter().zip(g) {
        let v = if x > active { gi.abs() } else { gi.max(R::zero()) };
        if v > r {
            r = v;
        }
    }
    r
}

/// Ascent direction: the gradient with floored, outward-pointing coordinates
/// pinned, recentered so the move stays on the simplex.
fn direction<R: Real>(flat: &[R], g: &[R], floor: R) -> Vec<R> {
    let active = floor * R::of(4.0);
    let mut d: Vec<R> = g.to_vec();
    // Two passes: pinning a coordinate shifts the mean of the rest.
    for _ in 0..2 {
        let mut free = 0usize;
        let mut mean = R::zero();
        for (idx, &x) in flat.iter().enumerate() {
            if !(x <= active && d[idx] <= R::zero()) {
                free += 1;
                mean = mean + g[idx];
            }
        }
        if free == 0 {
            return vec![R::zero(); d.len()];
        }
        mean = mean / R::of(free as f64);
        for (idx, &x) in flat.iter().enumerate() {
            let centered = g[idx] - mean;
            d[idx] = if x <= active && centered < R::zero() {
                R::zero()
            } else {
                centered
            };
        }
    }
    d
}

fn clip_renorm<R: Real>(flat: &mut [R], floor: R) {
    let mut total = R::zero();
    for x in flat.iter_mut() {
        if *x < floor {
            *x = floor;
        }
        total = total + *x;
    }
    for x in flat.iter_mut() {
        *x = *x / total;
    }
}

/// Gaussian elimination with partial pivoting; `None` for a numerically
/// singular system. Matrix dimensions here are the number of columns of one
/// sponge, so a dense direct solve is the whole story.
fn solve_dense<R: Real>(mut m: Vec<Vec<R>>, mut rhs: Vec<R>) -> Option<Vec<R>> {
    let n = rhs.len();
    let scale = m
        .iter()
        .flat_map(|row| row.iter())
        .fold(R::zero(), |acc, &v| acc.max(v.abs()));
    if !(scale > R::zero()) {
        return None;
    }
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col].abs() <= scale * R::epsilon() {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f == R::zero() {
                continue;
            }
            for c in col..n {
                m[row][c] = m[row][c] - f * m[col][c];
            }
            rhs[row] = rhs[row] - f * rhs[col];
        }
    }
    let mut x = vec![R::zero(); n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for c in row + 1..n {
            s = s - m[row][c] * x[c];
        }
        x[row] = s / m[row][row];
    }
    Some(x)
}

/// Final stationarity polish.
///
/// Line-search ascent stalls once objective improvements drop below f64
/// evaluation noise, which happens while the gradient is still around 1e-8
/// — the gain per step scales as `|g|^2`. The gradient itself is measurable
/// to ~1e-12, so the last stretch treats stationarity as a root-finding
/// problem: bordered Newton steps on the simplex tangent
/// (`[H 1; 1^T 0] [d; v] = [-g; 0]` over the free coordinates), accepted
/// only when the measured KKT residual drops and the objective does not.
fn newton_polish<R: Real>(spec: &SpongeSpec<R>, flat: Vec<R>, cfg: &OptimizerConfig) -> Vec<R> {
    let floor = R::of(cfg.weight_floor);
    let active = floor * R::of(4.0);
    let tol = R::of(cfg.stationarity_tol);
    let hess_tol = R::of(cfg.t_tol);

    let mut best = flat;
    let mut g = fd_gradient(spec, &best, true, R::zero());
    let mut kkt = kkt_residual(&best, &g, floor);
    let mut f_best = eval_flat(spec, &best, R::zero());

    for _ in 0..4 {
        if kkt <= tol * R::of(0.5) {
            break;
        }
        // Coordinates big enough for a symmetric Hessian stencil; the rest
        // stay pinned for this step.
        let free: Vec<usize> = best
            .iter()
            .enumerate()
            .filter(|&(_, &x)| x > active.max(R::of(2e-6)))
            .map(|(idx, _)| idx)
            .collect();
        let d = free.len();
        if d < 2 {
            break;
        }

        let h: Vec<R> = free
            .iter()
            .map(|&u| R::of(1e-3).min(best[u] * R::of(0.5)))
            .collect();
        let f0 = eval_flat(spec, &best, hess_tol);
        let mut work = best.clone();
        // Increments are applied additively so `u == v` doubles the step
        // instead of clobbering it.
        let at = |w: &mut Vec<R>, u: usize, du: R, v: usize, dv: R| {
            w[free[u]] = w[free[u]] + du;
            w[free[v]] = w[free[v]] + dv;
            let val = eval_flat(spec, w, hess_tol);
            w[free[u]] = best[free[u]];
            w[free[v]] = best[free[v]];
            val
        };
        // Bordered system: Hessian block, then the sum-zero constraint row.
        let mut m = vec![vec![R::zero(); d + 1]; d + 1];
        let mut rhs = vec![R::zero(); d + 1];
        for u in 0..d {
            let fp = at(&mut work, u, h[u], u, R::zero());
            let fm = at(&mut work, u, -h[u], u, R::zero());
            m[u][u] = (fp - f0 - f0 + fm) / (h[u] * h[u]);
            for v in u + 1..d {
                let fpp = at(&mut work, u, h[u], v, h[v]);
                let fpm = at(&mut work, u, h[u], v, -h[v]);
                let fmp = at(&mut work, u, -h[u], v, h[v]);
                let fmm = at(&mut work, u, -h[u], v, -h[v]);
                let cross = (fpp - fpm - fmp + fmm) / (R::of(4.0) * h[u] * h[v]);
                m[u][v] = cross;
                m[v][u] = cross;
            }
            m[u][d] = R::one();
            m[d][u] = R::one();
            rhs[u] = -g[free[u]];
        }
        let Some(sol) = solve_dense(m, rhs) else {
            break;
        };

        // Keep the step small and strictly inside the floor.
        let mut scale = R::one();
        let cap = R::of(0.01);
        for (u, &orig) in free.iter().enumerate() {
            let mag = sol[u].abs();
            if mag * scale > cap {
                scale = cap / mag;
            }
            if sol[u] < R::zero() {
                let room = (best[orig] - floor) * R::of(0.5);
                if mag * scale > room {
                    scale = room / mag;
                }
            }
        }

        let mut accepted = false;
        for _ in 0..2 {
            let mut trial = best.clone();
            for (u, &orig) in free.iter().enumerate() {
                trial[orig] = trial[orig] + scale * sol[u];
            }
            let total = trial.iter().fold(R::zero(), |s, &x| s + x);
            for x in trial.iter_mut() {
                *x = *x / total;
            }
            let g_trial = fd_gradient(spec, &trial, true, R::zero());
            let kkt_trial = kkt_residual(&trial, &g_trial, floor);
            let f_trial = eval_flat(spec, &trial, R::zero());
            if kkt_trial < kkt && f_trial >= f_best - R::of(1e-9) {
                best = trial;
                g = g_trial;
                kkt = kkt_trial;
                f_best = f_best.max(f_trial);
                accepted = true;
                break;
            }
            scale = scale * R::of(0.5);
        }
        if !accepted {
            break;
        }
    }
    best
}

struct Ascent<R: Real> {
    flat: Vec<R>,
    value: R,
    iterations: usize,
}

struct Budget {
    max_iterations: usize,
    tol: f64,
    /// Whether to escalate to the five-point stencil near the optimum.
    polish: bool,
}

fn ascend<R: Real>(
    spec: &SpongeSpec<R>,
    start: Vec<R>,
    cfg: &OptimizerConfig,
    budget: &Budget,
) -> Ascent<R> {
    let floor = R::of(cfg.weight_floor);
    let t_tol = R::of(cfg.t_tol);
    let tol = R::of(budget.tol);
    let mut flat = start;
    clip_renorm(&mut flat, floor);

    let mut f = eval_flat(spec, &flat, t_tol);
    let mut rich = false;
    let mut g = fd_gradient(spec, &flat, rich, t_tol);
    let mut best_flat = flat.clone();
    let mut best_value = f;
    let mut kkt = kkt_residual(&flat, &g, floor);
    let mut step = R::of(0.1);
    let mut prev: Option<(Vec<R>, Vec<R>)> = None; // (flat, gradient)
    let mut iterations = 0usize;
    let mut stalls = 0usize;

    while iterations < budget.max_iterations {
        if kkt <= tol && (rich || !budget.polish) {
            break;
        }
        if kkt <= tol * R::of(64.0) && budget.polish && !rich {
            // Close enough that central-difference noise matters: switch to
            // the high-accuracy stencil and remeasure before trusting KKT.
            rich = true;
            g = fd_gradient(spec, &flat, rich, t_tol);
            kkt = kkt_residual(&flat, &g, floor);
            continue;
        }
        iterations += 1;

        let d = direction(&flat, &g, floor);
        let dd = d.iter().fold(R::zero(), |s, &x| s + x * x);
        if dd == R::zero() {
            break;
        }
        // Barzilai-Borwein seed from the previous accepted move.
        if let Some((pf, pg)) = &prev {
            let mut ss = R::zero();
            let mut sy = R::zero();
            for idx in 0..flat.len() {
                let s = flat[idx] - pf[idx];
                let y = g[idx] - pg[idx];
                ss = ss + s * s;
                sy = sy + s * y;
            }
            if sy < R::zero() {
                step = (-(ss / sy)).min(R::of(1e2)).max(R::of(1e-8));
            }
        }

        let mut accepted = false;
        let mut trial_step = step;
        for _ in 0..40 {
            let mut trial: Vec<R> = flat
                .iter()
                .zip(&d)
                .map(|(&x, &di)| x + trial_step * di)
                .collect();
            clip_renorm(&mut trial, floor);
            let ft = eval_flat(spec, &trial, t_tol);
            if ft > f + R::of(1e-4) * trial_step * dd {
                prev = Some((flat.clone(), g.clone()));
                flat = trial;
                f = ft;
                step = trial_step;
                accepted = true;
                break;
            }
            trial_step = trial_step / R::of(2.0);
            if trial_step < R::of(1e-13) {
                break;
            }
        }
        if f > best_value {
            best_value = f;
            best_flat = flat.clone();
        }
        if !accepted {
            stalls += 1;
            if !rich && budget.polish {
                rich = true;
            } else if stalls >= 2 {
                break;
            }
            step = R::of(0.1);
        } else {
            stalls = 0;
        }
        g = fd_gradient(spec, &flat, rich, t_tol);
        kkt = kkt_residual(&flat, &g, floor);
    }

    Ascent {
        flat: best_flat,
        value: best_value,
        iterations,
    }
}

/// Exponential draws normalized to the simplex: a flat Dirichlet sample.
fn dirichlet_start<R: Real>(n: usize, seed: u64) -> Vec<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<R> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            R::of(-u.ln())
        })
        .collect();
    let total = v.iter().fold(R::zero(), |s, &x| s + x);
    for x in v.iter_mut() {
        *x = *x / total;
    }
    v
}

/// A candidate optimum with its origin.
struct Candidate<R: Real> {
    flat: Vec<R>,
    value: R,
    source: String,
    iterations: usize,
}

/// Golden-section maximization of a unimodal-enough function on `[lo, hi]`.
fn golden_max<R: Real>(mut f: impl FnMut(R) -> R, mut lo: R, mut hi: R, iters: usize) -> (R, R) {
    let inv_phi = R::of(0.618_033_988_749_894_9);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Sweeps the family curve at `rho = 1` and refines around the best grid
/// point. Returns the best family weights found, if any point solved.
fn family_sweep<R: Real>(
    spec: &SpongeSpec<R>,
    points: usize,
) -> Result<Option<(Vec<R>, R)>> {
    let roots = fiber_roots(spec);
    if !roots.applicable() {
        return Ok(None);
    }
    let grid = default_t_grid(&roots, points.max(3));
    let curve = family_curve(spec, &grid, R::one())?;
    let mut best: Option<(usize, R, Vec<R>)> = None;
    for (idx, pt) in curve.iter().enumerate() {
        if let Some(sol) = &pt.solution {
            let v = sol.objective.total;
            if best.as_ref().map_or(true, |(_, bv, _)| v > *bv) {
                best = Some((idx, v, sol.p.flat()));
            }
        }
    }
    let Some((idx, mut best_value, mut best_flat)) = best else {
        return Ok(None);
    };
    // Refine between the neighbors of the best grid point.
    let lo = if idx == 0 { roots.t_lower + (grid[0] - roots.t_lower) / R::of(2.0) } else { grid[idx - 1] };
    let hi = if idx + 1 == grid.len() {
        roots.t_upper - (roots.t_upper - grid[idx]) / R::of(2.0)
    } else {
        grid[idx + 1]
    };
    let (_, refined) = golden_max(
        |t| match solve_lambda2(spec, t, R::one()) {
            Ok(sol) => {
                if sol.objective.total > best_value {
                    best_value = sol.objective.total;
                    best_flat = sol.p.flat();
                }
                sol.objective.total
            }
            Err(_) => R::neg_infinity(),
        },
        lo,
        hi,
        60,
    );
    let _ = refined;
    Ok(Some((best_flat, best_value)))
}

/// Keeps the columns of `spec` selected by `mask` (bits in row-major column
/// order), dropping slabs that lose all columns. Returns the sub-spec and
/// the flat index of each kept column in the original spec.
fn face_spec<R: Real>(spec: &SpongeSpec<R>, mask: u64) -> (SpongeSpec<R>, Vec<usize>) {
    let mut kept = Vec::new();
    let mut c = Vec::new();
    let mut b = Vec::new();
    let mut a = Vec::new();
    let mut u_c = Vec::new();
    let mut u_b = Vec::new();
    let mut u_a = Vec::new();
    let mut flat_idx = 0usize;
    for i in 0..spec.m() {
        let mut row_b = Vec::new();
        let mut row_a = Vec::new();
        let mut row_ub = Vec::new();
        let mut row_ua = Vec::new();
        for j in 0..spec.m_i(i) {
            if mask & (1 << flat_idx) != 0 {
                kept.push(flat_idx);
                row_b.push(spec.b[i][j]);
                row_a.push(spec.a[i][j].clone());
                row_ub.push(spec.u_b[i][j]);
                row_ua.push(spec.u_a[i][j].clone());
            }
            flat_idx += 1;
        }
        if !row_b.is_empty() {
            c.push(spec.c[i]);
            u_c.push(spec.u_c[i]);
            b.push(row_b);
            a.push(row_a);
            u_b.push(row_ub);
            u_a.push(row_ua);
        }
    }
    (
        SpongeSpec {
            name: format!("{}/face-{}", spec.name, mask),
            c,
            b,
            a,
            u_c,
            u_b,
            u_a,
        },
        kept,
    )
}

/// Maximizes the variational objective. Always returns a report; failure to
/// reach the stationarity target is recorded in the diagnostics rather than
/// raised, so callers can still inspect the best point found.
pub fn maximize<R: Real>(spec: &SpongeSpec<R>, cfg: &OptimizerConfig) -> Result<DimensionReport<R>> {
    let hypothesis = check_generic_hypothesis(spec, DEFAULT_GRID);
    let n = spec.pair_count();
    let mut warnings = Vec::new();
    if !hypothesis.holds {
        warnings.push(
            "separation hypothesis not established: the reported value is the exact optimum \
             over Bernoulli column weights, but its identification with the Hausdorff \
             dimension is only guaranteed under per-t fiber-sum separation"
                .to_string(),
        );
    }

    if n == 1 {
        let p = NestedDistribution::uniform(spec);
        let obj = objective(spec, &p, R::of(cfg.t_tol))?;
        return Ok(DimensionReport {
            spec_name: spec.name.clone(),
            dimension: obj.total,
            objective: obj,
            p,
            hypothesis,
            diagnostics: Diagnostics {
                converged: true,
                stationarity: R::zero(),
                best_source: "single-column".into(),
                exact_by_symmetry: true,
                iterations: 0,
                faces_evaluated: 0,
                best_face_value: None,
                warnings,
            },
            config: cfg.clone(),
            oracle: None,
        });
    }

    let full_budget = Budget {
        max_iterations: cfg.max_iterations,
        tol: cfg.stationarity_tol,
        polish: true,
    };

    // Interior multi-start: uniform plus seeded Dirichlet restarts.
    let mut starts: Vec<(String, Vec<R>)> = vec![(
        "uniform".into(),
        vec![R::one() / R::of(n as f64); n],
    )];
    for k in 0..cfg.restarts {
        starts.push((
            format!("restart-{k}"),
            dirichlet_start(n, cfg.seed + 1 + k as u64),
        ));
    }
    let mut candidates: Vec<Candidate<R>> = starts
        .into_par_iter()
        .map(|(source, start)| {
            let a = ascend(spec, start, cfg, &full_budget);
            Candidate {
                flat: a.flat,
                value: a.value,
                source,
                iterations: a.iterations,
            }
        })
        .collect();

    // Family sweep at rho = 1: independent candidate source, then polished
    // by the same ascent so the final point is stationary, not just on-curve.
    if hypothesis.holds {
        match family_sweep(spec, cfg.family_sweep_points) {
            Ok(Some((flat, _))) => {
                let a = ascend(spec, flat, cfg, &full_budget);
                candidates.push(Candidate {
                    flat: a.flat,
                    value: a.value,
                    source: "family-sweep".into(),
                    iterations: a.iterations,
                });
            }
            Ok(None) => warnings
                .push("family sweep skipped: degenerate Moran root interval".into()),
            Err(e) => warnings.push(format!("family sweep failed: {e}")),
        }
    }

    // Proper boundary faces through sub-sponges. The entropy terms have
    // infinite inward slope at the boundary, so faces can never win; they
    // are evaluated as a cross-check and reported.
    let mut faces_evaluated = 0usize;
    let mut best_face: Option<(u64, R, Vec<R>, Vec<usize>)> = None;
    if n <= cfg.face_limit {
        let face_budget = Budget {
            max_iterations: 200,
            tol: 1e-7,
            polish: false,
        };
        let full_mask: u64 = (1u64 << n) - 1;
        let masks: Vec<u64> = (1..full_mask).collect();
        faces_evaluated = masks.len();
        let results: Vec<(u64, R, Vec<R>, Vec<usize>)> = masks
            .into_par_iter()
            .map(|mask| {
                let (sub, kept) = face_spec(spec, mask);
                let sub_n = sub.pair_count();
                let mut best: Option<(R, Vec<R>)> = None;
                let mut starts = vec![vec![R::one() / R::of(sub_n as f64); sub_n]];
                if sub_n > 1 {
                    starts.push(dirichlet_start(sub_n, cfg.seed ^ (0x9e37 + mask)));
                }
                for start in starts {
                    let a = ascend(&sub, start, cfg, &face_budget);
                    if best.as_ref().map_or(true, |(v, _)| a.value > *v) {
                        best = Some((a.value, a.flat));
                    }
                }
                let (v, flat) = best.expect("at least one start");
                (mask, v, flat, kept)
            })
            .collect();
        for r in results {
            if best_face.as_ref().map_or(true, |(_, v, _, _)| r.1 > *v) {
                best_face = Some(r);
            }
        }
    } else if n > 1 {
        warnings.push(format!(
            "face enumeration skipped: {n} columns exceed the limit of {}",
            cfg.face_limit
        ));
    }
    if let Some((mask, value, flat, kept)) = &best_face {
        // Embed into the full simplex (zeros off the face) as a candidate.
        let mut full = vec![R::zero(); n];
        for (sub_idx, &orig) in kept.iter().enumerate() {
            full[orig] = flat[sub_idx];
        }
        candidates.push(Candidate {
            flat: full,
            value: *value,
            source: format!("face-{mask}"),
            iterations: 0,
        });
    }

    let iterations: usize = candidates.iter().map(|c| c.iterations).sum();
    let best = candidates
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.value
                .partial_cmp(&b.value)
                .unwrap()
                .then(ib.cmp(ia)) // ties: keep the earliest source
        })
        .map(|(_, c)| c)
        .expect("at least the uniform start");

    let polished = newton_polish(spec, best.flat.clone(), cfg);
    let p = NestedDistribution::from_flat(spec, &polished)?;
    let obj = objective(spec, &p, R::zero())?;
    let g = fd_gradient(spec, &polished, true, R::zero());
    let stationarity = kkt_residual(&polished, &g, R::of(cfg.weight_floor));
    let converged = stationarity <= R::of(cfg.stationarity_tol);
    if !converged {
        warnings.push(format!(
            "stationarity target {:e} not met: final KKT residual {:e}",
            cfg.stationarity_tol, stationarity
        ));
    }

    Ok(DimensionReport {
        spec_name: spec.name.clone(),
        dimension: obj.total,
        objective: obj,
        p,
        hypothesis,
        diagnostics: Diagnostics {
            converged,
            stationarity,
            best_source: best.source.clone(),
            exact_by_symmetry: spec.fully_symmetric(),
            iterations,
            faces_evaluated,
            best_face_value: best_face.as_ref().map(|(_, v, _, _)| *v),
            warnings,
        },
        config: cfg.clone(),
        oracle: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg() -> OptimizerConfig {
        OptimizerConfig {
            restarts: 4,
            ..OptimizerConfig::default()
        }
    }

    fn uniform_ratio_spec(name: &str, r: f64, m_ij: Vec<Vec<usize>>) -> SpongeSpec<f64> {
        let c = vec![r; m_ij.len()];
        let b: Vec<Vec<f64>> = m_ij.iter().map(|row| vec![r; row.len()]).collect();
        let a: Vec<Vec<Vec<f64>>> = m_ij
            .iter()
            .map(|row| row.iter().map(|&k| vec![r; k]).collect())
            .collect();
        SpongeSpec::from_ratios(name, c, b, a).unwrap()
    }

    #[test]
    fn full_cube_maximum_is_three() {
        let s = uniform_ratio_spec("cube", 0.5, vec![vec![2, 2], vec![2, 2]]);
        let report = maximize(&s, &quick_cfg()).unwrap();
        assert!((report.dimension - 3.0).abs() <= 1e-9);
        assert!(report.diagnostics.converged);
        assert!(report.diagnostics.exact_by_symmetry);
        // Identical fibers: the hypothesis fails and gets a warning.
        assert!(!report.hypothesis.holds);
        assert!(!report.diagnostics.warnings.is_empty());
    }

    #[test]
    fn singleton_reports_zero_via_single_column_path() {
        let s: SpongeSpec<f64> = SpongeSpec::from_ratios(
            "singleton",
            vec![0.5],
            vec![vec![0.375]],
            vec![vec![vec![0.25]]],
        )
        .unwrap();
        let report = maximize(&s, &quick_cfg()).unwrap();
        assert_eq!(report.dimension, 0.0);
        assert_eq!(report.diagnostics.best_source, "single-column");
        assert!(report.diagnostics.converged);
    }

    #[test]
    fn uneven_moran_counts_hit_the_closed_form() {
        // Uniform ratio r with column fiber counts m_ij: the objective
        // reduces to -sum p ln(p / m_ij) / ln(1/r), maximized at
        // p = m_ij / N with value ln(N) / ln(1/r).
        let s = uniform_ratio_spec("moran-6", 0.5, vec![vec![2, 2], vec![2]]);
        let report = maximize(&s, &quick_cfg()).unwrap();
        let expected = 6.0f64.ln() / 2.0f64.ln();
        assert!(
            (report.dimension - expected).abs() <= 1e-9,
            "got {}, want {}",
            report.dimension,
            expected
        );
        for &w in &report.p.flat() {
            assert!((w - 1.0 / 3.0).abs() <= 1e-6, "optimal weights are m_ij/N");
        }
        assert!(report.diagnostics.converged);
    }

    #[test]
    fn two_column_optimum_matches_golden_section_oracle() {
        // Single slab, singleton fibers: t = 0 and the objective is pure
        // lambda2, a one-dimensional problem a golden search can solve
        // without any optimizer code.
        let s: SpongeSpec<f64> = SpongeSpec::from_ratios(
            "two-col",
            vec![0.9],
            vec![vec![0.5, 0.25]],
            vec![vec![vec![0.4], vec![0.2]]],
        )
        .unwrap();
        let f = |x: f64| {
            let p = NestedDistribution::new(vec![vec![1.0 - x, x]]).unwrap();
            objective(&s, &p, 1e-12).unwrap().total
        };
        let (_, oracle) = golden_max(f, 1e-9, 1.0 - 1e-9, 80);
        let report = maximize(&s, &quick_cfg()).unwrap();
        assert!(
            (report.dimension - oracle).abs() <= 1e-8,
            "optimizer {} vs golden {}",
            report.dimension,
            oracle
        );
        assert!(report.diagnostics.converged);
    }

    #[test]
    fn faces_never_beat_the_interior() {
        let s = uniform_ratio_spec("moran-6", 0.5, vec![vec![2, 2], vec![2]]);
        let report = maximize(&s, &quick_cfg()).unwrap();
        let face = report
            .diagnostics
            .best_face_value
            .expect("faces enumerated for 3 columns");
        assert!(face <= report.dimension + 1e-12);
        assert_eq!(report.diagnostics.faces_evaluated, 6); // 2^3 - 2
    }

    #[test]
    fn family_sweep_source_appears_on_separating_specs() {
        let s: SpongeSpec<f64> = SpongeSpec::from_ratios(
            "separating",
            vec![0.5, 0.4],
            vec![vec![0.4, 0.3], vec![0.3]],
            vec![
                vec![vec![0.3, 0.1], vec![0.2]],
                vec![vec![0.25, 0.05]],
            ],
        )
        .unwrap();
        let report = maximize(&s, &quick_cfg()).unwrap();
        assert!(report.hypothesis.holds);
        assert!(report.diagnostics.converged);
        // The sweep candidate must never fall below what it contributed.
        let sweep = family_sweep(&s, 24).unwrap().expect("applicable");
        assert!(report.dimension >= sweep.1 - 1e-9);
    }

    #[test]
    fn reports_are_deterministic() {
        let s = uniform_ratio_spec("moran-6", 0.5, vec![vec![2, 2], vec![2]]);
        let a = serde_json::to_string(&maximize(&s, &quick_cfg()).unwrap()).unwrap();
        let b = serde_json::to_string(&maximize(&s, &quick_cfg()).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
