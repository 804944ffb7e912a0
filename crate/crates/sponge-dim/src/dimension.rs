//! Evaluation of the variational objective: for a column distribution `p` on
//! a sponge, the candidate dimension is `lambda1(p) + lambda2(p) + t(p)`.
//!
//! * `lambda1` compares the entropy of the slab marginals with the z-axis
//!   contraction: `sum_i p_i ln p_i / sum_i p_i ln c_i`.
//! * `lambda2` compares the conditional column entropy with the y-axis
//!   contraction: `(sum_ij p_ij ln p_ij - sum_i p_i ln p_i) / sum_ij p_ij ln b_ij`.
//! * `t(p)` is the unique root in `[0, 1]` of
//!   `g(t) = sum_ij p_ij ln(sum_k a[i][j][k]^t)`, the average Moran equation
//!   of the fibers.
//!
//! Both lambdas lie in `[0, 1]`: numerator and denominator are log-sums over
//! sub-probability weights, so the entropy never exceeds the contraction
//! term. Together with `t <= 1` the objective is bounded by 3.

use serde::{Deserialize, Serialize};

use crate::distribution::NestedDistribution;
use crate::error::{Error, Result};
use crate::scalar::{xlnx, Real};
use crate::solve::bracketed_root;
use crate::spec::SpongeSpec;

/// Default residual tolerance for the `t(p)` solve.
pub const T_TOL: f64 = 1e-12;

/// The two entropy-to-contraction ratios of a column distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaComponents<R: Real> {
    pub lambda1: R,
    pub lambda2: R,
}

impl<R: Real> LambdaComponents<R> {
    pub fn total(&self) -> R {
        self.lambda1 + self.lambda2
    }
}

/// Computes both lambda ratios. Zero-weight slabs and columns drop out of
/// every sum by the `0 ln 0 = 0` convention, so distributions supported on a
/// sub-sponge evaluate exactly as they would on that sub-sponge.
pub fn lambda_components<R: Real>(
    spec: &SpongeSpec<R>,
    p: &NestedDistribution<R>,
) -> Result<LambdaComponents<R>> {
    p.require_match(spec)?;
    let marginals = p.marginals();

    let mut slab_entropy = R::zero(); // sum_i p_i ln p_i
    let mut slab_scale = R::zero(); // sum_i p_i ln c_i
    for (i, &pi) in marginals.iter().enumerate() {
        slab_entropy = slab_entropy + xlnx(pi);
        slab_scale = slab_scale + pi * spec.c[i].ln();
    }

    let mut pair_entropy = R::zero(); // sum_ij p_ij ln p_ij
    let mut pair_scale = R::zero(); // sum_ij p_ij ln b_ij
    for (i, j, w) in p.support() {
        pair_entropy = pair_entropy + xlnx(w);
        pair_scale = pair_scale + w * spec.b[i][j].ln();
    }

    // Both entropy numerators are mathematically nonpositive, but input
    // mass is only normalized to the 1e-12 tolerance, which can push a
    // vanishing entropy a few ulps past zero (e.g. a lone marginal of
    // 1 + 2e-16); clamp so the lambdas keep their guaranteed sign.
    let slab_entropy = non_positive(slab_entropy);
    let conditional_entropy = non_positive(pair_entropy - slab_entropy);

    // Total mass is 1, so some p_i > 0 and both denominators are strictly
    // negative; the ratios are well defined for every valid input.
    Ok(LambdaComponents {
        lambda1: slab_entropy / slab_scale,
        lambda2: conditional_entropy / pair_scale,
    })
}

fn non_positive<R: Real>(x: R) -> R {
    if x > R::zero() {
        R::zero()
    } else {
        x
    }
}

/// The fiber Moran average `g(t) = sum_ij p_ij ln(sum_k a^t)` and its
/// derivative in `t`. `g` is strictly decreasing.
pub fn t_residual_d<R: Real>(spec: &SpongeSpec<R>, p: &NestedDistribution<R>, t: R) -> (R, R) {
    let mut g = R::zero();
    let mut dg = R::zero();
    for (i, j, w) in p.support() {
        let (v, d) = spec.log_fiber_sum_d(i, j, t);
        g = g + w * v;
        dg = dg + w * d;
    }
    (g, dg)
}

/// Residual of the `t(p)` equation at a given `t`.
pub fn t_residual<R: Real>(spec: &SpongeSpec<R>, p: &NestedDistribution<R>, t: R) -> R {
    t_residual_d(spec, p, t).0
}

/// Solves `g(t) = 0` on `[0, 1]` to `|g| <= tol`.
///
/// `g(0) = sum p_ij ln(fiber count) >= 0` and
/// `g(1) = sum p_ij ln(sum_k a) <= 0` for every valid spec, so a root always
/// exists; the endpoint guards return exactly 0 or 1 in the degenerate cases
/// (all supported fibers singletons, resp. all supported fiber sums equal 1).
pub fn t_of_p<R: Real>(spec: &SpongeSpec<R>, p: &NestedDistribution<R>, tol: R) -> Result<R> {
    p.require_match(spec)?;
    let (g0, _) = t_residual_d(spec, p, R::zero());
    if g0 <= R::zero() {
        return Ok(R::zero());
    }
    let (g1, _) = t_residual_d(spec, p, R::one());
    if g1 >= R::zero() {
        return Ok(R::one());
    }
    let out = bracketed_root(
        R::zero(),
        R::one(),
        g0,
        g1,
        |t| t_residual_d(spec, p, t),
        tol,
        200,
    );
    if !out.converged {
        return Err(Error::NonConvergence(format!(
            "t(p) residual {:e} above tolerance {:e} after {} iterations",
            out.residual, tol, out.iterations
        )));
    }
    Ok(out.x)
}

/// Every piece of the objective at one distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue<R: Real> {
    pub lambda1: R,
    pub lambda2: R,
    pub t: R,
    pub total: R,
}

/// Evaluates `lambda1 + lambda2 + t` at `p`.
pub fn objective<R: Real>(
    spec: &SpongeSpec<R>,
    p: &NestedDistribution<R>,
    t_tol: R,
) -> Result<ObjectiveValue<R>> {
    let lambdas = lambda_components(spec, p)?;
    let t = t_of_p(spec, p, t_tol)?;
    Ok(ObjectiveValue {
        lambda1: lambdas.lambda1,
        lambda2: lambdas.lambda2,
        t,
        total: lambdas.total() + t,
    })
}
