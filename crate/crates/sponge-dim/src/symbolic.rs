//! Symbolic dynamics over the box alphabet: cutting times, approximate
//! cubes, their Bernoulli measures and pointwise dimension traces.
//!
//! A word `omega` selects one box per level of the construction. After `n`
//! steps the z-edge is `prod c`, but the y- and x-edges shrink faster, so an
//! approximately cubical neighborhood fixes the y-index only up to the first
//! cutting time `L1(n)` and the x-index up to `L2(n)`:
//!
//! ```text
//! L1 = max { k <= n :  prod_{l<=k} b_(l)  >=  prod_{l<=n} c_(l) }
//! L2 = max { k <= n :  prod_{l<=k} a_(l)  >=  prod_{l<=n} c_(l) }
//! ```
//!
//! (computed in log space; the defining comparison allows equality). Both
//! are nondecreasing in `n`, `L2 <= L1 <= n`, and once
//! `n >= ln(a_min) / ln(c_max)` both are at least 1. Increments can exceed 1
//! when slabs have very different ratios; only level-ordered sponges
//! (`min c >= max b` and `min b >= max a`) guarantee steps of at most 1.
//!
//! All prefix sums are Neumaier-compensated and comparisons carry a few ulps
//! of slack, so exact ties (such as `b = c^2` on dyadic ratios) resolve the
//! same way the real numbers would.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::NestedDistribution;
use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};
use crate::spec::SpongeSpec;

/// One construction step: slab `i`, column `j`, box `k` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symbol {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

/// A finite word over the box alphabet of one spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSequence {
    symbols: Vec<Symbol>,
}

impl SymbolSequence {
    /// Validates every symbol against the spec's index ranges.
    pub fn new<R: Real>(spec: &SpongeSpec<R>, symbols: Vec<Symbol>) -> Result<Self> {
        for (pos, s) in symbols.iter().enumerate() {
            let ok = s.i < spec.m() && s.j < spec.m_i(s.i) && s.k < spec.m_ij(s.i, s.j);
            if !ok {
                return Err(Error::Precondition(format!(
                    "symbol ({}, {}, {}) at position {} is outside the index set",
                    s.i + 1,
                    s.j + 1,
                    s.k + 1,
                    pos + 1
                )));
            }
        }
        Ok(Self { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn get(&self, pos: usize) -> Symbol {
        self.symbols[pos]
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.symbols
    }
}

/// Comparison slack for cutting-time conditions: a few ulps of the compared
/// magnitudes, so exact real ties survive floating point.
fn tie_slack<R: Real>(scale: R) -> R {
    R::epsilon() * (R::one() + scale.abs()) * R::of(16.0)
}

/// Smallest `n` for which both cutting times are guaranteed positive:
/// `ceil(ln(a_min) / ln(c_max))`.
pub fn min_cut_length<R: Real>(spec: &SpongeSpec<R>) -> usize {
    let ratio = spec.a_min().ln() / spec.c_max().ln();
    let n = ratio.as_f64().ceil();
    (n as usize).max(1)
}

/// Incremental cutting-time tracker over a growing word.
///
/// Keeps compensated prefix sums of `ln c`, `ln b`, `ln a` and advances both
/// cutting times after every push (a while-loop: increments above 1 are
/// legal). Every 1000 steps the incremental state is audited against a full
/// rescan.
pub struct CutTracker<'s, R: Real> {
    spec: &'s SpongeSpec<R>,
    sb: Vec<R>, // prefix sums of ln b, sb[k] = sum over first k symbols
    sa: Vec<R>,
    sc: CompensatedSum<R>,
    sb_acc: CompensatedSum<R>,
    sa_acc: CompensatedSum<R>,
    l1: usize,
    l2: usize,
    n: usize,
}

/// Cutting state after a push.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutState<R: Real> {
    pub n: usize,
    pub l1: usize,
    pub l2: usize,
    /// `SB_{L1} - SC_n >= 0`, at most `ln(1 / a_min)` plus slack.
    pub b_excess: R,
    /// `SA_{L2} - SC_n >= 0`, same bound.
    pub a_excess: R,
}

impl<'s, R: Real> CutTracker<'s, R> {
    pub fn new(spec: &'s SpongeSpec<R>) -> Self {
        Self {
            spec,
            sb: vec![R::zero()],
            sa: vec![R::zero()],
            sc: CompensatedSum::new(),
            sb_acc: CompensatedSum::new(),
            sa_acc: CompensatedSum::new(),
            l1: 0,
            l2: 0,
            n: 0,
        }
    }

    /// Appends one symbol and returns the updated cutting state.
    pub fn push(&mut self, s: Symbol) -> CutState<R> {
        self.n += 1;
        self.sc.add(self.spec.c[s.i].ln());
        self.sb_acc.add(self.spec.b[s.i][s.j].ln());
        self.sa_acc.add(self.spec.a[s.i][s.j][s.k].ln());
        self.sb.push(self.sb_acc.value());
        self.sa.push(self.sa_acc.value());

        let sc = self.sc.value();
        let slack = tie_slack(sc);
        while self.l1 < self.n && self.sb[self.l1 + 1] >= sc - slack {
            self.l1 += 1;
        }
        while self.l2 < self.n && self.sa[self.l2 + 1] >= sc - slack {
            self.l2 += 1;
        }
        if self.n % 1000 == 0 {
            self.audit(sc, slack);
        }
        CutState {
            n: self.n,
            l1: self.l1,
            l2: self.l2,
            b_excess: self.sb[self.l1] - sc,
            a_excess: self.sa[self.l2] - sc,
        }
    }

    /// Recomputes both cutting times by scanning the prefix arrays and
    /// reconciles the incremental state. A disagreement would mean the
    /// incremental advance skipped a condition change, which monotonicity
    /// rules out; the rescan result wins regardless.
    fn audit(&mut self, sc: R, slack: R) {
        let scan = |prefix: &[R]| {
            let mut l = 0usize;
            while l < self.n && prefix[l + 1] >= sc - slack {
                l += 1;
            }
            l
        };
        let l1 = scan(&self.sb);
        let l2 = scan(&self.sa);
        debug_assert_eq!(l1, self.l1, "incremental L1 diverged at n = {}", self.n);
        debug_assert_eq!(l2, self.l2, "incremental L2 diverged at n = {}", self.n);
        self.l1 = l1;
        self.l2 = l2;
    }

    pub fn state(&self) -> CutState<R> {
        let sc = self.sc.value();
        CutState {
            n: self.n,
            l1: self.l1,
            l2: self.l2,
            b_excess: self.sb[self.l1] - sc,
            a_excess: self.sa[self.l2] - sc,
        }
    }
}

/// Cutting times of `word` at length `n`.
pub fn cutting_times<R: Real>(
    spec: &SpongeSpec<R>,
    word: &SymbolSequence,
    n: usize,
) -> Result<(usize, usize)> {
    check_length(spec, word, n)?;
    let mut tracker = CutTracker::new(spec);
    let mut state = tracker.state();
    for l in 0..n {
        state = tracker.push(word.get(l));
    }
    Ok((state.l1, state.l2))
}

fn check_length<R: Real>(spec: &SpongeSpec<R>, word: &SymbolSequence, n: usize) -> Result<()> {
    let min_n = min_cut_length(spec);
    if n < min_n {
        return Err(Error::Precondition(format!(
            "n = {n} is below the cube threshold {min_n} (cutting times may be empty)"
        )));
    }
    if word.len() < n {
        return Err(Error::Precondition(format!(
            "word has {} symbols, needs at least {n}",
            word.len()
        )));
    }
    Ok(())
}

/// The approximately cubical neighborhood of a word at depth `n`: the slab
/// indices are fixed up to `n`, column indices up to `l1`, box indices up to
/// `l2`. Edges and measure are stored in log space; at trace lengths the raw
/// values underflow long before the logs lose accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproximateCubeView<R: Real> {
    pub n: usize,
    pub l1: usize,
    pub l2: usize,
    /// `[ln(x-edge), ln(y-edge), ln(z-edge)]` of the covering box stack.
    pub log_edges: [R; 3],
    /// `ln` of the Bernoulli measure of the neighborhood.
    pub log_measure: R,
}

/// Builds the approximate cube at depth `n` and its measure under the
/// distribution with column weights `p` and fiber exponent `t`:
///
/// ```text
/// ln mu = sum_{l<=L1} ln p_(ij)  +  sum_{L1<l<=n} ln p_(i)
///       + sum_{l<=L2} ( t ln a_(ijk) - ln sum_k a^t )
/// ```
pub fn approximate_cube<R: Real>(
    spec: &SpongeSpec<R>,
    p: &NestedDistribution<R>,
    t: R,
    word: &SymbolSequence,
    n: usize,
) -> Result<ApproximateCubeView<R>> {
    p.require_match(spec)?;
    check_length(spec, word, n)?;
    let marginals = p.marginals();

    let mut tracker = CutTracker::new(spec);
    let mut state = tracker.state();
    for l in 0..n {
        state = tracker.push(word.get(l));
    }
    let (l1, l2) = (state.l1, state.l2);

    let mut log_measure = CompensatedSum::new();
    let mut log_edge_x = CompensatedSum::new();
    let mut log_edge_y = CompensatedSum::new();
    let mut log_edge_z = CompensatedSum::new();
    for l in 0..n {
        let s = word.get(l);
        log_edge_z.add(spec.c[s.i].ln());
        if l < l1 {
            log_edge_y.add(spec.b[s.i][s.j].ln());
            let w = p.get(s.i, s.j);
            if w <= R::zero() {
                return Err(Error::ZeroProbability {
                    position: l + 1,
                    symbol: format!("({}, {})", s.i + 1, s.j + 1),
                });
            }
            log_measure.add(w.ln());
        } else {
            let pi = marginals[s.i];
            if pi <= R::zero() {
                return Err(Error::ZeroProbability {
                    position: l + 1,
                    symbol: format!("({})", s.i + 1),
                });
            }
            log_measure.add(pi.ln());
        }
        if l < l2 {
            let a = spec.a[s.i][s.j][s.k];
            log_edge_x.add(a.ln());
            log_measure.add(t * a.ln() - spec.log_fiber_sum(s.i, s.j, t));
        }
    }

    Ok(ApproximateCubeView {
        n,
        l1,
        l2,
        log_edges: [log_edge_x.value(), log_edge_y.value(), log_edge_z.value()],
        log_measure: log_measure.value(),
    })
}

/// Samples a word of length `len` from the Bernoulli measure with symbol
/// probabilities `q_ijk = p_ij * a_ijk^t / sum_k a_ijk^t`, seeded and
/// reproducible.
pub fn sample_word<R: Real>(
    spec: &SpongeSpec<R>,
    p: &NestedDistribution<R>,
    t: R,
    len: usize,
    seed: u64,
) -> Result<SymbolSequence> {
    p.require_match(spec)?;
    let mut symbols_by_mass: Vec<(f64, Symbol)> = Vec::with_capacity(spec.symbol_count());
    let mut cum = 0.0f64;
    for (i, j, w) in p.support() {
        let fiber_total = spec.fiber_sum(i, j, t);
        for k in 0..spec.m_ij(i, j) {
            let q = w * spec.a[i][j][k].powf(t) / fiber_total;
            cum += q.as_f64();
            symbols_by_mass.push((cum, Symbol { i, j, k }));
        }
    }
    if symbols_by_mass.is_empty() {
        return Err(Error::Precondition("distribution has empty support".into()));
    }
    // Guard against rounding: the last threshold must catch every draw.
    let last = symbols_by_mass.len() - 1;
    symbols_by_mass[last].0 = f64::INFINITY;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let u: f64 = rng.gen::<f64>() * cum.min(1.0);
        let idx = symbols_by_mass.partition_point(|(threshold, _)| *threshold <= u);
        out.push(symbols_by_mass[idx.min(last)].1);
    }
    Ok(SymbolSequence { symbols: out })
}

/// The point of the attractor addressed by the first `n` symbols, returned
/// as (center of the depth-`n` box, edge lengths). The center is within
/// half an edge of the true address of the infinite word.
pub fn chi_point<R: Real>(
    spec: &SpongeSpec<R>,
    word: &SymbolSequence,
    n: usize,
) -> Result<([R; 3], [R; 3])> {
    if word.len() < n {
        return Err(Error::Precondition(format!(
            "word has {} symbols, needs at least {n}",
            word.len()
        )));
    }
    let mut corner = [R::zero(); 3];
    let mut edge = [R::one(); 3];
    for l in 0..n {
        let s = word.get(l);
        corner[0] = corner[0] + edge[0] * spec.u_a[s.i][s.j][s.k];
        corner[1] = corner[1] + edge[1] * spec.u_b[s.i][s.j];
        corner[2] = corner[2] + edge[2] * spec.u_c[s.i];
        edge[0] = edge[0] * spec.a[s.i][s.j][s.k];
        edge[1] = edge[1] * spec.b[s.i][s.j];
        edge[2] = edge[2] * spec.c[s.i];
    }
    let two = R::of(2.0);
    Ok((
        [
            corner[0] + edge[0] / two,
            corner[1] + edge[1] / two,
            corner[2] + edge[2] / two,
        ],
        edge,
    ))
}

/// One row of a pointwise dimension trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint<R: Real> {
    pub n: usize,
    pub l1: usize,
    pub l2: usize,
    /// `ln mu(B_n) / ln(z-edge)`: the pointwise dimension quotient.
    pub d_pn: R,
    /// `sum_{l<=L1} ln b / sum_{l<=n} ln c`; tends to 1 along typical words.
    pub beta_n: R,
    /// `sum_{l<=L2} ln a / sum_{l<=n} ln c`; tends to 1 along typical words.
    pub eta_n: R,
}

/// Follows `d_{p,n}`, `beta_n` and `eta_n` for every `n` from the cube
/// threshold to `n_max`. Requires positive column weight along the whole
/// word (the trace evaluates measures of every prefix).
pub fn pointwise_dimension_trace<R: Real>(
    spec: &SpongeSpec<R>,
    p: &NestedDistribution<R>,
    t: R,
    word: &SymbolSequence,
    n_max: usize,
) -> Result<Vec<TracePoint<R>>> {
    p.require_match(spec)?;
    check_length(spec, word, n_max)?;
    let n_min = min_cut_length(spec);
    let marginals = p.marginals();

    // Prefix sums over the word: logs of p_ij, p_i, b, a, c and the fiber
    // normalizer at exponent t.
    let len = n_max + 1;
    let mut sp_pair = Vec::with_capacity(len);
    let mut sp_slab = Vec::with_capacity(len);
    let mut s_fiber = Vec::with_capacity(len);
    let mut s_a = Vec::with_capacity(len);
    let mut s_b = Vec::with_capacity(len);
    let mut acc_pair = CompensatedSum::new();
    let mut acc_slab = CompensatedSum::new();
    let mut acc_fiber = CompensatedSum::new();
    let mut acc_a = CompensatedSum::new();
    let mut acc_b = CompensatedSum::new();
    sp_pair.push(R::zero());
    sp_slab.push(R::zero());
    s_fiber.push(R::zero());
    s_a.push(R::zero());
    s_b.push(R::zero());
    for l in 0..n_max {
        let s = word.get(l);
        let w = p.get(s.i, s.j);
        if w <= R::zero() {
            return Err(Error::ZeroProbability {
                position: l + 1,
                symbol: format!("({}, {})", s.i + 1, s.j + 1),
            });
        }
        acc_pair.add(w.ln());
        acc_slab.add(marginals[s.i].ln());
        acc_fiber.add(spec.log_fiber_sum(s.i, s.j, t));
        acc_a.add(spec.a[s.i][s.j][s.k].ln());
        acc_b.add(spec.b[s.i][s.j].ln());
        sp_pair.push(acc_pair.value());
        sp_slab.push(acc_slab.value());
        s_fiber.push(acc_fiber.value());
        s_a.push(acc_a.value());
        s_b.push(acc_b.value());
    }

    let mut tracker = CutTracker::new(spec);
    let mut out = Vec::with_capacity(n_max.saturating_sub(n_min) + 1);
    let mut sc = CompensatedSum::new();
    for l in 0..n_max {
        let s = word.get(l);
        sc.add(spec.c[s.i].ln());
        let state = tracker.push(s);
        let n = l + 1;
        if n < n_min {
            continue;
        }
        let (l1, l2) = (state.l1, state.l2);
        let log_measure =
            sp_pair[l1] + (sp_slab[n] - sp_slab[l1]) + t * s_a[l2] - s_fiber[l2];
        let sc_n = sc.value();
        out.push(TracePoint {
            n,
            l1,
            l2,
            d_pn: log_measure / sc_n,
            beta_n: s_b[l1] / sc_n,
            eta_n: s_a[l2] / sc_n,
        });
    }
    Ok(out)
}
