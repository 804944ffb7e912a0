//! Acceptance gate: one test per primary requirement of the library, each
//! exercising the public API end to end at its stated tolerance. Every test
//! prints a single `ACCEPTANCE PASS` summary line (visible with
//! `--nocapture`); the harness line per test doubles as the pass/fail
//! verdict. Fixtures are built in code so a failure always points at a
//! self-contained input.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sponge_dim::boxes::{
    box_count_estimate, default_deltas, generate_cover, oracle_comparison, DEFAULT_COVER_CAP,
    DEFAULT_DELTA_COUNT,
};
use sponge_dim::dimension::{t_of_p, t_residual};
use sponge_dim::family::{default_t_grid, family_curve, fiber_roots, solve_lambda2};
use sponge_dim::hypothesis::check_generic_hypothesis;
use sponge_dim::optimize::{maximize, OptimizerConfig};
use sponge_dim::symbolic::{
    approximate_cube, min_cut_length, pointwise_dimension_trace, sample_word, CutTracker, Symbol,
};
use sponge_dim::{Error, NestedDistribution, SpongeSpec, SymbolSequence};

// ---------------------------------------------------------------- fixtures

/// A self-similar spec with every ratio equal to `r`; `fibers[i][j]` is the
/// number of boxes in column `(i, j)`.
fn uniform_spec(name: &str, r: f64, fibers: &[&[usize]]) -> SpongeSpec {
    let c = vec![r; fibers.len()];
    let b: Vec<Vec<f64>> = fibers.iter().map(|cols| vec![r; cols.len()]).collect();
    let a: Vec<Vec<Vec<f64>>> = fibers
        .iter()
        .map(|cols| cols.iter().map(|&m| vec![r; m]).collect())
        .collect();
    SpongeSpec::from_ratios(name, c, b, a).expect("uniform fixture is valid")
}

/// Two slabs, three columns, five boxes; passes the generic hypothesis and
/// has a non-degenerate fiber-root interval. Also level-ordered
/// (`b_max <= c_min` and `a_max <= b_min`), which the cutting-time test
/// relies on.
fn separating() -> SpongeSpec {
    SpongeSpec::from_ratios(
        "separating",
        vec![0.5, 0.4],
        vec![vec![0.4, 0.3], vec![0.3]],
        vec![vec![vec![0.3, 0.1], vec![0.2]], vec![vec![0.25, 0.05]]],
    )
    .expect("fixture is valid")
}

/// One tall slab with two columns of unequal fiber sums; the hypothesis
/// holds on all of [0, 1].
fn single_slab() -> SpongeSpec {
    SpongeSpec::from_ratios(
        "single-slab",
        vec![0.9],
        vec![vec![0.45, 0.45]],
        vec![vec![vec![0.3, 0.1], vec![0.2]]],
    )
    .expect("fixture is valid")
}

// The next three fixtures have matched middle ratios (`b_ij = c_i` for every
// column). That makes the two entropy denominators equal, which is exactly
// when the variational maximizer lies on the rho = 1 slice of the Gibbs
// family: the maximizer always has the family form with slab exponent
// rho = (sum p ln c) / (sum p ln b), and b = c forces that ratio to 1. On
// specs with b < c somewhere the rho = 1 curve peaks strictly below the
// optimum (by several 1e-3 on typical inputs), so the stationarity
// crosscheck is only meaningful on matched specs.

/// Matched two-slab spec: hypothesis holds, root interval (0, ~0.41).
fn matched_two_slab() -> SpongeSpec {
    SpongeSpec::from_ratios(
        "matched-two-slab",
        vec![0.5, 0.4],
        vec![vec![0.5, 0.5], vec![0.4]],
        vec![vec![vec![0.3, 0.1], vec![0.2]], vec![vec![0.25, 0.05]]],
    )
    .expect("fixture is valid")
}

/// Matched single-slab spec: hypothesis holds, root interval (0, ~0.45).
fn matched_single_slab() -> SpongeSpec {
    SpongeSpec::from_ratios(
        "matched-single-slab",
        vec![0.5],
        vec![vec![0.5, 0.5]],
        vec![vec![vec![0.35, 0.1], vec![0.3]]],
    )
    .expect("fixture is valid")
}

/// Matched spec with slabs of different column counts: hypothesis holds,
/// root interval (0, ln 3 / ln 10).
fn matched_mixed() -> SpongeSpec {
    SpongeSpec::from_ratios(
        "matched-mixed",
        vec![0.45, 0.3],
        vec![vec![0.45, 0.45], vec![0.3, 0.3, 0.3]],
        vec![
            vec![vec![0.4, 0.05], vec![0.25]],
            vec![vec![0.25, 0.05], vec![0.15], vec![0.1, 0.1, 0.1]],
        ],
    )
    .expect("fixture is valid")
}

/// Level-ordered spec with mildly spread ratios.
fn gentle() -> SpongeSpec {
    SpongeSpec::from_ratios(
        "gentle",
        vec![0.5, 0.45],
        vec![vec![0.45, 0.4], vec![0.4]],
        vec![vec![vec![0.3, 0.1], vec![0.35]], vec![vec![0.25, 0.15]]],
    )
    .expect("fixture is valid")
}

/// Level-ordered spec with exactly halving ratios per level.
fn dyadic() -> SpongeSpec {
    SpongeSpec::from_ratios(
        "dyadic",
        vec![0.5, 0.5],
        vec![vec![0.25, 0.25], vec![0.25]],
        vec![
            vec![vec![0.125, 0.125], vec![0.125]],
            vec![vec![0.125, 0.125]],
        ],
    )
    .expect("fixture is valid")
}

/// A carpet-like spec: planar structure with single-box fibers, so the
/// optimal `t` is 0 and the dimension has the closed form
/// `1 + ln 2 / ln(1/0.4)`.
fn carpet_like() -> SpongeSpec {
    SpongeSpec::from_ratios(
        "carpet-like",
        vec![0.5, 0.5],
        vec![vec![0.4, 0.4], vec![0.4, 0.4]],
        vec![
            vec![vec![0.35], vec![0.35]],
            vec![vec![0.35], vec![0.35]],
        ],
    )
    .expect("fixture is valid")
}

/// Four symbols (two slabs, one column each, two fiber boxes each): small
/// enough for exhaustive word enumeration.
fn four_symbol() -> SpongeSpec {
    SpongeSpec::from_ratios(
        "four-symbol",
        vec![0.4, 0.35],
        vec![vec![0.35], vec![0.3]],
        vec![vec![vec![0.3, 0.25]], vec![vec![0.25, 0.2]]],
    )
    .expect("fixture is valid")
}

fn hypothesis_specs() -> Vec<SpongeSpec> {
    vec![matched_two_slab(), matched_single_slab(), matched_mixed()]
}

fn all_symbols(spec: &SpongeSpec) -> Vec<Symbol> {
    spec.pairs()
        .flat_map(|(i, j)| (0..spec.m_ij(i, j)).map(move |k| Symbol { i, j, k }))
        .collect()
}

// -------------------------------------------------------------- criterion 1

#[test]
fn criterion_01_uniform_specs_match_the_similarity_dimension() {
    // For a self-similar spec with N boxes of common ratio r the dimension
    // is log N / log(1/r); computed here from (r, N) alone.
    let cases: [(f64, &[&[usize]]); 5] = [
        (0.5, &[&[2, 2], &[2]]),
        (0.4, &[&[2, 2], &[2, 2]]),
        (0.3, &[&[3, 2, 1], &[2, 2], &[3]]),
        (0.25, &[&[4, 3, 2, 1], &[2, 2, 4], &[3, 3]]),
        (0.2, &[&[1, 1, 1, 1, 1], &[2, 1, 1, 1], &[1, 2, 1], &[3, 3]]),
    ];
    let cfg = OptimizerConfig::default();
    let mut worst = 0.0f64;
    for (r, fibers) in cases {
        let n: usize = fibers.iter().map(|cols| cols.iter().sum::<usize>()).sum();
        assert!(n <= 27, "fixture size {n} out of range");
        let spec = uniform_spec(&format!("uniform-r{r}"), r, fibers);
        let expected = (n as f64).ln() / (1.0 / r).ln();
        let start = Instant::now();
        let report = maximize(&spec, &cfg).expect("maximize");
        let elapsed = start.elapsed();
        let err = (report.dimension - expected).abs();
        assert!(
            err <= 1e-6,
            "r = {r}, N = {n}: got {} want {expected} (error {err:.3e})",
            report.dimension
        );
        assert!(elapsed < Duration::from_secs(10), "r = {r}: took {elapsed:?}");
        worst = worst.max(err);
    }
    println!(
        "ACCEPTANCE PASS: 5 uniform specs match log N / log(1/r) within 1e-6 \
         (worst error {worst:.3e})"
    );
}

// -------------------------------------------------------------- criterion 2

#[test]
fn criterion_02_full_cube_and_singleton_dimensions_are_exact() {
    let cube = uniform_spec("full-cube", 0.5, &[&[2, 2], &[2, 2]]);
    let cfg = OptimizerConfig::default();
    let report = maximize(&cube, &cfg).expect("maximize");
    let cube_err = (report.dimension - 3.0).abs();
    assert!(cube_err <= 1e-8, "full cube: {} (error {cube_err:.3e})", report.dimension);

    let point = SpongeSpec::from_ratios(
        "singleton",
        vec![0.4],
        vec![vec![0.3]],
        vec![vec![vec![0.2]]],
    )
    .expect("fixture is valid");
    let report = maximize(&point, &cfg).expect("maximize");
    assert!(
        report.dimension.abs() <= 1e-12,
        "singleton: {} should be 0",
        report.dimension
    );
    println!(
        "ACCEPTANCE PASS: full cube 3.0 within 1e-8 (error {cube_err:.3e}), \
         singleton 0.0 within 1e-12 (got {})",
        report.dimension
    );
}

// -------------------------------------------------------------- criterion 3

/// Draws a valid spec with 1–3 slabs, 1–3 columns per slab, 1–3 boxes per
/// column. Row sums stay below 0.95 and nesting is enforced by capping each
/// ratio at both its parent and `0.95 / count`.
fn random_spec(rng: &mut ChaCha8Rng, case: usize) -> SpongeSpec {
    let m = rng.gen_range(1..=3);
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.0)).collect();
    let scale = 0.9 / raw.iter().sum::<f64>();
    let c: Vec<f64> = raw.iter().map(|u| u * scale).collect();
    let mut b = Vec::with_capacity(m);
    let mut a = Vec::with_capacity(m);
    for &ci in &c {
        let mi = rng.gen_range(1..=3usize);
        let cap_b = ci.min(0.95 / mi as f64);
        let row: Vec<f64> = (0..mi).map(|_| rng.gen_range(0.3..1.0) * cap_b).collect();
        let mut fibers = Vec::with_capacity(mi);
        for &bij in &row {
            let mij = rng.gen_range(1..=3usize);
            let cap_a = bij.min(0.95 / mij as f64);
            fibers.push((0..mij).map(|_| rng.gen_range(0.3..1.0) * cap_a).collect::<Vec<f64>>());
        }
        b.push(row);
        a.push(fibers);
    }
    SpongeSpec::from_ratios(&format!("random-{case}"), c, b, a).expect("random spec is valid")
}

#[test]
fn criterion_03_t_roots_have_machine_small_residuals_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_g = 0.0f64;
    let mut worst_fiber = 0.0f64;
    for case in 0..100 {
        let spec = random_spec(&mut rng, case);
        let flat: Vec<f64> = (0..spec.pair_count())
            .map(|_| rng.gen_range(0.05..1.0))
            .collect();
        let p = NestedDistribution::from_flat(&spec, &flat).expect("weights");

        let t = t_of_p(&spec, &p, 1e-12).expect("t solve");
        let g = t_residual(&spec, &p, t).abs();
        assert!(g <= 1e-12, "case {case}: |g({t})| = {g:.3e}");
        worst_g = worst_g.max(g);

        let roots = fiber_roots(&spec);
        for (i, j) in spec.pairs() {
            let tij = roots.t[i][j];
            let total: f64 = spec.fiber(i, j).iter().map(|&aijk| aijk.powf(tij)).sum();
            let err = (total - 1.0).abs();
            assert!(err <= 1e-12, "case {case}: fiber ({i}, {j}) sums to {total}");
            worst_fiber = worst_fiber.max(err);
        }
    }
    println!(
        "ACCEPTANCE PASS: 100 random (spec, p) pairs solved with |g(t)| <= 1e-12 \
         (worst {worst_g:.3e}) and fiber-root residuals <= 1e-12 (worst {worst_fiber:.3e})"
    );
}

// -------------------------------------------------------------- criterion 4

/// Mean of `ln S_ij(t)` under the Gibbs weights at the given parameters,
/// computed directly from the ratios (independently of the solver):
/// `p_ij ∝ c_i^l1 γ_i^{ρ-1} b_ij^l2 S_ij^α` with `γ_i = Σ_j b_ij^l2 S_ij^α`.
fn gibbs_mean_log_fiber_sum(
    spec: &SpongeSpec,
    t: f64,
    lambda1: f64,
    lambda2: f64,
    rho: f64,
    alpha: f64,
) -> f64 {
    let mut z = 0.0;
    let mut f = 0.0;
    for i in 0..spec.m() {
        let mut gamma = 0.0;
        let mut weighted = 0.0;
        for j in 0..spec.m_i(i) {
            let s = spec.fiber_sum(i, j, t);
            let w = spec.b[i][j].powf(lambda2) * s.powf(alpha);
            gamma += w;
            weighted += w * s.ln();
        }
        let head = spec.c[i].powf(lambda1) * gamma.powf(rho - 1.0);
        z += head * gamma;
        f += head * weighted;
    }
    f / z
}

#[test]
fn criterion_04_family_solutions_satisfy_the_gibbs_identities() {
    let rhos = [0.25, 0.5, 0.75, 1.0];
    let mut points = 0usize;
    for spec in hypothesis_specs() {
        let hyp = check_generic_hypothesis(&spec, 129);
        assert!(hyp.holds, "{} must pass the hypothesis check", spec.name);
        let roots = fiber_roots(&spec);
        assert!(
            roots.applicable() && roots.t_lower < roots.t_upper,
            "{} must have a non-degenerate root interval",
            spec.name
        );
        let ts = default_t_grid(&roots, 10);
        for rho in rhos {
            let mut prev_alpha = f64::NEG_INFINITY;
            for &t in &ts {
                let ctx = format!("{} t = {t:.6} rho = {rho}", spec.name);
                let sol = solve_lambda2(&spec, t, rho).unwrap_or_else(|e| panic!("{ctx}: {e}"));

                let mass: f64 = sol.p.flat().iter().sum();
                assert!((mass - 1.0).abs() <= 1e-12, "{ctx}: total mass {mass}");
                assert!(
                    (sol.c_value - 1.0).abs() <= 1e-10,
                    "{ctx}: C = {}",
                    sol.c_value
                );
                let gamma_eq: f64 = sol
                    .p
                    .marginals()
                    .iter()
                    .zip(&sol.log_gamma)
                    .map(|(pi, lg)| pi * lg)
                    .sum();
                assert!(gamma_eq.abs() <= 1e-10, "{ctx}: sum p_i ln gamma_i = {gamma_eq:.3e}");
                let t_back = t_of_p(&spec, &sol.p, 1e-12).expect("t recompute");
                assert!(
                    (t_back - t).abs() <= 1e-8,
                    "{ctx}: t(p) = {t_back} drifted from {t}"
                );

                // Strict monotonicity of F in alpha (the finite-difference
                // check the uniqueness of alpha rests on).
                let h = 1e-4 * (1.0 + sol.alpha.abs());
                let up =
                    gibbs_mean_log_fiber_sum(&spec, t, sol.lambda1, sol.lambda2, rho, sol.alpha + h);
                let down =
                    gibbs_mean_log_fiber_sum(&spec, t, sol.lambda1, sol.lambda2, rho, sol.alpha - h);
                assert!(up > down, "{ctx}: F not increasing in alpha ({down} .. {up})");

                assert!(
                    sol.alpha > prev_alpha,
                    "{ctx}: alpha = {} did not increase from {prev_alpha}",
                    sol.alpha
                );
                prev_alpha = sol.alpha;
                points += 1;
            }
        }
    }
    println!(
        "ACCEPTANCE PASS: {points} family solutions (3 specs x 10 t x 4 rho) satisfy \
         normalization, C = 1, the gamma identity, t-consistency and alpha monotonicity"
    );
}

// -------------------------------------------------------------- criterion 5

#[test]
fn criterion_05_maximize_dominates_the_rho_one_family_curve() {
    let cfg = OptimizerConfig::default();
    let mut lines = Vec::new();
    for spec in hypothesis_specs() {
        let report = maximize(&spec, &cfg).expect("maximize");
        let roots = fiber_roots(&spec);
        // Dense enough that the grid point nearest the peak sits within the
        // 1e-4 band (the curve is smooth with moderate curvature there).
        let grid = default_t_grid(&roots, 160);
        let curve = family_curve(&spec, &grid, 1.0).expect("family curve");
        let mut best = f64::NEG_INFINITY;
        let mut solved = 0usize;
        for point in &curve {
            if let Some(sol) = &point.solution {
                let value = sol.objective.total;
                assert!(
                    report.dimension >= value - 1e-9,
                    "{}: curve point t = {} exceeds the optimum ({value} > {})",
                    spec.name,
                    point.t,
                    report.dimension
                );
                best = best.max(value);
                solved += 1;
            }
        }
        assert!(solved > 0, "{}: no curve point solved", spec.name);
        let gap = (best - report.dimension).abs();
        assert!(
            gap <= 1e-4,
            "{}: best curve objective {best} vs maximize {} (gap {gap:.3e})",
            spec.name,
            report.dimension
        );
        lines.push(format!("{} gap {gap:.2e} ({solved}/160 points)", spec.name));
    }
    println!(
        "ACCEPTANCE PASS: rho = 1 family curve touches the optimum within 1e-4 and never \
         exceeds it ({})",
        lines.join(", ")
    );
}

// -------------------------------------------------------------- criterion 6

#[test]
fn criterion_06_cutting_times_step_by_at_most_one_with_bounded_excess() {
    let specs = [separating(), gentle(), dyadic()];
    let words_per_spec = 10_000;
    let len = 1_000;
    let mut steps = 0u64;
    for (which, spec) in specs.iter().enumerate() {
        // The edge-ratio bound: the gap between the cut prefix sum and the
        // full ln-c sum never exceeds one symbol's worth of contraction.
        let bound = (1.0 / spec.a_min()).ln() + 1e-9;
        let symbols = all_symbols(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(1_000 + which as u64);
        for word in 0..words_per_spec {
            let mut tracker = CutTracker::new(spec);
            let (mut l1, mut l2) = (0usize, 0usize);
            for n in 1..=len {
                let sym = symbols[rng.gen_range(0..symbols.len())];
                let state = tracker.push(sym);
                assert!(
                    state.l1 >= l1 && state.l1 <= l1 + 1,
                    "{} word {word} step {n}: L1 jumped {l1} -> {}",
                    spec.name,
                    state.l1
                );
                assert!(
                    state.l2 >= l2 && state.l2 <= l2 + 1,
                    "{} word {word} step {n}: L2 jumped {l2} -> {}",
                    spec.name,
                    state.l2
                );
                assert!(
                    state.b_excess >= -1e-12 && state.b_excess <= bound,
                    "{} word {word} step {n}: b-excess {} outside [0, {bound}]",
                    spec.name,
                    state.b_excess
                );
                assert!(
                    state.a_excess >= -1e-12 && state.a_excess <= bound,
                    "{} word {word} step {n}: a-excess {} outside [0, {bound}]",
                    spec.name,
                    state.a_excess
                );
                l1 = state.l1;
                l2 = state.l2;
                steps += 1;
            }
        }
    }
    println!(
        "ACCEPTANCE PASS: cutting times advanced by 0 or 1 and the edge-ratio bound held \
         at every one of {steps} steps (3 specs x 10^4 words x 10^3 symbols)"
    );
}

// -------------------------------------------------------------- criterion 7

#[test]
fn criterion_07_pointwise_dimension_concentrates_along_sampled_words() {
    let start = Instant::now();
    let cfg = OptimizerConfig::default();
    let n = 100_000;
    let seeds = 20u64;
    let mut lines = Vec::new();
    for spec in [separating(), single_slab()] {
        let report = maximize(&spec, &cfg).expect("maximize");
        let t = report.objective.t;
        let (mut dev_d, mut dev_beta, mut dev_eta) = (0.0f64, 0.0f64, 0.0f64);
        for seed in 0..seeds {
            let word = sample_word(&spec, &report.p, t, n, seed).expect("sample");
            let trace =
                pointwise_dimension_trace(&spec, &report.p, t, &word, n).expect("trace");
            let last = trace.last().expect("nonempty trace");
            assert_eq!(last.n, n);
            dev_d += (last.d_pn - report.dimension).abs();
            dev_beta += (last.beta_n - 1.0).abs();
            dev_eta += (last.eta_n - 1.0).abs();
        }
        let mean_d = dev_d / seeds as f64;
        let mean_beta = dev_beta / seeds as f64;
        let mean_eta = dev_eta / seeds as f64;
        assert!(mean_d <= 0.05, "{}: mean |d - dim| = {mean_d:.4}", spec.name);
        assert!(mean_beta <= 0.01, "{}: mean |beta - 1| = {mean_beta:.4}", spec.name);
        assert!(mean_eta <= 0.01, "{}: mean |eta - 1| = {mean_eta:.4}", spec.name);
        lines.push(format!(
            "{}: |d - dim| {mean_d:.4}, |beta - 1| {mean_beta:.4}, |eta - 1| {mean_eta:.4}",
            spec.name
        ));
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!(
        "ACCEPTANCE PASS: 20 sampled words of length 10^5 on 2 specs concentrate \
         ({}; {elapsed:.2?} total)",
        lines.join("; ")
    );
}

// -------------------------------------------------------------- criterion 8

#[test]
fn criterion_08_box_counting_slopes_track_the_formula_values() {
    let cfg = OptimizerConfig::default();
    // One uniform spec with the closed-form value, one planar spec with the
    // closed-form value, and one genuinely self-affine spec against the
    // variational result.
    let moran = uniform_spec("uniform-r0.4", 0.4, &[&[2, 2], &[2, 2]]);
    let moran_dim = 8.0f64.ln() / 2.5f64.ln();
    let carpet = carpet_like();
    let carpet_dim = 1.0 + 2.0f64.ln() / 2.5f64.ln();
    let affine = separating();
    let affine_dim = maximize(&affine, &cfg).expect("maximize").dimension;

    let mut lines = Vec::new();
    for (spec, formula) in [(moran, moran_dim), (carpet, carpet_dim), (affine, affine_dim)] {
        let start = Instant::now();
        let cmp = oracle_comparison(&spec, 6, None, formula, 0.15, DEFAULT_COVER_CAP)
            .expect("oracle comparison");
        let elapsed = start.elapsed();
        assert!(
            cmp.consistent,
            "{}: slope {} vs formula {formula} flagged inconsistent",
            spec.name, cmp.estimate.slope
        );
        assert!(
            cmp.difference.abs() <= 0.15,
            "{}: slope {} differs from {formula} by {}",
            spec.name,
            cmp.estimate.slope,
            cmp.difference
        );
        assert!(
            cmp.estimate.slope <= 3.05,
            "{}: slope {} above the ambient dimension",
            spec.name,
            cmp.estimate.slope
        );
        assert!(elapsed < Duration::from_secs(120), "{}: took {elapsed:?}", spec.name);
        lines.push(format!("{} {:+.3}", spec.name, cmp.difference));
    }
    println!(
        "ACCEPTANCE PASS: depth-6 box-counting slopes within 0.15 of the formula values \
         ({})",
        lines.join(", ")
    );
}

// -------------------------------------------------------------- criterion 9

/// Sums the measure of every cylinder in the product set: brute-force
/// depth-first enumeration, no factorization shortcut.
fn enumerate_cylinder_sum(allowed: &[Vec<usize>], q: &[f64], pos: usize, product: f64) -> f64 {
    if pos == allowed.len() {
        return product;
    }
    allowed[pos]
        .iter()
        .map(|&s| enumerate_cylinder_sum(allowed, q, pos + 1, product * q[s]))
        .sum()
}

#[test]
fn criterion_09_cube_measure_equals_the_enumerated_cylinder_sum() {
    let spec = four_symbol();
    let p = NestedDistribution::new(vec![vec![0.6], vec![0.4]]).expect("weights");
    let t = 0.4;
    let symbols = all_symbols(&spec);
    assert_eq!(symbols.len(), 4);
    // Per-symbol cylinder measures q = p_ij a^t / sum_k a^t.
    let q: Vec<f64> = symbols
        .iter()
        .map(|s| p.get(s.i, s.j) * spec.a[s.i][s.j][s.k].powf(t) / spec.fiber_sum(s.i, s.j, t))
        .collect();

    // Below the cube threshold both cutting times can be empty; the library
    // must refuse rather than return a junk cube.
    assert_eq!(min_cut_length(&spec), 2);
    let short = SymbolSequence::new(&spec, vec![symbols[0]]).expect("word");
    assert!(matches!(
        approximate_cube(&spec, &p, t, &short, 1),
        Err(Error::Precondition(_))
    ));

    let mut worst = 0.0f64;
    let mut cubes = 0u64;
    for n in 2..=8u32 {
        let len = n as usize;
        for code in 0..4u64.pow(n) {
            let mut digits = code;
            let syms: Vec<Symbol> = (0..len)
                .map(|_| {
                    let s = symbols[(digits % 4) as usize];
                    digits /= 4;
                    s
                })
                .collect();
            let word = SymbolSequence::new(&spec, syms.clone()).expect("word");
            let view = approximate_cube(&spec, &p, t, &word, len).expect("cube");
            assert!(view.l2 <= view.l1 && view.l1 <= len);

            // The cube fixes the full symbol up to L2, the column up to L1
            // and the slab up to n; every other index is free.
            let allowed: Vec<Vec<usize>> = (0..len)
                .map(|l| {
                    let here = syms[l];
                    (0..symbols.len())
                        .filter(|&s| {
                            let cand = symbols[s];
                            if l < view.l2 {
                                cand == here
                            } else if l < view.l1 {
                                (cand.i, cand.j) == (here.i, here.j)
                            } else {
                                cand.i == here.i
                            }
                        })
                        .collect()
                })
                .collect();
            let total = enumerate_cylinder_sum(&allowed, &q, 0, 1.0);
            let err = (view.log_measure - total.ln()).abs();
            assert!(
                err <= 1e-10,
                "n = {n} code {code}: log-measure {} vs enumerated {} (error {err:.3e})",
                view.log_measure,
                total.ln()
            );
            worst = worst.max(err);
            cubes += 1;
        }
    }
    println!(
        "ACCEPTANCE PASS: cube measures equal enumerated cylinder sums for all {cubes} \
         words of length 2..=8 (max log-error {worst:.3e})"
    );
}

// ------------------------------------------------------------- criterion 10

#[test]
fn criterion_10_identical_seeds_produce_byte_identical_payloads() {
    let spec = separating();
    let cfg = OptimizerConfig::default();
    let run = || {
        let report = maximize(&spec, &cfg).expect("maximize");
        let report_json = serde_json::to_string(&report).expect("serialize");

        let t = report.objective.t;
        let word = sample_word(&spec, &report.p, t, 2_000, 42).expect("sample");
        let trace = pointwise_dimension_trace(&spec, &report.p, t, &word, 2_000).expect("trace");
        let mut csv = String::from("n,L1,L2,d_pn,beta_n,eta_n\n");
        for row in &trace {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.n, row.l1, row.l2, row.d_pn, row.beta_n, row.eta_n
            ));
        }

        let cover = generate_cover(&spec, 3, DEFAULT_COVER_CAP).expect("cover");
        let deltas = default_deltas(&cover, DEFAULT_DELTA_COUNT);
        let estimate = box_count_estimate(&cover, &deltas).expect("estimate");
        let estimate_json = serde_json::to_string(&estimate).expect("serialize");
        (report_json, csv, estimate_json)
    };
    let first = run();
    let second = run();
    assert_eq!(first.0, second.0, "dimension report bytes differ");
    assert_eq!(first.1, second.1, "trace CSV bytes differ");
    assert_eq!(first.2, second.2, "box-count estimate bytes differ");
    println!(
        "ACCEPTANCE PASS: repeated seeded runs produced byte-identical report JSON, trace \
         CSV and box-count JSON payloads"
    );
}
