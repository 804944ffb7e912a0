//! Sponge specifications: the JSON wire format, constraint validation and the
//! validated in-memory type used by every algorithm in the crate.
//!
//! A sponge is the attractor of an affine iterated function system on the unit
//! cube. Each map contracts by `a[i][j][k]` along x, `b[i][j]` along y and
//! `c[i]` along z, and translates by the per-axis offsets. The index set is
//! nested: `i` picks a z-slab, `j` a y-column inside it, `k` an x-box inside
//! that, so the contraction along an axis only depends on the indices up to
//! that axis. Library indices are 0-based; validation reports and JSON output
//! use 1-based index paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};

/// Absolute slack for the closed constraints (`sum <= 1`, `gap >= ratio`).
/// Decimal literals like 0.2 do not sum exactly in binary; genuine violations
/// in the wild are far larger than this.
pub const CONSTRAINT_SLACK: f64 = 1e-12;

/// Raw JSON document for a sponge specification.
///
/// Shapes carry the subdivision counts: `c.len()` slabs, `b[i].len()` columns
/// in slab `i`, `a[i][j].len()` boxes in column `(i, j)`. Offsets are
/// optional; a missing level is filled by greedy left packing (first box at 0,
/// each next box flush against the previous one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub name: String,
    pub c: Vec<f64>,
    pub b: Vec<Vec<f64>>,
    pub a: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_b: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_a: Option<Vec<Vec<Vec<f64>>>>,
}

/// One failed constraint, localized by a 1-based index path such as
/// `b[2][1]` or a level path such as `c` for whole-level sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Stable identifier: `shape`, `ratio-range`, `ratio-order`, `level-sum`,
    /// `offset-order` or `offset-bounds`.
    pub constraint: String,
    pub path: String,
    pub message: String,
}

/// Outcome of validating a [`SpecDocument`]: every violation, not just the
/// first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn first_message(&self) -> String {
        self.violations
            .first()
            .map(|v| format!("{} at {}: {}", v.constraint, v.path, v.message))
            .unwrap_or_else(|| "no violations".into())
    }
}

/// A validated self-affine sponge specification.
///
/// Invariants established at construction:
/// * `0 < a[i][j][k] <= b[i][j] <= c[i] < 1` for every box;
/// * level sums at most 1: `sum(c) <= 1`, `sum_j b[i][j] <= 1`,
///   `sum_k a[i][j][k] <= 1`;
/// * offsets place the boxes of each level in increasing order without
///   overlap and inside the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SpongeSpec<R: Real> {
    pub name: String,
    pub c: Vec<R>,
    pub b: Vec<Vec<R>>,
    pub a: Vec<Vec<Vec<R>>>,
    pub u_c: Vec<R>,
    pub u_b: Vec<Vec<R>>,
    pub u_a: Vec<Vec<Vec<R>>>,
}

fn level_sum(values: &[f64]) -> f64 {
    let mut s = CompensatedSum::new();
    for &v in values {
        s.add(v);
    }
    s.value()
}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, constraint: &str, path: String, message: String) {
        self.violations.push(Violation {
            constraint: constraint.into(),
            path,
            message,
        });
    }

    /// Offsets of one level group: increasing, gap at least the ratio, whole
    /// group inside `[0, 1]`.
    fn offsets(&mut self, path: &str, offsets: &[f64], ratios: &[f64]) {
        if offsets.is_empty() {
            return;
        }
        if offsets[0] < -CONSTRAINT_SLACK {
            self.push(
                "offset-bounds",
                format!("{path}[1]"),
                format!("first offset {} is negative", offsets[0]),
            );
        }
        for n in 0..offsets.len() - 1 {
            let gap = offsets[n + 1] - offsets[n];
            if gap < ratios[n] - CONSTRAINT_SLACK {
                self.push(
                    "offset-order",
                    format!("{path}[{}]", n + 2),
                    format!(
                        "offset gap {} to previous box is below its ratio {}",
                        gap, ratios[n]
                    ),
                );
            }
        }
        let last = offsets.len() - 1;
        let end = offsets[last] + ratios[last];
        if end > 1.0 + CONSTRAINT_SLACK {
            self.push(
                "offset-bounds",
                format!("{path}[{}]", last + 1),
                format!("last box ends at {end}, beyond the unit interval"),
            );
        }
    }
}

/// Checks every constraint on a raw document and reports all violations.
///
/// Shape problems (mismatched nesting) are reported alone, since index-based
/// constraints are meaningless on misshapen data. Offsets are only checked
/// when supplied; filled offsets satisfy the constraints by construction
/// whenever the level sums do.
pub fn validate_document(doc: &SpecDocument) -> ValidationReport {
    let mut ck = Checker {
        violations: Vec::new(),
    };

    let m = doc.c.len();
    if m == 0 {
        ck.push("shape", "c".into(), "at least one slab is required".into());
    }
    if doc.b.len() != m {
        ck.push(
            "shape",
            "b".into(),
            format!("expected {} rows to match c, found {}", m, doc.b.len()),
        );
    }
    if doc.a.len() != m {
        ck.push(
            "shape",
            "a".into(),
            format!("expected {} rows to match c, found {}", m, doc.a.len()),
        );
    }
    if ck.violations.is_empty() {
        for i in 0..m {
            if doc.b[i].is_empty() {
                ck.push(
                    "shape",
                    format!("b[{}]", i + 1),
                    "each slab needs at least one column".into(),
                );
            }
            if doc.a[i].len() != doc.b[i].len() {
                ck.push(
                    "shape",
                    format!("a[{}]", i + 1),
                    format!(
                        "expected {} fibers to match b[{}], found {}",
                        doc.b[i].len(),
                        i + 1,
                        doc.a[i].len()
                    ),
                );
            } else {
                for j in 0..doc.a[i].len() {
                    if doc.a[i][j].is_empty() {
                        ck.push(
                            "shape",
                            format!("a[{}][{}]", i + 1, j + 1),
                            "each column needs at least one box".into(),
                        );
                    }
                }
            }
        }
        if let Some(u_c) = &doc.u_c {
            if u_c.len() != m {
                ck.push(
                    "shape",
                    "u_c".into(),
                    format!("expected {} offsets, found {}", m, u_c.len()),
                );
            }
        }
        if let Some(u_b) = &doc.u_b {
            let ok = u_b.len() == m && (0..m).all(|i| u_b[i].len() == doc.b[i].len());
            if !ok {
                ck.push("shape", "u_b".into(), "offset shape must match b".into());
            }
        }
        if let Some(u_a) = &doc.u_a {
            let ok = u_a.len() == m
                && (0..m).all(|i| {
                    u_a[i].len() == doc.a[i].len()
                        && (0..doc.a[i].len()).all(|j| u_a[i][j].len() == doc.a[i][j].len())
                });
            if !ok {
                ck.push("shape", "u_a".into(), "offset shape must match a".into());
            }
        }
    }
    if !ck.violations.is_empty() {
        return ValidationReport {
            ok: false,
            violations: ck.violations,
        };
    }

    // Ratio ranges and the per-axis ordering a <= b <= c.
    for (i, &ci) in doc.c.iter().enumerate() {
        if !(ci > 0.0 && ci < 1.0) || !ci.is_finite() {
            ck.push(
                "ratio-range",
                format!("c[{}]", i + 1),
                format!("ratio {ci} is outside (0, 1)"),
            );
        }
        for (j, &bij) in doc.b[i].iter().enumerate() {
            if !(bij > 0.0 && bij < 1.0) || !bij.is_finite() {
                ck.push(
                    "ratio-range",
                    format!("b[{}][{}]", i + 1, j + 1),
                    format!("ratio {bij} is outside (0, 1)"),
                );
            } else if bij > ci {
                ck.push(
                    "ratio-order",
                    format!("b[{}][{}]", i + 1, j + 1),
                    format!("ratio {bij} exceeds its slab ratio c[{}] = {ci}", i + 1),
                );
            }
            for (k, &aijk) in doc.a[i][j].iter().enumerate() {
                if !(aijk > 0.0 && aijk < 1.0) || !aijk.is_finite() {
                    ck.push(
                        "ratio-range",
                        format!("a[{}][{}][{}]", i + 1, j + 1, k + 1),
                        format!("ratio {aijk} is outside (0, 1)"),
                    );
                } else if aijk > bij {
                    ck.push(
                        "ratio-order",
                        format!("a[{}][{}][{}]", i + 1, j + 1, k + 1),
                        format!(
                            "ratio {aijk} exceeds its column ratio b[{}][{}] = {bij}",
                            i + 1,
                            j + 1
                        ),
                    );
                }
            }
        }
    }

    // Level sums at most 1 (slack covers decimal literals, not real overlap).
    if level_sum(&doc.c) > 1.0 + CONSTRAINT_SLACK {
        ck.push(
            "level-sum",
            "c".into(),
            format!("slab ratios sum to {}, above 1", level_sum(&doc.c)),
        );
    }
    for i in 0..m {
        if level_sum(&doc.b[i]) > 1.0 + CONSTRAINT_SLACK {
            ck.push(
                "level-sum",
                format!("b[{}]", i + 1),
                format!(
                    "column ratios sum to {}, above 1",
                    level_sum(&doc.b[i])
                ),
            );
        }
        for j in 0..doc.a[i].len() {
            if level_sum(&doc.a[i][j]) > 1.0 + CONSTRAINT_SLACK {
                ck.push(
                    "level-sum",
                    format!("a[{}][{}]", i + 1, j + 1),
                    format!(
                        "box ratios sum to {}, above 1",
                        level_sum(&doc.a[i][j])
                    ),
                );
            }
        }
    }

    if let Some(u_c) = &doc.u_c {
        ck.offsets("u_c", u_c, &doc.c);
    }
    if let Some(u_b) = &doc.u_b {
        for i in 0..m {
            ck.offsets(&format!("u_b[{}]", i + 1), &u_b[i], &doc.b[i]);
        }
    }
    if let Some(u_a) = &doc.u_a {
        for i in 0..m {
            for j in 0..doc.a[i].len() {
                ck.offsets(
                    &format!("u_a[{}][{}]", i + 1, j + 1),
                    &u_a[i][j],
                    &doc.a[i][j],
                );
            }
        }
    }

    ValidationReport {
        ok: ck.violations.is_empty(),
        violations: ck.violations,
    }
}

/// Greedy left packing: first box at 0, every next box flush against the end
/// of the previous one. Valid whenever the ratios sum to at most 1.
fn pack_left(ratios: &[f64]) -> Vec<f64> {
    let mut u = Vec::with_capacity(ratios.len());
    let mut edge = 0.0;
    for &r in ratios {
        u.push(edge);
        edge += r;
    }
    u
}

impl<R: Real> SpongeSpec<R> {
    /// Parses and validates a JSON document.
    pub fn parse_json(text: &str) -> Result<Self> {
        let doc: SpecDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }

    /// Validates a document and builds the typed spec, filling any missing
    /// offset level by greedy left packing.
    pub fn from_document(doc: &SpecDocument) -> Result<Self> {
        let report = validate_document(doc);
        if !report.ok {
            return Err(Error::Constraint(report));
        }
        let cvt = |x: &f64| R::of(*x);
        let cvt1 = |v: &Vec<f64>| v.iter().map(cvt).collect::<Vec<R>>();
        let cvt2 = |v: &Vec<Vec<f64>>| v.iter().map(cvt1).collect::<Vec<Vec<R>>>();

        let u_c = doc.u_c.clone().unwrap_or_else(|| pack_left(&doc.c));
        let u_b = doc
            .u_b
            .clone()
            .unwrap_or_else(|| doc.b.iter().map(|row| pack_left(row)).collect());
        let u_a = doc.u_a.clone().unwrap_or_else(|| {
            doc.a
                .iter()
                .map(|row| row.iter().map(|fib| pack_left(fib)).collect())
                .collect()
        });

        Ok(Self {
            name: doc.name.clone(),
            c: cvt1(&doc.c),
            b: cvt2(&doc.b),
            a: doc.a.iter().map(cvt2).collect(),
            u_c: cvt1(&u_c),
            u_b: cvt2(&u_b),
            u_a: u_a.iter().map(cvt2).collect(),
        })
    }

    /// Builds a spec from ratios alone, packing all offsets to the left.
    pub fn from_ratios(name: &str, c: Vec<f64>, b: Vec<Vec<f64>>, a: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        Self::from_document(&SpecDocument {
            name: name.into(),
            c,
            b,
            a,
            u_c: None,
            u_b: None,
            u_a: None,
        })
    }

    /// Serializes back to the wire format, offsets included.
    pub fn to_document(&self) -> SpecDocument {
        let cvt1 = |v: &Vec<R>| v.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
        let cvt2 = |v: &Vec<Vec<R>>| v.iter().map(cvt1).collect::<Vec<Vec<f64>>>();
        SpecDocument {
            name: self.name.clone(),
            c: cvt1(&self.c),
            b: cvt2(&self.b),
            a: self.a.iter().map(cvt2).collect(),
            u_c: Some(cvt1(&self.u_c)),
            u_b: Some(cvt2(&self.u_b)),
            u_a: Some(self.u_a.iter().map(cvt2).collect()),
        }
    }

    /// Number of slabs (distinct `i`).
    pub fn m(&self) -> usize {
        self.c.len()
    }

    /// Number of columns in slab `i`.
    pub fn m_i(&self, i: usize) -> usize {
        self.b[i].len()
    }

    /// Number of boxes in column `(i, j)`.
    pub fn m_ij(&self, i: usize, j: usize) -> usize {
        self.a[i][j].len()
    }

    /// Total number of columns, the dimension of the outer weight simplex.
    pub fn pair_count(&self) -> usize {
        self.b.iter().map(|row| row.len()).sum()
    }

    /// Total number of boxes (maps in the system).
    pub fn symbol_count(&self) -> usize {
        self.a
            .iter()
            .map(|row| row.iter().map(|f| f.len()).sum::<usize>())
            .sum()
    }

    /// Iterates over all `(i, j)` column indices in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.b
            .iter()
            .enumerate()
            .flat_map(|(i, row)| (0..row.len()).map(move |j| (i, j)))
    }

    /// The x-ratios of column `(i, j)`.
    pub fn fiber(&self, i: usize, j: usize) -> &[R] {
        &self.a[i][j]
    }

    /// `ln(sum_k a[i][j][k]^t)`, the quantity every solver in this crate
    /// drives to zero in one form or another.
    pub fn log_fiber_sum(&self, i: usize, j: usize, t: R) -> R {
        self.log_fiber_sum_d(i, j, t).0
    }

    /// `ln(sum_k a^t)` together with its derivative in `t`,
    /// `sum_k a^t ln(a) / sum_k a^t`.
    pub fn log_fiber_sum_d(&self, i: usize, j: usize, t: R) -> (R, R) {
        let mut s = R::zero();
        let mut ds = R::zero();
        for &a in &self.a[i][j] {
            let p = a.powf(t);
            s = s + p;
            ds = ds + p * a.ln();
        }
        (s.ln(), ds / s)
    }

    /// `sum_k a[i][j][k]^t` without the logarithm.
    pub fn fiber_sum(&self, i: usize, j: usize, t: R) -> R {
        self.a[i][j]
            .iter()
            .fold(R::zero(), |s, &a| s + a.powf(t))
    }

    pub fn c_min(&self) -> R {
        self.c.iter().fold(R::one(), |m, &x| m.min(x))
    }

    pub fn c_max(&self) -> R {
        self.c.iter().fold(R::zero(), |m, &x| m.max(x))
    }

    pub fn b_min(&self) -> R {
        self.b
            .iter()
            .flatten()
            .fold(R::one(), |m, &x| m.min(x))
    }

    pub fn b_max(&self) -> R {
        self.b
            .iter()
            .flatten()
            .fold(R::zero(), |m, &x| m.max(x))
    }

    pub fn a_min(&self) -> R {
        self.a
            .iter()
            .flatten()
            .flatten()
            .fold(R::one(), |m, &x| m.min(x))
    }

    pub fn a_max(&self) -> R {
        self.a
            .iter()
            .flatten()
            .flatten()
            .fold(R::zero(), |m, &x| m.max(x))
    }

    /// True when every ratio at each level is identical and every slab and
    /// column is subdivided the same number of times. For such sponges the
    /// uniform weight vector is optimal by symmetry.
    pub fn fully_symmetric(&self) -> bool {
        let same = |v: &mut dyn Iterator<Item = R>| -> bool {
            let mut it = v.peekable();
            match it.next() {
                None => true,
                Some(first) => it.all(|x| x == first),
            }
        };
        let counts_b_same = same(&mut self.b.iter().map(|r| R::of(r.len() as f64)));
        let counts_a_same = same(
            &mut self
                .a
                .iter()
                .flatten()
                .map(|f| R::of(f.len() as f64)),
        );
        counts_b_same
            && counts_a_same
            && same(&mut self.c.iter().copied())
            && same(&mut self.b.iter().flatten().copied())
            && same(&mut self.a.iter().flatten().flatten().copied())
    }
}
