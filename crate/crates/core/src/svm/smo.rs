//! Sequential minimal optimization for the soft-margin SVM dual
//!
//! ```text
//! maximize   W(a) = sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! subject to 0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! with the linear kernel `K(u, v) = u . v`. The outer loop follows Platt:
//! alternate sweeps over all examples and over the non-bound examples,
//! examine each for a KKT violation, and pick its partner by the largest
//! `|E1 - E2|` from the error cache, falling back to scans of the non-bound
//! and then all examples from a random start. When that loop stops, a
//! finishing phase repeatedly optimizes the maximal violating pair until the
//! bias bounds implied by the KKT conditions are consistent to well inside
//! `tol`, and the bias is set to the midpoint of those bounds. Every example
//! then satisfies the tol-relaxed KKT conditions.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Curvature below which a pair is treated as flat and only its endpoints are
/// compared. Duplicated one-hot rows give exactly zero curvature.
const ETA_FLOOR: f64 = 1e-12;
/// Relative step below which the main loop counts a pair update as no progress.
const STEP_EPS: f64 = 1e-9;
/// Multipliers closer than this to a bound (relative to C) are snapped to it.
const BOUND_SNAP: f64 = 1e-10;

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;

/// A binary training problem. Targets are `+1.0` or `-1.0`.
#[derive(Debug, Clone)]
pub struct BinaryProblem {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub c: f64,
    pub tol: f64,
    /// Seeds the random starting points of the fallback scans.
    pub seed: u64,
    pub max_sweeps: usize,
}

impl BinaryProblem {
    pub fn new(rows: Vec<Vec<f64>>, targets: Vec<f64>, c: f64, tol: f64) -> Result<Self> {
        let problem = Self {
            rows,
            targets,
            c,
            tol,
            seed: 0,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.rows.len() != self.targets.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rows.len(),
                found: self.targets.len(),
            });
        }
        let dim = self.rows.first().map_or(0, Vec::len);
        for row in &self.rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite feature value".into()));
            }
        }
        if let Some(t) = self.targets.iter().find(|&&t| t != 1.0 && t != -1.0) {
            return Err(Error::InvalidArgument(format!("target {t} is not +1 or -1")));
        }
        let pos = self.targets.iter().any(|&t| t > 0.0);
        let neg = self.targets.iter().any(|&t| t < 0.0);
        if !(pos && neg) {
            return Err(Error::SingleClass);
        }
        Ok(())
    }
}

/// Solution of the dual problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub b: f64,
    /// Dual objective `W(alpha)`.
    pub objective: f64,
    /// Largest violation of the bias bounds at exit, `<= 0` when consistent.
    pub kkt_gap: f64,
    pub sweeps: usize,
    pub steps: usize,
}

impl DualSolution {
    /// `f(x) = sum_i alpha_i y_i K(x_i, x) + b` over the training rows.
    pub fn decision_value(&self, rows: &[Vec<f64>], targets: &[f64], x: &[f64]) -> Result<f64> {
        if rows.len() != self.alpha.len() || targets.len() != self.alpha.len() {
            return Err(Error::DimensionMismatch {
                expected: self.alpha.len(),
                found: rows.len().min(targets.len()),
            });
        }
        let mut f = 0.0;
        for ((row, &y), &a) in rows.iter().zip(targets).zip(&self.alpha) {
            if row.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: row.len(),
                    found: x.len(),
                });
            }
            if a > 0.0 {
                f += a * y * dot(row, x);
            }
        }
        Ok(f + self.b)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sparse(row: &[f64]) -> Vec<(usize, f64)> {
    row.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, &v)| (i, v))
        .collect()
}

fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

struct Solver<'a> {
    n: usize,
    kernel: Vec<f64>,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    /// `grad[i] = sum_j alpha_j y_j K_ij - y_i`, so the error cache entry is `grad[i] + b`.
    grad: Vec<f64>,
    b: f64,
    rng: ChaCha8Rng,
    steps: usize,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a BinaryProblem) -> Self {
        let n = problem.rows.len();
        let rows: Vec<_> = problem.rows.iter().map(|r| sparse(r)).collect();
        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = sparse_dot(&rows[i], &rows[j]);
                kernel[i * n + j] = k;
                kernel[j * n + i] = k;
            }
        }
        Self {
            n,
            kernel,
            y: &problem.targets,
            c: problem.c,
            tol: problem.tol,
            alpha: vec![0.0; n],
            grad: problem.targets.iter().map(|y| -y).collect(),
            b: 0.0,
            rng: ChaCha8Rng::seed_from_u64(problem.seed),
            steps: 0,
        }
    }

    fn k(&self, i: usize, j: usize) -> f64 {
        self.kernel[i * self.n + j]
    }

    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    /// Jointly optimizes `alpha[i1]` and `alpha[i2]`. Returns whether they moved.
    fn take_step(&mut self, i1: usize, i2: usize, min_step: f64) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let s = y1 * y2;
        let c = self.c;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if lo >= hi {
            return false;
        }
        let eta = self.k(i1, i1) + self.k(i2, i2) - 2.0 * self.k(i1, i2);
        // dW/da2 at the current point.
        let slope = y2 * (self.grad[i1] - self.grad[i2]);
        let mut new_a2 = if eta > ETA_FLOOR {
            (a2 + slope / eta).clamp(lo, hi)
        } else {
            let gain = |t: f64| slope * (t - a2) - 0.5 * eta * (t - a2) * (t - a2);
            let (g_lo, g_hi) = (gain(lo), gain(hi));
            if g_lo > g_hi && g_lo > 0.0 {
                lo
            } else if g_hi > g_lo && g_hi > 0.0 {
                hi
            } else {
                a2
            }
        };
        // A multiplier left a rounding error away from a bound would pin every
        // later step on this pair to zero length, and would pose as free when
        // the bias is read off.
        let snap = |a: f64| {
            if a < BOUND_SNAP * c {
                0.0
            } else if a > c - BOUND_SNAP * c {
                c
            } else {
                a
            }
        };
        new_a2 = snap(new_a2);
        let mut new_a1 = (a1 + s * (a2 - new_a2)).clamp(0.0, c);
        if snap(new_a1) != new_a1 {
            new_a1 = snap(new_a1);
            new_a2 = snap((a2 + s * (a1 - new_a1)).clamp(0.0, c));
        }
        let delta = new_a2 - a2;
        if (delta == 0.0 && new_a1 == a1) || delta.abs() < min_step * (new_a2 + a2 + min_step) {
            return false;
        }

        let d1 = y1 * (new_a1 - a1);
        let d2 = y2 * (new_a2 - a2);
        let n = self.n;
        for k in 0..n {
            self.grad[k] += d1 * self.kernel[i1 * n + k] + d2 * self.kernel[i2 * n + k];
        }
        self.alpha[i1] = new_a1;
        self.alpha[i2] = new_a2;
        self.b = if self.is_free(i1) {
            -self.grad[i1]
        } else if self.is_free(i2) {
            -self.grad[i2]
        } else {
            -0.5 * (self.grad[i1] + self.grad[i2])
        };
        self.steps += 1;
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        let r2 = (self.grad[i2] + self.b) * self.y[i2];
        let a2 = self.alpha[i2];
        if !((r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0)) {
            return false;
        }
        let free: Vec<usize> = (0..self.n).filter(|&i| self.is_free(i)).collect();
        if free.len() > 1 {
            let g2 = self.grad[i2];
            let best = free
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    (self.grad[a] - g2)
                        .abs()
                        .total_cmp(&(self.grad[b] - g2).abs())
                })
                .expect("non-empty");
            if self.take_step(best, i2, STEP_EPS) {
                return true;
            }
        }
        if !free.is_empty() {
            let start = self.rng.gen_range(0..free.len());
            for k in 0..free.len() {
                let i1 = free[(start + k) % free.len()];
                if self.take_step(i1, i2, STEP_EPS) {
                    return true;
                }
            }
        }
        let start = self.rng.gen_range(0..self.n);
        for k in 0..self.n {
            if self.take_step((start + k) % self.n, i2, STEP_EPS) {
                return true;
            }
        }
        false
    }

    /// Indices and values of the tightest lower and upper bias bounds:
    /// `b >= -grad[i]` over `{y = +1, a < C} U {y = -1, a > 0}` and
    /// `b <= -grad[j]` over `{y = +1, a > 0} U {y = -1, a < C}`.
    fn bias_bounds(&self) -> (Option<(usize, f64)>, Option<(usize, f64)>) {
        let mut lower: Option<(usize, f64)> = None;
        let mut upper: Option<(usize, f64)> = None;
        for i in 0..self.n {
            let (a, v) = (self.alpha[i], -self.grad[i]);
            let pos = self.y[i] > 0.0;
            let in_lower = if pos { a < self.c } else { a > 0.0 };
            let in_upper = if pos { a > 0.0 } else { a < self.c };
            if in_lower && lower.map_or(true, |(_, m)| v > m) {
                lower = Some((i, v));
            }
            if in_upper && upper.map_or(true, |(_, m)| v < m) {
                upper = Some((i, v));
            }
        }
        (lower, upper)
    }

    fn gap(&self) -> f64 {
        match self.bias_bounds() {
            (Some((_, lo)), Some((_, hi))) => lo - hi,
            _ => f64::NEG_INFINITY,
        }
    }

    fn refresh_gradient(&mut self) {
        for i in 0..self.n {
            let mut g = -self.y[i];
            for j in 0..self.n {
                if self.alpha[j] > 0.0 {
                    g += self.alpha[j] * self.y[j] * self.k(i, j);
                }
            }
            self.grad[i] = g;
        }
    }

    fn objective(&self) -> f64 {
        (0..self.n)
            .map(|i| self.alpha[i] - 0.5 * self.alpha[i] * self.y[i] * (self.grad[i] + self.y[i]))
            .sum()
    }
}

/// Trains one binary machine.
pub fn smo_train_binary(problem: &BinaryProblem) -> Result<DualSolution> {
    problem.validate()?;
    let mut s = Solver::new(problem);

    let mut sweeps = 0;
    let mut examine_all = true;
    let mut changed = 0;
    while changed > 0 || examine_all {
        if sweeps >= problem.max_sweeps {
            return Err(Error::NonConvergence {
                sweeps,
                steps: s.steps,
                kkt_gap: s.gap(),
                objective: s.objective(),
            });
        }
        changed = 0;
        for i in 0..s.n {
            if examine_all || s.is_free(i) {
                changed += usize::from(s.examine(i));
            }
        }
        sweeps += 1;
        if examine_all {
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
    }

    // Finishing phase on the maximal violating pair.
    let target_gap = (1e-3 * problem.tol).max(1e-13);
    let max_steps = problem.max_sweeps.saturating_mul(s.n.max(1));
    let mut finishing = 0usize;
    loop {
        s.refresh_gradient();
        let mut stalled = false;
        loop {
            let (lower, upper) = s.bias_bounds();
            let (Some((i, lo)), Some((j, hi))) = (lower, upper) else {
                break;
            };
            if lo - hi <= target_gap {
                break;
            }
            if finishing >= max_steps || !s.take_step(i, j, 0.0) {
                stalled = true;
                break;
            }
            finishing += 1;
        }
        s.refresh_gradient();
        let gap = s.gap();
        if gap <= target_gap {
            break;
        }
        if stalled {
            // Consistent within tol is still a valid solution.
            if gap <= problem.tol {
                break;
            }
            return Err(Error::NonConvergence {
                sweeps,
                steps: s.steps,
                kkt_gap: gap,
                objective: s.objective(),
            });
        }
    }

    let (lower, upper) = s.bias_bounds();
    s.b = match (lower, upper) {
        (Some((_, lo)), Some((_, hi))) => 0.5 * (lo + hi),
        (Some((_, lo)), None) => lo,
        (None, Some((_, hi))) => hi,
        (None, None) => 0.0,
    };
    Ok(DualSolution {
        objective: s.objective(),
        kkt_gap: s.gap(),
        alpha: s.alpha,
        b: s.b,
        sweeps,
        steps: s.steps,
    })
}

/// Number of examples violating the tol-relaxed KKT conditions.
pub fn kkt_violations(problem: &BinaryProblem, solution: &DualSolution) -> Result<usize> {
    let c = problem.c;
    let tol = problem.tol;
    let mut count = 0;
    for (i, row) in problem.rows.iter().enumerate() {
        let f = solution.decision_value(&problem.rows, &problem.targets, row)?;
        let margin = problem.targets[i] * f;
        let a = solution.alpha[i];
        let ok = if a <= 0.0 {
            margin >= 1.0 - tol
        } else if a >= c {
            margin <= 1.0 + tol
        } else {
            (margin - 1.0).abs() <= tol
        };
        count += usize::from(!ok);
    }
    Ok(count)
}
