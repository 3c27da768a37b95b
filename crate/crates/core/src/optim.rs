//! Small numerical helpers shared by the solvers: parameter grids, the
//! probability-simplex lattice, golden-section search and a local polish
//! for maximizing over the simplex.

use serde::Serialize;

use crate::prob::Distribution;

/// Values closer than this are treated as ties when choosing an argmax.
pub const TIE_TOL: f64 = 1e-12;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// `n` log-spaced points from `lo` to `hi`, endpoints exact.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

/// `n` evenly spaced points from `lo` to `hi`, endpoints exact.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let mut g: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    g[n - 1] = hi;
    g
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
pub fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_max(|x| -f(x), a, b, tol);
    (x, -v)
}

/// How a supremum over a parameter range was attained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Attainment {
    /// Interior stationary point.
    Interior,
    /// At the lower end of the range (e.g. ρ = 1).
    LowerBoundary,
    /// At the truncation point of an unbounded range; the true
    /// supremum may be slightly larger.
    Truncated,
    /// Unattained supremum replaced by its analytic limit.
    Limit,
    /// The supremum is `+∞`.
    Infinite,
}

impl Attainment {
    /// True when the reported value comes from truncating an unbounded
    /// parameter range rather than from an attained optimum.
    pub fn is_truncation(self) -> bool {
        matches!(self, Self::Truncated | Self::Limit | Self::Infinite)
    }
}

/// Optimum of a one-dimensional problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimum {
    pub value: f64,
    /// Location of the optimum (`f64::INFINITY` for a limit at infinity).
    pub arg: f64,
    pub attainment: Attainment,
    /// Closed-form value of the objective's limit at the unbounded end of
    /// the range, when one is known and the grid optimum sits there.
    pub limit: Option<f64>,
}

/// Maximizes `f` over a sorted grid, then refines between the neighbours of
/// the best grid point with golden-section search. `values[i] = f(grid[i])`.
/// Attainment is classified from the position of the best point only.
pub fn refine_grid_max(grid: &[f64], values: &[f64], f: impl Fn(f64) -> f64) -> Optimum {
    assert_eq!(grid.len(), values.len());
    assert!(!grid.is_empty());
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let last = grid.len() - 1;
    let attainment = if best == 0 {
        Attainment::LowerBoundary
    } else if best == last {
        Attainment::Truncated
    } else {
        Attainment::Interior
    };
    let (mut arg, mut value) = (grid[best], values[best]);
    if grid.len() > 1 && value.is_finite() {
        let lo = grid[best.saturating_sub(1)];
        let hi = grid[(best + 1).min(last)];
        let (x, v) = golden_max(&f, lo, hi, 1e-10);
        if v > value {
            arg = x;
            value = v;
        }
    }
    Optimum {
        value,
        arg,
        attainment,
        limit: None,
    }
}

/// Lattice `{c / steps : c ∈ ℕ^dim, Σc = steps}` on the probability simplex,
/// enumerated in lexicographic order of the leading `dim − 1` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimplexGrid {
    pub dim: usize,
    pub steps: usize,
}

impl SimplexGrid {
    pub fn new(dim: usize, steps: usize) -> Self {
        assert!(dim >= 1 && steps >= 1);
        Self { dim, steps }
    }

    /// Grid with spacing closest to `resolution`.
    pub fn with_resolution(dim: usize, resolution: f64) -> Self {
        Self::new(dim, (1.0 / resolution).round().max(1.0) as usize)
    }

    /// Default spacing: 0.01 for up to three letters, 0.05 for four.
    pub fn default_for(dim: usize) -> Option<Self> {
        match dim {
            1..=3 => Some(Self::with_resolution(dim, 0.01)),
            4 => Some(Self::with_resolution(dim, 0.05)),
            _ => None,
        }
    }

    pub fn resolution(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn len(&self) -> usize {
        crate::prob::type_count(self.steps, self.dim) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All lattice points in enumeration order.
    pub fn points(&self) -> Vec<Distribution> {
        let mut out = Vec::with_capacity(self.len());
        let mut counts = vec![0usize; self.dim];
        self.fill(0, self.steps, &mut counts, &mut out);
        out
    }

    fn fill(&self, pos: usize, left: usize, counts: &mut Vec<usize>, out: &mut Vec<Distribution>) {
        if pos == self.dim - 1 {
            counts[pos] = left;
            let probs = counts
                .iter()
                .map(|&c| c as f64 / self.steps as f64)
                .collect();
            out.push(Distribution::new(probs).expect("lattice point is a distribution"));
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            self.fill(pos + 1, left - c, counts, out);
        }
    }
}

fn distance_to_uniform(q: &Distribution) -> f64 {
    let u = 1.0 / q.len() as f64;
    q.probs().iter().map(|p| (p - u) * (p - u)).sum()
}

/// Argmax selection with the crate-wide tie rule: a later candidate wins
/// only if it is better by more than [`TIE_TOL`], or tied and strictly
/// closer to the uniform distribution.
pub fn prefer(candidate: (f64, &Distribution), incumbent: (f64, &Distribution)) -> bool {
    let (cv, cq) = candidate;
    let (iv, iq) = incumbent;
    if cv > iv + TIE_TOL || (iv == f64::NEG_INFINITY && cv > iv) {
        return true;
    }
    (cv - iv).abs() <= TIE_TOL && distance_to_uniform(cq) < distance_to_uniform(iq) - 1e-15
}

/// Index of the preferred maximizer among `(value, point)` candidates.
pub fn select_max(candidates: &[(f64, Distribution)]) -> usize {
    let mut best = 0;
    for (i, (v, q)) in candidates.iter().enumerate().skip(1) {
        if prefer((*v, q), (candidates[best].0, &candidates[best].1)) {
            best = i;
        }
    }
    best
}

/// Pairwise mass-transfer hill climb on the simplex starting from `start`
/// with initial step `step`, halving down to `1e-7`.
pub fn polish_max(
    start: &Distribution,
    start_value: f64,
    step: f64,
    f: impl Fn(&Distribution) -> f64,
) -> (Distribution, f64) {
    let n = start.len();
    let mut q = start.probs().to_vec();
    let mut best = start_value;
    let mut h = step / 2.0;
    while h >= 1e-7 && n > 1 {
        let mut improved = true;
        while improved {
            improved = false;
            for i in 0..n {
                for j in 0..n {
                    if i == j || q[j] < h {
                        continue;
                    }
                    let mut trial = q.clone();
                    trial[i] += h;
                    trial[j] -= h;
                    if trial[j] < 1e-15 {
                        trial[j] = 0.0;
                    }
                    let total: f64 = trial.iter().sum();
                    trial.iter_mut().for_each(|p| *p /= total);
                    let cand = Distribution::new(trial.clone()).expect("simplex move");
                    let v = f(&cand);
                    if v > best + 1e-13 {
                        best = v;
                        q = trial;
                        improved = true;
                    }
                }
            }
        }
        h /= 2.0;
    }
    (Distribution::new(q).expect("simplex point"), best)
}
