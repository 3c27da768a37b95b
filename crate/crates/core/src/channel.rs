//! Bhattacharyya geometry and the expurgated channel exponents: the weak
//! and CKM primal forms, the dual `E′_x` with a free output law and the
//! single-class dual `E_x` with a tilt vector.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::optim::{log_grid, polish_max, refine_grid_max, select_max, Attainment, Optimum, SimplexGrid};
use crate::prob::{mutual_information, Channel, Distribution, JointDistribution};

/// Largest input alphabet with a default simplex grid.
pub const MAX_DEFAULT_INPUTS: usize = 4;

pub const FW_GAP_TOL: f64 = 1e-10;
pub const FW_MAX_ITER: usize = 100_000;
pub const CHECK_GRID_RESOLUTION: f64 = 0.02;
pub const BA_MAX_ITER: usize = 200_000;
const BISECT_STEPS: usize = 60;

/// Pairwise Bhattacharyya distances between channel inputs, in nats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BhattacharyyaMatrix {
    size: usize,
    d: Vec<f64>,
}

impl BhattacharyyaMatrix {
    /// Builds a matrix from explicit distances; checks the diagonal,
    /// symmetry and nonnegativity.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        let mut d = Vec::with_capacity(size * size);
        for row in rows {
            if row.len() != size {
                return Err(Error::DimensionMismatch {
                    expected: size,
                    found: row.len(),
                });
            }
            d.extend_from_slice(row);
        }
        for x in 0..size {
            if d[x * size + x] != 0.0 {
                return Err(Error::InvalidParameter {
                    name: "d(x,x)",
                    value: d[x * size + x],
                    constraint: "zero diagonal",
                });
            }
            for y in 0..size {
                let v = d[x * size + y];
                if v.is_nan() || v < 0.0 || v != d[y * size + x] {
                    return Err(Error::InvalidParameter {
                        name: "d(x,x̄)",
                        value: v,
                        constraint: "symmetric and nonnegative",
                    });
                }
            }
        }
        Ok(Self { size, d })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, x: usize, xbar: usize) -> f64 {
        self.d[x * self.size + xbar]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.d.chunks(self.size).map(|r| r.to_vec()).collect()
    }

    /// Relabels inputs: entry `(i, j)` of the result is `d(perm[i], perm[j])`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.size;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        Self { size: n, d }
    }

    /// `e^{−d(x,x̄)/ρ}`, with `e^{−∞} = 0`.
    fn kernel(&self, rho: f64) -> Vec<f64> {
        self.d
            .iter()
            .map(|&v| if v.is_infinite() { 0.0 } else { (-v / rho).exp() })
            .collect()
    }
}

/// `d_B(x,x̄) = −log Σ_y √(W(y|x)W(y|x̄))`; `+∞` for disjoint rows.
pub fn bhattacharyya(w: &Channel) -> BhattacharyyaMatrix {
    let n = w.input_size();
    let mut d = vec![0.0; n * n];
    for x in 0..n {
        for xb in (x + 1)..n {
            let overlap: f64 = w
                .row(x)
                .iter()
                .zip(w.row(xb))
                .map(|(a, b)| (a * b).sqrt())
                .sum();
            let v = if overlap <= 0.0 {
                f64::INFINITY
            } else {
                (-overlap.min(1.0).ln()).max(0.0)
            };
            d[x * n + xb] = v;
            d[xb * n + x] = v;
        }
    }
    BhattacharyyaMatrix { size: n, d }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_nan() || rho < 1.0 {
        return Err(Error::InvalidParameter {
            name: "rho",
            value: rho,
            constraint: "rho >= 1",
        });
    }
    Ok(())
}

fn check_rate(r: f64) -> Result<()> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::InvalidParameter {
            name: "R",
            value: r,
            constraint: "R >= 0",
        });
    }
    Ok(())
}

fn check_dims(q: &Distribution, d: &BhattacharyyaMatrix) -> Result<()> {
    if q.len() != d.size() {
        return Err(Error::DimensionMismatch {
            expected: d.size(),
            found: q.len(),
        });
    }
    Ok(())
}

/// Default Q grid for an input alphabet, or an error past four letters.
pub fn default_q_grid(inputs: usize) -> Result<SimplexGrid> {
    SimplexGrid::default_for(inputs).ok_or(Error::AlphabetTooLarge {
        size: inputs,
        max: MAX_DEFAULT_INPUTS,
    })
}

/// `E′_x` objective `−ρ Σ_x Q(x) log Σ_x̄ Q′(x̄) e^{−d/ρ}` at a given `Q′`.
pub fn ex_prime_objective(q: &Distribution, q_prime: &Distribution, rho: f64, d: &BhattacharyyaMatrix) -> f64 {
    let k = d.kernel(rho);
    let n = d.size();
    let mut total = 0.0;
    for x in q.support() {
        let s: f64 = (0..n).map(|xb| k[x * n + xb] * q_prime.get(xb)).sum();
        if s <= 0.0 {
            return f64::INFINITY;
        }
        total -= q.get(x) * s.ln();
    }
    rho * total
}

/// Minimizer of the `E′_x` subproblem over `Q′`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExPrimeSolution {
    pub value: f64,
    pub q_prime: Distribution,
    /// Frank–Wolfe duality gap at termination.
    pub gap: f64,
    pub iterations: usize,
}

/// Away-step Frank–Wolfe with exact line search for `min_{Q′} E′_x`
/// objective, started at `start`.
fn frank_wolfe(q: &Distribution, rho: f64, d: &BhattacharyyaMatrix, start: &[f64]) -> ExPrimeSolution {
    let n = d.size();
    let k = d.kernel(rho);
    let sup: Vec<usize> = q.support().collect();
    let qs: Vec<f64> = sup.iter().map(|&x| q.get(x)).collect();
    let mut v = start.to_vec();
    let apply = |u: &[f64]| -> Vec<f64> {
        sup.iter()
            .map(|&x| (0..n).map(|xb| k[x * n + xb] * u[xb]).sum())
            .collect()
    };
    let mut s = apply(&v);
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    while iterations < FW_MAX_ITER {
        let mut g = vec![0.0; n];
        for (i, &x) in sup.iter().enumerate() {
            if s[i] > 0.0 {
                for xb in 0..n {
                    g[xb] -= rho * qs[i] * k[x * n + xb] / s[i];
                }
            }
        }
        let gv: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        let fw = (0..n).fold(0, |b, j| if g[j] < g[b] { j } else { b });
        gap = gv - g[fw];
        if gap <= FW_GAP_TOL {
            break;
        }
        let away = (0..n)
            .filter(|&j| v[j] > 0.0)
            .fold(None, |b: Option<usize>, j| match b {
                Some(b) if g[b] >= g[j] => Some(b),
                _ => Some(j),
            })
            .expect("nonempty support");
        let away_gap = g[away] - gv;
        let (dir, gmax) = if gap >= away_gap || v[away] >= 1.0 {
            let mut dir: Vec<f64> = v.iter().map(|x| -x).collect();
            dir[fw] += 1.0;
            (dir, 1.0)
        } else {
            let mut dir = v.clone();
            dir[away] -= 1.0;
            (dir, v[away] / (1.0 - v[away]))
        };
        let ad = apply(&dir);
        let slope = |gamma: f64| -> (f64, f64) {
            let (mut d1, mut d2) = (0.0, 0.0);
            for i in 0..sup.len() {
                let den = s[i] + gamma * ad[i];
                if den <= 0.0 {
                    return (f64::INFINITY, f64::INFINITY);
                }
                d1 -= rho * qs[i] * ad[i] / den;
                d2 += rho * qs[i] * (ad[i] / den).powi(2);
            }
            (d1, d2)
        };
        let gamma = if slope(gmax).0 <= 0.0 {
            gmax
        } else {
            let (mut lo, mut hi) = (0.0, gmax);
            let mut x = 0.5 * gmax;
            for _ in 0..100 {
                let (d1, d2) = slope(x);
                if d1 > 0.0 {
                    hi = x;
                } else {
                    lo = x;
                }
                let newton = x - d1 / d2;
                x = if d1.is_finite() && newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                };
                if hi - lo <= 1e-15 * gmax || d1.abs() <= 1e-15 {
                    break;
                }
            }
            x
        };
        for j in 0..n {
            v[j] += gamma * dir[j];
            if v[j] < 1e-300 {
                v[j] = 0.0;
            }
        }
        if gamma == gmax && gmax != 1.0 {
            v[away] = 0.0;
        }
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
        s = apply(&v);
        iterations += 1;
    }
    let q_prime = Distribution::new(v).expect("iterate stays on the simplex");
    let value = ex_prime_objective(q, &q_prime, rho, d);
    ExPrimeSolution {
        value,
        q_prime,
        gap,
        iterations,
    }
}

/// Solves the `E′_x(Q,ρ)` minimization with Frank–Wolfe from the uniform
/// output law; no grid check.
pub fn ex_prime_dual_solve(q: &Distribution, rho: f64, d: &BhattacharyyaMatrix) -> Result<ExPrimeSolution> {
    check_rho(rho)?;
    check_dims(q, d)?;
    let n = d.size();
    Ok(frank_wolfe(q, rho, d, &vec![1.0 / n as f64; n]))
}

/// `E′_x(Q,ρ) = min_{Q′} −ρ Σ_x Q(x) log Σ_x̄ Q′(x̄) e^{−d(x,x̄)/ρ}`.
///
/// For up to four inputs the Frank–Wolfe answer is checked against a
/// 0.02 simplex grid and restarted from any grid point that beats it.
pub fn ex_prime_dual(q: &Distribution, rho: f64, d: &BhattacharyyaMatrix) -> Result<f64> {
    let sol = ex_prime_dual_solve(q, rho, d)?;
    let mut value = sol.value;
    if d.size() <= MAX_DEFAULT_INPUTS && d.size() > 1 {
        let grid = SimplexGrid::with_resolution(d.size(), CHECK_GRID_RESOLUTION);
        let (best_v, best_q) = grid
            .points()
            .into_iter()
            .map(|p| (ex_prime_objective(q, &p, rho, d), p))
            .fold((f64::INFINITY, None), |acc, (v, p)| {
                if v < acc.0 {
                    (v, Some(p))
                } else {
                    acc
                }
            });
        if best_v < value - 1e-9 {
            let restart = frank_wolfe(q, rho, d, best_q.expect("grid point").probs());
            value = restart.value.min(best_v);
        }
    }
    Ok(value.max(0.0))
}

/// `lim_{ρ→∞} E′_x(Q,ρ) = min_x̄ Σ_x Q(x) d(x,x̄)`.
pub fn ex_prime_limit(q: &Distribution, d: &BhattacharyyaMatrix) -> f64 {
    (0..d.size())
        .map(|xb| expected_distance(q, d, xb))
        .fold(f64::INFINITY, f64::min)
}

fn expected_distance(q: &Distribution, d: &BhattacharyyaMatrix, xb: usize) -> f64 {
    q.support().map(|x| q.get(x) * d.get(x, xb)).sum()
}

/// `lim_{ρ→∞} E_x(Q,ρ) = Σ_{x,x̄} Q(x)Q(x̄) d(x,x̄)`.
pub fn ex_single_limit(q: &Distribution, d: &BhattacharyyaMatrix) -> f64 {
    q.support().map(|xb| q.get(xb) * expected_distance(q, d, xb)).sum()
}

/// Maximum over input laws and the maximizing law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxOverQ {
    pub value: f64,
    pub q: Distribution,
}

/// Grid search over `q_grid` followed by a pairwise polish from the
/// preferred grid point.
pub fn maximize_over_q(q_grid: &SimplexGrid, f: impl Fn(&Distribution) -> f64 + Sync) -> MaxOverQ {
    let cands: Vec<(f64, Distribution)> = q_grid
        .points()
        .into_par_iter()
        .map(|q| (f(&q), q))
        .collect();
    let best = select_max(&cands);
    let (v, q) = &cands[best];
    let (q, value) = polish_max(q, *v, q_grid.resolution(), &f);
    MaxOverQ { value, q }
}

fn check_grid(q_grid: &SimplexGrid, d: &BhattacharyyaMatrix) -> Result<()> {
    if q_grid.dim != d.size() {
        return Err(Error::DimensionMismatch {
            expected: d.size(),
            found: q_grid.dim,
        });
    }
    Ok(())
}

/// `E′_x(ρ) = max_Q E′_x(Q,ρ)` over a simplex grid with local polish.
pub fn ex_prime_dual_max(rho: f64, d: &BhattacharyyaMatrix, q_grid: &SimplexGrid) -> Result<MaxOverQ> {
    check_rho(rho)?;
    check_grid(q_grid, d)?;
    Ok(maximize_over_q(q_grid, |q| {
        ex_prime_dual_solve(q, rho, d).map(|s| s.value).unwrap_or(f64::NEG_INFINITY)
    }))
}

/// `E_x(ρ) = max_Q E_x(Q,ρ)` over a simplex grid with local polish.
pub fn ex_single_dual_max(rho: f64, d: &BhattacharyyaMatrix, q_grid: &SimplexGrid) -> Result<MaxOverQ> {
    check_rho(rho)?;
    check_grid(q_grid, d)?;
    Ok(maximize_over_q(q_grid, |q| {
        ex_single_dual(q, rho, d).map(|s| s.value).unwrap_or(f64::NEG_INFINITY)
    }))
}

/// `E′_ex(Q,R) = sup_{ρ≥1} E′_x(Q,ρ) − ρR` on a log grid over `[1, ρ_max]`
/// with golden refinement. When the grid optimum sits at `ρ_max` the
/// `ρ → ∞` limit of `E′_x(Q,ρ)` is attached; at `R = 0` that limit is the
/// supremum and is returned with [`Attainment::Limit`].
pub fn eex_prime_from_dual(
    q: &Distribution,
    r: f64,
    d: &BhattacharyyaMatrix,
    rho_max: f64,
    rho_points: usize,
) -> Result<Optimum> {
    check_rate(r)?;
    check_dims(q, d)?;
    check_rho(rho_max)?;
    let f = |rho: f64| ex_prime_dual_solve(q, rho, d).map(|s| s.value).unwrap_or(f64::NAN) - rho * r;
    let grid = log_grid(1.0, rho_max, rho_points.max(2));
    let values: Vec<f64> = grid.iter().map(|&rho| f(rho)).collect();
    let mut opt = refine_grid_max(&grid, &values, f);
    if opt.attainment == Attainment::Truncated {
        let limit = ex_prime_limit(q, d);
        opt.limit = Some(limit);
        if r == 0.0 {
            opt.value = limit;
            opt.arg = f64::INFINITY;
            opt.attainment = if limit.is_infinite() {
                Attainment::Infinite
            } else {
                Attainment::Limit
            };
        }
    }
    Ok(opt)
}

/// `sup_{ρ≥1} E_x(Q,ρ) − ρR`, the single-class analogue of
/// [`eex_prime_from_dual`].
pub fn eex_single_from_dual(
    q: &Distribution,
    r: f64,
    d: &BhattacharyyaMatrix,
    rho_max: f64,
    rho_points: usize,
) -> Result<Optimum> {
    check_rate(r)?;
    check_dims(q, d)?;
    check_rho(rho_max)?;
    let f = |rho: f64| ex_single_dual(q, rho, d).map(|s| s.value).unwrap_or(f64::NAN) - rho * r;
    let grid = log_grid(1.0, rho_max, rho_points.max(2));
    let values: Vec<f64> = grid.iter().map(|&rho| f(rho)).collect();
    let mut opt = refine_grid_max(&grid, &values, f);
    if opt.attainment == Attainment::Truncated {
        let limit = ex_single_limit(q, d);
        opt.limit = Some(limit);
        if r == 0.0 {
            opt.value = limit;
            opt.arg = f64::INFINITY;
            opt.attainment = if limit.is_infinite() {
                Attainment::Infinite
            } else {
                Attainment::Limit
            };
        }
    }
    Ok(opt)
}

/// Value of `min E[d] + I − R` subject to `I ≤ R`, given a solver for the
/// Lagrangian `min E[d] + I/s` returning `(E[d], I)` at slope `s ∈ (0,1]`
/// and the `I = 0` value `d0`. Bisects on `s` for `I(s) = R` and
/// interpolates between the bracketing couplings.
fn rate_constrained(r: f64, d0: f64, lagrangian: impl Fn(f64) -> (f64, f64)) -> f64 {
    if r <= 0.0 {
        return d0;
    }
    let (d1, i1) = lagrangian(1.0);
    if i1 <= r {
        return d1 + i1 - r;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut plo, mut phi) = ((d0, 0.0), (d1, i1));
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (lo + hi);
        let p = lagrangian(mid);
        if p.1 <= r {
            lo = mid;
            if p.0 + p.1 < plo.0 + plo.1 || !plo.0.is_finite() {
                plo = p;
            }
        } else {
            hi = mid;
            phi = p;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let (dl, il) = plo;
    let (dh, ih) = phi;
    if !dl.is_finite() {
        return dh + ih - r;
    }
    if ih - il <= 1e-15 {
        return dl + il - r;
    }
    dl + (r - il) * (dh - dl) / (ih - il)
}

/// Blahut–Arimoto solution of `min_{P(x̄|x)} E[d] + I/s` with row law `Q`.
fn weak_lagrangian(q: &Distribution, d: &BhattacharyyaMatrix, s: f64) -> (f64, f64) {
    let n = d.size();
    let k = d.kernel(1.0 / s);
    let sup: Vec<usize> = q.support().collect();
    let mut out = vec![1.0 / n as f64; n];
    let mut cond = vec![0.0; n * n];
    for _ in 0..BA_MAX_ITER {
        let mut next = vec![0.0; n];
        let mut c = vec![0.0; n];
        for &x in &sup {
            let z: f64 = (0..n).map(|xb| out[xb] * k[x * n + xb]).sum();
            for xb in 0..n {
                let p = out[xb] * k[x * n + xb] / z;
                cond[x * n + xb] = p;
                next[xb] += q.get(x) * p;
                c[xb] += q.get(x) * k[x * n + xb] / z;
            }
        }
        out = next;
        let cmax = c.iter().cloned().fold(0.0, f64::max);
        if cmax.ln() / s <= 1e-11 {
            break;
        }
    }
    coupling_stats(q, d, &cond)
}

fn coupling_stats(q: &Distribution, d: &BhattacharyyaMatrix, cond: &[f64]) -> (f64, f64) {
    let n = d.size();
    let mut joint = vec![0.0; n * n];
    let mut ed = 0.0;
    for x in q.support() {
        for xb in 0..n {
            let p = q.get(x) * cond[x * n + xb];
            joint[x * n + xb] = p;
            if p > 0.0 {
                ed += p * d.get(x, xb);
            }
        }
    }
    let total: f64 = joint.iter().sum();
    joint.iter_mut().for_each(|p| *p /= total);
    let info = JointDistribution::new(n, n, joint)
        .map(|j| mutual_information(&j))
        .unwrap_or(0.0);
    (ed, info.max(0.0))
}

/// Weak expurgated exponent `min {E[d] + I − R : P_X = Q, I(X;X̄) ≤ R}`.
pub fn eex_prime_primal(q: &Distribution, r: f64, d: &BhattacharyyaMatrix) -> Result<f64> {
    check_rate(r)?;
    check_dims(q, d)?;
    Ok(rate_constrained(r, ex_prime_limit(q, d), |s| weak_lagrangian(q, d, s)))
}

/// Sinkhorn solution of `min E[d] + I/s` over couplings with both
/// marginals `Q`.
fn ckm_lagrangian(q: &Distribution, d: &BhattacharyyaMatrix, s: f64) -> (f64, f64) {
    let n = d.size();
    let k = d.kernel(1.0 / s);
    let sup: Vec<usize> = q.support().collect();
    let mut u = vec![1.0; n];
    let mut v = vec![1.0; n];
    for _ in 0..BA_MAX_ITER {
        for &x in &sup {
            let z: f64 = sup.iter().map(|&xb| k[x * n + xb] * q.get(xb) * v[xb]).sum();
            u[x] = 1.0 / z;
        }
        let mut err: f64 = 0.0;
        for &xb in &sup {
            let z: f64 = sup.iter().map(|&x| k[x * n + xb] * q.get(x) * u[x]).sum();
            err = err.max((z * v[xb] - 1.0).abs());
            v[xb] = 1.0 / z;
        }
        if err <= 1e-13 {
            break;
        }
    }
    let mut cond = vec![0.0; n * n];
    for &x in &sup {
        for &xb in &sup {
            cond[x * n + xb] = k[x * n + xb] * q.get(xb) * u[x] * v[xb];
        }
    }
    coupling_stats(q, d, &cond)
}

/// CKM expurgated exponent: as [`eex_prime_primal`] with the column
/// marginal also pinned to `Q`.
pub fn eex_ckm_primal(q: &Distribution, r: f64, d: &BhattacharyyaMatrix) -> Result<f64> {
    check_rate(r)?;
    check_dims(q, d)?;
    if q.support_size() == 1 {
        return Ok(-r);
    }
    Ok(rate_constrained(r, ex_single_limit(q, d), |s| ckm_lagrangian(q, d, s)))
}

/// Tilt `a(·)` with gauge `Σ Q(x)a(x) = 0`; zero off the support of `Q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltVector {
    pub a: Vec<f64>,
}

/// Value of `E_x(Q,ρ)` and the optimal tilt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltSolution {
    pub value: f64,
    pub tilt: TiltVector,
    pub iterations: usize,
}

/// `−ρ Σ_x Q(x) log Σ_x̄ Q(x̄) (e^{−d} e^{a(x̄)−a(x)})^{1/ρ}` at tilt `a`.
pub fn ex_single_objective(q: &Distribution, rho: f64, d: &BhattacharyyaMatrix, a: &[f64]) -> f64 {
    let sup: Vec<usize> = q.support().collect();
    let mut total = 0.0;
    for &x in &sup {
        let terms: Vec<f64> = sup
            .iter()
            .map(|&xb| q.get(xb).ln() + (a[xb] - a[x] - d.get(x, xb)) / rho)
            .collect();
        total -= q.get(x) * log_sum_exp(&terms);
    }
    rho * total
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `E_x(Q,ρ) = sup_a` of [`ex_single_objective`], by damped Newton ascent
/// on the concave objective restricted to the support of `Q`.
pub fn ex_single_dual(q: &Distribution, rho: f64, d: &BhattacharyyaMatrix) -> Result<TiltSolution> {
    check_rho(rho)?;
    check_dims(q, d)?;
    let sup: Vec<usize> = q.support().collect();
    let m = sup.len();
    let qs: Vec<f64> = sup.iter().map(|&x| q.get(x)).collect();
    // With Σ Q a = 0 the objective is Σ Q a − ρ Σ Q log Σ Q(x̄) e^{(a(x̄)−d)/ρ}.
    let eval = |b: &[f64]| -> (f64, Vec<Vec<f64>>) {
        let mut value: f64 = qs.iter().zip(b).map(|(p, v)| p * v).sum();
        let mut weights = Vec::with_capacity(m);
        for i in 0..m {
            let terms: Vec<f64> = (0..m)
                .map(|j| qs[j].ln() + (b[j] - d.get(sup[i], sup[j])) / rho)
                .collect();
            let lse = log_sum_exp(&terms);
            value -= rho * qs[i] * lse;
            weights.push(terms.iter().map(|t| (t - lse).exp()).collect());
        }
        (value, weights)
    };
    let mut b = vec![0.0; m];
    let (mut value, mut w) = eval(&b);
    let mut iterations = 0;
    for _ in 0..200 {
        let mut g = qs.clone();
        for i in 0..m {
            for j in 0..m {
                g[j] -= qs[i] * w[i][j];
            }
        }
        if g.iter().all(|v| v.abs() <= 1e-9) {
            break;
        }
        iterations += 1;
        let mut h = DMatrix::<f64>::from_element(m, m, 1.0 / m as f64);
        for i in 0..m {
            for j in 0..m {
                h[(j, j)] += qs[i] * w[i][j] / rho;
                for l in 0..m {
                    h[(j, l)] -= qs[i] * w[i][j] * w[i][l] / rho;
                }
            }
        }
        let rhs = DVector::from_vec(g.clone());
        let mut mu = 1e-12;
        let step = loop {
            let mut hm = h.clone();
            for j in 0..m {
                hm[(j, j)] += mu;
            }
            if let Some(ch) = hm.cholesky() {
                break ch.solve(&rhs);
            }
            mu *= 10.0;
        };
        let slope: f64 = step.iter().zip(&g).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = b.iter().zip(step.iter()).map(|(x, s)| x + t * s).collect();
            let (tv, tw) = eval(&trial);
            if tv >= value + 1e-4 * t * slope {
                accepted = tv > value || t == 1.0;
                b = trial;
                value = tv;
                w = tw;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let shift: f64 = qs.iter().zip(&b).map(|(p, v)| p * v).sum();
    let mut a = vec![0.0; d.size()];
    for (i, &x) in sup.iter().enumerate() {
        a[x] = b[i] - shift;
    }
    let value = ex_single_objective(q, rho, d, &a).max(ex_single_objective(q, rho, d, &vec![0.0; d.size()]));
    Ok(TiltSolution {
        value,
        tilt: TiltVector { a },
        iterations,
    })
}
