//! Sampled exponent curves, their upper concave hulls and a direct
//! numerical evaluation of the concave biconjugate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optim::{golden_min, linear_grid};

const R_GRID_POINTS: usize = 2001;

/// A function sampled on a strictly increasing grid. `flags[i]` marks
/// values that come from a truncated or boundary optimization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
    flags: Vec<bool>,
}

impl ExponentCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let flags = vec![false; grid.len()];
        Self::with_flags(grid, values, flags)
    }

    pub fn with_flags(grid: Vec<f64>, values: Vec<f64>, flags: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || flags.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len().min(flags.len()),
            });
        }
        if let Some(w) = grid.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "grid",
                value: w[1],
                constraint: "strictly increasing",
            });
        }
        Ok(Self { grid, values, flags })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Largest grid spacing.
    pub fn resolution(&self) -> f64 {
        self.grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index `i` with `grid[i] ≤ x ≤ grid[i+1]`, clamped to the grid.
    pub fn bracket(&self, x: f64) -> usize {
        let n = self.grid.len();
        if n < 2 {
            return 0;
        }
        self.grid.partition_point(|&g| g <= x).clamp(1, n - 1) - 1
    }

    /// Piecewise-linear interpolation; constant extrapolation outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x <= self.grid[0] {
            return self.values[0];
        }
        if x >= self.grid[n - 1] {
            return self.values[n - 1];
        }
        let i = self.bracket(x);
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        if x == x0 {
            return y0;
        }
        y0 + (x - x0) * (y1 - y0) / (x1 - x0)
    }
}

/// Indices of the vertices of the upper concave envelope of the finite
/// samples, in increasing grid order.
pub fn hull_vertices(curve: &ExponentCurve) -> Result<Vec<usize>> {
    let pts: Vec<usize> = (0..curve.len()).filter(|&i| curve.values[i].is_finite()).collect();
    if pts.len() < 2 {
        return Err(Error::DegenerateCurve);
    }
    let (g, v) = (&curve.grid, &curve.values);
    let mut hull: Vec<usize> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Drop b when it lies on or below the chord from a to p.
            let cross = (g[b] - g[a]) * (v[p] - v[a]) - (v[b] - v[a]) * (g[p] - g[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    Ok(hull)
}

/// Smallest concave majorant of the finite samples, evaluated back on the
/// curve's grid. Non-finite samples outside the finite span keep their value.
pub fn upper_concave_hull(curve: &ExponentCurve) -> Result<ExponentCurve> {
    let verts = hull_vertices(curve)?;
    let (g, v) = (&curve.grid, &curve.values);
    let mut values = v.clone();
    for w in verts.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (i, val) in values.iter_mut().enumerate().take(b + 1).skip(a) {
            *val = if i == a {
                v[a]
            } else if i == b {
                v[b]
            } else {
                v[a] + (g[i] - g[a]) * (v[b] - v[a]) / (g[b] - g[a])
            };
        }
    }
    ExponentCurve::with_flags(g.clone(), values, curve.flags.clone())
}

/// `g**(λ) = inf_R max_i { g_i + (λ − ρ_i) R }` over the finite samples,
/// with the outer infimum taken on a grid of `R` spanning the largest
/// chord slope, then refined by golden-section search.
pub fn biconjugate_eval(curve: &ExponentCurve, lambda: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = (0..curve.len())
        .filter(|&i| curve.values[i].is_finite())
        .map(|i| (curve.grid[i], curve.values[i]))
        .collect();
    if pts.len() < 2 {
        return Err(Error::DegenerateCurve);
    }
    let slope_max = pts
        .windows(2)
        .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
        .fold(0.0, f64::max);
    let bound = 1.5 * slope_max + 1.0;
    let h = |r: f64| {
        pts.iter()
            .map(|&(x, y)| y + (lambda - x) * r)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let rs = linear_grid(-bound, bound, R_GRID_POINTS);
    let vals: Vec<f64> = rs.iter().map(|&r| h(r)).collect();
    let best = (0..rs.len()).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
    let lo = rs[best.saturating_sub(1)];
    let hi = rs[(best + 1).min(rs.len() - 1)];
    let (_, v) = golden_min(h, lo, hi, 1e-14);
    Ok(v.min(vals[best]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::log_grid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn concave_curve_is_fixed() {
        let g = linear_grid(1.0, 50.0, 60);
        let v: Vec<f64> = g.iter().map(|x| x.sqrt()).collect();
        let c = ExponentCurve::new(g, v.clone()).unwrap();
        let h = upper_concave_hull(&c).unwrap();
        for (a, b) in h.values().iter().zip(&v) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn chord_dominates_middle_point() {
        let c = ExponentCurve::new(vec![1.0, 2.0, 3.0], vec![0.0, 0.1, 1.0]).unwrap();
        let h = upper_concave_hull(&c).unwrap();
        assert_abs_diff_eq!(h.values()[1], 0.5, epsilon = 1e-15);
        assert_eq!(hull_vertices(&c).unwrap(), vec![0, 2]);
        assert_abs_diff_eq!(biconjugate_eval(&c, 2.0).unwrap(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn two_points_give_chord() {
        let c = ExponentCurve::new(vec![1.0, 3.0], vec![2.0, -1.0]).unwrap();
        let h = upper_concave_hull(&c).unwrap();
        assert_eq!(h.values(), &[2.0, -1.0]);
        assert_abs_diff_eq!(biconjugate_eval(&c, 2.0).unwrap(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn affine_data_is_self_conjugate() {
        let g = log_grid(1.0, 100.0, 40);
        let v: Vec<f64> = g.iter().map(|x| 0.3 * x - 2.0).collect();
        let c = ExponentCurve::new(g, v).unwrap();
        for lam in [1.0, 7.5, 99.0] {
            assert_abs_diff_eq!(biconjugate_eval(&c, lam).unwrap(), 0.3 * lam - 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn degenerate_and_invalid_curves() {
        let c = ExponentCurve::new(vec![1.0, 2.0], vec![f64::NEG_INFINITY, 1.0]).unwrap();
        assert_eq!(upper_concave_hull(&c), Err(Error::DegenerateCurve));
        assert!(ExponentCurve::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(ExponentCurve::new(vec![1.0, 2.0], vec![0.0]).is_err());
    }

    #[test]
    fn eval_interpolates() {
        let c = ExponentCurve::new(vec![1.0, 3.0, 4.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(c.eval(2.0), 1.0);
        assert_eq!(c.eval(3.5), 1.0);
        assert_eq!(c.eval(0.0), 0.0);
        assert_eq!(c.bracket(3.0), 1);
    }

    fn curve_strategy() -> impl Strategy<Value = ExponentCurve> {
        prop::collection::vec(-2.0f64..2.0, 5..40).prop_map(|v| {
            let g = linear_grid(1.0, 10.0, v.len());
            ExponentCurve::new(g, v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn hull_majorizes_is_concave_and_idempotent(c in curve_strategy()) {
            let h = upper_concave_hull(&c).unwrap();
            for (a, b) in h.values().iter().zip(c.values()) {
                prop_assert!(a >= b);
            }
            let (g, v) = (h.grid(), h.values());
            for i in 1..g.len() - 1 {
                let left = (v[i] - v[i - 1]) / (g[i] - g[i - 1]);
                let right = (v[i + 1] - v[i]) / (g[i + 1] - g[i]);
                prop_assert!(right <= left + 1e-12);
            }
            let hh = upper_concave_hull(&h).unwrap();
            for (a, b) in hh.values().iter().zip(v) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn biconjugate_matches_hull(c in curve_strategy(), u in 0.0f64..1.0) {
            let h = upper_concave_hull(&c).unwrap();
            let lam = 1.0 + 9.0 * u;
            let b = biconjugate_eval(&c, lam).unwrap();
            prop_assert!((b - h.eval(lam)).abs() <= 1e-8, "{} vs {}", b, h.eval(lam));
        }
    }
}
