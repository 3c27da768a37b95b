//! Source reliability function `e(R, P_V)` and the Gallager source function
//! `E_s(ρ, P_V)`, in primal (minimum divergence over an entropy
//! constraint) and dual (supremum over ρ) form, plus the class-restricted
//! source function used by partitioned codes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optim::{linear_grid, log_grid, refine_grid_max, Attainment, Optimum};
use crate::prob::{entropy, kl_divergence, Distribution, SourceTypeTable};

/// Default truncation of the unbounded ρ (and λ) ranges.
pub const DEFAULT_RHO_MAX: f64 = 1e4;

/// Memoryless source law together with the transmission rate `t = k/n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceModel {
    law: Distribution,
    letters: Vec<usize>,
    t: f64,
}

impl SourceModel {
    /// Drops zero-probability letters from the alphabet; `letters()` maps the
    /// reduced alphabet back to the original indices.
    pub fn new(law: Distribution, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
                constraint: "t > 0",
            });
        }
        let letters: Vec<usize> = law.support().collect();
        let reduced = letters.iter().map(|&i| law.get(i)).collect::<Vec<_>>();
        let total: f64 = reduced.iter().sum();
        let law = Distribution::new(reduced.iter().map(|p| p / total).collect())?;
        Ok(Self { law, letters, t })
    }

    pub fn law(&self) -> &Distribution {
        &self.law
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn alphabet_size(&self) -> usize {
        self.law.len()
    }

    /// Largest finite rate `t·log|V|` of the source part.
    pub fn max_rate(&self) -> f64 {
        self.t * (self.alphabet_size() as f64).ln()
    }

    /// Same law at a different transmission rate.
    pub fn with_rate(&self, t: f64) -> Result<Self> {
        Self::new(self.law.clone(), t)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho >= 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "rho",
            value: rho,
            constraint: "0 <= rho < inf",
        })
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `E_s(ρ, P) = (1+ρ) log Σ_v P(v)^{1/(1+ρ)}`.
pub fn gallager_source_fn(rho: f64, law: &Distribution) -> Result<f64> {
    check_rho(rho)?;
    let s = 1.0 / (1.0 + rho);
    let lse = log_sum_exp(law.support().map(|v| s * law.get(v).ln()));
    Ok((1.0 + rho) * lse)
}

/// Tilted law `Q_s(v) ∝ P(v)^s` on the support of `P`, `s ∈ [0, 1]`.
fn tilted(law: &Distribution, s: f64) -> Distribution {
    let logs: Vec<f64> = law
        .probs()
        .iter()
        .map(|&p| if p > 0.0 { s * p.ln() } else { f64::NEG_INFINITY })
        .collect();
    let lse = log_sum_exp(logs.iter().copied());
    let probs = logs.iter().map(|l| (l - lse).exp()).collect::<Vec<_>>();
    let total: f64 = probs.iter().sum();
    Distribution::new(probs.iter().map(|p| p / total).collect()).expect("tilted law")
}

/// `dE_s/dρ`, the entropy of the tilted law at `s = 1/(1+ρ)`.
pub fn gallager_source_slope(rho: f64, law: &Distribution) -> Result<f64> {
    check_rho(rho)?;
    Ok(entropy(&tilted(law, 1.0 / (1.0 + rho))))
}

fn check_rate(r: f64) -> Result<()> {
    if r >= 0.0 && !r.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "R",
            value: r,
            constraint: "R >= 0",
        })
    }
}

/// `e(R, P) = min_{Q: H(Q) ≥ R} D(Q‖P)`, solved on the tilted family by
/// bisection on the tilt.
pub fn source_reliability_primal(r: f64, law: &Distribution) -> Result<f64> {
    check_rate(r)?;
    let support: Vec<f64> = law.support().map(|v| law.get(v)).collect();
    let reduced = Distribution::new(support)?;
    let log_n = (reduced.len() as f64).ln();
    if r <= entropy(&reduced) {
        return Ok(0.0);
    }
    if r > log_n + 1e-12 {
        return Ok(f64::INFINITY);
    }
    let uniform = Distribution::uniform(reduced.len());
    if r >= log_n {
        return kl_divergence(&uniform, &reduced);
    }
    // H(Q_s) decreases from log n at s = 0 to H(P) at s = 1.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if entropy(&tilted(&reduced, mid)) >= r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    kl_divergence(&tilted(&reduced, lo), &reduced)
}

/// `e(R, P) = sup_{ρ ≥ 0} ρR − E_s(ρ, P)` over `[0, rho_max]`.
///
/// A supremum pinned at `rho_max` is reported as `+∞` when `R > log|V|`,
/// replaced by its closed-form limit `D(uniform‖P)` when `R = log|V|`, and
/// flagged `Truncated` otherwise.
pub fn source_reliability_dual(r: f64, law: &Distribution, rho_max: f64) -> Result<Optimum> {
    check_rate(r)?;
    let objective = |rho: f64| rho * r - gallager_source_fn(rho, law).expect("rho >= 0");
    let mut grid = vec![0.0];
    grid.extend(log_grid(1e-4, rho_max, 240));
    let values: Vec<f64> = grid.iter().map(|&rho| objective(rho)).collect();
    let mut opt = refine_grid_max(&grid, &values, objective);
    if opt.attainment == Attainment::Truncated {
        let n = law.support_size();
        let log_n = (n as f64).ln();
        if r > log_n + 1e-12 {
            opt = Optimum {
                value: f64::INFINITY,
                arg: f64::INFINITY,
                attainment: Attainment::Infinite,
                limit: Some(f64::INFINITY),
            };
        } else if r >= log_n - 1e-12 {
            let support: Vec<f64> = law.support().map(|v| law.get(v)).collect();
            let reduced = Distribution::new(support)?;
            let value = kl_divergence(&Distribution::uniform(n), &reduced)?;
            opt = Optimum {
                value,
                arg: f64::INFINITY,
                attainment: Attainment::Limit,
                limit: Some(value),
            };
        }
    }
    Ok(opt)
}

/// `E_s^{(c)}(ρ, P^k) = (1+ρ) log Σ_{v ∈ A_c} P^k(v)^{1/(1+ρ)}` for the class
/// made of the listed type classes of `table`.
pub fn class_source_fn(
    rho: f64,
    table: &SourceTypeTable,
    members: &[usize],
    law: &Distribution,
) -> Result<f64> {
    check_rho(rho)?;
    if members.is_empty() {
        return Err(Error::EmptyClass);
    }
    if table.alphabet_size() != law.len() {
        return Err(Error::DimensionMismatch {
            expected: law.len(),
            found: table.alphabet_size(),
        });
    }
    let s = 1.0 / (1.0 + rho);
    let terms = members.iter().map(|&i| {
        let ty = &table.types[i];
        let mut log_prob = 0.0;
        for (&c, &p) in ty.counts.iter().zip(law.probs()) {
            if c > 0 {
                if p == 0.0 {
                    return f64::NEG_INFINITY;
                }
                log_prob += c as f64 * p.ln();
            }
        }
        ty.log_count + s * log_prob
    });
    Ok((1.0 + rho) * log_sum_exp(terms))
}

/// `R` grid on `[0, log|V|]` used by sweeps and duality reports.
pub fn rate_grid(law: &Distribution, points: usize) -> Vec<f64> {
    linear_grid(0.0, (law.support_size() as f64).ln(), points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::enumerate_types;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn d(p: &[f64]) -> Distribution {
        Distribution::new(p.to_vec()).unwrap()
    }

    #[test]
    fn gallager_source_examples() {
        let u = Distribution::uniform(2);
        for rho in [0.0, 0.5, 1.0, 7.0] {
            assert_abs_diff_eq!(
                gallager_source_fn(rho, &u).unwrap(),
                rho * 2f64.ln(),
                epsilon = 1e-14
            );
        }
        assert_eq!(gallager_source_fn(3.0, &d(&[1.0, 0.0])).unwrap(), 0.0);
        assert_abs_diff_eq!(
            gallager_source_fn(1.0, &d(&[0.9, 0.1])).unwrap(),
            1.6f64.ln(),
            epsilon = 1e-14
        );
        assert!(gallager_source_fn(-0.1, &u).is_err());
    }

    #[test]
    fn gallager_source_is_convex_and_starts_at_zero() {
        let law = d(&[0.7, 0.2, 0.1]);
        assert_abs_diff_eq!(gallager_source_fn(0.0, &law).unwrap(), 0.0, epsilon = 1e-15);
        let h = 0.05;
        let vals: Vec<f64> = (0..200)
            .map(|i| gallager_source_fn(i as f64 * h, &law).unwrap())
            .collect();
        for w in vals.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn slope_matches_finite_difference() {
        let law = d(&[0.6, 0.3, 0.1]);
        for rho in [0.3, 1.0, 4.0] {
            let h = 1e-5;
            let fd = (gallager_source_fn(rho + h, &law).unwrap()
                - gallager_source_fn(rho - h, &law).unwrap())
                / (2.0 * h);
            assert_abs_diff_eq!(gallager_source_slope(rho, &law).unwrap(), fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn primal_examples() {
        let skew = d(&[0.9, 0.1]);
        assert_eq!(source_reliability_primal(0.0, &skew).unwrap(), 0.0);
        assert_abs_diff_eq!(
            source_reliability_primal(2f64.ln(), &skew).unwrap(),
            0.5 * (0.25f64 / 0.09).ln(),
            epsilon = 1e-12
        );
        assert_eq!(
            source_reliability_primal(1.1 * 2f64.ln(), &skew).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn dual_examples() {
        let u = Distribution::uniform(3);
        for r in [0.0, 0.5, 3f64.ln() - 1e-9] {
            assert_abs_diff_eq!(
                source_reliability_dual(r, &u, DEFAULT_RHO_MAX).unwrap().value,
                0.0,
                epsilon = 1e-9
            );
        }
        let skew = d(&[0.9, 0.1]);
        let o = source_reliability_dual(2f64.ln(), &skew, DEFAULT_RHO_MAX).unwrap();
        assert_eq!(o.attainment, Attainment::Limit);
        assert_abs_diff_eq!(o.value, 0.510825623765991, epsilon = 1e-12);
        let o = source_reliability_dual(0.1, &d(&[1.0, 0.0]), DEFAULT_RHO_MAX).unwrap();
        assert_eq!(o.value, f64::INFINITY);
        assert_eq!(o.attainment, Attainment::Infinite);
    }

    #[test]
    fn reliability_is_nondecreasing_and_zero_below_entropy() {
        let law = d(&[0.5, 0.3, 0.2]);
        let h = entropy(&law);
        let mut prev = 0.0;
        for r in rate_grid(&law, 60) {
            let e = source_reliability_primal(r, &law).unwrap();
            assert!(e >= prev - 1e-12);
            if r <= h {
                assert_eq!(e, 0.0);
            }
            prev = e;
        }
    }

    #[test]
    fn class_source_examples() {
        let law = d(&[0.9, 0.1]);
        let table = enumerate_types(4, 2, 1.0).unwrap();
        let all: Vec<usize> = (0..table.len()).collect();
        for rho in [0.0, 1.0, 2.5] {
            assert_abs_diff_eq!(
                class_source_fn(rho, &table, &all, &law).unwrap(),
                4.0 * gallager_source_fn(rho, &law).unwrap(),
                epsilon = 1e-9
            );
        }
        let zero_ones = table.index_of(&[4, 0]).unwrap();
        assert_abs_diff_eq!(
            class_source_fn(1.0, &table, &[zero_ones], &law).unwrap(),
            4.0 * 0.9f64.ln(),
            epsilon = 1e-12
        );
        let k1 = enumerate_types(1, 2, 1.0).unwrap();
        let one = k1.index_of(&[0, 1]).unwrap();
        assert_abs_diff_eq!(
            class_source_fn(0.0, &k1, &[one], &law).unwrap(),
            0.1f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(
            class_source_fn(1.0, &table, &[], &law),
            Err(Error::EmptyClass)
        );
    }

    #[test]
    fn class_source_partitions_the_sum() {
        let law = d(&[0.5, 0.3, 0.2]);
        let k = 6;
        let table = enumerate_types(k, 3, 1.0).unwrap();
        let rho = 1.7;
        let s = 1.0 / (1.0 + rho);
        let (a, b): (Vec<usize>, Vec<usize>) = (0..table.len()).partition(|i| i % 3 == 0);
        let lhs = (class_source_fn(rho, &table, &a, &law).unwrap() * s).exp()
            + (class_source_fn(rho, &table, &b, &law).unwrap() * s).exp();
        let rhs = (k as f64 * gallager_source_fn(rho, &law).unwrap() * s).exp();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9 * rhs);
    }

    #[test]
    fn zero_letters_are_dropped() {
        let m = SourceModel::new(d(&[0.0, 0.8, 0.2]), 0.5).unwrap();
        assert_eq!(m.alphabet_size(), 2);
        assert_eq!(m.letters(), &[1, 2]);
        assert!(SourceModel::new(d(&[0.5, 0.5]), 0.0).is_err());
    }

    fn full_support(len: usize) -> impl Strategy<Value = Distribution> {
        prop::collection::vec(0.05f64..1.0, len).prop_map(|w| {
            let s: f64 = w.iter().sum();
            let mut p: Vec<f64> = w.iter().map(|x| x / s).collect();
            let head: f64 = p[..p.len() - 1].iter().sum();
            *p.last_mut().unwrap() = 1.0 - head;
            Distribution::new(p).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn primal_and_dual_agree(law in prop_oneof![full_support(2), full_support(3)]) {
            for r in rate_grid(&law, 50) {
                let p = source_reliability_primal(r, &law).unwrap();
                let q = source_reliability_dual(r, &law, DEFAULT_RHO_MAX).unwrap().value;
                prop_assert!((p - q).abs() <= 1e-6, "R={} primal={} dual={}", r, p, q);
            }
        }
    }
}
