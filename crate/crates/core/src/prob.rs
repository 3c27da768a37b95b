//! Finite-alphabet probability primitives and method-of-types combinatorics.
//!
//! Every quantity is in nats. `f64::INFINITY` stands for an infinite
//! divergence or distance and is propagated rather than clipped.

use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a distribution or channel row.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Largest number of source types `enumerate_types` will produce.
pub const MAX_TYPES: u128 = 1_000_000;

fn check_mass(probs: &[f64], row: usize) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty alphabet".into()));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "entry {p} in row {row} is negative or not finite"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::NotStochastic { row, sum });
    }
    Ok(())
}

/// Probability vector on a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates and wraps `probs`. Mass off by more than
    /// [`STOCHASTIC_TOL`] is rejected, never renormalized.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_mass(&probs, 0)?;
        Ok(Self { probs })
    }

    pub fn uniform(size: usize) -> Self {
        assert!(size > 0, "alphabet must be nonempty");
        Self {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn point_mass(size: usize, at: usize) -> Self {
        assert!(at < size, "point mass outside alphabet");
        let mut probs = vec![0.0; size];
        probs[at] = 1.0;
        Self { probs }
    }

    /// Builds the empirical distribution `counts / total`.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("all counts are zero".into()));
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Indices with strictly positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, _)| i)
    }

    pub fn support_size(&self) -> usize {
        self.support().count()
    }

    /// Applies a relabeling: entry `i` of the result is entry `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            probs: perm.iter().map(|&i| self.probs[i]).collect(),
        }
    }

    /// Maximum absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Joint distribution of a pair `(X, X̄)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDistribution("empty joint alphabet".into()));
        }
        if probs.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: probs.len(),
            });
        }
        check_mass(&probs, 0)?;
        Ok(Self { rows, cols, probs })
    }

    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self> {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        if let Some(bad) = matrix.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                found: bad.len(),
            });
        }
        Self::new(rows, cols, matrix.concat())
    }

    /// Product of two marginals.
    pub fn product(a: &Distribution, b: &Distribution) -> Self {
        let probs = a
            .probs()
            .iter()
            .flat_map(|&p| b.probs().iter().map(move |&q| p * q))
            .collect();
        Self {
            rows: a.len(),
            cols: b.len(),
            probs,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, x: usize, xbar: usize) -> f64 {
        self.probs[x * self.cols + xbar]
    }

    pub fn row_marginal(&self) -> Distribution {
        let probs = self
            .probs
            .chunks(self.cols)
            .map(|r| r.iter().sum())
            .collect();
        Distribution { probs }
    }

    pub fn col_marginal(&self) -> Distribution {
        let mut probs = vec![0.0; self.cols];
        for row in self.probs.chunks(self.cols) {
            for (acc, p) in probs.iter_mut().zip(row) {
                *acc += p;
            }
        }
        Distribution { probs }
    }
}

/// Discrete memoryless channel `W(y|x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Channel {
    input_size: usize,
    output_size: usize,
    rows: Vec<f64>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let input_size = rows.len();
        if input_size == 0 {
            return Err(Error::InvalidDistribution("channel has no inputs".into()));
        }
        let output_size = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != output_size {
                return Err(Error::DimensionMismatch {
                    expected: output_size,
                    found: row.len(),
                });
            }
            check_mass(row, i)?;
        }
        Ok(Self {
            input_size,
            output_size,
            rows: rows.concat(),
        })
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                constraint: "0 <= p <= 1",
            });
        }
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.output_size..(x + 1) * self.output_size]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.output_size + y]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows.chunks(self.output_size).map(<[f64]>::to_vec).collect()
    }
}

/// Shannon entropy `−Σ p log p`, with `0 log 0 = 0`.
pub fn entropy(p: &Distribution) -> f64 {
    -p.probs()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// Relative entropy `D(q‖p)`; infinite when `q` charges a letter `p` does not.
pub fn kl_divergence(q: &Distribution, p: &Distribution) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    let mut acc = 0.0;
    for (&qi, &pi) in q.probs().iter().zip(p.probs()) {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc += qi * (qi / pi).ln();
    }
    Ok(acc.max(0.0))
}

/// `I(X; X̄) = D(P_{XX̄} ‖ P_X × P_X̄)`.
pub fn mutual_information(joint: &JointDistribution) -> f64 {
    let px = joint.row_marginal();
    let py = joint.col_marginal();
    let (rows, cols) = joint.dims();
    let mut acc = 0.0;
    for x in 0..rows {
        for y in 0..cols {
            let p = joint.get(x, y);
            if p > 0.0 {
                acc += p * (p / (px.get(x) * py.get(y))).ln();
            }
        }
    }
    acc.max(0.0)
}

/// Natural log of the multinomial coefficient `(Σc)! / Π c!`.
pub fn log_multinomial(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    ln_factorial(total as u64) - counts.iter().map(|&c| ln_factorial(c as u64)).sum::<f64>()
}

/// Integer counts `k·P` when `P` is a k-type.
pub fn type_counts(p: &Distribution, k: usize) -> Result<Vec<usize>> {
    let counts: Vec<usize> = p
        .probs()
        .iter()
        .map(|&x| (x * k as f64).round() as usize)
        .collect();
    let exact = p
        .probs()
        .iter()
        .zip(&counts)
        .all(|(&x, &c)| (x * k as f64 - c as f64).abs() <= 1e-9 * k.max(1) as f64);
    if k == 0 || !exact || counts.iter().sum::<usize>() != k {
        return Err(Error::NotAType { k });
    }
    Ok(counts)
}

/// Exact `log |T^k(P)|` for a k-type `P`.
pub fn log_type_class_size(p: &Distribution, k: usize) -> Result<f64> {
    Ok(log_multinomial(&type_counts(p, k)?))
}

fn binomial(n: u128, r: u128) -> u128 {
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of k-types on an alphabet of the given size.
pub fn type_count(k: usize, alphabet_size: usize) -> u128 {
    binomial((k + alphabet_size - 1) as u128, (alphabet_size - 1) as u128)
}

/// One source type class with its exact size and rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceType {
    pub counts: Vec<usize>,
    pub dist: Distribution,
    /// `log |T^k(P_i)|` in nats.
    pub log_count: f64,
    /// `R_i = t·H(P_i)`.
    pub rate: f64,
}

/// All k-types of a source alphabet, ordered with the first coordinate
/// descending, e.g. `(2,0), (1,1), (0,2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceTypeTable {
    pub k: usize,
    pub t: f64,
    pub types: Vec<SourceType>,
}

impl SourceTypeTable {
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn alphabet_size(&self) -> usize {
        self.types.first().map_or(0, |t| t.counts.len())
    }

    /// Index of the type with the given counts.
    pub fn index_of(&self, counts: &[usize]) -> Option<usize> {
        self.types.iter().position(|t| t.counts == counts)
    }
}

fn compositions(k: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        prefix.push(k);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=k).rev() {
        prefix.push(first);
        compositions(k - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// Enumerates every k-type on an alphabet of `alphabet_size` letters.
pub fn enumerate_types(k: usize, alphabet_size: usize, t: f64) -> Result<SourceTypeTable> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: 0.0,
            constraint: "k >= 1",
        });
    }
    if alphabet_size == 0 {
        return Err(Error::InvalidDistribution("empty alphabet".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            constraint: "t > 0",
        });
    }
    let count = type_count(k, alphabet_size);
    if count > MAX_TYPES {
        return Err(Error::EnumerationCap {
            count,
            cap: MAX_TYPES,
        });
    }
    let mut all = Vec::with_capacity(count as usize);
    compositions(k, alphabet_size, &mut Vec::new(), &mut all);
    let types = all
        .into_iter()
        .map(|counts| {
            let dist = Distribution::from_counts(&counts).expect("k >= 1");
            SourceType {
                log_count: log_multinomial(&counts),
                rate: t * entropy(&dist),
                dist,
                counts,
            }
        })
        .collect();
    Ok(SourceTypeTable { k, t, types })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn d(p: &[f64]) -> Distribution {
        Distribution::new(p.to_vec()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&d(&[0.5, 0.5])), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(entropy(&d(&[1.0, 0.0])), 0.0);
        assert_abs_diff_eq!(entropy(&d(&[0.9, 0.1])), 0.325082973391448, epsilon = 1e-12);
    }

    #[test]
    fn kl_examples() {
        let p = d(&[0.9, 0.1]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert_abs_diff_eq!(
            kl_divergence(&d(&[0.5, 0.5]), &p).unwrap(),
            0.510825623765991,
            epsilon = 1e-12
        );
        assert_eq!(
            kl_divergence(&d(&[0.5, 0.5]), &d(&[1.0, 0.0])).unwrap(),
            f64::INFINITY
        );
        assert!(matches!(
            kl_divergence(&d(&[0.5, 0.5]), &Distribution::uniform(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mutual_information_examples() {
        let prod = JointDistribution::product(&d(&[0.3, 0.7]), &d(&[0.2, 0.5, 0.3]));
        assert!(mutual_information(&prod) < 1e-12);
        let diag = JointDistribution::from_matrix(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_abs_diff_eq!(mutual_information(&diag), 2f64.ln(), epsilon = 1e-15);
        let j = JointDistribution::from_matrix(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        assert_abs_diff_eq!(mutual_information(&j), 0.192744757021752, epsilon = 1e-12);
    }

    #[test]
    fn rejects_unnormalized_input() {
        assert!(matches!(
            Distribution::new(vec![0.5, 0.499]),
            Err(Error::NotStochastic { .. })
        ));
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        assert!(matches!(
            Channel::new(vec![vec![0.9, 0.1], vec![0.5, 0.499]]),
            Err(Error::NotStochastic { row: 1, .. })
        ));
    }

    #[test]
    fn type_enumeration_examples() {
        let t2 = enumerate_types(2, 2, 1.0).unwrap();
        let counts: Vec<_> = t2.types.iter().map(|t| t.counts.clone()).collect();
        assert_eq!(counts, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);

        let t4 = enumerate_types(4, 2, 1.0).unwrap();
        assert_eq!(t4.len(), 5);
        let half = &t4.types[t4.index_of(&[2, 2]).unwrap()];
        assert_abs_diff_eq!(half.log_count, 6f64.ln(), epsilon = 1e-12);

        assert_eq!(enumerate_types(4, 3, 1.0).unwrap().len(), 15);
        assert!(matches!(
            enumerate_types(200, 6, 1.0),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn type_class_sizes() {
        assert_eq!(log_type_class_size(&d(&[1.0, 0.0]), 5).unwrap(), 0.0);
        assert_abs_diff_eq!(
            log_type_class_size(&d(&[0.5, 0.5]), 4).unwrap(),
            6f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            log_type_class_size(&d(&[0.75, 0.25]), 4).unwrap(),
            4f64.ln(),
            epsilon = 1e-12
        );
        assert!(matches!(
            log_type_class_size(&d(&[0.3, 0.7]), 4),
            Err(Error::NotAType { k: 4 })
        ));
    }

    #[test]
    fn method_of_types_sandwich() {
        for v in 1..=4usize {
            for k in 1..=20usize {
                let table = enumerate_types(k, v, 1.0).unwrap();
                let slack = v as f64 * ((k + 1) as f64).ln();
                for ty in &table.types {
                    let gap = k as f64 * entropy(&ty.dist) - ty.log_count;
                    assert!(gap >= -1e-9 && gap <= slack + 1e-9, "k={k} v={v} gap={gap}");
                }
            }
        }
    }

    #[test]
    fn type_classes_carry_total_probability() {
        let law = d(&[0.6, 0.3, 0.1]);
        for k in [1, 5, 12] {
            let table = enumerate_types(k, 3, 1.0).unwrap();
            let total: f64 = table
                .types
                .iter()
                .map(|ty| {
                    let ll: f64 = ty
                        .counts
                        .iter()
                        .zip(law.probs())
                        .map(|(&c, &p)| c as f64 * p.ln())
                        .sum();
                    (ty.log_count + ll).exp()
                })
                .sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn marginals_of_joint() {
        let j = JointDistribution::from_matrix(&[vec![0.1, 0.2, 0.1], vec![0.3, 0.0, 0.3]]).unwrap();
        assert_eq!(j.row_marginal().probs().len(), 2);
        assert_abs_diff_eq!(j.row_marginal().get(0), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(j.col_marginal().get(2), 0.4, epsilon = 1e-15);
    }
}
