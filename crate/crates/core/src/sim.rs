//! Monte Carlo and exact-enumeration checks of partitioned
//! constant-composition codes with the tilted decoding metric
//! `log W^n(y|x_v) − 2k·D(P̂_v‖P_V)` and best-of-M code selection.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::joint::PerTypeTable;
use crate::partition::{check_feasibility, PartitionPlan};
use crate::prob::{kl_divergence, Channel, Distribution};
use crate::source::SourceModel;

/// Largest number of source sequences or channel output sequences that
/// will be enumerated.
pub const SIM_CAP: u128 = 1_000_000;

const CHUNK: usize = 1024;
const Z95: f64 = 1.959_963_984_540_054;

/// Deterministic child seed for `(tag, index)` under `master`.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(master);
    r.set_stream(tag);
    r.set_word_pos(2 * index as u128);
    r.next_u64()
}

fn power(base: usize, exp: usize) -> Result<usize> {
    let count = (base as u128).checked_pow(exp as u32).unwrap_or(u128::MAX);
    if count > SIM_CAP {
        return Err(Error::EnumerationCap { count, cap: SIM_CAP });
    }
    Ok(count as usize)
}

/// Symbols of message `m` (most significant first, so index order is
/// lexicographic order of source sequences).
pub fn message_symbols(m: usize, alphabet: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    let mut rest = m;
    for i in (0..k).rev() {
        out[i] = rest % alphabet;
        rest /= alphabet;
    }
    out
}

/// A codeword for every source sequence of length `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Codebook {
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub plan: PartitionPlan,
    /// Quantized n-type of each class.
    pub compositions: Vec<Vec<usize>>,
    /// Type index (into the plan's types) of every message.
    pub message_types: Vec<usize>,
    pub entries: Vec<Vec<u8>>,
}

impl Codebook {
    pub fn messages(&self) -> usize {
        self.entries.len()
    }

    pub fn class_of(&self, m: usize) -> usize {
        self.plan.assignment[self.message_types[m]]
    }
}

/// Draws, for every source sequence, a uniformly random arrangement of its
/// class's quantized composition. Message `m` uses stream `m` of the
/// generator seeded by `seed`.
pub fn sample_codebook(plan: &PartitionPlan, n: usize, seed: u64) -> Result<Codebook> {
    let alphabet = plan.type_counts.first().map_or(0, |c| c.len());
    if alphabet == 0 {
        return Err(Error::EmptyClass);
    }
    let messages = power(alphabet, plan.k)?;
    let report = check_feasibility(plan, n)?;
    if let Some(bad) = report.classes.iter().find(|c| c.margin < -1e-12) {
        return Err(Error::InfeasiblePlan {
            class: bad.class,
            needed: bad.log_messages,
            available: bad.log_codewords,
        });
    }
    let compositions: Vec<Vec<usize>> = report.classes.iter().map(|c| c.composition.clone()).collect();
    let index: HashMap<&[usize], usize> = plan
        .type_counts
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_slice(), i))
        .collect();
    let message_types: Vec<usize> = (0..messages)
        .map(|m| {
            let mut counts = vec![0; alphabet];
            for s in message_symbols(m, alphabet, plan.k) {
                counts[s] += 1;
            }
            index[counts.as_slice()]
        })
        .collect();
    let entries = (0..messages)
        .into_par_iter()
        .map(|m| {
            let comp = &compositions[plan.assignment[message_types[m]]];
            let mut word: Vec<u8> = comp
                .iter()
                .enumerate()
                .flat_map(|(x, &c)| std::iter::repeat(x as u8).take(c))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(m as u64);
            word.shuffle(&mut rng);
            word
        })
        .collect();
    Ok(Codebook {
        k: plan.k,
        n,
        seed,
        plan: plan.clone(),
        compositions,
        message_types,
        entries,
    })
}

/// Precomputed tables for the decoding metric.
struct Decoder<'a> {
    book: &'a Codebook,
    ny: usize,
    log_w: Vec<f64>,
    /// `−2k·D(P̂_v‖P_V)` per message.
    penalty: Vec<f64>,
    /// Codewords as bit masks when both alphabets are binary and n ≤ 64.
    packed: Option<Vec<u64>>,
}

impl<'a> Decoder<'a> {
    fn new(book: &'a Codebook, w: &Channel, source: &SourceModel) -> Result<Self> {
        let law = source.law();
        let alphabet = law.len();
        if book.plan.type_counts[0].len() != alphabet {
            return Err(Error::DimensionMismatch {
                expected: alphabet,
                found: book.plan.type_counts[0].len(),
            });
        }
        let nx = w.input_size();
        if book.compositions.iter().any(|c| c.len() != nx) {
            return Err(Error::DimensionMismatch {
                expected: nx,
                found: book.compositions[0].len(),
            });
        }
        let ny = w.output_size();
        let log_w = (0..nx)
            .flat_map(|x| (0..ny).map(move |y| (x, y)))
            .map(|(x, y)| w.get(x, y).ln())
            .collect();
        let type_penalty: Vec<f64> = book
            .plan
            .type_counts
            .iter()
            .map(|c| {
                let p = Distribution::from_counts(c)?;
                Ok(-2.0 * book.k as f64 * kl_divergence(&p, law)?)
            })
            .collect::<Result<_>>()?;
        let penalty = book.message_types.iter().map(|&i| type_penalty[i]).collect();
        let packed = (nx == 2 && ny == 2 && book.n <= 64).then(|| book.entries.iter().map(|e| pack(e)).collect());
        Ok(Self {
            book,
            ny,
            log_w,
            penalty,
            packed,
        })
    }

    fn joint_score(&self, counts: &[usize]) -> f64 {
        let mut s = 0.0;
        for (c, l) in counts.iter().zip(&self.log_w) {
            if *c > 0 {
                s += *c as f64 * l;
            }
        }
        s
    }

    fn score(&self, m: usize, y: &[u8], ypack: u64) -> f64 {
        let n = self.book.n;
        let base = match &self.packed {
            Some(p) => {
                let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
                let x = p[m];
                let n11 = (x & ypack).count_ones() as usize;
                let n10 = (x & !ypack & mask).count_ones() as usize;
                let n01 = (!x & ypack & mask).count_ones() as usize;
                self.joint_score(&[n - n11 - n10 - n01, n01, n10, n11])
            }
            None => {
                let mut counts = vec![0usize; self.log_w.len()];
                for (x, &yy) in self.book.entries[m].iter().zip(y) {
                    counts[*x as usize * self.ny + yy as usize] += 1;
                }
                self.joint_score(&counts)
            }
        };
        base + self.penalty[m]
    }

    /// Best message; ties go to the lowest index.
    fn decode(&self, y: &[u8]) -> usize {
        let yp = pack(y);
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for m in 0..self.book.messages() {
            let s = self.score(m, y, yp);
            if s > best_score {
                best = m;
                best_score = s;
            }
        }
        best
    }

    /// True when the decoder does not return `v`.
    fn is_error(&self, v: usize, y: &[u8]) -> bool {
        let yp = pack(y);
        let own = self.score(v, y, yp);
        (0..self.book.messages()).any(|m| m != v && {
            let s = self.score(m, y, yp);
            s > own || (s == own && m < v)
        })
    }
}

fn pack(word: &[u8]) -> u64 {
    word.iter()
        .take(64)
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | (u64::from(b & 1) << i))
}

/// Decodes `y` with the tilted metric; returns the message index.
pub fn decode(y: &[u8], codebook: &Codebook, w: &Channel, source: &SourceModel) -> Result<usize> {
    if y.len() != codebook.n {
        return Err(Error::DimensionMismatch {
            expected: codebook.n,
            found: y.len(),
        });
    }
    Ok(Decoder::new(codebook, w, source)?.decode(y))
}

/// How the error probability is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    MonteCarlo,
    /// Enumerates every output sequence; requires `|Y|^n ≤ 10^6`.
    Exact,
}

/// Error count (or probability, for exact runs) conditioned on a source type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeError {
    pub counts: Vec<usize>,
    pub trials: u64,
    pub errors: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub n: usize,
    pub k: usize,
    pub method: Method,
    pub trials: u64,
    pub errors: u64,
    pub p_e: f64,
    /// Binomial standard deviation of the estimate (0 for exact runs).
    pub sigma: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `−log(p_e)/n`.
    pub empirical_exponent: f64,
    pub per_type: Vec<TypeError>,
}

/// Wilson score interval at 95%.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    let nt = trials as f64;
    let p = errors as f64 / nt;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nt;
    let center = (p + z2 / (2.0 * nt)) / denom;
    let half = Z95 * (p * (1.0 - p) / nt + z2 / (4.0 * nt * nt)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

fn exponent_of(p: f64, n: usize) -> f64 {
    if p <= 0.0 {
        f64::INFINITY
    } else {
        -p.ln() / n as f64
    }
}

fn sample_index(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Error probability of `codebook` over `W` for the source `source`.
/// Monte Carlo trial `i` draws `(V, Y)` from stream `i` of the generator
/// seeded by `seed`.
pub fn estimate_error(
    codebook: &Codebook,
    w: &Channel,
    source: &SourceModel,
    trials: u64,
    seed: u64,
    method: Method,
) -> Result<SimResult> {
    let dec = Decoder::new(codebook, w, source)?;
    let law = source.law().probs().to_vec();
    let alphabet = law.len();
    let n_types = codebook.plan.type_counts.len();
    let (trials, errors, per_type) = match method {
        Method::MonteCarlo => {
            if trials == 0 {
                return Err(Error::InvalidParameter {
                    name: "trials",
                    value: 0.0,
                    constraint: "trials >= 1",
                });
            }
            let chunks = (trials as usize).div_ceil(CHUNK);
            let parts: Vec<(Vec<u64>, Vec<u64>)> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut tt = vec![0u64; n_types];
                    let mut te = vec![0u64; n_types];
                    let mut y = vec![0u8; codebook.n];
                    let end = ((c + 1) * CHUNK).min(trials as usize);
                    for i in c * CHUNK..end {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(i as u64);
                        let mut v = 0;
                        for _ in 0..codebook.k {
                            v = v * alphabet + sample_index(&mut rng, &law);
                        }
                        for (yy, &x) in y.iter_mut().zip(&codebook.entries[v]) {
                            *yy = sample_index(&mut rng, w.row(x as usize)) as u8;
                        }
                        let ty = codebook.message_types[v];
                        tt[ty] += 1;
                        if dec.is_error(v, &y) {
                            te[ty] += 1;
                        }
                    }
                    (tt, te)
                })
                .collect();
            let mut tt = vec![0u64; n_types];
            let mut te = vec![0u64; n_types];
            for (a, b) in parts {
                for i in 0..n_types {
                    tt[i] += a[i];
                    te[i] += b[i];
                }
            }
            let errors = te.iter().sum();
            let per_type = (0..n_types)
                .map(|i| TypeError {
                    counts: codebook.plan.type_counts[i].clone(),
                    trials: tt[i],
                    errors: te[i],
                    rate: if tt[i] > 0 { te[i] as f64 / tt[i] as f64 } else { 0.0 },
                })
                .collect();
            (trials, errors, per_type)
        }
        Method::Exact => {
            let outputs = power(w.output_size(), codebook.n)?;
            let ny = w.output_size();
            let msg_prob: Vec<f64> = (0..codebook.messages())
                .map(|m| {
                    message_symbols(m, alphabet, codebook.k)
                        .iter()
                        .map(|&s| law[s])
                        .product()
                })
                .collect();
            // Correct-decoding mass per message.
            let correct: Vec<f64> = (0..outputs)
                .into_par_iter()
                .fold(
                    || vec![0.0; codebook.messages()],
                    |mut acc, yi| {
                        let y: Vec<u8> = message_symbols(yi, ny, codebook.n).iter().map(|&s| s as u8).collect();
                        let m = dec.decode(&y);
                        let like: f64 = codebook.entries[m]
                            .iter()
                            .zip(&y)
                            .map(|(&x, &yy)| w.get(x as usize, yy as usize))
                            .product();
                        acc[m] += like;
                        acc
                    },
                )
                .reduce(
                    || vec![0.0; codebook.messages()],
                    |mut a, b| {
                        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        a
                    },
                );
            let mut type_mass = vec![0.0; n_types];
            let mut type_err = vec![0.0; n_types];
            let mut p_correct = 0.0;
            for m in 0..codebook.messages() {
                let ty = codebook.message_types[m];
                type_mass[ty] += msg_prob[m];
                type_err[ty] += msg_prob[m] * (1.0 - correct[m]);
                p_correct += msg_prob[m] * correct[m];
            }
            let p_e = (1.0 - p_correct).clamp(0.0, 1.0);
            let per_type = (0..n_types)
                .map(|i| TypeError {
                    counts: codebook.plan.type_counts[i].clone(),
                    trials: 0,
                    errors: 0,
                    rate: if type_mass[i] > 0.0 {
                        (type_err[i] / type_mass[i]).clamp(0.0, 1.0)
                    } else {
                        0.0
                    },
                })
                .collect();
            return Ok(SimResult {
                n: codebook.n,
                k: codebook.k,
                method,
                trials: 0,
                errors: 0,
                p_e,
                sigma: 0.0,
                ci_low: p_e,
                ci_high: p_e,
                empirical_exponent: exponent_of(p_e, codebook.n),
                per_type,
            });
        }
    };
    let p_e = errors as f64 / trials as f64;
    let (ci_low, ci_high) = wilson_interval(errors, trials);
    Ok(SimResult {
        n: codebook.n,
        k: codebook.k,
        method,
        trials,
        errors,
        p_e,
        sigma: (p_e * (1.0 - p_e) / trials as f64).sqrt(),
        ci_low,
        ci_high,
        empirical_exponent: exponent_of(p_e, codebook.n),
        per_type,
    })
}

/// Outcome of best-of-M selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestOf {
    pub codebook: Codebook,
    /// Estimate for the selected codebook from trials independent of the
    /// selection pass.
    pub result: SimResult,
    /// Selection-pass estimate of every candidate.
    pub candidates: Vec<f64>,
    pub chosen: usize,
}

/// Samples `m` codebooks, keeps the one with the smallest estimated error
/// (lowest index on ties) and re-estimates it with fresh randomness.
/// Candidate `j` uses codebook seed `derive_seed(seed, 0, j)` and trial seed
/// `derive_seed(seed, 1, j)`; the final pass uses `derive_seed(seed, 2, 0)`.
pub fn expurgate_best_of(
    plan: &PartitionPlan,
    w: &Channel,
    source: &SourceModel,
    n: usize,
    m: usize,
    trials: u64,
    seed: u64,
    method: Method,
) -> Result<BestOf> {
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "M",
            value: 0.0,
            constraint: "M >= 1",
        });
    }
    let mut best: Option<(usize, f64, Codebook)> = None;
    let mut candidates = Vec::with_capacity(m);
    for j in 0..m {
        let book = sample_codebook(plan, n, derive_seed(seed, 0, j as u64))?;
        let r = estimate_error(&book, w, source, trials, derive_seed(seed, 1, j as u64), method)?;
        candidates.push(r.p_e);
        if best.as_ref().map_or(true, |b| r.p_e < b.1) {
            best = Some((j, r.p_e, book));
        }
    }
    let (chosen, _, codebook) = best.expect("m >= 1");
    let result = estimate_error(&codebook, w, source, trials, derive_seed(seed, 2, 0), method)?;
    Ok(BestOf {
        codebook,
        result,
        candidates,
        chosen,
    })
}

/// `min(1, (k+1)^{|V|}·N_k·Σ_i exp(−n·E_i))` with `E_i` the per-type
/// primal exponents of `table`.
pub fn finite_n_bound(table: &PerTypeTable, k: usize, alphabet: usize, n: usize) -> f64 {
    let terms: Vec<f64> = table.rows.iter().map(|r| -(n as f64) * r.primal).collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return 0.0;
    }
    let lse = m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
    let log_bound = alphabet as f64 * ((k + 1) as f64).ln() + (table.rows.len() as f64).ln() + lse;
    log_bound.exp().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{quantize_composition, ClassParams};
    use crate::prob::enumerate_types;

    /// Each type class gets its own composition equal to the type; always
    /// feasible at n = k.
    fn identity_plan(k: usize, alphabet: usize) -> PartitionPlan {
        let types = enumerate_types(k, alphabet, 1.0).unwrap();
        PartitionPlan {
            classes: types
                .types
                .iter()
                .map(|t| ClassParams::new(t.dist.clone(), 1.0, 1.0).unwrap())
                .collect(),
            assignment: (0..types.len()).collect(),
            type_counts: types.types.iter().map(|t| t.counts.clone()).collect(),
            rates: types.types.iter().map(|t| t.rate).collect(),
            k,
            n: Some(k),
        }
    }

    fn source(p: &[f64]) -> SourceModel {
        SourceModel::new(Distribution::new(p.to_vec()).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_composition(&Distribution::uniform(2), 4), vec![2, 2]);
        assert_eq!(quantize_composition(&Distribution::new(vec![0.6, 0.4]).unwrap(), 5), vec![3, 2]);
        assert_eq!(quantize_composition(&Distribution::uniform(3), 4), vec![2, 1, 1]);
    }

    #[test]
    fn codewords_have_class_composition_and_are_reproducible() {
        let plan = identity_plan(4, 2);
        let a = sample_codebook(&plan, 4, 11).unwrap();
        let b = sample_codebook(&plan, 4, 11).unwrap();
        let c = sample_codebook(&plan, 4, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.entries, c.entries);
        for m in 0..a.messages() {
            let comp = &a.compositions[a.class_of(m)];
            let ones = a.entries[m].iter().filter(|&&x| x == 1).count();
            assert_eq!(ones, comp[1]);
        }
    }

    #[test]
    fn type_class_members_are_uniform() {
        let plan = identity_plan(4, 2);
        // Message 0b0011 has type (2,2); its codeword is uniform on the six
        // arrangements of two ones.
        let draws = 100_000u64;
        let mut freq: HashMap<Vec<u8>, u64> = HashMap::new();
        for s in 0..draws {
            let book = sample_codebook(&plan, 4, s).unwrap();
            *freq.entry(book.entries[3].clone()).or_default() += 1;
        }
        assert_eq!(freq.len(), 6);
        let p = 1.0 / 6.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in freq.values() {
            assert!((*c as f64 - draws as f64 * p).abs() <= 3.0 * sigma + 1.0);
        }
    }

    #[test]
    fn infeasible_plan_is_rejected() {
        let types = enumerate_types(4, 2, 1.0).unwrap();
        let plan = PartitionPlan {
            classes: vec![ClassParams::new(Distribution::uniform(2), 1.0, 1.0).unwrap()],
            assignment: vec![0; 5],
            type_counts: types.types.iter().map(|t| t.counts.clone()).collect(),
            rates: types.types.iter().map(|t| t.rate).collect(),
            k: 4,
            n: Some(4),
        };
        assert!(matches!(sample_codebook(&plan, 4, 1), Err(Error::InfeasiblePlan { .. })));
    }

    #[test]
    fn noiseless_channel_never_errs() {
        // k = n = 1 forces the two codewords apart.
        let plan = identity_plan(1, 2);
        let book = sample_codebook(&plan, 1, 5).unwrap();
        assert_ne!(book.entries[0], book.entries[1]);
        let w = Channel::bsc(0.0).unwrap();
        let s = source(&[0.7, 0.3]);
        let mc = estimate_error(&book, &w, &s, 2000, 1, Method::MonteCarlo).unwrap();
        assert_eq!(mc.errors, 0);
        let ex = estimate_error(&book, &w, &s, 0, 1, Method::Exact).unwrap();
        assert_eq!(ex.p_e, 0.0);
    }

    #[test]
    fn identical_codewords_tie_to_smallest_message() {
        // k = 1: two messages, both with codeword (0); the useless channel
        // makes every output uninformative, and the uniform source removes the
        // penalty difference.
        let types = enumerate_types(1, 2, 1.0).unwrap();
        let plan = PartitionPlan {
            classes: vec![ClassParams::new(Distribution::point_mass(2, 0), 1.0, 1.0).unwrap()],
            assignment: vec![0, 0],
            type_counts: types.types.iter().map(|t| t.counts.clone()).collect(),
            rates: types.types.iter().map(|t| t.rate).collect(),
            k: 1,
            n: Some(1),
        };
        let book = Codebook {
            k: 1,
            n: 1,
            seed: 0,
            compositions: vec![vec![1, 0]],
            message_types: vec![1, 0],
            entries: vec![vec![0], vec![0]],
            plan,
        };
        let w = Channel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let s = source(&[0.5, 0.5]);
        assert_eq!(decode(&[1], &book, &w, &s).unwrap(), 0);
        let ex = estimate_error(&book, &w, &s, 0, 0, Method::Exact).unwrap();
        assert!((ex.p_e - 0.5).abs() < 1e-12);
        let mc = estimate_error(&book, &w, &s, 20_000, 3, Method::MonteCarlo).unwrap();
        assert!((mc.p_e - 0.5).abs() <= 3.0 * mc.sigma);
    }

    #[test]
    fn uniform_source_metric_is_maximum_likelihood() {
        let plan = identity_plan(2, 2);
        let book = sample_codebook(&plan, 2, 9).unwrap();
        let w = Channel::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        let s = source(&[0.5, 0.5]);
        let dec = Decoder::new(&book, &w, &s).unwrap();
        for yi in 0..4 {
            let y: Vec<u8> = message_symbols(yi, 2, 2).iter().map(|&v| v as u8).collect();
            // Penalties −2k·D(P̂‖uniform) differ by type, so compare with the
            // explicitly tilted likelihood.
            let best = (0..book.messages())
                .map(|m| {
                    let like: f64 = book.entries[m].iter().zip(&y).map(|(&x, &yy)| w.get(x as usize, yy as usize).ln()).sum();
                    (like + dec.penalty[m], m)
                })
                .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
            assert_eq!(decode(&y, &book, &w, &s).unwrap(), best.1);
        }
    }

    #[test]
    fn exact_and_monte_carlo_agree() {
        let plan = identity_plan(4, 2);
        let book = sample_codebook(&plan, 4, 21).unwrap();
        let w = Channel::bsc(0.1).unwrap();
        let s = source(&[0.9, 0.1]);
        let ex = estimate_error(&book, &w, &s, 0, 0, Method::Exact).unwrap();
        let mc = estimate_error(&book, &w, &s, 50_000, 4, Method::MonteCarlo).unwrap();
        assert!((ex.p_e - mc.p_e).abs() <= 3.0 * mc.sigma.max(1e-12), "{} vs {}", ex.p_e, mc.p_e);
        let again = estimate_error(&book, &w, &s, 50_000, 4, Method::MonteCarlo).unwrap();
        assert_eq!(mc, again);
    }

    #[test]
    fn best_of_one_is_sample_and_estimate() {
        let plan = identity_plan(3, 2);
        let w = Channel::bsc(0.1).unwrap();
        let s = source(&[0.8, 0.2]);
        let b = expurgate_best_of(&plan, &w, &s, 3, 1, 0, 5, Method::Exact).unwrap();
        let book = sample_codebook(&plan, 3, derive_seed(5, 0, 0)).unwrap();
        assert_eq!(b.codebook, book);
        let r = estimate_error(&book, &w, &s, 0, 0, Method::Exact).unwrap();
        assert_eq!(b.result.p_e, r.p_e);
        let b8 = expurgate_best_of(&plan, &w, &s, 3, 8, 0, 5, Method::Exact).unwrap();
        assert!(b8.result.p_e <= b8.candidates.iter().cloned().fold(f64::INFINITY, f64::min) + 1e-15);
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 1000);
        assert!(lo < 0.03 && 0.03 < hi);
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
    }
}
