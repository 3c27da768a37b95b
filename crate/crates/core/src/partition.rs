//! Partitions of the source type classes into codeword classes: the argmax
//! assignment rule, the closed-form two-class threshold, the two-class
//! construction from the supporting points of the hull and feasibility
//! checks against the channel type-class sizes.

use serde::Serialize;

use crate::channel::{ex_prime_dual_solve, BhattacharyyaMatrix};
use crate::error::{Error, Result};
use crate::hull::hull_vertices;
use crate::joint::{dual_from_curve, per_type_exponent_table, source_sup_lambda, Grids, InputSet, MaxCurve, PerTypeTable};
use crate::prob::{enumerate_types, log_multinomial, Distribution, SourceTypeTable};
use crate::source::{gallager_source_fn, SourceModel};

/// Composition and Lagrange parameters `(Q_c, ρ_c, λ_c)` of one class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassParams {
    pub q: Distribution,
    pub rho: f64,
    pub lambda: f64,
}

impl ClassParams {
    pub fn new(q: Distribution, rho: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [("rho", rho), ("lambda", lambda)] {
            if !(v >= 1.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    constraint: ">= 1 and finite",
                });
            }
        }
        Ok(Self { q, rho, lambda })
    }

    /// `E′_x(Q_c,ρ_c) + (λ_c−ρ_c)R − t·E_s(λ_c)` given the cached `E′_x`.
    fn score(&self, ex: f64, es: f64, r: f64, t: f64) -> f64 {
        ex + (self.lambda - self.rho) * r - t * es
    }
}

/// Assignment of every k-type of the source to a class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionPlan {
    pub classes: Vec<ClassParams>,
    /// Class index per type, aligned with `type_counts`.
    pub assignment: Vec<usize>,
    pub type_counts: Vec<Vec<usize>>,
    pub rates: Vec<f64>,
    pub k: usize,
    /// Channel blocklength `k/t` when it is an integer.
    pub n: Option<usize>,
}

impl PartitionPlan {
    /// Type indices of class `c`.
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == c).collect()
    }
}

fn channel_blocklength(k: usize, t: f64) -> Option<usize> {
    let n = k as f64 / t;
    let r = n.round();
    ((n - r).abs() <= 1e-9 * n.max(1.0) && r >= 1.0).then_some(r as usize)
}

fn class_terms(classes: &[ClassParams], source: &SourceModel, d: &BhattacharyyaMatrix) -> Result<Vec<(f64, f64)>> {
    classes
        .iter()
        .map(|c| {
            let ex = ex_prime_dual_solve(&c.q, c.rho, d)?.value;
            let es = gallager_source_fn(c.lambda, source.law())?;
            Ok((ex, es))
        })
        .collect()
}

/// Sends each type to the class with the largest score
/// `E′_x(Q_c,ρ_c) + (λ_c−ρ_c)R_i − t·E_s(λ_c)`; ties go to the lower index.
pub fn assign_classes(
    types: &SourceTypeTable,
    classes: &[ClassParams],
    source: &SourceModel,
    d: &BhattacharyyaMatrix,
) -> Result<PartitionPlan> {
    if classes.is_empty() {
        return Err(Error::EmptyClass);
    }
    if types.alphabet_size() != source.alphabet_size() {
        return Err(Error::DimensionMismatch {
            expected: source.alphabet_size(),
            found: types.alphabet_size(),
        });
    }
    let terms = class_terms(classes, source, d)?;
    let t = source.t();
    let assignment = types
        .types
        .iter()
        .map(|ty| {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (c, (class, &(ex, es))) in classes.iter().zip(&terms).enumerate() {
                let s = class.score(ex, es, ty.rate, t);
                if s > best_score {
                    best = c;
                    best_score = s;
                }
            }
            best
        })
        .collect();
    Ok(PartitionPlan {
        classes: classes.to_vec(),
        assignment,
        type_counts: types.types.iter().map(|ty| ty.counts.clone()).collect(),
        rates: types.types.iter().map(|ty| ty.rate).collect(),
        k: types.k,
        n: channel_blocklength(types.k, source.t()),
    })
}

/// Threshold rate separating two classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub r0: f64,
    /// True when class 1 takes the types with `R_i ≤ R₀`; otherwise it
    /// takes those with `R_i ≥ R₀`.
    pub first_below: bool,
}

impl Threshold {
    /// Class index (0 or 1) that the threshold rule gives rate `r`.
    pub fn class_of(&self, r: f64) -> usize {
        let first = if self.first_below { r <= self.r0 } else { r >= self.r0 };
        usize::from(!first)
    }
}

/// `R₀ = [E′_x(Q₁,ρ₁) − E′_x(Q₂,ρ₂) + t(E_s(λ₂) − E_s(λ₁))] / [(λ₂−ρ₂) − (λ₁−ρ₁)]`.
pub fn two_class_threshold(
    c1: &ClassParams,
    c2: &ClassParams,
    source: &SourceModel,
    d: &BhattacharyyaMatrix,
) -> Result<Threshold> {
    let den = (c2.lambda - c2.rho) - (c1.lambda - c1.rho);
    if den == 0.0 {
        return Err(Error::EqualSlopes);
    }
    let terms = class_terms(&[c1.clone(), c2.clone()], source, d)?;
    let (ex1, es1) = terms[0];
    let (ex2, es2) = terms[1];
    let num = ex1 - ex2 + source.t() * (es2 - es1);
    Ok(Threshold {
        r0: num / den,
        first_below: den > 0.0,
    })
}

/// A two-class plan with the hull quantities it was built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoClassPlan {
    pub plan: PartitionPlan,
    pub table: PerTypeTable,
    /// Overall per-type exponent of the plan.
    pub exponent: f64,
    /// Value of the dual exponent `sup_λ hull(λ) − t·E_s(λ)`.
    pub dual_value: f64,
    pub lambda0: f64,
    /// Supporting points `λ₁ ≤ λ₂` of the hull at `λ₀`.
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Builds the plan over the whole simplex (Q grid of `grids`).
pub fn build_two_class_plan(source: &SourceModel, d: &BhattacharyyaMatrix, k: usize, grids: &Grids) -> Result<TwoClassPlan> {
    let set = InputSet::Simplex(grids.q_grid(d.size())?);
    build_two_class_plan_over(source, d, &set, k, grids)
}

/// Two-class construction: take the maximizer `λ₀` of
/// `hull(λ) − t·E_s(λ)`, the hull vertices `λ₁ ≤ λ₀ ≤ λ₂` supporting it and
/// their maximizing compositions; class `j` gets `(Q_j, ρ = λ_j, λ = λ₀)`,
/// whose scores meet on the supporting chord. Types are then assigned by
/// [`assign_classes`].
pub fn build_two_class_plan_over(
    source: &SourceModel,
    d: &BhattacharyyaMatrix,
    set: &InputSet,
    k: usize,
    grids: &Grids,
) -> Result<TwoClassPlan> {
    let mc = MaxCurve::build(d, set, &grids.rho_grid())?;
    two_class_plan_from_curve(source, &mc, k, grids)
}

/// As [`build_two_class_plan_over`] for a prebuilt channel curve.
pub fn two_class_plan_from_curve(source: &SourceModel, mc: &MaxCurve, k: usize, grids: &Grids) -> Result<TwoClassPlan> {
    let d = mc.distances();
    let dual = dual_from_curve(source, mc.clone(), grids)?;
    let grid = dual.curve.curve.grid();
    let verts = hull_vertices(&dual.curve.curve)?;
    let lambda0 = dual.exponent.arg.min(grids.rho_max);
    let near = |i: usize| (grid[i] - lambda0).abs() <= 1e-9 * lambda0;
    let (a, b) = match verts.iter().position(|&v| near(v)) {
        Some(p) => (verts[p], verts[p]),
        None => {
            let p = verts.iter().position(|&v| grid[v] > lambda0).unwrap_or(verts.len() - 1).max(1);
            (verts[p - 1], verts[p])
        }
    };
    let classes = if a == b {
        vec![ClassParams::new(dual.curve.argmax[a].clone(), lambda0, lambda0)?]
    } else {
        vec![
            ClassParams::new(dual.curve.argmax[a].clone(), grid[a], lambda0)?,
            ClassParams::new(dual.curve.argmax[b].clone(), grid[b], lambda0)?,
        ]
    };
    let types = enumerate_types(k, source.alphabet_size(), source.t())?;
    let plan = assign_classes(&types, &classes, source, d)?;
    let table = per_type_exponent_table(source, d, &plan, grids)?;
    Ok(TwoClassPlan {
        exponent: table.overall_primal,
        table,
        plan,
        dual_value: dual.exponent.value,
        lambda0,
        lambda1: grid[a],
        lambda2: grid[b],
    })
}

/// One class per source type, each with its own best composition and
/// per-type optimal `(ρ, λ)`.
pub fn build_per_type_plan(
    source: &SourceModel,
    d: &BhattacharyyaMatrix,
    set: &InputSet,
    k: usize,
    grids: &Grids,
) -> Result<(PartitionPlan, PerTypeTable)> {
    let mc = MaxCurve::build(d, set, &grids.rho_grid())?;
    per_type_plan_from_curve(source, &mc, k, grids)
}

/// As [`build_per_type_plan`] for a prebuilt channel curve.
pub fn per_type_plan_from_curve(
    source: &SourceModel,
    mc: &MaxCurve,
    k: usize,
    grids: &Grids,
) -> Result<(PartitionPlan, PerTypeTable)> {
    let d = mc.distances();
    let types = enumerate_types(k, source.alphabet_size(), source.t())?;
    let classes = types
        .types
        .iter()
        .map(|ty| {
            let ch = mc.rate_sup(ty.rate);
            let q = mc.rate_argmax(ty.rate);
            let rho = if ch.arg.is_finite() { ch.arg } else { grids.rho_max };
            let lambda = source_sup_lambda(source, ty.rate, grids).arg;
            ClassParams::new(q, rho, lambda)
        })
        .collect::<Result<Vec<_>>>()?;
    let plan = PartitionPlan {
        assignment: (0..classes.len()).collect(),
        classes,
        type_counts: types.types.iter().map(|ty| ty.counts.clone()).collect(),
        rates: types.types.iter().map(|ty| ty.rate).collect(),
        k,
        n: channel_blocklength(k, source.t()),
    };
    let table = per_type_exponent_table(source, d, &plan, grids)?;
    Ok((plan, table))
}

/// Nearest n-type to `q` by largest remainders; ties go to the lower index.
pub fn quantize_composition(q: &Distribution, n: usize) -> Vec<usize> {
    let scaled: Vec<f64> = q.probs().iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|s| s.floor() as usize).collect();
    let short = n - counts.iter().sum::<usize>().min(n);
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (scaled[a] - scaled[a].floor(), scaled[b] - scaled[b].floor());
        rb.partial_cmp(&ra).expect("finite").then(a.cmp(&b))
    });
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// Size comparison for one class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassFeasibility {
    pub class: usize,
    pub composition: Vec<usize>,
    /// `log |T^n(Q_c)|` of the quantized composition.
    pub log_codewords: f64,
    /// `log |A_c|`, the log number of source sequences in the class.
    pub log_messages: f64,
    /// `log_codewords − log_messages`; negative means infeasible.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub n: usize,
    pub classes: Vec<ClassFeasibility>,
    pub feasible: bool,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Checks `|T^n(Q_c)| ≥ |A_c|` for every class with exact log counts.
/// Empty classes are reported with `log_messages = −∞`.
pub fn check_feasibility(plan: &PartitionPlan, n: usize) -> Result<FeasibilityReport> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            constraint: "n >= 1",
        });
    }
    let classes: Vec<ClassFeasibility> = plan
        .classes
        .iter()
        .enumerate()
        .map(|(c, class)| {
            let composition = quantize_composition(&class.q, n);
            let log_codewords = log_multinomial(&composition);
            let sizes: Vec<f64> = plan.members(c).iter().map(|&i| log_multinomial(&plan.type_counts[i])).collect();
            let log_messages = log_sum_exp(&sizes);
            ClassFeasibility {
                class: c,
                composition,
                log_codewords,
                log_messages,
                margin: log_codewords - log_messages,
            }
        })
        .collect();
    let feasible = classes.iter().all(|c| c.margin >= -1e-12);
    Ok(FeasibilityReport { n, classes, feasible })
}
