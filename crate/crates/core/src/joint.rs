//! Joint source-channel exponents built from the source and channel
//! functions: the primal forms `E_J,1`, `E_J,2` and the family exponent,
//! their dual forms through the concave hull of `max_Q E′_x(Q,λ)`, the
//! single-class dual exponent and per-type exponent tables.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{
    default_q_grid, eex_ckm_primal, eex_prime_from_dual, eex_prime_primal, ex_prime_dual_solve,
    ex_prime_limit, ex_single_dual, ex_single_limit, maximize_over_q, BhattacharyyaMatrix,
};
use crate::error::{Error, Result};
use crate::hull::{upper_concave_hull, ExponentCurve};
use crate::optim::{golden_min, linear_grid, log_grid, refine_grid_max, select_max, Attainment, Optimum, SimplexGrid};
use crate::partition::PartitionPlan;
use crate::prob::{entropy, Distribution};
use crate::source::{gallager_source_fn, source_reliability_primal, SourceModel, DEFAULT_RHO_MAX};

/// Parameter grids shared by the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grids {
    pub rho_max: f64,
    pub rho_points: usize,
    pub r_points: usize,
    /// Spacing of the Q simplex grid; `None` picks the per-alphabet default.
    pub q_resolution: Option<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            rho_max: DEFAULT_RHO_MAX,
            rho_points: 200,
            r_points: 200,
            q_resolution: None,
        }
    }
}

impl Grids {
    /// Log-spaced ρ (and λ) grid on `[1, rho_max]`.
    pub fn rho_grid(&self) -> Vec<f64> {
        log_grid(1.0, self.rho_max, self.rho_points.max(2))
    }

    pub fn q_grid(&self, inputs: usize) -> Result<SimplexGrid> {
        match self.q_resolution {
            Some(r) => Ok(SimplexGrid::with_resolution(inputs, r)),
            None => default_q_grid(inputs),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho_max > 1.0 && self.rho_max.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rho_max",
                value: self.rho_max,
                constraint: "1 < rho_max < inf",
            });
        }
        if self.rho_points < 2 || self.r_points < 2 {
            return Err(Error::InvalidParameter {
                name: "grid points",
                value: self.rho_points.min(self.r_points) as f64,
                constraint: ">= 2",
            });
        }
        Ok(())
    }
}

/// A finite set of codeword compositions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodewordFamily {
    members: Vec<Distribution>,
}

impl CodewordFamily {
    pub fn new(members: Vec<Distribution>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyClass)?;
        if let Some(m) = members.iter().find(|m| m.len() != first.len()) {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                found: m.len(),
            });
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[Distribution] {
        &self.members
    }

    pub fn inputs(&self) -> usize {
        self.members[0].len()
    }
}

/// The set of compositions a maximum over `Q` ranges over.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum InputSet {
    /// Whole simplex, searched on a grid with local polish.
    Simplex(SimplexGrid),
    /// A finite family; ties go to the lowest member index.
    Family(CodewordFamily),
}

impl InputSet {
    pub fn inputs(&self) -> usize {
        match self {
            Self::Simplex(g) => g.dim,
            Self::Family(f) => f.inputs(),
        }
    }

    /// Q grid spacing; `None` for a family.
    pub fn resolution(&self) -> Option<f64> {
        match self {
            Self::Simplex(g) => Some(g.resolution()),
            Self::Family(_) => None,
        }
    }

    /// Maximum of `f` over the set and a maximizer.
    pub fn maximize(&self, f: impl Fn(&Distribution) -> f64 + Sync) -> (f64, Distribution) {
        match self {
            Self::Simplex(g) => {
                let m = maximize_over_q(g, f);
                (m.value, m.q)
            }
            Self::Family(fam) => {
                let mut best = (f64::NEG_INFINITY, fam.members[0].clone());
                for q in &fam.members {
                    let v = f(q);
                    if v > best.0 {
                        best = (v, q.clone());
                    }
                }
                best
            }
        }
    }
}

fn ex_prime(q: &Distribution, rho: f64, d: &BhattacharyyaMatrix) -> f64 {
    ex_prime_dual_solve(q, rho, d).map_or(f64::NEG_INFINITY, |s| s.value)
}

/// `E′_x(𝒬,ρ) = max_{Q∈𝒬} E′_x(Q,ρ)` sampled on a ρ grid, with the
/// maximizers and the `ρ → ∞` limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxCurve {
    pub curve: ExponentCurve,
    pub argmax: Vec<Distribution>,
    /// `max_Q min_x̄ Σ_x Q(x) d(x,x̄)`.
    pub limit: f64,
    set: InputSet,
    d: BhattacharyyaMatrix,
}

impl MaxCurve {
    pub fn build(d: &BhattacharyyaMatrix, set: &InputSet, rho_grid: &[f64]) -> Result<Self> {
        if set.inputs() != d.size() {
            return Err(Error::DimensionMismatch {
                expected: d.size(),
                found: set.inputs(),
            });
        }
        let res: Vec<(f64, Distribution)> = rho_grid
            .par_iter()
            .map(|&rho| set.maximize(|q| ex_prime(q, rho, d)))
            .collect();
        let (values, argmax): (Vec<f64>, Vec<Distribution>) = res.into_iter().unzip();
        let limit = set.maximize(|q| ex_prime_limit(q, d)).0;
        Ok(Self {
            curve: ExponentCurve::new(rho_grid.to_vec(), values)?,
            argmax,
            limit,
            set: set.clone(),
            d: d.clone(),
        })
    }

    pub fn set(&self) -> &InputSet {
        &self.set
    }

    pub fn distances(&self) -> &BhattacharyyaMatrix {
        &self.d
    }

    /// Value at an arbitrary ρ: exact for a family, otherwise the better of
    /// the maximizers at the two bracketing grid points.
    pub fn eval(&self, rho: f64) -> (f64, Distribution) {
        match &self.set {
            InputSet::Family(_) => self.set.maximize(|q| ex_prime(q, rho, &self.d)),
            InputSet::Simplex(_) => {
                let i = self.curve.bracket(rho);
                let j = (i + 1).min(self.argmax.len() - 1);
                let cands: Vec<(f64, Distribution)> = [i, j]
                    .iter()
                    .map(|&k| (ex_prime(&self.argmax[k], rho, &self.d), self.argmax[k].clone()))
                    .collect();
                let b = select_max(&cands);
                cands[b].clone()
            }
        }
    }

    /// `sup_{ρ≥1} max_Q E′_x(Q,ρ) − ρR`, i.e. `max_Q E′_ex(Q,R)`. At `R = 0`
    /// a grid optimum at `rho_max` is replaced by the limit.
    pub fn rate_sup(&self, r: f64) -> Optimum {
        let grid = self.curve.grid();
        let values: Vec<f64> = grid.iter().zip(self.curve.values()).map(|(rho, v)| v - rho * r).collect();
        let mut opt = refine_grid_max(grid, &values, |rho| self.eval(rho).0 - rho * r);
        if opt.attainment == Attainment::Truncated {
            opt.limit = Some(self.limit);
            if r == 0.0 {
                opt.value = self.limit;
                opt.arg = f64::INFINITY;
                opt.attainment = if self.limit.is_infinite() {
                    Attainment::Infinite
                } else {
                    Attainment::Limit
                };
            }
        }
        opt
    }

    /// A maximizing composition for the rate `R`.
    pub fn rate_argmax(&self, r: f64) -> Distribution {
        let opt = self.rate_sup(r);
        if opt.arg.is_finite() {
            self.eval(opt.arg).1
        } else {
            self.set.maximize(|q| ex_prime_limit(q, &self.d)).1
        }
    }
}

/// Grid and solver settings behind a reported exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub rho_max: f64,
    pub rho_points: usize,
    pub r_points: usize,
    /// Q grid spacing; `None` for a finite family.
    pub q_resolution: Option<f64>,
    /// Largest ratio between consecutive ρ grid points, minus one.
    pub rho_step: f64,
    pub fw_gap_tol: f64,
}

impl Provenance {
    fn new(grids: &Grids, q_resolution: Option<f64>) -> Self {
        let g = grids.rho_grid();
        let rho_step = g.windows(2).map(|w| w[1] / w[0] - 1.0).fold(0.0, f64::max);
        Self {
            rho_max: grids.rho_max,
            rho_points: grids.rho_points,
            r_points: grids.r_points,
            q_resolution,
            rho_step,
            fw_gap_tol: 1e-10,
        }
    }
}

/// A joint exponent with the optimizing parameter (`R*` for primal forms,
/// `λ*` for dual forms), how it was attained and the grids used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointExponent {
    pub value: f64,
    pub arg: f64,
    pub attainment: Attainment,
    /// Closed-form limit attached when the optimum sits at a truncation.
    pub limit: Option<f64>,
    pub provenance: Provenance,
}

/// `t·e(R/t)`, with `R/t` clipped to `[0, log|V|]`.
pub fn scaled_source_exponent(source: &SourceModel, r: f64) -> f64 {
    let t = source.t();
    let x = (r / t).min((source.alphabet_size() as f64).ln());
    t * source_reliability_primal(x.max(0.0), source.law()).expect("rate is nonnegative")
}

/// Minimizes the convex `f` over the rate range of the source, on a grid
/// and then by golden section between the bracketing points.
fn minimize_over_rates(source: &SourceModel, grids: &Grids, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let hi = source.max_rate();
    if hi <= 0.0 {
        return (0.0, f(0.0));
    }
    let rs = linear_grid(0.0, hi, grids.r_points);
    let vals: Vec<f64> = rs.iter().map(|&r| f(r)).collect();
    let best = (0..rs.len()).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
    let lo = rs[best.saturating_sub(1)];
    let up = rs[(best + 1).min(rs.len() - 1)];
    let (x, v) = golden_min(&f, lo, up, 1e-10);
    if v < vals[best] {
        (x, v)
    } else {
        (rs[best], vals[best])
    }
}

/// `min_R [t·e(R/t) + E′_ex(𝒬,R)]` for a prebuilt channel curve.
pub fn primal_from_curve(source: &SourceModel, mc: &MaxCurve, grids: &Grids) -> JointExponent {
    let (r_star, value) = minimize_over_rates(source, grids, |r| scaled_source_exponent(source, r) + mc.rate_sup(r).value);
    let inner = mc.rate_sup(r_star);
    JointExponent {
        value,
        arg: r_star,
        attainment: inner.attainment,
        limit: inner.limit,
        provenance: Provenance::new(grids, mc.set().resolution()),
    }
}

/// `min_R [t·e(R/t) + max_{Q∈𝒬} E′_ex(Q,R)]` for a finite family.
pub fn joint_exponent_primal(
    source: &SourceModel,
    d: &BhattacharyyaMatrix,
    family: &CodewordFamily,
    grids: &Grids,
) -> Result<JointExponent> {
    grids.validate()?;
    let mc = MaxCurve::build(d, &InputSet::Family(family.clone()), &grids.rho_grid())?;
    Ok(primal_from_curve(source, &mc, grids))
}

/// `E_J,2 = min_R [t·e(R/t) + max_Q E′_ex(Q,R)]`, the maximum running over
/// the Q grid of `grids`.
pub fn joint_exponent_ej2(source: &SourceModel, d: &BhattacharyyaMatrix, grids: &Grids) -> Result<JointExponent> {
    grids.validate()?;
    let set = InputSet::Simplex(grids.q_grid(d.size())?);
    let mc = MaxCurve::build(d, &set, &grids.rho_grid())?;
    Ok(primal_from_curve(source, &mc, grids))
}

/// `E_J,1 = max_Q min_R [t·e(R/t) + E_ex(Q,R)]` with the CKM exponent.
pub fn joint_exponent_ej1(source: &SourceModel, d: &BhattacharyyaMatrix, grids: &Grids) -> Result<JointExponent> {
    grids.validate()?;
    let q_grid = grids.q_grid(d.size())?;
    let inner = |q: &Distribution| {
        minimize_over_rates(source, grids, |r| {
            scaled_source_exponent(source, r) + eex_ckm_primal(q, r, d).unwrap_or(f64::INFINITY)
        })
    };
    let best = maximize_over_q(&q_grid, |q| inner(q).1);
    let (r_star, _) = inner(&best.q);
    Ok(JointExponent {
        value: best.value,
        arg: r_star,
        attainment: Attainment::Interior,
        limit: None,
        provenance: Provenance::new(grids, Some(q_grid.resolution())),
    })
}

/// Result of a dual exponent: the hull of the channel curve and the
/// maximizer `λ*` of `hull(λ) − t·E_s(λ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSolution {
    pub exponent: JointExponent,
    pub curve: MaxCurve,
    pub hull: ExponentCurve,
}

fn es(source: &SourceModel, lambda: f64) -> f64 {
    gallager_source_fn(lambda, source.law()).expect("lambda >= 0")
}

/// `sup_{λ≥1} hull(λ) − t·E_s(λ)` for a prebuilt channel curve.
pub fn dual_from_curve(source: &SourceModel, mc: MaxCurve, grids: &Grids) -> Result<DualSolution> {
    let hull = upper_concave_hull(&mc.curve)?;
    let t = source.t();
    let grid = hull.grid().to_vec();
    let values: Vec<f64> = grid.iter().zip(hull.values()).map(|(&l, h)| h - t * es(source, l)).collect();
    let mut opt = refine_grid_max(&grid, &values, |l| hull.eval(l) - t * es(source, l));
    if opt.attainment == Attainment::Truncated {
        opt.limit = Some(mc.limit);
        if source.alphabet_size() == 1 {
            opt.value = mc.limit;
            opt.arg = f64::INFINITY;
            opt.attainment = if mc.limit.is_infinite() {
                Attainment::Infinite
            } else {
                Attainment::Limit
            };
        }
    }
    let exponent = JointExponent {
        value: opt.value,
        arg: opt.arg,
        attainment: opt.attainment,
        limit: opt.limit,
        provenance: Provenance::new(grids, mc.set().resolution()),
    };
    Ok(DualSolution { exponent, curve: mc, hull })
}

/// Pointwise maximum of the members' `E′_x(Q,ρ)` curves.
pub fn family_dual_curve(family: &CodewordFamily, d: &BhattacharyyaMatrix, rho_grid: &[f64]) -> Result<ExponentCurve> {
    Ok(MaxCurve::build(d, &InputSet::Family(family.clone()), rho_grid)?.curve)
}

/// `sup_{λ≥1} Ē′_x(𝒬,λ) − t·E_s(λ)` with `Ē′_x` the concave hull of the
/// family curve.
pub fn dual_family_exponent(
    source: &SourceModel,
    d: &BhattacharyyaMatrix,
    family: &CodewordFamily,
    grids: &Grids,
) -> Result<DualSolution> {
    grids.validate()?;
    let mc = MaxCurve::build(d, &InputSet::Family(family.clone()), &grids.rho_grid())?;
    dual_from_curve(source, mc, grids)
}

/// As [`dual_family_exponent`] with the maximum over all compositions.
pub fn csiszar_dual_exponent(source: &SourceModel, d: &BhattacharyyaMatrix, grids: &Grids) -> Result<DualSolution> {
    grids.validate()?;
    let set = InputSet::Simplex(grids.q_grid(d.size())?);
    let mc = MaxCurve::build(d, &set, &grids.rho_grid())?;
    dual_from_curve(source, mc, grids)
}

/// `sup_{ρ≥1} E_x(ρ) − t·E_s(ρ)` with `E_x(ρ) = max_Q E_x(Q,ρ)`; no hull.
pub fn single_class_dual_exponent(
    source: &SourceModel,
    d: &BhattacharyyaMatrix,
    grids: &Grids,
) -> Result<JointExponent> {
    grids.validate()?;
    let q_grid = grids.q_grid(d.size())?;
    let set = InputSet::Simplex(q_grid);
    let grid = grids.rho_grid();
    let single = |q: &Distribution, rho: f64| ex_single_dual(q, rho, d).map_or(f64::NEG_INFINITY, |s| s.value);
    let res: Vec<(f64, Distribution)> = grid.par_iter().map(|&rho| set.maximize(|q| single(q, rho))).collect();
    let t = source.t();
    let values: Vec<f64> = grid.iter().zip(&res).map(|(&rho, (v, _))| v - t * es(source, rho)).collect();
    let curve = ExponentCurve::new(grid.clone(), values.clone())?;
    let f = |rho: f64| {
        let i = curve.bracket(rho);
        let best = [i, (i + 1).min(grid.len() - 1)]
            .iter()
            .map(|&k| single(&res[k].1, rho))
            .fold(f64::NEG_INFINITY, f64::max);
        best - t * es(source, rho)
    };
    let mut opt = refine_grid_max(&grid, &values, f);
    if opt.attainment == Attainment::Truncated {
        let limit = set.maximize(|q| ex_single_limit(q, d)).0;
        opt.limit = Some(limit);
        if source.alphabet_size() == 1 {
            opt.value = limit;
            opt.arg = f64::INFINITY;
            opt.attainment = if limit.is_infinite() {
                Attainment::Infinite
            } else {
                Attainment::Limit
            };
        }
    }
    Ok(JointExponent {
        value: opt.value,
        arg: opt.arg,
        attainment: opt.attainment,
        limit: opt.limit,
        provenance: Provenance::new(grids, Some(q_grid.resolution())),
    })
}

/// `sup_{λ≥1} λR − t·E_s(λ)`, the source half of a per-type dual row.
pub fn source_sup_lambda(source: &SourceModel, r: f64, grids: &Grids) -> Optimum {
    let t = source.t();
    let f = |l: f64| l * r - t * es(source, l);
    let grid = grids.rho_grid();
    let values: Vec<f64> = grid.iter().map(|&l| f(l)).collect();
    refine_grid_max(&grid, &values, f)
}

/// One source type's row of a per-type exponent table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeRow {
    pub counts: Vec<usize>,
    pub rate: f64,
    pub class: usize,
    /// `t·e(R_i/t) + E′_ex(Q_c, R_i)`.
    pub primal: f64,
    /// `sup_{λ≥1}[λR_i − tE_s(λ)] + sup_{ρ≥1}[E′_x(Q_c,ρ) − ρR_i]`.
    pub dual: f64,
    pub dual_rho: f64,
    pub dual_lambda: f64,
    /// Score with the class's own parameters,
    /// `E′_x(Q_c,ρ_c) + (λ_c−ρ_c)R_i − tE_s(λ_c)`.
    pub class_score: f64,
    /// Set when a supremum sat at a truncation of its range.
    pub flagged: bool,
}

/// Per-type exponents of a partition plan and their minima.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerTypeTable {
    pub rows: Vec<TypeRow>,
    pub overall_primal: f64,
    pub overall_dual: f64,
    /// Row attaining `overall_primal`.
    pub worst_type: usize,
}

/// Evaluates every type of `plan` in its assigned class.
pub fn per_type_exponent_table(
    source: &SourceModel,
    d: &BhattacharyyaMatrix,
    plan: &PartitionPlan,
    grids: &Grids,
) -> Result<PerTypeTable> {
    grids.validate()?;
    if plan.type_counts.len() != plan.assignment.len() {
        return Err(Error::DimensionMismatch {
            expected: plan.type_counts.len(),
            found: plan.assignment.len(),
        });
    }
    let t = source.t();
    let ex_class: Vec<f64> = plan.classes.iter().map(|c| ex_prime(&c.q, c.rho, d)).collect();
    let rows: Vec<TypeRow> = (0..plan.assignment.len())
        .into_par_iter()
        .map(|i| -> Result<TypeRow> {
            let counts = plan.type_counts[i].clone();
            let h = entropy(&Distribution::from_counts(&counts)?);
            let rate = t * h;
            let c = plan.assignment[i];
            let class = &plan.classes[c];
            let src = t * source_reliability_primal(h, source.law())?;
            let primal = src + eex_prime_primal(&class.q, rate, d)?;
            let lam = source_sup_lambda(source, rate, grids);
            let ch = eex_prime_from_dual(&class.q, rate, d, grids.rho_max, grids.rho_points)?;
            let class_score = ex_class[c] + (class.lambda - class.rho) * rate - t * es(source, class.lambda);
            Ok(TypeRow {
                counts,
                rate,
                class: c,
                primal,
                dual: lam.value + ch.value,
                dual_rho: ch.arg,
                dual_lambda: lam.arg,
                class_score,
                flagged: ch.attainment.is_truncation() || lam.attainment.is_truncation(),
            })
        })
        .collect::<Result<_>>()?;
    let worst_type = (0..rows.len()).fold(0, |b, i| if rows[i].primal < rows[b].primal { i } else { b });
    let overall_primal = rows[worst_type].primal;
    let overall_dual = rows.iter().map(|r| r.dual).fold(f64::INFINITY, f64::min);
    Ok(PerTypeTable {
        rows,
        overall_primal,
        overall_dual,
        worst_type,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bhattacharyya;
    use crate::prob::Channel;
    use approx::assert_abs_diff_eq;

    fn bsc(p: f64) -> BhattacharyyaMatrix {
        bhattacharyya(&Channel::bsc(p).unwrap())
    }

    fn src(p: &[f64], t: f64) -> SourceModel {
        SourceModel::new(Distribution::new(p.to_vec()).unwrap(), t).unwrap()
    }

    fn fast() -> Grids {
        Grids {
            rho_points: 80,
            r_points: 60,
            ..Grids::default()
        }
    }

    #[test]
    fn family_curve_is_pointwise_max() {
        let d = bsc(0.1);
        let u = Distribution::uniform(2);
        let s = Distribution::new(vec![0.9, 0.1]).unwrap();
        let g = log_grid(1.0, 100.0, 20);
        let single = family_dual_curve(&CodewordFamily::new(vec![u.clone()]).unwrap(), &d, &g).unwrap();
        let dup = family_dual_curve(&CodewordFamily::new(vec![u.clone(), u.clone()]).unwrap(), &d, &g).unwrap();
        assert_eq!(single, dup);
        let both = family_dual_curve(&CodewordFamily::new(vec![u.clone(), s.clone()]).unwrap(), &d, &g).unwrap();
        for (i, &rho) in g.iter().enumerate() {
            assert!(both.values()[i] >= ex_prime(&u, rho, &d));
            assert!(both.values()[i] >= ex_prime(&s, rho, &d));
        }
    }

    #[test]
    fn deterministic_source_gives_zero_rate_exponent() {
        let d = bsc(0.1);
        let s = src(&[1.0, 0.0], 1.0);
        let fam = CodewordFamily::new(vec![Distribution::uniform(2)]).unwrap();
        let p = joint_exponent_primal(&s, &d, &fam, &fast()).unwrap();
        assert_abs_diff_eq!(p.value, 0.255413, epsilon = 1e-6);
        assert!(p.attainment.is_truncation());
        let e2 = joint_exponent_ej2(&s, &d, &fast()).unwrap();
        assert_abs_diff_eq!(e2.value, 0.255413, epsilon = 1e-6);
        let dual = csiszar_dual_exponent(&s, &d, &fast()).unwrap();
        assert_abs_diff_eq!(dual.exponent.value, 0.255413, epsilon = 1e-6);
        assert_eq!(dual.exponent.attainment, Attainment::Limit);
        let single = single_class_dual_exponent(&s, &d, &fast()).unwrap();
        assert_abs_diff_eq!(single.value, 0.255413, epsilon = 1e-6);
    }

    #[test]
    fn useless_channel_pays_the_rate() {
        let d = bhattacharyya(&Channel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap());
        let s = src(&[0.5, 0.5], 1.0);
        let fam = CodewordFamily::new(vec![Distribution::uniform(2)]).unwrap();
        let p = joint_exponent_primal(&s, &d, &fam, &fast()).unwrap();
        assert_abs_diff_eq!(p.value, -(2f64.ln()), epsilon = 1e-9);
        assert_abs_diff_eq!(p.arg, 2f64.ln(), epsilon = 1e-9);
        let skew = src(&[0.8, 0.2], 0.7);
        let e2 = joint_exponent_ej2(&skew, &d, &fast()).unwrap();
        let direct = minimize_over_rates(&skew, &fast(), |r| scaled_source_exponent(&skew, r) - r).1;
        assert_abs_diff_eq!(e2.value, direct, epsilon = 1e-9);
    }

    #[test]
    fn uniform_source_quarter_rate() {
        let d = bsc(0.1);
        let s = src(&[0.5, 0.5], 0.25);
        let fam = CodewordFamily::new(vec![Distribution::uniform(2)]).unwrap();
        let p = joint_exponent_primal(&s, &d, &fam, &fast()).unwrap();
        let expect = -(0.8f64.ln()) - 0.25 * 2f64.ln();
        assert_abs_diff_eq!(p.value, expect, epsilon = 1e-6);
        assert_abs_diff_eq!(p.arg, 0.25 * 2f64.ln(), epsilon = 1e-9);
        let e2 = joint_exponent_ej2(&s, &d, &fast()).unwrap();
        assert_abs_diff_eq!(e2.value, expect, epsilon = 1e-6);
        let dual = csiszar_dual_exponent(&s, &d, &fast()).unwrap();
        assert!((dual.exponent.value - e2.value).abs() < 1e-3);
    }

    #[test]
    fn symmetric_channel_routes_agree() {
        let d = bsc(0.1);
        let s = src(&[0.9, 0.1], 1.0);
        let fam = CodewordFamily::new(vec![Distribution::uniform(2)]).unwrap();
        let a = dual_family_exponent(&s, &d, &fam, &fast()).unwrap().exponent.value;
        let b = csiszar_dual_exponent(&s, &d, &fast()).unwrap().exponent.value;
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        let p = joint_exponent_ej2(&s, &d, &fast()).unwrap().value;
        assert!((p - b).abs() < 1e-3, "{p} vs {b}");
    }

    #[test]
    fn enlarging_family_never_hurts() {
        let d = bsc(0.1);
        let s = src(&[0.9, 0.1], 1.0);
        let u = Distribution::uniform(2);
        let q = Distribution::new(vec![0.8, 0.2]).unwrap();
        let small = dual_family_exponent(&s, &d, &CodewordFamily::new(vec![q.clone()]).unwrap(), &fast()).unwrap();
        let big = dual_family_exponent(&s, &d, &CodewordFamily::new(vec![q, u]).unwrap(), &fast()).unwrap();
        assert!(big.exponent.value >= small.exponent.value - 1e-12);
    }

    #[test]
    fn above_capacity_single_class_is_negative() {
        let d = bsc(0.1);
        let s = src(&[0.5, 0.5], 1.0);
        let g = Grids {
            q_resolution: Some(0.05),
            ..fast()
        };
        assert!(single_class_dual_exponent(&s, &d, &g).unwrap().value < 0.0);
    }

    #[test]
    fn ej1_deterministic_source() {
        let d = bsc(0.1);
        let s = src(&[1.0, 0.0], 1.0);
        let g = Grids {
            q_resolution: Some(0.1),
            r_points: 10,
            ..fast()
        };
        let e1 = joint_exponent_ej1(&s, &d, &g).unwrap();
        assert_abs_diff_eq!(e1.value, 0.255413, epsilon = 1e-6);
    }
}
