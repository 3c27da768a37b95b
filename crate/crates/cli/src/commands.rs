//! The subcommands. Each writes `<command>.csv` (plus auxiliary tables) and
//! `<command>.manifest` into the output directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Subcommand};
use jscc_core::channel::{
    eex_ckm_primal, eex_prime_primal, ex_prime_limit, ex_single_dual, ex_single_limit, CHECK_GRID_RESOLUTION,
    FW_GAP_TOL, FW_MAX_ITER,
};
use jscc_core::hull::{biconjugate_eval, hull_vertices, upper_concave_hull};
use jscc_core::joint::{
    dual_from_curve, joint_exponent_ej1, primal_from_curve, scaled_source_exponent, single_class_dual_exponent,
    InputSet, JointExponent, MaxCurve,
};
use jscc_core::optim::{linear_grid, refine_grid_max, Attainment, TIE_TOL};
use jscc_core::oracle::{brute_force_ckm_exponent, brute_force_weak_exponent, duality_report, lipschitz_slack};
use jscc_core::partition::{build_two_class_plan_over, check_feasibility, two_class_threshold, TwoClassPlan};
use jscc_core::prob::{Distribution, STOCHASTIC_TOL};
use jscc_core::sim::{derive_seed, expurgate_best_of, finite_n_bound, Method};
use jscc_core::source::{gallager_source_fn, gallager_source_slope, rate_grid, source_reliability_dual, source_reliability_primal};

use crate::config::{load_preset, validate, validate_config, Model};
use crate::output::{flag, Cell, Manifest, Table};

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Source reliability function (primal and dual) and E_s.
    SourceExp(Options),
    /// Bhattacharyya distances and expurgated channel exponents.
    ChannelExp(Options),
    /// Joint exponents: rate sweep and primal/dual summary.
    Joint(Options),
    /// Channel curve, its concave hull and the numerical biconjugate.
    Hull(Options),
    /// Two-class partition plan, threshold and feasibility.
    Partition(Options),
    /// Primal/dual agreement report and brute-force oracle checks.
    Certify(Options),
    /// Best-of-M Monte Carlo campaign.
    Simulate(Options),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SourceExp(_) => "source-exp",
            Self::ChannelExp(_) => "channel-exp",
            Self::Joint(_) => "joint",
            Self::Hull(_) => "hull",
            Self::Partition(_) => "partition",
            Self::Certify(_) => "certify",
            Self::Simulate(_) => "simulate",
        }
    }

    pub fn options(&self) -> &Options {
        match self {
            Self::SourceExp(o)
            | Self::ChannelExp(o)
            | Self::Joint(o)
            | Self::Hull(o)
            | Self::Partition(o)
            | Self::Certify(o)
            | Self::Simulate(o) => o,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// JSON config file.
    pub config: Option<PathBuf>,
    /// Name of a shipped preset instead of a config file.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub grid_rho_max: Option<f64>,
    /// Number of ρ and R grid points.
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub q_res: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Force exact enumeration where offered.
    #[arg(long)]
    pub exact: bool,
    /// Source block length for `partition`.
    #[arg(long)]
    pub k: Option<usize>,
    /// Channel block lengths.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub best_of: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Also compute E_J,1 in `joint` for more than two inputs (slow).
    #[arg(long)]
    pub ej1: bool,
}

impl Options {
    pub fn preset(name: &str, out: &Path) -> Self {
        Self {
            preset: Some(name.into()),
            out: out.to_path_buf(),
            ..Self::default()
        }
    }
}

/// Loads the config named by `opts` and applies flag overrides.
pub fn load_model(opts: &Options) -> anyhow::Result<Model> {
    let base = match (&opts.config, &opts.preset) {
        (Some(p), _) => validate_config(p)?,
        (None, Some(name)) => load_preset(name)?,
        (None, None) => bail!("either a config path or --preset is required"),
    };
    let mut config = base.config.clone();
    if let Some(v) = opts.grid_rho_max {
        config.grids.rho_max = v;
    }
    if let Some(v) = opts.grid_points {
        config.grids.rho_points = v;
        config.grids.r_points = v;
    }
    if let Some(v) = opts.q_res {
        config.grids.q_resolution = Some(v);
    }
    if let Some(v) = opts.seed {
        config.sim.seed = v;
    }
    if let Some(v) = opts.k {
        config.sim.k = v;
    }
    if let Some(v) = &opts.n {
        config.sim.n_list = v.clone();
    }
    if let Some(v) = opts.best_of {
        config.sim.best_of = v;
    }
    if let Some(v) = opts.trials {
        config.sim.trials = v;
    }
    validate(config, &base.name)
}

/// Runs `cmd`, returning the files written.
pub fn run(cmd: &Command) -> anyhow::Result<Vec<PathBuf>> {
    let opts = cmd.options();
    let model = load_model(opts)?;
    std::fs::create_dir_all(&opts.out).with_context(|| format!("creating {}", opts.out.display()))?;
    let mut ctx = Ctx {
        name: cmd.name(),
        out: opts.out.clone(),
        manifest: common_manifest(cmd.name(), &model)?,
        written: Vec::new(),
        flagged: 0,
    };
    let outcome = match cmd {
        Command::SourceExp(_) => source_exp(&model, &mut ctx),
        Command::ChannelExp(_) => channel_exp(&model, &mut ctx),
        Command::Joint(o) => joint(&model, o, &mut ctx),
        Command::Hull(_) => hull(&model, &mut ctx),
        Command::Partition(o) => partition(&model, o, &mut ctx),
        Command::Certify(_) => certify(&model, &mut ctx),
        Command::Simulate(o) => simulate(&model, o, &mut ctx),
    };
    ctx.finish()?;
    outcome?;
    Ok(ctx.written)
}

struct Ctx {
    name: &'static str,
    out: PathBuf,
    manifest: Manifest,
    written: Vec<PathBuf>,
    flagged: usize,
}

impl Ctx {
    fn table(&mut self, suffix: &str, t: &Table) -> anyhow::Result<()> {
        let file = format!("{}{suffix}.csv", self.name);
        let path = self.out.join(&file);
        t.write(&path)?;
        self.manifest.set(&format!("output.{}", self.written.len()), &file);
        self.written.push(path);
        Ok(())
    }

    fn flag(&mut self, b: bool) -> Cell {
        if b {
            self.flagged += 1;
        }
        flag(b).into()
    }

    fn finish(&mut self) -> anyhow::Result<()> {
        self.manifest.set("flagged_cells", self.flagged);
        let path = self.out.join(format!("{}.manifest", self.name));
        self.manifest.write(&path)?;
        self.written.push(path);
        Ok(())
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn common_manifest(command: &str, m: &Model) -> anyhow::Result<Manifest> {
    let mut man = Manifest::default();
    man.set("command", command);
    man.set("config", &m.name);
    man.set("source.probs", json(&m.config.source.probs));
    man.num("source.t", m.config.source.t);
    man.set("channel.rows", json(&m.config.channel.rows));
    if let Some(f) = &m.config.family {
        man.set("family", json(f));
    }
    man.num("grids.rho_max", m.grids.rho_max);
    man.set("grids.rho_points", m.grids.rho_points);
    man.set("grids.r_points", m.grids.r_points);
    match m.input_set()?.resolution() {
        Some(r) => man.num("grids.q_resolution", r),
        None => man.set("grids.q_resolution", "family"),
    }
    man.num("tol.stochastic", STOCHASTIC_TOL);
    man.num("tol.fw_gap", FW_GAP_TOL);
    man.set("tol.fw_max_iter", FW_MAX_ITER);
    man.num("tol.tie", TIE_TOL);
    man.num("tol.check_grid", CHECK_GRID_RESOLUTION);
    Ok(man)
}

fn q_text(q: &Distribution) -> String {
    q.probs().iter().map(|p| format!("{p:.6}")).collect::<Vec<_>>().join(";")
}

fn attainment_text(a: Attainment) -> &'static str {
    match a {
        Attainment::Interior => "interior",
        Attainment::LowerBoundary => "lower_boundary",
        Attainment::Truncated => "truncated",
        Attainment::Limit => "limit",
        Attainment::Infinite => "infinite",
    }
}

fn source_exp(m: &Model, ctx: &mut Ctx) -> anyhow::Result<()> {
    let law = m.source.law();
    let mut t = Table::new(["R", "e_primal", "e_dual", "rho_star", "flag"]);
    for r in rate_grid(law, m.grids.r_points) {
        let p = source_reliability_primal(r, law)?;
        let d = source_reliability_dual(r, law, m.grids.rho_max)?;
        let f = ctx.flag(d.attainment.is_truncation());
        t.push(vec![r.into(), p.into(), d.value.into(), d.arg.into(), f])?;
    }
    ctx.table("", &t)?;
    let mut es = Table::new(["rho", "E_s", "dE_s"]);
    for rho in std::iter::once(0.0).chain(m.grids.rho_grid()) {
        es.push(vec![
            rho.into(),
            gallager_source_fn(rho, law)?.into(),
            gallager_source_slope(rho, law)?.into(),
        ])?;
    }
    ctx.table("-es", &es)
}

/// `max_Q E_x(Q,ρ)` on the ρ grid with the maximizers.
fn single_curve(m: &Model, set: &InputSet, grid: &[f64]) -> Vec<(f64, Distribution)> {
    use rayon::prelude::*;
    grid.par_iter()
        .map(|&rho| set.maximize(|q| ex_single_dual(q, rho, &m.distances).map_or(f64::NEG_INFINITY, |s| s.value)))
        .collect()
}

fn channel_exp(m: &Model, ctx: &mut Ctx) -> anyhow::Result<()> {
    let d = &m.distances;
    let mut dt = Table::new(["x", "xbar", "d_B"]);
    for x in 0..d.size() {
        for xb in 0..d.size() {
            dt.push(vec![x.into(), xb.into(), d.get(x, xb).into()])?;
        }
    }
    ctx.table("-distance", &dt)?;

    let set = m.input_set()?;
    let grid = m.grids.rho_grid();
    let mc = MaxCurve::build(d, &set, &grid)?;
    let single = single_curve(m, &set, &grid);
    let mut ct = Table::new(["rho", "Ex_prime", "Ex", "q_prime_argmax", "q_argmax"]);
    for (i, &rho) in grid.iter().enumerate() {
        ct.push(vec![
            rho.into(),
            mc.curve.values()[i].into(),
            single[i].0.into(),
            q_text(&mc.argmax[i]).into(),
            q_text(&single[i].1).into(),
        ])?;
    }
    ctx.table("", &ct)?;

    let single_limit = set.maximize(|q| ex_single_limit(q, d)).0;
    let sv: Vec<f64> = single.iter().map(|s| s.0).collect();
    let mut rt = Table::new(["R", "Eex_prime", "Eex", "flag"]);
    for r in linear_grid(0.0, (d.size() as f64).ln(), m.grids.r_points) {
        let weak = mc.rate_sup(r);
        let values: Vec<f64> = grid.iter().zip(&sv).map(|(rho, v)| v - rho * r).collect();
        let mut strong = refine_grid_max(&grid, &values, |rho| {
            let i = mc.curve.bracket(rho);
            [i, (i + 1).min(grid.len() - 1)]
                .iter()
                .map(|&k| ex_single_dual(&single[k].1, rho, d).map_or(f64::NEG_INFINITY, |s| s.value))
                .fold(f64::NEG_INFINITY, f64::max)
                - rho * r
        });
        if strong.attainment == Attainment::Truncated && r == 0.0 {
            strong.value = single_limit;
        }
        let f = ctx.flag(weak.attainment.is_truncation() || strong.attainment.is_truncation());
        rt.push(vec![r.into(), weak.value.into(), strong.value.into(), f])?;
    }
    ctx.table("-rates", &rt)?;
    ctx.manifest.num("limit.Ex_prime", mc.limit);
    ctx.manifest.num("limit.Ex", single_limit);
    Ok(())
}

fn summary_row(t: &mut Table, ctx: &mut Ctx, name: &str, e: &JointExponent) -> anyhow::Result<()> {
    let f = ctx.flag(e.attainment.is_truncation());
    ctx.manifest.num(&format!("{name}.value"), e.value);
    t.push(vec![
        name.into(),
        e.value.into(),
        e.arg.into(),
        attainment_text(e.attainment).into(),
        e.limit.unwrap_or(f64::INFINITY).into(),
        f,
    ])
}

fn joint(m: &Model, opts: &Options, ctx: &mut Ctx) -> anyhow::Result<()> {
    let set = m.input_set()?;
    let mc = MaxCurve::build(&m.distances, &set, &m.grids.rho_grid())?;
    let mut t = Table::new(["R", "source_term", "channel_term", "sum", "flag"]);
    for r in linear_grid(0.0, m.source.max_rate(), m.grids.r_points) {
        let s = scaled_source_exponent(&m.source, r);
        let c = mc.rate_sup(r);
        let f = ctx.flag(c.attainment.is_truncation());
        t.push(vec![r.into(), s.into(), c.value.into(), (s + c.value).into(), f])?;
    }
    ctx.table("", &t)?;

    let mut st = Table::new(["quantity", "value", "arg", "attainment", "limit", "flag"]);
    let primal = primal_from_curve(&m.source, &mc, &m.grids);
    summary_row(&mut st, ctx, "EJ2", &primal)?;
    let dual = dual_from_curve(&m.source, mc, &m.grids)?;
    summary_row(&mut st, ctx, "dual", &dual.exponent)?;
    if m.family.is_none() {
        let single = single_class_dual_exponent(&m.source, &m.distances, &m.grids)?;
        summary_row(&mut st, ctx, "single_class_dual", &single)?;
        if opts.ej1 || m.channel.input_size() == 2 {
            let e1 = joint_exponent_ej1(&m.source, &m.distances, &m.grids)?;
            summary_row(&mut st, ctx, "EJ1", &e1)?;
        }
    }
    ctx.manifest.num("gap.EJ2_minus_dual", primal.value - dual.exponent.value);
    ctx.table("-summary", &st)
}

fn hull(m: &Model, ctx: &mut Ctx) -> anyhow::Result<()> {
    let set = m.input_set()?;
    let mc = MaxCurve::build(&m.distances, &set, &m.grids.rho_grid())?;
    let h = upper_concave_hull(&mc.curve)?;
    let verts = hull_vertices(&mc.curve)?;
    let mut t = Table::new(["lambda", "Ex_prime", "hull", "biconjugate", "vertex", "q_argmax", "flag"]);
    let mut max_gap: f64 = 0.0;
    for (i, &lam) in mc.curve.grid().iter().enumerate() {
        let v = mc.curve.values()[i];
        let hv = h.values()[i];
        max_gap = max_gap.max(hv - v);
        let b = biconjugate_eval(&mc.curve, lam)?;
        let f = ctx.flag(hv < v);
        t.push(vec![
            lam.into(),
            v.into(),
            hv.into(),
            b.into(),
            usize::from(verts.binary_search(&i).is_ok()).into(),
            q_text(&mc.argmax[i]).into(),
            f,
        ])?;
    }
    ctx.manifest.set("hull.vertices", verts.len());
    ctx.manifest.num("hull.max_gap", max_gap);
    ctx.manifest.num("limit.Ex_prime", mc.limit);
    ctx.table("", &t)
}

/// `n = k/t` when it is an integer.
fn blocklength(k: usize, t: f64) -> Option<usize> {
    let n = k as f64 / t;
    let r = n.round();
    ((n - r).abs() <= 1e-9 * n.max(1.0) && r >= 1.0).then_some(r as usize)
}

fn partition(m: &Model, opts: &Options, ctx: &mut Ctx) -> anyhow::Result<()> {
    let k = m.config.sim.k;
    let set = m.input_set()?;
    let tc: TwoClassPlan = build_two_class_plan_over(&m.source, &m.distances, &set, k, &m.grids)?;
    let letters = m.source.alphabet_size();
    let mut header: Vec<String> = (0..letters).map(|i| format!("n{i}")).collect();
    header.extend(["rate", "class", "primal", "dual", "class_score", "flag"].map(String::from));
    let mut t = Table::new(header);
    for row in &tc.table.rows {
        let mut cells: Vec<Cell> = row.counts.iter().map(|&c| c.into()).collect();
        let f = ctx.flag(row.flagged);
        cells.extend([
            row.rate.into(),
            row.class.into(),
            row.primal.into(),
            row.dual.into(),
            row.class_score.into(),
            f,
        ]);
        t.push(cells)?;
    }
    ctx.table("", &t)?;

    let n = opts.n.as_ref().and_then(|v| v.first().copied()).or_else(|| blocklength(k, m.source.t()));
    let feas = n.map(|n| check_feasibility(&tc.plan, n)).transpose()?;
    let mut ct = Table::new(["class", "q", "rho", "lambda", "members", "composition", "log_codewords", "log_messages", "margin"]);
    for (c, cls) in tc.plan.classes.iter().enumerate() {
        let (comp, lc, lm, margin) = match &feas {
            Some(f) => {
                let cf = &f.classes[c];
                let comp = cf.composition.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
                (comp, cf.log_codewords, cf.log_messages, cf.margin)
            }
            None => (String::new(), f64::INFINITY, f64::INFINITY, f64::INFINITY),
        };
        ct.push(vec![
            c.into(),
            q_text(&cls.q).into(),
            cls.rho.into(),
            cls.lambda.into(),
            tc.plan.members(c).len().into(),
            comp.into(),
            lc.into(),
            lm.into(),
            margin.into(),
        ])?;
    }
    ctx.table("-classes", &ct)?;
    let man = &mut ctx.manifest;
    man.set("k", k);
    man.num("lambda0", tc.lambda0);
    man.num("lambda1", tc.lambda1);
    man.num("lambda2", tc.lambda2);
    man.num("exponent", tc.exponent);
    man.num("dual_value", tc.dual_value);
    man.set("worst_type", json(&tc.table.rows[tc.table.worst_type].counts));
    if tc.plan.classes.len() == 2 {
        let th = two_class_threshold(&tc.plan.classes[0], &tc.plan.classes[1], &m.source, &m.distances)?;
        man.num("threshold.r0", th.r0);
        man.set("threshold.class0_below", th.first_below);
    }
    if let (Some(n), Some(f)) = (n, &feas) {
        man.set("n", n);
        man.set("feasible", f.feasible);
        if !f.feasible && opts.n.is_some() {
            bail!("partition is infeasible at n = {n}");
        }
    }
    Ok(())
}

fn certify(m: &Model, ctx: &mut Ctx) -> anyhow::Result<()> {
    let rep = duality_report(&m.source, &m.distances, &m.grids)?;
    let mut t = Table::new(["quantity", "rate", "primal", "dual", "gap", "flag"]);
    for r in &rep.rows {
        let f = ctx.flag(r.flagged);
        t.push(vec![r.quantity.as_str().into(), r.rate.into(), r.primal.into(), r.dual.into(), r.gap.into(), f])?;
    }
    let d = &m.distances;
    let nx = d.size();
    let mut oracle_miss = 0;
    if nx <= 3 {
        let q = Distribution::uniform(nx);
        let res = if nx == 2 { 0.01 } else { 0.1 };
        let slack = lipschitz_slack(d, res);
        let top = ex_prime_limit(&q, d).min((nx as f64).ln());
        for r in linear_grid(0.0, (nx as f64).ln(), 6) {
            let solver = eex_prime_primal(&q, r, d)?;
            let oracle = brute_force_weak_exponent(&q, r, d, res)?;
            let gap = (solver - oracle).abs();
            if gap > 5.0 * res.max(slack.min(res)) && solver.is_finite() {
                oracle_miss += 1;
            }
            let f = ctx.flag(!solver.is_finite());
            t.push(vec!["weak_oracle".into(), r.into(), solver.into(), oracle.into(), gap.into(), f])?;
        }
        if nx == 2 {
            for r in linear_grid(0.0, (nx as f64).ln(), 6) {
                let solver = eex_ckm_primal(&q, r, d)?;
                let oracle = brute_force_ckm_exponent(&q, r, d, 1e-4)?;
                let gap = (solver - oracle).abs();
                if gap > 1e-3 && solver.is_finite() {
                    oracle_miss += 1;
                }
                let f = ctx.flag(!solver.is_finite());
                t.push(vec!["ckm_oracle".into(), r.into(), solver.into(), oracle.into(), gap.into(), f])?;
            }
        }
        ctx.manifest.num("oracle.weak_resolution", res);
        ctx.manifest.num("oracle.limit", top);
    }
    ctx.table("", &t)?;
    let man = &mut ctx.manifest;
    man.num("max_source_gap", rep.max_source_gap);
    man.num("max_channel_gap", rep.max_channel_gap);
    man.num("joint_gap", rep.joint_gap);
    man.set("unexplained", rep.unexplained);
    man.set("oracle_misses", oracle_miss);
    Ok(())
}

fn simulate(m: &Model, opts: &Options, ctx: &mut Ctx) -> anyhow::Result<()> {
    let sim = &m.config.sim;
    let set = m.input_set()?;
    let method = if opts.exact { Method::Exact } else { Method::MonteCarlo };
    let letters = m.source.alphabet_size();
    let mut t = Table::new([
        "n",
        "k",
        "best_of",
        "trials",
        "p_e",
        "ci_low",
        "ci_high",
        "sigma",
        "empirical_exponent",
        "bound_pe",
        "bound_exponent",
        "flag",
    ]);
    let mut header: Vec<String> = vec!["n".into()];
    header.extend((0..letters).map(|i| format!("n{i}")));
    header.extend(["class", "trials", "errors", "rate"].map(String::from));
    let mut tt = Table::new(header);
    for &n in &sim.n_list {
        let kf = m.source.t() * n as f64;
        let k = kf.round() as usize;
        if (kf - k as f64).abs() > 1e-9 || k == 0 {
            bail!("t·n = {kf} is not a positive integer for n = {n}");
        }
        let tc = build_two_class_plan_over(&m.source, &m.distances, &set, k, &m.grids)?;
        let seed = derive_seed(sim.seed, 3, n as u64);
        let best = expurgate_best_of(&tc.plan, &m.channel, &m.source, n, sim.best_of, sim.trials, seed, method)?;
        let r = &best.result;
        let bound = finite_n_bound(&tc.table, k, letters, n);
        let f = ctx.flag(tc.table.rows.iter().any(|r| r.flagged));
        t.push(vec![
            n.into(),
            k.into(),
            sim.best_of.into(),
            r.trials.into(),
            r.p_e.into(),
            r.ci_low.into(),
            r.ci_high.into(),
            r.sigma.into(),
            r.empirical_exponent.into(),
            bound.into(),
            tc.exponent.into(),
            f,
        ])?;
        for (i, te) in r.per_type.iter().enumerate() {
            let mut cells: Vec<Cell> = vec![n.into()];
            cells.extend(te.counts.iter().map(|&c| Cell::from(c)));
            cells.extend([
                tc.plan.assignment[i].into(),
                te.trials.into(),
                te.errors.into(),
                te.rate.into(),
            ]);
            tt.push(cells)?;
        }
        ctx.manifest.set(&format!("seed.n{n}"), seed);
        ctx.manifest.set(&format!("chosen.n{n}"), best.chosen);
    }
    ctx.manifest.set("sim.seed", sim.seed);
    ctx.manifest.set("sim.trials", sim.trials);
    ctx.manifest.set("sim.best_of", sim.best_of);
    ctx.manifest.set("sim.method", if opts.exact { "exact" } else { "monte_carlo" });
    ctx.table("", &t)?;
    ctx.table("-types", &tt)
}
