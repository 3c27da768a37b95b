//! Writes the engineered presets. For each channel the source and rate are
//! chosen so that the type `P_i = (3/4, 1/4)`, a type for both k = 8 and
//! k = 16, sits exactly at the optimal rate of the dual exponent:
//! `P_V ∝ P_i^{1+λ₀}` and `t = R*/H(P_i)` with `R*` a supergradient of the
//! hull at `λ₀`.
//!
//! Run with `cargo run --release -p jscc-cli --example engineer_presets`.

use jscc_cli::config::{preset_path, ChannelSpec, Config, GridSpec, SimSpec, SourceSpec};
use jscc_core::channel::bhattacharyya;
use jscc_core::hull::{hull_vertices, ExponentCurve};
use jscc_core::joint::{CodewordFamily, Grids, InputSet, MaxCurve};
use jscc_core::prob::{entropy, Channel, Distribution};

const TYPE: [f64; 2] = [0.75, 0.25];
const TARGET_LAMBDA: f64 = 1.3;

fn source_for(lambda0: f64, rate: f64) -> SourceSpec {
    let w: Vec<f64> = TYPE.iter().map(|p| p.powf(1.0 + lambda0)).collect();
    let s: f64 = w.iter().sum();
    let first = w[0] / s;
    let h = entropy(&Distribution::new(TYPE.to_vec()).unwrap());
    SourceSpec {
        probs: vec![first, 1.0 - first],
        t: rate / h,
    }
}

fn slope(c: &ExponentCurve, a: usize, b: usize) -> f64 {
    (c.values()[b] - c.values()[a]) / (c.grid()[b] - c.grid()[a])
}

/// Vertex nearest `TARGET_LAMBDA` and the midpoint of its chord slopes.
fn at_vertex(mc: &MaxCurve) -> (f64, f64) {
    let c = &mc.curve;
    let v = hull_vertices(c).unwrap();
    let p = (1..v.len() - 1)
        .min_by(|&a, &b| {
            let da = (c.grid()[v[a]] - TARGET_LAMBDA).abs();
            let db = (c.grid()[v[b]] - TARGET_LAMBDA).abs();
            da.total_cmp(&db)
        })
        .unwrap();
    let r = 0.5 * (slope(c, v[p - 1], v[p]) + slope(c, v[p], v[p + 1]));
    (c.grid()[v[p]], r)
}

/// Hull bridge with the largest gap over the curve: its chord slope and
/// the geometric midpoint of its ends.
fn on_bridge(mc: &MaxCurve) -> (f64, f64) {
    let c = &mc.curve;
    let v = hull_vertices(c).unwrap();
    let gap = |a: usize, b: usize| {
        (a + 1..b)
            .map(|i| c.values()[a] + slope(c, a, b) * (c.grid()[i] - c.grid()[a]) - c.values()[i])
            .fold(0.0, f64::max)
    };
    let (a, b) = v
        .windows(2)
        .map(|w| (w[0], w[1]))
        .max_by(|x, y| gap(x.0, x.1).total_cmp(&gap(y.0, y.1)))
        .unwrap();
    println!("  bridge [{:.4}, {:.4}], gap {:.3e}", c.grid()[a], c.grid()[b], gap(a, b));
    ((c.grid()[a] * c.grid()[b]).sqrt(), slope(c, a, b))
}

fn round2(q: &Distribution) -> Vec<f64> {
    let mut v: Vec<f64> = q.probs().iter().map(|p| (p * 100.0).round() / 100.0).collect();
    let last = v.len() - 1;
    let head: f64 = v[..last].iter().sum();
    v[last] = ((1.0 - head) * 100.0).round() / 100.0;
    v
}

fn write(name: &str, cfg: &Config) {
    let path = preset_path(name);
    let text = serde_json::to_string_pretty(cfg).unwrap() + "\n";
    std::fs::write(&path, text).unwrap();
    println!("{name}: t = {:.6}, P_V = {:?}", cfg.source.t, cfg.source.probs);
}

fn main() {
    let grids = Grids::default();
    let spec = GridSpec::default();
    let sim = SimSpec {
        k: 8,
        n_list: vec![8],
        trials: 100_000,
        best_of: 8,
        seed: 7,
    };
    let rho = grids.rho_grid();

    let bsc = vec![vec![0.9, 0.1], vec![0.1, 0.9]];
    let d = bhattacharyya(&Channel::new(bsc.clone()).unwrap());
    let mc = MaxCurve::build(&d, &InputSet::Simplex(grids.q_grid(2).unwrap()), &rho).unwrap();
    let (l0, r) = at_vertex(&mc);
    println!("  lambda0 = {l0:.6}, R* = {r:.6}");
    let cfg = |source, rows: &Vec<Vec<f64>>, family| Config {
        source,
        channel: ChannelSpec { rows: rows.clone() },
        grids: spec.clone(),
        sim: sim.clone(),
        family,
    };
    write("eng_bsc01", &cfg(source_for(l0, r), &bsc, None));

    // The maximizing composition of this channel moves with ρ.
    let tern = vec![
        vec![0.9877, 0.0123, 0.0],
        vec![0.0972, 0.8926, 0.0102],
        vec![0.0, 0.003, 0.997],
    ];
    let d = bhattacharyya(&Channel::new(tern.clone()).unwrap());
    let mc = MaxCurve::build(&d, &InputSet::Simplex(grids.q_grid(3).unwrap()), &rho).unwrap();
    println!(
        "  argmax at rho = 1: {:?}, at rho_max: {:?}",
        mc.argmax[0].probs(),
        mc.argmax[rho.len() - 1].probs()
    );
    let (l0, r) = at_vertex(&mc);
    println!("  lambda0 = {l0:.6}, R* = {r:.6}");
    write("eng_ternary", &cfg(source_for(l0, r), &tern, None));

    // Two fixed compositions whose curves cross; the hull bridges the kink.
    let members = vec![round2(&mc.argmax[0]), round2(&mc.argmax[rho.len() - 1])];
    let family = CodewordFamily::new(members.iter().map(|m| Distribution::new(m.clone()).unwrap()).collect()).unwrap();
    let fc = MaxCurve::build(&d, &InputSet::Family(family), &rho).unwrap();
    let (l0, r) = on_bridge(&fc);
    println!("  lambda0 = {l0:.6}, R* = {r:.6}");
    write("eng_family", &cfg(source_for(l0, r), &tern, Some(members)));
}
