//! Subcommand implementations.
//!
//! Each command builds its objects from the configuration, writes one or
//! two artifacts into the output directory, prints a one-line summary per
//! artifact on stdout, and returns whether the requested checks passed.
//! All output is deterministic given (config, seed).

use crate::config::RunConfig;
use crate::output::{display_path, num, OutputContext};
use logsob::concentration::empirical_deviation;
use logsob::criteria::{bakry_emery, barthe_roberto, hardy_constant, muckenhoupt_poincare, Side};
use logsob::functionals::{default_family, estimate_lsi_constant};
use logsob::numeric::log_grid;
use logsob::potential::{check_hypothesis, rise_point};
use logsob::{
    BoundRegime, CriterionReport, LegendreEngine, LogConcaveMeasure, TailBound, TestFunction,
};
use serde::Serialize;

/// `check-h`: growth-window hypothesis report. Passes iff the window holds.
pub fn check_h(cfg: &RunConfig, ctx: &OutputContext) -> anyhow::Result<bool> {
    let p = cfg.build_potential()?;
    let rep = check_hypothesis(&p, cfg.epsilon, cfg.big_m, &cfg.grid)?;
    let path = ctx.write_json("check_h.json", &rep)?;
    println!(
        "check-h: {} (ratio in [{:.6}, {:.6}]) -> {}",
        if rep.passed { "passed" } else { "failed" },
        rep.ratio_min,
        rep.ratio_max,
        display_path(&path)
    );
    if let Some(f) = &rep.failure {
        println!("check-h: {f}");
    }
    Ok(rep.passed)
}

/// `transform`: tabulate Φ, Φ', Φ* and the mixed cost H on a log grid.
pub fn transform(cfg: &RunConfig, ctx: &OutputContext) -> anyhow::Result<bool> {
    let p = cfg.build_potential()?;
    let engine = LegendreEngine::new(&p);
    let h = engine.build_h(cfg.b_const)?;
    let x_hi = rise_point(&p, 0.0, 40.0)?;
    let mut xs = vec![0.0];
    xs.extend(log_grid(x_hi * 1e-4, x_hi, 1024));
    let mut csv = ctx.csv("transform.csv", &["x", "phi", "dphi", "phi_star", "h_cost"]);
    csv.comment(&format!("potential: {}", p.describe()));
    csv.comment(&format!("cost: {}", h.describe()));
    for &x in &xs {
        let phi_star = engine.legendre(x)?;
        let cost = h.eval(x)?;
        csv.row(&[num(x), num(p.value(x)), num(p.deriv(x)), num(phi_star), num(cost)]);
    }
    let path = csv.finish()?;
    println!("transform: {} rows -> {}", xs.len(), display_path(&path));
    Ok(true)
}

#[derive(Serialize)]
struct NormalizeSummary {
    potential: String,
    z_const: f64,
    x_max: f64,
    truncation_rise: f64,
    quantiles: Vec<(f64, f64)>,
    upper_tails: Vec<(f64, f64)>,
    mean_abs: f64,
    second_moment: f64,
}

/// `normalize`: build the probability measure and summarize it.
pub fn normalize(cfg: &RunConfig, ctx: &OutputContext) -> anyhow::Result<bool> {
    let p = cfg.build_potential()?;
    let m = LogConcaveMeasure::normalize_with(&p, &cfg.quadrature)?;
    let mut quantiles = Vec::new();
    for u in [0.5, 0.75, 0.9, 0.99, 0.999] {
        quantiles.push((u, m.inverse_cdf(u)?));
    }
    let mut upper_tails = Vec::new();
    for x in [1.0, 2.0, 4.0, 8.0] {
        upper_tails.push((x, m.tail(x)));
    }
    let summary = NormalizeSummary {
        potential: p.describe(),
        z_const: m.z_const(),
        x_max: m.x_max(),
        truncation_rise: p.value(m.x_max()) - p.value(0.0),
        quantiles,
        upper_tails,
        mean_abs: m.expect(|x| x.abs())?,
        second_moment: m.expect(|x| x * x)?,
    };
    let path = ctx.write_json("normalize.json", &summary)?;
    println!(
        "normalize: Z = {:.12e}, support truncated at {:.6} -> {}",
        summary.z_const,
        summary.x_max,
        display_path(&path)
    );
    Ok(true)
}

fn criterion_passes(rep: &CriterionReport) -> bool {
    !rep.applicable || (rep.value.is_finite() && !rep.possibly_unbounded)
}

/// `criteria`: every criterion constant with its two-sided bracket.
/// Passes iff each applicable criterion certifies a finite constant.
pub fn criteria(cfg: &RunConfig, ctx: &OutputContext) -> anyhow::Result<bool> {
    let p = cfg.build_potential()?;
    let m = LogConcaveMeasure::normalize_with(&p, &cfg.quadrature)?;
    let z = m.z_const();
    let pot = p.clone();
    let inv = move |t: f64| -> logsob::Result<f64> { Ok(z * pot.value(t).exp()) };
    let reports = vec![
        hardy_constant(&m, &inv, Side::Right, &cfg.grid)?,
        hardy_constant(&m, &inv, Side::Left, &cfg.grid)?,
        muckenhoupt_poincare(&m, &cfg.grid)?,
        barthe_roberto(&m, cfg.big_m, &cfg.grid)?,
        bakry_emery(&p, &cfg.grid)?,
    ];
    let path = ctx.write_json("criteria.json", &reports)?;
    let mut all_pass = true;
    for rep in &reports {
        let status = if !rep.applicable {
            "not applicable"
        } else if criterion_passes(rep) {
            "certified"
        } else {
            all_pass = false;
            "NOT CERTIFIED"
        };
        println!(
            "criteria: {} = {:.6e} in [{:.6e}, {:.6e}] ({status})",
            rep.kind, rep.value, rep.bracket_low, rep.bracket_high
        );
    }
    println!("criteria: -> {}", display_path(&path));
    Ok(all_pass)
}

/// `lsi-scan`: best entropy/energy ratio over the standard test-function
/// family. Passes iff the scan certifies a finite positive constant with
/// no counterexample member.
pub fn lsi_scan(cfg: &RunConfig, ctx: &OutputContext) -> anyhow::Result<bool> {
    let p = cfg.build_potential()?;
    let m = LogConcaveMeasure::normalize_with(&p, &cfg.quadrature)?;
    let engine = LegendreEngine::new(&p);
    let h = engine.build_h(cfg.b_const)?;
    let family = default_family(m.inverse_cdf(0.95)?);
    let rep = estimate_lsi_constant(&m, &h, &family)?;
    let json_path = ctx.write_json("lsi_scan.json", &rep)?;
    let mut csv = ctx.csv("lsi_scan.csv", &["label", "entropy", "variance", "energy", "score"]);
    csv.comment(&format!("mode: {}", rep.mode));
    for s in &rep.members {
        csv.row(&[
            s.label.replace(',', ";"),
            num(s.entropy),
            num(s.variance),
            num(s.energy),
            num(s.score),
        ]);
    }
    let csv_path = csv.finish()?;
    println!(
        "lsi-scan: best ratio {:.6e} over {} members -> {}, {}",
        rep.estimate,
        rep.members.len(),
        display_path(&json_path),
        display_path(&csv_path)
    );
    if let Some(c) = &rep.counterexample {
        println!("lsi-scan: counterexample: {c}");
        return Ok(false);
    }
    Ok(rep.estimate.is_finite() && rep.estimate > 0.0)
}

#[derive(Serialize)]
struct ConcentrationRow {
    lam: f64,
    raw_bound: f64,
    capped_bound: f64,
    regime: BoundRegime,
    t_star: f64,
    empirical: f64,
    stderr: f64,
    dominated: bool,
}

#[derive(Serialize)]
struct ConcentrationReport {
    a_const: f64,
    n: usize,
    zeta: f64,
    trials: usize,
    mu: f64,
    observable: String,
    base_split: f64,
    regime_split: f64,
    rows: Vec<ConcentrationRow>,
    dominated: bool,
}

/// `concentration`: certified deviation bounds for the empirical mean of a
/// clamped Lipschitz observable against Monte-Carlo frequencies. Passes
/// iff every empirical frequency is below its bound plus three standard
/// errors.
pub fn concentration(cfg: &RunConfig, ctx: &OutputContext) -> anyhow::Result<bool> {
    let p = cfg.build_potential()?;
    let m = LogConcaveMeasure::normalize_with(&p, &cfg.quadrature)?;
    let engine = LegendreEngine::new(&p);
    let h = engine.build_h(cfg.b_const)?;
    let tb = TailBound::new(cfg.a_const, h)?;
    let c = cfg.clamp_at;
    if !(c > 0.0 && c.is_finite()) {
        anyhow::bail!("clamp_at must be positive, got {c}");
    }
    let f = TestFunction::PiecewiseLinear { knots: vec![(-c, -c), (c, c)] };
    let n = cfg.deviation_n;
    let zeta = 1.0 / n as f64;
    let table = empirical_deviation(&m, &f, n, &cfg.deviation_grid, cfg.trials, cfg.seed)?;
    let mut rows = Vec::new();
    let mut all = true;
    for r in &table.rows {
        let b = tb.bound(r.lam, n, zeta)?;
        let dominated = r.empirical <= b.capped + 3.0 * r.stderr;
        all &= dominated;
        rows.push(ConcentrationRow {
            lam: r.lam,
            raw_bound: b.raw,
            capped_bound: b.capped,
            regime: b.regime,
            t_star: b.t_star,
            empirical: r.empirical,
            stderr: r.stderr,
            dominated,
        });
    }
    let report = ConcentrationReport {
        a_const: tb.a_const(),
        n,
        zeta,
        trials: cfg.trials,
        mu: table.mu,
        observable: table.observable.clone(),
        base_split: tb.base_split(),
        regime_split: tb.regime_split(n, zeta),
        rows,
        dominated: all,
    };
    let json_path = ctx.write_json("concentration.json", &report)?;
    let mut csv = ctx.csv(
        "concentration.csv",
        &["lambda", "raw_bound", "capped_bound", "regime", "t_star", "empirical", "stderr"],
    );
    csv.comment(&format!(
        "observable: {}; n: {n}; trials: {}; a_const: {}",
        report.observable, report.trials, report.a_const
    ));
    for r in &report.rows {
        csv.row(&[
            num(r.lam),
            num(r.raw_bound),
            num(r.capped_bound),
            r.regime.to_string(),
            num(r.t_star),
            num(r.empirical),
            num(r.stderr),
        ]);
    }
    let csv_path = csv.finish()?;
    println!(
        "concentration: {} levels, domination {} -> {}, {}",
        report.rows.len(),
        if all { "holds" } else { "VIOLATED" },
        display_path(&json_path),
        display_path(&csv_path)
    );
    Ok(all)
}

/// `lemmas`: verify the auxiliary inequalities and report one verdict per
/// lemma. Passes iff every verdict passes. Errors out (nonzero exit)
/// when the potential fails the growth-window precondition.
pub fn lemmas(cfg: &RunConfig, ctx: &OutputContext) -> anyhow::Result<bool> {
    let p = cfg.build_potential()?;
    let verdicts =
        logsob::run_battery(&p, cfg.epsilon, cfg.big_m, cfg.c_h, cfg.lambda, &cfg.grid)?;
    let path = ctx.write_json("lemmas.json", &verdicts)?;
    let mut all = true;
    for v in &verdicts {
        all &= v.passed;
        println!(
            "lemmas: {} {} ({} constants, {} violations)",
            v.lemma,
            if v.passed { "passed" } else { "FAILED" },
            v.found_constants.len(),
            v.violation_points.len()
        );
    }
    println!("lemmas: -> {}", display_path(&path));
    Ok(all)
}

/// `sample`: seeded draws from the normalized measure.
pub fn sample(cfg: &RunConfig, ctx: &OutputContext) -> anyhow::Result<bool> {
    let p = cfg.build_potential()?;
    let m = LogConcaveMeasure::normalize_with(&p, &cfg.quadrature)?;
    let xs = m.sample_stream(cfg.seed, cfg.sample_n)?;
    let mut csv = ctx.csv("samples.csv", &["index", "x"]);
    for (i, &x) in xs.iter().enumerate() {
        csv.row(&[i.to_string(), num(x)]);
    }
    let path = csv.finish()?;
    println!("sample: {} draws -> {}", xs.len(), display_path(&path));
    Ok(true)
}
