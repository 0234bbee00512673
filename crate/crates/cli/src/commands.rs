use aniso_core::constants::{curse_study, kappa, kappa_bound, total_constant};
use aniso_core::domains::{char_fl_norm, ko_bound, lebedev_admissible, Domain, Shape};
use aniso_core::grid::TensorGrid;
use aniso_core::inclusion::{
    high_degree_s, refine, verify_fl_embedding, verify_high_degree_inclusion, verify_low_degree_inclusion,
    verify_mixed_holder, TestFunction, VerificationReport,
};
use aniso_core::norms::{
    bochner_sobolev_norm, fourier_lebesgue_norm, mixed_lebesgue_norm, spectral_barron_norm, DerivativeMode,
    MixedExponents, SobolevOrder,
};
use aniso_core::shallownet::{
    contour_rows, gaussian_target, budget_comparison, rate_experiment, train as train_run, HeatTarget, LossTarget,
    LossQuadrature, ModelKind, TrainRun,
};
use aniso_core::weights::WeightSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{require, Config, TargetKind};
use crate::output::RunOutput;
use crate::plot::{heat_map, line_plot, Series, PALETTE};
use crate::UsageError;

type Res = anyhow::Result<()>;

fn color(i: usize) -> [u8; 3] {
    PALETTE[i % PALETTE.len()]
}

fn ladder_grids(cfg: &Config, split: (usize, usize)) -> anyhow::Result<Vec<TensorGrid>> {
    let g = &cfg.grid;
    if g.ladder.is_empty() {
        return Err(UsageError("grid.ladder must list at least one size".into()).into());
    }
    Ok(g.ladder.iter().map(|&n| TensorGrid::uniform(split.0, split.1, g.window.0, g.window.1, n)).collect::<Result<_, _>>()?)
}

fn block_domain(expr: Option<&str>, d: usize) -> anyhow::Result<Domain> {
    Ok(match expr {
        Some(e) => Domain::parse(e)?,
        None => Domain::cube(d, -1.0, 1.0)?,
    })
}

/// Named members of the test family; random members draw from `rng`.
fn family(
    names: &[String],
    draws: usize,
    split: (usize, usize),
    u: &Domain,
    v: &Domain,
    rng: &mut ChaCha8Rng,
) -> anyhow::Result<Vec<(String, TestFunction)>> {
    if names.is_empty() {
        return Err(UsageError("family must name at least one of gaussian, mixture, trig".into()).into());
    }
    let mut out = Vec::new();
    for name in names {
        match name.as_str() {
            "gaussian" => out.push(("gaussian".into(), TestFunction::standard_gaussian(split))),
            "mixture" => {
                for k in 0..draws {
                    out.push((format!("mixture-{k}"), TestFunction::random_mixture(rng, u, v)));
                }
            }
            "trig" => {
                for k in 0..draws {
                    out.push((format!("trig-{k}"), TestFunction::random_trig(rng, split.0 + split.1, 4, 3, Some(1.0))));
                }
            }
            other => return Err(UsageError(format!("unknown test function `{other}`; use gaussian, mixture or trig")).into()),
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct NormRow {
    function: String,
    points: usize,
    norm: &'static str,
    p1: f64,
    p2: f64,
    value: f64,
    tail: f64,
    unconverged: bool,
}

pub fn norms(cfg: &Config, seed: u64, out: &mut RunOutput) -> Res {
    let nc = require(&cfg.norms, "norms")?;
    let omega = WeightSpec::parse(&nc.weight, nc.split)?;
    let u = block_domain(nc.u.as_deref(), nc.split.0)?;
    let v = block_domain(nc.v.as_deref(), nc.split.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fam = family(&nc.family, nc.draws, nc.split, &u, &v, &mut rng)?;
    let grids = ladder_grids(cfg, nc.split)?;
    let o = SobolevOrder::new(nc.sobolev_order.0, nc.sobolev_order.1);
    let unit = WeightSpec::unit(nc.split);
    let mut rows = Vec::new();
    for (name, f) in &fam {
        for grid in &grids {
            let g = f.sample(grid);
            let n = grid.axis(0).points;
            let b = spectral_barron_norm(&g, &omega)?;
            rows.push(NormRow { function: name.clone(), points: n, norm: "barron", p1: 1.0, p2: 1.0, value: b.value, tail: b.tail, unconverged: b.unconverged });
            for &(p1, p2) in &nc.exponents {
                let e = MixedExponents::new(p1, p2)?;
                let fl = fourier_lebesgue_norm(&g, &omega, e)?;
                rows.push(NormRow { function: name.clone(), points: n, norm: "fourier_lebesgue", p1, p2, value: fl.value, tail: fl.tail, unconverged: fl.unconverged });
                let fl0 = fourier_lebesgue_norm(&g, &unit, e)?;
                rows.push(NormRow { function: name.clone(), points: n, norm: "fourier_lebesgue_unweighted", p1, p2, value: fl0.value, tail: fl0.tail, unconverged: fl0.unconverged });
                let ml = mixed_lebesgue_norm(&g, e, Some(&u), Some(&v))?;
                rows.push(NormRow { function: name.clone(), points: n, norm: "mixed_lebesgue", p1, p2, value: ml, tail: 0.0, unconverged: false });
                let bs = bochner_sobolev_norm(&g, o, e, Some(&u), Some(&v), DerivativeMode::Spectral)?;
                rows.push(NormRow { function: name.clone(), points: n, norm: "bochner_sobolev", p1, p2, value: bs, tail: 0.0, unconverged: false });
            }
        }
    }
    let mut w = out.csv("norms.csv")?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;

    // one series per (function, norm, exponents) across the ladder
    let finest = *cfg.grid.ladder.last().expect("ladder checked");
    let mut series = Vec::new();
    let mut worst_drift: f64 = 0.0;
    for r in rows.iter().filter(|r| r.points == finest) {
        let same: Vec<&NormRow> =
            rows.iter().filter(|s| s.function == r.function && s.norm == r.norm && s.p1 == r.p1 && s.p2 == r.p2).collect();
        if let [.., a, b] = same.as_slice() {
            let drift = if b.value == 0.0 { (a.value - b.value).abs() } else { ((b.value - a.value) / b.value).abs() };
            worst_drift = worst_drift.max(drift);
        }
        if r.unconverged {
            out.unconverged(format!("{} norm of {} at ({}, {}) on {} points", r.norm, r.function, r.p1, r.p2, r.points));
        }
        let pts = same.iter().map(|s| ((s.points as f64).log2(), s.value.max(1e-300).log10())).collect();
        series.push(Series::line(pts, color(series.len())));
    }
    out.check("refinement_stable", worst_drift < 0.05, format!("largest relative change between the last two grids {worst_drift:.2e}"));
    let range = line_plot(&out.path("norms.png"), &series)?;
    out.info("norms_png_axes", ("log2 points", "log10 value", range))?;
    Ok(())
}

#[derive(Serialize)]
struct ReportRow {
    check: String,
    function: String,
    p1: f64,
    p2: f64,
    t1: f64,
    t2: f64,
    s1: f64,
    s2: f64,
    lhs: f64,
    rhs_without_constant: f64,
    ratio: f64,
    drift: f64,
    stable: bool,
}

impl ReportRow {
    fn from(function: &str, r: &VerificationReport) -> Self {
        let p = &r.parameters;
        let t = p.t.unwrap_or((f64::NAN, f64::NAN));
        let s = p.s.unwrap_or((f64::NAN, f64::NAN));
        ReportRow {
            check: p.check.clone(),
            function: function.into(),
            p1: p.p.0,
            p2: p.p.1,
            t1: t.0,
            t2: t.1,
            s1: s.0,
            s2: s.1,
            lhs: r.lhs,
            rhs_without_constant: r.rhs_without_constant,
            ratio: r.ratio,
            drift: r.drift(),
            stable: r.is_stable(),
        }
    }
}

enum Job {
    High { f: usize, p: (f64, f64), t: f64 },
    Low { f: usize, p: f64, t: (f64, f64) },
}

pub fn verify(cfg: &Config, seed: u64, out: &mut RunOutput) -> Res {
    let vc = require(&cfg.verify, "verify")?;
    let u = Domain::parse(&vc.u)?;
    let v = Domain::parse(&vc.v)?;
    let split = (u.dim(), v.dim());
    let omega = WeightSpec::parse(&vc.weight, split)?;
    let o = SobolevOrder::new(vc.sobolev_order.0, vc.sobolev_order.1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fam = family(&vc.family, vc.draws, split, &u, &v, &mut rng)?;
    let grids = ladder_grids(cfg, split)?;
    for c in &vc.checks {
        if !["high_degree", "low_degree", "holder", "embedding"].contains(&c.as_str()) {
            return Err(UsageError(format!("unknown check `{c}`; use high_degree, low_degree, holder, embedding")).into());
        }
    }
    let wants = |c: &str| vc.checks.iter().any(|x| x == c);

    let mut jobs = Vec::new();
    for f in 0..fam.len() {
        if wants("high_degree") {
            for &p in &vc.high_p {
                for &t in &vc.high_t {
                    jobs.push(Job::High { f, p, t });
                }
            }
        }
        if wants("low_degree") {
            for &p in &vc.low_p {
                for &t in &vc.low_t {
                    jobs.push(Job::Low { f, p, t });
                }
            }
        }
    }
    let sizes = cfg.grid.ladder.clone();
    let samples: Vec<Vec<_>> = fam.iter().map(|(_, f)| grids.iter().map(|g| f.sample(g)).collect()).collect();
    let at = |f: usize, n: usize| &samples[f][sizes.iter().position(|&m| m == n).expect("ladder size")];
    let results: Vec<Option<anyhow::Result<ReportRow>>> = jobs
        .par_iter()
        .map(|job| {
            let r = match *job {
                Job::High { f, p, t } => {
                    let s = (high_degree_s(t, p.0), high_degree_s(t, p.1));
                    // exponent combinations outside s ∈ (1, 2] have no inclusion to test
                    if !(s.0 > 1.0 && s.0 <= 2.0 && s.1 > 1.0 && s.1 <= 2.0) {
                        return None;
                    }
                    let e = match MixedExponents::new(p.0, p.1) {
                        Ok(e) => e,
                        Err(e) => return Some(Err(e.into())),
                    };
                    refine(&sizes, |n| verify_high_degree_inclusion(at(f, n), &omega, o, e, s, (t, t), &u, &v)).map(|r| (f, r))
                }
                Job::Low { f, p, t } => MixedExponents::uniform(p)
                    .and_then(|e| refine(&sizes, |n| verify_low_degree_inclusion(at(f, n), &omega, o, e, t, &u, &v)))
                    .map(|r| (f, r)),
            };
            Some(r.map(|(f, r)| ReportRow::from(&fam[f].0, &r)).map_err(Into::into))
        })
        .collect();
    let mut rows: Vec<ReportRow> = results.into_iter().flatten().collect::<anyhow::Result<_>>()?;

    let small = &grids[0];
    if wants("holder") {
        for k in 0..vc.random_draws {
            let f = TestFunction::random_trig(&mut rng, split.0 + split.1, 4, 3, None).sample(small);
            let p = (rng.random_range(1.0..3.0), rng.random_range(1.0..3.0));
            let q = (p.0 + rng.random_range(0.0..3.0), p.1 + rng.random_range(0.0..3.0));
            rows.push(ReportRow::from(&format!("trig-{k}"), &verify_mixed_holder(&f, p, q, &u, &v)?));
        }
    }
    if wants("embedding") {
        let th1 = WeightSpec::bessel_power(o.n1 as f64, (split.0, 0))?;
        let th2 = WeightSpec::bessel_power(o.n2 as f64, (split.1, 0))?;
        for k in 0..vc.random_draws {
            let f = TestFunction::random_mixture(&mut rng, &u, &v).sample(small);
            let t = (rng.random_range(1.0..2.0), rng.random_range(1.0..2.0));
            rows.push(ReportRow::from(&format!("mixture-{k}"), &verify_fl_embedding(&f, &omega, t, &th1, &th2)?));
        }
    }

    let mut w = out.csv("reports.csv")?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;

    let mut series = Vec::new();
    let mut max_ratio = serde_json::Map::new();
    for (i, check) in ["high_degree", "low_degree", "mixed_holder", "fl_embedding"].iter().enumerate() {
        let these: Vec<&ReportRow> = rows.iter().filter(|r| r.check == *check).collect();
        if these.is_empty() {
            continue;
        }
        let max = these.iter().map(|r| r.ratio).fold(0.0, f64::max);
        max_ratio.insert(check.to_string(), max.into());
        let pass = match *check {
            "high_degree" | "low_degree" => these.iter().all(|r| r.stable),
            _ => max <= 1.0 + 1e-6,
        };
        let detail = match *check {
            "high_degree" | "low_degree" => format!(
                "{} reports, max ratio {max:.4}, largest drift {:.2e}",
                these.len(),
                these.iter().map(|r| r.drift).fold(0.0, f64::max)
            ),
            _ => format!("{} reports, max ratio {max:.6}", these.len()),
        };
        out.check(check, pass, detail);
        series.push(Series::line(these.iter().enumerate().map(|(k, r)| (k as f64, r.ratio)).collect(), color(i)));
    }
    out.info("max_ratio", max_ratio)?;
    let range = line_plot(&out.path("ratios.png"), &series)?;
    out.info("ratios_png_axes", ("report index", "ratio", range))?;
    Ok(())
}

#[derive(Serialize)]
struct DomainRow {
    domain: String,
    dim: usize,
    volume: f64,
    s: f64,
    char_fl_norm: f64,
    char_diverges: bool,
    ko_bound: f64,
    ko_diverges: bool,
    lebedev_threshold: f64,
    lebedev_admissible: bool,
    ratio: f64,
}

pub fn domains(cfg: &Config, out: &mut RunOutput) -> Res {
    let dc = require(&cfg.domains, "domains")?;
    if dc.shapes.is_empty() || dc.s.is_empty() {
        return Err(UsageError("domains.shapes and domains.s must be non-empty".into()).into());
    }
    let mut rows = Vec::new();
    let mut plancherel: f64 = 0.0;
    let mut consistent = true;
    let mut lebedev = true;
    let mut series = Vec::new();
    for (i, expr) in dc.shapes.iter().enumerate() {
        let omega = Domain::parse(expr)?;
        let d = omega.dim();
        let points = match d {
            1 => dc.points.0,
            2 => dc.points.1,
            3 => dc.points.2,
            _ => return Err(UsageError(format!("{expr}: only dimensions 1 to 3 are tabulated")).into()),
        };
        let grid = TensorGrid::uniform(d, 0, -dc.half_width, dc.half_width, points)?;
        let threshold = 2.0 * d as f64 / (d as f64 + 1.0);
        let mut pts = Vec::new();
        for &s in &dc.s {
            let n = char_fl_norm(&omega, s, &grid)?;
            let k = if (1.0..=2.0).contains(&s) { Some(ko_bound(&omega, s)?) } else { None };
            let (kv, kd) = k.map_or((f64::NAN, false), |k| (k.value, k.diverges));
            if s == 2.0 {
                plancherel = plancherel.max((n.value - omega.volume().sqrt()).abs());
            }
            consistent &= kd || k.is_none() || !n.diverges;
            // only far from the threshold is the numerical divergence flag decisive
            if matches!(omega.shape(), Shape::Ball { .. }) && (s - threshold).abs() > 0.05 {
                lebedev &= n.diverges != lebedev_admissible(d, s);
            }
            if !n.diverges {
                pts.push((s, n.value));
            }
            rows.push(DomainRow {
                domain: omega.to_string(),
                dim: d,
                volume: omega.volume(),
                s,
                char_fl_norm: n.value,
                char_diverges: n.diverges,
                ko_bound: kv,
                ko_diverges: kd,
                lebedev_threshold: threshold,
                lebedev_admissible: lebedev_admissible(d, s),
                ratio: if kd || n.diverges { f64::NAN } else { n.value / kv },
            });
        }
        series.push(Series::line(pts, color(i)));
    }
    let mut w = out.csv("domains.csv")?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).filter(|r| r.is_finite()).collect();
    let uniform = ratios.iter().copied().fold(0.0, f64::max);
    if dc.s.contains(&2.0) {
        out.check("plancherel", plancherel <= 1e-6, format!("largest |‖𝔉χ‖₂ − √|Ω|| = {plancherel:.2e}"));
    }
    out.check("ko_dominates", consistent && uniform.is_finite(), format!("uniform constant {uniform:.4} over {} cases", ratios.len()));
    out.check("lebedev", lebedev, "ball divergence flags match s > 2d/(d+1) away from the threshold");
    out.info("uniform_constant", uniform)?;
    let range = line_plot(&out.path("domains.png"), &series)?;
    out.info("domains_png_axes", ("s", "char_fl_norm", range))?;
    Ok(())
}

#[derive(Serialize)]
struct LedgerRow {
    name: &'static str,
    value: f64,
}

pub fn constants(cfg: &Config, d_max: Option<usize>, out: &mut RunOutput) -> Res {
    let cc = cfg.constants.clone().unwrap_or_default();
    let d_max = d_max.unwrap_or(cc.d_max);
    if d_max == 0 {
        return Err(UsageError("d_max must be at least 1".into()).into());
    }
    let theta = WeightSpec::parse(&cc.theta, (1, 1))?;
    let ledger = total_constant(&cc.activation, &theta, &cc.inputs)?;
    let mut w = out.csv("ledger.csv")?;
    for (name, value) in ledger.rows() {
        w.serialize(LedgerRow { name, value })?;
    }
    w.flush()?;
    out.info("ledger", &ledger)?;

    let ds: Vec<usize> = (1..=d_max).collect();
    let curse = curse_study(&ds, cc.delta, cc.p, cc.q, cc.tau)?;
    let mut w = out.csv("curse.csv")?;
    for r in &curse.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let mut kappa_ok = true;
    for n in 0..=6 {
        for d in 1..=6 {
            for p in [2.0, 4.0] {
                for tau in [1.0, 2.0, 4.0] {
                    kappa_ok &= kappa(n, d, p, tau)? <= kappa_bound(n, d, p, tau);
                }
            }
        }
    }
    out.check("kappa_bound", kappa_ok, "κ ≤ exp((n+d−1)|τ|^{−p}) for n ≤ 6, d ≤ 6, p ∈ {2,4}, τ ∈ {1,2,4}");
    out.check("curse_within_bound", curse.all_within_bound, format!("d = 1..{d_max}"));
    out.check("curse_geometric_decay", curse.geometric_decay, format!("bound decays from d = {}", curse.decay_from));
    out.info("curse_uniform_bound", curse.uniform_bound)?;
    let series = vec![
        Series::line(curse.rows.iter().map(|r| (r.d as f64, r.computed.log10())).collect(), color(0)),
        Series::line(curse.rows.iter().map(|r| (r.d as f64, r.bound.log10())).collect(), color(1)),
    ];
    let range = line_plot(&out.path("curse.png"), &series)?;
    out.info("curse_png_axes", ("d", "log10 computed (blue), log10 bound (red)", range))?;
    Ok(())
}

fn target(kind: TargetKind, quad: &LossQuadrature) -> LossTarget {
    match kind {
        TargetKind::Heat => HeatTarget.sample(quad),
        TargetKind::Gaussian => gaussian_target(quad),
    }
}

#[derive(Serialize)]
struct TraceRow {
    step: usize,
    seed: u64,
    model: ModelKind,
    budget: usize,
    loss: f64,
    smoothed: f64,
}

fn write_trace(w: &mut csv::Writer<std::fs::File>, run: &TrainRun, model: ModelKind, budget: usize, every: usize) -> Res {
    let last = run.loss_trace.len() - 1;
    for (step, (&loss, &smoothed)) in run.loss_trace.iter().zip(&run.smoothed_trace).enumerate() {
        if step % every == 0 || step == last {
            w.serialize(TraceRow { step, seed: run.seed, model, budget, loss, smoothed })?;
        }
    }
    Ok(())
}

pub fn train(cfg: &Config, seed: u64, out: &mut RunOutput) -> Res {
    let tc = require(&cfg.train, "train")?;
    let width = match (tc.width, tc.budget) {
        (Some(w), None) => w,
        (None, Some(b)) => tc.model.width_for_budget(b)?,
        _ => return Err(UsageError("train needs exactly one of width or budget".into()).into()),
    };
    if tc.trace_every == 0 {
        return Err(UsageError("trace_every must be at least 1".into()).into());
    }
    let spec = tc.protocol.spec()?;
    let tgt = target(tc.target, &spec.quad);
    let init = tc.protocol.init(tc.model, width, seed);
    let budget = init.param_count();
    let run = train_run(&init, &tgt, &spec, tc.protocol.optimizer, tc.protocol.steps, seed)?;
    let mut w = out.csv("loss_trace.csv")?;
    write_trace(&mut w, &run, tc.model, budget, tc.trace_every)?;
    w.flush()?;
    std::fs::write(out.path("network.json"), serde_json::to_string_pretty(&run.best)? + "\n")?;
    if run.diverged {
        out.unconverged("training diverged");
    }
    out.check("converged", !run.diverged, format!("final smoothed loss {:.4e}", run.final_smoothed()));
    out.info("width", width)?;
    out.info("budget", budget)?;
    out.info("final_smoothed_loss", run.final_smoothed())?;
    let series = vec![
        Series::line(run.loss_trace.iter().enumerate().map(|(s, l)| (s as f64, l.log10())).collect(), color(5)),
        Series::line(run.smoothed_trace.iter().enumerate().map(|(s, l)| (s as f64, l.log10())).collect(), color(0)),
    ];
    let range = line_plot(&out.path("loss_trace.png"), &series)?;
    out.info("loss_trace_png_axes", ("step", "log10 loss (cyan) and running minimum (blue)", range))?;
    Ok(())
}

pub fn reproduce(cfg: &Config, seed: u64, out: &mut RunOutput) -> Res {
    let rc = cfg.reproduce.clone().unwrap_or_default();
    if rc.seeds == 0 || rc.budgets.is_empty() || rc.trace_every == 0 {
        return Err(UsageError("reproduce needs seeds ≥ 1, at least one budget and trace_every ≥ 1".into()).into());
    }
    let seeds: Vec<u64> = (seed..seed + rc.seeds as u64).collect();
    let report = budget_comparison(&rc.budgets, &seeds, &rc.protocol)?;

    let mut w = out.csv("loss_trace.csv")?;
    for cell in &report.cells {
        for run in &cell.runs {
            write_trace(&mut w, run, cell.model, cell.budget, rc.trace_every)?;
        }
    }
    w.flush()?;
    let mut w = out.csv("verdicts.csv")?;
    for v in &report.verdicts {
        w.serialize(v)?;
    }
    w.flush()?;

    let top = *rc.budgets.iter().max().expect("non-empty");
    for v in &report.verdicts {
        out.check(
            &format!("two_block_better_{}", v.budget),
            v.two_block_better,
            format!("single {:.4e} ± {:.2e}, two-block {:.4e} ± {:.2e}", v.single_mean, v.single_std, v.two_mean, v.two_std),
        );
        if v.budget == top {
            out.check(
                &format!("gap_exceeds_pooled_std_{}", v.budget),
                v.gap_exceeds_pooled_std,
                format!("gap {:.3e}, pooled std {:.3e}", v.single_mean - v.two_mean, v.pooled_std),
            );
        }
    }
    if report.diverged_runs > 0 {
        out.unconverged(format!("{} diverged training runs", report.diverged_runs));
    }
    out.info("verdicts", &report.verdicts)?;

    for &budget in &rc.budgets {
        let mut series = Vec::new();
        for (i, model) in [ModelKind::SingleBlock, ModelKind::TwoBlock].into_iter().enumerate() {
            let cell = report.cell(model, budget).expect("every cell is trained");
            let band = cell.log_loss_band();
            let stride = (band.len() / 2000).max(1);
            let kept: Vec<(usize, (f64, f64))> = band.into_iter().enumerate().step_by(stride).collect();
            series.push(Series {
                points: kept.iter().map(|&(s, (m, _))| (s as f64, m)).collect(),
                band: Some(kept.iter().map(|&(_, (m, sd))| (m - sd, m + sd)).collect()),
                color: color(i),
            });
        }
        let range = line_plot(&out.path(&format!("loss_band_{budget}.png")), &series)?;
        out.info(&format!("loss_band_{budget}_png_axes"), ("step", "log10 running-minimum loss, mean ± std (blue single, red two-block)", range))?;
    }

    let best = |model| {
        let cell = report.cell(model, top).expect("every cell is trained");
        cell.runs.iter().min_by(|a, b| a.final_smoothed().total_cmp(&b.final_smoothed())).expect("seeds ≥ 1").best.clone()
    };
    let rows = contour_rows(&best(ModelKind::SingleBlock), &best(ModelKind::TwoBlock), rc.contour_points)?;
    let mut w = out.csv("contour.csv")?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let n = rc.contour_points;
    let fields: [(&str, fn(&aniso_core::shallownet::ContourRow) -> f64); 6] = [
        ("f", |r| r.f),
        ("phi1", |r| r.phi1),
        ("phi2", |r| r.phi2),
        ("dx_f", |r| r.dx_f),
        ("dx_phi1", |r| r.dx_phi1),
        ("dx_phi2", |r| r.dx_phi2),
    ];
    // rows run over t then x, so t is vertical and x horizontal
    for (name, get) in fields {
        let vals: Vec<f64> = rows.iter().map(get).collect();
        let range = heat_map(&out.path(&format!("contour_{name}.png")), &vals, n, n, 6)?;
        out.info(&format!("contour_{name}_png_range"), range)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RateRow {
    width: usize,
    error: f64,
}

pub fn rate(cfg: &Config, seed: u64, out: &mut RunOutput) -> Res {
    let rc = cfg.rate.clone().unwrap_or_default();
    let spec = rc.protocol.spec()?;
    let tgt = target(rc.target, &spec.quad);
    let r = rate_experiment(&tgt, &rc.widths, &spec, &rc.protocol, rc.model, rc.restarts, seed)?;
    let mut w = out.csv("rate.csv")?;
    for (&width, &error) in r.widths.iter().zip(&r.errors) {
        w.serialize(RateRow { width, error })?;
    }
    w.flush()?;
    if !r.monotone {
        out.unconverged(format!("best errors increase with width: {:?}", r.errors));
    }
    if r.diverged_runs > 0 {
        out.unconverged(format!("{} diverged training runs", r.diverged_runs));
    }
    out.check("slope", r.slope <= -0.3, format!("log-log slope {:.3} ± {:.3}", r.slope, r.slope_ci));
    out.check("monotone", r.monotone, "best error nonincreasing under nested widths");
    out.info("rate", &r)?;
    let pts: Vec<(f64, f64)> = r.widths.iter().zip(&r.errors).map(|(&w, &e)| ((w as f64).log2(), e.log10())).collect();
    let range = line_plot(&out.path("rate.png"), &[Series::line(pts, color(0))])?;
    out.info("rate_png_axes", ("log2 width", "log10 error", range))?;
    Ok(())
}
