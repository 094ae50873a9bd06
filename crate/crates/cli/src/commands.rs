//! The five subcommands.

use std::path::Path;
use std::sync::Arc;

use neckpinch_core::analysis::{analyze, AnalysisOptions, AnalysisSample};
use neckpinch_core::bryant::{solve_bryant, BryantProfile};
use neckpinch_core::flow::{critical_search, evolve, initial_conditions_hold, RunResult, Snapshot, SolverConfig};
use neckpinch_core::geometry::{make_initial, InitialFamily};
use neckpinch_core::io::read_profile;
use neckpinch_core::regions::{
    blowup_fit, compare_tip, matching_constants, to_tip, ArcProfile, BlowupFit, CompositeModel, RegionKind,
    RegionResidual, TipComparison,
};
use serde::Serialize;
use serde_json::json;

use crate::artifacts::{csv, write_run, OutputDir};
use crate::config::Config;
use crate::CliError;

pub fn simulate(cfg: &Config) -> Result<(), CliError> {
    let n = cfg.n()?;
    let out = OutputDir::create(&cfg.out()?, "simulate", cfg, cfg.seed)?;
    out.run(|out| {
        let grid = make_initial(&cfg.family.build(), cfg.run.nodes, n)?;
        let hold = initial_conditions_hold(&grid);
        let run = evolve(&grid, &cfg.solver)?;
        out.lap("evolve");
        write_run(out, "", &run, json!({ "initial_conditions_hold": hold }))?;
        out.lap("write");
        let r = &run.report;
        println!(
            "{:?}: T_est = {:.8} ({:?}), {} snapshots, stop {:?}",
            r.kind,
            r.t_est,
            r.t_est_method,
            run.snapshots.len(),
            run.stop
        );
        if run.aborted() {
            let msg = format!("solver aborted: {:?}", run.stop);
            out.set_status("aborted", Some(msg.clone()));
            return Err(CliError::Numerical(msg));
        }
        Ok(())
    })
}

/// Samples and singular time read back from a `simulate` or `formal` directory.
fn load_samples(dir: &Path) -> Result<(Vec<AnalysisSample>, Option<f64>), CliError> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())));
    let json = |p: &Path| -> Result<serde_json::Value, CliError> {
        serde_json::from_str(&read(p)?).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
    };
    let jsonl = dir.join("samples.jsonl");
    if jsonl.exists() {
        let mut samples = Vec::new();
        for (i, line) in read(&jsonl)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            samples.push(
                serde_json::from_str(line)
                    .map_err(|e| CliError::Config(format!("{} line {}: {e}", jsonl.display(), i + 1)))?,
            );
        }
        let t_sing = json(&dir.join("model.json")).ok().and_then(|v| v["t_sing"].as_f64());
        return Ok((samples, t_sing));
    }
    let snaps = dir.join("snapshots");
    let mut paths: Vec<_> = std::fs::read_dir(&snaps)
        .map_err(|e| CliError::Precondition(format!("{}: {e}", snaps.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    let mut samples = Vec::with_capacity(paths.len());
    for p in &paths {
        let grid = read_profile(p)?;
        samples.push(AnalysisSample::from_snapshot(&Snapshot::new(grid)?));
    }
    let t_sing = json(&dir.join("singularity.json")).ok().and_then(|v| v["report"]["t_est"].as_f64());
    Ok((samples, t_sing))
}

pub fn analyze_dir(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let out_dir = cfg.run.out.clone().unwrap_or_else(|| dir.join("analysis"));
    let (samples, recorded_t) = load_samples(dir)?;
    if samples.len() < 5 {
        return Err(CliError::Precondition(format!("{} holds {} snapshots, need ≥ 5", dir.display(), samples.len())));
    }
    let t_sing = cfg
        .analysis
        .t_est
        .or(recorded_t)
        .ok_or_else(|| CliError::Config(format!("no singular time recorded in {}; pass --t-est", dir.display())))?;
    let out =
        OutputDir::create(&out_dir, "analyze", &json!({ "input": dir, "t_sing": t_sing, "config": cfg }), cfg.seed)?;
    out.run(|out| {
        out.lap("load");
        let n = samples[0].profile.n;
        let bryant = solve_bryant(n, cfg.bryant.tol)?;
        out.lap("bryant");
        let a = &cfg.analysis;
        let mut opts = AnalysisOptions {
            k_max: a.k_max,
            k_hint: a.k_hint,
            c_guess: a.c_guess,
            tip_tau: a.tip_tau,
            gamma_max: a.gamma_max,
            tau_min: a.tau_min,
            delta_rel: a.delta_rel,
            ..AnalysisOptions::default()
        };
        opts.parabolic.sigma_max = a.sigma_max;
        let analysis = analyze(&samples, t_sing, Some(&bryant), &opts)?;
        out.lap("analyze");
        let report = &analysis.report;
        out.write_json("report.json", "analysis report", report)?;
        out.write_jsonl("projections.jsonl", "hermite coefficients per frame", &report.projections)?;
        if let Some(f) = &analysis.parabolic {
            out.write("parabolic.csv", "latest parabolic frame", &csv(&["sigma", "u", "v"], &[&f.sigma, &f.u, &f.v]))?;
        }
        if let Some(f) = &analysis.intermediate {
            let model: Vec<f64> = match &report.c {
                Some(c) => {
                    f.rho.iter().map(|r| (1.0 - (r / c.fitted_value).powi(f.k_used as i32)).max(0.0).sqrt()).collect()
                }
                None => vec![f64::NAN; f.rho.len()],
            };
            out.write(
                "intermediate.csv",
                "intermediate frame and fitted profile",
                &csv(&["rho", "w", "w_fit"], &[&f.rho, &f.w, &model]),
            )?;
        }
        if let (Some(f), Some(tip)) = (&analysis.tip, &report.tip) {
            let scale = tip.comparison.a;
            let model: Vec<f64> = f.gamma.iter().map(|g| bryant.eval(g / scale)).collect();
            out.write(
                "tip.csv",
                "tip frame and soliton profile",
                &csv(&["gamma", "z", "bryant"], &[&f.gamma, &f.z, &model]),
            )?;
        }
        out.lap("write");
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        println!(
            "analyzed {} samples at T = {t_sing:.10}: k = {}, c = {}, blow-up exponent = {}",
            report.samples,
            report.k.map_or("n/a".into(), |k| k.to_string()),
            report.c.as_ref().map_or("n/a".into(), |c| format!("{:.6}", c.fitted_value)),
            report.blowup.as_ref().map_or("n/a".into(), |b| format!("{:.6}", b.fit.q.fitted_value)),
        );
        Ok(())
    })
}

/// `r⁴(B - r⁻²)` extrapolated linearly in `r⁻²` over the far end of the table.
fn tail_second_coefficient(b: &BryantProfile) -> Option<f64> {
    let m = b.r_table.len();
    let from = m.checked_sub(60)?;
    let x: Vec<f64> = b.r_table[from..].iter().map(|r| r.powi(-2)).collect();
    let y: Vec<f64> =
        b.r_table[from..].iter().zip(&b.b_table[from..]).map(|(r, v)| r.powi(4) * (v - r.powi(-2))).collect();
    neckpinch_core::numerics::fit_line(&x, &y).ok().map(|l| l.intercept)
}

pub fn bryant(cfg: &Config) -> Result<(), CliError> {
    let n = cfg.n()?;
    let out = OutputDir::create(&cfg.out()?, "bryant", cfg, cfg.seed)?;
    out.run(|out| {
        let b = solve_bryant(n, cfg.bryant.tol)?;
        out.lap("solve");
        let tail = tail_second_coefficient(&b);
        out.write(&format!("bryant_n{n}.txt"), "profile table", &b.to_text())?;
        out.write_json(
            "bryant.json",
            "solver summary",
            &json!({
                "n": n,
                "b2_used": b.b2_used,
                "c2_measured": b.c2_measured,
                "normalization": b.normalization,
                "b2_normalized": b.b2_normalized(),
                "series_inner": b.series_inner,
                "series_outer": b.series_outer,
                "tail_fit_second_coefficient": tail,
                "switch_radii": b.switch_radii,
                "table_points": b.r_table.len(),
                "diagnostics": b.diagnostics,
            }),
        )?;
        out.lap("write");
        println!(
            "n = {n}: {} points to r = {:.1}, far-field r⁻⁴ coefficient {:.6} (tail fit {}), residual {:.2e}",
            b.r_table.len(),
            b.r_table.last().copied().unwrap_or(0.0),
            b.series_outer[1],
            tail.map_or("n/a".into(), |t| format!("{t:.6}")),
            b.diagnostics.residual_max
        );
        Ok(())
    })
}

#[derive(Serialize)]
struct RegionDecay {
    kind: RegionKind,
    /// `(sup(τᵢ)/sup(τᵢ₊₁))^{1/Δτ}` for consecutive τ values.
    factors_per_unit_tau: Vec<f64>,
    min_factor: f64,
    decreasing_by_two: bool,
}

pub fn formal(cfg: &Config) -> Result<(), CliError> {
    let n = cfg.n()?;
    let f = &cfg.formal;
    let mc = matching_constants(n, f.k, f.c)?;
    if f.tau.is_empty() {
        return Err(CliError::Config("[formal] tau is empty".into()));
    }
    let out = OutputDir::create(&cfg.out()?, "formal", cfg, cfg.seed)?;
    out.run(|out| {
        let model = CompositeModel::new(mc.clone(), 0.0, f.blend, Arc::new(solve_bryant(n, cfg.bryant.tol)?))?;
        out.lap("bryant");
        let mut samples = Vec::new();
        let mut per_tau: Vec<(f64, Vec<RegionResidual>)> = Vec::new();
        for &tau in &f.tau {
            let t = model.time_at(tau);
            let p = model.sample(t, cfg.run.nodes)?;
            out.write(
                &format!("profiles/profile_tau{tau:.3}.csv"),
                "composite profile",
                &csv(&["s", "psi", "psi_s"], &[&p.s, &p.psi, &p.psi_s]),
            )?;
            // the profile grid without its poles, thinned to about twice the region sample count
            let interior: Vec<f64> = p.s.iter().zip(&p.psi).filter(|(_, psi)| **psi > 0.0).map(|(s, _)| *s).collect();
            let stride = (interior.len() / (2 * f.residual_samples).max(1)).max(1);
            let grid: Vec<f64> = interior.into_iter().step_by(stride).collect();
            let field = model.pde_residual(t, &grid)?;
            out.write(
                &format!("residuals/residual_tau{tau:.3}.csv"),
                "normalized residual",
                &csv(&["s", "residual", "scale"], &[&field.s, &field.residual, &field.scale]),
            )?;
            per_tau.push((tau, model.region_residuals(t, f.residual_samples)?));
            samples.push(AnalysisSample { neck_s: Some(0.0), k_pole: model.pole_curvature(t)?, profile: p });
        }
        out.lap("evaluate");
        let mut decay = Vec::new();
        for kind in RegionKind::ALL {
            let sups: Vec<(f64, f64)> = per_tau
                .iter()
                .filter_map(|(tau, rs)| rs.iter().find(|r| r.kind == kind).map(|r| (*tau, r.sup)))
                .collect();
            if sups.len() < 2 {
                continue;
            }
            let factors: Vec<f64> = sups.windows(2).map(|w| (w[0].1 / w[1].1).powf(1.0 / (w[1].0 - w[0].0))).collect();
            let min_factor = factors.iter().cloned().fold(f64::INFINITY, f64::min);
            decay.push(RegionDecay {
                kind,
                factors_per_unit_tau: factors,
                min_factor,
                decreasing_by_two: min_factor >= 2.0,
            });
        }
        let regions: Vec<_> = per_tau.iter().map(|(tau, r)| json!({ "tau": tau, "regions": r })).collect();
        out.write_json("regions.json", "region residual report", &json!({ "residuals": regions, "decay": decay }))?;
        out.write_json("model.json", "model constants", &json!({ "t_sing": 0.0, "constants": mc, "blend": f.blend }))?;
        out.write_jsonl("samples.jsonl", "analysis samples", &samples)?;
        out.lap("write");
        for d in &decay {
            println!(
                "{:<12} min decay factor per unit τ {:.3} ({})",
                d.kind.name(),
                d.min_factor,
                if d.decreasing_by_two { "≥ 2" } else { "< 2" }
            );
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct BracketRun {
    label: String,
    lambda: f64,
    kind: neckpinch_core::flow::SingularityKind,
    t_est: f64,
    blowup: Option<BlowupFit>,
    blowup_error: Option<String>,
    /// Tip comparison at the fitted scale `a`.
    tip: Option<TipComparison>,
    tip_error: Option<String>,
    meets_target: bool,
}

fn assess(
    label: &str,
    lambda: f64,
    run: &RunResult,
    bryant: &BryantProfile,
    k: usize,
    a0: f64,
    tail: usize,
) -> BracketRun {
    let t_est = run.report.t_est;
    let usable: Vec<&Snapshot> = run.snapshots.iter().filter(|s| s.grid.t < t_est).collect();
    let hist: Vec<(f64, f64)> = usable.iter().map(|s| (s.grid.t, s.diagnostics.k_pole_right)).collect();
    let hist = &hist[hist.len().saturating_sub(tail)..];
    let delta = 1e-4 * (t_est - hist.last().map_or(0.0, |h| h.0));
    let (blowup, blowup_error) = match blowup_fit(hist, t_est, delta) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let tip = usable.last().ok_or_else(|| "no snapshot before T".to_string()).and_then(|s| {
        let frame = to_tip(&ArcProfile::from_snapshot(s), t_est, k).map_err(|e| e.to_string())?;
        let fitted = compare_tip(&frame, bryant, a0, 2.0, true).map_err(|e| e.to_string())?;
        let a = fitted.best_a.unwrap_or(a0);
        compare_tip(&frame, bryant, a, 2.0, false).map_err(|e| e.to_string())
    });
    let (tip, tip_error) = match tip {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e)),
    };
    let q_ok = blowup.as_ref().is_some_and(|b| b.q.fitted_value > 1.05 && b.q.fitted_value < 1.95);
    let tip_ok = tip.as_ref().is_some_and(|t| t.covered && t.sup < 0.1);
    BracketRun {
        label: label.into(),
        lambda,
        kind: run.report.kind,
        t_est,
        blowup,
        blowup_error,
        tip,
        tip_error,
        meets_target: q_ok && tip_ok,
    }
}

pub fn search(cfg: &Config) -> Result<(), CliError> {
    let n = cfg.n()?;
    let s = &cfg.search;
    let fam = cfg.family.build();
    if !matches!(fam, InitialFamily::Dumbbell { .. }) {
        return Err(CliError::Precondition("the search needs a family with a λ parameter (dumbbell)".into()));
    }
    let out = OutputDir::create(&cfg.out()?, "search", cfg, cfg.seed)?;
    out.run(|out| {
        let bisect = SolverConfig { k_stop: s.bisect_k_stop, stop_on_neck_loss: true, ..cfg.solver.clone() };
        let found = critical_search(&fam, s.lo, s.hi, s.iters, cfg.run.nodes, n, &bisect)?;
        out.lap("bisection");
        let bracket = [("lo", found.lambda_lo), ("hi", found.lambda_hi)];
        let runs: Vec<neckpinch_core::Result<RunResult>> = std::thread::scope(|scope| {
            let handles: Vec<_> = bracket
                .iter()
                .map(|(_, lambda)| {
                    let fam = fam.with_lambda(*lambda);
                    scope.spawn(move || make_initial(&fam, cfg.run.nodes, n).and_then(|g| evolve(&g, &cfg.solver)))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("bracket run panicked")).collect()
        });
        out.lap("bracket runs");
        let bryant = solve_bryant(n, cfg.bryant.tol)?;
        let a0 = s.a.unwrap_or(s.k as f64 * (n as f64 - 1.0) / 2.0);
        let mut assessed = Vec::new();
        for ((label, lambda), run) in bracket.iter().zip(runs) {
            let run = run?;
            write_run(out, &format!("runs/{label}/"), &run, json!({ "lambda": lambda }))?;
            assessed.push(assess(label, *lambda, &run, &bryant, s.k, a0, s.tail));
        }
        out.lap("assess");
        let near_critical = assessed.iter().any(|r| r.meets_target);
        let history: Vec<_> = found.history.iter().map(|(l, k)| json!({ "lambda": l, "kind": k })).collect();
        out.write_json(
            "search.json",
            "search report",
            &json!({
                "lambda_star": found.lambda_star,
                "lambda_lo": found.lambda_lo,
                "lambda_hi": found.lambda_hi,
                "initial_width": s.hi - s.lo,
                "width": found.lambda_hi - found.lambda_lo,
                "iterations": s.iters,
                "history": history,
                "bracket_runs": assessed,
                "near_critical": near_critical,
            }),
        )?;
        for r in &assessed {
            println!(
                "{} λ = {:.10} {:?}: q = {}, tip sup = {}",
                r.label,
                r.lambda,
                r.kind,
                r.blowup.as_ref().map_or("n/a".into(), |b| format!("{:.4}", b.q.fitted_value)),
                r.tip.as_ref().map_or("n/a".into(), |t| format!("{:.3e} at a = {:.4}", t.sup, t.a)),
            );
        }
        println!("λ* = {:.10}, bracket width {:.3e}", found.lambda_star, found.lambda_hi - found.lambda_lo);
        if !near_critical {
            out.set_status("search-inconclusive", None);
        }
        Ok(())
    })
}
