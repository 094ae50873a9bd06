//! End-to-end asymptotic analysis of a sequence of profiles approaching a
//! singular time.
//!
//! The same pipeline runs on simulation snapshots and on samples of the
//! composite model. Steps that cannot run on the given data are skipped and
//! the reason is recorded as a warning, so a report is always produced.

use serde::{Deserialize, Serialize};

use crate::bryant::{solve_bryant, BryantProfile};
use crate::error::{Error, Result};
use crate::flow::Snapshot;
use crate::hermite::project;
use crate::regions::{
    blowup_fit, compare_tip, fit_c, fit_dominant_mode, matching_constants, to_intermediate, to_parabolic, to_tip,
    ArcProfile, BlowupFit, CompositeModel, FitReport, IntermediateFrame, ModeFit, ModeOptions, ParabolicFrame,
    ParabolicOptions, TipComparison, TipFrame,
};

/// One profile with the position of its neck and its right pole curvature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSample {
    pub profile: ArcProfile,
    /// Arclength of the neck, when the profile has one.
    pub neck_s: Option<f64>,
    pub k_pole: f64,
}

impl AnalysisSample {
    pub fn from_snapshot(snap: &Snapshot) -> Self {
        AnalysisSample {
            profile: ArcProfile::from_snapshot(snap),
            neck_s: snap.diagnostics.psi_min_s,
            k_pole: snap.diagnostics.k_pole_right,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub parabolic: ParabolicOptions,
    pub modes: ModeOptions,
    /// Highest Hermite mode projected.
    pub k_max: usize,
    /// Mode used when no dominant mode is detected.
    pub k_hint: Option<usize>,
    /// Start value for the fit of `c`; derived from `b_k` when absent.
    pub c_guess: Option<f64>,
    /// Time of the tip comparison; the latest sample when absent.
    pub tip_tau: Option<f64>,
    pub gamma_max: f64,
    /// Earliest τ used by the mode fit.
    pub tau_min: f64,
    /// `T` perturbation for the blow-up fit, relative to `T - t_latest`.
    pub delta_rel: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            parabolic: ParabolicOptions::default(),
            modes: ModeOptions::default(),
            k_max: 6,
            k_hint: None,
            c_guess: None,
            tip_tau: None,
            gamma_max: 2.0,
            tau_min: 1.0,
            delta_rel: 1e-4,
        }
    }
}

/// Hermite coefficients of one parabolic frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSummary {
    pub tau: f64,
    /// `U` at the neck.
    pub u_neck: f64,
    pub coefficients: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TipSummary {
    pub tau: f64,
    pub k_used: usize,
    pub complete: bool,
    pub comparison: TipComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupSummary {
    pub fit: BlowupFit,
    /// `2 - 2/k` for the mode in use.
    pub predicted_exponent: Option<f64>,
    /// `|b₂| / a²`, the prefactor of `Γ²` at the pole.
    pub predicted_prefactor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n: usize,
    pub t_sing: f64,
    pub samples: usize,
    pub projections: Vec<ProjectionSummary>,
    pub mode: Option<ModeFit>,
    /// Mode used by the later steps, from the fit or the hint.
    pub k: Option<usize>,
    pub c: Option<FitReport>,
    /// `a = k(n-1)/(2c)` for the fitted `c`.
    pub a: Option<f64>,
    pub tip: Option<TipSummary>,
    pub blowup: Option<BlowupSummary>,
    pub warnings: Vec<String>,
}

/// Report plus the frames behind it, for export.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub parabolic: Option<ParabolicFrame>,
    pub intermediate: Option<IntermediateFrame>,
    pub tip: Option<TipFrame>,
}

fn tau_of(t_sing: f64, t: f64) -> f64 {
    -(t_sing - t).ln()
}

/// Runs every applicable step on samples ordered or unordered in time.
pub fn analyze(
    samples: &[AnalysisSample],
    t_sing: f64,
    bryant: Option<&BryantProfile>,
    opts: &AnalysisOptions,
) -> Result<Analysis> {
    if samples.len() < 5 {
        return Err(Error::Precondition(format!("need ≥ 5 samples, got {}", samples.len())));
    }
    let n = samples[0].profile.n;
    if samples.iter().any(|s| s.profile.n != n) {
        return Err(Error::Precondition("samples mix different dimensions".into()));
    }
    let mut warnings = Vec::new();
    let mut ordered: Vec<&AnalysisSample> = samples.iter().filter(|s| s.profile.t < t_sing).collect();
    if ordered.len() < samples.len() {
        warnings.push(format!("{} samples at or after T = {t_sing} were dropped", samples.len() - ordered.len()));
    }
    ordered.sort_by(|a, b| a.profile.t.total_cmp(&b.profile.t));

    // parabolic region
    let mut projections = Vec::new();
    let mut summaries = Vec::new();
    let mut last_frame = None;
    let necks: Vec<(&AnalysisSample, f64)> = ordered.iter().filter_map(|s| s.neck_s.map(|x| (*s, x))).collect();
    if necks.is_empty() {
        warnings.push("no neck in any sample: parabolic, mode and intermediate analysis declined".into());
    }
    let mut early = 0;
    for (s, neck) in &necks {
        let frame = match to_parabolic(&s.profile, t_sing, *neck, &opts.parabolic) {
            Ok(f) => f,
            Err(e) => {
                warnings.push(format!("parabolic frame at t = {}: {e}", s.profile.t));
                continue;
            }
        };
        if frame.early || frame.tau < opts.tau_min {
            early += 1;
            continue;
        }
        let u_neck = s.profile.psi_at(*neck) / (2.0 * (n as f64 - 1.0) * (t_sing - s.profile.t)).sqrt();
        match project(&frame.sigma, &frame.v, opts.k_max, frame.tau) {
            Ok(p) => {
                summaries.push(ProjectionSummary {
                    tau: p.tau,
                    u_neck,
                    coefficients: p.coefficients.clone(),
                    residual: p.residual,
                });
                projections.push(p);
            }
            Err(e) => warnings.push(format!("projection at τ = {:.3}: {e}", frame.tau)),
        }
        last_frame = Some(frame);
    }
    if early > 0 {
        warnings
            .push(format!("{early} samples earlier than τ = {} were left out of the mode fit", opts.tau_min.max(1.0)));
    }
    let mode = if projections.is_empty() {
        None
    } else {
        match fit_dominant_mode(&projections, &opts.modes) {
            Ok(m) => {
                if m.b0_present {
                    warnings.push(format!("b₀ = {:e} is above the noise floor; T should be adjusted", m.b0_latest));
                }
                Some(m)
            }
            Err(e) => {
                warnings.push(e.to_string());
                None
            }
        }
    };
    let k = mode.as_ref().map(|m| m.k).or(opts.k_hint);

    // intermediate region
    let mut c_fit = None;
    let mut inter_frame = None;
    if let (Some(k), Some((s, neck))) = (k, necks.last()) {
        let guess = opts.c_guess.or_else(|| {
            mode.as_ref().map(|m| m.b_k.fitted_value).filter(|b| *b < 0.0).map(|b| (-2.0 * b).powf(-1.0 / k as f64))
        });
        match guess {
            Some(g) => match to_intermediate(&s.profile, t_sing, *neck, k, 0.0, 1.2 * g, 600) {
                Ok(f) => {
                    match fit_c(&f, g) {
                        Ok(r) => c_fit = Some(r),
                        Err(e) => warnings.push(format!("fit of c: {e}")),
                    }
                    inter_frame = Some(f);
                }
                Err(e) => warnings.push(format!("intermediate frame: {e}")),
            },
            None => warnings.push("no start value for c: supply c_guess or a decaying mode with b_k < 0".into()),
        }
    }
    let a = match (k, &c_fit) {
        (Some(k), Some(c)) => matching_constants(n, k, c.fitted_value).ok().map(|m| m.a),
        _ => None,
    };

    // tip region
    let owned;
    let bryant = match bryant {
        Some(b) => Some(b),
        None if k.is_some() => {
            owned = solve_bryant(n, 1e-10);
            match &owned {
                Ok(b) => Some(b),
                Err(e) => {
                    warnings.push(format!("soliton profile: {e}"));
                    None
                }
            }
        }
        None => None,
    };
    let mut tip = None;
    let mut tip_frame = None;
    if let Some(k) = k {
        let pick = match opts.tip_tau {
            Some(tt) => ordered.iter().min_by(|x, y| {
                (tau_of(t_sing, x.profile.t) - tt).abs().total_cmp(&(tau_of(t_sing, y.profile.t) - tt).abs())
            }),
            None => ordered.last(),
        };
        if let Some(s) = pick {
            match to_tip(&s.profile, t_sing, k) {
                Ok(f) => {
                    if !f.complete {
                        warnings.push("tip frame holds only the largest monotone subcap".into());
                    }
                    match (a, bryant) {
                        (Some(a), Some(b)) => match compare_tip(&f, b, a, opts.gamma_max, true) {
                            Ok(cmp) => {
                                if !cmp.covered {
                                    warnings.push(format!(
                                        "tip frame reaches only γ = {:.3} < {}",
                                        cmp.gamma_reached, opts.gamma_max
                                    ));
                                }
                                tip = Some(TipSummary { tau: f.tau, k_used: k, complete: f.complete, comparison: cmp });
                            }
                            Err(e) => warnings.push(format!("tip comparison: {e}")),
                        },
                        _ => warnings.push("tip comparison needs a and the soliton profile".into()),
                    }
                    tip_frame = Some(f);
                }
                Err(e) => warnings.push(format!("tip frame: {e}")),
            }
        }
    } else {
        warnings.push("mode k unknown: tip analysis declined".into());
    }

    // pole curvature
    let history: Vec<(f64, f64)> =
        ordered.iter().filter(|s| tau_of(t_sing, s.profile.t) >= 1.0).map(|s| (s.profile.t, s.k_pole)).collect();
    let blowup = match history.last() {
        Some(&(t_last, _)) => match blowup_fit(&history, t_sing, opts.delta_rel * (t_sing - t_last)) {
            Ok(fit) => {
                if fit.low_confidence {
                    warnings.push("blow-up exponent is sensitive to T".into());
                }
                let predicted_prefactor = match (a, bryant) {
                    (Some(a), Some(b)) => Some(b.b2_normalized().abs() / (a * a)),
                    _ => None,
                };
                Some(BlowupSummary { fit, predicted_exponent: k.map(|k| 2.0 - 2.0 / k as f64), predicted_prefactor })
            }
            Err(e) => {
                warnings.push(format!("blow-up fit: {e}"));
                None
            }
        },
        None => {
            warnings.push("no samples late enough for the blow-up fit".into());
            None
        }
    };

    Ok(Analysis {
        report: AnalysisReport {
            n,
            t_sing,
            samples: ordered.len(),
            projections: summaries,
            mode,
            k,
            c: c_fit,
            a,
            tip,
            blowup,
            warnings,
        },
        parabolic: last_frame,
        intermediate: inter_frame,
        tip: tip_frame,
    })
}

/// Samples of the composite model at the given τ values, neck at `s = 0`.
pub fn composite_samples(model: &CompositeModel, taus: &[f64], nodes: usize) -> Result<Vec<AnalysisSample>> {
    taus.iter()
        .map(|&tau| {
            let t = model.time_at(tau);
            Ok(AnalysisSample { profile: model.sample(t, nodes)?, neck_s: Some(0.0), k_pole: model.pole_curvature(t)? })
        })
        .collect()
}
