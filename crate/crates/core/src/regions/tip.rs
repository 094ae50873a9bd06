//! The tip region near the right pole: `γ = Γψ`, `Z = ψ_s²` as a function of γ.

use serde::{Deserialize, Serialize};

use super::{time_to_go, ArcProfile, FitReport};
use crate::bryant::BryantProfile;
use crate::error::{Error, Result};
use crate::numerics::fit_line;

/// `Z(γ)` on the monotone cap next to the right pole, ordered by increasing γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TipFrame {
    pub tau: f64,
    /// Expansion factor `Γ = (T-t)^{-(1-1/k)}`.
    pub gamma_scale: f64,
    pub gamma: Vec<f64>,
    pub z: Vec<f64>,
    pub k_used: usize,
    /// Cleared when the walk stopped at a non-monotone sample before
    /// `ψ_s` reached zero; the frame then holds the largest monotone subcap.
    pub complete: bool,
}

impl TipFrame {
    pub fn gamma_max(&self) -> f64 {
        *self.gamma.last().unwrap()
    }
}

/// Walks from the right pole while `ψ_s < 0` and `ψ` keeps increasing.
pub fn to_tip(p: &ArcProfile, t_sing: f64, k: usize) -> Result<TipFrame> {
    let theta = time_to_go(t_sing, p.t)?;
    if k < 2 {
        return Err(Error::Precondition(format!("k = {k} gives no expansion factor")));
    }
    let scale = theta.powf(-(1.0 - 1.0 / k as f64));
    let mut gamma = Vec::new();
    let mut z = Vec::new();
    let mut complete = false;
    let mut last = f64::NEG_INFINITY;
    for j in (0..p.s.len()).rev() {
        if !(p.psi_s[j] < 0.0) {
            complete = true;
            break;
        }
        if !(p.psi[j] > last) {
            break;
        }
        last = p.psi[j];
        gamma.push(scale * p.psi[j]);
        z.push(p.psi_s[j] * p.psi_s[j]);
    }
    if gamma.len() < 3 {
        return Err(Error::NonMonotone(format!("monotone cap has only {} samples", gamma.len())));
    }
    Ok(TipFrame { tau: -theta.ln(), gamma_scale: scale, gamma, z, k_used: k, complete })
}

/// Deviation of a tip frame from the soliton profile `B(γ/a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TipComparison {
    pub a: f64,
    pub gamma_max: f64,
    /// Largest γ present in the frame.
    pub gamma_reached: f64,
    /// Set when the frame reaches `gamma_max`.
    pub covered: bool,
    pub sup: f64,
    pub rms: f64,
    pub samples: usize,
    /// Least-squares optimal `a` and its rms, when requested.
    pub best_a: Option<f64>,
    pub best_rms: Option<f64>,
}

fn deviations(frame: &TipFrame, bryant: &BryantProfile, a: f64, gamma_max: f64) -> (f64, f64, usize) {
    let mut sup: f64 = 0.0;
    let mut sq = 0.0;
    let mut m = 0;
    for (g, z) in frame.gamma.iter().zip(&frame.z) {
        if *g > gamma_max {
            break;
        }
        let d = (z - bryant.eval(g / a)).abs();
        sup = sup.max(d);
        sq += d * d;
        m += 1;
    }
    (sup, (sq / m.max(1) as f64).sqrt(), m)
}

/// Sup and rms of `|Z(γ) - B(γ/a)|` on `γ ∈ [0, gamma_max]`.
pub fn compare_tip(
    frame: &TipFrame,
    bryant: &BryantProfile,
    a: f64,
    gamma_max: f64,
    fit_a: bool,
) -> Result<TipComparison> {
    if !(a > 0.0) || !(gamma_max > 0.0) {
        return Err(Error::Precondition(format!("a = {a} and γ_max = {gamma_max} must be positive")));
    }
    let (sup, rms, samples) = deviations(frame, bryant, a, gamma_max);
    if samples < 3 {
        return Err(Error::OutOfRegime(format!("only {samples} tip samples with γ ≤ {gamma_max}")));
    }
    let (best_a, best_rms) = if fit_a {
        let f = |x: f64| deviations(frame, bryant, x, gamma_max).1;
        let x = golden_min(&f, 0.25 * a, 4.0 * a, 1e-10 * a);
        (Some(x), Some(f(x)))
    } else {
        (None, None)
    };
    let reached = frame.gamma_max();
    Ok(TipComparison {
        a,
        gamma_max,
        gamma_reached: reached,
        covered: reached >= gamma_max,
        sup,
        rms,
        samples,
        best_a,
        best_rms,
    })
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Power-law fit `K_pole ≈ C (T-t)^{-q}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    /// Exponent `q` with its sensitivity to `T ± δ`.
    pub q: FitReport,
    pub prefactor: f64,
    /// Set when `q` moves by more than 1% under `T ± δ`.
    pub low_confidence: bool,
}

/// Regresses `log K` against `-log(T - t)` over `(t, K)` samples.
pub fn blowup_fit(history: &[(f64, f64)], t_sing: f64, delta: f64) -> Result<BlowupFit> {
    if history.len() < 6 {
        return Err(Error::Precondition(format!("need ≥ 6 curvature samples, got {}", history.len())));
    }
    if history.iter().any(|(_, k)| !(*k > 0.0)) {
        return Err(Error::Precondition("curvature samples must be positive".into()));
    }
    let (lo, hi) = history.iter().fold((f64::INFINITY, 0.0f64), |(a, b), (_, k)| (a.min(*k), b.max(*k)));
    if hi / lo < 100.0 {
        return Err(Error::Precondition(format!("curvature spans {:.2} decades, need ≥ 2", (hi / lo).log10())));
    }
    let fit = |t_s: f64| -> Result<(f64, f64, f64)> {
        let mut x = Vec::with_capacity(history.len());
        for (t, _) in history {
            x.push(-time_to_go(t_s, *t)?.ln());
        }
        let y: Vec<f64> = history.iter().map(|(_, k)| k.ln()).collect();
        let l = fit_line(&x, &y)?;
        Ok((l.slope, l.intercept, l.rms))
    };
    let (q, intercept, rms) = fit(t_sing)?;
    let mut sensitivity: f64 = 0.0;
    if delta > 0.0 {
        for t_s in [t_sing - delta, t_sing + delta] {
            sensitivity = sensitivity.max((fit(t_s)?.0 - q).abs());
        }
    }
    let taus: Vec<f64> = history.iter().map(|(t, _)| -(t_sing - t).ln()).collect();
    let window =
        (taus.iter().cloned().fold(f64::INFINITY, f64::min), taus.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let mut report = FitReport::new(q, window, rms, history.len());
    report.sensitivity = Some(sensitivity);
    Ok(BlowupFit { q: report, prefactor: intercept.exp(), low_confidence: sensitivity > 0.01 * q.abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bryant::solve_bryant;

    #[test]
    fn synthetic_power_laws() {
        for (q, k) in [(4.0 / 3.0, 3), (1.5, 4)] {
            let hist: Vec<(f64, f64)> = (0..10)
                .map(|i| {
                    let th = 10f64.powf(-(i as f64) * 0.5);
                    (1.0 - th, 2.0 * th.powf(-q))
                })
                .collect();
            let f = blowup_fit(&hist, 1.0, 0.0).unwrap();
            assert!((f.q.fitted_value - q).abs() < 1e-12, "k = {k}");
            assert!((f.prefactor - 2.0).abs() < 1e-10);
            assert!(!f.low_confidence);
        }
        let short: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 0.01, 1.0 + i as f64)).collect();
        assert!(blowup_fit(&short, 1.0, 0.0).is_err());
    }

    #[test]
    fn bryant_cap_round_trips() {
        let b = solve_bryant(2, 1e-10).unwrap();
        let cap = b.cap_coordinate();
        let (a, theta, k) = (1.5, 1e-3f64, 3);
        let scale = theta.powf(-(1.0 - 1.0 / k as f64));
        // cap with squared slope B(Γψ/a), pole at s = 0
        let s_pole = 0.0;
        let d: Vec<f64> = (0..400).map(|i| 0.1 * (i as f64 / 399.0)).rev().collect();
        let s: Vec<f64> = d.iter().map(|d| s_pole - d).collect();
        let psi: Vec<f64> = d.iter().map(|d| a / scale * cap.inverse(scale * d / a)).collect();
        let psi_s: Vec<f64> = psi.iter().map(|p| -b.eval(scale * p / a).sqrt()).collect();
        let p = ArcProfile::new(2, 1.0 - theta, s, psi, psi_s).unwrap();
        let f = to_tip(&p, 1.0, k).unwrap();
        assert!((f.z[0] - 1.0).abs() < 1e-12);
        let c = compare_tip(&f, &b, a, 2.0, true).unwrap();
        assert!(c.sup < 1e-10, "{}", c.sup);
        assert!((c.best_a.unwrap() - a).abs() < 1e-6);
        assert!(c.covered);
    }
}
