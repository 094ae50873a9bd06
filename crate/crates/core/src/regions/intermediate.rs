//! The intermediate region `ρ = s/(T-t)^{1/k}` and the outer profile.

use serde::{Deserialize, Serialize};

use super::{time_to_go, ArcProfile, FitReport, MatchingConstants};
use crate::error::{Error, Result};
use crate::numerics::linspace;

/// `W̃(ρ) = √(1 - (ρ/c)^k)`.
pub fn intermediate_profile(rho: f64, c: f64, k: usize) -> Result<f64> {
    let x = 1.0 - (rho / c).powi(k as i32);
    if !(x >= 0.0) || !(c > 0.0) {
        return Err(Error::Domain(format!("ρ = {rho} outside the intermediate profile for c = {c}, k = {k}")));
    }
    Ok(x.sqrt())
}

/// `dW̃/dρ = -(k/2) ρ^{k-1} c^{-k} / W̃`, finite only where `W̃ > 0`.
pub fn intermediate_slope(rho: f64, c: f64, k: usize) -> Result<f64> {
    let w = intermediate_profile(rho, c, k)?;
    if w == 0.0 {
        return Err(Error::Domain(format!("slope is infinite at ρ = {rho}")));
    }
    let kf = k as f64;
    Ok(-0.5 * kf * rho.powi(k as i32 - 1) * c.powi(-(k as i32)) / w)
}

/// `ψ = √(2(n-1)[(T-t) - (s/c)^k])`.
pub fn outer_profile(s: f64, t: f64, mc: &MatchingConstants, t_sing: f64) -> Result<f64> {
    let theta = t_sing - t;
    let arg = theta - (s / mc.c).powi(mc.k as i32);
    if !(arg > 0.0) {
        return Err(Error::OutOfRegime(format!("s = {s} lies outside the outer region at T - t = {theta:e}")));
    }
    Ok((2.0 * (mc.n as f64 - 1.0) * arg).sqrt())
}

/// `W = U` sampled on a uniform ρ grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermediateFrame {
    pub tau: f64,
    pub rho: Vec<f64>,
    pub w: Vec<f64>,
    pub k_used: usize,
}

/// Samples `W` for `ρ ∈ [rho_lo, rho_hi]` measured from the neck at `neck_s`.
pub fn to_intermediate(
    p: &ArcProfile,
    t_sing: f64,
    neck_s: f64,
    k: usize,
    rho_lo: f64,
    rho_hi: f64,
    nodes: usize,
) -> Result<IntermediateFrame> {
    let theta = time_to_go(t_sing, p.t)?;
    let len = theta.powf(1.0 / k as f64);
    let scale = (2.0 * (p.n as f64 - 1.0) * theta).sqrt();
    let mut rho = Vec::new();
    let mut w = Vec::new();
    for r in linspace(rho_lo, rho_hi, nodes) {
        let s = neck_s + r * len;
        if p.contains(s) {
            rho.push(r);
            w.push(p.psi_at(s) / scale);
        }
    }
    if rho.len() < 5 {
        return Err(Error::OutOfRegime(format!("only {} ρ samples inside the profile", rho.len())));
    }
    Ok(IntermediateFrame { tau: -theta.ln(), rho, w, k_used: k })
}

/// Least-squares fit of `W = √(1 - (ρ/c)^k)` for `c` on `ρ ∈ [0.2, 0.9]·c_guess`.
///
/// A linear fit of `1 - W²` against `ρ^k` gives the start for Gauss–Newton
/// iterations on the unsquared residual.
pub fn fit_c(frame: &IntermediateFrame, c_guess: f64) -> Result<FitReport> {
    if !(c_guess > 0.0) {
        return Err(Error::Precondition(format!("c_guess = {c_guess} must be positive")));
    }
    let k = frame.k_used;
    let (lo, hi) = (0.2 * c_guess, 0.9 * c_guess);
    let pts: Vec<(f64, f64)> =
        frame.rho.iter().zip(&frame.w).filter(|(r, _)| **r >= lo && **r <= hi).map(|(r, w)| (*r, *w)).collect();
    if pts.len() < 5 {
        return Err(Error::FitRejected(format!("only {} samples in ρ ∈ [{lo:.4}, {hi:.4}]", pts.len())));
    }
    if pts.windows(2).any(|p| !(p[1].1 < p[0].1)) {
        return Err(Error::FitRejected("W is not decreasing in the fit window".into()));
    }
    let kf = k as f64;
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (r, w)| {
        let x = r.powi(k as i32);
        (a + x * (1.0 - w * w), b + x * x)
    });
    if !(num > 0.0) {
        return Err(Error::FitRejected("W does not fall below one in the fit window".into()));
    }
    // p = c^{-k}
    let mut p = num / den;
    for _ in 0..50 {
        let (mut jj, mut jr) = (0.0, 0.0);
        for (r, w) in &pts {
            let x = r.powi(k as i32);
            let model = (1.0 - p * x).max(1e-300).sqrt();
            let d = -0.5 * x / model;
            jj += d * d;
            jr += d * (w - model);
        }
        let step = jr / jj;
        let next = (p + step).clamp(0.5 * p, 2.0 * p);
        let done = (next - p).abs() <= 1e-15 * p;
        p = next;
        if done {
            break;
        }
    }
    let c = p.powf(-1.0 / kf);
    let rms = (pts.iter().map(|(r, w)| (w - (1.0 - p * r.powi(k as i32)).max(0.0).sqrt()).powi(2)).sum::<f64>()
        / pts.len() as f64)
        .sqrt();
    let mut report = FitReport::new(c, (lo, hi), rms, pts.len());
    report.extras.insert("implied_b_k".into(), -0.5 * p);
    Ok(report)
}
