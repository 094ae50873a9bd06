//! The parabolic region: `σ = s/√(T-t)`, `U = ψ/√(2(n-1)(T-t))`, `V = U - 1`.

use serde::{Deserialize, Serialize};

use super::{time_to_go, ArcProfile, FitReport};
use crate::error::{Error, Result};
use crate::hermite::{eigenvalue, nonlocal_i, SpectralProjection};
use crate::numerics::{diff1, diff2, fit_line, linspace, uniform_spacing};

/// Rescaled profile around a neck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicFrame {
    pub n: usize,
    /// Singular time used for the rescaling.
    pub t_used: f64,
    pub tau: f64,
    pub sigma: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Set when `τ < 1`, where the asymptotics are not yet meaningful.
    pub early: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicOptions {
    pub sigma_max: f64,
    pub nodes: usize,
}

impl Default for ParabolicOptions {
    fn default() -> Self {
        ParabolicOptions { sigma_max: 12.0, nodes: 961 }
    }
}

/// Samples `U` on a uniform σ grid centered on the neck at `neck_s`.
///
/// The grid is clipped to the arclength range of the profile, so frames of
/// early snapshots may cover less than `sigma_max`.
pub fn to_parabolic(p: &ArcProfile, t_sing: f64, neck_s: f64, opts: &ParabolicOptions) -> Result<ParabolicFrame> {
    let theta = time_to_go(t_sing, p.t)?;
    let tau = -theta.ln();
    let root = theta.sqrt();
    let scale = (2.0 * (p.n as f64 - 1.0) * theta).sqrt();
    let (s_lo, s_hi) = p.s_range();
    let mut sigma = Vec::new();
    let mut u = Vec::new();
    for sg in linspace(-opts.sigma_max, opts.sigma_max, opts.nodes) {
        let s = neck_s + sg * root;
        if s < s_lo || s > s_hi {
            continue;
        }
        sigma.push(sg);
        u.push(p.psi_at(s) / scale);
    }
    if sigma.len() < 5 {
        return Err(Error::OutOfRegime(format!("only {} σ samples inside the profile at τ = {tau:.3}", sigma.len())));
    }
    let v = u.iter().map(|x| x - 1.0).collect();
    Ok(ParabolicFrame { n: p.n, t_used: t_sing, tau, sigma, u, v, early: tau < 1.0 })
}

/// Pointwise residual of the `U` equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UResidual {
    /// Midpoint time of the two frames.
    pub tau: f64,
    pub sigma: Vec<f64>,
    pub residual: Vec<f64>,
}

impl UResidual {
    /// Largest `|residual|` on `|σ| ≤ bound`.
    pub fn sup_within(&self, bound: f64) -> f64 {
        self.sigma
            .iter()
            .zip(&self.residual)
            .filter(|(s, _)| s.abs() <= bound)
            .map(|(_, r)| r.abs())
            .fold(0.0, f64::max)
    }
}

/// `U_τ - [U_σσ - (σ/2 + nI)U_σ + (n-1)U_σ²/U + (U - 1/U)/2]` between two
/// frames, evaluated at the midpoint in τ.
pub fn u_evolution_residual(a: &ParabolicFrame, b: &ParabolicFrame) -> Result<UResidual> {
    let dtau = b.tau - a.tau;
    if !(dtau.abs() > 0.0) || dtau.abs() > 0.5 {
        return Err(Error::TimeStep(format!("frames are Δτ = {dtau:.3} apart, need 0 < |Δτ| ≤ 0.5")));
    }
    if a.sigma != b.sigma {
        return Err(Error::Domain("frames must share one σ grid".into()));
    }
    let sigma = &a.sigma;
    let h = uniform_spacing(sigma)?;
    let n = a.n as f64;
    let u: Vec<f64> = a.u.iter().zip(&b.u).map(|(x, y)| 0.5 * (x + y)).collect();
    let u1 = diff1(&u, h)?;
    let u2 = diff2(&u, h)?;
    let i = nonlocal_i(sigma, &u)?;
    let residual = (0..u.len())
        .map(|j| {
            let ut = (b.u[j] - a.u[j]) / dtau;
            let rhs = u2[j] - (0.5 * sigma[j] + n * i[j]) * u1[j]
                + (n - 1.0) * u1[j] * u1[j] / u[j]
                + 0.5 * (u[j] - 1.0 / u[j]);
            ut - rhs
        })
        .collect();
    Ok(UResidual { tau: 0.5 * (a.tau + b.tau), sigma: sigma.clone(), residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeOptions {
    /// Coefficients below this magnitude at the latest time are ignored.
    pub noise_floor: f64,
    /// Largest accepted gap between the fitted log-slope and `λ_k`.
    pub slope_tol: f64,
}

impl Default for ModeOptions {
    fn default() -> Self {
        ModeOptions { noise_floor: 1e-13, slope_tol: 0.2 }
    }
}

/// Dominant eigenmode of a sequence of projections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFit {
    pub k: usize,
    /// Extrapolated constant `b_k` in `V ≈ b_k e^{λ_k τ} h_k`.
    pub b_k: FitReport,
    /// Fitted slope of `log|b_k|` against τ.
    pub slope: f64,
    /// Set when `b_0` is above the noise floor; `T` should then be adjusted.
    pub b0_present: bool,
    pub b0_latest: f64,
    /// `(k, slope, latest |b_k|)` for every mode above the noise floor.
    pub candidates: Vec<(usize, f64, f64)>,
}

/// Finds the mode `k ≥ 3` whose coefficients decay like `e^{λ_k τ}`.
///
/// Among modes whose log-slope is within `slope_tol` of `λ_k = 1 - k/2`,
/// the one with the largest amplitude at the latest time wins.
pub fn fit_dominant_mode(projections: &[SpectralProjection], opts: &ModeOptions) -> Result<ModeFit> {
    if projections.len() < 4 {
        return Err(Error::Precondition(format!("need ≥ 4 projections, got {}", projections.len())));
    }
    let mut proj: Vec<&SpectralProjection> = projections.iter().collect();
    proj.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    let (tau0, tau1) = (proj[0].tau, proj[proj.len() - 1].tau);
    if tau1 - tau0 < 1.0 {
        return Err(Error::Precondition(format!("projections span Δτ = {:.3}, need ≥ 1", tau1 - tau0)));
    }
    let k_max = proj.iter().map(|p| p.k_max()).min().unwrap_or(0);
    let taus: Vec<f64> = proj.iter().map(|p| p.tau).collect();
    let latest = proj[proj.len() - 1];
    let mut candidates = Vec::new();
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for k in 3..=k_max {
        let amps: Vec<f64> = proj.iter().map(|p| p.coefficients[k].abs()).collect();
        let late = amps[amps.len() - 1];
        if !(late > opts.noise_floor) || amps.iter().any(|a| !(*a > 0.0)) {
            continue;
        }
        let logs: Vec<f64> = amps.iter().map(|a| a.ln()).collect();
        let line = fit_line(&taus, &logs)?;
        candidates.push((k, line.slope, late));
        if (line.slope - eigenvalue(k)).abs() < opts.slope_tol && best.is_none_or(|b| late > b.2) {
            best = Some((k, line.slope, late, line.rms));
        }
    }
    let Some((k, slope, _, rms)) = best else {
        return Err(Error::NoMode(if candidates.is_empty() {
            "all coefficients with k ≥ 3 are below the noise floor".into()
        } else {
            format!("no mode decays at its eigenvalue rate; candidates (k, slope, amplitude): {candidates:?}")
        }));
    };
    let lambda = eigenvalue(k);
    let consts: Vec<f64> = proj.iter().map(|p| p.coefficients[k] * (-lambda * p.tau).exp()).collect();
    let mean = consts.iter().sum::<f64>() / consts.len() as f64;
    let spread = (consts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / consts.len() as f64).sqrt();
    let mut report = FitReport::new(mean, (tau0, tau1), spread, consts.len());
    report.extras.insert("log_slope_rms".into(), rms);
    report.extras.insert("lambda_k".into(), lambda);
    let b0_latest = latest.coefficients[0];
    let b0_present = b0_latest.abs() > opts.noise_floor.max(1e-6 * latest.coefficients[k].abs());
    Ok(ModeFit { k, b_k: report, slope, b0_present, b0_latest, candidates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{hermite_value, project};

    fn synthetic(tau: f64, f: impl Fn(f64, f64) -> f64) -> SpectralProjection {
        let sigma = linspace(-12.0, 12.0, 961);
        let v: Vec<f64> = sigma.iter().map(|&s| f(s, tau)).collect();
        project(&sigma, &v, 6, tau).unwrap()
    }

    #[test]
    fn exact_cylinder_frame() {
        let (n, t_sing) = (2, 1.0);
        let t = t_sing - (-5.0f64).exp();
        let r = (2.0 * (t_sing - t)).sqrt();
        let s = linspace(-1.0, 1.0, 201);
        let p = ArcProfile::new(n, t, s.clone(), vec![r; 201], vec![0.0; 201]).unwrap();
        let f = to_parabolic(&p, t_sing, 0.0, &ParabolicOptions::default()).unwrap();
        assert!((f.tau - 5.0).abs() < 1e-12);
        assert!(f.v.iter().all(|v| v.abs() < 1e-12));
        assert!(!f.early);
        let t2 = t_sing - (-5.2f64).exp();
        let r2 = (2.0 * (t_sing - t2)).sqrt();
        let p2 = ArcProfile::new(n, t2, s, vec![r2; 201], vec![0.0; 201]).unwrap();
        let g = to_parabolic(&p2, t_sing, 0.0, &ParabolicOptions { sigma_max: 12.0, nodes: f.sigma.len() }).unwrap();
        assert_eq!(g.sigma, f.sigma);
        let res = u_evolution_residual(&f, &g).unwrap();
        assert!(res.sup_within(2.0) < 1e-10);
        assert!(matches!(to_parabolic(&p2, t2, 0.0, &ParabolicOptions::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn eigenmode_round_trip() {
        // U = 1 + b₃ e^{-τ/2} h₃(σ) with b₃ = -1/2
        let (n, t_sing, tau) = (2usize, 0.0, 6.0f64);
        let theta = (-tau).exp();
        let s: Vec<f64> = linspace(-14.0, 14.0, 2801).iter().map(|x| x * theta.sqrt()).collect();
        let scale = (2.0 * theta).sqrt();
        let amp = -0.5 * (-0.5 * tau).exp();
        let psi: Vec<f64> = s.iter().map(|&x| scale * (1.0 + amp * hermite_value(3, x / theta.sqrt()))).collect();
        let dpsi: Vec<f64> = s
            .iter()
            .map(|&x| {
                let sg = x / theta.sqrt();
                scale * amp * (3.0 * sg * sg - 6.0) / theta.sqrt()
            })
            .collect();
        let p = ArcProfile::new(n, t_sing - theta, s, psi, dpsi).unwrap();
        let f = to_parabolic(&p, t_sing, 0.0, &ParabolicOptions::default()).unwrap();
        let pr = project(&f.sigma, &f.v, 6, f.tau).unwrap();
        assert!((pr.coefficients[3] * (0.5 * tau).exp() + 0.5).abs() < 1e-6, "{:?}", pr.coefficients);
    }

    #[test]
    fn dominant_mode_of_a_synthetic_sum() {
        let projs: Vec<_> = [4.0, 4.5, 5.0, 5.5, 6.0]
            .iter()
            .map(|&tau| {
                synthetic(tau, |s, t| {
                    -0.5 * (-0.5 * t).exp() * hermite_value(3, s) + 1e-4 * (-t).exp() * hermite_value(4, s)
                })
            })
            .collect();
        let fit = fit_dominant_mode(&projs, &ModeOptions::default()).unwrap();
        assert_eq!(fit.k, 3);
        assert!((fit.b_k.fitted_value + 0.5).abs() < 1e-3);
        assert!(!fit.b0_present);
    }

    #[test]
    fn b0_is_flagged() {
        let projs: Vec<_> = [4.0, 4.5, 5.0, 5.5]
            .iter()
            .map(|&tau| synthetic(tau, |s, t| 1e-3 * t.exp() + -0.5 * (-0.5 * t).exp() * hermite_value(3, s)))
            .collect();
        let fit = fit_dominant_mode(&projs, &ModeOptions::default()).unwrap();
        assert!(fit.b0_present);
    }

    #[test]
    fn no_mode_is_reported() {
        let projs: Vec<_> = [4.0, 4.5, 5.0, 5.5].iter().map(|&tau| synthetic(tau, |_, _| 0.0)).collect();
        assert!(matches!(fit_dominant_mode(&projs, &ModeOptions::default()), Err(Error::NoMode(_))));
        assert!(matches!(fit_dominant_mode(&projs[..3], &ModeOptions::default()), Err(Error::Precondition(_))));
    }
}
