//! Composite profile gluing the parabolic, intermediate, outer and tip
//! descriptions of a degenerate neckpinch, and its residual in the flow.
//!
//! Arclength `s` is measured from the neck. The right pole sits at
//! `s_p = c(T-t)^{1/k}`; for even `k` the profile is mirrored in `s`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{time_to_go, ArcProfile, MatchingConstants};
use crate::bryant::{BryantProfile, CapCoordinate};
use crate::error::{Error, Result};
use crate::hermite::{hermite, Polynomial};
use crate::numerics::{adaptive_simpson, linspace, smoothstep, smoothstep_slope};

/// Interface positions and widths of the partition of unity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlendConfig {
    /// Parabolic–intermediate interface at `|ρ| = rho_pi·c`.
    pub rho_pi: f64,
    /// Intermediate–tip interface at `ξ = xi_scale·e^{(1/2-1/k)τ}`, that is
    /// at pole distance `xi_scale·√(T-t)`.
    pub xi_scale: f64,
    /// Half width of each blend zone relative to its center.
    pub width: f64,
    /// Overlap constant of the region windows.
    pub epsilon: f64,
}

impl Default for BlendConfig {
    fn default() -> Self {
        BlendConfig { rho_pi: 0.3, xi_scale: 1.0, width: 0.2, epsilon: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Parabolic,
    Intermediate,
    Outer,
    Tip,
}

impl RegionKind {
    pub const ALL: [RegionKind; 4] =
        [RegionKind::Parabolic, RegionKind::Intermediate, RegionKind::Outer, RegionKind::Tip];

    pub fn name(self) -> &'static str {
        match self {
            RegionKind::Parabolic => "parabolic",
            RegionKind::Intermediate => "intermediate",
            RegionKind::Outer => "outer",
            RegionKind::Tip => "tip",
        }
    }
}

/// Nondimensional residual of the flow on an arclength grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualField {
    pub t: f64,
    pub tau: f64,
    pub s: Vec<f64>,
    /// Residual divided by the largest of the four equation terms.
    pub residual: Vec<f64>,
    /// The dividing term magnitude at each point.
    pub scale: Vec<f64>,
    /// Set when a point inside a blend zone has residual above `0.5`.
    pub blend_warning: bool,
}

/// Residual summary over one region window at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionResidual {
    pub kind: RegionKind,
    pub tau: f64,
    /// Arclength window that was sampled.
    pub window: (f64, f64),
    pub sup: f64,
    pub rms: f64,
    pub samples: usize,
}

/// The composite profile for fixed `(n, k, c)` and singular time `T`.
#[derive(Debug, Clone)]
pub struct CompositeModel {
    pub constants: MatchingConstants,
    pub t_sing: f64,
    pub blend: BlendConfig,
    pub bryant: Arc<BryantProfile>,
    cap: CapCoordinate,
    h_k: Polynomial,
    dh_k: Polynomial,
}

/// Value and arclength slope.
type Branch = (f64, f64);

impl CompositeModel {
    pub fn new(
        constants: MatchingConstants,
        t_sing: f64,
        blend: BlendConfig,
        bryant: Arc<BryantProfile>,
    ) -> Result<Self> {
        if bryant.n != constants.n {
            return Err(Error::Precondition(format!(
                "soliton profile is for n = {}, constants for n = {}",
                bryant.n, constants.n
            )));
        }
        if !(blend.rho_pi > 0.0
            && blend.xi_scale > 0.0
            && blend.width > 0.0
            && blend.width < 1.0
            && blend.epsilon > 0.0)
        {
            return Err(Error::Precondition(format!("invalid blend configuration {blend:?}")));
        }
        if (1.0 + blend.width) * blend.rho_pi >= 1.0 {
            return Err(Error::Precondition("parabolic blend reaches the pole".into()));
        }
        let h_k = hermite(constants.k);
        let dh_k = h_k.derivative();
        let cap = bryant.cap_coordinate();
        Ok(CompositeModel { constants, t_sing, blend, bryant, cap, h_k, dh_k })
    }

    fn even(&self) -> bool {
        self.constants.k.is_multiple_of(2)
    }

    fn kf(&self) -> f64 {
        self.constants.k as f64
    }

    /// Arclength of the right pole, `c(T-t)^{1/k}`.
    pub fn pole(&self, t: f64) -> Result<f64> {
        let theta = time_to_go(self.t_sing, t)?;
        Ok(self.constants.c * theta.powf(1.0 / self.kf()))
    }

    /// Curvature `(1 - ψ_s²)/ψ²` at the right pole, from its small-γ limit.
    pub fn pole_curvature(&self, t: f64) -> Result<f64> {
        let theta = time_to_go(self.t_sing, t)?;
        let g = self.constants.gamma(theta);
        let r = 1e-3;
        let psi = self.constants.a * r / g;
        Ok((1.0 - self.bryant.eval(r)) / (psi * psi))
    }

    /// Parabolic branch `√(2(n-1)θ)[1 + b_k θ^{k/2-1} h_k(s/√θ)]`.
    fn parabolic(&self, s: f64, theta: f64) -> Branch {
        let amp = (2.0 * (self.constants.n as f64 - 1.0) * theta).sqrt();
        let root = theta.sqrt();
        let beta = self.constants.b_k * theta.powf(0.5 * self.kf() - 1.0);
        let sigma = s / root;
        (amp * (1.0 + beta * self.h_k.eval(sigma)), amp * beta * self.dh_k.eval(sigma) / root)
    }

    /// Intermediate and outer branch `√(2(n-1)[θ - (s/c)^k])`.
    fn intermediate(&self, s: f64, theta: f64) -> Result<Branch> {
        let c = self.constants.c;
        let arg = theta - (s / c).powi(self.constants.k as i32);
        if !(arg > 0.0) {
            return Err(Error::Domain(format!("intermediate branch evaluated at s = {s:e} beyond the pole")));
        }
        let nm = 2.0 * (self.constants.n as f64 - 1.0);
        let psi = (nm * arg).sqrt();
        let darg = -self.kf() * (s / c).powi(self.constants.k as i32 - 1) / c;
        Ok((psi, 0.5 * nm * darg / psi))
    }

    /// Tip branch `ψ = (a/Γ)G⁻¹(Γd/a)` at pole distance `d`, with `ψ_s = -√B`.
    fn tip(&self, d: f64, gamma: f64) -> Branch {
        let a = self.constants.a;
        let r = self.cap.inverse(gamma * d / a);
        (a * r / gamma, -self.bryant.eval(r).max(0.0).sqrt())
    }

    /// Blend weights `(w_I, dw_I/ds)` for the intermediate side of the
    /// parabolic interface, as functions of `ρ ≥ 0`.
    fn weight_pi(&self, rho: f64, len: f64) -> (f64, f64) {
        let center = self.blend.rho_pi * self.constants.c;
        let w = self.blend.width;
        let u = (rho - (1.0 - w) * center) / (2.0 * w * center);
        (smoothstep(u), smoothstep_slope(u) / (2.0 * w * center * len))
    }

    /// Tip weight `(w_T, dw_T/ds)` as a function of `ξ = Γd`.
    fn weight_tip(&self, xi: f64, theta: f64, gamma: f64) -> (f64, f64) {
        let xc = self.xi_center(theta);
        let w = self.blend.width;
        let u = (xi - (1.0 - w) * xc) / (2.0 * w * xc);
        (1.0 - smoothstep(u), smoothstep_slope(u) * gamma / (2.0 * w * xc))
    }

    fn xi_center(&self, theta: f64) -> f64 {
        self.blend.xi_scale * theta.powf(-(0.5 - 1.0 / self.kf()))
    }

    /// `ψ(s, t)` and `ψ_s(s, t)`.
    pub fn eval_with_slope(&self, s: f64, t: f64) -> Result<Branch> {
        let theta = time_to_go(self.t_sing, t)?;
        let sp = self.constants.c * theta.powf(1.0 / self.kf());
        let (x, sign) = if self.even() && s < 0.0 { (-s, -1.0) } else { (s, 1.0) };
        if !(x <= sp) {
            return Err(Error::Domain(format!("s = {s:e} lies beyond the pole at {sp:e}")));
        }
        let len = theta.powf(1.0 / self.kf());
        let gamma = self.constants.gamma(theta);
        let d = sp - x;
        let (wt, dwt) = self.weight_tip(gamma * d, theta, gamma);
        let tip = if wt > 0.0 { self.tip(d, gamma) } else { (0.0, 0.0) };
        let (psi, slope) = if wt >= 1.0 {
            tip
        } else {
            let rho = x / len;
            let (wi, mut dwi) = self.weight_pi(rho.abs(), len);
            if rho < 0.0 {
                dwi = -dwi;
            }
            let inter = if wi > 0.0 { self.intermediate(x, theta)? } else { (0.0, 0.0) };
            let para = if wi < 1.0 { self.parabolic(x, theta) } else { (0.0, 0.0) };
            let inner =
                (wi * inter.0 + (1.0 - wi) * para.0, wi * inter.1 + (1.0 - wi) * para.1 + dwi * (inter.0 - para.0));
            (wt * tip.0 + (1.0 - wt) * inner.0, wt * tip.1 + (1.0 - wt) * inner.1 + dwt * (tip.0 - inner.0))
        };
        if !(psi >= 0.0) {
            return Err(Error::Domain(format!("model radius {psi:e} at s = {s:e}")));
        }
        Ok((psi, sign * slope))
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.eval_with_slope(s, t)?.0)
    }

    /// Arclength range of the modeled profile: both poles for even `k`, and
    /// `[-max(4s_p, 12√θ), s_p]` for odd `k`.
    pub fn s_range(&self, t: f64) -> Result<(f64, f64)> {
        let theta = time_to_go(self.t_sing, t)?;
        let sp = self.pole(t)?;
        Ok(if self.even() { (-sp, sp) } else { (-(4.0 * sp).max(12.0 * theta.sqrt()), sp) })
    }

    /// Samples the profile on a grid graded toward the neck and the pole(s).
    pub fn sample(&self, t: f64, nodes: usize) -> Result<ArcProfile> {
        let theta = time_to_go(self.t_sing, t)?;
        let (lo, sp) = self.s_range(t)?;
        let tip_len = self.constants.a / self.constants.gamma(theta);
        let geometric = |from: f64, to: f64, m: usize| -> Vec<f64> {
            let (l0, l1) = (from.ln(), to.ln());
            (0..m).map(|i| (l0 + (l1 - l0) * i as f64 / (m - 1) as f64).exp()).collect()
        };
        let m = nodes.max(16);
        let neck_min = 1e-3 * theta.sqrt().min(sp);
        let mut s = vec![0.0, sp];
        s.extend(geometric(neck_min, sp, m));
        s.extend(geometric(1e-4 * tip_len.min(sp), sp, m).into_iter().map(|d| sp - d));
        s.extend(geometric(neck_min, -lo, m).into_iter().map(|d| -d));
        if self.even() {
            s.extend(geometric(1e-4 * tip_len.min(sp), sp, m).into_iter().map(|d| d - sp));
            s.push(-sp);
        }
        s.retain(|v| *v >= lo && *v <= sp);
        s.sort_by(f64::total_cmp);
        let scale = 1e-12 * sp;
        s.dedup_by(|b, a| (*b - *a).abs() <= scale);
        let mut psi = Vec::with_capacity(s.len());
        let mut psi_s = Vec::with_capacity(s.len());
        for &x in &s {
            let (p, d) = self.eval_with_slope(x, t)?;
            psi.push(p);
            psi_s.push(d);
        }
        ArcProfile::new(self.constants.n, t, s, psi, psi_s)
    }

    /// Arclength window of a region at time `t`, or `None` when it is empty.
    pub fn region_window(&self, kind: RegionKind, t: f64) -> Result<Option<(f64, f64)>> {
        let theta = time_to_go(self.t_sing, t)?;
        let c = self.constants.c;
        let kf = self.kf();
        let len = theta.powf(1.0 / kf);
        let root = theta.sqrt();
        let w = self.blend.width;
        let gamma = self.constants.gamma(theta);
        let sp = c * len;
        let window = match kind {
            RegionKind::Parabolic => {
                let sigma_blend = (1.0 - w) * self.blend.rho_pi * c * len / root;
                let b = (0.8 * sigma_blend).min(2.0);
                Some((-b * root, b * root))
            }
            RegionKind::Intermediate => {
                let lo = (1.0 + w) * self.blend.rho_pi * c * len;
                let hi = sp - (1.0 + w) * self.xi_center(theta) / gamma;
                (lo < hi).then_some((lo, hi))
            }
            RegionKind::Tip => {
                let near = 0.05 / gamma;
                let far = (1.0 - w) * self.xi_center(theta) / gamma;
                (near < far).then_some((sp - far, sp - near))
            }
            RegionKind::Outer => (!self.even()).then_some((-3.0 * sp, -1.5 * sp)),
        };
        Ok(window)
    }

    /// Validity intervals of the parabolic, intermediate and outer
    /// asymptotics for the overlap constant `epsilon`.
    pub fn stated_windows(&self, t: f64) -> Result<Vec<(RegionKind, (f64, f64))>> {
        let theta = time_to_go(self.t_sing, t)?;
        let e = self.blend.epsilon;
        let len = theta.powf(1.0 / self.kf());
        let sp = self.constants.c * len;
        let outer = if self.even() { (-sp, sp) } else { (-e, sp) };
        Ok(vec![
            (RegionKind::Parabolic, (e * theta.sqrt(), e * len)),
            (RegionKind::Intermediate, (e * len, len / e)),
            (RegionKind::Outer, outer),
        ])
    }

    fn in_blend(&self, s: f64, theta: f64) -> bool {
        let len = theta.powf(1.0 / self.kf());
        let gamma = self.constants.gamma(theta);
        let sp = self.constants.c * len;
        let x = if self.even() { s.abs() } else { s };
        let w = self.blend.width;
        let rc = self.blend.rho_pi * self.constants.c;
        let xc = self.xi_center(theta);
        let rho = x.abs() / len;
        let xi = gamma * (sp - x);
        (rho - rc).abs() < w * rc || (xi - xc).abs() < w * xc
    }

    /// Residual of `ψ_t = ψ_ss - (n-1)(1-ψ_s²)/ψ` in a frame comoving with
    /// the neck, on the arclength points `s`.
    pub fn pde_residual(&self, t: f64, s: &[f64]) -> Result<ResidualField> {
        let theta = time_to_go(self.t_sing, t)?;
        let kf = self.kf();
        let c = self.constants.c;
        let root = theta.sqrt();
        let sp = self.pole(t)?;
        // steps stay inside the local length scale and clear of the moving pole
        let steps = |x: f64, psi: f64| {
            let d = sp - if self.even() { x.abs() } else { x };
            let hs = 1e-3 * psi.min(d).min(root);
            let ht = (1e-3 * theta).min(0.1 * d * kf * theta.powf(1.0 - 1.0 / kf) / c);
            (hs, ht)
        };
        let f = |x: f64, tt: f64| self.eval_with_slope(x, tt);
        let (raw, scale) = comoving_residual(self.constants.n, &f, t, s, &steps)?;
        let mut warn = false;
        let residual: Vec<f64> = raw
            .iter()
            .zip(&scale)
            .zip(s)
            .map(|((r, m), x)| {
                let v = r / m;
                if v.abs() > 0.5 && self.in_blend(*x, theta) {
                    warn = true;
                }
                v
            })
            .collect();
        Ok(ResidualField { t, tau: -theta.ln(), s: s.to_vec(), residual, scale, blend_warning: warn })
    }

    /// Sup and rms residual on every nonempty region window at time `t`.
    pub fn region_residuals(&self, t: f64, samples: usize) -> Result<Vec<RegionResidual>> {
        let tau = -time_to_go(self.t_sing, t)?.ln();
        let mut out = Vec::new();
        for kind in RegionKind::ALL {
            let Some((lo, hi)) = self.region_window(kind, t)? else { continue };
            let s = linspace(lo, hi, samples.max(2));
            let field = self.pde_residual(t, &s)?;
            let sup = field.residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
            let rms = (field.residual.iter().map(|r| r * r).sum::<f64>() / s.len() as f64).sqrt();
            out.push(RegionResidual { kind, tau, window: (lo, hi), sup, rms, samples: s.len() });
        }
        Ok(out)
    }

    /// Time `t` at which `τ = -log(T - t)`.
    pub fn time_at(&self, tau: f64) -> f64 {
        self.t_sing - (-tau).exp()
    }
}

/// Raw residual `ψ_t + Jψ_s - ψ_ss + (n-1)(1-ψ_s²)/ψ` and the largest term
/// magnitude at each point, for a profile given as `f(s, t) = (ψ, ψ_s)`.
///
/// `ψ_t` is taken at fixed `s`; `J(s) = ∫₀^s nψ_ss/ψ` is the drift of
/// arclength relative to the point `s = 0`, integrated by parts as
/// `n[ψ_s/ψ]₀^s + n∫₀^s (ψ_s/ψ)²`. `steps(s, ψ)` gives the difference steps
/// in `s` and `t`.
pub fn comoving_residual<F, H>(n: usize, f: &F, t: f64, s: &[f64], steps: &H) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(f64, f64) -> Result<(f64, f64)>,
    H: Fn(f64, f64) -> (f64, f64),
{
    let nf = n as f64;
    let (psi0, slope0) = f(0.0, t)?;
    let ratio_sq = |x: f64| match f(x, t) {
        Ok((p, d)) => (d / p).powi(2),
        Err(_) => f64::NAN,
    };
    let mut raw = Vec::with_capacity(s.len());
    let mut scale = Vec::with_capacity(s.len());
    for &x in s {
        let (psi, ps) = f(x, t)?;
        let (hs, ht) = steps(x, psi);
        let slope = |y: f64| f(y, t).map(|v| v.1);
        let pss =
            (-slope(x + 2.0 * hs)? + 8.0 * slope(x + hs)? - 8.0 * slope(x - hs)? + slope(x - 2.0 * hs)?) / (12.0 * hs);
        let at = |tt: f64| f(x, tt).map(|v| v.0);
        let pt = (-at(t + 2.0 * ht)? + 8.0 * at(t + ht)? - 8.0 * at(t - ht)? + at(t - 2.0 * ht)?) / (12.0 * ht);
        let tol = 1e-12 * (1.0 + x.abs() * (ps / psi).powi(2));
        let integral =
            if x >= 0.0 { adaptive_simpson(&ratio_sq, 0.0, x, tol) } else { -adaptive_simpson(&ratio_sq, x, 0.0, tol) };
        if !integral.is_finite() {
            return Err(Error::Domain(format!("drift integral undefined up to s = {x:e}")));
        }
        let j = nf * (ps / psi - slope0 / psi0) + nf * integral;
        let terms = [pt, j * ps, pss, (nf - 1.0) * (1.0 - ps * ps) / psi];
        raw.push(terms[0] + terms[1] - terms[2] + terms[3]);
        scale.push(terms.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    Ok((raw, scale))
}
