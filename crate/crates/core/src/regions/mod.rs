//! Rescaled views of a profile near a singular time and the constants that
//! tie the regions together.
//!
//! Every frame works from an [`ArcProfile`]: radius samples along arclength
//! at one instant. Simulation snapshots and the composite model both produce
//! them, so the same analysis code runs on either.

pub mod composite;
pub mod intermediate;
pub mod parabolic;
pub mod tip;

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::Snapshot;
use crate::geometry::s_derivatives;
use crate::numerics::interp_hermite;

pub use composite::{BlendConfig, CompositeModel, RegionKind, RegionResidual, ResidualField};
pub use intermediate::{
    fit_c, intermediate_profile, intermediate_slope, outer_profile, to_intermediate, IntermediateFrame,
};
pub use parabolic::{
    fit_dominant_mode, to_parabolic, u_evolution_residual, ModeFit, ModeOptions, ParabolicFrame, ParabolicOptions,
};
pub use tip::{blowup_fit, compare_tip, to_tip, BlowupFit, TipComparison, TipFrame};

/// Radius samples `ψ(s)` and slopes `ψ_s(s)` along arclength at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcProfile {
    pub n: usize,
    pub t: f64,
    /// Strictly increasing arclength positions.
    pub s: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_s: Vec<f64>,
}

impl ArcProfile {
    pub fn new(n: usize, t: f64, s: Vec<f64>, psi: Vec<f64>, psi_s: Vec<f64>) -> Result<Self> {
        if s.len() < 5 || psi.len() != s.len() || psi_s.len() != s.len() {
            return Err(Error::Domain("profile needs ≥ 5 samples of equal length".into()));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("arclength samples must increase strictly".into()));
        }
        Ok(ArcProfile { n, t, s, psi, psi_s })
    }

    /// Arclength profile of a simulation snapshot (`s` measured from `x = 0`).
    pub fn from_snapshot(snap: &Snapshot) -> Self {
        let d = s_derivatives(&snap.grid);
        ArcProfile {
            n: snap.grid.n,
            t: snap.grid.t,
            s: snap.frame.s.clone(),
            psi: snap.grid.psi.clone(),
            psi_s: d.psi_s,
        }
    }

    pub fn s_range(&self) -> (f64, f64) {
        (self.s[0], self.s[self.s.len() - 1])
    }

    pub fn contains(&self, s: f64) -> bool {
        let (a, b) = self.s_range();
        s >= a && s <= b
    }

    /// Cubic Hermite interpolant of `ψ` built from the stored slopes.
    pub fn psi_at(&self, s: f64) -> f64 {
        interp_hermite(&self.s, &self.psi, &self.psi_s, s)
    }
}

/// Constants shared by the parabolic, intermediate and tip regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingConstants {
    pub n: usize,
    pub k: usize,
    pub c: f64,
    /// Tip scale `a = k(n-1)/(2c)`.
    pub a: f64,
    /// Parabolic coefficient `b_k = -c^{-k}/2`.
    pub b_k: f64,
    /// Exponent `1 - 1/k` of the tip expansion factor.
    pub gamma_exponent: Ratio<i64>,
}

impl MatchingConstants {
    /// `Γ = (T - t)^{-(1-1/k)}`.
    pub fn gamma(&self, theta: f64) -> f64 {
        theta.powf(-(1.0 - 1.0 / self.k as f64))
    }

    /// Predicted pole curvature exponent `2 - 2/k`.
    pub fn blowup_exponent(&self) -> f64 {
        2.0 - 2.0 / self.k as f64
    }
}

pub fn matching_constants(n: usize, k: usize, c: f64) -> Result<MatchingConstants> {
    if n < 2 {
        return Err(Error::Precondition(format!("n = {n}: the fiber sphere needs n ≥ 2")));
    }
    if k <= 2 {
        return Err(Error::Rejected(format!(
            "k = {k}: a degenerate mode needs k ≥ 3, since k ≤ 2 is not orthogonal to the kernel"
        )));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Precondition(format!("c = {c} must be positive")));
    }
    let kf = k as f64;
    Ok(MatchingConstants {
        n,
        k,
        c,
        a: kf * (n as f64 - 1.0) / (2.0 * c),
        b_k: -0.5 * c.powi(-(k as i32)),
        gamma_exponent: Ratio::new(k as i64 - 1, k as i64),
    })
}

/// Result of a one-parameter fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fitted_value: f64,
    /// Range of the independent variable used by the fit.
    pub window: (f64, f64),
    /// Root mean square residual of the fit.
    pub residual: f64,
    /// Change of `fitted_value` under `T ± δ`, when it was measured.
    pub sensitivity: Option<f64>,
    pub samples: usize,
    /// Auxiliary quantities derived from the fitted value.
    pub extras: BTreeMap<String, f64>,
}

impl FitReport {
    pub(crate) fn new(fitted_value: f64, window: (f64, f64), residual: f64, samples: usize) -> Self {
        FitReport { fitted_value, window, residual, sensitivity: None, samples, extras: BTreeMap::new() }
    }
}

/// `T - t`, or a precondition error if the time is not before `T`.
pub(crate) fn time_to_go(t_sing: f64, t: f64) -> Result<f64> {
    let theta = t_sing - t;
    if !(theta > 0.0) {
        return Err(Error::Precondition(format!("t = {t} is not before T = {t_sing}")));
    }
    Ok(theta)
}
