//! Time integration of the profile system
//!
//! ```text
//! ψ_t = ψ_ss - (n-1)(1 - ψ_s²)/ψ,     φ_t = n (ψ_ss/ψ) φ,
//! ```
//!
//! on the fixed `x` grid, with classical fourth-order Runge–Kutta in time and
//! the spatial stencils of [`crate::geometry`]. A run stops when the curvature
//! reaches `k_stop`, when `ψ` drops below `psi_floor`, or at the horizon, and
//! the stored snapshots are classified afterwards.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    arclength, check_assumptions, curvatures, detect_extrema, make_initial, s_derivatives, s_derivatives_into,
    ArclengthFrame, ExtremaReport, InitialFamily, ProfileGrid, DEFAULT_FLAT_TOL,
};
use crate::numerics::fit_line;

/// Settings of a flow run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub cfl_safety: f64,
    /// Halt once `max(|K|, |L|)` reaches this value.
    pub k_stop: f64,
    /// Halt once interior `ψ` drops below this value.
    pub psi_floor: f64,
    /// Time horizon.
    pub t_max: f64,
    /// Snapshot whenever the maximal curvature grew by this factor.
    pub snapshot_growth: f64,
    /// Snapshot at least this often in time.
    pub snapshot_dt: f64,
    pub max_steps: u64,
    /// Stop as soon as no neck is left (used by bisection searches).
    pub stop_on_neck_loss: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cfl_safety: 0.2,
            k_stop: 1e6,
            psi_floor: 1e-8,
            t_max: 10.0,
            snapshot_growth: 2.0,
            snapshot_dt: 0.01,
            max_steps: 200_000_000,
            stop_on_neck_loss: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Precondition(format!("cfl_safety = {} outside (0, 1]", self.cfl_safety)));
        }
        if !(self.k_stop > 0.0) || !(self.psi_floor > 0.0) || !(self.t_max > 0.0) {
            return Err(Error::Precondition("k_stop, psi_floor and t_max must be positive".into()));
        }
        if !(self.snapshot_growth > 1.0) || !(self.snapshot_dt > 0.0) {
            return Err(Error::Precondition("snapshot_growth must exceed 1 and snapshot_dt be positive".into()));
        }
        Ok(())
    }
}

/// Scratch buffers for the right-hand side.
struct Workspace {
    psi_s: Vec<f64>,
    psi_ss: Vec<f64>,
    /// `ψ` and `φ` with two ghost nodes at each end.
    psi_pad: Vec<f64>,
    phi_pad: Vec<f64>,
}

/// Copies `f` into `pad` with two ghosts per side of the given parity.
fn fill_padded(f: &[f64], pad: &mut [f64], parity: f64) {
    let m = f.len();
    pad[2..m + 2].copy_from_slice(f);
    pad[0] = parity * f[2];
    pad[1] = parity * f[1];
    pad[m + 2] = parity * f[m - 2];
    pad[m + 3] = parity * f[m - 3];
}

impl Workspace {
    fn new(m: usize) -> Self {
        Workspace { psi_s: vec![0.0; m], psi_ss: vec![0.0; m], psi_pad: vec![0.0; m + 4], phi_pad: vec![0.0; m + 4] }
    }

    /// Rates of `(φ, ψ)` with the tangential gauge term `W = φ_x/φ³` added.
    ///
    /// The added field reparametrizes `x` without changing the geometry. It
    /// turns the `φ` equation into a diffusion and cancels the transport term
    /// in the `ψ` equation, which is what keeps the pole region stable. `W`
    /// vanishes at the poles, so they stay at `x = ±1`. Pole values are set by
    /// [`pole_constraint`] instead of being integrated.
    fn rates(&mut self, n: f64, h: f64, phi: &[f64], psi: &[f64], dphi: &mut [f64], dpsi: &mut [f64]) {
        let m = psi.len();
        fill_padded(psi, &mut self.psi_pad, -1.0);
        fill_padded(phi, &mut self.phi_pad, 1.0);
        let (c1, c2) = (1.0 / (12.0 * h), 1.0 / (12.0 * h * h));
        let (q, g) = (&self.psi_pad, &self.phi_pad);
        for i in 1..m - 1 {
            let j = i + 2;
            let px = (-q[j + 2] + 8.0 * (q[j + 1] - q[j - 1]) + q[j - 2]) * c1;
            let pxx = (-q[j + 2] + 16.0 * (q[j + 1] + q[j - 1]) - 30.0 * q[j] - q[j - 2]) * c2;
            let fx = (-g[j + 2] + 8.0 * (g[j + 1] - g[j - 1]) + g[j - 2]) * c1;
            let fxx = (-g[j + 2] + 16.0 * (g[j + 1] + g[j - 1]) - 30.0 * g[j] - g[j - 2]) * c2;
            let p = psi[i];
            let inv_f = 1.0 / phi[i];
            let inv_f2 = inv_f * inv_f;
            let ps = px * inv_f;
            let pss = (pxx - fx * px * inv_f) * inv_f2;
            dpsi[i] = pxx * inv_f2 - (n - 1.0) * (1.0 - ps * ps) / p;
            dphi[i] = n * pss / p * phi[i] + (fxx - 2.0 * fx * fx * inv_f) * inv_f2;
        }
        dpsi[0] = 0.0;
        dpsi[m - 1] = 0.0;
        dphi[0] = 0.0;
        dphi[m - 1] = 0.0;
    }
}

/// Classical four-stage Runge–Kutta integrator with reusable buffers.
pub struct Stepper {
    ws: Workspace,
    k: [Vec<f64>; 8],
    tmp_phi: Vec<f64>,
    tmp_psi: Vec<f64>,
}

impl Stepper {
    pub fn new(nodes: usize) -> Self {
        Stepper {
            ws: Workspace::new(nodes),
            k: std::array::from_fn(|_| vec![0.0; nodes]),
            tmp_phi: vec![0.0; nodes],
            tmp_psi: vec![0.0; nodes],
        }
    }

    /// `max(|K|, |L|, 1)` over the interior, reusing the stepper buffers.
    pub fn max_curvature(&mut self, grid: &ProfileGrid) -> f64 {
        s_derivatives_into(&grid.phi, &grid.psi, grid.h(), &mut self.ws.psi_s, &mut self.ws.psi_ss);
        max_curvature_from(&grid.psi, &self.ws.psi_s, &self.ws.psi_ss)
    }

    /// Advances `grid` in place by `dt`. On a floor violation the grid is
    /// left untouched and the offending node is reported.
    pub fn advance(&mut self, grid: &mut ProfileGrid, dt: f64, psi_floor: f64) -> Result<()> {
        let m = grid.nodes();
        let n = grid.n as f64;
        let h = grid.h();
        let [k1f, k1p, k2f, k2p, k3f, k3p, k4f, k4p] = &mut self.k;
        self.ws.rates(n, h, &grid.phi, &grid.psi, k1f, k1p);
        for i in 0..m {
            self.tmp_phi[i] = grid.phi[i] + 0.5 * dt * k1f[i];
            self.tmp_psi[i] = grid.psi[i] + 0.5 * dt * k1p[i];
        }
        pole_constraint(h, &mut self.tmp_phi, &self.tmp_psi);
        self.ws.rates(n, h, &self.tmp_phi, &self.tmp_psi, k2f, k2p);
        for i in 0..m {
            self.tmp_phi[i] = grid.phi[i] + 0.5 * dt * k2f[i];
            self.tmp_psi[i] = grid.psi[i] + 0.5 * dt * k2p[i];
        }
        pole_constraint(h, &mut self.tmp_phi, &self.tmp_psi);
        self.ws.rates(n, h, &self.tmp_phi, &self.tmp_psi, k3f, k3p);
        for i in 0..m {
            self.tmp_phi[i] = grid.phi[i] + dt * k3f[i];
            self.tmp_psi[i] = grid.psi[i] + dt * k3p[i];
        }
        pole_constraint(h, &mut self.tmp_phi, &self.tmp_psi);
        self.ws.rates(n, h, &self.tmp_phi, &self.tmp_psi, k4f, k4p);
        let c = dt / 6.0;
        for i in 0..m {
            self.tmp_phi[i] = grid.phi[i] + c * (k1f[i] + 2.0 * k2f[i] + 2.0 * k3f[i] + k4f[i]);
            self.tmp_psi[i] = grid.psi[i] + c * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
        }
        pole_constraint(h, &mut self.tmp_phi, &self.tmp_psi);
        for i in 1..m - 1 {
            let p = self.tmp_psi[i];
            if !(p >= psi_floor) || !self.tmp_phi[i].is_finite() || !(self.tmp_phi[i] > 0.0) {
                return Err(Error::SingularProfile { x: grid.x[i], psi: p });
            }
        }
        std::mem::swap(&mut grid.phi, &mut self.tmp_phi);
        std::mem::swap(&mut grid.psi, &mut self.tmp_psi);
        grid.t += dt;
        Ok(())
    }
}

/// One time step with the default `ψ` floor.
pub fn step(grid: &ProfileGrid, dt: f64) -> Result<ProfileGrid> {
    step_with_floor(grid, dt, SolverConfig::default().psi_floor)
}

pub fn step_with_floor(grid: &ProfileGrid, dt: f64, psi_floor: f64) -> Result<ProfileGrid> {
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!("time step {dt} must be positive")));
    }
    let mut out = grid.clone();
    Stepper::new(grid.nodes()).advance(&mut out, dt, psi_floor)?;
    Ok(out)
}

fn max_curvature_from(psi: &[f64], psi_s: &[f64], psi_ss: &[f64]) -> f64 {
    let mut kmax: f64 = 1.0;
    for i in 1..psi.len() - 1 {
        let p = psi[i];
        let k = (psi_ss[i] / p).abs();
        let l = ((1.0 - psi_s[i] * psi_s[i]) / (p * p)).abs();
        kmax = kmax.max(k).max(l);
    }
    kmax
}

fn max_curvature_fast(grid: &ProfileGrid) -> f64 {
    let d = s_derivatives(grid);
    max_curvature_from(&grid.psi, &d.psi_s, &d.psi_ss)
}

fn dt_from(grid: &ProfileGrid, cfg: &SolverConfig, kmax: f64) -> f64 {
    let ds_min = grid.phi.iter().cloned().fold(f64::INFINITY, f64::min) * grid.h();
    cfg.cfl_safety * (0.5 * ds_min * ds_min).min(1.0 / kmax)
}

/// Time step `cfl_safety · min(Δs_min²/2, 1/max(|K|, |L|, 1))`.
pub fn choose_dt(grid: &ProfileGrid, cfg: &SolverConfig) -> f64 {
    dt_from(grid, cfg, max_curvature_fast(grid))
}

/// Scalars recorded with every snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    /// Radius of the smallest neck, if any.
    pub psi_min: Option<f64>,
    pub psi_min_s: Option<f64>,
    pub psi_max: f64,
    pub k_pole_right: f64,
    pub k_pole_left: f64,
    pub k_max: f64,
    pub k_max_s: f64,
    pub extrema: ExtremaReport,
    /// Smallest `1 - ψ_s²` over the interior.
    pub slope_gap_min: f64,
    pub s_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: ProfileGrid,
    pub frame: ArclengthFrame,
    pub diagnostics: Diagnostics,
}

impl Snapshot {
    pub fn new(grid: ProfileGrid) -> Result<Self> {
        let frame = arclength(&grid)?;
        let curv = curvatures(&grid)?;
        let extrema = detect_extrema(&grid, &frame, DEFAULT_FLAT_TOL);
        let der = s_derivatives(&grid);
        let m = grid.nodes();
        let neck = extrema.smallest_neck();
        let imax = curv.argmax_abs();
        let slope_gap_min = (1..m - 1).map(|i| 1.0 - der.psi_s[i].powi(2)).fold(f64::INFINITY, f64::min);
        let diagnostics = Diagnostics {
            t: grid.t,
            psi_min: neck.map(|e| e.psi),
            psi_min_s: neck.map(|e| e.s),
            psi_max: grid.psi.iter().cloned().fold(0.0, f64::max),
            k_pole_right: curv.pole_right(),
            k_pole_left: curv.pole_left(),
            k_max: curv.max_abs(),
            k_max_s: frame.s[imax],
            extrema,
            slope_gap_min,
            s_total: frame.s_total,
        };
        Ok(Snapshot { grid, frame, diagnostics })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularityKind {
    InteriorNeckpinch,
    PolarDegenerateCandidate,
    TotalShrink,
    NoneBeforeHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TEstimateMethod {
    /// Line through `ψ_min²` against `t`.
    NeckRadiusFit,
    /// Line through `(max ψ)²` against `t`.
    MaxRadiusFit,
    /// Line through `K_pole^{-1/q}` against `t` with `q` fitted.
    PoleCurvatureFit,
    /// No fit possible; the last recorded time.
    LastTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub kind: SingularityKind,
    pub t_est: f64,
    pub t_est_method: TEstimateMethod,
    pub location_s: f64,
    pub low_confidence: bool,
    pub evidence: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    CurvatureLimit,
    PsiFloor {
        x: f64,
        psi: f64,
    },
    Horizon,
    StepLimit,
    NeckLost,
    /// NaN or grid-scale oscillation; dt or resolution should be revisited.
    Unstable {
        t: f64,
        detail: String,
    },
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub snapshots: Vec<Snapshot>,
    pub report: SingularityReport,
    pub stop: StopReason,
    pub steps: u64,
}

impl RunResult {
    pub fn aborted(&self) -> bool {
        matches!(self.stop, StopReason::Unstable { .. })
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a run always records its initial state")
    }
}

/// Relative size of the grid-scale (Nyquist) component of `ψ`.
fn nyquist_indicator(psi: &[f64]) -> f64 {
    let m = psi.len();
    let mut worst: f64 = 0.0;
    for i in 2..m - 2 {
        let d4 = psi[i - 2] - 4.0 * psi[i - 1] + 6.0 * psi[i] - 4.0 * psi[i + 1] + psi[i + 2];
        worst = worst.max(d4.abs() / psi[i]);
    }
    worst
}

/// Integrates from `grid` until a stopping condition and classifies the run.
pub fn evolve(grid: &ProfileGrid, cfg: &SolverConfig) -> Result<RunResult> {
    cfg.validate()?;
    grid.validate()?;
    let mut g = grid.clone();
    let m = g.nodes();
    pole_constraint(g.h(), &mut g.phi, &g.psi);
    let mut stepper = Stepper::new(m);
    let mut snapshots = vec![Snapshot::new(g.clone())?];
    let mut last_k = snapshots[0].diagnostics.k_max;
    let mut last_t = g.t;
    let mut steps: u64 = 0;
    let mut kmax = stepper.max_curvature(&g);
    let stop = loop {
        if kmax >= cfg.k_stop {
            break StopReason::CurvatureLimit;
        }
        if g.t >= cfg.t_max {
            break StopReason::Horizon;
        }
        if steps >= cfg.max_steps {
            break StopReason::StepLimit;
        }
        let dt = dt_from(&g, cfg, kmax).min(cfg.t_max - g.t).max(1e-300);
        match stepper.advance(&mut g, dt, cfg.psi_floor) {
            Ok(()) => {}
            Err(Error::SingularProfile { x, psi }) if psi.is_finite() => break StopReason::PsiFloor { x, psi },
            Err(Error::SingularProfile { .. }) => {
                break StopReason::Unstable { t: g.t, detail: format!("non-finite values after dt = {dt:e}") }
            }
            Err(e) => return Err(e),
        }
        steps += 1;
        if steps.is_multiple_of(256) && nyquist_indicator(&g.psi) > 1.0 {
            break StopReason::Unstable { t: g.t, detail: "grid-scale oscillation in psi".into() };
        }
        kmax = stepper.max_curvature(&g);
        if kmax >= cfg.snapshot_growth * last_k || g.t - last_t >= cfg.snapshot_dt {
            let snap = Snapshot::new(g.clone())?;
            let lost = snap.diagnostics.extrema.necks.is_empty();
            last_k = snap.diagnostics.k_max.max(last_k);
            last_t = g.t;
            snapshots.push(snap);
            if cfg.stop_on_neck_loss && lost {
                break StopReason::NeckLost;
            }
        }
    };
    if snapshots.last().map(|s| s.grid.t) != Some(g.t) {
        if let Ok(snap) = Snapshot::new(g.clone()) {
            snapshots.push(snap);
        }
    }
    let report = classify(&snapshots, &stop);
    Ok(RunResult { snapshots, report, stop, steps })
}

/// Classifies a finished run from its snapshots.
pub fn classify(snapshots: &[Snapshot], stop: &StopReason) -> SingularityReport {
    let mut evidence = BTreeMap::new();
    let fallback = |evidence: BTreeMap<String, f64>| SingularityReport {
        kind: SingularityKind::NoneBeforeHorizon,
        t_est: snapshots.last().map_or(f64::NAN, |s| s.grid.t),
        t_est_method: TEstimateMethod::LastTime,
        location_s: f64::NAN,
        low_confidence: true,
        evidence,
    };
    if snapshots.len() < 3 {
        evidence.insert("snapshots".into(), snapshots.len() as f64);
        return fallback(evidence);
    }
    let first = &snapshots[0].diagnostics;
    let last = &snapshots[snapshots.len() - 1].diagnostics;
    let blew_up = matches!(stop, StopReason::CurvatureLimit | StopReason::PsiFloor { .. });
    let shrink = last.psi_max / first.psi_max;
    evidence.insert("psi_max_ratio".into(), shrink);
    evidence.insert("k_max_final".into(), last.k_max);
    evidence.insert("k_pole_right_final".into(), last.k_pole_right);
    evidence.insert("blew_up".into(), if blew_up { 1.0 } else { 0.0 });

    // a neck that is small against the surrounding bumps and away from the poles
    if let (Some(neck), Some(neck_s)) = (last.psi_min, last.psi_min_s) {
        let half = 0.5 * last.s_total;
        let pole_gap = (half - neck_s.abs()) / last.s_total;
        let bumps = &last.extrema.bumps;
        let right_bump = bumps.iter().filter(|b| b.s > neck_s).map(|b| b.psi).fold(0.0, f64::max);
        let left_bump = bumps.iter().filter(|b| b.s < neck_s).map(|b| b.psi).fold(0.0, f64::max);
        let pinch = neck / right_bump.min(left_bump).max(f64::MIN_POSITIVE);
        evidence.insert("neck_psi".into(), neck);
        evidence.insert("neck_pinch_ratio".into(), pinch);
        evidence.insert("neck_pole_gap".into(), pole_gap);
        if blew_up && pinch < 0.1 && pole_gap > 0.02 {
            let (t_est, method, low) = estimate_t(snapshots, SingularityKind::InteriorNeckpinch);
            return SingularityReport {
                kind: SingularityKind::InteriorNeckpinch,
                t_est,
                t_est_method: method,
                location_s: neck_s,
                low_confidence: low,
                evidence,
            };
        }
    }
    // curvature concentrating at the right pole faster than the global scale
    let right_cap = last.extrema.s_hat.unwrap_or(f64::NEG_INFINITY);
    let scale_free = last.k_pole_right * last.psi_max * last.psi_max;
    evidence.insert("k_pole_scaled".into(), scale_free);
    if blew_up && last.k_max_s > right_cap && scale_free > 100.0 {
        let (t_est, method, low) = estimate_t(snapshots, SingularityKind::PolarDegenerateCandidate);
        return SingularityReport {
            kind: SingularityKind::PolarDegenerateCandidate,
            t_est,
            t_est_method: method,
            location_s: snapshots[snapshots.len() - 1].frame.s_right(),
            low_confidence: low,
            evidence,
        };
    }
    // the whole sphere shrinks: curvature stays on the scale set by the size
    let roundness = last.k_max * last.psi_max * last.psi_max;
    evidence.insert("k_max_scaled".into(), roundness);
    if blew_up && (shrink < 0.05 || roundness < 10.0) {
        let (t_est, method, low) = estimate_t(snapshots, SingularityKind::TotalShrink);
        return SingularityReport {
            kind: SingularityKind::TotalShrink,
            t_est,
            t_est_method: method,
            location_s: 0.0,
            low_confidence: low,
            evidence,
        };
    }
    fallback(evidence)
}

/// Estimated singular time, the method used and a low-confidence flag.
pub fn estimate_t(snapshots: &[Snapshot], kind: SingularityKind) -> (f64, TEstimateMethod, bool) {
    let t_last = snapshots.last().map_or(f64::NAN, |s| s.grid.t);
    // Radius-squared curves carry slowly varying logarithmic corrections, so
    // the line is fit through the last few samples only. The exponent scan
    // for the pole needs a longer window.
    let tail = |values: Vec<(f64, f64)>, keep: usize| -> Vec<(f64, f64)> {
        let k = values.len().saturating_sub(keep);
        values[k..].to_vec()
    };
    let line_root = |pts: &[(f64, f64)], method: TEstimateMethod| -> (f64, TEstimateMethod, bool) {
        if pts.len() < 3 {
            return (t_last, TEstimateMethod::LastTime, true);
        }
        let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
        match fit_line(&x, &y) {
            Ok(f) if f.slope < 0.0 => {
                let t = -f.intercept / f.slope;
                let scale = y.iter().cloned().fold(0.0, f64::max);
                (t, method, f.rms > 0.05 * scale || pts.len() < 4)
            }
            _ => (t_last, TEstimateMethod::LastTime, true),
        }
    };
    match kind {
        SingularityKind::InteriorNeckpinch => {
            let pts =
                tail(snapshots.iter().filter_map(|s| s.diagnostics.psi_min.map(|p| (s.grid.t, p * p))).collect(), 4);
            line_root(&pts, TEstimateMethod::NeckRadiusFit)
        }
        SingularityKind::TotalShrink => {
            let pts = tail(snapshots.iter().map(|s| (s.grid.t, s.diagnostics.psi_max.powi(2))).collect(), 4);
            line_root(&pts, TEstimateMethod::MaxRadiusFit)
        }
        SingularityKind::PolarDegenerateCandidate => {
            let pts = tail(snapshots.iter().map(|s| (s.grid.t, s.diagnostics.k_pole_right)).collect(), 8);
            if pts.len() < 3 {
                return (t_last, TEstimateMethod::LastTime, true);
            }
            let mut best = (f64::INFINITY, t_last);
            for j in 0..=200 {
                let q = 0.5 + 2.5 * j as f64 / 200.0;
                let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().map(|(t, k)| (*t, k.powf(-1.0 / q))).unzip();
                if let Ok(f) = fit_line(&x, &y) {
                    let scale = y.iter().cloned().fold(0.0, f64::max);
                    let rel = f.rms / scale;
                    if f.slope < 0.0 && rel < best.0 {
                        best = (rel, -f.intercept / f.slope);
                    }
                }
            }
            (best.1, TEstimateMethod::PoleCurvatureFit, !(best.0 < 0.01) || pts.len() < 5)
        }
        SingularityKind::NoneBeforeHorizon => (t_last, TEstimateMethod::LastTime, true),
    }
}

/// Outcome of a bisection in the family parameter.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub lambda_star: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// Final bracketing runs at `lambda_lo` and `lambda_hi`.
    pub run_lo: RunResult,
    pub run_hi: RunResult,
    pub history: Vec<(f64, SingularityKind)>,
}

fn pinches(r: &RunResult) -> bool {
    r.report.kind == SingularityKind::InteriorNeckpinch
}

/// Bisection between a neckpinching and a non-pinching member of `fam`.
pub fn critical_search(
    fam: &InitialFamily,
    lambda_lo: f64,
    lambda_hi: f64,
    iters: usize,
    nodes: usize,
    n: usize,
    cfg: &SolverConfig,
) -> Result<SearchResult> {
    let run = |lambda: f64| -> Result<RunResult> {
        let g = make_initial(&fam.with_lambda(lambda), nodes, n)?;
        evolve(&g, cfg)
    };
    let (lo, hi) = rayon::join(|| run(lambda_lo), || run(lambda_hi));
    let (mut run_lo, mut run_hi) = (lo?, hi?);
    if pinches(&run_lo) == pinches(&run_hi) {
        return Err(Error::Precondition(format!(
            "bracket does not separate outcomes: lambda_lo = {lambda_lo} gives {:?}, lambda_hi = {lambda_hi} gives {:?}",
            run_lo.report.kind, run_hi.report.kind
        )));
    }
    let lo_pinches = pinches(&run_lo);
    let mut history = vec![(lambda_lo, run_lo.report.kind), (lambda_hi, run_hi.report.kind)];
    let (mut a, mut b) = (lambda_lo, lambda_hi);
    for _ in 0..iters {
        let mid = 0.5 * (a + b);
        let r = run(mid)?;
        history.push((mid, r.report.kind));
        if pinches(&r) == lo_pinches {
            a = mid;
            run_lo = r;
        } else {
            b = mid;
            run_hi = r;
        }
    }
    Ok(SearchResult { lambda_star: 0.5 * (a + b), lambda_lo: a, lambda_hi: b, run_lo, run_hi, history })
}

/// Whether the initial data satisfy the curvature conditions; recorded with runs.
pub fn initial_conditions_hold(grid: &ProfileGrid) -> bool {
    check_assumptions(grid).map(|r| r.curvature_conditions()).unwrap_or(false)
}

/// Smoothness at a pole requires `ψ_s = 1` there, i.e. `φ = ψ_x`. The pole
/// value of `φ` is set from the fourth-order odd-extension stencil for `ψ_x`.
pub(crate) fn pole_constraint(h: f64, phi: &mut [f64], psi: &[f64]) {
    let m = psi.len();
    phi[0] = (16.0 * psi[1] - 2.0 * psi[2]) / (12.0 * h);
    phi[m - 1] = (16.0 * psi[m - 2] - 2.0 * psi[m - 3]) / (12.0 * h);
}
