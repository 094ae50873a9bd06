//! Profile of the Bryant steady soliton.
//!
//! In the tip coordinates the squared slope `z = ψ_s²`, viewed as a function
//! of the rescaled radius `r`, satisfies `F_r[z] = 0` with
//!
//! ```text
//! F_r[z] = r⁻² { r² z z_rr - ½ (r z_r)² + (n-1-z) r z_r + 2(n-1)(1-z) z }.
//! ```
//!
//! Solutions with `z(0) = 1` form a single orbit of the scaling `z(r) ↦ z(r/ρ)`.
//! Near the origin `z = 1 + b₂r² + …` and near infinity `z = c₂r⁻² + …`. The
//! solver integrates one member outward in `t = ln r`, where the equation reads
//!
//! ```text
//! z (z_tt - z_t) - ½ z_t² + (n-1-z) z_t + 2(n-1)(1-z) z = 0,
//! ```
//!
//! measures `c₂` and rescales so that `c₂ = 1`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{interp_hermite, monotone_slopes};

/// `F_r[z]` from the value and the first two `r`-derivatives of `z` at `r > 0`.
pub fn f_apply(n: usize, r: f64, z: f64, z_r: f64, z_rr: f64) -> f64 {
    let n1 = n as f64 - 1.0;
    let rz = r * z_r;
    (r * r * z * z_rr - 0.5 * rz * rz + (n1 - z) * rz + 2.0 * n1 * (1.0 - z) * z) / (r * r)
}

/// `r² F_r[z]` in terms of `t = ln r` derivatives `p = z_t`, `q = z_tt`.
pub fn f_log(n: usize, z: f64, p: f64, q: f64) -> f64 {
    let n1 = n as f64 - 1.0;
    z * (q - p) - 0.5 * p * p + (n1 - z) * p + 2.0 * n1 * (1.0 - z) * z
}

/// Coefficients of `r², r⁴, r⁶` in the expansion about the origin.
pub fn inner_coefficients(n: usize, b2: f64) -> [f64; 3] {
    let n = n as f64;
    [b2, n / (n + 3.0) * b2 * b2, n * (n - 1.0) / ((n + 3.0) * (n + 5.0)) * b2 * b2 * b2]
}

/// Coefficients of `r⁻², r⁻⁴, r⁻⁶` in the expansion at infinity.
pub fn outer_coefficients(n: usize, c2: f64) -> [f64; 3] {
    let n = n as f64;
    [c2, (4.0 - n) / (n - 1.0) * c2 * c2, (n - 4.0) * (n - 7.0) / (n - 1.0).powi(2) * c2 * c2 * c2]
}

fn check_ratio(terms: &[f64]) -> Result<()> {
    for w in terms.windows(2) {
        if w[0] != 0.0 && (w[1] / w[0]).abs() >= 1.0 {
            return Err(Error::Domain(format!("series terms do not decrease: {:e} then {:e}", w[0], w[1])));
        }
    }
    Ok(())
}

/// `1 + b₂r² + n/(n+3) b₂² r⁴ + n(n-1)/((n+3)(n+5)) b₂³ r⁶`.
pub fn series_inner(n: usize, b2: f64, r: f64) -> Result<f64> {
    let c = inner_coefficients(n, b2);
    let r2 = r * r;
    let terms = [c[0] * r2, c[1] * r2 * r2, c[2] * r2 * r2 * r2];
    check_ratio(&terms)?;
    Ok(1.0 + terms.iter().sum::<f64>())
}

/// `c₂r⁻² + (4-n)/(n-1) c₂² r⁻⁴ + (n-4)(n-7)/(n-1)² c₂³ r⁻⁶`.
pub fn series_outer(n: usize, c2: f64, r: f64) -> Result<f64> {
    let c = outer_coefficients(n, c2);
    let x = 1.0 / (r * r);
    let terms = [c[0] * x, c[1] * x * x, c[2] * x * x * x];
    check_ratio(&terms)?;
    Ok(terms.iter().sum())
}

fn series_inner_parts(c: &[f64; 3], r: f64) -> (f64, f64) {
    // value and r·d/dr of 1 + Σ c_j r^{2j}
    let r2 = r * r;
    let v = 1.0 + c[0] * r2 + c[1] * r2 * r2 + c[2] * r2 * r2 * r2;
    let d = 2.0 * c[0] * r2 + 4.0 * c[1] * r2 * r2 + 6.0 * c[2] * r2 * r2 * r2;
    (v, d)
}

fn series_outer_parts(c: &[f64; 3], r: f64) -> (f64, f64) {
    let x = 1.0 / (r * r);
    let v = c[0] * x + c[1] * x * x + c[2] * x * x * x;
    let d = -2.0 * c[0] * x - 4.0 * c[1] * x * x - 6.0 * c[2] * x * x * x;
    (v, d)
}

/// Settings of the profile solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BryantOptions {
    /// Launch coefficient `b₂ < 0` of the integrated member.
    pub b2: f64,
    /// Local error tolerance of the integrator.
    pub tol: f64,
    /// Launch radius in units of `|b₂|^{-1/2}`.
    pub r_in: f64,
    /// Table spacing in `ln r`.
    pub h_out: f64,
    /// Radius the normalized table must reach.
    pub r_table_min: f64,
    /// Required relative change of the `c₂` estimate over the last octave.
    pub stabilization: f64,
}

impl Default for BryantOptions {
    fn default() -> Self {
        BryantOptions {
            b2: -1.0,
            tol: 1e-13,
            r_in: 0.05,
            h_out: std::f64::consts::LN_2 / 140.0,
            r_table_min: 120.0,
            stabilization: 1e-8,
        }
    }
}

/// Solver diagnostics kept with the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BryantDiagnostics {
    /// Relative change of the `c₂` estimate between the last two octaves.
    pub c2_change: f64,
    /// Largest `|F_r[B]|` over the table with reconstructed derivatives.
    pub residual_max: f64,
    /// Whether `r²B` increases along the table.
    pub r2b_monotone: bool,
    pub steps: usize,
}

/// Tabulated Bryant profile normalized so that `r²B(r) → 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BryantProfile {
    pub n: usize,
    pub r_table: Vec<f64>,
    pub b_table: Vec<f64>,
    /// `r dB/dr` at the table nodes.
    pub slope_table: Vec<f64>,
    pub b2_used: f64,
    pub c2_measured: f64,
    /// Factor `ρ = 1/√c₂'` mapping integration radii to table radii.
    pub normalization: f64,
    /// Inner series coefficients in normalized units.
    pub series_inner: [f64; 3],
    pub series_outer: [f64; 3],
    pub switch_radii: (f64, f64),
    pub diagnostics: BryantDiagnostics,
    log_r: Vec<f64>,
    limited: Vec<f64>,
}

/// Dormand–Prince 5(4) step for the two-dimensional system.
struct Dopri {
    n1: f64,
}

impl Dopri {
    fn rhs(&self, y: [f64; 2]) -> Result<[f64; 2]> {
        let (z, p) = (y[0], y[1]);
        if !(z > 0.0 && z <= 1.0 + 1e-12) {
            return Err(Error::Integration(format!("z = {z} left (0, 1]")));
        }
        let q = p + (0.5 * p * p - (self.n1 - z) * p - 2.0 * self.n1 * (1.0 - z) * z) / z;
        Ok([p, q])
    }

    fn step(&self, y: [f64; 2], h: f64) -> Result<([f64; 2], f64)> {
        const A21: f64 = 1.0 / 5.0;
        const A31: f64 = 3.0 / 40.0;
        const A32: f64 = 9.0 / 40.0;
        const A41: f64 = 44.0 / 45.0;
        const A42: f64 = -56.0 / 15.0;
        const A43: f64 = 32.0 / 9.0;
        const A51: f64 = 19372.0 / 6561.0;
        const A52: f64 = -25360.0 / 2187.0;
        const A53: f64 = 64448.0 / 6561.0;
        const A54: f64 = -212.0 / 729.0;
        const A61: f64 = 9017.0 / 3168.0;
        const A62: f64 = -355.0 / 33.0;
        const A63: f64 = 46732.0 / 5247.0;
        const A64: f64 = 49.0 / 176.0;
        const A65: f64 = -5103.0 / 18656.0;
        const B1: f64 = 35.0 / 384.0;
        const B3: f64 = 500.0 / 1113.0;
        const B4: f64 = 125.0 / 192.0;
        const B5: f64 = -2187.0 / 6784.0;
        const B6: f64 = 11.0 / 84.0;
        const E1: f64 = 71.0 / 57600.0;
        const E3: f64 = -71.0 / 16695.0;
        const E4: f64 = 71.0 / 1920.0;
        const E5: f64 = -17253.0 / 339200.0;
        const E6: f64 = 22.0 / 525.0;
        const E7: f64 = -1.0 / 40.0;
        let comb = |c: &[(f64, [f64; 2])]| {
            let mut out = y;
            for (a, k) in c {
                out[0] += h * a * k[0];
                out[1] += h * a * k[1];
            }
            out
        };
        let k1 = self.rhs(y)?;
        let k2 = self.rhs(comb(&[(A21, k1)]))?;
        let k3 = self.rhs(comb(&[(A31, k1), (A32, k2)]))?;
        let k4 = self.rhs(comb(&[(A41, k1), (A42, k2), (A43, k3)]))?;
        let k5 = self.rhs(comb(&[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]))?;
        let k6 = self.rhs(comb(&[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]))?;
        let y5 = comb(&[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
        let k7 = self.rhs(y5)?;
        let mut err: f64 = 0.0;
        for i in 0..2 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = y[i].abs().max(y5[i].abs()).max(1e-300);
            err = err.max((e / sc).abs());
        }
        Ok((y5, err))
    }
}

/// Raw integration output on a uniform `ln r` grid.
struct Trajectory {
    t: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    steps: usize,
}

fn integrate_octaves(n: usize, opts: &BryantOptions) -> Result<(Trajectory, f64, f64)> {
    let scale = (-opts.b2).sqrt();
    let r0 = opts.r_in / scale;
    let t0 = r0.ln();
    let inner = inner_coefficients(n, opts.b2);
    let (z0, p0) = series_inner_parts(&inner, r0);
    let sys = Dopri { n1: n as f64 - 1.0 };
    let per_octave = (std::f64::consts::LN_2 / opts.h_out).round() as usize;
    let h_out = std::f64::consts::LN_2 / per_octave as f64;

    let mut traj = Trajectory { t: vec![t0], z: vec![z0], p: vec![p0], steps: 0 };
    let mut y = [z0, p0];
    let mut h: f64 = 1e-3;
    let mut estimates: Vec<f64> = Vec::new();
    // at least to r = 8/|b₂|^{1/2} before Richardson is meaningful
    let min_octaves = ((8.0 / opts.r_in).log2()).ceil() as usize;
    for octave in 0..60 {
        for _ in 0..per_octave {
            let t_start = *traj.t.last().unwrap();
            let t_target = t0 + h_out * traj.t.len() as f64;
            let mut t = t_start;
            while t < t_target {
                let step = h.min(t_target - t);
                let (y_new, err) = sys.step(y, step)?;
                traj.steps += 1;
                if traj.steps > 50_000_000 {
                    return Err(Error::Integration("step budget exhausted".into()));
                }
                if err <= opts.tol {
                    y = y_new;
                    t += step;
                    if t_target - t < 1e-14 * t_target.abs().max(1.0) {
                        t = t_target;
                    }
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * (opts.tol / err).powf(0.2)).clamp(0.2, 5.0) };
                if step == h || fac < 1.0 {
                    h = step * fac;
                }
            }
            traj.t.push(t_target);
            traj.z.push(y[0]);
            traj.p.push(y[1]);
        }
        if octave + 1 < min_octaves {
            continue;
        }
        // Richardson in x = r⁻² through r = R/4, R/2, R
        let m = traj.t.len() - 1;
        let idx = [m - 2 * per_octave, m - per_octave, m];
        let xs: Vec<f64> = idx.iter().map(|&i| (-2.0 * traj.t[i]).exp()).collect();
        let fs: Vec<f64> = idx.iter().map(|&i| traj.z[i] / xs_of(&traj, i)).collect();
        let est = quadratic_at_zero(&xs, &fs);
        estimates.push(est);
        let r_end = traj.t[m].exp();
        if estimates.len() >= 2 {
            let prev = estimates[estimates.len() - 2];
            let change = ((est - prev) / est).abs();
            if change < opts.stabilization && r_end / est.sqrt() >= opts.r_table_min {
                return Ok((traj, est, change));
            }
        }
    }
    Err(Error::Integration("r²z did not stabilize; r_max too small".into()))
}

fn xs_of(traj: &Trajectory, i: usize) -> f64 {
    (-2.0 * traj.t[i]).exp()
}

/// Value at zero of the quadratic through three points.
fn quadratic_at_zero(x: &[f64], f: &[f64]) -> f64 {
    let l0 = x[1] * x[2] / ((x[0] - x[1]) * (x[0] - x[2]));
    let l1 = x[0] * x[2] / ((x[1] - x[0]) * (x[1] - x[2]));
    let l2 = x[0] * x[1] / ((x[2] - x[0]) * (x[2] - x[1]));
    l0 * f[0] + l1 * f[1] + l2 * f[2]
}

/// Sixth-order first derivative on a uniform grid (one-sided near the ends).
fn diff_uniform6(f: &[f64], h: f64) -> Vec<f64> {
    let m = f.len();
    let mut d = vec![0.0; m];
    for i in 0..m {
        d[i] = if i >= 3 && i + 3 < m {
            (-f[i - 3] + 9.0 * f[i - 2] - 45.0 * f[i - 1] + 45.0 * f[i + 1] - 9.0 * f[i + 2] + f[i + 3]) / (60.0 * h)
        } else if i < 3 {
            (-147.0 * f[i] + 360.0 * f[i + 1] - 450.0 * f[i + 2] + 400.0 * f[i + 3] - 225.0 * f[i + 4]
                + 72.0 * f[i + 5]
                - 10.0 * f[i + 6])
                / (60.0 * h)
        } else {
            -(-147.0 * f[i] + 360.0 * f[i - 1] - 450.0 * f[i - 2] + 400.0 * f[i - 3] - 225.0 * f[i - 4]
                + 72.0 * f[i - 5]
                - 10.0 * f[i - 6])
                / (60.0 * h)
        };
    }
    d
}

/// Largest `|F_r[B]|` along a table uniform in `ln r`, using the stored
/// slopes and a finite difference of them for the second derivative.
pub fn table_residual(n: usize, r: &[f64], b: &[f64], slope: &[f64]) -> f64 {
    let h = (r[r.len() - 1] / r[0]).ln() / (r.len() - 1) as f64;
    let q = diff_uniform6(slope, h);
    (0..r.len()).map(|i| (f_log(n, b[i], slope[i], q[i]) / (r[i] * r[i])).abs()).fold(0.0, f64::max)
}

/// Solves with `b₂ = -1` and the given integrator tolerance.
pub fn solve_bryant(n: usize, tol: f64) -> Result<BryantProfile> {
    solve_bryant_with(n, &BryantOptions { tol, ..BryantOptions::default() })
}

pub fn solve_bryant_with(n: usize, opts: &BryantOptions) -> Result<BryantProfile> {
    if n < 2 {
        return Err(Error::Precondition(format!("fiber dimension n = {n} < 2")));
    }
    if !(opts.b2 < 0.0) {
        return Err(Error::Precondition(format!("launch coefficient b2 = {} must be negative", opts.b2)));
    }
    let (traj, c2, change) = integrate_octaves(n, opts)?;
    let rho = 1.0 / c2.sqrt();
    let r_table: Vec<f64> = traj.t.iter().map(|t| t.exp() * rho).collect();
    let b_table = traj.z;
    let slope_table = traj.p;
    if b_table.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Integration("profile is not strictly decreasing".into()));
    }
    let residual_max = table_residual(n, &r_table, &b_table, &slope_table);
    let r2b_monotone =
        r_table.iter().zip(&b_table).map(|(r, b)| r * r * b).collect::<Vec<_>>().windows(2).all(|w| w[1] >= w[0]);
    let switch_radii = (r_table[0], *r_table.last().unwrap());
    Ok(BryantProfile {
        n,
        series_inner: inner_coefficients(n, opts.b2 * c2),
        series_outer: outer_coefficients(n, 1.0),
        r_table,
        b_table,
        slope_table,
        b2_used: opts.b2,
        c2_measured: c2,
        normalization: rho,
        switch_radii,
        diagnostics: BryantDiagnostics { c2_change: change, residual_max, r2b_monotone, steps: traj.steps },
        log_r: Vec::new(),
        limited: Vec::new(),
    }
    .with_interpolant())
}

impl BryantProfile {
    /// `B(r)` for any `r ≥ 0`.
    pub fn eval(&self, r: f64) -> f64 {
        self.eval_with_slope(r).0
    }

    /// `B(r)` and `r B'(r)`.
    pub fn eval_with_slope(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        let (r_in, r_out) = self.switch_radii;
        if r <= r_in {
            return series_inner_parts(&self.series_inner, r);
        }
        if r >= r_out {
            return series_outer_parts(&self.series_outer, r);
        }
        // cubic Hermite in ln r, where the stored slopes are exact derivatives
        let t = r.ln();
        let ts = &self.log_r;
        let m = ts.len();
        let h = (ts[m - 1] - ts[0]) / (m - 1) as f64;
        let j = (((t - ts[0]) / h).floor() as usize + 1).clamp(1, m - 1);
        let v = interp_hermite(&ts[j - 1..=j], &self.b_table[j - 1..=j], &self.limited[j - 1..=j], t);
        let w = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
        let s = (1.0 - w) * self.slope_table[j - 1] + w * self.slope_table[j];
        (v, s)
    }

    fn with_interpolant(mut self) -> Self {
        self.log_r = self.r_table.iter().map(|r| r.ln()).collect();
        self.limited = monotone_slopes(&self.log_r, &self.b_table, &self.slope_table);
        self
    }

    /// `b₂` of the normalized profile.
    pub fn b2_normalized(&self) -> f64 {
        self.series_inner[0]
    }

    /// Cap coordinate `G(r) = ∫₀^r dr'/√B(r')`, tabulated on the profile nodes
    /// with the origin prepended.
    pub fn cap_coordinate(&self) -> CapCoordinate {
        CapCoordinate::new(self)
    }

    /// Text table with a header and rows `r B`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# bryant profile v1");
        let _ = writeln!(out, "n={}", self.n);
        let _ = writeln!(out, "b2_used={:e}", self.b2_used);
        let _ = writeln!(out, "c2_measured={:e}", self.c2_measured);
        let _ = writeln!(out, "r_in={:e}", self.switch_radii.0);
        let _ = writeln!(out, "r_out={:e}", self.switch_radii.1);
        let _ = writeln!(out, "r B");
        for (r, b) in self.r_table.iter().zip(&self.b_table) {
            let _ = writeln!(out, "{r:e} {b:e}");
        }
        out
    }

    /// Reads a table written by [`BryantProfile::to_text`]; slopes are rebuilt
    /// by finite differences in `ln r`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        match lines.next() {
            Some((_, l)) if l.trim() == "# bryant profile v1" => {}
            other => return Err(perr(other.map_or(0, |o| o.0 + 1), "missing bryant profile header".into())),
        }
        let mut get = |key: &str| -> Result<f64> {
            let (no, l) = lines.next().ok_or_else(|| perr(0, format!("missing `{key}=`")))?;
            let v = l
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| perr(no + 1, format!("expected `{key}=…`")))?;
            v.trim().parse().map_err(|_| perr(no + 1, format!("bad value for {key}")))
        };
        let n = get("n")? as usize;
        let b2_used = get("b2_used")?;
        let c2_measured = get("c2_measured")?;
        let r_in = get("r_in")?;
        let r_out = get("r_out")?;
        match lines.next() {
            Some((_, l)) if l.split_whitespace().eq(["r", "B"]) => {}
            other => return Err(perr(other.map_or(0, |o| o.0 + 1), "expected column header `r B`".into())),
        }
        let mut r_table: Vec<f64> = Vec::new();
        let mut b_table = Vec::new();
        for (no, l) in lines {
            let mut it = l.split_whitespace();
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(perr(no + 1, "expected 2 columns".into()));
            };
            r_table.push(a.parse().map_err(|_| perr(no + 1, format!("bad number `{a}`")))?);
            b_table.push(b.parse().map_err(|_| perr(no + 1, format!("bad number `{b}`")))?);
        }
        if r_table.len() < 8 {
            return Err(perr(0, "table too short".into()));
        }
        let h = (r_table[r_table.len() - 1] / r_table[0]).ln() / (r_table.len() - 1) as f64;
        let slope_table = diff_uniform6(&b_table, h);
        let residual_max = table_residual(n, &r_table, &b_table, &slope_table);
        let r2b_monotone =
            r_table.iter().zip(&b_table).map(|(r, b)| r * r * b).collect::<Vec<_>>().windows(2).all(|w| w[1] >= w[0]);
        Ok(BryantProfile {
            n,
            series_inner: inner_coefficients(n, b2_used * c2_measured),
            series_outer: outer_coefficients(n, 1.0),
            r_table,
            b_table,
            slope_table,
            b2_used,
            c2_measured,
            normalization: 1.0 / c2_measured.sqrt(),
            switch_radii: (r_in, r_out),
            diagnostics: BryantDiagnostics { c2_change: f64::NAN, residual_max, r2b_monotone, steps: 0 },
            log_r: Vec::new(),
            limited: Vec::new(),
        }
        .with_interpolant())
    }
}

/// `G(r) = ∫₀^r dr'/√B(r')` and its inverse.
///
/// A cap whose squared slope is `B(Γψ/a)` has pole distance
/// `d = (a/Γ) G(Γψ/a)`, so inverting `G` recovers the radius from the distance.
#[derive(Debug, Clone)]
pub struct CapCoordinate {
    r: Vec<f64>,
    g: Vec<f64>,
    /// `dG/dr = 1/√B` at the nodes.
    dg: Vec<f64>,
    /// Far-field expansion `G ≈ r²/2 - (α/2) ln r + κ r⁻² + g_const`.
    alpha: f64,
    kappa: f64,
    g_const: f64,
}

impl CapCoordinate {
    fn new(p: &BryantProfile) -> Self {
        // Gauss–Legendre on each table interval, inner series below the table
        let (r_in, r_out) = p.switch_radii;
        let mut r = vec![0.0];
        let mut g = vec![0.0];
        let mut dg = vec![1.0];
        let f = |x: f64| 1.0 / p.eval(x).sqrt();
        let gl = |a: f64, b: f64| {
            const X: [f64; 5] =
                [0.0, -0.538_469_310_105_683, 0.538_469_310_105_683, -0.906_179_845_938_664, 0.906_179_845_938_664];
            const W: [f64; 5] = [
                0.568_888_888_888_889,
                0.478_628_670_499_366,
                0.478_628_670_499_366,
                0.236_926_885_056_189,
                0.236_926_885_056_189,
            ];
            let (m, hw) = (0.5 * (a + b), 0.5 * (b - a));
            X.iter().zip(&W).map(|(x, w)| w * f(m + hw * x)).sum::<f64>() * hw
        };
        let mut nodes: Vec<f64> = (1..=16).map(|i| r_in * i as f64 / 16.0).collect();
        nodes.extend(p.r_table.iter().copied().skip(1));
        for &x in &nodes {
            let a = *r.last().unwrap();
            let val = g.last().unwrap() + gl(a, x);
            r.push(x);
            g.push(val);
            dg.push(f(x));
        }
        let c = p.series_outer;
        let alpha = c[1] / c[0];
        let beta = c[2] / c[0];
        let kappa = -0.5 * (0.375 * alpha * alpha - 0.5 * beta);
        let g_end = *g.last().unwrap();
        let g_const = g_end - (0.5 * r_out * r_out - 0.5 * alpha * r_out.ln() + kappa / (r_out * r_out));
        CapCoordinate { r, g, dg, alpha, kappa, g_const }
    }

    pub fn r_max_table(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// `G(r)`.
    pub fn forward(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        if r >= self.r_max_table() {
            return 0.5 * r * r - 0.5 * self.alpha * r.ln() + self.kappa / (r * r) + self.g_const;
        }
        interp_hermite(&self.r, &self.g, &self.dg, r)
    }

    /// `G⁻¹(ξ)` by safeguarded Newton iteration.
    pub fn inverse(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        let g_end = *self.g.last().unwrap();
        let mut r = if xi >= g_end {
            (2.0 * (xi - self.g_const)).max(self.r_max_table().powi(2)).sqrt()
        } else {
            crate::numerics::interp_linear(&self.g, &self.r, xi)
        };
        let (mut lo, mut hi) =
            if xi >= g_end { (self.r_max_table(), f64::INFINITY) } else { (0.0, self.r_max_table()) };
        for _ in 0..100 {
            let val = self.forward(r) - xi;
            if val > 0.0 {
                hi = hi.min(r);
            } else {
                lo = lo.max(r);
            }
            let deriv = if r >= self.r_max_table() {
                r - 0.5 * self.alpha / r - 2.0 * self.kappa / (r * r * r)
            } else {
                interp_hermite_derivative(&self.r, &self.g, &self.dg, r)
            };
            let mut next = r - val / deriv;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * r };
            }
            if (next - r).abs() <= 1e-15 * r.max(1e-300) {
                return next;
            }
            r = next;
        }
        r
    }
}

fn interp_hermite_derivative(xs: &[f64], ys: &[f64], ds: &[f64], x: f64) -> f64 {
    let m = xs.len();
    let j = xs.partition_point(|&v| v <= x).clamp(1, m - 1);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let h = x1 - x0;
    let t = (x - x0) / h;
    let d00 = (6.0 * t * t - 6.0 * t) / h;
    let d10 = 3.0 * t * t - 4.0 * t + 1.0;
    let d01 = (-6.0 * t * t + 6.0 * t) / h;
    let d11 = 3.0 * t * t - 2.0 * t;
    d00 * ys[j - 1] + d10 * ds[j - 1] + d01 * ys[j] + d11 * ds[j]
}
