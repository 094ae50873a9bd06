//! Rotationally symmetric metrics `g = φ²dx² + ψ² g_can` on the sphere with
//! the two poles removed, discretized on a fixed uniform grid in `x ∈ [-1, 1]`.
//!
//! All spatial derivatives are taken with respect to arclength,
//! `∂/∂s = (1/φ) ∂/∂x`, using fourth-order centered stencils. Near the poles
//! the stencils reach into ghost nodes obtained by extending `ψ` oddly and
//! `φ` evenly across `x = ±1`, which is what smoothness at the poles demands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this radius the curvature quotients are not representable.
pub const PSI_SAFE_FLOOR: f64 = 1.5e-154;

/// Default tolerance in `ψ_s` units for flagging near-flat points.
pub const DEFAULT_FLAT_TOL: f64 = 1e-3;

/// Metric state at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileGrid {
    /// Dimension of the fiber sphere.
    pub n: usize,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub t: f64,
}

/// Uniform grid on `[-1, 1]` with both endpoints.
pub fn uniform_x(nodes: usize) -> Vec<f64> {
    let h = 2.0 / (nodes - 1) as f64;
    (0..nodes).map(|i| if i == nodes - 1 { 1.0 } else { -1.0 + h * i as f64 }).collect()
}

impl ProfileGrid {
    pub fn new(n: usize, x: Vec<f64>, phi: Vec<f64>, psi: Vec<f64>, t: f64) -> Result<Self> {
        let grid = ProfileGrid { n, x, phi, psi, t };
        grid.validate()?;
        Ok(grid)
    }

    /// Checks the structural invariants: sizes, uniform grid, pole zeros,
    /// positivity of `φ` and of interior `ψ`.
    pub fn validate(&self) -> Result<()> {
        let m = self.x.len();
        if self.n < 2 {
            return Err(Error::InvalidMetric(format!("fiber dimension n = {} < 2", self.n)));
        }
        if m < 5 {
            return Err(Error::InvalidMetric(format!("{m} nodes is too few")));
        }
        if self.phi.len() != m || self.psi.len() != m {
            return Err(Error::InvalidMetric("x, phi and psi lengths differ".into()));
        }
        if (self.x[0] + 1.0).abs() > 1e-12 || (self.x[m - 1] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMetric("grid must span [-1, 1]".into()));
        }
        let h = self.h();
        for w in self.x.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
                return Err(Error::InvalidMetric("grid must be uniform".into()));
            }
        }
        if let Some(i) = self.phi.iter().position(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidMetric(format!("phi = {} at x = {} is not positive", self.phi[i], self.x[i])));
        }
        if self.psi[0] != 0.0 || self.psi[m - 1] != 0.0 {
            return Err(Error::InvalidMetric("psi must vanish at the poles".into()));
        }
        for i in 1..m - 1 {
            if !(self.psi[i] > 0.0) || !self.psi[i].is_finite() {
                return Err(Error::InvalidMetric(format!(
                    "psi = {} at x = {} is not positive",
                    self.psi[i], self.x[i]
                )));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> usize {
        self.x.len()
    }

    /// Grid spacing in `x`.
    pub fn h(&self) -> f64 {
        2.0 / (self.x.len() - 1) as f64
    }

    /// Reflection `x ↦ -x`.
    pub fn mirrored(&self) -> ProfileGrid {
        let mut x: Vec<f64> = self.x.iter().rev().map(|v| -v).collect();
        // keep exact endpoints and exact symmetric nodes
        let m = x.len();
        x[0] = -1.0;
        x[m - 1] = 1.0;
        ProfileGrid {
            n: self.n,
            x,
            phi: self.phi.iter().rev().copied().collect(),
            psi: self.psi.iter().rev().copied().collect(),
            t: self.t,
        }
    }

    pub fn arclength(&self) -> Result<ArclengthFrame> {
        arclength(self)
    }

    pub fn curvatures(&self) -> Result<CurvatureField> {
        curvatures(self)
    }
}

/// Value of `f` at index `i`, continuing across the poles by reflection with
/// the given parity (`-1.0` odd, `1.0` even).
#[inline]
fn ext(f: &[f64], i: isize, parity: f64) -> f64 {
    let last = f.len() as isize - 1;
    if i < 0 {
        parity * f[(-i) as usize]
    } else if i > last {
        parity * f[(2 * last - i) as usize]
    } else {
        f[i as usize]
    }
}

#[inline]
fn d1(f: &[f64], i: usize, parity: f64, h: f64) -> f64 {
    let i = i as isize;
    (-ext(f, i + 2, parity) + 8.0 * ext(f, i + 1, parity) - 8.0 * ext(f, i - 1, parity) + ext(f, i - 2, parity))
        / (12.0 * h)
}

#[inline]
fn d2(f: &[f64], i: usize, parity: f64, h: f64) -> f64 {
    let i = i as isize;
    (-ext(f, i + 2, parity) + 16.0 * ext(f, i + 1, parity) - 30.0 * ext(f, i, parity) + 16.0 * ext(f, i - 1, parity)
        - ext(f, i - 2, parity))
        / (12.0 * h * h)
}

/// Arclength derivatives `ψ_s`, `ψ_ss` at every node (poles included).
#[derive(Debug, Clone)]
pub struct SDerivatives {
    pub psi_s: Vec<f64>,
    pub psi_ss: Vec<f64>,
}

/// Fills `psi_s`, `psi_ss` from `(phi, psi)` on a uniform grid with spacing `h`.
pub fn s_derivatives_into(phi: &[f64], psi: &[f64], h: f64, psi_s: &mut [f64], psi_ss: &mut [f64]) {
    let m = psi.len();
    let (c1, c2) = (1.0 / (12.0 * h), 1.0 / (12.0 * h * h));
    let mut fill = |i: usize, px: f64, pxx: f64, fx: f64| {
        let f = phi[i];
        psi_s[i] = px / f;
        psi_ss[i] = pxx / (f * f) - fx * px / (f * f * f);
    };
    for i in (0..2).chain(m.saturating_sub(2).max(2)..m) {
        fill(i, d1(psi, i, -1.0, h), d2(psi, i, -1.0, h), d1(phi, i, 1.0, h));
    }
    for i in 2..m.saturating_sub(2) {
        let px = (-psi[i + 2] + 8.0 * psi[i + 1] - 8.0 * psi[i - 1] + psi[i - 2]) * c1;
        let pxx = (-psi[i + 2] + 16.0 * psi[i + 1] - 30.0 * psi[i] + 16.0 * psi[i - 1] - psi[i - 2]) * c2;
        let fx = (-phi[i + 2] + 8.0 * phi[i + 1] - 8.0 * phi[i - 1] + phi[i - 2]) * c1;
        fill(i, px, pxx, fx);
    }
    // odd parity: second derivative vanishes identically at the poles
    psi_ss[0] = 0.0;
    psi_ss[m - 1] = 0.0;
}

pub fn s_derivatives(grid: &ProfileGrid) -> SDerivatives {
    let m = grid.nodes();
    let mut psi_s = vec![0.0; m];
    let mut psi_ss = vec![0.0; m];
    s_derivatives_into(&grid.phi, &grid.psi, grid.h(), &mut psi_s, &mut psi_ss);
    SDerivatives { psi_s, psi_ss }
}

/// Arclength measured from the equator `x = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArclengthFrame {
    pub s: Vec<f64>,
    pub s_total: f64,
}

impl ArclengthFrame {
    /// Arclength of the left pole (negative).
    pub fn s_left(&self) -> f64 {
        self.s[0]
    }

    pub fn s_right(&self) -> f64 {
        *self.s.last().unwrap()
    }
}

/// `s(x) = ∫₀ˣ φ dξ` by the composite trapezoid rule.
pub fn arclength(grid: &ProfileGrid) -> Result<ArclengthFrame> {
    let m = grid.nodes();
    if let Some(i) = grid.phi.iter().position(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidMetric(format!("phi = {} at x = {} is not positive", grid.phi[i], grid.x[i])));
    }
    let mut cum = vec![0.0; m];
    for i in 1..m {
        cum[i] = cum[i - 1] + 0.5 * (grid.x[i] - grid.x[i - 1]) * (grid.phi[i] + grid.phi[i - 1]);
    }
    // arclength of x = 0 under the piecewise linear φ
    let j = grid.x.partition_point(|&x| x <= 0.0).saturating_sub(1).min(m - 2);
    let (x0, x1) = (grid.x[j], grid.x[j + 1]);
    let slope = (grid.phi[j + 1] - grid.phi[j]) / (x1 - x0);
    let dx = -x0;
    let s_zero = cum[j] + grid.phi[j] * dx + 0.5 * slope * dx * dx;
    let s: Vec<f64> = cum.iter().map(|c| c - s_zero).collect();
    let s_total = cum[m - 1];
    Ok(ArclengthFrame { s, s_total })
}

/// Sectional and Ricci curvatures on the interior nodes.
///
/// Vectors are indexed like the grid; the two pole entries hold the one-sided
/// limit `K = L` at the pole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureField {
    pub k: Vec<f64>,
    pub l: Vec<f64>,
    pub r: Vec<f64>,
    pub ricci_radial: Vec<f64>,
    pub ricci_spherical: Vec<f64>,
}

impl CurvatureField {
    /// Largest `max(|K|, |L|)` over the grid.
    pub fn max_abs(&self) -> f64 {
        self.k.iter().zip(&self.l).fold(0.0_f64, |acc, (k, l)| acc.max(k.abs()).max(l.abs()))
    }

    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        let mut val = -1.0;
        for i in 0..self.k.len() {
            let v = self.k[i].abs().max(self.l[i].abs());
            if v > val {
                val = v;
                best = i;
            }
        }
        best
    }

    pub fn pole_left(&self) -> f64 {
        self.k[0]
    }

    pub fn pole_right(&self) -> f64 {
        *self.k.last().unwrap()
    }
}

/// `K = -ψ_ss/ψ`, `L = (1-ψ_s²)/ψ²`, `R = 2nK + n(n-1)L`.
pub fn curvatures(grid: &ProfileGrid) -> Result<CurvatureField> {
    let m = grid.nodes();
    for i in 1..m - 1 {
        if !(grid.psi[i] >= PSI_SAFE_FLOOR) {
            return Err(Error::SingularProfile { x: grid.x[i], psi: grid.psi[i] });
        }
    }
    let der = s_derivatives(grid);
    let n = grid.n as f64;
    let mut k = vec![0.0; m];
    let mut l = vec![0.0; m];
    for i in 1..m - 1 {
        let p = grid.psi[i];
        k[i] = -der.psi_ss[i] / p;
        l[i] = (1.0 - der.psi_s[i] * der.psi_s[i]) / (p * p);
    }
    // at a smooth pole K = L, and L(d) = L_pole + O(d²)
    let kl = (4.0 * l[1] - l[2]) / 3.0;
    let kr = (4.0 * l[m - 2] - l[m - 3]) / 3.0;
    k[0] = kl;
    l[0] = kl;
    k[m - 1] = kr;
    l[m - 1] = kr;
    let r = k.iter().zip(&l).map(|(k, l)| 2.0 * n * k + n * (n - 1.0) * l).collect();
    let ricci_radial = k.iter().map(|k| n * k).collect();
    let ricci_spherical = k.iter().zip(&l).map(|(k, l)| k + (n - 1.0) * l).collect();
    Ok(CurvatureField { k, l, r, ricci_radial, ricci_spherical })
}

/// Scalar curvature straight from the profile derivatives,
/// `R = [n(n-1)(1-ψ_s²) - 2nψψ_ss]/ψ²`, on interior nodes (poles set to 0).
pub fn scalar_curvature_direct(grid: &ProfileGrid) -> Vec<f64> {
    let der = s_derivatives(grid);
    let n = grid.n as f64;
    let m = grid.nodes();
    let mut r = vec![0.0; m];
    for i in 1..m - 1 {
        let p = grid.psi[i];
        r[i] = (n * (n - 1.0) * (1.0 - der.psi_s[i].powi(2)) - 2.0 * n * p * der.psi_ss[i]) / (p * p);
    }
    r
}

/// An interior extremum of `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub s: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaReport {
    pub necks: Vec<Extremum>,
    pub bumps: Vec<Extremum>,
    /// Location of the bump closest to the right pole.
    pub s_hat: Option<f64>,
    pub flat_points: Vec<f64>,
    /// End of the left polar cap (first bump).
    pub left_cap_end: Option<f64>,
    /// Start of the right polar cap (last bump).
    pub right_cap_start: Option<f64>,
}

impl ExtremaReport {
    pub fn smallest_neck(&self) -> Option<Extremum> {
        self.necks.iter().copied().min_by(|a, b| a.psi.total_cmp(&b.psi))
    }
}

/// Necks and bumps from sign changes of the discrete `ψ_s`.
///
/// The sign is read from the divided differences between neighbouring nodes,
/// which cannot overshoot the way wide stencils do. A run of cells where `ψ`
/// is numerically constant is a plateau; its location is the `ψ`-weighted
/// centroid and it only counts as an extremum when `ψ_s` changes sign strictly
/// across it. Isolated extrema are located at the vertex of the parabola
/// through the three nodes around the sign change.
pub fn detect_extrema(grid: &ProfileGrid, frame: &ArclengthFrame, flat_tol: f64) -> ExtremaReport {
    let der = s_derivatives(grid);
    let m = grid.nodes();
    let s = &frame.s;
    let psi = &grid.psi;
    let scale = psi.iter().cloned().fold(0.0, f64::max);
    let zero = 1e-14 * scale;
    let mut necks = Vec::new();
    let mut bumps = Vec::new();
    let flat_points = (1..m - 1).filter(|&i| der.psi_s[i].abs() < flat_tol).map(|i| s[i]).collect();

    let mut last_sign = 0.0;
    let mut plateau_start: Option<usize> = None;
    for c in 0..m - 1 {
        let d = psi[c + 1] - psi[c];
        if d.abs() <= zero {
            plateau_start.get_or_insert(c);
            continue;
        }
        let sign = d.signum();
        if last_sign != 0.0 && sign != last_sign {
            let ext = match plateau_start {
                Some(p) => {
                    let nodes = p..=c;
                    let wsum: f64 = nodes.clone().map(|j| psi[j]).sum();
                    let sx = nodes.clone().map(|j| psi[j] * s[j]).sum::<f64>() / wsum;
                    Extremum { s: sx, psi: wsum / (c + 1 - p) as f64 }
                }
                None => parabola_vertex(&s[c - 1..=c + 1], &psi[c - 1..=c + 1]),
            };
            if last_sign > 0.0 {
                bumps.push(ext);
            } else {
                necks.push(ext);
            }
        }
        plateau_start = None;
        last_sign = sign;
    }
    let s_hat = bumps.last().map(|b| b.s);
    ExtremaReport { left_cap_end: bumps.first().map(|b| b.s), right_cap_start: s_hat, necks, bumps, s_hat, flat_points }
}

fn parabola_vertex(s: &[f64], p: &[f64]) -> Extremum {
    let (h0, h1) = (s[1] - s[0], s[2] - s[1]);
    let d0 = (p[1] - p[0]) / h0;
    let d1 = (p[2] - p[1]) / h1;
    let curv = (d1 - d0) / (0.5 * (h0 + h1));
    if curv == 0.0 {
        return Extremum { s: s[1], psi: p[1] };
    }
    // slope at the middle node of the interpolating parabola
    let slope_mid = (d0 * h1 + d1 * h0) / (h0 + h1);
    let ds = (-slope_mid / curv).clamp(-h0, h1);
    Extremum { s: s[1] + ds, psi: p[1] + slope_mid * ds + 0.5 * curv * ds * ds }
}

/// Which curvature conditions an initial metric satisfies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// `L > 0` everywhere.
    pub sectional_l_positive: bool,
    /// Both Ricci eigenvalues positive on the polar caps.
    pub ricci_positive_on_caps: bool,
    /// `R > 0` everywhere.
    pub scalar_positive: bool,
    pub has_neck: bool,
    pub left_cap_end: Option<f64>,
    pub right_cap_start: Option<f64>,
}

impl AssumptionReport {
    pub fn curvature_conditions(&self) -> bool {
        self.sectional_l_positive && self.ricci_positive_on_caps && self.scalar_positive
    }

    pub fn all(&self) -> bool {
        self.curvature_conditions() && self.has_neck
    }
}

pub fn check_assumptions(grid: &ProfileGrid) -> Result<AssumptionReport> {
    let frame = arclength(grid)?;
    let curv = curvatures(grid)?;
    let ext = detect_extrema(grid, &frame, DEFAULT_FLAT_TOL);
    let m = grid.nodes();
    let interior = 1..m - 1;
    let sectional_l_positive = interior.clone().all(|i| curv.l[i] > 0.0);
    let scalar_positive = interior.clone().all(|i| curv.r[i] > 0.0);
    let left_end = ext.left_cap_end.unwrap_or(f64::NEG_INFINITY);
    let right_start = ext.right_cap_start.unwrap_or(f64::INFINITY);
    let ricci_positive_on_caps = interior
        .filter(|&i| frame.s[i] < left_end || frame.s[i] > right_start)
        .all(|i| curv.ricci_radial[i] > 0.0 && curv.ricci_spherical[i] > 0.0);
    Ok(AssumptionReport {
        sectional_l_positive,
        ricci_positive_on_caps,
        scalar_positive,
        has_neck: !ext.necks.is_empty(),
        left_cap_end: ext.left_cap_end,
        right_cap_start: ext.right_cap_start,
    })
}

/// Parameterized families of initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialFamily {
    /// Two caps joined by a neck,
    /// `ψ = cap·cos y·(1 - (1-λ)(1 - waist/cap) cos²y)·(1 + skew·sin y)` with
    /// `y = πx/2`. At `lambda = 1` and zero skew this is the round sphere of
    /// radius `cap`.
    Dumbbell {
        lambda: f64,
        /// Neck radius at `lambda = 0`.
        waist: f64,
        cap: f64,
        /// Conformal tilt in `(-1, 1)`: the metric is scaled by `1 + skew·sin(πx/2)`,
        /// so a negative value makes the right cap smaller than the left one.
        skew: f64,
    },
    /// `ψ = r cos(πx/2) (1 + amplitude·cos²(πx/2))`.
    PerturbedSphere {
        radius: f64,
        amplitude: f64,
    },
    CustomTable {
        x: Vec<f64>,
        phi: Vec<f64>,
        psi: Vec<f64>,
    },
}

impl InitialFamily {
    pub fn dumbbell(lambda: f64, waist: f64, cap: f64) -> Self {
        InitialFamily::Dumbbell { lambda, waist, cap, skew: 0.0 }
    }

    pub fn sphere(radius: f64) -> Self {
        InitialFamily::PerturbedSphere { radius, amplitude: 0.0 }
    }

    /// Same family with a different interpolation parameter.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        if let InitialFamily::Dumbbell { lambda: l, .. } = &mut out {
            *l = lambda;
        }
        out
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            InitialFamily::Dumbbell { lambda, .. } => Some(*lambda),
            _ => None,
        }
    }
}

/// Samples a family member on `resolution` uniform nodes.
pub fn make_initial(fam: &InitialFamily, resolution: usize, n: usize) -> Result<ProfileGrid> {
    if resolution < 100 {
        return Err(Error::InvalidFamily(format!("resolution {resolution} < 100")));
    }
    if n < 2 {
        return Err(Error::InvalidFamily(format!("fiber dimension n = {n} < 2")));
    }
    let x = uniform_x(resolution);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let (phi, psi) = match fam {
        InitialFamily::Dumbbell { lambda, waist, cap, skew } => {
            if !(0.0..=1.0).contains(lambda) {
                return Err(Error::InvalidFamily(format!("lambda = {lambda} outside [0, 1]")));
            }
            if !(*cap > 0.0) || !(skew.abs() < 1.0) {
                return Err(Error::InvalidFamily("need cap > 0 and |skew| < 1".into()));
            }
            let depth = 1.0 - waist / cap;
            if !(depth > 0.0 && depth < 1.0) {
                return Err(Error::InvalidFamily(format!("waist {waist} must lie in (0, cap = {cap})")));
            }
            let amp = (1.0 - lambda) * depth;
            let mut phi = Vec::with_capacity(resolution);
            let mut psi = Vec::with_capacity(resolution);
            for &xi in &x {
                let y = half_pi * xi;
                let (v, c) = (y.sin(), y.cos());
                let tilt = 1.0 + skew * v;
                phi.push(cap * half_pi * tilt);
                psi.push(cap * c * (1.0 - amp * c * c) * tilt);
            }
            (phi, psi)
        }
        InitialFamily::PerturbedSphere { radius, amplitude } => {
            if !(*radius > 0.0) {
                return Err(Error::InvalidFamily(format!("radius {radius} must be positive")));
            }
            let psi = x
                .iter()
                .map(|&xi| {
                    let c = (half_pi * xi).cos();
                    radius * c * (1.0 + amplitude * c * c)
                })
                .collect();
            (vec![radius * half_pi; resolution], psi)
        }
        InitialFamily::CustomTable { x: tx, phi: tphi, psi: tpsi } => {
            if tx.len() < 2 || tx.len() != tphi.len() || tx.len() != tpsi.len() {
                return Err(Error::InvalidFamily("custom table columns must have equal length ≥ 2".into()));
            }
            let phi = x.iter().map(|&xi| lerp_table(tx, tphi, xi)).collect();
            let psi = x.iter().map(|&xi| lerp_table(tx, tpsi, xi)).collect();
            (phi, psi)
        }
    };
    let mut psi = psi;
    psi[0] = 0.0;
    psi[resolution - 1] = 0.0;
    for i in 1..resolution - 1 {
        if !(psi[i] > 0.0) {
            return Err(Error::InvalidFamily(format!("psi = {} ≤ 0 at x = {}", psi[i], x[i])));
        }
    }
    ProfileGrid::new(n, x, phi, psi, 0.0).map_err(|e| Error::InvalidFamily(e.to_string()))
}

fn lerp_table(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let j = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let w = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
    ys[j - 1] + w * (ys[j] - ys[j - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sphere(nodes: usize) -> ProfileGrid {
        make_initial(&InitialFamily::sphere(1.0), nodes, 2).unwrap()
    }

    #[test]
    fn round_sphere_has_half_circumference_pi() {
        let g = sphere(801);
        let a = arclength(&g).unwrap();
        assert!((a.s_total - PI).abs() < 1e-12);
        assert!(a.s[400].abs() < 1e-14);
    }

    #[test]
    fn unit_phi_gives_identity_arclength() {
        let x = uniform_x(201);
        let psi: Vec<f64> = x.iter().map(|v| 1.0 - v * v).collect();
        let g = ProfileGrid { n: 2, x: x.clone(), phi: vec![1.0; 201], psi, t: 0.0 };
        let a = arclength(&g).unwrap();
        for (s, x) in a.s.iter().zip(&x) {
            assert!((s - x).abs() < 1e-14);
        }
    }

    #[test]
    fn nonpositive_phi_is_rejected() {
        let mut g = sphere(201);
        g.phi[7] = 0.0;
        assert!(matches!(arclength(&g), Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn unit_three_sphere_curvatures() {
        let g = sphere(801);
        let c = curvatures(&g).unwrap();
        assert!((c.k[400] - 1.0).abs() < 1e-9, "K = {}", c.k[400]);
        assert!((c.l[400] - 1.0).abs() < 1e-9);
        assert!((c.r[400] - 6.0).abs() < 1e-8);
        assert!((c.pole_right() - 1.0).abs() < 1e-5, "pole K = {}", c.pole_right());
        assert!((c.pole_left() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn cylinder_segment_curvatures() {
        // ψ ≡ r₀ on the middle of a grid; only check nodes away from the caps
        let x = uniform_x(401);
        let r0 = 0.5;
        let psi: Vec<f64> =
            x.iter().map(|&v| if v.abs() < 0.5 { r0 } else { r0 * ((1.0 - v.abs()) * 2.0).max(0.0) }).collect();
        let g = ProfileGrid { n: 3, x, phi: vec![1.0; 401], psi, t: 0.0 };
        let c = curvatures(&g).unwrap();
        assert!(c.k[200].abs() < 1e-12);
        assert!((c.l[200] - 1.0 / (r0 * r0)).abs() < 1e-12);
    }

    #[test]
    fn tiny_psi_is_singular() {
        let mut g = sphere(201);
        g.psi[100] = 1e-200;
        assert!(matches!(curvatures(&g), Err(Error::SingularProfile { .. })));
    }

    #[test]
    fn scalar_curvature_two_ways() {
        let g = make_initial(&InitialFamily::dumbbell(0.3, 0.15, 1.0), 600, 3).unwrap();
        let c = curvatures(&g).unwrap();
        let direct = scalar_curvature_direct(&g);
        for i in 1..g.nodes() - 1 {
            let scale = c.r[i].abs().max(1.0);
            assert!((c.r[i] - direct[i]).abs() <= 1e-12 * scale, "node {i}");
        }
    }

    #[test]
    fn sphere_has_one_bump_and_no_neck() {
        for nodes in [400, 401] {
            let g = sphere(nodes);
            let e = detect_extrema(&g, &arclength(&g).unwrap(), DEFAULT_FLAT_TOL);
            assert!(e.necks.is_empty());
            assert_eq!(e.bumps.len(), 1);
            assert!(e.bumps[0].s.abs() < 1e-6, "bump at {}", e.bumps[0].s);
        }
    }

    #[test]
    fn symmetric_dumbbell_extrema() {
        let g = make_initial(&InitialFamily::dumbbell(0.0, 0.1, 1.0), 800, 2).unwrap();
        let e = detect_extrema(&g, &arclength(&g).unwrap(), DEFAULT_FLAT_TOL);
        assert_eq!(e.necks.len(), 1);
        assert_eq!(e.bumps.len(), 2);
        assert!(e.necks[0].s.abs() < 1e-6);
        assert!((e.necks[0].psi - 0.1).abs() < 1e-3);
        assert!((e.bumps[0].s + e.bumps[1].s).abs() < 1e-9);
    }

    #[test]
    fn plateau_uses_weighted_centroid() {
        // flat top on |x| ≤ 0.1 joined smoothly to round caps
        let x = uniform_x(201);
        let psi: Vec<f64> = x
            .iter()
            .map(|&v| {
                let u = v.abs();
                let f = u * crate::numerics::smoothstep((u - 0.1) / 0.3);
                (PI * f / 2.0).cos()
            })
            .collect();
        let mut psi = psi;
        psi[0] = 0.0;
        psi[200] = 0.0;
        let g = ProfileGrid { n: 2, x, phi: vec![PI / 2.0; 201], psi, t: 0.0 };
        let e = detect_extrema(&g, &arclength(&g).unwrap(), DEFAULT_FLAT_TOL);
        assert_eq!(e.bumps.len(), 1, "{e:?}");
        assert!(e.necks.is_empty());
        assert!(e.bumps[0].s.abs() < 1e-12);
        assert!((e.bumps[0].psi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_sphere_from_zero_amplitude() {
        let g = make_initial(&InitialFamily::PerturbedSphere { radius: 1.0, amplitude: 0.0 }, 101, 2).unwrap();
        for (x, p) in g.x.iter().zip(&g.psi) {
            assert!((p - (PI * x / 2.0).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn dumbbell_waist_matches_parameter() {
        let g = make_initial(&InitialFamily::dumbbell(0.0, 0.1, 1.0), 801, 2).unwrap();
        assert!((g.psi[400] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn invalid_family_parameters() {
        assert!(matches!(make_initial(&InitialFamily::dumbbell(0.0, 1.5, 1.0), 400, 2), Err(Error::InvalidFamily(_))));
        assert!(matches!(
            make_initial(&InitialFamily::PerturbedSphere { radius: 1.0, amplitude: -1.5 }, 400, 2),
            Err(Error::InvalidFamily(_))
        ));
        assert!(make_initial(&InitialFamily::sphere(1.0), 50, 2).is_err());
        let tilted = InitialFamily::Dumbbell { lambda: 0.0, waist: 0.1, cap: 1.0, skew: 1.0 };
        assert!(make_initial(&tilted, 400, 2).is_err());
    }

    #[test]
    fn assumptions_for_sphere_and_dumbbells() {
        let r = check_assumptions(&sphere(400)).unwrap();
        assert!(r.curvature_conditions());
        assert!(!r.has_neck);

        let d = make_initial(&InitialFamily::dumbbell(0.0, 0.15, 1.0), 800, 2).unwrap();
        assert!(check_assumptions(&d).unwrap().all());

        let d = make_initial(&InitialFamily::dumbbell(0.5, 0.1, 1.0), 800, 2).unwrap();
        assert!(check_assumptions(&d).unwrap().curvature_conditions());
    }

    #[test]
    fn negative_skew_shrinks_the_right_cap() {
        let fam = InitialFamily::Dumbbell { lambda: 0.0, waist: 0.1, cap: 1.0, skew: -0.3 };
        let g = make_initial(&fam, 800, 2).unwrap();
        let e = detect_extrema(&g, &arclength(&g).unwrap(), DEFAULT_FLAT_TOL);
        assert_eq!(e.bumps.len(), 2);
        assert!(e.bumps[1].psi < e.bumps[0].psi);
        assert!(check_assumptions(&g).unwrap().all());
    }

    #[test]
    fn steep_profile_violates_condition_one() {
        // ψ_s > 1 on a stretch of the profile
        let x = uniform_x(401);
        let psi: Vec<f64> = x
            .iter()
            .map(|&v| {
                let c = (PI * v / 2.0).cos();
                c * (1.0 + 3.0 * c * c)
            })
            .collect();
        let g = ProfileGrid { n: 2, x, phi: vec![PI / 2.0; 401], psi, t: 0.0 };
        let r = check_assumptions(&g).unwrap();
        assert!(!r.sectional_l_positive);
    }

    #[test]
    fn pole_slopes_are_unit() {
        let g = make_initial(&InitialFamily::dumbbell(0.2, 0.15, 1.0), 400, 2).unwrap();
        let d = s_derivatives(&g);
        let ds = g.h() * g.phi[0];
        assert!((d.psi_s[0] - 1.0).abs() < 10.0 * ds);
        assert!((d.psi_s[399] + 1.0).abs() < 10.0 * ds);
    }
}
