//! Small numerical helpers shared by the analysis modules: finite difference
//! stencils on uniform grids, quadrature, interpolation and line fits.

use crate::error::{Error, Result};

/// First derivative of samples on a uniform grid with spacing `h`.
///
/// Fourth-order centered in the interior, fourth-order one-sided at the two
/// nodes next to each end.
pub fn diff1(f: &[f64], h: f64) -> Result<Vec<f64>> {
    let m = f.len();
    if m < 5 {
        return Err(Error::Stencil { needed: 5, got: m });
    }
    let mut d = vec![0.0; m];
    let c = 1.0 / (12.0 * h);
    for i in 2..m - 2 {
        d[i] = (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) * c;
    }
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * c;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * c;
    d[m - 1] = -(-25.0 * f[m - 1] + 48.0 * f[m - 2] - 36.0 * f[m - 3] + 16.0 * f[m - 4] - 3.0 * f[m - 5]) * c;
    d[m - 2] = -(-3.0 * f[m - 1] - 10.0 * f[m - 2] + 18.0 * f[m - 3] - 6.0 * f[m - 4] + f[m - 5]) * c;
    Ok(d)
}

/// Second derivative of samples on a uniform grid with spacing `h`.
///
/// Fourth-order centered in the interior, five-point one-sided (third order)
/// at the two nodes next to each end.
pub fn diff2(f: &[f64], h: f64) -> Result<Vec<f64>> {
    let m = f.len();
    if m < 5 {
        return Err(Error::Stencil { needed: 5, got: m });
    }
    let mut d = vec![0.0; m];
    let c = 1.0 / (12.0 * h * h);
    for i in 2..m - 2 {
        d[i] = (-f[i + 2] + 16.0 * f[i + 1] - 30.0 * f[i] + 16.0 * f[i - 1] - f[i - 2]) * c;
    }
    d[0] = (35.0 * f[0] - 104.0 * f[1] + 114.0 * f[2] - 56.0 * f[3] + 11.0 * f[4]) * c;
    d[1] = (11.0 * f[0] - 20.0 * f[1] + 6.0 * f[2] + 4.0 * f[3] - f[4]) * c;
    d[m - 1] = (35.0 * f[m - 1] - 104.0 * f[m - 2] + 114.0 * f[m - 3] - 56.0 * f[m - 4] + 11.0 * f[m - 5]) * c;
    d[m - 2] = (11.0 * f[m - 1] - 20.0 * f[m - 2] + 6.0 * f[m - 3] + 4.0 * f[m - 4] - f[m - 5]) * c;
    Ok(d)
}

/// Spacing of a uniform grid, or an error if the grid is not uniform.
pub fn uniform_spacing(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::Stencil { needed: 2, got: x.len() });
    }
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::Domain("grid must be increasing".into()));
    }
    for w in x.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-8 * h {
            return Err(Error::Domain("grid must be uniform".into()));
        }
    }
    Ok(h)
}

/// Uniform grid of `m` points on `[a, b]`.
pub fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    let h = (b - a) / (m - 1) as f64;
    (0..m).map(|i| if i == m - 1 { b } else { a + h * i as f64 }).collect()
}

/// Composite trapezoid rule on arbitrary nodes.
pub fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2).zip(f.windows(2)).map(|(xw, fw)| 0.5 * (xw[1] - xw[0]) * (fw[0] + fw[1])).sum()
}

/// Running trapezoid integral starting at zero on the first node.
pub fn cumulative_trapezoid(x: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for i in 1..x.len() {
        out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
    }
    out
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        // a tolerance below the rounding error of the estimate cannot be met
        let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
        if depth == 0 || delta.abs() <= 15.0 * tol.max(floor) {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Piecewise linear interpolation on increasing nodes, clamped at the ends.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let m = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[m - 1] {
        return ys[m - 1];
    }
    let j = xs.partition_point(|&v| v <= x).clamp(1, m - 1);
    let w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    ys[j - 1] + w * (ys[j] - ys[j - 1])
}

/// Cubic Hermite interpolation with given node slopes.
pub fn interp_hermite(xs: &[f64], ys: &[f64], ds: &[f64], x: f64) -> f64 {
    let m = xs.len();
    let j = xs.partition_point(|&v| v <= x).clamp(1, m - 1);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let h = x1 - x0;
    let t = (x - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * ys[j - 1] + h10 * h * ds[j - 1] + h01 * ys[j] + h11 * h * ds[j]
}

/// Fritsch–Carlson limited slopes that keep a cubic Hermite interpolant of
/// monotone data monotone.
pub fn monotone_slopes(xs: &[f64], ys: &[f64], raw: &[f64]) -> Vec<f64> {
    let m = xs.len();
    let mut d = raw.to_vec();
    for i in 0..m - 1 {
        let delta = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        if delta == 0.0 {
            d[i] = 0.0;
            d[i + 1] = 0.0;
            continue;
        }
        if d[i] * delta < 0.0 {
            d[i] = 0.0;
        }
        if d[i + 1] * delta < 0.0 {
            d[i + 1] = 0.0;
        }
        let (a, b) = (d[i] / delta, d[i + 1] / delta);
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            d[i] = tau * a * delta;
            d[i + 1] = tau * b * delta;
        }
    }
    d
}

/// Ordinary least squares line `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Root mean square residual.
    pub rms: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let m = x.len();
    if m < 2 || y.len() != m {
        return Err(Error::FitRejected(format!("line fit needs ≥ 2 points, got {m}")));
    }
    let mx = x.iter().sum::<f64>() / m as f64;
    let my = y.iter().sum::<f64>() / m as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::FitRejected("degenerate abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / m as f64).sqrt();
    Ok(LineFit { intercept, slope, rms })
}

/// `C^∞` step: 0 for `u ≤ 0`, 1 for `u ≥ 1`, built from `e^{-1/u}`.
pub fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let f = |v: f64| (-1.0 / v).exp();
    let a = f(u);
    a / (a + f(1.0 - u))
}

/// Derivative of [`smoothstep`].
pub fn smoothstep_slope(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let f = |v: f64| (-1.0 / v).exp();
    let (a, b) = (f(u), f(1.0 - u));
    let (da, db) = (a / (u * u), b / ((1.0 - u) * (1.0 - u)));
    (da * b + a * db) / ((a + b) * (a + b))
}
