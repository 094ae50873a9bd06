//! Linearization around the shrinking cylinder in self-similar variables.
//!
//! With `U = ψ/√(2(n-1)(T-t))` and `V = U - 1`, the perturbation evolves by
//! `V_τ = A V + N(V)` where `A V = V_σσ - (σ/2) V_σ + V` is self-adjoint in
//! `L²(ℝ, e^{-σ²/4} dσ)`. Its eigenfunctions are the Hermite polynomials
//! `h_k` normalized to leading coefficient 1, with eigenvalues `1 - k/2`.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{diff1, diff2, uniform_spacing};

/// Default truncation radius of the σ domain.
pub const DEFAULT_SIGMA_MAX: f64 = 12.0;
/// Default highest mode in projections.
pub const DEFAULT_K_MAX: usize = 6;
/// Largest admissible relative weighted mass of `h_{k_max}²` outside the domain.
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;

/// Polynomial in σ with exact rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    pub coeffs: Vec<Rational64>,
}

impl Polynomial {
    pub fn from_ints(c: &[i64]) -> Self {
        Polynomial { coeffs: c.iter().map(|&v| Rational64::from_integer(v)).collect() }.trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last().is_some_and(|c| *c == Rational64::from_integer(0)) {
            self.coeffs.pop();
        }
        self
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Rational64::from_integer(0))
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| *c != Rational64::from_integer(0))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + (*c.numer() as f64 / *c.denom() as f64))
    }

    pub fn derivative(&self) -> Self {
        Polynomial {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| c * Rational64::from_integer(j as i64))
                .collect(),
        }
        .trimmed()
    }

    pub fn scale(&self, f: Rational64) -> Self {
        Polynomial { coeffs: self.coeffs.iter().map(|c| c * f).collect() }.trimmed()
    }

    /// Multiplication by σ.
    pub fn shift(&self) -> Self {
        let mut coeffs = vec![Rational64::from_integer(0)];
        coeffs.extend_from_slice(&self.coeffs);
        Polynomial { coeffs }.trimmed()
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = Rational64::from_integer(0);
        Polynomial {
            coeffs: (0..len)
                .map(|j| self.coeffs.get(j).copied().unwrap_or(zero) + other.coeffs.get(j).copied().unwrap_or(zero))
                .collect(),
        }
        .trimmed()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Rational64::from_integer(-1)))
    }
}

/// `A V = V_σσ - (σ/2) V_σ + V` in exact arithmetic.
pub fn apply_a(v: &Polynomial) -> Polynomial {
    let d1 = v.derivative();
    let d2 = d1.derivative();
    d2.sub(&d1.shift().scale(Rational64::new(1, 2))).add(v)
}

/// `A V` for samples on a uniform σ grid, with finite differences.
pub fn apply_a_sampled(sigma: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if v.len() < 5 {
        return Err(Error::Stencil { needed: 5, got: v.len() });
    }
    let h = uniform_spacing(sigma)?;
    let v1 = diff1(v, h)?;
    let v2 = diff2(v, h)?;
    Ok((0..v.len()).map(|i| v2[i] - 0.5 * sigma[i] * v1[i] + v[i]).collect())
}

/// Integer coefficient tables of `h_0 … h_{k_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteBasis {
    pub k_max: usize,
    /// `coeffs[k][j]` is the coefficient of `σ^j` in `h_k`.
    pub coeffs: Vec<Vec<i64>>,
    pub eigenvalues: Vec<f64>,
}

impl HermiteBasis {
    /// Builds the table by `h_{k+1} = σ h_k - 2k h_{k-1}`.
    pub fn new(k_max: usize) -> Self {
        let mut coeffs: Vec<Vec<i64>> = vec![vec![1]];
        if k_max >= 1 {
            coeffs.push(vec![0, 1]);
        }
        for k in 1..k_max {
            let mut next = vec![0i64; k + 2];
            for (j, c) in coeffs[k].iter().enumerate() {
                next[j + 1] += c;
            }
            for (j, c) in coeffs[k - 1].iter().enumerate() {
                next[j] -= 2 * k as i64 * c;
            }
            coeffs.push(next);
        }
        let eigenvalues = (0..=k_max).map(eigenvalue).collect();
        HermiteBasis { k_max, coeffs, eigenvalues }
    }

    pub fn polynomial(&self, k: usize) -> Polynomial {
        Polynomial::from_ints(&self.coeffs[k])
    }

    pub fn eval(&self, k: usize, sigma: f64) -> f64 {
        self.coeffs[k].iter().rev().fold(0.0, |acc, &c| acc * sigma + c as f64)
    }
}

/// `λ_k = 1 - k/2`.
pub fn eigenvalue(k: usize) -> f64 {
    1.0 - 0.5 * k as f64
}

/// `h_k` with leading coefficient 1.
pub fn hermite(k: usize) -> Polynomial {
    HermiteBasis::new(k).polynomial(k)
}

/// Evaluates `h_k(σ)` by the three-term recurrence in floating point.
pub fn hermite_value(k: usize, sigma: f64) -> f64 {
    let (mut a, mut b) = (1.0, sigma);
    if k == 0 {
        return a;
    }
    for j in 1..k {
        let c = sigma * b - 2.0 * j as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// Closed form `⟨h_k, h_k⟩ = 2^{k+1} √π k!` for the weight `e^{-σ²/4}`.
pub fn norm_closed_form(k: usize) -> f64 {
    let fact: f64 = (1..=k).map(|j| j as f64).product();
    2f64.powi(k as i32 + 1) * std::f64::consts::PI.sqrt() * fact
}

/// Fraction of the weighted mass of `h_k²` lying outside `|σ| ≤ sigma_max`.
pub fn tail_fraction(k: usize, sigma_max: f64) -> f64 {
    let f = |s: f64| hermite_value(k, s).powi(2) * (-0.25 * s * s).exp();
    let upper = sigma_max + 40.0;
    let steps = 8000;
    let h = (upper - sigma_max) / steps as f64;
    // composite Simpson on [sigma_max, sigma_max + 40]
    let mut acc = f(sigma_max) + f(upper);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(sigma_max + h * i as f64);
    }
    2.0 * acc * h / 3.0 / norm_closed_form(k)
}

/// Quadrature settings recorded with a projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub nodes: usize,
    pub sigma_max: f64,
    /// Relative weighted mass of `h_{k_max}²` outside the domain.
    pub tail: f64,
}

/// Weighted `L²` coefficients of sampled `V` against `h_0 … h_{k_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralProjection {
    pub tau: f64,
    #[serde(rename = "b")]
    pub coefficients: Vec<f64>,
    pub quadrature: Quadrature,
    /// Numerically computed `⟨h_k, h_k⟩`.
    pub norms: Vec<f64>,
    /// Largest relative gap between `norms` and the closed form.
    pub norm_deviation: f64,
    /// Weighted `L²` size of `V - Σ b_k h_k` relative to that of `V`.
    pub residual: f64,
}

impl SpectralProjection {
    pub fn reconstruct(&self, sigma: f64) -> f64 {
        self.coefficients.iter().enumerate().map(|(k, b)| b * hermite_value(k, sigma)).sum()
    }

    pub fn k_max(&self) -> usize {
        self.coefficients.len() - 1
    }
}

fn trapezoid_weights(sigma: &[f64], h: f64) -> Vec<f64> {
    let m = sigma.len();
    sigma
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let end = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
            end * h * (-0.25 * s * s).exp()
        })
        .collect()
}

/// Projects samples on a uniform σ grid, with the default tail tolerance.
pub fn project(sigma: &[f64], v: &[f64], k_max: usize, tau: f64) -> Result<SpectralProjection> {
    project_with_tol(sigma, v, k_max, tau, DEFAULT_TAIL_TOL)
}

/// `b_k = ⟨V, h_k⟩ / ⟨h_k, h_k⟩` by weighted trapezoid quadrature.
pub fn project_with_tol(sigma: &[f64], v: &[f64], k_max: usize, tau: f64, tail_tol: f64) -> Result<SpectralProjection> {
    if sigma.len() != v.len() {
        return Err(Error::Domain("sigma and V lengths differ".into()));
    }
    let h = uniform_spacing(sigma)?;
    let sigma_max = (-sigma[0]).min(sigma[sigma.len() - 1]);
    if sigma_max < 8.0 {
        return Err(Error::Domain(format!("samples cover |σ| ≤ {sigma_max}, need at least 8")));
    }
    let tail = tail_fraction(k_max, sigma_max);
    if tail > tail_tol {
        return Err(Error::Truncation { tail, tol: tail_tol, k_max });
    }
    let w = trapezoid_weights(sigma, h);
    let mut coefficients = Vec::with_capacity(k_max + 1);
    let mut norms = Vec::with_capacity(k_max + 1);
    let mut norm_deviation: f64 = 0.0;
    let hk: Vec<Vec<f64>> = (0..=k_max).map(|k| sigma.iter().map(|&s| hermite_value(k, s)).collect()).collect();
    for (k, hv) in hk.iter().enumerate() {
        let norm: f64 = hv.iter().zip(&w).map(|(a, w)| a * a * w).sum();
        let dot: f64 = hv.iter().zip(v).zip(&w).map(|((a, b), w)| a * b * w).sum();
        norm_deviation = norm_deviation.max((norm / norm_closed_form(k) - 1.0).abs());
        norms.push(norm);
        coefficients.push(dot / norm);
    }
    let mut res2 = 0.0;
    let mut v2 = 0.0;
    for i in 0..sigma.len() {
        let rec: f64 = coefficients.iter().zip(&hk).map(|(b, hv)| b * hv[i]).sum();
        res2 += (v[i] - rec).powi(2) * w[i];
        v2 += v[i] * v[i] * w[i];
    }
    let residual = if v2 > 0.0 { (res2 / v2).sqrt() } else { res2.sqrt() };
    Ok(SpectralProjection {
        tau,
        coefficients,
        quadrature: Quadrature { nodes: sigma.len(), sigma_max, tail },
        norms,
        norm_deviation,
        residual,
    })
}

/// Weighted Gram matrix of `h_0 … h_{k_max}` on a uniform grid.
pub fn gram_matrix(sigma: &[f64], k_max: usize) -> Result<Vec<Vec<f64>>> {
    let h = uniform_spacing(sigma)?;
    let w = trapezoid_weights(sigma, h);
    let hk: Vec<Vec<f64>> = (0..=k_max).map(|k| sigma.iter().map(|&s| hermite_value(k, s)).collect()).collect();
    Ok((0..=k_max)
        .map(|i| (0..=k_max).map(|j| hk[i].iter().zip(&hk[j]).zip(&w).map(|((a, b), w)| a * b * w).sum()).collect())
        .collect())
}

/// `I(σ) = ∫₀^σ U_σσ/U dσ'` on a uniform grid.
pub fn nonlocal_i(sigma: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = u.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Pole(format!("U = {} at σ = {}", u[i], sigma[i])));
    }
    let h = uniform_spacing(sigma)?;
    let u2 = diff2(u, h)?;
    let integrand: Vec<f64> = u2.iter().zip(u).map(|(a, b)| a / b).collect();
    let cum = crate::numerics::cumulative_trapezoid(sigma, &integrand);
    // value of the running integral at σ = 0 under the piecewise linear integrand
    let m = sigma.len();
    let j = sigma.partition_point(|&s| s <= 0.0).clamp(1, m - 1) - 1;
    let dx = (0.0 - sigma[j]).clamp(0.0, sigma[j + 1] - sigma[j]);
    let slope = (integrand[j + 1] - integrand[j]) / (sigma[j + 1] - sigma[j]);
    let at_zero = cum[j] + integrand[j] * dx + 0.5 * slope * dx * dx;
    Ok(cum.iter().map(|c| c - at_zero).collect())
}

/// `N(V) = [2(n-1)V_σ² - V²] / [2(1+V)] - n I V_σ`.
pub fn nonlinear_n(sigma: &[f64], v: &[f64], i: &[f64], n: usize) -> Result<Vec<f64>> {
    if let Some(j) = v.iter().position(|x| !(1.0 + x > 0.0)) {
        return Err(Error::OutOfRegime(format!("1 + V = {} at σ = {}", 1.0 + v[j], sigma[j])));
    }
    let h = uniform_spacing(sigma)?;
    let v1 = diff1(v, h)?;
    let n = n as f64;
    Ok((0..v.len())
        .map(|j| (2.0 * (n - 1.0) * v1[j] * v1[j] - v[j] * v[j]) / (2.0 * (1.0 + v[j])) - n * i[j] * v1[j])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{adaptive_simpson, linspace};
    use proptest::prelude::*;

    #[test]
    fn low_order_tables() {
        assert_eq!(hermite(0), Polynomial::from_ints(&[1]));
        assert_eq!(hermite(1), Polynomial::from_ints(&[0, 1]));
        assert_eq!(hermite(2), Polynomial::from_ints(&[-2, 0, 1]));
        assert_eq!(hermite(3), Polynomial::from_ints(&[0, -6, 0, 1]));
        assert_eq!(hermite(4), Polynomial::from_ints(&[12, 0, -12, 0, 1]));
    }

    #[test]
    fn eigenrelation_is_exact() {
        let basis = HermiteBasis::new(12);
        for k in 0..=12 {
            let h = basis.polynomial(k);
            let lam = Rational64::new(2 - k as i64, 2);
            assert!(apply_a(&h).sub(&h.scale(lam)).is_zero(), "k = {k}");
        }
        assert!(apply_a(&hermite(2)).is_zero());
        assert_eq!(apply_a(&hermite(0)), hermite(0));
    }

    #[test]
    fn leading_coefficient_and_parity() {
        let basis = HermiteBasis::new(10);
        for k in 0..=10 {
            let c = &basis.coeffs[k];
            assert_eq!(c.len(), k + 1);
            assert_eq!(c[k], 1);
            for (j, v) in c.iter().enumerate() {
                if (j + k) % 2 == 1 {
                    assert_eq!(*v, 0);
                }
            }
        }
    }

    #[test]
    fn norm_of_h2_against_adaptive_integration() {
        let oracle = adaptive_simpson(&|s: f64| (s * s - 2.0).powi(2) * (-s * s / 4.0).exp(), -40.0, 40.0, 1e-13);
        assert!((oracle - 16.0 * std::f64::consts::PI.sqrt()).abs() < 1e-9);
        assert!((norm_closed_form(2) - 28.359).abs() < 1e-3);
    }

    #[test]
    fn tail_fractions_bound_the_domain() {
        assert!(tail_fraction(6, 12.0) < DEFAULT_TAIL_TOL);
        assert!(tail_fraction(10, 8.0) > 1e-6);
    }

    #[test]
    fn project_single_mode() {
        let sigma = linspace(-12.0, 12.0, 961);
        let v: Vec<f64> = sigma.iter().map(|&s| hermite_value(3, s)).collect();
        let p = project(&sigma, &v, 6, 0.0).unwrap();
        assert!((p.coefficients[3] - 1.0).abs() < 1e-10);
        for (k, b) in p.coefficients.iter().enumerate() {
            if k != 3 {
                assert!(b.abs() < 1e-10, "b_{k} = {b}");
            }
        }
        assert!(p.norm_deviation < 1e-8);
    }

    #[test]
    fn project_is_linear() {
        let sigma = linspace(-12.0, 12.0, 961);
        let v: Vec<f64> = sigma.iter().map(|&s| 2.0 - 0.5 * hermite_value(2, s)).collect();
        let p = project(&sigma, &v, 6, 0.0).unwrap();
        assert!((p.coefficients[0] - 2.0).abs() < 1e-10);
        assert!((p.coefficients[2] + 0.5).abs() < 1e-10);
    }

    #[test]
    fn truncation_and_coverage_errors() {
        let sigma = linspace(-8.0, 8.0, 321);
        let v = vec![0.0; 321];
        assert!(matches!(project(&sigma, &v, 10, 0.0), Err(Error::Truncation { .. })));
        let sigma = linspace(-6.0, 6.0, 241);
        assert!(matches!(project(&sigma, &vec![0.0; 241], 2, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn nonlocal_term_examples() {
        let sigma = linspace(-6.0, 6.0, 1201);
        let ones = vec![1.0; sigma.len()];
        assert!(nonlocal_i(&sigma, &ones).unwrap().iter().all(|v| v.abs() < 1e-15));

        let eps = 1e-3;
        let u: Vec<f64> = sigma.iter().map(|&s| 1.0 + eps * hermite_value(2, s)).collect();
        let i = nonlocal_i(&sigma, &u).unwrap();
        for (s, v) in sigma.iter().zip(&i) {
            if s.abs() <= 3.0 && s.abs() > 0.05 {
                let approx = 2.0 * eps * s;
                assert!(((v - approx) / approx).abs() < 1e-2, "σ = {s}");
            }
        }
        // even U gives odd I
        let n = sigma.len();
        for j in 0..n {
            assert!((i[j] + i[n - 1 - j]).abs() < 1e-12);
        }

        let mut bad = ones.clone();
        bad[5] = 0.0;
        assert!(matches!(nonlocal_i(&sigma, &bad), Err(Error::Pole(_))));
    }

    #[test]
    fn nonlinear_term_examples() {
        let sigma = linspace(-4.0, 4.0, 81);
        let zero = vec![0.0; 81];
        assert!(nonlinear_n(&sigma, &zero, &zero, 2).unwrap().iter().all(|v| *v == 0.0));
        let c = vec![0.2; 81];
        for v in nonlinear_n(&sigma, &c, &zero, 3).unwrap() {
            assert!((v + 0.04 / 2.4).abs() < 1e-14);
        }
        let bad = vec![-1.0; 81];
        assert!(matches!(nonlinear_n(&sigma, &bad, &zero, 2), Err(Error::OutOfRegime(_))));
    }

    #[test]
    fn linear_part_dominates_for_small_modes() {
        // V = -0.01 e^{λ₃ τ} h₃ at τ = 6; compared in sup norm over |σ| ≤ 2
        // since N and AV vanish at different points
        let sigma = linspace(-4.0, 4.0, 801);
        let amp = -0.01 * (eigenvalue(3) * 6.0).exp();
        let v: Vec<f64> = sigma.iter().map(|&s| amp * hermite_value(3, s)).collect();
        let u: Vec<f64> = v.iter().map(|x| 1.0 + x).collect();
        let i = nonlocal_i(&sigma, &u).unwrap();
        let nv = nonlinear_n(&sigma, &v, &i, 2).unwrap();
        let av = apply_a_sampled(&sigma, &v).unwrap();
        let window =
            |f: &[f64]| sigma.iter().zip(f).filter(|(s, _)| s.abs() <= 2.0).map(|(_, v)| v.abs()).fold(0.0, f64::max);
        assert!(window(&nv) / window(&av) < 0.1);
    }

    #[test]
    fn sampled_operator_matches_exact() {
        let sigma = linspace(-5.0, 5.0, 501);
        let v: Vec<f64> = sigma.iter().map(|&s| hermite_value(4, s)).collect();
        let av = apply_a_sampled(&sigma, &v).unwrap();
        for (a, b) in av.iter().zip(&v) {
            assert!((a + b).abs() < 1e-6);
        }
        assert!(matches!(apply_a_sampled(&sigma[..4], &v[..4]), Err(Error::Stencil { .. })));
    }

    proptest! {
        #[test]
        fn projection_reconstructs_span(b in proptest::collection::vec(-2.0f64..2.0, 7)) {
            let sigma = linspace(-16.0, 16.0, 1281);
            let v: Vec<f64> = sigma
                .iter()
                .map(|&s| b.iter().enumerate().map(|(k, c)| c * hermite_value(k, s)).sum())
                .collect();
            let p = project(&sigma, &v, 6, 0.0).unwrap();
            for (got, want) in p.coefficients.iter().zip(&b) {
                prop_assert!((got - want).abs() < 1e-9);
            }
        }

        #[test]
        fn parity_of_projection(b in proptest::collection::vec(-2.0f64..2.0, 4)) {
            let sigma = linspace(-12.0, 12.0, 961);
            // even function: cos plus even modes
            let v: Vec<f64> = sigma
                .iter()
                .map(|&s| (0.3 * s).cos() * b[0] + b[1] * hermite_value(2, s) + b[2] * hermite_value(4, s) + b[3] * hermite_value(6, s))
                .collect();
            let p = project(&sigma, &v, 6, 0.0).unwrap();
            for k in [1, 3, 5] {
                prop_assert!(p.coefficients[k].abs() < 1e-12);
            }
        }
    }
}
