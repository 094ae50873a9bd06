use std::sync::OnceLock;

use neckpinch_core::bryant::{f_apply, solve_bryant, BryantProfile};
use proptest::prelude::*;

fn profile(n: usize) -> &'static BryantProfile {
    static CACHE: [OnceLock<BryantProfile>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    CACHE[n - 2].get_or_init(|| solve_bryant(n, 1e-10).unwrap())
}

/// Least-squares slope of `r²(r²B - 1)` against `r⁻²` on the far table.
fn far_field_coefficients(p: &BryantProfile) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = p
        .r_table
        .iter()
        .zip(&p.b_table)
        .filter(|(r, _)| **r >= 30.0 && **r <= 100.0)
        .map(|(r, b)| (1.0 / (r * r), r * r * (r * r * b - 1.0)))
        .collect();
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx).powi(2)));
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[test]
fn profile_is_a_decreasing_fraction() {
    for n in 2..=4 {
        let p = profile(n);
        assert_eq!(p.eval(0.0), 1.0);
        let r: Vec<f64> = (0..400).map(|i| 0.05 * i as f64).collect();
        let b: Vec<f64> = r.iter().map(|r| p.eval(*r)).collect();
        assert!(b.iter().all(|v| *v > 0.0 && *v <= 1.0));
        assert!(b.windows(2).all(|w| w[1] < w[0]), "n = {n}");
    }
}

#[test]
fn second_far_field_coefficient_matches_the_dimension() {
    // the r⁻⁴ term of B is (4 - n)/(n - 1) once r²B → 1
    for (n, expect) in [(2, 2.0), (3, 0.5), (4, 0.0)] {
        let (second, _) = far_field_coefficients(profile(n));
        assert!((second - expect).abs() < 0.02, "n = {n}: {second}");
    }
}

#[test]
fn far_field_at_moderate_radius() {
    let b = profile(2).eval(20.0);
    let series = 1.0 / 400.0 + 2.0 / 160_000.0 + 10.0 / 64_000_000.0;
    assert!((b / series - 1.0).abs() < 1e-4, "{b} vs {series}");
}

#[test]
fn finite_differences_satisfy_the_ode() {
    for n in 2..=4 {
        let p = profile(n);
        for r in [0.3, 1.0, 2.5, 7.0, 18.0] {
            let h = 1e-3 * r;
            let (zm, z0, zp) = (p.eval(r - h), p.eval(r), p.eval(r + h));
            let z_r = (zp - zm) / (2.0 * h);
            let z_rr = (zp - 2.0 * z0 + zm) / (h * h);
            let res = f_apply(n, r, z0, z_r, z_rr);
            assert!(res.abs() < 1e-5 * z0, "n = {n}, r = {r}: {res}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cap_coordinate_round_trips(log_r in -4.0..8.0f64, n in 2usize..=4) {
        let g = profile(n).cap_coordinate();
        let r = log_r.exp();
        let back = g.inverse(g.forward(r));
        prop_assert!((back - r).abs() <= 1e-8 * r, "r = {}, got {}", r, back);
    }

    #[test]
    fn cap_coordinate_is_increasing(a in 0.0..500.0f64, d in 1e-3..10.0f64) {
        let g = profile(2).cap_coordinate();
        prop_assert!(g.forward(a + d) > g.forward(a));
    }
}
