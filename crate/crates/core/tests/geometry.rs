#![allow(clippy::needless_range_loop)]

use neckpinch_core::geometry::{
    arclength, check_assumptions, curvatures, make_initial, s_derivatives, scalar_curvature_direct, uniform_x,
    InitialFamily, ProfileGrid,
};
use neckpinch_core::numerics::{adaptive_simpson, interp_linear};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn arclength_matches_quadrature_of_piecewise_linear_phi() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = uniform_x(1000);
    let phi: Vec<f64> = (0..1000).map(|_| rng.gen_range(0.2..3.0)).collect();
    let mut psi: Vec<f64> = x.iter().map(|x| (std::f64::consts::FRAC_PI_2 * x).cos()).collect();
    psi[0] = 0.0;
    psi[999] = 0.0;
    let g = ProfileGrid::new(2, x.clone(), phi.clone(), psi, 0.0).unwrap();
    let frame = arclength(&g).unwrap();
    let f = |t: f64| interp_linear(&x, &phi, t);
    for i in (0..1000).step_by(97).chain([999]) {
        // integrate node to node so every kink is an interval end
        let (a, b) = if x[i] < 0.0 { (x[i], 0.0) } else { (0.0, x[i]) };
        let mut knots: Vec<f64> = x.iter().cloned().filter(|v| *v > a && *v < b).collect();
        knots.insert(0, a);
        knots.push(b);
        let total: f64 = knots.windows(2).map(|w| adaptive_simpson(&f, w[0], w[1], 1e-15)).sum();
        let expect = if x[i] < 0.0 { -total } else { total };
        let scale = expect.abs().max(1e-3);
        assert!((frame.s[i] - expect).abs() <= 1e-10 * scale, "node {i}: {} vs {expect}", frame.s[i]);
    }
}

const CAP: f64 = 1.0;
const WAIST: f64 = 0.15;
const LAMBDA: f64 = 0.4;
const SKEW: f64 = -0.3;

/// `K = -ψ_ss/ψ` of the skewed dumbbell, differentiated by hand in `y = πx/2`.
fn exact_k(x: f64) -> f64 {
    let amp = (1.0 - LAMBDA) * (1.0 - WAIST / CAP);
    let y = std::f64::consts::FRAC_PI_2 * x;
    let (v, c) = (y.sin(), y.cos());
    let (g, g_y, g_yy) =
        (c - amp * c.powi(3), -v + 3.0 * amp * c * c * v, -c + 3.0 * amp * (c.powi(3) - 2.0 * c * v * v));
    let (t, t_y, t_yy) = (1.0 + SKEW * v, SKEW * c, -SKEW * v);
    let psi = CAP * g * t;
    let psi_y = CAP * (g_y * t + g * t_y);
    let psi_yy = CAP * (g_yy * t + 2.0 * g_y * t_y + g * t_yy);
    let (big_phi, big_phi_y) = (CAP * t, CAP * SKEW * c);
    let psi_ss = (psi_yy * big_phi - psi_y * big_phi_y) / big_phi.powi(3);
    -psi_ss / psi
}

fn k_error(nodes: usize) -> f64 {
    let fam = InitialFamily::Dumbbell { lambda: LAMBDA, waist: WAIST, cap: CAP, skew: SKEW };
    let g = make_initial(&fam, nodes, 2).unwrap();
    let c = curvatures(&g).unwrap();
    let stride = (nodes - 1) / 4;
    (1..4).map(|j| (c.k[j * stride] - exact_k(g.x[j * stride])).abs()).fold(0.0, f64::max)
}

#[test]
fn sectional_curvature_converges_at_second_order_or_better() {
    let e: Vec<f64> = [101, 201, 401].iter().map(|&m| k_error(m)).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "errors {e:?}, order {order}");
    }
}

#[test]
fn dumbbell_families_satisfy_the_assumptions() {
    let mid = check_assumptions(&make_initial(&InitialFamily::dumbbell(0.5, 0.15, 1.0), 800, 2).unwrap()).unwrap();
    assert!(mid.curvature_conditions() && mid.has_neck);
    let sphere = check_assumptions(&make_initial(&InitialFamily::sphere(1.0), 800, 2).unwrap()).unwrap();
    assert!(sphere.curvature_conditions() && !sphere.has_neck);
}

fn family() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0..0.9f64, 0.05..0.5f64, 0.5..2.0f64, -0.5..0.5f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn curvatures_commute_with_mirroring((lambda, waist, cap, _) in family(), n in 2usize..6) {
        let g = make_initial(&InitialFamily::dumbbell(lambda, waist, cap), 301, n).unwrap();
        let a = curvatures(&g).unwrap();
        let b = curvatures(&g.mirrored()).unwrap();
        let m = g.nodes();
        for i in 0..m {
            let j = m - 1 - i;
            for (u, v) in [(a.k[i], b.k[j]), (a.l[i], b.l[j]), (a.r[i], b.r[j])] {
                prop_assert!((u - v).abs() <= 1e-10 * u.abs().max(1.0), "node {}: {} vs {}", i, u, v);
            }
        }
    }

    #[test]
    fn scalar_curvature_agrees_both_ways((lambda, waist, cap, skew) in family(), n in 2usize..6) {
        let fam = InitialFamily::Dumbbell { lambda, waist, cap, skew };
        let g = make_initial(&fam, 401, n).unwrap();
        let c = curvatures(&g).unwrap();
        let direct = scalar_curvature_direct(&g);
        for i in 1..g.nodes() - 1 {
            prop_assert!((c.r[i] - direct[i]).abs() <= 1e-12 * c.r[i].abs().max(1.0));
        }
    }

    #[test]
    fn generated_profiles_have_unit_pole_slopes((lambda, waist, cap, skew) in family(), nodes in 200usize..1200) {
        let g = make_initial(&InitialFamily::Dumbbell { lambda, waist, cap, skew }, nodes, 2).unwrap();
        let d = s_derivatives(&g);
        let m = g.nodes();
        prop_assert!((d.psi_s[0] - 1.0).abs() < 10.0 * g.h() * g.phi[0]);
        prop_assert!((d.psi_s[m - 1] + 1.0).abs() < 10.0 * g.h() * g.phi[m - 1]);
    }
}
