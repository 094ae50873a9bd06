use neckpinch_core::hermite::{apply_a, eigenvalue, hermite, hermite_value, norm_closed_form, project};
use neckpinch_core::numerics::linspace;
use proptest::prelude::*;

const K_MAX: usize = 6;

fn sigma() -> Vec<f64> {
    linspace(-14.0, 14.0, 2801)
}

fn synthesize(sigma: &[f64], b: &[f64]) -> Vec<f64> {
    sigma.iter().map(|&s| b.iter().enumerate().map(|(k, c)| c * hermite_value(k, s)).sum()).collect()
}

#[test]
fn eigenfunctions_of_the_drift_laplacian() {
    for k in 0..=10 {
        let lhs = apply_a(&hermite(k));
        for s in [-3.0, -0.7, 0.0, 1.3, 4.0] {
            let expect = eigenvalue(k) * hermite_value(k, s);
            assert!((lhs.eval(s) - expect).abs() <= 1e-9 * expect.abs().max(1.0), "k = {k}, σ = {s}");
        }
    }
}

#[test]
fn quadrature_norms_match_closed_form() {
    let s = sigma();
    let p = project(&s, &synthesize(&s, &[1.0]), K_MAX, 0.0).unwrap();
    for (k, norm) in p.norms.iter().enumerate() {
        assert!((norm / norm_closed_form(k) - 1.0).abs() < 1e-10, "k = {k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_recovers_synthesized_coefficients(b in prop::collection::vec(-2.0..2.0f64, K_MAX + 1)) {
        let s = sigma();
        let p = project(&s, &synthesize(&s, &b), K_MAX, 1.0).unwrap();
        for (got, want) in p.coefficients.iter().zip(&b) {
            prop_assert!((got - want).abs() < 1e-9, "{} vs {}", got, want);
        }
        prop_assert!(p.residual < 1e-9);
        for x in [-2.5, 0.0, 0.4, 3.0] {
            let direct: f64 = b.iter().enumerate().map(|(k, c)| c * hermite_value(k, x)).sum();
            prop_assert!((p.reconstruct(x) - direct).abs() < 1e-8 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn odd_data_has_only_odd_modes(b in prop::collection::vec(-2.0..2.0f64, K_MAX + 1), wiggle in 0.0..1.0f64) {
        let s = sigma();
        let mut v = synthesize(&s, &b);
        for (vi, si) in v.iter_mut().zip(&s) {
            *vi += wiggle * si.sin();
            *vi -= b.iter().enumerate().filter(|(k, _)| k % 2 == 0).map(|(k, c)| c * hermite_value(k, *si)).sum::<f64>();
        }
        let p = project(&s, &v, K_MAX, 0.0).unwrap();
        for k in (0..=K_MAX).step_by(2) {
            prop_assert!(p.coefficients[k].abs() < 1e-10, "b_{} = {}", k, p.coefficients[k]);
        }
    }
}
