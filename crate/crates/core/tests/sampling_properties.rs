use qsample::quadrature::{integrate, q_mass_1d, q_mass_2d, QuadratureSpec};
use qsample::sampling::{finite_n_integrand_1d, impulse_weight_1d, impulse_weight_2d, IntegrandFactors};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn integrand_mass_concentrates_near_one() {
    let factors = IntegrandFactors::new(2.0, 1.0, 1000).unwrap();
    let full = |t: f64| finite_n_integrand_1d(&factors, t).unwrap().full_value;
    let near = [0.9, 0.99, 0.995, 0.999, 1.0, 1.001, 1.005, 1.01, 1.1];
    let mut all = vec![0.0];
    all.extend_from_slice(&near);
    all.push(10.0);
    let inside = integrate(full, &near, 1e-14, 1e-10, 2000).unwrap().value;
    let total = integrate(full, &all, 1e-14, 1e-10, 2000).unwrap().value;
    // E[Q(sqrt(2X))] with X ~ Exp(1)
    let exact = 0.5 * (1.0 - 0.5f64.sqrt());
    assert!((total - exact).abs() < 1e-8, "{total} vs {exact}");
    assert!(inside / total >= 0.99, "{}", inside / total);
}

#[test]
fn impulse_weights_match_quadrature() {
    let spec = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..5 {
        let a1 = rng.random_range(0.5..4.0);
        let a2 = rng.random_range(0.5..4.0);
        let w2 = q_mass_2d(a1, a2, &spec).unwrap().value;
        assert!((w2 - impulse_weight_2d(a1, a2).unwrap()).abs() < 1e-5, "({a1}, {a2})");
        let w1 = q_mass_1d(a1, &spec).unwrap().value;
        assert!((w1 - impulse_weight_1d(a1).unwrap()).abs() < 1e-5, "{a1}");
    }
}
