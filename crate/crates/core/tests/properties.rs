//! Randomized structural properties of the spectral layer and the closure:
//! things that must hold for every input, checked over generated ones.

use hob::config::RunConfig;
use hob::constitutive::{
    stress_closure, stress_derived, steady_residuals, MaterialParams, ShearPair,
};
use hob::field::{product, SpectralField};
use hob::grid::Grid;
use hob::harness::{fit_rate, lemma_product_modewise, random_field};
use hob::norms::{anisotropic_norm, weight_phase, NormSpec};
use proptest::prelude::*;

fn small_grid() -> impl Strategy<Value = Grid> {
    (prop_oneof![Just(1usize), Just(2)], 8usize..=16, 8usize..=16).prop_map(|(d, nh, ny)| {
        let nh = nh & !1; // even sizes keep the Nyquist bookkeeping simple
        let ny = ny & !1;
        Grid::new(d, nh.max(8), ny.max(8), 2.0 * std::f64::consts::PI).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transforms_preserve_realness(grid in small_grid(), seed in 0u64..1000) {
        let f = random_field(grid, 1, 2.0, 1.0, 1.0, seed);
        prop_assert!(f.hermitian_residual() < 1e-13);
        let phys = f.to_physical();
        let back = SpectralField::from_physical(grid, 1, &phys);
        prop_assert!(back.sub(&f).max_abs_coeff() < 1e-13);
        prop_assert!(f.derivative(hob::field::Axis::Y, 1).hermitian_residual() < 1e-12);
    }

    #[test]
    fn products_of_real_fields_stay_hermitian(grid in small_grid(), seed in 0u64..1000) {
        let f = random_field(grid, 1, 2.0, 1.0, 1.0, seed);
        let g = random_field(grid, 1, 2.0, 1.0, 1.0, seed + 1);
        let fg = product(&f, &g).unwrap();
        prop_assert!(fg.hermitian_residual() < 1e-12);
    }

    #[test]
    fn plain_norm_matches_physical_rms(grid in small_grid(), seed in 0u64..1000) {
        // Parseval with the forward normalization 1/(N_h^{d_h} N_y):
        // sum |f_hat|^2 = mean of f^2 over collocation points.
        let f = random_field(grid, 1, 2.0, 1.0, 0.7, seed);
        let spectral = anisotropic_norm(&f, &NormSpec::plain(0.0, 0.0)).unwrap();
        let phys = f.to_physical();
        let ms: f64 = phys.iter().map(|v| v * v).sum::<f64>() / phys.len() as f64;
        prop_assert!((spectral - ms.sqrt()).abs() < 1e-12 * (1.0 + spectral));
    }

    #[test]
    fn weight_phase_is_subadditive(r in 0.0f64..2.0, a in 0.0f64..40.0, b in 0.0f64..40.0) {
        // 1 + |xi + eta| <= (1 + |xi|) + (1 + |eta|) transfers to the
        // exponents: the weight of a sum never exceeds the product of
        // weights, which is what the mode-level product bound leans on.
        let combined = weight_phase(r, a + b);
        let split = weight_phase(r, a) + weight_phase(r, b);
        prop_assert!(combined <= split + 1e-12);
    }

    #[test]
    fn modewise_product_bound_holds(seed in 0u64..500, r in 0.0f64..0.3) {
        let grid = Grid::new(1, 16, 16, 2.0 * std::f64::consts::PI).unwrap();
        let f = random_field(grid, 1, 2.0, 1.0, 1.0, seed);
        let g = random_field(grid, 1, 2.0, 1.0, 1.0, seed + 7);
        let rep = lemma_product_modewise(&f, &g, r).unwrap();
        prop_assert!(rep.pass, "violation {:.3e}", rep.max_violation);
    }

    #[test]
    fn closure_solves_the_steady_relations(
        q1 in -3.0f64..3.0,
        q2 in -3.0f64..3.0,
        theta in 0.01f64..0.99,
        b in -1.0f64..1.0,
    ) {
        let p = MaterialParams::new(theta, b).unwrap();
        let q = ShearPair::new(q1, q2);
        let (t13, t23) = stress_closure(q, &p);
        let s = stress_derived(q, t13, t23, &p);
        for r in steady_residuals(q, &s, &p) {
            prop_assert!(r.abs() < 1e-12, "steady residual {r:.3e}");
        }
    }

    #[test]
    fn rate_fit_recovers_exact_power_laws(
        rate in 0.3f64..3.0,
        c in 0.1f64..10.0,
    ) {
        let eps = [0.2, 0.1, 0.05, 0.025];
        let errors: Vec<f64> = eps.iter().map(|e: &f64| c * e.powf(rate)).collect();
        let fit = fit_rate(&eps, &errors).unwrap();
        prop_assert!(!fit.degenerate);
        prop_assert!((fit.rate - rate).abs() < 1e-9);
    }

    #[test]
    fn config_round_trips_through_serialization(
        // TOML integers are signed 64-bit, which bounds the seed domain.
        seed in 0u64..=i64::MAX as u64,
        theta in 0.05f64..0.95,
        b in -0.99f64..0.99,
        dt_exp in 2u32..5,
    ) {
        let dt = 10.0f64.powi(-(dt_exp as i32));
        let text = format!(
            "seed = {seed}\n[grid]\nd_h = 1\nn_h = 16\nn_y = 16\n\
             [params]\ntheta = {theta}\nb = {b}\n\
             [stepping]\ndt = {dt}\nt_final = {}\n",
            dt * 4.0
        );
        let config = RunConfig::from_toml_str(&text).unwrap();
        let echoed = toml::to_string(&config).unwrap();
        let reparsed = RunConfig::from_toml_str(&echoed).unwrap();
        prop_assert_eq!(toml::to_string(&reparsed).unwrap(), echoed);
    }
}
