use std::sync::Arc;

use gaam_core::dynamics::{perturbation_growth, simulate, tangent_simulate, SimulationConfig};
use gaam_core::norms::{sobolev_norm, SobolevVariant};
use gaam_core::operators::heat_semigroup;
use gaam_core::random::{random_divfree_field, AmplitudeSpectrum};
use gaam_core::stationary::{picard_solve, regularity_gain_diagnostic, stationary_residual, PicardOptions};
use gaam_core::{ForcingField, ModelParams, SpectralGrid, VectorField};

fn setup() -> (ModelParams, Arc<SpectralGrid>, VectorField, ForcingField) {
    let p = ModelParams { alpha: 1.5, beta: 0.8, gamma: 0.9, delta: 0.6, nu: 0.7, dim: 2, modes_per_axis: 16, ..Default::default() };
    let g = p.build_grid().unwrap();
    let u0 = random_divfree_field(11, &AmplitudeSpectrum { amplitude: 1.0, exponent: -1.5 }, &g);
    let f = random_divfree_field(12, &AmplitudeSpectrum { amplitude: 0.3, exponent: -1.5 }, &g);
    (p, g, u0, ForcingField::new(f).unwrap())
}

fn dist(a: &VectorField, b: &VectorField, beta: f64) -> f64 {
    sobolev_norm(&a.sub(b).unwrap(), 0.5 * beta, SobolevVariant::Inhomogeneous)
}

#[test]
fn step_halving_shows_second_order() {
    let (p, _, u0, f) = setup();
    let run = |dt: f64| {
        let cfg = SimulationConfig { dt, t_end: 0.5, record_stride: 1000, ..Default::default() };
        simulate(&u0, &f, &p, &cfg, None).unwrap().final_state
    };
    let reference = run(0.5 / 1024.0);
    let errs: Vec<f64> = [0.5 / 32.0, 0.5 / 64.0, 0.5 / 128.0].iter().map(|&dt| dist(&run(dt), &reference, p.beta)).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.8..2.3).contains(&order), "observed order {order} from {errs:?}");
    }
}

#[test]
fn tangent_about_rest_is_the_linear_propagator() {
    let (p, g, _, _) = setup();
    let zero = VectorField::zeros(&g).certify_divergence_free().unwrap();
    let cfg = SimulationConfig { dt: 0.01, t_end: 0.7, record_stride: 10, store_states: true, ..Default::default() };
    let base = simulate(&zero, &ForcingField::zero(&g), &p, &cfg, None).unwrap();
    let v0 = random_divfree_field(3, &AmplitudeSpectrum::default(), &g);
    let tan = tangent_simulate(&base, &v0, &p, &cfg).unwrap();
    let exact = heat_semigroup(&v0, &p, tan.final_time);
    let rel = dist(&tan.final_state, &exact, p.beta) / dist(&exact, &zero, p.beta);
    assert!(rel < 1e-12, "relative error {rel}");
}

#[test]
fn tangent_matches_finite_difference() {
    let (p, g, u0, f) = setup();
    let cfg = SimulationConfig { dt: 0.01, t_end: 0.3, record_stride: 10, store_states: true, ..Default::default() };
    let base = simulate(&u0, &f, &p, &cfg, None).unwrap();
    let v0 = random_divfree_field(5, &AmplitudeSpectrum::default(), &g);
    let tan = tangent_simulate(&base, &v0, &p, &cfg).unwrap();
    let h = 1e-5;
    let bumped = simulate(&u0.axpy(h, &v0).unwrap(), &f, &p, &SimulationConfig { store_states: false, ..cfg }, None).unwrap();
    let fd = bumped.final_state.sub(&base.final_state).unwrap().scale(1.0 / h);
    let rel = dist(&fd, &tan.final_state, p.beta) / dist(&tan.final_state, &VectorField::zeros(&g), p.beta);
    assert!(rel < 1e-4, "finite difference disagrees by {rel}");
}

#[test]
fn perturbation_growth_is_finite_and_scale_free() {
    let (p, g, u0, f) = setup();
    let cfg = SimulationConfig { dt: 0.01, t_end: 1.0, record_stride: 100, ..Default::default() };
    let w = random_divfree_field(8, &AmplitudeSpectrum::default(), &g);
    let small = perturbation_growth(&u0, &w.scale(1e-6), &f, &p, &cfg).unwrap();
    let smaller = perturbation_growth(&u0, &w.scale(1e-7), &f, &p, &cfg).unwrap();
    assert!(small.sup_ratio.is_finite() && small.sup_ratio >= 1.0 - 1e-9);
    assert!(small.measured_k.is_finite() && small.measured_k >= 0.0);
    // linear regime: the ratio no longer depends on the perturbation size
    assert!((small.sup_ratio - smaller.sup_ratio).abs() < 1e-4 * small.sup_ratio);
}

#[test]
fn stationary_state_does_not_drift() {
    let (p, _, _, f) = setup();
    let sol = picard_solve(&f, &p, &PicardOptions::default()).unwrap();
    assert!(stationary_residual(&sol.field, &f, &p).unwrap() < 1e-10);
    let cfg = SimulationConfig { dt: 0.01, t_end: 2.0, record_stride: 50, ..Default::default() };
    let rec = simulate(&sol.field, &f, &p, &cfg, None).unwrap();
    let drift = dist(&rec.final_state, &sol.field, p.beta) / dist(&sol.field, &VectorField::zeros(sol.field.grid()), p.beta);
    assert!(drift < 1e-10, "drift {drift}");
}

#[test]
fn regularity_gain_settles_under_refinement() {
    let (p, g, _, f) = setup();
    let fine_p = ModelParams { modes_per_axis: 32, ..p };
    let fine_g = fine_p.build_grid().unwrap();
    let coarse = picard_solve(&f, &p, &PicardOptions::default()).unwrap();
    let fine_f = ForcingField::new(f.field().resample(&fine_g).unwrap()).unwrap();
    let fine = picard_solve(&fine_f, &fine_p, &PicardOptions::default()).unwrap();
    let a = regularity_gain_diagnostic(&coarse.field, &f, &p);
    let b = regularity_gain_diagnostic(&fine.field, &fine_f, &fine_p);
    assert!(b.tail_fraction < a.tail_fraction, "tail {} -> {}", a.tail_fraction, b.tail_fraction);
    assert!((a.ratio - b.ratio).abs() < 1e-2 * b.ratio, "ratio {} -> {}", a.ratio, b.ratio);
    assert!(g.max_index() < fine_g.max_index());
}
