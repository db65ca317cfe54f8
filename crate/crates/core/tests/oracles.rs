//! Closed-form and independently computed reference values.

use rgg_core::constants::{alpha_closed_form, estimate_alpha, alpha_quadrature, sparse_connectivity_constant};
use rgg_core::geometry::{quasi_grav_energy, scaled_shell_energy, unit_ball_volume, EnergyQuadrature};
use rgg_core::mecke::{uniform_asymptotic_mean, estimate_binomial_mean, MeckeSpec};
use rgg_core::pointprocess::DomainSpec;
use rgg_core::Configuration;
use std::f64::consts::PI;

#[test]
fn alpha_two_is_factorial_ratio() {
    // d! θ_d / θ_{d-1}^d
    for (d, expected) in [(1, 2.0), (2, PI / 2.0), (3, 6.0 * (4.0 * PI / 3.0) / (PI * PI * PI))] {
        let a = alpha_closed_form(d, 2).unwrap();
        assert!((a - expected).abs() < 1e-12, "d = {d}: {a}");
    }
    assert_eq!(alpha_closed_form(1, 5), Some(5.0));
    assert_eq!(alpha_closed_form(4, 1), Some(1.0));
    assert_eq!(alpha_closed_form(3, 3), None);
}

#[test]
fn alpha_three_in_the_plane_by_nested_quadrature() {
    // α_3(2) = (1/2) ∫∫ exp(-g(z1, z2)). g is rotation invariant and
    // 1-homogeneous, so with z1 = ρ1 e_0, z2 = ρ2 e_φ the radial integrals
    // give ∫ ρ1 ρ2 exp(-ρ1 a - ρ2 b) = 2 / (a + b)^3 after (ρ1, ρ2) = t(cos, sin)
    // splitting: ∫_0^{π/2} cos s sin s ∫ t^3 exp(-t h(s)) = 6 ∫ cos s sin s / h^4,
    // where h(s) = g(cos s e_0, sin s e_φ).
    let q = EnergyQuadrature::ExactAngular { nodes: 2048 };
    let (m_phi, m_s) = (256, 256);
    let mut total = 0.0;
    for i in 0..m_phi {
        let phi = (i as f64 + 0.5) * 2.0 * PI / m_phi as f64;
        let mut inner = 0.0;
        for j in 0..m_s {
            let s = (j as f64 + 0.5) * 0.5 * PI / m_s as f64;
            let z = Configuration::from_points(2, &[[s.cos(), 0.0], [s.sin() * phi.cos(), s.sin() * phi.sin()]]).unwrap();
            let h = quasi_grav_energy(&z, q).unwrap();
            inner += s.cos() * s.sin() * 6.0 / h.powi(4);
        }
        total += inner * 0.5 * PI / m_s as f64;
    }
    // outer 2π from the rotation of z1
    let oracle = 0.5 * 2.0 * PI * total * 2.0 * PI / m_phi as f64;
    let mc = estimate_alpha(2, 3, 200_000, alpha_quadrature(2), 9).unwrap();
    assert!(
        (mc.value - oracle).abs() <= 3.0 * mc.std_error + 1e-3 * oracle,
        "{mc:?} vs {oracle}"
    );
}

#[test]
fn single_point_energy_is_sphere_section() {
    for d in 1..=2 {
        let z = Configuration::from_points(d, &[vec![0.6; d]]).unwrap();
        let q = if d == 1 { EnergyQuadrature::ClosedForm } else { EnergyQuadrature::ExactAngular { nodes: 4096 } };
        let norm = 0.6 * (d as f64).sqrt();
        let beta = if d == 1 { 1.0 } else { unit_ball_volume(d - 1).unwrap() };
        let g = quasi_grav_energy(&z, q).unwrap();
        assert!((g - beta * norm).abs() <= 1e-4 * beta * norm, "d = {d}: {g}");
    }
}

#[test]
fn finite_radius_energy_converges_linearly() {
    let z = Configuration::from_points(2, &[[1.0, 0.0], [0.0, 1.0]]).unwrap();
    let g = quasi_grav_energy(&z, EnergyQuadrature::ExactAngular { nodes: 4096 }).unwrap();
    let rs = [0.2, 0.1, 0.05, 0.025];
    let errs: Vec<f64> = rs
        .iter()
        .map(|&r| (scaled_shell_energy(&z, r, 400_000, 1).unwrap().value - g).abs())
        .collect();
    let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!(slope >= 0.8, "slope {slope}, errors {errs:?}");
}

#[test]
fn sparse_pair_constant_is_ball_volume() {
    let e = sparse_connectivity_constant(2, 2, 400_000, 4).unwrap();
    assert!(e.within(PI, 3.0), "{e:?}");
}

#[test]
fn binomial_pair_mean_on_interval() {
    // two points on [0, 1] within r of each other: P = 2r - r^2
    let spec = MeckeSpec {
        n: 2.0,
        r: 0.1,
        k: 2,
        dom: DomainSpec::uniform_cube(1).unwrap(),
        outer_samples: 200_000,
        volume_samples: 1000,
        seed: 3,
    };
    let e = estimate_binomial_mean(&spec).unwrap();
    assert!(e.within(0.2 - 0.01, 3.0), "{e:?}");
}

#[test]
fn predictor_reference_value() {
    let p = uniform_asymptotic_mean(1000.0, 0.05, 1, 2, 1.0, 1.0).unwrap();
    let direct = 1000.0 * (-PI * 2.5).exp();
    assert!((p - direct).abs() < 1e-12 * direct);
}
