//! Closed-form values checked against independent formulas.

use std::f64::consts::{FRAC_PI_3, PI, TAU};
use std::sync::Arc;

use isovar::ambient::{AmbientRef, AmbientSurface, Convexity, Domain, Point};
use isovar::family::TestFamily;
use isovar::field::VectorField;
use isovar::inequality::{certificate_bound, check_linear, check_nonlinear, Verdict};
use isovar::mesh::MeshSurface;
use isovar::varifold::DiscreteVarifold;

fn neck() -> AmbientRef {
    Arc::new(AmbientSurface::revolution("1 + z^2", -2.0, 2.0).unwrap())
}

/// Geodesic curvature of the latitude `z` on the surface `r(z) = 1 + z²`.
fn latitude_kappa(z: f64) -> f64 {
    let (r, dr) = (1.0 + z * z, 2.0 * z);
    dr.abs() / (r * (1.0 + dr * dr).sqrt())
}

#[test]
fn latitude_length_and_curvature() {
    let m = MeshSurface::latitude(neck(), 0.5, 512).unwrap();
    assert!((m.measure() - TAU * 1.25).abs() < 1e-5);
    let expected = m.measure() * latitude_kappa(0.5);
    assert!((m.curvature_mass() - expected).abs() < 1e-3 * expected, "{} vs {expected}", m.curvature_mass());
    let v = DiscreteVarifold::from_mesh(&m).unwrap();
    let lb = v.first_variation_norm_lb(&TestFamily::with_degree(4)).unwrap().value;
    assert!(lb >= 0.5 * expected && lb <= m.curvature_mass() + 1e-6);
}

#[test]
fn waist_is_geodesic_and_latitudes_converge_to_it() {
    let w = MeshSurface::latitude(neck(), 0.0, 512).unwrap();
    assert!((w.measure() - TAU).abs() < 1e-5);
    assert!(w.mean_curvature().max_abs() < 1e-4);
    let mut last = f64::INFINITY;
    for i in [4, 8, 16, 32, 64] {
        let m = MeshSurface::latitude(neck(), 1.0 / i as f64, 256).unwrap();
        let c = m.curvature_mass();
        assert!(c < last);
        last = c;
    }
}

#[test]
fn band_boundary_curvature() {
    let d = Domain::revolution_band(neck(), 1.0).unwrap();
    let reports = d.classify(256).unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert_eq!(r.flag, Convexity::StrictlyConvex);
        assert!((r.min_kappa - 1.0 / 5f64.sqrt()).abs() < 1e-6, "{}", r.min_kappa);
    }
}

#[test]
fn gauss_curvature_of_model_spaces() {
    let p = Point::new(0.0, 0.3, 0.0);
    assert!((neck().gauss_curvature(&p).unwrap() + 2.0).abs() < 1e-12);
    let s = AmbientSurface::round_sphere(2.0).unwrap();
    assert!((s.gauss_curvature(&Point::new(1.0, 0.5, 0.0)).unwrap() - 0.25).abs() < 1e-12);
    let h = AmbientSurface::hyperbolic(-1.0, 3.0).unwrap();
    assert!((h.gauss_curvature(&Point::new(1.2, 0.5, 0.0)).unwrap() + 1.0).abs() < 1e-9);
}

#[test]
fn circle_ratio_is_its_radius() {
    for i in [1, 2, 4, 8] {
        let rho = 1.0 / i as f64;
        let m = MeshSurface::circle([0.0, 0.0], rho, 256).unwrap();
        let r = check_linear(&m, 1.0, None).unwrap();
        assert!((r.ratio - rho).abs() < 1e-3 * rho, "{} vs {rho}", r.ratio);
    }
}

#[test]
fn position_certificate_gives_the_disk_radius() {
    let d = Domain::plane_disk([0.0, 0.0], 2.0).unwrap();
    let c = certificate_bound(&VectorField::position(), "position", &d, 1, 65).unwrap();
    assert!((c.mu - 1.0).abs() < 1e-12);
    assert!((c.bound - 2.0).abs() < 1e-9);
}

#[test]
fn dilation_certificate_on_a_cap() {
    // X = sin θ ∂θ: |X| = sin θ, div along any line = cos θ
    let s: AmbientRef = Arc::new(AmbientSurface::round_sphere(1.0).unwrap());
    let d = Domain::spherical_cap(s.clone(), FRAC_PI_3).unwrap();
    let x = VectorField::chart(&s, &["sin(theta)", "0"]).unwrap();
    let c = certificate_bound(&x, "dilation", &d, 1, 129).unwrap();
    assert!((c.mu - 0.5).abs() < 1e-6, "{}", c.mu);
    assert!((c.bound - 3f64.sqrt()).abs() < 1e-3, "{}", c.bound);
    // latitudes inside the cap never beat the certified constant: tan θ ≤ √3
    for theta in [0.3, 0.7, 1.0, FRAC_PI_3 - 1e-3] {
        let m = MeshSurface::latitude(s.clone(), theta, 512).unwrap();
        let r = check_linear(&m, c.bound, Some(&d)).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!((r.ratio - f64::tan(theta)).abs() < 1e-3 * f64::tan(theta));
    }
}

#[test]
fn flat_nonlinear_check_reduces_to_linear() {
    let m = MeshSurface::unit_disk(4).unwrap();
    let r = check_nonlinear(&m, 1.0, 0.0, None).unwrap();
    assert!(r.alpha.unwrap().is_infinite());
    assert_eq!(r.constant, 2.0);
    assert_eq!(r.verdict, Verdict::Holds);
}

#[test]
fn icosphere_mean_curvature_and_area() {
    let m = MeshSurface::icosphere(5).unwrap();
    let h = m.mean_curvature();
    for v in 0..m.vertices.len() {
        assert!((h.norms()[v] - 2.0).abs() < 2e-2);
    }
    assert!((m.measure() - 4.0 * PI).abs() < 2e-3 * 4.0 * PI);
}
