use std::sync::Arc;

use proptest::prelude::*;

use isovar::ambient::{AmbientRef, AmbientSurface, Point, Vec3};
use isovar::config::Config;
use isovar::field::VectorField;
use isovar::inequality::{check_ball_bound, check_linear, check_nonlinear, Verdict};
use isovar::io::{read_mesh, read_varifold, write_mesh, write_varifold};
use isovar::mesh::MeshSurface;
use isovar::stability::StabilityProblem;
use isovar::varifold::{DiscreteVarifold, Extent, VarifoldAtom};

fn plane() -> AmbientRef {
    Arc::new(AmbientSurface::plane())
}

fn space() -> AmbientRef {
    Arc::new(AmbientSurface::space())
}

/// Star-shaped polygon: radii at equally spaced angles never self-intersect.
fn star(radii: &[f64], cx: f64, cy: f64) -> Vec<Point> {
    let n = radii.len() as f64;
    radii
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let t = std::f64::consts::TAU * i as f64 / n;
            Point::new(cx + r * t.cos(), cy + r * t.sin(), 0.0)
        })
        .collect()
}

fn atoms() -> impl Strategy<Value = (usize, Vec<([f64; 3], [f64; 3], [f64; 3], f64)>)> {
    (1usize..=2).prop_flat_map(|k| {
        let coord = -4.0..4.0f64;
        let atom = (prop::array::uniform3(coord), prop::array::uniform3(-1.0..1.0f64), prop::array::uniform3(-1.0..1.0f64), 0.01..5.0f64);
        (Just(k), prop::collection::vec(atom, 1..30))
    })
}

fn varifold(k: usize, raw: &[([f64; 3], [f64; 3], [f64; 3], f64)]) -> DiscreteVarifold {
    let amb = space();
    let mut out = vec![];
    for (p, d1, d2, w) in raw {
        let dirs: Vec<Vec3> = [d1, d2].iter().take(k).map(|d| Vec3::from(**d)).collect();
        if let Ok(a) = DiscreteVarifold::atom(&amb, Point::from(*p), &dirs, *w) {
            out.push(VarifoldAtom { extent: Extent::Point, ..a });
        }
    }
    DiscreteVarifold::new(amb, k, out).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn position_field_gives_k_times_mass((k, raw) in atoms()) {
        let v = varifold(k, &raw);
        let dv = v.first_variation(&VectorField::position()).unwrap();
        prop_assert!((dv - k as f64 * v.mass()).abs() <= 1e-10 * (1.0 + v.mass()));
    }

    #[test]
    fn constant_fields_have_no_first_variation((k, raw) in atoms(), c in prop::array::uniform3(-3.0..3.0f64)) {
        let v = varifold(k, &raw);
        let dv = v.first_variation(&VectorField::Constant(Vec3::from(c))).unwrap();
        prop_assert!(dv.abs() <= 1e-10 * (1.0 + v.mass()));
    }

    #[test]
    fn mass_is_linear_under_scaling((k, raw) in atoms(), lam in 0.0..10.0f64) {
        let v = varifold(k, &raw);
        prop_assert!((v.scale(lam).unwrap().mass() - lam * v.mass()).abs() <= 1e-12 * (1.0 + lam * v.mass()));
    }

    #[test]
    fn ball_bound_holds_for_every_star_polygon(
        radii in prop::collection::vec(0.2..3.0f64, 3..60),
        cx in -2.0..2.0f64,
        cy in -2.0..2.0f64,
    ) {
        let m = MeshSurface::polyline(plane(), star(&radii, cx, cy), true).unwrap();
        let r = check_ball_bound(&m).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Holds);
        prop_assert!(r.normalized <= 1.0 + 1e-9);
    }

    #[test]
    fn ball_bound_holds_for_open_polylines(pts in prop::collection::vec(prop::array::uniform2(-3.0..3.0f64), 2..30)) {
        let pts: Vec<Point> = pts.iter().map(|p| Point::new(p[0], p[1], 0.0)).collect();
        prop_assume!(pts.windows(2).all(|w| (w[1] - w[0]).norm() > 1e-3));
        let m = MeshSurface::polyline(plane(), pts, false).unwrap();
        let r = check_ball_bound(&m).unwrap();
        prop_assert!(r.normalized <= 1.0 + 1e-9, "{}", r.normalized);
    }

    #[test]
    fn linear_ratio_scales_with_dilations(radii in prop::collection::vec(0.5..2.0f64, 8..40), lam in 0.1..4.0f64) {
        let m = MeshSurface::polyline(plane(), star(&radii, 0.0, 0.0), true).unwrap();
        let s = m.map_vertices(plane(), |p| lam * p).unwrap();
        let a = check_linear(&m, 1.0, None).unwrap();
        let b = check_linear(&s, 1.0, None).unwrap();
        prop_assert!((b.ratio - lam * a.ratio).abs() <= 1e-9 * lam * a.ratio);
    }

    #[test]
    fn nonlinear_verdicts_are_dilation_invariant(level in 1usize..3, r in 0.2..3.0f64, k in 0.01..1.0f64, lam in 0.3..3.0f64) {
        let m = MeshSurface::sphere([0.0, 0.0, 0.0], r, level).unwrap();
        let s = m.map_vertices(space(), |p| lam * p).unwrap();
        let a = check_nonlinear(&m, 1.0, k, None).unwrap();
        let b = check_nonlinear(&s, 1.0, k / lam, None).unwrap();
        prop_assert_eq!(std::mem::discriminant(&a.verdict), std::mem::discriminant(&b.verdict));
    }

    #[test]
    fn measure_is_invariant_under_rigid_motions(
        radii in prop::collection::vec(0.5..2.0f64, 8..40),
        angle in 0.0..6.3f64,
        shift in prop::array::uniform2(-3.0..3.0f64),
    ) {
        let m = MeshSurface::polyline(plane(), star(&radii, 0.0, 0.0), true).unwrap();
        let (c, s) = (angle.cos(), angle.sin());
        let moved = m
            .map_vertices(plane(), |p| Point::new(c * p.x - s * p.y + shift[0], s * p.x + c * p.y + shift[1], 0.0))
            .unwrap();
        prop_assert!((moved.measure() - m.measure()).abs() < 1e-12 * m.measure());
        prop_assert!((moved.curvature_mass() - m.curvature_mass()).abs() < 1e-9);
    }

    #[test]
    fn mesh_text_round_trips_bit_exactly(radii in prop::collection::vec(0.1..5.0f64, 3..50), closed in any::<bool>()) {
        let m = MeshSurface::polyline(plane(), star(&radii, 0.1, -0.3), closed).unwrap();
        let back = read_mesh(&write_mesh(&m), plane()).unwrap();
        prop_assert_eq!(&back.vertices, &m.vertices);
        prop_assert_eq!(back.measure().to_bits(), m.measure().to_bits());
    }

    #[test]
    fn varifold_text_round_trips_bit_exactly((k, raw) in atoms()) {
        let v = varifold(k, &raw);
        let back = read_varifold(&write_varifold(&v), space()).unwrap();
        prop_assert_eq!(back.atoms, v.atoms);
    }

    #[test]
    fn constant_potential_has_eigenvalue_minus_q(length in 0.5..20.0f64, q in -5.0..5.0f64) {
        let sp = StabilityProblem::uniform(length, q, 64).unwrap().smallest();
        prop_assert!((sp.eigenvalue + q).abs() < 1e-8 * (1.0 + q.abs()), "{} vs {}", sp.eigenvalue, -q);
    }

    #[test]
    fn config_serialisation_is_idempotent(c in -0.9..0.9f64, tol in 1e-6..1e-1f64, seed in 0..=i64::MAX as u64) {
        let text = format!(
            "seed = {seed}\n[[scenario]]\nid = \"s\"\nkind = \"stability\"\nambient = {{ family = \"revolution\", profile = \"1 + z^2\", z_lo = -1.0, z_hi = 1.0 }}\nmeshes = [{{ generator = \"latitude\", c = {c:?} }}]\nexpect = {{ eigenvalue = {{ value = 2.0, tol = {tol:?} }} }}\n"
        );
        let once = Config::parse(&text).unwrap().to_toml().unwrap();
        let twice = Config::parse(&once).unwrap().to_toml().unwrap();
        prop_assert_eq!(once, twice);
    }
}
