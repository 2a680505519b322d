//! One pass/fail line per acceptance criterion. Run with `--nocapture` to see
//! the table.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, LN_2, TAU};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isovar::ambient::{AmbientRef, AmbientSurface, Domain, Point, Vec3};
use isovar::config::Config;
use isovar::family::TestFamily;
use isovar::field::VectorField;
use isovar::flow::{monitored_flow, run_dichotomy, FlowConfig, Outcome};
use isovar::inequality::{
    check_ball_bound, check_nonlinear, estimate_constant, nonlinear_constants, ratio_sequence_probe, SamplerConfig,
    Verdict,
};
use isovar::mesh::MeshSurface;
use isovar::runner::{convergence_table, run_config, RunOptions};
use isovar::stability::StabilityProblem;
use isovar::varifold::{DiscreteVarifold, Extent, VarifoldAtom};
use isovar::Result;

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    limit: Duration,
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn band_ambient() -> AmbientRef {
    Arc::new(AmbientSurface::revolution("1 + z^2", -1.5, 1.5).unwrap())
}

fn sphere_ambient() -> AmbientRef {
    Arc::new(AmbientSurface::round_sphere(1.0).unwrap())
}

fn rel(x: f64, target: f64) -> f64 {
    ((x - target) / target).abs()
}

fn ball_bound() -> Result<(bool, String)> {
    let cases = [
        ("circle", MeshSurface::circle_level(6)?, 1e-3),
        ("disk", MeshSurface::unit_disk(6)?, 1e-3),
        ("sphere", MeshSurface::icosphere(5)?, 2e-2),
    ];
    let mut pass = true;
    let mut parts = vec![];
    for (name, m, tol) in cases {
        let r = check_ball_bound(&m)?;
        let ok = (r.normalized - 1.0).abs() <= tol && r.verdict == Verdict::Holds;
        pass &= ok;
        parts.push(format!("{name} {:.6}", r.normalized));
    }
    Ok((pass, parts.join(", ")))
}

fn divergence_orders() -> Result<(bool, String)> {
    let cfg = Config::load(&configs().join("acceptance.toml"))?;
    let mut pass = true;
    let mut parts = vec![];
    for s in cfg.scenarios.iter().filter(|s| s.id.starts_with("divergence-")) {
        let t = convergence_table(s, &configs())?;
        let (lo, hi) = (t.rows.first().unwrap().level, t.rows.last().unwrap().level);
        let ok = t.exact || t.min_order.is_some_and(|o| o >= 0.9);
        pass &= ok;
        match t.min_order {
            Some(o) if !t.exact => parts.push(format!("{} L{lo}-{hi} order {o:.3}", s.id)),
            _ => parts.push(format!("{} exact", s.id)),
        }
    }
    Ok((pass, parts.join(", ")))
}

fn two_sided() -> Result<(bool, String)> {
    let plane = Arc::new(AmbientSurface::plane());
    let suite = vec![
        ("circle", MeshSurface::circle([0.0, 0.0], 1.0, 128)?),
        ("segment", MeshSurface::segment(plane, [0.0, 0.0], [1.0, 0.0], 64)?),
        ("latitude", MeshSurface::latitude(band_ambient(), 0.5, 128)?),
        ("disk", MeshSurface::unit_disk(3)?),
        ("sphere", MeshSurface::icosphere(2)?),
    ];
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for (name, m) in &suite {
        let v = DiscreteVarifold::from_mesh(m)?;
        let geometric = m.boundary_measure() + m.curvature_mass();
        for d in [2, 4, 6] {
            let lb = v.first_variation_norm_lb(&TestFamily::with_degree(d))?.value;
            if lb > geometric + 1e-6 {
                pass = false;
                println!("    {name} degree {d}: lower bound {lb} exceeds {geometric}");
            }
            if d == 6 {
                let gap = (geometric - lb) / geometric;
                worst = worst.max(gap);
            }
        }
    }
    pass &= worst < 0.05;
    Ok((pass, format!("{} meshes, worst degree-6 gap {:.3}%", suite.len(), 100.0 * worst)))
}

fn random_varifold(rng: &mut ChaCha8Rng, k: usize) -> Result<DiscreteVarifold> {
    let (amb, dim) = if k == 1 && rng.gen_bool(0.5) {
        (Arc::new(AmbientSurface::plane()), 2)
    } else {
        (Arc::new(AmbientSurface::space()), 3)
    };
    let n = rng.gen_range(1..40);
    let mut atoms = vec![];
    for _ in 0..n {
        let mut p = Point::zeros();
        let mut dirs = vec![];
        for i in 0..dim {
            p[i] = rng.gen_range(-5.0..5.0);
        }
        for _ in 0..k {
            let mut d = Vec3::zeros();
            for i in 0..dim {
                d[i] = rng.gen_range(-1.0..1.0);
            }
            dirs.push(d);
        }
        let a = match DiscreteVarifold::atom(&amb, p, &dirs, rng.gen_range(0.01..3.0)) {
            Ok(a) => a,
            Err(_) => continue,
        };
        atoms.push(VarifoldAtom { extent: Extent::Point, ..a });
    }
    DiscreteVarifold::new(amb, k, atoms)
}

fn position_identity() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let k = 1 + i % 2;
        let v = random_varifold(&mut rng, k)?;
        let dv = v.first_variation(&VectorField::position())?;
        worst = worst.max((dv - k as f64 * v.mass()).abs());
    }
    Ok((worst <= 1e-10, format!("100 varifolds, max |δV(x) − k·mass| = {worst:.2e}")))
}

fn band_converges() -> Result<(bool, String)> {
    let d = Domain::revolution_band(band_ambient(), 1.0)?;
    let out = run_dichotomy(&d, &FlowConfig::default())?;
    match out.outcome {
        Outcome::Converged { curve_lengths, residual, stability_eigenvalue, curve_count, coincident_pairs, .. } => {
            let len_ok = curve_lengths.iter().all(|l| rel(*l, TAU) <= 0.01);
            let pass = len_ok && residual < 1e-3 && (stability_eigenvalue - 2.0).abs() <= 1e-2;
            let lens: Vec<String> = curve_lengths.iter().map(|l| format!("{l:.5}")).collect();
            Ok((
                pass,
                format!(
                    "converged, {curve_count} curves ({} coincident) lengths [{}], residual {residual:.2e}, eigenvalue {stability_eigenvalue:.6}",
                    coincident_pairs.len(),
                    lens.join(", ")
                ),
            ))
        }
        Outcome::Extinct { t_ext } => Ok((false, format!("went extinct at {t_ext}"))),
    }
}

fn extinction_times() -> Result<(bool, String)> {
    let cfg = FlowConfig::default();
    let disk = run_dichotomy(&Domain::plane_disk([0.0, 0.0], 1.0)?, &cfg)?;
    let cap = run_dichotomy(&Domain::spherical_cap(sphere_ambient(), FRAC_PI_3)?, &cfg)?;
    let t = |o: &Outcome| match o {
        Outcome::Extinct { t_ext } => Some(*t_ext),
        _ => None,
    };
    let (td, tc) = (t(&disk.outcome), t(&cap.outcome));
    let pass = td.is_some_and(|x| rel(x, 0.5) <= 0.02) && tc.is_some_and(|x| rel(x, LN_2) <= 0.02);
    Ok((pass, format!("disk t_ext {td:?} (0.5), cap t_ext {tc:?} (ln 2 = {LN_2:.5})")))
}

fn certificates() -> Result<(bool, String)> {
    let disk = estimate_constant(&Domain::plane_disk([0.0, 0.0], 1.0)?, 1, &SamplerConfig::default())?;
    let cap_cfg = SamplerConfig { fields: vec![vec!["sin(theta)".into(), "0".into()]], ..Default::default() };
    let cap = estimate_constant(&Domain::spherical_cap(sphere_ambient(), FRAC_PI_3)?, 1, &cap_cfg)?;
    let band = estimate_constant(&Domain::revolution_band(band_ambient(), 1.0)?, 1, &SamplerConfig::default())?;
    let finite_ok = |e: &isovar::inequality::ConstantEstimate| e.upper.is_some_and(|u| u.is_finite() && e.lower <= u + 1e-9);
    let band_ok = band.certificates_tried > 0 && band.certificates_valid == 0 && band.diverges;
    let pass = finite_ok(&disk) && finite_ok(&cap) && band_ok;
    Ok((
        pass,
        format!(
            "disk {:.4} ≤ {:?}, cap {:.4} ≤ {:?}, band {}/{} certificates valid, witness ratio {}",
            disk.lower,
            disk.upper,
            cap.lower,
            cap.upper,
            band.certificates_valid,
            band.certificates_tried,
            if band.diverges { "> 1e6" } else { "bounded" }
        ),
    ))
}

fn compactness() -> Result<(bool, String)> {
    let amb = band_ambient();
    let vs = (2..=64)
        .step_by(2)
        .map(|i| DiscreteVarifold::from_mesh(&MeshSurface::latitude(amb.clone(), 1.0 / i as f64, 256)?))
        .collect::<Result<Vec<_>>>()?;
    let fam = TestFamily::default();
    let t = ratio_sequence_probe(&vs, &fam, 1)?;
    let waist = DiscreteVarifold::from_mesh(&MeshSurface::latitude(amb, 0.0, 256)?)?;
    let limit_residual = waist.scale(1.0 / waist.mass())?.first_variation_norm_lb(&fam)?.value;
    let last = t.rows.last().unwrap();
    let mass_gap = rel(last.mass, TAU);
    let limit_mass_gap = rel(waist.mass(), TAU);
    let lsc = limit_residual <= last.residual + 1e-3;
    let pass = t.residuals_decreasing && mass_gap < 1e-3 && limit_mass_gap < 1e-3 && limit_residual < 1e-3 && lsc;
    Ok((
        pass,
        format!(
            "mass(V_64) rel gap {mass_gap:.2e}, residuals decreasing {} ({:.3e} → {:.3e}), limit residual {limit_residual:.2e}",
            t.residuals_decreasing,
            t.rows[0].residual,
            last.residual
        ),
    ))
}

fn avoidance() -> Result<(bool, String)> {
    let amb = band_ambient();
    let d = Domain::revolution_band(amb.clone(), 1.0)?;
    let waist = DiscreteVarifold::from_mesh(&MeshSurface::latitude(amb, 0.0, 256)?)?.spatial_support(1e-9)?;
    let (rep, _) = monitored_flow(&d, &waist, 5.0, &FlowConfig::default())?;
    let all_positive = rep.series.iter().all(|(_, d)| *d > 0.0);
    Ok((
        rep.pass && all_positive,
        format!("{} samples to T = 5, minimum distance {:.3e}", rep.series.len(), rep.minimum),
    ))
}

fn stability_signs() -> Result<(bool, String)> {
    let gc = MeshSurface::latitude(sphere_ambient(), FRAC_PI_2, 512)?;
    let waist = MeshSurface::latitude(band_ambient(), 0.0, 512)?;
    let pts = |m: &MeshSurface| m.vertices.clone();
    let e1 = StabilityProblem::from_curve(&gc.ambient, &pts(&gc), 256)?.smallest();
    let e2 = StabilityProblem::from_curve(&waist.ambient, &pts(&waist), 256)?.smallest();
    let pass = (e1.eigenvalue + 1.0).abs() <= 1e-3 && !e1.stable && (e2.eigenvalue - 2.0).abs() <= 1e-2 && e2.stable;
    Ok((pass, format!("great circle {:.6}, waist {:.6}", e1.eigenvalue, e2.eigenvalue)))
}

fn nonlinear() -> Result<(bool, String)> {
    let mut pass = true;
    for (c, kb, k) in [(1.0, 0.1, 2usize), (0.7, 2.0, 1), (1.3, 0.25, 2)] {
        let (alpha, c2) = nonlinear_constants(c, kb, k)?;
        pass &= rel(alpha, (2.0 * c * kb).powi(-(k as i32))) < 1e-14 && c2 == 2.0 * c;
    }
    let (alpha0, _) = nonlinear_constants(1.0, 0.0, 2)?;
    pass &= alpha0.is_infinite();
    let space: AmbientRef = Arc::new(AmbientSurface::space());
    let suite = [
        MeshSurface::unit_disk(4)?,
        MeshSurface::icosphere(3)?,
        MeshSurface::sphere([0.2, 0.0, -0.1], 0.3, 3)?,
        MeshSurface::sphere([0.0, 0.0, 0.0], 2.0, 3)?,
    ];
    let (c, kb) = (1.0, 0.1);
    for m in &suite {
        let mut vs = vec![];
        for lam in [0.5, 1.0, 2.0] {
            let scaled = m.map_vertices(space.clone(), |p| lam * p)?;
            let r = check_nonlinear(&scaled, c, kb / lam, None)?;
            vs.push(std::mem::discriminant(&r.verdict));
            pass &= r.alpha.is_some_and(|a| rel(a, (2.0 * c * kb / lam).powi(-2)) < 1e-12) && r.constant == 2.0 * c;
        }
        pass &= vs.windows(2).all(|w| w[0] == w[1]);
    }
    Ok((pass, format!("formulas checked, {} meshes × 3 dilations invariant", suite.len())))
}

fn determinism() -> Result<(bool, String)> {
    let path = configs().join("acceptance.toml");
    let text = std::fs::read_to_string(&path)?;
    let cfg = Config::parse(&text)?;
    let dirs = [tempfile::tempdir()?, tempfile::tempdir()?];
    let mut files = vec![];
    for d in &dirs {
        let report = run_config(&cfg, &text, &configs(), &RunOptions::default());
        report.write(d.path())?;
        let mut names: Vec<_> = std::fs::read_dir(d.path())?.map(|e| e.unwrap().file_name()).collect();
        names.sort();
        files.push(names);
    }
    let mut identical = files[0] == files[1];
    for name in &files[0] {
        let a = std::fs::read(dirs[0].path().join(name))?;
        let b = std::fs::read(dirs[1].path().join(name))?;
        identical &= a == b;
    }
    Ok((identical, format!("{} report files compared", files[0].len())))
}

type Criterion = (usize, &'static str, u64, fn() -> Result<(bool, String)>);

#[test]
fn acceptance() {
    let criteria: [Criterion; 12] = [
        (1, "ball-bound equalities", 5, ball_bound),
        (2, "divergence identity convergence", 10, divergence_orders),
        (3, "two-sided first-variation bound", 60, two_sided),
        (4, "position-field identity", 1, position_identity),
        (5, "band converges to the waist", 60, band_converges),
        (6, "disk and cap extinction times", 30, extinction_times),
        (7, "certificates and divergent witness", 60, certificates),
        (8, "latitude compactness diagnostics", 30, compactness),
        (9, "avoidance of the waist", 30, avoidance),
        (10, "stability eigenvalue signs", 5, stability_signs),
        (11, "nonlinear constants and dilations", 10, nonlinear),
        (12, "byte-identical reruns", 300, determinism),
    ];
    let mut lines = vec![];
    for (id, name, secs, f) in criteria {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        let line = Line { id, name, pass, detail, elapsed: start.elapsed(), limit: Duration::from_secs(secs) };
        let within = line.elapsed <= line.limit;
        println!(
            "criterion {:>2} {:<36} {}  {} [{:.2} s / {} s]",
            line.id,
            line.name,
            if line.pass && within { "PASS" } else { "FAIL" },
            line.detail,
            line.elapsed.as_secs_f64(),
            secs
        );
        lines.push((line, within));
    }
    let failed: Vec<usize> = lines.iter().filter(|(l, w)| !(l.pass && *w)).map(|(l, _)| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
