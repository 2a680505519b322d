//! Curve-shortening flow of closed polylines in Riemannian surfaces, the
//! extinction/convergence dichotomy, avoidance monitoring and tube flows.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::ambient::{left_normal, polyline_self_intersects, segments_cross, AmbientRef, AmbientSurface, Chart, Convexity, Domain, Point, Vec3};
use crate::error::{Error, Result};
use crate::mesh::{chord_length, polyline_curvature, Cells, MeshSurface};
use crate::numerics::{decimal, golden_min};
use crate::stability::StabilityProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    /// CFL factor: `dt = β·h²/max(1, max|H|·h)` with `h` the minimum spacing.
    pub beta: f64,
    /// Speed of the outward perturbation in `H − δν`.
    pub delta: f64,
    /// Tube half-width for the perturbed variant.
    pub epsilon: f64,
    /// Vertices per boundary component at the start.
    pub vertices: usize,
    /// Split edges longer than this multiple of the mean spacing.
    pub split_ratio: f64,
    /// Collapse edges shorter than this multiple of the mean spacing.
    pub collapse_ratio: f64,
    /// Extinction when length drops below this fraction of the initial length.
    pub tol_len: f64,
    /// Plateau: relative length change per window.
    pub tol_stall: f64,
    pub tol_h: f64,
    /// Steps per plateau window.
    pub window: usize,
    pub max_time: f64,
    pub max_steps: usize,
    pub max_halvings: usize,
    /// Trajectory record every this many steps.
    pub log_every: usize,
    /// Stability grid size.
    pub grid: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            beta: 0.2,
            delta: 0.0,
            epsilon: 0.1,
            vertices: 128,
            split_ratio: 2.0,
            collapse_ratio: 0.5,
            tol_len: 1e-3,
            tol_stall: 1e-6,
            tol_h: 1e-4,
            window: 100,
            max_time: 50.0,
            max_steps: 2_000_000,
            max_halvings: 10,
            log_every: 100,
            grid: 128,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(m.into()));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad("delta must be nonnegative");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.vertices < 6 {
            return bad("at least 6 vertices per curve");
        }
        if !(self.split_ratio > 1.0 && self.collapse_ratio > 0.0 && self.collapse_ratio < 1.0) {
            return bad("remesh ratios must satisfy split > 1 > collapse > 0");
        }
        if !(self.tol_len > 0.0 && self.tol_len < 1.0) {
            return bad("tol_len must lie in (0, 1)");
        }
        if !(self.tol_stall > 0.0 && self.tol_h > 0.0) {
            return bad("stall tolerances must be positive");
        }
        if self.window == 0 || self.log_every == 0 {
            return bad("window and log_every must be positive");
        }
        if !(self.max_time > 0.0) {
            return bad("max_time must be positive");
        }
        if self.grid < crate::stability::MIN_GRID {
            return bad("stability grid must be at least 64");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HistoryRow {
    #[serde(serialize_with = "decimal::serialize")]
    pub t: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub length: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub max_h: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub min_spacing: f64,
}

#[derive(Debug, Clone)]
pub struct Curve {
    pub points: Vec<Point>,
    /// `+1` when the enclosed region lies to the left of the ordering.
    pub region_sign: f64,
    pub initial_length: f64,
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub ambient: AmbientRef,
    pub t: f64,
    pub curves: Vec<Curve>,
    pub dt: f64,
    pub max_speed: f64,
    pub steps: usize,
    pub history: VecDeque<HistoryRow>,
    pub history_cap: usize,
    pub rejections: usize,
    pub nesting_violations: usize,
    /// Time at which the last curve disappeared.
    pub extinct_at: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct CurveGeometry {
    length: f64,
    max_h: f64,
    min_spacing: f64,
}

fn curve_geometry(amb: &AmbientSurface, pts: &[Point]) -> (Vec<Option<Vec3>>, CurveGeometry) {
    let (h, _) = polyline_curvature(amb, pts, true);
    let n = pts.len();
    let seg: Vec<f64> = (0..n).map(|i| chord_length(amb, &pts[i], &pts[(i + 1) % n])).collect();
    let max_h = pts
        .iter()
        .zip(&h)
        .map(|(p, v)| v.map_or(0.0, |v| amb.norm(p, &v)))
        .fold(0.0, f64::max);
    let geo = CurveGeometry {
        length: seg.iter().sum(),
        max_h,
        min_spacing: seg.iter().cloned().fold(f64::INFINITY, f64::min),
    };
    (h, geo)
}

/// Proper crossing between two distinct closed polylines.
pub fn polylines_cross(chart: &Chart, a: &[Point], b: &[Point]) -> bool {
    let segs = |pts: &[Point]| -> Vec<([f64; 2], [f64; 2])> {
        let n = pts.len();
        (0..n)
            .map(|i| {
                let p = pts[i];
                let d = chart.delta(&p, &pts[(i + 1) % n]);
                ([p[0], p[1]], [p[0] + d[0], p[1] + d[1]])
            })
            .collect()
    };
    let (sa, sb) = (segs(a), segs(b));
    // coarse rejection on the non-periodic axes
    for ax in 0..2 {
        if chart.periodic[ax] {
            continue;
        }
        let range = |s: &[([f64; 2], [f64; 2])]| {
            s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |r, (p, q)| (r.0.min(p[ax]).min(q[ax]), r.1.max(p[ax]).max(q[ax])))
        };
        let (ra, rb) = (range(&sa), range(&sb));
        if ra.1 < rb.0 || rb.1 < ra.0 {
            return false;
        }
    }
    let mut shifts = vec![[0.0, 0.0]];
    for ax in 0..2 {
        if let Some(per) = chart.period(ax) {
            let cur = shifts.clone();
            for s in cur {
                let mut up = s;
                up[ax] += per;
                let mut dn = s;
                dn[ax] -= per;
                shifts.push(up);
                shifts.push(dn);
            }
        }
    }
    for (p, q) in &sa {
        for sh in &shifts {
            let p2 = [p[0] + sh[0], p[1] + sh[1]];
            let q2 = [q[0] + sh[0], q[1] + sh[1]];
            if sb.iter().any(|(c, d)| segments_cross(p2, q2, *c, *d)) {
                return true;
            }
        }
    }
    false
}

impl FlowState {
    /// Flow state from closed chart polylines with their region sides.
    pub fn new(ambient: AmbientRef, curves: Vec<(Vec<Point>, f64)>) -> Result<Self> {
        if ambient.dim() != 2 {
            return Err(Error::UnsupportedDimension("curve flows need a surface ambient".into()));
        }
        let mut out = Vec::new();
        for (pts, sign) in curves {
            if pts.len() < 6 {
                return Err(Error::InvalidMesh("flow curves need at least 6 vertices".into()));
            }
            for p in &pts {
                ambient.chart.check(p)?;
            }
            if polyline_self_intersects(&ambient.chart, &pts, true) {
                return Err(Error::Topology("initial curve self-intersects".into()));
            }
            let initial_length = curve_geometry(&ambient, &pts).1.length;
            out.push(Curve { points: pts, region_sign: sign.signum(), initial_length });
        }
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                if polylines_cross(&ambient.chart, &out[i].points, &out[j].points) {
                    return Err(Error::Topology(format!("initial curves {i} and {j} cross")));
                }
            }
        }
        let mut s = FlowState {
            ambient,
            t: 0.0,
            curves: out,
            dt: 0.0,
            max_speed: 0.0,
            steps: 0,
            history: VecDeque::new(),
            history_cap: 4096,
            rejections: 0,
            nesting_violations: 0,
            extinct_at: None,
        };
        let row = s.snapshot_row();
        s.history.push_back(row);
        Ok(s)
    }

    /// The boundary components of `domain`, `n` vertices each.
    pub fn from_domain(domain: &Domain, n: usize) -> Result<Self> {
        let reports = domain.classify(256.max(n))?;
        let curves = reports.iter().map(|r| (domain.sample_boundary(r.component, n), r.orientation)).collect();
        Self::new(domain.ambient.clone(), curves)
    }

    pub fn total_length(&self) -> f64 {
        self.curves.iter().map(|c| curve_geometry(&self.ambient, &c.points).1.length).sum()
    }

    pub fn is_extinct(&self) -> bool {
        self.curves.is_empty()
    }

    fn snapshot_row(&self) -> HistoryRow {
        let mut row = HistoryRow { t: self.t, length: 0.0, max_h: 0.0, min_spacing: f64::INFINITY };
        for c in &self.curves {
            let g = curve_geometry(&self.ambient, &c.points).1;
            row.length += g.length;
            row.max_h = row.max_h.max(g.max_h);
            row.min_spacing = row.min_spacing.min(g.min_spacing);
        }
        if self.curves.is_empty() {
            row.min_spacing = 0.0;
        }
        row
    }

    /// Outward unit normal of the enclosed region at vertex `i` of curve `c`.
    fn outward_normal(&self, c: &Curve, i: usize) -> Vec3 {
        let n = c.points.len();
        let amb = &*self.ambient;
        let p = &c.points[i];
        let t = amb.chart.delta(&c.points[(i + n - 1) % n], &c.points[(i + 1) % n]);
        -c.region_sign * left_normal(amb, p, &t)
    }

    /// Advance by one forward-Euler step of `H − δν`.
    pub fn step(&mut self, cfg: &FlowConfig) -> Result<()> {
        if self.curves.is_empty() {
            return Ok(());
        }
        let amb = self.ambient.clone();
        let mut vel: Vec<Vec<Vec3>> = Vec::with_capacity(self.curves.len());
        let mut max_h: f64 = 0.0;
        let mut min_h = f64::INFINITY;
        for c in &self.curves {
            let (h, geo) = curve_geometry(&amb, &c.points);
            max_h = max_h.max(geo.max_h);
            min_h = min_h.min(geo.min_spacing);
            let v: Vec<Vec3> = h
                .iter()
                .enumerate()
                .map(|(i, hv)| hv.unwrap_or_else(Vec3::zeros) - cfg.delta * self.outward_normal(c, i))
                .collect();
            vel.push(v);
        }
        let base_dt = cfg.beta * min_h * min_h / (max_h * min_h).max(1.0);
        if !(base_dt > 0.0) || !base_dt.is_finite() {
            return Err(Error::Numeric(format!("invalid time step {base_dt}")));
        }
        let mut dt = base_dt;
        for attempt in 0..=cfg.max_halvings {
            let moved: Vec<Vec<Point>> = self
                .curves
                .iter()
                .zip(&vel)
                .map(|(c, v)| c.points.iter().zip(v).map(|(p, d)| amb.chart.wrap(&(p + dt * d))).collect())
                .collect();
            let mut ok = moved.iter().all(|pts| pts.iter().all(|p| amb.chart.contains(p)));
            ok = ok && moved.iter().all(|pts| !polyline_self_intersects(&amb.chart, pts, true));
            if ok {
                'pairs: for i in 0..moved.len() {
                    for j in i + 1..moved.len() {
                        if polylines_cross(&amb.chart, &moved[i], &moved[j]) {
                            ok = false;
                            break 'pairs;
                        }
                    }
                }
            }
            if !ok {
                self.rejections += 1;
                if attempt == cfg.max_halvings {
                    return Err(Error::Topology(format!(
                        "step at t = {} rejected after {} halvings (self-intersection or chart exit)",
                        self.t, cfg.max_halvings
                    )));
                }
                dt *= 0.5;
                continue;
            }
            // sampled nesting: no vertex of a shrinking front moves outward
            if cfg.delta == 0.0 {
                for (c, v) in self.curves.iter().zip(&vel) {
                    for (i, d) in v.iter().enumerate() {
                        let nu = self.outward_normal(c, i);
                        let p = &c.points[i];
                        if amb.inner(p, d, &nu) > 1e-9 * amb.norm(p, d).max(1e-300) && amb.norm(p, d) > 1e-12 {
                            self.nesting_violations += 1;
                        }
                    }
                }
            }
            self.max_speed = vel
                .iter()
                .zip(&self.curves)
                .flat_map(|(v, c)| v.iter().zip(&c.points).map(|(d, p)| amb.norm(p, d)))
                .fold(0.0, f64::max);
            for (c, pts) in self.curves.iter_mut().zip(moved) {
                c.points = pts;
            }
            break;
        }
        self.dt = dt;
        self.t += dt;
        self.steps += 1;
        self.remesh(cfg);
        let t = self.t;
        let amb = self.ambient.clone();
        self.curves.retain(|c| {
            c.points.len() >= 6 && curve_geometry(&amb, &c.points).1.length >= cfg.tol_len * c.initial_length
        });
        if self.curves.is_empty() {
            self.extinct_at = Some(t);
        }
        let row = self.snapshot_row();
        if self.history.len() == self.history_cap {
            self.history.pop_front();
        }
        self.history.push_back(row);
        Ok(())
    }

    fn remesh(&mut self, cfg: &FlowConfig) {
        let amb = self.ambient.clone();
        for c in &mut self.curves {
            let n = c.points.len();
            let seg: Vec<f64> = (0..n).map(|i| chord_length(&amb, &c.points[i], &c.points[(i + 1) % n])).collect();
            let mean = seg.iter().sum::<f64>() / n as f64;
            if seg.iter().all(|&l| l <= cfg.split_ratio * mean && l >= cfg.collapse_ratio * mean) {
                continue;
            }
            let mut out: Vec<Point> = Vec::with_capacity(n + 8);
            let mut removed = 0;
            let mut i = 0;
            while i < n {
                let p = c.points[i];
                let l = seg[i];
                if l < cfg.collapse_ratio * mean && i + 1 < n && n - removed > 6 {
                    removed += 1;
                    out.push(amb.chart.midpoint(&p, &c.points[i + 1]));
                    i += 2;
                    continue;
                }
                out.push(p);
                if l > cfg.split_ratio * mean {
                    let q = c.points[(i + 1) % n];
                    let pieces = (l / mean).ceil() as usize;
                    let d = amb.chart.delta(&p, &q);
                    for k in 1..pieces {
                        out.push(amb.chart.wrap(&(p + d * (k as f64 / pieces as f64))));
                    }
                }
                i += 1;
            }
            c.points = out;
        }
    }

    /// Flow until extinction or time `horizon`, calling `observe` after
    /// every accepted step.
    pub fn run_until(&mut self, cfg: &FlowConfig, horizon: f64, mut observe: impl FnMut(&FlowState)) -> Result<()> {
        while !self.is_extinct() && self.t < horizon {
            if self.steps >= cfg.max_steps {
                return Err(Error::Inconclusive(format!("step budget {} exhausted at t = {}", cfg.max_steps, self.t)));
            }
            self.step(cfg)?;
            observe(self);
        }
        Ok(())
    }

    /// Three consecutive windows with small relative length change and a
    /// small curvature maximum.
    fn plateau(&self, cfg: &FlowConfig) -> bool {
        let w = cfg.window;
        let n = self.history.len();
        if n <= 3 * w {
            return false;
        }
        let last = self.history[n - 1];
        if last.max_h >= cfg.tol_h {
            return false;
        }
        (0..3).all(|k| {
            let a = self.history[n - 1 - k * w].length;
            let b = self.history[n - 1 - (k + 1) * w].length;
            (a - b).abs() / a.max(1e-300) < cfg.tol_stall
        })
    }

    /// Current curves as one polyline mesh.
    pub fn mesh(&self) -> Result<MeshSurface> {
        let mut verts = Vec::new();
        let mut segs = Vec::new();
        for c in &self.curves {
            let base = verts.len();
            let n = c.points.len();
            verts.extend(c.points.iter().copied());
            segs.extend((0..n).map(|i| [base + i, base + (i + 1) % n]));
        }
        MeshSurface::new(self.ambient.clone(), verts, Cells::Segments(segs))
    }
}

/// Spec-style functional step.
pub fn step(state: &FlowState, cfg: &FlowConfig) -> Result<FlowState> {
    let mut s = state.clone();
    s.step(cfg)?;
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum Outcome {
    Extinct {
        #[serde(serialize_with = "decimal::serialize")]
        t_ext: f64,
    },
    Converged {
        #[serde(serialize_with = "decimal::serialize")]
        t: f64,
        #[serde(serialize_with = "decimal::serialize")]
        length: f64,
        curve_lengths: Vec<f64>,
        /// `|δV|/|V|` of the limit with the exact discrete first variation.
        #[serde(serialize_with = "decimal::serialize")]
        residual: f64,
        #[serde(serialize_with = "decimal::serialize")]
        max_h: f64,
        #[serde(serialize_with = "decimal::serialize")]
        stability_eigenvalue: f64,
        stable: bool,
        curve_count: usize,
        /// Pairs of limit curves closer than `1e-3` (possible double cover).
        coincident_pairs: Vec<(usize, usize)>,
        /// Spread of the first chart coordinate over each limit curve, for
        /// ambients with a periodic second coordinate.
        #[serde(serialize_with = "decimal::option::serialize")]
        symmetry_defect: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyOutcome {
    pub domain: String,
    #[serde(flatten)]
    pub outcome: Outcome,
    pub steps: usize,
    pub rejections: usize,
    pub nesting_violations: usize,
    pub trail: Vec<HistoryRow>,
    #[serde(skip)]
    pub limit: Option<MeshSurface>,
}

/// Flow `∂N` inward and report extinction or convergence to a closed geodesic.
pub fn run_dichotomy(domain: &Domain, cfg: &FlowConfig) -> Result<DichotomyOutcome> {
    run_dichotomy_with(domain, cfg, |_| {})
}

/// [`run_dichotomy`] calling `observe` after every accepted step.
pub fn run_dichotomy_with(domain: &Domain, cfg: &FlowConfig, mut observe: impl FnMut(&FlowState)) -> Result<DichotomyOutcome> {
    cfg.validate()?;
    if domain.ambient.dim() != 2 {
        return Err(Error::UnsupportedDimension("the dichotomy runs on surfaces".into()));
    }
    let reports = domain.classify(256.max(cfg.vertices))?;
    for r in &reports {
        match r.flag {
            Convexity::Minimal => {
                return Err(Error::RejectedInput(format!("boundary component {} is minimal", r.component)))
            }
            Convexity::NotConvex => {
                return Err(Error::RejectedInput(format!(
                    "boundary component {} is not mean convex (min curvature {})",
                    r.component, r.min_kappa
                )))
            }
            _ => {}
        }
    }
    let mut state = FlowState::from_domain(domain, cfg.vertices)?;
    let mut trail = vec![state.history[0]];
    loop {
        if state.is_extinct() {
            break;
        }
        if state.steps >= cfg.max_steps || state.t >= cfg.max_time {
            let last = state.history.back().copied().expect("history");
            return Err(Error::Inconclusive(format!(
                "no extinction or plateau by t = {} (length {}, max|H| {})",
                state.t, last.length, last.max_h
            )));
        }
        state.step(cfg)?;
        observe(&state);
        if state.steps % cfg.log_every == 0 {
            if let Some(r) = state.history.back() {
                trail.push(*r);
            }
        }
        if state.plateau(cfg) {
            break;
        }
    }
    if let Some(r) = state.history.back() {
        trail.push(*r);
    }
    let outcome = if let Some(t_ext) = state.extinct_at {
        Outcome::Extinct { t_ext }
    } else {
        converged_outcome(&state, cfg)?
    };
    let limit = if state.is_extinct() { None } else { Some(state.mesh()?) };
    Ok(DichotomyOutcome {
        domain: domain.name.clone(),
        outcome,
        steps: state.steps,
        rejections: state.rejections,
        nesting_violations: state.nesting_violations,
        trail,
        limit,
    })
}

fn converged_outcome(state: &FlowState, cfg: &FlowConfig) -> Result<Outcome> {
    let amb = &*state.ambient;
    let mesh = state.mesh()?;
    let length = mesh.measure();
    let residual = mesh.curvature_mass() / length;
    let last = state.history.back().copied().expect("history");
    let mut eig = f64::INFINITY;
    for c in &state.curves {
        let p = StabilityProblem::from_curve(amb, &c.points, cfg.grid)?;
        eig = eig.min(p.smallest().eigenvalue);
    }
    let mut coincident = vec![];
    for i in 0..state.curves.len() {
        for j in i + 1..state.curves.len() {
            let d = curve_distance(amb, &state.curves[i].points, &state.curves[j].points);
            if d < 1e-3 {
                coincident.push((i, j));
            }
        }
    }
    let symmetry_defect = amb.chart.periodic[1].then(|| {
        state
            .curves
            .iter()
            .map(|c| {
                let (lo, hi) = c.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |r, p| (r.0.min(p[0]), r.1.max(p[0])));
                hi - lo
            })
            .fold(0.0, f64::max)
    });
    if residual >= 1e-3 || last.max_h >= cfg.tol_h {
        return Err(Error::Inconclusive(format!(
            "plateau reached but limit is not stationary (residual {residual}, max|H| {})",
            last.max_h
        )));
    }
    Ok(Outcome::Converged {
        t: state.t,
        length,
        curve_lengths: state.curves.iter().map(|c| curve_geometry(amb, &c.points).1.length).collect(),
        residual,
        max_h: last.max_h,
        stability_eigenvalue: eig,
        stable: eig >= -crate::stability::STABLE_TOL,
        curve_count: state.curves.len(),
        coincident_pairs: coincident,
        symmetry_defect,
    })
}

fn point_distance(amb: &AmbientSurface, p: &Point, q: &Point) -> f64 {
    amb.chord_distance(p, q)
}

/// Distance from `q` to the closed polyline `pts`: nearest vertex, refined
/// along its two adjacent chords.
fn point_to_curve(amb: &AmbientSurface, pts: &[Point], q: &Point, nearest: usize) -> f64 {
    let n = pts.len();
    let mut best = point_distance(amb, &pts[nearest], q);
    for (a, b) in [((nearest + n - 1) % n, nearest), (nearest, (nearest + 1) % n)] {
        let d = amb.chart.delta(&pts[a], &pts[b]);
        let f = |t: f64| point_distance(amb, &amb.chart.wrap(&(pts[a] + t * d)), q);
        let (_, v) = golden_min(f, 0.0, 1.0, 1e-10);
        best = best.min(v);
    }
    best
}

fn curve_distance(amb: &AmbientSurface, a: &[Point], b: &[Point]) -> f64 {
    b.iter()
        .map(|q| {
            let (i, _) = a
                .iter()
                .enumerate()
                .map(|(i, p)| (i, point_distance(amb, p, q)))
                .fold((0, f64::INFINITY), |m, x| if x.1 < m.1 { x } else { m });
            point_to_curve(amb, a, q, i)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Distance between the current curves and a fixed point set.
pub fn distance_to_set(amb: &AmbientSurface, curves: &[Curve], s: &[Point]) -> f64 {
    if s.is_empty() {
        return f64::INFINITY;
    }
    let emb = |p: &Point| amb.embed(p);
    let se: Vec<Option<Vec3>> = s.iter().map(emb).collect();
    let mut best = f64::INFINITY;
    for c in curves {
        let ce: Vec<Option<Vec3>> = c.points.iter().map(emb).collect();
        for (j, q) in s.iter().enumerate() {
            let mut near = (0, f64::INFINITY);
            for (i, p) in c.points.iter().enumerate() {
                let d = match (&ce[i], &se[j]) {
                    (Some(a), Some(b)) => (a - b).norm(),
                    _ => point_distance(amb, p, q),
                };
                if d < near.1 {
                    near = (i, d);
                }
            }
            if near.1 < best + 1e-12 {
                best = best.min(point_to_curve(amb, &c.points, q, near.0));
            }
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct AvoidanceReport {
    pub series: Vec<(f64, f64)>,
    #[serde(serialize_with = "decimal::serialize")]
    pub initial: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub minimum: f64,
    pub pass: bool,
    pub contact_time: Option<f64>,
}

/// Records the distance between the flowing curves and a stationary support.
#[derive(Debug, Clone)]
pub struct AvoidanceMonitor {
    pub support: Vec<Point>,
    pub series: Vec<(f64, f64)>,
    pub contact_tol: f64,
}

impl AvoidanceMonitor {
    /// Fails when the curves already touch the support.
    pub fn new(state: &FlowState, support: Vec<Point>, contact_tol: f64) -> Result<Self> {
        let mut m = AvoidanceMonitor { support, series: vec![], contact_tol };
        if !m.support.is_empty() {
            let d = distance_to_set(&state.ambient, &state.curves, &m.support);
            if d <= contact_tol {
                return Err(Error::Precondition(format!("initial distance {d} to the support is not positive")));
            }
        }
        m.observe(state);
        Ok(m)
    }

    pub fn observe(&mut self, state: &FlowState) {
        if self.support.is_empty() || state.curves.is_empty() {
            return;
        }
        self.series.push((state.t, distance_to_set(&state.ambient, &state.curves, &self.support)));
    }

    pub fn report(&self) -> AvoidanceReport {
        let initial = self.series.first().map_or(f64::INFINITY, |r| r.1);
        let minimum = self.series.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let contact_time = self.series.iter().find(|r| r.1 <= self.contact_tol).map(|r| r.0);
        AvoidanceReport { series: self.series.clone(), initial, minimum, pass: contact_time.is_none(), contact_time }
    }
}

/// Distance series for a recorded trajectory of snapshots.
pub fn avoidance_monitor(trajectory: &[FlowState], support: &[Point]) -> Result<AvoidanceReport> {
    let Some(first) = trajectory.first() else {
        return Err(Error::InsufficientData("empty trajectory".into()));
    };
    let mut m = AvoidanceMonitor::new(first, support.to_vec(), 0.0)?;
    for s in &trajectory[1..] {
        m.observe(s);
    }
    Ok(m.report())
}

/// Flow the domain boundary for time `horizon` while monitoring distance to
/// `support`.
pub fn monitored_flow(domain: &Domain, support: &[Point], horizon: f64, cfg: &FlowConfig) -> Result<(AvoidanceReport, FlowState)> {
    cfg.validate()?;
    let mut state = FlowState::from_domain(domain, cfg.vertices)?;
    let mut mon = AvoidanceMonitor::new(&state, support.to_vec(), 0.0)?;
    state.run_until(cfg, horizon, |s| mon.observe(s))?;
    Ok((mon.report(), state))
}

#[derive(Debug, Clone, Serialize)]
pub struct TubeTrajectory {
    /// `(t, [length of each boundary curve])` every `log_every` steps.
    pub records: Vec<(f64, Vec<f64>)>,
    pub contact_time: Option<f64>,
    #[serde(serialize_with = "decimal::serialize")]
    pub min_distance: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub t_end: f64,
    pub curves_left: usize,
}

/// Offset curves at distance `ε` on either side of a closed polyline,
/// oriented so that the tube lies on the region side of each.
pub fn tube_boundary(amb: &AmbientSurface, m0: &[Point], eps: f64) -> Result<Vec<(Vec<Point>, f64)>> {
    let n = m0.len();
    let (h, _) = polyline_curvature(amb, m0, true);
    let kmax = m0.iter().zip(&h).map(|(p, v)| v.map_or(0.0, |v| amb.norm(p, &v))).fold(0.0, f64::max);
    if eps * kmax >= 1.0 {
        return Err(Error::OffsetTooLarge(format!("offset {eps} exceeds the focal distance {}", 1.0 / kmax)));
    }
    let normals: Vec<Vec3> = (0..n)
        .map(|i| {
            let t = amb.chart.delta(&m0[(i + n - 1) % n], &m0[(i + 1) % n]);
            left_normal(amb, &m0[i], &t)
        })
        .collect();
    let left: Vec<Point> = m0.iter().zip(&normals).map(|(p, nu)| amb.chart.wrap(&(p + eps * nu))).collect();
    let right: Vec<Point> = m0.iter().zip(&normals).map(|(p, nu)| amb.chart.wrap(&(p - eps * nu))).collect();
    for c in [&left, &right] {
        if c.iter().any(|p| !amb.chart.contains(p)) {
            return Err(Error::OffsetTooLarge("offset curve leaves the chart".into()));
        }
        if polyline_self_intersects(&amb.chart, c, true) {
            return Err(Error::OffsetTooLarge("offset curve self-intersects".into()));
        }
    }
    // the tube lies to the right of the left offset and to the left of the right one
    Ok(vec![(left, -1.0), (right, 1.0)])
}

/// Flow both tube boundaries with velocity `H − δν` for time `horizon`.
pub fn perturbed_tube_flow(
    amb: AmbientRef,
    m0: &[Point],
    cfg: &FlowConfig,
    horizon: f64,
    support: &[Point],
) -> Result<(TubeTrajectory, FlowState)> {
    cfg.validate()?;
    let curves = tube_boundary(&amb, m0, cfg.epsilon)?;
    let mut state = FlowState::new(amb, curves)?;
    let lengths = |s: &FlowState| s.curves.iter().map(|c| curve_geometry(&s.ambient, &c.points).1.length).collect::<Vec<_>>();
    let mut records = vec![(0.0, lengths(&state))];
    let mut mon = AvoidanceMonitor { support: support.to_vec(), series: vec![], contact_tol: 1e-9 };
    mon.observe(&state);
    let every = cfg.log_every;
    state.run_until(cfg, horizon, |s| {
        mon.observe(s);
        if s.steps % every == 0 {
            records.push((s.t, lengths(s)));
        }
    })?;
    let rep = mon.report();
    Ok((
        TubeTrajectory {
            records,
            contact_time: rep.contact_time,
            min_distance: rep.minimum,
            t_end: state.t,
            curves_left: state.curves.len(),
        },
        state,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::BoundaryCurve;
    use std::f64::consts::{FRAC_PI_3, LN_2, TAU};
    use std::sync::Arc;

    fn neck() -> AmbientRef {
        Arc::new(AmbientSurface::revolution("1 + z^2", -2.0, 2.0).unwrap())
    }

    fn circle_pts(r: f64, n: usize) -> Vec<Point> {
        (0..n).map(|i| {
            let a = TAU * i as f64 / n as f64;
            Point::new(r * a.cos(), r * a.sin(), 0.0)
        }).collect()
    }

    #[test]
    fn plane_circle_shrinks_like_the_exact_solution() {
        let amb = Arc::new(AmbientSurface::plane());
        let mut s = FlowState::new(amb, vec![(circle_pts(1.0, 64), 1.0)]).unwrap();
        let cfg = FlowConfig { vertices: 64, ..Default::default() };
        s.run_until(&cfg, 0.3, |_| {}).unwrap();
        let exact = TAU * (1.0 - 2.0 * s.t).sqrt();
        assert!((s.total_length() - exact).abs() < 2e-3 * exact);
        assert_eq!(s.nesting_violations, 0);
    }

    #[test]
    fn length_decreases_monotonically() {
        let amb = Arc::new(AmbientSurface::plane());
        let curve = BoundaryCurve::parse("(1 + 0.2*cos(3*2*pi*s))*cos(2*pi*s)", "(1 + 0.2*cos(3*2*pi*s))*sin(2*pi*s)").unwrap();
        let pts: Vec<Point> = (0..96).map(|i| curve.point(i as f64 / 96.0)).collect();
        let mut s = FlowState::new(amb, vec![(pts, 1.0)]).unwrap();
        let cfg = FlowConfig::default();
        let mut last = s.total_length();
        for _ in 0..500 {
            s.step(&cfg).unwrap();
            let l = s.total_length();
            assert!(l < last + 1e-9);
            last = l;
        }
    }

    #[test]
    fn waist_is_a_fixed_point() {
        let amb = neck();
        let pts: Vec<Point> = (0..64).map(|i| Point::new(0.0, TAU * i as f64 / 64.0, 0.0)).collect();
        let before = pts.clone();
        let mut s = FlowState::new(amb, vec![(pts, 1.0)]).unwrap();
        s.step(&FlowConfig::default()).unwrap();
        let disp = s.curves[0].points.iter().zip(&before).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(disp < 1e-6 * s.dt);
    }

    #[test]
    fn disk_goes_extinct_at_one_half() {
        let disk = Domain::plane_disk([0.0, 0.0], 1.0).unwrap();
        let out = run_dichotomy(&disk, &FlowConfig { vertices: 64, ..Default::default() }).unwrap();
        match out.outcome {
            Outcome::Extinct { t_ext } => assert!((t_ext - 0.5).abs() < 0.01, "{t_ext}"),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn cap_goes_extinct_at_ln_two() {
        let sphere = Arc::new(AmbientSurface::round_sphere(1.0).unwrap());
        let cap = Domain::spherical_cap(sphere, FRAC_PI_3).unwrap();
        let out = run_dichotomy(&cap, &FlowConfig { vertices: 64, ..Default::default() }).unwrap();
        match out.outcome {
            Outcome::Extinct { t_ext } => assert!((t_ext - LN_2).abs() < 0.02 * LN_2, "{t_ext}"),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn minimal_boundary_is_rejected() {
        let cyl = Arc::new(AmbientSurface::revolution("1", -2.0, 2.0).unwrap());
        let band = Domain::revolution_band(cyl, 1.0).unwrap();
        assert!(matches!(run_dichotomy(&band, &FlowConfig::default()), Err(Error::RejectedInput(_))));
    }

    #[test]
    fn tube_boundaries_follow_perturbed_odes() {
        let amb = Arc::new(AmbientSurface::plane());
        let cfg = FlowConfig { delta: 0.5, epsilon: 0.1, vertices: 64, ..Default::default() };
        let (traj, s) = perturbed_tube_flow(amb, &circle_pts(1.0, 64), &cfg, 0.1, &[]).unwrap();
        assert_eq!(traj.curves_left, 2);
        // inner circle: ρ′ = −1/ρ + δ; outer circle: ρ′ = −1/ρ − δ
        let (mut inner, mut outer): (f64, f64) = (0.9, 1.1);
        let n = 100_000;
        let h = s.t / n as f64;
        for _ in 0..n {
            inner += h * (-1.0 / inner + 0.5);
            outer += h * (-1.0 / outer - 0.5);
        }
        for (c, rho) in s.curves.iter().zip([inner, outer]) {
            let len = curve_geometry(&s.ambient, &c.points).1.length;
            assert!((len - TAU * rho).abs() < 2e-3 * TAU * rho, "{len} vs {}", TAU * rho);
        }
    }

    #[test]
    fn perturbed_circle_is_stationary_at_inverse_delta() {
        let amb = Arc::new(AmbientSurface::plane());
        let cfg = FlowConfig { delta: 1.0, epsilon: 0.05, vertices: 64, ..Default::default() };
        let (_, s) = perturbed_tube_flow(amb, &circle_pts(1.05, 64), &cfg, 0.05, &[]).unwrap();
        let len = curve_geometry(&s.ambient, &s.curves[0].points).1.length;
        assert!((len - TAU).abs() < 2e-3 * TAU, "{len}");
    }

    #[test]
    fn oversized_offset_is_rejected() {
        let amb = Arc::new(AmbientSurface::plane());
        assert!(matches!(tube_boundary(&amb, &circle_pts(0.5, 64), 0.6), Err(Error::OffsetTooLarge(_))));
    }

    #[test]
    fn empty_support_is_vacuous() {
        let amb = Arc::new(AmbientSurface::plane());
        let s = FlowState::new(amb, vec![(circle_pts(1.0, 32), 1.0)]).unwrap();
        let r = avoidance_monitor(&[s], &[]).unwrap();
        assert!(r.pass && r.series.is_empty());
    }
}
