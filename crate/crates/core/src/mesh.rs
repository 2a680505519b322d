//! Discrete k-surfaces: polylines (k = 1) in any ambient of the crate and
//! triangle meshes (k = 2) in Euclidean space, with measures, discrete mean
//! curvature and the discrete divergence identity.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use crate::ambient::{AmbientRef, AmbientSurface, BoundaryCurve, Point, Vec3};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::numerics::{triangle7, KahanSum, GAUSS3};
use crate::welzl::{min_enclosing_ball, Ball};

/// Elements below this measure are rejected as degenerate.
pub const MIN_ELEMENT_MEASURE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Cells {
    Segments(Vec<[usize; 2]>),
    Triangles(Vec<[usize; 3]>),
}

/// How `refine` places new vertices.
#[derive(Debug, Clone)]
pub enum Reprojection {
    /// Chart midpoints.
    None,
    /// Polyline sampled from a parametrised curve; `params[v]` is the curve
    /// parameter of vertex `v`.
    Curve { curve: BoundaryCurve, params: Vec<f64>, closed: bool },
    /// All new vertices pushed radially onto a sphere.
    Sphere { center: Point, radius: f64 },
    /// New boundary vertices pushed radially onto a circle in the mesh plane.
    DiskBoundary { center: Point, radius: f64 },
}

/// Quadrature node on an element: point, g-orthonormal tangent frame, weight.
#[derive(Debug, Clone)]
pub struct Node {
    pub point: Point,
    pub frame: Vec<Vec3>,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct MeshSurface {
    pub ambient: AmbientRef,
    pub vertices: Vec<Point>,
    pub cells: Cells,
    pub reprojection: Reprojection,
    boundary: Vec<Vec<usize>>,
}

/// Per-vertex discrete mean curvature and boundary conormals.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    /// Mean curvature vector; `None` at boundary vertices.
    pub h: Vec<Option<Vec3>>,
    /// Dual measure of each vertex.
    pub dual: Vec<f64>,
    /// Outward unit conormals: for k = 1 one per boundary vertex
    /// (`vertices = [v]`), for k = 2 one per boundary edge (`[a, b]`).
    pub conormals: Vec<(Vec<usize>, Vec3)>,
    norms: Vec<f64>,
}

impl CurvatureField {
    /// `|H|_g` per vertex (zero where undefined).
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn max_abs(&self) -> f64 {
        self.norms.iter().cloned().fold(0.0, f64::max)
    }

    /// `∫|H|` as vertex values times dual measures.
    pub fn integral_abs(&self) -> f64 {
        let mut s = KahanSum::new();
        for (v, h) in self.h.iter().enumerate() {
            if h.is_some() {
                s.add(self.norms[v] * self.dual[v]);
            }
        }
        s.value()
    }
}

/// Terms of the discrete divergence identity `∫div X = ∫_∂ X·ν − ∫ H·X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceTerms {
    pub divergence: f64,
    pub boundary: f64,
    pub curvature: f64,
}

impl DivergenceTerms {
    pub fn residual(&self) -> f64 {
        (self.divergence - (self.boundary - self.curvature)).abs()
    }
}

// ---------------------------------------------------------------------------
// chord geometry for k = 1

/// Gauss nodes along the coordinate chord `a → b`: point, unit tangent, weight.
pub fn chord_nodes(amb: &AmbientSurface, a: &Point, b: &Point) -> [(Point, Vec3, f64); 3] {
    let d = amb.chart.delta(a, b);
    GAUSS3.map(|(t, w)| {
        let q = amb.chart.wrap(&(a + t * d));
        let n = amb.norm(&q, &d);
        (q, d / n, w * n)
    })
}

pub fn chord_length(amb: &AmbientSurface, a: &Point, b: &Point) -> f64 {
    chord_nodes(amb, a, b).iter().map(|n| n.2).sum()
}

/// Unit tangents of the geodesic-approximating chord at its departure and
/// arrival points (second-order Taylor with Γ at the chord midpoint).
pub fn chord_tangents(amb: &AmbientSurface, a: &Point, b: &Point) -> (Vec3, Vec3) {
    let d = amb.chart.delta(a, b);
    let mid = amb.chart.midpoint(a, b);
    let gamma = amb.christoffel(&mid);
    let corr = 0.5 * AmbientSurface::gamma_contract(&gamma, &d, &d);
    let out = d + corr;
    let inn = d - corr;
    (out / amb.norm(a, &out), inn / amb.norm(b, &inn))
}

/// Discrete curvature of an ordered polyline: per-vertex curvature vector
/// (`None` at the ends of an open polyline) and dual lengths.
pub fn polyline_curvature(amb: &AmbientSurface, pts: &[Point], closed: bool) -> (Vec<Option<Vec3>>, Vec<f64>) {
    let n = pts.len();
    let nseg = if closed { n } else { n.saturating_sub(1) };
    let mut lengths = Vec::with_capacity(nseg);
    let mut tangents = Vec::with_capacity(nseg);
    for i in 0..nseg {
        let (a, b) = (&pts[i], &pts[(i + 1) % n]);
        lengths.push(chord_length(amb, a, b));
        tangents.push(chord_tangents(amb, a, b));
    }
    let mut h = vec![None; n];
    let mut dual = vec![0.0; n];
    for v in 0..n {
        let prev = if closed { Some((v + n - 1) % n) } else { v.checked_sub(1) };
        let next = (v < nseg).then_some(v);
        dual[v] = 0.5 * (prev.map_or(0.0, |s| lengths[s]) + next.map_or(0.0, |s| lengths[s]));
        if let (Some(ps), Some(ns)) = (prev, next) {
            let t_in = tangents[ps].1;
            let t_out = tangents[ns].0;
            let k = (t_out - t_in) / dual[v];
            let tbar = t_in + t_out;
            let p = &pts[v];
            let tt = amb.inner(p, &tbar, &tbar);
            let hv = if tt > 0.0 { k - (amb.inner(p, &k, &tbar) / tt) * tbar } else { k };
            h[v] = Some(hv);
        }
    }
    (h, dual)
}

/// Total g-length of an ordered polyline.
pub fn polyline_length(amb: &AmbientSurface, pts: &[Point], closed: bool) -> f64 {
    let n = pts.len();
    let nseg = if closed { n } else { n.saturating_sub(1) };
    (0..nseg).map(|i| chord_length(amb, &pts[i], &pts[(i + 1) % n])).collect::<KahanSum>().value()
}

// ---------------------------------------------------------------------------

impl MeshSurface {
    pub fn new(ambient: AmbientRef, vertices: Vec<Point>, cells: Cells) -> Result<Self> {
        Self::with_reprojection(ambient, vertices, cells, Reprojection::None)
    }

    pub fn with_reprojection(
        ambient: AmbientRef,
        vertices: Vec<Point>,
        cells: Cells,
        reprojection: Reprojection,
    ) -> Result<Self> {
        let mut vertices = vertices;
        for v in vertices.iter_mut() {
            *v = ambient.chart.check(v).map_err(|e| Error::InvalidMesh(e.to_string()))?;
        }
        let nv = vertices.len();
        let boundary = match &cells {
            Cells::Segments(segs) => {
                let mut starts = vec![0u8; nv];
                let mut ends = vec![0u8; nv];
                for (i, s) in segs.iter().enumerate() {
                    if s[0] >= nv || s[1] >= nv || s[0] == s[1] {
                        return Err(Error::InvalidMesh(format!("segment {i} has invalid vertices {s:?}")));
                    }
                    starts[s[0]] += 1;
                    ends[s[1]] += 1;
                    if starts[s[0]] > 1 || ends[s[1]] > 1 {
                        return Err(Error::InvalidMesh(format!("vertex shared by more than two segments at segment {i}")));
                    }
                }
                let mut bnd = Vec::new();
                for v in 0..nv {
                    if starts[v] + ends[v] == 1 {
                        bnd.push(v);
                    }
                }
                if bnd.is_empty() {
                    vec![]
                } else {
                    vec![bnd]
                }
            }
            Cells::Triangles(tris) => {
                if !(ambient.dim() == 3 && ambient.is_euclidean()) {
                    return Err(Error::Unsupported("triangle meshes need a Euclidean 3-space ambient".into()));
                }
                let mut count: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
                for (i, t) in tris.iter().enumerate() {
                    if t.iter().any(|&v| v >= nv) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                        return Err(Error::InvalidMesh(format!("triangle {i} has invalid vertices {t:?}")));
                    }
                    for e in 0..3 {
                        let (a, b) = (t[e], t[(e + 1) % 3]);
                        let entry = count.entry((a.min(b), a.max(b))).or_insert((0, [a, b]));
                        entry.0 += 1;
                        if entry.0 > 2 {
                            return Err(Error::InvalidMesh(format!("edge ({a}, {b}) is shared by more than two triangles")));
                        }
                    }
                }
                let mut next: HashMap<usize, usize> = HashMap::new();
                let mut edges: Vec<[usize; 2]> = count.values().filter(|(c, _)| *c == 1).map(|(_, e)| *e).collect();
                edges.sort_unstable();
                for e in &edges {
                    if next.insert(e[0], e[1]).is_some() {
                        return Err(Error::InvalidMesh(format!("boundary vertex {} is not manifold", e[0])));
                    }
                }
                let mut loops = Vec::new();
                let mut seen = std::collections::HashSet::new();
                for e in &edges {
                    if seen.contains(&e[0]) {
                        continue;
                    }
                    let mut lp = vec![e[0]];
                    seen.insert(e[0]);
                    let mut cur = e[1];
                    while cur != e[0] {
                        if !seen.insert(cur) {
                            return Err(Error::InvalidMesh("boundary loops are inconsistent".into()));
                        }
                        lp.push(cur);
                        cur = *next
                            .get(&cur)
                            .ok_or_else(|| Error::InvalidMesh("open boundary chain".into()))?;
                    }
                    loops.push(lp);
                }
                loops
            }
        };
        let mesh = MeshSurface { ambient, vertices, cells, reprojection, boundary };
        for e in 0..mesh.element_count() {
            let m = mesh.element_measure(e);
            if !(m > MIN_ELEMENT_MEASURE) {
                return Err(Error::InvalidMesh(format!("element {e} is degenerate (measure {m:.3e})")));
            }
        }
        Ok(mesh)
    }

    pub fn k(&self) -> usize {
        match self.cells {
            Cells::Segments(_) => 1,
            Cells::Triangles(_) => 2,
        }
    }

    pub fn element_count(&self) -> usize {
        match &self.cells {
            Cells::Segments(s) => s.len(),
            Cells::Triangles(t) => t.len(),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.boundary.is_empty()
    }

    /// Boundary vertex lists: for k = 1 the polyline end points, for k = 2
    /// ordered loops.
    pub fn boundary(&self) -> &[Vec<usize>] {
        &self.boundary
    }

    pub fn element_vertices(&self, e: usize) -> Vec<usize> {
        match &self.cells {
            Cells::Segments(s) => s[e].to_vec(),
            Cells::Triangles(t) => t[e].to_vec(),
        }
    }

    /// Quadrature nodes of element `e`; weights sum to its measure.
    pub fn element_nodes(&self, e: usize) -> Vec<Node> {
        let amb = &*self.ambient;
        match &self.cells {
            Cells::Segments(s) => {
                let (a, b) = (&self.vertices[s[e][0]], &self.vertices[s[e][1]]);
                chord_nodes(amb, a, b)
                    .into_iter()
                    .map(|(q, t, w)| Node { point: q, frame: vec![t], weight: w })
                    .collect()
            }
            Cells::Triangles(t) => {
                let [a, b, c] = t[e].map(|v| self.vertices[v]);
                let (area, frame) = triangle_frame(&a, &b, &c);
                triangle7()
                    .iter()
                    .map(|(bc, w)| Node {
                        point: bc[0] * a + bc[1] * b + bc[2] * c,
                        frame: frame.to_vec(),
                        weight: w * area,
                    })
                    .collect()
            }
        }
    }

    pub fn element_measure(&self, e: usize) -> f64 {
        match &self.cells {
            Cells::Segments(s) => chord_length(&self.ambient, &self.vertices[s[e][0]], &self.vertices[s[e][1]]),
            Cells::Triangles(t) => {
                let [a, b, c] = t[e].map(|v| self.vertices[v]);
                0.5 * (b - a).cross(&(c - a)).norm()
            }
        }
    }

    /// Barycentre (chart midpoint for segments).
    pub fn element_center(&self, e: usize) -> Point {
        match &self.cells {
            Cells::Segments(s) => self.ambient.chart.midpoint(&self.vertices[s[e][0]], &self.vertices[s[e][1]]),
            Cells::Triangles(t) => {
                let [a, b, c] = t[e].map(|v| self.vertices[v]);
                (a + b + c) / 3.0
            }
        }
    }

    /// g-orthonormal tangent frame of element `e` at its centre.
    pub fn element_frame(&self, e: usize) -> Vec<Vec3> {
        match &self.cells {
            Cells::Segments(s) => {
                let (a, b) = (&self.vertices[s[e][0]], &self.vertices[s[e][1]]);
                let d = self.ambient.chart.delta(a, b);
                let m = self.element_center(e);
                vec![d / self.ambient.norm(&m, &d)]
            }
            Cells::Triangles(t) => {
                let [a, b, c] = t[e].map(|v| self.vertices[v]);
                triangle_frame(&a, &b, &c).1.to_vec()
            }
        }
    }

    pub fn measure(&self) -> f64 {
        (0..self.element_count()).map(|e| self.element_measure(e)).collect::<KahanSum>().value()
    }

    pub fn boundary_measure(&self) -> f64 {
        match self.k() {
            1 => self.boundary.iter().map(|b| b.len()).sum::<usize>() as f64,
            _ => {
                let mut s = KahanSum::new();
                for lp in &self.boundary {
                    for i in 0..lp.len() {
                        let (a, b) = (self.vertices[lp[i]], self.vertices[lp[(i + 1) % lp.len()]]);
                        s.add((b - a).norm());
                    }
                }
                s.value()
            }
        }
    }

    /// Largest element diameter.
    pub fn max_element_size(&self) -> f64 {
        match &self.cells {
            Cells::Segments(_) => (0..self.element_count()).map(|e| self.element_measure(e)).fold(0.0, f64::max),
            Cells::Triangles(t) => t
                .iter()
                .map(|tr| {
                    let [a, b, c] = tr.map(|v| self.vertices[v]);
                    (b - a).norm().max((c - b).norm()).max((a - c).norm())
                })
                .fold(0.0, f64::max),
        }
    }

    /// Ordered vertex chains of a polyline with their closed flags.
    pub fn chains(&self) -> Vec<(Vec<usize>, bool)> {
        let Cells::Segments(segs) = &self.cells else {
            return vec![];
        };
        let nv = self.vertices.len();
        let mut next = vec![usize::MAX; nv];
        let mut has_prev = vec![false; nv];
        let mut used = vec![false; nv];
        for s in segs {
            next[s[0]] = s[1];
            has_prev[s[1]] = true;
        }
        let mut out = Vec::new();
        // open chains start at vertices without a predecessor
        for v in 0..nv {
            if !has_prev[v] && next[v] != usize::MAX {
                let mut chain = vec![v];
                used[v] = true;
                let mut cur = next[v];
                while cur != usize::MAX {
                    chain.push(cur);
                    used[cur] = true;
                    cur = next[cur];
                }
                out.push((chain, false));
            }
        }
        for v in 0..nv {
            if !used[v] && next[v] != usize::MAX {
                let mut chain = vec![v];
                used[v] = true;
                let mut cur = next[v];
                while cur != v {
                    chain.push(cur);
                    used[cur] = true;
                    cur = next[cur];
                }
                out.push((chain, true));
            }
        }
        out
    }

    pub fn mean_curvature(&self) -> CurvatureField {
        let amb = &*self.ambient;
        let nv = self.vertices.len();
        let mut h = vec![None; nv];
        let mut dual = vec![0.0; nv];
        let mut conormals = Vec::new();
        match &self.cells {
            Cells::Segments(_) => {
                for (chain, closed) in self.chains() {
                    let pts: Vec<Point> = chain.iter().map(|&v| self.vertices[v]).collect();
                    let (hc, dc) = polyline_curvature(amb, &pts, closed);
                    for (i, &v) in chain.iter().enumerate() {
                        h[v] = hc[i];
                        dual[v] = dc[i];
                    }
                    if !closed {
                        let m = pts.len();
                        let (t0, _) = chord_tangents(amb, &pts[0], &pts[1]);
                        let (_, t1) = chord_tangents(amb, &pts[m - 2], &pts[m - 1]);
                        conormals.push((vec![chain[0]], -t0));
                        conormals.push((vec![chain[m - 1]], t1));
                    }
                }
            }
            Cells::Triangles(tris) => {
                let mut lap = vec![Vec3::zeros(); nv];
                for t in tris {
                    let x = t.map(|v| self.vertices[v]);
                    let area = 0.5 * (x[1] - x[0]).cross(&(x[2] - x[0])).norm();
                    let mut cots = [0.0; 3];
                    let mut obtuse = None;
                    for i in 0..3 {
                        let (u, w) = (x[(i + 1) % 3] - x[i], x[(i + 2) % 3] - x[i]);
                        let d = u.dot(&w);
                        cots[i] = d / u.cross(&w).norm();
                        if d < 0.0 {
                            obtuse = Some(i);
                        }
                    }
                    for i in 0..3 {
                        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                        // edge (j, k) is opposite vertex i
                        let c = 0.5 * cots[i];
                        lap[t[j]] += c * (x[k] - x[j]);
                        lap[t[k]] += c * (x[j] - x[k]);
                        let a = match obtuse {
                            None => 0.125 * ((x[k] - x[i]).norm_squared() * cots[j] + (x[j] - x[i]).norm_squared() * cots[k]),
                            Some(o) if o == i => 0.5 * area,
                            Some(_) => 0.25 * area,
                        };
                        dual[t[i]] += a;
                    }
                }
                let mut on_boundary = vec![false; nv];
                for lp in &self.boundary {
                    for &v in lp {
                        on_boundary[v] = true;
                    }
                }
                for v in 0..nv {
                    if !on_boundary[v] && dual[v] > 0.0 {
                        h[v] = Some(lap[v] / dual[v]);
                    }
                }
                // conormal of each boundary edge: in-plane, away from the opposite vertex
                let mut opposite: HashMap<(usize, usize), usize> = HashMap::new();
                for t in tris {
                    for e in 0..3 {
                        opposite.insert((t[e], t[(e + 1) % 3]), t[(e + 2) % 3]);
                    }
                }
                for lp in &self.boundary {
                    for i in 0..lp.len() {
                        let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                        let c = opposite[&(a, b)];
                        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
                        let e = (pb - pa).normalize();
                        let w = pc - pa;
                        let inward = w - w.dot(&e) * e;
                        conormals.push((vec![a, b], -inward.normalize()));
                    }
                }
            }
        }
        let norms = (0..nv).map(|v| h[v].map_or(0.0, |hv| amb.norm(&self.vertices[v], &hv))).collect();
        CurvatureField { h, dual, conormals, norms }
    }

    /// The three integrals of the divergence identity for field `x`, all by
    /// per-element quadrature.
    pub fn divergence_terms(&self, x: &VectorField) -> Result<DivergenceTerms> {
        let amb = &*self.ambient;
        let mut div = KahanSum::new();
        for e in 0..self.element_count() {
            for n in self.element_nodes(e) {
                div.add(n.weight * x.div_frame(amb, &n.point, &n.frame)?);
            }
        }
        let cf = self.mean_curvature();
        let mut bnd = KahanSum::new();
        for (vs, nu) in &cf.conormals {
            if vs.len() == 1 {
                let p = &self.vertices[vs[0]];
                bnd.add(amb.inner(p, &x.value(amb, p)?, nu));
            } else {
                let (a, b) = (self.vertices[vs[0]], self.vertices[vs[1]]);
                let len = (b - a).norm();
                for (t, w) in GAUSS3 {
                    let q = a + t * (b - a);
                    bnd.add(w * len * x.value(amb, &q)?.dot(nu));
                }
            }
        }
        // H is interpolated linearly over each element from its vertex values
        // (zero where undefined) and integrated with the element's own nodes.
        let bary: Vec<Vec<f64>> = match &self.cells {
            Cells::Segments(_) => GAUSS3.iter().map(|(t, _)| vec![1.0 - t, *t]).collect(),
            Cells::Triangles(_) => triangle7().iter().map(|(bc, _)| bc.to_vec()).collect(),
        };
        let mut curv = KahanSum::new();
        for e in 0..self.element_count() {
            let vs = self.element_vertices(e);
            for (n, lam) in self.element_nodes(e).iter().zip(&bary) {
                let mut hn = Vec3::zeros();
                for (v, l) in vs.iter().zip(lam) {
                    if let Some(hv) = cf.h[*v] {
                        hn += *l * hv;
                    }
                }
                curv.add(n.weight * amb.inner(&n.point, &hn, &x.value(amb, &n.point)?));
            }
        }
        Ok(DivergenceTerms { divergence: div.value(), boundary: bnd.value(), curvature: curv.value() })
    }

    pub fn divergence_identity_residual(&self, x: &VectorField) -> Result<f64> {
        Ok(self.divergence_terms(x)?.residual())
    }

    /// Exact total curvature measure of the discrete surface, the `∫|H|`
    /// entering `|δV| = |∂M| + ∫|H|`. For polylines: turning of the chord
    /// tangents at interior vertices plus the geodesic curvature of each
    /// coordinate chord. For triangle meshes: the conormal jump across each
    /// interior edge times its length.
    pub fn curvature_mass(&self) -> f64 {
        let amb = &*self.ambient;
        let mut s = KahanSum::new();
        match &self.cells {
            Cells::Segments(_) => {
                for (chain, closed) in self.chains() {
                    let n = chain.len();
                    let nseg = if closed { n } else { n - 1 };
                    let pts: Vec<Point> = chain.iter().map(|&v| self.vertices[v]).collect();
                    let deltas: Vec<Vec3> = (0..nseg).map(|i| amb.chart.delta(&pts[i], &pts[(i + 1) % n])).collect();
                    for v in 0..n {
                        let prev = if closed { Some((v + n - 1) % n) } else { v.checked_sub(1) };
                        let next = (v < nseg).then_some(v);
                        if let (Some(a), Some(b)) = (prev, next) {
                            let p = &pts[v];
                            let t_in = deltas[a] / amb.norm(p, &deltas[a]);
                            let t_out = deltas[b] / amb.norm(p, &deltas[b]);
                            s.add(amb.norm(p, &(t_out - t_in)));
                        }
                    }
                    for (i, d) in deltas.iter().enumerate() {
                        for (q, t, w) in chord_nodes(amb, &pts[i], &pts[(i + 1) % n]) {
                            let gamma = amb.christoffel(&q);
                            let dd = amb.inner(&q, d, d);
                            let acc = AmbientSurface::gamma_contract(&gamma, d, d) / dd;
                            let kappa = acc - amb.inner(&q, &acc, &t) * t;
                            s.add(w * amb.norm(&q, &kappa));
                        }
                    }
                }
            }
            Cells::Triangles(tris) => {
                let mut conormal: HashMap<(usize, usize), Vec3> = HashMap::new();
                for t in tris {
                    for e in 0..3 {
                        let (a, b, c) = (t[e], t[(e + 1) % 3], t[(e + 2) % 3]);
                        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
                        let u = (pb - pa).normalize();
                        let w = pc - pa;
                        let inward = w - w.dot(&u) * u;
                        *conormal.entry((a.min(b), a.max(b))).or_insert_with(Vec3::zeros) -= inward.normalize();
                    }
                }
                let mut edges: Vec<_> = conormal.into_iter().collect();
                edges.sort_unstable_by_key(|(e, _)| *e);
                let bnd: std::collections::HashSet<(usize, usize)> = self
                    .boundary
                    .iter()
                    .flat_map(|lp| (0..lp.len()).map(move |i| (lp[i].min(lp[(i + 1) % lp.len()]), lp[i].max(lp[(i + 1) % lp.len()]))))
                    .collect();
                for ((a, b), nu) in edges {
                    if !bnd.contains(&(a, b)) {
                        s.add((self.vertices[b] - self.vertices[a]).norm() * nu.norm());
                    }
                }
            }
        }
        s.value()
    }

    /// `|∂M| + ∫|H|` with the exact discrete curvature measure.
    pub fn first_variation_total(&self) -> f64 {
        self.boundary_measure() + self.curvature_mass()
    }

    /// Radius and centre of the smallest ball containing the vertices
    /// (Euclidean ambients).
    pub fn enclosing_ball(&self) -> Result<Ball> {
        if !self.ambient.is_euclidean() {
            return Err(Error::Unsupported("enclosing balls need a Euclidean ambient".into()));
        }
        Ok(min_enclosing_ball(&self.vertices))
    }

    /// Midpoint subdivision (k = 1) or 1 → 4 split (k = 2), with reprojection.
    pub fn refine(&self) -> Result<MeshSurface> {
        let amb = &*self.ambient;
        let mut verts = self.vertices.clone();
        match &self.cells {
            Cells::Segments(segs) => {
                let mut params = match &self.reprojection {
                    Reprojection::Curve { params, .. } => params.clone(),
                    _ => vec![],
                };
                let mut out = Vec::with_capacity(2 * segs.len());
                for s in segs {
                    let (a, b) = (s[0], s[1]);
                    let m = verts.len();
                    let p = match &self.reprojection {
                        Reprojection::Curve { curve, params: ps, .. } => {
                            let (sa, mut sb) = (ps[a], ps[b]);
                            if sb <= sa {
                                sb += 1.0;
                            }
                            let sm = 0.5 * (sa + sb);
                            let sm = if sm >= 1.0 { sm - 1.0 } else { sm };
                            params.push(sm);
                            amb.chart.wrap(&curve.point(sm))
                        }
                        Reprojection::Sphere { center, radius } => {
                            let mid = 0.5 * (verts[a] + verts[b]);
                            center + *radius * (mid - center).normalize()
                        }
                        _ => amb.chart.midpoint(&verts[a], &verts[b]),
                    };
                    verts.push(p);
                    out.push([a, m]);
                    out.push([m, b]);
                }
                let reprojection = match &self.reprojection {
                    Reprojection::Curve { curve, closed, .. } => {
                        Reprojection::Curve { curve: curve.clone(), params, closed: *closed }
                    }
                    r => r.clone(),
                };
                MeshSurface::with_reprojection(self.ambient.clone(), verts, Cells::Segments(out), reprojection)
            }
            Cells::Triangles(tris) => {
                let mut bedges = std::collections::HashSet::new();
                for lp in &self.boundary {
                    for i in 0..lp.len() {
                        let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                        bedges.insert((a.min(b), a.max(b)));
                    }
                }
                let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
                let mut mid = |a: usize, b: usize, verts: &mut Vec<Point>| -> usize {
                    let key = (a.min(b), a.max(b));
                    if let Some(&m) = mids.get(&key) {
                        return m;
                    }
                    let p = 0.5 * (verts[a] + verts[b]);
                    let p = match &self.reprojection {
                        Reprojection::Sphere { center, radius } => center + *radius * (p - center).normalize(),
                        Reprojection::DiskBoundary { center, radius } if bedges.contains(&key) => {
                            center + *radius * (p - center).normalize()
                        }
                        _ => p,
                    };
                    verts.push(p);
                    mids.insert(key, verts.len() - 1);
                    verts.len() - 1
                };
                let mut out = Vec::with_capacity(4 * tris.len());
                for t in tris {
                    let [a, b, c] = *t;
                    let ab = mid(a, b, &mut verts);
                    let bc = mid(b, c, &mut verts);
                    let ca = mid(c, a, &mut verts);
                    out.push([a, ab, ca]);
                    out.push([ab, b, bc]);
                    out.push([ca, bc, c]);
                    out.push([ab, bc, ca]);
                }
                MeshSurface::with_reprojection(self.ambient.clone(), verts, Cells::Triangles(out), self.reprojection.clone())
            }
        }
    }

    pub fn refine_n(&self, levels: usize) -> Result<MeshSurface> {
        let mut m = self.clone();
        for _ in 0..levels {
            m = m.refine()?;
        }
        Ok(m)
    }

    // -- generators -------------------------------------------------------

    /// Polyline with `n` segments sampled from a parametrised curve.
    pub fn parametric(ambient: AmbientRef, curve: BoundaryCurve, n: usize, closed: bool) -> Result<Self> {
        if n < if closed { 3 } else { 1 } {
            return Err(Error::InvalidMesh(format!("too few segments: {n}")));
        }
        let nv = if closed { n } else { n + 1 };
        let params: Vec<f64> = (0..nv).map(|i| i as f64 / n as f64).collect();
        let verts: Vec<Point> = params.iter().map(|&s| ambient.chart.wrap(&curve.point(s))).collect();
        let segs = (0..n).map(|i| [i, (i + 1) % nv]).collect();
        Self::with_reprojection(ambient, verts, Cells::Segments(segs), Reprojection::Curve { curve, params, closed })
    }

    /// Circle of `radius` about `center` in the Euclidean plane, `n` segments.
    pub fn circle(center: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        let curve = BoundaryCurve::parse(
            &format!("{} + {}*cos(2*pi*s)", center[0], radius),
            &format!("{} + {}*sin(2*pi*s)", center[1], radius),
        )?;
        Self::parametric(Arc::new(AmbientSurface::plane()), curve, n, true)
    }

    /// Unit circle at refinement level `level` (4·2^level segments).
    pub fn circle_level(level: usize) -> Result<Self> {
        Self::circle([0.0, 0.0], 1.0, 4 << level)
    }

    /// Coordinate circle `{x⁰ = c}` in an ambient whose second coordinate
    /// is periodic with period 2π (latitudes on revolution surfaces and
    /// spheres).
    pub fn latitude(ambient: AmbientRef, c: f64, n: usize) -> Result<Self> {
        if !ambient.chart.periodic[1] {
            return Err(Error::InvalidMesh("latitudes need a periodic second coordinate".into()));
        }
        let per = ambient.chart.hi[1] - ambient.chart.lo[1];
        let curve = BoundaryCurve::parse(&format!("{c}"), &format!("{} + {}*s", ambient.chart.lo[1], per))?;
        Self::parametric(ambient, curve, n, true)
    }

    /// Straight chart segment from `a` to `b` with `n` pieces.
    pub fn segment(ambient: AmbientRef, a: [f64; 2], b: [f64; 2], n: usize) -> Result<Self> {
        let curve = BoundaryCurve::parse(
            &format!("{} + ({})*s", a[0], b[0] - a[0]),
            &format!("{} + ({})*s", a[1], b[1] - a[1]),
        )?;
        Self::parametric(ambient, curve, n, false)
    }

    /// Polyline through the given chart points.
    pub fn polyline(ambient: AmbientRef, pts: Vec<Point>, closed: bool) -> Result<Self> {
        let n = pts.len();
        let nseg = if closed { n } else { n.saturating_sub(1) };
        let segs = (0..nseg).map(|i| [i, (i + 1) % n]).collect();
        Self::new(ambient, pts, Cells::Segments(segs))
    }

    /// Flat unit disk in the plane `z = 0` of E³: hexagonal fan refined
    /// `level` times with boundary reprojection (6·4^level triangles).
    pub fn unit_disk(level: usize) -> Result<Self> {
        Self::disk([0.0, 0.0, 0.0], 1.0, level)
    }

    pub fn disk(center: [f64; 3], radius: f64, level: usize) -> Result<Self> {
        let c = Point::new(center[0], center[1], center[2]);
        let mut verts = vec![c];
        for i in 0..6 {
            let t = TAU * i as f64 / 6.0;
            verts.push(c + radius * Point::new(t.cos(), t.sin(), 0.0));
        }
        let tris = (0..6).map(|i| [0, 1 + i, 1 + (i + 1) % 6]).collect();
        let m = Self::with_reprojection(
            Arc::new(AmbientSurface::space()),
            verts,
            Cells::Triangles(tris),
            Reprojection::DiskBoundary { center: c, radius },
        )?;
        m.refine_n(level)
    }

    /// Unit icosphere: icosahedron refined `level` times (20·4^level faces).
    pub fn icosphere(level: usize) -> Result<Self> {
        Self::sphere([0.0; 3], 1.0, level)
    }

    pub fn sphere(center: [f64; 3], radius: f64, level: usize) -> Result<Self> {
        let c = Point::new(center[0], center[1], center[2]);
        let p = (1.0 + 5f64.sqrt()) / 2.0;
        let raw = [
            [-1.0, p, 0.0],
            [1.0, p, 0.0],
            [-1.0, -p, 0.0],
            [1.0, -p, 0.0],
            [0.0, -1.0, p],
            [0.0, 1.0, p],
            [0.0, -1.0, -p],
            [0.0, 1.0, -p],
            [p, 0.0, -1.0],
            [p, 0.0, 1.0],
            [-p, 0.0, -1.0],
            [-p, 0.0, 1.0],
        ];
        let verts = raw.iter().map(|v| c + radius * Point::new(v[0], v[1], v[2]).normalize()).collect();
        let tris = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        let m = Self::with_reprojection(
            Arc::new(AmbientSurface::space()),
            verts,
            Cells::Triangles(tris),
            Reprojection::Sphere { center: c, radius },
        )?;
        m.refine_n(level)
    }

    /// Unit square `[0,1]² × {0}` in E³ as two triangles.
    pub fn unit_square() -> Result<Self> {
        let verts = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
        ];
        Self::new(Arc::new(AmbientSurface::space()), verts, Cells::Triangles(vec![[0, 1, 2], [0, 2, 3]]))
    }

    /// Copy with every vertex mapped through `f`; reprojection data is dropped.
    pub fn map_vertices(&self, ambient: AmbientRef, f: impl Fn(&Point) -> Point) -> Result<Self> {
        let verts = self.vertices.iter().map(f).collect();
        Self::new(ambient, verts, self.cells.clone())
    }
}

/// Area and orthonormal frame of a Euclidean triangle.
fn triangle_frame(a: &Point, b: &Point, c: &Point) -> (f64, [Vec3; 2]) {
    let u = b - a;
    let w = c - a;
    let area = 0.5 * u.cross(&w).norm();
    let e1 = u.normalize();
    let w2 = w - w.dot(&e1) * e1;
    let e2 = w2.normalize();
    (area, [e1, e2])
}
