//! Discrete varifolds: finite weighted atoms on the Grassmann bundle, their
//! mass, spatial support and first variation.
//!
//! An atom may carry the element it came from. Its first variation is then
//! integrated over the element with the mesh quadrature, so mesh-backed
//! varifolds see the same discrete geometry as the mesh module.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ambient::{AmbientRef, AmbientSurface, Point, Vec3};
use crate::error::{Error, Result};
use crate::family::{lift, maximize_linear, sup_norm, Basis, TestFamily};
use crate::field::VectorField;
use crate::mesh::{chord_nodes, Cells, MeshSurface};
use crate::numerics::{triangle7, KahanSum};

/// Tolerance for g-orthonormality of atom planes.
pub const FRAME_TOL: f64 = 1e-10;

/// Where an atom's mass lives.
#[derive(Debug, Clone, PartialEq)]
pub enum Extent {
    /// Concentrated at the atom point.
    Point,
    /// Spread along the coordinate chord `a → b`.
    Chord { a: Point, b: Point },
    /// Spread over a Euclidean triangle.
    Triangle { a: Point, b: Point, c: Point },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarifoldAtom {
    pub point: Point,
    /// g-orthonormal basis of the k-plane.
    pub plane: Vec<Vec3>,
    pub weight: f64,
    pub extent: Extent,
}

#[derive(Debug, Clone)]
pub struct DiscreteVarifold {
    pub k: usize,
    pub ambient: AmbientRef,
    pub atoms: Vec<VarifoldAtom>,
    /// Source mesh and the factor its weights were scaled by.
    mesh: Option<(Arc<MeshSurface>, f64)>,
}

/// Certified lower bound for `|δV|` with the field that attains it.
#[derive(Debug, Clone)]
pub struct NormBound {
    pub value: f64,
    pub degree: usize,
    pub field: VectorField,
    /// Sup norm of `field` over the certification set (≤ 1).
    pub sup_norm: f64,
    pub lipschitz: f64,
}

impl DiscreteVarifold {
    pub fn new(ambient: AmbientRef, k: usize, atoms: Vec<VarifoldAtom>) -> Result<Self> {
        if k == 0 || k > ambient.dim() {
            return Err(Error::Validation(format!("varifold dimension {k} invalid in dim {}", ambient.dim())));
        }
        for (i, a) in atoms.iter().enumerate() {
            if !(a.weight >= 0.0) || !a.weight.is_finite() {
                return Err(Error::Validation(format!("atom {i} has invalid weight {}", a.weight)));
            }
            if a.plane.len() != k {
                return Err(Error::Validation(format!("atom {i} plane has {} vectors, expected {k}", a.plane.len())));
            }
            ambient.chart.check(&a.point)?;
            let g = ambient.metric(&a.point);
            for (x, e) in a.plane.iter().enumerate() {
                for (y, f) in a.plane.iter().enumerate() {
                    let want = if x == y { 1.0 } else { 0.0 };
                    let got = (e.transpose() * g * f)[0];
                    if (got - want).abs() > FRAME_TOL {
                        return Err(Error::Validation(format!("atom {i} plane is not g-orthonormal ({got:.3e})")));
                    }
                }
            }
        }
        Ok(DiscreteVarifold { k, ambient, atoms, mesh: None })
    }

    pub fn empty(ambient: AmbientRef, k: usize) -> Self {
        DiscreteVarifold { k, ambient, atoms: vec![], mesh: None }
    }

    /// Point atom with plane spanned by `dirs`, g-orthonormalised at `p`.
    pub fn atom(amb: &AmbientSurface, p: Point, dirs: &[Vec3], weight: f64) -> Result<VarifoldAtom> {
        Ok(VarifoldAtom { point: p, plane: orthonormalize(amb, &p, dirs)?, weight, extent: Extent::Point })
    }

    /// One atom per element: barycentre, tangent plane, element measure.
    pub fn from_mesh(mesh: &MeshSurface) -> Result<Self> {
        let mut atoms = Vec::with_capacity(mesh.element_count());
        for e in 0..mesh.element_count() {
            let w = mesh.element_measure(e);
            if !(w > crate::mesh::MIN_ELEMENT_MEASURE) {
                return Err(Error::InvalidMesh(format!("element {e} is degenerate")));
            }
            let vs = mesh.element_vertices(e);
            let extent = match mesh.cells {
                Cells::Segments(_) => Extent::Chord { a: mesh.vertices[vs[0]], b: mesh.vertices[vs[1]] },
                Cells::Triangles(_) => {
                    Extent::Triangle { a: mesh.vertices[vs[0]], b: mesh.vertices[vs[1]], c: mesh.vertices[vs[2]] }
                }
            };
            atoms.push(VarifoldAtom { point: mesh.element_center(e), plane: mesh.element_frame(e), weight: w, extent });
        }
        Ok(DiscreteVarifold { k: mesh.k(), ambient: mesh.ambient.clone(), atoms, mesh: Some((Arc::new(mesh.clone()), 1.0)) })
    }

    pub fn source_mesh(&self) -> Option<&MeshSurface> {
        self.mesh.as_ref().map(|(m, _)| &**m)
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.iter().all(|a| a.weight == 0.0)
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).collect::<KahanSum>().value()
    }

    /// Atom base points with positive weight, deduplicated at resolution `tol`.
    pub fn spatial_support(&self, tol: f64) -> Result<Vec<Point>> {
        if !(tol > 0.0) {
            return Err(Error::Validation(format!("support tolerance {tol} must be positive")));
        }
        let mut seen: HashMap<[i64; 3], ()> = HashMap::new();
        let mut out = Vec::new();
        for a in &self.atoms {
            if a.weight > 0.0 {
                let key = [0, 1, 2].map(|i| (a.point[i] / tol).round() as i64);
                if seen.insert(key, ()).is_none() {
                    out.push(a.point);
                }
            }
        }
        Ok(out)
    }

    /// Quadrature nodes `(point, frame, weight)` of all atoms.
    pub fn nodes(&self) -> Vec<(Point, Vec<Vec3>, f64)> {
        let amb = &*self.ambient;
        let mut out = Vec::new();
        for a in &self.atoms {
            match &a.extent {
                Extent::Point => out.push((a.point, a.plane.clone(), a.weight)),
                Extent::Chord { a: p, b: q } => {
                    let nodes = chord_nodes(amb, p, q);
                    let total: f64 = nodes.iter().map(|n| n.2).sum();
                    for (x, t, w) in nodes {
                        out.push((x, vec![t], a.weight * w / total));
                    }
                }
                Extent::Triangle { a: p, b: q, c: r } => {
                    for (bc, w) in triangle7() {
                        out.push((bc[0] * p + bc[1] * q + bc[2] * r, a.plane.clone(), a.weight * w));
                    }
                }
            }
        }
        out
    }

    /// `δV(X) = Σ w · div_S X`.
    pub fn first_variation(&self, x: &VectorField) -> Result<f64> {
        let amb = &*self.ambient;
        let mut s = KahanSum::new();
        for (p, frame, w) in self.nodes() {
            if w != 0.0 {
                s.add(w * x.div_frame(amb, &p, &frame)?);
            }
        }
        Ok(s.value())
    }

    /// `|∂M| + ∫|H|` of the source mesh, scaled with the weights.
    pub fn geometric_first_variation(&self) -> Option<f64> {
        self.mesh.as_ref().map(|(m, s)| s * m.first_variation_total())
    }

    pub fn scale(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidScale(lambda));
        }
        let mut v = self.clone();
        for a in v.atoms.iter_mut() {
            a.weight *= lambda;
        }
        v.mesh = v.mesh.map(|(m, s)| (m, s * lambda));
        Ok(v)
    }

    /// `a·self + b·other` as a measure (atoms concatenated).
    pub fn combine(&self, a: f64, other: &DiscreteVarifold, b: f64) -> Result<Self> {
        if self.k != other.k || !Arc::ptr_eq(&self.ambient, &other.ambient) && self.ambient.name != other.ambient.name {
            return Err(Error::Validation("varifolds differ in dimension or ambient".into()));
        }
        let mut atoms = self.scale(a)?.atoms;
        atoms.extend(other.scale(b)?.atoms);
        Ok(DiscreteVarifold { k: self.k, ambient: self.ambient.clone(), atoms, mesh: None })
    }

    /// Coordinate box of the nodes, with margins; periodic coordinates span
    /// their full period.
    fn family_box(&self, nodes: &[(Point, Vec<Vec3>, f64)]) -> ([f64; 3], [f64; 3], [bool; 3]) {
        let chart = &self.ambient.chart;
        let dim = chart.dim;
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for (p, _, _) in nodes {
            for i in 0..dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let mut degenerate = [false; 3];
        for i in 0..3 {
            if i >= dim {
                lo[i] = 0.0;
                hi[i] = 0.0;
                continue;
            }
            if chart.periodic[i] {
                lo[i] = chart.lo[i];
                hi[i] = chart.hi[i];
                continue;
            }
            let ext = hi[i] - lo[i];
            degenerate[i] = ext <= 1e-12;
            let margin = 0.1 * ext + 0.05;
            // stay clear of polar chart edges
            let inset = 1e-6 * (chart.hi[i] - chart.lo[i]);
            lo[i] = (lo[i] - margin).max(chart.lo[i] + inset);
            hi[i] = (hi[i] + margin).min(chart.hi[i] - inset);
        }
        (lo, hi, degenerate)
    }

    /// Certified lower bound for `|δV|` over the unit sup-norm slice of `fam`.
    /// The family is optimised degree by degree with warm starts and the
    /// best certified value is kept, so the bound never decreases with the
    /// degree.
    pub fn first_variation_norm_lb(&self, fam: &TestFamily) -> Result<NormBound> {
        let amb = &*self.ambient;
        let dim = amb.dim();
        let nodes: Vec<_> = self.nodes().into_iter().filter(|n| n.2 > 0.0).collect();
        let zero = NormBound { value: 0.0, degree: fam.degree, field: VectorField::Zero, sup_norm: 0.0, lipschitz: 0.0 };
        if nodes.is_empty() {
            return Ok(zero);
        }
        if fam.degree == 0 || fam.grid < 2 {
            return Err(Error::Validation("test family needs degree ≥ 1 and grid ≥ 2".into()));
        }
        let (lo, hi, degenerate) = self.family_box(&nodes);
        let axis = |i: usize, fine: bool| -> Vec<f64> {
            let base = if dim == 3 { fam.grid / 2 + 1 } else { fam.grid };
            let n = if i >= dim {
                1
            } else if degenerate[i] {
                3
            } else if fine {
                2 * base - 1
            } else {
                base
            };
            if n == 1 {
                return vec![lo[i]];
            }
            if amb.chart.periodic[i] {
                (0..n).map(|t| lo[i] + (hi[i] - lo[i]) * t as f64 / n as f64).collect()
            } else {
                (0..n).map(|t| lo[i] + (hi[i] - lo[i]) * t as f64 / (n - 1) as f64).collect()
            }
        };
        let grid = |fine: bool| -> Vec<Point> {
            let (a0, a1, a2) = (axis(0, fine), axis(1, fine), axis(2, fine));
            let mut out = Vec::with_capacity(a0.len() * a1.len() * a2.len());
            for &x in &a0 {
                for &y in &a1 {
                    for &z in &a2 {
                        out.push(Point::new(x, y, z));
                    }
                }
            }
            out
        };
        // constraint set: coarse grid plus (a subsample of) the support
        let mut constraint = grid(false);
        let support: Vec<Point> = nodes.iter().map(|n| n.0).collect();
        let stride = (support.len() / 2000).max(1);
        constraint.extend(support.iter().step_by(stride).copied());
        constraint.extend(self.atoms.iter().filter(|a| a.weight > 0.0).map(|a| a.point).step_by(stride));
        // certification set: fine grid plus every node and atom point
        let mut cert = grid(true);
        cert.extend(support.iter().copied());
        cert.extend(self.atoms.iter().map(|a| a.point));
        cert.extend(constraint.iter().copied());

        let mut best: Option<(f64, usize, Arc<Basis>, DVector<f64>, f64)> = None;
        let mut prev: Option<(Basis, DVector<f64>)> = None;
        for d in 1..=fam.degree {
            let basis = Basis::new(amb, d, lo, hi);
            let g = basis.first_variation_vector(amb, nodes.iter().map(|(p, f, w)| (*p, f.as_slice(), *w)));
            let warm = prev.as_ref().map(|(b, c)| lift(b, &basis, c));
            let res = maximize_linear(amb, &basis, &g, &constraint, fam.max_iter, warm.as_ref())?;
            let sup = sup_norm(amb, &basis, &res.coeffs, &cert);
            if res.value > 0.0 && sup > 0.0 {
                let certified = res.value / sup.max(1.0);
                if best.as_ref().map_or(true, |b| certified > b.0) {
                    let c = if sup > 1.0 { &res.coeffs / sup } else { res.coeffs.clone() };
                    best = Some((certified, d, Arc::new(basis.clone()), c, sup.min(1.0)));
                }
            }
            prev = Some((basis, res.coeffs));
        }
        let Some((mut value, degree, basis, mut coeffs, mut sup)) = best else {
            return Ok(zero);
        };
        let mut field = VectorField::Expansion { basis: basis.clone(), coeffs: coeffs.clone() };
        let lipschitz = field.bounds(amb, &grid(false))?.lipschitz;
        let mut lip = lipschitz;
        if lipschitz > fam.lipschitz_cap {
            // shrink into the Lipschitz budget; still an admissible field
            let f = fam.lipschitz_cap / lipschitz;
            coeffs *= f;
            value *= f;
            sup *= f;
            lip = fam.lipschitz_cap;
            field = VectorField::Expansion { basis, coeffs };
        }
        if !value.is_finite() {
            return Err(Error::Numeric("non-finite first-variation bound".into()));
        }
        Ok(NormBound { value, degree, field, sup_norm: sup, lipschitz: lip })
    }

    /// Alias of the certified lower bound: small values certify approximate
    /// stationarity relative to the family.
    pub fn stationarity_residual(&self, fam: &TestFamily) -> Result<f64> {
        Ok(self.first_variation_norm_lb(fam)?.value)
    }
}

/// Gram–Schmidt in the metric at `p`.
pub fn orthonormalize(amb: &AmbientSurface, p: &Point, dirs: &[Vec3]) -> Result<Vec<Vec3>> {
    let mut out: Vec<Vec3> = Vec::with_capacity(dirs.len());
    for d in dirs {
        let mut v = *d;
        for e in &out {
            v -= amb.inner(p, &v, e) * e;
        }
        let n = amb.norm(p, &v);
        if !(n > 1e-14) {
            return Err(Error::Validation("plane directions are linearly dependent".into()));
        }
        out.push(v / n);
    }
    Ok(out)
}

/// A fixed family of bounded 1-Lipschitz test functions on the Grassmann
/// bundle, used to compare varifolds weakly.
#[derive(Debug, Clone)]
pub struct BlFamily {
    members: Vec<BlFunction>,
}

#[derive(Debug, Clone)]
enum BlFunction {
    Constant,
    /// `min(1, max(0, ρ − d(p, c)))`
    Tent { center: Point, rho: f64 },
    /// `tent · |P_S u|² / 3`
    TentPlane { center: Point, rho: f64, dir: Vec3 },
}

impl BlFamily {
    /// `size` members (the constant function included) with centres drawn
    /// in the coordinate box `[lo, hi]`.
    pub fn new(amb: &AmbientSurface, lo: [f64; 3], hi: [f64; 3], size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = amb.dim();
        let edim = if amb.has_embedding() { amb.embedding_dim().unwrap_or(dim) } else { dim };
        let span = (0..dim).map(|i| hi[i] - lo[i]).fold(0.0, f64::max).max(1e-3);
        let mut members = vec![BlFunction::Constant];
        while members.len() < size {
            let mut c = Point::zeros();
            for i in 0..dim {
                c[i] = if hi[i] > lo[i] { rng.gen_range(lo[i]..=hi[i]) } else { lo[i] };
            }
            let c = amb.chart.wrap(&c);
            let rho = rng.gen_range(0.05..0.5) * span;
            if members.len() % 2 == 1 {
                members.push(BlFunction::Tent { center: c, rho });
            } else {
                let mut u = Vec3::zeros();
                for i in 0..edim {
                    u[i] = rng.gen_range(-1.0..1.0);
                }
                let u = if u.norm() > 0.0 { u.normalize() } else { Vec3::x() };
                members.push(BlFunction::TentPlane { center: c, rho, dir: u });
            }
        }
        BlFamily { members }
    }

    /// Default family over the union of the varifolds' supports.
    pub fn for_varifolds(vs: &[&DiscreteVarifold], size: usize, seed: u64) -> Result<Self> {
        let first = vs.first().ok_or_else(|| Error::InsufficientData("no varifolds".into()))?;
        let amb = &*first.ambient;
        let dim = amb.dim();
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in vs {
            for a in &v.atoms {
                for i in 0..dim {
                    lo[i] = lo[i].min(a.point[i]);
                    hi[i] = hi[i].max(a.point[i]);
                }
            }
        }
        for i in 0..3 {
            if i >= dim || !lo[i].is_finite() {
                lo[i] = if i < dim { amb.chart.lo[i] } else { 0.0 };
                hi[i] = if i < dim { amb.chart.hi[i] } else { 0.0 };
            }
            if i < dim && amb.chart.periodic[i] {
                lo[i] = amb.chart.lo[i];
                hi[i] = amb.chart.hi[i];
            }
        }
        Ok(Self::new(amb, lo, hi, size, seed))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn eval(&self, f: usize, amb: &AmbientSurface, p: &Point, plane: &[Vec3]) -> f64 {
        let tent = |c: &Point, rho: f64| (rho - amb.chord_distance(p, c)).clamp(0.0, 1.0);
        match &self.members[f] {
            BlFunction::Constant => 1.0,
            BlFunction::Tent { center, rho } => tent(center, *rho),
            BlFunction::TentPlane { center, rho, dir } => {
                let t = tent(center, *rho);
                if t == 0.0 {
                    return 0.0;
                }
                let proj: f64 = match amb.embed_jacobian(p) {
                    Some(j) if !amb.is_euclidean() => plane.iter().map(|e| (j * e).dot(dir).powi(2)).sum(),
                    _ => {
                        let uu = amb.inner(p, dir, dir);
                        plane.iter().map(|e| amb.inner(p, e, dir).powi(2)).sum::<f64>() / uu
                    }
                };
                t * proj.min(1.0) / 3.0
            }
        }
    }

    /// `∫ f dV` for every member.
    pub fn integrals(&self, v: &DiscreteVarifold) -> Vec<f64> {
        let amb = &*v.ambient;
        let nodes = v.nodes();
        (0..self.members.len())
            .map(|f| nodes.iter().map(|(p, s, w)| w * self.eval(f, amb, p, s)).collect::<KahanSum>().value())
            .collect()
    }
}

/// Bounded-Lipschitz surrogate distance over a fixed test family.
pub fn bl_distance(v1: &DiscreteVarifold, v2: &DiscreteVarifold, fam: &BlFamily) -> Result<f64> {
    if v1.k != v2.k {
        return Err(Error::Validation("varifolds differ in dimension".into()));
    }
    let a = fam.integrals(v1);
    let b = fam.integrals(v2);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn plane() -> AmbientRef {
        Arc::new(AmbientSurface::plane())
    }

    #[test]
    fn mesh_varifold_mass_matches_measure() {
        let m = MeshSurface::circle_level(8).unwrap();
        let v = DiscreteVarifold::from_mesh(&m).unwrap();
        assert_eq!(v.atoms.len(), 1024);
        assert!((v.mass() - m.measure()).abs() < 1e-12);
        assert!((v.mass() - TAU).abs() < 1e-4);
    }

    #[test]
    fn inscribed_square_atoms() {
        let m = MeshSurface::circle_level(0).unwrap();
        let v = DiscreteVarifold::from_mesh(&m).unwrap();
        assert_eq!(v.atoms.len(), 4);
        for a in &v.atoms {
            assert!((a.weight - 2f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn position_field_gives_k_times_mass() {
        let m = MeshSurface::circle_level(8).unwrap();
        let v = DiscreteVarifold::from_mesh(&m).unwrap();
        let dv = v.first_variation(&VectorField::position()).unwrap();
        assert!((dv - v.mass()).abs() < 1e-10);
        let c = VectorField::Constant(Vec3::new(0.3, -1.0, 0.0));
        assert!(v.first_variation(&c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn scaling_and_empty() {
        let m = MeshSurface::segment(plane(), [0.0, 0.0], [2.0, 0.0], 1).unwrap();
        let v = DiscreteVarifold::from_mesh(&m).unwrap();
        assert_eq!(v.atoms.len(), 1);
        assert!((v.mass() - 2.0).abs() < 1e-15);
        assert_eq!(v.scale(0.0).unwrap().mass(), 0.0);
        assert!(matches!(v.scale(-1.0), Err(Error::InvalidScale(_))));
        let e = DiscreteVarifold::empty(plane(), 1);
        assert_eq!(e.mass(), 0.0);
        assert!(e.spatial_support(1e-9).unwrap().is_empty());
        assert_eq!(e.first_variation_norm_lb(&TestFamily::default()).unwrap().value, 0.0);
    }

    #[test]
    fn non_orthonormal_planes_are_rejected() {
        let a = VarifoldAtom { point: Point::zeros(), plane: vec![Vec3::new(2.0, 0.0, 0.0)], weight: 1.0, extent: Extent::Point };
        assert!(DiscreteVarifold::new(plane(), 1, vec![a]).is_err());
    }

    #[test]
    fn segment_norm_bound_is_near_two() {
        let m = MeshSurface::segment(plane(), [0.0, 0.0], [1.0, 0.0], 16).unwrap();
        let v = DiscreteVarifold::from_mesh(&m).unwrap();
        let lb = v.first_variation_norm_lb(&TestFamily::with_degree(4)).unwrap();
        assert!(lb.value >= 1.9 && lb.value <= 2.0 + 1e-9, "{}", lb.value);
    }

    #[test]
    fn bl_distance_sees_mass() {
        let m = MeshSurface::circle_level(5).unwrap();
        let v = DiscreteVarifold::from_mesh(&m).unwrap();
        let v2 = v.scale(2.0).unwrap();
        let fam = BlFamily::for_varifolds(&[&v, &v2], 64, 7).unwrap();
        assert_eq!(bl_distance(&v, &v, &fam).unwrap(), 0.0);
        assert!(bl_distance(&v, &v2, &fam).unwrap() >= v.mass() - 1e-12);
    }
}
