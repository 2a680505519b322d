//! Finite-dimensional families of test vector fields and the maximisation of
//! a linear functional over their unit sup-norm slice.
//!
//! A family member is `X = Σ_a Σ_s c[a,s] φ_s(p) ∂_a`, where `φ_s` runs over a
//! tensor-product scalar basis: Legendre polynomials (mapped to the family
//! box) in bounded coordinates, trigonometric polynomials in periodic ones.
//! In three dimensions the polynomial basis is truncated by total degree.

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::ambient::{AmbientSurface, Point, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub dim: usize,
    pub degree: usize,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub periodic: [bool; 3],
    /// Multi-indices into the per-coordinate 1-D bases.
    terms: Vec<[usize; 3]>,
    /// Number of 1-D functions per coordinate.
    n1d: [usize; 3],
}

impl Basis {
    pub fn new(amb: &AmbientSurface, degree: usize, lo: [f64; 3], hi: [f64; 3]) -> Self {
        let dim = amb.dim();
        let periodic = amb.chart.periodic;
        let mut n1d = [1usize; 3];
        for i in 0..dim {
            n1d[i] = if periodic[i] { 2 * degree.div_ceil(2) + 1 } else { degree + 1 };
        }
        let mut terms = Vec::new();
        for a in 0..n1d[0] {
            for b in 0..n1d[1] {
                for c in 0..n1d[2] {
                    let t = [a, b, c];
                    if dim == 3 {
                        let total: usize = (0..3).map(|i| Self::order(periodic[i], t[i])).sum();
                        if total > degree {
                            continue;
                        }
                    }
                    terms.push(t);
                }
            }
        }
        Basis { dim, degree, lo, hi, periodic, terms, n1d }
    }

    /// Polynomial degree / frequency of 1-D function `j`.
    fn order(periodic: bool, j: usize) -> usize {
        if periodic {
            j.div_ceil(2)
        } else {
            j
        }
    }

    pub fn scalar_len(&self) -> usize {
        self.terms.len()
    }

    pub fn len(&self) -> usize {
        self.dim * self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// 1-D basis values and derivatives along coordinate `i` at `x`.
    fn one_d(&self, i: usize, x: f64, vals: &mut [f64], ders: &mut [f64]) {
        let n = self.n1d[i];
        if self.periodic[i] {
            let per = self.hi[i] - self.lo[i];
            let w = std::f64::consts::TAU / per;
            vals[0] = 1.0;
            ders[0] = 0.0;
            for j in 1..n {
                let m = j.div_ceil(2) as f64;
                let (s, c) = (m * w * (x - self.lo[i])).sin_cos();
                if j % 2 == 1 {
                    vals[j] = c;
                    ders[j] = -m * w * s;
                } else {
                    vals[j] = s;
                    ders[j] = m * w * c;
                }
            }
        } else {
            let half = 0.5 * (self.hi[i] - self.lo[i]);
            let mid = 0.5 * (self.hi[i] + self.lo[i]);
            let t = (x - mid) / half;
            let dt = 1.0 / half;
            vals[0] = 1.0;
            ders[0] = 0.0;
            if n > 1 {
                vals[1] = t;
                ders[1] = dt;
            }
            for j in 2..n {
                let jf = j as f64;
                vals[j] = ((2.0 * jf - 1.0) * t * vals[j - 1] - (jf - 1.0) * vals[j - 2]) / jf;
                // P_j' = P_{j-2}' + (2j-1) P_{j-1}
                ders[j] = ders[j - 2] + (2.0 * jf - 1.0) * vals[j - 1] * dt;
            }
        }
    }

    /// Scalar basis values and gradients at `p`.
    pub fn scalars(&self, p: &Point) -> (Vec<f64>, Vec<Vec3>) {
        let mut v1 = [[0.0; 16]; 3];
        let mut d1 = [[0.0; 16]; 3];
        let mut vals_store: [Vec<f64>; 3] = Default::default();
        let mut ders_store: [Vec<f64>; 3] = Default::default();
        for i in 0..3 {
            let n = self.n1d[i];
            if n <= 16 {
                self.one_d_if(i, p[i], &mut v1[i][..n], &mut d1[i][..n]);
                vals_store[i] = v1[i][..n].to_vec();
                ders_store[i] = d1[i][..n].to_vec();
            } else {
                let mut v = vec![0.0; n];
                let mut d = vec![0.0; n];
                self.one_d_if(i, p[i], &mut v, &mut d);
                vals_store[i] = v;
                ders_store[i] = d;
            }
        }
        let mut vals = Vec::with_capacity(self.terms.len());
        let mut grads = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let a = [vals_store[0][t[0]], vals_store[1][t[1]], vals_store[2][t[2]]];
            let da = [ders_store[0][t[0]], ders_store[1][t[1]], ders_store[2][t[2]]];
            vals.push(a[0] * a[1] * a[2]);
            grads.push(Vec3::new(da[0] * a[1] * a[2], a[0] * da[1] * a[2], a[0] * a[1] * da[2]));
        }
        (vals, grads)
    }

    fn one_d_if(&self, i: usize, x: f64, vals: &mut [f64], ders: &mut [f64]) {
        if i < self.dim {
            self.one_d(i, x, vals, ders);
        } else {
            vals[0] = 1.0;
            ders[0] = 0.0;
        }
    }

    pub fn value(&self, _amb: &AmbientSurface, p: &Point, coeffs: &DVector<f64>) -> Vec3 {
        let (vals, _) = self.scalars(p);
        let ns = self.scalar_len();
        let mut out = Vec3::zeros();
        for a in 0..self.dim {
            out[a] = (0..ns).map(|s| coeffs[a * ns + s] * vals[s]).sum();
        }
        out
    }

    pub fn jacobian(&self, _amb: &AmbientSurface, p: &Point, coeffs: &DVector<f64>) -> Matrix3<f64> {
        let (_, grads) = self.scalars(p);
        let ns = self.scalar_len();
        let mut m = Matrix3::zeros();
        for a in 0..self.dim {
            for s in 0..ns {
                let c = coeffs[a * ns + s];
                for j in 0..self.dim {
                    m[(a, j)] += c * grads[s][j];
                }
            }
        }
        m
    }

    /// Coefficients of `δV` against each basis field, accumulated from
    /// quadrature nodes `(point, g-orthonormal frame, weight)`.
    pub fn first_variation_vector<'a, I>(&self, amb: &AmbientSurface, nodes: I) -> DVector<f64>
    where
        I: IntoIterator<Item = (Point, &'a [Vec3], f64)>,
    {
        let ns = self.scalar_len();
        let mut out = vec![crate::numerics::KahanSum::new(); self.len()];
        for (p, frame, w) in nodes {
            let (vals, grads) = self.scalars(&p);
            let g = amb.metric(&p);
            let gamma = amb.christoffel(&p);
            for e in frame {
                let ge = g * e;
                // γ_a = Σ_k ge_k Γ^k_{i a} e^i
                let mut gam = [0.0; 3];
                for (a, ga) in gam.iter_mut().enumerate().take(self.dim) {
                    let mut s = 0.0;
                    for k in 0..self.dim {
                        for i in 0..self.dim {
                            s += ge[k] * gamma[k][(i, a)] * e[i];
                        }
                    }
                    *ga = s;
                }
                for a in 0..self.dim {
                    for s in 0..ns {
                        let de = grads[s].dot(e);
                        out[a * ns + s].add(w * (de * ge[a] + vals[s] * gam[a]));
                    }
                }
            }
        }
        DVector::from_iterator(self.len(), out.iter().map(|k| k.value()))
    }
}

/// Test-family configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestFamily {
    pub degree: usize,
    /// Constraint-grid resolution per non-degenerate axis.
    pub grid: usize,
    /// Lipschitz budget cap for accepted fields.
    pub lipschitz_cap: f64,
    /// Maximum sup-norm iterations of the minimax solver.
    pub max_iter: usize,
}

impl Default for TestFamily {
    fn default() -> Self {
        TestFamily { degree: 4, grid: 33, lipschitz_cap: 50.0, max_iter: 400 }
    }
}

impl TestFamily {
    pub fn with_degree(degree: usize) -> Self {
        TestFamily { degree, ..Default::default() }
    }
}

/// Result of a sup-norm constrained maximisation on the constraint points.
#[derive(Debug, Clone)]
pub struct Maximizer {
    /// Coefficients scaled so the constraint-point maximum of `|X|` is 1.
    pub coeffs: DVector<f64>,
    /// `gᵀc` for those coefficients.
    pub value: f64,
    pub iterations: usize,
}

/// Precomputed per-point data for norm evaluation.
struct NormPoints {
    phi: DMatrix<f64>,
    metric: Vec<Matrix3<f64>>,
}

impl NormPoints {
    fn new(basis: &Basis, amb: &AmbientSurface, pts: &[Point]) -> Self {
        let ns = basis.scalar_len();
        let mut phi = DMatrix::zeros(pts.len(), ns);
        let mut metric = Vec::with_capacity(pts.len());
        for (q, p) in pts.iter().enumerate() {
            let (vals, _) = basis.scalars(p);
            for s in 0..ns {
                phi[(q, s)] = vals[s];
            }
            metric.push(amb.metric(p));
        }
        NormPoints { phi, metric }
    }

    /// Field norms at every point for coefficient vector `c`.
    fn norms(&self, dim: usize, c: &DVector<f64>) -> Vec<f64> {
        let ns = self.phi.ncols();
        let comps: Vec<DVector<f64>> = (0..dim).map(|a| &self.phi * c.rows(a * ns, ns)).collect();
        (0..self.phi.nrows())
            .map(|q| {
                let g = &self.metric[q];
                let mut s = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        s += g[(a, b)] * comps[a][q] * comps[b][q];
                    }
                }
                s.max(0.0).sqrt()
            })
            .collect()
    }
}

/// Maximum of `|X_c|_g` over `pts`, evaluated point by point in parallel.
pub fn sup_norm(amb: &AmbientSurface, basis: &Basis, c: &DVector<f64>, pts: &[Point]) -> f64 {
    use rayon::prelude::*;
    pts.par_chunks(4096)
        .map(|chunk| {
            chunk
                .iter()
                .map(|p| amb.norm(p, &basis.value(amb, p, c)))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Maximise `gᵀc` subject to `|X_c(q)|_g ≤ 1` at the constraint points, by
/// Lawson's iteratively reweighted least squares for the equivalent minimax
/// problem `min max_q |X_c(q)|` subject to `gᵀc = 1`.
pub fn maximize_linear(
    amb: &AmbientSurface,
    basis: &Basis,
    g: &DVector<f64>,
    constraint_pts: &[Point],
    max_iter: usize,
    warm: Option<&DVector<f64>>,
) -> Result<Maximizer> {
    let m = basis.len();
    let dim = basis.dim;
    let ns = basis.scalar_len();
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite first-variation vector".into()));
    }
    if g.norm() == 0.0 || m == 0 || constraint_pts.is_empty() {
        return Ok(Maximizer { coeffs: DVector::zeros(m), value: 0.0, iterations: 0 });
    }
    let np = NormPoints::new(basis, amb, constraint_pts);
    let nq = constraint_pts.len();
    // which metric blocks are not identically zero
    let mut active = [[false; 3]; 3];
    for gq in &np.metric {
        for a in 0..dim {
            for b in 0..dim {
                if gq[(a, b)] != 0.0 {
                    active[a][b] = true;
                }
            }
        }
    }
    let mut w = vec![1.0 / nq as f64; nq];
    let mut best_c: Option<DVector<f64>> = None;
    let mut best_ratio = 0.0;
    let mut iterations = 0;
    let consider = |c: &DVector<f64>, best_c: &mut Option<DVector<f64>>, best_ratio: &mut f64| -> Vec<f64> {
        let norms = np.norms(dim, c);
        let mx = norms.iter().cloned().fold(0.0, f64::max);
        let val = g.dot(c);
        if mx > 0.0 && val.is_finite() {
            let r = val / mx;
            if r > *best_ratio {
                *best_ratio = r;
                *best_c = Some(c / mx);
            }
        }
        norms
    };
    if let Some(c0) = warm {
        if c0.len() == m {
            let norms = consider(c0, &mut best_c, &mut best_ratio);
            // seed the weights from the warm start's near-active set
            let mx = norms.iter().cloned().fold(0.0, f64::max);
            if mx > 0.0 {
                for q in 0..nq {
                    w[q] = (norms[q] / mx).powi(8) + 1e-6;
                }
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= s);
            }
        }
    }
    let mut last_best = best_ratio;
    let mut stall = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        // M = Σ_q w_q A_qᵀ g_q A_q, assembled blockwise
        let mut mat = DMatrix::<f64>::zeros(m, m);
        for a in 0..dim {
            for b in a..dim {
                if !active[a][b] {
                    continue;
                }
                let mut scaled = np.phi.clone();
                for q in 0..nq {
                    let f = w[q] * np.metric[q][(a, b)];
                    scaled.row_mut(q).scale_mut(f);
                }
                let block = np.phi.transpose() * scaled;
                mat.view_mut((a * ns, b * ns), (ns, ns)).copy_from(&block);
                if a != b {
                    mat.view_mut((b * ns, a * ns), (ns, ns)).copy_from(&block.transpose());
                }
            }
        }
        let trace = mat.trace() / m as f64;
        for i in 0..m {
            mat[(i, i)] += 1e-12 * trace.max(1e-300);
        }
        let sol = match mat.clone().cholesky() {
            Some(ch) => ch.solve(g),
            None => match mat.lu().solve(g) {
                Some(s) => s,
                None => break,
            },
        };
        let denom = g.dot(&sol);
        if !(denom > 0.0) || !denom.is_finite() {
            break;
        }
        let c = sol / denom;
        let norms = consider(&c, &mut best_c, &mut best_ratio);
        let s: f64 = (0..nq).map(|q| w[q] * norms[q]).sum();
        if !(s > 0.0) {
            break;
        }
        for q in 0..nq {
            w[q] = w[q] * norms[q] / s;
        }
        if best_ratio > last_best * (1.0 + 1e-7) {
            last_best = best_ratio;
            stall = 0;
        } else {
            stall += 1;
            if stall >= 25 {
                break;
            }
        }
    }
    let coeffs = best_c.ok_or_else(|| Error::Numeric("sup-norm maximisation produced no admissible field".into()))?;
    let value = g.dot(&coeffs);
    if !value.is_finite() {
        return Err(Error::Numeric("non-finite maximisation value".into()));
    }
    Ok(Maximizer { coeffs, value, iterations })
}

/// Lift coefficients from `small` into `large` (same box, higher degree).
pub fn lift(small: &Basis, large: &Basis, c: &DVector<f64>) -> DVector<f64> {
    let index: std::collections::HashMap<[usize; 3], usize> =
        large.terms.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let (ns, nl) = (small.scalar_len(), large.scalar_len());
    let mut out = DVector::zeros(large.len());
    for a in 0..small.dim {
        for (s, t) in small.terms.iter().enumerate() {
            if let Some(&j) = index.get(t) {
                out[a * nl + j] = c[a * ns + s];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_derivatives_match_finite_differences() {
        let amb = AmbientSurface::plane();
        let b = Basis::new(&amb, 6, [-1.5, -1.0, 0.0], [1.0, 2.0, 0.0]);
        assert_eq!(b.scalar_len(), 49);
        let p = Point::new(0.3, 0.7, 0.0);
        let (_, grads) = b.scalars(&p);
        let h = 1e-6;
        for i in 0..2 {
            let mut a = p;
            a[i] += h;
            let mut c = p;
            c[i] -= h;
            let (va, _) = b.scalars(&a);
            let (vc, _) = b.scalars(&c);
            for s in 0..b.scalar_len() {
                let fd = (va[s] - vc[s]) / (2.0 * h);
                assert!((fd - grads[s][i]).abs() < 1e-6, "term {s} axis {i}");
            }
        }
    }

    #[test]
    fn periodic_basis_is_periodic_and_nested() {
        let amb = AmbientSurface::revolution("1 + z^2", -2.0, 2.0).unwrap();
        let b4 = Basis::new(&amb, 4, [-1.0, 0.0, 0.0], [1.0, std::f64::consts::TAU, 0.0]);
        let (v0, _) = b4.scalars(&Point::new(0.2, 0.1, 0.0));
        let (v1, _) = b4.scalars(&Point::new(0.2, 0.1 + std::f64::consts::TAU, 0.0));
        for (a, b) in v0.iter().zip(&v1) {
            assert!((a - b).abs() < 1e-12);
        }
        let b2 = Basis::new(&amb, 2, [-1.0, 0.0, 0.0], [1.0, std::f64::consts::TAU, 0.0]);
        assert!(b2.scalar_len() < b4.scalar_len());
    }

    #[test]
    fn lifted_coefficients_give_the_same_field() {
        let amb = AmbientSurface::plane();
        let b2 = Basis::new(&amb, 2, [-1.0, -1.0, 0.0], [1.0, 1.0, 0.0]);
        let b5 = Basis::new(&amb, 5, [-1.0, -1.0, 0.0], [1.0, 1.0, 0.0]);
        let c = DVector::from_fn(b2.len(), |i, _| (i as f64 * 0.37).sin());
        let c5 = lift(&b2, &b5, &c);
        let p = Point::new(0.3, -0.6, 0.0);
        assert!((b2.value(&amb, &p, &c) - b5.value(&amb, &p, &c5)).norm() < 1e-14);
    }

    #[test]
    fn total_degree_truncation_in_three_dimensions() {
        let amb = AmbientSurface::space();
        let b = Basis::new(&amb, 2, [-1.0; 3], [1.0; 3]);
        // monomials of total degree ≤ 2 in 3 variables
        assert_eq!(b.scalar_len(), 10);
        assert_eq!(b.len(), 30);
    }

    #[test]
    fn maximizer_recovers_dual_norm_of_point_evaluation() {
        // functional c ↦ X(p0)·e_x on the plane: sup over |X| ≤ 1 is 1
        let amb = AmbientSurface::plane();
        let basis = Basis::new(&amb, 2, [-1.0, -1.0, 0.0], [1.0, 1.0, 0.0]);
        let p0 = Point::new(0.2, -0.3, 0.0);
        let (vals, _) = basis.scalars(&p0);
        let ns = basis.scalar_len();
        let mut g = DVector::zeros(basis.len());
        for s in 0..ns {
            g[s] = vals[s];
        }
        let mut pts = Vec::new();
        for i in 0..21 {
            for j in 0..21 {
                pts.push(Point::new(-1.0 + 0.1 * i as f64, -1.0 + 0.1 * j as f64, 0.0));
            }
        }
        pts.push(p0);
        let r = maximize_linear(&amb, &basis, &g, &pts, 400, None).unwrap();
        assert!(r.value <= 1.0 + 1e-12);
        assert!(r.value > 0.97, "{}", r.value);
        assert!((sup_norm(&amb, &basis, &r.coeffs, &pts) - 1.0).abs() < 1e-12);
    }
}
