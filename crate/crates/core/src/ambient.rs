//! Riemannian ambient spaces, compact domains with mean-convex boundary,
//! and isometric embeddings into Euclidean space.
//!
//! Points are stored as 3-vectors of chart coordinates. Two-dimensional
//! ambients use the first two components; the third is always zero and the
//! metric is padded with `g_33 = 1` so every 3×3 tensor stays invertible.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::expr::Formula;
use crate::numerics::golden_min;

pub type Point = Vector3<f64>;
pub type Vec3 = Vector3<f64>;

/// Christoffel symbols: `gamma[k][(i, j)] = Γ^k_ij`.
pub type Christoffel = [Matrix3<f64>; 3];

/// Coordinate rectangle with optional periodic coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub dim: usize,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub periodic: [bool; 3],
}

impl Chart {
    pub fn new(dim: usize, lo: [f64; 3], hi: [f64; 3], periodic: [bool; 3]) -> Self {
        Chart { dim, lo, hi, periodic }
    }

    pub fn period(&self, i: usize) -> Option<f64> {
        self.periodic[i].then(|| self.hi[i] - self.lo[i])
    }

    pub fn wrap(&self, p: &Point) -> Point {
        let mut q = *p;
        for i in 0..self.dim {
            if let Some(per) = self.period(i) {
                q[i] = self.lo[i] + (q[i] - self.lo[i]).rem_euclid(per);
            }
        }
        q
    }

    /// `q - p` using the shortest periodic image.
    pub fn delta(&self, p: &Point, q: &Point) -> Vec3 {
        let mut d = q - p;
        for i in 0..self.dim {
            if let Some(per) = self.period(i) {
                d[i] -= per * (d[i] / per).round();
            }
        }
        d
    }

    pub fn midpoint(&self, p: &Point, q: &Point) -> Point {
        self.wrap(&(p + 0.5 * self.delta(p, q)))
    }

    pub fn contains(&self, p: &Point) -> bool {
        let tol = 1e-9;
        (0..self.dim).all(|i| {
            self.periodic[i] || (p[i] >= self.lo[i] - tol && p[i] <= self.hi[i] + tol)
        }) && p.iter().all(|x| x.is_finite())
    }

    pub fn check(&self, p: &Point) -> Result<Point> {
        if self.contains(p) {
            Ok(self.wrap(p))
        } else {
            Err(Error::OutsideChart(format!("({:.6}, {:.6}, {:.6})", p[0], p[1], p[2])))
        }
    }
}

/// Closed-form metric families.
#[derive(Debug, Clone)]
pub enum MetricFamily {
    Euclidean,
    /// Polar coordinates `(θ, φ)` on the sphere of radius `radius`.
    RoundSphere { radius: f64 },
    /// Geodesic polar coordinates `(r, φ)` on the space form of curvature `curvature < 0`.
    Hyperbolic { curvature: f64 },
    /// `g = exp(2u) I` on coordinates `(x, y)`.
    Conformal { log_factor: ConformalFactor },
    /// Surface of revolution, coordinates `(z, θ)`, radius profile `r(z)`.
    Revolution { profile: Profile },
    /// Flat product `S¹(L) × ℝ`, coordinates `(s, z)` with `s` periodic.
    Product { circumference: f64 },
}

#[derive(Debug, Clone)]
pub struct Profile {
    pub r: Formula,
    pub dr: Formula,
    pub ddr: Formula,
}

impl Profile {
    pub fn parse(text: &str) -> Result<Self> {
        let r = Formula::parse(text, &["z"])?;
        let dr = r.derivative(0);
        let ddr = dr.derivative(0);
        Ok(Profile { r, dr, ddr })
    }

    pub fn eval(&self, z: f64) -> (f64, f64, f64) {
        (self.r.eval(&[z]), self.dr.eval(&[z]), self.ddr.eval(&[z]))
    }
}

#[derive(Debug, Clone)]
pub struct ConformalFactor {
    pub u: Formula,
    pub du: [Formula; 2],
    pub ddu: [Formula; 2],
}

impl ConformalFactor {
    pub fn parse(text: &str) -> Result<Self> {
        let u = Formula::parse(text, &["x", "y"])?;
        let du = [u.derivative(0), u.derivative(1)];
        let ddu = [du[0].derivative(0), du[1].derivative(1)];
        Ok(ConformalFactor { u, du, ddu })
    }
}

/// A Riemannian ambient space of dimension 2 (all families) or 3 (Euclidean).
#[derive(Debug, Clone)]
pub struct AmbientSurface {
    pub name: String,
    pub chart: Chart,
    pub family: MetricFamily,
}

pub type AmbientRef = Arc<AmbientSurface>;

impl AmbientSurface {
    pub fn euclidean(dim: usize, half_width: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(format!("euclidean dim {dim}")));
        }
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for i in 0..dim {
            lo[i] = -half_width;
            hi[i] = half_width;
        }
        Ok(AmbientSurface {
            name: format!("euclidean{dim}"),
            chart: Chart::new(dim, lo, hi, [false; 3]),
            family: MetricFamily::Euclidean,
        })
    }

    pub fn plane() -> Self {
        Self::euclidean(2, 10.0).expect("dim 2")
    }

    pub fn space() -> Self {
        Self::euclidean(3, 10.0).expect("dim 3")
    }

    pub fn round_sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Validation(format!("sphere radius {radius} must be positive")));
        }
        Ok(AmbientSurface {
            name: format!("sphere(R={radius})"),
            chart: Chart::new(2, [0.0, 0.0, 0.0], [PI, TAU, 0.0], [false, true, false]),
            family: MetricFamily::RoundSphere { radius },
        })
    }

    pub fn hyperbolic(curvature: f64, r_max: f64) -> Result<Self> {
        if !(curvature < 0.0) {
            return Err(Error::Validation(format!("hyperbolic curvature {curvature} must be negative")));
        }
        Ok(AmbientSurface {
            name: format!("hyperbolic(K={curvature})"),
            chart: Chart::new(2, [0.0, 0.0, 0.0], [r_max, TAU, 0.0], [false, true, false]),
            family: MetricFamily::Hyperbolic { curvature },
        })
    }

    pub fn conformal(log_factor: &str, lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        Ok(AmbientSurface {
            name: format!("conformal(u={log_factor})"),
            chart: Chart::new(2, [lo[0], lo[1], 0.0], [hi[0], hi[1], 0.0], [false; 3]),
            family: MetricFamily::Conformal { log_factor: ConformalFactor::parse(log_factor)? },
        })
    }

    pub fn revolution(profile: &str, z_lo: f64, z_hi: f64) -> Result<Self> {
        let profile = Profile::parse(profile)?;
        let amb = AmbientSurface {
            name: format!("revolution(r={})", profile.r),
            chart: Chart::new(2, [z_lo, 0.0, 0.0], [z_hi, TAU, 0.0], [false, true, false]),
            family: MetricFamily::Revolution { profile },
        };
        // profile must stay positive on the chart
        for i in 0..=256 {
            let z = z_lo + (z_hi - z_lo) * i as f64 / 256.0;
            if let MetricFamily::Revolution { profile } = &amb.family {
                let r = profile.r.eval(&[z]);
                if !(r > 0.0) || !r.is_finite() {
                    return Err(Error::Validation(format!("profile r({z}) = {r} is not positive")));
                }
            }
        }
        Ok(amb)
    }

    pub fn product(circumference: f64, z_half: f64) -> Result<Self> {
        if !(circumference > 0.0) {
            return Err(Error::Validation("circumference must be positive".into()));
        }
        Ok(AmbientSurface {
            name: format!("product(L={circumference})"),
            chart: Chart::new(2, [0.0, -z_half, 0.0], [circumference, z_half, 0.0], [true, false, false]),
            family: MetricFamily::Product { circumference },
        })
    }

    pub fn dim(&self) -> usize {
        self.chart.dim
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.family, MetricFamily::Euclidean)
    }

    /// Metric tensor at `p`, checking chart membership.
    pub fn metric_eval(&self, p: &Point) -> Result<Matrix3<f64>> {
        let p = self.chart.check(p)?;
        Ok(self.metric(&p))
    }

    /// Metric tensor without chart validation (hot paths).
    pub fn metric(&self, p: &Point) -> Matrix3<f64> {
        let diag = |a: f64, b: f64| Matrix3::from_diagonal(&Vector3::new(a, b, 1.0));
        match &self.family {
            MetricFamily::Euclidean | MetricFamily::Product { .. } => Matrix3::identity(),
            MetricFamily::RoundSphere { radius } => {
                let s = p[0].sin();
                diag(radius * radius, radius * radius * s * s)
            }
            MetricFamily::Hyperbolic { curvature } => {
                let a = (-curvature).sqrt();
                let f = (a * p[0]).sinh() / a;
                diag(1.0, f * f)
            }
            MetricFamily::Conformal { log_factor } => {
                let e = (2.0 * log_factor.u.eval(&[p[0], p[1]])).exp();
                diag(e, e)
            }
            MetricFamily::Revolution { profile } => {
                let (r, dr, _) = profile.eval(p[0]);
                diag(1.0 + dr * dr, r * r)
            }
        }
    }

    pub fn inner(&self, p: &Point, a: &Vec3, b: &Vec3) -> f64 {
        (a.transpose() * self.metric(p) * b)[0]
    }

    pub fn norm(&self, p: &Point, v: &Vec3) -> f64 {
        self.inner(p, v, v).max(0.0).sqrt()
    }

    /// Christoffel symbols of the second kind at `p` (closed form per family).
    pub fn christoffel(&self, p: &Point) -> Christoffel {
        let mut gamma = [Matrix3::zeros(); 3];
        match &self.family {
            MetricFamily::Euclidean | MetricFamily::Product { .. } => {}
            MetricFamily::RoundSphere { .. } => {
                let (s, c) = p[0].sin_cos();
                gamma[0][(1, 1)] = -s * c;
                gamma[1][(0, 1)] = c / s;
                gamma[1][(1, 0)] = c / s;
            }
            MetricFamily::Hyperbolic { curvature } => {
                let a = (-curvature).sqrt();
                let f = (a * p[0]).sinh() / a;
                let df = (a * p[0]).cosh();
                gamma[0][(1, 1)] = -f * df;
                gamma[1][(0, 1)] = df / f;
                gamma[1][(1, 0)] = df / f;
            }
            MetricFamily::Conformal { log_factor } => {
                let x = [p[0], p[1]];
                let du = [log_factor.du[0].eval(&x), log_factor.du[1].eval(&x)];
                for k in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            let mut v = 0.0;
                            if i == k {
                                v += du[j];
                            }
                            if j == k {
                                v += du[i];
                            }
                            if i == j {
                                v -= du[k];
                            }
                            gamma[k][(i, j)] = v;
                        }
                    }
                }
            }
            MetricFamily::Revolution { profile } => {
                let (r, dr, ddr) = profile.eval(p[0]);
                let e = 1.0 + dr * dr;
                gamma[0][(0, 0)] = dr * ddr / e;
                gamma[0][(1, 1)] = -r * dr / e;
                gamma[1][(0, 1)] = dr / r;
                gamma[1][(1, 0)] = dr / r;
            }
        }
        gamma
    }

    /// `Γ(a, b)^k = Γ^k_ij a^i b^j`.
    pub fn gamma_contract(gamma: &Christoffel, a: &Vec3, b: &Vec3) -> Vec3 {
        Vec3::new(
            (a.transpose() * gamma[0] * b)[0],
            (a.transpose() * gamma[1] * b)[0],
            (a.transpose() * gamma[2] * b)[0],
        )
    }

    /// Gauss curvature at `p` (dim 2 only), closed form for every family.
    pub fn gauss_curvature(&self, p: &Point) -> Result<f64> {
        if self.dim() != 2 {
            return Err(Error::UnsupportedDimension(format!(
                "gauss curvature needs dim 2, ambient has dim {}",
                self.dim()
            )));
        }
        let p = self.chart.check(p)?;
        Ok(match &self.family {
            MetricFamily::Euclidean | MetricFamily::Product { .. } => 0.0,
            MetricFamily::RoundSphere { radius } => 1.0 / (radius * radius),
            MetricFamily::Hyperbolic { curvature } => *curvature,
            MetricFamily::Conformal { log_factor } => {
                let x = [p[0], p[1]];
                let lap = log_factor.ddu[0].eval(&x) + log_factor.ddu[1].eval(&x);
                -(-2.0 * log_factor.u.eval(&x)).exp() * lap
            }
            MetricFamily::Revolution { profile } => {
                let (r, dr, ddr) = profile.eval(p[0]);
                let e = 1.0 + dr * dr;
                -ddr / (r * e * e)
            }
        })
    }

    /// Gauss curvature by the Brioschi formula with Richardson-extrapolated
    /// central differences of the metric coefficients (step `h`).
    pub fn gauss_curvature_fd(&self, p: &Point, h: f64) -> Result<f64> {
        if self.dim() != 2 {
            return Err(Error::UnsupportedDimension("brioschi needs dim 2".into()));
        }
        let p = self.chart.check(p)?;
        let efg = |u: f64, v: f64| {
            let g = self.metric(&Point::new(u, v, 0.0));
            [g[(0, 0)], g[(0, 1)], g[(1, 1)]]
        };
        let (u, v) = (p[0], p[1]);
        let d1 = |h: f64, du: f64, dv: f64| -> [f64; 3] {
            let a = efg(u + du * h, v + dv * h);
            let b = efg(u - du * h, v - dv * h);
            [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h), (a[2] - b[2]) / (2.0 * h)]
        };
        let d2 = |h: f64, du: f64, dv: f64| -> [f64; 3] {
            let a = efg(u + du * h, v + dv * h);
            let c = efg(u, v);
            let b = efg(u - du * h, v - dv * h);
            [
                (a[0] - 2.0 * c[0] + b[0]) / (h * h),
                (a[1] - 2.0 * c[1] + b[1]) / (h * h),
                (a[2] - 2.0 * c[2] + b[2]) / (h * h),
            ]
        };
        let dmix = |h: f64| -> [f64; 3] {
            let pp = efg(u + h, v + h);
            let pm = efg(u + h, v - h);
            let mp = efg(u - h, v + h);
            let mm = efg(u - h, v - h);
            let mut out = [0.0; 3];
            for i in 0..3 {
                out[i] = (pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * h * h);
            }
            out
        };
        let rich = |a: [f64; 3], b: [f64; 3]| -> [f64; 3] {
            [(4.0 * b[0] - a[0]) / 3.0, (4.0 * b[1] - a[1]) / 3.0, (4.0 * b[2] - a[2]) / 3.0]
        };
        let du = rich(d1(h, 1.0, 0.0), d1(h / 2.0, 1.0, 0.0));
        let dv = rich(d1(h, 0.0, 1.0), d1(h / 2.0, 0.0, 1.0));
        let duu = rich(d2(h, 1.0, 0.0), d2(h / 2.0, 1.0, 0.0));
        let dvv = rich(d2(h, 0.0, 1.0), d2(h / 2.0, 0.0, 1.0));
        let duv = rich(dmix(h), dmix(h / 2.0));
        let [e, f, g] = efg(u, v);
        let (e_u, f_u, g_u) = (du[0], du[1], du[2]);
        let (e_v, f_v, g_v) = (dv[0], dv[1], dv[2]);
        let a = Matrix3::new(
            -0.5 * dvv[0] + duv[1] - 0.5 * duu[2],
            0.5 * e_u,
            f_u - 0.5 * e_v,
            f_v - 0.5 * g_u,
            e,
            f,
            0.5 * g_v,
            f,
            g,
        );
        let b = Matrix3::new(0.0, 0.5 * e_v, 0.5 * g_u, 0.5 * e_v, e, f, 0.5 * g_u, f, g);
        let det = e * g - f * f;
        Ok((a.determinant() - b.determinant()) / (det * det))
    }

    pub fn curvature_sample(&self, p: &Point) -> Result<CurvatureSample> {
        let gauss = match self.dim() {
            2 => self.gauss_curvature(p)?,
            _ if self.is_euclidean() => 0.0,
            d => return Err(Error::UnsupportedDimension(format!("dim {d}"))),
        };
        Ok(CurvatureSample { point: *p, gauss, metric: self.metric(p) })
    }

    /// Dimension of the Euclidean target of the built-in embedding, if any.
    pub fn embedding_dim(&self) -> Option<usize> {
        match &self.family {
            MetricFamily::Euclidean => Some(self.dim()),
            MetricFamily::RoundSphere { .. }
            | MetricFamily::Revolution { .. }
            | MetricFamily::Product { .. } => Some(3),
            MetricFamily::Hyperbolic { .. } | MetricFamily::Conformal { .. } => None,
        }
    }

    pub fn has_embedding(&self) -> bool {
        self.embedding_dim().is_some()
    }

    /// Isometric embedding `F(p)` into Euclidean space.
    pub fn embed(&self, p: &Point) -> Option<Vec3> {
        Some(match &self.family {
            MetricFamily::Euclidean => *p,
            MetricFamily::RoundSphere { radius } => {
                let (st, ct) = p[0].sin_cos();
                let (sp, cp) = p[1].sin_cos();
                *radius * Vec3::new(st * cp, st * sp, ct)
            }
            MetricFamily::Revolution { profile } => {
                let r = profile.r.eval(&[p[0]]);
                let (s, c) = p[1].sin_cos();
                Vec3::new(r * c, r * s, p[0])
            }
            MetricFamily::Product { circumference } => {
                let rho = circumference / TAU;
                let (s, c) = (p[0] / rho).sin_cos();
                Vec3::new(rho * c, rho * s, p[1])
            }
            MetricFamily::Hyperbolic { .. } | MetricFamily::Conformal { .. } => return None,
        })
    }

    /// Jacobian of the embedding; column `i` is `∂F/∂x^i`.
    pub fn embed_jacobian(&self, p: &Point) -> Option<Matrix3<f64>> {
        let cols: [Vec3; 2] = match &self.family {
            MetricFamily::Euclidean => return Some(self.padded_identity()),
            MetricFamily::RoundSphere { radius } => {
                let (st, ct) = p[0].sin_cos();
                let (sp, cp) = p[1].sin_cos();
                [
                    *radius * Vec3::new(ct * cp, ct * sp, -st),
                    *radius * Vec3::new(-st * sp, st * cp, 0.0),
                ]
            }
            MetricFamily::Revolution { profile } => {
                let (r, dr, _) = profile.eval(p[0]);
                let (s, c) = p[1].sin_cos();
                [Vec3::new(dr * c, dr * s, 1.0), Vec3::new(-r * s, r * c, 0.0)]
            }
            MetricFamily::Product { circumference } => {
                let rho = circumference / TAU;
                let (s, c) = (p[0] / rho).sin_cos();
                [Vec3::new(-s, c, 0.0), Vec3::new(0.0, 0.0, 1.0)]
            }
            MetricFamily::Hyperbolic { .. } | MetricFamily::Conformal { .. } => return None,
        };
        Some(Matrix3::from_columns(&[cols[0], cols[1], Vec3::zeros()]))
    }

    fn padded_identity(&self) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for i in 0..self.dim() {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Second derivatives `∂²F/∂x^i∂x^j` for a 2-dimensional ambient.
    pub fn embed_hessian(&self, p: &Point) -> Option<[[Vec3; 2]; 2]> {
        let z = Vec3::zeros();
        Some(match &self.family {
            MetricFamily::Euclidean => [[z, z], [z, z]],
            MetricFamily::RoundSphere { radius } => {
                let (st, ct) = p[0].sin_cos();
                let (sp, cp) = p[1].sin_cos();
                let tt = *radius * Vec3::new(-st * cp, -st * sp, -ct);
                let tp = *radius * Vec3::new(-ct * sp, ct * cp, 0.0);
                let pp = *radius * Vec3::new(-st * cp, -st * sp, 0.0);
                [[tt, tp], [tp, pp]]
            }
            MetricFamily::Revolution { profile } => {
                let (r, dr, ddr) = profile.eval(p[0]);
                let (s, c) = p[1].sin_cos();
                let zz = Vec3::new(ddr * c, ddr * s, 0.0);
                let zt = Vec3::new(-dr * s, dr * c, 0.0);
                let tt = Vec3::new(-r * c, -r * s, 0.0);
                [[zz, zt], [zt, tt]]
            }
            MetricFamily::Product { circumference } => {
                let rho = circumference / TAU;
                let (s, c) = (p[0] / rho).sin_cos();
                [[Vec3::new(-c / rho, -s / rho, 0.0), z], [z, z]]
            }
            MetricFamily::Hyperbolic { .. } | MetricFamily::Conformal { .. } => return None,
        })
    }

    /// Pullback of the Euclidean metric through the embedding.
    pub fn pullback_metric(&self, p: &Point) -> Option<Matrix3<f64>> {
        let j = self.embed_jacobian(p)?;
        let mut g = j.transpose() * j;
        for i in self.dim()..3 {
            g[(i, i)] = 1.0;
        }
        Some(g)
    }

    /// Distance proxy between two chart points: Euclidean distance of the
    /// embedded images when an embedding exists (never exceeds the intrinsic
    /// distance), otherwise the metric length of the coordinate chord.
    pub fn chord_distance(&self, p: &Point, q: &Point) -> f64 {
        if let (Some(a), Some(b)) = (self.embed(p), self.embed(q)) {
            return (a - b).norm();
        }
        let d = self.chart.delta(p, q);
        let mid = self.chart.midpoint(p, q);
        self.norm(&mid, &d)
    }

    /// Upper bound on the trace of the embedding's second fundamental form
    /// over `k`-planes, sampled on a dense grid and inflated by 10 %.
    pub fn second_fundamental_bound(&self, k: usize) -> Result<f64> {
        if !self.has_embedding() {
            return Err(Error::MissingEmbedding);
        }
        if k == 0 || k > self.dim() {
            return Err(Error::Validation(format!("plane dimension {k} invalid for dim {}", self.dim())));
        }
        if self.is_euclidean() {
            return Ok(0.0);
        }
        let n = 64;
        let mut worst: f64 = 0.0;
        for (_, p) in self.sample_grid(n) {
            let (k1, k2) = self.principal_curvatures(&p).ok_or(Error::MissingEmbedding)?;
            let v = if k == 1 { k1.abs().max(k2.abs()) } else { (k1 + k2).abs() };
            worst = worst.max(v);
        }
        Ok(1.1 * worst)
    }

    /// Principal curvatures of the embedded surface (dim 2 ambient in E³).
    pub fn principal_curvatures(&self, p: &Point) -> Option<(f64, f64)> {
        let j = self.embed_jacobian(p)?;
        let h = self.embed_hessian(p)?;
        let (fu, fv) = (j.column(0).into_owned(), j.column(1).into_owned());
        let n = fu.cross(&fv);
        if n.norm() == 0.0 {
            return None;
        }
        let n = n.normalize();
        let l = Matrix2::new(h[0][0].dot(&n), h[0][1].dot(&n), h[1][0].dot(&n), h[1][1].dot(&n));
        let g = Matrix2::new(fu.dot(&fu), fu.dot(&fv), fv.dot(&fu), fv.dot(&fv));
        // symmetric form of g^{-1} L via Cholesky of g
        let c = g.cholesky()?;
        let li = c.l().try_inverse()?;
        let s = li * l * li.transpose();
        let eig = SymmetricEigen::new(s);
        Some((eig.eigenvalues[0], eig.eigenvalues[1]))
    }

    /// Regular sample grid over the chart interior, avoiding coordinate
    /// singularities at the chart edges of polar families.
    pub fn sample_grid(&self, n: usize) -> Vec<(usize, Point)> {
        let dim = self.dim();
        let mut pts = Vec::new();
        let coord = |i: usize, t: usize| {
            let lo = self.chart.lo[i];
            let hi = self.chart.hi[i];
            lo + (hi - lo) * (t as f64 + 0.5) / n as f64
        };
        let m = if dim == 3 { n } else { 1 };
        for a in 0..n {
            for b in 0..n {
                for c in 0..m {
                    let mut p = Point::new(coord(0, a), coord(1, b), 0.0);
                    if dim == 3 {
                        p[2] = coord(2, c);
                    }
                    pts.push((pts.len(), p));
                }
            }
        }
        pts
    }
}

/// Curvature data at a point: Gauss curvature and the metric needed to
/// evaluate the Ricci form.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureSample {
    pub point: Point,
    pub gauss: f64,
    metric: Matrix3<f64>,
}

impl CurvatureSample {
    /// `Ric(v, v)`; on a surface this is `K |v|²`.
    pub fn ricci(&self, v: &Vec3) -> f64 {
        self.gauss * (v.transpose() * self.metric * v)[0]
    }
}

/// Closed boundary curve given by coordinate formulas in the parameter
/// `s ∈ [0, 1)`. Periodic coordinates may wind (e.g. `θ = 2*pi*s`).
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    pub coords: [Formula; 2],
    d1: [Formula; 2],
    d2: [Formula; 2],
}

impl BoundaryCurve {
    pub fn parse(u: &str, v: &str) -> Result<Self> {
        let coords = [Formula::parse(u, &["s"])?, Formula::parse(v, &["s"])?];
        let d1 = [coords[0].derivative(0), coords[1].derivative(0)];
        let d2 = [d1[0].derivative(0), d1[1].derivative(0)];
        Ok(BoundaryCurve { coords, d1, d2 })
    }

    pub fn point(&self, s: f64) -> Point {
        Point::new(self.coords[0].eval(&[s]), self.coords[1].eval(&[s]), 0.0)
    }

    pub fn velocity(&self, s: f64) -> Vec3 {
        Vec3::new(self.d1[0].eval(&[s]), self.d1[1].eval(&[s]), 0.0)
    }

    pub fn acceleration(&self, s: f64) -> Vec3 {
        Vec3::new(self.d2[0].eval(&[s]), self.d2[1].eval(&[s]), 0.0)
    }
}

/// Left-hand g-unit normal to the tangent `t` at `p` (dim 2).
pub fn left_normal(amb: &AmbientSurface, p: &Point, t: &Vec3) -> Vec3 {
    let g = amb.metric(p);
    let tt = (t.transpose() * g * t)[0];
    let m = Vec3::new(-t[1], t[0], 0.0);
    let m = m - ((m.transpose() * g * t)[0] / tt) * t;
    let n = (m.transpose() * g * m)[0].sqrt();
    m / n
}

/// Geodesic curvature vector of a parametrised curve with coordinate
/// velocity `x1` and acceleration `x2` at `p`.
pub fn curvature_vector(amb: &AmbientSurface, p: &Point, x1: &Vec3, x2: &Vec3) -> Vec3 {
    let gamma = amb.christoffel(p);
    let g = amb.metric(p);
    let speed2 = (x1.transpose() * g * x1)[0];
    let acc = x2 + AmbientSurface::gamma_contract(&gamma, x1, x1);
    let acc = acc / speed2;
    let tang = (acc.transpose() * g * x1)[0] / speed2;
    acc - tang * x1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convexity {
    StrictlyConvex,
    Convex,
    NotConvex,
    Minimal,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ComponentReport {
    pub component: usize,
    pub min_kappa: f64,
    pub max_kappa: f64,
    pub flag: Convexity,
    /// `+1` when the region lies to the left of the parametrisation.
    pub orientation: f64,
}

/// Compact domain `{p : g_i(p) ≤ 0}` with parametrised boundary components.
#[derive(Debug, Clone)]
pub struct Domain {
    pub name: String,
    pub ambient: AmbientRef,
    pub constraints: Vec<Formula>,
    pub boundary: Vec<BoundaryCurve>,
}

pub const MINIMAL_TOL: f64 = 1e-6;

impl Domain {
    pub fn new(
        name: impl Into<String>,
        ambient: AmbientRef,
        constraints: &[&str],
        boundary: Vec<BoundaryCurve>,
    ) -> Result<Self> {
        let vars: &[&str] = match ambient.dim() {
            2 => &["u", "v"],
            _ => &["x", "y", "z"],
        };
        let names = coordinate_names(&ambient);
        let mut parsed = Vec::new();
        for c in constraints {
            // accept either the family's coordinate names or generic u, v
            let f = Formula::parse(c, &names).or_else(|_| Formula::parse(c, vars))?;
            parsed.push(f);
        }
        Ok(Domain { name: name.into(), ambient, constraints: parsed, boundary })
    }

    /// Unit disk (or disk of radius `radius` centred at `center`) in the plane.
    pub fn plane_disk(center: [f64; 2], radius: f64) -> Result<Self> {
        let amb = Arc::new(AmbientSurface::plane());
        let c = format!("(x - ({}))^2 + (y - ({}))^2 - ({})^2", center[0], center[1], radius);
        let curve = BoundaryCurve::parse(
            &format!("{} + {}*cos(2*pi*s)", center[0], radius),
            &format!("{} + {}*sin(2*pi*s)", center[1], radius),
        )?;
        Domain::new(format!("disk(r={radius})"), amb, &[&c], vec![curve])
    }

    /// Band `|z| ≤ h` on a surface of revolution.
    pub fn revolution_band(amb: AmbientRef, h: f64) -> Result<Self> {
        let top = BoundaryCurve::parse(&format!("{h}"), "2*pi*s")?;
        let bottom = BoundaryCurve::parse(&format!("-{h}"), "2*pi*(1 - s)")?;
        Domain::new(format!("band(|z|<={h})"), amb, &[&format!("z^2 - {h}^2")], vec![top, bottom])
    }

    /// Polar cap `θ ≤ θ0` on a round sphere.
    pub fn spherical_cap(amb: AmbientRef, theta0: f64) -> Result<Self> {
        let curve = BoundaryCurve::parse(&format!("{theta0}"), "2*pi*(1 - s)")?;
        Domain::new(format!("cap(theta<={theta0})"), amb, &[&format!("theta - {theta0}")], vec![curve])
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.contains_tol(p, 1e-9)
    }

    pub fn contains_tol(&self, p: &Point, tol: f64) -> bool {
        if !self.ambient.chart.contains(p) {
            return false;
        }
        let x = [p[0], p[1], p[2]];
        self.constraints.iter().all(|g| g.eval(&x[..g.vars().len()]) <= tol)
    }

    /// Inward geodesic curvature of component `c` at parameter `s` (sign
    /// taken relative to the detected region side).
    fn kappa_left(&self, c: usize, s: f64) -> f64 {
        let curve = &self.boundary[c];
        let p = curve.point(s);
        let x1 = curve.velocity(s);
        let x2 = curve.acceleration(s);
        let k = curvature_vector(&self.ambient, &p, &x1, &x2);
        let n = left_normal(&self.ambient, &p, &x1);
        self.ambient.inner(&p, &k, &n)
    }

    /// Which side of component `c` the region lies on: `+1` left, `-1` right.
    fn orientation(&self, c: usize) -> Result<f64> {
        let curve = &self.boundary[c];
        let mut votes = 0i32;
        for i in 0..16 {
            let s = (i as f64 + 0.5) / 16.0;
            let p = curve.point(s);
            let n = left_normal(&self.ambient, &p, &curve.velocity(s));
            let eps = 1e-5;
            let l = self.contains_tol(&self.ambient.chart.wrap(&(p + eps * n)), 0.0);
            let r = self.contains_tol(&self.ambient.chart.wrap(&(p - eps * n)), 0.0);
            match (l, r) {
                (true, false) => votes += 1,
                (false, true) => votes -= 1,
                _ => {}
            }
        }
        if votes == 0 {
            return Err(Error::InvalidDomain(format!(
                "cannot determine region side of boundary component {c}"
            )));
        }
        Ok(votes.signum() as f64)
    }

    pub fn sample_boundary(&self, c: usize, samples: usize) -> Vec<Point> {
        (0..samples)
            .map(|i| self.ambient.chart.wrap(&self.boundary[c].point(i as f64 / samples as f64)))
            .collect()
    }

    /// Per-component mean-convexity report from `samples` boundary samples
    /// with golden-section refinement of the extremal curvatures.
    pub fn classify(&self, samples: usize) -> Result<Vec<ComponentReport>> {
        if samples < 16 {
            return Err(Error::Validation(format!("classify needs at least 16 samples, got {samples}")));
        }
        if self.ambient.dim() != 2 {
            return Err(Error::UnsupportedDimension("domain classification needs dim 2".into()));
        }
        let mut out = Vec::new();
        for c in 0..self.boundary.len() {
            let pts = self.sample_boundary(c, samples);
            for p in &pts {
                if !self.ambient.chart.contains(p) {
                    return Err(Error::InvalidDomain(format!("boundary component {c} leaves the chart")));
                }
            }
            if polyline_self_intersects(&self.ambient.chart, &pts, true) {
                return Err(Error::InvalidDomain(format!("boundary component {c} self-intersects")));
            }
            let orient = self.orientation(c)?;
            let kappa = |s: f64| orient * self.kappa_left(c, s.rem_euclid(1.0));
            let ks: Vec<f64> = (0..samples).map(|i| kappa(i as f64 / samples as f64)).collect();
            let h = 1.0 / samples as f64;
            let (imin, _) = ks.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &k)| if k < a.1 { (i, k) } else { a });
            let (imax, _) = ks.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, &k)| if k > a.1 { (i, k) } else { a });
            let smin = imin as f64 * h;
            let smax = imax as f64 * h;
            let (_, kmin) = golden_min(kappa, smin - h, smin + h, 1e-12);
            let (_, kmax) = golden_min(|s| -kappa(s), smax - h, smax + h, 1e-12);
            let min_kappa = kmin.min(ks[imin]);
            let max_kappa = (-kmax).max(ks[imax]);
            let flag = if min_kappa.abs() < MINIMAL_TOL && max_kappa.abs() < MINIMAL_TOL {
                Convexity::Minimal
            } else if min_kappa > MINIMAL_TOL {
                Convexity::StrictlyConvex
            } else if min_kappa >= -MINIMAL_TOL {
                Convexity::Convex
            } else {
                Convexity::NotConvex
            };
            out.push(ComponentReport { component: c, min_kappa, max_kappa, flag, orientation: orient });
        }
        Ok(out)
    }

    /// Coordinate bounding box of the region: boundary samples, extended by
    /// interior grid points and to full periods in periodic coordinates.
    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let chart = &self.ambient.chart;
        let dim = chart.dim;
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut add = |p: &Point| {
            for i in 0..dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        };
        for c in 0..self.boundary.len() {
            for p in self.sample_boundary(c, 256) {
                add(&p);
            }
        }
        let n = if dim == 2 { 129 } else { 33 };
        let lin = |i: usize, t: usize| chart.lo[i] + (chart.hi[i] - chart.lo[i]) * t as f64 / (n - 1) as f64;
        let m = if dim == 3 { n } else { 1 };
        for a in 0..n {
            for b in 0..n {
                for c in 0..m {
                    let p = Point::new(lin(0, a), lin(1, b), if dim == 3 { lin(2, c) } else { 0.0 });
                    if self.contains(&p) {
                        add(&p);
                    }
                }
            }
        }
        for i in 0..dim {
            if chart.periodic[i] {
                lo[i] = chart.lo[i];
                hi[i] = chart.hi[i];
            }
        }
        for i in dim..3 {
            lo[i] = 0.0;
            hi[i] = 0.0;
        }
        (lo, hi)
    }

    /// Points of an `n`-per-axis grid over the bounding box that lie in the
    /// region, plus boundary samples.
    pub fn grid_points(&self, n: usize) -> Vec<Point> {
        let (lo, hi) = self.bounding_box();
        let chart = &self.ambient.chart;
        let dim = chart.dim;
        let lin = |i: usize, t: usize| {
            if chart.periodic[i] {
                lo[i] + (hi[i] - lo[i]) * t as f64 / n as f64
            } else {
                lo[i] + (hi[i] - lo[i]) * t as f64 / (n - 1) as f64
            }
        };
        let mut pts = Vec::new();
        let m = if dim == 3 { n } else { 1 };
        for a in 0..n {
            for b in 0..n {
                for c in 0..m {
                    let p = Point::new(lin(0, a), lin(1, b), if dim == 3 { lin(2, c) } else { 0.0 });
                    if self.contains(&p) {
                        pts.push(p);
                    }
                }
            }
        }
        for c in 0..self.boundary.len() {
            pts.extend(self.sample_boundary(c, 4 * n));
        }
        pts
    }
}

/// Variable names used by each family's chart.
pub fn coordinate_names(amb: &AmbientSurface) -> Vec<&'static str> {
    match (&amb.family, amb.dim()) {
        (MetricFamily::Euclidean, 3) => vec!["x", "y", "z"],
        (MetricFamily::Euclidean, _) | (MetricFamily::Conformal { .. }, _) => vec!["x", "y"],
        (MetricFamily::RoundSphere { .. }, _) => vec!["theta", "phi"],
        (MetricFamily::Hyperbolic { .. }, _) => vec!["r", "phi"],
        (MetricFamily::Revolution { .. }, _) => vec!["z", "theta"],
        (MetricFamily::Product { .. }, _) => vec!["s", "z"],
    }
}

pub(crate) fn segments_cross(a0: [f64; 2], a1: [f64; 2], b0: [f64; 2], b1: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// Proper self-intersection test for a closed (or open) polyline in chart
/// coordinates, honouring periodic wrap. Uses a uniform bucket grid.
pub fn polyline_self_intersects(chart: &Chart, pts: &[Point], closed: bool) -> bool {
    let n = pts.len();
    if n < 4 {
        return false;
    }
    let nseg = if closed { n } else { n - 1 };
    // segments as (start, unwrapped end) in coordinates
    let segs: Vec<([f64; 2], [f64; 2])> = (0..nseg)
        .map(|i| {
            let a = pts[i];
            let d = chart.delta(&a, &pts[(i + 1) % n]);
            ([a[0], a[1]], [a[0] + d[0], a[1] + d[1]])
        })
        .collect();
    let maxlen = segs
        .iter()
        .map(|(a, b)| ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt())
        .fold(0.0, f64::max);
    if maxlen == 0.0 {
        return false;
    }
    let cell = maxlen;
    let shifts: Vec<[f64; 2]> = {
        let mut s = vec![[0.0, 0.0]];
        for i in 0..2 {
            if let Some(per) = chart.period(i) {
                let cur = s.clone();
                for v in cur {
                    let mut a = v;
                    a[i] += per;
                    let mut b = v;
                    b[i] -= per;
                    s.push(a);
                    s.push(b);
                }
            }
        }
        s
    };
    let key = |x: f64, y: f64| ((x / cell).floor() as i64, (y / cell).floor() as i64);
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> = std::collections::HashMap::new();
    for (i, (a, b)) in segs.iter().enumerate() {
        let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        buckets.entry(key(m[0], m[1])).or_default().push(i);
    }
    for (i, (a, b)) in segs.iter().enumerate() {
        for sh in &shifts {
            let a2 = [a[0] + sh[0], a[1] + sh[1]];
            let b2 = [b[0] + sh[0], b[1] + sh[1]];
            let m = [(a2[0] + b2[0]) / 2.0, (a2[1] + b2[1]) / 2.0];
            let (kx, ky) = key(m[0], m[1]);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(list) = buckets.get(&(kx + dx, ky + dy)) {
                        for &j in list {
                            if j <= i && *sh == [0.0, 0.0] {
                                continue;
                            }
                            let adjacent = j == i
                                || j + 1 == i
                                || i + 1 == j
                                || (closed && ((i + 1) % nseg == j || (j + 1) % nseg == i));
                            if adjacent {
                                continue;
                            }
                            let (c, d) = segs[j];
                            if segments_cross(a2, b2, c, d) {
                                return true;
                            }
                        }
                    }
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rev() -> AmbientSurface {
        AmbientSurface::revolution("1 + z^2", -2.0, 2.0).unwrap()
    }

    #[test]
    fn euclidean_metric_is_identity() {
        let a = AmbientSurface::plane();
        let g = a.metric_eval(&Point::new(0.3, 0.7, 0.0)).unwrap();
        assert_eq!(g, Matrix3::identity());
    }

    #[test]
    fn sphere_metric_at_sixty_degrees() {
        let a = AmbientSurface::round_sphere(1.0).unwrap();
        let g = a.metric_eval(&Point::new(PI / 3.0, 0.0, 0.0)).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((g[(1, 1)] - 0.75).abs() < 1e-15);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn revolution_metric_at_waist() {
        let g = rev().metric_eval(&Point::new(0.0, 0.0, 0.0)).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-15 && (g[(1, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn outside_chart_is_an_error() {
        assert!(matches!(
            rev().metric_eval(&Point::new(3.0, 0.0, 0.0)),
            Err(Error::OutsideChart(_))
        ));
        // periodic coordinates wrap instead
        assert!(rev().metric_eval(&Point::new(0.5, 40.0, 0.0)).is_ok());
    }

    #[test]
    fn gauss_curvature_closed_forms() {
        let s = AmbientSurface::round_sphere(1.0).unwrap();
        assert!((s.gauss_curvature(&Point::new(1.0, 2.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        let e = AmbientSurface::plane();
        assert_eq!(e.gauss_curvature(&Point::new(1.0, 2.0, 0.0)).unwrap(), 0.0);
        assert!((rev().gauss_curvature(&Point::zeros()).unwrap() + 2.0).abs() < 1e-15);
        assert!(matches!(
            AmbientSurface::space().gauss_curvature(&Point::zeros()),
            Err(Error::UnsupportedDimension(_))
        ));
    }

    #[test]
    fn second_fundamental_bounds() {
        assert_eq!(AmbientSurface::plane().second_fundamental_bound(1).unwrap(), 0.0);
        let s1 = AmbientSurface::round_sphere(1.0).unwrap().second_fundamental_bound(1).unwrap();
        assert!((s1 - 1.1).abs() < 1e-12);
        let s2 = AmbientSurface::round_sphere(2.0).unwrap().second_fundamental_bound(1).unwrap();
        assert!((s2 - 0.55).abs() < 1e-12);
        let h = AmbientSurface::hyperbolic(-1.0, 3.0).unwrap();
        assert!(matches!(h.second_fundamental_bound(1), Err(Error::MissingEmbedding)));
    }

    #[test]
    fn classify_unit_disk() {
        let d = Domain::plane_disk([0.0, 0.0], 1.0).unwrap();
        let r = d.classify(512).unwrap();
        assert_eq!(r[0].flag, Convexity::StrictlyConvex);
        assert!((r[0].min_kappa - 1.0).abs() < 1e-9);
    }

    #[test]
    fn classify_revolution_band() {
        let d = Domain::revolution_band(Arc::new(rev()), 1.0).unwrap();
        let r = d.classify(512).unwrap();
        let expect = 2.0 / (2.0 * 5f64.sqrt());
        for c in &r {
            assert_eq!(c.flag, Convexity::StrictlyConvex);
            assert!((c.min_kappa - expect).abs() < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn classify_flat_cylinder_band_is_minimal() {
        let amb = Arc::new(AmbientSurface::revolution("1", -2.0, 2.0).unwrap());
        let d = Domain::revolution_band(amb, 1.0).unwrap();
        for c in d.classify(512).unwrap() {
            assert_eq!(c.flag, Convexity::Minimal);
        }
    }

    #[test]
    fn classify_rejects_figure_eight() {
        let amb = Arc::new(AmbientSurface::plane());
        let curve = BoundaryCurve::parse("sin(4*pi*s)", "sin(2*pi*s)").unwrap();
        let d = Domain::new("eight", amb, &["x^2 + y^2 - 4"], vec![curve]).unwrap();
        assert!(matches!(d.classify(64), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn periodic_delta_takes_short_way() {
        let c = rev().chart;
        let d = c.delta(&Point::new(0.0, 6.2, 0.0), &Point::new(0.0, 0.1, 0.0));
        assert!((d[1] - (0.1 + TAU - 6.2)).abs() < 1e-12);
    }
}
