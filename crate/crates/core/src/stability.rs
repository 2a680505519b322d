//! Jacobi operator `−f″ − q f` on a closed curve of length `L`.

use serde::Serialize;

use crate::ambient::{AmbientSurface, Point};
use crate::error::{Error, Result};
use crate::mesh::{chord_length, polyline_curvature};
use crate::numerics::decimal;

pub const MIN_GRID: usize = 64;

/// A geodesic is reported stable when its smallest eigenvalue is at least
/// `-STABLE_TOL`.
pub const STABLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct StabilityProblem {
    #[serde(serialize_with = "decimal::serialize")]
    pub length: f64,
    /// `Ric(ν,ν) + |A|²` at `grid` equally spaced arclength stations.
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    #[serde(serialize_with = "decimal::serialize")]
    pub eigenvalue: f64,
    #[serde(skip)]
    pub eigenfunction: Vec<f64>,
    pub stable: bool,
    pub iterations: usize,
}

impl StabilityProblem {
    pub fn new(length: f64, q: Vec<f64>) -> Result<Self> {
        if q.len() < MIN_GRID {
            return Err(Error::Validation(format!("stability grid {} below {MIN_GRID}", q.len())));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Validation(format!("curve length {length} must be positive")));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite potential".into()));
        }
        Ok(StabilityProblem { length, q })
    }

    /// Constant potential.
    pub fn uniform(length: f64, q: f64, grid: usize) -> Result<Self> {
        Self::new(length, vec![q; grid])
    }

    /// Resample a closed chart polyline by arclength and evaluate
    /// `K + κ²` at the stations.
    pub fn from_curve(amb: &AmbientSurface, pts: &[Point], grid: usize) -> Result<Self> {
        let grid = grid.max(MIN_GRID);
        let n = pts.len();
        if n < 3 {
            return Err(Error::InvalidMesh("closed curve needs at least 3 vertices".into()));
        }
        let seg: Vec<f64> = (0..n).map(|i| chord_length(amb, &pts[i], &pts[(i + 1) % n])).collect();
        let total: f64 = seg.iter().sum();
        let mut stations = Vec::with_capacity(grid);
        let mut i = 0;
        let mut acc = 0.0;
        for j in 0..grid {
            let s = total * j as f64 / grid as f64;
            while i + 1 < n && acc + seg[i] < s {
                acc += seg[i];
                i += 1;
            }
            let t = if seg[i] > 0.0 { ((s - acc) / seg[i]).clamp(0.0, 1.0) } else { 0.0 };
            let d = amb.chart.delta(&pts[i], &pts[(i + 1) % n]);
            stations.push(amb.chart.wrap(&(pts[i] + t * d)));
        }
        let (h, _) = polyline_curvature(amb, &stations, true);
        let q = stations
            .iter()
            .zip(&h)
            .map(|(p, hv)| {
                let k2 = hv.map_or(0.0, |v| amb.inner(p, &v, &v));
                Ok(amb.gauss_curvature(p)? + k2)
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::new(total, q)
    }

    /// Smallest eigenpair of the periodic second-difference discretisation
    /// by shifted inverse iteration.
    pub fn smallest(&self) -> Spectrum {
        let n = self.q.len();
        let h = self.length / n as f64;
        let off = -1.0 / (h * h);
        let qmax = self.q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // Gershgorin: every eigenvalue is at least −max q
        let sigma = -qmax - 1.0;
        let diag: Vec<f64> = self.q.iter().map(|q| 2.0 / (h * h) - q - sigma).collect();
        let apply = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| (2.0 / (h * h) - self.q[i]) * x[i] + off * (x[(i + n - 1) % n] + x[(i + 1) % n]))
                .collect()
        };
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        let mut lambda = f64::INFINITY;
        let mut iterations = 0;
        for it in 1..=1000 {
            iterations = it;
            let mut y = cyclic_solve(&diag, off, &x);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            y.iter_mut().for_each(|v| *v /= norm);
            let ay = apply(&y);
            let rq: f64 = y.iter().zip(&ay).map(|(a, b)| a * b).sum();
            x = y;
            let done = (rq - lambda).abs() <= 1e-14 * rq.abs().max(1.0);
            lambda = rq;
            if done {
                break;
            }
        }
        if x.iter().sum::<f64>() < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        Spectrum { eigenvalue: lambda, eigenfunction: x, stable: lambda >= -STABLE_TOL, iterations }
    }
}

/// Solve the symmetric cyclic tridiagonal system with diagonal `d` and
/// constant off-diagonal `e` (Sherman–Morrison on the Thomas algorithm).
fn cyclic_solve(d: &[f64], e: f64, b: &[f64]) -> Vec<f64> {
    let n = d.len();
    let gamma = -d[0];
    let mut dd = d.to_vec();
    dd[0] -= gamma;
    dd[n - 1] -= e * e / gamma;
    let x = thomas(&dd, e, b);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = e;
    let z = thomas(&dd, e, &u);
    let vx = x[0] + e / gamma * x[n - 1];
    let vz = z[0] + e / gamma * z[n - 1];
    let f = vx / (1.0 + vz);
    x.iter().zip(&z).map(|(a, b)| a - f * b).collect()
}

fn thomas(d: &[f64], e: f64, b: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut c = vec![0.0; n];
    let mut y = vec![0.0; n];
    c[0] = e / d[0];
    y[0] = b[0] / d[0];
    for i in 1..n {
        let m = d[i] - e * c[i - 1];
        c[i] = e / m;
        y[i] = (b[i] - e * y[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        y[i] -= c[i] * y[i + 1];
    }
    y
}
