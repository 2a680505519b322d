//! Tangent vector fields on an ambient chart, with covariant derivatives and
//! tangential divergence.

use std::sync::Arc;

use nalgebra::{DVector, Matrix3};

use crate::ambient::{AmbientSurface, Point, Vec3};
use crate::error::{Error, Result};
use crate::expr::Formula;
use crate::family::Basis;

/// Relative tolerance for the tangency check of embedded-mode fields.
pub const TANGENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub enum VectorField {
    Zero,
    /// Constant chart components.
    Constant(Vec3),
    /// `X(x) = scale · (x − center)` in chart coordinates.
    Position { center: Point, scale: f64 },
    /// Chart components given by formulas in the chart coordinates.
    Chart { comps: Vec<Formula>, jac: Vec<Vec<Formula>> },
    /// Components in the Euclidean space of the ambient's embedding, given as
    /// formulas in `x, y, z`. Must be tangent to the embedded surface.
    Embedded { comps: Vec<Formula>, jac: Vec<Vec<Formula>> },
    /// Member of a finite-dimensional test family.
    Expansion { basis: Arc<Basis>, coeffs: DVector<f64> },
}

impl VectorField {
    pub fn position() -> Self {
        VectorField::Position { center: Point::zeros(), scale: 1.0 }
    }

    /// Parse chart-component formulas using the ambient's coordinate names.
    pub fn chart(amb: &AmbientSurface, comps: &[&str]) -> Result<Self> {
        let names = crate::ambient::coordinate_names(amb);
        if comps.len() != amb.dim() {
            return Err(Error::InvalidField(format!(
                "expected {} components, got {}",
                amb.dim(),
                comps.len()
            )));
        }
        let comps: Vec<Formula> = comps.iter().map(|c| Formula::parse(c, &names)).collect::<Result<_>>()?;
        let jac = comps.iter().map(|f| (0..names.len()).map(|j| f.derivative(j)).collect()).collect();
        Ok(VectorField::Chart { comps, jac })
    }

    /// Parse Euclidean-component formulas in `x, y, z`.
    pub fn embedded(comps: &[&str]) -> Result<Self> {
        let names = ["x", "y", "z"];
        if comps.len() != 3 {
            return Err(Error::InvalidField("embedded fields need 3 components".into()));
        }
        let comps: Vec<Formula> = comps.iter().map(|c| Formula::parse(c, &names)).collect::<Result<_>>()?;
        let jac = comps.iter().map(|f| (0..3).map(|j| f.derivative(j)).collect()).collect();
        Ok(VectorField::Embedded { comps, jac })
    }

    fn chart_args(p: &Point, n: usize) -> Vec<f64> {
        p.iter().take(n).copied().collect()
    }

    /// Value in chart components. Embedded fields are pulled back through the
    /// embedding and rejected when not tangent.
    pub fn value(&self, amb: &AmbientSurface, p: &Point) -> Result<Vec3> {
        Ok(match self {
            VectorField::Zero => Vec3::zeros(),
            VectorField::Constant(v) => *v,
            VectorField::Position { center, scale } => *scale * amb.chart.delta(center, p),
            VectorField::Chart { comps, .. } => {
                let x = Self::chart_args(p, comps.len());
                let mut v = Vec3::zeros();
                for (i, c) in comps.iter().enumerate() {
                    v[i] = c.eval(&x);
                }
                v
            }
            VectorField::Embedded { comps, .. } => {
                let (xe, j) = embedded_frame(amb, p)?;
                let mut ve = Vec3::zeros();
                for (i, c) in comps.iter().enumerate() {
                    ve[i] = c.eval(&[xe[0], xe[1], xe[2]]);
                }
                pull_back(amb, &j, &ve)?
            }
            VectorField::Expansion { basis, coeffs } => basis.value(amb, p, coeffs),
        })
    }

    /// Coordinate Jacobian `∂X^i/∂x^j` (chart-mode fields).
    pub fn jacobian(&self, amb: &AmbientSurface, p: &Point) -> Result<Matrix3<f64>> {
        Ok(match self {
            VectorField::Zero | VectorField::Constant(_) => Matrix3::zeros(),
            VectorField::Position { scale, .. } => {
                let mut m = Matrix3::zeros();
                for i in 0..amb.dim() {
                    m[(i, i)] = *scale;
                }
                m
            }
            VectorField::Chart { jac, .. } => {
                let x = Self::chart_args(p, jac.len());
                let mut m = Matrix3::zeros();
                for (i, row) in jac.iter().enumerate() {
                    for (j, f) in row.iter().enumerate() {
                        m[(i, j)] = f.eval(&x);
                    }
                }
                m
            }
            VectorField::Embedded { .. } => {
                return Err(Error::InvalidField(
                    "embedded fields have no chart jacobian; use the tangential divergence".into(),
                ))
            }
            VectorField::Expansion { basis, coeffs } => basis.jacobian(amb, p, coeffs),
        })
    }

    /// Covariant derivative `∇_v X` at `p`.
    pub fn covariant(&self, amb: &AmbientSurface, p: &Point, v: &Vec3) -> Result<Vec3> {
        let j = self.jacobian(amb, p)?;
        let x = self.value(amb, p)?;
        let gamma = amb.christoffel(p);
        Ok(j * v + AmbientSurface::gamma_contract(&gamma, v, &x))
    }

    /// Tangential divergence `Σ g(∇_{e_i} X, e_i)` over a g-orthonormal frame.
    pub fn div_frame(&self, amb: &AmbientSurface, p: &Point, frame: &[Vec3]) -> Result<f64> {
        match self {
            VectorField::Zero | VectorField::Constant(_) if amb.is_euclidean() => Ok(0.0),
            VectorField::Embedded { comps, jac } => {
                let (xe, j) = embedded_frame(amb, p)?;
                let arg = [xe[0], xe[1], xe[2]];
                let mut ve = Vec3::zeros();
                for (i, c) in comps.iter().enumerate() {
                    ve[i] = c.eval(&arg);
                }
                pull_back(amb, &j, &ve)?;
                let mut dx = Matrix3::zeros();
                for (i, row) in jac.iter().enumerate() {
                    for (k, f) in row.iter().enumerate() {
                        dx[(i, k)] = f.eval(&arg);
                    }
                }
                Ok(frame
                    .iter()
                    .map(|e| {
                        let ee = j * e;
                        (ee.transpose() * dx * ee)[0]
                    })
                    .sum())
            }
            _ => {
                let jm = self.jacobian(amb, p)?;
                let x = self.value(amb, p)?;
                let gamma = amb.christoffel(p);
                let g = amb.metric(p);
                let mut s = 0.0;
                for e in frame {
                    let d = jm * e + AmbientSurface::gamma_contract(&gamma, e, &x);
                    s += (e.transpose() * g * d)[0];
                }
                Ok(s)
            }
        }
    }

    /// Sampled sup-norm and Lipschitz budget over `pts`, inflated by 10 %.
    pub fn bounds(&self, amb: &AmbientSurface, pts: &[Point]) -> Result<FieldBounds> {
        let mut sup: f64 = 0.0;
        let mut lip: f64 = 0.0;
        for p in pts {
            sup = sup.max(amb.norm(p, &self.value(amb, p)?));
            if !matches!(self, VectorField::Embedded { .. }) {
                // operator norm of ∇X in g-orthonormal coordinates
                let g = amb.metric(p);
                let chol = g.cholesky().ok_or_else(|| Error::Numeric("metric not positive definite".into()))?;
                let l = chol.l();
                let linv = l.try_inverse().ok_or_else(|| Error::Numeric("singular metric".into()))?;
                let mut cov = Matrix3::zeros();
                for j in 0..amb.dim() {
                    let mut ej = Vec3::zeros();
                    ej[j] = 1.0;
                    cov.set_column(j, &self.covariant(amb, p, &ej)?);
                }
                let a = l.transpose() * cov * linv.transpose();
                lip = lip.max(a.singular_values().max());
            }
        }
        Ok(FieldBounds { sup: 1.1 * sup, lipschitz: 1.1 * lip, sampled_sup: sup })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldBounds {
    pub sup: f64,
    pub lipschitz: f64,
    pub sampled_sup: f64,
}

fn embedded_frame(amb: &AmbientSurface, p: &Point) -> Result<(Vec3, Matrix3<f64>)> {
    let xe = amb.embed(p).ok_or(Error::MissingEmbedding)?;
    let j = amb.embed_jacobian(p).ok_or(Error::MissingEmbedding)?;
    Ok((xe, j))
}

/// Solve `J v = w` in the least-squares sense and reject non-tangent `w`.
fn pull_back(amb: &AmbientSurface, j: &Matrix3<f64>, w: &Vec3) -> Result<Vec3> {
    let d = amb.dim();
    let jt = j.transpose();
    let mut normal = jt * j;
    for i in d..3 {
        normal[(i, i)] = 1.0;
    }
    let v = normal
        .try_inverse()
        .ok_or_else(|| Error::Numeric("degenerate embedding jacobian".into()))?
        * (jt * w);
    let mut v = v;
    for i in d..3 {
        v[i] = 0.0;
    }
    let resid = (j * v - w).norm();
    if resid > TANGENCY_TOL * w.norm().max(1.0) {
        return Err(Error::InvalidField(format!("field not tangent to the embedded surface (normal part {resid:.3e})")));
    }
    Ok(v)
}
