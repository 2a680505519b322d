//! Minimal enclosing ball of a point set in E² or E³ (move-to-front Welzl).

use nalgebra::{DMatrix, DVector, SymmetricEigen, Matrix3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ambient::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

/// Smallest ball containing `pts`. Deterministic: the internal shuffle uses
/// a fixed seed.
pub fn min_enclosing_ball(pts: &[Point]) -> Ball {
    if pts.is_empty() {
        return Ball { center: Point::zeros(), radius: 0.0 };
    }
    // work inside the affine hull so the support systems stay regular
    let n = pts.len() as f64;
    let centroid = pts.iter().fold(Point::zeros(), |a, p| a + p) / n;
    let mut cov = Matrix3::zeros();
    for p in pts {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let axes: Vec<Point> = (0..3)
        .filter(|&i| eig.eigenvalues[i] > 1e-20 * top.max(1e-300) && top > 0.0)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if axes.is_empty() {
        return Ball { center: pts[0], radius: 0.0 };
    }
    let d = axes.len();
    let mut local: Vec<DVector<f64>> = pts
        .iter()
        .map(|p| DVector::from_iterator(d, axes.iter().map(|a| a.dot(&(p - centroid)))))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ba11);
    local.shuffle(&mut rng);
    let mut support = Vec::with_capacity(d + 1);
    let len = local.len();
    let (c, r2) = mtf(&mut local, len, &mut support, d);
    let mut center = centroid;
    for (i, a) in axes.iter().enumerate() {
        center += c[i] * a;
    }
    // the radius is re-measured on the original points
    let radius = pts.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    debug_assert!(radius * radius <= r2 * (1.0 + 1e-9) + 1e-18);
    Ball { center, radius }
}

fn mtf(pts: &mut [DVector<f64>], end: usize, support: &mut Vec<DVector<f64>>, d: usize) -> (DVector<f64>, f64) {
    let (mut c, mut r2) = ball_from(support, d);
    if support.len() == d + 1 {
        return (c, r2);
    }
    for i in 0..end {
        let dist2 = (&pts[i] - &c).norm_squared();
        if dist2 > r2 * (1.0 + 1e-12) + 1e-24 {
            support.push(pts[i].clone());
            let (c2, r22) = mtf(pts, i, support, d);
            support.pop();
            c = c2;
            r2 = r22;
            pts[..=i].rotate_right(1);
        }
    }
    (c, r2)
}

/// Smallest ball with all of `support` on its boundary.
fn ball_from(support: &[DVector<f64>], d: usize) -> (DVector<f64>, f64) {
    match support.len() {
        0 => (DVector::zeros(d), -1.0),
        1 => (support[0].clone(), 0.0),
        m => {
            let p0 = &support[0];
            let q: Vec<DVector<f64>> = support[1..].iter().map(|p| p - p0).collect();
            let k = m - 1;
            let mut a = DMatrix::zeros(k, k);
            let mut b = DVector::zeros(k);
            for i in 0..k {
                for j in 0..k {
                    a[(i, j)] = 2.0 * q[i].dot(&q[j]);
                }
                b[i] = q[i].norm_squared();
            }
            match a.lu().solve(&b) {
                Some(lam) => {
                    let mut c = p0.clone();
                    for i in 0..k {
                        c += lam[i] * &q[i];
                    }
                    let r2 = (&c - p0).norm_squared();
                    (c, r2)
                }
                None => {
                    // affinely dependent support: fall back to the widest pair
                    let mut best = (p0.clone(), 0.0);
                    for i in 0..m {
                        for j in i + 1..m {
                            let c = (&support[i] + &support[j]) * 0.5;
                            let r2 = (&support[i] - &c).norm_squared();
                            if r2 > best.1 {
                                best = (c, r2);
                            }
                        }
                    }
                    best
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_of_circle_points() {
        let pts: Vec<Point> = (0..100)
            .map(|i| {
                let t = i as f64 * 0.0628;
                Point::new(2.0 + t.cos(), -1.0 + t.sin(), 0.0)
            })
            .collect();
        let b = min_enclosing_ball(&pts);
        assert!((b.radius - 1.0).abs() < 1e-9);
        assert!((b.center - Point::new(2.0, -1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn ball_of_segment_and_tetrahedron() {
        let seg = [Point::new(0.0, 0.0, 0.0), Point::new(0.5, 0.0, 0.0), Point::new(1.0, 0.0, 0.0)];
        let b = min_enclosing_ball(&seg);
        assert!((b.radius - 0.5).abs() < 1e-14);
        let s = 1.0 / 3f64.sqrt();
        let tet = [
            Point::new(s, s, s),
            Point::new(s, -s, -s),
            Point::new(-s, s, -s),
            Point::new(-s, -s, s),
            Point::new(0.1, 0.0, 0.2),
        ];
        let b = min_enclosing_ball(&tet);
        assert!((b.radius - 1.0).abs() < 1e-12);
        assert!(b.center.norm() < 1e-12);
    }

    #[test]
    fn obtuse_triangle_uses_longest_side() {
        let pts = [Point::new(-1.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 0.2, 0.0)];
        let b = min_enclosing_ball(&pts);
        assert!((b.radius - 1.0).abs() < 1e-14);
    }
}
