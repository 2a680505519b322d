//! Shared numerical helpers: compensated summation, quadrature rules,
//! bracketed 1-D optimisation.

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn ksum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// 3-point Gauss–Legendre rule on [0, 1]: (node, weight).
pub const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// 7-point symmetric triangle rule (degree 5), barycentric coordinates and
/// weights summing to one.
pub fn triangle7() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let b1 = (9.0 + 2.0 * s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let a2 = (6.0 + s15) / 21.0;
    let b2 = (9.0 - 2.0 * s15) / 21.0;
    let w2 = (155.0 + s15) / 1200.0;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

/// Golden-section minimisation of `f` on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while (b - a).abs() > tol && iter < 200 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
        iter += 1;
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Exact decimal string of `x`: shortest representation that round-trips,
/// with `inf`, `-inf` and `nan` spelled out.
pub fn dec(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

/// Serde helpers writing floats as exact decimal strings.
pub mod decimal {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::dec(*x))
    }

    pub mod option {
        use serde::Serializer;

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(v) => s.serialize_str(&super::super::dec(*v)),
                None => s.serialize_none(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_is_order_independent() {
        let xs: Vec<f64> = (0..10_000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let fwd = ksum(xs.iter().copied());
        let rev = ksum(xs.iter().rev().copied());
        assert!((fwd - rev).abs() < 1e-14);
    }

    #[test]
    fn gauss3_integrates_quintics() {
        let f = |t: f64| 3.0 * t.powi(5) - t.powi(4) + 2.0 * t;
        let q: f64 = GAUSS3.iter().map(|(x, w)| w * f(*x)).sum();
        assert!((q - (0.5 - 0.2 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn triangle7_integrates_degree_five() {
        // reference triangle (0,0),(1,0),(0,1); area 1/2; integral of x^2 y^3 = 2!3!/7! = 1/420
        let q: f64 = triangle7()
            .iter()
            .map(|(b, w)| {
                let (x, y) = (b[1], b[2]);
                w * 0.5 * x * x * y * y * y
            })
            .sum();
        assert!((q - 1.0 / 420.0).abs() < 1e-15);
    }

    #[test]
    fn decimal_strings_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0, 1e-300, -7.25e12] {
            assert_eq!(dec(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(dec(f64::INFINITY), "inf");
        assert_eq!(dec(2.0), "2.0");
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_min(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx < 1e-15);
    }
}
