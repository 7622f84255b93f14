//! Points of the Riemann sphere and Möbius transformations acting on them.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{cone, czero, Cx, Real};

/// A point of the extended complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtPoint<T> {
    Finite(Cx<T>),
    Infinity,
}

impl<T: Real> ExtPoint<T> {
    /// Homogeneous coordinates `(x, y)` with the point equal to `x / y`.
    pub fn homogeneous(self) -> (Cx<T>, Cx<T>) {
        match self {
            ExtPoint::Finite(z) => (z, cone()),
            ExtPoint::Infinity => (cone(), czero()),
        }
    }

    /// The point `x / y`, with a relative cutoff deciding infinity.
    pub fn from_homogeneous(x: Cx<T>, y: Cx<T>) -> Self {
        let s = x.norm().max(y.norm());
        if y.norm() <= s * T::epsilon() {
            ExtPoint::Infinity
        } else {
            ExtPoint::Finite(x / y)
        }
    }

    pub fn finite(self) -> Option<Cx<T>> {
        match self {
            ExtPoint::Finite(z) => Some(z),
            ExtPoint::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtPoint::Infinity)
    }
}

impl<T: Real> From<Cx<T>> for ExtPoint<T> {
    fn from(z: Cx<T>) -> Self {
        ExtPoint::Finite(z)
    }
}

/// Chordal distance on the unit sphere (diameter 2) between two points.
pub fn chordal_distance<T: Real>(u: ExtPoint<T>, v: ExtPoint<T>) -> T {
    let (x1, y1) = u.homogeneous();
    let (x2, y2) = v.homogeneous();
    let det = x1 * y2 - x2 * y1;
    let n1 = (x1.norm_sqr() + y1.norm_sqr()).sqrt();
    let n2 = (x2.norm_sqr() + y2.norm_sqr()).sqrt();
    T::lit(2.0) * det.norm() / (n1 * n2)
}

/// `z -> (a z + b) / (c z + d)` stored with `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobius<T> {
    pub a: Cx<T>,
    pub b: Cx<T>,
    pub c: Cx<T>,
    pub d: Cx<T>,
}

impl<T: Real> Mobius<T> {
    /// Normalizes the coefficients to unit determinant.
    pub fn new(a: Cx<T>, b: Cx<T>, c: Cx<T>, d: Cx<T>) -> Result<Self> {
        let det = a * d - b * c;
        let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm());
        if !(det.norm() > T::epsilon() * scale * scale) {
            return Err(Error::InvalidInput("singular Möbius coefficients".into()));
        }
        let s = det.sqrt();
        Ok(Self {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    pub fn identity() -> Self {
        Self {
            a: cone(),
            b: czero(),
            c: czero(),
            d: cone(),
        }
    }

    /// `z -> z + t`.
    pub fn translation(t: Cx<T>) -> Self {
        Self {
            a: cone(),
            b: t,
            c: czero(),
            d: cone(),
        }
    }

    /// `z -> 1 / z`, normalized as `(i·0 + i) / (i z + 0)`.
    pub fn inversion() -> Self {
        let i = Complex::new(T::zero(), T::one());
        Self {
            a: czero(),
            b: i,
            c: i,
            d: czero(),
        }
    }

    pub fn apply(&self, p: ExtPoint<T>) -> ExtPoint<T> {
        let (x, y) = p.homogeneous();
        ExtPoint::from_homogeneous(self.a * x + self.b * y, self.c * x + self.d * y)
    }

    pub fn apply_finite(&self, z: Cx<T>) -> ExtPoint<T> {
        self.apply(ExtPoint::Finite(z))
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    /// Distance from the unitary form `d = conj(a)`, `c = -conj(b)` up to
    /// the sign ambiguity of the normalization.
    pub fn unitary_defect(&self) -> T {
        let plus = (self.d - self.a.conj()).norm() + (self.c + self.b.conj()).norm();
        let minus = (self.d + self.a.conj()).norm() + (self.c - self.b.conj()).norm();
        let det = (self.a * self.d - self.b * self.c - cone::<T>()).norm();
        plus.min(minus) + det
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.unitary_defect() <= tol
    }

    /// Haar-distributed element of SU(2), i.e. a rotation of the sphere.
    pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a = Complex::new(T::lit(g[0] / norm), T::lit(g[1] / norm));
        let b = Complex::new(T::lit(g[2] / norm), T::lit(g[3] / norm));
        Self {
            a,
            b,
            c: -b.conj(),
            d: a.conj(),
        }
    }

    /// A general Möbius map with standard normal complex coefficients,
    /// redrawn while badly conditioned.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut draw = || {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(T::lit(re), T::lit(im))
            };
            let (a, b, c, d) = (draw(), draw(), draw(), draw());
            let det = (a * d - b * c).norm();
            let scale = a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + d.norm_sqr();
            if det > T::lit(0.05) * scale {
                if let Ok(m) = Self::new(a, b, c, d) {
                    return m;
                }
            }
        }
    }

    /// The map sending `u1, u2, u3` to `0, 1, ∞`.
    pub fn to_zero_one_infinity(u1: ExtPoint<T>, u2: ExtPoint<T>, u3: ExtPoint<T>) -> Result<Self> {
        let (x1, y1) = u1.homogeneous();
        let (x2, y2) = u2.homogeneous();
        let (x3, y3) = u3.homogeneous();
        // rows vanish at u1 and u3; scaled so that u2 maps to 1
        let k1 = x2 * y3 - x3 * y2;
        let k2 = x2 * y1 - x1 * y2;
        Self::new(y1 * k1, -x1 * k1, y3 * k2, -x3 * k2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::cx;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(p: ExtPoint<f64>, q: ExtPoint<f64>) -> bool {
        chordal_distance(p, q) < 1e-12
    }

    #[test]
    fn chordal_distance_values() {
        let zero = ExtPoint::Finite(cx::<f64>(0.0, 0.0));
        assert!((chordal_distance(zero, ExtPoint::Infinity) - 2.0).abs() < 1e-15);
        let one = ExtPoint::Finite(cx(1.0, 0.0));
        assert!((chordal_distance(zero, one) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(chordal_distance::<f64>(ExtPoint::Infinity, ExtPoint::Infinity), 0.0);
    }

    #[test]
    fn three_point_map() {
        let pts = [cx::<f64>(0.3, 1.0), cx(-2.0, 0.5), cx(1.0, -1.0)];
        let m = Mobius::to_zero_one_infinity(pts[0].into(), pts[1].into(), pts[2].into()).unwrap();
        assert!(close(m.apply_finite(pts[0]), cx(0.0, 0.0).into()));
        assert!(close(m.apply_finite(pts[1]), cx(1.0, 0.0).into()));
        assert!(m.apply_finite(pts[2]).is_infinite());
        let n = Mobius::to_zero_one_infinity(pts[0].into(), ExtPoint::Infinity, pts[2].into()).unwrap();
        assert!(close(n.apply(ExtPoint::Infinity), cx(1.0, 0.0).into()));
    }

    #[test]
    fn group_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = Mobius::<f64>::random(&mut rng);
            let n = Mobius::<f64>::random(&mut rng);
            let z: ExtPoint<f64> = cx(0.7, -0.2).into();
            assert!(close(m.inverse().apply(m.apply(z)), z));
            assert!(close(m.compose(&n).apply(z), m.apply(n.apply(z))));
            let u = Mobius::<f64>::random_unitary(&mut rng);
            assert!(u.is_unitary(1e-12));
            let w: ExtPoint<f64> = cx(-3.0, 0.4).into();
            let before = chordal_distance(z, w);
            let after = chordal_distance(u.apply(z), u.apply(w));
            assert!((before - after).abs() < 1e-12);
        }
        assert!(!Mobius::<f64>::translation(cx(1.0, 0.0)).is_unitary(1e-6));
        assert!(Mobius::<f64>::inversion().apply(ExtPoint::Infinity) == ExtPoint::Finite(cx(0.0, 0.0)));
    }
}
