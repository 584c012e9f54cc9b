use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::Multivector;

/// A grade-1 element on `(e1, e2, e3)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vector3(pub [f64; 3]);

impl Vector3 {
    pub const ZERO: Vector3 = Vector3([0.0; 3]);
    pub const E1: Vector3 = Vector3([1.0, 0.0, 0.0]);
    pub const E2: Vector3 = Vector3([0.0, 1.0, 0.0]);
    pub const E3: Vector3 = Vector3([0.0, 0.0, 1.0]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vector3([x, y, z])
    }

    pub fn x(self) -> f64 {
        self.0[0]
    }

    pub fn y(self) -> f64 {
        self.0[1]
    }

    pub fn z(self) -> f64 {
        self.0[2]
    }

    pub fn dot(self, other: Vector3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(self, other: Vector3) -> Vector3 {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = other.0;
        Vector3([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Returns `None` for the zero vector.
    pub fn normalized(self) -> Option<Vector3> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    /// Unsigned angle in `[0, π]`.
    pub fn angle_to(self, other: Vector3) -> f64 {
        let c = self.cross(other).norm();
        c.atan2(self.dot(other))
    }

    /// The dual bivector `I·v`; slot `k` of the bivector copies slot `k` of
    /// the vector.
    pub fn dual(self) -> Bivector {
        Bivector(self.0)
    }
}

/// A grade-2 element on `(e23, e31, e12)`.
///
/// Slot `k` is the dual of basis vector `k`, so `I·e1 = e23`, `I·e2 = e31`
/// and `I·e3 = e12`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Bivector(pub [f64; 3]);

impl Bivector {
    pub const ZERO: Bivector = Bivector([0.0; 3]);
    pub const E23: Bivector = Bivector([1.0, 0.0, 0.0]);
    pub const E31: Bivector = Bivector([0.0, 1.0, 0.0]);
    pub const E12: Bivector = Bivector([0.0, 0.0, 1.0]);

    pub const fn new(yz: f64, zx: f64, xy: f64) -> Self {
        Bivector([yz, zx, xy])
    }

    /// Squared magnitude. Equals the scalar part of `reverse(B) B`.
    pub fn norm_squared(self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// The vector `n` with `I·n` equal to this bivector.
    pub fn undual(self) -> Vector3 {
        Vector3(self.0)
    }

    pub fn max_abs_diff(self, other: Bivector) -> f64 {
        (0..3).map(|k| (self.0[k] - other.0[k]).abs()).fold(0.0, f64::max)
    }
}

/// An element of the even subalgebra: scalar plus bivector.
///
/// Unit quaternions are the points of the 3-sphere; the set is closed under
/// the geometric product.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub scalar: f64,
    pub bivector: Bivector,
}

impl Quaternion {
    pub const ONE: Quaternion = Quaternion { scalar: 1.0, bivector: Bivector::ZERO };

    pub const fn new(scalar: f64, bivector: Bivector) -> Self {
        Quaternion { scalar, bivector }
    }

    pub fn norm_squared(self) -> f64 {
        self.scalar * self.scalar + self.bivector.norm_squared()
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Reversion flips the bivector part.
    pub fn reverse(self) -> Quaternion {
        Quaternion::new(self.scalar, -self.bivector)
    }

    pub fn gp(self, other: Quaternion) -> Quaternion {
        // The even subalgebra is closed, so the odd grades of the full
        // product vanish identically.
        Quaternion::from_even(Multivector::from(self) * Multivector::from(other))
    }

    /// Projects a multivector onto its even grades, discarding odd parts.
    pub fn from_even(m: Multivector) -> Quaternion {
        Quaternion::new(m.scalar(), m.bivector())
    }

    pub fn max_abs_diff(self, other: Quaternion) -> f64 {
        (self.scalar - other.scalar).abs().max(self.bivector.max_abs_diff(other.bivector))
    }
}

macro_rules! impl_linear {
    ($ty:ident) => {
        impl Add for $ty {
            type Output = $ty;
            fn add(self, rhs: $ty) -> $ty {
                $ty([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
            }
        }

        impl Sub for $ty {
            type Output = $ty;
            fn sub(self, rhs: $ty) -> $ty {
                $ty([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
            }
        }

        impl Neg for $ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                $ty([-self.0[0], -self.0[1], -self.0[2]])
            }
        }

        impl Mul<f64> for $ty {
            type Output = $ty;
            fn mul(self, rhs: f64) -> $ty {
                $ty([self.0[0] * rhs, self.0[1] * rhs, self.0[2] * rhs])
            }
        }
    };
}

impl_linear!(Vector3);
impl_linear!(Bivector);

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, rhs: Quaternion) -> Quaternion {
        Quaternion::new(self.scalar + rhs.scalar, self.bivector + rhs.bivector)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, rhs: Quaternion) -> Quaternion {
        Quaternion::new(self.scalar - rhs.scalar, self.bivector - rhs.bivector)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.scalar, -self.bivector)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, rhs: f64) -> Quaternion {
        Quaternion::new(self.scalar * rhs, self.bivector * rhs)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, rhs: Quaternion) -> Quaternion {
        self.gp(rhs)
    }
}

impl From<Vector3> for Multivector {
    fn from(v: Vector3) -> Multivector {
        let mut c = [0.0; 8];
        c[1..4].copy_from_slice(&v.0);
        Multivector(c)
    }
}

impl From<Bivector> for Multivector {
    fn from(b: Bivector) -> Multivector {
        let mut c = [0.0; 8];
        c[4..7].copy_from_slice(&b.0);
        Multivector(c)
    }
}

impl From<Quaternion> for Multivector {
    fn from(q: Quaternion) -> Multivector {
        let mut c = [0.0; 8];
        c[0] = q.scalar;
        c[4..7].copy_from_slice(&q.bivector.0);
        Multivector(c)
    }
}

impl From<f64> for Multivector {
    fn from(s: f64) -> Multivector {
        Multivector::scalar_mv(s)
    }
}

impl From<Bivector> for Quaternion {
    fn from(b: Bivector) -> Quaternion {
        Quaternion::new(0.0, b)
    }
}

impl From<f64> for Quaternion {
    fn from(s: f64) -> Quaternion {
        Quaternion::new(s, Bivector::ZERO)
    }
}
