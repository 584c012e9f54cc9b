//! Geometric algebra of Euclidean 3-space.
//!
//! Every element is stored densely as eight coefficients in the fixed blade
//! order
//!
//! ```text
//! 1, e1, e2, e3, e23, e31, e12, e123
//! ```
//!
//! With this order bivector slot `k` is the dual of vector slot `k`
//! (`I e1 = e23`, `I e2 = e31`, `I e3 = e12`), so the duality map `I·v` is a
//! plain slot copy.
//!
//! The pseudoscalar `I = e1 e2 e3` is central and squares to `-1`. The
//! product kernel exploits this: writing an element as `z + u` with `z` a
//! "complex" scalar `s + p I` and `u = v + I w` a "complex" vector, the
//! geometric product is
//!
//! ```text
//! (z1 + u1)(z2 + u2) = z1 z2 + u1·u2 + z1 u2 + z2 u1 + I (u1 × u2)
//! ```
//!
//! where dot and cross extend bilinearly over `span{1, I}`.

mod rotor;
mod types;

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use rotor::{bivector_identity, rotor_compose, rotor_exp, transport};
pub use types::{Bivector, Quaternion, Vector3};

/// Absolute tolerance used by identity checks throughout the crate.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Slot indices into [`Multivector::0`].
pub mod blade {
    pub const SCALAR: usize = 0;
    pub const E1: usize = 1;
    pub const E2: usize = 2;
    pub const E3: usize = 3;
    pub const E23: usize = 4;
    pub const E31: usize = 5;
    pub const E12: usize = 6;
    pub const E123: usize = 7;

    /// Grade of each slot.
    pub const GRADE: [usize; 8] = [0, 1, 1, 1, 2, 2, 2, 3];
}

/// A general element of the 8-dimensional algebra.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Multivector(pub [f64; 8]);

#[derive(Clone, Copy)]
struct Cx {
    re: f64,
    im: f64,
}

impl Cx {
    #[inline]
    fn mul(self, o: Cx) -> Cx {
        Cx { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }

    #[inline]
    fn add(self, o: Cx) -> Cx {
        Cx { re: self.re + o.re, im: self.im + o.im }
    }

    #[inline]
    fn sub(self, o: Cx) -> Cx {
        Cx { re: self.re - o.re, im: self.im - o.im }
    }

    /// Multiplication by the pseudoscalar.
    #[inline]
    fn times_i(self) -> Cx {
        Cx { re: -self.im, im: self.re }
    }
}

impl Multivector {
    pub const ZERO: Multivector = Multivector([0.0; 8]);
    pub const ONE: Multivector = Multivector::basis(blade::SCALAR);
    pub const E1: Multivector = Multivector::basis(blade::E1);
    pub const E2: Multivector = Multivector::basis(blade::E2);
    pub const E3: Multivector = Multivector::basis(blade::E3);
    pub const E23: Multivector = Multivector::basis(blade::E23);
    pub const E31: Multivector = Multivector::basis(blade::E31);
    pub const E12: Multivector = Multivector::basis(blade::E12);
    /// The unit pseudoscalar `e1 ∧ e2 ∧ e3`.
    pub const I: Multivector = Multivector::basis(blade::E123);

    pub const fn basis(slot: usize) -> Multivector {
        let mut c = [0.0; 8];
        c[slot] = 1.0;
        Multivector(c)
    }

    pub const fn scalar_mv(s: f64) -> Multivector {
        let mut c = [0.0; 8];
        c[0] = s;
        Multivector(c)
    }

    pub fn scalar(&self) -> f64 {
        self.0[blade::SCALAR]
    }

    pub fn vector(&self) -> Vector3 {
        Vector3([self.0[1], self.0[2], self.0[3]])
    }

    pub fn bivector(&self) -> Bivector {
        Bivector([self.0[4], self.0[5], self.0[6]])
    }

    pub fn trivector(&self) -> f64 {
        self.0[blade::E123]
    }

    /// Grade-`k` projection. Grades above 3 are empty.
    pub fn grade(&self, k: usize) -> Multivector {
        let mut out = Multivector::ZERO;
        for (slot, &g) in blade::GRADE.iter().enumerate() {
            if g == k {
                out.0[slot] = self.0[slot];
            }
        }
        out
    }

    /// Reversion: grades 2 and 3 change sign.
    pub fn reverse(&self) -> Multivector {
        let c = self.0;
        Multivector([c[0], c[1], c[2], c[3], -c[4], -c[5], -c[6], -c[7]])
    }

    /// Squared norm, the scalar part of `reverse(a) a`. In an orthonormal
    /// Euclidean basis this is the sum of squared coefficients.
    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Inverse of a versor, `reverse(a) / (a reverse(a))`.
    ///
    /// Fails for zero and for elements whose product with their reverse is
    /// not a pure scalar.
    pub fn inverse(&self) -> Result<Multivector> {
        let rev = self.reverse();
        let n2 = gp(self, &rev);
        let s = n2.scalar();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::domain("cannot invert a zero or non-finite element"));
        }
        let residue = n2.0[1..].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if residue > IDENTITY_TOL * s.max(1.0) {
            return Err(Error::domain(format!(
                "element is not a versor (a·reverse(a) has non-scalar residue {residue:e})"
            )));
        }
        Ok(rev * (1.0 / s))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Multivector) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// True when every coefficient outside grade `k` is within `tol` of zero.
    pub fn is_pure_grade(&self, k: usize, tol: f64) -> bool {
        blade::GRADE.iter().zip(self.0.iter()).all(|(&g, c)| g == k || c.abs() <= tol)
    }

    /// Golden-file rendering with 17 significant digits per coefficient.
    pub fn to_golden_string(&self) -> String {
        const NAMES: [&str; 8] = ["", " e1", " e2", " e3", " e23", " e31", " e12", " e123"];
        self.0
            .iter()
            .zip(NAMES)
            .map(|(c, name)| format!("{c:.16e}{name}"))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    #[inline]
    fn split(&self) -> (Cx, [Cx; 3]) {
        let c = &self.0;
        (
            Cx { re: c[0], im: c[7] },
            [
                Cx { re: c[1], im: c[4] },
                Cx { re: c[2], im: c[5] },
                Cx { re: c[3], im: c[6] },
            ],
        )
    }

    #[inline]
    fn join(z: Cx, u: [Cx; 3]) -> Multivector {
        Multivector([z.re, u[0].re, u[1].re, u[2].re, u[0].im, u[1].im, u[2].im, z.im])
    }
}

/// The geometric product.
#[inline]
pub fn gp(a: &Multivector, b: &Multivector) -> Multivector {
    let (z1, u1) = a.split();
    let (z2, u2) = b.split();

    let dot = u1[0].mul(u2[0]).add(u1[1].mul(u2[1])).add(u1[2].mul(u2[2]));
    let cross = [
        u1[1].mul(u2[2]).sub(u1[2].mul(u2[1])),
        u1[2].mul(u2[0]).sub(u1[0].mul(u2[2])),
        u1[0].mul(u2[1]).sub(u1[1].mul(u2[0])),
    ];

    let z = z1.mul(z2).add(dot);
    let mut u = [Cx { re: 0.0, im: 0.0 }; 3];
    for k in 0..3 {
        u[k] = z1.mul(u2[k]).add(z2.mul(u1[k])).add(cross[k].times_i());
    }
    Multivector::join(z, u)
}

fn graded_parts(a: &Multivector) -> [Option<Multivector>; 4] {
    let mut parts = [None; 4];
    for (k, part) in parts.iter_mut().enumerate() {
        let g = a.grade(k);
        if g.0.iter().any(|&c| c != 0.0) {
            *part = Some(g);
        }
    }
    parts
}

/// Outer product: the grade `r + s` part of each graded product.
pub fn wedge(a: &Multivector, b: &Multivector) -> Multivector {
    let (pa, pb) = (graded_parts(a), graded_parts(b));
    let mut out = Multivector::ZERO;
    for (r, ar) in pa.iter().enumerate() {
        for (s, bs) in pb.iter().enumerate() {
            if let (Some(ar), Some(bs)) = (ar, bs) {
                if r + s <= 3 {
                    out += gp(ar, bs).grade(r + s);
                }
            }
        }
    }
    out
}

/// Inner product: the grade `|r - s|` part of each graded product.
///
/// For two vectors this is the dot product. For a trivector against a
/// vector (in either order) it is the dual bivector, so `I·e3 = e12` and
/// `a ∧ b = I·(a × b)`. Scalars act by plain scaling.
pub fn inner(a: &Multivector, b: &Multivector) -> Multivector {
    let (pa, pb) = (graded_parts(a), graded_parts(b));
    let mut out = Multivector::ZERO;
    for (r, ar) in pa.iter().enumerate() {
        for (s, bs) in pb.iter().enumerate() {
            if let (Some(ar), Some(bs)) = (ar, bs) {
                out += gp(ar, bs).grade(r.abs_diff(s));
            }
        }
    }
    out
}

/// `xy - yx`.
pub fn commutator(x: &Multivector, y: &Multivector) -> Multivector {
    gp(x, y) - gp(y, x)
}

impl Add for Multivector {
    type Output = Multivector;
    fn add(mut self, rhs: Multivector) -> Multivector {
        self += rhs;
        self
    }
}

impl AddAssign for Multivector {
    fn add_assign(&mut self, rhs: Multivector) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for Multivector {
    type Output = Multivector;
    fn sub(mut self, rhs: Multivector) -> Multivector {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl Neg for Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        Multivector(self.0.map(|c| -c))
    }
}

impl Mul<f64> for Multivector {
    type Output = Multivector;
    fn mul(self, rhs: f64) -> Multivector {
        Multivector(self.0.map(|c| c * rhs))
    }
}

impl Mul for Multivector {
    type Output = Multivector;
    fn mul(self, rhs: Multivector) -> Multivector {
        gp(&self, &rhs)
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_golden_string())
    }
}

pub mod reference;

#[cfg(test)]
mod tests {
    use super::reference::reference_gp as oracle_gp;
    use super::*;
    use proptest::prelude::*;

    fn mv() -> impl Strategy<Value = Multivector> {
        prop::array::uniform8(-2.0..2.0f64).prop_map(Multivector)
    }

    fn unit_vec() -> impl Strategy<Value = Vector3> {
        (0.0..std::f64::consts::TAU, -1.0..1.0f64).prop_map(|(phi, z)| {
            let r = (1.0 - z * z).sqrt();
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
    }

    #[test]
    fn orthonormal_vectors_multiply_to_bivector() {
        assert_eq!(Multivector::E1 * Multivector::E2, Multivector::E12);
        assert_eq!(Multivector::E2 * Multivector::E3, Multivector::E23);
        assert_eq!(Multivector::E3 * Multivector::E1, Multivector::E31);
    }

    #[test]
    fn pseudoscalar_and_bivectors_square_to_minus_one() {
        let minus_one = Multivector::scalar_mv(-1.0);
        assert_eq!(Multivector::I * Multivector::I, minus_one);
        for b in [Multivector::E23, Multivector::E31, Multivector::E12] {
            assert_eq!(b * b, minus_one);
        }
        for v in [Multivector::E1, Multivector::E2, Multivector::E3] {
            assert_eq!(v * v, Multivector::ONE);
        }
    }

    #[test]
    fn full_cayley_table_matches_bitmask_oracle() {
        for i in 0..8 {
            for j in 0..8 {
                let a = Multivector::basis(i);
                let b = Multivector::basis(j);
                assert_eq!(gp(&a, &b), oracle_gp(&a, &b), "blades {i} x {j}");
            }
        }
    }

    #[test]
    fn wedge_and_inner_examples() {
        assert_eq!(wedge(&Multivector::E1, &Multivector::E1), Multivector::ZERO);
        assert_eq!(inner(&Multivector::I, &Multivector::E3), Multivector::E12);
        assert_eq!(inner(&Multivector::E3, &Multivector::I), Multivector::E12);
        assert_eq!(inner(&Multivector::I, &Multivector::E1), Multivector::E23);
        assert_eq!(inner(&Multivector::I, &Multivector::E2), Multivector::E31);
    }

    #[test]
    fn reverse_flips_bivectors() {
        assert_eq!(Multivector::E12.reverse(), -Multivector::E12);
        assert_eq!(Multivector::I.reverse(), -Multivector::I);
    }

    #[test]
    fn norm_of_dual_unit_vector_is_one() {
        let b = inner(&Multivector::I, &Multivector::E1);
        assert_eq!(b.norm(), 1.0);
    }

    #[test]
    fn inverse_of_negated_dual_is_dual() {
        let a = Vector3::new(0.6, 0.8, 0.0);
        let minus = -Multivector::from(a.dual());
        let inv = minus.inverse().unwrap();
        assert!(inv.max_abs_diff(&Multivector::from(a.dual())) < 1e-15);
        assert!((gp(&inv, &minus) - Multivector::ONE).max_abs() < 1e-15);
    }

    #[test]
    fn inverse_rejects_zero_and_non_versors() {
        assert!(matches!(Multivector::ZERO.inverse(), Err(Error::Domain(_))));
        let not_versor = Multivector::ONE + Multivector::E1;
        assert!(matches!(not_versor.inverse(), Err(Error::Domain(_))));
    }

    #[test]
    fn golden_rendering() {
        let m = Multivector::ONE * 1.5 - Multivector::E12;
        assert_eq!(
            m.to_golden_string(),
            "1.5000000000000000e0 + 0.0000000000000000e0 e1 + 0.0000000000000000e0 e2 + \
             0.0000000000000000e0 e3 + 0.0000000000000000e0 e23 + 0.0000000000000000e0 e31 + \
             -1.0000000000000000e0 e12 + 0.0000000000000000e0 e123"
        );
    }

    proptest! {
        #[test]
        fn gp_matches_oracle(a in mv(), b in mv()) {
            prop_assert!(gp(&a, &b).max_abs_diff(&oracle_gp(&a, &b)) < 1e-12);
        }

        #[test]
        fn gp_is_associative(a in mv(), b in mv(), c in mv()) {
            let l = gp(&a, &gp(&b, &c));
            let r = gp(&gp(&a, &b), &c);
            prop_assert!(l.max_abs_diff(&r) < 1e-12);
        }

        #[test]
        fn grades_partition(a in mv()) {
            let sum = a.grade(0) + a.grade(1) + a.grade(2) + a.grade(3);
            prop_assert_eq!(sum, a);
            prop_assert_eq!(a.grade(4), Multivector::ZERO);
        }

        #[test]
        fn norm_is_scalar_part_of_reverse_product(a in mv()) {
            let s = gp(&a.reverse(), &a).scalar();
            prop_assert!((s - a.norm_squared()).abs() < 1e-12);
            prop_assert!(s >= 0.0);
        }

        #[test]
        fn vector_product_is_inner_plus_wedge(a in unit_vec(), b in unit_vec()) {
            let (a, b) = (Multivector::from(a), Multivector::from(b));
            let split = inner(&a, &b) + wedge(&a, &b);
            prop_assert!(gp(&a, &b).max_abs_diff(&split) < 1e-15);
        }

        #[test]
        fn wedge_is_dual_of_cross(a in unit_vec(), b in unit_vec()) {
            let lhs = wedge(&Multivector::from(a), &Multivector::from(b));
            let rhs = inner(&Multivector::I, &Multivector::from(a.cross(b)));
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn commutator_of_scalar_vanishes(s in -5.0..5.0f64, a in mv()) {
            let c = commutator(&Multivector::scalar_mv(s), &a);
            prop_assert_eq!(c, Multivector::ZERO);
            prop_assert_eq!(commutator(&a, &a), Multivector::ZERO);
        }
    }
}
