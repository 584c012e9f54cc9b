use super::{gp, inner, Bivector, Multivector, Quaternion, Vector3, IDENTITY_TOL};
use crate::error::{Error, Result};

/// `(I·a)(I·b)`, checked against `-a·b - I·(a×b)`.
///
/// For unit `a` and `b` the result is a unit quaternion: a non-equatorial
/// point of the 3-sphere built from two equatorial ones.
pub fn bivector_identity(a: Vector3, b: Vector3) -> Result<Quaternion> {
    let ia = inner(&Multivector::I, &a.into());
    let ib = inner(&Multivector::I, &b.into());
    let product = gp(&ia, &ib);

    let expected = Quaternion::new(-a.dot(b), -a.cross(b).dual());
    let tol = IDENTITY_TOL * (a.norm() * b.norm()).max(1.0);
    let residue = product.max_abs_diff(&expected.into());
    if residue > tol {
        return Err(Error::algebra(format!(
            "(I·a)(I·b) deviates from -a·b - I·(a×b) by {residue:e}"
        )));
    }
    Ok(Quaternion::from_even(product))
}

/// `exp(plane θ) = cos θ + plane sin θ` for a unit bivector `plane`.
pub fn rotor_exp(plane: Bivector, theta: f64) -> Result<Quaternion> {
    let n2 = plane.norm_squared();
    if (n2 - 1.0).abs() > IDENTITY_TOL || !theta.is_finite() {
        return Err(Error::domain(format!(
            "rotor plane must be a unit bivector (|B|^2 = {n2}) and the angle finite"
        )));
    }
    let (s, c) = theta.sin_cos();
    Ok(Quaternion::new(c, plane * s))
}

/// Applies `second` after `first`.
pub fn rotor_compose(second: Quaternion, first: Quaternion) -> Quaternion {
    second.gp(first)
}

/// Parallel transport of `q` by the rotor `r` (left multiplication).
pub fn transport(q: Quaternion, r: Quaternion) -> Quaternion {
    r.gp(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn planar(angle: f64) -> Vector3 {
        Vector3::new(angle.cos(), angle.sin(), 0.0)
    }

    #[test]
    fn identity_of_equal_vectors_is_minus_one() {
        let a = Vector3::new(FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2);
        let q = bivector_identity(a, a).unwrap();
        assert!(q.max_abs_diff(Quaternion::from(-1.0)) < 1e-15);
    }

    #[test]
    fn identity_of_orthogonal_vectors_is_pure_bivector() {
        let q = bivector_identity(Vector3::E1, Vector3::E2).unwrap();
        assert_eq!(q, Quaternion::new(0.0, -Bivector::E12));
    }

    #[test]
    fn zero_angle_rotor_is_identity() {
        for plane in [Bivector::E23, Bivector::E31, Bivector::E12] {
            assert_eq!(rotor_exp(plane, 0.0).unwrap(), Quaternion::ONE);
        }
    }

    #[test]
    fn rotor_exp_rejects_non_unit_plane() {
        assert!(matches!(rotor_exp(Bivector::new(1.0, 1.0, 0.0), 0.3), Err(Error::Domain(_))));
        assert!(matches!(rotor_exp(Bivector::ZERO, 0.3), Err(Error::Domain(_))));
    }

    #[test]
    fn rotor_compose_adds_angles_in_a_common_plane() {
        let r1 = rotor_exp(Bivector::E12, 0.4).unwrap();
        let r2 = rotor_exp(Bivector::E12, 0.7).unwrap();
        let r = rotor_compose(r2, r1);
        assert!(r.max_abs_diff(rotor_exp(Bivector::E12, 1.1).unwrap()) < 1e-15);
    }

    proptest! {
        #[test]
        fn identity_scalar_and_plane(t1 in 0.0..6.3f64, t2 in 0.0..6.3f64) {
            let (a, b) = (planar(t1), planar(t2));
            let q = bivector_identity(a, b).unwrap();
            let theta = a.angle_to(b);
            prop_assert!((q.scalar + theta.cos()).abs() < 1e-12);
            prop_assert!((q.bivector.norm() - theta.sin()).abs() < 1e-12);
            prop_assert!((q.norm() - 1.0).abs() < 1e-12);
        }

        // The vector product of two in-plane unit vectors is the rotor
        // through their angle on the plane dual to their normalized cross.
        #[test]
        fn vector_pair_is_a_rotor(t1 in 0.0..6.3f64, t2 in 0.0..6.3f64) {
            let (a, b) = (planar(t1), planar(t2));
            prop_assume!(a.cross(b).norm() > 1e-6);
            let c = a.cross(b).normalized().unwrap();
            let theta = a.angle_to(b);
            let r = rotor_exp(c.dual(), theta).unwrap();
            let ab = Quaternion::from_even(gp(&a.into(), &b.into()));
            prop_assert!(ab.max_abs_diff(r) < 1e-12);
        }

        #[test]
        fn transport_shifts_angle_additively(t1 in -3.0..3.0f64, t2 in -3.0..3.0f64, lam in prop::bool::ANY) {
            let sign = if lam { 1.0 } else { -1.0 };
            let q = rotor_exp(Bivector::E12, t2).unwrap() * -sign;
            let r = rotor_exp(Bivector::E12, t1).unwrap();
            let moved = transport(q, r);
            let expected = rotor_exp(Bivector::E12, t1 + t2).unwrap() * -sign;
            prop_assert!(moved.max_abs_diff(expected) < 1e-12);
        }
    }
}
