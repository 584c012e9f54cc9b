use hopfsim::ga::{self, reference::reference_gp, Multivector, Quaternion, Vector3};
use hopfsim::model::Orientation;
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn mv() -> impl Strategy<Value = Multivector> {
    prop::array::uniform8(-2.0..2.0f64).prop_map(Multivector)
}

fn unit_vector() -> impl Strategy<Value = Vector3> {
    prop::array::uniform3(-1.0..1.0f64)
        .prop_filter_map("degenerate", |c| Vector3::new(c[0], c[1], c[2]).normalized().filter(|_| c.iter().any(|x| x.abs() > 1e-3)))
}

fn unit_quaternion() -> impl Strategy<Value = Quaternion> {
    prop::array::uniform4(-1.0..1.0f64).prop_filter_map("degenerate", |c| {
        let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        (n > 1e-3).then(|| Quaternion::new(c[0] / n, hopfsim::ga::Bivector([c[1] / n, c[2] / n, c[3] / n])))
    })
}

fn orientation() -> impl Strategy<Value = Orientation> {
    prop_oneof![Just(Orientation::Right), Just(Orientation::Left)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn product_matches_reference_table(a in mv(), b in mv()) {
        prop_assert!(ga::gp(&a, &b).max_abs_diff(&reference_gp(&a, &b)) <= TOL);
    }

    #[test]
    fn product_is_associative(a in mv(), b in mv(), c in mv()) {
        let l = ga::gp(&ga::gp(&a, &b), &c);
        let r = ga::gp(&a, &ga::gp(&b, &c));
        prop_assert!(l.max_abs_diff(&r) <= TOL, "{}", l.max_abs_diff(&r));
    }

    #[test]
    fn product_distributes(a in mv(), b in mv(), c in mv()) {
        let l = ga::gp(&a, &(b + c));
        let r = ga::gp(&a, &b) + ga::gp(&a, &c);
        prop_assert!(l.max_abs_diff(&r) <= TOL);
    }

    #[test]
    fn grades_sum_to_the_whole(a in mv()) {
        let sum = (0..4).fold(Multivector::ZERO, |acc, k| acc + a.grade(k));
        prop_assert_eq!(sum, a);
    }

    #[test]
    fn reverse_is_an_anti_automorphism(a in mv(), b in mv()) {
        let l = ga::gp(&a, &b).reverse();
        let r = ga::gp(&b.reverse(), &a.reverse());
        prop_assert!(l.max_abs_diff(&r) <= TOL);
    }

    /// (I·a)(I·b) + a·b + I·(a×b) = 0.
    #[test]
    fn dual_vector_identity(a in unit_vector(), b in unit_vector()) {
        let ia = Multivector::from(a.dual());
        let ib = Multivector::from(b.dual());
        let rest = Multivector::scalar_mv(a.dot(b)) + Multivector::from(a.cross(b).dual());
        prop_assert!((ga::gp(&ia, &ib) + rest).max_abs() <= TOL);
    }

    #[test]
    fn unit_quaternions_are_closed(p in unit_quaternion(), q in unit_quaternion()) {
        let r = Quaternion::from_even(ga::gp(&p.into(), &q.into()));
        prop_assert!((r.norm() - 1.0).abs() <= TOL);
        prop_assert!((p.gp(q).norm() - 1.0).abs() <= TOL);
    }

    #[test]
    fn unit_vectors_square_to_one(a in unit_vector()) {
        let v = Multivector::from(a);
        prop_assert!(ga::gp(&v, &v).max_abs_diff(&Multivector::ONE) <= TOL);
    }

    /// The oriented wedge of two vectors is μ·(a × b).
    #[test]
    fn oriented_wedge_is_dual_of_cross(a in unit_vector(), b in unit_vector(), lambda in orientation()) {
        let w = lambda.wedge(&a.into(), &b.into());
        let expected = Multivector::from(lambda.dual(a.cross(b)));
        prop_assert!(w.max_abs_diff(&expected) <= TOL);
    }
}

/// (μ·e_j)(μ·e_k) = −δ_jk − ε_jkl (μ·e_l) under the product of either orientation.
#[test]
fn handed_bivector_table() {
    let e = [Vector3::E1, Vector3::E2, Vector3::E3];
    for lambda in Orientation::BOTH {
        for j in 0..3 {
            for k in 0..3 {
                let lhs = lambda.product(&lambda.dual(e[j]).into(), &lambda.dual(e[k]).into());
                let mut rhs = Multivector::scalar_mv(if j == k { -1.0 } else { 0.0 });
                for l in 0..3 {
                    let eps = levi_civita(j, k, l);
                    if eps != 0.0 {
                        rhs = rhs - Multivector::from(lambda.dual(e[l])) * eps;
                    }
                }
                assert_eq!(lhs, rhs, "λ = {}, j = {j}, k = {k}", lambda.lambda());
            }
        }
    }
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

#[test]
fn embedding_zeroes_other_grades() {
    let q = Quaternion::new(0.5, hopfsim::ga::Bivector([0.1, -0.2, 0.3]));
    let m = Multivector::from(q);
    for slot in [1, 2, 3, 7] {
        assert_eq!(m.0[slot], 0.0);
    }
}
