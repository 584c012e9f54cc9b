//! Fuzzed identity suite over the algebra kernel.
//!
//! Each family reports the number of cases and the largest absolute
//! deviation seen. Inputs come from the fuzz stream of the random contract,
//! so a given seed always checks the same elements.

use serde::{Deserialize, Serialize};

use crate::ga::{self, reference::reference_gp, Multivector, Quaternion, Vector3, IDENTITY_TOL};
use crate::model::Orientation;
use crate::rng::{streams, RngContract};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyResult {
    pub name: String,
    pub cases: u64,
    pub max_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub samples: u64,
    pub tolerance: f64,
    pub families: Vec<FamilyResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.families.iter().all(|f| f.passed)
    }
}

struct Fuzz {
    rng: RngContract,
    counter: u64,
}

impl Fuzz {
    fn unit(&mut self) -> f64 {
        let u = self.rng.unit_f64(self.counter);
        self.counter += 1;
        2.0 * u - 1.0
    }

    fn mv(&mut self) -> Multivector {
        Multivector(std::array::from_fn(|_| self.unit()))
    }

    fn unit_vector(&mut self) -> Vector3 {
        loop {
            let v = Vector3::new(self.unit(), self.unit(), self.unit());
            if let Some(u) = v.normalized().filter(|_| v.norm() > 1e-3) {
                return u;
            }
        }
    }

    fn unit_quaternion(&mut self) -> Quaternion {
        loop {
            let q = Quaternion::new(self.unit(), ga::Bivector::new(self.unit(), self.unit(), self.unit()));
            let n = q.norm();
            if n > 1e-3 {
                return q * (1.0 / n);
            }
        }
    }
}

struct Family {
    name: &'static str,
    cases: u64,
    max_error: f64,
}

impl Family {
    fn new(name: &'static str) -> Self {
        Family { name, cases: 0, max_error: 0.0 }
    }

    fn record(&mut self, err: f64) {
        self.cases += 1;
        // NaN must fail, so compare with `!(err <= max)`.
        if !(err <= self.max_error) {
            self.max_error = err;
        }
    }

    fn finish(self) -> FamilyResult {
        FamilyResult {
            name: self.name.to_owned(),
            cases: self.cases,
            max_error: self.max_error,
            passed: self.max_error <= IDENTITY_TOL,
        }
    }
}

fn levi_civita(j: usize, k: usize, l: usize) -> f64 {
    match (j, k, l) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Runs every family on `samples` fuzzed inputs drawn from `seed`.
pub fn run_identity_suite(samples: u64, seed: u64) -> VerifyReport {
    let mut fz = Fuzz { rng: RngContract::new(seed, streams::FUZZ), counter: 0 };

    let mut reference = Family::new("product_matches_reference_table");
    let mut assoc = Family::new("associativity");
    let mut distrib = Family::new("distributivity");
    let mut grades = Family::new("grade_decomposition");
    let mut split = Family::new("vector_product_split");
    let mut table = Family::new("handed_basis_table");
    let mut identity = Family::new("dual_vector_product_identity");
    let mut closure = Family::new("unit_quaternion_closure");

    for _ in 0..samples {
        let (a, b, c) = (fz.mv(), fz.mv(), fz.mv());
        reference.record(ga::gp(&a, &b).max_abs_diff(&reference_gp(&a, &b)));
        assoc.record(ga::gp(&ga::gp(&a, &b), &c).max_abs_diff(&ga::gp(&a, &ga::gp(&b, &c))));
        distrib.record(ga::gp(&a, &(b + c)).max_abs_diff(&(ga::gp(&a, &b) + ga::gp(&a, &c))));
        let sum = (0..4).fold(Multivector::ZERO, |acc, k| acc + a.grade(k));
        grades.record(sum.max_abs_diff(&a));

        let (u, v) = (fz.unit_vector(), fz.unit_vector());
        let (um, vm) = (Multivector::from(u), Multivector::from(v));
        split.record(ga::gp(&um, &vm).max_abs_diff(&(ga::inner(&um, &vm) + ga::wedge(&um, &vm))));

        match ga::bivector_identity(u, v) {
            Ok(q) => identity.record((q.norm() - 1.0).abs()),
            Err(_) => identity.record(f64::INFINITY),
        }
        for lam in Orientation::BOTH {
            let lhs = lam.product(&lam.dual(u).into(), &lam.dual(v).into());
            let rhs = Multivector::scalar_mv(-u.dot(v)) - Multivector::from(lam.dual(u.cross(v)));
            identity.record(lhs.max_abs_diff(&rhs));
        }

        let (p, q) = (fz.unit_quaternion(), fz.unit_quaternion());
        closure.record((p.gp(q).norm() - 1.0).abs());
    }

    let e = [Vector3::E1, Vector3::E2, Vector3::E3];
    for lam in Orientation::BOTH {
        for j in 0..3 {
            for k in 0..3 {
                let lhs = lam.product(&lam.dual(e[j]).into(), &lam.dual(e[k]).into());
                let mut rhs = Multivector::scalar_mv(if j == k { -1.0 } else { 0.0 });
                for (l, el) in e.iter().enumerate() {
                    rhs = rhs - Multivector::from(lam.dual(*el)) * levi_civita(j, k, l);
                }
                table.record(lhs.max_abs_diff(&rhs));
            }
        }
    }

    VerifyReport {
        seed,
        samples,
        tolerance: IDENTITY_TOL,
        families: [reference, assoc, distrib, grades, split, table, identity, closure]
            .into_iter()
            .map(Family::finish)
            .collect(),
    }
}
