//! The measurement-event model.
//!
//! The only hidden state of a trial is the handedness `λ ∈ {+1, -1}` of the
//! bivector basis, with `μ = λI`. Handedness is a property of the algebra in
//! which the trial's products are evaluated: for `λ = +1` it is the ordinary
//! geometric product, for `λ = -1` the opposite product `a∘b = ba`. Under
//! that rule the basis table
//!
//! ```text
//! (μ·e_j)(μ·e_k) = -δ_jk - ε_jkl (μ·e_l)
//! ```
//!
//! holds for both orientations. Products between a trial's factors go
//! through [`Orientation::product`]; fixed, non-random quantities (setting
//! vectors, analyzer bivectors, rotors) use the plain product.
//!
//! Angles are radians throughout.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ga::{self, Bivector, Multivector, Quaternion, Vector3, IDENTITY_TOL};
use crate::stats;

/// Trials at which the release build re-derives the raw score through the
/// full product (one in this many).
pub const RELEASE_CHECK_PERIOD: u64 = 1024;

/// Handedness of the bivector basis for one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    /// `λ = +1`, `μ = +I`.
    Right,
    /// `λ = -1`, `μ = -I`.
    Left,
}

impl Orientation {
    pub const BOTH: [Orientation; 2] = [Orientation::Right, Orientation::Left];

    pub fn from_lambda(lambda: i8) -> Result<Self> {
        match lambda {
            1 => Ok(Orientation::Right),
            -1 => Ok(Orientation::Left),
            other => Err(Error::domain(format!("λ must be ±1, got {other}"))),
        }
    }

    pub fn lambda(self) -> i8 {
        match self {
            Orientation::Right => 1,
            Orientation::Left => -1,
        }
    }

    pub fn sign(self) -> f64 {
        f64::from(self.lambda())
    }

    /// The volume form `μ = λI`.
    pub fn mu(self) -> Multivector {
        Multivector::I * self.sign()
    }

    /// `μ·v` through the inner product.
    pub fn dual(self, v: Vector3) -> Bivector {
        ga::inner(&self.mu(), &v.into()).bivector()
    }

    /// The geometric product of the algebra with this handedness.
    #[inline]
    pub fn product(self, a: &Multivector, b: &Multivector) -> Multivector {
        match self {
            Orientation::Right => ga::gp(a, b),
            Orientation::Left => ga::gp(b, a),
        }
    }

    pub fn commutator(self, a: &Multivector, b: &Multivector) -> Multivector {
        self.product(a, b) - self.product(b, a)
    }

    /// Outer product in this handedness: for vectors `a ∧ b = μ·(a × b)`.
    pub fn wedge(self, a: &Multivector, b: &Multivector) -> Multivector {
        match self {
            Orientation::Right => ga::wedge(a, b),
            Orientation::Left => ga::wedge(b, a),
        }
    }
}

impl Serialize for Orientation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.lambda())
    }
}

impl<'de> Deserialize<'de> for Orientation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i8::deserialize(d)?;
        Orientation::from_lambda(v).map_err(serde::de::Error::custom)
    }
}

/// A detection result, serialized as `-1` or `1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(Error::domain(format!("outcome must be ±1, got {other}"))),
        }
    }

    fn from_sign(s: f64) -> Outcome {
        if s > 0.0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Outcome::from_value(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Station {
    A,
    B,
}

/// One joint trial of the monolithic simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub lambda: Orientation,
    pub alpha: f64,
    pub beta: f64,
    pub raw_a: Outcome,
    pub raw_b: Outcome,
}

/// `ã = e1 cos 2θ + e2 sin 2θ`.
pub fn setting_vector(angle: f64) -> Result<Vector3> {
    if !angle.is_finite() {
        return Err(Error::domain(format!("polarizer angle must be finite, got {angle}")));
    }
    let (s, c) = (2.0 * angle).sin_cos();
    Ok(Vector3::new(c, s, 0.0))
}

/// A polarizer at a fixed angle together with its non-random analyzer factor
/// (`-I·ã` for station A, `+I·b̃` for station B).
#[derive(Clone, Copy, Debug)]
pub struct Analyzer {
    station: Station,
    angle: f64,
    setting: Vector3,
    fixed: Multivector,
}

impl Analyzer {
    pub fn new(station: Station, angle: f64) -> Result<Self> {
        let setting = setting_vector(angle)?;
        let sign = match station {
            Station::A => -1.0,
            Station::B => 1.0,
        };
        let fixed = ga::inner(&(Multivector::I * sign), &setting.into());
        Ok(Analyzer { station, angle, setting, fixed })
    }

    pub fn station(&self) -> Station {
        self.station
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn setting(&self) -> Vector3 {
        self.setting
    }

    /// The standard-deviation bivector of the raw score.
    pub fn sigma(&self) -> Bivector {
        self.fixed.bivector()
    }

    /// The random factor `μ·ã`.
    pub fn polarization(&self, lambda: Orientation) -> Bivector {
        self.setting.dual() * lambda.sign()
    }

    /// Raw score through the full product `(fixed)(μ·ã)`, which must be an
    /// exact scalar ±1.
    pub fn raw_score(&self, lambda: Orientation) -> Result<Outcome> {
        let random = Multivector::from(self.polarization(lambda));
        let p = lambda.product(&self.fixed, &random);
        let s = p.scalar();
        let residue = p.0[1..].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if residue > IDENTITY_TOL || ((s.abs() - 1.0).abs() > IDENTITY_TOL) {
            return Err(Error::algebra(format!(
                "raw score at station {:?}, angle {} is not a scalar ±1: {p}",
                self.station, self.angle
            )));
        }
        Ok(Outcome::from_sign(s))
    }

    /// Closed form of [`Analyzer::raw_score`]: `λ` at A, `-λ` at B.
    #[inline]
    pub fn raw_score_closed(&self, lambda: Orientation) -> Outcome {
        match self.station {
            Station::A => Outcome::from_sign(lambda.sign()),
            Station::B => Outcome::from_sign(-lambda.sign()),
        }
    }

    /// Hot-loop raw score. Every trial goes through the full product in
    /// debug builds; release builds re-derive one trial in
    /// [`RELEASE_CHECK_PERIOD`] and use the closed form otherwise.
    #[inline]
    pub fn score_trial(&self, lambda: Orientation, trial: u64) -> Result<Outcome> {
        let closed = self.raw_score_closed(lambda);
        if cfg!(debug_assertions) || trial.is_multiple_of(RELEASE_CHECK_PERIOD) {
            let full = self.raw_score(lambda)?;
            if full != closed {
                return Err(Error::algebra(format!(
                    "raw score closed form disagrees with product form at trial {trial}"
                )));
            }
        }
        Ok(closed)
    }

    /// Standard score: the raw score left-divided by its standard deviation
    /// bivector, checked against `μ·ã`.
    pub fn standard_score(&self, lambda: Orientation) -> Result<Bivector> {
        let raw = Multivector::scalar_mv(f64::from(self.raw_score(lambda)?.value()));
        let z = stats::zscore(&raw, &Multivector::ZERO, &self.fixed)?;
        let direct = self.polarization(lambda);
        if !z.is_pure_grade(2, IDENTITY_TOL) || z.bivector().max_abs_diff(direct) > IDENTITY_TOL {
            return Err(Error::algebra(format!(
                "standard score {z} differs from μ·ã at angle {}",
                self.angle
            )));
        }
        Ok(z.bivector())
    }
}

pub fn raw_score_a(alpha: f64, lambda: Orientation) -> Result<Outcome> {
    Analyzer::new(Station::A, alpha)?.raw_score(lambda)
}

pub fn raw_score_b(beta: f64, lambda: Orientation) -> Result<Outcome> {
    Analyzer::new(Station::B, beta)?.raw_score(lambda)
}

pub fn standard_score_a(alpha: f64, lambda: Orientation) -> Result<Bivector> {
    Analyzer::new(Station::A, alpha)?.standard_score(lambda)
}

pub fn standard_score_b(beta: f64, lambda: Orientation) -> Result<Bivector> {
    Analyzer::new(Station::B, beta)?.standard_score(lambda)
}

/// `-I·ã`.
pub fn sigma_raw_a(alpha: f64) -> Result<Bivector> {
    Ok(Analyzer::new(Station::A, alpha)?.sigma())
}

/// `+I·b̃`.
pub fn sigma_raw_b(beta: f64) -> Result<Bivector> {
    Ok(Analyzer::new(Station::B, beta)?.sigma())
}

/// Product of the two standard scores, a point of the 3-sphere, checked
/// against `-cos 2(α-β) + (μ·e3) sin 2(α-β)`.
pub fn score_product(alpha: f64, beta: f64, lambda: Orientation) -> Result<Quaternion> {
    let a = Analyzer::new(Station::A, alpha)?;
    let b = Analyzer::new(Station::B, beta)?;
    score_product_with(&a, &b, lambda)
}

pub(crate) fn score_product_with(a: &Analyzer, b: &Analyzer, lambda: Orientation) -> Result<Quaternion> {
    let sa = Multivector::from(a.polarization(lambda));
    let sb = Multivector::from(b.polarization(lambda));
    let p = lambda.product(&sa, &sb);

    let delta = 2.0 * (a.angle - b.angle);
    let expected = Quaternion::new(-delta.cos(), lambda.dual(Vector3::E3) * delta.sin());
    if !is_even(&p) || Quaternion::from_even(p).max_abs_diff(expected) > IDENTITY_TOL {
        return Err(Error::algebra(format!(
            "score product {p} differs from -cos2Δ + (μ·e3) sin2Δ"
        )));
    }
    Ok(Quaternion::from_even(p))
}

fn is_even(m: &Multivector) -> bool {
    [1, 2, 3, 7].iter().all(|&k| m.0[k].abs() <= IDENTITY_TOL)
}

/// Limiting quaternion `(+I·ã)(μ·ã′)` for `ã′ → ã`, evaluated at zero
/// separation. Equals `-λ`.
pub fn limiting_quaternion(alpha: f64, lambda: Orientation) -> Result<Quaternion> {
    let a = setting_vector(alpha)?;
    let fixed = ga::inner(&Multivector::I, &a.into());
    let random = Multivector::from(lambda.dual(a));
    let q = Quaternion::from_even(lambda.product(&fixed, &random));
    Ok(q)
}

/// Transports the limiting quaternion from `ã` to `b̃` with the rotor
/// `R = ã b̃` and drops the cross-plane bivector, which is null in the
/// `ã′ → ã` limit. Returns `-λ cos 2(α-β)`.
pub fn rotor_transport_prediction(alpha: f64, beta: f64, lambda: Orientation) -> Result<f64> {
    let a = setting_vector(alpha)?;
    let b = setting_vector(beta)?;
    let rotor = Quaternion::from_even(ga::gp(&a.into(), &b.into()));
    let q = limiting_quaternion(alpha, lambda)?;
    let moved = ga::transport(q, rotor);
    Ok(moved.scalar)
}

/// Angle between `ã` and `b̃` in `[0, π]`.
pub fn setting_angle(alpha: f64, beta: f64) -> Result<f64> {
    Ok(setting_vector(alpha)?.angle_to(setting_vector(beta)?))
}

/// The quantum-mechanical singlet correlation `-cos 2(α-β)`, used as the
/// analytic reference.
pub fn singlet_correlation(alpha: f64, beta: f64) -> f64 {
    -(2.0 * (alpha - beta)).cos()
}

/// Angle offset that flips `ã` to `-ã`.
pub const ANTIPODAL_OFFSET: f64 = FRAC_PI_2;

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8};

    const EPS: f64 = 1e-12;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    fn levi_civita(j: usize, k: usize, l: usize) -> f64 {
        match (j, k, l) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    }

    #[test]
    fn handed_basis_table_holds_for_both_orientations() {
        let e = [Vector3::E1, Vector3::E2, Vector3::E3];
        for lam in Orientation::BOTH {
            for j in 0..3 {
                for k in 0..3 {
                    let lhs = lam.product(&lam.dual(e[j]).into(), &lam.dual(e[k]).into());
                    let mut rhs = Multivector::scalar_mv(if j == k { -1.0 } else { 0.0 });
                    for l in 0..3 {
                        rhs = rhs - Multivector::from(lam.dual(e[l])) * levi_civita(j, k, l);
                    }
                    assert_eq!(lhs, rhs, "λ={:?} j={j} k={k}", lam);
                }
            }
        }
    }

    #[test]
    fn plain_product_does_not_carry_handedness() {
        // With a single fixed product, λ² = 1 cancels and the left-handed
        // table cannot hold.
        let lam = Orientation::Left;
        let lhs = ga::gp(&lam.dual(Vector3::E1).into(), &lam.dual(Vector3::E2).into());
        let handed = -Multivector::from(lam.dual(Vector3::E3));
        assert_ne!(lhs, handed);
    }

    #[test]
    fn wedge_duality_flips_with_orientation() {
        let a = Vector3::new(0.3, -0.4, 0.5);
        let b = Vector3::new(-0.2, 0.9, 0.1);
        for lam in Orientation::BOTH {
            let w = lam.wedge(&a.into(), &b.into());
            let dual = Multivector::from(lam.dual(a.cross(b)));
            assert!(w.max_abs_diff(&dual) < EPS);
        }
    }

    #[test]
    fn setting_vector_examples() {
        assert_eq!(setting_vector(0.0).unwrap(), Vector3::E1);
        let v = setting_vector(FRAC_PI_4).unwrap();
        assert!((v - Vector3::E2).norm() < 1e-15);
        let v = setting_vector(FRAC_PI_8).unwrap();
        assert!((v - Vector3::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!(matches!(setting_vector(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(setting_vector(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn raw_scores_on_degree_grid() {
        for d in 0..360 {
            let angle = deg(f64::from(d));
            for lam in Orientation::BOTH {
                let a = raw_score_a(angle, lam).unwrap();
                let b = raw_score_b(angle, lam).unwrap();
                assert_eq!(a.value(), lam.lambda());
                assert_eq!(b.value(), -lam.lambda());
                assert_eq!(a.value() * b.value(), -1);
            }
        }
    }

    #[test]
    fn standard_score_examples() {
        let s = standard_score_a(0.0, Orientation::Right).unwrap();
        assert_eq!(s, Bivector::E23);
        let s = standard_score_a(deg(90.0), Orientation::Right).unwrap();
        assert!(s.max_abs_diff(-Bivector::E23) < EPS);
        let s = standard_score_a(deg(22.5), Orientation::Left).unwrap();
        let expected = -Bivector::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0);
        assert!(s.max_abs_diff(expected) < EPS);
    }

    #[test]
    fn scores_are_local() {
        // A's scores must not depend on anything but (α, λ).
        for lam in Orientation::BOTH {
            let reference = standard_score_a(deg(17.0), lam).unwrap();
            for partner in [0.0, 33.0, 90.0, 145.0] {
                let _ = standard_score_b(deg(partner), lam).unwrap();
                assert_eq!(standard_score_a(deg(17.0), lam).unwrap(), reference);
            }
        }
    }

    #[test]
    fn score_product_examples() {
        for lam in Orientation::BOTH {
            let q = score_product(deg(40.0), deg(40.0), lam).unwrap();
            assert!(q.max_abs_diff(Quaternion::from(-1.0)) < EPS);
        }
        let q = score_product(deg(22.5), 0.0, Orientation::Right).unwrap();
        let expected = Quaternion::new(-FRAC_1_SQRT_2, Bivector::E12 * FRAC_1_SQRT_2);
        assert!(q.max_abs_diff(expected) < EPS);
        let q = score_product(deg(45.0), 0.0, Orientation::Left).unwrap();
        assert!(q.max_abs_diff(Quaternion::new(0.0, -Bivector::E12)) < EPS);
    }

    #[test]
    fn balanced_average_of_score_product_is_scalar() {
        for d in (0..180).step_by(5) {
            let (a, b) = (deg(f64::from(d)), deg(13.0));
            let sum = score_product(a, b, Orientation::Right).unwrap()
                + score_product(a, b, Orientation::Left).unwrap();
            let avg = sum * 0.5;
            assert!((avg.scalar - singlet_correlation(a, b)).abs() < EPS);
            assert!(avg.bivector.norm() < EPS);
            let q = score_product(a, b, Orientation::Left).unwrap();
            assert!((q.norm() - 1.0).abs() < EPS);
        }
    }

    #[test]
    fn transport_prediction_examples() {
        for lam in Orientation::BOTH {
            let s = lam.sign();
            let same = rotor_transport_prediction(deg(30.0), deg(30.0), lam).unwrap();
            assert!((same + s).abs() < EPS);
            let flipped =
                rotor_transport_prediction(deg(30.0), deg(30.0) + ANTIPODAL_OFFSET, lam).unwrap();
            assert!((flipped - s).abs() < EPS);
            assert!((limiting_quaternion(deg(12.0), lam).unwrap().scalar + s).abs() < EPS);
        }
        let v = rotor_transport_prediction(0.0, deg(22.5), Orientation::Right).unwrap();
        assert!((v + FRAC_1_SQRT_2).abs() < EPS);
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_raw_a(0.0).unwrap(), -Bivector::E23);
        // (-I·ã)(+I·b̃) = ã b̃
        for (a, b) in [(0.0, 22.5), (10.0, 75.0), (33.0, 160.0)] {
            let (a, b) = (deg(a), deg(b));
            let lhs = ga::gp(&sigma_raw_a(a).unwrap().into(), &sigma_raw_b(b).unwrap().into());
            let rhs = ga::gp(&setting_vector(a).unwrap().into(), &setting_vector(b).unwrap().into());
            assert!(lhs.max_abs_diff(&rhs) < EPS);
        }
    }

    #[test]
    fn commutator_of_standard_scores() {
        let a = setting_vector(0.3).unwrap();
        let b = setting_vector(1.1).unwrap();
        for lam in Orientation::BOTH {
            let c = lam.commutator(&lam.dual(a).into(), &lam.dual(b).into());
            let expected = Multivector::from(lam.dual(a.cross(b))) * -2.0;
            assert!(c.max_abs_diff(&expected) < EPS);
        }
    }

    #[test]
    fn outcome_serializes_as_integer() {
        assert_eq!(serde_json::to_string(&Outcome::Minus).unwrap(), "-1");
        assert_eq!(serde_json::from_str::<Outcome>("1").unwrap(), Outcome::Plus);
        assert!(serde_json::from_str::<Outcome>("0").is_err());
    }
}
