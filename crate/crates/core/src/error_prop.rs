//! Linear error propagation for random bivectors on the 3-sphere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::{gp, Bivector, Multivector, Quaternion, Vector3, IDENTITY_TOL};
use crate::model::Orientation;
use crate::parallel;
use crate::rng::RngContract;
use crate::stats::{self, LambdaSource};

/// Gaussian density of a quaternion about `m` with scalar spread `sigma`.
pub fn gaussian_density(q: Quaternion, m: Quaternion, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("density spread must be positive, got {sigma}")));
    }
    let d2 = (q - m).norm_squared();
    let var = sigma * sigma;
    Ok((-d2 / (2.0 * var)).exp() / (2.0 * PI * var).sqrt())
}

/// `w = p λ (I·n̂)` with `λ` drawn from `rng`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomBivectorSpec {
    pub p: f64,
    pub n_hat: Vector3,
    pub rng: RngContract,
}

impl RandomBivectorSpec {
    pub fn new(p: f64, n_hat: Vector3, rng: RngContract) -> Result<Self> {
        validate(p, n_hat)?;
        Ok(RandomBivectorSpec { p, n_hat, rng })
    }
}

fn validate(p: f64, n_hat: Vector3) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p must lie in [0, 1], got {p}")));
    }
    if (n_hat.norm() - 1.0).abs() > IDENTITY_TOL {
        return Err(Error::domain(format!("n̂ must be a unit vector, |n̂| = {}", n_hat.norm())));
    }
    Ok(())
}

fn draws<S: LambdaSource + ?Sized>(p: f64, n_hat: Vector3, n: u64, src: &S) -> Result<Vec<Bivector>> {
    if n == 0 {
        return Err(Error::domain("at least one sample is required"));
    }
    let base = n_hat.dual() * p;
    let chunks = parallel::map_chunks(n, |range| -> Vec<Bivector> {
        range.map(|i| base * src.lambda(i).sign()).collect()
    });
    Ok(chunks.into_iter().flatten().collect())
}

pub fn sample_w(spec: &RandomBivectorSpec, n: u64) -> Result<Vec<Bivector>> {
    validate(spec.p, spec.n_hat)?;
    draws(spec.p, spec.n_hat, n, &spec.rng)
}

/// Sample moments and the propagated interval for `𝒜 = v w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationResult {
    pub n: u64,
    pub m_w: Bivector,
    pub sigma_w: f64,
    /// Even in general: a scalar when `v ∥ n̂`, a bivector when `v ⟂ n̂`.
    #[serde(rename = "m_A")]
    pub m_a: Quaternion,
    /// `v σ(w)`.
    #[serde(rename = "sigma_A")]
    pub sigma_a: Bivector,
    /// Sample spread of `𝒜` computed directly from its draws.
    #[serde(rename = "sigma_A_empirical")]
    pub sigma_a_empirical: f64,
    pub w_minus: Quaternion,
    pub w_plus: Quaternion,
    pub q_minus: Quaternion,
    pub q_plus: Quaternion,
    /// `(q⁻ − q⁺) × sign(q⁻ − q⁺)`, the sign taken per component.
    pub distance: Quaternion,
    /// Share of draws with `‖w_i − m(w)‖ ≤ σ(w)`.
    pub inside_fraction: f64,
}

fn check_unit_bivector(v: Bivector) -> Result<()> {
    if (v.norm_squared() - 1.0).abs() > IDENTITY_TOL {
        return Err(Error::domain(format!("v must be a unit bivector, |v| = {}", v.norm())));
    }
    Ok(())
}

fn abs_components(q: Quaternion) -> Quaternion {
    Quaternion::new(q.scalar.abs(), Bivector(q.bivector.0.map(f64::abs)))
}

pub fn propagate(v: Bivector, spec: &RandomBivectorSpec, n: u64) -> Result<PropagationResult> {
    validate(spec.p, spec.n_hat)?;
    propagate_impl(v, spec.p, spec.n_hat, n, &spec.rng)
}

/// [`propagate`] over an explicit orientation sequence.
pub fn propagate_from(v: Bivector, p: f64, n_hat: Vector3, lambdas: &[Orientation]) -> Result<PropagationResult> {
    validate(p, n_hat)?;
    propagate_impl(v, p, n_hat, lambdas.len() as u64, lambdas)
}

fn propagate_impl<S: LambdaSource + ?Sized>(
    v: Bivector,
    p: f64,
    n_hat: Vector3,
    n: u64,
    src: &S,
) -> Result<PropagationResult> {
    check_unit_bivector(v)?;
    let ws = draws(p, n_hat, n, src)?;
    let vm = Multivector::from(v);
    let w_mv: Vec<Multivector> = ws.iter().map(|&w| w.into()).collect();
    let a_mv: Vec<Multivector> = w_mv.iter().map(|w| gp(&vm, w)).collect();

    let m_w_mv = stats::mean_mv(&w_mv)?;
    if !m_w_mv.is_pure_grade(2, 0.0) {
        return Err(Error::algebra(format!("mean of w is not a bivector: {m_w_mv}")));
    }
    let m_w = m_w_mv.bivector();
    let sigma_w = stats::std_mv(&w_mv)?;

    let m_a_mv = stats::mean_mv(&a_mv)?;
    let m_a = Quaternion::from_even(m_a_mv);
    let sigma_a_empirical = stats::std_mv(&a_mv)?;
    let sigma_a = v * sigma_w;

    let nf = n as f64;
    if (sigma_a_empirical - sigma_a.norm()).abs() > 5.0 / nf.sqrt() {
        return Err(Error::algebra(format!(
            "spread of 𝒜 ({sigma_a_empirical}) disagrees with |v σ(w)| ({})",
            sigma_a.norm()
        )));
    }

    let w_minus = Quaternion::new(-sigma_w, m_w);
    let w_plus = Quaternion::new(sigma_w, m_w);
    let q_minus = m_a - Quaternion::from(sigma_a);
    let q_plus = m_a + Quaternion::from(sigma_a);

    // Mapping the w-interval through f must land exactly on the 𝒜-interval.
    let f = |q: Quaternion| Quaternion::from_even(gp(&vm, &q.into()));
    for (mapped, target) in [(f(w_minus), q_minus), (f(w_plus), q_plus)] {
        if mapped.max_abs_diff(target) > IDENTITY_TOL {
            return Err(Error::algebra("interval endpoints do not map onto each other"));
        }
    }

    let inside = ws.iter().filter(|&&w| (w - m_w).norm() <= sigma_w + IDENTITY_TOL).count();

    Ok(PropagationResult {
        n,
        m_w,
        sigma_w,
        m_a,
        sigma_a,
        sigma_a_empirical,
        w_minus,
        w_plus,
        q_minus,
        q_plus,
        distance: abs_components(q_minus - q_plus),
        inside_fraction: inside as f64 / nf,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorCheck {
    /// Largest componentwise gap between `f(w)` and its first-order expansion.
    pub max_deviation: f64,
    /// `∂f/∂w`, which for `f(w) = v w` is `v` everywhere.
    pub slope: Bivector,
    /// `|m(𝒜) − f(m(w))|` componentwise.
    pub mean_map_deviation: f64,
}

pub fn taylor_linear_check(v: Bivector, spec: &RandomBivectorSpec, n: u64) -> Result<TaylorCheck> {
    validate(spec.p, spec.n_hat)?;
    check_unit_bivector(v)?;
    let ws = draws(spec.p, spec.n_hat, n, &spec.rng)?;
    let vm = Multivector::from(v);
    let w_mv: Vec<Multivector> = ws.iter().map(|&w| w.into()).collect();
    let m_w = stats::mean_mv(&w_mv)?;
    let f = |w: &Multivector| gp(&vm, w);
    let f_mean = f(&m_w);

    let mut max_deviation = 0.0_f64;
    let mut images = Vec::with_capacity(w_mv.len());
    for w in &w_mv {
        let exact = f(w);
        let expansion = f_mean + gp(&vm, &(*w - m_w));
        max_deviation = max_deviation.max(exact.max_abs_diff(&expansion));
        images.push(exact);
    }
    let m_a = stats::mean_mv(&images)?;
    Ok(TaylorCheck { max_deviation, slope: v, mean_map_deviation: m_a.max_abs_diff(&f_mean) })
}
