//! Estimators over sampled hidden variables.
//!
//! All estimators use population (`1/n`) normalization and the
//! deterministic chunked reduction from [`crate::parallel`], so a fixed
//! `(seed, n)` gives bit-identical results for any worker count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::{self, Bivector, Multivector, Quaternion, IDENTITY_TOL};
use crate::model::{self, Analyzer, Orientation, Outcome, Station, TrialOutcome};
use crate::parallel::{self, CompensatedSum};
use crate::rng::RngContract;

/// Anything that yields the hidden variable of trial `i`.
pub trait LambdaSource: Sync {
    fn lambda(&self, trial: u64) -> Orientation;
}

impl LambdaSource for RngContract {
    #[inline]
    fn lambda(&self, trial: u64) -> Orientation {
        if self.bit(trial) {
            Orientation::Right
        } else {
            Orientation::Left
        }
    }
}

impl LambdaSource for [Orientation] {
    #[inline]
    fn lambda(&self, trial: u64) -> Orientation {
        self[trial as usize]
    }
}

fn require_trials(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    Ok(())
}

pub fn sample_orientations(n: u64, rng: &RngContract) -> Result<Vec<Orientation>> {
    require_trials(n)?;
    Ok((0..n).map(|i| rng.lambda(i)).collect())
}

/// Componentwise mean.
pub fn mean_mv(xs: &[Multivector]) -> Result<Multivector> {
    if xs.is_empty() {
        return Err(Error::domain("mean of an empty sample"));
    }
    let mut sums = [CompensatedSum::default(); 8];
    for x in xs {
        for (s, c) in sums.iter_mut().zip(x.0) {
            s.add(c);
        }
    }
    let n = xs.len() as f64;
    Ok(Multivector(std::array::from_fn(|k| sums[k].value() / n)))
}

/// `sqrt(Σ ‖x_i - m‖² / n)` with the algebra norm; always a scalar.
pub fn std_mv(xs: &[Multivector]) -> Result<f64> {
    let m = mean_mv(xs)?;
    let mut acc = CompensatedSum::default();
    for x in xs {
        acc.add((*x - m).norm_squared());
    }
    Ok((acc.value() / xs.len() as f64).sqrt())
}

/// Standard score `σ⁻¹ (raw - mean)`, dividing on the left.
pub fn zscore(raw: &Multivector, mean: &Multivector, sigma: &Multivector) -> Result<Multivector> {
    let inv = sigma.inverse()?;
    Ok(ga::gp(&inv, &(*raw - *mean)))
}

/// Output of every correlation estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub scalar_part: f64,
    pub bivector_residual: Bivector,
    pub n: u64,
    /// Standard error of the mean, `σ / √n`.
    pub stderr: f64,
}

impl CorrelationEstimate {
    pub fn residual_norm(&self) -> f64 {
        self.bivector_residual.norm()
    }

    fn scalar(value: f64, n: u64, stderr: f64) -> Self {
        CorrelationEstimate { scalar_part: value, bivector_residual: Bivector::ZERO, n, stderr }
    }
}

/// Mean raw score at one station; converges to zero.
pub fn expectation_single(station: Station, angle: f64, n: u64, rng: &RngContract) -> Result<f64> {
    expectation_impl(station, angle, n, rng)
}

pub fn expectation_single_from(station: Station, angle: f64, lambdas: &[Orientation]) -> Result<f64> {
    expectation_impl(station, angle, lambdas.len() as u64, lambdas)
}

fn expectation_impl<S: LambdaSource + ?Sized>(
    station: Station,
    angle: f64,
    n: u64,
    src: &S,
) -> Result<f64> {
    require_trials(n)?;
    let analyzer = Analyzer::new(station, angle)?;
    let partials = parallel::map_chunks(n, |range| -> Result<i64> {
        let mut sum = 0i64;
        for i in range {
            sum += i64::from(analyzer.score_trial(src.lambda(i), i)?.value());
        }
        Ok(sum)
    });
    let mut total = 0i64;
    for p in partials {
        total += p?;
    }
    Ok(total as f64 / n as f64)
}

/// Standard-score product for one setting pair, with the expected value of
/// each orientation cached.
struct PairKernel {
    a: Analyzer,
    b: Analyzer,
    expected: [Quaternion; 2],
}

impl PairKernel {
    fn new(alpha: f64, beta: f64) -> Result<Self> {
        let a = Analyzer::new(Station::A, alpha)?;
        let b = Analyzer::new(Station::B, beta)?;
        let expected = [
            model::score_product_with(&a, &b, Orientation::Right)?,
            model::score_product_with(&a, &b, Orientation::Left)?,
        ];
        Ok(PairKernel { a, b, expected })
    }

    #[inline]
    fn product(&self, lambda: Orientation) -> Result<Quaternion> {
        let sa = Multivector::from(self.a.polarization(lambda));
        let sb = Multivector::from(self.b.polarization(lambda));
        let q = Quaternion::from_even(lambda.product(&sa, &sb));
        let idx = usize::from(lambda == Orientation::Left);
        if q.max_abs_diff(self.expected[idx]) > IDENTITY_TOL {
            return Err(Error::algebra("score product drifted from its closed form"));
        }
        Ok(q)
    }
}

#[derive(Clone, Copy, Default)]
struct QuatSums {
    scalar: CompensatedSum,
    bivector: [CompensatedSum; 3],
    norm2: CompensatedSum,
}

impl QuatSums {
    fn add(&mut self, q: Quaternion) {
        self.scalar.add(q.scalar);
        for (s, c) in self.bivector.iter_mut().zip(q.bivector.0) {
            s.add(c);
        }
        self.norm2.add(q.norm_squared());
    }

    fn merge(&mut self, o: &QuatSums) {
        self.scalar.merge(&o.scalar);
        for (s, c) in self.bivector.iter_mut().zip(o.bivector.iter()) {
            s.merge(c);
        }
        self.norm2.merge(&o.norm2);
    }
}

/// Covariance of the standard scores: the mean of `A(α,μ) B(β,μ)`.
///
/// The per-trial scalar part is `-cos 2(α-β)` for both orientations, so the
/// scalar part of the estimate equals it for every `n`. The bivector part
/// is `sin 2(α-β) (μ·e3)` per trial and averages to `sin 2(α-β) mean(λ) e12`.
pub fn correlate_standard(alpha: f64, beta: f64, n: u64, rng: &RngContract) -> Result<CorrelationEstimate> {
    correlate_standard_impl(alpha, beta, n, rng)
}

pub fn correlate_standard_from(alpha: f64, beta: f64, lambdas: &[Orientation]) -> Result<CorrelationEstimate> {
    correlate_standard_impl(alpha, beta, lambdas.len() as u64, lambdas)
}

fn correlate_standard_impl<S: LambdaSource + ?Sized>(
    alpha: f64,
    beta: f64,
    n: u64,
    src: &S,
) -> Result<CorrelationEstimate> {
    require_trials(n)?;
    let kernel = PairKernel::new(alpha, beta)?;
    let partials = parallel::map_chunks(n, |range| -> Result<QuatSums> {
        let mut sums = QuatSums::default();
        for i in range {
            sums.add(kernel.product(src.lambda(i))?);
        }
        Ok(sums)
    });
    let mut total = QuatSums::default();
    for p in partials {
        total.merge(&p?);
    }
    let nf = n as f64;
    let mean = Quaternion::new(
        total.scalar.value() / nf,
        Bivector(std::array::from_fn(|k| total.bivector[k].value() / nf)),
    );
    let var = (total.norm2.value() / nf - mean.norm_squared()).max(0.0);
    Ok(CorrelationEstimate {
        scalar_part: mean.scalar,
        bivector_residual: mean.bivector,
        n,
        stderr: (var / nf).sqrt(),
    })
}

#[derive(Clone, Copy, Default)]
struct RawSums {
    a: i64,
    b: i64,
    ab: i64,
}

fn raw_scores<S: LambdaSource + ?Sized>(
    a: &Analyzer,
    b: &Analyzer,
    src: &S,
    i: u64,
) -> Result<(f64, f64)> {
    let lambda = src.lambda(i);
    Ok((f64::from(a.score_trial(lambda, i)?.value()), f64::from(b.score_trial(lambda, i)?.value())))
}

/// Covariance of the raw scores divided (on the left) by the product of
/// their standard deviations `(-I·ã)(+I·b̃) = ã b̃`.
pub fn correlate_raw_normalized(alpha: f64, beta: f64, n: u64, rng: &RngContract) -> Result<CorrelationEstimate> {
    correlate_raw_impl(alpha, beta, n, rng)
}

pub fn correlate_raw_normalized_from(alpha: f64, beta: f64, lambdas: &[Orientation]) -> Result<CorrelationEstimate> {
    correlate_raw_impl(alpha, beta, lambdas.len() as u64, lambdas)
}

/// Population covariance of the raw scores; the numerator of the
/// normalized estimator.
pub fn raw_covariance(alpha: f64, beta: f64, n: u64, rng: &RngContract) -> Result<f64> {
    Ok(raw_moments(alpha, beta, n, rng)?.covariance)
}

struct RawMoments {
    mean_a: f64,
    mean_b: f64,
    covariance: f64,
}

fn raw_moments<S: LambdaSource + ?Sized>(alpha: f64, beta: f64, n: u64, src: &S) -> Result<RawMoments> {
    require_trials(n)?;
    let a = Analyzer::new(Station::A, alpha)?;
    let b = Analyzer::new(Station::B, beta)?;
    let partials = parallel::map_chunks(n, |range| -> Result<RawSums> {
        let mut s = RawSums::default();
        for i in range {
            let (x, y) = raw_scores(&a, &b, src, i)?;
            s.a += x as i64;
            s.b += y as i64;
            s.ab += (x * y) as i64;
        }
        Ok(s)
    });
    let mut t = RawSums::default();
    for p in partials {
        let p = p?;
        t.a += p.a;
        t.b += p.b;
        t.ab += p.ab;
    }
    let nf = n as f64;
    let (mean_a, mean_b) = (t.a as f64 / nf, t.b as f64 / nf);
    Ok(RawMoments { mean_a, mean_b, covariance: t.ab as f64 / nf - mean_a * mean_b })
}

fn correlate_raw_impl<S: LambdaSource + ?Sized>(
    alpha: f64,
    beta: f64,
    n: u64,
    src: &S,
) -> Result<CorrelationEstimate> {
    let moments = raw_moments(alpha, beta, n, src)?;

    // Second pass for the spread of the centered products.
    let a = Analyzer::new(Station::A, alpha)?;
    let b = Analyzer::new(Station::B, beta)?;
    let partials = parallel::map_chunks(n, |range| -> Result<CompensatedSum> {
        let mut s = CompensatedSum::default();
        for i in range {
            let (x, y) = raw_scores(&a, &b, src, i)?;
            let d = (x - moments.mean_a) * (y - moments.mean_b) - moments.covariance;
            s.add(d * d);
        }
        Ok(s)
    });
    let mut spread = CompensatedSum::default();
    for p in partials {
        spread.merge(&p?);
    }
    let nf = n as f64;

    let sigma_product = ga::gp(&a.sigma().into(), &b.sigma().into());
    let q = zscore(&Multivector::scalar_mv(moments.covariance), &Multivector::ZERO, &sigma_product)?;
    Ok(CorrelationEstimate {
        scalar_part: q.scalar(),
        bivector_residual: q.bivector(),
        n,
        stderr: (spread.value() / nf).sqrt() / nf.sqrt(),
    })
}

/// A record carrying a pair of joint outcomes.
pub trait JointOutcome {
    fn outcomes(&self) -> (Outcome, Outcome);
}

impl JointOutcome for TrialOutcome {
    fn outcomes(&self) -> (Outcome, Outcome) {
        (self.raw_a, self.raw_b)
    }
}

impl JointOutcome for (Outcome, Outcome) {
    fn outcomes(&self) -> (Outcome, Outcome) {
        *self
    }
}

/// Joint-occurrence tallies `C++`, `C--`, `C+-`, `C-+`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceCounts {
    pub pp: u64,
    pub mm: u64,
    pub pm: u64,
    pub mp: u64,
}

impl CoincidenceCounts {
    pub fn tally<T: JointOutcome>(records: &[T]) -> Self {
        let mut c = CoincidenceCounts::default();
        for r in records {
            c.add(r.outcomes());
        }
        c
    }

    pub fn add(&mut self, (a, b): (Outcome, Outcome)) {
        match (a, b) {
            (Outcome::Plus, Outcome::Plus) => self.pp += 1,
            (Outcome::Minus, Outcome::Minus) => self.mm += 1,
            (Outcome::Plus, Outcome::Minus) => self.pm += 1,
            (Outcome::Minus, Outcome::Plus) => self.mp += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.pp + self.mm + self.pm + self.mp
    }

    /// `(C++ + C-- - C+- - C-+) / (C++ + C-- + C+- + C-+)`; `None` when empty.
    pub fn correlation(&self) -> Option<f64> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let agree = (self.pp + self.mm) as f64;
        let disagree = (self.pm + self.mp) as f64;
        Some((agree - disagree) / total as f64)
    }
}

/// Normalized coincidence-count expectation of the raw-score product.
pub fn coincidence_correlate<T: JointOutcome>(records: &[T]) -> Result<f64> {
    CoincidenceCounts::tally(records)
        .correlation()
        .ok_or_else(|| Error::domain("coincidence estimate needs at least one record"))
}

/// Monolithic joint simulation of `n` trials at fixed settings.
pub fn simulate_trials(alpha: f64, beta: f64, n: u64, rng: &RngContract) -> Result<Vec<TrialOutcome>> {
    require_trials(n)?;
    let a = Analyzer::new(Station::A, alpha)?;
    let b = Analyzer::new(Station::B, beta)?;
    let chunks = parallel::map_chunks(n, |range| -> Result<Vec<TrialOutcome>> {
        range
            .map(|i| {
                let lambda = rng.lambda(i);
                Ok(TrialOutcome {
                    lambda,
                    alpha,
                    beta,
                    raw_a: a.score_trial(lambda, i)?,
                    raw_b: b.score_trial(lambda, i)?,
                })
            })
            .collect()
    });
    let mut out = Vec::with_capacity(n as usize);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Coincidence estimate over a monolithic run, packaged like the other
/// estimators.
pub fn correlate_coincidence(alpha: f64, beta: f64, n: u64, rng: &RngContract) -> Result<CorrelationEstimate> {
    let records = simulate_trials(alpha, beta, n, rng)?;
    let e = coincidence_correlate(&records)?;
    let nf = n as f64;
    Ok(CorrelationEstimate::scalar(e, n, ((1.0 - e * e).max(0.0) / nf).sqrt()))
}

/// Mean of the raw-score products `A B`; equals the coincidence estimate.
pub fn mean_raw_product<T: JointOutcome>(records: &[T]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::domain("mean of an empty sample"));
    }
    let sum: i64 = records
        .iter()
        .map(|r| {
            let (a, b) = r.outcomes();
            i64::from(a.value() * b.value())
        })
        .sum();
    Ok(sum as f64 / records.len() as f64)
}
