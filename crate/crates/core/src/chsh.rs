//! CHSH strings, the commutator-based variance bound and exhaustive scans
//! over polarizer quadruples.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::{Multivector, IDENTITY_TOL};
use crate::model::{self, Analyzer, Orientation, Station};
use crate::parallel::{self, CompensatedSum};
use crate::rng::RngContract;
use crate::stats::{self, LambdaSource};

/// `2√2`.
pub const QM_LIMIT: f64 = 2.0 * SQRT_2;

/// Polarizer angles `(α, α′, β, β′)` in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleQuad {
    pub alpha: f64,
    pub alpha_p: f64,
    pub beta: f64,
    pub beta_p: f64,
}

impl AngleQuad {
    pub fn new(alpha: f64, alpha_p: f64, beta: f64, beta_p: f64) -> Result<Self> {
        let q = AngleQuad { alpha, alpha_p, beta, beta_p };
        if !q.as_array().iter().all(|a| a.is_finite()) {
            return Err(Error::domain("all four CHSH angles must be finite"));
        }
        Ok(q)
    }

    pub fn from_degrees(alpha: f64, alpha_p: f64, beta: f64, beta_p: f64) -> Result<Self> {
        Self::new(alpha.to_radians(), alpha_p.to_radians(), beta.to_radians(), beta_p.to_radians())
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.alpha_p, self.beta, self.beta_p]
    }

    pub fn degrees(&self) -> [f64; 4] {
        self.as_array().map(f64::to_degrees)
    }
}

/// `E(α,β) + E(α,β′) + E(α′,β) − E(α′,β′)`.
pub fn chsh_string<F: Fn(f64, f64) -> f64>(correlator: F, q: &AngleQuad) -> f64 {
    correlator(q.alpha, q.beta) + correlator(q.alpha, q.beta_p) + correlator(q.alpha_p, q.beta)
        - correlator(q.alpha_p, q.beta_p)
}

/// `2√(1 + sin 2(α−α′) sin 2(β−β′))`.
///
/// Evaluated as `√2 · ‖(P, M)‖` with `P = (cos x + sin x)(cos y + sin y)` and
/// `M = (cos x − sin x)(cos y − sin y)`, since `1 ± sin 2x = (cos x ± sin x)²`.
/// No term cancels, so the result stays accurate where the bound vanishes.
pub fn chsh_bound_sine(q: &AngleQuad) -> f64 {
    let (sx, cx) = (q.alpha - q.alpha_p).sin_cos();
    let (sy, cy) = (q.beta - q.beta_p).sin_cos();
    let p = (cx + sx) * (cy + sy);
    let m = (cx - sx) * (cy - sy);
    SQRT_2 * p.hypot(m)
}

/// `2√(1 − (ã×ã′)·(b̃′×b̃))` from the setting vectors.
///
/// With `u = ã×ã′`, `v = b̃′×b̃` and unit settings, the Lagrange identity gives
/// `1 − u·v = (‖u − v‖² + (ã·ã′)² + (b̃′·b̃)²) / 2`, a sum of non-negative terms.
pub fn chsh_bound_cross(q: &AngleQuad) -> Result<f64> {
    let a = model::setting_vector(q.alpha)?;
    let ap = model::setting_vector(q.alpha_p)?;
    let b = model::setting_vector(q.beta)?;
    let bp = model::setting_vector(q.beta_p)?;
    let (u, v) = (a.cross(ap), bp.cross(b));
    let d = u - v;
    let radicand = d.dot(d) + a.dot(ap).powi(2) + bp.dot(b).powi(2);
    Ok(SQRT_2 * radicand.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshReport {
    pub string_value: f64,
    pub bound_sine: f64,
    pub bound_cross: f64,
    pub qm_limit: f64,
    /// `‖[A_a, A_a′]‖` and `‖[B_b′, B_b]‖`.
    pub commutator_norms: [f64; 2],
}

impl ChshReport {
    pub fn within_bound(&self) -> bool {
        self.string_value.abs() <= self.bound_cross + 1e-9
    }

    pub fn within_qm_limit(&self) -> bool {
        self.string_value.abs() <= self.qm_limit + 1e-9
    }
}

/// Commutator of two standard scores taken in one orientation.
fn score_commutator(x: &Analyzer, y: &Analyzer, lambda: Orientation) -> Multivector {
    lambda.commutator(&x.polarization(lambda).into(), &y.polarization(lambda).into())
}

struct Analyzers {
    a: Analyzer,
    ap: Analyzer,
    b: Analyzer,
    bp: Analyzer,
}

impl Analyzers {
    fn new(q: &AngleQuad) -> Result<Self> {
        Ok(Analyzers {
            a: Analyzer::new(Station::A, q.alpha)?,
            ap: Analyzer::new(Station::A, q.alpha_p)?,
            b: Analyzer::new(Station::B, q.beta)?,
            bp: Analyzer::new(Station::B, q.beta_p)?,
        })
    }

    /// `4 + [A_a, A_a′][B_b′, B_b]` for one trial, which must be a scalar.
    fn integrand(&self, lambda: Orientation) -> Result<(f64, [f64; 2])> {
        let ca = score_commutator(&self.a, &self.ap, lambda);
        let cb = score_commutator(&self.bp, &self.b, lambda);
        let p = lambda.product(&ca, &cb);
        if p.0[1..].iter().any(|c| c.abs() > 4.0 * IDENTITY_TOL) {
            return Err(Error::algebra(format!("commutator product is not a scalar: {p}")));
        }
        Ok((4.0 + p.scalar(), [ca.norm(), cb.norm()]))
    }
}

#[derive(Clone, Copy, Default)]
struct RhsSums {
    integrand: CompensatedSum,
    norm_a: CompensatedSum,
    norm_b: CompensatedSum,
}

fn finish_report(q: &AngleQuad, string_value: f64, sums: RhsSums, n: f64) -> Result<ChshReport> {
    let rhs_squared = sums.integrand.value() / n;
    let bound_cross = chsh_bound_cross(q)?;
    let bound_sine = chsh_bound_sine(q);
    // Compared before the square root, which amplifies rounding near zero.
    if (rhs_squared - bound_cross * bound_cross).abs() > 1e-9 {
        let rhs = rhs_squared.max(0.0).sqrt();
        return Err(Error::algebra(format!(
            "commutator bound {rhs} does not reduce to the cross-product form {bound_cross}"
        )));
    }
    if (bound_sine - bound_cross).abs() > 1e-12 {
        return Err(Error::algebra(format!(
            "sine bound {bound_sine} disagrees with cross bound {bound_cross}"
        )));
    }
    Ok(ChshReport {
        string_value,
        bound_sine,
        bound_cross,
        qm_limit: QM_LIMIT,
        commutator_norms: [sums.norm_a.value() / n, sums.norm_b.value() / n],
    })
}

/// CHSH report from `trials` sampled hidden variables.
///
/// `S` is built from the scalar parts of [`stats::correlate_standard`]; the
/// right-hand side averages `4 + [A_a, A_a′][B_b′, B_b]` over the same
/// trials and is checked against [`chsh_bound_cross`]. Whether
/// `|S|` actually stays below it is left to [`ChshReport::within_bound`].
pub fn variance_inequality_report(q: &AngleQuad, trials: u64, rng: &RngContract) -> Result<ChshReport> {
    if trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    let corr = |x: f64, y: f64| stats::correlate_standard(x, y, trials, rng).map(|e| e.scalar_part);
    let s = corr(q.alpha, q.beta)? + corr(q.alpha, q.beta_p)? + corr(q.alpha_p, q.beta)?
        - corr(q.alpha_p, q.beta_p)?;

    let an = Analyzers::new(q)?;
    let partials = parallel::map_chunks(trials, |range| -> Result<RhsSums> {
        let mut sums = RhsSums::default();
        for i in range {
            let (v, [na, nb]) = an.integrand(rng.lambda(i))?;
            sums.integrand.add(v);
            sums.norm_a.add(na);
            sums.norm_b.add(nb);
        }
        Ok(sums)
    });
    let mut total = RhsSums::default();
    for p in partials {
        let p = p?;
        total.integrand.merge(&p.integrand);
        total.norm_a.merge(&p.norm_a);
        total.norm_b.merge(&p.norm_b);
    }
    finish_report(q, s, total, trials as f64)
}

/// The same report with `E = −cos 2(α−β)` and the right-hand side averaged
/// exactly over both orientations.
pub fn variance_inequality_analytic(q: &AngleQuad) -> Result<ChshReport> {
    let s = chsh_string(model::singlet_correlation, q);
    let an = Analyzers::new(q)?;
    let mut total = RhsSums::default();
    for lambda in Orientation::BOTH {
        let (v, [na, nb]) = an.integrand(lambda)?;
        total.integrand.add(v);
        total.norm_a.add(na);
        total.norm_b.add(nb);
    }
    finish_report(q, s, total, 2.0)
}

/// The cross-station commutator `[A_n, B_n′]` for one orientation; its
/// norm is `2|sin 2(α−β)|`, so it vanishes only for parallel or
/// antiparallel settings.
pub fn cross_station_commutator(alpha: f64, beta: f64, lambda: Orientation) -> Result<Multivector> {
    let a = Analyzer::new(Station::A, alpha)?;
    let b = Analyzer::new(Station::B, beta)?;
    Ok(score_commutator(&a, &b, lambda))
}

/// Result of an exhaustive grid scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub quad: AngleQuad,
    /// Grid positions of `quad`; angle `k` is `k · step`.
    pub grid_index: [usize; 4],
    pub value: f64,
    pub quads_scanned: u64,
    /// Quads where `|S|` exceeds [`chsh_bound_sine`] by more than `1e-9`.
    pub bound_violations: u64,
}

#[derive(Clone, Copy)]
struct Best {
    idx: [usize; 4],
    abs: f64,
    value: f64,
}

impl Best {
    /// Keeps `self` unless `other` is larger by more than the tie tolerance.
    fn absorb(&mut self, other: Best) {
        if other.abs > self.abs + 1e-12 {
            *self = other;
        }
    }
}

/// Exhaustive scan of all quads on `{0, step, 2·step, …} ⊂ [0°, 360°)`,
/// returning the quad of largest `|S|` (ties to the lexicographically
/// smallest index) and the signed value there.
pub fn scan_max<F>(grid_step_deg: f64, correlator: F) -> Result<ScanResult>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    if !(grid_step_deg > 0.0) || !grid_step_deg.is_finite() {
        return Err(Error::domain("grid step must be positive"));
    }
    let count = 360.0 / grid_step_deg;
    if (count - count.round()).abs() > 1e-9 {
        return Err(Error::domain(format!("grid step {grid_step_deg}° does not divide 360°")));
    }
    let g = count.round() as usize;
    let angles: Vec<f64> = (0..g).map(|k| (k as f64 * grid_step_deg).to_radians()).collect();

    let mut table = vec![0.0; g * g];
    for (i, &x) in angles.iter().enumerate() {
        for (j, &y) in angles.iter().enumerate() {
            table[i * g + j] = correlator(x, y);
        }
    }
    let sin2: Vec<f64> = (0..g)
        .map(|d| (2.0 * (d as f64 * grid_step_deg).to_radians()).sin())
        .collect();
    // sin 2(x_i − x_j) depends only on (i − j) mod g.
    let sin_diff = |i: usize, j: usize| sin2[(i + g - j) % g];

    let table = &table;
    let partials = parallel::map_items((0..g).collect(), |i| {
        let mut best: Option<Best> = None;
        let mut violations = 0u64;
        for ip in 0..g {
            let s_alpha = sin_diff(i, ip);
            for j in 0..g {
                let e_ab = table[i * g + j];
                let e_apb = table[ip * g + j];
                for jp in 0..g {
                    let s = e_ab + table[i * g + jp] + e_apb - table[ip * g + jp];
                    let bound = 2.0 * (1.0 + s_alpha * sin_diff(j, jp)).max(0.0).sqrt();
                    if s.abs() > bound + 1e-9 {
                        violations += 1;
                    }
                    let cand = Best { idx: [i, ip, j, jp], abs: s.abs(), value: s };
                    match best.as_mut() {
                        Some(b) => b.absorb(cand),
                        None => best = Some(cand),
                    }
                }
            }
        }
        (best, violations)
    });

    let mut best: Option<Best> = None;
    let mut violations = 0u64;
    for (b, v) in partials {
        violations += v;
        if let Some(b) = b {
            match best.as_mut() {
                Some(cur) => cur.absorb(b),
                None => best = Some(b),
            }
        }
    }
    let best = best.ok_or_else(|| Error::domain("empty scan grid"))?;
    let [i, ip, j, jp] = best.idx;
    Ok(ScanResult {
        quad: AngleQuad::new(angles[i], angles[ip], angles[j], angles[jp])?,
        grid_index: best.idx,
        value: best.value,
        quads_scanned: (g as u64).pow(4),
        bound_violations: violations,
    })
}
