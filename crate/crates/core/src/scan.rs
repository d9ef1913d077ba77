//! Concavity scanners along dilations and Minkowski interpolations, and the
//! perturbative oracle for the concavity power.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::body::{dilate, minkowski_mix, perturb, Body2D, Harmonic};
use crate::error::{invalid, Error, Result};
use crate::measure::Potential;
use crate::operator::RhoBarSolution;
use crate::quad::{mass, QuadratureSpec};
use crate::verify::{hypothesis_flags, Verdict};

pub const MIN_POINTS: usize = 5;
pub const PRNG_NAME: &str = "ChaCha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    B,
    DimBm,
    LogConcavity,
}

/// A sampled curve `v(t)` on a uniform grid with its second differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanCurve {
    pub kind: ScanKind,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    /// `v(t_{i-1}) - 2 v(t_i) + v(t_{i+1})` at interior nodes `i = 1..n-1`.
    pub second_diff: Vec<f64>,
    pub step: f64,
    pub min_margin: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub flags: Vec<String>,
}

impl ScanCurve {
    fn from_samples(kind: ScanKind, t: Vec<f64>, values: Vec<f64>, flags: Vec<String>) -> Self {
        let step = t[1] - t[0];
        let second_diff: Vec<f64> = values.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
        let min_margin = -second_diff.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let vmax = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tolerance = (1e-6 * step * step * vmax).max(1e-10);
        let verdict = if !min_margin.is_finite() {
            Verdict::Inconclusive
        } else if min_margin >= -tolerance {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        ScanCurve {
            kind,
            t,
            values,
            second_diff,
            step,
            min_margin,
            tolerance,
            verdict,
            flags,
        }
    }

    pub fn is_concave(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    /// `t,value,second_diff`, with the last column empty at the endpoints.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value,second_diff\n");
        let n = self.t.len();
        for i in 0..n {
            let d2 = if i == 0 || i + 1 == n {
                String::new()
            } else {
                format!("{:.16e}", self.second_diff[i - 1])
            };
            let _ = writeln!(out, "{:.16e},{:.16e},{}", self.t[i], self.values[i], d2);
        }
        out
    }
}

fn grid(t_min: f64, t_max: f64, points: usize) -> Result<Vec<f64>> {
    if points < MIN_POINTS {
        return Err(invalid("points", format!("need at least {MIN_POINTS}, got {points}")));
    }
    if !(t_min.is_finite() && t_max.is_finite() && t_min < t_max) {
        return Err(invalid("t_min", format!("need t_min < t_max, got [{t_min}, {t_max}]")));
    }
    let step = (t_max - t_min) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                t_max
            } else {
                t_min + step * i as f64
            }
        })
        .collect())
}

fn sample(t: &[f64], f: impl Fn(f64) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    t.par_iter().map(|&ti| f(ti)).collect()
}

/// `v(t) = log μ(e^t K)`.
pub fn scan_b(
    m: &dyn Potential,
    k: &Body2D,
    t_min: f64,
    t_max: f64,
    points: usize,
    spec: &QuadratureSpec,
) -> Result<ScanCurve> {
    let t = grid(t_min, t_max, points)?;
    let values = sample(&t, |ti| Ok(mass(m, &dilate(k, ti.exp())?, spec).ln()))?;
    Ok(ScanCurve::from_samples(ScanKind::B, t, values, hypothesis_flags(m, k)))
}

fn mix_flags(m: &dyn Potential, k: &Body2D, l: &Body2D) -> Vec<String> {
    let mut flags = hypothesis_flags(m, k);
    for f in hypothesis_flags(m, l) {
        if !flags.contains(&f) {
            flags.push(f);
        }
    }
    flags
}

/// `v(t) = μ((1-t) K + t L)^{1/2}` on `[0, 1]`.
pub fn scan_dim_bm(
    m: &dyn Potential,
    k: &Body2D,
    l: &Body2D,
    points: usize,
    spec: &QuadratureSpec,
) -> Result<ScanCurve> {
    let t = grid(0.0, 1.0, points)?;
    let values = sample(&t, |ti| Ok(mass(m, &minkowski_mix(k, l, ti)?, spec).sqrt()))?;
    Ok(ScanCurve::from_samples(ScanKind::DimBm, t, values, mix_flags(m, k, l)))
}

/// `v(t) = log μ((1-t) K + t L)` on `[0, 1]`. Holds for any log-concave `μ`
/// and any bodies, so no hypothesis flags are raised.
pub fn scan_log_concavity(
    m: &dyn Potential,
    k: &Body2D,
    l: &Body2D,
    points: usize,
    spec: &QuadratureSpec,
) -> Result<ScanCurve> {
    let t = grid(0.0, 1.0, points)?;
    let values = sample(&t, |ti| Ok(mass(m, &minkowski_mix(k, l, ti)?, spec).ln()))?;
    Ok(ScanCurve::from_samples(ScanKind::LogConcavity, t, values, Vec::new()))
}

/// One direction `ρ` and the finite-difference exponent it yields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationSample {
    /// `None` for the solver's `ρ̄`.
    pub seed: Option<u64>,
    pub c0: f64,
    pub harmonics: Vec<Harmonic>,
    pub t_step: f64,
    /// `f(-t), f(0), f(t)`.
    pub f: [f64; 3],
    pub f_prime: f64,
    pub f_second: f64,
    /// `1 - f f'' / f'²`, absent when indeterminate.
    pub p_rho: Option<f64>,
    pub indeterminate: bool,
    pub second_sign: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleOptions {
    pub samples: usize,
    pub degree: u32,
    pub t_step: f64,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            samples: 200,
            degree: 6,
            t_step: 0.1,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub p_hat: f64,
    pub p_pde: f64,
    pub p_rho_bar: f64,
    pub worst: PerturbationSample,
    pub worst_seed: Option<u64>,
    pub indeterminate_count: usize,
    pub samples: usize,
    pub prng: &'static str,
}

impl OracleResult {
    pub fn gap(&self) -> f64 {
        self.p_hat - self.p_pde
    }
}

fn rho_bounds(c0: f64, harmonics: &[Harmonic]) -> (f64, f64) {
    let kmax = harmonics.iter().map(|h| h.k).max().unwrap_or(0) as usize;
    let n = 16 * kmax.max(32);
    (0..n).fold((0.0f64, 0.0f64), |(v, d), j| {
        let th = TAU * j as f64 / n as f64;
        let (mut rho, mut rho2) = (c0, 0.0);
        for h in harmonics {
            let k = f64::from(h.k);
            let (s, c) = (k * th).sin_cos();
            let w = h.a * c + h.b * s;
            rho += w;
            rho2 -= k * k * w;
        }
        (v.max(rho.abs()), d.max(rho2.abs()))
    })
}

const MAX_RESCALES: usize = 12;

/// Evaluates `p_ρ` with Richardson-extrapolated central differences.
fn evaluate(
    m: &dyn Potential,
    k: &Body2D,
    seed: Option<u64>,
    c0: f64,
    harmonics: &[Harmonic],
    t_step: f64,
    spec: &QuadratureSpec,
) -> Result<PerturbationSample> {
    let (vmax, dmax) = rho_bounds(c0, harmonics);
    if vmax + dmax == 0.0 {
        return Err(invalid("rho", "perturbation vanishes identically"));
    }
    let mut scale = 0.1 * k.min_curvature_radius() / (vmax + dmax);
    let f0 = mass(m, k, spec);
    for _ in 0..MAX_RESCALES {
        let c = c0 * scale;
        let hs: Vec<Harmonic> = harmonics
            .iter()
            .map(|h| Harmonic {
                k: h.k,
                a: h.a * scale,
                b: h.b * scale,
            })
            .collect();
        let f_at = |t: f64| perturb(k, c, &hs, t).map(|body| mass(m, &body, spec));
        let vals = [f_at(-t_step), f_at(-0.5 * t_step), f_at(0.5 * t_step), f_at(t_step)];
        if vals.iter().any(Result::is_err) {
            scale *= 0.5;
            continue;
        }
        let [fm, fmh, fph, fp] = vals.map(|v| v.expect("checked"));
        let d1 = |a: f64, b: f64, s: f64| (b - a) / (2.0 * s);
        let d2 = |a: f64, b: f64, s: f64| (a - 2.0 * f0 + b) / (s * s);
        let f_prime = (4.0 * d1(fmh, fph, 0.5 * t_step) - d1(fm, fp, t_step)) / 3.0;
        let f_second = (4.0 * d2(fmh, fph, 0.5 * t_step) - d2(fm, fp, t_step)) / 3.0;
        let indeterminate = f_prime.abs() < 1e-8 * f0 / t_step;
        let p_rho = (!indeterminate).then(|| 1.0 - f0 * f_second / (f_prime * f_prime));
        return Ok(PerturbationSample {
            seed,
            c0: c,
            harmonics: hs,
            t_step,
            f: [fm, f0, fp],
            f_prime,
            f_second,
            p_rho,
            indeterminate,
            second_sign: f_second.signum(),
        });
    }
    Err(invalid("rho", "perturbed bodies stay invalid after rescaling"))
}

fn random_direction(seed: u64, degree: u32) -> (f64, Vec<Harmonic>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0 = rng.random_range(-1.0..=1.0);
    let harmonics = (1..=degree)
        .map(|k| Harmonic {
            k,
            a: rng.random_range(-1.0..=1.0),
            b: rng.random_range(-1.0..=1.0),
        })
        .collect();
    (c0, harmonics)
}

/// `p̂ = min p_ρ` over `ρ̄` and `samples` random trigonometric directions of
/// degree `≤ D`, sample `i` drawn from seed `seed + i`.
pub fn oracle_power(
    m: &dyn Potential,
    k: &Body2D,
    solution: &RhoBarSolution,
    options: &OracleOptions,
    spec: &QuadratureSpec,
) -> Result<OracleResult> {
    if options.samples == 0 {
        return Err(invalid("samples", "must be positive"));
    }
    if options.degree == 0 {
        return Err(invalid("degree", "must be positive"));
    }
    if !(options.t_step > 0.0 && options.t_step <= 1.0) {
        return Err(invalid("t_step", format!("must lie in (0, 1], got {}", options.t_step)));
    }
    let (c0, rho_bar) = solution.as_harmonics();
    let mandatory = evaluate(m, k, None, c0, &rho_bar, options.t_step, spec)?;
    let random: Vec<PerturbationSample> = (0..options.samples as u64)
        .into_par_iter()
        .map(|i| {
            let seed = options.seed.wrapping_add(i);
            let (c0, hs) = random_direction(seed, options.degree);
            evaluate(m, k, Some(seed), c0, &hs, options.t_step, spec)
        })
        .collect::<Result<_>>()?;

    let indeterminate_count = random.iter().filter(|s| s.indeterminate).count() + usize::from(mandatory.indeterminate);
    let p_rho_bar = mandatory.p_rho.ok_or(Error::NoInformativePerturbation { samples: 1 })?;
    let worst = std::iter::once(&mandatory)
        .chain(&random)
        .filter(|s| s.p_rho.is_some())
        .min_by(|a, b| a.p_rho.unwrap().total_cmp(&b.p_rho.unwrap()))
        .ok_or(Error::NoInformativePerturbation {
            samples: options.samples + 1,
        })?
        .clone();
    Ok(OracleResult {
        p_hat: worst.p_rho.expect("filtered"),
        p_pde: solution.p_value,
        p_rho_bar,
        worst_seed: worst.seed,
        worst,
        indeterminate_count,
        samples: options.samples + 1,
        prng: PRNG_NAME,
    })
}
