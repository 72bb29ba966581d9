//! Finite-`n` laws of `|M_{n,r}|^p`, the `r`-th largest of `n` GED draws
//! raised to the power `p`.
//!
//! The exact law is a binomial sum over how many draws exceed the
//! threshold. Two-sided events (`-t <= M_{n,r} <= t`) are handled exactly by
//! subtracting the lower-tail sum, which is astronomically small for large
//! `n` but not zero for small samples.
//!
//! For sample sizes given only through `ln n` the binomial is replaced by
//! its Poisson limit and the lower tail is dropped.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::expansions::gumbel;
use crate::ged::GedParams;
use crate::norming::SampleSize;

/// Sample size, rank from the top, and power index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderStatSpec {
    pub n: SampleSize,
    pub r: u32,
    pub p: f64,
}

impl OrderStatSpec {
    pub fn new(n: SampleSize, r: u32, p: f64) -> Result<Self> {
        if r == 0 {
            return Err(domain("rank r must be at least 1"));
        }
        if !(p > 0.0) || !p.is_finite() {
            return Err(domain(format!("power index p must be finite and > 0, got {p}")));
        }
        match n {
            SampleSize::Exact(k) if k < r as u64 => {
                return Err(domain(format!("rank r = {r} exceeds sample size n = {k}")));
            }
            SampleSize::Log(l) if !(l > 0.0) || !l.is_finite() => {
                return Err(domain(format!("ln n must be finite and positive, got {l}")));
            }
            _ => {}
        }
        Ok(Self { n, r, p })
    }
}

fn ln_factorial(j: u32) -> f64 {
    (2..=j).map(|k| (k as f64).ln()).sum()
}

/// `ln C(n, j)` from the exact integer product `n (n-1) ... (n-j+1)`.
fn ln_binomial(n: u64, j: u32) -> f64 {
    let mut acc = 0.0;
    for i in 0..j as u64 {
        acc += ((n - i) as f64).ln();
    }
    acc - ln_factorial(j)
}

/// `Σ_{j<r} C(n,j) a^j b^{n-j}` from `ln a`, `ln b`, summed in the log domain.
fn binomial_lower_sum(n: u64, r: u32, ln_a: f64, ln_b: f64) -> f64 {
    let top = r.min(u32::try_from(n + 1).unwrap_or(u32::MAX));
    let terms: Vec<f64> = (0..top)
        .map(|j| {
            let jf = j as f64;
            let ln_pow_a = if j == 0 { 0.0 } else { jf * ln_a };
            ln_binomial(n, j) + ln_pow_a + (n as f64 - jf) * ln_b
        })
        .collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    max.exp() * terms.iter().map(|t| (t - max).exp()).sum::<f64>()
}

/// `Σ_{j<r} e^{-μ} μ^j / j!` from `ln μ`.
fn poisson_lower_sum(r: u32, ln_mu: f64) -> f64 {
    let mu = ln_mu.exp();
    (0..r).map(|j| (j as f64 * ln_mu - mu - ln_factorial(j)).exp()).sum::<f64>().min(1.0)
}

/// `P(M_{n,r} <= z)`.
pub fn upper_orderstat_cdf(params: &GedParams, spec: &OrderStatSpec, z: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    let ln_s = params.ln_survival(z);
    match spec.n {
        SampleSize::Exact(n) => {
            // ln(1 - s) without forming 1 - s when s is tiny
            let ln_g = if z >= 0.0 { (-ln_s.exp()).ln_1p() } else { params.cdf(z).ln() };
            binomial_lower_sum(n, spec.r, ln_s, ln_g).min(1.0)
        }
        SampleSize::Log(l) => poisson_lower_sum(spec.r, l + ln_s),
    }
}

/// `P(M_{n,r} < -t)` for `t >= 0`: the lower-tail mass removed from the
/// two-sided event. Zero in ln-n mode.
pub fn two_sided_correction(params: &GedParams, spec: &OrderStatSpec, t: f64) -> f64 {
    match spec.n {
        SampleSize::Log(_) => 0.0,
        SampleSize::Exact(n) => {
            // draws exceed -t with probability 1 - s, stay below with s
            let ln_s = params.ln_survival(t);
            let ln_g = (-ln_s.exp()).ln_1p();
            binomial_lower_sum(n, spec.r, ln_g, ln_s)
        }
    }
}

/// `P(|M_{n,r}|^p <= y)`, two-sided and exact.
pub fn exact_powered_cdf(params: &GedParams, spec: &OrderStatSpec, y: f64) -> f64 {
    if !(y > 0.0) {
        return 0.0;
    }
    let t = y.powf(1.0 / spec.p);
    let upper = upper_orderstat_cdf(params, spec, t);
    (upper - two_sided_correction(params, spec, t)).clamp(0.0, 1.0)
}

/// `P(M_{n,r} <= z) - Λ_r(x)` at a point where `n (1 - G_v(z)) = e^{-x}(1 - ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailDeficit {
    pub deficit: f64,
    /// Le Cam bound `μ²/n` on the binomial-to-Poisson step.
    pub remainder_bound: f64,
}

/// `-ln(1 - s) - s`, accurate for tiny `s`.
fn log1m_excess(s: f64) -> f64 {
    if s < 1e-3 {
        let mut term = s;
        let mut acc = 0.0;
        for k in 2..40 {
            term *= s;
            let add = term / k as f64;
            acc += add;
            if add < acc * 1e-17 {
                break;
            }
        }
        acc
    } else {
        -(-s).ln_1p() - s
    }
}

/// Evaluates the one-sided order-statistic CDF relative to its Gumbel limit
/// without ever forming the two nearly equal probabilities.
///
/// With `μ = n s = e^{-x}(1 - ε)` each binomial term is the Gumbel term times
/// `exp(δ_j)` where
/// `δ_j = Σ_{i<j} ln(1 - i/n) + j ln(1 - ε) + e^{-x} ε - n(-ln(1-s) - s) - j ln(1 - s)`,
/// so the deficit is `Λ(x) Σ_{j<r} e^{-jx}/j! · expm1(δ_j)`.
pub fn tail_deficit(n: SampleSize, r: u32, x: f64, one_minus_theta: f64) -> Result<TailDeficit> {
    let eps = one_minus_theta;
    if !(eps < 1.0) || !eps.is_finite() {
        return Err(domain(format!("tail deficit needs 1 - θ < 1, got {eps}")));
    }
    let ex = (-x).exp();
    let mu = ex * (1.0 - eps);
    let log1m_eps = (-eps).ln_1p();
    let lam = gumbel(x);
    let mut sum = 0.0;
    let remainder_bound;
    match n {
        SampleSize::Exact(k) => {
            let nf = k as f64;
            let s = mu / nf;
            if !(s < 1.0) {
                return Err(domain(format!("normed point has n·survival = {mu} >= n")));
            }
            let common = ex * eps - nf * log1m_excess(s);
            let log1m_s = (-s).ln_1p();
            let mut falling = 0.0;
            let mut weight = 1.0;
            for j in 0..r {
                if j as u64 >= k {
                    break;
                }
                let jf = j as f64;
                if j > 0 {
                    falling += (-(jf - 1.0) / nf).ln_1p();
                    weight *= ex / jf;
                }
                let delta = falling + jf * log1m_eps + common - jf * log1m_s;
                sum += weight * delta.exp_m1();
            }
            remainder_bound = mu * mu / nf;
        }
        SampleSize::Log(l) => {
            let common = ex * eps;
            let mut weight = 1.0;
            for j in 0..r {
                let jf = j as f64;
                if j > 0 {
                    weight *= ex / jf;
                }
                sum += weight * (jf * log1m_eps + common).exp_m1();
            }
            remainder_bound = mu * mu * (-l).exp();
        }
    }
    // for r > n the exact sum is 1; add the missing Gumbel mass back
    if let SampleSize::Exact(k) = n {
        if (r as u64) > k {
            let missing: f64 = (k as u32..r).map(|j| (-(j as f64) * x - ln_factorial(j)).exp()).sum();
            sum += missing;
        }
    }
    Ok(TailDeficit { deficit: lam * sum, remainder_bound })
}

/// Monte Carlo estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub reps: u64,
}

/// Default cap on `n * reps` draws for one Monte Carlo call.
pub const DEFAULT_MC_BUDGET: u64 = 4_000_000_000;
const MC_CHUNK: u64 = 256;

/// SplitMix64 finalizer; derives independent chunk seeds from `(seed, index)`.
fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `reps` replications of the `r_max` largest values of `n` GED draws.
///
/// Returns a row-major `reps x r_max` table, each row in decreasing order.
/// Replications are split into fixed chunks with seeds derived from
/// `(seed, chunk)`, so the result does not depend on the thread count.
pub fn mc_top_values(params: &GedParams, n: u64, r_max: u32, reps: u64, seed: u64, budget: u64) -> Result<Vec<f64>> {
    if reps == 0 {
        return Err(domain("Monte Carlo needs reps >= 1"));
    }
    if r_max == 0 || r_max as u64 > n {
        return Err(domain(format!("rank {r_max} out of range for n = {n}")));
    }
    if n.checked_mul(reps).is_none_or(|draws| draws > budget) {
        return Err(Error::Resource(format!("n·reps = {n}·{reps} exceeds the draw budget {budget}")));
    }
    let r = r_max as usize;
    let sampler = params.sampler();
    let chunks = reps.div_ceil(MC_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, c));
            let count = MC_CHUNK.min(reps - c * MC_CHUNK) as usize;
            let mut out = Vec::with_capacity(count * r);
            let mut top = vec![f64::NEG_INFINITY; r];
            for _ in 0..count {
                top.fill(f64::NEG_INFINITY);
                for _ in 0..n {
                    let x: f64 = sampler.sample(&mut rng);
                    if x > top[r - 1] {
                        // insertion into the short descending buffer
                        let mut i = r - 1;
                        while i > 0 && top[i - 1] < x {
                            top[i] = top[i - 1];
                            i -= 1;
                        }
                        top[i] = x;
                    }
                }
                out.extend_from_slice(&top);
            }
            out
        })
        .collect();
    Ok(parts.concat())
}

/// Fraction of rows whose `r`-th value satisfies `|M|^p <= y`.
pub fn mc_estimate_from_table(table: &[f64], r_max: u32, r: u32, p: f64, y: f64) -> McEstimate {
    let width = r_max as usize;
    let reps = (table.len() / width) as u64;
    let hits = table
        .chunks_exact(width)
        .filter(|row| row[r as usize - 1].abs().powf(p) <= y)
        .count() as f64;
    let est = hits / reps as f64;
    McEstimate { estimate: est, stderr: (est * (1.0 - est) / reps as f64).sqrt(), reps }
}

/// Monte Carlo estimate of `P(|M_{n,r}|^p <= y)`.
pub fn mc_powered_cdf(params: &GedParams, spec: &OrderStatSpec, y: f64, reps: u64, seed: u64) -> Result<McEstimate> {
    mc_powered_cdf_with_budget(params, spec, y, reps, seed, DEFAULT_MC_BUDGET)
}

pub fn mc_powered_cdf_with_budget(
    params: &GedParams,
    spec: &OrderStatSpec,
    y: f64,
    reps: u64,
    seed: u64,
    budget: u64,
) -> Result<McEstimate> {
    let SampleSize::Exact(n) = spec.n else {
        return Err(domain("Monte Carlo needs an exact integer sample size"));
    };
    let table = mc_top_values(params, n, spec.r, reps, seed, budget)?;
    Ok(mc_estimate_from_table(&table, spec.r, spec.r, spec.p, y))
}
