//! Normalizing constants for powered maxima of GED(v) samples.
//!
//! Four families, all affine maps `x -> scale * x + shift`:
//!
//! * `Gumbel`: `α_n, β_n` for the maximum itself.
//! * `Power`: `α*_n = p α_n β_n^{p-1}`, `β*_n = β_n^p`.
//! * `Hall`: `c_n = 2p λ^v b_n^{p-v} / v`, `d_n = b_n^p`.
//! * `Optimal` (`p = v` only): `c*_n = 2λ^v + 4(1/v - 1)λ^{2v} b_n^{-v}`,
//!   `d*_n = b_n^v + 4(1/v - 1)λ^{2v} b_n^{-v}`.
//!
//! `b_n` solves `2^{1/v} λ^{1-v} Γ(1/v) b^{v-1} exp(b^v / (2λ^v)) = n`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ged::GedParams;
use crate::roots::{safeguarded_newton, Tolerance};

/// Sample size, either an exact integer or given through `ln n` for
/// asymptotic sweeps past the integer range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSize {
    Exact(u64),
    Log(f64),
}

impl SampleSize {
    pub fn ln(&self) -> f64 {
        match *self {
            SampleSize::Exact(n) => (n as f64).ln(),
            SampleSize::Log(l) => l,
        }
    }

    /// `n` as a float; infinite when `ln n` exceeds the f64 range.
    pub fn as_f64(&self) -> f64 {
        match *self {
            SampleSize::Exact(n) => n as f64,
            SampleSize::Log(l) => l.exp(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, SampleSize::Exact(_))
    }
}

impl fmt::Display for SampleSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleSize::Exact(n) => write!(f, "{n}"),
            SampleSize::Log(l) => write!(f, "ln:{l}"),
        }
    }
}

impl FromStr for SampleSize {
    type Err = Error;

    /// Accepts `1000`, `1e12` (must be an exact integer) or `ln:<value>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("ln:") {
            let l: f64 = rest.parse().map_err(|_| Error::Config(format!("bad ln n value {rest:?}")))?;
            if !l.is_finite() || l <= 0.0 {
                return Err(Error::Config(format!("ln n must be finite and positive, got {l}")));
            }
            return Ok(SampleSize::Log(l));
        }
        if let Ok(n) = s.parse::<u64>() {
            return Ok(SampleSize::Exact(n));
        }
        let x: f64 = s.parse().map_err(|_| Error::Config(format!("bad sample size {s:?}")))?;
        if x.fract() != 0.0 || !(1.0..9.2e18).contains(&x) {
            return Err(Error::Config(format!("sample size must be a positive integer below 2^63, got {s}")));
        }
        Ok(SampleSize::Exact(x as u64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gumbel,
    Power,
    Hall,
    Optimal,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gumbel => "gumbel",
            Family::Power => "power",
            Family::Hall => "hall",
            Family::Optimal => "optimal",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gumbel" => Ok(Family::Gumbel),
            "power" => Ok(Family::Power),
            "hall" => Ok(Family::Hall),
            "optimal" => Ok(Family::Optimal),
            _ => Err(Error::Config(format!("unknown norming family {s:?}"))),
        }
    }
}

/// An affine normalization `x -> scale * x + shift` and where it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearNorming {
    pub scale: f64,
    pub shift: f64,
    pub family: Family,
    pub v: f64,
    pub p: f64,
    pub n: SampleSize,
}

impl LinearNorming {
    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.shift
    }
}

fn check_ln_n(n: SampleSize, min: f64, what: &str) -> Result<f64> {
    let l = n.ln();
    if let SampleSize::Exact(k) = n {
        if (k as f64) < min {
            return Err(domain(format!("{what} requires n >= {min}, got {k}")));
        }
    } else if !(l >= min.ln()) {
        return Err(domain(format!("{what} requires ln n >= ln {min}, got {l}")));
    }
    Ok(l)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(domain(format!("power index p must be finite and > 0, got {p}")));
    }
    Ok(())
}

/// `α_n, β_n` for the maximum of `n` draws.
pub fn gumbel_constants(params: &GedParams, n: SampleSize) -> Result<LinearNorming> {
    let l = check_ln_n(n, 3.0, "gumbel_constants")?;
    let v = params.v();
    let iv = 1.0 / v;
    let lead = 2f64.powf(iv) * params.lambda();
    let denom = v * l.powf(1.0 - iv);
    let scale = lead / denom;
    let correction = (v - 1.0) / v * l.ln() + (2.0f64.ln() + params.ln_gamma_inv_v());
    let shift = lead * l.powf(iv) - lead * correction / denom;
    Ok(LinearNorming { scale, shift, family: Family::Gumbel, v, p: 1.0, n })
}

/// `α*_n = p α_n β_n^{p-1}`, `β*_n = β_n^p`.
pub fn power_constants(params: &GedParams, p: f64, n: SampleSize) -> Result<LinearNorming> {
    check_p(p)?;
    let g = gumbel_constants(params, n)?;
    if !(g.shift > 0.0) {
        return Err(domain(format!("power norming needs β_n > 0, got {} at n = {n}", g.shift)));
    }
    if p == 1.0 {
        return Ok(LinearNorming { family: Family::Power, ..g });
    }
    Ok(LinearNorming {
        scale: p * g.scale * g.shift.powf(p - 1.0),
        shift: g.shift.powf(p),
        family: Family::Power,
        v: g.v,
        p,
        n,
    })
}

/// Root of the calibration equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnSolution {
    pub b_n: f64,
    /// `LHS(b_n) / n - 1`
    pub residual: f64,
    pub n: SampleSize,
    pub iterations: usize,
}

impl BnSolution {
    pub fn b_pow_v(&self, params: &GedParams) -> f64 {
        self.b_n.powf(params.v())
    }
}

/// `ln LHS(b)` and its derivative in `b`.
pub fn ln_bn_lhs(params: &GedParams, b: f64) -> (f64, f64) {
    let v = params.v();
    let lv = params.lambda_v();
    let c = std::f64::consts::LN_2 / v + (1.0 - v) * params.lambda().ln() + params.ln_gamma_inv_v();
    let bv = b.powf(v);
    let value = c + (v - 1.0) * b.ln() + bv / (2.0 * lv);
    let slope = (v - 1.0) / b + v * bv / (2.0 * lv * b);
    (value, slope)
}

/// Solves the calibration equation on its increasing branch.
///
/// For `v >= 1` the left side is increasing on `b > 0`. For `v < 1` it
/// decreases to a minimum at `b^v = 2λ^v (1 - v)/v` and increases after it;
/// only the increasing branch is searched, and `n` below the minimum value is
/// rejected.
pub fn solve_bn(params: &GedParams, n: SampleSize) -> Result<BnSolution> {
    let ln_n = check_ln_n(n, 2.0, "solve_bn")?;
    let v = params.v();
    let lv = params.lambda_v();
    let b0 = (2.0 * lv * ln_n).powf(1.0 / v);

    let floor = if v < 1.0 { (2.0 * lv * (1.0 - v) / v).powf(1.0 / v) } else { 0.0 };
    if v < 1.0 {
        let (min_value, _) = ln_bn_lhs(params, floor);
        if ln_n <= min_value {
            return Err(domain(format!(
                "calibration equation has no root on its increasing branch: ln n = {ln_n} <= minimum {min_value}"
            )));
        }
    }

    let f = |b: f64| {
        let (value, slope) = ln_bn_lhs(params, b);
        (value - ln_n, slope)
    };
    let mut lo = (0.5 * b0).max(floor);
    let mut hi = 2.0 * b0;
    while f(lo).0 > 0.0 {
        if lo <= floor {
            break;
        }
        lo = (0.5 * lo).max(floor);
    }
    while f(hi).0 < 0.0 {
        hi *= 2.0;
    }
    if lo == 0.0 {
        lo = f64::MIN_POSITIVE;
    }
    let tol = Tolerance { abs_f: 0.5 * f64::EPSILON * ln_n.max(1.0), rel_x: 2.0 * f64::EPSILON, max_iter: 200 };
    let root = safeguarded_newton("solve_bn", f, lo, hi, b0, tol)?;
    let (value, _) = ln_bn_lhs(params, root.x);
    Ok(BnSolution { b_n: root.x, residual: (value - ln_n).exp_m1(), n, iterations: root.iterations })
}

/// `c_n = 2p λ^v b_n^{p-v} / v`, `d_n = b_n^p`.
pub fn hall_constants(params: &GedParams, p: f64, n: SampleSize) -> Result<LinearNorming> {
    check_p(p)?;
    let bn = solve_bn(params, n)?;
    Ok(hall_from_bn(params, p, &bn))
}

pub fn hall_from_bn(params: &GedParams, p: f64, bn: &BnSolution) -> LinearNorming {
    let v = params.v();
    LinearNorming {
        scale: 2.0 * p / v * params.lambda_v() * bn.b_n.powf(p - v),
        shift: bn.b_n.powf(p),
        family: Family::Hall,
        v,
        p,
        n: bn.n,
    }
}

/// The `p = v` constants with the `b_n^{-v}` correction. Not defined at `v = 1`.
pub fn optimal_constants(params: &GedParams, n: SampleSize) -> Result<LinearNorming> {
    if params.is_laplace() {
        return Err(domain("optimal constants are not defined at v = 1; use the power or hall family"));
    }
    let bn = solve_bn(params, n)?;
    Ok(optimal_from_bn(params, &bn))
}

pub fn optimal_from_bn(params: &GedParams, bn: &BnSolution) -> LinearNorming {
    let v = params.v();
    let lv = params.lambda_v();
    let bv = bn.b_n.powf(v);
    let correction = 4.0 * (1.0 / v - 1.0) * lv * lv / bv;
    LinearNorming {
        scale: 2.0 * lv + correction,
        shift: bv + correction,
        family: Family::Optimal,
        v,
        p: v,
        n: bn.n,
    }
}

/// Auxiliary pair `f(t) = 2λ^v (1 + 2λ^v (1/v - 1)/t)`, `g(t) = 1 - 4(1/v - 1)(1/v - 2)λ^{2v}/t²`.
pub fn aux_f_g(params: &GedParams, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(domain(format!("aux_f_g requires t > 0, got {t}")));
    }
    let iv = 1.0 / params.v();
    let lv = params.lambda_v();
    let f = 2.0 * lv * (1.0 + 2.0 * lv * (iv - 1.0) / t);
    let g = 1.0 - 4.0 * (iv - 1.0) * (iv - 2.0) * lv * lv / (t * t);
    Ok((f, g))
}

/// Dispatches on the family tag. `p` is ignored by `Gumbel` and must equal `v` for `Optimal`.
pub fn constants(params: &GedParams, family: Family, p: f64, n: SampleSize) -> Result<LinearNorming> {
    match family {
        Family::Gumbel => gumbel_constants(params, n),
        Family::Power => power_constants(params, p, n),
        Family::Hall => hall_constants(params, p, n),
        Family::Optimal => {
            if (p - params.v()).abs() > crate::ged::SHAPE_TIE_TOL {
                return Err(domain(format!("optimal constants need p = v, got p = {p}, v = {}", params.v())));
            }
            optimal_constants(params, n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn ged(v: f64) -> GedParams {
        GedParams::new(v).unwrap()
    }

    #[test]
    fn sample_size_parsing() {
        assert_eq!("1000".parse::<SampleSize>().unwrap(), SampleSize::Exact(1000));
        assert_eq!("1e12".parse::<SampleSize>().unwrap(), SampleSize::Exact(1_000_000_000_000));
        assert_eq!("ln:50".parse::<SampleSize>().unwrap(), SampleSize::Log(50.0));
        assert!("1.5".parse::<SampleSize>().is_err());
        assert!("ln:-1".parse::<SampleSize>().is_err());
        assert_eq!(SampleSize::Log(2.5).to_string(), "ln:2.5");
    }

    #[test]
    fn gumbel_at_laplace() {
        let p = ged(1.0);
        for &n in &[10u64, 1000, 1_000_000] {
            let g = gumbel_constants(&p, SampleSize::Exact(n)).unwrap();
            assert!(rel(g.scale, 0.5f64.sqrt()) < 1e-15);
            assert!(rel(g.shift, 0.5f64.sqrt() * (n as f64 / 2.0).ln()) < 1e-14);
        }
        assert!(gumbel_constants(&p, SampleSize::Exact(2)).is_err());
    }

    #[test]
    fn gumbel_normal_transcription() {
        // n = e^e: ln n = e, lnln n = 1
        let p = ged(2.0);
        let e = std::f64::consts::E;
        let g = gumbel_constants(&p, SampleSize::Log(e)).unwrap();
        let s2 = 2f64.sqrt();
        assert!(rel(g.scale, s2 / (2.0 * e.sqrt())) < 1e-15);
        let shift = s2 * e.sqrt() - s2 * (0.5 + (2.0 * std::f64::consts::PI.sqrt()).ln()) / (2.0 * e.sqrt());
        assert!(rel(g.shift, shift) < 1e-14);
    }

    #[test]
    fn gumbel_limit_trend() {
        let p = ged(2.0);
        let g = gumbel_constants(&p, SampleSize::Exact(1_000_000)).unwrap();
        let theta = 1e6 * p.survival(g.shift);
        assert!((theta - 1.0).abs() < 0.1, "{theta}");
    }

    #[test]
    fn power_examples() {
        let p = ged(1.0);
        let n = SampleSize::Exact(100);
        let c = power_constants(&p, 3.0, n).unwrap();
        let l50 = 50f64.ln();
        assert!(rel(c.scale, 3.0 * 2f64.powf(-1.5) * l50 * l50) < 1e-14);
        assert!(rel(c.shift, (0.5f64.sqrt() * l50).powi(3)) < 1e-14);
        let q = ged(2.5);
        let a = power_constants(&q, 1.0, n).unwrap();
        let b = gumbel_constants(&q, n).unwrap();
        assert_eq!((a.scale, a.shift), (b.scale, b.shift));
        assert!(power_constants(&q, 0.0, n).is_err());
    }

    #[test]
    fn bn_normal_against_bisection() {
        let p = ged(2.0);
        let target = 10.0_f64;
        let lhs = |b: f64| (2.0 * std::f64::consts::PI).sqrt() * b * (0.5 * b * b).exp();
        let (mut lo, mut hi) = (0.1_f64, 5.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if lhs(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = solve_bn(&p, SampleSize::Exact(10)).unwrap();
        assert!(rel(s.b_n, 0.5 * (lo + hi)) < 1e-14);
        assert!((s.b_n - 1.431_653_79).abs() < 1e-8);
    }

    #[test]
    fn bn_laplace_closed_form() {
        let p = ged(1.0);
        let n = 2.0 * std::f64::consts::E;
        let s = solve_bn(&p, SampleSize::Log(n.ln())).unwrap();
        assert!(rel(s.b_n, (n / 2.0).ln() / 2f64.sqrt()) < 1e-14);
        let h = hall_constants(&p, 1.0, SampleSize::Exact(1000)).unwrap();
        let w = power_constants(&p, 1.0, SampleSize::Exact(1000)).unwrap();
        assert!(rel(h.scale, w.scale) < 1e-12 && rel(h.shift, w.shift) < 1e-12);
    }

    #[test]
    fn bn_residuals() {
        for &v in &[0.5, 2.0, 4.0] {
            let p = ged(v);
            for &n in &[100u64, 10_000, 100_000_000, 1_000_000_000_000] {
                let s = solve_bn(&p, SampleSize::Exact(n)).unwrap();
                assert!(s.residual.abs() <= 1e-12, "v={v} n={n} {}", s.residual);
            }
        }
    }

    #[test]
    fn bn_exact_and_log_agree() {
        let p = ged(0.5);
        let a = solve_bn(&p, SampleSize::Exact(1_000_000)).unwrap();
        let b = solve_bn(&p, SampleSize::Log(1e6f64.ln())).unwrap();
        assert_eq!(a.b_n, b.b_n);
    }

    #[test]
    fn bn_small_n_without_root() {
        // at v = 1/2 the left side never drops below ~5.43
        let p = ged(0.5);
        assert!(matches!(solve_bn(&p, SampleSize::Exact(5)), Err(Error::Domain(_))));
        assert!(solve_bn(&p, SampleSize::Exact(6)).is_ok());
        assert!(solve_bn(&ged(2.0), SampleSize::Exact(1)).is_err());
    }

    #[test]
    fn bn_growth() {
        let p = ged(2.0);
        let ratio = |l: f64| {
            let s = solve_bn(&p, SampleSize::Log(l)).unwrap();
            s.b_n * s.b_n / (2.0 * l)
        };
        let (a, b, c) = (ratio(10.0), ratio(100.0), ratio(10_000.0));
        assert!((c - 1.0).abs() < (b - 1.0).abs() && (b - 1.0).abs() < (a - 1.0).abs());
    }

    #[test]
    fn hall_examples() {
        let p = ged(2.0);
        let n = SampleSize::Exact(5000);
        let b = solve_bn(&p, n).unwrap().b_n;
        let h = hall_constants(&p, 3.0, n).unwrap();
        assert!(rel(h.scale, 3.0 * b) < 1e-15);
        assert!(rel(h.shift, b.powi(3)) < 1e-14);
        let q = ged(0.7);
        let h = hall_constants(&q, 0.7, n).unwrap();
        assert!(rel(h.scale, 2.0 * q.lambda_v()) < 1e-15);
    }

    #[test]
    fn optimal_examples() {
        let p = ged(2.0);
        let n = SampleSize::Exact(1_000_000);
        let b = solve_bn(&p, n).unwrap().b_n;
        let o = optimal_constants(&p, n).unwrap();
        assert!((o.scale - (2.0 - 2.0 / (b * b))).abs() <= 1e-12);
        assert!((o.shift - (b * b - 2.0 / (b * b))).abs() <= 1e-12);
        assert!(optimal_constants(&ged(1.0), n).is_err());
        let q = ged(0.5);
        assert!(optimal_constants(&q, n).unwrap().scale > 2.0 * q.lambda_v());
        let far = optimal_constants(&q, SampleSize::Log(1e8)).unwrap();
        assert!(rel(far.scale, 2.0 * q.lambda_v()) < 1e-6);
    }

    #[test]
    fn aux_pair() {
        let p = ged(2.0);
        let (f, g) = aux_f_g(&p, 1.0).unwrap();
        assert_eq!(f, 0.0);
        assert!(p.representation_degenerate());
        assert!(rel(g, 1.0 - 4.0 * (-0.5) * (-1.5)) < 1e-15);
        let q = ged(0.5);
        let (f, _) = aux_f_g(&q, 10.0).unwrap();
        let lh = q.lambda().sqrt();
        assert!(rel(f, 2.0 * lh * (1.0 + 0.2 * lh)) < 1e-14);
        let (f, g) = aux_f_g(&q, 1e12).unwrap();
        assert!(rel(f, 2.0 * q.lambda_v()) < 1e-11 && (g - 1.0).abs() < 1e-20);
        assert!(aux_f_g(&q, 0.0).is_err());
    }
}
