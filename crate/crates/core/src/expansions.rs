//! Gumbel limits and the first- and second-order expansions of
//! `P(|M_{n,r}|^p <= c_n x + d_n)` around `Λ_r(x)`.
//!
//! Five regimes, selected by `(v, p)`:
//!
//! | case     | `(v, p)`          | norming  | first scale            | second scale              |
//! |----------|-------------------|----------|------------------------|---------------------------|
//! | `T1_i`   | `v = 1, p = 1`    | power    | `n`                    | `n²`                      |
//! | `T1_ii`  | `v = 1, p ≠ 1`    | power    | `ln(n/2)`              | `ln n · ln(n/2)`          |
//! | `T1_iii` | `v ≠ 1`           | power    | `ln n / (lnln n)²`     | `ln n / lnln n`           |
//! | `T2_i`   | `v ≠ 1, p ≠ v`    | hall     | `b_n^v`                | `b_n^{2v}`                |
//! | `T2_ii`  | `v ≠ 1, p = v`    | optimal  | `b_n^{2v}`             | `b_n^{3v}`                |
//!
//! The second scale is the total factor applied to the second-order term,
//! so `second_order = target2 / scale_second`.
//!
//! Everything "exact" here goes through the true survival function at the
//! normed point; the closed-form lemma predictions are reported next to it
//! and never substituted for it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ged::{GedParams, SHAPE_TIE_TOL};
use crate::norming::{self, Family, LinearNorming, SampleSize};
use crate::orderstats::{self, OrderStatSpec};

const LN_2: f64 = std::f64::consts::LN_2;

/// `Λ(x) = exp(-e^{-x})`
pub fn gumbel(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// `Λ^{-1}(q) = -ln(-ln q)`
pub fn gumbel_inverse(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(domain(format!("gumbel_inverse requires 0 < q < 1, got {q}")));
    }
    Ok(-(-q.ln()).ln())
}

fn ln_factorial(j: i64) -> f64 {
    (2..=j).map(|k| (k as f64).ln()).sum()
}

/// `Λ_r(x) = Λ(x) Σ_{j<r} e^{-jx}/j!`, zero for `r <= 0`.
pub fn gumbel_r(r: i64, x: f64) -> f64 {
    if r <= 0 {
        return 0.0;
    }
    let ex = (-x).exp();
    // each term in the log domain: Λ is tiny exactly where e^{-jx} is huge
    let sum: f64 = (0..r).map(|j| (-ex - j as f64 * x - ln_factorial(j)).exp()).sum();
    sum.min(1.0)
}

/// Both sides of the first- and second-moment identities
/// `Λ Σ j e^{-jx}/j! = e^{-x} Λ_{r-1}` and
/// `Λ Σ j² e^{-jx}/j! = e^{-2x} Λ_{r-2} + e^{-x} Λ_{r-1}`.
pub fn gumbel_r_identities(r: i64, x: f64) -> Result<(f64, f64, f64, f64)> {
    if r < 1 {
        return Err(domain(format!("identities need r >= 1, got {r}")));
    }
    let ex = (-x).exp();
    let term = |j: i64| (-ex - j as f64 * x - ln_factorial(j)).exp();
    let lhs1 = (0..r).map(|j| j as f64 * term(j)).sum();
    let lhs2 = (0..r).map(|j| (j * j) as f64 * term(j)).sum();
    let rhs1 = ex * gumbel_r(r - 1, x);
    let rhs2 = ex * ex * gumbel_r(r - 2, x) + ex * gumbel_r(r - 1, x);
    Ok((lhs1, rhs1, lhs2, rhs2))
}

/// Transfer of a tail deficit `1 - θ` to the CDF deficit, without the `O(1/n)` remainder:
/// `Λ(x) [1 - (1-θ)(r - 1 - e^{-x})/2] (1-θ) e^{-rx}/(r-1)!`.
pub fn lemma3_transfer(one_minus_theta: f64, r: u32, x: f64) -> Result<f64> {
    if r < 1 {
        return Err(domain("transfer needs r >= 1"));
    }
    if !(one_minus_theta.abs() < 1.0) {
        return Err(domain(format!("transfer needs |1 - θ| < 1, got {one_minus_theta}")));
    }
    let e = one_minus_theta;
    let rf = r as f64;
    Ok(gumbel(x) * (1.0 - 0.5 * e * (rf - 1.0 - (-x).exp())) * e * (-rf * x - ln_factorial(r as i64 - 1)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    #[serde(rename = "T1_i")]
    T1i,
    #[serde(rename = "T1_ii")]
    T1ii,
    #[serde(rename = "T1_iii")]
    T1iii,
    #[serde(rename = "T2_i")]
    T2i,
    #[serde(rename = "T2_ii")]
    T2ii,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTag::T1i => "T1_i",
            CaseTag::T1ii => "T1_ii",
            CaseTag::T1iii => "T1_iii",
            CaseTag::T2i => "T2_i",
            CaseTag::T2ii => "T2_ii",
        })
    }
}

impl FromStr for CaseTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "t1i" => Ok(CaseTag::T1i),
            "t1ii" => Ok(CaseTag::T1ii),
            "t1iii" => Ok(CaseTag::T1iii),
            "t2i" => Ok(CaseTag::T2i),
            "t2ii" => Ok(CaseTag::T2ii),
            _ => Err(Error::Config(format!("unknown theorem case {s:?}"))),
        }
    }
}

impl CaseTag {
    pub fn family(&self) -> Family {
        match self {
            CaseTag::T1i | CaseTag::T1ii | CaseTag::T1iii => Family::Power,
            CaseTag::T2i => Family::Hall,
            CaseTag::T2ii => Family::Optimal,
        }
    }
}

/// A theorem regime together with the `(v, p)` it applies to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremCase {
    pub tag: CaseTag,
    pub v: f64,
    pub p: f64,
}

fn tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= SHAPE_TIE_TOL
}

impl TheoremCase {
    /// Routes `(v, p)` to `T1_i`, `T1_ii`, `T2_i` or `T2_ii`. For `v ≠ 1` the
    /// `b_n`-based cases take precedence; use [`TheoremCase::classify_power`]
    /// for the power-norming regime.
    pub fn classify(v: f64, p: f64) -> TheoremCase {
        let tag = if tie(v, 1.0) {
            if tie(p, 1.0) {
                CaseTag::T1i
            } else {
                CaseTag::T1ii
            }
        } else if tie(p, v) {
            CaseTag::T2ii
        } else {
            CaseTag::T2i
        };
        TheoremCase { tag, v, p }
    }

    /// Like [`TheoremCase::classify`] but routes `v ≠ 1` to `T1_iii`.
    pub fn classify_power(v: f64, p: f64) -> TheoremCase {
        if tie(v, 1.0) {
            Self::classify(v, p)
        } else {
            TheoremCase { tag: CaseTag::T1iii, v, p }
        }
    }

    /// Checks that `tag` applies to `(v, p)`.
    pub fn new(tag: CaseTag, v: f64, p: f64) -> Result<TheoremCase> {
        if !(v > 0.0) || !(p > 0.0) {
            return Err(domain(format!("need v > 0 and p > 0, got v = {v}, p = {p}")));
        }
        let ok = match tag {
            CaseTag::T1i => tie(v, 1.0) && tie(p, 1.0),
            CaseTag::T1ii => tie(v, 1.0) && !tie(p, 1.0),
            CaseTag::T1iii => !tie(v, 1.0),
            CaseTag::T2i => !tie(v, 1.0) && !tie(p, v),
            CaseTag::T2ii => !tie(v, 1.0) && tie(p, v),
        };
        if !ok {
            return Err(Error::CaseMismatch(format!("(v = {v}, p = {p}) does not belong to case {tag}")));
        }
        Ok(TheoremCase { tag, v, p })
    }
}

/// Which constant term to use in the second-order `T2_i` correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum QVariant {
    /// Constant `-4(1/v-1)(1/v-1)λ^{2v}`, as in the theorem statement.
    Eq22,
    /// Constant `-4(1/v-1)(1/v-2)λ^{2v}`, as in the survival lemma.
    Eq34,
    /// Lemma constant together with the `x²` coefficient `-2(1/v-1)(1/v-2)λ^{2v}`
    /// obtained by expanding the tail series directly.
    #[default]
    Derived,
}

impl fmt::Display for QVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QVariant::Eq22 => "eq22",
            QVariant::Eq34 => "eq34",
            QVariant::Derived => "derived",
        })
    }
}

impl FromStr for QVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eq22" => Ok(QVariant::Eq22),
            "eq34" => Ok(QVariant::Eq34),
            "derived" => Ok(QVariant::Derived),
            _ => Err(Error::Config(format!("unknown q variant {s:?} (expected eq22, eq34 or derived)"))),
        }
    }
}

/// Which cubic coefficient to use in the third-order `T2_ii` correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BVariant {
    /// `x³` bracket coefficient `(4 - 1/v)(1/v - 1)`, as in the theorem statement.
    Printed,
    /// `x³` bracket coefficient `2`, which the exact deficit follows at large `n`.
    /// The two agree at `v = 1/2`.
    #[default]
    Derived,
}

impl fmt::Display for BVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BVariant::Printed => "printed",
            BVariant::Derived => "derived",
        })
    }
}

impl FromStr for BVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "printed" => Ok(BVariant::Printed),
            "derived" => Ok(BVariant::Derived),
            _ => Err(Error::Config(format!("unknown b variant {s:?} (expected printed or derived)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExpansionOptions {
    pub q_variant: QVariant,
    pub b_variant: BVariant,
}

fn lambda_v(v: f64) -> f64 {
    GedParams::new(v).map(|p| p.lambda_v()).unwrap_or(f64::NAN)
}

/// `h_v(x) = [(v-p)λ^v x²/v - 2(1-v)λ^v x/v - 2(1/v-1)λ^v] e^{-x}`
pub fn correction_h(v: f64, p: f64, x: f64) -> f64 {
    let iv = 1.0 / v;
    let lv = lambda_v(v);
    (iv * (v - p) * lv * x * x - 2.0 * iv * (1.0 - v) * lv * x - 2.0 * (iv - 1.0) * lv) * (-x).exp()
}

/// `q_v(x)`, the `b_n^{-2v}` coefficient of `(1 - θ) e^{-x}` in case `T2_i`.
pub fn correction_q(v: f64, p: f64, x: f64, variant: QVariant) -> f64 {
    let iv = 1.0 / v;
    let lv = lambda_v(v);
    let l2 = lv * lv;
    let x4 = -0.5 * l2 * iv * iv * (v - p) * (v - p);
    let x3 = iv * iv * (v - p) * l2 * (2.0 - 4.0 / 3.0 * v - 4.0 / 3.0 * p);
    let x2 = match variant {
        QVariant::Derived => -2.0 * (iv - 1.0) * (iv - 2.0) * l2,
        _ => -2.0 * iv * iv * (1.0 - v) * l2,
    };
    let x1 = -4.0 * (iv - 1.0) * (iv - 2.0) * l2;
    let x0 = match variant {
        QVariant::Eq22 => -4.0 * (iv - 1.0) * (iv - 1.0) * l2,
        _ => -4.0 * (iv - 1.0) * (iv - 2.0) * l2,
    };
    ((((x4 * x + x3) * x + x2) * x + x1) * x + x0) * (-x).exp()
}

/// `s_v(x) = 2(1/v-1)λ^{2v} [x² - 2(1/v-2)x - (3/v-5)] e^{-x}`
pub fn correction_s(v: f64, x: f64) -> f64 {
    let iv = 1.0 / v;
    let lv = lambda_v(v);
    2.0 * (iv - 1.0) * lv * lv * (x * x - 2.0 * (iv - 2.0) * x - (3.0 * iv - 5.0)) * (-x).exp()
}

/// `b_v(x)`, the `b_n^{-3v}` coefficient of `(1 - θ) e^{-x}` in case `T2_ii`,
/// with the printed cubic coefficient. See [`BVariant`].
pub fn correction_b(v: f64, x: f64) -> f64 {
    correction_b_variant(v, x, BVariant::Printed)
}

pub fn correction_b_variant(v: f64, x: f64, variant: BVariant) -> f64 {
    let iv = 1.0 / v;
    let lv = lambda_v(v);
    let cubic = match variant {
        BVariant::Printed => (4.0 - iv) * (iv - 1.0),
        BVariant::Derived => 2.0,
    };
    let bracket = cubic * x * x * x - 6.0 * (iv - 2.0) * x * x - 6.0 * (3.0 * iv - 5.0) * x + (2.0 * iv * iv - 22.0 * iv + 32.0);
    -4.0 / 3.0 * (iv - 1.0) * lv * lv * lv * bracket * (-x).exp()
}

/// Norming, `b_n` and the logarithmic scales for one `(v, p, n)` and case.
#[derive(Debug, Clone, Copy)]
pub struct CaseSetup {
    pub params: GedParams,
    pub case: TheoremCase,
    pub n: SampleSize,
    pub norming: LinearNorming,
    /// `b_n^{-v}` for the `T2` cases.
    pub u: Option<f64>,
    pub options: ExpansionOptions,
}

impl CaseSetup {
    pub fn new(params: &GedParams, case: TheoremCase, n: SampleSize, options: ExpansionOptions) -> Result<CaseSetup> {
        let case = TheoremCase::new(case.tag, case.v, case.p)?;
        if (params.v() - case.v).abs() > 0.0 {
            return Err(Error::CaseMismatch(format!("case built for v = {} used with v = {}", case.v, params.v())));
        }
        let p = case.p;
        let (norming, u) = match case.tag {
            CaseTag::T1i | CaseTag::T1ii => (norming::power_constants(params, p, n)?, None),
            CaseTag::T1iii => {
                if !(n.ln() > std::f64::consts::E) {
                    return Err(domain(format!("case T1_iii needs lnln n > 1, got n = {n}")));
                }
                (norming::power_constants(params, p, n)?, None)
            }
            CaseTag::T2i => {
                let bn = norming::solve_bn(params, n)?;
                (norming::hall_from_bn(params, p, &bn), Some(1.0 / bn.b_pow_v(params)))
            }
            CaseTag::T2ii => {
                let bn = norming::solve_bn(params, n)?;
                (norming::optimal_from_bn(params, &bn), Some(1.0 / bn.b_pow_v(params)))
            }
        };
        Ok(CaseSetup { params: *params, case, n, norming, u, options })
    }

    fn ln_half_n(&self) -> f64 {
        match self.n {
            SampleSize::Exact(k) => (k as f64 / 2.0).ln(),
            SampleSize::Log(l) => l - LN_2,
        }
    }

    /// `(scale_first, scale_second)`.
    pub fn scales(&self) -> (f64, f64) {
        let l = self.n.ln();
        match self.case.tag {
            CaseTag::T1i => {
                let n = self.n.as_f64();
                (n, n * n)
            }
            CaseTag::T1ii => {
                let half = self.ln_half_n();
                (half, l * half)
            }
            CaseTag::T1iii => {
                let ll = l.ln();
                (l / (ll * ll), l / ll)
            }
            CaseTag::T2i => {
                let u = self.u.unwrap_or(f64::NAN);
                (1.0 / u, 1.0 / (u * u))
            }
            CaseTag::T2ii => {
                let u = self.u.unwrap_or(f64::NAN);
                (1.0 / (u * u), 1.0 / (u * u * u))
            }
        }
    }

    /// Normed threshold on the `|M|^p` scale and on the `M` scale.
    pub fn normed_point(&self, x: f64) -> Result<(f64, f64)> {
        let y = self.norming.apply(x);
        if !(y > 0.0) {
            return Err(domain(format!("normed point {y} at x = {x} is not positive")));
        }
        Ok((y, y.powf(1.0 / self.case.p)))
    }

    /// Exact `1 - θ` with `θ = n e^x (1 - G_v(z_n(x)))`.
    ///
    /// At `v = 1` with power norming the survival is `e^{-√2 z}/2` and
    /// `ln θ = x - L·expm1(ln(1 + p x/L)/p)`, `L = ln(n/2)`, which is
    /// evaluated in that form (and is exactly zero for `p = 1`).
    pub fn theta_deficit_exact(&self, x: f64) -> Result<f64> {
        let (_, t) = self.normed_point(x)?;
        let laplace_power = self.params.v() == 1.0 && self.norming.family == Family::Power;
        if laplace_power {
            if self.case.p == 1.0 {
                return Ok(0.0);
            }
            let l = self.ln_half_n();
            let p = self.case.p;
            let ln_theta = x - l * ((p * x / l).ln_1p() / p).exp_m1();
            return Ok(-ln_theta.exp_m1());
        }
        let ln_theta = self.n.ln() + x + self.params.ln_survival(t);
        Ok(-ln_theta.exp_m1())
    }

    /// Closed-form prediction of `1 - θ` through `order` (1 or 2) terms.
    pub fn theta_deficit_predicted(&self, x: f64, order: u32) -> Result<f64> {
        if order == 0 || order > 2 {
            return Err(domain(format!("prediction order must be 1 or 2, got {order}")));
        }
        let v = self.case.v;
        let p = self.case.p;
        let second = order == 2;
        let ex = x.exp();
        Ok(match self.case.tag {
            CaseTag::T1i => 0.0,
            CaseTag::T1ii => {
                let l = self.ln_half_n();
                let first = (1.0 - p) * x * x / (2.0 * l);
                let next = -(1.0 - p) * (3.0 * (1.0 - p) * x - 4.0 * (1.0 - 2.0 * p)) * x.powi(3) / (24.0 * l * l);
                first + if second { next } else { 0.0 }
            }
            CaseTag::T1iii => {
                let l = self.n.ln();
                let ll = l.ln();
                let k = 1.0 - 1.0 / v;
                let first = k.powi(3) * ll * ll / (2.0 * l);
                let next = -k * k * (1.0 + x - (LN_2 + self.params.ln_gamma_inv_v())) * ll / l;
                first + if second { next } else { 0.0 }
            }
            CaseTag::T2i => {
                let u = self.u.unwrap_or(f64::NAN);
                let first = correction_h(v, p, x) * ex * u;
                let next = correction_q(v, p, x, self.options.q_variant) * ex * u * u;
                first + if second { next } else { 0.0 }
            }
            CaseTag::T2ii => {
                let u = self.u.unwrap_or(f64::NAN);
                let first = correction_s(v, x) * ex * u * u;
                let next = correction_b_variant(v, x, self.options.b_variant) * ex * u * u * u;
                first + if second { next } else { 0.0 }
            }
        })
    }

    /// Theorem limits `(target1, target2)` at `(r, x)`.
    pub fn targets(&self, r: u32, x: f64) -> (f64, f64) {
        let v = self.case.v;
        let p = self.case.p;
        let rf = r as f64;
        let lam = gumbel(x);
        let fact = ln_factorial(r as i64 - 1).exp();
        let erx = (-rf * x).exp() / fact;
        match self.case.tag {
            CaseTag::T1i => {
                let t1 = lam * (-(rf + 1.0) * x).exp() * ((rf - 1.0) * x.exp() - 1.0) / (2.0 * fact);
                let poly = (-3.0 * rf.powi(3) + 10.0 * rf * rf - 9.0 * rf + 2.0) * (2.0 * x).exp()
                    + (9.0 * rf * rf - 11.0 * rf + 2.0) * x.exp()
                    + 3.0 * (-x).exp()
                    - 9.0 * rf
                    + 1.0;
                let t2 = (-(rf + 2.0) * x).exp() / (24.0 * fact) * poly * lam;
                (t1, t2)
            }
            CaseTag::T1ii => {
                let t1 = (1.0 - p) * x * x * erx * lam / 2.0;
                let bracket = 4.0 * (1.0 - 2.0 * p) - 3.0 * (1.0 - p) * rf * x + 3.0 * (1.0 - p) * x * (-x).exp();
                let t2 = (1.0 - p) * x.powi(3) * erx * bracket * lam / 24.0;
                (t1, t2)
            }
            CaseTag::T1iii => {
                let k = 1.0 - 1.0 / v;
                let t1 = k.powi(3) * erx * lam / 2.0;
                let t2 = -k * k * (1.0 - (LN_2 + self.params.ln_gamma_inv_v()) + x) * erx * lam;
                (t1, t2)
            }
            CaseTag::T2i => {
                let f = lam * (-(rf - 1.0) * x).exp() / fact;
                let h = correction_h(v, p, x);
                let q = correction_q(v, p, x, self.options.q_variant);
                (h * f, (q + (1.0 - (rf - 1.0) * x.exp()) * h * h / 2.0) * f)
            }
            CaseTag::T2ii => {
                let f = lam * (-(rf - 1.0) * x).exp() / fact;
                (correction_s(v, x) * f, correction_b_variant(v, x, self.options.b_variant) * f)
            }
        }
    }

    pub fn expansion(&self, r: u32, x: f64) -> Result<ExpansionEval> {
        if r < 1 {
            return Err(domain("rank r must be at least 1"));
        }
        let (scale_first, scale_second) = self.scales();
        if !(scale_first > 0.0 && scale_second > 0.0) || !scale_first.is_finite() || !scale_second.is_finite() {
            return Err(domain(format!("scale factors are not positive and finite at n = {}", self.n)));
        }
        let (target1, target2) = self.targets(r, x);
        Ok(ExpansionEval {
            case: self.case.tag,
            leading: gumbel_r(r as i64, x),
            first_order: target1 / scale_first,
            second_order: target2 / scale_second,
            scale_first,
            scale_second,
            target1,
            target2,
        })
    }

    /// Exact `P(|M_{n,r}|^p <= c_n x + d_n) - Λ_r(x)` and its diagnostics.
    pub fn evaluate(&self, r: u32, x: f64) -> Result<PointEval> {
        let expansion = self.expansion(r, x)?;
        let (_, t) = self.normed_point(x)?;
        let spec = OrderStatSpec::new(self.n, r, self.case.p)?;
        let one_minus_theta = self.theta_deficit_exact(x)?;
        let tail = orderstats::tail_deficit(self.n, r, x, one_minus_theta)?;
        let lower = orderstats::two_sided_correction(&self.params, &spec, t);
        let err = tail.deficit - lower;
        Ok(PointEval {
            exact: (expansion.leading + err).clamp(0.0, 1.0),
            err,
            one_minus_theta,
            remainder_bound: tail.remainder_bound,
            expansion,
        })
    }
}

/// Terms of the expansion at one `(r, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionEval {
    pub case: CaseTag,
    /// `Λ_r(x)`
    pub leading: f64,
    /// First-order term as it enters the CDF approximation: `target1 / scale_first`.
    pub first_order: f64,
    /// Second-order term as it enters the CDF approximation: `target2 / scale_second`.
    pub second_order: f64,
    pub scale_first: f64,
    pub scale_second: f64,
    pub target1: f64,
    pub target2: f64,
}

impl ExpansionEval {
    /// `scale_second / scale_first`, the factor applied to `scaled_err1 - target1`.
    pub fn inner_scale(&self) -> f64 {
        self.scale_second / self.scale_first
    }
}

/// Exact evaluation at one point together with the expansion terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEval {
    pub exact: f64,
    /// `exact - Λ_r(x)`, computed without forming the difference.
    pub err: f64,
    pub one_minus_theta: f64,
    pub remainder_bound: f64,
    pub expansion: ExpansionEval,
}

impl PointEval {
    pub fn scaled_err1(&self) -> f64 {
        self.expansion.scale_first * self.err
    }

    pub fn scaled_err2(&self) -> f64 {
        self.expansion.inner_scale() * (self.scaled_err1() - self.expansion.target1)
    }
}

/// `1 - θ` at `x`: the exact value and the closed-form prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaDeficit {
    pub exact: f64,
    pub predicted: f64,
}

pub fn theta_deficit(
    params: &GedParams,
    case: TheoremCase,
    n: SampleSize,
    x: f64,
    order: u32,
    options: ExpansionOptions,
) -> Result<ThetaDeficit> {
    let setup = CaseSetup::new(params, case, n, options)?;
    Ok(ThetaDeficit { exact: setup.theta_deficit_exact(x)?, predicted: setup.theta_deficit_predicted(x, order)? })
}

pub fn theorem_expansion(
    params: &GedParams,
    case: TheoremCase,
    r: u32,
    n: SampleSize,
    x: f64,
    options: ExpansionOptions,
) -> Result<ExpansionEval> {
    CaseSetup::new(params, case, n, options)?.expansion(r, x)
}

/// One adjudication point: the extrapolated `b_n^{-2v}` coefficient against each variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QFit {
    pub v: f64,
    pub p: f64,
    pub x: f64,
    pub fitted: f64,
    pub eq22: f64,
    pub eq34: f64,
    pub derived: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QAdjudication {
    pub winner: QVariant,
    /// Largest `|fitted - variant|` over the fits, per variant.
    pub max_dev: [(QVariant, f64); 3],
    pub fits: Vec<QFit>,
}

/// Fits the `b_n^{-2v}` coefficient of the exact `T2_i` deficit and picks
/// the closest `q` variant.
///
/// At each point `R(n) = ((1-θ) - h_v(x) e^x b^{-v}) e^{-x} / b^{-2v}` is
/// evaluated at `ln n = ln_n_lo` and `2 ln_n_lo` and extrapolated linearly in
/// `b^{-v}` to `b^{-v} = 0`.
pub fn adjudicate_q(vs: &[f64], ps: &[f64], xs: &[f64], ln_n_lo: f64) -> Result<QAdjudication> {
    let mut fits = Vec::new();
    for &v in vs {
        let params = GedParams::new(v)?;
        for &p in ps {
            let case = TheoremCase::new(CaseTag::T2i, v, p)?;
            let lo = CaseSetup::new(&params, case, SampleSize::Log(ln_n_lo), ExpansionOptions::default())?;
            let hi = CaseSetup::new(&params, case, SampleSize::Log(2.0 * ln_n_lo), ExpansionOptions::default())?;
            for &x in xs {
                let residual = |s: &CaseSetup| -> Result<(f64, f64)> {
                    let u = s.u.unwrap_or(f64::NAN);
                    let eps = s.theta_deficit_exact(x)?;
                    Ok((u, (eps - correction_h(v, p, x) * x.exp() * u) * (-x).exp() / (u * u)))
                };
                let (u1, r1) = residual(&lo)?;
                let (u2, r2) = residual(&hi)?;
                let fitted = (r2 * u1 - r1 * u2) / (u1 - u2);
                fits.push(QFit {
                    v,
                    p,
                    x,
                    fitted,
                    eq22: correction_q(v, p, x, QVariant::Eq22),
                    eq34: correction_q(v, p, x, QVariant::Eq34),
                    derived: correction_q(v, p, x, QVariant::Derived),
                });
            }
        }
    }
    let dev = |pick: fn(&QFit) -> f64| fits.iter().map(|f| (f.fitted - pick(f)).abs()).fold(0.0, f64::max);
    let max_dev = [
        (QVariant::Eq22, dev(|f| f.eq22)),
        (QVariant::Eq34, dev(|f| f.eq34)),
        (QVariant::Derived, dev(|f| f.derived)),
    ];
    let winner = max_dev.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|w| w.0).unwrap_or_default();
    Ok(QAdjudication { winner, max_dev, fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn gumbel_examples() {
        assert!(rel(gumbel(0.0), (-1f64).exp()) < 1e-15);
        assert_eq!(gumbel(50.0), 1.0);
        let x = gumbel_inverse(0.01).unwrap();
        assert!((x + 1.5272).abs() < 1e-4);
        assert!(rel(gumbel(x), 0.01) < 1e-14);
        assert!(gumbel_inverse(1.0).is_err());
    }

    #[test]
    fn gumbel_r_examples() {
        assert!(rel(gumbel_r(1, 0.0), (-1f64).exp()) < 1e-15);
        assert!(rel(gumbel_r(2, 0.0), 2.0 * (-1f64).exp()) < 1e-15);
        assert_eq!(gumbel_r(0, 0.3), 0.0);
        assert_eq!(gumbel_r(-2, 0.3), 0.0);
    }

    #[test]
    fn identities_examples() {
        let (l1, r1, _, _) = gumbel_r_identities(1, 0.4).unwrap();
        assert_eq!((l1, r1), (0.0, 0.0));
        let (l1, r1, _, _) = gumbel_r_identities(3, 0.7).unwrap();
        assert!((l1 - r1).abs() < 1e-14);
        let (_, _, l2, r2) = gumbel_r_identities(5, -0.3).unwrap();
        let ex = 0.3f64.exp();
        assert!((l2 - (ex * ex * gumbel_r(3, -0.3) + ex * gumbel_r(4, -0.3))).abs() < 1e-14);
        assert!((l2 - r2).abs() < 1e-14);
    }

    #[test]
    fn transfer_examples() {
        assert_eq!(lemma3_transfer(0.0, 2, 0.5).unwrap(), 0.0);
        let got = lemma3_transfer(0.1, 1, 0.0).unwrap();
        assert!(rel(got, (-1f64).exp() * 0.105) < 1e-14);
        assert!(lemma3_transfer(1.5, 1, 0.0).is_err());
    }

    #[test]
    fn routing() {
        assert_eq!(TheoremCase::classify(1.0, 1.0).tag, CaseTag::T1i);
        assert_eq!(TheoremCase::classify(1.0 + 1e-13, 1.0).tag, CaseTag::T1i);
        assert_eq!(TheoremCase::classify(1.0, 3.0).tag, CaseTag::T1ii);
        assert_eq!(TheoremCase::classify(2.0, 1.0).tag, CaseTag::T2i);
        assert_eq!(TheoremCase::classify(2.0, 2.0).tag, CaseTag::T2ii);
        assert_eq!(TheoremCase::classify_power(2.0, 2.0).tag, CaseTag::T1iii);
        assert!(matches!(TheoremCase::new(CaseTag::T2i, 2.0, 2.0), Err(Error::CaseMismatch(_))));
        assert!(TheoremCase::new(CaseTag::T1iii, 1.0, 2.0).is_err());
        assert_eq!("T1_iii".parse::<CaseTag>().unwrap(), CaseTag::T1iii);
        assert_eq!("t2ii".parse::<CaseTag>().unwrap(), CaseTag::T2ii);
    }

    #[test]
    fn correction_examples() {
        for &v in &[0.5, 2.0, 4.0] {
            let lv = GedParams::new(v).unwrap().lambda_v();
            assert!(rel(correction_h(v, 1.3, 0.0), -2.0 * (1.0 / v - 1.0) * lv) < 1e-14);
        }
        for &x in &[-1.0, 0.0, 0.5, 2.0] {
            let e = (-x as f64).exp();
            assert!((correction_h(2.0, 2.0, x) - (x + 1.0) * e).abs() < 1e-14);
            assert!((correction_s(2.0, x) + (x * x + 3.0 * x + 3.5) * e).abs() < 1e-14);
        }
    }

    #[test]
    fn q_variants_share_leading_coefficients() {
        // the x⁴, x³ and x¹ parts agree; only x² and constant can differ
        let (v, p) = (3.0, 1.5);
        let poly = |x: f64, var| correction_q(v, p, x, var) * x.exp();
        let a = |var| (poly(1.0, var) - poly(-1.0, var)) / 2.0; // odd part at x=1
        assert!((a(QVariant::Eq22) - a(QVariant::Eq34)).abs() < 1e-12);
        assert!((a(QVariant::Eq34) - a(QVariant::Derived)).abs() < 1e-12);
    }

    #[test]
    fn derived_cubic_tracks_third_order_residual() {
        let params = GedParams::new(2.0).unwrap();
        let case = TheoremCase::classify(2.0, 2.0);
        let ratio = |b_variant| {
            let options = ExpansionOptions { b_variant, ..ExpansionOptions::default() };
            let pt = CaseSetup::new(&params, case, SampleSize::Log(1000.0), options).unwrap().evaluate(1, 2.0).unwrap();
            pt.scaled_err2() / pt.expansion.target2
        };
        assert!((ratio(BVariant::Derived) - 1.0).abs() < 0.01);
        assert!((ratio(BVariant::Printed) - 1.0).abs() > 0.3);
    }

    #[test]
    fn b_variants_coincide_at_half() {
        for &x in &[-0.5, 0.0, 1.0, 2.0] {
            let a = correction_b_variant(0.5, x, BVariant::Printed);
            let b = correction_b_variant(0.5, x, BVariant::Derived);
            assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0));
        }
    }

    #[test]
    fn t1_i_first_order_example() {
        let params = GedParams::new(1.0).unwrap();
        let case = TheoremCase::classify(1.0, 1.0);
        let e = theorem_expansion(&params, case, 1, SampleSize::Exact(1000), 0.0, ExpansionOptions::default()).unwrap();
        assert!(rel(e.first_order, -(-1f64).exp() / 2000.0) < 1e-14);
        assert_eq!(e.scale_second, 1e6);
    }

    #[test]
    fn t1_ii_first_order_example() {
        let params = GedParams::new(1.0).unwrap();
        let case = TheoremCase::classify(1.0, 3.0);
        let n = SampleSize::Exact(1_000_000);
        let x = 0.8;
        let e = theorem_expansion(&params, case, 1, n, x, ExpansionOptions::default()).unwrap();
        let expect = gumbel(x) * (1.0 - 3.0) * x * x * (-x as f64).exp() / (2.0 * (5e5f64).ln());
        assert!(rel(e.first_order, expect) < 1e-14);
    }

    #[test]
    fn laplace_calibration_is_exact() {
        let params = GedParams::new(1.0).unwrap();
        let d = theta_deficit(&params, TheoremCase::classify(1.0, 1.0), SampleSize::Exact(1000), 1.5, 1, Default::default())
            .unwrap();
        assert_eq!(d.exact, 0.0);
    }

    #[test]
    fn t1_ii_deficit_example() {
        let params = GedParams::new(1.0).unwrap();
        let case = TheoremCase::classify(1.0, 3.0);
        let d = theta_deficit(&params, case, SampleSize::Exact(1_000_000), 1.0, 1, Default::default()).unwrap();
        let lead = -1.0 / (5e5f64).ln();
        assert!((d.predicted - lead).abs() < 1e-15);
        assert!((d.exact - lead).abs() < 2.0 * lead.abs() / (1e6f64).ln());
    }

    #[test]
    fn t1_ii_closed_form_matches_generic_survival() {
        // the stable Laplace form and the incomplete-gamma survival agree
        let params = GedParams::new(1.0).unwrap();
        let case = TheoremCase::classify(1.0, 2.0);
        let setup = CaseSetup::new(&params, case, SampleSize::Exact(100_000), Default::default()).unwrap();
        for &x in &[-0.5, 0.0, 1.0, 2.0] {
            let (_, t) = setup.normed_point(x).unwrap();
            let generic = -(1e5f64.ln() + x + params.ln_survival(t)).exp_m1();
            assert!((setup.theta_deficit_exact(x).unwrap() - generic).abs() < 1e-13);
        }
    }

    #[test]
    fn t2_i_deficit_example() {
        let params = GedParams::new(2.0).unwrap();
        let case = TheoremCase::classify(2.0, 1.0);
        let n = SampleSize::Exact(1_000_000_000_000);
        let setup = CaseSetup::new(&params, case, n, Default::default()).unwrap();
        let u = setup.u.unwrap();
        let d = setup.theta_deficit_exact(0.0).unwrap();
        assert!((d / u - 1.0).abs() < 10.0 * u, "{d} {u}");
    }

    #[test]
    fn case_mismatch_on_setup() {
        let params = GedParams::new(2.0).unwrap();
        let case = TheoremCase { tag: CaseTag::T2i, v: 2.0, p: 2.0 };
        let e = CaseSetup::new(&params, case, SampleSize::Exact(1000), Default::default());
        assert!(matches!(e, Err(Error::CaseMismatch(_))));
    }

    #[test]
    fn hall_normal_structure() {
        let params = GedParams::new(2.0).unwrap();
        let case = TheoremCase::classify(2.0, 2.0);
        let setup = CaseSetup::new(&params, case, SampleSize::Exact(1_000_000), Default::default()).unwrap();
        let b2 = 1.0 / setup.u.unwrap();
        assert!((setup.norming.scale - (2.0 - 2.0 / b2)).abs() < 1e-12);
        assert!((setup.norming.shift - (b2 - 2.0 / b2)).abs() < 1e-12);
    }
}
