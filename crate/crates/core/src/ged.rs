//! The general error distribution GED(v).
//!
//! Density `g_v(x) = v exp(-|x/λ|^v / 2) / (λ 2^{1+1/v} Γ(1/v))` with
//! `λ = sqrt(2^{-2/v} Γ(1/v) / Γ(3/v))`, so every member has unit variance.
//! `v = 2` is the standard normal and `v = 1` the Laplace law.
//!
//! All tail probabilities go through the incomplete gamma function: for
//! `x >= 0`, `1 - G_v(x) = Q(1/v, (x/λ)^v / 2) / 2`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{domain, Result};
use crate::specfun;

const LN_2: f64 = std::f64::consts::LN_2;

/// Tolerance used when deciding whether `v` is the Laplace shape.
pub const SHAPE_TIE_TOL: f64 = 1e-12;
const DEGENERACY_TOL: f64 = 1e-8;

/// Shape `v` and the derived scale `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GedParams {
    v: f64,
    lambda: f64,
    inv_v: f64,
    /// `λ^v`, used by every tail formula.
    lambda_v: f64,
    /// `ln(λ 2^{1+1/v} Γ(1/v) / v)`
    ln_norm: f64,
    ln_gamma_inv_v: f64,
    degenerate: bool,
}

impl GedParams {
    pub fn new(v: f64) -> Result<Self> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(domain(format!("shape v must be finite and > 0, got {v}")));
        }
        let inv_v = 1.0 / v;
        let ln_gamma_inv_v = specfun::log_gamma(inv_v)?;
        let lambda = if v == 2.0 {
            1.0
        } else if v == 1.0 {
            0.5 * std::f64::consts::FRAC_1_SQRT_2
        } else {
            (0.5 * (-2.0 * inv_v * LN_2 + ln_gamma_inv_v - specfun::log_gamma(3.0 * inv_v)?)).exp()
        };
        let lambda_v = lambda.powf(v);
        let ln_norm = lambda.ln() + (1.0 + inv_v) * LN_2 + ln_gamma_inv_v - v.ln();
        let degenerate = (1.0 + 2.0 * (inv_v - 1.0) * lambda_v).abs() < DEGENERACY_TOL;
        Ok(Self { v, lambda, inv_v, lambda_v, ln_norm, ln_gamma_inv_v, degenerate })
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `λ^v`
    pub fn lambda_v(&self) -> f64 {
        self.lambda_v
    }

    pub fn ln_gamma_inv_v(&self) -> f64 {
        self.ln_gamma_inv_v
    }

    /// True when the Laplace shape is within [`SHAPE_TIE_TOL`].
    pub fn is_laplace(&self) -> bool {
        (self.v - 1.0).abs() <= SHAPE_TIE_TOL
    }

    /// Set when `1 + 2(1/v - 1)λ^v` vanishes (to 1e-8), which happens at `v = 2`.
    pub fn representation_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        -0.5 * (x.abs() / self.lambda).powf(self.v) - self.ln_norm
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Argument of `Q(1/v, .)` for the tail beyond `|x|`.
    fn gamma_arg(&self, x: f64) -> f64 {
        0.5 * (x.abs() / self.lambda).powf(self.v)
    }

    fn upper_half(&self, x: f64) -> f64 {
        0.5 * specfun::reg_gamma_upper(self.inv_v, self.gamma_arg(x)).expect("valid incomplete gamma arguments")
    }

    /// `1 - G_v(x)`. For `x >= 0` never formed by subtraction.
    pub fn survival(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x >= 0.0 {
            self.upper_half(x)
        } else {
            1.0 - self.upper_half(x)
        }
    }

    /// `ln(1 - G_v(x))`, finite far beyond the underflow point of `survival`.
    pub fn ln_survival(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x >= 0.0 {
            -LN_2 + specfun::ln_reg_gamma_upper(self.inv_v, self.gamma_arg(x)).expect("valid incomplete gamma arguments")
        } else {
            (-self.upper_half(x)).ln_1p()
        }
    }

    /// `G_v(x)`, defined through the survival so that `cdf(-x) + cdf(x) = 1`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x < 0.0 {
            self.upper_half(x)
        } else {
            1.0 - self.upper_half(x)
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(domain(format!("quantile requires 0 < u < 1, got {u}")));
        }
        if u == 0.5 {
            return Ok(0.0);
        }
        let tail = u.min(1.0 - u);
        let y = specfun::inv_reg_gamma_upper(self.inv_v, 2.0 * tail)?;
        let x = self.lambda * (2.0 * y).powf(self.inv_v);
        Ok(if u > 0.5 { x } else { -x })
    }

    /// `1 - F(y)` where `F` is the law of `|X|^v`; equals `2 (1 - G_v(y^{1/v}))`.
    pub fn powered_abs_survival(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        specfun::reg_gamma_upper(self.inv_v, y / (2.0 * self.lambda_v)).expect("valid incomplete gamma arguments")
    }

    pub fn sampler(&self) -> GedSampler {
        GedSampler {
            lambda: self.lambda,
            inv_v: self.inv_v,
            gamma: Gamma::new(self.inv_v, 1.0).expect("shape 1/v is positive and finite"),
        }
    }

    /// `count` i.i.d. draws from a ChaCha8 stream seeded with `seed`.
    pub fn sample_stream(&self, count: usize, seed: u64) -> Vec<f64> {
        let sampler = self.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| sampler.sample(&mut rng)).collect()
    }
}

/// Free-function alias of [`GedParams::new`].
pub fn make_params(v: f64) -> Result<GedParams> {
    GedParams::new(v)
}

/// Gamma-transform sampler: `|X| = λ (2G)^{1/v}`, `G ~ Gamma(1/v, 1)`, random sign.
#[derive(Debug, Clone, Copy)]
pub struct GedSampler {
    lambda: f64,
    inv_v: f64,
    gamma: Gamma<f64>,
}

impl Distribution<f64> for GedSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g: f64 = self.gamma.sample(rng);
        let magnitude = self.lambda * (2.0 * g).powf(self.inv_v);
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }
}

/// Correction coefficients of the Mills-type tail series
/// `1 - G_v(x) ≈ (2λ^v/v) {1 + Σ c_k x^{-kv}} x^{1-v} g_v(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailExpansion {
    pub coefficients: [f64; 3],
    pub order: usize,
}

impl TailExpansion {
    pub fn new(params: &GedParams, order: usize) -> Result<Self> {
        if order > 3 {
            return Err(domain(format!("tail expansion order must be 0..=3, got {order}")));
        }
        let k = params.inv_v - 1.0;
        let lv = params.lambda_v;
        let coefficients = [
            2.0 * k * lv,
            4.0 * k * (params.inv_v - 2.0) * lv * lv,
            8.0 * k * (params.inv_v - 2.0) * (params.inv_v - 3.0) * lv * lv * lv,
        ];
        Ok(Self { coefficients, order })
    }

    /// `1 + Σ_{k <= order} c_k t^{-k}`
    pub fn bracket(&self, t: f64) -> f64 {
        let inv = 1.0 / t;
        let mut acc = 1.0;
        let mut pow = 1.0;
        for c in &self.coefficients[..self.order] {
            pow *= inv;
            acc += c * pow;
        }
        acc
    }
}

/// Asymptotic approximation of `1 - G_v(x)` through `order` correction terms.
pub fn tail_survival_expansion(params: &GedParams, x: f64, order: usize) -> Result<f64> {
    if params.is_laplace() {
        return Err(domain("tail expansion degenerates at v = 1; use the exact survival"));
    }
    if !(x > 1.0) {
        return Err(domain(format!("tail expansion needs x^-v < 1, i.e. x > 1, got {x}")));
    }
    let series = TailExpansion::new(params, order)?;
    let v = params.v;
    Ok(2.0 * params.lambda_v / v * series.bracket(x.powf(v)) * x.powf(1.0 - v) * params.pdf(x))
}

/// The series form of `1 - F(y)` for `F` the law of `|X|^v`:
/// `K {1 + Σ c_k y^{-k}} y^{1/v - 1} exp(-y / (2λ^v))`, `K = 2^{1-1/v} λ^{v-1} / Γ(1/v)`.
pub fn powered_abs_tail_series(params: &GedParams, y: f64, order: usize) -> Result<f64> {
    if params.is_laplace() {
        return Err(domain("powered tail series degenerates at v = 1"));
    }
    if !(y > 1.0) {
        return Err(domain(format!("powered tail series needs y > 1, got {y}")));
    }
    let series = TailExpansion::new(params, order)?;
    let iv = params.inv_v;
    let ln_k = (1.0 - iv) * LN_2 + (params.v - 1.0) * params.lambda.ln() - params.ln_gamma_inv_v;
    let ln_rest = (iv - 1.0) * y.ln() - y / (2.0 * params.lambda_v);
    Ok(series.bracket(y) * (ln_k + ln_rest).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn lambda_values() {
        assert_eq!(GedParams::new(2.0).unwrap().lambda(), 1.0);
        assert!(rel(GedParams::new(1.0).unwrap().lambda(), 2f64.powf(-1.5)) < 1e-15);
        assert!(rel(GedParams::new(4.0).unwrap().lambda(), 1.446_409_084_632_077) < 1e-13);
        assert!(GedParams::new(0.0).is_err());
        assert!(GedParams::new(-1.0).is_err());
    }

    #[test]
    fn lambda_recomputes_from_definition() {
        for &v in &[0.5, 1.0, 1.5, 2.0, 3.0, 4.0] {
            let p = GedParams::new(v).unwrap();
            let g1 = specfun::gamma(1.0 / v).unwrap();
            let g3 = specfun::gamma(3.0 / v).unwrap();
            let direct = (2f64.powf(-2.0 / v) * g1 / g3).sqrt();
            assert!(rel(p.lambda(), direct) < 1e-12, "v={v}");
        }
    }

    #[test]
    fn density_examples() {
        let normal = GedParams::new(2.0).unwrap();
        assert!(rel(normal.pdf(0.0), 0.398_942_280_401_432_7) < 1e-14);
        let laplace = GedParams::new(1.0).unwrap();
        assert!(rel(laplace.pdf(0.0), std::f64::consts::FRAC_1_SQRT_2) < 1e-14);
        assert!(rel(laplace.pdf(0.7), std::f64::consts::FRAC_1_SQRT_2 * (-2f64.sqrt() * 0.7).exp()) < 1e-14);
        assert_eq!(laplace.pdf(-0.3), laplace.pdf(0.3));
    }

    #[test]
    fn distribution_examples() {
        for &v in &[0.5, 1.0, 2.0, 4.0] {
            let p = GedParams::new(v).unwrap();
            assert_eq!(p.cdf(0.0), 0.5);
            assert_eq!(p.survival(0.0), 0.5);
        }
        let laplace = GedParams::new(1.0).unwrap();
        assert!(rel(laplace.cdf(1.0), 1.0 - 0.5 * (-2f64.sqrt()).exp()) < 1e-15);
        let normal = GedParams::new(2.0).unwrap();
        assert!(rel(normal.cdf(1.0), 0.841_344_746_068_542_9) < 1e-14);
        assert!(rel(normal.survival(10.0), 7.619_853_024_160_527e-24) < 1e-10);
    }

    #[test]
    fn laplace_survival_is_exact() {
        let p = GedParams::new(1.0).unwrap();
        for i in 0..200 {
            let x = i as f64 * 0.25;
            let exact = 0.5 * (-2f64.sqrt() * x).exp();
            assert!(rel(p.survival(x), exact) < 5e-14, "x={x}");
        }
    }

    #[test]
    fn symmetry_is_exact() {
        for &v in &[0.5, 1.0, 2.0, 4.0] {
            let p = GedParams::new(v).unwrap();
            for i in 0..50 {
                let x = 0.173 * i as f64;
                assert_eq!(p.cdf(-x) + p.cdf(x), 1.0, "v={v} x={x}");
            }
        }
    }

    #[test]
    fn log_survival_far_tail() {
        let p = GedParams::new(2.0).unwrap();
        // Mills ratio leading term: ln S(x) ≈ -x²/2 - ln(x √(2π))
        let x = 100.0_f64;
        let approx = -0.5 * x * x - (x * (2.0 * std::f64::consts::PI).sqrt()).ln() + (-1.0 / (x * x)).ln_1p();
        assert!((p.ln_survival(x) - approx).abs() < 1e-6);
        assert_eq!(p.survival(x), 0.0);
    }

    #[test]
    fn quantile_examples() {
        let laplace = GedParams::new(1.0).unwrap();
        assert!(rel(laplace.quantile(0.9).unwrap(), -(0.2f64.ln()) / 2f64.sqrt()) < 1e-12);
        let normal = GedParams::new(2.0).unwrap();
        assert!(rel(normal.quantile(0.975).unwrap(), 1.959_963_984_540_054) < 1e-12);
        assert_eq!(normal.quantile(0.5).unwrap(), 0.0);
        assert!(normal.quantile(0.0).is_err());
        assert!(normal.quantile(1.0).is_err());
        for &v in &[0.5, 2.0, 4.0] {
            let p = GedParams::new(v).unwrap();
            for &u in &[1e-9, 0.01, 0.3, 0.7, 0.99] {
                let x = p.quantile(u).unwrap();
                assert!(rel(p.cdf(x), u) < 1e-12, "v={v} u={u}");
                assert!(rel(p.quantile(1.0 - u).unwrap(), -x) < 1e-7);
            }
        }
    }

    #[test]
    fn powered_abs_examples() {
        let laplace = GedParams::new(1.0).unwrap();
        assert_eq!(laplace.powered_abs_survival(0.0), 1.0);
        assert!(rel(laplace.powered_abs_survival(1.0), (-2f64.sqrt()).exp()) < 1e-14);
        let normal = GedParams::new(2.0).unwrap();
        assert!(rel(normal.powered_abs_survival(4.0), 0.045_500_263_896_358_42) < 1e-13);
        let p = GedParams::new(0.5).unwrap();
        assert!(rel(p.powered_abs_survival(3.0), 2.0 * p.survival(9.0)) < 1e-14);
    }

    #[test]
    fn sample_stream_basics() {
        let p = GedParams::new(2.0).unwrap();
        assert!(p.sample_stream(0, 1).is_empty());
        assert_eq!(p.sample_stream(5, 42), p.sample_stream(5, 42));
        assert_ne!(p.sample_stream(5, 42), p.sample_stream(5, 43));
    }

    #[test]
    fn tail_expansion_coefficients() {
        let p = GedParams::new(2.0).unwrap();
        let t = TailExpansion::new(&p, 1).unwrap();
        assert_eq!(t.coefficients[0], -1.0);
        let laplace = GedParams::new(1.0).unwrap();
        assert_eq!(TailExpansion::new(&laplace, 3).unwrap().coefficients, [0.0; 3]);
        assert!(TailExpansion::new(&p, 4).is_err());
    }

    #[test]
    fn tail_expansion_guards() {
        assert!(tail_survival_expansion(&GedParams::new(1.0).unwrap(), 5.0, 2).is_err());
        assert!(tail_survival_expansion(&GedParams::new(2.0).unwrap(), 0.9, 2).is_err());
    }

    #[test]
    fn tail_expansion_leading_normal() {
        let p = GedParams::new(2.0).unwrap();
        let x = 8.0;
        let lead = tail_survival_expansion(&p, x, 0).unwrap();
        assert!(rel(lead, p.pdf(x) / x) < 1e-14);
        assert!(rel(lead, p.survival(x)) <= 2.0 / (x * x));
    }

    #[test]
    fn tail_expansion_terminates_at_half() {
        // (1/v - 2) vanishes, so the order-3 series is the exact survival
        let p = GedParams::new(0.5).unwrap();
        for &x in &[5.0, 50.0, 500.0] {
            let e0 = rel(tail_survival_expansion(&p, x, 0).unwrap(), p.survival(x));
            let e3 = rel(tail_survival_expansion(&p, x, 3).unwrap(), p.survival(x));
            assert!(e3 < 1e-12 && e3 < e0, "x={x} e0={e0} e3={e3}");
        }
    }

    #[test]
    fn powered_tail_series_tracks_exact() {
        let p = GedParams::new(4.0).unwrap();
        let y = 2000.0;
        let exact = p.powered_abs_survival(y);
        let e2 = rel(powered_abs_tail_series(&p, y, 2).unwrap(), exact);
        let e3 = rel(powered_abs_tail_series(&p, y, 3).unwrap(), exact);
        assert!(e3 < 1e-8 && e3 < e2, "e2={e2} e3={e3}");
    }

    #[test]
    fn degeneracy_flag() {
        assert!(GedParams::new(2.0).unwrap().representation_degenerate());
        assert!(!GedParams::new(4.0).unwrap().representation_degenerate());
        assert!(!GedParams::new(0.5).unwrap().representation_degenerate());
    }
}
