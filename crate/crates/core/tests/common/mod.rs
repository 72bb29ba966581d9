//! Independent oracles: adaptive Gauss–Kronrod (7, 15) quadrature and exact
//! rational binomial sums.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One G7K15 panel: (Kronrod estimate, |Kronrod - Gauss|).
pub fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let pair = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: (f64, f64), tol: f64, rel: f64, depth: u32) -> f64 {
    let (est, err) = whole;
    // a panel good to `rel` on its own cannot spoil a positive integral
    if err <= tol || err <= rel * est.abs() || depth == 0 {
        return est;
    }
    let m = 0.5 * (a + b);
    let left = gk15(f, a, m);
    let right = gk15(f, m, b);
    adapt(f, a, m, left, tol / 2.0, rel, depth - 1) + adapt(f, m, b, right, tol / 2.0, rel, depth - 1)
}

/// `∫_a^b f` to relative tolerance `rel` of the first-pass magnitude.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel: f64) -> f64 {
    let first = gk15(f, a, b);
    // an absolute floor from a coarse 16-panel pass keeps tiny integrals relative
    let coarse: f64 = (0..16)
        .map(|i| {
            let w = (b - a) / 16.0;
            gk15(f, a + i as f64 * w, a + (i + 1) as f64 * w).0.abs()
        })
        .sum();
    adapt(f, a, b, first, rel * coarse.max(f64::MIN_POSITIVE), rel, 30)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// `(∫_0^x, ∫_x^∞)` of `t^{a-1} e^{-t}` by quadrature. For `a < 1` the
/// substitution `t = s^{1/a}` removes the endpoint singularity.
pub fn gamma_pieces(a: f64, x: f64) -> (f64, f64) {
    let top = x.max(a) + 200.0 + 20.0 * a;
    if a >= 1.0 {
        let f = |t: f64| if t == 0.0 { 0.0 } else { ((a - 1.0) * t.ln() - t).exp() };
        (integrate(&f, 0.0, x, 1e-13), integrate(&f, x, top, 1e-13))
    } else {
        let f = |s: f64| (-s.powf(1.0 / a)).exp() / a;
        (integrate(&f, 0.0, x.powf(a), 1e-13), integrate(&f, x.powf(a), top.powf(a), 1e-13))
    }
}

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

/// `Σ_{j<r} C(n,j) a^j (1-a)^{n-j}` in exact rational arithmetic.
pub fn binomial_lower(n: u64, r: u32, a: &BigRational) -> BigRational {
    let b = BigRational::one() - a;
    let mut sum = BigRational::zero();
    let mut coef = BigInt::one();
    for j in 0..(r as u64).min(n + 1) {
        if j > 0 {
            coef = coef * BigInt::from(n - j + 1) / BigInt::from(j);
        }
        let term = BigRational::from_integer(coef.clone()) * pow(a, j) * pow(&b, n - j);
        sum += term;
    }
    sum
}

fn pow(a: &BigRational, k: u64) -> BigRational {
    num_traits::pow(a.clone(), k as usize)
}

