//! Modified Bessel function of the second kind for real order.
//!
//! Temme's series for small arguments, Steed's continued fraction for
//! `x >= 2`, both evaluated at a fractional order in `[-1/2, 1/2)` and
//! lifted to the requested order by forward recurrence (stable for `K`).

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// `K_order(x)` for `x > 0`.
pub fn bessel_k(order: f64, x: f64) -> Result<f64> {
    Ok(bessel_k_scaled(order, x)? * (-x).exp())
}

/// Exponentially scaled `e^x K_order(x)`; finite far beyond the range where
/// `K` itself underflows.
pub fn bessel_k_scaled(order: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bessel_k requires x > 0, got {x}")));
    }
    if !order.is_finite() {
        return Err(Error::Domain(format!("bessel_k order must be finite, got {order}")));
    }
    Ok(scaled_nonneg(order.abs(), x))
}

/// `ln K_order(x)`.
pub fn ln_bessel_k(order: f64, x: f64) -> Result<f64> {
    Ok(bessel_k_scaled(order, x)?.ln() - x)
}

fn scaled_nonneg(nu: f64, x: f64) -> f64 {
    let nl = (nu + 0.5).floor() as usize;
    let xmu = nu - nl as f64;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    let (mut k_mu, mut k_mu1) = if x < 2.0 {
        let (k0, k1) = temme_series(xmu, x);
        let scale = x.exp();
        (k0 * scale, k1 * scale)
    } else {
        steed_scaled(xmu, x)
    };

    for i in 1..=nl {
        let next = (xmu + i as f64) * xi2 * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
    }
    k_mu
}

/// Unscaled `(K_mu(x), K_{mu+1}(x))` for `|mu| <= 1/2`, `x < 2`.
fn temme_series(xmu: f64, x: f64) -> (f64, f64) {
    let xmu2 = xmu * xmu;
    let x2 = 0.5 * x;
    let pimu = PI * xmu;
    let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = xmu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = gamma_terms(xmu);

    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - xmu2);
        c *= dd / fi;
        p /= fi - xmu;
        q /= fi + xmu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum, sum1 * 2.0 / x)
}

/// Scaled `(e^x K_mu(x), e^x K_{mu+1}(x))` for `|mu| <= 1/2`, `x >= 2`.
fn steed_scaled(xmu: f64, x: f64) -> (f64, f64) {
    let xmu2 = xmu * xmu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - xmu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mu1 = k_mu * (xmu + x + 0.5 - h) / x;
    (k_mu, k_mu1)
}

/// Returns `(gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu))` where
/// `gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)` and
/// `gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2`, via Chebyshev expansions
/// valid for `|mu| <= 1/2`.
fn gamma_terms(xmu: f64) -> (f64, f64, f64, f64) {
    const C1: [f64; 7] = [
        -1.142022680371168e0,
        6.5165112670737e-3,
        3.087090173086e-4,
        -3.4706269649e-6,
        6.9437664e-9,
        3.67795e-11,
        -1.356e-13,
    ];
    const C2: [f64; 8] = [
        1.843740587300905e0,
        -7.68528408447867e-2,
        1.2719271366546e-3,
        -4.9717367042e-6,
        -3.31261198e-8,
        2.423096e-10,
        -1.702e-13,
        -1.49e-15,
    ];
    let xx = 8.0 * xmu * xmu - 1.0;
    let gam1 = chebyshev(&C1, xx);
    let gam2 = chebyshev(&C2, xx);
    (gam1, gam2, gam2 - xmu * gam1, gam2 + xmu * gam1)
}

/// Chebyshev series on `[-1, 1]` with the first coefficient halved.
fn chebyshev(c: &[f64], y: f64) -> f64 {
    let y2 = 2.0 * y;
    let mut d = 0.0;
    let mut dd = 0.0;
    for &cj in c.iter().skip(1).rev() {
        let sv = d;
        d = y2 * d - dd + cj;
        dd = sv;
    }
    y * d - dd + 0.5 * c[0]
}
