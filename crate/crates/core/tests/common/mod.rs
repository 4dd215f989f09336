//! Independent reference computations for the test suites. Nothing here
//! calls into the crate's numerical code.
#![allow(dead_code)]

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// `z·sqrt(k(n-k)/n³)` with the square root taken on 40-digit scaled big
/// integers; only the final multiply by `z` happens in f64.
pub fn eq1_half_width(correct: u64, n: u64, z: f64) -> f64 {
    let scale = BigUint::from(10u32).pow(80);
    let num = BigUint::from(correct) * BigUint::from(n - correct) * scale;
    let den = BigUint::from(n).pow(3);
    let root = (num / den).sqrt();
    // root / 10^40, keeping 17 significant digits
    let digits = root.to_string();
    let value: f64 = if digits == "0" {
        0.0
    } else {
        format!("{}e-40", digits).parse().unwrap()
    };
    z * value
}

fn binomial_coefficient(n: u64, k: u64) -> BigUint {
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    c
}

/// `min(1, 2·P(X <= min(b, c)))` for `X ~ Binomial(b + c, 1/2)` by summing
/// exact binomial coefficients.
pub fn mcnemar_exact_p(b: u64, c: u64) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    let mut sum = BigUint::zero();
    for i in 0..=b.min(c) {
        sum += binomial_coefficient(n, i);
    }
    let twice = sum * BigUint::from(2u32);
    let total = BigUint::one() << n;
    if twice >= total {
        return 1.0;
    }
    // scale to keep 30 significant digits before converting
    let shift = 100u64;
    let scaled = (twice << shift) / total;
    scaled.to_f64().unwrap() / 2f64.powi(shift as i32)
}

/// Exact binomial pmf for small `n`.
pub fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    binomial_coefficient(n, k).to_f64().unwrap() * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

fn density(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF by composite Simpson integration of the density from
/// 0, accurate to about 1e-14 on |x| <= 8.
pub fn cdf_by_quadrature(x: f64) -> f64 {
    let steps = 20_000usize;
    let h = x.abs() / steps as f64;
    let mut acc = density(0.0) + density(x.abs());
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * density(i as f64 * h);
    }
    let area = acc * h / 3.0;
    if x < 0.0 {
        0.5 - area
    } else {
        0.5 + area
    }
}

/// Inverse of [`cdf_by_quadrature`] by bisection.
pub fn quantile_by_bisection(p: f64) -> f64 {
    let (mut lo, mut hi) = (-9.0f64, 9.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if cdf_by_quadrature(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Chi-square survival function with `df` degrees of freedom via the
/// regularized upper incomplete gamma series/continued fraction.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    upper_gamma_regularized(df / 2.0, x / 2.0)
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn upper_gamma_regularized(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let front = (-x + a * x.ln() - ln_gamma(a)).exp();
    if x < a + 1.0 {
        let (mut sum, mut term, mut ap) = (1.0 / a, 1.0 / a, a);
        for _ in 0..1000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term < sum * 1e-16 {
                break;
            }
        }
        1.0 - sum * front
    } else {
        // Lentz continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        front * h
    }
}
