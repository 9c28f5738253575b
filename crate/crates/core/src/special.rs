//! Coherence kernels for diffuse noise fields.

use std::f64::consts::FRAC_PI_4;

/// Unnormalized cardinal sine, `sin(x) / x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// Crossover between the power series and the asymptotic expansion.
const J0_SERIES_LIMIT: f64 = 12.0;

/// Bessel function of the first kind, order zero.
///
/// Power series below `|x| = 12`, Hankel asymptotic expansion above. Both
/// branches hold about 1e-12 absolute accuracy.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < J0_SERIES_LIMIT {
        j0_series(ax)
    } else {
        j0_asymptotic(ax)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= -q / (k * k);
        sum += term;
        if k > q.sqrt() && term.abs() < 1e-18 {
            break;
        }
        k += 1.0;
        if k > 200.0 {
            break;
        }
    }
    sum
}

fn j0_asymptotic(x: f64) -> f64 {
    // a_k = prod_{j=1..k} (-(2j-1)^2) / (k! 8^k); P collects even k, Q odd k,
    // both with alternating sign (-1)^floor(k/2).
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..80 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        a *= -(odd * odd) / (8.0 * kf * x);
        let mag = a.abs();
        if mag >= last || mag < 1e-18 {
            break;
        }
        last = mag;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
