//! Built-in oracle checks.
//!
//! Each check compares a production code path against an independent
//! computation: a different algorithm, a different closed form, or a
//! different matrix factorization.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::capacity::{narrowband_capacity, whiten, wiener_mmse};
use crate::geometry::{build_linear, ArrayGeometry, Position};
use crate::noisefield::{covariance_from_angular_density, AngularDensity, NoiseField, NoiseModel};
use crate::special::{bessel_j0, sinc};
use crate::wavefield::{steering_far_field, Direction};
use crate::Result;

/// Fault injection for exercising the failure path of the suite.
#[derive(Clone, Copy, Debug, Default)]
pub struct Hooks {
    /// Perturbs the sinc under test by one part in a million.
    pub corrupt_sinc: bool,
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// `sin(x)/x` as the infinite product of `cos(x / 2^k)`.
pub fn sinc_product_oracle(x: f64) -> f64 {
    let mut product = 1.0;
    let mut arg = x;
    for _ in 0..60 {
        arg *= 0.5;
        product *= arg.cos();
    }
    product
}

/// `J0(x) = (1/pi) int_0^pi cos(x sin t) dt`; the trapezoid rule is
/// spectrally accurate for this periodic integrand.
pub fn j0_integral_oracle(x: f64) -> f64 {
    let n = 400;
    let h = PI / n as f64;
    let mut sum = 0.5 * (1.0 + 1.0);
    for i in 1..n {
        sum += (x * (i as f64 * h).sin()).cos();
    }
    sum * h / PI
}

fn max_abs_error(f: impl Fn(f64) -> f64, oracle: impl Fn(f64) -> f64) -> (f64, f64) {
    (0..=5000)
        .map(|i| i as f64 * 0.01)
        .map(|x| ((f(x) - oracle(x)).abs(), x))
        .fold((0.0, 0.0), |acc, v| if v.0 > acc.0 { v } else { acc })
}

fn check_sinc(hooks: Hooks) -> CheckResult {
    let under_test = |x: f64| if hooks.corrupt_sinc { sinc(x) * (1.0 + 1e-6) } else { sinc(x) };
    let (err, at) = max_abs_error(under_test, sinc_product_oracle);
    CheckResult {
        name: "sinc-oracle",
        passed: err <= 1e-10,
        detail: format!("max |sinc - product oracle| = {err:.2e} at x = {at} (tol 1e-10)"),
    }
}

fn check_j0() -> CheckResult {
    let (err, at) = max_abs_error(bessel_j0, j0_integral_oracle);
    CheckResult {
        name: "j0-oracle",
        passed: err <= 1e-10,
        detail: format!("max |J0 - integral oracle| = {err:.2e} at x = {at} (tol 1e-10)"),
    }
}

/// Random microphone cloud in a 20 cm cube with at least 1 cm spacing;
/// `planar` keeps every microphone at z = 0.
pub fn random_geometry(rng: &mut ChaCha8Rng, count: usize, planar: bool) -> ArrayGeometry {
    let height = if planar { 0.0 } else { 0.1 };
    loop {
        let positions: Vec<Position> = (0..count)
            .map(|_| {
                Position::new(
                    rng.random_range(-0.1..0.1),
                    rng.random_range(-0.1..0.1),
                    height * rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let spaced = (0..count).all(|i| ((i + 1)..count).all(|j| (positions[i] - positions[j]).norm() >= 0.01));
        if spaced {
            return ArrayGeometry::new(positions).expect("spaced positions are valid");
        }
    }
}

fn random_noise(rng: &mut ChaCha8Rng) -> NoiseModel {
    let epsilon = rng.random_range(0.001..0.1);
    match rng.random_range(0..3) {
        0 => NoiseModel::spherical(1.0, epsilon),
        1 => NoiseModel::cylindrical(1.0, epsilon),
        _ => {
            let tilt = rng.random_range(0.0..TAU);
            let azimuths: Vec<f64> = (0..12).map(|i| i as f64 * TAU / 12.0).collect();
            let polars: Vec<f64> = (0..=6).map(|i| i as f64 * PI / 6.0).collect();
            let density = AngularDensity::from_fn(azimuths, polars, |a, p| 1.0 + 0.8 * (a - tilt).cos() * p.sin())
                .expect("positive density");
            NoiseModel::density(density, (24, 12), epsilon)
        }
    }
}

/// Worst relative mismatches of (whitened vs direct gain, MMSE identity).
fn whitening_and_mmse(instances: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_gain: f64 = 0.0;
    let mut worst_mmse: f64 = 0.0;
    for _ in 0..instances {
        let m = rng.random_range(2..=8);
        let noise = random_noise(&mut rng);
        let planar = matches!(noise.field, NoiseField::CylindricalDiffuse);
        let geometry = random_geometry(&mut rng, m, planar);
        let f = rng.random_range(100.0..8000.0);
        let dir = Direction::new(rng.random_range(0.0..TAU), rng.random_range(0.0..PI))?;
        let gamma = noise.covariance(&geometry, f, crate::SPEED_OF_SOUND)?;
        let d = steering_far_field(&geometry, f, dir, crate::SPEED_OF_SOUND);

        let whitened = whiten(&gamma)?.channel_gain(&d.entries)?;
        let solved = gamma
            .matrix()
            .clone()
            .lu()
            .solve(&d.entries)
            .expect("full-rank covariance");
        let direct = d.entries.dotc(&solved).re;
        worst_gain = worst_gain.max((whitened - direct).abs() / direct.abs());

        let snr = rng.random_range(0.1..10.0);
        let capacity = narrowband_capacity(&d, &gamma, snr)?.value;
        let power = snr * gamma.noise_power();
        let mmse = wiener_mmse(&d, &gamma, power)?;
        let identity = power * (-capacity).exp2();
        worst_mmse = worst_mmse.max((mmse - identity).abs() / mmse);
    }
    Ok((worst_gain, worst_mmse))
}

fn check_quadrature() -> Result<CheckResult> {
    let geometry = build_linear(3, 0.03)?;
    let density = AngularDensity::isotropic(1.0 / (4.0 * PI))?;
    let numeric = covariance_from_angular_density(&geometry, 1000.0, &density, crate::SPEED_OF_SOUND, (128, 64))?;
    let closed = NoiseModel::spherical(1.0, 0.0).covariance(&geometry, 1000.0, crate::SPEED_OF_SOUND)?;
    let err = (numeric - closed.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(CheckResult {
        name: "quadrature-vs-closed-form",
        passed: err <= 1e-3,
        detail: format!("max entry deviation {err:.2e} sigma^2 (tol 1e-3)"),
    })
}

/// Runs every check; never short-circuits.
pub fn run_checks(hooks: Hooks) -> Vec<CheckResult> {
    let mut results = vec![check_sinc(hooks), check_j0()];
    match whitening_and_mmse(200, 0x5eed) {
        Ok((gain, mmse)) => {
            results.push(CheckResult {
                name: "whitened-vs-direct",
                passed: gain <= 1e-9,
                detail: format!("max relative |h|^2 mismatch {gain:.2e} over 200 instances (tol 1e-9)"),
            });
            results.push(CheckResult {
                name: "mmse-identity",
                passed: mmse <= 1e-12,
                detail: format!("max relative |MMSE - P 2^-C| {mmse:.2e} (tol 1e-12)"),
            });
        }
        Err(e) => results.push(CheckResult {
            name: "whitened-vs-direct",
            passed: false,
            detail: format!("instance generation failed: {e}"),
        }),
    }
    results.push(check_quadrature().unwrap_or_else(|e| CheckResult {
        name: "quadrature-vs-closed-form",
        passed: false,
        detail: e.to_string(),
    }));
    results
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracles_agree_with_textbook_values() {
        assert!((sinc_product_oracle(PI / 2.0) - 2.0 / PI).abs() < 1e-15);
        // J0(1) = 0.7651976865579666 (tabulated)
        assert!((j0_integral_oracle(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
    }

    #[test]
    fn clean_build_passes_everything() {
        let results = run_checks(Hooks::default());
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
        assert_eq!(results.len(), 5);
    }

    #[test]
    fn corrupted_sinc_is_caught() {
        let results = run_checks(Hooks { corrupt_sinc: true });
        let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
        assert_eq!(failed, vec!["sinc-oracle"]);
    }
}
