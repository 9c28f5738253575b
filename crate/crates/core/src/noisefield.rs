//! Spatial noise covariance matrices.
//!
//! Diffuse fields use the classic coherence kernels: `sinc(k l)` for a
//! spherically isotropic field and `J0(k l)` for a cylindrically isotropic
//! one, with `k = 2 pi f / c`. The incoherent share `epsilon` divides the
//! off-diagonal coherence by `1 + epsilon` while the diagonal stays at the
//! total noise power.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use num_complex::Complex64;

use crate::geometry::{ArrayGeometry, DistanceMatrix};
use crate::linalg::{hermitian_eigen, hermitian_part, CMatrix};
use crate::special::{bessel_j0, sinc};
use crate::wavefield::{bracket, read_grid_csv, steering, steering_far_field, Direction, SourceSpec};
use crate::{Error, Result};

/// Relative PSD tolerance: `min eigenvalue >= -1e-10 * max eigenvalue`.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Default incoherent share used by the CLI.
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Default quadrature resolution (azimuth nodes, polar intervals).
pub const DEFAULT_RESOLUTION: (usize, usize) = (64, 32);

/// Hermitian PSD spatial noise covariance at one frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseCovariance {
    matrix: CMatrix,
    frequency: f64,
    noise_power: f64,
    with_interference: bool,
}

impl NoiseCovariance {
    /// Symmetrizes `matrix` and checks positive semidefiniteness.
    ///
    /// `noise_power` is the per-microphone power of the noise field; the
    /// diagonal is expected to equal it unless interference was added.
    pub fn new(matrix: CMatrix, frequency: f64, noise_power: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::invalid("noise covariance must be a non-empty square matrix"));
        }
        if !(noise_power.is_finite() && noise_power > 0.0) {
            return Err(Error::invalid(format!("noise power must be positive, got {noise_power}")));
        }
        let mut matrix = hermitian_part(&matrix);
        for i in 0..matrix.nrows() {
            matrix[(i, i)].im = 0.0;
        }
        check_psd(&matrix)?;
        Ok(Self {
            matrix,
            frequency,
            noise_power,
            with_interference: false,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    /// Per-microphone noise power of the underlying field (sigma^2).
    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Set once interference has been added; the diagonal then exceeds sigma^2.
    pub fn has_interference(&self) -> bool {
        self.with_interference
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix)
            .expect("validated covariance is square and finite")
            .values
    }
}

fn check_psd(matrix: &CMatrix) -> Result<()> {
    let values = hermitian_eigen(matrix)?.values;
    let max = values[0];
    let min = values[values.len() - 1];
    if min < -PSD_TOLERANCE * max.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateCovariance { min_eigenvalue: min });
    }
    Ok(())
}

fn check_power(noise_power: f64) -> Result<()> {
    if !(noise_power.is_finite() && noise_power > 0.0) {
        return Err(Error::invalid(format!("noise power must be positive, got {noise_power}")));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::invalid(format!("epsilon must be non-negative, got {epsilon}")));
    }
    Ok(())
}

/// Spatially white noise, `sigma^2 I`.
pub fn covariance_incoherent(mic_count: usize, noise_power: f64, frequency: f64) -> Result<NoiseCovariance> {
    check_power(noise_power)?;
    if mic_count == 0 {
        return Err(Error::invalid("microphone count must be at least 1"));
    }
    NoiseCovariance::new(
        CMatrix::from_diagonal_element(mic_count, mic_count, Complex64::new(noise_power, 0.0)),
        frequency,
        noise_power,
    )
}

fn coherence_covariance(
    distances: &DistanceMatrix,
    frequency: f64,
    noise_power: f64,
    epsilon: f64,
    speed_of_sound: f64,
    kernel: fn(f64) -> f64,
) -> Result<NoiseCovariance> {
    check_power(noise_power)?;
    check_epsilon(epsilon)?;
    if !(frequency.is_finite() && frequency >= 0.0) {
        return Err(Error::invalid(format!("frequency must be non-negative, got {frequency}")));
    }
    let wavenumber = TAU * frequency / speed_of_sound;
    let n = distances.len();
    let matrix = CMatrix::from_fn(n, n, |i, j| {
        let value = if i == j {
            noise_power
        } else {
            noise_power * kernel(wavenumber * distances.get(i, j)) / (1.0 + epsilon)
        };
        Complex64::new(value, 0.0)
    });
    NoiseCovariance::new(matrix, frequency, noise_power)
}

/// Spherically isotropic diffuse noise: off-diagonal `sigma^2 sinc(k l) / (1 + eps)`.
pub fn covariance_spherical_diffuse(
    distances: &DistanceMatrix,
    frequency: f64,
    noise_power: f64,
    epsilon: f64,
    speed_of_sound: f64,
) -> Result<NoiseCovariance> {
    coherence_covariance(distances, frequency, noise_power, epsilon, speed_of_sound, sinc)
}

/// Cylindrically isotropic diffuse noise: off-diagonal `sigma^2 J0(k l) / (1 + eps)`.
///
/// Assumes the microphones lie in a plane normal to the cylinder axis.
pub fn covariance_cylindrical_diffuse(
    distances: &DistanceMatrix,
    frequency: f64,
    noise_power: f64,
    epsilon: f64,
    speed_of_sound: f64,
) -> Result<NoiseCovariance> {
    coherence_covariance(distances, frequency, noise_power, epsilon, speed_of_sound, bessel_j0)
}

/// Noise power per unit solid angle, sampled on an (azimuth, polar) grid,
/// optionally at several frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularDensity {
    frequencies: Vec<f64>,
    azimuths: Vec<f64>,
    polars: Vec<f64>,
    /// Indexed `[(fi * n_az + ai) * n_pol + pi]`.
    samples: Vec<f64>,
}

impl AngularDensity {
    /// Azimuths must start at 0 and stay below 2pi (interpolation wraps
    /// around); polars must run from 0 to pi inclusive.
    pub fn new(frequencies: Vec<f64>, azimuths: Vec<f64>, polars: Vec<f64>, samples: Vec<f64>) -> Result<Self> {
        for (name, grid) in [("frequency", &frequencies), ("azimuth", &azimuths), ("polar", &polars)] {
            if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!(
                    "density {name} grid must be non-empty, finite and strictly ascending"
                )));
            }
        }
        if azimuths[0] != 0.0 || *azimuths.last().unwrap() >= TAU {
            return Err(Error::invalid("density azimuth grid must start at 0 and stay below 2pi"));
        }
        if polars.len() < 2 || polars[0] != 0.0 || (*polars.last().unwrap() - PI).abs() > 1e-12 {
            return Err(Error::invalid("density polar grid must span [0, pi]"));
        }
        let expected = frequencies.len() * azimuths.len() * polars.len();
        if samples.len() != expected {
            return Err(Error::invalid(format!(
                "density has {} samples, grid needs {expected}",
                samples.len()
            )));
        }
        if let Some(bad) = samples.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::invalid(format!("density samples must be non-negative, found {bad}")));
        }
        Ok(Self {
            frequencies,
            azimuths,
            polars,
            samples,
        })
    }

    /// Direction-independent density, valid at every frequency.
    pub fn isotropic(power_per_steradian: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![0.0], vec![0.0, PI], vec![power_per_steradian; 2])
    }

    /// Samples `f(azimuth, polar)` on a frequency-independent grid.
    pub fn from_fn(azimuths: Vec<f64>, polars: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let samples = azimuths
            .iter()
            .flat_map(|&a| polars.iter().map(move |&p| (a, p)))
            .map(|(a, p)| f(a, p))
            .collect();
        Self::new(vec![0.0], azimuths, polars, samples)
    }

    pub fn grid_shape(&self) -> (usize, usize, usize) {
        (self.frequencies.len(), self.azimuths.len(), self.polars.len())
    }

    /// Density at an arbitrary direction; bilinear in angle with periodic
    /// azimuth, linear in frequency. A single-frequency density applies to
    /// every frequency.
    pub fn value(&self, frequency: f64, azimuth: f64, polar: f64) -> Result<f64> {
        let fw = if self.frequencies.len() == 1 {
            vec![(0, 1.0)]
        } else {
            bracket("frequency", &self.frequencies, frequency)?
        };
        let pw = bracket("polar", &self.polars, polar.clamp(0.0, PI))?;
        let aw = self.azimuth_stencil(azimuth.rem_euclid(TAU));
        let mut total = 0.0;
        for &(fi, wf) in &fw {
            for &(ai, wa) in &aw {
                for &(pi, wp) in &pw {
                    total += wf * wa * wp * self.samples[(fi * self.azimuths.len() + ai) * self.polars.len() + pi];
                }
            }
        }
        Ok(total)
    }

    fn azimuth_stencil(&self, azimuth: f64) -> Vec<(usize, f64)> {
        let n = self.azimuths.len();
        if n == 1 {
            return vec![(0, 1.0)];
        }
        let upper = self.azimuths.partition_point(|&a| a <= azimuth);
        let lower = upper - 1;
        let (hi_index, hi_value) = if upper == n { (0, TAU) } else { (upper, self.azimuths[upper]) };
        let t = (azimuth - self.azimuths[lower]) / (hi_value - self.azimuths[lower]);
        if t == 0.0 {
            vec![(lower, 1.0)]
        } else {
            vec![(lower, 1.0 - t), (hi_index, t)]
        }
    }

    /// Parses CSV with header `freq_hz,azimuth_rad,polar_rad,power`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let grid = read_grid_csv(text, &["freq_hz", "azimuth_rad", "polar_rad", "power"])?;
        let axes = [grid.axis(0), grid.axis(1), grid.axis(2)];
        let index_of = |axis: &Vec<f64>, v: f64| axis.binary_search_by(|x| x.total_cmp(&v)).expect("value on axis");
        let total = axes[0].len() * axes[1].len() * axes[2].len();
        let mut samples = vec![None; total];
        for row in &grid.rows {
            let slot = (index_of(&axes[0], row.key[0]) * axes[1].len() + index_of(&axes[1], row.key[1])) * axes[2].len()
                + index_of(&axes[2], row.key[2]);
            if samples[slot].is_some() {
                return Err(Error::Parse {
                    line: row.line,
                    message: "duplicate grid node".into(),
                });
            }
            if row.values[0] < 0.0 {
                return Err(Error::Parse {
                    line: row.line,
                    message: "power must be non-negative".into(),
                });
            }
            samples[slot] = Some(row.values[0]);
        }
        if samples.iter().any(Option::is_none) {
            return Err(Error::Parse {
                line: grid.last_line,
                message: format!(
                    "grid is incomplete: {} of {total} nodes present",
                    samples.iter().filter(|s| s.is_some()).count()
                ),
            });
        }
        let [frequencies, azimuths, polars] = axes;
        Self::new(frequencies, azimuths, polars, samples.into_iter().map(Option::unwrap).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,azimuth_rad,polar_rad,power\n");
        for (fi, f) in self.frequencies.iter().enumerate() {
            for (ai, a) in self.azimuths.iter().enumerate() {
                for (pi, p) in self.polars.iter().enumerate() {
                    let v = self.samples[(fi * self.azimuths.len() + ai) * self.polars.len() + pi];
                    out.push_str(&format!("{f},{a},{p},{v}\n"));
                }
            }
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Numerical integration of `d_m d_n' sigma_w^2 sin(polar)` over the sphere.
///
/// Trapezoid rule on a uniform product grid: `n_azimuth` periodic azimuth
/// nodes and `n_polar` polar intervals (endpoints included).
pub fn covariance_from_angular_density(
    geometry: &ArrayGeometry,
    frequency: f64,
    density: &AngularDensity,
    speed_of_sound: f64,
    resolution: (usize, usize),
) -> Result<CMatrix> {
    let (n_az, n_pol) = resolution;
    if n_az < 8 || n_pol < 4 {
        return Err(Error::invalid(format!(
            "quadrature resolution must be at least (8, 4), got ({n_az}, {n_pol})"
        )));
    }
    let m = geometry.len();
    let mut gamma = CMatrix::zeros(m, m);
    let h_az = TAU / n_az as f64;
    let h_pol = PI / n_pol as f64;
    for i in 0..=n_pol {
        let polar = (i as f64 * h_pol).min(PI);
        let end_weight = if i == 0 || i == n_pol { 0.5 } else { 1.0 };
        let w_pol = end_weight * h_pol * polar.sin();
        if w_pol == 0.0 {
            continue;
        }
        for j in 0..n_az {
            let azimuth = j as f64 * h_az;
            let power = density.value(frequency, azimuth, polar)?;
            if power == 0.0 {
                continue;
            }
            let dir = Direction::new(azimuth, polar)?;
            let d = steering_far_field(geometry, frequency, dir, speed_of_sound).entries;
            gamma += (&d * d.adjoint()) * Complex64::new(power * w_pol * h_az, 0.0);
        }
    }
    Ok(hermitian_part(&gamma))
}

/// Point interferer with linear power.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfererSpec {
    pub source: SourceSpec,
    pub power: f64,
}

impl InterfererSpec {
    pub fn new(source: SourceSpec, power: f64) -> Result<Self> {
        if !(power.is_finite() && power >= 0.0) {
            return Err(Error::invalid(format!("interferer power must be non-negative, got {power}")));
        }
        Ok(Self { source, power })
    }
}

/// `Gamma + power * d_I d_I'` at the covariance frequency.
pub fn add_interference(
    base: &NoiseCovariance,
    interferer: &InterfererSpec,
    geometry: &ArrayGeometry,
    speed_of_sound: f64,
) -> Result<NoiseCovariance> {
    if geometry.len() != base.dim() {
        return Err(Error::invalid(format!(
            "geometry has {} microphones, covariance is {}x{}",
            geometry.len(),
            base.dim(),
            base.dim()
        )));
    }
    if interferer.power == 0.0 {
        let mut out = base.clone();
        out.with_interference = true;
        return Ok(out);
    }
    let d = steering(geometry, base.frequency, &interferer.source, speed_of_sound)?.entries;
    let matrix = base.matrix() + (&d * d.adjoint()) * Complex64::new(interferer.power, 0.0);
    let mut out = NoiseCovariance::new(matrix, base.frequency, base.noise_power)?;
    out.with_interference = true;
    Ok(out)
}

/// Spatial structure of the background noise.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseField {
    Incoherent,
    SphericalDiffuse,
    CylindricalDiffuse,
    /// Custom field integrated from an angular power density.
    Density {
        density: AngularDensity,
        resolution: (usize, usize),
    },
}

/// Noise field, its power, incoherent share and point interferers.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub field: NoiseField,
    /// Per-microphone power sigma^2 (for `Density`, the integrated density
    /// sets the power and this value is ignored).
    pub noise_power: f64,
    /// Incoherent share; off-diagonal coherence is divided by `1 + epsilon`.
    pub epsilon: f64,
    pub interferers: Vec<InterfererSpec>,
}

impl NoiseModel {
    pub fn incoherent(noise_power: f64) -> Self {
        Self {
            field: NoiseField::Incoherent,
            noise_power,
            epsilon: 0.0,
            interferers: Vec::new(),
        }
    }

    pub fn spherical(noise_power: f64, epsilon: f64) -> Self {
        Self {
            field: NoiseField::SphericalDiffuse,
            noise_power,
            epsilon,
            interferers: Vec::new(),
        }
    }

    pub fn cylindrical(noise_power: f64, epsilon: f64) -> Self {
        Self {
            field: NoiseField::CylindricalDiffuse,
            noise_power,
            epsilon,
            interferers: Vec::new(),
        }
    }

    pub fn density(density: AngularDensity, resolution: (usize, usize), epsilon: f64) -> Self {
        Self {
            field: NoiseField::Density { density, resolution },
            noise_power: 1.0,
            epsilon,
            interferers: Vec::new(),
        }
    }

    pub fn with_interferer(mut self, interferer: InterfererSpec) -> Self {
        self.interferers.push(interferer);
        self
    }

    /// Short identifier used in output metadata.
    pub fn id(&self) -> String {
        let base = match &self.field {
            NoiseField::Incoherent => "incoherent".to_string(),
            NoiseField::SphericalDiffuse => format!("spherical(eps={})", self.epsilon),
            NoiseField::CylindricalDiffuse => format!("cylindrical(eps={})", self.epsilon),
            NoiseField::Density { resolution, .. } => {
                format!("density(eps={},res={}x{})", self.epsilon, resolution.0, resolution.1)
            }
        };
        if self.interferers.is_empty() {
            base
        } else {
            format!("{base}+{}interferer", self.interferers.len())
        }
    }

    /// Covariance for `geometry` at `frequency`, interferers included.
    pub fn covariance(&self, geometry: &ArrayGeometry, frequency: f64, speed_of_sound: f64) -> Result<NoiseCovariance> {
        let base = match &self.field {
            NoiseField::Incoherent => covariance_incoherent(geometry.len(), self.noise_power, frequency)?,
            NoiseField::SphericalDiffuse => covariance_spherical_diffuse(
                &geometry.pairwise_distances(),
                frequency,
                self.noise_power,
                self.epsilon,
                speed_of_sound,
            )?,
            NoiseField::CylindricalDiffuse => covariance_cylindrical_diffuse(
                &geometry.pairwise_distances(),
                frequency,
                self.noise_power,
                self.epsilon,
                speed_of_sound,
            )?,
            NoiseField::Density { density, resolution } => {
                check_epsilon(self.epsilon)?;
                let mut gamma =
                    covariance_from_angular_density(geometry, frequency, density, speed_of_sound, *resolution)?;
                let m = geometry.len();
                let power = (0..m).map(|i| gamma[(i, i)].re).sum::<f64>() / m as f64;
                if !(power > 0.0) {
                    return Err(Error::invalid("angular density integrates to zero noise power"));
                }
                for i in 0..m {
                    for j in 0..m {
                        if i != j {
                            gamma[(i, j)] /= 1.0 + self.epsilon;
                        }
                    }
                }
                NoiseCovariance::new(gamma, frequency, power)?
            }
        };
        self.interferers
            .iter()
            .try_fold(base, |acc, interferer| add_interference(&acc, interferer, geometry, speed_of_sound))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_circular, build_linear};

    const C: f64 = 343.0;

    #[test]
    fn incoherent_is_scaled_identity() {
        let g = covariance_incoherent(3, 1.0, 1000.0).unwrap();
        assert_eq!(g.matrix(), &CMatrix::identity(3, 3));
        let g = covariance_incoherent(4, 2.5, 0.0).unwrap();
        assert!(g.eigenvalues().iter().all(|&v| (v - 2.5).abs() < 1e-15));
        assert!(covariance_incoherent(3, 0.0, 0.0).is_err());
        assert!(covariance_incoherent(3, -1.0, 0.0).is_err());
    }

    #[test]
    fn spherical_dc_is_all_sigma() {
        let d = build_linear(3, 0.03).unwrap().pairwise_distances();
        let g = covariance_spherical_diffuse(&d, 0.0, 2.0, 0.0, C).unwrap();
        assert!(g.matrix().iter().all(|z| *z == Complex64::new(2.0, 0.0)));
    }

    #[test]
    fn spherical_coherence_at_one_khz() {
        let d = build_linear(2, 0.03).unwrap().pairwise_distances();
        let g = covariance_spherical_diffuse(&d, 1000.0, 1.0, 0.0, C).unwrap();
        let x = TAU * 1000.0 * 0.03 / C;
        assert!((g.matrix()[(0, 1)].re - x.sin() / x).abs() < 1e-15);
        assert!((g.matrix()[(0, 1)].re - 0.9505).abs() < 1e-4);
    }

    #[test]
    fn spherical_first_zero() {
        let d = build_linear(2, 0.03).unwrap().pairwise_distances();
        let f = C / (2.0 * 0.03);
        assert!((f - 5716.67).abs() < 0.01);
        let g = covariance_spherical_diffuse(&d, f, 1.0, 0.0, C).unwrap();
        assert!(g.matrix()[(0, 1)].re.abs() < 1e-15);
    }

    #[test]
    fn epsilon_scales_only_off_diagonal() {
        let d = build_linear(3, 0.03).unwrap().pairwise_distances();
        let a = covariance_spherical_diffuse(&d, 700.0, 1.0, 0.0, C).unwrap();
        let b = covariance_spherical_diffuse(&d, 700.0, 1.0, 0.25, C).unwrap();
        assert_eq!(a.matrix()[(1, 1)], b.matrix()[(1, 1)]);
        assert!((a.matrix()[(0, 2)].re / 1.25 - b.matrix()[(0, 2)].re).abs() < 1e-15);
        assert!(covariance_spherical_diffuse(&d, 700.0, 1.0, -0.1, C).is_err());
    }

    #[test]
    fn cylindrical_dc_and_kernel() {
        let d = build_circular(4, 0.05).unwrap().pairwise_distances();
        let g = covariance_cylindrical_diffuse(&d, 0.0, 1.0, 0.0, C).unwrap();
        assert!(g.matrix().iter().all(|z| (z.re - 1.0).abs() < 1e-15));
        let g = covariance_cylindrical_diffuse(&d, 2000.0, 1.0, 0.1, C).unwrap();
        let x = TAU * 2000.0 * d.get(0, 1) / C;
        assert!((g.matrix()[(0, 1)].re - bessel_j0(x) / 1.1).abs() < 1e-15);
    }

    #[test]
    fn zero_density_gives_zero_matrix() {
        let g = build_linear(3, 0.03).unwrap();
        let density = AngularDensity::isotropic(0.0).unwrap();
        let gamma = covariance_from_angular_density(&g, 1000.0, &density, C, (16, 8)).unwrap();
        assert!(gamma.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        assert!(covariance_from_angular_density(&g, 1000.0, &density, C, (4, 8)).is_err());
    }

    #[test]
    fn density_rejects_negative_samples() {
        assert!(AngularDensity::isotropic(-1.0).is_err());
        let text = "freq_hz,azimuth_rad,polar_rad,power\n0,0,0,1\n0,0,3.141592653589793,-1\n";
        assert!(AngularDensity::from_csv(text).is_err());
    }

    #[test]
    fn density_csv_round_trip() {
        let azimuths: Vec<f64> = (0..8).map(|i| i as f64 * TAU / 8.0).collect();
        let polars: Vec<f64> = (0..=4).map(|i| i as f64 * PI / 4.0).collect();
        let density = AngularDensity::from_fn(azimuths, polars, |a, p| 1.0 + a.cos() * p.sin()).unwrap();
        let back = AngularDensity::from_csv(&density.to_csv()).unwrap();
        assert_eq!(back, density);
    }

    #[test]
    fn density_azimuth_interpolation_wraps() {
        let azimuths = vec![0.0, PI];
        let density = AngularDensity::from_fn(azimuths, vec![0.0, PI], |a, _| if a == 0.0 { 2.0 } else { 0.0 }).unwrap();
        assert!((density.value(0.0, 1.5 * PI, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((density.value(0.0, 0.5 * PI, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(density.value(0.0, 0.0, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn interference_power_zero_is_identity() {
        let g = build_linear(3, 0.03).unwrap();
        let base = covariance_spherical_diffuse(&g.pairwise_distances(), 1000.0, 1.0, 0.01, C).unwrap();
        let intf = InterfererSpec::new(SourceSpec::FarField(Direction::horizontal(1.0)), 0.0).unwrap();
        let out = add_interference(&base, &intf, &g, C).unwrap();
        assert_eq!(out.matrix(), base.matrix());
        assert!(out.has_interference());
    }

    #[test]
    fn interference_trace() {
        let g = build_linear(3, 0.03).unwrap();
        let base = covariance_incoherent(3, 1.0, 1000.0).unwrap();
        let intf = InterfererSpec::new(SourceSpec::FarField(Direction::horizontal(0.3)), 1.0).unwrap();
        let out = add_interference(&base, &intf, &g, C).unwrap();
        assert!((out.matrix().trace().re - 6.0).abs() < 1e-12);
        assert!(InterfererSpec::new(SourceSpec::FarField(Direction::horizontal(0.3)), -1.0).is_err());
    }

    #[test]
    fn model_ids_are_distinct() {
        let ids = [
            NoiseModel::incoherent(1.0).id(),
            NoiseModel::spherical(1.0, 0.01).id(),
            NoiseModel::cylindrical(1.0, 0.01).id(),
        ];
        assert_eq!(ids[0], "incoherent");
        assert_ne!(ids[1], ids[2]);
    }
}
