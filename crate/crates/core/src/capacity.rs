//! Channel capacity of the array viewed as a SIMO link.
//!
//! The noise covariance `Gamma = U S U'` is whitened by `S^{-1/2} U'`, which
//! maps the steering vector `d` to `h = S^{-1/2} U' d` and the noise to unit
//! white noise. With a per-microphone SNR `snr = P / sigma^2` the capacity is
//!
//! ```text
//! C = log2(1 + snr * sigma^2 * |h|^2) = log2(1 + P d' Gamma^{-1} d)
//! ```
//!
//! in bits/s/Hz. Broadband capacity is the spectrally weighted mean of the
//! narrowband values.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::geometry::ArrayGeometry;
use crate::linalg::{hermitian_eigen, CMatrix, CVector};
use crate::noisefield::{NoiseCovariance, NoiseModel};
use crate::wavefield::{steering, total_steering, Direction, ScatteringTable, SourceSpec, SteeringVector};
use crate::{Error, Result};

/// Smallest admissible eigenvalue ratio `min(s) / max(s)` for whitening.
pub const RANK_THRESHOLD: f64 = 1e-12;

/// Eigen-factors of a noise covariance, `Gamma = U diag(s) U'`.
#[derive(Clone, Debug)]
pub struct Whitener {
    u: CMatrix,
    s: Vec<f64>,
    frequency: f64,
    noise_power: f64,
}

impl Whitener {
    pub fn unitary(&self) -> &CMatrix {
        &self.u
    }

    /// Singular values, descending and strictly positive.
    pub fn singular_values(&self) -> &[f64] {
        &self.s
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    /// `S^{-1/2} U' d`.
    pub fn whitened_channel(&self, d: &CVector) -> Result<CVector> {
        if d.len() != self.s.len() {
            return Err(Error::invalid(format!(
                "steering vector has {} entries, covariance is {}x{}",
                d.len(),
                self.s.len(),
                self.s.len()
            )));
        }
        let mut h = self.u.adjoint() * d;
        for (hi, &si) in h.iter_mut().zip(&self.s) {
            *hi /= si.sqrt();
        }
        Ok(h)
    }

    /// `|S^{-1/2} U' d|^2 = d' Gamma^{-1} d`.
    pub fn channel_gain(&self, d: &CVector) -> Result<f64> {
        Ok(self.whitened_channel(d)?.norm_squared())
    }

    /// Capacity in bits/s/Hz for per-microphone SNR `snr_linear`.
    pub fn capacity(&self, d: &SteeringVector, snr_linear: f64) -> Result<CapacityResult> {
        check_snr(snr_linear)?;
        let gain = self.channel_gain(&d.entries)?;
        Ok(CapacityResult {
            value: capacity_from_gain(snr_linear * self.noise_power, gain),
            snr_linear,
            frequency: d.frequency,
            source: d.source,
        })
    }
}

fn capacity_from_gain(power: f64, gain: f64) -> f64 {
    // ln_1p keeps tiny SNRs accurate
    (power * gain).ln_1p() / std::f64::consts::LN_2
}

fn check_snr(snr_linear: f64) -> Result<()> {
    if !(snr_linear.is_finite() && snr_linear >= 0.0) {
        return Err(Error::invalid(format!("SNR must be non-negative, got {snr_linear}")));
    }
    Ok(())
}

/// Eigendecomposition of a full-rank noise covariance.
pub fn whiten(gamma: &NoiseCovariance) -> Result<Whitener> {
    let eig = hermitian_eigen(gamma.matrix())?;
    let max = eig.values[0];
    if !(max > 0.0) {
        return Err(Error::SingularCovariance {
            index: 0,
            ratio: 0.0,
            threshold: RANK_THRESHOLD,
        });
    }
    if let Some((index, &value)) = eig
        .values
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v >= RANK_THRESHOLD * max))
    {
        return Err(Error::SingularCovariance {
            index,
            ratio: value / max,
            threshold: RANK_THRESHOLD,
        });
    }
    Ok(Whitener {
        u: eig.vectors,
        s: eig.values,
        frequency: gamma.frequency(),
        noise_power: gamma.noise_power(),
    })
}

/// `S^{-1/2} U' d` for a precomputed whitener.
pub fn whitened_channel(whitener: &Whitener, d: &SteeringVector) -> Result<CVector> {
    whitener.whitened_channel(&d.entries)
}

/// Narrowband capacity in bits/s/Hz.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapacityResult {
    pub value: f64,
    pub snr_linear: f64,
    pub frequency: f64,
    pub source: SourceSpec,
}

/// `log2(1 + snr sigma^2 d' Gamma^{-1} d)`.
pub fn narrowband_capacity(d: &SteeringVector, gamma: &NoiseCovariance, snr_linear: f64) -> Result<CapacityResult> {
    check_snr(snr_linear)?;
    whiten(gamma)?.capacity(d, snr_linear)
}

/// Output MSE of the multichannel Wiener filter, `P / (1 + P d' Gamma^{-1} d)`.
///
/// With `P = snr * sigma^2` this equals `P * 2^(-C)`.
pub fn wiener_mmse(d: &SteeringVector, gamma: &NoiseCovariance, source_power: f64) -> Result<f64> {
    if !(source_power.is_finite() && source_power >= 0.0) {
        return Err(Error::invalid(format!(
            "source power must be non-negative, got {source_power}"
        )));
    }
    let gain = whiten(gamma)?.channel_gain(&d.entries)?;
    Ok(source_power / (1.0 + source_power * gain))
}

/// Frequency grid with non-negative weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralWeights {
    frequencies: Vec<f64>,
    weights: Vec<f64>,
}

impl SpectralWeights {
    /// Frequencies must be strictly ascending and the weights must sum to 1
    /// within 1e-12.
    pub fn new(frequencies: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::check_grid(&frequencies, &weights)?;
        let sum = compensated_sum(weights.iter().copied());
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("spectral weights sum to {sum}, expected 1")));
        }
        Ok(Self { frequencies, weights })
    }

    /// Like [`SpectralWeights::new`] but rescales the weights to sum to 1.
    /// The second value is the original sum.
    pub fn normalized(frequencies: Vec<f64>, weights: Vec<f64>) -> Result<(Self, f64)> {
        Self::check_grid(&frequencies, &weights)?;
        let sum = compensated_sum(weights.iter().copied());
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::invalid(format!("spectral weights sum to {sum}")));
        }
        let weights = if (sum - 1.0).abs() <= 1e-12 {
            weights
        } else {
            weights.into_iter().map(|w| w / sum).collect()
        };
        Ok((Self { frequencies, weights }, sum))
    }

    pub fn uniform(frequencies: Vec<f64>) -> Result<Self> {
        let n = frequencies.len().max(1);
        Ok(Self::normalized(frequencies, vec![1.0 / n as f64; n])?.0)
    }

    pub fn single(frequency: f64) -> Result<Self> {
        Self::new(vec![frequency], vec![1.0])
    }

    fn check_grid(frequencies: &[f64], weights: &[f64]) -> Result<()> {
        if frequencies.is_empty() {
            return Err(Error::invalid("frequency grid is empty"));
        }
        if frequencies.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} frequencies but {} weights",
                frequencies.len(),
                weights.len()
            )));
        }
        if frequencies.iter().any(|f| !f.is_finite()) || frequencies.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("frequency grid must be finite and strictly ascending"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid(format!("weights must be non-negative, found {w}")));
        }
        Ok(())
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.frequencies.iter().copied().zip(self.weights.iter().copied())
    }

    /// Parses CSV with header `freq_hz,weight`; weights are renormalized.
    pub fn from_csv(text: &str) -> Result<(Self, f64)> {
        let grid = crate::wavefield::read_grid_csv(text, &["freq_hz", "weight"])?;
        let mut rows: Vec<(f64, f64, u64)> = grid.rows.iter().map(|r| (r.key[0], r.values[0], r.line)).collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(dup) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Parse {
                line: dup[1].2,
                message: format!("duplicate frequency {}", dup[1].0),
            });
        }
        Self::normalized(rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, f64)> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Neumaier-compensated summation in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Nodes and probability weights of `n`-point Gauss-Hermite quadrature for a
/// standard normal variable, `E[g(Z)] ~ sum w_i g(z_i)`.
///
/// Golub-Welsch: the nodes are eigenvalues of the symmetric tridiagonal
/// Jacobi matrix of the Hermite recurrence, the weights the squared first
/// components of its normalized eigenvectors.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::invalid("quadrature needs at least one point"));
    }
    let mut jacobi = CMatrix::zeros(n, n);
    for k in 1..n {
        let b = Complex64::new((k as f64 / 2.0).sqrt(), 0.0);
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = hermitian_eigen(&jacobi)?;
    // eigenvalues come descending; reverse to ascending nodes
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| (eig.values[j] * std::f64::consts::SQRT_2, eig.vectors[(0, j)].norm_sqr()))
        .collect();
    pairs.reverse();
    // the spectrum is symmetric; enforce it exactly
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let node = 0.5 * (pairs[j].0 - pairs[i].0);
        let weight = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-node, weight);
        pairs[j] = (node, weight);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total: f64 = compensated_sum(pairs.iter().map(|p| p.1));
    Ok((
        pairs.iter().map(|p| p.0).collect(),
        pairs.iter().map(|p| p.1 / total).collect(),
    ))
}

/// Quantity on the abscissa of a [`CapacityMap`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanAxis {
    Azimuth,
    Frequency,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::Azimuth => "azimuth_rad",
            ScanAxis::Frequency => "freq_hz",
        }
    }
}

/// Capacity sampled over azimuth or frequency, with provenance metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityMap {
    pub axis: ScanAxis,
    pub axis_values: Vec<f64>,
    pub values: Vec<f64>,
    /// Ordered `key=value` metadata pairs.
    pub metadata: Vec<(String, String)>,
}

impl CapacityMap {
    pub fn new(axis: ScanAxis, axis_values: Vec<f64>, values: Vec<f64>, metadata: Vec<(String, String)>) -> Result<Self> {
        if axis_values.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} axis values but {} capacities",
                axis_values.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("capacity map contains non-finite value {v}")));
        }
        Ok(Self {
            axis,
            axis_values,
            values,
            metadata,
        })
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# axis={}", self.axis.name()).unwrap();
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}").unwrap();
        }
        out.push_str("axis_value,capacity_bits\n");
        for (a, v) in self.axis_values.iter().zip(&self.values) {
            writeln!(out, "{a},{v}").unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut axis = None;
        let mut metadata = Vec::new();
        let mut axis_values = Vec::new();
        let mut values = Vec::new();
        let mut header_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let (k, v) = comment.trim().split_once('=').ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "metadata must be `# key=value`".into(),
                })?;
                if k == "axis" {
                    axis = Some(match v {
                        "azimuth_rad" => ScanAxis::Azimuth,
                        "freq_hz" => ScanAxis::Frequency,
                        other => {
                            return Err(Error::Parse {
                                line: line_no,
                                message: format!("unknown axis `{other}`"),
                            })
                        }
                    });
                } else {
                    metadata.push((k.to_string(), v.to_string()));
                }
                continue;
            }
            if !header_seen {
                if line != "axis_value,capacity_bits" {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected header `axis_value,capacity_bits`, found `{line}`"),
                    });
                }
                header_seen = true;
                continue;
            }
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("`{s}` is not a number"),
                })
            };
            let (a, v) = line.split_once(',').ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected two fields".into(),
            })?;
            axis_values.push(parse(a)?);
            values.push(parse(v)?);
        }
        let axis = axis.ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing `# axis=` metadata".into(),
        })?;
        Self::new(axis, axis_values, values, metadata)
    }
}

/// An array in a noise environment: everything capacity depends on except
/// the source and the SNR.
#[derive(Clone, Debug)]
pub struct ArrayChannel {
    pub geometry: ArrayGeometry,
    pub noise: NoiseModel,
    pub speed_of_sound: f64,
    /// Tabulated scattered field added to every steering vector.
    pub scattering: Option<ScatteringTable>,
    /// Identifier written into scan metadata.
    pub geometry_id: String,
}

impl ArrayChannel {
    pub fn new(geometry: ArrayGeometry, noise: NoiseModel, speed_of_sound: f64) -> Result<Self> {
        if !(speed_of_sound.is_finite() && speed_of_sound > 0.0) {
            return Err(Error::invalid(format!(
                "speed of sound must be positive, got {speed_of_sound}"
            )));
        }
        Ok(Self {
            geometry,
            noise,
            speed_of_sound,
            scattering: None,
            geometry_id: "custom".into(),
        })
    }

    pub fn with_scattering(mut self, table: ScatteringTable) -> Self {
        self.scattering = Some(table);
        self
    }

    pub fn with_geometry_id(mut self, id: impl Into<String>) -> Self {
        self.geometry_id = id.into();
        self
    }

    pub fn covariance(&self, frequency: f64) -> Result<NoiseCovariance> {
        self.noise
            .covariance(&self.geometry, frequency, self.speed_of_sound)
            .map_err(|e| e.at_frequency(frequency))
    }

    pub fn whitener(&self, frequency: f64) -> Result<Whitener> {
        whiten(&self.covariance(frequency)?).map_err(|e| e.at_frequency(frequency))
    }

    /// Steering vector including the scattered field when a table is set.
    pub fn steering(&self, frequency: f64, source: &SourceSpec) -> Result<SteeringVector> {
        let incident = steering(&self.geometry, frequency, source, self.speed_of_sound)?;
        match &self.scattering {
            Some(table) => total_steering(&incident, table),
            None => Ok(incident),
        }
    }

    pub fn capacity(&self, frequency: f64, source: &SourceSpec, snr_linear: f64) -> Result<CapacityResult> {
        let whitener = self.whitener(frequency)?;
        let d = self.steering(frequency, source).map_err(|e| e.at_frequency(frequency))?;
        whitener.capacity(&d, snr_linear).map_err(|e| e.at_frequency(frequency))
    }

    pub fn mmse(&self, frequency: f64, source: &SourceSpec, source_power: f64) -> Result<f64> {
        let d = self.steering(frequency, source)?;
        wiener_mmse(&d, &self.covariance(frequency)?, source_power).map_err(|e| e.at_frequency(frequency))
    }

    /// Narrowband capacities `caps[i][j]` at frequency `i` of `weights` for
    /// source `j`. One whitener per frequency.
    fn capacity_table(&self, sources: &[SourceSpec], weights: &SpectralWeights, snr_linear: f64) -> Result<Vec<Vec<f64>>> {
        check_snr(snr_linear)?;
        weights
            .frequencies()
            .iter()
            .map(|&f| {
                let whitener = self.whitener(f)?;
                sources
                    .iter()
                    .map(|s| {
                        let context = |e: Error| e.at_azimuth(s.direction().azimuth()).at_frequency(f);
                        let d = self.steering(f, s).map_err(context)?;
                        Ok(whitener.capacity(&d, snr_linear).map_err(context)?.value)
                    })
                    .collect()
            })
            .collect()
    }

    /// Weighted broadband capacity for several sources at once. Each value
    /// is reduced in ascending frequency order with compensated summation.
    pub fn broadband_many(&self, sources: &[SourceSpec], weights: &SpectralWeights, snr_linear: f64) -> Result<Vec<f64>> {
        let caps = self.capacity_table(sources, weights, snr_linear)?;
        Ok((0..sources.len())
            .map(|j| compensated_sum(weights.weights().iter().zip(&caps).map(|(w, row)| w * row[j])))
            .collect())
    }

    /// `sum_i w_i C(f_i, source)`.
    pub fn broadband_capacity(&self, source: &SourceSpec, weights: &SpectralWeights, snr_linear: f64) -> Result<f64> {
        Ok(self.broadband_many(std::slice::from_ref(source), weights, snr_linear)?[0])
    }

    /// Expected capacity when the source azimuth is known only up to a
    /// zero-mean Gaussian error with standard deviation `azimuth_std`,
    /// using `points`-point Gauss-Hermite quadrature (odd `points`).
    pub fn expected_capacity_under_position_uncertainty(
        &self,
        nominal: &SourceSpec,
        azimuth_std: f64,
        points: usize,
        weights: &SpectralWeights,
        snr_linear: f64,
    ) -> Result<f64> {
        if !(azimuth_std.is_finite() && azimuth_std >= 0.0) {
            return Err(Error::invalid(format!(
                "azimuth error std must be non-negative, got {azimuth_std}"
            )));
        }
        if points == 0 || points.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "quadrature point count must be odd and positive, got {points}"
            )));
        }
        if azimuth_std == 0.0 {
            return self.broadband_capacity(nominal, weights, snr_linear);
        }
        let sources = self.uncertainty_sources(nominal, azimuth_std, points)?;
        let (_, probs) = gauss_hermite(points)?;
        let caps = self.broadband_many(&sources, weights, snr_linear)?;
        Ok(compensated_sum(probs.iter().zip(&caps).map(|(p, c)| p * c)))
    }

    /// Sources at the Gauss-Hermite azimuth offsets around `nominal`.
    pub fn uncertainty_sources(&self, nominal: &SourceSpec, azimuth_std: f64, points: usize) -> Result<Vec<SourceSpec>> {
        let (nodes, _) = gauss_hermite(points)?;
        let dir = nominal.direction();
        nodes
            .iter()
            .map(|z| Ok(nominal.with_direction(Direction::new(dir.azimuth() + azimuth_std * z, dir.polar())?)))
            .collect()
    }

    fn base_metadata(&self, snr_linear: f64) -> Vec<(String, String)> {
        vec![
            ("geometry".into(), self.geometry_id.clone()),
            ("noise".into(), self.noise.id()),
            ("snr_db".into(), format!("{}", 10.0 * snr_linear.log10())),
            ("speed_of_sound".into(), format!("{}", self.speed_of_sound)),
        ]
    }

    /// Narrowband capacity over an azimuth grid at fixed polar angle.
    /// `range` selects a near-field source at that distance.
    pub fn azimuth_scan(
        &self,
        frequency: f64,
        polar: f64,
        azimuths: &[f64],
        snr_linear: f64,
        range: Option<f64>,
    ) -> Result<CapacityMap> {
        let weights = SpectralWeights::single(frequency)?;
        let mut map = self.broadband_azimuth_scan(&weights, polar, azimuths, snr_linear, range)?;
        map.metadata.push(("freq_hz".into(), format!("{frequency}")));
        Ok(map)
    }

    /// Broadband capacity over an azimuth grid.
    pub fn broadband_azimuth_scan(
        &self,
        weights: &SpectralWeights,
        polar: f64,
        azimuths: &[f64],
        snr_linear: f64,
        range: Option<f64>,
    ) -> Result<CapacityMap> {
        if azimuths.is_empty() {
            return Err(Error::invalid("azimuth grid is empty"));
        }
        let sources = azimuths
            .iter()
            .map(|&a| {
                let direction = Direction::new(a, polar)?;
                let source = match range {
                    Some(range) => SourceSpec::NearField { range, direction },
                    None => SourceSpec::FarField(direction),
                };
                source.validate_for(&self.geometry)?;
                Ok(source)
            })
            .collect::<Result<Vec<_>>>()?;
        let values = self.broadband_many(&sources, weights, snr_linear)?;
        let mut metadata = self.base_metadata(snr_linear);
        metadata.push(("polar_rad".into(), format!("{polar}")));
        if let Some(r) = range {
            metadata.push(("range_m".into(), format!("{r}")));
        }
        if weights.frequencies().len() > 1 {
            metadata.push((
                "band_hz".into(),
                format!(
                    "{}..{}",
                    weights.frequencies()[0],
                    weights.frequencies()[weights.frequencies().len() - 1]
                ),
            ));
        }
        CapacityMap::new(ScanAxis::Azimuth, azimuths.to_vec(), values, metadata)
    }

    /// Narrowband capacity over a frequency grid for one source.
    pub fn frequency_scan(&self, source: &SourceSpec, frequencies: &[f64], snr_linear: f64) -> Result<CapacityMap> {
        if frequencies.is_empty() {
            return Err(Error::invalid("frequency grid is empty"));
        }
        source.validate_for(&self.geometry)?;
        let values = frequencies
            .iter()
            .map(|&f| self.capacity(f, source, snr_linear).map(|c| c.value))
            .collect::<Result<Vec<_>>>()?;
        let mut metadata = self.base_metadata(snr_linear);
        let dir = source.direction();
        metadata.push(("azimuth_rad".into(), format!("{}", dir.azimuth())));
        metadata.push(("polar_rad".into(), format!("{}", dir.polar())));
        if let SourceSpec::NearField { range, .. } = source {
            metadata.push(("range_m".into(), format!("{range}")));
        }
        CapacityMap::new(ScanAxis::Frequency, frequencies.to_vec(), values, metadata)
    }
}
