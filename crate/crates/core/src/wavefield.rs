//! Steering vectors for plane waves and point sources.
//!
//! Angles follow the physics convention: `azimuth` is measured in the x-y
//! plane from +x, `polar` from the +z axis, so `polar = pi/2` is the
//! horizontal plane. The unit vector `u` points from the array toward the
//! source, and a microphone at `p` receives a plane wave with delay
//! `tau = -(p . u) / c` relative to the origin.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::{PI, TAU};
use std::path::Path;

use num_complex::Complex64;

use crate::geometry::{ArrayGeometry, Position};
use crate::linalg::CVector;
use crate::{Error, Result};

/// Azimuth in `[0, 2pi)` and polar angle in `[0, pi]`, radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    azimuth: f64,
    polar: f64,
}

impl Direction {
    /// Azimuth is wrapped into `[0, 2pi)`; polar must lie in `[0, pi]`.
    pub fn new(azimuth: f64, polar: f64) -> Result<Self> {
        if !azimuth.is_finite() {
            return Err(Error::invalid(format!("azimuth must be finite, got {azimuth}")));
        }
        if !(0.0..=PI).contains(&polar) {
            return Err(Error::invalid(format!("polar angle {polar} outside [0, pi]")));
        }
        let mut azimuth = azimuth.rem_euclid(TAU);
        if azimuth >= TAU {
            azimuth = 0.0;
        }
        Ok(Self { azimuth, polar })
    }

    /// Direction in the horizontal plane.
    pub fn horizontal(azimuth: f64) -> Self {
        Self::new(azimuth, PI / 2.0).expect("finite azimuth")
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn polar(&self) -> f64 {
        self.polar
    }

    pub fn unit_vector(&self) -> Position {
        let (sa, ca) = self.azimuth.sin_cos();
        let (sp, cp) = self.polar.sin_cos();
        Position::new(ca * sp, sa * sp, cp)
    }
}

/// Desired-source description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SourceSpec {
    FarField(Direction),
    NearField { range: f64, direction: Direction },
}

impl SourceSpec {
    pub fn direction(&self) -> Direction {
        match *self {
            SourceSpec::FarField(direction) | SourceSpec::NearField { direction, .. } => direction,
        }
    }

    /// Same kind of source pointing in another direction.
    pub fn with_direction(&self, direction: Direction) -> Self {
        match *self {
            SourceSpec::FarField(_) => SourceSpec::FarField(direction),
            SourceSpec::NearField { range, .. } => SourceSpec::NearField { range, direction },
        }
    }

    /// Checks the near-field range against the array extent.
    pub fn validate_for(&self, geometry: &ArrayGeometry) -> Result<()> {
        if let SourceSpec::NearField { range, .. } = *self {
            let extent = geometry.max_radius();
            if !(range.is_finite() && range > 0.0 && range > extent) {
                return Err(Error::invalid(format!(
                    "near-field range {range} m must exceed the array extent {extent} m"
                )));
            }
        }
        Ok(())
    }
}

/// Complex per-microphone response at one frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct SteeringVector {
    pub entries: CVector,
    pub frequency: f64,
    pub source: SourceSpec,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_squared(&self) -> f64 {
        self.entries.norm_squared()
    }
}

/// Plane-wave arrival delays relative to the origin, seconds.
pub fn far_field_delays(geometry: &ArrayGeometry, direction: Direction, speed_of_sound: f64) -> Vec<f64> {
    let u = direction.unit_vector();
    geometry
        .positions()
        .iter()
        .map(|p| -p.dot(&u) / speed_of_sound)
        .collect()
}

fn phasor(frequency: f64, delay: f64) -> Complex64 {
    Complex64::from_polar(1.0, -TAU * frequency * delay)
}

/// Unit-modulus plane-wave steering vector `exp(-j 2 pi f tau_k)`.
pub fn steering_far_field(
    geometry: &ArrayGeometry,
    frequency: f64,
    direction: Direction,
    speed_of_sound: f64,
) -> SteeringVector {
    let entries = far_field_delays(geometry, direction, speed_of_sound)
        .into_iter()
        .map(|tau| phasor(frequency, tau))
        .collect::<Vec<_>>();
    SteeringVector {
        entries: CVector::from_vec(entries),
        frequency,
        source: SourceSpec::FarField(direction),
    }
}

/// Spherical-wave steering vector for a point source at `range * u`.
///
/// Gains are `range / r_k` (unit gain at the origin distance) and delays
/// `(r_k - range) / c`, so a microphone at the origin sees `1 + 0j`.
pub fn steering_near_field(
    geometry: &ArrayGeometry,
    frequency: f64,
    range: f64,
    direction: Direction,
    speed_of_sound: f64,
) -> Result<SteeringVector> {
    let source = SourceSpec::NearField { range, direction };
    source.validate_for(geometry)?;
    let point = direction.unit_vector() * range;
    let entries = geometry
        .positions()
        .iter()
        .map(|p| {
            let r_k = (point - p).norm();
            phasor(frequency, (r_k - range) / speed_of_sound) * (range / r_k)
        })
        .collect::<Vec<_>>();
    Ok(SteeringVector {
        entries: CVector::from_vec(entries),
        frequency,
        source,
    })
}

/// Free-field steering vector for either kind of source.
pub fn steering(
    geometry: &ArrayGeometry,
    frequency: f64,
    source: &SourceSpec,
    speed_of_sound: f64,
) -> Result<SteeringVector> {
    match *source {
        SourceSpec::FarField(direction) => Ok(steering_far_field(geometry, frequency, direction, speed_of_sound)),
        SourceSpec::NearField { range, direction } => {
            steering_near_field(geometry, frequency, range, direction, speed_of_sound)
        }
    }
}

/// Incident plus tabulated scattered field, `d = d_inc + d_scat(f, direction)`.
pub fn total_steering(incident: &SteeringVector, table: &ScatteringTable) -> Result<SteeringVector> {
    if incident.len() != table.mic_count() {
        return Err(Error::invalid(format!(
            "steering vector has {} entries, scattering table {} microphones",
            incident.len(),
            table.mic_count()
        )));
    }
    let scattered = table.interpolate(incident.frequency, incident.source.direction())?;
    Ok(SteeringVector {
        entries: &incident.entries + scattered,
        frequency: incident.frequency,
        source: incident.source,
    })
}

/// Scattered-field samples on a complete (frequency, azimuth, polar) grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringTable {
    frequencies: Vec<f64>,
    azimuths: Vec<f64>,
    polars: Vec<f64>,
    mic_count: usize,
    /// Indexed `[((fi * n_az + ai) * n_pol + pi) * mic_count + m]`.
    samples: Vec<Complex64>,
}

impl ScatteringTable {
    pub fn new(
        frequencies: Vec<f64>,
        azimuths: Vec<f64>,
        polars: Vec<f64>,
        mic_count: usize,
        samples: Vec<Complex64>,
    ) -> Result<Self> {
        for (name, grid) in [("frequency", &frequencies), ("azimuth", &azimuths), ("polar", &polars)] {
            if grid.is_empty() {
                return Err(Error::invalid(format!("{name} grid is empty")));
            }
            if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("{name} grid must be finite and strictly ascending")));
            }
        }
        if mic_count == 0 {
            return Err(Error::invalid("scattering table needs at least one microphone"));
        }
        let expected = frequencies.len() * azimuths.len() * polars.len() * mic_count;
        if samples.len() != expected {
            return Err(Error::invalid(format!(
                "scattering table has {} samples, grid needs {expected}",
                samples.len()
            )));
        }
        Ok(Self {
            frequencies,
            azimuths,
            polars,
            mic_count,
            samples,
        })
    }

    /// Table filled from a function of (frequency, azimuth, polar, mic).
    pub fn from_fn(
        frequencies: Vec<f64>,
        azimuths: Vec<f64>,
        polars: Vec<f64>,
        mic_count: usize,
        mut f: impl FnMut(f64, f64, f64, usize) -> Complex64,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(frequencies.len() * azimuths.len() * polars.len() * mic_count);
        for &fr in &frequencies {
            for &az in &azimuths {
                for &po in &polars {
                    for m in 0..mic_count {
                        samples.push(f(fr, az, po, m));
                    }
                }
            }
        }
        Self::new(frequencies, azimuths, polars, mic_count, samples)
    }

    pub fn mic_count(&self) -> usize {
        self.mic_count
    }

    /// Grid sizes as (frequencies, azimuths, polars).
    pub fn grid_shape(&self) -> (usize, usize, usize) {
        (self.frequencies.len(), self.azimuths.len(), self.polars.len())
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn azimuths(&self) -> &[f64] {
        &self.azimuths
    }

    pub fn polars(&self) -> &[f64] {
        &self.polars
    }

    fn index(&self, fi: usize, ai: usize, pi: usize) -> usize {
        ((fi * self.azimuths.len() + ai) * self.polars.len() + pi) * self.mic_count
    }

    /// Stored sample vector at a grid node.
    pub fn node(&self, fi: usize, ai: usize, pi: usize) -> CVector {
        let start = self.index(fi, ai, pi);
        CVector::from_column_slice(&self.samples[start..start + self.mic_count])
    }

    /// Trilinear interpolation in (frequency, azimuth, polar); no extrapolation.
    pub fn interpolate(&self, frequency: f64, direction: Direction) -> Result<CVector> {
        let fw = bracket("frequency", &self.frequencies, frequency)?;
        let aw = bracket("azimuth", &self.azimuths, direction.azimuth())?;
        let pw = bracket("polar", &self.polars, direction.polar())?;
        let mut out = CVector::zeros(self.mic_count);
        for &(fi, wf) in fw.iter() {
            for &(ai, wa) in aw.iter() {
                for &(pi, wp) in pw.iter() {
                    let w = wf * wa * wp;
                    if w == 0.0 {
                        continue;
                    }
                    let start = self.index(fi, ai, pi);
                    for m in 0..self.mic_count {
                        out[m] += self.samples[start + m] * w;
                    }
                }
            }
        }
        Ok(out)
    }

    /// CSV text with header `freq_hz,azimuth_rad,polar_rad,mic_index,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,azimuth_rad,polar_rad,mic_index,re,im\n");
        for (fi, f) in self.frequencies.iter().enumerate() {
            for (ai, a) in self.azimuths.iter().enumerate() {
                for (pi, p) in self.polars.iter().enumerate() {
                    let start = self.index(fi, ai, pi);
                    for m in 0..self.mic_count {
                        let z = self.samples[start + m];
                        out.push_str(&format!("{f},{a},{p},{m},{},{}\n", z.re, z.im));
                    }
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let grid = read_grid_csv(text, &["freq_hz", "azimuth_rad", "polar_rad", "mic_index", "re", "im"])?;
        let mic_indices: BTreeSet<u64> = grid.rows.iter().map(|r| r.key[3].to_bits()).collect();
        let mic_count = mic_indices.len();
        for (m, bits) in mic_indices.iter().enumerate() {
            let value = f64::from_bits(*bits);
            if value != m as f64 {
                return Err(Error::Parse {
                    line: grid.line_of(3, value),
                    message: format!("mic_index values must be 0..{mic_count} without gaps, found {value}"),
                });
            }
        }
        let axes = [
            grid.axis(0),
            grid.axis(1),
            grid.axis(2),
        ];
        let lookup: Vec<HashMap<u64, usize>> = axes
            .iter()
            .map(|axis| axis.iter().enumerate().map(|(i, v)| (v.to_bits(), i)).collect())
            .collect();
        let total = axes[0].len() * axes[1].len() * axes[2].len() * mic_count;
        let mut samples = vec![None; total];
        for row in &grid.rows {
            let fi = lookup[0][&row.key[0].to_bits()];
            let ai = lookup[1][&row.key[1].to_bits()];
            let pi = lookup[2][&row.key[2].to_bits()];
            let m = row.key[3] as usize;
            let slot = ((fi * axes[1].len() + ai) * axes[2].len() + pi) * mic_count + m;
            if samples[slot].is_some() {
                return Err(Error::Parse {
                    line: row.line,
                    message: "duplicate grid node".into(),
                });
            }
            samples[slot] = Some(Complex64::new(row.values[0], row.values[1]));
        }
        if let Some(missing) = samples.iter().position(Option::is_none) {
            let m = missing % mic_count;
            let rest = missing / mic_count;
            let pi = rest % axes[2].len();
            let rest = rest / axes[2].len();
            let ai = rest % axes[1].len();
            let fi = rest / axes[1].len();
            return Err(Error::Parse {
                line: grid.last_line,
                message: format!(
                    "grid is incomplete: no row for freq_hz={}, azimuth_rad={}, polar_rad={}, mic_index={m}",
                    axes[0][fi], axes[1][ai], axes[2][pi]
                ),
            });
        }
        let [frequencies, azimuths, polars] = axes;
        Self::new(
            frequencies,
            azimuths,
            polars,
            mic_count,
            samples.into_iter().map(Option::unwrap).collect(),
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Reads and validates a scattering table file.
pub fn load_scattering_table(path: impl AsRef<Path>) -> Result<ScatteringTable> {
    ScatteringTable::from_csv(&std::fs::read_to_string(path)?)
}

/// Interpolation stencil: up to two (index, weight) pairs.
pub(crate) fn bracket(what: &'static str, grid: &[f64], x: f64) -> Result<Vec<(usize, f64)>> {
    let lo = grid[0];
    let hi = grid[grid.len() - 1];
    if !(x >= lo && x <= hi) {
        return Err(Error::OutOfRange { what, value: x, lo, hi });
    }
    if grid.len() == 1 {
        return Ok(vec![(0, 1.0)]);
    }
    let upper = grid.partition_point(|&g| g <= x).min(grid.len() - 1);
    let lower = upper - 1;
    if x == grid[lower] {
        return Ok(vec![(lower, 1.0)]);
    }
    if x == grid[upper] {
        return Ok(vec![(upper, 1.0)]);
    }
    let t = (x - grid[lower]) / (grid[upper] - grid[lower]);
    Ok(vec![(lower, 1.0 - t), (upper, t)])
}

pub(crate) struct GridRow {
    pub line: u64,
    pub key: Vec<f64>,
    pub values: Vec<f64>,
}

/// Rows of a headered numeric CSV; the first `key_columns` columns address
/// grid nodes and the rest carry data.
pub(crate) struct GridCsv {
    pub rows: Vec<GridRow>,
    pub last_line: u64,
}

impl GridCsv {
    /// Sorted distinct values of key column `col`.
    pub fn axis(&self, col: usize) -> Vec<f64> {
        let set: BTreeSet<u64> = self.rows.iter().map(|r| r.key[col].to_bits()).collect();
        let mut values: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn line_of(&self, col: usize, value: f64) -> u64 {
        self.rows
            .iter()
            .find(|r| r.key[col] == value)
            .map(|r| r.line)
            .unwrap_or(self.last_line)
    }
}

/// Parses a CSV whose header must equal `columns`; the last two columns
/// (or one, for single-valued tables) are data, the rest are grid keys.
pub(crate) fn read_grid_csv(text: &str, columns: &[&str]) -> Result<GridCsv> {
    let data_columns = if columns.last() == Some(&"im") { 2 } else { 1 };
    let key_columns = columns.len() - data_columns;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let found: Vec<&str> = header.iter().collect();
    if found != columns {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`, found `{}`", columns.join(","), found.join(",")),
        });
    }
    let mut rows = Vec::new();
    let mut last_line = 1;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(last_line + 1),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(last_line + 1);
        last_line = line;
        if record.len() != columns.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", columns.len(), record.len()),
            });
        }
        let mut numbers = Vec::with_capacity(columns.len());
        for (field, name) in record.iter().zip(columns) {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {name}: `{field}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("column {name}: value must be finite"),
                });
            }
            numbers.push(value);
        }
        let values = numbers.split_off(key_columns);
        rows.push(GridRow { line, key: numbers, values });
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: last_line,
            message: "table has no data rows".into(),
        });
    }
    Ok(GridCsv { rows, last_line })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_linear;

    const C: f64 = 343.0;

    #[test]
    fn direction_wraps_azimuth_and_checks_polar() {
        let d = Direction::new(-PI / 2.0, 1.0).unwrap();
        assert!((d.azimuth() - 1.5 * PI).abs() < 1e-15);
        assert!(Direction::new(0.0, -0.1).is_err());
        assert!(Direction::new(0.0, PI + 1e-9).is_err());
        assert!(Direction::new(f64::NAN, 1.0).is_err());
        assert_eq!(Direction::new(TAU, 1.0).unwrap().azimuth(), 0.0);
    }

    #[test]
    fn origin_microphone_has_zero_delay() {
        let g = ArrayGeometry::new(vec![Position::zeros()]).unwrap();
        let tau = far_field_delays(&g, Direction::new(1.0, 0.3).unwrap(), C);
        assert_eq!(tau[0], 0.0);
    }

    #[test]
    fn broadside_delays_vanish() {
        let g = build_linear(3, 0.03).unwrap();
        let tau = far_field_delays(&g, Direction::horizontal(PI / 2.0), C);
        assert!(tau.iter().all(|t| t.abs() < 1e-20));
        let d = steering_far_field(&g, 4000.0, Direction::horizontal(PI / 2.0), C);
        for z in d.entries.iter() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn endfire_delays_by_hand() {
        let g = build_linear(3, 0.03).unwrap();
        let tau = far_field_delays(&g, Direction::horizontal(0.0), C);
        assert!((tau[0] - 0.03 / C).abs() < 1e-18);
        assert!(tau[1].abs() < 1e-18);
        assert!((tau[2] + 0.03 / C).abs() < 1e-18);
    }

    #[test]
    fn far_field_phase_by_hand() {
        let g = build_linear(3, 0.03).unwrap();
        let d = steering_far_field(&g, 1000.0, Direction::horizontal(0.0), C);
        let expected = -TAU * 1000.0 * 0.03 / C;
        assert!((d.entries[0].arg() - expected).abs() < 1e-12);
        assert!((expected + 0.5496).abs() < 1e-4);
        let dc = steering_far_field(&g, 0.0, Direction::horizontal(0.7), C);
        assert!(dc.entries.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn near_field_hand_geometry() {
        let g = ArrayGeometry::new(vec![Position::zeros(), Position::new(0.03, 0.0, 0.0)]).unwrap();
        let d = steering_near_field(&g, 1000.0, 1.0, Direction::horizontal(0.0), C).unwrap();
        assert!((d.entries[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((d.entries[1].norm() - 1.0 / 0.97).abs() < 1e-12);
        let phase = -TAU * 1000.0 * (0.97 - 1.0) / C;
        assert!((d.entries[1].arg() - phase).abs() < 1e-12);
    }

    #[test]
    fn near_field_rejects_short_range() {
        let g = build_linear(3, 0.03).unwrap();
        assert!(steering_near_field(&g, 1000.0, 0.03, Direction::horizontal(0.0), C).is_err());
        assert!(steering_near_field(&g, 1000.0, 0.02, Direction::horizontal(0.0), C).is_err());
        assert!(steering_near_field(&g, 1000.0, -1.0, Direction::horizontal(0.0), C).is_err());
    }

    #[test]
    fn near_field_converges_to_far_field() {
        let g = build_linear(3, 0.03).unwrap();
        let dir = Direction::new(0.4, 1.2).unwrap();
        let far = steering_far_field(&g, 1000.0, dir, C);
        let near = steering_near_field(&g, 1000.0, 1e3 * g.max_radius(), dir, C).unwrap();
        for (n, f) in near.entries.iter().zip(far.entries.iter()) {
            let dphase = (n / f).arg();
            assert!(dphase.abs() < 1e-3);
            assert!((n.norm() - 1.0).abs() < 1e-3);
        }
    }

    fn linear_in_f_table() -> ScatteringTable {
        ScatteringTable::from_fn(
            vec![500.0, 1000.0],
            vec![0.0, PI / 2.0, PI, 1.5 * PI],
            vec![PI / 2.0],
            3,
            |f, a, _, m| Complex64::new(f / 1000.0 + m as f64, a),
        )
        .unwrap()
    }

    #[test]
    fn zero_table_leaves_incident_unchanged() {
        let g = build_linear(3, 0.03).unwrap();
        let table = ScatteringTable::from_fn(vec![0.0, 2000.0], vec![0.0, TAU - 0.01], vec![0.0, PI], 3, |_, _, _, _| {
            Complex64::new(0.0, 0.0)
        })
        .unwrap();
        let inc = steering_far_field(&g, 1000.0, Direction::new(1.0, 1.0).unwrap(), C);
        assert_eq!(total_steering(&inc, &table).unwrap(), inc);
    }

    #[test]
    fn table_node_and_midpoint() {
        let table = linear_in_f_table();
        let at_node = table.interpolate(1000.0, Direction::horizontal(PI / 2.0)).unwrap();
        assert_eq!(at_node, table.node(1, 1, 0));
        let mid = table.interpolate(750.0, Direction::horizontal(PI)).unwrap();
        for m in 0..3 {
            assert_eq!(mid[m], Complex64::new(0.75 + m as f64, PI));
        }
    }

    #[test]
    fn table_rejects_queries_outside_hull() {
        let table = linear_in_f_table();
        assert!(matches!(
            table.interpolate(1500.0, Direction::horizontal(0.0)),
            Err(Error::OutOfRange { what: "frequency", .. })
        ));
        assert!(matches!(
            table.interpolate(750.0, Direction::new(0.0, 1.0).unwrap()),
            Err(Error::OutOfRange { what: "polar", .. })
        ));
    }

    #[test]
    fn table_csv_round_trip_and_shape() {
        let table = linear_in_f_table();
        let text = table.to_csv();
        assert_eq!(text.lines().count(), 1 + 24);
        let back = ScatteringTable::from_csv(&text).unwrap();
        assert_eq!(back, table);
        assert_eq!(back.grid_shape(), (2, 4, 1));
    }

    #[test]
    fn table_rows_may_be_shuffled() {
        let table = linear_in_f_table();
        let text = table.to_csv();
        let mut lines: Vec<&str> = text.lines().collect();
        let header = lines.remove(0);
        lines.reverse();
        let shuffled = format!("{header}\n{}\n", lines.join("\n"));
        assert_eq!(ScatteringTable::from_csv(&shuffled).unwrap(), table);
    }

    #[test]
    fn table_duplicate_node_is_rejected() {
        let mut text = linear_in_f_table().to_csv();
        text.push_str("500,0,1.5707963267948966,0,9,9\n");
        match ScatteringTable::from_csv(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 26);
                assert!(message.contains("duplicate"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn table_missing_node_is_rejected() {
        let text = linear_in_f_table().to_csv();
        let truncated: Vec<&str> = text.lines().take(24).collect();
        let err = ScatteringTable::from_csv(&truncated.join("\n")).unwrap_err();
        assert!(err.to_string().contains("incomplete"), "{err}");
    }

    #[test]
    fn table_malformed_row_names_line() {
        let mut text = linear_in_f_table().to_csv();
        text = text.replacen("500,0,", "500,zero,", 1);
        match ScatteringTable::from_csv(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(ScatteringTable::from_csv("freq,az\n1,2\n").is_err());
    }
}
