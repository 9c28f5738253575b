//! Microphone-array layouts.
//!
//! Positions are Cartesian meters. The builders place the array centroid at
//! the origin so that far-field delays are symmetric about the array center.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Position = Vector3<f64>;

/// An ordered set of microphone positions.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<Position>,
    labels: Option<Vec<String>>,
}

impl ArrayGeometry {
    /// Validates and wraps a set of positions.
    ///
    /// Requires at least one microphone, finite coordinates and no two
    /// microphones at the same point.
    pub fn new(positions: Vec<Position>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("geometry needs at least one microphone"));
        }
        for (i, p) in positions.iter().enumerate() {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("microphone {i} has a non-finite coordinate")));
            }
        }
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                if (positions[i] - positions[j]).norm() <= 0.0 {
                    return Err(Error::invalid(format!(
                        "microphones {i} and {j} are coincident"
                    )));
                }
            }
        }
        Ok(Self {
            positions,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.positions.len() {
            return Err(Error::invalid(format!(
                "{} labels for {} microphones",
                labels.len(),
                self.positions.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Label of microphone `index`; `m{index}` when none were supplied.
    pub fn label(&self, index: usize) -> String {
        match &self.labels {
            Some(labels) => labels[index].clone(),
            None => format!("m{index}"),
        }
    }

    pub fn centroid(&self) -> Position {
        self.positions.iter().sum::<Position>() / self.positions.len() as f64
    }

    /// Largest distance of any microphone from the coordinate origin.
    pub fn max_radius(&self) -> f64 {
        self.positions.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Copy with the centroid moved to the origin.
    pub fn centered(&self) -> Self {
        let c = self.centroid();
        self.map_positions(|p| p - c)
    }

    /// Applies a rotation matrix to every position.
    pub fn rotated(&self, rotation: &Matrix3<f64>) -> Self {
        self.map_positions(|p| rotation * p)
    }

    pub fn translated(&self, offset: &Position) -> Self {
        self.map_positions(|p| p + offset)
    }

    fn map_positions(&self, f: impl Fn(&Position) -> Position) -> Self {
        Self {
            positions: self.positions.iter().map(f).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Same geometry with one extra microphone appended.
    pub fn with_microphone(&self, position: Position) -> Result<Self> {
        let mut positions = self.positions.clone();
        positions.push(position);
        let geometry = Self::new(positions)?;
        match &self.labels {
            Some(labels) => {
                let mut labels = labels.clone();
                labels.push(format!("m{}", self.positions.len()));
                geometry.with_labels(labels)
            }
            None => Ok(geometry),
        }
    }

    /// Euclidean distances between all microphone pairs.
    pub fn pairwise_distances(&self) -> DistanceMatrix {
        let n = self.positions.len();
        let mut entries = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (self.positions[i] - self.positions[j]).norm();
                entries[(i, j)] = d;
                entries[(j, i)] = d;
            }
        }
        DistanceMatrix { entries }
    }

    pub fn to_toml(&self) -> String {
        let file = GeometryFile {
            mic: (0..self.len())
                .map(|i| MicRecord {
                    label: self.label(i),
                    x_m: self.positions[i].x,
                    y_m: self.positions[i].y,
                    z_m: self.positions[i].z,
                })
                .collect(),
        };
        toml::to_string(&file).expect("geometry serializes to TOML")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: GeometryFile = toml::from_str(text).map_err(|e| Error::Parse {
            line: toml_error_line(text, &e),
            message: e.message().to_string(),
        })?;
        let positions = file.mic.iter().map(|m| Position::new(m.x_m, m.y_m, m.z_m)).collect();
        let labels = file.mic.into_iter().map(|m| m.label).collect();
        Self::new(positions)?.with_labels(labels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }
}

/// One `[[mic]]` record of a geometry file.
#[derive(Debug, Serialize, Deserialize)]
struct MicRecord {
    label: String,
    x_m: f64,
    y_m: f64,
    z_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryFile {
    mic: Vec<MicRecord>,
}

pub(crate) fn toml_error_line(text: &str, err: &toml::de::Error) -> u64 {
    err.span()
        .map(|span| text[..span.start.min(text.len())].lines().count().max(1) as u64)
        .unwrap_or(0)
}

/// Symmetric matrix of inter-microphone distances, meters.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    entries: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.entries[(m, n)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

fn check_spacing(spacing: f64) -> Result<()> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::invalid(format!("spacing must be positive, got {spacing}")));
    }
    Ok(())
}

fn centered(positions: Vec<Position>) -> Result<ArrayGeometry> {
    Ok(ArrayGeometry::new(positions)?.centered())
}

/// Uniform line along x with `count` microphones `spacing` apart.
pub fn build_linear(count: usize, spacing: f64) -> Result<ArrayGeometry> {
    if count == 0 {
        return Err(Error::invalid("microphone count must be at least 1"));
    }
    check_spacing(spacing)?;
    centered(
        (0..count)
            .map(|k| Position::new(k as f64 * spacing, 0.0, 0.0))
            .collect(),
    )
}

/// `rows x cols` grid in the x-y plane; rows step along y, columns along x.
pub fn build_rectangular(rows: usize, cols: usize, spacing: f64) -> Result<ArrayGeometry> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "grid needs at least one row and column, got {rows}x{cols}"
        )));
    }
    check_spacing(spacing)?;
    let mut positions = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            positions.push(Position::new(c as f64 * spacing, r as f64 * spacing, 0.0));
        }
    }
    centered(positions)
}

/// `count` microphones on a circle in the x-y plane, first one on +x, with
/// chord length `adjacent_spacing` between neighbors.
pub fn build_circular(count: usize, adjacent_spacing: f64) -> Result<ArrayGeometry> {
    if count < 2 {
        return Err(Error::invalid(format!(
            "circular array needs at least 2 microphones, got {count}"
        )));
    }
    check_spacing(adjacent_spacing)?;
    let radius = circular_radius(count, adjacent_spacing);
    let positions = (0..count)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / count as f64;
            Position::new(radius * angle.cos(), radius * angle.sin(), 0.0)
        })
        .collect();
    // already centered up to rounding; keep the first microphone exactly on +x
    ArrayGeometry::new(positions)
}

/// Radius of the circle whose `count`-gon has chord `adjacent_spacing`.
pub fn circular_radius(count: usize, adjacent_spacing: f64) -> f64 {
    adjacent_spacing / (2.0 * (PI / count as f64).sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_three() {
        let g = build_linear(3, 0.03).unwrap();
        let xs: Vec<f64> = g.positions().iter().map(|p| p.x).collect();
        assert!((xs[0] + 0.03).abs() < 1e-15);
        assert!(xs[1].abs() < 1e-15);
        assert!((xs[2] - 0.03).abs() < 1e-15);
        let d = g.pairwise_distances();
        assert!((d.get(0, 2) - 0.06).abs() < 1e-15);
        assert!((d.get(0, 1) - 0.03).abs() < 1e-15);
        assert!((d.get(1, 2) - 0.03).abs() < 1e-15);
    }

    #[test]
    fn linear_single_at_origin() {
        let g = build_linear(1, 0.03).unwrap();
        assert_eq!(g.positions(), &[Position::zeros()]);
    }

    #[test]
    fn builders_reject_bad_arguments() {
        assert!(build_linear(0, 0.03).is_err());
        assert!(build_linear(3, 0.0).is_err());
        assert!(build_linear(3, -0.01).is_err());
        assert!(build_rectangular(0, 3, 0.03).is_err());
        assert!(build_rectangular(2, 3, f64::NAN).is_err());
        assert!(build_circular(1, 0.03).is_err());
        assert!(build_circular(6, 0.0).is_err());
    }

    #[test]
    fn rectangular_grid() {
        let g = build_rectangular(2, 3, 0.03).unwrap();
        assert_eq!(g.len(), 6);
        let d = g.pairwise_distances();
        let mut nearest = f64::INFINITY;
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    nearest = nearest.min(d.get(i, j));
                }
            }
        }
        assert!((nearest - 0.03).abs() < 1e-15);
        // row index along y
        assert!((g.positions()[3].y - g.positions()[0].y - 0.03).abs() < 1e-15);
    }

    #[test]
    fn degenerate_grid_matches_line() {
        let grid = build_rectangular(1, 3, 0.03).unwrap();
        let line = build_linear(3, 0.03).unwrap();
        for (a, b) in grid.positions().iter().zip(line.positions()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn square_diagonal() {
        let d = build_rectangular(2, 2, 0.03).unwrap().pairwise_distances();
        assert!((d.get(0, 3) - 0.03 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn circular_radius_and_chords() {
        assert!((circular_radius(6, 0.03) - 0.03).abs() < 1e-15);
        assert!((circular_radius(4, 0.03) - 0.03 / 2f64.sqrt()).abs() < 1e-15);
        let g = build_circular(6, 0.03).unwrap();
        let p = g.positions();
        assert!(p[0].y == 0.0 && p[0].x > 0.0);
        for k in 0..6 {
            let chord = (p[k] - p[(k + 1) % 6]).norm();
            assert!((chord - 0.03).abs() < 1e-12, "chord {k}: {chord}");
        }
        let max_pair = (0..6)
            .flat_map(|i| (0..6).map(move |j| (i, j)))
            .map(|(i, j)| (p[i] - p[j]).norm())
            .fold(0.0, f64::max);
        assert!((g.pairwise_distances().max() - max_pair).abs() < 1e-15);
        assert!((max_pair - 0.06).abs() < 1e-12);
    }

    #[test]
    fn rejects_coincident_and_non_finite() {
        assert!(ArrayGeometry::new(vec![]).is_err());
        assert!(ArrayGeometry::new(vec![Position::zeros(), Position::zeros()]).is_err());
        assert!(ArrayGeometry::new(vec![Position::new(f64::INFINITY, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn distance_matrix_is_symmetric() {
        let d = build_circular(5, 0.04).unwrap().pairwise_distances();
        assert_eq!(d.as_matrix(), &d.as_matrix().transpose());
        for i in 0..5 {
            assert_eq!(d.get(i, i), 0.0);
        }
    }

    #[test]
    fn toml_round_trip() {
        let g = build_rectangular(2, 3, 0.03)
            .unwrap()
            .with_labels((0..6).map(|i| format!("mic-{i}")).collect())
            .unwrap();
        let back = ArrayGeometry::from_toml(&g.to_toml()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn toml_errors_report_line() {
        let text = "[[mic]]\nlabel = \"a\"\nx_m = 0.0\ny_m = 0.0\nz_m = oops\n";
        match ArrayGeometry::from_toml(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }
}
