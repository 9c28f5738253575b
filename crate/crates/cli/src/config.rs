//! Run configuration: the TOML schema and its validation into a [`Plan`].

use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::{Path, PathBuf};

use arraycap::capacity::{ArrayChannel, SpectralWeights};
use arraycap::geometry::{build_circular, build_linear, build_rectangular, ArrayGeometry, Position};
use arraycap::noisefield::{AngularDensity, InterfererSpec, NoiseModel, DEFAULT_EPSILON, DEFAULT_RESOLUTION};
use arraycap::optimize::{Aggregation, DesignConstraints, DesignObjective, SearchOptions};
use arraycap::wavefield::{load_scattering_table, Direction, SourceSpec};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default)]
    pub grid: GridSection,
    pub weights: Option<WeightsSection>,
    pub scattering_file: Option<PathBuf>,
    pub optimize: Option<OptimizeSection>,
}

fn default_speed_of_sound() -> f64 {
    arraycap::SPEED_OF_SOUND
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub builder: Option<Builder>,
    pub count: Option<usize>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub spacing: Option<f64>,
    pub file: Option<PathBuf>,
    /// Name written into output metadata.
    pub id: Option<String>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builder {
    Linear,
    Rectangular,
    Circular,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "default_model")]
    pub model: NoiseKind,
    #[serde(default = "default_power")]
    pub power: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub density_file: Option<PathBuf>,
    pub resolution: Option<(usize, usize)>,
    #[serde(default)]
    pub interferer: Vec<InterfererSection>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            model: default_model(),
            power: default_power(),
            epsilon: default_epsilon(),
            density_file: None,
            resolution: None,
            interferer: Vec::new(),
        }
    }
}

fn default_model() -> NoiseKind {
    NoiseKind::Incoherent
}

fn default_power() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Incoherent,
    Spherical,
    Cylindrical,
    Density,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfererSection {
    pub azimuth: f64,
    #[serde(default = "default_polar")]
    pub polar: f64,
    pub range: Option<f64>,
    pub power: f64,
}

fn default_polar() -> f64 {
    FRAC_PI_2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    #[serde(default)]
    pub azimuth: f64,
    #[serde(default = "default_polar")]
    pub polar: f64,
    pub range: Option<f64>,
    /// Standard deviation of the source azimuth error, radians (broadband only).
    #[serde(default)]
    pub azimuth_std: f64,
    #[serde(default = "default_uncertainty_points")]
    pub uncertainty_points: usize,
}

impl Default for SourceSection {
    fn default() -> Self {
        Self {
            azimuth: 0.0,
            polar: default_polar(),
            range: None,
            azimuth_std: 0.0,
            uncertainty_points: default_uncertainty_points(),
        }
    }
}

fn default_uncertainty_points() -> usize {
    9
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub freq_hz: Option<f64>,
    pub azimuth: Option<AxisSpec>,
    pub frequency: Option<AxisSpec>,
}

/// Either explicit `values` or `start`/`stop`/`count` with a spacing rule.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
    pub scale: Option<Scale>,
    pub endpoint: Option<bool>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    pub file: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub budget: usize,
    pub restarts: Option<usize>,
    pub initial_step: Option<f64>,
    #[serde(default = "default_aggregation")]
    pub aggregation: AggregationKind,
    pub box_min: [f64; 3],
    pub box_max: [f64; 3],
    pub min_spacing: f64,
    #[serde(default)]
    pub fixed: Vec<usize>,
    pub geometry_out: Option<PathBuf>,
}

fn default_aggregation() -> AggregationKind {
    AggregationKind::Mean
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationKind {
    Mean,
    Min,
}

/// Command-line values that win over the file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub snr_db: Option<f64>,
    pub freq_hz: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

/// Everything a subcommand needs, validated.
pub struct Plan {
    pub channel: ArrayChannel,
    pub snr_linear: f64,
    pub source: SourceSpec,
    pub azimuth_std: f64,
    pub uncertainty_points: usize,
    pub freq_hz: f64,
    pub azimuths: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub weights: SpectralWeights,
    pub output: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub optimize: Option<OptimizePlan>,
}

pub struct OptimizePlan {
    pub constraints: DesignConstraints,
    pub objective: DesignObjective,
    pub options: SearchOptions,
    pub geometry_out: Option<PathBuf>,
}

fn invalid(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {message}"))
}

fn lib_error(field: &str, err: arraycap::Error) -> CliError {
    match err {
        arraycap::Error::Io(e) => CliError::Io(format!("{field}: {e}")),
        other => invalid(field, other),
    }
}

pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn finite(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

impl AxisSpec {
    fn expand(&self, field: &str, defaults: (f64, f64, usize, Scale, bool)) -> Result<Vec<f64>, CliError> {
        if let Some(values) = &self.values {
            if self.start.is_some() || self.stop.is_some() || self.count.is_some() || self.scale.is_some() {
                return Err(invalid(field, "give either `values` or start/stop/count, not both"));
            }
            if values.is_empty() {
                return Err(invalid(field, "grid is empty"));
            }
            for v in values {
                finite(field, *v)?;
            }
            return Ok(values.clone());
        }
        let start = finite(field, self.start.unwrap_or(defaults.0))?;
        let stop = finite(field, self.stop.unwrap_or(defaults.1))?;
        let count = self.count.unwrap_or(defaults.2);
        let scale = self.scale.unwrap_or(defaults.3);
        let endpoint = self.endpoint.unwrap_or(defaults.4);
        if count == 0 {
            return Err(invalid(field, "grid is empty (count = 0)"));
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        if scale == Scale::Log && !(start > 0.0 && stop > 0.0) {
            return Err(invalid(field, "log spacing needs positive start and stop"));
        }
        let intervals = if endpoint { count - 1 } else { count } as f64;
        Ok((0..count)
            .map(|i| {
                let t = i as f64 / intervals;
                match scale {
                    Scale::Linear => start + (stop - start) * t,
                    Scale::Log => start * (stop / start).powf(t),
                }
            })
            .collect())
    }
}

fn build_geometry(section: &GeometrySection, base: &Path) -> Result<(ArrayGeometry, String), CliError> {
    let g = match (&section.builder, &section.file) {
        (Some(_), Some(_)) => return Err(invalid("geometry", "give either `builder` or `file`, not both")),
        (None, None) => return Err(invalid("geometry", "one of `builder` or `file` is required")),
        (None, Some(file)) => {
            if section.count.is_some() || section.rows.is_some() || section.cols.is_some() || section.spacing.is_some() {
                return Err(invalid("geometry", "builder parameters are not allowed with `file`"));
            }
            let path = resolve(base, file);
            let g = ArrayGeometry::load(&path).map_err(|e| lib_error("geometry.file", e))?;
            let id = section.id.clone().unwrap_or_else(|| {
                path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "file".into())
            });
            return Ok((g, id));
        }
        (Some(builder), None) => *builder,
    };
    let spacing = section.spacing.ok_or_else(|| invalid("geometry.spacing", "required with a builder"))?;
    let need = |name: &str, v: Option<usize>| v.ok_or_else(|| invalid(&format!("geometry.{name}"), "required for this builder"));
    let (geometry, auto_id) = match g {
        Builder::Linear => {
            let count = need("count", section.count)?;
            (build_linear(count, spacing), format!("linear-{count}"))
        }
        Builder::Circular => {
            let count = need("count", section.count)?;
            (build_circular(count, spacing), format!("circular-{count}"))
        }
        Builder::Rectangular => {
            let rows = need("rows", section.rows)?;
            let cols = need("cols", section.cols)?;
            (build_rectangular(rows, cols, spacing), format!("rectangular-{rows}x{cols}"))
        }
    };
    let geometry = geometry.map_err(|e| lib_error("geometry", e))?;
    Ok((geometry, section.id.clone().unwrap_or(auto_id)))
}

fn build_noise(section: &NoiseSection, base: &Path, geometry: &ArrayGeometry) -> Result<NoiseModel, CliError> {
    if !(section.power.is_finite() && section.power > 0.0) {
        return Err(invalid("noise.power", format!("must be positive, got {}", section.power)));
    }
    if !(section.epsilon.is_finite() && section.epsilon >= 0.0) {
        return Err(invalid("noise.epsilon", format!("must be non-negative, got {}", section.epsilon)));
    }
    if section.density_file.is_some() && !matches!(section.model, NoiseKind::Density) {
        return Err(invalid("noise.density_file", "only used with model = \"density\""));
    }
    if section.resolution.is_some() && !matches!(section.model, NoiseKind::Density) {
        return Err(invalid("noise.resolution", "only used with model = \"density\""));
    }
    let mut model = match section.model {
        NoiseKind::Incoherent => NoiseModel::incoherent(section.power),
        NoiseKind::Spherical => NoiseModel::spherical(section.power, section.epsilon),
        NoiseKind::Cylindrical => NoiseModel::cylindrical(section.power, section.epsilon),
        NoiseKind::Density => {
            let file = section
                .density_file
                .as_ref()
                .ok_or_else(|| invalid("noise.density_file", "required with model = \"density\""))?;
            let density = AngularDensity::load(resolve(base, file)).map_err(|e| lib_error("noise.density_file", e))?;
            let resolution = section.resolution.unwrap_or(DEFAULT_RESOLUTION);
            if resolution.0 < 8 || resolution.1 < 4 {
                return Err(invalid("noise.resolution", "needs at least [8, 4]"));
            }
            NoiseModel::density(density, resolution, section.epsilon)
        }
    };
    for (i, jam) in section.interferer.iter().enumerate() {
        let field = format!("noise.interferer[{i}]");
        let direction = Direction::new(finite(&field, jam.azimuth)?, finite(&field, jam.polar)?)
            .map_err(|e| lib_error(&field, e))?;
        let source = match jam.range {
            Some(range) => SourceSpec::NearField { range, direction },
            None => SourceSpec::FarField(direction),
        };
        source.validate_for(geometry).map_err(|e| lib_error(&field, e))?;
        model = model.with_interferer(InterfererSpec::new(source, jam.power).map_err(|e| lib_error(&field, e))?);
    }
    Ok(model)
}

fn check_frequencies(field: &str, values: &[f64]) -> Result<(), CliError> {
    if let Some(f) = values.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
        return Err(invalid(field, format!("frequencies must be finite and non-negative, got {f}")));
    }
    Ok(())
}

/// Validates `config` completely; `base` is the directory relative input
/// paths are resolved against.
pub fn plan(config: RunConfig, base: &Path, overrides: Overrides) -> Result<Plan, CliError> {
    let c = config.speed_of_sound;
    if !(c.is_finite() && c > 0.0) {
        return Err(invalid("speed_of_sound", format!("must be positive, got {c}")));
    }
    let snr_db = overrides
        .snr_db
        .or(config.snr_db)
        .ok_or_else(|| invalid("snr_db", "required (in the config or via --snr-db)"))?;
    let snr_db = finite("snr_db", snr_db)?;
    let (geometry, geometry_id) = build_geometry(&config.geometry, base)?;
    let noise = build_noise(&config.noise, base, &geometry)?;

    let src = &config.source;
    let direction = Direction::new(finite("source.azimuth", src.azimuth)?, finite("source.polar", src.polar)?)
        .map_err(|e| lib_error("source", e))?;
    let source = match src.range {
        Some(range) => SourceSpec::NearField { range, direction },
        None => SourceSpec::FarField(direction),
    };
    source.validate_for(&geometry).map_err(|e| lib_error("source.range", e))?;
    if !(src.azimuth_std.is_finite() && src.azimuth_std >= 0.0) {
        return Err(invalid("source.azimuth_std", "must be non-negative"));
    }
    if src.uncertainty_points == 0 || src.uncertainty_points.is_multiple_of(2) {
        return Err(invalid("source.uncertainty_points", "must be odd and positive"));
    }

    let freq_hz = finite("grid.freq_hz", overrides.freq_hz.or(config.grid.freq_hz).unwrap_or(1000.0))?;
    check_frequencies("grid.freq_hz", &[freq_hz])?;
    let azimuths = config
        .grid
        .azimuth
        .clone()
        .unwrap_or_default()
        .expand("grid.azimuth", (0.0, TAU, 360, Scale::Linear, false))?;
    let frequencies = config
        .grid
        .frequency
        .clone()
        .unwrap_or_default()
        .expand("grid.frequency", (100.0, 8000.0, 100, Scale::Log, true))?;
    check_frequencies("grid.frequency", &frequencies)?;

    let weights = match &config.weights {
        Some(w) => {
            let path = resolve(base, &w.file);
            let (weights, sum) = SpectralWeights::load(&path).map_err(|e| lib_error("weights.file", e))?;
            if (sum - 1.0).abs() > 1e-12 {
                eprintln!("warning: weights in {} sum to {sum}; renormalized to 1", path.display());
            }
            weights
        }
        None => {
            let mut sorted = frequencies.clone();
            sorted.sort_by(f64::total_cmp);
            SpectralWeights::uniform(sorted).map_err(|e| lib_error("grid.frequency", e))?
        }
    };
    check_frequencies("weights.file", weights.frequencies())?;

    let mut channel = ArrayChannel::new(geometry.clone(), noise.clone(), c)
        .map_err(|e| lib_error("speed_of_sound", e))?
        .with_geometry_id(geometry_id);
    if let Some(file) = &config.scattering_file {
        let table = load_scattering_table(resolve(base, file)).map_err(|e| lib_error("scattering_file", e))?;
        if table.mic_count() != geometry.len() {
            return Err(invalid(
                "scattering_file",
                format!("table has {} microphones, geometry {}", table.mic_count(), geometry.len()),
            ));
        }
        channel = channel.with_scattering(table);
    }

    let seed = overrides.seed.unwrap_or(config.seed);
    let snr_linear = arraycap::db_to_linear(snr_db);
    let optimize = match config.optimize {
        Some(o) => {
            let constraints = DesignConstraints::new(
                Position::from(o.box_min),
                Position::from(o.box_max),
                o.min_spacing,
                o.fixed.clone(),
            )
            .map_err(|e| lib_error("optimize", e))?;
            if let Some(reason) = constraints.violation(&geometry) {
                return Err(invalid("optimize", format!("initial geometry is infeasible: {reason}")));
            }
            if o.budget == 0 {
                return Err(invalid("optimize.budget", "must be at least 1"));
            }
            if let Some(step) = o.initial_step {
                if !(step.is_finite() && step > 0.0) {
                    return Err(invalid("optimize.initial_step", "must be positive"));
                }
            }
            let aggregation = match o.aggregation {
                AggregationKind::Mean => Aggregation::MeanOverAzimuth,
                AggregationKind::Min => Aggregation::MinOverAzimuth,
            };
            let mut objective = DesignObjective::new(aggregation, azimuths.clone(), weights.clone(), noise, snr_linear)
                .map_err(|e| lib_error("optimize", e))?;
            objective.polar = direction.polar();
            let mut options = SearchOptions::new(o.budget, seed);
            if let Some(r) = o.restarts {
                options.restarts = r;
            }
            options.initial_step = o.initial_step;
            Some(OptimizePlan {
                constraints,
                objective,
                options,
                geometry_out: o.geometry_out.map(|p| resolve(base, &p)),
            })
        }
        None => None,
    };

    Ok(Plan {
        channel,
        snr_linear,
        source,
        azimuth_std: src.azimuth_std,
        uncertainty_points: src.uncertainty_points,
        freq_hz,
        azimuths,
        frequencies,
        weights,
        output: overrides.out.or_else(|| config.output.map(|p| resolve(base, &p))),
        svg: overrides.svg.or_else(|| config.svg.map(|p| resolve(base, &p))),
        optimize,
    })
}
