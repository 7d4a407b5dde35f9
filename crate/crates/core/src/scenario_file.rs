//! TOML scenario and geometry-list files.
//!
//! ```toml
//! combo = ["TDOA", "AOA", "RSS", "TOA"]   # or ["all"]
//! reference_index = 0                     # optional
//!
//! [source]
//! x = 0.0
//! y = 0.0
//!
//! [noise]
//! sigma = 0.5      # m
//! rho_deg = 1.0    # or `rho` in radians
//! delta = 1.0
//! gamma = 1.5      # m
//! p0 = 1000.0
//! xi = 1.0
//!
//! [[sensors]]
//! angle_deg = 75.0   # or `angle_rad`; azimuth from sensor to source
//! distance = 1000.0
//!
//! [[sensors]]
//! x = -1000.0        # Cartesian form; distance and angle are derived
//! y = 0.0
//! ```
//!
//! Unknown keys are rejected. A missing std is read as 0 and reported by
//! validation only if its modality is active.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    validate_scenario, Geometry, MeasurementCombo, Modality, NoiseModel, Scenario, SensorPolar,
    SourcePosition,
};
use crate::simulate::NamedGeometry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_index: Option<usize>,
    pub combo: Vec<String>,
    pub source: SourceSpec,
    pub noise: NoiseSpec,
    pub sensors: Vec<SensorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::ScenarioFile(msg.into())
}

impl NoiseSpec {
    fn to_model(&self) -> Result<NoiseModel<f64>> {
        let rho = match (self.rho_deg, self.rho) {
            (Some(_), Some(_)) => return Err(parse_err("noise: give rho_deg or rho, not both")),
            (Some(deg), None) => deg.to_radians(),
            (None, Some(rad)) => rad,
            (None, None) => 0.0,
        };
        Ok(NoiseModel {
            sigma: self.sigma.unwrap_or(0.0),
            rho,
            delta: self.delta.unwrap_or(0.0),
            gamma: self.gamma.unwrap_or(0.0),
            p0: self.p0.unwrap_or(f64::NAN),
            xi: self.xi.unwrap_or(f64::NAN),
        })
    }
}

impl SensorSpec {
    fn to_polar(&self, index: usize, source: SourcePosition<f64>) -> Result<SensorPolar<f64>> {
        let angle = match (self.angle_deg, self.angle_rad) {
            (Some(_), Some(_)) => {
                return Err(parse_err(format!(
                    "sensors[{index}]: give angle_deg or angle_rad, not both"
                )))
            }
            (Some(deg), None) => Some(deg.to_radians()),
            (None, rad) => rad,
        };
        match (angle, self.x, self.y) {
            (Some(alpha), None, None) => {
                let d = self.distance.ok_or_else(|| {
                    parse_err(format!("sensors[{index}]: angle form requires distance"))
                })?;
                SensorPolar::new(alpha, d)
                    .map_err(|e| Error::Validation(format!("sensors[{index}]: {e}")))
            }
            (None, Some(x), Some(y)) => {
                if self.distance.is_some() {
                    return Err(parse_err(format!(
                        "sensors[{index}]: distance is derived in the x/y form"
                    )));
                }
                let (dx, dy) = (source.sx - x, source.sy - y);
                let d = dx.hypot(dy);
                if d == 0.0 {
                    return Err(Error::Validation(
                        Error::CoincidentSensor { index }.to_string(),
                    ));
                }
                SensorPolar::new(dy.atan2(dx), d)
                    .map_err(|e| Error::Validation(format!("sensors[{index}]: {e}")))
            }
            _ => Err(parse_err(format!(
                "sensors[{index}]: need either angle_deg/angle_rad + distance or x + y"
            ))),
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| parse_err(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| parse_err(e.to_string()))
    }

    /// Converts to a scenario without running [`validate_scenario`].
    pub fn to_scenario_unvalidated(&self) -> Result<Scenario<f64>> {
        let combo = parse_combo(&self.combo)?;
        let source = SourcePosition::new(self.source.x, self.source.y);
        let sensors = self
            .sensors
            .iter()
            .enumerate()
            .map(|(i, s)| s.to_polar(i, source))
            .collect::<Result<Vec<_>>>()?;
        let geometry = Geometry::new_unchecked(source, sensors, self.reference_index.unwrap_or(0));
        Ok(Scenario::new(geometry, self.noise.to_model()?, combo))
    }

    pub fn to_scenario(&self) -> Result<Scenario<f64>> {
        let s = self.to_scenario_unvalidated()?;
        validate_scenario(&s).into_result()?;
        Ok(s)
    }

    /// Full-precision description of `s` (angles and ρ in radians).
    pub fn from_scenario(s: &Scenario<f64>) -> Self {
        let g = &s.geometry;
        let n = &s.noise;
        ScenarioFile {
            reference_index: (g.reference_index() != 0).then_some(g.reference_index()),
            combo: s.combo.modalities().map(|m| m.name().to_string()).collect(),
            source: SourceSpec {
                x: g.source().sx,
                y: g.source().sy,
            },
            noise: NoiseSpec {
                sigma: Some(n.sigma),
                rho_deg: None,
                rho: Some(n.rho),
                delta: Some(n.delta),
                gamma: Some(n.gamma),
                p0: Some(n.p0),
                xi: Some(n.xi),
            },
            sensors: g
                .sensors()
                .iter()
                .map(|p| SensorSpec {
                    angle_rad: Some(p.alpha()),
                    distance: Some(p.d()),
                    ..Default::default()
                })
                .collect(),
        }
    }
}

fn parse_combo(items: &[String]) -> Result<MeasurementCombo> {
    if items.len() == 1 && items[0].trim().eq_ignore_ascii_case("all") {
        return Ok(MeasurementCombo::all());
    }
    let ms = items
        .iter()
        .map(|s| s.parse::<Modality>())
        .collect::<Result<Vec<_>>>()?;
    MeasurementCombo::new(&ms).map_err(|_| parse_err("combo must not be empty"))
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario<f64>> {
    ScenarioFile::parse(text)?.to_scenario()
}

pub fn write_scenario(s: &Scenario<f64>) -> Result<String> {
    ScenarioFile::from_scenario(s).to_toml_string()
}

/// Named azimuth layouts for sweeps.
///
/// ```toml
/// [[geometry]]
/// id = "optimal"
/// angles_deg = [150.0, -90.0, 30.0]
/// distance = 1000.0          # or distances = [...]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometriesFile {
    pub geometry: Vec<GeometrySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub id: String,
    pub angles_deg: Vec<f64>,
    #[serde(default)]
    pub distance: Option<f64>,
    #[serde(default)]
    pub distances: Option<Vec<f64>>,
}

impl GeometriesFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| parse_err(e.to_string()))
    }

    /// Builds the geometries around `source` with reference sensor `reference_index`.
    pub fn to_geometries(
        &self,
        source: SourcePosition<f64>,
        reference_index: usize,
    ) -> Result<Vec<NamedGeometry>> {
        self.geometry
            .iter()
            .map(|spec| {
                let ranges = match (spec.distance, &spec.distances) {
                    (Some(d), None) => vec![d; spec.angles_deg.len()],
                    (None, Some(ds)) => ds.clone(),
                    _ => {
                        return Err(parse_err(format!(
                            "geometry {:?}: give exactly one of distance / distances",
                            spec.id
                        )))
                    }
                };
                if ranges.len() != spec.angles_deg.len() {
                    return Err(parse_err(format!(
                        "geometry {:?}: {} angles but {} distances",
                        spec.id,
                        spec.angles_deg.len(),
                        ranges.len()
                    )));
                }
                let sensors = spec
                    .angles_deg
                    .iter()
                    .zip(&ranges)
                    .map(|(&a, &d)| SensorPolar::from_degrees(a, d))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| Error::Validation(format!("geometry {:?}: {e}", spec.id)))?;
                let geometry = Geometry::with_reference(source, sensors, reference_index)
                    .map_err(|e| Error::Validation(format!("geometry {:?}: {e}", spec.id)))?;
                Ok(NamedGeometry {
                    id: spec.id.clone(),
                    geometry,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASE1: &str = r#"
combo = ["TDOA", "AOA", "RSS", "TOA"]

[source]
x = 0.0
y = 0.0

[noise]
sigma = 0.5
rho_deg = 1.0
delta = 1.0
gamma = 1.5
p0 = 1000.0
xi = 1.0

[[sensors]]
angle_deg = 75.0
distance = 1000.0

[[sensors]]
angle_deg = 90.0
distance = 1000.0

[[sensors]]
x = 258.81904510252076
y = -965.9258262890683
"#;

    #[test]
    fn parses_case1() {
        let s = load_scenario(CASE1).unwrap();
        assert_eq!(s.combo, MeasurementCombo::all());
        assert_eq!(s.geometry.n(), 3);
        assert!((s.geometry.alphas_deg()[2] - 105.0).abs() < 1e-9);
        assert!((s.noise.rho - 1f64.to_radians()).abs() < 1e-18);
    }

    #[test]
    fn unknown_key_rejected() {
        let text = CASE1.replace("xi = 1.0", "xi = 1.0\nbogus = 3");
        assert!(matches!(load_scenario(&text), Err(Error::ScenarioFile(_))));
    }

    #[test]
    fn zero_sigma_is_validation_error() {
        let text = CASE1.replace("sigma = 0.5", "sigma = 0.0");
        match load_scenario(&text) {
            Err(Error::Validation(msg)) => assert!(msg.contains("nonpositive std: sigma")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sensor_forms_exclusive() {
        let text = CASE1.replace("angle_deg = 75.0", "angle_deg = 75.0\nx = 1.0");
        assert!(matches!(load_scenario(&text), Err(Error::ScenarioFile(_))));
    }

    #[test]
    fn writer_round_trips_exactly() {
        let s = load_scenario(CASE1).unwrap();
        let text = write_scenario(&s).unwrap();
        assert_eq!(load_scenario(&text).unwrap(), s);
    }

    #[test]
    fn geometries_file() {
        let text = r#"
[[geometry]]
id = "optimal"
angles_deg = [150.0, -90.0, 30.0]
distance = 1000.0

[[geometry]]
id = "near"
angles_deg = [0.0, 40.0, 120.0]
distances = [1000.0, 1300.0, 1600.0]
"#;
        let g = GeometriesFile::parse(text)
            .unwrap()
            .to_geometries(SourcePosition::origin(), 0)
            .unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[1].geometry.ranges(), vec![1000.0, 1300.0, 1600.0]);
    }
}
