//! Domain types shared by every other module: source and sensor geometry, the
//! per-modality noise model, measurement combinations and scenario validation.
//!
//! Angles are radians internally. `alpha` is the azimuth from a sensor to the
//! source, so a sensor sits at `source - d * (cos alpha, sin alpha)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{wrap_angle, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SourcePosition<T> {
    pub sx: T,
    pub sy: T,
}

impl<T: Scalar> SourcePosition<T> {
    pub fn new(sx: T, sy: T) -> Self {
        Self { sx, sy }
    }

    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.sx.is_finite() && self.sy.is_finite()
    }
}

/// One sensor in polar form relative to the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPolar<T> {
    alpha: T,
    d: T,
}

impl<T: Scalar> SensorPolar<T> {
    /// `alpha` is wrapped into (−π, π]; `d` must be positive and finite.
    pub fn new(alpha: T, d: T) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidGeometry("nonfinite azimuth".into()));
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::InvalidGeometry(format!("nonpositive range {d}")));
        }
        Ok(Self {
            alpha: wrap_angle(alpha),
            d,
        })
    }

    pub fn from_degrees(alpha_deg: T, d: T) -> Result<Self> {
        Self::new(alpha_deg.to_radians(), d)
    }

    #[inline]
    pub fn alpha(&self) -> T {
        self.alpha
    }

    #[inline]
    pub fn d(&self) -> T {
        self.d
    }

    pub fn alpha_deg(&self) -> T {
        self.alpha.to_degrees()
    }

    /// Cartesian sensor position for a given source.
    pub fn position(&self, source: &SourcePosition<T>) -> (T, T) {
        let (s, c) = self.alpha.sin_cos();
        (source.sx - self.d * c, source.sy - self.d * s)
    }
}

/// Source position plus the ordered sensor list. The TDOA reference sensor is
/// `reference_index` (0 by default).
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry<T> {
    source: SourcePosition<T>,
    sensors: Vec<SensorPolar<T>>,
    reference_index: usize,
}

impl<T: Scalar> Geometry<T> {
    pub fn new(source: SourcePosition<T>, sensors: Vec<SensorPolar<T>>) -> Result<Self> {
        Self::with_reference(source, sensors, 0)
    }

    pub fn with_reference(
        source: SourcePosition<T>,
        sensors: Vec<SensorPolar<T>>,
        reference_index: usize,
    ) -> Result<Self> {
        if sensors.len() < 3 {
            return Err(Error::TooFewSensors { n: sensors.len() });
        }
        if reference_index >= sensors.len() {
            return Err(Error::InvalidReference {
                index: reference_index,
                n: sensors.len(),
            });
        }
        Ok(Self {
            source,
            sensors,
            reference_index,
        })
    }

    /// Builds a geometry without the sensor-count and reference checks, for
    /// callers (file loaders) that report problems through [`validate_scenario`].
    pub fn new_unchecked(
        source: SourcePosition<T>,
        sensors: Vec<SensorPolar<T>>,
        reference_index: usize,
    ) -> Self {
        Self {
            source,
            sensors,
            reference_index,
        }
    }

    /// Azimuths in degrees with a common range.
    pub fn from_degrees(angles_deg: &[T], d: T) -> Result<Self> {
        let ds = vec![d; angles_deg.len()];
        Self::from_degrees_ranges(angles_deg, &ds)
    }

    pub fn from_degrees_ranges(angles_deg: &[T], ranges: &[T]) -> Result<Self> {
        if angles_deg.len() != ranges.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} azimuths but {} ranges",
                angles_deg.len(),
                ranges.len()
            )));
        }
        let sensors = angles_deg
            .iter()
            .zip(ranges)
            .map(|(&a, &d)| SensorPolar::from_degrees(a, d))
            .collect::<Result<Vec<_>>>()?;
        Self::new(SourcePosition::origin(), sensors)
    }

    pub fn source(&self) -> SourcePosition<T> {
        self.source
    }

    pub fn sensors(&self) -> &[SensorPolar<T>] {
        &self.sensors
    }

    pub fn n(&self) -> usize {
        self.sensors.len()
    }

    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    pub fn alphas(&self) -> Vec<T> {
        self.sensors.iter().map(|s| s.alpha).collect()
    }

    pub fn ranges(&self) -> Vec<T> {
        self.sensors.iter().map(|s| s.d).collect()
    }

    pub fn alphas_deg(&self) -> Vec<T> {
        self.sensors.iter().map(|s| s.alpha_deg()).collect()
    }

    /// Same ranges and source, new azimuths (wrapped).
    pub fn with_alphas(&self, alphas: &[T]) -> Result<Self> {
        if alphas.len() != self.sensors.len() {
            return Err(Error::InvalidGeometry(format!(
                "expected {} azimuths, got {}",
                self.sensors.len(),
                alphas.len()
            )));
        }
        let sensors = alphas
            .iter()
            .zip(&self.sensors)
            .map(|(&a, s)| SensorPolar::new(a, s.d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            source: self.source,
            sensors,
            reference_index: self.reference_index,
        })
    }

    pub fn to_cartesian(&self) -> Vec<(T, T)> {
        self.sensors.iter().map(|s| s.position(&self.source)).collect()
    }
}

/// Converts Cartesian sensor positions to polar form around `source`.
pub fn geometry_from_cartesian<T: Scalar>(
    source: SourcePosition<T>,
    sensor_positions: &[(T, T)],
) -> Result<Geometry<T>> {
    if sensor_positions.len() < 3 {
        return Err(Error::TooFewSensors {
            n: sensor_positions.len(),
        });
    }
    let sensors = sensor_positions
        .iter()
        .enumerate()
        .map(|(index, &(x, y))| {
            let dx = source.sx - x;
            let dy = source.sy - y;
            let d = dx.hypot(dy);
            if d == T::zero() {
                return Err(Error::CoincidentSensor { index });
            }
            SensorPolar::new(dy.atan2(dx), d)
        })
        .collect::<Result<Vec<_>>>()?;
    Geometry::new(source, sensors)
}

/// Per-modality noise standard deviations and RSS propagation constants.
///
/// Only `A²/δ²` enters the information math; `p0` and `delta` carry whatever
/// power unit the scenario uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel<T> {
    /// TDOA per-sensor range noise std (m).
    pub sigma: T,
    /// AOA std (rad).
    pub rho: T,
    /// RSS std (power units).
    pub delta: T,
    /// TOA std (m).
    pub gamma: T,
    pub p0: T,
    /// Path-loss exponent.
    pub xi: T,
}

impl<T: Scalar> NoiseModel<T> {
    /// `rho_deg` is converted to radians.
    pub fn new(sigma: T, rho_deg: T, delta: T, gamma: T, p0: T, xi: T) -> Self {
        Self {
            sigma,
            rho: rho_deg.to_radians(),
            delta,
            gamma,
            p0,
            xi,
        }
    }

    /// A = −10ξ / ln 10.
    pub fn a(&self) -> T {
        -T::lit(10.0) * self.xi / T::LN_10()
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = sigma;
        self
    }

    fn std_for(&self, m: Modality) -> (T, &'static str) {
        match m {
            Modality::Tdoa => (self.sigma, "sigma"),
            Modality::Aoa => (self.rho, "rho"),
            Modality::Rss => (self.delta, "delta"),
            Modality::Toa => (self.gamma, "gamma"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    Tdoa,
    Aoa,
    Rss,
    Toa,
}

impl Modality {
    pub const ALL: [Modality; 4] = [Modality::Tdoa, Modality::Aoa, Modality::Rss, Modality::Toa];

    fn bit(self) -> u8 {
        match self {
            Modality::Tdoa => 1,
            Modality::Aoa => 2,
            Modality::Rss => 4,
            Modality::Toa => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Tdoa => "TDOA",
            Modality::Aoa => "AOA",
            Modality::Rss => "RSS",
            Modality::Toa => "TOA",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TDOA" => Ok(Modality::Tdoa),
            "AOA" => Ok(Modality::Aoa),
            "RSS" => Ok(Modality::Rss),
            "TOA" => Ok(Modality::Toa),
            other => Err(Error::ScenarioFile(format!("unknown modality {other:?}"))),
        }
    }
}

/// Non-empty set of active modalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeasurementCombo(u8);

impl MeasurementCombo {
    pub fn new(modalities: &[Modality]) -> Result<Self> {
        let bits = modalities.iter().fold(0u8, |acc, m| acc | m.bit());
        if bits == 0 {
            return Err(Error::EmptyCombo);
        }
        Ok(Self(bits))
    }

    pub fn all() -> Self {
        Self(0b1111)
    }

    pub fn contains(&self, m: Modality) -> bool {
        self.0 & m.bit() != 0
    }

    pub fn is_subset_of(&self, other: &MeasurementCombo) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn with(self, m: Modality) -> Self {
        Self(self.0 | m.bit())
    }

    pub fn modalities(&self) -> impl Iterator<Item = Modality> + '_ {
        Modality::ALL.into_iter().filter(|m| self.contains(*m))
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// The seven TDOA-based combinations in bound order O₁…O₇.
    pub fn tdoa_combos() -> [MeasurementCombo; 7] {
        use Modality::*;
        let c = |ms: &[Modality]| MeasurementCombo::new(ms).expect("non-empty");
        [
            c(&[Tdoa, Aoa]),
            c(&[Tdoa, Rss]),
            c(&[Tdoa, Toa]),
            c(&[Tdoa, Aoa, Rss]),
            c(&[Tdoa, Rss, Toa]),
            c(&[Tdoa, Aoa, Toa]),
            c(&[Tdoa, Aoa, Rss, Toa]),
        ]
    }

    /// All fifteen non-empty combinations.
    pub fn all_combos() -> Vec<MeasurementCombo> {
        (1u8..16).map(MeasurementCombo).collect()
    }
}

impl fmt::Display for MeasurementCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.modalities().map(Modality::name).collect();
        f.write_str(&names.join("-"))
    }
}

impl FromStr for MeasurementCombo {
    type Err = Error;

    /// Accepts `TDOA-AOA`, `tdoa,aoa` or `all`.
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::all());
        }
        let ms = s
            .split(['-', ',', '+'])
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Modality>>>()?;
        Self::new(&ms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub geometry: Geometry<T>,
    pub noise: NoiseModel<T>,
    pub combo: MeasurementCombo,
}

impl<T: Scalar> Scenario<T> {
    pub fn new(geometry: Geometry<T>, noise: NoiseModel<T>, combo: MeasurementCombo) -> Self {
        Self {
            geometry,
            noise,
            combo,
        }
    }

    pub fn with_geometry(&self, geometry: Geometry<T>) -> Self {
        Self {
            geometry,
            noise: self.noise,
            combo: self.combo,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonpositiveStd(&'static str),
    TooFewSensors(usize),
    BadReference(usize),
    Nonfinite(String),
    NonpositiveRange(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonpositiveStd(name) => write!(f, "nonpositive std: {name}"),
            Violation::TooFewSensors(n) => write!(f, "too few sensors: {n} (need at least 3)"),
            Violation::BadReference(i) => write!(f, "reference index {i} out of range"),
            Violation::Nonfinite(field) => write!(f, "nonfinite value: {field}"),
            Violation::NonpositiveRange(i) => write!(f, "nonpositive range: sensor {i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            Err(Error::Validation(msgs.join("; ")))
        }
    }
}

pub fn validate_scenario<T: Scalar>(s: &Scenario<T>) -> ValidationReport {
    let mut violations = Vec::new();
    let g = &s.geometry;

    if g.n() < 3 {
        violations.push(Violation::TooFewSensors(g.n()));
    }
    if g.reference_index >= g.n().max(1) {
        violations.push(Violation::BadReference(g.reference_index));
    }
    if !g.source.is_finite() {
        violations.push(Violation::Nonfinite("source".into()));
    }
    for (i, sensor) in g.sensors.iter().enumerate() {
        if !sensor.alpha.is_finite() {
            violations.push(Violation::Nonfinite(format!("sensor {i} azimuth")));
        }
        if !sensor.d.is_finite() {
            violations.push(Violation::Nonfinite(format!("sensor {i} range")));
        } else if !(sensor.d > T::zero()) {
            violations.push(Violation::NonpositiveRange(i));
        }
    }

    for m in s.combo.modalities() {
        let (std, name) = s.noise.std_for(m);
        if !std.is_finite() {
            violations.push(Violation::Nonfinite(name.into()));
        } else if !(std > T::zero()) {
            violations.push(Violation::NonpositiveStd(name));
        }
    }
    if s.combo.contains(Modality::Rss) {
        if !s.noise.xi.is_finite() {
            violations.push(Violation::Nonfinite("xi".into()));
        }
        if !s.noise.p0.is_finite() {
            violations.push(Violation::Nonfinite("p0".into()));
        }
    }

    ValidationReport { violations }
}
