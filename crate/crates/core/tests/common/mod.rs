#![allow(dead_code)]

use placecrb::{Geometry, MeasurementCombo, NoiseModel, Scenario, SensorPolar, SourcePosition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn case1_noise() -> NoiseModel {
    NoiseModel::new(0.5, 1.0, 1.0, 1.5, 1000.0, 1.0)
}

pub fn case2_noise() -> NoiseModel {
    NoiseModel::new(1.0, 2.0, 2.0, 2.0, 1000.0, 1.0)
}

pub fn uniform(angles_deg: &[f64], noise: NoiseModel) -> Scenario {
    Scenario::new(
        Geometry::from_degrees(angles_deg, 1000.0).unwrap(),
        noise,
        MeasurementCombo::all(),
    )
}

pub fn ranged(angles_deg: &[f64], ranges: &[f64], noise: NoiseModel) -> Scenario {
    Scenario::new(
        Geometry::from_degrees_ranges(angles_deg, ranges).unwrap(),
        noise,
        MeasurementCombo::all(),
    )
}

/// Random scenario: N in [3,10], ranges in [100,5000] m, positive stds.
pub fn random_scenario(rng: &mut ChaCha8Rng, combo: MeasurementCombo) -> Scenario {
    let n = rng.random_range(3..=10);
    let sensors = (0..n)
        .map(|_| {
            SensorPolar::new(
                rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                rng.random_range(100.0..5000.0),
            )
            .unwrap()
        })
        .collect();
    let geometry = Geometry::new(SourcePosition::origin(), sensors).unwrap();
    let noise = NoiseModel::new(
        rng.random_range(0.1..3.0),
        rng.random_range(0.2..5.0),
        rng.random_range(0.2..4.0),
        rng.random_range(0.2..4.0),
        1000.0,
        rng.random_range(1.0..4.0),
    );
    Scenario::new(geometry, noise, combo)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
