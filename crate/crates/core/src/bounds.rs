//! Analytic smallest tr(CRB) for a measurement combination.
//!
//! Every bound has the form `4 / (H·N + L·Σ 1/dᵢ²)` where `H` collects the
//! range-independent radial weights (TDOA, TOA) and `L` the range-weighted
//! ones (AOA, RSS). For the seven TDOA-based combinations these are O₁…O₇.

use crate::error::{Error, Result};
use crate::fim::InfoWeights;
use crate::model::{Geometry, MeasurementCombo, Modality, NoiseModel, Scenario};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs<T> {
    /// H = `1[TDOA]`/σ² + `1[TOA]`·4/γ² (1/m²); `1[·]` is 1 when the modality is active.
    pub h: T,
    /// L = `1[AOA]`/ρ² + `1[RSS]`·A²/δ².
    pub l: T,
    /// Σ 1/dᵢ² (1/m²).
    pub inv_d2_sum: T,
    pub n: usize,
}

impl<T: Scalar> BoundInputs<T> {
    pub fn of(s: &Scenario<T>) -> Self {
        let w = InfoWeights::of(s);
        Self {
            h: w.h(),
            l: w.l(),
            inv_d2_sum: inv_d2_sum(&s.geometry),
            n: s.geometry.n(),
        }
    }
}

pub fn inv_d2_sum<T: Scalar>(g: &Geometry<T>) -> T {
    g.sensors()
        .iter()
        .fold(T::zero(), |acc, s| acc + T::one() / (s.d() * s.d()))
}

/// `4 / (h·n + l·Σ1/dᵢ²)` for any combination.
pub fn generalized_bound<T: Scalar>(inputs: &BoundInputs<T>) -> Result<T> {
    let n = T::from_usize(inputs.n).expect("usize fits");
    let denom = inputs.h * n + inputs.l * inputs.inv_d2_sum;
    if !(denom > T::zero()) || !denom.is_finite() {
        return Err(Error::ZeroInformation);
    }
    Ok(T::lit(4.0) / denom)
}

/// O₁…O₇; only defined for combinations containing TDOA.
pub fn optimal_bound<T: Scalar>(s: &Scenario<T>) -> Result<T> {
    if !s.combo.contains(Modality::Tdoa) {
        return Err(Error::UnsupportedCombo {
            combo: s.combo.to_string(),
        });
    }
    generalized_bound(&BoundInputs::of(s))
}

/// `Some(k)` when `combo` is the TDOA-based combination labelled Oₖ.
pub fn bound_label(combo: MeasurementCombo) -> Option<usize> {
    MeasurementCombo::tdoa_combos()
        .iter()
        .position(|c| *c == combo)
        .map(|i| i + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow<T> {
    pub combo: MeasurementCombo,
    /// Oₖ index, or `None` for combinations outside the TDOA family.
    pub label: Option<usize>,
    pub inputs: BoundInputs<T>,
    pub bound: T,
}

impl<T> BoundRow<T> {
    pub fn name(&self) -> String {
        match self.label {
            Some(k) => format!("O{k}"),
            None => "extension".to_string(),
        }
    }
}

/// Bounds for the seven TDOA-based combinations (plus the non-TDOA
/// extensions when `include_extensions`), sorted ascending.
pub fn bound_ordering_report<T: Scalar>(
    noise: &NoiseModel<T>,
    geometry: &Geometry<T>,
    include_extensions: bool,
) -> Vec<BoundRow<T>> {
    let combos: Vec<MeasurementCombo> = if include_extensions {
        let mut v = MeasurementCombo::tdoa_combos().to_vec();
        v.extend(
            MeasurementCombo::all_combos()
                .into_iter()
                .filter(|c| bound_label(*c).is_none()),
        );
        v
    } else {
        MeasurementCombo::tdoa_combos().to_vec()
    };

    let mut rows: Vec<BoundRow<T>> = combos
        .into_iter()
        .filter_map(|combo| {
            let s = Scenario::new(geometry.clone(), *noise, combo);
            let inputs = BoundInputs::of(&s);
            generalized_bound(&inputs).ok().map(|bound| BoundRow {
                combo,
                label: bound_label(combo),
                inputs,
                bound,
            })
        })
        .collect();
    rows.sort_by(|a, b| {
        a.bound
            .partial_cmp(&b.bound)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.label.unwrap_or(usize::MAX).cmp(&b.label.unwrap_or(usize::MAX)))
    });
    rows
}
