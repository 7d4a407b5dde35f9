//! Optimal-geometry constraint groups and their residuals.
//!
//! * G1: Σ sin αᵢ = 0, Σ cos αᵢ = 0
//! * G2: Σ sin 2αᵢ = 0, Σ cos 2αᵢ = 0
//! * G3: Σ sin 2αᵢ/dᵢ² = 0, Σ cos 2αᵢ/dᵢ² = 0
//!
//! TDOA contributes G1 and G2, TOA contributes G2, AOA and RSS each contribute G3.

use std::fmt;

use crate::model::{Geometry, MeasurementCombo, Modality};
use crate::scalar::Scalar;

/// Satisfaction tolerance on the (unnormalized) residual sums.
pub const DEFAULT_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    G1,
    G2,
    G3,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Group::G1 => "G1",
            Group::G2 => "G2",
            Group::G3 => "G3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConstraintSet {
    pub g1: bool,
    pub g2: bool,
    pub g3: bool,
}

impl ConstraintSet {
    pub fn union(self, other: ConstraintSet) -> ConstraintSet {
        ConstraintSet {
            g1: self.g1 || other.g1,
            g2: self.g2 || other.g2,
            g3: self.g3 || other.g3,
        }
    }

    pub fn groups(&self) -> Vec<Group> {
        let mut v = Vec::new();
        if self.g1 {
            v.push(Group::G1);
        }
        if self.g2 {
            v.push(Group::G2);
        }
        if self.g3 {
            v.push(Group::G3);
        }
        v
    }

    pub fn all() -> Self {
        ConstraintSet {
            g1: true,
            g2: true,
            g3: true,
        }
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.groups().iter().map(|g| g.to_string()).collect();
        f.write_str(&names.join("+"))
    }
}

/// Constraints a single modality generates.
pub fn modality_constraints(m: Modality) -> ConstraintSet {
    match m {
        Modality::Tdoa => ConstraintSet {
            g1: true,
            g2: true,
            g3: false,
        },
        Modality::Toa => ConstraintSet {
            g1: false,
            g2: true,
            g3: false,
        },
        Modality::Aoa | Modality::Rss => ConstraintSet {
            g1: false,
            g2: false,
            g3: true,
        },
    }
}

pub fn active_constraints(combo: MeasurementCombo) -> ConstraintSet {
    combo
        .modalities()
        .map(modality_constraints)
        .fold(ConstraintSet::default(), ConstraintSet::union)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow<T> {
    pub name: &'static str,
    pub group: Group,
    /// The literal sum.
    pub value: T,
    /// G3 sums multiplied by max dᵢ²; equal to `value` for G1 and G2.
    pub scaled: T,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport<T> {
    pub rows: Vec<ConstraintRow<T>>,
    /// ∞-norm over the `scaled` column.
    pub inf_norm: T,
    /// ∞-norm over the raw sums.
    pub raw_inf_norm: T,
    pub tolerance: T,
    pub satisfied: bool,
}

impl<T: Scalar> ConstraintReport<T> {
    pub fn group_inf_norm(&self, groups: &[Group]) -> T {
        self.rows
            .iter()
            .filter(|r| groups.contains(&r.group))
            .fold(T::zero(), |m, r| m.max(r.scaled.abs()))
    }
}

pub fn residuals<T: Scalar>(
    geometry: &Geometry<T>,
    set: ConstraintSet,
    tolerance: T,
) -> ConstraintReport<T> {
    let z = T::zero();
    let (mut s1, mut c1, mut s2, mut c2, mut s2d, mut c2d) = (z, z, z, z, z, z);
    let mut max_d2 = z;
    for sensor in geometry.sensors() {
        let a = sensor.alpha();
        let (s, c) = a.sin_cos();
        let (ss, cc) = (a + a).sin_cos();
        let d2 = sensor.d() * sensor.d();
        s1 = s1 + s;
        c1 = c1 + c;
        s2 = s2 + ss;
        c2 = c2 + cc;
        s2d = s2d + ss / d2;
        c2d = c2d + cc / d2;
        max_d2 = max_d2.max(d2);
    }

    let mut rows = Vec::new();
    let mut push = |name, group, value: T, scaled: T| {
        rows.push(ConstraintRow {
            name,
            group,
            value,
            scaled,
            pass: scaled.abs() < tolerance,
        })
    };
    if set.g1 {
        push("sum_sin", Group::G1, s1, s1);
        push("sum_cos", Group::G1, c1, c1);
    }
    if set.g2 {
        push("sum_sin2", Group::G2, s2, s2);
        push("sum_cos2", Group::G2, c2, c2);
    }
    if set.g3 {
        push("sum_sin2_over_d2", Group::G3, s2d, s2d * max_d2);
        push("sum_cos2_over_d2", Group::G3, c2d, c2d * max_d2);
    }

    let inf_norm = rows.iter().fold(z, |m, r| m.max(r.scaled.abs()));
    let raw_inf_norm = rows.iter().fold(z, |m, r| m.max(r.value.abs()));
    ConstraintReport {
        rows,
        inf_norm,
        raw_inf_norm,
        tolerance,
        satisfied: inf_norm < tolerance,
    }
}

/// Circular gaps (degrees) between consecutive sorted azimuths.
pub fn angular_gaps_deg<T: Scalar>(alphas: &[T]) -> Vec<T> {
    if alphas.is_empty() {
        return Vec::new();
    }
    let mut sorted: Vec<T> = alphas.iter().map(|a| a.to_degrees()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut gaps: Vec<T> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(sorted[0] + T::lit(360.0) - sorted[sorted.len() - 1]);
    gaps
}

/// Largest deviation of any circular gap from 360°/N.
pub fn max_gap_error_deg<T: Scalar>(alphas: &[T]) -> T {
    let n = T::from_usize(alphas.len().max(1)).expect("usize fits");
    let ideal = T::lit(360.0) / n;
    angular_gaps_deg(alphas)
        .into_iter()
        .fold(T::zero(), |m, g| m.max((g - ideal).abs()))
}

fn uaa_angles<T: Scalar>(alphas: &[T], tol_deg: T) -> bool {
    alphas.len() >= 3 && max_gap_error_deg(alphas) <= tol_deg
}

/// True iff the sorted circular azimuth gaps are all within `tol_deg` of 360°/N.
pub fn is_uaa<T: Scalar>(geometry: &Geometry<T>, tol_deg: T) -> bool {
    uaa_angles(&geometry.alphas(), tol_deg)
}

/// Splits sensors into groups of equal range (exact match), in first-seen order.
pub fn range_groups<T: Scalar>(geometry: &Geometry<T>) -> Vec<Vec<usize>> {
    let mut groups: Vec<(T, Vec<usize>)> = Vec::new();
    for (i, s) in geometry.sensors().iter().enumerate() {
        match groups.iter_mut().find(|(d, _)| *d == s.d()) {
            Some((_, idx)) => idx.push(i),
            None => groups.push((s.d(), vec![i])),
        }
    }
    groups.into_iter().map(|(_, idx)| idx).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupGapStats<T> {
    pub range: T,
    pub members: Vec<usize>,
    pub gaps_deg: Vec<T>,
    pub max_gap_error_deg: T,
}

/// Gap statistics per equal-range sensor group.
pub fn group_gap_stats<T: Scalar>(geometry: &Geometry<T>) -> Vec<GroupGapStats<T>> {
    let alphas = geometry.alphas();
    range_groups(geometry)
        .into_iter()
        .map(|members| {
            let a: Vec<T> = members.iter().map(|&i| alphas[i]).collect();
            GroupGapStats {
                range: geometry.sensors()[members[0]].d(),
                gaps_deg: angular_gaps_deg(&a),
                max_gap_error_deg: max_gap_error_deg(&a),
                members,
            }
        })
        .collect()
}
