//! Fisher information for the 2-D source position.
//!
//! Two assembly routes are provided and cross-checked in tests:
//! [`assemble_fim_direct`] sums `JᵀΣ⁻¹J` over the active modality blocks, and
//! [`assemble_fim_closed_form`] evaluates the per-entry trigonometric sums.
//!
//! Measurement means and their gradients with respect to the source `s`,
//! with `uᵢ = (cos αᵢ, sin αᵢ)`:
//!
//! | modality | mean            | Jacobian row              | noise covariance       |
//! |----------|-----------------|---------------------------|------------------------|
//! | TDOA     | `dᵢ − d_ref`    | `uᵢ − u_ref`              | `σ²(I + 11ᵀ)`, N−1 rows |
//! | AOA      | `αᵢ`            | `(−sin αᵢ, cos αᵢ)/dᵢ`    | `ρ²I`                  |
//! | RSS      | `P₀ − 10ξ log₁₀ dᵢ` | `A·uᵢ/dᵢ`             | `δ²I`                  |
//! | TOA      | `2dᵢ`           | `2uᵢ`                     | `γ²I`                  |
//!
//! The TDOA block models each sensor's range reading as carrying independent
//! `N(0, σ²)` noise, so differences against the shared reference are
//! correlated. Its inverse is `(1/σ²)(I − 11ᵀ/N)`, which gives the TDOA
//! information `(1/σ²)(Σ uᵢuᵢᵀ − (Σuᵢ)(Σuᵢ)ᵀ/N)`.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::{Geometry, Modality, NoiseModel, Scenario};
use crate::scalar::Scalar;

/// Symmetric 2×2 information matrix `[[phi11, phi12], [phi12, phi22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Fim<T> {
    pub phi11: T,
    pub phi12: T,
    pub phi22: T,
}

impl<T: Scalar> Fim<T> {
    pub fn new(phi11: T, phi12: T, phi22: T) -> Self {
        Self { phi11, phi12, phi22 }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn trace(&self) -> T {
        self.phi11 + self.phi22
    }

    pub fn det(&self) -> T {
        self.phi11 * self.phi22 - self.phi12 * self.phi12
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [T; 2] {
        let half = T::lit(0.5);
        let mean = half * (self.phi11 + self.phi22);
        let diff = half * (self.phi11 - self.phi22);
        let r = diff.hypot(self.phi12);
        [mean - r, mean + r]
    }

    /// Fails with `SingularFim` when the determinant is non-positive or
    /// negligible against `trace²` at working precision.
    pub fn check_invertible(&self) -> Result<()> {
        let det = self.det();
        let tr = self.trace();
        let floor = T::lit(64.0) * T::epsilon() * tr * tr;
        if !det.is_finite() || !tr.is_finite() || det <= T::zero() || det <= floor {
            return Err(Error::SingularFim {
                det: det.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// CRB = F⁻¹ as `(c11, c12, c22)`.
    pub fn inverse(&self) -> Result<Fim<T>> {
        self.check_invertible()?;
        let det = self.det();
        Ok(Fim::new(self.phi22 / det, -self.phi12 / det, self.phi11 / det))
    }

    /// tr(F⁻¹) in m².
    pub fn tr_crb(&self) -> Result<T> {
        tr_crb(self)
    }

    pub fn as_matrix(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => self.phi11,
            (1, 1) => self.phi22,
            _ => self.phi12,
        })
    }

    /// Largest entrywise relative difference, scaled by the larger diagonal.
    pub fn rel_diff(&self, other: &Fim<T>) -> T {
        let scale = self
            .phi11
            .abs()
            .max(self.phi22.abs())
            .max(other.phi11.abs())
            .max(other.phi22.abs())
            .max(T::min_positive_value());
        let d = (self.phi11 - other.phi11)
            .abs()
            .max((self.phi12 - other.phi12).abs())
            .max((self.phi22 - other.phi22).abs());
        d / scale
    }
}

impl<T: Scalar> std::ops::Add for Fim<T> {
    type Output = Fim<T>;

    fn add(self, rhs: Fim<T>) -> Fim<T> {
        Fim::new(
            self.phi11 + rhs.phi11,
            self.phi12 + rhs.phi12,
            self.phi22 + rhs.phi22,
        )
    }
}

/// tr(F⁻¹) = (φ₁₁ + φ₂₂)/(φ₁₁φ₂₂ − φ₁₂²).
pub fn tr_crb<T: Scalar>(f: &Fim<T>) -> Result<T> {
    f.check_invertible()?;
    Ok(f.trace() / f.det())
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianBlock<T> {
    pub modality: Modality,
    pub matrix: DenseMatrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceBlock<T> {
    pub modality: Modality,
    pub matrix: DenseMatrix<T>,
}

/// Number of measurements a modality contributes for `n` sensors.
pub fn block_len(modality: Modality, n: usize) -> usize {
    match modality {
        Modality::Tdoa => n.saturating_sub(1),
        _ => n,
    }
}

pub fn jacobian<T: Scalar>(
    geometry: &Geometry<T>,
    modality: Modality,
    noise: &NoiseModel<T>,
) -> JacobianBlock<T> {
    let sensors = geometry.sensors();
    let trig: Vec<(T, T)> = sensors.iter().map(|s| s.alpha().sin_cos()).collect();
    let matrix = match modality {
        Modality::Tdoa => {
            let r = geometry.reference_index();
            let (sr, cr) = trig[r];
            let rows: Vec<usize> = (0..sensors.len()).filter(|&i| i != r).collect();
            DenseMatrix::from_fn(rows.len(), 2, |k, j| {
                let (s, c) = trig[rows[k]];
                if j == 0 {
                    c - cr
                } else {
                    s - sr
                }
            })
        }
        Modality::Aoa => DenseMatrix::from_fn(sensors.len(), 2, |i, j| {
            let (s, c) = trig[i];
            let d = sensors[i].d();
            if j == 0 {
                -s / d
            } else {
                c / d
            }
        }),
        Modality::Rss => {
            let a = noise.a();
            DenseMatrix::from_fn(sensors.len(), 2, |i, j| {
                let (s, c) = trig[i];
                let d = sensors[i].d();
                if j == 0 {
                    a * c / d
                } else {
                    a * s / d
                }
            })
        }
        Modality::Toa => DenseMatrix::from_fn(sensors.len(), 2, |i, j| {
            let (s, c) = trig[i];
            T::two() * if j == 0 { c } else { s }
        }),
    };
    JacobianBlock { modality, matrix }
}

pub fn covariance<T: Scalar>(
    modality: Modality,
    n_sensors: usize,
    noise: &NoiseModel<T>,
) -> CovarianceBlock<T> {
    let m = block_len(modality, n_sensors);
    let matrix = match modality {
        Modality::Tdoa => {
            let s2 = noise.sigma * noise.sigma;
            DenseMatrix::from_fn(m, m, |i, j| if i == j { s2 + s2 } else { s2 })
        }
        Modality::Aoa => DenseMatrix::identity(m).scale(noise.rho * noise.rho),
        Modality::Rss => DenseMatrix::identity(m).scale(noise.delta * noise.delta),
        Modality::Toa => DenseMatrix::identity(m).scale(noise.gamma * noise.gamma),
    };
    CovarianceBlock { modality, matrix }
}

/// Closed-form inverse of [`covariance`]; TDOA uses `(1/σ²)(I − 11ᵀ/N)`.
pub fn covariance_inverse<T: Scalar>(
    modality: Modality,
    n_sensors: usize,
    noise: &NoiseModel<T>,
) -> DenseMatrix<T> {
    let m = block_len(modality, n_sensors);
    let diag = |std: T| DenseMatrix::identity(m).scale(T::one() / (std * std));
    match modality {
        Modality::Tdoa => {
            let inv_s2 = T::one() / (noise.sigma * noise.sigma);
            let inv_n = T::one() / T::from_usize(n_sensors).expect("usize fits");
            DenseMatrix::from_fn(m, m, |i, j| {
                let delta = if i == j { T::one() } else { T::zero() };
                inv_s2 * (delta - inv_n)
            })
        }
        Modality::Aoa => diag(noise.rho),
        Modality::Rss => diag(noise.delta),
        Modality::Toa => diag(noise.gamma),
    }
}

/// `JᵀΣ⁻¹J` for one modality block.
pub fn modality_information<T: Scalar>(
    geometry: &Geometry<T>,
    modality: Modality,
    noise: &NoiseModel<T>,
) -> Fim<T> {
    let j = jacobian(geometry, modality, noise).matrix;
    let w = covariance_inverse(modality, geometry.n(), noise);
    let f = j.transpose().matmul(&w).matmul(&j);
    let half = T::lit(0.5);
    Fim::new(f[(0, 0)], half * (f[(0, 1)] + f[(1, 0)]), f[(1, 1)])
}

/// F = Σ over active modalities of `JᵀΣ⁻¹J`.
pub fn assemble_fim_direct<T: Scalar>(s: &Scenario<T>) -> Fim<T> {
    s.combo
        .modalities()
        .map(|m| modality_information(&s.geometry, m, &s.noise))
        .fold(Fim::zero(), |acc, f| acc + f)
}

/// The trigonometric sums the closed-form entries are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicSums<T> {
    /// Σ cos αᵢ
    pub b: T,
    /// Σ sin αᵢ
    pub c: T,
    /// Σ cos² αᵢ
    pub d: T,
    /// Σ sin² αᵢ
    pub e: T,
    /// Σ cos² αᵢ / dᵢ²
    pub k: T,
    /// Σ sin² αᵢ / dᵢ²
    pub g: T,
    /// Σ cos αᵢ sin αᵢ
    pub cs: T,
    /// Σ cos αᵢ sin αᵢ / dᵢ²
    pub cs_d2: T,
}

impl<T: Scalar> HarmonicSums<T> {
    pub fn of(geometry: &Geometry<T>) -> Self {
        let z = T::zero();
        let mut h = HarmonicSums {
            b: z,
            c: z,
            d: z,
            e: z,
            k: z,
            g: z,
            cs: z,
            cs_d2: z,
        };
        for sensor in geometry.sensors() {
            let (s, c) = sensor.alpha().sin_cos();
            let inv_d2 = T::one() / (sensor.d() * sensor.d());
            h.b = h.b + c;
            h.c = h.c + s;
            h.d = h.d + c * c;
            h.e = h.e + s * s;
            h.k = h.k + c * c * inv_d2;
            h.g = h.g + s * s * inv_d2;
            h.cs = h.cs + c * s;
            h.cs_d2 = h.cs_d2 + c * s * inv_d2;
        }
        h
    }
}

/// Gated modality weights entering the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoWeights<T> {
    /// 1/σ² if TDOA active.
    pub tdoa: T,
    /// 4/γ² if TOA active.
    pub toa: T,
    /// A²/δ² if RSS active.
    pub rss: T,
    /// 1/ρ² if AOA active.
    pub aoa: T,
    pub n: T,
}

impl<T: Scalar> InfoWeights<T> {
    pub fn of(s: &Scenario<T>) -> Self {
        let gate = |m: Modality, v: T| if s.combo.contains(m) { v } else { T::zero() };
        let nm = &s.noise;
        let a = nm.a();
        InfoWeights {
            tdoa: gate(Modality::Tdoa, T::one() / (nm.sigma * nm.sigma)),
            toa: gate(Modality::Toa, T::lit(4.0) / (nm.gamma * nm.gamma)),
            rss: gate(Modality::Rss, a * a / (nm.delta * nm.delta)),
            aoa: gate(Modality::Aoa, T::one() / (nm.rho * nm.rho)),
            n: T::from_usize(s.geometry.n()).expect("usize fits"),
        }
    }

    /// Range-independent radial weight H = `1[TDOA]`/σ² + `1[TOA]`·4/γ².
    pub fn h(&self) -> T {
        self.tdoa + self.toa
    }

    /// Range-weighted coefficient L = `1[AOA]`/ρ² + `1[RSS]`·A²/δ².
    pub fn l(&self) -> T {
        self.aoa + self.rss
    }
}

pub fn assemble_fim_closed_form<T: Scalar>(s: &Scenario<T>) -> Fim<T> {
    let w = InfoWeights::of(s);
    let h = HarmonicSums::of(&s.geometry);
    let centering = w.tdoa / w.n;
    let phi11 = w.h() * h.d + w.rss * h.k + w.aoa * h.g - centering * h.b * h.b;
    let phi22 = w.h() * h.e + w.rss * h.g + w.aoa * h.k - centering * h.c * h.c;
    let phi12 = w.h() * h.cs + (w.rss - w.aoa) * h.cs_d2 - centering * h.b * h.c;
    Fim::new(phi11, phi12, phi22)
}
