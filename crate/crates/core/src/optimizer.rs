//! Gradient descent on tr(CRB) over sensor azimuths with ranges held fixed.
//!
//! Steps follow the normalized gradient. A step that fails to decrease the
//! objective (or lands on a singular FIM) is rejected and the step size halved;
//! an accepted step grows it by ×1.1 up to `max_step_size`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constraints::{active_constraints, residuals, ConstraintReport};
use crate::error::{Error, Result};
use crate::fim::{assemble_fim_closed_form, assemble_fim_direct, Fim, InfoWeights};
use crate::model::{Geometry, Scenario};
use crate::scalar::{wrap_angle, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientMode {
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig<T> {
    /// 0 echoes the initial geometry without descending.
    pub max_steps: usize,
    /// Initial step (radians along the normalized gradient).
    pub step_size: T,
    pub max_step_size: T,
    pub gradient_mode: GradientMode,
    /// Gradient-norm threshold.
    pub convergence_tol: T,
    pub fd_epsilon: T,
    /// Tolerance for the constraint report attached to the result.
    pub residual_tolerance: T,
}

impl<T: Scalar> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            max_steps: 10_000,
            step_size: T::lit(1e-3),
            max_step_size: T::lit(0.05),
            gradient_mode: GradientMode::Analytic,
            convergence_tol: T::lit(1e-10),
            fd_epsilon: T::lit(1e-6),
            residual_tolerance: T::lit(crate::constraints::DEFAULT_TOLERANCE),
        }
    }
}

impl<T: Scalar> OptimizerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.step_size) {
            return Err(Error::InvalidConfig("step_size must be > 0".into()));
        }
        if !pos(self.max_step_size) {
            return Err(Error::InvalidConfig("max_step_size must be > 0".into()));
        }
        if !pos(self.fd_epsilon) {
            return Err(Error::InvalidConfig("fd_epsilon must be > 0".into()));
        }
        if !(self.convergence_tol >= T::zero()) {
            return Err(Error::InvalidConfig("convergence_tol must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub step: usize,
    pub alphas: Vec<T>,
    pub tr_crb: T,
    pub residual_inf_norm: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Gradient norm below tolerance.
    GradientTolerance,
    /// No representable decrease left along the gradient.
    Stationary,
    StepLimit,
    /// Step size underflowed while rejecting singular-FIM candidates.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub records: Vec<StepRecord<T>>,
    pub final_geometry: Geometry<T>,
    pub final_tr_crb: T,
    pub final_gradient_norm: T,
    pub final_report: ConstraintReport<T>,
    pub iterations: usize,
    pub termination: Termination,
}

impl<T: Scalar> Trajectory<T> {
    pub fn converged(&self) -> bool {
        matches!(
            self.termination,
            Termination::GradientTolerance | Termination::Stationary
        )
    }

    /// `Err(Stall)` for stalled runs; the trajectory is otherwise returned as is.
    pub fn into_result(self) -> Result<Self> {
        if self.termination == Termination::Stalled {
            return Err(Error::Stall {
                step: T::lit(1e-15).to_f64_lossy(),
            });
        }
        Ok(self)
    }
}

/// tr(CRB) of the scenario geometry.
pub fn objective<T: Scalar>(s: &Scenario<T>) -> Result<T> {
    assemble_fim_direct(s).tr_crb()
}

fn closed_form_objective<T: Scalar>(s: &Scenario<T>, alphas: &[T]) -> Result<T> {
    let g = s.geometry.with_alphas(alphas)?;
    assemble_fim_closed_form(&s.with_geometry(g)).tr_crb()
}

/// ∂ tr(CRB)/∂αᵢ for every sensor.
pub fn gradient<T: Scalar>(s: &Scenario<T>, mode: GradientMode, fd_epsilon: T) -> Result<Vec<T>> {
    match mode {
        GradientMode::Analytic => analytic_gradient(s),
        GradientMode::FiniteDifference => fd_gradient(s, fd_epsilon),
    }
}

fn analytic_gradient<T: Scalar>(s: &Scenario<T>) -> Result<Vec<T>> {
    let f = assemble_fim_closed_form(s);
    let c = f.inverse()?;
    // (F⁻¹)² entries; d tr(F⁻¹) = −tr(F⁻¹ dF F⁻¹) = −Σ (F⁻²)ⱼₖ dFⱼₖ.
    let m11 = c.phi11 * c.phi11 + c.phi12 * c.phi12;
    let m12 = c.phi12 * (c.phi11 + c.phi22);
    let m22 = c.phi12 * c.phi12 + c.phi22 * c.phi22;

    let w = InfoWeights::of(s);
    let centering = w.tdoa / w.n;
    let (bx, by) = s
        .geometry
        .sensors()
        .iter()
        .fold((T::zero(), T::zero()), |(x, y), sensor| {
            let (sn, cs) = sensor.alpha().sin_cos();
            (x + cs, y + sn)
        });

    let two = T::two();
    Ok(s
        .geometry
        .sensors()
        .iter()
        .map(|sensor| {
            let a = sensor.alpha();
            let inv_d2 = T::one() / (sensor.d() * sensor.d());
            let radial = w.h() + w.rss * inv_d2;
            let tangential = w.aoa * inv_d2;
            let (s2, c2) = (a + a).sin_cos();
            let (sn, cs) = a.sin_cos();
            let k = radial - tangential;
            // derivative of u = (cos, sin) is (−sin, cos)
            let (ux, uy) = (-sn, cs);
            let d11 = -k * s2 - centering * two * bx * ux;
            let d22 = k * s2 - centering * two * by * uy;
            let d12 = k * c2 - centering * (bx * uy + by * ux);
            -(m11 * d11 + two * m12 * d12 + m22 * d22)
        })
        .collect())
}

fn fd_gradient<T: Scalar>(s: &Scenario<T>, eps: T) -> Result<Vec<T>> {
    let base = s.geometry.alphas();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[i] = plus[i] + eps;
        minus[i] = minus[i] - eps;
        let fp = closed_form_objective(s, &plus)?;
        let fm = closed_form_objective(s, &minus)?;
        out.push((fp - fm) / (eps + eps));
    }
    Ok(out)
}

fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

fn jitter_start<T: Scalar>(s: &Scenario<T>, seed: u64) -> Result<(Scenario<T>, T)> {
    match objective(s) {
        Ok(f) => return Ok((s.clone(), f)),
        Err(Error::SingularFim { .. }) => {}
        Err(e) => return Err(e),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = Error::SingularFim { det: 0.0 };
    for _ in 0..32 {
        let alphas: Vec<T> = s
            .geometry
            .alphas()
            .into_iter()
            .map(|a| a + T::lit(rng.random_range(-1e-3..1e-3)))
            .collect();
        let cand = s.with_geometry(s.geometry.with_alphas(&alphas)?);
        match objective(&cand) {
            Ok(f) => return Ok((cand, f)),
            Err(e) => last = e,
        }
    }
    Err(last)
}

enum Rejection {
    Increase,
    Singular,
}

pub fn optimize<T: Scalar>(
    s: &Scenario<T>,
    cfg: &OptimizerConfig<T>,
    rng_seed: u64,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let set = active_constraints(s.combo);
    let (start, mut value) = jitter_start(s, rng_seed)?;
    let mut current = start;
    let residual_norm =
        |g: &Geometry<T>| residuals(g, set, cfg.residual_tolerance).inf_norm;

    let mut records = vec![StepRecord {
        step: 0,
        alphas: current.geometry.alphas(),
        tr_crb: value,
        residual_inf_norm: residual_norm(&current.geometry),
    }];
    let mut step = cfg.step_size;
    let underflow = T::lit(1e-15);
    let mut termination = Termination::StepLimit;
    let mut grad_norm = T::nan();
    let mut iterations = 0;

    'outer: for it in 1..=cfg.max_steps {
        iterations = it;
        let grad = gradient(&current, cfg.gradient_mode, cfg.fd_epsilon)?;
        grad_norm = norm(&grad);
        if grad_norm < cfg.convergence_tol {
            termination = Termination::GradientTolerance;
            break;
        }
        let alphas = current.geometry.alphas();
        loop {
            let cand: Vec<T> = alphas
                .iter()
                .zip(&grad)
                .map(|(&a, &g)| wrap_angle(a - step * g / grad_norm))
                .collect();
            let cand_geom = current.geometry.with_alphas(&cand)?;
            let cand_scn = current.with_geometry(cand_geom);
            let rejection = match objective(&cand_scn) {
                Ok(fc) if fc < value => {
                    value = fc;
                    current = cand_scn;
                    step = (step * T::lit(1.1)).min(cfg.max_step_size);
                    records.push(StepRecord {
                        step: it,
                        alphas: cand,
                        tr_crb: value,
                        residual_inf_norm: residual_norm(&current.geometry),
                    });
                    break;
                }
                Ok(_) => Rejection::Increase,
                Err(Error::SingularFim { .. }) => Rejection::Singular,
                Err(e) => return Err(e),
            };
            step = step / T::two();
            if step < underflow {
                termination = match rejection {
                    Rejection::Singular => Termination::Stalled,
                    Rejection::Increase => Termination::Stationary,
                };
                break 'outer;
            }
        }
    }

    if termination != Termination::GradientTolerance {
        grad_norm = gradient(&current, cfg.gradient_mode, cfg.fd_epsilon)
            .map(|g| norm(&g))
            .unwrap_or(grad_norm);
    }
    let final_report = residuals(&current.geometry, set, cfg.residual_tolerance);
    Ok(Trajectory {
        records,
        final_geometry: current.geometry,
        final_tr_crb: value,
        final_gradient_norm: grad_norm,
        final_report,
        iterations,
        termination,
    })
}

/// Runs `starts` independent descents in parallel. Start 0 uses the scenario
/// azimuths; the others draw uniform azimuths from `rng_seed`. Results are
/// ordered by start index.
pub fn optimize_multistart<T: Scalar>(
    s: &Scenario<T>,
    cfg: &OptimizerConfig<T>,
    rng_seed: u64,
    starts: usize,
) -> Vec<Result<Trajectory<T>>> {
    (0..starts)
        .into_par_iter()
        .map(|k| {
            if k == 0 {
                return optimize(s, cfg, rng_seed);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(k as u64);
            let alphas: Vec<T> = (0..s.geometry.n())
                .map(|_| T::lit(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)))
                .collect();
            let g = s.geometry.with_alphas(&alphas)?;
            optimize(&s.with_geometry(g), cfg, rng_seed.wrapping_add(k as u64))
        })
        .collect()
}

/// Information matrix at the trajectory's final geometry.
pub fn final_fim<T: Scalar>(s: &Scenario<T>, t: &Trajectory<T>) -> Fim<T> {
    assemble_fim_direct(&s.with_geometry(t.final_geometry.clone()))
}
