//! Monte Carlo validation: noisy measurement synthesis, a maximum-likelihood
//! position estimator, and MSE sweeps over the TDOA noise level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fim::{assemble_fim_direct, block_len};
use crate::linalg::DenseMatrix;
use crate::model::{Geometry, MeasurementCombo, Modality, NoiseModel, Scenario, SourcePosition};
use crate::scalar::wrap_angle;

/// Per-modality measurement blocks; inactive modalities are `None`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementVector {
    /// Range differences against the reference sensor (m), N−1 entries in
    /// sensor order with the reference skipped.
    pub tdoa: Option<Vec<f64>>,
    /// Azimuths (rad).
    pub aoa: Option<Vec<f64>>,
    /// Received powers.
    pub rss: Option<Vec<f64>>,
    /// Round-trip ranges (m).
    pub toa: Option<Vec<f64>>,
}

impl MeasurementVector {
    pub fn block(&self, m: Modality) -> Option<&[f64]> {
        match m {
            Modality::Tdoa => self.tdoa.as_deref(),
            Modality::Aoa => self.aoa.as_deref(),
            Modality::Rss => self.rss.as_deref(),
            Modality::Toa => self.toa.as_deref(),
        }
    }

    fn check_shape(&self, combo: MeasurementCombo, n: usize) -> Result<()> {
        for m in combo.modalities() {
            match self.block(m) {
                Some(b) if b.len() == block_len(m, n) => {}
                _ => return Err(Error::MeasurementShape(m)),
            }
        }
        Ok(())
    }
}

fn rss_mean(noise: &NoiseModel<f64>, range: f64) -> f64 {
    noise.p0 - 10.0 * noise.xi * range.log10()
}

/// Noise-free measurement means.
pub fn expected_measurements(s: &Scenario<f64>) -> MeasurementVector {
    let g = &s.geometry;
    let ranges = g.ranges();
    let r = g.reference_index();
    let active = |m| s.combo.contains(m);
    MeasurementVector {
        tdoa: active(Modality::Tdoa).then(|| {
            (0..g.n())
                .filter(|&i| i != r)
                .map(|i| ranges[i] - ranges[r])
                .collect()
        }),
        aoa: active(Modality::Aoa).then(|| g.alphas()),
        rss: active(Modality::Rss).then(|| ranges.iter().map(|&d| rss_mean(&s.noise, d)).collect()),
        toa: active(Modality::Toa).then(|| ranges.iter().map(|&d| 2.0 * d).collect()),
    }
}

/// Draws one noisy measurement vector.
///
/// TDOA noise is built from independent per-sensor range errors εᵢ ~ N(0, σ²)
/// as εᵢ − ε_ref, which has covariance σ²(I + 11ᵀ). The other blocks get
/// i.i.d. Gaussian noise with their modality's std. A zero std yields the
/// exact mean.
pub fn sample_measurements<R: Rng + ?Sized>(s: &Scenario<f64>, rng: &mut R) -> MeasurementVector {
    let mut m = expected_measurements(s);
    let n = s.geometry.n();
    let r = s.geometry.reference_index();
    let mut gauss = |std: f64| -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        std * z
    };
    let noise = s.noise;
    if let Some(tdoa) = m.tdoa.as_mut() {
        let eps: Vec<f64> = (0..n).map(|_| gauss(noise.sigma)).collect();
        let others = (0..n).filter(|&i| i != r);
        for (v, i) in tdoa.iter_mut().zip(others) {
            *v += eps[i] - eps[r];
        }
    }
    if let Some(aoa) = m.aoa.as_mut() {
        aoa.iter_mut().for_each(|v| *v += gauss(noise.rho));
    }
    if let Some(rss) = m.rss.as_mut() {
        rss.iter_mut().for_each(|v| *v += gauss(noise.delta));
    }
    if let Some(toa) = m.toa.as_mut() {
        toa.iter_mut().for_each(|v| *v += gauss(noise.gamma));
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleConfig {
    pub max_iterations: usize,
    /// Converged when an accepted update is shorter than this (m).
    pub step_tolerance: f64,
    /// Updates longer than this (m) are treated as divergence.
    pub divergence_limit: f64,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            step_tolerance: 1e-9,
            divergence_limit: 1e6,
        }
    }
}

struct NormalSystem {
    cost: f64,
    m11: f64,
    m12: f64,
    m22: f64,
    g1: f64,
    g2: f64,
}

/// Weighted least-squares normal equations at a candidate source position.
/// `cost` is the negative log-likelihood up to constants (½ rᵀΣ⁻¹r).
fn normal_system(
    m: &MeasurementVector,
    s: &Scenario<f64>,
    sensors: &[(f64, f64)],
    pos: (f64, f64),
) -> NormalSystem {
    let mut sys = NormalSystem {
        cost: 0.0,
        m11: 0.0,
        m12: 0.0,
        m22: 0.0,
        g1: 0.0,
        g2: 0.0,
    };
    let mut add_row = |w: f64, r: f64, jx: f64, jy: f64| {
        sys.cost += 0.5 * w * r * r;
        sys.m11 += w * jx * jx;
        sys.m12 += w * jx * jy;
        sys.m22 += w * jy * jy;
        sys.g1 += w * jx * r;
        sys.g2 += w * jy * r;
    };
    let geo: Vec<(f64, f64, f64)> = sensors
        .iter()
        .map(|&(px, py)| {
            let (dx, dy) = (pos.0 - px, pos.1 - py);
            (dx, dy, dx.hypot(dy))
        })
        .collect();
    let noise = &s.noise;

    if let Some(aoa) = m.aoa.as_deref().filter(|_| s.combo.contains(Modality::Aoa)) {
        let w = 1.0 / (noise.rho * noise.rho);
        for (&z, &(dx, dy, r)) in aoa.iter().zip(&geo) {
            let res = wrap_angle(z - dy.atan2(dx));
            add_row(w, res, -dy / (r * r), dx / (r * r));
        }
    }
    if let Some(rss) = m.rss.as_deref().filter(|_| s.combo.contains(Modality::Rss)) {
        let w = 1.0 / (noise.delta * noise.delta);
        let a = noise.a();
        for (&z, &(dx, dy, r)) in rss.iter().zip(&geo) {
            add_row(w, z - rss_mean(noise, r), a * dx / (r * r), a * dy / (r * r));
        }
    }
    if let Some(toa) = m.toa.as_deref().filter(|_| s.combo.contains(Modality::Toa)) {
        let w = 1.0 / (noise.gamma * noise.gamma);
        for (&z, &(dx, dy, r)) in toa.iter().zip(&geo) {
            add_row(w, z - 2.0 * r, 2.0 * dx / r, 2.0 * dy / r);
        }
    }

    if let Some(tdoa) = m.tdoa.as_deref().filter(|_| s.combo.contains(Modality::Tdoa)) {
        // W = (1/σ²)(I − 11ᵀ/N)
        let w = 1.0 / (noise.sigma * noise.sigma);
        let n = sensors.len() as f64;
        let rf = s.geometry.reference_index();
        let (rdx, rdy, rr) = geo[rf];
        let (ux_r, uy_r) = (rdx / rr, rdy / rr);
        let (mut sr, mut sjx, mut sjy) = (0.0, 0.0, 0.0);
        let others = (0..sensors.len()).filter(|&i| i != rf);
        for (&z, i) in tdoa.iter().zip(others) {
            let (dx, dy, r) = geo[i];
            let res = z - (r - rr);
            let (jx, jy) = (dx / r - ux_r, dy / r - uy_r);
            sys.cost += 0.5 * w * res * res;
            sys.m11 += w * jx * jx;
            sys.m12 += w * jx * jy;
            sys.m22 += w * jy * jy;
            sys.g1 += w * jx * res;
            sys.g2 += w * jy * res;
            sr += res;
            sjx += jx;
            sjy += jy;
        }
        sys.cost -= 0.5 * w * sr * sr / n;
        sys.m11 -= w * sjx * sjx / n;
        sys.m12 -= w * sjx * sjy / n;
        sys.m22 -= w * sjy * sjy / n;
        sys.g1 -= w * sjx * sr / n;
        sys.g2 -= w * sjy * sr / n;
    }
    sys
}

/// Maximum-likelihood source estimate by damped Gauss-Newton (Levenberg-Marquardt)
/// on the Gaussian negative log-likelihood, starting from `init`.
pub fn mle_estimate(
    m: &MeasurementVector,
    s: &Scenario<f64>,
    init: SourcePosition<f64>,
) -> Result<SourcePosition<f64>> {
    mle_estimate_with(m, s, init, &MleConfig::default())
}

pub fn mle_estimate_with(
    m: &MeasurementVector,
    s: &Scenario<f64>,
    init: SourcePosition<f64>,
    cfg: &MleConfig,
) -> Result<SourcePosition<f64>> {
    m.check_shape(s.combo, s.geometry.n())?;
    let sensors = s.geometry.to_cartesian();
    let mut pos = (init.sx, init.sy);
    let mut sys = normal_system(m, s, &sensors, pos);
    let mut lambda = 1e-6;

    for _ in 0..cfg.max_iterations {
        let a11 = sys.m11 * (1.0 + lambda);
        let a22 = sys.m22 * (1.0 + lambda);
        let det = a11 * a22 - sys.m12 * sys.m12;
        if !det.is_finite() || det <= 1e-14 * (a11 * a11 + a22 * a22) {
            return Err(Error::Diverged("singular normal equations".into()));
        }
        let dx = (a22 * sys.g1 - sys.m12 * sys.g2) / det;
        let dy = (a11 * sys.g2 - sys.m12 * sys.g1) / det;
        let step = dx.hypot(dy);
        if !step.is_finite() || step > cfg.divergence_limit {
            return Err(Error::Diverged(format!("update of {step:e} m")));
        }
        let cand = (pos.0 + dx, pos.1 + dy);
        let cand_sys = normal_system(m, s, &sensors, cand);
        if cand_sys.cost <= sys.cost {
            pos = cand;
            sys = cand_sys;
            lambda = (lambda * 0.1).max(1e-12);
            if step < cfg.step_tolerance {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    Ok(SourcePosition::new(pos.0, pos.1))
}

/// Aggregate of one Monte Carlo cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialStats {
    pub trials: usize,
    pub excluded: usize,
    /// Mean squared position error over retained trials (m²).
    pub mse: f64,
    pub mean_error: (f64, f64),
    /// Error covariance `(xx, xy, yy)` about the mean error.
    pub covariance: (f64, f64, f64),
}

impl TrialStats {
    /// Pearson correlation of the x and y errors.
    pub fn correlation(&self) -> f64 {
        let (xx, xy, yy) = self.covariance;
        xy / (xx * yy).sqrt()
    }

    pub fn excluded_fraction(&self) -> f64 {
        self.excluded as f64 / self.trials.max(1) as f64
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Runs `trials` independent estimate trials (initialized at the true source).
/// Trial `k` draws from substream `k` of `seed`, so the result does not depend
/// on how the trials are scheduled.
pub fn monte_carlo(s: &Scenario<f64>, trials: usize, seed: u64) -> Result<TrialStats> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    let truth = s.geometry.source();
    let errors: Vec<Option<(f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(seed, k);
            let m = sample_measurements(s, &mut rng);
            mle_estimate(&m, s, truth)
                .ok()
                .map(|est| (est.sx - truth.sx, est.sy - truth.sy))
        })
        .collect();

    let kept: Vec<(f64, f64)> = errors.iter().flatten().copied().collect();
    let excluded = trials - kept.len();
    let n = kept.len().max(1) as f64;
    let (sx, sy, ss) = kept
        .iter()
        .fold((0.0, 0.0, 0.0), |(a, b, c), &(ex, ey)| (a + ex, b + ey, c + ex * ex + ey * ey));
    let (mx, my) = (sx / n, sy / n);
    let (cxx, cxy, cyy) = kept.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &(ex, ey)| {
        let (x, y) = (ex - mx, ey - my);
        (a + x * x, b + x * y, c + y * y)
    });
    Ok(TrialStats {
        trials,
        excluded,
        mse: if kept.is_empty() { f64::NAN } else { ss / n },
        mean_error: (mx, my),
        covariance: (cxx / n, cxy / n, cyy / n),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub trials: usize,
    pub seed: u64,
    /// TDOA σ values (m) to sweep.
    pub sigma_sweep: Vec<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 0,
            sigma_sweep: vec![0.25, 0.5, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedGeometry {
    pub id: String,
    pub geometry: Geometry<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sigma: f64,
    pub geometry_id: String,
    pub mse: f64,
    pub tr_crb: f64,
    pub excluded: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub const HEADER: [&'static str; 5] =
        ["sigma_m", "geometry_id", "mse_m2", "tr_crb_m2", "excluded_trials"];

    /// Geometry id with the smallest MSE for each σ, in sweep order.
    pub fn winners(&self) -> Vec<(f64, String)> {
        let mut out: Vec<(f64, String, f64)> = Vec::new();
        for row in &self.rows {
            match out.iter_mut().find(|(s, _, _)| *s == row.sigma) {
                Some(entry) if row.mse < entry.2 => {
                    entry.1 = row.geometry_id.clone();
                    entry.2 = row.mse;
                }
                Some(_) => {}
                None => out.push((row.sigma, row.geometry_id.clone(), row.mse)),
            }
        }
        out.into_iter().map(|(s, id, _)| (s, id)).collect()
    }

    pub fn max_excluded_fraction(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.excluded as f64 / r.trials.max(1) as f64)
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.sigma.to_string(),
                r.geometry_id.clone(),
                r.mse.to_string(),
                r.tr_crb.to_string(),
                r.excluded.to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Empirical MSE and tr(CRB) for every (σ, geometry) cell.
pub fn mse_sweep(
    geometries: &[NamedGeometry],
    noise: &NoiseModel<f64>,
    combo: MeasurementCombo,
    cfg: &McConfig,
) -> Result<SweepTable> {
    if geometries.len() < 2 {
        return Err(Error::InvalidConfig(
            "sweep needs at least two geometries".into(),
        ));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(cfg.sigma_sweep.len() * geometries.len());
    for &sigma in &cfg.sigma_sweep {
        let noise = noise.with_sigma(sigma);
        for ng in geometries {
            let s = Scenario::new(ng.geometry.clone(), noise, combo);
            let tr_crb = assemble_fim_direct(&s).tr_crb()?;
            let stats = monte_carlo(&s, cfg.trials, cfg.seed)?;
            rows.push(SweepRow {
                sigma,
                geometry_id: ng.id.clone(),
                mse: stats.mse,
                tr_crb,
                excluded: stats.excluded,
                trials: cfg.trials,
            });
        }
    }
    Ok(SweepTable { rows })
}

/// Sample covariance of the TDOA block over `draws` independent draws.
pub fn empirical_tdoa_covariance(s: &Scenario<f64>, draws: usize, seed: u64) -> DenseMatrix<f64> {
    let m = s.geometry.n() - 1;
    let mean = expected_measurements(s).tdoa.unwrap_or_else(|| vec![0.0; m]);
    let chunk = 4096;
    let partials: Vec<DenseMatrix<f64>> = (0..draws.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut acc = DenseMatrix::zeros(m, m);
            let mut rng = trial_rng(seed, c);
            for _ in (c * chunk)..((c + 1) * chunk).min(draws) {
                let v = sample_measurements(s, &mut rng).tdoa.expect("TDOA active");
                for i in 0..m {
                    for j in 0..m {
                        acc[(i, j)] += (v[i] - mean[i]) * (v[j] - mean[j]);
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = DenseMatrix::zeros(m, m);
    for p in &partials {
        for i in 0..m {
            for j in 0..m {
                total[(i, j)] += p[(i, j)];
            }
        }
    }
    total.scale(1.0 / draws as f64)
}
