//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::f64::consts::PI;
use std::time::Instant;

use placecrb::bounds::optimal_bound;
use placecrb::constraints::{
    active_constraints, group_gap_stats, max_gap_error_deg, residuals, ConstraintSet,
    Group,
};
use placecrb::fim::{assemble_fim_closed_form, assemble_fim_direct};
use placecrb::optimizer::{gradient, optimize, GradientMode};
use placecrb::simulate::{empirical_tdoa_covariance, monte_carlo, mse_sweep, McConfig, NamedGeometry};
use placecrb::{
    Geometry, MeasurementCombo, NoiseModel, OptimizerConfig, Scenario, SensorPolar,
    SourcePosition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn case1_noise() -> NoiseModel {
    NoiseModel::new(0.5, 1.0, 1.0, 1.5, 1000.0, 1.0)
}

fn case2_noise() -> NoiseModel {
    NoiseModel::new(1.0, 2.0, 2.0, 2.0, 1000.0, 1.0)
}

fn scenario(angles: &[f64], ranges: &[f64], noise: NoiseModel) -> Scenario {
    let geometry = match ranges {
        [d] => Geometry::from_degrees(angles, *d),
        _ => Geometry::from_degrees_ranges(angles, ranges),
    };
    Scenario::new(
        geometry.unwrap(),
        noise,
        MeasurementCombo::all(),
    )
}

fn random_geometry(rng: &mut ChaCha8Rng) -> Geometry {
    let n = rng.random_range(3..=10);
    let sensors = (0..n)
        .map(|_| SensorPolar::new(rng.random_range(-PI..PI), rng.random_range(100.0..5000.0)).unwrap())
        .collect();
    Geometry::new(SourcePosition::origin(), sensors).unwrap()
}

fn random_noise(rng: &mut ChaCha8Rng) -> NoiseModel {
    NoiseModel::new(
        rng.random_range(0.1..3.0),
        rng.random_range(0.2..5.0),
        rng.random_range(0.2..4.0),
        rng.random_range(0.2..4.0),
        1000.0,
        rng.random_range(1.0..4.0),
    )
}

fn bound_case(n: usize, noise: NoiseModel, expected: f64) -> Outcome {
    let angles: Vec<f64> = (0..n).map(|i| i as f64 * 360.0 / n as f64).collect();
    let s = scenario(&angles, &[1000.0], noise);
    match optimal_bound(&s) {
        Ok(b) => outcome((b - expected).abs() <= 5e-4, format!("O7 = {b:.6} (target {expected} ± 5e-4)")),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn criterion_1() -> Outcome {
    bound_case(3, case1_noise(), 0.2306)
}

fn criterion_2() -> Outcome {
    bound_case(4, case2_noise(), 0.4998)
}

fn criterion_3() -> Outcome {
    let inits: [[f64; 3]; 4] =
        [[75.0, 90.0, 105.0], [0.0, 40.0, 120.0], [80.0, -80.0, -100.0], [-20.0, -100.0, 190.0]];
    let mut pass = true;
    let mut parts = Vec::new();
    for init in inits {
        let s = scenario(&init, &[1000.0], case1_noise());
        let t0 = Instant::now();
        let t = optimize(&s, &OptimizerConfig::default(), 0).unwrap();
        let secs = t0.elapsed().as_secs_f64();
        let gap = max_gap_error_deg(&t.final_geometry.alphas());
        let ok = (t.final_tr_crb - 0.2306).abs() < 1e-3
            && t.final_report.inf_norm < 1e-2
            && gap <= 0.5
            && secs < 5.0;
        pass &= ok;
        parts.push(format!(
            "{init:?}: tr={:.6} res={:.1e} gap_err={gap:.4}° {secs:.2}s",
            t.final_tr_crb, t.final_report.inf_norm
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_4() -> Outcome {
    let cfg = OptimizerConfig::default();
    let mut parts = Vec::new();

    let s = scenario(&[0.0, 10.0, 20.0], &[1000.0, 1300.0, 1600.0], case1_noise());
    let t0 = Instant::now();
    let t = optimize(&s, &cfg, 0).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let g12 = t.final_report.group_inf_norm(&[Group::G1, Group::G2]);
    let gap = max_gap_error_deg(&t.final_geometry.alphas());
    let a_ok = g12 < 1e-2 && gap <= 1.0 && secs < 10.0;
    parts.push(format!("(a) G1+G2={g12:.1e} gap_err={gap:.3}° {secs:.2}s {}", verdict(a_ok)));

    let mut pass = a_ok;
    let ranges = [1000.0, 1000.0, 1000.0, 700.0, 700.0, 700.0];
    for (tag, init) in [
        ("(c)", [80.0, -80.0, -100.0, -20.0, 190.0, -100.0]),
        ("(d)", [90.0, 75.0, 105.0, -90.0, -150.0, -180.0]),
    ] {
        let s = scenario(&init, &ranges, case1_noise());
        let t0 = Instant::now();
        let t = optimize(&s, &cfg, 0).unwrap();
        let secs = t0.elapsed().as_secs_f64();
        let worst = group_gap_stats(&t.final_geometry)
            .iter()
            .map(|g| g.max_gap_error_deg)
            .fold(0.0, f64::max);
        let ok = t.converged() && worst <= 1.0 && secs < 10.0;
        pass &= ok;
        let angles: Vec<String> =
            t.final_geometry.alphas_deg().iter().map(|a| format!("{a:.2}")).collect();
        parts.push(format!(
            "{tag} tr={:.6} per-group gap_err={worst:.3}° angles=[{}] {secs:.2}s {}",
            t.final_tr_crb,
            angles.join(","),
            verdict(ok)
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let combo = MeasurementCombo::tdoa_combos()[k % 7];
        let s = Scenario::new(random_geometry(&mut rng), random_noise(&mut rng), combo);
        let a = assemble_fim_direct(&s);
        let b = assemble_fim_closed_form(&s);
        worst = worst.max(a.rel_diff(&b));
    }
    outcome(worst < 1e-9, format!("max relative difference {worst:.2e} over 1000 scenarios"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 100 {
        let combo = MeasurementCombo::tdoa_combos()[checked % 7];
        let s = Scenario::new(random_geometry(&mut rng), random_noise(&mut rng), combo);
        let (Ok(a), Ok(f)) = (
            gradient(&s, GradientMode::Analytic, 1e-6),
            gradient(&s, GradientMode::FiniteDifference, 1e-6),
        ) else {
            continue;
        };
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            continue;
        }
        let err = a.iter().zip(&f).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        worst = worst.max(err / scale);
        checked += 1;
    }
    outcome(worst < 1e-6, format!("max relative error {worst:.2e} over 100 scenarios"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for combo in MeasurementCombo::tdoa_combos() {
        for _ in 0..1000 {
            let s = Scenario::new(random_geometry(&mut rng), random_noise(&mut rng), combo);
            let bound = optimal_bound(&s).unwrap();
            if let Ok(tr) = assemble_fim_direct(&s).tr_crb() {
                min_slack = min_slack.min(tr - bound);
                if tr < bound - 1e-12 {
                    violations += 1;
                }
            }
        }
    }

    // Geometries meeting every active constraint: rotated uniform arrays at one
    // range, and pairs of uniform groups at two ranges.
    let mut worst_gap: f64 = 0.0;
    let mut achieved = 0;
    for combo in MeasurementCombo::tdoa_combos() {
        for _ in 0..50 {
            let n = rng.random_range(3..=8);
            let rot = rng.random_range(-180.0..180.0);
            let mut angles: Vec<f64> = (0..n).map(|i| rot + i as f64 * 360.0 / n as f64).collect();
            let mut ranges = vec![rng.random_range(100.0..5000.0); n];
            if rng.random_bool(0.5) {
                let m = rng.random_range(3..=6);
                let rot2 = rng.random_range(-180.0..180.0);
                angles.extend((0..m).map(|i| rot2 + i as f64 * 360.0 / m as f64));
                ranges.extend(vec![rng.random_range(100.0..5000.0); m]);
            }
            let s = Scenario::new(
                Geometry::from_degrees_ranges(&angles, &ranges).unwrap(),
                random_noise(&mut rng),
                combo,
            );
            let report = residuals(&s.geometry, active_constraints(combo), 1e-2);
            if report.raw_inf_norm >= 1e-9 {
                continue;
            }
            let tr = assemble_fim_direct(&s).tr_crb().unwrap();
            let bound = optimal_bound(&s).unwrap();
            worst_gap = worst_gap.max((tr - bound).abs() / bound);
            achieved += 1;
        }
    }
    outcome(
        violations == 0 && worst_gap < 1e-6 && achieved > 0,
        format!(
            "{violations} violations in 7000 geometries (min slack {min_slack:.2e}); \
             max relative gap {worst_gap:.2e} over {achieved} constraint-satisfying geometries"
        ),
    )
}

fn criterion_8() -> Outcome {
    let trials = 10_000;
    let s = scenario(&[150.0, -90.0, 30.0], &[1000.0], case1_noise());
    let tr = assemble_fim_direct(&s).tr_crb().unwrap();
    let stats = monte_carlo(&s, trials, 8).unwrap();
    let ratio = stats.mse / tr;
    let eff_ok = (0.9..=1.15).contains(&ratio);

    // Literal covariance ½(I + 11ᵀ)σ² for the range differences.
    let sigma2 = s.noise.sigma * s.noise.sigma;
    let m = s.geometry.n() - 1;
    let emp = empirical_tdoa_covariance(&s, trials, 8);
    let tol = 3.0 * sigma2 / (trials as f64).sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let target = if i == j { sigma2 } else { 0.5 * sigma2 };
            worst = worst.max((emp[(i, j)] - target).abs());
        }
    }
    let cov_ok = worst <= tol;
    outcome(
        eff_ok && cov_ok,
        format!(
            "MSE/tr = {:.4}/{tr:.4} = {ratio:.4} {}; TDOA covariance max |Δ| = {worst:.4} vs tol {tol:.4} {}",
            stats.mse,
            verdict(eff_ok),
            verdict(cov_ok)
        ),
    )
}

fn criterion_9() -> Outcome {
    let named = |id: &str, a: [f64; 3]| NamedGeometry {
        id: id.into(),
        geometry: Geometry::from_degrees(&a, 1000.0).unwrap(),
    };
    let geometries = [
        named("optimal", [150.0, -90.0, 30.0]),
        named("clustered", [75.0, 90.0, 105.0]),
        named("skewed", [0.0, 40.0, 120.0]),
    ];
    let cfg = McConfig { trials: 10_000, seed: 9, sigma_sweep: vec![0.25, 0.5, 1.0, 2.0] };
    let table = mse_sweep(&geometries, &case1_noise(), MeasurementCombo::all(), &cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for &sigma in &cfg.sigma_sweep {
        let row: Vec<_> = table.rows.iter().filter(|r| r.sigma == sigma).collect();
        let opt = row.iter().find(|r| r.geometry_id == "optimal").unwrap().mse;
        let best_other = row
            .iter()
            .filter(|r| r.geometry_id != "optimal")
            .map(|r| r.mse)
            .fold(f64::INFINITY, f64::min);
        pass &= opt < best_other;
        parts.push(format!("σ={sigma}: {opt:.4} vs {best_other:.4}"));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let [o1, o2, o3, o4, o5, o6, o7] = MeasurementCombo::tdoa_combos();
    let g12 = ConstraintSet { g1: true, g2: true, g3: false };
    let full = ConstraintSet::all();
    let pass = active_constraints(o1) == active_constraints(o2)
        && active_constraints(o3) == g12
        && [o1, o2, o4, o5, o6, o7].iter().all(|c| active_constraints(*c) == full);
    let listing: Vec<String> = MeasurementCombo::tdoa_combos()
        .iter()
        .map(|c| format!("{c}={}", active_constraints(*c)))
        .collect();
    outcome(pass, listing.join(", "))
}

fn verdict(ok: bool) -> &'static str {
    if ok { "ok" } else { "FAILED" }
}

fn main() {
    let criteria: [Check; 10] = [
        ("1 bound, three sensors", criterion_1),
        ("2 bound, four sensors", criterion_2),
        ("3 optimizer convergence, uniform ranges", criterion_3),
        ("4 optimizer, nonuniform ranges", criterion_4),
        ("5 closed-form vs direct FIM", criterion_5),
        ("6 analytic vs finite-difference gradient", criterion_6),
        ("7 lower bound and achievability", criterion_7),
        ("8 Monte Carlo efficiency and TDOA covariance", criterion_8),
        ("9 sigma sweep ordering", criterion_9),
        ("10 constraint attribution", criterion_10),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t0 = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {name}: {status} [{:.2}s] {}",
            t0.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
