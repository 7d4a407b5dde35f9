//! CSV serialization of optimizer trajectories.

use std::io::Write;

use crate::error::{Error, Result};
use crate::optimizer::Trajectory;
use crate::scalar::Scalar;

/// `step, alpha_1_deg..alpha_N_deg, tr_crb_m2, residual_inf_norm`
pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["step".to_string()];
    h.extend((1..=n).map(|i| format!("alpha_{i}_deg")));
    h.push("tr_crb_m2".into());
    h.push("residual_inf_norm".into());
    h
}

pub fn write_trajectory_csv<T: Scalar, W: Write>(t: &Trajectory<T>, w: W) -> Result<()> {
    let n = t.final_geometry.n();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(trajectory_header(n))?;
    for r in &t.records {
        let mut row = Vec::with_capacity(n + 3);
        row.push(r.step.to_string());
        row.extend(r.alphas.iter().map(|a| a.to_degrees().to_f64_lossy().to_string()));
        row.push(r.tr_crb.to_f64_lossy().to_string());
        row.push(r.residual_inf_norm.to_f64_lossy().to_string());
        out.write_record(row)?;
    }
    out.flush().map_err(|e| Error::Csv(e.to_string()))
}
