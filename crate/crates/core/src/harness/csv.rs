//! Trajectory CSV. Floats carry 17 significant digits.

use std::fmt::Write as _;

use crate::dynamics::{Sample, TrajectoryRecord};

pub const BASE_COLUMNS: [&str; 7] = ["step", "t", "h_beta_sq", "h_beta_delta_sq", "h_ab_sq", "energy_residual", "grad_l52"];
pub const REFERENCE_COLUMNS: [&str; 2] = ["d_s", "d_w"];

fn num(out: &mut String, v: f64) {
    let _ = write!(out, ",{v:.16e}");
}

fn row(out: &mut String, s: &Sample, with_reference: bool) {
    let _ = write!(out, "{}", s.step);
    for v in [s.t, s.h_beta_sq, s.h_beta_delta_sq, s.h_alpha_beta_sq, s.energy_residual, s.grad_l52] {
        num(out, v);
    }
    if with_reference {
        num(out, s.ref_strong.unwrap_or(f64::NAN));
        num(out, s.ref_weak.unwrap_or(f64::NAN));
    }
    out.push('\n');
}

/// Render a record; the reference columns appear when the record has them.
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let with_reference = record.samples.first().is_some_and(|s| s.ref_strong.is_some());
    let mut out = BASE_COLUMNS.join(",");
    if with_reference {
        out.push(',');
        out.push_str(&REFERENCE_COLUMNS.join(","));
    }
    out.push('\n');
    for s in &record.samples {
        row(&mut out, s, with_reference);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, SimulationConfig};
    use crate::field::{ForcingField, VectorField};
    use crate::params::ModelParams;

    #[test]
    fn zero_run_and_column_count() {
        let p = ModelParams { dim: 2, modes_per_axis: 8, ..Default::default() };
        let g = p.build_grid().unwrap();
        let z = VectorField::zeros(&g);
        let cfg = SimulationConfig { dt: 0.1, t_end: 0.5, ..Default::default() };
        let rec = simulate(&z, &ForcingField::zero(&g), &p, &cfg, None).unwrap();
        let text = trajectory_csv(&rec);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        for l in &lines[1..] {
            let cols: Vec<&str> = l.split(',').collect();
            assert_eq!(cols.len(), 7);
            // every column except step and t is zero
            assert!(cols[2..].iter().all(|c| c.parse::<f64>().unwrap() == 0.0));
        }
        let rec = simulate(&z, &ForcingField::zero(&g), &p, &cfg, Some(&z)).unwrap();
        assert!(trajectory_csv(&rec).lines().all(|l| l.split(',').count() == 9));
    }
}
