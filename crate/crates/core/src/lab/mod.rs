//! Experiment harness: sample-complexity scaling, the control-variate batch
//! size study, the infidelity/KL valley, the trace-distance bound check and
//! perturbative-order checks.
//!
//! Every study derives one child seed per work item from its root seed, so
//! results do not depend on execution order or thread count.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::qcore::MetricsRecord;
use crate::Result;

mod bound;
mod cv;
mod fit;
mod orders;
mod scaling;
mod target;
mod valley;

pub use bound::{
    random_mixed_state, run_bound_check, trace_distance_bound, BoundConfig, BoundReport, BoundRow,
    BOUND_TOLERANCE,
};
pub use cv::{run_cv_study, CvRecord, CvResult, CvRow, CvStudyConfig};
pub use fit::{fit_loglog, LogLogFit};
pub use orders::{run_perturbation_orders, OrdersConfig, OrdersRow};
pub use scaling::{
    averaged, plan_scaling_study, run_instance, run_scaling_study, shots_per_basis, summarize,
    AveragedPoint, InstanceFailure, PlanItem, StudyConfig, StudyPlan, StudyResult, TargetGrid,
    ERROR_FLOOR,
};
pub use target::{HamiltonianSpec, StateSpec, Target, TargetSpec};
pub use valley::{run_valley_study, ValleyConfig, ValleyPoint, ValleyRow};

/// One trained-and-evaluated instance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RawRecord {
    pub study: String,
    pub scheme: String,
    pub n: usize,
    pub beta_or_p: f64,
    pub dataset_size: usize,
    pub instance: usize,
    pub kl: f64,
    pub energy_error: f64,
    pub infidelity: f64,
    pub infidelity_swapped: f64,
    pub classical_infidelity: f64,
    pub trace_distance: f64,
    pub train_iterations: usize,
    pub wall_seconds: f64,
}

impl RawRecord {
    pub fn metrics(&self) -> MetricsRecord {
        MetricsRecord {
            kl: self.kl,
            energy_error: self.energy_error,
            infidelity: self.infidelity,
            infidelity_swapped: self.infidelity_swapped,
            classical_infidelity: self.classical_infidelity,
            trace_distance: self.trace_distance,
        }
    }

    fn set_metrics(&mut self, m: &MetricsRecord) {
        self.kl = m.kl;
        self.energy_error = m.energy_error;
        self.infidelity = m.infidelity;
        self.infidelity_swapped = m.infidelity_swapped;
        self.classical_infidelity = m.classical_infidelity;
        self.trace_distance = m.trace_distance;
    }
}

/// A log-log fit of one averaged metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub study: String,
    pub scheme: String,
    pub beta_or_p: f64,
    pub metric: String,
    pub slope: f64,
    pub exponent: f64,
    pub r2: f64,
    pub n_points: usize,
}

/// Writes rows as CSV with a header derived from the field names.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// [`write_csv`] into a string.
pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub const RAW_COLUMNS: [&str; 14] = [
    "study",
    "scheme",
    "n",
    "beta_or_p",
    "dataset_size",
    "instance",
    "kl",
    "energy_error",
    "infidelity",
    "infidelity_swapped",
    "classical_infidelity",
    "trace_distance",
    "train_iterations",
    "wall_seconds",
];

pub const FIT_COLUMNS: [&str; 8] = [
    "study",
    "scheme",
    "beta_or_p",
    "metric",
    "slope",
    "exponent",
    "r2",
    "n_points",
];

/// `count` log-spaced values from `10^lo` to `10^hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![10f64.powf(lo)],
        _ => (0..count)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_headers_match_columns() {
        let raw = RawRecord {
            study: "scaling".into(),
            scheme: "ndo".into(),
            n: 2,
            beta_or_p: 0.1,
            dataset_size: 100,
            instance: 0,
            kl: 1e-3,
            energy_error: 0.0,
            infidelity: 0.0,
            infidelity_swapped: 0.0,
            classical_infidelity: 0.0,
            trace_distance: 0.0,
            train_iterations: 10,
            wall_seconds: 0.0,
        };
        let s = csv_string(&[raw.clone()]).unwrap();
        assert_eq!(s.lines().next().unwrap(), RAW_COLUMNS.join(","));
        let m = raw.metrics();
        let mut copy = raw.clone();
        copy.set_metrics(&m);
        assert_eq!(copy, raw);

        let fit = FitRecord {
            study: "scaling".into(),
            scheme: "ndo".into(),
            beta_or_p: 0.1,
            metric: "kl".into(),
            slope: -1.0,
            exponent: -1.0,
            r2: 1.0,
            n_points: 5,
        };
        let s = csv_string(&[fit]).unwrap();
        assert_eq!(s.lines().next().unwrap(), FIT_COLUMNS.join(","));
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(-1.0, 1.0, 7);
        assert_eq!(g.len(), 7);
        assert!((g[0] - 0.1).abs() < 1e-15 && (g[6] - 10.0).abs() < 1e-12);
        assert!((g[3] - 1.0).abs() < 1e-15);
    }
}
