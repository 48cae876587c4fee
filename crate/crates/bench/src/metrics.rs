//! Mean and spread of `N` and `d` per (task, method).

use std::collections::BTreeMap;
use std::io::Write;

use difftransfer_core::baselines::Method;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::record::RunRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub task: String,
    pub method: Method,
    pub runs: usize,
    pub n_mean: f64,
    pub n_std: f64,
    /// Over the runs that report a distance.
    pub d_mean: f64,
    pub d_std: f64,
    pub success_rate: f64,
}

/// Rows sorted by task, then method name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn row(&self, task: &str, method: Method) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.task == task && r.method == method)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["task", "method", "runs", "n_mean", "n_std", "d_mean", "d_std", "success_rate"])?;
        for r in &self.rows {
            w.write_record([
                r.task.clone(),
                r.method.name().to_string(),
                r.runs.to_string(),
                r.n_mean.to_string(),
                r.n_std.to_string(),
                r.d_mean.to_string(),
                r.d_std.to_string(),
                r.success_rate.to_string(),
            ])?;
        }
        w.flush().map_err(|e| BenchError::io("<csv>", e))?;
        Ok(())
    }
}

/// Mean and population standard deviation. Values are summed in sorted
/// order so the result does not depend on the input order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    dev.sort_by(f64::total_cmp);
    (mean, (dev.iter().sum::<f64>() / n).sqrt())
}

pub fn aggregate(records: &[RunRecord]) -> Result<MetricsTable> {
    if records.is_empty() {
        return Err(BenchError::Usage("nothing to aggregate".into()));
    }
    let mut groups: BTreeMap<(String, &'static str), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.task.clone(), r.method.name())).or_default().push(r);
    }
    let rows = groups
        .into_values()
        .map(|group| {
            let n: Vec<f64> = group.iter().map(|r| r.n as f64).collect();
            let d: Vec<f64> = group.iter().filter_map(|r| r.d).collect();
            let (n_mean, n_std) = mean_std(&n);
            let (d_mean, d_std) = mean_std(&d);
            let wins = group.iter().filter(|r| r.success).count();
            MetricsRow {
                task: group[0].task.clone(),
                method: group[0].method,
                runs: group.len(),
                n_mean,
                n_std,
                d_mean,
                d_std,
                success_rate: wins as f64 / group.len() as f64,
            }
        })
        .collect();
    Ok(MetricsTable { rows })
}
