//! Landscape CSV export of a planner run's reward model.

use std::io::Write;
use std::str::FromStr;

use difftransfer_core::qnet::{export_landscape, Landscape, LandscapeAxes};

use crate::canonical::format_float;
use crate::error::{BenchError, Result};
use crate::record::RunRecord;

/// Grid resolution `nx × ny`, written `41x41`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NXxNY, got `{s}`"))?;
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
        let (nx, ny) = (parse(a)?, parse(b)?);
        if nx < 2 || ny < 2 {
            return Err("each grid side needs at least 2 points".into());
        }
        Ok(GridSpec { nx, ny })
    }
}

/// The estimated loss over the plane through target and source: the
/// origin is the target change, the far corner the source change.
pub fn record_landscape(record: &RunRecord, grid: GridSpec) -> Result<Landscape> {
    let model = record
        .model()
        .ok_or_else(|| BenchError::Usage(format!("record {} carries no reward model", record.file_name())))?;
    let axes = LandscapeAxes::between(&record.target, &record.source, record.config.planner.eps_sample)?;
    Ok(export_landscape(model, &axes, grid.nx, grid.ny)?)
}

/// `tx,rot,estimated_loss`, one row per grid point with `tx` varying fastest.
pub fn write_landscape_csv<W: Write>(land: &Landscape, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tx", "rot", "estimated_loss"])?;
    for (j, rot) in land.rot.iter().enumerate() {
        for (i, tx) in land.tx.iter().enumerate() {
            w.write_record([format_float(*tx), format_float(*rot), format_float(land.value(i, j))])?;
        }
    }
    w.flush().map_err(|e| BenchError::io("<csv>", e))?;
    Ok(())
}

/// Whether the smallest value lies in the quarter of the grid at the origin.
pub fn minimum_near_origin(land: &Landscape) -> bool {
    let (i, j) = land.argmin();
    2 * i < land.tx.len() && 2 * j < land.rot.len()
}
