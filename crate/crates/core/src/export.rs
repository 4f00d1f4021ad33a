//! Plain-text writers: PGM/PPM rasters and CSV tables.
//!
//! Floats are written with Rust's shortest round-trip formatting so that
//! identical results always produce identical bytes.

use std::io::{self, Write};

use crate::attack::{AttackTrace, SweepRow};
use crate::features::FeatureUsefulness;
use crate::filterdemo::{BoxCountRecord, InstabilityMap, LabelRaster};
use crate::measure::{BoundCurvePoint, MitigationRow};
use crate::symmetry::InvarianceReport;

/// Colours for labels 0..8 in PPM output; label `l` uses entry `l % 8`.
pub const PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [255, 225, 25],
    [145, 30, 180],
    [70, 240, 240],
    [245, 130, 48],
    [0, 0, 0],
];

const MAX_LINE: usize = 70;

/// Writes whitespace-separated tokens, one raster row per group, wrapping
/// lines before they exceed 70 characters.
fn write_rows<W: Write, I>(out: &mut W, rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    for row in rows {
        let mut len = 0;
        for tok in row {
            if len > 0 && len + 1 + tok.len() > MAX_LINE {
                writeln!(out)?;
                len = 0;
            }
            if len > 0 {
                write!(out, " ")?;
                len += 1;
            }
            write!(out, "{tok}")?;
            len += tok.len();
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Plain PGM (`P2`) with grey level = label index and maxval = cardinality - 1
/// (at least 1, which the format requires).
pub fn write_label_pgm<W: Write>(out: &mut W, raster: &LabelRaster) -> io::Result<()> {
    let maxval = raster.cardinality().saturating_sub(1).max(1);
    writeln!(
        out,
        "P2\n{} {}\n{}",
        raster.width(),
        raster.height(),
        maxval
    )?;
    write_rows(
        out,
        raster
            .labels()
            .chunks(raster.width())
            .map(|row| row.iter().map(usize::to_string).collect()),
    )
}

/// Plain PPM (`P3`) coloured with [`PALETTE`].
pub fn write_label_ppm<W: Write>(out: &mut W, raster: &LabelRaster) -> io::Result<()> {
    writeln!(out, "P3\n{} {}\n255", raster.width(), raster.height())?;
    write_rows(
        out,
        raster.labels().chunks(raster.width()).map(|row| {
            row.iter()
                .flat_map(|&l| PALETTE[l % PALETTE.len()].map(|c| c.to_string()))
                .collect()
        }),
    )
}

/// Plain PGM with unstable cells at 255 and stable cells at 0.
pub fn write_instability_pgm<W: Write>(out: &mut W, map: &InstabilityMap) -> io::Result<()> {
    let w = map.raster().width();
    writeln!(out, "P2\n{} {}\n255", w, map.raster().height())?;
    write_rows(
        out,
        map.unstable().chunks(w).map(|row| {
            row.iter()
                .map(|&u| if u { "255" } else { "0" }.to_string())
                .collect()
        }),
    )
}

pub fn write_boxcount_csv<W: Write>(out: &mut W, record: &BoxCountRecord) -> io::Result<()> {
    writeln!(out, "depth,cells_per_side,boundary_cells,log_inv_s,log_N")?;
    for l in &record.levels {
        let log_n = l.log_count().map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            l.depth,
            l.cells_per_side,
            l.boundary_cells,
            l.log_inv_size(),
            log_n
        )?;
    }
    Ok(())
}

pub fn write_bound_csv<W: Write>(out: &mut W, curve: &[BoundCurvePoint]) -> io::Result<()> {
    writeln!(
        out,
        "k,epsilon,log_sym_count,log_ball_volume,log_orbit_bound,log_orbit_bound_capped"
    )?;
    for p in curve {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.k,
            p.epsilon,
            p.log_sym_count,
            p.log_ball_volume,
            p.log_orbit_bound,
            p.log_orbit_bound_capped()
        )?;
    }
    Ok(())
}

pub fn write_mitigation_csv<W: Write>(out: &mut W, rows: &[MitigationRow]) -> io::Result<()> {
    writeln!(
        out,
        "m,channels,k,epsilon,log_sym_count,log_ball_volume,log_orbit_bound,log_orbit_bound_capped"
    )?;
    for r in rows {
        let p = &r.point;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.side,
            r.channels,
            p.k,
            p.epsilon,
            p.log_sym_count,
            p.log_ball_volume,
            p.log_orbit_bound,
            p.log_orbit_bound_capped()
        )?;
    }
    Ok(())
}

pub fn write_violation_csv<W: Write>(out: &mut W, report: &InvarianceReport) -> io::Result<()> {
    writeln!(
        out,
        "transform_id,translation_r,translation_c,point_op,violations,samples"
    )?;
    for r in &report.rows {
        let (dr, dc) = r.transform.offset();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.transform_id,
            dr,
            dc,
            r.transform.point_op(),
            r.violations,
            r.samples
        )?;
    }
    Ok(())
}

pub fn write_fragility_csv<W: Write>(out: &mut W, rows: &[FeatureUsefulness]) -> io::Result<()> {
    writeln!(out, "feature,rho,gamma,gap,exact")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.feature_id,
            r.rho,
            r.gamma,
            r.gap(),
            r.exact
        )?;
    }
    Ok(())
}

pub fn write_trace_csv<W: Write>(out: &mut W, trace: &AttackTrace) -> io::Result<()> {
    writeln!(out, "query_index,best_distance")?;
    for e in &trace.log {
        writeln!(out, "{},{}", e.query_index, e.best_distance)?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(out: &mut W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(out, "budget,mean_final_distance,success_rate,seeds")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.budget, r.mean_final_distance, r.success_rate, r.seeds
        )?;
    }
    Ok(())
}
