//! One function per subcommand. Each writes its output files and returns the
//! result summary recorded in the manifest plus any `--check` failures.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use boundkit::attack::{
    boundary_attack, budget_sweep, AttackConfig, CountingOracle, ThrottlePolicy,
};
use boundkit::export;
use boundkit::features::{fragility_scan, LabeledDataset, PerturbationSet};
use boundkit::filterdemo::{
    rasterize, refine_and_count, unstable_cells, Extent, Neighborhood, ScoringMode,
};
use boundkit::measure::{
    bound_curve, resolution_mitigation_curve, strictly_decreasing, strictly_increasing, tail_half,
};
use boundkit::stability::{unstable_fraction, ProbeConfig};
use boundkit::symmetry::{check_invariance, collapse, enumerate_group, SymmetryClass};
use boundkit::{DecisionFunction, Feature, Point};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::registry::{self, ClassifierSpec};
use crate::CliError;

pub struct Outcome {
    pub outputs: Vec<&'static str>,
    pub results: Value,
    /// Names of `--check` properties that failed.
    pub failed_checks: Vec<String>,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command.as_str() {
        "raster" => raster(cfg),
        "bound" => bound(cfg),
        "stability" => stability(cfg),
        "usefulness" => usefulness(cfg),
        "symmetry" => symmetry(cfg),
        "attack" => attack(cfg),
        other => Err(CliError::config(format!("unknown subcommand `{other}`"))),
    }
}

fn write_file<F>(dir: &Path, name: &str, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let path = dir.join(name);
    let io_err = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
    body(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn classifier(cfg: &RunConfig, dim: usize) -> Result<Box<dyn DecisionFunction>, CliError> {
    let mode: ScoringMode = cfg.get("mode")?;
    registry::build(&ClassifierSpec {
        name: cfg.raw("classifier"),
        mode,
        threshold: cfg.get("threshold")?,
        dim,
    })
}

fn point(cfg: &RunConfig, key: &str) -> Result<Point, CliError> {
    Point::new(cfg.list(key)?)
        .map_err(|e| CliError::config(format!("invalid value for '{key}': {e}")))
}

fn raster(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let f = classifier(cfg, 2)?;
    let ext: Vec<f64> = cfg.list("extent")?;
    let extent = match ext[..] {
        [x0, x1, y0, y1] => Extent::new(x0, x1, y0, y1)?,
        _ => {
            return Err(CliError::config(
                "invalid value for 'extent': expected x_min,x_max,y_min,y_max",
            ))
        }
    };
    let nb: u32 = cfg.get("neighborhood")?;
    let neighborhood = Neighborhood::try_from(nb)?;
    let depths = cfg
        .range("depths")?
        .into_iter()
        .map(|d| {
            u32::try_from(d).map_err(|_| CliError::config("invalid value for 'depths': too large"))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let labels = rasterize(&f, extent, cfg.get("width")?, cfg.get("height")?)?;
    let unstable = unstable_cells(&labels, neighborhood);
    let boxes = refine_and_count(&f, extent, &depths)?;

    write_file(&cfg.out, "labels.ppm", |w| {
        export::write_label_ppm(w, &labels)
    })?;
    write_file(&cfg.out, "unstable.pgm", |w| {
        export::write_instability_pgm(w, &unstable)
    })?;
    write_file(&cfg.out, "boxcount.csv", |w| {
        export::write_boxcount_csv(w, &boxes)
    })?;
    Ok(Outcome {
        outputs: vec!["labels.ppm", "unstable.pgm", "boxcount.csv"],
        results: json!({
            "label_counts": labels.label_counts(),
            "unstable_count": unstable.unstable_count(),
            "unstable_fraction": unstable.unstable_fraction(),
            "boundary_cells": boxes.levels.iter().map(|l| l.boundary_cells).collect::<Vec<_>>(),
            "box_dimension": boxes.dimension,
        }),
        failed_checks: Vec::new(),
    })
}

fn bound(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let eps: f64 = cfg.get("eps")?;
    let (file, bounds, increasing) = match cfg.raw("curve") {
        "bound" => {
            let class: SymmetryClass = cfg.get("class")?;
            let curve = bound_curve(&cfg.range("k")?, eps, class)?;
            write_file(&cfg.out, "bound.csv", |w| {
                export::write_bound_csv(w, &curve)
            })?;
            let increasing = class == SymmetryClass::GraphFactorial;
            (
                "bound.csv",
                curve.iter().map(|p| p.log_orbit_bound).collect::<Vec<_>>(),
                increasing,
            )
        }
        "mitigation" => {
            let rows = resolution_mitigation_curve(&cfg.range("m")?, cfg.get("channels")?, eps)?;
            write_file(&cfg.out, "mitigation.csv", |w| {
                export::write_mitigation_csv(w, &rows)
            })?;
            (
                "mitigation.csv",
                rows.iter().map(|r| r.point.log_orbit_bound).collect(),
                false,
            )
        }
        other => {
            return Err(CliError::config(format!(
                "invalid value for 'curve': `{other}` (expected bound or mitigation)"
            )))
        }
    };
    let tail = tail_half(&bounds);
    let (name, holds) = if increasing {
        ("tail_strictly_increasing", strictly_increasing(tail))
    } else {
        ("tail_strictly_decreasing", strictly_decreasing(tail))
    };
    Ok(Outcome {
        outputs: vec![file],
        results: json!({
            "rows": bounds.len(),
            "first_log_orbit_bound": bounds.first(),
            "last_log_orbit_bound": bounds.last(),
            name: holds,
        }),
        failed_checks: if holds {
            Vec::new()
        } else {
            vec![name.to_string()]
        },
    })
}

fn stability(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let f = classifier(cfg, cfg.get("dim")?)?;
    let probe = ProbeConfig::new(cfg.get("eps")?, cfg.get("directions")?, cfg.get("steps")?)?;
    let report = unstable_fraction(&f, &probe, cfg.get("samples")?, cfg.seed)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&cfg.out, "stability.json", |w| writeln!(w, "{text}"))?;
    Ok(Outcome {
        outputs: vec!["stability.json"],
        results: serde_json::to_value(&report).expect("report serializes"),
        failed_checks: Vec::new(),
    })
}

fn usefulness(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let data = match cfg.raw("data") {
        "synthetic" => {
            LabeledDataset::uniform_threshold(cfg.get("size")?, cfg.get("dim")?, cfg.seed)?
        }
        path => {
            let file = File::open(path)
                .map_err(|e| CliError::Io(format!("cannot read data {path}: {e}")))?;
            LabeledDataset::from_csv(file)?
        }
    };
    let features: Vec<Feature> = cfg.list("features")?;
    let delta = PerturbationSet::linf(cfg.get("delta")?)?;
    let rows = fragility_scan(&features, &data, &delta, cfg.get("coord_iters")?)?;
    write_file(&cfg.out, "fragility.csv", |w| {
        export::write_fragility_csv(w, &rows)
    })?;
    // gamma is a minimum over a set containing the unperturbed point.
    let failed_checks = rows
        .iter()
        .filter(|r| r.gamma > r.rho)
        .map(|r| format!("gamma_le_rho[{}]", r.feature_id))
        .collect();
    Ok(Outcome {
        outputs: vec!["fragility.csv"],
        results: json!({
            "samples": data.len(),
            "features": rows.iter().map(|r| json!({
                "feature": r.feature_id,
                "rho": r.rho,
                "gamma": r.gamma,
                "gap": r.gap(),
                "exact": r.exact,
            })).collect::<Vec<_>>(),
        }),
        failed_checks,
    })
}

fn symmetry(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (m, n): (usize, usize) = (cfg.get("m")?, cfg.get("n")?);
    let f = classifier(cfg, m * n)?;
    let transforms = enumerate_group(m, n, cfg.get("point_ops")?)?;
    let report = check_invariance(&f, m, n, &transforms, cfg.get("samples")?, cfg.seed)?;
    write_file(&cfg.out, "symmetry.csv", |w| {
        export::write_violation_csv(w, &report)
    })?;
    Ok(Outcome {
        outputs: vec!["symmetry.csv"],
        results: json!({
            "transforms": transforms.len(),
            "distinct_permutations": collapse(&transforms).len(),
            "total_violations": report.total_violations(),
        }),
        failed_checks: Vec::new(),
    })
}

fn attack(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let x_orig = point(cfg, "x_orig")?;
    let x_seed = point(cfg, "x_seed")?;
    let f = classifier(cfg, x_orig.dim())?;
    let tol: f64 = cfg.get("tol")?;
    let budgets = cfg.range("budgets")?;
    let runs: u64 = cfg.get("runs")?;
    let seeds: Vec<u64> = (0..runs).map(|i| cfg.seed.wrapping_add(i)).collect();
    let sweep = budget_sweep(&f, &x_orig, &x_seed, tol, &budgets, &seeds)?;

    let top = *budgets.last().expect("range is nonempty");
    let oracle = CountingOracle::new(&f, ThrottlePolicy::budget(top));
    let trace = boundary_attack(
        &oracle,
        &x_orig,
        &x_seed,
        &AttackConfig::new(tol, cfg.seed)?,
    )?;

    write_file(&cfg.out, "sweep.csv", |w| {
        export::write_sweep_csv(w, &sweep)
    })?;
    write_file(&cfg.out, "trace.csv", |w| {
        export::write_trace_csv(w, &trace)
    })?;

    let mut failed_checks = Vec::new();
    if trace
        .log
        .windows(2)
        .any(|w| w[1].best_distance > w[0].best_distance)
    {
        failed_checks.push("trace_monotone".to_string());
    }
    if trace.success && !trace.verified {
        failed_checks.push("success_verified".to_string());
    }
    Ok(Outcome {
        outputs: vec!["sweep.csv", "trace.csv"],
        results: json!({
            "sweep": sweep.iter().map(|r| json!({
                "budget": r.budget,
                "mean_final_distance": r.mean_final_distance,
                "success_rate": r.success_rate,
            })).collect::<Vec<_>>(),
            "trace_budget": top,
            "trace_queries_used": trace.queries_used,
            "trace_final_distance": trace.final_distance,
            "trace_success": trace.success,
        }),
        failed_checks,
    })
}
