//! Builds circuits from a resolved config, runs them and renders artifacts.

use fermon::experiments::{
    braid_ensemble, dw_ensemble, median_series, phase_sweep, staircase, sweep_circuit, Circuit, RunOptions,
    SweepConfig, TrajectoryRecord,
};
use fermon::gates::{alpha_from_tanh_sq, alpha_max};
use fermon::output::format_float;
use fermon::schedules::presets::{class_a_range_profile, class_a_two_walls, diii_crossing_walls};
use fermon::schedules::{
    braiding_program, smooth_profile, ClassAProgram, ComplexClass, DiiiProgram, DwSegment, Geometry, Profile,
};
use serde_json::{json, Value};

use crate::config::{Braid, DomainWall, Experiment, PhaseDiagram, RunConfig, WallClass, WallLayout};
use crate::error::CliError;

/// Files and summary produced by one run.
#[derive(Debug, Default)]
pub struct Artifacts {
    /// `(file name, contents)` in write order.
    pub files: Vec<(String, String)>,
    pub summary: Value,
}

fn options(config: &RunConfig) -> RunOptions {
    RunOptions {
        purify_every: config.purify_every,
    }
}

fn segments(rows: &[[f64; 6]]) -> Vec<DwSegment> {
    rows.iter()
        .map(|r| DwSegment::new((r[0], r[1]), (r[2], r[3]), r[4], r[5]))
        .collect()
}

pub fn domain_wall_circuit(dw: &DomainWall) -> Result<Circuit, CliError> {
    let period = Some(dw.length as f64);
    let custom = || smooth_profile(segments(&dw.segments), dw.k, dw.background, period);
    Ok(match dw.class {
        WallClass::Diii => {
            let program = match dw.layout {
                WallLayout::CrossingWalls => diii_crossing_walls(dw.length, dw.steps)?,
                _ => DiiiProgram {
                    steps: dw.steps,
                    p_odd: Profile::Walls(custom()?),
                },
            };
            Circuit::Diii {
                program,
                geometry: Geometry::ring(dw.length)?,
            }
        }
        WallClass::A | WallClass::Aiii => {
            let r = match dw.layout {
                WallLayout::WallClasses => class_a_range_profile()?,
                WallLayout::TwoWalls => class_a_two_walls(dw.length, dw.steps)?,
                _ => Profile::Walls(custom()?),
            };
            let strength = |t: f64| alpha_from_tanh_sq(t).min(alpha_max());
            Circuit::ClassA {
                program: ClassAProgram {
                    class: if dw.class == WallClass::A { ComplexClass::A } else { ComplexClass::Aiii },
                    steps: dw.steps,
                    cells: dw.length,
                    r,
                    alphas: (strength(dw.strengths[0]), strength(dw.strengths[1])),
                    variant: dw.variant,
                    theta_range: dw.theta_range,
                    breaking: dw.breaking,
                },
            }
        }
    })
}

pub fn braid_program(b: &Braid) -> Result<fermon::schedules::BraidingProgram, CliError> {
    let mut p = braiding_program(b.chain_len)?;
    p.hold = b.hold;
    p.sweep = b.sweep;
    p.p_inside = b.p_inside;
    p.p_outside = b.p_outside;
    p.k = b.k;
    Ok(if b.idealized { p.idealized() } else { p })
}

fn sweep_config(pd: &PhaseDiagram, config: &RunConfig) -> SweepConfig {
    SweepConfig {
        class: pd.class,
        lengths: pd.lengths.clone(),
        grid: pd.grid.clone(),
        ensemble: pd.ensemble,
        min_realizations: pd.min_realizations,
        equilibration: pd.equilibration,
        master_seed: config.seed,
        options: options(config),
    }
}

fn csv(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn column(records: &[TrajectoryRecord], f: impl Fn(&TrajectoryRecord) -> Vec<f64>) -> Vec<Vec<f64>> {
    records.iter().map(f).collect()
}

/// Runs the configured experiment on the current thread pool.
pub fn execute(config: &RunConfig) -> Result<Artifacts, CliError> {
    match &config.experiment {
        Experiment::PhaseDiagram(pd) => {
            let summary = phase_sweep(&sweep_config(pd, config))?;
            let header: Vec<String> = ["L", "parameter", "mean", "stderr", "n"].map(String::from).to_vec();
            let rows = summary.cells.iter().map(|c| {
                vec![
                    c.length.to_string(),
                    format_float(c.parameter),
                    format_float(c.mean),
                    format_float(c.stderr),
                    c.n.to_string(),
                ]
            });
            let discarded: usize = summary.cells.iter().map(|c| c.discarded).sum();
            Ok(Artifacts {
                files: vec![("mi_table.csv".into(), csv(&header, rows))],
                summary: json!({ "crossings": summary.crossings, "discarded": discarded }),
            })
        }
        Experiment::DomainWall(dw) => {
            let circuit = domain_wall_circuit(dw)?;
            let records = dw_ensemble(&circuit, config.seed, dw.trajectories, dw.reference, &options(config))?;
            let times = &records[0].times;
            let ee = column(&records, |r| r.entropy_series(0));
            let ee_median = median_series(&ee);
            let mut header = vec!["t".to_string(), "median".to_string()];
            header.extend((0..records.len()).map(|k| format!("traj_{k}")));
            let ee_rows = times.iter().enumerate().map(|(k, t)| {
                let mut row = vec![t.to_string(), format_float(ee_median[k])];
                row.extend(ee.iter().map(|s| format_float(s[k])));
                row
            });
            let sites = records[0].contour[0].len();
            let mut heat_header = vec!["t".to_string()];
            heat_header.extend((0..sites).map(|i| format!("site_{i}")));
            let heat_rows = times.iter().enumerate().map(|(k, t)| {
                let rows: Vec<Vec<f64>> = records.iter().map(|r| r.contour[k].clone()).collect();
                let mut row = vec![t.to_string()];
                row.extend(median_series(&rows).into_iter().map(format_float));
                row
            });
            let max_drift = records.iter().map(|r| r.max_purity_drift).fold(0.0, f64::max);
            Ok(Artifacts {
                files: vec![
                    ("ee_series.csv".into(), csv(&header, ee_rows)),
                    ("ec_heatmap.csv".into(), csv(&heat_header, heat_rows)),
                ],
                summary: json!({
                    "trajectories": records.len(),
                    "heatmap": "per-site median over trajectories",
                    "max_purity_drift": max_drift,
                }),
            })
        }
        Experiment::Braid(b) => {
            let program = braid_program(b)?;
            let records = braid_ensemble(&program, config.seed, b.trajectories, &options(config))?;
            let medians: Vec<Vec<f64>> = (0..3)
                .map(|r| median_series(&column(&records, |rec| rec.mutual_information_series(r))))
                .collect();
            let header: Vec<String> = ["t", "ab_median", "bc_median", "ca_median"].map(String::from).to_vec();
            let rows = records[0].times.iter().enumerate().map(|(k, t)| {
                let mut row = vec![t.to_string()];
                row.extend(medians.iter().map(|m| format_float(m[k])));
                row
            });
            let plateaus = staircase(&records, &program)?;
            Ok(Artifacts {
                files: vec![("mi_series.csv".into(), csv(&header, rows))],
                summary: json!({
                    "trajectories": records.len(),
                    "hold_windows": program.hold_windows(),
                    "plateaus_ab_bc_ca": plateaus,
                }),
            })
        }
    }
}

/// Nanoseconds per gate per squared Majorana count, from single-core timings.
const NS_DIII: f64 = 0.8;
const NS_CLASS_A: f64 = 3.0;

/// Gate counts and a rough runtime estimate, without simulating.
pub fn dry_run(config: &RunConfig) -> Result<Value, CliError> {
    let mut work: Vec<(Circuit, usize, usize)> = Vec::new();
    match &config.experiment {
        Experiment::PhaseDiagram(pd) => {
            for &l in &pd.lengths {
                let steps = pd.equilibration * l;
                let c = sweep_circuit(pd.class, l, pd.grid[0], steps)?;
                let n = c.physical_majoranas();
                work.push((c, pd.grid.len() * pd.ensemble, n));
            }
        }
        Experiment::DomainWall(dw) => {
            let c = domain_wall_circuit(dw)?;
            let n = c.physical_majoranas();
            let n = if dw.reference == fermon::experiments::ReferenceMode::Explicit { 2 * n } else { n };
            work.push((c, dw.trajectories, n));
        }
        Experiment::Braid(b) => {
            let program = braid_program(b)?;
            let geometry = Geometry::t_junction(b.chain_len)?;
            let n = geometry.num_majoranas();
            work.push((Circuit::Braiding { program, geometry }, b.trajectories, n));
        }
    }
    let mut gates = 0usize;
    let mut seconds = 0.0;
    let mut items = Vec::new();
    for (c, count, n) in &work {
        let per = c.steps() * c.gates_per_step();
        let ns = if matches!(c, Circuit::ClassA { .. }) { NS_CLASS_A } else { NS_DIII };
        gates += per * count;
        seconds += (per * count) as f64 * ns * (*n as f64).powi(2) * 1e-9;
        items.push(json!({ "majoranas": n, "steps": c.steps(), "gates_per_trajectory": per, "trajectories": count }));
    }
    Ok(json!({
        "command": config.command().name(),
        "work": items,
        "total_gates": gates,
        "estimated_seconds_single_worker": seconds,
        "estimated_seconds": seconds / config.workers as f64,
    }))
}
