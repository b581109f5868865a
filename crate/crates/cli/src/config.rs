//! Run configuration: TOML schema, named presets and validation.
//!
//! A run is resolved in three layers. A preset (if named) supplies a complete
//! section, the config file overrides individual fields of it, and command
//! line flags override the top-level knobs. Every field left unset after that
//! is an error that names its path.

use std::path::{Path, PathBuf};

use fermon::experiments::{ReferenceMode, SweepClass};
use fermon::gates::UnitaryVariant;
use fermon::schedules::ChiralBreaking;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Which experiment driver a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    PhaseDiagram,
    DomainWall,
    Braid,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::PhaseDiagram => "phase-diagram",
            Command::DomainWall => "domain-wall",
            Command::Braid => "braid",
        }
    }
}

/// The file format. All fields are optional here; [`resolve`] fills them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    /// Purify every this many steps; `0` disables purification.
    pub purify_every: Option<usize>,
    pub phase_diagram: Option<PhaseDiagramFile>,
    pub domain_wall: Option<DomainWallFile>,
    pub braid: Option<BraidFile>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramFile {
    pub class: Option<SweepClass>,
    pub lengths: Option<Vec<usize>>,
    pub grid: Option<Grid>,
    pub ensemble: Option<usize>,
    pub min_realizations: Option<usize>,
    pub equilibration: Option<usize>,
}

/// A parameter grid, either listed or as an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            Grid::List(v) => Ok(v.clone()),
            Grid::Range { start, stop, step } => {
                if !(*step > 0.0) || stop < start {
                    return Err(format!("empty grid range {start}..{stop} step {step}"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                // Rounded to 12 decimals so that 0.05 steps print as 0.35, not 0.35000000000000003.
                Ok((0..=n).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect())
            }
        }
    }
}

/// Symmetry class of a domain-wall run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallClass {
    Diii,
    Aiii,
    A,
}

/// Spacetime profile of a domain-wall run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallLayout {
    /// DIII: walls at `L/4`, `3L/4`, crossing at `t = 48` (plateaus 0.1 / 0.9).
    CrossingWalls,
    /// Class A on 64 cells: walls of classes +1, +2, −1, −2 that pass and annihilate.
    WallClasses,
    /// Class A: static walls at `L/4` (+1) and `3L/4` (−1).
    TwoWalls,
    /// Explicit segment list.
    Segments,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainWallFile {
    pub class: Option<WallClass>,
    /// Majoranas (DIII) or unit cells (class A / AIII).
    pub length: Option<usize>,
    pub steps: Option<usize>,
    pub layout: Option<WallLayout>,
    /// Rows `(t_start, t_end, i_start, i_end, left_value, right_value)`.
    pub segments: Option<Vec<[f64; 6]>>,
    pub k: Option<f64>,
    pub background: Option<f64>,
    pub trajectories: Option<usize>,
    pub reference: Option<ReferenceMode>,
    /// `(tanh²α₀, tanh²α₁)` of the class-A gates.
    pub strengths: Option<[f64; 2]>,
    pub variant: Option<UnitaryVariant>,
    pub theta_range: Option<f64>,
    pub breaking: Option<ChiralBreaking>,
    pub breaking_from: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BraidFile {
    pub chain_len: Option<usize>,
    pub trajectories: Option<usize>,
    pub hold: Option<usize>,
    pub sweep: Option<usize>,
    pub p_inside: Option<f64>,
    pub p_outside: Option<f64>,
    pub k: Option<f64>,
    pub idealized: Option<bool>,
}

/// Fully validated phase-diagram settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub class: SweepClass,
    pub lengths: Vec<usize>,
    pub grid: Vec<f64>,
    pub ensemble: usize,
    pub min_realizations: usize,
    pub equilibration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainWall {
    pub class: WallClass,
    pub length: usize,
    pub steps: usize,
    pub layout: WallLayout,
    pub segments: Vec<[f64; 6]>,
    pub k: f64,
    pub background: f64,
    pub trajectories: usize,
    pub reference: ReferenceMode,
    pub strengths: [f64; 2],
    pub variant: UnitaryVariant,
    pub theta_range: f64,
    pub breaking: Option<(usize, ChiralBreaking)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Braid {
    pub chain_len: usize,
    pub trajectories: usize,
    pub hold: usize,
    pub sweep: usize,
    pub p_inside: f64,
    pub p_outside: f64,
    pub k: f64,
    pub idealized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Experiment {
    PhaseDiagram(PhaseDiagram),
    DomainWall(DomainWall),
    Braid(Braid),
}

/// The effective configuration of a run, echoed into its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub purify_every: Option<usize>,
    pub experiment: Experiment,
}

impl RunConfig {
    pub fn command(&self) -> Command {
        match self.experiment {
            Experiment::PhaseDiagram(_) => Command::PhaseDiagram,
            Experiment::DomainWall(_) => Command::DomainWall,
            Experiment::Braid(_) => Command::Braid,
        }
    }
}

/// Top-level values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

pub const PRESETS: [&str; 9] = ["fig1b", "fig2", "fig3", "fig4", "fig4-walls", "s1", "s2", "s3", "s3-unitary"];

/// The sections a named preset provides.
pub fn preset(name: &str) -> Result<ConfigFile, CliError> {
    let tanh_sq = Some([0.04, 0.96]);
    let class_a_walls = |steps, layout, length| DomainWallFile {
        class: Some(WallClass::A),
        length: Some(length),
        steps: Some(steps),
        layout: Some(layout),
        trajectories: Some(50),
        reference: Some(ReferenceMode::Traced),
        strengths: tanh_sq,
        variant: Some(UnitaryVariant::Onsite),
        theta_range: Some(std::f64::consts::PI),
        ..Default::default()
    };
    let file = match name {
        "fig1b" => ConfigFile {
            phase_diagram: Some(PhaseDiagramFile {
                class: Some(SweepClass::Diii),
                lengths: Some(vec![16, 32, 64, 128]),
                grid: Some(Grid::Range { start: 0.0, stop: 1.0, step: 0.05 }),
                ensemble: Some(1000),
                ..Default::default()
            }),
            ..Default::default()
        },
        "fig2" => ConfigFile {
            domain_wall: Some(DomainWallFile {
                class: Some(WallClass::Diii),
                length: Some(128),
                steps: Some(80),
                layout: Some(WallLayout::CrossingWalls),
                trajectories: Some(50),
                reference: Some(ReferenceMode::Traced),
                ..Default::default()
            }),
            ..Default::default()
        },
        "fig3" => ConfigFile {
            braid: Some(BraidFile {
                chain_len: Some(64),
                trajectories: Some(100),
                ..Default::default()
            }),
            ..Default::default()
        },
        "fig4" => ConfigFile {
            phase_diagram: Some(PhaseDiagramFile {
                class: Some(SweepClass::A),
                lengths: Some(vec![16, 32, 64]),
                grid: Some(Grid::Range { start: 0.05, stop: 0.95, step: 0.05 }),
                ensemble: Some(200),
                ..Default::default()
            }),
            ..Default::default()
        },
        "fig4-walls" => ConfigFile {
            domain_wall: Some(class_a_walls(144, WallLayout::WallClasses, 64)),
            ..Default::default()
        },
        "s1" => ConfigFile {
            phase_diagram: Some(PhaseDiagramFile {
                class: Some(SweepClass::Aiii),
                lengths: Some(vec![16, 32, 64]),
                grid: Some(Grid::Range { start: 0.05, stop: 0.95, step: 0.05 }),
                ensemble: Some(200),
                ..Default::default()
            }),
            ..Default::default()
        },
        "s2" => ConfigFile {
            domain_wall: Some(DomainWallFile {
                variant: Some(UnitaryVariant::Longrange),
                theta_range: Some(std::f64::consts::FRAC_PI_4),
                ..class_a_walls(144, WallLayout::WallClasses, 64)
            }),
            ..Default::default()
        },
        "s3" | "s3-unitary" => ConfigFile {
            domain_wall: Some(DomainWallFile {
                breaking: Some(if name == "s3" {
                    ChiralBreaking::SameSublatticeMeasurement
                } else {
                    ChiralBreaking::CrossSublatticeUnitary
                }),
                breaking_from: Some(33),
                ..class_a_walls(64, WallLayout::TwoWalls, 64)
            }),
            ..Default::default()
        },
        other => {
            return Err(CliError::Config(format!(
                "unknown preset `{other}` (available: {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(file)
}

pub fn read_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

macro_rules! merge {
    ($base:expr, $over:expr; $($field:ident),* $(,)?) => {
        $( if $over.$field.is_some() { $base.$field = $over.$field.clone(); } )*
    };
}

fn need<T: Clone>(value: &Option<T>, path: &str) -> Result<T, CliError> {
    value.clone().ok_or_else(|| CliError::Config(format!("missing field `{path}`")))
}

fn check(ok: bool, path: &str, what: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("invalid `{path}`: {what}")))
    }
}

/// Merges preset, file and flags for `command` and validates the result.
pub fn resolve(command: Command, file: Option<ConfigFile>, flags: &Overrides) -> Result<RunConfig, CliError> {
    let file = file.unwrap_or_default();
    let preset_name = flags.preset.clone().or_else(|| file.preset.clone());
    let mut merged = match &preset_name {
        Some(name) => preset(name)?,
        None => ConfigFile::default(),
    };
    merge!(merged, file; seed, workers, out, purify_every);
    let seed = flags.seed.or(merged.seed).unwrap_or(0);
    let workers = flags.workers.or(merged.workers).unwrap_or(1);
    check(workers >= 1, "workers", "must be at least 1")?;
    let out = flags.out.clone().or(merged.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let purify_every = match merged.purify_every.unwrap_or(10) {
        0 => None,
        n => Some(n),
    };
    let sections = |c: &ConfigFile| {
        [
            (Command::PhaseDiagram, c.phase_diagram.is_some()),
            (Command::DomainWall, c.domain_wall.is_some()),
            (Command::Braid, c.braid.is_some()),
        ]
    };
    if let Some(name) = &preset_name {
        if let Some((other, _)) = sections(&merged).into_iter().find(|(c, has)| *has && *c != command) {
            return Err(CliError::Config(format!(
                "preset `{name}` is a `{}` run, not `{}`",
                other.name(),
                command.name()
            )));
        }
    }
    if let Some((other, _)) = sections(&file).into_iter().find(|(c, has)| *has && *c != command) {
        return Err(CliError::Config(format!(
            "section `{}` does not apply to `{}`",
            other.name().replace('-', "_"),
            command.name()
        )));
    }
    let experiment = match command {
        Command::PhaseDiagram => {
            let mut s = merged.phase_diagram.unwrap_or_default();
            if let Some(f) = &file.phase_diagram {
                merge!(s, f; class, lengths, grid, ensemble, min_realizations, equilibration);
            }
            Experiment::PhaseDiagram(phase_diagram(&s)?)
        }
        Command::DomainWall => {
            let mut s = merged.domain_wall.unwrap_or_default();
            if let Some(f) = &file.domain_wall {
                merge!(s, f; class, length, steps, layout, segments, k, background, trajectories, reference,
                       strengths, variant, theta_range, breaking, breaking_from);
            }
            Experiment::DomainWall(domain_wall(&s)?)
        }
        Command::Braid => {
            let mut s = merged.braid.unwrap_or_default();
            if let Some(f) = &file.braid {
                merge!(s, f; chain_len, trajectories, hold, sweep, p_inside, p_outside, k, idealized);
            }
            Experiment::Braid(braid(&s)?)
        }
    };
    Ok(RunConfig {
        preset: preset_name,
        seed,
        workers,
        out,
        purify_every,
        experiment,
    })
}

fn phase_diagram(s: &PhaseDiagramFile) -> Result<PhaseDiagram, CliError> {
    let class = need(&s.class, "phase_diagram.class")?;
    let lengths = need(&s.lengths, "phase_diagram.lengths")?;
    check(!lengths.is_empty(), "phase_diagram.lengths", "needs at least one size")?;
    check(
        lengths.iter().all(|&l| l >= 4 && l % 4 == 0),
        "phase_diagram.lengths",
        "sizes must be positive multiples of 4",
    )?;
    let grid = need(&s.grid, "phase_diagram.grid")?
        .values()
        .map_err(|m| CliError::Config(format!("invalid `phase_diagram.grid`: {m}")))?;
    check(!grid.is_empty(), "phase_diagram.grid", "needs at least one point")?;
    check(
        grid.iter().all(|p| (0.0..=1.0).contains(p)),
        "phase_diagram.grid",
        "parameters must lie in [0, 1]",
    )?;
    let ensemble = need(&s.ensemble, "phase_diagram.ensemble")?;
    check(ensemble >= 1, "phase_diagram.ensemble", "must be at least 1")?;
    let min_realizations = s.min_realizations.unwrap_or(ensemble);
    check(
        min_realizations <= ensemble,
        "phase_diagram.min_realizations",
        "cannot exceed the ensemble size",
    )?;
    let equilibration = s.equilibration.unwrap_or(1);
    check(equilibration >= 1, "phase_diagram.equilibration", "must be at least 1")?;
    Ok(PhaseDiagram {
        class,
        lengths,
        grid,
        ensemble,
        min_realizations,
        equilibration,
    })
}

fn domain_wall(s: &DomainWallFile) -> Result<DomainWall, CliError> {
    let class = need(&s.class, "domain_wall.class")?;
    let length = need(&s.length, "domain_wall.length")?;
    let steps = need(&s.steps, "domain_wall.steps")?;
    check(steps >= 1, "domain_wall.steps", "must be at least 1")?;
    let layout = need(&s.layout, "domain_wall.layout")?;
    let diii = class == WallClass::Diii;
    check(length >= 4 && length % 4 == 0, "domain_wall.length", "must be a positive multiple of 4")?;
    match layout {
        WallLayout::CrossingWalls => check(diii, "domain_wall.layout", "crossing_walls is a DIII layout")?,
        WallLayout::WallClasses => {
            check(!diii, "domain_wall.layout", "wall_classes is a class-A layout")?;
            check(length == 64, "domain_wall.length", "wall_classes is laid out on 64 cells")?;
        }
        WallLayout::TwoWalls => check(!diii, "domain_wall.layout", "two_walls is a class-A layout")?,
        WallLayout::Segments => {}
    }
    let segments = match layout {
        WallLayout::Segments => {
            let segs = need(&s.segments, "domain_wall.segments")?;
            check(!segs.is_empty(), "domain_wall.segments", "needs at least one segment")?;
            segs
        }
        _ => {
            check(s.segments.is_none(), "domain_wall.segments", "only used with layout = \"segments\"")?;
            vec![]
        }
    };
    let trajectories = s.trajectories.unwrap_or(1);
    check(trajectories >= 1, "domain_wall.trajectories", "must be at least 1")?;
    let strengths = s.strengths.unwrap_or([0.04, 0.96]);
    check(
        strengths.iter().all(|t| (0.0..=1.0).contains(t)),
        "domain_wall.strengths",
        "tanh² values must lie in [0, 1]",
    )?;
    let variant = s.variant.unwrap_or(UnitaryVariant::Onsite);
    let breaking = match (s.breaking, s.breaking_from) {
        (Some(b), Some(t)) => Some((t, b)),
        (None, None) => None,
        (Some(_), None) => return Err(CliError::Config("missing field `domain_wall.breaking_from`".into())),
        (None, Some(_)) => return Err(CliError::Config("missing field `domain_wall.breaking`".into())),
    };
    check(
        !diii || (breaking.is_none() && s.strengths.is_none() && s.variant.is_none()),
        "domain_wall",
        "strengths, variant and breaking only apply to class A / AIII",
    )?;
    let theta_range = s.theta_range.unwrap_or(match variant {
        UnitaryVariant::Longrange => std::f64::consts::FRAC_PI_4,
        _ => std::f64::consts::PI,
    });
    check(theta_range > 0.0, "domain_wall.theta_range", "must be positive")?;
    Ok(DomainWall {
        class,
        length,
        steps,
        layout,
        segments,
        k: s.k.unwrap_or(0.5),
        background: s.background.unwrap_or(if diii { 0.1 } else { 0.0 }),
        trajectories,
        reference: s.reference.unwrap_or_default(),
        strengths,
        variant,
        theta_range,
        breaking,
    })
}

fn braid(s: &BraidFile) -> Result<Braid, CliError> {
    let chain_len = need(&s.chain_len, "braid.chain_len")?;
    check(chain_len >= 8 && chain_len % 4 == 0, "braid.chain_len", "must be a multiple of 4, at least 8")?;
    let trajectories = s.trajectories.unwrap_or(1);
    check(trajectories >= 1, "braid.trajectories", "must be at least 1")?;
    let p_inside = s.p_inside.unwrap_or(0.15);
    let p_outside = s.p_outside.unwrap_or(0.85);
    check((0.0..=1.0).contains(&p_inside), "braid.p_inside", "must lie in [0, 1]")?;
    check((0.0..=1.0).contains(&p_outside), "braid.p_outside", "must lie in [0, 1]")?;
    let hold = s.hold.unwrap_or(8);
    let sweep = s.sweep.unwrap_or(12);
    check(hold >= 1, "braid.hold", "must be at least 1")?;
    check(sweep >= 1, "braid.sweep", "must be at least 1")?;
    Ok(Braid {
        chain_len,
        trajectories,
        hold,
        sweep,
        p_inside,
        p_outside,
        k: s.k.unwrap_or(0.5),
        idealized: s.idealized.unwrap_or(false),
    })
}
