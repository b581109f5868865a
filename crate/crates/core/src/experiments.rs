//! Trajectory runner and experiment drivers.
//!
//! Each work item draws from its own random stream keyed by its coordinates,
//! and ensemble results are aggregated in a fixed order, so the output is
//! independent of the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceMatrix;
use crate::entanglement::{contour, entropy, mutual_information, RegionSpec};
use crate::error::{invalid, Error, Result};
use crate::gates::{alpha_from_tanh_sq, alpha_max, sample_a, sample_aiii, sample_diii, ChoiCache, GateSpec};
use crate::rng::{trajectory_rng, TrajectoryRng};
use crate::schedules::{
    class_a_schedule, staggered_diii, BraidingProgram, ClassAProgram, ComplexClass, DiiiProgram, DiiiSlot,
    Geometry,
};
use crate::Sign;

/// A circuit together with the geometry it acts on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "circuit", rename_all = "snake_case")]
pub enum Circuit {
    Diii { program: DiiiProgram, geometry: Geometry },
    ClassA { program: ClassAProgram },
    Braiding { program: BraidingProgram, geometry: Geometry },
}

impl Circuit {
    pub fn steps(&self) -> usize {
        match self {
            Circuit::Diii { program, .. } => program.steps,
            Circuit::ClassA { program } => program.steps,
            Circuit::Braiding { program, .. } => program.steps(),
        }
    }

    /// Number of Majoranas the gates act on.
    pub fn physical_majoranas(&self) -> usize {
        match self {
            Circuit::Diii { geometry, .. } | Circuit::Braiding { geometry, .. } => geometry.num_majoranas(),
            Circuit::ClassA { program } => 4 * program.cells,
        }
    }

    /// Gates per time step, for dry-run estimates.
    pub fn gates_per_step(&self) -> usize {
        match self {
            Circuit::Diii { geometry, .. } => geometry.odd_links().len() + geometry.even_links().len(),
            Circuit::ClassA { program } => 2 * program.cells,
            Circuit::Braiding { geometry, .. } => geometry.odd_links().len() + geometry.even_links().len() + 1,
        }
    }

    fn run_diii_slots(
        slots: &[DiiiSlot],
        state: &mut CovarianceMatrix,
        rng: &mut TrajectoryRng,
        log: &mut Option<Vec<GateSpec>>,
    ) -> Result<f64> {
        let mut log_weight = 0.0;
        for s in slots {
            let out = sample_diii(state, s.i, s.j, s.p, rng)?;
            log_weight += out.weight.ln();
            if let Some(l) = log.as_mut() {
                l.extend(out.applied);
            }
        }
        Ok(log_weight)
    }

    /// Advances the state by time step `t` (1-based) and returns the log of
    /// the product of sampled branch probabilities.
    fn step(
        &self,
        state: &mut CovarianceMatrix,
        t: usize,
        rng: &mut TrajectoryRng,
        cache: &mut ChoiCache,
        log: &mut Option<Vec<GateSpec>>,
    ) -> Result<f64> {
        let mut log_weight = 0.0;
        match self {
            Circuit::Diii { program, geometry } => {
                for half in staggered_diii(program, geometry, t)? {
                    log_weight += Self::run_diii_slots(&half, state, rng, log)?;
                }
            }
            Circuit::Braiding { program, geometry } => {
                for half in program.gates(geometry, t)? {
                    log_weight += Self::run_diii_slots(&half, state, rng, log)?;
                }
            }
            Circuit::ClassA { program } => {
                for half in class_a_schedule(program, t, rng)? {
                    for s in half {
                        let out = match program.class {
                            ComplexClass::Aiii => {
                                sample_aiii(state, cache, s.a, s.b, s.alpha, s.theta1, s.theta2, rng)?
                            }
                            ComplexClass::A => {
                                sample_a(state, cache, s.a, s.b, s.alpha, s.theta1, s.theta2, s.variant, rng)?
                            }
                        };
                        log_weight += out.weight.ln();
                        if let Some(l) = log.as_mut() {
                            l.extend(out.applied);
                        }
                    }
                }
            }
        }
        Ok(log_weight)
    }
}

/// Quantities evaluated during a trajectory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Probes {
    /// Regions whose entropy is recorded.
    pub entropies: Vec<RegionSpec>,
    /// Region pairs whose mutual information is recorded.
    pub mutual_information: Vec<(RegionSpec, RegionSpec)>,
    /// Region whose contour fills the heatmap.
    pub contour: Option<RegionSpec>,
    /// Probe every `cadence` steps (and always at the first and last step).
    pub cadence: usize,
    /// Keep the applied gate list for replay.
    pub record_outcomes: bool,
}

/// Runtime knobs of the trajectory runner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Purify every this many steps; `None` disables purification (mixed states).
    pub purify_every: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { purify_every: Some(10) }
    }
}

/// Everything recorded for one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub master_seed: u64,
    pub stream: Vec<u64>,
    /// Probe times; `0` is the initial state.
    pub times: Vec<usize>,
    /// `entropy[k][r]`: region `r` at `times[k]`.
    pub entropy: Vec<Vec<f64>>,
    pub mutual_information: Vec<Vec<f64>>,
    /// `contour[k][i]`: site `i` of the contour region at `times[k]`.
    pub contour: Vec<Vec<f64>>,
    /// `Σ ln(branch probability)` over all sampled gates.
    pub log_weight: f64,
    /// Largest purity defect seen before a purification step.
    pub max_purity_drift: f64,
    pub final_purity_defect: f64,
    pub outcomes: Option<Vec<GateSpec>>,
}

impl TrajectoryRecord {
    /// Sum of each contour row.
    pub fn contour_totals(&self) -> Vec<f64> {
        self.contour.iter().map(|row| row.iter().sum()).collect()
    }

    /// Entropy series of region `r`.
    pub fn entropy_series(&self, r: usize) -> Vec<f64> {
        self.entropy.iter().map(|row| row[r]).collect()
    }

    pub fn mutual_information_series(&self, r: usize) -> Vec<f64> {
        self.mutual_information.iter().map(|row| row[r]).collect()
    }
}

fn probe(state: &CovarianceMatrix, probes: &Probes, rec: &mut TrajectoryRecord, t: usize) -> Result<()> {
    rec.times.push(t);
    rec.entropy.push(
        probes
            .entropies
            .iter()
            .map(|r| entropy(state, r))
            .collect::<Result<_>>()?,
    );
    rec.mutual_information.push(
        probes
            .mutual_information
            .iter()
            .map(|(a, b)| mutual_information(state, a, b))
            .collect::<Result<_>>()?,
    );
    if let Some(region) = &probes.contour {
        rec.contour.push(contour(state, region)?.values);
    }
    Ok(())
}

/// Runs `circuit` from `init` for all its time steps.
///
/// The generator is derived from `master_seed` and `stream`, so the record is
/// a pure function of its arguments.
pub fn run_trajectory(
    circuit: &Circuit,
    init: CovarianceMatrix,
    master_seed: u64,
    stream: &[u64],
    probes: &Probes,
    options: &RunOptions,
) -> Result<(TrajectoryRecord, CovarianceMatrix)> {
    let mut rng = trajectory_rng(master_seed, stream);
    run_with_rng(circuit, init, &mut rng, probes, options, master_seed, stream)
}

fn run_with_rng(
    circuit: &Circuit,
    init: CovarianceMatrix,
    rng: &mut TrajectoryRng,
    probes: &Probes,
    options: &RunOptions,
    master_seed: u64,
    stream: &[u64],
) -> Result<(TrajectoryRecord, CovarianceMatrix)> {
    if init.len() < circuit.physical_majoranas() {
        return invalid(format!(
            "initial state has {} Majoranas, the circuit needs {}",
            init.len(),
            circuit.physical_majoranas()
        ));
    }
    let mut state = init;
    let mut cache = ChoiCache::new();
    let mut log = probes.record_outcomes.then(Vec::new);
    let mut rec = TrajectoryRecord {
        master_seed,
        stream: stream.to_vec(),
        times: vec![],
        entropy: vec![],
        mutual_information: vec![],
        contour: vec![],
        log_weight: 0.0,
        max_purity_drift: 0.0,
        final_purity_defect: 0.0,
        outcomes: None,
    };
    let steps = circuit.steps();
    let cadence = probes.cadence.max(1);
    probe(&state, probes, &mut rec, 0)?;
    for t in 1..=steps {
        rec.log_weight += circuit.step(&mut state, t, rng, &mut cache, &mut log)?;
        state.check_invariants()?;
        if let Some(every) = options.purify_every {
            if every > 0 && t % every == 0 {
                let drift = state.polish()?;
                rec.max_purity_drift = rec.max_purity_drift.max(drift);
            }
        }
        if t % cadence == 0 || t == steps {
            probe(&state, probes, &mut rec, t)?;
        }
    }
    if options.purify_every.is_some() {
        rec.final_purity_defect = state.purity_defect();
    }
    rec.outcomes = log;
    Ok((rec, state))
}

/// Physical and reference halves of a doubled system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRegions {
    pub physical: RegionSpec,
    pub reference: RegionSpec,
}

/// Physical chain of `len` Majoranas (indices `0..len`) paired mode by mode
/// with a reference chain (`len..2len`), `i γ_i γ'_i = +1`.
pub fn with_reference(len: usize) -> Result<(CovarianceMatrix, ReferenceRegions)> {
    if len == 0 || len % 2 == 1 {
        return invalid(format!("physical Majorana count must be even and positive, got {len}"));
    }
    let pairs: Vec<_> = (0..len).map(|i| (i, len + i, Sign::Plus)).collect();
    let state = CovarianceMatrix::from_dimers(&pairs, 2 * len)?;
    let regions = ReferenceRegions {
        physical: RegionSpec::new((0..len).collect(), "physical")?,
        reference: RegionSpec::new((len..2 * len).collect(), "reference")?,
    };
    Ok((state, regions))
}

/// How the reference chain of a domain-wall run is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// Full `2L × 2L` pure state, purified at the configured cadence.
    Explicit,
    /// Only the physical block, a mixed state starting from `Γ = 0`.
    ///
    /// Gates never touch the reference, so the physical block evolves on its
    /// own and its entropy equals the entanglement with the reference.
    #[default]
    Traced,
}

/// Domain-wall run: the physical chain starts maximally entangled with a
/// reference, and the contour of the physical chain is recorded every step.
///
/// The first entropy probe is `S_p`.
pub fn dw_run(
    circuit: &Circuit,
    master_seed: u64,
    trajectory: u64,
    mode: ReferenceMode,
    options: &RunOptions,
) -> Result<TrajectoryRecord> {
    if matches!(circuit, Circuit::Braiding { .. }) {
        return invalid("domain-wall runs need a DIII or class-A program");
    }
    let len = circuit.physical_majoranas();
    let physical = RegionSpec::new((0..len).collect(), "physical")?;
    let probes = Probes {
        entropies: vec![physical.clone()],
        mutual_information: vec![],
        contour: Some(physical),
        cadence: 1,
        record_outcomes: false,
    };
    let (init, opts) = match mode {
        ReferenceMode::Explicit => (with_reference(len)?.0, *options),
        ReferenceMode::Traced => (
            CovarianceMatrix::from_matrix(nalgebra::DMatrix::zeros(len, len))?,
            RunOptions { purify_every: None },
        ),
    };
    let (rec, _) = run_trajectory(circuit, init, master_seed, &[DW_TAG, trajectory], &probes, &opts)?;
    Ok(rec)
}

const SWEEP_TAG: u64 = 1;
const DW_TAG: u64 = 2;
const BRAID_TAG: u64 = 3;

/// The three chain regions of a T-junction.
pub fn braiding_regions(geometry: &Geometry) -> Result<[RegionSpec; 3]> {
    let names = ["A", "B", "C"];
    let mut out = Vec::new();
    for (c, name) in names.iter().enumerate() {
        out.push(RegionSpec::new(geometry.chain_indices(c), *name)?);
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

/// Braiding run on a T-junction starting from the odd-link dimer state.
///
/// Mutual information series are ordered `(AB, BC, CA)`.
pub fn braid_run(
    program: &BraidingProgram,
    master_seed: u64,
    trajectory: u64,
    options: &RunOptions,
) -> Result<TrajectoryRecord> {
    let geometry = Geometry::t_junction(program.chain_len)?;
    let [a, b, c] = braiding_regions(&geometry)?;
    let pairs: Vec<_> = geometry.odd_links().iter().map(|l| (l.i, l.j, Sign::Plus)).collect();
    let init = CovarianceMatrix::from_dimers(&pairs, geometry.num_majoranas())?;
    let probes = Probes {
        entropies: vec![],
        mutual_information: vec![(a.clone(), b.clone()), (b, c.clone()), (c, a)],
        contour: None,
        cadence: 1,
        record_outcomes: false,
    };
    let circuit = Circuit::Braiding {
        program: program.clone(),
        geometry,
    };
    let (rec, _) = run_trajectory(&circuit, init, master_seed, &[BRAID_TAG, trajectory], &probes, options)?;
    Ok(rec)
}

/// Symmetry class of a phase-diagram sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepClass {
    /// Parameter `p`; sizes in Majoranas.
    Diii,
    /// Parameter `tanh²α₀` with `tanh²α₁ = 1 − tanh²α₀`; sizes in unit cells.
    Aiii,
    A,
}

/// Phase-diagram sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub class: SweepClass,
    pub lengths: Vec<usize>,
    pub grid: Vec<f64>,
    pub ensemble: usize,
    /// Cells with fewer surviving realizations are an error.
    pub min_realizations: usize,
    /// Time steps are `equilibration × L`.
    pub equilibration: usize,
    pub master_seed: u64,
    pub options: RunOptions,
}

/// Mean and standard error of the steady-state MI at one `(L, parameter)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub length: usize,
    pub parameter: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub discarded: usize,
}

/// Parameter where the MI curves of two sizes intersect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub smaller: usize,
    pub larger: usize,
    pub parameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub class: SweepClass,
    pub lengths: Vec<usize>,
    pub grid: Vec<f64>,
    pub cells: Vec<SummaryCell>,
    pub crossings: Vec<Crossing>,
}

impl EnsembleSummary {
    pub fn cell(&self, length: usize, parameter: f64) -> Option<&SummaryCell> {
        self.cells
            .iter()
            .find(|c| c.length == length && (c.parameter - parameter).abs() < 1e-12)
    }

    /// Mean MI curve of one size over the grid.
    pub fn curve(&self, length: usize) -> Vec<f64> {
        self.grid
            .iter()
            .filter_map(|&p| self.cell(length, p).map(|c| c.mean))
            .collect()
    }
}

/// Circuit used at one sweep point.
pub fn sweep_circuit(class: SweepClass, length: usize, parameter: f64, steps: usize) -> Result<Circuit> {
    if !(0.0..=1.0).contains(&parameter) {
        return invalid(format!("sweep parameter must lie in [0, 1], got {parameter}"));
    }
    Ok(match class {
        SweepClass::Diii => Circuit::Diii {
            program: DiiiProgram::uniform(parameter, steps)?,
            geometry: Geometry::ring(length)?,
        },
        SweepClass::Aiii | SweepClass::A => {
            // tanh²α = 1 is a projector; cap at the largest supported strength.
            let strength = |t: f64| alpha_from_tanh_sq(t).min(alpha_max());
            let complex = if class == SweepClass::Aiii {
                ComplexClass::Aiii
            } else {
                ComplexClass::A
            };
            Circuit::ClassA {
                program: ClassAProgram::sweep(
                    complex,
                    length,
                    strength(parameter),
                    strength(1.0 - parameter),
                    steps,
                ),
            }
        }
    })
}

/// Antipodal regions `A = [x, x + L/4)` and `B = [x + L/2, x + 3L/4)` for all
/// `L/2` placements `x`, in Majorana indices.
///
/// For class-A sweeps `length` counts unit cells of four Majoranas each.
pub fn antipodal_regions(class: SweepClass, length: usize) -> Result<Vec<(RegionSpec, RegionSpec)>> {
    if length % 4 != 0 || length < 4 {
        return invalid(format!("antipodal regions need L divisible by 4, got {length}"));
    }
    let per = if class == SweepClass::Diii { 1 } else { 4 };
    let total = length * per;
    let quarter = length / 4 * per;
    let mut out = Vec::with_capacity(length / 2);
    for x in 0..length / 2 {
        let start = x * per;
        out.push((
            RegionSpec::contiguous(start, quarter, total, "A")?,
            RegionSpec::contiguous(start + total / 2, quarter, total, "B")?,
        ));
    }
    Ok(out)
}

fn initial_sweep_state(class: SweepClass, length: usize, rng: &mut TrajectoryRng) -> Result<CovarianceMatrix> {
    match class {
        SweepClass::Diii => {
            let parities = vec![Sign::Plus; length / 2];
            CovarianceMatrix::random_pure_state(length, &parities, false, rng)
        }
        SweepClass::Aiii | SweepClass::A => {
            // Half filling: modes alternate empty / occupied.
            let modes = 2 * length;
            let parities: Vec<Sign> = (0..modes)
                .map(|x| if x % 2 == 0 { Sign::Plus } else { Sign::Minus })
                .collect();
            CovarianceMatrix::random_pure_state(2 * modes, &parities, true, rng)
        }
    }
}

/// Steady-state MI of one sweep realization, averaged over region placements.
pub fn sweep_realization(
    config: &SweepConfig,
    length: usize,
    grid_index: usize,
    realization: usize,
) -> Result<f64> {
    let parameter = config.grid[grid_index];
    let steps = config.equilibration.max(1) * length;
    let circuit = sweep_circuit(config.class, length, parameter, steps)?;
    let stream = [SWEEP_TAG, length as u64, grid_index as u64, realization as u64];
    let mut rng = trajectory_rng(config.master_seed, &stream);
    let init = initial_sweep_state(config.class, length, &mut rng)?;
    let probes = Probes {
        cadence: steps.max(1),
        ..Probes::default()
    };
    let (_, state) = run_with_rng(&circuit, init, &mut rng, &probes, &config.options, config.master_seed, &stream)?;
    let regions = antipodal_regions(config.class, length)?;
    let mut sum = 0.0;
    for (a, b) in &regions {
        sum += mutual_information(&state, a, b)?;
    }
    Ok(sum / regions.len() as f64)
}

/// Estimated MI crossings between consecutive sizes, by linear interpolation
/// of the difference of their curves.
pub fn estimate_crossings(lengths: &[usize], grid: &[f64], curves: &[Vec<f64>]) -> Vec<Crossing> {
    let mut out = Vec::new();
    for k in 0..lengths.len().saturating_sub(1) {
        let (small, large) = (&curves[k], &curves[k + 1]);
        let diff: Vec<f64> = large.iter().zip(small).map(|(b, a)| b - a).collect();
        for g in 0..grid.len().saturating_sub(1) {
            let (d0, d1) = (diff[g], diff[g + 1]);
            if d0 == 0.0 && g > 0 {
                continue;
            }
            if d0 == 0.0 {
                out.push(Crossing {
                    smaller: lengths[k],
                    larger: lengths[k + 1],
                    parameter: grid[g],
                });
            } else if d0 * d1 < 0.0 {
                let f = d0 / (d0 - d1);
                out.push(Crossing {
                    smaller: lengths[k],
                    larger: lengths[k + 1],
                    parameter: grid[g] + f * (grid[g + 1] - grid[g]),
                });
            }
        }
    }
    out
}

/// Significance (in combined standard errors) required of the curve
/// differences that bracket a reported crossing.
pub const CROSSING_Z: f64 = 2.0;

/// Curve differences at or below this size are rounding noise, whatever
/// their standard error (both curves vanish at the measurement-only ends).
pub const MI_ROUNDING: f64 = 1e-9;

/// Runs every `(L, parameter, realization)` work item and aggregates them in
/// grid order.
///
/// Trajectories that die from an impossible outcome are discarded and
/// counted; a cell with fewer than `min_realizations` survivors is an error.
pub fn phase_sweep(config: &SweepConfig) -> Result<EnsembleSummary> {
    if config.ensemble == 0 {
        return invalid("ensemble size must be at least 1");
    }
    if config.grid.is_empty() || config.lengths.is_empty() {
        return invalid("sweep needs at least one size and one grid point");
    }
    let mut items = Vec::new();
    for &l in &config.lengths {
        for g in 0..config.grid.len() {
            for r in 0..config.ensemble {
                items.push((l, g, r));
            }
        }
    }
    let results: Vec<Result<f64>> = items
        .par_iter()
        .map(|&(l, g, r)| sweep_realization(config, l, g, r))
        .collect();
    let mut cells = Vec::new();
    let mut idx = 0;
    for &l in &config.lengths {
        for &parameter in &config.grid {
            let mut values = Vec::with_capacity(config.ensemble);
            let mut discarded = 0;
            for _ in 0..config.ensemble {
                match &results[idx] {
                    Ok(v) => values.push(*v),
                    Err(Error::AnnihilatedTrajectory { .. }) | Err(Error::PostSelectionImpossible) => discarded += 1,
                    Err(e) => return Err(e.clone()),
                }
                idx += 1;
            }
            if values.len() < config.min_realizations {
                return Err(Error::InsufficientRealizations {
                    got: values.len(),
                    required: config.min_realizations,
                });
            }
            let (mean, stderr) = mean_stderr(&values);
            cells.push(SummaryCell {
                length: l,
                parameter,
                mean,
                stderr,
                n: values.len(),
                discarded,
            });
        }
    }
    let mut summary = EnsembleSummary {
        class: config.class,
        lengths: config.lengths.clone(),
        grid: config.grid.clone(),
        cells,
        crossings: vec![],
    };
    summary.crossings = significant_crossings(&summary, CROSSING_Z);
    Ok(summary)
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Pointwise median of equally long series.
pub fn median_series(series: &[Vec<f64>]) -> Vec<f64> {
    if series.is_empty() {
        return vec![];
    }
    let len = series[0].len();
    (0..len)
        .map(|k| {
            let mut col: Vec<f64> = series.iter().map(|s| s[k]).collect();
            median(&mut col)
        })
        .collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs `count` independent domain-wall trajectories in parallel, in index order.
pub fn dw_ensemble(
    circuit: &Circuit,
    master_seed: u64,
    count: usize,
    mode: ReferenceMode,
    options: &RunOptions,
) -> Result<Vec<TrajectoryRecord>> {
    (0..count as u64)
        .into_par_iter()
        .map(|k| dw_run(circuit, master_seed, k, mode, options))
        .collect()
}

/// Runs `count` independent braiding trajectories in parallel, in index order.
pub fn braid_ensemble(
    program: &BraidingProgram,
    master_seed: u64,
    count: usize,
    options: &RunOptions,
) -> Result<Vec<TrajectoryRecord>> {
    (0..count as u64)
        .into_par_iter()
        .map(|k| braid_run(program, master_seed, k, options))
        .collect()
}

/// Contour summed over the window `[x − half, x + half]` of site positions
/// `1..=n` (1-based), wrapping on a ring of `n` sites.
pub fn window_integral(row: &[f64], x: f64, half: f64, periodic: bool) -> f64 {
    let n = row.len() as f64;
    row.iter()
        .enumerate()
        .filter(|(i, _)| {
            let pos = *i as f64 + 1.0;
            let mut d = (pos - x).abs();
            if periodic {
                d = d.min(n - d);
            }
            d <= half
        })
        .map(|(_, v)| v)
        .sum()
}

/// Groups a per-Majorana class-A contour row into per-cell sums.
pub fn cell_contour(row: &[f64]) -> Vec<f64> {
    row.chunks(4).map(|c| c.iter().sum()).collect()
}

/// Contour assigned to each wall by nearest-wall partition of the positions
/// `1..=n` (1-based); ties go to the first wall listed.
pub fn partition_integrals(row: &[f64], walls: &[f64], periodic: bool) -> Vec<f64> {
    let n = row.len() as f64;
    let mut out = vec![0.0; walls.len()];
    if walls.is_empty() {
        return out;
    }
    for (i, v) in row.iter().enumerate() {
        let pos = i as f64 + 1.0;
        let dist = |x: f64| {
            let d = (pos - x).abs();
            if periodic {
                d.min(n - d)
            } else {
                d
            }
        };
        let (k, _) = walls
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (k, &x)| if dist(x) < best.1 { (k, dist(x)) } else { best });
        out[k] += v;
    }
    out
}

/// Window integrals around each wall with the mean contour outside all
/// windows subtracted site by site, so a delocalized background counts as zero.
pub fn peak_excess(row: &[f64], walls: &[f64], half: f64, periodic: bool) -> Vec<f64> {
    let n = row.len() as f64;
    let near = |i: usize, x: f64| {
        let d = (i as f64 + 1.0 - x).abs();
        (if periodic { d.min(n - d) } else { d }) <= half
    };
    let outside: Vec<f64> = (0..row.len())
        .filter(|&i| !walls.iter().any(|&x| near(i, x)))
        .map(|i| row[i])
        .collect();
    let background = if outside.is_empty() {
        0.0
    } else {
        outside.iter().sum::<f64>() / outside.len() as f64
    };
    walls
        .iter()
        .map(|&x| (0..row.len()).filter(|&i| near(i, x)).map(|i| row[i] - background).sum())
        .collect()
}

/// Plateau of each braiding stage as `(AB, BC, CA)`: the per-step median
/// across trajectories, averaged over the steps `[start, end)` of each hold
/// window.
pub fn staircase(records: &[TrajectoryRecord], program: &BraidingProgram) -> Result<Vec<[f64; 3]>> {
    if records.is_empty() {
        return invalid("staircase needs at least one trajectory");
    }
    let series: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|r| records.iter().map(|rec| rec.mutual_information_series(r)).collect())
        .collect();
    let medians: Vec<Vec<f64>> = series.iter().map(|s| median_series(s)).collect();
    let mut out = Vec::new();
    for (start, end) in program.hold_windows() {
        if end > medians[0].len() || start >= end {
            return invalid(format!("hold window ({start}, {end}) outside the recorded series"));
        }
        let mut plateau = [0.0; 3];
        for (p, m) in plateau.iter_mut().zip(&medians) {
            *p = m[start..end].iter().sum::<f64>() / (end - start) as f64;
        }
        out.push(plateau);
    }
    Ok(out)
}

/// Grid points `[start, end]` (inclusive parameters) over which the MI of
/// the `larger` size is not significantly below that of the `smaller` one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRun {
    pub smaller: usize,
    pub larger: usize,
    pub start: f64,
    pub end: f64,
}

/// `(difference, combined standard error)` of consecutive size curves at each grid point.
fn curve_differences(summary: &EnsembleSummary, k: usize) -> Option<Vec<(f64, f64)>> {
    let (l1, l2) = (summary.lengths[k], summary.lengths[k + 1]);
    summary
        .grid
        .iter()
        .map(|&p| {
            let (a, b) = (summary.cell(l1, p)?, summary.cell(l2, p)?);
            Some((b.mean - a.mean, (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()))
        })
        .collect()
}

/// Crossings of consecutive size curves whose sign change is significant.
///
/// A crossing is bracketed by two grid points whose differences
/// `MI(L₂) − MI(L₁)` have opposite signs and each exceed `z` combined
/// standard errors and [`MI_ROUNDING`], with no significant point between
/// them. It is placed at the first zero of the linearly interpolated raw
/// difference inside the bracket.
pub fn significant_crossings(summary: &EnsembleSummary, z: f64) -> Vec<Crossing> {
    let mut out = Vec::new();
    for k in 0..summary.lengths.len().saturating_sub(1) {
        let Some(diff) = curve_differences(summary, k) else { continue };
        let significant: Vec<usize> = (0..diff.len())
            .filter(|&g| diff[g].0.abs() > (z * diff[g].1).max(MI_ROUNDING))
            .collect();
        for pair in significant.windows(2) {
            let (i, j) = (pair[0], pair[1]);
            if diff[i].0 * diff[j].0 >= 0.0 {
                continue;
            }
            let sign = diff[i].0.signum();
            let g = (i..j)
                .find(|&g| diff[g + 1].0 * sign <= 0.0)
                .expect("the sign flips inside the bracket");
            let (d0, d1) = (diff[g].0, diff[g + 1].0);
            let f = if d0 == d1 { 0.0 } else { d0 / (d0 - d1) };
            out.push(Crossing {
                smaller: summary.lengths[k],
                larger: summary.lengths[k + 1],
                parameter: summary.grid[g] + f * (summary.grid[g + 1] - summary.grid[g]),
            });
        }
    }
    out
}

/// Maximal runs of grid points where the MI does not decrease significantly
/// (by more than `z` combined standard errors) from one size to the next.
/// Points where the smaller size's MI is below `floor` carry no scaling
/// information and end a run.
///
/// In area-law phases the MI falls with `L`, so a single critical point
/// shows up as one run shrinking onto it.
pub fn scaling_runs(summary: &EnsembleSummary, z: f64, floor: f64) -> Vec<ScalingRun> {
    let mut out = Vec::new();
    for k in 0..summary.lengths.len().saturating_sub(1) {
        let Some(diff) = curve_differences(summary, k) else { continue };
        let small = summary.curve(summary.lengths[k]);
        let mut start: Option<usize> = None;
        for g in 0..=diff.len() {
            let holds = g < diff.len() && small[g] >= floor && diff[g].0 >= -z * diff[g].1;
            match (holds, start) {
                (true, None) => start = Some(g),
                (false, Some(s)) => {
                    out.push(ScalingRun {
                        smaller: summary.lengths[k],
                        larger: summary.lengths[k + 1],
                        start: summary.grid[s],
                        end: summary.grid[g - 1],
                    });
                    start = None;
                }
                _ => {}
            }
        }
    }
    out
}
