//! Geometries and spacetime programs.
//!
//! Positions along a chain are 1-based real coordinates: Majorana `m`
//! (0-based) sits at `m + 1`, and a link `(m, m+1)` is evaluated at its centre
//! `m + 1.5`. Class-A programs use cell coordinates `cell + 0.5`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{Site, UnitaryVariant};

fn schedule_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Schedule(msg.into()))
}

/// `(1 + tanh z)/2`.
pub fn sigmoid(z: f64) -> f64 {
    0.5 * (1.0 + z.tanh())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Ring,
    OpenChain,
    TJunction,
}

/// A Majorana link with the chain it belongs to and its centre coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub i: usize,
    pub j: usize,
    pub chain: usize,
    pub x: f64,
}

/// Ring, open chain, or three open chains meeting at a T-junction.
///
/// Chain `c`, site `s` (0-based, counted from the outer end towards the
/// junction) maps to Majorana `c·L + s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub kind: GeometryKind,
    pub chain_len: usize,
}

impl Geometry {
    pub fn ring(len: usize) -> Result<Self> {
        Self::new(GeometryKind::Ring, len)
    }

    pub fn open_chain(len: usize) -> Result<Self> {
        Self::new(GeometryKind::OpenChain, len)
    }

    pub fn t_junction(chain_len: usize) -> Result<Self> {
        Self::new(GeometryKind::TJunction, chain_len)
    }

    fn new(kind: GeometryKind, chain_len: usize) -> Result<Self> {
        if chain_len < 4 || chain_len % 2 == 1 {
            return schedule_err(format!("chain length must be even and at least 4, got {chain_len}"));
        }
        Ok(Self { kind, chain_len })
    }

    pub fn num_chains(&self) -> usize {
        if self.kind == GeometryKind::TJunction {
            3
        } else {
            1
        }
    }

    pub fn num_majoranas(&self) -> usize {
        self.num_chains() * self.chain_len
    }

    pub fn index(&self, chain: usize, site: usize) -> usize {
        chain * self.chain_len + site
    }

    /// Majorana indices of one chain, outermost first.
    pub fn chain_indices(&self, chain: usize) -> Vec<usize> {
        (0..self.chain_len).map(|s| self.index(chain, s)).collect()
    }

    /// Links `(2m, 2m+1)` of every chain.
    pub fn odd_links(&self) -> Vec<Link> {
        let mut out = Vec::new();
        for c in 0..self.num_chains() {
            for m in (0..self.chain_len).step_by(2) {
                out.push(Link {
                    i: self.index(c, m),
                    j: self.index(c, m + 1),
                    chain: c,
                    x: m as f64 + 1.5,
                });
            }
        }
        out
    }

    /// Links `(2m+1, 2m+2)` of every chain, plus the wrap link on a ring.
    pub fn even_links(&self) -> Vec<Link> {
        let mut out = Vec::new();
        for c in 0..self.num_chains() {
            for m in (1..self.chain_len - 1).step_by(2) {
                out.push(Link {
                    i: self.index(c, m),
                    j: self.index(c, m + 1),
                    chain: c,
                    x: m as f64 + 1.5,
                });
            }
        }
        if self.kind == GeometryKind::Ring {
            out.push(Link {
                i: self.chain_len - 1,
                j: 0,
                chain: 0,
                x: self.chain_len as f64 + 0.5,
            });
        }
        out
    }
}

/// A domain wall moving linearly from `i_start` at `t_start` to `i_end` at
/// `t_end`, active for `t_start ≤ t < t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub i_start: f64,
    pub i_end: f64,
    pub left_value: f64,
    pub right_value: f64,
}

impl DwSegment {
    pub fn new(t: (f64, f64), i: (f64, f64), left_value: f64, right_value: f64) -> Self {
        Self {
            t_start: t.0,
            t_end: t.1,
            i_start: i.0,
            i_end: i.1,
            left_value,
            right_value,
        }
    }

    pub fn active(&self, t: f64) -> bool {
        self.t_start <= t && t < self.t_end
    }

    pub fn position(&self, t: f64) -> f64 {
        let f = (t - self.t_start) / (self.t_end - self.t_start);
        self.i_start + (self.i_end - self.i_start) * f
    }
}

/// Wall position and plateau values at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub x: f64,
    pub left: f64,
    pub right: f64,
}

const PLATEAU_TOL: f64 = 1e-9;

/// Plateau values interpolated across moving walls with `tanh(k(x − w))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallProfile {
    pub segments: Vec<DwSegment>,
    pub k: f64,
    /// Value everywhere when no wall is active.
    pub background: f64,
    /// Ring circumference in position units, `None` for open chains.
    pub period: Option<f64>,
}

/// Builds a profile and checks plateau consistency at every integer and
/// half-integer time covered by the segments.
pub fn smooth_profile(
    segments: Vec<DwSegment>,
    k: f64,
    background: f64,
    period: Option<f64>,
) -> Result<WallProfile> {
    if !(k > 0.0 && k.is_finite()) {
        return schedule_err(format!("smoothing constant must be positive, got {k}"));
    }
    for s in &segments {
        if !(s.t_end > s.t_start) {
            return schedule_err(format!("segment ends before it starts: {s:?}"));
        }
    }
    let profile = WallProfile {
        segments,
        k,
        background,
        period,
    };
    let t_min = profile.segments.iter().map(|s| s.t_start).fold(f64::INFINITY, f64::min);
    let t_max = profile.segments.iter().map(|s| s.t_end).fold(f64::NEG_INFINITY, f64::max);
    if t_min.is_finite() {
        let mut t = t_min.floor();
        while t <= t_max {
            profile.walls_at(t)?;
            profile.walls_at(t + 0.5)?;
            t += 1.0;
        }
    }
    Ok(profile)
}

impl WallProfile {
    /// Active walls sorted along the (unwrapped) chain, with the coordinate offset used.
    fn ordered_walls(&self, t: f64) -> Result<(Vec<Wall>, f64)> {
        let mut walls: Vec<Wall> = self
            .segments
            .iter()
            .filter(|s| s.active(t))
            .map(|s| Wall {
                x: s.position(t),
                left: s.left_value,
                right: s.right_value,
            })
            .collect();
        let mut cut = f64::NEG_INFINITY;
        if let Some(period) = self.period {
            for w in walls.iter_mut() {
                w.x = w.x.rem_euclid(period);
            }
            walls.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
            if !walls.is_empty() {
                // Unwrap at the middle of the widest gap between walls.
                let n = walls.len();
                let (mut best, mut best_gap) = (0, -1.0);
                for k in 0..n {
                    let next = if k + 1 < n { walls[k + 1].x } else { walls[0].x + period };
                    let gap = next - walls[k].x;
                    if gap > best_gap {
                        best_gap = gap;
                        best = k;
                    }
                }
                cut = walls[best].x + best_gap / 2.0;
                for w in walls.iter_mut() {
                    if w.x < cut {
                        w.x += period;
                    }
                }
            }
        }
        walls.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        resolve_ties(&mut walls);
        for pair in walls.windows(2) {
            if (pair[0].right - pair[1].left).abs() > PLATEAU_TOL {
                return schedule_err(format!(
                    "contradictory plateaus at t = {t}: {} vs {} near x = {}",
                    pair[0].right, pair[1].left, pair[1].x
                ));
            }
        }
        if self.period.is_some() && walls.len() > 1 {
            let (first, last) = (walls[0], walls[walls.len() - 1]);
            if (last.right - first.left).abs() > PLATEAU_TOL {
                return schedule_err(format!("ring plateaus do not close at t = {t}"));
            }
        }
        Ok((walls, cut))
    }

    /// Active walls at time `t`, ordered along the chain.
    pub fn walls_at(&self, t: f64) -> Result<Vec<Wall>> {
        let (mut walls, _) = self.ordered_walls(t)?;
        if let Some(period) = self.period {
            for w in walls.iter_mut() {
                w.x = w.x.rem_euclid(period);
            }
        }
        Ok(walls)
    }

    /// Profile value at position `x` and time `t`.
    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        let (walls, cut) = self.ordered_walls(t)?;
        if walls.is_empty() {
            return Ok(self.background);
        }
        let x = match self.period {
            Some(period) => {
                let mut y = x.rem_euclid(period);
                while y < cut {
                    y += period;
                }
                while y >= cut + period {
                    y -= period;
                }
                y
            }
            None => x,
        };
        let mut v = walls[0].left;
        for w in &walls {
            v += (w.right - w.left) * sigmoid(self.k * (x - w.x));
        }
        Ok(v)
    }
}

/// Orders walls sharing a position so that their plateaus chain up, if possible.
fn resolve_ties(walls: &mut [Wall]) {
    let n = walls.len();
    let mut k = 0;
    while k + 1 < n {
        if (walls[k].x - walls[k + 1].x).abs() < 1e-12 {
            let prev_right = if k > 0 { Some(walls[k - 1].right) } else { None };
            let fits = |a: &Wall, b: &Wall| {
                prev_right.is_none_or(|r| (r - a.left).abs() <= PLATEAU_TOL)
                    && (a.right - b.left).abs() <= PLATEAU_TOL
            };
            if !fits(&walls[k], &walls[k + 1]) && fits(&walls[k + 1], &walls[k]) {
                walls.swap(k, k + 1);
            }
        }
        k += 1;
    }
}

/// Spatial profile of a parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Uniform { value: f64 },
    Walls(WallProfile),
}

impl Profile {
    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        match self {
            Profile::Uniform { value } => Ok(*value),
            Profile::Walls(w) => w.value(x, t),
        }
    }
}

/// A DIII gate location with its measurement probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiiiSlot {
    pub i: usize,
    pub j: usize,
    pub p: f64,
}

/// Staggered DIII brickwork driven by `p_odd(x, t)`, with `p_even = 1 − p_odd`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiiiProgram {
    pub steps: usize,
    pub p_odd: Profile,
}

impl DiiiProgram {
    pub fn uniform(p: f64, steps: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return schedule_err(format!("p must lie in [0, 1], got {p}"));
        }
        Ok(Self {
            steps,
            p_odd: Profile::Uniform { value: p },
        })
    }

    pub fn p_odd_at(&self, x: f64, t: f64) -> Result<f64> {
        let p = self.p_odd.value(x, t)?;
        if !(-1e-12..=1.0 + 1e-12).contains(&p) {
            return schedule_err(format!("p_odd({x}, {t}) = {p} outside [0, 1]"));
        }
        Ok(p.clamp(0.0, 1.0))
    }
}

/// The two half-steps of DIII gates at time `t`: odd links, then even links.
pub fn staggered_diii(program: &DiiiProgram, geometry: &Geometry, t: usize) -> Result<[Vec<DiiiSlot>; 2]> {
    if geometry.kind == GeometryKind::TJunction {
        return schedule_err("staggered DIII programs need a ring or an open chain");
    }
    let t = t as f64;
    let mut first = Vec::new();
    for l in geometry.odd_links() {
        first.push(DiiiSlot {
            i: l.i,
            j: l.j,
            p: program.p_odd_at(l.x, t)?,
        });
    }
    let mut second = Vec::new();
    for l in geometry.even_links() {
        second.push(DiiiSlot {
            i: l.i,
            j: l.j,
            p: 1.0 - program.p_odd_at(l.x, t)?,
        });
    }
    Ok([first, second])
}

/// Which Kraus ensemble a class-A-like program samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexClass {
    Aiii,
    A,
}

/// How chiral symmetry is broken from a given time on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiralBreaking {
    /// Measurements pair sites of the same sublattice.
    SameSublatticeMeasurement,
    /// Unitaries couple the two sublattices of a cell.
    CrossSublatticeUnitary,
}

/// Class-A (or AIII) circuit on a ring of unit cells driven by a range profile `r(x, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAProgram {
    pub class: ComplexClass,
    pub steps: usize,
    pub cells: usize,
    pub r: Profile,
    /// Strengths of the `(i𝖠, i+r 𝖡)` and `(i𝖡, i+r+1 𝖠)` gates.
    pub alphas: (f64, f64),
    pub variant: UnitaryVariant,
    /// Half-width of the uniform phase distribution.
    pub theta_range: f64,
    pub breaking: Option<(usize, ChiralBreaking)>,
}

impl ClassAProgram {
    /// Sweep layout: `r = 0`, intra-cell strength `α₀`, inter-cell strength `α₁`.
    pub fn sweep(class: ComplexClass, cells: usize, alpha0: f64, alpha1: f64, steps: usize) -> Self {
        Self {
            class,
            steps,
            cells,
            r: Profile::Uniform { value: 0.0 },
            alphas: (alpha0, alpha1),
            variant: UnitaryVariant::Onsite,
            theta_range: PI,
            breaking: None,
        }
    }
}

/// One sampled class-A gate location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassASlot {
    pub a: Site,
    pub b: Site,
    pub alpha: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub variant: UnitaryVariant,
}

/// Draws the two half-steps of class-A gates at time `t`.
///
/// Each cell rounds `r` to `⌊r⌋` with probability `⌊r⌋ + 1 − r` and to
/// `⌊r⌋ + 1` otherwise; the same offset is used for both of its gates.
pub fn class_a_schedule<R: Rng + ?Sized>(
    program: &ClassAProgram,
    t: usize,
    rng: &mut R,
) -> Result<[Vec<ClassASlot>; 2]> {
    let n = program.cells;
    let breaking = program.breaking.filter(|(t0, _)| t >= *t0).map(|(_, b)| b);
    let variant = match breaking {
        Some(ChiralBreaking::CrossSublatticeUnitary) => UnitaryVariant::ChiralBreaking,
        _ => program.variant,
    };
    let range = program.theta_range;
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for i in 0..n {
        let r = program.r.value(i as f64 + 0.5, t as f64)?;
        if !(r >= 0.0) {
            return schedule_err(format!("negative range r = {r} at cell {i}, t = {t}"));
        }
        let base = r.floor();
        let keep = base + 1.0 - r;
        let offset = if rng.random::<f64>() < keep { base } else { base + 1.0 } as usize;
        if offset + 1 >= n {
            return schedule_err(format!("range {offset} reaches across the {n}-cell ring"));
        }
        let (pair1, pair2) = match breaking {
            Some(ChiralBreaking::SameSublatticeMeasurement) => (
                (Site::a(i), Site::a((i + offset + 1) % n)),
                (Site::b(i), Site::b((i + offset + 1) % n)),
            ),
            _ => (
                (Site::a(i), Site::b((i + offset) % n)),
                (Site::b(i), Site::a((i + offset + 1) % n)),
            ),
        };
        let mut draw = || rng.random_range(-range..range);
        first.push(ClassASlot {
            a: pair1.0,
            b: pair1.1,
            alpha: program.alphas.0,
            theta1: draw(),
            theta2: draw(),
            variant,
        });
        second.push(ClassASlot {
            a: pair2.0,
            b: pair2.1,
            alpha: program.alphas.1,
            theta1: draw(),
            theta2: draw(),
            variant,
        });
    }
    Ok([first, second])
}

/// Four-stage braiding protocol on a T-junction of chains 𝔄, 𝔅, ℭ (0, 1, 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BraidingProgram {
    pub chain_len: usize,
    /// Length of each hold.
    pub hold: usize,
    /// Steps for a wall to cross from `3L/4` on one chain to `L/4` (counted
    /// from the outer end) on another, a distance of `L + 1` sites.
    pub sweep: usize,
    /// `p_odd` inside / outside the dimerized-even regions.
    pub p_inside: f64,
    pub p_outside: f64,
    pub k: f64,
}

/// Stage boundaries `t₀ < t₁ < t₂ < t₃` and the end time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTimes {
    pub t0: usize,
    pub t1: usize,
    pub t2: usize,
    pub t3: usize,
    pub end: usize,
}

/// The standard plan: holds of 8 steps, sweeps of 12 steps, plateaus
/// 0.15 / 0.85 and `k = 0.5`.
pub fn braiding_program(chain_len: usize) -> Result<BraidingProgram> {
    if chain_len < 8 || chain_len % 4 != 0 {
        return schedule_err(format!("braiding needs a chain length divisible by 4, got {chain_len}"));
    }
    Ok(BraidingProgram {
        chain_len,
        hold: 8,
        sweep: 12,
        p_inside: 0.15,
        p_outside: 0.85,
        k: 0.5,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct BraidState {
    regions: [Option<(f64, f64)>; 3],
    junction: Option<(usize, usize)>,
}

impl BraidingProgram {
    /// Measurement-only variant with sharp walls.
    pub fn idealized(mut self) -> Self {
        self.p_inside = 0.0;
        self.p_outside = 1.0;
        self.k = 50.0;
        self
    }

    /// Steps for the wall on 𝔄 to return from the junction to `3L/4`, moving
    /// at the speed of a full sweep.
    pub fn retreat(&self) -> usize {
        let l = self.chain_len as f64;
        ((self.sweep as f64 * (l / 4.0 + 1.0) / (l + 1.0)).ceil() as usize).max(1)
    }

    pub fn stage_times(&self) -> StageTimes {
        let (h, m, r) = (self.hold, self.sweep, self.retreat());
        StageTimes {
            t0: 1,
            t1: 1 + h,
            t2: 1 + 2 * h + m,
            t3: 1 + 3 * h + 2 * m + r,
            end: 1 + 4 * h + 3 * m + r,
        }
    }

    /// Total number of time steps.
    pub fn steps(&self) -> usize {
        self.stage_times().end - 1
    }

    /// Time windows `[start, end)` of the four holds.
    pub fn hold_windows(&self) -> [(usize, usize); 4] {
        let s = self.stage_times();
        let m = self.sweep;
        [
            (s.t0, s.t1),
            (s.t1 + m, s.t2),
            (s.t2 + m + self.retreat(), s.t3),
            (s.t3 + m, s.end),
        ]
    }

    fn state(&self, t: usize) -> BraidState {
        let l = self.chain_len as f64;
        let (lo, hi) = (l / 4.0, 3.0 * l / 4.0);
        // Two chains joined at the junction share the coordinate x on the
        // first and 2L + 1 − x on the second.
        let mirror = 2.0 * l + 1.0;
        let (far, near) = (mirror - lo, mirror - hi);
        let s = self.stage_times();
        let ramp = |from: f64, to: f64, t_start: usize, steps: usize| {
            let f = ((t as f64 - t_start as f64 + 1.0) / steps as f64).clamp(0.0, 1.0);
            from + (to - from) * f
        };
        if t < s.t1 {
            return BraidState {
                regions: [Some((lo, hi)), Some((lo, hi)), None],
                junction: None,
            };
        }
        if t < s.t2 {
            let a_hi = ramp(hi, far, s.t1, self.sweep);
            return BraidState {
                regions: [Some((lo, a_hi)), Some((lo, hi)), Some((mirror - a_hi, mirror - lo))],
                junction: (a_hi >= l + 1.0).then_some((0, 2)),
            };
        }
        let c_region = Some((mirror - far, mirror - lo));
        if t < s.t2 + self.sweep {
            let b_hi = ramp(hi, far, s.t2, self.sweep);
            return BraidState {
                regions: [Some((lo, far)), Some((lo, b_hi)), c_region],
                junction: Some(if b_hi >= l + 1.0 { (1, 2) } else { (0, 2) }),
            };
        }
        if t < s.t3 {
            // 𝔄 is detached from the junction, so its wall starts at the end.
            let a_hi = ramp(l + 1.0, hi, s.t2 + self.sweep, self.retreat());
            return BraidState {
                regions: [Some((lo, a_hi)), Some((lo, far)), c_region],
                junction: Some((1, 2)),
            };
        }
        let c_lo = ramp(mirror - far, near, s.t3, self.sweep);
        let b_hi = mirror - c_lo;
        BraidState {
            regions: [Some((lo, hi)), Some((lo, b_hi)), Some((c_lo, mirror - lo))],
            junction: (b_hi >= l + 1.0).then_some((1, 2)),
        }
    }

    /// `p_odd` on chain `chain` at coordinate `x` and time `t`.
    pub fn p_odd(&self, chain: usize, x: f64, t: usize) -> f64 {
        let indicator = match self.state(t).regions[chain] {
            Some((lo, hi)) => sigmoid(self.k * (x - lo)) - sigmoid(self.k * (x - hi)),
            None => 0.0,
        };
        self.p_outside - (self.p_outside - self.p_inside) * indicator
    }

    /// The measured junction pair `(chain, chain)` at time `t`, if any.
    pub fn junction(&self, t: usize) -> Option<(usize, usize)> {
        self.state(t).junction
    }

    /// Gate slots of the two half-steps at time `t`.
    pub fn gates(&self, geometry: &Geometry, t: usize) -> Result<[Vec<DiiiSlot>; 2]> {
        if geometry.kind != GeometryKind::TJunction || geometry.chain_len != self.chain_len {
            return schedule_err("braiding program needs its matching T-junction geometry");
        }
        let first = geometry
            .odd_links()
            .into_iter()
            .map(|l| DiiiSlot {
                i: l.i,
                j: l.j,
                p: self.p_odd(l.chain, l.x, t),
            })
            .collect();
        let mut second: Vec<DiiiSlot> = geometry
            .even_links()
            .into_iter()
            .map(|l| DiiiSlot {
                i: l.i,
                j: l.j,
                p: 1.0 - self.p_odd(l.chain, l.x, t),
            })
            .collect();
        if let Some((a, b)) = self.junction(t) {
            let end = self.chain_len - 1;
            let x = self.chain_len as f64 + 0.5;
            second.push(DiiiSlot {
                i: geometry.index(a, end),
                j: geometry.index(b, end),
                p: 1.0 - self.p_odd(a, x, t),
            });
        }
        Ok([first, second])
    }
}

/// Wall layouts used by the shipped experiments.
pub mod presets {
    use super::*;

    /// Two DIII walls at `L/4` and `3L/4` (middle `0.9`, outside `0.1`)
    /// introduced at `t = 1`, held until `t = 17`, crossing at `L/2` at
    /// `t = 48`, and continuing until `steps`.
    pub fn diii_crossing_walls(len: usize, steps: usize) -> Result<DiiiProgram> {
        let l = len as f64;
        let (w1, w2, mid) = (l / 4.0, 3.0 * l / 4.0, l / 2.0);
        let (t_hold, t_cross, t_end) = (17.0, 48.0, steps as f64 + 1.0);
        if t_end <= t_cross {
            return schedule_err(format!("crossing walls need at least 48 steps, got {steps}"));
        }
        let v = (mid - w1) / (t_cross - t_hold);
        let after = v * (t_end - t_cross);
        let (lo, hi) = (0.1, 0.9);
        let segments = vec![
            DwSegment::new((1.0, t_hold), (w1, w1), lo, hi),
            DwSegment::new((t_hold, t_cross), (w1, mid), lo, hi),
            DwSegment::new((t_cross, t_end), (mid, mid + after), hi, lo),
            DwSegment::new((1.0, t_hold), (w2, w2), hi, lo),
            DwSegment::new((t_hold, t_cross), (w2, mid), hi, lo),
            DwSegment::new((t_cross, t_end), (mid, mid - after), lo, hi),
        ];
        Ok(DiiiProgram {
            steps,
            p_odd: Profile::Walls(smooth_profile(segments, 0.5, lo, Some(l))?),
        })
    }

    /// Class-A wall layout on a ring of 64 cells with wall classes
    /// `+1, +2, −1, −2`, expressed as a profile of `R = r + 1`.
    ///
    /// - `t < 16`: walls at cells 8 (+1), 20 (+2), 36 (−1), 52 (−2).
    /// - `16 ≤ t < 48`: +1 and +2 pass through each other at cell 14 (`t = 32`).
    /// - `64 ≤ t < 96`: +1 and −1 approach and annihilate at cell 28.
    /// - `96 ≤ t < 128`: +2 and −2 approach and annihilate at cell 30.
    pub fn class_a_wall_classes() -> Result<WallProfile> {
        let seg = DwSegment::new;
        let segments = vec![
            // +1 wall
            seg((1.0, 16.0), (8.0, 8.0), 1.0, 2.0),
            seg((16.0, 32.0), (8.0, 14.0), 1.0, 2.0),
            seg((32.0, 48.0), (14.0, 20.0), 3.0, 4.0),
            seg((48.0, 64.0), (20.0, 20.0), 3.0, 4.0),
            seg((64.0, 96.0), (20.0, 28.0), 3.0, 4.0),
            // +2 wall
            seg((1.0, 16.0), (20.0, 20.0), 2.0, 4.0),
            seg((16.0, 32.0), (20.0, 14.0), 2.0, 4.0),
            seg((32.0, 48.0), (14.0, 8.0), 1.0, 3.0),
            seg((48.0, 96.0), (8.0, 8.0), 1.0, 3.0),
            seg((96.0, 128.0), (8.0, 30.0), 1.0, 3.0),
            // −1 wall
            seg((1.0, 64.0), (36.0, 36.0), 4.0, 3.0),
            seg((64.0, 96.0), (36.0, 28.0), 4.0, 3.0),
            // −2 wall
            seg((1.0, 96.0), (52.0, 52.0), 3.0, 1.0),
            seg((96.0, 128.0), (52.0, 30.0), 3.0, 1.0),
        ];
        smooth_profile(segments, 0.5, 1.0, Some(64.0))
    }

    /// Range profile `r = R − 1` of [`class_a_wall_classes`].
    pub fn class_a_range_profile() -> Result<Profile> {
        let mut w = class_a_wall_classes()?;
        for s in w.segments.iter_mut() {
            s.left_value -= 1.0;
            s.right_value -= 1.0;
        }
        w.background -= 1.0;
        Ok(Profile::Walls(w))
    }

    /// Two static class-A walls at `cells/4` (+1) and `3·cells/4` (−1).
    pub fn class_a_two_walls(cells: usize, steps: usize) -> Result<Profile> {
        let n = cells as f64;
        let end = steps as f64 + 1.0;
        let segments = vec![
            DwSegment::new((1.0, end), (n / 4.0, n / 4.0), 0.0, 1.0),
            DwSegment::new((1.0, end), (3.0 * n / 4.0, 3.0 * n / 4.0), 1.0, 0.0),
        ];
        Ok(Profile::Walls(smooth_profile(segments, 0.5, 0.0, Some(n))?))
    }
}
