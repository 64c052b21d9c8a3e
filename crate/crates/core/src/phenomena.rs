//! Trajectory generation and event detection: sudden changes, frozen
//! discord, transition times, entanglement sudden death, and the
//! time-invariant-discord parameter-space scans.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{Channel, MarkovDephasing, NoiseSide};
use crate::correlations::{
    bell_diagonal_correlations, binary_correlation, closest_classical_state,
    relative_entropy_entanglement, BellDiagonalState, BellLabel, CorrelationTriple,
};
use crate::dephasing::{
    detect_plateau, OhmicSpectrum, DephasingProfile, PlateauDetection, PulseSequence,
    TemperatureRegime,
};
use crate::error::{Error, Result};

/// |Q| drift below this (per sample, against the run start) counts as
/// constant when detecting frozen intervals.
pub const FROZEN_TOL: f64 = 1e-8;
/// Bisection width for refining sudden-change times.
pub const SUDDEN_CHANGE_TOL: f64 = 1e-10;
/// Half-width of the band around a threshold inside which an asymptotic
/// verdict is refused.
pub const PLATEAU_BAND: f64 = 1e-9;

/// An initial state, a channel and a noise side: everything needed to
/// evaluate the evolved state at any time.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub initial: BellDiagonalState,
    pub channel: Channel,
    pub side: NoiseSide,
}

impl Scenario {
    pub fn new(initial: BellDiagonalState, channel: Channel, side: NoiseSide) -> Self {
        Self {
            initial,
            channel,
            side,
        }
    }

    pub fn state_at(&self, t: f64) -> Result<BellDiagonalState> {
        self.channel.apply(&self.initial, t, self.side)
    }
}

/// Strictly increasing sampling instants.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(t_max: f64, samples: usize) -> Result<Self> {
        if !(t_max > 0.0) || samples < 2 {
            return Err(Error::InvalidParameter {
                name: "time_grid",
                reason: format!("need t_max > 0 and at least 2 samples, got ({t_max}, {samples})"),
            });
        }
        let step = t_max / (samples - 1) as f64;
        let mut times: Vec<f64> = (0..samples).map(|i| i as f64 * step).collect();
        // pin the endpoint exactly despite rounding in step
        *times.last_mut().expect("samples >= 2") = t_max;
        Ok(Self { times })
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "time_grid",
                reason: "times must be >= 0, strictly increasing, with at least 2 points".into(),
            });
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// Sampled correlation curves along a channel evolution.
#[derive(Debug, Clone)]
pub struct CorrelationTrajectory {
    pub times: Vec<f64>,
    pub triples: Vec<CorrelationTriple>,
    pub entanglement: Vec<f64>,
    pub coefficients: Vec<[f64; 3]>,
}

/// Evaluates the closed-form correlations and the relative entropy of
/// entanglement along the evolution. Colored-noise scenarios get an extra
/// refinement pass of samples around the zeros of Lambda, where the
/// dominant coefficient moves fastest.
pub fn simulate_trajectory(scenario: &Scenario, grid: &TimeGrid) -> Result<CorrelationTrajectory> {
    let mut times = grid.times().to_vec();
    if let Channel::Rtn(rtn) = &scenario.channel {
        let t_max = *times.last().expect("grid has at least 2 points");
        let mu = (4.0 * rtn.a() * rtn.tau()).powi(2) - 1.0;
        if mu > 0.0 {
            let period = std::f64::consts::TAU / mu.sqrt() * 2.0 * rtn.tau();
            for zero in rtn.lambda_zero_times(t_max) {
                let half_window = period / 8.0;
                for k in 0..32 {
                    let t = zero - half_window + k as f64 * half_window / 16.0;
                    if t > 0.0 && t < t_max {
                        times.push(t);
                    }
                }
            }
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            times.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        }
    }

    let mut triples = Vec::with_capacity(times.len());
    let mut entanglement = Vec::with_capacity(times.len());
    let mut coefficients = Vec::with_capacity(times.len());
    for &t in &times {
        let state = scenario.state_at(t)?;
        triples.push(bell_diagonal_correlations(&state));
        entanglement.push(relative_entropy_entanglement(&state));
        coefficients.push(state.coefficients());
    }
    Ok(CorrelationTrajectory {
        times,
        triples,
        entanglement,
        coefficients,
    })
}

/// Which correlation coefficient dominates chi.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffAxis {
    C1,
    C2,
    C3,
}

impl CoeffAxis {
    fn from_index(i: usize) -> Self {
        match i {
            0 => CoeffAxis::C1,
            1 => CoeffAxis::C2,
            _ => CoeffAxis::C3,
        }
    }
}

/// An instant where the dominant |c_i| switches, refined by bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuddenChange {
    pub time: f64,
    /// The channel-native time variable (p, nu or w_c t) at the event.
    pub native_time: f64,
    pub from_axis: CoeffAxis,
    pub to_axis: CoeffAxis,
}

/// A maximal interval on which a correlation stays at a constant value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantInterval {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

/// A maximal run of samples sharing one closest-classical-state identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominantPairRun {
    pub start: f64,
    pub end: f64,
    pub pair: [BellLabel; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Region1,
    Region2,
    Region3Frozen,
    Region3NoFreeze,
    TimeInvariant,
}

/// Detected events of a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionReport {
    pub sudden_changes: Vec<SuddenChange>,
    pub frozen_intervals: Vec<ConstantInterval>,
    pub classical_constant_intervals: Vec<ConstantInterval>,
    pub sudden_death_time: Option<f64>,
    /// End of the initial frozen-discord interval, when one exists.
    pub transition_time: Option<f64>,
    pub classification: Classification,
    /// Set when a dominant-coefficient switch was found with no bracketing
    /// sample pair (the grid under-resolves the dynamics).
    pub under_resolved: bool,
    /// Closest-classical-state identity along the trajectory, run-length
    /// encoded; the label sequence exposes the geometric picture behind
    /// sudden changes.
    pub dominant_pair_runs: Vec<DominantPairRun>,
}

fn argmax_abs(c: &[f64; 3]) -> usize {
    let abs = [c[0].abs(), c[1].abs(), c[2].abs()];
    let mut best = 0;
    for i in 1..3 {
        if abs[i] > abs[best] {
            best = i;
        }
    }
    best
}

/// Bisect |c_a(t)| - |c_b(t)| = 0 on [lo, hi], where a dominates at lo.
fn refine_switch(scenario: &Scenario, a: usize, b: usize, lo: f64, hi: f64) -> Result<f64> {
    let gap = |t: f64| -> Result<f64> {
        let c = scenario.state_at(t)?.coefficients();
        Ok(c[a].abs() - c[b].abs())
    };
    let mut lo = lo;
    let mut hi = hi;
    if gap(lo)? <= 0.0 {
        return Ok(lo);
    }
    for _ in 0..200 {
        if hi - lo <= SUDDEN_CHANGE_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Maximal runs of `values` within FROZEN_TOL of the run start, at least
/// three samples long. A run that does not touch the trajectory boundary
/// must depart by more than 10x the threshold within one grid step on the
/// outside, which rejects slowly decaying tails that merely drift less
/// than the tolerance. When a `contrast` series is given, runs over which
/// it is also constant are dropped: frozen discord means Q pinned while C
/// still moves, not a globally static stretch. Run edges snap to refined
/// sudden-change times that fall inside the neighbouring sample gap.
fn constant_runs(
    times: &[f64],
    values: &[f64],
    changes: &[SuddenChange],
    contrast: Option<&[f64]>,
) -> Vec<ConstantInterval> {
    let mut runs = Vec::new();
    let n = values.len();
    let mut k0 = 0;
    while k0 < n {
        let mut k1 = k0;
        while k1 + 1 < n && (values[k1 + 1] - values[k0]).abs() <= FROZEN_TOL {
            k1 += 1;
        }
        let departs_before = k0 == 0 || (values[k0 - 1] - values[k0]).abs() > 10.0 * FROZEN_TOL;
        let departs_after =
            k1 == n - 1 || (values[k1 + 1] - values[k1]).abs() > 10.0 * FROZEN_TOL;
        let contrast_moves = contrast.is_none_or(|c| {
            (k0..=k1).any(|k| (c[k] - c[k0]).abs() > FROZEN_TOL)
        });
        if k1 - k0 >= 2 && departs_before && departs_after && contrast_moves {
            let mut start = times[k0];
            let mut end = times[k1];
            for ch in changes {
                if k0 > 0 && ch.time > times[k0 - 1] && ch.time < times[k0] {
                    start = ch.time;
                }
                if k1 + 1 < n && ch.time > times[k1] && ch.time < times[k1 + 1] {
                    end = ch.time;
                }
            }
            runs.push(ConstantInterval {
                start,
                end,
                value: values[k0],
            });
        }
        k0 = k1 + 1;
    }
    runs
}

fn dominant_pair_runs(traj: &CorrelationTrajectory) -> Vec<DominantPairRun> {
    let mut runs: Vec<DominantPairRun> = Vec::new();
    for (&t, c) in traj.times.iter().zip(&traj.coefficients) {
        let state = BellDiagonalState::new(c[0], c[1], c[2]).expect("sampled state is valid");
        let mut pair = closest_classical_state(&state).primary().dominant_pair;
        pair.sort();
        match runs.last_mut() {
            Some(run) if run.pair == pair => run.end = t,
            _ => runs.push(DominantPairRun {
                start: t,
                end: t,
                pair,
            }),
        }
    }
    runs
}

/// Scans a trajectory for sudden changes (refined by bisection on the
/// competing |c_i|), frozen and classically-constant intervals,
/// entanglement sudden death and the overall dynamical classification.
pub fn detect_transitions(
    scenario: &Scenario,
    traj: &CorrelationTrajectory,
) -> Result<TransitionReport> {
    let n = traj.times.len();
    let doms: Vec<usize> = traj.coefficients.iter().map(argmax_abs).collect();

    let mut sudden_changes = Vec::new();
    let mut under_resolved = false;
    for k in 0..n - 1 {
        let (t0, t1) = (traj.times[k], traj.times[k + 1]);
        if doms[k] != doms[k + 1] {
            let time = refine_switch(scenario, doms[k], doms[k + 1], t0, t1)?;
            sudden_changes.push(SuddenChange {
                time,
                native_time: scenario.channel.native_time(time),
                from_axis: CoeffAxis::from_index(doms[k]),
                to_axis: CoeffAxis::from_index(doms[k + 1]),
            });
        } else {
            // a switch pair inside one step would be invisible at the ends
            let mid = 0.5 * (t0 + t1);
            let dom_mid = argmax_abs(&scenario.state_at(mid)?.coefficients());
            if dom_mid != doms[k] {
                under_resolved = true;
                let first = refine_switch(scenario, doms[k], dom_mid, t0, mid)?;
                let second = refine_switch(scenario, dom_mid, doms[k + 1], mid, t1)?;
                for (time, from, to) in [(first, doms[k], dom_mid), (second, dom_mid, doms[k + 1])]
                {
                    sudden_changes.push(SuddenChange {
                        time,
                        native_time: scenario.channel.native_time(time),
                        from_axis: CoeffAxis::from_index(from),
                        to_axis: CoeffAxis::from_index(to),
                    });
                }
            }
        }
    }

    let discord: Vec<f64> = traj.triples.iter().map(|t| t.discord).collect();
    let classical: Vec<f64> = traj.triples.iter().map(|t| t.classical).collect();
    let frozen_intervals =
        constant_runs(&traj.times, &discord, &sudden_changes, Some(&classical));
    let classical_constant_intervals = constant_runs(&traj.times, &classical, &sudden_changes, None);

    // entanglement sudden death: first positive -> zero crossing. lambda_1
    // must land strictly below 1/2, which separates a genuine death from
    // E merely underflowing as lambda_1 -> 1/2 asymptotically.
    let mut sudden_death_time = None;
    let lambda1_gap = |t: f64| -> Result<f64> {
        let evs = scenario.state_at(t)?.eigenvalues();
        Ok(evs.into_iter().fold(f64::NEG_INFINITY, f64::max) - 0.5)
    };
    for k in 0..n - 1 {
        if traj.entanglement[k] > 0.0
            && traj.entanglement[k + 1] == 0.0
            && lambda1_gap(traj.times[k + 1])? < -1e-12
        {
            let mut lo = traj.times[k];
            let mut hi = traj.times[k + 1];
            for _ in 0..200 {
                if hi - lo <= SUDDEN_CHANGE_TOL {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if lambda1_gap(mid)? > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            sudden_death_time = Some(0.5 * (lo + hi));
            break;
        }
    }

    let horizon_start = traj.times[0];
    let horizon_end = traj.times[n - 1];
    let transition_time = frozen_intervals
        .first()
        .filter(|run| run.start <= horizon_start && run.end < horizon_end)
        .map(|run| run.end);

    let [a1, a2, a3] = [
        scenario.initial.c1().abs(),
        scenario.initial.c2().abs(),
        scenario.initial.c3().abs(),
    ];
    let q_frozen_everywhere = frozen_intervals
        .first()
        .is_some_and(|run| run.start <= horizon_start && run.end >= horizon_end);
    let classification = if a3 < 1e-15 {
        Classification::Region2
    } else if a3 >= a1.max(a2) {
        Classification::Region1
    } else if sudden_changes.is_empty() && q_frozen_everywhere {
        Classification::TimeInvariant
    } else if !frozen_intervals.is_empty() {
        Classification::Region3Frozen
    } else {
        Classification::Region3NoFreeze
    };

    Ok(TransitionReport {
        sudden_changes,
        frozen_intervals,
        classical_constant_intervals,
        sudden_death_time,
        transition_time,
        classification,
        under_resolved,
        dominant_pair_runs: dominant_pair_runs(traj),
    })
}

/// Entanglement sudden-death time under two-sided Markovian dephasing.
///
/// For the frozen class (c1 = +-1, c2 = -+ c3) this is the closed form
/// t_s = -ln[(1-|c3|)/(1+|c3|)] / (2 gamma); other states fall back to a
/// numeric root search on lambda_1(t) = 1/2. `None` means entanglement
/// never vanishes at finite time (or was zero to begin with).
pub fn sudden_death_time(
    initial: &BellDiagonalState,
    channel: &MarkovDephasing,
) -> Result<Option<f64>> {
    if relative_entropy_entanglement(initial) <= 0.0 {
        return Ok(None);
    }
    let frozen_class = (initial.c1().abs() - 1.0).abs() < 1e-12
        && (initial.c2() + initial.c1() * initial.c3()).abs() < 1e-12
        && initial.c3().abs() < 1.0;
    if frozen_class {
        let c3 = initial.c3().abs();
        let t_s = -((1.0 - c3) / (1.0 + c3)).ln() / (2.0 * channel.gamma());
        return Ok(t_s.is_finite().then_some(t_s));
    }

    let lambda1 = |t: f64| -> Result<f64> {
        let evs = channel.apply(initial, t, NoiseSide::Both)?.eigenvalues();
        Ok(evs.into_iter().fold(f64::NEG_INFINITY, f64::max))
    };
    let horizon = 100.0 / channel.gamma();
    let samples = 4096;
    let mut prev_t = 0.0;
    for i in 1..=samples {
        let t = horizon * i as f64 / samples as f64;
        // strict margin so an asymptotic approach to 1/2 never counts
        if lambda1(t)? < 0.5 - 1e-12 {
            let (mut lo, mut hi) = (prev_t, t);
            for _ in 0..200 {
                if hi - lo <= SUDDEN_CHANGE_TOL {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if lambda1(mid)? > 0.5 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        prev_t = t;
    }
    Ok(None)
}

/// The frozen-discord value Q = [(1+c) log2(1+c) + (1-c) log2(1-c)] / 2
/// of the frozen class with c = |c3|, monotone increasing on [0, 1).
pub fn frozen_discord_value(c: f64) -> f64 {
    binary_correlation(c)
}

/// Outcome of the spectral transition-time search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SpectralTransition {
    /// Gamma crosses the threshold at this time (smallest root found).
    Crossing(f64),
    /// No crossing on the horizon and the asymptote stays below the
    /// threshold: the discord never starts decaying.
    Invariant,
    /// No crossing on the horizon but the asymptote (or divergence) lies
    /// above the threshold: a crossing exists beyond the horizon.
    BeyondHorizon,
}

/// Smallest t with Gamma(t) = -ln(c)/2 (two-sided noise; -ln(c) when only
/// one qubit is exposed), searched on [0, horizon] and refined by
/// bisection. Unpulsed profiles with no crossing are classified against
/// the asymptotic plateau; a plateau inside the tolerance band of the
/// threshold yields [`Error::UndecidedPlateau`].
pub fn transition_time_spectral(
    c: f64,
    profile: &DephasingProfile,
    side: NoiseSide,
    horizon: f64,
) -> Result<SpectralTransition> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter {
            name: "c",
            reason: format!("need c in (0, 1), got {c}"),
        });
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: format!("need a positive horizon, got {horizon}"),
        });
    }
    let threshold = match side {
        NoiseSide::Both => -c.ln() / 2.0,
        NoiseSide::AOnly | NoiseSide::BOnly => -c.ln(),
    };

    // sample grid, with pulse instants included so the kinks are exact
    let samples = 2000;
    let mut times: Vec<f64> = (0..=samples)
        .map(|i| horizon * i as f64 / samples as f64)
        .collect();
    if let Some(pulses) = profile.pulses() {
        times.extend(pulses.instants().iter().copied().filter(|&t| t < horizon));
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
    }

    let mut prev_t = 0.0;
    let mut prev_g = 0.0;
    for &t in &times[1..] {
        let g = profile.big_gamma(t)?;
        if g >= threshold {
            let (mut lo, mut hi) = (prev_t, t);
            let _ = prev_g;
            for _ in 0..200 {
                if hi - lo <= SUDDEN_CHANGE_TOL * hi.max(1.0) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if profile.big_gamma(mid)? < threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(SpectralTransition::Crossing(0.5 * (lo + hi)));
        }
        prev_t = t;
        prev_g = g;
    }

    if profile.pulses().is_some() {
        // pulsed dynamics carry no asymptotic statement; no crossing within
        // the window means invariant-within-window
        return Ok(SpectralTransition::Invariant);
    }
    match profile.spectrum().asymptotic_big_gamma()? {
        None => Ok(SpectralTransition::BeyondHorizon),
        Some(plateau) => {
            if (plateau - threshold).abs() <= PLATEAU_BAND * (1.0 + plateau.abs()) {
                Err(Error::UndecidedPlateau { plateau, threshold })
            } else if plateau > threshold {
                Ok(SpectralTransition::BeyondHorizon)
            } else {
                Ok(SpectralTransition::Invariant)
            }
        }
    }
}

/// Verdict for one (s, c) cell of a region scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellFlag {
    Invariant,
    Transition,
    Undecided,
}

impl CellFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellFlag::Invariant => "invariant",
            CellFlag::Transition => "transition",
            CellFlag::Undecided => "undecided",
        }
    }
}

/// A time-invariant-discord scan over (s, c) parameter space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionScan {
    pub s_values: Vec<f64>,
    pub c_values: Vec<f64>,
    /// Row-major: `flags[i_s * c_values.len() + i_c]`.
    pub flags: Vec<CellFlag>,
    pub horizon: f64,
    pub side: NoiseSide,
    /// True for pulsed scans: invariance is claimed within the horizon
    /// window only, not asymptotically.
    pub windowed: bool,
    pub pulses: Option<PulseSequence>,
    pub temperature: TemperatureRegime,
    pub omega_c: f64,
}

impl RegionScan {
    pub fn flag(&self, i_s: usize, i_c: usize) -> CellFlag {
        self.flags[i_s * self.c_values.len() + i_c]
    }
}

fn side_threshold(c: f64, side: NoiseSide) -> f64 {
    match side {
        NoiseSide::Both => -c.ln() / 2.0,
        NoiseSide::AOnly | NoiseSide::BOnly => -c.ln(),
    }
}

/// Unpulsed row verdicts: the asymptotic plateau of Gamma decides, with a
/// numeric plateau probe cross-validating the closed form. A divergent
/// Gamma forbids invariance for every c.
fn scan_row_unpulsed(spectrum: &OhmicSpectrum, c_values: &[f64], side: NoiseSide) -> Result<Vec<CellFlag>> {
    let plateau = spectrum.asymptotic_big_gamma()?;
    let Some(plateau) = plateau else {
        return Ok(vec![CellFlag::Transition; c_values.len()]);
    };
    // second route to the same verdict: numeric probe of the closed form
    let validated = match detect_plateau(spectrum, 1e3 / spectrum.omega_c())? {
        PlateauDetection::Bounded { estimate } => {
            (estimate - plateau).abs() <= 1e-3 * (1.0 + plateau.abs())
        }
        PlateauDetection::Divergent => false,
    };
    if !validated {
        return Ok(vec![CellFlag::Undecided; c_values.len()]);
    }
    Ok(c_values
        .iter()
        .map(|&c| {
            let threshold = side_threshold(c, side);
            if (plateau - threshold).abs() <= PLATEAU_BAND * (1.0 + plateau.abs()) {
                CellFlag::Undecided
            } else if plateau < threshold {
                CellFlag::Invariant
            } else {
                CellFlag::Transition
            }
        })
        .collect())
}

/// Pulsed row verdicts: invariant-within-window iff the controlled Gamma
/// never reaches the threshold on [0, horizon]. The Gamma curve is shared
/// across the whole c row.
fn scan_row_pulsed(
    spectrum: &OhmicSpectrum,
    pulses: &PulseSequence,
    c_values: &[f64],
    side: NoiseSide,
    horizon: f64,
) -> Result<Vec<CellFlag>> {
    let profile = DephasingProfile::pulsed(*spectrum, pulses.clone());
    let samples = 2000;
    let mut times: Vec<f64> = (1..=samples)
        .map(|i| horizon * i as f64 / samples as f64)
        .collect();
    times.extend(pulses.instants().iter().copied().filter(|&t| t <= horizon));
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let mut sup = 0.0_f64;
    for &t in &times {
        sup = sup.max(profile.big_gamma(t)?);
    }
    Ok(c_values
        .iter()
        .map(|&c| {
            let threshold = side_threshold(c, side);
            if (sup - threshold).abs() <= PLATEAU_BAND * (1.0 + sup.abs()) {
                CellFlag::Undecided
            } else if sup < threshold {
                CellFlag::Invariant
            } else {
                CellFlag::Transition
            }
        })
        .collect())
}

/// Flags each (s, c) cell of the grid as time-invariant, transition, or
/// undecided. Unpulsed scans use the asymptotic condition on Gamma;
/// pulsed scans use the within-window condition (recorded via `windowed`).
/// Rows parallelize over s; the outcome is deterministic for a fixed
/// configuration regardless of worker count.
pub fn scan_time_invariant_region(
    s_values: &[f64],
    c_values: &[f64],
    template: &OhmicSpectrum,
    pulses: Option<&PulseSequence>,
    side: NoiseSide,
    horizon: f64,
) -> Result<RegionScan> {
    if s_values.is_empty() || c_values.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "scan grids must be nonempty".into(),
        });
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: format!("need a positive horizon, got {horizon}"),
        });
    }
    for &c in c_values {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::InvalidParameter {
                name: "c_grid",
                reason: format!("c values must lie in (0, 1), got {c}"),
            });
        }
    }

    let rows: Result<Vec<Vec<CellFlag>>> = s_values
        .par_iter()
        .map(|&s| {
            let spectrum = template.with_s(s)?;
            match pulses {
                None => scan_row_unpulsed(&spectrum, c_values, side),
                Some(p) => scan_row_pulsed(&spectrum, p, c_values, side, horizon),
            }
        })
        .collect();

    Ok(RegionScan {
        s_values: s_values.to_vec(),
        c_values: c_values.to_vec(),
        flags: rows?.into_iter().flatten().collect(),
        horizon,
        side,
        windowed: pulses.is_some(),
        pulses: pulses.cloned(),
        temperature: template.temperature(),
        omega_c: template.omega_c(),
    })
}
