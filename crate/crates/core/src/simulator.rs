//! Propagation of pulse programs under control errors and dephasing noise.
//!
//! Each trajectory is a pure spinor; decoherence appears only through the
//! ensemble mean. Noise is looked up on the trajectory's fixed grid and held
//! piecewise-constant, with events longer than one grid step split at the
//! step boundaries, so every segment has an exact closed-form propagator.
//!
//! The recorded magnetization is the overlap of the actual Bloch vector with
//! the ideally-propagated one (the echo frame). At whole-cycle boundaries of
//! any refocusing sequence the ideal propagator is the identity up to phase,
//! so there this equals the projection onto the initial axis; between cycle
//! boundaries it removes the deterministic pi-flips that an ideal train
//! applies to the state.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::noise::{sample_epsilon, ControlError, GaussianEnsemble, NoiseProcess, OuPath};
use crate::sequence::{Event, PulseEvent, PulseProgram};
use crate::su2::{evolve_static, rotation, HamiltonianParams, Unitary2};
use crate::{noise, Error, Result};

/// Initial Bloch vector, one of the three coordinate axes.
///
/// With pulses applied along x (CPMG), `X` is the longitudinal state and `Y`
/// the transverse one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    X,
    Y,
    Z,
}

impl InitialState {
    pub fn spinor(&self) -> Spinor {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            InitialState::X => Spinor::new(Complex64::new(s, 0.0), Complex64::new(s, 0.0)),
            InitialState::Y => Spinor::new(Complex64::new(s, 0.0), Complex64::new(0.0, s)),
            InitialState::Z => Spinor::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
        }
    }
}

impl std::str::FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(InitialState::X),
            "y" => Ok(InitialState::Y),
            "z" => Ok(InitialState::Z),
            other => Err(Error::InvalidParameter(format!(
                "initial state must be x, y or z, got '{other}'"
            ))),
        }
    }
}

/// Pure spin-1/2 state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor {
    pub up: Complex64,
    pub down: Complex64,
}

impl Spinor {
    pub fn new(up: Complex64, down: Complex64) -> Self {
        Self { up, down }
    }

    pub fn apply(&self, u: &Unitary2) -> Self {
        let [a, b, c, d] = u.data;
        Self::new(a * self.up + b * self.down, c * self.up + d * self.down)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    /// Bloch vector `(⟨sx⟩, ⟨sy⟩, ⟨sz⟩)`.
    pub fn bloch(&self) -> [f64; 3] {
        let cross = self.up.conj() * self.down;
        [
            2.0 * cross.re,
            2.0 * cross.im,
            self.up.norm_sqr() - self.down.norm_sqr(),
        ]
    }
}

/// Stroboscopic sampling grid of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// One sample at the end of every cycle (default).
    Cycle,
    /// One sample after every physical pulse.
    Pulse,
}

/// How an ensemble of propagators is reduced to one fidelity number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingRecipe {
    /// Mean of the per-realization fidelities (default).
    MeanFidelity,
    /// Fidelity of the entrywise-averaged propagator.
    FidelityOfMeanPropagator,
}

/// A time series of magnetization (or fidelity) with its standard-error band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub times: Vec<f64>,
    pub pulse_counts: Vec<u32>,
    pub magnetization: Vec<f64>,
    pub stderr: Vec<f64>,
    pub meta: BTreeMap<String, String>,
}

impl TraceResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Propagator of a single pulse under a static error and a constant bath
/// frequency. A zero-duration pulse is an ideal delta pulse: the exact
/// rotation by `nominal_flip * (1 + epsilon)`, unaffected by detuning.
pub fn pulse_propagator(ev: &PulseEvent, err: &ControlError, omega_bath: f64) -> Unitary2 {
    if ev.duration == 0.0 {
        return rotation(ev.nominal_flip * (1.0 + err.epsilon), ev.phase);
    }
    let omega_nom = ev.nominal_flip / ev.duration;
    let h = HamiltonianParams {
        rabi: (1.0 + err.epsilon) * omega_nom,
        phase: ev.phase,
        detuning: err.offset * omega_nom + omega_bath,
    };
    evolve_static(&h, ev.duration)
}

struct Walker<'a> {
    err: ControlError,
    noise: Option<&'a OuPath>,
    /// Nominal Rabi frequency used to convert the dimensionless offset into
    /// a detuning during delays; zero for offset-free runs on delta pulses.
    program_rabi: f64,
    clock: f64,
}

impl<'a> Walker<'a> {
    fn new(program: &PulseProgram, err: ControlError, noise: Option<&'a OuPath>) -> Result<Self> {
        let program_rabi = match program.nominal_rabi() {
            Some(w) => w,
            None => {
                if err.offset != 0.0 {
                    return Err(Error::InvalidParameter(
                        "offset errors need finite-width pulses to set the Rabi scale".into(),
                    ));
                }
                0.0
            }
        };
        Ok(Self {
            err,
            noise,
            program_rabi,
            clock: 0.0,
        })
    }

    fn segmented(&mut self, duration: f64, rabi: f64, phase: f64) -> Unitary2 {
        let detuning = self.err.offset * self.program_rabi;
        let Some(path) = self.noise else {
            let u = evolve_static(
                &HamiltonianParams {
                    rabi,
                    phase,
                    detuning,
                },
                duration,
            );
            self.clock += duration;
            return u;
        };
        let end = self.clock + duration;
        let mut u = Unitary2::identity();
        while end - self.clock > 1e-12 {
            let cell = (self.clock / path.dt) as usize;
            let cell_end = (cell as f64 + 1.0) * path.dt;
            let seg_end = cell_end.min(end);
            let seg = seg_end - self.clock;
            if seg > 1e-12 {
                let h = HamiltonianParams {
                    rabi,
                    phase,
                    detuning: detuning + path.values[cell.min(path.values.len() - 1)],
                };
                u = evolve_static(&h, seg) * u;
            }
            self.clock = seg_end;
        }
        self.clock = end;
        u
    }

    fn event_propagator(&mut self, ev: &Event) -> Unitary2 {
        match ev {
            Event::Pulse(p) => {
                if p.duration == 0.0 {
                    return rotation(p.nominal_flip * (1.0 + self.err.epsilon), p.phase);
                }
                let rabi = (1.0 + self.err.epsilon) * p.nominal_flip / p.duration;
                self.segmented(p.duration, rabi, p.phase)
            }
            Event::Delay(d) => self.segmented(d.duration, 0.0, 0.0),
        }
    }
}

fn check_noise_coverage(noise: Option<&OuPath>, needed: f64) -> Result<()> {
    if let Some(path) = noise {
        if path.covered_time() + 1e-9 < needed {
            return Err(Error::NoisePathTooShort {
                covered_us: path.covered_time(),
                needed_us: needed,
            });
        }
    }
    Ok(())
}

/// Propagator of one full cycle under a static error and an optional noise
/// trajectory (starting at the trajectory's t = 0).
pub fn cycle_propagator(
    program: &PulseProgram,
    err: &ControlError,
    noise: Option<&OuPath>,
) -> Result<Unitary2> {
    check_noise_coverage(noise, program.cycle_time)?;
    let mut walker = Walker::new(program, *err, noise)?;
    let mut u = Unitary2::identity();
    for ev in &program.events {
        u = walker.event_propagator(ev) * u;
    }
    Ok(u)
}

/// Propagate `cycles` repetitions of `program` and record the overlap of the
/// actual Bloch vector with the ideally-propagated one. The trace starts with
/// the trivial sample at t = 0; noise runs continuously across cycles.
pub fn magnetization_trace(
    program: &PulseProgram,
    cycles: u32,
    err: &ControlError,
    noise: Option<&OuPath>,
    init: InitialState,
    sampling: Sampling,
) -> Result<TraceResult> {
    check_noise_coverage(noise, program.cycle_time * cycles as f64)?;
    let mut walker = Walker::new(program, *err, noise)?;
    let mut actual = init.spinor();
    let mut ideal = init.spinor();
    let mut times = vec![0.0];
    let mut pulse_counts = vec![0u32];
    let mut magnetization = vec![overlap(&actual, &ideal)];
    let mut pulses = 0u32;
    for _ in 0..cycles {
        for ev in &program.events {
            let u = walker.event_propagator(ev);
            actual = actual.apply(&u);
            if let Event::Pulse(p) = ev {
                ideal = ideal.apply(&rotation(p.nominal_flip, p.phase));
                pulses += 1;
                if sampling == Sampling::Pulse {
                    times.push(walker.clock);
                    pulse_counts.push(pulses);
                    magnetization.push(overlap(&actual, &ideal));
                }
            }
        }
        if sampling == Sampling::Cycle {
            times.push(walker.clock);
            pulse_counts.push(pulses);
            magnetization.push(overlap(&actual, &ideal));
        }
    }
    let n = times.len();
    Ok(TraceResult {
        times,
        pulse_counts,
        magnetization,
        stderr: vec![0.0; n],
        meta: BTreeMap::new(),
    })
}

fn overlap(actual: &Spinor, ideal: &Spinor) -> f64 {
    let a = actual.bloch();
    let b = ideal.bloch();
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Mean magnetization trace over the product ensemble of flip-angle draws
/// and noise trajectories, with the standard error of the mean.
///
/// Member `(i, j)` uses flip-angle stream `i` and noise stream `j`; the
/// parallel fan-out never changes any output bit because every member is a
/// pure function of its own streams and the reduction is done in index order.
pub fn ensemble_average(
    program: &PulseProgram,
    cycles: u32,
    init: InitialState,
    sampling: Sampling,
    ensemble: &GaussianEnsemble,
    noise_process: &NoiseProcess,
    n_paths: u32,
) -> Result<TraceResult> {
    if n_paths < 1 {
        return Err(Error::InvalidParameter("n_paths must be >= 1".into()));
    }
    let total_time = program.cycle_time * cycles as f64;
    let paths: Vec<Option<OuPath>> = if noise_process.sigma_b > 0.0 {
        (0..n_paths as u64)
            .map(|j| noise::ou_trajectory(noise_process, total_time, j).map(Some))
            .collect::<Result<_>>()?
    } else {
        vec![None; n_paths as usize]
    };
    let members = ensemble.size as usize * n_paths as usize;
    let traces: Vec<TraceResult> = (0..members)
        .into_par_iter()
        .map(|m| {
            let i = (m / n_paths as usize) as u64;
            let j = m % n_paths as usize;
            let err = ControlError::new(sample_epsilon(ensemble, i), 0.0);
            magnetization_trace(program, cycles, &err, paths[j].as_ref(), init, sampling)
        })
        .collect::<Result<_>>()?;
    let first = &traces[0];
    let n = first.len();
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    for trace in &traces {
        for k in 0..n {
            mean[k] += trace.magnetization[k];
        }
    }
    for v in &mut mean {
        *v /= members as f64;
    }
    for trace in &traces {
        for k in 0..n {
            let d = trace.magnetization[k] - mean[k];
            m2[k] += d * d;
        }
    }
    let stderr: Vec<f64> = m2
        .iter()
        .map(|&s| {
            if members > 1 {
                (s / (members as f64 - 1.0)).sqrt() / (members as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Ok(TraceResult {
        times: first.times.clone(),
        pulse_counts: first.pulse_counts.clone(),
        magnetization: mean,
        stderr,
        meta: BTreeMap::new(),
    })
}

/// Visit the accumulated actual and ideal propagators after every physical
/// pulse, up to `max_pulses`. Used by the fidelity-decay analysis.
pub(crate) fn accumulate_over_pulses(
    program: &PulseProgram,
    err: &ControlError,
    max_pulses: u32,
    mut visit: impl FnMut(u32, &Unitary2, &Unitary2),
) -> Result<()> {
    let per_cycle = program.pulse_count() as u32;
    if per_cycle == 0 {
        return Err(Error::InvalidParameter(
            "fidelity accumulation needs at least one pulse".into(),
        ));
    }
    let cycles = max_pulses.div_ceil(per_cycle);
    let mut walker = Walker::new(program, *err, None)?;
    let mut actual = Unitary2::identity();
    let mut ideal = Unitary2::identity();
    let mut pulses = 0u32;
    for _ in 0..cycles {
        for ev in &program.events {
            let u = walker.event_propagator(ev);
            actual = u * actual;
            if let Event::Pulse(p) = ev {
                ideal = rotation(p.nominal_flip, p.phase) * ideal;
                pulses += 1;
                visit(pulses, &actual, &ideal);
                if pulses == max_pulses {
                    return Ok(());
                }
            }
        }
    }
    Ok(())
}
