//! Expansion of named dynamical-decoupling families into flat, timed pulse
//! programs.
//!
//! One compiled [`PulseProgram`] describes a single cycle. Conventions:
//!
//! * `X` is a pi pulse at phase 0, `Y` at phase pi/2; a bar (phase + pi)
//!   inverts the rotation sense.
//! * Asymmetric cycles place a full delay `tau_d` before every pulse.
//! * Symmetric cycles are built as the base phase pattern followed by its
//!   time-reversed, phase-inverted copy, each wrapped in `tau_d/2` edge
//!   delays. Running such a cycle backwards reproduces it with all phases
//!   shifted by pi, which is what makes the odd orders of the effective
//!   Hamiltonian expansion cancel. (The shorthand `[tau/2-X-tau-Y-tau/2]^2`
//!   found in the literature is a pure cycle-boundary shift of the
//!   asymmetric train and leaves the cycle propagator similar to the
//!   asymmetric one, so it cannot change the error scaling.)
//! * Concatenated DD follows `[C_{n-1} X C_{n-1} Y]^2` literally; adjacent
//!   pulses are never merged or cancelled.
//! * Replacing a pi pulse by the five-pulse Knill composite keeps its slot:
//!   pulse count and irradiation time grow exactly fivefold.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const PHASE_X: f64 = 0.0;
const PHASE_Y: f64 = PI / 2.0;

/// Relative phases of the Knill composite: `pi/6, 0, pi/2, 0, pi/6`.
pub const KNILL_PHASES: [f64; 5] = [PI / 6.0, 0.0, PI / 2.0, 0.0, PI / 6.0];

/// Matching tolerance for event-time arithmetic, in us.
const TIME_TOL: f64 = 1e-9;

/// A rectangular pulse: rotation by `nominal_flip` about the in-plane axis
/// at `phase`, delivered over `duration` (zero duration means an ideal
/// delta pulse, used by analytic tests).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEvent {
    pub nominal_flip: f64,
    pub phase: f64,
    pub duration: f64,
}

/// Free evolution for `duration` us.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayEvent {
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Pulse(PulseEvent),
    Delay(DelayEvent),
}

impl Event {
    pub fn duration(&self) -> f64 {
        match self {
            Event::Pulse(p) => p.duration,
            Event::Delay(d) => d.duration,
        }
    }

    pub fn is_pulse(&self) -> bool {
        matches!(self, Event::Pulse(_))
    }

    fn pulse(phase: f64, t_p: f64) -> Self {
        Event::Pulse(PulseEvent {
            nominal_flip: PI,
            phase,
            duration: t_p,
        })
    }

    fn delay(duration: f64) -> Self {
        Event::Delay(DelayEvent { duration })
    }
}

/// One compiled cycle of a sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseProgram {
    pub events: Vec<Event>,
    /// Total cycle duration; equals the sum of all event durations.
    pub cycle_time: f64,
    pub label: String,
    /// Base pi-pulse slots per cycle. A Knill composite occupies one slot
    /// with five physical pulses.
    pub base_slots: usize,
}

impl PulseProgram {
    fn from_events(label: impl Into<String>, events: Vec<Event>) -> Self {
        let cycle_time = events.iter().map(Event::duration).sum();
        let base_slots = events.iter().filter(|e| e.is_pulse()).count();
        Self {
            events,
            cycle_time,
            label: label.into(),
            base_slots,
        }
    }

    /// Number of physical pulses in one cycle.
    pub fn pulse_count(&self) -> usize {
        self.events.iter().filter(|e| e.is_pulse()).count()
    }

    /// Total irradiation time in one cycle.
    pub fn irradiation_time(&self) -> f64 {
        self.events
            .iter()
            .filter(|e| e.is_pulse())
            .map(Event::duration)
            .sum()
    }

    /// Nominal Rabi frequency `flip / duration` of the program's pulses,
    /// `None` for pulse-free or delta-pulse programs.
    pub fn nominal_rabi(&self) -> Option<f64> {
        self.events.iter().find_map(|e| match e {
            Event::Pulse(p) if p.duration > 0.0 => Some(p.nominal_flip / p.duration),
            _ => None,
        })
    }

    /// Replace every pulse by the five-pulse Knill composite of the same
    /// phase, back to back within the slot.
    pub fn with_robust_pulses(&self) -> Self {
        let mut events = Vec::with_capacity(self.events.len() + 4 * self.pulse_count());
        for ev in &self.events {
            match ev {
                Event::Pulse(p) => {
                    for rel in KNILL_PHASES {
                        events.push(Event::Pulse(PulseEvent {
                            nominal_flip: p.nominal_flip,
                            phase: rel + p.phase,
                            duration: p.duration,
                        }));
                    }
                }
                Event::Delay(d) => events.push(Event::Delay(*d)),
            }
        }
        let base_slots = self.base_slots;
        let mut out = Self::from_events(format!("{}-knill", self.label), events);
        out.base_slots = base_slots;
        out
    }
}

/// The seven catalog families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Cpmg,
    Udd,
    Xy4,
    Xy8,
    Xy16,
    Cdd,
    Kdd,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Cpmg,
        Family::Udd,
        Family::Xy4,
        Family::Xy8,
        Family::Xy16,
        Family::Cdd,
        Family::Kdd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Cpmg => "cpmg",
            Family::Udd => "udd",
            Family::Xy4 => "xy4",
            Family::Xy8 => "xy8",
            Family::Xy16 => "xy16",
            Family::Cdd => "cdd",
            Family::Kdd => "kdd",
        }
    }

    pub fn supports_symmetric(&self) -> bool {
        matches!(self, Family::Xy4 | Family::Xy8 | Family::Xy16 | Family::Cdd)
    }

    pub fn takes_pulse_count(&self) -> bool {
        matches!(self, Family::Cpmg | Family::Udd)
    }

    pub fn takes_level(&self) -> bool {
        matches!(self, Family::Cdd)
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnsupportedSequence(format!("unknown family '{s}'")))
    }
}

/// Parameters selecting one catalog sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub family: Family,
    /// Symmetrized timing (XY family and CDD only).
    pub symmetric: bool,
    /// Concatenation level for CDD, `n >= 1`.
    pub concatenation_level: u32,
    /// Pulses per cycle for CPMG and UDD.
    pub pulse_count: u32,
    /// Delay between pulses, us.
    pub tau_d: f64,
    /// Pulse length, us; zero selects ideal delta pulses.
    pub t_p: f64,
    /// Replace every pi pulse by the Knill composite.
    pub robust_pulses: bool,
}

impl SequenceSpec {
    pub fn new(family: Family, tau_d: f64, t_p: f64) -> Self {
        Self {
            family,
            symmetric: false,
            concatenation_level: 1,
            pulse_count: 2,
            tau_d,
            t_p,
            robust_pulses: false,
        }
    }

    pub fn symmetric(mut self, on: bool) -> Self {
        self.symmetric = on;
        self
    }

    pub fn robust(mut self, on: bool) -> Self {
        self.robust_pulses = on;
        self
    }

    pub fn level(mut self, n: u32) -> Self {
        self.concatenation_level = n;
        self
    }

    pub fn pulses(mut self, n: u32) -> Self {
        self.pulse_count = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau_d.is_finite() && self.tau_d >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau_d must be finite and >= 0, got {}",
                self.tau_d
            )));
        }
        if !(self.t_p.is_finite() && self.t_p >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_p must be finite and >= 0, got {}",
                self.t_p
            )));
        }
        if self.symmetric && !self.family.supports_symmetric() {
            return Err(Error::UnsupportedSequence(format!(
                "{} has no symmetric variant",
                self.family.name()
            )));
        }
        if self.family.takes_pulse_count() && self.pulse_count < 1 {
            return Err(Error::InvalidParameter(
                "pulse_count must be >= 1".into(),
            ));
        }
        if self.family.takes_level() && self.concatenation_level < 1 {
            return Err(Error::InvalidParameter(
                "concatenation_level must be >= 1".into(),
            ));
        }
        Ok(())
    }

    fn base_label(&self) -> String {
        let mut label = match self.family {
            Family::Cpmg | Family::Udd => {
                format!("{}-n{}", self.family.name(), self.pulse_count)
            }
            Family::Cdd => format!("cdd{}", self.concatenation_level),
            f => f.name().to_string(),
        };
        if self.symmetric {
            label.push_str("-sym");
        }
        label
    }
}

/// The XY-family base phase patterns (asymmetric form).
fn xy_pattern(family: Family) -> Vec<f64> {
    let xy4 = vec![PHASE_X, PHASE_Y, PHASE_X, PHASE_Y];
    let xy8: Vec<f64> = {
        let mut p = xy4.clone();
        p.extend(xy4.iter().rev());
        p
    };
    match family {
        Family::Xy4 => xy4,
        Family::Xy8 => xy8,
        Family::Xy16 => {
            let mut p = xy8.clone();
            p.extend(xy8.iter().map(|ph| ph + PI));
            p
        }
        _ => unreachable!(),
    }
}

fn wrap_block(phases: &[f64], tau_d: f64, t_p: f64) -> Vec<Event> {
    let mut ev = Vec::with_capacity(2 * phases.len() + 1);
    ev.push(Event::delay(tau_d / 2.0));
    for (k, ph) in phases.iter().enumerate() {
        if k > 0 {
            ev.push(Event::delay(tau_d));
        }
        ev.push(Event::pulse(*ph, t_p));
    }
    ev.push(Event::delay(tau_d / 2.0));
    ev
}

/// Symmetrize a phase pattern: the pattern, then its time-reversed copy with
/// every rotation inverted (phase + pi), each wrapped in `tau_d/2` edges.
fn symmetrized_events(pattern: &[f64], tau_d: f64, t_p: f64) -> Vec<Event> {
    let reversed_inverted: Vec<f64> = pattern.iter().rev().map(|ph| ph + PI).collect();
    let mut ev = wrap_block(pattern, tau_d, t_p);
    ev.extend(wrap_block(&reversed_inverted, tau_d, t_p));
    ev
}

fn asym_events(pattern: &[f64], tau_d: f64, t_p: f64) -> Vec<Event> {
    let mut ev = Vec::with_capacity(2 * pattern.len());
    for ph in pattern {
        ev.push(Event::delay(tau_d));
        ev.push(Event::pulse(*ph, t_p));
    }
    ev
}

fn xy_events(family: Family, symmetric: bool, tau_d: f64, t_p: f64) -> Vec<Event> {
    let pattern = xy_pattern(family);
    if symmetric {
        // XY-16 already contains its own phase-inverted image; wrapping the
        // two halves keeps the pulse count unchanged. XY-4 and XY-8 gain the
        // inverted copy, doubling the cycle.
        if family == Family::Xy16 {
            let (a, b) = pattern.split_at(pattern.len() / 2);
            let mut ev = wrap_block(a, tau_d, t_p);
            ev.extend(wrap_block(b, tau_d, t_p));
            ev
        } else {
            symmetrized_events(&pattern, tau_d, t_p)
        }
    } else {
        asym_events(&pattern, tau_d, t_p)
    }
}

fn cpmg_events(pulse_count: u32, tau_d: f64, t_p: f64) -> Vec<Event> {
    let mut ev = Vec::with_capacity(3 * pulse_count as usize);
    for _ in 0..pulse_count {
        ev.push(Event::delay(tau_d / 2.0));
        ev.push(Event::pulse(PHASE_X, t_p));
        ev.push(Event::delay(tau_d / 2.0));
    }
    ev
}

fn kdd_events(tau_d: f64, t_p: f64) -> Vec<Event> {
    let mut ev = Vec::new();
    for base in [0.0, PI / 2.0, 0.0, PI / 2.0] {
        ev.push(Event::delay(tau_d / 2.0));
        for (k, rel) in KNILL_PHASES.iter().enumerate() {
            if k > 0 {
                ev.push(Event::delay(tau_d));
            }
            ev.push(Event::pulse(rel + base, t_p));
        }
        ev.push(Event::delay(tau_d / 2.0));
    }
    ev
}

fn udd_events(pulse_count: u32, tau_d: f64, t_p: f64) -> Result<Vec<Event>> {
    let n = pulse_count as usize;
    let total = pulse_count as f64 * (tau_d + t_p);
    let centers = udd_times(pulse_count, total);
    let mut ev = Vec::with_capacity(2 * n + 1);
    let mut clock = 0.0;
    for c in &centers {
        let gap = (c - t_p / 2.0) - clock;
        if gap < -TIME_TOL {
            return Err(Error::UnsupportedSequence(format!(
                "udd pulses overlap at t_p={t_p}, tau_d={tau_d}, n={pulse_count}"
            )));
        }
        ev.push(Event::delay(gap.max(0.0)));
        ev.push(Event::pulse(PHASE_X, t_p));
        clock = c + t_p / 2.0;
    }
    ev.push(Event::delay((total - clock).max(0.0)));
    Ok(ev)
}

/// Expand one cycle of the sequence selected by `spec`.
pub fn expand_sequence(spec: &SequenceSpec) -> Result<PulseProgram> {
    spec.validate()?;
    let events = match spec.family {
        Family::Cpmg => cpmg_events(spec.pulse_count, spec.tau_d, spec.t_p),
        Family::Udd => udd_events(spec.pulse_count, spec.tau_d, spec.t_p)?,
        Family::Xy4 | Family::Xy8 | Family::Xy16 => {
            xy_events(spec.family, spec.symmetric, spec.tau_d, spec.t_p)
        }
        Family::Cdd => {
            return cdd_recurse(spec.concatenation_level, spec.symmetric, spec.tau_d, spec.t_p)
                .map(|p| finish(p, spec))
        }
        Family::Kdd => kdd_events(spec.tau_d, spec.t_p),
    };
    Ok(finish(PulseProgram::from_events(spec.base_label(), events), spec))
}

fn finish(program: PulseProgram, spec: &SequenceSpec) -> PulseProgram {
    if spec.robust_pulses {
        program.with_robust_pulses()
    } else {
        program
    }
}

/// The first half (in time) of an event list, splitting a delay at the
/// midpoint if necessary. Pulses are never split.
fn first_half_in_time(events: &[Event]) -> Result<Vec<Event>> {
    let total: f64 = events.iter().map(Event::duration).sum();
    let half = total / 2.0;
    let mut out = Vec::new();
    let mut clock = 0.0;
    for ev in events {
        let end = clock + ev.duration();
        if end <= half + TIME_TOL {
            out.push(*ev);
            clock = end;
            if (end - half).abs() <= TIME_TOL {
                return Ok(out);
            }
        } else {
            let remaining = half - clock;
            match ev {
                Event::Delay(_) => {
                    if remaining > TIME_TOL {
                        out.push(Event::delay(remaining));
                    }
                    return Ok(out);
                }
                Event::Pulse(_) => {
                    return Err(Error::UnsupportedSequence(
                        "cycle midpoint falls inside a pulse; cannot take sqrt".into(),
                    ))
                }
            }
        }
    }
    Ok(out)
}

/// Concatenated DD: `CDD_n = [CDD_{n-1} X CDD_{n-1} Y]^2` in standard form,
/// `[sqrt(CDD_{n-1}) X CDD_{n-1} Y sqrt(CDD_{n-1})]^2` symmetrized, with
/// `CDD_1` equal to XY-4 of the matching symmetry.
pub fn cdd_recurse(n: u32, symmetric: bool, tau_d: f64, t_p: f64) -> Result<PulseProgram> {
    if n < 1 {
        return Err(Error::InvalidParameter(
            "concatenation_level must be >= 1".into(),
        ));
    }
    let mut events = xy_events(Family::Xy4, symmetric, tau_d, t_p);
    for _ in 1..n {
        let inner = events;
        let mut block = Vec::new();
        if symmetric {
            let sqrt = first_half_in_time(&inner)?;
            block.extend_from_slice(&sqrt);
            block.push(Event::pulse(PHASE_X, t_p));
            block.extend_from_slice(&inner);
            block.push(Event::pulse(PHASE_Y, t_p));
            block.extend_from_slice(&sqrt);
        } else {
            block.extend_from_slice(&inner);
            block.push(Event::pulse(PHASE_X, t_p));
            block.extend_from_slice(&inner);
            block.push(Event::pulse(PHASE_Y, t_p));
        }
        let mut cycle = block.clone();
        cycle.extend(block);
        events = cycle;
    }
    let label = if symmetric {
        format!("cdd{n}-sym")
    } else {
        format!("cdd{n}")
    };
    Ok(PulseProgram::from_events(label, events))
}

/// The five-pulse Knill composite at overall phase `phi`, optionally with a
/// delay between the constituent pulses (the KDD building block).
pub fn knill_expand(phi: f64, t_p: f64, intra_delay: f64) -> Result<PulseProgram> {
    if !(t_p >= 0.0 && intra_delay >= 0.0) {
        return Err(Error::InvalidParameter(
            "t_p and intra_delay must be >= 0".into(),
        ));
    }
    let mut ev = Vec::with_capacity(9);
    for (k, rel) in KNILL_PHASES.iter().enumerate() {
        if k > 0 && intra_delay > 0.0 {
            ev.push(Event::delay(intra_delay));
        }
        ev.push(Event::pulse(rel + phi, t_p));
    }
    let mut p = PulseProgram::from_events("knill", ev);
    p.base_slots = 1;
    Ok(p)
}

/// UDD pulse centers `t_j = T sin^2(pi j / (2N + 2))`, `j = 1..N`.
pub fn udd_times(pulse_count: u32, total_time: f64) -> Vec<f64> {
    let n = pulse_count as f64;
    (1..=pulse_count)
        .map(|j| total_time * (PI * j as f64 / (2.0 * n + 2.0)).sin().powi(2))
        .collect()
}

/// Fraction of the cycle spent irradiating.
pub fn duty_cycle(program: &PulseProgram) -> Result<f64> {
    if program.cycle_time <= 0.0 {
        return Err(Error::InvalidParameter(
            "duty cycle needs cycle_time > 0".into(),
        ));
    }
    Ok(program.irradiation_time() / program.cycle_time)
}
