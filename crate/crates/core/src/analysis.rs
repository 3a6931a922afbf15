//! Derived quantities: fidelity-decay curves, 2-D robustness maps, 1/e decay
//! times, and duty-cycle sweeps.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::noise::{sample_epsilon, ControlError, GaussianEnsemble, NoiseProcess};
use crate::sequence::{duty_cycle, expand_sequence, SequenceSpec};
use crate::simulator::{
    accumulate_over_pulses, cycle_propagator, ensemble_average, AveragingRecipe, InitialState,
    Sampling, TraceResult,
};
use crate::su2::{fidelity, Unitary2};
use crate::{Error, Result};

/// Fidelity after every pulse, averaged over a flip-angle ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityCurve {
    pub pulses: Vec<u32>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub label: String,
}

/// Fidelity grid over flip-angle and offset errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub epsilon_axis: Vec<f64>,
    pub offset_axis: Vec<f64>,
    /// Row-major: `fidelity[ie * offset_axis.len() + io]`.
    pub fidelity: Vec<f64>,
    pub pulses_applied: u32,
    pub label: String,
    pub meta: BTreeMap<String, String>,
}

impl MapResult {
    pub fn at(&self, ie: usize, io: usize) -> f64 {
        self.fidelity[ie * self.offset_axis.len() + io]
    }

    /// Fraction of grid points with fidelity above `threshold`.
    pub fn robust_area_fraction(&self, threshold: f64) -> f64 {
        let hits = self.fidelity.iter().filter(|&&f| f > threshold).count();
        hits as f64 / self.fidelity.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMethod {
    InterpolatedCrossing,
    ExponentialFit,
}

/// 1/e decay time extracted from a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Crossing time, or the trace end (a lower bound) when censored.
    pub t_1e: f64,
    pub method: DecayMethod,
    /// False when the trace never crossed 1/e within its horizon.
    pub valid: bool,
}

/// One cell of a duty-cycle sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sequence: String,
    pub tau_d: f64,
    pub duty_cycle: f64,
    pub t_1e: f64,
    pub censored: bool,
}

/// Options bounding the cost of a duty-cycle sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Hard cap on simulated cycles per cell.
    pub max_cycles: u32,
    /// Stop extending the horizon once the mean magnetization falls below
    /// this floor (safely past the 1/e point).
    pub stop_floor: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            max_cycles: 400,
            stop_floor: 0.2,
        }
    }
}

/// Eq.-1 fidelity of the accumulated propagator after every pulse, with the
/// ideally accumulated propagator as the target (the identity at every whole
/// cycle of a refocusing sequence), averaged over the flip-angle ensemble.
/// No dephasing bath is involved.
pub fn fidelity_vs_pulses(
    spec: &SequenceSpec,
    ensemble: &GaussianEnsemble,
    max_pulses: u32,
    recipe: AveragingRecipe,
) -> Result<FidelityCurve> {
    if max_pulses < 1 {
        return Err(Error::InvalidParameter("max_pulses must be >= 1".into()));
    }
    let program = expand_sequence(spec)?;
    let n = max_pulses as usize;
    match recipe {
        AveragingRecipe::MeanFidelity => {
            let per_draw: Vec<Vec<f64>> = (0..ensemble.size as u64)
                .into_par_iter()
                .map(|i| {
                    let err = ControlError::new(sample_epsilon(ensemble, i), 0.0);
                    let mut fids = Vec::with_capacity(n);
                    accumulate_over_pulses(&program, &err, max_pulses, |_, actual, ideal| {
                        fids.push(fidelity(ideal, actual).expect("unitary operands"));
                    })?;
                    Ok(fids)
                })
                .collect::<Result<_>>()?;
            let draws = per_draw.len() as f64;
            let mut mean = vec![0.0; n];
            for fids in &per_draw {
                for (k, f) in fids.iter().enumerate() {
                    mean[k] += f;
                }
            }
            for v in &mut mean {
                *v /= draws;
            }
            let mut stderr = vec![0.0; n];
            if per_draw.len() > 1 {
                for fids in &per_draw {
                    for (k, f) in fids.iter().enumerate() {
                        let d = f - mean[k];
                        stderr[k] += d * d;
                    }
                }
                for s in &mut stderr {
                    *s = (*s / (draws - 1.0)).sqrt() / draws.sqrt();
                }
            }
            Ok(FidelityCurve {
                pulses: (1..=max_pulses).collect(),
                mean,
                stderr,
                label: program.label.clone(),
            })
        }
        AveragingRecipe::FidelityOfMeanPropagator => {
            let sums: Vec<(Vec<Unitary2>, Vec<Unitary2>)> = (0..ensemble.size as u64)
                .into_par_iter()
                .map(|i| {
                    let err = ControlError::new(sample_epsilon(ensemble, i), 0.0);
                    let mut actuals = Vec::with_capacity(n);
                    let mut ideals = Vec::with_capacity(n);
                    accumulate_over_pulses(&program, &err, max_pulses, |_, actual, ideal| {
                        actuals.push(*actual);
                        ideals.push(*ideal);
                    })?;
                    Ok((actuals, ideals))
                })
                .collect::<Result<_>>()?;
            let draws = sums.len() as f64;
            let ideals = &sums[0].1;
            let mut mean = Vec::with_capacity(n);
            for k in 0..n {
                let mut acc = Unitary2::new(
                    num_complex::Complex64::new(0.0, 0.0),
                    num_complex::Complex64::new(0.0, 0.0),
                    num_complex::Complex64::new(0.0, 0.0),
                    num_complex::Complex64::new(0.0, 0.0),
                );
                for (actuals, _) in &sums {
                    for (dst, src) in acc.data.iter_mut().zip(actuals[k].data.iter()) {
                        *dst += src;
                    }
                }
                for dst in acc.data.iter_mut() {
                    *dst /= draws;
                }
                mean.push(fidelity(&ideals[k], &acc).unwrap_or(0.0));
            }
            Ok(FidelityCurve {
                pulses: (1..=max_pulses).collect(),
                mean,
                stderr: vec![0.0; n],
                label: program.label.clone(),
            })
        }
    }
}

/// Deterministic fidelity map: one static `(epsilon, offset)` per grid point,
/// fidelity against the identity after exactly `pulses` base pulse slots.
///
/// A Knill composite counts as one slot (five physical pulses), so panels of
/// plain and robust-pulse variants stay comparable. `pulses` must be a whole
/// number of cycles.
pub fn fidelity_map(
    spec: &SequenceSpec,
    epsilon_axis: &[f64],
    offset_axis: &[f64],
    pulses: u32,
) -> Result<MapResult> {
    if epsilon_axis.is_empty() || offset_axis.is_empty() {
        return Err(Error::InvalidParameter("map grid must be non-empty".into()));
    }
    let program = expand_sequence(spec)?;
    let slots = program.base_slots as u32;
    if slots == 0 || pulses % slots != 0 {
        return Err(Error::InvalidParameter(format!(
            "{} pulses is not a whole number of {}-slot cycles",
            pulses, slots
        )));
    }
    let cycles = (pulses / slots) as u64;
    let cells: Vec<(usize, usize)> = (0..epsilon_axis.len())
        .flat_map(|ie| (0..offset_axis.len()).map(move |io| (ie, io)))
        .collect();
    let fidelity: Vec<f64> = cells
        .par_iter()
        .map(|&(ie, io)| {
            let err = ControlError::new(epsilon_axis[ie], offset_axis[io]);
            let u = cycle_propagator(&program, &err, None)?;
            Ok((u.pow(cycles).trace().norm() / 2.0).min(1.0))
        })
        .collect::<Result<_>>()?;
    let mut meta = BTreeMap::new();
    meta.insert("tau_d_us".into(), format!("{}", spec.tau_d));
    meta.insert("t_p_us".into(), format!("{}", spec.t_p));
    Ok(MapResult {
        epsilon_axis: epsilon_axis.to_vec(),
        offset_axis: offset_axis.to_vec(),
        fidelity,
        pulses_applied: pulses,
        label: program.label,
        meta,
    })
}

/// Uniformly spaced axis with `points` samples over `[-half_range, half_range]`.
pub fn symmetric_axis(half_range: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.0];
    }
    let step = 2.0 * half_range / (points - 1) as f64;
    (0..points).map(|k| -half_range + k as f64 * step).collect()
}

/// First downward 1/e crossing of a trace, located by linear interpolation.
///
/// The trace is normalized by its largest magnitude first, so the result is
/// invariant under uniform amplitude rescaling. A trace that never crosses
/// within its horizon is censored: `valid` is false and `t_1e` holds the
/// trace end, a lower bound.
pub fn decay_time(trace: &TraceResult) -> Result<DecayFit> {
    decay_time_of(&trace.times, &trace.magnetization)
}

pub fn decay_time_of(times: &[f64], magnetization: &[f64]) -> Result<DecayFit> {
    let peak = magnetization
        .iter()
        .copied()
        .filter(|m| m.is_finite())
        .fold(f64::NAN, |a, b| if a.is_nan() || b.abs() > a { b.abs() } else { a });
    if peak.is_nan() || peak == 0.0 {
        return Err(Error::EmptyTrace);
    }
    let threshold = (-1.0f64).exp();
    let peak_idx = magnetization
        .iter()
        .position(|m| m.is_finite() && m.abs() == peak)
        .unwrap();
    let mut prev_t = times[peak_idx];
    let mut prev_m = 1.0;
    for k in peak_idx..times.len() {
        let m = magnetization[k] / peak;
        if !m.is_finite() {
            continue;
        }
        if m < threshold {
            let frac = (prev_m - threshold) / (prev_m - m);
            let t = prev_t + frac * (times[k] - prev_t);
            return Ok(DecayFit {
                t_1e: t,
                method: DecayMethod::InterpolatedCrossing,
                valid: true,
            });
        }
        prev_t = times[k];
        prev_m = m;
    }
    Ok(DecayFit {
        t_1e: *times.last().unwrap(),
        method: DecayMethod::InterpolatedCrossing,
        valid: false,
    })
}

/// Least-squares exponential fit `M = exp(-t/T)` over samples above 0.05,
/// reported as the fitted `T`. A fallback for traces too coarse to bracket
/// the crossing.
pub fn decay_time_expfit(trace: &TraceResult) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(trace.magnetization.iter())
        .filter(|(_, &m)| m.is_finite() && m > 0.05)
        .map(|(&t, &m)| (t, m.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::EmptyTrace);
    }
    let n = pts.len() as f64;
    let (st, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in &pts {
        num += (t - mt) * (y - my);
        den += (t - mt) * (t - mt);
    }
    if den == 0.0 || num >= 0.0 {
        return Ok(DecayFit {
            t_1e: *trace.times.last().unwrap(),
            method: DecayMethod::ExponentialFit,
            valid: false,
        });
    }
    Ok(DecayFit {
        t_1e: -den / num,
        method: DecayMethod::ExponentialFit,
        valid: true,
    })
}

/// Run every `(sequence, tau_d)` cell to its 1/e crossing (or the horizon)
/// and tabulate decay time against duty cycle.
///
/// The horizon grows in doubling steps until the mean magnetization falls
/// below `opts.stop_floor` or `opts.max_cycles` is reached, which bounds the
/// cost of slowly decaying cells. All cells share the ensemble and noise
/// seeds, so sequences are compared on common random numbers.
pub fn duty_cycle_sweep(
    entries: &[SequenceSpec],
    tau_ds: &[f64],
    bath: &NoiseProcess,
    ensemble: &GaussianEnsemble,
    n_paths: u32,
    init: InitialState,
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(entries.len() * tau_ds.len());
    for base in entries {
        for &tau_d in tau_ds {
            let mut spec = *base;
            spec.tau_d = tau_d;
            let program = expand_sequence(&spec)?;
            let duty = duty_cycle(&program)?;
            let mut cycles = 32.min(opts.max_cycles).max(1);
            let trace = loop {
                let trace = ensemble_average(
                    &program,
                    cycles,
                    init,
                    Sampling::Cycle,
                    ensemble,
                    bath,
                    n_paths,
                )?;
                let floor_hit = trace
                    .magnetization
                    .iter()
                    .any(|&m| m < opts.stop_floor);
                if floor_hit || cycles >= opts.max_cycles {
                    break trace;
                }
                cycles = (cycles * 2).min(opts.max_cycles);
            };
            let fit = decay_time(&trace)?;
            rows.push(SweepRow {
                sequence: program.label.clone(),
                tau_d,
                duty_cycle: duty,
                t_1e: fit.t_1e,
                censored: !fit.valid,
            });
        }
    }
    Ok(rows)
}
