//! Shared oracles for the integration tests. Everything here is independent
//! of the closed-form propagator path in the crate: the matrix exponential is
//! a scaled-and-squared power series, and the dephasing oracle works from the
//! OU autocovariance and the sequence's sign-switching function alone.

#![allow(dead_code)]

use num_complex::Complex64;

use ddsim_core::sequence::{Event, PulseProgram};
use ddsim_core::su2::Unitary2;

pub fn mat_mul(a: &[Complex64; 4], b: &[Complex64; 4]) -> [Complex64; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// `exp(M)` for a 2x2 complex matrix by scaling-and-squaring with a plain
/// power series.
pub fn expm(m: [Complex64; 4]) -> [Complex64; 4] {
    let norm: f64 = m.iter().map(|e| e.norm()).sum();
    let scalings = norm.log2().ceil().max(0.0) as u32 + 4;
    let scale = (2.0f64).powi(scalings as i32);
    let scaled: [Complex64; 4] = [m[0] / scale, m[1] / scale, m[2] / scale, m[3] / scale];

    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut result = [one, zero, zero, one];
    let mut term = [one, zero, zero, one];
    for k in 1..48 {
        term = mat_mul(&term, &scaled);
        for t in term.iter_mut() {
            *t /= k as f64;
        }
        for (r, t) in result.iter_mut().zip(term.iter()) {
            *r += t;
        }
        if term.iter().map(|e| e.norm()).sum::<f64>() < 1e-24 {
            break;
        }
    }
    for _ in 0..scalings {
        result = mat_mul(&result, &result);
    }
    result
}

/// `exp(-i H t)` for `H = (rabi/2)(cos(phase) sx + sin(phase) sy) + (det/2) sz`,
/// via the series oracle.
pub fn expm_hamiltonian(rabi: f64, phase: f64, det: f64, t: f64) -> Unitary2 {
    let hx = rabi * phase.cos() / 2.0;
    let hy = rabi * phase.sin() / 2.0;
    let hz = det / 2.0;
    // -i H t in matrix form
    let m = [
        Complex64::new(0.0, -hz * t),
        Complex64::new(-hy * t, -hx * t),
        Complex64::new(hy * t, -hx * t),
        Complex64::new(0.0, hz * t),
    ];
    let e = expm(m);
    Unitary2::new(e[0], e[1], e[2], e[3])
}

pub fn entrywise_distance(a: &Unitary2, b: &Unitary2) -> f64 {
    a.data
        .iter()
        .zip(b.data.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Times at which the sign of the toggling frame flips: the centers of the
/// program's pulses, cycle after cycle.
pub fn flip_times(program: &PulseProgram, cycles: u32) -> Vec<f64> {
    let mut flips = Vec::new();
    for c in 0..cycles {
        let mut t = c as f64 * program.cycle_time;
        for ev in &program.events {
            if let Event::Pulse(p) = ev {
                flips.push(t + p.duration / 2.0);
            }
            t += ev.duration();
        }
    }
    flips
}

/// Per-grid-cell integrals of the +-1 sign function on `[0, t_end)`,
/// switching sign at each flip time.
pub fn cell_weights(flips: &[f64], dt: f64, t_end: f64) -> Vec<f64> {
    let cells = (t_end / dt).round() as usize;
    let mut weights = vec![0.0; cells];
    let mut sign = 1.0;
    let mut t = 0.0;
    let mut next_flip = 0usize;
    while t < t_end - 1e-12 {
        let cell = (t / dt) as usize;
        if cell >= cells {
            break;
        }
        let cell_end = (cell as f64 + 1.0) * dt;
        let mut stop = cell_end.min(t_end);
        if next_flip < flips.len() && flips[next_flip] < stop - 1e-12 {
            stop = flips[next_flip];
            weights[cell] += sign * (stop - t);
            sign = -sign;
            next_flip += 1;
        } else {
            weights[cell] += sign * (stop - t);
            while next_flip < flips.len() && (flips[next_flip] - stop).abs() <= 1e-12 {
                sign = -sign;
                next_flip += 1;
            }
        }
        t = stop;
    }
    weights
}

/// Second-cumulant attenuation of a Gaussian stationary process sampled on a
/// grid and held piecewise-constant: `chi = (1/2) sigma^2 sum_kl w_k w_l rho^|k-l|`,
/// evaluated at each requested end time (which must sit on a grid boundary).
///
/// Returns `exp(-chi)` at each time.
pub fn gaussian_decay_oracle(
    flips: &[f64],
    dt: f64,
    sigma: f64,
    tau_e: f64,
    sample_times: &[f64],
) -> Vec<f64> {
    let rho = (-dt / tau_e).exp();
    sample_times
        .iter()
        .map(|&t_end| {
            let w = cell_weights(flips, dt, t_end);
            let mut chi = 0.0;
            let mut carry = 0.0; // sum_l w_l rho^{k - l} over l < k
            for &wk in &w {
                chi += 0.5 * sigma * sigma * (wk * wk + 2.0 * wk * carry);
                carry = rho * (carry + wk);
            }
            (-chi).exp()
        })
        .collect()
}

/// Continuous-time free-induction decay of OU dephasing noise:
/// `M(t) = exp(-sigma^2 tau_e^2 (e^{-t/tau_e} - 1 + t/tau_e))`.
pub fn fid_analytic(sigma: f64, tau_e: f64, t: f64) -> f64 {
    (-(sigma * sigma) * tau_e * tau_e * ((-t / tau_e).exp() - 1.0 + t / tau_e)).exp()
}
