//! Structural and refocusing properties of the compiled catalog.

mod common;

use std::f64::consts::PI;

use ddsim_core::noise::{stream_rng, uniform_angle, ControlError};
use ddsim_core::sequence::{
    cdd_recurse, duty_cycle, expand_sequence, knill_expand, Event, Family, SequenceSpec,
};
use ddsim_core::simulator::cycle_propagator;
use ddsim_core::su2::{rotation, z_rotation, Unitary2};

const TAU_D: f64 = 21.2;
const T_P: f64 = 10.6;

fn catalog() -> Vec<SequenceSpec> {
    let s = |family| SequenceSpec::new(family, TAU_D, T_P);
    let mut specs = vec![
        s(Family::Xy4),
        s(Family::Xy4).symmetric(true),
        s(Family::Xy8),
        s(Family::Xy8).symmetric(true),
        s(Family::Xy16),
        s(Family::Xy16).symmetric(true),
        s(Family::Kdd),
        s(Family::Cpmg).pulses(2),
        s(Family::Cpmg).pulses(10),
        s(Family::Udd).pulses(2),
        s(Family::Udd).pulses(8),
    ];
    for n in 1..=3 {
        specs.push(s(Family::Cdd).level(n));
        specs.push(s(Family::Cdd).level(n).symmetric(true));
    }
    // robust-pulse variants
    specs.push(s(Family::Cpmg).pulses(2).robust(true));
    specs.push(s(Family::Xy4).robust(true));
    specs.push(s(Family::Xy4).symmetric(true).robust(true));
    specs.push(s(Family::Xy8).robust(true));
    specs.push(s(Family::Xy16).robust(true));
    specs.push(s(Family::Kdd).robust(true));
    specs
}

#[test]
fn every_catalog_cycle_refocuses_ideally() {
    for spec in catalog() {
        let program = expand_sequence(&spec).unwrap();
        let u = cycle_propagator(&program, &ControlError::default(), None).unwrap();
        let d = u.distance(&Unitary2::identity());
        assert!(d < 1e-10, "{}: d = {d:.3e}", program.label);
    }
}

#[test]
fn cdd_pulse_count_matches_independent_recursion() {
    // oracle: count pulses straight off the recursion N_n = 2 (2 N_{n-1} + 2),
    // independently of the event expansion
    let mut oracle = vec![4u64];
    for _ in 1..6 {
        let prev = *oracle.last().unwrap();
        oracle.push(2 * (2 * prev + 2));
    }
    for n in 1..=4u32 {
        let prog = cdd_recurse(n, false, TAU_D, T_P).unwrap();
        assert_eq!(
            prog.pulse_count() as u64,
            oracle[(n - 1) as usize],
            "level {n}"
        );
    }
}

#[test]
fn knill_composite_equals_z_rotation_after_pi_rotation() {
    let mut rng = stream_rng(0x4B11, 0);
    for _ in 0..100 {
        let phi = uniform_angle(&mut rng);
        let program = knill_expand(phi, T_P, 0.0).unwrap();
        let u = cycle_propagator(&program, &ControlError::default(), None).unwrap();
        let target = z_rotation(-PI / 3.0) * rotation(PI, phi);
        assert!(u.distance(&target) < 1e-10, "phi = {phi}");
    }
}

#[test]
fn kdd_block_is_knill_with_delays() {
    let kdd = expand_sequence(&SequenceSpec::new(Family::Kdd, TAU_D, T_P)).unwrap();
    let block = knill_expand(0.0, T_P, TAU_D).unwrap();
    // the first KDD block, stripped of its tau/2 edges, is the Knill
    // composite with intra-pulse delays
    let inner: Vec<Event> = kdd.events[1..block.events.len() + 1].to_vec();
    assert_eq!(inner, block.events);
}

#[test]
fn robust_variants_keep_duty_cycle_ratio() {
    let plain = expand_sequence(&SequenceSpec::new(Family::Xy4, TAU_D, T_P)).unwrap();
    let robust = expand_sequence(&SequenceSpec::new(Family::Xy4, TAU_D, T_P).robust(true)).unwrap();
    let d_plain = duty_cycle(&plain).unwrap();
    let d_robust = duty_cycle(&robust).unwrap();
    assert!(d_robust > d_plain);
    // irradiation grew fivefold while delays stayed
    let expected = 5.0 * plain.irradiation_time()
        / (5.0 * plain.irradiation_time() + (plain.cycle_time - plain.irradiation_time()));
    assert!((d_robust - expected).abs() < 1e-12);
}

#[test]
fn udd_even_cycle_refocuses_and_times_are_symmetric() {
    let spec = SequenceSpec::new(Family::Udd, TAU_D, T_P).pulses(6);
    let program = expand_sequence(&spec).unwrap();
    let u = cycle_propagator(&program, &ControlError::default(), None).unwrap();
    assert!(u.distance(&Unitary2::identity()) < 1e-10);

    // pulse centers mirror about the cycle midpoint
    let mut centers = Vec::new();
    let mut t = 0.0;
    for ev in &program.events {
        if ev.is_pulse() {
            centers.push(t + ev.duration() / 2.0);
        }
        t += ev.duration();
    }
    for (a, b) in centers.iter().zip(centers.iter().rev()) {
        assert!((a + b - program.cycle_time).abs() < 1e-9);
    }
}
