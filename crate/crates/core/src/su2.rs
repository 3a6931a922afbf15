//! Exact algebra of spin-1/2 propagators.
//!
//! Propagators are 2x2 complex matrices. Rotations about in-plane axes and
//! evolution under a constant drive/detuning Hamiltonian have closed axis-angle
//! forms, so no numerical integration is involved anywhere. Comparisons are
//! phase-insensitive throughout: a global phase is unobservable.

use num_complex::Complex64;

use crate::{Error, Result};

/// Complex 2x2 propagator, row-major `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    pub data: [Complex64; 4],
}

/// Constant-drive Hamiltonian `H = (rabi/2)(cos(phase) sx + sin(phase) sy) + (detuning/2) sz`.
///
/// Frequencies are angular, in rad/us; `phase` is the azimuth of the drive
/// axis in the xy-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianParams {
    pub rabi: f64,
    pub phase: f64,
    pub detuning: f64,
}

impl Unitary2 {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { data: [a, b, c, d] }
    }

    pub fn identity() -> Self {
        Self::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        )
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::new(
            self.data[0].conj(),
            self.data[2].conj(),
            self.data[1].conj(),
            self.data[3].conj(),
        )
    }

    pub fn trace(&self) -> Complex64 {
        self.data[0] + self.data[3]
    }

    pub fn det(&self) -> Complex64 {
        self.data[0] * self.data[3] - self.data[1] * self.data[2]
    }

    /// Largest entrywise deviation of `U Udag` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let p = *self * self.dagger();
        let mut worst: f64 = 0.0;
        for (k, id) in [(0, 1.0), (1, 0.0), (2, 0.0), (3, 1.0)] {
            worst = worst.max((p.data[k] - Complex64::new(id, 0.0)).norm());
        }
        worst
    }

    /// Phase-insensitive distance `d(U, V) = 1 - |Tr(Udag V)| / 2`.
    ///
    /// Zero iff the two unitaries agree up to a global phase.
    pub fn distance(&self, other: &Self) -> f64 {
        1.0 - (self.dagger() * *other).trace().norm() / 2.0
    }

    /// Rotation angle of the unitary, ignoring its global phase, in `[0, pi]`.
    ///
    /// Extracted from the Pauli decomposition via `atan2`, which keeps full
    /// relative precision for angles far below the `acos` resolution floor.
    pub fn rotation_angle(&self) -> f64 {
        let [a, b, c, d] = self.data;
        let p0 = (a + d) / 2.0;
        let px = (b + c) / 2.0;
        let py = Complex64::new(0.0, 1.0) * (b - c) / 2.0;
        let pz = (a - d) / 2.0;
        let r = (px.norm_sqr() + py.norm_sqr() + pz.norm_sqr()).sqrt();
        2.0 * r.atan2(p0.norm())
    }

    /// `U^n` by repeated squaring.
    pub fn pow(&self, mut n: u64) -> Self {
        let mut base = *self;
        let mut acc = Self::identity();
        while n > 0 {
            if n & 1 == 1 {
                acc = base * acc;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }
}

impl std::ops::Mul for Unitary2 {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let [a, b, c, d] = self.data;
        let [e, f, g, h] = rhs.data;
        Self::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
    }
}

/// Rotation by `theta` about the in-plane axis at azimuth `phi`:
/// `exp(-i theta (cos(phi) sx + sin(phi) sy) / 2)`.
pub fn rotation(theta: f64, phi: f64) -> Unitary2 {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    // off-diagonals: -i s e^{-+ i phi}
    let off_upper = Complex64::new(0.0, -s) * Complex64::from_polar(1.0, -phi);
    let off_lower = Complex64::new(0.0, -s) * Complex64::from_polar(1.0, phi);
    Unitary2::new(
        Complex64::new(c, 0.0),
        off_upper,
        off_lower,
        Complex64::new(c, 0.0),
    )
}

/// Rotation about z: `diag(e^{-i theta/2}, e^{+i theta/2})`.
pub fn z_rotation(theta: f64) -> Unitary2 {
    Unitary2::new(
        Complex64::from_polar(1.0, -theta / 2.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, theta / 2.0),
    )
}

/// Closed-form evolution `exp(-i H t)` under a constant Hamiltonian.
///
/// The rotation vector is `(rabi cos(phase), rabi sin(phase), detuning) * t`;
/// its magnitude is the effective rotation angle. Reduces to [`rotation`] when
/// the detuning vanishes and to [`z_rotation`] when the drive is off.
pub fn evolve_static(h: &HamiltonianParams, t: f64) -> Unitary2 {
    debug_assert!(h.rabi >= 0.0 && t >= 0.0);
    let vx = h.rabi * h.phase.cos() * t;
    let vy = h.rabi * h.phase.sin() * t;
    let vz = h.detuning * t;
    let angle = (vx * vx + vy * vy + vz * vz).sqrt();
    if angle == 0.0 {
        return Unitary2::identity();
    }
    let (nx, ny, nz) = (vx / angle, vy / angle, vz / angle);
    let c = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    Unitary2::new(
        Complex64::new(c, -s * nz),
        Complex64::new(-s * ny, -s * nx),
        Complex64::new(s * ny, -s * nx),
        Complex64::new(c, s * nz),
    )
}

/// Time-ordered product of propagators; the first element acts first.
pub fn compose(factors: &[Unitary2]) -> Result<Unitary2> {
    if factors.is_empty() {
        return Err(Error::EmptyComposition);
    }
    Ok(factors
        .iter()
        .fold(Unitary2::identity(), |acc, u| *u * acc))
}

/// The propagator fidelity `F = |Tr(A Bdag)| / sqrt(Tr(A Adag) Tr(B Bdag))`.
///
/// Insensitive to the global phase of either argument. For a pair of
/// unitaries this reduces to `|Tr(A Bdag)| / 2`.
pub fn fidelity(target: &Unitary2, actual: &Unitary2) -> Result<f64> {
    let na = (*target * target.dagger()).trace().re;
    let nb = (*actual * actual.dagger()).trace().re;
    if na <= 0.0 || nb <= 0.0 || !na.is_finite() || !nb.is_finite() {
        return Err(Error::ZeroNormOperand);
    }
    Ok((*target * actual.dagger()).trace().norm() / (na * nb).sqrt())
}
