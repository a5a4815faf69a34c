//! Angular momentum algebra for a single spin-j particle.
//!
//! Matrices live in the `J_z` eigenbasis ordered `m = j, j-1, ..., -j`, so
//! basis index `i` carries magnetic number `m = j - i` and `|j,j⟩` is the first
//! basis vector.

use std::f64::consts::PI;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::linalg::{self, CMat};
use crate::states::PureState;
use crate::{Error, Result, C64};

/// Spin magnitude `j`, stored as the integer `2j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SpinQuantum {
    twice_j: u32,
}

impl SpinQuantum {
    pub fn new(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !j.is_finite() || j < 0.0 || (twice - twice.round()).abs() > 1e-12 {
            return Err(Error::Parameter(format!("spin j = {j} is not a non-negative half-integer")));
        }
        Ok(SpinQuantum { twice_j: twice.round() as u32 })
    }

    pub const fn from_twice(twice_j: u32) -> Self {
        SpinQuantum { twice_j }
    }

    pub fn twice_j(&self) -> u32 {
        self.twice_j
    }

    pub fn j(&self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    /// Hilbert space dimension `2j + 1`.
    pub fn dim(&self) -> usize {
        self.twice_j as usize + 1
    }

    pub fn is_half_integer(&self) -> bool {
        self.twice_j % 2 == 1
    }

    /// Magnetic number of basis index `i`.
    pub fn m(&self, index: usize) -> f64 {
        self.j() - index as f64
    }

    pub fn m_values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim()).map(move |i| self.m(i))
    }
}

impl TryFrom<f64> for SpinQuantum {
    type Error = Error;

    fn try_from(j: f64) -> Result<Self> {
        SpinQuantum::new(j)
    }
}

impl From<SpinQuantum> for f64 {
    fn from(s: SpinQuantum) -> f64 {
        s.j()
    }
}

impl std::fmt::Display for SpinQuantum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.j())
    }
}

/// Dense `J_x`, `J_y`, `J_z` for one spin (units of ħ = 1).
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub spin: SpinQuantum,
    pub jx: CMat,
    pub jy: CMat,
    pub jz: CMat,
}

pub fn build_spin_operators(spin: SpinQuantum) -> SpinOperators {
    let d = spin.dim();
    let j = spin.j();
    let zero = C64::new(0.0, 0.0);
    // J_+ |m⟩ = sqrt(j(j+1) - m(m+1)) |m+1⟩ ; index i-1 holds m+1.
    let raise = |i: usize, k: usize| -> f64 {
        if k >= 1 && i == k - 1 {
            let m = spin.m(k);
            (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
        } else {
            0.0
        }
    };
    let jx = Mat::from_fn(d, d, |i, k| C64::new(0.5 * (raise(i, k) + raise(k, i)), 0.0));
    let jy = Mat::from_fn(d, d, |i, k| C64::new(0.0, -0.5 * (raise(i, k) - raise(k, i))));
    let jz = Mat::from_fn(d, d, |i, k| if i == k { C64::new(spin.m(i), 0.0) } else { zero });
    SpinOperators { spin, jx, jy, jz }
}

impl SpinOperators {
    pub fn new(spin: SpinQuantum) -> Self {
        build_spin_operators(spin)
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    /// Rotation `exp(-i angle J_y)`.
    pub fn rotation_about_y(&self, angle: f64) -> CMat {
        rotation_about_y(self, angle)
    }
}

/// `exp(-i angle J_y)` from the eigendecomposition of the Hermitian `J_y`.
pub fn rotation_about_y(ops: &SpinOperators, angle: f64) -> CMat {
    // J_y always has the exact spectrum {m}; the faer EVD cannot fail on it.
    linalg::unitary_exp(ops.jy.as_ref(), angle).expect("J_y eigendecomposition")
}

/// Polar and azimuthal angles of a direction on the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphericalAngles {
    theta: f64,
    phi: f64,
}

impl SphericalAngles {
    /// `theta ∈ [0, π]`; `phi` is reduced into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !phi.is_finite() {
            return Err(Error::Parameter(format!("angles out of range: theta={theta}, phi={phi}")));
        }
        Ok(SphericalAngles { theta, phi: phi.rem_euclid(2.0 * PI) })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// Spin-coherent state `(1+|γ|²)^{-j} exp(γ (J_x - i J_y)) |j,j⟩`,
/// `γ = e^{iφ} tan(θ/2)`.
///
/// Expanding the exponential gives amplitudes
/// `sqrt(C(2j,n)) cos(θ/2)^{2j-n} sin(θ/2)^n e^{inφ}` on `m = j - n`, which is
/// finite at the pole `θ = π` (all weight on `m = -j`).
pub fn coherent_state(spin: SpinQuantum, angles: SphericalAngles) -> PureState {
    let two_j = spin.twice_j() as usize;
    let half = 0.5 * angles.theta();
    let (ln_s, ln_c) = (half.sin().ln(), half.cos().ln());
    let ln_fact_2j = ln_gamma(two_j as f64 + 1.0);
    let amps = (0..=two_j)
        .map(|n| {
            let ln_binom = ln_fact_2j - ln_gamma(n as f64 + 1.0) - ln_gamma((two_j - n) as f64 + 1.0);
            let up = if two_j == n { 0.0 } else { (two_j - n) as f64 * ln_c };
            let down = if n == 0 { 0.0 } else { n as f64 * ln_s };
            let modulus = (0.5 * ln_binom + up + down).exp();
            C64::from_polar(modulus, n as f64 * angles.phi())
        })
        .collect();
    PureState::new(amps).normalized()
}

/// Heisenberg-picture conjugation `U†ⁿ A Uⁿ`.
pub fn conjugate_repeatedly(op: MatRef<'_, C64>, unitary: MatRef<'_, C64>, n: usize) -> CMat {
    let mut current = op.to_owned();
    for _ in 0..n {
        current = unitary.adjoint() * &current * unitary;
    }
    current
}
