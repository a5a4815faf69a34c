//! Partial traces and entanglement functionals for bipartite pure states.
//!
//! A state of the composite system is a flat amplitude vector with index
//! `a * d2 + b`; reshaped it is the `d1 × d2` coefficient matrix `C`, and
//! `ρ₁ = C C†`, `ρ₂ = (C† C)ᵀ`.

use faer::{Mat, MatRef};

use crate::linalg::{self, CMat};
use crate::states::PureState;
use crate::{Error, Result, C64};

/// Eigenvalues below this are treated as exact zeros in `λ log λ`.
pub const LOG_CUTOFF: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub d1: usize,
    pub d2: usize,
}

impl Dims {
    pub fn new(d1: usize, d2: usize) -> Self {
        Dims { d1, d2 }
    }

    pub fn total(&self) -> usize {
        self.d1 * self.d2
    }

    pub fn check(&self, len: usize) -> Result<()> {
        if len != self.total() {
            return Err(Error::Dimension { expected: self.total(), found: len });
        }
        Ok(())
    }
}

/// Reduced density matrix of one subsystem.
#[derive(Clone, Debug)]
pub struct ReducedDensity {
    pub rho: CMat,
    pub source_dims: Dims,
}

impl ReducedDensity {
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        frobenius_sqr(self.rho.as_ref())
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(self.rho.as_ref()).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigen(self.rho.as_ref())
            .map(|(v, _)| v)
            .expect("reduced density eigendecomposition")
    }
}

fn frobenius_sqr(a: MatRef<'_, C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s
}

/// The `d1 × d2` coefficient matrix of a flat amplitude vector.
pub fn amplitude_matrix(amps: &[C64], dims: Dims) -> Result<CMat> {
    dims.check(amps.len())?;
    Ok(Mat::from_fn(dims.d1, dims.d2, |a, b| amps[a * dims.d2 + b]))
}

/// `ρ₁ = Tr₂ |ψ⟩⟨ψ| = C C†`.
pub fn partial_trace_second(state: &PureState, dims: Dims) -> Result<ReducedDensity> {
    let c = amplitude_matrix(state.amplitudes(), dims)?;
    Ok(ReducedDensity { rho: &c * c.adjoint(), source_dims: dims })
}

/// `ρ₂ = Tr₁ |ψ⟩⟨ψ|`, i.e. `ρ₂[b, b'] = Σ_a C[a,b] C*[a,b']`.
pub fn partial_trace_first(state: &PureState, dims: Dims) -> Result<ReducedDensity> {
    let c = amplitude_matrix(state.amplitudes(), dims)?;
    Ok(ReducedDensity { rho: c.transpose() * c.conjugate(), source_dims: dims })
}

/// `Tr₂ |a⟩⟨b| = C_a C_b†` for two (not necessarily equal) vectors.
pub fn cross_reduction(a: &[C64], b: &[C64], dims: Dims) -> Result<CMat> {
    let ca = amplitude_matrix(a, dims)?;
    let cb = amplitude_matrix(b, dims)?;
    Ok(&ca * cb.adjoint())
}

/// `1 - Tr ρ²`, clipped into `[0, 1]` against rounding noise.
pub fn linear_entropy(rho: &ReducedDensity) -> f64 {
    (1.0 - rho.purity()).clamp(0.0, 1.0)
}

/// `Tr ρ₁²` straight from the amplitudes, without building `ρ₁` as a matrix
/// object. Uses the smaller of `C C†` / `C† C`, which share their spectrum.
pub fn purity_of_amplitudes(amps: &[C64], dims: Dims) -> Result<f64> {
    dims.check(amps.len())?;
    let (d1, d2) = (dims.d1, dims.d2);
    let mut total = 0.0;
    if d1 <= d2 {
        for a in 0..d1 {
            let row_a = &amps[a * d2..(a + 1) * d2];
            let diag: f64 = row_a.iter().map(|x| x.norm_sqr()).sum();
            total += diag * diag;
            for c in (a + 1)..d1 {
                let row_c = &amps[c * d2..(c + 1) * d2];
                let g: C64 = row_a.iter().zip(row_c).map(|(x, y)| x * y.conj()).sum();
                total += 2.0 * g.norm_sqr();
            }
        }
    } else {
        for b in 0..d2 {
            let diag: f64 = (0..d1).map(|a| amps[a * d2 + b].norm_sqr()).sum();
            total += diag * diag;
            for c in (b + 1)..d2 {
                let g: C64 = (0..d1).map(|a| amps[a * d2 + b].conj() * amps[a * d2 + c]).sum();
                total += 2.0 * g.norm_sqr();
            }
        }
    }
    Ok(total)
}

pub fn linear_entropy_of_amplitudes(amps: &[C64], dims: Dims) -> Result<f64> {
    Ok((1.0 - purity_of_amplitudes(amps, dims)?).clamp(0.0, 1.0))
}

/// `-Tr ρ log₂ ρ`, in bits.
pub fn von_neumann_entropy(rho: &ReducedDensity) -> f64 {
    let s: f64 = rho
        .eigenvalues()
        .into_iter()
        .filter(|&l| l > LOG_CUTOFF)
        .map(|l| -l * l.log2())
        .sum();
    s.max(0.0)
}

/// Mean linear entropy of a Haar-random state of the full `d1·d2` system.
pub fn statistical_limit(d1: usize, d2: usize) -> f64 {
    let (d1, d2) = (d1 as f64, d2 as f64);
    1.0 - (d1 + d2) / (d1 * d2 + 1.0)
}

/// Largest linear entropy reachable with a `min(d1, d2)`-dimensional factor.
pub fn max_linear_entropy(dims: Dims) -> f64 {
    1.0 - 1.0 / dims.d1.min(dims.d2) as f64
}
