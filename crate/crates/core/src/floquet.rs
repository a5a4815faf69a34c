//! One-kick unitary of the coupled tops, factored evolution and
//! diagonalization.
//!
//! A kick acts as `C · (K₁R₁ ⊗ K₂R₂)`: each top first rotates by `p` about
//! `y` (`R = exp(-ipJ_y)`), then receives its torsion kick
//! `K = exp(-i k J_z² / 2j)`, and finally the pair picks up the diagonal
//! coupling phase `C = exp(-i (ε/j_c) m₁ m₂)` in the product `J_z` basis.

use std::f64::consts::PI;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};
use serde::{Deserialize, Serialize};

use crate::entanglement::Dims;
use crate::linalg::{self, CMat};
use crate::spin::{conjugate_repeatedly, SpinOperators, SpinQuantum};
use crate::states::PureState;
use crate::{Error, Result, C64};

/// Product dimensions above this are refused when building an operator.
pub const DEFAULT_DIM_CAP: usize = 16_384;
/// Largest product dimension whose full matrix is diagonalized.
pub const DEFAULT_DENSE_CAP: usize = 4_096;
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopParams {
    pub spin: SpinQuantum,
    pub k: f64,
    pub p: f64,
}

impl TopParams {
    /// Kicked top with the rotation angle fixed at `π/2`.
    pub fn new(spin: SpinQuantum, k: f64) -> Result<Self> {
        Self::with_rotation(spin, k, PI / 2.0)
    }

    pub fn with_rotation(spin: SpinQuantum, k: f64, p: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::Parameter(format!("kick strength k = {k} must be finite and non-negative")));
        }
        if !p.is_finite() {
            return Err(Error::Parameter(format!("rotation angle p = {p} is not finite")));
        }
        Ok(TopParams { spin, k, p })
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }
}

/// Which spin magnitude normalizes the coupling `ε/j` when `j₁ ≠ j₂`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingScale {
    First,
    Second,
    Arithmetic,
    #[default]
    Geometric,
}

impl CouplingScale {
    pub fn value(&self, j1: SpinQuantum, j2: SpinQuantum) -> f64 {
        let (a, b) = (j1.j(), j2.j());
        match self {
            CouplingScale::First => a,
            CouplingScale::Second => b,
            CouplingScale::Arithmetic => 0.5 * (a + b),
            CouplingScale::Geometric => (a * b).sqrt(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CouplingScale::First => "first",
            CouplingScale::Second => "second",
            CouplingScale::Arithmetic => "arithmetic",
            CouplingScale::Geometric => "geometric",
        }
    }
}

impl std::str::FromStr for CouplingScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(CouplingScale::First),
            "second" => Ok(CouplingScale::Second),
            "arithmetic" => Ok(CouplingScale::Arithmetic),
            "geometric" => Ok(CouplingScale::Geometric),
            other => Err(Error::Parameter(format!("unknown coupling scale '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledParams {
    pub top1: TopParams,
    pub top2: TopParams,
    pub epsilon: f64,
    pub scale: CouplingScale,
}

impl CoupledParams {
    pub fn new(top1: TopParams, top2: TopParams, epsilon: f64, scale: CouplingScale) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::Parameter(format!("coupling epsilon = {epsilon} must be finite and non-negative")));
        }
        Ok(CoupledParams { top1, top2, epsilon, scale })
    }

    /// Both tops share `k` and `p = π/2`.
    pub fn symmetric(j1: SpinQuantum, j2: SpinQuantum, k: f64, epsilon: f64) -> Result<Self> {
        Self::new(TopParams::new(j1, k)?, TopParams::new(j2, k)?, epsilon, CouplingScale::default())
    }

    pub fn j_scale(&self) -> f64 {
        self.scale.value(self.top1.spin, self.top2.spin)
    }

    /// Coefficient of `J_{z1} J_{z2}` in the kick.
    pub fn coupling_strength(&self) -> f64 {
        let js = self.j_scale();
        if js == 0.0 {
            0.0
        } else {
            self.epsilon / js
        }
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.top1.dim(), self.top2.dim())
    }
}

/// Diagonal of the torsion kick `exp(-i k m² / 2j)`.
pub fn kick_phases(params: &TopParams) -> Vec<C64> {
    let j = params.spin.j();
    params
        .spin
        .m_values()
        .map(|m| {
            let angle = if j == 0.0 { 0.0 } else { params.k * m * m / (2.0 * j) };
            C64::from_polar(1.0, -angle)
        })
        .collect()
}

/// `U = exp(-i k J_z²/2j) exp(-i p J_y)`.
pub fn build_single_top_unitary(params: &TopParams) -> CMat {
    let ops = SpinOperators::new(params.spin);
    single_top_unitary_from(&ops, params)
}

fn single_top_unitary_from(ops: &SpinOperators, params: &TopParams) -> CMat {
    let rotation = ops.rotation_about_y(params.p);
    let kick = kick_phases(params);
    Mat::from_fn(rotation.nrows(), rotation.ncols(), |i, k| kick[i] * rotation[(i, k)])
}

/// Coupled one-kick operator kept in factored form.
#[derive(Clone, Debug)]
pub struct FloquetOperator {
    pub params: CoupledParams,
    dims: Dims,
    u1: CMat,
    u2: CMat,
    /// `exp(-i (ε/j_c) m₁ m₂)` at flat index `a * d2 + b`.
    coupling: Vec<C64>,
}

pub fn build_coupled_step(params: &CoupledParams) -> Result<FloquetOperator> {
    build_coupled_step_capped(params, DEFAULT_DIM_CAP)
}

pub fn build_coupled_step_capped(params: &CoupledParams, cap: usize) -> Result<FloquetOperator> {
    let dims = params.dims();
    if dims.total() > cap {
        return Err(Error::Resource(format!(
            "product dimension {} exceeds the configured cap {cap}",
            dims.total()
        )));
    }
    let u1 = build_single_top_unitary(&params.top1);
    let u2 = build_single_top_unitary(&params.top2);
    let g = params.coupling_strength();
    let (s1, s2) = (params.top1.spin, params.top2.spin);
    let mut coupling = Vec::with_capacity(dims.total());
    for a in 0..dims.d1 {
        for b in 0..dims.d2 {
            coupling.push(C64::from_polar(1.0, -g * s1.m(a) * s2.m(b)));
        }
    }
    Ok(FloquetOperator { params: *params, dims, u1, u2, coupling })
}

impl FloquetOperator {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn first_factor(&self) -> MatRef<'_, C64> {
        self.u1.as_ref()
    }

    pub fn second_factor(&self) -> MatRef<'_, C64> {
        self.u2.as_ref()
    }

    pub fn coupling_phases(&self) -> &[C64] {
        &self.coupling
    }

    /// Full `d1·d2` square matrix `C (U₁ ⊗ U₂)`.
    pub fn full_matrix(&self) -> CMat {
        let local = linalg::kron(self.u1.as_ref(), self.u2.as_ref());
        Mat::from_fn(local.nrows(), local.ncols(), |i, k| self.coupling[i] * local[(i, k)])
    }

    /// `n` kicks applied to a flat state of dimension `d1·d2`.
    pub fn evolve(&self, state: &PureState, kicks: u64) -> Result<PureState> {
        let mut prop = Propagator::new(self, state)?;
        prop.advance(kicks);
        Ok(prop.state())
    }

    pub fn diagonalize(&self, opts: &DiagonalizeOptions) -> Result<Spectrum> {
        diagonalize(self, opts)
    }
}

/// In-place stroboscopic evolution of one state with preallocated buffers.
///
/// The amplitudes are held as the `d1 × d2` matrix `Ψ`; a kick is
/// `Ψ ← (U₁ Ψ U₂ᵀ) ⊙ C`, costing `O(d1 d2 (d1 + d2))`.
pub struct Propagator<'a> {
    op: &'a FloquetOperator,
    psi: CMat,
    tmp: CMat,
    gram: CMat,
    kicks: u64,
}

impl<'a> Propagator<'a> {
    pub fn new(op: &'a FloquetOperator, state: &PureState) -> Result<Self> {
        let dims = op.dims;
        dims.check(state.dim())?;
        let amps = state.amplitudes();
        let psi = Mat::from_fn(dims.d1, dims.d2, |a, b| amps[a * dims.d2 + b]);
        let m = dims.d1.min(dims.d2);
        Ok(Propagator {
            op,
            psi,
            tmp: Mat::zeros(dims.d1, dims.d2),
            gram: Mat::zeros(m, m),
            kicks: 0,
        })
    }

    pub fn kicks(&self) -> u64 {
        self.kicks
    }

    pub fn step(&mut self) {
        let one = C64::new(1.0, 0.0);
        matmul(self.tmp.as_mut(), Accum::Replace, self.op.u1.as_ref(), self.psi.as_ref(), one, Par::Seq);
        matmul(self.psi.as_mut(), Accum::Replace, self.tmp.as_ref(), self.op.u2.transpose(), one, Par::Seq);
        let d2 = self.op.dims.d2;
        for b in 0..d2 {
            for (a, x) in self.psi.col_mut(b).iter_mut().enumerate() {
                *x *= self.op.coupling[a * d2 + b];
            }
        }
        self.kicks += 1;
    }

    pub fn advance(&mut self, kicks: u64) {
        for _ in 0..kicks {
            self.step();
        }
    }

    /// `Tr ρ₁²` of the current state.
    pub fn purity(&mut self) -> f64 {
        let one = C64::new(1.0, 0.0);
        if self.op.dims.d1 <= self.op.dims.d2 {
            matmul(self.gram.as_mut(), Accum::Replace, self.psi.as_ref(), self.psi.adjoint(), one, Par::Seq);
        } else {
            matmul(self.gram.as_mut(), Accum::Replace, self.psi.adjoint(), self.psi.as_ref(), one, Par::Seq);
        }
        let mut total = 0.0;
        for j in 0..self.gram.ncols() {
            for x in self.gram.col(j).iter() {
                total += x.norm_sqr();
            }
        }
        total
    }

    pub fn linear_entropy(&mut self) -> f64 {
        (1.0 - self.purity()).clamp(0.0, 1.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.psi.ncols() {
            for x in self.psi.col(j).iter() {
                s += x.norm_sqr();
            }
        }
        s
    }

    pub fn state(&self) -> PureState {
        let d2 = self.op.dims.d2;
        PureState::new((0..self.op.dims.total()).map(|i| self.psi[(i / d2, i % d2)]).collect())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DiagonalizeOptions {
    /// Eigenphase gaps below this flag the spectrum as degenerate.
    pub degeneracy_tol: f64,
    /// Neighbouring eigenvalues of `(U + U†)/2` closer than this are resolved
    /// together against `(U - U†)/2i`.
    pub cluster_tol: f64,
    pub dense_cap: usize,
}

impl Default for DiagonalizeOptions {
    fn default() -> Self {
        DiagonalizeOptions {
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
            cluster_tol: 1e-6,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

/// Eigenphases in `(-π, π]` (ascending) with the matching orthonormal
/// eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub dims: Dims,
    pub phases: Vec<f64>,
    pub vectors: CMat,
    pub min_gap: f64,
    pub degeneracy_tol: f64,
    /// `max_i ‖U e_i − e^{iφ_i} e_i‖`.
    pub max_residual: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.min_gap < self.degeneracy_tol
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.col(i).iter().copied().collect()
    }

    /// `⟨e_i|ψ⟩` for every eigenvector.
    pub fn coefficients(&self, state: &PureState) -> Result<Vec<C64>> {
        self.dims.check(state.dim())?;
        let amps = state.amplitudes();
        Ok((0..self.len())
            .map(|i| self.vectors.col(i).iter().zip(amps).map(|(v, a)| v.conj() * a).sum())
            .collect())
    }

    /// `Σ_i e^{inφ_i} c_i |e_i⟩`.
    pub fn propagate(&self, coefficients: &[C64], kicks: u64) -> PureState {
        let rotated: Vec<C64> = coefficients
            .iter()
            .zip(&self.phases)
            .map(|(c, &phi)| c * C64::from_polar(1.0, kicks as f64 * phi))
            .collect();
        PureState::new(linalg::mat_vec(self.vectors.as_ref(), &rotated))
    }

    /// The states at several kick counts, one column each.
    pub fn propagate_many(&self, coefficients: &[C64], kicks: &[u64]) -> CMat {
        let rotated = Mat::from_fn(self.len(), kicks.len(), |i, t| {
            coefficients[i] * C64::from_polar(1.0, kicks[t] as f64 * self.phases[i])
        });
        &self.vectors * &rotated
    }

    pub fn evolve(&self, state: &PureState, kicks: u64) -> Result<PureState> {
        Ok(self.propagate(&self.coefficients(state)?, kicks))
    }
}

/// Smallest spacing between sorted phases on the unit circle.
pub fn min_circular_gap(sorted_phases: &[f64]) -> f64 {
    if sorted_phases.len() < 2 {
        return f64::INFINITY;
    }
    let mut gap = sorted_phases[0] + 2.0 * PI - sorted_phases[sorted_phases.len() - 1];
    for w in sorted_phases.windows(2) {
        gap = gap.min(w[1] - w[0]);
    }
    gap
}

/// Eigendecomposition of the unitary through the commuting Hermitian pair
/// `A = (U + U†)/2`, `B = (U - U†)/2i`.
///
/// `A` separates eigenvalues by `cos φ`; vectors sharing a cluster of nearly
/// equal `cos φ` (typically `±φ`, or phases near `0` and `π` where `cos` is
/// flat) are re-diagonalized against `B` inside that cluster. The result is
/// orthonormal to working precision.
pub fn diagonalize(op: &FloquetOperator, opts: &DiagonalizeOptions) -> Result<Spectrum> {
    let n = op.dims.total();
    if n > opts.dense_cap {
        return Err(Error::Resource(format!(
            "dense diagonalization of dimension {n} exceeds the cap {}",
            opts.dense_cap
        )));
    }
    let u = op.full_matrix();
    diagonalize_unitary(u.as_ref(), op.dims, opts)
}

pub fn diagonalize_unitary(u: MatRef<'_, C64>, dims: Dims, opts: &DiagonalizeOptions) -> Result<Spectrum> {
    let n = u.nrows();
    let half = C64::new(0.5, 0.0);
    let re_part = Mat::from_fn(n, n, |i, k| (u[(i, k)] + u[(k, i)].conj()) * half);
    let (cosines, mut vectors) = linalg::hermitian_eigen(re_part.as_ref())?;
    drop(re_part);

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && cosines[end] - cosines[end - 1] < opts.cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            let block = vectors.subcols(start, end - start).to_owned();
            let ub = u * &block;
            let uhb = u.adjoint() * &block;
            let im_b = Mat::from_fn(n, end - start, |i, k| (ub[(i, k)] - uhb[(i, k)]) * C64::new(0.0, -0.5));
            let small = block.adjoint() * &im_b;
            let small = Mat::from_fn(small.nrows(), small.ncols(), |i, k| (small[(i, k)] + small[(k, i)].conj()) * half);
            let (_, w) = linalg::hermitian_eigen(small.as_ref())?;
            let rotated = &block * &w;
            vectors.subcols_mut(start, end - start).copy_from(&rotated);
        }
        start = end;
    }

    // Fix each vector's phase: largest-magnitude amplitude real positive.
    for j in 0..n {
        let col = vectors.col_mut(j);
        let (mut best, mut best_abs) = (0, -1.0);
        for (i, x) in col.as_ref().iter().enumerate() {
            if x.norm() > best_abs + 1e-12 {
                best = i;
                best_abs = x.norm();
            }
        }
        let phase = col[best].conj() / col[best].norm();
        for x in col.iter_mut() {
            *x *= phase;
        }
    }

    let uv = u * &vectors;
    let mut eig: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut max_residual = 0.0f64;
    for j in 0..n {
        let lambda: C64 = vectors.col(j).iter().zip(uv.col(j).iter()).map(|(v, w)| v.conj() * w).sum();
        let mut phi = lambda.arg();
        if phi <= -PI {
            phi = PI;
        }
        let lam = C64::from_polar(1.0, phi);
        let res: f64 = vectors
            .col(j)
            .iter()
            .zip(uv.col(j).iter())
            .map(|(v, w)| (w - lam * v).norm_sqr())
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(res);
        eig.push((phi, j));
    }
    if max_residual > 1e-6 {
        return Err(Error::Convergence(format!("eigen-residual {max_residual:e} after diagonalization")));
    }
    eig.sort_by(|a, b| a.0.total_cmp(&b.0));
    let phases: Vec<f64> = eig.iter().map(|e| e.0).collect();
    let sorted = Mat::from_fn(n, n, |i, k| vectors[(i, eig[k].1)]);
    let min_gap = min_circular_gap(&phases);
    if min_gap < opts.degeneracy_tol {
        log::warn!("spectrum is degenerate: minimal eigenphase gap {min_gap:e}");
    }
    Ok(Spectrum {
        dims,
        phases,
        vectors: sorted,
        min_gap,
        degeneracy_tol: opts.degeneracy_tol,
        max_residual,
    })
}

/// `J_z(n) = U†ⁿ J_z Uⁿ` for the uncoupled top.
pub fn heisenberg_jz(params: &TopParams, kicks: usize) -> CMat {
    let ops = SpinOperators::new(params.spin);
    let u = single_top_unitary_from(&ops, params);
    conjugate_repeatedly(ops.jz.as_ref(), u.as_ref(), kicks)
}

/// `J_z(0), J_z(1), ..., J_z(horizon)` by successive conjugation.
pub fn heisenberg_jz_sequence(params: &TopParams, horizon: usize) -> Vec<CMat> {
    let ops = SpinOperators::new(params.spin);
    let u = single_top_unitary_from(&ops, params);
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(ops.jz.clone());
    for n in 0..horizon {
        let next = u.adjoint() * &out[n] * &u;
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::linear_entropy_of_amplitudes;
    use crate::linalg::{hermiticity_defect, identity, max_abs_diff, unitarity_defect};
    use crate::states::{sample_haar_state, sample_su2_product};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spin(j: f64) -> SpinQuantum {
        SpinQuantum::new(j).unwrap()
    }

    fn coupled(j1: f64, j2: f64, k: f64, eps: f64) -> FloquetOperator {
        build_coupled_step(&CoupledParams::symmetric(spin(j1), spin(j2), k, eps).unwrap()).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(TopParams::new(spin(1.0), -1.0).is_err());
        assert!(TopParams::new(spin(1.0), f64::NAN).is_err());
        let t = TopParams::new(spin(1.0), 1.0).unwrap();
        assert!(CoupledParams::new(t, t, -0.1, CouplingScale::Geometric).is_err());
    }

    #[test]
    fn unkicked_top_has_period_four() {
        for (j, sign) in [(1.0, 1.0), (2.5, -1.0), (3.0, 1.0)] {
            let u = build_single_top_unitary(&TopParams::new(spin(j), 0.0).unwrap());
            let u4 = &u * &u * &u * &u;
            let target = identity(u.nrows()) * faer::Scale(C64::new(sign, 0.0));
            assert!(max_abs_diff(u4.as_ref(), target.as_ref()) < 1e-10, "j={j}");
        }
    }

    #[test]
    fn single_top_unitary_and_determinant() {
        for k in [0.0, 0.7, 3.0, 6.0] {
            let u = build_single_top_unitary(&TopParams::new(spin(4.5), k).unwrap());
            assert!(unitarity_defect(u.as_ref()) < 1e-10);
            let det = u.as_ref().determinant();
            assert!((det.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn spin_half_kick_phases() {
        // k m² / 2j with m = ±1/2, j = 1/2, k = 2 → 0.5 for both entries.
        let phases = kick_phases(&TopParams::new(spin(0.5), 2.0).unwrap());
        for p in phases {
            assert!((p - C64::from_polar(1.0, -0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn uncoupled_step_is_a_tensor_product() {
        let op = coupled(1.0, 1.5, 2.0, 0.0);
        let local = linalg::kron(op.first_factor(), op.second_factor());
        assert!(max_abs_diff(op.full_matrix().as_ref(), local.as_ref()) < 1e-15);
    }

    #[test]
    fn paper_dimensions_and_unitarity() {
        let op = coupled(19.5, 20.0, 6.0, 0.01);
        assert_eq!(op.dims().total(), 1640);
        assert!(unitarity_defect(op.full_matrix().as_ref()) < 1e-9);
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let params = CoupledParams::symmetric(spin(19.5), spin(20.0), 1.0, 0.01).unwrap();
        assert!(matches!(build_coupled_step_capped(&params, 1000), Err(Error::Resource(_))));
        let op = build_coupled_step(&params).unwrap();
        let opts = DiagonalizeOptions { dense_cap: 100, ..Default::default() };
        assert!(matches!(op.diagonalize(&opts), Err(Error::Resource(_))));
    }

    #[test]
    fn factored_and_full_paths_agree() {
        let op = coupled(2.0, 1.5, 3.0, 0.3);
        let full = op.full_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let psi = sample_haar_state(op.dims().total(), &mut rng);
            let a = op.evolve(&psi, 1).unwrap();
            let b = linalg::mat_vec(full.as_ref(), psi.amplitudes());
            let diff = a.amplitudes().iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-10);
        }
    }

    #[test]
    fn zero_kicks_is_identity_and_dimension_checked() {
        let op = coupled(1.0, 1.0, 1.0, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = sample_haar_state(9, &mut rng);
        assert_eq!(op.evolve(&psi, 0).unwrap(), psi);
        assert!(op.evolve(&sample_haar_state(8, &mut rng), 1).is_err());
    }

    #[test]
    fn norm_preserved_over_many_kicks() {
        let op = coupled(2.5, 3.0, 6.0, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi = sample_haar_state(op.dims().total(), &mut rng);
        let mut prop = Propagator::new(&op, &psi).unwrap();
        prop.advance(100_000);
        assert!((prop.norm_sqr().sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uncoupled_dynamics_keeps_products() {
        let op = coupled(3.0, 3.5, 4.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = sample_su2_product(spin(3.0), spin(3.5), &mut rng).flatten();
        let mut prop = Propagator::new(&op, &psi).unwrap();
        for _ in 0..200 {
            prop.step();
            assert!(prop.linear_entropy() < 1e-10);
        }
    }

    #[test]
    fn eigenbasis_and_direct_evolution_agree() {
        let op = coupled(1.0, 1.5, 3.0, 0.1);
        let spec = op.diagonalize(&DiagonalizeOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let psi = sample_haar_state(op.dims().total(), &mut rng);
        let direct = op.evolve(&psi, 100).unwrap();
        let spectral = spec.evolve(&psi, 100).unwrap();
        let diff = direct
            .amplitudes()
            .iter()
            .zip(spectral.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn spectrum_is_orthonormal_with_small_residuals() {
        let op = coupled(2.0, 2.5, 2.0, 0.2);
        let spec = op.diagonalize(&DiagonalizeOptions::default()).unwrap();
        let gram = spec.vectors.adjoint() * &spec.vectors;
        assert!(max_abs_diff(gram.as_ref(), identity(spec.len()).as_ref()) < 1e-8);
        assert!(spec.max_residual < 1e-8);
        assert!(spec.phases.iter().all(|&p| p > -PI && p <= PI));
        assert!(spec.phases.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn uncoupled_eigenvectors_are_products() {
        let op = coupled(2.0, 2.5, 6.0, 0.0);
        let spec = op.diagonalize(&DiagonalizeOptions::default()).unwrap();
        assert!(!spec.is_degenerate(), "gap {}", spec.min_gap);
        for i in 0..spec.len() {
            let s = linear_entropy_of_amplitudes(&spec.vector(i), op.dims()).unwrap();
            assert!(s < 1e-8, "eigenvector {i}: {s}");
        }
    }

    #[test]
    fn exact_degeneracy_is_flagged() {
        // Equal spins at ε = 0: swapping the tops gives degenerate pairs.
        let op = coupled(1.5, 1.5, 3.0, 0.0);
        let spec = op.diagonalize(&DiagonalizeOptions::default()).unwrap();
        assert!(spec.is_degenerate());
    }

    #[test]
    fn heisenberg_first_kick() {
        let params = TopParams::new(spin(3.0), 2.2).unwrap();
        let jz0 = heisenberg_jz(&params, 0);
        let ops = SpinOperators::new(spin(3.0));
        assert!(max_abs_diff(jz0.as_ref(), ops.jz.as_ref()) < 1e-15);
        let jz1 = heisenberg_jz(&params, 1);
        let minus_jx = &ops.jx * faer::Scale(C64::new(-1.0, 0.0));
        assert!(max_abs_diff(jz1.as_ref(), minus_jx.as_ref()) < 1e-9);
        let seq = heisenberg_jz_sequence(&params, 6);
        for (n, m) in seq.iter().enumerate() {
            assert!(hermiticity_defect(m.as_ref()) < 1e-10);
            assert!(max_abs_diff(m.as_ref(), heisenberg_jz(&params, n).as_ref()) < 1e-12);
        }
    }

    #[test]
    fn heisenberg_jx_closed_form() {
        // J_x' = ½ (J_z + iJ_y) exp(-i(k/j)(J_x - 1/2)) + h.c. at j = 1, k = 3.
        let (j, k) = (1.0, 3.0);
        let params = TopParams::new(spin(j), k).unwrap();
        let ops = SpinOperators::new(spin(j));
        let u = build_single_top_unitary(&params);
        let conjugated = conjugate_repeatedly(ops.jx.as_ref(), u.as_ref(), 1);

        let shifted = &ops.jx - identity(3) * faer::Scale(C64::new(0.5, 0.0));
        let expo = linalg::unitary_exp(shifted.as_ref(), k / j).unwrap();
        let front = (&ops.jz + &ops.jy * faer::Scale(C64::new(0.0, 1.0))) * faer::Scale(C64::new(0.5, 0.0));
        let half = &front * &expo;
        let closed = &half + linalg::adjoint(half.as_ref());
        assert!(max_abs_diff(conjugated.as_ref(), closed.as_ref()) < 1e-8);
    }

    #[test]
    fn circular_gap_wraps_around() {
        let g = min_circular_gap(&[-PI + 0.01, 0.0, PI - 0.005]);
        assert!((g - 0.015).abs() < 1e-12);
        assert_eq!(min_circular_gap(&[0.3]), f64::INFINITY);
    }
}
