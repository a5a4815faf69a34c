//! Eigenvector entanglement and the long-time behaviour of the linear entropy.
//!
//! With `|ψ(n)⟩ = Σ_i e^{inφ_i} c_i |e_i⟩` and a nondegenerate spectrum, the
//! time average of `S_L(ψ(n))` keeps only the phase-free terms:
//!
//! ```text
//! S_asymp = 1 − Σ_{ij} p_i p_j Tr(ρ_i ρ_j) − Σ_{i≠j} p_i p_j Tr(R_ij R_ji)
//! ```
//!
//! with `p_i = |c_i|²`, `ρ_i = Tr₂|e_i⟩⟨e_i|` and `R_ij = Tr₂|e_i⟩⟨e_j|`.
//! Writing `C_i` for the amplitude matrix of `e_i`, `Tr(R_ij R_ji) =
//! Tr(σ_i σ_j)` with `σ_i = C_i† C_i`, so both sums collapse to Frobenius
//! norms of the dephased reductions `ρ̄ = Σ p_i ρ_i` and `σ̄ = Σ p_i σ_i`.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use rayon::prelude::*;

use crate::entanglement::{amplitude_matrix, cross_reduction, linear_entropy_of_amplitudes, Dims};
use crate::floquet::{FloquetOperator, Propagator, Spectrum};
use crate::linalg::CMat;
use crate::states::PureState;
use crate::{Error, Result, C64};

/// Largest product dimension accepted by [`asymptotic_entropy`] by default.
pub const DEFAULT_CLOSED_FORM_CAP: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenEntry {
    pub index: usize,
    pub phase: f64,
    pub linear_entropy: f64,
}

#[derive(Clone, Debug)]
pub struct EigenEntanglementReport {
    pub per_eigenvector: Vec<EigenEntry>,
    pub mean: f64,
    pub min_gap: f64,
    pub tolerance: f64,
    /// Set when the spectrum is degenerate: the numbers are then advisory,
    /// since the eigenbasis inside a degenerate block is arbitrary.
    pub degenerate: bool,
}

impl EigenEntanglementReport {
    pub fn trusted(&self) -> bool {
        !self.degenerate
    }
}

pub fn eigenvector_entanglement(spectrum: &Spectrum) -> EigenEntanglementReport {
    let dims = spectrum.dims;
    let per_eigenvector: Vec<EigenEntry> = (0..spectrum.len())
        .into_par_iter()
        .map(|i| EigenEntry {
            index: i,
            phase: spectrum.phases[i],
            linear_entropy: linear_entropy_of_amplitudes(&spectrum.vector(i), dims)
                .expect("eigenvector length matches the spectrum dimensions"),
        })
        .collect();
    let mean = if per_eigenvector.is_empty() {
        0.0
    } else {
        per_eigenvector.iter().map(|e| e.linear_entropy).sum::<f64>() / per_eigenvector.len() as f64
    };
    let degenerate = spectrum.is_degenerate();
    if degenerate {
        log::warn!(
            "eigenvector entanglement on a degenerate spectrum (gap {:e}); report is advisory",
            spectrum.min_gap
        );
    }
    EigenEntanglementReport {
        per_eigenvector,
        mean,
        min_gap: spectrum.min_gap,
        tolerance: spectrum.degeneracy_tol,
        degenerate,
    }
}

/// `2 S̄_eigen − 1`, refused for degenerate spectra.
pub fn asymptotic_lower_bound(report: &EigenEntanglementReport) -> Result<f64> {
    if report.degenerate {
        return Err(Error::Degenerate { min_gap: report.min_gap, tolerance: report.tolerance });
    }
    Ok(2.0 * report.mean - 1.0)
}

pub fn lower_bound_from_mean(mean_eigen: f64) -> f64 {
    2.0 * mean_eigen - 1.0
}

/// Dephased reductions `ρ̄ = Σ p_i C_i C_i†`, `σ̄ = Σ p_i C_i† C_i` and
/// `Σ p_i² Tr ρ_i²`.
fn dephased_reductions(spectrum: &Spectrum, weights: &[f64]) -> (CMat, CMat, f64) {
    let dims = spectrum.dims;
    let (d1, d2) = (dims.d1, dims.d2);
    let mut rho = Mat::<C64>::zeros(d1, d1);
    let mut sigma = Mat::<C64>::zeros(d2, d2);
    let mut rho_i = Mat::<C64>::zeros(d1, d1);
    let mut diag = 0.0;
    for (i, &p) in weights.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let c = amplitude_matrix(&spectrum.vector(i), dims).expect("eigenvector dimension");
        let w = C64::new(p, 0.0);
        matmul(rho_i.as_mut(), Accum::Replace, c.as_ref(), c.adjoint(), C64::new(1.0, 0.0), Par::Seq);
        let purity: f64 = (0..d1).flat_map(|b| (0..d1).map(move |a| (a, b))).map(|(a, b)| rho_i[(a, b)].norm_sqr()).sum();
        diag += p * p * purity;
        for b in 0..d1 {
            for a in 0..d1 {
                rho[(a, b)] += w * rho_i[(a, b)];
            }
        }
        matmul(sigma.as_mut(), Accum::Add, c.adjoint(), c.as_ref(), w, Par::Seq);
    }
    (rho, sigma, diag)
}

fn frobenius_sqr(a: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for x in a.col(j).iter() {
            s += x.norm_sqr();
        }
    }
    s
}

/// Infinite-time average of the linear entropy from the spectrum, assuming
/// nondegenerate phases and phase gaps.
pub fn asymptotic_entropy(spectrum: &Spectrum, psi: &PureState) -> Result<f64> {
    asymptotic_entropy_capped(spectrum, psi, DEFAULT_CLOSED_FORM_CAP)
}

pub fn asymptotic_entropy_capped(spectrum: &Spectrum, psi: &PureState, cap: usize) -> Result<f64> {
    let n = spectrum.dims.total();
    if n > cap {
        return Err(Error::Resource(format!(
            "closed-form asymptotics at dimension {n} exceed the cap {cap}; use the time-average path"
        )));
    }
    if spectrum.is_degenerate() {
        return Err(Error::Degenerate { min_gap: spectrum.min_gap, tolerance: spectrum.degeneracy_tol });
    }
    let weights: Vec<f64> = spectrum.coefficients(psi)?.iter().map(|c| c.norm_sqr()).collect();
    let (rho, sigma, diag) = dephased_reductions(spectrum, &weights);
    Ok(1.0 - frobenius_sqr(&rho) - frobenius_sqr(&sigma) + diag)
}

/// Phase gaps closer than this (on the circle) are treated as equal.
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-8;

/// Groups of index pairs `(i, j)` whose gaps `φ_i − φ_j` coincide modulo `2π`.
pub fn gap_classes(phases: &[f64], tol: f64) -> Vec<Vec<(usize, usize)>> {
    use std::f64::consts::TAU;
    let n = phases.len();
    let mut gaps: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            gaps.push(((phases[i] - phases[j]).rem_euclid(TAU), i, j));
        }
    }
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut classes: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (g, i, j) in gaps {
        if g - last > tol || classes.is_empty() {
            classes.push(Vec::new());
        }
        classes.last_mut().unwrap().push((i, j));
        last = g;
    }
    // Gaps just below 2π belong with those near 0.
    if classes.len() > 1 {
        let (first_gap, last_gap) = {
            let f = classes[0][0];
            let l = *classes.last().unwrap().last().unwrap();
            (
                (phases[f.0] - phases[f.1]).rem_euclid(TAU),
                (phases[l.0] - phases[l.1]).rem_euclid(TAU),
            )
        };
        if first_gap + TAU - last_gap <= tol {
            let tail = classes.pop().unwrap();
            classes[0].extend(tail);
        }
    }
    classes
}

/// Number of coincidences between distinct off-diagonal gaps, i.e. pairs
/// `(i, j) ≠ (k, l)`, `i ≠ j`, with `φ_i − φ_j ≡ φ_k − φ_l`.
pub fn gap_coincidences(phases: &[f64], tol: f64) -> usize {
    gap_classes(phases, tol)
        .iter()
        .map(|c| c.iter().filter(|(i, j)| i != j).count())
        .filter(|&m| m > 1)
        .map(|m| m - 1)
        .sum()
}

/// Exact infinite-time average of the linear entropy for any spectrum.
///
/// The reduction oscillates as `ρ₁(n) = Σ_ω e^{inω} M_ω` with
/// `M_ω = Σ_{φ_i−φ_j=ω} c_i c_j* Tr₂|e_i⟩⟨e_j|`, so the mean purity is
/// `Σ_ω ‖M_ω‖²_F`. Without coincident gaps this reduces to
/// [`asymptotic_entropy`]; with them (the kicked-top spectra come in pairs
/// shifted by `π/2` or `π`) the extra resonant terms are kept.
pub fn asymptotic_entropy_resonant(spectrum: &Spectrum, psi: &PureState, tol: f64, cap: usize) -> Result<f64> {
    let n = spectrum.dims.total();
    if n > cap {
        return Err(Error::Resource(format!(
            "gap-resolved asymptotics at dimension {n} exceed the cap {cap}; use the time-average path"
        )));
    }
    let dims = spectrum.dims;
    let coefficients = spectrum.coefficients(psi)?;
    let mats: Vec<CMat> = (0..n)
        .map(|i| {
            let c = amplitude_matrix(&spectrum.vector(i), dims).expect("eigenvector dimension");
            c * faer::Scale(coefficients[i])
        })
        .collect();
    let purity: f64 = gap_classes(&spectrum.phases, tol)
        .par_iter()
        .map(|class| {
            let mut m = Mat::<C64>::zeros(dims.d1, dims.d1);
            for &(i, j) in class {
                matmul(m.as_mut(), Accum::Add, mats[i].as_ref(), mats[j].adjoint(), C64::new(1.0, 0.0), Par::Seq);
            }
            frobenius_sqr(&m)
        })
        .sum();
    Ok(1.0 - purity)
}

/// Linear entropy of the reduction of the time-averaged (fully dephased)
/// state `Σ p_i |e_i⟩⟨e_i|` — not the same thing as the time-averaged
/// entropy.
pub fn entropy_of_time_averaged_state(spectrum: &Spectrum, psi: &PureState) -> Result<f64> {
    let weights: Vec<f64> = spectrum.coefficients(psi)?.iter().map(|c| c.norm_sqr()).collect();
    let (rho, _, _) = dephased_reductions(spectrum, &weights);
    Ok((1.0 - frobenius_sqr(&rho)).clamp(0.0, 1.0))
}

/// Brute-force mean of `S_L(ψ(n))` over `n ∈ [start, end]`, kick by kick.
pub fn time_averaged_entropy(op: &FloquetOperator, psi: &PureState, start: u64, end: u64) -> Result<f64> {
    if start > end {
        return Err(Error::Parameter(format!("empty averaging window [{start}, {end}]")));
    }
    let mut prop = Propagator::new(op, psi)?;
    prop.advance(start);
    let mut total = prop.linear_entropy();
    for _ in start..end {
        prop.step();
        total += prop.linear_entropy();
    }
    Ok(total / (end - start + 1) as f64)
}

/// `samples` kick counts evenly spread over `[start, end]` (both included).
pub fn window_kicks(start: u64, end: u64, samples: usize) -> Vec<u64> {
    match samples {
        0 => Vec::new(),
        1 => vec![(start + end) / 2],
        s => (0..s)
            .map(|i| start + ((end - start) as f64 * i as f64 / (s - 1) as f64).round() as u64)
            .collect(),
    }
}

/// Mean linear entropy at the given kicks, propagated through the spectrum.
pub fn sampled_window_entropy(spectrum: &Spectrum, psi: &PureState, kicks: &[u64]) -> Result<f64> {
    if kicks.is_empty() {
        return Err(Error::Parameter("no sample kicks in the averaging window".into()));
    }
    let coefficients = spectrum.coefficients(psi)?;
    let states = spectrum.propagate_many(&coefficients, kicks);
    let dims = spectrum.dims;
    let mut total = 0.0;
    let mut column = vec![C64::new(0.0, 0.0); dims.total()];
    for t in 0..kicks.len() {
        for (dst, x) in column.iter_mut().zip(states.col(t).iter()) {
            *dst = *x;
        }
        total += linear_entropy_of_amplitudes(&column, dims)?;
    }
    Ok(total / kicks.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityReport {
    /// `2 Tr(R_ij R_ji)`.
    pub cross_lhs: f64,
    /// `2 Tr(ρ_i ρ_j)`.
    pub product_lhs: f64,
    /// `Tr ρ_i² + Tr ρ_j²`.
    pub rhs: f64,
    pub cross_margin: f64,
    pub product_margin: f64,
}

impl InequalityReport {
    pub fn violated(&self, tol: f64) -> bool {
        self.cross_margin < -tol || self.product_margin < -tol
    }
}

pub fn check_cross_inequalities(a: &PureState, b: &PureState, dims: Dims) -> Result<InequalityReport> {
    let rho_a = cross_reduction(a.amplitudes(), a.amplitudes(), dims)?;
    let rho_b = cross_reduction(b.amplitudes(), b.amplitudes(), dims)?;
    let r_ab = cross_reduction(a.amplitudes(), b.amplitudes(), dims)?;
    let r_ba = cross_reduction(b.amplitudes(), a.amplitudes(), dims)?;
    let trace_prod = |x: &CMat, y: &CMat| crate::linalg::trace((x * y).as_ref()).re;
    let cross_lhs = 2.0 * trace_prod(&r_ab, &r_ba);
    let product_lhs = 2.0 * trace_prod(&rho_a, &rho_b);
    let rhs = trace_prod(&rho_a, &rho_a) + trace_prod(&rho_b, &rho_b);
    Ok(InequalityReport {
        cross_lhs,
        product_lhs,
        rhs,
        cross_margin: rhs - cross_lhs,
        product_margin: rhs - product_lhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{build_coupled_step, CoupledParams, DiagonalizeOptions};
    use crate::spin::SpinQuantum;
    use crate::states::{sample_haar_state, sample_su2_product};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spin(j: f64) -> SpinQuantum {
        SpinQuantum::new(j).unwrap()
    }

    fn op(j1: f64, j2: f64, k: f64, eps: f64) -> FloquetOperator {
        build_coupled_step(&CoupledParams::symmetric(spin(j1), spin(j2), k, eps).unwrap()).unwrap()
    }

    /// Literal double sum over eigenvector pairs.
    fn asymptotic_by_pairs(spec: &Spectrum, psi: &PureState) -> f64 {
        let dims = spec.dims;
        let p: Vec<f64> = spec.coefficients(psi).unwrap().iter().map(|c| c.norm_sqr()).collect();
        let vecs: Vec<Vec<C64>> = (0..spec.len()).map(|i| spec.vector(i)).collect();
        let mut s = 1.0;
        for i in 0..spec.len() {
            for j in 0..spec.len() {
                let rho_i = cross_reduction(&vecs[i], &vecs[i], dims).unwrap();
                let rho_j = cross_reduction(&vecs[j], &vecs[j], dims).unwrap();
                s -= p[i] * p[j] * crate::linalg::trace((&rho_i * &rho_j).as_ref()).re;
                if i != j {
                    let r_ij = cross_reduction(&vecs[i], &vecs[j], dims).unwrap();
                    let r_ji = cross_reduction(&vecs[j], &vecs[i], dims).unwrap();
                    s -= p[i] * p[j] * crate::linalg::trace((&r_ij * &r_ji).as_ref()).re;
                }
            }
        }
        s
    }

    #[test]
    fn closed_form_matches_the_pairwise_sum() {
        let u = op(1.0, 1.5, 3.0, 0.1);
        let spec = u.diagonalize(&DiagonalizeOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let psi = sample_haar_state(12, &mut rng);
            let fast = asymptotic_entropy(&spec, &psi).unwrap();
            let slow = asymptotic_by_pairs(&spec, &psi);
            assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }

    #[test]
    fn eigenvector_input_is_stationary() {
        let u = op(1.0, 1.5, 3.0, 0.1);
        let spec = u.diagonalize(&DiagonalizeOptions::default()).unwrap();
        let report = eigenvector_entanglement(&spec);
        for i in [0, 5, 11] {
            let psi = PureState::new(spec.vector(i));
            let s = asymptotic_entropy(&spec, &psi).unwrap();
            assert!((s - report.per_eigenvector[i].linear_entropy).abs() < 1e-10);
        }
    }

    #[test]
    fn uncoupled_product_eigenvector_stays_unentangled() {
        let u = op(1.0, 1.5, 6.0, 0.0);
        let spec = u.diagonalize(&DiagonalizeOptions::default()).unwrap();
        assert!(!spec.is_degenerate());
        let report = eigenvector_entanglement(&spec);
        assert!(report.mean < 1e-8);
        let psi = PureState::new(spec.vector(2));
        assert!(asymptotic_entropy(&spec, &psi).unwrap().abs() < 1e-10);
    }

    #[test]
    fn closed_form_tracks_the_time_average() {
        // Some gap differences at these parameters are ~4e-5, so the window
        // must span several beat periods.
        let u = op(1.0, 1.5, 3.0, 0.1);
        let spec = u.diagonalize(&DiagonalizeOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = sample_haar_state(12, &mut rng);
        let closed = asymptotic_entropy(&spec, &psi).unwrap();
        let resonant = asymptotic_entropy_resonant(&spec, &psi, DEFAULT_RESONANCE_TOL, 256).unwrap();
        let averaged = time_averaged_entropy(&u, &psi, 100_000, 400_000).unwrap();
        assert!((closed - averaged).abs() < 2e-3, "{closed} vs {averaged}");
        assert!((resonant - averaged).abs() < 2e-3, "{resonant} vs {averaged}");
        let sampled = sampled_window_entropy(&spec, &psi, &window_kicks(100_000, 400_000, 20_000)).unwrap();
        assert!((averaged - sampled).abs() < 5e-3, "{averaged} vs {sampled}");
    }

    #[test]
    fn kicked_top_spectra_have_coincident_gaps() {
        // j₁ + j₂ half-integer: eigenphases pair up at a distance π/2.
        let spec = op(1.0, 1.5, 3.0, 0.1).diagonalize(&DiagonalizeOptions::default()).unwrap();
        assert!(gap_coincidences(&spec.phases, DEFAULT_RESONANCE_TOL) > 0);
        let generic = [0.1, 0.37, 1.9, -2.2];
        assert_eq!(gap_coincidences(&generic, DEFAULT_RESONANCE_TOL), 0);
        let classes = gap_classes(&generic, DEFAULT_RESONANCE_TOL);
        assert_eq!(classes.len(), 1 + 12);
        assert_eq!(classes[0].len(), 4);
    }

    #[test]
    fn gap_classes_merge_across_the_branch_cut() {
        use std::f64::consts::TAU;
        // φ₀ − φ₁ reduces to just below 2π and must join the zero-gap class.
        let phases = [3.0, 3.0 - TAU + 1e-10, 1.0 + 1e-10, 1.0];
        let classes = gap_classes(&phases, 1e-8);
        let mut sizes: Vec<usize> = classes.iter().map(|c| c.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![4, 4, 8]);
        let zero = classes.iter().find(|c| c.contains(&(0, 0))).unwrap();
        assert_eq!(zero.len(), 8);
    }

    #[test]
    fn resonant_form_reduces_to_the_literal_one_without_coincidences() {
        // Generic random unitary: no coincident gaps.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let v = crate::states::sample_haar_unitary(12, &mut rng);
        let spec = crate::floquet::diagonalize_unitary(v.as_ref(), Dims::new(3, 4), &DiagonalizeOptions::default()).unwrap();
        assert_eq!(gap_coincidences(&spec.phases, DEFAULT_RESONANCE_TOL), 0);
        let psi = sample_haar_state(12, &mut rng);
        let a = asymptotic_entropy(&spec, &psi).unwrap();
        let b = asymptotic_entropy_resonant(&spec, &psi, DEFAULT_RESONANCE_TOL, 256).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn resonant_form_handles_exact_degeneracy() {
        // Equal spins at ε = 0 are degenerate; the gap-resolved form still
        // gives the time average.
        let u = op(1.0, 1.0, 3.0, 0.0);
        let spec = u.diagonalize(&DiagonalizeOptions::default()).unwrap();
        assert!(spec.is_degenerate());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = sample_haar_state(9, &mut rng);
        let r = asymptotic_entropy_resonant(&spec, &psi, DEFAULT_RESONANCE_TOL, 256).unwrap();
        let t = time_averaged_entropy(&u, &psi, 0, 200_000).unwrap();
        assert!((r - t).abs() < 5e-3, "{r} vs {t}");
    }

    #[test]
    fn averaged_state_entropy_differs() {
        let u = op(1.0, 1.5, 3.0, 0.1);
        let spec = u.diagonalize(&DiagonalizeOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = sample_su2_product(spin(1.0), spin(1.5), &mut rng).flatten();
        let a = asymptotic_entropy(&spec, &psi).unwrap();
        let b = entropy_of_time_averaged_state(&spec, &psi).unwrap();
        assert!((a - b).abs() > 1e-3, "{a} vs {b}");
    }

    #[test]
    fn cap_and_degeneracy_are_refused() {
        let u = op(1.0, 1.5, 3.0, 0.1);
        let spec = u.diagonalize(&DiagonalizeOptions::default()).unwrap();
        let psi = PureState::basis(12, 0);
        assert!(matches!(asymptotic_entropy_capped(&spec, &psi, 10), Err(Error::Resource(_))));

        let deg = op(1.5, 1.5, 3.0, 0.0).diagonalize(&DiagonalizeOptions::default()).unwrap();
        let report = eigenvector_entanglement(&deg);
        assert!(report.degenerate);
        assert!(asymptotic_lower_bound(&report).is_err());
        assert!(asymptotic_entropy(&deg, &PureState::basis(16, 0)).is_err());
    }

    #[test]
    fn lower_bound_arithmetic() {
        assert_eq!(lower_bound_from_mean(0.5), 0.0);
        assert!((lower_bound_from_mean(0.975) - 0.95).abs() < 1e-15);
    }

    #[test]
    fn inequality_special_cases() {
        let dims = Dims::new(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = sample_haar_state(4, &mut rng);
        let same = check_cross_inequalities(&psi, &psi, dims).unwrap();
        assert!(same.cross_margin.abs() < 1e-12 && same.product_margin.abs() < 1e-12);

        let r = check_cross_inequalities(&PureState::basis(4, 0), &PureState::basis(4, 3), dims).unwrap();
        assert!(r.cross_lhs.abs() < 1e-15 && r.product_lhs.abs() < 1e-15);
        assert!((r.rhs - 2.0).abs() < 1e-15);
    }

    #[test]
    fn window_sampling_endpoints() {
        assert_eq!(window_kicks(10, 20, 3), vec![10, 15, 20]);
        assert_eq!(window_kicks(10, 20, 1), vec![15]);
        assert!(window_kicks(0, 5, 0).is_empty());
    }
}
