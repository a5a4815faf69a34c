//! Weak-coupling growth of the linear entropy from single-top correlations.
//!
//! To second order in the coupling, a product state of two tops kicked `t`
//! times has
//!
//! ```text
//! S(t) ≈ 2 λ² Σ_{n=1..t} Σ_{m=1..t} C₁(n,m) C₂(n,m),   λ = ε j₁ j₂ / j_c,
//! ```
//!
//! where `C_i(n,m) = ⟨ẑ_i(n) ẑ_i(m)⟩ − ⟨ẑ_i(n)⟩⟨ẑ_i(m)⟩` is the covariance of
//! the scaled Heisenberg-picture `ẑ = J_z / j` of the uncoupled top. For the
//! geometric coupling scale `λ² = ε² j₁ j₂`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::floquet::{heisenberg_jz_sequence, CoupledParams, TopParams};
use crate::linalg::{self, CMat};
use crate::states::{EnsembleKind, EnsembleSpec, HaarMethod, PureState};
use crate::{Error, Result, C64};

pub const DEFAULT_HORIZON: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingMode {
    SingleState,
    Su2Ensemble,
    SudEnsemble,
}

/// How the two-time covariance enters the double sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Complex covariances, `D = C₁ C₂`. Over the symmetric double sum the
    /// imaginary parts cancel exactly.
    #[default]
    Covariance,
    /// `Re⟨½{ẑ(n), ẑ(m)}⟩ − ⟨ẑ(n)⟩⟨ẑ(m)⟩` for each top, `D = Re C₁ · Re C₂`.
    SymmetrizedReal,
}

/// Order of ensemble averaging and multiplication.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleProduct {
    #[default]
    AverageOfProducts,
    ProductOfAverages,
}

/// `C₁`, `C₂` and `D` on `0 ≤ n, m ≤ horizon` (row-major, `n * (T+1) + m`).
#[derive(Clone, Debug)]
pub struct CorrelationTable {
    pub horizon: usize,
    pub mode: AveragingMode,
    pub estimator: Estimator,
    pub samples: usize,
    c1: Vec<C64>,
    c2: Vec<C64>,
    d: Vec<C64>,
}

impl CorrelationTable {
    fn idx(&self, n: usize, m: usize) -> usize {
        assert!(n <= self.horizon && m <= self.horizon, "time ({n}, {m}) beyond horizon {}", self.horizon);
        n * (self.horizon + 1) + m
    }

    pub fn c1(&self, n: usize, m: usize) -> C64 {
        self.c1[self.idx(n, m)]
    }

    pub fn c2(&self, n: usize, m: usize) -> C64 {
        self.c2[self.idx(n, m)]
    }

    pub fn d(&self, n: usize, m: usize) -> C64 {
        self.d[self.idx(n, m)]
    }
}

/// Heisenberg-picture `ẑ(n) = J_z(n)/j` for `n = 0..=horizon`.
pub struct ScaledJz {
    ops: Vec<CMat>,
}

impl ScaledJz {
    pub fn new(params: &TopParams, horizon: usize) -> Self {
        let j = params.spin.j();
        let scale = if j == 0.0 { 0.0 } else { 1.0 / j };
        let ops = heisenberg_jz_sequence(params, horizon)
            .into_iter()
            .map(|m| m * faer::Scale(C64::new(scale, 0.0)))
            .collect();
        ScaledJz { ops }
    }

    pub fn horizon(&self) -> usize {
        self.ops.len() - 1
    }

    pub fn op(&self, n: usize) -> &CMat {
        &self.ops[n]
    }

    /// Covariance matrix `C(n,m)` of one state for `0 ≤ n,m ≤ horizon`.
    pub fn covariances(&self, psi: &PureState, estimator: Estimator) -> Vec<C64> {
        let size = self.ops.len();
        let w: Vec<Vec<C64>> = self.ops.iter().map(|z| linalg::mat_vec(z.as_ref(), psi.amplitudes())).collect();
        let mean: Vec<f64> = w.iter().map(|wn| linalg::inner(psi.amplitudes(), wn).re).collect();
        let mut out = vec![C64::new(0.0, 0.0); size * size];
        for n in 0..size {
            for m in 0..size {
                // ⟨ψ|ẑ(n) ẑ(m)|ψ⟩ = ⟨ẑ(n)ψ|ẑ(m)ψ⟩.
                let second = linalg::inner(&w[n], &w[m]);
                let c = second - C64::new(mean[n] * mean[m], 0.0);
                out[n * size + m] = match estimator {
                    Estimator::Covariance => c,
                    Estimator::SymmetrizedReal => C64::new(c.re, 0.0),
                };
            }
        }
        out
    }
}

/// Two-time covariance of `ẑ` in `ψ` for the uncoupled top.
pub fn correlation(params: &TopParams, psi: &PureState, n: usize, m: usize) -> Result<C64> {
    if psi.dim() != params.dim() {
        return Err(Error::Dimension { expected: params.dim(), found: psi.dim() });
    }
    let z = ScaledJz::new(params, n.max(m));
    let size = z.horizon() + 1;
    Ok(z.covariances(psi, Estimator::Covariance)[n * size + m])
}

/// Correlation table for one product state.
pub fn correlation_table_single(
    params: &CoupledParams,
    first: &PureState,
    second: &PureState,
    horizon: usize,
    estimator: Estimator,
) -> Result<CorrelationTable> {
    if first.dim() != params.top1.dim() || second.dim() != params.top2.dim() {
        return Err(Error::Dimension {
            expected: params.top1.dim() * params.top2.dim(),
            found: first.dim() * second.dim(),
        });
    }
    let z1 = ScaledJz::new(&params.top1, horizon);
    let z2 = ScaledJz::new(&params.top2, horizon);
    let c1 = z1.covariances(first, estimator);
    let c2 = z2.covariances(second, estimator);
    let d = c1.iter().zip(&c2).map(|(a, b)| a * b).collect();
    Ok(CorrelationTable { horizon, mode: AveragingMode::SingleState, estimator, samples: 1, c1, c2, d })
}

/// Ensemble-averaged table. `D` is averaged per state unless
/// [`EnsembleProduct::ProductOfAverages`] is requested.
pub fn correlation_table_ensemble(
    params: &CoupledParams,
    ensemble: &EnsembleSpec,
    horizon: usize,
    estimator: Estimator,
    product: EnsembleProduct,
) -> Result<CorrelationTable> {
    let z1 = ScaledJz::new(&params.top1, horizon);
    let z2 = ScaledJz::new(&params.top2, horizon);
    let (s1, s2) = (params.top1.spin, params.top2.spin);
    let size = (horizon + 1) * (horizon + 1);
    let zero = || (vec![C64::new(0.0, 0.0); size], vec![C64::new(0.0, 0.0); size], vec![C64::new(0.0, 0.0); size]);
    let per_state: Vec<(Vec<C64>, Vec<C64>, Vec<C64>)> = (0..ensemble.count)
        .into_par_iter()
        .map(|i| {
            let member = ensemble.member(s1, s2, i, HaarMethod::Gaussian);
            let c1 = z1.covariances(&member.first, estimator);
            let c2 = z2.covariances(&member.second, estimator);
            let d = c1.iter().zip(&c2).map(|(a, b)| a * b).collect();
            (c1, c2, d)
        })
        .collect();
    let (mut c1, mut c2, mut d) = zero();
    for (a, b, p) in &per_state {
        for idx in 0..size {
            c1[idx] += a[idx];
            c2[idx] += b[idx];
            d[idx] += p[idx];
        }
    }
    let inv = 1.0 / ensemble.count as f64;
    for idx in 0..size {
        c1[idx] *= inv;
        c2[idx] *= inv;
        d[idx] *= inv;
    }
    if product == EnsembleProduct::ProductOfAverages {
        d = c1.iter().zip(&c2).map(|(a, b)| a * b).collect();
    }
    let mode = match ensemble.kind {
        EnsembleKind::Su2 => AveragingMode::Su2Ensemble,
        EnsembleKind::Sud => AveragingMode::SudEnsemble,
    };
    Ok(CorrelationTable { horizon, mode, estimator, samples: ensemble.count, c1, c2, d })
}

/// `λ = ε j₁ j₂ / j_c`, the coefficient of `ẑ₁ ẑ₂` in the kick.
pub fn coupling_in_scaled_units(params: &CoupledParams) -> f64 {
    params.coupling_strength() * params.top1.spin.j() * params.top2.spin.j()
}

/// `2 λ² Σ_{n,m=1..t} D(n,m)`.
pub fn perturbative_entropy(params: &CoupledParams, table: &CorrelationTable, t: usize) -> Result<f64> {
    if t > table.horizon {
        return Err(Error::Horizon { requested: t, horizon: table.horizon });
    }
    let mut sum = C64::new(0.0, 0.0);
    for n in 1..=t {
        for m in 1..=t {
            sum += table.d(n, m);
        }
    }
    let lambda = coupling_in_scaled_units(params);
    Ok(2.0 * lambda * lambda * sum.re)
}

/// `(2/9) λ²` per kick: every diagonal `D(n,n)` replaced by `1/9`, the value
/// for fully spread `ẑ` (`⟨ẑ²⟩ = 1/3` per top).
pub fn strong_chaos_rate(params: &CoupledParams) -> f64 {
    let lambda = coupling_in_scaled_units(params);
    2.0 / 9.0 * lambda * lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{build_coupled_step, Propagator};
    use crate::spin::{coherent_state, SphericalAngles, SpinQuantum};
    use crate::states::{sample_haar_state, sample_su2_product, ProductState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spin(j: f64) -> SpinQuantum {
        SpinQuantum::new(j).unwrap()
    }

    fn paper_params(k: f64, eps: f64) -> CoupledParams {
        CoupledParams::symmetric(spin(19.5), spin(20.0), k, eps).unwrap()
    }

    #[test]
    fn strong_chaos_rate_values() {
        let r = strong_chaos_rate(&paper_params(6.0, 0.01));
        assert!((r - 2.0 / 9.0 * 1e-4 * 390.0).abs() < 1e-15);
        assert!((r - 8.667e-3).abs() < 1e-6);
        assert_eq!(strong_chaos_rate(&paper_params(6.0, 0.0)), 0.0);
        let r2 = strong_chaos_rate(&paper_params(6.0, 0.02));
        assert!((r2 / r - 4.0).abs() < 1e-12);
    }

    #[test]
    fn eigenstate_has_no_variance() {
        let params = TopParams::new(spin(3.0), 2.0).unwrap();
        let c = correlation(&params, &PureState::basis(7, 0), 0, 0).unwrap();
        assert!(c.norm() < 1e-14);
    }

    #[test]
    fn table_is_hermitian_and_factorizes() {
        let params = CoupledParams::symmetric(spin(2.0), spin(2.5), 3.0, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let first = sample_haar_state(5, &mut rng);
        let second = sample_haar_state(6, &mut rng);
        let table = correlation_table_single(&params, &first, &second, 8, Estimator::Covariance).unwrap();
        for n in 0..=8 {
            for m in 0..=8 {
                assert!((table.c1(n, m) - table.c1(m, n).conj()).norm() < 1e-10);
                assert!((table.d(n, m) - table.c1(n, m) * table.c2(n, m)).norm() < 1e-14);
            }
        }
        assert_eq!(perturbative_entropy(&params, &table, 0).unwrap(), 0.0);
        assert!(matches!(perturbative_entropy(&params, &table, 9), Err(Error::Horizon { .. })));
    }

    #[test]
    fn correlation_matches_direct_operator_products() {
        let params = TopParams::new(spin(1.5), 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = sample_haar_state(4, &mut rng);
        let zn = crate::floquet::heisenberg_jz(&params, 3) * faer::Scale(C64::new(1.0 / 1.5, 0.0));
        let zm = crate::floquet::heisenberg_jz(&params, 1) * faer::Scale(C64::new(1.0 / 1.5, 0.0));
        let prod = &zn * &zm;
        let direct = linalg::expectation(prod.as_ref(), psi.amplitudes())
            - linalg::expectation(zn.as_ref(), psi.amplitudes()) * linalg::expectation(zm.as_ref(), psi.amplitudes());
        let c = correlation(&params, &psi, 3, 1).unwrap();
        assert!((c - direct).norm() < 1e-12);
    }

    /// Exact linear entropy after `t` kicks from a product state.
    fn exact_entropy(params: &CoupledParams, state: &ProductState, t: u64) -> f64 {
        let op = build_coupled_step(params).unwrap();
        let mut prop = Propagator::new(&op, &state.flatten()).unwrap();
        prop.advance(t);
        prop.linear_entropy()
    }

    #[test]
    fn second_order_formula_matches_exact_evolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for k in [0.5, 3.0] {
            let params = CoupledParams::symmetric(spin(2.0), spin(2.5), k, 1e-3).unwrap();
            let state = ProductState::new(sample_haar_state(5, &mut rng), sample_haar_state(6, &mut rng));
            let table = correlation_table_single(&params, &state.first, &state.second, 6, Estimator::Covariance).unwrap();
            for t in 1..=6 {
                let exact = exact_entropy(&params, &state, t as u64);
                let pert = perturbative_entropy(&params, &table, t).unwrap();
                assert!((pert / exact - 1.0).abs() < 1e-2, "k={k} t={t}: {pert} vs {exact}");
            }
        }
    }

    #[test]
    fn symmetric_double_sum_is_real() {
        let params = CoupledParams::symmetric(spin(2.0), spin(2.5), 3.0, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let table = correlation_table_single(
            &params,
            &sample_haar_state(5, &mut rng),
            &sample_haar_state(6, &mut rng),
            10,
            Estimator::Covariance,
        )
        .unwrap();
        let mut sum = C64::new(0.0, 0.0);
        for n in 1..=10 {
            for m in 1..=10 {
                sum += table.d(n, m);
            }
        }
        assert!(sum.im.abs() < 1e-12 * sum.re.abs().max(1.0));
    }

    #[test]
    fn odd_separations_vanish_near_k_zero() {
        let j = spin(19.5);
        let params = TopParams::new(j, 0.01).unwrap();
        let z = ScaledJz::new(&params, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let size = 9;
        let mut avg = vec![C64::new(0.0, 0.0); size * size];
        let count = 200;
        for _ in 0..count {
            let psi = sample_haar_state(j.dim(), &mut rng);
            for (a, c) in avg.iter_mut().zip(z.covariances(&psi, Estimator::Covariance)) {
                *a += c / count as f64;
            }
        }
        for n in 1..size {
            for m in 1..size {
                if (n as i64 - m as i64) % 2 != 0 {
                    assert!(avg[n * size + m].norm() < 5e-2 * avg[n * size + n].norm(), "({n},{m})");
                }
            }
        }
    }

    #[test]
    fn ensemble_diagonals_scale_as_predicted() {
        // SU(2): C(n,n) → 1/(3j); SU(d): → (j(j+1)/3 − j/6)/j².
        let j = 19.5;
        let params = paper_params(0.01, 0.01);
        let su2 = correlation_table_ensemble(
            &params,
            &EnsembleSpec::new(EnsembleKind::Su2, 400, 1).unwrap(),
            2,
            Estimator::Covariance,
            EnsembleProduct::AverageOfProducts,
        )
        .unwrap();
        let sud = correlation_table_ensemble(
            &params,
            &EnsembleSpec::new(EnsembleKind::Sud, 400, 1).unwrap(),
            2,
            Estimator::Covariance,
            EnsembleProduct::AverageOfProducts,
        )
        .unwrap();
        let su2_target = 1.0 / (3.0 * j);
        let sud_target = (j * (j + 1.0) / 3.0 - j / 6.0) / (j * j);
        for n in 0..=2 {
            assert!((su2.c1(n, n).re / su2_target - 1.0).abs() < 0.1, "{}", su2.c1(n, n));
            assert!((sud.c1(n, n).re / sud_target - 1.0).abs() < 0.1, "{}", sud.c1(n, n));
        }
    }

    #[test]
    fn coherent_state_variance_matches_closed_form() {
        // Var(J_z)/j² in |θ,φ⟩ is sin²θ / (2j).
        let j = 5.0;
        let params = TopParams::new(spin(j), 1.0).unwrap();
        let theta = 1.1;
        let psi = coherent_state(spin(j), SphericalAngles::new(theta, 0.4).unwrap());
        let c = correlation(&params, &psi, 0, 0).unwrap();
        assert!((c.re - theta.sin().powi(2) / (2.0 * j)).abs() < 1e-12);
    }

    #[test]
    fn estimators_against_exact_evolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let params = CoupledParams::symmetric(spin(2.0), spin(2.5), 3.0, 1e-3).unwrap();
        let state = sample_su2_product(spin(2.0), spin(2.5), &mut rng);
        let t = 6;
        let exact = exact_entropy(&params, &state, t as u64);
        let rel = |est| {
            let table = correlation_table_single(&params, &state.first, &state.second, t, est).unwrap();
            (perturbative_entropy(&params, &table, t).unwrap() / exact - 1.0).abs()
        };
        let full = rel(Estimator::Covariance);
        let real_only = rel(Estimator::SymmetrizedReal);
        assert!(full < 1e-2, "{full}");
        // Dropping Im C₁ · Im C₂ discards the commutator part of the sum.
        assert!(real_only > 10.0 * full, "{real_only} vs {full}");
    }
}
