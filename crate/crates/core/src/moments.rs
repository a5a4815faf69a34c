//! Ensemble moments of spin expectation values, with Monte Carlo and
//! quadrature cross-checks.
//!
//! For a state `|ψ⟩` of one spin-`j` particle drawn from either ensemble:
//!
//! | moment        | spin-coherent | Haar-random |
//! |---------------|---------------|-------------|
//! | `⟨J_z²⟩`      | `j(j+1)/3`    | `j(j+1)/3`  |
//! | `⟨J_z⟩²`      | `j²/3`        | `j/6`       |
//!
//! The Haar values follow from the marginals of a uniform unit vector in
//! `C^{2j+1}`: one real coordinate has density
//! `P₁(x) ∝ (1−x²)^{2j−1/2}`, a pair has `P₂(x,y) = (2j/π)(1−x²−y²)^{2j−1}`.

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::linalg::{self, CMat};
use crate::spin::{SpinOperators, SpinQuantum};
use crate::states::{member_rng, sample_coherent, sample_haar_state, EnsembleKind, PureState};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MomentKind {
    /// `E⟨J²⟩` over spin-coherent states.
    Su2Second,
    /// `E⟨J⟩²` over spin-coherent states.
    Su2SquaredMean,
    /// `E⟨J²⟩` over Haar-random states.
    SudSecond,
    /// `E⟨J⟩²` over Haar-random states.
    SudSquaredMean,
}

impl MomentKind {
    pub const ALL: [MomentKind; 4] =
        [MomentKind::Su2Second, MomentKind::Su2SquaredMean, MomentKind::SudSecond, MomentKind::SudSquaredMean];

    pub fn ensemble(&self) -> EnsembleKind {
        match self {
            MomentKind::Su2Second | MomentKind::Su2SquaredMean => EnsembleKind::Su2,
            MomentKind::SudSecond | MomentKind::SudSquaredMean => EnsembleKind::Sud,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            MomentKind::Su2Second => "su2_jz2",
            MomentKind::Su2SquaredMean => "su2_jz_sq",
            MomentKind::SudSecond => "sud_jz2",
            MomentKind::SudSquaredMean => "sud_jz_sq",
        }
    }

    fn squared_mean(&self) -> bool {
        matches!(self, MomentKind::Su2SquaredMean | MomentKind::SudSquaredMean)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn operator<'a>(&self, ops: &'a SpinOperators) -> &'a CMat {
        match self {
            Axis::X => &ops.jx,
            Axis::Y => &ops.jy,
            Axis::Z => &ops.jz,
        }
    }
}

pub fn analytic_moment(kind: MomentKind, spin: SpinQuantum) -> f64 {
    let j = spin.j();
    match kind {
        MomentKind::Su2Second | MomentKind::SudSecond => j * (j + 1.0) / 3.0,
        MomentKind::Su2SquaredMean => j * j / 3.0,
        MomentKind::SudSquaredMean => j / 6.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentResult {
    pub kind: MomentKind,
    pub j: f64,
    pub analytic: f64,
    pub monte_carlo_mean: f64,
    pub monte_carlo_stderr: f64,
    pub samples: usize,
}

impl MomentResult {
    /// Whether the estimate lies within `n_sigma` standard errors.
    /// A zero standard error demands exact agreement (up to rounding).
    pub fn passes(&self, n_sigma: f64) -> bool {
        let diff = (self.monte_carlo_mean - self.analytic).abs();
        diff <= n_sigma * self.monte_carlo_stderr + 1e-12 * self.analytic.abs().max(1.0)
    }
}

/// Sample mean and standard error.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn sample_state(kind: EnsembleKind, spin: SpinQuantum, seed: u64, index: usize) -> PureState {
    let mut rng = member_rng(seed, index as u64);
    match kind {
        EnsembleKind::Su2 => sample_coherent(spin, &mut rng),
        EnsembleKind::Sud => sample_haar_state(spin.dim(), &mut rng),
    }
}

/// Monte Carlo estimate of a moment along the given axis.
pub fn monte_carlo_moment(
    kind: MomentKind,
    spin: SpinQuantum,
    axis: Axis,
    samples: usize,
    seed: u64,
) -> Result<MomentResult> {
    if samples == 0 {
        return Err(Error::Parameter("Monte Carlo moment needs at least one sample".into()));
    }
    let ops = SpinOperators::new(spin);
    let op = axis.operator(&ops);
    let square = op * op;
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let psi = sample_state(kind.ensemble(), spin, seed, i);
            if kind.squared_mean() {
                linalg::expectation(op.as_ref(), psi.amplitudes()).re.powi(2)
            } else {
                linalg::expectation(square.as_ref(), psi.amplitudes()).re
            }
        })
        .collect();
    let (mean, stderr) = mean_and_stderr(&values);
    Ok(MomentResult {
        kind,
        j: spin.j(),
        analytic: analytic_moment(kind, spin),
        monte_carlo_mean: mean,
        monte_carlo_stderr: stderr,
        samples,
    })
}

/// Ratio of the Haar and spin-coherent variances of `J_z`, multiplied over
/// both tops: `(j₁ + ½)(j₂ + ½)`, close to `j₁ j₂` for large spins.
pub fn predicted_rate_ratio(j1: SpinQuantum, j2: SpinQuantum) -> f64 {
    let ratio = |s: SpinQuantum| {
        let var_sud = analytic_moment(MomentKind::SudSecond, s) - analytic_moment(MomentKind::SudSquaredMean, s);
        let var_su2 = analytic_moment(MomentKind::Su2Second, s) - analytic_moment(MomentKind::Su2SquaredMean, s);
        var_sud / var_su2
    };
    ratio(j1) * ratio(j2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossTerm {
    pub ensemble: EnsembleKind,
    /// `E Re⟨J_z J_x⟩`.
    pub product_mean: f64,
    pub product_stderr: f64,
    /// `E ⟨J_z⟩⟨J_x⟩`.
    pub mean_product_mean: f64,
    pub mean_product_stderr: f64,
    pub samples: usize,
}

impl CrossTerm {
    pub fn vanishes(&self, n_sigma: f64) -> bool {
        self.product_mean.abs() <= n_sigma * self.product_stderr + 1e-12
            && self.mean_product_mean.abs() <= n_sigma * self.mean_product_stderr + 1e-12
    }
}

/// Monte Carlo means of the mixed terms under both ensembles.
pub fn cross_term_vanishing_check(spin: SpinQuantum, samples: usize, seed: u64) -> Result<[CrossTerm; 2]> {
    if samples < 10_000 {
        return Err(Error::Parameter(format!("cross-term check needs at least 10^4 samples, got {samples}")));
    }
    let ops = SpinOperators::new(spin);
    let zx = &ops.jz * &ops.jx;
    let run = |kind: EnsembleKind| {
        let pairs: Vec<(f64, f64)> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let psi = sample_state(kind, spin, seed, i);
                let a = psi.amplitudes();
                let prod = linalg::expectation(zx.as_ref(), a).re;
                let z = linalg::expectation(ops.jz.as_ref(), a).re;
                let x = linalg::expectation(ops.jx.as_ref(), a).re;
                (prod, z * x)
            })
            .collect();
        let first: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let second: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let (pm, ps) = mean_and_stderr(&first);
        let (mm, ms) = mean_and_stderr(&second);
        CrossTerm {
            ensemble: kind,
            product_mean: pm,
            product_stderr: ps,
            mean_product_mean: mm,
            mean_product_stderr: ms,
            samples,
        }
    };
    Ok([run(EnsembleKind::Su2), run(EnsembleKind::Sud)])
}

/// Normalization of `P₁`: `Γ(2j+1) / (√π Γ(2j+½))`.
pub fn p1_normalization(spin: SpinQuantum) -> f64 {
    let two_j = spin.twice_j() as f64;
    (ln_gamma(two_j + 1.0) - ln_gamma(two_j + 0.5)).exp() / std::f64::consts::PI.sqrt()
}

/// Normalization of `P₂`: `2j/π`.
pub fn p2_normalization(spin: SpinQuantum) -> f64 {
    spin.twice_j() as f64 / std::f64::consts::PI
}

pub fn p1(spin: SpinQuantum, x: f64) -> f64 {
    let a = spin.twice_j() as f64 - 0.5;
    p1_normalization(spin) * (1.0 - x * x).max(0.0).powf(a)
}

pub fn p2(spin: SpinQuantum, x: f64, y: f64) -> f64 {
    let b = spin.twice_j() as f64 - 1.0;
    p2_normalization(spin) * (1.0 - x * x - y * y).max(0.0).powf(b)
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    const MAX_INTERVALS: usize = 2000;
    let (value, error) = gauss_kronrod(&f, a, b);
    let mut intervals = vec![(a, b, value, error)];
    loop {
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if err <= abs_tol {
            return Ok(total);
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Convergence(format!(
                "quadrature error estimate {err:e} above tolerance {abs_tol:e} after {MAX_INTERVALS} intervals"
            )));
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("at least one interval");
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        for (l, r) in [(lo, mid), (mid, hi)] {
            let (v, e) = gauss_kronrod(&f, l, r);
            intervals.push((l, r, v, e));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginalIntegrals {
    pub j: f64,
    pub x4_analytic: f64,
    pub x2y2_analytic: f64,
    pub x4_quadrature: f64,
    pub x2y2_quadrature: f64,
    pub p1_norm: f64,
    pub p2_norm: f64,
}

impl MarginalIntegrals {
    pub fn max_relative_error(&self) -> f64 {
        let r1 = (self.x4_quadrature / self.x4_analytic - 1.0).abs();
        let r2 = (self.x2y2_quadrature / self.x2y2_analytic - 1.0).abs();
        r1.max(r2)
    }
}

pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;

/// `∫ x⁴ P₁` and `∫∫ x² y² P₂`, analytically and by quadrature.
///
/// The endpoint singularities of `(1−x²)^{2j−1/2}` are removed with
/// `x = sin t`; the disk is covered by `x = sin t`, `y = √(1−x²) sin s`.
pub fn marginal_integrals(spin: SpinQuantum, abs_tol: f64) -> Result<MarginalIntegrals> {
    if spin.twice_j() == 0 {
        return Err(Error::Parameter("marginal distributions need j ≥ 1/2".into()));
    }
    let j = spin.j();
    let a = spin.twice_j() as f64 - 0.5;
    let b = spin.twice_j() as f64 - 1.0;
    let n1 = p1_normalization(spin);
    let n2 = p2_normalization(spin);
    let half_pi = std::f64::consts::FRAC_PI_2;

    let p1_moment = |power: i32| {
        integrate(
            |t: f64| {
                let (s, c) = t.sin_cos();
                n1 * c.powf(2.0 * a + 1.0) * s.powi(power)
            },
            -half_pi,
            half_pi,
            abs_tol,
        )
    };
    let disk = |px: i32, py: i32| {
        integrate(
            |t: f64| {
                let (sx, cx) = t.sin_cos();
                let inner = integrate(
                    |u: f64| {
                        let (su, cu) = u.sin_cos();
                        // 1 − x² − y² = cos²t cos²u; dy = cos t cos u du.
                        n2 * (cx * cu).powf(2.0 * b) * (cx * su).powi(py) * cx * cu
                    },
                    -half_pi,
                    half_pi,
                    abs_tol,
                )
                .unwrap_or(f64::NAN);
                sx.powi(px) * inner * cx
            },
            -half_pi,
            half_pi,
            abs_tol,
        )
    };
    let x4 = p1_moment(4)?;
    let x2y2 = disk(2, 2)?;
    let p1_norm = p1_moment(0)?;
    let p2_norm = disk(0, 0)?;
    if !(x2y2.is_finite() && p2_norm.is_finite()) {
        return Err(Error::Convergence("inner disk quadrature did not converge".into()));
    }
    let denom = 8.0 * (j + 1.0) * (2.0 * j + 1.0);
    Ok(MarginalIntegrals {
        j,
        x4_analytic: 3.0 / denom,
        x2y2_analytic: 1.0 / denom,
        x4_quadrature: x4,
        x2y2_quadrature: x2y2,
        p1_norm,
        p2_norm,
    })
}
