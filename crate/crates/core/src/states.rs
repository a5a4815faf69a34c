//! Pure states and the two product-state ensembles.
//!
//! * `Su2Coherent`: products of spin-coherent states whose directions are
//!   independent and uniform on the sphere.
//! * `SudRandom`: products of independent Haar-random states of each top.

use std::f64::consts::PI;

use faer::Mat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::spin::{coherent_state, SphericalAngles, SpinQuantum};
use crate::{Error, Result, C64};

/// Normalized vector of complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
}

impl PureState {
    /// Wraps raw amplitudes without normalizing them.
    pub fn new(amps: Vec<C64>) -> Self {
        PureState { amps }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        PureState { amps }
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.amps)
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        linalg::inner(&self.amps, &other.amps)
    }

    /// Tensor product; index `a * other.dim() + b`.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        PureState { amps }
    }
}

/// `|ψ₁⟩ ⊗ |ψ₂⟩` kept in factored form.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    pub first: PureState,
    pub second: PureState,
}

impl ProductState {
    pub fn new(first: PureState, second: PureState) -> Self {
        ProductState { first, second }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.first.dim(), self.second.dim())
    }

    pub fn flatten(&self) -> PureState {
        self.first.tensor(&self.second)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    /// Spin-coherent products, directions uniform on the sphere.
    Su2,
    /// Haar-random products.
    Sud,
}

impl EnsembleKind {
    pub fn label(&self) -> &'static str {
        match self {
            EnsembleKind::Su2 => "su2",
            EnsembleKind::Sud => "sud",
        }
    }
}

impl std::str::FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "su2" => Ok(EnsembleKind::Su2),
            "sud" => Ok(EnsembleKind::Sud),
            other => Err(Error::Parameter(format!("unknown ensemble '{other}' (expected su2 or sud)"))),
        }
    }
}

/// How Haar-random single-top states are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HaarMethod {
    /// Normalized vector of i.i.d. complex Gaussians.
    #[default]
    Gaussian,
    /// First column of a Haar unitary from the QR of a Ginibre matrix.
    Qr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub count: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Parameter("ensemble count must be at least 1".into()));
        }
        Ok(EnsembleSpec { kind, count, seed })
    }

    /// Member `index` of the ensemble; depends only on `(seed, index)`.
    pub fn member(&self, j1: SpinQuantum, j2: SpinQuantum, index: usize, haar: HaarMethod) -> ProductState {
        let mut rng = member_rng(self.seed, index as u64);
        match self.kind {
            EnsembleKind::Su2 => sample_su2_product(j1, j2, &mut rng),
            EnsembleKind::Sud => sample_sud_product_with(j1, j2, haar, &mut rng),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for ensemble member `index`: seed ⊕ hash(index).
pub fn member_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ splitmix64(index))
}

/// Direction uniform on the unit sphere.
pub fn sample_sphere_angles<R: Rng + ?Sized>(rng: &mut R) -> SphericalAngles {
    let cos_theta: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    SphericalAngles::new(cos_theta.clamp(-1.0, 1.0).acos(), phi).expect("sampled angles in range")
}

pub fn sample_coherent<R: Rng + ?Sized>(spin: SpinQuantum, rng: &mut R) -> PureState {
    coherent_state(spin, sample_sphere_angles(rng))
}

pub fn sample_su2_product<R: Rng + ?Sized>(j1: SpinQuantum, j2: SpinQuantum, rng: &mut R) -> ProductState {
    let first = sample_coherent(j1, rng);
    let second = sample_coherent(j2, rng);
    ProductState::new(first, second)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Unitarily invariant random state of dimension `d`.
pub fn sample_haar_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState {
    assert!(d >= 1);
    loop {
        let amps: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        let state = PureState::new(amps);
        if state.norm_sqr() > 0.0 {
            return state.normalized();
        }
    }
}

/// Haar unitary from the QR decomposition of a Ginibre matrix, with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn sample_haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> linalg::CMat {
    let ginibre = Mat::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = ginibre.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let phases: Vec<C64> = (0..d)
        .map(|i| {
            let rii = r[(i, i)];
            if rii.norm() > 0.0 {
                rii / rii.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        })
        .collect();
    Mat::from_fn(d, d, |i, k| q[(i, k)] * phases[k])
}

/// Haar state as a Haar unitary applied to the fixed state `|0⟩`.
pub fn sample_haar_state_qr<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState {
    let u = sample_haar_unitary(d, rng);
    PureState::new((0..d).map(|i| u[(i, 0)]).collect())
}

pub fn sample_haar_with<R: Rng + ?Sized>(d: usize, method: HaarMethod, rng: &mut R) -> PureState {
    match method {
        HaarMethod::Gaussian => sample_haar_state(d, rng),
        HaarMethod::Qr => sample_haar_state_qr(d, rng),
    }
}

pub fn sample_sud_product<R: Rng + ?Sized>(j1: SpinQuantum, j2: SpinQuantum, rng: &mut R) -> ProductState {
    sample_sud_product_with(j1, j2, HaarMethod::Gaussian, rng)
}

pub fn sample_sud_product_with<R: Rng + ?Sized>(
    j1: SpinQuantum,
    j2: SpinQuantum,
    method: HaarMethod,
    rng: &mut R,
) -> ProductState {
    let first = sample_haar_with(j1.dim(), method, rng);
    let second = sample_haar_with(j2.dim(), method, rng);
    ProductState::new(first, second)
}
