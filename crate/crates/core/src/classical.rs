//! Classical limit of the kicked tops on the unit sphere and the largest
//! Lyapunov exponent of the single-top map.

use rand::Rng;
use rayon::prelude::*;

use crate::states::{member_rng, sample_sphere_angles};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ClassicalState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        ClassicalState { x, y, z }
    }

    pub fn from_angles(theta: f64, phi: f64) -> Self {
        ClassicalState::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        ClassicalState::new(self.x / n, self.y / n, self.z / n)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Quarter turn about `y` followed by a rotation about `z` through the twist
/// angle `Δ` (`kX` for a single top).
fn twisted(s: ClassicalState, delta: f64) -> ClassicalState {
    let (sin, cos) = delta.sin_cos();
    ClassicalState::new(s.z * cos + s.y * sin, -s.z * sin + s.y * cos, -s.x)
}

/// One kick; the result is renormalized onto the sphere.
pub fn classical_step(s: ClassicalState, k: f64) -> ClassicalState {
    twisted(s, k * s.x).normalized()
}

/// One kick of the coupled tops: twist angles `Δ₁₂ = kX₁ + εX₂` and
/// `Δ₂₁ = kX₂ + εX₁`.
pub fn coupled_classical_step(
    s1: ClassicalState,
    s2: ClassicalState,
    k: f64,
    epsilon: f64,
) -> (ClassicalState, ClassicalState) {
    let d12 = k * s1.x + epsilon * s2.x;
    let d21 = k * s2.x + epsilon * s1.x;
    (twisted(s1, d12).normalized(), twisted(s2, d21).normalized())
}

/// Jacobian of the single-top map at `s`.
pub fn jacobian(s: ClassicalState, k: f64) -> [[f64; 3]; 3] {
    let (sin, cos) = (k * s.x).sin_cos();
    let next = twisted(s, k * s.x);
    [
        [k * next.y, sin, cos],
        [-k * next.x, cos, -sin],
        [-1.0, 0.0, 0.0],
    ]
}

fn apply(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Clone, Copy, Debug)]
pub struct LyapunovOptions {
    pub n_points: usize,
    pub n_steps: usize,
    pub transient: usize,
    pub renormalize_every: usize,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        LyapunovOptions { n_points: 200, n_steps: 10_000, transient: 100, renormalize_every: 10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovEstimate {
    pub k: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n_points: usize,
    pub n_steps: usize,
}

/// Largest exponent along one trajectory, per kick.
pub fn trajectory_exponent(start: ClassicalState, k: f64, opts: &LyapunovOptions) -> f64 {
    let mut s = start.normalized();
    for _ in 0..opts.transient {
        s = classical_step(s, k);
    }
    // Any tangent direction works; pick one orthogonal to the position.
    let p = s.as_array();
    let seed = if p[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let proj = dot(seed, p);
    let mut v = [seed[0] - proj * p[0], seed[1] - proj * p[1], seed[2] - proj * p[2]];
    let n0 = dot(v, v).sqrt();
    v = [v[0] / n0, v[1] / n0, v[2] / n0];

    let mut log_growth = 0.0;
    let every = opts.renormalize_every.max(1);
    for step in 1..=opts.n_steps {
        let jac = jacobian(s, k);
        v = apply(&jac, v);
        s = classical_step(s, k);
        let p = s.as_array();
        let radial = dot(v, p);
        v = [v[0] - radial * p[0], v[1] - radial * p[1], v[2] - radial * p[2]];
        if step % every == 0 || step == opts.n_steps {
            let n = dot(v, v).sqrt();
            log_growth += n.ln();
            v = [v[0] / n, v[1] / n, v[2] / n];
        }
    }
    log_growth / opts.n_steps as f64
}

/// Mean and standard error over `n_points` starts uniform on the sphere.
pub fn lyapunov_exponent(k: f64, seed: u64, opts: &LyapunovOptions) -> Result<LyapunovEstimate> {
    if opts.n_points == 0 {
        return Err(Error::Parameter("Lyapunov estimate needs at least one initial point".into()));
    }
    if opts.n_steps < 1000 {
        return Err(Error::Parameter(format!("n_steps = {} is below the minimum of 1000", opts.n_steps)));
    }
    let values: Vec<f64> = (0..opts.n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = member_rng(seed, i as u64);
            let angles = sample_sphere_angles(&mut rng);
            trajectory_exponent(ClassicalState::from_angles(angles.theta(), angles.phi()), k, opts)
        })
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(LyapunovEstimate { k, mean, stderr, n_points: opts.n_points, n_steps: opts.n_steps })
}

/// Uniform random point on the sphere.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R) -> ClassicalState {
    let a = sample_sphere_angles(rng);
    ClassicalState::from_angles(a.theta(), a.phi())
}
