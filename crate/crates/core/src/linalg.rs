//! Thin helpers over `faer` dense matrices.

use faer::{Mat, MatRef, Side};

use crate::{Error, Result, C64};

pub type CMat = Mat<C64>;

/// Run faer's dense kernels on the calling thread. Parallelism then comes
/// only from the rayon pool over ensemble members, and results no longer
/// depend on how faer would split its own work.
pub fn use_sequential_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn diagonal(entries: &[C64]) -> CMat {
    let n = entries.len();
    Mat::from_fn(n, n, |i, j| if i == j { entries[i] } else { C64::new(0.0, 0.0) })
}

pub fn adjoint(a: MatRef<'_, C64>) -> CMat {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

/// Kronecker product `a ⊗ b`, row index `ia * b.nrows() + ib`.
pub fn kron(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> CMat {
    let (ra, ca) = (a.nrows(), a.ncols());
    let (rb, cb) = (b.nrows(), b.ncols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// `max |(A† A - I)_{ij}|`.
pub fn unitarity_defect(a: MatRef<'_, C64>) -> f64 {
    let prod = a.adjoint() * a;
    max_abs_diff(prod.as_ref(), identity(a.ncols()).as_ref())
}

/// `max |A - A†|`.
pub fn hermiticity_defect(a: MatRef<'_, C64>) -> f64 {
    max_abs_diff(a, adjoint(a).as_ref())
}

pub fn trace(a: MatRef<'_, C64>) -> C64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(a: MatRef<'_, C64>) -> Result<(Vec<f64>, CMat)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Convergence(format!("self-adjoint eigendecomposition: {e:?}")))?;
    let values = evd.S().column_vector().iter().map(|v| v.re).collect();
    Ok((values, evd.U().to_owned()))
}

/// `exp(-i t H)` for Hermitian `H`, through its eigendecomposition.
pub fn unitary_exp(h: MatRef<'_, C64>, t: f64) -> Result<CMat> {
    let (values, vectors) = hermitian_eigen(h)?;
    let phases: Vec<C64> = values.iter().map(|&l| C64::from_polar(1.0, -t * l)).collect();
    let scaled = Mat::from_fn(vectors.nrows(), vectors.ncols(), |i, j| vectors[(i, j)] * phases[j]);
    Ok(&scaled * vectors.adjoint())
}

pub fn mat_vec(a: MatRef<'_, C64>, v: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), v.len());
    let mut out = vec![C64::new(0.0, 0.0); a.nrows()];
    for j in 0..a.ncols() {
        let vj = v[j];
        if vj == C64::new(0.0, 0.0) {
            continue;
        }
        let col = a.col(j);
        for (o, x) in out.iter_mut().zip(col.iter()) {
            *o += *x * vj;
        }
    }
    out
}

/// `⟨v|A|v⟩`.
pub fn expectation(a: MatRef<'_, C64>, v: &[C64]) -> C64 {
    let av = mat_vec(a, v);
    v.iter().zip(&av).map(|(x, y)| x.conj() * y).sum()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_of_identities_is_identity() {
        let k = kron(identity(2).as_ref(), identity(3).as_ref());
        assert_eq!(max_abs_diff(k.as_ref(), identity(6).as_ref()), 0.0);
    }

    #[test]
    fn unitary_exp_of_zero_is_identity() {
        let z = Mat::<C64>::zeros(4, 4);
        let u = unitary_exp(z.as_ref(), 1.3).unwrap();
        assert!(max_abs_diff(u.as_ref(), identity(4).as_ref()) < 1e-14);
    }

    #[test]
    fn unitary_exp_of_diagonal() {
        let h = diagonal(&[C64::new(1.0, 0.0), C64::new(-2.0, 0.0)]);
        let u = unitary_exp(h.as_ref(), 0.5).unwrap();
        assert!((u[(0, 0)] - C64::from_polar(1.0, -0.5)).norm() < 1e-14);
        assert!((u[(1, 1)] - C64::from_polar(1.0, 1.0)).norm() < 1e-14);
        assert!(u[(0, 1)].norm() < 1e-14);
    }
}
