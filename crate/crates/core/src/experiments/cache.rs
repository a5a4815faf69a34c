//! On-disk cache of Floquet spectra.
//!
//! Each entry is a binary file holding the exact phases and eigenvectors
//! (little-endian `f64`, eigenvectors column-major) next to a readable
//! `index,phase,linear_entropy` CSV. Reading the binary back reproduces the
//! spectrum bit for bit, so warm and cold runs agree exactly.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use faer::Mat;

use super::output::{fmt_f64, sha256_hex, write_atomic, Table};
use crate::entanglement::Dims;
use crate::floquet::{build_coupled_step_capped, CoupledParams, DiagonalizeOptions, Spectrum};
use crate::spectral::EigenEntanglementReport;
use crate::{Error, Result, C64};

const MAGIC: &[u8; 8] = b"KTSPEC01";

/// Key over everything the spectrum depends on.
pub fn spectrum_key(params: &CoupledParams, opts: &DiagonalizeOptions) -> String {
    let text = format!(
        "j1={}|j2={}|k1={:e}|k2={:e}|p1={:e}|p2={:e}|eps={:e}|scale={}|deg={:e}|cluster={:e}",
        params.top1.spin,
        params.top2.spin,
        params.top1.k,
        params.top2.k,
        params.top1.p,
        params.top2.p,
        params.epsilon,
        params.scale.label(),
        opts.degeneracy_tol,
        opts.cluster_tol,
    );
    sha256_hex(text.as_bytes())[..16].to_string()
}

pub fn encode_spectrum(s: &Spectrum) -> Vec<u8> {
    let n = s.len();
    let mut out = Vec::with_capacity(8 + 5 * 8 + n * 8 + n * n * 16);
    out.extend_from_slice(MAGIC);
    for v in [s.dims.d1 as u64, s.dims.d2 as u64, n as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [s.min_gap, s.degeneracy_tol, s.max_residual] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for p in &s.phases {
        out.extend_from_slice(&p.to_le_bytes());
    }
    for j in 0..n {
        for x in s.vectors.col(j).iter() {
            out.extend_from_slice(&x.re.to_le_bytes());
            out.extend_from_slice(&x.im.to_le_bytes());
        }
    }
    out
}

pub fn decode_spectrum(bytes: &[u8]) -> Result<Spectrum> {
    let corrupt = |what: &str| Error::Config(format!("corrupt spectrum cache entry: {what}"));
    if bytes.len() < 8 + 48 || &bytes[..8] != MAGIC {
        return Err(corrupt("bad header"));
    }
    let mut cursor = &bytes[8..];
    let mut word = || -> [u8; 8] {
        let mut w = [0u8; 8];
        cursor.read_exact(&mut w).expect("length checked before reading");
        w
    };
    let d1 = u64::from_le_bytes(word()) as usize;
    let d2 = u64::from_le_bytes(word()) as usize;
    let n = u64::from_le_bytes(word()) as usize;
    if n != d1 * d2 || bytes.len() != 8 + 48 + n * 8 + n * n * 16 {
        return Err(corrupt("size mismatch"));
    }
    let min_gap = f64::from_le_bytes(word());
    let degeneracy_tol = f64::from_le_bytes(word());
    let max_residual = f64::from_le_bytes(word());
    let phases: Vec<f64> = (0..n).map(|_| f64::from_le_bytes(word())).collect();
    let mut vectors = Mat::<C64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let re = f64::from_le_bytes(word());
            let im = f64::from_le_bytes(word());
            vectors[(i, j)] = C64::new(re, im);
        }
    }
    Ok(Spectrum { dims: Dims::new(d1, d2), phases, vectors, min_gap, degeneracy_tol, max_residual })
}

pub fn eigen_table(report: &EigenEntanglementReport) -> Table {
    let mut t = Table::new(&["index", "phase", "linear_entropy"]);
    for e in &report.per_eigenvector {
        t.push(vec![e.index.to_string(), fmt_f64(e.phase), fmt_f64(e.linear_entropy)]);
    }
    t
}

#[derive(Clone, Debug)]
pub struct SpectrumCache {
    dir: PathBuf,
}

impl SpectrumCache {
    pub fn new(dir: &Path) -> Self {
        SpectrumCache { dir: dir.to_path_buf() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn bin_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("spectrum_{key}.bin"))
    }

    pub fn csv_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("spectrum_{key}.csv"))
    }

    pub fn load(&self, key: &str) -> Option<Spectrum> {
        let bytes = fs::read(self.bin_path(key)).ok()?;
        match decode_spectrum(&bytes) {
            Ok(s) => Some(s),
            Err(e) => {
                log::warn!("discarding cache entry {key}: {e}");
                None
            }
        }
    }

    pub fn store(&self, key: &str, spectrum: &Spectrum, report: &EigenEntanglementReport) -> Result<()> {
        write_atomic(&self.bin_path(key), &encode_spectrum(spectrum))?;
        write_atomic(&self.csv_path(key), &eigen_table(report).to_bytes()?)
    }

    /// Cached spectrum, or a fresh diagonalization that is then stored.
    /// The flag reports a cache hit.
    pub fn get_or_compute(
        &self,
        params: &CoupledParams,
        opts: &DiagonalizeOptions,
        dim_cap: usize,
    ) -> Result<(Spectrum, bool)> {
        let key = spectrum_key(params, opts);
        if let Some(s) = self.load(&key) {
            return Ok((s, true));
        }
        let op = build_coupled_step_capped(params, dim_cap)?;
        let spectrum = op.diagonalize(opts)?;
        let report = crate::spectral::eigenvector_entanglement(&spectrum);
        self.store(&key, &spectrum, &report)?;
        Ok((spectrum, false))
    }
}
