use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::SpectrumCache;
use super::config::{AsymptoticMethod, ExperimentConfig};
use super::output::{fmt_f64, k_tag, Checkpoints, Table};
use crate::entanglement::statistical_limit;
use crate::floquet::{build_coupled_step_capped, CoupledParams, DiagonalizeOptions, FloquetOperator, Spectrum};
use crate::moments::mean_and_stderr;
use crate::spectral::{
    eigenvector_entanglement, lower_bound_from_mean, sampled_window_entropy, time_averaged_entropy, window_kicks,
    EigenEntanglementReport,
};
use crate::spin::SpinQuantum;
use crate::states::{EnsembleKind, EnsembleSpec, HaarMethod};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleAverage {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Window-averaged linear entropy over an ensemble.
pub fn window_average(
    op: &FloquetOperator,
    spectrum: &Spectrum,
    spec: &EnsembleSpec,
    window: (u64, u64),
    method: AsymptoticMethod,
    samples: usize,
    spins: (SpinQuantum, SpinQuantum),
) -> Result<EnsembleAverage> {
    let kicks = window_kicks(window.0, window.1, samples);
    let values: Vec<f64> = (0..spec.count)
        .into_par_iter()
        .map(|i| {
            let psi = spec.member(spins.0, spins.1, i, HaarMethod::Gaussian).flatten();
            match method {
                AsymptoticMethod::Spectral => sampled_window_entropy(spectrum, &psi, &kicks),
                AsymptoticMethod::Direct => time_averaged_entropy(op, &psi, window.0, window.1),
            }
        })
        .collect::<Result<_>>()?;
    let (mean, stderr) = mean_and_stderr(&values);
    Ok(EnsembleAverage { mean, stderr, count: spec.count })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticRow {
    pub j1: SpinQuantum,
    pub j2: SpinQuantum,
    pub k: f64,
    pub epsilon: f64,
    pub mean_eigen_entropy: f64,
    pub lower_bound: f64,
    pub su2: Option<EnsembleAverage>,
    pub sud: Option<EnsembleAverage>,
    pub statistical_limit: f64,
    pub min_gap: f64,
    /// Eigen columns are advisory when set.
    pub degenerate: bool,
}

impl AsymptoticRow {
    pub fn ensemble(&self, kind: EnsembleKind) -> Option<EnsembleAverage> {
        match kind {
            EnsembleKind::Su2 => self.su2,
            EnsembleKind::Sud => self.sud,
        }
    }
}

pub fn load_spectrum(
    params: &CoupledParams,
    cache: Option<&SpectrumCache>,
    dim_cap: usize,
) -> Result<(FloquetOperator, Spectrum)> {
    let op = build_coupled_step_capped(params, dim_cap)?;
    let opts = DiagonalizeOptions::default();
    let spectrum = match cache {
        Some(c) => c.get_or_compute(params, &opts, dim_cap)?.0,
        None => op.diagonalize(&opts)?,
    };
    Ok((op, spectrum))
}

/// One `(j₁, j₂, k)` cell: eigenvector statistics plus the window averages
/// of every configured ensemble.
pub fn asymptotic_cell(
    cfg: &ExperimentConfig,
    params: &CoupledParams,
    cache: Option<&SpectrumCache>,
    ckpt: Option<&Checkpoints>,
) -> Result<AsymptoticRow> {
    let (j1, j2, k) = (params.top1.spin, params.top2.spin, params.top1.k);
    let (op, spectrum) = load_spectrum(params, cache, cfg.dim_cap)?;
    let report = eigenvector_entanglement(&spectrum);
    let mut row = AsymptoticRow {
        j1,
        j2,
        k,
        epsilon: params.epsilon,
        mean_eigen_entropy: report.mean,
        lower_bound: lower_bound_from_mean(report.mean),
        su2: None,
        sud: None,
        statistical_limit: statistical_limit(j1.dim(), j2.dim()),
        min_gap: report.min_gap,
        degenerate: report.degenerate,
    };
    for kind in cfg.ensemble.kind.kinds() {
        let name = format!("asymptotic_j{}_j{}_{}_{}", j1, j2, k_tag(k), kind.label());
        let avg = match ckpt.and_then(|c| c.load::<EnsembleAverage>(&name)) {
            Some(a) => a,
            None => {
                log::info!("window average j = ({j1}, {j2}), k = {k}, {}", kind.label());
                let spec = cfg.ensemble_spec(kind)?;
                let a = window_average(
                    &op,
                    &spectrum,
                    &spec,
                    cfg.asymptotic_window,
                    cfg.asymptotic_method,
                    cfg.asymptotic_samples,
                    (j1, j2),
                )?;
                if let Some(c) = ckpt {
                    c.store(&name, &a)?;
                }
                a
            }
        };
        match kind {
            EnsembleKind::Su2 => row.su2 = Some(avg),
            EnsembleKind::Sud => row.sud = Some(avg),
        }
    }
    Ok(row)
}

pub fn run_asymptotic_sweep(
    cfg: &ExperimentConfig,
    cache: Option<&SpectrumCache>,
    ckpt: Option<&Checkpoints>,
) -> Result<Vec<AsymptoticRow>> {
    cfg.validate()?;
    cfg.k_list.iter().map(|&k| asymptotic_cell(cfg, &cfg.params(k)?, cache, ckpt)).collect()
}

/// Rows for `j₁ = j`, `j₂ = j + ½` over the scaling grid.
pub fn run_scaling_experiment(
    cfg: &ExperimentConfig,
    cache: Option<&SpectrumCache>,
    ckpt: Option<&Checkpoints>,
) -> Result<Vec<AsymptoticRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &j in &cfg.scaling.j_list {
        let j2 = SpinQuantum::from_twice(j.twice_j() + 1);
        if j.dim() * j2.dim() > cfg.dim_cap {
            return Err(crate::Error::Resource(format!(
                "scaling point j = {j} needs dimension {} above dim_cap {}",
                j.dim() * j2.dim(),
                cfg.dim_cap
            )));
        }
        for &k in &cfg.scaling.k_list {
            rows.push(asymptotic_cell(cfg, &cfg.params_for(j, j2, k)?, cache, ckpt)?);
        }
    }
    Ok(rows)
}

fn opt_mean(a: Option<EnsembleAverage>) -> String {
    a.map(|a| fmt_f64(a.mean)).unwrap_or_default()
}

fn opt_stderr(a: Option<EnsembleAverage>) -> String {
    a.map(|a| fmt_f64(a.stderr)).unwrap_or_default()
}

/// The documented sweep columns come first; extras follow, with the config
/// hash last.
pub fn asymptotic_table(cfg: &ExperimentConfig, rows: &[AsymptoticRow]) -> Table {
    let hash = cfg.config_hash();
    let mut t = Table::new(&[
        "k",
        "epsilon",
        "mean_eigen_entropy",
        "lower_bound",
        "measured_asymptotic_su2",
        "measured_asymptotic_sud",
        "min_gap",
        "j1",
        "j2",
        "stderr_su2",
        "stderr_sud",
        "statistical_limit",
        "degenerate",
        "window_start",
        "window_end",
        "method",
        "samples",
        "coupling_scale",
        "config_hash",
    ]);
    let method = match cfg.asymptotic_method {
        AsymptoticMethod::Spectral => "spectral",
        AsymptoticMethod::Direct => "direct",
    };
    for r in rows {
        t.push(vec![
            fmt_f64(r.k),
            fmt_f64(r.epsilon),
            fmt_f64(r.mean_eigen_entropy),
            fmt_f64(r.lower_bound),
            opt_mean(r.su2),
            opt_mean(r.sud),
            fmt_f64(r.min_gap),
            r.j1.to_string(),
            r.j2.to_string(),
            opt_stderr(r.su2),
            opt_stderr(r.sud),
            fmt_f64(r.statistical_limit),
            r.degenerate.to_string(),
            cfg.asymptotic_window.0.to_string(),
            cfg.asymptotic_window.1.to_string(),
            method.into(),
            cfg.asymptotic_samples.to_string(),
            cfg.coupling_scale.label().into(),
            hash.clone(),
        ]);
    }
    t
}

/// Eigenvector entanglement for every `k`, without any time evolution.
pub fn run_eigen_sweep(
    cfg: &ExperimentConfig,
    cache: Option<&SpectrumCache>,
) -> Result<Vec<(f64, EigenEntanglementReport)>> {
    cfg.validate()?;
    cfg.k_list
        .iter()
        .map(|&k| {
            let (_, spectrum) = load_spectrum(&cfg.params(k)?, cache, cfg.dim_cap)?;
            Ok((k, eigenvector_entanglement(&spectrum)))
        })
        .collect()
}

pub fn eigen_summary_table(cfg: &ExperimentConfig, reports: &[(f64, EigenEntanglementReport)]) -> Table {
    let hash = cfg.config_hash();
    let mut t = Table::new(&[
        "k",
        "epsilon",
        "mean_eigen_entropy",
        "lower_bound",
        "min_gap",
        "degenerate",
        "dimension",
        "j1",
        "j2",
        "coupling_scale",
        "config_hash",
    ]);
    for (k, r) in reports {
        t.push(vec![
            fmt_f64(*k),
            fmt_f64(cfg.epsilon),
            fmt_f64(r.mean),
            fmt_f64(lower_bound_from_mean(r.mean)),
            fmt_f64(r.min_gap),
            r.degenerate.to_string(),
            r.per_eigenvector.len().to_string(),
            cfg.j1.to_string(),
            cfg.j2.to_string(),
            cfg.coupling_scale.label().into(),
            hash.clone(),
        ]);
    }
    t
}

/// Per-eigenvector listing for one `k`.
pub fn eigen_detail_table(report: &EigenEntanglementReport, config_hash: &str) -> Table {
    let mut t = Table::new(&["index", "phase", "linear_entropy", "config_hash"]);
    for e in &report.per_eigenvector {
        t.push(vec![e.index.to_string(), fmt_f64(e.phase), fmt_f64(e.linear_entropy), config_hash.to_string()]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{EnsembleConfig, EnsembleSelection, ScalingConfig};
    use crate::spectral::asymptotic_entropy_resonant;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            j1: SpinQuantum::new(1.0).unwrap(),
            j2: SpinQuantum::new(1.5).unwrap(),
            epsilon: 0.1,
            k_list: vec![1.0, 3.0],
            kicks: 4000,
            asymptotic_window: (2000, 4000),
            ensemble: EnsembleConfig { kind: EnsembleSelection::Both, count: 4 },
            scaling: ScalingConfig {
                j_list: vec![SpinQuantum::new(0.5).unwrap(), SpinQuantum::new(1.0).unwrap()],
                k_list: vec![6.0],
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn spectral_and_direct_windows_agree_on_sampled_kicks() {
        let cfg = small_config();
        let params = cfg.params(3.0).unwrap();
        let (op, spectrum) = load_spectrum(&params, None, cfg.dim_cap).unwrap();
        let spec = cfg.ensemble_spec(EnsembleKind::Sud).unwrap();
        let spins = (cfg.j1, cfg.j2);
        // A window of one kick makes both methods evaluate the same state.
        let a = window_average(&op, &spectrum, &spec, (777, 777), AsymptoticMethod::Spectral, 1, spins).unwrap();
        let b = window_average(&op, &spectrum, &spec, (777, 777), AsymptoticMethod::Direct, 1, spins).unwrap();
        assert!((a.mean - b.mean).abs() < 1e-9, "{} vs {}", a.mean, b.mean);
    }

    #[test]
    fn sweep_rows_respect_bound_and_limits() {
        let cfg = small_config();
        let rows = run_asymptotic_sweep(&cfg, None, None).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            for kind in [EnsembleKind::Su2, EnsembleKind::Sud] {
                let a = r.ensemble(kind).unwrap();
                assert!(a.mean >= r.lower_bound - 1e-9);
                assert!(a.mean <= 1.0 - 1.0 / 3.0);
            }
        }
        let t = asymptotic_table(&cfg, &rows);
        assert_eq!(&t.header[..7], &[
            "k",
            "epsilon",
            "mean_eigen_entropy",
            "lower_bound",
            "measured_asymptotic_su2",
            "measured_asymptotic_sud",
            "min_gap"
        ]);
        assert_eq!(t.header.last().unwrap(), "config_hash");
    }

    #[test]
    fn window_average_near_gap_resolved_limit() {
        // A window spanning several of the slowest beat periods lands close
        // to the exact infinite-time value.
        let mut cfg = small_config();
        cfg.kicks = 2_000_000;
        cfg.asymptotic_window = (1_000_000, 2_000_000);
        cfg.asymptotic_samples = 4000;
        let params = cfg.params(3.0).unwrap();
        let (op, spectrum) = load_spectrum(&params, None, cfg.dim_cap).unwrap();
        let spec = cfg.ensemble_spec(EnsembleKind::Sud).unwrap();
        let spins = (params.top1.spin, params.top2.spin);
        let measured = window_average(
            &op,
            &spectrum,
            &spec,
            cfg.asymptotic_window,
            AsymptoticMethod::Spectral,
            cfg.asymptotic_samples,
            spins,
        )
        .unwrap();
        let exact: f64 = (0..spec.count)
            .map(|i| {
                let psi = spec.member(spins.0, spins.1, i, HaarMethod::Gaussian).flatten();
                asymptotic_entropy_resonant(&spectrum, &psi, 1e-8, 64).unwrap()
            })
            .sum::<f64>()
            / spec.count as f64;
        assert!((measured.mean - exact).abs() < 2e-2, "{} vs {exact}", measured.mean);
    }

    #[test]
    fn cache_and_checkpoints_do_not_change_numbers() {
        let cfg = small_config();
        let dir = tempfile::tempdir().unwrap();
        let cache = SpectrumCache::new(&dir.path().join("cache"));
        let ckpt = Checkpoints::new(&dir.path().join("ckpt"), &cfg.config_hash());
        let cold = run_asymptotic_sweep(&cfg, None, None).unwrap();
        let first = run_asymptotic_sweep(&cfg, Some(&cache), Some(&ckpt)).unwrap();
        let warm = run_asymptotic_sweep(&cfg, Some(&cache), Some(&ckpt)).unwrap();
        assert_eq!(cold, first);
        assert_eq!(first, warm);
    }

    #[test]
    fn scaling_grid_pairs_half_integer_neighbours() {
        let cfg = small_config();
        let rows = run_scaling_experiment(&cfg, None, None).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].j1.twice_j(), rows[0].j2.twice_j()), (1, 2));
        assert_eq!((rows[1].j1.twice_j(), rows[1].j2.twice_j()), (2, 3));
        assert!((rows[1].statistical_limit - statistical_limit(3, 4)).abs() < 1e-15);
    }

    #[test]
    fn eigen_sweep_tables() {
        let cfg = small_config();
        let reports = run_eigen_sweep(&cfg, None).unwrap();
        assert_eq!(eigen_summary_table(&cfg, &reports).rows.len(), 2);
        assert_eq!(eigen_detail_table(&reports[0].1, "h").rows.len(), 12);
    }
}
