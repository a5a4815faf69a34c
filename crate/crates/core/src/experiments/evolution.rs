use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::output::{fmt_f64, k_tag, Checkpoints, Table};
use crate::floquet::{build_coupled_step_capped, CoupledParams, CouplingScale, Propagator};
use crate::perturbative::{
    correlation_table_ensemble, perturbative_entropy, strong_chaos_rate, CorrelationTable, EnsembleProduct,
    Estimator,
};
use crate::spin::SpinQuantum;
use crate::states::{EnsembleKind, EnsembleSpec, HaarMethod};
use crate::{Error, Result};

/// Per-kick ensemble statistics of the linear entropy, `n = 0..=kicks`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl TraceStats {
    /// Statistics over per-member series, combined in member order so the
    /// result does not depend on scheduling.
    pub fn from_series(series: &[Vec<f64>]) -> Self {
        let count = series.len();
        let len = series.first().map_or(0, |s| s.len());
        let mut stats = TraceStats {
            mean: vec![0.0; len],
            stderr: vec![0.0; len],
            min: vec![f64::INFINITY; len],
            max: vec![f64::NEG_INFINITY; len],
        };
        for s in series {
            assert_eq!(s.len(), len, "series of unequal length");
            for (n, &v) in s.iter().enumerate() {
                stats.mean[n] += v;
                stats.min[n] = stats.min[n].min(v);
                stats.max[n] = stats.max[n].max(v);
            }
        }
        for m in &mut stats.mean {
            *m /= count as f64;
        }
        if count > 1 {
            for s in series {
                for (n, &v) in s.iter().enumerate() {
                    stats.stderr[n] += (v - stats.mean[n]).powi(2);
                }
            }
            let scale = 1.0 / ((count - 1) as f64 * count as f64);
            for e in &mut stats.stderr {
                *e = (*e * scale).sqrt();
            }
        }
        stats
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementTrace {
    pub k: f64,
    pub epsilon: f64,
    pub j1: SpinQuantum,
    pub j2: SpinQuantum,
    pub ensemble: EnsembleKind,
    pub count: usize,
    pub seed: u64,
    pub coupling_scale: CouplingScale,
    pub config_hash: String,
    pub stats: TraceStats,
}

impl EntanglementTrace {
    pub fn fit_initial_rate(&self, fit_window: usize) -> Result<RateFit> {
        fit_initial_rate(&self.stats.mean, fit_window)
    }
}

/// Linear entropy after every kick for one state.
pub fn entropy_series(
    op: &crate::floquet::FloquetOperator,
    psi: &crate::states::PureState,
    kicks: u64,
) -> Result<Vec<f64>> {
    let mut prop = Propagator::new(op, psi)?;
    let mut out = Vec::with_capacity(kicks as usize + 1);
    out.push(prop.linear_entropy());
    for _ in 0..kicks {
        prop.step();
        out.push(prop.linear_entropy());
    }
    Ok(out)
}

/// Evolve every member of the ensemble for `kicks` steps.
pub fn evolve_ensemble(params: &CoupledParams, spec: &EnsembleSpec, kicks: u64, dim_cap: usize) -> Result<TraceStats> {
    let op = build_coupled_step_capped(params, dim_cap)?;
    let (s1, s2) = (params.top1.spin, params.top2.spin);
    let series: Vec<Vec<f64>> = (0..spec.count)
        .into_par_iter()
        .map(|i| entropy_series(&op, &spec.member(s1, s2, i, HaarMethod::Gaussian).flatten(), kicks))
        .collect::<Result<_>>()?;
    Ok(TraceStats::from_series(&series))
}

pub fn run_evolution_experiment(cfg: &ExperimentConfig, ckpt: Option<&Checkpoints>) -> Result<Vec<EntanglementTrace>> {
    cfg.validate()?;
    let hash = cfg.config_hash();
    let mut traces = Vec::new();
    for &k in &cfg.k_list {
        let params = cfg.params(k)?;
        for kind in cfg.ensemble.kind.kinds() {
            let spec = cfg.ensemble_spec(kind)?;
            let name = format!("evolve_{}_{}", k_tag(k), kind.label());
            let stats = match ckpt.and_then(|c| c.load::<TraceStats>(&name)) {
                Some(s) => s,
                None => {
                    log::info!("evolving {} {} states at k = {k} for {} kicks", spec.count, kind.label(), cfg.kicks);
                    let s = evolve_ensemble(&params, &spec, cfg.kicks, cfg.dim_cap)?;
                    if let Some(c) = ckpt {
                        c.store(&name, &s)?;
                    }
                    s
                }
            };
            traces.push(EntanglementTrace {
                k,
                epsilon: cfg.epsilon,
                j1: cfg.j1,
                j2: cfg.j2,
                ensemble: kind,
                count: spec.count,
                seed: spec.seed,
                coupling_scale: cfg.coupling_scale,
                config_hash: hash.clone(),
                stats,
            });
        }
    }
    Ok(traces)
}

pub fn trace_table(traces: &[EntanglementTrace]) -> Table {
    let mut t = Table::new(&[
        "k",
        "ensemble",
        "kick",
        "mean_linear_entropy",
        "stderr",
        "min",
        "max",
        "epsilon",
        "j1",
        "j2",
        "coupling_scale",
        "count",
        "seed",
        "config_hash",
    ]);
    for tr in traces {
        for n in 0..tr.stats.len() {
            t.push(vec![
                fmt_f64(tr.k),
                tr.ensemble.label().into(),
                n.to_string(),
                fmt_f64(tr.stats.mean[n]),
                fmt_f64(tr.stats.stderr[n]),
                fmt_f64(tr.stats.min[n]),
                fmt_f64(tr.stats.max[n]),
                fmt_f64(tr.epsilon),
                tr.j1.to_string(),
                tr.j2.to_string(),
                tr.coupling_scale.label().into(),
                tr.count.to_string(),
                tr.seed.to_string(),
                tr.config_hash.clone(),
            ]);
        }
    }
    t
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// All fitted values equal: slope forced to zero.
    pub degenerate: bool,
}

/// Ordinary least squares.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Parameter(format!("line fit needs two or more paired points, got {}", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Parameter("line fit needs distinct abscissae".into()));
    }
    let spread = ys.iter().fold(0.0f64, |acc, y| acc.max((y - ys[0]).abs()));
    if spread == 0.0 {
        return Ok(RateFit { slope: 0.0, intercept: my, r2: 1.0, degenerate: true });
    }
    let slope = sxy / sxx;
    Ok(RateFit { slope, intercept: my - slope * mx, r2: sxy * sxy / (sxx * syy), degenerate: false })
}

/// Line through `(n, values[n])` for `n = 1..=fit_window`; the initial point
/// is left out.
pub fn fit_initial_rate(values: &[f64], fit_window: usize) -> Result<RateFit> {
    if fit_window < 2 || values.len() <= fit_window {
        return Err(Error::Parameter(format!(
            "rate fit over {fit_window} kicks needs a trace of at least {} points, got {}",
            fit_window + 1,
            values.len()
        )));
    }
    let xs: Vec<f64> = (1..=fit_window).map(|n| n as f64).collect();
    fit_line(&xs, &values[1..=fit_window])
}

#[derive(Clone, Debug)]
pub struct RateReport {
    pub k: f64,
    pub ensemble: EnsembleKind,
    pub measured: RateFit,
    pub measured_series: Vec<f64>,
    pub perturbative: RateFit,
    pub perturbative_series: Vec<f64>,
    pub strong_chaos_rate: f64,
    pub correlations: CorrelationTable,
}

#[derive(Serialize, Deserialize)]
struct RateCell {
    measured: Vec<f64>,
}

/// Initial-growth fits per `(k, ensemble)`, measured and second-order.
pub fn run_rate_experiment(cfg: &ExperimentConfig, ckpt: Option<&Checkpoints>) -> Result<Vec<RateReport>> {
    cfg.validate()?;
    let horizon = cfg.fit_window;
    let mut out = Vec::new();
    for &k in &cfg.k_list {
        let params = cfg.params(k)?;
        for kind in cfg.ensemble.kind.kinds() {
            let spec = cfg.ensemble_spec(kind)?;
            let name = format!("rates_{}_{}", k_tag(k), kind.label());
            let measured_series = match ckpt.and_then(|c| c.load::<RateCell>(&name)) {
                Some(cell) => cell.measured,
                None => {
                    let series = evolve_ensemble(&params, &spec, horizon as u64, cfg.dim_cap)?.mean;
                    if let Some(c) = ckpt {
                        c.store(&name, &RateCell { measured: series.clone() })?;
                    }
                    series
                }
            };
            let table = correlation_table_ensemble(
                &params,
                &spec,
                horizon,
                Estimator::default(),
                EnsembleProduct::default(),
            )?;
            let perturbative_series =
                (0..=horizon).map(|t| perturbative_entropy(&params, &table, t)).collect::<Result<Vec<_>>>()?;
            out.push(RateReport {
                k,
                ensemble: kind,
                measured: fit_initial_rate(&measured_series, horizon)?,
                perturbative: fit_initial_rate(&perturbative_series, horizon)?,
                measured_series,
                perturbative_series,
                strong_chaos_rate: strong_chaos_rate(&params),
                correlations: table,
            });
        }
    }
    Ok(out)
}

pub fn rate_table(cfg: &ExperimentConfig, reports: &[RateReport]) -> Table {
    let hash = cfg.config_hash();
    let mut t = Table::new(&[
        "k",
        "ensemble",
        "slope",
        "intercept",
        "r2",
        "degenerate_fit",
        "perturbative_slope",
        "strong_chaos_rate",
        "fit_window",
        "epsilon",
        "j1",
        "j2",
        "coupling_scale",
        "config_hash",
    ]);
    for r in reports {
        t.push(vec![
            fmt_f64(r.k),
            r.ensemble.label().into(),
            fmt_f64(r.measured.slope),
            fmt_f64(r.measured.intercept),
            fmt_f64(r.measured.r2),
            r.measured.degenerate.to_string(),
            fmt_f64(r.perturbative.slope),
            fmt_f64(r.strong_chaos_rate),
            cfg.fit_window.to_string(),
            fmt_f64(cfg.epsilon),
            cfg.j1.to_string(),
            cfg.j2.to_string(),
            cfg.coupling_scale.label().into(),
            hash.clone(),
        ]);
    }
    t
}

/// `n,m,C1,C2,D` (real parts) followed by the imaginary parts.
pub fn correlation_table_csv(table: &CorrelationTable, config_hash: &str) -> Table {
    let mut t = Table::new(&["n", "m", "C1", "C2", "D", "C1_im", "C2_im", "D_im", "config_hash"]);
    for n in 0..=table.horizon {
        for m in 0..=table.horizon {
            let (c1, c2, d) = (table.c1(n, m), table.c2(n, m), table.d(n, m));
            t.push(vec![
                n.to_string(),
                m.to_string(),
                fmt_f64(c1.re),
                fmt_f64(c2.re),
                fmt_f64(d.re),
                fmt_f64(c1.im),
                fmt_f64(c2.im),
                fmt_f64(d.im),
                config_hash.to_string(),
            ]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::statistical_limit;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            j1: SpinQuantum::new(2.0).unwrap(),
            j2: SpinQuantum::new(2.5).unwrap(),
            epsilon: 0.05,
            k_list: vec![3.0],
            kicks: 60,
            asymptotic_window: (30, 60),
            fit_window: 10,
            ensemble: super::super::config::EnsembleConfig {
                kind: super::super::config::EnsembleSelection::Both,
                count: 6,
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn exact_line_fits_exactly() {
        let values: Vec<f64> = (0..20).map(|n| 0.002 * n as f64).collect();
        let fit = fit_initial_rate(&values, 15).unwrap();
        assert!((fit.slope - 0.002).abs() < 1e-15);
        assert!(fit.intercept.abs() < 1e-15);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(!fit.degenerate);
    }

    #[test]
    fn zero_point_is_excluded() {
        let mut values: Vec<f64> = (0..16).map(|n| 0.5 + 0.01 * n as f64).collect();
        values[0] = 100.0;
        let fit = fit_initial_rate(&values, 15).unwrap();
        assert!((fit.slope - 0.01).abs() < 1e-12);
    }

    #[test]
    fn flat_trace_is_flagged() {
        let fit = fit_initial_rate(&[0.3; 10], 5).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn short_trace_rejected() {
        assert!(fit_initial_rate(&[0.0; 15], 15).is_err());
    }

    #[test]
    fn stats_match_hand_values() {
        let s = TraceStats::from_series(&[vec![0.0, 1.0], vec![0.0, 3.0]]);
        assert_eq!(s.mean, vec![0.0, 2.0]);
        assert_eq!(s.min, vec![0.0, 1.0]);
        assert_eq!(s.max, vec![0.0, 3.0]);
        // Sample std √2, standard error √2/√2 = 1.
        assert!((s.stderr[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn traces_start_unentangled_and_stay_bounded() {
        let cfg = small_config();
        let traces = run_evolution_experiment(&cfg, None).unwrap();
        assert_eq!(traces.len(), 2);
        let ceiling = 1.0 - 1.0 / 5.0;
        for tr in &traces {
            assert_eq!(tr.stats.len(), 61);
            assert!(tr.stats.mean[0] < 1e-10);
            assert!(tr.stats.max.iter().all(|&v| (0.0..=ceiling + 1e-12).contains(&v)));
            assert!(tr.stats.mean[60] > 0.01);
        }
        assert!(statistical_limit(5, 6) < ceiling);
    }

    #[test]
    fn uncoupled_traces_vanish() {
        let mut cfg = small_config();
        cfg.epsilon = 0.0;
        for tr in run_evolution_experiment(&cfg, None).unwrap() {
            assert!(tr.stats.max.iter().all(|&v| v < 1e-10));
        }
    }

    #[test]
    fn evolution_is_deterministic_and_resumable() {
        let cfg = small_config();
        let dir = tempfile::tempdir().unwrap();
        let ckpt = Checkpoints::new(dir.path(), &cfg.config_hash());
        let first = run_evolution_experiment(&cfg, Some(&ckpt)).unwrap();
        let second = run_evolution_experiment(&cfg, None).unwrap();
        let resumed = run_evolution_experiment(&cfg, Some(&ckpt)).unwrap();
        assert_eq!(trace_table(&first).to_bytes().unwrap(), trace_table(&second).to_bytes().unwrap());
        assert_eq!(first, resumed);
    }

    #[test]
    fn rate_reports_cover_every_cell() {
        let cfg = small_config();
        let reports = run_rate_experiment(&cfg, None).unwrap();
        assert_eq!(reports.len(), 2);
        for r in &reports {
            assert_eq!(r.measured_series.len(), cfg.fit_window + 1);
            assert_eq!(r.perturbative_series[0], 0.0);
            assert!(r.measured.slope > 0.0 && r.perturbative.slope > 0.0);
        }
        let table = rate_table(&cfg, &reports);
        assert_eq!(table.rows.len(), 2);
        let csv = correlation_table_csv(&reports[0].correlations, "h");
        assert_eq!(csv.rows.len(), (cfg.fit_window + 1).pow(2));
    }
}
