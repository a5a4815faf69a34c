use super::config::ExperimentConfig;
use super::output::{fmt_f64, Table};
use crate::classical::{lyapunov_exponent, LyapunovEstimate, LyapunovOptions};
use crate::moments::{
    marginal_integrals, monte_carlo_moment, Axis, MarginalIntegrals, MomentKind, MomentResult,
    DEFAULT_QUADRATURE_TOL,
};
use crate::Result;

pub const MOMENT_SIGMAS: f64 = 3.0;
pub const QUADRATURE_REL_TOL: f64 = 1e-8;

pub fn run_lyapunov(cfg: &ExperimentConfig) -> Result<Vec<LyapunovEstimate>> {
    let opts = LyapunovOptions {
        n_points: cfg.classical.n_points,
        n_steps: cfg.classical.n_steps,
        ..LyapunovOptions::default()
    };
    cfg.k_list.iter().map(|&k| lyapunov_exponent(k, cfg.seed, &opts)).collect()
}

pub fn lyapunov_table(cfg: &ExperimentConfig, estimates: &[LyapunovEstimate]) -> Table {
    let hash = cfg.config_hash();
    let mut t = Table::new(&["k", "lyapunov", "stderr", "n_points", "n_steps", "config_hash"]);
    for e in estimates {
        t.push(vec![
            fmt_f64(e.k),
            fmt_f64(e.mean),
            fmt_f64(e.stderr),
            e.n_points.to_string(),
            e.n_steps.to_string(),
            hash.clone(),
        ]);
    }
    t
}

#[derive(Clone, Debug)]
pub struct MomentsReport {
    pub moments: Vec<MomentResult>,
    pub marginals: Vec<MarginalIntegrals>,
}

pub fn run_moments(cfg: &ExperimentConfig) -> Result<MomentsReport> {
    let mut moments = Vec::new();
    let mut marginals = Vec::new();
    for &spin in &cfg.moments.j_list {
        for kind in MomentKind::ALL {
            moments.push(monte_carlo_moment(kind, spin, Axis::Z, cfg.moments.samples, cfg.seed)?);
        }
        if spin.twice_j() > 0 {
            marginals.push(marginal_integrals(spin, DEFAULT_QUADRATURE_TOL)?);
        }
    }
    Ok(MomentsReport { moments, marginals })
}

pub fn moments_table(cfg: &ExperimentConfig, report: &MomentsReport) -> Table {
    let hash = cfg.config_hash();
    let mut t = Table::new(&["kind", "j", "analytic", "mc_mean", "mc_stderr", "samples", "pass", "config_hash"]);
    for m in &report.moments {
        t.push(vec![
            m.kind.label().into(),
            fmt_f64(m.j),
            fmt_f64(m.analytic),
            fmt_f64(m.monte_carlo_mean),
            fmt_f64(m.monte_carlo_stderr),
            m.samples.to_string(),
            m.passes(MOMENT_SIGMAS).to_string(),
            hash.clone(),
        ]);
    }
    t
}

pub fn marginals_table(cfg: &ExperimentConfig, report: &MomentsReport) -> Table {
    let hash = cfg.config_hash();
    let mut t = Table::new(&[
        "j",
        "x4_analytic",
        "x4_quadrature",
        "x2y2_analytic",
        "x2y2_quadrature",
        "p1_norm",
        "p2_norm",
        "max_relative_error",
        "pass",
        "config_hash",
    ]);
    for m in &report.marginals {
        t.push(vec![
            fmt_f64(m.j),
            fmt_f64(m.x4_analytic),
            fmt_f64(m.x4_quadrature),
            fmt_f64(m.x2y2_analytic),
            fmt_f64(m.x2y2_quadrature),
            fmt_f64(m.p1_norm),
            fmt_f64(m.p2_norm),
            fmt_f64(m.max_relative_error()),
            (m.max_relative_error() <= QUADRATURE_REL_TOL).to_string(),
            hash.clone(),
        ]);
    }
    t
}
