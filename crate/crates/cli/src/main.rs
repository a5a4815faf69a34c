use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use kicktops::experiments::asymptotic::{asymptotic_table, eigen_detail_table, eigen_summary_table};
use kicktops::experiments::criteria::{self, SweepSettings};
use kicktops::experiments::evolution::{correlation_table_csv, rate_table, trace_table};
use kicktops::experiments::output::{fmt_f64, k_tag};
use kicktops::experiments::reports::{lyapunov_table, marginals_table, moments_table, run_lyapunov, run_moments};
use kicktops::experiments::{
    run_asymptotic_sweep, run_eigen_sweep, run_evolution_experiment, run_rate_experiment, run_scaling_experiment,
    Checkpoints, EnsembleSelection, ExperimentConfig, OutputDir, SpectrumCache, Table,
};

#[derive(Parser)]
#[command(name = "kicktops", version, about = "Entanglement production in coupled quantum kicked tops")]
struct Cli {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Comma-separated kick strengths (overrides `k_list`).
    #[arg(long, global = true, value_delimiter = ',')]
    k: Option<Vec<f64>>,
    #[arg(long, global = true)]
    ensemble: Option<EnsembleSelection>,
    /// Evolution horizon (overrides `kicks`).
    #[arg(long, global = true)]
    kicks: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ensemble-averaged linear entropy after every kick.
    Evolve,
    /// Initial growth rates, measured and second-order, plus correlation tables.
    Rates,
    /// Window-averaged asymptotic entanglement against eigenvector entanglement.
    Asymptotic {
        /// Sweep j₁ = j, j₂ = j + ½ over `scaling.j_list` instead of `k_list`.
        #[arg(long)]
        scaling: bool,
    },
    /// Eigenvector entanglement of the Floquet operator for every k.
    Eigen,
    /// Classical Lyapunov exponents for every k.
    Classical,
    /// Ensemble moments and marginal integrals.
    Moments,
    /// Run the acceptance criteria.
    Verify {
        /// Include the sweep-based criteria (several minutes).
        #[arg(long)]
        full: bool,
    },
    /// Print the resolved configuration as TOML.
    Config,
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(k) = &cli.k {
        cfg.k_list = k.clone();
    }
    if let Some(e) = cli.ensemble {
        cfg.ensemble.kind = e;
    }
    if let Some(kicks) = cli.kicks {
        cfg.kicks = kicks;
        if cfg.asymptotic_window.1 > kicks {
            let window = (kicks / 2, kicks);
            log::warn!("asymptotic window {:?} does not fit in {kicks} kicks; using {:?}", cfg.asymptotic_window, window);
            cfg.asymptotic_window = window;
        }
        cfg.fit_window = cfg.fit_window.min(kicks as usize);
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Run {
    cfg: ExperimentConfig,
    hash: String,
    out: OutputDir,
    ckpt: Checkpoints,
    cache: SpectrumCache,
}

impl Run {
    fn new(cfg: ExperimentConfig) -> Result<Self> {
        let hash = cfg.config_hash();
        let out = OutputDir::create(&cfg.output_dir, &hash)
            .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
        let ckpt = Checkpoints::new(&cfg.output_dir.join("checkpoints"), &hash);
        let cache = SpectrumCache::new(&cfg.cache_dir());
        kicktops::experiments::output::write_atomic(&cfg.output_dir.join("config.toml"), cfg.to_toml_string().as_bytes())?;
        log::info!("config hash {hash}, output in {}", cfg.output_dir.display());
        Ok(Run { cfg, hash, out, ckpt, cache })
    }

    fn write(&self, name: &str, table: &Table) -> Result<()> {
        let path = self.out.write_table(name, table)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        let path = self.out.write_manifest()?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn evolve(run: &Run) -> Result<()> {
    let traces = run_evolution_experiment(&run.cfg, Some(&run.ckpt))?;
    for tr in &traces {
        println!(
            "k = {:<5} {}  S(0) = {:.1e}  S({}) = {:.5}",
            tr.k,
            tr.ensemble.label(),
            tr.stats.mean[0],
            tr.stats.len() - 1,
            tr.stats.mean[tr.stats.len() - 1]
        );
    }
    run.write("evolution.csv", &trace_table(&traces))
}

fn rates(run: &Run) -> Result<()> {
    let reports = run_rate_experiment(&run.cfg, Some(&run.ckpt))?;
    for r in &reports {
        println!(
            "k = {:<5} {}  slope {:.4e}  (second order {:.4e}, strong chaos {:.4e})",
            r.k,
            r.ensemble.label(),
            r.measured.slope,
            r.perturbative.slope,
            r.strong_chaos_rate
        );
        let name = format!("correlations_{}_{}.csv", k_tag(r.k), r.ensemble.label());
        run.write(&name, &correlation_table_csv(&r.correlations, &run.hash))?;
    }
    run.write("rates.csv", &rate_table(&run.cfg, &reports))
}

fn asymptotic(run: &Run, scaling: bool) -> Result<()> {
    let rows = if scaling {
        run_scaling_experiment(&run.cfg, Some(&run.cache), Some(&run.ckpt))?
    } else {
        run_asymptotic_sweep(&run.cfg, Some(&run.cache), Some(&run.ckpt))?
    };
    let show = |a: Option<kicktops::experiments::asymptotic::EnsembleAverage>| {
        a.map_or("-".to_string(), |a| format!("{:.5}", a.mean))
    };
    for r in &rows {
        println!(
            "j = ({}, {}) k = {:<5} S_su2 = {}  S_sud = {}  S_eigen = {:.5}  bound = {:.5}{}",
            r.j1,
            r.j2,
            r.k,
            show(r.su2),
            show(r.sud),
            r.mean_eigen_entropy,
            r.lower_bound,
            if r.degenerate { "  (degenerate)" } else { "" }
        );
    }
    let name = if scaling { "scaling.csv" } else { "asymptotic.csv" };
    run.write(name, &asymptotic_table(&run.cfg, &rows))
}

fn eigen(run: &Run) -> Result<()> {
    let reports = run_eigen_sweep(&run.cfg, Some(&run.cache))?;
    for (k, r) in &reports {
        println!("k = {:<5} S_eigen = {:.5}  min gap {:.2e}", k, r.mean, r.min_gap);
        run.write(&format!("eigen_{}.csv", k_tag(*k)), &eigen_detail_table(r, &run.hash))?;
    }
    run.write("eigen.csv", &eigen_summary_table(&run.cfg, &reports))
}

fn classical(run: &Run) -> Result<()> {
    let estimates = run_lyapunov(&run.cfg)?;
    for e in &estimates {
        println!("k = {:<5} lambda = {} ± {}", e.k, fmt_f64(e.mean), fmt_f64(e.stderr));
    }
    run.write("lyapunov.csv", &lyapunov_table(&run.cfg, &estimates))
}

fn moments(run: &Run) -> Result<()> {
    let report = run_moments(&run.cfg)?;
    let table = moments_table(&run.cfg, &report);
    let pass = table.column("pass").expect("pass column");
    let failed = table.rows.iter().filter(|r| r[pass] != "true").count();
    println!("{} moments, {failed} outside 3 standard errors", table.rows.len());
    run.write("moments.csv", &table)?;
    run.write("marginals.csv", &marginals_table(&run.cfg, &report))
}

fn verify(full: bool) -> Result<bool> {
    let reports = criteria::run_all(full, SweepSettings::default())?;
    for r in &reports {
        println!("{}", r.line());
        for d in &r.details {
            println!("    {d}");
        }
    }
    if !full {
        println!("criteria 4, 6 and 8 skipped (pass --full to run them)");
    }
    Ok(reports.iter().all(|r| r.pass))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    kicktops::linalg::use_sequential_kernels();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    if let Command::Verify { full } = cli.command {
        return verify(full);
    }
    let cfg = resolve_config(&cli)?;
    if let Command::Config = cli.command {
        print!("{}", cfg.to_toml_string());
        return Ok(true);
    }
    let run = Run::new(cfg)?;
    match cli.command {
        Command::Evolve => evolve(&run)?,
        Command::Rates => rates(&run)?,
        Command::Asymptotic { scaling } => asymptotic(&run, scaling)?,
        Command::Eigen => eigen(&run)?,
        Command::Classical => classical(&run)?,
        Command::Moments => moments(&run)?,
        Command::Verify { .. } | Command::Config => unreachable!("handled above"),
    }
    run.finish()?;
    Ok(true)
}
