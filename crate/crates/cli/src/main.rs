//! `hppr`: runs Helmholtz refinement, pollution, estimator and critical mesh
//! size studies and writes their results as CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use helmholtz_ppr::mesh::AlphaFit;
use helmholtz_ppr::study::{
    loglog_slope, run_critical_h, run_dump_matrix, run_estimator_only, run_mesh_report, run_pollution_scan,
    run_refinement_study, StudyConfig, StudyError,
};
use helmholtz_ppr::analytic::ProblemKind;

#[derive(Parser)]
#[command(name = "hppr", version, about = "Linear FEM for the 2D Helmholtz equation with PPR gradient recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refinement study against the exact Bessel solution.
    Study(Opts),
    /// Fixed k·h scan over wave numbers on the hexagon.
    Pollution(Opts),
    /// Estimator-only study (defaults to the Gaussian source problem).
    Estimate(Opts),
    /// Critical mesh size h(k, eps) on the hexagon family.
    CriticalH(Opts),
    /// Approximation-condition diagnostics of the level meshes.
    MeshReport(Opts),
    /// Writes the system matrix of the first level in Matrix Market format.
    DumpMatrix(Opts),
}

/// Every option may also be given in the `--config` file as `name = value`;
/// flags override the file.
#[derive(Args, Clone, Default)]
struct Opts {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// hexagon, square or lshape.
    #[arg(long)]
    domain: Option<String>,
    /// bessel or gaussian.
    #[arg(long)]
    problem: Option<String>,
    /// structured, delaunay or file:<path>.
    #[arg(long)]
    mesh: Option<String>,
    /// Comma-separated wave numbers.
    #[arg(long)]
    k: Option<String>,
    /// `a..b`: subdivisions m (structured, doubling) or refinement counts.
    #[arg(long)]
    levels: Option<String>,
    /// k·h for pollution scans.
    #[arg(long)]
    kh: Option<String>,
    /// Relative error threshold for critical-h.
    #[arg(long)]
    eps: Option<String>,
    /// ne or nw.
    #[arg(long)]
    diagonal: Option<String>,
    /// direct or iterative.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long = "solve-tol")]
    solve_tol: Option<String>,
    /// Triangle quadrature degree for the load vector.
    #[arg(long = "quad-load")]
    quad_load: Option<String>,
    /// Triangle quadrature degree for error norms.
    #[arg(long = "quad-err")]
    quad_err: Option<String>,
    /// Boundary spacing of the initial Delaunay mesh.
    #[arg(long = "target-h")]
    target_h: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Finest hexagon subdivision for critical-h.
    #[arg(long = "max-m")]
    max_m: Option<String>,
    /// Output file.
    #[arg(long)]
    out: Option<String>,
    /// Allow runs beyond desk scale.
    #[arg(long)]
    slow: bool,
}

impl Opts {
    fn into_config(self, defaults: StudyConfig) -> Result<StudyConfig, StudyError> {
        let mut cfg = defaults;
        if let Some(path) = &self.config {
            cfg.apply_config_text(&std::fs::read_to_string(path)?)?;
        }
        let flags = [
            ("domain", self.domain),
            ("problem", self.problem),
            ("mesh", self.mesh),
            ("k", self.k),
            ("levels", self.levels),
            ("kh", self.kh),
            ("eps", self.eps),
            ("diagonal", self.diagonal),
            ("solver", self.solver),
            ("solve-tol", self.solve_tol),
            ("quad-load", self.quad_load),
            ("quad-err", self.quad_err),
            ("target-h", self.target_h),
            ("seed", self.seed),
            ("max-m", self.max_m),
            ("out", self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        if self.slow {
            cfg.slow = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn fmt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into())
}

fn run(cli: Cli) -> Result<u8, StudyError> {
    match cli.command {
        Command::Study(o) => {
            let cfg = o.into_config(StudyConfig::default())?;
            let out = run_refinement_study(&cfg)?;
            println!("{:>6} {:>6} {:>9} {:>11} {:>11} {:>11} {:>11} {:>11} {:>7}", "k", "m", "dof", "fem", "ppr", "rppr", "eta", "eff", "status");
            for r in &out.records {
                println!(
                    "{:>6} {:>6} {:>9} {:>11} {:>11} {:>11} {:>11} {:>11} {}",
                    r.k,
                    r.m,
                    r.dof,
                    fmt(r.rel_h1_fem),
                    fmt(r.rel_grad_ppr),
                    fmt(r.rel_grad_rppr),
                    fmt(r.eta),
                    r.effectivity.map(|e| format!("{e:.4}")).unwrap_or_else(|| "-".into()),
                    r.status
                );
            }
            Ok(if out.failures > 0 { 2 } else { 0 })
        }
        Command::Estimate(o) => {
            let defaults = StudyConfig { problem: ProblemKind::GaussianSource, ks: vec![30.0], ..Default::default() };
            let cfg = o.into_config(defaults)?;
            let out = run_estimator_only(&cfg)?;
            println!("{:>6} {:>6} {:>9} {:>11} {:>7}", "k", "m", "dof", "eta", "status");
            for r in &out.records {
                println!("{:>6} {:>6} {:>9} {:>11} {}", r.k, r.m, r.dof, fmt(r.eta), r.status);
            }
            Ok(if out.failures > 0 { 2 } else { 0 })
        }
        Command::Pollution(o) => {
            let defaults = StudyConfig { domain: helmholtz_ppr::analytic::DomainTag::Hexagon, ks: vec![20.0, 30.0, 40.0, 50.0, 60.0], ..Default::default() };
            let cfg = o.into_config(defaults)?;
            let (records, failures) = run_pollution_scan(&cfg)?;
            println!("{:>6} {:>6} {:>9} {:>11} {:>11} {:>11} {:>7}", "k", "m", "dof", "fem", "ppr", "ppr-diff", "status");
            for r in &records {
                println!(
                    "{:>6} {:>6} {:>9} {:>11} {:>11} {:>11} {}",
                    r.k,
                    r.m,
                    r.dof,
                    fmt(r.rel_h1_fem),
                    fmt(r.rel_grad_ppr),
                    fmt(r.rel_grad_diff_ppr),
                    r.status
                );
            }
            Ok(if failures > 0 { 2 } else { 0 })
        }
        Command::CriticalH(o) => {
            let defaults = StudyConfig { domain: helmholtz_ppr::analytic::DomainTag::Hexagon, ks: vec![25.0, 50.0, 100.0], ..Default::default() };
            let cfg = o.into_config(defaults)?;
            let results = run_critical_h(&cfg)?;
            let mut ok = (Vec::new(), Vec::new());
            println!("{:>8} {:>6} {:>6} {:>11} {:>7}", "k", "eps", "m", "h", "solves");
            for (k, r) in &results {
                match r {
                    Ok(c) => {
                        println!("{:>8} {:>6} {:>6} {:>11.4e} {:>7}", k, c.eps, c.m, c.h, c.evaluations.len());
                        ok.0.push(*k);
                        ok.1.push(c.h);
                    }
                    Err(e) => println!("{k:>8} error: {e}"),
                }
            }
            if ok.0.len() >= 2 {
                println!("slope of log h against log k: {:.3}", loglog_slope(&ok.0, &ok.1));
            }
            Ok(if ok.0.len() < results.len() { 2 } else { 0 })
        }
        Command::MeshReport(o) => {
            let cfg = o.into_config(StudyConfig::default())?;
            let (levels, report) = run_mesh_report(&cfg)?;
            println!("{:>6} {:>11} {:>9} {:>14} {:>14}", "m", "h", "nodes", "interior", "boundary");
            for ((m, h, nodes), d) in levels.iter().zip(&report.levels) {
                println!("{m:>6} {h:>11.4e} {nodes:>9} {:>14.4e} {:>14.4e}", d.max_interior_defect, d.max_boundary_defect);
            }
            let show = |a: &Option<AlphaFit>| match a {
                None => "not fitted (needs 3 levels)".to_string(),
                Some(AlphaFit::Exact) => "exact (defect 0)".to_string(),
                Some(AlphaFit::Fitted(v)) => format!("{:.3}", if v.abs() < 5e-4 { 0.0 } else { *v }),
            };
            println!("alpha (interior parallelograms): {}", show(&report.fitted_alpha));
            println!("alpha (boundary isosceles):      {}", show(&report.fitted_alpha_boundary));
            Ok(0)
        }
        Command::DumpMatrix(o) => {
            let cfg = o.into_config(StudyConfig::default())?;
            let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("matrix.mtx"));
            let (n, nnz) = run_dump_matrix(&cfg, &out)?;
            println!("wrote {n}x{n} matrix with {nnz} entries to {}", out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are configuration errors; help and version are not.
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
