//! Configuration-driven studies: refinement tables, pollution scans,
//! estimator-only runs and critical mesh sizes, with CSV output.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analytic::{exact_unchecked, AnalyticError, DomainTag, ProblemKind, ProblemSpec};
use crate::assembly::{assemble_helmholtz, AssemblyError, LoadQuadrature};
use crate::extrapolate::{extrapolated_fem_gradient, extrapolated_recovery, ExtrapolateError, LevelPair};
use crate::field::{NodalField, VectorNodalField};
use crate::mesh::{
    alpha_report, build_hexagon_mesh, build_square_mesh, delaunay_mesh, read_mesh, refine_red, Diagonal, Mesh, MeshError,
    MeshQualityReport, ParentMap, SquareDomain,
};
use crate::metrics::{
    critical_mesh_size, exact_errors, grad_diff_l2, observed_order, reference_norms, ConvergenceRecord, CriticalMeshSize,
    CriticalQuantity, CriticalSearch, MetricsError, ERROR_QUAD_DEGREE,
};
use crate::recovery::{RecoveryError, RecoveryOperator};
use crate::solve::{solve, SolveError, SolveOptions, SolverKind};

/// Header of the refinement-study CSV.
pub const CSV_HEADER: [&str; 16] = [
    "k",
    "m",
    "h",
    "dof",
    "rel_h1_fem",
    "rel_l2_fem",
    "rel_energy_fem",
    "rel_grad_ppr",
    "rel_grad_rppr",
    "rel_grad_ppr_interp",
    "rel_grad_rfem",
    "eta",
    "effectivity",
    "order_fem",
    "order_ppr",
    "status",
];

/// Header of the pollution-scan CSV.
pub const POLLUTION_HEADER: [&str; 10] =
    ["k", "m", "h", "dof", "rel_h1_fem", "rel_l2_fem", "rel_energy_fem", "rel_grad_ppr", "rel_grad_diff_ppr", "status"];

/// Header of the critical-mesh-size CSV.
pub const CRITICAL_HEADER: [&str; 6] = ["k", "eps", "m", "h", "solves", "status"];

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error(transparent)]
    Extrapolate(#[from] ExtrapolateError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn config_err(msg: impl Into<String>) -> StudyError {
    StudyError::Config(msg.into())
}

/// Where the level meshes come from.
#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    /// Uniform hexagon or square meshes; levels are subdivision counts `m`.
    Structured,
    /// A seeded Delaunay mesh of the domain polygon; levels count red
    /// refinements of it.
    Delaunay,
    /// A mesh file; levels count red refinements of it.
    File(PathBuf),
}

impl FromStr for MeshSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "structured" => Ok(MeshSource::Structured),
            "delaunay" => Ok(MeshSource::Delaunay),
            _ => match s.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(MeshSource::File(PathBuf::from(path))),
                _ => Err(format!("unknown mesh source {s:?} (expected structured, delaunay or file:<path>)")),
            },
        }
    }
}

fn parse_domain(s: &str) -> Result<DomainTag, String> {
    match s {
        "hexagon" => Ok(DomainTag::Hexagon),
        "square" => Ok(DomainTag::UnitSquare),
        "lshape" => Ok(DomainTag::LShape),
        _ => Err(format!("unknown domain {s:?} (expected hexagon, square or lshape)")),
    }
}

fn parse_problem(s: &str) -> Result<ProblemKind, String> {
    match s {
        "bessel" => Ok(ProblemKind::BesselExact),
        "gaussian" => Ok(ProblemKind::GaussianSource),
        _ => Err(format!("unknown problem {s:?} (expected bessel or gaussian)")),
    }
}

fn parse_diagonal(s: &str) -> Result<Diagonal, String> {
    match s {
        "ne" => Ok(Diagonal::NorthEast),
        "nw" => Ok(Diagonal::NorthWest),
        _ => Err(format!("unknown diagonal {s:?} (expected ne or nw)")),
    }
}

/// Parses `a..b` (inclusive) or a single value `a`.
pub fn parse_levels(s: &str) -> Result<(usize, usize), String> {
    let bad = || format!("bad level range {s:?} (expected a..b)");
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let a = s.trim().parse().map_err(|_| bad())?;
            (a, a)
        }
    };
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

/// Parses a comma-separated list of wave numbers.
pub fn parse_k_list(s: &str) -> Result<Vec<f64>, String> {
    let ks: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad wave number {t:?}")))
        .collect::<Result<_, _>>()?;
    if ks.is_empty() || ks.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
        return Err(format!("wave numbers must be positive: {s:?}"));
    }
    Ok(ks)
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("bad value {v:?} for {key}"))
}

/// Everything a study needs.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub domain: DomainTag,
    pub problem: ProblemKind,
    pub ks: Vec<f64>,
    /// Subdivision counts `m` (structured meshes, doubling from the first)
    /// or refinement counts (Delaunay and file meshes).
    pub levels: (usize, usize),
    pub mesh: MeshSource,
    pub diagonal: Diagonal,
    /// Target boundary spacing of Delaunay meshes.
    pub target_h: f64,
    pub solver: SolveOptions,
    pub quad_load: LoadQuadrature,
    pub quad_err: usize,
    /// `k·h` for pollution scans.
    pub kh: f64,
    /// Error threshold for critical mesh sizes.
    pub eps: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Finest hexagon subdivision tried by the critical-mesh-size search.
    pub max_m: usize,
    /// Lift the desk-scale size guard.
    pub slow: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            domain: DomainTag::UnitSquare,
            problem: ProblemKind::BesselExact,
            ks: vec![10.0],
            levels: (8, 128),
            mesh: MeshSource::Structured,
            diagonal: Diagonal::NorthEast,
            target_h: 0.15,
            solver: SolveOptions::default(),
            quad_load: LoadQuadrature::default(),
            quad_err: ERROR_QUAD_DEGREE,
            kh: 1.0,
            eps: 0.5,
            seed: 0,
            out: None,
            max_m: 512,
            slow: false,
        }
    }
}

/// Largest number of unknowns accepted without `slow`.
pub const DESK_SCALE_DOF: usize = 1_100_000;

impl StudyConfig {
    /// Sets one option by its flag name (without leading dashes).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), StudyError> {
        let v = value.trim();
        match key.trim() {
            "domain" => self.domain = parse_domain(v).map_err(config_err)?,
            "problem" => self.problem = parse_problem(v).map_err(config_err)?,
            "k" => self.ks = parse_k_list(v).map_err(config_err)?,
            "levels" => self.levels = parse_levels(v).map_err(config_err)?,
            "mesh" => self.mesh = v.parse().map_err(config_err)?,
            "diagonal" => self.diagonal = parse_diagonal(v).map_err(config_err)?,
            "target-h" => self.target_h = parse_num(key, v).map_err(config_err)?,
            "solver" => self.solver.kind = v.parse::<SolverKind>().map_err(config_err)?,
            "solve-tol" => self.solver.tol = parse_num(key, v).map_err(config_err)?,
            "quad-load" => self.quad_load.triangle = parse_num(key, v).map_err(config_err)?,
            "quad-err" => self.quad_err = parse_num(key, v).map_err(config_err)?,
            "kh" => self.kh = parse_num(key, v).map_err(config_err)?,
            "eps" => self.eps = parse_num(key, v).map_err(config_err)?,
            "seed" => self.seed = parse_num(key, v).map_err(config_err)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "max-m" => self.max_m = parse_num(key, v).map_err(config_err)?,
            "slow" => self.slow = parse_num(key, v).map_err(config_err)?,
            other => return Err(config_err(format!("unknown option {other:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file; `#` starts a comment.
    pub fn apply_config_text(&mut self, text: &str) -> Result<(), StudyError> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| config_err(format!("line {}: expected `key = value`", no + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        if self.ks.is_empty() || self.ks.iter().any(|&k| !(k >= 1.0)) {
            return Err(config_err("wave numbers must be at least 1"));
        }
        if self.mesh == MeshSource::Structured {
            let (a, b) = self.levels;
            if a == 0 || b % a != 0 || !(b / a).is_power_of_two() {
                return Err(config_err(format!("structured levels {a}..{b} must double from a positive m")));
            }
            if self.domain == DomainTag::LShape && a % 2 == 1 {
                return Err(config_err("the L-shaped domain needs even m"));
            }
        }
        if self.domain == DomainTag::Custom && !matches!(self.mesh, MeshSource::File(_)) {
            return Err(config_err("a custom domain needs a mesh file"));
        }
        if !(self.target_h > 0.0) || !(self.kh > 0.0) || !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(config_err("target-h and kh must be positive, eps must lie in (0, 1)"));
        }
        if !(self.solver.tol >= 1e-14) {
            return Err(config_err("solve-tol must be at least 1e-14"));
        }
        crate::quadrature::triangle_rule(self.quad_load.triangle).map_err(|e| config_err(e.to_string()))?;
        crate::quadrature::triangle_rule(self.quad_err).map_err(|e| config_err(e.to_string()))?;
        Ok(())
    }

    fn problem_at(&self, k: f64) -> Result<ProblemSpec, StudyError> {
        Ok(ProblemSpec::new(k, self.domain, self.problem)?)
    }
}

/// One mesh of a level sequence.
pub struct Level {
    /// Subdivision count (structured) or refinement index.
    pub m: usize,
    /// Nominal `1/m` for structured meshes, the longest edge otherwise.
    pub h: f64,
    pub mesh: Mesh,
    /// Ancestry relative to the previous level, when it is its refinement.
    pub parents: Option<ParentMap>,
}

fn structured_mesh(domain: DomainTag, m: usize, diagonal: Diagonal) -> Result<Mesh, StudyError> {
    Ok(match domain {
        DomainTag::Hexagon => build_hexagon_mesh(m)?,
        DomainTag::UnitSquare => build_square_mesh(m, SquareDomain::UnitSquare, diagonal)?,
        DomainTag::LShape => build_square_mesh(m, SquareDomain::LShape, diagonal)?,
        DomainTag::Custom => return Err(config_err("structured meshes need a named domain")),
    })
}

/// Lazily generated sequence of nested meshes.
pub struct LevelIter<'a> {
    cfg: &'a StudyConfig,
    next_index: usize,
    prev: Option<Mesh>,
    done: bool,
}

impl<'a> LevelIter<'a> {
    pub fn new(cfg: &'a StudyConfig) -> Self {
        Self { cfg, next_index: 0, prev: None, done: false }
    }

    fn base_mesh(&self) -> Result<Mesh, StudyError> {
        let cfg = self.cfg;
        let mut mesh = match &cfg.mesh {
            MeshSource::Structured => return structured_mesh(cfg.domain, cfg.levels.0, cfg.diagonal),
            MeshSource::Delaunay => {
                let poly = cfg.domain.polygon().ok_or_else(|| config_err("Delaunay meshes need a named domain"))?;
                delaunay_mesh(&poly, cfg.target_h, cfg.seed)?
            }
            MeshSource::File(path) => read_mesh(path)?,
        };
        for _ in 0..cfg.levels.0 {
            mesh = refine_red(&mesh)?.0;
        }
        Ok(mesh)
    }
}

impl Iterator for LevelIter<'_> {
    type Item = Result<Level, StudyError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let (a, b) = self.cfg.levels;
        let structured = self.cfg.mesh == MeshSource::Structured;
        let index = self.next_index;
        let m = if structured { a << index } else { a + index };
        if m > b {
            self.done = true;
            return None;
        }
        self.next_index += 1;
        let result = match self.prev.take() {
            None => self.base_mesh().map(|mesh| (mesh, None)),
            Some(prev) => refine_red(&prev).map(|(mesh, map)| (mesh, Some(map))).map_err(StudyError::from),
        };
        match result {
            Ok((mesh, parents)) => {
                if !self.cfg.slow && mesh.num_nodes() > DESK_SCALE_DOF {
                    self.done = true;
                    return Some(Err(config_err(format!(
                        "level with {} unknowns exceeds the desk-scale limit; pass --slow to run it",
                        mesh.num_nodes()
                    ))));
                }
                self.prev = Some(mesh.clone());
                let h = if structured { 1.0 / m as f64 } else { mesh.h_max() };
                Some(Ok(Level { m, h, mesh, parents }))
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Outcome of a study: the rows produced and whether any level failed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StudyOutcome {
    pub records: Vec<ConvergenceRecord>,
    pub failures: usize,
}

/// Fields of a solved level kept for the next one.
struct Solved {
    mesh: Mesh,
    uh: NodalField,
    g_uh: VectorNodalField,
}

/// Computes one level; `prev` is the previous (coarser) level if it
/// succeeded and `parents` links the two.
fn study_level(
    cfg: &StudyConfig,
    p: &ProblemSpec,
    level: &Level,
    prev: Option<&Solved>,
) -> Result<(ConvergenceRecord, Solved), StudyError> {
    let mesh = &level.mesh;
    let (a, b) = assemble_helmholtz(mesh, p, cfg.quad_load)?;
    let (x, _) = solve(&a, &b, cfg.solver)?;
    drop(a);
    let uh = NodalField::new(x);
    let op = RecoveryOperator::new(mesh)?;
    let g_uh = op.apply(&uh)?;

    let mut rec = ConvergenceRecord {
        k: p.k(),
        m: level.m,
        h: level.h,
        dof: mesh.num_nodes(),
        status: "ok".into(),
        ..Default::default()
    };

    let pair_data = match (prev, &level.parents) {
        (Some(prev), Some(parents)) => {
            let pair = LevelPair::new(&prev.mesh, mesh, parents)?;
            let rg = extrapolated_recovery(&pair, &prev.g_uh, &g_uh)?;
            let rfem = if p.has_exact() { Some(extrapolated_fem_gradient(&pair, &prev.uh, &uh)?) } else { None };
            rec.eta = Some(grad_diff_l2(mesh, &rg, &uh).map_err(ExtrapolateError::from)?);
            Some((rg, rfem))
        }
        _ => None,
    };

    if p.has_exact() {
        let u_i = NodalField::interpolate(mesh, |q| exact_unchecked(p, q).value);
        let g_ui = op.apply(&u_i)?;
        drop(u_i);
        let mut fields = vec![&g_uh, &g_ui];
        let mut piecewise = Vec::new();
        if let Some((rg, rfem)) = &pair_data {
            fields.push(rg);
            piecewise.push(rfem.as_deref().expect("computed for exact problems"));
        }
        let errs = exact_errors(mesh, p, cfg.quad_err, Some(&uh), &fields, &piecewise)?;
        let norms = reference_norms(p, mesh)?;
        let k = p.k();
        let energy = (errs.h1_semi.powi(2) + k * k * errs.l2.powi(2)).sqrt();
        rec.rel_h1_fem = Some(errs.h1_semi / norms.h1_semi);
        rec.rel_l2_fem = Some(errs.l2 / norms.l2);
        rec.rel_energy_fem = Some(energy / norms.energy);
        rec.rel_grad_ppr = Some(errs.fields[0] / norms.h1_semi);
        rec.rel_grad_ppr_interp = Some(errs.fields[1] / norms.h1_semi);
        if pair_data.is_some() {
            rec.rel_grad_rppr = Some(errs.fields[2] / norms.h1_semi);
            rec.rel_grad_rfem = Some(errs.piecewise[0] / norms.h1_semi);
            rec.effectivity = rec.eta.map(|eta| eta / errs.h1_semi);
        }
    }
    Ok((rec, Solved { mesh: level.mesh.clone(), uh, g_uh }))
}

fn fill_orders(prev: &ConvergenceRecord, rec: &mut ConvergenceRecord) {
    if prev.status != "ok" {
        return;
    }
    let order = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => observed_order(prev.h, a, rec.h, b).ok(),
        _ => None,
    };
    rec.order_fem = order(prev.rel_h1_fem, rec.rel_h1_fem);
    rec.order_ppr = order(prev.rel_grad_ppr, rec.rel_grad_ppr);
}

fn run_levels(cfg: &StudyConfig) -> Result<StudyOutcome, StudyError> {
    cfg.validate()?;
    let mut out = StudyOutcome::default();
    for &k in &cfg.ks {
        let p = cfg.problem_at(k)?;
        let mut prev: Option<Solved> = None;
        let mut prev_rec: Option<ConvergenceRecord> = None;
        for level in LevelIter::new(cfg) {
            let level = match level {
                Ok(l) => l,
                Err(e @ StudyError::Config(_)) if out.records.is_empty() && prev_rec.is_none() => return Err(e),
                Err(e) => {
                    out.failures += 1;
                    out.records.push(ConvergenceRecord { k, status: format!("error: {e}"), ..Default::default() });
                    break;
                }
            };
            match study_level(cfg, &p, &level, prev.as_ref()) {
                Ok((mut rec, solved)) => {
                    if let Some(pr) = &prev_rec {
                        fill_orders(pr, &mut rec);
                    }
                    prev = Some(solved);
                    prev_rec = Some(rec.clone());
                    out.records.push(rec);
                }
                Err(e) => {
                    out.failures += 1;
                    let rec = ConvergenceRecord {
                        k,
                        m: level.m,
                        h: level.h,
                        dof: level.mesh.num_nodes(),
                        status: format!("error: {e}"),
                        ..Default::default()
                    };
                    prev = None;
                    prev_rec = Some(rec.clone());
                    out.records.push(rec);
                }
            }
        }
    }
    if let Some(path) = &cfg.out {
        write_records_csv(path, &out.records)?;
    }
    Ok(out)
}

/// Refinement study against the exact solution: errors of `∇u_h`, `R∇u_h`,
/// `G_h u_h`, `R G_h u_h` and `G_h u_I`, the estimator and observed orders.
pub fn run_refinement_study(cfg: &StudyConfig) -> Result<StudyOutcome, StudyError> {
    if cfg.problem != ProblemKind::BesselExact {
        return Err(config_err("refinement studies need the problem with an exact solution"));
    }
    run_levels(cfg)
}

/// Estimator-only study: `η` per consecutive level pair, no exact errors.
pub fn run_estimator_only(cfg: &StudyConfig) -> Result<StudyOutcome, StudyError> {
    run_levels(cfg)
}

/// One row of a pollution scan.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PollutionRecord {
    pub k: f64,
    pub m: usize,
    pub h: f64,
    pub dof: usize,
    pub rel_h1_fem: Option<f64>,
    pub rel_l2_fem: Option<f64>,
    pub rel_energy_fem: Option<f64>,
    pub rel_grad_ppr: Option<f64>,
    /// `‖G_h u_h − ∇u_h‖₀ / |u|₁`.
    pub rel_grad_diff_ppr: Option<f64>,
    pub status: String,
}

fn pollution_level(cfg: &StudyConfig, k: f64, m: usize) -> Result<PollutionRecord, StudyError> {
    let p = ProblemSpec::bessel(k, DomainTag::Hexagon)?;
    let mesh = build_hexagon_mesh(m)?;
    let (a, b) = assemble_helmholtz(&mesh, &p, cfg.quad_load)?;
    let (x, _) = solve(&a, &b, cfg.solver)?;
    let uh = NodalField::new(x);
    let g = RecoveryOperator::new(&mesh)?.apply(&uh)?;
    let errs = exact_errors(&mesh, &p, cfg.quad_err, Some(&uh), &[&g], &[])?;
    let norms = reference_norms(&p, &mesh)?;
    let energy = (errs.h1_semi.powi(2) + k * k * errs.l2.powi(2)).sqrt();
    Ok(PollutionRecord {
        k,
        m,
        h: 1.0 / m as f64,
        dof: mesh.num_nodes(),
        rel_h1_fem: Some(errs.h1_semi / norms.h1_semi),
        rel_l2_fem: Some(errs.l2 / norms.l2),
        rel_energy_fem: Some(energy / norms.energy),
        rel_grad_ppr: Some(errs.fields[0] / norms.h1_semi),
        rel_grad_diff_ppr: Some(grad_diff_l2(&mesh, &g, &uh).map_err(ExtrapolateError::from)? / norms.h1_semi),
        status: "ok".into(),
    })
}

/// Hexagon solves at fixed `k·h`: `m = round(k / kh)` for each `k`.
pub fn run_pollution_scan(cfg: &StudyConfig) -> Result<(Vec<PollutionRecord>, usize), StudyError> {
    cfg.validate()?;
    let mut records = Vec::new();
    let mut failures = 0;
    for &k in &cfg.ks {
        let m = ((k / cfg.kh).round() as usize).max(1);
        if !cfg.slow && 3 * m * m + 3 * m + 1 > DESK_SCALE_DOF {
            return Err(config_err(format!("k = {k} needs m = {m}; pass --slow to run it")));
        }
        match pollution_level(cfg, k, m) {
            Ok(r) => records.push(r),
            Err(e) => {
                failures += 1;
                records.push(PollutionRecord { k, m, h: 1.0 / m as f64, status: format!("error: {e}"), ..Default::default() });
            }
        }
    }
    if let Some(path) = &cfg.out {
        let rows = records.iter().map(|r| {
            vec![
                num(r.k),
                r.m.to_string(),
                num(r.h),
                r.dof.to_string(),
                opt(r.rel_h1_fem),
                opt(r.rel_l2_fem),
                opt(r.rel_energy_fem),
                opt(r.rel_grad_ppr),
                opt(r.rel_grad_diff_ppr),
                r.status.clone(),
            ]
        });
        write_csv_atomic(path, &POLLUTION_HEADER, rows)?;
    }
    Ok((records, failures))
}

/// Critical mesh size for every `k` of the config. Wave numbers whose
/// threshold is not reached are reported as `Err` entries.
pub fn run_critical_h(cfg: &StudyConfig) -> Result<Vec<(f64, Result<CriticalMeshSize, MetricsError>)>, StudyError> {
    cfg.validate()?;
    let search = CriticalSearch {
        quantity: CriticalQuantity::FemGrad,
        solver: cfg.solver,
        load: cfg.quad_load,
        error_degree: cfg.quad_err,
        max_m: cfg.max_m,
        max_solves: 12,
    };
    let results: Vec<_> = cfg.ks.iter().map(|&k| (k, critical_mesh_size(k, cfg.eps, &search))).collect();
    if let Some(path) = &cfg.out {
        let rows = results.iter().map(|(k, r)| match r {
            Ok(c) => vec![num(*k), num(c.eps), c.m.to_string(), num(c.h), c.evaluations.len().to_string(), "ok".into()],
            Err(e) => vec![num(*k), num(cfg.eps), String::new(), String::new(), String::new(), format!("error: {e}")],
        });
        write_csv_atomic(path, &CRITICAL_HEADER, rows)?;
    }
    Ok(results)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Approximation-condition diagnostics over the configured levels.
pub fn run_mesh_report(cfg: &StudyConfig) -> Result<(Vec<(usize, f64, usize)>, MeshQualityReport), StudyError> {
    cfg.validate()?;
    let mut meshes = Vec::new();
    let mut summary = Vec::new();
    for level in LevelIter::new(cfg) {
        let level = level?;
        summary.push((level.m, level.h, level.mesh.num_nodes()));
        meshes.push(level.mesh);
    }
    Ok((summary, alpha_report(&meshes)))
}

/// Writes the system matrix of the first level in Matrix Market format and
/// returns its dimension and number of stored entries.
pub fn run_dump_matrix(cfg: &StudyConfig, out: &Path) -> Result<(usize, usize), StudyError> {
    cfg.validate()?;
    let level = LevelIter::new(cfg).next().ok_or_else(|| config_err("no levels"))??;
    let p = cfg.problem_at(cfg.ks[0])?;
    let (a, _) = assemble_helmholtz(&level.mesh, &p, cfg.quad_load)?;
    let tmp = tmp_path(out);
    {
        let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
        a.write_matrix_market(&mut f)?;
        f.flush()?;
    }
    fs::rename(&tmp, out)?;
    Ok((a.dim(), a.nnz()))
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Writes a CSV to a temporary sibling file and renames it into place.
fn write_csv_atomic(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), StudyError> {
    let tmp = tmp_path(path);
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&tmp)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn record_row(r: &ConvergenceRecord) -> Vec<String> {
    vec![
        num(r.k),
        r.m.to_string(),
        num(r.h),
        r.dof.to_string(),
        opt(r.rel_h1_fem),
        opt(r.rel_l2_fem),
        opt(r.rel_energy_fem),
        opt(r.rel_grad_ppr),
        opt(r.rel_grad_rppr),
        opt(r.rel_grad_ppr_interp),
        opt(r.rel_grad_rfem),
        opt(r.eta),
        opt(r.effectivity),
        opt(r.order_fem),
        opt(r.order_ppr),
        r.status.clone(),
    ]
}

/// Writes refinement records with [`CSV_HEADER`], atomically.
pub fn write_records_csv(path: &Path, records: &[ConvergenceRecord]) -> Result<(), StudyError> {
    write_csv_atomic(path, &CSV_HEADER, records.iter().map(record_row))
}

/// Reads a CSV written by [`write_records_csv`].
pub fn read_records_csv(path: &Path) -> Result<Vec<ConvergenceRecord>, StudyError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(config_err(format!("unexpected CSV header {header:?}")));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let f = |i: usize| -> Result<Option<f64>, StudyError> {
            let s = &row[i];
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| config_err(format!("bad number {s:?}")))
            }
        };
        let u = |i: usize| -> Result<usize, StudyError> { row[i].parse().map_err(|_| config_err(format!("bad integer {:?}", &row[i]))) };
        out.push(ConvergenceRecord {
            k: f(0)?.unwrap_or(f64::NAN),
            m: u(1)?,
            h: f(2)?.unwrap_or(f64::NAN),
            dof: u(3)?,
            rel_h1_fem: f(4)?,
            rel_l2_fem: f(5)?,
            rel_energy_fem: f(6)?,
            rel_grad_ppr: f(7)?,
            rel_grad_rppr: f(8)?,
            rel_grad_ppr_interp: f(9)?,
            rel_grad_rfem: f(10)?,
            eta: f(11)?,
            effectivity: f(12)?,
            order_fem: f(13)?,
            order_ppr: f(14)?,
            status: row[15].to_owned(),
        });
    }
    Ok(out)
}

/// Consistency of the stored relative errors: the relative energy error is
/// a weighted mean of the relative H¹ and L² errors, so it must lie between
/// them.
pub fn record_is_consistent(r: &ConvergenceRecord) -> bool {
    match (r.rel_h1_fem, r.rel_l2_fem, r.rel_energy_fem) {
        (Some(a), Some(b), Some(e)) => {
            let slack = 1e-12 * a.max(b);
            e >= a.min(b) - slack && e <= a.max(b) + slack
        }
        (None, None, None) => true,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_and_overrides() {
        let mut cfg = StudyConfig::default();
        cfg.apply_config_text("# comment\ndomain = hexagon\nk = 5, 10\nlevels = 4..16\nsolver = iterative\n\n").unwrap();
        assert_eq!(cfg.domain, DomainTag::Hexagon);
        assert_eq!(cfg.ks, vec![5.0, 10.0]);
        assert_eq!(cfg.levels, (4, 16));
        assert_eq!(cfg.solver.kind, SolverKind::Iterative);
        cfg.set("k", "20").unwrap();
        assert_eq!(cfg.ks, vec![20.0]);
        assert!(cfg.set("colour", "red").is_err());
        assert!(cfg.apply_config_text("domain hexagon").is_err());
        assert!(cfg.set("mesh", "file:").is_err());
        cfg.set("mesh", "file:/tmp/x.node").unwrap();
        assert_eq!(cfg.mesh, MeshSource::File(PathBuf::from("/tmp/x.node")));
    }

    #[test]
    fn validation() {
        let mut cfg = StudyConfig { levels: (8, 24), ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.levels = (8, 32);
        cfg.validate().unwrap();
        cfg.ks = vec![0.5];
        assert!(cfg.validate().is_err());
        assert_eq!(parse_levels("3"), Ok((3, 3)));
        assert!(parse_levels("5..2").is_err());
    }

    #[test]
    fn structured_levels_double() {
        let cfg = StudyConfig { levels: (2, 8), domain: DomainTag::Hexagon, ..Default::default() };
        let levels: Vec<Level> = LevelIter::new(&cfg).collect::<Result<_, _>>().unwrap();
        assert_eq!(levels.iter().map(|l| l.m).collect::<Vec<_>>(), vec![2, 4, 8]);
        assert!(levels[0].parents.is_none() && levels[1].parents.is_some());
        assert_eq!(levels[2].mesh.num_triangles(), 6 * 64);
    }

    #[test]
    fn loglog_slope_of_a_power_law() {
        let xs = [25.0, 50.0, 100.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        assert!((loglog_slope(&xs, &ys) + 1.5).abs() < 1e-12);
    }
}
