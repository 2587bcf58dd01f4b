//! Parameter sweeps over mesh level, degree and perturbation.

use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use super::ManufacturedSolution;
use crate::assembly::{AssemblyError, AssemblyOptions, SaddleSystem};
use crate::mesh::{Mesh, MeshError, Point2};
use crate::report::{RunRecord, RunReport};
use crate::singularity::{eta_critical_set, theta_values, SingularityError};
use crate::solve::{divergence_norm, error_norms, estimate_infsup, solve_stokes, SolveError};

/// Relative slack when collecting the vertices with the smallest singular distance.
const THETA_MIN_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("perturbation {0} is outside [0, 1/2)")]
    InvalidEps(f64),
    #[error("no degrees given")]
    NoDegrees,
    #[error("degree must be at least 1")]
    InvalidDegree,
    #[error("the verify mode is not a sweep")]
    NotASweep,
    #[error("bad eta policy `{0}` (expected critical, noncritical or value:<x>)")]
    BadPolicy(String),
    #[error("bad mode `{0}`")]
    BadMode(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Singularity(#[from] SingularityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Uniform refinement at fixed degree.
    H,
    /// Increasing degree on a fixed mesh.
    K,
    /// Discrete inf-sup constants only.
    Infsup,
    /// Single solves on the finest requested mesh.
    Solve,
    Verify,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::H => "h",
            Mode::K => "k",
            Mode::Infsup => "infsup",
            Mode::Solve => "solve",
            Mode::Verify => "verify",
        }
    }
}

impl FromStr for Mode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "h" => Ok(Mode::H),
            "k" => Ok(Mode::K),
            "infsup" => Ok(Mode::Infsup),
            "solve" => Ok(Mode::Solve),
            "verify" => Ok(Mode::Verify),
            _ => Err(BenchError::BadMode(s.to_string())),
        }
    }
}

/// Which vertices get a pressure constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaPolicy {
    /// Exactly singular vertices; without any, the vertices of smallest singular
    /// distance (the perturbed centre of the criss-cross mesh).
    Critical,
    /// Exactly singular vertices only.
    Noncritical,
    /// Every vertex with singular distance at most the value.
    Value(f64),
}

impl EtaPolicy {
    pub fn label(&self) -> String {
        match self {
            EtaPolicy::Critical => "critical".into(),
            EtaPolicy::Noncritical => "noncritical".into(),
            EtaPolicy::Value(x) => format!("{x:e}"),
        }
    }

    /// Constrained vertices of `mesh` under this policy, in increasing order.
    pub fn critical_set(&self, mesh: &Mesh) -> Result<Vec<usize>, SingularityError> {
        match *self {
            EtaPolicy::Value(eta) => eta_critical_set(mesh, eta),
            EtaPolicy::Noncritical => eta_critical_set(mesh, 0.0),
            EtaPolicy::Critical => {
                let mut set = eta_critical_set(mesh, 0.0)?;
                if !set.is_empty() {
                    return Ok(set);
                }
                let theta = theta_values(mesh);
                if let Some(min) = theta.iter().copied().filter(|&t| t > 0.0).reduce(f64::min) {
                    let limit = min * (1.0 + THETA_MIN_SLACK);
                    set.extend((0..theta.len()).filter(|&z| theta[z] > 0.0 && theta[z] <= limit));
                }
                Ok(set)
            }
        }
    }
}

impl FromStr for EtaPolicy {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "critical" | "treat-z-eps-critical" => Ok(EtaPolicy::Critical),
            "noncritical" | "treat-z-eps-noncritical" => Ok(EtaPolicy::Noncritical),
            _ => s
                .strip_prefix("value:")
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| *v >= 0.0)
                .map(EtaPolicy::Value)
                .ok_or_else(|| BenchError::BadPolicy(s.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub mode: Mode,
    pub degrees: Vec<usize>,
    /// Perturbations of the built-in criss-cross mesh; ignored with `mesh`.
    pub eps: Vec<f64>,
    pub policies: Vec<EtaPolicy>,
    /// Number of meshes in an h-sweep; the refinement count of the mesh otherwise.
    pub levels: usize,
    /// Red refinements applied to the initial mesh before the sweep starts.
    pub base_refinements: usize,
    pub quad_bump: usize,
    /// Initial mesh replacing the built-in generator.
    pub mesh: Option<Mesh>,
    /// Also estimate the inf-sup constant in the solve modes (dense, coarse meshes only).
    pub with_beta: bool,
    /// Record wall times; off gives byte-identical reports across runs.
    pub timing: bool,
    /// Relative residual above which a solve is reported as inaccurate.
    pub tol_residual: f64,
}

impl BenchConfig {
    /// Defaults of each mode: degree 4 on four h-levels of the unrefined mesh, degrees
    /// 4..=8 and the inf-sup scan on the once refined mesh.
    pub fn defaults(mode: Mode) -> Self {
        let both = vec![EtaPolicy::Critical, EtaPolicy::Noncritical];
        let mut cfg = Self {
            mode,
            degrees: vec![4],
            eps: vec![1e-2, 1e-4, 1e-6, 1e-8],
            policies: both,
            levels: 4,
            base_refinements: 0,
            quad_bump: 6,
            mesh: None,
            with_beta: false,
            timing: true,
            tol_residual: 1e-10,
        };
        match mode {
            Mode::K => {
                cfg.degrees = (4..=8).collect();
                cfg.levels = 1;
                cfg.base_refinements = 1;
            }
            Mode::Infsup => {
                cfg.eps = vec![1e-2, 1e-3, 1e-4, 1e-5];
                cfg.levels = 1;
                cfg.base_refinements = 1;
            }
            Mode::Solve => {
                cfg.eps = vec![1e-2];
                cfg.policies = vec![EtaPolicy::Critical];
                cfg.levels = 1;
            }
            Mode::H | Mode::Verify => {}
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.degrees.is_empty() {
            return Err(BenchError::NoDegrees);
        }
        if self.degrees.contains(&0) {
            return Err(BenchError::InvalidDegree);
        }
        if let Some(&e) = self.eps.iter().find(|e| !(0.0..0.5).contains(*e)) {
            return Err(BenchError::InvalidEps(e));
        }
        if self.degrees.iter().any(|&k| k < 4) {
            log::warn!("degrees below 4 may be unstable: {:?}", self.degrees);
        }
        Ok(())
    }

    /// Refinement counts of the meshes the sweep visits.
    fn mesh_levels(&self) -> Vec<usize> {
        match self.mode {
            Mode::H => (self.base_refinements..self.base_refinements + self.levels.max(1)).collect(),
            _ => vec![self.base_refinements],
        }
    }
}

struct Point<'a> {
    mesh: &'a Mesh,
    eps: Option<f64>,
    level: usize,
    policy: EtaPolicy,
    k: usize,
}

/// Runs the sweep described by `cfg`. Failures of single points are recorded in the
/// report and do not stop the sweep.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<RunReport, BenchError> {
    if cfg.mode == Mode::Verify {
        return Err(BenchError::NotASweep);
    }
    cfg.validate()?;
    let levels = cfg.mesh_levels();
    let bases: Vec<(Option<f64>, Mesh)> = match &cfg.mesh {
        Some(m) => vec![(None, m.clone())],
        None => cfg
            .eps
            .iter()
            .map(|&e| Ok((Some(e), Mesh::criss_cross(e)?)))
            .collect::<Result<_, MeshError>>()?,
    };
    let mut meshes = Vec::new();
    for (eps, base) in bases {
        let mut m = base;
        for level in 0..=*levels.last().expect("at least one level") {
            if level > 0 {
                m = m.red_refine()?;
            }
            if levels.contains(&level) {
                meshes.push((eps, level, m.clone()));
            }
        }
    }
    let mut points = Vec::new();
    for (eps, level, mesh) in &meshes {
        for &policy in &cfg.policies {
            for &k in &cfg.degrees {
                points.push(Point {
                    mesh,
                    eps: *eps,
                    level: *level,
                    policy,
                    k,
                });
            }
        }
    }
    let exact = ManufacturedSolution::new();
    let records: Vec<RunRecord> = points.par_iter().map(|p| run_point(cfg, p, &exact)).collect();
    let mut report = RunReport { records };
    report.sort();
    Ok(report)
}

#[derive(Debug, Error)]
enum PointError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Singularity(#[from] SingularityError),
    #[error(transparent)]
    Poly(#[from] crate::polynomials::PolyError),
}

fn run_point(cfg: &BenchConfig, p: &Point, exact: &ManufacturedSolution) -> RunRecord {
    let start = Instant::now();
    let mut rec = RunRecord {
        mode: cfg.mode.label().to_string(),
        k: p.k,
        eps: p.eps,
        eta: p.policy.label(),
        level: p.level,
        ndof_u: 0,
        ndof_p: 0,
        err_grad_u: None,
        err_p: None,
        err_total: None,
        div_norm: None,
        beta: None,
        seconds: 0.0,
        error: None,
    };
    if let Err(e) = fill_point(cfg, p, exact, &mut rec) {
        log::warn!("k={} eps={:?} level={} policy={}: {e}", p.k, p.eps, p.level, rec.eta);
        rec.error = Some(e.to_string());
    }
    if cfg.timing {
        rec.seconds = start.elapsed().as_secs_f64();
    }
    rec
}

fn fill_point(
    cfg: &BenchConfig,
    p: &Point,
    exact: &ManufacturedSolution,
    rec: &mut RunRecord,
) -> Result<(), PointError> {
    let critical = p.policy.critical_set(p.mesh)?;
    let opts = AssemblyOptions {
        quad_bump: cfg.quad_bump,
    };
    let zero = |_: Point2| [0.0, 0.0];
    let system = if cfg.mode == Mode::Infsup {
        SaddleSystem::assemble(p.mesh, p.k, &critical, &zero, opts)?
    } else {
        SaddleSystem::assemble(p.mesh, p.k, &critical, &|x| exact.force(x), opts)?
    };
    let rank = system.constraints.rank_report(system.pressure.ndof()).rank;
    rec.ndof_u = system.velocity.ndof();
    rec.ndof_p = system.pressure.ndof() - rank;
    if cfg.mode == Mode::Infsup || cfg.with_beta {
        rec.beta = Some(estimate_infsup(&system, &system.constraints)?.beta);
    }
    if cfg.mode == Mode::Infsup {
        return Ok(());
    }
    let sol = solve_stokes(&system)?;
    let d = &sol.diagnostics;
    let worst = d.momentum_residual.max(d.mass_residual).max(d.constraint_residual);
    if worst > cfg.tol_residual {
        log::warn!(
            "k={} eps={:?} level={} policy={}: relative residual {worst:e} above {:e}",
            p.k,
            p.eps,
            p.level,
            rec.eta,
            cfg.tol_residual
        );
    }
    let (eu, ep) = error_norms(
        p.mesh,
        &system,
        &sol.u,
        &sol.p,
        |x| exact.velocity_gradient(x),
        |x| exact.pressure(x),
    )?;
    rec.err_grad_u = Some(eu);
    rec.err_p = Some(ep);
    rec.err_total = Some(eu + ep);
    rec.div_norm = Some(divergence_norm(p.mesh, &system, &sol.u)?);
    log::info!(
        "k={} eps={:?} level={} policy={} total error {:e} divergence {:e}",
        p.k,
        p.eps,
        p.level,
        rec.eta,
        eu + ep,
        rec.div_norm.unwrap_or(f64::NAN)
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_on_criss_cross() {
        let m = Mesh::criss_cross(0.01).unwrap().red_refine().unwrap();
        assert_eq!(EtaPolicy::Critical.critical_set(&m).unwrap(), vec![4]);
        assert!(EtaPolicy::Noncritical.critical_set(&m).unwrap().is_empty());
        assert_eq!(EtaPolicy::Value(0.03).critical_set(&m).unwrap(), vec![4]);
        assert!(EtaPolicy::Value(0.01).critical_set(&m).unwrap().is_empty());
        let exact = Mesh::criss_cross(0.0).unwrap();
        assert_eq!(EtaPolicy::Noncritical.critical_set(&exact).unwrap(), vec![4]);
        assert_eq!(EtaPolicy::Critical.critical_set(&exact).unwrap(), vec![4]);
    }

    #[test]
    fn parse_policy_and_mode() {
        assert_eq!("critical".parse::<EtaPolicy>().unwrap(), EtaPolicy::Critical);
        assert_eq!(
            "treat-z-eps-noncritical".parse::<EtaPolicy>().unwrap(),
            EtaPolicy::Noncritical
        );
        assert_eq!("value:1e-3".parse::<EtaPolicy>().unwrap(), EtaPolicy::Value(1e-3));
        assert!("value:-1".parse::<EtaPolicy>().is_err());
        assert!("sometimes".parse::<EtaPolicy>().is_err());
        assert_eq!("infsup".parse::<Mode>().unwrap(), Mode::Infsup);
        assert!("x".parse::<Mode>().is_err());
    }

    #[test]
    fn validation() {
        let mut c = BenchConfig::defaults(Mode::H);
        c.eps = vec![0.5];
        assert!(matches!(c.validate(), Err(BenchError::InvalidEps(_))));
        c.eps = vec![0.0];
        c.degrees.clear();
        assert!(matches!(c.validate(), Err(BenchError::NoDegrees)));
        assert!(matches!(
            run_benchmark(&BenchConfig::defaults(Mode::Verify)),
            Err(BenchError::NotASweep)
        ));
    }

    #[test]
    fn small_h_sweep() {
        let mut c = BenchConfig::defaults(Mode::H);
        c.eps = vec![0.01];
        c.levels = 2;
        c.timing = false;
        let r = run_benchmark(&c).unwrap();
        assert_eq!(r.records.len(), 4);
        assert!(!r.has_errors());
        let crit = r.series(Some(0.01), "critical");
        assert_eq!(crit.iter().map(|x| x.level).collect::<Vec<_>>(), [0, 1]);
        assert!(crit[1].err_total.unwrap() < crit[0].err_total.unwrap());
        let non = r.series(Some(0.01), "noncritical");
        assert_eq!(non[0].ndof_p, crit[0].ndof_p + 1);
        assert!(r.records.iter().all(|x| x.is_finite() && x.seconds == 0.0));
    }
}
