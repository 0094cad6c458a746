//! Experiment runners behind the `alap` command line. Each runner writes plain CSV files plus a
//! `summary.txt` of `key = value` lines into its own output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::barriers::{
    boundary_certify, certify_radial_inequality, delta_a_radial_closed_form, delta_a_radial_fd, hopf_certify,
    hopf_kappa_interval, loglog_slope, standard_ring_samples, vartheta, vartheta_ode_residual, BoundaryBarrier, CertReport,
    HopfBarrier, RadialBarrier,
};
use crate::config::{BarrierCheck, Problem, RunConfig};
use crate::domain_grid::{Domain, Grid, SolutionPair};
use crate::error::{AlapError, Result};
use crate::free_boundary::{
    certify_chi_monotone, certify_lsc, default_chi_tol, default_lsc_tol, extract_graph, omega_grid, phi_h,
    positivity_propagation, strong_max_principle_check,
};
use crate::growth::{boundary_growth_report, find_touching_balls, growth_report, harnack_check, rescale_check, BallOrder};
use crate::orbits::{certify_jacobian_bounds, integrate_orbit, jacobian_analytic, jacobian_numeric, Orbit, DEFAULT_EXIT_TOL};
use crate::profiles::{certify_ellipticity, log_samples, monotonicity_sweep, Profile};
use crate::solver::{solve_problem_report, SolveReport};
use crate::vector_field::FieldH;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    CheckProfile,
    CheckBarriers,
    Trace,
    ExtractFb,
    VerifyFb,
    Growth,
    BoundaryGrowth,
    Harnack,
    Rescale,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::CheckProfile => "check-profile",
            Command::CheckBarriers => "check-barriers",
            Command::Trace => "trace",
            Command::ExtractFb => "extract-fb",
            Command::VerifyFb => "verify-fb",
            Command::Growth => "growth",
            Command::BoundaryGrowth => "boundary-growth",
            Command::Harnack => "harnack",
            Command::Rescale => "rescale",
        }
    }

    fn needs_solve(self) -> bool {
        !matches!(self, Command::CheckProfile | Command::CheckBarriers | Command::Trace)
    }
}

/// Outcome of an experiment, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Success,
    CertificationFailure,
    NonConvergence,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::NonConvergence => 2,
            Status::CertificationFailure => 3,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Success
        } else {
            Status::CertificationFailure
        }
    }
}

/// Exit code for an error that aborted a run: 4 for configuration errors, 2 for solver
/// non-convergence, 1 otherwise.
pub fn error_exit_code(e: &AlapError) -> i32 {
    match e {
        AlapError::Config(_) => 4,
        AlapError::NonConvergence { .. } => 2,
        _ => 1,
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: u64,
    pub parallel: bool,
    /// Overrides the configured free-boundary levels.
    pub levels: Option<Vec<f64>>,
}

impl RunOptions {
    pub fn from_config(cfg: &RunConfig) -> Self {
        RunOptions { out: cfg.output_dir.clone(), seed: cfg.seed, parallel: false, levels: None }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub summary: String,
    pub dir: PathBuf,
}

fn write(dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::write(dir.join(name), content)?;
    Ok(())
}

fn kv(s: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(s, "{key} = {value}");
}

fn grid_label(grid: &Grid) -> String {
    grid.counts().iter().map(|c| c.to_string()).collect::<Vec<_>>().join("x")
}

/// Runs one subcommand. Grid-based experiments run once per configured resolution, each in the
/// subdirectory `<out>/<command>/<resolution>`; with `parallel` the resolutions run concurrently.
pub fn run(command: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome> {
    let problem = cfg.build()?;
    let dir = opts.out.join(command.name());
    fs::create_dir_all(&dir)?;
    let (status, summary) = match command {
        Command::CheckProfile => check_profile(cfg, &problem, &dir, opts.seed)?,
        Command::CheckBarriers => check_barriers(cfg, &problem, &dir, opts.seed)?,
        Command::Trace => trace(cfg, &problem, &dir)?,
        _ => {
            let task = |grid: &Grid| -> Result<(Status, String)> {
                let sub = dir.join(grid_label(grid));
                fs::create_dir_all(&sub)?;
                let (status, body) = run_on_grid(command, cfg, &problem, grid, &sub, opts)?;
                write(&sub, "summary.txt", &body)?;
                Ok((status, body))
            };
            let results: Vec<Result<(Status, String)>> = if opts.parallel {
                std::thread::scope(|s| {
                    let handles: Vec<_> = problem.grids.iter().map(|g| s.spawn(move || task(g))).collect();
                    handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
                })
            } else {
                problem.grids.iter().map(task).collect()
            };
            let mut status = Status::Success;
            let mut summary = String::new();
            for (grid, r) in problem.grids.iter().zip(results) {
                let (st, body) = r?;
                status = status.max(st);
                let _ = writeln!(summary, "[{}]", grid_label(grid));
                summary.push_str(&body);
            }
            (status, summary)
        }
    };
    let mut full = String::new();
    kv(&mut full, "command", command.name());
    kv(&mut full, "status", format!("{:?}", status));
    full.push_str(&summary);
    write(&dir, "summary.txt", &full)?;
    Ok(Outcome { status, summary: full, dir })
}

fn solve_summary(report: &SolveReport) -> String {
    let mut s = String::new();
    kv(&mut s, "converged", report.converged);
    kv(&mut s, "iterations", report.iterations);
    kv(&mut s, "final_residual", format!("{:e}", report.final_residual));
    kv(&mut s, "complementarity", format!("{:e}", report.metrics.complementarity));
    s
}

fn run_on_grid(command: Command, cfg: &RunConfig, pb: &Problem, grid: &Grid, dir: &Path, opts: &RunOptions) -> Result<(Status, String)> {
    debug_assert!(command.needs_solve());
    let (pair, report) = solve_problem_report(grid, &pb.profile, &pb.field, &pb.domain, &cfg.solver)?;
    let mut s = solve_summary(&report);
    if command == Command::Solve {
        write(dir, "u.csv", &pair.u_csv(grid))?;
        write(dir, "chi.csv", &pair.chi_csv(grid))?;
        write(dir, "solve_report.txt", &report.summary())?;
    }
    if !report.converged {
        return Ok((Status::NonConvergence, s));
    }
    let eps = report.levels.last().map_or(report.eps, |l| l.eps);
    let status = match command {
        Command::Solve => Status::Success,
        Command::ExtractFb => {
            for &h in levels(cfg, opts) {
                let (omegas, shape) = omega_grid(&pb.domain, cfg.experiments.free_boundary.omegas);
                let g = extract_graph(&pair, grid, &pb.field, h, &omegas, &shape, &pb.domain)?;
                write(dir, &format!("graph_h{h}.csv"), &g.to_csv())?;
                kv(&mut s, &format!("h{h}.identity_violations"), g.total_identity_violations());
            }
            Status::Success
        }
        Command::VerifyFb => Status::from_pass(verify_fb(cfg, pb, grid, &pair, eps, dir, opts, &mut s)?),
        Command::Growth => {
            let count = cfg.experiments.growth.count;
            let large = find_touching_balls(&pair, grid, &pb.domain, count, BallOrder::Largest);
            let small = find_touching_balls(&pair, grid, &pb.domain, count, BallOrder::Smallest);
            let h = harnack_check(&pair, grid, &large, &pb.field, &pb.profile, &pb.domain);
            let slack = h.measured_constant.max(1.0);
            let g_large = growth_report(&pair, grid, &large, &pb.profile, &pb.field, &pb.domain, slack);
            let g_small = growth_report(&pair, grid, &small, &pb.profile, &pb.field, &pb.domain, slack);
            write(dir, "growth_largest.csv", &g_large.to_csv())?;
            write(dir, "growth_smallest.csv", &g_small.to_csv())?;
            write(dir, "harnack.csv", &h.to_csv())?;
            kv(&mut s, "balls", large.len());
            kv(&mut s, "max_ratio_largest", format!("{:e}", g_large.max_ratio));
            kv(&mut s, "max_ratio_smallest", format!("{:e}", g_small.max_ratio));
            kv(&mut s, "harnack_constant", format!("{:e}", h.measured_constant));
            kv(&mut s, "bound", format!("{:e}", g_large.bound()));
            Status::from_pass(g_large.pass && g_small.pass)
        }
        Command::BoundaryGrowth => {
            let bc = &cfg.experiments.boundary_growth;
            let face = bc.face.resolve(pb.domain.dim()).map_err(|e| AlapError::Config(e.to_string()))?;
            let rep = boundary_growth_report(&pair, grid, &pb.domain, face, bc.r0, bc.width.unwrap_or(bc.r0), &pb.profile, &pb.field)?;
            write(dir, "boundary_growth.csv", &rep.to_csv())?;
            kv(&mut s, "max_ratio", format!("{:e}", rep.max_ratio));
            kv(&mut s, "theta_prime0", format!("{:e}", rep.theta_prime0));
            kv(&mut s, "slack", format!("{:e}", rep.slack));
            kv(&mut s, "pass", rep.pass);
            Status::from_pass(rep.pass)
        }
        Command::Harnack => {
            let balls = find_touching_balls(&pair, grid, &pb.domain, cfg.experiments.growth.count, BallOrder::Largest);
            let h = harnack_check(&pair, grid, &balls, &pb.field, &pb.profile, &pb.domain);
            write(dir, "harnack.csv", &h.to_csv())?;
            kv(&mut s, "measured_constant", format!("{:e}", h.measured_constant));
            kv(&mut s, "rejected", h.rejected);
            Status::Success
        }
        Command::Rescale => {
            let rc = &cfg.experiments.rescale;
            let mut csv = String::from("R,source,residual,scaling_defect,grad_max_half,tol,pass\n");
            let mut pass = true;
            for &r in &rc.radii {
                let rep = rescale_check(&pair, grid, &rc.x0, r, &pb.profile, &pb.field, cfg.solver.inner_tol)?;
                let _ = writeln!(
                    csv,
                    "{:e},{:e},{:e},{:e},{:e},{:e},{}",
                    r, rep.source, rep.residual, rep.scaling_defect, rep.grad_max_half, rep.tol, rep.pass
                );
                pass &= rep.pass;
            }
            write(dir, "rescale.csv", &csv)?;
            kv(&mut s, "pass", pass);
            Status::from_pass(pass)
        }
        Command::CheckProfile | Command::CheckBarriers | Command::Trace => unreachable!("not a grid experiment"),
    };
    Ok((status, s))
}

fn levels<'a>(cfg: &'a RunConfig, opts: &'a RunOptions) -> &'a [f64] {
    opts.levels.as_deref().unwrap_or(&cfg.experiments.free_boundary.levels)
}

#[allow(clippy::too_many_arguments)]
fn verify_fb(
    cfg: &RunConfig,
    pb: &Problem,
    grid: &Grid,
    pair: &SolutionPair,
    eps: f64,
    dir: &Path,
    opts: &RunOptions,
    s: &mut String,
) -> Result<bool> {
    let fc = &cfg.experiments.free_boundary;
    let (omegas, shape) = omega_grid(&pb.domain, fc.omegas);
    let chi_tol = fc.chi_tol.unwrap_or_else(|| default_chi_tol(pair, eps));
    let mut pass = true;
    for &h in levels(cfg, opts) {
        let orbits: Vec<Orbit> =
            omegas.iter().map(|w| integrate_orbit(&pb.field, w, h, &pb.domain, DEFAULT_EXIT_TOL)).collect::<Result<_>>()?;
        let chi = certify_chi_monotone(pair, grid, &orbits, chi_tol)?;
        let prop = positivity_propagation(pair, grid, &orbits, pair.eps_u)?;
        let graph = extract_graph(pair, grid, &pb.field, h, &omegas, &shape, &pb.domain)?;
        let lsc_tol = fc.lsc_tol.unwrap_or_else(|| default_lsc_tol(pair, grid, &pb.field, graph.step));
        let lsc = certify_lsc(&graph, lsc_tol, |w| phi_h(pair, grid, &pb.field, h, w, &pb.domain))?;
        write(dir, &format!("chi_monotone_h{h}.csv"), &chi.to_csv())?;
        write(dir, &format!("lsc_h{h}.csv"), &lsc.to_csv())?;
        write(dir, &format!("graph_h{h}.csv"), &graph.to_csv())?;
        let ids = graph.total_identity_violations();
        kv(s, &format!("h{h}.chi_monotone_worst"), format!("{:e}", chi.worst));
        kv(s, &format!("h{h}.chi_monotone_tol"), format!("{:e}", chi.tol));
        kv(s, &format!("h{h}.chi_monotone_violations"), chi.violations);
        kv(s, &format!("h{h}.propagation_violations"), prop.violations);
        kv(s, &format!("h{h}.identity_violations"), ids);
        kv(s, &format!("h{h}.lsc_checked"), lsc.checked);
        kv(s, &format!("h{h}.lsc_failures"), lsc.failures);
        pass &= chi.pass && prop.pass && lsc.pass && ids == 0;
    }
    let smp = strong_max_principle_check(pair, grid);
    kv(s, "interior_dry_components", smp.interior_dry_components);
    kv(s, "pass", pass && smp.pass);
    Ok(pass && smp.pass)
}

fn profiles_of(cfg: &RunConfig, pb: &Problem) -> Result<Vec<Profile>> {
    let mut out = vec![pb.profile];
    for p in &cfg.experiments.check_profile.extra {
        out.push(p.build()?);
    }
    Ok(out)
}

fn check_profile(cfg: &RunConfig, pb: &Problem, dir: &Path, seed: u64) -> Result<(Status, String)> {
    let pc = &cfg.experiments.check_profile;
    let samples = log_samples(pc.t_min, pc.t_max, pc.samples);
    let mut s = String::new();
    let mut csv = String::from("profile,pairs,min_relative_gap,failures,pass\n");
    let mut pass = true;
    for (i, p) in profiles_of(cfg, pb)?.iter().enumerate() {
        let e = certify_ellipticity(p, &samples);
        write(dir, &format!("ellipticity_{i}.csv"), &e.to_csv())?;
        let m = monotonicity_sweep(p, pb.domain.dim(), pc.pairs, seed)?;
        let _ = writeln!(csv, "{},{},{:e},{},{}", m.profile, m.pairs, m.min_relative_gap, m.failures, m.pass);
        kv(&mut s, &format!("{}.ratio_range", p.name()), format!("[{:e}, {:e}]", e.min_ratio, e.max_ratio));
        kv(&mut s, &format!("{}.ellipticity_pass", p.name()), e.pass);
        kv(&mut s, &format!("{}.monotonicity_pass", p.name()), m.pass);
        pass &= e.pass && m.pass;
    }
    write(dir, "monotonicity.csv", &csv)?;
    Ok((Status::from_pass(pass), s))
}

/// Results of the barrier certification plan for one profile and dimension.
#[derive(Debug, Clone)]
pub struct BarrierSuite {
    pub radial: CertReport,
    /// Smallest log-log slope of the finite-difference error of `Δ_A v` over the probe points.
    pub fd_slope: f64,
    /// Failing samples of the barrier with `κ/4` (expected to be positive).
    pub weakened_failures: usize,
    pub hopf: Vec<(f64, f64, CertReport)>,
    pub boundary: BoundarySuite,
}

#[derive(Debug, Clone)]
pub struct BoundarySuite {
    pub theta_at_zero: f64,
    pub theta_at_r0: f64,
    pub dtheta_end_rel_error: f64,
    pub max_ode_residual: f64,
    pub cert: CertReport,
    pub pass: bool,
}

impl BarrierSuite {
    pub fn radial_pass(&self) -> bool {
        self.radial.pass && self.fd_slope >= 1.8 && self.weakened_failures > 0
    }

    pub fn hopf_pass(&self) -> bool {
        self.hopf.iter().all(|(_, _, r)| r.pass)
    }

    pub fn pass(&self) -> bool {
        self.radial_pass() && self.hopf_pass() && self.boundary.pass
    }
}

/// Radial, Hopf and boundary barrier checks centered in `domain` for the dimension of `domain`.
pub fn barrier_suite(profile: &Profile, field: &FieldH, domain: &Domain, bc: &BarrierCheck, seed: u64) -> Result<BarrierSuite> {
    let n = domain.dim();
    let center: Vec<f64> = (0..n).map(|k| 0.5 * (domain.lower()[k] + domain.upper()[k])).collect();

    let rb = RadialBarrier::new(&center, bc.radius, bc.eps, bc.m, profile)?;
    let samples = standard_ring_samples(&center, rb.inner_radius(), rb.outer_radius(), seed);
    let radial = certify_radial_inequality(&rb, profile, &samples)?;
    let mut fd_slope = f64::INFINITY;
    for frac in [0.25, 0.5, 0.75] {
        let rho = rb.inner_radius() + frac * (rb.outer_radius() - rb.inner_radius());
        let mut x = center.clone();
        x[0] += rho * 0.6;
        x[1] += rho * 0.8;
        let exact = delta_a_radial_closed_form(&rb, profile, &x)?;
        let errs: Vec<f64> = bc.fd_steps.iter().map(|&h| (delta_a_radial_fd(&rb, profile, &x, h) - exact).abs()).collect();
        fd_slope = fd_slope.min(loglog_slope(&bc.fd_steps, &errs));
    }
    let weak = RadialBarrier::with_kappa(&center, bc.radius, bc.eps, bc.m, rb.kappa / 4.0)?;
    let weakened_failures = certify_radial_inequality(&weak, profile, &samples)?.failures;

    let (lo, hi) = hopf_kappa_interval(profile, n);
    let mut hopf = Vec::new();
    for i in 0..bc.hopf_kappa_points {
        let kappa = lo + (hi - lo) * (i + 1) as f64 / (bc.hopf_kappa_points + 1) as f64;
        let hb = HopfBarrier::new(&center, bc.hopf_radius, kappa, profile)?;
        let ring = standard_ring_samples(&center, bc.hopf_radius / 2.0, bc.hopf_radius, seed);
        for &e in &bc.hopf_eps {
            hopf.push((kappa, e, hopf_certify(&hb, profile, e, &ring)?));
        }
    }

    // exterior ball touching the `x_n = lower` face from outside
    let mut x1 = center.clone();
    x1[n - 1] = domain.lower()[n - 1] - bc.r0;
    let diameter = domain.delta();
    let bb = BoundaryBarrier::new(&x1, bc.r0, domain.m_ceiling(), field.h_upper(), diameter, profile)?;
    let theta_at_zero = vartheta(&bb, profile, 0.0)?;
    let theta_at_r0 = vartheta(&bb, profile, bc.r0)?;
    let target = domain.m_ceiling() / bc.r0;
    let dtheta_end_rel_error = (bb.dtheta(profile, diameter) - target).abs() / target;
    let mut max_ode_residual: f64 = 0.0;
    for k in 0..bc.ode_samples {
        let t = diameter * k as f64 / (bc.ode_samples - 1).max(1) as f64;
        max_ode_residual = max_ode_residual.max(vartheta_ode_residual(&bb, profile, t)?.abs());
    }
    let per_axis: usize = 21;
    let mut pts = Vec::new();
    for idx in 0..per_axis.pow(n as u32) {
        let mut rem = idx;
        let x: Vec<f64> = (0..n)
            .map(|k| {
                let i = rem % per_axis;
                rem /= per_axis;
                domain.lower()[k] + (domain.upper()[k] - domain.lower()[k]) * i as f64 / (per_axis - 1) as f64
            })
            .collect();
        pts.push(x);
    }
    let cert = boundary_certify(&bb, profile, field, &pts)?;
    let pass = theta_at_zero == 0.0
        && theta_at_r0 >= domain.m_ceiling()
        && dtheta_end_rel_error <= 1e-8
        && max_ode_residual <= 1e-8 * field.h_upper()
        && cert.pass;
    let boundary = BoundarySuite { theta_at_zero, theta_at_r0, dtheta_end_rel_error, max_ode_residual, cert, pass };
    Ok(BarrierSuite { radial, fd_slope, weakened_failures, hopf, boundary })
}

fn check_barriers(cfg: &RunConfig, pb: &Problem, dir: &Path, seed: u64) -> Result<(Status, String)> {
    let suite = barrier_suite(&pb.profile, &pb.field, &pb.domain, &cfg.experiments.check_barriers, seed)?;
    let mut all = vec![suite.radial.clone()];
    all.extend(suite.hopf.iter().map(|(_, _, r)| r.clone()));
    all.push(suite.boundary.cert.clone());
    write(dir, "barriers.csv", &CertReport::merge(all).to_csv())?;
    let mut s = String::new();
    kv(&mut s, "radial.min_margin", format!("{:e}", suite.radial.min_margin));
    kv(&mut s, "radial.fd_slope", format!("{:.4}", suite.fd_slope));
    kv(&mut s, "radial.weakened_failures", suite.weakened_failures);
    kv(&mut s, "radial.pass", suite.radial_pass());
    for (kappa, e, r) in &suite.hopf {
        kv(&mut s, &format!("hopf.kappa{kappa:.4}.eps{e}.failures"), r.failures);
    }
    kv(&mut s, "hopf.pass", suite.hopf_pass());
    let b = &suite.boundary;
    kv(&mut s, "boundary.theta_at_r0", format!("{:e}", b.theta_at_r0));
    kv(&mut s, "boundary.dtheta_end_rel_error", format!("{:e}", b.dtheta_end_rel_error));
    kv(&mut s, "boundary.max_ode_residual", format!("{:e}", b.max_ode_residual));
    kv(&mut s, "boundary.min_margin", format!("{:e}", b.cert.min_margin));
    kv(&mut s, "boundary.pass", b.pass);
    Ok((Status::from_pass(suite.pass()), s))
}

fn trace(cfg: &RunConfig, pb: &Problem, dir: &Path) -> Result<(Status, String)> {
    let tc = &cfg.experiments.trace;
    let n = pb.domain.dim();
    let (omegas, _) = omega_grid(&pb.domain, tc.omegas);
    let mut orbits = Vec::with_capacity(omegas.len());
    let mut pos_csv = String::from("orbit,t");
    for k in 0..n {
        let _ = write!(pos_csv, ",x{}", k + 1);
    }
    pos_csv.push('\n');
    let mut jac_csv = String::from("orbit,t,analytic,numeric,rel_diff\n");
    let mut max_rel: f64 = 0.0;
    for (i, w) in omegas.iter().enumerate() {
        let o = integrate_orbit(&pb.field, w, tc.h, &pb.domain, DEFAULT_EXIT_TOL)?;
        for t in o.uniform_times(tc.samples_per_orbit) {
            let x = o.position(t)?;
            let _ = write!(pos_csv, "{i},{t:e}");
            for v in &x {
                let _ = write!(pos_csv, ",{v:e}");
            }
            pos_csv.push('\n');
            let a = jacobian_analytic(&pb.field, &o, t)?;
            let num = jacobian_numeric(&pb.field, w, tc.h, t, &pb.domain, tc.fd_step)?;
            let rel = (a - num).abs() / a.abs();
            max_rel = max_rel.max(rel);
            let _ = writeln!(jac_csv, "{i},{t:e},{a:e},{num:e},{rel:e}");
        }
        orbits.push(o);
    }
    let bounds = certify_jacobian_bounds(&pb.field, &orbits)?;
    write(dir, "orbits.csv", &pos_csv)?;
    write(dir, "jacobian.csv", &jac_csv)?;
    write(dir, "jacobian_bounds.csv", &bounds.to_csv())?;
    let mut s = String::new();
    kv(&mut s, "orbits", orbits.len());
    kv(&mut s, "max_rel_diff", format!("{max_rel:e}"));
    kv(&mut s, "min_neg_y", format!("{:e}", bounds.min_neg_y));
    kv(&mut s, "measured_c", format!("{:e}", bounds.measured_c));
    kv(&mut s, "lower_violations", bounds.lower_violations);
    kv(&mut s, "backward_below", bounds.backward_below);
    let pass = max_rel <= 1e-6 && bounds.pass;
    kv(&mut s, "pass", pass);
    Ok((Status::from_pass(pass), s))
}
