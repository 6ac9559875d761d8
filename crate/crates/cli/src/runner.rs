//! Batch execution of an [`ExperimentConfig`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::Context;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toges_core::diagnostics::StrongConvexityBounds;
use toges_core::dynamics::aux_point;
use toges_core::moreau::MoreauEnvelope;
use toges_core::*;

use crate::config::{CheckSpec, ExperimentConfig, FastestAt, RateSpec, RunSpec};
use crate::{csvio, plot};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub workers: usize,
    pub tol_scale: f64,
}

/// Why an experiment did not complete normally.
#[derive(Debug)]
pub enum Failure {
    /// A run asks for something its problem or system cannot provide.
    Capability(String),
    /// Parameters that parse but are unusable.
    Config(String),
    Io(anyhow::Error),
}

#[derive(Debug, Default)]
pub struct Outcome {
    /// Failed invariant checks and failed runs, one message each.
    pub violations: Vec<String>,
    pub written: Vec<PathBuf>,
}

/// Per-sample table of one run; `energy` is present only when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub t: Vec<f64>,
    pub gap_u: Vec<f64>,
    pub gap_v: Vec<f64>,
    pub grad_norm_v: Vec<f64>,
    pub energy: Option<Vec<f64>>,
    pub dist_argmin: Vec<f64>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        match name {
            "t" => Some(&self.t),
            "gap_u" => Some(&self.gap_u),
            "gap_v" => Some(&self.gap_v),
            "grad_norm_v" => Some(&self.grad_norm_v),
            "energy" => self.energy.as_deref(),
            "dist_argmin" => Some(&self.dist_argmin),
            _ => None,
        }
    }
}

#[derive(Debug)]
struct RunResult {
    table: Table,
    rates: String,
    violations: Vec<String>,
}

/// The objective the diagnostics measure: the problem itself, or its Moreau
/// envelope for the regularized system.
enum Measured {
    Plain(Builtin),
    Envelope(MoreauEnvelope<Builtin>),
}

impl Measured {
    fn get(&self) -> &dyn Objective {
        match self {
            Measured::Plain(p) => p,
            Measured::Envelope(e) => e,
        }
    }
}

fn measured(run: &RunSpec) -> Result<Measured, Failure> {
    if run.system.kind == SystemKind::TogesVR {
        regularize(run.problem, run.system.lambda)
            .map(Measured::Envelope)
            .map_err(|e| Failure::Capability(format!("run '{}': {e}", run.name)))
    } else {
        Ok(Measured::Plain(run.problem))
    }
}

/// Rejects runs whose requests cannot be met before anything is integrated.
pub fn preflight(cfg: &ExperimentConfig) -> Result<(), Failure> {
    for run in &cfg.runs {
        let name = &run.name;
        let cap = |what: String| Failure::Capability(format!("run '{name}': {what}"));
        let dcfg = run.system.to_dynamics();
        if dcfg.dim() != run.problem.dim() {
            return Err(Failure::Config(format!(
                "run '{name}': u0 has {} components but {} is {}-dimensional",
                dcfg.dim(),
                run.problem,
                run.problem.dim()
            )));
        }
        dcfg.validate().map_err(|e| Failure::Config(format!("run '{name}': {e}")))?;
        run.integrator
            .to_integrator(1.0)
            .validate(dcfg.t0)
            .map_err(|e| Failure::Config(format!("run '{name}': {e}")))?;
        dcfg.check_capabilities(&run.problem).map_err(|e| cap(e.to_string()))?;
        let kind = dcfg.kind;
        let has_prox = run.problem.prox_oracle().is_some();
        let energy_ok = matches!(
            kind,
            SystemKind::TogesV | SystemKind::TogesVH | SystemKind::TogesVR | SystemKind::Sc3
        );
        let wants_energy = run.diagnostics.energy
            || run.diagnostics.checks.iter().any(|c| matches!(c, CheckSpec::EnergyMonotone { .. }));
        if kind == SystemKind::Sc3 && !run.problem.unique_minimizer() && wants_energy {
            return Err(cap(format!("the SC3 energy needs a unique minimizer, {} has none", run.problem)));
        }
        if run.diagnostics.energy && !energy_ok {
            return Err(cap(format!("no Lyapunov energy is defined for {kind}")));
        }
        for rate in &run.diagnostics.rates {
            check_selector(rate, kind, has_prox).map_err(cap)?;
        }
        for check in &run.diagnostics.checks {
            match check {
                CheckSpec::EnergyMonotone { .. } if !energy_ok => {
                    return Err(cap(format!("no Lyapunov energy is defined for {kind}")))
                }
                CheckSpec::Reduction { .. }
                    if !matches!(kind, SystemKind::TogesV | SystemKind::Sc3) =>
                {
                    return Err(cap(format!("no second-order reduction is defined for {kind}")))
                }
                CheckSpec::ProxEnvelope if kind != SystemKind::TogesVR => {
                    return Err(cap("the prox envelope check needs a TOGES_VR run".into()))
                }
                CheckSpec::Gradient { .. } if !run.problem.has_grad() && kind != SystemKind::TogesVR => {
                    return Err(cap(format!("{} has no gradient to check", run.problem)))
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn check_selector(rate: &RateSpec, kind: SystemKind, has_prox: bool) -> Result<(), String> {
    let sel = rate.selector;
    let third = matches!(sel, GapSelector::AtV | GapSelector::AtY | GapSelector::AtProxV);
    if third && !kind.is_third_order() {
        return Err(format!("{sel} needs a third-order system, {kind} is second-order"));
    }
    if matches!(sel, GapSelector::AtProxU | GapSelector::AtProxV) && !has_prox {
        return Err(format!("{sel} needs a proximal mapping"));
    }
    Ok(())
}

/// Runs every configured run, writes the artifacts and evaluates the checks.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome, Failure> {
    preflight(cfg)?;
    let mut outcome = Outcome::default();
    if cfg.runs.is_empty() {
        return Ok(outcome);
    }
    if !(opts.tol_scale > 0.0 && opts.tol_scale.is_finite()) {
        return Err(Failure::Config(format!("tolerance scale must be positive, got {}", opts.tol_scale)));
    }

    let slots: Vec<Mutex<Option<Result<RunResult, String>>>> =
        cfg.runs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = opts.workers.clamp(1, cfg.runs.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cfg.runs.len() {
                    break;
                }
                let seed = cfg.seed.wrapping_add(i as u64);
                let res = execute(&cfg.runs[i], seed, opts.tol_scale);
                *slots[i].lock().unwrap() = Some(res);
            });
        }
    });

    fs::create_dir_all(&opts.out_dir)
        .with_context(|| format!("creating {}", opts.out_dir.display()))
        .map_err(Failure::Io)?;
    let mut tables = Vec::with_capacity(cfg.runs.len());
    for (run, slot) in cfg.runs.iter().zip(slots) {
        match slot.into_inner().unwrap().expect("every run executed") {
            Ok(res) => {
                let csv = opts.out_dir.join(format!("{}.csv", run.name));
                csvio::write_table(&csv, &res.table).map_err(Failure::Io)?;
                let rates = opts.out_dir.join(format!("{}.rates.txt", run.name));
                write(&rates, &res.rates)?;
                outcome.written.extend([csv, rates]);
                outcome.violations.extend(res.violations.into_iter().map(|v| format!("{}: {v}", run.name)));
                tables.push(Some(res.table));
            }
            Err(e) => {
                outcome.violations.push(format!("{}: run failed: {e}", run.name));
                tables.push(None);
            }
        }
    }

    for fig in &cfg.figures {
        let mut series = Vec::new();
        for name in &fig.runs {
            let idx = cfg.runs.iter().position(|r| &r.name == name).expect("checked at parse time");
            if let Some(t) = &tables[idx] {
                match t.column(&fig.column) {
                    Some(col) => series.push((name.clone(), t.t.clone(), col.to_vec())),
                    None => outcome
                        .violations
                        .push(format!("figure '{}': run '{name}' has no column '{}'", fig.name, fig.column)),
                }
            }
        }
        if let Some(f) = &fig.fastest_at {
            outcome.violations.extend(rank_at(&fig.name, &fig.column, f, &series));
        }
        let svg = opts.out_dir.join(format!("{}.svg", fig.name));
        write(&svg, &plot::svg(fig, &series))?;
        let gp = opts.out_dir.join(format!("{}.gp", fig.name));
        write(&gp, &plot::gnuplot(fig, &cfg.runs, &series))?;
        outcome.written.extend([svg, gp]);
    }
    Ok(outcome)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(Failure::Io)
}

fn rank_at(fig: &str, column: &str, f: &FastestAt, series: &[plot::Series]) -> Vec<String> {
    let (t, winner) = (f.t, f.run.as_str());
    let at = |ts: &[f64], ys: &[f64]| ts.iter().position(|&x| x == t).map(|i| ys[i]);
    let Some((_, wt, wy)) = series.iter().find(|s| s.0 == winner) else {
        return vec![format!("figure '{fig}': run '{winner}' produced no data")];
    };
    let Some(best) = at(wt, wy) else {
        return vec![format!("figure '{fig}': t = {t} is not a sample time of '{winner}'")];
    };
    let mut out = Vec::new();
    let rivals = series.iter().filter(|s| s.0 != winner && (f.than.is_empty() || f.than.contains(&s.0)));
    for (name, ts, ys) in rivals {
        match at(ts, ys) {
            Some(y) if best < y => {}
            Some(y) => out.push(format!(
                "figure '{fig}': {column} of '{winner}' at t = {t} is {best:e}, not below '{name}' ({y:e})"
            )),
            None => out.push(format!("figure '{fig}': t = {t} is not a sample time of '{name}'")),
        }
    }
    out
}

/// Clamps rounding-level negative gaps to zero.
fn gap_at(p: &dyn Objective, x: &[f64]) -> Result<f64, Error> {
    if !p.in_domain(x) {
        return Err(Error::Domain);
    }
    let inf = p.inf_value();
    let g = p.value(x)? - inf;
    if g < -toges_core::diagnostics::NEGATIVE_GAP_TOL * (1.0 + inf.abs()) {
        return Err(Error::Invariant(format!("gap {g} below the stated infimum")));
    }
    Ok(g.max(0.0))
}

fn execute(run: &RunSpec, seed: u64, tol_scale: f64) -> Result<RunResult, String> {
    let dcfg = run.system.to_dynamics();
    let icfg = run.integrator.to_integrator(tol_scale);
    let traj = integrate(&dcfg, &run.problem, &icfg).map_err(|e| e.to_string())?;
    let m = measured(run).map_err(|_| "envelope unavailable".to_string())?;
    let obj = m.get();
    let err = |e: Error| e.to_string();

    let gap_u = gap_series(&traj, obj, GapSelector::AtU).map_err(err)?;
    let n = dcfg.dim();
    let mut gap_v = Vec::with_capacity(traj.samples.len());
    let mut grad_norm_v = Vec::with_capacity(traj.samples.len());
    let mut g = vec![0.0; n];
    for s in &traj.samples {
        let p = aux_point(&dcfg, &s.state).unwrap_or_else(|| s.state.u.clone());
        gap_v.push(gap_at(obj, &p).map_err(err)?);
        obj.grad(&p, &mut g).map_err(err)?;
        grad_norm_v.push(g.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    let mut z = vec![0.0; n];
    obj.project_argmin(&dcfg.u0, &mut z);

    let mut violations = Vec::new();
    let energy = if run.diagnostics.energy {
        Some(energy_column(&traj, obj, &z).map_err(err)?)
    } else {
        None
    };
    let dist = distance_to_argmin_series(&traj, obj, GapSelector::AtU).map_err(err)?;

    let mut rates = String::new();
    let _ = writeln!(rates, "# {} on {}: {}", dcfg.kind, run.problem, run.name);
    for spec in &run.diagnostics.rates {
        let series = gap_series(&traj, obj, spec.selector).map_err(err)?;
        let (lo, hi) = spec.window;
        match fit_rate(&series, spec.window, spec.power) {
            Ok(est) => {
                let verdict = match spec.max_slope {
                    Some(limit) if est.slope <= limit => "pass",
                    Some(limit) => {
                        violations.push(format!(
                            "{} slope {:.4} on [{lo}, {hi}] exceeds {limit}",
                            spec.selector, est.slope
                        ));
                        "fail"
                    }
                    None => "-",
                };
                let _ = writeln!(
                    rates,
                    "{} window={lo:e}:{hi:e} power={:e} slope={:e} intercept={:e} sup_scaled={:e} residual={:e} used={} excluded={} verdict={verdict}",
                    spec.selector, est.power, est.slope, est.intercept, est.sup_scaled, est.residual, est.used, est.excluded
                );
            }
            Err(e) => {
                if spec.max_slope.is_some() {
                    violations.push(format!("{} rate on [{lo}, {hi}]: {e}", spec.selector));
                }
                let _ = writeln!(rates, "{} window={lo:e}:{hi:e} error=\"{e}\" verdict=fail", spec.selector);
            }
        }
    }

    for check in &run.diagnostics.checks {
        match *check {
            CheckSpec::EnergyMonotone { tol } => {
                violations.extend(energy_check(&traj, obj, &z, tol).map_err(err)?)
            }
            CheckSpec::Gradient { points, tol, radius } => {
                violations.extend(gradient_check(obj, &dcfg.u0, points, tol, radius, seed).map_err(err)?)
            }
            CheckSpec::Reduction { tol } => {
                for s in &traj.samples {
                    let r = residual_reduction(&dcfg, obj, &s.state, s.top_derivative()).map_err(err)?;
                    if r.is_nan() || r > tol {
                        violations.push(format!("reduction residual {r:e} at t = {}", s.state.t));
                        break;
                    }
                }
            }
            CheckSpec::ProxEnvelope => {
                let prox = gap_series(&traj, obj, GapSelector::AtProxU).map_err(err)?;
                for (a, b) in prox.points.iter().zip(&gap_u.points) {
                    if a.1 > b.1 {
                        violations.push(format!("f(prox u) exceeds f_lambda(u) at t = {}", a.0));
                        break;
                    }
                }
            }
        }
    }

    let table = Table {
        t: traj.times().collect(),
        gap_u: gap_u.points.iter().map(|p| p.1).collect(),
        gap_v,
        grad_norm_v,
        energy,
        dist_argmin: dist.into_iter().map(|p| p.1).collect(),
    };
    Ok(RunResult { table, rates, violations })
}

fn energy_column(traj: &Trajectory, obj: &dyn Objective, z: &[f64]) -> Result<Vec<f64>, Error> {
    let cfg = &traj.cfg;
    traj.samples
        .iter()
        .map(|s| match cfg.kind {
            SystemKind::Sc3 => lyapunov_sc(&s.state, obj, cfg.mu),
            _ => lyapunov_e(&s.state, obj, cfg, z).map(|e| e.value()),
        })
        .collect()
}

fn energy_check(traj: &Trajectory, obj: &dyn Objective, z: &[f64], tol: f64) -> Result<Vec<String>, Error> {
    let cfg = &traj.cfg;
    if cfg.kind == SystemKind::Sc3 {
        let b = StrongConvexityBounds::from_initial(&traj.samples[0].state, obj, cfg.mu)?;
        let values = energy_column(traj, obj, z)?;
        let mut out = Vec::new();
        for (s, e) in traj.samples.iter().zip(&values) {
            let bound = b.energy(s.state.t);
            if *e > bound * (1.0 + tol) {
                out.push(format!("energy {e:e} above its envelope {bound:e} at t = {}", s.state.t));
                break;
            }
        }
        let series: Vec<(f64, f64)> = traj.times().zip(values).collect();
        out.extend(
            check_monotone(&series, cfg.t0, tol)
                .iter()
                .take(1)
                .map(|v| format!("energy rose by {:e} at t = {}", v.increase, v.t)),
        );
        return Ok(out);
    }
    let rep = match energy_report(traj, obj, z, tol) {
        Ok(rep) => rep,
        Err(Error::Invariant(msg)) => return Ok(vec![msg]),
        Err(e) => return Err(e),
    };
    Ok(rep
        .violations
        .iter()
        .take(1)
        .map(|v| {
            format!(
                "energy rose by {:e} at t = {} ({} increases past t1 = {})",
                v.increase,
                v.t,
                rep.violations.len(),
                rep.threshold_t1
            )
        })
        .collect())
}

fn gradient_check(
    obj: &dyn Objective,
    center: &[f64],
    points: usize,
    tol: f64,
    radius: f64,
    seed: u64,
) -> Result<Vec<String>, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = center.len();
    let mut worst = (0.0f64, 0.0f64);
    let mut done = 0;
    let mut attempts = 0;
    while done < points && attempts < 100 * points.max(1) {
        attempts += 1;
        let x: Vec<f64> = center.iter().map(|c| c + rng.random_range(-radius..=radius)).collect();
        if !obj.in_domain(&x) {
            continue;
        }
        worst.0 = worst.0.max(check_gradient(obj, &x, 1e-5)?);
        if obj.has_hvp() {
            let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            worst.1 = worst.1.max(check_hvp(obj, &x, &d, 1e-5)?);
        }
        done += 1;
    }
    let mut out = Vec::new();
    if done < points {
        out.push(format!("only {done} of {points} gradient-check points fell in the domain"));
    }
    if worst.0 > tol {
        out.push(format!("gradient check error {:e} above {tol:e}", worst.0));
    }
    if worst.1 > tol {
        out.push(format!("hvp check error {:e} above {tol:e}", worst.1));
    }
    Ok(out)
}

