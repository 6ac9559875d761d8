//! Adaptive Dormand–Prince 5(4) integration with dense output.
//!
//! Step-size control follows the proportional-integral scheme of Hairer,
//! Nørsett & Wanner (`dopri5`): the error norm is the RMS of
//! `err_i / (abs_tol + rel_tol · max(|y0_i|, |y1_i|))`, a step is accepted
//! when that norm is ≤ 1, and the new step is `h · err^{-0.17} · err_old^{0.04}`
//! clamped to `[h/5, 10h]` with safety factor 0.9.
//!
//! Every accepted step keeps the coefficients of the pair's 4th-order
//! continuous extension, so [`sample_at`] can interpolate anywhere in the span.
//! A step whose stage evaluation leaves the objective's domain is rejected and
//! halved; 40 consecutive rejections abort the run.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{eval_field, DynamicsConfig, FieldScratch, PhaseState};
use crate::problems::Objective;
use crate::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th minus 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const MAX_DOMAIN_REJECTIONS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub t_end: f64,
    /// Output times; `t0` is prepended when missing.
    pub sample_grid: Vec<f64>,
    pub max_steps: usize,
}

impl IntegratorConfig {
    /// Defaults: `rel_tol = 1e-9`, `abs_tol = 1e-12`, `h_init = 1e-3`,
    /// `h_max = t_end / 100`, one million steps, samples at `t_end` only.
    pub fn new(t_end: f64) -> Self {
        IntegratorConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            h_init: 1e-3,
            h_max: t_end / 100.0,
            t_end,
            sample_grid: vec![t_end],
            max_steps: 1_000_000,
        }
    }

    pub fn tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn grid(mut self, grid: Vec<f64>) -> Self {
        self.sample_grid = grid;
        self
    }

    pub fn h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn validate(&self, t0: f64) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::Config(m));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad(format!("tolerances must be positive ({}, {})", self.rel_tol, self.abs_tol));
        }
        if !(self.t_end > t0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must exceed t0 = {t0}", self.t_end));
        }
        if !(self.h_init > 0.0 && self.h_max > 0.0) {
            return bad("h_init and h_max must be positive".into());
        }
        if self.sample_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("sample grid must be strictly increasing".into());
        }
        if let (Some(&lo), Some(&hi)) = (self.sample_grid.first(), self.sample_grid.last()) {
            if lo < t0 || hi > self.t_end {
                return bad(format!("sample grid [{lo}, {hi}] leaves [{t0}, {}]", self.t_end));
            }
        }
        Ok(())
    }
}

/// `n` logarithmically spaced points from `lo` to `hi`, with both endpoints
/// exact.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo, "log_grid needs n >= 2 and 0 < lo < hi");
    let (a, b) = (libm::log(lo), libm::log(hi));
    let mut g: Vec<f64> =
        (0..n).map(|i| libm::exp(a + (b - a) * i as f64 / (n - 1) as f64)).collect();
    g[0] = lo;
    g[n - 1] = hi;
    // exp(log(x)) can land a hair below lo or above hi; keep the grid monotone
    for v in &mut g[1..n - 1] {
        *v = v.clamp(lo, hi);
    }
    g.dedup();
    g
}

/// A state on the output grid together with the field evaluated there.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: PhaseState,
    /// Time derivative in flat layout (`(u̇, ü, u⃛)` or `(ẋ, ẍ)`).
    pub deriv: Vec<f64>,
}

impl Sample {
    /// Highest derivative: `u⃛` for third-order kinds, `ẍ` otherwise.
    pub fn top_derivative(&self) -> &[f64] {
        let n = self.state.dim();
        &self.deriv[self.deriv.len() - n..]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub domain_rejections: usize,
    pub field_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    t: f64,
    h: f64,
    /// Five stacked vectors of the continuous extension.
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub cfg: DynamicsConfig,
    pub samples: Vec<Sample>,
    pub stats: StepStats,
    segments: Vec<Segment>,
    end: PhaseState,
}

impl Trajectory {
    pub fn start_time(&self) -> f64 {
        self.cfg.t0
    }

    /// Last time reached; `t_end` unless the run was truncated.
    pub fn end_time(&self) -> f64 {
        self.end.t
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.state.t)
    }

    pub fn final_state(&self) -> &PhaseState {
        &self.end
    }

    /// Sample whose time equals `t` exactly.
    pub fn sample_exact(&self, t: f64) -> Option<&Sample> {
        self.samples
            .binary_search_by(|s| s.state.t.total_cmp(&t))
            .ok()
            .map(|i| &self.samples[i])
    }
}

struct Workspace {
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    y1: Vec<f64>,
    scratch: FieldScratch,
}

fn stage(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (a, k) in terms {
            acc += a * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn interpolate(seg: &Segment, t: f64, out: &mut [f64]) {
    let m = out.len();
    let th = (t - seg.t) / seg.h;
    let th1 = 1.0 - th;
    let c = &seg.coeffs;
    for i in 0..m {
        out[i] = c[i]
            + th * (c[m + i] + th1 * (c[2 * m + i] + th * (c[3 * m + i] + th1 * c[4 * m + i])));
    }
}

/// Integrates `cfg` on `problem` from `t0` to `icfg.t_end`.
pub fn integrate(
    cfg: &DynamicsConfig,
    problem: &dyn Objective,
    icfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    cfg.check_capabilities(problem)?;
    let t0 = cfg.t0;
    icfg.validate(t0)?;

    let order = cfg.kind.order();
    let n = cfg.dim();
    let m = order * n;
    let mut grid = icfg.sample_grid.clone();
    if grid.first() != Some(&t0) {
        grid.insert(0, t0);
    }

    let mut ws = Workspace {
        k: core::array::from_fn(|_| vec![0.0; m]),
        ytmp: vec![0.0; m],
        y1: vec![0.0; m],
        scratch: FieldScratch::new(n),
    };
    let mut stats = StepStats::default();
    let mut y = cfg.initial_state().to_flat();
    y.truncate(m);
    let mut t = t0;

    eval_field(cfg, problem, t, &y, &mut ws.k[0], &mut ws.scratch)?;
    stats.field_evals += 1;

    let mut samples = Vec::with_capacity(grid.len());
    samples.push(Sample { state: PhaseState::from_flat(t, &y, order), deriv: ws.k[0].clone() });
    let mut next_sample = 1;
    let mut segments: Vec<Segment> = Vec::new();

    let mut h = icfg.h_init.min(icfg.h_max);
    let mut err_old = 1e-4;
    let mut last_rejected = false;
    let mut domain_streak = 0usize;
    let mut dense = vec![0.0; m];

    while t < icfg.t_end {
        if stats.accepted + stats.rejected >= icfg.max_steps {
            let partial = Trajectory {
                cfg: cfg.clone(),
                samples,
                stats,
                segments,
                end: PhaseState::from_flat(t, &y, order),
            };
            return Err(Error::Truncated { steps: icfg.max_steps, partial: Box::new(partial) });
        }
        let last = t + 1.01 * h >= icfg.t_end;
        if last {
            h = icfg.t_end - t;
        }

        match try_step(cfg, problem, t, h, &y, &mut ws) {
            Ok(()) => {
                stats.field_evals += 6;
            }
            Err(Error::Domain) => {
                stats.rejected += 1;
                stats.domain_rejections += 1;
                domain_streak += 1;
                if domain_streak >= MAX_DOMAIN_REJECTIONS {
                    return Err(Error::StepFailure { t, rejections: domain_streak });
                }
                h *= 0.5;
                last_rejected = true;
                continue;
            }
            Err(e) => return Err(e),
        }

        // error estimate
        let mut sum = 0.0;
        for i in 0..m {
            let e = h
                * (E1 * ws.k[0][i]
                    + E3 * ws.k[2][i]
                    + E4 * ws.k[3][i]
                    + E5 * ws.k[4][i]
                    + E6 * ws.k[5][i]
                    + E7 * ws.k[6][i]);
            let sc = icfg.abs_tol + icfg.rel_tol * y[i].abs().max(ws.y1[i].abs());
            sum += (e / sc) * (e / sc);
        }
        let err = libm::sqrt(sum / m as f64);
        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.5;
            last_rejected = true;
            continue;
        }
        let fac11 = libm::pow(err, EXPO);

        if err <= 1.0 {
            domain_streak = 0;
            let t_new = if last { icfg.t_end } else { t + h };

            // continuous extension coefficients
            let mut coeffs = vec![0.0; 5 * m];
            for i in 0..m {
                let ydiff = ws.y1[i] - y[i];
                let bspl = h * ws.k[0][i] - ydiff;
                coeffs[i] = y[i];
                coeffs[m + i] = ydiff;
                coeffs[2 * m + i] = bspl;
                coeffs[3 * m + i] = ydiff - h * ws.k[6][i] - bspl;
                coeffs[4 * m + i] = h
                    * (D1 * ws.k[0][i]
                        + D3 * ws.k[2][i]
                        + D4 * ws.k[3][i]
                        + D5 * ws.k[4][i]
                        + D6 * ws.k[5][i]
                        + D7 * ws.k[6][i]);
            }
            let seg = Segment { t, h: t_new - t, coeffs };

            while next_sample < grid.len() && grid[next_sample] <= t_new {
                let ts = grid[next_sample];
                let (state, deriv) = if ts == t_new {
                    (PhaseState::from_flat(ts, &ws.y1, order), ws.k[6].clone())
                } else {
                    interpolate(&seg, ts, &mut dense);
                    let mut d = vec![0.0; m];
                    eval_field(cfg, problem, ts, &dense, &mut d, &mut ws.scratch)?;
                    stats.field_evals += 1;
                    (PhaseState::from_flat(ts, &dense, order), d)
                };
                samples.push(Sample { state, deriv });
                next_sample += 1;
            }
            segments.push(seg);

            stats.accepted += 1;
            t = t_new;
            core::mem::swap(&mut y, &mut ws.y1);
            let (first, rest) = ws.k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);

            let fac = (fac11 / libm::pow(err_old, BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = (h / fac).min(icfg.h_max);
            if last_rejected {
                h_new = h_new.min(h);
            }
            err_old = err.max(1e-4);
            last_rejected = false;
            h = h_new;
        } else {
            stats.rejected += 1;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
        if !(h > f64::EPSILON * t.abs()) {
            return Err(Error::StepFailure { t, rejections: stats.rejected });
        }
    }

    Ok(Trajectory {
        cfg: cfg.clone(),
        samples,
        stats,
        segments,
        end: PhaseState::from_flat(t, &y, order),
    })
}

fn try_step(
    cfg: &DynamicsConfig,
    problem: &dyn Objective,
    t: f64,
    h: f64,
    y: &[f64],
    ws: &mut Workspace,
) -> Result<()> {
    let Workspace { k, ytmp, y1, scratch } = ws;
    let [k1, k2, k3, k4, k5, k6, k7] = k;
    stage(ytmp, y, h, &[(A21, k1)]);
    eval_field(cfg, problem, t + C2 * h, ytmp, k2, scratch)?;
    stage(ytmp, y, h, &[(A31, k1), (A32, k2)]);
    eval_field(cfg, problem, t + C3 * h, ytmp, k3, scratch)?;
    stage(ytmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
    eval_field(cfg, problem, t + C4 * h, ytmp, k4, scratch)?;
    stage(ytmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
    eval_field(cfg, problem, t + C5 * h, ytmp, k5, scratch)?;
    stage(ytmp, y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
    eval_field(cfg, problem, t + h, ytmp, k6, scratch)?;
    stage(y1, y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
    eval_field(cfg, problem, t + h, y1, k7, scratch)
}

/// Dense-output state at time `t`; exact at stored sample times.
pub fn sample_at(traj: &Trajectory, t: f64) -> Result<PhaseState> {
    let (lo, hi) = (traj.start_time(), traj.end_time());
    if !(t >= lo && t <= hi) {
        return Err(Error::OutOfRange { t, lo, hi });
    }
    if let Some(s) = traj.sample_exact(t) {
        return Ok(s.state.clone());
    }
    if t == hi {
        return Ok(traj.end.clone());
    }
    let idx = traj.segments.partition_point(|s| s.t <= t).saturating_sub(1);
    let seg = &traj.segments[idx];
    let m = seg.coeffs.len() / 5;
    let mut y = vec![0.0; m];
    interpolate(seg, t, &mut y);
    Ok(PhaseState::from_flat(t, &y, traj.cfg.kind.order()))
}
