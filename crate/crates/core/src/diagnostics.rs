//! Gap series, Lyapunov energies and the checks built on them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dynamics::{aux_point_v, aux_point_y, DynamicsConfig, PhaseState, SystemKind};
use crate::integrator::{sample_at, Trajectory};
use crate::linalg::{axpy_into, dist, dot, norm_sq};
use crate::problems::Objective;
use crate::{Error, Result};

/// Gaps at or below this are treated as rounding noise by [`fit_rate`].
pub const GAP_FLOOR: f64 = 1e-14;

/// Negative gaps down to this are rounding and get clamped to zero.
pub const NEGATIVE_GAP_TOL: f64 = 1e-12;

/// Relative agreement required between the two algebraic forms of `E`.
pub const ENERGY_FORM_TOL: f64 = 1e-10;

/// Which point `f(·) − inf f` is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GapSelector {
    AtU,
    AtV,
    AtY,
    AtProxU,
    AtProxV,
}

impl GapSelector {
    pub fn as_str(self) -> &'static str {
        match self {
            GapSelector::AtU => "AT_U",
            GapSelector::AtV => "AT_V",
            GapSelector::AtY => "AT_Y",
            GapSelector::AtProxU => "AT_PROX_U",
            GapSelector::AtProxV => "AT_PROX_V",
        }
    }
}

impl fmt::Display for GapSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GapSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            GapSelector::AtU,
            GapSelector::AtV,
            GapSelector::AtY,
            GapSelector::AtProxU,
            GapSelector::AtProxV,
        ]
        .into_iter()
        .find(|g| g.as_str().eq_ignore_ascii_case(s) || g.as_str()[3..].eq_ignore_ascii_case(s))
        .ok_or_else(|| Error::Config(format!("unknown gap selector '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSeries {
    pub points: Vec<(f64, f64)>,
    pub selector: GapSelector,
    /// Tiny negative gaps that were clamped to zero.
    pub clamped: usize,
}

impl GapSeries {
    /// `(t, t^p · gap)`.
    pub fn scaled(&self, power: f64) -> Vec<(f64, f64)> {
        self.points.iter().map(|&(t, g)| (t, libm::pow(t, power) * g)).collect()
    }

    /// Gap at a sample time, if `t` is one.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.points
            .binary_search_by(|p| p.0.total_cmp(&t))
            .ok()
            .map(|i| self.points[i].1)
    }

    /// `sup t^p · gap` over `lo ≤ t ≤ hi`.
    pub fn sup_scaled(&self, power: f64, lo: f64, hi: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.0 >= lo && p.0 <= hi)
            .map(|&(t, g)| libm::pow(t, power) * g)
            .fold(0.0, f64::max)
    }
}

fn require_third_order(cfg: &DynamicsConfig, what: &str) -> Result<()> {
    if cfg.kind.is_third_order() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} needs a third-order state, {} is second-order", cfg.kind)))
    }
}

/// The point a selector refers to.
pub fn selected_point(
    cfg: &DynamicsConfig,
    problem: &dyn Objective,
    state: &PhaseState,
    selector: GapSelector,
) -> Result<Vec<f64>> {
    let prox_of = |x: Vec<f64>| -> Result<Vec<f64>> {
        let oracle = problem.prox_oracle().ok_or(Error::Unsupported("a proximal mapping"))?;
        let mut p = vec![0.0; x.len()];
        oracle.prox(cfg.lambda, &x, &mut p);
        Ok(p)
    };
    match selector {
        GapSelector::AtU => Ok(state.u.clone()),
        GapSelector::AtV => {
            require_third_order(cfg, "AT_V")?;
            Ok(aux_point_v(state))
        }
        GapSelector::AtY => {
            require_third_order(cfg, "AT_Y")?;
            Ok(aux_point_y(state, cfg.mu))
        }
        GapSelector::AtProxU => prox_of(state.u.clone()),
        GapSelector::AtProxV => {
            require_third_order(cfg, "AT_PROX_V")?;
            prox_of(aux_point_v(state))
        }
    }
}

fn value_at(problem: &dyn Objective, selector: GapSelector, x: &[f64]) -> Result<f64> {
    match selector {
        GapSelector::AtProxU | GapSelector::AtProxV => {
            let oracle = problem.prox_oracle().ok_or(Error::Unsupported("a proximal mapping"))?;
            Ok(oracle.raw_value(x))
        }
        _ => {
            if !problem.in_domain(x) {
                return Err(Error::Domain);
            }
            problem.value(x)
        }
    }
}

/// `f(point(t)) − inf f` at every sample. Prox selectors evaluate the raw
/// (nonsmooth) function at `prox_{λf}` with `λ` from the trajectory config.
pub fn gap_series(
    traj: &Trajectory,
    problem: &dyn Objective,
    selector: GapSelector,
) -> Result<GapSeries> {
    let inf = problem.inf_value();
    let mut clamped = 0;
    let mut points = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        let x = selected_point(&traj.cfg, problem, &s.state, selector)?;
        let mut gap = value_at(problem, selector, &x)? - inf;
        if gap < 0.0 {
            if gap < -NEGATIVE_GAP_TOL * (1.0 + inf.abs()) {
                return Err(Error::Invariant(format!(
                    "gap {gap} at t = {} is below the stated infimum",
                    s.state.t
                )));
            }
            gap = 0.0;
            clamped += 1;
        }
        points.push((s.state.t, gap));
    }
    Ok(GapSeries { points, selector, clamped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub slope: f64,
    /// Natural-log intercept.
    pub intercept: f64,
    pub window: (f64, f64),
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub power: f64,
    /// `sup t^power · gap` over the window.
    pub sup_scaled: f64,
    pub used: usize,
    /// Points in the window at or below the rounding floor.
    pub excluded: usize,
}

/// Least-squares line through `(ln t, ln gap)` on `window`.
pub fn fit_rate(series: &GapSeries, window: (f64, f64), power: f64) -> Result<RateEstimate> {
    fit_points(&series.points, window, power)
}

pub fn fit_points(points: &[(f64, f64)], window: (f64, f64), power: f64) -> Result<RateEstimate> {
    let (lo, hi) = window;
    let in_window: Vec<(f64, f64)> =
        points.iter().copied().filter(|p| p.0 >= lo && p.0 <= hi).collect();
    let usable: Vec<(f64, f64)> = in_window
        .iter()
        .filter(|p| p.1 > GAP_FLOOR)
        .map(|&(t, g)| (libm::log(t), libm::log(g)))
        .collect();
    let k = usable.len();
    if k < 10 {
        return Err(Error::InsufficientData { usable: k, needed: 10 });
    }
    let kf = k as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / kf;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / kf;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData { usable: 1, needed: 10 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = usable
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let sup_scaled =
        in_window.iter().map(|&(t, g)| libm::pow(t, power) * g).fold(0.0, f64::max);
    Ok(RateEstimate {
        slope,
        intercept,
        window,
        residual: libm::sqrt(rss / kf),
        power,
        sup_scaled,
        used: k,
        excluded: in_window.len() - k,
    })
}

/// An adjacent pair whose value rose by more than the tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// Time of the later point of the pair.
    pub t: f64,
    pub increase: f64,
}

/// Flags each adjacent pair at or beyond `from_t` whose value increases by
/// more than `tol · (1 + |val|)`.
pub fn check_monotone(series: &[(f64, f64)], from_t: f64, tol: f64) -> Vec<Violation> {
    series
        .windows(2)
        .filter(|w| w[0].0 >= from_t)
        .filter_map(|w| {
            let inc = w[1].1 - w[0].1;
            (inc > tol * (1.0 + w[0].1.abs())).then_some(Violation { t: w[1].0, increase: inc })
        })
        .collect()
}

/// Both algebraic forms of the Hessian-damped energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyForms {
    /// `4(t³ − 2βt²)F(v) + ½‖t²(ü + β∇f(v)) + (α+5)t u̇ + 4α(u − z)‖²`
    pub expanded: f64,
    /// `4tδ F(v) + ½‖4t v̇ + βt²∇f(v) + 4α(v − z)‖²`, `δ = t²(1 − 2β/t)`
    pub condensed: f64,
    /// Size of the summands before cancellation; the rounding scale of both
    /// forms.
    pub term_scale: f64,
}

impl EnergyForms {
    pub fn value(&self) -> f64 {
        self.expanded
    }

    pub fn relative_gap(&self) -> f64 {
        let scale = self.expanded.abs().max(self.condensed.abs()).max(self.term_scale);
        if scale == 0.0 {
            0.0
        } else {
            (self.expanded - self.condensed).abs() / scale
        }
    }
}

fn energy_beta(cfg: &DynamicsConfig) -> Result<f64> {
    match cfg.kind {
        SystemKind::TogesV | SystemKind::TogesVR => Ok(0.0),
        SystemKind::TogesVH => Ok(cfg.beta),
        k => Err(Error::Config(format!("the energy E is defined for the TOGES_V family, not {k}"))),
    }
}

/// `t₁ = 2β(α − 2)/(α − 3)` for `α > 3`; `None` otherwise.
pub fn threshold_t1(alpha: f64, beta: f64) -> Option<f64> {
    (alpha > 3.0).then(|| 2.0 * beta * (alpha - 2.0) / (alpha - 3.0))
}

/// Lyapunov energy `E(t)` of the Hessian-damped system (β = 0 for plain
/// `TOGES_V`), anchored at `z ∈ argmin f`.
pub fn lyapunov_e(
    state: &PhaseState,
    problem: &dyn Objective,
    cfg: &DynamicsConfig,
    z: &[f64],
) -> Result<EnergyForms> {
    let beta = energy_beta(cfg)?;
    let alpha = cfg.alpha;
    let t = state.t;
    let n = state.dim();
    let v = aux_point_v(state);
    if !problem.in_domain(&v) {
        return Err(Error::Domain);
    }
    let gap_v = problem.value(&v)? - problem.inf_value();
    let mut g = vec![0.0; n];
    if beta != 0.0 {
        problem.grad(&v, &mut g)?;
    }

    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut wabs = vec![0.0; n];
    for i in 0..n {
        let (u, du, ddu) = (state.u[i], state.du[i], state.ddu[i]);
        w1[i] = t * t * (ddu + beta * g[i]) + (alpha + 5.0) * t * du + 4.0 * alpha * (u - z[i]);
        wabs[i] = t * t * (ddu.abs() + (beta * g[i]).abs())
            + (alpha + 5.0) * t * du.abs()
            + 4.0 * alpha * (u.abs() + z[i].abs());
        let dv = 0.25 * t * ddu + 1.25 * du;
        w2[i] = 4.0 * t * dv + t * t * beta * g[i] + 4.0 * alpha * (v[i] - z[i]);
    }
    let delta = t * t * (1.0 - 2.0 * beta / t);
    Ok(EnergyForms {
        expanded: 4.0 * (t * t * t - 2.0 * beta * t * t) * gap_v + 0.5 * norm_sq(&w1),
        condensed: 4.0 * t * delta * gap_v + 0.5 * norm_sq(&w2),
        term_scale: 4.0 * t * t * t * (gap_v.abs() + problem.inf_value().abs())
            + 0.5 * norm_sq(&wabs),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub values: Vec<(f64, f64)>,
    /// Start of the monotonicity window: `max(t₁, t₀)`.
    pub threshold_t1: f64,
    pub violations: Vec<Violation>,
    /// Largest relative disagreement between the two forms of `E`.
    pub max_form_gap: f64,
}

impl EnergyReport {
    /// `E` at `t` if `t` is a sample time.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.values
            .binary_search_by(|p| p.0.total_cmp(&t))
            .ok()
            .map(|i| self.values[i].1)
    }
}

/// Evaluates `E` at every sample and checks it is nonincreasing past `t₁`.
///
/// Fails with [`Error::Invariant`] when the two forms of `E` disagree by more
/// than [`ENERGY_FORM_TOL`] relative.
pub fn energy_report(
    traj: &Trajectory,
    problem: &dyn Objective,
    z: &[f64],
    tol: f64,
) -> Result<EnergyReport> {
    let cfg = &traj.cfg;
    let beta = energy_beta(cfg)?;
    let t1 = threshold_t1(cfg.alpha, beta).unwrap_or(cfg.t0).max(cfg.t0);
    let mut values = Vec::with_capacity(traj.samples.len());
    let mut max_form_gap = 0.0f64;
    for s in &traj.samples {
        let e = lyapunov_e(&s.state, problem, cfg, z)?;
        let gap = e.relative_gap();
        if gap > ENERGY_FORM_TOL {
            return Err(Error::Invariant(format!(
                "energy forms disagree at t = {}: {} vs {}",
                s.state.t, e.expanded, e.condensed
            )));
        }
        max_form_gap = max_form_gap.max(gap);
        values.push((s.state.t, e.value()));
    }
    let violations = check_monotone(&values, t1, tol);
    Ok(EnergyReport { values, threshold_t1: t1, violations, max_form_gap })
}

/// `𝓔 = f(y) − inf f + ½‖√μ(y − x*) + ẏ‖²` with `y = u + u̇/√μ`,
/// `ẏ = u̇ + ü/√μ`.
pub fn lyapunov_sc(state: &PhaseState, problem: &dyn Objective, mu: f64) -> Result<f64> {
    if !problem.unique_minimizer() {
        return Err(Error::Config("the strongly convex energy needs a unique minimizer".into()));
    }
    if state.ddu.len() != state.dim() {
        return Err(Error::Config("the strongly convex energy needs a third-order state".into()));
    }
    let n = state.dim();
    let r = libm::sqrt(mu);
    let y = aux_point_y(state, mu);
    let mut xstar = vec![0.0; n];
    problem.project_argmin(&y, &mut xstar);
    let m: Vec<f64> = (0..n)
        .map(|i| r * (y[i] - xstar[i]) + state.du[i] + state.ddu[i] / r)
        .collect();
    Ok(problem.value(&y)? - problem.inf_value() + 0.5 * norm_sq(&m))
}

/// Exponential envelopes for the strongly convex third-order system, built
/// from the data at `t₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongConvexityBounds {
    pub mu: f64,
    pub t0: f64,
    /// `𝓔(t₀)`
    pub energy0: f64,
    /// `f(u(t₀)) − inf f`
    pub gap0: f64,
    /// `‖y(t₀) − x*‖²`
    pub dist_y0_sq: f64,
}

impl StrongConvexityBounds {
    pub fn from_initial(state: &PhaseState, problem: &dyn Objective, mu: f64) -> Result<Self> {
        let energy0 = lyapunov_sc(state, problem, mu)?;
        let y = aux_point_y(state, mu);
        let mut xstar = vec![0.0; y.len()];
        problem.project_argmin(&y, &mut xstar);
        let d = dist(&y, &xstar);
        Ok(StrongConvexityBounds {
            mu,
            t0: state.t,
            energy0,
            gap0: problem.value(&state.u)? - problem.inf_value(),
            dist_y0_sq: d * d,
        })
    }

    fn decay(&self, t: f64) -> f64 {
        libm::exp(-libm::sqrt(self.mu) * (t - self.t0))
    }

    /// `𝓔(t₀) e^{−√μ(t − t₀)}`, which also bounds `f(y(t)) − inf f`.
    pub fn energy(&self, t: f64) -> f64 {
        self.energy0 * self.decay(t)
    }

    /// `(C√μ t + C₀) e^{−√μ t}` with `C = 𝓔(t₀)e^{√μ t₀}` and
    /// `C₀ = e^{√μ t₀}F(t₀) − C√μ t₀`, evaluated as
    /// `(𝓔(t₀)√μ(t − t₀) + F(t₀)) e^{−√μ(t − t₀)}`.
    pub fn gap_u(&self, t: f64) -> f64 {
        (self.energy0 * libm::sqrt(self.mu) * (t - self.t0) + self.gap0) * self.decay(t)
    }

    /// `‖u(t) − x*‖² ≤ (2/μ) · gap_u(t)`.
    pub fn dist_u_sq(&self, t: f64) -> f64 {
        2.0 / self.mu * self.gap_u(t)
    }

    /// `‖y(t) − x*‖² ≤ (‖y(t₀) − x*‖² + 2𝓔(t₀)(t − t₀)/√μ) e^{−√μ(t − t₀)}`.
    pub fn dist_y_sq(&self, t: f64) -> f64 {
        (self.dist_y0_sq + 2.0 * self.energy0 * (t - self.t0) / libm::sqrt(self.mu)) * self.decay(t)
    }
}

/// Trapezoid quadrature of `t⁴‖∇f(v(t))‖²` over the samples from `from_t` to
/// the end of the run.
pub fn grad_integral(traj: &Trajectory, problem: &dyn Objective, from_t: f64) -> Result<f64> {
    require_third_order(&traj.cfg, "the gradient integral")?;
    let n = traj.cfg.dim();
    let mut g = vec![0.0; n];
    let mut integrand = |st: &PhaseState| -> Result<(f64, f64)> {
        let v = aux_point_v(st);
        if !problem.in_domain(&v) {
            return Err(Error::Domain);
        }
        problem.grad(&v, &mut g)?;
        let t2 = st.t * st.t;
        Ok((st.t, t2 * t2 * dot(&g, &g)))
    };
    let mut nodes = Vec::new();
    if traj.sample_exact(from_t).is_none() {
        nodes.push(integrand(&sample_at(traj, from_t)?)?);
    }
    for s in traj.samples.iter().filter(|s| s.state.t >= from_t) {
        nodes.push(integrand(&s.state)?);
    }
    Ok(nodes.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum())
}

/// `‖p(t) − proj_{argmin f}(p(t))‖` at every sample.
pub fn distance_to_argmin_series(
    traj: &Trajectory,
    problem: &dyn Objective,
    selector: GapSelector,
) -> Result<Vec<(f64, f64)>> {
    let n = traj.cfg.dim();
    let mut proj = vec![0.0; n];
    traj.samples
        .iter()
        .map(|s| {
            let p = selected_point(&traj.cfg, problem, &s.state, selector)?;
            problem.project_argmin(&p, &mut proj);
            Ok((s.state.t, dist(&p, &proj)))
        })
        .collect()
}

/// `t⁴ · gap_u(t) − C t`; nonincreasing whenever `4 t³ gap_v ≤ C` on the
/// window, since `d/dt(t⁴u) = 4t³v` makes `u(t)` a weighted average of `v`.
pub fn jensen_series(gap_u: &GapSeries, c: f64) -> Vec<(f64, f64)> {
    gap_u.points.iter().map(|&(t, g)| (t, t * t * t * t * g - c * t)).collect()
}

/// `f(u(t)) + K/(3t³)` for the approximate-descent check.
pub fn descent_series(gap_u: &GapSeries, inf_value: f64, k: f64) -> Vec<(f64, f64)> {
    gap_u
        .points
        .iter()
        .map(|&(t, g)| (t, g + inf_value + k / (3.0 * t * t * t)))
        .collect()
}

/// `u + s·d` for callers assembling custom diagnostic points.
pub fn shifted(u: &[f64], s: f64, d: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    axpy_into(&mut out, u, s, d);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, log_grid, IntegratorConfig};
    use crate::problems::{builtin_problem, Builtin};

    fn st(t: f64, u: &[f64], du: &[f64], ddu: &[f64]) -> PhaseState {
        PhaseState { t, u: u.to_vec(), du: du.to_vec(), ddu: ddu.to_vec() }
    }

    fn synthetic(f: impl Fn(f64) -> f64) -> GapSeries {
        let points = log_grid(1.0, 1000.0, 200).into_iter().map(|t| (t, f(t))).collect();
        GapSeries { points, selector: GapSelector::AtU, clamped: 0 }
    }

    #[test]
    fn exact_power_laws_fit_exactly() {
        let r = fit_rate(&synthetic(|t| libm::pow(t, -3.0)), (10.0, 1000.0), 3.0).unwrap();
        assert!((r.slope + 3.0).abs() < 1e-12);
        assert!(r.residual < 1e-12);
        assert!((r.sup_scaled - 1.0).abs() < 1e-12);
        let r = fit_rate(&synthetic(|t| 5.0 * libm::pow(t, -3.0)), (10.0, 1000.0), 3.0).unwrap();
        assert!((r.slope + 3.0).abs() < 1e-12);
        assert!((r.intercept - libm::log(5.0)).abs() < 1e-10);
    }

    #[test]
    fn fit_excludes_rounding_floor() {
        let s = synthetic(|t| if t > 20.0 { 1e-16 } else { 1.0 / t });
        let r = fit_rate(&s, (1.0, 1000.0), 1.0).unwrap();
        assert!((r.slope + 1.0).abs() < 1e-12);
        assert!(r.excluded > 0);
        let s = synthetic(|t| if t > 1.1 { 0.0 } else { 1.0 / t });
        assert!(matches!(
            fit_rate(&s, (1.0, 1000.0), 1.0),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn monotone_checks() {
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0)).collect();
        assert!(check_monotone(&flat, 0.0, 1e-7).is_empty());
        let up: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, i as f64)).collect();
        assert_eq!(check_monotone(&up, 0.0, 1e-7).len(), 9);
        assert_eq!(check_monotone(&up, 5.0, 1e-7).len(), 4);
    }

    #[test]
    fn energy_at_rest_on_minimizer_is_zero() {
        let f1 = builtin_problem("f1").unwrap();
        let cfg = DynamicsConfig::new(SystemKind::TogesV, &[0.0, 0.0]);
        let e = lyapunov_e(&st(3.0, &[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]), &f1, &cfg, &[0.0, 0.0])
            .unwrap();
        assert_eq!(e.expanded, 0.0);
        assert_eq!(e.condensed, 0.0);
    }

    #[test]
    fn energy_forms_agree_at_arbitrary_states() {
        let f3 = builtin_problem("f3").unwrap();
        let z = crate::problems::f3_minimizer();
        for (alpha, beta) in [(3.0, 0.0), (4.0, 1.0), (7.5, 0.3)] {
            let cfg = DynamicsConfig::new(SystemKind::TogesVH, &[0.0, 0.0]).alpha(alpha).beta(beta);
            let e = lyapunov_e(&st(2.7, &[0.4, 1.9], &[-0.1, 0.25], &[0.3, -0.6]), &f3, &cfg, &z)
                .unwrap();
            assert!(e.relative_gap() < 1e-12, "{e:?}");
        }
        let sc = DynamicsConfig::new(SystemKind::Sc3, &[0.0, 0.0]);
        assert!(lyapunov_e(&st(1.0, &[0.0; 2], &[0.0; 2], &[0.0; 2]), &f3, &sc, &z).is_err());
    }

    #[test]
    fn delta_and_t1_values() {
        // δ(t) = t²(1 − 2β/t)
        let delta = |t: f64, b: f64| t * t * (1.0 - 2.0 * b / t);
        assert_eq!(delta(2.0, 1.0), 0.0);
        assert_eq!(delta(4.0, 1.0), 8.0);
        assert_eq!(threshold_t1(4.0, 1.0), Some(4.0));
        assert_eq!(threshold_t1(3.0, 1.0), None);
    }

    #[test]
    fn strongly_convex_energy_values() {
        let q = builtin_problem("quad_mu(1)").unwrap();
        let s0 = st(1.0, &[3.0, 1.0], &[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(lyapunov_sc(&s0, &q, 1.0).unwrap(), 10.0);
        let rest = st(1.0, &[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(lyapunov_sc(&rest, &q, 1.0).unwrap(), 0.0);
        let f2 = builtin_problem("f2").unwrap();
        assert!(matches!(lyapunov_sc(&s0, &f2, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn sc_bound_closed_form_matches_definition() {
        let b = StrongConvexityBounds { mu: 4.0, t0: 1.5, energy0: 3.0, gap0: 2.0, dist_y0_sq: 1.0 };
        let r = 2.0;
        let c = 3.0 * libm::exp(r * 1.5);
        let c0 = libm::exp(r * 1.5) * 2.0 - c * r * 1.5;
        for t in [1.5, 2.0, 5.0] {
            let direct = (c * r * t + c0) * libm::exp(-r * t);
            assert!((b.gap_u(t) - direct).abs() <= 1e-12 * direct.abs().max(1e-300));
        }
    }

    #[test]
    fn prox_gap_of_soft_threshold() {
        let abs = builtin_problem("abs_sum").unwrap();
        let cfg = DynamicsConfig::new(SystemKind::TogesVR, &[3.0, 0.0]).lambda(1.0);
        let p = selected_point(&cfg, &abs, &cfg.initial_state(), GapSelector::AtProxU).unwrap();
        assert_eq!(p, [2.0, 0.0]);
        assert_eq!(value_at(&abs, GapSelector::AtProxU, &p).unwrap(), 2.0);
    }

    #[test]
    fn stationary_run_has_zero_diagnostics() {
        let f1 = builtin_problem("f1").unwrap();
        let cfg = DynamicsConfig::new(SystemKind::TogesVH, &[0.0, 0.0]).alpha(4.0).beta(1.0);
        let tr = integrate(&cfg, &f1, &IntegratorConfig::new(20.0).grid(log_grid(1.0, 20.0, 30)))
            .unwrap();
        for sel in [GapSelector::AtU, GapSelector::AtV] {
            assert!(gap_series(&tr, &f1, sel).unwrap().points.iter().all(|p| p.1 == 0.0));
            assert!(distance_to_argmin_series(&tr, &f1, sel).unwrap().iter().all(|p| p.1 == 0.0));
        }
        assert_eq!(grad_integral(&tr, &f1, 4.0).unwrap(), 0.0);
        let rep = energy_report(&tr, &f1, &[0.0, 0.0], 1e-7).unwrap();
        assert!(rep.values.iter().all(|p| p.1 == 0.0));
    }

    #[test]
    fn selectors_need_matching_capabilities() {
        let f1 = builtin_problem("f1").unwrap();
        let cfg = DynamicsConfig::new(SystemKind::Avd, &[1.0, 1.0]);
        let tr = integrate(&cfg, &f1, &IntegratorConfig::new(2.0)).unwrap();
        assert!(matches!(gap_series(&tr, &f1, GapSelector::AtV), Err(Error::Config(_))));
        assert!(matches!(gap_series(&tr, &f1, GapSelector::AtProxU), Err(Error::Unsupported(_))));
        assert!("prox_v".parse::<GapSelector>().is_ok());
        assert_eq!("AT_Y".parse::<GapSelector>().unwrap(), GapSelector::AtY);
    }

    #[test]
    fn zero_problem_never_clamps() {
        let z = Builtin::Zero { dim: 1 };
        let cfg = DynamicsConfig::new(SystemKind::TogesV, &[1.0]).velocity(&[1.0]);
        let tr = integrate(&cfg, &z, &IntegratorConfig::new(5.0)).unwrap();
        assert_eq!(gap_series(&tr, &z, GapSelector::AtU).unwrap().clamped, 0);
    }
}
