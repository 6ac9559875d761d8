//! Evolution systems as explicit first-order vector fields.
//!
//! Third-order systems live on `ℝ³ⁿ` with state `(u, u̇, ü)`; second-order
//! systems on `ℝ²ⁿ` with state `(x, ẋ)`. The field returns the time
//! derivative in the same layout with the highest derivative solved from the
//! defining equation.
//!
//! | kind         | highest derivative                                                        |
//! |--------------|---------------------------------------------------------------------------|
//! | `AVD`        | `ẍ = −(α/t)ẋ − ∇f(x)`                                                      |
//! | `RESCALED`   | `ẍ = −((α+1)/t)ẋ − t∇f(x)`                                                 |
//! | `TOGES`      | `u⃛ = −((3α+5)/2t)ü − ((3α−1)/t²)u̇ − ∇f(u + t u̇)`                          |
//! | `TOGES_V`    | `u⃛ = −((α+7)/t)ü − (5(α+1)/t²)u̇ − ∇f(v)`, `v = u + (t/4)u̇`                |
//! | `TOGES_VH`   | `TOGES_V` minus `β∇²f(v)((5/4)u̇ + (t/4)ü)`                                 |
//! | `SC3`        | `u⃛ = −3√μ ü − 2μ u̇ − √μ∇f(u + u̇/√μ)`                                      |
//! | `TOGES_VR`   | `TOGES_V` with `∇f` replaced by the Moreau gradient `∇f_λ`                 |
//! | `HEAVY_BALL` | `ẍ = −2√μ ẋ − ∇f(x)`                                                       |

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::integrator::{sample_at, Trajectory};
use crate::linalg::{dist, norm};
use crate::moreau::moreau_grad_into;
use crate::problems::Objective;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemKind {
    Avd,
    Rescaled,
    Toges,
    TogesV,
    TogesVH,
    Sc3,
    TogesVR,
    HeavyBall,
}

impl SystemKind {
    pub const ALL: [SystemKind; 8] = [
        SystemKind::Avd,
        SystemKind::Rescaled,
        SystemKind::Toges,
        SystemKind::TogesV,
        SystemKind::TogesVH,
        SystemKind::Sc3,
        SystemKind::TogesVR,
        SystemKind::HeavyBall,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemKind::Avd => "AVD",
            SystemKind::Rescaled => "RESCALED",
            SystemKind::Toges => "TOGES",
            SystemKind::TogesV => "TOGES_V",
            SystemKind::TogesVH => "TOGES_VH",
            SystemKind::Sc3 => "SC3",
            SystemKind::TogesVR => "TOGES_VR",
            SystemKind::HeavyBall => "HEAVY_BALL",
        }
    }

    pub fn is_third_order(self) -> bool {
        !matches!(self, SystemKind::Avd | SystemKind::Rescaled | SystemKind::HeavyBall)
    }

    /// Number of stacked `ℝⁿ` blocks in the phase state.
    pub fn order(self) -> usize {
        if self.is_third_order() {
            3
        } else {
            2
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SystemKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown system kind '{s}'")))
    }
}

/// System kind, parameters and Cauchy data.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsConfig {
    pub kind: SystemKind,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub lambda: f64,
    pub t0: f64,
    pub u0: Vec<f64>,
    pub du0: Vec<f64>,
    /// Ignored by second-order kinds.
    pub ddu0: Vec<f64>,
}

impl DynamicsConfig {
    /// Config with `α = 3`, `β = 0`, `μ = λ = 1`, `t₀ = 1` and zero initial
    /// velocity and acceleration.
    pub fn new(kind: SystemKind, u0: &[f64]) -> Self {
        let n = u0.len();
        DynamicsConfig {
            kind,
            alpha: 3.0,
            beta: 0.0,
            mu: 1.0,
            lambda: 1.0,
            t0: 1.0,
            u0: u0.to_vec(),
            du0: vec![0.0; n],
            ddu0: vec![0.0; n],
        }
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn velocity(mut self, du0: &[f64]) -> Self {
        self.du0 = du0.to_vec();
        self
    }

    pub fn acceleration(mut self, ddu0: &[f64]) -> Self {
        self.ddu0 = ddu0.to_vec();
        self
    }

    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::Config(msg));
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad(format!("t0 must be positive, got {}", self.t0));
        }
        let n = self.u0.len();
        if n == 0 {
            return bad("empty initial position".into());
        }
        if self.du0.len() != n || (self.kind.is_third_order() && self.ddu0.len() != n) {
            return bad(format!("initial data dimensions disagree with u0 (n = {n})"));
        }
        let data_finite = self.u0.iter().chain(&self.du0).all(|v| v.is_finite())
            && (!self.kind.is_third_order() || self.ddu0.iter().all(|v| v.is_finite()));
        if !data_finite {
            return bad("non-finite initial data".into());
        }
        use SystemKind::*;
        match self.kind {
            Avd | Rescaled | Toges | TogesV | TogesVH | TogesVR if !self.alpha.is_finite() => {
                bad(format!("{} needs a finite alpha", self.kind))
            }
            TogesVH if !(self.beta >= 0.0 && self.beta.is_finite()) => {
                bad(format!("TOGES_VH needs beta >= 0, got {}", self.beta))
            }
            Sc3 | HeavyBall if !(self.mu > 0.0 && self.mu.is_finite()) => {
                bad(format!("{} needs mu > 0, got {}", self.kind, self.mu))
            }
            TogesVR if !(self.lambda > 0.0 && self.lambda.is_finite()) => {
                bad(format!("TOGES_VR needs lambda > 0, got {}", self.lambda))
            }
            _ => Ok(()),
        }
    }

    /// Checks that `problem` supplies what this kind evaluates.
    pub fn check_capabilities(&self, problem: &dyn Objective) -> Result<()> {
        if problem.dim() != self.dim() {
            return Err(Error::Config(format!(
                "problem dimension {} does not match initial data dimension {}",
                problem.dim(),
                self.dim()
            )));
        }
        match self.kind {
            SystemKind::TogesVR => {
                if problem.prox_oracle().is_none() {
                    return Err(Error::Unsupported("a proximal mapping"));
                }
            }
            _ => {
                if !problem.has_grad() {
                    return Err(Error::Unsupported("a gradient"));
                }
            }
        }
        if self.kind == SystemKind::TogesVH && self.beta != 0.0 && !problem.has_hvp() {
            return Err(Error::Unsupported("a Hessian-vector product"));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> PhaseState {
        PhaseState {
            t: self.t0,
            u: self.u0.clone(),
            du: self.du0.clone(),
            ddu: if self.kind.is_third_order() { self.ddu0.clone() } else { Vec::new() },
        }
    }
}

/// `(t, u, u̇, ü)`; `ddu` is empty for second-order kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub t: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub ddu: Vec<f64>,
}

impl PhaseState {
    pub fn from_flat(t: f64, y: &[f64], order: usize) -> Self {
        let n = y.len() / order;
        PhaseState {
            t,
            u: y[..n].to_vec(),
            du: y[n..2 * n].to_vec(),
            ddu: if order == 3 { y[2 * n..].to_vec() } else { Vec::new() },
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.u.len() * 3);
        y.extend_from_slice(&self.u);
        y.extend_from_slice(&self.du);
        y.extend_from_slice(&self.ddu);
        y
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }
}

/// Scratch buffers reused across field evaluations.
#[derive(Debug, Clone)]
pub(crate) struct FieldScratch {
    point: Vec<f64>,
    grad: Vec<f64>,
    dir: Vec<f64>,
    hess: Vec<f64>,
}

impl FieldScratch {
    pub(crate) fn new(n: usize) -> Self {
        FieldScratch { point: vec![0.0; n], grad: vec![0.0; n], dir: vec![0.0; n], hess: vec![0.0; n] }
    }
}

fn grad_at(problem: &dyn Objective, x: &[f64], out: &mut [f64]) -> Result<()> {
    if !problem.in_domain(x) {
        return Err(Error::Domain);
    }
    problem.grad(x, out)
}

/// Evaluates the field on a flat state `y` into `dy`.
pub(crate) fn eval_field(
    cfg: &DynamicsConfig,
    problem: &dyn Objective,
    t: f64,
    y: &[f64],
    dy: &mut [f64],
    s: &mut FieldScratch,
) -> Result<()> {
    let n = cfg.dim();
    let alpha = cfg.alpha;
    if cfg.kind.is_third_order() {
        let (u, rest) = y.split_at(n);
        let (du, ddu) = rest.split_at(n);
        dy[..n].copy_from_slice(du);
        dy[n..2 * n].copy_from_slice(ddu);
        let dddu = &mut dy[2 * n..];
        match cfg.kind {
            SystemKind::Toges => {
                let a = (3.0 * alpha + 5.0) / (2.0 * t);
                let b = (3.0 * alpha - 1.0) / (t * t);
                for i in 0..n {
                    s.point[i] = u[i] + t * du[i];
                }
                grad_at(problem, &s.point, &mut s.grad)?;
                for i in 0..n {
                    dddu[i] = -a * ddu[i] - b * du[i] - s.grad[i];
                }
            }
            SystemKind::TogesV | SystemKind::TogesVH | SystemKind::TogesVR => {
                let a = (alpha + 7.0) / t;
                let b = 5.0 * (alpha + 1.0) / (t * t);
                let q = 0.25 * t;
                for i in 0..n {
                    s.point[i] = u[i] + q * du[i];
                }
                if cfg.kind == SystemKind::TogesVR {
                    let prox = problem.prox_oracle().ok_or(Error::Unsupported("a proximal mapping"))?;
                    moreau_grad_into(prox, cfg.lambda, &s.point, &mut s.grad)?;
                } else {
                    grad_at(problem, &s.point, &mut s.grad)?;
                }
                if cfg.kind == SystemKind::TogesVH && cfg.beta != 0.0 {
                    for i in 0..n {
                        s.dir[i] = 1.25 * du[i] + q * ddu[i];
                    }
                    problem.hvp(&s.point, &s.dir, &mut s.hess)?;
                    let beta = cfg.beta;
                    for i in 0..n {
                        dddu[i] = -a * ddu[i] - b * du[i] - beta * s.hess[i] - s.grad[i];
                    }
                } else {
                    for i in 0..n {
                        dddu[i] = -a * ddu[i] - b * du[i] - s.grad[i];
                    }
                }
            }
            SystemKind::Sc3 => {
                let r = libm::sqrt(cfg.mu);
                for i in 0..n {
                    s.point[i] = u[i] + du[i] / r;
                }
                grad_at(problem, &s.point, &mut s.grad)?;
                for i in 0..n {
                    dddu[i] = -3.0 * r * ddu[i] - 2.0 * cfg.mu * du[i] - r * s.grad[i];
                }
            }
            _ => unreachable!("second-order kind"),
        }
    } else {
        let (x, dx) = y.split_at(n);
        dy[..n].copy_from_slice(dx);
        grad_at(problem, x, &mut s.grad)?;
        let ddx = &mut dy[n..];
        let (damp, gscale) = match cfg.kind {
            SystemKind::Avd => (alpha / t, 1.0),
            SystemKind::Rescaled => ((alpha + 1.0) / t, t),
            SystemKind::HeavyBall => (2.0 * libm::sqrt(cfg.mu), 1.0),
            _ => unreachable!("third-order kind"),
        };
        for i in 0..n {
            ddx[i] = -damp * dx[i] - gscale * s.grad[i];
        }
    }
    Ok(())
}

/// Time derivative of `state` in flat layout: `(u̇, ü, u⃛)` for third-order
/// kinds, `(ẋ, ẍ)` for second-order ones.
pub fn field(cfg: &DynamicsConfig, problem: &dyn Objective, state: &PhaseState) -> Result<Vec<f64>> {
    cfg.validate()?;
    cfg.check_capabilities(problem)?;
    if !(state.t >= cfg.t0) {
        return Err(Error::Config(format!("state time {} precedes t0 = {}", state.t, cfg.t0)));
    }
    let y = state.to_flat();
    if y.len() != cfg.kind.order() * cfg.dim() {
        return Err(Error::Config(format!("state layout does not match {}", cfg.kind)));
    }
    let mut dy = vec![0.0; y.len()];
    eval_field(cfg, problem, state.t, &y, &mut dy, &mut FieldScratch::new(cfg.dim()))?;
    Ok(dy)
}

/// `v = u + (t/4) u̇`.
pub fn aux_point_v(state: &PhaseState) -> Vec<f64> {
    let q = 0.25 * state.t;
    state.u.iter().zip(&state.du).map(|(u, du)| u + q * du).collect()
}

/// `y = u + u̇/√μ`.
pub fn aux_point_y(state: &PhaseState, mu: f64) -> Vec<f64> {
    let r = libm::sqrt(mu);
    state.u.iter().zip(&state.du).map(|(u, du)| u + du / r).collect()
}

/// The point at which each third-order kind evaluates its gradient:
/// `u + t u̇` for `TOGES`, `v` for the `TOGES_V` family, `y` for `SC3`.
pub fn aux_point(cfg: &DynamicsConfig, state: &PhaseState) -> Option<Vec<f64>> {
    match cfg.kind {
        SystemKind::Toges => {
            Some(state.u.iter().zip(&state.du).map(|(u, du)| u + state.t * du).collect())
        }
        SystemKind::TogesV | SystemKind::TogesVH | SystemKind::TogesVR => Some(aux_point_v(state)),
        SystemKind::Sc3 => Some(aux_point_y(state, cfg.mu)),
        _ => None,
    }
}

/// Residual of the second-order reduction satisfied by the auxiliary point.
///
/// * `TOGES_V`: `‖v̈ + ((α+1)/t)v̇ + (t/4)∇f(v)‖` with `v̇ = (5/4)u̇ + (t/4)ü`,
///   `v̈ = (3/2)ü + (t/4)u⃛`.
/// * `SC3`: `‖ÿ + 2√μ ẏ + ∇f(y)‖` with `ẏ = u̇ + ü/√μ`, `ÿ = ü + u⃛/√μ`.
///
/// `dddu` is the third derivative at `state`, normally the stored field
/// evaluation of a trajectory sample.
pub fn residual_reduction(
    cfg: &DynamicsConfig,
    problem: &dyn Objective,
    state: &PhaseState,
    dddu: &[f64],
) -> Result<f64> {
    let n = state.dim();
    let t = state.t;
    let mut g = vec![0.0; n];
    let mut r = vec![0.0; n];
    match cfg.kind {
        SystemKind::TogesV => {
            let v = aux_point_v(state);
            grad_at(problem, &v, &mut g)?;
            let c = (cfg.alpha + 1.0) / t;
            for i in 0..n {
                let dv = 1.25 * state.du[i] + 0.25 * t * state.ddu[i];
                let ddv = 1.5 * state.ddu[i] + 0.25 * t * dddu[i];
                r[i] = ddv + c * dv + 0.25 * t * g[i];
            }
        }
        SystemKind::Sc3 => {
            let sq = libm::sqrt(cfg.mu);
            let y = aux_point_y(state, cfg.mu);
            grad_at(problem, &y, &mut g)?;
            for i in 0..n {
                let dy = state.du[i] + state.ddu[i] / sq;
                let ddy = state.ddu[i] + dddu[i] / sq;
                r[i] = ddy + 2.0 * sq * dy + g[i];
            }
        }
        k => {
            return Err(Error::Config(format!("no second-order reduction is defined for {k}")))
        }
    }
    Ok(norm(&r))
}

/// Rescaled companion of an `AVD` config under `t = s^{3/2}`.
///
/// The damping `(α_avd)/t` maps to `(3α_avd − 1)/(2s)`, so the `RESCALED`
/// parameter is `α = (3α_avd − 3)/2`; the velocity picks up `dt/ds`. The
/// rescaled system sees `(9/4)·g` when the `AVD` objective is `g`; the caller
/// pairs `AVD` on `(4/9)f` with `RESCALED` on `f`.
pub fn matched_rescaled_config(avd: &DynamicsConfig) -> Result<DynamicsConfig> {
    if avd.kind != SystemKind::Avd {
        return Err(Error::Config(format!("expected an AVD config, got {}", avd.kind)));
    }
    let s0 = libm::pow(avd.t0, 2.0 / 3.0);
    let jac = 1.5 * libm::sqrt(s0);
    let du0: Vec<f64> = avd.du0.iter().map(|v| jac * v).collect();
    Ok(DynamicsConfig::new(SystemKind::Rescaled, &avd.u0)
        .alpha((3.0 * avd.alpha - 3.0) / 2.0)
        .t0(s0)
        .velocity(&du0))
}

/// `max_s ‖x(s^{3/2}) − v(s)‖` over the samples of the rescaled trajectory.
pub fn rescale_equivalence(avd_traj: &Trajectory, rescaled_traj: &Trajectory) -> Result<f64> {
    if avd_traj.cfg.kind != SystemKind::Avd || rescaled_traj.cfg.kind != SystemKind::Rescaled {
        return Err(Error::Config(format!(
            "expected AVD and RESCALED trajectories, got {} and {}",
            avd_traj.cfg.kind, rescaled_traj.cfg.kind
        )));
    }
    let mut worst = 0.0f64;
    for sample in &rescaled_traj.samples {
        let s = sample.state.t;
        let x = sample_at(avd_traj, libm::pow(s, 1.5))?;
        worst = worst.max(dist(&x.u, &sample.state.u));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{builtin_problem, Builtin};

    fn state(t: f64, u: &[f64], du: &[f64], ddu: &[f64]) -> PhaseState {
        PhaseState { t, u: u.to_vec(), du: du.to_vec(), ddu: ddu.to_vec() }
    }

    /// Left-hand side of each defining equation, written out independently of
    /// `eval_field`.
    fn equation_lhs(cfg: &DynamicsConfig, p: &dyn Objective, st: &PhaseState, d: &[f64]) -> Vec<f64> {
        let n = st.dim();
        let t = st.t;
        let a = cfg.alpha;
        let grad = |x: &[f64]| {
            let mut g = vec![0.0; n];
            if cfg.kind == SystemKind::TogesVR {
                moreau_grad_into(p.prox_oracle().unwrap(), cfg.lambda, x, &mut g).unwrap();
            } else {
                p.grad(x, &mut g).unwrap();
            }
            g
        };
        let top = &d[(cfg.kind.order() - 1) * n..];
        let mut lhs = vec![0.0; n];
        match cfg.kind {
            SystemKind::Avd | SystemKind::Rescaled | SystemKind::HeavyBall => {
                let g = grad(&st.u);
                for i in 0..n {
                    lhs[i] = top[i]
                        + match cfg.kind {
                            SystemKind::Avd => a / t * st.du[i] + g[i],
                            SystemKind::Rescaled => (a + 1.0) / t * st.du[i] + t * g[i],
                            _ => 2.0 * libm::sqrt(cfg.mu) * st.du[i] + g[i],
                        };
                }
            }
            SystemKind::Toges => {
                let pt: Vec<f64> = (0..n).map(|i| st.u[i] + t * st.du[i]).collect();
                let g = grad(&pt);
                for i in 0..n {
                    lhs[i] = top[i]
                        + (3.0 * a + 5.0) / (2.0 * t) * st.ddu[i]
                        + (3.0 * a - 1.0) / (t * t) * st.du[i]
                        + g[i];
                }
            }
            SystemKind::TogesV | SystemKind::TogesVH | SystemKind::TogesVR => {
                let v = aux_point_v(st);
                let g = grad(&v);
                let mut h = vec![0.0; n];
                if cfg.kind == SystemKind::TogesVH && cfg.beta != 0.0 {
                    let dir: Vec<f64> =
                        (0..n).map(|i| 1.25 * st.du[i] + 0.25 * t * st.ddu[i]).collect();
                    p.hvp(&v, &dir, &mut h).unwrap();
                }
                for i in 0..n {
                    lhs[i] = top[i]
                        + (a + 7.0) / t * st.ddu[i]
                        + 5.0 * (a + 1.0) / (t * t) * st.du[i]
                        + cfg.beta * h[i]
                        + g[i];
                }
            }
            SystemKind::Sc3 => {
                let r = libm::sqrt(cfg.mu);
                let y = aux_point_y(st, cfg.mu);
                let g = grad(&y);
                for i in 0..n {
                    lhs[i] = top[i] + 3.0 * r * st.ddu[i] + 2.0 * cfg.mu * st.du[i] + r * g[i];
                }
            }
        }
        lhs
    }

    #[test]
    fn toges_v_alpha_three_coefficients() {
        // ü, u̇ unit vectors isolate the coefficients 10/t and 20/t²
        let f = Builtin::Zero { dim: 1 };
        let cfg = DynamicsConfig::new(SystemKind::TogesV, &[0.0]);
        let t = 2.0;
        let d = field(&cfg, &f, &state(t, &[0.0], &[0.0], &[1.0])).unwrap();
        assert_eq!(d[2], -10.0 / t);
        let d = field(&cfg, &f, &state(t, &[0.0], &[1.0], &[0.0])).unwrap();
        assert_eq!(d[2], -20.0 / (t * t));
    }

    #[test]
    fn zero_objective_at_rest_is_stationary() {
        let f = Builtin::Zero { dim: 2 };
        for kind in SystemKind::ALL {
            if kind == SystemKind::TogesVR {
                continue;
            }
            let cfg = DynamicsConfig::new(kind, &[3.0, 1.0]);
            let d = field(&cfg, &f, &cfg.initial_state()).unwrap();
            assert!(d.iter().all(|&v| v == 0.0), "{kind}");
        }
    }

    #[test]
    fn sc3_direct_substitution() {
        let f = builtin_problem("quad_mu(1)").unwrap();
        let cfg = DynamicsConfig::new(SystemKind::Sc3, &[3.0, 1.0]);
        let d = field(&cfg, &f, &state(7.0, &[3.0, 1.0], &[0.0, 0.0], &[0.0, 0.0])).unwrap();
        assert_eq!(&d[4..], &[-3.0, -1.0]);
    }

    #[test]
    fn fields_satisfy_defining_equations() {
        let st3 = state(2.5, &[0.7, 1.3], &[-0.4, 0.2], &[0.9, -1.1]);
        let st2 = state(2.5, &[0.7, 1.3], &[-0.4, 0.2], &[]);
        let f3 = builtin_problem("f3").unwrap();
        let abs = builtin_problem("abs_sum").unwrap();
        for kind in SystemKind::ALL {
            let p: &dyn Objective = if kind == SystemKind::TogesVR { &abs } else { &f3 };
            let cfg = DynamicsConfig::new(kind, &[0.7, 1.3]).alpha(4.0).beta(1.0).mu(2.0).lambda(0.5);
            let st = if kind.is_third_order() { &st3 } else { &st2 };
            let d = field(&cfg, p, st).unwrap();
            let lhs = equation_lhs(&cfg, p, st, &d);
            assert!(norm(&lhs) <= 1e-13, "{kind}: {lhs:?}");
        }
    }

    #[test]
    fn hessian_damping_with_zero_beta_is_toges_v() {
        let f3 = builtin_problem("f3").unwrap();
        let st = state(3.0, &[0.2, 2.0], &[0.1, -0.3], &[0.5, 0.05]);
        let v = DynamicsConfig::new(SystemKind::TogesV, &[0.2, 2.0]).alpha(3.5);
        let vh = DynamicsConfig { kind: SystemKind::TogesVH, ..v.clone() };
        let a = field(&v, &f3, &st).unwrap();
        let b = field(&vh, &f3, &st).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn capability_errors() {
        let abs = builtin_problem("abs_sum").unwrap();
        let f1 = builtin_problem("f1").unwrap();
        let cfg = DynamicsConfig::new(SystemKind::TogesV, &[1.0, 1.0]);
        assert!(matches!(field(&cfg, &abs, &cfg.initial_state()), Err(Error::Unsupported(_))));
        let vr = DynamicsConfig::new(SystemKind::TogesVR, &[1.0, 1.0]);
        assert!(matches!(field(&vr, &f1, &vr.initial_state()), Err(Error::Unsupported(_))));
        let f3 = builtin_problem("f3").unwrap();
        let out = DynamicsConfig::new(SystemKind::TogesV, &[-3.0, 1.0]);
        assert!(matches!(field(&out, &f3, &out.initial_state()), Err(Error::Domain)));
    }

    #[test]
    fn config_validation() {
        let base = DynamicsConfig::new(SystemKind::TogesV, &[1.0, 1.0]);
        assert!(base.clone().t0(0.0).validate().is_err());
        assert!(base.clone().t0(-1.0).validate().is_err());
        assert!(base.clone().velocity(&[1.0]).validate().is_err());
        let vh = DynamicsConfig::new(SystemKind::TogesVH, &[1.0, 1.0]);
        assert!(vh.clone().beta(-1.0).validate().is_err());
        assert!(vh.beta(1.0).validate().is_ok());
        assert!(DynamicsConfig::new(SystemKind::Sc3, &[1.0]).mu(0.0).validate().is_err());
        assert!(DynamicsConfig::new(SystemKind::TogesVR, &[1.0]).lambda(0.0).validate().is_err());
        let late = state(0.5, &[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0]);
        assert!(field(&base, &builtin_problem("f1").unwrap(), &late).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in SystemKind::ALL {
            assert_eq!(k.as_str().parse::<SystemKind>().unwrap(), k);
        }
        assert!("TOGES-V".parse::<SystemKind>().is_err());
    }

    #[test]
    fn aux_points() {
        assert_eq!(aux_point_v(&state(5.0, &[3.0, 1.0], &[0.0, 0.0], &[])), [3.0, 1.0]);
        assert_eq!(aux_point_v(&state(1.0, &[0.0, 0.0], &[4.0, 0.0], &[])), [1.0, 0.0]);
        assert_eq!(aux_point_y(&state(1.0, &[3.0, 1.0], &[0.0, 0.0], &[]), 1.0), [3.0, 1.0]);
        assert_eq!(aux_point_y(&state(1.0, &[0.0, 0.0], &[2.0, 0.0], &[]), 4.0), [1.0, 0.0]);
    }

    #[test]
    fn reduction_residual_vanishes_at_rest_on_minimizer() {
        let f1 = builtin_problem("f1").unwrap();
        let st = state(4.0, &[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]);
        for kind in [SystemKind::TogesV, SystemKind::Sc3] {
            let cfg = DynamicsConfig::new(kind, &[0.0, 0.0]);
            let d = field(&cfg, &f1, &st).unwrap();
            assert_eq!(residual_reduction(&cfg, &f1, &st, &d[4..]).unwrap(), 0.0);
        }
        let avd = DynamicsConfig::new(SystemKind::Avd, &[0.0, 0.0]);
        assert!(matches!(
            residual_reduction(&avd, &f1, &st, &[0.0, 0.0]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rescaled_config_parameters() {
        let avd = DynamicsConfig::new(SystemKind::Avd, &[3.0, 1.0]).alpha(3.0).velocity(&[1.0, 0.0]);
        let r = matched_rescaled_config(&avd).unwrap();
        // (α+1)/s must equal (3α_avd − 1)/(2s) = 4/s
        assert_eq!(r.alpha + 1.0, 4.0);
        assert_eq!(r.t0, 1.0);
        assert_eq!(r.du0, [1.5, 0.0]);
    }
}
