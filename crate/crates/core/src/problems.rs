//! Convex test objectives with analytic oracles.
//!
//! Every built-in problem is two-dimensional unless a dimension is given in
//! its name. Gradients and Hessian-vector products are hand-coded and
//! validated with [`check_gradient`] / [`check_hvp`].

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::moreau::{AbsSum, BoxIndicator, ProxOracle};
use crate::{Error, Result};

/// A convex objective on `ℝⁿ` and the oracles the dynamics need.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    fn has_grad(&self) -> bool {
        true
    }

    fn grad(&self, _x: &[f64], _out: &mut [f64]) -> Result<()> {
        Err(Error::Unsupported("a gradient"))
    }

    fn has_hvp(&self) -> bool {
        false
    }

    /// `∇²f(x) d` written into `out`.
    fn hvp(&self, _x: &[f64], _d: &[f64], _out: &mut [f64]) -> Result<()> {
        Err(Error::Unsupported("a Hessian-vector product"))
    }

    fn prox_oracle(&self) -> Option<&dyn ProxOracle> {
        None
    }

    fn inf_value(&self) -> f64;

    /// Projection of `x` onto `argmin f`.
    fn project_argmin(&self, x: &[f64], out: &mut [f64]);

    fn strong_convexity(&self) -> Option<f64> {
        None
    }

    fn unique_minimizer(&self) -> bool;

    fn in_domain(&self, _x: &[f64]) -> bool {
        true
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn has_grad(&self) -> bool {
        (**self).has_grad()
    }
    fn grad(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).grad(x, out)
    }
    fn has_hvp(&self) -> bool {
        (**self).has_hvp()
    }
    fn hvp(&self, x: &[f64], d: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).hvp(x, d, out)
    }
    fn prox_oracle(&self) -> Option<&dyn ProxOracle> {
        (**self).prox_oracle()
    }
    fn inf_value(&self) -> f64 {
        (**self).inf_value()
    }
    fn project_argmin(&self, x: &[f64], out: &mut [f64]) {
        (**self).project_argmin(x, out)
    }
    fn strong_convexity(&self) -> Option<f64> {
        (**self).strong_convexity()
    }
    fn unique_minimizer(&self) -> bool {
        (**self).unique_minimizer()
    }
    fn in_domain(&self, x: &[f64]) -> bool {
        (**self).in_domain(x)
    }
}

/// The built-in problem catalogue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    /// `f ≡ 0` on `ℝⁿ`; every point is a minimizer.
    Zero { dim: usize },
    /// `½(x₁² + x₂²)`
    F1,
    /// `½(x₁ + x₂ − 1)²`; the argmin is the line `x₁ + x₂ = 1`.
    F2,
    /// `x₁ + x₂² − 2 ln((x₁ + 1)(x₂ + 1))` on `{x₁ > −1, x₂ > −1}`.
    F3,
    /// `(μ/2)‖x‖²` in two dimensions.
    QuadMu { mu: f64 },
    /// `Σ|xᵢ|`, prox only.
    AbsSum { dim: usize },
    /// Indicator of `[lo, hi]ⁿ`, prox only.
    Box { lo: f64, hi: f64, dim: usize },
}

/// Minimizer of f3: `x₁ = 1` and `x₂² + x₂ − 1 = 0`.
pub fn f3_minimizer() -> [f64; 2] {
    [1.0, (libm::sqrt(5.0) - 1.0) / 2.0]
}

fn f3_value(x: &[f64]) -> f64 {
    (x[0] + x[1] * x[1]) - 2.0 * (libm::log(x[0] + 1.0) + libm::log(x[1] + 1.0))
}

/// Looks up a problem by name: `f1`, `f2`, `f3`, `quad_mu(μ)`, `abs_sum`,
/// `abs_sum(n)`, `box(lo,hi)`, `box(lo,hi,n)`, `zero`, `zero(n)`.
pub fn builtin_problem(name: &str) -> Result<Builtin> {
    name.parse()
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, args) = match s.find('(') {
            Some(i) => {
                let rest = s[i + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Config(format!("unbalanced parentheses in '{s}'")))?;
                (s[..i].trim(), Some(rest))
            }
            None => (s, None),
        };
        let nums: Vec<f64> = match args {
            Some(a) => a
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad parameter '{p}' in '{s}'")))
                })
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        let dim_arg = |v: f64| -> Result<usize> {
            if v >= 1.0 && libm::trunc(v) == v {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("dimension must be a positive integer in '{s}'")))
            }
        };
        let bad_arity = || Error::Config(format!("wrong number of parameters in '{s}'"));
        let p = match (head, nums.as_slice()) {
            ("f1", []) => Builtin::F1,
            ("f2", []) => Builtin::F2,
            ("f3", []) => Builtin::F3,
            ("zero", []) => Builtin::Zero { dim: 2 },
            ("zero", [n]) => Builtin::Zero { dim: dim_arg(*n)? },
            ("quad_mu", [mu]) => {
                if !(*mu > 0.0 && mu.is_finite()) {
                    return Err(Error::Config(format!("quad_mu needs μ > 0, got {mu}")));
                }
                Builtin::QuadMu { mu: *mu }
            }
            ("abs_sum", []) => Builtin::AbsSum { dim: 2 },
            ("abs_sum", [n]) => Builtin::AbsSum { dim: dim_arg(*n)? },
            ("box", [lo, hi]) | ("box", [lo, hi, _]) => {
                if !(lo <= &0.0 && hi >= &0.0 && lo < hi) {
                    return Err(Error::Config(format!(
                        "box needs lo ≤ 0 ≤ hi with lo < hi, got '{s}'"
                    )));
                }
                let dim = match nums.get(2) {
                    Some(n) => dim_arg(*n)?,
                    None => 2,
                };
                Builtin::Box { lo: *lo, hi: *hi, dim }
            }
            ("f1" | "f2" | "f3" | "zero" | "quad_mu" | "abs_sum" | "box", _) => {
                return Err(bad_arity())
            }
            _ => return Err(Error::Config(format!("unknown problem '{s}'"))),
        };
        Ok(p)
    }
}

impl core::fmt::Display for Builtin {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Builtin::Zero { dim } => write!(f, "zero({dim})"),
            Builtin::F1 => f.write_str("f1"),
            Builtin::F2 => f.write_str("f2"),
            Builtin::F3 => f.write_str("f3"),
            Builtin::QuadMu { mu } => write!(f, "quad_mu({mu})"),
            Builtin::AbsSum { dim } => write!(f, "abs_sum({dim})"),
            Builtin::Box { lo, hi, dim } => write!(f, "box({lo},{hi},{dim})"),
        }
    }
}

impl Builtin {
    pub fn name(&self) -> alloc::string::String {
        self.to_string()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{self} expects dimension {}, got {}",
                self.dim(),
                x.len()
            )))
        }
    }
}

impl Objective for Builtin {
    fn dim(&self) -> usize {
        match *self {
            Builtin::Zero { dim } | Builtin::AbsSum { dim } | Builtin::Box { dim, .. } => dim,
            _ => 2,
        }
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match *self {
            Builtin::Zero { .. } => 0.0,
            Builtin::F1 => 0.5 * (x[0] * x[0] + x[1] * x[1]),
            Builtin::F2 => {
                let s = x[0] + x[1] - 1.0;
                0.5 * s * s
            }
            Builtin::F3 => {
                if !self.in_domain(x) {
                    return Err(Error::Domain);
                }
                f3_value(x)
            }
            Builtin::QuadMu { mu } => 0.5 * mu * (x[0] * x[0] + x[1] * x[1]),
            Builtin::AbsSum { .. } => AbsSum.raw_value(x),
            Builtin::Box { lo, hi, .. } => BoxIndicator { lo, hi }.raw_value(x),
        })
    }

    fn has_grad(&self) -> bool {
        !matches!(self, Builtin::AbsSum { .. } | Builtin::Box { .. })
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_dim(x)?;
        match *self {
            Builtin::Zero { .. } => out.fill(0.0),
            Builtin::F1 => out.copy_from_slice(&x[..2]),
            Builtin::F2 => {
                let s = x[0] + x[1] - 1.0;
                out[0] = s;
                out[1] = s;
            }
            Builtin::F3 => {
                if !self.in_domain(x) {
                    return Err(Error::Domain);
                }
                out[0] = 1.0 - 2.0 / (x[0] + 1.0);
                out[1] = 2.0 * x[1] - 2.0 / (x[1] + 1.0);
            }
            Builtin::QuadMu { mu } => {
                out[0] = mu * x[0];
                out[1] = mu * x[1];
            }
            Builtin::AbsSum { .. } | Builtin::Box { .. } => {
                return Err(Error::Unsupported("a gradient"))
            }
        }
        Ok(())
    }

    fn has_hvp(&self) -> bool {
        self.has_grad()
    }

    fn hvp(&self, x: &[f64], d: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_dim(x)?;
        match *self {
            Builtin::Zero { .. } => out.fill(0.0),
            Builtin::F1 => out.copy_from_slice(&d[..2]),
            Builtin::F2 => {
                let s = d[0] + d[1];
                out[0] = s;
                out[1] = s;
            }
            Builtin::F3 => {
                if !self.in_domain(x) {
                    return Err(Error::Domain);
                }
                let a = x[0] + 1.0;
                let b = x[1] + 1.0;
                out[0] = 2.0 / (a * a) * d[0];
                out[1] = (2.0 + 2.0 / (b * b)) * d[1];
            }
            Builtin::QuadMu { mu } => {
                out[0] = mu * d[0];
                out[1] = mu * d[1];
            }
            Builtin::AbsSum { .. } | Builtin::Box { .. } => {
                return Err(Error::Unsupported("a Hessian-vector product"))
            }
        }
        Ok(())
    }

    fn prox_oracle(&self) -> Option<&dyn ProxOracle> {
        match self {
            Builtin::AbsSum { .. } | Builtin::Box { .. } => Some(self),
            _ => None,
        }
    }

    fn inf_value(&self) -> f64 {
        match self {
            Builtin::F3 => f3_value(&f3_minimizer()),
            _ => 0.0,
        }
    }

    fn project_argmin(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Builtin::Zero { .. } => out.copy_from_slice(x),
            Builtin::F2 => {
                let s = 0.5 * (x[0] + x[1] - 1.0);
                out[0] = x[0] - s;
                out[1] = x[1] - s;
            }
            Builtin::F3 => out.copy_from_slice(&f3_minimizer()),
            _ => out.fill(0.0),
        }
    }

    fn strong_convexity(&self) -> Option<f64> {
        match *self {
            Builtin::F1 => Some(1.0),
            Builtin::QuadMu { mu } => Some(mu),
            _ => None,
        }
    }

    fn unique_minimizer(&self) -> bool {
        !matches!(self, Builtin::Zero { .. } | Builtin::F2)
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        match self {
            Builtin::F3 => x[0] > -1.0 && x[1] > -1.0,
            _ => true,
        }
    }
}

impl ProxOracle for Builtin {
    fn prox(&self, lambda: f64, x: &[f64], out: &mut [f64]) {
        match *self {
            Builtin::Box { lo, hi, .. } => BoxIndicator { lo, hi }.prox(lambda, x, out),
            _ => AbsSum.prox(lambda, x, out),
        }
    }

    fn raw_value(&self, x: &[f64]) -> f64 {
        match *self {
            Builtin::Box { lo, hi, .. } => BoxIndicator { lo, hi }.raw_value(x),
            _ => AbsSum.raw_value(x),
        }
    }
}

/// `c · f` for a positive constant `c`.
#[derive(Debug, Clone)]
pub struct Scaled<O> {
    pub scale: f64,
    pub inner: O,
}

impl<O: Objective> Objective for Scaled<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.scale * self.inner.value(x)?)
    }
    fn has_grad(&self) -> bool {
        self.inner.has_grad()
    }
    fn grad(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner.grad(x, out)?;
        out.iter_mut().for_each(|g| *g *= self.scale);
        Ok(())
    }
    fn has_hvp(&self) -> bool {
        self.inner.has_hvp()
    }
    fn hvp(&self, x: &[f64], d: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner.hvp(x, d, out)?;
        out.iter_mut().for_each(|g| *g *= self.scale);
        Ok(())
    }
    fn inf_value(&self) -> f64 {
        self.scale * self.inner.inf_value()
    }
    fn project_argmin(&self, x: &[f64], out: &mut [f64]) {
        self.inner.project_argmin(x, out)
    }
    fn strong_convexity(&self) -> Option<f64> {
        self.inner.strong_convexity().map(|m| m * self.scale)
    }
    fn unique_minimizer(&self) -> bool {
        self.inner.unique_minimizer()
    }
    fn in_domain(&self, x: &[f64]) -> bool {
        self.inner.in_domain(x)
    }
}

fn rel_err(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / (1.0 + exact.abs())
}

/// Max over coordinates of `|central difference − ∂ᵢf| / (1 + |∂ᵢf|)`.
pub fn check_gradient<O: Objective + ?Sized>(problem: &O, x: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {h}")));
    }
    if !problem.in_domain(x) {
        return Err(Error::Domain);
    }
    let n = x.len();
    let mut g = vec![0.0; n];
    problem.grad(x, &mut g)?;
    let mut xp = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..n {
        xp[i] = x[i] + h;
        let fp = problem.value(&xp)?;
        xp[i] = x[i] - h;
        let fm = problem.value(&xp)?;
        xp[i] = x[i];
        worst = worst.max(rel_err((fp - fm) / (2.0 * h), g[i]));
    }
    Ok(worst)
}

/// Compares `hvp(x, d)` with the central difference of the gradient along
/// `d`, using the same error metric as [`check_gradient`].
pub fn check_hvp<O: Objective + ?Sized>(problem: &O, x: &[f64], d: &[f64], h: f64) -> Result<f64> {
    if !problem.has_hvp() {
        return Err(Error::Unsupported("a Hessian-vector product"));
    }
    if !(h > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {h}")));
    }
    if !problem.in_domain(x) {
        return Err(Error::Domain);
    }
    let n = x.len();
    let mut hv = vec![0.0; n];
    problem.hvp(x, d, &mut hv)?;
    let xp: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + h * b).collect();
    let xm: Vec<f64> = x.iter().zip(d).map(|(a, b)| a - h * b).collect();
    let mut gp = vec![0.0; n];
    let mut gm = vec![0.0; n];
    problem.grad(&xp, &mut gp)?;
    problem.grad(&xm, &mut gm)?;
    Ok(hv
        .iter()
        .zip(gp.iter().zip(&gm))
        .map(|(&e, (p, m))| rel_err((p - m) / (2.0 * h), e))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grad_of(p: &Builtin, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        p.grad(x, &mut g).unwrap();
        g
    }

    #[test]
    fn f1_and_f2_evaluations() {
        let f1 = builtin_problem("f1").unwrap();
        assert_eq!(f1.value(&[3.0, 1.0]).unwrap(), 5.0);
        let f2 = builtin_problem("f2").unwrap();
        assert_eq!(f2.value(&[3.0, 1.0]).unwrap(), 4.5);
        assert_eq!(grad_of(&f2, &[3.0, 1.0]), [3.0, 3.0]);
        let mut p = [0.0; 2];
        f2.project_argmin(&[3.0, 1.0], &mut p);
        assert_eq!(p, [1.5, -0.5]);
    }

    #[test]
    fn f3_minimizer_is_stationary() {
        let f3 = builtin_problem("f3").unwrap();
        let z = f3_minimizer();
        let g = grad_of(&f3, &z);
        assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15, "{g:?}");
        // grid search on [0,3]² at step 1e-3 never goes below the stored infimum
        let inf = f3.inf_value();
        let mut best = f64::INFINITY;
        for i in 0..=3000 {
            for j in 0..=3000 {
                let v = f3.value(&[i as f64 * 1e-3, j as f64 * 1e-3]).unwrap();
                best = best.min(v);
            }
        }
        assert!(best >= inf - 1e-14);
        assert!(best - inf < 1e-6, "grid best {best} vs inf {inf}");
    }

    #[test]
    fn f3_domain_errors() {
        let f3 = builtin_problem("f3").unwrap();
        assert!(matches!(f3.value(&[-1.0, 0.0]), Err(Error::Domain)));
        let mut g = [0.0; 2];
        assert!(matches!(f3.grad(&[0.0, -2.0], &mut g), Err(Error::Domain)));
        assert!(matches!(check_gradient(&f3, &[-3.0, 0.0], 1e-5), Err(Error::Domain)));
    }

    #[test]
    fn gradient_checks_on_named_points() {
        let f1 = builtin_problem("f1").unwrap();
        assert!(check_gradient(&f1, &[3.0, 1.0], 1e-5).unwrap() <= 1e-9);
        assert!(check_gradient(&f1, &[0.0, 0.0], 1e-5).unwrap() <= 1e-12);
        let f3 = builtin_problem("f3").unwrap();
        assert!(check_gradient(&f3, &[1.0, 1.0], 1e-5).unwrap() <= 1e-6);
    }

    #[test]
    fn hvp_checks_on_named_points() {
        let f1 = builtin_problem("f1").unwrap();
        let mut hv = [0.0; 2];
        f1.hvp(&[0.3, -2.0], &[1.0, 0.0], &mut hv).unwrap();
        assert_eq!(hv, [1.0, 0.0]);
        assert!(check_hvp(&f1, &[0.3, -2.0], &[1.0, 0.0], 1e-5).unwrap() <= 1e-9);

        let f2 = builtin_problem("f2").unwrap();
        f2.hvp(&[7.0, 1.0], &[1.0, 0.0], &mut hv).unwrap();
        assert_eq!(hv, [1.0, 1.0]);

        let f3 = builtin_problem("f3").unwrap();
        f3.hvp(&[1.0, 1.0], &[0.0, 1.0], &mut hv).unwrap();
        assert_eq!(hv[1], 2.5);
        assert!(check_hvp(&f3, &[1.0, 1.0], &[0.0, 1.0], 1e-5).unwrap() <= 1e-6);

        let abs = builtin_problem("abs_sum").unwrap();
        assert!(matches!(
            check_hvp(&abs, &[1.0, 1.0], &[0.0, 1.0], 1e-5),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn names_parse_and_print() {
        assert_eq!(builtin_problem("quad_mu(0.5)").unwrap(), Builtin::QuadMu { mu: 0.5 });
        assert_eq!(builtin_problem("abs_sum").unwrap(), Builtin::AbsSum { dim: 2 });
        assert_eq!(builtin_problem("abs_sum(3)").unwrap(), Builtin::AbsSum { dim: 3 });
        assert_eq!(
            builtin_problem("box(-1, 2)").unwrap(),
            Builtin::Box { lo: -1.0, hi: 2.0, dim: 2 }
        );
        for name in ["f1", "f2", "f3", "quad_mu(2)", "abs_sum(2)", "zero(3)", "box(-1,1,2)"] {
            let p = builtin_problem(name).unwrap();
            assert_eq!(builtin_problem(&p.name()).unwrap(), p);
        }
        for bad in ["f4", "quad_mu", "quad_mu(-1)", "abs_sum(0)", "f1(2)", "box(1,2)", "zero(1.5"] {
            assert!(matches!(builtin_problem(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn nonsmooth_problems_expose_prox_only() {
        let abs = builtin_problem("abs_sum").unwrap();
        assert!(!abs.has_grad());
        let mut g = [0.0; 2];
        assert!(matches!(abs.grad(&[1.0, 1.0], &mut g), Err(Error::Unsupported(_))));
        let mut p = [0.0; 2];
        abs.prox_oracle().unwrap().prox(1.0, &[3.0, 0.5], &mut p);
        assert_eq!(p, [2.0, 0.0]);
        let bx = builtin_problem("box(-1,1)").unwrap();
        bx.prox_oracle().unwrap().prox(1.0, &[3.0, 0.5], &mut p);
        assert_eq!(p, [1.0, 0.5]);
        assert!(builtin_problem("f1").unwrap().prox_oracle().is_none());
    }

    #[test]
    fn scaled_objective_scales_oracles() {
        let s = Scaled { scale: 4.0 / 9.0, inner: Builtin::F1 };
        assert_eq!(s.value(&[3.0, 0.0]).unwrap(), 4.0 / 9.0 * 4.5);
        assert!(check_gradient(&s, &[3.0, 1.0], 1e-5).unwrap() < 1e-9);
        assert!(check_hvp(&s, &[3.0, 1.0], &[0.2, 1.0], 1e-5).unwrap() < 1e-9);
    }
}
