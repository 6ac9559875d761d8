//! Proximal mappings and the Moreau envelope.
//!
//! For a proper closed convex `f` and `λ > 0` the envelope is
//! `f_λ(x) = f(p) + ‖x − p‖² / (2λ)` with `p = prox_{λf}(x)`, and its gradient
//! is `(x − p) / λ`, which is `1/λ`-Lipschitz. The envelope shares infimum and
//! minimizers with `f`, so [`regularize`] simply forwards those.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::norm_sq;
use crate::problems::Objective;
use crate::{Error, Result};

/// Proximal mapping of a (possibly extended-valued) convex function.
pub trait ProxOracle {
    /// Writes `prox_{λf}(x)` into `out`.
    fn prox(&self, lambda: f64, x: &[f64], out: &mut [f64]);

    /// The nonsmooth function itself; `+∞` outside its effective domain.
    fn raw_value(&self, x: &[f64]) -> f64;
}

/// `x ↦ Σ|xᵢ|`; the prox is component-wise soft thresholding.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AbsSum;

impl ProxOracle for AbsSum {
    fn prox(&self, lambda: f64, x: &[f64], out: &mut [f64]) {
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = if xi > lambda {
                xi - lambda
            } else if xi < -lambda {
                xi + lambda
            } else {
                0.0
            };
        }
    }

    fn raw_value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.abs()).sum()
    }
}

/// Indicator of the box `[lo, hi]ⁿ`; the prox is a component-wise clamp and
/// does not depend on `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxIndicator {
    pub lo: f64,
    pub hi: f64,
}

impl ProxOracle for BoxIndicator {
    fn prox(&self, _lambda: f64, x: &[f64], out: &mut [f64]) {
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = xi.clamp(self.lo, self.hi);
        }
    }

    fn raw_value(&self, x: &[f64]) -> f64 {
        if x.iter().all(|&v| v >= self.lo && v <= self.hi) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("Moreau index must be positive, got {lambda}")))
    }
}

/// `f_λ(x) = f(prox_{λf} x) + ‖x − prox_{λf} x‖² / (2λ)`.
pub fn moreau_value(oracle: &dyn ProxOracle, lambda: f64, x: &[f64]) -> Result<f64> {
    check_lambda(lambda)?;
    let mut p = vec![0.0; x.len()];
    oracle.prox(lambda, x, &mut p);
    let fp = oracle.raw_value(&p);
    if !fp.is_finite() {
        return Err(Error::OracleInconsistency(format!(
            "prox landed outside the effective domain (f = {fp})"
        )));
    }
    let d: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
    Ok(fp + norm_sq(&d) / (2.0 * lambda))
}

pub(crate) fn moreau_grad_into(
    oracle: &dyn ProxOracle,
    lambda: f64,
    x: &[f64],
    out: &mut [f64],
) -> Result<()> {
    check_lambda(lambda)?;
    oracle.prox(lambda, x, out);
    for (o, &xi) in out.iter_mut().zip(x) {
        *o = (xi - *o) / lambda;
    }
    Ok(())
}

/// `∇f_λ(x) = (x − prox_{λf} x) / λ`.
pub fn moreau_grad(oracle: &dyn ProxOracle, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
    let mut g = vec![0.0; x.len()];
    moreau_grad_into(oracle, lambda, x, &mut g)?;
    Ok(g)
}

/// Smooth objective `f_λ` built from a prox-bearing objective `f`.
///
/// Value and gradient come from the prox; infimum and minimizer projection
/// are inherited from `f`. There is no Hessian-vector product.
#[derive(Debug, Clone)]
pub struct MoreauEnvelope<O> {
    base: O,
    lambda: f64,
}

impl<O: Objective> MoreauEnvelope<O> {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn base(&self) -> &O {
        &self.base
    }

    fn oracle(&self) -> &dyn ProxOracle {
        // checked non-empty in `regularize`
        self.base.prox_oracle().expect("prox oracle")
    }
}

/// Builds the Moreau envelope of `base` with index `lambda`.
pub fn regularize<O: Objective>(base: O, lambda: f64) -> Result<MoreauEnvelope<O>> {
    check_lambda(lambda)?;
    if base.prox_oracle().is_none() {
        return Err(Error::Unsupported("a proximal mapping"));
    }
    Ok(MoreauEnvelope { base, lambda })
}

impl<O: Objective> Objective for MoreauEnvelope<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        moreau_value(self.oracle(), self.lambda, x)
    }

    fn has_grad(&self) -> bool {
        true
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        moreau_grad_into(self.oracle(), self.lambda, x, out)
    }

    fn prox_oracle(&self) -> Option<&dyn ProxOracle> {
        self.base.prox_oracle()
    }

    fn inf_value(&self) -> f64 {
        self.base.inf_value()
    }

    fn project_argmin(&self, x: &[f64], out: &mut [f64]) {
        self.base.project_argmin(x, out)
    }

    fn unique_minimizer(&self) -> bool {
        self.base.unique_minimizer()
    }
}
