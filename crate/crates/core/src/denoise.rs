//! Scalar-channel posterior maps `g_x` and `τ_q g'_x`.
//!
//! Every denoiser observes `q_i = x_i + ϖ_i` with `ϖ_i ~ N(0, τ_q)` and returns
//! the posterior mean and posterior variance of `x_i`. Variances are per
//! complex dimension (circularly symmetric) for complex models, which makes the
//! Gaussian formulas identical for both fields; the Bernoulli-Gaussian
//! evidence terms differ and take the field explicitly.

use crate::model::Field;
use crate::{Error, Result, C64};

/// Channel noise variance seen by the denoiser: one value shared by all
/// elements (scalar AMP, UT-AMP) or one per element (vector AMP).
/// `f64::INFINITY` means the measurement carries no information.
#[derive(Debug, Clone, Copy)]
pub enum NoiseVariance<'a> {
    Scalar(f64),
    PerElement(&'a [f64]),
}

impl NoiseVariance<'_> {
    fn at(&self, i: usize) -> f64 {
        match self {
            NoiseVariance::Scalar(v) => *v,
            NoiseVariance::PerElement(v) => v[i],
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        let ok = |v: f64| v > 0.0 && !v.is_nan();
        match self {
            NoiseVariance::Scalar(v) if !ok(*v) => Err(Error::invalid(format!("tau_q must be positive, got {v}"))),
            NoiseVariance::PerElement(v) if v.len() != n => {
                Err(Error::dims(format!("tau_q has length {}, q has {n}", v.len())))
            }
            NoiseVariance::PerElement(v) if !v.iter().all(|&t| ok(t)) => {
                Err(Error::invalid("tau_q entries must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// Independent Gaussian prior `x_i ~ N(x0_i, tau0_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    x0: Vec<C64>,
    tau0: Vec<f64>,
}

impl GaussianPrior {
    pub fn new(x0: Vec<C64>, tau0: Vec<f64>) -> Result<Self> {
        if x0.len() != tau0.len() {
            return Err(Error::dims(format!("prior mean has length {}, variance has {}", x0.len(), tau0.len())));
        }
        if x0.is_empty() {
            return Err(Error::invalid("prior must have at least one element"));
        }
        if !tau0.iter().all(|&t| t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("prior variances must be positive and finite"));
        }
        if !x0.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::invalid("prior means must be finite"));
        }
        Ok(GaussianPrior { x0, tau0 })
    }

    /// Same mean and variance for all `n` elements.
    pub fn iid(n: usize, mean: C64, var: f64) -> Result<Self> {
        GaussianPrior::new(vec![mean; n], vec![var; n])
    }

    pub fn x0(&self) -> &[C64] {
        &self.x0
    }

    pub fn tau0(&self) -> &[f64] {
        &self.tau0
    }

    pub fn len(&self) -> usize {
        self.x0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x0.is_empty()
    }
}

/// Spike-and-slab prior `x_i ~ (1 − rho) δ_0 + rho N(mu, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliGaussianPrior {
    rho: f64,
    mu: C64,
    v: f64,
}

impl BernoulliGaussianPrior {
    pub fn new(rho: f64, mu: C64, v: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::invalid(format!("rho must lie in (0, 1], got {rho}")));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("slab variance must be positive, got {v}")));
        }
        if !(mu.re.is_finite() && mu.im.is_finite()) {
            return Err(Error::invalid("slab mean must be finite"));
        }
        Ok(BernoulliGaussianPrior { rho, mu, v })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mu(&self) -> C64 {
        self.mu
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn mean(&self) -> C64 {
        self.mu * self.rho
    }

    pub fn variance(&self) -> f64 {
        self.rho * self.v + self.rho * (1.0 - self.rho) * self.mu.norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    Gaussian(GaussianPrior),
    BernoulliGaussian(BernoulliGaussianPrior),
}

impl Prior {
    /// Number of elements the prior is tied to, `None` for i.i.d. priors.
    pub fn len_hint(&self) -> Option<usize> {
        match self {
            Prior::Gaussian(g) => Some(g.len()),
            Prior::BernoulliGaussian(_) => None,
        }
    }

    pub fn mean(&self, n: usize) -> Vec<C64> {
        match self {
            Prior::Gaussian(g) => g.x0.clone(),
            Prior::BernoulliGaussian(bg) => vec![bg.mean(); n],
        }
    }

    pub fn variance(&self, n: usize) -> Vec<f64> {
        match self {
            Prior::Gaussian(g) => g.tau0.clone(),
            Prior::BernoulliGaussian(bg) => vec![bg.variance(); n],
        }
    }

    pub fn denoise(&self, q: &[C64], tau_q: NoiseVariance<'_>, field: Field) -> Result<DenoiserOutput> {
        match self {
            Prior::Gaussian(g) => gaussian_denoise(q, tau_q, g),
            Prior::BernoulliGaussian(bg) => bg_denoise(q, tau_q, bg, field),
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianPrior> {
        match self {
            Prior::Gaussian(g) => Some(g),
            Prior::BernoulliGaussian(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserOutput {
    /// `g_x(q, τ_q)`.
    pub mean: Vec<C64>,
    /// `τ_q g'_x(q, τ_q)`, the per-element posterior variance.
    pub var_scaled: Vec<f64>,
    /// Arithmetic mean of `var_scaled`.
    pub var_scalar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMode {
    Vector,
    Scalar,
}

/// A variance that is either kept per element or collapsed to one number.
#[derive(Debug, Clone, PartialEq)]
pub enum Variance {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Variance {
    /// Scalar summary: the value itself or the arithmetic mean.
    pub fn summary(&self) -> f64 {
        match self {
            Variance::Scalar(v) => *v,
            Variance::Vector(v) => mean(v),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Variance::Scalar(v) => v.is_finite(),
            Variance::Vector(v) => v.iter().all(|x| x.is_finite()),
        }
    }
}

impl DenoiserOutput {
    fn from_parts(mean_out: Vec<C64>, var_scaled: Vec<f64>) -> Self {
        let var_scalar = mean(&var_scaled);
        DenoiserOutput { mean: mean_out, var_scaled, var_scalar }
    }

    pub fn variance(&self, mode: VarianceMode) -> Variance {
        match mode {
            VarianceMode::Vector => Variance::Vector(self.var_scaled.clone()),
            VarianceMode::Scalar => Variance::Scalar(self.var_scalar),
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn check_q(q: &[C64]) -> Result<()> {
    if q.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("denoiser input q has non-finite entries"))
    }
}

/// Posterior of a Gaussian prior: precision-weighted average of `q` and `x0`.
pub fn gaussian_denoise(q: &[C64], tau_q: NoiseVariance<'_>, prior: &GaussianPrior) -> Result<DenoiserOutput> {
    let n = q.len();
    if prior.len() != n {
        return Err(Error::dims(format!("prior has length {}, q has {n}", prior.len())));
    }
    tau_q.check(n)?;
    check_q(q)?;
    let mut out_mean = Vec::with_capacity(n);
    let mut out_var = Vec::with_capacity(n);
    for (i, &qi) in q.iter().enumerate() {
        let tq = tau_q.at(i);
        let (x0, t0) = (prior.x0[i], prior.tau0[i]);
        if tq.is_infinite() {
            out_mean.push(x0);
            out_var.push(t0);
            continue;
        }
        let var = 1.0 / (1.0 / tq + 1.0 / t0);
        out_mean.push((qi / tq + x0 / t0) * var);
        out_var.push(var);
    }
    Ok(DenoiserOutput::from_parts(out_mean, out_var))
}

/// Natural log of the Gaussian density of `q` with centre `c` and variance `s`.
fn log_gauss(q: C64, c: C64, s: f64, field: Field) -> f64 {
    match field {
        Field::Real => {
            let d = q.re - c.re;
            -0.5 * (2.0 * std::f64::consts::PI * s).ln() - d * d / (2.0 * s)
        }
        Field::Complex => -(std::f64::consts::PI * s).ln() - (q - c).norm_sqr() / s,
    }
}

/// Posterior of the spike-and-slab prior.
///
/// The activation probability is a logistic function of the log-odds
/// `ln(rho/(1-rho)) + ln N(q; mu, v + τ_q) − ln N(q; 0, τ_q)`. For real models
/// only the real part of `q` enters and the mean is real.
pub fn bg_denoise(
    q: &[C64],
    tau_q: NoiseVariance<'_>,
    prior: &BernoulliGaussianPrior,
    field: Field,
) -> Result<DenoiserOutput> {
    let n = q.len();
    tau_q.check(n)?;
    check_q(q)?;
    let BernoulliGaussianPrior { rho, mu, v } = *prior;
    let mut out_mean = Vec::with_capacity(n);
    let mut out_var = Vec::with_capacity(n);
    for (i, &qi) in q.iter().enumerate() {
        let qi = match field {
            Field::Real => C64::new(qi.re, 0.0),
            Field::Complex => qi,
        };
        let tq = tau_q.at(i);
        if tq.is_infinite() {
            out_mean.push(prior.mean());
            out_var.push(prior.variance());
            continue;
        }
        let slab_var = 1.0 / (1.0 / tq + 1.0 / v);
        let slab_mean = (qi / tq + mu / v) * slab_var;
        let pi = if rho >= 1.0 {
            1.0
        } else {
            let log_odds = (rho / (1.0 - rho)).ln() + log_gauss(qi, mu, v + tq, field)
                - log_gauss(qi, C64::new(0.0, 0.0), tq, field);
            // logistic, evaluated on the side that cannot overflow
            if log_odds >= 0.0 {
                1.0 / (1.0 + (-log_odds).exp())
            } else {
                let e = log_odds.exp();
                e / (1.0 + e)
            }
        };
        out_mean.push(slab_mean * pi);
        out_var.push(pi * slab_var + pi * (1.0 - pi) * slab_mean.norm_sqr());
    }
    Ok(DenoiserOutput::from_parts(out_mean, out_var))
}
