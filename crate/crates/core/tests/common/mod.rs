//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use utamp_core::denoise::GaussianPrior;
use utamp_core::model::LinearModel;
use utamp_core::{CMatrix, CVector, C64};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha20Rng, m: usize, n: usize, complex: bool) -> CMatrix {
    let s = if complex { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 } / (m as f64).sqrt();
    CMatrix::from_fn(m, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
        C64::new(re, im) * s
    })
}

/// Haar unitary (orthogonal when `complex` is false).
pub fn haar_unitary(rng: &mut ChaCha20Rng, n: usize, complex: bool) -> CMatrix {
    let g = gaussian_matrix(rng, n, n, complex);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// LMMSE point from the dense normal equations with two rounds of iterative
/// refinement.
pub fn refined_lmmse(model: &LinearModel, prior: &GaussianPrior) -> CVector {
    let n = model.cols();
    let s2 = C64::new(model.sigma2(), 0.0);
    let a = model.a();
    let ah = a.adjoint();
    let mut h = &ah * a / s2;
    let mut b = &ah * model.y() / s2;
    for i in 0..n {
        let w = 1.0 / prior.tau0()[i];
        h[(i, i)] += w;
        b[i] += prior.x0()[i] * w;
    }
    let chol = h.clone().cholesky().expect("normal matrix is positive definite");
    let mut x = chol.solve(&b);
    for _ in 0..2 {
        let r = &b - &h * &x;
        x += chol.solve(&r);
    }
    x
}

pub fn rel_err(x: &CVector, reference: &CVector) -> f64 {
    (x - reference).norm() / reference.norm().max(f64::MIN_POSITIVE)
}

pub fn to_real(a: &CMatrix) -> DMatrix<f64> {
    a.map(|z| z.re)
}

// ---------------------------------------------------------------------------
// quadrature oracle for the scalar posterior

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// `∫ f` over `[lo, hi]` in panels of width `width`, each by tanh-sinh.
fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, width: f64) -> f64 {
    let panels = ((hi - lo) / width).ceil().max(1.0) as usize;
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .map(|k| {
            let a = lo + k as f64 * h;
            quadrature::double_exponential::integrate(&f, a, a + h, 1e-15).integral
        })
        .sum()
}

/// Moments of `x ↦ N(x; m, v) N(q; x, t)`: `(Z, ∫x·, ∫(x−c)²·)` for a centre
/// `c` supplied by the caller.
struct Slab1d {
    m: f64,
    v: f64,
    q: f64,
    t: f64,
}

impl Slab1d {
    fn window(&self) -> (f64, f64, f64) {
        let (sv, st) = (self.v.sqrt(), self.t.sqrt());
        let smax = sv.max(st);
        let lo = self.m.min(self.q) - 12.0 * smax;
        let hi = self.m.max(self.q) + 12.0 * smax;
        (lo, hi, 0.5 * sv.min(st))
    }

    fn weight(&self, x: f64) -> f64 {
        normal_pdf(x, self.m, self.v) * normal_pdf(self.q, x, self.t)
    }

    fn z(&self) -> f64 {
        let (lo, hi, w) = self.window();
        integrate(|x| self.weight(x), lo, hi, w)
    }

    fn first(&self) -> f64 {
        let (lo, hi, w) = self.window();
        integrate(|x| x * self.weight(x), lo, hi, w)
    }

    fn central(&self, c: f64) -> f64 {
        let (lo, hi, w) = self.window();
        integrate(|x| (x - c) * (x - c) * self.weight(x), lo, hi, w)
    }
}

/// Posterior mean and total variance of `x` given `q = x + w`, with prior
/// `(1 − ρ) δ₀ + ρ N(μ, v)` and noise variance `τ`, by numerical
/// integration. Complex variables are circular: variance splits evenly
/// between the real and imaginary parts. `ρ = 1` gives a Gaussian prior.
pub fn posterior_by_quadrature(q: C64, tau: f64, rho: f64, mu: C64, v: f64, complex: bool) -> (C64, f64) {
    if !complex {
        let s = Slab1d { m: mu.re, v, q: q.re, t: tau };
        let spike = (1.0 - rho) * normal_pdf(q.re, 0.0, tau);
        let z = spike + rho * s.z();
        let mean = rho * s.first() / z;
        let var = (spike * mean * mean + rho * s.central(mean)) / z;
        return (C64::new(mean, 0.0), var);
    }
    let re = Slab1d { m: mu.re, v: v / 2.0, q: q.re, t: tau / 2.0 };
    let im = Slab1d { m: mu.im, v: v / 2.0, q: q.im, t: tau / 2.0 };
    let (zr, zi) = (re.z(), im.z());
    let spike = (1.0 - rho) * normal_pdf(q.re, 0.0, tau / 2.0) * normal_pdf(q.im, 0.0, tau / 2.0);
    let z = spike + rho * zr * zi;
    let mean = C64::new(rho * re.first() * zi / z, rho * zr * im.first() / z);
    let var = (spike * mean.norm_sqr() + rho * (re.central(mean.re) * zi + zr * im.central(mean.im))) / z;
    (mean, var)
}
