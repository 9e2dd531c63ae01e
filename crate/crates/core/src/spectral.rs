//! Convergence certificates for UT-AMP under Gaussian priors.
//!
//! At the variance fixed point `τ_x` the joint recursion of `(s^{t-1}, x^t)` is
//! affine with iteration matrix
//!
//! ```text
//! C = [ τ_x D ΛΛ^H               −D Λ V                    ]
//!     [ τ_x² V^H Λ^H D ΛΛ^H      α I − τ_x V^H Λ^H D Λ V   ]
//! ```
//!
//! with `D = (τ_x ΛΛ^H + σ² I)^{-1}`. With `β_i = τ_x|λ_i|² / (τ_x|λ_i|² + σ²)`
//! and `α = (1/N) Σ β_i`, the characteristic polynomial factors into
//! `∏ (η² − αη + αβ_i)` times `η^{M−N}` (tall) or `(η − α)^{N−M}` (fat).
//! The spectral radius is therefore `max(α, max_i √(αβ_i))` on the complex
//! branch, which is below one whenever `σ² > 0`.

use std::fmt::{self, Write as _};

use crate::denoise::{GaussianPrior, Prior};
use crate::eig;
use crate::model::{svd_factorize, Factorization, LinearModel};
use crate::{CMatrix, Error, Result, C64};

pub const FIXED_POINT_MAX_ITERS: usize = 100_000;
pub const FIXED_POINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceFixedPoint {
    pub tau_x: f64,
    /// `f64::INFINITY` when every `λ_i` is zero.
    pub tau_q: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

fn check_dims(lambda: &[C64], m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("dimensions must be positive"));
    }
    if lambda.len() != m.min(n) {
        return Err(Error::dims(format!("lambda has length {}, expected min({m}, {n})", lambda.len())));
    }
    Ok(())
}

/// `1/τ_q = (1/N) Σ |λ_i|² / (τ_x |λ_i|² + σ²)`.
fn inverse_tau_q(lambda_sq: &[f64], tau_x: f64, sigma2: f64, n: usize) -> f64 {
    lambda_sq.iter().map(|&l| l / (tau_x * l + sigma2)).sum::<f64>() / n as f64
}

/// Average Gaussian posterior variance for channel variance `tau_q`.
fn average_posterior_variance(tau_q: f64, tau0: &[f64]) -> f64 {
    tau0.iter().map(|&t0| 1.0 / (1.0 / tau_q + 1.0 / t0)).sum::<f64>() / tau0.len() as f64
}

/// Iterates the scalar variance recursion of UT-AMP from `τ_x = mean(tau0)`.
pub fn variance_fixed_point(
    lambda: &[C64],
    sigma2: f64,
    prior: &GaussianPrior,
    m: usize,
    n: usize,
) -> Result<VarianceFixedPoint> {
    check_dims(lambda, m, n)?;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    if prior.len() != n {
        return Err(Error::dims(format!("prior has length {}, expected {n}", prior.len())));
    }
    let lambda_sq: Vec<f64> = lambda.iter().map(|l| l.norm_sqr()).collect();
    let tau0 = prior.tau0();
    let prior_mean_var = tau0.iter().sum::<f64>() / n as f64;
    if lambda_sq.iter().all(|&l| l == 0.0) {
        return Ok(VarianceFixedPoint {
            tau_x: prior_mean_var,
            tau_q: f64::INFINITY,
            iterations_used: 0,
            converged: true,
        });
    }
    let mut tau_x = prior_mean_var;
    for it in 1..=FIXED_POINT_MAX_ITERS {
        let tau_q = 1.0 / inverse_tau_q(&lambda_sq, tau_x, sigma2, n);
        let next = average_posterior_variance(tau_q, tau0);
        let done = (next - tau_x).abs() <= FIXED_POINT_TOL * (1.0 + tau_x);
        tau_x = next;
        if done {
            let tau_q = 1.0 / inverse_tau_q(&lambda_sq, tau_x, sigma2, n);
            return Ok(VarianceFixedPoint { tau_x, tau_q, iterations_used: it, converged: true });
        }
    }
    let tau_q = 1.0 / inverse_tau_q(&lambda_sq, tau_x, sigma2, n);
    Ok(VarianceFixedPoint { tau_x, tau_q, iterations_used: FIXED_POINT_MAX_ITERS, converged: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients {
    pub alpha: f64,
    /// Length `min(M, N)`.
    pub betas: Vec<f64>,
    pub m: usize,
    pub n: usize,
}

pub fn spectral_coefficients(
    fp: &VarianceFixedPoint,
    lambda: &[C64],
    sigma2: f64,
    m: usize,
    n: usize,
) -> Result<SpectralCoefficients> {
    check_dims(lambda, m, n)?;
    let betas: Vec<f64> = lambda
        .iter()
        .map(|l| {
            let g = fp.tau_x * l.norm_sqr();
            g / (g + sigma2)
        })
        .collect();
    let alpha = betas.iter().sum::<f64>() / n as f64;
    Ok(SpectralCoefficients { alpha, betas, m, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeCase {
    Square,
    Tall,
    Fat,
}

impl ShapeCase {
    pub fn of(m: usize, n: usize) -> Self {
        match m.cmp(&n) {
            std::cmp::Ordering::Equal => ShapeCase::Square,
            std::cmp::Ordering::Greater => ShapeCase::Tall,
            std::cmp::Ordering::Less => ShapeCase::Fat,
        }
    }
}

impl fmt::Display for ShapeCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShapeCase::Square => "square",
            ShapeCase::Tall => "tall",
            ShapeCase::Fat => "fat",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCertificate {
    pub coefficients: SpectralCoefficients,
    /// `M + N` eigenvalues of the iteration matrix.
    pub eigenvalues: Vec<C64>,
    pub spectral_radius: f64,
    pub converges: bool,
    pub case: ShapeCase,
    /// Present when produced by [`certify`].
    pub fixed_point: Option<VarianceFixedPoint>,
    /// Largest closed-form vs dense eigenvalue gap after optimal matching,
    /// when a dense check was requested.
    pub numeric_discrepancy: Option<f64>,
}

impl ConvergenceCertificate {
    /// Whether `ρ ≤ α` holds; it can fail on the complex branch when
    /// `α < 4β_i`, although `ρ < 1` still does.
    pub fn radius_within_alpha(&self) -> bool {
        self.spectral_radius <= self.coefficients.alpha * (1.0 + 1e-12)
    }

    /// `key: value` text report.
    pub fn to_report(&self) -> String {
        let c = &self.coefficients;
        let mut out = String::new();
        let _ = writeln!(out, "M: {}", c.m);
        let _ = writeln!(out, "N: {}", c.n);
        let _ = writeln!(out, "case: {}", self.case);
        if let Some(fp) = &self.fixed_point {
            let _ = writeln!(out, "tau_x: {:e}", fp.tau_x);
            let _ = writeln!(
                out,
                "tau_q: {}",
                if fp.tau_q.is_infinite() { "inf".to_string() } else { format!("{:e}", fp.tau_q) }
            );
            let _ = writeln!(out, "variance_iterations: {}", fp.iterations_used);
            let _ = writeln!(out, "variance_converged: {}", fp.converged);
        }
        let _ = writeln!(out, "alpha: {:e}", c.alpha);
        let betas: Vec<String> = c.betas.iter().map(|b| format!("{b:e}")).collect();
        let _ = writeln!(out, "beta: [{}]", betas.join(", "));
        let eigs: Vec<String> = self.eigenvalues.iter().map(|z| format!("({:e},{:e})", z.re, z.im)).collect();
        let _ = writeln!(out, "eigenvalues: [{}]", eigs.join(", "));
        let _ = writeln!(out, "spectral_radius: {:e}", self.spectral_radius);
        let _ = writeln!(out, "radius_within_alpha: {}", self.radius_within_alpha());
        if let Some(d) = self.numeric_discrepancy {
            let _ = writeln!(out, "numeric_discrepancy: {d:e}");
        }
        let _ = writeln!(out, "converges: {}", self.converges);
        out
    }
}

/// Roots of `η² − αη + αβ` decided by the sign of the discriminant.
fn quadratic_roots(alpha: f64, beta: f64) -> [C64; 2] {
    let disc = alpha * alpha - 4.0 * alpha * beta;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [C64::new((alpha + r) / 2.0, 0.0), C64::new((alpha - r) / 2.0, 0.0)]
    } else {
        let r = (-disc).sqrt() / 2.0;
        [C64::new(alpha / 2.0, r), C64::new(alpha / 2.0, -r)]
    }
}

/// Eigenvalues of the iteration matrix from the factored characteristic
/// polynomial.
pub fn closed_form_eigenvalues(coeff: &SpectralCoefficients) -> ConvergenceCertificate {
    let (m, n) = (coeff.m, coeff.n);
    let alpha = coeff.alpha;
    let mut eigenvalues = Vec::with_capacity(m + n);
    for &beta in &coeff.betas {
        eigenvalues.extend(quadratic_roots(alpha, beta));
    }
    let case = ShapeCase::of(m, n);
    match case {
        ShapeCase::Square => {}
        ShapeCase::Tall => eigenvalues.extend(std::iter::repeat_n(C64::new(0.0, 0.0), m - n)),
        ShapeCase::Fat => eigenvalues.extend(std::iter::repeat_n(C64::new(alpha, 0.0), n - m)),
    }
    let spectral_radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    ConvergenceCertificate {
        coefficients: coeff.clone(),
        eigenvalues,
        spectral_radius,
        converges: spectral_radius < 1.0,
        case,
        fixed_point: None,
        numeric_discrepancy: None,
    }
}

/// Dense `(M+N) x (M+N)` iteration matrix at the variance fixed point.
pub fn numeric_iteration_matrix(
    fact: &Factorization,
    fp: &VarianceFixedPoint,
    coeff: &SpectralCoefficients,
    sigma2: f64,
) -> Result<CMatrix> {
    let (m, n) = (fact.rows(), fact.cols());
    if coeff.m != m || coeff.n != n {
        return Err(Error::dims(format!("coefficients are for {}x{}, factorization is {m}x{n}", coeff.m, coeff.n)));
    }
    let v = fact.v().to_dense();
    let vh = v.adjoint();
    let lambda = fact.lambda();
    let tau = fp.tau_x;
    // D = (τ ΛΛ^H + σ² I)^{-1}, zero-λ rows give 1/σ²
    let d: Vec<f64> = (0..m)
        .map(|i| {
            let l2 = lambda.get(i).map_or(0.0, |l| l.norm_sqr());
            1.0 / (tau * l2 + sigma2)
        })
        .collect();
    let mut c = CMatrix::zeros(m + n, m + n);
    for (i, l) in lambda.iter().enumerate() {
        let l2 = l.norm_sqr();
        // C_a
        c[(i, i)] = C64::new(tau * d[i] * l2, 0.0);
        // C_b = −D Λ V
        for j in 0..n {
            c[(i, m + j)] = -(l * v[(i, j)]) * d[i];
        }
        // C_c = τ² V^H Λ^H D ΛΛ^H
        let w = l.conj() * (tau * tau * d[i] * l2);
        for r in 0..n {
            c[(m + r, i)] = vh[(r, i)] * w;
        }
    }
    // C_d = α I − τ V^H Λ^H D Λ V
    let mut inner = CMatrix::zeros(n, n);
    for (i, l) in lambda.iter().enumerate() {
        let g = tau * d[i] * l.norm_sqr();
        for j in 0..n {
            inner[(i, j)] = v[(i, j)] * g;
        }
    }
    let cd = CMatrix::identity(n, n) * C64::new(coeff.alpha, 0.0) - vh * inner;
    c.view_mut((m, m), (n, n)).copy_from(&cd);
    Ok(c)
}

/// Fixed point, coefficients and closed-form eigenvalues for a factored
/// system. With `check_numeric` the dense iteration matrix is assembled and its
/// eigenvalues compared against the closed form.
pub fn certify(
    fact: &Factorization,
    prior: &Prior,
    sigma2: f64,
    check_numeric: bool,
) -> Result<ConvergenceCertificate> {
    let gaussian = prior
        .as_gaussian()
        .ok_or_else(|| Error::UnsupportedPrior("convergence certificates exist only for Gaussian priors".into()))?;
    let (m, n) = (fact.rows(), fact.cols());
    let fp = variance_fixed_point(fact.lambda(), sigma2, gaussian, m, n)?;
    let coeff = spectral_coefficients(&fp, fact.lambda(), sigma2, m, n)?;
    let mut cert = closed_form_eigenvalues(&coeff);
    cert.fixed_point = Some(fp);
    if check_numeric {
        let c = numeric_iteration_matrix(fact, &fp, &coeff, sigma2)?;
        let numeric = eig::eigenvalues(&c)?;
        cert.numeric_discrepancy = Some(eig::multiset_distance(&cert.eigenvalues, &numeric)?);
    }
    Ok(cert)
}

/// [`certify`] on the SVD of `model.a()`.
pub fn certify_model(model: &LinearModel, prior: &Prior, check_numeric: bool) -> Result<ConvergenceCertificate> {
    let fact = svd_factorize(model.a())?;
    certify(&fact, prior, model.sigma2(), check_numeric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::circulant_factorize;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn unit_prior(n: usize) -> GaussianPrior {
        GaussianPrior::iid(n, c(0.0), 1.0).unwrap()
    }

    #[test]
    fn golden_ratio_fixed_point() {
        let fp = variance_fixed_point(&[c(1.0); 4], 1.0, &unit_prior(4), 4, 4).unwrap();
        assert!(fp.converged);
        assert!((fp.tau_x - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-11);
        // τ_q = τ_x + σ² at λ ≡ 1
        assert!((fp.tau_q - fp.tau_x - 1.0).abs() < 1e-11);
    }

    #[test]
    fn no_measurement_fixed_point() {
        let prior = GaussianPrior::new(vec![c(0.0); 3], vec![1.0, 2.0, 6.0]).unwrap();
        let fp = variance_fixed_point(&[c(0.0); 3], 0.5, &prior, 3, 3).unwrap();
        assert_eq!(fp.tau_q, f64::INFINITY);
        assert_eq!(fp.tau_x, 3.0);
        let coeff = spectral_coefficients(&fp, &[c(0.0); 3], 0.5, 3, 3).unwrap();
        assert_eq!(coeff.alpha, 0.0);
        assert!(coeff.betas.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn near_noiseless_variance_goes_to_zero() {
        // τ(τ + σ² + 1) = τ + σ² gives τ ≈ σ for small σ²; the plain
        // recursion decays like 1/t, so the cap is reached first
        let fp = variance_fixed_point(&[c(1.0); 2], 1e-12, &unit_prior(2), 2, 2).unwrap();
        assert!(fp.tau_x < 2e-5, "{}", fp.tau_x);
        assert!(!fp.converged);
        let fp_bigger = variance_fixed_point(&[c(1.0); 2], 1e-2, &unit_prior(2), 2, 2).unwrap();
        assert!(fp.tau_x < fp_bigger.tau_x);
    }

    #[test]
    fn coefficient_arithmetic() {
        let fp = VarianceFixedPoint { tau_x: 1.0, tau_q: 2.0, iterations_used: 0, converged: true };
        let sq = spectral_coefficients(&fp, &[c(1.0), c(1.0)], 1.0, 2, 2).unwrap();
        assert_eq!(sq.betas, vec![0.5, 0.5]);
        assert_eq!(sq.alpha, 0.5);
        let fat = spectral_coefficients(&fp, &[c(1.0); 3], 1.0, 3, 5).unwrap();
        assert!((fat.alpha - 0.3).abs() < 1e-15);
        let z = spectral_coefficients(&fp, &[c(0.0), c(2.0)], 1.0, 2, 2).unwrap();
        assert_eq!(z.betas[0], 0.0);
        assert!(spectral_coefficients(&fp, &[c(1.0)], 1.0, 2, 2).is_err());
    }

    #[test]
    fn closed_form_branches() {
        let coeff = SpectralCoefficients { alpha: 0.4, betas: vec![0.0], m: 1, n: 1 };
        let cert = closed_form_eigenvalues(&coeff);
        assert!(eig::multiset_distance(&cert.eigenvalues, &[c(0.0), c(0.4)]).unwrap() < 1e-15);

        let coeff = SpectralCoefficients { alpha: 0.5, betas: vec![0.5], m: 1, n: 1 };
        let cert = closed_form_eigenvalues(&coeff);
        for z in &cert.eigenvalues {
            assert!(z.im != 0.0);
            assert!((z.norm() - 0.5).abs() < 1e-15);
        }
        // ρ can exceed α on the complex branch
        let coeff = SpectralCoefficients { alpha: 0.1, betas: vec![0.9], m: 1, n: 1 };
        let cert = closed_form_eigenvalues(&coeff);
        assert!((cert.spectral_radius - 0.3).abs() < 1e-15);
        assert!(!cert.radius_within_alpha());
        assert!(cert.converges);
    }

    #[test]
    fn closed_form_padding_per_shape() {
        let tall = SpectralCoefficients { alpha: 0.3, betas: vec![0.2; 3], m: 5, n: 3 };
        let cert = closed_form_eigenvalues(&tall);
        assert_eq!(cert.case, ShapeCase::Tall);
        assert_eq!(cert.eigenvalues.len(), 8);
        assert_eq!(cert.eigenvalues[6..], [c(0.0), c(0.0)]);

        let fat = SpectralCoefficients { alpha: 0.3, betas: vec![0.5; 3], m: 3, n: 5 };
        let cert = closed_form_eigenvalues(&fat);
        assert_eq!(cert.case, ShapeCase::Fat);
        assert_eq!(cert.eigenvalues[6..], [c(0.3), c(0.3)]);
        // complex pairs have modulus √0.15 > α
        assert!((cert.spectral_radius - 0.15f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn scalar_iteration_matrix_matches_quadratic() {
        let fact = circulant_factorize(&[c(1.0)]).unwrap();
        let fp = VarianceFixedPoint { tau_x: 0.7, tau_q: 1.0, iterations_used: 0, converged: true };
        let coeff = spectral_coefficients(&fp, fact.lambda(), 0.4, 1, 1).unwrap();
        let cm = numeric_iteration_matrix(&fact, &fp, &coeff, 0.4).unwrap();
        // trace α, determinant αβ
        let (a, b) = (coeff.alpha, coeff.betas[0]);
        assert!((cm.trace() - c(a)).norm() < 1e-15);
        assert!((cm.clone().determinant() - c(a * b)).norm() < 1e-15);
    }

    #[test]
    fn zero_matrix_certificate() {
        let fact = svd_factorize(&CMatrix::zeros(3, 3)).unwrap();
        let cert = certify(&fact, &Prior::Gaussian(unit_prior(3)), 1.0, true).unwrap();
        assert_eq!(cert.spectral_radius, 0.0);
        assert!(cert.converges);
        assert!(cert.numeric_discrepancy.unwrap() < 1e-15);
        assert!(cert.to_report().contains("tau_q: inf"));
    }

    #[test]
    fn bg_prior_is_unsupported() {
        let fact = svd_factorize(&CMatrix::identity(2, 2)).unwrap();
        let bg = Prior::BernoulliGaussian(crate::denoise::BernoulliGaussianPrior::new(0.5, c(0.0), 1.0).unwrap());
        assert!(matches!(certify(&fact, &bg, 1.0, false), Err(Error::UnsupportedPrior(_))));
    }
}
