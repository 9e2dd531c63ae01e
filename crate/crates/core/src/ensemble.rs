//! Seeded generators for "difficult" measurement matrices and synthetic
//! instances `y = A x_true + n`.
//!
//! All randomness comes from ChaCha20 seeded with `seed_from_u64(seed)`; the
//! matrix, `x_true` and noise draws use streams 0, 1 and 2 respectively, so the
//! three are independent and each is reproducible on its own.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::denoise::Prior;
use crate::model::{circulant_matrix, Field, LinearModel};
use crate::{CMatrix, CVector, Error, Result, C64};

pub const STREAM_MATRIX: u64 = 0;
pub const STREAM_SIGNAL: u64 = 1;
pub const STREAM_NOISE: u64 = 2;

pub const DEFAULT_MEAN_SHIFT: f64 = 10.0;
pub const DEFAULT_KAPPA: f64 = 1e6;
pub const DEFAULT_CORRELATION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    IidGaussian,
    NonzeroMean,
    IllConditioned,
    RankDeficient,
    ColumnCorrelated,
    Circulant,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 6] = [
        EnsembleKind::IidGaussian,
        EnsembleKind::NonzeroMean,
        EnsembleKind::IllConditioned,
        EnsembleKind::RankDeficient,
        EnsembleKind::ColumnCorrelated,
        EnsembleKind::Circulant,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EnsembleKind::IidGaussian => "iid_gaussian",
            EnsembleKind::NonzeroMean => "nonzero_mean",
            EnsembleKind::IllConditioned => "ill_conditioned",
            EnsembleKind::RankDeficient => "rank_deficient",
            EnsembleKind::ColumnCorrelated => "column_correlated",
            EnsembleKind::Circulant => "circulant",
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnsembleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown ensemble kind '{s}'")))
    }
}

/// Kind-specific knobs; unset values fall back to the documented defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnsembleParams {
    /// Constant added to every entry (`nonzero_mean`), default 10.
    pub mean_shift: Option<f64>,
    /// `σ_max / σ_min` (`ill_conditioned`, default 1e6; `rank_deficient`
    /// nonzero part, default 1).
    pub kappa: Option<f64>,
    /// Number of nonzero singular values (`rank_deficient`), default `min/2`.
    pub rank: Option<usize>,
    /// `R[i, j] = ρ^{|i−j|}` (`column_correlated`), default 0.9.
    pub correlation: Option<f64>,
    /// First column (`circulant`); random i.i.d. taps when absent.
    pub taps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub m: usize,
    pub n: usize,
    pub params: EnsembleParams,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, m: usize, n: usize, seed: u64) -> Self {
        EnsembleSpec { kind, m, n, params: EnsembleParams::default(), seed }
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.m, self.n);
        if m == 0 || n == 0 {
            return Err(Error::invalid("ensemble dimensions must be positive"));
        }
        let p = &self.params;
        if let Some(k) = p.kappa {
            if !(k >= 1.0) || !k.is_finite() {
                return Err(Error::invalid(format!("kappa must be >= 1, got {k}")));
            }
        }
        if let Some(r) = p.rank {
            if r == 0 || r > m.min(n) {
                return Err(Error::invalid(format!("rank must lie in 1..={}, got {r}", m.min(n))));
            }
        }
        if let Some(rho) = p.correlation {
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::invalid(format!("correlation must lie in [0, 1), got {rho}")));
            }
        }
        if let Some(mu) = p.mean_shift {
            if !mu.is_finite() {
                return Err(Error::invalid("mean shift must be finite"));
            }
        }
        if self.kind == EnsembleKind::Circulant {
            if m != n {
                return Err(Error::invalid(format!("circulant matrices are square, got {m}x{n}")));
            }
            if let Some(t) = &p.taps {
                if t.len() > n {
                    return Err(Error::invalid(format!("{} taps do not fit a {n}x{n} circulant", t.len())));
                }
                if t.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("taps must be finite"));
                }
            }
        }
        if self.kind == EnsembleKind::RankDeficient && m.min(n) < 2 && p.rank.is_none() {
            return Err(Error::invalid("rank_deficient needs min(M, N) >= 2"));
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.params.rank.unwrap_or((self.m.min(self.n) / 2).max(1))
    }

    /// First column of the circulant, zero-padded to `n` (`circulant` only).
    pub fn circulant_column(&self) -> Option<Vec<C64>> {
        if self.kind != EnsembleKind::Circulant {
            return None;
        }
        let n = self.n;
        let col = match &self.params.taps {
            Some(t) => {
                let mut c: Vec<C64> = t.iter().map(|&v| C64::new(v, 0.0)).collect();
                c.resize(n, C64::new(0.0, 0.0));
                c
            }
            None => {
                let mut rng = rng_for(self.seed, STREAM_MATRIX);
                let s = 1.0 / (n as f64).sqrt();
                (0..n).map(|_| C64::new(s * rng.sample::<f64, _>(StandardNormal), 0.0)).collect()
            }
        };
        Some(col)
    }
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_matrix(rng: &mut ChaCha20Rng, m: usize, n: usize, std: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| std * rng.sample::<f64, _>(StandardNormal))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of `diag(R)` folded into `Q`.
fn random_orthogonal(rng: &mut ChaCha20Rng, n: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, n, n, 1.0);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `U₀ Diag(σ) V₀^T` with Haar `U₀`, `V₀`.
fn with_spectrum(rng: &mut ChaCha20Rng, m: usize, n: usize, sigma: &[f64]) -> DMatrix<f64> {
    let u = random_orthogonal(rng, m);
    let v = random_orthogonal(rng, n);
    let mut s = DMatrix::zeros(m, n);
    for (i, &x) in sigma.iter().enumerate() {
        s[(i, i)] = x;
    }
    u * s * v.transpose()
}

/// `k` log-spaced values from 1 down to `1/kappa`.
fn log_spaced(k: usize, kappa: f64) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    (0..k).map(|i| kappa.powf(-(i as f64) / (k - 1) as f64)).collect()
}

fn to_complex(a: DMatrix<f64>) -> CMatrix {
    a.map(|x| C64::new(x, 0.0))
}

/// Deterministic in `spec.seed`.
pub fn generate_matrix(spec: &EnsembleSpec) -> Result<CMatrix> {
    spec.validate()?;
    let (m, n) = (spec.m, spec.n);
    let k = m.min(n);
    let mut rng = rng_for(spec.seed, STREAM_MATRIX);
    let iid_std = 1.0 / (m as f64).sqrt();
    let a = match spec.kind {
        EnsembleKind::IidGaussian => gaussian_matrix(&mut rng, m, n, iid_std),
        EnsembleKind::NonzeroMean => {
            let mu = spec.params.mean_shift.unwrap_or(DEFAULT_MEAN_SHIFT);
            gaussian_matrix(&mut rng, m, n, iid_std).add_scalar(mu)
        }
        EnsembleKind::IllConditioned => {
            let kappa = spec.params.kappa.unwrap_or(DEFAULT_KAPPA);
            with_spectrum(&mut rng, m, n, &log_spaced(k, kappa))
        }
        EnsembleKind::RankDeficient => {
            let r = spec.rank();
            let mut sigma = log_spaced(r, spec.params.kappa.unwrap_or(1.0));
            sigma.resize(k, 0.0);
            with_spectrum(&mut rng, m, n, &sigma)
        }
        EnsembleKind::ColumnCorrelated => {
            let rho = spec.params.correlation.unwrap_or(DEFAULT_CORRELATION);
            let r = DMatrix::from_fn(n, n, |i, j| rho.powi((i as i32 - j as i32).abs()));
            let eig = SymmetricEigen::new(r);
            let sqrt_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
            let root = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
            gaussian_matrix(&mut rng, m, n, iid_std) * root
        }
        EnsembleKind::Circulant => {
            let col = spec.circulant_column().expect("circulant kind");
            return Ok(circulant_matrix(&col));
        }
    };
    Ok(to_complex(a))
}

fn standard_sample(rng: &mut ChaCha20Rng, field: Field) -> C64 {
    match field {
        Field::Real => C64::new(rng.sample(StandardNormal), 0.0),
        Field::Complex => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            C64::new(h * rng.sample::<f64, _>(StandardNormal), h * rng.sample::<f64, _>(StandardNormal))
        }
    }
}

/// Draws `x_true` from the prior and `n ~ N(0, σ² I)` (circular complex when
/// `A` is complex), then sets `y = A x_true + n`.
pub fn synthesize_instance(a: &CMatrix, prior: &Prior, sigma2: f64, seed: u64) -> Result<LinearModel> {
    let (m, n) = a.shape();
    if let Some(len) = prior.len_hint() {
        if len != n {
            return Err(Error::dims(format!("prior has length {len}, A has {n} columns")));
        }
    }
    if !(sigma2 > 0.0) {
        return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    let field = Field::of(a.iter().copied());
    let mut sig_rng = rng_for(seed, STREAM_SIGNAL);
    let x_true: CVector = match prior {
        Prior::Gaussian(g) => CVector::from_iterator(
            n,
            g.x0().iter().zip(g.tau0()).map(|(x0, t0)| x0 + standard_sample(&mut sig_rng, field) * t0.sqrt()),
        ),
        Prior::BernoulliGaussian(bg) => CVector::from_iterator(
            n,
            (0..n).map(|_| {
                let active = sig_rng.random::<f64>() < bg.rho();
                let slab = bg.mu() + standard_sample(&mut sig_rng, field) * bg.v().sqrt();
                if active {
                    slab
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        ),
    };
    let mut noise_rng = rng_for(seed, STREAM_NOISE);
    let sd = sigma2.sqrt();
    let noise = CVector::from_iterator(m, (0..m).map(|_| standard_sample(&mut noise_rng, field) * sd));
    let y = a * &x_true + noise;
    LinearModel::new(a.clone(), y, sigma2)?.with_truth(x_true)
}
