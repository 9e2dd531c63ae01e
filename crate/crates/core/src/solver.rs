//! Vector-stepsize AMP, scalar-stepsize AMP and UT-AMP.
//!
//! Each algorithm is a pure step function `(state) -> (state, scratch)`; [`run`]
//! drives a step until the iterate stops moving, an iteration cap is hit, or
//! the state blows up. No damping is applied anywhere.

use std::fmt;
use std::io::Write;

use crate::denoise::{NoiseVariance, Prior, Variance};
use crate::model::{unitary_transform, Factorization, LinearModel, TransformedModel};
use crate::{norm2, CVector, Error, Result, C64};

/// Lower clamp for every variance used as a divisor.
pub const VARIANCE_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    AmpVector,
    AmpScalar,
    UtAmp,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::AmpVector => "amp-vec",
            Algorithm::AmpScalar => "amp-scalar",
            Algorithm::UtAmp => "utamp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: CVector,
    /// `s^{t-1}`, length `M`.
    pub s_prev: CVector,
    pub tau_x: Variance,
    pub t: usize,
    pub diverged: bool,
}

impl SolverState {
    /// `x = prior mean`, `τ_x = mean prior variance`, `s^{-1} = 0`.
    pub fn initial(algorithm: Algorithm, prior: &Prior, rows: usize, cols: usize) -> Self {
        let var = prior.variance(cols);
        let tau = (var.iter().sum::<f64>() / cols as f64).max(VARIANCE_FLOOR);
        let tau_x = match algorithm {
            Algorithm::AmpVector => Variance::Vector(vec![tau; cols]),
            Algorithm::AmpScalar | Algorithm::UtAmp => Variance::Scalar(tau),
        };
        SolverState {
            x: CVector::from_vec(prior.mean(cols)),
            s_prev: CVector::zeros(rows),
            tau_x,
            t: 0,
            diverged: false,
        }
    }
}

/// Intermediate quantities of one iteration (Lines 1-6 of each algorithm).
#[derive(Debug, Clone, PartialEq)]
pub struct StepScratch {
    pub tau_p: Vec<f64>,
    pub p: CVector,
    pub tau_s: Vec<f64>,
    pub s: CVector,
    pub tau_q: Variance,
    pub q: CVector,
}

fn floor(v: f64) -> f64 {
    if v.is_nan() {
        v
    } else {
        v.max(VARIANCE_FLOOR)
    }
}

fn all_finite(v: &CVector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn check_prior(prior: &Prior, cols: usize) -> Result<()> {
    match prior.len_hint() {
        Some(n) if n != cols => Err(Error::dims(format!("prior has length {n}, model has {cols} columns"))),
        _ => Ok(()),
    }
}

fn check_state(state: &SolverState, rows: usize, cols: usize) -> Result<()> {
    if state.x.len() != cols || state.s_prev.len() != rows {
        return Err(Error::dims(format!(
            "state has x of length {} and s of length {}, model is {rows}x{cols}",
            state.x.len(),
            state.s_prev.len()
        )));
    }
    Ok(())
}

/// Lines 7-8: denoise and assemble the next state. A non-finite `q` marks the
/// state diverged instead of erroring.
fn finish_step(
    state: &SolverState,
    scratch: &StepScratch,
    prior: &Prior,
    field: crate::model::Field,
    vector_mode: bool,
) -> Result<SolverState> {
    let diverged_state = || SolverState {
        x: scratch.q.clone(),
        s_prev: scratch.s.clone(),
        tau_x: state.tau_x.clone(),
        t: state.t + 1,
        diverged: true,
    };
    // τ_q = +∞ is legitimate (no measurement information); NaN is not
    let tau_q_nan = match &scratch.tau_q {
        Variance::Scalar(v) => v.is_nan(),
        Variance::Vector(v) => v.iter().any(|t| t.is_nan()),
    };
    if tau_q_nan || !all_finite(&scratch.q) || !all_finite(&scratch.s) {
        return Ok(diverged_state());
    }
    let q: Vec<C64> = scratch.q.iter().copied().collect();
    let out = match &scratch.tau_q {
        Variance::Scalar(v) => prior.denoise(&q, NoiseVariance::Scalar(*v), field)?,
        Variance::Vector(v) => prior.denoise(&q, NoiseVariance::PerElement(v), field)?,
    };
    let tau_x = if vector_mode {
        Variance::Vector(out.var_scaled.iter().map(|&v| floor(v)).collect())
    } else {
        Variance::Scalar(floor(out.var_scalar))
    };
    let x = CVector::from_vec(out.mean);
    let diverged = !all_finite(&x) || !tau_x.is_finite();
    Ok(SolverState { x, s_prev: scratch.s.clone(), tau_x, t: state.t + 1, diverged })
}

/// One iteration of vector-stepsize AMP.
pub fn vector_amp_step(state: &SolverState, model: &LinearModel, prior: &Prior) -> Result<(SolverState, StepScratch)> {
    let (m, n) = (model.rows(), model.cols());
    check_state(state, m, n)?;
    check_prior(prior, n)?;
    let tau_x = match &state.tau_x {
        Variance::Vector(v) if v.len() == n => v,
        _ => return Err(Error::invalid("vector AMP needs a per-element tau_x of length N")),
    };
    let a = model.a();
    let abs_sq = model.abs_sq();
    let sigma2 = model.sigma2();

    // 1. τ_p = |A|² τ_x
    let tau_p: Vec<f64> = (abs_sq * nalgebra::DVector::from_column_slice(tau_x)).iter().copied().collect();
    // 2. p = A x − τ_p · s^{t-1}
    let mut p = a * &state.x;
    for i in 0..m {
        p[i] -= state.s_prev[i] * tau_p[i];
    }
    // 3. τ_s = 1 ./ (τ_p + σ²)
    let tau_s: Vec<f64> = tau_p.iter().map(|&t| floor(1.0 / (t + sigma2))).collect();
    // 4. s = τ_s · (y − p)
    let s = CVector::from_iterator(m, (0..m).map(|i| (model.y()[i] - p[i]) * tau_s[i]));
    // 5. 1 ./ τ_q = |A^H|² τ_s
    let inv_tau_q = abs_sq.tr_mul(&nalgebra::DVector::from_column_slice(&tau_s));
    let tau_q: Vec<f64> = inv_tau_q.iter().map(|&w| if w > 0.0 { floor(1.0 / w) } else { f64::INFINITY }).collect();
    // 6. q = x + τ_q · A^H s
    let ahs = a.ad_mul(&s);
    let q = CVector::from_iterator(
        n,
        (0..n).map(|j| if tau_q[j].is_infinite() { state.x[j] } else { state.x[j] + ahs[j] * tau_q[j] }),
    );
    let scratch = StepScratch { tau_p, p, tau_s, s, tau_q: Variance::Vector(tau_q), q };
    let next = finish_step(state, &scratch, prior, model.field(), true)?;
    Ok((next, scratch))
}

/// One iteration of scalar-stepsize AMP.
pub fn scalar_amp_step(state: &SolverState, model: &LinearModel, prior: &Prior) -> Result<(SolverState, StepScratch)> {
    let (m, n) = (model.rows(), model.cols());
    check_state(state, m, n)?;
    check_prior(prior, n)?;
    let tau_x = match state.tau_x {
        Variance::Scalar(v) => v,
        Variance::Vector(_) => return Err(Error::invalid("scalar AMP needs a scalar tau_x")),
    };
    let fro = model.frobenius_sq();
    let sigma2 = model.sigma2();

    // 1. τ_p = (1/M) ‖A‖_F² τ_x
    let tau_p = fro / m as f64 * tau_x;
    // 2. p = A x − τ_p s^{t-1}
    let p = model.a() * &state.x - &state.s_prev * C64::new(tau_p, 0.0);
    // 3. τ_s = 1 / (τ_p + σ²)
    let tau_s = floor(1.0 / (tau_p + sigma2));
    // 4. s = τ_s (y − p)
    let s = (model.y() - &p) * C64::new(tau_s, 0.0);
    // 5. 1/τ_q = (1/N) ‖A‖_F² τ_s
    let inv = fro / n as f64 * tau_s;
    let tau_q = if inv > 0.0 { floor(1.0 / inv) } else { f64::INFINITY };
    // 6. q = x + τ_q A^H s
    let q = if tau_q.is_infinite() { state.x.clone() } else { &state.x + model.a().ad_mul(&s) * C64::new(tau_q, 0.0) };
    let scratch = StepScratch { tau_p: vec![tau_p; m], p, tau_s: vec![tau_s; m], s, tau_q: Variance::Scalar(tau_q), q };
    let next = finish_step(state, &scratch, prior, model.field(), false)?;
    Ok((next, scratch))
}

/// One iteration of UT-AMP on the transformed model.
pub fn ut_amp_step(
    state: &SolverState,
    tmodel: &TransformedModel,
    prior: &Prior,
) -> Result<(SolverState, StepScratch)> {
    let (m, n) = (tmodel.rows(), tmodel.cols());
    check_state(state, m, n)?;
    check_prior(prior, n)?;
    let tau_x = match state.tau_x {
        Variance::Scalar(v) => v,
        Variance::Vector(_) => return Err(Error::invalid("UT-AMP needs a scalar tau_x")),
    };
    let sigma2 = tmodel.sigma2();

    // 1. τ_p = τ_x λ_p
    let tau_p: Vec<f64> = tmodel.lambda_p().iter().map(|&l| tau_x * l).collect();
    // 2. p = Λ V x − τ_p · s^{t-1}
    let mut p = tmodel.forward(&state.x);
    for i in 0..m {
        p[i] -= state.s_prev[i] * tau_p[i];
    }
    // 3. τ_s = 1 ./ (τ_p + σ²)
    let tau_s: Vec<f64> = tau_p.iter().map(|&t| floor(1.0 / (t + sigma2))).collect();
    // 4. s = τ_s · (r − p)
    let s = CVector::from_iterator(m, (0..m).map(|i| (tmodel.r()[i] - p[i]) * tau_s[i]));
    // 5. 1/τ_q = (1/N) λ_s^H τ_s, over the min(M, N) paired entries
    let inv: f64 = tmodel.lambda_s().iter().zip(&tau_s).map(|(l, t)| l * t).sum::<f64>() / n as f64;
    let tau_q = if inv > 0.0 { floor(1.0 / inv) } else { f64::INFINITY };
    // 6. q = x + τ_q V^H Λ^H s
    let q = if tau_q.is_infinite() { state.x.clone() } else { &state.x + tmodel.adjoint(&s) * C64::new(tau_q, 0.0) };
    let scratch = StepScratch { tau_p, p, tau_s, s, tau_q: Variance::Scalar(tau_q), q };
    let next = finish_step(state, &scratch, prior, tmodel.field(), false)?;
    Ok((next, scratch))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub max_iters: usize,
    /// Stop once `‖x^t − x^{t−1}‖ / ‖x^t‖ ≤ x_tol`.
    pub x_tol: f64,
    /// `‖x‖₂` above this flags divergence.
    pub divergence_norm: f64,
    /// Replaces the default prior-statistics start when set.
    pub init: Option<SolverState>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { max_iters: 1000, x_tol: 1e-10, divergence_norm: 1e12, init: None }
    }
}

impl RunOptions {
    fn validate(&self) -> Result<()> {
        if !(self.x_tol > 0.0) {
            return Err(Error::InvalidOptions(format!("x_tol must be positive, got {}", self.x_tol)));
        }
        if !(self.divergence_norm > 0.0) {
            return Err(Error::InvalidOptions("divergence_norm must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIters,
    Diverged,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIters => "max_iters",
            Status::Diverged => "diverged",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub tau_x: f64,
    /// `None` on the initial record.
    pub tau_q: Option<f64>,
    /// `‖y − A x^t‖₂`.
    pub residual: f64,
    pub rel_change: Option<f64>,
    /// `‖x^t − x_true‖² / N` when the truth is known.
    pub mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub status: Status,
}

pub const CSV_HEADER: &str = "t,tau_x,tau_q,residual,rel_change,mse,status";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn tau_x_sequence(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.tau_x).collect()
    }

    /// CSV with columns `t,tau_x,tau_q,residual,rel_change,mse,status`; the
    /// status column is filled on the final row only.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        let last = self.records.len().saturating_sub(1);
        for (i, r) in self.records.iter().enumerate() {
            writeln!(
                w,
                "{},{:e},{},{:e},{},{},{}",
                r.t,
                r.tau_x,
                fmt_opt(r.tau_q),
                r.residual,
                fmt_opt(r.rel_change),
                fmt_opt(r.mse),
                if i == last { self.status.as_str() } else { "" }
            )?;
        }
        Ok(())
    }
}

enum Prepared<'a> {
    Direct(&'a LinearModel),
    Transformed(TransformedModel),
}

impl Prepared<'_> {
    fn residual(&self, model: &LinearModel, x: &CVector) -> f64 {
        match self {
            Prepared::Direct(_) => (model.y() - model.a() * x).norm(),
            // U is square unitary, so ‖r − ΛVx‖ = ‖y − Ax‖
            Prepared::Transformed(t) => (t.r() - t.forward(x)).norm(),
        }
    }
}

fn mse(model: &LinearModel, x: &CVector) -> Option<f64> {
    model.x_true().map(|xt| (x - xt).norm_squared() / x.len() as f64)
}

/// Runs `algorithm` to termination, calling `observe` on every state
/// (including the initial one).
pub fn run_observed<F>(
    algorithm: Algorithm,
    model: &LinearModel,
    fact: Option<&Factorization>,
    prior: &Prior,
    options: &RunOptions,
    mut observe: F,
) -> Result<(SolverState, Trace)>
where
    F: FnMut(&SolverState, Option<&StepScratch>),
{
    options.validate()?;
    let (m, n) = (model.rows(), model.cols());
    check_prior(prior, n)?;
    let prepared = match algorithm {
        Algorithm::UtAmp => {
            let fact = fact.ok_or_else(|| Error::InvalidOptions("UT-AMP requires a factorization".into()))?;
            Prepared::Transformed(unitary_transform(model, fact)?)
        }
        _ => Prepared::Direct(model),
    };
    let mut state = match &options.init {
        Some(s) => {
            check_state(s, m, n)?;
            s.clone()
        }
        None => SolverState::initial(algorithm, prior, m, n),
    };
    observe(&state, None);
    let mut records = vec![TraceRecord {
        t: state.t,
        tau_x: state.tau_x.summary(),
        tau_q: None,
        residual: prepared.residual(model, &state.x),
        rel_change: None,
        mse: mse(model, &state.x),
    }];
    let mut status = Status::MaxIters;
    for _ in 0..options.max_iters {
        let (next, scratch) = match &prepared {
            Prepared::Direct(model) => match algorithm {
                Algorithm::AmpVector => vector_amp_step(&state, model, prior)?,
                _ => scalar_amp_step(&state, model, prior)?,
            },
            Prepared::Transformed(t) => ut_amp_step(&state, t, prior)?,
        };
        let x_norm = next.x.norm();
        let delta = (&next.x - &state.x).norm();
        let rel_change = if x_norm > 0.0 { delta / x_norm } else { delta };
        let diverged = next.diverged || !x_norm.is_finite() || x_norm > options.divergence_norm;
        records.push(TraceRecord {
            t: next.t,
            tau_x: next.tau_x.summary(),
            tau_q: Some(scratch.tau_q.summary()),
            residual: prepared.residual(model, &next.x),
            rel_change: Some(rel_change),
            mse: mse(model, &next.x),
        });
        observe(&next, Some(&scratch));
        state = next;
        if diverged {
            state.diverged = true;
            status = Status::Diverged;
            break;
        }
        if rel_change <= options.x_tol {
            status = Status::Converged;
            break;
        }
    }
    Ok((state, Trace { records, status }))
}

/// Runs `algorithm`; UT-AMP needs `fact`, the AMP variants ignore it.
pub fn run(
    algorithm: Algorithm,
    model: &LinearModel,
    fact: Option<&Factorization>,
    prior: &Prior,
    options: &RunOptions,
) -> Result<(SolverState, Trace)> {
    run_observed(algorithm, model, fact, prior, options, |_, _| {})
}

/// Relative change helper shared with the harness.
pub fn relative_distance(x: &[C64], reference: &[C64]) -> f64 {
    let diff: Vec<C64> = x.iter().zip(reference).map(|(a, b)| a - b).collect();
    let r = norm2(reference);
    if r > 0.0 {
        norm2(&diff) / r
    } else {
        norm2(&diff)
    }
}
