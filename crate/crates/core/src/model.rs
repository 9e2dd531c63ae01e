//! Linear model, unitary factorizations `A = U Λ V` and the transformed model.
//!
//! `Λ` is never stored as a dense `M x N` matrix: only its diagonal `lambda`
//! (length `min(M, N)`) is kept, and all products with it are elementwise.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};

use crate::{CMatrix, CVector, Error, Result, C64};

/// Relative Frobenius tolerance a factorization must reconstruct `A` to.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Whether a model carries only real data. Real models keep their imaginary
/// parts exactly zero and use the real-valued scalar channel in denoisers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn of(values: impl IntoIterator<Item = C64>) -> Field {
        if values.into_iter().all(|z| z.im == 0.0) {
            Field::Real
        } else {
            Field::Complex
        }
    }

    pub fn join(self, other: Field) -> Field {
        if self == Field::Real && other == Field::Real {
            Field::Real
        } else {
            Field::Complex
        }
    }
}

/// Observed system `y = A x + n` with `n ~ N(0, sigma2 I)`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    a: CMatrix,
    y: CVector,
    sigma2: f64,
    x_true: Option<CVector>,
    field: Field,
    frobenius_sq: f64,
    abs_sq: OnceLock<DMatrix<f64>>,
}

impl LinearModel {
    pub fn new(a: CMatrix, y: CVector, sigma2: f64) -> Result<Self> {
        let (m, n) = a.shape();
        if m == 0 || n == 0 {
            return Err(Error::invalid(format!("matrix must be non-empty, got {m}x{n}")));
        }
        if y.len() != m {
            return Err(Error::dims(format!("y has length {}, A has {m} rows", y.len())));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::invalid(format!("sigma2 must be positive and finite, got {sigma2}")));
        }
        if a.iter().chain(y.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("A and y must be finite"));
        }
        let field = Field::of(a.iter().copied()).join(Field::of(y.iter().copied()));
        let frobenius_sq = a.iter().map(|z| z.norm_sqr()).sum();
        Ok(LinearModel { a, y, sigma2, x_true: None, field, frobenius_sq, abs_sq: OnceLock::new() })
    }

    /// Attaches the ground truth used for MSE reporting.
    pub fn with_truth(mut self, x_true: CVector) -> Result<Self> {
        if x_true.len() != self.cols() {
            return Err(Error::dims(format!("x_true has length {}, A has {} columns", x_true.len(), self.cols())));
        }
        self.x_true = Some(x_true);
        Ok(self)
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn y(&self) -> &CVector {
        &self.y
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn x_true(&self) -> Option<&CVector> {
        self.x_true.as_ref()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    /// `‖A‖_F²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.frobenius_sq
    }

    /// Elementwise `|A|²`, computed on first use and cached.
    pub fn abs_sq(&self) -> &DMatrix<f64> {
        self.abs_sq.get_or_init(|| self.a.map(|z| z.norm_sqr()))
    }
}

/// A unitary operator, stored densely or applied through the FFT.
#[derive(Clone)]
pub enum Unitary {
    Dense(CMatrix),
    /// The normalized DFT matrix `F`, `F[k, j] = e^{-2πijk/n} / √n`.
    Dft(DftPlan),
    /// `F^H`, the normalized inverse DFT.
    InverseDft(DftPlan),
}

#[derive(Clone)]
pub struct DftPlan {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl DftPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        DftPlan { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward DFT: `out[k] = Σ_j v[j] e^{-2πijk/n}`.
    pub fn forward_raw(&self, v: &[C64]) -> Vec<C64> {
        let mut buf = v.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    fn transform(&self, v: &CVector, inverse: bool) -> CVector {
        let mut buf: Vec<C64> = v.iter().copied().collect();
        if inverse {
            self.inverse.process(&mut buf);
        } else {
            self.forward.process(&mut buf);
        }
        let scale = 1.0 / (self.n as f64).sqrt();
        CVector::from_iterator(self.n, buf.into_iter().map(|z| z * scale))
    }
}

impl fmt::Debug for DftPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DftPlan").field("n", &self.n).finish()
    }
}

impl fmt::Debug for Unitary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unitary::Dense(m) => write!(f, "Unitary::Dense({}x{})", m.nrows(), m.ncols()),
            Unitary::Dft(p) => write!(f, "Unitary::Dft({})", p.n),
            Unitary::InverseDft(p) => write!(f, "Unitary::InverseDft({})", p.n),
        }
    }
}

impl Unitary {
    pub fn dim(&self) -> usize {
        match self {
            Unitary::Dense(m) => m.nrows(),
            Unitary::Dft(p) | Unitary::InverseDft(p) => p.n,
        }
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        match self {
            Unitary::Dense(m) => m * v,
            Unitary::Dft(p) => p.transform(v, false),
            Unitary::InverseDft(p) => p.transform(v, true),
        }
    }

    pub fn apply_adjoint(&self, v: &CVector) -> CVector {
        match self {
            Unitary::Dense(m) => m.ad_mul(v),
            Unitary::Dft(p) => p.transform(v, true),
            Unitary::InverseDft(p) => p.transform(v, false),
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            Unitary::Dense(m) => m.clone(),
            _ => {
                let n = self.dim();
                let mut out = CMatrix::zeros(n, n);
                for j in 0..n {
                    let mut e = CVector::zeros(n);
                    e[j] = C64::new(1.0, 0.0);
                    out.set_column(j, &self.apply(&e));
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorizationKind {
    Svd,
    Dft,
}

impl fmt::Display for FactorizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FactorizationKind::Svd => "svd",
            FactorizationKind::Dft => "dft",
        })
    }
}

/// `A = U Λ V` with `U` (`M x M`) and `V` (`N x N`) unitary and `Λ` rectangular
/// diagonal. Note `V` is the conjugate transpose of the conventional
/// right-singular matrix.
#[derive(Debug, Clone)]
pub struct Factorization {
    u: Unitary,
    lambda: Vec<C64>,
    v: Unitary,
    kind: FactorizationKind,
    rows: usize,
    cols: usize,
}

impl Factorization {
    pub fn u(&self) -> &Unitary {
        &self.u
    }

    pub fn v(&self) -> &Unitary {
        &self.v
    }

    /// Diagonal of `Λ`, length `min(M, N)`.
    pub fn lambda(&self) -> &[C64] {
        &self.lambda
    }

    pub fn kind(&self) -> FactorizationKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Returns the same factorization with `lambda` permuted; the matching rows
    /// of `V` and columns of `U` are permuted along with it so that `U Λ V` is
    /// unchanged. Only dense factors can be permuted.
    pub fn permuted(&self, perm: &[usize]) -> Result<Factorization> {
        let k = self.lambda.len();
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::invalid("permutation must reorder 0..min(M, N)"));
        }
        let u = self.u.to_dense();
        let v = self.v.to_dense();
        let mut u2 = u.clone();
        let mut v2 = v.clone();
        for (dst, &src) in perm.iter().enumerate() {
            u2.set_column(dst, &u.column(src));
            v2.set_row(dst, &v.row(src));
        }
        Ok(Factorization {
            u: Unitary::Dense(u2),
            lambda: perm.iter().map(|&p| self.lambda[p]).collect(),
            v: Unitary::Dense(v2),
            kind: self.kind,
            rows: self.rows,
            cols: self.cols,
        })
    }

    /// `Λ v` for `v` of length `N`, result of length `M`.
    pub fn lambda_mul(&self, v: &CVector) -> CVector {
        lambda_mul(&self.lambda, self.rows, v)
    }

    /// Dense `U Λ V`.
    pub fn reconstruct(&self) -> CMatrix {
        let u = self.u.to_dense();
        let v = self.v.to_dense();
        let mut lv = CMatrix::zeros(self.rows, self.cols);
        for (i, l) in self.lambda.iter().enumerate() {
            lv.set_row(i, &(v.row(i) * *l));
        }
        u * lv
    }

    /// `‖U Λ V − A‖_F / ‖A‖_F` (absolute when `A = 0`).
    pub fn reconstruction_error(&self, a: &CMatrix) -> f64 {
        let diff = (self.reconstruct() - a).norm();
        let scale = a.norm();
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }
}

pub(crate) fn lambda_mul(lambda: &[C64], rows: usize, v: &CVector) -> CVector {
    let mut out = CVector::zeros(rows);
    for (i, l) in lambda.iter().enumerate() {
        out[i] = l * v[i];
    }
    out
}

pub(crate) fn lambda_adjoint_mul(lambda: &[C64], cols: usize, s: &CVector) -> CVector {
    let mut out = CVector::zeros(cols);
    for (i, l) in lambda.iter().enumerate() {
        out[i] = l.conj() * s[i];
    }
    out
}

/// Dense SVD in the `A = U Λ V` convention, `lambda` sorted descending.
///
/// Real input takes a real-valued SVD so that `U` and `V` stay real.
pub fn svd_factorize(a: &CMatrix) -> Result<Factorization> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::invalid("cannot factorize an empty matrix"));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::FactorizationFailed("matrix has non-finite entries".into()));
    }
    let failed = |e| Error::FactorizationFailed(format!("SVD did not converge: {e:?}"));
    let k = m.min(n);
    // faer returns A = U S W^H; the V here is W^H
    let (s, u, v) = if Field::of(a.iter().copied()) == Field::Real {
        let svd = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)].re).svd().map_err(failed)?;
        let (fu, fw, fs) = (svd.U(), svd.V(), svd.S().column_vector());
        (
            (0..k).map(|i| fs[i]).collect::<Vec<_>>(),
            CMatrix::from_fn(m, m, |i, j| C64::new(fu[(i, j)], 0.0)),
            CMatrix::from_fn(n, n, |i, j| C64::new(fw[(j, i)], 0.0)),
        )
    } else {
        let svd = faer::Mat::<C64>::from_fn(m, n, |i, j| a[(i, j)]).svd().map_err(failed)?;
        let (fu, fw, fs) = (svd.U(), svd.V(), svd.S().column_vector());
        (
            (0..k).map(|i| fs[i].re).collect::<Vec<_>>(),
            CMatrix::from_fn(m, m, |i, j| fu[(i, j)]),
            CMatrix::from_fn(n, n, |i, j| fw[(j, i)].conj()),
        )
    };
    let fact = Factorization {
        u: Unitary::Dense(u),
        lambda: s.into_iter().map(|x| C64::new(x, 0.0)).collect(),
        v: Unitary::Dense(v),
        kind: FactorizationKind::Svd,
        rows: m,
        cols: n,
    };
    let err = fact.reconstruction_error(a);
    if !(err <= RECONSTRUCTION_TOL) {
        return Err(Error::FactorizationFailed(format!("reconstruction error {err:e} exceeds {RECONSTRUCTION_TOL:e}")));
    }
    Ok(fact)
}

/// Circulant matrix whose first column is `c`: `A[j, k] = c[(j - k) mod n]`.
pub fn circulant_matrix(c: &[C64]) -> CMatrix {
    let n = c.len();
    CMatrix::from_fn(n, n, |j, k| c[(j + n - k) % n])
}

/// `A = F^H Diag(λ) F` for the circulant matrix with first column `c`, where
/// `λ` is the unnormalized DFT of `c`. Products with `U` and `V` use the FFT.
pub fn circulant_factorize(first_column: &[C64]) -> Result<Factorization> {
    let n = first_column.len();
    if n == 0 {
        return Err(Error::invalid("circulant first column must be non-empty"));
    }
    if first_column.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("circulant first column must be finite"));
    }
    let plan = DftPlan::new(n);
    let lambda = plan.forward_raw(first_column);
    Ok(Factorization {
        u: Unitary::InverseDft(plan.clone()),
        lambda,
        v: Unitary::Dft(plan),
        kind: FactorizationKind::Dft,
        rows: n,
        cols: n,
    })
}

/// Model after the unitary transformation `r = U^H y = Λ V x + w`.
#[derive(Debug, Clone)]
pub struct TransformedModel {
    r: CVector,
    lambda: Vec<C64>,
    v: Unitary,
    sigma2: f64,
    lambda_p: Vec<f64>,
    lambda_s: Vec<f64>,
    field: Field,
}

impl TransformedModel {
    pub fn r(&self) -> &CVector {
        &self.r
    }

    pub fn lambda(&self) -> &[C64] {
        &self.lambda
    }

    pub fn v(&self) -> &Unitary {
        &self.v
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `Λ Λ^H 1`, length `M`.
    pub fn lambda_p(&self) -> &[f64] {
        &self.lambda_p
    }

    /// `Λ^H Λ 1`, length `N`.
    pub fn lambda_s(&self) -> &[f64] {
        &self.lambda_s
    }

    /// Field of the original model; the denoiser channel follows it.
    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.lambda_p.len()
    }

    pub fn cols(&self) -> usize {
        self.lambda_s.len()
    }

    /// `Λ V x`.
    pub fn forward(&self, x: &CVector) -> CVector {
        lambda_mul(&self.lambda, self.rows(), &self.v.apply(x))
    }

    /// `V^H Λ^H s`.
    pub fn adjoint(&self, s: &CVector) -> CVector {
        self.v.apply_adjoint(&lambda_adjoint_mul(&self.lambda, self.cols(), s))
    }
}

pub fn unitary_transform(model: &LinearModel, fact: &Factorization) -> Result<TransformedModel> {
    let (m, n) = (model.rows(), model.cols());
    if fact.rows() != m || fact.cols() != n {
        return Err(Error::dims(format!("factorization is {}x{}, model is {m}x{n}", fact.rows(), fact.cols())));
    }
    let err = fact.reconstruction_error(model.a());
    if !(err <= RECONSTRUCTION_TOL) {
        return Err(Error::invalid(format!("factorization does not reconstruct A (relative error {err:e})")));
    }
    let mut lambda_p = vec![0.0; m];
    let mut lambda_s = vec![0.0; n];
    for (i, l) in fact.lambda().iter().enumerate() {
        lambda_p[i] = l.norm_sqr();
        lambda_s[i] = l.norm_sqr();
    }
    Ok(TransformedModel {
        r: fact.u().apply_adjoint(model.y()),
        lambda: fact.lambda().to_vec(),
        v: fact.v().clone(),
        sigma2: model.sigma2(),
        lambda_p,
        lambda_s,
        field: model.field(),
    })
}

/// `|C|² d`, i.e. the diagonal of `C Diag(d) C^H`.
pub fn scaled_gram_diagonal(c: &CMatrix, d: &[f64]) -> Result<Vec<f64>> {
    if c.ncols() != d.len() {
        return Err(Error::dims(format!("C has {} columns, d has length {}", c.ncols(), d.len())));
    }
    Ok(c.row_iter().map(|row| row.iter().zip(d).map(|(z, w)| z.norm_sqr() * w).sum()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn assert_unitary(u: &Unitary) {
        let d = u.to_dense();
        let n = d.nrows();
        assert!(max_abs(&(d.adjoint() * &d - CMatrix::identity(n, n))) <= 1e-10);
        assert!(max_abs(&(&d * d.adjoint() - CMatrix::identity(n, n))) <= 1e-10);
    }

    fn lcg_matrix(m: usize, n: usize, seed: u64, complex: bool) -> CMatrix {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMatrix::from_fn(m, n, |_, _| {
            let re = next();
            let im = if complex { next() } else { 0.0 };
            C64::new(re, im)
        })
    }

    #[test]
    fn identity_svd() {
        let a = CMatrix::identity(3, 3);
        let f = svd_factorize(&a).unwrap();
        assert_eq!(f.kind(), FactorizationKind::Svd);
        for l in f.lambda() {
            assert!((l - c(1.0)).norm() < 1e-14);
        }
        assert!(f.reconstruction_error(&a) < 1e-14);
    }

    #[test]
    fn diagonal_svd_sorted() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(2.0), c(3.0)]));
        let f = svd_factorize(&a).unwrap();
        assert!((f.lambda()[0] - c(3.0)).norm() < 1e-14);
        assert!((f.lambda()[1] - c(2.0)).norm() < 1e-14);
    }

    #[test]
    fn rectangular_svd_tall_and_fat() {
        for &(m, n, cplx) in &[(5, 3, false), (3, 5, false), (5, 3, true), (3, 5, true), (6, 6, true)] {
            let a = lcg_matrix(m, n, (m * 10 + n) as u64 + cplx as u64, cplx);
            let f = svd_factorize(&a).unwrap();
            assert_eq!(f.lambda().len(), m.min(n));
            assert!(f.reconstruction_error(&a) <= 1e-10, "{m}x{n}");
            assert_unitary(f.u());
            assert_unitary(f.v());
            for w in f.lambda().windows(2) {
                assert!(w[0].re >= w[1].re);
                assert_eq!(w[0].im, 0.0);
            }
        }
    }

    #[test]
    fn rank_deficient_svd_completes_basis() {
        // rank one 4x3
        let u = lcg_matrix(4, 1, 3, false);
        let v = lcg_matrix(1, 3, 4, false);
        let a = &u * &v;
        let f = svd_factorize(&a).unwrap();
        assert!(f.reconstruction_error(&a) <= 1e-10);
        assert_unitary(f.u());
        assert_unitary(f.v());
        assert!(f.lambda()[1].norm() < 1e-12);
    }

    #[test]
    fn zero_matrix_factorizes() {
        let a = CMatrix::zeros(3, 2);
        let f = svd_factorize(&a).unwrap();
        assert!(f.lambda().iter().all(|l| l.norm() == 0.0));
        assert_unitary(f.u());
        assert_unitary(f.v());
    }

    #[test]
    fn non_finite_matrix_rejected() {
        let mut a = CMatrix::identity(2, 2);
        a[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(svd_factorize(&a), Err(Error::FactorizationFailed(_))));
    }

    #[test]
    fn circulant_impulse_and_shift() {
        let f = circulant_factorize(&[c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap();
        for l in f.lambda() {
            assert!((l - c(1.0)).norm() < 1e-15);
        }
        let f = circulant_factorize(&[c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        for l in f.lambda() {
            assert!((l.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn svd_with_repeated_and_zero_singular_values() {
        let a = circulant_matrix(&[c(2.0), c(1.0), c(0.0), c(1.0)]);
        let f = svd_factorize(&a).unwrap();
        for (l, want) in f.lambda().iter().zip([4.0, 2.0, 2.0, 0.0]) {
            assert!((l.re - want).abs() < 1e-12, "{l}");
        }
        assert!(f.reconstruction_error(&a) < 1e-14);
    }

    #[test]
    fn svd_of_rank_deficient_and_circulant_ensembles() {
        use crate::ensemble::{generate_matrix, EnsembleKind, EnsembleSpec};
        for (kind, m, n, seed) in [(EnsembleKind::RankDeficient, 12, 10, 1927), (EnsembleKind::Circulant, 12, 12, 27)] {
            let a = generate_matrix(&EnsembleSpec::new(kind, m, n, seed)).unwrap();
            assert!(svd_factorize(&a).unwrap().reconstruction_error(&a) < 1e-13);
        }
    }

    #[test]
    fn circulant_symmetric_taps() {
        // λ_k = 2 + e^{-iπk/2} + e^{-3iπk/2} = 2 + 2cos(πk/2)
        let taps = [c(2.0), c(1.0), c(0.0), c(1.0)];
        let f = circulant_factorize(&taps).unwrap();
        for (l, want) in f.lambda().iter().zip([4.0, 2.0, 0.0, 2.0]) {
            assert!((l - c(want)).norm() < 1e-14);
        }
        assert!(f.reconstruction_error(&circulant_matrix(&taps)) < 1e-14);
        assert_unitary(f.u());
        assert_unitary(f.v());
    }

    #[test]
    fn circulant_spectrum_matches_svd() {
        let taps: Vec<C64> = (0..7).map(|k| C64::new((k as f64).sin(), (k as f64 * 0.3).cos())).collect();
        let a = circulant_matrix(&taps);
        let fd = circulant_factorize(&taps).unwrap();
        let fs = svd_factorize(&a).unwrap();
        let mut d: Vec<f64> = fd.lambda().iter().map(|l| l.norm_sqr()).collect();
        d.sort_by(|x, y| y.total_cmp(x));
        let scale = a.norm_squared();
        for (x, l) in d.iter().zip(fs.lambda()) {
            assert!((x - l.norm_sqr()).abs() <= 1e-8 * scale);
        }
        assert!(fd.reconstruction_error(&a) <= 1e-10);
    }

    #[test]
    fn empty_circulant_rejected() {
        assert!(circulant_factorize(&[]).is_err());
    }

    #[test]
    fn transform_identity_is_noop() {
        let a = CMatrix::identity(3, 3);
        let y = CVector::from_vec(vec![c(1.0), C64::new(2.0, -1.0), c(-3.0)]);
        let model = LinearModel::new(a.clone(), y.clone(), 0.5).unwrap();
        let f = svd_factorize(&a).unwrap();
        let t = unitary_transform(&model, &f).unwrap();
        assert!((t.r() - &y).norm() < 1e-14);
    }

    #[test]
    fn transform_tall_model_vectors() {
        let a = lcg_matrix(5, 3, 11, false);
        let y = lcg_matrix(5, 1, 12, false).column(0).into_owned();
        let model = LinearModel::new(a.clone(), y.clone(), 0.1).unwrap();
        let f = svd_factorize(&a).unwrap();
        let t = unitary_transform(&model, &f).unwrap();
        assert!((t.r().norm() - y.norm()).abs() <= 1e-12);
        assert_eq!(t.lambda_p().len(), 5);
        assert_eq!(t.lambda_s().len(), 3);
        assert_eq!(&t.lambda_p()[3..], &[0.0, 0.0]);
        let sp: f64 = t.lambda_p().iter().sum();
        let ss: f64 = t.lambda_s().iter().sum();
        assert!((sp - ss).abs() < 1e-14);
        // direct ΛΛ^H 1
        for (i, l) in f.lambda().iter().enumerate() {
            assert_eq!(t.lambda_p()[i], l.norm_sqr());
        }
    }

    #[test]
    fn transform_rejects_mismatched_factorization() {
        let a = lcg_matrix(4, 4, 1, false);
        let b = lcg_matrix(4, 4, 2, false);
        let model = LinearModel::new(a, CVector::zeros(4), 1.0).unwrap();
        let f = svd_factorize(&b).unwrap();
        assert!(matches!(unitary_transform(&model, &f), Err(Error::InvalidInput(_))));
        let f = svd_factorize(&lcg_matrix(3, 4, 1, false)).unwrap();
        assert!(matches!(unitary_transform(&model, &f), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn model_validation() {
        let a = CMatrix::identity(2, 2);
        assert!(LinearModel::new(a.clone(), CVector::zeros(3), 1.0).is_err());
        assert!(LinearModel::new(a.clone(), CVector::zeros(2), 0.0).is_err());
        assert!(LinearModel::new(CMatrix::zeros(0, 2), CVector::zeros(0), 1.0).is_err());
        let m = LinearModel::new(a, CVector::zeros(2), 1.0).unwrap();
        assert_eq!(m.field(), Field::Real);
        assert!(m.with_truth(CVector::zeros(3)).is_err());
    }

    #[test]
    fn gram_diagonal_small_cases() {
        let id = CMatrix::identity(2, 2);
        assert_eq!(scaled_gram_diagonal(&id, &[2.0, 5.0]).unwrap(), vec![2.0, 5.0]);
        let row = CMatrix::from_row_slice(1, 2, &[c(1.0), c(1.0)]);
        assert_eq!(scaled_gram_diagonal(&row, &[1.0, 1.0]).unwrap(), vec![2.0]);
        assert!(scaled_gram_diagonal(&row, &[1.0]).is_err());
    }

    #[test]
    fn permuted_factorization_reconstructs() {
        let a = lcg_matrix(4, 3, 9, true);
        let f = svd_factorize(&a).unwrap();
        let p = f.permuted(&[2, 0, 1]).unwrap();
        assert!(p.reconstruction_error(&a) <= 1e-10);
        assert_eq!(p.lambda()[0], f.lambda()[2]);
        assert!(f.permuted(&[0, 0, 1]).is_err());
    }
}
