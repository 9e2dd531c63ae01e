//! Dense LMMSE reference solution for Gaussian priors.
//!
//! Solves `(Diag(1/τ0) + A^H A/σ²) x = A^H y/σ² + Diag(1/τ0) x0` by Cholesky.
//! Used as the oracle for UT-AMP fixed points.

use crate::denoise::GaussianPrior;
use crate::model::LinearModel;
use crate::{CMatrix, CVector, Error, Result, C64};

fn system(model: &LinearModel, prior: &GaussianPrior) -> Result<(CMatrix, CVector)> {
    let n = model.cols();
    if prior.len() != n {
        return Err(Error::dims(format!("prior has length {}, A has {n} columns", prior.len())));
    }
    let s2 = model.sigma2();
    let a = model.a();
    let ah = a.adjoint();
    let mut h = &ah * a / C64::new(s2, 0.0);
    let mut rhs = &ah * model.y() / C64::new(s2, 0.0);
    for i in 0..n {
        let w = 1.0 / prior.tau0()[i];
        h[(i, i)] += w;
        rhs[i] += prior.x0()[i] * w;
    }
    Ok((h, rhs))
}

pub fn lmmse_solve(model: &LinearModel, prior: &GaussianPrior) -> Result<CVector> {
    let (h, rhs) = system(model, prior)?;
    let chol = h
        .cholesky()
        .ok_or_else(|| Error::FactorizationFailed("LMMSE normal matrix is not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

/// `‖H x − b‖ / ‖b‖` for the normal equations above (`‖H x − b‖` if `b = 0`).
pub fn normal_equation_residual(model: &LinearModel, prior: &GaussianPrior, x: &CVector) -> Result<f64> {
    let (h, rhs) = system(model, prior)?;
    if x.len() != rhs.len() {
        return Err(Error::dims(format!("x has length {}, expected {}", x.len(), rhs.len())));
    }
    let r = (&h * x - &rhs).norm();
    let b = rhs.norm();
    Ok(if b > 0.0 { r / b } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_elementwise_posterior() {
        let y = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-2.0, 1.0)]);
        let model = LinearModel::new(CMatrix::identity(2, 2), y.clone(), 0.5).unwrap();
        let prior = GaussianPrior::new(vec![C64::new(0.2, 0.0); 2], vec![2.0, 0.25]).unwrap();
        let x = lmmse_solve(&model, &prior).unwrap();
        for i in 0..2 {
            let t0 = prior.tau0()[i];
            let want = (y[i] / 0.5 + prior.x0()[i] / t0) / (1.0 / 0.5 + 1.0 / t0);
            assert!((x[i] - want).norm() < 1e-14);
        }
        assert!(normal_equation_residual(&model, &prior, &x).unwrap() < 1e-14);
    }

    #[test]
    fn zero_matrix_gives_prior_mean() {
        let model = LinearModel::new(CMatrix::zeros(3, 2), CVector::from_element(3, C64::new(1.0, 0.0)), 1.0).unwrap();
        let prior = GaussianPrior::iid(2, C64::new(0.7, 0.0), 1.0).unwrap();
        let x = lmmse_solve(&model, &prior).unwrap();
        assert!(x.iter().all(|z| (z - C64::new(0.7, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn length_mismatch() {
        let model = LinearModel::new(CMatrix::identity(2, 2), CVector::zeros(2), 1.0).unwrap();
        let prior = GaussianPrior::iid(3, C64::new(0.0, 0.0), 1.0).unwrap();
        assert!(lmmse_solve(&model, &prior).is_err());
    }
}
