//! Ridge least squares with an intercept.
//!
//! Solves `(AᵀA + εI) w = Aᵀy` where `A = [X | 1]`, penalizing the intercept
//! along with the other coefficients. For `ε > 0` the system is solved as the
//! stacked least-squares problem `[A; √ε I] w ≈ [y; 0]` by Householder QR,
//! which never forms `AᵀA`. For `ε = 0` an SVD gives the minimum-norm solution
//! so exactly collinear designs still yield an answer.

use nalgebra::{DMatrix, DVector};

use crate::error::{MibError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// `‖(AᵀA + εI)w − Aᵀy‖ / ‖Aᵀy‖`.
    pub normal_residual: f64,
}

impl RidgeFit {
    #[inline]
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(x)
            .fold(self.intercept, |acc, (w, v)| acc + w * v)
    }
}

/// `x` is row-major `n x p`.
pub fn ridge_fit(x: &[f64], n: usize, p: usize, y: &[f64], epsilon: f64) -> Result<RidgeFit> {
    if n == 0 {
        return Err(MibError::Empty("least squares needs at least one row".into()));
    }
    MibError::check_dim(n * p, x.len())?;
    MibError::check_dim(n, y.len())?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(MibError::invalid(format!("ridge epsilon {epsilon} must be >= 0")));
    }
    if let Some(pos) = x.iter().chain(y).position(|v| !v.is_finite()) {
        return Err(MibError::NonFinite(format!("least-squares input at flat index {pos}")));
    }
    let q = p + 1;
    let design = DMatrix::from_fn(n, q, |i, j| if j < p { x[i * p + j] } else { 1.0 });
    let target = DVector::from_column_slice(y);

    let w = if epsilon > 0.0 {
        let s = epsilon.sqrt();
        let stacked = DMatrix::from_fn(n + q, q, |i, j| {
            if i < n {
                design[(i, j)]
            } else if i - n == j {
                s
            } else {
                0.0
            }
        });
        let mut rhs = DVector::zeros(n + q);
        rhs.rows_mut(0, n).copy_from(&target);
        let qr = stacked.qr();
        qr.q_tr_mul(&mut rhs);
        let r = qr.r();
        r.solve_upper_triangular(&rhs.rows(0, q).into_owned())
            .ok_or_else(|| MibError::NonFinite("singular triangular factor".into()))?
    } else {
        let svd = design.clone().svd(true, true);
        let tol = f64::EPSILON * (n.max(q) as f64) * svd.singular_values.max();
        svd.solve(&target, tol)
            .map_err(|e| MibError::NonFinite(format!("svd solve failed: {e}")))?
    };
    if w.iter().any(|v| !v.is_finite()) {
        return Err(MibError::NonFinite("least-squares solution".into()));
    }

    let rhs = design.tr_mul(&target);
    let mut gram = design.tr_mul(&design);
    for k in 0..q {
        gram[(k, k)] += epsilon;
    }
    let resid = (&gram * &w - &rhs).norm();
    let scale = rhs.norm();
    let normal_residual = if scale > 0.0 {
        resid / scale
    } else if resid == 0.0 {
        0.0
    } else {
        resid / (gram.norm() * w.norm())
    };

    Ok(RidgeFit {
        weights: w.rows(0, p).iter().copied().collect(),
        intercept: w[p],
        normal_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn exact_line() {
        // y = 2 + 3x
        let x = [0.0, 1.0, 2.0];
        let y = [2.0, 5.0, 8.0];
        let fit = ridge_fit(&x, 3, 1, &y, 0.0).unwrap();
        assert!((fit.intercept - 2.0).abs() < 1e-10);
        assert!((fit.weights[0] - 3.0).abs() < 1e-10);
        assert!(fit.normal_residual < 1e-12);
    }

    #[test]
    fn collinear_design_with_zero_epsilon_is_min_norm() {
        // second column duplicates the intercept
        let x = [1.0, 1.0, 2.0, 1.0, 3.0, 1.0];
        let y = [1.0, 2.0, 3.0];
        let fit = ridge_fit(&x, 3, 2, &y, 0.0).unwrap();
        assert!((fit.weights[0] - 1.0).abs() < 1e-10);
        assert!((fit.weights[1] - fit.intercept).abs() < 1e-10);
        assert!((fit.predict(&[2.0, 1.0]) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn ridge_shrinks_toward_zero() {
        let mut s = Stream::new(1);
        let n = 30;
        let x: Vec<f64> = (0..n * 2).map(|_| s.normal()).collect();
        let y: Vec<f64> = (0..n).map(|i| x[2 * i] - x[2 * i + 1] + 0.5).collect();
        let small = ridge_fit(&x, n, 2, &y, 1e-8).unwrap();
        let big = ridge_fit(&x, n, 2, &y, 100.0).unwrap();
        let norm = |f: &RidgeFit| f.weights.iter().map(|w| w * w).sum::<f64>();
        assert!(norm(&big) < norm(&small));
        assert!(big.normal_residual < 1e-8);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ridge_fit(&[], 0, 1, &[], 0.0), Err(MibError::Empty(_))));
        assert!(matches!(
            ridge_fit(&[f64::NAN], 1, 1, &[1.0], 0.0),
            Err(MibError::NonFinite(_))
        ));
        assert!(ridge_fit(&[1.0], 1, 1, &[1.0], -1.0).is_err());
    }
}
