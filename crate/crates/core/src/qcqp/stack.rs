//! Real stacking of complex variables.
//!
//! Complex vectors `z_1, …, z_p` are concatenated and stored as
//! `[Re(z); Im(z)]`, so every Hermitian form becomes a symmetric real form on
//! a vector of twice the length.

use nalgebra::{DMatrix, DVector};

use super::QuadraticForm;
use crate::model::{CMatrix, CVector, C64};

pub fn complex_stack(vecs: &[CVector]) -> DVector<f64> {
    let total: usize = vecs.iter().map(|v| v.len()).sum();
    let mut x = DVector::zeros(2 * total);
    let mut pos = 0;
    for v in vecs {
        for z in v.iter() {
            x[pos] = z.re;
            x[total + pos] = z.im;
            pos += 1;
        }
    }
    x
}

/// Inverse of [`complex_stack`] for the given block lengths.
pub fn complex_unstack(x: &DVector<f64>, lengths: &[usize]) -> Vec<CVector> {
    let total: usize = lengths.iter().sum();
    debug_assert_eq!(x.len(), 2 * total);
    let mut pos = 0;
    lengths
        .iter()
        .map(|&len| {
            let v = CVector::from_fn(len, |i, _| C64::new(x[pos + i], x[total + pos + i]));
            pos += len;
            v
        })
        .collect()
}

/// Symmetric `R` with `xᵀ R x = zᴴ H z` for Hermitian `H` and `x = [Re z; Im z]`.
pub fn hermitian_to_real(h: &CMatrix) -> DMatrix<f64> {
    let n = h.nrows();
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = h[(i, j)];
            r[(i, j)] = v.re;
            r[(n + i, n + j)] = v.re;
            r[(i, n + j)] = -v.im;
            r[(n + i, j)] = v.im;
        }
    }
    r
}

/// Orthonormal basis (as columns) of the span of `vectors`, dropping
/// directions whose residual norm is below `rel_tol` times the largest input
/// norm.
pub fn orthonormal_basis(vectors: &[DVector<f64>], dim: usize, rel_tol: f64) -> DMatrix<f64> {
    let largest = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    if largest == 0.0 {
        return DMatrix::zeros(dim, 0);
    }
    for v in vectors {
        let mut r = v.clone();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&r);
                r.axpy(-proj, q, 1.0);
            }
        }
        let norm = r.norm();
        if norm > rel_tol * largest {
            basis.push(r / norm);
        }
        if basis.len() == dim {
            break;
        }
    }
    DMatrix::from_columns(&basis)
}

/// Complex affine function of a real vector, `z(x) = constant + Σ_j coeffs_j x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexAffine {
    pub constant: C64,
    pub coeffs: CVector,
}

impl ComplexAffine {
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn eval(&self, x: &DVector<f64>) -> C64 {
        self.constant
            + self
                .coeffs
                .iter()
                .zip(x.iter())
                .map(|(c, xi)| c * xi)
                .sum::<C64>()
    }

    pub fn real_part(&self) -> DVector<f64> {
        self.coeffs.map(|c| c.re)
    }

    pub fn imag_part(&self) -> DVector<f64> {
        self.coeffs.map(|c| c.im)
    }

    /// Substitutes `x = base + basis · y`.
    pub fn restrict(&self, base: &DVector<f64>, basis: &DMatrix<f64>) -> ComplexAffine {
        let re = basis.tr_mul(&self.real_part());
        let im = basis.tr_mul(&self.imag_part());
        ComplexAffine {
            constant: self.eval(base),
            coeffs: CVector::from_fn(re.len(), |i, _| C64::new(re[i], im[i])),
        }
    }

    /// Adds `weight · |z(x)|²`.
    pub fn add_abs_sq(&self, form: &mut QuadraticForm, weight: f64) {
        let lr = self.real_part();
        let li = self.imag_part();
        form.a.ger(weight, &lr, &lr, 1.0);
        form.a.ger(weight, &li, &li, 1.0);
        form.b.axpy(weight * self.constant.re, &lr, 1.0);
        form.b.axpy(weight * self.constant.im, &li, 1.0);
        form.c += weight * self.constant.norm_sqr();
    }

    /// Adds `weight · Re(coef · z(x))`.
    pub fn add_re_scaled(&self, form: &mut QuadraticForm, coef: C64, weight: f64) {
        // Re(coef·L_j) = coef.re·L_j.re - coef.im·L_j.im; the form carries 2bᵀx
        let half = 0.5 * weight;
        for (b, l) in form.b.iter_mut().zip(self.coeffs.iter()) {
            *b += half * (coef.re * l.re - coef.im * l.im);
        }
        form.c += weight * (coef * self.constant).re;
    }

    /// Adds `weight · (2 Re(conj(z_t) z(x)) - |z_t|²)`, the tangent of `|z|²`
    /// at `z_t = z(x_t)`; it never exceeds `weight · |z(x)|²` for `weight ≥ 0`.
    pub fn add_linearized_abs_sq(&self, form: &mut QuadraticForm, z_t: C64, weight: f64) {
        self.add_re_scaled(form, 2.0 * z_t.conj(), weight);
        form.c -= weight * z_t.norm_sqr();
    }
}
