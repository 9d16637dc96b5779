//! Dense complex matrices and the small amount of spectral machinery the
//! rest of the crate needs: Hermitian eigendecomposition (cyclic Jacobi),
//! singular values, operator norms and span projections.
//!
//! Inner product convention, used everywhere in this crate:
//! `dot(u, v) = Σ u_i * conj(v_i)` (linear in the first argument).

use num_complex::Complex64;
use std::f64::consts::PI;

pub type C64 = Complex64;

pub const C_ZERO: C64 = C64::new(0.0, 0.0);
pub const C_ONE: C64 = C64::new(1.0, 0.0);

/// e_n(k) = exp(2πi k / n), the standard character of Z_n.
pub fn character(n: usize, k: i64) -> C64 {
    let angle = 2.0 * PI * (k as f64) / (n as f64);
    C64::new(angle.cos(), angle.sin())
}

pub fn dot(u: &[C64], v: &[C64]) -> C64 {
    assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm(u: &[C64]) -> f64 {
    u.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![C_ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C_ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_real_rows(rows: Vec<Vec<f64>>) -> Self {
        Mat::from_rows(
            rows.into_iter()
                .map(|row| row.into_iter().map(|x| C64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    /// Rank-one matrix u v^H.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Mat::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: C64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C_ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// Kronecker product; block (i,j) of the result is `self[i,j] * other`.
    pub fn kron(&self, other: &Mat) -> Mat {
        let mut out = Mat::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &Mat) -> Mat {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|a| a.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.matmul(self).max_abs_diff(self) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square()
            && self.adjoint().matmul(self).max_abs_diff(&Mat::identity(self.rows)) <= tol
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest singular value, via the spectrum of A^H A.
    pub fn operator_norm(&self) -> f64 {
        let gram = self.adjoint().matmul(self);
        let (eigs, _) = hermitian_eigen(&gram);
        eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let gram = if self.rows >= self.cols {
            self.adjoint().matmul(self)
        } else {
            self.matmul(&self.adjoint())
        };
        let (eigs, _) = hermitian_eigen(&gram);
        let mut svs: Vec<f64> = eigs.into_iter().map(|x| x.max(0.0).sqrt()).collect();
        svs.reverse();
        svs
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and a unitary whose columns are
/// the matching eigenvectors, so `A = V diag(λ) V^H`.
pub fn hermitian_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    assert!(a.is_square(), "eigendecomposition needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Mat::identity(n);
    let scale = m.max_abs().max(1e-300);
    let tol = 1e-15 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.norm() <= tol * 1e-2 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // Unitary 2x2 rotation J = [[c, s], [-s̄, c]] zeroing m[p][q].
                let abs = apq.norm();
                let phase = apq / abs;
                let theta = 0.5 * (2.0 * abs).atan2(app - aqq);
                let c = theta.cos();
                let s = phase * theta.sin();
                // Update columns p and q of m (right-multiplication by J).
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * c + miq * s.conj();
                    m[(i, q)] = miq * c - mip * s;
                }
                // Rows p and q (left-multiplication by J^H).
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = mpj * c + mqj * s;
                    m[(q, j)] = mqj * c - mpj * s.conj();
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * s.conj();
                    v[(i, q)] = viq * c - vip * s;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let eigs: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let vecs = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    (eigs, vecs)
}

/// Orthogonal projection onto the span of the given vectors (modified
/// Gram-Schmidt; vectors with residual norm below `tol` are dropped).
pub fn projection_onto_span(vectors: &[Vec<C64>], tol: f64) -> Mat {
    let dim = vectors.first().map(|v| v.len()).unwrap_or(0);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for v in vectors {
        assert_eq!(v.len(), dim);
        let mut w = v.clone();
        for b in &basis {
            let coeff = dot(&w, b);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= coeff * bi;
            }
        }
        let nrm = norm(&w);
        if nrm > tol {
            for wi in w.iter_mut() {
                *wi /= nrm;
            }
            basis.push(w);
        }
    }
    let mut p = Mat::zeros(dim, dim);
    for b in &basis {
        p = p.add(&Mat::outer(b, b));
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_mat(rng: &mut StdRng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn jacobi_recovers_diagonal() {
        let a = Mat::from_real_rows(vec![vec![3.0, 0.0], vec![0.0, -1.0]]);
        let (eigs, _) = hermitian_eigen(&a);
        assert!((eigs[0] + 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_reconstructs_random_hermitian() {
        let mut rng = StdRng::seed_from_u64(7);
        for n in [2usize, 3, 5, 8] {
            let b = random_mat(&mut rng, n, n);
            let a = b.add(&b.adjoint()).scale(C64::new(0.5, 0.0));
            let (eigs, v) = hermitian_eigen(&a);
            let lambda = Mat::from_fn(n, n, |i, j| {
                if i == j {
                    C64::new(eigs[i], 0.0)
                } else {
                    C_ZERO
                }
            });
            let recon = v.matmul(&lambda).matmul(&v.adjoint());
            assert!(recon.max_abs_diff(&a) < 1e-10, "n={n}");
            assert!(v.is_unitary(1e-10));
        }
    }

    #[test]
    fn operator_norm_of_scaled_unitary() {
        let u = Mat::from_real_rows(vec![vec![0.0, 2.0], vec![-2.0, 0.0]]);
        assert!((u.operator_norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kron_matches_blockwise_definition() {
        let mut rng = StdRng::seed_from_u64(11);
        let a = random_mat(&mut rng, 2, 2);
        let b = random_mat(&mut rng, 2, 2);
        let c = random_mat(&mut rng, 2, 2);
        let d = random_mat(&mut rng, 2, 2);
        // (A⊗B)(C⊗D) = AC ⊗ BD
        let lhs = a.kron(&b).matmul(&c.kron(&d));
        let rhs = a.matmul(&c).kron(&b.matmul(&d));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn span_projection_is_idempotent_and_contains_span() {
        let mut rng = StdRng::seed_from_u64(3);
        let vs: Vec<Vec<C64>> = (0..2)
            .map(|_| (0..4).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
            .collect();
        let p = projection_onto_span(&vs, 1e-12);
        assert!(p.is_projection(1e-10));
        for v in &vs {
            let pv = p.apply(v);
            let diff: f64 = pv.iter().zip(v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-10);
        }
    }
}
